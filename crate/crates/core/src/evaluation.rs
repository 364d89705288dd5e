//! Evaluation protocols: train/test splits, hyperedge-prediction AUC, recovery
//! similarity, assortative-vs-unrestricted comparison, K selection and
//! core-periphery profiles.

use std::collections::HashSet;

use ndarray::Array2;
use rand::seq::{index, SliceRandom};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypergraph::{log_kappa, Hypergraph};
use crate::inference::{infer, InferenceConfig};
use crate::model::{lambda_single, poisson_log_pmf_from_log_rate, ModelParams};
use crate::rng::{derive_seed, rng_from_seed, Rng};

/// Consecutive rejected negative draws after which [`auc_score`] gives up.
pub const MAX_NEGATIVE_ATTEMPTS: usize = 1000;

/// Largest K for which [`cosine_similarity_score`] aligns columns exactly.
pub const EXACT_ALIGNMENT_MAX_K: usize = 10;

/// Partition of the hyperedges of a hypergraph into train and test parts.
#[derive(Debug, Clone)]
pub struct EvaluationSplit {
    /// Training hyperedges, with the `N` and `D` of the full hypergraph.
    pub train: Hypergraph,
    pub test: Vec<(Vec<usize>, u64)>,
    pub ratio: f64,
    pub seed: u64,
}

impl EvaluationSplit {
    /// Whether `nodes` (sorted) is a hyperedge of the full hypergraph.
    fn observed_set(&self) -> HashSet<&[usize]> {
        self.test.iter().map(|(e, _)| e.as_slice()).collect()
    }
}

/// Uniformly random partition of the hyperedges with `round((1 − ratio)|E|)` test
/// hyperedges.
pub fn train_test_split(h: &Hypergraph, ratio: f64, seed: u64) -> Result<EvaluationSplit> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::Domain(format!("train ratio {ratio} outside (0, 1)")));
    }
    let m = h.num_edges();
    if m < 2 {
        return Err(Error::Domain(format!("need at least 2 hyperedges, got {m}")));
    }
    let num_test = ((1.0 - ratio) * m as f64).round() as usize;
    if num_test == 0 || num_test >= m {
        return Err(Error::RatioTooExtreme(format!(
            "ratio {ratio} on {m} hyperedges leaves {num_test} test hyperedges"
        )));
    }
    let mut order: Vec<usize> = (0..m).collect();
    order.shuffle(&mut rng_from_seed(seed));
    let (test_idx, train_idx) = order.split_at(num_test);
    let mut train_idx = train_idx.to_vec();
    train_idx.sort_unstable();
    let mut test_idx = test_idx.to_vec();
    test_idx.sort_unstable();
    Ok(EvaluationSplit {
        train: h.select(&train_idx)?,
        test: test_idx
            .iter()
            .map(|&e| (h.edge(e).to_vec(), h.weight(e)))
            .collect(),
        ratio,
        seed,
    })
}

/// Weight at which observed and negative hyperedges are compared.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum AucWeighting {
    /// Both sides evaluated at the observed hyperedge's weight.
    #[default]
    Observed,
    /// Both sides evaluated at weight 1.
    Unit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AucOptions {
    pub comparisons_per_edge: usize,
    pub weighting: AucWeighting,
}

impl Default for AucOptions {
    fn default() -> Self {
        Self {
            comparisons_per_edge: 10,
            weighting: AucWeighting::Observed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AucResult {
    pub auc: f64,
    pub std_err: f64,
    pub comparisons: usize,
    pub wins: usize,
    pub ties: usize,
}

/// AUC from `(observed, negative)` score pairs: 1 for a strictly higher observed
/// score, ½ for a tie, 0 otherwise.
pub fn auc_from_scores(pairs: &[(f64, f64)]) -> AucResult {
    let mut wins = 0;
    let mut ties = 0;
    for &(pos, neg) in pairs {
        if pos > neg {
            wins += 1;
        } else if pos == neg {
            ties += 1;
        }
    }
    let m = pairs.len();
    let auc = if m == 0 {
        0.5
    } else {
        (wins as f64 + 0.5 * ties as f64) / m as f64
    };
    let std_err = if m == 0 {
        0.0
    } else {
        (auc * (1.0 - auc) / m as f64).sqrt()
    };
    AucResult {
        auc,
        std_err,
        comparisons: m,
        wins,
        ties,
    }
}

/// Draws a uniformly random `size`-subset not present in the hypergraph.
fn draw_negative(
    num_nodes: usize,
    size: usize,
    train: &Hypergraph,
    test: &HashSet<&[usize]>,
    rng: &mut Rng,
) -> Result<Vec<usize>> {
    for _ in 0..MAX_NEGATIVE_ATTEMPTS {
        let mut nodes = index::sample(rng, num_nodes, size).into_vec();
        nodes.sort_unstable();
        if !train.contains(&nodes) && !test.contains(nodes.as_slice()) {
            return Ok(nodes);
        }
    }
    Err(Error::NegativeSamplingFailed {
        size,
        attempts: MAX_NEGATIVE_ATTEMPTS,
    })
}

/// Hyperedge-prediction AUC on the test part of `split`: every test hyperedge is
/// compared with `comparisons_per_edge` uniformly drawn unobserved hyperedges of
/// the same size by their Poisson log-probabilities.
pub fn auc_score(
    p: &ModelParams,
    split: &EvaluationSplit,
    rng: &mut Rng,
    options: &AucOptions,
) -> Result<AucResult> {
    let n = split.train.num_nodes();
    if p.num_nodes() != n {
        return Err(Error::ShapeMismatch {
            expected: format!("{n} nodes"),
            actual: format!("u with {} rows", p.num_nodes()),
        });
    }
    if options.comparisons_per_edge == 0 {
        return Err(Error::Domain("comparisons_per_edge must be positive".to_string()));
    }
    let observed = split.observed_set();
    let mut pairs = Vec::with_capacity(split.test.len() * options.comparisons_per_edge);
    for (e, weight) in &split.test {
        let a = match options.weighting {
            AucWeighting::Observed => *weight,
            AucWeighting::Unit => 1,
        };
        let lk = log_kappa(e.len(), n)?;
        let pos = poisson_log_pmf_from_log_rate(lambda_single(e, p)?, lk, a);
        for _ in 0..options.comparisons_per_edge {
            let neg_edge = draw_negative(n, e.len(), &split.train, &observed, rng)?;
            let neg = poisson_log_pmf_from_log_rate(lambda_single(&neg_edge, p)?, lk, a);
            pairs.push((pos, neg));
        }
    }
    Ok(auc_from_scores(&pairs))
}

fn row_norm(m: &Array2<f64>, i: usize) -> f64 {
    m.row(i).dot(&m.row(i)).sqrt()
}

/// Mean over nodes of the cosine similarity between rows of `u_true` and rows of
/// `u_inferred`, maximized over column permutations of `u_inferred`. Rows with
/// zero norm contribute 0. Alignment is exact up to
/// [`EXACT_ALIGNMENT_MAX_K`] communities and greedy beyond.
pub fn cosine_similarity_score(u_true: &Array2<f64>, u_inferred: &Array2<f64>) -> Result<f64> {
    if u_true.dim() != u_inferred.dim() {
        return Err(Error::ShapeMismatch {
            expected: format!("{}×{}", u_true.nrows(), u_true.ncols()),
            actual: format!("{}×{}", u_inferred.nrows(), u_inferred.ncols()),
        });
    }
    let (n, k) = u_true.dim();
    if n == 0 || k == 0 {
        return Err(Error::Domain("empty membership matrices".to_string()));
    }
    // gain[a][b]: contribution of mapping true column a to inferred column b
    let mut gain = vec![vec![0.0; k]; k];
    for i in 0..n {
        let norm = row_norm(u_true, i) * row_norm(u_inferred, i);
        if norm == 0.0 {
            continue;
        }
        for a in 0..k {
            let t = u_true[[i, a]];
            if t == 0.0 {
                continue;
            }
            for b in 0..k {
                gain[a][b] += t * u_inferred[[i, b]] / norm;
            }
        }
    }
    let total = if k <= EXACT_ALIGNMENT_MAX_K {
        best_assignment(&gain)
    } else {
        greedy_assignment(&gain)
    };
    Ok(total / n as f64)
}

/// Maximum-weight perfect matching by DP over subsets of inferred columns.
fn best_assignment(gain: &[Vec<f64>]) -> f64 {
    let k = gain.len();
    let mut best = vec![f64::NEG_INFINITY; 1 << k];
    best[0] = 0.0;
    for mask in 0usize..(1 << k) {
        if best[mask] == f64::NEG_INFINITY {
            continue;
        }
        let row = mask.count_ones() as usize;
        if row == k {
            continue;
        }
        for col in 0..k {
            if mask & (1 << col) == 0 {
                let next = mask | (1 << col);
                let value = best[mask] + gain[row][col];
                if value > best[next] {
                    best[next] = value;
                }
            }
        }
    }
    best[(1 << k) - 1]
}

fn greedy_assignment(gain: &[Vec<f64>]) -> f64 {
    let k = gain.len();
    let mut cells: Vec<(f64, usize, usize)> = (0..k)
        .flat_map(|a| (0..k).map(move |b| (gain[a][b], a, b)))
        .collect();
    cells.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    let mut used_rows = vec![false; k];
    let mut used_cols = vec![false; k];
    let mut total = 0.0;
    for (g, a, b) in cells {
        if !used_rows[a] && !used_cols[b] {
            used_rows[a] = true;
            used_cols[b] = true;
            total += g;
        }
    }
    total
}

/// Best log-posteriors `(L_a, L_d)` of the diagonal-`w` and unrestricted models
/// fitted with otherwise identical configuration.
pub fn compare_assortative(h: &Hypergraph, cfg: &InferenceConfig) -> Result<(f64, f64)> {
    let assortative = infer(
        h,
        &InferenceConfig {
            assortative: true,
            ..cfg.clone()
        },
    )?;
    let unrestricted = infer(
        h,
        &InferenceConfig {
            assortative: false,
            ..cfg.clone()
        },
    )?;
    Ok((assortative.best_objective, unrestricted.best_objective))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KScore {
    pub k: usize,
    pub auc: f64,
    pub std_err: f64,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KSelection {
    pub best_k: usize,
    pub table: Vec<KScore>,
}

/// Picks K by test AUC: one train/test split from `seed`, a fit on the training
/// part for every K in `k_grid`, and AUC against the same negative-sampling
/// stream for each K. Ties go to the smallest K.
pub fn select_k(
    h: &Hypergraph,
    k_grid: &[usize],
    cfg_template: &InferenceConfig,
    ratio: f64,
    seed: u64,
    auc_options: &AucOptions,
) -> Result<KSelection> {
    if k_grid.is_empty() {
        return Err(Error::Domain("empty K grid".to_string()));
    }
    let split = train_test_split(h, ratio, seed)?;
    let auc_seed = derive_seed(seed, 1);
    let mut table = Vec::with_capacity(k_grid.len());
    for &k in k_grid {
        let cfg = InferenceConfig {
            num_communities: k,
            ..cfg_template.clone()
        };
        let report = infer(&split.train, &cfg)?;
        let mut rng = rng_from_seed(auc_seed);
        let auc = auc_score(&report.best_params, &split, &mut rng, auc_options)?;
        table.push(KScore {
            k,
            auc: auc.auc,
            std_err: auc.std_err,
            objective: report.best_objective,
        });
    }
    let best = table
        .iter()
        .fold(None::<&KScore>, |best, row| match best {
            Some(b) if b.auc > row.auc || (b.auc == row.auc && b.k <= row.k) => Some(b),
            _ => Some(row),
        })
        .expect("non-empty grid");
    Ok(KSelection {
        best_k: best.k,
        table,
    })
}

fn node_mask(h: &Hypergraph, nodes: &[usize]) -> Result<Vec<bool>> {
    let mut mask = vec![false; h.num_nodes()];
    for &i in nodes {
        if i >= h.num_nodes() {
            return Err(Error::Domain(format!(
                "node {i} out of range for {} nodes",
                h.num_nodes()
            )));
        }
        mask[i] = true;
    }
    Ok(mask)
}

/// Core-periphery profile: hyperedges entirely inside `nodes` over hyperedges
/// touching `nodes` (unweighted counts; 0 when nothing touches the set).
pub fn cp_profile(h: &Hypergraph, nodes: &[usize]) -> Result<f64> {
    let mask = node_mask(h, nodes)?;
    let mut inside = 0usize;
    let mut touching = 0usize;
    for (e, _) in h.iter() {
        let count = e.iter().filter(|&&i| mask[i]).count();
        if count > 0 {
            touching += 1;
            if count == e.len() {
                inside += 1;
            }
        }
    }
    Ok(if touching == 0 {
        0.0
    } else {
        inside as f64 / touching as f64
    })
}

/// `γ(S_k)` for `k = 1..=k_max`, where `S_k` holds the `k` nodes with the smallest
/// scores (ties broken by node index). `k_max` is clamped to `N`.
pub fn cp_profile_curve(h: &Hypergraph, scores: &[f64], k_max: usize) -> Result<Vec<(usize, f64)>> {
    let n = h.num_nodes();
    if scores.len() != n {
        return Err(Error::ShapeMismatch {
            expected: format!("{n} scores"),
            actual: format!("{}", scores.len()),
        });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]).then(a.cmp(&b)));
    let incidence = h.incidence();
    let mut hits = vec![0usize; h.num_edges()];
    let mut inside = 0usize;
    let mut touching = 0usize;
    let mut curve = Vec::with_capacity(k_max.min(n));
    for (pos, &i) in order.iter().take(k_max.min(n)).enumerate() {
        for &e in incidence.row(i) {
            hits[e] += 1;
            if hits[e] == 1 {
                touching += 1;
            }
            if hits[e] == h.edge(e).len() {
                inside += 1;
            }
        }
        let gamma = if touching == 0 {
            0.0
        } else {
            inside as f64 / touching as f64
        };
        curve.push((pos + 1, gamma));
    }
    Ok(curve)
}
