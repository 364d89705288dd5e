//! Exact sampling from the generative model and planted-partition benchmarks.
//!
//! [`sample_exact`] enumerates every candidate hyperedge of size `2..=D` and draws
//! its weight independently, so it is limited to small node counts
//! ([`MAX_CANDIDATES`]).

use ndarray::Array2;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypergraph::{ln_binom, log_kappa, Hypergraph};
use crate::model::{expected_degree_size_k, pair_sum_with, projections, ModelParams};
use crate::rng::{rng_from_seed, Rng};

/// Upper bound on `Σ_{n=2}^{D} binom(N, n)` accepted by [`sample_exact`].
pub const MAX_CANDIDATES: f64 = 1e7;

/// Number of candidate hyperedges with sizes in `2..=max_size`.
pub fn candidate_count(num_nodes: usize, max_size: usize) -> f64 {
    (2..=max_size.min(num_nodes))
        .map(|n| ln_binom(num_nodes as u64, n as u64).exp())
        .sum()
}

/// Visits every `size`-subset of `0..num_nodes` in lexicographic order.
pub(crate) fn for_each_subset(num_nodes: usize, size: usize, mut visit: impl FnMut(&[usize])) {
    if size == 0 || size > num_nodes {
        return;
    }
    let mut idx: Vec<usize> = (0..size).collect();
    loop {
        visit(&idx);
        let mut pos = size;
        while pos > 0 && idx[pos - 1] == num_nodes - size + pos - 1 {
            pos -= 1;
        }
        if pos == 0 {
            return;
        }
        idx[pos - 1] += 1;
        for j in pos..size {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Draws `A_e ~ Pois(λ_e / κ_|e|)` for every candidate hyperedge with
/// `2 ≤ |e| ≤ max_size` and returns the hypergraph of non-zero draws, with
/// `D = max_size`.
pub fn sample_exact(p: &ModelParams, max_size: usize, rng: &mut Rng) -> Result<Hypergraph> {
    let n = p.num_nodes();
    if max_size < 2 || max_size > n {
        return Err(Error::Domain(format!(
            "maximum size {max_size} outside [2, {n}]"
        )));
    }
    let count = candidate_count(n, max_size);
    if count > MAX_CANDIDATES {
        return Err(Error::CandidateSpaceTooLarge {
            count,
            limit: MAX_CANDIDATES,
        });
    }
    let k = p.num_communities();
    let u = p.u().as_slice().unwrap();
    let w = p.w().as_slice().unwrap();
    let v = projections(u, w, k);

    let mut edges = Vec::new();
    let mut scratch = vec![0.0; k];
    for size in 2..=max_size {
        let kappa = log_kappa(size, n)?.exp();
        for_each_subset(n, size, |e| {
            let lambda = pair_sum_with(e, u, &v, k, &mut scratch);
            let mean = lambda / kappa;
            if mean > 0.0 && mean.is_finite() {
                let draw = Poisson::new(mean).expect("positive finite mean").sample(rng);
                if draw >= 1.0 {
                    edges.push((e.to_vec(), draw as u64));
                }
            }
        });
    }
    Hypergraph::from_edges(Some(n), edges)?.with_max_size(max_size)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum MembershipMode {
    /// One-hot rows, communities as contiguous blocks of equal size.
    Hard,
    /// Node in block `k` gets `primary` on community `k` and `1 − primary` on
    /// `k + 1 (mod K)`.
    Mixed { primary: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedSpec {
    pub num_nodes: usize,
    pub num_communities: usize,
    pub membership: MembershipMode,
    pub c_in: f64,
    pub c_out: f64,
    pub max_size: usize,
    pub seed: u64,
}

impl PlantedSpec {
    pub fn validate(&self) -> Result<()> {
        if self.num_communities == 0 || self.num_nodes < self.num_communities {
            return Err(Error::Domain(format!(
                "need 1 ≤ K ≤ N, got K={} N={}",
                self.num_communities, self.num_nodes
            )));
        }
        if !(self.c_in > 0.0 && self.c_in.is_finite()) {
            return Err(Error::Domain(format!("c_in must be positive, got {}", self.c_in)));
        }
        if !(self.c_out >= 0.0 && self.c_out.is_finite()) {
            return Err(Error::Domain(format!(
                "c_out must be non-negative, got {}",
                self.c_out
            )));
        }
        if let MembershipMode::Mixed { primary } = self.membership {
            if !(0.0..=1.0).contains(&primary) {
                return Err(Error::Domain(format!("mixing weight {primary} outside [0, 1]")));
            }
        }
        Ok(())
    }
}

/// Block of node `i` when `n` nodes are split into `k` contiguous, near-equal blocks.
pub fn block_of(i: usize, n: usize, k: usize) -> usize {
    i * k / n
}

/// Ground-truth `u` and `w = c_out·11ᵀ + (c_in − c_out)·I`.
pub fn build_planted_params(spec: &PlantedSpec) -> Result<ModelParams> {
    spec.validate()?;
    let (n, k) = (spec.num_nodes, spec.num_communities);
    let mut u = Array2::zeros((n, k));
    for i in 0..n {
        let b = block_of(i, n, k);
        match spec.membership {
            MembershipMode::Hard => u[[i, b]] = 1.0,
            MembershipMode::Mixed { primary } => {
                u[[i, b]] += primary;
                u[[i, (b + 1) % k]] += 1.0 - primary;
            }
        }
    }
    let w = Array2::from_shape_fn((k, k), |(a, b)| if a == b { spec.c_in } else { spec.c_out });
    ModelParams::new(u, w)
}

/// `c_in` giving an expected mean weighted degree of `target` for the planted
/// memberships, `c_out/c_in` ratio and maximum size.
pub fn calibrate_c_in(spec: &PlantedSpec, ratio: f64, target: f64) -> Result<f64> {
    let unit = PlantedSpec {
        c_in: 1.0,
        c_out: ratio,
        ..spec.clone()
    };
    let p = build_planted_params(&unit)?;
    let mut per_unit = 0.0;
    for size in 2..=spec.max_size {
        per_unit += expected_degree_size_k(size, &p)?;
    }
    if !(per_unit > 0.0) {
        return Err(Error::Domain("memberships produce no interactions".to_string()));
    }
    Ok(target / per_unit)
}

/// A sampled benchmark with its generating parameters.
#[derive(Debug, Clone)]
pub struct Benchmark {
    pub hypergraph: Hypergraph,
    pub truth: ModelParams,
}

pub fn generate_benchmark(spec: &PlantedSpec) -> Result<Benchmark> {
    let truth = build_planted_params(spec)?;
    let mut rng = rng_from_seed(spec.seed);
    let hypergraph = sample_exact(&truth, spec.max_size, &mut rng)?;
    Ok(Benchmark { hypergraph, truth })
}

/// `{"u": …}` ground-truth file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthFile {
    pub u: Vec<Vec<f64>>,
}

impl GroundTruthFile {
    pub fn from_u(u: &Array2<f64>) -> Self {
        Self {
            u: u.outer_iter().map(|r| r.to_vec()).collect(),
        }
    }

    pub fn to_array(&self) -> Result<Array2<f64>> {
        let ncols = self.u.first().map_or(0, Vec::len);
        crate::model::nested_to_array(&self.u, self.u.len(), ncols, "u")
    }
}
