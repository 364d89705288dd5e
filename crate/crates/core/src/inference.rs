//! EM / MAP inference with multiplicative updates and random restarts.
//!
//! One iteration updates `u` and then `w`, recomputing `λ_e` before each. Every
//! quantity is accumulated through the incidence structure, so an iteration costs
//! `O(nnz(B)·K² + N·K²)`.

use ndarray::Array2;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypergraph::{constant_c, Hypergraph};
use crate::model::{
    add_to, lambdas_from_projections, log_posterior, projections, ModelParams, PriorRates,
    LAMBDA_FLOOR,
};
use crate::rng::{derive_seed, rng_from_seed, Rng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferenceConfig {
    pub num_communities: usize,
    pub num_restarts: usize,
    pub max_iter: usize,
    /// Relative objective change `|Δ|/(1+|L|)` below which a check counts as stalled.
    pub tol: f64,
    pub check_every: usize,
    pub priors: PriorRates,
    /// Restrict `w` to be diagonal.
    pub assortative: bool,
    pub seed: u64,
    /// Upper bound of the uniform initialization of `u` and `w`.
    pub init_scale: f64,
}

impl Default for InferenceConfig {
    fn default() -> Self {
        Self {
            num_communities: 2,
            num_restarts: 10,
            max_iter: 2000,
            tol: 1e-6,
            check_every: 10,
            priors: PriorRates::default(),
            assortative: false,
            seed: 0,
            init_scale: 1.0,
        }
    }
}

impl InferenceConfig {
    pub fn with_communities(num_communities: usize) -> Self {
        Self {
            num_communities,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Domain(msg.to_string()));
        if self.num_communities == 0 {
            return bad("K must be at least 1");
        }
        if self.num_restarts == 0 {
            return bad("at least one restart is required");
        }
        if self.max_iter == 0 {
            return bad("max_iter must be at least 1");
        }
        if self.check_every == 0 {
            return bad("check_every must be at least 1");
        }
        if !(self.tol > 0.0) {
            return bad("tol must be positive");
        }
        if !(self.init_scale > 0.0 && self.init_scale.is_finite()) {
            return bad("init_scale must be positive");
        }
        PriorRates::new(self.priors.rate_u, self.priors.rate_w)?;
        Ok(())
    }
}

/// Random initialization: `u` and the upper triangle of `w` i.i.d. uniform on
/// `[0, init_scale)`, `w` mirrored; off-diagonal `w` is exactly zero when
/// `assortative`.
pub fn init_params(
    num_nodes: usize,
    num_communities: usize,
    assortative: bool,
    init_scale: f64,
    rng: &mut Rng,
) -> ModelParams {
    let k = num_communities;
    let u = Array2::from_shape_simple_fn((num_nodes, k), || rng.random::<f64>() * init_scale);
    let mut w = Array2::zeros((k, k));
    for a in 0..k {
        for b in a..k {
            if assortative && a != b {
                continue;
            }
            let x = rng.random::<f64>() * init_scale;
            w[[a, b]] = x;
            w[[b, a]] = x;
        }
    }
    ModelParams::from_parts(u, w)
}

/// Quantities shared by both updates.
struct EdgeState {
    /// `v_i = w u_i`, row per node.
    projections: Vec<f64>,
    /// `n_e = A_e / max(λ_e, floor)`
    ratios: Vec<f64>,
}

impl EdgeState {
    fn compute(h: &Hypergraph, p: &ModelParams) -> Self {
        let k = p.num_communities();
        let u = p.u().as_slice().unwrap();
        let projections = projections(u, p.w().as_slice().unwrap(), k);
        let ratios = lambdas_from_projections(h, u, &projections, k)
            .into_iter()
            .zip(h.weights())
            .map(|(lambda, &a)| a as f64 / lambda.max(LAMBDA_FLOOR))
            .collect();
        Self { projections, ratios }
    }
}

/// Adds `scale · Σ_{j≠i} x_j` to `out[i]` for every position `i` of `nodes`,
/// with the leave-one-out sums formed from both sides instead of by subtraction.
fn add_leave_one_out(nodes: &[usize], x: &[f64], k: usize, scale: f64, out: &mut [f64], running: &mut [f64]) {
    running.fill(0.0);
    for &i in nodes {
        for (o, r) in out[i * k..(i + 1) * k].iter_mut().zip(running.iter()) {
            *o += scale * r;
        }
        add_to(running, &x[i * k..(i + 1) * k]);
    }
    running.fill(0.0);
    for &i in nodes.iter().rev() {
        for (o, r) in out[i * k..(i + 1) * k].iter_mut().zip(running.iter()) {
            *o += scale * r;
        }
        add_to(running, &x[i * k..(i + 1) * k]);
    }
}

/// Adds `scale · Σ_{a<b} x_{nodes[a]} x_{nodes[b]}ᵀ` to the K×K buffer `out`.
fn add_ordered_pairs(nodes: &[usize], x: &[f64], k: usize, scale: f64, out: &mut [f64], later: &mut [f64]) {
    later.fill(0.0);
    for &i in nodes.iter().rev() {
        let row = &x[i * k..(i + 1) * k];
        for (a, &xa) in row.iter().enumerate() {
            let f = scale * xa;
            if f != 0.0 {
                for (o, l) in out[a * k..(a + 1) * k].iter_mut().zip(later.iter()) {
                    *o += f * l;
                }
            }
        }
        add_to(later, row);
    }
}

fn check_shapes(h: &Hypergraph, p: &ModelParams) -> Result<()> {
    if h.num_nodes() != p.num_nodes() {
        return Err(Error::ShapeMismatch {
            expected: format!("{} nodes", h.num_nodes()),
            actual: format!("u with {} rows", p.num_nodes()),
        });
    }
    Ok(())
}

fn multiplicative(current: f64, numerator: f64, denominator: f64, what: &str) -> Result<f64> {
    if current == 0.0 || numerator == 0.0 {
        return Ok(0.0);
    }
    if !(denominator > 0.0) {
        return Err(Error::Numerical(format!(
            "{what}: zero denominator with numerator {numerator}"
        )));
    }
    Ok(current * numerator / denominator)
}

/// One multiplicative update of the memberships:
///
/// `u′_ik = u_ik [Σ_{e∋i} n_e Σ_{j∈e∖i} (w u_j)_k] / [C Σ_{j≠i} (w u_j)_k + rate_u]`.
pub fn update_u(
    h: &Hypergraph,
    p: &ModelParams,
    c: f64,
    priors: &PriorRates,
) -> Result<Array2<f64>> {
    check_shapes(h, p)?;
    let state = EdgeState::compute(h, p);
    update_u_with(h, p, c, priors, &state)
}

fn update_u_with(
    h: &Hypergraph,
    p: &ModelParams,
    c: f64,
    priors: &PriorRates,
    state: &EdgeState,
) -> Result<Array2<f64>> {
    let n = p.num_nodes();
    let k = p.num_communities();
    let u = p.u().as_slice().unwrap();
    let v = &state.projections;
    let mut running = vec![0.0; k];

    let mut numer = vec![0.0; n * k];
    for (e, &ratio) in state.ratios.iter().enumerate() {
        add_leave_one_out(h.edge(e), v, k, ratio, &mut numer, &mut running);
    }
    let mut others = vec![0.0; n * k];
    let all: Vec<usize> = (0..n).collect();
    add_leave_one_out(&all, v, k, 1.0, &mut others, &mut running);

    let mut out = vec![0.0; n * k];
    for idx in 0..n * k {
        let denom = c * others[idx] + priors.rate_u;
        out[idx] = multiplicative(u[idx], numer[idx], denom, "u update")?;
    }
    Ok(Array2::from_shape_vec((n, k), out).expect("shape"))
}

/// One multiplicative update of the affinity:
///
/// `w′_kq = w_kq [½ Σ_e n_e Σ_{i≠j∈e} u_ik u_jq] / [C ½ Σ_{i≠j} u_ik u_jq + rate_w]`.
///
/// The result is exactly symmetric and keeps every zero of `w`.
pub fn update_w(
    h: &Hypergraph,
    p: &ModelParams,
    c: f64,
    priors: &PriorRates,
) -> Result<Array2<f64>> {
    check_shapes(h, p)?;
    let state = EdgeState::compute(h, p);
    update_w_with(h, p, c, priors, &state)
}

fn update_w_with(
    h: &Hypergraph,
    p: &ModelParams,
    c: f64,
    priors: &PriorRates,
    state: &EdgeState,
) -> Result<Array2<f64>> {
    let k = p.num_communities();
    let u = p.u().as_slice().unwrap();
    let w = p.w().as_slice().unwrap();
    let mut later = vec![0.0; k];

    let mut edge_pairs = vec![0.0; k * k];
    for (e, &ratio) in state.ratios.iter().enumerate() {
        add_ordered_pairs(h.edge(e), u, k, ratio, &mut edge_pairs, &mut later);
    }
    let mut all_pairs = vec![0.0; k * k];
    let all: Vec<usize> = (0..p.num_nodes()).collect();
    add_ordered_pairs(&all, u, k, 1.0, &mut all_pairs, &mut later);

    let mut out = Array2::zeros((k, k));
    for a in 0..k {
        for b in a..k {
            let (ab, ba) = (a * k + b, b * k + a);
            let numer = 0.5 * (edge_pairs[ab] + edge_pairs[ba]);
            let pairs = 0.5 * (all_pairs[ab] + all_pairs[ba]);
            let denom = c * pairs + priors.rate_w;
            let x = multiplicative(w[ab], numer, denom, "w update")?;
            out[[a, b]] = x;
            out[[b, a]] = x;
        }
    }
    Ok(out)
}

/// One full EM iteration (u then w) with `C` precomputed.
pub fn em_step(
    h: &Hypergraph,
    p: &ModelParams,
    c: f64,
    priors: &PriorRates,
) -> Result<ModelParams> {
    check_shapes(h, p)?;
    let state = EdgeState::compute(h, p);
    let u = update_u_with(h, p, c, priors, &state)?;
    let mid = ModelParams::from_parts(u, p.w().clone());
    let state = EdgeState::compute(h, &mid);
    let w = update_w_with(h, &mid, c, priors, &state)?;
    let (u, _) = mid.into_parts();
    Ok(ModelParams::from_parts(u, w))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub iteration: usize,
    pub objective: f64,
}

/// Result of a single EM run from one random initialization.
#[derive(Debug, Clone, PartialEq)]
pub struct EmOutcome {
    pub seed: u64,
    pub params: ModelParams,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    /// All memberships collapsed to zero.
    pub degenerate: bool,
    pub trace: Vec<TracePoint>,
}

/// Runs EM from the initialization drawn with `seed` until the relative change of
/// the log-posterior stays below `tol` for two consecutive checks, or `max_iter`.
pub fn em_run(h: &Hypergraph, cfg: &InferenceConfig, seed: u64) -> Result<EmOutcome> {
    cfg.validate()?;
    let mut rng = rng_from_seed(seed);
    let init = init_params(
        h.num_nodes(),
        cfg.num_communities,
        cfg.assortative,
        cfg.init_scale,
        &mut rng,
    );
    em_run_from(h, cfg, init, seed)
}

/// As [`em_run`], starting from given parameters.
pub fn em_run_from(
    h: &Hypergraph,
    cfg: &InferenceConfig,
    init: ModelParams,
    seed: u64,
) -> Result<EmOutcome> {
    check_shapes(h, &init)?;
    let c = constant_c(h.num_nodes(), h.max_size())?;
    let mut params = init;
    let mut prev = log_posterior(h, &params, &cfg.priors)?;
    let mut trace = vec![TracePoint {
        iteration: 0,
        objective: prev,
    }];
    let mut stalled_checks = 0;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < cfg.max_iter {
        params = em_step(h, &params, c, &cfg.priors)?;
        iterations += 1;
        if !params.is_finite() {
            return Err(Error::Numerical(format!(
                "non-finite parameters at iteration {iterations} (seed {seed})"
            )));
        }
        if iterations % cfg.check_every != 0 && iterations != cfg.max_iter {
            continue;
        }
        let objective = log_posterior(h, &params, &cfg.priors)?;
        if objective.is_nan() {
            return Err(Error::Numerical(format!(
                "objective is NaN at iteration {iterations} (seed {seed})"
            )));
        }
        trace.push(TracePoint {
            iteration: iterations,
            objective,
        });
        let change = (objective - prev).abs() / (1.0 + objective.abs());
        if objective == prev || change < cfg.tol {
            stalled_checks += 1;
        } else {
            stalled_checks = 0;
        }
        prev = objective;
        if stalled_checks >= 2 {
            converged = true;
            break;
        }
    }

    let degenerate = params.u().iter().all(|&x| x == 0.0);
    Ok(EmOutcome {
        seed,
        objective: prev,
        params,
        iterations,
        converged,
        degenerate,
        trace,
    })
}

/// Per-restart row of an [`InferenceReport`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestartSummary {
    pub restart: usize,
    pub seed: u64,
    /// Final log-posterior; `None` for failed restarts (and for `-inf`).
    pub objective: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub degenerate: bool,
    pub trace: Vec<TracePoint>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InferenceReport {
    pub best_params: ModelParams,
    pub best_objective: f64,
    pub best_restart: usize,
    pub best_seed: u64,
    pub per_restart: Vec<RestartSummary>,
}

/// Serializable view of an [`InferenceReport`] without the parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub best_objective: Option<f64>,
    pub best_restart: usize,
    pub best_seed: u64,
    pub per_restart: Vec<RestartSummary>,
}

impl InferenceReport {
    pub fn to_json(&self) -> ReportFile {
        ReportFile {
            best_objective: Some(self.best_objective).filter(|x| x.is_finite()),
            best_restart: self.best_restart,
            best_seed: self.best_seed,
            per_restart: self.per_restart.clone(),
        }
    }
}

/// Seed of restart `index` derived from the configuration seed.
pub fn restart_seed(seed: u64, index: usize) -> u64 {
    derive_seed(seed, index as u64)
}

/// Runs `num_restarts` independent EM runs and keeps the one with the highest
/// final log-posterior (earliest restart on ties). Restarts execute on the
/// current rayon pool; the result does not depend on the number of threads.
pub fn infer(h: &Hypergraph, cfg: &InferenceConfig) -> Result<InferenceReport> {
    cfg.validate()?;
    let runs: Vec<(u64, Result<EmOutcome>)> = (0..cfg.num_restarts)
        .into_par_iter()
        .map(|t| {
            let seed = restart_seed(cfg.seed, t);
            (seed, em_run(h, cfg, seed))
        })
        .collect();

    let mut per_restart = Vec::with_capacity(runs.len());
    let mut best: Option<(usize, EmOutcome)> = None;
    let mut failures = Vec::new();
    for (t, (seed, run)) in runs.into_iter().enumerate() {
        match run {
            Ok(outcome) => {
                per_restart.push(RestartSummary {
                    restart: t,
                    seed,
                    objective: Some(outcome.objective).filter(|x| x.is_finite()),
                    iterations: outcome.iterations,
                    converged: outcome.converged,
                    degenerate: outcome.degenerate,
                    trace: outcome.trace.clone(),
                    error: None,
                });
                let better = match &best {
                    None => true,
                    Some((_, b)) => outcome.objective > b.objective,
                };
                if better {
                    best = Some((t, outcome));
                }
            }
            Err(err) => {
                failures.push(format!("restart {t} (seed {seed}): {err}"));
                per_restart.push(RestartSummary {
                    restart: t,
                    seed,
                    objective: None,
                    iterations: 0,
                    converged: false,
                    degenerate: false,
                    trace: Vec::new(),
                    error: Some(err.to_string()),
                });
            }
        }
    }
    let (best_restart, outcome) = best.ok_or(Error::AllRestartsFailed(failures))?;
    Ok(InferenceReport {
        best_objective: outcome.objective,
        best_seed: outcome.seed,
        best_params: outcome.params,
        best_restart,
        per_restart,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use ndarray::array;

    fn tiny() -> (Hypergraph, ModelParams) {
        let h = Hypergraph::from_edges(None, vec![(vec![0, 1, 2], 1)]).unwrap();
        let p = ModelParams::new(Array2::ones((3, 1)), array![[1.0]]).unwrap();
        (h, p)
    }

    #[test]
    fn tiny_u_update() {
        let (h, p) = tiny();
        let c = constant_c(3, 3).unwrap();
        let u = update_u(&h, &p, c, &PriorRates::NONE).unwrap();
        for x in u.iter() {
            assert_relative_eq!(*x, 0.25, max_relative = 1e-14);
        }
    }

    #[test]
    fn tiny_w_update() {
        let (h, p) = tiny();
        let c = constant_c(3, 3).unwrap();
        let w = update_w(&h, &p, c, &PriorRates::NONE).unwrap();
        assert_relative_eq!(w[[0, 0]], 0.25, max_relative = 1e-14);
        let w = update_w(&h, &p, c, &PriorRates::new(0.0, 1.0).unwrap()).unwrap();
        assert_relative_eq!(w[[0, 0]], 0.2, max_relative = 1e-14);
    }

    #[test]
    fn empty_and_isolated_nodes_get_zero_rows() {
        let empty = Hypergraph::from_edges(Some(4), Vec::new()).unwrap();
        let p = ModelParams::new(Array2::ones((4, 2)), array![[1.0, 0.2], [0.2, 1.0]]).unwrap();
        let u = update_u(&empty, &p, 1.0, &PriorRates::default()).unwrap();
        assert!(u.iter().all(|&x| x == 0.0));

        let h = Hypergraph::from_edges(Some(4), vec![(vec![0, 1, 2], 1)]).unwrap();
        let u = update_u(&h, &p, 4.0 / 3.0, &PriorRates::default()).unwrap();
        assert!(u.row(3).iter().all(|&x| x == 0.0));
        assert!(u.row(0).iter().all(|&x| x > 0.0));
    }

    #[test]
    fn diagonal_w_stays_diagonal() {
        let h = Hypergraph::from_edges(None, vec![(vec![0, 1, 2], 2), (vec![1, 3], 1)]).unwrap();
        let p = ModelParams::new(
            array![[0.3, 0.9], [0.5, 0.1], [0.7, 0.7], [0.2, 0.4]],
            array![[0.8, 0.0], [0.0, 0.6]],
        )
        .unwrap();
        let w = update_w(&h, &p, 4.0 / 3.0, &PriorRates::default()).unwrap();
        assert_eq!(w[[0, 1]], 0.0);
        assert_eq!(w[[1, 0]], 0.0);
        assert!(w[[0, 0]] > 0.0 && w[[1, 1]] > 0.0);
    }

    #[test]
    fn init_examples() {
        let mut rng = rng_from_seed(3);
        let p = init_params(10, 4, true, 1.0, &mut rng);
        for a in 0..4 {
            for b in 0..4 {
                if a != b {
                    assert_eq!(p.w()[[a, b]], 0.0);
                } else {
                    assert!(p.w()[[a, b]] > 0.0);
                }
            }
        }
        let a = init_params(5, 3, false, 2.0, &mut rng_from_seed(11));
        let b = init_params(5, 3, false, 2.0, &mut rng_from_seed(11));
        assert_eq!(a, b);
        assert!(a.u().iter().all(|&x| (0.0..2.0).contains(&x)));
        let one = init_params(5, 1, false, 1.0, &mut rng_from_seed(1));
        assert_eq!(one.w().dim(), (1, 1));
        assert!(one.w()[[0, 0]] > 0.0);
    }

    #[test]
    fn one_iteration_matches_hand_values() {
        let (h, p) = tiny();
        let cfg = InferenceConfig {
            num_communities: 1,
            max_iter: 1,
            priors: PriorRates::NONE,
            ..InferenceConfig::default()
        };
        let out = em_run_from(&h, &cfg, p, 0).unwrap();
        assert_eq!(out.iterations, 1);
        for x in out.params.u().iter() {
            assert_relative_eq!(*x, 0.25, max_relative = 1e-14);
        }
        // w update sees u = 1/4: numerator 1 (λ-ratio cancels), denominator C·3/16
        assert_relative_eq!(out.params.w()[[0, 0]], 4.0, max_relative = 1e-12);
    }

    #[test]
    fn empty_hypergraph_converges_to_zero() {
        let empty = Hypergraph::from_edges(Some(5), Vec::new()).unwrap();
        let cfg = InferenceConfig {
            num_communities: 2,
            priors: PriorRates::new(1.0, 1.0).unwrap(),
            num_restarts: 2,
            ..InferenceConfig::default()
        };
        let out = em_run(&empty, &cfg, 5).unwrap();
        assert!(out.converged);
        assert!(out.degenerate);
        assert!(out.params.u().iter().all(|&x| x == 0.0));
        let report = infer(&empty, &cfg).unwrap();
        assert!(report.per_restart.iter().all(|r| r.degenerate));
    }

    #[test]
    fn single_restart_equals_em_run() {
        let h = Hypergraph::from_edges(None, vec![(vec![0, 1, 2], 1), (vec![2, 3], 2), (vec![0, 3], 1)])
            .unwrap();
        let cfg = InferenceConfig {
            num_restarts: 1,
            seed: 42,
            ..InferenceConfig::default()
        };
        let report = infer(&h, &cfg).unwrap();
        let direct = em_run(&h, &cfg, restart_seed(42, 0)).unwrap();
        assert_eq!(report.best_params, direct.params);
        assert_eq!(report.best_objective, direct.objective);
    }

    #[test]
    fn config_validation() {
        let mut cfg = InferenceConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.tol = 0.0;
        assert!(cfg.validate().is_err());
        let cfg = InferenceConfig {
            num_restarts: 0,
            ..InferenceConfig::default()
        };
        assert!(cfg.validate().is_err());
    }
}
