//! Model mathematics: Poisson rates, likelihood and posterior, per-hyperedge
//! probabilities and expected degrees.
//!
//! Sums over node pairs are accumulated as `Σ_i (w u_i)ᵀ Σ_{j>i} u_j`, linear in
//! the number of nodes and free of cancellation since every term is non-negative.
//! Only the reference [`lambda_naive`] loops over pairs.

use std::path::Path;

use ndarray::{Array2, ArrayView1};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::hypergraph::{log_kappa, Hypergraph, ModelConstants};

/// Lower bound applied to `λ_e` wherever it is divided by or logged during updates.
pub const LAMBDA_FLOOR: f64 = 1e-12;

/// Memberships `u` (N×K) and symmetric affinity `w` (K×K), all entries non-negative.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    u: Array2<f64>,
    w: Array2<f64>,
}

impl ModelParams {
    pub fn new(u: Array2<f64>, w: Array2<f64>) -> Result<Self> {
        let k = u.ncols();
        if k == 0 || u.nrows() == 0 {
            return Err(Error::InvalidParams("u must be at least 1×1".to_string()));
        }
        if w.dim() != (k, k) {
            return Err(Error::ShapeMismatch {
                expected: format!("w of shape {k}×{k}"),
                actual: format!("{}×{}", w.nrows(), w.ncols()),
            });
        }
        if u.iter().chain(w.iter()).any(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::InvalidParams(
                "entries must be finite and non-negative".to_string(),
            ));
        }
        for a in 0..k {
            for b in a + 1..k {
                if w[[a, b]] != w[[b, a]] {
                    return Err(Error::InvalidParams(format!(
                        "w is not symmetric at ({a}, {b})"
                    )));
                }
            }
        }
        Ok(Self::from_parts(u, w))
    }

    /// Skips validation; callers guarantee the invariants.
    pub(crate) fn from_parts(u: Array2<f64>, w: Array2<f64>) -> Self {
        Self {
            u: u.as_standard_layout().into_owned(),
            w: w.as_standard_layout().into_owned(),
        }
    }

    pub fn u(&self) -> &Array2<f64> {
        &self.u
    }

    pub fn w(&self) -> &Array2<f64> {
        &self.w
    }

    pub fn into_parts(self) -> (Array2<f64>, Array2<f64>) {
        (self.u, self.w)
    }

    pub fn num_nodes(&self) -> usize {
        self.u.nrows()
    }

    pub fn num_communities(&self) -> usize {
        self.u.ncols()
    }

    pub fn is_finite(&self) -> bool {
        self.u.iter().chain(self.w.iter()).all(|x| x.is_finite())
    }

    fn check_nodes(&self, h: &Hypergraph) -> Result<()> {
        if h.num_nodes() != self.num_nodes() {
            return Err(Error::ShapeMismatch {
                expected: format!("{} nodes", h.num_nodes()),
                actual: format!("u with {} rows", self.num_nodes()),
            });
        }
        Ok(())
    }

    pub fn to_json(&self, seed: Option<u64>, final_loglik: Option<f64>) -> ParamsFile {
        ParamsFile {
            num_nodes: self.num_nodes(),
            num_communities: self.num_communities(),
            u: self.u.outer_iter().map(|r| r.to_vec()).collect(),
            w: self.w.outer_iter().map(|r| r.to_vec()).collect(),
            seed,
            final_loglik: final_loglik.filter(|x| x.is_finite()),
        }
    }
}

/// On-disk form of [`ModelParams`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamsFile {
    #[serde(rename = "N")]
    pub num_nodes: usize,
    #[serde(rename = "K")]
    pub num_communities: usize,
    pub u: Vec<Vec<f64>>,
    pub w: Vec<Vec<f64>>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub final_loglik: Option<f64>,
}

impl ParamsFile {
    pub fn to_params(&self) -> Result<ModelParams> {
        let u = nested_to_array(&self.u, self.num_nodes, self.num_communities, "u")?;
        let w = nested_to_array(&self.w, self.num_communities, self.num_communities, "w")?;
        ModelParams::new(u, w)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }
}

pub(crate) fn nested_to_array(
    rows: &[Vec<f64>],
    nrows: usize,
    ncols: usize,
    name: &str,
) -> Result<Array2<f64>> {
    if rows.len() != nrows || rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::ShapeMismatch {
            expected: format!("{name} of shape {nrows}×{ncols}"),
            actual: format!(
                "{} rows with lengths {:?}",
                rows.len(),
                rows.iter().map(Vec::len).collect::<Vec<_>>()
            ),
        });
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    Ok(Array2::from_shape_vec((nrows, ncols), flat).expect("shape checked"))
}

/// Exponential prior rates, uniform over the entries of each block. A rate of 0
/// means maximum likelihood for that block.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriorRates {
    pub rate_u: f64,
    pub rate_w: f64,
}

impl Default for PriorRates {
    /// ML on `u`, unit-rate prior on `w`.
    fn default() -> Self {
        Self {
            rate_u: 0.0,
            rate_w: 1.0,
        }
    }
}

impl PriorRates {
    pub const NONE: PriorRates = PriorRates {
        rate_u: 0.0,
        rate_w: 0.0,
    };

    pub fn new(rate_u: f64, rate_w: f64) -> Result<Self> {
        if !(rate_u >= 0.0 && rate_w >= 0.0 && rate_u.is_finite() && rate_w.is_finite()) {
            return Err(Error::Domain(format!(
                "prior rates must be finite and non-negative, got ({rate_u}, {rate_w})"
            )));
        }
        Ok(Self { rate_u, rate_w })
    }
}

fn bilinear(x: ArrayView1<f64>, w: &Array2<f64>, y: ArrayView1<f64>) -> f64 {
    x.dot(&w.dot(&y))
}

/// `λ_e` by explicit summation over node pairs. Reference implementation.
pub fn lambda_naive(e: &[usize], p: &ModelParams) -> Result<f64> {
    if e.len() < 2 {
        return Err(Error::Domain(format!(
            "hyperedge of size {} has no node pairs",
            e.len()
        )));
    }
    let mut total = 0.0;
    for (a, &i) in e.iter().enumerate() {
        for &j in &e[a + 1..] {
            total += bilinear(p.u.row(i), &p.w, p.u.row(j));
        }
    }
    Ok(total)
}

/// `λ_e` for a single hyperedge, `O(|e|K²)`.
pub fn lambda_single(e: &[usize], p: &ModelParams) -> Result<f64> {
    if e.len() < 2 {
        return Err(Error::Domain(format!(
            "hyperedge of size {} has no node pairs",
            e.len()
        )));
    }
    let k = p.num_communities();
    if let Some(&bad) = e.iter().find(|&&i| i >= p.num_nodes()) {
        return Err(Error::Domain(format!("node {bad} out of range")));
    }
    let u = p.u.as_slice().unwrap();
    let w = p.w.as_slice().unwrap();
    let mut later = vec![0.0; k];
    let mut total = 0.0;
    for &i in e.iter().rev() {
        let row = &u[i * k..(i + 1) * k];
        total += dot(&mat_vec(w, row, k), &later);
        add_to(&mut later, row);
    }
    Ok(total)
}

#[inline]
pub(crate) fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

#[inline]
pub(crate) fn add_to(acc: &mut [f64], x: &[f64]) {
    for (a, b) in acc.iter_mut().zip(x) {
        *a += b;
    }
}

pub(crate) fn mat_vec(m: &[f64], x: &[f64], k: usize) -> Vec<f64> {
    m.chunks_exact(k).map(|row| dot(row, x)).collect()
}

/// Rows `v_i = w u_i` for every node, as a flat row-major N×K buffer.
pub(crate) fn projections(u: &[f64], w: &[f64], k: usize) -> Vec<f64> {
    let mut v = Vec::with_capacity(u.len());
    for row in u.chunks_exact(k) {
        v.extend(mat_vec(w, row, k));
    }
    v
}

/// `Σ_{a<b} u_{nodes[a]}ᵀ w u_{nodes[b]}` as a sum of non-negative terms, given
/// the projections `v`. `later` is scratch space of length K.
#[inline]
pub(crate) fn pair_sum_with(nodes: &[usize], u: &[f64], v: &[f64], k: usize, later: &mut [f64]) -> f64 {
    later.fill(0.0);
    let mut total = 0.0;
    for &i in nodes.iter().rev() {
        total += dot(&v[i * k..(i + 1) * k], later);
        add_to(later, &u[i * k..(i + 1) * k]);
    }
    total
}

/// `λ_e` for all hyperedges given the projections `v`.
pub(crate) fn lambdas_from_projections(h: &Hypergraph, u: &[f64], v: &[f64], k: usize) -> Vec<f64> {
    let mut later = vec![0.0; k];
    (0..h.num_edges())
        .map(|e| pair_sum_with(h.edge(e), u, v, k, &mut later))
        .collect()
}

/// `λ_e` for every stored hyperedge, `O(NK² + nnz(B)·K)`.
pub fn lambda_batched(h: &Hypergraph, p: &ModelParams) -> Result<Vec<f64>> {
    p.check_nodes(h)?;
    let k = p.num_communities();
    let u = p.u.as_slice().unwrap();
    let v = projections(u, p.w.as_slice().unwrap(), k);
    Ok(lambdas_from_projections(h, u, &v, k))
}

/// `Σ_{i<j∈V} u_iᵀ w u_j` in `O(NK²)`.
pub fn pair_interaction_sum(p: &ModelParams) -> f64 {
    let k = p.num_communities();
    let u = p.u.as_slice().unwrap();
    let v = projections(u, p.w.as_slice().unwrap(), k);
    let nodes: Vec<usize> = (0..p.num_nodes()).collect();
    pair_sum_with(&nodes, u, &v, k, &mut vec![0.0; k])
}

fn likelihood_from_lambdas(h: &Hypergraph, lambdas: &[f64], c: f64, pair_sum: f64) -> f64 {
    let mut data_term = 0.0;
    for (&lambda, &a) in lambdas.iter().zip(h.weights()) {
        if lambda <= 0.0 {
            return f64::NEG_INFINITY;
        }
        data_term += a as f64 * lambda.ln();
    }
    -c * pair_sum + data_term
}

/// Log-likelihood up to parameter-independent constants:
/// `−C Σ_{i<j∈V} u_iᵀ w u_j + Σ_e A_e ln λ_e`, with `C` from the hypergraph's
/// `N` and `D`. Returns `-inf` when an observed hyperedge has zero rate.
pub fn log_likelihood(h: &Hypergraph, p: &ModelParams) -> Result<f64> {
    let c = ModelConstants::new(h.num_nodes(), h.max_size())?.c;
    let lambdas = lambda_batched(h, p)?;
    Ok(likelihood_from_lambdas(h, &lambdas, c, pair_interaction_sum(p)))
}

/// Exponential-prior penalty `rate_u Σ u_ik + rate_w Σ_{k,q} w_kq`.
pub fn prior_penalty(p: &ModelParams, priors: &PriorRates) -> f64 {
    let mut penalty = 0.0;
    if priors.rate_u != 0.0 {
        penalty += priors.rate_u * p.u.sum();
    }
    if priors.rate_w != 0.0 {
        penalty += priors.rate_w * p.w.sum();
    }
    penalty
}

/// Log-posterior up to constants: [`log_likelihood`] minus [`prior_penalty`].
pub fn log_posterior(h: &Hypergraph, p: &ModelParams, priors: &PriorRates) -> Result<f64> {
    Ok(log_likelihood(h, p)? - prior_penalty(p, priors))
}

/// `ln Pois(a; λ_e / κ_|e|)` for a hyperedge `e` in a hypergraph with
/// `num_nodes` nodes and maximum size `max_size`.
pub fn hyperedge_log_pmf(
    e: &[usize],
    a: u64,
    p: &ModelParams,
    num_nodes: usize,
    max_size: usize,
) -> Result<f64> {
    if e.len() < 2 || e.len() > max_size {
        return Err(Error::Domain(format!(
            "hyperedge size {} outside [2, {max_size}]",
            e.len()
        )));
    }
    let lambda = lambda_single(e, p)?;
    let log_kappa = log_kappa(e.len(), num_nodes)?;
    Ok(poisson_log_pmf_from_log_rate(lambda, log_kappa, a))
}

/// `ln Pois(a; λ/κ)` given `λ` and `ln κ`.
pub(crate) fn poisson_log_pmf_from_log_rate(lambda: f64, log_kappa: f64, a: u64) -> f64 {
    if lambda <= 0.0 {
        return if a == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    let log_mu = lambda.ln() - log_kappa;
    let mu = log_mu.exp();
    if a == 0 {
        return -mu;
    }
    let a = a as f64;
    -mu + a * log_mu - ln_gamma(a + 1.0)
}

/// Expected weighted degree of every node:
/// `C u_iᵀ w Σ_{j≠i} u_j + C′ Σ_{j<m; j,m≠i} u_jᵀ w u_m`.
pub fn expected_degrees(p: &ModelParams, max_size: usize) -> Result<Vec<f64>> {
    let n = p.num_nodes();
    if n < 2 {
        return Err(Error::Domain("expected degree needs at least 2 nodes".to_string()));
    }
    let consts = ModelConstants::new(n, max_size)?;
    let k = p.num_communities();
    let u = p.u.as_slice().unwrap();
    let w = p.w.as_slice().unwrap();
    let v = projections(u, w, k);

    // membership sums and pair sums over nodes before / after each node
    let mut before_sum = vec![0.0; (n + 1) * k];
    let mut before_pairs = vec![0.0; n + 1];
    for i in 0..n {
        let (done, rest) = before_sum.split_at_mut((i + 1) * k);
        let prev = &done[i * k..];
        before_pairs[i + 1] = before_pairs[i] + dot(&v[i * k..(i + 1) * k], prev);
        rest[..k].copy_from_slice(prev);
        add_to(&mut rest[..k], &u[i * k..(i + 1) * k]);
    }
    let mut after_sum = vec![0.0; (n + 1) * k];
    let mut after_pairs = vec![0.0; n + 1];
    for i in (0..n).rev() {
        let (head, tail) = after_sum.split_at_mut((i + 1) * k);
        let next = &tail[..k];
        after_pairs[i] = after_pairs[i + 1] + dot(&v[i * k..(i + 1) * k], next);
        head[i * k..].copy_from_slice(next);
        add_to(&mut head[i * k..], &u[i * k..(i + 1) * k]);
    }

    Ok((0..n)
        .map(|i| {
            let before = &before_sum[i * k..(i + 1) * k];
            let after = &after_sum[(i + 1) * k..(i + 2) * k];
            let vi = &v[i * k..(i + 1) * k];
            let with_i = dot(vi, before) + dot(vi, after);
            let without_i = before_pairs[i] + after_pairs[i + 1] + dot(&mat_vec(w, before, k), after);
            consts.c * with_i + consts.c_prime * without_i
        })
        .collect())
}

pub fn expected_degree(i: usize, p: &ModelParams, max_size: usize) -> Result<f64> {
    if i >= p.num_nodes() {
        return Err(Error::Domain(format!("node {i} out of range")));
    }
    Ok(expected_degrees(p, max_size)?[i])
}

/// Mean weighted degree contributed by hyperedges of size exactly `k`:
/// `binom(N−2, k−2) k / (κ_k N) Σ_{i<j} u_iᵀ w u_j = 2/((k−1)N) Σ_{i<j} u_iᵀ w u_j`.
pub fn expected_degree_size_k(k: usize, p: &ModelParams) -> Result<f64> {
    let n = p.num_nodes();
    if k < 2 || k > n {
        return Err(Error::Domain(format!("size {k} outside [2, {n}]")));
    }
    Ok(2.0 / ((k as f64 - 1.0) * n as f64) * pair_interaction_sum(p))
}
