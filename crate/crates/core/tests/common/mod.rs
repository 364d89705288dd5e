//! Brute-force reference computations shared by the integration suites. Nothing
//! here calls into the batched code paths it is used to check.

#![allow(dead_code)]

use hymmsbm::hypergraph::Hypergraph;
use hymmsbm::model::ModelParams;
use hymmsbm::rng::{rng_from_seed, Rng};
use ndarray::Array2;
use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng as _;

pub fn rel_err(a: f64, b: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    (a - b).abs() / a.abs().max(b.abs())
}

/// Relative error with an absolute floor for values that should be exactly 0.
pub fn rel_err_floor(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

pub struct Instance {
    pub h: Hypergraph,
    pub u: Array2<f64>,
    pub w: Array2<f64>,
}

impl Instance {
    pub fn params(&self) -> ModelParams {
        ModelParams::new(self.u.clone(), self.w.clone()).unwrap()
    }
}

/// Random instance with `N ≤ max_n`, `K ≤ max_k`, `D ≤ max_d`, `1 ≤ |E| ≤ max_e`.
/// Some membership entries are exactly zero.
pub fn random_instance(seed: u64, max_n: usize, max_k: usize, max_d: usize, max_e: usize) -> Instance {
    let mut rng: Rng = rng_from_seed(seed);
    let n = rng.random_range(3..=max_n);
    let k = rng.random_range(1..=max_k);
    let d = rng.random_range(2..=max_d.min(n));
    let m = rng.random_range(1..=max_e);
    let mut edges = Vec::new();
    for _ in 0..m {
        let size = rng.random_range(2..=d);
        let mut nodes: Vec<usize> = (0..n).collect();
        for pos in 0..size {
            let j = rng.random_range(pos..n);
            nodes.swap(pos, j);
        }
        nodes.truncate(size);
        edges.push((nodes, rng.random_range(1..=3u64)));
    }
    let h = Hypergraph::from_edges(Some(n), edges)
        .unwrap()
        .with_max_size(d)
        .unwrap();
    let u = Array2::from_shape_simple_fn((n, k), || {
        if rng.random::<f64>() < 0.1 {
            0.0
        } else {
            rng.random::<f64>() + 0.05
        }
    });
    // keep every hyperedge's rate positive
    let mut u = u;
    for i in 0..n {
        u[[i, 0]] += 0.01;
    }
    let mut w = Array2::zeros((k, k));
    for a in 0..k {
        for b in a..k {
            let x = rng.random::<f64>() + 0.05;
            w[[a, b]] = x;
            w[[b, a]] = x;
        }
    }
    Instance { h, u, w }
}

pub fn brute_lambda(e: &[usize], u: &Array2<f64>, w: &Array2<f64>) -> f64 {
    let k = u.ncols();
    let mut total = 0.0;
    for a in 0..e.len() {
        for b in a + 1..e.len() {
            for x in 0..k {
                for y in 0..k {
                    total += u[[e[a], x]] * w[[x, y]] * u[[e[b], y]];
                }
            }
        }
    }
    total
}

/// `Σ_{i<j∈V} u_iᵀ w u_j` by explicit double loop.
pub fn brute_pair_sum(u: &Array2<f64>, w: &Array2<f64>) -> f64 {
    let all: Vec<usize> = (0..u.nrows()).collect();
    brute_lambda(&all, u, w)
}

pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let mut acc = BigUint::one();
    for j in 0..k {
        acc = acc * BigUint::from(n - j) / BigUint::from(j + 1);
    }
    acc
}

/// `κ_n` as an exact rational.
pub fn kappa_exact(size: u64, n: u64) -> BigRational {
    let pairs = BigUint::from(size * (size - 1) / 2);
    BigRational::from_integer((pairs * binomial(n - 2, size - 2)).into())
}

/// `C = Σ_{s=2}^{D} binom(N−2, s−2)/κ_s` by exact rational summation.
pub fn c_exact(n: u64, d: u64) -> f64 {
    let mut total = BigRational::zero();
    for s in 2..=d {
        let count = BigRational::from_integer(binomial(n - 2, s - 2).into());
        total += count / kappa_exact(s, n);
    }
    total.to_f64().unwrap()
}

/// `C′ = Σ_{s=3}^{D} binom(N−3, s−3)/κ_s` by exact rational summation.
pub fn c_prime_exact(n: u64, d: u64) -> f64 {
    let mut total = BigRational::zero();
    for s in 3..=d {
        let count = BigRational::from_integer(binomial(n - 3, s - 3).into());
        total += count / kappa_exact(s, n);
    }
    total.to_f64().unwrap()
}

/// Every subset of `0..n` with size in `2..=d`.
pub fn all_candidates(n: usize, d: usize) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = Vec::new();
    for mask in 0u32..(1u32 << n) {
        let size = mask.count_ones() as usize;
        if (2..=d).contains(&size) {
            out.push((0..n).filter(|i| mask & (1 << i) != 0).collect());
        }
    }
    out.sort_by(|a, b| a.len().cmp(&b.len()).then(a.cmp(b)));
    out
}

/// `κ_|e|` in floating point from exact binomials.
pub fn kappa_f64(size: usize, n: usize) -> f64 {
    kappa_exact(size as u64, n as u64).to_f64().unwrap()
}

/// `Σ_{e∈Ω} λ_e/κ_e` by enumeration of every candidate hyperedge.
pub fn brute_expected_total(u: &Array2<f64>, w: &Array2<f64>, d: usize) -> f64 {
    let n = u.nrows();
    all_candidates(n, d)
        .iter()
        .map(|e| brute_lambda(e, u, w) / kappa_f64(e.len(), n))
        .sum()
}

/// `E[d_i] = Σ_{e∋i} λ_e/κ_e` by enumeration.
pub fn brute_expected_degree(i: usize, u: &Array2<f64>, w: &Array2<f64>, d: usize) -> f64 {
    let n = u.nrows();
    all_candidates(n, d)
        .iter()
        .filter(|e| e.contains(&i))
        .map(|e| brute_lambda(e, u, w) / kappa_f64(e.len(), n))
        .sum()
}

/// Log-likelihood from the unsimplified sum over every candidate hyperedge.
pub fn brute_log_likelihood(h: &Hypergraph, u: &Array2<f64>, w: &Array2<f64>) -> f64 {
    let global = brute_expected_total(u, w, h.max_size());
    let data: f64 = h
        .iter()
        .map(|(e, a)| a as f64 * brute_lambda(e, u, w).ln())
        .sum();
    -global + data
}

/// `ρ^{(e)}_{abxy} = u_ax w_xy u_by / λ_e` for node pairs `a < b` of `e`.
fn rho(e: &[usize], u: &Array2<f64>, w: &Array2<f64>) -> Vec<(usize, usize, Array2<f64>)> {
    let k = u.ncols();
    let lambda = brute_lambda(e, u, w);
    let mut out = Vec::new();
    for p in 0..e.len() {
        for q in p + 1..e.len() {
            let (a, b) = (e[p], e[q]);
            let r = Array2::from_shape_fn((k, k), |(x, y)| u[[a, x]] * w[[x, y]] * u[[b, y]] / lambda);
            out.push((a, b, r));
        }
    }
    out
}

/// Membership update by direct summation with materialized `ρ`.
pub fn brute_update_u(
    h: &Hypergraph,
    u: &Array2<f64>,
    w: &Array2<f64>,
    c: f64,
    rate_u: f64,
) -> Array2<f64> {
    let (n, k) = u.dim();
    let mut numer = Array2::<f64>::zeros((n, k));
    for (e, a_e) in h.iter() {
        for (a, b, r) in rho(e, u, w) {
            for x in 0..k {
                for y in 0..k {
                    // node a carries community x, node b carries community y
                    numer[[a, x]] += a_e as f64 * r[[x, y]];
                    numer[[b, y]] += a_e as f64 * r[[x, y]];
                }
            }
        }
    }
    Array2::from_shape_fn((n, k), |(i, x)| {
        let mut denom = 0.0;
        for y in 0..k {
            let others: f64 = (0..n).filter(|&j| j != i).map(|j| u[[j, y]]).sum();
            denom += w[[x, y]] * others;
        }
        let denom = c * denom + rate_u;
        if numer[[i, x]] == 0.0 {
            0.0
        } else {
            numer[[i, x]] / denom
        }
    })
}

/// Affinity update by direct summation with materialized `ρ`, symmetrized over
/// `(k, q)` and `(q, k)`.
pub fn brute_update_w(
    h: &Hypergraph,
    u: &Array2<f64>,
    w: &Array2<f64>,
    c: f64,
    rate_w: f64,
) -> Array2<f64> {
    let (n, k) = u.dim();
    let mut numer = Array2::<f64>::zeros((k, k));
    for (e, a_e) in h.iter() {
        for (_, _, r) in rho(e, u, w) {
            numer.scaled_add(a_e as f64, &r);
        }
    }
    Array2::from_shape_fn((k, k), |(x, y)| {
        let num = 0.5 * (numer[[x, y]] + numer[[y, x]]);
        let mut pairs = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                pairs += u[[i, x]] * u[[j, y]] + u[[i, y]] * u[[j, x]];
            }
        }
        let denom = c * 0.5 * pairs + rate_w;
        if num == 0.0 {
            0.0
        } else {
            num / denom
        }
    })
}
