//! Hyperedge-size normalizer `κ_n = n(n−1)/2 · binom(N−2, n−2)` and the
//! constants obtained by summing it over sizes.

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Largest `min(k, n−k)` for which [`ln_binom`] uses the exact product form.
const LN_BINOM_PRODUCT_LIMIT: u64 = 64;

/// `ln binom(n, k)`; `-inf` when `k > n`.
pub fn ln_binom(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    let k = k.min(n - k);
    if k == 0 {
        return 0.0;
    }
    if k <= LN_BINOM_PRODUCT_LIMIT {
        let base = (n - k) as f64;
        (1..=k).map(|j| ((base + j as f64) / j as f64).ln()).sum()
    } else {
        ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
    }
}

fn check_size(n: usize, num_nodes: usize) -> Result<()> {
    if n < 2 || n > num_nodes {
        return Err(Error::Domain(format!(
            "hyperedge size {n} outside [2, {num_nodes}]"
        )));
    }
    Ok(())
}

/// `ln κ_n` for a hypergraph on `num_nodes` nodes. Exact in log space for any size.
pub fn log_kappa(n: usize, num_nodes: usize) -> Result<f64> {
    check_size(n, num_nodes)?;
    let pairs = (n as f64) * (n as f64 - 1.0) / 2.0;
    Ok(pairs.ln() + ln_binom(num_nodes as u64 - 2, n as u64 - 2))
}

/// `κ_n`. Returns `+inf` when the value is not representable as `f64`;
/// use [`log_kappa`] in that regime.
pub fn kappa(n: usize, num_nodes: usize) -> Result<f64> {
    log_kappa(n, num_nodes).map(f64::exp)
}

/// `C = Σ_{n=2}^{D} binom(N−2, n−2) / κ_n`, which telescopes to `2(1 − 1/D)`.
pub fn constant_c(num_nodes: usize, max_size: usize) -> Result<f64> {
    if max_size < 2 || max_size > num_nodes {
        return Err(Error::Domain(format!(
            "maximum hyperedge size {max_size} outside [2, {num_nodes}]"
        )));
    }
    Ok(2.0 * (1.0 - 1.0 / max_size as f64))
}

/// `C′ = Σ_{d=3}^{D} binom(N−3, d−3) / κ_d = 2/(N−2) · Σ_{d=3}^{D} (d−2)/(d(d−1))`.
pub fn constant_c_prime(num_nodes: usize, max_size: usize) -> Result<f64> {
    if num_nodes < 3 {
        return Err(Error::Domain(format!(
            "C′ needs at least 3 nodes, got {num_nodes}"
        )));
    }
    if max_size < 2 || max_size > num_nodes {
        return Err(Error::Domain(format!(
            "maximum hyperedge size {max_size} outside [2, {num_nodes}]"
        )));
    }
    let sum: f64 = (3..=max_size)
        .map(|d| {
            let d = d as f64;
            (d - 2.0) / (d * (d - 1.0))
        })
        .sum();
    Ok(2.0 * sum / (num_nodes as f64 - 2.0))
}

/// The pair of size-summed constants entering the likelihood and degree formulas.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelConstants {
    pub c: f64,
    pub c_prime: f64,
}

impl ModelConstants {
    pub fn new(num_nodes: usize, max_size: usize) -> Result<Self> {
        let c = constant_c(num_nodes, max_size)?;
        let c_prime = if max_size == 2 {
            0.0
        } else {
            constant_c_prime(num_nodes, max_size)?
        };
        Ok(Self { c, c_prime })
    }
}
