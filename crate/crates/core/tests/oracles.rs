mod common;

use common::*;
use hymmsbm::evaluation::{cosine_similarity_score, cp_profile, cp_profile_curve, train_test_split};
use hymmsbm::hypergraph::{constant_c, constant_c_prime, kappa, Hypergraph};
use hymmsbm::inference::{em_step, update_u, update_w};
use hymmsbm::model::{
    expected_degree_size_k, expected_degrees, hyperedge_log_pmf, lambda_batched, lambda_naive,
    lambda_single, log_likelihood, log_posterior, pair_interaction_sum, ModelParams, PriorRates,
};
use hymmsbm::rng::rng_from_seed;
use hymmsbm::sampler::sample_exact;
use ndarray::{array, Array2};
use num_traits::ToPrimitive;
use proptest::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF, Discrete, DiscreteCDF, Poisson};

const TOL: f64 = 1e-10;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn rates_match_brute_force(seed in any::<u64>()) {
        let inst = random_instance(seed, 8, 3, 5, 10);
        let p = inst.params();
        let batched = lambda_batched(&inst.h, &p).unwrap();
        for ((e, _), lam) in inst.h.iter().zip(&batched) {
            let brute = brute_lambda(e, &inst.u, &inst.w);
            prop_assert!(rel_err(*lam, brute) <= TOL);
            prop_assert!(rel_err(lambda_naive(e, &p).unwrap(), brute) <= TOL);
            prop_assert!(rel_err(lambda_single(e, &p).unwrap(), brute) <= TOL);
        }
        prop_assert!(rel_err(pair_interaction_sum(&p), brute_pair_sum(&inst.u, &inst.w)) <= TOL);
    }

    #[test]
    fn log_likelihood_matches_enumeration(seed in any::<u64>()) {
        let inst = random_instance(seed, 8, 3, 5, 10);
        let got = log_likelihood(&inst.h, &inst.params()).unwrap();
        let brute = brute_log_likelihood(&inst.h, &inst.u, &inst.w);
        prop_assert!(rel_err(got, brute) <= TOL, "{got} vs {brute}");
    }

    #[test]
    fn updates_match_brute_force(seed in any::<u64>(), rate_u in 0.0..2.0f64, rate_w in 0.0..2.0f64) {
        let inst = random_instance(seed, 8, 3, 5, 10);
        let p = inst.params();
        let priors = PriorRates::new(rate_u, rate_w).unwrap();
        let c = constant_c(inst.h.num_nodes(), inst.h.max_size()).unwrap();
        let u = update_u(&inst.h, &p, c, &priors).unwrap();
        let u_ref = brute_update_u(&inst.h, &inst.u, &inst.w, c, rate_u);
        for (a, b) in u.iter().zip(u_ref.iter()) {
            prop_assert!(rel_err(*a, *b) <= TOL, "u {a} vs {b}");
        }
        let w = update_w(&inst.h, &p, c, &priors).unwrap();
        let w_ref = brute_update_w(&inst.h, &inst.u, &inst.w, c, rate_w);
        for (a, b) in w.iter().zip(w_ref.iter()) {
            prop_assert!(rel_err(*a, *b) <= TOL, "w {a} vs {b}");
        }
    }

    #[test]
    fn expectations_match_enumeration(seed in any::<u64>()) {
        let inst = random_instance(seed, 7, 3, 5, 1);
        let p = inst.params();
        let d = inst.h.max_size();
        let degrees = expected_degrees(&p, d).unwrap();
        for (i, x) in degrees.iter().enumerate() {
            let brute = brute_expected_degree(i, &inst.u, &inst.w, d);
            prop_assert!(rel_err(*x, brute) <= TOL, "node {i}: {x} vs {brute}");
        }
        // Σ_i E[d_i] counts each hyperedge |e| times
        let n = inst.u.nrows();
        let by_size: f64 = (2..=d).map(|k| expected_degree_size_k(k, &p).unwrap()).sum::<f64>() * n as f64;
        let brute_total: f64 = all_candidates(n, d)
            .iter()
            .map(|e| e.len() as f64 * brute_lambda(e, &inst.u, &inst.w) / kappa_f64(e.len(), n))
            .sum();
        prop_assert!(rel_err(by_size, brute_total) <= TOL);
        prop_assert!(rel_err(degrees.iter().sum::<f64>(), brute_total) <= TOL);
    }

    #[test]
    fn rescaling_leaves_likelihood_unchanged(seed in any::<u64>(), c in 0.05..20.0f64) {
        let inst = random_instance(seed, 8, 3, 5, 10);
        let base = log_likelihood(&inst.h, &inst.params()).unwrap();
        let scaled = ModelParams::new(&inst.u * c, &inst.w / (c * c)).unwrap();
        prop_assert!(rel_err(base, log_likelihood(&inst.h, &scaled).unwrap()) <= TOL);
    }

    #[test]
    fn relabeling_communities_leaves_likelihood_unchanged(seed in any::<u64>(), shift in 0usize..3) {
        let inst = random_instance(seed, 8, 3, 5, 10);
        let k = inst.u.ncols();
        let perm = |a: usize| (a + shift) % k;
        let u = Array2::from_shape_fn(inst.u.dim(), |(i, a)| inst.u[[i, perm(a)]]);
        let w = Array2::from_shape_fn((k, k), |(a, b)| inst.w[[perm(a), perm(b)]]);
        let base = log_likelihood(&inst.h, &inst.params()).unwrap();
        let got = log_likelihood(&inst.h, &ModelParams::new(u, w).unwrap()).unwrap();
        prop_assert!(rel_err(base, got) <= TOL);
    }

    #[test]
    fn em_steps_never_decrease_the_posterior(seed in any::<u64>()) {
        let inst = random_instance(seed, 10, 3, 5, 20);
        let priors = PriorRates::default();
        let c = constant_c(inst.h.num_nodes(), inst.h.max_size()).unwrap();
        let mut p = inst.params();
        let mut prev = log_posterior(&inst.h, &p, &priors).unwrap();
        for _ in 0..30 {
            p = em_step(&inst.h, &p, c, &priors).unwrap();
            let next = log_posterior(&inst.h, &p, &priors).unwrap();
            prop_assert!(next >= prev - 1e-8 * (1.0 + next.abs()), "{prev} -> {next}");
            prev = next;
        }
    }

    #[test]
    fn zero_entries_stay_zero(seed in any::<u64>()) {
        let inst = random_instance(seed, 8, 3, 5, 10);
        let zeros: Vec<(usize, usize)> = inst
            .u
            .indexed_iter()
            .filter(|(_, &x)| x == 0.0)
            .map(|(ix, _)| ix)
            .collect();
        let c = constant_c(inst.h.num_nodes(), inst.h.max_size()).unwrap();
        let mut p = inst.params();
        for _ in 0..10 {
            p = em_step(&inst.h, &p, c, &PriorRates::default()).unwrap();
            for &ix in &zeros {
                prop_assert_eq!(p.u()[ix], 0.0);
            }
        }
    }

    #[test]
    fn split_partitions_hyperedges(seed in any::<u64>(), ratio in 0.2..0.9f64) {
        let inst = random_instance(seed, 8, 1, 4, 10);
        if inst.h.num_edges() < 4 {
            return Ok(());
        }
        let split = match train_test_split(&inst.h, ratio, seed) {
            Ok(s) => s,
            Err(_) => return Ok(()),
        };
        let expected_test = ((1.0 - ratio) * inst.h.num_edges() as f64).round() as usize;
        prop_assert_eq!(split.test.len(), expected_test);
        prop_assert_eq!(split.train.num_edges() + split.test.len(), inst.h.num_edges());
        prop_assert_eq!(split.train.num_nodes(), inst.h.num_nodes());
        for (e, a) in &split.test {
            prop_assert!(!split.train.contains(e));
            prop_assert_eq!(inst.h.find(e).map(|ix| inst.h.weight(ix)), Some(*a));
        }
        for (e, a) in split.train.iter() {
            prop_assert_eq!(inst.h.find(e).map(|ix| inst.h.weight(ix)), Some(a));
        }
    }

    #[test]
    fn cosine_similarity_ignores_column_order(seed in any::<u64>(), shift in 0usize..3) {
        let inst = random_instance(seed, 8, 3, 3, 1);
        let k = inst.u.ncols();
        let shuffled = Array2::from_shape_fn(inst.u.dim(), |(i, a)| inst.u[[i, (a + shift) % k]]);
        let score = cosine_similarity_score(&inst.u, &shuffled).unwrap();
        prop_assert!((score - 1.0).abs() <= 1e-12, "{score}");
        let scaled = &inst.u * 3.5;
        prop_assert!((cosine_similarity_score(&inst.u, &scaled).unwrap() - 1.0).abs() <= 1e-12);
    }
}

#[test]
fn constants_match_exact_rationals() {
    for n in 2..=12u64 {
        for d in 2..=n {
            let c = constant_c(n as usize, d as usize).unwrap();
            assert!(rel_err(c, c_exact(n, d)) <= 1e-12, "C({n},{d})");
            if n >= 3 {
                let got = constant_c_prime(n as usize, d as usize).unwrap();
                let exact = c_prime_exact(n, d);
                assert!(rel_err_floor(got, exact, 1e-300) <= 1e-12, "C'({n},{d}) {got} vs {exact}");
            }
            for size in 2..=d {
                let exact = kappa_exact(size, n).to_f64().unwrap();
                assert!(rel_err(kappa(size as usize, n as usize).unwrap(), exact) <= 1e-12);
            }
        }
    }
}

#[test]
fn hyperedge_pmf_matches_poisson() {
    let p = ModelParams::new(array![[1.0, 0.2], [0.3, 0.9], [0.5, 0.5], [0.1, 1.1]], array![[0.7, 0.2], [0.2, 0.4]])
        .unwrap();
    let e = [0usize, 2, 3];
    let mean = brute_lambda(&e, p.u(), p.w()) / kappa_f64(3, 4);
    let poisson = Poisson::new(mean).unwrap();
    for a in 0..6u64 {
        let got = hyperedge_log_pmf(&e, a, &p, 4, 3).unwrap();
        assert!(rel_err_floor(got, poisson.ln_pmf(a), 1e-300) <= 1e-10, "a={a}");
    }
}

/// Chi-square goodness of fit of sampled weights against Poisson(λ_e/κ_e) for
/// every candidate hyperedge of a 3-node model.
#[test]
fn sampler_weights_follow_poisson_on_three_nodes() {
    let p = ModelParams::new(array![[1.0], [0.5], [2.0]], array![[0.7]]).unwrap();
    let draws = 20_000usize;
    let candidates = all_candidates(3, 3);
    let mut counts = vec![[0usize; 4]; candidates.len()];
    let mut rng = rng_from_seed(77);
    for _ in 0..draws {
        let h = sample_exact(&p, 3, &mut rng).unwrap();
        assert_eq!(h.max_size(), 3);
        for (slot, e) in candidates.iter().enumerate() {
            let a = h.find(e).map_or(0, |ix| h.weight(ix)) as usize;
            counts[slot][a.min(3)] += 1;
        }
    }
    let critical = ChiSquared::new(3.0).unwrap().inverse_cdf(0.999);
    for (e, observed) in candidates.iter().zip(&counts) {
        let poisson = Poisson::new(brute_lambda(e, p.u(), p.w()) / kappa_f64(e.len(), 3)).unwrap();
        let probs = [poisson.pmf(0), poisson.pmf(1), poisson.pmf(2), 1.0 - poisson.cdf(2)];
        let stat: f64 = observed
            .iter()
            .zip(probs)
            .map(|(&o, q)| {
                let expected = q * draws as f64;
                (o as f64 - expected).powi(2) / expected
            })
            .sum();
        assert!(stat < critical, "{e:?}: χ² {stat} ≥ {critical}");
    }
}

#[test]
fn cp_curve_matches_direct_profile() {
    let h = Hypergraph::from_edges(
        Some(6),
        vec![
            (vec![0, 1], 1),
            (vec![0, 1, 2], 2),
            (vec![2, 3, 4], 1),
            (vec![4, 5], 1),
            (vec![1, 5], 3),
        ],
    )
    .unwrap();
    let scores = [0.3f64, 0.1, 0.9, 0.5, 0.5, 0.2];
    let mut order: Vec<usize> = (0..6).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]).then(a.cmp(&b)));
    let curve = cp_profile_curve(&h, &scores, 6).unwrap();
    for (k, gamma) in curve {
        assert_eq!(gamma, cp_profile(&h, &order[..k]).unwrap(), "k={k}");
    }
}
