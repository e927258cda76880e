//! Acceptance suite: one test per release criterion, each printing a
//! pass/fail line via the test harness.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use wgsp::auction::{
    settle, surplus_report, AuctionInstance, BidProfile, ScoringProfile, TieRule,
};
use wgsp::ctr::{CtrModel, ProductFormCtr};
use wgsp::equilibrium::{simulate_ne, BidderBehavior, SimulationError};
use wgsp::optimal::{
    adjacent_swap_gain, brute_force_optimum, equalizing_profile, product_form_optimum,
    verify_truthful_ne,
};
use wgsp::perm::Permutation;

use wgsp_cli::config::ExperimentConfig;
use wgsp_cli::experiments::{run_dynamic, run_modified_ctr, run_static};
use wgsp_cli::fixtures::{fixture_instance, scenarios, validate_motivating_example};

fn config_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn load_config(name: &str, out: &Path) -> ExperimentConfig {
    let mut config = ExperimentConfig::load(&config_path(name)).expect("config loads");
    config.output.dir = out.to_path_buf();
    config
}

fn benchmark_instance() -> AuctionInstance<f64> {
    let values = vec![19.0, 8.0, 7.0, 6.0, 5.0, 4.0, 13.0, 12.0, 1.0];
    let q = vec![35.0, 45.0, 35.0, 20.0, 50.0, 20.0, 10.0, 70.0, 5.0];
    let s = vec![65.0, 50.0, 40.0, 36.0, 30.0, 18.0, 12.0, 10.0];
    let ctr = CtrModel::Product(ProductFormCtr::new(q, s, 9, 8).unwrap());
    AuctionInstance::new(values, 8, 0.0, ctr).unwrap()
}

/// Random product-form instance with integer parameters, so ranking scores
/// and surpluses are exactly representable.
fn random_product_instance(n: usize, slots: usize, rng: &mut ChaCha12Rng) -> AuctionInstance<f64> {
    let values: Vec<f64> = (0..n).map(|_| rng.gen_range(1..=20) as f64).collect();
    let q: Vec<f64> = (0..n).map(|_| rng.gen_range(1..=70) as f64).collect();
    let n_real = slots.min(n);
    let mut s = Vec::with_capacity(n_real);
    let mut level = 0.0;
    for _ in 0..n_real {
        level += rng.gen_range(1..=9) as f64;
        s.push(level);
    }
    s.reverse();
    let ctr = CtrModel::Product(ProductFormCtr::new(q, s, n, slots).unwrap());
    AuctionInstance::new(values, slots, 0.0, ctr).unwrap()
}

fn random_permutation(n: usize, rng: &mut ChaCha12Rng) -> Permutation {
    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.gen_range(0..=i);
        order.swap(i, j);
    }
    Permutation::from_rank_order(&order).unwrap()
}

/// Criterion: exhaustive enumeration and the sort oracle both return the
/// ranking (2,3,5,7,4,8,6,1,9) with social surplus exactly 123,180 on the
/// 9-advertiser benchmark, inside five seconds.
#[test]
fn acceptance_static_optimum_exactness() {
    let started = Instant::now();
    let inst = benchmark_instance();
    let expected = [2, 3, 5, 7, 4, 8, 6, 1, 9];

    let brute = brute_force_optimum(&inst).unwrap();
    assert_eq!(brute.permutation.rank_vector(), &expected);
    assert_eq!(brute.social_surplus, 123_180.0);

    let q = vec![35.0, 45.0, 35.0, 20.0, 50.0, 20.0, 10.0, 70.0, 5.0];
    let s = vec![65.0, 50.0, 40.0, 36.0, 30.0, 18.0, 12.0, 10.0];
    let ctr = ProductFormCtr::new(q, s, 9, 8).unwrap();
    let sorted = product_form_optimum(inst.values(), &ctr).unwrap();
    assert_eq!(sorted.permutation.rank_vector(), &expected);
    assert_eq!(sorted.social_surplus, 123_180.0);

    assert!(started.elapsed() < Duration::from_secs(5));
}

/// Criterion: the adaptive run on the benchmark terminates at the optimal
/// ranking with at least 98% of the optimal revenue, every displayed
/// advertiser's price within 2% of its value, score-times-bid strictly
/// descending down the final ranking, and at most 5,000 adjustments, inside
/// sixty seconds.
#[test]
fn acceptance_adaptive_revenue_capture() {
    let started = Instant::now();
    let tmp = tempfile::tempdir().unwrap();
    let config = load_config("static.toml", tmp.path());
    let outcome = run_static(&config).unwrap();

    assert!(outcome.matches_optimum);
    assert_eq!(outcome.report.final_sigma.rank_vector(), &[2, 3, 5, 7, 4, 8, 6, 1, 9]);
    assert!(outcome.report.revenue / 123_180.0 >= 0.98);
    assert!(outcome.report.adjustments <= 5_000);

    let inst = benchmark_instance();
    for i in 0..9 {
        let rank = outcome.report.final_sigma.rank_of(i);
        let price = outcome.report.final_prices[i];
        if rank <= inst.n_slots() {
            assert!(
                (price - inst.value(i)).abs() <= 0.02 * inst.value(i),
                "advertiser {i} price {price} is not within 2% of {}",
                inst.value(i)
            );
        } else {
            assert_eq!(price, 0.0);
        }
    }
    for rank in 1..9 {
        let hi = outcome.report.final_sigma.advertiser_at(rank);
        let lo = outcome.report.final_sigma.advertiser_at(rank + 1);
        let eb = |i: usize| outcome.report.final_scores.get(i) * outcome.report.final_bids.get(i);
        assert!(eb(hi) > eb(lo));
    }
    assert!(started.elapsed() < Duration::from_secs(60));
}

/// Criterion: the built-in scenario tables reproduce cell for cell to four
/// decimals — prices (0.03, 0.0667, 0.07), surpluses (4.9, 1.0, 0.6),
/// revenues (5.5, 5.9, 6.525), the third scenario's top price 0.0625 — and
/// all three scenarios pass the equilibrium check.
#[test]
fn acceptance_motivating_example_fixtures() {
    let report = validate_motivating_example();
    assert!(report.passed(), "fixture mismatches: {:#?}", report.mismatches);
    assert!((report.revenues[0] - 5.5).abs() <= 5e-5);
    assert!((report.revenues[1] - 5.9).abs() <= 5e-5);
    assert!((report.revenues[2] - 6.525).abs() <= 5e-5);

    // the corrected third-scenario price, re-derived from the rules
    let instance = fixture_instance();
    let s3 = &scenarios()[2];
    let out = settle(
        &BidProfile::new(s3.bids.clone()).unwrap(),
        &ScoringProfile::new(s3.scores.clone()).unwrap(),
        &instance,
        &TieRule::AdvertiserIndex,
    )
    .unwrap();
    assert!((out.prices[1] - 0.0625).abs() <= 1e-12);
}

/// Criterion: on 200 seeded product-form instances with one slot fewer than
/// advertisers, truthful bids under an equalizing profile form a
/// no-deviation equilibrium for five random rankings each, with every
/// advertiser surplus at most 1e-9 of the social surplus and the engine
/// collecting the social surplus to the same tolerance.
#[test]
fn acceptance_truthful_equilibrium_properties() {
    let mut rng = ChaCha12Rng::seed_from_u64(41);
    for _ in 0..200 {
        let n = rng.gen_range(3..=9);
        let inst = random_product_instance(n, n - 1, &mut rng);
        for _ in 0..5 {
            let sigma = random_permutation(n, &mut rng);
            assert!(verify_truthful_ne(&inst, &sigma).unwrap());

            let level = inst.values().iter().cloned().fold(0.0, f64::max);
            let eq = equalizing_profile(inst.values(), level).unwrap();
            let bids = BidProfile::new(inst.values().to_vec()).unwrap();
            let out = settle(&bids, &eq.scores, &inst, &TieRule::FixedOrder(sigma)).unwrap();
            let rep = surplus_report(&out, inst.values());
            let tol = 1e-9 * rep.social.abs().max(1.0);
            for pi in &rep.per_advertiser {
                assert!(pi.abs() <= tol);
            }
            assert!((rep.search_engine - rep.social).abs() <= tol);
        }
    }
}

/// Criterion: on 100 seeded product-form instances with up to eight
/// advertisers, the sort oracle's surplus equals the exhaustive optimum
/// exactly, every adjacent swap at the optimum is non-improving, and
/// positive-gain adjacent swapping from a random start reaches the optimal
/// value within n(n-1)/2 swaps.
#[test]
fn acceptance_sort_oracle_equivalence() {
    let mut rng = ChaCha12Rng::seed_from_u64(42);
    for _ in 0..100 {
        let n = rng.gen_range(2..=8);
        // At most one padded slot: with two or more, swaps inside the
        // zero-click padding have zero gain and strict-improvement bubbling
        // stalls on the plateau; strictly descending position factors (the
        // sort-optimality hypothesis) only hold up to one trailing zero.
        let slots = rng.gen_range(n - 1..=n).max(1);
        let inst = random_product_instance(n, slots, &mut rng);
        let CtrModel::Product(product) = inst.ctr() else { unreachable!() };

        let sorted = product_form_optimum(inst.values(), product).unwrap();
        let brute = brute_force_optimum(&inst).unwrap();
        assert_eq!(sorted.social_surplus, brute.social_surplus);

        for i in 0..n {
            if sorted.permutation.rank_of(i) < n {
                assert!(adjacent_swap_gain(&sorted.permutation, i, &inst).unwrap() <= 0.0);
            }
        }

        // bubble to the optimum from a random start
        let mut sigma = random_permutation(n, &mut rng);
        let mut swaps = 0;
        loop {
            let mut improved = false;
            for rank in 1..n {
                let adv = sigma.advertiser_at(rank);
                if adjacent_swap_gain(&sigma, adv, &inst).unwrap() > 0.0 {
                    sigma = sigma.swap_ranks(rank, rank + 1).unwrap();
                    swaps += 1;
                    improved = true;
                }
            }
            if !improved {
                break;
            }
        }
        assert!(swaps <= n * (n - 1) / 2, "needed {swaps} swaps for n={n}");
        let reached: f64 = (0..n)
            .map(|i| inst.value(i) * inst.click_rate(i, &sigma).unwrap())
            .sum();
        assert_eq!(reached, brute.social_surplus);
    }
}

/// Criterion: low-volatility dynamic tracking re-finds the exhaustive
/// optimum at every instance with warm restarts averaging at most half the
/// cold-start adjustments, and the high-volatility case needs at least as
/// many adjustments under the same seed, inside five minutes.
#[test]
fn acceptance_dynamic_tracking() {
    let started = Instant::now();
    let tmp1 = tempfile::tempdir().unwrap();
    let tmp2 = tempfile::tempdir().unwrap();

    let case1 = run_dynamic(&load_config("dynamic_case1.toml", tmp1.path())).unwrap();
    assert_eq!(case1.records.len(), 11);
    assert!(case1.all_match_optimum());
    assert!(case1.warm_mean_adjustments() <= 0.5 * case1.cold_adjustments() as f64);

    let case2 = run_dynamic(&load_config("dynamic_case2.toml", tmp2.path())).unwrap();
    assert_eq!(case2.records.len(), 11);
    assert!(case2.all_match_optimum());
    assert!(case2.warm_mean_adjustments() >= case1.warm_mean_adjustments());

    assert!(started.elapsed() < Duration::from_secs(300));
}

/// Criterion: over 100 seeded competitor-group trials at the documented
/// parameter distribution, the mean revenue ratio is at least 0.80, the
/// standard deviation is reported, and the benchmark pair 0.916/0.0549 is
/// recorded in the summary without being asserted.
#[test]
fn acceptance_modified_ctr_ratio() {
    let tmp = tempfile::tempdir().unwrap();
    let outcome = run_modified_ctr(&load_config("modified_ctr.toml", tmp.path())).unwrap();
    assert_eq!(outcome.trials.len(), 100);
    assert!(outcome.mean_ratio >= 0.80, "mean ratio {}", outcome.mean_ratio);
    assert!(outcome.std_ratio.is_finite());

    let summary = fs::read_to_string(tmp.path().join("summary.txt")).unwrap();
    assert!(summary.contains("mean_ratio,"));
    assert!(summary.contains("std_ratio,"));
    assert!(summary.contains("benchmark_mean_ratio,0.9160"));
    assert!(summary.contains("benchmark_std_ratio,0.0549"));
    println!(
        "modified-ctr: mean ratio {:.4}, std {:.4} (benchmark 0.9160/0.0549)",
        outcome.mean_ratio, outcome.std_ratio
    );
}

/// Criterion: across best-response settlements no bid ever exceeds its
/// advertiser's value, and every converged unslotted advertiser bids its
/// value within tolerance. The simulator enforces both rules on every
/// converged outcome (any violation anywhere turns into an error), so this
/// test additionally drives a seeded sample of instances through the
/// dynamics and re-checks the outcomes directly.
#[test]
fn acceptance_behavioral_invariants() {
    let mut rng = ChaCha12Rng::seed_from_u64(43);
    let mut converged = 0;
    for _ in 0..60 {
        let n = rng.gen_range(2..=6);
        let slots = rng.gen_range(1..n.max(2));
        let inst = random_product_instance(n, slots, &mut rng);
        let scores = ScoringProfile::new(
            (0..n).map(|_| rng.gen_range(1..=100) as f64).collect(),
        )
        .unwrap();
        let initial = BidProfile::new(
            (0..n).map(|i| rng.gen_range(0.0..inst.value(i))).collect(),
        )
        .unwrap();
        let behavior = BidderBehavior::for_instance(&inst);
        match simulate_ne(&scores, &inst, &behavior, &initial, &TieRule::AdvertiserIndex) {
            Ok(out) => {
                converged += 1;
                for i in 0..n {
                    assert!(out.bids.get(i) <= inst.value(i) + 1e-12);
                    if out.permutation().rank_of(i) > slots {
                        assert!((out.bids.get(i) - inst.value(i)).abs() <= behavior.bid_tolerance);
                    }
                }
            }
            Err(SimulationError::NonConvergence { last, .. }) => {
                // cycling is a reported outcome; the value cap still holds
                for i in 0..n {
                    assert!(last.bids.get(i) <= inst.value(i) + 1e-12);
                }
            }
            Err(e) => panic!("behavioral rule violated: {e}"),
        }
    }
    assert!(converged >= 50, "only {converged}/60 sampled dynamics converged");
}

/// Criterion: repeating any command with the same seed yields byte-identical
/// CSV outputs.
#[test]
fn acceptance_determinism() {
    let compare = |a: &Path, b: &Path, files: &[&str]| {
        for file in files {
            let left = fs::read(a.join(file)).unwrap_or_else(|_| panic!("{file} missing"));
            let right = fs::read(b.join(file)).unwrap_or_else(|_| panic!("{file} missing"));
            assert_eq!(left, right, "{file} differs between repeated runs");
        }
    };

    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run_static(&load_config("static.toml", a.path())).unwrap();
    run_static(&load_config("static.toml", b.path())).unwrap();
    compare(a.path(), b.path(), &["trace.csv", "report.csv", "summary.txt"]);

    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run_dynamic(&load_config("dynamic_case1.toml", a.path())).unwrap();
    run_dynamic(&load_config("dynamic_case1.toml", b.path())).unwrap();
    compare(a.path(), b.path(), &["adjustments.csv", "rankings.csv", "summary.txt"]);

    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let mut small = load_config("modified_ctr.toml", a.path());
    small.trials = 10;
    run_modified_ctr(&small).unwrap();
    small.output.dir = b.path().to_path_buf();
    run_modified_ctr(&small).unwrap();
    compare(a.path(), b.path(), &["trials.csv", "summary.txt"]);
}
