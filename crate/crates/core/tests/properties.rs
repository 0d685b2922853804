use num_rational::BigRational;
use num_traits::{One, Zero};
use proptest::prelude::*;

use seqrisk::cohort::{disparity_curve, group_disparity, run_cohort, run_cohort_with};
use seqrisk::limit::{beta_moments, ks_statistic, ks_two_sample, ks_two_sample_threshold, limit_distribution};
use seqrisk::rng;
use seqrisk::urn::{
    counts_to_probability, enumerate_exact, exact_probability_after, exact_update_probability,
    gamma_weight, update_probability, Classification, UrnState,
};
use seqrisk::validation::{auc, one_shot_power, snapshot_validation, SnapshotSpec};
use seqrisk::{apply_bias, CohortConfig, Execution, UrnParameters};

fn params_strategy() -> impl Strategy<Value = UrnParameters> {
    (0.05f64..20.0, 0.05f64..20.0, 0.05f64..20.0)
        .prop_map(|(b, r, k)| UrnParameters::new(b, r, k).unwrap())
}

fn path_strategy(max: usize) -> impl Strategy<Value = Vec<Classification>> {
    prop::collection::vec(any::<bool>().prop_map(Classification::from), 1..max)
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn recursion_matches_counts(params in params_strategy(), path in path_strategy(300)) {
        let mut state = UrnState::new(params);
        let mut p = counts_to_probability(&state);
        for (idx, &x) in path.iter().enumerate() {
            state = state.advance(x);
            p = update_probability(p, x, idx as u64 + 2, &params).unwrap();
            prop_assert!(rel_close(p, counts_to_probability(&state), 1e-12));
        }
    }

    #[test]
    fn recursion_matches_counts_exactly(params in params_strategy(), path in path_strategy(40)) {
        let mut p = exact_probability_after(&params, 0, 0);
        let mut ones = 0u64;
        for (idx, &x) in path.iter().enumerate() {
            p = exact_update_probability(&p, x, idx as u64 + 2, &params).unwrap();
            ones += u64::from(x.as_u8());
            prop_assert_eq!(&p, &exact_probability_after(&params, ones, idx as u64 + 1));
        }
    }

    #[test]
    fn integer_mass_is_conserved_exactly(
        b in 1u32..50, r in 1u32..50, k in 1u32..10, path in path_strategy(200)
    ) {
        let params = UrnParameters::new(b.into(), r.into(), k.into()).unwrap();
        let mut state = UrnState::new(params);
        for (i, &x) in path.iter().enumerate() {
            state = state.advance(x);
            let steps = i as u64 + 1;
            prop_assert_eq!(state.blue() + state.red(), params.mass_after(steps));
            prop_assert!(state.blue() >= params.blue_initial());
            prop_assert!(state.red() >= params.red_initial());
        }
    }

    #[test]
    fn step_size_is_bounded(params in params_strategy(), path in path_strategy(200)) {
        let n0 = params.initial_mass();
        let k = params.increment();
        let mut state = UrnState::new(params);
        for (idx, &x) in path.iter().enumerate() {
            let i = idx as f64 + 1.0;
            let before = counts_to_probability(&state);
            state = state.advance(x);
            let change = (counts_to_probability(&state) - before).abs();
            let weight = 1.0 - gamma_weight(idx as u64 + 2, &params).unwrap();
            prop_assert!(rel_close(change, weight * (x.as_f64() - before).abs(), 1e-9) || change < 1e-15);
            prop_assert!(change <= k / (n0 + (i - 1.0) * k) * (1.0 + 1e-12));
        }
    }

    #[test]
    fn weighted_average_fixes_equal_values(params in params_strategy(), i in 2u64..10_000, high in any::<bool>()) {
        let x = Classification::from(high);
        let p = x.as_f64();
        prop_assert_eq!(update_probability(p, x, i, &params).unwrap(), p);
    }

    #[test]
    fn bias_is_monotone_and_bounded(p in 0.0f64..=1.0, d1 in 0.0f64..0.99, extra in 0.0f64..0.99) {
        let d2 = (d1 + extra).min(0.999);
        prop_assert!(apply_bias(p, d2) >= apply_bias(p, d1));
        for d in [d1, -d1, d2, -d2] {
            let b = apply_bias(p, d);
            prop_assert!((0.0..=1.0).contains(&b));
        }
    }

    #[test]
    fn auc_invariant_under_increasing_transform(
        rows in prop::collection::vec((0u32..40, any::<bool>()), 2..200)
    ) {
        prop_assume!(rows.iter().any(|r| r.1) && rows.iter().any(|r| !r.1));
        let scores: Vec<f64> = rows.iter().map(|r| f64::from(r.0) / 40.0).collect();
        let outcomes: Vec<bool> = rows.iter().map(|r| r.1).collect();
        let base = auc(&scores, &outcomes).unwrap();
        let exp: Vec<f64> = scores.iter().map(|s| s.exp()).collect();
        let affine: Vec<f64> = scores.iter().map(|s| 3.0 * s - 7.0).collect();
        let cube: Vec<f64> = scores.iter().map(|s| s * s * s).collect();
        prop_assert_eq!(auc(&exp, &outcomes).unwrap(), base);
        prop_assert_eq!(auc(&affine, &outcomes).unwrap(), base);
        prop_assert_eq!(auc(&cube, &outcomes).unwrap(), base);
        prop_assert!((0.0..=1.0).contains(&base));
    }
}

#[test]
fn exact_martingale_step() {
    for params in [
        UrnParameters::CLASSIC,
        UrnParameters::symmetric(0.1).unwrap(),
        UrnParameters::new(2.5, 0.75, 3.0).unwrap(),
    ] {
        for steps in 0..6u64 {
            for high in 0..=steps {
                let p = exact_probability_after(&params, high, steps);
                let up = exact_probability_after(&params, high + 1, steps + 1);
                let down = exact_probability_after(&params, high, steps + 1);
                let expected = &p * up + (BigRational::one() - &p) * down;
                assert_eq!(expected, p);
            }
        }
    }
}

#[test]
fn exchangeability_in_the_oracle() {
    for params in [
        UrnParameters::CLASSIC,
        UrnParameters::symmetric(0.1).unwrap(),
        UrnParameters::symmetric(10.0).unwrap(),
        UrnParameters::new(3.0, 1.0, 0.5).unwrap(),
    ] {
        for horizon in 1..=10 {
            let paths = enumerate_exact(&params, horizon).unwrap();
            let mut by_count: Vec<Option<BigRational>> = vec![None; horizon + 1];
            for path in &paths {
                let slot = &mut by_count[path.high_count()];
                match slot {
                    Some(p) => assert_eq!(p, &path.probability),
                    None => *slot = Some(path.probability.clone()),
                }
            }
        }
    }
}

#[test]
fn finite_horizon_law_is_discrete_uniform_for_unit_urn() {
    let c = UrnParameters::CLASSIC;
    for horizon in 1..=10usize {
        let paths = enumerate_exact(&c, horizon).unwrap();
        let mut mass = vec![BigRational::zero(); horizon + 1];
        for path in &paths {
            mass[path.high_count()] += &path.probability;
        }
        let each = BigRational::new(1.into(), (horizon as i64 + 1).into());
        for (j, m) in mass.iter().enumerate() {
            assert_eq!(m, &each);
            let p = exact_probability_after(&c, j as u64, horizon as u64);
            assert_eq!(p, BigRational::new((j as i64 + 1).into(), (horizon as i64 + 2).into()));
        }
    }
}

#[test]
fn uniform_samples_pass_ks_at_one_percent() {
    let n = 10_000;
    let mut passes = 0;
    for run in 0..100u64 {
        let mut r = rng::stream_rng(77, run);
        let mut xs: Vec<f64> = (0..n).map(|_| rng::uniform(&mut r)).collect();
        xs.sort_by(f64::total_cmp);
        let d = ks_statistic(&xs, |x| x).unwrap();
        passes += usize::from(d < 1.63 / (n as f64).sqrt());
    }
    assert!(passes >= 95, "{passes} of 100 runs passed");
}

#[test]
fn determinism_under_thread_counts() {
    let cfg = CohortConfig::two_groups(2_000, 30, UrnParameters::symmetric(0.7).unwrap(), 0.0, 0.03, 11);
    let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let many = rayon::ThreadPoolBuilder::new().num_threads(6).build().unwrap();
    let a = single.install(|| run_cohort(&cfg).unwrap());
    let b = many.install(|| run_cohort(&cfg).unwrap());
    let c = run_cohort_with(&cfg, Execution::Sequential).unwrap();
    assert_eq!(a, b);
    assert_eq!(a, c);
    let ca = single.install(|| disparity_curve(&a, 0.5).unwrap());
    let cb = many.install(|| disparity_curve(&b, 0.5).unwrap());
    assert_eq!(ca, cb);
}

#[test]
fn endpoint_moments_match_unit_limit_law() {
    let mut cfg = CohortConfig::single_group(100_000, 1_000, UrnParameters::CLASSIC, 2024);
    cfg.record_full_paths = false;
    let ends = run_cohort(&cfg).unwrap().endpoints();
    let n = ends.len() as f64;
    let mean = ends.iter().sum::<f64>() / n;
    let var = ends.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let m4 = ends.iter().map(|p| (p - mean).powi(4)).sum::<f64>() / n;
    let (lm, lv) = beta_moments(&limit_distribution(&UrnParameters::CLASSIC));
    assert!((mean - lm).abs() < 3.0 * (var / n).sqrt(), "mean {mean}");
    assert!((var - lv).abs() < 3.0 * ((m4 - var * var) / n).sqrt(), "var {var}");
}

#[test]
fn concentrated_and_polarized_cohorts() {
    // thirty defendants, fifteen assessments
    let k01 = UrnParameters::symmetric(0.1).unwrap();
    let k10 = UrnParameters::symmetric(10.0).unwrap();
    let mut polarized_share = 0.0;
    let cohorts = 200;
    for seed in 0..cohorts {
        let ends = run_cohort(&CohortConfig::single_group(30, 15, k01, seed)).unwrap().endpoints();
        assert!(ends.iter().all(|p| *p > 0.2 && *p < 0.8));
        let ends = run_cohort(&CohortConfig::single_group(30, 15, k10, seed)).unwrap().endpoints();
        polarized_share += ends.iter().filter(|p| **p <= 0.2 || **p >= 0.8).count() as f64 / 30.0;
    }
    assert!(polarized_share / cohorts as f64 >= 0.5);
}

#[test]
fn identical_groups_are_indistinguishable() {
    let cfg = CohortConfig::two_groups(5_000, 40, UrnParameters::CLASSIC, 0.0, 0.0, 31);
    let res = run_cohort(&cfg).unwrap();
    let d = ks_two_sample(&res.group_endpoints(0), &res.group_endpoints(1)).unwrap();
    assert!(d < ks_two_sample_threshold(5_000, 5_000, 0.01).unwrap(), "D = {d}");
    for rec in disparity_curve(&res, 0.5).unwrap() {
        let pair = &rec.pairs[0];
        assert!(pair.gap.abs() <= 3.0 * pair.se, "t = {}: {} vs se {}", rec.time, pair.gap, pair.se);
    }
}

#[test]
fn unbiased_gap_is_inside_permutation_null() {
    let horizon = 12;
    for seed in 0..5u64 {
        let cfg = CohortConfig::two_groups(20, horizon, UrnParameters::CLASSIC, 0.0, 0.0, seed);
        let res = run_cohort(&cfg).unwrap();
        let ends = res.endpoints();
        let above: Vec<bool> = ends.iter().map(|p| *p >= 0.5).collect();
        let gap_of = |labels: &[usize]| {
            let a = labels[..20].iter().filter(|&&i| above[i]).count() as f64;
            let b = labels[20..].iter().filter(|&&i| above[i]).count() as f64;
            (b - a) / 20.0
        };
        let observed = group_disparity(&res, horizon, 0.5).unwrap().pairs[0].gap;
        let ident: Vec<usize> = (0..40).collect();
        assert!((gap_of(&ident) - observed).abs() < 1e-12);

        let mut r = rng::stream_rng(seed, 999);
        let mut null = Vec::with_capacity(2000);
        let mut labels = ident.clone();
        for _ in 0..2000 {
            for i in (1..labels.len()).rev() {
                let j = (rng::uniform(&mut r) * (i + 1) as f64) as usize;
                labels.swap(i, j);
            }
            null.push(gap_of(&labels));
        }
        null.sort_by(f64::total_cmp);
        let (lo, hi) = (null[10], null[1989]);
        assert!(observed >= lo && observed <= hi, "seed {seed}: {observed} outside [{lo}, {hi}]");
    }
}

fn curve_slope(seed: u64, per_group: usize, horizon: usize) -> f64 {
    let cfg = CohortConfig::two_groups(per_group, horizon, UrnParameters::CLASSIC, 0.0, 0.0, seed);
    let curve = disparity_curve(&run_cohort(&cfg).unwrap(), 0.5).unwrap();
    let xs: Vec<f64> = curve.iter().map(|r| r.time as f64).collect();
    let ys: Vec<f64> = curve.iter().map(|r| r.pairs[0].gap).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / sxx
}

#[test]
fn unbiased_curve_has_no_trend() {
    // gaps at successive times share defendants, so the slope's spread is
    // estimated from independent replicate cohorts
    let slopes: Vec<f64> = (0..60).map(|s| curve_slope(1_000 + s, 4_000, 60)).collect();
    let n = slopes.len() as f64;
    let mean = slopes.iter().sum::<f64>() / n;
    let sd = (slopes.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    assert!(mean.abs() <= 3.0 * sd / n.sqrt(), "mean slope {mean}, sd {sd}");
    let observed = curve_slope(5, 4_000, 60);
    assert!(observed.abs() <= 3.0 * sd, "slope {observed}, sd {sd}");
}

#[test]
fn snapshot_rates_increase_with_score() {
    let cfg = CohortConfig::single_group(100_000, 7, UrnParameters::CLASSIC, 8);
    let res = run_cohort(&cfg).unwrap();
    let spec = SnapshotSpec { time: 5, lookahead: 2, bins: 10, threshold: 0.5 };
    let report = snapshot_validation(&res, &spec).unwrap();
    let rates: Vec<f64> = report.bins.iter().filter_map(|b| b.observed_rate).collect();
    assert_eq!(rates.len(), 6); // scores (j + 1) / 7
    assert!(rates.windows(2).all(|w| w[0] < w[1]), "{rates:?}");
    assert!(report.auc > 0.5);
}

/// Exact failure probability given the score, from the enumeration oracle.
fn oracle_failure_by_count(params: &UrnParameters, time: usize, lookahead: usize) -> Vec<BigRational> {
    let paths = enumerate_exact(params, time + lookahead).unwrap();
    let mut total = vec![BigRational::zero(); time + 1];
    let mut failed = vec![BigRational::zero(); time + 1];
    for path in &paths {
        let j = path.classifications[..time].iter().filter(|x| x.is_high()).count();
        total[j] += &path.probability;
        if path.classifications[time..].iter().any(|x| x.is_high()) {
            failed[j] += &path.probability;
        }
    }
    total.into_iter().zip(failed).map(|(t, f)| f / t).collect()
}

#[test]
fn one_step_calibration_is_exact_in_the_oracle() {
    for params in [UrnParameters::CLASSIC, UrnParameters::new(2.0, 0.5, 1.5).unwrap()] {
        for time in 1..=8 {
            let rates = oracle_failure_by_count(&params, time, 1);
            for (j, rate) in rates.iter().enumerate() {
                assert_eq!(rate, &exact_probability_after(&params, j as u64, time as u64));
            }
            let two = oracle_failure_by_count(&params, time, 2);
            assert!(two.windows(2).all(|w| w[0] < w[1]));
        }
    }
}

#[test]
fn two_identical_groups_have_small_parity_gaps() {
    let cfg = CohortConfig::two_groups(50_000, 8, UrnParameters::CLASSIC, 0.0, 0.0, 12);
    let res = run_cohort(&cfg).unwrap();
    let spec = SnapshotSpec { time: 4, lookahead: 2, bins: 5, threshold: 0.5 };
    let report = snapshot_validation(&res, &spec).unwrap();
    let f = report.groups[0].fraction_above;
    let se = (2.0 * f * (1.0 - f) / 50_000.0).sqrt();
    assert!(report.statistical_parity_gap <= 3.0 * se);
    for b in 0..spec.bins {
        let (ga, gb) = (&report.groups[0].bins[b], &report.groups[1].bins[b]);
        if let (Some(ra), Some(rb)) = (ga.observed_rate, gb.observed_rate) {
            let se = (ra * (1.0 - ra) / ga.count as f64 + rb * (1.0 - rb) / gb.count as f64).sqrt();
            assert!((ra - rb).abs() <= 3.0 * se, "bin {b}");
        }
    }
}

fn normal_cdf(x: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-x / std::f64::consts::SQRT_2)
}

/// Normal-approximation power of the two-sided two-proportion test.
fn analytic_power(p1: f64, p2: f64, n: f64, alpha: f64) -> f64 {
    let z = 1.959963984540054; // alpha = 0.05
    assert_eq!(alpha, 0.05);
    let se = (p1 * (1.0 - p1) / n + p2 * (1.0 - p2) / n).sqrt();
    let shift = (p2 - p1).abs() / se;
    normal_cdf(shift - z) + normal_cdf(-shift - z)
}

#[test]
fn detection_power_matches_normal_approximation() {
    let spec = SnapshotSpec { time: 1, lookahead: 1, bins: 10, threshold: 0.5 };
    let reps = 400;
    for (per_group, delta) in [(500, 0.01), (2_000, 0.04)] {
        let cfg = CohortConfig::two_groups(per_group, 2, UrnParameters::CLASSIC, 0.0, delta, 17);
        let power = one_shot_power(&cfg, &spec, reps, 0.05).unwrap();
        let expected = analytic_power(0.5, 0.5 + delta, per_group as f64, 0.05);
        let se = (expected * (1.0 - expected) / reps as f64).sqrt();
        assert!((power - expected).abs() <= 3.0 * se + 0.01, "{power} vs {expected}");
    }
    let cfg = CohortConfig::two_groups(10_000, 2, UrnParameters::CLASSIC, 0.0, 0.2, 17);
    assert!(one_shot_power(&cfg, &spec, 40, 0.05).unwrap() >= 0.99);
}
