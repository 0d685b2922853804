//! One-shot validation metrics on simulated cohorts, and their contrast
//! with disparities that build up over repeated decisions.
//!
//! A snapshot at time `t` scores each defendant by the probability after
//! `t` decisions and counts a failure when any of the next `h` decisions is
//! high-risk.

use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::cohort::{self, CohortConfig, CohortResult, DisparityRecord};
use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::rng;

pub const MIN_POWER_REPETITIONS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnapshotSpec {
    pub time: usize,
    pub lookahead: usize,
    pub bins: usize,
    pub threshold: f64,
}

impl SnapshotSpec {
    pub fn validate(&self, horizon: usize) -> Result<()> {
        if self.time < 1 {
            return Err(Error::config("snapshot.time", "must be at least 1"));
        }
        if self.lookahead < 1 {
            return Err(Error::config("snapshot.lookahead", "must be at least 1"));
        }
        if self.bins < 2 {
            return Err(Error::config("snapshot.bins", "must be at least 2"));
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::config("snapshot.threshold", "must lie in (0, 1)"));
        }
        if self.time + self.lookahead > horizon {
            return Err(Error::LookaheadExceedsHorizon {
                time: self.time,
                lookahead: self.lookahead,
                horizon,
            });
        }
        Ok(())
    }

    fn bin_of(&self, score: f64) -> usize {
        ((score * self.bins as f64) as usize).min(self.bins - 1)
    }
}

/// Mann–Whitney probability that a random positive outscores a random
/// negative, ties counting one half.
pub fn auc(scores: &[f64], outcomes: &[bool]) -> Result<f64> {
    if scores.len() != outcomes.len() {
        return Err(Error::LengthMismatch(scores.len(), outcomes.len()));
    }
    let positives = outcomes.iter().filter(|&&o| o).count() as u128;
    let negatives = outcomes.len() as u128 - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::AucUndefined);
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::Domain("NaN score".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // twice the rank sum of positives, using mid-ranks for ties
    let mut doubled_rank_sum: u128 = 0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        let ties = (end - start) as u128;
        let pos_in_block = order[start..end].iter().filter(|&&i| outcomes[i]).count() as u128;
        doubled_rank_sum += pos_in_block * (2 * start as u128 + ties + 1);
        start = end;
    }
    let doubled_u = doubled_rank_sum - positives * (positives + 1);
    Ok(doubled_u as f64 / (2 * positives * negatives) as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinSummary {
    pub lower: f64,
    pub upper: f64,
    pub count: usize,
    pub mean_score: Option<f64>,
    pub observed_rate: Option<f64>,
    /// Binomial standard error of the observed rate at the bin's mean score.
    pub se: Option<f64>,
}

impl BinSummary {
    pub fn calibration_gap(&self) -> Option<f64> {
        Some((self.mean_score? - self.observed_rate?).abs())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupValidation {
    pub name: String,
    pub count: usize,
    pub auc: Option<f64>,
    pub bins: Vec<BinSummary>,
    pub fraction_above: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub spec: SnapshotSpec,
    pub bins: Vec<BinSummary>,
    pub auc: f64,
    pub calibration_gap: f64,
    pub groups: Vec<GroupValidation>,
    pub statistical_parity_gap: f64,
    pub predictive_parity_gap: f64,
}

fn summarize_bins(spec: &SnapshotSpec, scores: &[f64], outcomes: &[bool]) -> Vec<BinSummary> {
    let mut count = vec![0usize; spec.bins];
    let mut score_sum = vec![0.0f64; spec.bins];
    let mut failures = vec![0usize; spec.bins];
    for (&s, &o) in scores.iter().zip(outcomes) {
        let b = spec.bin_of(s);
        count[b] += 1;
        score_sum[b] += s;
        failures[b] += usize::from(o);
    }
    (0..spec.bins)
        .map(|b| {
            let n = count[b];
            let mean = (n > 0).then(|| score_sum[b] / n as f64);
            BinSummary {
                lower: b as f64 / spec.bins as f64,
                upper: (b + 1) as f64 / spec.bins as f64,
                count: n,
                mean_score: mean,
                observed_rate: (n > 0).then(|| failures[b] as f64 / n as f64),
                se: mean.map(|m| (m * (1.0 - m) / n as f64).sqrt()),
            }
        })
        .collect()
}

fn max_calibration_gap(bins: &[BinSummary]) -> f64 {
    bins.iter()
        .filter_map(BinSummary::calibration_gap)
        .fold(0.0, f64::max)
}

fn max_pairwise_spread(values: impl IntoIterator<Item = f64>) -> f64 {
    let (lo, hi) = values
        .into_iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if hi >= lo {
        hi - lo
    } else {
        0.0
    }
}

/// One-shot validation of the scores at `spec.time` against failures in
/// the following `spec.lookahead` decisions.
pub fn snapshot_validation(result: &CohortResult, spec: &SnapshotSpec) -> Result<ValidationReport> {
    if !result.has_full_paths() {
        return Err(Error::FullPathsRequired);
    }
    spec.validate(result.horizon())?;
    let t = spec.time;
    let rows: Vec<(f64, bool)> = exec::map_indices(Execution::default(), result.len(), |d| {
        let score = result.probability_at(d, t).expect("full path");
        let path = result.defendants()[d].path.as_deref().expect("full path");
        let failed = path[t..t + spec.lookahead].iter().any(|x| x.is_high());
        (score, failed)
    });
    let (scores, outcomes): (Vec<f64>, Vec<bool>) = rows.into_iter().unzip();

    let bins = summarize_bins(spec, &scores, &outcomes);
    let overall_auc = auc(&scores, &outcomes)?;
    let calibration_gap = max_calibration_gap(&bins);

    let groups: Vec<GroupValidation> = (0..result.group_count())
        .map(|g| {
            let range = result.group_members(g);
            let (s, o) = (&scores[range.clone()], &outcomes[range.clone()]);
            let above = s.iter().filter(|&&p| p >= spec.threshold).count();
            GroupValidation {
                name: result.config().groups[g].name.clone(),
                count: range.len(),
                auc: auc(s, o).ok(),
                bins: summarize_bins(spec, s, o),
                fraction_above: above as f64 / range.len() as f64,
            }
        })
        .collect();

    let statistical_parity_gap = max_pairwise_spread(groups.iter().map(|g| g.fraction_above));
    let predictive_parity_gap = (0..spec.bins)
        .filter_map(|b| {
            let rates: Option<Vec<f64>> = groups.iter().map(|g| g.bins[b].observed_rate).collect();
            rates.map(max_pairwise_spread)
        })
        .fold(0.0, f64::max);

    Ok(ValidationReport {
        spec: *spec,
        bins,
        auc: overall_auc,
        calibration_gap,
        groups,
        statistical_parity_gap,
        predictive_parity_gap,
    })
}

/// Pooled two-proportion z-test. Returns `(z, two-sided p-value)`.
pub fn two_proportion_z_test(x1: usize, n1: usize, x2: usize, n2: usize) -> (f64, f64) {
    let (n1f, n2f) = (n1 as f64, n2 as f64);
    let pooled = (x1 + x2) as f64 / (n1f + n2f);
    let se = (pooled * (1.0 - pooled) * (1.0 / n1f + 1.0 / n2f)).sqrt();
    if se == 0.0 {
        return (0.0, 1.0);
    }
    let z = (x2 as f64 / n2f - x1 as f64 / n1f) / se;
    (z, erfc(z.abs() / std::f64::consts::SQRT_2))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerEstimate {
    pub power: f64,
    pub rejections: usize,
    pub repetitions: usize,
    pub alpha: f64,
}

/// Probability that a two-proportion z-test on above-threshold rates at
/// `spec.time` detects the difference between the two groups of `config`.
pub fn one_shot_power(
    config: &CohortConfig,
    spec: &SnapshotSpec,
    repetitions: usize,
    alpha: f64,
) -> Result<f64> {
    Ok(one_shot_power_estimate(config, spec, repetitions, alpha, Execution::default())?.power)
}

/// Repetition `r` reruns `config` under master seed
/// `derive_seed(config.master_seed, r)`.
pub fn one_shot_power_estimate(
    config: &CohortConfig,
    spec: &SnapshotSpec,
    repetitions: usize,
    alpha: f64,
    execution: Execution,
) -> Result<PowerEstimate> {
    if repetitions < MIN_POWER_REPETITIONS {
        return Err(Error::TooFewRepetitions(repetitions));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!("alpha {alpha} not in (0, 1)")));
    }
    if config.groups.len() != 2 {
        return Err(Error::config("groups", "detection power needs exactly two groups"));
    }
    config.validate()?;
    if spec.time < 1 || spec.time > config.horizon {
        return Err(Error::TimeOutOfRange {
            time: spec.time,
            horizon: config.horizon,
        });
    }
    if !(spec.threshold > 0.0 && spec.threshold < 1.0) {
        return Err(Error::config("snapshot.threshold", "must lie in (0, 1)"));
    }
    // only the prefix up to the snapshot matters, and prefixes do not
    // depend on the horizon
    let mut base = config.clone();
    base.horizon = spec.time;
    base.record_full_paths = false;

    let rejected = exec::map_indices(execution, repetitions, |r| -> Result<bool> {
        let mut cfg = base.clone();
        cfg.master_seed = rng::derive_seed(config.master_seed, r as u64);
        let result = cohort::run_cohort_with(&cfg, Execution::Sequential)?;
        let rec = cohort::group_disparity(&result, spec.time, spec.threshold)?;
        let (a, b) = (&rec.groups[0], &rec.groups[1]);
        let (_, p) = two_proportion_z_test(a.above_threshold, a.count, b.above_threshold, b.count);
        Ok(p < alpha)
    });
    let mut rejections = 0;
    for r in rejected {
        rejections += usize::from(r?);
    }
    Ok(PowerEstimate {
        power: rejections as f64 / repetitions as f64,
        rejections,
        repetitions,
        alpha,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapSettings {
    pub resamples: usize,
    pub confidence: f64,
    pub seed: u64,
}

impl Default for BootstrapSettings {
    fn default() -> Self {
        BootstrapSettings {
            resamples: 1000,
            confidence: 0.99,
            seed: 0,
        }
    }
}

/// Change in the statistical parity gap of one group pair between the
/// snapshot time and the final time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairAmplification {
    pub group_a: String,
    pub group_b: String,
    pub snapshot_time: usize,
    pub final_time: usize,
    pub snapshot_gap: f64,
    pub final_gap: f64,
    #[serde(with = "float_repr")]
    pub ratio: f64,
    #[serde(with = "float_repr")]
    pub ratio_lower: f64,
    #[serde(with = "float_repr")]
    pub ratio_upper: f64,
    /// Fraction of bootstrap resamples where `|final_gap| > |snapshot_gap|`.
    pub amplification_confidence: f64,
}

impl PairAmplification {
    pub fn ratio_ci_covers(&self, value: f64) -> bool {
        self.ratio_lower <= value && value <= self.ratio_upper
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmplificationReport {
    /// Absent when the snapshot's lookahead window does not fit in the horizon.
    pub snapshot: Option<ValidationReport>,
    pub curve: Vec<DisparityRecord>,
    pub pairs: Vec<PairAmplification>,
    pub bootstrap: BootstrapSettings,
}

/// Snapshot report, full disparity curve and, for every group pair, the
/// ratio of final-time to snapshot-time parity gap with a percentile
/// bootstrap interval.
pub fn amplification_report(
    result: &CohortResult,
    spec: &SnapshotSpec,
    bootstrap: &BootstrapSettings,
) -> Result<AmplificationReport> {
    if !result.has_full_paths() {
        return Err(Error::FullPathsRequired);
    }
    if result.group_count() < 2 {
        return Err(Error::config("groups", "amplification needs at least two groups"));
    }
    if bootstrap.resamples < 1 {
        return Err(Error::config("amplify.resamples", "must be at least 1"));
    }
    if !(bootstrap.confidence > 0.0 && bootstrap.confidence < 1.0) {
        return Err(Error::config("amplify.confidence", "must lie in (0, 1)"));
    }
    let horizon = result.horizon();
    if spec.time < 1 || spec.time > horizon {
        return Err(Error::TimeOutOfRange {
            time: spec.time,
            horizon,
        });
    }
    let snapshot = match snapshot_validation(result, spec) {
        Ok(report) => Some(report),
        Err(Error::LookaheadExceedsHorizon { .. }) => None,
        Err(e) => return Err(e),
    };
    let curve = cohort::disparity_curve(result, spec.threshold)?;

    let groups = result.group_count();
    let mut pairs = Vec::new();
    let mut pair_index = 0u64;
    for a in 0..groups {
        for b in a + 1..groups {
            pairs.push(pair_amplification(result, spec, bootstrap, a, b, pair_index));
            pair_index += 1;
        }
    }
    Ok(AmplificationReport {
        snapshot,
        curve,
        pairs,
        bootstrap: *bootstrap,
    })
}

/// Defendants of one group split by (above at snapshot, above at final):
/// index `2 * above_snapshot + above_final`.
fn crossing_counts(result: &CohortResult, g: usize, t: usize, threshold: f64) -> [u64; 4] {
    let mut counts = [0u64; 4];
    for d in result.group_members(g) {
        let at = |time| result.probability_at(d, time).expect("full path") >= threshold;
        let cell = 2 * usize::from(at(t)) + usize::from(at(result.horizon()));
        counts[cell] += 1;
    }
    counts
}

fn fractions(counts: &[u64; 4]) -> (f64, f64) {
    let n = counts.iter().sum::<u64>() as f64;
    ((counts[2] + counts[3]) as f64 / n, (counts[1] + counts[3]) as f64 / n)
}

fn multinomial(rng: &mut ChaCha8Rng, counts: &[u64; 4]) -> [u64; 4] {
    let mut remaining_n: u64 = counts.iter().sum();
    let mut remaining_mass = remaining_n;
    let mut out = [0u64; 4];
    for (i, &c) in counts.iter().enumerate() {
        if remaining_n == 0 || remaining_mass == 0 {
            break;
        }
        let draw = if i == 3 || c == remaining_mass {
            remaining_n
        } else {
            let p = c as f64 / remaining_mass as f64;
            Binomial::new(remaining_n, p).expect("valid binomial").sample(rng)
        };
        out[i] = draw;
        remaining_n -= draw;
        remaining_mass -= c;
    }
    out
}

fn gap_ratio(final_gap: f64, snapshot_gap: f64) -> f64 {
    if snapshot_gap == 0.0 && final_gap == 0.0 {
        1.0
    } else {
        final_gap / snapshot_gap
    }
}

fn percentile(sorted: &[f64], q: f64) -> f64 {
    let idx = ((sorted.len() as f64 * q).ceil() as usize).clamp(1, sorted.len()) - 1;
    sorted[idx]
}

fn pair_amplification(
    result: &CohortResult,
    spec: &SnapshotSpec,
    bootstrap: &BootstrapSettings,
    a: usize,
    b: usize,
    pair_index: u64,
) -> PairAmplification {
    let names = &result.config().groups;
    let t = spec.time;
    let horizon = result.horizon();
    let ca = crossing_counts(result, a, t, spec.threshold);
    let cb = crossing_counts(result, b, t, spec.threshold);
    let gaps = |ca: &[u64; 4], cb: &[u64; 4]| {
        let (at, af) = fractions(ca);
        let (bt, bf) = fractions(cb);
        (bt - at, bf - af)
    };
    let (snapshot_gap, final_gap) = gaps(&ca, &cb);

    let base = PairAmplification {
        group_a: names[a].name.clone(),
        group_b: names[b].name.clone(),
        snapshot_time: t,
        final_time: horizon,
        snapshot_gap,
        final_gap,
        ratio: 1.0,
        ratio_lower: 1.0,
        ratio_upper: 1.0,
        amplification_confidence: 0.0,
    };
    if t == horizon {
        return base;
    }

    let mut rng = rng::stream_rng(bootstrap.seed, pair_index);
    let mut ratios = Vec::with_capacity(bootstrap.resamples);
    let mut amplified = 0usize;
    for _ in 0..bootstrap.resamples {
        let ra = multinomial(&mut rng, &ca);
        let rb = multinomial(&mut rng, &cb);
        let (st, fi) = gaps(&ra, &rb);
        ratios.push(gap_ratio(fi, st));
        amplified += usize::from(fi.abs() > st.abs());
    }
    ratios.sort_by(f64::total_cmp);
    let tail = (1.0 - bootstrap.confidence) / 2.0;
    PairAmplification {
        ratio: gap_ratio(final_gap, snapshot_gap),
        ratio_lower: percentile(&ratios, tail),
        ratio_upper: percentile(&ratios, 1.0 - tail),
        amplification_confidence: amplified as f64 / bootstrap.resamples as f64,
        ..base
    }
}

/// Serializes non-finite floats as the strings `inf`, `-inf` and `NaN`.
mod float_repr {
    use serde::de::{self, Visitor};
    use serde::{Deserializer, Serializer};
    use std::fmt;

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if v.is_nan() {
            s.serialize_str("NaN")
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    struct FloatVisitor;

    impl Visitor<'_> for FloatVisitor {
        type Value = f64;

        fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
            f.write_str("a number or one of \"inf\", \"-inf\", \"NaN\"")
        }

        fn visit_f64<E: de::Error>(self, v: f64) -> Result<f64, E> {
            Ok(v)
        }

        fn visit_i64<E: de::Error>(self, v: i64) -> Result<f64, E> {
            Ok(v as f64)
        }

        fn visit_u64<E: de::Error>(self, v: u64) -> Result<f64, E> {
            Ok(v as f64)
        }

        fn visit_str<E: de::Error>(self, v: &str) -> Result<f64, E> {
            match v {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "NaN" => Ok(f64::NAN),
                other => Err(E::invalid_value(de::Unexpected::Str(other), &self)),
            }
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        d.deserialize_any(FloatVisitor)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::urn::UrnParameters;

    #[test]
    fn auc_examples() {
        let a = auc(&[0.9, 0.8, 0.1, 0.2], &[true, true, false, false]).unwrap();
        assert_eq!(a, 1.0);
        assert_eq!(auc(&[0.3; 5], &[true, false, true, false, false]).unwrap(), 0.5);
        assert_eq!(auc(&[0.9, 0.4, 0.6], &[true, true, false]).unwrap(), 0.5);
        assert_eq!(auc(&[0.1, 0.2], &[true, true]), Err(Error::AucUndefined));
        assert_eq!(auc(&[0.1], &[true, false]), Err(Error::LengthMismatch(1, 2)));
    }

    #[test]
    fn auc_matches_pair_count() {
        let scores = [0.1, 0.5, 0.5, 0.7, 0.2, 0.5, 0.9, 0.3];
        let outcomes = [false, true, false, true, true, false, true, false];
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..scores.len() {
            for j in 0..scores.len() {
                if outcomes[i] && !outcomes[j] {
                    den += 1.0;
                    num += match scores[i].partial_cmp(&scores[j]).unwrap() {
                        std::cmp::Ordering::Greater => 1.0,
                        std::cmp::Ordering::Equal => 0.5,
                        std::cmp::Ordering::Less => 0.0,
                    };
                }
            }
        }
        assert_eq!(auc(&scores, &outcomes).unwrap(), num / den);
    }

    #[test]
    fn snapshot_spec_checks() {
        let spec = SnapshotSpec {
            time: 3,
            lookahead: 2,
            bins: 10,
            threshold: 0.5,
        };
        assert!(spec.validate(5).is_ok());
        assert!(matches!(spec.validate(4), Err(Error::LookaheadExceedsHorizon { .. })));
        assert!(SnapshotSpec { bins: 1, ..spec }.validate(10).is_err());
        assert!(SnapshotSpec { time: 0, ..spec }.validate(10).is_err());
        assert_eq!(spec.bin_of(1.0), 9);
        assert_eq!(spec.bin_of(0.0), 0);
        assert_eq!(spec.bin_of(0.55), 5);
    }

    #[test]
    fn z_test_basics() {
        let (z, p) = two_proportion_z_test(50, 100, 50, 100);
        assert_eq!(z, 0.0);
        assert!((p - 1.0).abs() < 1e-12);
        let (_, p) = two_proportion_z_test(0, 10, 0, 10);
        assert_eq!(p, 1.0);
        // z = 1.959964 → p ≈ 0.05
        let (z, p) = two_proportion_z_test(400, 1000, 444, 1000);
        assert!(z > 1.9 && z < 2.1, "{z}");
        assert!(p > 0.03 && p < 0.06, "{p}");
    }

    #[test]
    fn power_argument_checks() {
        let c = CohortConfig::two_groups(50, 3, UrnParameters::CLASSIC, 0.0, 0.0, 1);
        let spec = SnapshotSpec {
            time: 1,
            lookahead: 1,
            bins: 10,
            threshold: 0.5,
        };
        assert_eq!(one_shot_power(&c, &spec, 19, 0.05), Err(Error::TooFewRepetitions(19)));
        let single = CohortConfig::single_group(50, 3, UrnParameters::CLASSIC, 1);
        assert!(one_shot_power(&single, &spec, 20, 0.05).is_err());
    }

    #[test]
    fn multinomial_preserves_total() {
        let mut rng = rng::stream_rng(4, 0);
        for counts in [[5, 0, 0, 7], [0, 0, 0, 3], [1, 2, 3, 4]] {
            let r = multinomial(&mut rng, &counts);
            assert_eq!(r.iter().sum::<u64>(), counts.iter().sum::<u64>());
            for (x, c) in r.iter().zip(&counts) {
                if *c == 0 {
                    assert_eq!(*x, 0);
                }
            }
        }
    }

    #[test]
    fn horizon_one_ratio_is_exactly_one() {
        let c = CohortConfig::two_groups(100, 1, UrnParameters::CLASSIC, 0.0, 0.2, 3);
        let r = cohort::run_cohort(&c).unwrap();
        let spec = SnapshotSpec {
            time: 1,
            lookahead: 1,
            bins: 4,
            threshold: 0.5,
        };
        let rep = amplification_report(&r, &spec, &BootstrapSettings::default()).unwrap();
        assert!(rep.snapshot.is_none());
        assert_eq!(rep.curve.len(), 1);
        assert_eq!(rep.pairs[0].ratio, 1.0);
        assert!(rep.pairs[0].ratio_ci_covers(1.0));
    }

    #[test]
    fn non_finite_ratio_round_trips() {
        #[derive(Debug, PartialEq, Serialize, Deserialize)]
        struct W(#[serde(with = "float_repr")] f64);
        for v in [f64::INFINITY, f64::NEG_INFINITY, 2.5, -0.125] {
            let text = serde_json::to_string(&W(v)).unwrap();
            assert_eq!(serde_json::from_str::<W>(&text).unwrap(), W(v));
        }
        assert_eq!(serde_json::to_string(&W(f64::INFINITY)).unwrap(), "\"inf\"");
    }
}
