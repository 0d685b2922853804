//! Populations of defendants run through repeated assessments, with an
//! optional per-group decision bias.
//!
//! A group's bias shifts the probability used for each decision draw; the
//! urn itself is always updated from the realized classification. Defendant
//! `d` draws from stream `d` of the master seed, so results are identical
//! for any thread count.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::rng;
use crate::urn::{self, Classification, DefendantTrajectory, UrnParameters};

const FRACTION_TOLERANCE: f64 = 1e-9;
const CHUNK: usize = 2048;

/// `clamp(p + delta, 0, 1)`.
#[inline]
pub fn apply_bias(p: f64, delta: f64) -> f64 {
    (p + delta).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSpec {
    pub name: String,
    pub fraction: f64,
    #[serde(default)]
    pub bias: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_override: Option<UrnParameters>,
}

impl GroupSpec {
    pub fn new(name: impl Into<String>, fraction: f64, bias: f64) -> Self {
        GroupSpec {
            name: name.into(),
            fraction,
            bias,
            initial_override: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortConfig {
    pub population: usize,
    pub horizon: usize,
    pub params: UrnParameters,
    pub groups: Vec<GroupSpec>,
    pub master_seed: u64,
    pub record_full_paths: bool,
}

impl CohortConfig {
    /// One unbiased group.
    pub fn single_group(population: usize, horizon: usize, params: UrnParameters, seed: u64) -> Self {
        CohortConfig {
            population,
            horizon,
            params,
            groups: vec![GroupSpec::new("all", 1.0, 0.0)],
            master_seed: seed,
            record_full_paths: true,
        }
    }

    /// Two equally sized groups `a` and `b` with the given biases.
    pub fn two_groups(
        per_group: usize,
        horizon: usize,
        params: UrnParameters,
        bias_a: f64,
        bias_b: f64,
        seed: u64,
    ) -> Self {
        CohortConfig {
            population: 2 * per_group,
            horizon,
            params,
            groups: vec![GroupSpec::new("a", 0.5, bias_a), GroupSpec::new("b", 0.5, bias_b)],
            master_seed: seed,
            record_full_paths: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.population < 2 {
            return Err(Error::config("cohort.population", "must be at least 2"));
        }
        if self.horizon < 1 {
            return Err(Error::config("cohort.horizon", "must be at least 1"));
        }
        if self.groups.is_empty() {
            return Err(Error::config("groups", "at least one group is required"));
        }
        for (i, g) in self.groups.iter().enumerate() {
            let field = |f: &str| format!("groups[{i}].{f}");
            if g.name.trim().is_empty() {
                return Err(Error::config(field("name"), "must not be empty"));
            }
            if self.groups[..i].iter().any(|o| o.name == g.name) {
                return Err(Error::config(field("name"), format!("duplicate group name `{}`", g.name)));
            }
            if !(g.fraction > 0.0 && g.fraction <= 1.0) {
                return Err(Error::config(field("fraction"), format!("{} not in (0, 1]", g.fraction)));
            }
            if !(g.bias > -1.0 && g.bias < 1.0) {
                return Err(Error::config(field("bias"), format!("{} not in (-1, 1)", g.bias)));
            }
        }
        let total: f64 = self.groups.iter().map(|g| g.fraction).sum();
        if (total - 1.0).abs() > FRACTION_TOLERANCE {
            return Err(Error::config("groups", format!("fractions sum to {total}, expected 1")));
        }
        for (i, size) in self.group_sizes().into_iter().enumerate() {
            if size == 0 {
                return Err(Error::config(
                    format!("groups[{i}].fraction"),
                    "group receives no defendants",
                ));
            }
        }
        Ok(())
    }

    /// Group sizes under deterministic proportional allocation: group `g`
    /// ends at `ceil(N * (f_1 + ... + f_g))`, the last group at `N`.
    pub fn group_sizes(&self) -> Vec<usize> {
        let n = self.population;
        let mut sizes = Vec::with_capacity(self.groups.len());
        let mut start = 0usize;
        let mut cumulative = 0.0;
        for (i, g) in self.groups.iter().enumerate() {
            cumulative += g.fraction;
            let end = if i + 1 == self.groups.len() {
                n
            } else {
                ((cumulative * n as f64 - FRACTION_TOLERANCE).ceil().max(0.0) as usize).clamp(start, n)
            };
            sizes.push(end - start);
            start = end;
        }
        sizes
    }

    pub fn group_params(&self, group: usize) -> &UrnParameters {
        self.groups[group].initial_override.as_ref().unwrap_or(&self.params)
    }
}

/// Outcome of one defendant. `path` is present when full paths are recorded.
#[derive(Debug, Clone, PartialEq)]
pub struct DefendantRecord {
    pub group: usize,
    pub high_count: u64,
    pub path: Option<Vec<Classification>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CohortResult {
    config: CohortConfig,
    ranges: Vec<Range<usize>>,
    defendants: Vec<DefendantRecord>,
}

impl CohortResult {
    /// Reassembles a result, checking it against `config`.
    pub fn from_parts(config: CohortConfig, defendants: Vec<DefendantRecord>) -> Result<Self> {
        config.validate()?;
        let ranges = group_ranges(&config);
        if defendants.len() != config.population {
            return Err(Error::Domain(format!(
                "{} defendants for population {}",
                defendants.len(),
                config.population
            )));
        }
        for (g, range) in ranges.iter().enumerate() {
            for d in range.clone() {
                let rec = &defendants[d];
                if rec.group != g {
                    return Err(Error::Domain(format!("defendant {d} belongs to group {g}")));
                }
                if rec.high_count > config.horizon as u64 {
                    return Err(Error::Domain(format!("defendant {d} has too many high-risk draws")));
                }
                if let Some(path) = &rec.path {
                    let ones = path.iter().filter(|x| x.is_high()).count() as u64;
                    if path.len() != config.horizon || ones != rec.high_count {
                        return Err(Error::Domain(format!("defendant {d} path inconsistent")));
                    }
                }
                if config.record_full_paths != rec.path.is_some() {
                    return Err(Error::Domain(format!("defendant {d} path storage mismatch")));
                }
            }
        }
        Ok(CohortResult {
            config,
            ranges,
            defendants,
        })
    }

    pub fn config(&self) -> &CohortConfig {
        &self.config
    }

    pub fn len(&self) -> usize {
        self.defendants.len()
    }

    pub fn is_empty(&self) -> bool {
        self.defendants.is_empty()
    }

    pub fn horizon(&self) -> usize {
        self.config.horizon
    }

    pub fn has_full_paths(&self) -> bool {
        self.config.record_full_paths
    }

    pub fn defendants(&self) -> &[DefendantRecord] {
        &self.defendants
    }

    pub fn group_count(&self) -> usize {
        self.config.groups.len()
    }

    /// Defendant indices of group `g`.
    pub fn group_members(&self, g: usize) -> Range<usize> {
        self.ranges[g].clone()
    }

    pub fn group_index(&self, d: usize) -> usize {
        self.defendants[d].group
    }

    pub fn group_of(&self, d: usize) -> &str {
        &self.config.groups[self.defendants[d].group].name
    }

    pub fn params_of(&self, d: usize) -> &UrnParameters {
        self.config.group_params(self.defendants[d].group)
    }

    /// Probability after all decisions.
    pub fn endpoint(&self, d: usize) -> f64 {
        let rec = &self.defendants[d];
        self.params_of(d).probability_after(rec.high_count, self.config.horizon as u64)
    }

    pub fn endpoints(&self) -> Vec<f64> {
        (0..self.len()).map(|d| self.endpoint(d)).collect()
    }

    pub fn group_endpoints(&self, g: usize) -> Vec<f64> {
        self.group_members(g).map(|d| self.endpoint(d)).collect()
    }

    /// Number of high-risk decisions among the first `t`.
    pub fn high_count_at(&self, d: usize, t: usize) -> Result<u64> {
        let rec = &self.defendants[d];
        if t > self.config.horizon {
            return Err(Error::TimeOutOfRange {
                time: t,
                horizon: self.config.horizon,
            });
        }
        if t == self.config.horizon {
            return Ok(rec.high_count);
        }
        if t == 0 {
            return Ok(0);
        }
        let path = rec.path.as_ref().ok_or(Error::FullPathsRequired)?;
        Ok(path[..t].iter().filter(|x| x.is_high()).count() as u64)
    }

    /// Probability after `t` decisions, `0 <= t <= T`.
    pub fn probability_at(&self, d: usize, t: usize) -> Result<f64> {
        let h = self.high_count_at(d, t)?;
        Ok(self.params_of(d).probability_after(h, t as u64))
    }

    /// Classification at decision `t` (1-based).
    pub fn classification_at(&self, d: usize, t: usize) -> Result<Classification> {
        if t == 0 || t > self.config.horizon {
            return Err(Error::TimeOutOfRange {
                time: t,
                horizon: self.config.horizon,
            });
        }
        let path = self.defendants[d].path.as_ref().ok_or(Error::FullPathsRequired)?;
        Ok(path[t - 1])
    }

    pub fn trajectory(&self, d: usize) -> Result<DefendantTrajectory> {
        let path = self.defendants[d].path.clone().ok_or(Error::FullPathsRequired)?;
        Ok(DefendantTrajectory::from_classifications(
            *self.params_of(d),
            path,
            self.config.master_seed,
            d as u64,
        ))
    }
}

fn group_ranges(config: &CohortConfig) -> Vec<Range<usize>> {
    let mut start = 0;
    config
        .group_sizes()
        .into_iter()
        .map(|size| {
            let r = start..start + size;
            start += size;
            r
        })
        .collect()
}

pub fn run_cohort(config: &CohortConfig) -> Result<CohortResult> {
    run_cohort_with(config, Execution::default())
}

pub fn run_cohort_with(config: &CohortConfig, execution: Execution) -> Result<CohortResult> {
    config.validate()?;
    let ranges = group_ranges(config);
    let group_of: Vec<usize> = ranges
        .iter()
        .enumerate()
        .flat_map(|(g, r)| r.clone().map(move |_| g))
        .collect();
    let horizon = config.horizon;
    let defendants = exec::map_indices(execution, config.population, |d| {
        let group = group_of[d];
        let spec = &config.groups[group];
        let mut rng = rng::stream_rng(config.master_seed, d as u64);
        let mut path = config.record_full_paths.then(|| Vec::with_capacity(horizon));
        let last = urn::drive(config.group_params(group), horizon, spec.bias, &mut rng, |_, x| {
            if let Some(p) = path.as_mut() {
                p.push(x);
            }
        });
        DefendantRecord {
            group,
            high_count: last.blue_draws(),
            path,
        }
    });
    Ok(CohortResult {
        config: config.clone(),
        ranges,
        defendants,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSnapshot {
    pub name: String,
    pub count: usize,
    pub above_threshold: usize,
    pub fraction_above: f64,
    pub mean_probability: f64,
}

/// Difference `b - a` between two groups at one time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairDisparity {
    pub group_a: String,
    pub group_b: String,
    pub gap: f64,
    pub se: f64,
    pub mean_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisparityRecord {
    pub time: usize,
    pub threshold: f64,
    pub groups: Vec<GroupSnapshot>,
    pub pairs: Vec<PairDisparity>,
}

impl DisparityRecord {
    pub fn pair(&self, a: &str, b: &str) -> Option<&PairDisparity> {
        self.pairs.iter().find(|p| p.group_a == a && p.group_b == b)
    }
}

fn check_threshold(threshold: f64) -> Result<()> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::Domain(format!("threshold {threshold} not in (0, 1)")));
    }
    Ok(())
}

/// Per-group tallies at one time.
#[derive(Debug, Clone, Copy, Default)]
struct Tally {
    above: u64,
    high: u64,
}

fn build_record(result: &CohortResult, time: usize, threshold: f64, tallies: &[Tally]) -> DisparityRecord {
    let groups: Vec<GroupSnapshot> = tallies
        .iter()
        .enumerate()
        .map(|(g, tally)| {
            let count = result.ranges[g].len();
            let params = result.config.group_params(g);
            let mean_high = tally.high as f64 / count as f64;
            let mean_probability = (params.blue_initial() + params.increment() * mean_high)
                / params.mass_after(time as u64);
            GroupSnapshot {
                name: result.config.groups[g].name.clone(),
                count,
                above_threshold: tally.above as usize,
                fraction_above: tally.above as f64 / count as f64,
                mean_probability,
            }
        })
        .collect();
    let mut pairs = Vec::new();
    for i in 0..groups.len() {
        for j in i + 1..groups.len() {
            let (a, b) = (&groups[i], &groups[j]);
            let var = |s: &GroupSnapshot| s.fraction_above * (1.0 - s.fraction_above) / s.count as f64;
            pairs.push(PairDisparity {
                group_a: a.name.clone(),
                group_b: b.name.clone(),
                gap: b.fraction_above - a.fraction_above,
                se: (var(a) + var(b)).sqrt(),
                mean_gap: b.mean_probability - a.mean_probability,
            });
        }
    }
    DisparityRecord {
        time,
        threshold,
        groups,
        pairs,
    }
}

/// Threshold fractions and mean probabilities per group after `time`
/// decisions, plus pairwise statistical parity gaps.
pub fn group_disparity(result: &CohortResult, time: usize, threshold: f64) -> Result<DisparityRecord> {
    check_threshold(threshold)?;
    if time < 1 || time > result.horizon() {
        return Err(Error::TimeOutOfRange {
            time,
            horizon: result.horizon(),
        });
    }
    let mut tallies = vec![Tally::default(); result.group_count()];
    for d in 0..result.len() {
        let h = result.high_count_at(d, time)?;
        let t = &mut tallies[result.group_index(d)];
        t.high += h;
        if result.params_of(d).probability_after(h, time as u64) >= threshold {
            t.above += 1;
        }
    }
    Ok(build_record(result, time, threshold, &tallies))
}

/// [`group_disparity`] at every `t` in `1..=T`.
pub fn disparity_curve(result: &CohortResult, threshold: f64) -> Result<Vec<DisparityRecord>> {
    disparity_curve_with(result, threshold, Execution::default())
}

pub fn disparity_curve_with(
    result: &CohortResult,
    threshold: f64,
    execution: Execution,
) -> Result<Vec<DisparityRecord>> {
    check_threshold(threshold)?;
    if !result.has_full_paths() {
        return Err(Error::FullPathsRequired);
    }
    let horizon = result.horizon();
    let groups = result.group_count();
    // tallies[g * horizon + (t - 1)]
    let tallies = exec::fold_chunks(
        execution,
        &result.defendants,
        CHUNK,
        || vec![Tally::default(); groups * horizon],
        |acc, d, rec| {
            let params = result.params_of(d);
            let row = &mut acc[rec.group * horizon..(rec.group + 1) * horizon];
            let path = rec.path.as_deref().unwrap_or_default();
            let mut high = 0u64;
            for (i, x) in path.iter().enumerate() {
                high += u64::from(x.as_u8());
                let t = i as u64 + 1;
                row[i].high += high;
                if params.probability_after(high, t) >= threshold {
                    row[i].above += 1;
                }
            }
        },
        |mut a, b| {
            for (x, y) in a.iter_mut().zip(b) {
                x.above += y.above;
                x.high += y.high;
            }
            a
        },
    );
    Ok((1..=horizon)
        .map(|t| {
            let at: Vec<Tally> = (0..groups).map(|g| tallies[g * horizon + t - 1]).collect();
            build_record(result, t, threshold, &at)
        })
        .collect())
}
