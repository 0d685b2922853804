//! Single-defendant reinforced scoring process.
//!
//! Each assessment classifies the defendant high-risk with the current
//! probability `p`, and the realized classification is folded back into `p`
//! as a weighted average. The same process is a generalized Pólya urn: start
//! with `blue_initial` high-risk mass and `red_initial` low-risk mass, draw
//! proportionally to mass, and add `increment` to the colour drawn.
//!
//! Masses are tracked as integer draw counts so that total mass after `i`
//! steps is exactly `n0 + i * k` and `p` is always recomputed from counts.

mod exact;

pub use exact::{enumerate_exact, exact_probability_after, exact_update_probability, ExactPath};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cohort::apply_bias;
use crate::error::{Error, Result};
use crate::rng;

/// Initial composition and reinforcement increment of one urn.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParameters")]
pub struct UrnParameters {
    blue_initial: f64,
    red_initial: f64,
    increment: f64,
}

#[derive(Deserialize)]
struct RawParameters {
    blue_initial: f64,
    red_initial: f64,
    increment: f64,
}

impl TryFrom<RawParameters> for UrnParameters {
    type Error = Error;

    fn try_from(raw: RawParameters) -> Result<Self> {
        UrnParameters::new(raw.blue_initial, raw.red_initial, raw.increment)
    }
}

impl UrnParameters {
    /// One ball of each colour, one ball added per draw.
    pub const CLASSIC: UrnParameters = UrnParameters {
        blue_initial: 1.0,
        red_initial: 1.0,
        increment: 1.0,
    };

    pub fn new(blue_initial: f64, red_initial: f64, increment: f64) -> Result<Self> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(blue_initial) || !positive(red_initial) {
            return Err(Error::InvalidComposition(format!(
                "blue_initial = {blue_initial}, red_initial = {red_initial}; both must be positive"
            )));
        }
        if !positive(increment) {
            return Err(Error::InvalidComposition(format!(
                "increment = {increment}; must be positive"
            )));
        }
        Ok(UrnParameters {
            blue_initial,
            red_initial,
            increment,
        })
    }

    /// Equal initial masses of 1 with the given increment.
    pub fn symmetric(increment: f64) -> Result<Self> {
        Self::new(1.0, 1.0, increment)
    }

    pub fn blue_initial(&self) -> f64 {
        self.blue_initial
    }

    pub fn red_initial(&self) -> f64 {
        self.red_initial
    }

    pub fn increment(&self) -> f64 {
        self.increment
    }

    /// `n0 = B0 + R0`.
    pub fn initial_mass(&self) -> f64 {
        self.blue_initial + self.red_initial
    }

    /// `n_j = n0 + j * k`.
    pub fn mass_after(&self, steps: u64) -> f64 {
        self.initial_mass() + steps as f64 * self.increment
    }

    pub fn is_classic(&self) -> bool {
        *self == Self::CLASSIC
    }

    /// High-risk probability after `steps` decisions of which `high` were
    /// high-risk.
    #[inline]
    pub fn probability_after(&self, high: u64, steps: u64) -> f64 {
        debug_assert!(high <= steps);
        (self.blue_initial + high as f64 * self.increment) / self.mass_after(steps)
    }
}

/// `p1 = B0 / (B0 + R0)`.
pub fn initial_probability(params: &UrnParameters) -> f64 {
    params.blue_initial / params.initial_mass()
}

/// Weight on the previous probability when producing `p_i`:
/// `n_{i-2} / (n_{i-2} + k)`. Defined for `i >= 2`.
pub fn gamma_weight(i: u64, params: &UrnParameters) -> Result<f64> {
    if i < 2 {
        return Err(Error::WeightUndefined(i));
    }
    let prior = params.mass_after(i - 2);
    Ok(prior / (prior + params.increment))
}

/// `i / (i + 1)`, the weight schedule of the unit urn (`B0 = R0 = k = 1`),
/// where it coincides with [`gamma_weight`] for `i >= 2`. Also defined at
/// `i = 1`, giving `1/2`.
pub fn classic_gamma(i: u64) -> Result<f64> {
    if i < 1 {
        return Err(Error::WeightUndefined(i));
    }
    Ok(i as f64 / (i as f64 + 1.0))
}

/// `p_i = γ_i p_{i-1} + (1 - γ_i) x_{i-1}`.
pub fn update_probability(
    p_prev: f64,
    x_prev: Classification,
    i: u64,
    params: &UrnParameters,
) -> Result<f64> {
    if !(0.0..=1.0).contains(&p_prev) {
        return Err(Error::Domain(format!("probability {p_prev} outside [0, 1]")));
    }
    let gamma = gamma_weight(i, params)?;
    let p = gamma * p_prev + (1.0 - gamma) * x_prev.as_f64();
    Ok(p.clamp(0.0, 1.0))
}

/// Outcome of one assessment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
#[repr(u8)]
pub enum Classification {
    #[default]
    Low = 0,
    High = 1,
}

impl Classification {
    pub fn is_high(self) -> bool {
        self == Classification::High
    }

    pub fn as_u8(self) -> u8 {
        self as u8
    }

    pub fn as_f64(self) -> f64 {
        f64::from(self as u8)
    }
}

impl From<bool> for Classification {
    fn from(high: bool) -> Self {
        if high {
            Classification::High
        } else {
            Classification::Low
        }
    }
}

impl TryFrom<u8> for Classification {
    type Error = Error;

    fn try_from(v: u8) -> Result<Self> {
        match v {
            0 => Ok(Classification::Low),
            1 => Ok(Classification::High),
            other => Err(Error::Domain(format!("classification must be 0 or 1, got {other}"))),
        }
    }
}

impl Serialize for Classification {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_u8(self.as_u8())
    }
}

impl<'de> Deserialize<'de> for Classification {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = u8::deserialize(d)?;
        Classification::try_from(v).map_err(serde::de::Error::custom)
    }
}

/// Urn composition after `step` decisions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UrnState {
    params: UrnParameters,
    blue_draws: u64,
    step: u64,
}

impl UrnState {
    pub fn new(params: UrnParameters) -> Self {
        UrnState {
            params,
            blue_draws: 0,
            step: 0,
        }
    }

    /// State after `step` decisions of which `blue_draws` were high-risk.
    pub fn from_draws(params: UrnParameters, blue_draws: u64, step: u64) -> Result<Self> {
        if blue_draws > step {
            return Err(Error::Domain(format!(
                "{blue_draws} high-risk draws exceed {step} steps"
            )));
        }
        Ok(UrnState {
            params,
            blue_draws,
            step,
        })
    }

    pub fn params(&self) -> &UrnParameters {
        &self.params
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn blue_draws(&self) -> u64 {
        self.blue_draws
    }

    pub fn red_draws(&self) -> u64 {
        self.step - self.blue_draws
    }

    pub fn blue(&self) -> f64 {
        self.params.blue_initial + self.blue_draws as f64 * self.params.increment
    }

    pub fn red(&self) -> f64 {
        self.params.red_initial + self.red_draws() as f64 * self.params.increment
    }

    pub fn total(&self) -> f64 {
        self.blue() + self.red()
    }

    /// Adds one increment to the colour of `x`.
    pub fn advance(&self, x: Classification) -> UrnState {
        UrnState {
            params: self.params,
            blue_draws: self.blue_draws + u64::from(x.as_u8()),
            step: self.step + 1,
        }
    }

    /// Draws a ball with uniform variate `draw`: high-risk iff
    /// `draw < blue / (blue + red)`.
    pub fn draw(&self, draw: f64) -> (UrnState, Classification) {
        let x = Classification::from(draw < counts_to_probability(self));
        (self.advance(x), x)
    }
}

/// `blue / (blue + red)`.
pub fn counts_to_probability(state: &UrnState) -> f64 {
    state.blue() / state.total()
}

/// One urn draw; see [`UrnState::draw`].
pub fn step(state: &UrnState, draw: f64) -> (UrnState, Classification) {
    state.draw(draw)
}

/// Runs `horizon` decisions, calling `record(p_i, x_i)` for each, where the
/// decision draw uses the probability shifted by `bias` while the urn is
/// updated from the realized classification. Returns the final state.
pub(crate) fn drive<R: Rng + ?Sized>(
    params: &UrnParameters,
    horizon: usize,
    bias: f64,
    rng: &mut R,
    mut record: impl FnMut(f64, Classification),
) -> UrnState {
    let mut state = UrnState::new(*params);
    for _ in 0..horizon {
        let p = counts_to_probability(&state);
        let u = rng::uniform(rng);
        let x = Classification::from(u < apply_bias(p, bias));
        record(p, x);
        state = state.advance(x);
    }
    state
}

/// The full path `{p_i, X_i}` of one simulated defendant.
///
/// `probabilities[i]` is the probability governing `classifications[i]`;
/// `final_probability` is the probability after the last decision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DefendantTrajectory {
    pub params: UrnParameters,
    pub probabilities: Vec<f64>,
    pub classifications: Vec<Classification>,
    pub final_probability: f64,
    pub seed: u64,
    pub stream: u64,
}

impl DefendantTrajectory {
    pub fn horizon(&self) -> usize {
        self.classifications.len()
    }

    /// Probability after `t` decisions, `0 <= t <= horizon`.
    pub fn probability_after(&self, t: usize) -> Option<f64> {
        match t.cmp(&self.horizon()) {
            std::cmp::Ordering::Less => self.probabilities.get(t).copied(),
            std::cmp::Ordering::Equal => Some(self.final_probability),
            std::cmp::Ordering::Greater => None,
        }
    }

    pub fn endpoint(&self) -> f64 {
        self.final_probability
    }

    pub fn high_count(&self) -> u64 {
        self.classifications.iter().filter(|x| x.is_high()).count() as u64
    }

    /// Rebuilds a trajectory from its classifications alone.
    pub fn from_classifications(
        params: UrnParameters,
        classifications: Vec<Classification>,
        seed: u64,
        stream: u64,
    ) -> Self {
        let mut state = UrnState::new(params);
        let probabilities = classifications
            .iter()
            .map(|&x| {
                let p = counts_to_probability(&state);
                state = state.advance(x);
                p
            })
            .collect();
        DefendantTrajectory {
            params,
            probabilities,
            classifications,
            final_probability: counts_to_probability(&state),
            seed,
            stream,
        }
    }
}

/// Simulates one path on stream 0 of `seed`.
pub fn simulate_path(params: &UrnParameters, horizon: usize, seed: u64) -> Result<DefendantTrajectory> {
    simulate_path_stream(params, horizon, seed, 0)
}

/// Simulates one path on stream `stream` of `seed`.
pub fn simulate_path_stream(
    params: &UrnParameters,
    horizon: usize,
    seed: u64,
    stream: u64,
) -> Result<DefendantTrajectory> {
    if horizon == 0 {
        return Err(Error::EmptyHorizon);
    }
    let mut rng = rng::stream_rng(seed, stream);
    let mut probabilities = Vec::with_capacity(horizon);
    let mut classifications = Vec::with_capacity(horizon);
    let last = drive(params, horizon, 0.0, &mut rng, |p, x| {
        probabilities.push(p);
        classifications.push(x);
    });
    Ok(DefendantTrajectory {
        params: *params,
        probabilities,
        classifications,
        final_probability: counts_to_probability(&last),
        seed,
        stream,
    })
}
