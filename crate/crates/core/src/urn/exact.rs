//! Exact rational arithmetic for the urn: brute-force enumeration of every
//! classification sequence, used as an oracle by the property tests.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use super::{Classification, UrnParameters};
use crate::error::{Error, Result};

/// Largest horizon accepted by [`enumerate_exact`] (2^20 leaves).
pub const MAX_ENUMERATION_HORIZON: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct ExactPath {
    pub classifications: Vec<Classification>,
    pub probability: BigRational,
}

impl ExactPath {
    pub fn high_count(&self) -> usize {
        self.classifications.iter().filter(|x| x.is_high()).count()
    }
}

struct ExactParams {
    blue: BigRational,
    total: BigRational,
    increment: BigRational,
}

fn rational(v: f64) -> BigRational {
    // finite by UrnParameters construction
    BigRational::from_float(v).expect("finite urn parameter")
}

impl ExactParams {
    fn new(params: &UrnParameters) -> Self {
        let blue = rational(params.blue_initial());
        let red = rational(params.red_initial());
        ExactParams {
            total: &blue + &red,
            blue,
            increment: rational(params.increment()),
        }
    }

    fn mass_after(&self, steps: u64) -> BigRational {
        &self.total + &self.increment * BigRational::from_integer(BigInt::from(steps))
    }

    fn probability_after(&self, high: u64, steps: u64) -> BigRational {
        let blue = &self.blue + &self.increment * BigRational::from_integer(BigInt::from(high));
        blue / self.mass_after(steps)
    }
}

/// Exact high-risk probability after `steps` decisions with `high`
/// high-risk outcomes. Parameters are taken at their exact binary value.
pub fn exact_probability_after(params: &UrnParameters, high: u64, steps: u64) -> BigRational {
    ExactParams::new(params).probability_after(high, steps)
}

/// Rational form of the weighted-average update producing `p_i`.
pub fn exact_update_probability(
    p_prev: &BigRational,
    x_prev: Classification,
    i: u64,
    params: &UrnParameters,
) -> Result<BigRational> {
    if i < 2 {
        return Err(Error::WeightUndefined(i));
    }
    let exact = ExactParams::new(params);
    let prior = exact.mass_after(i - 2);
    let gamma = &prior / (&prior + &exact.increment);
    let x = if x_prev.is_high() {
        BigRational::one()
    } else {
        BigRational::zero()
    };
    Ok(&gamma * p_prev + (BigRational::one() - &gamma) * x)
}

/// Every classification sequence of length `horizon` with its exact
/// probability, in lexicographic order (`Low` before `High`, first decision
/// most significant).
pub fn enumerate_exact(params: &UrnParameters, horizon: usize) -> Result<Vec<ExactPath>> {
    if horizon == 0 {
        return Err(Error::EmptyHorizon);
    }
    if horizon > MAX_ENUMERATION_HORIZON {
        return Err(Error::EnumerationInfeasible {
            horizon,
            limit: MAX_ENUMERATION_HORIZON,
        });
    }
    let exact = ExactParams::new(params);
    // high[i][j]: P(high at decision i+1 | j high so far)
    let high: Vec<Vec<BigRational>> = (0..horizon as u64)
        .map(|i| (0..=i).map(|j| exact.probability_after(j, i)).collect())
        .collect();

    let mut out = Vec::with_capacity(1 << horizon);
    let mut prefix = Vec::with_capacity(horizon);
    descend(&high, horizon, 0, BigRational::one(), &mut prefix, &mut out);
    Ok(out)
}

fn descend(
    high: &[Vec<BigRational>],
    horizon: usize,
    ones: usize,
    mass: BigRational,
    prefix: &mut Vec<Classification>,
    out: &mut Vec<ExactPath>,
) {
    let i = prefix.len();
    if i == horizon {
        out.push(ExactPath {
            classifications: prefix.clone(),
            probability: mass,
        });
        return;
    }
    let p = &high[i][ones];
    let low_mass = &mass * (BigRational::one() - p);
    let high_mass = mass * p;
    prefix.push(Classification::Low);
    descend(high, horizon, ones, low_mass, prefix, out);
    prefix.pop();
    prefix.push(Classification::High);
    descend(high, horizon, ones + 1, high_mass, prefix, out);
    prefix.pop();
}
