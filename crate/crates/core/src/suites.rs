//! Seeded randomized identity suites, shared by the CLI and the acceptance run.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::circle::arcs::{DissectionConfig, Tag};
use crate::error::{invalid, Error, Result};
use crate::expsums::UnitPoint;
use crate::shiftpoly::{
    elementaries_direct, elementary_from_power, elementary_multinomial, poly_difference_eval, power_sums,
    top_degree_relation, verify_shift_identity,
};
use crate::types::HTuple;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    ShiftIdentity,
    NewtonMultinomial,
    PolyDifference,
    Dissection,
}

impl Suite {
    pub const ALL: [Suite; 4] = [
        Suite::ShiftIdentity,
        Suite::NewtonMultinomial,
        Suite::PolyDifference,
        Suite::Dissection,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Suite::ShiftIdentity => "shift-identity",
            Suite::NewtonMultinomial => "newton-multinomial",
            Suite::PolyDifference => "poly-difference",
            Suite::Dissection => "dissection",
        }
    }

    pub fn default_trials(&self) -> u64 {
        match self {
            Suite::NewtonMultinomial => 100,
            Suite::Dissection => 10_000,
            _ => 1000,
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| invalid(format!("unknown suite {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub trials: u64,
    pub failures: u64,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub first_failure: Option<String>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

pub fn run_suite(suite: Suite, trials: u64, seed: u64) -> Result<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    let mut first_failure = None;
    for t in 0..trials {
        let outcome = match suite {
            Suite::ShiftIdentity => shift_trial(&mut rng)?,
            Suite::NewtonMultinomial => newton_trial(&mut rng)?,
            Suite::PolyDifference => poly_trial(&mut rng)?,
            Suite::Dissection => dissection_trial(&mut rng, t)?,
        };
        if let Some(msg) = outcome {
            failures += 1;
            first_failure.get_or_insert(msg);
        }
    }
    Ok(SuiteReport {
        suite,
        trials,
        failures,
        seed,
        first_failure,
    })
}

type Trial = Result<Option<String>>;

/// Consistent `h` must satisfy both forms; a perturbed `h` must fail both.
fn shift_trial(rng: &mut ChaCha8Rng) -> Trial {
    let k = rng.gen_range(2..=4usize);
    let s = rng.gen_range(1..=3usize);
    let x: Vec<i64> = (0..2 * s).map(|_| rng.gen_range(1..=20)).collect();
    let b: i64 = rng.gen_range(-10..=10);
    let mut h: Vec<BigInt> = (1..k)
        .map(|j| {
            (0..s)
                .map(|i| BigInt::from(x[i] - b).pow(j as u32) - BigInt::from(x[s + i] - b).pow(j as u32))
                .sum()
        })
        .collect();
    h.push(BigInt::from(rng.gen_range(-50..=50i64)));
    let good = HTuple::new(h.clone())?;
    let (a1, a2) = verify_shift_identity(&x, b, &good)?;
    if !(a1 && a2 && top_degree_relation(&x, b, &good)?) {
        return Ok(Some(format!("consistent h rejected: x={x:?} b={b} h={good}")));
    }
    let j = rng.gen_range(0..k - 1);
    h[j] += 1;
    let bad = HTuple::new(h)?;
    let (c1, c2) = verify_shift_identity(&x, b, &bad)?;
    if c1 || c2 {
        return Ok(Some(format!("perturbed h accepted: x={x:?} b={b} h={bad}")));
    }
    Ok(None)
}

fn newton_trial(rng: &mut ChaCha8Rng) -> Trial {
    let m = rng.gen_range(1..=6usize);
    let n = rng.gen_range(1..=6usize);
    let z: Vec<BigInt> = (0..m).map(|_| BigInt::from(rng.gen_range(-9..=9i64))).collect();
    let ps = power_sums(&z, n);
    let newton = elementary_from_power(&ps, n)?;
    let multi = elementary_multinomial(&ps, n)?;
    let direct = elementaries_direct(&z).get(n).cloned().unwrap_or_else(BigInt::zero);
    if newton != multi || newton != BigRational::from_integer(direct) {
        return Ok(Some(format!("sigma_{n} disagrees for z={z:?}")));
    }
    Ok(None)
}

fn poly_trial(rng: &mut ChaCha8Rng) -> Trial {
    let k = rng.gen_range(1..=5usize);
    let x: Vec<i64> = (0..k).map(|_| rng.gen_range(-20..=20)).collect();
    let y: Vec<i64> = (0..k).map(|_| rng.gen_range(-20..=20)).collect();
    let z = BigRational::new(BigInt::from(rng.gen_range(-50..=50i64)), BigInt::from(rng.gen_range(1..=7i64)));
    let v = poly_difference_eval(&x, &y, &z)?;
    if !v.agree() {
        return Ok(Some(format!("x={x:?} y={y:?} z={z}: {} vs {}", v.direct, v.expansion)));
    }
    Ok(None)
}

/// Half the points uniform, half clustered near rationals of small
/// denominator, alternating between `X = 10^3` and `X = 10^6` at `k = 3`.
fn dissection_trial(rng: &mut ChaCha8Rng, t: u64) -> Trial {
    const K: usize = 3;
    let x = if t.is_multiple_of(2) { 1_000 } else { 1_000_000 };
    let cfg = DissectionConfig::new(x, K)?;
    let alpha = if (t / 2).is_multiple_of(2) {
        UnitPoint::new((0..K).map(|_| rng.gen()).collect())?
    } else {
        near_rational(rng, K, x)?
    };
    let (m, n, p) = (cfg.in_major_1d(&alpha), cfg.in_n(&alpha), cfg.in_p(&alpha));
    let memberships = [!m, m && !n, m && n && !p, p];
    let hits = memberships.iter().filter(|b| **b).count();
    let tag = cfg.classify(&alpha);
    let expected = [Tag::W1, Tag::W2, Tag::W3, Tag::W4]
        .into_iter()
        .zip(memberships)
        .find(|(_, b)| *b)
        .map(|(t, _)| t);
    if hits != 1 || expected != Some(tag) {
        return Ok(Some(format!("X={x} alpha={:?}: {hits} regions, tag {tag:?}", alpha.alpha())));
    }
    Ok(None)
}

pub(crate) fn near_rational(rng: &mut ChaCha8Rng, k: usize, x: u64) -> Result<UnitPoint> {
    let q = rng.gen_range(1..=4u32);
    let a: Vec<f64> = (1..=k)
        .map(|j| {
            let base = rng.gen_range(0..=q) as f64 / q as f64;
            let spread = 4.0 * (x as f64).powi(-(j as i32));
            (base + rng.gen_range(-spread..spread)).rem_euclid(1.0)
        })
        .collect();
    UnitPoint::new(a)
}
