//! Weyl sums, shifted sums, the geometric kernel, complete rational sums and
//! the oscillatory integral `I(beta)`.

pub mod fresnel;
pub mod phase;
pub mod quad;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::shiftpoly::binomial;
use crate::summation::{par_sum_range, sum_complex};
use crate::types::HTuple;
pub use phase::{e, PhasePoly};
pub use quad::QuadResult;

pub const DEFAULT_TOL: f64 = 1e-9;
const MAX_PANELS: usize = 200_000;

/// A point `(alpha_1, ..., alpha_k)` of the torus, each coordinate in `[0, 1)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnitPoint {
    alpha: Vec<f64>,
}

impl UnitPoint {
    pub fn new(alpha: Vec<f64>) -> Result<Self> {
        if alpha.is_empty() {
            return Err(invalid("a torus point needs at least one coordinate"));
        }
        if alpha.iter().any(|a| !a.is_finite()) {
            return Err(invalid("torus coordinates must be finite"));
        }
        let alpha = alpha
            .into_iter()
            .map(|a| {
                let r = a.rem_euclid(1.0);
                if r >= 1.0 {
                    0.0
                } else {
                    r
                }
            })
            .collect();
        Ok(UnitPoint { alpha })
    }

    pub fn zero(k: usize) -> Self {
        UnitPoint { alpha: vec![0.0; k] }
    }

    pub fn k(&self) -> usize {
        self.alpha.len()
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    /// The point `-alpha mod 1`.
    pub fn negate(&self) -> Self {
        UnitPoint::new(self.alpha.iter().map(|a| -a).collect()).expect("finite")
    }
}

/// `(q, a_1, ..., a_k)` with `q >= 1`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RationalPoint {
    pub q: u64,
    pub a: Vec<i64>,
}

impl RationalPoint {
    pub fn new(q: u64, a: Vec<i64>) -> Result<Self> {
        if q == 0 {
            return Err(invalid("modulus q must be at least 1"));
        }
        Ok(RationalPoint { q, a })
    }

    pub fn k(&self) -> usize {
        self.a.len()
    }

    /// Whether `gcd(q, a_1, ..., a_k) = 1`.
    pub fn is_primitive(&self) -> bool {
        self.a.iter().fold(self.q, |g, &ai| g.gcd(&ai.unsigned_abs())) == 1
    }
}

/// `f_k(alpha; X) = sum_{1 <= x <= X} e(alpha_1 x + ... + alpha_k x^k)`.
pub fn weyl_sum_f(alpha: &UnitPoint, x: u64) -> Complex64 {
    let poly = PhasePoly::monomials(alpha.alpha());
    par_sum_range(1, x, |n| poly.e(n as i64))
}

/// The phase polynomial `y Gamma + sum_{j >= 2} nu_j(y;h) alpha_j`.
fn shifted_phase(alpha: &UnitPoint, gamma: f64, h: &HTuple) -> PhasePoly {
    let k = alpha.k();
    let mut terms = vec![(gamma, vec![BigInt::zero(), BigInt::from(1)])];
    for j in 2..=k {
        let coeffs = (0..j)
            .map(|i| binomial(j as u32, i as u32) * h.get(j - i))
            .collect();
        terms.push((alpha.alpha()[j - 1], coeffs));
    }
    PhasePoly::new(&terms)
}

/// `g_k(alpha, Gamma; X) = sum_{1 <= y <= X} e(y Gamma + nu_2(y;h) alpha_2 + ... + nu_k(y;h) alpha_k)`.
pub fn shifted_sum_g(alpha: &UnitPoint, gamma: f64, x: u64, h: &HTuple) -> Result<Complex64> {
    if h.k() != alpha.k() {
        return Err(Error::DegreeMismatch {
            expected: alpha.k(),
            found: h.k(),
        });
    }
    if !gamma.is_finite() {
        return Err(invalid("Gamma must be finite"));
    }
    let poly = shifted_phase(alpha, gamma, h);
    Ok(par_sum_range(1, x, |y| poly.e(y as i64)))
}

/// Distance from `gamma` to the nearest integer.
pub fn dist_to_int(gamma: f64) -> f64 {
    (gamma - gamma.round()).abs()
}

/// Below this distance to an integer `K` is summed term by term.
pub const KERNEL_CLOSED_FORM_TOL: f64 = 1e-12;

/// `K(gamma) = sum_{1 <= z <= X} e(-gamma z)`.
pub fn kernel_k(gamma: f64, x: u64) -> Complex64 {
    if dist_to_int(gamma) > KERNEL_CLOSED_FORM_TOL {
        kernel_k_closed(gamma, x)
    } else {
        kernel_k_direct(gamma, x)
    }
}

/// `K` from `e(-g)(1 - e(-g X)) / (1 - e(-g))`, with `1 - e(-t)` written as
/// `2 sin^2(pi t) + i sin(2 pi t)` so that no digits cancel near integers.
pub fn kernel_k_closed(gamma: f64, x: u64) -> Complex64 {
    let one_minus = |t: f64| {
        let t = t - t.round();
        let s = (std::f64::consts::PI * t).sin();
        Complex64::new(2.0 * s * s, (2.0 * std::f64::consts::PI * t).sin())
    };
    let gx = phase::frac_mul(gamma, &BigInt::from(x));
    e(-gamma) * one_minus(gx) / one_minus(gamma)
}

pub fn kernel_k_direct(gamma: f64, x: u64) -> Complex64 {
    let poly = PhasePoly::monomials(&[-gamma]);
    par_sum_range(1, x, |z| poly.e(z as i64))
}

/// `min(X, 1/(2 ||gamma||))`.
///
/// `|K(gamma)| = |sin(pi gamma X) / sin(pi gamma)|` and `sin(pi t) >= 2t` on
/// `[0, 1/2]`, so `|K| <= 1/(2 ||gamma||)`.
pub fn kernel_bound(gamma: f64, x: u64) -> f64 {
    let d = dist_to_int(gamma);
    if d == 0.0 {
        x as f64
    } else {
        (x as f64).min(0.5 / d)
    }
}

/// `S(q, a) = sum_{r=1}^q e_q(a_1 r + ... + a_k r^k)`, with exact residues mod `q`.
pub fn complete_sum_s(p: &RationalPoint) -> Complex64 {
    let q = p.q as i128;
    let table: Vec<Complex64> = (0..p.q).map(|u| e(u as f64 / p.q as f64)).collect();
    let a: Vec<i128> = p.a.iter().map(|&v| (v as i128).rem_euclid(q)).collect();
    sum_complex((1..=q).map(|r| {
        let rr = r % q;
        let res = a.iter().rev().fold(0i128, |acc, &ai| ((acc + ai) * rr) % q);
        table[res as usize]
    }))
}

/// Exact residue `sum_j a_j r^j mod q`, for callers that tabulate phases.
pub fn residue(a: &[i64], r: u64, q: u64) -> u64 {
    let q = q as i128;
    let rr = (r as i128) % q;
    a.iter()
        .rev()
        .fold(0i128, |acc, &ai| ((acc + (ai as i128).rem_euclid(q)) * rr) % q) as u64
}

fn validate_beta(beta: &[f64], tol: f64) -> Result<()> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(invalid("tolerance must be positive"));
    }
    if beta.is_empty() || beta.iter().any(|b| !b.is_finite()) {
        return Err(invalid("beta must be a nonempty vector of finite reals"));
    }
    Ok(())
}

/// Phase of `beta_1 t + ... + beta_k t^k`.
fn poly_phase(beta: &[f64], t: f64) -> f64 {
    beta.iter().rev().fold(0.0, |acc, b| (acc + b) * t)
}

/// `I(beta) = int_0^1 e(beta_1 t + ... + beta_k t^k) dt` by adaptive quadrature.
///
/// Initial panels are narrow enough that the phase moves by at most one
/// radian across each.
pub fn oscillatory_i(beta: &[f64], tol: f64) -> Result<QuadResult> {
    validate_beta(beta, tol)?;
    integrate_phase(beta, 1.0, tol)
}

fn integrate_phase(beta: &[f64], upper: f64, tol: f64) -> Result<QuadResult> {
    // max |d/dt phase| on [0, upper], in radians
    let slope: f64 = beta
        .iter()
        .enumerate()
        .map(|(j, b)| (j + 1) as f64 * b.abs() * upper.powi(j as i32))
        .sum::<f64>()
        * 2.0
        * std::f64::consts::PI;
    let variation = slope * upper;
    if variation > 1e8 {
        return Err(invalid(format!(
            "phase varies by {variation:.3e} radians; too oscillatory for quadrature"
        )));
    }
    let panels = (variation.ceil() as usize).max(1);
    Ok(quad::integrate(
        |t| e(poly_phase(beta, t)),
        0.0,
        upper,
        panels,
        tol,
        MAX_PANELS.max(4 * panels),
    ))
}

/// `I(beta)`, using the closed forms for degree one and two and quadrature otherwise.
pub fn oscillatory_i_fast(beta: &[f64], tol: f64) -> Result<QuadResult> {
    validate_beta(beta, tol)?;
    let degree = beta.iter().rposition(|b| *b != 0.0).map_or(0, |i| i + 1);
    let closed = |value| QuadResult {
        value,
        error: 1e-12,
        converged: true,
        panels: 0,
    };
    match degree {
        0 => Ok(closed(Complex64::new(1.0, 0.0))),
        1 => Ok(closed(fresnel::linear_phase_integral(beta[0]))),
        2 if beta[1].abs() >= 1e-6 => Ok(closed(fresnel::quadratic_phase_integral(beta[0], beta[1]))),
        _ => oscillatory_i(&beta[..degree], tol),
    }
}

/// `X * I(beta_1 X, ..., beta_k X^k)`.
pub fn scaled_i(beta: &[f64], x: u64, tol: f64) -> Result<QuadResult> {
    validate_beta(beta, tol)?;
    let xf = x as f64;
    let scaled: Vec<f64> = beta
        .iter()
        .enumerate()
        .map(|(j, b)| b * xf.powi(j as i32 + 1))
        .collect();
    let r = oscillatory_i(&scaled, tol / xf.max(1.0))?;
    Ok(QuadResult {
        value: r.value * xf,
        error: r.error * xf,
        ..r
    })
}

/// `int_0^X e(beta_1 t + ... + beta_k t^k) dt` by direct quadrature.
pub fn scaled_i_direct(beta: &[f64], x: u64, tol: f64) -> Result<QuadResult> {
    validate_beta(beta, tol)?;
    integrate_phase(beta, x as f64, tol)
}

/// `|f|` never exceeds `X`; used by tests and by the CLI's sanity checks.
pub fn trivial_bound(x: u64) -> f64 {
    x.to_f64().unwrap_or(f64::INFINITY)
}
