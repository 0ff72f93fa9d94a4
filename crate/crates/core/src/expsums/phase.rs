//! Exact phases `frac(sum_j alpha_j P_j(n))` for dyadic `alpha_j`.
//!
//! Every finite `f64` is `m * 2^e` with an integer `m`, so when the `alpha_j`
//! share the denominator `2^p` the phase numerator is an integer polynomial in
//! `n` reduced mod `2^p`. For `p <= 128` this runs in wrapping `u128`
//! arithmetic, which is exact because `2^p` divides `2^128`.

use num_bigint::{BigInt, Sign};
use num_complex::Complex64;
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};
use std::f64::consts::PI;

/// `e(theta) = exp(2 pi i theta)`, after reducing `theta` to `[-1/2, 1/2]`.
#[inline]
pub fn e(theta: f64) -> Complex64 {
    let t = theta - theta.round();
    let (s, c) = (2.0 * PI * t).sin_cos();
    Complex64::new(c, s)
}

/// `v = m * 2^exp` exactly, for finite nonzero `v`.
pub(crate) fn decompose(v: f64) -> (i64, i32) {
    debug_assert!(v.is_finite());
    let bits = v.to_bits();
    let sign = if bits >> 63 == 0 { 1 } else { -1 };
    let raw_exp = ((bits >> 52) & 0x7ff) as i32;
    let frac = (bits & ((1u64 << 52) - 1)) as i64;
    let (m, exp) = if raw_exp == 0 {
        (frac, -1074)
    } else {
        (frac | (1i64 << 52), raw_exp - 1075)
    };
    (sign * m, exp)
}

#[derive(Clone, Debug)]
enum Coeffs {
    Wide(Vec<u128>),
    Big(Vec<BigInt>),
}

/// The map `n -> frac(sum_i c_i n^i / 2^p)`.
#[derive(Clone, Debug)]
pub struct PhasePoly {
    p: u32,
    coeffs: Coeffs,
}

impl PhasePoly {
    /// `sum_j alpha_j P_j(n)`, where each `P_j` is given by integer
    /// coefficients (constant term first). Every `alpha_j` must be finite.
    pub fn new(terms: &[(f64, Vec<BigInt>)]) -> Self {
        let parts: Vec<(BigInt, u32, &Vec<BigInt>)> = terms
            .iter()
            .filter(|(a, _)| *a != 0.0)
            .filter_map(|(a, poly)| {
                assert!(a.is_finite(), "phase coefficient must be finite");
                let (m, exp) = decompose(*a);
                (exp < 0).then(|| (BigInt::from(m), (-exp) as u32, poly))
            })
            .collect();
        let p = parts.iter().map(|(_, q, _)| *q).max().unwrap_or(0);
        let degree = parts.iter().map(|(_, _, poly)| poly.len()).max().unwrap_or(0);
        let mut big = vec![BigInt::zero(); degree];
        for (m, q, poly) in &parts {
            let scaled = m << (p - q);
            for (i, c) in poly.iter().enumerate() {
                big[i] += &scaled * c;
            }
        }
        let modulus = BigInt::from(1) << p;
        for c in big.iter_mut() {
            *c = c.mod_floor(&modulus);
        }
        let coeffs = if p <= 128 {
            Coeffs::Wide(big.iter().map(|c| c.to_u128().expect("below 2^128")).collect())
        } else {
            Coeffs::Big(big)
        };
        PhasePoly { p, coeffs }
    }

    /// `sum_{j=1}^k alpha_j n^j`.
    pub fn monomials(alpha: &[f64]) -> Self {
        let terms: Vec<(f64, Vec<BigInt>)> = alpha
            .iter()
            .enumerate()
            .map(|(j, &a)| {
                let mut poly = vec![BigInt::zero(); j + 2];
                poly[j + 1] = BigInt::from(1);
                (a, poly)
            })
            .collect();
        Self::new(&terms)
    }

    /// Phase at `n`, in `[0, 1)`.
    pub fn frac(&self, n: i64) -> f64 {
        match &self.coeffs {
            Coeffs::Wide(c) => {
                let x = n as i128 as u128;
                let num = c
                    .iter()
                    .rev()
                    .fold(0u128, |acc, &ci| acc.wrapping_mul(x).wrapping_add(ci));
                let num = if self.p == 128 {
                    num
                } else {
                    num & ((1u128 << self.p) - 1)
                };
                let t = num as f64 * 2f64.powi(-(self.p as i32));
                if t >= 1.0 {
                    0.0
                } else {
                    t
                }
            }
            Coeffs::Big(c) => {
                let x = BigInt::from(n);
                let modulus = BigInt::from(1) << self.p;
                let num = c
                    .iter()
                    .rev()
                    .fold(BigInt::zero(), |acc, ci| (acc * &x + ci).mod_floor(&modulus));
                big_ratio(&num, self.p)
            }
        }
    }

    /// `e(phase(n))`.
    #[inline]
    pub fn e(&self, n: i64) -> Complex64 {
        e(self.frac(n))
    }
}

/// `num / 2^p` as `f64`, for `0 <= num < 2^p`.
fn big_ratio(num: &BigInt, p: u32) -> f64 {
    if num.sign() == Sign::NoSign {
        return 0.0;
    }
    let shift = num.bits().saturating_sub(64);
    let top = (num >> shift).to_u64().expect("64 bits") as f64;
    let t = top * 2f64.powi(shift as i32 - p as i32);
    if t >= 1.0 {
        0.0
    } else {
        t
    }
}

/// `frac(alpha * n)` computed exactly.
pub fn frac_mul(alpha: f64, n: &BigInt) -> f64 {
    if alpha == 0.0 {
        return 0.0;
    }
    let (m, exp) = decompose(alpha);
    if exp >= 0 {
        return 0.0;
    }
    let p = (-exp) as u32;
    let modulus = BigInt::from(1) << p;
    big_ratio(&(BigInt::from(m) * n).mod_floor(&modulus), p)
}
