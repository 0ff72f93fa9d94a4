//! Major and minor arcs, boxes on the torus, and the four-way dissection.
//!
//! Thresholds such as `Q X^{-k}` with `Q = X^{1/(8k)}` are irrational in
//! general. [`Scale`] stores `c X^{num/den}` symbolically and compares it
//! against rationals by raising both sides to the power `den`.

use std::cmp::Ordering;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{FromPrimitive, One, Pow, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::expsums::{dist_to_int, UnitPoint};

/// `coeff * X^{num/den}` for a positive rational `coeff`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Scale {
    coeff: BigRational,
    x: u64,
    num: i64,
    den: u32,
}

impl Scale {
    pub fn rational(v: BigRational) -> Self {
        assert!(v.is_positive(), "scale must be positive");
        Scale {
            coeff: v,
            x: 1,
            num: 0,
            den: 1,
        }
    }

    pub fn integer(v: u64) -> Self {
        Self::rational(BigRational::from_integer(BigInt::from(v)))
    }

    /// `X^{num/den}`.
    pub fn x_power(x: u64, num: i64, den: u32) -> Self {
        assert!(x >= 1 && den >= 1);
        let g = (num.unsigned_abs()).gcd(&(den as u64)).max(1);
        Scale {
            coeff: BigRational::one(),
            x,
            num: num / g as i64,
            den: den / g as u32,
        }
    }

    /// Nearest `f64` to a real in `[1e-300, 1e300]`; used for fast prefilters.
    pub fn to_f64(&self) -> f64 {
        self.coeff.to_f64().unwrap_or(f64::NAN) * (self.x as f64).powf(self.num as f64 / self.den as f64)
    }

    fn ln(&self) -> f64 {
        ratio_ln(&self.coeff) + (self.x as f64).ln() * self.num as f64 / self.den as f64
    }

    /// `self * c * X^j`, where `X` is this scale's base.
    pub fn times(&self, c: &BigRational, x: u64, j: i64) -> Self {
        assert!(c.is_positive());
        if self.num == 0 && self.den == 1 && self.x == 1 {
            let coeff = &self.coeff * c;
            return Scale {
                coeff,
                x,
                num: j,
                den: 1,
            };
        }
        assert_eq!(self.x, x, "scales must share a base");
        Scale {
            coeff: &self.coeff * c,
            x,
            num: self.num + j * self.den as i64,
            den: self.den,
        }
    }

    /// Exact comparison of a non-negative rational with this scale.
    pub fn cmp_rational(&self, d: &BigRational) -> Ordering {
        if d.is_zero() {
            return Ordering::Less;
        }
        let ld = ratio_ln(d);
        let ls = self.ln();
        let margin = 1e-9 * (1.0 + ls.abs());
        if ld < ls - margin {
            return Ordering::Less;
        }
        if ld > ls + margin {
            return Ordering::Greater;
        }
        // (d / coeff)^den against X^num
        let lhs: BigRational = Pow::pow(&(d / &self.coeff), self.den);
        let xb = BigRational::from_integer(BigInt::from(self.x));
        if self.num >= 0 {
            lhs.cmp(&Pow::pow(&xb, self.num as u32))
        } else {
            (lhs * Pow::pow(&xb, (-self.num) as u32)).cmp(&BigRational::one())
        }
    }

    /// `d <= self`.
    pub fn admits(&self, d: &BigRational) -> bool {
        self.cmp_rational(d) != Ordering::Greater
    }

    /// Largest integer `n >= 0` with `n <= self`.
    pub fn floor(&self) -> u64 {
        let guess = self.to_f64().floor().clamp(0.0, 1e18) as u64;
        let mut n = guess.saturating_sub(1);
        while self.admits(&BigRational::from_integer(BigInt::from(n + 1))) {
            n += 1;
        }
        while n > 0 && !self.admits(&BigRational::from_integer(BigInt::from(n))) {
            n -= 1;
        }
        n
    }
}

fn ratio_ln(r: &BigRational) -> f64 {
    let (n, d) = (r.numer(), r.denom());
    big_ln(n) - big_ln(d)
}

fn big_ln(n: &BigInt) -> f64 {
    let bits = n.bits();
    if bits < 1000 {
        return n.abs().to_f64().unwrap_or(f64::INFINITY).ln();
    }
    let shift = bits - 64;
    let top = (n.abs() >> shift).to_f64().expect("64 bits");
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

pub(crate) fn exact(v: f64) -> BigRational {
    BigRational::from_f64(v).expect("finite")
}

fn int(v: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ArcKind {
    /// One-dimensional arcs `|q alpha - a| <= Q X^{-k}` on the last coordinate.
    M1d { q_num: i64, q_den: u32 },
    /// Arcs `|alpha_j - a_j/q| <= Z X^{-j}` for all `j`.
    Kkd { z_num: i64, z_den: u32 },
    /// `alpha_j in U_j(A) = [-A X^{-j}, A X^{-j}]` for `j <= m`, other coordinates free.
    Vbox { m: usize, a: f64 },
    /// `prod_j [-X^{-theta_j}, X^{-theta_j}]`.
    Bbox { theta: Vec<f64> },
}

/// A family of arcs or a box, at scale `X` and degree `k`. The arc
/// parameters `Q` and `Z` are stored as exponents of `X`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArcFamily {
    pub k: usize,
    #[serde(rename = "X")]
    pub x: u64,
    pub kind: ArcKind,
}

impl ArcFamily {
    pub fn new(k: usize, x: u64, kind: ArcKind) -> Result<Self> {
        if k == 0 || x == 0 {
            return Err(invalid("k and X must be at least 1"));
        }
        match &kind {
            ArcKind::Vbox { m, a } => {
                if *m > k || !(a.is_finite() && *a >= 0.0) {
                    return Err(invalid("Vbox needs 0 <= m <= k and A >= 0"));
                }
            }
            ArcKind::Bbox { theta } => {
                if theta.len() != k || theta.iter().any(|t| !t.is_finite()) {
                    return Err(invalid("Bbox needs k finite exponents"));
                }
            }
            ArcKind::M1d { q_num, q_den } | ArcKind::Kkd { z_num: q_num, z_den: q_den } => {
                if *q_den == 0 || *q_num < 0 || *q_num > *q_den as i64 {
                    return Err(invalid("arc parameter must be X^t with 0 <= t <= 1"));
                }
            }
        }
        Ok(ArcFamily { k, x, kind })
    }

    pub fn contains(&self, alpha: &UnitPoint) -> bool {
        match &self.kind {
            ArcKind::M1d { q_num, q_den } => {
                let q = Scale::x_power(self.x, *q_num, *q_den);
                major_arc_membership_1d(alpha.alpha()[self.k - 1], &q, self.x, self.k).is_some()
            }
            ArcKind::Kkd { z_num, z_den } => {
                kdim_membership(alpha, &Scale::x_power(self.x, *z_num, *z_den), self.x).is_some()
            }
            ArcKind::Vbox { .. } | ArcKind::Bbox { .. } => self
                .half_widths()
                .expect("box")
                .iter()
                .zip(alpha.alpha())
                .all(|(w, a)| *w >= 0.5 || dist_to_int(*a) <= *w),
        }
    }

    /// Half-widths of the box around `0` in each coordinate, or `None` for arcs.
    pub fn half_widths(&self) -> Option<Vec<f64>> {
        let xf = self.x as f64;
        match &self.kind {
            ArcKind::Vbox { m, a } => Some(
                (1..=self.k)
                    .map(|i| {
                        if i <= *m {
                            a * xf.powi(-(i as i32))
                        } else {
                            f64::INFINITY
                        }
                    })
                    .collect(),
            ),
            ArcKind::Bbox { theta } => Some(theta.iter().map(|t| xf.powf(-t)).collect()),
            _ => None,
        }
    }
}

/// Measure of a box on the torus: `prod_j min(1, 2 w_j)`.
pub fn box_measure(region: &ArcFamily) -> Result<f64> {
    let widths = region
        .half_widths()
        .ok_or_else(|| invalid("box_measure needs a Vbox or Bbox region"))?;
    Ok(widths.iter().map(|w| (2.0 * w).min(1.0)).product())
}

/// Smallest `q <= Q` with some `0 <= a <= q`, `gcd(a, q) = 1` and
/// `|q alpha - a| <= Q X^{-k}`.
pub fn major_arc_membership_1d(alpha: f64, q: &Scale, x: u64, k: usize) -> Option<(u64, u64)> {
    let alpha_r = exact(alpha);
    let threshold = q.times(&BigRational::one(), x, -(k as i64));
    let t = threshold.to_f64();
    for qq in 1..=q.floor() {
        let centre = qq as f64 * alpha;
        let lo = (centre - t - 1e-9 * (1.0 + t)).ceil().max(0.0) as u64;
        let hi = (centre + t + 1e-9 * (1.0 + t)).floor().min(qq as f64) as u64;
        for a in lo..=hi {
            if a.gcd(&qq) != 1 {
                continue;
            }
            let d = (int(qq as i64) * &alpha_r - int(a as i64)).abs();
            if threshold.admits(&d) {
                return Some((qq, a));
            }
        }
    }
    None
}

/// Smallest `q <= Z` with `0 <= a_j <= q`, `gcd(q, a) = 1` and
/// `|alpha_j - a_j/q| <= Z X^{-j}` for every `j`.
pub fn kdim_membership(alpha: &UnitPoint, z: &Scale, x: u64) -> Option<(u64, Vec<u64>)> {
    let k = alpha.k();
    let exact_alpha: Vec<BigRational> = alpha.alpha().iter().map(|&a| exact(a)).collect();
    let thresholds: Vec<Scale> = (1..=k).map(|j| z.times(&BigRational::one(), x, -(j as i64))).collect();
    for q in 1..=z.floor() {
        let qr = int(q as i64);
        let mut candidates: Vec<Vec<u64>> = Vec::with_capacity(k);
        for j in 0..k {
            // |q alpha_j - a_j| <= q Z X^{-j}
            let t = q as f64 * thresholds[j].to_f64();
            let centre = q as f64 * alpha.alpha()[j];
            let lo = (centre - t - 1e-9 * (1.0 + t)).ceil().max(0.0) as u64;
            let hi = (centre + t + 1e-9 * (1.0 + t)).floor().min(q as f64) as u64;
            let ok: Vec<u64> = (lo..=hi)
                .filter(|&a| {
                    let d = (&exact_alpha[j] - int(a as i64) / &qr).abs();
                    thresholds[j].admits(&d)
                })
                .collect();
            if ok.is_empty() {
                break;
            }
            candidates.push(ok);
        }
        if candidates.len() < k {
            continue;
        }
        if let Some(a) = first_primitive(q, &candidates) {
            return Some((q, a));
        }
    }
    None
}

/// First tuple (lexicographically) from the candidate lists with `gcd(q, a) = 1`.
fn first_primitive(q: u64, candidates: &[Vec<u64>]) -> Option<Vec<u64>> {
    fn go(g: u64, candidates: &[Vec<u64>], acc: &mut Vec<u64>) -> bool {
        if acc.len() == candidates.len() {
            return g == 1;
        }
        for &a in &candidates[acc.len()] {
            acc.push(a);
            if go(g.gcd(&a), candidates, acc) {
                return true;
            }
            acc.pop();
        }
        false
    }
    let mut acc = Vec::new();
    go(q, candidates, &mut acc).then_some(acc)
}

/// The four classes of the dissection.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Tag {
    W1,
    W2,
    W3,
    W4,
}

/// `L = X^{1/(8k^2)}`, `Q = L^k = X^{1/(8k)}`, `N = K(Q^2)`, `P = K(L)`, and
/// `M(Q)` on the last coordinate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DissectionConfig {
    #[serde(rename = "X")]
    pub x: u64,
    pub k: usize,
}

impl DissectionConfig {
    /// Needs `k >= 2`: the inclusion `P ⊆ [0,1)^{k-1} x M` rests on `L^2 <= Q`.
    pub fn new(x: u64, k: usize) -> Result<Self> {
        if k < 2 {
            return Err(invalid("the dissection needs k >= 2"));
        }
        if x == 0 {
            return Err(invalid("X must be at least 1"));
        }
        Ok(DissectionConfig { x, k })
    }

    pub fn l(&self) -> Scale {
        Scale::x_power(self.x, 1, (8 * self.k * self.k) as u32)
    }

    pub fn q(&self) -> Scale {
        Scale::x_power(self.x, 1, (8 * self.k) as u32)
    }

    pub fn q_squared(&self) -> Scale {
        Scale::x_power(self.x, 1, (4 * self.k) as u32)
    }

    /// `alpha_k in M(Q)`.
    pub fn in_major_1d(&self, alpha: &UnitPoint) -> bool {
        major_arc_membership_1d(alpha.alpha()[self.k - 1], &self.q(), self.x, self.k).is_some()
    }

    /// `alpha in N = K(Q^2)`.
    pub fn in_n(&self, alpha: &UnitPoint) -> bool {
        kdim_membership(alpha, &self.q_squared(), self.x).is_some()
    }

    /// `alpha in P = K(L)`.
    pub fn in_p(&self, alpha: &UnitPoint) -> bool {
        kdim_membership(alpha, &self.l(), self.x).is_some()
    }

    pub fn classify(&self, alpha: &UnitPoint) -> Tag {
        if !self.in_major_1d(alpha) {
            Tag::W1
        } else if !self.in_n(alpha) {
            Tag::W2
        } else if !self.in_p(alpha) {
            Tag::W3
        } else {
            Tag::W4
        }
    }
}

pub fn dissection_classify(alpha: &UnitPoint, cfg: &DissectionConfig) -> Result<Tag> {
    if alpha.k() != cfg.k {
        return Err(crate::error::Error::DegreeMismatch {
            expected: cfg.k,
            found: alpha.k(),
        });
    }
    Ok(cfg.classify(alpha))
}
