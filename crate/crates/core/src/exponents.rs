//! Exponent catalog for `J_{s,k}(X;h)` and empirical exponent fits.
//!
//! Exponents are exact rationals with the `X^eps` factor dropped; finite-X
//! comparisons absorb it into a slack.

use num_rational::Rational64;
use num_traits::{One, ToPrimitive};
use serde::{Deserialize, Serialize};

use crate::counting::LadderResult;
use crate::error::{invalid, Error, Result};
use crate::types::HTuple;

mod rational_str {
    use num_rational::Rational64;
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<Rational64>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(r) => s.serialize_str(&r.to_string()),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Rational64>, D::Error> {
        let raw: Option<String> = Option::deserialize(d)?;
        raw.map(|t| t.parse().map_err(|_| de::Error::custom(format!("bad rational {t:?}"))))
            .transpose()
    }
}

fn rat(n: i64, d: i64) -> Rational64 {
    Rational64::new(n, d)
}

fn tri(n: i64) -> i64 {
    n * (n + 1) / 2
}

/// Right side of the admissible range `s <= k(k+1)/2 - (k(k+1) - l(l+1)) / (2(k-l)(k-l+1))`.
pub fn range_bound_thm11(k: usize, l: usize) -> Result<Rational64> {
    if l == 0 || l >= k {
        return Err(invalid("need 1 <= l < k"));
    }
    let (k, l) = (k as i64, l as i64);
    Ok(rat(tri(k), 1) - rat(k * (k + 1) - l * (l + 1), 2 * (k - l) * (k - l + 1)))
}

/// `delta(s,k,l) = (k-l)(k-l+1)/2 * (k(k+1) - 2s) / (k(k+1) - l(l+1))`.
pub fn delta_thm13(s: usize, k: usize, l: usize) -> Result<Rational64> {
    if l == 0 || l >= k {
        return Err(invalid("need 1 <= l < k"));
    }
    if s == 0 || 2 * s >= k * (k + 1) {
        return Err(invalid("need 1 <= s < k(k+1)/2"));
    }
    let (s, k, l) = (s as i64, k as i64, l as i64);
    Ok(rat(tri(k - l), 1) * rat(k * (k + 1) - 2 * s, k * (k + 1) - l * (l + 1)))
}

/// Minor-arc saving exponent on `Q`: `2 / (k^2 (k-1)^2)`.
pub fn delta_lemma53(k: usize) -> Result<Rational64> {
    if k < 2 {
        return Err(invalid("need k >= 2"));
    }
    let k = k as i64;
    Ok(rat(2, k * k * (k - 1) * (k - 1)))
}

/// `max(s, 2s - k(k+1)/2)`.
pub fn convexity_exponent(s: Rational64, k: usize) -> Rational64 {
    let crit = s * 2 - rat(tri(k as i64), 1);
    if crit > s {
        crit
    } else {
        s
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Upper,
    Lower,
    /// The count is identically zero.
    Vanishing,
    /// An asymptotic formula of the stated order.
    Asymptotic,
}

/// `h_j = a^j - b^j`: the witness family for the `X^{s-1}` lower bound.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub a: i64,
    pub b: i64,
}

impl Witness {
    pub fn h(&self, k: usize) -> Result<HTuple> {
        HTuple::power_difference(k, self.a, self.b)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundRecord {
    pub name: String,
    /// Power of `X`; `None` for vanishing records.
    #[serde(with = "rational_str")]
    pub exponent: Option<Rational64>,
    pub condition: String,
    /// Assumes the extended main conjecture.
    pub conditional: bool,
    pub direction: Direction,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub note: String,
}

impl BoundRecord {
    fn new(name: &str, exponent: Option<Rational64>, condition: String, direction: Direction) -> Self {
        BoundRecord {
            name: name.to_string(),
            exponent,
            condition,
            conditional: false,
            direction,
            witness: None,
            note: String::new(),
        }
    }

    pub fn exponent_f64(&self) -> Option<f64> {
        self.exponent.and_then(|r| r.to_f64())
    }
}

/// `(a, b)` with `a > b >= 1` and `h_j = a^j - b^j` for every `j`, if any.
/// Negated tuples are matched with the roles of `a` and `b` swapped.
pub fn power_difference_witness(h: &HTuple) -> Option<Witness> {
    let vals: Vec<i64> = h.values().iter().map(|v| v.to_i64()).collect::<Option<_>>()?;
    let d = vals[0];
    if d == 0 {
        return None;
    }
    let sign = d.signum();
    let d = d.abs();
    let b = if vals.len() == 1 {
        1
    } else {
        // h_2 = 2bd + d^2
        let num = sign * vals[1] - d * d;
        if num <= 0 || num % (2 * d) != 0 {
            return None;
        }
        num / (2 * d)
    };
    let a = b + d;
    let fits = vals.iter().enumerate().all(|(j, &v)| {
        let e = j as u32 + 1;
        match (a.checked_pow(e), b.checked_pow(e)) {
            (Some(ap), Some(bp)) => sign * v == ap - bp,
            _ => false,
        }
    });
    fits.then_some(if sign > 0 { Witness { a, b } } else { Witness { a: b, b: a } })
}

/// Every catalog record whose hypotheses hold at `(s, k, h)`.
pub fn bound_catalog(s: usize, k: usize, h: &HTuple) -> Result<Vec<BoundRecord>> {
    if h.k() != k {
        return Err(Error::DegreeMismatch {
            expected: k,
            found: h.k(),
        });
    }
    if s == 0 {
        return Err(invalid("s must be at least 1"));
    }
    let sr = rat(s as i64, 1);
    let mut out = Vec::new();
    let base = convexity_exponent(sr, k);
    if h.is_zero() {
        out.push(BoundRecord::new(
            "main_conjecture_upper",
            Some(base),
            "h = 0".into(),
            Direction::Upper,
        ));
        out.push(BoundRecord::new(
            "main_conjecture_lower",
            Some(base),
            "h = 0; diagonal and circle-method lower bounds".into(),
            Direction::Lower,
        ));
        return Ok(out);
    }
    out.push(BoundRecord::new(
        "convexity_baseline",
        Some(base),
        "J(X;h) <= J(X;0)".into(),
        Direction::Upper,
    ));

    let l = h.smallest_nonzero_index()?;
    let t = h.zero_count();
    let (si, ki, li) = (s as i64, k as i64, l as i64);
    if k >= 3 && l < k {
        let range = range_bound_thm11(k, l)?;
        if sr <= range {
            out.push(BoundRecord::new(
                "thm1.1",
                Some(sr - rat(1, 2)),
                format!("k >= 3, l = {l} < k, s <= {range}"),
                Direction::Upper,
            ));
        }
        if si <= tri(li) {
            out.push(BoundRecord::new(
                "thm1.2",
                Some(sr - Rational64::one()),
                format!("k >= 3, l = {l} < k, s <= l(l+1)/2 = {}", tri(li)),
                Direction::Upper,
            ));
        }
        if si < tri(ki) {
            let delta = delta_thm13(s, k, l)?;
            let saving = delta.min(rat(1, 2));
            let mut r = BoundRecord::new(
                "thm1.3",
                Some(sr - saving),
                format!("k >= 3, l = {l} < k, s < k(k+1)/2 = {}", tri(ki)),
                Direction::Upper,
            );
            r.note = format!("X^(s-1/2) + X^(s-delta) with delta = {delta}");
            out.push(r);
        }
        if si == tri(ki) {
            let mut r = BoundRecord::new(
                "thm1.4",
                Some(rat(tri(ki), 1)),
                format!("s = k(k+1)/2, h_{l} != 0 with l < k, X large in terms of h"),
                Direction::Asymptotic,
            );
            r.conditional = true;
            r.note = "J ~ S(h) J(h) X^(k(k+1)/2)".into();
            out.push(r);
        }
        if si >= tri(ki) {
            let mut r = BoundRecord::new(
                "lemma5.3",
                Some(rat(2 * si - tri(ki), 1)),
                format!("minor arcs m(Q), s >= k(k+1)/2, h_{l} != 0 with l < k"),
                Direction::Upper,
            );
            r.conditional = true;
            r.note = format!("times Q^(-{})", delta_lemma53(k)?);
            out.push(r);
        }
    }
    let support = h.support();
    if k >= 3 && s == k && support.len() == 1 && support[0] >= 2 {
        let l5 = support[0] as i64;
        out.push(BoundRecord::new(
            "thm1.5",
            Some(rat(ki - l5 + 1, 1)),
            format!("s = k, h supported on the single index {l5} >= 2"),
            Direction::Upper,
        ));
    }
    if let Some(w) = power_difference_witness(h) {
        let mut r = BoundRecord::new(
            "thm7.1",
            Some(sr - Rational64::one()),
            format!("h_j = {}^j - {}^j, X >= {}", w.a, w.b, w.a.max(w.b)),
            Direction::Lower,
        );
        r.witness = Some(w);
        out.push(r);
    }
    if t >= 1 && s <= t {
        out.push(BoundRecord::new(
            "thm7.2",
            None,
            format!("h_j = 0 for t = {t} indices, s <= t"),
            Direction::Vanishing,
        ));
    }
    Ok(out)
}

/// The standard witness `h_j = 2^j - 1`.
pub fn lower_bound_witness(k: usize) -> Result<HTuple> {
    Witness { a: 2, b: 1 }.h(k)
}

/// Whether the conjectured box bound is asserted at real `s`: `s >= k(k+1)/4 + 1`.
pub fn conjecture81_applies(s: f64, k: usize) -> bool {
    s >= (k * (k + 1)) as f64 / 4.0 + 1.0
}

/// Whether the weak form applies to a region of measure `mes`, with
/// implied constant one: `mes >= X^{1 - k(k+1)/4}`.
pub fn conjecture82_applies(mes: f64, k: usize, x: u64) -> bool {
    mes >= (x as f64).powf(1.0 - (k * (k + 1)) as f64 / 4.0)
}

/// `C X^eps (X^s mes + X^{2s - k(k+1)/2})`.
pub fn conjecture_bound(s: f64, k: usize, x: u64, mes: f64, c: f64, eps: f64) -> f64 {
    let xf = x as f64;
    c * xf.powf(eps) * (xf.powf(s) * mes + xf.powf(2.0 * s - (k * (k + 1)) as f64 / 2.0))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub slope: f64,
    pub intercept: f64,
    pub max_residual: f64,
    /// `X` values used in the fit.
    pub points: Vec<u64>,
    /// `X` values dropped because the count was zero.
    pub dropped_zero: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum FitOutcome {
    Fitted(ExponentFit),
    IdenticallyZero { points: Vec<u64> },
}

/// Least squares line through `(ln x, ln y)`.
pub fn fit_points(points: &[(f64, f64)]) -> Result<(f64, f64, f64)> {
    if points.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "{} positive points, need at least 3",
            points.len()
        )));
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|(x, y)| (x.ln(), y.ln())).collect();
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData("all X values coincide".into()));
    }
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let max_residual = logs
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).abs())
        .fold(0.0, f64::max);
    Ok((slope, intercept, max_residual))
}

/// Log-log fit of a ladder's completed, positive points.
pub fn fit_exponent(ladder: &LadderResult) -> Result<ExponentFit> {
    let done = ladder.completed();
    let (zero, positive): (Vec<_>, Vec<_>) = done.iter().partition(|(_, c)| c.is_zero());
    let pts: Vec<(f64, f64)> = positive.iter().map(|(x, c)| (*x as f64, c.to_f64())).collect();
    let (slope, intercept, max_residual) = fit_points(&pts)?;
    Ok(ExponentFit {
        slope,
        intercept,
        max_residual,
        points: positive.iter().map(|p| p.0).collect(),
        dropped_zero: zero.iter().map(|p| p.0).collect(),
    })
}

/// As [`fit_exponent`], but a ladder whose completed counts are all zero
/// (at least one point) yields an "identically zero" verdict.
pub fn fit_or_verdict(ladder: &LadderResult) -> Result<FitOutcome> {
    let done = ladder.completed();
    if !done.is_empty() && done.iter().all(|(_, c)| c.is_zero()) {
        return Ok(FitOutcome::IdenticallyZero {
            points: done.iter().map(|p| p.0).collect(),
        });
    }
    fit_exponent(ladder).map(FitOutcome::Fitted)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonEntry {
    pub name: String,
    pub direction: Direction,
    #[serde(with = "rational_str")]
    pub exponent: Option<Rational64>,
    pub slope: f64,
    pub consistent: bool,
}

/// Flags each record the fitted slope disagrees with by more than `slack`.
/// A flag is a finite-X observation, not a refutation.
pub fn compare_fit_to_catalog(fit: &ExponentFit, records: &[BoundRecord], slack: f64) -> Vec<ComparisonEntry> {
    records
        .iter()
        .map(|r| {
            let p = r.exponent_f64();
            let consistent = match (r.direction, p) {
                (Direction::Upper, Some(p)) => fit.slope <= p + slack,
                (Direction::Lower, Some(p)) => fit.slope >= p - slack,
                (Direction::Asymptotic, Some(p)) => (fit.slope - p).abs() <= slack,
                // a fitted ladder has positive counts
                (Direction::Vanishing, _) => false,
                (_, None) => true,
            };
            ComparisonEntry {
                name: r.name.clone(),
                direction: r.direction,
                exponent: r.exponent,
                slope: fit.slope,
                consistent,
            }
        })
        .collect()
}
