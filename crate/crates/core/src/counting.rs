//! Exact solution counts.
//!
//! [`brute_force_j`] walks the whole box and is the oracle for everything
//! else. The fast route builds representation maps `r_s(v)` by
//! meet-in-the-middle convolution and correlates them at the shift `h`.

use std::collections::{BTreeMap, HashMap};
use std::time::Instant;

use num_bigint::{BigInt, BigUint};
use num_traits::{Pow, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::budget::Budget;
use crate::countmap::{convolve_with_cap, correlate, CountMap, MapKind, MapMeta, FORMAT_VERSION};
use crate::error::{check_budget, invalid, Error, Result};
use crate::shiftpoly::nu_profile;
use crate::types::{ExactCount, HTuple, PowerSumVec, SystemParams};

fn enumeration_cost(x: u64, positions: usize) -> f64 {
    (x as f64).powi(positions as i32)
}

/// Counts `(x, y)` in `[1, X]^{2s}` with `sum x_i^j - y_i^j = h_j` for `1 <= j <= k`
/// by visiting every point of the box.
pub fn brute_force_j(p: &SystemParams, budget: &Budget) -> Result<ExactCount> {
    check_budget(
        "brute-force enumeration",
        enumeration_cost(p.x, 2 * p.s),
        budget.max_enumeration,
    )?;
    let fits = (p.s as f64) * (p.x as f64).powi(p.k as i32) < 2f64.powi(120)
        && p.h.values().iter().all(|v| v.bits() < 120);
    let count = if fits {
        brute_force_i128(p)
    } else {
        brute_force_big(p)
    };
    Ok(ExactCount(count))
}

fn brute_force_i128(p: &SystemParams) -> BigUint {
    let (s, k, x) = (p.s, p.k, p.x as i64);
    let pw: Vec<Vec<i128>> = (0..=x)
        .map(|v| (1..=k as u32).map(|j| (v as i128).pow(j)).collect())
        .collect();
    let target: Vec<i128> = p.h.values().iter().map(|v| v.to_i128().expect("fits")).collect();

    fn walk(
        depth: usize,
        s: usize,
        k: usize,
        x: i64,
        pw: &[Vec<i128>],
        target: &[i128],
        stack: &mut [i128],
    ) -> u128 {
        if depth == 2 * s {
            return (stack[depth * k..(depth + 1) * k] == *target) as u128;
        }
        let mut total = 0;
        for v in 1..=x {
            let (lower, upper) = stack.split_at_mut((depth + 1) * k);
            let cur = &lower[depth * k..];
            let next = &mut upper[..k];
            for j in 0..k {
                next[j] = if depth < s {
                    cur[j] + pw[v as usize][j]
                } else {
                    cur[j] - pw[v as usize][j]
                };
            }
            total += walk(depth + 1, s, k, x, pw, target, stack);
        }
        total
    }

    let total: u128 = (1..=x)
        .into_par_iter()
        .map(|first| {
            let mut stack = vec![0i128; (2 * s + 1) * k];
            stack[k..2 * k].copy_from_slice(&pw[first as usize]);
            walk(1, s, k, x, &pw, &target, &mut stack)
        })
        .sum();
    BigUint::from(total)
}

fn brute_force_big(p: &SystemParams) -> BigUint {
    let (s, k) = (p.s, p.k);
    let pw: Vec<Vec<BigInt>> = (0..=p.x)
        .map(|v| (1..=k as u32).map(|j| Pow::pow(BigInt::from(v), j)).collect())
        .collect();

    fn walk(depth: usize, s: usize, x: u64, pw: &[Vec<BigInt>], h: &[BigInt], acc: &[BigInt]) -> u128 {
        if depth == 2 * s {
            return (acc == h) as u128;
        }
        (1..=x)
            .map(|v| {
                let next: Vec<BigInt> = acc
                    .iter()
                    .zip(&pw[v as usize])
                    .map(|(a, q)| if depth < s { a + q } else { a - q })
                    .collect();
                walk(depth + 1, s, x, pw, h, &next)
            })
            .sum()
    }

    let total: u128 = (1..=p.x)
        .into_par_iter()
        .map(|first| walk(1, s, p.x, &pw, p.h.values(), &pw[first as usize]))
        .sum();
    BigUint::from(total)
}

fn binomial_f64(n: u64, r: u64) -> f64 {
    (0..r).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Upper bound on the number of keys of an `s`-fold convolution of a base
/// map with `n` keys spanning the given per-coordinate widths.
fn fold_size_estimate(n: u64, s: usize, widths: &[f64]) -> f64 {
    let multisets = binomial_f64(n + s as u64 - 1, s as u64);
    let boxed: f64 = widths.iter().map(|w| s as f64 * w + 1.0).product();
    multisets.min(boxed)
}

fn widths(base: &CountMap) -> Vec<f64> {
    base.key_bounds()
        .iter()
        .map(|(lo, hi)| (hi - lo).to_f64().unwrap_or(f64::INFINITY))
        .collect()
}

/// `s`-fold convolution of `base`, splitting in halves so that each level
/// is built once.
fn fold(base: &CountMap, s: usize, cap: u64) -> Result<CountMap> {
    let mut memo: HashMap<usize, CountMap> = HashMap::new();
    memo.insert(1, base.clone());
    fn go(s: usize, cap: u64, memo: &mut HashMap<usize, CountMap>) -> Result<CountMap> {
        if let Some(m) = memo.get(&s) {
            return Ok(m.clone());
        }
        let hi = go(s.div_ceil(2), cap, memo)?;
        let lo = go(s / 2, cap, memo)?;
        let out = convolve_with_cap(&hi, &lo, cap)?;
        memo.insert(s, out.clone());
        Ok(out)
    }
    go(s, cap, &mut memo)
}

fn guarded_fold(base: CountMap, s: usize, budget: &Budget) -> Result<CountMap> {
    if s == 0 {
        return Ok(CountMap::identity(base.k()));
    }
    let estimate = fold_size_estimate(base.len() as u64, s, &widths(&base));
    check_budget("count-map entries", estimate, budget.max_entries)?;
    fold(&base, s, budget.max_entries)
}

/// `r_s(v) = #{x in [lo, hi]^s : (sum x_i, ..., sum x_i^k) = v}`.
pub fn rep_count_map(s: usize, k: usize, lo: i64, hi: i64, budget: &Budget) -> Result<CountMap> {
    if s == 0 {
        return Err(invalid("s must be at least 1"));
    }
    if lo > hi {
        return Err(invalid(format!("empty range [{lo}, {hi}]")));
    }
    let meta = MapMeta {
        format_version: FORMAT_VERSION,
        kind: MapKind::PowerSums,
        s: 1,
        k,
        x: hi,
        range: (lo, hi),
        h: None,
    };
    let base = CountMap::from_keys(
        meta,
        (lo..=hi).map(|v| {
            let v = BigInt::from(v);
            PowerSumVec::new((1..=k as u32).map(|j| Pow::pow(&v, j)).collect())
        }),
    )?;
    guarded_fold(base, s, budget)
}

/// Map of `sum_m (nu_1(w_m;h), ..., nu_k(w_m;h))` over `w in [1, X]^r`.
pub fn nu_profile_map(r: usize, h: &HTuple, x: u64, budget: &Budget) -> Result<CountMap> {
    let k = h.k();
    let meta = MapMeta {
        format_version: FORMAT_VERSION,
        kind: MapKind::NuProfile,
        s: 1,
        k,
        x: x as i64,
        range: (1, x as i64),
        h: Some(h.clone()),
    };
    let base = CountMap::from_keys(
        meta,
        (1..=x).map(|w| PowerSumVec::new(nu_profile(&BigInt::from(w), h))),
    )?;
    guarded_fold(base, r, budget)
}

/// `J_{s,k}(X;h)` as the correlation `sum_w r_s(w + h) r_s(w)`.
pub fn count_j_correlate(p: &SystemParams, budget: &Budget) -> Result<ExactCount> {
    let rep = rep_count_map(p.s, p.k, 1, p.x as i64, budget)?;
    correlate(&rep, &rep, &p.h)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Correlate,
    BruteForce,
}

/// `J_{s,k}(X;h)` by the cheapest admissible method.
pub fn count_j(p: &SystemParams, budget: &Budget) -> Result<(ExactCount, Method)> {
    match count_j_correlate(p, budget) {
        Ok(c) => Ok((c, Method::Correlate)),
        Err(Error::BudgetExceeded { .. }) => {
            brute_force_j(p, budget).map(|c| (c, Method::BruteForce))
        }
        Err(e) => Err(e),
    }
}

/// Calls `visit` with every nondecreasing `len`-tuple from `[1, x]`.
fn for_each_multiset(len: usize, x: u64, visit: &mut impl FnMut(&[u64])) {
    fn go(buf: &mut Vec<u64>, len: usize, from: u64, x: u64, visit: &mut impl FnMut(&[u64])) {
        if buf.len() == len {
            visit(buf);
            return;
        }
        for v in from..=x {
            buf.push(v);
            go(buf, len, v, x, visit);
            buf.pop();
        }
    }
    go(&mut Vec::with_capacity(len), len, 1, x, visit);
}

/// Number of distinct orderings of a sorted tuple.
fn orderings(sorted: &[u64]) -> BigUint {
    let mut total: BigUint = (1..=sorted.len() as u64).product();
    let mut run = 1u64;
    for i in 1..=sorted.len() {
        if i < sorted.len() && sorted[i] == sorted[i - 1] {
            run += 1;
        } else {
            let f: BigUint = (1..=run).product();
            total /= f;
            run = 1;
        }
    }
    total
}

fn multiset_key(t: &[u64], k: usize) -> PowerSumVec {
    PowerSumVec::new(
        (1..=k as u32)
            .map(|j| t.iter().map(|&v| Pow::pow(BigInt::from(v), j)).sum())
            .collect(),
    )
}

fn disjoint(a: &[u64], b: &[u64]) -> bool {
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Equal => return false,
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
        }
    }
    true
}

/// `J*_{k,k}(X;h)`: solutions of the `s = k` system with `x_i != y_m` for all `i, m`.
///
/// Enumerates multisets, weighted by their number of orderings, and pairs
/// each `x` with the multisets `y` whose power sums equal `P(x) - h`.
pub fn count_distinct_j_star(k: usize, h: &HTuple, x: u64, budget: &Budget) -> Result<ExactCount> {
    if h.k() != k {
        return Err(Error::DegreeMismatch {
            expected: k,
            found: h.k(),
        });
    }
    if x == 0 {
        return Err(invalid("X must be at least 1"));
    }
    let multisets = binomial_f64(x + k as u64 - 1, k as u64);
    check_budget("multiset enumeration", multisets, budget.max_enumeration)?;
    let mut by_key: HashMap<PowerSumVec, Vec<(Vec<u64>, BigUint)>> = HashMap::new();
    for_each_multiset(k, x, &mut |t| {
        by_key
            .entry(multiset_key(t, k))
            .or_default()
            .push((t.to_vec(), orderings(t)));
    });
    let shift = h.as_vec();
    let total: BigUint = by_key
        .par_iter()
        .map(|(key, xs)| {
            let Some(ys) = by_key.get(&key.sub_unchecked(&shift)) else {
                return BigUint::zero();
            };
            let mut acc = BigUint::zero();
            for (xt, wx) in xs {
                for (yt, wy) in ys {
                    if disjoint(xt, yt) {
                        acc += wx * wy;
                    }
                }
            }
            acc
        })
        .sum();
    Ok(ExactCount(total))
}

/// Solutions of
/// `sum_{i<=u} x_i^j - y_i^j = sum_{m<=r} nu_j(w_m;h) - nu_j(z_m;h)` for `1 <= j <= k`,
/// with `x, y in [1, 2X]` and `w, z in [1, X]`.
///
/// Equivalently `P(x) + N(z) = P(y) + N(w)`, so the count is `sum_v C(v)^2`
/// for `C = r_u[1,2X] * n_r[1,X]`.
pub fn count_mixed_system(
    u: usize,
    r: usize,
    k: usize,
    h: &HTuple,
    x: u64,
    budget: &Budget,
) -> Result<ExactCount> {
    if u == 0 && r == 0 {
        return Err(invalid("u and r cannot both vanish"));
    }
    if h.k() != k {
        return Err(Error::DegreeMismatch {
            expected: k,
            found: h.k(),
        });
    }
    if x == 0 {
        return Err(invalid("X must be at least 1"));
    }
    let left = if u == 0 {
        CountMap::identity(k)
    } else {
        rep_count_map(u, k, 1, 2 * x as i64, budget)?
    };
    let right = nu_profile_map(r, h, x, budget)?;
    let combined = convolve_with_cap(&left, &right, budget.max_entries)?;
    let total: BigUint = combined
        .iter()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|(_, c)| *c * *c)
        .sum();
    Ok(ExactCount(total))
}

/// Counts pairs of map entries whose keys satisfy `|u_j - w_j| <= tol_j`.
fn count_within(rep: &CountMap, tol: &[BigInt]) -> ExactCount {
    if tol.is_empty() {
        let m = rep.mass();
        return ExactCount(&m * &m);
    }
    let mut buckets: BTreeMap<BigInt, Vec<(&PowerSumVec, &BigUint)>> = BTreeMap::new();
    for (key, c) in rep.iter() {
        buckets
            .entry(key.components()[0].clone())
            .or_default()
            .push((key, c));
    }
    let entries: Vec<(&PowerSumVec, &BigUint)> = rep.iter().collect();
    let total: BigUint = entries
        .par_iter()
        .map(|(u, cu)| {
            let u1 = &u.components()[0];
            let mut acc = BigUint::zero();
            for (_, bucket) in buckets.range(u1 - &tol[0]..=u1 + &tol[0]) {
                for (w, cw) in bucket {
                    let close = u
                        .components()
                        .iter()
                        .zip(w.components())
                        .zip(tol)
                        .skip(1)
                        .all(|((a, b), t)| (a - b).magnitude() <= t.magnitude());
                    if close {
                        acc += *cu * *cw;
                    }
                }
            }
            acc
        })
        .sum();
    ExactCount(total)
}

/// `Omega_1`: pairs `x, y in [1, X]^s` with `|sum x_i^j - y_i^j| <= s X^{j-1}` for `1 <= j <= k`.
pub fn count_inequality_omega1(s: usize, k: usize, x: u64, budget: &Budget) -> Result<ExactCount> {
    if s == 0 || k == 0 || x == 0 {
        return Err(invalid("s, k and X must be at least 1"));
    }
    let rep = rep_count_map(s, k, 1, x as i64, budget)?;
    let tol: Vec<BigInt> = (0..k as u32)
        .map(|e| BigInt::from(s) * Pow::pow(BigInt::from(x), e))
        .collect();
    Ok(count_within(&rep, &tol))
}

/// Largest integer `Y` with `Y^k <= X^{k-1}`, i.e. `floor(X^{1-1/k})`.
pub fn omega2_box_edge(k: usize, x: u64) -> u64 {
    if k <= 1 {
        return 1;
    }
    let bound = Pow::pow(BigUint::from(x), (k - 1) as u32);
    let mut y = (x as f64).powf(1.0 - 1.0 / k as f64).floor() as u64;
    while y > 1 && Pow::pow(BigUint::from(y), k as u32) > bound {
        y -= 1;
    }
    while Pow::pow(BigUint::from(y + 1), k as u32) <= bound {
        y += 1;
    }
    y.max(1)
}

/// `Omega_2`: pairs `x, y in [1, Y]^s`, `Y = floor(X^{1-1/k})`, with
/// `|sum x_i^j - y_i^j| <= s X^{j-1}` for `1 <= j < k`.
///
/// The threshold `s (X^{1-1/k})^j X^{-(k-j)/k}` simplifies to `s X^{j-1}`, and
/// the degree-`k` inequality holds automatically on the smaller box, so every
/// pair counted here is also counted by [`count_inequality_omega1`].
pub fn count_inequality_omega2(s: usize, k: usize, x: u64, budget: &Budget) -> Result<ExactCount> {
    if s == 0 || k == 0 || x == 0 {
        return Err(invalid("s, k and X must be at least 1"));
    }
    let y = omega2_box_edge(k, x);
    if k == 1 {
        return Ok(ExactCount(Pow::pow(BigUint::from(y), (2 * s) as u32)));
    }
    let rep = rep_count_map(s, k - 1, 1, y as i64, budget)?;
    let tol: Vec<BigInt> = (0..(k - 1) as u32)
        .map(|e| BigInt::from(s) * Pow::pow(BigInt::from(x), e))
        .collect();
    Ok(count_within(&rep, &tol))
}

/// The fixed part `(s, k, h)` of a ladder.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LadderTemplate {
    pub s: usize,
    pub k: usize,
    pub h: HTuple,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LadderPoint {
    #[serde(rename = "X")]
    pub x: u64,
    pub count: Option<ExactCount>,
    pub method: Option<Method>,
    pub wall_time_secs: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LadderResult {
    pub template: LadderTemplate,
    pub points: Vec<LadderPoint>,
}

impl LadderResult {
    /// `(X, count)` for the points that completed.
    pub fn completed(&self) -> Vec<(u64, &ExactCount)> {
        self.points
            .iter()
            .filter_map(|p| p.count.as_ref().map(|c| (p.x, c)))
            .collect()
    }
}

/// Computes `J_{s,k}(X;h)` at each `X`. A refused or failed point is
/// recorded with its error and the ladder moves on.
pub fn run_ladder(template: &LadderTemplate, xs: &[u64], budget: &Budget) -> Result<LadderResult> {
    if xs.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid("ladder X values must be strictly increasing"));
    }
    SystemParams::new(template.s, template.k, xs.first().copied().unwrap_or(1), template.h.clone())?;
    let points = xs
        .iter()
        .map(|&x| {
            let start = Instant::now();
            let outcome = SystemParams::new(template.s, template.k, x, template.h.clone())
                .and_then(|p| count_j(&p, budget));
            let wall_time_secs = start.elapsed().as_secs_f64();
            match outcome {
                Ok((count, method)) => LadderPoint {
                    x,
                    count: Some(count),
                    method: Some(method),
                    wall_time_secs,
                    error: None,
                },
                Err(e) => LadderPoint {
                    x,
                    count: None,
                    method: None,
                    wall_time_secs,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    Ok(LadderResult {
        template: template.clone(),
        points,
    })
}

/// `X^{s-1}`, the lower bound for the power-difference family `h_j = a^j - b^j`.
pub fn power_difference_floor(s: usize, x: u64) -> BigUint {
    Pow::pow(BigUint::from(x), (s - 1) as u32)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shiftpoly::{check_sigma_equalities, nu_eval};
    use proptest::prelude::*;

    fn h(v: &[i64]) -> HTuple {
        HTuple::from_i64s(v).unwrap()
    }

    fn params(s: usize, k: usize, x: u64, hv: &[i64]) -> SystemParams {
        SystemParams::new(s, k, x, h(hv)).unwrap()
    }

    fn b() -> Budget {
        Budget::default()
    }

    /// Solutions of the `s = k` system as `(x, y)` pairs, by nested enumeration.
    fn solutions(k: usize, x: u64, hv: &[i64]) -> Vec<(Vec<i64>, Vec<i64>)> {
        let n = 2 * k;
        let mut out = Vec::new();
        let mut t = vec![1i64; n];
        loop {
            let ok = (1..=k as u32).all(|j| {
                let lhs: i64 = (0..k).map(|i| t[i].pow(j) - t[k + i].pow(j)).sum();
                lhs == hv[j as usize - 1]
            });
            if ok {
                out.push((t[..k].to_vec(), t[k..].to_vec()));
            }
            let mut i = 0;
            while i < n && t[i] == x as i64 {
                t[i] = 1;
                i += 1;
            }
            if i == n {
                break;
            }
            t[i] += 1;
        }
        out
    }

    #[test]
    fn brute_force_examples() {
        assert_eq!(brute_force_j(&params(1, 2, 3, &[0, 0]), &b()).unwrap(), 3);
        assert_eq!(brute_force_j(&params(1, 2, 5, &[1, 3]), &b()).unwrap(), 1);
        assert_eq!(brute_force_j(&params(2, 2, 10, &[0, 0]), &b()).unwrap(), 190);
    }

    #[test]
    fn brute_force_routes_agree() {
        for (s, k, x, hv) in [(2, 3, 5, vec![1, 3, 7]), (2, 2, 6, vec![0, 0]), (1, 1, 4, vec![-2])] {
            let p = params(s, k, x, &hv);
            assert_eq!(ExactCount(brute_force_i128(&p)), ExactCount(brute_force_big(&p)));
        }
    }

    #[test]
    fn brute_force_refuses_over_budget() {
        let tight = Budget {
            max_enumeration: 1000,
            ..Budget::default()
        };
        match brute_force_j(&params(2, 2, 10, &[0, 0]), &tight) {
            Err(Error::BudgetExceeded { estimate, cap, .. }) => {
                assert_eq!(estimate.0, 10_000.0);
                assert_eq!(cap, 1000);
            }
            other => panic!("expected refusal, got {other:?}"),
        }
    }

    #[test]
    fn rep_map_examples() {
        let m = rep_count_map(1, 1, 1, 3, &b()).unwrap();
        assert_eq!(m.len(), 3);
        for v in 1..=3 {
            assert_eq!(m.get(&PowerSumVec::from_i64s(&[v])), Some(&BigUint::from(1u32)));
        }
        let m = rep_count_map(2, 1, 1, 2, &b()).unwrap();
        let expect = [(2, 1u32), (3, 2), (4, 1)];
        assert_eq!(m.len(), 3);
        for (v, c) in expect {
            assert_eq!(m.get(&PowerSumVec::from_i64s(&[v])), Some(&BigUint::from(c)));
        }
        assert_eq!(rep_count_map(3, 2, 1, 5, &b()).unwrap().mass(), BigUint::from(125u32));
        assert!(rep_count_map(0, 2, 1, 5, &b()).is_err());
        assert!(rep_count_map(1, 2, 5, 1, &b()).is_err());
    }

    #[test]
    fn rep_map_matches_self_convolution() {
        for x in 1..=4 {
            let one = rep_count_map(1, 3, 1, x, &b()).unwrap();
            let two = rep_count_map(2, 3, 1, x, &b()).unwrap();
            assert_eq!(crate::countmap::convolve(&one, &one).unwrap(), two);
        }
    }

    #[test]
    fn rep_map_budget_refusal() {
        let tight = Budget {
            max_entries: 100,
            ..Budget::default()
        };
        assert!(matches!(
            rep_count_map(3, 3, 1, 20, &tight),
            Err(Error::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn correlate_examples() {
        let p = params(1, 2, 5, &[1, 3]);
        assert_eq!(count_j_correlate(&p, &b()).unwrap(), 1);
        let p = params(2, 3, 6, &[1, 3, 7]);
        assert_eq!(
            count_j_correlate(&p, &b()).unwrap(),
            brute_force_j(&p, &b()).unwrap()
        );
        let rep = rep_count_map(2, 2, 1, 5, &b()).unwrap();
        let auto: BigUint = rep.iter().map(|(_, c)| c * c).sum();
        assert_eq!(correlate(&rep, &rep, &h(&[0, 0])).unwrap(), ExactCount(auto));
    }

    fn h_panel(k: usize) -> Vec<HTuple> {
        let mut panel = vec![HTuple::zero(k).unwrap()];
        for j in 1..=k {
            panel.push(HTuple::unit(k, j).unwrap());
        }
        panel.push(HTuple::power_difference(k, 2, 1).unwrap());
        panel.push(HTuple::power_difference(k, 3, 1).unwrap());
        panel
    }

    #[test]
    fn oracle_equivalence() {
        for k in 1..=3 {
            for s in 1..=3 {
                for x in 1..=8u64 {
                    if s == 3 && x > 6 {
                        continue;
                    }
                    for hh in h_panel(k) {
                        let p = SystemParams::new(s, k, x, hh).unwrap();
                        assert_eq!(
                            count_j_correlate(&p, &b()).unwrap(),
                            brute_force_j(&p, &b()).unwrap(),
                            "{p:?}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn oracle_equivalence_s3_x8_spot() {
        for hh in [h(&[0, 0, 0]), h(&[1, 3, 7]), h(&[0, 1, 0])] {
            let p = SystemParams::new(3, 3, 8, hh).unwrap();
            assert_eq!(
                count_j_correlate(&p, &b()).unwrap(),
                brute_force_j(&p, &b()).unwrap()
            );
        }
    }

    #[test]
    fn vanishing_when_s_at_most_zero_count() {
        for h2 in [-3, -1, 1, 2, 5] {
            for s in 1..=2 {
                for x in 1..=10 {
                    let p = params(s, 3, x, &[0, h2, 0]);
                    assert!(count_j_correlate(&p, &b()).unwrap().is_zero());
                }
            }
        }
    }

    #[test]
    fn power_difference_lower_bound() {
        for k in 1..=3 {
            for s in 1..=3 {
                let hh = HTuple::power_difference(k, 2, 1).unwrap();
                for x in 2..=7 {
                    let p = SystemParams::new(s, k, x, hh.clone()).unwrap();
                    let c = count_j_correlate(&p, &b()).unwrap();
                    assert!(c.0 >= power_difference_floor(s, x), "{p:?}");
                }
            }
        }
    }

    #[test]
    fn j_star_examples() {
        assert!(count_distinct_j_star(2, &h(&[0, 0]), 2, &b()).unwrap().is_zero());
        for hv in [[1, 3], [0, 2], [5, -1]] {
            assert!(count_distinct_j_star(2, &h(&hv), 1, &b()).unwrap().is_zero());
        }
        for l in 1..=3 {
            for hl in [1i64, 2, 6, -4] {
                let mut hv = vec![0; 3];
                hv[l - 1] = hl;
                for x in 1..=10 {
                    let p = SystemParams::new(3, 3, x, h(&hv)).unwrap();
                    assert_eq!(
                        count_distinct_j_star(3, &h(&hv), x, &b()).unwrap(),
                        count_j_correlate(&p, &b()).unwrap(),
                        "h={hv:?} X={x}"
                    );
                }
            }
        }
    }

    #[test]
    fn j_star_counts_distinct_solutions() {
        for (hv, x) in [(vec![1, 3], 6u64), (vec![0, 0], 4), (vec![2, 8], 7)] {
            let expected = solutions(2, x, &hv)
                .iter()
                .filter(|(a, c)| a.iter().all(|v| !c.contains(v)))
                .count() as u64;
            assert_eq!(count_distinct_j_star(2, &h(&hv), x, &b()).unwrap(), expected);
        }
    }

    #[test]
    fn single_h_solutions_share_low_sigmas() {
        for (hv, l) in [([0, 6, 0], 2usize), ([0, 0, 6], 3), ([0, 2, 0], 2)] {
            for (x, y) in solutions(3, 7, &hv) {
                assert!(check_sigma_equalities(&x, &y, l), "{x:?} {y:?}");
                assert!(crate::shiftpoly::single_h_degree_bound(&x, &y, l).unwrap());
            }
        }
    }

    #[test]
    fn mixed_system_r0_is_homogeneous_count() {
        for (u, k, x) in [(1, 2, 3u64), (2, 2, 3), (2, 3, 2)] {
            let p = SystemParams::new(u, k, 2 * x, HTuple::zero(k).unwrap()).unwrap();
            assert_eq!(
                count_mixed_system(u, 0, k, &h(&vec![4; k]), x, &b()).unwrap(),
                brute_force_j(&p, &b()).unwrap()
            );
        }
    }

    #[test]
    fn mixed_system_u0_contains_diagonal() {
        for hv in [[1, 0, 0], [2, -1, 3], [1, 1, 1]] {
            for x in 1..=6u64 {
                let c = count_mixed_system(0, 1, 3, &h(&hv), x, &b()).unwrap();
                assert!(c.0 >= BigUint::from(x));
            }
        }
        assert!(count_mixed_system(0, 0, 3, &h(&[1, 0, 0]), 3, &b()).is_err());
    }

    #[test]
    fn mixed_system_nested_loops() {
        let hh = h(&[0, 1, 0]);
        let x = 4i64;
        let nu = |w: i64| -> Vec<BigInt> { (1..=3).map(|j| nu_eval(j, &BigInt::from(w), &hh).unwrap()).collect() };
        let mut direct = 0u64;
        for a in 1..=2 * x {
            for c in 1..=2 * x {
                for w in 1..=x {
                    for z in 1..=x {
                        let (nw, nz) = (nu(w), nu(z));
                        let ok = (1..=3u32).all(|j| {
                            let lhs = BigInt::from(a.pow(j) - c.pow(j));
                            lhs == &nw[j as usize - 1] - &nz[j as usize - 1]
                        });
                        direct += ok as u64;
                    }
                }
            }
        }
        assert_eq!(count_mixed_system(1, 1, 3, &hh, 4, &b()).unwrap(), direct);
    }

    fn omega1_direct(s: usize, k: usize, x: u64) -> u64 {
        omega_direct(s, x, &(0..k as u32).map(|e| s as i64 * (x as i64).pow(e)).collect::<Vec<_>>())
    }

    fn omega_direct(s: usize, edge: u64, tol: &[i64]) -> u64 {
        let n = 2 * s;
        let mut t = vec![1i64; n];
        let mut count = 0;
        loop {
            let ok = tol.iter().enumerate().all(|(j, &bound)| {
                let e = j as u32 + 1;
                let d: i64 = (0..s).map(|i| t[i].pow(e) - t[s + i].pow(e)).sum();
                d.abs() <= bound
            });
            count += ok as u64;
            let mut i = 0;
            while i < n && t[i] == edge as i64 {
                t[i] = 1;
                i += 1;
            }
            if i == n {
                return count;
            }
            t[i] += 1;
        }
    }

    #[test]
    fn omega_examples() {
        assert_eq!(count_inequality_omega1(1, 2, 3, &b()).unwrap(), 5);
        assert_eq!(count_inequality_omega1(1, 2, 4, &b()).unwrap(), 6);
        assert_eq!(count_inequality_omega2(1, 2, 4, &b()).unwrap(), 4);
        assert_eq!(omega2_box_edge(2, 4), 2);
        assert_eq!(omega2_box_edge(3, 8), 4);
        assert_eq!(omega2_box_edge(3, 7), 3);
        assert_eq!(omega2_box_edge(2, 3), 1);
        // box edge 1: only the all-ones pair
        assert_eq!(count_inequality_omega2(2, 2, 3, &b()).unwrap(), 1);
    }

    #[test]
    fn omega_against_direct_enumeration() {
        for s in 1..=2 {
            for k in 1..=3 {
                for x in 1..=6u64 {
                    assert_eq!(
                        count_inequality_omega1(s, k, x, &b()).unwrap(),
                        omega1_direct(s, k, x),
                        "s={s} k={k} X={x}"
                    );
                    let y = omega2_box_edge(k, x);
                    let tol: Vec<i64> = (0..k as u32 - 1).map(|e| s as i64 * (x as i64).pow(e)).collect();
                    assert_eq!(
                        count_inequality_omega2(s, k, x, &b()).unwrap(),
                        omega_direct(s, y, &tol)
                    );
                }
            }
        }
    }

    #[test]
    fn omega_orderings() {
        for s in 1..=3 {
            for k in 1..=3 {
                let mut prev = ExactCount::zero();
                for x in 1..=7 {
                    let o1 = count_inequality_omega1(s, k, x, &b()).unwrap();
                    let o2 = count_inequality_omega2(s, k, x, &b()).unwrap();
                    let j0 = count_j_correlate(
                        &SystemParams::new(s, k, x, HTuple::zero(k).unwrap()).unwrap(),
                        &b(),
                    )
                    .unwrap();
                    assert!(o1.0 >= o2.0);
                    assert!(o1.0 >= j0.0);
                    assert!(o1.0 >= prev.0);
                    prev = o1;
                }
            }
        }
    }

    #[test]
    fn ladder_examples() {
        let t = LadderTemplate { s: 1, k: 2, h: h(&[0, 0]) };
        let r = run_ladder(&t, &[2, 4, 8], &b()).unwrap();
        let counts: Vec<u64> = r.completed().iter().map(|(_, c)| c.to_u64().unwrap()).collect();
        assert_eq!(counts, vec![2, 4, 8]);
        assert!(r.points.iter().all(|p| p.method == Some(Method::Correlate)));

        let t = LadderTemplate { s: 2, k: 2, h: h(&[0, 0]) };
        let r = run_ladder(&t, &[5, 10], &b()).unwrap();
        let counts: Vec<u64> = r.completed().iter().map(|(_, c)| c.to_u64().unwrap()).collect();
        assert_eq!(counts, vec![45, 190]);
        assert!(run_ladder(&t, &[10, 5], &b()).is_err());
    }

    #[test]
    fn ladder_falls_back_and_continues() {
        let t = LadderTemplate { s: 2, k: 2, h: h(&[0, 0]) };
        let budget = Budget {
            max_entries: 10,
            max_enumeration: 10_000,
            max_grid: 1,
        };
        let r = run_ladder(&t, &[2, 5, 20], &budget).unwrap();
        assert_eq!(r.points[0].method, Some(Method::Correlate));
        assert_eq!(r.points[1].method, Some(Method::BruteForce));
        assert_eq!(r.points[1].count.as_ref().unwrap(), &45u64);
        assert!(r.points[2].count.is_none());
        assert!(r.points[2].error.as_ref().unwrap().contains("budget"));
    }

    #[test]
    fn ladder_counts_nondecreasing() {
        let t = LadderTemplate { s: 2, k: 3, h: h(&[1, 3, 7]) };
        let r = run_ladder(&t, &[2, 3, 5, 8, 12], &b()).unwrap();
        let counts = r.completed();
        assert!(counts.windows(2).all(|w| w[0].1 .0 <= w[1].1 .0));
    }

    #[test]
    fn parallel_determinism() {
        let p = params(3, 3, 7, &[1, 3, 7]);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let single = pool.install(|| (count_j_correlate(&p, &b()).unwrap(), brute_force_j(&p, &b()).unwrap()));
        let pool = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let multi = pool.install(|| (count_j_correlate(&p, &b()).unwrap(), brute_force_j(&p, &b()).unwrap()));
        assert_eq!(single, multi);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn correlate_matches_brute_force(
            s in 1usize..=2,
            k in 1usize..=3,
            x in 1u64..=6,
            hv in prop::collection::vec(-10i64..=10, 3),
        ) {
            let p = SystemParams::new(s, k, x, h(&hv[..k])).unwrap();
            prop_assert_eq!(count_j_correlate(&p, &b()).unwrap(), brute_force_j(&p, &b()).unwrap());
        }

        #[test]
        fn rep_map_mass(s in 1usize..=3, k in 1usize..=3, lo in -3i64..=3, width in 0i64..=4) {
            let m = rep_count_map(s, k, lo, lo + width, &b()).unwrap();
            prop_assert_eq!(m.mass(), Pow::pow(BigUint::from((width + 1) as u64), s as u32));
        }
    }
}
