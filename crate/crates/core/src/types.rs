//! Exact domain types shared by every module.

use std::fmt;
use std::ops::{Add, Sub};
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Pow, Signed, ToPrimitive, Zero};
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{invalid, Error, Result};

/// The inhomogeneity vector `h = (h_1, ..., h_k)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct HTuple {
    values: Vec<BigInt>,
}

impl HTuple {
    pub fn new(values: Vec<BigInt>) -> Result<Self> {
        if values.is_empty() {
            return Err(invalid("h must have at least one component"));
        }
        Ok(HTuple { values })
    }

    pub fn from_i64s(values: &[i64]) -> Result<Self> {
        Self::new(values.iter().map(|&v| BigInt::from(v)).collect())
    }

    pub fn zero(k: usize) -> Result<Self> {
        Self::new(vec![BigInt::zero(); k])
    }

    /// Unit vector `e_j` (1-based index).
    pub fn unit(k: usize, j: usize) -> Result<Self> {
        if j == 0 || j > k {
            return Err(invalid(format!("unit index {j} outside 1..={k}")));
        }
        let mut v = vec![BigInt::zero(); k];
        v[j - 1] = BigInt::one();
        Self::new(v)
    }

    /// `h_j = a^j - b^j`, the family with many subdiagonal solutions.
    pub fn power_difference(k: usize, a: i64, b: i64) -> Result<Self> {
        let (a, b) = (BigInt::from(a), BigInt::from(b));
        Self::new(
            (1..=k as u32)
                .map(|j| Pow::pow(&a, j) - Pow::pow(&b, j))
                .collect(),
        )
    }

    pub fn k(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[BigInt] {
        &self.values
    }

    /// `h_j` with 1-based `j`.
    pub fn get(&self, j: usize) -> &BigInt {
        &self.values[j - 1]
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(Zero::is_zero)
    }

    /// Smallest `l` with `h_l != 0`.
    pub fn smallest_nonzero_index(&self) -> Result<usize> {
        self.values
            .iter()
            .position(|v| !v.is_zero())
            .map(|i| i + 1)
            .ok_or(Error::ZeroTuple)
    }

    /// Number of vanishing components.
    pub fn zero_count(&self) -> usize {
        self.values.iter().filter(|v| v.is_zero()).count()
    }

    /// Indices `j` with `h_j != 0`.
    pub fn support(&self) -> Vec<usize> {
        (1..=self.k()).filter(|&j| !self.get(j).is_zero()).collect()
    }

    /// First `k` components.
    pub fn truncate(&self, k: usize) -> Result<Self> {
        if k == 0 || k > self.k() {
            return Err(invalid(format!("cannot truncate h of length {} to {k}", self.k())));
        }
        Self::new(self.values[..k].to_vec())
    }

    pub fn as_vec(&self) -> PowerSumVec {
        PowerSumVec::new(self.values.clone())
    }

    pub fn max_abs(&self) -> BigInt {
        self.values.iter().map(|v| v.abs()).max().unwrap_or_default()
    }
}

impl Add for &HTuple {
    type Output = Result<HTuple>;

    fn add(self, rhs: &HTuple) -> Result<HTuple> {
        if self.k() != rhs.k() {
            return Err(Error::DegreeMismatch {
                expected: self.k(),
                found: rhs.k(),
            });
        }
        HTuple::new(
            self.values
                .iter()
                .zip(&rhs.values)
                .map(|(a, b)| a + b)
                .collect(),
        )
    }
}

impl fmt::Display for HTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.values.iter().map(ToString::to_string).collect();
        write!(f, "{}", parts.join(","))
    }
}

impl FromStr for HTuple {
    type Err = Error;

    /// Comma-separated signed integers, e.g. `"0,5,0"`.
    fn from_str(s: &str) -> Result<Self> {
        let values = s
            .split(',')
            .map(|p| {
                p.trim()
                    .parse::<BigInt>()
                    .map_err(|_| invalid(format!("bad h component {p:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        HTuple::new(values)
    }
}

impl Serialize for HTuple {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for HTuple {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(de::Error::custom)
    }
}

/// Parameters `(s, k, X, h)` of one inhomogeneous system.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SystemParams {
    pub s: usize,
    pub k: usize,
    #[serde(rename = "X")]
    pub x: u64,
    pub h: HTuple,
}

impl SystemParams {
    pub fn new(s: usize, k: usize, x: u64, h: HTuple) -> Result<Self> {
        if s == 0 {
            return Err(invalid("s must be at least 1"));
        }
        if x == 0 {
            return Err(invalid("X must be at least 1"));
        }
        if h.k() != k {
            return Err(Error::DegreeMismatch {
                expected: k,
                found: h.k(),
            });
        }
        Ok(SystemParams { s, k, x, h })
    }

    pub fn with_x(&self, x: u64) -> Result<Self> {
        Self::new(self.s, self.k, x, self.h.clone())
    }
}

/// Exact vector of power sums `(sum x_i, sum x_i^2, ..., sum x_i^k)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PowerSumVec {
    v: Vec<BigInt>,
}

impl PowerSumVec {
    pub fn new(v: Vec<BigInt>) -> Self {
        PowerSumVec { v }
    }

    pub fn zero(k: usize) -> Self {
        PowerSumVec {
            v: vec![BigInt::zero(); k],
        }
    }

    pub fn from_i64s(v: &[i64]) -> Self {
        PowerSumVec {
            v: v.iter().map(|&x| BigInt::from(x)).collect(),
        }
    }

    pub fn k(&self) -> usize {
        self.v.len()
    }

    pub fn components(&self) -> &[BigInt] {
        &self.v
    }

    pub fn is_zero(&self) -> bool {
        self.v.iter().all(Zero::is_zero)
    }

    fn check_degree(&self, other: &Self) -> Result<()> {
        if self.k() != other.k() {
            return Err(Error::DegreeMismatch {
                expected: self.k(),
                found: other.k(),
            });
        }
        Ok(())
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        self.check_degree(other)?;
        Ok(self.add_unchecked(other))
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self> {
        self.check_degree(other)?;
        Ok(self.sub_unchecked(other))
    }

    pub(crate) fn add_unchecked(&self, other: &Self) -> Self {
        PowerSumVec {
            v: self.v.iter().zip(&other.v).map(|(a, b)| a + b).collect(),
        }
    }

    pub(crate) fn sub_unchecked(&self, other: &Self) -> Self {
        PowerSumVec {
            v: self.v.iter().zip(&other.v).map(|(a, b)| a - b).collect(),
        }
    }
}

impl fmt::Display for PowerSumVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.v.iter().map(ToString::to_string).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// `(sum x_i, ..., sum x_i^k)` in exact arithmetic. The empty tuple maps to zero.
pub fn power_sum_vector(x: &[i64], k: usize) -> PowerSumVec {
    let mut v = vec![BigInt::zero(); k];
    for &xi in x {
        let base = BigInt::from(xi);
        let mut p = BigInt::one();
        for slot in v.iter_mut() {
            p *= &base;
            *slot += &p;
        }
    }
    PowerSumVec { v }
}

pub fn vec_add(a: &PowerSumVec, b: &PowerSumVec) -> Result<PowerSumVec> {
    a.checked_add(b)
}

pub fn vec_sub(a: &PowerSumVec, b: &PowerSumVec) -> Result<PowerSumVec> {
    a.checked_sub(b)
}

pub fn smallest_nonzero_index(h: &HTuple) -> Result<usize> {
    h.smallest_nonzero_index()
}

/// Unbounded non-negative count. Serialises as a JSON number when it fits
/// in `u64` and as a decimal string otherwise.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ExactCount(pub BigUint);

impl ExactCount {
    pub fn zero() -> Self {
        ExactCount(BigUint::zero())
    }

    pub fn value(&self) -> &BigUint {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::INFINITY)
    }

    pub fn to_u64(&self) -> Option<u64> {
        self.0.to_u64()
    }
}

impl From<u64> for ExactCount {
    fn from(v: u64) -> Self {
        ExactCount(BigUint::from(v))
    }
}

impl From<BigUint> for ExactCount {
    fn from(v: BigUint) -> Self {
        ExactCount(v)
    }
}

impl PartialEq<u64> for ExactCount {
    fn eq(&self, other: &u64) -> bool {
        self.0 == BigUint::from(*other)
    }
}

impl fmt::Display for ExactCount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl Serialize for ExactCount {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self.0.to_u64() {
            Some(v) => serializer.serialize_u64(v),
            None => serializer.serialize_str(&self.0.to_string()),
        }
    }
}

impl<'de> Deserialize<'de> for ExactCount {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct CountVisitor;

        impl Visitor<'_> for CountVisitor {
            type Value = ExactCount;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a non-negative integer or decimal string")
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<ExactCount, E> {
                Ok(ExactCount::from(v))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<ExactCount, E> {
                u64::try_from(v)
                    .map(ExactCount::from)
                    .map_err(|_| E::custom("negative count"))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<ExactCount, E> {
                v.parse::<BigUint>().map(ExactCount).map_err(E::custom)
            }
        }

        deserializer.deserialize_any(CountVisitor)
    }
}

impl Add for ExactCount {
    type Output = ExactCount;

    fn add(self, rhs: ExactCount) -> ExactCount {
        ExactCount(self.0 + rhs.0)
    }
}

impl Sub for &ExactCount {
    type Output = Option<ExactCount>;

    fn sub(self, rhs: &ExactCount) -> Option<ExactCount> {
        (self.0 >= rhs.0).then(|| ExactCount(&self.0 - &rhs.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn power_sum_examples() {
        assert_eq!(power_sum_vector(&[2], 3), PowerSumVec::from_i64s(&[2, 4, 8]));
        assert_eq!(power_sum_vector(&[], 2), PowerSumVec::from_i64s(&[0, 0]));
        // 1+2+3 = 6, 1+4+9 = 14
        let brute: i64 = [1i64, 2, 3].iter().map(|x| x * x).sum();
        assert_eq!(brute, 14);
        assert_eq!(power_sum_vector(&[1, 2, 3], 2), PowerSumVec::from_i64s(&[6, 14]));
    }

    #[test]
    fn power_sums_do_not_overflow() {
        let v = power_sum_vector(&[i64::MAX, i64::MAX], 3);
        let m = BigInt::from(i64::MAX);
        assert_eq!(v.components()[2], &m * &m * &m * 2);
    }

    #[test]
    fn vector_arithmetic() {
        let a = PowerSumVec::from_i64s(&[1, 2]);
        let b = PowerSumVec::from_i64s(&[3, 4]);
        assert_eq!(vec_add(&a, &b).unwrap(), PowerSumVec::from_i64s(&[4, 6]));
        assert!(vec_sub(&a, &a).unwrap().is_zero());
        let c = PowerSumVec::from_i64s(&[5, 25]);
        let d = PowerSumVec::from_i64s(&[1, 3]);
        assert_eq!(vec_sub(&c, &d).unwrap(), PowerSumVec::from_i64s(&[4, 22]));
        let three = PowerSumVec::zero(3);
        assert!(matches!(
            vec_add(&a, &three),
            Err(Error::DegreeMismatch { expected: 2, found: 3 })
        ));
    }

    #[test]
    fn smallest_index() {
        let h = HTuple::from_i64s(&[0, 3, 0]).unwrap();
        assert_eq!(smallest_nonzero_index(&h).unwrap(), 2);
        let h = HTuple::from_i64s(&[1, 0, 0]).unwrap();
        assert_eq!(smallest_nonzero_index(&h).unwrap(), 1);
        let h = HTuple::from_i64s(&[0, 0, 0]).unwrap();
        assert!(matches!(smallest_nonzero_index(&h), Err(Error::ZeroTuple)));
    }

    #[test]
    fn h_parsing_and_families() {
        let h: HTuple = "0,-5, 7".parse().unwrap();
        assert_eq!(h, HTuple::from_i64s(&[0, -5, 7]).unwrap());
        assert!("1,x".parse::<HTuple>().is_err());
        let w = HTuple::power_difference(3, 2, 1).unwrap();
        assert_eq!(w, HTuple::from_i64s(&[1, 3, 7]).unwrap());
        assert_eq!(w.zero_count(), 0);
        assert_eq!(HTuple::from_i64s(&[0, 5, 0]).unwrap().zero_count(), 2);
    }

    #[test]
    fn system_params_validation() {
        let h = HTuple::zero(2).unwrap();
        assert!(SystemParams::new(0, 2, 3, h.clone()).is_err());
        assert!(SystemParams::new(1, 2, 0, h.clone()).is_err());
        assert!(SystemParams::new(1, 3, 3, h.clone()).is_err());
        assert!(SystemParams::new(1, 2, 3, h).is_ok());
    }

    #[test]
    fn exact_count_serde() {
        let small = ExactCount::from(190);
        assert_eq!(serde_json::to_string(&small).unwrap(), "190");
        let big = ExactCount("123456789012345678901234567890".parse().unwrap());
        let text = serde_json::to_string(&big).unwrap();
        assert_eq!(text, "\"123456789012345678901234567890\"");
        let back: ExactCount = serde_json::from_str(&text).unwrap();
        assert_eq!(back, big);
    }

    proptest! {
        #[test]
        fn concatenation_is_additive(
            x in prop::collection::vec(-1000i64..1000, 0..6),
            y in prop::collection::vec(-1000i64..1000, 0..6),
            k in 1usize..6,
        ) {
            let mut xy = x.clone();
            xy.extend_from_slice(&y);
            let joined = power_sum_vector(&xy, k);
            let parts = vec_add(&power_sum_vector(&x, k), &power_sum_vector(&y, k)).unwrap();
            prop_assert_eq!(joined, parts);
        }

        #[test]
        fn self_difference_vanishes(v in prop::collection::vec(any::<i64>(), 1..6)) {
            let a = PowerSumVec::from_i64s(&v);
            prop_assert!(vec_sub(&a, &a).unwrap().is_zero());
        }

        #[test]
        fn box_bounds_hold(x in prop::collection::vec(1i64..=20, 1..5), k in 1usize..5) {
            let s = x.len() as i64;
            let v = power_sum_vector(&x, k);
            let big_x = 20i64;
            prop_assert!(v.components()[0] >= BigInt::from(s));
            prop_assert!(v.components()[0] <= BigInt::from(s * big_x));
            for (j, c) in v.components().iter().enumerate() {
                prop_assert!(c > &BigInt::zero());
                prop_assert!(c <= &(BigInt::from(s) * BigInt::from(big_x).pow(j as u32 + 1)));
            }
        }
    }
}
