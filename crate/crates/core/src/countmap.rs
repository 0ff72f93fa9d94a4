//! Sparse exact representation functions and their cache-file format.
//!
//! A [`CountMap`] sends a key vector `v` to the number of tuples whose
//! profile (power sums, or shift-polynomial values) equals `v`. Maps combine
//! by convolution, and the number of solutions of a system is a correlation
//! of two maps at the shift `h`.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use num_bigint::{BigInt, BigUint};
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_budget, Error, Result};
use crate::types::{ExactCount, HTuple, PowerSumVec};

pub const FORMAT_VERSION: u32 = 1;

/// What the keys of a map enumerate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapKind {
    /// Keys are power-sum vectors of `s`-tuples drawn from `range`.
    PowerSums,
    /// Keys are sums of `(nu_1(w;h), ..., nu_k(w;h))` over `s`-tuples.
    NuProfile,
    /// Convolution of maps of different kinds.
    Mixed,
}

/// Provenance carried by every map and written as the first cache line.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MapMeta {
    pub format_version: u32,
    pub kind: MapKind,
    pub s: usize,
    pub k: usize,
    #[serde(rename = "X")]
    pub x: i64,
    pub range: (i64, i64),
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<HTuple>,
}

#[derive(Clone, Debug)]
pub struct CountMap {
    meta: MapMeta,
    entries: HashMap<PowerSumVec, BigUint>,
}

impl PartialEq for CountMap {
    fn eq(&self, other: &Self) -> bool {
        self.meta.k == other.meta.k && self.entries == other.entries
    }
}

impl CountMap {
    /// The convolution identity `{0: 1}`.
    pub fn identity(k: usize) -> Self {
        let mut entries = HashMap::new();
        entries.insert(PowerSumVec::zero(k), BigUint::from(1u32));
        CountMap {
            meta: MapMeta {
                format_version: FORMAT_VERSION,
                kind: MapKind::PowerSums,
                s: 0,
                k,
                x: 0,
                range: (1, 0),
                h: None,
            },
            entries,
        }
    }

    /// Builds a map by counting the given keys. Every key must have degree `meta.k`.
    pub fn from_keys<I>(meta: MapMeta, keys: I) -> Result<Self>
    where
        I: IntoIterator<Item = PowerSumVec>,
    {
        let mut entries: HashMap<PowerSumVec, BigUint> = HashMap::new();
        for key in keys {
            if key.k() != meta.k {
                return Err(Error::DegreeMismatch {
                    expected: meta.k,
                    found: key.k(),
                });
            }
            *entries.entry(key).or_default() += 1u32;
        }
        Ok(CountMap { meta, entries })
    }

    pub(crate) fn from_entries(meta: MapMeta, entries: HashMap<PowerSumVec, BigUint>) -> Self {
        debug_assert!(entries.values().all(|c| !c.is_zero()));
        CountMap { meta, entries }
    }

    pub fn meta(&self) -> &MapMeta {
        &self.meta
    }

    pub fn k(&self) -> usize {
        self.meta.k
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, key: &PowerSumVec) -> Option<&BigUint> {
        self.entries.get(key)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&PowerSumVec, &BigUint)> {
        self.entries.iter()
    }

    /// Total number of tuples represented.
    pub fn mass(&self) -> BigUint {
        self.entries.values().sum()
    }

    /// Entries in lexicographic key order.
    pub fn sorted_entries(&self) -> Vec<(&PowerSumVec, &BigUint)> {
        let mut v: Vec<_> = self.entries.iter().collect();
        v.sort_unstable_by(|a, b| a.0.cmp(b.0));
        v
    }

    /// Per-coordinate `(min, max)` over the stored keys.
    pub fn key_bounds(&self) -> Vec<(BigInt, BigInt)> {
        let k = self.k();
        let mut bounds: Option<Vec<(BigInt, BigInt)>> = None;
        for key in self.entries.keys() {
            match bounds.as_mut() {
                None => {
                    bounds = Some(key.components().iter().map(|c| (c.clone(), c.clone())).collect())
                }
                Some(b) => {
                    for (slot, c) in b.iter_mut().zip(key.components()) {
                        if c < &slot.0 {
                            slot.0 = c.clone();
                        }
                        if c > &slot.1 {
                            slot.1 = c.clone();
                        }
                    }
                }
            }
        }
        bounds.unwrap_or_else(|| vec![(BigInt::zero(), BigInt::zero()); k])
    }

    /// Adds another map's multiplicities into this one.
    pub fn merge(&mut self, other: CountMap) -> Result<()> {
        if self.k() != other.k() {
            return Err(Error::DegreeMismatch {
                expected: self.k(),
                found: other.k(),
            });
        }
        for (key, c) in other.entries {
            *self.entries.entry(key).or_default() += c;
        }
        Ok(())
    }

    pub fn with_meta(mut self, meta: MapMeta) -> Self {
        self.meta = meta;
        self
    }

    /// Serialises to the cache format: a JSON metadata line, then one
    /// `v_1,...,v_k,count` line per entry in lexicographic key order.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        let meta = serde_json::to_string(&self.meta).map_err(|e| Error::Format(e.to_string()))?;
        writeln!(w, "{meta}")?;
        for (key, count) in self.sorted_entries() {
            let mut line = String::new();
            for c in key.components() {
                line.push_str(&c.to_string());
                line.push(',');
            }
            line.push_str(&count.to_string());
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    pub fn read_from<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let first = lines
            .next()
            .ok_or_else(|| Error::Format("empty cache file".into()))??;
        let meta: MapMeta =
            serde_json::from_str(&first).map_err(|e| Error::Format(e.to_string()))?;
        if meta.format_version != FORMAT_VERSION {
            return Err(Error::Format(format!(
                "format version {} (expected {FORMAT_VERSION})",
                meta.format_version
            )));
        }
        let mut entries = HashMap::new();
        let mut previous: Option<PowerSumVec> = None;
        for (n, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != meta.k + 1 {
                return Err(Error::Format(format!("line {}: expected {} fields", n + 2, meta.k + 1)));
            }
            let key = PowerSumVec::new(
                fields[..meta.k]
                    .iter()
                    .map(|f| f.parse::<BigInt>().map_err(|e| Error::Format(e.to_string())))
                    .collect::<Result<_>>()?,
            );
            let count: BigUint = fields[meta.k]
                .parse()
                .map_err(|_| Error::Format(format!("line {}: bad count", n + 2)))?;
            if count.is_zero() {
                return Err(Error::Format(format!("line {}: zero multiplicity", n + 2)));
            }
            if previous.as_ref().is_some_and(|p| p >= &key) {
                return Err(Error::Format(format!("line {}: keys out of order", n + 2)));
            }
            previous = Some(key.clone());
            entries.insert(key, count);
        }
        Ok(CountMap { meta, entries })
    }
}

/// Upper bound on the number of distinct keys of `a * b`.
pub fn convolution_size_estimate(a: &CountMap, b: &CountMap) -> f64 {
    let pairs = a.len() as f64 * b.len() as f64;
    let boxed: f64 = a
        .key_bounds()
        .iter()
        .zip(b.key_bounds())
        .map(|((alo, ahi), (blo, bhi))| {
            let width = (ahi - alo) + (bhi - blo) + 1u32;
            width.to_f64().unwrap_or(f64::INFINITY)
        })
        .product();
    pairs.min(boxed)
}

/// `(a*b)(v) = sum_u a(u) b(v-u)`.
pub fn convolve(a: &CountMap, b: &CountMap) -> Result<CountMap> {
    convolve_with_cap(a, b, u64::MAX)
}

pub(crate) fn convolve_with_cap(a: &CountMap, b: &CountMap, cap: u64) -> Result<CountMap> {
    if a.k() != b.k() {
        return Err(Error::DegreeMismatch {
            expected: a.k(),
            found: b.k(),
        });
    }
    check_budget("convolution entries", convolution_size_estimate(a, b), cap)?;
    let (outer, inner) = if a.len() >= b.len() { (a, b) } else { (b, a) };
    let outer_entries = outer.sorted_entries();
    let inner_entries = inner.sorted_entries();
    let chunk = (outer_entries.len() / (4 * rayon::current_num_threads()).max(1)).max(64);
    let entries = outer_entries
        .par_chunks(chunk)
        .map(|part| {
            let mut acc: HashMap<PowerSumVec, BigUint> = HashMap::new();
            for (u, cu) in part {
                for (w, cw) in &inner_entries {
                    *acc.entry(u.add_unchecked(w)).or_default() += *cu * *cw;
                }
            }
            acc
        })
        .reduce(HashMap::new, |mut x, y| {
            if x.len() < y.len() {
                return merge_into(y, x);
            }
            for (key, c) in y {
                *x.entry(key).or_default() += c;
            }
            x
        });
    let meta = convolved_meta(a.meta(), b.meta());
    Ok(CountMap::from_entries(meta, entries))
}

fn merge_into(
    mut x: HashMap<PowerSumVec, BigUint>,
    y: HashMap<PowerSumVec, BigUint>,
) -> HashMap<PowerSumVec, BigUint> {
    for (key, c) in y {
        *x.entry(key).or_default() += c;
    }
    x
}

fn convolved_meta(a: &MapMeta, b: &MapMeta) -> MapMeta {
    if a.s == 0 {
        return b.clone();
    }
    if b.s == 0 {
        return a.clone();
    }
    let same = a.kind == b.kind && a.range == b.range && a.h == b.h;
    MapMeta {
        format_version: FORMAT_VERSION,
        kind: if same { a.kind } else { MapKind::Mixed },
        s: a.s + b.s,
        k: a.k,
        x: a.x.max(b.x),
        range: if same {
            a.range
        } else {
            (a.range.0.min(b.range.0), a.range.1.max(b.range.1))
        },
        h: if same { a.h.clone() } else { None },
    }
}

/// `sum_w a(w + h) b(w)`: the number of pairs whose keys differ by `h`.
/// Iterates over the smaller map and probes the larger one.
pub fn correlate(a: &CountMap, b: &CountMap, h: &HTuple) -> Result<ExactCount> {
    if a.k() != b.k() {
        return Err(Error::DegreeMismatch {
            expected: a.k(),
            found: b.k(),
        });
    }
    if h.k() != a.k() {
        return Err(Error::DegreeMismatch {
            expected: a.k(),
            found: h.k(),
        });
    }
    let shift = h.as_vec();
    let total: BigUint = if b.len() <= a.len() {
        b.entries
            .par_iter()
            .filter_map(|(w, cw)| a.get(&w.add_unchecked(&shift)).map(|ca| ca * cw))
            .sum()
    } else {
        a.entries
            .par_iter()
            .filter_map(|(u, cu)| b.get(&u.sub_unchecked(&shift)).map(|cb| cb * cu))
            .sum()
    };
    Ok(ExactCount(total))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meta(k: usize) -> MapMeta {
        MapMeta {
            format_version: FORMAT_VERSION,
            kind: MapKind::PowerSums,
            s: 1,
            k,
            x: 3,
            range: (1, 3),
            h: None,
        }
    }

    fn line_map(values: &[i64]) -> CountMap {
        CountMap::from_keys(meta(1), values.iter().map(|&v| PowerSumVec::from_i64s(&[v]))).unwrap()
    }

    #[test]
    fn identity_is_neutral() {
        let b = line_map(&[1, 2, 2, 5]);
        let id = CountMap::identity(1);
        assert_eq!(convolve(&id, &b).unwrap(), b);
        assert_eq!(convolve(&b, &id).unwrap(), b);
    }

    #[test]
    fn mass_is_multiplicative() {
        let a = line_map(&[1, 2, 3, 4]);
        let b = line_map(&[0, 0, 1, 7, 7, 7, 8, 9, 10]);
        let c = convolve(&a, &b).unwrap();
        assert_eq!(c.mass(), BigUint::from(36u32));
        assert!(c.iter().all(|(_, m)| !m.is_zero()));
    }

    #[test]
    fn degree_mismatch_is_rejected() {
        let a = line_map(&[1]);
        let b = CountMap::identity(2);
        assert!(matches!(convolve(&a, &b), Err(Error::DegreeMismatch { .. })));
        let h = HTuple::zero(2).unwrap();
        assert!(matches!(correlate(&a, &a, &h), Err(Error::DegreeMismatch { .. })));
    }

    #[test]
    fn correlation_counts_shifted_pairs() {
        let a = line_map(&[1, 2, 3]);
        // pairs (x, y) with x - y = 1
        let h = HTuple::from_i64s(&[1]).unwrap();
        assert_eq!(correlate(&a, &a, &h).unwrap(), 2u64);
        let h = HTuple::from_i64s(&[0]).unwrap();
        assert_eq!(correlate(&a, &a, &h).unwrap(), 3u64);
        let big = line_map(&[1, 2, 3, 4, 5, 6]);
        let h = HTuple::from_i64s(&[2]).unwrap();
        // smaller map on either side
        assert_eq!(correlate(&a, &big, &h).unwrap(), 1u64);
        assert_eq!(correlate(&big, &a, &h).unwrap(), 3u64);
    }

    #[test]
    fn cache_format_round_trip_and_order() {
        let keys = [[3, 9], [1, 1], [2, 4], [2, 4], [-1, 1]];
        let mut m = meta(2);
        m.range = (-1, 3);
        let map = CountMap::from_keys(m, keys.iter().map(|k| PowerSumVec::from_i64s(k))).unwrap();
        let mut buf = Vec::new();
        map.write_to(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with('{'));
        assert!(lines[0].contains("\"format_version\":1"));
        assert_eq!(&lines[1..], &["-1,1,1", "1,1,1", "2,4,2", "3,9,1"]);
        let back = CountMap::read_from(buf.as_slice()).unwrap();
        assert_eq!(back, map);
        assert_eq!(back.meta(), map.meta());
    }

    #[test]
    fn stale_or_corrupt_cache_is_rejected() {
        let stale = "{\"format_version\":0,\"kind\":\"power_sums\",\"s\":1,\"k\":1,\"X\":2,\"range\":[1,2]}\n1,1\n";
        assert!(matches!(CountMap::read_from(stale.as_bytes()), Err(Error::Format(_))));
        let unordered = "{\"format_version\":1,\"kind\":\"power_sums\",\"s\":1,\"k\":1,\"X\":2,\"range\":[1,2]}\n2,1\n1,1\n";
        assert!(matches!(CountMap::read_from(unordered.as_bytes()), Err(Error::Format(_))));
        let zero = "{\"format_version\":1,\"kind\":\"power_sums\",\"s\":1,\"k\":1,\"X\":2,\"range\":[1,2]}\n1,0\n";
        assert!(matches!(CountMap::read_from(zero.as_bytes()), Err(Error::Format(_))));
    }

    #[test]
    fn merge_is_order_independent() {
        let a = line_map(&[1, 2]);
        let b = line_map(&[2, 3]);
        let mut ab = a.clone();
        ab.merge(b.clone()).unwrap();
        let mut ba = b;
        ba.merge(a).unwrap();
        assert_eq!(ab, ba);
        assert_eq!(ab.get(&PowerSumVec::from_i64s(&[2])), Some(&BigUint::from(2u32)));
    }
}
