//! Mean values `int |f(alpha; F X)|^{2s} |g(alpha; X)|^{2r} e(-alpha.h) d alpha`,
//! exactly on a DFT grid over the full cube and by Monte Carlo on regions.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::{Signed, ToPrimitive};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::arcs::{box_measure, ArcFamily, ArcKind, DissectionConfig, Tag};
use crate::budget::Budget;
use crate::error::{check_budget, invalid, Error, Result};
use crate::expsums::{e, PhasePoly, UnitPoint};
use crate::shiftpoly::{binomial, nu_eval};
use crate::summation::{sum_complex, ComplexSum, NeumaierSum};
use crate::types::{ExactCount, HTuple};

/// Integration domain for a mean value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "region", rename_all = "snake_case")]
pub enum Region {
    FullCube,
    Family { family: ArcFamily },
    Complement { family: ArcFamily },
    Dissection { config: DissectionConfig, tag: Tag },
}

impl Region {
    pub fn contains(&self, alpha: &UnitPoint) -> bool {
        match self {
            Region::FullCube => true,
            Region::Family { family } => family.contains(alpha),
            Region::Complement { family } => !family.contains(alpha),
            Region::Dissection { config, tag } => config.classify(alpha) == *tag,
        }
    }

    fn as_box(&self) -> Option<&ArcFamily> {
        match self {
            Region::Family { family } if matches!(family.kind, ArcKind::Vbox { .. } | ArcKind::Bbox { .. }) => {
                Some(family)
            }
            _ => None,
        }
    }
}

/// `|f(alpha; F X)|^{f_power} |g(alpha; X)|^{g_power}`, optionally twisted by
/// `e(-alpha.h)`, where `g(alpha; X) = sum_y e(sum_j nu_j(y;h) alpha_j)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentSpec {
    /// `2s`.
    pub f_power: u32,
    /// `2r`.
    #[serde(default)]
    pub g_power: u32,
    pub h: HTuple,
    #[serde(default = "yes")]
    pub twist: bool,
    /// `F`, the length multiplier of the Weyl sum.
    #[serde(default = "one")]
    pub f_scale: u64,
    pub region: Region,
}

fn yes() -> bool {
    true
}

fn one() -> u64 {
    1
}

impl MomentSpec {
    /// The spec whose full-cube value is `J_{s,k}(X;h)`.
    pub fn count(s: u32, h: HTuple) -> Self {
        MomentSpec {
            f_power: 2 * s,
            g_power: 0,
            h,
            twist: true,
            f_scale: 1,
            region: Region::FullCube,
        }
    }

    /// The spec `int |g(alpha;X)|^{2r} |f(alpha;2X)|^{2u}` of the mixed system.
    pub fn mixed(u: u32, r: u32, h: HTuple) -> Self {
        MomentSpec {
            f_power: 2 * u,
            g_power: 2 * r,
            h,
            twist: false,
            f_scale: 2,
            region: Region::FullCube,
        }
    }

    pub fn k(&self) -> usize {
        self.h.k()
    }

    fn nu_terms(&self) -> Vec<Vec<BigInt>> {
        (1..=self.k())
            .map(|j| {
                (0..j)
                    .map(|i| binomial(j as u32, i as u32) * self.h.get(j - i))
                    .collect()
            })
            .collect()
    }
}

/// Integrand evaluator at arbitrary torus points.
struct Integrand<'a> {
    spec: &'a MomentSpec,
    x: u64,
    nu: Vec<Vec<BigInt>>,
}

impl<'a> Integrand<'a> {
    fn new(spec: &'a MomentSpec, x: u64) -> Self {
        Integrand {
            spec,
            x,
            nu: spec.nu_terms(),
        }
    }

    fn eval(&self, alpha: &[f64]) -> Complex64 {
        let mut v = Complex64::new(1.0, 0.0);
        if self.spec.f_power > 0 {
            let poly = PhasePoly::monomials(alpha);
            let f = sum_complex((1..=self.spec.f_scale * self.x).map(|n| poly.e(n as i64)));
            v *= f.norm().powi(self.spec.f_power as i32);
        }
        if self.spec.g_power > 0 {
            let terms: Vec<(f64, Vec<BigInt>)> = alpha.iter().copied().zip(self.nu.iter().cloned()).collect();
            let poly = PhasePoly::new(&terms);
            let g = sum_complex((1..=self.x).map(|n| poly.e(n as i64)));
            v *= g.norm().powi(self.spec.g_power as i32);
        }
        if self.spec.twist {
            let t: f64 = alpha
                .iter()
                .zip(self.spec.h.values())
                .map(|(a, h)| crate::expsums::phase::frac_mul(*a, h))
                .sum();
            v *= e(-t);
        }
        v
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DftResult {
    pub re: f64,
    pub im: f64,
    /// Nearest non-negative integer, when the value is a count.
    pub rounded: Option<ExactCount>,
    /// Distance of the complex value from `rounded`.
    pub residual: f64,
    pub grid: Vec<u64>,
}

/// Grid sizes `M_j = f_power (F X)^j + g_power max_y |nu_j(y;h)| + |h_j| + 1`,
/// each larger than every frequency of the integrand in coordinate `j`.
pub fn dft_grid(spec: &MomentSpec, x: u64) -> Vec<f64> {
    let k = spec.k();
    let fx = (spec.f_scale * x) as f64;
    (1..=k)
        .map(|j| {
            let nu_max = if spec.g_power > 0 {
                (1..=x)
                    .map(|y| nu_eval(j, &BigInt::from(y), &spec.h).expect("j <= k").abs())
                    .max()
                    .and_then(|m| m.to_f64())
                    .unwrap_or(0.0)
            } else {
                0.0
            };
            let h_j = if spec.twist {
                spec.h.get(j).abs().to_f64().unwrap_or(f64::INFINITY)
            } else {
                0.0
            };
            spec.f_power as f64 * fx.powi(j as i32) + spec.g_power as f64 * nu_max + h_j + 1.0
        })
        .collect()
}

/// Full-cube mean value by exact sampling on `prod_j (Z / M_j Z)`.
///
/// The integrand is a trigonometric polynomial whose frequencies in
/// coordinate `j` are smaller than `M_j` in absolute value, so the grid
/// average equals the integral up to rounding.
pub fn dft_moment(spec: &MomentSpec, x: u64, budget: &Budget) -> Result<DftResult> {
    if spec.region != Region::FullCube {
        return Err(invalid("dft_moment is exact only on the full cube"));
    }
    if x == 0 {
        return Err(invalid("X must be at least 1"));
    }
    let grid_f = dft_grid(spec, x);
    let points: f64 = grid_f.iter().product();
    let per_point = (spec.f_scale * x + x) as f64;
    check_budget("DFT grid", points * per_point / (x as f64).max(1.0), budget.max_grid)?;
    let grid: Vec<u64> = grid_f.iter().map(|&m| m as u64).collect();
    let k = grid.len();
    let fx = spec.f_scale * x;

    // residues x^j mod M_j and nu_j(y) mod M_j
    let pw: Vec<Vec<u64>> = (0..k)
        .map(|j| {
            let m = grid[j] as u128;
            (0..=fx).map(|n| (n as u128).pow(j as u32 + 1).rem_euclid(m) as u64).collect()
        })
        .collect();
    let nu_res: Vec<Vec<u64>> = (0..k)
        .map(|j| {
            let m = BigInt::from(grid[j]);
            (0..=x)
                .map(|y| {
                    let v = nu_eval(j + 1, &BigInt::from(y), &spec.h).expect("j <= k");
                    ((v % &m + &m) % &m).to_u64().expect("below M_j")
                })
                .collect()
        })
        .collect();
    let h_res: Vec<u64> = (0..k)
        .map(|j| {
            let m = BigInt::from(grid[j]);
            ((spec.h.get(j + 1) % &m + &m) % &m).to_u64().expect("below M_j")
        })
        .collect();

    let total_points: u64 = grid.iter().product();
    let chunk = 4096u64;
    let chunks = total_points.div_ceil(chunk);
    let partials: Vec<Complex64> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = ComplexSum::new();
            let mut a = vec![0u64; k];
            for flat in c * chunk..((c + 1) * chunk).min(total_points) {
                let mut rest = flat;
                for j in 0..k {
                    a[j] = rest % grid[j];
                    rest /= grid[j];
                }
                let phase_of = |res: &dyn Fn(usize) -> u64| -> f64 {
                    (0..k)
                        .map(|j| ((a[j] as u128 * res(j) as u128) % grid[j] as u128) as f64 / grid[j] as f64)
                        .sum()
                };
                let mut v = Complex64::new(1.0, 0.0);
                if spec.f_power > 0 {
                    let f = sum_complex((1..=fx as usize).map(|n| e(phase_of(&|j| pw[j][n]))));
                    v *= f.norm().powi(spec.f_power as i32);
                }
                if spec.g_power > 0 {
                    let g = sum_complex((1..=x as usize).map(|y| e(phase_of(&|j| nu_res[j][y]))));
                    v *= g.norm().powi(spec.g_power as i32);
                }
                if spec.twist {
                    v *= e(-phase_of(&|j| h_res[j]));
                }
                acc.add(v);
            }
            acc.value()
        })
        .collect();
    let value = sum_complex(partials) / total_points as f64;
    let nearest = value.re.round();
    let rounded = (nearest >= 0.0).then(|| ExactCount::from(nearest as u64));
    let residual = (value - Complex64::new(nearest, 0.0)).norm();
    Ok(DftResult {
        re: value.re,
        im: value.im,
        rounded,
        residual,
        grid,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub samples: u64,
    pub seed: u64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            samples: 1_000_000,
            seed: 0x5eed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimate {
    pub estimate: f64,
    pub imag: f64,
    pub std_error: f64,
    /// Exact for boxes, the hit fraction otherwise.
    pub measure: f64,
    pub samples: u64,
    pub hits: u64,
}

const MC_CHUNK: u64 = 1024;

/// Monte Carlo estimate of the mean value over `spec.region`.
///
/// Boxes are sampled uniformly inside the box; other regions are sampled
/// on the whole cube with the region's indicator. Samples come in fixed
/// chunks, each with its own ChaCha stream, so the result depends only on
/// the seed.
pub fn restricted_moment_estimate(spec: &MomentSpec, x: u64, cfg: &SamplerConfig) -> Result<MomentEstimate> {
    if cfg.samples == 0 {
        return Err(invalid("at least one sample is required"));
    }
    if x == 0 {
        return Err(invalid("X must be at least 1"));
    }
    let k = spec.k();
    let integrand = Integrand::new(spec, x);
    let boxed = spec.region.as_box();
    let (widths, measure) = match boxed {
        Some(family) => {
            if family.k != k {
                return Err(Error::DegreeMismatch {
                    expected: k,
                    found: family.k,
                });
            }
            (family.half_widths(), box_measure(family)?)
        }
        None => (None, 1.0),
    };
    if measure == 0.0 {
        return Err(Error::ZeroMeasure);
    }
    let chunks = cfg.samples.div_ceil(MC_CHUNK);
    let parts: Vec<(Complex64, f64, u64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(c);
            let n = MC_CHUNK.min(cfg.samples - c * MC_CHUNK);
            let mut sum = ComplexSum::new();
            let mut sq = NeumaierSum::new();
            let mut hits = 0u64;
            let mut alpha = vec![0.0; k];
            for _ in 0..n {
                for j in 0..k {
                    let u: f64 = rng.gen();
                    alpha[j] = match &widths {
                        Some(w) if w[j] < 0.5 => (w[j] * (2.0 * u - 1.0)).rem_euclid(1.0),
                        _ => u,
                    };
                }
                let point = UnitPoint::new(alpha.clone()).expect("finite");
                if boxed.is_some() || spec.region.contains(&point) {
                    hits += 1;
                    let v = integrand.eval(point.alpha());
                    sum.add(v);
                    sq.add(v.norm_sqr());
                }
            }
            (sum.value(), sq.value(), hits)
        })
        .collect();
    let hits: u64 = parts.iter().map(|p| p.2).sum();
    if hits == 0 {
        return Err(Error::ZeroMeasure);
    }
    let total = sum_complex(parts.iter().map(|p| p.0));
    let total_sq = crate::summation::sum_real(parts.iter().map(|p| p.1));
    let n = cfg.samples as f64;
    let mean = total / n;
    let var = (total_sq / n - mean.norm_sqr()).max(0.0);
    let (scale, measure) = if boxed.is_some() {
        (measure, measure)
    } else {
        (1.0, hits as f64 / n)
    };
    Ok(MomentEstimate {
        estimate: scale * mean.re,
        imag: scale * mean.im,
        std_error: scale * (var / n).sqrt(),
        measure,
        samples: cfg.samples,
        hits,
    })
}

/// One row of the empirical scan of `int_B |f|^{2s} <= C X^eps (X^s mes(B) + X^{2s - k(k+1)/2})`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConjectureRecord {
    pub k: usize,
    pub s: u32,
    #[serde(rename = "X")]
    pub x: u64,
    pub region: ArcFamily,
    pub measure: f64,
    pub estimate: f64,
    pub std_error: f64,
    pub bound: f64,
    pub holds: bool,
}

pub fn conjecture_check(
    s: u32,
    region: &ArcFamily,
    cfg: &SamplerConfig,
    c: f64,
    eps: f64,
) -> Result<ConjectureRecord> {
    let k = region.k;
    let x = region.x;
    let spec = MomentSpec {
        f_power: 2 * s,
        g_power: 0,
        h: HTuple::zero(k)?,
        twist: false,
        f_scale: 1,
        region: Region::Family { family: region.clone() },
    };
    let est = restricted_moment_estimate(&spec, x, cfg)?;
    let xf = x as f64;
    let crit = 2.0 * s as f64 - (k * (k + 1)) as f64 / 2.0;
    let bound = c * xf.powf(eps) * (xf.powi(s as i32) * est.measure + xf.powf(crit));
    Ok(ConjectureRecord {
        k,
        s,
        x,
        region: region.clone(),
        measure: est.measure,
        estimate: est.estimate,
        std_error: est.std_error,
        bound,
        holds: est.estimate <= bound,
    })
}

/// Real part of the integrand at a point; exposed for diagnostics.
pub fn integrand_at(spec: &MomentSpec, x: u64, alpha: &UnitPoint) -> Complex64 {
    Integrand::new(spec, x).eval(alpha.alpha())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::counting::{brute_force_j, count_mixed_system};
    use crate::types::SystemParams;

    fn h(v: &[i64]) -> HTuple {
        HTuple::from_i64s(v).unwrap()
    }

    #[test]
    fn dft_examples() {
        let b = Budget::default();
        let r = dft_moment(&MomentSpec::count(1, h(&[0])), 2, &b).unwrap();
        assert_eq!(r.rounded.unwrap(), 2u64);
        assert!(r.residual < 1e-9);
        let r = dft_moment(&MomentSpec::count(1, h(&[1])), 2, &b).unwrap();
        assert_eq!(r.rounded.unwrap(), 1u64);
        let r = dft_moment(&MomentSpec::count(1, h(&[0, 0])), 3, &b).unwrap();
        assert_eq!(r.rounded.unwrap(), 3u64);
    }

    #[test]
    fn dft_matches_brute_force() {
        let b = Budget::default();
        for k in 1..=2usize {
            for s in 1..=2u32 {
                for x in 1..=6u64 {
                    let mut panel = vec![HTuple::zero(k).unwrap()];
                    for j in 1..=k {
                        panel.push(HTuple::unit(k, j).unwrap());
                    }
                    panel.push(HTuple::power_difference(k, 2, 1).unwrap());
                    for hh in panel {
                        let exact = brute_force_j(&SystemParams::new(s as usize, k, x, hh.clone()).unwrap(), &b).unwrap();
                        let r = dft_moment(&MomentSpec::count(s, hh.clone()), x, &b).unwrap();
                        assert_eq!(r.rounded.unwrap(), exact, "k={k} s={s} X={x} h={hh}");
                        assert!(r.residual < 1e-6);
                    }
                }
            }
        }
    }

    #[test]
    fn dft_matches_mixed_count() {
        let b = Budget::default();
        for (u, r, hv, x) in [(1u32, 1u32, vec![0, 1], 3u64), (1, 1, vec![1, 2], 2), (0, 1, vec![2, 1], 4)] {
            let hh = h(&hv);
            let exact = count_mixed_system(u as usize, r as usize, 2, &hh, x, &b).unwrap();
            let got = dft_moment(&MomentSpec::mixed(u, r, hh), x, &b).unwrap();
            assert_eq!(got.rounded.unwrap(), exact);
        }
    }

    #[test]
    fn dft_refuses_large_grid() {
        let tight = Budget {
            max_grid: 100,
            ..Budget::default()
        };
        assert!(matches!(
            dft_moment(&MomentSpec::count(2, h(&[0, 0])), 6, &tight),
            Err(Error::BudgetExceeded { .. })
        ));
        let mut spec = MomentSpec::count(1, h(&[0]));
        spec.region = Region::Complement {
            family: ArcFamily::new(1, 4, ArcKind::Kkd { z_num: 1, z_den: 2 }).unwrap(),
        };
        assert!(dft_moment(&spec, 4, &Budget::default()).is_err());
    }

    #[test]
    fn monte_carlo_full_cube_parseval() {
        let mut spec = MomentSpec::count(1, h(&[0]));
        spec.twist = false;
        let cfg = SamplerConfig { samples: 200_000, seed: 7 };
        let r = restricted_moment_estimate(&spec, 4, &cfg).unwrap();
        assert!((r.estimate - 4.0).abs() < 3.0 * r.std_error, "{r:?}");
        assert_eq!(r.measure, 1.0);
    }

    #[test]
    fn monte_carlo_constant_integrand() {
        let family = ArcFamily::new(2, 16, ArcKind::Bbox { theta: vec![0.5, 0.0] }).unwrap();
        let spec = MomentSpec {
            f_power: 0,
            g_power: 0,
            h: HTuple::zero(2).unwrap(),
            twist: false,
            f_scale: 1,
            region: Region::Family { family },
        };
        let r = restricted_moment_estimate(&spec, 16, &SamplerConfig { samples: 5000, seed: 1 }).unwrap();
        assert!((r.estimate - 0.5).abs() < 1e-15);
        assert_eq!(r.std_error, 0.0);
    }

    #[test]
    fn monte_carlo_small_box_near_origin() {
        let x = 20u64;
        let family = ArcFamily::new(2, x, ArcKind::Vbox { m: 2, a: 0.05 }).unwrap();
        let mut spec = MomentSpec::count(2, HTuple::zero(2).unwrap());
        spec.twist = false;
        spec.region = Region::Family { family: family.clone() };
        let r = restricted_moment_estimate(&spec, x, &SamplerConfig { samples: 4000, seed: 3 }).unwrap();
        let mes = box_measure(&family).unwrap();
        assert!(r.estimate >= 0.5 * mes * (x as f64).powi(4));
    }

    #[test]
    fn monte_carlo_is_seed_deterministic() {
        let family = ArcFamily::new(2, 50, ArcKind::Kkd { z_num: 1, z_den: 2 }).unwrap();
        let mut spec = MomentSpec::count(1, HTuple::zero(2).unwrap());
        spec.region = Region::Complement { family };
        let cfg = SamplerConfig { samples: 5000, seed: 99 };
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let a = one.install(|| restricted_moment_estimate(&spec, 50, &cfg).unwrap());
        let b = restricted_moment_estimate(&spec, 50, &cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.hits > 0 && a.hits < 5000);
    }

    #[test]
    fn monte_carlo_zero_measure() {
        let family = ArcFamily::new(1, 10, ArcKind::Vbox { m: 1, a: 0.0 }).unwrap();
        let mut spec = MomentSpec::count(1, h(&[0]));
        spec.region = Region::Family { family };
        assert!(matches!(
            restricted_moment_estimate(&spec, 10, &SamplerConfig::default()),
            Err(Error::ZeroMeasure)
        ));
    }

    #[test]
    fn conjecture_scan_row() {
        let family = ArcFamily::new(2, 16, ArcKind::Bbox { theta: vec![0.5, 1.0] }).unwrap();
        let rec = conjecture_check(2, &family, &SamplerConfig { samples: 4000, seed: 5 }, 10.0, 0.1).unwrap();
        assert!(rec.estimate > 0.0);
        assert!(rec.bound > 0.0);
    }
}
