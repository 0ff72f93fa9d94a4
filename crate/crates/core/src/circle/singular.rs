//! Truncated singular series and singular integral, and the resulting
//! circle-method prediction `S * J * X^{2s - k(k+1)/2}`.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::moments::SamplerConfig;
use crate::budget::Budget;
use crate::error::{check_budget, invalid, Result};
use crate::expsums::{e, oscillatory_i_fast};
use crate::summation::{sum_complex, sum_real, ComplexSum, NeumaierSum};
use crate::types::HTuple;

/// Contribution of all primitive `a` with denominator `q`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesTerm {
    pub q: u64,
    pub re: f64,
    pub im: f64,
    pub abs: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingularSeries {
    pub value: f64,
    pub imag: f64,
    pub q_max: u64,
    pub terms: Vec<SeriesTerm>,
}

fn check_s(s: f64) -> Result<()> {
    if !(s.is_finite() && s > 0.0) {
        return Err(invalid("s must be a positive real"));
    }
    Ok(())
}

fn series_term(q: u64, s: f64, h_mod: &[u64], k: usize) -> Complex64 {
    let qq = q as usize;
    let table: Vec<Complex64> = (0..q).map(|u| e(u as f64 / q as f64)).collect();
    // pw[j][r] = r^{j+1} mod q
    let pw: Vec<Vec<u64>> = (0..k)
        .map(|j| (0..q).map(|r| ((r as u128).pow(j as u32 + 1) % q as u128) as u64).collect())
        .collect();
    let total = q.pow(k as u32);
    let mut acc = ComplexSum::new();
    let mut a = vec![0u64; k];
    for flat in 0..total {
        let mut rest = flat;
        let mut g = q;
        for aj in a.iter_mut() {
            *aj = rest % q;
            rest /= q;
            g = g.gcd(aj);
        }
        if g != 1 {
            continue;
        }
        let sum = sum_complex((0..qq).map(|r| {
            let res = (0..k).fold(0u64, |acc, j| (acc + a[j] * pw[j][r]) % q);
            table[res as usize]
        }));
        let weight = (sum.norm() / q as f64).powf(2.0 * s);
        let twist = (0..k).fold(0u64, |acc, j| (acc + a[j] * h_mod[j]) % q);
        acc.add(weight * table[((q - twist) % q) as usize]);
    }
    acc.value()
}

/// `sum_{q <= Q} sum_{a mod q, (q,a)=1} |q^{-1} S(q,a)|^{2s} e_q(-a.h)`, with per-q terms.
pub fn singular_series_partial(h: &HTuple, s: f64, q_max: u64, budget: &Budget) -> Result<SingularSeries> {
    check_s(s)?;
    if q_max == 0 {
        return Err(invalid("Q_max must be at least 1"));
    }
    let k = h.k();
    let cost: f64 = (1..=q_max).map(|q| (q as f64).powi(k as i32 + 1)).sum();
    check_budget("singular series", cost, budget.max_grid)?;
    let terms: Vec<SeriesTerm> = (1..=q_max)
        .into_par_iter()
        .map(|q| {
            let m = BigInt::from(q);
            let h_mod: Vec<u64> = h
                .values()
                .iter()
                .map(|v| v.mod_floor(&m).to_u64().expect("below q"))
                .collect();
            let t = series_term(q, s, &h_mod, k);
            SeriesTerm {
                q,
                re: t.re,
                im: t.im,
                abs: t.norm(),
            }
        })
        .collect();
    Ok(SingularSeries {
        value: sum_real(terms.iter().map(|t| t.re)),
        imag: sum_real(terms.iter().map(|t| t.im)),
        q_max,
        terms,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntegralMethod {
    Lattice,
    MonteCarlo,
}

/// Partial integral over `max_j |beta_j| <= radius`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Shell {
    pub radius: f64,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingularIntegral {
    pub value: f64,
    /// Estimated error: tail plus quadrature for the lattice rule, three
    /// standard errors for Monte Carlo.
    pub error: f64,
    pub n: Vec<f64>,
    pub b: f64,
    pub method: IntegralMethod,
    pub spacing: Option<f64>,
    pub points: u64,
    /// Partial sums at `B/4`, `B/2`, `B`.
    pub shells: Vec<Shell>,
    pub extrapolated: bool,
}

/// Lattice spacing for `|I(beta)|^{2s} e(-beta.n)`.
///
/// For integer `s` the integrand is the Fourier transform of a density
/// supported in `[-s, s]^k`; by Poisson summation a lattice of step `delta`
/// aliases that density at shifts of `1/delta`, and
/// `1/delta > s + |n|_inf` makes every alias vanish. Other `s` get half
/// that step.
pub fn lattice_spacing(s: f64, n: &[f64]) -> f64 {
    let n_inf = n.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let delta = 1.0 / (s.ceil() + n_inf + 1.0);
    if s.fract() == 0.0 {
        delta
    } else {
        delta / 2.0
    }
}

/// `int_{[-B,B]^k} |I(beta)|^{2s} e(-beta.n) d beta` with `n_j = h_j X^{-j}`.
///
/// Uses the lattice rule when the grid fits the budget and Monte Carlo
/// otherwise. The lattice tail decays slowly for small `s`, so when the
/// shell sums at `B/4`, `B/2`, `B` converge monotonically the result is
/// Aitken-extrapolated.
pub fn singular_integral_truncated(
    h: &HTuple,
    s: f64,
    x: u64,
    b: f64,
    tol: f64,
    budget: &Budget,
) -> Result<SingularIntegral> {
    check_s(s)?;
    if !(b.is_finite() && b > 0.0) {
        return Err(invalid("B must be a positive real"));
    }
    if x == 0 {
        return Err(invalid("X must be at least 1"));
    }
    let k = h.k();
    let xf = x as f64;
    let n: Vec<f64> = h
        .values()
        .iter()
        .enumerate()
        .map(|(j, v)| v.to_f64().unwrap_or(f64::INFINITY) * xf.powi(-(j as i32 + 1)))
        .collect();
    let delta = lattice_spacing(s, &n);
    let m = (b / delta).floor() as i64;
    let side = (2 * m + 1) as f64;
    let points = side.powi(k as i32);
    // degree <= 2 has closed forms; degree 3 needs quadrature per point
    let per_point = if k <= 2 { 1.0 } else { 200.0 };
    if points * per_point <= budget.max_grid as f64 {
        lattice(&n, s, b, delta, m, tol)
    } else {
        let samples = (budget.max_grid as f64 / per_point).max(1.0) as u64;
        monte_carlo(
            &n,
            s,
            b,
            tol,
            &SamplerConfig {
                samples: samples.min(SamplerConfig::default().samples),
                ..SamplerConfig::default()
            },
        )
    }
}

fn integrand(beta: &[f64], n: &[f64], s: f64, tol: f64) -> Result<(f64, f64)> {
    let i = oscillatory_i_fast(beta, tol)?;
    let phase: f64 = beta.iter().zip(n).map(|(b, nj)| b * nj).sum();
    let mag = i.value.norm().powf(2.0 * s);
    Ok((mag * (2.0 * std::f64::consts::PI * phase).cos(), i.error))
}

fn lattice(n: &[f64], s: f64, b: f64, delta: f64, m: i64, tol: f64) -> Result<SingularIntegral> {
    let k = n.len();
    let side = (2 * m + 1) as u64;
    let total = side.pow(k as u32);
    let radii = [b / 4.0, b / 2.0, b];
    // half-lattice: the first nonzero coordinate is positive, paired with -beta
    let chunk = 4096u64;
    let chunks = total.div_ceil(chunk);
    type Partial = ([NeumaierSum; 3], f64);
    let parts: Vec<Result<Partial>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut shells = [NeumaierSum::new(); 3];
            let mut qerr = 0.0;
            let mut idx = vec![0i64; k];
            let mut beta = vec![0.0; k];
            for flat in c * chunk..((c + 1) * chunk).min(total) {
                let mut rest = flat;
                for i in idx.iter_mut() {
                    *i = (rest % side) as i64 - m;
                    rest /= side;
                }
                let weight = match idx.iter().rev().find(|v| **v != 0) {
                    None => 1.0,
                    Some(v) if *v > 0 => 2.0,
                    Some(_) => continue,
                };
                let mut norm = 0i64;
                for j in 0..k {
                    beta[j] = idx[j] as f64 * delta;
                    norm = norm.max(idx[j].abs());
                }
                let radius = norm as f64 * delta;
                let (v, err) = integrand(&beta, n, s, tol)?;
                qerr += weight * err;
                for (shell, r) in shells.iter_mut().zip(radii) {
                    if radius <= r {
                        shell.add(weight * v);
                    }
                }
            }
            Ok((shells, qerr))
        })
        .collect();
    let mut sums = [NeumaierSum::new(); 3];
    let mut qerr = 0.0;
    for p in parts {
        let (shells, e) = p?;
        for (acc, sh) in sums.iter_mut().zip(shells) {
            acc.add(sh.value());
        }
        qerr += e;
    }
    let vol = delta.powi(k as i32);
    let shells: Vec<Shell> = radii
        .iter()
        .zip(sums)
        .map(|(r, sum)| Shell {
            radius: *r,
            value: vol * sum.value(),
        })
        .collect();
    let (s1, s2, s3) = (shells[0].value, shells[1].value, shells[2].value);
    let d1 = s2 - s1;
    let d2 = s3 - s2;
    let monotone = d1 != 0.0 && d1.signum() == d2.signum() && d2.abs() < d1.abs();
    let (value, tail) = if monotone {
        let ext = s3 - d2 * d2 / (d2 - d1);
        (ext, (ext - s3).abs() * 0.5 + (d2 - d1 * 0.5).abs())
    } else {
        (s3, d2.abs())
    };
    Ok(SingularIntegral {
        value,
        error: tail + vol * qerr,
        n: n.to_vec(),
        b,
        method: IntegralMethod::Lattice,
        spacing: Some(delta),
        points: total,
        shells,
        extrapolated: monotone,
    })
}

fn monte_carlo(n: &[f64], s: f64, b: f64, tol: f64, cfg: &SamplerConfig) -> Result<SingularIntegral> {
    let k = n.len();
    const CHUNK: u64 = 1024;
    let chunks = cfg.samples.div_ceil(CHUNK);
    let parts: Vec<Result<(f64, f64)>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(c);
            let mut sum = NeumaierSum::new();
            let mut sq = NeumaierSum::new();
            let mut beta = vec![0.0; k];
            for _ in 0..CHUNK.min(cfg.samples - c * CHUNK) {
                for bj in beta.iter_mut() {
                    *bj = b * (2.0 * rng.gen::<f64>() - 1.0);
                }
                let (v, _) = integrand(&beta, n, s, tol)?;
                sum.add(v);
                sq.add(v * v);
            }
            Ok((sum.value(), sq.value()))
        })
        .collect();
    let mut sum = NeumaierSum::new();
    let mut sq = NeumaierSum::new();
    for p in parts {
        let (a, b2) = p?;
        sum.add(a);
        sq.add(b2);
    }
    let nn = cfg.samples as f64;
    let vol = (2.0 * b).powi(k as i32);
    let mean = sum.value() / nn;
    let var = (sq.value() / nn - mean * mean).max(0.0);
    Ok(SingularIntegral {
        value: vol * mean,
        error: 3.0 * vol * (var / nn).sqrt(),
        n: n.to_vec(),
        b,
        method: IntegralMethod::MonteCarlo,
        spacing: None,
        points: cfg.samples,
        shells: Vec::new(),
        extrapolated: false,
    })
}

/// `S * J * X^{2s - k(k+1)/2}`, with both factors reported.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub series: SingularSeries,
    pub integral: SingularIntegral,
    pub exponent: f64,
    pub power: f64,
    pub prediction: f64,
}

pub fn asymptotic_prediction(
    h: &HTuple,
    s: f64,
    x: u64,
    q_max: u64,
    b: f64,
    budget: &Budget,
) -> Result<Prediction> {
    let k = h.k() as f64;
    let series = singular_series_partial(h, s, q_max, budget)?;
    let integral = singular_integral_truncated(h, s, x, b, crate::expsums::DEFAULT_TOL, budget)?;
    let exponent = 2.0 * s - k * (k + 1.0) / 2.0;
    let power = (x as f64).powf(exponent);
    Ok(Prediction {
        prediction: series.value * integral.value * power,
        series,
        integral,
        exponent,
        power,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::counting::count_j;
    use crate::types::SystemParams;

    fn h(v: &[i64]) -> HTuple {
        HTuple::from_i64s(v).unwrap()
    }

    #[test]
    fn series_q1_is_one() {
        let b = Budget::default();
        for hv in [vec![0], vec![3, -1], vec![1, 2, 5]] {
            let r = singular_series_partial(&h(&hv), 1.5, 1, &b).unwrap();
            assert!((r.value - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn series_linear_is_one() {
        let b = Budget::default();
        for q in [1, 2, 7, 20] {
            let r = singular_series_partial(&h(&[0]), 1.0, q, &b).unwrap();
            assert!((r.value - 1.0).abs() < 1e-12, "{q}: {}", r.value);
        }
    }

    #[test]
    fn series_terms_match_complete_sums() {
        use crate::expsums::{complete_sum_s, RationalPoint};
        let hh = h(&[1, 1]);
        let s = 2.0;
        let r = singular_series_partial(&hh, s, 6, &Budget::default()).unwrap();
        for t in &r.terms {
            let q = t.q;
            let mut acc = Complex64::new(0.0, 0.0);
            for a1 in 1..=q as i64 {
                for a2 in 1..=q as i64 {
                    let p = RationalPoint::new(q, vec![a1, a2]).unwrap();
                    if !p.is_primitive() {
                        continue;
                    }
                    let w = (complete_sum_s(&p).norm() / q as f64).powf(2.0 * s);
                    acc += w * e(-((a1 + a2) as f64) / q as f64);
                }
            }
            assert!((acc.re - t.re).abs() < 1e-10 && (acc.im - t.im).abs() < 1e-10, "q={q}");
        }
        assert!(r.imag.abs() < 1e-9);
    }

    #[test]
    fn series_monotone_for_zero_h() {
        let r = singular_series_partial(&h(&[0, 0]), 3.0, 15, &Budget::default()).unwrap();
        assert!(r.terms.iter().all(|t| t.re >= -1e-12));
    }

    #[test]
    fn series_budget() {
        let tight = Budget {
            max_grid: 10,
            ..Budget::default()
        };
        assert!(singular_series_partial(&h(&[0, 0]), 2.0, 10, &tight).is_err());
    }

    #[test]
    fn fejer_integral() {
        let r = singular_integral_truncated(&h(&[0]), 1.0, 1, 100.0, 1e-10, &Budget::default()).unwrap();
        assert!((r.value - 1.0).abs() < 1e-3, "{r:?}");
        assert!(r.extrapolated);
        assert!((r.shells[2].value - 1.0).abs() < 2e-3);
    }

    #[test]
    fn integral_stable_in_b() {
        let b = Budget::default();
        let a = singular_integral_truncated(&h(&[0, 0]), 3.0, 10, 20.0, 1e-10, &b).unwrap();
        let c = singular_integral_truncated(&h(&[0, 0]), 3.0, 10, 40.0, 1e-10, &b).unwrap();
        assert!((a.value - c.value).abs() < 10.0 * a.error.max(1e-6), "{} {}", a.value, c.value);
    }

    #[test]
    fn monte_carlo_fallback_is_used() {
        let tight = Budget {
            max_grid: 5_000,
            ..Budget::default()
        };
        let r = singular_integral_truncated(&h(&[0, 0]), 3.0, 10, 10.0, 1e-8, &tight).unwrap();
        assert_eq!(r.method, IntegralMethod::MonteCarlo);
        let exact = singular_integral_truncated(&h(&[0, 0]), 3.0, 10, 10.0, 1e-8, &Budget::default()).unwrap();
        assert!((r.value - exact.value).abs() < r.error.max(1e-3) * 2.0, "{} {}", r.value, exact.value);
    }

    #[test]
    fn prediction_linear_case() {
        for x in [5u64, 13, 40] {
            let p = asymptotic_prediction(&h(&[0]), 1.0, x, 10, 100.0, &Budget::default()).unwrap();
            assert!((p.prediction / x as f64 - 1.0).abs() < 1e-3);
        }
    }

    #[test]
    fn prediction_matches_quadratic_count_roughly() {
        // supercritical s = 4 > 3
        let x = 12u64;
        let hh = h(&[1, 1]);
        let exact = count_j(&SystemParams::new(4, 2, x, hh.clone()).unwrap(), &Budget::default())
            .unwrap()
            .0
            .to_f64();
        let p = asymptotic_prediction(&hh, 4.0, x, 20, 30.0, &Budget::default()).unwrap();
        let ratio = exact / p.prediction;
        assert!((0.25..4.0).contains(&ratio), "ratio {ratio}");
    }
}
