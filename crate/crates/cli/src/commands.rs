use std::fs;
use std::io::BufReader;
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};
use vinogradov::circle::{
    asymptotic_prediction, box_measure, conjecture_check, dft_moment, kdim_membership, major_arc_membership_1d,
    singular_integral_truncated, singular_series_partial, ArcFamily, ArcKind, DissectionConfig, MomentSpec,
    SamplerConfig, Scale,
};
use vinogradov::counting::{
    brute_force_j, count_distinct_j_star, count_inequality_omega1, count_inequality_omega2, count_mixed_system,
    rep_count_map, run_ladder,
};
use vinogradov::countmap::FORMAT_VERSION;
use vinogradov::exponents::{
    bound_catalog, compare_fit_to_catalog, fit_or_verdict, fit_points, range_bound_thm11, ExponentFit, FitOutcome,
};
use vinogradov::expsums::{
    complete_sum_s, kernel_bound, kernel_k, oscillatory_i_fast, scaled_i, shifted_sum_g, weyl_sum_f, RationalPoint,
    UnitPoint,
};
use vinogradov::suites::{run_suite, Suite};
use vinogradov::{
    correlate, Budget, CountMap, Error, ExactCount, HTuple, LadderResult, LadderTemplate, Result, SystemParams,
};

use crate::args::*;
use crate::config::Settings;

/// What a command produced, before it is wrapped in a run record.
pub struct Outcome {
    pub result: Value,
    pub method: Option<String>,
    pub warnings: Vec<String>,
    /// Table for `--format csv`, header first.
    pub table: Option<Vec<Vec<String>>>,
}

impl Outcome {
    fn new<T: Serialize>(result: T) -> Result<Self> {
        Ok(Outcome {
            result: to_value(result)?,
            method: None,
            warnings: Vec::new(),
            table: None,
        })
    }

    fn method(mut self, m: impl Into<String>) -> Self {
        self.method = Some(m.into());
        self
    }
}

fn to_value<T: Serialize>(v: T) -> Result<Value> {
    serde_json::to_value(v).map_err(|e| Error::Format(e.to_string()))
}

fn bad(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

pub fn command_name(cmd: &Command) -> &'static str {
    match cmd {
        Command::Count(_) => "count",
        Command::Ladder(_) => "ladder",
        Command::Fit(_) => "fit",
        Command::Catalog(_) => "catalog",
        Command::Sums(_) => "sums",
        Command::Arcs(_) => "arcs",
        Command::Singular(_) => "singular",
        Command::Predict(_) => "predict",
        Command::Verify(_) => "verify",
        Command::Replay(_) => "replay",
    }
}

pub struct Context<'a> {
    pub settings: &'a Settings,
    pub cache_dir: Option<&'a Path>,
}

pub fn run(cmd: &Command, ctx: &Context) -> Result<Outcome> {
    match cmd {
        Command::Count(a) => count(a, ctx),
        Command::Ladder(a) => ladder(a, ctx.settings),
        Command::Fit(a) => fit(a),
        Command::Catalog(a) => catalog(a),
        Command::Sums(a) => sums(&a.kind, ctx.settings),
        Command::Arcs(a) => arcs(a, ctx.settings),
        Command::Singular(a) => singular(a, ctx.settings),
        Command::Predict(a) => predict(a, ctx.settings),
        Command::Verify(a) => verify(a, ctx.settings),
        Command::Replay(_) => Err(bad("replay is handled by the driver")),
    }
}

/// `h` from its comma list. `"0"` with `--k` is shorthand for the zero tuple.
pub fn parse_h(h: Option<&str>, k: Option<usize>) -> Result<HTuple> {
    match (h, k) {
        (None, Some(k)) => HTuple::zero(k),
        (None, None) => Err(bad("give --h or --k")),
        (Some(text), k) => {
            let t: HTuple = text.parse()?;
            match k {
                Some(k) if t.k() == 1 && t.is_zero() && k > 1 => HTuple::zero(k),
                Some(k) if t.k() != k => Err(Error::DegreeMismatch {
                    expected: k,
                    found: t.k(),
                }),
                _ => Ok(t),
            }
        }
    }
}

fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> Result<Vec<T>> {
    text.split(',')
        .map(|p| p.trim().parse::<T>().map_err(|_| bad(format!("bad {what} component {p:?}"))))
        .collect()
}

fn parse_exponent(text: &str) -> Result<(i64, u32)> {
    let (n, d) = text.split_once('/').unwrap_or((text, "1"));
    let n: i64 = n.trim().parse().map_err(|_| bad(format!("bad exponent {text:?}")))?;
    let d: u32 = d.trim().parse().map_err(|_| bad(format!("bad exponent {text:?}")))?;
    Ok((n, d))
}

fn need<T: Copy>(v: Option<T>, flag: &str) -> Result<T> {
    v.ok_or_else(|| bad(format!("--{flag} is required here")))
}

/// The rep map `r_s` over `[1, X]`, read from or written to the cache.
fn rep_map(s: usize, k: usize, x: u64, budget: &Budget, cache: Option<&Path>, warnings: &mut Vec<String>) -> Result<CountMap> {
    let Some(dir) = cache else {
        return rep_count_map(s, k, 1, x as i64, budget);
    };
    let path = dir.join(format!("rep_v{FORMAT_VERSION}_s{s}_k{k}_1-{x}.cmap"));
    if let Ok(f) = fs::File::open(&path) {
        match CountMap::read_from(BufReader::new(f)) {
            Ok(m) if m.meta().s == s && m.k() == k && m.meta().range == (1, x as i64) => return Ok(m),
            Ok(_) => warnings.push(format!("ignoring mismatched cache {}", path.display())),
            Err(e) => warnings.push(format!("ignoring unreadable cache {}: {e}", path.display())),
        }
    }
    let map = rep_count_map(s, k, 1, x as i64, budget)?;
    fs::create_dir_all(dir)?;
    let tmp = path.with_extension("tmp");
    map.write_to(std::io::BufWriter::new(fs::File::create(&tmp)?))?;
    fs::rename(&tmp, &path)?;
    Ok(map)
}

fn count(a: &CountArgs, ctx: &Context) -> Result<Outcome> {
    let budget = &ctx.settings.budget;
    let mut warnings = Vec::new();
    let (count, method, extra): (ExactCount, &str, Value) = match a.system {
        System::J => {
            let s = need(a.s, "s")?;
            let h = parse_h(a.h.as_deref(), a.k)?;
            let p = SystemParams::new(s, h.k(), a.x, h.clone())?;
            let mitm = |w: &mut Vec<String>| -> Result<ExactCount> {
                let rep = rep_map(s, h.k(), a.x, budget, ctx.cache_dir, w)?;
                correlate(&rep, &rep, &h)
            };
            match a.method {
                CountMethod::Brute => (brute_force_j(&p, budget)?, "brute_force", Value::Null),
                CountMethod::Mitm => (mitm(&mut warnings)?, "correlate", Value::Null),
                CountMethod::Auto => match mitm(&mut warnings) {
                    Ok(c) => (c, "correlate", Value::Null),
                    Err(Error::BudgetExceeded { .. }) => {
                        warnings.push("correlation refused by budget; using brute force".into());
                        (brute_force_j(&p, budget)?, "brute_force", Value::Null)
                    }
                    Err(e) => return Err(e),
                },
                CountMethod::Dft => {
                    let r = dft_moment(&MomentSpec::count(s as u32, h.clone()), a.x, budget)?;
                    let c = dft_count(&r)?;
                    (c, "dft", json!({"residual": r.residual, "grid": r.grid}))
                }
            }
        }
        System::Jstar => {
            let h = parse_h(a.h.as_deref(), a.k)?;
            (count_distinct_j_star(h.k(), &h, a.x, budget)?, "multiset", Value::Null)
        }
        System::Mixed => {
            let h = parse_h(a.h.as_deref(), a.k)?;
            let (u, r) = (need(a.u, "u")?, need(a.r, "r")?);
            if a.method == CountMethod::Dft {
                let res = dft_moment(&MomentSpec::mixed(u as u32, r as u32, h), a.x, budget)?;
                (dft_count(&res)?, "dft", json!({"residual": res.residual, "grid": res.grid}))
            } else {
                (count_mixed_system(u, r, h.k(), &h, a.x, budget)?, "convolution", Value::Null)
            }
        }
        System::Omega1 | System::Omega2 => {
            let s = need(a.s, "s")?;
            let k = need(a.k, "k")?;
            let c = if a.system == System::Omega1 {
                count_inequality_omega1(s, k, a.x, budget)?
            } else {
                count_inequality_omega2(s, k, a.x, budget)?
            };
            (c, "bucketed", Value::Null)
        }
    };
    let mut result = json!({"count": count, "method": method});
    if let Value::Object(m) = extra {
        result.as_object_mut().expect("object").extend(m);
    }
    let mut out = Outcome::new(result)?.method(method);
    out.warnings = warnings;
    Ok(out)
}

fn dft_count(r: &vinogradov::circle::DftResult) -> Result<ExactCount> {
    if r.residual >= 1e-6 {
        return Err(Error::Tolerance(format!("DFT rounding residual {:.3e}", r.residual)));
    }
    r.rounded.clone().ok_or_else(|| Error::Tolerance("DFT value rounds below zero".into()))
}

fn ladder_table(l: &LadderResult) -> Vec<Vec<String>> {
    let mut rows = vec![vec!["X".into(), "count".into(), "method".into(), "seconds".into()]];
    for p in &l.points {
        rows.push(vec![
            p.x.to_string(),
            p.count.as_ref().map(ToString::to_string).unwrap_or_default(),
            p.method
                .map(|m| serde_json::to_value(m).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default())
                .unwrap_or_else(|| "refused".into()),
            format!("{:.6}", p.wall_time_secs),
        ]);
    }
    rows
}

fn fit_report(outcome: &FitOutcome, s: Option<usize>, h: Option<&HTuple>, slack: f64) -> Result<Value> {
    let comparison = match (outcome, s, h) {
        (FitOutcome::Fitted(fit), Some(s), Some(h)) => {
            let records = bound_catalog(s, h.k(), h)?;
            to_value(compare_fit_to_catalog(fit, &records, slack))?
        }
        _ => Value::Null,
    };
    Ok(json!({"fit": outcome, "comparison": comparison, "slack": slack}))
}

fn ladder(a: &LadderArgs, st: &Settings) -> Result<Outcome> {
    let h = parse_h(a.h.as_deref(), a.k)?;
    let xs: Vec<u64> = parse_list(&a.xs, "xs")?;
    let template = LadderTemplate {
        s: a.s,
        k: h.k(),
        h: h.clone(),
    };
    let l = run_ladder(&template, &xs, &st.budget)?;
    let warnings: Vec<String> = l
        .points
        .iter()
        .filter_map(|p| p.error.as_ref().map(|e| format!("X={}: {e}", p.x)))
        .collect();
    let fit = match fit_or_verdict(&l) {
        Ok(f) => fit_report(&f, Some(a.s), Some(&h), a.slack)?,
        Err(Error::InsufficientData(msg)) => json!({"fit": null, "reason": msg}),
        Err(e) => return Err(e),
    };
    let table = ladder_table(&l);
    let mut out = Outcome::new(json!({"ladder": l, "analysis": fit}))?;
    out.warnings = warnings;
    out.table = Some(table);
    Ok(out)
}

fn read_points(path: &Path) -> Result<Vec<(u64, ExactCount)>> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| bad(e.to_string()))?;
    let headers = rdr.headers().map_err(|e| bad(e.to_string()))?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| bad(format!("{} has no {name} column", path.display())))
    };
    let (xi, ci) = (col("X")?, col("count")?);
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(|e| bad(e.to_string()))?;
        let count = &row[ci];
        if count.is_empty() {
            continue;
        }
        let x = row[xi].parse().map_err(|_| bad(format!("bad X {:?}", &row[xi])))?;
        let c = count.parse().map_err(|_| bad(format!("bad count {count:?}")))?;
        out.push((x, ExactCount(c)));
    }
    Ok(out)
}

fn fit(a: &FitArgs) -> Result<Outcome> {
    let points: Vec<(u64, ExactCount)> = match (&a.input, &a.points) {
        (Some(p), None) => read_points(p)?,
        (None, Some(text)) => text
            .split(',')
            .map(|pair| {
                let (x, c) = pair.split_once(':').ok_or_else(|| bad(format!("bad point {pair:?}")))?;
                let x = x.trim().parse().map_err(|_| bad(format!("bad X {x:?}")))?;
                let c = c.trim().parse().map_err(|_| bad(format!("bad count {c:?}")))?;
                Ok((x, ExactCount(c)))
            })
            .collect::<Result<_>>()?,
        _ => return Err(bad("give exactly one of --input and --points")),
    };
    let zero: Vec<u64> = points.iter().filter(|p| p.1.is_zero()).map(|p| p.0).collect();
    let outcome = if !points.is_empty() && zero.len() == points.len() {
        FitOutcome::IdenticallyZero { points: zero }
    } else {
        let pos: Vec<_> = points.iter().filter(|p| !p.1.is_zero()).collect();
        let (slope, intercept, max_residual) =
            fit_points(&pos.iter().map(|p| (p.0 as f64, p.1.to_f64())).collect::<Vec<_>>())?;
        FitOutcome::Fitted(ExponentFit {
            slope,
            intercept,
            max_residual,
            points: pos.iter().map(|p| p.0).collect(),
            dropped_zero: zero,
        })
    };
    let h = match (&a.h, a.k) {
        (None, None) => None,
        (h, k) => Some(parse_h(h.as_deref(), k)?),
    };
    Outcome::new(fit_report(&outcome, a.s, h.as_ref(), a.slack)?)
}

fn catalog(a: &CatalogArgs) -> Result<Outcome> {
    let h = parse_h(a.h.as_deref(), a.k)?;
    let records = bound_catalog(a.s, h.k(), &h)?;
    let range = if h.is_zero() {
        None
    } else {
        let l = h.smallest_nonzero_index()?;
        range_bound_thm11(h.k(), l).ok().map(|r| r.to_string())
    };
    let table = std::iter::once(vec!["name".into(), "direction".into(), "exponent".into(), "conditional".into()])
        .chain(records.iter().map(|r| {
            vec![
                r.name.clone(),
                to_value(r.direction).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default(),
                r.exponent.map(|e| e.to_string()).unwrap_or_else(|| "zero".into()),
                r.conditional.to_string(),
            ]
        }))
        .collect();
    let mut out = Outcome::new(json!({"records": records, "range_bound_thm11": range}))?;
    out.table = Some(table);
    Ok(out)
}

fn complex(z: num_complex::Complex64) -> Value {
    json!({"re": z.re, "im": z.im, "abs": z.norm()})
}

fn sums(kind: &SumKind, st: &Settings) -> Result<Outcome> {
    let result = match kind {
        SumKind::Weyl { alpha, x } => {
            let p = UnitPoint::new(parse_list(alpha, "alpha")?)?;
            complex(weyl_sum_f(&p, *x))
        }
        SumKind::Shifted { alpha, gamma, x, h } => {
            let p = UnitPoint::new(parse_list(alpha, "alpha")?)?;
            let h: HTuple = h.parse()?;
            complex(shifted_sum_g(&p, *gamma, *x, &h)?)
        }
        SumKind::Kernel { gamma, x } => {
            let mut v = complex(kernel_k(*gamma, *x));
            v["bound"] = json!(kernel_bound(*gamma, *x));
            v
        }
        SumKind::Complete { q, a } => {
            let p = RationalPoint::new(*q, parse_list(a, "a")?)?;
            let mut v = complex(complete_sum_s(&p));
            v["primitive"] = json!(p.is_primitive());
            v
        }
        SumKind::Oscillatory { beta, x } => {
            let b: Vec<f64> = parse_list(beta, "beta")?;
            let r = match x {
                Some(x) => scaled_i(&b, *x, st.tol)?,
                None => oscillatory_i_fast(&b, st.tol)?,
            };
            if !r.converged {
                return Err(Error::Tolerance(format!("quadrature error {:.3e} above tolerance", r.error)));
            }
            let mut v = complex(r.value);
            v["error"] = json!(r.error);
            v
        }
    };
    Outcome::new(result)
}

fn box_family(a: &ArcsArgs) -> Result<ArcFamily> {
    match (&a.vbox, &a.bbox) {
        (Some(v), None) => {
            let (m, amp) = v.split_once(',').ok_or_else(|| bad("--vbox wants m,A"))?;
            let m = m.trim().parse().map_err(|_| bad("bad m in --vbox"))?;
            let amp = amp.trim().parse().map_err(|_| bad("bad A in --vbox"))?;
            ArcFamily::new(a.k, a.x, ArcKind::Vbox { m, a: amp })
        }
        (None, Some(t)) => ArcFamily::new(a.k, a.x, ArcKind::Bbox { theta: parse_list(t, "theta")? }),
        _ => Err(bad("give exactly one of --vbox and --bbox")),
    }
}

fn alpha_point(a: &ArcsArgs) -> Result<UnitPoint> {
    let text = a.alpha.as_deref().ok_or_else(|| bad("--alpha is required here"))?;
    let p = UnitPoint::new(parse_list(text, "alpha")?)?;
    if p.k() != a.k {
        return Err(Error::DegreeMismatch {
            expected: a.k,
            found: p.k(),
        });
    }
    Ok(p)
}

fn arcs(a: &ArcsArgs, st: &Settings) -> Result<Outcome> {
    let modes = [a.classify, a.measure, a.major, a.kdim, a.moment];
    if modes.iter().filter(|m| **m).count() != 1 {
        return Err(bad("choose one of --classify, --measure, --major, --kdim, --moment"));
    }
    let result = if a.classify {
        let cfg = DissectionConfig::new(a.x, a.k)?;
        let p = alpha_point(a)?;
        json!({
            "tag": cfg.classify(&p),
            "in_major_arcs": cfg.in_major_1d(&p),
            "in_n": cfg.in_n(&p),
            "in_p": cfg.in_p(&p),
            "L": cfg.l().to_f64(),
            "Q": cfg.q().to_f64(),
        })
    } else if a.measure {
        let fam = box_family(a)?;
        json!({"region": fam, "measure": box_measure(&fam)?})
    } else if a.major || a.kdim {
        let (num, den) = parse_exponent(a.exponent.as_deref().unwrap_or("1/2"))?;
        let scale = Scale::x_power(a.x, num, den);
        let p = alpha_point(a)?;
        let witness = if a.major {
            major_arc_membership_1d(p.alpha()[a.k - 1], &scale, a.x, a.k).map(|(q, r)| json!({"q": q, "a": r}))
        } else {
            kdim_membership(&p, &scale, a.x).map(|(q, r)| json!({"q": q, "a": r}))
        };
        json!({"parameter": scale.to_f64(), "witness": witness})
    } else {
        let fam = box_family(a)?;
        let s = need(a.s, "s")?;
        let cfg = SamplerConfig {
            samples: a.samples.unwrap_or(st.samples),
            seed: st.seed,
        };
        let rec = conjecture_check(s, &fam, &cfg, st.c, st.eps)?;
        json!({
            "record": rec,
            "conjecture81_applies": vinogradov::exponents::conjecture81_applies(s as f64, a.k),
            "conjecture82_applies": vinogradov::exponents::conjecture82_applies(rec.measure, a.k, a.x),
        })
    };
    Outcome::new(result)
}

fn singular(a: &SingularArgs, st: &Settings) -> Result<Outcome> {
    let h = parse_h(a.h.as_deref(), a.k)?;
    let (do_series, do_integral) = match (a.series, a.integral) {
        (false, false) => (true, true),
        other => other,
    };
    let mut result = json!({});
    if do_series {
        let r = singular_series_partial(&h, a.s, a.qmax, &st.budget)?;
        if r.imag.abs() > 1e-9 * r.value.abs().max(1.0) {
            return Err(Error::Tolerance(format!("series imaginary residual {:.3e}", r.imag)));
        }
        result["series"] = to_value(r)?;
    }
    if do_integral {
        result["integral"] = to_value(singular_integral_truncated(&h, a.s, a.x, a.b, st.tol, &st.budget)?)?;
    }
    Outcome::new(result)
}

fn predict(a: &PredictArgs, st: &Settings) -> Result<Outcome> {
    let h = parse_h(a.h.as_deref(), a.k)?;
    let p = asymptotic_prediction(&h, a.s, a.x, a.qmax, a.b, &st.budget)?;
    let mut warnings = Vec::new();
    let exact = if a.no_exact {
        None
    } else if a.s.fract() != 0.0 || a.s < 1.0 {
        warnings.push("no exact count for non-integer s".into());
        None
    } else {
        let params = SystemParams::new(a.s as usize, h.k(), a.x, h.clone())?;
        match vinogradov::count_j(&params, &st.budget) {
            Ok((c, _)) => Some(c),
            Err(Error::BudgetExceeded { .. }) => {
                warnings.push("exact count refused by budget".into());
                None
            }
            Err(e) => return Err(e),
        }
    };
    let ratio = exact.as_ref().map(|c| c.to_f64() / p.prediction);
    let k = h.k() as f64;
    let regime = if a.s > k * (k + 1.0) / 2.0 {
        "supercritical"
    } else if a.s == k * (k + 1.0) / 2.0 {
        "critical"
    } else {
        "subcritical"
    };
    let mut out = Outcome::new(json!({
        "prediction": p.prediction,
        "series": p.series.value,
        "integral": p.integral.value,
        "integral_error": p.integral.error,
        "exponent": p.exponent,
        "exact": exact,
        "ratio": ratio,
        "regime": regime,
        "details": p,
    }))?;
    out.warnings = warnings;
    Ok(out)
}

fn verify(a: &VerifyArgs, st: &Settings) -> Result<Outcome> {
    let suites: Vec<Suite> = if a.suite == "all" {
        Suite::ALL.to_vec()
    } else {
        vec![a.suite.parse()?]
    };
    let reports = suites
        .iter()
        .map(|s| run_suite(*s, a.trials.unwrap_or(s.default_trials()), st.seed))
        .collect::<Result<Vec<_>>>()?;
    let pass = reports.iter().all(|r| r.passed());
    let table = std::iter::once(vec!["suite".into(), "trials".into(), "failures".into()])
        .chain(reports.iter().map(|r| vec![r.suite.to_string(), r.trials.to_string(), r.failures.to_string()]))
        .collect();
    let mut out = Outcome::new(json!({"pass": pass, "reports": reports}))?;
    out.table = Some(table);
    if !pass {
        return Err(Error::Tolerance(format!(
            "identity suite failures: {}",
            serde_json::to_string(&out.result).unwrap_or_default()
        )));
    }
    Ok(out)
}
