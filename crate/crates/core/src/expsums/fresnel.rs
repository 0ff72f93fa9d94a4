//! Closed forms for `int_0^1 e(a t + b t^2) dt` through the complex Fresnel
//! integral `E(x) = int_0^x exp(i pi u^2 / 2) du`.

use num_complex::Complex64;
use std::f64::consts::PI;

use super::phase::e;

const SERIES_LIMIT: f64 = 2.0;

/// `E(x)` by its power series; used for `|x| <= 2`.
fn fresnel_series(x: f64) -> Complex64 {
    let z = Complex64::new(0.0, PI / 2.0);
    let x2 = x * x;
    let mut term = Complex64::new(x, 0.0); // (i pi/2)^n x^{2n+1} / n!
    let mut total = term;
    for n in 1..200 {
        term = term * z * x2 / n as f64;
        let add = term / (2 * n + 1) as f64;
        total += add;
        if add.norm() < 1e-18 * total.norm().max(1e-300) {
            break;
        }
    }
    total
}

/// `R(x)` with `int_x^inf exp(i pi u^2/2) du = exp(i pi x^2/2) R(x)`, for `x > 0`,
/// from the continued fraction for `erfc` evaluated by modified Lentz.
fn fresnel_tail(x: f64) -> Complex64 {
    let z = Complex64::new(1.0, -1.0) * (PI.sqrt() / 2.0 * x);
    // K(z) = 1/(z + (1/2)/(z + 1/(z + (3/2)/(z + ...))))
    let tiny = 1e-300;
    let mut f = z;
    let mut c = z;
    let mut d = Complex64::new(0.0, 0.0);
    for n in 1..5000 {
        let an = n as f64 / 2.0;
        d = z + d * an;
        if d.norm() < tiny {
            d = Complex64::new(tiny, 0.0);
        }
        d = d.inv();
        c = z + Complex64::new(an, 0.0) / c;
        if c.norm() < tiny {
            c = Complex64::new(tiny, 0.0);
        }
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).norm() < 1e-16 {
            break;
        }
    }
    Complex64::new(0.5, 0.5) * f.inv() / PI.sqrt()
}

/// One endpoint of `int e(b (t^2 - c^2)) dt` at `t`, for `b > 0`, split as
/// `(constant, oscillating)` where `E(u) e(-b c^2) = constant * e(-b c^2) - oscillating`
/// and `u = 2 sqrt(b) t`. `phase` is `b (t^2 - c^2)`, computed by the caller.
fn endpoint(u: f64, phase: f64) -> (Complex64, Complex64) {
    if u.abs() <= SERIES_LIMIT {
        (fresnel_series(u), Complex64::new(0.0, 0.0))
    } else {
        let sgn = u.signum();
        (
            Complex64::new(0.5, 0.5) * sgn,
            e(phase) * fresnel_tail(u.abs()) * sgn,
        )
    }
}

/// `int_0^1 e(a t + b t^2) dt`, for `b != 0`.
pub fn quadratic_phase_integral(a: f64, b: f64) -> Complex64 {
    assert!(b != 0.0, "quadratic coefficient must be nonzero");
    if b < 0.0 {
        return quadratic_phase_integral(-a, -b).conj();
    }
    let c = a / (2.0 * b);
    let root = 2.0 * b.sqrt();
    let (u1, u2) = (root * c, root * (1.0 + c));
    // e(b((1+c)^2 - c^2)) = e(a + b); e(b(c^2 - c^2)) = 1
    let (k1, o1) = endpoint(u1, 0.0);
    let (k2, o2) = endpoint(u2, a + b);
    let both_tails = u1.abs() > SERIES_LIMIT && u2.abs() > SERIES_LIMIT;
    let constant = if both_tails && u1.signum() == u2.signum() {
        Complex64::new(0.0, 0.0)
    } else {
        (k2 - k1) * e(-b * c * c)
    };
    (constant - o2 + o1) / root
}

/// `int_0^1 e(a t) dt`.
pub fn linear_phase_integral(a: f64) -> Complex64 {
    if a.abs() < 1e-4 {
        // series of (e(a) - 1)/(2 pi i a)
        let z = Complex64::new(0.0, 2.0 * PI * a);
        let mut term = Complex64::new(1.0, 0.0);
        let mut total = term;
        for n in 1..12 {
            term = term * z / (n + 1) as f64;
            total += term;
        }
        total
    } else {
        (e(a) - 1.0) / Complex64::new(0.0, 2.0 * PI * a)
    }
}
