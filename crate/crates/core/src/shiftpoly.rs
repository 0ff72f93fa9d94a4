//! Shift polynomials `nu_j(y;h)` and symmetric-function identities.
//!
//! `nu_j(y;h) = sum_{i<j} C(j,i) h_{j-i} y^i` records how the system changes
//! when every variable is translated by `y`. The symmetric-function half of
//! the module relates power sums to elementary symmetric polynomials, both
//! by Newton's recursion and by the multinomial sum over partitions.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Pow, Zero};

use crate::error::{invalid, Error, Result};
use crate::types::HTuple;

pub fn binomial(n: u32, r: u32) -> BigInt {
    if r > n {
        return BigInt::zero();
    }
    let r = r.min(n - r);
    let mut acc = BigInt::one();
    for i in 0..r {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

/// `nu_j(y;h)` as an explicit polynomial in `y`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NuPolynomial {
    pub j: usize,
    /// `coeffs[i]` multiplies `y^i`, for `0 <= i < j`.
    pub coeffs: Vec<BigInt>,
}

impl NuPolynomial {
    pub fn new(j: usize, h: &HTuple) -> Result<Self> {
        if j == 0 || j > h.k() {
            return Err(invalid(format!("nu index {j} outside 1..={}", h.k())));
        }
        let coeffs = (0..j)
            .map(|i| binomial(j as u32, i as u32) * h.get(j - i))
            .collect();
        Ok(NuPolynomial { j, coeffs })
    }

    pub fn eval(&self, y: &BigInt) -> BigInt {
        self.coeffs
            .iter()
            .rev()
            .fold(BigInt::zero(), |acc, c| acc * y + c)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(Zero::is_zero)
    }

    /// Index and value of the highest non-vanishing coefficient.
    pub fn leading_term(&self) -> Option<(usize, &BigInt)> {
        self.coeffs
            .iter()
            .enumerate()
            .rev()
            .find(|(_, c)| !c.is_zero())
    }
}

/// `nu_j(y;h)`, evaluated directly from the binomial sum.
pub fn nu_eval(j: usize, y: &BigInt, h: &HTuple) -> Result<BigInt> {
    if j == 0 || j > h.k() {
        return Err(invalid(format!("nu index {j} outside 1..={}", h.k())));
    }
    let mut total = BigInt::zero();
    let mut y_pow = BigInt::one();
    for i in 0..j {
        total += binomial(j as u32, i as u32) * h.get(j - i) * &y_pow;
        y_pow *= y;
    }
    Ok(total)
}

/// The full profile `(nu_1(y;h), ..., nu_k(y;h))`.
pub fn nu_profile(y: &BigInt, h: &HTuple) -> Vec<BigInt> {
    (1..=h.k())
        .map(|j| nu_eval(j, y, h).expect("index in range"))
        .collect()
}

/// Checks the binomial-shift relation on `x = (x_1..x_s, x_{s+1}..x_{2s})`.
///
/// The first flag says whether
/// `sum_i (x_i - b)^j - (x_{s+i} - b)^j = h_j` for `1 <= j < k`;
/// the second whether `sum_i x_i^j - x_{s+i}^j = nu_j(b;h)` for the same `j`.
/// The two systems are equivalent, so the flags always agree.
pub fn verify_shift_identity(x: &[i64], b: i64, h: &HTuple) -> Result<(bool, bool)> {
    if !x.len().is_multiple_of(2) {
        return Err(invalid("shift identity needs a tuple of even length"));
    }
    let s = x.len() / 2;
    let k = h.k();
    let b_big = BigInt::from(b);
    let mut shifted = true;
    let mut relation = true;
    for j in 1..k {
        let mut lhs_shift = BigInt::zero();
        let mut lhs_plain = BigInt::zero();
        for i in 0..s {
            let (u, w) = (BigInt::from(x[i]), BigInt::from(x[s + i]));
            lhs_shift += Pow::pow(&(&u - &b_big), j as u32) - Pow::pow(&(&w - &b_big), j as u32);
            lhs_plain += Pow::pow(&u, j as u32) - Pow::pow(&w, j as u32);
        }
        shifted &= &lhs_shift == h.get(j);
        relation &= lhs_plain == nu_eval(j, &b_big, h)?;
    }
    Ok((shifted, relation))
}

/// The top-degree companion relation: whenever the shifted system holds,
/// `sum x_i^k - x_{s+i}^k = sum_{1<=l<k} C(k,l) h_{k-l} b^l + sum (x_i-b)^k - (x_{s+i}-b)^k`.
pub fn top_degree_relation(x: &[i64], b: i64, h: &HTuple) -> Result<bool> {
    if !x.len().is_multiple_of(2) {
        return Err(invalid("shift identity needs a tuple of even length"));
    }
    let s = x.len() / 2;
    let k = h.k() as u32;
    let b_big = BigInt::from(b);
    let mut plain = BigInt::zero();
    let mut shifted = BigInt::zero();
    for i in 0..s {
        let (u, w) = (BigInt::from(x[i]), BigInt::from(x[s + i]));
        plain += Pow::pow(&u, k) - Pow::pow(&w, k);
        shifted += Pow::pow(&(&u - &b_big), k) - Pow::pow(&(&w - &b_big), k);
    }
    let mut rhs = shifted;
    for l in 1..k {
        rhs += binomial(k, l) * h.get((k - l) as usize) * Pow::pow(&b_big, l);
    }
    Ok(plain == rhs)
}

/// Power sums `s_1..s_n` of a tuple, as rationals.
pub fn power_sums(z: &[BigInt], n: usize) -> Vec<BigRational> {
    (1..=n as u32)
        .map(|j| BigRational::from_integer(z.iter().map(|v| Pow::pow(v, j)).sum()))
        .collect()
}

/// `sigma_n` from power sums `s_1..s_n` by Newton's recursion
/// `m sigma_m = sum_{i=1}^m (-1)^{i-1} sigma_{m-i} s_i`.
pub fn elementary_from_power(power_sums: &[BigRational], n: usize) -> Result<BigRational> {
    Ok(elementaries_from_power(power_sums, n)?.pop().expect("n+1 values"))
}

/// `sigma_0..sigma_n` by Newton's recursion.
pub fn elementaries_from_power(power_sums: &[BigRational], n: usize) -> Result<Vec<BigRational>> {
    if power_sums.len() < n {
        return Err(Error::InsufficientData(format!(
            "sigma_{n} needs {n} power sums, got {}",
            power_sums.len()
        )));
    }
    let mut sigma = Vec::with_capacity(n + 1);
    sigma.push(BigRational::one());
    for m in 1..=n {
        let mut acc = BigRational::zero();
        for i in 1..=m {
            let term = &sigma[m - i] * &power_sums[i - 1];
            if i % 2 == 1 {
                acc += term;
            } else {
                acc -= term;
            }
        }
        sigma.push(acc / BigRational::from_integer(BigInt::from(m)));
    }
    Ok(sigma)
}

/// `sigma_n = (-1)^n sum_{m_1 + 2 m_2 + ... + n m_n = n} prod_i (-s_i)^{m_i} / (i^{m_i} m_i!)`.
pub fn elementary_multinomial(power_sums: &[BigRational], n: usize) -> Result<BigRational> {
    if power_sums.len() < n {
        return Err(Error::InsufficientData(format!(
            "sigma_{n} needs {n} power sums, got {}",
            power_sums.len()
        )));
    }
    let mut total = BigRational::zero();
    let mut multiplicities = vec![0u32; n + 1];
    partitions(n, n, &mut multiplicities, &mut |m| {
        let mut term = BigRational::one();
        for i in 1..=n {
            if m[i] == 0 {
                continue;
            }
            let base = -&power_sums[i - 1] / BigRational::from_integer(BigInt::from(i));
            term *= Pow::pow(&base, m[i]);
            term /= BigRational::from_integer(factorial(m[i]));
        }
        total += term;
    });
    if n % 2 == 1 {
        total = -total;
    }
    Ok(total)
}

fn factorial(m: u32) -> BigInt {
    (1..=m).fold(BigInt::one(), |acc, i| acc * BigInt::from(i))
}

/// Calls `visit` with the multiplicity vector of every partition of `remaining`
/// into parts of size at most `max_part`.
fn partitions(remaining: usize, max_part: usize, m: &mut Vec<u32>, visit: &mut impl FnMut(&[u32])) {
    if remaining == 0 {
        visit(m);
        return;
    }
    for part in (1..=max_part.min(remaining)).rev() {
        m[part] += 1;
        partitions(remaining - part, part, m, visit);
        m[part] -= 1;
    }
}

/// Power sums together with `sigma_0..sigma_k` of one tuple.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetricProfile {
    pub n: usize,
    pub power_sums: Vec<BigRational>,
    pub elementaries: Vec<BigRational>,
}

impl SymmetricProfile {
    pub fn of(z: &[BigInt], k: usize) -> Self {
        let power_sums = power_sums(z, k);
        let elementaries = elementaries_from_power(&power_sums, k).expect("k power sums");
        SymmetricProfile {
            n: z.len(),
            power_sums,
            elementaries,
        }
    }

    /// Whether every elementary symmetric value is an integer.
    pub fn is_integral(&self) -> bool {
        self.elementaries.iter().all(|e| e.is_integer())
    }
}

/// `sigma_0..sigma_n` read off `prod_i (1 + t z_i)`.
pub fn elementaries_direct(z: &[BigInt]) -> Vec<BigInt> {
    let mut coeffs = vec![BigInt::one()];
    for zi in z {
        let mut next = vec![BigInt::zero(); coeffs.len() + 1];
        for (i, c) in coeffs.iter().enumerate() {
            next[i] += c;
            next[i + 1] += c * zi;
        }
        coeffs = next;
    }
    coeffs
}

fn to_big(v: &[i64]) -> Vec<BigInt> {
    v.iter().map(|&x| BigInt::from(x)).collect()
}

/// Whether `sigma_n(x) = sigma_n(y)` for every `1 <= n < l`.
///
/// The elementary values come from expanding `prod (1 + t z_i)`, independent
/// of the power sums, so this tests that equal power sums below degree `l`
/// force equal elementary symmetric values below degree `l`.
pub fn check_sigma_equalities(x: &[i64], y: &[i64], l: usize) -> bool {
    let ex = elementaries_direct(&to_big(x));
    let ey = elementaries_direct(&to_big(y));
    (1..l).all(|n| ex.get(n) == ey.get(n))
}

/// Both sides of
/// `prod (z - x_i) - prod (z - y_i) = (-1)^k sum_n (sigma_n(x) - sigma_n(y)) (-z)^{k-n}`.
#[derive(Clone, Debug, PartialEq)]
pub struct DualValue {
    pub direct: BigRational,
    pub expansion: BigRational,
}

impl DualValue {
    pub fn agree(&self) -> bool {
        self.direct == self.expansion
    }
}

pub fn poly_difference_eval(x: &[i64], y: &[i64], z: &BigRational) -> Result<DualValue> {
    if x.len() != y.len() {
        return Err(Error::DegreeMismatch {
            expected: x.len(),
            found: y.len(),
        });
    }
    let k = x.len();
    let product = |t: &[i64]| {
        t.iter().fold(BigRational::one(), |acc, &v| {
            acc * (z - BigRational::from_integer(BigInt::from(v)))
        })
    };
    let direct = product(x) - product(y);

    let sx = elementaries_from_power(&power_sums(&to_big(x), k), k)?;
    let sy = elementaries_from_power(&power_sums(&to_big(y), k), k)?;
    let minus_z = -z.clone();
    let mut expansion = BigRational::zero();
    for n in 0..=k {
        expansion += (&sx[n] - &sy[n]) * Pow::pow(&minus_z, (k - n) as u32);
    }
    if k % 2 == 1 {
        expansion = -expansion;
    }
    Ok(DualValue { direct, expansion })
}

/// Integer coefficients (constant term first) of `prod (z - x_i) - prod (z - y_i)`.
pub fn poly_difference_coeffs(x: &[i64], y: &[i64]) -> Vec<BigInt> {
    let monic = |t: &[i64]| {
        let mut c = vec![BigInt::one()];
        for &v in t {
            let mut next = vec![BigInt::zero(); c.len() + 1];
            for (i, a) in c.iter().enumerate() {
                next[i + 1] += a;
                next[i] -= a * BigInt::from(v);
            }
            c = next;
        }
        c
    };
    let (px, py) = (monic(x), monic(y));
    let len = px.len().max(py.len());
    (0..len)
        .map(|i| {
            px.get(i).cloned().unwrap_or_default() - py.get(i).cloned().unwrap_or_default()
        })
        .collect()
}

/// Degree of a coefficient vector, `None` for the zero polynomial.
pub fn degree(coeffs: &[BigInt]) -> Option<usize> {
    coeffs.iter().rposition(|c| !c.is_zero())
}

/// For a solution of the `s = k` system whose right side is supported on
/// the single index `l`: checks `sigma_n(x) = sigma_n(y)` for `n < l` and
/// that `prod (z - x_i) - prod (z - y_i)` has degree at most `k - l`.
pub fn single_h_degree_bound(x: &[i64], y: &[i64], l: usize) -> Result<bool> {
    if x.len() != y.len() {
        return Err(Error::DegreeMismatch {
            expected: x.len(),
            found: y.len(),
        });
    }
    let k = x.len();
    if l == 0 || l > k {
        return Err(invalid(format!("index l = {l} outside 1..={k}")));
    }
    let sx = elementaries_from_power(&power_sums(&to_big(x), k), k)?;
    let sy = elementaries_from_power(&power_sums(&to_big(y), k), k)?;
    let sigmas_agree = (1..l).all(|n| sx[n] == sy[n]);
    let low_degree = degree(&poly_difference_coeffs(x, y)).is_none_or(|d| d <= k - l);
    Ok(sigmas_agree && low_degree)
}
