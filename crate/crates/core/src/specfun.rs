//! Orthogonal polynomials and quadrature rules.
//!
//! Polynomials are always evaluated by their three-term recurrences; no
//! factorial-expansion series appear outside the test oracles.

use num_complex::Complex;
use rayon::prelude::*;

use crate::{Error, Real, Result};

/// Physicists' Hermite polynomial `H_n(x)`.
pub fn hermite<T: Real>(n: usize, x: T) -> T {
    let two = T::lit(2.0);
    let mut prev = T::one();
    if n == 0 {
        return prev;
    }
    let mut cur = two * x;
    for k in 1..n {
        let next = two * x * cur - two * T::from_usize_lossy(k) * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Hermite functions `φ_n(x) = e^{-x²/2} H_n(x) / √(2ⁿ n!)` for `n = 0..=nmax`.
///
/// `π^{-1/4} φ_n` is the normalized oscillator eigenfunction. The normalized
/// recurrence stays bounded (`|φ_n| ≤ 1`) where `H_n` itself would overflow.
pub fn hermite_functions<T: Real>(nmax: usize, x: T) -> Vec<T> {
    let mut out = Vec::with_capacity(nmax + 1);
    let mut prev = (-x * x * T::lit(0.5)).exp();
    out.push(prev);
    if nmax == 0 {
        return out;
    }
    let mut cur = T::SQRT_2() * x * prev;
    out.push(cur);
    for k in 1..nmax {
        let kf = T::from_usize_lossy(k);
        let next = (T::lit(2.0) / (kf + T::one())).sqrt() * x * cur
            - (kf / (kf + T::one())).sqrt() * prev;
        prev = cur;
        cur = next;
        out.push(cur);
    }
    out
}

/// Normalized Hermite polynomials `H_n(x) / √(2ⁿ n!)` for `n = 0..=nmax`,
/// without the Gaussian factor.
pub fn hermite_normalized<T: Real>(nmax: usize, x: T) -> Vec<T> {
    let mut out = Vec::with_capacity(nmax + 1);
    let mut prev = T::one();
    out.push(prev);
    if nmax == 0 {
        return out;
    }
    let mut cur = T::SQRT_2() * x;
    out.push(cur);
    for k in 1..nmax {
        let kf = T::from_usize_lossy(k);
        let next = (T::lit(2.0) / (kf + T::one())).sqrt() * x * cur
            - (kf / (kf + T::one())).sqrt() * prev;
        prev = cur;
        cur = next;
        out.push(cur);
    }
    out
}

/// `L_j^k(x)` for `j = 0..=nmax` at a fixed non-negative upper index.
pub fn laguerre_sequence<T: Real>(nmax: usize, k: usize, x: T) -> Vec<T> {
    let kf = T::from_usize_lossy(k);
    let mut out = Vec::with_capacity(nmax + 1);
    let mut prev = T::one();
    out.push(prev);
    if nmax == 0 {
        return out;
    }
    let mut cur = T::one() + kf - x;
    out.push(cur);
    for j in 1..nmax {
        let jf = T::from_usize_lossy(j);
        let next = ((T::lit(2.0) * jf + T::one() + kf - x) * cur - (jf + kf) * prev)
            / (jf + T::one());
        prev = cur;
        cur = next;
        out.push(cur);
    }
    out
}

/// Associated Laguerre polynomial `L_n^k(x)`.
///
/// Negative `k = -j` (with `j ≤ n`) goes through
/// `L_n^{-j}(x) = (-x)^j (n-j)!/n! · L_{n-j}^{j}(x)`.
pub fn laguerre<T: Real>(n: usize, k: i64, x: T) -> Result<T> {
    if k >= 0 {
        return Ok(*laguerre_sequence(n, k as usize, x).last().unwrap());
    }
    let j = k.unsigned_abs() as usize;
    if j > n {
        return Err(Error::LaguerreIndex { n, k });
    }
    // (n-j)!/n! = 1 / ((n-j+1)···n)
    let mut ratio = T::one();
    for i in (n - j + 1)..=n {
        ratio /= T::from_usize_lossy(i);
    }
    let base = *laguerre_sequence(n - j, j, x).last().unwrap();
    Ok((-x).powi(j as i32) * ratio * base)
}

/// Gauss–Hermite nodes and weights for `∫ e^{-x²} f(x) dx`, ascending nodes.
///
/// Newton iteration on the normalized recurrence; computed in `f64`.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let pim4 = std::f64::consts::PI.powf(-0.25);
    let nf = n as f64;
    let m = n.div_ceil(2);
    let mut z = 0.0f64;
    for i in 0..m {
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-0.16667),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = pim4;
            let mut p2 = 0.0;
            for j in 1..=n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-15 * z.abs().max(1.0) {
                break;
            }
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    x.reverse();
    w.reverse();
    (x, w)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Trapezoid,
    GaussHermite,
    Simpson,
}

/// One quadrature axis: finite cutoffs and a node count.
///
/// For [`Scheme::GaussHermite`] the cutoffs mark ±8 widths of the Gaussian
/// envelope: the rule is centred on the midpoint with scale `(hi - lo) / 16`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadAxis<T> {
    pub lo: T,
    pub hi: T,
    pub n_points: usize,
}

impl<T: Real> QuadAxis<T> {
    pub fn new(lo: T, hi: T, n_points: usize) -> Self {
        QuadAxis { lo, hi, n_points }
    }

    pub fn symmetric(cutoff: T, n_points: usize) -> Self {
        QuadAxis::new(-cutoff, cutoff, n_points)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureSpec<T> {
    pub scheme: Scheme,
    pub axes: Vec<QuadAxis<T>>,
}

pub const MIN_POINTS: usize = 8;

impl<T: Real> QuadratureSpec<T> {
    pub fn new(scheme: Scheme, axes: Vec<QuadAxis<T>>) -> Result<Self> {
        let spec = QuadratureSpec { scheme, axes };
        spec.validate()?;
        Ok(spec)
    }

    pub fn one_d(scheme: Scheme, lo: T, hi: T, n_points: usize) -> Result<Self> {
        Self::new(scheme, vec![QuadAxis::new(lo, hi, n_points)])
    }

    pub fn validate(&self) -> Result<()> {
        if self.axes.is_empty() {
            return Err(Error::invalid("quadrature", "no axes"));
        }
        for a in &self.axes {
            if a.n_points < MIN_POINTS {
                return Err(Error::invalid(
                    "n_points",
                    format!("{} < {MIN_POINTS}", a.n_points),
                ));
            }
            if !(a.lo.is_finite() && a.hi.is_finite()) || a.hi <= a.lo {
                return Err(Error::invalid(
                    "cutoffs",
                    format!("need finite lo < hi, got [{}, {}]", a.lo, a.hi),
                ));
            }
        }
        Ok(())
    }
}

/// Nodes and weights of a one-dimensional rule.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule1d<T> {
    pub nodes: Vec<T>,
    pub weights: Vec<T>,
}

impl<T: Real> Rule1d<T> {
    /// Composite trapezoid rule with `n` nodes on `[lo, hi]`.
    pub fn trapezoid(lo: T, hi: T, n: usize) -> Self {
        let h = (hi - lo) / T::from_usize_lossy(n - 1);
        let nodes = uniform_nodes(lo, hi, n);
        let mut weights = vec![h; n];
        weights[0] = h * T::lit(0.5);
        weights[n - 1] = h * T::lit(0.5);
        Rule1d { nodes, weights }
    }

    /// Composite Simpson rule; `n` must be odd.
    pub fn simpson(lo: T, hi: T, n: usize) -> Self {
        assert!(n % 2 == 1, "Simpson rule needs an odd node count");
        let h = (hi - lo) / T::from_usize_lossy(n - 1);
        let third = h / T::lit(3.0);
        let nodes = uniform_nodes(lo, hi, n);
        let weights = (0..n)
            .map(|i| {
                if i == 0 || i == n - 1 {
                    third
                } else if i % 2 == 1 {
                    T::lit(4.0) * third
                } else {
                    T::lit(2.0) * third
                }
            })
            .collect();
        Rule1d { nodes, weights }
    }

    /// Gauss–Hermite rule for plain `∫ f(x) dx`, centred at `center` with
    /// envelope width `scale`; the `e^{y²}` factor is folded into the weights.
    pub fn gauss_hermite(center: T, scale: T, n: usize) -> Self {
        let (y, w) = gauss_hermite(n);
        let nodes = y.iter().map(|&y| center + scale * T::lit(y)).collect();
        let weights = y
            .iter()
            .zip(&w)
            .map(|(&y, &w)| scale * T::lit(w * (y * y).exp()))
            .collect();
        Rule1d { nodes, weights }
    }

    /// Rule for an axis, with node counts rounded up to what the scheme needs
    /// (odd for Simpson).
    pub fn for_axis(scheme: Scheme, axis: &QuadAxis<T>) -> Self {
        match scheme {
            Scheme::Trapezoid => Self::trapezoid(axis.lo, axis.hi, axis.n_points),
            Scheme::Simpson => Self::simpson(axis.lo, axis.hi, axis.n_points | 1),
            Scheme::GaussHermite => {
                let center = (axis.lo + axis.hi) * T::lit(0.5);
                let scale = (axis.hi - axis.lo) / T::lit(16.0);
                Self::gauss_hermite(center, scale, axis.n_points)
            }
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

pub(crate) fn uniform_nodes<T: Real>(lo: T, hi: T, n: usize) -> Vec<T> {
    if n == 1 {
        return vec![lo];
    }
    let h = (hi - lo) / T::from_usize_lossy(n - 1);
    (0..n)
        .map(|i| {
            if i == n - 1 {
                hi
            } else {
                lo + h * T::from_usize_lossy(i)
            }
        })
        .collect()
}

/// Quadrature value with a Richardson-style error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate<T> {
    pub value: T,
    pub error: T,
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum<T> {
    sum: T,
    comp: T,
}

impl<T: Real> CompensatedSum<T> {
    pub fn new() -> Self {
        CompensatedSum {
            sum: T::zero(),
            comp: T::zero(),
        }
    }

    pub fn add(&mut self, x: T) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> T {
        self.sum + self.comp
    }
}

/// Compensated sum of complex terms (real and imaginary parts separately).
#[derive(Debug, Clone, Copy, Default)]
pub struct ComplexSum<T> {
    re: CompensatedSum<T>,
    im: CompensatedSum<T>,
}

impl<T: Real> ComplexSum<T> {
    pub fn new() -> Self {
        ComplexSum {
            re: CompensatedSum::new(),
            im: CompensatedSum::new(),
        }
    }

    pub fn add(&mut self, z: Complex<T>) {
        self.re.add(z.re);
        self.im.add(z.im);
    }

    pub fn value(&self) -> Complex<T> {
        Complex::new(self.re.value(), self.im.value())
    }
}

fn finite_or<T: Real>(v: T, at: T) -> Result<T> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite {
            location: format!("x = {at}"),
        })
    }
}

/// One-dimensional quadrature over the first axis of `spec`.
///
/// The error estimate compares against the same scheme at half resolution:
/// every other node for the composite rules (node counts are rounded up so
/// the coarse grid is valid), half the nodes for Gauss–Hermite.
pub fn integrate_1d<T, F>(f: F, spec: &QuadratureSpec<T>) -> Result<Estimate<T>>
where
    T: Real,
    F: Fn(T) -> T,
{
    spec.validate()?;
    let axis = spec.axes[0];
    match spec.scheme {
        Scheme::GaussHermite => {
            let fine = Rule1d::for_axis(spec.scheme, &axis);
            let coarse = Rule1d::for_axis(
                spec.scheme,
                &QuadAxis::new(axis.lo, axis.hi, (axis.n_points / 2).max(1)),
            );
            let apply = |rule: &Rule1d<T>| -> Result<T> {
                let mut acc = CompensatedSum::new();
                for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
                    acc.add(w * finite_or(f(x), x)?);
                }
                Ok(acc.value())
            };
            let value = apply(&fine)?;
            let error = (value - apply(&coarse)?).abs();
            Ok(Estimate { value, error })
        }
        Scheme::Trapezoid | Scheme::Simpson => {
            let (quantum, order) = match spec.scheme {
                Scheme::Trapezoid => (2, 2),
                _ => (4, 4),
            };
            let intervals = (axis.n_points - 1).div_ceil(quantum) * quantum;
            let n = intervals + 1;
            let nodes = uniform_nodes(axis.lo, axis.hi, n);
            let samples = nodes
                .iter()
                .map(|&x| finite_or(f(x), x))
                .collect::<Result<Vec<_>>>()?;
            let h = (axis.hi - axis.lo) / T::from_usize_lossy(intervals);
            let value = composite(&samples, 1, h, spec.scheme);
            let coarse = composite(&samples, 2, h + h, spec.scheme);
            let denom = T::lit(2.0).powi(order) - T::one();
            Ok(Estimate {
                value,
                error: (value - coarse).abs() / denom,
            })
        }
    }
}

fn composite<T: Real>(samples: &[T], stride: usize, h: T, scheme: Scheme) -> T {
    let pts: Vec<T> = samples.iter().step_by(stride).copied().collect();
    let last = pts.len() - 1;
    let mut acc = CompensatedSum::new();
    for (i, &v) in pts.iter().enumerate() {
        let w = match scheme {
            Scheme::Trapezoid => {
                if i == 0 || i == last {
                    T::lit(0.5)
                } else {
                    T::one()
                }
            }
            _ => {
                if i == 0 || i == last {
                    T::one() / T::lit(3.0)
                } else if i % 2 == 1 {
                    T::lit(4.0 / 3.0)
                } else {
                    T::lit(2.0 / 3.0)
                }
            }
        };
        acc.add(w * v);
    }
    acc.value() * h
}

/// Tensor-product quadrature of a complex integrand over three axes
/// `(X, μ, ν)`.
///
/// Slabs along the first axis are evaluated in parallel; the partial sums are
/// combined in fixed order, so the result does not depend on scheduling.
pub fn integrate_3d<T, F>(f: F, spec: &QuadratureSpec<T>) -> Result<Complex<T>>
where
    T: Real,
    F: Fn(T, T, T) -> Complex<T> + Sync,
{
    spec.validate()?;
    if spec.axes.len() != 3 {
        return Err(Error::invalid("quadrature", "integrate_3d needs three axes"));
    }
    let rules: Vec<Rule1d<T>> = spec
        .axes
        .iter()
        .map(|a| Rule1d::for_axis(spec.scheme, a))
        .collect();
    let (rx, rm, rn) = (&rules[0], &rules[1], &rules[2]);
    let slabs: Vec<Result<Complex<T>>> = (0..rx.len())
        .into_par_iter()
        .map(|i| {
            let x = rx.nodes[i];
            let mut acc = ComplexSum::new();
            for (&mu, &wm) in rm.nodes.iter().zip(&rm.weights) {
                for (&nu, &wn) in rn.nodes.iter().zip(&rn.weights) {
                    let v = f(x, mu, nu);
                    if !(v.re.is_finite() && v.im.is_finite()) {
                        return Err(Error::NonFinite {
                            location: format!("(X, μ, ν) = ({x}, {mu}, {nu})"),
                        });
                    }
                    acc.add(v * (wm * wn));
                }
            }
            Ok(acc.value() * rx.weights[i])
        })
        .collect();
    let mut total = ComplexSum::new();
    for s in slabs {
        total.add(s?);
    }
    Ok(total.value())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use num_bigint::BigInt;
    use num_rational::BigRational;
    use std::f64::consts::PI;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    fn fact(n: usize) -> BigInt {
        (1..=n as u64).fold(BigInt::from(1), |a, k| a * BigInt::from(k))
    }

    fn to_f64(r: &BigRational) -> f64 {
        // 1e30-scaled integer division keeps enough digits for a relative check
        let scale = BigInt::from(10u64).pow(30);
        let q = (r.numer() * &scale) / r.denom();
        q.to_string().parse::<f64>().unwrap() / 1e30
    }

    /// Explicit series `H_n(x) = n! Σ_k (-1)^k (2x)^{n-2k} / (k! (n-2k)!)`.
    fn hermite_series_exact(n: usize, x: &BigRational) -> BigRational {
        let two_x = x * rat(2, 1);
        let mut acc = rat(0, 1);
        for k in 0..=n / 2 {
            let mut term = BigRational::from_integer(fact(n))
                / BigRational::from_integer(fact(k) * fact(n - 2 * k));
            for _ in 0..(n - 2 * k) {
                term *= &two_x;
            }
            if k % 2 == 1 {
                term = -term;
            }
            acc += term;
        }
        acc
    }

    /// `L_n^k(x) = Σ_i (-1)^i C(n+k, n-i) x^i / i!` with generalized binomials.
    fn laguerre_series_exact(n: usize, k: i64, x: &BigRational) -> BigRational {
        let mut acc = rat(0, 1);
        let top = n as i64 + k;
        for i in 0..=n {
            let r = (n - i) as i64;
            // C(top, r) for integer top ≥ 0
            if top < 0 || r > top {
                continue;
            }
            let binom = fact(top as usize) / (fact(r as usize) * fact((top - r) as usize));
            let mut term = BigRational::from_integer(binom) / BigRational::from_integer(fact(i));
            for _ in 0..i {
                term *= x;
            }
            if i % 2 == 1 {
                term = -term;
            }
            acc += term;
        }
        acc
    }

    #[test]
    fn hermite_small_cases() {
        assert_eq!(hermite(0, 0.37f64), 1.0);
        assert_eq!(hermite(3, 2.0f64), 40.0);
        assert_eq!(hermite(1, -1.5f64), -3.0);
    }

    #[test]
    fn hermite_25_matches_exact_rational_series() {
        let exact = to_f64(&hermite_series_exact(25, &rat(13, 10)));
        let got = hermite(25, 1.3f64);
        assert_relative_eq!(got, exact, max_relative = 1e-13);
    }

    #[test]
    fn hermite_derivative_identity() {
        // H_n'(x) = 2n H_{n-1}(x), central differences
        let h = 1e-5;
        for n in 1..=20usize {
            for &x in &[-5.0, -2.3, -0.4, 0.0, 1.1, 3.7, 5.0] {
                let fd = (hermite(n, x + h) - hermite(n, x - h)) / (2.0 * h);
                let exact = 2.0 * n as f64 * hermite(n - 1, x);
                let scale = exact.abs().max(hermite(n, x).abs()).max(1.0);
                assert!(
                    (fd - exact).abs() / scale < 1e-8,
                    "n={n} x={x} fd={fd} exact={exact}"
                );
            }
        }
    }

    #[test]
    fn hermite_functions_match_polynomials() {
        let x = 0.83f64;
        let phi = hermite_functions(12, x);
        let mut norm = 1.0f64;
        for (n, &v) in phi.iter().enumerate() {
            if n > 0 {
                norm *= 2.0 * n as f64;
            }
            let expected = (-x * x / 2.0).exp() * hermite(n, x) / norm.sqrt();
            assert_relative_eq!(v, expected, max_relative = 1e-12);
        }
    }

    #[test]
    fn hermite_generic_f32() {
        assert_eq!(hermite(3, 2.0f32), 40.0f32);
        let a = hermite(10, 0.7f32) as f64;
        let b = hermite(10, 0.7f32 as f64);
        assert_relative_eq!(a, b, max_relative = 1e-5);
    }

    #[test]
    fn laguerre_small_cases() {
        assert_eq!(laguerre(0, 3, 1.7f64).unwrap(), 1.0);
        assert_eq!(laguerre(0, -0, 1.7f64).unwrap(), 1.0);
        assert_relative_eq!(laguerre(2, 1, 3.0f64).unwrap(), -1.5, epsilon = 1e-14);
    }

    #[test]
    fn laguerre_negative_index_matches_series() {
        let x = rat(7, 10);
        let exact = to_f64(&laguerre_series_exact(5, -2, &x));
        let via_identity = 0.49 * (6.0 / 120.0) * laguerre(3, 2, 0.7f64).unwrap();
        let got = laguerre(5, -2, 0.7f64).unwrap();
        assert_relative_eq!(got, exact, max_relative = 1e-13);
        assert_relative_eq!(got, via_identity, max_relative = 1e-14);
    }

    #[test]
    fn laguerre_positive_index_matches_series() {
        let x = rat(23, 10);
        for &(n, k) in &[(7usize, 0i64), (9, 3), (12, 5)] {
            let exact = to_f64(&laguerre_series_exact(n, k, &x));
            let got = laguerre(n, k, 2.3f64).unwrap();
            assert!((got - exact).abs() <= 1e-12 * exact.abs().max(1.0));
        }
    }

    #[test]
    fn laguerre_undefined_branch_rejected() {
        assert!(matches!(
            laguerre(2, -3, 0.5f64),
            Err(Error::LaguerreIndex { n: 2, k: -3 })
        ));
    }

    #[test]
    fn laguerre_at_zero_is_binomial() {
        fn binom(n: u64, k: u64) -> u64 {
            (1..=k).fold(1u64, |acc, i| acc * (n - k + i) / i)
        }
        for n in 0..=12usize {
            for k in 0..=12usize {
                let v = laguerre(n, k as i64, 0.0f64).unwrap();
                assert_eq!(v, binom((n + k) as u64, n as u64) as f64, "n={n} k={k}");
            }
        }
    }

    #[test]
    fn gauss_hermite_integrates_polynomials_exactly() {
        let (x, w) = gauss_hermite(20);
        let m0: f64 = w.iter().sum();
        assert_relative_eq!(m0, PI.sqrt(), max_relative = 1e-14);
        let m2: f64 = x.iter().zip(&w).map(|(x, w)| w * x * x).sum();
        assert_relative_eq!(m2, PI.sqrt() / 2.0, max_relative = 1e-13);
        let m8: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(8)).sum();
        assert_relative_eq!(m8, 105.0 / 16.0 * PI.sqrt(), max_relative = 1e-12);
        assert!(x.windows(2).all(|p| p[0] < p[1]));
    }

    #[test]
    fn integrate_gaussian_all_schemes() {
        for scheme in [Scheme::Trapezoid, Scheme::Simpson, Scheme::GaussHermite] {
            let spec = QuadratureSpec::one_d(scheme, -8.0, 8.0, 129).unwrap();
            let est = integrate_1d(|x: f64| (-x * x).exp(), &spec).unwrap();
            assert!((est.value - PI.sqrt()).abs() < 1e-10, "{scheme:?}: {est:?}");
            let odd = integrate_1d(|x: f64| x * (-x * x).exp(), &spec).unwrap();
            assert!(odd.value.abs() < 1e-12, "{scheme:?}: {odd:?}");
        }
    }

    #[test]
    fn integrate_hermite_norm() {
        // ∫ H_n² e^{-x²} = 2ⁿ n! √π
        let spec = QuadratureSpec::one_d(Scheme::Trapezoid, -8.0, 8.0, 257).unwrap();
        let est = integrate_1d(|x: f64| hermite(2, x).powi(2) * (-x * x).exp(), &spec).unwrap();
        assert!((est.value - 8.0 * PI.sqrt()).abs() < 1e-8);
        let gh = QuadratureSpec::one_d(Scheme::GaussHermite, -8.0, 8.0, 16).unwrap();
        let est = integrate_1d(|x: f64| hermite(2, x).powi(2) * (-x * x).exp(), &gh).unwrap();
        assert!((est.value - 8.0 * PI.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn composite_rules_converge_at_their_order() {
        // smooth, non-decaying integrand on a finite interval: ∫_0^1 e^x = e - 1
        let exact = std::f64::consts::E - 1.0;
        for (scheme, order) in [(Scheme::Trapezoid, 2.0), (Scheme::Simpson, 4.0)] {
            let err = |n: usize| {
                let spec = QuadratureSpec::one_d(scheme, 0.0, 1.0, n).unwrap();
                (integrate_1d(|x: f64| x.exp(), &spec).unwrap().value - exact).abs()
            };
            let (e1, e2) = (err(17), err(33));
            let observed = (e1 / e2).log2();
            assert!((observed - order).abs() < 0.1, "{scheme:?}: {observed}");
        }
    }

    #[test]
    fn richardson_error_estimate_is_sensible() {
        let spec = QuadratureSpec::one_d(Scheme::Trapezoid, 0.0, 1.0, 33).unwrap();
        let est = integrate_1d(|x: f64| x.exp(), &spec).unwrap();
        let true_err = (est.value - (std::f64::consts::E - 1.0)).abs();
        assert!(est.error > 0.5 * true_err && est.error < 2.0 * true_err);
    }

    #[test]
    fn quadrature_rejects_bad_specs_and_nan() {
        assert!(QuadratureSpec::one_d(Scheme::Trapezoid, -1.0, 1.0, 4).is_err());
        assert!(QuadratureSpec::one_d(Scheme::Trapezoid, 1.0, -1.0, 16).is_err());
        assert!(QuadratureSpec::one_d(Scheme::Trapezoid, -1.0, f64::INFINITY, 16).is_err());
        let spec = QuadratureSpec::one_d(Scheme::Trapezoid, -1.0, 1.0, 17).unwrap();
        assert!(matches!(
            integrate_1d(|x: f64| if x > 0.5 { f64::NAN } else { x }, &spec),
            Err(Error::NonFinite { .. })
        ));
    }

    #[test]
    fn integrate_3d_separable_and_odd() {
        let axis = QuadAxis::symmetric(8.0, 97);
        let spec = QuadratureSpec::new(Scheme::Trapezoid, vec![axis; 3]).unwrap();
        let g = integrate_3d(
            |x: f64, m: f64, n: f64| Complex::new((-x * x - m * m - n * n).exp(), 0.0),
            &spec,
        )
        .unwrap();
        assert!((g.re - PI.powf(1.5)).abs() < 1e-8);
        let odd = integrate_3d(
            |x: f64, m: f64, n: f64| Complex::new(x * (-x * x - m * m - n * n).exp(), 0.0),
            &spec,
        )
        .unwrap();
        assert!(odd.norm() < 1e-10);
    }

    #[test]
    fn integrate_3d_is_deterministic() {
        let axis = QuadAxis::symmetric(4.0, 33);
        let spec = QuadratureSpec::new(Scheme::Simpson, vec![axis; 3]).unwrap();
        let f = |x: f64, m: f64, n: f64| Complex::new((x + m).cos(), n.sin()) * (-(x * x + m * m + n * n)).exp();
        let a = integrate_3d(f, &spec).unwrap();
        let b = integrate_3d(f, &spec).unwrap();
        assert_eq!(a.re.to_bits(), b.re.to_bits());
        assert_eq!(a.im.to_bits(), b.im.to_bits());
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut s = CompensatedSum::new();
        s.add(1.0f64);
        for _ in 0..10 {
            s.add(1e-16);
        }
        s.add(-1.0);
        assert_relative_eq!(s.value(), 1e-15, max_relative = 1e-10);
    }
}
