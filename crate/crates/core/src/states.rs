//! States in the Fock basis of the invariant number operator `A†A`.
//!
//! `A = (i/√2)(ε p̂ − ε̇ q̂)` is an integral of motion, so a state expanded in
//! the time-dependent number states `Ψ_m(x, t)` keeps constant coefficients.
//! Coherent states are eigenstates of `A`; f-coherent (nonlinear coherent)
//! states are eigenstates of `B = A f(A†A)`.

use num_complex::Complex;

use crate::dynamics::{epsilon_at, EpsilonTrajectory};
use crate::specfun::{hermite_normalized, laguerre_sequence, CompensatedSum, Rule1d};
use crate::{Error, Real, Result};

pub const DEFAULT_TRUNCATION: usize = 40;

/// Largest accepted relative weight of the Fock tail beyond the truncation.
pub const MAX_TAIL: f64 = 1e-8;

/// Deformation function `f(n)` of `B = A f(A†A)`.
///
/// `f(0) = 1` for every variant.
#[derive(Debug, Clone, PartialEq)]
pub enum Deformation<T> {
    /// `f ≡ 1`: ordinary coherent states.
    Identity,
    /// `f(n) = L¹_{n+1}(η²) / (n L⁰_{n+1}(η²))`, the Lamb–Dicke ratio with
    /// shifted indices. Its `η → 0` limit is `(n + 2)/n`, not 1.
    ShiftedLambDicke { eta: T },
    /// `f(n) = L¹_n(η²) / ((n + 1) L⁰_n(η²))`, the standard Lamb–Dicke
    /// deformation; `f → 1` as `η → 0`.
    VogelLambDicke { eta: T },
    /// `f(n) = table[n]` for `n ≥ 1`; `table[0]` is ignored.
    CustomTable(Vec<T>),
}

/// Laguerre values below this magnitude count as a vanishing denominator.
const SINGULAR_DENOMINATOR: f64 = 1e-14;

impl<T: Real> Deformation<T> {
    pub fn validate(&self) -> Result<()> {
        match self {
            Deformation::ShiftedLambDicke { eta } | Deformation::VogelLambDicke { eta } => {
                if !eta.is_finite() || *eta < T::zero() {
                    return Err(Error::invalid("eta", format!("must be finite and ≥ 0, got {eta}")));
                }
            }
            Deformation::CustomTable(t) => {
                if t.iter().any(|v| !v.is_finite()) {
                    return Err(Error::invalid("f-table", "entries must be finite"));
                }
            }
            Deformation::Identity => {}
        }
        Ok(())
    }

    /// `f(n)`.
    pub fn f_value(&self, n: usize) -> Result<T> {
        if n == 0 {
            return Ok(T::one());
        }
        let ratio = |num: T, den: T, n: usize| -> Result<T> {
            if den.abs() < T::lit(SINGULAR_DENOMINATOR) {
                return Err(Error::DeformationSingular {
                    n,
                    reason: format!("Laguerre denominator {:e} vanishes; change η or truncation", den.to_f64_lossy()),
                });
            }
            Ok(num / den)
        };
        match self {
            Deformation::Identity => Ok(T::one()),
            Deformation::ShiftedLambDicke { eta } => {
                let x = *eta * *eta;
                let l1 = *laguerre_sequence(n + 1, 1, x).last().unwrap();
                let l0 = *laguerre_sequence(n + 1, 0, x).last().unwrap();
                ratio(l1, T::from_usize_lossy(n) * l0, n)
            }
            Deformation::VogelLambDicke { eta } => {
                let x = *eta * *eta;
                let l1 = *laguerre_sequence(n, 1, x).last().unwrap();
                let l0 = *laguerre_sequence(n, 0, x).last().unwrap();
                ratio(l1, T::from_usize_lossy(n + 1) * l0, n)
            }
            Deformation::CustomTable(table) => table.get(n).copied().ok_or_else(|| {
                Error::DeformationSingular {
                    n,
                    reason: format!("custom table has only {} entries", table.len()),
                }
            }),
        }
    }

    fn is_identity(&self) -> bool {
        matches!(self, Deformation::Identity)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StateKind<T> {
    Coherent { alpha: Complex<T> },
    Number { level: usize },
    FCoherent { beta: Complex<T>, deformation: Deformation<T> },
}

impl<T: Real> StateKind<T> {
    pub fn name(&self) -> &'static str {
        match self {
            StateKind::Coherent { .. } => "coherent",
            StateKind::Number { .. } => "number",
            StateKind::FCoherent { .. } => "f_coherent",
        }
    }
}

/// A pure state as truncated Fock coefficients `c_0..=c_N`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpec<T> {
    pub kind: StateKind<T>,
    pub truncation: usize,
    pub coeffs: Vec<Complex<T>>,
    /// Bound on `Σ_{n>N} |c_n|²`.
    pub tail_bound: T,
}

impl<T: Real> StateSpec<T> {
    pub fn coherent(alpha: Complex<T>, truncation: usize) -> Result<Self> {
        make_state(StateKind::Coherent { alpha }, truncation)
    }

    pub fn number(level: usize, truncation: usize) -> Result<Self> {
        make_state(StateKind::Number { level }, truncation)
    }

    pub fn f_coherent(beta: Complex<T>, deformation: Deformation<T>, truncation: usize) -> Result<Self> {
        make_state(StateKind::FCoherent { beta, deformation }, truncation)
    }

    pub fn vacuum() -> Self {
        Self::number(0, 1).expect("vacuum is always constructible")
    }

    pub fn norm_sqr(&self) -> T {
        let mut s = CompensatedSum::new();
        for c in &self.coeffs {
            s.add(c.norm_sqr());
        }
        s.value()
    }

    pub fn mean_number(&self) -> T {
        self.coeffs
            .iter()
            .enumerate()
            .fold(T::zero(), |acc, (n, c)| acc + T::from_usize_lossy(n) * c.norm_sqr())
    }

    /// Index of the last coefficient with `|c_n| > 1e-16`.
    pub fn effective_top(&self) -> usize {
        self.coeffs
            .iter()
            .rposition(|c| c.norm() > T::lit(1e-16))
            .unwrap_or(0)
    }
}

/// Builds the Fock coefficients of a state.
///
/// Coherent: `c_n = e^{-|α|²/2} αⁿ/√n!`. f-coherent:
/// `c_n ∝ βⁿ/(√n! [f(n)]!)` with `[f(n)]! = f(0)f(1)⋯f(n)`, normalized by
/// the full series (the part beyond `N` is summed until it is negligible and
/// closed with a geometric bound). Rejects states whose tail beyond the
/// truncation exceeds [`MAX_TAIL`].
pub fn make_state<T: Real>(kind: StateKind<T>, truncation: usize) -> Result<StateSpec<T>> {
    if truncation < 1 {
        return Err(Error::invalid("truncation", "must be ≥ 1"));
    }
    let n = truncation;
    let (coeffs, tail) = match &kind {
        StateKind::Number { level } => {
            if *level > n {
                return Err(Error::invalid(
                    "level",
                    format!("level {level} exceeds truncation {n}"),
                ));
            }
            let mut c = vec![Complex::new(T::zero(), T::zero()); n + 1];
            c[*level] = Complex::new(T::one(), T::zero());
            (c, T::zero())
        }
        StateKind::Coherent { alpha } => {
            check_amplitude("alpha", *alpha)?;
            let (raw, _, tail) = series_terms(*alpha, &Deformation::Identity, n)?;
            let scale = (-alpha.norm_sqr() * T::lit(0.5)).exp();
            (raw.into_iter().map(|a| a * scale).collect(), tail)
        }
        StateKind::FCoherent { beta, deformation } => {
            check_amplitude("beta", *beta)?;
            deformation.validate()?;
            let (raw, total, tail) = series_terms(*beta, deformation, n)?;
            let scale = T::one() / total.sqrt();
            (raw.into_iter().map(|a| a * scale).collect(), tail)
        }
    };
    if !(tail <= T::lit(MAX_TAIL)) {
        return Err(Error::TruncationTail {
            truncation: n,
            tail: tail.to_f64_lossy(),
            limit: MAX_TAIL,
        });
    }
    Ok(StateSpec {
        kind,
        truncation: n,
        coeffs,
        tail_bound: tail,
    })
}

fn check_amplitude<T: Real>(name: &'static str, z: Complex<T>) -> Result<()> {
    if z.re.is_finite() && z.im.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(name, "amplitude must be finite"))
    }
}

/// Unnormalized `a_n = zⁿ/(√n! [f(n)]!)` for `n ≤ N`, the full normalization
/// sum `Σ |a_n|²`, and the relative tail weight beyond `N`.
fn series_terms<T: Real>(
    z: Complex<T>,
    deformation: &Deformation<T>,
    n: usize,
) -> Result<(Vec<Complex<T>>, T, T)> {
    let mut terms = Vec::with_capacity(n + 1);
    let mut a = Complex::new(T::one(), T::zero());
    terms.push(a);
    let mut head = CompensatedSum::new();
    head.add(T::one());
    for k in 1..=n {
        let f = deformation.f_value(k)?;
        if f == T::zero() || !f.is_finite() {
            return Err(Error::DeformationSingular {
                n: k,
                reason: format!("f({k}) = {f} makes [f({k})]! non-invertible"),
            });
        }
        a = a * z / (T::from_usize_lossy(k).sqrt() * f);
        terms.push(a);
        head.add(a.norm_sqr());
    }

    // Sum the tail explicitly, then close it with a geometric bound once the
    // term ratio has settled below 1/2.
    let head = head.value();
    let mut tail = CompensatedSum::new();
    let mut last = terms[n].norm_sqr();
    let mut ratio = T::infinity();
    let limit = (2 * n).max(n + 64);
    let mut k = n + 1;
    while k <= limit {
        let f = match deformation.f_value(k) {
            Ok(f) if f != T::zero() && f.is_finite() => f,
            _ => {
                // f is unknown past a custom table: extrapolate the last
                // term ratio geometrically
                if k > 1 && k == n + 1 {
                    let before = terms[n - 1].norm_sqr();
                    ratio = if before > T::zero() { last / before } else { T::zero() };
                }
                break;
            }
        };
        a = a * z / (T::from_usize_lossy(k).sqrt() * f);
        let w = a.norm_sqr();
        ratio = if last > T::zero() { w / last } else { T::zero() };
        tail.add(w);
        last = w;
        if w <= T::lit(1e-40) * head && ratio < T::lit(0.5) {
            break;
        }
        k += 1;
    }
    if k == n + 1 && deformation.is_identity() {
        ratio = z.norm_sqr() / T::from_usize_lossy(n + 2);
    }
    let remainder = if last == T::zero() {
        T::zero()
    } else if ratio < T::one() {
        last * ratio / (T::one() - ratio)
    } else {
        T::infinity()
    };
    let tail = tail.value() + remainder;
    let total = head + tail;
    Ok((terms, total, tail / total))
}

/// First and second moments of `q̂`, `p̂` (`σ_pq` is the symmetrized covariance).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureMoments<T> {
    pub mean_q: T,
    pub mean_p: T,
    pub sigma_qq: T,
    pub sigma_pp: T,
    pub sigma_pq: T,
    pub correlation_r: T,
}

impl<T: Real> QuadratureMoments<T> {
    fn from_second(mean_q: T, mean_p: T, sigma_qq: T, sigma_pp: T, sigma_pq: T) -> Self {
        QuadratureMoments {
            mean_q,
            mean_p,
            sigma_qq,
            sigma_pp,
            sigma_pq,
            correlation_r: sigma_pq / (sigma_qq * sigma_pp).sqrt(),
        }
    }

    /// `σ_qq σ_pp − σ_pq²`, which is `1/4` for minimum-uncertainty states.
    pub fn uncertainty_product(&self) -> T {
        self.sigma_qq * self.sigma_pp - self.sigma_pq * self.sigma_pq
    }

    /// Variance of `X = μq + νp`.
    pub fn sigma_x(&self, mu: T, nu: T) -> T {
        mu * mu * self.sigma_qq + nu * nu * self.sigma_pp + T::lit(2.0) * mu * nu * self.sigma_pq
    }
}

/// `Ψ_0(x, t) = π^{-1/4} ε^{-1/2} exp(i ε̇ x² / 2ε)`.
fn ground<T: Real>(x: T, eps: Complex<T>, eps_dot: Complex<T>) -> Complex<T> {
    let i = Complex::new(T::zero(), T::one());
    let expo = i * eps_dot * (x * x) / (eps * T::lit(2.0));
    expo.exp() * T::PI().powf(T::lit(-0.25)) / eps.sqrt()
}

/// Number states `Ψ_m(x, t)` for `m = 0..=mmax`:
/// `(ε*/|ε|)^m Ψ_0 H_m(x/|ε|) / √(2^m m!)`.
///
/// The phase `(ε*/2ε)^{m/2}/√m!` is resolved as `(ε*/|ε|)^m 2^{-m/2}/√m!`,
/// the branch for which the number states generate the coherent state.
fn number_states<T: Real>(mmax: usize, x: T, eps: Complex<T>, eps_dot: Complex<T>) -> Vec<Complex<T>> {
    let r = eps.norm();
    let phase = eps.conj() / r;
    let psi0 = ground(x, eps, eps_dot);
    let h = hermite_normalized(mmax, x / r);
    let mut ph = Complex::new(T::one(), T::zero());
    h.into_iter()
        .enumerate()
        .map(|(m, hm)| {
            if m > 0 {
                ph *= phase;
            }
            psi0 * ph * hm
        })
        .collect()
}

/// `Ψ_m(x, t)`.
pub fn psi_number<T: Real>(m: usize, x: T, traj: &EpsilonTrajectory<T>, t: T) -> Result<Complex<T>> {
    let (eps, eps_dot) = epsilon_at(traj, t)?;
    Ok(number_states(m, x, eps, eps_dot)[m])
}

/// Wavefunction of a state at time `t`: the closed form for coherent states,
/// the Fock series `Σ c_m Ψ_m` otherwise.
pub fn psi_state<T: Real>(
    state: &StateSpec<T>,
    x: T,
    traj: &EpsilonTrajectory<T>,
    t: T,
) -> Result<Complex<T>> {
    let (eps, eps_dot) = epsilon_at(traj, t)?;
    Ok(psi_at(state, x, eps, eps_dot))
}

fn psi_at<T: Real>(state: &StateSpec<T>, x: T, eps: Complex<T>, eps_dot: Complex<T>) -> Complex<T> {
    match &state.kind {
        StateKind::Coherent { alpha } => {
            let a = *alpha;
            let expo = a * (T::SQRT_2() * x) / eps
                - a * a * eps.conj() / (eps * T::lit(2.0))
                - a.norm_sqr() * T::lit(0.5);
            ground(x, eps, eps_dot) * expo.exp()
        }
        _ => {
            let top = state.effective_top();
            let basis = number_states(top, x, eps, eps_dot);
            basis
                .iter()
                .zip(&state.coeffs)
                .fold(Complex::new(T::zero(), T::zero()), |acc, (b, c)| acc + b * c)
        }
    }
}

/// Quadrature means, variances and covariance at time `t`.
///
/// Coherent states use the closed forms `⟨q⟩ = (αε* + α*ε)/√2`,
/// `⟨p⟩ = (αε̇* + α*ε̇)/√2`, `σ_qq = |ε|²/2`, `σ_pp = |ε̇|²/2`,
/// `σ_pq = Re(ε̇ε*)/2`. Other kinds integrate the wavefunction on a trapezoid
/// grid, with `∂_x Ψ` from a 5-point stencil.
pub fn moments<T: Real>(
    state: &StateSpec<T>,
    traj: &EpsilonTrajectory<T>,
    t: T,
) -> Result<QuadratureMoments<T>> {
    let (eps, eps_dot) = epsilon_at(traj, t)?;
    if let StateKind::Coherent { alpha } = state.kind {
        let half = T::lit(0.5);
        let mean_q = T::lit(2.0) * (alpha * eps.conj()).re / T::SQRT_2();
        let mean_p = T::lit(2.0) * (alpha * eps_dot.conj()).re / T::SQRT_2();
        return Ok(QuadratureMoments::from_second(
            mean_q,
            mean_p,
            eps.norm_sqr() * half,
            eps_dot.norm_sqr() * half,
            (eps_dot * eps.conj()).re * half,
        ));
    }
    moments_by_quadrature(state, eps, eps_dot)
}

const STENCIL_STEP: f64 = 1e-4;
const MOMENT_NODES: usize = 4001;

fn moments_by_quadrature<T: Real>(
    state: &StateSpec<T>,
    eps: Complex<T>,
    eps_dot: Complex<T>,
) -> Result<QuadratureMoments<T>> {
    let nbar = state.mean_number();
    let half_width = eps.norm() * (T::lit(10.0) + T::lit(2.0) * (T::lit(2.0) * nbar + T::one()).sqrt());
    let rule = Rule1d::trapezoid(-half_width, half_width, MOMENT_NODES);
    let h = T::lit(STENCIL_STEP);
    let psi = |x: T| psi_at(state, x, eps, eps_dot);

    let (mut n0, mut q1, mut q2) = (CompensatedSum::new(), CompensatedSum::new(), CompensatedSum::new());
    let (mut p1, mut p2, mut qp) = (CompensatedSum::new(), CompensatedSum::new(), CompensatedSum::new());
    for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
        let v = psi(x);
        let d = (psi(x - h - h) - psi(x - h) * T::lit(8.0) + psi(x + h) * T::lit(8.0) - psi(x + h + h))
            / (T::lit(12.0) * h);
        if !(v.re.is_finite() && v.im.is_finite() && d.re.is_finite() && d.im.is_finite()) {
            return Err(Error::NonFinite {
                location: format!("moment quadrature at x = {x}"),
            });
        }
        let dens = v.norm_sqr();
        n0.add(w * dens);
        q1.add(w * x * dens);
        q2.add(w * x * x * dens);
        // ⟨p⟩ = ∫ Ψ* (−i ∂Ψ) = ∫ Im(Ψ* ∂Ψ) for normalized Ψ
        p1.add(w * (v.conj() * d).im);
        p2.add(w * d.norm_sqr());
        // Re⟨q p⟩ = ∫ x Im(Ψ* ∂Ψ)
        qp.add(w * x * (v.conj() * d).im);
    }
    let norm = n0.value();
    let mq = q1.value() / norm;
    let mp = p1.value() / norm;
    Ok(QuadratureMoments::from_second(
        mq,
        mp,
        q2.value() / norm - mq * mq,
        p2.value() / norm - mp * mp,
        qp.value() / norm - mq * mp,
    ))
}

/// Dense row-major real matrix, just enough for the truncated ladder algebra.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<T>,
}

impl<T: Real> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.cols + j] = v;
    }

    pub fn transpose(&self) -> Self {
        let mut out = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(j, i, self.get(i, j));
            }
        }
        out
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows);
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == T::zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let idx = i * out.cols + j;
                    out.data[idx] += a * other.get(k, j);
                }
            }
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| *a - *b).collect(),
        }
    }

    pub fn apply(&self, v: &[Complex<T>]) -> Vec<Complex<T>> {
        (0..self.rows)
            .map(|i| {
                (0..self.cols).fold(Complex::new(T::zero(), T::zero()), |acc, j| {
                    acc + v[j] * self.get(i, j)
                })
            })
            .collect()
    }
}

/// Truncated `A`, `B = A f(A†A)` and `F(A†A)` in the number-state basis.
#[derive(Debug, Clone, PartialEq)]
pub struct LadderMatrices<T> {
    pub a: Matrix<T>,
    pub b: Matrix<T>,
    pub f: Matrix<T>,
}

impl<T: Real> LadderMatrices<T> {
    /// `B B† − B† B` (f is real, so `B† = Bᵀ`).
    pub fn commutator(&self) -> Matrix<T> {
        let bt = self.b.transpose();
        self.b.matmul(&bt).sub(&bt.matmul(&self.b))
    }
}

/// `A_{m−1,m} = √m`, `B = A·diag f(n)`,
/// `F = diag((n+1) f²(n+1) − n f²(n))`, all `(N+1)×(N+1)`.
pub fn ladder_matrices<T: Real>(deformation: &Deformation<T>, n: usize) -> Result<LadderMatrices<T>> {
    if n < 2 {
        return Err(Error::invalid("truncation", "ladder matrices need N ≥ 2"));
    }
    deformation.validate()?;
    let dim = n + 1;
    let fv = (0..=n + 1)
        .map(|k| deformation.f_value(k))
        .collect::<Result<Vec<T>>>()?;
    let mut a = Matrix::zeros(dim, dim);
    let mut fdiag = Matrix::zeros(dim, dim);
    let mut big_f = Matrix::zeros(dim, dim);
    for m in 0..dim {
        let mf = T::from_usize_lossy(m);
        if m > 0 {
            a.set(m - 1, m, mf.sqrt());
        }
        fdiag.set(m, m, fv[m]);
        big_f.set(m, m, (mf + T::one()) * fv[m + 1] * fv[m + 1] - mf * fv[m] * fv[m]);
    }
    let b = a.matmul(&fdiag);
    Ok(LadderMatrices { a, b, f: big_f })
}

/// `‖B c − β c‖` over rows `0..N` (the truncation-edge row `N` is excluded).
pub fn verify_eigenstate<T: Real>(state: &StateSpec<T>) -> Result<T> {
    let (eigen, deformation) = match &state.kind {
        StateKind::Coherent { alpha } => (*alpha, Deformation::Identity),
        StateKind::FCoherent { beta, deformation } => (*beta, deformation.clone()),
        StateKind::Number { .. } => {
            return Err(Error::WrongStateKind {
                expected: "coherent or f_coherent",
            })
        }
    };
    let n = state.truncation.max(2);
    let mut c = state.coeffs.clone();
    c.resize(n + 1, Complex::new(T::zero(), T::zero()));
    let ladder = ladder_matrices(&deformation, n)?;
    let bc = ladder.b.apply(&c);
    let mut acc = CompensatedSum::new();
    for k in 0..n {
        acc.add((bc[k] - c[k] * eigen).norm_sqr());
    }
    Ok(acc.value().sqrt())
}
