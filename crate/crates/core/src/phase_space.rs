//! Forward maps from states to the Wigner function and symplectic tomograms.
//!
//! Time dependence enters only through the rotated phase-space variables:
//! `W_t(q, p) = W_0(q(t), p(t))` and `w_t(X, μ, ν) = w_0(X, μ(t), ν(t))`,
//! with linear maps built from `ε(t)`, `ε̇(t)`. The Wigner function uses the
//! measure `∫ W dq dp / 2π = 1` (vacuum peak `W(0, 0) = 2`).

use num_complex::Complex;
use rayon::prelude::*;

use crate::dynamics::{epsilon_at, EpsilonTrajectory};
use crate::specfun::{hermite_functions, CompensatedSum};
use crate::states::{moments, StateKind, StateSpec, MAX_TAIL};
use crate::{Error, Real, Result};

/// Series terms are dropped once the remaining diagonals are bounded by this.
const SERIES_CUTOFF: f64 = 1e-14;

/// Largest imaginary part tolerated in a tomogram series before it is
/// reported instead of discarded.
pub const IMAG_RESIDUE_LIMIT: f64 = 1e-10;

/// Rotated tomogram direction and phase-space map at time `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotatedParams<T> {
    pub mu_t: T,
    pub nu_t: T,
    /// `[a, b, c, d]` with `q(t) = a q + b p`, `p(t) = c q + d p`.
    pub q_map: [T; 4],
}

impl<T: Real> RotatedParams<T> {
    pub fn from_epsilon(eps: Complex<T>, eps_dot: Complex<T>, mu: T, nu: T) -> Self {
        RotatedParams {
            mu_t: eps.re * mu + eps_dot.re * nu,
            nu_t: eps.im * mu + eps_dot.im * nu,
            q_map: [eps_dot.im, -eps.im, -eps_dot.re, eps.re],
        }
    }

    pub fn map_qp(&self, q: T, p: T) -> (T, T) {
        let [a, b, c, d] = self.q_map;
        (a * q + b * p, c * q + d * p)
    }

    /// Equals `Im(ε̇ ε*)`, i.e. 1 while the Wronskian holds.
    pub fn determinant(&self) -> T {
        let [a, b, c, d] = self.q_map;
        a * d - b * c
    }

    /// `√(μ(t)² + ν(t)²)`.
    pub fn scale(&self) -> T {
        self.mu_t.hypot(self.nu_t)
    }
}

/// `μ(t) = Re ε μ + Re ε̇ ν`, `ν(t) = Im ε μ + Im ε̇ ν`, and the map
/// `q(t) = Im ε̇ q − Im ε p`, `p(t) = −Re ε̇ q + Re ε p`.
pub fn rotated_params<T: Real>(traj: &EpsilonTrajectory<T>, t: T, mu: T, nu: T) -> Result<RotatedParams<T>> {
    let (eps, eps_dot) = epsilon_at(traj, t)?;
    Ok(RotatedParams::from_epsilon(eps, eps_dot, mu, nu))
}

/// Gaussian tomogram of a coherent state,
/// `w = (2πσ_X)^{-1/2} exp(−(X − X̄)² / 2σ_X)` with `X̄ = μ⟨q⟩ + ν⟨p⟩` and
/// `σ_X = μ²σ_qq + ν²σ_pp + 2μν σ_pq`.
pub fn gaussian_tomogram<T: Real>(
    state: &StateSpec<T>,
    traj: &EpsilonTrajectory<T>,
    t: T,
    x: T,
    mu: T,
    nu: T,
) -> Result<T> {
    if !matches!(state.kind, StateKind::Coherent { .. }) {
        return Err(Error::WrongStateKind { expected: "coherent" });
    }
    if mu == T::zero() && nu == T::zero() {
        return Err(Error::DegenerateDirection);
    }
    let m = moments(state, traj, t)?;
    let mean = mu * m.mean_q + nu * m.mean_p;
    let var = m.sigma_x(mu, nu);
    if !(var > T::zero()) {
        return Err(Error::DegenerateDirection);
    }
    let d = x - mean;
    Ok((-(d * d) / (var + var)).exp() / (T::TAU() * var).sqrt())
}

/// Reading of the Fock-basis cross tomogram `w_nm`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CrossKernel {
    /// `w_nm = φ_n(y) φ_m(y) uⁿ ūᵐ / (√π s)` with `s = |(μ(t), ν(t))|`,
    /// `y = X/s`, `u = (μ(t) − iν(t))/s`; Hermitian in `(n, m)`.
    #[default]
    Standard,
    /// Phase factor `(ν + iμ)ⁿ(ν − iμ)ⁿ / s^{n+m}` with both powers equal to
    /// `n`, which reduces to `s^{n−m}`. Not Hermitian; kept for comparison.
    EqualPowers,
}

/// `⟨X|n⟩⟨m|X⟩` in the rotated frame: the tomogram of `|n⟩⟨m|`.
pub fn fock_cross_tomogram<T: Real>(
    n: usize,
    m: usize,
    traj: &EpsilonTrajectory<T>,
    t: T,
    x: T,
    mu: T,
    nu: T,
) -> Result<Complex<T>> {
    fock_cross_tomogram_with(CrossKernel::Standard, n, m, traj, t, x, mu, nu)
}

#[allow(clippy::too_many_arguments)]
pub fn fock_cross_tomogram_with<T: Real>(
    kernel: CrossKernel,
    n: usize,
    m: usize,
    traj: &EpsilonTrajectory<T>,
    t: T,
    x: T,
    mu: T,
    nu: T,
) -> Result<Complex<T>> {
    let r = rotated_params(traj, t, mu, nu)?;
    let frame = Frame::new(&r, x, n.max(m))?;
    Ok(frame.kernel(kernel, n, m))
}

/// Per-point data shared by all `(n, m)` kernel entries.
struct Frame<T> {
    s: T,
    u: Complex<T>,
    phi: Vec<T>,
    pref: T,
}

impl<T: Real> Frame<T> {
    fn new(r: &RotatedParams<T>, x: T, top: usize) -> Result<Self> {
        let s = r.scale();
        if !(s > T::zero()) {
            return Err(Error::DegenerateDirection);
        }
        Ok(Frame {
            s,
            u: Complex::new(r.mu_t / s, -r.nu_t / s),
            phi: hermite_functions(top, x / s),
            pref: T::one() / (T::PI().sqrt() * s),
        })
    }

    fn kernel(&self, kernel: CrossKernel, n: usize, m: usize) -> Complex<T> {
        let base = self.pref * self.phi[n] * self.phi[m];
        match kernel {
            CrossKernel::Standard => self.u.powu(n as u32) * self.u.conj().powu(m as u32) * base,
            CrossKernel::EqualPowers => Complex::new(base * self.s.powi(n as i32 - m as i32), T::zero()),
        }
    }
}

/// Remaining-diagonal bounds `R_d = Σ_{d' ≥ d} Σ_n |c_{n+d'}| |c_n|`.
fn diagonal_tails<T: Real>(c: &[Complex<T>]) -> Vec<T> {
    let abs: Vec<T> = c.iter().map(|z| z.norm()).collect();
    let n = abs.len();
    let mut tails = vec![T::zero(); n + 1];
    for d in (0..n).rev() {
        let mut acc = CompensatedSum::new();
        for k in 0..n - d {
            acc.add(abs[k + d] * abs[k]);
        }
        tails[d] = tails[d + 1] + acc.value();
    }
    tails
}

fn check_tail<T: Real>(state: &StateSpec<T>) -> Result<()> {
    if state.tail_bound > T::lit(MAX_TAIL) {
        return Err(Error::TruncationTail {
            truncation: state.truncation,
            tail: state.tail_bound.to_f64_lossy(),
            limit: MAX_TAIL,
        });
    }
    Ok(())
}

/// Tomogram `w(X, μ, ν, t) = Σ_{n,m} c_n c_m* w_nm` of any pure state.
#[derive(Debug, Clone)]
pub struct FockTomogram<'a, T> {
    traj: &'a EpsilonTrajectory<T>,
    coeffs: Vec<Complex<T>>,
    tails: Vec<T>,
    kernel: CrossKernel,
}

impl<'a, T: Real> FockTomogram<'a, T> {
    pub fn new(state: &StateSpec<T>, traj: &'a EpsilonTrajectory<T>) -> Result<Self> {
        Self::with_kernel(state, traj, CrossKernel::Standard)
    }

    pub fn with_kernel(state: &StateSpec<T>, traj: &'a EpsilonTrajectory<T>, kernel: CrossKernel) -> Result<Self> {
        check_tail(state)?;
        let coeffs = state.coeffs[..=state.effective_top()].to_vec();
        let tails = diagonal_tails(&coeffs);
        Ok(FockTomogram { traj, coeffs, tails, kernel })
    }

    pub fn trajectory(&self) -> &'a EpsilonTrajectory<T> {
        self.traj
    }

    /// Envelope width `s(t) = |(μ(t), ν(t))|` of the `X` dependence.
    pub fn scale(&self, t: T, mu: T, nu: T) -> Result<T> {
        Ok(rotated_params(self.traj, t, mu, nu)?.scale())
    }

    pub fn eval(&self, x: T, mu: T, nu: T, t: T) -> Result<T> {
        let r = rotated_params(self.traj, t, mu, nu)?;
        self.eval_rotated(&r, x)
    }

    pub(crate) fn eval_rotated(&self, r: &RotatedParams<T>, x: T) -> Result<T> {
        let top = self.coeffs.len() - 1;
        let frame = Frame::new(r, x, top)?;
        let c = &self.coeffs;
        let mut total = ComplexAcc::default();
        match self.kernel {
            CrossKernel::Standard => {
                // |u| = 1, so w_{k+d,k} = u^d φ_{k+d} φ_k pref.
                let bound = frame.pref * T::lit(2.0);
                let mut ud = Complex::new(T::one(), T::zero());
                for d in 0..=top {
                    if d > 0 {
                        if bound * self.tails[d] < T::lit(SERIES_CUTOFF) {
                            break;
                        }
                        ud *= frame.u;
                    }
                    let mut acc = ComplexAcc::default();
                    for k in 0..=top - d {
                        acc.add(c[k + d] * c[k].conj() * (frame.phi[k + d] * frame.phi[k]));
                    }
                    let diag = acc.value() * ud * frame.pref;
                    total.add(diag);
                    if d > 0 {
                        // the mirrored diagonal, evaluated rather than assumed
                        let mut acc = ComplexAcc::default();
                        for k in 0..=top - d {
                            acc.add(c[k] * c[k + d].conj() * (frame.phi[k + d] * frame.phi[k]));
                        }
                        total.add(acc.value() * ud.conj() * frame.pref);
                    }
                }
            }
            CrossKernel::EqualPowers => {
                for n in 0..=top {
                    for m in 0..=top {
                        total.add(c[n] * c[m].conj() * frame.kernel(CrossKernel::EqualPowers, n, m));
                    }
                }
            }
        }
        let w = total.value();
        if !(w.re.is_finite() && w.im.is_finite()) {
            return Err(Error::NonFinite {
                location: format!("tomogram series at X = {x}"),
            });
        }
        if w.im.abs() > T::lit(IMAG_RESIDUE_LIMIT) {
            return Err(Error::ImaginaryResidue {
                residue: w.im.abs().to_f64_lossy(),
                limit: IMAG_RESIDUE_LIMIT,
            });
        }
        Ok(w.re.max(T::zero()))
    }
}

#[derive(Default)]
struct ComplexAcc<T> {
    re: Option<CompensatedSum<T>>,
    im: Option<CompensatedSum<T>>,
}

impl<T: Real> ComplexAcc<T> {
    fn add(&mut self, z: Complex<T>) {
        self.re.get_or_insert_with(CompensatedSum::new).add(z.re);
        self.im.get_or_insert_with(CompensatedSum::new).add(z.im);
    }

    fn value(&self) -> Complex<T> {
        let get = |s: &Option<CompensatedSum<T>>| s.as_ref().map_or(T::zero(), |s| s.value());
        Complex::new(get(&self.re), get(&self.im))
    }
}

/// Tomogram of a state from its Fock series.
///
/// Diagonal pairs `(k + d, k)` are summed together with their mirror
/// `(k, k + d)`; the imaginary part of the total must stay below
/// [`IMAG_RESIDUE_LIMIT`] and is then dropped.
pub fn f_tomogram<T: Real>(
    state: &StateSpec<T>,
    traj: &EpsilonTrajectory<T>,
    t: T,
    x: T,
    mu: T,
    nu: T,
) -> Result<T> {
    FockTomogram::new(state, traj)?.eval(x, mu, nu, t)
}

/// Wigner function `W(q, p, t) = W_0(q(t), p(t))`.
#[derive(Debug, Clone)]
pub struct WignerFunction<'a, T> {
    traj: &'a EpsilonTrajectory<T>,
    coherent: Option<Complex<T>>,
    coeffs: Vec<Complex<T>>,
    tails: Vec<T>,
}

impl<'a, T: Real> WignerFunction<'a, T> {
    pub fn new(state: &StateSpec<T>, traj: &'a EpsilonTrajectory<T>) -> Result<Self> {
        check_tail(state)?;
        let coeffs = state.coeffs[..=state.effective_top()].to_vec();
        let coherent = match state.kind {
            StateKind::Coherent { alpha } => Some(alpha),
            _ => None,
        };
        let tails = diagonal_tails(&coeffs);
        Ok(WignerFunction { traj, coherent, coeffs, tails })
    }

    /// Evaluates from the Fock series even for coherent states.
    pub fn series_only(mut self) -> Self {
        self.coherent = None;
        self
    }

    pub fn eval(&self, q: T, p: T, t: T) -> Result<T> {
        let r = rotated_params(self.traj, t, T::one(), T::zero())?;
        let (qt, pt) = r.map_qp(q, p);
        Ok(match self.coherent {
            Some(a) => {
                let dq = qt - T::SQRT_2() * a.re;
                let dp = pt - T::SQRT_2() * a.im;
                T::lit(2.0) * (-(dq * dq + dp * dp)).exp()
            }
            None => self.series(qt, pt)?,
        })
    }

    /// `W_0(q, p) = 2 Σ_{m ≥ n} c_m c_n* (−1)ⁿ √(n!/m!) ξ^{m−n}
    /// e^{−|ξ|²/2} L_n^{m−n}(|ξ|²)`, `ξ = √2 (q − ip)`, off-diagonal terms
    /// doubled as real parts.
    fn series(&self, q: T, p: T) -> Result<T> {
        let x = T::lit(2.0) * (q * q + p * p);
        let phase = if x > T::zero() {
            Complex::new(q, -p) / q.hypot(p)
        } else {
            Complex::new(T::one(), T::zero())
        };
        let c = &self.coeffs;
        let top = c.len() - 1;
        let mut total = CompensatedSum::new();
        let mut pd = Complex::new(T::one(), T::zero());
        for d in 0..=top {
            if d > 0 {
                if T::lit(4.0) * self.tails[d] < T::lit(SERIES_CUTOFF) {
                    break;
                }
                pd *= phase;
            }
            let ell = laguerre_functions(top - d, d, x);
            let mut acc = ComplexAcc::default();
            for (k, l) in ell.into_iter().enumerate() {
                let sign = if k % 2 == 0 { T::one() } else { -T::one() };
                acc.add(c[k + d] * c[k].conj() * (sign * l));
            }
            let v = (acc.value() * pd).re;
            total.add(if d == 0 { v } else { v + v });
        }
        let w = total.value() * T::lit(2.0);
        if !w.is_finite() {
            return Err(Error::NonFinite {
                location: format!("Wigner series at (q, p) = ({q}, {p})"),
            });
        }
        Ok(w)
    }
}

/// `e^{−x/2} x^{d/2} √(k!/(k+d)!) L_k^d(x)` for `k = 0..=kmax`; each is
/// bounded by 1 in magnitude.
pub(crate) fn laguerre_functions<T: Real>(kmax: usize, d: usize, x: T) -> Vec<T> {
    let df = T::from_usize_lossy(d);
    let start = if x == T::zero() {
        if d == 0 {
            T::one()
        } else {
            T::zero()
        }
    } else {
        let mut log = -x * T::lit(0.5) + df * T::lit(0.5) * x.ln();
        for i in 2..=d {
            log -= T::from_usize_lossy(i).ln() * T::lit(0.5);
        }
        log.exp()
    };
    let mut out = Vec::with_capacity(kmax + 1);
    out.push(start);
    if kmax == 0 {
        return out;
    }
    let mut prev = start;
    let mut cur = start * (T::one() + df - x) / (df + T::one()).sqrt();
    out.push(cur);
    for k in 1..kmax {
        let kf = T::from_usize_lossy(k);
        let next = ((T::lit(2.0) * kf + T::one() + df - x) * cur - (kf * (kf + df)).sqrt() * prev)
            / ((kf + T::one()) * (kf + df + T::one())).sqrt();
        prev = cur;
        cur = next;
        out.push(cur);
    }
    out
}

/// `W(q, p, t)` of any accepted state.
pub fn wigner<T: Real>(state: &StateSpec<T>, traj: &EpsilonTrajectory<T>, t: T, q: T, p: T) -> Result<T> {
    WignerFunction::new(state, traj)?.eval(q, p, t)
}

/// Uniform axis of `points` nodes on `[min, max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis<T> {
    pub min: T,
    pub max: T,
    pub points: usize,
}

impl<T: Real> Axis<T> {
    pub fn new(min: T, max: T, points: usize) -> Result<Self> {
        if points == 0 {
            return Err(Error::invalid("steps", "axis needs at least one point"));
        }
        if !(min.is_finite() && max.is_finite()) || (points > 1 && max <= min) {
            return Err(Error::invalid("axis", format!("need finite min < max, got [{min}, {max}]")));
        }
        Ok(Axis { min, max, points })
    }

    pub fn single(v: T) -> Self {
        Axis { min: v, max: v, points: 1 }
    }

    pub fn nodes(&self) -> Vec<T> {
        crate::specfun::uniform_nodes(self.min, self.max, self.points)
    }

    pub fn spacing(&self) -> T {
        if self.points < 2 {
            T::zero()
        } else {
            (self.max - self.min) / T::from_usize_lossy(self.points - 1)
        }
    }

    /// Trapezoid weights over the axis (all 1 for a single point).
    pub fn trapezoid_weights(&self) -> Vec<T> {
        if self.points < 2 {
            return vec![T::one(); self.points];
        }
        let h = self.spacing();
        let mut w = vec![h; self.points];
        w[0] = h * T::lit(0.5);
        w[self.points - 1] = h * T::lit(0.5);
        w
    }
}

/// Wigner function sampled on a `q × p` grid, `values[i * p_points + j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSpaceGrid<T> {
    pub q_axis: Axis<T>,
    pub p_axis: Axis<T>,
    pub values: Vec<T>,
}

impl<T: Real> PhaseSpaceGrid<T> {
    pub fn get(&self, i: usize, j: usize) -> T {
        self.values[i * self.p_axis.points + j]
    }

    /// `∫∫ W dq dp / 2π` by the trapezoid rule.
    pub fn normalization(&self) -> T {
        let (wq, wp) = (self.q_axis.trapezoid_weights(), self.p_axis.trapezoid_weights());
        let mut acc = CompensatedSum::new();
        for (i, a) in wq.iter().enumerate() {
            for (j, b) in wp.iter().enumerate() {
                acc.add(*a * *b * self.get(i, j));
            }
        }
        acc.value() / T::TAU()
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }
}

/// Fills a Wigner grid in parallel.
pub fn wigner_grid<T: Real>(
    state: &StateSpec<T>,
    traj: &EpsilonTrajectory<T>,
    t: T,
    q_axis: Axis<T>,
    p_axis: Axis<T>,
) -> Result<PhaseSpaceGrid<T>> {
    let w = WignerFunction::new(state, traj)?;
    let (qs, ps) = (q_axis.nodes(), p_axis.nodes());
    let values = qs
        .par_iter()
        .map(|&q| ps.iter().map(|&p| w.eval(q, p, t)).collect::<Result<Vec<T>>>())
        .collect::<Result<Vec<_>>>()?
        .concat();
    Ok(PhaseSpaceGrid { q_axis, p_axis, values })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    GaussianClosedForm,
    FockSeries,
    External,
}

/// Tomogram samples on a tensor grid, `values[(i_μ · n_ν + i_ν) · n_X + i_X]`.
///
/// Values are clamped at zero; `x`, `mu` and `nu` are strictly increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct Tomogram<T> {
    pub time: T,
    pub x: Vec<T>,
    pub mu: Vec<T>,
    pub nu: Vec<T>,
    pub values: Vec<T>,
    pub provenance: Provenance,
}

impl<T: Real> Tomogram<T> {
    pub fn index(&self, ix: usize, imu: usize, inu: usize) -> usize {
        (imu * self.nu.len() + inu) * self.x.len() + ix
    }

    pub fn get(&self, ix: usize, imu: usize, inu: usize) -> T {
        self.values[self.index(ix, imu, inu)]
    }

    /// `Σ w ΔX` (trapezoid) along every stored `(μ, ν)` line, in storage order.
    pub fn line_normalizations(&self) -> Vec<T> {
        let nx = self.x.len();
        let weights: Vec<T> = (0..nx)
            .map(|i| {
                let left = if i > 0 { self.x[i] - self.x[i - 1] } else { T::zero() };
                let right = if i + 1 < nx { self.x[i + 1] - self.x[i] } else { T::zero() };
                (left + right) * T::lit(0.5)
            })
            .collect();
        self.values
            .chunks(nx)
            .map(|line| {
                let mut acc = CompensatedSum::new();
                for (w, v) in weights.iter().zip(line) {
                    acc.add(*w * *v);
                }
                acc.value()
            })
            .collect()
    }
}

/// Samples the tomogram of `state` on `X × μ × ν`: closed form for coherent
/// states, Fock series otherwise.
pub fn tomogram_grid<T: Real>(
    state: &StateSpec<T>,
    traj: &EpsilonTrajectory<T>,
    t: T,
    x: &[T],
    mu: &[T],
    nu: &[T],
) -> Result<Tomogram<T>> {
    tomogram_grid_with(state, traj, t, (x, mu, nu), CrossKernel::Standard)
}

/// [`tomogram_grid`] with an explicit cross kernel. Any kernel other than
/// the standard one forces the Fock series, also for coherent states.
pub fn tomogram_grid_with<T: Real>(
    state: &StateSpec<T>,
    traj: &EpsilonTrajectory<T>,
    t: T,
    (x, mu, nu): (&[T], &[T], &[T]),
    kernel: CrossKernel,
) -> Result<Tomogram<T>> {
    let coherent = matches!(state.kind, StateKind::Coherent { .. }) && kernel == CrossKernel::Standard;
    let fock = FockTomogram::with_kernel(state, traj, kernel)?;
    let lines: Vec<(T, T)> = mu.iter().flat_map(|&m| nu.iter().map(move |&n| (m, n))).collect();
    let values = lines
        .par_iter()
        .map(|&(m, n)| {
            x.iter()
                .map(|&xv| {
                    if coherent {
                        gaussian_tomogram(state, traj, t, xv, m, n)
                    } else {
                        fock.eval(xv, m, n, t)
                    }
                })
                .collect::<Result<Vec<T>>>()
        })
        .collect::<Result<Vec<_>>>()?
        .concat();
    Ok(Tomogram {
        time: t,
        x: x.to_vec(),
        mu: mu.to_vec(),
        nu: nu.to_vec(),
        values,
        provenance: if coherent {
            Provenance::GaussianClosedForm
        } else {
            Provenance::FockSeries
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{solve_epsilon, TrapConfig};
    use crate::specfun::{integrate_1d, QuadratureSpec, Scheme};
    use crate::states::{psi_state, Deformation};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    fn traj(kappa: f64, t_max: f64) -> EpsilonTrajectory<f64> {
        solve_epsilon(TrapConfig::new(kappa, 2.0).unwrap(), t_max, 2).unwrap()
    }

    fn integrate(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> f64 {
        integrate_1d(f, &QuadratureSpec::one_d(Scheme::Simpson, lo, hi, n).unwrap())
            .unwrap()
            .value
    }

    #[test]
    fn rotation_at_t0_is_identity() {
        let tr = traj(0.5, 1.0);
        let r = rotated_params(&tr, 0.0, 0.3, -1.7).unwrap();
        assert_eq!((r.mu_t, r.nu_t), (0.3, -1.7));
        assert_eq!(r.map_qp(0.4, 0.9), (0.4, 0.9));
    }

    #[test]
    fn harmonic_rotation_matches_substitution() {
        let tr = traj(0.0, 10.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let (t, mu, nu) = (rng.gen_range(0.0..10.0), rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            let r = rotated_params(&tr, t, mu, nu).unwrap();
            // ε = e^{it}, ε̇ = i e^{it}
            let (ct, st): (f64, f64) = (t.cos(), t.sin());
            assert!((r.mu_t - (mu * ct - nu * st)).abs() < 1e-8);
            assert!((r.nu_t - (mu * st + nu * ct)).abs() < 1e-8);
        }
    }

    #[test]
    fn phase_space_map_is_symplectic() {
        let tr = traj(0.7, 3.0);
        let r = rotated_params(&tr, 3.0, 1.0, 0.0).unwrap();
        assert!((r.determinant() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn vacuum_gaussian_peak() {
        let tr = traj(0.5, 1.0);
        let vac = StateSpec::coherent(c(0.0, 0.0), 4).unwrap();
        let w = gaussian_tomogram(&vac, &tr, 0.0, 0.0, 1.0, 0.0).unwrap();
        assert_relative_eq!(w, 1.0 / PI.sqrt(), max_relative = 1e-15);
        assert_relative_eq!(w, 0.564190, epsilon = 1e-6);
        assert!(matches!(
            gaussian_tomogram(&vac, &tr, 0.0, 0.0, 0.0, 0.0),
            Err(Error::DegenerateDirection)
        ));
        let n1 = StateSpec::number(1, 2).unwrap();
        assert!(gaussian_tomogram(&n1, &tr, 0.0, 0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn gaussian_matches_rotated_vacuum_form() {
        // w_t(X, μ, ν) = w_0(X, μ(t), ν(t)) with w_0 the t = 0 Gaussian
        let tr = traj(0.5, 3.0);
        let alpha = c(0.7, -0.4);
        let s = StateSpec::coherent(alpha, 40).unwrap();
        for &(t, x, mu, nu) in &[(1.1, 0.3, 0.6, 0.8), (2.7, -1.0, -0.2, 1.4)] {
            let r = rotated_params(&tr, t, mu, nu).unwrap();
            let mean = 2f64.sqrt() * (r.mu_t * alpha.re + r.nu_t * alpha.im);
            let var = (r.mu_t * r.mu_t + r.nu_t * r.nu_t) / 2.0;
            let expected = (-(x - mean).powi(2) / (2.0 * var)).exp() / (2.0 * PI * var).sqrt();
            let got = gaussian_tomogram(&s, &tr, t, x, mu, nu).unwrap();
            assert_relative_eq!(got, expected, max_relative = 1e-9);
        }
    }

    #[test]
    fn homogeneity() {
        let tr = traj(0.5, 2.0);
        let lam = 2.5;
        let coh = StateSpec::coherent(c(0.4, 0.3), 40).unwrap();
        let fc = StateSpec::f_coherent(c(0.6, 0.1), Deformation::VogelLambDicke { eta: 0.3 }, 40).unwrap();
        let (t, x, mu, nu) = (1.3, 0.4, 0.7, -0.5);
        let a = gaussian_tomogram(&coh, &tr, t, lam * x, lam * mu, lam * nu).unwrap();
        let b = gaussian_tomogram(&coh, &tr, t, x, mu, nu).unwrap();
        assert_relative_eq!(a, b / lam, max_relative = 1e-12);
        let a = f_tomogram(&fc, &tr, t, lam * x, lam * mu, lam * nu).unwrap();
        let b = f_tomogram(&fc, &tr, t, x, mu, nu).unwrap();
        assert_relative_eq!(a, b / lam, max_relative = 1e-10);
        let a = fock_cross_tomogram(3, 1, &tr, t, lam * x, lam * mu, lam * nu).unwrap();
        let b = fock_cross_tomogram(3, 1, &tr, t, x, mu, nu).unwrap();
        assert!((a - b / lam).norm() < 1e-12);
    }

    #[test]
    fn gaussian_normalized_in_x() {
        let tr = traj(0.5, 2.0);
        let s = StateSpec::coherent(c(0.5, -0.2), 40).unwrap();
        let total = integrate(|x| gaussian_tomogram(&s, &tr, 2.0, x, 0.6, 0.8).unwrap(), -12.0, 12.0, 801);
        assert!((total - 1.0).abs() < 1e-8);
    }

    #[test]
    fn cross_tomogram_basics() {
        let tr = traj(0.5, 3.0);
        let phi: f64 = 0.4;
        let v = fock_cross_tomogram(0, 0, &tr, 0.0, 0.8, phi.cos(), phi.sin()).unwrap();
        assert!((v - c((-0.64f64).exp() / PI.sqrt(), 0.0)).norm() < 1e-15);
        assert!(matches!(
            fock_cross_tomogram(0, 0, &tr, 0.0, 0.8, 0.0, 0.0),
            Err(Error::DegenerateDirection)
        ));

        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let (n, m) = (rng.gen_range(0..8), rng.gen_range(0..8));
            let (t, x) = (rng.gen_range(0.0..3.0), rng.gen_range(-3.0..3.0));
            let (mu, nu) = (rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5));
            let a = fock_cross_tomogram(n, m, &tr, t, x, mu, nu).unwrap();
            let b = fock_cross_tomogram(m, n, &tr, t, x, mu, nu).unwrap();
            assert!((a.conj() - b).norm() < 1e-14);
        }
    }

    #[test]
    fn cross_tomogram_orthonormal_in_x() {
        let tr = traj(0.5, 1.0);
        let phi: f64 = 0.7;
        for n in 0..=5 {
            for m in n..=5 {
                let re = integrate(|x| fock_cross_tomogram(n, m, &tr, 0.0, x, phi.cos(), phi.sin()).unwrap().re, -12.0, 12.0, 1201);
                let im = integrate(|x| fock_cross_tomogram(n, m, &tr, 0.0, x, phi.cos(), phi.sin()).unwrap().im, -12.0, 12.0, 1201);
                let expected = if n == m { 1.0 } else { 0.0 };
                assert!((re - expected).abs() < 1e-10 && im.abs() < 1e-10, "n={n} m={m}");
            }
        }
    }

    #[test]
    fn identity_deformation_gives_gaussian() {
        let tr = traj(0.5, 5.0);
        let alpha = c(0.8, 0.2);
        let coh = StateSpec::coherent(alpha, 40).unwrap();
        let fc = StateSpec::f_coherent(alpha, Deformation::Identity, 40).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..30 {
            let t = rng.gen_range(0.0..5.0);
            let (x, mu, nu) = (rng.gen_range(-3.0..3.0), rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5));
            let a = f_tomogram(&fc, &tr, t, x, mu, nu).unwrap();
            let b = gaussian_tomogram(&coh, &tr, t, x, mu, nu).unwrap();
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
    }

    #[test]
    fn zero_amplitude_is_w00() {
        let tr = traj(0.5, 2.0);
        let s = StateSpec::f_coherent(c(0.0, 0.0), Deformation::VogelLambDicke { eta: 0.3 }, 40).unwrap();
        let a = f_tomogram(&s, &tr, 1.2, 0.3, 0.5, 0.9).unwrap();
        let b = fock_cross_tomogram(0, 0, &tr, 1.2, 0.3, 0.5, 0.9).unwrap();
        assert!((a - b.re).abs() < 1e-15);
    }

    #[test]
    fn position_marginal_is_wavefunction_density() {
        let tr = traj(0.5, 2.0);
        let s = StateSpec::f_coherent(c(0.8, 0.0), Deformation::VogelLambDicke { eta: 0.4 }, 40).unwrap();
        for &x in &[-2.0, -0.5, 0.0, 0.7, 1.9] {
            let w = f_tomogram(&s, &tr, 0.0, x, 1.0, 0.0).unwrap();
            let d = psi_state(&s, x, &tr, 0.0).unwrap().norm_sqr();
            assert!((w - d).abs() < 1e-8);
        }
        // and at a later time, where the number-state phases matter
        for &x in &[-1.0, 0.4] {
            let w = f_tomogram(&s, &tr, 1.7, x, 1.0, 0.0).unwrap();
            let d = psi_state(&s, x, &tr, 1.7).unwrap().norm_sqr();
            assert!((w - d).abs() < 1e-8);
        }
    }

    #[test]
    fn equal_powers_kernel_breaks_hermiticity() {
        let tr = traj(0.5, 2.0);
        let s = StateSpec::f_coherent(c(0.5, 0.5), Deformation::VogelLambDicke { eta: 0.3 }, 40).unwrap();
        let lit = FockTomogram::with_kernel(&s, &tr, CrossKernel::EqualPowers).unwrap();
        assert!(matches!(lit.eval(0.3, 0.6, 0.8, 1.0), Err(Error::ImaginaryResidue { .. })));
        let a = fock_cross_tomogram_with(CrossKernel::EqualPowers, 2, 1, &tr, 0.5, 0.3, 0.6, 0.8).unwrap();
        let b = fock_cross_tomogram_with(CrossKernel::EqualPowers, 1, 2, &tr, 0.5, 0.3, 0.6, 0.8).unwrap();
        assert!((a.conj() - b).norm() > 1e-3);
    }

    /// `∫ Ψ(q + u/2) Ψ*(q − u/2) e^{−ipu} du`, the Wigner function with
    /// `∫ W dq dp / 2π = 1`.
    fn wigner_transform(s: &StateSpec<f64>, tr: &EpsilonTrajectory<f64>, t: f64, q: f64, p: f64) -> f64 {
        let f = |u: f64| {
            let v = psi_state(s, q + u / 2.0, tr, t).unwrap()
                * psi_state(s, q - u / 2.0, tr, t).unwrap().conj()
                * Complex::new(0.0, -p * u).exp();
            v.re
        };
        integrate(f, -24.0, 24.0, 2401)
    }

    #[test]
    fn vacuum_wigner_peak() {
        let tr = traj(0.5, 2.0);
        let vac = StateSpec::f_coherent(c(0.0, 0.0), Deformation::VogelLambDicke { eta: 0.3 }, 10).unwrap();
        assert_relative_eq!(wigner(&vac, &tr, 0.0, 0.0, 0.0).unwrap(), 2.0, max_relative = 1e-15);
    }

    #[test]
    fn wigner_matches_transform_oracle() {
        let tr = traj(0.5, 2.0);
        let coh = StateSpec::coherent(c(0.6, 0.3), 40).unwrap();
        let fc = StateSpec::f_coherent(c(0.7, 0.2), Deformation::VogelLambDicke { eta: 0.3 }, 40).unwrap();
        for &(t, q, p) in &[(0.0, 0.5, 0.2), (1.2, -0.3, 0.8), (1.2, 1.1, -0.6)] {
            for s in [&coh, &fc] {
                let w = wigner(s, &tr, t, q, p).unwrap();
                let o = wigner_transform(s, &tr, t, q, p);
                assert!((w - o).abs() < 1e-6, "{:?} t={t}: {w} vs {o}", s.kind.name());
            }
        }
    }

    #[test]
    fn coherent_wigner_series_matches_closed_form() {
        let tr = traj(0.5, 2.0);
        let coh = StateSpec::coherent(c(0.9, -0.5), 40).unwrap();
        let closed = WignerFunction::new(&coh, &tr).unwrap();
        let series = WignerFunction::new(&coh, &tr).unwrap().series_only();
        for &(t, q, p) in &[(0.0, 0.0, 0.0), (0.8, 1.3, -0.7), (2.0, -2.0, 1.0)] {
            let a = closed.eval(q, p, t).unwrap();
            let b = series.eval(q, p, t).unwrap();
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn wigner_marginal_is_position_tomogram() {
        let tr = traj(0.5, 2.0);
        let s = StateSpec::f_coherent(c(0.6, 0.4), Deformation::VogelLambDicke { eta: 0.3 }, 40).unwrap();
        let wf = WignerFunction::new(&s, &tr).unwrap();
        let t = 1.0;
        for &q in &[-0.8, 0.3] {
            let m = integrate(|p| wf.eval(q, p, t).unwrap(), -20.0, 20.0, 2001) / (2.0 * PI);
            let w = f_tomogram(&s, &tr, t, q, 1.0, 0.0).unwrap();
            assert!((m - w).abs() < 1e-6);
            let m = integrate(|x| wf.eval(x, q, t).unwrap(), -20.0, 20.0, 2001) / (2.0 * PI);
            let w = f_tomogram(&s, &tr, t, q, 0.0, 1.0).unwrap();
            assert!((m - w).abs() < 1e-6);
        }
    }

    #[test]
    fn laguerre_functions_match_direct_evaluation() {
        use crate::specfun::laguerre;
        for d in 0..5usize {
            for &x in &[0.0f64, 0.3, 2.5, 9.0] {
                let ell = laguerre_functions(6, d, x);
                for (k, v) in ell.iter().enumerate() {
                    let ratio: f64 = (k + 1..=k + d).map(|i| i as f64).product::<f64>().recip().sqrt();
                    let direct = (-x / 2.0).exp() * x.powf(d as f64 / 2.0) * ratio * laguerre(k, d as i64, x).unwrap();
                    assert!((v - direct).abs() < 1e-13 * (1.0 + direct.abs()));
                    assert!((*v).abs() <= 1.0 + 1e-12);
                }
            }
        }
    }

    #[test]
    fn grids_are_normalized() {
        let tr = traj(0.5, 2.0);
        let s = StateSpec::coherent(c(0.5, 0.2), 40).unwrap();
        let ax = Axis::new(-8.0, 8.0, 161).unwrap();
        let g = wigner_grid(&s, &tr, 1.0, ax, ax).unwrap();
        assert!((g.normalization() - 1.0).abs() < 1e-4);

        let fc = StateSpec::f_coherent(c(0.5, 0.0), Deformation::VogelLambDicke { eta: 0.3 }, 40).unwrap();
        let x = Axis::new(-10.0, 10.0, 401).unwrap().nodes();
        let tomo = tomogram_grid(&fc, &tr, 1.5, &x, &[0.6, 1.0], &[-0.3, 0.8]).unwrap();
        assert_eq!(tomo.values.len(), 401 * 4);
        for n in tomo.line_normalizations() {
            assert!((n - 1.0).abs() < 1e-6);
        }
        assert!(tomo.values.iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn generic_over_f32() {
        let tr = solve_epsilon(TrapConfig::<f32>::new(0.5, 2.0).unwrap(), 1.0, 2).unwrap();
        let s = StateSpec::<f32>::coherent(Complex::new(0.3, 0.1), 20).unwrap();
        let a = gaussian_tomogram(&s, &tr, 0.5, 0.2, 1.0, 0.3).unwrap();
        let b = f_tomogram(&s, &tr, 0.5, 0.2, 1.0, 0.3).unwrap();
        assert!((a - b).abs() < 1e-5);
        let w = wigner(&s, &tr, 0.0, 0.0, 0.0).unwrap();
        assert!((w - 2.0 * (-0.2f32).exp()).abs() < 1e-5);
    }
}
