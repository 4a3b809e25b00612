//! Classical trajectory `ε(t)` of the Paul-trap parametric oscillator.
//!
//! `ε̈ + ω²(t) ε = 0` with `ω²(t) = 1 + κ² sin²(Ωt)`, `ε(0) = 1`, `ε̇(0) = i`.
//! Every quantum object downstream (invariant `A`, number states, rotated
//! tomogram parameters) is built from `ε` and `ε̇`.

use num_complex::Complex;

use crate::{Error, Real, Result};

/// Drive parameters of the trap frequency `ω²(t) = 1 + κ² sin²(Ωt)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrapConfig<T> {
    pub kappa: T,
    pub omega_drive: T,
}

impl<T: Real> TrapConfig<T> {
    pub fn new(kappa: T, omega_drive: T) -> Result<Self> {
        if !kappa.is_finite() || kappa < T::zero() {
            return Err(Error::invalid("kappa", format!("must be finite and ≥ 0, got {kappa}")));
        }
        if !omega_drive.is_finite() || omega_drive <= T::zero() {
            return Err(Error::invalid(
                "omega",
                format!("must be finite and > 0, got {omega_drive}"),
            ));
        }
        Ok(TrapConfig { kappa, omega_drive })
    }

    /// Static harmonic trap, `ω ≡ 1`.
    pub fn harmonic() -> Self {
        TrapConfig {
            kappa: T::zero(),
            omega_drive: T::one(),
        }
    }

    pub fn omega_sq(&self, t: T) -> T {
        let s = (self.omega_drive * t).sin();
        T::one() + self.kappa * self.kappa * s * s
    }

    /// `d(ω²)/dt = κ² Ω sin(2Ωt)`.
    pub fn omega_sq_dot(&self, t: T) -> T {
        self.kappa * self.kappa * self.omega_drive * (T::lit(2.0) * self.omega_drive * t).sin()
    }

    /// Default integrator step `min(2π/Ω, 2π) / 200`.
    pub fn default_step(&self) -> T {
        let tau = T::TAU();
        (tau / self.omega_drive).min(tau) / T::lit(200.0)
    }
}

impl Default for TrapConfig<f64> {
    fn default() -> Self {
        TrapConfig {
            kappa: 0.5,
            omega_drive: 2.0,
        }
    }
}

/// Above this `max |ε|` the trajectory is flagged as parametrically growing.
pub const GROWTH_WARNING_THRESHOLD: f64 = 1e3;

/// `ε` and `ε̇` sampled on a uniform grid by fixed-step RK4.
#[derive(Debug, Clone, PartialEq)]
pub struct EpsilonTrajectory<T> {
    pub config: TrapConfig<T>,
    pub t_grid: Vec<T>,
    pub eps: Vec<Complex<T>>,
    pub eps_dot: Vec<Complex<T>>,
    /// Integrator step; equals the grid spacing.
    pub step: T,
    pub max_abs_eps: T,
    pub min_abs_eps: T,
    /// Set when `max |ε|` exceeds [`GROWTH_WARNING_THRESHOLD`] (parametric
    /// resonance); quadrature windows downstream must widen accordingly.
    pub growth_warning: bool,
}

impl<T: Real> EpsilonTrajectory<T> {
    pub fn t_max(&self) -> T {
        *self.t_grid.last().unwrap()
    }

    /// `max(|ε|, |ε̇|)` over the grid.
    pub fn max_scale(&self) -> T {
        self.eps
            .iter()
            .chain(&self.eps_dot)
            .fold(T::zero(), |m, z| m.max(z.norm()))
    }
}

type State<T> = (Complex<T>, Complex<T>);

fn rk4_step<T: Real>(cfg: &TrapConfig<T>, t: T, (y, v): State<T>, h: T) -> State<T> {
    let half = h * T::lit(0.5);
    let acc = |t: T, y: Complex<T>| y * (-cfg.omega_sq(t));
    let (k1y, k1v) = (v, acc(t, y));
    let (k2y, k2v) = (v + k1v * half, acc(t + half, y + k1y * half));
    let (k3y, k3v) = (v + k2v * half, acc(t + half, y + k2y * half));
    let (k4y, k4v) = (v + k3v * h, acc(t + h, y + k3y * h));
    let sixth = h / T::lit(6.0);
    let two = T::lit(2.0);
    (
        y + (k1y + k2y * two + k3y * two + k4y) * sixth,
        v + (k1v + k2v * two + k3v * two + k4v) * sixth,
    )
}

/// Integrates `ε` on `[0, t_max]`.
///
/// The grid has `max(n_steps, ⌈t_max / h_default⌉)` uniform intervals, so
/// `n_steps` is a lower bound on the resolution and `t_max` is hit exactly.
pub fn solve_epsilon<T: Real>(
    config: TrapConfig<T>,
    t_max: T,
    n_steps: usize,
) -> Result<EpsilonTrajectory<T>> {
    TrapConfig::new(config.kappa, config.omega_drive)?;
    if !t_max.is_finite() || t_max <= T::zero() {
        return Err(Error::invalid("tmax", format!("must be finite and > 0, got {t_max}")));
    }
    if n_steps < 2 {
        return Err(Error::invalid("steps", format!("must be ≥ 2, got {n_steps}")));
    }
    let by_step = (t_max / config.default_step()).ceil().to_usize().unwrap_or(usize::MAX);
    let n = n_steps.max(by_step);
    let h = t_max / T::from_usize_lossy(n);

    let mut t_grid = Vec::with_capacity(n + 1);
    let mut eps = Vec::with_capacity(n + 1);
    let mut eps_dot = Vec::with_capacity(n + 1);
    let mut state = (Complex::new(T::one(), T::zero()), Complex::new(T::zero(), T::one()));
    t_grid.push(T::zero());
    eps.push(state.0);
    eps_dot.push(state.1);
    for i in 0..n {
        let t = h * T::from_usize_lossy(i);
        state = rk4_step(&config, t, state, h);
        t_grid.push(if i + 1 == n {
            t_max
        } else {
            h * T::from_usize_lossy(i + 1)
        });
        eps.push(state.0);
        eps_dot.push(state.1);
    }

    let (mut max_abs, mut min_abs) = (T::zero(), T::infinity());
    for z in &eps {
        let r = z.norm();
        if !r.is_finite() {
            return Err(Error::NonFinite {
                location: "ε(t) integration".into(),
            });
        }
        max_abs = max_abs.max(r);
        min_abs = min_abs.min(r);
    }
    if min_abs <= T::zero() {
        return Err(Error::NonFinite {
            location: "ε(t) vanished on the grid".into(),
        });
    }
    Ok(EpsilonTrajectory {
        config,
        t_grid,
        eps,
        eps_dot,
        step: h,
        max_abs_eps: max_abs,
        min_abs_eps: min_abs,
        growth_warning: max_abs > T::lit(GROWTH_WARNING_THRESHOLD),
    })
}

/// `(ε(t), ε̇(t))`: exact at grid points, quintic Hermite in between.
///
/// The interpolant for `ε` uses `(ε, ε̇, ε̈ = -ω²ε)` at both cell ends, the
/// one for `ε̇` uses `(ε̇, ε̈, ε⃛)`, with the higher derivatives taken from the
/// ODE itself.
pub fn epsilon_at<T: Real>(traj: &EpsilonTrajectory<T>, t: T) -> Result<(Complex<T>, Complex<T>)> {
    let t_max = traj.t_max();
    if !(t >= T::zero() && t <= t_max) {
        return Err(Error::TimeOutOfRange {
            t: t.to_f64_lossy(),
            t_max: t_max.to_f64_lossy(),
        });
    }
    let n = traj.t_grid.len() - 1;
    let i = (t / traj.step).floor().to_usize().unwrap_or(0).min(n - 1);
    if t == traj.t_grid[i] {
        return Ok((traj.eps[i], traj.eps_dot[i]));
    }
    if t == traj.t_grid[i + 1] {
        return Ok((traj.eps[i + 1], traj.eps_dot[i + 1]));
    }
    let (t0, t1) = (traj.t_grid[i], traj.t_grid[i + 1]);
    let h = t1 - t0;
    let s = (t - t0) / h;
    let cfg = &traj.config;
    let ends = |k: usize, tk: T| {
        let (e, d) = (traj.eps[k], traj.eps_dot[k]);
        let w2 = cfg.omega_sq(tk);
        let dd = e * (-w2);
        let ddd = e * (-cfg.omega_sq_dot(tk)) - d * w2;
        (e, d, dd, ddd)
    };
    let (e0, d0, dd0, ddd0) = ends(i, t0);
    let (e1, d1, dd1, ddd1) = ends(i + 1, t1);
    let b = quintic_basis(s);
    let h2 = h * h;
    let eps = e0 * b[0] + d0 * (b[1] * h) + dd0 * (b[2] * h2) + dd1 * (b[3] * h2)
        + d1 * (b[4] * h)
        + e1 * b[5];
    let eps_dot = d0 * b[0] + dd0 * (b[1] * h) + ddd0 * (b[2] * h2) + ddd1 * (b[3] * h2)
        + dd1 * (b[4] * h)
        + d1 * b[5];
    Ok((eps, eps_dot))
}

/// Quintic Hermite basis on `[0, 1]`: value, slope, curvature at 0, then
/// curvature, slope, value at 1.
fn quintic_basis<T: Real>(s: T) -> [T; 6] {
    let s2 = s * s;
    let s3 = s2 * s;
    let s4 = s3 * s;
    let s5 = s4 * s;
    let l = T::lit;
    [
        T::one() - l(10.0) * s3 + l(15.0) * s4 - l(6.0) * s5,
        s - l(6.0) * s3 + l(8.0) * s4 - l(3.0) * s5,
        l(0.5) * s2 - l(1.5) * s3 + l(1.5) * s4 - l(0.5) * s5,
        l(0.5) * s3 - s4 + l(0.5) * s5,
        -l(4.0) * s3 + l(7.0) * s4 - l(3.0) * s5,
        l(10.0) * s3 - l(15.0) * s4 + l(6.0) * s5,
    ]
}

/// `ε ε̇* − ε* ε̇`; equals `−2i` for an exact solution.
pub fn wronskian<T: Real>(traj: &EpsilonTrajectory<T>, t: T) -> Result<Complex<T>> {
    let (e, d) = epsilon_at(traj, t)?;
    Ok(e * d.conj() - e.conj() * d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn traj(kappa: f64, omega: f64, t_max: f64) -> EpsilonTrajectory<f64> {
        solve_epsilon(TrapConfig::new(kappa, omega).unwrap(), t_max, 2).unwrap()
    }

    #[test]
    fn initial_conditions_are_exact() {
        let tr = traj(0.7, 1.3, 5.0);
        assert_eq!(tr.eps[0], Complex::new(1.0, 0.0));
        assert_eq!(tr.eps_dot[0], Complex::new(0.0, 1.0));
        assert_eq!(epsilon_at(&tr, 0.0).unwrap(), (Complex::new(1.0, 0.0), Complex::new(0.0, 1.0)));
        assert_eq!(wronskian(&tr, 0.0).unwrap(), Complex::new(0.0, -2.0));
    }

    #[test]
    fn harmonic_limit() {
        // the default step leaves ~3e-8 of RK4 error at t = π; refine
        let tr = solve_epsilon(TrapConfig::harmonic(), 20.0, 4000).unwrap();
        let (e, d) = epsilon_at(&tr, PI).unwrap();
        assert!((e - Complex::new(-1.0, 0.0)).norm() < 1e-9);
        assert!((d - Complex::new(0.0, -1.0)).norm() < 1e-9);
        let (e, d) = epsilon_at(&tr, PI / 2.0).unwrap();
        assert!((e - Complex::new(0.0, 1.0)).norm() < 1e-9);
        assert!((d - Complex::new(-1.0, 0.0)).norm() < 1e-9);
        for k in 0..=400 {
            let t = 20.0 * k as f64 / 400.0;
            let (e, _) = epsilon_at(&tr, t).unwrap();
            assert!((e - Complex::new(t.cos(), t.sin())).norm() <= 1e-9, "t={t}");
            let w = wronskian(&tr, t).unwrap();
            assert!((w + Complex::new(0.0, 2.0)).norm() < 1e-10);
        }
    }

    #[test]
    fn step_halving_oracle() {
        // Halve the step until two successive solutions agree to 1e-10.
        let cfg = TrapConfig::new(0.5, 2.0).unwrap();
        let t = 1.0;
        let mut n = 64usize;
        let mut prev = solve_epsilon(cfg, t, n).unwrap();
        let reference = loop {
            n *= 2;
            let next = solve_epsilon(cfg, t, n).unwrap();
            let diff = (next.eps.last().unwrap() - prev.eps.last().unwrap()).norm()
                + (next.eps_dot.last().unwrap() - prev.eps_dot.last().unwrap()).norm();
            if diff < 1e-10 {
                break next;
            }
            prev = next;
        };
        let tr = solve_epsilon(cfg, t, 2).unwrap();
        let (e, d) = epsilon_at(&tr, t).unwrap();
        assert!((e - reference.eps.last().unwrap()).norm() < 1e-8);
        assert!((d - reference.eps_dot.last().unwrap()).norm() < 1e-8);
    }

    #[test]
    fn interpolation_matches_reintegration() {
        let cfg = TrapConfig::new(0.5, 2.0).unwrap();
        let tr = solve_epsilon(cfg, 5.0, 2).unwrap();
        for &t in &[0.3141, 1.0 + tr.step * 0.37, 2.7, 4.44] {
            let (e, d) = epsilon_at(&tr, t).unwrap();
            let fresh = solve_epsilon(cfg, t, 2).unwrap();
            assert!((e - fresh.eps.last().unwrap()).norm() < 1e-9, "t={t}");
            assert!((d - fresh.eps_dot.last().unwrap()).norm() < 1e-9, "t={t}");
        }
    }

    #[test]
    fn wronskian_conserved_in_strong_drive() {
        let tr = traj(0.9, 2.0, 20.0);
        for k in 0..=2000 {
            let t = 20.0 * k as f64 / 2000.0;
            let w = wronskian(&tr, t).unwrap();
            assert!((w + Complex::new(0.0, 2.0)).norm() <= 1e-8, "t={t} w={w}");
        }
        assert!(tr.min_abs_eps > 0.0);
        assert!(!tr.growth_warning);
    }

    #[test]
    fn grid_is_uniform_and_deterministic() {
        let a = traj(0.5, 2.0, 10.0);
        let b = traj(0.5, 2.0, 10.0);
        assert_eq!(a, b);
        assert_eq!(*a.t_grid.last().unwrap(), 10.0);
        assert!(a.t_grid.windows(2).all(|w| w[1] > w[0]));
        assert!(a.step <= a.config.default_step());
    }

    #[test]
    fn rejects_bad_input() {
        assert!(TrapConfig::new(-1.0, 2.0).is_err());
        assert!(TrapConfig::new(0.5, 0.0).is_err());
        assert!(TrapConfig::new(f64::NAN, 1.0).is_err());
        let cfg = TrapConfig::new(0.5, 2.0).unwrap();
        assert!(solve_epsilon(cfg, 0.0, 10).is_err());
        assert!(solve_epsilon(cfg, 1.0, 1).is_err());
        let tr = solve_epsilon(cfg, 1.0, 10).unwrap();
        assert!(matches!(epsilon_at(&tr, 1.5), Err(Error::TimeOutOfRange { .. })));
        assert!(epsilon_at(&tr, -0.1).is_err());
    }

    #[test]
    fn resonance_growth_is_flagged() {
        // ω² = 1 + κ²/2 - (κ²/2) cos 2Ωt: principal tongue at Ω ≈ ω̄ = √(1 + κ²/2)
        let tr = traj(1.5, 1.46, 80.0);
        assert!(tr.max_abs_eps > 10.0);
        let w = wronskian(&tr, 80.0).unwrap();
        assert!(w.re.abs() < 1e-6 * tr.max_abs_eps.powi(2));
    }

    #[test]
    fn generic_over_f32() {
        let tr = solve_epsilon(TrapConfig::<f32>::harmonic(), 3.0f32, 2).unwrap();
        let (e, _) = epsilon_at(&tr, 2.0f32).unwrap();
        assert!((e.re - 2.0f32.cos()).abs() < 1e-4);
        assert!((e.im - 2.0f32.sin()).abs() < 1e-4);
    }
}
