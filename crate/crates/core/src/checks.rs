//! The invariant battery behind `iontomo check`.
//!
//! Each criterion builds its own states and trajectories, compares against an
//! oracle, and reports pass/fail with the worst deviation seen.

use std::cell::RefCell;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dynamics::{solve_epsilon, wronskian, TrapConfig};
use crate::phase_space::{
    f_tomogram, fock_cross_tomogram, gaussian_tomogram, rotated_params, wigner, Axis, FockTomogram,
};
use crate::specfun::{integrate_1d, QuadratureSpec, Scheme};
use crate::states::{ladder_matrices, moments, psi_state, verify_eigenstate, Deformation, StateSpec};
use crate::tomography::{
    convergence_slope, default_fock_quadrature, default_wigner_quadrature, evolution_residual,
    invert_to_wigner, photon_number_distribution, reconstruct_density_matrix, EvolutionPoint,
    StateTomogram,
};
use crate::Result;

#[derive(Debug, Clone, Serialize)]
pub struct CheckOutcome {
    pub id: usize,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
    pub budget_seconds: f64,
}

impl CheckOutcome {
    pub fn line(&self) -> String {
        format!(
            "[{}] {:>2} {:<32} {} ({:.2} s of {:.0} s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail,
            self.seconds,
            self.budget_seconds
        )
    }
}

type Criterion = fn() -> Result<(bool, String)>;

pub const CRITERIA: [(&str, f64, Criterion); 10] = [
    ("wronskian conservation", 1.0, wronskian_conservation),
    ("uncertainty minimization", 1.0, uncertainty_minimization),
    ("linear-limit reduction", 5.0, linear_limit),
    ("tomogram normalization", 10.0, tomogram_normalization),
    ("evolution equation", 30.0, evolution_equation),
    ("deformed algebra", 1.0, deformed_algebra),
    ("density-matrix round trip", 60.0, density_round_trip),
    ("wigner inversion round trip", 120.0, wigner_round_trip),
    ("photon-number consistency", 60.0, photon_numbers),
    ("position-density oracle", 10.0, position_density),
];

/// Runs criterion `id` (1-based).
pub fn run(id: usize) -> CheckOutcome {
    let (name, budget, f) = CRITERIA[id - 1];
    let start = Instant::now();
    let (passed, detail) = match f() {
        Ok(r) => r,
        Err(e) => (false, format!("error: {e}")),
    };
    let seconds = start.elapsed().as_secs_f64();
    CheckOutcome {
        id,
        name,
        passed: passed && seconds <= budget,
        detail,
        seconds,
        budget_seconds: budget,
    }
}

pub fn run_all() -> Vec<CheckOutcome> {
    (1..=CRITERIA.len()).map(run).collect()
}

fn verdict(worst: f64, tol: f64) -> (bool, String) {
    (worst <= tol, format!("max deviation {worst:.3e} (tol {tol:.0e})"))
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn trap() -> TrapConfig<f64> {
    TrapConfig::new(0.5, 2.0).expect("valid trap")
}

pub fn wronskian_conservation() -> Result<(bool, String)> {
    let tr = solve_epsilon(TrapConfig::new(0.9, 2.0)?, 20.0, 2)?;
    let mut worst = 0.0f64;
    for k in 0..=4000 {
        let w = wronskian(&tr, 20.0 * k as f64 / 4000.0)?;
        worst = worst.max((w + c(0.0, 2.0)).norm());
    }
    Ok(verdict(worst, 1e-8))
}

pub fn uncertainty_minimization() -> Result<(bool, String)> {
    let tr = solve_epsilon(trap(), 10.0, 2)?;
    let s = StateSpec::coherent(c(0.7, 0.4), 40)?;
    let mut worst = 0.0f64;
    for k in 0..200 {
        let m = moments(&s, &tr, 10.0 * k as f64 / 199.0)?;
        worst = worst.max((m.uncertainty_product() - 0.25).abs());
    }
    Ok(verdict(worst, 1e-9))
}

pub fn linear_limit() -> Result<(bool, String)> {
    let tr = solve_epsilon(trap(), 5.0, 2)?;
    let alpha = c(0.8, 0.2);
    let coh = StateSpec::coherent(alpha, 40)?;
    let fc = StateSpec::f_coherent(alpha, Deformation::Identity, 40)?;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for _ in 0..30 {
        let t = rng.gen_range(0.0..5.0);
        let x = rng.gen_range(-3.0..3.0);
        let (mu, nu) = (rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5));
        let a = f_tomogram(&fc, &tr, t, x, mu, nu)?;
        let b = gaussian_tomogram(&coh, &tr, t, x, mu, nu)?;
        worst = worst.max((a - b).abs());
    }
    Ok(verdict(worst, 1e-8))
}

fn x_integral(f: impl Fn(f64) -> Result<f64>, half_width: f64) -> Result<f64> {
    let spec = QuadratureSpec::one_d(Scheme::Simpson, -half_width, half_width, 4001)?;
    let err = RefCell::new(None);
    let v = integrate_1d(
        |x| {
            f(x).unwrap_or_else(|e| {
                err.borrow_mut().get_or_insert(e);
                0.0
            })
        },
        &spec,
    )?;
    match err.into_inner() {
        Some(e) => Err(e),
        None => Ok(v.value),
    }
}

pub fn tomogram_normalization() -> Result<(bool, String)> {
    let tr = solve_epsilon(trap(), 5.0, 2)?;
    let coh = StateSpec::coherent(c(0.6, -0.3), 40)?;
    let fc = StateSpec::f_coherent(c(0.7, 0.2), Deformation::VogelLambDicke { eta: 0.3 }, 40)?;
    let fock = FockTomogram::new(&fc, &tr)?;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0f64;
    for k in 0..10 {
        let t = rng.gen_range(0.0..5.0);
        let phi = rng.gen_range(0.0..std::f64::consts::TAU);
        let len = rng.gen_range(0.5..1.5);
        let (mu, nu) = (len * phi.cos(), len * phi.sin());
        let s = rotated_params(&tr, t, mu, nu)?.scale();
        let half = 12.0 * s + 6.0;
        let n = k % 6;
        let forms = [
            x_integral(|x| gaussian_tomogram(&coh, &tr, t, x, mu, nu), half)?,
            x_integral(|x| Ok(fock_cross_tomogram(n, n, &tr, t, x, mu, nu)?.re), half)?,
            x_integral(|x| fock.eval(x, mu, nu, t), half)?,
        ];
        for v in forms {
            worst = worst.max((v - 1.0).abs());
        }
    }
    Ok(verdict(worst, 1e-6))
}

pub const EVOLUTION_STEPS: [f64; 3] = [4e-3, 2e-3, 1e-3];

pub fn evolution_equation() -> Result<(bool, String)> {
    let trap = trap();
    let tr = solve_epsilon(trap, 4.0, 2)?;
    let coh = StateSpec::coherent(c(0.5, 0.4), 40)?;
    let fc = StateSpec::f_coherent(c(0.6, 0.2), Deformation::VogelLambDicke { eta: 0.3 }, 40)?;
    let fock = FockTomogram::new(&fc, &tr)?;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for _ in 0..3 {
        let p = EvolutionPoint {
            x: rng.gen_range(-1.0..1.0),
            mu: rng.gen_range(0.3..1.2),
            nu: rng.gen_range(-1.2..-0.3),
            t: rng.gen_range(0.5..3.5),
        };
        for coherent in [true, false] {
            let res = EVOLUTION_STEPS
                .iter()
                .map(|&h| {
                    evolution_residual(
                        |x, m, n, t| {
                            if coherent {
                                gaussian_tomogram(&coh, &tr, t, x, m, n)
                            } else {
                                fock.eval(x, m, n, t)
                            }
                        },
                        &trap,
                        p,
                        (h, h, h),
                    )
                })
                .collect::<Result<Vec<_>>>()?;
            let slope = convergence_slope(&EVOLUTION_STEPS, &res);
            worst = worst.max((slope - 2.0).abs());
        }
    }
    Ok((worst <= 0.2, format!("max |slope − 2| {worst:.3} (tol 0.2)")))
}

pub fn deformed_algebra() -> Result<(bool, String)> {
    let n = 40;
    let d = Deformation::VogelLambDicke { eta: 0.3 };
    let lm = ladder_matrices::<f64>(&d, n)?;
    let comm = lm.commutator();
    let mut worst = 0.0f64;
    for i in 0..n - 1 {
        for j in 0..n - 1 {
            worst = worst.max((comm.get(i, j) - lm.f.get(i, j)).abs());
        }
    }
    let s = StateSpec::f_coherent(c(0.7, 0.0), d, n)?;
    let residual = verify_eigenstate(&s)?;
    Ok((
        worst <= 1e-10 && residual <= 1e-8,
        format!("commutator {worst:.3e} (tol 1e-10), eigen residual {residual:.3e} (tol 1e-8)"),
    ))
}

pub fn density_round_trip() -> Result<(bool, String)> {
    let tr = solve_epsilon(trap(), 2.0, 2)?;
    let s = StateSpec::f_coherent(c(0.6, 0.0), Deformation::VogelLambDicke { eta: 0.3 }, 40)?;
    let quad = default_fock_quadrature();
    let rho = reconstruct_density_matrix(&StateTomogram::new(&s, &tr, 0.0)?, 8, &quad)?;
    let mut worst = 0.0f64;
    for m in 0..9 {
        for n in 0..9 {
            worst = worst.max((rho.get(m, n) - s.coeffs[m] * s.coeffs[n].conj()).norm());
        }
    }
    let later = reconstruct_density_matrix(&StateTomogram::new(&s, &tr, 1.2)?, 8, &quad)?.report();
    let ok = worst <= 1e-3
        && later.max_hermitian_error == 0.0
        && (later.trace - 1.0).abs() <= 1e-3
        && later.min_eigenvalue >= -1e-3
        && later.purity >= 0.995;
    Ok((
        ok,
        format!(
            "t=0 max|Δρ| {worst:.3e}; t=1.2 trace {:.6} purity {:.6} min eig {:.2e}",
            later.trace, later.purity, later.min_eigenvalue
        ),
    ))
}

pub fn wigner_round_trip() -> Result<(bool, String)> {
    let tr = solve_epsilon(trap(), 2.0, 2)?;
    let t = 1.2;
    let s = StateSpec::coherent(c(0.7, 0.3), 40)?;
    let ax = Axis::new(-5.0, 5.0, 41)?;
    let rec = invert_to_wigner(&StateTomogram::new(&s, &tr, t)?, ax, ax, &default_wigner_quadrature(&tr, t)?)?;
    let (mut worst, mut peak) = (0.0f64, 0.0f64);
    for (i, q) in ax.nodes().into_iter().enumerate() {
        for (j, p) in ax.nodes().into_iter().enumerate() {
            let direct = wigner(&s, &tr, t, q, p)?;
            worst = worst.max((rec.grid.get(i, j) - direct).abs());
            peak = peak.max(direct.abs());
        }
    }
    let vac = StateSpec::coherent(c(0.0, 0.0), 4)?;
    let origin = Axis::single(0.0);
    let v = invert_to_wigner(
        &StateTomogram::new(&vac, &tr, 0.0)?,
        origin,
        origin,
        &default_wigner_quadrature(&tr, 0.0)?,
    )?
    .grid
    .values[0];
    let rel = worst / peak;
    Ok((
        rel <= 5e-3 && (v - 2.0).abs() <= 2e-2,
        format!("relative error {rel:.3e} (tol 5e-3), vacuum peak {v:.6}"),
    ))
}

pub fn photon_numbers() -> Result<(bool, String)> {
    let tr = solve_epsilon(trap(), 1.0, 2)?;
    let s = StateSpec::coherent(c(0.8, 0.0), 40)?;
    let d = photon_number_distribution(&StateTomogram::new(&s, &tr, 0.0)?, 25, c(0.0, 0.0), &default_fock_quadrature())?;
    let mut worst = 0.0f64;
    let mut poisson = (-0.64f64).exp();
    for (n, p) in d.probs.iter().enumerate().take(11) {
        worst = worst.max((p - poisson).abs());
        poisson *= 0.64 / (n as f64 + 1.0);
    }
    let total = d.total();
    Ok((
        worst <= 1e-3 && (total - 1.0).abs() <= 1e-3,
        format!("max |w(n) − Poisson| {worst:.3e}, Σw {total:.6}"),
    ))
}

pub fn position_density() -> Result<(bool, String)> {
    let tr = solve_epsilon(trap(), 3.0, 2)?;
    let s = StateSpec::f_coherent(c(0.8, 0.0), Deformation::VogelLambDicke { eta: 0.4 }, 40)?;
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let (x, t) = (rng.gen_range(-3.0..3.0), rng.gen_range(0.0..3.0));
        let w = f_tomogram(&s, &tr, t, x, 1.0, 0.0)?;
        let d = psi_state(&s, x, &tr, t)?.norm_sqr();
        worst = worst.max((w - d).abs());
    }
    Ok(verdict(worst, 1e-6))
}
