//! Inverse maps from tomograms back to the state, and the tomographic
//! evolution equation.
//!
//! Every reconstruction goes through the characteristic function
//! `g(μ, ν) = ∫ w(X, μ, ν) e^{iX} dX = ⟨e^{i(μq̂ + νp̂)}⟩`, sampled once on a
//! `(μ, ν)` grid:
//!
//! * Wigner function: `W(q, p) = (1/2π) ∫ g e^{−i(μq + νp)} dμ dν`;
//! * Fock matrix: `ρ_{n+d,n} = (1/2π) ∫ g e^{−r²/4} (ν − iμ)^d
//!   √(n!/(n+d)!) 2^{−d/2} L_n^d(r²/2) dμ dν`, `r² = μ² + ν²`;
//! * photon numbers: the diagonal of the same formula for the state
//!   displaced by the scan amplitude.
//!
//! Everything here runs in `f64`.

use std::sync::atomic::{AtomicUsize, Ordering};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::dynamics::{epsilon_at, EpsilonTrajectory, TrapConfig};
use crate::phase_space::{
    laguerre_functions, Axis, FockTomogram, PhaseSpaceGrid, RotatedParams, Tomogram,
};
use crate::specfun::{ComplexSum, QuadAxis, QuadratureSpec, Rule1d, Scheme};
use crate::states::{moments, QuadratureMoments, StateKind, StateSpec};
use crate::{Error, Result};

/// Gaussian envelope of `w` in `X` along one direction: `w` decays like
/// `exp(−((X − center)/scale)²)` times a polynomial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Envelope {
    pub center: f64,
    pub scale: f64,
}

/// A tomogram `w(X, μ, ν)` at fixed time.
///
/// Sources that know their envelope get their `X` integral from a
/// Gauss–Hermite rule on it (node count from the quadrature's `X` axis, whose
/// cutoffs are then ignored); the others are integrated on the `X` axis as
/// given.
pub trait TomogramSource: Sync {
    fn value(&self, x: f64, mu: f64, nu: f64) -> Result<f64>;

    fn envelope(&self, _mu: f64, _nu: f64) -> Option<Envelope> {
        None
    }
}

impl<S: TomogramSource + ?Sized> TomogramSource for &S {
    fn value(&self, x: f64, mu: f64, nu: f64) -> Result<f64> {
        (**self).value(x, mu, nu)
    }

    fn envelope(&self, mu: f64, nu: f64) -> Option<Envelope> {
        (**self).envelope(mu, nu)
    }
}

impl<S: TomogramSource + ?Sized> TomogramSource for Box<S> {
    fn value(&self, x: f64, mu: f64, nu: f64) -> Result<f64> {
        (**self).value(x, mu, nu)
    }

    fn envelope(&self, mu: f64, nu: f64) -> Option<Envelope> {
        (**self).envelope(mu, nu)
    }
}

/// Closure-backed source without envelope information.
pub struct FnTomogram<F>(pub F);

impl<F: Fn(f64, f64, f64) -> f64 + Sync> TomogramSource for FnTomogram<F> {
    fn value(&self, x: f64, mu: f64, nu: f64) -> Result<f64> {
        Ok((self.0)(x, mu, nu))
    }
}

/// Forward tomogram of a state at time `t`: Gaussian closed form for
/// coherent states, Fock series otherwise.
pub struct StateTomogram<'a> {
    eps: Complex64,
    eps_dot: Complex64,
    inner: Inner<'a>,
}

enum Inner<'a> {
    Gaussian(QuadratureMoments<f64>),
    Fock(FockTomogram<'a, f64>),
}

impl<'a> StateTomogram<'a> {
    pub fn new(state: &StateSpec<f64>, traj: &'a EpsilonTrajectory<f64>, t: f64) -> Result<Self> {
        let (eps, eps_dot) = epsilon_at(traj, t)?;
        let inner = match state.kind {
            StateKind::Coherent { .. } => Inner::Gaussian(moments(state, traj, t)?),
            _ => Inner::Fock(FockTomogram::new(state, traj)?),
        };
        Ok(StateTomogram { eps, eps_dot, inner })
    }

    fn rotated(&self, mu: f64, nu: f64) -> RotatedParams<f64> {
        RotatedParams::from_epsilon(self.eps, self.eps_dot, mu, nu)
    }
}

impl TomogramSource for StateTomogram<'_> {
    fn value(&self, x: f64, mu: f64, nu: f64) -> Result<f64> {
        match &self.inner {
            Inner::Gaussian(m) => {
                let var = m.sigma_x(mu, nu);
                if !(var > 0.0) {
                    return Err(Error::DegenerateDirection);
                }
                let d = x - (mu * m.mean_q + nu * m.mean_p);
                Ok((-d * d / (2.0 * var)).exp() / (std::f64::consts::TAU * var).sqrt())
            }
            Inner::Fock(f) => f.eval_rotated(&self.rotated(mu, nu), x),
        }
    }

    fn envelope(&self, mu: f64, nu: f64) -> Option<Envelope> {
        match &self.inner {
            Inner::Gaussian(m) => Some(Envelope {
                center: mu * m.mean_q + nu * m.mean_p,
                scale: (2.0 * m.sigma_x(mu, nu)).sqrt(),
            }),
            Inner::Fock(_) => Some(Envelope {
                center: 0.0,
                scale: self.rotated(mu, nu).scale(),
            }),
        }
    }
}

/// Views a time-`t` tomogram in the frame of the invariant `A`:
/// `w_0(X, μ, ν) = w_t(X, M⁻¹(μ, ν))` with `(μ(t), ν(t)) = M(μ, ν)`.
///
/// Reconstructing through this adapter yields the density matrix in the
/// moving basis `Ψ_m(x, t)`, where a pure state keeps its coefficients.
pub struct InvariantFrame<S> {
    inner: S,
    inverse: [f64; 4],
}

impl<S: TomogramSource> InvariantFrame<S> {
    pub fn new(inner: S, traj: &EpsilonTrajectory<f64>, t: f64) -> Result<Self> {
        let (e, d) = epsilon_at(traj, t)?;
        // M = [[Re ε, Re ε̇], [Im ε, Im ε̇]] has determinant Im(ε̇ ε*) = 1
        let det = e.re * d.im - d.re * e.im;
        Ok(InvariantFrame {
            inner,
            inverse: [d.im / det, -d.re / det, -e.im / det, e.re / det],
        })
    }

    fn map(&self, mu: f64, nu: f64) -> (f64, f64) {
        let [a, b, c, d] = self.inverse;
        (a * mu + b * nu, c * mu + d * nu)
    }
}

impl<S: TomogramSource> TomogramSource for InvariantFrame<S> {
    fn value(&self, x: f64, mu: f64, nu: f64) -> Result<f64> {
        let (m, n) = self.map(mu, nu);
        self.inner.value(x, m, n)
    }

    fn envelope(&self, mu: f64, nu: f64) -> Option<Envelope> {
        let (m, n) = self.map(mu, nu);
        self.inner.envelope(m, n)
    }
}

/// Sampled tomogram with multilinear interpolation between nodes.
///
/// Queries outside the sampled box return 0 and bump a counter.
pub struct GridTomogram {
    tomogram: Tomogram<f64>,
    extrapolations: AtomicUsize,
}

impl GridTomogram {
    pub fn new(tomogram: Tomogram<f64>) -> Result<Self> {
        let n = tomogram.x.len() * tomogram.mu.len() * tomogram.nu.len();
        if n == 0 || tomogram.values.len() != n {
            return Err(Error::MalformedTomogram(format!(
                "{} values for a {}×{}×{} grid",
                tomogram.values.len(),
                tomogram.x.len(),
                tomogram.mu.len(),
                tomogram.nu.len()
            )));
        }
        for (name, axis) in [("X", &tomogram.x), ("mu", &tomogram.mu), ("nu", &tomogram.nu)] {
            if axis.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(Error::MalformedTomogram(format!("{name} nodes not strictly increasing")));
            }
        }
        if tomogram.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::MalformedTomogram("non-finite sample".into()));
        }
        if tomogram.values.iter().all(|v| *v == 0.0) {
            return Err(Error::DegenerateTomogram);
        }
        Ok(GridTomogram {
            tomogram,
            extrapolations: AtomicUsize::new(0),
        })
    }

    pub fn tomogram(&self) -> &Tomogram<f64> {
        &self.tomogram
    }

    /// Number of queries that fell outside the grid so far.
    pub fn extrapolations(&self) -> usize {
        self.extrapolations.load(Ordering::Relaxed)
    }

    /// Trapezoid rule on the grid's own axes, so the quadrature nodes are the
    /// samples themselves when the axes are uniform.
    pub fn quadrature_spec(&self) -> Result<QuadratureSpec<f64>> {
        let axis = |v: &[f64]| QuadAxis::new(v[0], v[v.len() - 1], v.len());
        QuadratureSpec::new(
            Scheme::Trapezoid,
            vec![axis(&self.tomogram.x), axis(&self.tomogram.mu), axis(&self.tomogram.nu)],
        )
    }
}

/// Bracketing cell and weight of `v` on sorted nodes, or `None` outside.
fn locate(nodes: &[f64], v: f64) -> Option<(usize, f64)> {
    let n = nodes.len();
    if n == 1 {
        return (v == nodes[0]).then_some((0, 0.0));
    }
    if !(v >= nodes[0] && v <= nodes[n - 1]) {
        return None;
    }
    let i = nodes.partition_point(|&x| x <= v).clamp(1, n - 1) - 1;
    Some((i, (v - nodes[i]) / (nodes[i + 1] - nodes[i])))
}

impl TomogramSource for GridTomogram {
    fn value(&self, x: f64, mu: f64, nu: f64) -> Result<f64> {
        let t = &self.tomogram;
        let (Some(lx), Some(lm), Some(ln)) = (locate(&t.x, x), locate(&t.mu, mu), locate(&t.nu, nu)) else {
            self.extrapolations.fetch_add(1, Ordering::Relaxed);
            return Ok(0.0);
        };
        let corners = |(i, f): (usize, f64), len: usize| -> [(usize, f64); 2] {
            if len == 1 || f == 0.0 {
                [(i, 1.0), (i, 0.0)]
            } else {
                [(i, 1.0 - f), (i + 1, f)]
            }
        };
        let mut acc = 0.0;
        for (ix, wx) in corners(lx, t.x.len()) {
            for (im, wm) in corners(lm, t.mu.len()) {
                for (inu, wn) in corners(ln, t.nu.len()) {
                    let w = wx * wm * wn;
                    if w != 0.0 {
                        acc += w * t.get(ix, im, inu);
                    }
                }
            }
        }
        Ok(acc)
    }
}

/// `g(μ, ν)` on the tensor grid of the quadrature's `μ` and `ν` axes, with
/// the `μ`/`ν` quadrature weights alongside.
#[derive(Debug, Clone)]
pub struct CharacteristicGrid {
    pub mu: Vec<f64>,
    pub nu: Vec<f64>,
    pub mu_weights: Vec<f64>,
    pub nu_weights: Vec<f64>,
    /// `g[i * nu.len() + j]`.
    pub values: Vec<Complex64>,
}

impl CharacteristicGrid {
    pub fn compute<S: TomogramSource>(source: &S, quad: &QuadratureSpec<f64>) -> Result<Self> {
        quad.validate()?;
        if quad.axes.len() != 3 {
            return Err(Error::invalid("quadrature", "need three axes (X, μ, ν)"));
        }
        let x_axis = quad.axes[0];
        let mu_rule = Rule1d::for_axis(quad.scheme, &quad.axes[1]);
        let nu_rule = Rule1d::for_axis(quad.scheme, &quad.axes[2]);
        let x_rule = Rule1d::for_axis(quad.scheme, &x_axis);
        // reference rule on the unit envelope, shifted and scaled per line
        let unit = Rule1d::gauss_hermite(0.0, 1.0, x_axis.n_points);
        let (nm, nn) = (mu_rule.len(), nu_rule.len());
        let results: Vec<Result<(Complex64, f64)>> = (0..nm * nn)
            .into_par_iter()
            .map(|k| {
                let (mu, nu) = (mu_rule.nodes[k / nn], nu_rule.nodes[k % nn]);
                if mu == 0.0 && nu == 0.0 {
                    // w(X, 0, 0) = δ(X) for every normalized tomogram
                    return Ok((Complex64::new(1.0, 0.0), 0.0));
                }
                let local;
                let rule = match source.envelope(mu, nu) {
                    Some(env) if env.scale > 0.0 => {
                        local = Rule1d {
                            nodes: unit.nodes.iter().map(|y| env.center + env.scale * y).collect(),
                            weights: unit.weights.iter().map(|w| env.scale * w).collect(),
                        };
                        &local
                    }
                    _ => &x_rule,
                };
                let mut acc = ComplexSum::new();
                let mut peak = 0.0f64;
                for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
                    let v = source.value(x, mu, nu)?;
                    if !v.is_finite() {
                        return Err(Error::NonFinite {
                            location: format!("tomogram at (X, μ, ν) = ({x}, {mu}, {nu})"),
                        });
                    }
                    peak = peak.max(v.abs());
                    acc.add(Complex64::from_polar(w * v, x));
                }
                Ok((acc.value(), peak))
            })
            .collect();
        let mut values = Vec::with_capacity(nm * nn);
        let mut peak = 0.0f64;
        for r in results {
            let (g, p) = r?;
            values.push(g);
            peak = peak.max(p);
        }
        if peak == 0.0 {
            return Err(Error::DegenerateTomogram);
        }
        Ok(CharacteristicGrid {
            mu: mu_rule.nodes,
            nu: nu_rule.nodes,
            mu_weights: mu_rule.weights,
            nu_weights: nu_rule.weights,
            values,
        })
    }

    fn nodes(&self) -> impl Iterator<Item = (f64, f64, f64, Complex64)> + '_ {
        let nn = self.nu.len();
        self.values.iter().enumerate().map(move |(k, g)| {
            let (i, j) = (k / nn, k % nn);
            (self.mu[i], self.nu[j], self.mu_weights[i] * self.nu_weights[j], *g)
        })
    }
}

/// Default quadrature for the Fock-basis reconstructions: 64 Gauss–Hermite
/// nodes in `X` (for enveloped sources; trapezoid on `[−16, 16]` otherwise)
/// and a trapezoid grid on `|μ|, |ν| ≤ 10` with step 0.2.
pub fn default_fock_quadrature() -> QuadratureSpec<f64> {
    QuadratureSpec {
        scheme: Scheme::Trapezoid,
        axes: vec![
            QuadAxis::symmetric(16.0, 64),
            QuadAxis::symmetric(10.0, 101),
            QuadAxis::symmetric(10.0, 101),
        ],
    }
}

/// Default quadrature for Wigner inversion at time `t`: the `(μ, ν)` cutoff
/// grows with `√((|ε|² + |ε̇|²)/2)` so that `g` has decayed below `1e−10`.
pub fn default_wigner_quadrature(traj: &EpsilonTrajectory<f64>, t: f64) -> Result<QuadratureSpec<f64>> {
    let (e, d) = epsilon_at(traj, t)?;
    let stretch = ((e.norm_sqr() + d.norm_sqr()) / 2.0).sqrt().max(1.0);
    let cutoff = 10.0 * stretch;
    let n = (2.0 * cutoff / 0.2).ceil() as usize + 1;
    Ok(QuadratureSpec {
        scheme: Scheme::Trapezoid,
        axes: vec![
            QuadAxis::symmetric(16.0 * stretch, 64),
            QuadAxis::symmetric(cutoff, n),
            QuadAxis::symmetric(cutoff, n),
        ],
    })
}

/// Reconstructed Fock-basis density matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    pub dim: usize,
    pub entries: Vec<Complex64>,
}

/// Trace deviations above this are flagged on the reconstruction report.
pub const TRACE_WARNING: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityReport {
    pub trace: f64,
    pub purity: f64,
    pub min_eigenvalue: f64,
    pub max_hermitian_error: f64,
    pub trace_warning: bool,
}

impl DensityMatrix {
    pub fn get(&self, m: usize, n: usize) -> Complex64 {
        self.entries[m * self.dim + n]
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|k| self.get(k, k).re).sum()
    }

    /// `tr ρ²`.
    pub fn purity(&self) -> f64 {
        self.entries.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn max_hermitian_error(&self) -> f64 {
        let mut e = 0.0f64;
        for m in 0..self.dim {
            for n in 0..self.dim {
                e = e.max((self.get(m, n) - self.get(n, m).conj()).norm());
            }
        }
        e
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let m = DMatrix::from_row_slice(self.dim, self.dim, &self.entries);
        let mut ev: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    pub fn report(&self) -> DensityReport {
        let trace = self.trace();
        DensityReport {
            trace,
            purity: self.purity(),
            min_eigenvalue: self.eigenvalues().first().copied().unwrap_or(0.0),
            max_hermitian_error: self.max_hermitian_error(),
            trace_warning: (trace - 1.0).abs() > TRACE_WARNING,
        }
    }
}

/// `(ν − iμ)/r` and `r²/2` at a `(μ, ν)` node.
fn polar(mu: f64, nu: f64) -> (Complex64, f64) {
    let r = mu.hypot(nu);
    let phase = if r > 0.0 {
        Complex64::new(nu / r, -mu / r)
    } else {
        Complex64::new(1.0, 0.0)
    };
    (phase, r * r / 2.0)
}

fn density_from_grid(grid: &CharacteristicGrid, n: usize) -> Result<DensityMatrix> {
    let dim = n + 1;
    let norm = 1.0 / std::f64::consts::TAU;
    // one task per diagonal d = m − n; each entry accumulates in node order
    let diagonals: Vec<Vec<Complex64>> = (0..dim)
        .into_par_iter()
        .map(|d| {
            let mut sums: Vec<ComplexSum<f64>> = (0..dim - d).map(|_| ComplexSum::new()).collect();
            for (mu, nu, w, g) in grid.nodes() {
                let (phase, x) = polar(mu, nu);
                let f = g * phase.powu(d as u32) * w;
                for (k, l) in laguerre_functions(dim - 1 - d, d, x).into_iter().enumerate() {
                    sums[k].add(f * l);
                }
            }
            sums.iter().map(|s| s.value() * norm).collect()
        })
        .collect();
    let mut entries = vec![Complex64::new(0.0, 0.0); dim * dim];
    for (d, diag) in diagonals.iter().enumerate() {
        for (k, v) in diag.iter().enumerate() {
            if !(v.re.is_finite() && v.im.is_finite()) {
                return Err(Error::NonFinite {
                    location: format!("density matrix entry ({}, {k})", k + d),
                });
            }
            entries[(k + d) * dim + k] = *v;
            entries[k * dim + k + d] = v.conj();
        }
    }
    // the diagonal is real by construction
    for k in 0..dim {
        entries[k * dim + k].im = 0.0;
    }
    Ok(DensityMatrix { dim, entries })
}

/// `⟨m|ρ|n⟩` for `m, n ≤ N` from a tomogram: computed for `m ≥ n`, filled
/// by conjugation below.
pub fn reconstruct_density_matrix<S: TomogramSource>(
    source: &S,
    n: usize,
    quad: &QuadratureSpec<f64>,
) -> Result<DensityMatrix> {
    let grid = CharacteristicGrid::compute(source, quad)?;
    density_from_grid(&grid, n)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhotonDistribution {
    pub scan_amplitude: Complex64,
    pub probs: Vec<f64>,
}

impl PhotonDistribution {
    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }
}

/// `w(n, α) = ⟨n| D(α)† ρ D(α) |n⟩` for `n ≤ n_max`, with `α` the scan
/// amplitude. Displacing the state multiplies `g` by `exp(α*ξ − αξ*)`,
/// `ξ = (ν − iμ)/√2`.
pub fn photon_number_distribution<S: TomogramSource>(
    source: &S,
    n_max: usize,
    scan_amplitude: Complex64,
    quad: &QuadratureSpec<f64>,
) -> Result<PhotonDistribution> {
    if !(scan_amplitude.re.is_finite() && scan_amplitude.im.is_finite()) {
        return Err(Error::invalid("scan", "scan amplitude must be finite"));
    }
    let grid = CharacteristicGrid::compute(source, quad)?;
    photon_from_grid(&grid, n_max, scan_amplitude)
}

fn photon_from_grid(grid: &CharacteristicGrid, n_max: usize, alpha: Complex64) -> Result<PhotonDistribution> {
    let mut sums: Vec<ComplexSum<f64>> = (0..=n_max).map(|_| ComplexSum::new()).collect();
    for (mu, nu, w, g) in grid.nodes() {
        let xi = Complex64::new(nu, -mu) / std::f64::consts::SQRT_2;
        let shift = (alpha.conj() * xi - alpha * xi.conj()).exp();
        let f = g * shift * w;
        let (_, x) = polar(mu, nu);
        for (k, l) in laguerre_functions(n_max, 0, x).into_iter().enumerate() {
            sums[k].add(f * l);
        }
    }
    let probs = sums
        .iter()
        .enumerate()
        .map(|(n, s)| {
            let v = s.value().re / std::f64::consts::TAU;
            if v.is_finite() {
                Ok(v.max(0.0))
            } else {
                Err(Error::NonFinite {
                    location: format!("photon probability n = {n}"),
                })
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PhotonDistribution {
        scan_amplitude: alpha,
        probs,
    })
}

/// Largest imaginary part of a reconstructed Wigner value that is silently
/// dropped.
pub const WIGNER_IMAG_LIMIT: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct WignerReconstruction {
    pub grid: PhaseSpaceGrid<f64>,
    pub imag_residue: f64,
}

/// `W(q, p) = (1/2π) ∫ g(μ, ν) e^{−i(μq + νp)} dμ dν` on a `q × p` grid.
pub fn invert_to_wigner<S: TomogramSource>(
    source: &S,
    q_axis: Axis<f64>,
    p_axis: Axis<f64>,
    quad: &QuadratureSpec<f64>,
) -> Result<WignerReconstruction> {
    let grid = CharacteristicGrid::compute(source, quad)?;
    wigner_from_grid(&grid, q_axis, p_axis)
}

fn wigner_from_grid(grid: &CharacteristicGrid, q_axis: Axis<f64>, p_axis: Axis<f64>) -> Result<WignerReconstruction> {
    let (qs, ps) = (q_axis.nodes(), p_axis.nodes());
    let nn = grid.nu.len();
    let rows: Vec<Vec<Complex64>> = qs
        .par_iter()
        .map(|&q| {
            // A_j(q) = Σ_i w_i g_ij e^{−iμ_i q}, then W = Σ_j w_j A_j e^{−iν_j p}
            let a: Vec<Complex64> = (0..nn)
                .map(|j| {
                    let mut s = ComplexSum::new();
                    for (i, (&mu, &wm)) in grid.mu.iter().zip(&grid.mu_weights).enumerate() {
                        s.add(grid.values[i * nn + j] * Complex64::from_polar(wm, -mu * q));
                    }
                    s.value()
                })
                .collect();
            ps.iter()
                .map(|&p| {
                    let mut s = ComplexSum::new();
                    for (j, (&nu, &wn)) in grid.nu.iter().zip(&grid.nu_weights).enumerate() {
                        s.add(a[j] * Complex64::from_polar(wn, -nu * p));
                    }
                    s.value() / std::f64::consts::TAU
                })
                .collect()
        })
        .collect();
    let mut values = Vec::with_capacity(qs.len() * ps.len());
    let mut imag_residue = 0.0f64;
    for v in rows.into_iter().flatten() {
        if !(v.re.is_finite() && v.im.is_finite()) {
            return Err(Error::NonFinite {
                location: "Wigner inversion".into(),
            });
        }
        imag_residue = imag_residue.max(v.im.abs());
        values.push(v.re);
    }
    if imag_residue > WIGNER_IMAG_LIMIT {
        return Err(Error::ImaginaryResidue {
            residue: imag_residue,
            limit: WIGNER_IMAG_LIMIT,
        });
    }
    Ok(WignerReconstruction {
        grid: PhaseSpaceGrid { q_axis, p_axis, values },
        imag_residue,
    })
}

/// Point `(X, μ, ν, t)` at which the evolution equation is checked.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolutionPoint {
    pub x: f64,
    pub mu: f64,
    pub nu: f64,
    pub t: f64,
}

/// Central-difference value of `∂_t w − μ ∂_ν w + ω²(t) ν ∂_μ w`, which
/// vanishes for every tomogram evolving in the trap.
///
/// `steps` are `(h_t, h_μ, h_ν)`.
pub fn evolution_residual<F>(
    w: F,
    trap: &TrapConfig<f64>,
    point: EvolutionPoint,
    steps: (f64, f64, f64),
) -> Result<f64>
where
    F: Fn(f64, f64, f64, f64) -> Result<f64>,
{
    let (ht, hm, hn) = steps;
    if !(ht > 0.0 && hm > 0.0 && hn > 0.0) {
        return Err(Error::invalid("h", "finite-difference steps must be > 0"));
    }
    let EvolutionPoint { x, mu, nu, t } = point;
    let dt = (w(x, mu, nu, t + ht)? - w(x, mu, nu, t - ht)?) / (2.0 * ht);
    let dmu = (w(x, mu + hm, nu, t)? - w(x, mu - hm, nu, t)?) / (2.0 * hm);
    let dnu = (w(x, mu, nu + hn, t)? - w(x, mu, nu - hn, t)?) / (2.0 * hn);
    Ok(dt - mu * dnu + trap.omega_sq(t) * nu * dmu)
}

/// Least-squares slope of `log residual` against `log h`.
pub fn convergence_slope(hs: &[f64], residuals: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = hs
        .iter()
        .zip(residuals)
        .map(|(h, r)| (h.ln(), r.abs().max(f64::MIN_POSITIVE).ln()))
        .collect();
    let n = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let (mx, my) = (sx / n, sy / n);
    let (num, den) = pts
        .iter()
        .fold((0.0, 0.0), |(a, b), (x, y)| (a + (x - mx) * (y - my), b + (x - mx) * (x - mx)));
    num / den
}
