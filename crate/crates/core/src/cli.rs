//! Command-line front end: flag parsing, config-file merging and dispatch.
//!
//! Exit codes: 0 on success, 1 on bad input (including usage errors), 2 when
//! the numerics fail or a check does not pass.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::dynamics::{epsilon_at, solve_epsilon, wronskian, EpsilonTrajectory, TrapConfig};
use crate::io::{emit, json_string, read_tomogram_csv, tomogram_table, write_output, Cell, Format, Table};
use crate::phase_space::{gaussian_tomogram, tomogram_grid_with, wigner_grid, Axis, CrossKernel, FockTomogram};
use crate::specfun::{QuadAxis, QuadratureSpec};
use crate::states::{make_state, Deformation, StateKind, StateSpec, DEFAULT_TRUNCATION};
use crate::tomography::{
    convergence_slope, default_fock_quadrature, default_wigner_quadrature, evolution_residual,
    invert_to_wigner, photon_number_distribution, reconstruct_density_matrix, EvolutionPoint,
    GridTomogram, InvariantFrame, StateTomogram, TomogramSource,
};
use crate::{checks, Error, ErrorKind, Result};

#[derive(Debug, Parser)]
#[command(name = "iontomo", version, about = "Tomograms of motional states of a trapped ion")]
#[command(args_override_self = true)]
pub struct Cli {
    /// Worker threads for grid fills (0: one per core).
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,

    /// `key = value` file; its entries act as flags placed before the
    /// explicit ones, so explicit flags win.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tabulate ε(t), ε̇(t) and the Wronskian error.
    #[command(allow_negative_numbers = true)]
    Epsilon(EpsilonArgs),
    /// Fock coefficients of a state in the invariant basis.
    #[command(allow_negative_numbers = true)]
    State(StateArgs),
    /// Sample the symplectic tomogram w(X, μ, ν).
    #[command(allow_negative_numbers = true)]
    Tomogram(TomogramArgs),
    /// Sample the Wigner function W(q, p).
    #[command(allow_negative_numbers = true)]
    Wigner(WignerArgs),
    /// Fock density matrix from a tomogram.
    #[command(name = "reconstruct-dm", allow_negative_numbers = true)]
    ReconstructDm(ReconstructDmArgs),
    /// Wigner function from a tomogram.
    #[command(name = "reconstruct-wigner", allow_negative_numbers = true)]
    ReconstructWigner(ReconstructWignerArgs),
    /// Photon-number distribution at a scan amplitude.
    #[command(name = "photon-stats", allow_negative_numbers = true)]
    PhotonStats(PhotonStatsArgs),
    /// Convergence of the evolution-equation residual at random points.
    #[command(name = "check-evolution", allow_negative_numbers = true)]
    CheckEvolution(CheckEvolutionArgs),
    /// Run the full invariant battery.
    Check(CheckArgs),
}

#[derive(Debug, Clone, Args)]
pub struct TrapArgs {
    #[arg(long, default_value_t = 0.5)]
    pub kappa: f64,
    /// Drive frequency Ω.
    #[arg(long, default_value_t = 2.0)]
    pub omega: f64,
    /// Minimum number of integrator steps.
    #[arg(long, default_value_t = 2)]
    pub steps: usize,
}

impl TrapArgs {
    fn config(&self) -> Result<TrapConfig<f64>> {
        TrapConfig::new(self.kappa, self.omega)
    }

    fn solve(&self, t_max: f64) -> Result<EpsilonTrajectory<f64>> {
        let traj = solve_epsilon(self.config()?, t_max, self.steps)?;
        if traj.growth_warning {
            eprintln!(
                "warning: max |ε| = {:.3e} on [0, {t_max}]; the trap is parametrically unstable here",
                traj.max_abs_eps
            );
        }
        Ok(traj)
    }

    /// Trajectory covering `[0, t]` with a margin for interpolation.
    fn solve_through(&self, t: f64) -> Result<EpsilonTrajectory<f64>> {
        check_time(t)?;
        self.solve(t + 1.0)
    }
}

fn check_time(t: f64) -> Result<()> {
    if t.is_finite() && t >= 0.0 {
        Ok(())
    } else {
        Err(Error::invalid("t", format!("must be finite and ≥ 0, got {t}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Coherent,
    Number,
    FCoherent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FVariant {
    Identity,
    /// Lamb–Dicke ratio with shifted indices.
    Shifted,
    /// Standard Lamb–Dicke ratio.
    Vogel,
    /// Values from `--f-table`.
    Table,
}

#[derive(Debug, Clone, Args)]
pub struct StateFlags {
    #[arg(long, value_enum, default_value_t = KindArg::Coherent)]
    pub kind: KindArg,
    #[arg(long, default_value_t = 0.0)]
    pub alpha_re: f64,
    #[arg(long, default_value_t = 0.0)]
    pub alpha_im: f64,
    #[arg(long, default_value_t = 0.0)]
    pub beta_re: f64,
    #[arg(long, default_value_t = 0.0)]
    pub beta_im: f64,
    /// Fock level of a number state.
    #[arg(long, default_value_t = 0)]
    pub level: usize,
    #[arg(long, value_enum, default_value_t = FVariant::Vogel)]
    pub f_variant: FVariant,
    /// Lamb–Dicke parameter.
    #[arg(long, default_value_t = 0.3)]
    pub eta: f64,
    /// Comma-separated f(0), f(1), ... for `--f-variant table`.
    #[arg(long)]
    pub f_table: Option<String>,
    #[arg(long, default_value_t = DEFAULT_TRUNCATION)]
    pub truncation: usize,
}

impl StateFlags {
    fn deformation(&self) -> Result<Deformation<f64>> {
        Ok(match self.f_variant {
            FVariant::Identity => Deformation::Identity,
            FVariant::Shifted => Deformation::ShiftedLambDicke { eta: self.eta },
            FVariant::Vogel => Deformation::VogelLambDicke { eta: self.eta },
            FVariant::Table => {
                let text = self
                    .f_table
                    .as_deref()
                    .ok_or_else(|| Error::invalid("f-table", "required with --f-variant table"))?;
                let values = text
                    .split(',')
                    .map(|v| {
                        v.trim()
                            .parse::<f64>()
                            .map_err(|e| Error::invalid("f-table", format!("`{v}`: {e}")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Deformation::CustomTable(values)
            }
        })
    }

    fn build(&self) -> Result<StateSpec<f64>> {
        let kind = match self.kind {
            KindArg::Coherent => StateKind::Coherent {
                alpha: Complex64::new(self.alpha_re, self.alpha_im),
            },
            KindArg::Number => StateKind::Number { level: self.level },
            KindArg::FCoherent => StateKind::FCoherent {
                beta: Complex64::new(self.beta_re, self.beta_im),
                deformation: self.deformation()?,
            },
        };
        make_state(kind, self.truncation)
    }
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Output file (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    pub format: FormatArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Csv,
    Json,
}

impl OutputArgs {
    fn emit(&self, table: &Table) -> Result<()> {
        let format = match self.format {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        };
        emit(table, format, self.out.as_deref())
    }
}

#[derive(Debug, Clone, Args)]
pub struct EpsilonArgs {
    #[command(flatten)]
    pub trap: TrapArgs,
    #[arg(long, default_value_t = 10.0)]
    pub tmax: f64,
    /// Uniform output samples; every integrator node when absent.
    #[arg(long)]
    pub samples: Option<usize>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct StateArgs {
    #[command(flatten)]
    pub state: StateFlags,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct TomogramArgs {
    #[command(flatten)]
    pub trap: TrapArgs,
    #[command(flatten)]
    pub state: StateFlags,
    #[arg(long, default_value_t = 0.0)]
    pub t: f64,
    #[arg(long, default_value_t = 1.0)]
    pub mu: f64,
    #[arg(long, default_value_t = 0.0)]
    pub nu: f64,
    /// Homodyne angle: sets μ = cos φ, ν = sin φ.
    #[arg(long, conflicts_with_all = ["mu", "nu"])]
    pub phi: Option<f64>,
    #[arg(long, default_value_t = -6.0)]
    pub x_min: f64,
    #[arg(long, default_value_t = 6.0)]
    pub x_max: f64,
    #[arg(long, default_value_t = 241)]
    pub x_steps: usize,
    #[arg(long, requires_all = ["mu_max", "mu_steps"], conflicts_with = "phi")]
    pub mu_min: Option<f64>,
    #[arg(long, requires = "mu_min")]
    pub mu_max: Option<f64>,
    #[arg(long, requires = "mu_min")]
    pub mu_steps: Option<usize>,
    #[arg(long, requires_all = ["nu_max", "nu_steps"], conflicts_with = "phi")]
    pub nu_min: Option<f64>,
    #[arg(long, requires = "nu_min")]
    pub nu_max: Option<f64>,
    #[arg(long, requires = "nu_min")]
    pub nu_steps: Option<usize>,
    /// Use the equal-powers cross kernel (diagnostic; fails on complex
    /// amplitudes).
    #[arg(long)]
    pub equal_powers_kernel: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct PhaseGridArgs {
    #[arg(long, default_value_t = -5.0)]
    pub q_min: f64,
    #[arg(long, default_value_t = 5.0)]
    pub q_max: f64,
    #[arg(long, default_value_t = 101)]
    pub q_steps: usize,
    #[arg(long, default_value_t = -5.0)]
    pub p_min: f64,
    #[arg(long, default_value_t = 5.0)]
    pub p_max: f64,
    #[arg(long, default_value_t = 101)]
    pub p_steps: usize,
}

impl PhaseGridArgs {
    fn axes(&self) -> Result<(Axis<f64>, Axis<f64>)> {
        Ok((
            Axis::new(self.q_min, self.q_max, self.q_steps)?,
            Axis::new(self.p_min, self.p_max, self.p_steps)?,
        ))
    }
}

fn phase_table(grid: &crate::phase_space::PhaseSpaceGrid<f64>) -> Table {
    let mut table = Table::new(&["q", "p", "W"]);
    let (qs, ps) = (grid.q_axis.nodes(), grid.p_axis.nodes());
    for (i, &q) in qs.iter().enumerate() {
        for (j, &p) in ps.iter().enumerate() {
            table.push(vec![q.into(), p.into(), grid.get(i, j).into()]);
        }
    }
    table
}

#[derive(Debug, Clone, Args)]
pub struct WignerArgs {
    #[command(flatten)]
    pub trap: TrapArgs,
    #[command(flatten)]
    pub state: StateFlags,
    #[arg(long, default_value_t = 0.0)]
    pub t: f64,
    #[command(flatten)]
    pub grid: PhaseGridArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Frame {
    /// Number basis of the static oscillator.
    Lab,
    /// Moving basis Ψ_m(x, t) of the invariant.
    Invariant,
}

/// Where the tomogram comes from, and in which frame it is read.
#[derive(Debug, Clone, Args)]
pub struct SourceArgs {
    #[command(flatten)]
    pub trap: TrapArgs,
    #[command(flatten)]
    pub state: StateFlags,
    /// Tomogram CSV as written by `tomogram`.
    #[arg(long, conflicts_with = "from_state")]
    pub tomogram: Option<PathBuf>,
    /// Compute the tomogram from the state flags (the default).
    #[arg(long)]
    pub from_state: bool,
    /// Time of the tomogram.
    #[arg(long, default_value_t = 0.0)]
    pub t: f64,
    #[arg(long, value_enum, default_value_t = Frame::Lab)]
    pub frame: Frame,
    /// Gauss–Hermite nodes in X.
    #[arg(long)]
    pub x_nodes: Option<usize>,
    /// Cutoff of the (μ, ν) integration box.
    #[arg(long)]
    pub cutoff: Option<f64>,
    /// Node spacing of the (μ, ν) integration box.
    #[arg(long)]
    pub quad_step: Option<f64>,
}

enum Input {
    State(StateSpec<f64>),
    Grid(GridTomogram),
}

struct Loaded {
    traj: EpsilonTrajectory<f64>,
    input: Input,
    frame: Frame,
    t: f64,
}

impl SourceArgs {
    fn load(&self) -> Result<Loaded> {
        let traj = self.trap.solve_through(self.t)?;
        let input = match &self.tomogram {
            Some(path) => Input::Grid(GridTomogram::new(read_tomogram_csv(path, self.t)?)?),
            None => Input::State(self.state.build()?),
        };
        Ok(Loaded {
            traj,
            input,
            frame: self.frame,
            t: self.t,
        })
    }

    /// Quadrature from the flags on top of `default`.
    fn quadrature(&self, default: QuadratureSpec<f64>) -> Result<QuadratureSpec<f64>> {
        let mut axes = default.axes;
        if let Some(n) = self.x_nodes {
            axes[0].n_points = n;
        }
        if self.cutoff.is_some() || self.quad_step.is_some() {
            let cutoff = self.cutoff.unwrap_or(axes[1].hi);
            let step = self.quad_step.unwrap_or(0.2);
            if !(cutoff > 0.0 && cutoff.is_finite()) {
                return Err(Error::invalid("cutoff", format!("must be finite and > 0, got {cutoff}")));
            }
            if !(step > 0.0 && step.is_finite()) {
                return Err(Error::invalid("quad-step", format!("must be finite and > 0, got {step}")));
            }
            let n = (2.0 * cutoff / step).ceil() as usize + 1;
            axes[1] = QuadAxis::symmetric(cutoff, n);
            axes[2] = QuadAxis::symmetric(cutoff, n);
        }
        QuadratureSpec::new(default.scheme, axes)
    }
}

impl Loaded {
    fn source(&self) -> Result<Box<dyn TomogramSource + '_>> {
        let base: Box<dyn TomogramSource + '_> = match &self.input {
            Input::State(s) => Box::new(StateTomogram::new(s, &self.traj, self.t)?),
            Input::Grid(g) => Box::new(g),
        };
        Ok(match self.frame {
            Frame::Lab => base,
            Frame::Invariant => Box::new(InvariantFrame::new(base, &self.traj, self.t)?),
        })
    }

    fn default_quadrature(&self, fock: bool) -> Result<QuadratureSpec<f64>> {
        match &self.input {
            Input::Grid(g) => g.quadrature_spec(),
            Input::State(_) if fock || self.frame == Frame::Invariant => Ok(default_fock_quadrature()),
            Input::State(_) => default_wigner_quadrature(&self.traj, self.t),
        }
    }

    fn extrapolations(&self) -> usize {
        match &self.input {
            Input::Grid(g) => g.extrapolations(),
            Input::State(_) => 0,
        }
    }

    fn warn_extrapolations(&self) {
        let k = self.extrapolations();
        if k > 0 {
            eprintln!("warning: {k} quadrature nodes fell outside the tomogram grid and were taken as 0");
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct ReconstructDmArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    /// Largest Fock index.
    #[arg(long, default_value_t = 8)]
    pub n: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ReconstructWignerArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub grid: PhaseGridArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct PhotonStatsArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[arg(long, default_value_t = 0.0)]
    pub scan_re: f64,
    #[arg(long, default_value_t = 0.0)]
    pub scan_im: f64,
    #[arg(long, default_value_t = 10)]
    pub nmax: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct CheckEvolutionArgs {
    #[command(flatten)]
    pub trap: TrapArgs,
    #[command(flatten)]
    pub state: StateFlags,
    /// Number of random (X, μ, ν, t) points.
    #[arg(long, default_value_t = 5)]
    pub points: usize,
    /// Finest step; residuals are taken at 4h, 2h and h.
    #[arg(long, default_value_t = 1e-3)]
    pub h: f64,
    #[arg(long, default_value_t = 5)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct CheckArgs {
    /// Emit the report as one JSON document.
    #[arg(long)]
    pub json: bool,
}

/// Failure that maps to a nonzero exit code.
enum Failure {
    Lib(Error),
    /// Ran to completion, but a check did not pass.
    Check(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

/// Parses `argv` (program name first), runs the subcommand and returns the
/// process exit code.
pub fn run<I, A>(argv: I) -> i32
where
    I: IntoIterator<Item = A>,
    A: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match parse(&argv) {
        Ok(cli) => cli,
        Err(code) => return code,
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: thread pool: {e}");
            return 1;
        }
    };
    match pool.install(|| dispatch(&cli.command)) {
        Ok(()) => 0,
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            match e.kind() {
                ErrorKind::Validation => 1,
                ErrorKind::Numerical => 2,
            }
        }
        Err(Failure::Check(msg)) => {
            eprintln!("error: {msg}");
            2
        }
    }
}

fn parse(argv: &[OsString]) -> std::result::Result<Cli, i32> {
    let report = |e: clap::Error| {
        let code = if e.use_stderr() { 1 } else { 0 };
        let _ = e.print();
        code
    };
    let cli = Cli::try_parse_from(argv).map_err(report)?;
    let Some(path) = cli.config.clone() else {
        return Ok(cli);
    };
    let extra = match config_args(&path) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return Err(1);
        }
    };
    let at = subcommand_position(argv).expect("parsed argv has a subcommand");
    let mut merged = argv[..=at].to_vec();
    merged.extend(extra);
    merged.extend_from_slice(&argv[at + 1..]);
    Cli::try_parse_from(merged).map_err(report)
}

/// Index of the subcommand token, skipping global flags and their values.
fn subcommand_position(argv: &[OsString]) -> Option<usize> {
    let mut i = 1;
    while i < argv.len() {
        let a = argv[i].to_string_lossy();
        if a == "--threads" || a == "--config" {
            i += 2;
        } else if a.starts_with('-') {
            i += 1;
        } else {
            return Some(i);
        }
    }
    None
}

/// `key = value` lines as flags. `#` starts a comment; `true` and `false`
/// toggle switches.
fn config_args(path: &Path) -> Result<Vec<OsString>> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut out = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::invalid("config", format!("{}:{}: expected `key = value`", path.display(), k + 1))
        })?;
        let (key, value) = (key.trim(), value.trim());
        if matches!(key, "config" | "threads") {
            return Err(Error::invalid("config", format!("`{key}` cannot be set from a config file")));
        }
        match value {
            "true" => out.push(format!("--{key}").into()),
            "false" => {}
            _ => {
                out.push(format!("--{key}").into());
                out.push(value.into());
            }
        }
    }
    Ok(out)
}

fn dispatch(cmd: &Command) -> std::result::Result<(), Failure> {
    match cmd {
        Command::Epsilon(a) => epsilon(a)?,
        Command::State(a) => state(a)?,
        Command::Tomogram(a) => tomogram(a)?,
        Command::Wigner(a) => wigner(a)?,
        Command::ReconstructDm(a) => reconstruct_dm(a)?,
        Command::ReconstructWigner(a) => reconstruct_wigner(a)?,
        Command::PhotonStats(a) => photon_stats(a)?,
        Command::CheckEvolution(a) => return check_evolution(a),
        Command::Check(a) => return check(a),
    }
    Ok(())
}

fn epsilon(a: &EpsilonArgs) -> Result<()> {
    let traj = a.trap.solve(a.tmax)?;
    let times = match a.samples {
        Some(n) => Axis::new(0.0, a.tmax, n)?.nodes(),
        None => traj.t_grid.clone(),
    };
    let mut table = Table::new(&["t", "eps_re", "eps_im", "epsdot_re", "epsdot_im", "wronskian_im_err"]);
    for t in times {
        let (e, d) = epsilon_at(&traj, t)?;
        let w = wronskian(&traj, t)?;
        table.push(vec![t.into(), e.re.into(), e.im.into(), d.re.into(), d.im.into(), (w.im + 2.0).into()]);
    }
    a.output.emit(&table)
}

fn coefficient_records(coeffs: &[Complex64]) -> Value {
    Value::Array(
        coeffs
            .iter()
            .enumerate()
            .map(|(n, c)| json!({"n": n, "re": c.re, "im": c.im}))
            .collect(),
    )
}

fn state(a: &StateArgs) -> Result<()> {
    let s = a.state.build()?;
    let doc = json!({
        "kind": s.kind.name(),
        "truncation": s.truncation,
        "tail_bound": s.tail_bound,
        "norm": s.norm_sqr(),
        "mean_number": s.mean_number(),
        "coefficients": coefficient_records(&s.coeffs),
    });
    write_output(&json_string(&doc), a.out.as_deref())
}

fn optional_axis(min: Option<f64>, max: Option<f64>, steps: Option<usize>, fallback: f64) -> Result<Vec<f64>> {
    match (min, max, steps) {
        (Some(lo), Some(hi), Some(n)) => Ok(Axis::new(lo, hi, n)?.nodes()),
        _ => Ok(vec![fallback]),
    }
}

fn tomogram(a: &TomogramArgs) -> Result<()> {
    let traj = a.trap.solve_through(a.t)?;
    let s = a.state.build()?;
    let (mu0, nu0) = match a.phi {
        Some(phi) => (phi.cos(), phi.sin()),
        None => (a.mu, a.nu),
    };
    let x = Axis::new(a.x_min, a.x_max, a.x_steps)?.nodes();
    let mu = optional_axis(a.mu_min, a.mu_max, a.mu_steps, mu0)?;
    let nu = optional_axis(a.nu_min, a.nu_max, a.nu_steps, nu0)?;
    let kernel = if a.equal_powers_kernel {
        CrossKernel::EqualPowers
    } else {
        CrossKernel::Standard
    };
    let tomo = tomogram_grid_with(&s, &traj, a.t, (&x, &mu, &nu), kernel)?;
    a.output.emit(&tomogram_table(&tomo))
}

fn wigner(a: &WignerArgs) -> Result<()> {
    let traj = a.trap.solve_through(a.t)?;
    let s = a.state.build()?;
    let (q, p) = a.grid.axes()?;
    a.output.emit(&phase_table(&wigner_grid(&s, &traj, a.t, q, p)?))
}

fn reconstruct_dm(a: &ReconstructDmArgs) -> Result<()> {
    let loaded = a.source.load()?;
    let quad = a.source.quadrature(loaded.default_quadrature(true)?)?;
    let rho = reconstruct_density_matrix(&loaded.source()?, a.n, &quad)?;
    loaded.warn_extrapolations();
    let report = rho.report();
    if report.trace_warning {
        eprintln!("warning: trace {:.6} is far from 1; widen the tomogram grid or the quadrature", report.trace);
    }
    let mut entries = Vec::with_capacity(rho.dim * rho.dim);
    for m in 0..rho.dim {
        for n in 0..rho.dim {
            let v = rho.get(m, n);
            entries.push(json!({"m": m, "n": n, "re": v.re, "im": v.im}));
        }
    }
    let doc = json!({
        "n": a.n,
        "t": loaded.t,
        "frame": match loaded.frame { Frame::Lab => "lab", Frame::Invariant => "invariant" },
        "entries": entries,
        "report": {
            "trace": report.trace,
            "purity": report.purity,
            "min_eigenvalue": report.min_eigenvalue,
            "max_hermitian_error": report.max_hermitian_error,
            "trace_warning": report.trace_warning,
        },
        "extrapolations": loaded.extrapolations(),
    });
    write_output(&json_string(&doc), a.out.as_deref())
}

fn reconstruct_wigner(a: &ReconstructWignerArgs) -> Result<()> {
    let loaded = a.source.load()?;
    let quad = a.source.quadrature(loaded.default_quadrature(false)?)?;
    let (q, p) = a.grid.axes()?;
    let rec = invert_to_wigner(&loaded.source()?, q, p, &quad)?;
    loaded.warn_extrapolations();
    a.output.emit(&phase_table(&rec.grid))
}

fn photon_stats(a: &PhotonStatsArgs) -> Result<()> {
    let loaded = a.source.load()?;
    let quad = a.source.quadrature(loaded.default_quadrature(true)?)?;
    let scan = Complex64::new(a.scan_re, a.scan_im);
    let d = photon_number_distribution(&loaded.source()?, a.nmax, scan, &quad)?;
    loaded.warn_extrapolations();
    let mut table = Table::new(&["n", "w"]);
    for (n, p) in d.probs.iter().enumerate() {
        table.push(vec![n.into(), (*p).into()]);
    }
    a.output.emit(&table)
}

/// Residuals below this are rounding noise and carry no slope information.
const EVOLUTION_FLOOR: f64 = 1e-9;

fn check_evolution(a: &CheckEvolutionArgs) -> std::result::Result<(), Failure> {
    if a.points == 0 {
        return Err(Error::invalid("points", "must be ≥ 1").into());
    }
    if !(a.h > 0.0 && a.h <= 0.1) {
        return Err(Error::invalid("h", format!("must be in (0, 0.1], got {}", a.h)).into());
    }
    let trap = a.trap.config()?;
    let traj = a.trap.solve(4.0)?;
    let s = a.state.build()?;
    let coherent = matches!(s.kind, StateKind::Coherent { .. });
    let fock = FockTomogram::new(&s, &traj)?;
    let hs = [4.0 * a.h, 2.0 * a.h, a.h];
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let mut table = Table::new(&["point", "X", "mu", "nu", "t", "res_4h", "res_2h", "res_h", "slope"]);
    let mut bad = Vec::new();
    for k in 0..a.points {
        let p = EvolutionPoint {
            x: rng.gen_range(-1.0..1.0),
            mu: rng.gen_range(0.3..1.2),
            nu: rng.gen_range(-1.2..-0.3),
            t: rng.gen_range(0.5..3.5),
        };
        let res = hs
            .iter()
            .map(|&h| {
                evolution_residual(
                    |x, m, n, t| {
                        if coherent {
                            gaussian_tomogram(&s, &traj, t, x, m, n)
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
        let slope = convergence_slope(&hs, &res);
        if (slope - 2.0).abs() > 0.2 && res.iter().any(|r| r.abs() > EVOLUTION_FLOOR) {
            bad.push(k);
        }
        let mut row: Vec<Cell> = vec![k.into(), p.x.into(), p.mu.into(), p.nu.into(), p.t.into()];
        row.extend(res.iter().map(|&r| Cell::from(r)));
        row.push(slope.into());
        table.push(row);
    }
    a.output.emit(&table)?;
    if bad.is_empty() {
        Ok(())
    } else {
        Err(Failure::Check(format!("residual slope outside 2 ± 0.2 at points {bad:?}")))
    }
}

fn check(a: &CheckArgs) -> std::result::Result<(), Failure> {
    let outcomes = checks::run_all();
    let passed = outcomes.iter().filter(|o| o.passed).count();
    let text = if a.json {
        let doc = json!({
            "passed": passed == outcomes.len(),
            "criteria": serde_json::to_value(&outcomes).map_err(Error::from)?,
        });
        json_string(&doc)
    } else {
        let mut s: String = outcomes.iter().map(|o| o.line() + "\n").collect();
        s.push_str(&format!("{passed}/{} criteria passed\n", outcomes.len()));
        s
    };
    write_output(&text, None)?;
    if passed == outcomes.len() {
        Ok(())
    } else {
        Err(Failure::Check(format!("{} of {} criteria failed", outcomes.len() - passed, outcomes.len())))
    }
}
