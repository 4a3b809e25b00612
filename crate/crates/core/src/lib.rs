//! Motional quantum states of a single ion in a Paul trap and their
//! symplectic tomograms.
//!
//! The ion is modelled as a parametric oscillator with
//! `ω²(t) = 1 + κ² sin²(Ωt)` in units `ħ = m = ω(0) = 1`. States are built
//! in the Fock basis of the time-dependent invariant `A†A`, mapped forward
//! to Wigner functions and symplectic tomograms `w(X, μ, ν)`, and mapped
//! back from tomograms to the Wigner function, the Fock density matrix and
//! the photon-number distribution.
//!
//! The forward maps and special functions are generic over the scalar type
//! (`f32` or `f64`, see [`Real`]); the quadrature-heavy inverse maps in
//! [`tomography`] run in `f64`. Concrete `f64` aliases are exported at the
//! crate root.

// `!(x > 0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod checks;
pub mod cli;
pub mod dynamics;
pub mod error;
pub mod io;
pub mod phase_space;
pub mod specfun;
pub mod states;
pub mod tomography;

mod real;

pub use error::{Error, ErrorKind, Result};
pub use real::Real;

pub use dynamics::{epsilon_at, solve_epsilon, wronskian};
pub use phase_space::{
    f_tomogram, fock_cross_tomogram, gaussian_tomogram, rotated_params, wigner, CrossKernel,
};
pub use states::{make_state, moments, psi_number, psi_state, verify_eigenstate};
pub use tomography::{
    evolution_residual, invert_to_wigner, photon_number_distribution,
    reconstruct_density_matrix, TomogramSource,
};

/// Complex scalar over [`Real`].
pub type Complex<T> = num_complex::Complex<T>;
pub type C64 = num_complex::Complex64;

pub type TrapConfig = dynamics::TrapConfig<f64>;
pub type EpsilonTrajectory = dynamics::EpsilonTrajectory<f64>;
pub type Deformation = states::Deformation<f64>;
pub type StateKind = states::StateKind<f64>;
pub type StateSpec = states::StateSpec<f64>;
pub type QuadratureMoments = states::QuadratureMoments<f64>;
pub type RotatedParams = phase_space::RotatedParams<f64>;
pub type Axis = phase_space::Axis<f64>;
pub type PhaseSpaceGrid = phase_space::PhaseSpaceGrid<f64>;
pub type Tomogram = phase_space::Tomogram<f64>;
pub type QuadratureSpec = specfun::QuadratureSpec<f64>;
pub type QuadAxis = specfun::QuadAxis<f64>;
