//! One-dimensional finite-element toolkit for the modified Langevin noise formalism.
//!
//! A lossy Lorentz slab sits in vacuum; the open domain is terminated by PMLs. For a
//! two-level atom at `x_a` the spontaneous emission rate, normalized to free space,
//! is computed four ways:
//!
//! * from the Green's function (`2k Im G(x_a, x_a)`),
//! * from a microscopic field + matter + bath model diagonalized in a closed box,
//! * from boundary-assisted plus medium-assisted Langevin fields,
//! * from the medium-assisted fields alone.
//!
//! The crate also checks the discrete Green-operator identities and the
//! thermal-equilibrium balance between the two field contributions, and ships an
//! analytic transfer-matrix oracle for the single-slab geometry.
//!
//! Units: `ħ = ε_0 = μ_0 = c = 1`; frequencies are wavenumbers in rad/m; lengths in
//! meters; time dependence `e^{-iωt}`.

pub mod cli;
pub mod config;
pub mod fem;
pub mod greens;
pub mod identities;
pub mod medium;
pub mod mesh;
pub mod micromodes;
pub mod oracle;
pub mod output;
pub mod purcell;
pub mod quadrature;
pub mod scattering;

pub use num_complex::Complex64;

use thiserror::Error;

/// Crate-wide error, wrapping the per-module errors.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Medium(#[from] medium::MediumError),
    #[error(transparent)]
    Mesh(#[from] mesh::MeshError),
    #[error(transparent)]
    Fem(#[from] fem::FemError),
    #[error(transparent)]
    Scattering(#[from] scattering::ScatteringError),
    #[error(transparent)]
    Greens(#[from] greens::GreensError),
    #[error(transparent)]
    Modes(#[from] micromodes::ModesError),
    #[error(transparent)]
    Identity(#[from] identities::IdentityError),
    #[error(transparent)]
    Sweep(#[from] purcell::SweepError),
    #[error(transparent)]
    Config(#[from] config::ConfigError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
