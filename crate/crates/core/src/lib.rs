//! reeblab: a numerical laboratory for classical and quantum mechanics on
//! 3D contact sub-Riemannian manifolds.
//!
//! The crate integrates sub-Riemannian geodesic flows on a small catalog of
//! contact models, finds periodic geodesics spiraling around closed Reeb
//! orbits, builds spectra of the sub-Riemannian Laplacian (analytically for
//! the Heisenberg quotient, numerically through per-mode magnetic
//! Schrödinger operators), and evaluates Schrödinger-type traces with their
//! Poisson closed forms.
//!
//! Modules:
//! * [`contact`] — model catalog and pointwise geometry (cometric, contact
//!   form, Reeb field, Popp volume, characteristic cone).
//! * [`flow`] — Hamiltonian and Reeb flows, symplectic/adaptive
//!   integrators, the exact model flow on Σ × R², helix fits.
//! * [`orbits`] — shooting for closed geodesics, length spectra, recovery
//!   of the Reeb period from length asymptotics.
//! * [`spectra`] — eigenvalue tables with torus/Landau-band sectors, Weyl
//!   and band counting checks.
//! * [`traces`] — band-sector heat-type traces, Poisson closed form,
//!   length extraction, boundary pole probes.

pub mod contact;
pub mod error;
pub mod flow;
pub mod orbits;
pub mod spectra;
pub mod traces;
pub mod util;

pub use contact::{ContactModel, ModelId, PhasePoint};
pub use error::{Error, Result};
