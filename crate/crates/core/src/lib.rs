//! Numerical spectral geometry on flat tori, the noncommutative torus and the
//! Moyal plane.
//!
//! Every module is a set of pure functions over immutable inputs. Heavy loops
//! run on rayon when the `parallel` feature is enabled (the default) and fall
//! back to plain iterators otherwise; both paths produce bit-identical output.

pub mod error;
pub mod par;
pub mod quadrature;
pub mod special;

pub mod diophantine;
pub mod dixmier_trace;
pub mod heat_asymptotics;
pub mod lattice_spectra;
pub mod moyal_plane;
pub mod nc_torus;
pub mod spectral_action;
pub mod wodzicki_residue;
pub mod zeta_engine;

pub use error::{Result, SpecError};
pub use num_complex::Complex64;
