//! Truncated Fourier lattice, Craya–Herring geometry, scalar and vector
//! fields, and the advection product.

mod advect;
mod craya;
pub mod fft;
mod field;
mod lattice;

pub use advect::{advect, advect_with, AdvectMethod, VectorField};
pub(crate) use advect::{dot_real, full_support};
pub use craya::{craya_basis, CrayaFrame};
pub(crate) use craya::dot3;
pub use field::{SpectralField, BOX_VOLUME};
pub use lattice::{Lattice, ModeTable, ShellBounds, Slot, WaveVector};
