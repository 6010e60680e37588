//! Finite-depth dyadic constructions around the dimension spectra of microsets.
//!
//! The crate is organised bottom-up:
//!
//! * [`seq`] binary words, balanced (Beatty) sequences and sequence programs;
//! * [`dyadic`] unions of dyadic cubes, digit-restriction sets `K(x)`, Hausdorff
//!   distance, zooming and the piece decomposition of `K(x)`;
//! * [`dims`] covering and packing counts, box-dimension estimators and finite
//!   metric spaces;
//! * [`realize`] target presentations, the cylinder map `φ`, the block map and the
//!   sequence `ψ(x)` whose density realizes `φ̄(x)`;
//! * [`percolation`] coupled fractal percolation with generation dependent
//!   retention probabilities;
//! * [`families`] ball-tree families for upper box and packing dimension.

pub mod dims;
pub mod dyadic;
pub mod error;
pub mod families;
pub mod percolation;
pub mod ratio;
pub mod realize;
pub mod seq;

pub use error::{Error, Result};
pub use ratio::Rational;
