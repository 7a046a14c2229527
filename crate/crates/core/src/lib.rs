//! Finite-resolution machinery for carrying a planar compact set onto the
//! real line along a space-filling curve.
//!
//! The crate has three layers:
//!
//! - [`curve`] — exact integer arithmetic for the depth-`d` Peano
//!   subdivision: base-9 parameter intervals, their image cells in the
//!   3^d × 3^d grid, and the bijection between the two.
//! - [`compact`] — grid covers of compact sets: a point set is rasterized
//!   into the set of depth-`d` cells it meets, after an affine frame places
//!   it inside the unit square.
//! - [`selection`] — the curve preimage of a cover and the table sending
//!   each covered cell to the earliest parameter interval that hits it
//!   (the discrete right inverse of the curve restriction).
//!
//! Everything here is pure and integer-exact where the statements are
//! exact; the only floating point is cell-center geometry. The crate is
//! `no_std`-compatible (`alloc` required): disable default features and
//! enable `libm`.
//!
//! ```
//! use wvnb_core::curve::{cell_of_interval, interval_of_cell, ParamInterval};
//!
//! // The last depth-2 interval lands on the far corner cell, and the
//! // inverse map recovers it.
//! let iv = ParamInterval::new(2, 80)?;
//! let cell = cell_of_interval(iv);
//! assert_eq!((cell.col(), cell.row()), (8, 8));
//! assert_eq!(interval_of_cell(cell), iv);
//! # Ok::<(), wvnb_core::curve::CurveError>(())
//! ```

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod compact;
pub mod curve;
pub mod point;
pub mod selection;

mod math;
