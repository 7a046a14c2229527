//! Constructive diagonal-plus-remainder decomposition of normal matrices.
//!
//! The chain: a normal matrix's spectrum is placed in the unit square,
//! covered by a depth-`d` grid, and pulled back to the real line along the
//! exact space-filling-curve machinery of `wvnb-core`. The distinguished
//! vector's atomic spectral measure rides along, giving a real diagonal
//! model whose curve image reproduces the matrix up to one cell diameter.
//! A greedy spectral-window construction then splits the (rotated) model
//! into diagonal plus a remainder with certified per-step residuals, and a
//! Chebyshev functional calculus tracks how the polynomial images of the
//! two sides converge to the final identity.
//!
//! ```
//! use nalgebra::{DMatrix, DVector};
//! use num_complex::Complex64;
//! use wvnb::calculus::berg_assemble;
//! use wvnb::spectral::NormalMatrix;
//!
//! let a = NormalMatrix::new(DMatrix::from_diagonal(&DVector::from_vec(vec![
//!     Complex64::new(0.0, 1.0),
//!     Complex64::new(0.0, -1.0),
//! ])))?;
//! let s = 1.0 / 2.0f64.sqrt();
//! let x = DVector::from_vec(vec![Complex64::new(s, 0.0), Complex64::new(s, 0.0)]);
//! let report = berg_assemble(&a, &x, 4, &[8, 16, 32], None, 42)?;
//! assert!(report.reconstruction_error <= report.reconstruction_bound);
//! assert!(report.identity_residual <= report.identity_bound);
//! # Ok::<(), wvnb::calculus::CalculusError>(())
//! ```

pub mod calculus;
pub mod formats;
pub mod gen;
pub mod pipeline;
pub mod spectral;
