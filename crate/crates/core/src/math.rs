//! Scalar shims so the crate builds without `std`.

#[cfg(all(not(feature = "std"), not(feature = "libm")))]
compile_error!("wvnb-core needs either the `std` or the `libm` feature");

#[cfg(feature = "std")]
#[inline]
pub(crate) fn sqrt(x: f64) -> f64 {
    x.sqrt()
}

#[cfg(all(not(feature = "std"), feature = "libm"))]
#[inline]
pub(crate) fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}
