//! Seeded generators for unitaries, normal matrices, and unit vectors.
//!
//! Everything is driven by a ChaCha stream cipher so identical seeds give
//! identical matrices across runs.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Standard normal sample via Box–Muller.
fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

fn gaussian_complex(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::new(gaussian(rng), gaussian(rng))
}

/// Haar-ish random unitary: Q factor of a complex Gaussian matrix.
pub fn random_unitary(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<Complex64> {
    let g = DMatrix::from_fn(n, n, |_, _| gaussian_complex(rng));
    g.qr().q()
}

/// Random unit vector with complex Gaussian entries.
pub fn random_unit_vector(n: usize, rng: &mut ChaCha8Rng) -> DVector<Complex64> {
    loop {
        let v = DVector::from_fn(n, |_, _| gaussian_complex(rng));
        let norm = v.norm();
        if norm > 1e-6 {
            return v / Complex64::new(norm, 0.0);
        }
    }
}

/// Eigenvalues sampled in `[-1,1]²` with pairwise separation at least
/// `0.06`, so that distinct spectrum points occupy distinct cells at the
/// working depths once the frame margin is applied.
pub fn random_separated_spectrum(n: usize, rng: &mut ChaCha8Rng) -> Vec<Complex64> {
    const MIN_SEP: f64 = 0.06;
    let mut points: Vec<Complex64> = Vec::with_capacity(n);
    while points.len() < n {
        let candidate = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        if points.iter().all(|p| (p - candidate).norm() >= MIN_SEP) {
            points.push(candidate);
        }
    }
    points
}

/// A random normal matrix `U diag(λ) U*` with separated eigenvalues;
/// returns the matrix and its spectrum.
pub fn random_normal_matrix(
    n: usize,
    rng: &mut ChaCha8Rng,
) -> (DMatrix<Complex64>, Vec<Complex64>) {
    let spectrum = random_separated_spectrum(n, rng);
    let u = random_unitary(n, rng);
    let d = DMatrix::from_diagonal(&DVector::from_vec(spectrum.clone()));
    (&u * d * u.adjoint(), spectrum)
}

/// The tridiagonal second-difference matrix (2 on the diagonal, −1 off).
pub fn laplacian(n: usize) -> DMatrix<Complex64> {
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            Complex64::new(2.0, 0.0)
        } else if i.abs_diff(j) == 1 {
            Complex64::new(-1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}
