//! Spectral model of a normal matrix over the curve parameterization.
//!
//! A normal matrix with a distinguished unit vector yields an atomic
//! measure on its spectrum (one atom per distinct eigenvalue, weighted by
//! the vector's spectral mass). Pushing that measure through the selection
//! table produces an atomic measure on the line, a weighted-permutation
//! transport between the two coordinate spaces, and a real diagonal model
//! whose curve image reproduces the spectrum to within one cell diameter.

pub mod eig;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

use wvnb_core::compact::{cell_of_point, AffineFrame, CompactError};
use wvnb_core::curve::{cell_of_interval, pow9, ParamInterval};
use wvnb_core::selection::{SelectionError, SelectionTable};

use eig::{normal_eigen, NormalEigen};

#[derive(Debug, Error)]
pub enum SpectralError {
    #[error("matrix is not normal: commutator norm {residual:.3e} exceeds {bound:.3e}")]
    NotNormal { residual: f64, bound: f64 },
    #[error("matrix must be square and non-empty")]
    NotSquare,
    #[error("matrix entries must be finite")]
    NonFiniteEntry,
    #[error("cyclic vector must have unit norm (got {norm})")]
    NotUnit { norm: f64 },
    #[error("vector length {got} does not match matrix dimension {expected}")]
    DimensionMismatch { got: usize, expected: usize },
    #[error(
        "vector is not cyclic for this matrix: spectral weight {weight:.3e} at eigenvalue \
         {re}+{im}i is below 1e-10; try a random unit vector"
    )]
    NotCyclic { weight: f64, re: f64, im: f64 },
    #[error("eigensolver residual {residual:.3e} exceeds {bound:.3e}")]
    EigenFailed { residual: f64, bound: f64 },
    #[error(
        "spectrum atom {index} ({re}+{im}i) falls outside the rasterized cover; increase the depth"
    )]
    AtomOutsideCover { index: usize, re: f64, im: f64 },
    #[error(
        "transport needs one line atom per spectrum atom (got {mu} vs {gamma}); increase the \
         depth until spectrum points occupy distinct cells"
    )]
    MismatchedAtomCounts { mu: usize, gamma: usize },
    #[error("diagonal entry {value} is not a left endpoint of the preimage cover")]
    EntryNotInPreimage { value: f64 },
    #[error(transparent)]
    Grid(#[from] CompactError),
    #[error(transparent)]
    Selection(#[from] SelectionError),
}

/// A square complex matrix that passed the normality gate
/// `‖AA* − A*A‖_F ≤ 10⁻¹⁰ ‖A‖_F²`.
#[derive(Clone, Debug)]
pub struct NormalMatrix {
    matrix: DMatrix<Complex64>,
}

impl NormalMatrix {
    pub fn new(matrix: DMatrix<Complex64>) -> Result<Self, SpectralError> {
        if matrix.nrows() == 0 || matrix.nrows() != matrix.ncols() {
            return Err(SpectralError::NotSquare);
        }
        if matrix
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(SpectralError::NonFiniteEntry);
        }
        let commutator = &matrix * matrix.adjoint() - matrix.adjoint() * &matrix;
        let residual = commutator.norm();
        let bound = 1e-10 * matrix.norm() * matrix.norm();
        if residual > bound {
            return Err(SpectralError::NotNormal { residual, bound });
        }
        Ok(NormalMatrix { matrix })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn fro_norm(&self) -> f64 {
        self.matrix.norm()
    }

    /// `‖AA* − A*A‖_F`, reported alongside the gate bound.
    pub fn commutator_residual(&self) -> f64 {
        (&self.matrix * self.matrix.adjoint() - self.matrix.adjoint() * &self.matrix).norm()
    }
}

/// A weighted point mass.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Atom<P> {
    pub point: P,
    pub weight: f64,
}

/// A finitely supported measure with strictly positive weights.
#[derive(Clone, Debug, PartialEq)]
pub struct AtomicMeasure<P> {
    atoms: Vec<Atom<P>>,
}

impl<P> AtomicMeasure<P> {
    pub fn from_atoms(atoms: Vec<Atom<P>>) -> Self {
        debug_assert!(atoms.iter().all(|a| a.weight > 0.0));
        AtomicMeasure { atoms }
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn atoms(&self) -> &[Atom<P>] {
        &self.atoms
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.weight).sum()
    }

    pub fn weights(&self) -> impl Iterator<Item = f64> + '_ {
        self.atoms.iter().map(|a| a.weight)
    }
}

/// A left endpoint `j·9⁻ᵈ` of a preimage interval, kept exact.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct KParam {
    pub index: u64,
    pub depth: u32,
}

impl KParam {
    pub fn value(self) -> f64 {
        self.index as f64 / pow9(self.depth) as f64
    }
}

/// Measure on the spectrum (complex atoms).
pub type SpectrumMeasure = AtomicMeasure<Complex64>;
/// Measure on the line (exact interval endpoints).
pub type LineMeasure = AtomicMeasure<KParam>;

/// Eigendecomposition of a normal matrix together with the atomic measure
/// induced by a distinguished unit vector.
#[derive(Clone, Debug)]
pub struct SpectralModel {
    /// Eigenvalues sorted by `(re, im)`.
    pub eigenvalues: Vec<Complex64>,
    /// Matching unitary eigenvector columns.
    pub eigenvectors: DMatrix<Complex64>,
    pub cyclic_vector: DVector<Complex64>,
    /// Spectral mass `|⟨v_k, x⟩|²` per eigenvector.
    pub weights: Vec<f64>,
    /// One atom per distinct eigenvalue, weights summed over merged pairs.
    pub measure: SpectrumMeasure,
    /// Atom index of each eigenvalue.
    pub atom_of_eigenvalue: Vec<usize>,
    /// `‖V*V − I‖_F`.
    pub unitarity_residual: f64,
    /// Max `‖A v − λ v‖` over eigenpairs.
    pub eigen_residual: f64,
}

/// Eigendecompose `a` and assemble the atomic measure of `x`.
///
/// Numerically repeated eigenvalues are merged into a single atom with
/// summed weight (the multiplicity-free model); an atom whose weight falls
/// below `10⁻¹⁰` means `x` has no mass on that eigenspace and the vector is
/// rejected as non-cyclic.
pub fn build_model(
    a: &NormalMatrix,
    x: &DVector<Complex64>,
) -> Result<SpectralModel, SpectralError> {
    let n = a.dim();
    if x.len() != n {
        return Err(SpectralError::DimensionMismatch {
            got: x.len(),
            expected: n,
        });
    }
    let norm = x.norm();
    if (norm - 1.0).abs() > 1e-8 {
        return Err(SpectralError::NotUnit { norm });
    }
    // Exact normalization so the spectral masses sum to one at round-off.
    let x = x / Complex64::new(norm, 0.0);
    let NormalEigen { values, vectors } = normal_eigen(a.matrix())?;
    let weights: Vec<f64> = (0..n)
        .map(|k| vectors.column(k).dotc(&x).norm_sqr())
        .collect();

    // Merge eigenvalues equal up to the solver's resolution into one atom.
    let merge_gap = 1e-8 * a.fro_norm().max(f64::MIN_POSITIVE);
    let mut atom_of_eigenvalue = vec![usize::MAX; n];
    let mut atom_members: Vec<Vec<usize>> = Vec::new();
    for i in 0..n {
        let joined = (0..i).find(|&j| (values[i] - values[j]).norm() <= merge_gap);
        match joined {
            Some(j) => {
                let atom = atom_of_eigenvalue[j];
                atom_of_eigenvalue[i] = atom;
                atom_members[atom].push(i);
            }
            None => {
                atom_of_eigenvalue[i] = atom_members.len();
                atom_members.push(vec![i]);
            }
        }
    }

    let mut atoms: Vec<Atom<Complex64>> = Vec::with_capacity(atom_members.len());
    for members in &atom_members {
        let weight: f64 = members.iter().map(|&i| weights[i]).sum();
        let mut point = Complex64::new(0.0, 0.0);
        for &i in members {
            point += values[i];
        }
        point /= members.len() as f64;
        if weight < 1e-10 {
            return Err(SpectralError::NotCyclic {
                weight,
                re: point.re,
                im: point.im,
            });
        }
        atoms.push(Atom { point, weight });
    }

    // Atoms sorted by (re, im); remap membership accordingly.
    let mut order: Vec<usize> = (0..atoms.len()).collect();
    order.sort_by(|&p, &q| {
        atoms[p]
            .point
            .re
            .total_cmp(&atoms[q].point.re)
            .then(atoms[p].point.im.total_cmp(&atoms[q].point.im))
    });
    let mut rank = vec![0usize; atoms.len()];
    for (new_pos, &old) in order.iter().enumerate() {
        rank[old] = new_pos;
    }
    let sorted_atoms: Vec<Atom<Complex64>> = order.iter().map(|&i| atoms[i]).collect();
    let atom_of_eigenvalue: Vec<usize> = atom_of_eigenvalue.into_iter().map(|a| rank[a]).collect();

    let unitarity_residual =
        (vectors.adjoint() * &vectors - DMatrix::<Complex64>::identity(n, n)).norm();
    if unitarity_residual > 1e-10 {
        return Err(SpectralError::EigenFailed {
            residual: unitarity_residual,
            bound: 1e-10,
        });
    }
    let mass: f64 = weights.iter().sum();
    if (mass - 1.0).abs() > 1e-12 {
        return Err(SpectralError::EigenFailed {
            residual: (mass - 1.0).abs(),
            bound: 1e-12,
        });
    }
    let eigen_residual = eig::eigen_residual(
        a.matrix(),
        &NormalEigen {
            values: values.clone(),
            vectors: vectors.clone(),
        },
    );

    Ok(SpectralModel {
        eigenvalues: values,
        eigenvectors: vectors,
        cyclic_vector: x,
        weights,
        measure: AtomicMeasure::from_atoms(sorted_atoms),
        atom_of_eigenvalue,
        unitarity_residual,
        eigen_residual,
    })
}

/// `‖V diag(λ) V* − A‖_F`: how well the diagonal model conjugates back to
/// the original matrix.
pub fn multiplication_model_residual(a: &NormalMatrix, model: &SpectralModel) -> f64 {
    let d = DMatrix::from_diagonal(&DVector::from_vec(model.eigenvalues.clone()));
    (&model.eigenvectors * d * model.eigenvectors.adjoint() - a.matrix()).norm()
}

/// The induced measure on the line plus the atom pairing that produced it.
#[derive(Clone, Debug)]
pub struct Pushforward {
    pub gamma: LineMeasure,
    /// `atom_pairing[i]` is the γ-atom receiving spectrum atom `i`. Two
    /// spectrum atoms share a γ-atom exactly when their cells collide at
    /// this depth.
    pub atom_pairing: Vec<usize>,
}

/// Push the spectrum measure through the selection: each atom moves to the
/// selected parameter of its cell; atoms landing on the same parameter
/// merge with summed weight. Total mass is preserved.
pub fn pushforward(
    mu: &SpectrumMeasure,
    table: &SelectionTable,
    frame: &AffineFrame,
) -> Result<Pushforward, SpectralError> {
    let depth = table.depth();
    let mut params: Vec<u64> = Vec::with_capacity(mu.len());
    for (index, atom) in mu.atoms().iter().enumerate() {
        let p = frame.embed(atom.point);
        let (col, row) = cell_of_point(p, depth).ok_or(SpectralError::AtomOutsideCover {
            index,
            re: atom.point.re,
            im: atom.point.im,
        })?;
        let (num, _den) = table
            .param_exact(col, row)
            .ok_or(SpectralError::AtomOutsideCover {
                index,
                re: atom.point.re,
                im: atom.point.im,
            })?;
        params.push(num);
    }
    let mut distinct: Vec<u64> = params.clone();
    distinct.sort_unstable();
    distinct.dedup();
    let mut weights = vec![0.0f64; distinct.len()];
    let mut atom_pairing = Vec::with_capacity(mu.len());
    for (atom, &j) in mu.atoms().iter().zip(&params) {
        let slot = distinct.binary_search(&j).expect("param recorded above");
        weights[slot] += atom.weight;
        atom_pairing.push(slot);
    }
    let gamma = AtomicMeasure::from_atoms(
        distinct
            .into_iter()
            .zip(weights)
            .map(|(index, weight)| Atom {
                point: KParam { index, depth },
                weight,
            })
            .collect(),
    );
    Ok(Pushforward {
        gamma,
        atom_pairing,
    })
}

/// The coordinate map `g ↦ g∘ψ` between the weighted spaces of the line
/// measure and the spectrum measure. With one line atom per spectrum atom
/// it is a weighted permutation, hence a surjective isometry.
#[derive(Clone, Debug)]
pub struct TransportOperator {
    pub mu_weights: Vec<f64>,
    pub gamma_weights: Vec<f64>,
    /// γ-atom index per μ-atom (forward composition with the selection).
    pub pairing: Vec<usize>,
    /// μ-atom index per γ-atom (composition with the curve restriction).
    pub inverse: Vec<usize>,
}

/// Build the transport between `mu` and its pushforward.
pub fn build_transport(
    mu: &SpectrumMeasure,
    pf: &Pushforward,
) -> Result<TransportOperator, SpectralError> {
    if mu.len() != pf.gamma.len() {
        return Err(SpectralError::MismatchedAtomCounts {
            mu: mu.len(),
            gamma: pf.gamma.len(),
        });
    }
    let mut inverse = vec![usize::MAX; pf.gamma.len()];
    for (i, &k) in pf.atom_pairing.iter().enumerate() {
        inverse[k] = i;
    }
    debug_assert!(inverse.iter().all(|&i| i != usize::MAX));
    Ok(TransportOperator {
        mu_weights: mu.weights().collect(),
        gamma_weights: pf.gamma.weights().collect(),
        pairing: pf.atom_pairing.clone(),
        inverse,
    })
}

impl TransportOperator {
    pub fn dim(&self) -> usize {
        self.mu_weights.len()
    }

    /// Forward map: coordinates on the line measure to coordinates on the
    /// spectrum measure.
    pub fn apply(&self, g: &[Complex64]) -> Vec<Complex64> {
        self.pairing.iter().map(|&k| g[k]).collect()
    }

    /// Adjoint (= inverse) map.
    pub fn apply_adjoint(&self, f: &[Complex64]) -> Vec<Complex64> {
        self.inverse.iter().map(|&i| f[i]).collect()
    }

    /// The 0/1 assignment matrix in weighted coordinates.
    pub fn matrix(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut m = DMatrix::<f64>::zeros(n, n);
        for (i, &k) in self.pairing.iter().enumerate() {
            m[(i, k)] = 1.0;
        }
        m
    }

    pub fn norm_gamma(&self, g: &[Complex64]) -> f64 {
        g.iter()
            .zip(&self.gamma_weights)
            .map(|(z, w)| w * z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn norm_mu(&self, f: &[Complex64]) -> f64 {
        f.iter()
            .zip(&self.mu_weights)
            .map(|(z, w)| w * z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// `max(‖T*T − I‖, ‖TT* − I‖)` measured columnwise on basis vectors in
    /// the weighted coordinates.
    pub fn unitarity_residual(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for k in 0..n {
            let mut e = vec![Complex64::new(0.0, 0.0); n];
            e[k] = Complex64::new(1.0, 0.0);
            let round_trip = self.apply_adjoint(&self.apply(&e));
            for (i, z) in round_trip.iter().enumerate() {
                let expect = if i == k { 1.0 } else { 0.0 };
                worst = worst.max((z - Complex64::new(expect, 0.0)).norm());
            }
            let other = self.apply(&self.apply_adjoint(&e));
            for (i, z) in other.iter().enumerate() {
                let expect = if i == k { 1.0 } else { 0.0 };
                worst = worst.max((z - Complex64::new(expect, 0.0)).norm());
            }
        }
        worst
    }

    /// `|‖Tg‖ − ‖g‖|` for one coordinate vector.
    pub fn isometry_defect(&self, g: &[Complex64]) -> f64 {
        (self.norm_mu(&self.apply(g)) - self.norm_gamma(g)).abs()
    }
}

/// The Hermitian model: the diagonal of line-atom positions.
#[derive(Clone, Debug)]
pub struct DiagonalModel {
    pub params: Vec<KParam>,
}

/// Diagonal of γ-atom positions, a real symmetric matrix with spectrum
/// inside the preimage cover.
pub fn hermitian_model(gamma: &LineMeasure) -> DiagonalModel {
    DiagonalModel {
        params: gamma.atoms().iter().map(|a| a.point).collect(),
    }
}

impl DiagonalModel {
    pub fn dim(&self) -> usize {
        self.params.len()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        self.params.iter().map(|p| p.value()).collect()
    }

    pub fn matrix(&self) -> DMatrix<Complex64> {
        DMatrix::from_diagonal(&DVector::from_vec(
            self.diagonal()
                .into_iter()
                .map(|t| Complex64::new(t, 0.0))
                .collect(),
        ))
    }
}

/// Apply the depth-`d` curve map to a diagonal of parameters: interval →
/// cell center → frame coordinates. Every entry must be a left endpoint of
/// the preimage cover.
pub fn reconstruct(
    diag: &[f64],
    table: &SelectionTable,
    frame: &AffineFrame,
) -> Result<Vec<Complex64>, SpectralError> {
    let depth = table.depth();
    let count = pow9(depth) as f64;
    let mut out = Vec::with_capacity(diag.len());
    for &t in diag {
        let rounded = (t * count).round();
        if !(0.0..count).contains(&rounded) || (t * count - rounded).abs() > 1e-6 {
            return Err(SpectralError::EntryNotInPreimage { value: t });
        }
        let j = rounded as u64;
        if !table.preimage().contains(j) {
            return Err(SpectralError::EntryNotInPreimage { value: t });
        }
        let cell = cell_of_interval(ParamInterval::new(depth, j).expect("index checked in range"));
        out.push(frame.restore(cell.center()));
    }
    Ok(out)
}

/// Worst-case distance `scale·√2·3⁻ᵈ` between a point and the center of
/// its depth-`d` cell, the guaranteed reconstruction bound.
pub fn reconstruction_bound(frame: &AffineFrame, depth: u32) -> f64 {
    frame.scale * core::f64::consts::SQRT_2 / wvnb_core::curve::pow3(depth) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use wvnb_core::compact::normalize_spectrum;
    use wvnb_core::selection::build_selection;

    fn model_chain(
        eigs: &[Complex64],
        weights: &[f64],
        depth: u32,
    ) -> (AffineFrame, SelectionTable, SpectrumMeasure) {
        let (frame, cover) = normalize_spectrum(eigs, depth).unwrap();
        let table = build_selection(&cover).unwrap();
        let atoms = eigs
            .iter()
            .zip(weights)
            .map(|(&point, &weight)| Atom { point, weight })
            .collect();
        (frame, table, AtomicMeasure::from_atoms(atoms))
    }

    #[test]
    fn normality_gate() {
        let normal = DMatrix::from_diagonal(&DVector::from_vec(vec![
            Complex64::new(0.0, 1.0),
            Complex64::new(0.0, -1.0),
        ]));
        assert!(NormalMatrix::new(normal).is_ok());
        let shear = DMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(0.0, 0.0),
                Complex64::new(1.0, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(0.0, 0.0),
            ],
        );
        assert!(matches!(
            NormalMatrix::new(shear),
            Err(SpectralError::NotNormal { .. })
        ));
    }

    #[test]
    fn symmetric_two_point_spectrum_gets_equal_weights() {
        let a = NormalMatrix::new(DMatrix::from_diagonal(&DVector::from_vec(vec![
            Complex64::new(0.0, 1.0),
            Complex64::new(0.0, -1.0),
        ])))
        .unwrap();
        let x = DVector::from_vec(vec![
            Complex64::new(1.0 / 2.0f64.sqrt(), 0.0),
            Complex64::new(1.0 / 2.0f64.sqrt(), 0.0),
        ]);
        let model = build_model(&a, &x).unwrap();
        assert_eq!(model.measure.len(), 2);
        for atom in model.measure.atoms() {
            assert!((atom.weight - 0.5).abs() < 1e-12);
        }
        assert!((model.measure.total_mass() - 1.0).abs() < 1e-12);
        assert!(model.unitarity_residual < 1e-10);
        assert!(multiplication_model_residual(&a, &model) < 1e-8 * a.fro_norm().max(1.0));
    }

    #[test]
    fn one_by_one_zero_matrix() {
        let a = NormalMatrix::new(DMatrix::from_element(1, 1, Complex64::new(0.0, 0.0))).unwrap();
        let x = DVector::from_vec(vec![Complex64::new(1.0, 0.0)]);
        let model = build_model(&a, &x).unwrap();
        assert_eq!(model.measure.len(), 1);
        assert_eq!(model.measure.atoms()[0].point, Complex64::new(0.0, 0.0));
        assert!((model.measure.atoms()[0].weight - 1.0).abs() < 1e-14);
    }

    #[test]
    fn weights_match_known_eigenbasis() {
        // Conjugate diag(1, 2+i, -3) by a fixed unitary built from a QR
        // factorization; weights must equal the squared moduli of x in the
        // eigenbasis.
        let mut rng = crate::gen::rng_from_seed(11);
        let q = crate::gen::random_unitary(3, &mut rng);
        let lambda = [
            Complex64::new(1.0, 0.0),
            Complex64::new(2.0, 1.0),
            Complex64::new(-3.0, 0.0),
        ];
        let d = DMatrix::from_diagonal(&DVector::from_vec(lambda.to_vec()));
        let a = NormalMatrix::new(&q * d * q.adjoint()).unwrap();
        let x = crate::gen::random_unit_vector(3, &mut rng);
        let model = build_model(&a, &x).unwrap();
        assert!((model.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        // Compare against the known eigenbasis: weight of eigenvalue λ is
        // |⟨q_col, x⟩|² for the column matching λ.
        for (col, &l) in lambda.iter().enumerate() {
            let expected = q.column(col).dotc(&x).norm_sqr();
            let atom = model
                .measure
                .atoms()
                .iter()
                .find(|atom| (atom.point - l).norm() < 1e-8)
                .expect("eigenvalue recovered");
            assert!(
                (atom.weight - expected).abs() < 1e-10,
                "{} vs {}",
                atom.weight,
                expected
            );
        }
    }

    #[test]
    fn orthogonal_vector_is_rejected_as_non_cyclic() {
        let a = NormalMatrix::new(DMatrix::from_diagonal(&DVector::from_vec(vec![
            Complex64::new(1.0, 0.0),
            Complex64::new(2.0, 0.0),
        ])))
        .unwrap();
        let x = DVector::from_vec(vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]);
        assert!(matches!(
            build_model(&a, &x),
            Err(SpectralError::NotCyclic { .. })
        ));
    }

    #[test]
    fn random_normal_spectra_map_well_inside_the_frame() {
        let mut rng = crate::gen::rng_from_seed(29);
        for _ in 0..5 {
            let (m, spectrum) = crate::gen::random_normal_matrix(8, &mut rng);
            let a = NormalMatrix::new(m).unwrap();
            let x = crate::gen::random_unit_vector(8, &mut rng);
            let model = build_model(&a, &x).unwrap();
            let points: Vec<Complex64> = model.measure.atoms().iter().map(|at| at.point).collect();
            let (frame, _) = wvnb_core::compact::normalize_spectrum(&points, 4).unwrap();
            for &z in &spectrum {
                let p = frame.embed(z);
                assert!(p.x >= 0.05 && p.x <= 0.95 && p.y >= 0.05 && p.y <= 0.95);
            }
        }
    }

    #[test]
    fn pushforward_singleton_and_pair() {
        let eigs = [Complex64::new(0.3, 0.4)];
        let (frame, table, mu) = model_chain(&eigs, &[1.0], 3);
        let pf = pushforward(&mu, &table, &frame).unwrap();
        assert_eq!(pf.gamma.len(), 1);
        assert!((pf.gamma.total_mass() - 1.0).abs() < 1e-15);

        let eigs = [Complex64::new(0.0, 1.0), Complex64::new(0.0, -1.0)];
        let (frame, table, mu) = model_chain(&eigs, &[0.5, 0.5], 3);
        let pf = pushforward(&mu, &table, &frame).unwrap();
        assert_eq!(pf.gamma.len(), 2);
        assert!((pf.gamma.total_mass() - 1.0).abs() < 1e-15);
        assert_ne!(pf.gamma.atoms()[0].point, pf.gamma.atoms()[1].point);
    }

    #[test]
    fn pushforward_counts_match_rasterized_cells() {
        let eigs: Vec<Complex64> = (0..8)
            .map(|k| {
                let t = 2.0 * std::f64::consts::PI * k as f64 / 8.0;
                Complex64::new(t.cos(), t.sin())
            })
            .collect();
        let weights = vec![0.125; 8];
        let (frame, table, mu) = model_chain(&eigs, &weights, 4);
        let pf = pushforward(&mu, &table, &frame).unwrap();
        assert_eq!(pf.gamma.len(), table.cover().len());
        assert!((pf.gamma.total_mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn atom_outside_cover_reports_depth_hint() {
        let eigs = [Complex64::new(0.1, 0.1)];
        let (frame, table, _) = model_chain(&eigs, &[1.0], 3);
        let stranger = AtomicMeasure::from_atoms(vec![Atom {
            point: Complex64::new(0.9, 0.9),
            weight: 1.0,
        }]);
        let err = pushforward(&stranger, &table, &frame).unwrap_err();
        assert!(err.to_string().contains("increase the depth"));
    }

    #[test]
    fn transport_singleton_is_the_identity() {
        let eigs = [Complex64::new(0.4, -0.2)];
        let (frame, table, mu) = model_chain(&eigs, &[1.0], 2);
        let pf = pushforward(&mu, &table, &frame).unwrap();
        let t = build_transport(&mu, &pf).unwrap();
        assert_eq!(t.dim(), 1);
        assert_eq!(t.matrix()[(0, 0)], 1.0);
        assert_eq!(t.unitarity_residual(), 0.0);
    }

    #[test]
    fn transport_is_a_weighted_permutation() {
        let eigs = [Complex64::new(0.0, 1.0), Complex64::new(0.0, -1.0)];
        let (frame, table, mu) = model_chain(&eigs, &[0.5, 0.5], 3);
        let pf = pushforward(&mu, &table, &frame).unwrap();
        let t = build_transport(&mu, &pf).unwrap();
        assert_eq!(t.unitarity_residual(), 0.0);
        let g = vec![Complex64::new(0.2, -0.7), Complex64::new(-1.3, 0.4)];
        assert!(t.isometry_defect(&g) <= 1e-15);
        let m = t.matrix();
        assert_eq!(m.row_sum().iter().filter(|&&s| s == 1.0).count(), 2);
    }

    #[test]
    fn transport_rejects_merged_atoms() {
        // Two nearby points share a cell at a coarse depth; the far corners
        // anchor the frame so normalization cannot separate them.
        let eigs = [
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 1.0),
            Complex64::new(0.4, 0.4),
            Complex64::new(0.4001, 0.4),
        ];
        let (frame, table, mu) = model_chain(&eigs, &[0.25; 4], 1);
        let pf = pushforward(&mu, &table, &frame).unwrap();
        assert_eq!(pf.gamma.len(), 3);
        assert!((pf.gamma.total_mass() - 1.0).abs() < 1e-15);
        assert!(matches!(
            build_transport(&mu, &pf),
            Err(SpectralError::MismatchedAtomCounts { mu: 4, gamma: 3 })
        ));
    }

    #[test]
    fn diagonal_model_holds_exact_endpoints() {
        let gamma = AtomicMeasure::from_atoms(vec![
            Atom {
                point: KParam { index: 1, depth: 1 },
                weight: 0.5,
            },
            Atom {
                point: KParam { index: 5, depth: 1 },
                weight: 0.5,
            },
        ]);
        let b = hermitian_model(&gamma);
        assert_eq!(b.diagonal(), vec![1.0 / 9.0, 5.0 / 9.0]);
        let m = b.matrix();
        assert_eq!(m[(0, 0)].re, 1.0 / 9.0);
        assert_eq!(m[(0, 1)], Complex64::new(0.0, 0.0));
    }

    #[test]
    fn reconstruct_singleton_within_bound() {
        let eigs = [Complex64::new(5.0, 0.0)];
        let (frame, table, mu) = model_chain(&eigs, &[1.0], 3);
        let pf = pushforward(&mu, &table, &frame).unwrap();
        let b = hermitian_model(&pf.gamma);
        let recon = reconstruct(&b.diagonal(), &table, &frame).unwrap();
        let bound = reconstruction_bound(&frame, 3);
        assert!((recon[0] - eigs[0]).norm() <= bound);
    }

    #[test]
    fn reconstruct_two_point_spectrum_and_depth_refinement() {
        let eigs = [Complex64::new(0.0, 1.0), Complex64::new(0.0, -1.0)];
        let mut previous: Option<f64> = None;
        for depth in [3u32, 4, 5] {
            let (frame, table, mu) = model_chain(&eigs, &[0.5, 0.5], depth);
            let pf = pushforward(&mu, &table, &frame).unwrap();
            let b = hermitian_model(&pf.gamma);
            let recon = reconstruct(&b.diagonal(), &table, &frame).unwrap();
            let err = mu
                .atoms()
                .iter()
                .zip(pf.atom_pairing.iter())
                .map(|(atom, &k)| (recon[k] - atom.point).norm())
                .fold(0.0f64, f64::max);
            let bound = reconstruction_bound(&frame, depth);
            assert!(err <= bound, "depth {depth}: {err} > {bound}");
            if let Some(prev) = previous {
                // One extra level never worsens the error by more than a
                // coarse cell diameter.
                assert!(err <= prev + bound * 3.0);
            }
            previous = Some(err);
        }
    }

    #[test]
    fn reconstruct_rejects_foreign_diagonal_entries() {
        let eigs = [Complex64::new(0.2, 0.3)];
        let (frame, table, _) = model_chain(&eigs, &[1.0], 2);
        let err = reconstruct(&[0.123456], &table, &frame).unwrap_err();
        assert!(matches!(err, SpectralError::EntryNotInPreimage { .. }));
    }
}
