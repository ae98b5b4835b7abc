//! Small dense complex linear algebra.
//!
//! Everything here lives in dimension 2 through [`MAX_DIM`]. The types are thin
//! validated wrappers over `nalgebra` matrices; the eigensolver is nalgebra's
//! Hermitian QR iteration, which is deterministic for identical input bits.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Largest supported Hilbert space dimension (covers C^3 x C^3).
pub const MAX_DIM: usize = 9;
/// Smallest supported Hilbert space dimension.
pub const MIN_DIM: usize = 2;

pub const HERMITIAN_TOL: f64 = 1e-12;
pub const TRACE_TOL: f64 = 1e-10;
pub const POSITIVITY_TOL: f64 = 1e-10;
pub const ORTHONORMAL_TOL: f64 = 1e-10;
pub const UNIT_NORM_TOL: f64 = 1e-12;
/// Eigenvalues closer than this are treated as one degenerate eigenvalue.
pub const EIGEN_MERGE_TOL: f64 = 1e-9;
/// Merged eigenvalues this close to an integer are snapped onto it.
const INTEGER_SNAP_TOL: f64 = 1e-10;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

pub(crate) fn check_dim(dim: usize) -> Result<()> {
    if (MIN_DIM..=MAX_DIM).contains(&dim) {
        Ok(())
    } else {
        Err(Error::UnsupportedDimension(dim))
    }
}

/// A square complex matrix of dimension 2..=9.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix(DMatrix<C64>);

impl ComplexMatrix {
    /// Builds a matrix from row-major entries.
    pub fn from_rows(dim: usize, entries: &[C64]) -> Result<Self> {
        check_dim(dim)?;
        if entries.len() != dim * dim {
            return Err(Error::Domain(format!(
                "expected {} entries for a {dim}x{dim} matrix, got {}",
                dim * dim,
                entries.len()
            )));
        }
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Domain("matrix entries must be finite".into()));
        }
        Ok(Self(DMatrix::from_row_slice(dim, dim, entries)))
    }

    pub fn identity(dim: usize) -> Self {
        Self(DMatrix::identity(dim, dim))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.0[(row, col)]
    }

    pub fn inner(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    pub fn mul(&self, other: &Self) -> Self {
        Self(&self.0 * &other.0)
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (&self.0 - &other.0).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Spectral norm (largest singular value).
    pub fn operator_norm(&self) -> f64 {
        operator_norm(&self.0)
    }
}

/// Spectral norm of an arbitrary (possibly rectangular) complex matrix.
pub(crate) fn operator_norm(m: &DMatrix<C64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    let gram = if m.nrows() <= m.ncols() { m * m.adjoint() } else { m.adjoint() * m };
    let (values, _) = eigh(&gram);
    values.last().copied().unwrap_or(0.0).max(0.0).sqrt()
}

/// Eigen-decomposition of a Hermitian matrix: eigenvalues ascending, matching
/// eigenvectors as columns.
pub(crate) fn eigh(m: &DMatrix<C64>) -> (Vec<f64>, DMatrix<C64>) {
    let n = m.nrows();
    // Symmetrize so the solver only ever sees an exactly Hermitian input.
    let h = (m + m.adjoint()).scale(0.5);
    let eig = h.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

fn hermitian_defect(m: &DMatrix<C64>) -> f64 {
    (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// A self-adjoint operator.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianOperator(ComplexMatrix);

impl HermitianOperator {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        let defect = hermitian_defect(&matrix.0);
        if defect > HERMITIAN_TOL {
            return Err(Error::InvariantViolation(format!("matrix is not Hermitian (defect {defect:e})")));
        }
        Ok(Self(matrix))
    }

    pub fn from_rows(dim: usize, entries: &[C64]) -> Result<Self> {
        Self::new(ComplexMatrix::from_rows(dim, entries)?)
    }

    /// Real diagonal operator.
    pub fn diagonal(values: &[f64]) -> Result<Self> {
        check_dim(values.len())?;
        let d = DVector::from_iterator(values.len(), values.iter().map(|&v| C64::new(v, 0.0)));
        Ok(Self(ComplexMatrix(DMatrix::from_diagonal(&d))))
    }

    pub fn identity(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self(ComplexMatrix::identity(dim)))
    }

    /// Rank-one projector onto the span of `vector` (normalized internally).
    pub fn projector_onto(vector: &[C64]) -> Result<Self> {
        check_dim(vector.len())?;
        let v = DVector::from_column_slice(vector);
        let norm = v.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::Domain("cannot project onto a zero vector".into()));
        }
        let v = v.unscale(norm);
        Ok(Self(ComplexMatrix(&v * v.adjoint())))
    }

    /// Wraps a matrix already known to be Hermitian up to rounding,
    /// symmetrizing away the rounding.
    pub(crate) fn from_inner_symmetrized(m: DMatrix<C64>) -> Self {
        Self(ComplexMatrix((&m + m.adjoint()).scale(0.5)))
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn inner(&self) -> &DMatrix<C64> {
        &self.0 .0
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self(ComplexMatrix(self.inner().scale(factor)))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        same_dim(self.dim(), other.dim())?;
        Ok(Self(ComplexMatrix(self.inner() + other.inner())))
    }

    /// `A·B` for commuting `A`, `B`; fails if the product is not Hermitian.
    pub fn commuting_product(&self, other: &Self) -> Result<Self> {
        same_dim(self.dim(), other.dim())?;
        Self::new(self.0.mul(&other.0))
    }

    pub fn square(&self) -> Self {
        Self::from_inner_symmetrized(self.inner() * self.inner())
    }

    /// Operator norm of the commutator `[A, B]`.
    pub fn commutator_norm(&self, other: &Self) -> Result<f64> {
        same_dim(self.dim(), other.dim())?;
        let (a, b) = (self.inner(), other.inner());
        Ok(operator_norm(&(a * b - b * a)))
    }

    /// Returns `c` if this operator equals `c·I` within `tol`.
    pub fn as_scalar(&self, tol: f64) -> Option<f64> {
        let m = self.inner();
        let c = m[(0, 0)].re;
        for r in 0..m.nrows() {
            for col in 0..m.ncols() {
                let expected = if r == col { C64::new(c, 0.0) } else { ZERO };
                if (m[(r, col)] - expected).norm() > tol {
                    return None;
                }
            }
        }
        Some(c)
    }
}

/// A density operator: Hermitian, positive semidefinite, unit trace.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityOperator(ComplexMatrix);

impl DensityOperator {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        let h = HermitianOperator::new(matrix)?;
        let trace = h.trace();
        if (trace - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvariantViolation(format!("density operator trace is {trace}, expected 1")));
        }
        // |rho_ij|^2 <= rho_ii rho_jj <= 1 for any state.
        if h.inner().iter().any(|z| z.norm() > 1.0 + TRACE_TOL) {
            return Err(Error::InvariantViolation("density operator entry exceeds 1 in modulus".into()));
        }
        let (values, _) = eigh(h.inner());
        if let Some(&min) = values.first() {
            if !(min >= -POSITIVITY_TOL) {
                return Err(Error::InvariantViolation(format!("density operator has negative eigenvalue {min:e}")));
            }
        }
        Ok(Self(h.0))
    }

    pub fn from_rows(dim: usize, entries: &[C64]) -> Result<Self> {
        Self::new(ComplexMatrix::from_rows(dim, entries)?)
    }

    /// Pure state `|v><v|`, normalizing `v`.
    pub fn pure(vector: &[C64]) -> Result<Self> {
        Ok(Self(HermitianOperator::projector_onto(vector)?.0))
    }

    /// The maximally mixed state `I/dim`.
    pub fn maximally_mixed(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self(ComplexMatrix(DMatrix::identity(dim, dim).unscale(dim as f64))))
    }

    /// Even mixture of two states.
    pub fn mix(&self, other: &Self, weight: f64) -> Result<Self> {
        same_dim(self.dim(), other.dim())?;
        if !(0.0..=1.0).contains(&weight) {
            return Err(Error::Domain(format!("mixing weight {weight} outside [0, 1]")));
        }
        Ok(Self(ComplexMatrix(self.inner().scale(weight) + other.inner().scale(1.0 - weight))))
    }

    /// Wraps a matrix produced by a trace-preserving update; rounding in the
    /// Hermitian part is symmetrized away and the trace renormalized.
    pub(crate) fn from_inner_normalized(m: DMatrix<C64>) -> Self {
        let h = (&m + m.adjoint()).scale(0.5);
        let t = h.trace().re;
        Self(ComplexMatrix(h.unscale(t)))
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn inner(&self) -> &DMatrix<C64> {
        &self.0 .0
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    /// `<v|rho|v>` for a column vector `v`.
    pub(crate) fn weight_of(&self, v: &DVector<C64>) -> f64 {
        (v.adjoint() * self.inner() * v)[(0, 0)].re
    }
}

/// An orthonormal basis stored as the columns of a unitary matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct OrthonormalBasis(DMatrix<C64>);

impl OrthonormalBasis {
    /// Builds a basis from column vectors, checking orthonormality.
    pub fn from_vectors(vectors: &[Vec<C64>]) -> Result<Self> {
        let dim = vectors.len();
        check_dim(dim)?;
        if vectors.iter().any(|v| v.len() != dim) {
            return Err(Error::Domain("basis vectors must all have length dim".into()));
        }
        let m = DMatrix::from_fn(dim, dim, |r, c| vectors[c][r]);
        Self::from_columns(m)
    }

    pub(crate) fn from_columns(m: DMatrix<C64>) -> Result<Self> {
        check_dim(m.nrows())?;
        if !m.is_square() {
            return Err(Error::Domain("basis matrix must be square".into()));
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Domain("basis entries must be finite".into()));
        }
        let gram = m.adjoint() * &m;
        for r in 0..gram.nrows() {
            let norm = gram[(r, r)].re.sqrt();
            if (norm - 1.0).abs() > UNIT_NORM_TOL {
                return Err(Error::InvariantViolation(format!("basis vector {r} has norm {norm}")));
            }
            for c in 0..r {
                if gram[(r, c)].norm() >= ORTHONORMAL_TOL {
                    return Err(Error::InvariantViolation(format!("basis vectors {c} and {r} are not orthogonal")));
                }
            }
        }
        Ok(Self(m))
    }

    pub fn computational(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self(DMatrix::identity(dim, dim)))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn vector(&self, i: usize) -> DVector<C64> {
        self.0.column(i).into_owned()
    }

    pub fn columns(&self) -> &DMatrix<C64> {
        &self.0
    }

    /// Rank-one projector onto the `i`-th vector.
    pub fn projector(&self, i: usize) -> HermitianOperator {
        let v = self.vector(i);
        HermitianOperator(ComplexMatrix(&v * v.adjoint()))
    }

    /// Projector onto the span of the selected vectors.
    pub fn subset_projector(&self, indices: impl IntoIterator<Item = usize>) -> HermitianOperator {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for i in indices {
            let v = self.vector(i);
            m += &v * v.adjoint();
        }
        HermitianOperator(ComplexMatrix(m))
    }

    /// `sum_i a_i P_i`.
    pub fn operator(&self, eigenvalues: &[f64]) -> HermitianOperator {
        let d = DVector::from_iterator(eigenvalues.len(), eigenvalues.iter().map(|&a| C64::new(a, 0.0)));
        let m = &self.0 * DMatrix::from_diagonal(&d) * self.0.adjoint();
        HermitianOperator::from_inner_symmetrized(m)
    }

    /// Overlap matrix `O[a][j] = <self_a | other_j>`.
    pub(crate) fn overlaps(&self, other: &Self) -> DMatrix<C64> {
        self.0.adjoint() * &other.0
    }
}

/// One eigenvalue and its spectral projector.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralComponent {
    pub eigenvalue: f64,
    pub projector: HermitianOperator,
}

/// An eigenvalue together with an orthonormal basis of its eigenspace
/// (columns of `vectors`).
#[derive(Clone, Debug)]
pub(crate) struct Eigenspace {
    pub eigenvalue: f64,
    pub vectors: DMatrix<C64>,
}

fn snap(value: f64) -> f64 {
    let r = value.round();
    if (value - r).abs() < INTEGER_SNAP_TOL {
        r
    } else {
        value
    }
}

/// Groups eigenpairs into eigenspaces, merging eigenvalues within
/// [`EIGEN_MERGE_TOL`] of their cluster's first member.
pub(crate) fn eigenspaces(op: &HermitianOperator) -> Vec<Eigenspace> {
    let (values, vectors) = eigh(op.inner());
    let n = values.len();
    let mut out = Vec::new();
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && values[end] - values[start] <= EIGEN_MERGE_TOL {
            end += 1;
        }
        let mean = values[start..end].iter().sum::<f64>() / (end - start) as f64;
        out.push(Eigenspace { eigenvalue: snap(mean), vectors: vectors.columns(start, end - start).into_owned() });
        start = end;
    }
    out
}

/// Spectral decomposition `A = sum_i a_i P_i` with eigenvalues ascending and
/// degenerate eigenvalues merged into higher-rank projectors.
pub fn spectral_decomposition(op: &HermitianOperator) -> Vec<SpectralComponent> {
    eigenspaces(op)
        .into_iter()
        .map(|space| SpectralComponent {
            eigenvalue: space.eigenvalue,
            projector: HermitianOperator::from_inner_symmetrized(&space.vectors * space.vectors.adjoint()),
        })
        .collect()
}

/// Distinct eigenvalues, ascending.
pub fn spectrum(op: &HermitianOperator) -> Vec<f64> {
    eigenspaces(op).into_iter().map(|s| s.eigenvalue).collect()
}

/// Kronecker product `a ⊗ b`.
pub fn tensor(a: &HermitianOperator, b: &HermitianOperator) -> Result<HermitianOperator> {
    let dim = a.dim() * b.dim();
    if dim > MAX_DIM {
        return Err(Error::UnsupportedDimension(dim));
    }
    Ok(HermitianOperator(ComplexMatrix(a.inner().kronecker(b.inner()))))
}

/// Kronecker product of two vectors.
pub fn tensor_vectors(a: &[C64], b: &[C64]) -> Vec<C64> {
    a.iter().flat_map(|&x| b.iter().map(move |&y| x * y)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Pauli {
    X,
    Y,
    Z,
}

pub fn pauli(which: Pauli) -> HermitianOperator {
    let entries = match which {
        Pauli::X => [ZERO, ONE, ONE, ZERO],
        Pauli::Y => [ZERO, -I, I, ZERO],
        Pauli::Z => [ONE, ZERO, ZERO, -ONE],
    };
    HermitianOperator(ComplexMatrix(DMatrix::from_row_slice(2, 2, &entries)))
}

/// Spin-1 component `S_r = r_x S_x + r_y S_y + r_z S_z` in the standard
/// representation (basis ordered m = +1, 0, -1).
pub fn spin1_component(axis: [f64; 3]) -> Result<HermitianOperator> {
    let norm = axis.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !((norm - 1.0).abs() <= 1e-10) {
        return Err(Error::Domain(format!("spin axis must be a unit vector (norm {norm})")));
    }
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let sx = [ZERO, ONE, ZERO, ONE, ZERO, ONE, ZERO, ONE, ZERO].map(|z| z * s);
    let sy = [ZERO, -I, ZERO, I, ZERO, -I, ZERO, I, ZERO].map(|z| z * s);
    let sz = [ONE, ZERO, ZERO, ZERO, ZERO, ZERO, ZERO, ZERO, -ONE];
    let entries: Vec<C64> = (0..9).map(|k| sx[k] * axis[0] + sy[k] * axis[1] + sz[k] * axis[2]).collect();
    Ok(HermitianOperator::from_inner_symmetrized(DMatrix::from_row_slice(3, 3, &entries)))
}

/// `Tr(rho·A)`.
pub fn born_expectation(rho: &DensityOperator, op: &HermitianOperator) -> Result<f64> {
    same_dim(rho.dim(), op.dim())?;
    let t = (rho.inner() * op.inner()).trace();
    if t.im.abs() >= 1e-10 {
        return Err(Error::InvariantViolation(format!("Tr(rho A) has imaginary part {:e}", t.im)));
    }
    Ok(t.re)
}

pub(crate) fn same_dim(a: usize, b: usize) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::Domain(format!("dimension mismatch: {a} vs {b}")))
    }
}

/// Random Hermitian matrix with entries uniform in the unit square.
pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> HermitianOperator {
    let mut m = DMatrix::zeros(dim, dim);
    for r in 0..dim {
        m[(r, r)] = C64::new(rng.random_range(-1.0..1.0), 0.0);
        for c in 0..r {
            let z = C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            m[(r, c)] = z;
            m[(c, r)] = z.conj();
        }
    }
    HermitianOperator(ComplexMatrix(m))
}

/// Random full-rank density operator `G G† / Tr(G G†)`.
pub fn random_density<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> DensityOperator {
    let g = DMatrix::from_fn(dim, dim, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    DensityOperator::from_inner_normalized(&g * g.adjoint())
}

/// Random unit vector.
pub fn random_unit_vector<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Vec<C64> {
    let v: Vec<C64> = (0..dim).map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
    let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|z| z / n).collect()
}

/// `exp(i·t·H)` for Hermitian `H`.
pub(crate) fn unitary_exp(h: &HermitianOperator, t: f64) -> DMatrix<C64> {
    let (values, vectors) = eigh(h.inner());
    let phases = DVector::from_iterator(values.len(), values.iter().map(|&v| C64::from_polar(1.0, t * v)));
    &vectors * DMatrix::from_diagonal(&phases) * vectors.adjoint()
}
