//! Dense symmetric-matrix numerics: eigendecomposition, Gram-Schmidt,
//! canonical angles and whitening.
//!
//! Eigenvalues are always reported in ascending order and every eigenvector
//! has its first non-negligible component positive, so downstream results do
//! not depend on the sign choices of the underlying solver.

use std::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};

use crate::error::{validation, Error, Result};

/// Relative rank tolerance used when nothing more specific is known.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

const SYMMETRY_TOL: f64 = 1e-12;
const ORTHOGONALITY_TOL: f64 = 1e-10;
const UNIT_NORM_TOL: f64 = 1e-12;
const SIGN_EPS: f64 = 1e-10;

/// A real symmetric matrix.
///
/// Construction checks symmetry to `1e-12` relative to the largest entry and
/// then stores the exactly symmetrized average `(M + Mᵀ) / 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix(DMatrix<f64>);

impl SymMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(validation(format!(
                "matrix is {}x{}, not square",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.nrows() == 0 {
            return Err(validation("matrix has order 0"));
        }
        if m.iter().any(|x| !x.is_finite()) {
            return Err(validation("matrix has non-finite entries"));
        }
        let scale = m.amax();
        let asymmetry = (&m - m.transpose()).amax();
        if asymmetry > SYMMETRY_TOL * scale {
            return Err(validation(format!(
                "matrix is not symmetric (max |M - Mᵀ| = {asymmetry:e}, max |M| = {scale:e})"
            )));
        }
        Ok(Self::symmetrize(m))
    }

    /// Wraps a matrix that is symmetric up to rounding, averaging it with its
    /// transpose.
    pub(crate) fn symmetrize(m: DMatrix<f64>) -> Self {
        let t = m.transpose();
        SymMatrix((m + t) * 0.5)
    }

    pub fn zeros(order: usize) -> Self {
        SymMatrix(DMatrix::zeros(order, order))
    }

    pub fn identity(order: usize) -> Self {
        SymMatrix(DMatrix::identity(order, order))
    }

    /// `Σ vᵢ vᵢᵀ` over the columns of `m`.
    pub fn gram_of_columns(m: &DMatrix<f64>) -> Self {
        Self::symmetrize(m * m.transpose())
    }

    pub fn order(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    /// `xᵀ M x`.
    pub fn quadratic_form(&self, x: &DVector<f64>) -> f64 {
        x.dot(&(&self.0 * x))
    }

    /// `Aᵀ M A`.
    pub fn congruence(&self, a: &DMatrix<f64>) -> SymMatrix {
        Self::symmetrize(a.transpose() * &self.0 * a)
    }

    /// `M += w · v vᵀ`.
    pub fn add_outer(&mut self, v: &DVector<f64>, w: f64) {
        self.0.ger(w, v, v, 1.0);
    }

    /// Number of eigenvalues whose magnitude exceeds `rel_tol` times the
    /// largest magnitude.
    pub fn rank(&self, rel_tol: f64) -> usize {
        let eig = sym_eig(self);
        let max = eig.values.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        if max == 0.0 {
            return 0;
        }
        eig.values.iter().filter(|v| v.abs() > rel_tol * max).count()
    }

    /// Largest elementwise difference relative to the Frobenius norm of `self`.
    pub fn relative_difference(&self, other: &SymMatrix) -> f64 {
        let scale = self.frobenius_norm().max(f64::MIN_POSITIVE);
        (&self.0 - &other.0).amax() / scale
    }
}

impl Add<&SymMatrix> for &SymMatrix {
    type Output = SymMatrix;
    fn add(self, rhs: &SymMatrix) -> SymMatrix {
        SymMatrix(&self.0 + &rhs.0)
    }
}

impl Sub<&SymMatrix> for &SymMatrix {
    type Output = SymMatrix;
    fn sub(self, rhs: &SymMatrix) -> SymMatrix {
        SymMatrix(&self.0 - &rhs.0)
    }
}

impl Mul<f64> for &SymMatrix {
    type Output = SymMatrix;
    fn mul(self, rhs: f64) -> SymMatrix {
        SymMatrix(&self.0 * rhs)
    }
}

/// An orthonormal set of column vectors in an `ambient_dim`-dimensional space.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthoBasis {
    columns: DMatrix<f64>,
}

impl OrthoBasis {
    /// Validates orthonormality: unit norms within `1e-12`, pairwise inner
    /// products within `1e-10`.
    pub fn new(columns: DMatrix<f64>) -> Result<Self> {
        if columns.nrows() == 0 {
            return Err(validation("basis has ambient dimension 0"));
        }
        let gram = columns.transpose() * &columns;
        for i in 0..gram.nrows() {
            let norm = gram[(i, i)].sqrt();
            if (norm - 1.0).abs() > UNIT_NORM_TOL {
                return Err(validation(format!("basis column {i} has norm {norm}")));
            }
            for j in 0..i {
                if gram[(i, j)].abs() > ORTHOGONALITY_TOL {
                    return Err(validation(format!(
                        "basis columns {i} and {j} have inner product {:e}",
                        gram[(i, j)]
                    )));
                }
            }
        }
        Ok(OrthoBasis { columns })
    }

    pub(crate) fn from_columns_unchecked(columns: DMatrix<f64>) -> Self {
        debug_assert!(columns.nrows() > 0);
        OrthoBasis { columns }
    }

    pub fn empty(ambient_dim: usize) -> Self {
        OrthoBasis {
            columns: DMatrix::zeros(ambient_dim, 0),
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.columns.nrows()
    }

    pub fn dim(&self) -> usize {
        self.columns.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.dim() == 0
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.columns
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.columns
    }

    pub fn column(&self, i: usize) -> DVector<f64> {
        self.columns.column(i).into_owned()
    }

    pub fn columns(&self) -> impl Iterator<Item = DVector<f64>> + '_ {
        self.columns.column_iter().map(|c| c.into_owned())
    }

    /// Orthogonal projector `Φ Φᵀ`.
    pub fn projector(&self) -> SymMatrix {
        SymMatrix::gram_of_columns(&self.columns)
    }

    /// Coordinates `Φᵀ x`.
    pub fn coordinates(&self, x: &DVector<f64>) -> DVector<f64> {
        self.columns.tr_mul(x)
    }

    /// Maps coordinates back into the ambient space: `Φ y`.
    pub fn lift(&self, y: &DMatrix<f64>) -> DMatrix<f64> {
        &self.columns * y
    }
}

/// Full eigendecomposition of a symmetric matrix, ascending.
#[derive(Debug, Clone)]
pub struct EigResult {
    pub values: Vec<f64>,
    pub vectors: OrthoBasis,
}

impl EigResult {
    /// Eigenvectors of the `k` smallest eigenvalues, ascending.
    pub fn smallest(&self, k: usize) -> DMatrix<f64> {
        self.vectors.matrix().columns(0, k).into_owned()
    }

    /// Eigenvectors of the `k` largest eigenvalues, in descending order of
    /// eigenvalue.
    pub fn largest(&self, k: usize) -> DMatrix<f64> {
        let n = self.values.len();
        let mut out = DMatrix::zeros(self.vectors.ambient_dim(), k);
        for j in 0..k {
            out.set_column(j, &self.vectors.matrix().column(n - 1 - j));
        }
        out
    }

    pub fn largest_values(&self, k: usize) -> Vec<f64> {
        self.values.iter().rev().take(k).copied().collect()
    }
}

/// Flips `v` so its first component with magnitude above `1e-10` is positive.
pub(crate) fn fix_sign(v: &mut DVector<f64>) {
    if let Some(first) = v.iter().find(|x| x.abs() > SIGN_EPS) {
        if *first < 0.0 {
            v.neg_mut();
        }
    }
}

/// Symmetric eigendecomposition with ascending eigenvalues.
///
/// Ties keep the order produced by the solver, which is deterministic for a
/// given input.
pub fn sym_eig(m: &SymMatrix) -> EigResult {
    let n = m.order();
    let eig = SymmetricEigen::new(m.0.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let mut vectors = DMatrix::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        let mut v = eig.eigenvectors.column(i).into_owned();
        fix_sign(&mut v);
        vectors.set_column(k, &v);
    }
    EigResult {
        values: order.iter().map(|&i| eig.eigenvalues[i]).collect(),
        vectors: OrthoBasis::from_columns_unchecked(vectors),
    }
}

/// Modified Gram-Schmidt with one re-orthogonalization pass.
///
/// A vector whose residual after projecting out the accepted vectors is below
/// `tol` times its own norm is dropped, so the output dimension is the
/// numerical rank of the input.
pub fn gram_schmidt(vectors: &[DVector<f64>], tol: f64) -> Result<OrthoBasis> {
    let first = vectors
        .first()
        .ok_or_else(|| validation("gram_schmidt needs at least one vector"))?;
    let dim = first.len();
    if dim == 0 {
        return Err(validation("vectors have dimension 0"));
    }
    let mut accepted: Vec<DVector<f64>> = Vec::with_capacity(vectors.len().min(dim));
    for v in vectors {
        if v.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: v.len(),
            });
        }
        let norm = v.norm();
        if !norm.is_finite() {
            return Err(validation("vector has non-finite entries"));
        }
        if norm == 0.0 {
            continue;
        }
        let mut r = v.clone();
        for _ in 0..2 {
            for q in &accepted {
                let c = q.dot(&r);
                r.axpy(-c, q, 1.0);
            }
        }
        let rn = r.norm();
        if rn < tol * norm {
            continue;
        }
        accepted.push(r / rn);
    }
    let mut m = DMatrix::zeros(dim, accepted.len());
    for (j, q) in accepted.iter().enumerate() {
        m.set_column(j, q);
    }
    Ok(OrthoBasis::from_columns_unchecked(m))
}

/// [`gram_schmidt`] over the columns of a matrix.
pub fn gram_schmidt_columns(m: &DMatrix<f64>, tol: f64) -> Result<OrthoBasis> {
    let cols: Vec<DVector<f64>> = m.column_iter().map(|c| c.into_owned()).collect();
    gram_schmidt(&cols, tol)
}

/// Canonical angles between two subspaces together with the canonical
/// vector pairs.
#[derive(Debug, Clone)]
pub struct CanonicalPairs {
    /// Cosines in `[0, 1]`, descending.
    pub cosines: Vec<f64>,
    /// Canonical vectors `uᵢ` in the first subspace, one per column.
    pub u: DMatrix<f64>,
    /// Canonical vectors `vᵢ` in the second subspace with `uᵢᵀvᵢ ≥ 0`.
    pub v: DMatrix<f64>,
}

/// Canonical angles from the SVD of the cross inner-product matrix `UᵀV`.
///
/// Returns `min(dim U, dim V)` pairs.
pub fn canonical_angles(u: &OrthoBasis, v: &OrthoBasis) -> Result<CanonicalPairs> {
    if u.ambient_dim() != v.ambient_dim() {
        return Err(Error::DimensionMismatch {
            expected: u.ambient_dim(),
            got: v.ambient_dim(),
        });
    }
    let k = u.dim().min(v.dim());
    let ambient = u.ambient_dim();
    if k == 0 {
        return Ok(CanonicalPairs {
            cosines: Vec::new(),
            u: DMatrix::zeros(ambient, 0),
            v: DMatrix::zeros(ambient, 0),
        });
    }
    let cross = u.matrix().tr_mul(v.matrix());
    let svd = SVD::new(cross, true, true);
    let left = svd.u.expect("requested left singular vectors");
    let right_t = svd.v_t.expect("requested right singular vectors");
    let s = &svd.singular_values;

    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| s[b].total_cmp(&s[a]));

    let mut cosines = Vec::with_capacity(k);
    let mut uv = DMatrix::zeros(ambient, k);
    let mut vv = DMatrix::zeros(ambient, k);
    for (j, &i) in order.iter().enumerate() {
        let mut ui = u.matrix() * left.column(i);
        let mut vi = v.matrix() * right_t.row(i).transpose();
        ui /= ui.norm();
        vi /= vi.norm();
        if ui.dot(&vi) < 0.0 {
            vi.neg_mut();
        }
        cosines.push(s[i].clamp(0.0, 1.0));
        uv.set_column(j, &ui);
        vv.set_column(j, &vi);
    }
    Ok(CanonicalPairs {
        cosines,
        u: uv,
        v: vv,
    })
}

/// Cosines of the canonical angles only.
pub fn subspace_cosines(u: &OrthoBasis, v: &OrthoBasis) -> Result<Vec<f64>> {
    canonical_angles(u, v).map(|p| p.cosines)
}

/// Whitening map `A = V_r Λ_r^{-1/2}` of a positive semidefinite matrix.
///
/// Columns are ordered by descending eigenvalue.
#[derive(Debug, Clone)]
pub struct Whitening {
    map: DMatrix<f64>,
    retained: Vec<f64>,
}

impl Whitening {
    /// The `L × r` matrix `A` with `Aᵀ S A = E_r`.
    pub fn map(&self) -> &DMatrix<f64> {
        &self.map
    }

    pub fn rank(&self) -> usize {
        self.map.ncols()
    }

    /// Retained eigenvalues of `S`, descending.
    pub fn retained_eigenvalues(&self) -> &[f64] {
        &self.retained
    }

    /// Whitened coordinates `Aᵀ x`.
    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        self.map.tr_mul(x)
    }
}

/// Whitens `s`, keeping eigenvalues above `rank_tol` times the largest.
pub fn whitening(s: &SymMatrix, rank_tol: f64) -> Result<Whitening> {
    let eig = sym_eig(s);
    let fro = s.frobenius_norm();
    let min = eig.values[0];
    if min < -rank_tol * fro {
        return Err(validation(format!(
            "matrix is not positive semidefinite (eigenvalue {min:e})"
        )));
    }
    let max = *eig.values.last().expect("order > 0");
    if max <= 0.0 {
        return Err(validation("zero matrix cannot be whitened"));
    }
    let mut keep: Vec<usize> = (0..eig.values.len())
        .filter(|&i| eig.values[i] > rank_tol * max)
        .collect();
    keep.sort_by(|&a, &b| eig.values[b].total_cmp(&eig.values[a]));

    let mut map = DMatrix::zeros(s.order(), keep.len());
    let mut retained = Vec::with_capacity(keep.len());
    for (j, &i) in keep.iter().enumerate() {
        let lambda = eig.values[i];
        map.set_column(j, &(eig.vectors.matrix().column(i) / lambda.sqrt()));
        retained.push(lambda);
    }
    Ok(Whitening { map, retained })
}

/// Solution of `B d = λ W d` for symmetric `B` and positive definite `W`.
#[derive(Debug, Clone)]
pub struct GeneralizedEig {
    /// Descending.
    pub values: Vec<f64>,
    /// `W`-orthonormal eigenvectors, one per column, aligned with `values`.
    pub vectors: DMatrix<f64>,
}

/// Generalized symmetric eigenproblem through whitening of `W`.
///
/// Fails with [`Error::SingularWithin`] when `W` is rank deficient at
/// `rank_tol`.
pub fn generalized_eig(b: &SymMatrix, w: &SymMatrix, rank_tol: f64) -> Result<GeneralizedEig> {
    if b.order() != w.order() {
        return Err(Error::DimensionMismatch {
            expected: w.order(),
            got: b.order(),
        });
    }
    if w.frobenius_norm() == 0.0 {
        return Err(Error::SingularWithin {
            rank: 0,
            order: w.order(),
        });
    }
    let white = whitening(w, rank_tol)?;
    if white.rank() < w.order() {
        return Err(Error::SingularWithin {
            rank: white.rank(),
            order: w.order(),
        });
    }
    let reduced = b.congruence(white.map());
    let eig = sym_eig(&reduced);
    let n = eig.values.len();
    let vectors = white.map() * eig.largest(n);
    Ok(GeneralizedEig {
        values: eig.largest_values(n),
        vectors,
    })
}

/// Nonzero eigenpairs of `scale · X Xᵀ`, largest first.
///
/// When `X` has fewer columns than rows the eigenvectors are obtained from
/// the small Gram matrix `scale · XᵀX` and lifted, so no `L × L` matrix is
/// formed. Eigenvalues at or below `rank_tol` times the largest are dropped.
pub(crate) fn scatter_eigenpairs(
    x: &DMatrix<f64>,
    scale: f64,
    rank_tol: f64,
) -> (Vec<f64>, DMatrix<f64>) {
    let (l, n) = x.shape();
    if n < l {
        let gram = SymMatrix::symmetrize(x.tr_mul(x) * scale);
        let eig = sym_eig(&gram);
        let max = eig.values.last().copied().unwrap_or(0.0);
        let mut values = Vec::new();
        let mut lifted = Vec::new();
        for j in (0..n).rev() {
            let lambda = eig.values[j];
            if max <= 0.0 || lambda <= rank_tol * max {
                break;
            }
            // ‖X w‖² = λ / scale for a unit eigenvector w of scale·XᵀX
            let mut phi = x * eig.vectors.matrix().column(j);
            phi /= (lambda / scale).sqrt();
            values.push(lambda);
            lifted.push(phi);
        }
        let basis = gram_schmidt(&lifted, DEFAULT_RANK_TOL)
            .map(OrthoBasis::into_matrix)
            .unwrap_or_else(|_| DMatrix::zeros(l, 0));
        let mut vectors = basis;
        values.truncate(vectors.ncols());
        for mut c in vectors.column_iter_mut() {
            let mut v = c.clone_owned();
            fix_sign(&mut v);
            c.copy_from(&v);
        }
        (values, vectors)
    } else {
        let r = SymMatrix::symmetrize(x * x.transpose() * scale);
        let eig = sym_eig(&r);
        let max = eig.values.last().copied().unwrap_or(0.0);
        let count = if max <= 0.0 {
            0
        } else {
            eig.values.iter().filter(|&&v| v > rank_tol * max).count()
        };
        (eig.largest_values(count), eig.largest(count))
    }
}

/// Largest eigenvalue and its unit eigenvector of `scale · X Xᵀ` by power
/// iteration, without forming any square matrix.
///
/// Iterates until the eigen-residual `‖R v − λ v‖` is at most `tol · λ`.
/// Returns `None` when `X` is zero or the iteration does not converge within
/// `max_iter` steps (e.g. a repeated leading eigenvalue). The sign is not
/// normalized.
pub fn leading_scatter_eigenpair(
    x: &DMatrix<f64>,
    scale: f64,
    tol: f64,
    max_iter: usize,
) -> Option<(f64, DVector<f64>)> {
    let mut v: DVector<f64> = x.column_sum();
    if v.norm() == 0.0 {
        v = x.column_iter().find(|c| c.norm() > 0.0)?.into_owned();
    }
    v /= v.norm();
    for _ in 0..max_iter {
        let w = x * x.tr_mul(&v) * scale;
        let lambda = v.dot(&w);
        if !(lambda > 0.0) {
            return None;
        }
        let residual = (&w - &v * lambda).norm();
        let wn = w.norm();
        v = w / wn;
        if residual <= tol * lambda {
            return Some((lambda, v));
        }
    }
    None
}


#[cfg(test)]
mod tests {
    use super::test_util::*;
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn power_iteration_matches_full_decomposition() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for (l, n) in [(40, 10), (10, 40)] {
            let mut x = gaussian_matrix(l, n, &mut rng);
            for mut c in x.column_iter_mut() {
                c[0] += 4.0;
            }
            let (values, vectors) = scatter_eigenpairs(&x, 1.0 / n as f64, DEFAULT_RANK_TOL);
            let (lambda, v) = leading_scatter_eigenpair(&x, 1.0 / n as f64, 1e-13, 10_000).unwrap();
            assert!((lambda - values[0]).abs() <= 1e-12 * values[0]);
            assert!(1.0 - v.dot(&vectors.column(0)).abs() < 1e-12);
        }
        assert!(leading_scatter_eigenpair(&DMatrix::zeros(3, 2), 1.0, 1e-13, 10).is_none());
    }

    fn sym(rows: &[&[f64]]) -> SymMatrix {
        let n = rows.len();
        SymMatrix::new(DMatrix::from_fn(n, n, |i, j| rows[i][j])).unwrap()
    }

    #[test]
    fn eig_of_identity_is_standard_basis() {
        let eig = sym_eig(&SymMatrix::identity(2));
        assert_eq!(eig.values, vec![1.0, 1.0]);
        assert_eq!(eig.vectors.matrix(), &DMatrix::identity(2, 2));
    }

    #[test]
    fn eig_of_analytic_2x2() {
        let eig = sym_eig(&sym(&[&[2.0, -1.0], &[-1.0, 2.0]]));
        assert!((eig.values[0] - 1.0).abs() < 1e-14);
        assert!((eig.values[1] - 3.0).abs() < 1e-14);
        // sign convention: first nonzero component positive
        for v in eig.vectors.columns() {
            assert!(v[0] > 0.0);
        }
    }

    #[test]
    fn eig_of_standard_difference_autocorrelation() {
        // Σ (e_i - e_j)(e_i - e_j)ᵀ over i < j for C = 3
        let m = sym(&[&[2.0, -1.0, -1.0], &[-1.0, 2.0, -1.0], &[-1.0, -1.0, 2.0]]);
        let eig = sym_eig(&m);
        let expected = [0.0, 3.0, 3.0];
        for (v, e) in eig.values.iter().zip(expected) {
            assert!((v - e).abs() < 1e-13, "{v} vs {e}");
        }
    }

    #[test]
    fn non_symmetric_input_is_rejected() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        assert!(matches!(SymMatrix::new(m), Err(Error::Validation(_))));
        let rect = DMatrix::<f64>::zeros(2, 3);
        assert!(SymMatrix::new(rect).is_err());
    }

    #[test]
    fn eig_reconstructs_random_matrices_up_to_order_200() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for &n in &[1usize, 2, 7, 50, 200] {
            let g = gaussian_matrix(n, n, &mut rng);
            let m = SymMatrix::symmetrize(g);
            let eig = sym_eig(&m);
            let v = eig.vectors.matrix();
            let lambda = DMatrix::from_diagonal(&DVector::from_vec(eig.values.clone()));
            let recon = v * lambda * v.transpose();
            let err = (recon - m.matrix()).norm();
            assert!(err <= 1e-8 * m.frobenius_norm(), "n={n} err={err:e}");
            for w in eig.values.windows(2) {
                assert!(w[0] <= w[1]);
            }
            for (k, col) in v.column_iter().enumerate() {
                let resid = (m.matrix() * col - col * eig.values[k]).norm();
                assert!(resid <= 1e-8 * m.frobenius_norm());
            }
        }
    }

    #[test]
    fn gram_schmidt_examples() {
        let b = gram_schmidt(
            &[DVector::from_vec(vec![1.0, 0.0]), DVector::from_vec(vec![1.0, 1.0])],
            1e-10,
        )
        .unwrap();
        assert_eq!(b.dim(), 2);
        assert!((b.matrix() - DMatrix::<f64>::identity(2, 2)).amax() < 1e-15);

        let collinear = gram_schmidt(
            &[DVector::from_vec(vec![1.0, 0.0]), DVector::from_vec(vec![2.0, 0.0])],
            1e-10,
        )
        .unwrap();
        assert_eq!(collinear.dim(), 1);
        assert_eq!(collinear.column(0), DVector::from_vec(vec![1.0, 0.0]));

        assert!(matches!(gram_schmidt(&[], 1e-10), Err(Error::Validation(_))));
        assert!(matches!(
            gram_schmidt(&[DVector::zeros(2), DVector::zeros(3)], 1e-10),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn gram_schmidt_output_dimension_matches_svd_rank() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        // full rank: 5 vectors in R³
        let x = gaussian_matrix(3, 5, &mut rng);
        let oracle_rank = SVD::new(x.clone(), false, false).rank(1e-10);
        assert_eq!(oracle_rank, 3);
        let b = gram_schmidt_columns(&x, 1e-10).unwrap();
        assert_eq!(b.dim(), oracle_rank);
        OrthoBasis::new(b.into_matrix()).unwrap();

        // rank 2 in R⁶ built from two generators
        let gens = gaussian_matrix(6, 2, &mut rng);
        let x = &gens * gaussian_matrix(2, 5, &mut rng);
        let oracle_rank = SVD::new(x.clone(), false, false).rank(1e-9 * x.norm());
        assert_eq!(gram_schmidt_columns(&x, 1e-9).unwrap().dim(), oracle_rank);
    }

    #[test]
    fn canonical_angle_of_lines_at_sixty_degrees() {
        let theta = 60f64.to_radians();
        let u = OrthoBasis::new(DMatrix::from_column_slice(2, 1, &[1.0, 0.0])).unwrap();
        let v =
            OrthoBasis::new(DMatrix::from_column_slice(2, 1, &[theta.cos(), theta.sin()])).unwrap();
        let pairs = canonical_angles(&u, &v).unwrap();
        assert!((pairs.cosines[0] - 0.5).abs() < 1e-15);
        assert!(pairs.u.column(0).dot(&pairs.v.column(0)) >= 0.0);
    }

    #[test]
    fn canonical_angles_of_identical_spans_are_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = random_basis(7, 3, &mut rng);
        let rot = random_basis(3, 3, &mut rng);
        let v = OrthoBasis::new(u.matrix() * rot.matrix()).unwrap();
        for c in subspace_cosines(&u, &v).unwrap() {
            assert!((c - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn canonical_angles_reject_dimension_mismatch() {
        let u = OrthoBasis::new(DMatrix::identity(3, 1)).unwrap();
        let v = OrthoBasis::new(DMatrix::identity(4, 1)).unwrap();
        assert!(matches!(
            canonical_angles(&u, &v),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    /// Largest cosine between two subspaces by alternating projections,
    /// deflating previously found pairs.
    fn alternating_projection_cosines(u: &DMatrix<f64>, v: &DMatrix<f64>) -> Vec<f64> {
        let k = u.ncols().min(v.ncols());
        let mut pu = u * u.transpose();
        let mut pv = v * v.transpose();
        let mut out = Vec::new();
        for _ in 0..k {
            // start from a deterministic vector inside U
            let mut x = pu.column_sum();
            if x.norm() < 1e-12 {
                x = pu.column(0).into_owned();
            }
            x /= x.norm();
            let mut y = x.clone();
            let mut last = -1.0;
            for _ in 0..200_000 {
                y = &pv * &x;
                let ny = y.norm();
                y /= ny;
                x = &pu * &y;
                let nx = x.norm();
                x /= nx;
                let c = x.dot(&y);
                if (c - last).abs() < 1e-16 {
                    break;
                }
                last = c;
            }
            out.push(x.dot(&y).abs());
            pu -= &x * x.transpose();
            pv -= &y * y.transpose();
        }
        out
    }

    #[test]
    fn canonical_angles_match_alternating_projection_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for _ in 0..3 {
            let u = random_basis(10, 3, &mut rng);
            let v = random_basis(10, 3, &mut rng);
            let got = subspace_cosines(&u, &v).unwrap();
            let oracle = alternating_projection_cosines(u.matrix(), v.matrix());
            for (g, o) in got.iter().zip(&oracle) {
                assert!((g - o).abs() < 1e-8, "svd {g} vs oracle {o}");
            }
        }
    }

    #[test]
    fn whitening_examples() {
        let a = whitening(&SymMatrix::identity(3), DEFAULT_RANK_TOL).unwrap();
        assert_eq!(a.map(), &DMatrix::identity(3, 3));

        let s = SymMatrix::new(DMatrix::from_diagonal(&DVector::from_vec(vec![4.0, 1.0]))).unwrap();
        let a = whitening(&s, DEFAULT_RANK_TOL).unwrap();
        let expected = DMatrix::from_diagonal(&DVector::from_vec(vec![0.5, 1.0]));
        assert!((a.map() - expected).amax() < 1e-15);
    }

    #[test]
    fn whitening_of_summed_projectors_is_identity_on_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut s = SymMatrix::zeros(9);
        for _ in 0..3 {
            let b = random_basis(9, 2, &mut rng);
            s = &s + &b.projector();
        }
        let a = whitening(&s, DEFAULT_RANK_TOL).unwrap();
        assert_eq!(a.rank(), 6);
        let white = s.congruence(a.map());
        assert!((white.matrix() - DMatrix::<f64>::identity(6, 6)).norm() <= 1e-8);

        // whitening the whitened matrix changes nothing
        let again = whitening(&white, DEFAULT_RANK_TOL).unwrap();
        let twice = white.congruence(again.map());
        assert!((twice.matrix() - DMatrix::<f64>::identity(6, 6)).norm() <= 1e-8);
        // the second map is orthogonal
        let m = again.map();
        assert!((m.transpose() * m - DMatrix::<f64>::identity(6, 6)).norm() <= 1e-8);
    }

    #[test]
    fn whitening_rejects_indefinite_matrix() {
        let s = SymMatrix::new(DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -0.5]))).unwrap();
        assert!(matches!(whitening(&s, DEFAULT_RANK_TOL), Err(Error::Validation(_))));
    }

    #[test]
    fn generalized_eig_reports_singular_within() {
        let b = SymMatrix::identity(2);
        let w = SymMatrix::new(DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.0]))).unwrap();
        assert!(matches!(
            generalized_eig(&b, &w, DEFAULT_RANK_TOL),
            Err(Error::SingularWithin { rank: 1, order: 2 })
        ));
    }

    #[test]
    fn thin_and_direct_scatter_paths_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x = gaussian_matrix(12, 4, &mut rng);
        let (thin_vals, thin_vecs) = scatter_eigenpairs(&x, 0.25, DEFAULT_RANK_TOL);
        let direct = sym_eig(&SymMatrix::symmetrize(&x * x.transpose() * 0.25));
        assert_eq!(thin_vals.len(), 4);
        for (k, v) in thin_vals.iter().enumerate() {
            assert!((v - direct.values[11 - k]).abs() < 1e-12);
            let d = direct.vectors.column(11 - k);
            assert!((thin_vecs.column(k).dot(&d).abs() - 1.0).abs() < 1e-10);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn canonical_angles_symmetric_and_basis_invariant(seed in any::<u64>(), k in 1usize..4) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let u = random_basis(8, k, &mut rng);
            let v = random_basis(8, k, &mut rng);
            let uv = subspace_cosines(&u, &v).unwrap();
            let vu = subspace_cosines(&v, &u).unwrap();
            let rot = random_basis(k, k, &mut rng);
            let u2 = OrthoBasis::new(u.matrix() * rot.matrix()).unwrap();
            let rotated = subspace_cosines(&u2, &v).unwrap();
            for i in 0..k {
                prop_assert!((uv[i] - vu[i]).abs() < 1e-12);
                prop_assert!((uv[i] - rotated[i]).abs() < 1e-12);
                prop_assert!((0.0..=1.0).contains(&uv[i]));
            }
        }
    }
}
