//! Class subspaces by uncentered PCA, the difference subspace of two classes
//! and the generalized difference subspace (GDS) of many.
//!
//! Everything that depends on the sum matrix `G = Σ P_c` is computed inside
//! the sum subspace, the span of all class basis vectors. `G` vanishes on its
//! orthogonal complement, so restricting to it loses nothing and keeps the
//! "smallest eigenvalue" selections from picking up null directions.

use log::warn;
use nalgebra::{DMatrix, DVector};

use crate::dataset::ClassData;
use crate::error::{validation, Error, Result};
use crate::fisher::{self, Rung, ScatterPair};
use crate::linalg::{
    canonical_angles, gram_schmidt, scatter_eigenpairs, sym_eig, OrthoBasis, SymMatrix,
    DEFAULT_RANK_TOL,
};

/// Cosines within this distance of 1, and eigenvalues of `P₁ + P₂` within
/// this distance of 1, are treated as exact.
pub const OVERLAP_TOL: f64 = 1e-8;

/// How many principal components a class subspace keeps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DimRule {
    Fixed(usize),
    /// Smallest dimension whose eigenvalues carry at least this fraction of
    /// the total.
    Energy(f64),
    /// Every component with a nonzero eigenvalue.
    Full,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassModel {
    label: String,
    basis: OrthoBasis,
    eigenvalues: Vec<f64>,
    spectrum: Vec<f64>,
    spectrum_vectors: DMatrix<f64>,
    mean: DVector<f64>,
    count: usize,
}

impl ClassModel {
    /// Builds a model from a known basis, e.g. a synthetic one. The supplied
    /// eigenvalues are taken as the whole spectrum of `R_c`.
    pub fn from_basis(
        label: impl Into<String>,
        basis: OrthoBasis,
        eigenvalues: Vec<f64>,
        mean: DVector<f64>,
        count: usize,
    ) -> Result<Self> {
        if basis.is_empty() {
            return Err(validation("class basis is empty"));
        }
        if eigenvalues.len() != basis.dim() {
            return Err(Error::DimensionMismatch {
                expected: basis.dim(),
                got: eigenvalues.len(),
            });
        }
        if mean.len() != basis.ambient_dim() {
            return Err(Error::DimensionMismatch {
                expected: basis.ambient_dim(),
                got: mean.len(),
            });
        }
        if eigenvalues.windows(2).any(|w| w[1] > w[0]) {
            return Err(validation("eigenvalues must be nonincreasing"));
        }
        if eigenvalues.iter().any(|&v| v < 0.0 || !v.is_finite()) {
            return Err(validation("eigenvalues must be finite and nonnegative"));
        }
        if basis.dim() > count.min(basis.ambient_dim()) {
            return Err(validation(format!(
                "class dimension {} exceeds min(sample count {count}, ambient dimension {})",
                basis.dim(),
                basis.ambient_dim()
            )));
        }
        Ok(ClassModel {
            label: label.into(),
            spectrum: eigenvalues.clone(),
            spectrum_vectors: basis.matrix().clone(),
            basis,
            eigenvalues,
            mean,
            count,
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// `Φᶜ`, one basis vector per column.
    pub fn basis(&self) -> &OrthoBasis {
        &self.basis
    }

    /// Eigenvalues of `R_c` for the retained basis, descending.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Every nonzero eigenvalue of `R_c`, descending.
    pub fn spectrum(&self) -> &[f64] {
        &self.spectrum
    }

    /// Eigenvectors for [`Self::spectrum`].
    pub fn spectrum_vectors(&self) -> &DMatrix<f64> {
        &self.spectrum_vectors
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn count(&self) -> usize {
        self.count
    }

    /// `N_c`.
    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.ambient_dim()
    }

    /// `φ₁ᶜ`, oriented so that `φ₁ᶜᵀ m_c ≥ 0` for fitted models.
    pub fn first_vector(&self) -> DVector<f64> {
        self.basis.column(0)
    }

    /// True when the retained basis drops part of the nonzero spectrum.
    pub fn truncated(&self) -> bool {
        self.spectrum.len() > self.eigenvalues.len()
    }

    /// `R_c` rebuilt from the stored spectrum.
    pub fn autocorrelation(&self) -> SymMatrix {
        let scaled = DMatrix::from_fn(
            self.spectrum_vectors.nrows(),
            self.spectrum_vectors.ncols(),
            |i, j| self.spectrum_vectors[(i, j)] * self.spectrum[j].sqrt(),
        );
        SymMatrix::gram_of_columns(&scaled)
    }
}

/// Fits one class subspace by uncentered PCA of its samples (columns).
///
/// The first basis vector is oriented towards the sample mean.
pub fn fit_class(label: &str, samples: &DMatrix<f64>, rule: DimRule) -> Result<ClassModel> {
    let (l, n) = samples.shape();
    if n == 0 || l == 0 {
        return Err(validation(format!("class {label} has no samples")));
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(validation(format!("class {label} has non-finite values")));
    }
    if samples.iter().all(|&v| v == 0.0) {
        return Err(validation(format!("class {label}: all samples are zero")));
    }
    let (values, mut vectors) = scatter_eigenpairs(samples, 1.0 / n as f64, DEFAULT_RANK_TOL);
    let rank = values.len();

    let keep = match rule {
        DimRule::Fixed(k) => {
            if k == 0 || k > n.min(l) {
                return Err(validation(format!(
                    "class {label}: N_c = {k} must be in 1..={}",
                    n.min(l)
                )));
            }
            if k > rank {
                return Err(validation(format!(
                    "class {label}: N_c = {k} exceeds the numerical rank {rank} of its samples"
                )));
            }
            k
        }
        DimRule::Energy(t) => {
            if !(t > 0.0 && t <= 1.0) {
                return Err(validation(format!("energy threshold {t} not in (0, 1]")));
            }
            let total: f64 = values.iter().sum();
            let mut acc = 0.0;
            let mut k = rank;
            for (i, v) in values.iter().enumerate() {
                acc += v;
                if acc >= t * total * (1.0 - 1e-12) {
                    k = i + 1;
                    break;
                }
            }
            k
        }
        DimRule::Full => rank,
    };

    let mean = samples.column_mean();
    if vectors.column(0).dot(&mean) < 0.0 {
        vectors.column_mut(0).neg_mut();
    }
    let basis = OrthoBasis::from_columns_unchecked(vectors.columns(0, keep).into_owned());
    Ok(ClassModel {
        label: label.to_string(),
        basis,
        eigenvalues: values[..keep].to_vec(),
        spectrum: values,
        spectrum_vectors: vectors,
        mean,
        count: n,
    })
}

/// `P = ΦΦᵀ`.
pub fn projection_matrix(c: &ClassModel) -> SymMatrix {
    c.basis.projector()
}

/// Flips vectors so each has a nonnegative summed inner product with the
/// already oriented earlier ones. The first vector is never flipped.
///
/// When every pairwise sign can be made positive this reproduces the rule
/// `φ₁ⁱᵀφ₁ʲ > 0`; a zero inner product causes no flip.
pub(crate) fn orient(vectors: &mut [DVector<f64>]) {
    for c in 1..vectors.len() {
        let (done, rest) = vectors.split_at_mut(c);
        let s: f64 = done.iter().map(|v| v.dot(&rest[0])).sum();
        if s < 0.0 {
            rest[0].neg_mut();
        }
    }
}

/// The ensemble restricted to its sum subspace.
#[derive(Debug, Clone)]
pub(crate) struct Frame {
    /// Orthonormal basis of the sum subspace, `L × r`.
    pub q: OrthoBasis,
    /// Class bases in frame coordinates, `r × N_c` each.
    pub bases: Vec<DMatrix<f64>>,
    /// Oriented first basis vectors in frame coordinates.
    pub first: Vec<DVector<f64>>,
}

impl Frame {
    pub fn order(&self) -> usize {
        self.q.dim()
    }

    /// `G` in frame coordinates.
    pub fn g(&self) -> SymMatrix {
        let r = self.order();
        let mut g = SymMatrix::zeros(r);
        for b in &self.bases {
            g = &g + &SymMatrix::gram_of_columns(b);
        }
        g
    }

    /// `Σ_B3` in frame coordinates.
    pub fn sigma_b3(&self) -> SymMatrix {
        fisher::pairwise_difference_scatter(&self.first, self.order())
    }

    pub fn lift(&self, coords: &DMatrix<f64>) -> DMatrix<f64> {
        self.q.lift(coords)
    }
}

#[derive(Debug, Clone)]
pub struct SubspaceEnsemble {
    classes: Vec<ClassModel>,
    ambient_dim: usize,
}

impl SubspaceEnsemble {
    pub fn new(classes: Vec<ClassModel>) -> Result<Self> {
        if classes.len() < 2 {
            return Err(validation(format!(
                "an ensemble needs at least 2 classes, got {}",
                classes.len()
            )));
        }
        let ambient_dim = classes[0].ambient_dim();
        for c in &classes {
            if c.ambient_dim() != ambient_dim {
                return Err(Error::DimensionMismatch {
                    expected: ambient_dim,
                    got: c.ambient_dim(),
                });
            }
        }
        for (i, c) in classes.iter().enumerate() {
            if classes[..i].iter().any(|o| o.label == c.label) {
                return Err(validation(format!("duplicate class label {}", c.label)));
            }
        }
        Ok(SubspaceEnsemble {
            classes,
            ambient_dim,
        })
    }

    /// Fits one class subspace per group with the same dimension rule.
    pub fn fit(classes: &[ClassData], rule: DimRule) -> Result<Self> {
        let models = classes
            .iter()
            .map(|c| fit_class(&c.label, &c.samples, rule))
            .collect::<Result<Vec<_>>>()?;
        Self::new(models)
    }

    pub fn classes(&self) -> &[ClassModel] {
        &self.classes
    }

    pub fn class_count(&self) -> usize {
        self.classes.len()
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn labels(&self) -> Vec<String> {
        self.classes.iter().map(|c| c.label.clone()).collect()
    }

    /// `Σ N_c`.
    pub fn total_dim(&self) -> usize {
        self.classes.iter().map(ClassModel::dim).sum()
    }

    /// The common class dimension, if all classes share one.
    pub fn uniform_dim(&self) -> Option<usize> {
        let n = self.classes[0].dim();
        self.classes.iter().all(|c| c.dim() == n).then_some(n)
    }

    /// `G = Σ_c P_c` in the ambient space.
    pub fn sum_matrix(&self) -> SymMatrix {
        let mut g = SymMatrix::zeros(self.ambient_dim);
        for c in &self.classes {
            g = &g + &c.basis.projector();
        }
        g
    }

    /// First basis vectors under the pairwise sign convention.
    pub fn oriented_first_vectors(&self) -> Vec<DVector<f64>> {
        let mut v: Vec<DVector<f64>> = self.classes.iter().map(ClassModel::first_vector).collect();
        orient(&mut v);
        v
    }

    /// Orthonormal basis of the sum subspace.
    pub fn pooled_frame(&self) -> OrthoBasis {
        let vectors: Vec<DVector<f64>> = self
            .classes
            .iter()
            .flat_map(|c| c.basis.columns().collect::<Vec<_>>())
            .collect();
        gram_schmidt(&vectors, DEFAULT_RANK_TOL).expect("ensemble has basis vectors")
    }

    pub(crate) fn frame(&self) -> Frame {
        let q = self.pooled_frame();
        let bases: Vec<DMatrix<f64>> = self
            .classes
            .iter()
            .map(|c| q.matrix().tr_mul(c.basis.matrix()))
            .collect();
        let mut first: Vec<DVector<f64>> = bases.iter().map(|b| b.column(0).into_owned()).collect();
        orient(&mut first);
        Frame { q, bases, first }
    }
}

/// Difference subspace from canonical vector pairs: `dᵢ = (vᵢ − uᵢ)/‖vᵢ − uᵢ‖`.
pub fn difference_subspace_geometric(c1: &ClassModel, c2: &ClassModel) -> Result<OrthoBasis> {
    let pairs = canonical_angles(&c1.basis, &c2.basis)?;
    let mut d = DMatrix::zeros(c1.ambient_dim(), pairs.cosines.len());
    for (i, &cos) in pairs.cosines.iter().enumerate() {
        if cos >= 1.0 - OVERLAP_TOL {
            return Err(Error::DegeneratePair { index: i, cosine: cos });
        }
        let diff = pairs.v.column(i) - pairs.u.column(i);
        d.set_column(i, &(&diff / diff.norm()));
    }
    Ok(OrthoBasis::from_columns_unchecked(d))
}

/// Result of splitting the sum subspace of two classes by the eigenvalues of
/// `P₁ + P₂`.
#[derive(Debug, Clone)]
pub struct DifferenceDecomposition {
    /// Eigenvectors with eigenvalue below 1, ascending eigenvalue.
    pub difference: OrthoBasis,
    pub difference_eigenvalues: Vec<f64>,
    /// Eigenvectors with eigenvalue above 1, descending eigenvalue.
    pub principal: OrthoBasis,
    pub principal_eigenvalues: Vec<f64>,
    /// Full spectrum of `P₁ + P₂` on the sum subspace, ascending.
    pub spectrum: Vec<f64>,
}

/// Difference subspace as the eigenvectors of `P₁ + P₂` with eigenvalue
/// in `(0, 1)`, together with the principal component subspace.
///
/// A difference of dimensions `|M − N|` legitimately contributes eigenvalues
/// of exactly 1; any further eigenvalue within [`OVERLAP_TOL`] of 1 is
/// ambiguous and reported as an error.
pub fn difference_subspace_analytic(
    c1: &ClassModel,
    c2: &ClassModel,
) -> Result<DifferenceDecomposition> {
    if c1.ambient_dim() != c2.ambient_dim() {
        return Err(Error::DimensionMismatch {
            expected: c1.ambient_dim(),
            got: c2.ambient_dim(),
        });
    }
    let vectors: Vec<DVector<f64>> = c1.basis.columns().chain(c2.basis.columns()).collect();
    let q = gram_schmidt(&vectors, DEFAULT_RANK_TOL)?;
    let b1 = q.matrix().tr_mul(c1.basis.matrix());
    let b2 = q.matrix().tr_mul(c2.basis.matrix());
    let s = &SymMatrix::gram_of_columns(&b1) + &SymMatrix::gram_of_columns(&b2);
    let eig = sym_eig(&s);

    let expected = c1.dim().min(c2.dim());
    let expected_ones = c1.dim().abs_diff(c2.dim());
    let mut diff = Vec::new();
    let mut principal = Vec::new();
    let mut ones = Vec::new();
    for (i, &lambda) in eig.values.iter().enumerate() {
        if lambda > OVERLAP_TOL && lambda < 1.0 - OVERLAP_TOL {
            diff.push(i);
        } else if lambda > 1.0 + OVERLAP_TOL {
            principal.push(i);
        } else if (lambda - 1.0).abs() <= OVERLAP_TOL {
            ones.push(i);
        }
    }
    if ones.len() > expected_ones {
        let worst = ones
            .iter()
            .map(|&i| eig.values[i])
            .fold(1.0, |a: f64, v| if (v - 1.0).abs() < (a - 1.0).abs() { v } else { a });
        warn!(
            "P1 + P2 has {} eigenvalues within {OVERLAP_TOL:e} of 1 (expected {expected_ones})",
            ones.len()
        );
        return Err(Error::AmbiguousEigenvalue {
            eigenvalue: worst,
            found: diff.len(),
            expected,
        });
    }
    if diff.is_empty() {
        return Err(Error::DegenerateDifference);
    }
    if diff.len() < expected {
        warn!(
            "subspaces partially overlap: {} of {expected} difference directions",
            diff.len()
        );
    }
    principal.reverse();
    let pick = |idx: &[usize]| {
        let cols = DMatrix::from_fn(s.order(), idx.len(), |r, j| {
            eig.vectors.matrix()[(r, idx[j])]
        });
        OrthoBasis::from_columns_unchecked(q.matrix() * cols)
    };
    Ok(DifferenceDecomposition {
        difference: pick(&diff),
        difference_eigenvalues: diff.iter().map(|&i| eig.values[i]).collect(),
        principal: pick(&principal),
        principal_eigenvalues: principal.iter().map(|&i| eig.values[i]).collect(),
        spectrum: eig.values,
    })
}

/// Dimension rule for the GDS.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GdsRule {
    Fixed(usize),
    /// Smallest `N_d` whose cumulative discriminant power reaches
    /// `β = C(C−1)γ`.
    Power { gamma: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GdsSelection {
    Fixed(usize),
    Power { gamma: f64, beta: f64, achieved: f64 },
}

#[derive(Debug, Clone)]
pub struct GdsModel {
    pub basis: OrthoBasis,
    /// The `N_d` smallest eigenvalues of `G` on the sum subspace, ascending.
    pub eigenvalues_of_g: Vec<f64>,
    pub selection: GdsSelection,
}

/// Eigenvectors of `G` with the smallest eigenvalues on the sum subspace.
///
/// Tied eigenvalues (e.g. mutually orthogonal classes) make any basis of the
/// tied eigenspace equally valid; the one returned is whatever the
/// deterministic eigensolver produces.
pub fn gds(ensemble: &SubspaceEnsemble, rule: GdsRule) -> Result<GdsModel> {
    let frame = ensemble.frame();
    let r = frame.order();
    let g = frame.g();
    let eig = sym_eig(&g);

    let (nd, selection) = match rule {
        GdsRule::Fixed(nd) => {
            if nd == 0 || nd > r {
                return Err(validation(format!(
                    "GDS dimension {nd} must be in 1..={r} (rank of the sum subspace)"
                )));
            }
            (nd, GdsSelection::Fixed(nd))
        }
        GdsRule::Power { gamma } => {
            if !(gamma > 0.0 && gamma <= 1.0) {
                return Err(validation(format!("gamma {gamma} not in (0, 1]")));
            }
            let c = ensemble.class_count() as f64;
            let beta = c * (c - 1.0) * gamma;
            let pair = ScatterPair {
                between: frame.sigma_b3(),
                within: g.clone(),
                rung: Rung::GFda,
            };
            let power = fisher::discriminant_power_curve(eig.vectors.matrix(), &pair)?;
            let mut acc = 0.0;
            let mut chosen = None;
            for (i, p) in power.iter().enumerate() {
                acc += p;
                if acc >= beta * (1.0 - 1e-12) {
                    chosen = Some(i + 1);
                    break;
                }
            }
            let nd = chosen.unwrap_or_else(|| {
                warn!("cumulative power {acc} never reaches beta = {beta}; using all {r} directions");
                r
            });
            let achieved = power[..nd].iter().sum();
            (nd, GdsSelection::Power { gamma, beta, achieved })
        }
    };
    let basis = OrthoBasis::from_columns_unchecked(frame.lift(&eig.smallest(nd)));
    Ok(GdsModel {
        basis,
        eigenvalues_of_g: eig.values[..nd].to_vec(),
        selection,
    })
}

/// Splits `G` into `(1/(2(C−1)))Σ_B3` and `Σ_W5`.
///
/// Uses `zzᵀ + z′z′ᵀ = 2(φʲφʲᵀ + φᵏφᵏᵀ)` for `z = φʲ − φᵏ`, `z′ = φʲ + φᵏ` on
/// the (oriented) first basis vectors. Requires a common class dimension.
pub fn gds_decomposition(ensemble: &SubspaceEnsemble) -> Result<(SymMatrix, SymMatrix)> {
    if ensemble.uniform_dim().is_none() {
        return Err(validation(
            "decomposition needs all class subspaces to have the same dimension",
        ));
    }
    let l = ensemble.ambient_dim();
    let c = ensemble.class_count();
    let w = 1.0 / (2.0 * (c as f64 - 1.0));
    let first = ensemble.oriented_first_vectors();

    let sigma_b3 = fisher::pairwise_difference_scatter(&first, l);
    let mut sum_z_prime = SymMatrix::zeros(l);
    for j in 0..c {
        for k in j + 1..c {
            sum_z_prime.add_outer(&(&first[j] + &first[k]), 1.0);
        }
    }
    let mut rest = SymMatrix::zeros(l);
    for class in ensemble.classes() {
        for phi in class.basis.columns().skip(1) {
            rest.add_outer(&phi, 1.0);
        }
    }
    let term_b = &sigma_b3 * w;
    let sigma_w5 = &(&sum_z_prime * w) + &rest;
    Ok((term_b, sigma_w5))
}
