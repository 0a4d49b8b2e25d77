//! Scatter matrices, the simplification ladder from FDA to gFDA, the FDA
//! baselines for the small-sample-size problem, and gFDA in its product
//! (generalized eigenproblem) and linear (`Ĝ = G − Σ_B3/C`) forms.

use std::fmt;
use std::str::FromStr;

use log::{info, warn};
use nalgebra::{DMatrix, DVector};

use crate::dataset::ClassData;
use crate::error::{validation, Error, Result};
use crate::linalg::{
    generalized_eig, gram_schmidt_columns, scatter_eigenpairs, sym_eig, whitening, OrthoBasis,
    SymMatrix, DEFAULT_RANK_TOL,
};
use crate::subspace::{gds, GdsModel, GdsRule, SubspaceEnsemble};

/// Default regularization for [`reg_lda`].
pub const DEFAULT_REG_DELTA: f64 = 1e-4;
/// Regularization used when [`pca_lda`] still meets a singular within-class
/// scatter after reduction.
pub const FALLBACK_REG_DELTA: f64 = 1e-8;

const CRITERION_TOL: f64 = 1e-12;
const NULL_EIGENVALUE_TOL: f64 = 1e-8;

/// `(1/n) X Xᵀ` for the samples in the columns of `X`.
pub fn class_autocorrelation(samples: &DMatrix<f64>) -> SymMatrix {
    SymMatrix::symmetrize(samples * samples.transpose() / samples.ncols() as f64)
}

/// `(1/n) Σ (x − m)(x − m)ᵀ`.
pub fn class_covariance(samples: &DMatrix<f64>) -> SymMatrix {
    let m = samples.column_mean();
    let mut centered = samples.clone();
    for mut c in centered.column_iter_mut() {
        c -= &m;
    }
    class_autocorrelation(&centered)
}

fn check_classes(classes: &[ClassData]) -> Result<usize> {
    let dim = classes
        .first()
        .map(ClassData::dim)
        .ok_or_else(|| validation("no classes"))?;
    for c in classes {
        if c.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: c.dim(),
            });
        }
        if c.count() == 0 {
            return Err(validation(format!("class {} has no samples", c.label)));
        }
    }
    Ok(dim)
}

/// `Σ_W = (1/n) Σ_c Σ_{x∈c} (x − m_c)(x − m_c)ᵀ`.
pub fn within_scatter(classes: &[ClassData]) -> Result<SymMatrix> {
    let dim = check_classes(classes)?;
    let n: usize = classes.iter().map(ClassData::count).sum();
    let mut w = DMatrix::zeros(dim, dim);
    for c in classes {
        w += class_covariance(&c.samples).matrix() * c.count() as f64;
    }
    Ok(SymMatrix::symmetrize(w / n as f64))
}

/// `Σ_W` through the autocorrelation matrices:
/// `(1/n) Σ_c (n_c R_c − n_c m_c m_cᵀ)`.
pub fn within_scatter_from_autocorrelation(classes: &[ClassData]) -> Result<SymMatrix> {
    let dim = check_classes(classes)?;
    let n: usize = classes.iter().map(ClassData::count).sum();
    let mut w = DMatrix::zeros(dim, dim);
    for c in classes {
        let nc = c.count() as f64;
        let m = c.mean();
        w += class_autocorrelation(&c.samples).matrix() * nc - &m * m.transpose() * nc;
    }
    Ok(SymMatrix::symmetrize(w / n as f64))
}

fn check_means(means: &[DVector<f64>], counts: &[usize]) -> Result<usize> {
    if means.len() < 2 {
        return Err(validation("between-class scatter needs at least 2 classes"));
    }
    if means.len() != counts.len() {
        return Err(Error::DimensionMismatch {
            expected: means.len(),
            got: counts.len(),
        });
    }
    let dim = means[0].len();
    if let Some(m) = means.iter().find(|m| m.len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: m.len(),
        });
    }
    if counts.contains(&0) {
        return Err(validation("class count of zero"));
    }
    Ok(dim)
}

/// `Σ_B = (1/n) Σ_c n_c (m_c − m)(m_c − m)ᵀ` with `m` the overall mean.
pub fn between_scatter(means: &[DVector<f64>], counts: &[usize]) -> Result<SymMatrix> {
    let dim = check_means(means, counts)?;
    let n: usize = counts.iter().sum();
    let mut overall = DVector::zeros(dim);
    for (m, &c) in means.iter().zip(counts) {
        overall.axpy(c as f64 / n as f64, m, 1.0);
    }
    let mut b = SymMatrix::zeros(dim);
    for (m, &c) in means.iter().zip(counts) {
        b.add_outer(&(m - &overall), c as f64 / n as f64);
    }
    Ok(b)
}

/// `Σ_B = (1/n²) Σ_{i<j} n_i n_j (m_i − m_j)(m_i − m_j)ᵀ`.
pub fn between_scatter_pairwise(means: &[DVector<f64>], counts: &[usize]) -> Result<SymMatrix> {
    let dim = check_means(means, counts)?;
    let n: f64 = counts.iter().sum::<usize>() as f64;
    let mut b = SymMatrix::zeros(dim);
    for i in 0..means.len() {
        for j in i + 1..means.len() {
            let w = (counts[i] * counts[j]) as f64 / (n * n);
            b.add_outer(&(&means[i] - &means[j]), w);
        }
    }
    Ok(b)
}

/// `Σ_{i<j} (vᵢ − vⱼ)(vᵢ − vⱼ)ᵀ`, i.e. `Σ_B3` for first basis vectors.
pub(crate) fn pairwise_difference_scatter(vectors: &[DVector<f64>], order: usize) -> SymMatrix {
    let mut b = SymMatrix::zeros(order);
    for i in 0..vectors.len() {
        for j in i + 1..vectors.len() {
            b.add_outer(&(&vectors[i] - &vectors[j]), 1.0);
        }
    }
    b
}

/// Rungs of the simplification ladder.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rung {
    /// `(Σ_B, Σ_W)`.
    Fda,
    /// `(Σ_B1, Σ_W1)`.
    AFda,
    /// `(Σ_B2, Σ_W2)`.
    SFda,
    /// `(Σ_B3, Σ_W4)`, with `Σ_W4 = G`.
    GFda,
}

#[derive(Debug, Clone)]
pub struct ScatterPair {
    pub between: SymMatrix,
    pub within: SymMatrix,
    pub rung: Rung,
}

/// The `(between, within)` pair of a ladder rung, built from fitted class
/// models.
///
/// Classes may differ in sample count and mean norm; every class then enters
/// with its own `n_c` and `m̄_c = ‖m_c‖`, and `Σ_B2` uses the average of
/// `m̄_c²`. The `Fda` rung reproduces `Σ_W` exactly only for untruncated
/// models.
pub fn scatter_ladder(ensemble: &SubspaceEnsemble, rung: Rung) -> ScatterPair {
    let classes = ensemble.classes();
    let l = ensemble.ambient_dim();
    let c = classes.len() as f64;
    let n: f64 = classes.iter().map(|k| k.count() as f64).sum();

    if matches!(rung, Rung::AFda | Rung::SFda) {
        let n0 = classes[0].count();
        let m0 = classes[0].mean().norm();
        if classes
            .iter()
            .any(|k| k.count() != n0 || (k.mean().norm() - m0).abs() > 1e-9 * m0.max(1.0))
        {
            info!("unequal class counts or mean norms: using per-class values in the ladder");
        }
    }

    // σ₁ᶜ² = λ₁ᶜ − m̄_c², clamped
    let first_variance = |k: &crate::subspace::ClassModel| {
        let s = k.spectrum()[0] - k.mean().norm_squared();
        if s < 0.0 {
            warn!(
                "class {}: λ₁ < ‖m‖² by {:e}; clamping σ₁² to 0",
                k.label(),
                -s
            );
            0.0
        } else {
            s
        }
    };

    let (between, within) = match rung {
        Rung::Fda => {
            let means: Vec<DVector<f64>> = classes.iter().map(|k| k.mean().clone()).collect();
            let counts: Vec<usize> = classes.iter().map(|k| k.count()).collect();
            let between = between_scatter(&means, &counts).expect("ensemble has ≥ 2 classes");
            if classes.iter().any(|k| k.truncated()) {
                warn!("truncated class models: within-class scatter is approximate");
            }
            let mut w = DMatrix::zeros(l, l);
            for k in classes {
                let nk = k.count() as f64;
                w += k.autocorrelation().matrix() * nk - k.mean() * k.mean().transpose() * nk;
            }
            (between, SymMatrix::symmetrize(w / n))
        }
        Rung::AFda | Rung::SFda => {
            let mut w = SymMatrix::zeros(l);
            for k in classes {
                let weight = k.count() as f64 / n;
                let (values, vectors) = if rung == Rung::AFda {
                    (k.spectrum(), k.spectrum_vectors())
                } else {
                    (k.eigenvalues(), k.basis().matrix())
                };
                for (i, &lambda) in values.iter().enumerate() {
                    let var = if i == 0 { first_variance(k) } else { lambda };
                    w.add_outer(&vectors.column(i).into_owned(), weight * var);
                }
            }
            let between = if rung == Rung::AFda {
                let mut b = SymMatrix::zeros(l);
                for i in 0..classes.len() {
                    for j in i + 1..classes.len() {
                        let (a, z) = (&classes[i], &classes[j]);
                        let d = a.first_vector() * a.mean().norm() - z.first_vector() * z.mean().norm();
                        b.add_outer(&d, (a.count() * z.count()) as f64 / (n * n));
                    }
                }
                b
            } else {
                let m2 = classes.iter().map(|k| k.mean().norm_squared()).sum::<f64>() / c;
                let b3 = pairwise_difference_scatter(&ensemble.oriented_first_vectors(), l);
                &b3 * (m2 / (c * c))
            };
            (between, w)
        }
        Rung::GFda => (
            pairwise_difference_scatter(&ensemble.oriented_first_vectors(), l),
            ensemble.sum_matrix(),
        ),
    };
    ScatterPair {
        between,
        within,
        rung,
    }
}

/// `f(d) = dᵀBd / dᵀWd`.
pub fn fisher_criterion(d: &DVector<f64>, pair: &ScatterPair) -> Result<f64> {
    if d.len() != pair.within.order() {
        return Err(Error::DimensionMismatch {
            expected: pair.within.order(),
            got: d.len(),
        });
    }
    let den = pair.within.quadratic_form(d);
    let scale = d.norm_squared() * pair.within.frobenius_norm();
    if !(den > CRITERION_TOL * scale) {
        return Err(Error::UndefinedDirection(format!(
            "dᵀWd = {den:e} vanishes"
        )));
    }
    Ok(pair.between.quadratic_form(d) / den)
}

/// `f(dᵢ)` for every column of `vectors`.
pub fn discriminant_power_curve(vectors: &DMatrix<f64>, pair: &ScatterPair) -> Result<Vec<f64>> {
    vectors
        .column_iter()
        .map(|c| fisher_criterion(&c.into_owned(), pair))
        .collect()
}

/// Top `k` generalized eigenvectors of a pair, orthonormalized.
pub fn ladder_directions(pair: &ScatterPair, k: usize) -> Result<OrthoBasis> {
    let g = generalized_eig(&pair.between, &pair.within, DEFAULT_RANK_TOL)?;
    let k = k.min(g.values.len());
    gram_schmidt_columns(&g.vectors.columns(0, k).into_owned(), DEFAULT_RANK_TOL)
}

/// `σ = 2(1 − 1/C)`.
pub fn gap_index(c: usize) -> f64 {
    2.0 * (1.0 - 1.0 / c as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Fda,
    PcaLda,
    RegLda,
    NullLda,
    GfdaProduct,
    GfdaLinear,
    Gds,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Fda => "fda",
            Method::PcaLda => "pcaLDA",
            Method::RegLda => "regLDA",
            Method::NullLda => "nullLDA",
            Method::GfdaProduct => "gfda",
            Method::GfdaLinear => "gfda-linear",
            Method::Gds => "gds",
        }
    }

    /// Methods built from class subspaces rather than raw scatter.
    pub fn is_subspace_based(self) -> bool {
        matches!(self, Method::GfdaProduct | Method::GfdaLinear | Method::Gds)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let m = match s.to_ascii_lowercase().as_str() {
            "fda" => Method::Fda,
            "pcalda" => Method::PcaLda,
            "reglda" => Method::RegLda,
            "nulllda" => Method::NullLda,
            "gfda" | "gfda-product" => Method::GfdaProduct,
            "gfda-linear" => Method::GfdaLinear,
            "gds" => Method::Gds,
            _ => return Err(validation(format!("unknown method {s}"))),
        };
        Ok(m)
    }
}

/// A discriminant space together with what is needed to classify in it.
///
/// A sample `x` maps to `τ(x) = Dᵀ(W x)` where `W` is the optional whitening
/// map (`r × L`) and `D` the orthonormal basis (`r × k`, or `L × k` without
/// whitening).
#[derive(Debug, Clone, PartialEq)]
pub struct DiscriminantModel {
    pub method: Method,
    /// Normalize projections before classification (the "+N" variants).
    pub normalized: bool,
    /// When normalized, also normalize the class references.
    pub ref_normalization: bool,
    pub basis: OrthoBasis,
    pub whitening: Option<DMatrix<f64>>,
    pub labels: Vec<String>,
    /// Per-class reference points in discriminant coordinates, unnormalized.
    pub class_refs: Vec<DVector<f64>>,
    /// Eigenvalues belonging to the basis vectors, in basis order.
    pub eigenvalues: Vec<f64>,
    /// Notes about how the model was obtained (e.g. a regularized fallback).
    pub flags: Vec<String>,
}

impl DiscriminantModel {
    /// Assembles a model, checking that all parts fit together.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        method: Method,
        normalized: bool,
        ref_normalization: bool,
        basis: OrthoBasis,
        whitening: Option<DMatrix<f64>>,
        labels: Vec<String>,
        class_refs: Vec<DVector<f64>>,
        eigenvalues: Vec<f64>,
        flags: Vec<String>,
    ) -> Result<Self> {
        if let Some(w) = &whitening {
            if w.nrows() != basis.ambient_dim() {
                return Err(Error::DimensionMismatch {
                    expected: basis.ambient_dim(),
                    got: w.nrows(),
                });
            }
        }
        if labels.len() != class_refs.len() || labels.is_empty() {
            return Err(validation("one reference per class label is required"));
        }
        if let Some(r) = class_refs.iter().find(|r| r.len() != basis.dim()) {
            return Err(Error::DimensionMismatch {
                expected: basis.dim(),
                got: r.len(),
            });
        }
        Ok(DiscriminantModel {
            method,
            normalized,
            ref_normalization,
            basis,
            whitening,
            labels,
            class_refs,
            eigenvalues,
            flags,
        })
    }

    /// Dimension of the input vectors.
    pub fn input_dim(&self) -> usize {
        self.whitening
            .as_ref()
            .map_or(self.basis.ambient_dim(), |w| w.ncols())
    }

    /// Dimension `k` of the discriminant space.
    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn with_normalization(mut self, normalized: bool) -> Self {
        self.normalized = normalized;
        self
    }

    /// `τ(x)` without normalization.
    pub fn coordinates(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        if x.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                got: x.len(),
            });
        }
        Ok(match &self.whitening {
            Some(w) => self.basis.coordinates(&(w * x)),
            None => self.basis.coordinates(x),
        })
    }

    /// Orthonormal basis, in the input space, of the directions `d` with
    /// `τ(x) = [dᵢᵀ x]`.
    pub fn data_space_basis(&self) -> Result<OrthoBasis> {
        match &self.whitening {
            None => Ok(self.basis.clone()),
            Some(w) => gram_schmidt_columns(&w.tr_mul(self.basis.matrix()), DEFAULT_RANK_TOL),
        }
    }
}

struct DataScatter {
    between: SymMatrix,
    within: SymMatrix,
    labels: Vec<String>,
    means: Vec<DVector<f64>>,
}

fn data_scatter(classes: &[ClassData]) -> Result<DataScatter> {
    if classes.len() < 2 {
        return Err(validation("discriminant analysis needs at least 2 classes"));
    }
    check_classes(classes)?;
    let means: Vec<DVector<f64>> = classes.iter().map(ClassData::mean).collect();
    let counts: Vec<usize> = classes.iter().map(ClassData::count).collect();
    Ok(DataScatter {
        between: between_scatter(&means, &counts)?,
        within: within_scatter(classes)?,
        labels: classes.iter().map(|c| c.label.clone()).collect(),
        means,
    })
}

/// Model over data-space directions with projected class means as
/// references.
fn data_space_model(
    method: Method,
    directions: &DMatrix<f64>,
    eigenvalues: Vec<f64>,
    scatter: &DataScatter,
    flags: Vec<String>,
) -> Result<DiscriminantModel> {
    let basis = gram_schmidt_columns(directions, DEFAULT_RANK_TOL)?;
    if basis.dim() < directions.ncols() {
        warn!(
            "{method}: only {} of {} discriminant directions are independent",
            basis.dim(),
            directions.ncols()
        );
    }
    let refs = scatter.means.iter().map(|m| basis.coordinates(m)).collect();
    DiscriminantModel::from_parts(
        method,
        false,
        true,
        basis,
        None,
        scatter.labels.clone(),
        refs,
        eigenvalues,
        flags,
    )
}

fn top_generalized(
    between: &SymMatrix,
    within: &SymMatrix,
    k: usize,
) -> Result<(DMatrix<f64>, Vec<f64>)> {
    let g = generalized_eig(between, within, DEFAULT_RANK_TOL)?;
    let k = k.min(g.values.len());
    Ok((g.vectors.columns(0, k).into_owned(), g.values[..k].to_vec()))
}

/// Classical FDA: top `C − 1` solutions of `Σ_B d = λ Σ_W d`.
pub fn fda(classes: &[ClassData]) -> Result<DiscriminantModel> {
    let s = data_scatter(classes)?;
    let (dirs, values) = top_generalized(&s.between, &s.within, classes.len() - 1)?;
    data_space_model(Method::Fda, &dirs, values, &s, Vec::new())
}

/// FDA with `Σ_W + δE` in place of `Σ_W`.
pub fn reg_lda(classes: &[ClassData], delta: f64) -> Result<DiscriminantModel> {
    if !(delta > 0.0) {
        return Err(validation(format!("regularization {delta} must be positive")));
    }
    let s = data_scatter(classes)?;
    let reg = &s.within + &(&SymMatrix::identity(s.within.order()) * delta);
    let (dirs, values) = top_generalized(&s.between, &reg, classes.len() - 1)?;
    data_space_model(Method::RegLda, &dirs, values, &s, Vec::new())
}

/// Centered PCA of the pooled data, keeping components until the relative
/// sum of squared residuals is at most `residual_threshold`, then FDA in the
/// reduced space.
pub fn pca_lda(classes: &[ClassData], residual_threshold: f64) -> Result<DiscriminantModel> {
    if !(0.0..1.0).contains(&residual_threshold) {
        return Err(validation(format!(
            "residual threshold {residual_threshold} not in [0, 1)"
        )));
    }
    let s = data_scatter(classes)?;
    let n: usize = classes.iter().map(ClassData::count).sum();
    if n < 2 {
        return Err(validation("pcaLDA needs at least 2 samples"));
    }
    let dim = classes[0].dim();
    let mut pooled = DMatrix::zeros(dim, n);
    let mut col = 0;
    for c in classes {
        pooled.columns_mut(col, c.count()).copy_from(&c.samples);
        col += c.count();
    }
    let center = pooled.column_mean();
    for mut c in pooled.column_iter_mut() {
        c -= &center;
    }
    let (values, vectors) = scatter_eigenpairs(&pooled, 1.0 / n as f64, DEFAULT_RANK_TOL);
    if values.is_empty() {
        return Err(validation("pooled data has no variance"));
    }
    let total: f64 = values.iter().sum();
    let mut kept = values.len();
    let mut residual = total;
    for (i, v) in values.iter().enumerate() {
        residual -= v;
        if residual / total <= residual_threshold {
            kept = i + 1;
            break;
        }
    }
    let p = vectors.columns(0, kept).into_owned();

    let reduced: Vec<ClassData> = classes
        .iter()
        .map(|c| ClassData {
            label: c.label.clone(),
            samples: p.tr_mul(&c.samples),
        })
        .collect();
    let rs = data_scatter(&reduced)?;
    let k = classes.len() - 1;
    if kept < k {
        warn!("pcaLDA: reduced dimension {kept} is below C − 1 = {k}");
    }
    let mut flags = Vec::new();
    let (dirs, values) = match top_generalized(&rs.between, &rs.within, k) {
        Ok(r) => r,
        Err(Error::SingularWithin { rank, order }) => {
            warn!(
                "pcaLDA: reduced within-class scatter singular (rank {rank} of {order}); \
                 regularizing with delta = {FALLBACK_REG_DELTA:e}"
            );
            flags.push(format!("regularized-fallback delta={FALLBACK_REG_DELTA:e}"));
            let reg = &rs.within + &(&SymMatrix::identity(order) * FALLBACK_REG_DELTA);
            top_generalized(&rs.between, &reg, k)?
        }
        Err(e) => return Err(e),
    };
    flags.push(format!("pca-dimension={kept}"));
    data_space_model(Method::PcaLda, &(&p * dirs), values, &s, flags)
}

/// Projects onto the null space of `Σ_W` and keeps the top `C − 1`
/// eigenvectors of the projected `Σ_B`.
pub fn null_lda(classes: &[ClassData]) -> Result<DiscriminantModel> {
    let s = data_scatter(classes)?;
    let eig = sym_eig(&s.within);
    let max = eig.values.last().copied().unwrap_or(0.0).max(0.0);
    let null: Vec<usize> = (0..eig.values.len())
        .filter(|&i| max == 0.0 || eig.values[i] <= DEFAULT_RANK_TOL * max)
        .collect();
    if null.is_empty() {
        return Err(Error::NotApplicable(
            "within-class scatter has a trivial null space".into(),
        ));
    }
    let basis = DMatrix::from_fn(s.within.order(), null.len(), |r, j| {
        eig.vectors.matrix()[(r, null[j])]
    });
    let projected = s.between.congruence(&basis);
    let beig = sym_eig(&projected);
    let k = (classes.len() - 1).min(null.len());
    let dirs = &basis * beig.largest(k);
    data_space_model(Method::NullLda, &dirs, beig.largest_values(k), &s, Vec::new())
}

/// First basis vectors of every class in frame coordinates, in the
/// orientation the class models carry (towards their means).
fn frame_refs(frame: &crate::subspace::Frame) -> Vec<DVector<f64>> {
    frame.bases.iter().map(|b| b.column(0).into_owned()).collect()
}

/// Nonzero and zero generalized eigenvalues of `Σ_B3 d = λ Σ_W4 d` on the sum
/// subspace, descending.
pub fn gfda_generalized_spectrum(ensemble: &SubspaceEnsemble) -> Result<Vec<f64>> {
    let frame = ensemble.frame();
    let g = generalized_eig(&frame.sigma_b3(), &frame.g(), DEFAULT_RANK_TOL)?;
    Ok(g.values)
}

/// gFDA as whitening by `Σ_W4` followed by PCA of the whitened first-basis
/// differences.
///
/// The problem is first reduced to the sum subspace; overlapping class
/// subspaces make the reduced `Σ_W4` unable to orthogonalize all basis
/// vectors and are rejected.
pub fn gfda_product_form(ensemble: &SubspaceEnsemble) -> Result<DiscriminantModel> {
    let frame = ensemble.frame();
    let r = frame.order();
    let total = ensemble.total_dim();
    if r < total {
        return Err(Error::Overlap {
            rank: r,
            expected: total,
        });
    }
    let white = whitening(&frame.g(), DEFAULT_RANK_TOL)?;
    if white.rank() < r {
        return Err(Error::Overlap {
            rank: white.rank(),
            expected: r,
        });
    }
    let a = white.map();
    let hat: Vec<DVector<f64>> = frame.first.iter().map(|f| a.tr_mul(f)).collect();
    let sigma_a = pairwise_difference_scatter(&hat, r);
    let eig = sym_eig(&sigma_a);
    let k = ensemble.class_count() - 1;
    let basis = gram_schmidt_columns(&eig.largest(k), DEFAULT_RANK_TOL)?;

    // overall whitening L → r is (Q A)ᵀ
    let map = (frame.q.matrix() * a).transpose();
    let refs = frame_refs(&frame)
        .iter()
        .map(|f| basis.coordinates(&a.tr_mul(f)))
        .collect();
    DiscriminantModel::from_parts(
        Method::GfdaProduct,
        false,
        true,
        basis,
        Some(map),
        ensemble.labels(),
        refs,
        eig.largest_values(k),
        Vec::new(),
    )
}

/// gFDA as the eigenvectors of the `C − 1` smallest eigenvalues of
/// `Ĝ = Σ_W4 − Σ_B3 / C` on the sum subspace.
///
/// Selection is by index; when fewer than `C − 1` eigenvalues are near zero
/// (overlap or degeneracy) a warning reports the largest one selected.
pub fn gfda_linear_form(ensemble: &SubspaceEnsemble) -> Result<DiscriminantModel> {
    let frame = ensemble.frame();
    let c = ensemble.class_count();
    let r = frame.order();
    let k = c - 1;
    if k > r {
        return Err(validation(format!(
            "sum subspace has dimension {r}, fewer than C − 1 = {k}"
        )));
    }
    let g_hat = &frame.g() - &(&frame.sigma_b3() * (1.0 / c as f64));
    let eig = sym_eig(&g_hat);
    let worst = eig.values[k - 1];
    if worst.abs() > NULL_EIGENVALUE_TOL * c as f64 {
        warn!(
            "gFDA linear form: selected eigenvalue {worst:e} of Ĝ is not near zero \
             (class subspaces overlap or are degenerate)"
        );
    }
    let basis = OrthoBasis::from_columns_unchecked(frame.lift(&eig.smallest(k)));
    let refs = frame_refs(&frame)
        .iter()
        .map(|f| basis.coordinates(&(frame.q.matrix() * f)))
        .collect();
    DiscriminantModel::from_parts(
        Method::GfdaLinear,
        false,
        true,
        basis,
        None,
        ensemble.labels(),
        refs,
        eig.values[..k].to_vec(),
        Vec::new(),
    )
}

/// Ascending spectra of `G` and `Ĝ` on the sum subspace, with the gFDA power
/// `f_g` of each eigenvector.
///
/// On the complement of the sum subspace both matrices vanish, so the
/// remaining `L − r` eigenvalues are zero for both and are not listed.
#[derive(Debug, Clone, PartialEq)]
pub struct Eigencurves {
    pub classes: usize,
    pub g: Vec<f64>,
    pub g_hat: Vec<f64>,
    pub power_g: Vec<f64>,
    pub power_g_hat: Vec<f64>,
}

impl Eigencurves {
    /// Euclidean distance between the two ascending eigenvalue curves.
    pub fn divergence(&self) -> f64 {
        self.g
            .iter()
            .zip(&self.g_hat)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt()
    }
}

pub fn eigencurves(ensemble: &SubspaceEnsemble) -> Result<Eigencurves> {
    let frame = ensemble.frame();
    let c = ensemble.class_count();
    let pair = ScatterPair {
        between: frame.sigma_b3(),
        within: frame.g(),
        rung: Rung::GFda,
    };
    let g_hat = &pair.within - &(&pair.between * (1.0 / c as f64));
    let eg = sym_eig(&pair.within);
    let eh = sym_eig(&g_hat);
    let power = |m: &DMatrix<f64>| -> Vec<f64> {
        m.column_iter()
            .map(|v| fisher_criterion(&v.into_owned(), &pair).unwrap_or(f64::NAN))
            .collect()
    };
    Ok(Eigencurves {
        classes: c,
        power_g: power(eg.vectors.matrix()),
        power_g_hat: power(eh.vectors.matrix()),
        g: eg.values,
        g_hat: eh.values,
    })
}

/// GDS projection as a discriminant model with first basis vectors as class
/// references.
pub fn gds_model(ensemble: &SubspaceEnsemble, rule: GdsRule) -> Result<DiscriminantModel> {
    let GdsModel {
        basis,
        eigenvalues_of_g,
        selection,
    } = gds(ensemble, rule)?;
    let refs = ensemble
        .classes()
        .iter()
        .map(|c| basis.coordinates(&c.first_vector()))
        .collect();
    DiscriminantModel::from_parts(
        Method::Gds,
        false,
        true,
        basis,
        None,
        ensemble.labels(),
        refs,
        eigenvalues_of_g,
        vec![format!("{selection:?}")],
    )
}
