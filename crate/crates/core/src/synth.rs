//! Seeded generators for the synthetic experiments.
//!
//! Every generator takes a `u64` seed and uses ChaCha8, so output is
//! identical across runs and platforms. Independent pieces of one generator
//! (per class, per sample set) draw from separate ChaCha streams of the same
//! seed.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Gamma, StandardNormal};

use crate::dataset::ClassData;
use crate::error::{validation, Error, Result};
use crate::linalg::{gram_schmidt_columns, leading_scatter_eigenpair, DEFAULT_RANK_TOL};
use crate::subspace::{fit_class, ClassModel, DimRule, SubspaceEnsemble};

/// Version tag of the generator algorithms. Bumped whenever a change would
/// alter output for a fixed seed.
pub const GENERATOR_VERSION: u32 = 1;

/// Documentation of how simplex weights are drawn, for output metadata.
pub const SIMPLEX_SAMPLING: &str =
    "uniform on the simplex: i.i.d. Exp(1) draws divided by their sum";

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Generator for stream `stream` of `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

pub fn gaussian_vector<R: Rng + ?Sized>(l: usize, rng: &mut R) -> DVector<f64> {
    DVector::from_fn(l, |_, _| rng.sample(StandardNormal))
}

pub fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// Uniformly distributed direction on the unit sphere.
pub fn random_unit_vector<R: Rng + ?Sized>(l: usize, rng: &mut R) -> DVector<f64> {
    loop {
        let v = gaussian_vector(l, rng);
        let n = v.norm();
        if n > 0.0 {
            return v / n;
        }
    }
}

/// Per-axis standard deviations of a generated class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AxisProfile {
    /// Every axis has deviation `sigma_max`.
    Isotropic,
    /// Axis `i` (0-based) has deviation `sigma_max · ρ^i`.
    Geometric(f64),
}

impl AxisProfile {
    pub fn deviations(&self, l: usize, sigma_max: f64) -> Vec<f64> {
        match *self {
            AxisProfile::Isotropic => vec![sigma_max; l],
            AxisProfile::Geometric(rho) => (0..l).map(|i| sigma_max * rho.powi(i as i32)).collect(),
        }
    }
}

/// `n` draws (as columns) from a diagonal Gaussian centered at
/// `mean_norm · mean_direction / ‖mean_direction‖`.
pub fn gaussian_class(
    mean_direction: &DVector<f64>,
    mean_norm: f64,
    sigma_max: f64,
    n: usize,
    profile: AxisProfile,
    seed: u64,
) -> Result<DMatrix<f64>> {
    let l = mean_direction.len();
    if l == 0 || n == 0 {
        return Err(validation("gaussian_class needs L ≥ 1 and n ≥ 1"));
    }
    if !(mean_norm >= 0.0) || !(sigma_max >= 0.0) || !mean_norm.is_finite() || !sigma_max.is_finite() {
        return Err(validation(format!(
            "mean_norm {mean_norm} and sigma_max {sigma_max} must be finite and nonnegative"
        )));
    }
    if let AxisProfile::Geometric(rho) = profile {
        if !(rho > 0.0 && rho <= 1.0) {
            return Err(validation(format!("geometric ratio {rho} not in (0, 1]")));
        }
    }
    let dn = mean_direction.norm();
    let mean = if mean_norm == 0.0 {
        DVector::zeros(l)
    } else if dn > 0.0 && dn.is_finite() {
        mean_direction * (mean_norm / dn)
    } else {
        return Err(validation("mean direction must be a nonzero finite vector"));
    };
    let sd = profile.deviations(l, sigma_max);
    let mut rng = rng(seed);
    Ok(DMatrix::from_fn(l, n, |i, _| {
        let z: f64 = rng.sample(StandardNormal);
        mean[i] + sd[i] * z
    }))
}

/// Settings of one heuristic-principle Monte-Carlo trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeuristicTrial {
    pub dim: usize,
    /// `‖m‖ / σ_max`.
    pub ratio: f64,
    pub samples: usize,
    pub profile: AxisProfile,
}

impl HeuristicTrial {
    pub fn new(dim: usize, ratio: f64) -> Self {
        HeuristicTrial {
            dim,
            ratio,
            samples: 500,
            profile: AxisProfile::Geometric(0.93),
        }
    }
}

/// Absolute cosine between the first uncentered-PCA eigenvector and the
/// sample mean of one class with a random mean direction.
///
/// The eigenvector comes from power iteration on the samples, with the full
/// decomposition as fallback when the iteration stalls.
pub fn heuristic_trial(trial: &HeuristicTrial, seed: u64) -> Result<f64> {
    let mut dir_rng = stream_rng(seed, 1);
    let dir = random_unit_vector(trial.dim, &mut dir_rng);
    let x = gaussian_class(&dir, trial.ratio, 1.0, trial.samples, trial.profile, seed)?;
    let mean = x.column_mean();
    let n = mean.norm();
    if n == 0.0 {
        return Err(Error::UndefinedDirection("sample mean is zero".into()));
    }
    let scale = 1.0 / trial.samples as f64;
    let first = match leading_scatter_eigenpair(&x, scale, 1e-13, 10_000) {
        Some((_, v)) => v,
        None => {
            log::warn!("power iteration did not converge; using the full decomposition");
            fit_class("trial", &x, DimRule::Fixed(1))?.first_vector()
        }
    };
    Ok(first.dot(&mean).abs() / n)
}

/// Uniform draw from the `(k−1)`-simplex.
pub fn simplex_weights<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let e: Vec<f64> = (0..k).map(|_| Exp1.sample(rng)).collect();
        let s: f64 = e.iter().sum();
        if s > 0.0 {
            return e.into_iter().map(|v| v / s).collect();
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MixtureMode {
    /// `S′ = 5 L_m + Σ cᵢ Lᵢ` with `L_m` the mean basis vector.
    Set1,
    /// `S′ = 2 L_j + Σ_{i≠j} cᵢ Lᵢ` with `j` uniform.
    Set2,
    /// `S′ = Σ cᵢ Lᵢ` with `c ~ Dirichlet(α)`.
    Dirichlet(f64),
}

impl fmt::Display for MixtureMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MixtureMode::Set1 => f.write_str("set1"),
            MixtureMode::Set2 => f.write_str("set2"),
            MixtureMode::Dirichlet(a) => write!(f, "dirichlet:{a}"),
        }
    }
}

impl FromStr for MixtureMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "set1" => Ok(MixtureMode::Set1),
            "set2" => Ok(MixtureMode::Set2),
            other => match other.strip_prefix("dirichlet:").map(str::parse::<f64>) {
                Some(Ok(a)) if a > 0.0 => Ok(MixtureMode::Dirichlet(a)),
                _ => Err(validation(format!("unknown mixture mode {s}"))),
            },
        }
    }
}

fn dirichlet_weights<R: Rng + ?Sized>(k: usize, gamma: &Gamma<f64>, rng: &mut R) -> Option<Vec<f64>> {
    let g: Vec<f64> = (0..k).map(|_| gamma.sample(rng)).collect();
    let s: f64 = g.iter().sum();
    (s > 0.0).then(|| g.into_iter().map(|v| v / s).collect())
}

/// `count` unit-norm convex mixtures of `basis` (as columns).
pub fn convex_mixture(
    basis: &[DVector<f64>],
    mode: MixtureMode,
    count: usize,
    seed: u64,
) -> Result<DMatrix<f64>> {
    let k = basis.len();
    if k < 2 {
        return Err(validation("convex_mixture needs at least 2 basis vectors"));
    }
    let l = basis[0].len();
    if l == 0 {
        return Err(validation("basis vectors are empty"));
    }
    for b in basis {
        if b.len() != l {
            return Err(Error::DimensionMismatch {
                expected: l,
                got: b.len(),
            });
        }
        if (b.norm() - 1.0).abs() > 1e-10 {
            return Err(validation("basis vectors must have unit norm"));
        }
    }
    let gamma = match mode {
        MixtureMode::Dirichlet(a) => Some(
            Gamma::new(a, 1.0).map_err(|e| validation(format!("Dirichlet parameter {a}: {e}")))?,
        ),
        _ => None,
    };
    let mean = basis.iter().fold(DVector::zeros(l), |acc, b| acc + b) / k as f64;
    let mut rng = rng(seed);
    let mut out = DMatrix::zeros(l, count);
    let mut j = 0;
    while j < count {
        let s = match mode {
            MixtureMode::Set1 => {
                let c = simplex_weights(k, &mut rng);
                basis.iter().zip(&c).fold(&mean * 5.0, |acc, (b, w)| acc + b * *w)
            }
            MixtureMode::Set2 => {
                let anchor = rng.random_range(0..k);
                let c = simplex_weights(k - 1, &mut rng);
                basis
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| *i != anchor)
                    .zip(&c)
                    .fold(&basis[anchor] * 2.0, |acc, ((_, b), w)| acc + b * *w)
            }
            MixtureMode::Dirichlet(_) => {
                let Some(c) = dirichlet_weights(k, gamma.as_ref().unwrap(), &mut rng) else {
                    log::warn!("Dirichlet draw underflowed; resampling");
                    continue;
                };
                basis.iter().zip(&c).fold(DVector::zeros(l), |acc, (b, w)| acc + b * *w)
            }
        };
        let n = s.norm();
        if n == 0.0 || !n.is_finite() {
            log::warn!("convex mixture sample {j} is zero; resampling");
            continue;
        }
        out.set_column(j, &(s / n));
        j += 1;
    }
    Ok(out)
}

/// Shape of the synthetic per-class bases used by the mixture experiments.
///
/// Every basis vector is `|t + pattern·p_c + noise·q|` normalized, with `t`
/// a nonnegative template shared by all classes, `p_c` a class pattern and
/// `q` fresh per vector; all are standard Gaussian (`t` folded to `|·|`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixtureBases {
    pub classes: usize,
    pub vectors_per_class: usize,
    pub dim: usize,
    pub pattern: f64,
    pub noise: f64,
}

impl MixtureBases {
    pub fn new(classes: usize, dim: usize) -> Self {
        MixtureBases {
            classes,
            vectors_per_class: 9,
            dim,
            pattern: 0.1,
            noise: 0.8,
        }
    }

    pub fn generate(&self, seed: u64) -> Result<Vec<Vec<DVector<f64>>>> {
        if self.classes < 2 || self.vectors_per_class < 2 || self.dim == 0 {
            return Err(validation("need ≥ 2 classes, ≥ 2 vectors per class and L ≥ 1"));
        }
        let mut rng = rng(seed);
        let template = gaussian_vector(self.dim, &mut rng).abs();
        let mut out = Vec::with_capacity(self.classes);
        for _ in 0..self.classes {
            let pattern = gaussian_vector(self.dim, &mut rng);
            let mut class = Vec::with_capacity(self.vectors_per_class);
            while class.len() < self.vectors_per_class {
                let q = gaussian_vector(self.dim, &mut rng);
                let v = (&template + &pattern * self.pattern + q * self.noise).abs();
                let n = v.norm();
                if n > 0.0 {
                    class.push(v / n);
                }
            }
            out.push(class);
        }
        Ok(out)
    }
}

/// Class labels `"1"`, `"2"`, … paired with samples, one mixture set per
/// class drawn from its own stream.
pub fn mixture_classes(
    bases: &[Vec<DVector<f64>>],
    mode: MixtureMode,
    per_class: usize,
    seed: u64,
) -> Result<Vec<ClassData>> {
    bases
        .iter()
        .enumerate()
        .map(|(c, b)| {
            let stream_seed = stream_rng(seed, c as u64 + 1).random::<u64>();
            Ok(ClassData {
                label: (c + 1).to_string(),
                samples: convex_mixture(b, mode, per_class, stream_seed)?,
            })
        })
        .collect()
}

/// Random orthonormal `L × N` basis.
pub fn random_basis<R: Rng + ?Sized>(l: usize, n: usize, rng: &mut R) -> DMatrix<f64> {
    loop {
        if let Ok(b) = gram_schmidt_columns(&gaussian_matrix(l, n, rng), DEFAULT_RANK_TOL) {
            if b.dim() == n {
                return b.into_matrix();
            }
        }
    }
}

/// `C` random `N`-dimensional class subspaces in `R^L`.
///
/// Class `c` spans `s·G_c + (1 − s)·G_shared` with `G_c`, `G_shared` random
/// orthonormal bases, so `separation = 1` gives independent uniform
/// subspaces and smaller values pull every class toward `G_shared`. Class
/// eigenvalues are `1, 1/2, …, 1/N` and the mean is the first basis vector.
pub fn subspace_config(c: usize, n: usize, l: usize, separation: f64, seed: u64) -> Result<SubspaceEnsemble> {
    if c < 2 || n == 0 {
        return Err(validation("subspace_config needs C ≥ 2 and N ≥ 1"));
    }
    if c * n > l {
        return Err(validation(format!("C·N = {} exceeds L = {l}", c * n)));
    }
    if !(separation > 0.0 && separation <= 1.0) {
        return Err(validation(format!("separation {separation} not in (0, 1]")));
    }
    let mut rng = rng(seed);
    let shared = random_basis(l, n, &mut rng);
    let eigenvalues: Vec<f64> = (1..=n).map(|i| 1.0 / i as f64).collect();
    let classes = (0..c)
        .map(|k| {
            let own = random_basis(l, n, &mut rng);
            let mixed = own * separation + &shared * (1.0 - separation);
            let basis = gram_schmidt_columns(&mixed, DEFAULT_RANK_TOL)?;
            if basis.dim() < n {
                return Err(validation(format!(
                    "class {} basis lost rank at separation {separation}",
                    k + 1
                )));
            }
            let mean = basis.column(0).into_owned();
            ClassModel::from_basis((k + 1).to_string(), basis, eigenvalues.clone(), mean, n)
        })
        .collect::<Result<Vec<_>>>()?;
    SubspaceEnsemble::new(classes)
}

/// Parameters for one generator invocation.
#[derive(Debug, Clone, PartialEq)]
pub enum GenSpec {
    GaussianClass {
        dim: usize,
        mean_norm: f64,
        sigma_max: f64,
        samples: usize,
        profile: AxisProfile,
    },
    HeuristicTrial(HeuristicTrial),
    ConvexMixture {
        bases: MixtureBases,
        mode: MixtureMode,
        per_class: usize,
    },
    SubspaceConfig {
        classes: usize,
        dim: usize,
        ambient: usize,
        separation: f64,
    },
}
