//! Projection onto a discriminant space, nearest-mean and cosine
//! classification, and recognition-rate / EER evaluation.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;

use crate::dataset::{label_cmp, Dataset};
use crate::error::{validation, Error, Result};
use crate::fisher::DiscriminantModel;

const ZERO_PROJECTION_TOL: f64 = 1e-12;

/// `τ(x)`, optionally scaled to unit length.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectedPoint {
    pub coords: DVector<f64>,
    pub normalized: bool,
}

/// Projects `x` onto the discriminant space of `model`.
pub fn project(model: &DiscriminantModel, x: &DVector<f64>, normalize: bool) -> Result<ProjectedPoint> {
    let mut coords = model.coordinates(x)?;
    if normalize {
        let n = coords.norm();
        if !(n > ZERO_PROJECTION_TOL * x.norm()) || n == 0.0 {
            return Err(Error::UndefinedDirection(
                "projection is zero and cannot be normalized".into(),
            ));
        }
        coords /= n;
    }
    Ok(ProjectedPoint {
        coords,
        normalized: normalize,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rule {
    /// Smallest squared distance to a class reference; score is the negated
    /// squared distance.
    NearestMean,
    /// Largest signed cosine to a class reference.
    Cosine,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Rule::NearestMean => "nearest-mean",
            Rule::Cosine => "cosine",
        })
    }
}

impl FromStr for Rule {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nearest-mean" | "nearest_mean" | "nm" => Ok(Rule::NearestMean),
            "cosine" | "cos" => Ok(Rule::Cosine),
            _ => Err(validation(format!("unknown classifier rule {s}"))),
        }
    }
}

/// Class references as used for classification: normalized when the model
/// is a "+N" variant with reference normalization on.
pub fn effective_refs(model: &DiscriminantModel) -> Vec<DVector<f64>> {
    if model.normalized && model.ref_normalization {
        model
            .class_refs
            .iter()
            .map(|r| {
                let n = r.norm();
                if n > 0.0 {
                    r / n
                } else {
                    r.clone()
                }
            })
            .collect()
    } else {
        model.class_refs.clone()
    }
}

/// One score per class, in model order. Larger is more similar.
pub fn scores(model: &DiscriminantModel, x: &DVector<f64>, rule: Rule) -> Result<Vec<f64>> {
    let tau = project(model, x, model.normalized)?.coords;
    let refs = effective_refs(model);
    match rule {
        Rule::NearestMean => Ok(refs.iter().map(|r| -(&tau - r).norm_squared()).collect()),
        Rule::Cosine => {
            let tn = tau.norm();
            if tn == 0.0 {
                return Err(Error::UndefinedDirection(
                    "projection is zero: cosine undefined".into(),
                ));
            }
            refs.iter()
                .zip(&model.labels)
                .map(|(r, label)| {
                    let rn = r.norm();
                    if rn == 0.0 {
                        Err(Error::UndefinedDirection(format!(
                            "reference of class {label} is zero"
                        )))
                    } else {
                        Ok(tau.dot(r) / (tn * rn))
                    }
                })
                .collect()
        }
    }
}

/// Index of the best score; exact ties go to the smallest label.
fn best(scores: &[f64], labels: &[String]) -> usize {
    let mut best = 0;
    for i in 1..scores.len() {
        match scores[i].total_cmp(&scores[best]) {
            Ordering::Greater => best = i,
            Ordering::Equal if label_cmp(&labels[i], &labels[best]) == Ordering::Less => best = i,
            _ => {}
        }
    }
    best
}

pub fn classify(model: &DiscriminantModel, x: &DVector<f64>, rule: Rule) -> Result<String> {
    let s = scores(model, x, rule)?;
    Ok(model.labels[best(&s, &model.labels)].clone())
}

/// `argmin_c ‖τ(x) − ref_c‖²`.
pub fn classify_nearest_mean(model: &DiscriminantModel, x: &DVector<f64>) -> Result<String> {
    classify(model, x, Rule::NearestMean)
}

/// `argmax_c cos(τ(x), ref_c)`.
pub fn classify_cosine(model: &DiscriminantModel, x: &DVector<f64>) -> Result<String> {
    classify(model, x, Rule::Cosine)
}

pub const EER_PROTOCOL: &str = "one genuine score per sample (its own class reference) and one \
impostor score per other class reference, pooled; EER where FAR = FRR on the ROC convex hull";

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    /// Percent of test samples assigned their own label.
    pub recognition_rate: f64,
    /// Equal error rate in percent; `None` when the test set has a single
    /// class.
    pub eer: Option<f64>,
    /// Class labels indexing `confusion`, in model order.
    pub labels: Vec<String>,
    /// `confusion[true][predicted]`.
    pub confusion: Vec<Vec<usize>>,
    pub genuine: Vec<f64>,
    pub impostor: Vec<f64>,
    pub protocol: &'static str,
}

impl EvalReport {
    pub fn total(&self) -> usize {
        self.confusion.iter().flatten().sum()
    }
}

/// Classifies every test sample and scores the model.
pub fn evaluate(model: &DiscriminantModel, test: &Dataset, rule: Rule) -> Result<EvalReport> {
    if test.is_empty() {
        return Err(validation("test set is empty"));
    }
    let c = model.labels.len();
    let mut confusion = vec![vec![0usize; c]; c];
    let mut genuine = Vec::with_capacity(test.len());
    let mut impostor = Vec::with_capacity(test.len() * c.saturating_sub(1));
    let mut correct = 0usize;
    for (label, x) in test.iter() {
        let truth = model
            .labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| validation(format!("test label {label} is not a model class")))?;
        let s = scores(model, x, rule)?;
        let predicted = best(&s, &model.labels);
        confusion[truth][predicted] += 1;
        if predicted == truth {
            correct += 1;
        }
        for (i, v) in s.into_iter().enumerate() {
            if i == truth {
                genuine.push(v);
            } else {
                impostor.push(v);
            }
        }
    }
    let eer = if test.distinct_labels().len() < 2 || impostor.is_empty() {
        log::warn!("EER undefined for a single-class test set");
        None
    } else {
        Some(equal_error_rate(&genuine, &impostor)?)
    };
    Ok(EvalReport {
        recognition_rate: 100.0 * correct as f64 / test.len() as f64,
        eer,
        labels: model.labels.clone(),
        confusion,
        genuine,
        impostor,
        protocol: EER_PROTOCOL,
    })
}

/// `(FAR, FRR)` for every distinct acceptance threshold (accept when
/// `score ≥ t`), from `t = +∞` down to the smallest score.
pub fn roc_points(genuine: &[f64], impostor: &[f64]) -> Vec<(f64, f64)> {
    let ng = genuine.len() as f64;
    let ni = impostor.len() as f64;
    let mut all: Vec<(f64, bool)> = genuine
        .iter()
        .map(|&s| (s, true))
        .chain(impostor.iter().map(|&s| (s, false)))
        .collect();
    all.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut points = vec![(0.0, 1.0)];
    let (mut accepted_g, mut accepted_i) = (0usize, 0usize);
    let mut i = 0;
    while i < all.len() {
        let t = all[i].0;
        while i < all.len() && all[i].0 == t {
            if all[i].1 {
                accepted_g += 1;
            } else {
                accepted_i += 1;
            }
            i += 1;
        }
        points.push((accepted_i as f64 / ni, 1.0 - accepted_g as f64 / ng));
    }
    points
}

/// Equal error rate in percent.
///
/// The ROC points are reduced to their lower convex hull, whose segments
/// correspond to randomized mixtures of adjacent thresholds; the EER is where
/// that hull crosses `FAR = FRR`, by linear interpolation.
pub fn equal_error_rate(genuine: &[f64], impostor: &[f64]) -> Result<f64> {
    if genuine.is_empty() || impostor.is_empty() {
        return Err(validation("EER needs genuine and impostor scores"));
    }
    if genuine.iter().chain(impostor).any(|s| !s.is_finite()) {
        return Err(validation("scores must be finite"));
    }
    let points = roc_points(genuine, impostor);
    let mut hull: Vec<(f64, f64)> = Vec::with_capacity(points.len());
    for p in points {
        while hull.len() >= 2 {
            let (o, a) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            let cross = (a.0 - o.0) * (p.1 - o.1) - (a.1 - o.1) * (p.0 - o.0);
            if cross <= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    for w in hull.windows(2) {
        let (x1, y1) = w[0];
        let (x2, y2) = w[1];
        let d1 = y1 - x1;
        let d2 = y2 - x2;
        if d1 >= 0.0 && d2 <= 0.0 {
            let eer = if d1 == d2 {
                x1
            } else {
                x1 + d1 / (d1 - d2) * (x2 - x1)
            };
            return Ok(100.0 * eer);
        }
    }
    unreachable!("the hull runs from (0, 1) to (1, 0)")
}
