//! Seeded invariant batteries with their residuals and tolerances.

use std::fmt::Write as _;

use gfda::fisher::{
    between_scatter, between_scatter_pairwise, class_autocorrelation, class_covariance,
    fisher_criterion, gap_index, gfda_generalized_spectrum, gfda_linear_form, gfda_product_form,
    scatter_ladder, Rung,
};
use gfda::linalg::{subspace_cosines, sym_eig, OrthoBasis};
use gfda::subspace::{
    difference_subspace_analytic, difference_subspace_geometric, gds_decomposition, projection_matrix,
    ClassModel, SubspaceEnsemble,
};
use gfda::synth::{gaussian_matrix, heuristic_trial, random_basis, rng, subspace_config, HeuristicTrial};
use nalgebra::{DMatrix, DVector};

use crate::config::{ExperimentConfig, Scope};
use crate::error::{CliError, Result};

pub const REPORT_HEADER: &str = "suite,max_residual,tolerance,status";

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteResult {
    pub suite: String,
    pub max_residual: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl SuiteResult {
    fn check(suite: &str, max_residual: f64, tolerance: f64) -> Self {
        SuiteResult {
            suite: suite.into(),
            max_residual,
            tolerance,
            passed: max_residual <= tolerance,
        }
    }

    pub fn status(&self) -> &'static str {
        if self.passed {
            "PASS"
        } else {
            "FAIL"
        }
    }
}

/// `(C, N, L, seed)` of the ensemble sweep: `C ∈ 2..=10` and `N ∈ 1..=5`
/// cycled over 200 ensembles with `L = 4CN`, or 50 ensembles of a single
/// `C`.
pub fn ensemble_sweep(classes: Option<usize>, seed: u64) -> Vec<(usize, usize, usize, u64)> {
    let count = if classes.is_some() { 50 } else { 200 };
    (0..count)
        .map(|i| {
            let (c, n) = match classes {
                Some(c) => (c, 1 + i % 5),
                None => (2 + i % 9, 1 + (i / 9) % 5),
            };
            (c, n, 4 * c * n, seed.wrapping_add(i as u64))
        })
        .collect()
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |a, v| a.max(v.abs()))
}

fn ensembles(cfg: &ExperimentConfig) -> Result<Vec<SubspaceEnsemble>> {
    let classes = cfg.is_explicit("classes").then_some(cfg.classes);
    if classes.is_some_and(|c| c < 2) {
        return Err(CliError::Config("invariant sweeps need at least 2 classes".into()));
    }
    ensemble_sweep(classes, cfg.seed)
        .into_iter()
        .map(|(c, n, l, s)| Ok(subspace_config(c, n, l, 1.0, s)?))
        .collect()
}

/// Largest relative deviation of the nonzero generalized eigenvalues of
/// `(Σ_B3, Σ_W4)` from `C`; infinite when there are not exactly `C − 1`.
pub fn spectrum_residual(e: &SubspaceEnsemble) -> Result<f64> {
    let c = e.class_count() as f64;
    let values = gfda_generalized_spectrum(e)?;
    let nonzero: Vec<f64> = values.into_iter().filter(|v| v.abs() > 1e-6 * c).collect();
    if nonzero.len() != e.class_count() - 1 {
        return Ok(f64::INFINITY);
    }
    Ok(nonzero.iter().fold(0.0, |a, v| a.max((v - c).abs() / c)))
}

/// `1 −` smallest canonical cosine between the product-form and linear-form
/// discriminant spaces.
pub fn duality_residual(e: &SubspaceEnsemble) -> Result<f64> {
    let p = gfda_product_form(e)?.data_space_basis()?;
    let l = gfda_linear_form(e)?.basis;
    if p.dim() != l.dim() {
        return Ok(1.0);
    }
    Ok(1.0 - subspace_cosines(&p, &l)?.into_iter().fold(1.0, f64::min))
}

/// Largest `|f_g(d) − C| / C` over the gFDA basis and the relative error of
/// the total power against `C(C − 1)`.
pub fn power_residuals(e: &SubspaceEnsemble) -> Result<(f64, f64)> {
    let c = e.class_count() as f64;
    let pair = scatter_ladder(e, Rung::GFda);
    let basis = gfda_linear_form(e)?.basis;
    let mut worst = 0.0f64;
    let mut total = 0.0;
    for d in basis.columns() {
        let f = fisher_criterion(&d.into_owned(), &pair)?;
        worst = worst.max((f - c).abs() / c);
        total += f;
    }
    Ok((worst, (total - c * (c - 1.0)).abs() / (c * (c - 1.0))))
}

fn line_model(label: &str, v: DVector<f64>) -> Result<ClassModel> {
    let basis = OrthoBasis::new(DMatrix::from_column_slice(v.len(), 1, v.as_slice()))?;
    Ok(ClassModel::from_basis(label, basis, vec![1.0], v, 1)?)
}

fn random_model(label: &str, l: usize, n: usize, seed: u64) -> Result<ClassModel> {
    let basis = OrthoBasis::new(random_basis(l, n, &mut rng(seed)))?;
    let mean = basis.column(0);
    Ok(ClassModel::from_basis(label, basis, vec![1.0; n], mean, n)?)
}

fn ds_suite(seed: u64) -> Result<Vec<SuiteResult>> {
    let mut worst = 0.0f64;
    for i in 0..100usize {
        let (m, n) = (1 + i % 3, 1 + (i / 3) % 3);
        let l = 4 * (m + n);
        let s = seed.wrapping_mul(1_000_003).wrapping_add(2 * i as u64);
        let a = random_model("a", l, m, s)?;
        let b = random_model("b", l, n, s + 1)?;
        let geo = difference_subspace_geometric(&a, &b)?;
        let ana = difference_subspace_analytic(&a, &b)?.difference;
        let res = if geo.dim() != ana.dim() {
            1.0
        } else {
            1.0 - subspace_cosines(&geo, &ana)?.into_iter().fold(1.0, f64::min)
        };
        worst = worst.max(res);
    }
    let t = std::f64::consts::FRAC_PI_3;
    let a = line_model("a", DVector::from_vec(vec![1.0, 0.0]))?;
    let b = line_model("b", DVector::from_vec(vec![t.cos(), t.sin()]))?;
    let sum = &projection_matrix(&a) + &projection_matrix(&b);
    let eig = sym_eig(&sum);
    let sixty = (eig.values[0] - 0.5).abs().max((eig.values[1] - 1.5).abs());
    Ok(vec![
        SuiteResult::check("ds-agreement", worst, 1e-8),
        SuiteResult::check("ds-sixty-degrees", sixty, 1e-12),
    ])
}

fn decomposition_suite(seed: u64) -> Result<Vec<SuiteResult>> {
    let (mut g_res, mut ghat_res) = (0.0f64, 0.0f64);
    for c in 2..=8usize {
        let e = subspace_config(c, 3, 12 * c, 1.0, seed.wrapping_add(c as u64))?;
        let cf = c as f64;
        let g = e.sum_matrix().into_matrix();
        let (a, w5) = gds_decomposition(&e)?;
        let (a, w5) = (a.into_matrix(), w5.into_matrix());
        let b3 = &a * (2.0 * (cf - 1.0));
        g_res = g_res.max(max_abs(&(&g - (&a + &w5))) / max_abs(&g));
        let ghat = &g - &b3 / cf;
        let rewritten = &b3 * (1.0 / (2.0 * (cf - 1.0)) - 1.0 / cf) + &w5;
        ghat_res = ghat_res.max(max_abs(&(&ghat - rewritten)) / max_abs(&ghat));
    }

    let mut r = rng(seed);
    let (mut between_res, mut auto_res) = (0.0f64, 0.0f64);
    for k in 0..20usize {
        let c = 2 + k % 4;
        let means: Vec<DVector<f64>> = (0..c).map(|_| gaussian_matrix(6, 1, &mut r).column(0).into_owned()).collect();
        let counts: Vec<usize> = (0..c).map(|i| 1 + (i * 7 + k) % 9).collect();
        let f1 = between_scatter(&means, &counts)?;
        let f2 = between_scatter_pairwise(&means, &counts)?;
        between_res = between_res.max(f1.relative_difference(&f2));

        let mut x = gaussian_matrix(5, 20, &mut r);
        for mut col in x.column_iter_mut() {
            col[0] += 3.0;
        }
        let m = x.column_mean();
        let mut rhs = class_covariance(&x);
        rhs.add_outer(&m, 1.0);
        auto_res = auto_res.max(class_autocorrelation(&x).relative_difference(&rhs));
    }
    Ok(vec![
        SuiteResult::check("decomposition-g", g_res, 1e-10),
        SuiteResult::check("decomposition-ghat", ghat_res, 1e-10),
        SuiteResult::check("between-forms", between_res, 1e-12),
        SuiteResult::check("autocorrelation", auto_res, 1e-12),
    ])
}

/// `σ(C)` for the reported class counts.
pub fn gap_table() -> Vec<(usize, f64)> {
    [2, 3, 5, 20, 100].into_iter().map(|c| (c, gap_index(c))).collect()
}

fn gap_suite() -> SuiteResult {
    let increasing = (2..100).all(|c| gap_index(c + 1) > gap_index(c));
    let dev = (gap_index(100) - 2.0).abs();
    let mut s = SuiteResult::check("gap", dev, 0.02);
    // 2 - 1.98 rounds a few ulps above 0.02
    s.passed = dev <= 0.02 + 8.0 * f64::EPSILON && increasing && gap_index(2) == 1.0;
    s
}

/// Mean correlation and fraction of trials above 0.995, per dimension.
pub fn heuristic_stats(seed: u64) -> Result<Vec<(usize, f64, f64)>> {
    [10usize, 100, 1000]
        .into_iter()
        .map(|l| {
            let trial = HeuristicTrial::new(l, 2.0);
            let r: Vec<f64> = (0..100u64)
                .map(|t| heuristic_trial(&trial, seed.wrapping_add(t)))
                .collect::<gfda::Result<_>>()?;
            let mean = r.iter().sum::<f64>() / r.len() as f64;
            let frac = r.iter().filter(|&&v| v > 0.995).count() as f64 / r.len() as f64;
            Ok((l, mean, frac))
        })
        .collect()
}

fn heuristic_suite(seed: u64) -> Result<SuiteResult> {
    let stats = heuristic_stats(seed)?;
    let worst = stats.iter().fold(0.0f64, |a, s| a.max(1.0 - s.1));
    let mut s = SuiteResult::check("heuristic", worst, 0.002);
    s.passed &= stats.iter().all(|s| s.2 >= 0.95);
    Ok(s)
}

pub fn run(cfg: &ExperimentConfig) -> Result<Vec<SuiteResult>> {
    let mut out = Vec::new();
    let needs_sweep = cfg
        .scope
        .iter()
        .any(|s| matches!(s, Scope::Spectrum | Scope::Duality | Scope::Power));
    let sweep = if needs_sweep { ensembles(cfg)? } else { Vec::new() };
    for scope in &cfg.scope {
        match scope {
            Scope::Spectrum => {
                let mut worst = 0.0f64;
                for e in &sweep {
                    worst = worst.max(spectrum_residual(e)?);
                }
                out.push(SuiteResult::check("spectrum", worst, 1e-8));
            }
            Scope::Duality => {
                let mut worst = 0.0f64;
                for e in &sweep {
                    worst = worst.max(duality_residual(e)?);
                }
                out.push(SuiteResult::check("duality", worst, 1e-8));
            }
            Scope::Power => {
                let (mut each, mut total) = (0.0f64, 0.0f64);
                for e in &sweep {
                    let (a, b) = power_residuals(e)?;
                    each = each.max(a);
                    total = total.max(b);
                }
                out.push(SuiteResult::check("power", each, 1e-8));
                out.push(SuiteResult::check("power-total", total, 1e-8));
            }
            Scope::Ds => out.extend(ds_suite(cfg.seed)?),
            Scope::Decomposition => out.extend(decomposition_suite(cfg.seed)?),
            Scope::Gap => out.push(gap_suite()),
            Scope::Heuristic => out.push(heuristic_suite(cfg.seed)?),
        }
    }
    Ok(out)
}

pub fn report_csv(results: &[SuiteResult]) -> String {
    let mut s = String::from(REPORT_HEADER);
    s.push('\n');
    for r in results {
        writeln!(s, "{},{:e},{:e},{}", r.suite, r.max_residual, r.tolerance, r.status()).unwrap();
    }
    s
}

/// Runs the selected batteries; any failure is an [`CliError::Invariant`].
pub fn cmd_invariants(cfg: &ExperimentConfig) -> Result<()> {
    let results = run(cfg)?;
    let mut human = String::new();
    for r in &results {
        writeln!(
            human,
            "{:<20} {:>12.3e}  (tol {:.0e})  {}",
            r.suite,
            r.max_residual,
            r.tolerance,
            r.status()
        )
        .unwrap();
    }
    if cfg.scope.contains(&Scope::Gap) {
        for (c, s) in gap_table() {
            writeln!(human, "gap_index C={c:<4} {s}").unwrap();
        }
    }
    let csv = report_csv(&results);
    match &cfg.out {
        Some(p) => {
            crate::commands::emit(Some(p), &csv)?;
            print!("{human}");
        }
        None => {
            print!("{csv}");
            eprint!("{human}");
        }
    }
    let failed: Vec<&str> = results.iter().filter(|r| !r.passed).map(|r| r.suite.as_str()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Invariant(failed.join(", ")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_covers_the_grid() {
        let s = ensemble_sweep(None, 0);
        assert_eq!(s.len(), 200);
        for c in 2..=10 {
            for n in 1..=5 {
                assert!(s.iter().any(|&(a, b, l, _)| a == c && b == n && l == 4 * c * n));
            }
        }
        assert!(ensemble_sweep(Some(7), 0).iter().all(|e| e.0 == 7));
    }

    #[test]
    fn gap_table_values() {
        let t = gap_table();
        assert_eq!(t[0], (2, 1.0));
        assert!((t[1].1 - 4.0 / 3.0).abs() < 1e-15);
        assert_eq!(t[2].1, 1.6);
        assert_eq!(t[3].1, 1.9);
        assert_eq!(t[4].1, 1.98);
        assert!(gap_suite().passed);
    }

    #[test]
    fn cheap_suites_pass() {
        assert!(ds_suite(1).unwrap().iter().all(|r| r.passed));
        assert!(decomposition_suite(1).unwrap().iter().all(|r| r.passed));
    }
}
