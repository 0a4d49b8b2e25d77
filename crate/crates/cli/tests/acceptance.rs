//! Acceptance battery. Prints one PASS/FAIL line per criterion and exits
//! nonzero when any criterion fails.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use gfda::classify::{evaluate, Rule};
use gfda::dataset::{ClassData, Dataset};
use gfda::error::Error;
use gfda::fisher::{eigencurves, fda, gap_index, gfda_linear_form, null_lda, pca_lda};
use gfda::subspace::{DimRule, SubspaceEnsemble};
use gfda::synth::{
    gaussian_class, mixture_classes, random_unit_vector, stream_rng, subspace_config, AxisProfile, MixtureBases,
    MixtureMode,
};
use gfda_cli::config::ExperimentConfig;
use gfda_cli::invariants::{self, duality_residual, ensemble_sweep, heuristic_stats, power_residuals, spectrum_residual};

type Outcome = std::result::Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn sweep() -> Vec<SubspaceEnsemble> {
    ensemble_sweep(None, 0)
        .into_iter()
        .map(|(c, n, l, s)| subspace_config(c, n, l, 1.0, s).expect("sweep configuration"))
        .collect()
}

fn within_time(detail: String, elapsed: Duration, limit: Duration) -> Outcome {
    if elapsed < limit {
        Ok(detail)
    } else {
        Err(format!("{detail}; took {elapsed:.1?}, limit {limit:?}"))
    }
}

fn suites(scope: &str) -> Vec<invariants::SuiteResult> {
    let cfg = ExperimentConfig::load(None, &[("scope".into(), scope.into())]).unwrap();
    invariants::run(&cfg).unwrap()
}

fn suites_outcome(scope: &str) -> Outcome {
    let results = suites(scope);
    let detail = results
        .iter()
        .map(|r| format!("{} {:.1e}/{:.0e}", r.suite, r.max_residual, r.tolerance))
        .collect::<Vec<_>>()
        .join(", ");
    if results.iter().all(|r| r.passed) {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn c1_spectrum() -> Outcome {
    let start = Instant::now();
    let ensembles = sweep();
    let mut worst = 0.0f64;
    for e in &ensembles {
        worst = worst.max(spectrum_residual(e).map_err(|e| e.to_string())?);
    }
    let detail = format!("{} ensembles, max relative deviation from C {worst:.2e}", ensembles.len());
    if worst > 1e-8 {
        return Err(detail);
    }
    within_time(detail, start.elapsed(), Duration::from_secs(30))
}

fn c2_duality() -> Outcome {
    let start = Instant::now();
    let ensembles = sweep();
    let mut worst = 0.0f64;
    for e in &ensembles {
        worst = worst.max(duality_residual(e).map_err(|e| e.to_string())?);
    }
    let detail = format!("{} ensembles, 1 - min cosine {worst:.2e}", ensembles.len());
    if worst > 1e-8 {
        return Err(detail);
    }
    within_time(detail, start.elapsed(), Duration::from_secs(60))
}

fn difference_subspaces() -> Outcome {
    suites_outcome("ds")
}

fn decomposition() -> Outcome {
    suites_outcome("decomposition")
}

fn heuristic() -> Outcome {
    let start = Instant::now();
    let stats = heuristic_stats(0).map_err(|e| e.to_string())?;
    let detail = stats
        .iter()
        .map(|(l, mean, frac)| format!("L={l} mean {mean:.5} above-0.995 {:.0}%", frac * 100.0))
        .collect::<Vec<_>>()
        .join(", ");
    if stats.len() != 3 || stats.iter().any(|&(_, mean, frac)| mean <= 0.998 || frac < 0.95) {
        return Err(detail);
    }
    within_time(detail, start.elapsed(), Duration::from_secs(60))
}

fn gap() -> Outcome {
    let increasing = (2..1000).all(|c| gap_index(c + 1) > gap_index(c));
    let dev = (gap_index(100) - 2.0).abs();
    let mut detail = format!("sigma(2) {}, |sigma(100) - 2| {dev:.4}", gap_index(2));
    // 2 - 1.98 rounds a few ulps above 0.02
    let mut ok = gap_index(2) == 1.0 && increasing && dev <= 0.02 + 8.0 * f64::EPSILON;
    for seed in 0..3u64 {
        let d: Vec<f64> = [3usize, 5, 20, 100]
            .iter()
            .map(|&c| {
                let e = subspace_config(c, 3, 400, 1.0, seed).expect("eigencurve configuration");
                eigencurves(&e).expect("eigencurves").divergence()
            })
            .collect();
        ok &= d.windows(2).all(|w| w[1] > w[0]);
        detail += &format!(
            "; seed {seed} divergence {}",
            d.iter().map(|v| format!("{v:.3}")).collect::<Vec<_>>().join(" < ")
        );
    }
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn power() -> Outcome {
    let mut worst = (0.0f64, 0.0f64);
    for e in sweep() {
        let (each, total) = power_residuals(&e).map_err(|e| e.to_string())?;
        worst = (worst.0.max(each), worst.1.max(total));
    }
    let three = subspace_config(3, 2, 24, 1.0, 7).map_err(|e| e.to_string())?;
    let (_, total3) = power_residuals(&three).map_err(|e| e.to_string())?;
    let detail = format!(
        "max |f - C|/C {:.2e}, max total error {:.2e}, C=3 total 6 within {:.1e}",
        worst.0,
        worst.1,
        total3 * 6.0
    );
    if worst.0 <= 1e-8 && worst.1 <= 1e-8 && total3 * 6.0 <= 1e-8 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Ten Gaussian classes in 60 dimensions; one training sample per class.
fn sss_sets(seed: u64) -> (Vec<ClassData>, Dataset) {
    let mut dirs = stream_rng(seed, 0);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for c in 0..10u64 {
        let dir = random_unit_vector(60, &mut dirs);
        let s = seed * 100 + c;
        let samples = gaussian_class(&dir, 4.0, 0.3, 21, AxisProfile::Isotropic, s).unwrap();
        train.push(ClassData {
            label: (c + 1).to_string(),
            samples: samples.columns(0, 1).into_owned(),
        });
        test.push(ClassData {
            label: (c + 1).to_string(),
            samples: samples.columns(1, 20).into_owned(),
        });
    }
    (train, Dataset::from_classes(&test).unwrap())
}

fn sss_bypass() -> Outcome {
    let mut rates = Vec::new();
    let mut notes = Vec::new();
    for seed in 0..10u64 {
        let (train, test) = sss_sets(seed);
        match fda(&train) {
            Err(Error::SingularWithin { rank: 0, .. }) => {}
            other => return Err(format!("seed {seed}: within-class scatter not zero: {:?}", other.err())),
        }
        let pca = pca_lda(&train, 1e-2).map_err(|e| e.to_string())?;
        if !pca.flags.iter().any(|f| f.starts_with("regularized-fallback")) {
            return Err(format!("seed {seed}: pcaLDA did not need its fallback"));
        }
        let model = gfda_linear_form(&SubspaceEnsemble::fit(&train, DimRule::Full).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
        rates.push(evaluate(&model, &test, Rule::NearestMean).map_err(|e| e.to_string())?.recognition_rate);
        if seed == 0 {
            let null = null_lda(&train).map_err(|e| e.to_string())?;
            let null_rate = evaluate(&null, &test, Rule::NearestMean).map_err(|e| e.to_string())?.recognition_rate;
            notes.push(format!("nullLDA on zero within-class scatter {null_rate:.1}%"));
        }
    }
    let mean = rates.iter().sum::<f64>() / rates.len() as f64;
    let min = rates.iter().copied().fold(f64::INFINITY, f64::min);
    let detail = format!(
        "FDA singular (rank 0), pcaLDA fell back to regularization; gfda-linear mean {mean:.2}% min {min:.2}% over 10 seeds; {}",
        notes.join(", ")
    );
    if min > 90.0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn mixture_sweep() -> Outcome {
    let start = Instant::now();
    let mut ok = true;
    let mut detail = Vec::new();
    for mode in [MixtureMode::Set1, MixtureMode::Set2] {
        for n in 2..=5usize {
            let (mut plain, mut normed) = ((0.0, 0.0), (0.0, 0.0));
            let seeds = 60u64;
            for seed in 0..seeds {
                let bases = MixtureBases::new(10, 300).generate(seed).map_err(|e| e.to_string())?;
                let train = mixture_classes(&bases, mode, n, seed + 1000).map_err(|e| e.to_string())?;
                let test = mixture_classes(&bases, MixtureMode::Dirichlet(0.3), 30, seed + 2000)
                    .map_err(|e| e.to_string())?;
                let test = Dataset::from_classes(&test).map_err(|e| e.to_string())?;
                let ens = SubspaceEnsemble::fit(&train, DimRule::Fixed(n)).map_err(|e| e.to_string())?;
                let model = gfda_linear_form(&ens).map_err(|e| e.to_string())?;
                let a = evaluate(&model, &test, Rule::NearestMean).map_err(|e| e.to_string())?;
                let b = evaluate(&model.with_normalization(true), &test, Rule::NearestMean)
                    .map_err(|e| e.to_string())?;
                plain.0 += a.recognition_rate;
                plain.1 += a.eer.unwrap();
                normed.0 += b.recognition_rate;
                normed.1 += b.eer.unwrap();
            }
            let k = seeds as f64;
            let (pr, pe, nr, ne) = (plain.0 / k, plain.1 / k, normed.0 / k, normed.1 / k);
            ok &= nr >= pr && ne <= pe + 0.5;
            detail.push(format!("{mode} n={n} rate {pr:.2}->{nr:.2} eer {pe:.2}->{ne:.2}"));
        }
    }
    let detail = detail.join(", ");
    if !ok {
        return Err(detail);
    }
    within_time(detail, start.elapsed(), Duration::from_secs(300))
}

fn gfda_bin(dir: &Path, args: &[&str]) -> std::result::Result<(), String> {
    let o = Command::new(env!("CARGO_BIN_EXE_gfda"))
        .current_dir(dir)
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if o.status.success() {
        Ok(())
    } else {
        Err(format!("{args:?}: {}", String::from_utf8_lossy(&o.stderr)))
    }
}

/// Runs a fixed command script in `dir`; returns the written files.
fn script(dir: &Path) -> std::result::Result<Vec<(String, Vec<u8>)>, String> {
    let runs: [&[&str]; 8] = [
        &["synth", "--kind", "gaussian", "--classes", "4", "--ambient", "20", "--samples", "12", "--seed", "5", "--out", "g.csv"],
        &["synth", "--kind", "mixture", "--classes", "3", "--ambient", "40", "--samples", "8", "--mode", "set2", "--seed", "6", "--out", "m.csv"],
        &["synth", "--kind", "subspace", "--classes", "3", "--dim", "2", "--ambient", "15", "--seed", "7", "--out", "s.csv"],
        &["fit", "--train", "g.csv", "--method", "gds", "--normalize", "--out", "model.json"],
        &["eval", "--model", "model.json", "--test", "g.csv", "--report", "report.json", "--out", "eval_model.csv"],
        &["eval", "--data", "m.csv", "--n-train", "3", "--repetitions", "5", "--seed", "9", "--out", "eval.csv"],
        &["sweep", "--data", "g.csv", "--n-values", "2..6", "--repetitions", "4", "--method", "regLDA", "--out", "sweep.csv"],
        &["eigencurves", "--classes", "4", "--dim", "2", "--ambient", "30", "--seed", "3", "--out", "eig.csv"],
    ];
    for args in runs {
        gfda_bin(dir, args)?;
    }
    gfda_bin(dir, &["invariants", "--scope", "ds,gap", "--seed", "2", "--out", "inv.csv"])?;
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .map_err(|e| e.to_string())?
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    Ok(files)
}

fn determinism() -> Outcome {
    let a = tempfile::tempdir().map_err(|e| e.to_string())?;
    let b = tempfile::tempdir().map_err(|e| e.to_string())?;
    let fa = script(a.path())?;
    let fb = script(b.path())?;
    let names: Vec<&str> = fa.iter().map(|(n, _)| n.as_str()).collect();
    if fa.len() != fb.len() || fa.iter().zip(&fb).any(|(x, y)| x.0 != y.0) {
        return Err(format!("file sets differ: {names:?}"));
    }
    let differing: Vec<&str> = fa.iter().zip(&fb).filter(|(x, y)| x.1 != y.1).map(|(x, _)| x.0.as_str()).collect();
    if differing.is_empty() {
        Ok(format!("{} files byte-identical across two runs", fa.len()))
    } else {
        Err(format!("differing files: {differing:?}"))
    }
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("spectrum of the simplified criterion equals C", c1_spectrum),
        ("product and linear forms coincide", c2_duality),
        ("difference subspace constructions agree", difference_subspaces),
        ("decomposition identities", decomposition),
        ("first eigenvector tracks the class mean", heuristic),
        ("gap index and eigencurve divergence", gap),
        ("gFDA discriminant power", power),
        ("one sample per class", sss_bypass),
        ("normalization on mixture classes", mixture_sweep),
        ("determinism of CLI outputs", determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = f();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(d) => println!("criterion {}: PASS {name} ({secs:.1}s) {d}", i + 1),
            Err(d) => {
                failed += 1;
                println!("criterion {}: FAIL {name} ({secs:.1}s) {d}", i + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
