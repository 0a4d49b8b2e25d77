use std::fmt::Write as _;
use std::path::Path;

use gfda::classify::{evaluate, EvalReport, EER_PROTOCOL};
use gfda::dataset::{split_per_class, ClassData, Dataset};
use gfda::fisher::{
    eigencurves, fda, gap_index, gds_model, gfda_linear_form, gfda_product_form, null_lda, pca_lda,
    reg_lda, DiscriminantModel, Method,
};
use gfda::subspace::{GdsRule, SubspaceEnsemble};
use gfda::synth::{
    gaussian_class, mixture_classes, random_unit_vector, stream_rng, subspace_config, MixtureBases,
    GENERATOR_VERSION, SIMPLEX_SAMPLING,
};
use log::{info, warn};
use serde::Serialize;

use crate::config::{ExperimentConfig, SynthKind};
use crate::error::{config_err, CliError, Result};
use crate::model_io;

/// Writes `text` to `path`, or to stdout when no path is given.
pub fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Io(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn read(path: &Option<std::path::PathBuf>, key: &str) -> Result<Dataset> {
    let p = path
        .as_ref()
        .ok_or_else(|| config_err(format!("{key} dataset path is required")))?;
    Ok(Dataset::read_csv(p)?)
}

/// Fits the configured method on grouped training data.
pub fn build_model(cfg: &ExperimentConfig, classes: &[ClassData]) -> Result<DiscriminantModel> {
    if classes.len() < 2 {
        return Err(config_err(format!(
            "need at least 2 training classes, got {}",
            classes.len()
        )));
    }
    let ensemble = || SubspaceEnsemble::fit(classes, cfg.subspace_dim.rule());
    let model = match cfg.method {
        Method::Fda => fda(classes)?,
        Method::PcaLda => pca_lda(classes, cfg.residual_threshold)?,
        Method::RegLda => reg_lda(classes, cfg.delta)?,
        Method::NullLda => null_lda(classes)?,
        Method::GfdaProduct => gfda_product_form(&ensemble()?)?,
        Method::GfdaLinear => gfda_linear_form(&ensemble()?)?,
        Method::Gds => gds_model(&ensemble()?, GdsRule::Power { gamma: cfg.gamma })?,
    };
    let mut model = model.with_normalization(cfg.normalize);
    model.ref_normalization = cfg.ref_normalization;
    Ok(model)
}

pub fn cmd_fit(cfg: &ExperimentConfig) -> Result<()> {
    let ds = match (&cfg.train, &cfg.data) {
        (Some(_), _) => read(&cfg.train, "train")?,
        (None, Some(_)) => read(&cfg.data, "data")?,
        _ => return Err(config_err("fit needs a train dataset")),
    };
    let model = build_model(cfg, &ds.group())?;
    info!("fitted {} with {} discriminant directions", model.method, model.dim());
    emit(cfg.out.as_deref(), &model_io::to_json(&model)?)
}

/// Drops test samples whose label the model does not know.
fn restrict_to_model(test: &Dataset, labels: &[String]) -> Result<Dataset> {
    let mut out = Dataset::new(test.dim());
    let mut dropped = 0usize;
    for (l, x) in test.iter() {
        if labels.iter().any(|m| m == l) {
            out.push(l, x.clone())?;
        } else {
            dropped += 1;
        }
    }
    if dropped > 0 {
        warn!("{dropped} test samples have labels unknown to the model; ignored");
    }
    if out.is_empty() {
        return Err(config_err("no test samples belong to a model class"));
    }
    Ok(out)
}

/// Samples available to repeated evaluations.
pub enum EvalData {
    /// One labeled pool, split per repetition.
    Pool(Vec<ClassData>),
    /// Training pool to subsample and a fixed test set.
    Fixed { train: Vec<ClassData>, test: Dataset },
}

impl EvalData {
    pub fn load(cfg: &ExperimentConfig) -> Result<Self> {
        if cfg.data.is_some() {
            Ok(EvalData::Pool(read(&cfg.data, "data")?.group()))
        } else {
            Ok(EvalData::Fixed {
                train: read(&cfg.train, "train")?.group(),
                test: read(&cfg.test, "test")?,
            })
        }
    }
}

/// One train/evaluate round with `n` training samples per class.
pub fn repetition(cfg: &ExperimentConfig, data: &EvalData, n: usize, seed: u64) -> Result<EvalReport> {
    let mut rng = gfda::synth::rng(seed);
    let (train, test) = match data {
        EvalData::Pool(groups) => {
            let split = split_per_class(groups, n, &mut rng);
            let rest: Vec<ClassData> = split.rest.into_iter().filter(|c| c.count() > 0).collect();
            if rest.is_empty() {
                return Err(config_err(format!("no samples left for testing with n = {n}")));
            }
            (split.train, Dataset::from_classes(&rest)?)
        }
        EvalData::Fixed { train, test } => (split_per_class(train, n, &mut rng).train, test.clone()),
    };
    let model = build_model(cfg, &train)?;
    let test = restrict_to_model(&test, &model.labels)?;
    Ok(evaluate(&model, &test, cfg.rule)?)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Sample mean and standard deviation (`n − 1`), `None` when empty.
fn mean_std(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = if values.len() > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    Some((mean, std))
}

#[derive(Serialize)]
struct ReportFile<'a> {
    recognition_rate: f64,
    eer: Option<f64>,
    labels: &'a [String],
    confusion: &'a [Vec<usize>],
    protocol: &'a str,
}

pub const EVAL_HEADER: &str = "repetition,n_train,recognition_rate,eer";
pub const SWEEP_HEADER: &str = "n_train,recognition_mean,recognition_std,eer_mean,eer_std";
pub const EIGENCURVE_HEADER: &str = "index,eigenvalue_g,eigenvalue_ghat,power_g,power_ghat";

/// With a model file: one evaluation of the test set. Otherwise `R`
/// repetitions of sampling `n_train` training samples per class, followed
/// by `mean` and `std` rows.
pub fn cmd_eval(cfg: &ExperimentConfig) -> Result<()> {
    let mut out = String::from(EVAL_HEADER);
    out.push('\n');
    if let Some(path) = &cfg.model {
        let model = model_io::load(path)?;
        let model = if cfg.is_explicit("normalize") {
            model.with_normalization(cfg.normalize)
        } else {
            model
        };
        let test = restrict_to_model(&read(&cfg.test, "test")?, &model.labels)?;
        let r = evaluate(&model, &test, cfg.rule)?;
        writeln!(out, "0,,{},{}", r.recognition_rate, fmt_opt(r.eer)).unwrap();
        if let Some(p) = &cfg.report {
            let file = ReportFile {
                recognition_rate: r.recognition_rate,
                eer: r.eer,
                labels: &r.labels,
                confusion: &r.confusion,
                protocol: EER_PROTOCOL,
            };
            emit(Some(p), &(serde_json::to_string_pretty(&file)? + "\n"))?;
        }
        return emit(cfg.out.as_deref(), &out);
    }
    let n = cfg
        .n_train
        .ok_or_else(|| config_err("eval needs n_train (or a model file)"))?;
    let data = EvalData::load(cfg)?;
    let (mut rates, mut eers) = (Vec::new(), Vec::new());
    for i in 0..cfg.repetitions {
        let r = repetition(cfg, &data, n, cfg.repetition_seed(i))?;
        writeln!(out, "{i},{n},{},{}", r.recognition_rate, fmt_opt(r.eer)).unwrap();
        rates.push(r.recognition_rate);
        eers.extend(r.eer);
    }
    let (rm, rs) = mean_std(&rates).unwrap();
    let e = mean_std(&eers);
    writeln!(out, "mean,{n},{rm},{}", fmt_opt(e.map(|x| x.0))).unwrap();
    writeln!(out, "std,{n},{rs},{}", fmt_opt(e.map(|x| x.1))).unwrap();
    emit(cfg.out.as_deref(), &out)
}

/// Averaged evaluation for every training count in `n_values`.
pub fn cmd_sweep(cfg: &ExperimentConfig) -> Result<()> {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    let data = EvalData::load(cfg)?;
    for &n in &cfg.n_values {
        let (mut rates, mut eers) = (Vec::new(), Vec::new());
        for i in 0..cfg.repetitions {
            let r = repetition(cfg, &data, n, cfg.repetition_seed(i))?;
            rates.push(r.recognition_rate);
            eers.extend(r.eer);
        }
        let (rm, rs) = mean_std(&rates).unwrap();
        let e = mean_std(&eers);
        writeln!(
            out,
            "{n},{rm},{rs},{},{}",
            fmt_opt(e.map(|x| x.0)),
            fmt_opt(e.map(|x| x.1))
        )
        .unwrap();
    }
    emit(cfg.out.as_deref(), &out)
}

pub fn cmd_eigencurves(cfg: &ExperimentConfig) -> Result<()> {
    let ensemble = subspace_config(cfg.classes, cfg.dim, cfg.ambient, cfg.separation, cfg.seed)?;
    let curves = eigencurves(&ensemble)?;
    let mut out = String::from(EIGENCURVE_HEADER);
    out.push('\n');
    for i in 0..curves.g.len() {
        writeln!(
            out,
            "{},{},{},{},{}",
            i + 1,
            curves.g[i],
            curves.g_hat[i],
            curves.power_g[i],
            curves.power_g_hat[i]
        )
        .unwrap();
    }
    let summary = format!(
        "classes {} gap_index {} divergence {}",
        cfg.classes,
        gap_index(cfg.classes),
        curves.divergence()
    );
    if cfg.out.is_some() {
        println!("{summary}");
    } else {
        eprintln!("{summary}");
    }
    emit(cfg.out.as_deref(), &out)
}

#[derive(Serialize)]
struct SynthMeta {
    generator_version: u32,
    kind: String,
    seed: u64,
    parameters: Vec<(String, String)>,
    simplex_sampling: Option<&'static str>,
}

pub fn cmd_synth(cfg: &ExperimentConfig) -> Result<()> {
    if cfg.classes < 1 || cfg.ambient == 0 || cfg.samples == 0 {
        return Err(config_err("synth needs classes ≥ 1, ambient ≥ 1 and samples ≥ 1"));
    }
    let mut params = vec![
        ("classes".to_string(), cfg.classes.to_string()),
        ("ambient".to_string(), cfg.ambient.to_string()),
    ];
    let classes: Vec<ClassData> = match cfg.kind {
        SynthKind::Gaussian => {
            let mut dirs = stream_rng(cfg.seed, 0);
            params.push(("samples".into(), cfg.samples.to_string()));
            params.push(("mean_norm".into(), cfg.mean_norm.to_string()));
            params.push(("sigma_max".into(), cfg.sigma_max.to_string()));
            params.push(("profile".into(), format!("{:?}", cfg.profile)));
            (0..cfg.classes)
                .map(|c| {
                    let dir = random_unit_vector(cfg.ambient, &mut dirs);
                    let seed = cfg.seed.wrapping_mul(1_000_003).wrapping_add(c as u64 + 1);
                    Ok(ClassData {
                        label: (c + 1).to_string(),
                        samples: gaussian_class(&dir, cfg.mean_norm, cfg.sigma_max, cfg.samples, cfg.profile, seed)?,
                    })
                })
                .collect::<Result<_>>()?
        }
        SynthKind::Mixture => {
            let basis_seed = cfg.basis_seed.unwrap_or(cfg.seed);
            let layout = MixtureBases {
                vectors_per_class: cfg.vectors_per_class,
                ..MixtureBases::new(cfg.classes, cfg.ambient)
            };
            params.push(("samples".into(), cfg.samples.to_string()));
            params.push(("mode".into(), cfg.mode.to_string()));
            params.push(("basis_seed".into(), basis_seed.to_string()));
            params.push(("vectors_per_class".into(), layout.vectors_per_class.to_string()));
            params.push(("pattern".into(), layout.pattern.to_string()));
            params.push(("noise".into(), layout.noise.to_string()));
            let bases = layout.generate(basis_seed)?;
            mixture_classes(&bases, cfg.mode, cfg.samples, cfg.seed)?
        }
        SynthKind::Subspace => {
            params.push(("dim".into(), cfg.dim.to_string()));
            params.push(("separation".into(), cfg.separation.to_string()));
            let ensemble = subspace_config(cfg.classes, cfg.dim, cfg.ambient, cfg.separation, cfg.seed)?;
            // √(Nλᵢ)φᵢ as samples: their autocorrelation is exactly Σ λᵢφᵢφᵢᵀ
            ensemble
                .classes()
                .iter()
                .map(|m| {
                    let n = m.dim() as f64;
                    let mut x = m.basis().matrix().clone();
                    for (mut col, &lambda) in x.column_iter_mut().zip(m.eigenvalues()) {
                        col *= (n * lambda).sqrt();
                    }
                    ClassData {
                        label: m.label().to_string(),
                        samples: x,
                    }
                })
                .collect()
        }
    };
    let ds = Dataset::from_classes(&classes)?;
    let mut buf = Vec::new();
    ds.write_csv(&mut buf)?;
    emit(cfg.out.as_deref(), &String::from_utf8(buf).expect("csv is utf-8"))?;
    if let Some(out) = &cfg.out {
        let meta = SynthMeta {
            generator_version: GENERATOR_VERSION,
            kind: format!("{:?}", cfg.kind).to_lowercase(),
            seed: cfg.seed,
            parameters: params,
            simplex_sampling: (cfg.kind == SynthKind::Mixture).then_some(SIMPLEX_SAMPLING),
        };
        let mut path = out.clone().into_os_string();
        path.push(".meta.json");
        emit(Some(Path::new(&path)), &(serde_json::to_string_pretty(&meta)? + "\n"))?;
    }
    Ok(())
}
