//! Command execution. Each command validates its whole configuration and
//! loads its inputs before the first output file is written.

use std::path::Path;

use pointpe::classifier::{evaluate, fit_clouds, labels_of, Checkpoint, EpochStats};
use pointpe::corruptions::{corrupt, CorruptionExtra, CorruptionSpec};
use pointpe::diagnostics::{
    distance_curve, encoding_illustration, frequency_law_check, pooling_robustness_sweep,
    rff_kernel_distance, scale_sweep, IllustrationConfig, LinePlot,
};
use pointpe::encoders::{Encoder, EncoderKind, EncoderSpec};
use pointpe::pointcloud::{
    load_manifest, synthetic_dataset, write_manifest_with_hash, write_xyz, InstanceVariation,
    PointCloud,
};
use pointpe::registration::{
    noise_sweep, PerturbationBounds, RegistrationOptions, SuccessCriterion, SweepConfig,
};
use pointpe::rng::SeededRng;
use pointpe::{Error, Result};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::*;
use crate::data::{check_file, load_dataset, manifest_entries, off_named, suite, synthetic_named, NamedClouds};
use crate::output::Outputs;

/// Runs `cfg`, writing into `out_dir`, and returns the files written.
pub fn execute(cfg: &RunConfig, out_dir: &Path) -> Result<Vec<std::path::PathBuf>> {
    let mut out = Outputs::new(out_dir, cfg)?;
    match cfg {
        RunConfig::Dataset(c) => dataset(c, &mut out)?,
        RunConfig::Corrupt(c) => corrupt_cmd(c, &mut out)?,
        RunConfig::Train(c) => train(c, cfg, &mut out)?,
        RunConfig::Eval(c) => eval(c, &mut out)?,
        RunConfig::Register(c) => register(c, &mut out)?,
        RunConfig::Diagnose(d) => match d {
            DiagnoseConfig::Distance(c) => distance(c, &mut out)?,
            DiagnoseConfig::Frequency(c) => frequency(c, &mut out)?,
            DiagnoseConfig::Illustration(c) => illustration(c, &mut out)?,
            DiagnoseConfig::ScaleSweep(c) => scale(c, &mut out)?,
            DiagnoseConfig::Robustness(c) => robustness(c, &mut out)?,
        },
    }
    out.write_run_config(cfg)?;
    Ok(out.written().to_vec())
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn xyz_with_header(pc: &PointCloud<f64>, hash: &str) -> String {
    let mut s = format!("# config_hash: {hash}\n");
    if let Some(l) = pc.label() {
        s.push_str(&format!("# label: {l}\n"));
    }
    s.push_str(&write_xyz(pc));
    s
}

fn write_clouds(out: &mut Outputs, named: &NamedClouds) -> Result<()> {
    let hash = out.hash.clone();
    let texts: Vec<String> = named.clouds.par_iter().map(|pc| xyz_with_header(pc, &hash)).collect();
    for (text, stem) in texts.iter().zip(&named.stems) {
        out.write_bytes(&format!("clouds/{stem}.xyz"), text.as_bytes())?;
    }
    let entries = manifest_entries(&named.clouds, &named.stems, "clouds");
    write_manifest_with_hash(out.path("manifest.json"), &entries, &hash)?;
    #[derive(Serialize)]
    struct Classes<'a> {
        config_hash: &'a str,
        classes: &'a [String],
    }
    let classes = serde_json::to_string_pretty(&Classes {
        config_hash: &hash,
        classes: &named.class_names,
    })? + "\n";
    out.write_bytes("classes.json", classes.as_bytes())
}

fn dataset(c: &DatasetConfig, out: &mut Outputs) -> Result<()> {
    if c.points == 0 {
        return Err(config_err("--points must be at least 1"));
    }
    c.variation.validate()?;
    let named = match (&c.synthetic, &c.off_dir) {
        (Some(s), None) => {
            let (classes, per_class) = parse_synthetic(s)?;
            synthetic_named(classes, per_class, c.points, &c.variation, c.seed)?
        }
        (None, Some(dir)) => {
            if !dir.is_dir() {
                return Err(config_err(format!("--off-dir {} is not a directory", dir.display())));
            }
            off_named(dir, c.points, c.seed)?
        }
        _ => return Err(config_err("give exactly one of --synthetic and --off-dir")),
    };
    write_clouds(out, &named)?;
    let mut counts = vec![0usize; named.class_names.len()];
    for pc in &named.clouds {
        counts[pc.label().unwrap_or(0)] += 1;
    }
    println!("wrote {} clouds to {}", named.clouds.len(), out.dir.display());
    for (name, n) in named.class_names.iter().zip(counts) {
        println!("  {name}: {n}");
    }
    Ok(())
}

fn corruption_spec(c: &CorruptConfig) -> Result<CorruptionSpec> {
    let kind = c.corruption.ok_or_else(|| config_err("--corruption is required"))?;
    let spec = CorruptionSpec {
        kind,
        level: c.level,
        extra: CorruptionExtra {
            param: c.param,
            fraction: c.fraction,
            axis: c.axis,
            n_holes: c.n_holes,
        },
        seed: c.seed,
    };
    spec.severity()?;
    Ok(spec)
}

/// Per-cloud seed, the same derivation as evaluation uses.
fn cloud_seed(seed: u64, index: usize) -> u64 {
    SeededRng::new(seed).fork(index as u64).next_u64()
}

fn corrupt_cmd(c: &CorruptConfig, out: &mut Outputs) -> Result<()> {
    let spec = corruption_spec(c)?;
    check_file(&c.manifest, "manifest")?;
    let entries = load_manifest(&c.manifest)?;
    let clouds = load_dataset(&c.manifest)?;
    let corrupted = clouds
        .par_iter()
        .enumerate()
        .map(|(i, pc)| corrupt(pc, &spec.with_seed(cloud_seed(spec.seed, i))))
        .collect::<Result<Vec<_>>>()?;
    let stems = entries
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let stem = e.path.file_stem().unwrap_or_default().to_string_lossy();
            format!("{i:05}_{stem}")
        })
        .collect();
    let max_label = corrupted.iter().filter_map(|p| p.label()).max().unwrap_or(0);
    let named = NamedClouds {
        clouds: corrupted,
        stems,
        class_names: (0..=max_label).map(|l| l.to_string()).collect(),
    };
    write_clouds(out, &named)?;
    println!(
        "corrupted {} clouds with {} (parameter {}) into {}",
        named.clouds.len(),
        spec.kind,
        spec.severity()?,
        out.dir.display()
    );
    Ok(())
}

fn train(c: &TrainRunConfig, full: &RunConfig, out: &mut Outputs) -> Result<()> {
    c.train.validate()?;
    let encoder: Encoder<f64> = c.encoder.spec().build()?;
    check_file(&c.manifest, "manifest")?;
    let clouds = load_dataset(&c.manifest)?;
    labels_of(&clouds)?;
    let (model, history) = fit_clouds(&clouds, &encoder, c.pooling, &c.train)?;
    let report = evaluate(&model, &encoder, c.pooling, &clouds, None)?;
    let mut ck = Checkpoint::new(&encoder, c.pooling, c.train.clone(), model)?;
    ck.config_hash = Some(out.hash.clone());
    ck.run_config = Some(serde_json::to_value(full)?);
    out.write_bytes("checkpoint.json", ck.to_json()?.as_bytes())?;
    out.write_csv::<EpochStats>(
        "training_curve.csv",
        &history,
        "epoch index; learning_rate per step; loss mean cross-entropy (nats); train_accuracy fraction in train mode",
    )?;
    println!(
        "trained {} head on {} clouds: train accuracy {:.4} (eval mode)",
        c.pooling,
        clouds.len(),
        report.accuracy
    );
    Ok(())
}

#[derive(Serialize)]
struct EvalRow {
    corruption: String,
    level: u8,
    severity: f64,
    pooling: String,
    scale: f64,
    samples: usize,
    accuracy: f64,
    error_rate: f64,
}

/// Confirms the checkpoint was produced by the configuration it embeds
/// and, when requested, by the expected encoder seed.
fn verify_checkpoint(ck: &Checkpoint<f64>, expected_seed: Option<u64>) -> Result<()> {
    if let (Some(hash), Some(doc)) = (&ck.config_hash, &ck.run_config) {
        let cfg: RunConfig = serde_json::from_value(doc.clone())
            .map_err(|e| config_err(format!("checkpoint run config is unreadable: {e}")))?;
        if &cfg.hash()? != hash {
            return Err(config_err("checkpoint config hash does not match its run config"));
        }
        match cfg {
            RunConfig::Train(t) if t.encoder.spec() == ck.encoder && t.pooling == ck.pooling => {}
            _ => return Err(config_err("checkpoint encoder differs from its run config")),
        }
    }
    if let Some(seed) = expected_seed {
        if seed != ck.encoder.seed {
            return Err(config_err(format!(
                "encoder seed mismatch: checkpoint has {}, expected {seed}",
                ck.encoder.seed
            )));
        }
    }
    Ok(())
}

fn eval_specs(c: &EvalConfig) -> Result<Vec<Option<CorruptionSpec>>> {
    let Some(kind) = c.corruption else {
        return Ok(vec![None]);
    };
    let specs: Vec<CorruptionSpec> = match &c.levels {
        LevelSelection::All => {
            if !kind.has_levels() {
                return Err(config_err(format!("{kind} has no level ladder; pass --params")));
            }
            (1..=10).map(|l| CorruptionSpec::at_level(kind, l, c.seed)).collect()
        }
        LevelSelection::Levels(v) => v.iter().map(|&l| CorruptionSpec::at_level(kind, l, c.seed)).collect(),
        LevelSelection::Params(v) => v.iter().map(|&p| CorruptionSpec::with_param(kind, p, c.seed)).collect(),
    };
    if specs.is_empty() {
        return Err(config_err("no severities selected"));
    }
    for s in &specs {
        s.severity()?;
    }
    Ok(specs.into_iter().map(Some).collect())
}

fn eval(c: &EvalConfig, out: &mut Outputs) -> Result<()> {
    let specs = eval_specs(c)?;
    check_file(&c.checkpoint, "checkpoint")?;
    check_file(&c.manifest, "manifest")?;
    let ck = Checkpoint::<f64>::load(&c.checkpoint)?;
    verify_checkpoint(&ck, c.encoder_seed)?;
    let encoder = ck.encoder()?;
    let clouds = load_dataset(&c.manifest)?;
    let mut rows = Vec::with_capacity(specs.len());
    for spec in &specs {
        let report = evaluate(&ck.model, &encoder, ck.pooling, &clouds, spec.as_ref())?;
        let (corruption, level, severity) = match spec {
            None => ("none".to_string(), 0, 0.0),
            Some(s) => (s.kind.to_string(), s.level.unwrap_or(0), s.severity()?),
        };
        println!("{corruption} level {level} ({severity}): error rate {:.4}", report.error_rate);
        rows.push(EvalRow {
            corruption,
            level,
            severity,
            pooling: ck.pooling.to_string(),
            scale: ck.encoder.scale,
            samples: report.samples,
            accuracy: report.accuracy,
            error_rate: report.error_rate,
        });
    }
    out.write_csv(
        "eval.csv",
        &rows,
        "level 1-10 (0 = clean or explicit parameter); severity in corruption parameter units; accuracy and error_rate are fractions",
    )
}

#[derive(Serialize)]
struct RegisterRow {
    pooling: String,
    noise: String,
    sigma: f64,
    trials: usize,
    successes: usize,
    success_rate: f64,
    mean_rot_err_deg: f64,
    mean_trans_err: f64,
}

fn register(c: &RegisterConfig, out: &mut Outputs) -> Result<()> {
    let encoder: Encoder<f64> = c.encoder.spec().build()?;
    let sweep = SweepConfig {
        poolings: c.poolings.clone(),
        noise: c.noise,
        noise_levels: c.sigmas.clone(),
        trials: c.trials,
        perturbation: PerturbationBounds {
            max_angle_deg: c.max_angle_deg,
            max_translation: c.max_translation,
        },
        criterion: SuccessCriterion {
            max_rotation_deg: c.success_rotation_deg,
            max_translation: c.success_translation,
        },
        options: RegistrationOptions {
            max_iters: c.max_iters,
            ..RegistrationOptions::default()
        },
        seed: c.seed,
    };
    if c.poolings.is_empty() || c.sigmas.is_empty() || c.trials == 0 {
        return Err(config_err("register needs poolings, sigmas and trials"));
    }
    for &s in &c.sigmas {
        CorruptionSpec::with_param(c.noise, s, 0).severity()?;
    }
    let data = match &c.manifest {
        Some(m) => load_dataset(m)?,
        None => synthetic_dataset(&[c.shape], c.instances, c.points, &InstanceVariation::NONE, c.data_seed)?,
    };
    let table = noise_sweep(&data, &encoder, &sweep)?;
    let rows: Vec<RegisterRow> = table
        .rows
        .iter()
        .map(|r| RegisterRow {
            pooling: r.pooling.to_string(),
            noise: c.noise.to_string(),
            sigma: r.sigma,
            trials: r.trials,
            successes: r.successes,
            success_rate: r.success_rate(),
            mean_rot_err_deg: r.mean_rot_err_deg,
            mean_trans_err: r.mean_trans_err,
        })
        .collect();
    for r in &rows {
        println!("{} sigma {}: {}/{} succeeded", r.pooling, r.sigma, r.successes, r.trials);
    }
    out.write_csv(
        "register.csv",
        &rows,
        &format!(
            "sigma in input units; success when rotation error < {} deg and translation error < {}; mean_rot_err_deg in degrees; mean_trans_err in input units",
            c.success_rotation_deg, c.success_translation
        ),
    )?;
    let mut plot = LinePlot::new("Registration success vs noise", "sigma", "success rate");
    for p in &c.poolings {
        let pts = rows
            .iter()
            .filter(|r| r.pooling == p.to_string())
            .map(|r| (r.sigma, r.success_rate))
            .collect();
        plot = plot.with_series(p.name(), pts);
    }
    out.write_svg("register.svg", &plot)
}

#[derive(Serialize)]
struct DistanceCsvRow {
    scale: f64,
    d: f64,
    mean_sq: f64,
    std_sq: f64,
    mean_dist: f64,
    samples: usize,
    rff_oracle: Option<f64>,
}

fn distance(c: &DistanceDiag, out: &mut Outputs) -> Result<()> {
    if c.scales.is_empty() || c.distances.is_empty() {
        return Err(config_err("distance needs scales and distances"));
    }
    for &s in &c.scales {
        EncoderSpec::new(c.encoder, c.dim_in, c.dim, s, 0).build::<f64>()?;
    }
    let root = SeededRng::new(c.seed);
    let mut rows = Vec::new();
    let mut plot = LinePlot::new("Encoding distance vs point distance", "d", "mean squared encoding distance");
    for (i, &scale) in c.scales.iter().enumerate() {
        let spec = EncoderSpec::new(c.encoder, c.dim_in, c.dim, scale, 0);
        let curve = distance_curve::<f64>(&spec, &c.distances, c.draws, c.pairs, &root.fork(i as u64))?;
        plot = plot.with_series(&format!("scale {scale}"), curve.iter().map(|r| (r.d, r.mean_sq)).collect());
        rows.extend(curve.into_iter().map(|r| DistanceCsvRow {
            scale,
            d: r.d,
            mean_sq: r.mean_sq,
            std_sq: r.std_sq,
            mean_dist: r.mean_dist,
            samples: r.samples,
            rff_oracle: (c.encoder == EncoderKind::Rff).then(|| rff_kernel_distance(c.dim / 2, scale, r.d)),
        }));
    }
    out.write_csv(
        "distance.csv",
        &rows,
        "d in input units; mean_sq and std_sq are squared encoding distances; mean_dist is an encoding distance; rff_oracle is 2F(1-exp(-scale^2 d^2/2))",
    )?;
    out.write_svg("distance.svg", &plot)
}

fn frequency(c: &FrequencyDiag, out: &mut Outputs) -> Result<()> {
    if c.dims.is_empty() || c.dims.contains(&0) {
        return Err(config_err("frequency needs positive dimensions"));
    }
    if c.samples < 10_000 {
        return Err(config_err("frequency needs at least 10000 samples"));
    }
    let root = SeededRng::new(c.seed);
    let rows = c
        .dims
        .iter()
        .map(|&d| frequency_law_check(d, c.bandwidth, c.samples, &mut root.fork(d as u64)))
        .collect::<Result<Vec<_>>>()?;
    for r in &rows {
        println!(
            "D={} variance {:.4} target {:.4} KS {:.4}",
            r.dim, r.variance, r.target_variance, r.ks_distance
        );
    }
    out.write_csv(
        "frequency.csv",
        &rows,
        "variance in squared frequency units; ks_distance and max_density_deviation are dimensionless; grid_variance over the integer tensor-product grid",
    )
}

fn illustration(c: &IllustrationDiag, out: &mut Outputs) -> Result<()> {
    let cfg = IllustrationConfig {
        impulse_bins: c.bins,
        sinc_bandwidth: c.bandwidth,
        grid: c.grid,
    };
    let ill = encoding_illustration(&c.points, &c.noise, &cfg)?;
    out.write_csv(
        "illustration_curves.csv",
        &ill.curves,
        "t in (0,1); epsilon is the shift added to every point; value is the embedding field at t",
    )?;
    out.write_csv(
        "illustration_gaps.csv",
        &ill.gaps,
        "l2_gap: Euclidean distance of histograms (impulse) or RMS field difference over t (sinc)",
    )?;
    let mut plot = LinePlot::new("1D embeddings", "t", "value");
    for enc in ["impulse", "sinc"] {
        for eps in std::iter::once(0.0).chain(c.noise.first().copied()) {
            let pts = ill
                .curves
                .iter()
                .filter(|s| s.encoder == enc && s.epsilon == eps)
                .map(|s| (s.t, s.value))
                .collect();
            plot = plot.with_series(&format!("{enc} eps={eps}"), pts);
        }
    }
    out.write_svg("illustration.svg", &plot)
}

fn scale(c: &ScaleSweepDiag, out: &mut Outputs) -> Result<()> {
    c.train.validate()?;
    let base = EncoderSpec::new(c.encoder, 3, c.dim, 1.0, c.encoder_seed);
    for &s in &c.scales {
        EncoderSpec { scale: s, ..base.clone() }.build::<f64>()?;
    }
    let (train, test) = suite(&c.data)?;
    let rows = scale_sweep(&c.scales, &base, c.pooling, &train, &test, &c.train)?;
    for r in &rows {
        println!("scale {}: train {:.4} test {:.4}", r.scale, r.train_acc, r.test_acc);
    }
    out.write_csv("scale_sweep.csv", &rows, "scale is the encoder scale; accuracies are fractions")?;
    let plot = LinePlot::new("Accuracy vs encoder scale", "log10(scale)", "accuracy")
        .with_series("train", rows.iter().map(|r| (r.scale.log10(), r.train_acc)).collect())
        .with_series("test", rows.iter().map(|r| (r.scale.log10(), r.test_acc)).collect());
    out.write_svg("scale_sweep.svg", &plot)
}

fn robustness(c: &RobustnessDiag, out: &mut Outputs) -> Result<()> {
    c.train.validate()?;
    if c.heads.is_empty() {
        return Err(config_err("robustness needs at least one head"));
    }
    let setups: Vec<_> = c
        .heads
        .iter()
        .map(|h| (h.pooling, EncoderSpec::new(c.encoder, 3, c.dim, h.scale, c.encoder_seed)))
        .collect();
    for (_, s) in &setups {
        s.build::<f64>()?;
    }
    let specs = c
        .corruptions
        .iter()
        .map(|cell| {
            let spec = CorruptionSpec {
                kind: cell.kind,
                level: cell.level,
                extra: CorruptionExtra {
                    param: cell.param,
                    ..CorruptionExtra::default()
                },
                seed: c.seed,
            };
            spec.severity().map(|_| spec)
        })
        .collect::<Result<Vec<_>>>()?;
    let (train, test) = suite(&c.data)?;
    let (_, rows) = pooling_robustness_sweep(&setups, &train, &test, &specs, &c.train)?;
    for r in &rows {
        println!("{} {} {}: error {:.4}", r.corruption, r.level, r.pooling, r.error_rate);
    }
    out.write_csv(
        "robustness.csv",
        &rows,
        "level 1-10 (0 = clean or explicit parameter); severity in corruption parameter units; error_rate is a fraction",
    )?;
    let mut plot = LinePlot::new("Error rate per corruption column", "column (0 = clean)", "error rate");
    for h in &c.heads {
        let pts = rows
            .iter()
            .filter(|r| r.pooling == h.pooling.to_string())
            .enumerate()
            .map(|(i, r)| (i as f64, r.error_rate))
            .collect();
        plot = plot.with_series(h.pooling.name(), pts);
    }
    out.write_svg("robustness.svg", &plot)
}
