//! Dataset loading and generation.

use std::fs;
use std::path::{Path, PathBuf};

use pointpe::pointcloud::{
    load_manifest, load_off, load_xyz, sample_surface, synthetic_dataset, DatasetEntry,
    InstanceVariation, PointCloud, ShapeKind,
};
use pointpe::rng::SeededRng;
use pointpe::{Error, Result};
use rayon::prelude::*;

use crate::config::SuiteData;

/// Loads every cloud listed in a manifest, labelled from the manifest.
pub fn load_dataset(manifest: &Path) -> Result<Vec<PointCloud<f64>>> {
    if !manifest.is_file() {
        return Err(Error::Config(format!("manifest {} not found", manifest.display())));
    }
    let entries = load_manifest(manifest)?;
    entries
        .par_iter()
        .map(|e| Ok(load_xyz::<f64>(&e.path)?.with_label(Some(e.label))))
        .collect()
}

pub fn check_file(path: &Path, what: &str) -> Result<()> {
    if path.as_os_str().is_empty() {
        return Err(Error::Config(format!("--{what} is required")));
    }
    if !path.is_file() {
        return Err(Error::Config(format!("{what} {} not found", path.display())));
    }
    Ok(())
}

/// A generated or loaded dataset with file stems for writing.
pub struct NamedClouds {
    pub clouds: Vec<PointCloud<f64>>,
    pub stems: Vec<String>,
    pub class_names: Vec<String>,
}

pub fn synthetic_named(
    classes: usize,
    per_class: usize,
    points: usize,
    variation: &InstanceVariation,
    seed: u64,
) -> Result<NamedClouds> {
    let kinds = &ShapeKind::ALL[..classes];
    let clouds = synthetic_dataset(kinds, per_class, points, variation, seed)?;
    let stems = (0..per_class)
        .flat_map(|i| kinds.iter().map(move |k| format!("{}_{i:05}", k.name())))
        .collect();
    Ok(NamedClouds {
        clouds,
        stems,
        class_names: kinds.iter().map(|k| k.name().to_string()).collect(),
    })
}

/// OFF meshes under `dir/<class>/`, classes in sorted name order. Each mesh
/// is surface-sampled with its own fork of `seed` and normalized.
pub fn off_named(dir: &Path, points: usize, seed: u64) -> Result<NamedClouds> {
    let read_dir = |d: &Path| -> Result<Vec<PathBuf>> {
        let mut v: Vec<PathBuf> = fs::read_dir(d)
            .map_err(|e| Error::io(d, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .collect();
        v.sort();
        Ok(v)
    };
    let is_off = |p: &Path| p.is_file() && p.extension().is_some_and(|e| e.eq_ignore_ascii_case("off"));
    let mut jobs = Vec::new();
    let mut class_names = Vec::new();
    for class_dir in read_dir(dir)?.into_iter().filter(|p| p.is_dir()) {
        let meshes: Vec<PathBuf> = read_dir(&class_dir)?.into_iter().filter(|p| is_off(p)).collect();
        if meshes.is_empty() {
            continue;
        }
        let label = class_names.len();
        class_names.push(class_dir.file_name().unwrap_or_default().to_string_lossy().into_owned());
        jobs.extend(meshes.into_iter().map(|m| (label, m)));
    }
    if jobs.is_empty() {
        return Err(Error::Empty(format!("no OFF files under {}/<class>/", dir.display())));
    }
    let root = SeededRng::new(seed);
    let loaded = jobs
        .par_iter()
        .enumerate()
        .map(|(i, (label, path))| {
            let mesh = load_off::<f64>(path)?;
            let pc = sample_surface(&mesh, points, &mut root.fork(i as u64))?.normalize();
            let stem = format!(
                "{}_{}",
                class_names[*label],
                path.file_stem().unwrap_or_default().to_string_lossy()
            );
            Ok((pc.with_label(Some(*label)), stem))
        })
        .collect::<Result<Vec<_>>>()?;
    let (clouds, stems) = loaded.into_iter().unzip();
    Ok(NamedClouds {
        clouds,
        stems,
        class_names,
    })
}

pub fn manifest_entries(clouds: &[PointCloud<f64>], stems: &[String], subdir: &str) -> Vec<DatasetEntry> {
    clouds
        .iter()
        .zip(stems)
        .map(|(pc, stem)| DatasetEntry {
            path: PathBuf::from(subdir).join(format!("{stem}.xyz")),
            label: pc.label().unwrap_or(0),
        })
        .collect()
}

/// Train and test sets for the classification diagnostics. Synthetic test
/// data uses the seed `data.seed + 1` so it never repeats training clouds.
pub fn suite(data: &SuiteData) -> Result<(Vec<PointCloud<f64>>, Vec<PointCloud<f64>>)> {
    match (&data.train_manifest, &data.test_manifest) {
        (Some(train), Some(test)) => Ok((load_dataset(train)?, load_dataset(test)?)),
        (None, None) => {
            if data.classes < 2 || data.classes > ShapeKind::ALL.len() {
                return Err(Error::Config(format!(
                    "suite classes must be in 2..={}",
                    ShapeKind::ALL.len()
                )));
            }
            let kinds = &ShapeKind::ALL[..data.classes];
            let train = synthetic_dataset(kinds, data.train_per_class, data.points, &data.variation, data.seed)?;
            let test = synthetic_dataset(
                kinds,
                data.test_per_class,
                data.points,
                &data.variation,
                data.seed.wrapping_add(1),
            )?;
            Ok((train, test))
        }
        _ => Err(Error::Config(
            "give both --train-manifest and --test-manifest, or neither".into(),
        )),
    }
}
