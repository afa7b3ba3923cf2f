//! Output directory handling. Every file written here carries the config
//! hash; nothing carries a timestamp.

use std::path::{Path, PathBuf};

use pointpe::diagnostics::{render_csv, LinePlot};
use pointpe::fsutil::write_atomic;
use pointpe::Result;
use serde::Serialize;

use crate::config::RunConfig;

pub const OUT_DIR_ENV: &str = "POINTPE_OUT_DIR";
pub const DEFAULT_OUT_DIR: &str = "pointpe-out";
pub const RUN_CONFIG_FILE: &str = "run_config.json";

pub fn resolve_out_dir(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
}

pub struct Outputs {
    pub dir: PathBuf,
    pub hash: String,
    command: String,
    written: Vec<PathBuf>,
}

impl Outputs {
    pub fn new(dir: &Path, cfg: &RunConfig) -> Result<Self> {
        let command = match cfg {
            RunConfig::Diagnose(d) => format!("diagnose {}", d.name()),
            other => other.name().to_string(),
        };
        Ok(Self {
            dir: dir.to_path_buf(),
            hash: cfg.hash()?,
            command,
            written: Vec::new(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    fn record(&mut self, path: PathBuf) {
        self.written.push(path);
    }

    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.path(name);
        write_atomic(&path, bytes)?;
        self.record(path);
        Ok(())
    }

    /// CSV with comment lines naming the command, the config hash and the
    /// units of each column.
    pub fn write_csv<R: Serialize>(&mut self, name: &str, rows: &[R], units: &str) -> Result<()> {
        let comments = [
            format!("pointpe {}", self.command),
            format!("config_hash: {}", self.hash),
            format!("units: {units}"),
        ];
        let text = render_csv(&comments, rows)?;
        self.write_bytes(name, text.as_bytes())
    }

    pub fn write_svg(&mut self, name: &str, plot: &LinePlot) -> Result<()> {
        let svg = plot.to_svg();
        let (head, body) = svg.split_once('\n').unwrap_or((&svg, ""));
        let text = format!("{head}\n<!-- config_hash: {} -->\n{body}", self.hash);
        self.write_bytes(name, text.as_bytes())
    }

    pub fn write_run_config(&mut self, cfg: &RunConfig) -> Result<()> {
        self.write_bytes(RUN_CONFIG_FILE, cfg.to_pretty_json()?.as_bytes())
    }
}
