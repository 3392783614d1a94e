use std::path::{Path, PathBuf};

use fracspde::verify::InequalityReport;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{CliError, ExperimentConfig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    /// Relative to the output directory, `/`-separated.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

/// Files written during a run, with their digests.
#[derive(Clone, Debug)]
pub struct Artifacts {
    root: PathBuf,
    entries: Vec<Artifact>,
}

pub(crate) fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

impl Artifacts {
    pub fn new(root: &Path) -> Self {
        Self { root: root.to_path_buf(), entries: Vec::new() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn entries(&self) -> &[Artifact] {
        &self.entries
    }

    /// Writes `bytes` to `root/rel`, creating parent directories.
    pub fn write(&mut self, rel: &Path, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(io_err(parent))?;
        }
        std::fs::write(&path, bytes).map_err(io_err(&path))?;
        let rel = rel.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/");
        self.entries.retain(|a| a.path != rel);
        self.entries.push(Artifact { path: rel, sha256: sha256_hex(bytes), bytes: bytes.len() as u64 });
        Ok(())
    }

    pub(crate) fn from_manifest(root: &Path, manifest: &Manifest) -> Self {
        Self { root: root.to_path_buf(), entries: manifest.artifacts.clone() }
    }

    /// Records an existing file, already at `root/rel`, read back from `path`.
    pub(crate) fn adopt(&mut self, rel: &Path, path: &Path) -> Result<(), CliError> {
        let bytes = std::fs::read(path).map_err(io_err(path))?;
        let rel = rel.to_string_lossy().replace('\\', "/");
        self.entries.push(Artifact { path: rel, sha256: sha256_hex(&bytes), bytes: bytes.len() as u64 });
        Ok(())
    }

    /// Adopts another run's entries, which live under `rel` of this root.
    pub(crate) fn absorb(&mut self, rel: &Path, other: &Artifacts) {
        let prefix = rel.to_string_lossy().replace('\\', "/");
        for a in &other.entries {
            self.entries.push(Artifact { path: format!("{prefix}/{}", a.path), ..a.clone() });
        }
    }
}

/// Floating-point environment the numbers were produced in.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FloatEnvironment {
    pub arch: String,
    pub os: String,
    pub fma: bool,
    pub arithmetic: String,
}

impl FloatEnvironment {
    pub fn current() -> Self {
        Self {
            arch: std::env::consts::ARCH.into(),
            os: std::env::consts::OS.into(),
            fma: cfg!(target_feature = "fma"),
            arithmetic: "IEEE-754 binary64, round-to-nearest-even; single-threaded".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportEntry {
    pub name: String,
    pub config_digest: String,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub experiment: String,
    pub config_sha256: String,
    pub seed: u64,
    pub all_pass: bool,
    pub float_environment: FloatEnvironment,
    pub reports: Vec<ReportEntry>,
    pub artifacts: Vec<Artifact>,
}

impl Manifest {
    pub fn new(cfg: &ExperimentConfig, reports: &[InequalityReport], artifacts: Artifacts) -> Self {
        Self {
            experiment: cfg.experiment.name().into(),
            config_sha256: sha256_hex(cfg.to_toml().as_bytes()),
            seed: cfg.seed,
            all_pass: reports.iter().all(|r| r.pass),
            float_environment: FloatEnvironment::current(),
            reports: reports
                .iter()
                .map(|r| ReportEntry { name: r.name.clone(), config_digest: r.config_digest.clone(), pass: r.pass })
                .collect(),
            artifacts: artifacts.entries,
        }
    }

    /// Writes `dir/manifest.json` and returns its path.
    pub fn write(&self, dir: &Path) -> Result<PathBuf, CliError> {
        let path = dir.join("manifest.json");
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
        let json = serde_json::to_string_pretty(self).map_err(|e| CliError::Runtime(e.to_string()))?;
        std::fs::write(&path, json).map_err(io_err(&path))?;
        Ok(path)
    }
}
