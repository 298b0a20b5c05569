use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::datagen::FriedmanBenchmarkSpec;
use crate::error::{Error, Result};
use crate::evaluation::Method;
use crate::learner::MlpSpec;
use crate::preprocessing::TargetOrder;

pub const CONFIG_SCHEMA_VERSION: u32 = 1;

/// Experiment description read by `run` and `sweep`.
///
/// Relative paths are resolved against the directory holding the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub dataset: DatasetSource,
    #[serde(default)]
    pub preprocessing: Preprocessing,
    /// Base network; the input layer is resized to the final feature count.
    /// Defaults to `c(5,10,5,1)`, learning rate 0.1, 300 epochs.
    #[serde(default)]
    pub base: Option<MlpSpec>,
    #[serde(default)]
    pub methods: Vec<Method>,
    pub seeds: Vec<u64>,
    pub output_dir: PathBuf,
    /// Block sizes for `sweep` when `--etas` is not given.
    #[serde(default)]
    pub etas: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetSource {
    /// Generate the Friedman benchmark in memory.
    Friedman(FriedmanBenchmarkSpec),
    /// A directory written by `gen`.
    Bundle(PathBuf),
    Csv(CsvFiles),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CsvFiles {
    /// One file per source domain; with several, the one whose model best fits
    /// the calibration point is used.
    pub sources: Vec<PathBuf>,
    pub target: PathBuf,
    #[serde(default)]
    pub calibration: Option<PathBuf>,
    /// Target labels for scoring; otherwise the `y` column of the target file.
    #[serde(default)]
    pub truth: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Preprocessing {
    /// Min-max scale every feature over source and target rows together.
    #[serde(default)]
    pub normalize: bool,
    /// Keep this many principal components (fitted on source and target rows).
    #[serde(default)]
    pub pca_components: Option<usize>,
    /// Append frame-to-frame differences; defaults to on when a `t` column is present.
    #[serde(default)]
    pub frame_difference: Option<bool>,
    /// Defaults to `keep_order` with a `t` column, `by_distance` otherwise.
    #[serde(default)]
    pub order: Option<TargetOrder>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Json {
            context: "config".into(),
            source: e,
        })
    }

    /// Parses and validates `path`, resolving relative paths against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_json(&text)?;
        let base_dir = path.parent().unwrap_or_else(|| Path::new(""));
        cfg.resolve_paths(base_dir);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base_dir: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base_dir.join(&*p);
            }
        };
        match &mut self.dataset {
            DatasetSource::Friedman(_) => {}
            DatasetSource::Bundle(dir) => fix(dir),
            DatasetSource::Csv(files) => {
                files.sources.iter_mut().for_each(fix);
                fix(&mut files.target);
                files.calibration.iter_mut().for_each(fix);
                files.truth.iter_mut().for_each(fix);
            }
        }
        fix(&mut self.output_dir);
    }

    pub fn base_spec(&self) -> MlpSpec {
        self.base.clone().unwrap_or_else(MlpSpec::friedman_default)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != CONFIG_SCHEMA_VERSION {
            return Err(Error::invalid(format!(
                "unsupported schema_version {}; this build reads {CONFIG_SCHEMA_VERSION}",
                self.schema_version
            )));
        }
        if self.seeds.is_empty() {
            return Err(Error::invalid("seeds must list at least one seed"));
        }
        self.base_spec().validate()?;
        for m in &self.methods {
            match m {
                Method::Isda { eta } | Method::ReIsda { eta } if *eta == 0 => {
                    return Err(Error::invalid("eta must be at least 1"))
                }
                Method::Kmm(k) if !(k.bandwidth > 0.0) => {
                    return Err(Error::invalid("kmm bandwidth must be positive"))
                }
                Method::Tca(t) if t.latent_dim == 0 => {
                    return Err(Error::invalid("tca latent_dim must be at least 1"))
                }
                _ => {}
            }
        }
        if self.preprocessing.pca_components == Some(0) {
            return Err(Error::invalid("pca_components must be at least 1"));
        }
        let must_exist = |p: &Path, is_dir: bool| {
            let ok = if is_dir { p.is_dir() } else { p.is_file() };
            if ok {
                Ok(())
            } else {
                Err(Error::invalid(format!("{} does not exist", p.display())))
            }
        };
        match &self.dataset {
            DatasetSource::Friedman(spec) => spec.validate()?,
            DatasetSource::Bundle(dir) => must_exist(dir, true)?,
            DatasetSource::Csv(files) => {
                if files.sources.is_empty() {
                    return Err(Error::invalid("csv dataset needs at least one source file"));
                }
                for p in files.sources.iter().chain([&files.target]).chain(&files.calibration).chain(&files.truth) {
                    must_exist(p, false)?;
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "schema_version": 1,
        "dataset": {"friedman": {}},
        "methods": [{"name": "baseline"}, {"name": "re_isda", "eta": 2}, {"name": "kmm", "bandwidth": 0.5}],
        "seeds": [7],
        "output_dir": "out"
    }"#;

    #[test]
    fn parses_minimal_config() {
        let cfg = ExperimentConfig::from_json(MINIMAL).unwrap();
        assert_eq!(cfg.dataset, DatasetSource::Friedman(FriedmanBenchmarkSpec::default()));
        assert_eq!(cfg.methods[1], Method::ReIsda { eta: 2 });
        assert_eq!(cfg.base_spec(), MlpSpec::friedman_default());
        cfg.validate().unwrap();
    }

    #[test]
    fn rejects_bad_configs() {
        let two_sources = MINIMAL.replace(r#"{"friedman": {}}"#, r#"{"friedman": {}, "bundle": "x"}"#);
        assert!(ExperimentConfig::from_json(&two_sources).is_err());
        let unknown = MINIMAL.replace(r#""seeds""#, r#""sedes": [1], "seeds""#);
        assert!(ExperimentConfig::from_json(&unknown).is_err());
        let mut cfg = ExperimentConfig::from_json(MINIMAL).unwrap();
        cfg.schema_version = 9;
        assert!(cfg.validate().is_err());
        let mut cfg = ExperimentConfig::from_json(MINIMAL).unwrap();
        cfg.seeds.clear();
        assert!(cfg.validate().is_err());
        let mut cfg = ExperimentConfig::from_json(MINIMAL).unwrap();
        cfg.dataset = DatasetSource::Bundle("/definitely/not/here".into());
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn relative_paths_follow_the_config() {
        let mut cfg = ExperimentConfig::from_json(MINIMAL).unwrap();
        cfg.dataset = DatasetSource::Bundle("data".into());
        cfg.resolve_paths(Path::new("/exp"));
        assert_eq!(cfg.dataset, DatasetSource::Bundle("/exp/data".into()));
        assert_eq!(cfg.output_dir, PathBuf::from("/exp/out"));
    }
}
