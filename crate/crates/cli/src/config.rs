//! TOML run configuration.
//!
//! Every section is optional; missing values fall back to the selected
//! profile. Unknown keys are rejected so that a typo never silently runs
//! the default experiment.

use std::fs;
use std::path::Path;

use ris_unfold::channel_model::SineRange;
use ris_unfold::experiments::{Profile, StudySettings};
use serde::Deserialize;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub schema_version: u32,
    pub profile: Option<Profile>,
    pub seed: Option<u64>,
    #[serde(default)]
    pub channel: ChannelSection,
    #[serde(default)]
    pub sounding: SoundingSection,
    #[serde(default)]
    pub training: TrainingSection,
    #[serde(default)]
    pub evaluation: EvaluationSection,
    #[serde(default)]
    pub baseline: BaselineSection,
    #[serde(default)]
    pub study: StudySection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSection {
    pub m: Option<usize>,
    pub n: Option<usize>,
    pub l1: Option<usize>,
    pub l2: Option<usize>,
    pub var_los: Option<f64>,
    pub var_nlos: Option<f64>,
    pub angle_sine_range: Option<[f64; 2]>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SoundingSection {
    pub k: Option<usize>,
    pub n_w: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingSection {
    pub layers: Option<usize>,
    pub n_train: Option<usize>,
    pub train_snr_db: Option<f64>,
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub learning_rate: Option<f64>,
    pub decay_after_epochs: Option<usize>,
    pub decay_factor: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluationSection {
    pub n_test: Option<usize>,
    pub test_snrs_db: Option<Vec<f64>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaselineSection {
    pub max_iters: Option<usize>,
    pub tol: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudySection {
    pub overhead_k_unfold: Option<Vec<usize>>,
    pub overhead_k_ls: Option<usize>,
    pub overhead_include_svt: Option<bool>,
    pub train_snr_study_fixed_db: Option<Vec<f64>>,
    pub mixed_snrs_db: Option<Vec<f64>>,
    pub path_counts: Option<Vec<usize>>,
    pub angle_ranges: Option<Vec<[f64; 2]>>,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("config file {path} not found")]
    Missing { path: String },
    #[error("cannot read config file {path}: {source}")]
    Read {
        path: String,
        source: std::io::Error,
    },
    #[error("invalid config file {path}: {message}")]
    Parse { path: String, message: String },
    #[error("unsupported schema_version {found} (expected {SCHEMA_VERSION})")]
    Version { found: u32 },
}

pub fn load(path: &Path) -> Result<FileConfig, ConfigError> {
    let shown = path.display().to_string();
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            return Err(ConfigError::Missing { path: shown })
        }
        Err(e) => {
            return Err(ConfigError::Read {
                path: shown,
                source: e,
            })
        }
    };
    parse(&text).map_err(|e| match e {
        ConfigError::Parse { message, .. } => ConfigError::Parse {
            path: shown,
            message,
        },
        other => other,
    })
}

pub fn parse(text: &str) -> Result<FileConfig, ConfigError> {
    let cfg: FileConfig = toml::from_str(text).map_err(|e| ConfigError::Parse {
        path: String::new(),
        message: e.message().to_owned(),
    })?;
    if cfg.schema_version != SCHEMA_VERSION {
        return Err(ConfigError::Version {
            found: cfg.schema_version,
        });
    }
    Ok(cfg)
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn range(r: [f64; 2]) -> SineRange {
    SineRange::new(r[0], r[1])
}

impl FileConfig {
    /// Profile defaults overridden by whatever the file sets.
    pub fn settings(self, profile: Profile) -> StudySettings {
        let mut s = StudySettings::for_profile(profile);
        set(&mut s.seed, self.seed);

        let c = self.channel;
        set(&mut s.channel.m, c.m);
        set(&mut s.channel.n, c.n);
        set(&mut s.channel.l1, c.l1);
        set(&mut s.channel.l2, c.l2);
        set(&mut s.channel.var_los, c.var_los);
        set(&mut s.channel.var_nlos, c.var_nlos);
        set(
            &mut s.channel.angle_sine_range,
            c.angle_sine_range.map(range),
        );

        set(&mut s.k, self.sounding.k);
        set(&mut s.n_w, self.sounding.n_w);

        let t = self.training;
        set(&mut s.layers, t.layers);
        set(&mut s.n_train, t.n_train);
        set(&mut s.train_snr_db, t.train_snr_db);
        set(&mut s.schedule.epochs, t.epochs);
        set(&mut s.schedule.batch_size, t.batch_size);
        set(&mut s.schedule.learning_rate, t.learning_rate);
        set(&mut s.schedule.decay_after_epochs, t.decay_after_epochs);
        set(&mut s.schedule.decay_factor, t.decay_factor);

        set(&mut s.n_test, self.evaluation.n_test);
        set(&mut s.test_snrs_db, self.evaluation.test_snrs_db);

        set(&mut s.baseline_max_iters, self.baseline.max_iters);
        set(&mut s.baseline_tol, self.baseline.tol);

        let st = self.study;
        set(&mut s.overhead_k_unfold, st.overhead_k_unfold);
        set(&mut s.overhead_k_ls, st.overhead_k_ls);
        set(&mut s.overhead_include_svt, st.overhead_include_svt);
        set(&mut s.train_snr_study_fixed_db, st.train_snr_study_fixed_db);
        set(&mut s.mixed_snrs_db, st.mixed_snrs_db);
        set(&mut s.path_counts, st.path_counts);
        set(
            &mut s.angle_ranges,
            st.angle_ranges.map(|v| v.into_iter().map(range).collect()),
        );
        s
    }
}
