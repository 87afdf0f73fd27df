//! Argument parsing and validation into a [`RunConfig`].

use std::fmt;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use ris_unfold::experiments::{
    CurveMethod, CurveSpec, ExperimentSpec, Profile, SnrPolicy, Study, StudySettings,
};

use crate::config;

#[derive(Debug, Parser)]
#[command(
    name = "ris-unfold",
    version,
    about = "Deep-unfolding estimation of the RIS cascaded channel"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML run configuration. Profile defaults are used when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Master seed; overrides the config file.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Problem-size preset the config file is applied on top of.
    #[arg(long, global = true, value_enum)]
    pub profile: Option<ProfileArg>,
    /// Directory every output file is written into.
    #[arg(long, global = true, value_name = "DIR", default_value = "out")]
    pub output_dir: PathBuf,
    /// Worker threads (defaults to the number of cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Write the training set and one test set per test SNR.
    GenData,
    /// Train the unfolding network; writes model.risu and loss_history.csv.
    Train,
    /// Evaluate a trained checkpoint (or a baseline) over the test SNRs.
    Eval {
        #[arg(long, value_name = "PATH")]
        checkpoint: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Method::Unfold)]
        method: Method,
    },
    /// Evaluate a model-based baseline over the test SNRs.
    Baseline {
        #[arg(long, value_enum)]
        method: BaselineMethod,
    },
    /// Run one of the four studies.
    Study {
        #[arg(long, value_enum)]
        name: StudyArg,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProfileArg {
    Desk,
    Paper,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Ls,
    Gd,
    Svt,
    Unfold,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BaselineMethod {
    Ls,
    Gd,
    Svt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StudyArg {
    Overhead,
    Paths,
    TrainSnr,
    AngleRange,
}

impl From<BaselineMethod> for Method {
    fn from(m: BaselineMethod) -> Self {
        match m {
            BaselineMethod::Ls => Method::Ls,
            BaselineMethod::Gd => Method::Gd,
            BaselineMethod::Svt => Method::Svt,
        }
    }
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Ls => "ls",
            Method::Gd => "gd",
            Method::Svt => "svt",
            Method::Unfold => "unfold",
        }
    }
}

impl From<StudyArg> for Study {
    fn from(s: StudyArg) -> Self {
        match s {
            StudyArg::Overhead => Study::Overhead,
            StudyArg::Paths => Study::Paths,
            StudyArg::TrainSnr => Study::TrainSnr,
            StudyArg::AngleRange => Study::AngleRange,
        }
    }
}

/// Fully validated invocation.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub profile: Profile,
    pub settings: StudySettings,
    pub output_dir: PathBuf,
    pub jobs: Option<usize>,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Config(String),
    Runtime(String),
}

impl CliError {
    pub const USAGE: u8 = 2;
    pub const CONFIG: u8 = 3;
    pub const RUNTIME: u8 = 4;

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => Self::USAGE,
            CliError::Config(_) => Self::CONFIG,
            CliError::Runtime(_) => Self::RUNTIME,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Config(m) | CliError::Runtime(m) => f.write_str(m),
        }
    }
}

impl From<ris_unfold::Error> for CliError {
    fn from(e: ris_unfold::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl RunConfig {
    /// Single-curve experiment for `gen-data`, `train`, `eval` and `baseline`.
    pub fn single_curve_spec(&self, method: Method) -> ExperimentSpec {
        let s = &self.settings;
        let method = match method {
            Method::Ls => CurveMethod::LeastSquares,
            Method::Gd => CurveMethod::GradientDescent,
            Method::Svt => CurveMethod::Svt,
            Method::Unfold => CurveMethod::Unfolding {
                train_snr: SnrPolicy::Fixed(s.train_snr_db),
            },
        };
        let name = match &self.command {
            Command::GenData => "gen-data",
            Command::Train => "train",
            Command::Eval { .. } => "eval",
            Command::Baseline { .. } => "baseline",
            Command::Study { .. } => "study",
        };
        let curve = CurveSpec {
            label: format!("{}-K{}", method_label(&method), s.k),
            channel: s.channel.clone(),
            k: s.k,
            n_w: s.n_w,
            method,
        };
        ExperimentSpec {
            name: name.to_owned(),
            curves: vec![curve],
            test_snrs_db: s.test_snrs_db.clone(),
            n_train: s.n_train,
            n_test: s.n_test,
            seed: s.seed,
            layers: s.layers,
            schedule: s.schedule.clone(),
            baseline_max_iters: s.baseline_max_iters,
            baseline_tol: s.baseline_tol,
        }
    }

    pub fn spec(&self) -> ExperimentSpec {
        match &self.command {
            Command::GenData | Command::Train => self.single_curve_spec(Method::Unfold),
            Command::Eval { method, .. } => self.single_curve_spec(*method),
            Command::Baseline { method } => self.single_curve_spec((*method).into()),
            Command::Study { name } => self.settings.build_spec((*name).into()),
        }
    }
}

fn method_label(m: &CurveMethod) -> &'static str {
    match m {
        CurveMethod::Unfolding { .. } => "unfold",
        CurveMethod::LeastSquares => "ls",
        CurveMethod::GradientDescent => "gd",
        CurveMethod::Svt => "svt",
    }
}

/// Resolves profile, config file and flag overrides, then validates the
/// resulting experiment before any compute starts.
pub fn parse_and_validate(cli: Cli) -> Result<RunConfig, CliError> {
    if cli.jobs == Some(0) {
        return Err(CliError::Usage("--jobs must be at least 1".into()));
    }
    let file = match &cli.config {
        Some(path) => config::load(path).map_err(|e| CliError::Config(e.to_string()))?,
        None => config::FileConfig {
            schema_version: config::SCHEMA_VERSION,
            ..Default::default()
        },
    };
    let profile = match cli.profile {
        Some(ProfileArg::Desk) => Profile::Desk,
        Some(ProfileArg::Paper) => Profile::Paper,
        None => file.profile.unwrap_or(Profile::Desk),
    };
    let mut settings = file.settings(profile);
    if let Some(seed) = cli.seed {
        settings.seed = seed;
    }
    let rc = RunConfig {
        command: cli.command,
        profile,
        settings,
        output_dir: cli.output_dir,
        jobs: cli.jobs,
    };
    rc.spec()
        .validate()
        .map_err(|e| CliError::Config(e.to_string()))?;
    Ok(rc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn run_config(args: &[&str]) -> Result<RunConfig, CliError> {
        let argv = std::iter::once("ris-unfold").chain(args.iter().copied());
        parse_and_validate(Cli::try_parse_from(argv).expect("argv parses"))
    }

    fn config_file(text: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(text.as_bytes()).unwrap();
        f
    }

    #[test]
    fn seed_flag_overrides_config() {
        let f = config_file("schema_version = 1\nseed = 3\n");
        let path = f.path().to_str().unwrap();
        let rc = run_config(&["train", "--config", path, "--seed", "7"]).unwrap();
        assert_eq!(rc.settings.seed, 7);
        assert!(matches!(rc.command, Command::Train));

        let rc = run_config(&["train", "--config", path]).unwrap();
        assert_eq!(rc.settings.seed, 3);
    }

    #[test]
    fn paper_profile_selects_full_sizes() {
        let rc = run_config(&["train", "--profile", "paper"]).unwrap();
        let s = &rc.settings;
        assert_eq!(
            (s.channel.m, s.channel.n, s.layers, s.n_train),
            (16, 32, 15, 100_000)
        );
    }

    #[test]
    fn profile_flag_beats_config_profile() {
        let f = config_file("schema_version = 1\nprofile = \"paper\"\n");
        let path = f.path().to_str().unwrap();
        assert_eq!(
            run_config(&["train", "--config", path]).unwrap().profile,
            Profile::Paper
        );
        assert_eq!(
            run_config(&["train", "--config", path, "--profile", "desk"])
                .unwrap()
                .profile,
            Profile::Desk
        );
    }

    #[test]
    fn missing_config_is_a_config_error() {
        let err = run_config(&["train", "--config", "/no/such/file.toml"]).unwrap_err();
        assert_eq!(err.exit_code(), CliError::CONFIG);
        assert!(err.to_string().contains("/no/such/file.toml"));
    }

    #[test]
    fn schema_violations_are_config_errors() {
        let f = config_file("schema_version = 1\n[sounding]\nk = 0\n");
        let err = run_config(&[
            "baseline",
            "--method",
            "ls",
            "--config",
            f.path().to_str().unwrap(),
        ])
        .unwrap_err();
        assert_eq!(err.exit_code(), CliError::CONFIG);
    }

    #[test]
    fn zero_jobs_is_a_usage_error() {
        assert_eq!(
            run_config(&["train", "--jobs", "0"])
                .unwrap_err()
                .exit_code(),
            CliError::USAGE
        );
    }

    #[test]
    fn curve_labels_follow_the_method() {
        let rc = run_config(&["baseline", "--method", "svt"]).unwrap();
        assert_eq!(rc.spec().curves[0].label, "svt-K14");
        let rc = run_config(&["study", "--name", "overhead"]).unwrap();
        assert_eq!(rc.spec().curves.len(), 3);
    }
}
