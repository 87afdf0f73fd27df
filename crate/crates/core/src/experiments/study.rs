use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use super::{
    evaluate, gen_dataset, Dataset, Estimator, GdEstimator, LambdaChoice, LsEstimator, SnrPolicy,
    SvtEstimator, UnfoldingEstimator,
};
use crate::channel_model::{ChannelConfig, SineRange};
use crate::error::dim_err;
use crate::seed::{derive_seed, stream};
use crate::sounding::{MeasurementModel, SoundingConfig};
use crate::unfolding_net::{
    init_params, train, EpochStats, TrainSchedule, TrainingSet, UnfoldingParams,
};
use crate::{Error, Result};

/// Problem-size presets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Profile {
    /// Reduced sizes that train in minutes on one core.
    Desk,
    /// Full-size configuration (M = 16, N = 32, L = 15, 10⁵ training samples).
    Paper,
}

impl FromStr for Profile {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "desk" => Ok(Profile::Desk),
            "paper" => Ok(Profile::Paper),
            other => Err(Error::Config(format!(
                "unknown profile '{other}' (expected desk or paper)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CurveMethod {
    Unfolding { train_snr: SnrPolicy },
    LeastSquares,
    GradientDescent,
    Svt,
}

/// One curve of a study: a geometry, a sounding length and a method.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveSpec {
    pub label: String,
    pub channel: ChannelConfig,
    pub k: usize,
    pub n_w: usize,
    pub method: CurveMethod,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub name: String,
    pub curves: Vec<CurveSpec>,
    pub test_snrs_db: Vec<f64>,
    pub n_train: usize,
    pub n_test: usize,
    pub seed: u64,
    pub layers: usize,
    pub schedule: TrainSchedule,
    /// Iteration cap for the GD and SVT baselines.
    pub baseline_max_iters: usize,
    pub baseline_tol: f64,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.curves.is_empty() {
            return bad(format!("study '{}' has no curves", self.name));
        }
        if self.n_train == 0 || self.n_test == 0 {
            return bad("n_train and n_test must be positive".into());
        }
        if self.test_snrs_db.is_empty() || self.test_snrs_db.iter().any(|s| s.is_nan()) {
            return bad("test_snrs_db must be a non-empty list of numbers".into());
        }
        if self.layers == 0 {
            return bad("layers must be positive".into());
        }
        self.schedule.validate()?;
        let mut labels = HashSet::new();
        for c in &self.curves {
            if !labels.insert(c.label.as_str()) {
                return bad(format!("duplicate curve label '{}'", c.label));
            }
            c.channel.validate()?;
            SoundingConfig {
                k: c.k,
                n_w: c.n_w,
                snr_db: 0.0,
            }
            .validate(c.channel.m, c.channel.n)?;
            if let CurveMethod::Unfolding { train_snr } = &c.method {
                train_snr.validate()?;
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub curve: String,
    pub test_snr_db: f64,
    pub nmse: f64,
    pub n_samples: usize,
}

#[derive(Clone, Debug)]
pub struct TrainedCurve {
    pub label: String,
    pub params: UnfoldingParams,
    pub history: Vec<EpochStats>,
}

#[derive(Clone, Debug)]
pub struct StudyOutput {
    pub name: String,
    /// Curve-major, then test SNR in the order given.
    pub rows: Vec<ResultRow>,
    pub models: Vec<TrainedCurve>,
}

impl StudyOutput {
    pub fn nmse(&self, curve: &str, test_snr_db: f64) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.curve == curve && r.test_snr_db == test_snr_db)
            .map(|r| r.nmse)
    }
}

struct CurveResult {
    rows: Vec<ResultRow>,
    model: Option<TrainedCurve>,
}

/// Builds the DFT measurement model a curve is sounded with.
pub fn curve_model(curve: &CurveSpec) -> Result<Arc<MeasurementModel>> {
    Ok(Arc::new(MeasurementModel::dft(
        curve.channel.m,
        curve.channel.n,
        curve.k,
        curve.n_w,
    )?))
}

/// Training set of an unfolding curve.
///
/// Every curve draws its training data and shuffling from a seed derived
/// from the master seed and its label.
pub fn training_data(
    spec: &ExperimentSpec,
    curve: &CurveSpec,
    model: Arc<MeasurementModel>,
) -> Result<Dataset> {
    let CurveMethod::Unfolding { train_snr } = &curve.method else {
        return Err(Error::Config(format!(
            "curve {} is not trained",
            curve.label
        )));
    };
    let seed = derive_seed(derive_seed(spec.seed, &curve.label), "train");
    gen_dataset(&curve.channel, model, train_snr, spec.n_train, seed)
}

/// Test set at one SNR. The seed is shared by all curves of a study.
pub fn test_data(
    spec: &ExperimentSpec,
    curve: &CurveSpec,
    model: Arc<MeasurementModel>,
    snr_db: f64,
) -> Result<Dataset> {
    gen_dataset(
        &curve.channel,
        model,
        &SnrPolicy::Fixed(snr_db),
        spec.n_test,
        derive_seed(spec.seed, "test"),
    )
}

/// Trains the network of an unfolding curve.
pub fn train_curve(spec: &ExperimentSpec, curve: &CurveSpec) -> Result<TrainedCurve> {
    let model = curve_model(curve)?;
    let data = training_data(spec, curve, model.clone())?;
    let params = init_params(
        curve.channel.m,
        curve.channel.n,
        spec.layers,
        &model.gram_real,
    )?;
    let set = TrainingSet {
        gram: &model.gram_real,
        stats: &data.stats,
        truths: &data.truths,
    };
    let shuffle = &mut stream(derive_seed(spec.seed, &curve.label), "shuffle");
    let (params, history) = train(params, set, &spec.schedule, shuffle)?;
    Ok(TrainedCurve {
        label: curve.label.clone(),
        params,
        history,
    })
}

/// Evaluates a curve at every test SNR. Unfolding curves need `params`.
pub fn evaluate_curve(
    spec: &ExperimentSpec,
    curve: &CurveSpec,
    params: Option<&UnfoldingParams>,
) -> Result<Vec<ResultRow>> {
    let model = curve_model(curve)?;
    let estimator: Box<dyn Estimator + '_> = match &curve.method {
        CurveMethod::Unfolding { .. } => {
            let params = params.ok_or_else(|| {
                Error::Config(format!("curve {} needs trained parameters", curve.label))
            })?;
            if params.dim() != model.lifted_dim() {
                return Err(dim_err(format!(
                    "network width {} does not match model dimension {}",
                    params.dim(),
                    model.lifted_dim()
                )));
            }
            Box::new(UnfoldingEstimator { params })
        }
        CurveMethod::LeastSquares => Box::new(LsEstimator::new(&model)),
        CurveMethod::GradientDescent => Box::new(GdEstimator {
            lambda: LambdaChoice::Reference,
            max_iters: spec.baseline_max_iters,
            tol: spec.baseline_tol,
        }),
        CurveMethod::Svt => Box::new(SvtEstimator {
            lambda: LambdaChoice::Reference,
            max_iters: spec.baseline_max_iters,
            tol: spec.baseline_tol,
        }),
    };

    let mut rows = Vec::with_capacity(spec.test_snrs_db.len());
    for &snr in &spec.test_snrs_db {
        let test = test_data(spec, curve, model.clone(), snr)?;
        rows.push(ResultRow {
            curve: curve.label.clone(),
            test_snr_db: snr,
            nmse: evaluate(estimator.as_ref(), &test)?,
            n_samples: test.len(),
        });
    }
    Ok(rows)
}

fn run_curve(spec: &ExperimentSpec, curve: &CurveSpec) -> Result<CurveResult> {
    let trained = match curve.method {
        CurveMethod::Unfolding { .. } => Some(train_curve(spec, curve)?),
        _ => None,
    };
    let rows = evaluate_curve(spec, curve, trained.as_ref().map(|t| &t.params))?;
    Ok(CurveResult {
        rows,
        model: trained,
    })
}

/// Runs every curve (concurrently when the rayon pool has several threads)
/// and assembles rows in curve order.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<StudyOutput> {
    spec.validate()?;
    let results: Vec<CurveResult> = spec
        .curves
        .par_iter()
        .map(|c| run_curve(spec, c))
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    let mut models = Vec::new();
    for r in results {
        rows.extend(r.rows);
        models.extend(r.model);
    }
    Ok(StudyOutput {
        name: spec.name.clone(),
        rows,
        models,
    })
}

/// The four studies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Study {
    /// NMSE vs. sounding length, unfolding vs. LS (and optionally SVT).
    Overhead,
    /// NMSE vs. number of paths.
    Paths,
    /// NMSE vs. the SNR policy used for training.
    TrainSnr,
    /// NMSE vs. the angle-sine range.
    AngleRange,
}

impl Study {
    pub const ALL: [Study; 4] = [
        Study::Overhead,
        Study::Paths,
        Study::TrainSnr,
        Study::AngleRange,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Study::Overhead => "overhead",
            Study::Paths => "paths",
            Study::TrainSnr => "train-snr",
            Study::AngleRange => "angle-range",
        }
    }
}

impl fmt::Display for Study {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Study {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Study::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown study '{s}'")))
    }
}

/// Everything needed to build the four studies.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudySettings {
    /// Base geometry; the paths and angle-range studies override `l1`, `l2`
    /// and `angle_sine_range` per curve.
    pub channel: ChannelConfig,
    pub n_w: usize,
    /// Sounding length for the paths, training-SNR and angle-range studies.
    pub k: usize,
    pub overhead_k_unfold: Vec<usize>,
    pub overhead_k_ls: usize,
    /// Adds an SVT curve at each unfolding K to the overhead study.
    pub overhead_include_svt: bool,
    pub train_snr_db: f64,
    /// Fixed training SNRs compared in the training-SNR study.
    pub train_snr_study_fixed_db: Vec<f64>,
    /// Set for the mixed training policy.
    pub mixed_snrs_db: Vec<f64>,
    pub path_counts: Vec<usize>,
    pub angle_ranges: Vec<SineRange>,
    pub test_snrs_db: Vec<f64>,
    pub n_train: usize,
    pub n_test: usize,
    pub layers: usize,
    pub schedule: TrainSchedule,
    pub baseline_max_iters: usize,
    pub baseline_tol: f64,
    pub seed: u64,
}

impl StudySettings {
    pub fn for_profile(profile: Profile) -> Self {
        let (m, n, n_w, k, k_unfold, k_ls, layers, n_train) = match profile {
            Profile::Desk => (8, 16, 4, 14, vec![12, 14], 16, 8, 20_000),
            Profile::Paper => (16, 32, 8, 28, vec![24, 28], 32, 15, 100_000),
        };
        let snr_grid = vec![0.0, 5.0, 10.0, 15.0, 20.0];
        Self {
            channel: ChannelConfig {
                m,
                n,
                l1: 1,
                l2: 1,
                var_los: 1.0,
                var_nlos: 0.01,
                angle_sine_range: SineRange::new(0.0, 1.0),
            },
            n_w,
            k,
            overhead_k_unfold: k_unfold,
            overhead_k_ls: k_ls,
            overhead_include_svt: false,
            train_snr_db: 20.0,
            train_snr_study_fixed_db: vec![0.0, 20.0],
            mixed_snrs_db: snr_grid.clone(),
            path_counts: vec![1, 2, 3],
            angle_ranges: vec![
                SineRange::new(0.0, 1.0),
                SineRange::new(0.0, 0.5),
                SineRange::new(0.0, 0.25),
            ],
            test_snrs_db: snr_grid,
            n_train,
            n_test: 10_000,
            layers,
            schedule: TrainSchedule::default(),
            baseline_max_iters: 5000,
            baseline_tol: 1e-8,
            seed: 0,
        }
    }

    fn curve(
        &self,
        label: String,
        channel: ChannelConfig,
        k: usize,
        method: CurveMethod,
    ) -> CurveSpec {
        CurveSpec {
            label,
            channel,
            k,
            n_w: self.n_w,
            method,
        }
    }

    fn unfold_at(&self, snr: f64) -> CurveMethod {
        CurveMethod::Unfolding {
            train_snr: SnrPolicy::Fixed(snr),
        }
    }

    pub fn build_spec(&self, study: Study) -> ExperimentSpec {
        let base = &self.channel;
        let curves = match study {
            Study::Overhead => {
                let mut c: Vec<CurveSpec> = self
                    .overhead_k_unfold
                    .iter()
                    .map(|&k| {
                        self.curve(
                            format!("unfold-K{k}"),
                            base.clone(),
                            k,
                            self.unfold_at(self.train_snr_db),
                        )
                    })
                    .collect();
                c.push(self.curve(
                    format!("ls-K{}", self.overhead_k_ls),
                    base.clone(),
                    self.overhead_k_ls,
                    CurveMethod::LeastSquares,
                ));
                if self.overhead_include_svt {
                    for &k in &self.overhead_k_unfold {
                        c.push(self.curve(format!("svt-K{k}"), base.clone(), k, CurveMethod::Svt));
                    }
                }
                c
            }
            Study::Paths => self
                .path_counts
                .iter()
                .map(|&l| {
                    let channel = ChannelConfig {
                        l1: l,
                        l2: l,
                        ..base.clone()
                    };
                    self.curve(
                        format!("unfold-L{l}"),
                        channel,
                        self.k,
                        self.unfold_at(self.train_snr_db),
                    )
                })
                .collect(),
            Study::TrainSnr => {
                let mut c: Vec<CurveSpec> = self
                    .train_snr_study_fixed_db
                    .iter()
                    .map(|&s| {
                        self.curve(
                            format!("train-{s}dB"),
                            base.clone(),
                            self.k,
                            self.unfold_at(s),
                        )
                    })
                    .collect();
                c.push(self.curve(
                    "train-mixed".into(),
                    base.clone(),
                    self.k,
                    CurveMethod::Unfolding {
                        train_snr: SnrPolicy::Mixed(self.mixed_snrs_db.clone()),
                    },
                ));
                c
            }
            Study::AngleRange => self
                .angle_ranges
                .iter()
                .map(|r| {
                    let channel = ChannelConfig {
                        angle_sine_range: *r,
                        ..base.clone()
                    };
                    self.curve(
                        format!("sine-{}-{}", r.lo, r.hi),
                        channel,
                        self.k,
                        self.unfold_at(self.train_snr_db),
                    )
                })
                .collect(),
        };
        ExperimentSpec {
            name: study.name().to_string(),
            curves,
            test_snrs_db: self.test_snrs_db.clone(),
            n_train: self.n_train,
            n_test: self.n_test,
            seed: self.seed,
            layers: self.layers,
            schedule: self.schedule.clone(),
            baseline_max_iters: self.baseline_max_iters,
            baseline_tol: self.baseline_tol,
        }
    }
}

pub fn run_study(study: Study, settings: &StudySettings) -> Result<StudyOutput> {
    run_experiment(&settings.build_spec(study))
}

pub fn run_overhead_study(settings: &StudySettings) -> Result<StudyOutput> {
    run_study(Study::Overhead, settings)
}

pub fn run_paths_study(settings: &StudySettings) -> Result<StudyOutput> {
    run_study(Study::Paths, settings)
}

pub fn run_train_snr_study(settings: &StudySettings) -> Result<StudyOutput> {
    run_study(Study::TrainSnr, settings)
}

pub fn run_angle_range_study(settings: &StudySettings) -> Result<StudyOutput> {
    run_study(Study::AngleRange, settings)
}
