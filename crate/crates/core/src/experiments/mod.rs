//! Datasets, NMSE evaluation and the four studies.

mod dataset;
mod evaluate;
pub mod report;
mod study;

pub use dataset::{gen_dataset, Dataset, SnrPolicy};
pub use evaluate::{
    evaluate, Estimator, GdEstimator, LambdaChoice, LsEstimator, OracleEstimator, SvtEstimator,
    UnfoldingEstimator, ZeroEstimator,
};
pub use study::{
    curve_model, evaluate_curve, run_angle_range_study, run_experiment, run_overhead_study,
    run_paths_study, run_study, run_train_snr_study, test_data, train_curve, training_data,
    CurveMethod, CurveSpec, ExperimentSpec, Profile, ResultRow, Study, StudyOutput, StudySettings,
    TrainedCurve,
};
