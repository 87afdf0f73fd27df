//! Runs a validated [`RunConfig`]. Every file is written under `output_dir`.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;

use ris_unfold::experiments::report::{write_history, write_results_file};
use ris_unfold::experiments::{
    curve_model, evaluate_curve, run_study, test_data, train_curve, training_data, ResultRow, Study,
};
use ris_unfold::unfolding_net::checkpoint;

use crate::run::{CliError, Command, Method, RunConfig};

pub fn dispatch(rc: &RunConfig) -> Result<(), CliError> {
    if let Some(jobs) = rc.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CliError::Runtime(format!("cannot start worker pool: {e}")))?;
    }
    fs::create_dir_all(&rc.output_dir)?;
    eprintln!("profile {:?}, seed {}", rc.profile, rc.settings.seed);
    let spec = rc.spec();
    let dir = rc.output_dir.as_path();

    match &rc.command {
        Command::GenData => {
            let curve = &spec.curves[0];
            let model = curve_model(curve)?;
            let train = training_data(&spec, curve, model.clone())?;
            save_dataset(&train, &dir.join("train.risd"))?;
            for &snr in &spec.test_snrs_db {
                let test = test_data(&spec, curve, model.clone(), snr)?;
                save_dataset(&test, &dir.join(format!("test_{snr}dB.risd")))?;
            }
        }
        Command::Train => {
            let trained = train_curve(&spec, &spec.curves[0])?;
            save_model(&trained.params, &dir.join("model.risu"))?;
            save_history(&trained.history, &dir.join("loss_history.csv"))?;
            if let Some(last) = trained.history.last() {
                println!("epoch {} train nmse {:.6e}", last.epoch, last.mean_nmse);
            }
        }
        Command::Eval {
            checkpoint: path,
            method,
        } => {
            let params = match method {
                Method::Unfold => {
                    let path = path.clone().unwrap_or_else(|| dir.join("model.risu"));
                    Some(checkpoint::load(&path)?)
                }
                _ => None,
            };
            let rows = evaluate_curve(&spec, &spec.curves[0], params.as_ref())?;
            emit(dir, "eval", &rows)?;
        }
        Command::Baseline { method } => {
            let rows = evaluate_curve(&spec, &spec.curves[0], None)?;
            emit(
                dir,
                &format!("baseline-{}", Method::from(*method).name()),
                &rows,
            )?;
        }
        Command::Study { name } => {
            let study = Study::from(*name);
            let out = run_study(study, &rc.settings)?;
            emit(dir, study.name(), &out.rows)?;
            let ckpt_dir = dir.join("checkpoints").join(study.name());
            fs::create_dir_all(&ckpt_dir)?;
            for m in &out.models {
                save_model(&m.params, &ckpt_dir.join(format!("{}.risu", m.label)))?;
                save_history(
                    &m.history,
                    &ckpt_dir.join(format!("{}_loss_history.csv", m.label)),
                )?;
            }
        }
    }
    Ok(())
}

fn emit(dir: &Path, stem: &str, rows: &[ResultRow]) -> Result<(), CliError> {
    for r in rows {
        println!(
            "{:<16} {:>6} dB  nmse {:.6e}",
            r.curve, r.test_snr_db, r.nmse
        );
    }
    let path = write_results_file(dir, stem, rows)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn save_model(
    params: &ris_unfold::unfolding_net::UnfoldingParams,
    path: &Path,
) -> Result<(), CliError> {
    checkpoint::save(params, path)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn save_history(
    history: &[ris_unfold::unfolding_net::EpochStats],
    path: &Path,
) -> Result<(), CliError> {
    write_history(history, BufWriter::new(File::create(path)?))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn save_dataset(data: &ris_unfold::experiments::Dataset, path: &Path) -> Result<(), CliError> {
    data.write_to(BufWriter::new(File::create(path)?))?;
    println!("wrote {}", path.display());
    Ok(())
}
