use rand::Rng as _;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::sync::Arc;

use crate::channel_model::{draw_channel, ChannelConfig};
use crate::error::dim_err;
use crate::linalg::lift_vector;
use crate::seed::stream;
use crate::sounding::{observe, MeasurementModel};
use crate::{CVector, Error, RMatrix, Result};

/// SNR used when observing a sample.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SnrPolicy {
    Fixed(f64),
    /// Each sample draws its SNR uniformly from the set.
    Mixed(Vec<f64>),
}

impl SnrPolicy {
    pub fn validate(&self) -> Result<()> {
        match self {
            SnrPolicy::Fixed(s) if s.is_nan() => Err(Error::Config("SNR is NaN".into())),
            SnrPolicy::Mixed(set) if set.is_empty() => {
                Err(Error::Config("mixed SNR set is empty".into()))
            }
            SnrPolicy::Mixed(set) if set.iter().any(|s| s.is_nan()) => {
                Err(Error::Config("SNR is NaN".into()))
            }
            _ => Ok(()),
        }
    }
}

/// Observed samples under one fixed measurement model. Lifted vectors are
/// stored one sample per column.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub model: Arc<MeasurementModel>,
    /// Ψᵣᵀyᵣ, `D × n`.
    pub stats: RMatrix,
    /// Lifted ground-truth `h_c`, `D × n`.
    pub truths: RMatrix,
    pub observations: Vec<CVector>,
    pub snr_db: Vec<f64>,
    pub noise_var: Vec<f64>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn gram(&self) -> &RMatrix {
        &self.model.gram_real
    }
}

/// Draws `n` channels and observes each once.
///
/// Channels, noise and per-sample SNRs come from separate sub-streams of
/// `seed`, so two datasets with the same seed share channel realisations
/// even when their measurement models or SNRs differ.
pub fn gen_dataset(
    channel: &ChannelConfig,
    model: Arc<MeasurementModel>,
    snr_policy: &SnrPolicy,
    n: usize,
    seed: u64,
) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    channel.validate()?;
    snr_policy.validate()?;
    if channel.m != model.m() || channel.n != model.n() {
        return Err(dim_err(format!(
            "channel is {}×{}, measurement model expects {}×{}",
            channel.m,
            channel.n,
            model.m(),
            model.n()
        )));
    }
    let mut channel_rng = stream(seed, "channels");
    let mut noise_rng = stream(seed, "noise");
    let mut snr_rng = stream(seed, "snr");
    let d = model.lifted_dim();
    let mut stats = RMatrix::zeros(d, n);
    let mut truths = RMatrix::zeros(d, n);
    let mut observations = Vec::with_capacity(n);
    let mut snr_db = Vec::with_capacity(n);
    let mut noise_var = Vec::with_capacity(n);
    for i in 0..n {
        let snr = match snr_policy {
            SnrPolicy::Fixed(s) => *s,
            SnrPolicy::Mixed(set) => set[snr_rng.random_range(0..set.len())],
        };
        let ch = draw_channel(channel, &mut channel_rng)?;
        let obs = observe(&model, &ch.cascaded.vector, snr, &mut noise_rng)?;
        truths.set_column(i, &lift_vector(&ch.cascaded.vector));
        stats.set_column(i, &obs.stat_real);
        observations.push(obs.y);
        snr_db.push(snr);
        noise_var.push(obs.noise_var);
    }
    Ok(Dataset {
        model,
        stats,
        truths,
        observations,
        snr_db,
        noise_var,
    })
}

const DATASET_MAGIC: &[u8; 4] = b"RISD";
const DATASET_VERSION: u32 = 1;

impl Dataset {
    /// Writes the dataset in a flat little-endian layout: magic `RISD`,
    /// version, `m, n, k, n_w, count` as u32, then per sample the SNR,
    /// noise variance, `y` as interleaved (re, im), the lifted truth and the
    /// lifted statistic, all f64.
    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        let m = &self.model;
        w.write_all(DATASET_MAGIC)?;
        for v in [
            DATASET_VERSION as usize,
            m.m(),
            m.n(),
            m.k(),
            m.n_w(),
            self.len(),
        ] {
            w.write_all(&(v as u32).to_le_bytes())?;
        }
        let mut buf = Vec::new();
        for i in 0..self.len() {
            buf.clear();
            buf.extend_from_slice(&self.snr_db[i].to_le_bytes());
            buf.extend_from_slice(&self.noise_var[i].to_le_bytes());
            for z in self.observations[i].iter() {
                buf.extend_from_slice(&z.re.to_le_bytes());
                buf.extend_from_slice(&z.im.to_le_bytes());
            }
            for x in self
                .truths
                .column(i)
                .iter()
                .chain(self.stats.column(i).iter())
            {
                buf.extend_from_slice(&x.to_le_bytes());
            }
            w.write_all(&buf)?;
        }
        Ok(())
    }

    /// Reads a file written by [`Dataset::write_to`], rebuilding the DFT
    /// measurement model from the stored sizes.
    pub fn read_from(mut r: impl Read) -> Result<Self> {
        let mut header = [0u8; 28];
        r.read_exact(&mut header)?;
        if &header[..4] != DATASET_MAGIC {
            return Err(Error::Config("not a dataset file (bad magic)".into()));
        }
        let field = |i: usize| {
            u32::from_le_bytes(header[4 + 4 * i..8 + 4 * i].try_into().unwrap()) as usize
        };
        if field(0) != DATASET_VERSION as usize {
            return Err(Error::Config(format!(
                "unsupported dataset version {}",
                field(0)
            )));
        }
        let (m, n, k, n_w, count) = (field(1), field(2), field(3), field(4), field(5));
        let model = Arc::new(MeasurementModel::dft(m, n, k, n_w)?);
        let d = model.lifted_dim();
        let y_len = n_w * k;
        let mut stats = RMatrix::zeros(d, count);
        let mut truths = RMatrix::zeros(d, count);
        let mut observations = Vec::with_capacity(count);
        let mut snr_db = Vec::with_capacity(count);
        let mut noise_var = Vec::with_capacity(count);
        let mut buf = vec![0u8; 8 * (2 + 2 * y_len + 2 * d)];
        for i in 0..count {
            r.read_exact(&mut buf)?;
            let vals: Vec<f64> = buf
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect();
            snr_db.push(vals[0]);
            noise_var.push(vals[1]);
            let y = &vals[2..2 + 2 * y_len];
            observations.push(CVector::from_fn(y_len, |j, _| {
                num_complex::Complex64::new(y[2 * j], y[2 * j + 1])
            }));
            let rest = &vals[2 + 2 * y_len..];
            truths.column_mut(i).copy_from_slice(&rest[..d]);
            stats.column_mut(i).copy_from_slice(&rest[d..]);
        }
        Ok(Dataset {
            model,
            stats,
            truths,
            observations,
            snr_db,
            noise_var,
        })
    }
}
