//! Geometric mmWave channels for the RIS→BS and MS→RIS hops and their
//! cascade.

use num_complex::Complex64;
use rand::Rng as _;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::dim_err;
use crate::linalg::{complex_gaussian, unvectorize, vectorize};
use crate::seed::Rng;
use crate::{CMatrix, CVector, Error, Result};

/// Closed interval of admissible angle sines.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SineRange {
    pub lo: f64,
    pub hi: f64,
}

impl SineRange {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.lo.is_finite()
            && self.hi.is_finite()
            && -1.0 <= self.lo
            && self.lo <= self.hi
            && self.hi <= 1.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "angle_sine_range [{}, {}] must satisfy -1 <= lo <= hi <= 1",
                self.lo, self.hi
            )))
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    fn sample(&self, rng: &mut Rng) -> f64 {
        if self.lo == self.hi {
            self.lo
        } else {
            rng.random_range(self.lo..=self.hi)
        }
    }
}

impl Default for SineRange {
    fn default() -> Self {
        Self::new(0.0, 1.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelConfig {
    /// BS antennas.
    pub m: usize,
    /// RIS elements.
    pub n: usize,
    /// Paths on the RIS→BS hop.
    pub l1: usize,
    /// Paths on the MS→RIS hop.
    pub l2: usize,
    pub var_los: f64,
    pub var_nlos: f64,
    pub angle_sine_range: SineRange,
}

impl ChannelConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.m == 0 || self.n == 0 {
            return bad(format!(
                "m ({}) and n ({}) must be positive",
                self.m, self.n
            ));
        }
        if self.l1 == 0 || self.l1 > self.m.min(self.n) {
            return bad(format!("l1 = {} must lie in 1..=min(m, n)", self.l1));
        }
        if self.l2 == 0 || self.l2 > self.n {
            return bad(format!("l2 = {} must lie in 1..=n", self.l2));
        }
        if !(self.var_los > 0.0 && self.var_los.is_finite()) {
            return bad(format!("var_los = {} must be positive", self.var_los));
        }
        if !(self.var_nlos >= 0.0 && self.var_nlos.is_finite()) {
            return bad(format!("var_nlos = {} must be non-negative", self.var_nlos));
        }
        self.angle_sine_range.validate()
    }
}

/// Which hop a [`PathSet`] describes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Hop {
    /// RIS→BS, `l1` paths with angles on both ends.
    RisToBs,
    /// MS→RIS, `l2` paths with the RIS-side angle only.
    MsToRis,
}

/// Multipath parameters of one hop. Entry 0 is the LoS path.
#[derive(Clone, Debug, PartialEq)]
pub struct PathSet {
    pub gains: Vec<Complex64>,
    /// Departure sines (RIS side of the RIS→BS hop); empty for MS→RIS.
    pub aod_sines: Vec<f64>,
    /// Arrival sines (BS side for RIS→BS, RIS side for MS→RIS).
    pub aoa_sines: Vec<f64>,
}

impl PathSet {
    pub fn len(&self) -> usize {
        self.gains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gains.is_empty()
    }
}

/// Half-wavelength ULA response `[1, e^{jπs}, …, e^{j(n−1)πs}]`.
pub fn steering_vector(sine: f64, n_elems: usize) -> CVector {
    CVector::from_fn(n_elems, |m, _| {
        Complex64::from_polar(1.0, PI * m as f64 * sine)
    })
}

/// Stacks steering vectors column-wise.
fn response_matrix(sines: &[f64], n_elems: usize) -> CMatrix {
    let mut a = CMatrix::zeros(n_elems, sines.len());
    for (i, &s) in sines.iter().enumerate() {
        a.set_column(i, &steering_vector(s, n_elems));
    }
    a
}

pub fn draw_paths(cfg: &ChannelConfig, hop: Hop, rng: &mut Rng) -> PathSet {
    let count = match hop {
        Hop::RisToBs => cfg.l1,
        Hop::MsToRis => cfg.l2,
    };
    let gains = (0..count)
        .map(|i| complex_gaussian(rng, if i == 0 { cfg.var_los } else { cfg.var_nlos }))
        .collect();
    let range = cfg.angle_sine_range;
    let aoa_sines = (0..count).map(|_| range.sample(rng)).collect();
    let aod_sines = match hop {
        Hop::RisToBs => (0..count).map(|_| range.sample(rng)).collect(),
        Hop::MsToRis => Vec::new(),
    };
    PathSet {
        gains,
        aod_sines,
        aoa_sines,
    }
}

/// `H1 = A(φ) diag(g) Aᴴ(θ)`, an `m × n` matrix.
pub fn assemble_h1(paths: &PathSet, m: usize, n: usize) -> Result<CMatrix> {
    let l = paths.len();
    if paths.aoa_sines.len() != l || paths.aod_sines.len() != l {
        return Err(dim_err(format!(
            "RIS→BS path set needs {l} AoA and AoD sines, got {} and {}",
            paths.aoa_sines.len(),
            paths.aod_sines.len()
        )));
    }
    if m == 0 || n == 0 {
        return Err(dim_err("H1 needs m, n > 0"));
    }
    let a_bs = response_matrix(&paths.aoa_sines, m);
    let a_ris = response_matrix(&paths.aod_sines, n);
    let g = CVector::from_column_slice(&paths.gains);
    Ok(a_bs * CMatrix::from_diagonal(&g) * a_ris.adjoint())
}

/// `h2 = A(φ) g`, a length-`n` vector.
pub fn assemble_h2(paths: &PathSet, n: usize) -> Result<CVector> {
    if paths.aoa_sines.len() != paths.len() {
        return Err(dim_err(format!(
            "MS→RIS path set needs {} AoA sines, got {}",
            paths.len(),
            paths.aoa_sines.len()
        )));
    }
    if n == 0 {
        return Err(dim_err("h2 needs n > 0"));
    }
    let a = response_matrix(&paths.aoa_sines, n);
    Ok(a * CVector::from_column_slice(&paths.gains))
}

/// Cascaded channel `Hc = H1 diag(h2)` and its column-major vectorisation.
#[derive(Clone, Debug, PartialEq)]
pub struct CascadedChannel {
    pub matrix: CMatrix,
    pub vector: CVector,
}

impl CascadedChannel {
    pub fn from_matrix(matrix: CMatrix) -> Self {
        let vector = vectorize(&matrix);
        Self { matrix, vector }
    }

    pub fn from_vector(vector: CVector, m: usize, n: usize) -> Result<Self> {
        if vector.len() != m * n {
            return Err(dim_err(format!(
                "vector length {} != {m}·{n}",
                vector.len()
            )));
        }
        let matrix = unvectorize(&vector, m, n);
        Ok(Self { matrix, vector })
    }
}

pub fn cascade(h1: &CMatrix, h2: &CVector) -> Result<CascadedChannel> {
    if h1.ncols() != h2.len() {
        return Err(dim_err(format!(
            "H1 has {} columns but h2 has length {}",
            h1.ncols(),
            h2.len()
        )));
    }
    let mut matrix = h1.clone();
    for (j, mut col) in matrix.column_iter_mut().enumerate() {
        col *= h2[j];
    }
    Ok(CascadedChannel::from_matrix(matrix))
}

/// One full channel realisation: both hops and their cascade.
#[derive(Clone, Debug)]
pub struct ChannelRealization {
    pub ris_bs: PathSet,
    pub ms_ris: PathSet,
    pub h1: CMatrix,
    pub h2: CVector,
    pub cascaded: CascadedChannel,
}

/// Draws both hops from `rng` (RIS→BS first) and cascades them.
pub fn draw_channel(cfg: &ChannelConfig, rng: &mut Rng) -> Result<ChannelRealization> {
    let ris_bs = draw_paths(cfg, Hop::RisToBs, rng);
    let ms_ris = draw_paths(cfg, Hop::MsToRis, rng);
    let h1 = assemble_h1(&ris_bs, cfg.m, cfg.n)?;
    let h2 = assemble_h2(&ms_ris, cfg.n)?;
    let cascaded = cascade(&h1, &h2)?;
    Ok(ChannelRealization {
        ris_bs,
        ms_ris,
        h1,
        h2,
        cascaded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::singular_values;
    use crate::seed::stream;
    use rand::SeedableRng;

    fn cfg(l1: usize, l2: usize) -> ChannelConfig {
        ChannelConfig {
            m: 8,
            n: 16,
            l1,
            l2,
            var_los: 1.0,
            var_nlos: 0.01,
            angle_sine_range: SineRange::default(),
        }
    }

    fn close(a: Complex64, b: Complex64) -> bool {
        (a - b).norm() < 1e-12
    }

    #[test]
    fn steering_vector_examples() {
        let v = steering_vector(0.0, 4);
        assert!(v.iter().all(|z| *z == Complex64::new(1.0, 0.0)));

        let v = steering_vector(1.0, 2);
        assert_eq!(v[0], Complex64::new(1.0, 0.0));
        assert!(close(v[1], Complex64::new(-1.0, 0.0)));

        let v = steering_vector(0.5, 4);
        let want = [(1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0)];
        for (z, (re, im)) in v.iter().zip(want) {
            assert!(close(*z, Complex64::new(re, im)));
        }
    }

    #[test]
    fn steering_entries_have_unit_modulus() {
        for &s in &[-1.0, -0.37, 0.0, 0.21, 0.999, 1.0] {
            let v = steering_vector(s, 64);
            assert_eq!(v[0], Complex64::new(1.0, 0.0));
            assert!(v.iter().all(|z| (z.norm() - 1.0).abs() < 1e-15));
        }
    }

    #[test]
    fn zero_nlos_variance_gives_zero_gains() {
        let mut c = cfg(3, 3);
        c.var_nlos = 0.0;
        let p = draw_paths(&c, Hop::RisToBs, &mut Rng::seed_from_u64(5));
        assert_eq!(p.gains[1], Complex64::new(0.0, 0.0));
        assert_eq!(p.gains[2], Complex64::new(0.0, 0.0));
        assert_ne!(p.gains[0], Complex64::new(0.0, 0.0));
    }

    #[test]
    fn draw_is_deterministic_and_in_range() {
        let c = cfg(3, 2);
        let a = draw_paths(&c, Hop::RisToBs, &mut Rng::seed_from_u64(11));
        let b = draw_paths(&c, Hop::RisToBs, &mut Rng::seed_from_u64(11));
        assert_eq!(a, b);
        assert_eq!(a.aod_sines.len(), 3);
        let h = draw_paths(&c, Hop::MsToRis, &mut Rng::seed_from_u64(11));
        assert!(h.aod_sines.is_empty());
        assert_eq!(h.len(), 2);
        assert!(a
            .aoa_sines
            .iter()
            .chain(&a.aod_sines)
            .all(|&s| c.angle_sine_range.contains(s)));
    }

    #[test]
    fn los_gain_variance_monte_carlo() {
        let c = cfg(1, 1);
        let mut rng = stream(2024, "los-variance");
        let n = 100_000;
        let var = (0..n)
            .map(|_| draw_paths(&c, Hop::RisToBs, &mut rng).gains[0].norm_sqr())
            .sum::<f64>()
            / n as f64;
        assert!((var - 1.0).abs() < 0.05, "empirical variance {var}");
    }

    #[test]
    fn single_broadside_path_is_all_ones() {
        let p = PathSet {
            gains: vec![Complex64::new(1.0, 0.0)],
            aod_sines: vec![0.0],
            aoa_sines: vec![0.0],
        };
        let h1 = assemble_h1(&p, 3, 5).unwrap();
        assert!(h1.iter().all(|z| close(*z, Complex64::new(1.0, 0.0))));
        let h2 = assemble_h2(&p, 5).unwrap();
        assert!(h2.iter().all(|z| close(*z, Complex64::new(1.0, 0.0))));
    }

    #[test]
    fn h2_scales_linearly_with_gain() {
        let g = Complex64::new(0.3, -1.2);
        let p = PathSet {
            gains: vec![g],
            aod_sines: vec![],
            aoa_sines: vec![0.41],
        };
        let h2 = assemble_h2(&p, 7).unwrap();
        let want = steering_vector(0.41, 7) * g;
        assert!((h2 - want).camax() < 1e-15);
    }

    #[test]
    fn sum_form_matches_matrix_form() {
        let c = cfg(3, 3);
        let mut rng = Rng::seed_from_u64(77);
        let p1 = draw_paths(&c, Hop::RisToBs, &mut rng);
        let p2 = draw_paths(&c, Hop::MsToRis, &mut rng);

        let mut h1_sum = CMatrix::zeros(c.m, c.n);
        for i in 0..p1.len() {
            let a = steering_vector(p1.aoa_sines[i], c.m);
            let b = steering_vector(p1.aod_sines[i], c.n);
            h1_sum += (a * b.adjoint()) * p1.gains[i];
        }
        let h1 = assemble_h1(&p1, c.m, c.n).unwrap();
        assert!((h1 - h1_sum).camax() <= 1e-12);

        let mut h2_sum = CVector::zeros(c.n);
        for i in 0..p2.len() {
            h2_sum += steering_vector(p2.aoa_sines[i], c.n) * p2.gains[i];
        }
        let h2 = assemble_h2(&p2, c.n).unwrap();
        assert!((h2 - h2_sum).camax() <= 1e-12);
    }

    #[test]
    fn two_paths_give_rank_two() {
        let c = cfg(2, 1);
        let p = draw_paths(&c, Hop::RisToBs, &mut Rng::seed_from_u64(3));
        let h1 = assemble_h1(&p, c.m, c.n).unwrap();
        let s = singular_values(&h1);
        assert!(s[1] > 1e-10 * s[0]);
        assert!(s[2] <= 1e-10 * s[0]);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let p = PathSet {
            gains: vec![Complex64::new(1.0, 0.0); 2],
            aod_sines: vec![0.0],
            aoa_sines: vec![0.0, 0.1],
        };
        assert!(matches!(assemble_h1(&p, 4, 4), Err(Error::Dimension(_))));
        assert!(matches!(
            cascade(&CMatrix::zeros(2, 3), &CVector::zeros(2)),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn cascade_special_cases() {
        let mut rng = Rng::seed_from_u64(8);
        let ch = draw_channel(&cfg(2, 2), &mut rng).unwrap();
        let ones = CVector::from_element(16, Complex64::new(1.0, 0.0));
        assert_eq!(cascade(&ch.h1, &ones).unwrap().matrix, ch.h1);
        let zero = cascade(&ch.h1, &CVector::zeros(16)).unwrap();
        assert!(zero.matrix.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn cascade_matches_end_to_end_identity() {
        let mut rng = Rng::seed_from_u64(19);
        let ch = draw_channel(&cfg(3, 3), &mut rng).unwrap();
        let omega = CVector::from_fn(16, |_, _| {
            Complex64::from_polar(1.0, rng.random_range(0.0..2.0 * PI))
        });
        let lhs = &ch.cascaded.matrix * &omega;
        let rhs = &ch.h1 * CMatrix::from_diagonal(&omega) * &ch.h2;
        assert!((lhs - rhs).norm() <= 1e-12);
        assert_eq!(ch.cascaded.vector, vectorize(&ch.cascaded.matrix));
    }

    #[test]
    fn config_validation() {
        assert!(cfg(1, 1).validate().is_ok());
        assert!(cfg(9, 1).validate().is_err());
        assert!(cfg(1, 17).validate().is_err());
        let mut c = cfg(1, 1);
        c.angle_sine_range = SineRange::new(-1.5, 0.0);
        assert!(c.validate().is_err());
        c.angle_sine_range = SineRange::new(0.5, 0.2);
        assert!(c.validate().is_err());
    }
}
