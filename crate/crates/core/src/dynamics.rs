//! Exact-diagonalization time evolution and long-time averages of the CGP.

use crate::algebra::{AlgebraDecomposition, BlockUnitary};
use crate::cgp::{cgp_block, CgpResult, SampleTag};
use crate::error::{Error, Result};
use crate::linalg::{eigh, hermiticity_defect, max_abs, CMat};
use crate::models::HamiltonianFamily;
use crate::scalar::{lit, to_f64, Real};
use crate::sparse::SparseOp;
use nalgebra::DVector;
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug)]
pub struct SpectralData<R: Real> {
    pub eigenvalues: DVector<R>,
    pub eigenvectors: CMat<R>,
}

/// Full spectral decomposition of a Hermitian matrix, with the residual
/// `max |H V - V diag(lambda)| <= 1e-10 max |H|` enforced.
pub fn diagonalize<R: Real>(h: &CMat<R>) -> Result<SpectralData<R>> {
    let scale = to_f64(max_abs(h));
    let herm = to_f64(hermiticity_defect(h));
    if herm > 1e-12 * scale.max(1.0) {
        return Err(Error::NotHermitian { deviation: herm });
    }
    let (vals, vecs) = eigh(h)?;
    let mut residual = h * &vecs;
    for (j, mut col) in residual.column_iter_mut().enumerate() {
        col -= vecs.column(j) * Complex::new(vals[j], R::zero());
    }
    let tol = 1e-10f64.max(1e3 * R::EPS) * scale.max(f64::MIN_POSITIVE);
    if to_f64(max_abs(&residual)) > tol && scale > 0.0 {
        return Err(Error::NoConvergence { dim: h.nrows() });
    }
    Ok(SpectralData { eigenvalues: vals, eigenvectors: vecs })
}

fn phases<R: Real>(vals: &DVector<R>, t: R) -> Vec<Complex<R>> {
    vals.iter()
        .map(|&l| {
            let a = l * t;
            Complex::new(a.cos(), -a.sin())
        })
        .collect()
}

/// `U_t = V exp(-i lambda t) V^dag`.
pub fn evolve<R: Real>(spec: &SpectralData<R>, t: R) -> CMat<R> {
    let v = &spec.eigenvectors;
    let ph = phases(&spec.eigenvalues, t);
    let mut scaled = v.clone();
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        col *= ph[j];
    }
    scaled * v.adjoint()
}

/// Spectral data of every sector block `M_J` of a Hamiltonian in the algebra.
#[derive(Clone, Debug)]
pub struct SectorSpectra<R: Real> {
    pub spectra: Vec<SpectralData<R>>,
}

impl<R: Real> SectorSpectra<R> {
    pub fn new(dec: &AlgebraDecomposition<R>, h: &SparseOp<R>) -> Result<Self> {
        let spectra = dec
            .reduce(h)
            .into_iter()
            .map(|m| {
                // Reduction leaves rounding-level anti-Hermitian noise.
                let half = Complex::new(lit::<R>(0.5), R::zero());
                diagonalize(&((&m + m.adjoint()) * half))
            })
            .collect::<Result<_>>()?;
        Ok(Self { spectra })
    }

    pub fn unitary(&self, t: R) -> BlockUnitary<R> {
        BlockUnitary { blocks: self.spectra.iter().map(|s| evolve(s, t)).collect() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeWindow {
    pub t_min: f64,
    pub t_max: f64,
}

impl Default for TimeWindow {
    fn default() -> Self {
        Self { t_min: 100.0, t_max: 1100.0 }
    }
}

impl TimeWindow {
    pub fn new(t_min: f64, t_max: f64) -> Result<Self> {
        if !(t_min.is_finite() && t_max.is_finite()) || t_min == t_max {
            return Err(Error::Invalid(format!("degenerate time window [{t_min}, {t_max}]")));
        }
        Ok(Self { t_min: t_min.min(t_max), t_max: t_min.max(t_max) })
    }

    pub fn width(&self) -> f64 {
        self.t_max - self.t_min
    }

    pub fn shifted(&self, by: f64) -> Self {
        Self { t_min: self.t_min + by, t_max: self.t_max + by }
    }
}

pub const DEFAULT_N_TIMES: usize = 200;

/// I.i.d. uniform times in the window from a seeded stream.
pub fn sample_times(n: usize, window: TimeWindow, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(0x7469_6d65);
    (0..n).map(|_| window.t_min + window.width() * rng.random::<f64>()).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeSample {
    pub t: f64,
    pub f: f64,
    pub cgp: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeAverage {
    pub mean_f: f64,
    pub stderr_f: f64,
    pub mean_cgp: f64,
    pub stderr_cgp: f64,
    pub n_times: usize,
    pub window: TimeWindow,
    pub seed: u64,
}

/// Sample mean and standard error.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mut acc = crate::scalar::KahanSum::default();
    xs.iter().for_each(|&x| acc.add(x));
    let mean = acc.value() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let mut ss = crate::scalar::KahanSum::default();
    xs.iter().for_each(|&x| ss.add((x - mean) * (x - mean)));
    (mean, (ss.value() / (n - 1.0) / n).sqrt())
}

/// CGP of `exp(-i t H)` in the adapted basis at each of the given times.
pub fn cgp_at_times<R: Real>(
    spectra: &SectorSpectra<R>,
    dec: &AlgebraDecomposition<R>,
    times: &[f64],
) -> Result<Vec<CgpResult<R>>> {
    times
        .par_iter()
        .map(|&t| {
            let u = spectra.unitary(lit::<R>(t));
            Ok(cgp_block(&u.blocks, dec)?.with_tag(SampleTag { time: Some(t), ..Default::default() }))
        })
        .collect()
}

/// Sampled long-time average of `f` and the CGP over `n_times` uniform times.
pub fn long_time_avg_cgp<R: Real>(
    family: &HamiltonianFamily<R>,
    dec: &AlgebraDecomposition<R>,
    n_times: usize,
    window: TimeWindow,
    seed: u64,
) -> Result<(TimeAverage, Vec<TimeSample>)> {
    if n_times < 2 {
        return Err(Error::Invalid("n_times must be at least 2".into()));
    }
    let window = TimeWindow::new(window.t_min, window.t_max)?;
    if dec.d() != family.d {
        return Err(Error::Shape(format!("decomposition dimension {} vs family {}", dec.d(), family.d)));
    }
    let spectra = SectorSpectra::new(dec, &family.hamiltonian())?;
    let times = sample_times(n_times, window, seed);
    let results = cgp_at_times(&spectra, dec, &times)?;
    let samples: Vec<TimeSample> = times
        .iter()
        .zip(&results)
        .map(|(&t, r)| TimeSample { t, f: to_f64(r.f_value), cgp: to_f64(r.cgp) })
        .collect();
    let fs: Vec<f64> = samples.iter().map(|s| s.f).collect();
    let cs: Vec<f64> = samples.iter().map(|s| s.cgp).collect();
    let (mean_f, stderr_f) = mean_stderr(&fs);
    let (mean_cgp, stderr_cgp) = mean_stderr(&cs);
    Ok((TimeAverage { mean_f, stderr_f, mean_cgp, stderr_cgp, n_times, window, seed }, samples))
}
