//! Haar sampling inside an algebra, Monte Carlo CGP averages and concentration checks.

use crate::algebra::{AlgebraDecomposition, BlockUnitary};
use crate::cgp::{cgp_block, fourth_power_sum, haar_avg_analytic};
use crate::dynamics::mean_stderr;
use crate::error::{Error, Result};
use crate::linalg::CMat;
use crate::scalar::{lit, to_f64, Real};
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Random stream for sample `index` of a run seeded with `seed`.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Haar-distributed `n x n` unitary: QR of a complex Ginibre matrix with the
/// phases of `diag(R)` moved into `Q`.
pub fn sample_haar_unitary<R: Real>(n: usize, rng: &mut ChaCha20Rng) -> CMat<R> {
    let half = std::f64::consts::FRAC_1_SQRT_2;
    let g = CMat::<R>::from_fn(n, n, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex::new(lit(re * half), lit(im * half))
    });
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..n {
        let z = r[(j, j)];
        let m = z.re.hypot(z.im);
        let phase = if m > R::zero() { z / Complex::new(m, R::zero()) } else { Complex::new(R::one(), R::zero()) };
        let mut col = q.column_mut(j);
        col *= phase;
    }
    q
}

fn sample_blocks<R: Real>(dec: &AlgebraDecomposition<R>, rng: &mut ChaCha20Rng) -> BlockUnitary<R> {
    BlockUnitary { blocks: dec.sectors.iter().map(|s| sample_haar_unitary(s.d, rng)).collect() }
}

/// One block-Haar unitary `(+)_J 1_{n_J} (x) U_J`; equals sample 0 of
/// [`mc_haar_cgp`] with the same seed.
pub fn sample_haar_block<R: Real>(dec: &AlgebraDecomposition<R>, seed: u64) -> BlockUnitary<R> {
    sample_blocks(dec, &mut sample_rng(seed, 0))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n_samples: usize,
    pub seed: u64,
    pub analytic_ref: f64,
}

impl McEstimate {
    /// `|mean - analytic| <= z * stderr`, with a floor for zero-variance runs.
    pub fn agrees(&self, z: f64) -> bool {
        (self.mean - self.analytic_ref).abs() <= z * self.stderr + 1e-12
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct McSample {
    pub sample: usize,
    pub cgp: f64,
    pub f: f64,
}

/// Monte Carlo estimate of the block-Haar CGP average. Sample `i` draws from
/// stream `i`, so results do not depend on the thread count.
pub fn mc_haar_cgp<R: Real>(
    dec: &AlgebraDecomposition<R>,
    n_samples: usize,
    seed: u64,
) -> Result<(McEstimate, Vec<McSample>)> {
    if n_samples < 2 {
        return Err(Error::Invalid("n_samples must be at least 2".into()));
    }
    let samples: Vec<McSample> = (0..n_samples)
        .into_par_iter()
        .map(|i| {
            let u = sample_blocks(dec, &mut sample_rng(seed, i as u64));
            let r = cgp_block(&u.blocks, dec)?;
            Ok(McSample { sample: i, cgp: to_f64(r.cgp), f: to_f64(r.f_value) })
        })
        .collect::<Result<_>>()?;
    let cs: Vec<f64> = samples.iter().map(|s| s.cgp).collect();
    let (mean, stderr) = mean_stderr(&cs);
    let est = McEstimate { mean, stderr, n_samples, seed, analytic_ref: to_f64(haar_avg_analytic(dec)) };
    Ok((est, samples))
}

/// Per-sector statistic `X(U_J) = (1/d_J) sum_ab |(U_J)_ab|^4`, Haar mean `2/(d_J+1)`.
pub fn sector_statistic<R: Real>(u: &CMat<R>) -> f64 {
    to_f64(fourth_power_sum(u)) / u.nrows() as f64
}

/// Levy tail bound `exp(-d eps^2 / (4 lambda^2))` with `lambda = 8`.
pub fn levy_bound(d: usize, eps: f64) -> f64 {
    (-(d as f64) * eps * eps / 256.0).exp()
}

/// Wilson score interval for `k` successes in `n` trials.
pub fn wilson_interval(k: usize, n: usize, z: f64) -> (f64, f64) {
    let n_f = n as f64;
    let p = k as f64 / n_f;
    let z2 = z * z;
    let denom = 1.0 + z2 / n_f;
    let centre = (p + z2 / (2.0 * n_f)) / denom;
    let half = z * (p * (1.0 - p) / n_f + z2 / (4.0 * n_f * n_f)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailRow {
    pub sector: usize,
    pub d_j: usize,
    pub epsilon: f64,
    pub n_samples: usize,
    pub exceed: usize,
    /// Empirical `Pr(|X - 2/(d_J+1)| >= eps)`.
    pub tail: f64,
    /// Binomial standard error `sqrt(p (1-p) / n)`.
    pub sigma: f64,
    pub wilson_lo: f64,
    pub wilson_hi: f64,
    pub levy: f64,
    pub empirical_mean: f64,
    pub haar_mean: f64,
}

impl TailRow {
    /// Tail within the Levy bound plus `z` binomial errors; vacuous when the bound is `>= 1`.
    pub fn within_levy(&self, z: f64) -> bool {
        self.levy >= 1.0 || self.tail <= self.levy + z * self.sigma
    }
}

/// Empirical tail probabilities of `X(U_J)` for every sector and epsilon.
pub fn concentration_stats<R: Real>(
    dec: &AlgebraDecomposition<R>,
    epsilons: &[f64],
    n_samples: usize,
    seed: u64,
) -> Result<Vec<TailRow>> {
    if n_samples == 0 {
        return Err(Error::Invalid("n_samples must be positive".into()));
    }
    if let Some(e) = epsilons.iter().find(|e| e.is_nan() || **e <= 0.0) {
        return Err(Error::Invalid(format!("epsilon {e} is not positive")));
    }
    let mut rows = Vec::new();
    for s in &dec.sectors {
        let xs: Vec<f64> = (0..n_samples)
            .into_par_iter()
            .map(|i| {
                let mut rng = sample_rng(seed ^ ((s.label as u64) << 32), i as u64);
                sector_statistic(&sample_haar_unitary::<R>(s.d, &mut rng))
            })
            .collect();
        let haar_mean = 2.0 / (s.d as f64 + 1.0);
        let (empirical_mean, _) = mean_stderr(&xs);
        for &eps in epsilons {
            let exceed = xs.iter().filter(|&&x| (x - haar_mean).abs() >= eps).count();
            let tail = exceed as f64 / n_samples as f64;
            let (wilson_lo, wilson_hi) = wilson_interval(exceed, n_samples, 3.0);
            rows.push(TailRow {
                sector: s.label,
                d_j: s.d,
                epsilon: eps,
                n_samples,
                exceed,
                tail,
                sigma: (tail * (1.0 - tail) / n_samples as f64).sqrt(),
                wilson_lo,
                wilson_hi,
                levy: levy_bound(s.d, eps),
                empirical_mean,
                haar_mean,
            });
        }
    }
    Ok(rows)
}
