//! System-size sweeps of the long-time average and power-law fits `f = A d^B`.

use crate::algebra::{decompose, AlgebraDecomposition, DecomposeOptions};
use crate::dynamics::{long_time_avg_cgp, TimeSample, TimeWindow};
use crate::error::{Error, Result};
use crate::models::{build, krylov_graph_decompose, sample_couplings, tl_q, HamiltonianFamily, ModelId};
use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub model: ModelId,
    #[serde(rename = "L")]
    pub l: usize,
    pub d: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub seed: u64,
    pub n_times: usize,
    pub mean_f: f64,
    pub stderr_f: f64,
    pub mean_cgp: f64,
}

/// One sweep point with its per-time samples.
#[derive(Clone, Debug)]
pub struct SweepPoint {
    pub record: SweepRecord,
    pub samples: Vec<TimeSample>,
}

/// Decomposition used for a model family: product-state components for the
/// models whose Krylov subspaces are spanned by product states, the numeric
/// route otherwise.
pub fn family_decomposition(family: &HamiltonianFamily<f64>, seed: u64) -> Result<AlgebraDecomposition<f64>> {
    let graph = krylov_graph_decompose(family);
    if graph.is_krylov {
        AlgebraDecomposition::from_product_components(family.d, &graph.components)
    } else {
        decompose(&family.generator_ops(), &DecomposeOptions::seeded(seed))
    }
}

/// Long-time averages for every `(seed, L)`; the same seed drives couplings and times.
pub fn sweep_with_samples(
    model: ModelId,
    l_list: &[usize],
    seeds: &[u64],
    n_times: usize,
    window: TimeWindow,
) -> Result<Vec<SweepPoint>> {
    if l_list.is_empty() || seeds.is_empty() {
        return Err(Error::Invalid("empty size or seed list".into()));
    }
    for &l in l_list {
        model.validate_size(l)?;
    }
    let mut out = Vec::with_capacity(l_list.len() * seeds.len());
    for &seed in seeds {
        for &l in l_list {
            let family = build::<f64>(&sample_couplings(model, l, seed)?)?;
            let dec = family_decomposition(&family, seed)?;
            let (avg, samples) = long_time_avg_cgp(&family, &dec, n_times, window, seed)?;
            let record = SweepRecord {
                model,
                l,
                d: family.d,
                k: dec.k,
                seed,
                n_times,
                mean_f: avg.mean_f,
                stderr_f: avg.stderr_f,
                mean_cgp: avg.mean_cgp,
            };
            out.push(SweepPoint { record, samples });
        }
    }
    Ok(out)
}

pub fn sweep(model: ModelId, l_list: &[usize], seeds: &[u64], n_times: usize, window: TimeWindow) -> Result<Vec<SweepRecord>> {
    Ok(sweep_with_samples(model, l_list, seeds, n_times, window)?.into_iter().map(|p| p.record).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitMethod {
    RawLeastSquares,
    LogLinearFallback,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "B")]
    pub b: f64,
    #[serde(rename = "B_stderr")]
    pub b_stderr: f64,
    pub rmse_raw: f64,
    pub rmse_log: f64,
    pub n_points: usize,
    pub method: FitMethod,
}

fn rmse(points: &[(f64, f64)], a: f64, b: f64) -> (f64, f64) {
    let n = points.len() as f64;
    let raw: f64 = points.iter().map(|&(x, y)| (a * x.powf(b) - y).powi(2)).sum();
    let log: f64 = points.iter().map(|&(x, y)| (a.ln() + b * x.ln() - y.ln()).powi(2)).sum();
    ((raw / n).sqrt(), (log / n).sqrt())
}

/// Ordinary least squares of `ln f` on `ln d`: `(ln A, B, stderr of B)`.
fn log_linear(points: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let b = sxy / sxx;
    let c = my - b * mx;
    let ssr: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - c - b * x).powi(2)).sum();
    let se = if points.len() > 2 { (ssr / (n - 2.0) / sxx).sqrt() } else { 0.0 };
    (c, b, se)
}

fn sum_sq(points: &[(f64, f64)], a: f64, b: f64) -> f64 {
    points.iter().map(|&(x, y)| (a * x.powf(b) - y).powi(2)).sum()
}

fn normal_equations(points: &[(f64, f64)], a: f64, b: f64) -> (Matrix2<f64>, Vector2<f64>) {
    let mut jtj = Matrix2::zeros();
    let mut jtr = Vector2::zeros();
    for &(x, y) in points {
        let p = x.powf(b);
        let g = Vector2::new(p, a * p * x.ln());
        jtj += g * g.transpose();
        jtr += g * (a * p - y);
    }
    (jtj, jtr)
}

/// Levenberg-Marquardt on raw residuals `A d^B - f`, started from the
/// log-space fit. Falls back to the log-space fit, flagged, if it fails.
pub fn fit_power_law(points: &[(f64, f64)]) -> Result<ScalingFit> {
    if points.len() < 3 {
        return Err(Error::Invalid(format!("need at least 3 points, got {}", points.len())));
    }
    if let Some(p) = points.iter().find(|p| !(p.0 > 0.0 && p.1 > 0.0 && p.0.is_finite() && p.1.is_finite())) {
        return Err(Error::Invalid(format!("point ({}, {}) is not positive", p.0, p.1)));
    }
    let first = points[0].0;
    if points.iter().all(|p| p.0 == first) {
        return Err(Error::Invalid("all abscissae are equal".into()));
    }
    let n = points.len();
    let (c0, b0, se0) = log_linear(points);
    let (mut a, mut b) = (c0.exp(), b0);
    let mut cost = sum_sq(points, a, b);
    let mut lambda = 1e-3;
    let mut converged = false;
    for _ in 0..500 {
        let (jtj, jtr) = normal_equations(points, a, b);
        if jtr.amax() <= 1e-15 * (1.0 + cost) {
            converged = true;
            break;
        }
        let mut damped = jtj;
        damped[(0, 0)] *= 1.0 + lambda;
        damped[(1, 1)] *= 1.0 + lambda;
        let Some(step) = damped.try_inverse().map(|m| -(m * jtr)) else { break };
        let (na, nb) = (a + step[0], b + step[1]);
        let new_cost = if na > 0.0 { sum_sq(points, na, nb) } else { f64::INFINITY };
        if new_cost <= cost {
            let small = step[0].abs() <= 1e-14 * a.abs() && step[1].abs() <= 1e-14 * (1.0 + b.abs());
            let stalled = cost - new_cost <= 1e-16 * cost;
            a = na;
            b = nb;
            cost = new_cost;
            lambda = (lambda * 0.3).max(1e-12);
            if small || stalled {
                converged = true;
                break;
            }
        } else {
            lambda *= 10.0;
            if lambda > 1e12 {
                converged = cost.is_finite();
                break;
            }
        }
    }
    if converged && a > 0.0 && a.is_finite() && b.is_finite() {
        let (jtj, _) = normal_equations(points, a, b);
        let s2 = if n > 2 { cost / (n - 2) as f64 } else { 0.0 };
        let b_stderr = jtj.try_inverse().map(|c| (s2 * c[(1, 1)]).max(0.0).sqrt()).unwrap_or(f64::NAN);
        let (rmse_raw, rmse_log) = rmse(points, a, b);
        return Ok(ScalingFit { a, b, b_stderr, rmse_raw, rmse_log, n_points: n, method: FitMethod::RawLeastSquares });
    }
    let a = c0.exp();
    let (rmse_raw, rmse_log) = rmse(points, a, b0);
    Ok(ScalingFit { a, b: b0, b_stderr: se0, rmse_raw, rmse_log, n_points: n, method: FitMethod::LogLinearFallback })
}

/// Asymptotic exponent of `K` in `d`: `log_3 2` (t-Jz), `log_3 q` (TL), 0 (XXZ).
pub fn analytic_k_exponent(model: ModelId) -> f64 {
    match model {
        ModelId::Xxz => 0.0,
        ModelId::Tjz => 2f64.ln() / 3f64.ln(),
        ModelId::Tl => tl_q::<f64>().ln() / 3f64.ln(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioRow {
    #[serde(rename = "L")]
    pub l: usize,
    pub d: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub mean_f: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundComparison {
    pub model: ModelId,
    pub fitted_exponent: f64,
    pub fitted_stderr: f64,
    pub analytic_k_exponent: f64,
    /// Exponent of `K` fitted over the same sizes; `None` with fewer than 3 sizes.
    pub k_fit_exponent: Option<f64>,
    pub ratios: Vec<RatioRow>,
}

/// Fitted exponent of `f` against the `K` exponents, and `mean_f / K` per size.
pub fn compare_to_bound(records: &[SweepRecord], fit: &ScalingFit) -> Result<BoundComparison> {
    let first = records.first().ok_or_else(|| Error::Invalid("no sweep records".into()))?;
    if records.iter().any(|r| r.model != first.model) {
        return Err(Error::Invalid("records mix models".into()));
    }
    let mut ratios: Vec<RatioRow> = records
        .iter()
        .map(|r| RatioRow { l: r.l, d: r.d, k: r.k, mean_f: r.mean_f, ratio: r.mean_f / r.k as f64 })
        .collect();
    ratios.sort_by_key(|r| r.l);
    let mut k_points: Vec<(f64, f64)> = ratios.iter().map(|r| (r.d as f64, r.k as f64)).collect();
    k_points.dedup();
    let k_fit_exponent = if k_points.len() >= 3 { Some(fit_power_law(&k_points)?.b) } else { None };
    Ok(BoundComparison {
        model: first.model,
        fitted_exponent: fit.b,
        fitted_stderr: fit.b_stderr,
        analytic_k_exponent: analytic_k_exponent(first.model),
        k_fit_exponent,
        ratios,
    })
}

/// `(d, mean_f)` points of a sweep, averaged over seeds per size.
pub fn fit_points(records: &[SweepRecord]) -> Vec<(f64, f64)> {
    let mut by_d: std::collections::BTreeMap<usize, (f64, usize)> = Default::default();
    for r in records {
        let e = by_d.entry(r.d).or_insert((0.0, 0));
        e.0 += r.mean_f;
        e.1 += 1;
    }
    by_d.into_iter().map(|(d, (s, c))| (d as f64, s / c as f64)).collect()
}
