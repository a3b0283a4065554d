//! Coherence generating power `C_B(U) = 1 - (1/d) sum_ij |<i|U|j>|^4`.

use crate::algebra::{AlgebraDecomposition, BlockUnitary};
use crate::error::{Error, Result};
use crate::linalg::{unitarity_defect, CMat};
use crate::scalar::{lit, norm_sqr, to_f64, KahanSum, Real};
use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BasisId {
    Computational,
    Custom,
    Adapted,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SampleTag {
    pub time: Option<f64>,
    pub sample: Option<usize>,
    pub seed: Option<u64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CgpResult<R> {
    pub cgp: R,
    /// `f = sum |U_ij|^4 = d (1 - cgp)`, accumulated directly.
    pub f_value: R,
    /// Maximum attainable CGP for the unitaries considered: `1 - K/d`.
    pub bound: R,
    pub basis: BasisId,
    pub tag: SampleTag,
}

impl<R: Real> CgpResult<R> {
    pub fn with_tag(mut self, tag: SampleTag) -> Self {
        self.tag = tag;
        self
    }
}

/// Unitarity tolerance: `1e-10` in double precision, looser for `f32`.
pub fn unitary_tol<R: Real>() -> f64 {
    1e-10f64.max(1e3 * R::EPS)
}

fn check_unitary<R: Real>(m: &CMat<R>) -> Result<()> {
    if !m.is_square() {
        return Err(Error::Shape(format!("{}x{} is not square", m.nrows(), m.ncols())));
    }
    let dev = to_f64(unitarity_defect(m));
    if dev.is_nan() || dev > unitary_tol::<R>() {
        return Err(Error::NotUnitary { deviation: dev });
    }
    Ok(())
}

/// `sum_ij |m_ij|^4`, rows reduced in parallel and merged in row order.
pub fn fourth_power_sum<R: Real>(m: &CMat<R>) -> R {
    let rows: Vec<KahanSum<R>> = (0..m.nrows())
        .into_par_iter()
        .map(|i| {
            m.row(i)
                .iter()
                .map(|z: &Complex<R>| {
                    let p = norm_sqr(*z);
                    p * p
                })
                .collect()
        })
        .collect();
    let mut total = KahanSum::default();
    for r in &rows {
        total.merge(r);
    }
    total.value()
}

/// CGP of `u` in the orthonormal basis given by the columns of `basis`.
pub fn cgp_full<R: Real>(u: &CMat<R>, basis: &CMat<R>) -> Result<CgpResult<R>> {
    check_unitary(u)?;
    check_unitary(basis)?;
    if basis.nrows() != u.nrows() {
        return Err(Error::Shape(format!("basis is {}x{}, U is {}x{}", basis.nrows(), basis.ncols(), u.nrows(), u.ncols())));
    }
    let m = basis.adjoint() * u * basis;
    Ok(finish(&m, BasisId::Custom))
}

/// CGP in the computational basis.
pub fn cgp_computational<R: Real>(u: &CMat<R>) -> Result<CgpResult<R>> {
    check_unitary(u)?;
    Ok(finish(u, BasisId::Computational))
}

fn finish<R: Real>(m: &CMat<R>, basis: BasisId) -> CgpResult<R> {
    let d = lit::<R>(m.nrows() as f64);
    let f = fourth_power_sum(m);
    CgpResult { cgp: R::one() - f / d, f_value: f, bound: R::one() - d.recip(), basis, tag: SampleTag::default() }
}

/// Block form `1 - (1/d) sum_J n_J sum |<psi|U_J|psi'>|^4` in the adapted basis.
pub fn cgp_block<R: Real>(blocks: &[CMat<R>], dec: &AlgebraDecomposition<R>) -> Result<CgpResult<R>> {
    dec.check_blocks(blocks)?;
    let mut total = KahanSum::default();
    for (s, b) in dec.sectors.iter().zip(blocks) {
        check_unitary(b)?;
        total.add(lit::<R>(s.n as f64) * fourth_power_sum(b));
    }
    let d = lit::<R>(dec.d() as f64);
    let f = total.value();
    Ok(CgpResult { cgp: R::one() - f / d, f_value: f, bound: max_cgp_bound(dec), basis: BasisId::Adapted, tag: SampleTag::default() })
}

/// `1 - K/d`.
pub fn max_cgp_bound<R: Real>(dec: &AlgebraDecomposition<R>) -> R {
    R::one() - lit::<R>(dec.k as f64) / lit::<R>(dec.d() as f64)
}

/// Discrete Fourier transform of size `n`, all entries of modulus `n^{-1/2}`.
pub fn dft<R: Real>(n: usize) -> CMat<R> {
    let norm = lit::<R>(n as f64).sqrt().recip();
    CMat::from_fn(n, n, |a, b| {
        let phase = R::two_pi() * lit::<R>(((a * b) % n) as f64) / lit::<R>(n as f64);
        Complex::new(phase.cos() * norm, phase.sin() * norm)
    })
}

/// Block unitary whose blocks are mutually unbiased to the adapted basis,
/// attaining `1 - K/d`.
pub fn saturating_unitary<R: Real>(dec: &AlgebraDecomposition<R>) -> BlockUnitary<R> {
    BlockUnitary { blocks: dec.sectors.iter().map(|s| dft(s.d)).collect() }
}

/// Haar average over unitaries of the algebra: `1 - (1/d) sum_J 2 d_J n_J / (d_J + 1)`.
pub fn haar_avg_analytic<R: Real>(dec: &AlgebraDecomposition<R>) -> R {
    let mut acc = KahanSum::default();
    for s in &dec.sectors {
        let dj = lit::<R>(s.d as f64);
        acc.add(lit::<R>(2.0) * dj * lit::<R>(s.n as f64) / (dj + R::one()));
    }
    R::one() - acc.value() / lit::<R>(dec.d() as f64)
}

/// `(1 - 2K/(d+1), 1 - K/d)`; the lower end may be negative.
pub fn haar_avg_bounds<R: Real>(dec: &AlgebraDecomposition<R>) -> (R, R) {
    let k = lit::<R>(dec.k as f64);
    let d = lit::<R>(dec.d() as f64);
    (R::one() - lit::<R>(2.0) * k / (d + R::one()), R::one() - k / d)
}
