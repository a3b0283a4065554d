//! Dense helpers on top of nalgebra.

use crate::error::{Error, Result};
use crate::scalar::{cabs, lit, to_f64, Real};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex;

pub type CMat<R> = DMatrix<Complex<R>>;

/// Largest entry modulus.
pub fn max_abs<R: Real>(m: &CMat<R>) -> R {
    m.iter().fold(R::zero(), |acc, z| acc.max(cabs(*z)))
}

/// `max |M^dag M - 1|`.
pub fn unitarity_defect<R: Real>(m: &CMat<R>) -> R {
    let n = m.ncols();
    let g = m.adjoint() * m;
    max_abs(&(g - CMat::<R>::identity(n, n)))
}

pub fn hermiticity_defect<R: Real>(m: &CMat<R>) -> R {
    max_abs(&(m - m.adjoint()))
}

pub fn check_unitary<R: Real>(m: &CMat<R>, tol: f64) -> Result<()> {
    if !m.is_square() {
        return Err(Error::Shape(format!("{}x{} matrix is not square", m.nrows(), m.ncols())));
    }
    let dev = to_f64(unitarity_defect(m));
    if dev.is_nan() || dev > tol {
        return Err(Error::NotUnitary { deviation: dev });
    }
    Ok(())
}

/// Eigen-decomposition of a Hermitian matrix with eigenvalues sorted ascending.
pub fn eigh<R: Real>(m: &CMat<R>) -> Result<(DVector<R>, CMat<R>)> {
    let n = m.nrows();
    if n == 0 {
        return Ok((DVector::zeros(0), CMat::zeros(0, 0)));
    }
    let eps = lit::<R>(R::EPS);
    let eig = nalgebra::SymmetricEigen::try_new(m.clone(), eps, 0).ok_or(Error::NoConvergence { dim: n })?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap_or(std::cmp::Ordering::Equal));
    let vals = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vecs = CMat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vecs.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok((vals, vecs))
}

/// Closest unitary to a square matrix (unitary polar factor).
pub fn polar_unitary<R: Real>(m: &CMat<R>) -> CMat<R> {
    if m.nrows() == 1 {
        let z = m[(0, 0)];
        let r = cabs(z);
        return if r > R::zero() { CMat::from_element(1, 1, z / Complex::new(r, R::zero())) } else { CMat::identity(1, 1) };
    }
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("svd u");
    let v_t = svd.v_t.expect("svd v_t");
    u * v_t
}

/// Indices of Hermitian-matrix eigenvalue clusters: consecutive sorted values
/// whose gap is below `rel_gap * spectral range` share a cluster.
pub fn cluster_sorted<R: Real>(vals: &DVector<R>, rel_gap: f64) -> (Vec<std::ops::Range<usize>>, Vec<f64>) {
    let n = vals.len();
    if n == 0 {
        return (Vec::new(), Vec::new());
    }
    let range = to_f64(vals[n - 1] - vals[0]);
    let thresh = rel_gap * range;
    let mut clusters = Vec::new();
    let mut gaps = Vec::with_capacity(n.saturating_sub(1));
    let mut start = 0;
    for i in 1..n {
        let gap = to_f64(vals[i] - vals[i - 1]);
        gaps.push(if range > 0.0 { gap / range } else { 0.0 });
        if gap.is_nan() || gap >= thresh {
            clusters.push(start..i);
            start = i;
        }
    }
    clusters.push(start..n);
    (clusters, gaps)
}

/// Kronecker product of dense complex matrices.
pub fn kron<R: Real>(a: &CMat<R>, b: &CMat<R>) -> CMat<R> {
    a.kronecker(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{cplx, creal};

    #[test]
    fn eigh_sorts() {
        let m = CMat::<f64>::from_diagonal(&DVector::from_vec(vec![creal(3.0), creal(-1.0), creal(2.0)]));
        let (vals, vecs) = eigh(&m).unwrap();
        assert_eq!(vals.as_slice(), &[-1.0, 2.0, 3.0]);
        assert!((vecs[(1, 0)].norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn polar_of_scaled_unitary() {
        let u = CMat::<f64>::from_row_slice(2, 2, &[creal(0.0), cplx(0.0, 1.0), creal(1.0), creal(0.0)]);
        let p = polar_unitary(&(u.clone() * creal(2.5)));
        assert!(max_abs(&(p - u)) < 1e-13);
    }

    #[test]
    fn clustering_by_relative_gap() {
        let v = DVector::from_vec(vec![0.0, 1e-12, 1.0, 1.0 + 1e-13, 2.0]);
        let (c, _) = cluster_sorted(&v, 1e-8);
        assert_eq!(c, vec![0..2, 2..4, 4..5]);
    }
}
