//! Row-compressed complex operators for the local Hamiltonian terms.

use crate::scalar::{cabs, creal, to_f64, Real};
use nalgebra::DMatrix;
use num_complex::Complex;
use std::collections::BTreeMap;

#[derive(Clone, Debug, PartialEq)]
pub struct SparseOp<R: Real> {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<Complex<R>>,
}

impl<R: Real> SparseOp<R> {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, row_ptr: vec![0; dim + 1], cols: Vec::new(), vals: Vec::new() }
    }

    /// Builds from (row, col, value) triplets; duplicates are summed and exact zeros dropped.
    pub fn from_triplets(dim: usize, triplets: impl IntoIterator<Item = (usize, usize, Complex<R>)>) -> Self {
        let mut rows: Vec<BTreeMap<usize, Complex<R>>> = vec![BTreeMap::new(); dim];
        for (r, c, v) in triplets {
            assert!(r < dim && c < dim, "triplet ({r}, {c}) out of range for dim {dim}");
            *rows[r].entry(c).or_default() += v;
        }
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for row in rows {
            for (c, v) in row {
                if v.re != R::zero() || v.im != R::zero() {
                    cols.push(c);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        Self { dim, row_ptr, cols, vals }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, Complex<R>)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.cols[span.clone()].iter().copied().zip(self.vals[span].iter().copied())
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, Complex<R>)> + '_ {
        (0..self.dim).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    pub fn get(&self, r: usize, c: usize) -> Complex<R> {
        self.row(r).find(|&(cc, _)| cc == c).map(|(_, v)| v).unwrap_or_default()
    }

    pub fn to_dense(&self) -> DMatrix<Complex<R>> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for (r, c, v) in self.triplets() {
            m[(r, c)] = v;
        }
        m
    }

    pub fn scaled(&self, s: R) -> Self {
        let mut out = self.clone();
        for v in &mut out.vals {
            *v *= creal(s);
        }
        out
    }

    /// `sum_k w_k A_k` over operators of a common dimension.
    pub fn linear_combination<'a>(dim: usize, terms: impl IntoIterator<Item = (R, &'a SparseOp<R>)>) -> Self
    where
        R: 'a,
    {
        let trip: Vec<_> = terms
            .into_iter()
            .flat_map(|(w, op)| {
                assert_eq!(op.dim, dim);
                op.triplets().map(move |(r, c, v)| (r, c, v * creal(w)))
            })
            .collect();
        Self::from_triplets(dim, trip)
    }

    pub fn adjoint(&self) -> Self {
        Self::from_triplets(self.dim, self.triplets().map(|(r, c, v)| (c, r, v.conj())))
    }

    /// Sparse-dense product `self * m`.
    pub fn mul_dense(&self, m: &DMatrix<Complex<R>>) -> DMatrix<Complex<R>> {
        assert_eq!(m.nrows(), self.dim);
        let mut out = DMatrix::zeros(self.dim, m.ncols());
        for (r, c, v) in self.triplets() {
            for j in 0..m.ncols() {
                out[(r, j)] += v * m[(c, j)];
            }
        }
        out
    }

    /// Sparse-sparse product.
    pub fn mul_sparse(&self, other: &SparseOp<R>) -> Self {
        assert_eq!(self.dim, other.dim);
        let trip: Vec<_> = (0..self.dim)
            .flat_map(|r| {
                self.row(r)
                    .flat_map(move |(k, a)| other.row(k).map(move |(c, b)| (r, c, a * b)))
            })
            .collect();
        Self::from_triplets(self.dim, trip)
    }

    pub fn mul_vec(&self, v: &[Complex<R>]) -> Vec<Complex<R>> {
        (0..self.dim)
            .map(|r| self.row(r).fold(Complex::default(), |acc, (c, a)| acc + a * v[c]))
            .collect()
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> R {
        self.vals.iter().fold(R::zero(), |m, v| m.max(cabs(*v)))
    }

    /// Max-entry deviation from Hermiticity.
    pub fn hermiticity_defect(&self) -> R {
        let mut worst = R::zero();
        for (r, c, v) in self.triplets() {
            worst = worst.max(cabs(v - self.get(c, r).conj()));
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        to_f64(self.hermiticity_defect()) <= tol
    }

    /// True if every off-diagonal entry vanishes.
    pub fn is_diagonal(&self) -> bool {
        self.triplets().all(|(r, c, _)| r == c)
    }

    pub fn commutator(&self, other: &SparseOp<R>) -> Self {
        let ab = self.mul_sparse(other);
        let ba = other.mul_sparse(self);
        Self::linear_combination(self.dim, [(R::one(), &ab), (-R::one(), &ba)])
    }
}
