//! Numerical structure of the algebra generated by a set of Hermitian
//! operators: commutant, double commutant, and the block decomposition
//! `H = (+)_J C^{n_J} (x) C^{d_J}` with its adapted orthonormal basis.

use crate::error::{Error, Result};
use crate::linalg::{cluster_sorted, eigh, hermiticity_defect, max_abs, polar_unitary, unitarity_defect, CMat};
use crate::scalar::{cabs, creal, lit, to_f64, Real};
use crate::sparse::SparseOp;
use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::ops::Range;

/// Largest Hilbert dimension handled by the dense numeric routes.
pub const DENSE_CAP: usize = 4096;

/// Largest parameter block solved densely when computing a commutant.
pub const PARAM_CAP: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Eigenvalues closer than `cluster_gap * spectral range` are degenerate.
    pub cluster_gap: f64,
    /// Inter-cluster blocks below `edge * scale` count as absent.
    pub edge: f64,
    /// Null-space cut relative to the largest Gram eigenvalue.
    pub rank: f64,
    /// Entrywise tolerance of the `1_n (x) M` structure check.
    pub structure: f64,
    /// Tolerance on `W^dag W = 1`.
    pub unitarity: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { cluster_gap: 1e-8, edge: 1e-8, rank: 1e-10, structure: 1e-9, unitarity: 1e-10 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sector {
    pub label: usize,
    /// Multiplicity: number of copies of the irreducible block.
    pub n: usize,
    /// Dimension of the irreducible block.
    pub d: usize,
    /// First column of this sector in `W`.
    pub offset: usize,
}

impl Sector {
    pub fn columns(&self) -> Range<usize> {
        self.offset..self.offset + self.n * self.d
    }

    /// Columns of one copy `|phi = copy> (x) |psi>`, psi fastest.
    pub fn copy_columns(&self, copy: usize) -> Range<usize> {
        let start = self.offset + copy * self.d;
        start..start + self.d
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    /// Random-element block diagonalization with the given seed.
    Numeric { seed: u64 },
    /// Connected components of product states (all `n_J = 1`).
    ProductComponents,
    /// Single irreducible block on the whole space.
    FullMatrix,
}

/// Sector structure of an algebra together with the adapted basis `W`.
#[derive(Clone, Debug)]
pub struct AlgebraDecomposition<R: Real> {
    pub sectors: Vec<Sector>,
    /// Columns are the adapted basis vectors, sector by sector, copies outer and states inner.
    pub w: CMat<R>,
    pub k: usize,
    pub dim_a: usize,
    pub dim_a_prime: usize,
    pub d_z: usize,
    pub tolerances: Tolerances,
    pub provenance: Provenance,
}

/// Structured summary of a decomposition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecompositionReport {
    pub d: usize,
    pub d_z: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub dim_a: usize,
    pub dim_a_prime: usize,
    pub sectors: Vec<SectorReport>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SectorReport {
    #[serde(rename = "J")]
    pub j: usize,
    pub n: usize,
    pub d: usize,
}

impl<R: Real> AlgebraDecomposition<R> {
    /// Builds the bookkeeping from `(n_J, d_J)` pairs laid out contiguously.
    pub fn from_parts(blocks: &[(usize, usize)], w: CMat<R>, tolerances: Tolerances, provenance: Provenance) -> Result<Self> {
        let mut sectors = Vec::with_capacity(blocks.len());
        let mut offset = 0;
        for (label, &(n, d)) in blocks.iter().enumerate() {
            if n == 0 || d == 0 {
                return Err(Error::Invalid(format!("sector {label} has n = {n}, d = {d}")));
            }
            sectors.push(Sector { label, n, d, offset });
            offset += n * d;
        }
        if offset != w.ncols() || !w.is_square() {
            return Err(Error::Shape(format!("sectors cover {offset} columns, W is {}x{}", w.nrows(), w.ncols())));
        }
        let k = sectors.iter().map(|s| s.n).sum();
        let dim_a = sectors.iter().map(|s| s.d * s.d).sum();
        let dim_a_prime = sectors.iter().map(|s| s.n * s.n).sum();
        let d_z = sectors.len();
        Ok(Self { sectors, w, k, dim_a, dim_a_prime, d_z, tolerances, provenance })
    }

    /// Decomposition whose Krylov subspaces are spanned by product states:
    /// each component is one sector with `n_J = 1`, basis ordered as given.
    pub fn from_product_components(d: usize, components: &[Vec<usize>]) -> Result<Self> {
        let mut w = CMat::zeros(d, d);
        let mut seen = vec![false; d];
        let mut col = 0;
        for comp in components {
            for &i in comp {
                if i >= d || seen[i] {
                    return Err(Error::Invalid("components do not partition the basis".into()));
                }
                seen[i] = true;
                w[(i, col)] = Complex::new(R::one(), R::zero());
                col += 1;
            }
        }
        if col != d {
            return Err(Error::Invalid("components do not cover the basis".into()));
        }
        let blocks: Vec<_> = components.iter().map(|c| (1, c.len())).collect();
        Self::from_parts(&blocks, w, Tolerances::default(), Provenance::ProductComponents)
    }

    /// The full matrix algebra on `C^d`: one sector, `n = 1`, `d_J = d`.
    pub fn full_matrix_algebra(d: usize) -> Self {
        Self::from_parts(&[(1, d)], CMat::identity(d, d), Tolerances::default(), Provenance::FullMatrix)
            .expect("valid single block")
    }

    pub fn d(&self) -> usize {
        self.w.nrows()
    }

    pub fn count_k(&self) -> usize {
        self.sectors.iter().map(|s| s.n).sum()
    }

    pub fn sum_rules_hold(&self) -> bool {
        let s = &self.sectors;
        s.iter().map(|x| x.n * x.d).sum::<usize>() == self.d()
            && s.iter().map(|x| x.d * x.d).sum::<usize>() == self.dim_a
            && s.iter().map(|x| x.n * x.n).sum::<usize>() == self.dim_a_prime
            && s.iter().map(|x| x.n).sum::<usize>() == self.k
            && s.len() == self.d_z
    }

    /// `d x d_J` basis of one copy of sector `j`.
    pub fn copy_basis(&self, j: usize, copy: usize) -> CMat<R> {
        let cols = self.sectors[j].copy_columns(copy);
        self.w.columns(cols.start, cols.len()).into_owned()
    }

    /// `M_J = B_J^dag op B_J` on the first copy of every sector.
    pub fn reduce(&self, op: &SparseOp<R>) -> Vec<CMat<R>> {
        self.sectors
            .iter()
            .map(|s| {
                let b = self.copy_basis(s.label, 0);
                b.adjoint() * op.mul_dense(&b)
            })
            .collect()
    }

    /// Same as [`reduce`](Self::reduce) for a dense operator.
    pub fn reduce_dense(&self, op: &CMat<R>) -> Vec<CMat<R>> {
        self.sectors
            .iter()
            .map(|s| {
                let b = self.copy_basis(s.label, 0);
                b.adjoint() * op * &b
            })
            .collect()
    }

    /// `W ((+)_J 1_{n_J} (x) U_J) W^dag`.
    pub fn embed(&self, blocks: &[CMat<R>]) -> Result<CMat<R>> {
        let adapted = self.embed_adapted(blocks)?;
        Ok(&self.w * adapted * self.w.adjoint())
    }

    /// `(+)_J 1_{n_J} (x) U_J` in the adapted basis.
    pub fn embed_adapted(&self, blocks: &[CMat<R>]) -> Result<CMat<R>> {
        self.check_blocks(blocks)?;
        let d = self.d();
        let mut m = CMat::zeros(d, d);
        for (s, b) in self.sectors.iter().zip(blocks) {
            for copy in 0..s.n {
                let start = s.offset + copy * s.d;
                m.view_mut((start, start), (s.d, s.d)).copy_from(b);
            }
        }
        Ok(m)
    }

    pub fn check_blocks(&self, blocks: &[CMat<R>]) -> Result<()> {
        if blocks.len() != self.sectors.len() {
            return Err(Error::Shape(format!("{} blocks for {} sectors", blocks.len(), self.sectors.len())));
        }
        for (s, b) in self.sectors.iter().zip(blocks) {
            if b.nrows() != s.d || b.ncols() != s.d {
                return Err(Error::Shape(format!(
                    "sector {} expects {}x{}, got {}x{}",
                    s.label,
                    s.d,
                    s.d,
                    b.nrows(),
                    b.ncols()
                )));
            }
        }
        Ok(())
    }

    /// Largest entrywise deviation of an adapted-basis matrix from `(+)_J 1_{n_J} (x) M_J`.
    pub fn structure_violation(&self, adapted: &CMat<R>) -> R {
        let mut worst = R::zero();
        let d = self.d();
        let mut owner = vec![0usize; d];
        for s in &self.sectors {
            for c in s.columns() {
                owner[c] = s.label;
            }
        }
        for c in 0..d {
            for r in 0..d {
                let z = adapted[(r, c)];
                let (sr, sc) = (owner[r], owner[c]);
                if sr != sc {
                    worst = worst.max(cabs(z));
                    continue;
                }
                let s = &self.sectors[sr];
                let (cr, pr) = ((r - s.offset) / s.d, (r - s.offset) % s.d);
                let (cc, pc) = ((c - s.offset) / s.d, (c - s.offset) % s.d);
                if cr != cc {
                    worst = worst.max(cabs(z));
                } else if cr > 0 {
                    let reference = adapted[(s.offset + pr, s.offset + pc)];
                    worst = worst.max(cabs(z - reference));
                }
            }
        }
        worst
    }

    pub fn report(&self) -> DecompositionReport {
        DecompositionReport {
            d: self.d(),
            d_z: self.d_z,
            k: self.k,
            dim_a: self.dim_a,
            dim_a_prime: self.dim_a_prime,
            sectors: self.sectors.iter().map(|s| SectorReport { j: s.label, n: s.n, d: s.d }).collect(),
        }
    }

    /// Coordinate text export of `W`.
    pub fn export_w(&self) -> String {
        let mut out = String::new();
        for c in 0..self.w.ncols() {
            for r in 0..self.w.nrows() {
                let z = self.w[(r, c)];
                if cabs(z) > R::zero() {
                    out.push_str(&format!(
                        "{} {} {} {}\n",
                        r,
                        c,
                        crate::io::fmt_num(to_f64(z.re)),
                        crate::io::fmt_num(to_f64(z.im))
                    ));
                }
            }
        }
        out
    }
}

/// A unitary `(+)_J 1_{n_J} (x) U_J`, stored by its `d_J x d_J` blocks.
#[derive(Clone, Debug)]
pub struct BlockUnitary<R: Real> {
    pub blocks: Vec<CMat<R>>,
}

impl<R: Real> BlockUnitary<R> {
    pub fn identity(dec: &AlgebraDecomposition<R>) -> Self {
        Self { blocks: dec.sectors.iter().map(|s| CMat::identity(s.d, s.d)).collect() }
    }

    pub fn embed(&self, dec: &AlgebraDecomposition<R>) -> Result<CMat<R>> {
        dec.embed(&self.blocks)
    }

    /// Blockwise product `self * other`.
    pub fn compose(&self, other: &BlockUnitary<R>) -> BlockUnitary<R> {
        Self { blocks: self.blocks.iter().zip(&other.blocks).map(|(a, b)| a * b).collect() }
    }

    pub fn max_unitarity_defect(&self) -> R {
        self.blocks.iter().fold(R::zero(), |m, b| m.max(unitarity_defect(b)))
    }
}

/// Result of [`verify_block_structure`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlockCheck {
    pub ok: bool,
    pub max_violation: f64,
}

/// Tests whether `W^dag U W` is `(+)_J 1_{n_J} (x) U_J` with unitary `U_J`, to `1e-8`.
pub fn verify_block_structure<R: Real>(dec: &AlgebraDecomposition<R>, u: &CMat<R>) -> BlockCheck {
    const TOL: f64 = 1e-8;
    if u.nrows() != dec.d() || u.ncols() != dec.d() {
        return BlockCheck { ok: false, max_violation: f64::INFINITY };
    }
    let adapted = dec.w.adjoint() * u * &dec.w;
    let mut worst = to_f64(dec.structure_violation(&adapted));
    for s in &dec.sectors {
        let block = adapted.view((s.offset, s.offset), (s.d, s.d)).into_owned();
        worst = worst.max(to_f64(unitarity_defect(&block)));
    }
    BlockCheck { ok: worst <= TOL, max_violation: worst }
}

#[derive(Clone, Copy, Debug)]
pub struct DecomposeOptions {
    pub seed: u64,
    pub tolerances: Tolerances,
    pub cap: usize,
}

impl Default for DecomposeOptions {
    fn default() -> Self {
        Self { seed: 0, tolerances: Tolerances::default(), cap: DENSE_CAP }
    }
}

impl DecomposeOptions {
    pub fn seeded(seed: u64) -> Self {
        Self { seed, ..Self::default() }
    }
}

fn check_generators<R: Real>(gens: &[SparseOp<R>], cap: usize) -> Result<usize> {
    let first = gens.first().ok_or_else(|| Error::Invalid("empty generator set".into()))?;
    let d = first.dim();
    if d > cap {
        return Err(Error::SizeCap { dim: d, cap });
    }
    for g in gens {
        if g.dim() != d {
            return Err(Error::Shape(format!("generator dimensions {} and {d} differ", g.dim())));
        }
        let scale = to_f64(g.max_abs()).max(1.0);
        let dev = to_f64(g.hermiticity_defect());
        if dev > 1e-12 * scale {
            return Err(Error::NotHermitian { deviation: dev });
        }
    }
    Ok(d)
}

fn gaussian<R: Real>(rng: &mut ChaCha20Rng) -> R {
    let x: f64 = StandardNormal.sample(rng);
    lit(x)
}

/// Random Hermitian element of the algebra: a Gaussian combination of the
/// generators plus the symmetrized product of two more such combinations.
pub fn random_algebra_element<R: Real>(gens: &[SparseOp<R>], rng: &mut ChaCha20Rng) -> CMat<R> {
    let d = gens[0].dim();
    let combo = |rng: &mut ChaCha20Rng| {
        let w: Vec<R> = gens.iter().map(|_| gaussian(rng)).collect();
        SparseOp::linear_combination(d, w.into_iter().zip(gens.iter()))
    };
    let a = combo(rng);
    let b = combo(rng);
    let c = combo(rng).to_dense();
    let bc = b.mul_dense(&c);
    let half = creal(lit::<R>(0.5));
    let mut x = a.to_dense();
    x += (&bc + bc.adjoint()) * half;
    x
}

struct Dsu(Vec<usize>);

impl Dsu {
    fn new(n: usize) -> Self {
        Self((0..n).collect())
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (a, b) = (self.find(a), self.find(b));
        if a != b {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            self.0[hi] = lo;
        }
    }

    /// Groups in order of their smallest member.
    fn groups(&mut self) -> Vec<Vec<usize>> {
        let n = self.0.len();
        let mut map: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
        for x in 0..n {
            let r = self.find(x);
            map.entry(r).or_default().push(x);
        }
        map.into_values().collect()
    }
}

fn block_fro<R: Real>(m: &CMat<R>, rows: &Range<usize>, cols: &Range<usize>) -> R {
    m.view((rows.start, cols.start), (rows.len(), cols.len())).norm()
}

/// Smallest relative gaps that separate clusters, for diagnostics.
fn near_gaps(gaps: &[f64], clusters: &[Range<usize>]) -> Vec<f64> {
    let mut sep: Vec<f64> = clusters.iter().skip(1).map(|c| gaps[c.start - 1]).collect();
    sep.sort_by(|a, b| a.partial_cmp(b).unwrap());
    sep.truncate(5);
    sep
}

/// Decomposes the algebra generated by Hermitian `gens`.
///
/// A random Hermitian element `X` of the algebra acts as `1_{n_J} (x) M_J`,
/// so its eigenspaces have dimension `n_J` and each sector contributes `d_J`
/// of them. Eigenspaces are grouped into sectors by generator connectivity,
/// and the copies are aligned along a maximum-weight spanning tree using the
/// unitary polar factor of the connecting generator block.
pub fn decompose<R: Real>(gens: &[SparseOp<R>], opts: &DecomposeOptions) -> Result<AlgebraDecomposition<R>> {
    let d = check_generators(gens, opts.cap)?;
    let tol = opts.tolerances;
    let mut rng = ChaCha20Rng::seed_from_u64(opts.seed);
    let x = random_algebra_element(gens, &mut rng);
    let (vals, vecs) = eigh(&x)?;
    let (clusters, gaps) = cluster_sorted(&vals, tol.cluster_gap);
    let nc = clusters.len();

    let scale = gens.iter().fold(R::zero(), |m, g| m.max(g.max_abs()));
    let scale = if scale > R::zero() { scale } else { R::one() };
    let vh = vecs.adjoint();
    let transformed: Vec<CMat<R>> = gens.iter().map(|g| &vh * g.mul_dense(&vecs)).collect();

    // Strongest connecting generator per ordered cluster pair.
    let mut best: Vec<Vec<(R, usize)>> = vec![vec![(R::zero(), 0); nc]; nc];
    let mut dsu = Dsu::new(nc);
    let edge_cut = lit::<R>(tol.edge) * scale;
    for (k, t) in transformed.iter().enumerate() {
        for (a, ca) in clusters.iter().enumerate() {
            for (b, cb) in clusters.iter().enumerate().skip(a + 1) {
                let m = lit::<R>((ca.len().min(cb.len()) as f64).sqrt());
                let wgt = block_fro(t, cb, ca) / m;
                if wgt > best[a][b].0 {
                    best[a][b] = (wgt, k);
                    best[b][a] = (wgt, k);
                }
                if wgt > edge_cut {
                    dsu.union(a, b);
                }
            }
        }
    }
    let components = dsu.groups();

    struct Built<R: Real> {
        key: (usize, usize, usize),
        n: usize,
        states: Vec<CMat<R>>,
    }

    let mut built: Vec<Built<R>> = Vec::with_capacity(components.len());
    for comp in &components {
        let n = clusters[comp[0]].len();
        if comp.iter().any(|&c| clusters[c].len() != n) {
            let sizes: Vec<usize> = comp.iter().map(|&c| clusters[c].len()).collect();
            return Err(Error::AmbiguousClusters {
                reason: format!("unequal eigenspace multiplicities {sizes:?} within one sector"),
                gaps: near_gaps(&gaps, &clusters),
            });
        }
        // Prim's algorithm on the cluster graph, aligning each new cluster to its parent.
        let raw = |c: usize| vecs.columns(clusters[c].start, n).into_owned();
        let mut aligned: Vec<Option<CMat<R>>> = vec![None; comp.len()];
        aligned[0] = Some(raw(comp[0]));
        let mut rotation: Vec<Option<CMat<R>>> = vec![None; comp.len()];
        rotation[0] = Some(CMat::identity(n, n));
        for _ in 1..comp.len() {
            let mut pick: Option<(R, usize, usize)> = None;
            for (pi, &p) in comp.iter().enumerate() {
                if rotation[pi].is_none() {
                    continue;
                }
                for (ci, &c) in comp.iter().enumerate() {
                    if rotation[ci].is_some() {
                        continue;
                    }
                    let w = best[p][c].0;
                    if pick.is_none_or(|(bw, _, _)| w > bw) {
                        pick = Some((w, pi, ci));
                    }
                }
            }
            let (_, pi, ci) = pick.expect("connected component");
            let (p, c) = (comp[pi], comp[ci]);
            let k = best[p][c].1;
            let cross = transformed[k].view((clusters[c].start, clusters[p].start), (n, n)).into_owned();
            let rot = polar_unitary(&(cross * rotation[pi].as_ref().unwrap()));
            aligned[ci] = Some(raw(c) * &rot);
            rotation[ci] = Some(rot);
        }
        let states: Vec<CMat<R>> = aligned.into_iter().map(|b| b.unwrap()).collect();
        // Sector ordering key: first product state carrying weight in the sector.
        let first = (0..d)
            .find(|&i| {
                let w: R = states.iter().map(|b| b.row(i).norm_squared()).fold(R::zero(), |a, b| a + b);
                w > lit(1e-6)
            })
            .unwrap_or(d);
        built.push(Built { key: (first, comp.len(), n), n, states });
    }
    built.sort_by_key(|b| b.key);

    let mut w = CMat::zeros(d, d);
    let mut col = 0;
    let mut blocks = Vec::with_capacity(built.len());
    for b in &built {
        let dj = b.states.len();
        for copy in 0..b.n {
            for state in &b.states {
                w.set_column(col, &state.column(copy));
                col += 1;
            }
        }
        blocks.push((b.n, dj));
    }
    debug_assert_eq!(col, d);

    let dec = AlgebraDecomposition::from_parts(&blocks, w, tol, Provenance::Numeric { seed: opts.seed })?;
    let w_dev = to_f64(unitarity_defect(&dec.w));
    if w_dev > tol.unitarity {
        return Err(Error::Verification { violation: w_dev });
    }
    let wh = dec.w.adjoint();
    for g in gens {
        let adapted = &wh * g.mul_dense(&dec.w);
        let v = to_f64(dec.structure_violation(&adapted) / scale);
        if v > tol.structure {
            return Err(Error::Verification { violation: v });
        }
    }
    Ok(dec)
}

/// `K = sum_J n_J`.
pub fn count_k<R: Real>(dec: &AlgebraDecomposition<R>) -> usize {
    dec.count_k()
}

/// Orthonormal (Hilbert-Schmidt) operator basis `{V E_i V^dag}` with each
/// `E_i` sparse in the frame `V`.
#[derive(Clone, Debug)]
pub struct OperatorSpace<R: Real> {
    pub frame: CMat<R>,
    pub elements: Vec<Vec<(usize, usize, Complex<R>)>>,
}

impl<R: Real> OperatorSpace<R> {
    pub fn dim(&self) -> usize {
        self.elements.len()
    }

    pub fn d(&self) -> usize {
        self.frame.nrows()
    }

    fn in_frame(&self, i: usize) -> CMat<R> {
        let d = self.d();
        let mut m = CMat::zeros(d, d);
        for &(r, c, v) in &self.elements[i] {
            m[(r, c)] += v;
        }
        m
    }

    pub fn element(&self, i: usize) -> CMat<R> {
        &self.frame * self.in_frame(i) * self.frame.adjoint()
    }

    /// Frobenius norm of the part of `op` orthogonal to the space.
    pub fn projection_residual(&self, op: &CMat<R>) -> R {
        let mut t = self.frame.adjoint() * op * &self.frame;
        let coeffs: Vec<Complex<R>> = self
            .elements
            .iter()
            .map(|e| e.iter().fold(Complex::default(), |acc, &(r, c, v)| acc + v.conj() * t[(r, c)]))
            .collect();
        for (e, coef) in self.elements.iter().zip(coeffs) {
            for &(r, c, v) in e {
                t[(r, c)] -= coef * v;
            }
        }
        t.norm()
    }

    /// Hermitian part of a complex-Gaussian combination of the basis.
    pub fn random_hermitian(&self, rng: &mut ChaCha20Rng) -> CMat<R> {
        let d = self.d();
        let mut z = CMat::zeros(d, d);
        for e in &self.elements {
            let c = Complex::new(gaussian::<R>(rng), gaussian::<R>(rng));
            for &(r, col, v) in e {
                z[(r, col)] += c * v;
            }
        }
        let half = creal(lit::<R>(0.5));
        let x = (&z + z.adjoint()) * half;
        &self.frame * x * self.frame.adjoint()
    }
}

#[derive(Clone, Copy, Debug)]
pub struct CommutantOptions {
    pub seed: u64,
    pub tolerances: Tolerances,
    pub cap: usize,
    pub param_cap: usize,
}

impl Default for CommutantOptions {
    fn default() -> Self {
        Self { seed: 0, tolerances: Tolerances::default(), cap: DENSE_CAP, param_cap: PARAM_CAP }
    }
}

/// Joint null space of `Y -> [c, Y]` over Hermitian `constraints`, restricted
/// to operators commuting with the Hermitian `x` (which must itself commute
/// with the sought space).
fn commutant_core<R: Real>(x: &CMat<R>, constraints: &[CMat<R>], opts: &CommutantOptions) -> Result<OperatorSpace<R>> {
    let tol = opts.tolerances;
    let (vals, frame) = eigh(x)?;
    let (clusters, _) = cluster_sorted(&vals, tol.cluster_gap);
    let fh = frame.adjoint();
    let tc: Vec<CMat<R>> = constraints.iter().map(|c| &fh * c * &frame).collect();
    let scale = tc.iter().fold(R::zero(), |m, c| m.max(max_abs(c)));
    let edge_cut = lit::<R>(tol.edge) * if scale > R::zero() { scale } else { R::one() };

    let nc = clusters.len();
    let mut dsu = Dsu::new(nc);
    for t in &tc {
        for a in 0..nc {
            for b in a + 1..nc {
                if block_fro(t, &clusters[b], &clusters[a]) > edge_cut {
                    dsu.union(a, b);
                }
            }
        }
    }

    let mut elements = Vec::new();
    for comp in dsu.groups() {
        let idx: Vec<usize> = comp.iter().flat_map(|&c| clusters[c].clone()).collect();
        let m = idx.len();
        let restricted: Vec<CMat<R>> =
            tc.iter().map(|t| CMat::from_fn(m, m, |i, j| t[(idx[i], idx[j])])).collect();
        let scalar = restricted.iter().all(|h| {
            let mean = h.trace() / creal(lit::<R>(m as f64));
            let dev = h - CMat::identity(m, m) * mean;
            max_abs(&dev) <= edge_cut
        });
        // Block-diagonal parameters (p, q) in local indices.
        let mut params = Vec::new();
        let mut start = 0;
        for &c in &comp {
            let len = clusters[c].len();
            for p in start..start + len {
                for q in start..start + len {
                    params.push((p, q));
                }
            }
            start += len;
        }
        if scalar {
            for &(p, q) in &params {
                elements.push(vec![(idx[p], idx[q], creal(R::one()))]);
            }
            continue;
        }
        if params.len() > opts.param_cap {
            return Err(Error::SizeCap { dim: params.len(), cap: opts.param_cap });
        }
        let np = params.len();
        let two = creal(lit::<R>(2.0));
        let squares: Vec<CMat<R>> = restricted.iter().map(|h| h * h).collect();
        let mut gram = CMat::<R>::zeros(np, np);
        for (h, h2) in restricted.iter().zip(&squares) {
            for (a, &(p, q)) in params.iter().enumerate() {
                for (b, &(r, s)) in params.iter().enumerate() {
                    let mut g = -(two * h[(p, r)] * h[(s, q)]);
                    if q == s {
                        g += h2[(p, r)];
                    }
                    if p == r {
                        g += h2[(s, q)];
                    }
                    gram[(a, b)] += g;
                }
            }
        }
        let (gv, gvec) = eigh(&gram)?;
        let top = gv[np - 1].max(R::zero());
        let cut = lit::<R>(tol.rank) * top;
        for i in 0..np {
            if gv[i] > cut {
                break;
            }
            let entries: Vec<_> = params
                .iter()
                .enumerate()
                .filter_map(|(a, &(p, q))| {
                    let v = gvec[(a, i)];
                    (cabs(v) > lit(1e-300)).then_some((idx[p], idx[q], v))
                })
                .collect();
            elements.push(entries);
        }
    }
    Ok(OperatorSpace { frame, elements })
}

/// Orthonormal basis of the commutant `A'` of the generated algebra.
pub fn commutant_basis<R: Real>(gens: &[SparseOp<R>], opts: &CommutantOptions) -> Result<OperatorSpace<R>> {
    check_generators(gens, opts.cap)?;
    let mut rng = ChaCha20Rng::seed_from_u64(opts.seed);
    let x = random_algebra_element(gens, &mut rng);
    let dense: Vec<CMat<R>> = gens.iter().map(|g| g.to_dense()).collect();
    commutant_core(&x, &dense, opts)
}

/// Commutant of a `*`-closed operator space, using three random Hermitian
/// elements (generic elements generate the space as an algebra).
pub fn commutant_of_space<R: Real>(space: &OperatorSpace<R>, opts: &CommutantOptions) -> Result<OperatorSpace<R>> {
    if space.d() > opts.cap {
        return Err(Error::SizeCap { dim: space.d(), cap: opts.cap });
    }
    let mut rng = ChaCha20Rng::seed_from_u64(opts.seed ^ 0x9e37_79b9_7f4a_7c15);
    let x = space.random_hermitian(&mut rng);
    let others = vec![space.random_hermitian(&mut rng), space.random_hermitian(&mut rng)];
    commutant_core(&x, &others, opts)
}

/// `dim A`, computed as the dimension of the double commutant.
pub fn algebra_closure_dim<R: Real>(gens: &[SparseOp<R>], opts: &CommutantOptions) -> Result<usize> {
    let comm = commutant_basis(gens, opts)?;
    Ok(commutant_of_space(&comm, opts)?.dim())
}

/// Max deviation of a dense matrix from Hermiticity, relative to its size.
pub fn is_hermitian<R: Real>(m: &CMat<R>, tol: f64) -> bool {
    to_f64(hermiticity_defect(m)) <= tol * to_f64(max_abs(m)).max(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{build, krylov_graph_decompose, sample_couplings, ModelId};
    use crate::scalar::cplx;

    fn pauli_z() -> SparseOp<f64> {
        SparseOp::from_triplets(2, [(0, 0, creal(1.0)), (1, 1, creal(-1.0))])
    }

    fn pauli_x() -> SparseOp<f64> {
        SparseOp::from_triplets(2, [(0, 1, creal(1.0)), (1, 0, creal(1.0))])
    }

    fn model_gens(model: ModelId, l: usize) -> Vec<SparseOp<f64>> {
        build::<f64>(&sample_couplings(model, l, 0).unwrap()).unwrap().generator_ops()
    }

    #[test]
    fn commutant_dimensions_small() {
        let o = CommutantOptions::default();
        assert_eq!(commutant_basis(&[pauli_z()], &o).unwrap().dim(), 2);
        assert_eq!(commutant_basis(&[pauli_x(), pauli_z()], &o).unwrap().dim(), 1);
        assert_eq!(commutant_basis(&model_gens(ModelId::Xxz, 3), &o).unwrap().dim(), 4);
    }

    #[test]
    fn closure_dimensions_small() {
        let o = CommutantOptions::default();
        assert_eq!(algebra_closure_dim(&[pauli_z()], &o).unwrap(), 2);
        assert_eq!(algebra_closure_dim(&model_gens(ModelId::Xxz, 2), &o).unwrap(), 6);
        assert_eq!(algebra_closure_dim(&model_gens(ModelId::Tl, 2), &o).unwrap(), 2);
    }

    #[test]
    fn pauli_z_decomposition() {
        let dec = decompose(&[pauli_z()], &DecomposeOptions::default()).unwrap();
        assert_eq!(dec.k, 2);
        assert_eq!(dec.sectors.iter().map(|s| (s.n, s.d)).collect::<Vec<_>>(), [(1, 1), (1, 1)]);
        assert!(dec.sum_rules_hold());
    }

    #[test]
    fn irreducible_generators_give_one_sector() {
        let dec = decompose(&[pauli_x(), pauli_z()], &DecomposeOptions::default()).unwrap();
        assert_eq!(count_k(&dec), 1);
        assert_eq!(dec.sectors[0].d, 2);
    }

    #[test]
    fn xxz_l4_sectors() {
        let dec = decompose(&model_gens(ModelId::Xxz, 4), &DecomposeOptions::seeded(1)).unwrap();
        assert_eq!(dec.k, 5);
        let mut dims: Vec<usize> = dec.sectors.iter().map(|s| s.d).collect();
        dims.sort();
        assert_eq!(dims, [1, 1, 4, 4, 6]);
        assert!(dec.sectors.iter().all(|s| s.n == 1));
    }

    #[test]
    fn tl_l4_multiplicities() {
        let dec = decompose(&model_gens(ModelId::Tl, 4), &DecomposeOptions::seeded(3)).unwrap();
        let mut nd: Vec<(usize, usize)> = dec.sectors.iter().map(|s| (s.n, s.d)).collect();
        nd.sort();
        assert_eq!(nd, [(1, 2), (8, 3), (55, 1)]);
        assert_eq!(dec.k, 64);
    }

    #[test]
    fn decomposition_is_deterministic() {
        let g = model_gens(ModelId::Tjz, 2);
        let a = decompose(&g, &DecomposeOptions::seeded(5)).unwrap();
        let b = decompose(&g, &DecomposeOptions::seeded(5)).unwrap();
        assert_eq!(a.w, b.w);
    }

    #[test]
    fn product_components_decomposition() {
        let fam = build::<f64>(&sample_couplings(ModelId::Xxz, 2, 0).unwrap()).unwrap();
        let graph = krylov_graph_decompose(&fam);
        let dec = AlgebraDecomposition::<f64>::from_product_components(4, &graph.components).unwrap();
        assert_eq!(dec.k, 3);
        assert_eq!(dec.dim_a, 6);
        let h = fam.hamiltonian().to_dense();
        let adapted = dec.w.adjoint() * h * &dec.w;
        assert!(dec.structure_violation(&adapted) < 1e-15);
    }

    #[test]
    fn structure_violation_detects_mixing() {
        let dec = AlgebraDecomposition::<f64>::from_parts(
            &[(2, 1)],
            CMat::identity(2, 2),
            Tolerances::default(),
            Provenance::FullMatrix,
        )
        .unwrap();
        let mut m = CMat::identity(2, 2);
        assert_eq!(dec.structure_violation(&m), 0.0);
        m[(1, 1)] = cplx(0.0, 1.0);
        assert!(dec.structure_violation(&m) > 1.0);
    }

    #[test]
    fn rejects_oversized_and_non_hermitian() {
        let o = DecomposeOptions { cap: 1, ..Default::default() };
        assert!(matches!(decompose(&[pauli_z()], &o), Err(Error::SizeCap { .. })));
        let bad = SparseOp::from_triplets(2, [(0, 1, creal(1.0))]);
        assert!(matches!(decompose(&[bad], &DecomposeOptions::default()), Err(Error::NotHermitian { .. })));
        assert!(decompose::<f64>(&[], &DecomposeOptions::default()).is_err());
    }
}
