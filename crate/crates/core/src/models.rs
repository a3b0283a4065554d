//! The three spin-chain families: XXZ (spin-1/2), Temperley-Lieb (spin-1) and
//! the constrained-fermion t-Jz chain, all with open boundaries.
//!
//! Product basis convention: site 0 is the most significant digit of the state
//! index in base `local_dim`.
//!
//! * XXZ local states: `0 = up (sigma^z = +1)`, `1 = down (sigma^z = -1)`.
//! * TL local states: `0, 1, 2`.
//! * t-Jz local states: `0 = empty`, `1 = up`, `2 = down`.

use crate::error::{Error, Result};
use crate::scalar::{creal, lit, Real};
use crate::sparse::SparseOp;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelId {
    Xxz,
    Tl,
    Tjz,
}

impl ModelId {
    pub const ALL: [ModelId; 3] = [ModelId::Xxz, ModelId::Tl, ModelId::Tjz];

    pub fn local_dim(self) -> usize {
        match self {
            ModelId::Xxz => 2,
            ModelId::Tl | ModelId::Tjz => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ModelId::Xxz => "xxz",
            ModelId::Tl => "tl",
            ModelId::Tjz => "tjz",
        }
    }

    fn tag(self) -> u64 {
        match self {
            ModelId::Xxz => 1,
            ModelId::Tl => 2,
            ModelId::Tjz => 3,
        }
    }

    /// Coupling kinds in generator order.
    pub fn coupling_kinds(self) -> &'static [CouplingKind] {
        use CouplingKind::*;
        match self {
            ModelId::Xxz => &[Perp, Zz, Field],
            ModelId::Tl => &[Bond],
            ModelId::Tjz => &[Hop, Zz, Field, Quad],
        }
    }

    /// Rejects sizes for which the model's sector formulas do not hold.
    pub fn validate_size(self, l: usize) -> Result<()> {
        match self {
            ModelId::Tl if l < 2 || l % 2 == 1 => {
                Err(Error::UnsupportedSize { model: "tl", l, requirement: "even L >= 2" })
            }
            _ if l == 0 => Err(Error::UnsupportedSize { model: self.name(), l, requirement: "L >= 1" }),
            _ => Ok(()),
        }
    }

    pub fn dim(self, l: usize) -> usize {
        self.local_dim().pow(l as u32)
    }
}

impl fmt::Display for ModelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "xxz" => Ok(ModelId::Xxz),
            "tl" | "temperley-lieb" => Ok(ModelId::Tl),
            "tjz" | "t-jz" => Ok(ModelId::Tjz),
            other => Err(Error::Invalid(format!("unknown model '{other}' (expected xxz, tl or tjz)"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CouplingKind {
    /// XXZ flip-flop amplitude J^perp on a bond.
    Perp,
    /// sigma^z sigma^z (XXZ) or S^z S^z (t-Jz) on a bond.
    Zz,
    /// On-site field h_j.
    Field,
    /// TL projector weight J_j on a bond.
    Bond,
    /// t-Jz hopping t_{j,j+1}.
    Hop,
    /// t-Jz on-site (S^z)^2 weight g_j.
    Quad,
}

impl CouplingKind {
    fn is_bond(self) -> bool {
        !matches!(self, CouplingKind::Field | CouplingKind::Quad)
    }

    pub fn count(self, l: usize) -> usize {
        if self.is_bond() {
            l.saturating_sub(1)
        } else {
            l
        }
    }

    fn prefix(self) -> &'static str {
        match self {
            CouplingKind::Perp => "Jperp",
            CouplingKind::Zz => "Jz",
            CouplingKind::Field => "h",
            CouplingKind::Bond => "J",
            CouplingKind::Hop => "t",
            CouplingKind::Quad => "g",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Coupling {
    pub label: String,
    pub kind: CouplingKind,
    /// Zero-based first site of the term.
    pub site: usize,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CouplingSet {
    pub model: ModelId,
    pub l: usize,
    pub seed: u64,
    pub values: Vec<Coupling>,
}

impl CouplingSet {
    pub fn of_kind(&self, kind: CouplingKind) -> Vec<f64> {
        self.values.iter().filter(|c| c.kind == kind).map(|c| c.value).collect()
    }

    pub fn get(&self, label: &str) -> Option<f64> {
        self.values.iter().find(|c| c.label == label).map(|c| c.value)
    }

    /// Same labels, all values replaced.
    pub fn with_values(&self, values: &[f64]) -> Result<CouplingSet> {
        if values.len() != self.values.len() {
            return Err(Error::Shape(format!("{} couplings expected, got {}", self.values.len(), values.len())));
        }
        let mut out = self.clone();
        for (c, &v) in out.values.iter_mut().zip(values) {
            c.value = v;
        }
        Ok(out)
    }
}

/// Draws the couplings of `model` on `l` sites. Each coupling kind has its own
/// random stream, so the values at size `l` are a prefix of those at `l + 1`.
pub fn sample_couplings(model: ModelId, l: usize, seed: u64) -> Result<CouplingSet> {
    model.validate_size(l)?;
    let mut values = Vec::new();
    for (k, &kind) in model.coupling_kinds().iter().enumerate() {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(model.tag() * 16 + k as u64);
        for site in 0..kind.count(l) {
            let value: f64 = rng.random();
            values.push(Coupling { label: format!("{}_{}", kind.prefix(), site + 1), kind, site, value });
        }
    }
    Ok(CouplingSet { model, l, seed, values })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Open,
}

#[derive(Clone, Debug)]
pub struct Generator<R: Real> {
    pub label: String,
    pub op: SparseOp<R>,
}

/// Generators `h_j` and couplings `J_j` of `H = sum_j J_j h_j`.
#[derive(Clone, Debug)]
pub struct HamiltonianFamily<R: Real> {
    pub model: ModelId,
    pub l: usize,
    pub local_dim: usize,
    pub d: usize,
    pub generators: Vec<Generator<R>>,
    pub couplings: CouplingSet,
    pub boundary: Boundary,
}

impl<R: Real> HamiltonianFamily<R> {
    pub fn hamiltonian(&self) -> SparseOp<R> {
        let w: Vec<f64> = self.couplings.values.iter().map(|c| c.value).collect();
        self.hamiltonian_with(&w)
    }

    /// `sum_j w_j h_j` for arbitrary weights.
    pub fn hamiltonian_with(&self, weights: &[f64]) -> SparseOp<R> {
        assert_eq!(weights.len(), self.generators.len());
        SparseOp::linear_combination(
            self.d,
            weights.iter().zip(&self.generators).map(|(&w, g)| (lit::<R>(w), &g.op)),
        )
    }

    pub fn generator_ops(&self) -> Vec<SparseOp<R>> {
        self.generators.iter().map(|g| g.op.clone()).collect()
    }

    pub fn spec(&self) -> ModelSpec {
        ModelSpec { model: self.model, l: self.l, seed: self.couplings.seed, boundary: self.boundary }
    }
}

/// Small serializable description sufficient to rebuild a family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub model: ModelId,
    #[serde(rename = "L")]
    pub l: usize,
    pub seed: u64,
    pub boundary: Boundary,
}

impl ModelSpec {
    pub fn build<R: Real>(&self) -> Result<HamiltonianFamily<R>> {
        build(&sample_couplings(self.model, self.l, self.seed)?)
    }
}

/// Base-`local_dim` digits of a product-state index, site 0 first.
pub fn digits(mut index: usize, l: usize, local_dim: usize) -> Vec<u8> {
    let mut out = vec![0u8; l];
    for slot in out.iter_mut().rev() {
        *slot = (index % local_dim) as u8;
        index /= local_dim;
    }
    out
}

pub fn index_of(digits: &[u8], local_dim: usize) -> usize {
    digits.iter().fold(0, |acc, &x| acc * local_dim + x as usize)
}

/// Operator from a local action: `action(digits)` lists `(new_digits, amplitude)`.
fn product_operator<R: Real>(
    l: usize,
    local_dim: usize,
    action: impl Fn(&[u8]) -> Vec<(Vec<u8>, f64)>,
) -> SparseOp<R> {
    let d = local_dim.pow(l as u32);
    let mut trip = Vec::new();
    for col in 0..d {
        let ds = digits(col, l, local_dim);
        for (out, amp) in action(&ds) {
            trip.push((index_of(&out, local_dim), col, creal(lit::<R>(amp))));
        }
    }
    SparseOp::from_triplets(d, trip)
}

pub fn build<R: Real>(couplings: &CouplingSet) -> Result<HamiltonianFamily<R>> {
    match couplings.model {
        ModelId::Xxz => build_xxz(couplings),
        ModelId::Tl => build_tl(couplings),
        ModelId::Tjz => build_tjz(couplings),
    }
}

fn check_set(couplings: &CouplingSet, model: ModelId) -> Result<()> {
    if couplings.model != model {
        return Err(Error::Invalid(format!("expected {model} couplings, got {}", couplings.model)));
    }
    model.validate_size(couplings.l)?;
    let expected: usize = model.coupling_kinds().iter().map(|k| k.count(couplings.l)).sum();
    if couplings.values.len() != expected {
        return Err(Error::Shape(format!("{model} on L = {} needs {expected} couplings", couplings.l)));
    }
    Ok(())
}

fn family<R: Real>(model: ModelId, couplings: &CouplingSet, ops: Vec<SparseOp<R>>) -> HamiltonianFamily<R> {
    let generators = couplings
        .values
        .iter()
        .zip(ops)
        .map(|(c, op)| Generator { label: c.label.clone(), op })
        .collect();
    HamiltonianFamily {
        model,
        l: couplings.l,
        local_dim: model.local_dim(),
        d: model.dim(couplings.l),
        generators,
        couplings: couplings.clone(),
        boundary: Boundary::Open,
    }
}

fn spin_half_z(x: u8) -> f64 {
    if x == 0 {
        1.0
    } else {
        -1.0
    }
}

fn tjz_sz(x: u8) -> f64 {
    match x {
        1 => 1.0,
        2 => -1.0,
        _ => 0.0,
    }
}

/// Generators `sigma^x sigma^x + sigma^y sigma^y`, `sigma^z sigma^z` per bond and `sigma^z` per site.
pub fn build_xxz<R: Real>(couplings: &CouplingSet) -> Result<HamiltonianFamily<R>> {
    check_set(couplings, ModelId::Xxz)?;
    let l = couplings.l;
    let ops = couplings
        .values
        .iter()
        .map(|c| {
            let j = c.site;
            match c.kind {
                CouplingKind::Perp => product_operator(l, 2, |s| {
                    if s[j] != s[j + 1] {
                        let mut t = s.to_vec();
                        t.swap(j, j + 1);
                        vec![(t, 2.0)]
                    } else {
                        vec![]
                    }
                }),
                CouplingKind::Zz => product_operator(l, 2, |s| vec![(s.to_vec(), spin_half_z(s[j]) * spin_half_z(s[j + 1]))]),
                CouplingKind::Field => product_operator(l, 2, |s| vec![(s.to_vec(), spin_half_z(s[j]))]),
                _ => unreachable!("not an xxz coupling"),
            }
        })
        .collect();
    Ok(family(ModelId::Xxz, couplings, ops))
}

/// Generators `e_{j,j+1} = 3 |s><s|` with `|s> = (|00> + |11> + |22>) / sqrt(3)`.
pub fn build_tl<R: Real>(couplings: &CouplingSet) -> Result<HamiltonianFamily<R>> {
    check_set(couplings, ModelId::Tl)?;
    let l = couplings.l;
    let ops = couplings
        .values
        .iter()
        .map(|c| {
            let j = c.site;
            product_operator(l, 3, |s| {
                if s[j] != s[j + 1] {
                    return vec![];
                }
                (0..3u8)
                    .map(|b| {
                        let mut t = s.to_vec();
                        t[j] = b;
                        t[j + 1] = b;
                        (t, 1.0)
                    })
                    .collect()
            })
        })
        .collect();
    Ok(family(ModelId::Tl, couplings, ops))
}

/// Constrained-fermion chain in the no-double-occupancy basis. The hopping
/// generator moves a particle onto an adjacent empty site with amplitude -1.
pub fn build_tjz<R: Real>(couplings: &CouplingSet) -> Result<HamiltonianFamily<R>> {
    check_set(couplings, ModelId::Tjz)?;
    let l = couplings.l;
    let ops = couplings
        .values
        .iter()
        .map(|c| {
            let j = c.site;
            match c.kind {
                CouplingKind::Hop => product_operator(l, 3, |s| {
                    if (s[j] == 0) != (s[j + 1] == 0) {
                        let mut t = s.to_vec();
                        t.swap(j, j + 1);
                        vec![(t, -1.0)]
                    } else {
                        vec![]
                    }
                }),
                CouplingKind::Zz => product_operator(l, 3, |s| vec![(s.to_vec(), tjz_sz(s[j]) * tjz_sz(s[j + 1]))]),
                CouplingKind::Field => product_operator(l, 3, |s| vec![(s.to_vec(), tjz_sz(s[j]))]),
                CouplingKind::Quad => product_operator(l, 3, |s| vec![(s.to_vec(), tjz_sz(s[j]).powi(2))]),
                _ => unreachable!("not a t-jz coupling"),
            }
        })
        .collect();
    Ok(family(ModelId::Tjz, couplings, ops))
}

/// Spin pattern of a t-Jz product state: occupied sites read left to right.
pub fn spin_pattern(digits: &[u8]) -> Vec<u8> {
    digits.iter().copied().filter(|&x| x != 0).collect()
}

/// `q` with `q + 1/q = 3`, the Temperley-Lieb deformation parameter of the spin-1 chain.
pub fn tl_q<R: Real>() -> R {
    (lit::<R>(3.0) + lit::<R>(5.0).sqrt()) / lit::<R>(2.0)
}

/// `[n]_q = (q^n - q^-n) / (q - q^-1)`; the limit `n` at `q = 1`.
pub fn q_deformed_integer<R: Real>(n: i32, q: R) -> Result<R> {
    if q <= R::zero() {
        return Err(Error::Invalid("q must be positive".into()));
    }
    if q == R::one() {
        return Ok(lit(n as f64));
    }
    Ok((q.powi(n) - q.powi(-n)) / (q - q.recip()))
}

/// Closed-form Krylov count `q^-L (q^(L+2) - 1)^2 / (q^2 - 1)^2` of the TL chain.
pub fn tl_k_closed_form<R: Real>(l: usize) -> R {
    let q = tl_q::<R>();
    let l = l as i32;
    let num = q.powi(l + 2) - R::one();
    let den = q.powi(2) - R::one();
    q.powi(-l) * num * num / (den * den)
}

fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, i| acc * (n - i) as u64 / (i + 1) as u64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalyticSector {
    pub label: String,
    pub n: u64,
    pub d: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalyticSectorTable {
    pub model: ModelId,
    pub l: usize,
    pub sectors: Vec<AnalyticSector>,
    pub k: u64,
}

impl AnalyticSectorTable {
    pub fn dim(&self) -> u64 {
        self.sectors.iter().map(|s| s.n * s.d).sum()
    }

    pub fn dim_a(&self) -> u64 {
        self.sectors.iter().map(|s| s.d * s.d).sum()
    }

    pub fn dim_a_prime(&self) -> u64 {
        self.sectors.iter().map(|s| s.n * s.n).sum()
    }
}

pub const MAX_ANALYTIC_L: usize = 20;

/// Exact sector data of each model.
///
/// XXZ sectors are labelled by the number of down spins. TL multiplicities
/// `[2J+1]_q` are integers for `q + 1/q = 3` and are stored exactly. t-Jz
/// sectors are spin patterns, written with `u`/`d` (empty pattern is `-`).
pub fn analytic_sectors(model: ModelId, l: usize) -> Result<AnalyticSectorTable> {
    model.validate_size(l)?;
    if l > MAX_ANALYTIC_L {
        return Err(Error::UnsupportedSize { model: model.name(), l, requirement: "L <= 20" });
    }
    let sectors: Vec<AnalyticSector> = match model {
        ModelId::Xxz => (0..=l)
            .map(|j| AnalyticSector { label: format!("J={j}"), n: 1, d: binomial(l, j) })
            .collect(),
        ModelId::Tl => {
            let q = tl_q::<f64>();
            (0..=l / 2)
                .map(|j| {
                    let nq = q_deformed_integer(2 * j as i32 + 1, q).expect("q > 0");
                    let d = binomial(l, l / 2 + j) - binomial(l, l / 2 + j + 1);
                    AnalyticSector { label: format!("J={j}"), n: nq.round() as u64, d }
                })
                .collect()
        }
        ModelId::Tjz => {
            let mut out = Vec::new();
            for len in 0..=l {
                for bits in 0..(1u64 << len) {
                    let label: String = if len == 0 {
                        "-".into()
                    } else {
                        (0..len).map(|i| if bits >> (len - 1 - i) & 1 == 0 { 'u' } else { 'd' }).collect()
                    };
                    out.push(AnalyticSector { label, n: 1, d: binomial(l, len) });
                }
            }
            out
        }
    };
    let k = sectors.iter().map(|s| s.n).sum();
    Ok(AnalyticSectorTable { model, l, sectors, k })
}

/// Connected components of the graph on product states joined by nonzero
/// off-diagonal generator elements.
#[derive(Clone, Debug, PartialEq)]
pub struct KrylovGraph {
    /// Components sorted by their smallest state index; states ascending within.
    pub components: Vec<Vec<usize>>,
    /// False when the components are not the family's Krylov subspaces (TL).
    pub is_krylov: bool,
}

pub fn krylov_graph_decompose<R: Real>(family: &HamiltonianFamily<R>) -> KrylovGraph {
    let ops: Vec<&SparseOp<R>> = family.generators.iter().map(|g| &g.op).collect();
    let components = product_components(family.d, &ops);
    KrylovGraph { components, is_krylov: family.model != ModelId::Tl }
}

/// Union-find over product states.
pub fn product_components<R: Real>(d: usize, ops: &[&SparseOp<R>]) -> Vec<Vec<usize>> {
    let mut parent: Vec<usize> = (0..d).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for op in ops {
        for (r, c, _) in op.triplets() {
            if r != c {
                let (a, b) = (find(&mut parent, r), find(&mut parent, c));
                if a != b {
                    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
                    parent[hi] = lo;
                }
            }
        }
    }
    let mut by_root: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for x in 0..d {
        let r = find(&mut parent, x);
        by_root.entry(r).or_default().push(x);
    }
    let mut comps: Vec<Vec<usize>> = by_root.into_values().collect();
    comps.sort_by_key(|c| c[0]);
    comps
}

/// Coordinate text export: one `row col re im` line per nonzero.
pub fn export_coordinates<R: Real>(op: &SparseOp<R>) -> String {
    let mut out = String::new();
    for (r, c, v) in op.triplets() {
        out.push_str(&format!(
            "{} {} {} {}\n",
            r,
            c,
            crate::io::fmt_num(crate::scalar::to_f64(v.re)),
            crate::io::fmt_num(crate::scalar::to_f64(v.im))
        ));
    }
    out
}
