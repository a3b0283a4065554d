//! Hamiltonian builders and sector tables checked against independent constructions.

use fragcgp::algebra::{commutant_basis, decompose, CommutantOptions, DecomposeOptions};
use fragcgp::linalg::{kron, max_abs, CMat};
use fragcgp::models::{
    analytic_sectors, build, krylov_graph_decompose, q_deformed_integer, sample_couplings, spin_pattern, tl_k_closed_form, tl_q,
    ModelId,
};
use num_complex::Complex;

type C = Complex<f64>;

fn pauli() -> [CMat<f64>; 4] {
    let z = C::new(0.0, 0.0);
    let o = C::new(1.0, 0.0);
    let i = C::new(0.0, 1.0);
    [
        CMat::from_row_slice(2, 2, &[o, z, z, o]),
        CMat::from_row_slice(2, 2, &[z, o, o, z]),
        CMat::from_row_slice(2, 2, &[z, -i, i, z]),
        CMat::from_row_slice(2, 2, &[o, z, z, -o]),
    ]
}

/// `op` acting on sites `sites` of an `l`-site chain, identity elsewhere (site 0 leftmost).
fn embed(l: usize, local: &[(usize, &CMat<f64>)]) -> CMat<f64> {
    let id = CMat::<f64>::identity(2, 2);
    let mut m = CMat::<f64>::identity(1, 1);
    for s in 0..l {
        let f = local.iter().find(|(k, _)| *k == s).map(|(_, o)| *o).unwrap_or(&id);
        m = kron(&m, f);
    }
    m
}

#[test]
fn xxz_matches_kronecker_construction() {
    let l = 3;
    let cs = sample_couplings(ModelId::Xxz, l, 17).unwrap();
    let fam = build::<f64>(&cs).unwrap();
    let [_, x, y, z] = pauli();
    let mut h = CMat::<f64>::zeros(8, 8);
    for j in 0..l - 1 {
        let jp = cs.get(&format!("Jperp_{}", j + 1)).unwrap();
        let jz = cs.get(&format!("Jz_{}", j + 1)).unwrap();
        let xx = embed(l, &[(j, &x), (j + 1, &x)]);
        let yy = embed(l, &[(j, &y), (j + 1, &y)]);
        let zz = embed(l, &[(j, &z), (j + 1, &z)]);
        h += (xx + yy) * C::new(jp, 0.0) + zz * C::new(jz, 0.0);
    }
    for j in 0..l {
        h += embed(l, &[(j, &z)]) * C::new(cs.get(&format!("h_{}", j + 1)).unwrap(), 0.0);
    }
    assert!(max_abs(&(h - fam.hamiltonian().to_dense())) < 1e-14);
}

#[test]
fn couplings_are_nested_and_in_unit_interval() {
    for m in ModelId::ALL {
        let small = sample_couplings(m, 2, 5).unwrap();
        let large = sample_couplings(m, 6, 5).unwrap();
        for c in &small.values {
            assert!((0.0..1.0).contains(&c.value));
            assert_eq!(large.get(&c.label), Some(c.value), "{m:?} {}", c.label);
        }
    }
    assert_ne!(sample_couplings(ModelId::Xxz, 3, 0).unwrap(), sample_couplings(ModelId::Xxz, 3, 1).unwrap());
}

#[test]
fn tjz_hops_preserve_spin_pattern_by_enumeration() {
    let l = 3;
    let fam = build::<f64>(&sample_couplings(ModelId::Tjz, l, 2).unwrap()).unwrap();
    let h = fam.hamiltonian();
    for (r, c, v) in h.triplets() {
        if r == c {
            continue;
        }
        let dr = fragcgp::models::digits(r, l, 3);
        let dc = fragcgp::models::digits(c, l, 3);
        assert_eq!(spin_pattern(&dr), spin_pattern(&dc));
        let moved: Vec<usize> = (0..l).filter(|&k| dr[k] != dc[k]).collect();
        assert_eq!(moved.len(), 2);
        assert_eq!(moved[1], moved[0] + 1);
        assert!(v.re < 0.0 && v.im == 0.0);
    }
    let graph = krylov_graph_decompose(&fam);
    assert_eq!(graph.components.len(), 15);
    for comp in &graph.components {
        let p = spin_pattern(&fragcgp::models::digits(comp[0], l, 3));
        let k = p.len();
        let expected = (0..k).fold(1usize, |a, i| a * (l - i) / (i + 1));
        assert_eq!(comp.len(), expected);
    }
}

#[test]
fn tl_generators_satisfy_temperley_lieb_relations() {
    let fam = build::<f64>(&sample_couplings(ModelId::Tl, 4, 0).unwrap()).unwrap();
    let e: Vec<CMat<f64>> = fam.generators.iter().map(|g| g.op.to_dense()).collect();
    let three = C::new(3.0, 0.0);
    for (j, ej) in e.iter().enumerate() {
        assert!(max_abs(&(ej * ej - ej * three)) < 1e-13);
        if let Some(next) = e.get(j + 1) {
            assert!(max_abs(&(ej * next * ej - ej)) < 1e-13);
            assert!(max_abs(&(next * ej * next - next)) < 1e-13);
        }
        for far in e.iter().skip(j + 2) {
            assert!(max_abs(&(ej * far - far * ej)) < 1e-13);
        }
    }
    let q = tl_q::<f64>();
    assert!((q + 1.0 / q - 3.0).abs() < 1e-14);
}

#[test]
fn q_integers_obey_recurrence() {
    let q = tl_q::<f64>();
    let mut prev = 0.0;
    let mut cur = 1.0;
    for n in 1..15 {
        assert!((q_deformed_integer(n, q).unwrap() - cur).abs() < 1e-9 * cur);
        let next = 3.0 * cur - prev;
        prev = cur;
        cur = next;
    }
    assert_eq!(q_deformed_integer(4, 1.0f64).unwrap(), 4.0);
    assert!(q_deformed_integer(2, -1.0f64).is_err());
}

#[test]
fn analytic_tables_satisfy_sum_rules_and_counts() {
    for l in 1..=8 {
        let x = analytic_sectors(ModelId::Xxz, l).unwrap();
        assert_eq!(x.k, l as u64 + 1);
        assert_eq!(x.dim(), 1 << l);
        let t = analytic_sectors(ModelId::Tjz, l).unwrap();
        assert_eq!(t.k, (1 << (l + 1)) - 1);
        assert_eq!(t.dim(), 3u64.pow(l as u32));
    }
    for l in [2, 4, 6, 8] {
        let t = analytic_sectors(ModelId::Tl, l).unwrap();
        assert_eq!(t.dim(), 3u64.pow(l as u32));
        assert!((t.k as f64 - tl_k_closed_form::<f64>(l)).abs() < 1e-6);
    }
}

#[test]
fn numeric_decompositions_match_analytic_tables() {
    let cases = [(ModelId::Xxz, 4), (ModelId::Tjz, 2), (ModelId::Tl, 4)];
    for (m, l) in cases {
        let fam = build::<f64>(&sample_couplings(m, l, 1).unwrap()).unwrap();
        let dec = decompose(&fam.generator_ops(), &DecomposeOptions::seeded(3)).unwrap();
        let table = analytic_sectors(m, l).unwrap();
        let mut got: Vec<(usize, usize)> = dec.sectors.iter().map(|s| (s.n, s.d)).collect();
        let mut want: Vec<(usize, usize)> = table.sectors.iter().map(|s| (s.n as usize, s.d as usize)).collect();
        got.sort();
        want.sort();
        assert_eq!(got, want, "{m:?} L={l}");
        assert_eq!(dec.dim_a_prime as u64, table.dim_a_prime());
    }
}

#[test]
fn commutant_dimension_matches_sum_of_squares() {
    let fam = build::<f64>(&sample_couplings(ModelId::Tjz, 2, 0).unwrap()).unwrap();
    let space = commutant_basis(&fam.generator_ops(), &CommutantOptions::default()).unwrap();
    assert_eq!(space.dim() as u64, analytic_sectors(ModelId::Tjz, 2).unwrap().dim_a_prime());
}

#[test]
fn xxz_conserves_total_magnetization() {
    let fam = build::<f64>(&sample_couplings(ModelId::Xxz, 4, 3).unwrap()).unwrap();
    let sz: Vec<_> = fam.generators.iter().filter(|g| g.label.starts_with("h_")).map(|g| &g.op).collect();
    let total = fragcgp::sparse::SparseOp::linear_combination(fam.d, sz.iter().map(|op| (1.0, *op)));
    assert_eq!(fam.hamiltonian().commutator(&total).max_abs(), 0.0);
}

#[test]
fn tl_two_site_generator_is_scaled_projector() {
    let mut cs = sample_couplings(ModelId::Tl, 2, 0).unwrap();
    cs = cs.with_values(&[1.0]).unwrap();
    let fam = build::<f64>(&cs).unwrap();
    let h = fam.hamiltonian().to_dense();
    assert_eq!(h.trace().re, 3.0);
    let (vals, _) = fragcgp::linalg::eigh(&h).unwrap();
    assert!((vals[8] - 3.0).abs() < 1e-13);
    assert!(vals.iter().take(8).all(|v| v.abs() < 1e-13));
}

#[test]
fn graph_components_count_krylov_sectors() {
    for (m, ls) in [(ModelId::Xxz, 1..=7), (ModelId::Tjz, 1..=5)] {
        for l in ls {
            let fam = build::<f64>(&sample_couplings(m, l, 0).unwrap()).unwrap();
            let g = krylov_graph_decompose(&fam);
            assert!(g.is_krylov);
            assert_eq!(g.components.len() as u64, analytic_sectors(m, l).unwrap().k, "{m:?} L={l}");
        }
    }
    let tl = build::<f64>(&sample_couplings(ModelId::Tl, 2, 0).unwrap()).unwrap();
    assert!(!krylov_graph_decompose(&tl).is_krylov);
}

#[test]
fn numeric_krylov_spans_match_graph_components() {
    for (m, l) in [(ModelId::Xxz, 4), (ModelId::Tjz, 3)] {
        let fam = build::<f64>(&sample_couplings(m, l, 5).unwrap()).unwrap();
        let dec = decompose(&fam.generator_ops(), &DecomposeOptions::seeded(1)).unwrap();
        let comps = krylov_graph_decompose(&fam).components;
        assert_eq!(dec.k, comps.len());
        let mut matched = vec![false; comps.len()];
        for s in &dec.sectors {
            for copy in 0..s.n {
                let b = dec.copy_basis(s.label, copy);
                // The component carrying this copy: rows with weight.
                let row_weight = |i: usize| b.row(i).iter().map(|z| z.norm_sqr()).sum::<f64>();
                let owner = comps.iter().position(|c| c.iter().any(|&i| row_weight(i) > 1e-6)).unwrap();
                assert_eq!(comps[owner].len(), s.d);
                let inside: f64 = comps[owner].iter().map(|&i| row_weight(i)).sum();
                // All d_J columns of norm one lie in the component: principal angles vanish.
                assert!((inside - s.d as f64).abs() < 1e-8, "{m:?} leakage {}", s.d as f64 - inside);
                assert!(!matched[owner]);
                matched[owner] = true;
            }
        }
        assert!(matched.iter().all(|&x| x));
    }
}

#[test]
fn double_commutant_contains_generators() {
    let fam = build::<f64>(&sample_couplings(ModelId::Tl, 2, 0).unwrap()).unwrap();
    let opts = CommutantOptions::default();
    let gens = fam.generator_ops();
    let a_prime = commutant_basis(&gens, &opts).unwrap();
    let a = fragcgp::algebra::commutant_of_space(&a_prime, &opts).unwrap();
    assert_eq!(a.dim(), 2);
    for g in &gens {
        assert!(a.projection_residual(&g.to_dense()) < 1e-9);
    }
    let xxz = build::<f64>(&sample_couplings(ModelId::Xxz, 3, 0).unwrap()).unwrap();
    let gens = xxz.generator_ops();
    let a = fragcgp::algebra::commutant_of_space(&commutant_basis(&gens, &opts).unwrap(), &opts).unwrap();
    assert_eq!(a.dim(), 1 + 9 + 9 + 1);
    for g in &gens {
        assert!(a.projection_residual(&g.to_dense()) < 1e-9);
    }
}
