//! Statistical checks of the block-Haar sampler.

use fragcgp::algebra::{commutant_basis, decompose, AlgebraDecomposition, CommutantOptions, DecomposeOptions};
use fragcgp::cgp::{cgp_block, haar_avg_analytic, max_cgp_bound};
use fragcgp::dynamics::mean_stderr;
use fragcgp::haar::{concentration_stats, mc_haar_cgp, sample_haar_block, sample_haar_unitary, sample_rng};
use fragcgp::linalg::{max_abs, CMat};
use fragcgp::models::{build, sample_couplings, ModelId};

#[test]
fn first_and_second_moments() {
    let d = 3;
    let n = 10_000;
    let mut re = vec![vec![0.0; n]; d * d];
    let mut im = vec![vec![0.0; n]; d * d];
    let mut sq = vec![vec![0.0; n]; d * d];
    for s in 0..n {
        let u: CMat<f64> = sample_haar_unitary(d, &mut sample_rng(21, s as u64));
        for (k, z) in u.iter().enumerate() {
            re[k][s] = z.re;
            im[k][s] = z.im;
            sq[k][s] = z.norm_sqr();
        }
    }
    for k in 0..d * d {
        for xs in [&re[k], &im[k]] {
            let (m, se) = mean_stderr(xs);
            assert!(m.abs() <= 4.0 * se, "first moment {m} +- {se}");
        }
        let (m, se) = mean_stderr(&sq[k]);
        assert!((m - 1.0 / d as f64).abs() <= 4.0 * se, "second moment {m} +- {se}");
    }
}

#[test]
fn left_invariance_of_block_cgp() {
    let dec = AlgebraDecomposition::<f64>::from_product_components(6, &[vec![0], vec![1, 2], vec![3, 4, 5]]).unwrap();
    let v = sample_haar_block(&dec, 999);
    let n = 2000;
    let plain: Vec<f64> = (0..n)
        .map(|i| cgp_block(&sample_haar_block(&dec, i).blocks, &dec).unwrap().cgp)
        .collect();
    let shifted: Vec<f64> = (0..n)
        .map(|i| {
            let u = sample_haar_block(&dec, 10_000 + i);
            cgp_block(&v.compose(&u).blocks, &dec).unwrap().cgp
        })
        .collect();
    let (ma, sa) = mean_stderr(&plain);
    let (mb, sb) = mean_stderr(&shifted);
    let z = (ma - mb) / (sa * sa + sb * sb).sqrt();
    assert!(z.abs() < 2.576, "location test z = {z}");
}

#[test]
fn embedded_samples_commute_with_commutant() {
    let fam = build::<f64>(&sample_couplings(ModelId::Xxz, 3, 0).unwrap()).unwrap();
    let gens = fam.generator_ops();
    let dec = decompose(&gens, &DecomposeOptions::seeded(0)).unwrap();
    let space = commutant_basis(&gens, &CommutantOptions::default()).unwrap();
    assert_eq!(space.dim(), dec.dim_a_prime);
    for seed in 0..5 {
        let u = sample_haar_block(&dec, seed).embed(&dec).unwrap();
        for i in 0..space.dim() {
            let c = space.element(i);
            assert!(max_abs(&(&u * &c - &c * &u)) < 1e-8);
        }
    }
}

#[test]
fn mc_agrees_with_analytic_average_for_xxz_l3() {
    let fam = build::<f64>(&sample_couplings(ModelId::Xxz, 3, 0).unwrap()).unwrap();
    let dec = decompose(&fam.generator_ops(), &DecomposeOptions::seeded(0)).unwrap();
    let (est, samples) = mc_haar_cgp(&dec, 2000, 3).unwrap();
    assert_eq!(est.analytic_ref, haar_avg_analytic(&dec));
    assert!(est.agrees(3.0), "{est:?}");
    let bound = max_cgp_bound(&dec);
    assert!(samples.iter().all(|s| s.cgp <= bound + 1e-10));
}

#[test]
fn sampling_is_thread_count_independent() {
    let dec = AlgebraDecomposition::<f64>::from_product_components(5, &[vec![0, 1], vec![2, 3, 4]]).unwrap();
    let run = |threads| {
        rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(|| mc_haar_cgp(&dec, 300, 8).unwrap())
    };
    let (a, sa) = run(1);
    let (b, sb) = run(3);
    assert_eq!(a, b);
    assert_eq!(sa, sb);
}

#[test]
fn tails_shrink_with_dimension() {
    let mut tails = Vec::new();
    for d in [4, 16, 64] {
        let rows = concentration_stats(&AlgebraDecomposition::<f64>::full_matrix_algebra(d), &[0.05], 1000, 1).unwrap();
        assert!((rows[0].empirical_mean - rows[0].haar_mean).abs() < 0.01);
        tails.push(rows[0].tail);
    }
    assert!(tails.windows(2).all(|w| w[1] <= w[0]), "{tails:?}");
}
