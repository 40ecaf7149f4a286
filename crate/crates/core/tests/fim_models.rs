use lapcrb::fim::{
    crb_complete, empirical_fim, oracle_crb, psd_order_gap, slepian_bangs, FisherInfo,
};
use lapcrb::graphcore::{build_reparam_operators, num_pairs, SupportSelector, WeightedGraph};
use lapcrb::linalg;
use lapcrb::models::{
    dc_full_fim, dc_missing_fim, dc_score, dc_total_fim, diffusion_fim,
    diffusion_fim_quadruple_sum, diffusion_fim_stationary, diffusion_gaussian_jacobians,
    diffusion_score_fn, lgmrf_fim, DcScenario, DiffusionScenario, LgmrfScenario, Partition,
};
use lapcrb::simharness::{diffusion_samples, generate_graph, GraphKind, GraphSpec};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_thetas(m: usize, n: usize, rng: &mut ChaCha8Rng) -> Vec<DVector<f64>> {
    (0..n)
        .map(|_| DVector::from_fn(m, |_, _| rng.random_range(-1.0..1.0)))
        .collect()
}

fn random_spd(m: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let a = DMatrix::from_fn(m, m, |_, _| rng.random_range(-1.0..1.0));
    &a * a.transpose() + DMatrix::identity(m, m) * 0.5
}

fn er_graph(m: usize, seed: u64) -> WeightedGraph {
    let spec = GraphSpec {
        edge_prob: 0.5,
        ..GraphSpec::new(GraphKind::ErdosRenyi, m)
    };
    generate_graph(&spec, seed).unwrap()
}

fn assert_ordered(b2: &DMatrix<f64>, b1: &DMatrix<f64>) {
    let gap = psd_order_gap(b2, b1).unwrap();
    assert!(
        gap >= -1e-9 * linalg::sym_norm2(b2),
        "min eig of B2 - B1 = {gap:e}"
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn dc_bounds_are_ordered(m in 3usize..7, seed in any::<u64>(), frac in 0.1..1.0f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ops = build_reparam_operators(m).unwrap();
        let k = num_pairs(m);
        let sc = DcScenario::new(random_thetas(m, m, &mut rng), random_spd(m, &mut rng), None).unwrap();
        let j = dc_total_fim(&sc, &ops).unwrap();
        let s = ((k as f64 * frac).ceil() as usize).max(1);
        let idx: Vec<usize> = (0..k).filter(|_| rng.random_bool(0.5)).take(s).collect();
        prop_assume!(!idx.is_empty());
        let o = oracle_crb(&j, &SupportSelector::from_indices(k, idx).unwrap()).unwrap();
        assert_ordered(o.b2.as_ref().unwrap(), o.b1.as_ref().unwrap());
    }

    #[test]
    fn lgmrf_oracle_bounds_are_ordered(m in 3usize..8, seed in 0u64..1000) {
        let g = er_graph(m, seed);
        let ops = build_reparam_operators(m).unwrap();
        let j = lgmrf_fim(&g.laplacian(), &LgmrfScenario::connected(20).unwrap(), &ops).unwrap();
        let o = oracle_crb(&j, &SupportSelector::from_indices(num_pairs(m), g.support()).unwrap()).unwrap();
        assert_ordered(o.b2.as_ref().unwrap(), o.b1.as_ref().unwrap());
    }
}

// Psi does not have orthonormal columns, so Psi^T J_L^{-1} Psi need not
// dominate (Psi^T J_L Psi)^{-1}. Checked against a dense computation.
#[test]
fn complete_bounds_are_not_always_ordered() {
    let m = 3;
    let ops = build_reparam_operators(m).unwrap();
    let mut worst = f64::INFINITY;
    for seed in 0..200 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sc =
            DcScenario::new(random_thetas(m, m, &mut rng), random_spd(m, &mut rng), None).unwrap();
        let jl = dc_full_fim(&sc).unwrap();
        let c = crb_complete(&dc_total_fim(&sc, &ops).unwrap(), Some(&jl), &ops).unwrap();
        let psi = ops.psi();
        let b1 = (psi.transpose() * jl.matrix() * psi).try_inverse().unwrap();
        let b2 = psi.transpose() * jl.matrix().clone().try_inverse().unwrap() * psi;
        assert!(linalg::rel_frobenius(c.b1.as_ref().unwrap(), &b1) < 1e-8);
        assert!(linalg::rel_frobenius(c.b2.as_ref().unwrap(), &b2) < 1e-8);
        worst = worst.min(psd_order_gap(&b2, &b1).unwrap() / linalg::sym_norm2(&b2));
    }
    assert!(worst < -1e-3, "{worst}");
}

#[test]
fn full_support_oracle_matches_complete() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let m = 5;
    let ops = build_reparam_operators(m).unwrap();
    let sc = DcScenario::new(random_thetas(m, 4, &mut rng), random_spd(m, &mut rng), None).unwrap();
    let j = dc_total_fim(&sc, &ops).unwrap();
    let o = oracle_crb(&j, &SupportSelector::full(num_pairs(m)).unwrap()).unwrap();
    let c = crb_complete(&j, None, &ops).unwrap();
    let b1 = c.b1.unwrap();
    assert!(linalg::rel_frobenius(o.b1.as_ref().unwrap(), &b1) < 1e-10);
    assert!(linalg::rel_frobenius(o.b2.as_ref().unwrap(), &b1) < 1e-10);
    assert!(c.b2.is_none());
}

#[test]
fn oracle_b1_can_exist_without_b2() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let m = 4;
    let ops = build_reparam_operators(m).unwrap();
    let sc = DcScenario::new(random_thetas(m, 1, &mut rng), DMatrix::identity(m, m), None).unwrap();
    let j = dc_total_fim(&sc, &ops).unwrap();
    let o = oracle_crb(
        &j,
        &SupportSelector::from_indices(num_pairs(m), vec![0, 3, 5]).unwrap(),
    )
    .unwrap();
    assert!(o.exists_b1());
    assert!(!o.exists_b2());
    assert!(o.b2_failure.is_some());
}

// alpha is unidentified along Laplacians supported on the orthogonal
// complement of span{1, theta[1..N]}, which has dimension d = M - 1 - N, so
// the generic rank is M(M-1)/2 - d(d+1)/2 and full rank needs N >= M - 1.
#[test]
fn dc_rank_grows_with_samples() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for m in 3..=8 {
        let ops = build_reparam_operators(m).unwrap();
        let k = num_pairs(m);
        let thetas = random_thetas(m, m, &mut rng);
        let mut prev = 0;
        for n in 1..=m {
            let sc = DcScenario::new(thetas[..n].to_vec(), DMatrix::identity(m, m), None).unwrap();
            let r = dc_total_fim(&sc, &ops).unwrap().rank();
            let d = (m - 1).saturating_sub(n);
            assert!(r >= prev);
            assert_eq!(r, k - d * (d + 1) / 2, "M={m} N={n}");
            assert!(r <= n * (m - 1));
            prev = r;
        }
    }
}

#[test]
fn lgmrf_fim_is_pd_for_connected_graphs() {
    for m in 2..=12 {
        for seed in 0..3 {
            let g = er_graph(m, seed);
            let ops = build_reparam_operators(m).unwrap();
            let j = lgmrf_fim(&g.laplacian(), &LgmrfScenario::connected(5).unwrap(), &ops).unwrap();
            assert!(
                linalg::min_eigenvalue(j.matrix()) > 0.0,
                "M={m} seed={seed}"
            );
        }
    }
}

#[test]
fn lgmrf_disconnected_uses_block_correction() {
    let g = WeightedGraph::new(5, [(1, 0, 1.0), (2, 1, 0.5), (4, 3, 2.0)]).unwrap();
    let p = Partition::detect(&g.laplacian());
    assert_eq!(p.num_components(), 2);
    let ops = build_reparam_operators(5).unwrap();
    let j = lgmrf_fim(
        &g.laplacian(),
        &LgmrfScenario::new(10, Some(p)).unwrap(),
        &ops,
    )
    .unwrap();
    assert!(linalg::min_eigenvalue(j.matrix()) > 0.0);
    assert!(lgmrf_fim(&g.laplacian(), &LgmrfScenario::connected(10).unwrap(), &ops).is_err());
}

#[test]
fn lgmrf_two_node_closed_form() {
    // L + 11^T/2 has eigenvalue 2w on (1,-1), so d^T (L+D)^{-1} d = 1/w and J = N / (2 w^2).
    let ops = build_reparam_operators(2).unwrap();
    for (w, n) in [(1.0, 10usize), (0.5, 10), (2.0, 7), (1.3, 40)] {
        let g = WeightedGraph::new(2, [(1, 0, w)]).unwrap();
        let j = lgmrf_fim(&g.laplacian(), &LgmrfScenario::connected(n).unwrap(), &ops).unwrap();
        let expected = n as f64 / (2.0 * w * w);
        assert!((j.matrix()[(0, 0)] - expected).abs() < 1e-12 * expected);
        let r = crb_complete(&j, None, &ops).unwrap();
        assert!((r.trace_b1.unwrap() - 1.0 / expected).abs() < 1e-12);
    }
}

#[test]
fn diffusion_cross_formulas_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for (m, taps) in [
        (4, vec![1.0, 0.5]),
        (5, vec![1.0, 0.4, 0.1]),
        (6, vec![0.3, 1.0, 0.2, 0.05]),
    ] {
        let g = er_graph(m, m as u64);
        let l = g.laplacian();
        let ops = build_reparam_operators(m).unwrap();
        let general = DiffusionScenario::new(taps.clone(), random_spd(m, &mut rng)).unwrap();
        let a = diffusion_fim(&l, &general, &ops).unwrap();
        let sb = slepian_bangs(&diffusion_gaussian_jacobians(&l, &general, &ops).unwrap()).unwrap();
        assert!(linalg::rel_frobenius(sb.matrix(), a.matrix()) < 1e-8);
        let quad = diffusion_fim_quadruple_sum(&l, &general, &ops).unwrap();
        assert!(linalg::rel_frobenius(&quad, &(a.matrix() * 2.0)) < 1e-8);

        let white = DiffusionScenario::stationary(taps.clone(), m).unwrap();
        let w = diffusion_fim(&l, &white, &ops).unwrap();
        let st = diffusion_fim_stationary(&l, &taps, &ops).unwrap();
        assert!(linalg::rel_frobenius(st.matrix(), w.matrix()) < 1e-8);
    }
}

#[test]
fn diffusion_rank_in_filter_order() {
    let m = 5;
    let g = er_graph(m, 2);
    let l = g.laplacian();
    let ops = build_reparam_operators(m).unwrap();
    let v = DMatrix::from_fn(m, 2, |i, j| ((i * 7 + j * 3) % 5) as f64 - 1.7);
    for cz in [DMatrix::identity(m, m), &v * v.transpose()] {
        let ranks: Vec<usize> = (1..=m + 2)
            .map(|f| {
                let taps: Vec<f64> = (0..f).map(|i| 1.0 / (1.0 + i as f64)).collect();
                diffusion_fim(&l, &DiffusionScenario::new(taps, cz.clone()).unwrap(), &ops)
                    .unwrap()
                    .rank()
            })
            .collect();
        assert!(ranks.windows(2).all(|w| w[1] >= w[0]), "{ranks:?}");
        assert!(
            ranks[m - 2..].iter().all(|&r| r == ranks[m - 2]),
            "{ranks:?}"
        );
    }
    let full = diffusion_fim(
        &l,
        &DiffusionScenario::stationary(vec![1.0, 0.5], m).unwrap(),
        &ops,
    )
    .unwrap();
    assert_eq!(full.rank(), num_pairs(m));
    let low = diffusion_fim(
        &l,
        &DiffusionScenario::new(vec![1.0, 0.5], &v * v.transpose()).unwrap(),
        &ops,
    )
    .unwrap();
    assert!(low.rank() < num_pairs(m));
}

// The alpha-FIM of K4 with equal weights (one triple eigenvalue) is better
// conditioned than the same graph with spread weights.
#[test]
fn spread_spectrum_conditioning() {
    let m = 4;
    let ops = build_reparam_operators(m).unwrap();
    let pert = [0.9, -0.5, 0.3, -0.8, 0.6, 0.1];
    let rc = |t: f64| {
        let mut edges = Vec::new();
        let mut k = 0;
        for j in 0..m {
            for i in j + 1..m {
                edges.push((i, j, 1.0 + t * pert[k]));
                k += 1;
            }
        }
        let l = WeightedGraph::new(m, edges).unwrap().laplacian();
        let sc = DiffusionScenario::stationary(vec![1.0, 0.5], m).unwrap();
        diffusion_fim(&l, &sc, &ops).unwrap().rcond()
    };
    let r: Vec<f64> = [0.0, 0.1, 0.3, 0.6, 0.9].iter().map(|&t| rc(t)).collect();
    assert!(r.windows(2).all(|w| w[1] < w[0]), "{r:?}");
}

#[test]
fn identity_masks_give_identical_fim() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let m = 5;
    let ops = build_reparam_operators(m).unwrap();
    let sc = DcScenario::new(random_thetas(m, 6, &mut rng), random_spd(m, &mut rng), None).unwrap();
    let plain = dc_total_fim(&sc, &ops).unwrap();
    let masked = dc_missing_fim(&sc, vec![vec![true; m]; 6], &ops).unwrap();
    assert_eq!(plain.matrix(), masked.matrix());

    let mut masks = vec![vec![true; m]; 6];
    masks[0][2] = false;
    masks[3][0] = false;
    let partial = dc_missing_fim(&sc, masks, &ops).unwrap();
    assert!(psd_order_gap(plain.matrix(), partial.matrix()).unwrap() >= -1e-10);
}

fn mc_error(analytic: &FisherInfo, scores: &[DVector<f64>]) -> f64 {
    linalg::rel_frobenius(&empirical_fim(scores).unwrap(), analytic.matrix())
}

#[test]
fn diffusion_fim_matches_monte_carlo() {
    let m = 4;
    let g = er_graph(m, 5);
    let l = g.laplacian();
    let ops = build_reparam_operators(m).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    let sc = DiffusionScenario::new(vec![1.0, 0.5, 0.2], random_spd(m, &mut rng)).unwrap();
    let score = diffusion_score_fn(&l, &sc, &ops).unwrap();
    let x = diffusion_samples(&g, &sc, 100_000, 17).unwrap();
    let scores: Vec<DVector<f64>> = x.row_iter().map(|r| score(&r.transpose())).collect();
    let err = mc_error(&diffusion_fim(&l, &sc, &ops).unwrap(), &scores);
    assert!(err < 0.05, "relative error {err}");
}

#[test]
fn dc_score_mean_is_zero_and_covariance_is_fim() {
    let m = 4;
    let n = 3;
    let g = er_graph(m, 6);
    let l = g.laplacian();
    let ops = build_reparam_operators(m).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(18);
    let sc = DcScenario::new(
        random_thetas(m, n, &mut rng),
        random_spd(m, &mut rng) * 0.1,
        None,
    )
    .unwrap();
    let chol = sc.noise_cov().clone().cholesky().unwrap().l();
    let mean = sc.noiseless(&l);
    let scores: Vec<DVector<f64>> = (0..20_000)
        .map(|_| {
            let mut obs = mean.clone();
            for r in 0..n {
                let z = DVector::from_fn(m, |_, _| {
                    rand_distr::Distribution::sample(&rand_distr::StandardNormal, &mut rng)
                });
                let eta: DVector<f64> = &chol * z;
                let mut row = obs.row_mut(r);
                row += eta.transpose();
            }
            dc_score(&obs, &sc, &l).unwrap()
        })
        .collect();
    let err = mc_error(&dc_total_fim(&sc, &ops).unwrap(), &scores);
    assert!(err < 0.05, "relative error {err}");
}
