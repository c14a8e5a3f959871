mod common;

use common::{j_inv_quadrature, j_quadrature};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use raptor_core::degree::DegreeMap;
use raptor_core::evolution::{alpha_min, delta_max, extrinsic_ic, stability_floor_omega2};
use raptor_core::{j, j_inv, ChannelParam, EvolutionContext, OutputDegreeDistribution, PrecodeThreshold, TransferFunction};

const XP_3_60: f64 = 0.96094;

fn channel() -> ChannelParam {
    ChannelParam::from_sigma(0.9787).unwrap()
}

fn dist(pairs: &[(u32, f64)]) -> OutputDegreeDistribution {
    OutputDegreeDistribution::from_edge_weights(pairs.iter().copied().collect::<DegreeMap>()).unwrap()
}

fn random_dist(rng: &mut ChaCha8Rng, with_one: bool) -> OutputDegreeDistribution {
    let mut m = DegreeMap::new();
    if with_one {
        m.insert(1, rng.gen_range(0.005..0.2));
    }
    for _ in 0..rng.gen_range(1..6) {
        *m.entry(rng.gen_range(2..60)).or_insert(0.0) += rng.gen_range(0.01..1.0);
    }
    OutputDegreeDistribution::from_edge_weights(m).unwrap()
}

/// Poisson(α) edge coefficient ι_i = e^{−α} α^{i−1}/(i−1)!.
fn iota(alpha: f64, i: usize) -> f64 {
    let k = (i - 1) as f64;
    (-alpha + k * alpha.ln() - (1..i).map(|t| (t as f64).ln()).sum::<f64>()).exp()
}

#[test]
fn straight_line_oracle_at_point_three() {
    let d = dist(&[(1, 0.02), (2, 0.1), (4, 0.3), (11, 0.58)]);
    let ch = channel();
    let ctx = EvolutionContext::new(ch, 21.0, TransferFunction::Null, d.clone()).unwrap();
    let mu_u = j_inv_quadrature(0.3);
    let x_v: f64 = (1..=60).map(|i| iota(21.0, i) * j_quadrature((i - 1) as f64 * mu_u)).sum();
    let mu_v = j_inv_quadrature(1.0 - x_v);
    let f0 = j_inv_quadrature(1.0 - j_quadrature(2.0 / (0.9787 * 0.9787)));
    let expected = 1.0 - d.edge_weights().iter().map(|(&deg, &w)| w * j_quadrature((deg - 1) as f64 * mu_v + f0)).sum::<f64>();
    let got = ctx.evolve_f(0.3);
    assert!((got - expected).abs() < 1e-5, "{got} vs {expected}");
}

#[test]
fn extrinsic_oracle() {
    let expected = j_quadrature(21.0 * j_inv_quadrature(0.4));
    assert!((extrinsic_ic(21.0, 0.4) - expected).abs() < 1e-6);
}

#[test]
fn start_condition() {
    let ch = channel();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        let d = random_dist(&mut rng, true);
        let ctx = EvolutionContext::new(ch, rng.gen_range(2.0..40.0), TransferFunction::regular_ldpc(3, 60).unwrap(), d.clone()).unwrap();
        assert!((ctx.evolve_f(0.0) - d.edge_weight(1) * ch.x0).abs() < 1e-9);
    }
}

#[test]
fn ceiling_and_monotone_on_random_contexts() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..30 {
        let ch = ChannelParam::from_sigma(rng.gen_range(0.6..1.2)).unwrap();
        let transfer = if rng.gen_bool(0.5) { TransferFunction::Null } else { TransferFunction::regular_ldpc(3, 60).unwrap() };
        let ctx = EvolutionContext::new(ch, rng.gen_range(5.0..40.0), transfer, random_dist(&mut rng, true)).unwrap();
        let vals: Vec<f64> = (0..=100).map(|i| ctx.evolve_f(i as f64 / 100.0)).collect();
        assert!(vals.iter().all(|&v| v <= ch.x0 + 1e-9));
        assert!(vals.windows(2).all(|w| w[0] <= w[1] + 1e-9));
    }
}

#[test]
fn affine_in_edge_weights() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let ch = channel();
    let t = TransferFunction::regular_ldpc(3, 60).unwrap();
    for _ in 0..10 {
        let a = random_dist(&mut rng, true);
        let b = random_dist(&mut rng, true);
        let ca = EvolutionContext::new(ch, 12.0, t.clone(), a.clone()).unwrap();
        let cb = EvolutionContext::new(ch, 12.0, t.clone(), b.clone()).unwrap();
        for theta in [0.0, 0.25, 0.5, 1.0] {
            let mut mix = DegreeMap::new();
            for (&d, &w) in a.edge_weights() {
                *mix.entry(d).or_insert(0.0) += theta * w;
            }
            for (&d, &w) in b.edge_weights() {
                *mix.entry(d).or_insert(0.0) += (1.0 - theta) * w;
            }
            mix.retain(|_, w| *w > 0.0);
            let cm = EvolutionContext::new(ch, 12.0, t.clone(), OutputDegreeDistribution::from_edge_weights(mix).unwrap()).unwrap();
            for x in [0.0, 0.1, 0.37, 0.8] {
                let lhs = cm.evolve_f(x);
                let rhs = theta * ca.evolve_f(x) + (1.0 - theta) * cb.evolve_f(x);
                assert!((lhs - rhs).abs() < 1e-12, "theta {theta} x {x}: {lhs} vs {rhs}");
            }
        }
    }
}

#[test]
fn null_transfer_is_tandem_recursion() {
    let ch = channel();
    let d = dist(&[(1, 0.03), (2, 0.1), (6, 0.87)]);
    let ctx = EvolutionContext::new(ch, 21.0, TransferFunction::Null, d.clone()).unwrap();
    for i in 0..=50 {
        let x = i as f64 / 50.0 * 0.99;
        let mu = j_inv(x);
        let x_v: f64 = ctx.kernel.input.edge_coeffs().iter().enumerate().map(|(i, w)| w * j(i as f64 * mu)).sum();
        let mu_v = j_inv(1.0 - x_v);
        let tandem = 1.0 - d.edge_weights().iter().map(|(&deg, &w)| w * j((deg - 1) as f64 * mu_v + ch.f0)).sum::<f64>();
        assert!((ctx.evolve_f(x) - tandem.clamp(0.0, 1.0)).abs() < 1e-12, "at {x}");
    }
}

#[test]
fn finite_difference_slope_limit() {
    // The slope of F at the origin approaches ω₂·α·e^{−f₀/4} as h → 0.
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..20 {
        let ch = ChannelParam::from_sigma(rng.gen_range(0.6..1.2)).unwrap();
        let alpha = rng.gen_range(5.0..40.0);
        let w2 = rng.gen_range(0.02..0.2);
        let ctx = EvolutionContext::new(ch, alpha, TransferFunction::Null, dist(&[(2, w2), (7, 1.0 - w2)])).unwrap();
        let h = 1e-8;
        let fd = ctx.evolve_f(h) / h;
        let limit = w2 * alpha * (-ch.f0 / 4.0).exp();
        assert!((fd / limit - 1.0).abs() < 0.03, "alpha {alpha}: {fd} vs {limit}");
    }
}

#[test]
fn slope_near_printed_bound_at_alpha_21() {
    let ch = channel();
    let ctx = EvolutionContext::new(ch, 21.0, TransferFunction::Null, dist(&[(2, 0.1), (5, 0.9)])).unwrap();
    let h = 1e-6;
    let fd = ctx.evolve_f(h) / h;
    let printed = 0.1 * 20.0 * (-ch.f0 / 4.0).exp();
    assert!((fd / printed - 1.0).abs() < 0.05, "{fd} vs {printed}");
    assert!((ctx.stability_product() - printed).abs() < 1e-15);
}

#[test]
fn trajectory_without_degree_one_stays_at_zero() {
    let ctx = EvolutionContext::new(channel(), 21.0, TransferFunction::Null, dist(&[(2, 0.3), (9, 0.7)])).unwrap();
    let tr = ctx.run_trajectory(50, 1e-8, None).unwrap();
    assert!(tr.points.iter().all(|p| p.x_u == 0.0));
    assert!(!tr.converged());
    assert!(ctx.run_trajectory(0, 1e-8, None).is_err());
}

#[test]
fn trajectories_are_nondecreasing() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..10 {
        let ctx = EvolutionContext::new(channel(), rng.gen_range(5.0..30.0), TransferFunction::regular_ldpc(3, 60).unwrap(), random_dist(&mut rng, true)).unwrap();
        let tr = ctx.run_trajectory(2000, 1e-10, None).unwrap();
        assert!(tr.points.windows(2).all(|w| w[1].x_u >= w[0].x_u - 1e-12));
        assert!(tr.points.iter().all(|p| (0.0..=1.0).contains(&p.x_u) && (0.0..=1.0).contains(&p.x_v) && (0.0..=1.0).contains(&p.x_ext)));
    }
}

#[test]
fn bounds_against_scalar_oracle() {
    let ch = channel();
    let xp = PrecodeThreshold::new(XP_3_60).unwrap();
    let mu_p = j_inv_quadrature(XP_3_60);
    let am = alpha_min(&ch, xp).unwrap();
    assert!((am - ch.sigma2 * mu_p / 2.0).abs() < 1e-4, "{am}");
    assert!((am - 5.20).abs() < 0.01);
    let dm = delta_max(21.0, &ch, xp).unwrap();
    let oracle = j_quadrature(2.0 / ch.sigma2) - j_quadrature(mu_p / 21.0);
    assert!((dm - oracle).abs() < 1e-5, "{dm} vs {oracle}");
    let floor = stability_floor_omega2(21.0, &ch).unwrap();
    assert!((floor - 0.0842).abs() < 2e-3);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn map_is_monotone(x in 0.0f64..1.0, gap in 0.0f64..0.5, w1 in 0.001f64..0.3, alpha in 2.0f64..40.0) {
        let d = dist(&[(1, w1), (2, 0.2), (8, 1.0 - w1)]);
        let ctx = EvolutionContext::new(channel(), alpha, TransferFunction::regular_ldpc(3, 60).unwrap(), d).unwrap();
        let y = (x + gap).min(1.0);
        prop_assert!(ctx.evolve_f(x) <= ctx.evolve_f(y) + 1e-9);
        prop_assert!(ctx.evolve_f(y) <= ctx.channel().x0 + 1e-9);
    }
}
