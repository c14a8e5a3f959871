mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use raptor_core::codec::{awgn_llr, build_regular_ldpc, ldpc_encode, random_bits, LtStream};
use raptor_core::decoder::{check_update, hard, variable_update, TannerGraph, DEFAULT_CLIP};
use raptor_core::OutputDegreeDistribution;

fn dist() -> OutputDegreeDistribution {
    OutputDegreeDistribution::from_node_weights(
        [(1, 0.01), (2, 0.49), (3, 0.17), (4, 0.07), (5, 0.08), (8, 0.06), (14, 0.05), (30, 0.05), (66, 0.02)].into_iter().collect(),
    )
    .unwrap()
}

fn llr_of(p0: f64, p1: f64) -> f64 {
    (p0 / p1).ln()
}

#[test]
fn check_update_matches_marginalization() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..200 {
        let m: Vec<f64> = (0..3).map(|_| rng.gen_range(-6.0..6.0)).collect();
        let ch: f64 = rng.gen_range(-6.0..6.0);
        let prob0 = |l: f64| 1.0 / (1.0 + (-l).exp());
        for with_channel in [false, true] {
            let out = check_update(&m, with_channel.then_some(ch), DEFAULT_CLIP);
            for e in 0..3 {
                // x_e is forced to the XOR of the others (and of the observed bit).
                let (mut p0, mut p1) = (0.0, 0.0);
                let others: Vec<usize> = (0..3).filter(|&i| i != e).collect();
                for a in 0..2u8 {
                    for b in 0..2u8 {
                        for y in 0..(1 + with_channel as u8) {
                            let pa = if a == 0 { prob0(m[others[0]]) } else { 1.0 - prob0(m[others[0]]) };
                            let pb = if b == 0 { prob0(m[others[1]]) } else { 1.0 - prob0(m[others[1]]) };
                            let py = if !with_channel { 1.0 } else if y == 0 { prob0(ch) } else { 1.0 - prob0(ch) };
                            let w = pa * pb * py;
                            if a ^ b ^ y == 0 {
                                p0 += w;
                            } else {
                                p1 += w;
                            }
                        }
                    }
                }
                assert!((out[e] - llr_of(p0, p1)).abs() < 1e-10, "{} vs {}", out[e], llr_of(p0, p1));
            }
        }
    }
}

#[test]
fn strong_messages_keep_precision() {
    // A degree-2 check passes the other message straight through.
    for m in [14.0, 19.5, 25.0, 29.9] {
        let out = check_update(&[m, -3.0], None, DEFAULT_CLIP);
        assert!((out[0] + 3.0).abs() < 1e-12);
        assert!((out[1] - m).abs() < 1e-9, "{m}: {}", out[1]);
    }
    // A strong channel observation behind one strong input.
    let out = check_update(&[18.0, 22.0], Some(40.0), 60.0);
    let exact = |a: f64, b: f64| {
        // boxplus in the log domain.
        a.signum() * b.signum() * a.abs().min(b.abs()) + (-(a + b).abs()).exp().ln_1p() - (-(a - b).abs()).exp().ln_1p()
    };
    assert!((out[0] - exact(22.0, 40.0)).abs() < 1e-9);
    assert!((out[1] - exact(18.0, 40.0)).abs() < 1e-9);
}

#[test]
fn variable_update_excludes_own_edge() {
    let (out, total) = variable_update(&[1.5, -0.25, 2.0]);
    assert_eq!(total, 3.25);
    assert_eq!(out, vec![1.75, 3.5, 1.25]);
    assert_eq!(hard(0.0), 0);
    assert_eq!(hard(-1e-300), 1);
}

#[test]
fn small_tree_is_exact() {
    // x0 - [c0: ch 1.2] - x1, x1 - [s0] - x2, x2 - [c1: ch -0.7] - x3, x4 observed alone.
    let g = common::TreeGraph {
        k: 5,
        dynamic: vec![vec![0, 1], vec![2, 3], vec![4], vec![1], vec![3]],
        channel: vec![1.2, -0.7, 2.5, 0.3, -1.1],
        stat: vec![vec![1, 2, 4]],
    };
    let exact = common::brute_force_marginals(&g);
    let mut t = TannerGraph::from_parts(g.k, &g.dynamic, g.channel.clone(), &g.stat).unwrap();
    let r = t.decode_joint_with(20, false);
    for (a, b) in r.totals.iter().zip(&exact) {
        assert!((a - b).abs() < 1e-9, "{a} vs {b}");
    }
    // x0 sees nothing beyond c0, whose other side is informative.
    assert!(exact[0] != 0.0);
}

#[test]
fn random_trees_are_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..30 {
        let g = common::random_tree(&mut rng, 10);
        let exact = common::brute_force_marginals(&g);
        let mut t = TannerGraph::from_parts(g.k, &g.dynamic, g.channel.clone(), &g.stat).unwrap();
        let r = t.decode_joint_with(2 * g.k + 2, false);
        for (a, b) in r.totals.iter().zip(&exact) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b} in {g:?}");
        }
    }
}

#[test]
fn noiseless_lt_decodes_without_errors() {
    let k = 2000;
    let input = random_bits(k, 1);
    let mut s = LtStream::new(dist(), k, 2).unwrap();
    s.extend(3000);
    let bits = s.encode_range(&input, 0);
    let ch = awgn_llr(&bits, 0.05, 3).unwrap();
    let mut g = TannerGraph::from_stream(&s, ch.llrs, None).unwrap();
    let r = g.decode_joint(300);
    assert!(r.converged);
    assert_eq!(r.decisions, input);
    assert!(r.iterations < 300);
}

#[test]
fn decoding_is_symmetric_in_the_codeword() {
    let k = 1500;
    let code = build_regular_ldpc(k, 3, 30, 4).unwrap();
    let info = random_bits(code.info_len(), 5);
    let word = ldpc_encode(&code, &info).unwrap();
    let mut s = LtStream::new(dist(), k, 6).unwrap();
    s.extend(1700);
    let bits = s.encode_range(&word, 0);
    let zero = awgn_llr(&vec![0; bits.len()], 0.95, 7).unwrap().llrs;
    let mirrored: Vec<f64> = zero.iter().zip(&bits).map(|(&l, &b)| if b == 1 { -l } else { l }).collect();
    let r0 = TannerGraph::from_stream(&s, zero, Some(&code)).unwrap().decode_joint_with(60, false);
    let rc = TannerGraph::from_stream(&s, mirrored, Some(&code)).unwrap().decode_joint_with(60, false);
    for v in 0..k {
        assert!((r0.totals[v] - if word[v] == 1 { -rc.totals[v] } else { rc.totals[v] }).abs() < 1e-9);
    }
}

#[test]
fn clipping_at_thirty_is_transparent() {
    let k = 2000;
    let mut s = LtStream::new(dist(), k, 8).unwrap();
    s.extend(2400);
    let ch = awgn_llr(&vec![0; 2400], 0.9787, 9).unwrap().llrs;
    let a = TannerGraph::from_stream(&s, ch.clone(), None).unwrap().decode_joint(200);
    let b = TannerGraph::from_stream(&s, ch, None).unwrap().with_clip(60.0).decode_joint(200);
    let agree = a.decisions.iter().zip(&b.decisions).filter(|(x, y)| x == y).count();
    assert!(agree as f64 >= 0.999 * k as f64, "agreement {agree}/{k}");
}

#[test]
fn early_stop_implies_parities_hold() {
    let k = 1200;
    let code = build_regular_ldpc(k, 3, 30, 10).unwrap();
    let info = random_bits(code.info_len(), 11);
    let word = ldpc_encode(&code, &info).unwrap();
    let mut s = LtStream::new(dist(), k, 12).unwrap();
    s.extend(2200);
    let bits = s.encode_range(&word, 0);
    let ch = awgn_llr(&bits, 0.8, 13).unwrap().llrs;
    let mut g = TannerGraph::from_stream(&s, ch.clone(), Some(&code)).unwrap();
    let r = g.decode_joint(300);
    assert!(r.converged);
    assert!(r.totals.iter().all(|&t| t != 0.0));
    assert!(code.syndrome(&r.decisions).iter().all(|&x| x == 0));
    // Recompute the dynamic rule without the decoder's helpers.
    for (i, &l) in ch.iter().enumerate() {
        let nb = s.neighbors(i);
        let xor = nb.iter().fold(0u8, |a, &v| a ^ r.decisions[v as usize]);
        let p: f64 = nb.iter().map(|&v| (0.5 * r.totals[v as usize]).tanh()).product();
        let ext = (2.0 * p.atanh()).clamp(-30.0, 30.0);
        assert_eq!(((l + ext) < 0.0) as u8, xor);
    }
    assert_eq!(r.decisions, word);
}

#[test]
fn tandem_without_precode_matches_joint() {
    let k = 800;
    let mut s = LtStream::new(dist(), k, 14).unwrap();
    s.extend(1000);
    let ch = awgn_llr(&vec![0; 1000], 0.9, 15).unwrap().llrs;
    let a = TannerGraph::from_stream(&s, ch.clone(), None).unwrap().decode_joint_with(50, false);
    let b = TannerGraph::from_stream(&s, ch, None).unwrap().decode_tandem_with(50, 0, false);
    assert_eq!(a.decisions, b.decisions);
}

#[test]
fn mismatched_inputs_are_rejected() {
    assert!(TannerGraph::from_parts(3, &[vec![0, 1]], vec![], &[]).is_err());
    assert!(TannerGraph::from_parts(3, &[vec![0, 5]], vec![1.0], &[]).is_err());
}

mod properties {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn check_update_is_odd_in_each_input(m in prop::collection::vec(-20.0f64..20.0, 2..8), flip in 0usize..8) {
            let flip = flip % m.len();
            let out = check_update(&m, None, DEFAULT_CLIP);
            let mut negated = m.clone();
            negated[flip] = -negated[flip];
            let out2 = check_update(&negated, None, DEFAULT_CLIP);
            for i in 0..m.len() {
                let expect = if i == flip { out[i] } else { -out[i] };
                prop_assert!((out2[i] - expect).abs() < 1e-9, "{} vs {}", out2[i], expect);
            }
        }

        #[test]
        fn check_messages_never_exceed_weakest_input(m in prop::collection::vec(-20.0f64..20.0, 2..8)) {
            let out = check_update(&m, None, DEFAULT_CLIP);
            for i in 0..m.len() {
                let weakest = m.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, x)| x.abs()).fold(f64::INFINITY, f64::min);
                prop_assert!(out[i].abs() <= weakest.min(DEFAULT_CLIP) + 1e-9);
            }
        }

        #[test]
        fn variable_outputs_sum_consistently(m in prop::collection::vec(-30.0f64..30.0, 1..10)) {
            let (out, total) = variable_update(&m);
            for (o, x) in out.iter().zip(&m) {
                prop_assert!((o + x - total).abs() < 1e-9);
            }
        }
    }
}
