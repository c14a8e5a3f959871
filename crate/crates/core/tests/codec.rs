use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use raptor_core::codec::{awgn_llr, build_regular_ldpc, ldpc_encode, lt_generate, random_bits, LtStream};
use raptor_core::degree::DegreeMap;
use raptor_core::OutputDegreeDistribution;
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn chi_square_p(observed: &[u64], expected: &[f64]) -> f64 {
    let stat: f64 = observed.iter().zip(expected).map(|(&o, &e)| (o as f64 - e).powi(2) / e).sum();
    1.0 - ChiSquared::new((observed.len() - 1) as f64).unwrap().cdf(stat)
}

#[test]
fn full_scale_code_shape() {
    let code = build_regular_ldpc(65_000, 3, 60, 2024).unwrap();
    assert_eq!(code.num_checks(), 3250);
    assert!((code.design_rate() - 0.95).abs() < 1e-15);
    let mut deg = vec![0u8; code.n];
    for c in &code.checks {
        assert_eq!(c.len(), 60);
        assert!(c.windows(2).all(|w| w[0] < w[1]));
        for &v in c {
            deg[v as usize] += 1;
        }
    }
    assert!(deg.iter().all(|&d| d == 3));
    assert!(code.is_full_rank(), "rank {}", code.rank());
    assert_eq!(code.info_len(), 61_750);
}

#[test]
fn toy_code_syndrome_by_matrix_multiply() {
    let code = build_regular_ldpc(20, 3, 6, 5).unwrap();
    let mut h = vec![vec![0u8; 20]; code.num_checks()];
    for (r, c) in code.checks.iter().enumerate() {
        for &v in c {
            h[r][v as usize] = 1;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..50 {
        let info: Vec<u8> = (0..code.info_len()).map(|_| rng.gen::<bool>() as u8).collect();
        let word = ldpc_encode(&code, &info).unwrap();
        for row in &h {
            let s: u32 = row.iter().zip(&word).map(|(&a, &b)| (a & b) as u32).sum();
            assert_eq!(s % 2, 0);
        }
    }
}

#[test]
fn encoding_is_linear() {
    let code = build_regular_ldpc(240, 3, 12, 9).unwrap();
    assert_eq!(ldpc_encode(&code, &vec![0; code.info_len()]).unwrap(), vec![0; 240]);
    let a = random_bits(code.info_len(), 1);
    let b = random_bits(code.info_len(), 2);
    let ab: Vec<u8> = a.iter().zip(&b).map(|(x, y)| x ^ y).collect();
    let ea = ldpc_encode(&code, &a).unwrap();
    let eb = ldpc_encode(&code, &b).unwrap();
    let eab = ldpc_encode(&code, &ab).unwrap();
    assert!(ea.iter().zip(&eb).zip(&eab).all(|((x, y), z)| x ^ y == *z));
}

#[test]
fn construction_is_deterministic() {
    let a = build_regular_ldpc(600, 3, 6, 77).unwrap();
    let b = build_regular_ldpc(600, 3, 6, 77).unwrap();
    let c = build_regular_ldpc(600, 3, 6, 78).unwrap();
    assert_eq!(a.checks, b.checks);
    assert_ne!(a.checks, c.checks);
}

#[test]
fn lt_symbols_of_zero_input_are_zero() {
    let d = OutputDegreeDistribution::from_node_weights([(1, 0.1), (2, 0.5), (5, 0.4)].into_iter().collect()).unwrap();
    let mut s = LtStream::new(d, 100, 3).unwrap();
    assert!(lt_generate(&mut s, &[0; 100], 500).unwrap().iter().all(|&b| b == 0));
    assert!(lt_generate(&mut s, &[0; 99], 1).is_err());
}

#[test]
fn lt_parity_relation_and_distinct_neighbors() {
    let d = OutputDegreeDistribution::from_node_weights([(1, 0.1), (3, 0.5), (9, 0.4)].into_iter().collect()).unwrap();
    let input = random_bits(200, 4);
    let mut s = LtStream::new(d, 200, 3).unwrap();
    let bits = lt_generate(&mut s, &input, 300).unwrap();
    let more = lt_generate(&mut s, &input, 200).unwrap();
    for (i, &b) in bits.iter().chain(&more).enumerate() {
        let nb = s.neighbors(i);
        let mut sorted = nb.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), nb.len());
        assert_eq!(nb.iter().fold(0, |a, &v| a ^ input[v as usize]), b);
    }
}

#[test]
fn lt_stream_is_deterministic_and_resumable() {
    let d = OutputDegreeDistribution::from_node_weights([(2, 0.5), (4, 0.5)].into_iter().collect()).unwrap();
    let mut a = LtStream::new(d.clone(), 50, 11).unwrap();
    let mut b = LtStream::new(d, 50, 11).unwrap();
    a.extend(100);
    b.extend(40);
    b.extend(60);
    assert!((0..100).all(|i| a.neighbors(i) == b.neighbors(i)));
}

#[test]
fn neighbors_uniform_chi_square() {
    let d = OutputDegreeDistribution::from_node_weights([(1, 1.0)].into_iter().collect()).unwrap();
    let mut s = LtStream::new(d, 4, 19).unwrap();
    s.extend(100_000);
    let mut counts = [0u64; 4];
    for i in 0..s.len() {
        counts[s.neighbors(i)[0] as usize] += 1;
    }
    let p = chi_square_p(&counts, &[25_000.0; 4]);
    assert!(p > 0.01, "p = {p}, counts {counts:?}");
}

#[test]
fn degrees_follow_distribution_chi_square() {
    let node: DegreeMap = [(1, 0.008), (2, 0.49), (3, 0.17), (4, 0.07), (5, 0.08), (8, 0.06), (14, 0.05), (30, 0.052), (66, 0.02)].into_iter().collect();
    let d = OutputDegreeDistribution::from_node_weights(node.clone()).unwrap();
    let mut s = LtStream::new(d, 1000, 23).unwrap();
    let n = 1_000_000;
    s.extend(n);
    let degrees: Vec<u32> = node.keys().copied().collect();
    let mut counts = vec![0u64; degrees.len()];
    for i in 0..n {
        let deg = s.neighbors(i).len() as u32;
        counts[degrees.iter().position(|&x| x == deg).unwrap()] += 1;
    }
    let expected: Vec<f64> = node.values().map(|w| w * n as f64).collect();
    let p = chi_square_p(&counts, &expected);
    assert!(p > 0.01, "p = {p}");
}

#[test]
fn llr_moments() {
    let sigma: f64 = 0.9787;
    let n = 1_000_000;
    let out = awgn_llr(&vec![0u8; n], sigma, 31).unwrap();
    let mean = out.llrs.iter().sum::<f64>() / n as f64;
    let var = out.llrs.iter().map(|l| (l - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let s2 = sigma * sigma;
    let (m_true, v_true) = (2.0 / s2, 4.0 / s2);
    assert!((mean - m_true).abs() < 3.0 * (v_true / n as f64).sqrt(), "mean {mean}");
    assert!((var - v_true).abs() < 3.0 * v_true * (2.0 / n as f64).sqrt(), "var {var}");
}

#[test]
fn noise_is_deterministic_and_signs_follow_bits() {
    let bits = random_bits(1000, 8);
    let a = awgn_llr(&bits, 0.7, 5).unwrap();
    let b = awgn_llr(&bits, 0.7, 5).unwrap();
    assert_eq!(a.llrs, b.llrs);
    let quiet = awgn_llr(&bits, 0.01, 5).unwrap();
    assert!(bits.iter().zip(&quiet.llrs).all(|(&bit, &l)| (bit == 1) == (l < 0.0)));
}

mod properties {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn codewords_satisfy_every_check(seed in any::<u64>(), info_seed in any::<u64>()) {
            let code = build_regular_ldpc(120, 3, 6, seed).unwrap();
            let word = ldpc_encode(&code, &random_bits(code.info_len(), info_seed)).unwrap();
            prop_assert!(code.syndrome(&word).iter().all(|&s| s == 0));
        }

        #[test]
        fn lt_symbols_are_xors_of_their_neighbors(seed in any::<u64>(), k in 1usize..200) {
            let d = OutputDegreeDistribution::from_node_weights([(1, 0.2), (2, 0.4), (7, 0.4)].into_iter().collect()).unwrap();
            let input = random_bits(k, seed ^ 1);
            let mut s = LtStream::new(d, k, seed).unwrap();
            let bits = lt_generate(&mut s, &input, 50).unwrap();
            for (i, &b) in bits.iter().enumerate() {
                let nb = s.neighbors(i);
                prop_assert!(!nb.is_empty() && nb.len() <= k);
                prop_assert_eq!(nb.iter().fold(0, |a, &v| a ^ input[v as usize]), b);
            }
        }
    }
}
