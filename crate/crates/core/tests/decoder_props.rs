mod common;

use beeid::channel::*;
use beeid::codebook::{generate_rce, permuted_distance, BitMatrix, Codebook};
use beeid::decoders::*;
use beeid::exponents::{alpha_p, ChannelParam};
use common::{binomial_pmf, pairwise_confusion_exact};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn instance(rng: &mut ChaCha8Rng, m: usize, n: usize, p: f64) -> (Codebook, ChannelOutput) {
    let c = generate_rce(n, m, rng.gen()).unwrap();
    let pi = sample_permutation(m, rng);
    let y = transmit(&c, &pi, ChannelParam::new(p).unwrap(), rng.gen()).unwrap();
    (c, y)
}

#[test]
fn cost_separates_over_rows() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..1000 {
        let m = rng.gen_range(1..=9);
        let n = rng.gen_range(1..=80);
        let (c, y) = instance(&mut rng, m, n, 0.2);
        let sigma = sample_permutation(m, &mut rng);
        let sigma_inv = sigma.inverse();
        let costs = CostMatrix::new(&c, &y.received).unwrap();
        let separated: u64 = (0..m)
            .map(|j| costs.get(j, sigma_inv.apply(j)) as u64)
            .sum();
        assert_eq!(costs.cost_of(sigma_inv.forward()), separated);

        // Stack received rows over codebook rows and pair row j with
        // codeword sigma^-1(j); the pairing is an involution, so every
        // distance is counted twice.
        let mut stacked = BitMatrix::zeros(2 * m, n);
        for j in 0..m {
            for b in 0..n {
                stacked.set(j, b, y.received.get(j, b));
                stacked.set(m + j, b, c.bits().get(j, b));
            }
        }
        let mut pairing = vec![0; 2 * m];
        for j in 0..m {
            pairing[j] = m + sigma_inv.apply(j);
            pairing[m + sigma_inv.apply(j)] = j;
        }
        let whole = Codebook::explicit(stacked).unwrap();
        assert_eq!(permuted_distance(&whole, &pairing).unwrap(), 2 * separated);
    }
}

#[test]
fn joint_decoding_is_covariant_under_relabeling() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut checked = 0;
    while checked < 200 {
        let m = rng.gen_range(2..=7);
        let n = rng.gen_range(6..=20);
        let (c, y) = instance(&mut rng, m, n, 0.15);
        let costs = CostMatrix::new(&c, &y.received).unwrap();
        let (_, _, minimizers) = bruteforce_assignment(&costs).unwrap();
        if minimizers != 1 {
            continue;
        }
        checked += 1;
        let tau = sample_permutation(m, &mut rng);
        let relabeled = ChannelOutput {
            received: y.received.permute_rows(tau.forward()),
            truth: tau.compose(&y.truth),
            flip_count: y.flip_count,
            noise_seed: y.noise_seed,
        };
        let a = decode_joint_assignment(&c, &y).unwrap();
        let b = decode_joint_assignment(&c, &relabeled).unwrap();
        assert_eq!(a.total_cost, b.total_cost);
        for k in 0..m {
            assert_eq!(b.nu[k], a.nu[tau.inverse().apply(k)]);
        }
        assert_eq!(a.exact_recovery, b.exact_recovery);
    }
}

#[test]
fn all_decoders_return_valid_maps() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for _ in 0..300 {
        let m = rng.gen_range(1..=8);
        let n = rng.gen_range(4..=24);
        let (c, y) = instance(&mut rng, m, n, 0.25);
        let thr = rng.gen_range(0..=n as u32);
        let ind = decode_independent(&c, &y, 1).unwrap();
        assert!(ind.nu.iter().all(|&k| k < m));
        let joint = decode_joint_assignment(&c, &y).unwrap();
        let bf = decode_joint_bruteforce(&c, &y).unwrap();
        let gmd = decode_gmd(&c, &y, thr, 1).unwrap();
        assert!(joint.is_permutation && bf.is_permutation && gmd.is_permutation);
        assert_eq!(joint.total_cost, bf.total_cost);
        assert!(gmd.total_cost.unwrap() >= joint.total_cost.unwrap());
        if ind.is_permutation {
            // A permutation of row-wise minima is itself a joint minimizer.
            let costs = CostMatrix::new(&c, &y.received).unwrap();
            assert_eq!(costs.cost_of(&ind.nu), joint.total_cost.unwrap());
        }
    }
}

#[test]
fn pairwise_confusion_obeys_bhattacharyya() {
    let p = 0.1;
    let alpha = alpha_p(ChannelParam::new(p).unwrap());
    for d in [4u32, 8, 12] {
        let exact = pairwise_confusion_exact(20, d, p);
        // Only the d differing coordinates matter.
        let tail: f64 = binomial_pmf(d, p).iter().skip(d.div_ceil(2) as usize).sum();
        assert!((exact - tail).abs() < 1e-12, "d={d}: {exact} vs {tail}");
        assert!(exact <= (2f64).powf(-(d as f64) * alpha), "d={d}");
    }
}

#[test]
fn paired_decoder_ordering() {
    let (n, m, p, thr) = (16, 8, 0.05, 4);
    let trials = 10_000u64;
    let mut errs = [0u64; 3];
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    for _ in 0..trials {
        let (c, y) = instance(&mut rng, m, n, p);
        let tie = rng.gen();
        errs[0] += !decode_joint_assignment(&c, &y).unwrap().exact_recovery as u64;
        errs[1] += !decode_gmd(&c, &y, thr, tie).unwrap().exact_recovery as u64;
        errs[2] += !decode_independent(&c, &y, tie).unwrap().exact_recovery as u64;
    }
    let rate = |e: u64| e as f64 / trials as f64;
    let se = |a: u64, b: u64| {
        let (x, y) = (rate(a), rate(b));
        ((x * (1.0 - x) + y * (1.0 - y)) / trials as f64).sqrt()
    };
    assert!(
        rate(errs[0]) <= rate(errs[1]) + 3.0 * se(errs[0], errs[1]),
        "{errs:?}"
    );
    assert!(
        rate(errs[1]) <= rate(errs[2]) + 3.0 * se(errs[1], errs[2]),
        "{errs:?}"
    );
    assert!(errs[0] < errs[2], "{errs:?}");
}
