//! Oracles shared by the integration tests. They work on plain integers and
//! strings so they do not lean on the crate's own bit packing.

#![allow(dead_code)]

use beeid::codebook::Codebook;
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Per-coordinate Hamming distance between two rows of a codebook.
pub fn hamming_ref(c: &Codebook, i: usize, j: usize) -> u32 {
    let (a, b) = (c.row(i).to_bit_string(), c.row(j).to_bit_string());
    a.bytes().zip(b.bytes()).filter(|(x, y)| x != y).count() as u32
}

fn pattern_prob(weight: u32, n: u32, p: f64) -> f64 {
    p.powi(weight as i32) * (1.0 - p).powi((n - weight) as i32)
}

/// Probability that the wrong codeword is at least as close as the sent one,
/// by enumerating every noise pattern on `n` bits. The two codewords differ
/// in the first `d` coordinates.
pub fn pairwise_confusion_exact(n: u32, d: u32, p: f64) -> f64 {
    let diff: u64 = (1 << d) - 1;
    (0u64..1 << n)
        .filter(|e| (e ^ diff).count_ones() <= e.count_ones())
        .map(|e| pattern_prob(e.count_ones(), n, p))
        .sum()
}

/// Exact failure probability of independent decoding for a two-row
/// codebook, with ties broken by a fair coin.
pub fn independent_error_exact_m2(c: &Codebook, p: f64) -> f64 {
    assert_eq!(c.m(), 2);
    let n = c.n() as u32;
    let d = hamming_ref(c, 0, 1);
    // Only the relative position of the two rows matters, so place the
    // difference in the low `d` bits.
    let diff: u64 = (1 << d) - 1;
    let mut row_ok = 0.0;
    for e in 0u64..1 << n {
        let own = e.count_ones();
        let other = (e ^ diff).count_ones();
        let w = pattern_prob(own, n, p);
        if own < other {
            row_ok += w;
        } else if own == other {
            row_ok += 0.5 * w;
        }
    }
    // Noise and tie coins are independent across rows.
    1.0 - row_ok * row_ok
}

/// Upper-tail probability of a chi-square statistic.
pub fn chi_square_p_value(statistic: f64, df: usize) -> f64 {
    1.0 - ChiSquared::new(df as f64).unwrap().cdf(statistic)
}

/// Goodness-of-fit statistic, merging adjacent cells until every expected
/// count is at least 5. Returns `(statistic, degrees of freedom)`.
pub fn chi_square_gof(observed: &[u64], expected: &[f64]) -> (f64, usize) {
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut o, mut e) = (0.0, 0.0);
    for (&ob, &ex) in observed.iter().zip(expected) {
        o += ob as f64;
        e += ex;
        if e >= 5.0 {
            cells.push((o, e));
            o = 0.0;
            e = 0.0;
        }
    }
    if let Some(last) = cells.last_mut() {
        last.0 += o;
        last.1 += e;
    }
    let stat = cells.iter().map(|(o, e)| (o - e).powi(2) / e).sum();
    (stat, cells.len() - 1)
}

/// Binomial(n, p) probability mass function.
pub fn binomial_pmf(n: u32, p: f64) -> Vec<f64> {
    let mut choose = 1.0f64;
    (0..=n)
        .map(|k| {
            if k > 0 {
                choose = choose * (n - k + 1) as f64 / k as f64;
            }
            choose * pattern_prob(k, n, p)
        })
        .collect()
}
