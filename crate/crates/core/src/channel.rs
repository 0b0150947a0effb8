//! The bee-identification channel: a uniform row permutation followed by
//! i.i.d. BSC noise on every bit.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::codebook::{
    check_bijection, hamming_words, parse_matrix, BitMatrix, Codebook, TextLines,
};
use crate::error::{Error, Result};
use crate::exponents::ChannelParam;

/// A permutation `pi` of `0..m`, stored as `forward[i] = pi(i)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PermutationMap {
    forward: Vec<usize>,
}

impl PermutationMap {
    pub fn identity(m: usize) -> Self {
        Self {
            forward: (0..m).collect(),
        }
    }

    pub fn from_forward(forward: Vec<usize>) -> Result<Self> {
        check_bijection(&forward, forward.len())?;
        Ok(Self { forward })
    }

    #[inline]
    pub fn m(&self) -> usize {
        self.forward.len()
    }

    #[inline]
    pub fn forward(&self) -> &[usize] {
        &self.forward
    }

    #[inline]
    pub fn apply(&self, i: usize) -> usize {
        self.forward[i]
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.m()];
        for (i, &j) in self.forward.iter().enumerate() {
            inv[j] = i;
        }
        Self { forward: inv }
    }

    /// `self ∘ other`, i.e. `i -> self(other(i))`.
    pub fn compose(&self, other: &Self) -> Self {
        assert_eq!(self.m(), other.m());
        Self {
            forward: other.forward.iter().map(|&j| self.forward[j]).collect(),
        }
    }

    pub fn is_identity(&self) -> bool {
        self.forward.iter().enumerate().all(|(i, &j)| i == j)
    }
}

/// Uniform draw from the symmetric group on `m` letters (Fisher-Yates).
pub fn sample_permutation<R: Rng + ?Sized>(m: usize, rng: &mut R) -> PermutationMap {
    let mut forward: Vec<usize> = (0..m).collect();
    forward.shuffle(rng);
    PermutationMap { forward }
}

/// Received matrix plus the hidden permutation that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelOutput {
    pub received: BitMatrix,
    pub truth: PermutationMap,
    pub flip_count: u64,
    /// Seed of the noise mask; `None` for outputs loaded from a fixture.
    pub noise_seed: Option<u64>,
}

impl ChannelOutput {
    /// Codebook text format preceded by a `# pi: <forward map>` line.
    pub fn to_text(&self) -> String {
        let mut out = String::from("# pi:");
        for j in self.truth.forward() {
            let _ = write!(out, " {j}");
        }
        out.push('\n');
        let body = Codebook::explicit(self.received.clone())
            .map(|c| c.to_text())
            .unwrap_or_else(|_| format!("{} {}\n", self.received.rows(), self.received.cols()));
        out.push_str(&body);
        out
    }

    /// Parses a fixture written by [`ChannelOutput::to_text`]. The flip count
    /// is recomputed against `source`.
    pub fn from_text(text: &str, source: &Codebook) -> Result<Self> {
        let mut lines = TextLines::new(text)?;
        let (line_no, header) = lines.next_line()?;
        let rest = header.strip_prefix("# pi:").ok_or(Error::Parse {
            line: line_no,
            msg: "expected \"# pi:\" header".into(),
        })?;
        let forward = rest
            .split(' ')
            .skip(1)
            .map(|s| {
                s.parse::<usize>().map_err(|_| Error::Parse {
                    line: line_no,
                    msg: format!("bad permutation entry {s:?}"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if !rest.is_empty() && !rest.starts_with(' ') {
            return Err(Error::Parse {
                line: line_no,
                msg: "expected a space after \"# pi:\"".into(),
            });
        }
        let truth = PermutationMap::from_forward(forward)?;
        let received = parse_matrix(&mut lines)?;
        lines.finish()?;
        check_shape(source, &received)?;
        if truth.m() != source.m() {
            return Err(Error::ShapeMismatch {
                expected_m: source.m(),
                expected_n: source.n(),
                m: truth.m(),
                n: source.n(),
            });
        }
        let flip_count = (0..source.m())
            .map(|i| {
                hamming_words(source.row(i).words(), received.row_words(truth.apply(i))) as u64
            })
            .sum();
        Ok(Self {
            received,
            truth,
            flip_count,
            noise_seed: None,
        })
    }
}

pub(crate) fn check_shape(c: &Codebook, received: &BitMatrix) -> Result<()> {
    if received.rows() != c.m() || received.cols() != c.n() {
        return Err(Error::ShapeMismatch {
            expected_m: c.m(),
            expected_n: c.n(),
            m: received.rows(),
            n: received.cols(),
        });
    }
    Ok(())
}

/// Counter-based Bernoulli(p) mask for one source row. Each 64-bit word
/// of the mask is keyed by `(noise_seed, row, word)`, so masks do not depend
/// on the order in which rows or trials are evaluated.
pub fn noise_mask(noise_seed: u64, row: usize, n: usize, p: f64) -> Vec<u64> {
    let words = n.div_ceil(64);
    let mut mask = vec![0u64; words];
    if p <= 0.0 {
        return mask;
    }
    // x < threshold with x uniform on u64 has probability p (to 2^-64).
    let threshold = (p * 18_446_744_073_709_551_616.0) as u64;
    let mut rng = ChaCha8Rng::seed_from_u64(noise_seed);
    rng.set_stream(row as u64);
    for (w, out) in mask.iter_mut().enumerate() {
        // Each u64 draw consumes two 32-bit words of the ChaCha block stream.
        rng.set_word_pos(w as u128 * 128);
        let bits = if w + 1 == words && !n.is_multiple_of(64) {
            n % 64
        } else {
            64
        };
        let mut word = 0u64;
        for b in 0..bits {
            if rng.next_u64() < threshold {
                word |= 1 << b;
            }
        }
        *out = word;
    }
    mask
}

/// Sends every row `i` of `c` to position `pi(i)` and flips each bit
/// independently with probability `p`.
pub fn transmit(
    c: &Codebook,
    pi: &PermutationMap,
    ch: ChannelParam,
    noise_seed: u64,
) -> Result<ChannelOutput> {
    if pi.m() != c.m() {
        return Err(Error::ShapeMismatch {
            expected_m: c.m(),
            expected_n: c.n(),
            m: pi.m(),
            n: c.n(),
        });
    }
    let mut received = BitMatrix::zeros(c.m(), c.n());
    let mut flip_count = 0u64;
    for i in 0..c.m() {
        let mask = noise_mask(noise_seed, i, c.n(), ch.p());
        let src = c.row(i).words();
        let dst = received.row_words_mut(pi.apply(i));
        for ((d, s), k) in dst.iter_mut().zip(src).zip(&mask) {
            *d = s ^ k;
            flip_count += k.count_ones() as u64;
        }
    }
    Ok(ChannelOutput {
        received,
        truth: pi.clone(),
        flip_count,
        noise_seed: Some(noise_seed),
    })
}
