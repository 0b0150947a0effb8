//! Barcode codebooks: bit-packed storage, RCE/TRC generation, distance
//! scans and the greedy disjoint closest-pair construction.

use std::fmt::Write as _;
use std::path::Path;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::exponents::gv_distance;

/// Largest codebook (in bits) the generators will allocate by default.
pub const DEFAULT_MAX_BITS: u64 = 1 << 32;

/// Per-row resampling budget for TRC generation.
pub const DEFAULT_TRC_ATTEMPTS: u64 = 1_000_000;

const WORD_BITS: usize = 64;

#[inline]
fn words_for(bits: usize) -> usize {
    bits.div_ceil(WORD_BITS)
}

#[inline]
fn tail_mask(bits: usize) -> u64 {
    match bits % WORD_BITS {
        0 => u64::MAX,
        r => (1u64 << r) - 1,
    }
}

/// Popcount of the XOR of two equally sized word slices.
#[inline]
pub(crate) fn hamming_words(a: &[u64], b: &[u64]) -> u32 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x ^ y).count_ones()).sum()
}

/// A dense `rows x cols` binary matrix, each row packed little-endian into
/// 64-bit words with the unused high bits of the last word kept at zero.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    words_per_row: usize,
    data: Vec<u64>,
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let words_per_row = words_for(cols);
        Self {
            rows,
            cols,
            words_per_row,
            data: vec![0; rows * words_per_row],
        }
    }

    /// Builds a matrix from rows written as strings of `'0'` and `'1'`.
    pub fn from_bit_strings<S: AsRef<str>>(rows: &[S]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut out = Self::zeros(rows.len(), cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::LengthMismatch {
                    left: cols,
                    right: r.len(),
                });
            }
            for (j, c) in r.bytes().enumerate() {
                match c {
                    b'0' => {}
                    b'1' => out.set(i, j, true),
                    _ => {
                        return Err(Error::Parse {
                            line: i + 1,
                            msg: format!("unexpected character {:?}", c as char),
                        })
                    }
                }
            }
        }
        Ok(out)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn words_per_row(&self) -> usize {
        self.words_per_row
    }

    #[inline]
    pub fn row(&self, i: usize) -> Row<'_> {
        Row {
            len: self.cols,
            words: self.row_words(i),
        }
    }

    #[inline]
    pub fn row_words(&self, i: usize) -> &[u64] {
        let w = self.words_per_row;
        &self.data[i * w..(i + 1) * w]
    }

    #[inline]
    pub(crate) fn row_words_mut(&mut self, i: usize) -> &mut [u64] {
        let w = self.words_per_row;
        &mut self.data[i * w..(i + 1) * w]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        assert!(j < self.cols);
        (self.row_words(i)[j / WORD_BITS] >> (j % WORD_BITS)) & 1 == 1
    }

    pub fn set(&mut self, i: usize, j: usize, value: bool) {
        assert!(j < self.cols);
        let word = &mut self.row_words_mut(i)[j / WORD_BITS];
        let bit = 1u64 << (j % WORD_BITS);
        if value {
            *word |= bit;
        } else {
            *word &= !bit;
        }
    }

    /// Fills row `i` from `next_word`, masking the tail.
    pub(crate) fn fill_row(&mut self, i: usize, mut next_word: impl FnMut() -> u64) {
        let mask = tail_mask(self.cols);
        let words = self.row_words_mut(i);
        for w in words.iter_mut() {
            *w = next_word();
        }
        if let Some(last) = words.last_mut() {
            *last &= mask;
        }
    }

    /// Returns the matrix whose row `forward[i]` is row `i` of `self`.
    pub fn permute_rows(&self, forward: &[usize]) -> Self {
        assert_eq!(forward.len(), self.rows);
        let mut out = Self::zeros(self.rows, self.cols);
        for (i, &j) in forward.iter().enumerate() {
            out.row_words_mut(j).copy_from_slice(self.row_words(i));
        }
        out
    }

    fn write_rows(&self, out: &mut String) {
        for i in 0..self.rows {
            out.push_str(&self.row(i).to_bit_string());
            out.push('\n');
        }
    }
}

/// Borrowed view of one packed row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Row<'a> {
    len: usize,
    words: &'a [u64],
}

impl<'a> Row<'a> {
    /// Wraps packed words as a row of `len` bits. Bits past `len` must be zero.
    pub fn new(len: usize, words: &'a [u64]) -> Result<Self> {
        if words.len() != words_for(len) {
            return Err(Error::LengthMismatch {
                left: words_for(len),
                right: words.len(),
            });
        }
        if let Some(&last) = words.last() {
            if last & !tail_mask(len) != 0 {
                return Err(Error::InvalidArgument(
                    "bits beyond the row length must be zero".into(),
                ));
            }
        }
        Ok(Self { len, words })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn words(&self) -> &'a [u64] {
        self.words
    }

    #[inline]
    pub fn bit(&self, j: usize) -> bool {
        assert!(j < self.len);
        (self.words[j / WORD_BITS] >> (j % WORD_BITS)) & 1 == 1
    }

    pub fn weight(&self) -> u32 {
        self.words.iter().map(|w| w.count_ones()).sum()
    }

    pub fn to_bit_string(&self) -> String {
        (0..self.len)
            .map(|j| if self.bit(j) { '1' } else { '0' })
            .collect()
    }
}

/// Hamming distance between two rows of equal length.
pub fn hamming(x: Row<'_>, y: Row<'_>) -> Result<u32> {
    if x.len != y.len {
        return Err(Error::LengthMismatch {
            left: x.len,
            right: y.len,
        });
    }
    Ok(hamming_words(x.words, y.words))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Ensemble {
    /// Every bit i.i.d. uniform.
    Rce,
    /// Uniform rows conditioned on every pairwise distance lying in the
    /// typical band.
    Trc,
    /// Supplied by the caller or read from disk.
    Explicit,
}

/// An `m x n` barcode matrix plus how it was produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    bits: BitMatrix,
    ensemble: Ensemble,
    epsilon: Option<f64>,
    seed: Option<u64>,
}

impl Codebook {
    pub fn explicit(bits: BitMatrix) -> Result<Self> {
        if bits.rows() == 0 || bits.cols() == 0 {
            return Err(Error::InvalidArgument(format!(
                "codebook needs m >= 1 and n >= 1, got {}x{}",
                bits.rows(),
                bits.cols()
            )));
        }
        Ok(Self {
            bits,
            ensemble: Ensemble::Explicit,
            epsilon: None,
            seed: None,
        })
    }

    pub fn from_bit_strings<S: AsRef<str>>(rows: &[S]) -> Result<Self> {
        Self::explicit(BitMatrix::from_bit_strings(rows)?)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.bits.cols()
    }

    #[inline]
    pub fn m(&self) -> usize {
        self.bits.rows()
    }

    /// Realized rate `log2(m) / n`.
    pub fn rate(&self) -> f64 {
        (self.m() as f64).log2() / self.n() as f64
    }

    pub fn ensemble(&self) -> Ensemble {
        self.ensemble
    }

    pub fn epsilon(&self) -> Option<f64> {
        self.epsilon
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    #[inline]
    pub fn row(&self, i: usize) -> Row<'_> {
        self.bits.row(i)
    }

    #[inline]
    pub fn bits(&self) -> &BitMatrix {
        &self.bits
    }

    /// `"m n"` header followed by one line of `n` characters per row.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.m() * (self.n() + 1) + 16);
        let _ = writeln!(out, "{} {}", self.m(), self.n());
        self.bits.write_rows(&mut out);
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = TextLines::new(text)?;
        let bits = parse_matrix(&mut lines)?;
        lines.finish()?;
        Self::explicit(bits)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> std::io::Result<()> {
        std::fs::write(path, self.to_text())
    }

    pub fn load(path: impl AsRef<Path>) -> std::io::Result<Result<Self>> {
        let text = std::fs::read_to_string(path)?;
        Ok(Self::from_text(&text))
    }
}

/// Line cursor over newline-terminated ASCII text.
pub(crate) struct TextLines<'a> {
    lines: Vec<&'a str>,
    pos: usize,
}

impl<'a> TextLines<'a> {
    pub(crate) fn new(text: &'a str) -> Result<Self> {
        if !text.is_ascii() {
            return Err(Error::Parse {
                line: 1,
                msg: "file is not ASCII".into(),
            });
        }
        let Some(body) = text.strip_suffix('\n') else {
            return Err(Error::Parse {
                line: text.lines().count().max(1),
                msg: "missing trailing newline".into(),
            });
        };
        Ok(Self {
            lines: body.split('\n').collect(),
            pos: 0,
        })
    }

    pub(crate) fn next_line(&mut self) -> Result<(usize, &'a str)> {
        let line_no = self.pos + 1;
        let line = *self.lines.get(self.pos).ok_or(Error::Parse {
            line: line_no,
            msg: "unexpected end of file".into(),
        })?;
        self.pos += 1;
        if line.ends_with(char::is_whitespace) {
            return Err(Error::Parse {
                line: line_no,
                msg: "trailing whitespace".into(),
            });
        }
        Ok((line_no, line))
    }

    pub(crate) fn finish(self) -> Result<()> {
        if self.pos != self.lines.len() {
            return Err(Error::Parse {
                line: self.pos + 1,
                msg: "unexpected extra lines".into(),
            });
        }
        Ok(())
    }
}

pub(crate) fn parse_matrix(lines: &mut TextLines<'_>) -> Result<BitMatrix> {
    let (hline, header) = lines.next_line()?;
    let dims: Vec<&str> = header.split(' ').collect();
    let parse_dim = |s: &str| {
        s.parse::<usize>().map_err(|_| Error::Parse {
            line: hline,
            msg: format!("bad dimension {s:?}"),
        })
    };
    if dims.len() != 2 {
        return Err(Error::Parse {
            line: hline,
            msg: "header must be \"m n\"".into(),
        });
    }
    let (m, n) = (parse_dim(dims[0])?, parse_dim(dims[1])?);
    let mut bits = BitMatrix::zeros(m, n);
    for i in 0..m {
        let (line_no, line) = lines.next_line()?;
        if line.len() != n {
            return Err(Error::Parse {
                line: line_no,
                msg: format!("expected {n} bits, found {}", line.len()),
            });
        }
        for (j, c) in line.bytes().enumerate() {
            match c {
                b'0' => {}
                b'1' => bits.set(i, j, true),
                _ => {
                    return Err(Error::Parse {
                        line: line_no,
                        msg: format!("unexpected character {:?}", c as char),
                    })
                }
            }
        }
    }
    Ok(bits)
}

/// Barcode count for blocklength `n` at nominal rate `rate`:
/// `max(2, round(2^{n rate}))`.
pub fn barcode_count(n: usize, rate: f64) -> Result<usize> {
    if n == 0 || !(rate.is_finite() && rate >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "need n >= 1 and rate >= 0, got n={n}, rate={rate}"
        )));
    }
    let exact = (n as f64 * rate).exp2().round();
    if exact >= usize::MAX as f64 {
        return Err(Error::InvalidArgument(format!(
            "2^(n R) overflows for n={n}, rate={rate}"
        )));
    }
    Ok((exact as usize).max(2))
}

/// Default TRC slack `min(0.02, delta_GV(2R) / 4)`.
pub fn default_epsilon(rate: f64) -> f64 {
    let d = gv_distance((2.0 * rate).clamp(0.0, 1.0)).expect("clamped");
    (d / 4.0).min(0.02)
}

/// Open interval `(n dlow, n (1 - dlow))` that every pairwise distance of a
/// TRC codebook must fall into, with `dlow = delta_GV(2 rate) - epsilon`.
pub fn trc_band(n: usize, rate: f64, epsilon: f64) -> Result<(f64, f64)> {
    if !(0.0..0.5).contains(&rate) {
        return Err(Error::RateOutOfRange {
            what: "the TRC ensemble",
            rate,
            limit: 0.5,
        });
    }
    let d = gv_distance(2.0 * rate)?;
    if !(epsilon > 0.0 && epsilon < d) {
        return Err(Error::Domain {
            name: "epsilon",
            value: epsilon,
            domain: "(0, delta_GV(2R))",
        });
    }
    let low = d - epsilon;
    Ok((n as f64 * low, n as f64 * (1.0 - low)))
}

#[inline]
fn in_band(d: u32, band: (f64, f64)) -> bool {
    let d = d as f64;
    d > band.0 && d < band.1
}

/// First pair `(i, j)` violating the TRC band, scanning all pairs.
pub fn trc_band_violation(c: &Codebook, epsilon: f64) -> Result<Option<(usize, usize, u32)>> {
    let band = trc_band(c.n(), c.rate(), epsilon)?;
    for i in 0..c.m() {
        for j in i + 1..c.m() {
            let d = hamming_words(c.bits.row_words(i), c.bits.row_words(j));
            if !in_band(d, band) {
                return Ok(Some((i, j, d)));
            }
        }
    }
    Ok(None)
}

fn check_size(n: usize, m: usize, cap: u64) -> Result<()> {
    if n == 0 || m == 0 {
        return Err(Error::InvalidArgument(format!(
            "codebook needs m >= 1 and n >= 1, got {m}x{n}"
        )));
    }
    match (m as u64).checked_mul(n as u64) {
        Some(bits) if bits <= cap => Ok(()),
        _ => Err(Error::TooLarge { m, n, cap }),
    }
}

/// Random code ensemble: `m` rows of `n` i.i.d. uniform bits.
pub fn generate_rce(n: usize, m: usize, seed: u64) -> Result<Codebook> {
    generate_rce_capped(n, m, seed, DEFAULT_MAX_BITS)
}

pub fn generate_rce_capped(n: usize, m: usize, seed: u64, max_bits: u64) -> Result<Codebook> {
    check_size(n, m, max_bits)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bits = BitMatrix::zeros(m, n);
    for i in 0..m {
        bits.fill_row(i, || rng.next_u64());
    }
    Ok(Codebook {
        bits,
        ensemble: Ensemble::Rce,
        epsilon: None,
        seed: Some(seed),
    })
}

/// Typical random code by sequential rejection: each row is redrawn until
/// it lies in the distance band against every row accepted so far.
pub fn generate_trc(
    n: usize,
    m: usize,
    epsilon: f64,
    seed: u64,
    max_attempts: u64,
) -> Result<Codebook> {
    check_size(n, m, DEFAULT_MAX_BITS)?;
    let rate = (m as f64).log2() / n as f64;
    let band = trc_band(n, rate, epsilon)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bits = BitMatrix::zeros(m, n);
    for i in 0..m {
        let mut attempts = 0u64;
        loop {
            if attempts == max_attempts {
                return Err(Error::AttemptsExhausted {
                    row: i,
                    attempts,
                    n,
                    m,
                    epsilon,
                });
            }
            attempts += 1;
            bits.fill_row(i, || rng.next_u64());
            let candidate = bits.row_words(i);
            if (0..i).all(|k| in_band(hamming_words(candidate, bits.row_words(k)), band)) {
                break;
            }
        }
    }
    Ok(Codebook {
        bits,
        ensemble: Ensemble::Trc,
        epsilon: Some(epsilon),
        seed: Some(seed),
    })
}

fn pairwise_extreme(
    c: &Codebook,
    better: impl Fn(u32, u32) -> bool,
) -> Result<(u32, (usize, usize))> {
    if c.m() < 2 {
        return Err(Error::InvalidArgument(format!(
            "pairwise scan needs m >= 2, got {}",
            c.m()
        )));
    }
    let mut best = (
        hamming_words(c.bits.row_words(0), c.bits.row_words(1)),
        (0, 1),
    );
    for i in 0..c.m() {
        for j in i + 1..c.m() {
            let d = hamming_words(c.bits.row_words(i), c.bits.row_words(j));
            if better(d, best.0) {
                best = (d, (i, j));
            }
        }
    }
    Ok(best)
}

/// Exact minimum pairwise distance and the first pair attaining it.
pub fn pairwise_min_distance(c: &Codebook) -> Result<(u32, (usize, usize))> {
    pairwise_extreme(c, |d, best| d < best)
}

/// Exact maximum pairwise distance and the first pair attaining it.
pub fn pairwise_max_distance(c: &Codebook) -> Result<(u32, (usize, usize))> {
    pairwise_extreme(c, |d, best| d > best)
}

/// Disjoint index pairs collected by repeated closest-pair extraction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairSet {
    pub pairs: Vec<(usize, usize)>,
    pub source_distances: Vec<u32>,
}

impl PairSet {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// True when no index appears in two pairs.
    pub fn is_disjoint(&self) -> bool {
        let mut seen = std::collections::HashSet::new();
        self.pairs
            .iter()
            .all(|&(i, j)| i != j && seen.insert(i) && seen.insert(j))
    }
}

/// Repeatedly takes a closest pair among the remaining rows and removes both
/// endpoints, until `ceil(m/4)` pairs have been collected.
///
/// Sorting all pairs by `(distance, i, j)` once and scanning greedily is the
/// same as re-extracting the closest remaining pair each round, with ties
/// going to the lexicographically smallest pair.
pub fn greedy_pair_set(c: &Codebook) -> Result<PairSet> {
    let m = c.m();
    if m < 4 {
        return Err(Error::InvalidArgument(format!(
            "greedy pair set needs m >= 4, got {m}"
        )));
    }
    let target = m.div_ceil(4);
    let mut all: Vec<(u32, usize, usize)> = Vec::with_capacity(m * (m - 1) / 2);
    for i in 0..m {
        for j in i + 1..m {
            all.push((
                hamming_words(c.bits.row_words(i), c.bits.row_words(j)),
                i,
                j,
            ));
        }
    }
    all.sort_unstable();
    let mut used = vec![false; m];
    let mut out = PairSet {
        pairs: Vec::with_capacity(target),
        source_distances: Vec::with_capacity(target),
    };
    for (d, i, j) in all {
        if out.pairs.len() == target {
            break;
        }
        if used[i] || used[j] {
            continue;
        }
        used[i] = true;
        used[j] = true;
        out.pairs.push((i, j));
        out.source_distances.push(d);
    }
    Ok(out)
}

/// Checks that `map` is a bijection on `0..m`.
pub(crate) fn check_bijection(map: &[usize], m: usize) -> Result<()> {
    if map.len() != m {
        return Err(Error::NotBijective { m });
    }
    let mut seen = vec![false; m];
    for &x in map {
        if x >= m || std::mem::replace(&mut seen[x], true) {
            return Err(Error::NotBijective { m });
        }
    }
    Ok(())
}

/// `sum_i d_H(c_i, c_{sigma(i)})`, i.e. the distance between the codebook
/// and its row permutation by `sigma`.
pub fn permuted_distance(c: &Codebook, sigma: &[usize]) -> Result<u64> {
    check_bijection(sigma, c.m())?;
    Ok(sigma
        .iter()
        .enumerate()
        .map(|(i, &s)| hamming_words(c.bits.row_words(i), c.bits.row_words(s)) as u64)
        .sum())
}
