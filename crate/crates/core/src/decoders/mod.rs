//! Decoders mapping a received (permuted, noisy) matrix back to codebook
//! indices.
//!
//! All decoders return `nu`, where `nu[j]` is the codeword index assigned to
//! received row `j`. Recovery is exact when `nu` is the inverse of the
//! channel permutation.
//!
//! Joint ML decoding minimizes `d_H(Y, C_sigma)` over all row permutations.
//! Because that distance splits into a sum of per-row distances,
//! `sum_j d_H(y_j, c_{nu(j)})`, the minimization is a linear assignment
//! problem on the `m x m` matrix of row-to-codeword distances and is solved
//! exactly in O(m^3) instead of by enumerating `m!` permutations.

mod assignment;

pub use assignment::min_cost_assignment;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::channel::{check_shape, ChannelOutput, PermutationMap};
use crate::codebook::{hamming_words, BitMatrix, Codebook};
use crate::error::{Error, Result};
use crate::exponents::gv_distance;

/// Largest `m` accepted by [`decode_joint_bruteforce`] (8! = 40320).
pub const BRUTEFORCE_MAX_M: usize = 8;

/// Row-to-codeword Hamming distances, `entries[j][k] = d_H(y_j, c_k)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CostMatrix {
    m: usize,
    entries: Vec<u32>,
}

impl CostMatrix {
    pub fn new(c: &Codebook, received: &BitMatrix) -> Result<Self> {
        check_shape(c, received)?;
        let m = c.m();
        let mut entries = Vec::with_capacity(m * m);
        for j in 0..m {
            let y = received.row_words(j);
            entries.extend((0..m).map(|k| hamming_words(y, c.row(k).words())));
        }
        Ok(Self { m, entries })
    }

    /// Square matrix from row-major entries.
    pub fn from_entries(m: usize, entries: Vec<u32>) -> Result<Self> {
        if entries.len() != m * m {
            return Err(Error::LengthMismatch {
                left: m * m,
                right: entries.len(),
            });
        }
        Ok(Self { m, entries })
    }

    #[inline]
    pub fn m(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn get(&self, j: usize, k: usize) -> u32 {
        self.entries[j * self.m + k]
    }

    #[inline]
    pub fn row(&self, j: usize) -> &[u32] {
        &self.entries[j * self.m..(j + 1) * self.m]
    }

    /// `sum_j entries[j][nu[j]]`.
    pub fn cost_of(&self, nu: &[usize]) -> u64 {
        nu.iter()
            .enumerate()
            .map(|(j, &k)| self.get(j, k) as u64)
            .sum()
    }
}

/// Outcome of one decode.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecoderVerdict {
    /// `nu[j]` is the codeword index chosen for received row `j`.
    pub nu: Vec<usize>,
    pub is_permutation: bool,
    /// Attained `sum_j d_H(y_j, c_{nu(j)})`; reported by decoders whose
    /// output is always a permutation.
    pub total_cost: Option<u64>,
    /// Independent and GMD decoders: rows whose nearest codeword was not
    /// unique. Brute force: number of additional minimizing permutations.
    pub ties_broken: u32,
    /// Rows sent to the joint stage by the GMD decoder, ascending.
    pub erased: Vec<usize>,
    pub exact_recovery: bool,
}

impl DecoderVerdict {
    fn new(nu: Vec<usize>, truth: &PermutationMap) -> Self {
        let is_permutation = is_bijection(&nu);
        let exact_recovery =
            nu.len() == truth.m() && (0..truth.m()).all(|i| nu[truth.apply(i)] == i);
        Self {
            nu,
            is_permutation,
            total_cost: None,
            ties_broken: 0,
            erased: Vec::new(),
            exact_recovery,
        }
    }
}

fn is_bijection(nu: &[usize]) -> bool {
    let mut seen = vec![false; nu.len()];
    nu.iter()
        .all(|&k| k < nu.len() && !std::mem::replace(&mut seen[k], true))
}

/// Codeword indices at minimum distance from one received row.
fn nearest(row: &[u32], out: &mut Vec<usize>) -> u32 {
    out.clear();
    let mut best = u32::MAX;
    for (k, &d) in row.iter().enumerate() {
        if d < best {
            best = d;
            out.clear();
        }
        if d == best {
            out.push(k);
        }
    }
    best
}

/// Nearest-codeword decoding of every received row on its own. Ties are
/// broken uniformly at random from `tie_seed`; the result need not be a
/// permutation.
pub fn decode_independent(
    c: &Codebook,
    y: &ChannelOutput,
    tie_seed: u64,
) -> Result<DecoderVerdict> {
    let costs = CostMatrix::new(c, &y.received)?;
    let mut rng = ChaCha8Rng::seed_from_u64(tie_seed);
    let mut ties = 0u32;
    let mut argmin = Vec::new();
    let nu = (0..costs.m())
        .map(|j| {
            nearest(costs.row(j), &mut argmin);
            if argmin.len() > 1 {
                ties += 1;
                argmin[rng.gen_range(0..argmin.len())]
            } else {
                argmin[0]
            }
        })
        .collect();
    let mut v = DecoderVerdict::new(nu, &y.truth);
    v.ties_broken = ties;
    Ok(v)
}

/// Minimum-cost perfect matching on a [`CostMatrix`]: `(nu, total_cost)`.
pub fn solve_assignment(costs: &CostMatrix) -> (Vec<usize>, u64) {
    let (nu, total) = min_cost_assignment(costs.m(), |j, k| costs.get(j, k) as i64);
    (nu, total as u64)
}

/// Joint ML decoding via minimum-cost assignment.
pub fn decode_joint_assignment(c: &Codebook, y: &ChannelOutput) -> Result<DecoderVerdict> {
    let costs = CostMatrix::new(c, &y.received)?;
    let (nu, total) = solve_assignment(&costs);
    let mut v = DecoderVerdict::new(nu, &y.truth);
    v.total_cost = Some(total);
    Ok(v)
}

/// Exhaustive minimum over all `m!` assignments. Returns the
/// lexicographically smallest minimizer, its cost, and how many
/// permutations attain the minimum.
pub fn bruteforce_assignment(costs: &CostMatrix) -> Result<(Vec<usize>, u64, u64)> {
    let m = costs.m();
    if m > BRUTEFORCE_MAX_M {
        return Err(Error::TooManyRows {
            m,
            max: BRUTEFORCE_MAX_M,
        });
    }
    let mut perm: Vec<usize> = (0..m).collect();
    let mut best = (perm.clone(), costs.cost_of(&perm), 1u64);
    while next_permutation(&mut perm) {
        let cost = costs.cost_of(&perm);
        if cost < best.1 {
            best = (perm.clone(), cost, 1);
        } else if cost == best.1 {
            best.2 += 1;
        }
    }
    Ok(best)
}

/// Advances to the next permutation in lexicographic order; false after the last.
fn next_permutation(a: &mut [usize]) -> bool {
    let n = a.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && a[i - 1] >= a[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while a[j] <= a[i - 1] {
        j -= 1;
    }
    a.swap(i - 1, j);
    a[i..].reverse();
    true
}

/// Joint ML decoding by enumerating every permutation; `m <= 8`.
pub fn decode_joint_bruteforce(c: &Codebook, y: &ChannelOutput) -> Result<DecoderVerdict> {
    if c.m() > BRUTEFORCE_MAX_M {
        return Err(Error::TooManyRows {
            m: c.m(),
            max: BRUTEFORCE_MAX_M,
        });
    }
    let costs = CostMatrix::new(c, &y.received)?;
    let (nu, total, minimizers) = bruteforce_assignment(&costs)?;
    let mut v = DecoderVerdict::new(nu, &y.truth);
    v.total_cost = Some(total);
    v.ties_broken = (minimizers - 1) as u32;
    Ok(v)
}

/// Default erasure threshold `floor(n (p + delta_GV(2R)/2) / 2)`: halfway
/// between the expected noise weight and half the GV design distance.
/// Rates of 0.5 and above use a design distance of zero.
pub fn default_gmd_threshold(n: usize, rate: f64, p: f64) -> u32 {
    let design = gv_distance((2.0 * rate).clamp(0.0, 1.0)).expect("clamped");
    (n as f64 * (p + design / 2.0) / 2.0).floor() as u32
}

/// Two-step decoder.
///
/// Step 1 decodes each row independently and erases rows whose nearest
/// codeword is farther than `threshold`; rows that claim the same codeword
/// are all erased too. Step 2 matches the erased rows to the unclaimed
/// codewords by minimum-cost assignment, so the result is a permutation.
pub fn decode_gmd(
    c: &Codebook,
    y: &ChannelOutput,
    threshold: u32,
    tie_seed: u64,
) -> Result<DecoderVerdict> {
    if threshold as usize > c.n() {
        return Err(Error::InvalidArgument(format!(
            "GMD threshold {threshold} exceeds n = {}",
            c.n()
        )));
    }
    let costs = CostMatrix::new(c, &y.received)?;
    let m = costs.m();
    let mut rng = ChaCha8Rng::seed_from_u64(tie_seed);
    let mut ties = 0u32;
    let mut argmin = Vec::new();
    let mut tentative: Vec<Option<usize>> = vec![None; m];
    let mut claims = vec![0u32; m];

    for (j, slot) in tentative.iter_mut().enumerate() {
        let d = nearest(costs.row(j), &mut argmin);
        if d > threshold {
            continue;
        }
        let k = if argmin.len() > 1 {
            ties += 1;
            argmin[rng.gen_range(0..argmin.len())]
        } else {
            argmin[0]
        };
        *slot = Some(k);
        claims[k] += 1;
    }

    let mut nu = vec![usize::MAX; m];
    let mut claimed = vec![false; m];
    let mut erased = Vec::new();
    for (j, slot) in tentative.iter().enumerate() {
        match *slot {
            Some(k) if claims[k] == 1 => {
                nu[j] = k;
                claimed[k] = true;
            }
            _ => erased.push(j),
        }
    }

    let free: Vec<usize> = (0..m).filter(|&k| !claimed[k]).collect();
    debug_assert_eq!(free.len(), erased.len());
    let (sub, _) = min_cost_assignment(erased.len(), |a, b| costs.get(erased[a], free[b]) as i64);
    for (a, &b) in sub.iter().enumerate() {
        nu[erased[a]] = free[b];
    }

    let total = costs.cost_of(&nu);
    let mut v = DecoderVerdict::new(nu, &y.truth);
    v.total_cost = Some(total);
    v.ties_broken = ties;
    v.erased = erased;
    Ok(v)
}

/// Which decoder to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DecoderKind {
    Independent,
    Joint,
    Gmd,
    BruteForce,
}

impl DecoderKind {
    pub fn name(&self) -> &'static str {
        match self {
            DecoderKind::Independent => "independent",
            DecoderKind::Joint => "joint",
            DecoderKind::Gmd => "gmd",
            DecoderKind::BruteForce => "bruteforce",
        }
    }
}

impl std::str::FromStr for DecoderKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "independent" => Ok(DecoderKind::Independent),
            "joint" => Ok(DecoderKind::Joint),
            "gmd" => Ok(DecoderKind::Gmd),
            "bruteforce" => Ok(DecoderKind::BruteForce),
            other => Err(Error::InvalidArgument(format!("unknown decoder {other:?}"))),
        }
    }
}

/// Dispatches to the decoder named by `kind`. `gmd_threshold` is only read
/// by the GMD decoder.
pub fn decode(
    kind: DecoderKind,
    c: &Codebook,
    y: &ChannelOutput,
    gmd_threshold: u32,
    tie_seed: u64,
) -> Result<DecoderVerdict> {
    match kind {
        DecoderKind::Independent => decode_independent(c, y, tie_seed),
        DecoderKind::Joint => decode_joint_assignment(c, y),
        DecoderKind::Gmd => decode_gmd(c, y, gmd_threshold, tie_seed),
        DecoderKind::BruteForce => decode_joint_bruteforce(c, y),
    }
}
