//! Seeded, schedule-independent Monte Carlo estimation of the
//! bee-identification error probability, with Wilson intervals and
//! least-squares exponent fits.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::channel::{sample_permutation, transmit, PermutationMap};
use crate::codebook::{
    barcode_count, default_epsilon, generate_rce, generate_trc, Codebook, Ensemble,
    DEFAULT_TRC_ATTEMPTS,
};
use crate::decoders::{decode, default_gmd_threshold, DecoderKind, BRUTEFORCE_MAX_M};
use crate::error::{Error, Result};
use crate::exponents::ChannelParam;

/// Standard-normal quantile for a two-sided 95% interval.
pub const Z_95: f64 = 1.959_963_984_540_054;

// Salts separating the independent random streams of one trial.
const SALT_CODEBOOK: u64 = 0x636f_6465_626f_6f6b;
const SALT_PERMUTATION: u64 = 0x7065_726d_7574_6531;
const SALT_NOISE: u64 = 0x6e6f_6973_655f_7365;
const SALT_TIES: u64 = 0x7469_6573_5f73_6565;
const SALT_FIXED: u64 = 0x6669_7865_645f_6362;

/// SplitMix64 finalizer.
#[inline]
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[inline]
fn hash2(a: u64, b: u64) -> u64 {
    mix64(mix64(a) ^ b)
}

/// Seed of trial `trial` in the cell with blocklength `n`.
pub fn trial_seed(base_seed: u64, n: usize, trial: u64) -> u64 {
    hash2(hash2(base_seed, n as u64), trial)
}

/// Seeds driving one trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialSeeds {
    pub codebook: u64,
    pub permutation: u64,
    pub noise: u64,
    pub ties: u64,
}

impl TrialSeeds {
    pub fn derive(base_seed: u64, n: usize, trial: u64) -> Self {
        let s = trial_seed(base_seed, n, trial);
        Self {
            codebook: hash2(s, SALT_CODEBOOK),
            permutation: hash2(s, SALT_PERMUTATION),
            noise: hash2(s, SALT_NOISE),
            ties: hash2(s, SALT_TIES),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub n_list: Vec<usize>,
    /// Nominal rate; each cell uses `m = max(2, round(2^{nR}))`.
    pub rate: f64,
    pub channel: ChannelParam,
    /// `Rce` or `Trc`.
    pub ensemble: Ensemble,
    /// TRC slack; `None` picks [`default_epsilon`] at the realized rate.
    pub epsilon: Option<f64>,
    pub decoder: DecoderKind,
    pub trials: u64,
    pub base_seed: u64,
    pub fresh_codebook_per_trial: bool,
    /// GMD erasure threshold; `None` picks [`default_gmd_threshold`].
    pub gmd_threshold: Option<u32>,
    /// Skip the permutation draw and always send the identity. Only sound
    /// for decoders that break ties at random: the assignment solver's
    /// deterministic tie-breaking favours the identity, so joint and GMD
    /// error rates come out optimistic whenever ties occur.
    pub fix_identity: bool,
}

impl ExperimentConfig {
    /// A config with the defaults: RCE, joint decoding, a fresh codebook per
    /// trial, genuine random permutations.
    pub fn new(
        n_list: Vec<usize>,
        rate: f64,
        channel: ChannelParam,
        trials: u64,
        base_seed: u64,
    ) -> Self {
        Self {
            n_list,
            rate,
            channel,
            ensemble: Ensemble::Rce,
            epsilon: None,
            decoder: DecoderKind::Joint,
            trials,
            base_seed,
            fresh_codebook_per_trial: true,
            gmd_threshold: None,
            fix_identity: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidArgument("trials must be >= 1".into()));
        }
        if !(self.rate.is_finite() && self.rate > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "rate must be > 0, got {}",
                self.rate
            )));
        }
        if self.n_list.is_empty() || self.n_list.contains(&0) {
            return Err(Error::InvalidArgument(
                "need at least one blocklength, all >= 1".into(),
            ));
        }
        match self.ensemble {
            Ensemble::Rce => {}
            Ensemble::Trc if self.rate < 0.5 => {}
            Ensemble::Trc => {
                return Err(Error::RateOutOfRange {
                    what: "the TRC ensemble",
                    rate: self.rate,
                    limit: 0.5,
                })
            }
            Ensemble::Explicit => {
                return Err(Error::InvalidArgument(
                    "experiments sample RCE or TRC codebooks".into(),
                ))
            }
        }
        if self.decoder == DecoderKind::BruteForce {
            for &n in &self.n_list {
                let m = barcode_count(n, self.rate)?;
                if m > BRUTEFORCE_MAX_M {
                    return Err(Error::TooManyRows {
                        m,
                        max: BRUTEFORCE_MAX_M,
                    });
                }
            }
        }
        Ok(())
    }
}

/// Error counts and derived estimates for one `(n, R, p, decoder)` cell.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialStats {
    pub n: usize,
    pub m: usize,
    pub realized_rate: f64,
    pub p: f64,
    pub ensemble: Ensemble,
    pub decoder: DecoderKind,
    pub trials: u64,
    pub errors: u64,
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// `-log2(p_hat) / n`, present when at least one error was seen.
    pub exponent_hat: Option<f64>,
}

impl TrialStats {
    /// Builds the summary from raw counts. Zero-error cells get the
    /// one-sided rule-of-three bound `[0, 3/trials]`.
    #[allow(clippy::too_many_arguments)]
    pub fn from_counts(
        n: usize,
        m: usize,
        p: f64,
        ensemble: Ensemble,
        decoder: DecoderKind,
        trials: u64,
        errors: u64,
    ) -> Self {
        let p_hat = errors as f64 / trials as f64;
        let (ci_low, ci_high) = if errors == 0 {
            (0.0, (3.0 / trials as f64).min(1.0))
        } else {
            wilson_interval(errors, trials, Z_95)
        };
        Self {
            n,
            m,
            realized_rate: (m as f64).log2() / n as f64,
            p,
            ensemble,
            decoder,
            trials,
            errors,
            p_hat,
            ci_low,
            ci_high,
            exponent_hat: (errors > 0).then(|| -p_hat.log2() / n as f64),
        }
    }
}

/// Wilson score interval for a binomial proportion.
///
/// # Panics
///
/// If `trials == 0` or `errors > trials`.
pub fn wilson_interval(errors: u64, trials: u64, z: f64) -> (f64, f64) {
    assert!(
        trials >= 1 && errors <= trials,
        "need 0 <= errors <= trials, trials >= 1"
    );
    let n = trials as f64;
    let p = errors as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    // Clamp so the exact boundary cases come out as exactly 0 and 1.
    let low = if errors == 0 {
        0.0
    } else {
        (center - half).max(0.0)
    };
    let high = if errors == trials {
        1.0
    } else {
        (center + half).min(1.0)
    };
    (low.min(p), high.max(p))
}

/// Fixed-codebook seed for cell `n`.
pub fn fixed_codebook_seed(base_seed: u64, n: usize) -> u64 {
    hash2(hash2(base_seed, n as u64), SALT_FIXED)
}

fn sample_codebook(cfg: &ExperimentConfig, n: usize, m: usize, seed: u64) -> Result<Codebook> {
    match cfg.ensemble {
        Ensemble::Trc => {
            let rate = (m as f64).log2() / n as f64;
            let eps = cfg.epsilon.unwrap_or_else(|| default_epsilon(rate));
            generate_trc(n, m, eps, seed, DEFAULT_TRC_ATTEMPTS)
        }
        _ => generate_rce(n, m, seed),
    }
}

/// Runs one trial and reports whether recovery failed.
fn run_trial(
    cfg: &ExperimentConfig,
    codebook: &Codebook,
    threshold: u32,
    seeds: TrialSeeds,
) -> Result<bool> {
    let pi = if cfg.fix_identity {
        PermutationMap::identity(codebook.m())
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seeds.permutation);
        sample_permutation(codebook.m(), &mut rng)
    };
    let y = transmit(codebook, &pi, cfg.channel, seeds.noise)?;
    let v = decode(cfg.decoder, codebook, &y, threshold, seeds.ties)?;
    Ok(!v.exact_recovery)
}

fn gmd_threshold_for(cfg: &ExperimentConfig, n: usize, m: usize) -> u32 {
    cfg.gmd_threshold
        .unwrap_or_else(|| default_gmd_threshold(n, (m as f64).log2() / n as f64, cfg.channel.p()))
}

/// Estimates the error probability at blocklength `n`.
///
/// Trial `t` draws everything from `TrialSeeds::derive(base_seed, n, t)`, so
/// counts do not depend on the thread pool or evaluation order, and two
/// decoders run with the same config see identical channel realizations.
pub fn run_cell(cfg: &ExperimentConfig, n: usize) -> Result<TrialStats> {
    cfg.validate()?;
    if !cfg.n_list.contains(&n) {
        return Err(Error::InvalidArgument(format!(
            "n = {n} is not in the configured blocklengths"
        )));
    }
    let m = barcode_count(n, cfg.rate)?;
    let threshold = gmd_threshold_for(cfg, n, m);
    let errors = if cfg.fresh_codebook_per_trial {
        (0..cfg.trials)
            .into_par_iter()
            .map(|t| {
                let seeds = TrialSeeds::derive(cfg.base_seed, n, t);
                let c = sample_codebook(cfg, n, m, seeds.codebook)?;
                run_trial(cfg, &c, threshold, seeds).map(u64::from)
            })
            .try_reduce(|| 0, |a, b| Ok(a + b))?
    } else {
        let c = sample_codebook(cfg, n, m, fixed_codebook_seed(cfg.base_seed, n))?;
        count_errors(cfg, &c, n, threshold)?
    };
    Ok(TrialStats::from_counts(
        n,
        m,
        cfg.channel.p(),
        cfg.ensemble,
        cfg.decoder,
        cfg.trials,
        errors,
    ))
}

fn count_errors(cfg: &ExperimentConfig, c: &Codebook, n: usize, threshold: u32) -> Result<u64> {
    (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            run_trial(cfg, c, threshold, TrialSeeds::derive(cfg.base_seed, n, t)).map(u64::from)
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))
}

/// Runs `cfg.trials` trials against a caller-supplied codebook. `cfg.n_list`,
/// `rate` and `ensemble` are ignored; the cell is labelled with the
/// codebook's own dimensions.
pub fn run_fixed_codebook(cfg: &ExperimentConfig, codebook: &Codebook) -> Result<TrialStats> {
    if cfg.trials == 0 {
        return Err(Error::InvalidArgument("trials must be >= 1".into()));
    }
    if cfg.decoder == DecoderKind::BruteForce && codebook.m() > BRUTEFORCE_MAX_M {
        return Err(Error::TooManyRows {
            m: codebook.m(),
            max: BRUTEFORCE_MAX_M,
        });
    }
    let threshold = gmd_threshold_for(cfg, codebook.n(), codebook.m());
    let errors = count_errors(cfg, codebook, codebook.n(), threshold)?;
    Ok(TrialStats::from_counts(
        codebook.n(),
        codebook.m(),
        cfg.channel.p(),
        codebook.ensemble(),
        cfg.decoder,
        cfg.trials,
        errors,
    ))
}

/// Every cell of `cfg`, in `n_list` order.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<TrialStats>> {
    cfg.n_list.iter().map(|&n| run_cell(cfg, n)).collect()
}

/// Least-squares line through `(n, -log2 p_hat)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExponentFit {
    /// Empirical exponent in bits per channel use.
    pub slope: f64,
    pub intercept: f64,
    /// Observed minus fitted `-log2 p_hat`, one per cell used.
    pub residuals: Vec<f64>,
    /// Blocklengths of the cells used.
    pub n_used: Vec<usize>,
}

/// Fits `-log2 p_hat = slope * n + intercept` over cells with at least one
/// error. Needs three such cells at strictly increasing `n`.
pub fn estimate_exponent(cells: &[TrialStats]) -> Result<ExponentFit> {
    let used: Vec<&TrialStats> = cells.iter().filter(|c| c.errors > 0).collect();
    if used.len() < 3 {
        return Err(Error::InsufficientErrors {
            needed: 3,
            got: used.len(),
        });
    }
    if used.windows(2).any(|w| w[1].n <= w[0].n) {
        return Err(Error::InvalidArgument(
            "cells must have strictly increasing n".into(),
        ));
    }
    let xs: Vec<f64> = used.iter().map(|c| c.n as f64).collect();
    let ys: Vec<f64> = used.iter().map(|c| -c.p_hat.log2()).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residuals = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| y - (slope * x + intercept))
        .collect();
    Ok(ExponentFit {
        slope,
        intercept,
        residuals,
        n_used: used.iter().map(|c| c.n).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(n: usize, p_hat: f64) -> TrialStats {
        let trials = 1u64 << 40;
        let errors = (p_hat * trials as f64).round() as u64;
        TrialStats::from_counts(n, 2, 0.1, Ensemble::Rce, DecoderKind::Joint, trials, errors)
    }

    #[test]
    fn wilson_examples() {
        assert_eq!(wilson_interval(0, 1, 1.96).0, 0.0);
        assert_eq!(wilson_interval(7, 7, 1.96).1, 1.0);
        let (lo, hi) = wilson_interval(50, 100, 1.96);
        // Closed form at p = 1/2: 0.5 -+ 1.96 sqrt(0.0025 + 0.00009604) / 1.038416
        assert!((lo - 0.403_829_829).abs() < 1e-6, "{lo}");
        assert!((hi - 0.596_170_171).abs() < 1e-6, "{hi}");
    }

    #[test]
    fn wilson_contains_estimate() {
        for trials in [1u64, 2, 10, 1000] {
            for errors in 0..=trials.min(20) {
                let (lo, hi) = wilson_interval(errors, trials, Z_95);
                let p = errors as f64 / trials as f64;
                assert!(lo <= p && p <= hi && lo >= 0.0 && hi <= 1.0);
            }
        }
    }

    #[test]
    fn zero_error_cells_use_rule_of_three() {
        let s = TrialStats::from_counts(10, 4, 0.1, Ensemble::Rce, DecoderKind::Joint, 300, 0);
        assert_eq!((s.p_hat, s.ci_low), (0.0, 0.0));
        assert!((s.ci_high - 0.01).abs() < 1e-15);
        assert_eq!(s.exponent_hat, None);
        let s = TrialStats::from_counts(10, 4, 0.1, Ensemble::Rce, DecoderKind::Joint, 300, 3);
        assert!((s.exponent_hat.unwrap() - 100f64.log2() / 10.0).abs() < 1e-12);
        assert_eq!(s.realized_rate, 0.2);
    }

    #[test]
    fn exact_exponential_gives_exact_slope() {
        let c = 0.3;
        let cells: Vec<_> = [8, 12, 16, 20]
            .iter()
            .map(|&n| synthetic(n, (-c * n as f64).exp2()))
            .collect();
        let fit = estimate_exponent(&cells).unwrap();
        assert!((fit.slope - c).abs() < 1e-6, "{}", fit.slope);
        assert!(fit.intercept.abs() < 1e-5);
        assert!(fit.residuals.iter().all(|r| r.abs() < 1e-5));
    }

    #[test]
    fn noisy_exponential_slope() {
        let c = 0.25;
        let jitter = [0.1, -0.1, -0.1, 0.1, 0.1, -0.1];
        let cells: Vec<_> = [10, 14, 18, 22, 26, 30]
            .iter()
            .zip(jitter)
            .map(|(&n, j)| synthetic(n, (-c * n as f64 + j).exp2()))
            .collect();
        let fit = estimate_exponent(&cells).unwrap();
        assert!((fit.slope - c).abs() < 0.05, "{}", fit.slope);
    }

    #[test]
    fn exponent_needs_three_error_cells() {
        let mut cells = vec![synthetic(8, 0.1), synthetic(12, 0.05)];
        cells.push(TrialStats::from_counts(
            16,
            2,
            0.1,
            Ensemble::Rce,
            DecoderKind::Joint,
            10,
            0,
        ));
        assert!(matches!(
            estimate_exponent(&cells),
            Err(Error::InsufficientErrors { needed: 3, got: 2 })
        ));
        let unordered = vec![synthetic(12, 0.1), synthetic(8, 0.05), synthetic(16, 0.01)];
        assert!(estimate_exponent(&unordered).is_err());
    }

    #[test]
    fn config_validation() {
        let ch = ChannelParam::new(0.05).unwrap();
        let base = ExperimentConfig::new(vec![12], 0.25, ch, 10, 1);
        assert!(base.validate().is_ok());
        assert!(ExperimentConfig {
            trials: 0,
            ..base.clone()
        }
        .validate()
        .is_err());
        assert!(ExperimentConfig {
            rate: 0.0,
            ..base.clone()
        }
        .validate()
        .is_err());
        assert!(ExperimentConfig {
            ensemble: Ensemble::Trc,
            rate: 0.5,
            ..base.clone()
        }
        .validate()
        .is_err());
        let bf = ExperimentConfig {
            decoder: DecoderKind::BruteForce,
            ..base.clone()
        };
        assert!(bf.validate().is_ok());
        assert!(ExperimentConfig {
            n_list: vec![16],
            ..bf
        }
        .validate()
        .is_err());
        assert!(run_cell(&base, 13).is_err());
    }

    #[test]
    fn seeds_are_distinct_streams() {
        let s = TrialSeeds::derive(1, 12, 0);
        let set: std::collections::HashSet<_> = [s.codebook, s.permutation, s.noise, s.ties].into();
        assert_eq!(set.len(), 4);
        assert_ne!(TrialSeeds::derive(1, 12, 1), s);
        assert_ne!(TrialSeeds::derive(1, 13, 0), s);
        assert_ne!(TrialSeeds::derive(2, 12, 0), s);
    }
}
