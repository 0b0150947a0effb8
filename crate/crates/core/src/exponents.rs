//! Closed-form rate, distance and exponent calculators for the BSC, and the
//! composed lower/upper bounds on the bee-identification exponent.
//!
//! Everything here is in bits: logarithms are base 2, rates are
//! `log2(m) / n`, and exponents are the `E` in `2^{-nE}`.

use crate::error::{Error, Result};

/// Maximum bisection steps used by [`gv_distance`].
const GV_MAX_ITERS: usize = 60;
/// Residual target for [`gv_distance`].
const GV_TOL: f64 = 1e-12;

/// Crossover probability of a binary symmetric channel, `0 < p < 0.5`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParam {
    p: f64,
}

impl ChannelParam {
    pub fn new(p: f64) -> Result<Self> {
        if p > 0.0 && p < 0.5 {
            Ok(Self { p })
        } else {
            Err(Error::Domain {
                name: "p",
                value: p,
                domain: "(0, 0.5)",
            })
        }
    }

    /// Like [`ChannelParam::new`] but also admits `p = 0`, for noiseless
    /// oracles in tests. Exponent calculators are meaningless at `p = 0`.
    #[doc(hidden)]
    pub fn new_for_testing(p: f64) -> Result<Self> {
        if (0.0..0.5).contains(&p) {
            Ok(Self { p })
        } else {
            Err(Error::Domain {
                name: "p",
                value: p,
                domain: "[0, 0.5)",
            })
        }
    }

    #[inline]
    pub fn p(&self) -> f64 {
        self.p
    }

    /// `sqrt(4p(1-p))`, the Bhattacharyya parameter of the channel.
    #[inline]
    fn bhattacharyya(&self) -> f64 {
        (4.0 * self.p * (1.0 - self.p)).sqrt()
    }
}

// Unchecked entropy used on arguments that are already known to be in [0, 1].
#[inline]
pub(crate) fn entropy_bits(d: f64) -> f64 {
    if d <= 0.0 || d >= 1.0 {
        return 0.0;
    }
    -d * d.log2() - (1.0 - d) * (1.0 - d).log2()
}

/// Binary entropy `H(delta)` in bits, with `0 log 0 = 0`.
pub fn binary_entropy(delta: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&delta) {
        return Err(Error::Domain {
            name: "delta",
            value: delta,
            domain: "[0, 1]",
        });
    }
    Ok(entropy_bits(delta))
}

/// Binary KL divergence `D(x || y)` in bits.
pub fn binary_kl(x: f64, y: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain {
            name: "x",
            value: x,
            domain: "[0, 1]",
        });
    }
    if !(y > 0.0 && y < 1.0) {
        return Err(Error::Domain {
            name: "y",
            value: y,
            domain: "(0, 1)",
        });
    }
    let mut d = 0.0;
    if x > 0.0 {
        d += x * (x / y).log2();
    }
    if x < 1.0 {
        d += (1.0 - x) * ((1.0 - x) / (1.0 - y)).log2();
    }
    // Rounding can leave a tiny negative value when x == y.
    Ok(d.max(0.0))
}

/// Gilbert-Varshamov relative distance: the `delta` in `[0, 0.5]` with
/// `H(delta) = 1 - rate`, found by bisection on the increasing branch.
pub fn gv_distance(rate: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&rate) {
        return Err(Error::Domain {
            name: "R",
            value: rate,
            domain: "[0, 1]",
        });
    }
    Ok(gv_unchecked(rate))
}

fn gv_unchecked(rate: f64) -> f64 {
    if rate <= 0.0 {
        return 0.5;
    }
    if rate >= 1.0 {
        return 0.0;
    }
    let target = 1.0 - rate;
    let (mut lo, mut hi) = (0.0f64, 0.5f64);
    let mut mid = 0.25;
    for _ in 0..GV_MAX_ITERS {
        mid = 0.5 * (lo + hi);
        let h = entropy_bits(mid);
        if (h - target).abs() <= GV_TOL {
            break;
        }
        if h < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    mid
}

/// `alpha_p = -log2 sqrt(4p(1-p))`, the exponent of the pairwise error
/// probability per unit of Hamming distance.
pub fn alpha_p(ch: ChannelParam) -> f64 {
    -ch.bhattacharyya().log2()
}

/// Cutoff rate `R0(p) = 1 - log2(1 + sqrt(4p(1-p)))`.
pub fn r0(ch: ChannelParam) -> f64 {
    1.0 - (1.0 + ch.bhattacharyya()).log2()
}

/// `R1(p) = 1 - log2(1 + 4p(1-p))`.
pub fn r1(ch: ChannelParam) -> f64 {
    let q = 4.0 * ch.p * (1.0 - ch.p);
    1.0 - (1.0 + q).log2()
}

/// Minimizers `(delta_hat, delta_tilde)` of `1 - H(d) + 2 d alpha_p` and
/// `1 - H(d) + d alpha_p` respectively.
pub fn delta_minimizers(ch: ChannelParam) -> (f64, f64) {
    let q = 4.0 * ch.p * (1.0 - ch.p);
    let b = q.sqrt();
    (q / (1.0 + q), b / (1.0 + b))
}

/// Threshold rates `(r_cr, r_trc, r_hat)`.
pub fn critical_rates(ch: ChannelParam) -> (f64, f64, f64) {
    let sp = ch.p.sqrt();
    let sq = (1.0 - ch.p).sqrt();
    let r_cr = 1.0 - entropy_bits(sp / (sp + sq));
    let (delta_hat, delta_tilde) = delta_minimizers(ch);
    let r_trc = 0.5 * (1.0 - entropy_bits(delta_tilde));
    let r_hat = 0.5 * (1.0 - entropy_bits(delta_hat));
    (r_cr, r_trc, r_hat)
}

/// Gallager's random coding exponent `E_r(R, p)` for the BSC.
///
/// Straight line `R0 - R` below the critical rate, sphere-packing form
/// `D(delta_GV(R) || p)` up to capacity, zero above capacity.
///
/// # Panics
///
/// If `rate` is negative or not finite.
pub fn random_coding_exponent(rate: f64, ch: ChannelParam) -> f64 {
    assert!(rate.is_finite() && rate >= 0.0, "rate must be >= 0");
    let capacity = 1.0 - entropy_bits(ch.p);
    if rate >= capacity {
        return 0.0;
    }
    let (r_cr, _, _) = critical_rates(ch);
    if rate <= r_cr {
        r0(ch) - rate
    } else {
        binary_kl(gv_unchecked(rate), ch.p).expect("delta_GV in [0, 0.5] and p in (0, 0.5)")
    }
}

/// Typical-random-code exponent `alpha_p delta_GV(2R) + R`, valid for
/// `0 <= R < R_TRC(p)`.
pub fn trc_exponent(rate: f64, ch: ChannelParam) -> Result<f64> {
    let (_, r_trc, _) = critical_rates(ch);
    if !(rate >= 0.0 && rate < r_trc) {
        return Err(Error::RateOutOfRange {
            what: "the TRC exponent",
            rate,
            limit: r_trc,
        });
    }
    Ok(alpha_p(ch) * gv_unchecked(2.0 * rate) + rate)
}

/// Linear-programming upper bound on the achievable relative minimum
/// distance: `1/2 - sqrt(g (1 - g))` with `g = delta_GV(1 - R)`.
pub fn delta_lp(rate: f64) -> Result<f64> {
    let g = gv_distance(1.0 - rate).map_err(|_| Error::Domain {
        name: "R",
        value: rate,
        domain: "[0, 1]",
    })?;
    Ok(0.5 - (g * (1.0 - g)).sqrt())
}

#[inline]
fn positive_part(x: f64) -> f64 {
    x.max(0.0)
}

/// Channel-dependent constants used by all the bounds.
///
/// The fields are public so that fault-injection checks can perturb a
/// single constant and watch the bound checks fail.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundProfile {
    pub p: f64,
    pub alpha_p: f64,
    pub r0: f64,
    pub r1: f64,
    pub delta_hat: f64,
    pub delta_tilde: f64,
    pub r_cr: f64,
    pub r_trc: f64,
    pub r_hat: f64,
    pub lambda_p: f64,
}

impl BoundProfile {
    pub fn new(ch: ChannelParam) -> Self {
        let r0 = r0(ch);
        let r1 = r1(ch);
        let (delta_hat, delta_tilde) = delta_minimizers(ch);
        let (r_cr, r_trc, r_hat) = critical_rates(ch);
        Self {
            p: ch.p,
            alpha_p: alpha_p(ch),
            r0,
            r1,
            delta_hat,
            delta_tilde,
            r_cr,
            r_trc,
            r_hat,
            lambda_p: (2.0 * r0 / 3.0).min(r1 / 2.0),
        }
    }

    /// Random coding, independent decoding: `|R0 - 2R|^+`.
    pub fn rce_id(&self, rate: f64) -> f64 {
        positive_part(self.r0 - 2.0 * rate)
    }

    /// `eta_p(R) = min(R1 - 2R, 2 R0 - 3R)`, before clamping.
    pub fn eta(&self, rate: f64) -> f64 {
        (self.r1 - 2.0 * rate).min(2.0 * self.r0 - 3.0 * rate)
    }

    /// Random coding, joint decoding: `|eta_p(R)|^+`.
    pub fn rce_jd(&self, rate: f64) -> f64 {
        positive_part(self.eta(rate))
    }

    /// Typical random code, independent decoding: `alpha_p delta_GV(2R)`
    /// for `R < R_TRC`, absent otherwise.
    pub fn trc_id(&self, rate: f64) -> Option<f64> {
        if rate >= 0.0 && rate < self.r_trc && rate < 0.5 {
            Some(self.alpha_p * gv_unchecked(2.0 * rate))
        } else {
            None
        }
    }

    /// Typical random code, joint decoding: twice [`BoundProfile::trc_id`].
    pub fn trc_jd(&self, rate: f64) -> Option<f64> {
        self.trc_id(rate).map(|v| 2.0 * v)
    }

    /// Upper bound valid for every codebook: `|2 delta_LP(R) alpha_p - R|^+`.
    pub fn upper(&self, rate: f64) -> f64 {
        if rate >= 1.0 {
            return 0.0;
        }
        let dlp = delta_lp(rate).expect("rate in [0, 1)");
        positive_part(2.0 * dlp * self.alpha_p - rate)
    }
}

fn check_rate(rate: f64) {
    assert!(rate.is_finite() && rate >= 0.0, "rate must be >= 0");
}

pub fn bound_rce_id(rate: f64, ch: ChannelParam) -> f64 {
    check_rate(rate);
    BoundProfile::new(ch).rce_id(rate)
}

pub fn bound_rce_jd(rate: f64, ch: ChannelParam) -> f64 {
    check_rate(rate);
    BoundProfile::new(ch).rce_jd(rate)
}

pub fn bound_trc_id(rate: f64, ch: ChannelParam) -> Option<f64> {
    check_rate(rate);
    BoundProfile::new(ch).trc_id(rate)
}

pub fn bound_trc_jd(rate: f64, ch: ChannelParam) -> Option<f64> {
    check_rate(rate);
    BoundProfile::new(ch).trc_jd(rate)
}

pub fn bound_upper(rate: f64, ch: ChannelParam) -> f64 {
    check_rate(rate);
    BoundProfile::new(ch).upper(rate)
}

/// One row of a [`BoundCurve`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundPoint {
    pub rate: f64,
    pub lb_rce_id: f64,
    pub lb_rce_jd: f64,
    pub lb_trc_id: Option<f64>,
    pub lb_trc_jd: Option<f64>,
    pub ub: f64,
}

impl BoundPoint {
    /// Evaluates all five bounds at `rate` under `profile`.
    pub fn evaluate(profile: &BoundProfile, rate: f64) -> Self {
        Self {
            rate,
            lb_rce_id: profile.rce_id(rate),
            lb_rce_jd: profile.rce_jd(rate),
            lb_trc_id: profile.trc_id(rate),
            lb_trc_jd: profile.trc_jd(rate),
            ub: profile.upper(rate),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundCurve {
    pub p: f64,
    pub profile: BoundProfile,
    pub points: Vec<BoundPoint>,
}

/// Evaluates every bound on a uniform grid of `steps` rates spanning
/// `[r_min, r_max]`.
pub fn bound_curve(ch: ChannelParam, r_min: f64, r_max: f64, steps: usize) -> Result<BoundCurve> {
    if !(r_min >= 0.0 && r_min < r_max && r_max.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "rate grid needs 0 <= r_min < r_max, got [{r_min}, {r_max}]"
        )));
    }
    if steps < 2 {
        return Err(Error::InvalidArgument(format!(
            "rate grid needs at least 2 steps, got {steps}"
        )));
    }
    let profile = BoundProfile::new(ch);
    let step = (r_max - r_min) / (steps - 1) as f64;
    let points = (0..steps)
        .map(|i| {
            let rate = if i + 1 == steps {
                r_max
            } else {
                r_min + step * i as f64
            };
            BoundPoint::evaluate(&profile, rate)
        })
        .collect();
    Ok(BoundCurve {
        p: ch.p,
        profile,
        points,
    })
}
