//! Self-checks run by `beeid verify`: the bound inequalities over a grid of
//! crossover probabilities, and joint-decoder agreement with exhaustive
//! search on random small instances.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::channel::{sample_permutation, transmit};
use crate::codebook::generate_rce;
use crate::decoders::{bruteforce_assignment, solve_assignment, CostMatrix};
use crate::exponents::{BoundProfile, ChannelParam};

/// Slack allowed on non-strict inequalities.
pub const SLACK: f64 = 1e-9;

/// Rates sampled per crossover probability in each rate sweep.
pub const RATES_PER_P: usize = 100;

/// Outcome of one named check.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub evaluated: usize,
    /// First violation, formatted with the offending `(p, R)`.
    pub failure: Option<String>,
}

impl CheckResult {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            evaluated: 0,
            failure: None,
        }
    }

    fn record(&mut self, ok: bool, detail: impl FnOnce() -> String) {
        self.evaluated += 1;
        if !ok && self.failure.is_none() {
            self.failure = Some(detail());
        }
    }

    pub fn passed(&self) -> bool {
        self.failure.is_none()
    }
}

/// `count` crossover probabilities evenly spaced strictly inside
/// `(0.001, 0.499)`.
pub fn p_grid(count: usize) -> Vec<f64> {
    let (lo, hi) = (0.001, 0.499);
    (1..=count)
        .map(|i| lo + (hi - lo) * i as f64 / (count + 1) as f64)
        .collect()
}

/// Runs every inequality on each profile. Profiles are taken as given so
/// callers can inject faults into individual constants.
pub fn check_profiles(profiles: &[BoundProfile]) -> Vec<CheckResult> {
    let mut r0_vs_rcr = CheckResult::new("R0 <= 2 R_cr");
    let mut r0_vs_r1_trc = CheckResult::new("2 R0 >= R1 + 2 R_TRC");
    let mut r1_gt_r0 = CheckResult::new("R1 > R0");
    let mut deltas = CheckResult::new("delta_hat < delta_tilde < 0.5");
    let mut rtrc_lt_rhat = CheckResult::new("R_TRC < R_hat");
    let mut lambda = CheckResult::new("lambda_p = min(2 R0/3, R1/2)");
    let mut jd_beats_id = CheckResult::new("RCE-JD > RCE-ID where R0 > 2R");
    let mut eta_sign = CheckResult::new("RCE-JD > 0 iff R < lambda_p");
    let mut trc_beats_rce = CheckResult::new("TRC-JD > RCE-JD for R < R_TRC");
    let mut trc_id_order = CheckResult::new("TRC-ID >= RCE-ID for R < R_TRC");
    let mut twice = CheckResult::new("TRC-JD = 2 TRC-ID");

    for pr in profiles {
        let p = pr.p;
        r0_vs_rcr.record(pr.r0 <= 2.0 * pr.r_cr + SLACK, || {
            format!("p={p}: R0={} > 2 R_cr={}", pr.r0, 2.0 * pr.r_cr)
        });
        r0_vs_r1_trc.record(2.0 * pr.r0 + SLACK >= pr.r1 + 2.0 * pr.r_trc, || {
            format!(
                "p={p}: 2R0={} < R1+2R_TRC={}",
                2.0 * pr.r0,
                pr.r1 + 2.0 * pr.r_trc
            )
        });
        r1_gt_r0.record(pr.r1 > pr.r0, || {
            format!("p={p}: R1={} <= R0={}", pr.r1, pr.r0)
        });
        deltas.record(
            pr.delta_hat < pr.delta_tilde && pr.delta_tilde < 0.5,
            || {
                format!(
                    "p={p}: delta_hat={} delta_tilde={}",
                    pr.delta_hat, pr.delta_tilde
                )
            },
        );
        rtrc_lt_rhat.record(pr.r_trc < pr.r_hat, || {
            format!("p={p}: R_TRC={} >= R_hat={}", pr.r_trc, pr.r_hat)
        });
        lambda.record(pr.lambda_p == (2.0 * pr.r0 / 3.0).min(pr.r1 / 2.0), || {
            format!("p={p}: lambda_p={}", pr.lambda_p)
        });

        for k in 0..RATES_PER_P {
            let frac = k as f64 / RATES_PER_P as f64;

            // Sweep below R0/2, where the RCE-ID bound is positive.
            let r = frac * pr.r0 / 2.0;
            jd_beats_id.record(pr.rce_jd(r) > pr.rce_id(r), || {
                format!(
                    "p={p}, R={r}: RCE-JD={} RCE-ID={}",
                    pr.rce_jd(r),
                    pr.rce_id(r)
                )
            });

            // Sweep across lambda_p, up to 2 lambda_p.
            let r = 2.0 * frac * pr.lambda_p;
            if r != pr.lambda_p {
                eta_sign.record((pr.rce_jd(r) > 0.0) == (r < pr.lambda_p), || {
                    format!(
                        "p={p}, R={r}: RCE-JD={} lambda_p={}",
                        pr.rce_jd(r),
                        pr.lambda_p
                    )
                });
            }

            // Sweep below R_TRC.
            let r = frac * pr.r_trc;
            match (pr.trc_id(r), pr.trc_jd(r)) {
                (Some(id), Some(jd)) => {
                    trc_beats_rce.record(jd > pr.rce_jd(r), || {
                        format!("p={p}, R={r}: TRC-JD={jd} RCE-JD={}", pr.rce_jd(r))
                    });
                    trc_id_order.record(id + SLACK >= pr.rce_id(r), || {
                        format!("p={p}, R={r}: TRC-ID={id} RCE-ID={}", pr.rce_id(r))
                    });
                    twice.record((jd - 2.0 * id).abs() <= SLACK, || {
                        format!("p={p}, R={r}: TRC-JD={jd} TRC-ID={id}")
                    });
                }
                _ => twice.record(false, || {
                    format!("p={p}, R={r}: TRC bound missing below R_TRC")
                }),
            }
        }
    }

    vec![
        r0_vs_rcr,
        r0_vs_r1_trc,
        r1_gt_r0,
        deltas,
        rtrc_lt_rhat,
        lambda,
        jd_beats_id,
        eta_sign,
        trc_beats_rce,
        trc_id_order,
        twice,
    ]
}

/// Outcome of the joint-decoder oracle comparison.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleReport {
    pub instances: usize,
    pub cost_mismatches: usize,
    /// Instances whose brute-force minimizer was unique.
    pub unique_minimizers: usize,
    pub permutation_mismatches: usize,
}

impl OracleReport {
    pub fn passed(&self) -> bool {
        self.cost_mismatches == 0 && self.permutation_mismatches == 0
    }
}

/// Compares the assignment solver against exhaustive search on random
/// instances with `m` in 2..=7, `n` in 8..=16 and `p` in {0.05, 0.2}.
pub fn joint_oracle_equivalence(instances: usize, seed: u64) -> OracleReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = OracleReport {
        instances,
        cost_mismatches: 0,
        unique_minimizers: 0,
        permutation_mismatches: 0,
    };
    for _ in 0..instances {
        let m = rng.gen_range(2..=7);
        let n = rng.gen_range(8..=16);
        let p = if rng.gen_bool(0.5) { 0.05 } else { 0.2 };
        let c = generate_rce(n, m, rng.gen()).expect("small codebook");
        let pi = sample_permutation(m, &mut rng);
        let y = transmit(&c, &pi, ChannelParam::new(p).expect("valid p"), rng.gen())
            .expect("shapes match");
        let costs = CostMatrix::new(&c, &y.received).expect("shapes match");
        let (nu, total) = solve_assignment(&costs);
        let (bf_nu, bf_total, minimizers) = bruteforce_assignment(&costs).expect("m <= 7");
        if total != bf_total {
            report.cost_mismatches += 1;
        }
        if minimizers == 1 {
            report.unique_minimizers += 1;
            if nu != bf_nu {
                report.permutation_mismatches += 1;
            }
        }
    }
    report
}
