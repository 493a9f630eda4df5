//! Average-metric models and the constrained two-dimensional maximization of
//! the expected sum rate over the time split `rho` and energy split `lambda`.
//!
//! The average models condition on within-beamwidth events: with probability
//! `p_a1` the predicted direction lands inside every relevant half-power lobe
//! and all array gains sit at their maxima, otherwise they vanish. The
//! communication-only sub-slot's event probability couples back to `(rho,
//! lambda)` through the accuracy proxy: more reflected energy and more joint
//! symbols shrink the fine-estimation error, raising the probability that the
//! refined beam stays inside the lobes.

use crate::tracking::{event_probability, PcrbProxy};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum OptimizerError {
    #[error("average constant {name} must be positive and finite, got {value}")]
    InvalidConstant { name: &'static str, value: f64 },
    #[error("event probability must lie in [0, 1], got {0}")]
    InvalidProbability(f64),
    #[error("grid resolution must lie in (0, 0.5], got {0}")]
    InvalidResolution(f64),
}

/// Constants of the average models:
/// `c_r = P_R N M L^2 / sigma2_wr` (maximum sensing SNR at full reflection),
/// `c_t = mu_c^2 P_T N L^2 / sigma2_wt` (communication SNR constant, carrying
/// the squared mean short-range magnitude for dimensional consistency), and
/// the prediction event probability `p_a1` inherited from the previous slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AverageBudget {
    c_r: f64,
    c_t: f64,
    p_a1: f64,
}

impl AverageBudget {
    pub fn new(c_r: f64, c_t: f64, p_a1: f64) -> Result<Self, OptimizerError> {
        if !(c_r > 0.0) || !c_r.is_finite() {
            return Err(OptimizerError::InvalidConstant {
                name: "c_r",
                value: c_r,
            });
        }
        if !(c_t > 0.0) || !c_t.is_finite() {
            return Err(OptimizerError::InvalidConstant {
                name: "c_t",
                value: c_t,
            });
        }
        if !(0.0..=1.0).contains(&p_a1) {
            return Err(OptimizerError::InvalidProbability(p_a1));
        }
        Ok(Self { c_r, c_t, p_a1 })
    }

    pub fn c_r(&self) -> f64 {
        self.c_r
    }

    pub fn c_t(&self) -> f64 {
        self.c_t
    }

    pub fn p_a1(&self) -> f64 {
        self.p_a1
    }
}

/// Average combiner-output SNR of the joint sub-slot: `lambda * p_a1 * c_r`.
pub fn avg_sensing_snr(budget: &AverageBudget, lambda: f64) -> f64 {
    debug_assert!(lambda > 0.0 && lambda <= 1.0);
    lambda * budget.p_a1 * budget.c_r
}

/// Average rate of the joint sub-slot: `p_a1 * log2(1 + (1 - lambda) c_t)`.
pub fn avg_rate_subslot1(budget: &AverageBudget, lambda: f64) -> f64 {
    debug_assert!(lambda > 0.0 && lambda <= 1.0);
    budget.p_a1 * (1.0 + (1.0 - lambda) * budget.c_t).log2()
}

/// How the communication-only event probability is closed over `(rho, lambda)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Pa2Closure<'a> {
    /// Freeze the probability at a constant (diagnostic mode).
    Fixed(f64),
    /// Gaussian closure over the accuracy proxy: the fine-estimation angle
    /// standard deviations follow `sqrt(kappa_q / (rho * slot_symbols * avg
    /// SNR))` and the probability is the within-half-lobe mass on both axes.
    Model {
        hpbw_effective: (f64, f64),
        proxy: &'a PcrbProxy,
        /// Symbols per slot, `delta_t / t_u`.
        slot_symbols: f64,
    },
}

/// Fine-estimation event probability under the Gaussian closure.
pub fn p_a2_model(
    budget: &AverageBudget,
    rho: f64,
    lambda: f64,
    hpbw_effective: (f64, f64),
    proxy: &PcrbProxy,
    slot_symbols: f64,
) -> f64 {
    debug_assert!(rho > 0.0 && rho <= 1.0);
    debug_assert!(lambda > 0.0 && lambda <= 1.0);
    debug_assert!(slot_symbols > 0.0);
    let measurements = rho * slot_symbols;
    let denom = measurements * avg_sensing_snr(budget, lambda);
    let sigma_theta = (proxy.kappa_theta / denom).sqrt();
    let sigma_phi = (proxy.kappa_phi / denom).sqrt();
    event_probability((sigma_theta, sigma_phi), hpbw_effective)
}

fn pa2_value(budget: &AverageBudget, rho: f64, lambda: f64, closure: &Pa2Closure) -> f64 {
    match closure {
        Pa2Closure::Fixed(p) => *p,
        Pa2Closure::Model {
            hpbw_effective,
            proxy,
            slot_symbols,
        } => p_a2_model(budget, rho, lambda, *hpbw_effective, proxy, *slot_symbols),
    }
}

/// Expected sum rate of one slot:
/// `rho * p_a1 * log2(1 + (1 - lambda) c_t) + (1 - rho) * p_a2 * log2(1 + c_t)`.
pub fn expected_sum_rate(
    budget: &AverageBudget,
    rho: f64,
    lambda: f64,
    pa2: &Pa2Closure,
) -> f64 {
    debug_assert!(rho > 0.0 && rho <= 1.0);
    rho * avg_rate_subslot1(budget, lambda)
        + (1.0 - rho) * pa2_value(budget, rho, lambda, pa2) * (1.0 + budget.c_t).log2()
}

/// Outcome of the two-dimensional split search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitDecision {
    pub rho: f64,
    pub lambda: f64,
    /// Expected sum rate at the optimum, bits/s/Hz.
    pub objective: f64,
    pub p_a2_at_optimum: f64,
}

/// Exhaustive search over the grid `{1/n, 2/n, ..., 1}^2` with
/// `n = round(1 / grid_resolution)`. Ties break toward smaller `rho`, then
/// larger `lambda`. Deterministic: rerunning yields the identical decision.
pub fn optimize_split(
    budget: &AverageBudget,
    grid_resolution: f64,
    pa2: &Pa2Closure,
) -> Result<SplitDecision, OptimizerError> {
    if !(grid_resolution > 0.0 && grid_resolution <= 0.5) {
        return Err(OptimizerError::InvalidResolution(grid_resolution));
    }
    if let Pa2Closure::Fixed(p) = pa2 {
        if !(0.0..=1.0).contains(p) {
            return Err(OptimizerError::InvalidProbability(*p));
        }
    }
    let n = (1.0 / grid_resolution).round() as usize;
    let nf = n as f64;
    let log_rate2 = (1.0 + budget.c_t).log2();

    // the joint-sub-slot rate depends on lambda only
    let rate1: Vec<f64> = (1..=n)
        .map(|j| avg_rate_subslot1(budget, j as f64 / nf))
        .collect();

    // under the Gaussian closure the probability depends on rho * lambda only,
    // so cache it per integer product i*j
    let mut cache = if matches!(pa2, Pa2Closure::Model { .. }) && n <= 400 {
        vec![f64::NAN; n * n + 1]
    } else {
        Vec::new()
    };

    let mut best: Option<SplitDecision> = None;
    for i in 1..=n {
        let rho = i as f64 / nf;
        for j in 1..=n {
            let lambda = j as f64 / nf;
            let p2 = if cache.is_empty() {
                pa2_value(budget, rho, lambda, pa2)
            } else {
                let key = i * j;
                if cache[key].is_nan() {
                    cache[key] = pa2_value(budget, rho, lambda, pa2);
                }
                cache[key]
            };
            let objective = rho * rate1[j - 1] + (1.0 - rho) * p2 * log_rate2;
            let better = match &best {
                None => true,
                Some(b) => {
                    objective > b.objective
                        || (objective == b.objective && rho == b.rho && lambda > b.lambda)
                }
            };
            if better {
                best = Some(SplitDecision {
                    rho,
                    lambda,
                    objective,
                    p_a2_at_optimum: p2,
                });
            }
        }
    }
    Ok(best.expect("grid is non-empty"))
}
