//! Integrate-and-fire time encoder.
//!
//! The machine adds a bias `b` to the filtered signal, integrates scaled by
//! `1/κ`, and emits a firing time whenever the integral reaches `δ`, then
//! resets:
//!
//! ```text
//! (1/κ) ∫_{t_n}^{t_{n+1}} (y(s) + b) ds = δ
//! ```
//!
//! Because `y` has a closed-form antiderivative `Y`, each next firing time is
//! the root of the strictly increasing function
//! `F(t) = b (t - t_n) + Y(t) - Y(t_n) - κδ`, and `|y| <= c < b` brackets
//! that root inside `[t_n + κδ/(b+c), t_n + κδ/(b-c)]`. Bisection inside the
//! bracket is therefore exact-by-construction, with no stepping error — the
//! simulation is event-driven, not clocked.
//!
//! Firing times alone carry the signal: the amplitude measurements
//! `y_n = -b (t_{n+1} - t_n) + κδ` are recomputed from times, which is also
//! all a hardware decoder can do.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{empirical_max_grid, FilteredSignal};

/// Encoder parameters: bias, integrator scale, and threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TemParams {
    pub bias_b: f64,
    pub kappa: f64,
    pub delta: f64,
}

impl TemParams {
    pub fn new(bias_b: f64, kappa: f64, delta: f64) -> Result<Self> {
        if !(bias_b.is_finite() && bias_b > 0.0) {
            return Err(Error::InvalidTemParams(format!(
                "bias must be positive, got {bias_b}"
            )));
        }
        if !(kappa.is_finite() && kappa > 0.0) {
            return Err(Error::InvalidTemParams(format!(
                "kappa must be positive, got {kappa}"
            )));
        }
        if !(delta.is_finite() && delta > 0.0) {
            return Err(Error::InvalidTemParams(format!(
                "delta must be positive, got {delta}"
            )));
        }
        Ok(Self {
            bias_b,
            kappa,
            delta,
        })
    }

    /// Parameters placed at a chosen operating point: `b = bias_factor · c`
    /// and `δ` sized so the firing-rate condition `(b-c)/(κδ) ≥ (2K+2)/T`
    /// holds with the given margin (> 1 ⇒ strictly inside the feasible
    /// region). Expected firings per period ≈ `margin·(2K+2)·b/(b-c)`.
    pub fn for_signal(
        bound_c: f64,
        k_half: usize,
        period: f64,
        kappa: f64,
        bias_factor: f64,
        margin: f64,
    ) -> Result<Self> {
        if !(bias_factor > 1.0) {
            return Err(Error::InvalidTemParams(format!(
                "bias factor must exceed 1, got {bias_factor}"
            )));
        }
        if !(margin >= 1.0) {
            return Err(Error::InvalidTemParams(format!(
                "margin must be at least 1, got {margin}"
            )));
        }
        // Zero signal has bound 0; pick an arbitrary positive bias scale.
        let c = if bound_c > 0.0 { bound_c } else { 1.0 };
        let bias_b = bias_factor * c;
        let rate_needed = (2 * k_half + 2) as f64 / period;
        let delta = (bias_b - c) / (kappa * rate_needed * margin);
        Self::new(bias_b, kappa, delta)
    }
}

/// Where a trace came from; decoders treat all three identically but tests
/// and reports distinguish them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    Simulated,
    Jittered { sigma: f64 },
    Ingested,
}

/// A strictly increasing sequence of firing times plus the parameters that
/// produced (or are assumed for) it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiringTrace {
    times: Vec<f64>,
    params: TemParams,
    provenance: Provenance,
}

impl FiringTrace {
    pub fn new(times: Vec<f64>, params: TemParams, provenance: Provenance) -> Result<Self> {
        for w in times.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::InvalidArgument(format!(
                    "firing times not strictly increasing: {} then {}",
                    w[0], w[1]
                )));
            }
        }
        if times.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidArgument("non-finite firing time".into()));
        }
        Ok(Self {
            times,
            params,
            provenance,
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn params(&self) -> &TemParams {
        &self.params
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Amplitude measurements from consecutive time differences:
    /// `y_n = -b (t_{n+1} - t_n) + κδ`, length `N - 1`.
    pub fn measurements(&self) -> Vec<f64> {
        let p = &self.params;
        self.times
            .windows(2)
            .map(|w| -p.bias_b * (w[1] - w[0]) + p.kappa * p.delta)
            .collect()
    }

    /// Perturbs every firing time by i.i.d. `Uniform[-σ/2, σ/2]` noise,
    /// deterministically per seed. Perturbed times are re-sorted (large σ can
    /// reorder neighbors) and exact collisions nudged apart by a relative
    /// 1e-12 so the trace invariant survives.
    pub fn add_jitter(&self, sigma: f64, seed: u64) -> Result<FiringTrace> {
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "jitter sigma must be non-negative, got {sigma}"
            )));
        }
        let mut times = self.times.clone();
        if sigma > 0.0 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for t in &mut times {
                let u: f64 = rng.gen::<f64>() - 0.5;
                *t += u * sigma;
            }
            times.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let span = times.last().copied().unwrap_or(1.0).abs().max(1.0);
            for i in 1..times.len() {
                if times[i] <= times[i - 1] {
                    times[i] = times[i - 1] + 1e-12 * span;
                }
            }
        }
        FiringTrace::new(times, self.params, Provenance::Jittered { sigma })
    }
}

/// Simulates the encoder over `[t_start, t_end]`. The integrator starts empty
/// at `t_start` and no firing is recorded there; every subsequent firing is
/// found by bisection to an absolute tolerance of `1e-12 T`.
pub fn encode(
    f: &FilteredSignal,
    params: &TemParams,
    t_start: f64,
    t_end: f64,
) -> Result<FiringTrace> {
    if !(t_start.is_finite() && t_end.is_finite() && t_end > t_start) {
        return Err(Error::InvalidArgument(format!(
            "bad encode window [{t_start}, {t_end}]"
        )));
    }
    let mut c = f.bound_c();
    if params.bias_b <= c {
        return Err(Error::BiasTooSmall {
            bias: params.bias_b,
            bound: c,
        });
    }
    let kd = params.kappa * params.delta;
    let t_per = f.period();
    let tol = 1e-12 * t_per;
    // Hard cap on firings implied by the minimum spacing, plus slack.
    let cap = ((t_end - t_start) * (params.bias_b + c) / kd).ceil() as usize + 4;

    let mut times = Vec::new();
    let mut t_prev = t_start;
    let mut y_prev = f.antiderivative(t_prev);
    let mut refined = false;
    while times.len() <= cap {
        let next = match solve_next(f, params, c, t_prev, y_prev, tol) {
            Ok(t) => t,
            Err(Error::BracketFailure { .. }) if !refined => {
                // The grid scan behind bound_c may have missed the true peak;
                // rescan denser once and retry with the wider bracket.
                refined = true;
                c = (empirical_max_grid(f, 100_000) * (1.0 + 1e-6)).max(c);
                if params.bias_b <= c {
                    return Err(Error::BiasTooSmall {
                        bias: params.bias_b,
                        bound: c,
                    });
                }
                solve_next(f, params, c, t_prev, y_prev, tol)?
            }
            Err(e) => return Err(e),
        };
        if next > t_end {
            break;
        }
        times.push(next);
        t_prev = next;
        y_prev = f.antiderivative(next);
    }
    FiringTrace::new(times, *params, Provenance::Simulated)
}

/// One firing step: root of `F(t) = b (t - t_prev) + Y(t) - Y(t_prev) - κδ`
/// inside the spacing bracket.
fn solve_next(
    f: &FilteredSignal,
    params: &TemParams,
    c: f64,
    t_prev: f64,
    y_prev: f64,
    tol: f64,
) -> Result<f64> {
    let kd = params.kappa * params.delta;
    let b = params.bias_b;
    let eval_f = |t: f64| b * (t - t_prev) + f.antiderivative(t) - y_prev - kd;

    let mut lo = t_prev + kd / (b + c);
    let mut hi = t_prev + kd / (b - c);
    if hi - lo <= tol {
        return Ok(0.5 * (lo + hi));
    }
    let slop = 1e-12 * kd;
    let f_lo = eval_f(lo);
    let f_hi = eval_f(hi);
    if f_lo > slop || f_hi < -slop {
        return Err(Error::BracketFailure { t_prev });
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if eval_f(mid) <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= tol {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Outcome of the firing-rate condition `(b-c)/(κδ) ≥ (2K+2)/T`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateCheck {
    pub satisfied: bool,
    /// Ratio of achieved to required rate; ≥ 1 iff satisfied.
    pub margin: f64,
}

/// Checks the sufficient condition for recoverability: the encoder must fire
/// at least `2K+2` times per period.
pub fn check_rate(params: &TemParams, c: f64, k_half: usize, period: f64) -> RateCheck {
    let achieved = (params.bias_b - c) / (params.kappa * params.delta);
    let required = (2 * k_half + 2) as f64 / period;
    let margin = achieved / required;
    RateCheck {
        satisfied: margin >= 1.0,
        margin,
    }
}
