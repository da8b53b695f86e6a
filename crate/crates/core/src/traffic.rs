//! Bounded per-slot arrival processes: i.i.d. Bernoulli, i.i.d. batch,
//! two-state Markov on/off, and a shared-phase rotating on/off kind used
//! to build adversarially correlated traffic for stability experiments.
//!
//! Each model knows its exact mean rate, its per-slot bound, its limiting
//! log moment generating function in closed form, and the Legendre
//! transform of the latter. Sampling goes through [`ArrivalSampler`],
//! whose randomness is a derived substream of a master seed, so runs are
//! reproducible and links are independent by default.

use rand::Rng;
use rand_chacha::ChaCha12Rng;
use thiserror::Error;

use crate::streams;

#[derive(Debug, Error)]
pub enum TrafficError {
    #[error("probability {what} must lie in [0, 1], got {value}")]
    BadProbability { what: &'static str, value: f64 },
    #[error("batch model needs matching, non-empty value and probability lists")]
    BadBatchShape,
    #[error("batch probabilities must be nonnegative and sum to 1 (sum {0})")]
    BadBatchProbs(f64),
    #[error("batch values must be distinct")]
    DuplicateBatchValue,
    #[error("on/off batch size must be positive")]
    ZeroBatch,
    #[error("sync window needs len >= 1 and period >= len, got len {len}, period {period}")]
    BadWindow { len: u32, period: u32 },
    #[error("bound override {given} is below the intrinsic per-slot bound {intrinsic}")]
    BoundBelowIntrinsic { given: u32, intrinsic: u32 },
}

#[derive(Clone, Debug, PartialEq)]
enum Kind {
    Bernoulli {
        p: f64,
    },
    Batch {
        values: Vec<u32>,
        probs: Vec<f64>,
    },
    MarkovOnOff {
        p_on_off: f64,
        p_off_on: f64,
        batch_on: u32,
    },
    /// Deterministic periodic on/off window shifted by a random phase that
    /// is shared by every member of the same named group. Members of one
    /// group with staggered windows form the correlated adversary used in
    /// stability experiments; the delay operations reject this kind.
    SyncOnOff {
        period: u32,
        start: u32,
        len: u32,
        batch: u32,
        group: String,
    },
}

/// A per-link arrival process description. Immutable and shareable;
/// sampling state lives in [`ArrivalSampler`].
#[derive(Clone, Debug, PartialEq)]
pub struct ArrivalModel {
    kind: Kind,
    bound: u32,
}

impl ArrivalModel {
    /// 0 or 1 packet per slot with probability `p` of an arrival.
    pub fn bernoulli(p: f64) -> Result<Self, TrafficError> {
        check_prob("p", p)?;
        Ok(Self {
            kind: Kind::Bernoulli { p },
            bound: 1,
        })
    }

    /// I.i.d. batches: `values[k]` packets with probability `probs[k]`.
    pub fn batch(values: Vec<u32>, probs: Vec<f64>) -> Result<Self, TrafficError> {
        if values.is_empty() || values.len() != probs.len() {
            return Err(TrafficError::BadBatchShape);
        }
        let mut seen = values.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != values.len() {
            return Err(TrafficError::DuplicateBatchValue);
        }
        let sum: f64 = probs.iter().sum();
        if probs.iter().any(|&q| !(0.0..=1.0).contains(&q)) || (sum - 1.0).abs() > 1e-9 {
            return Err(TrafficError::BadBatchProbs(sum));
        }
        let bound = *values.iter().max().unwrap();
        // Renormalize so the probabilities sum to 1 exactly up to f64.
        let probs: Vec<f64> = probs.iter().map(|&q| q / sum).collect();
        Ok(Self {
            kind: Kind::Batch { values, probs },
            bound,
        })
    }

    /// Two-state Markov chain; the ON state emits `batch_on` packets per
    /// slot, OFF emits none. `p_on_off` and `p_off_on` are the switching
    /// probabilities.
    pub fn markov_onoff(p_on_off: f64, p_off_on: f64, batch_on: u32) -> Result<Self, TrafficError> {
        check_prob("p_on_off", p_on_off)?;
        check_prob("p_off_on", p_off_on)?;
        if batch_on == 0 {
            return Err(TrafficError::ZeroBatch);
        }
        Ok(Self {
            kind: Kind::MarkovOnOff {
                p_on_off,
                p_off_on,
                batch_on,
            },
            bound: batch_on,
        })
    }

    /// Periodic window of `len` slots out of `period`, starting at
    /// `start`, emitting `batch` packets per in-window slot. All models
    /// sharing `group` draw one common random phase offset.
    pub fn sync_onoff(
        period: u32,
        start: u32,
        len: u32,
        batch: u32,
        group: impl Into<String>,
    ) -> Result<Self, TrafficError> {
        if len == 0 || period < len || start >= period {
            return Err(TrafficError::BadWindow { len, period });
        }
        if batch == 0 {
            return Err(TrafficError::ZeroBatch);
        }
        Ok(Self {
            kind: Kind::SyncOnOff {
                period,
                start,
                len,
                batch,
                group: group.into(),
            },
            bound: batch,
        })
    }

    /// Declares a larger per-slot bound than the intrinsic one. Sampling
    /// is unchanged; only the declared domain of the rate function grows.
    pub fn with_bound(mut self, bound: u32) -> Result<Self, TrafficError> {
        if bound < self.bound {
            return Err(TrafficError::BoundBelowIntrinsic {
                given: bound,
                intrinsic: self.bound,
            });
        }
        self.bound = bound;
        Ok(self)
    }

    /// Exact mean arrivals per slot.
    pub fn rate(&self) -> f64 {
        match &self.kind {
            Kind::Bernoulli { p } => *p,
            Kind::Batch { values, probs } => values
                .iter()
                .zip(probs)
                .map(|(&v, &q)| v as f64 * q)
                .sum(),
            Kind::MarkovOnOff {
                p_on_off,
                p_off_on,
                batch_on,
            } => {
                if p_on_off + p_off_on == 0.0 {
                    // Chain never leaves its initial state; stationary
                    // initialization splits it evenly.
                    return *batch_on as f64 * 0.5;
                }
                *batch_on as f64 * p_off_on / (p_on_off + p_off_on)
            }
            Kind::SyncOnOff {
                period, len, batch, ..
            } => *batch as f64 * *len as f64 / *period as f64,
        }
    }

    /// Declared per-slot arrival bound.
    pub fn bound(&self) -> u32 {
        self.bound
    }

    /// True for the shared-phase correlated kind, which the delay
    /// operations refuse.
    pub fn is_correlated(&self) -> bool {
        matches!(self.kind, Kind::SyncOnOff { .. })
    }

    pub fn group(&self) -> Option<&str> {
        match &self.kind {
            Kind::SyncOnOff { group, .. } => Some(group),
            _ => None,
        }
    }

    /// Limiting normalized log moment generating function of cumulative
    /// arrivals. Zero at zero for every model; convex.
    pub fn log_mgf(&self, theta: f64) -> f64 {
        if theta == 0.0 {
            return 0.0;
        }
        match &self.kind {
            Kind::Bernoulli { p } => log_mgf_batch(&[0, 1], &[1.0 - p, *p], theta),
            Kind::Batch { values, probs } => log_mgf_batch(values, probs, theta),
            Kind::MarkovOnOff {
                p_on_off,
                p_off_on,
                batch_on,
            } => log_mgf_markov(*p_on_off, *p_off_on, *batch_on, theta),
            Kind::SyncOnOff { .. } => {
                // Deterministic up to a bounded phase: Lambda(theta) is
                // exactly theta times the rate.
                theta * self.rate()
            }
        }
    }

    /// Derivative of [`ArrivalModel::log_mgf`]; equals the rate at zero.
    pub fn d_log_mgf(&self, theta: f64) -> f64 {
        match &self.kind {
            Kind::Bernoulli { p } => d_log_mgf_batch(&[0, 1], &[1.0 - p, *p], theta),
            Kind::Batch { values, probs } => d_log_mgf_batch(values, probs, theta),
            Kind::MarkovOnOff {
                p_on_off,
                p_off_on,
                batch_on,
            } => d_log_mgf_markov(*p_on_off, *p_off_on, *batch_on, theta),
            Kind::SyncOnOff { .. } => self.rate(),
        }
    }

    /// Legendre transform `sup_theta (theta mu - Lambda(theta))`. Returns
    /// infinity outside `[0, bound]`; zero exactly at the mean rate.
    pub fn legendre(&self, mu: f64) -> f64 {
        if !(0.0..=self.bound as f64).contains(&mu) {
            return f64::INFINITY;
        }
        if let Kind::SyncOnOff { .. } = self.kind {
            // Lambda is linear, so the supremum is 0 at the rate and
            // infinite elsewhere.
            return if (mu - self.rate()).abs() <= 1e-12 {
                0.0
            } else {
                f64::INFINITY
            };
        }
        // h(theta) = theta*mu - Lambda(theta) is concave with derivative
        // mu - Lambda'(theta); Lambda' is nondecreasing, so bisect on the
        // derivative sign over a window wide enough for 1e-9 accuracy.
        const CAP: f64 = 64.0;
        let h = |theta: f64| theta * mu - self.log_mgf(theta);
        let dh = |theta: f64| mu - self.d_log_mgf(theta);
        if dh(-CAP) <= 0.0 {
            return h(-CAP).max(0.0);
        }
        if dh(CAP) >= 0.0 {
            return h(CAP).max(0.0);
        }
        let (mut lo, mut hi) = (-CAP, CAP);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if dh(mid) >= 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-13 {
                break;
            }
        }
        h(0.5 * (lo + hi)).max(0.0)
    }

    /// Sampler for this model. `link_key` selects the per-link substream;
    /// the shared-group phase, if any, must be supplied by the caller (see
    /// [`group_phase`]).
    pub fn sampler(&self, master_seed: u64, link_key: u64, phase: Option<u64>) -> ArrivalSampler {
        let mut rng = streams::substream(master_seed, streams::DOM_ARRIVAL, link_key);
        let state = match &self.kind {
            Kind::MarkovOnOff {
                p_on_off, p_off_on, ..
            } => {
                // Start from the stationary distribution.
                let pi_on = if p_on_off + p_off_on == 0.0 {
                    0.5
                } else {
                    p_off_on / (p_on_off + p_off_on)
                };
                SamplerState::Markov {
                    on: rng.random::<f64>() < pi_on,
                }
            }
            Kind::SyncOnOff { .. } => SamplerState::Phase(phase.unwrap_or(0)),
            _ => SamplerState::Stateless,
        };
        ArrivalSampler {
            model: self.clone(),
            rng,
            state,
        }
    }
}

fn check_prob(what: &'static str, p: f64) -> Result<(), TrafficError> {
    if !(0.0..=1.0).contains(&p) || !p.is_finite() {
        return Err(TrafficError::BadProbability { what, value: p });
    }
    Ok(())
}

/// Shared random phase for a named sync group.
pub fn group_phase(master_seed: u64, group: &str) -> u64 {
    let mut rng = streams::substream(
        master_seed,
        streams::DOM_GROUP_PHASE,
        streams::fnv1a(group.as_bytes()),
    );
    rng.random::<u64>() >> 16
}

/// log E[e^(theta A)] for a finite batch law, evaluated in log-sum-exp
/// form so large positive theta cannot overflow.
fn log_mgf_batch(values: &[u32], probs: &[f64], theta: f64) -> f64 {
    let peak = values
        .iter()
        .zip(probs)
        .filter(|(_, &q)| q > 0.0)
        .map(|(&v, _)| theta * v as f64)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for (&v, &q) in values.iter().zip(probs) {
        if q > 0.0 {
            sum += q * (theta * v as f64 - peak).exp();
        }
    }
    peak + sum.ln()
}

fn d_log_mgf_batch(values: &[u32], probs: &[f64], theta: f64) -> f64 {
    let peak = values
        .iter()
        .zip(probs)
        .filter(|(_, &q)| q > 0.0)
        .map(|(&v, _)| theta * v as f64)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut num = 0.0;
    let mut den = 0.0;
    for (&v, &q) in values.iter().zip(probs) {
        if q > 0.0 {
            let w = q * (theta * v as f64 - peak).exp();
            num += v as f64 * w;
            den += w;
        }
    }
    num / den
}

/// log of the Perron root of the tilted two-state transition matrix
/// `P_xy e^(theta f(y))` with `f(on) = b`, `f(off) = 0`. Factoring
/// `e^(theta b)` out keeps the evaluation finite for large theta.
fn log_mgf_markov(p_on_off: f64, p_off_on: f64, b: u32, theta: f64) -> f64 {
    let b = b as f64;
    let t1 = 1.0 - p_on_off; // on -> on
    let t2 = 1.0 - p_off_on; // off -> off
    let det_k = t1 * t2 - p_on_off * p_off_on;
    if theta <= 0.0 {
        let e = (theta * b).exp();
        let tr = t1 * e + t2;
        let disc = (tr * tr - 4.0 * e * det_k).max(0.0);
        let lambda = 0.5 * (tr + disc.sqrt());
        lambda.ln()
    } else {
        // lambda = e * (t1 + t2/e + sigma) / 2 with
        // sigma^2 = t1^2 + (2 t1 t2 - 4 det_k)/e + (t2/e)^2.
        let inv_e = (-theta * b).exp();
        let sigma = (t1 * t1 + (2.0 * t1 * t2 - 4.0 * det_k) * inv_e + (t2 * inv_e).powi(2))
            .max(0.0)
            .sqrt();
        theta * b + (0.5 * (t1 + t2 * inv_e + sigma)).ln()
    }
}

fn d_log_mgf_markov(p_on_off: f64, p_off_on: f64, b: u32, theta: f64) -> f64 {
    let bf = b as f64;
    let t1 = 1.0 - p_on_off;
    let t2 = 1.0 - p_off_on;
    let det_k = t1 * t2 - p_on_off * p_off_on;
    // Derivative of log lambda via the quadratic lambda^2 - T lambda + D = 0
    // with T and D functions of e = e^(theta b); stable central difference
    // as fallback where the discriminant degenerates.
    let analytic = || -> Option<f64> {
        if theta <= 300.0 / bf.max(1.0) {
            let e = (theta * bf).exp();
            let tr = t1 * e + t2;
            let d = e * det_k;
            let disc = tr * tr - 4.0 * d;
            if disc <= 1e-300 {
                return None;
            }
            let s = disc.sqrt();
            let lambda = 0.5 * (tr + s);
            let tr_p = bf * t1 * e;
            let d_p = bf * d;
            let lambda_p = 0.5 * (tr_p + (tr * tr_p - 2.0 * d_p) / s);
            Some(lambda_p / lambda)
        } else {
            None
        }
    };
    match analytic() {
        Some(v) => v,
        None => {
            let h = 1e-6;
            (log_mgf_markov(p_on_off, p_off_on, b, theta + h)
                - log_mgf_markov(p_on_off, p_off_on, b, theta - h))
                / (2.0 * h)
        }
    }
}

enum SamplerState {
    Stateless,
    Markov { on: bool },
    Phase(u64),
}

/// Owns the mutable sampling state for one link; never share across
/// concurrent samplers.
pub struct ArrivalSampler {
    model: ArrivalModel,
    rng: ChaCha12Rng,
    state: SamplerState,
}

impl ArrivalSampler {
    /// Arrivals appended at the end of `slot`. Always within the bound.
    pub fn sample(&mut self, slot: u64) -> u32 {
        match (&self.model.kind, &mut self.state) {
            (Kind::Bernoulli { p }, _) => {
                if self.rng.random::<f64>() < *p {
                    1
                } else {
                    0
                }
            }
            (Kind::Batch { values, probs }, _) => {
                let u = self.rng.random::<f64>();
                let mut acc = 0.0;
                for (&v, &q) in values.iter().zip(probs) {
                    acc += q;
                    if u < acc {
                        return v;
                    }
                }
                *values.last().unwrap()
            }
            (
                Kind::MarkovOnOff {
                    p_on_off,
                    p_off_on,
                    batch_on,
                },
                SamplerState::Markov { on },
            ) => {
                let emitted = if *on { *batch_on } else { 0 };
                let u = self.rng.random::<f64>();
                *on = if *on { u >= *p_on_off } else { u < *p_off_on };
                emitted
            }
            (
                Kind::SyncOnOff {
                    period,
                    start,
                    len,
                    batch,
                    ..
                },
                SamplerState::Phase(phase),
            ) => {
                let pos = ((slot + *phase) % *period as u64) as u32;
                let offset = (pos + *period - *start) % *period;
                if offset < *len {
                    *batch
                } else {
                    0
                }
            }
            _ => unreachable!("sampler state matches its model kind"),
        }
    }

    pub fn model(&self) -> &ArrivalModel {
        &self.model
    }
}
