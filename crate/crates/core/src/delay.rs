//! Queue-overflow exponents in the large deviations regime and delay-aware
//! priority assignment.
//!
//! The overflow exponent of a link against a competing set `H` is the
//! largest root of `F(theta) = Lambda_i(theta) + inf_(0<=u<=theta)
//! [sum_(j in H) Lambda_j(u) - u]`. `F` vanishes at zero, starts with
//! negative slope whenever the drift condition holds, and is convex, so
//! the largest root is the unique positive crossing (or infinite when `F`
//! stays negative up to the solver cap). All analytic operations here
//! require independent arrival processes and refuse the correlated
//! traffic kind.

use std::fmt::Write as _;

use thiserror::Error;

use crate::engine::{self, EngineError, Priority, PrioritySpec};
use crate::graph::{GraphError, InterferenceGraph, LinkId};
use crate::traffic::ArrivalModel;

/// Upper bound on probed exponents; `F` still negative here is reported as
/// an infinite exponent. A solver limit, not a statement about the true
/// root.
pub const THETA_CAP: f64 = 64.0;
/// Bisection tolerance on the root residual.
pub const ROOT_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum DelayError {
    #[error("delay analysis requires independent arrivals; link {link} uses the correlated traffic kind")]
    CorrelatedModel { link: usize },
    #[error("model list has {got} entries, expected {expected}")]
    ModelLen { got: usize, expected: usize },
    #[error("targets list has {got} entries, expected {expected}")]
    TargetLen { got: usize, expected: usize },
    #[error("target for link {link} is {value}; targets must be finite and nonnegative")]
    BadTarget { link: usize, value: f64 },
    #[error("priority has {got} entries, expected {expected}")]
    PriorityLen { got: usize, expected: usize },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("thresholds must be strictly increasing")]
    BadThresholds,
    #[error("overflow estimation needs at least one replication and one slot")]
    EmptyRun,
}

/// Value of an overflow exponent.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Exponent {
    /// The drift condition fails; the queue is not even rate stable.
    Unstable,
    Finite(f64),
    /// `F` stayed negative up to [`THETA_CAP`].
    Infinite,
}

impl Exponent {
    /// True iff a target `t` is guaranteed: zero targets are vacuous, any
    /// finite target needs a strictly larger exponent.
    pub fn admits(&self, t: f64) -> bool {
        if t == 0.0 {
            return true;
        }
        match self {
            Exponent::Unstable => false,
            Exponent::Finite(v) => t < *v,
            Exponent::Infinite => true,
        }
    }

    pub fn as_f64(&self) -> f64 {
        match self {
            Exponent::Unstable => 0.0,
            Exponent::Finite(v) => *v,
            Exponent::Infinite => f64::INFINITY,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ExponentResult {
    pub value: Exponent,
    /// `|F(theta*)|` for finite roots, zero otherwise.
    pub residual: f64,
    /// Bisection bracket used for finite roots.
    pub bracket: Option<(f64, f64)>,
}

fn reject_correlated(models: &[&ArrivalModel]) -> Result<(), DelayError> {
    for (idx, m) in models.iter().enumerate() {
        if m.is_correlated() {
            return Err(DelayError::CorrelatedModel { link: idx });
        }
    }
    Ok(())
}

/// `inf_(0<=u<=theta) [sum_j Lambda_j(u) - u]` by derivative-sign
/// bisection; the integrand is convex, so the sign of its derivative
/// brackets the minimizer. Falls back to golden-section search if a
/// derivative evaluates non-finite.
pub fn inner_inf(models_h: &[&ArrivalModel], theta: f64) -> f64 {
    debug_assert!(theta >= 0.0);
    if theta == 0.0 {
        return 0.0;
    }
    let g = |u: f64| models_h.iter().map(|m| m.log_mgf(u)).sum::<f64>() - u;
    let dg = |u: f64| models_h.iter().map(|m| m.d_log_mgf(u)).sum::<f64>() - 1.0;
    let d0 = dg(0.0);
    let d1 = dg(theta);
    if d0.is_finite() && d1.is_finite() {
        if d0 >= 0.0 {
            return 0.0f64.min(g(0.0));
        }
        if d1 <= 0.0 {
            return g(theta);
        }
        let (mut lo, mut hi) = (0.0, theta);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if dg(mid) <= 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-13 {
                break;
            }
        }
        let u = 0.5 * (lo + hi);
        g(u).min(g(0.0)).min(g(theta))
    } else {
        golden_section_min(g, 0.0, theta)
    }
}

fn golden_section_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let phi = (5.0f64.sqrt() - 1.0) / 2.0;
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = f(d);
        }
        if (b - a).abs() < 1e-12 {
            break;
        }
    }
    f(0.5 * (a + b)).min(fc).min(fd)
}

/// Largest root of the overflow-exponent equation for a link with arrival
/// model `model_i` competing against the higher-priority set `models_h`.
///
/// Returns a typed unstable result when the drift condition
/// `a_i + sum_H a_j < 1` fails; an infinite sentinel when `F` never turns
/// positive below [`THETA_CAP`].
pub fn delay_exponent(
    model_i: &ArrivalModel,
    models_h: &[&ArrivalModel],
) -> Result<ExponentResult, DelayError> {
    reject_correlated(&[model_i])?;
    reject_correlated(models_h)?;
    let drift: f64 = model_i.rate() + models_h.iter().map(|m| m.rate()).sum::<f64>();
    if drift >= 1.0 {
        return Ok(ExponentResult {
            value: Exponent::Unstable,
            residual: 0.0,
            bracket: None,
        });
    }
    let f = |theta: f64| model_i.log_mgf(theta) + inner_inf(models_h, theta);
    // Bracket expansion: double until F goes positive or the cap is hit.
    let mut lo = 0.0;
    let mut hi = 1e-4;
    let mut bracket = None;
    while hi <= THETA_CAP {
        if f(hi) > 0.0 {
            bracket = Some((lo, hi));
            break;
        }
        lo = hi;
        hi *= 2.0;
    }
    let Some((mut lo, mut hi)) = bracket else {
        return Ok(ExponentResult {
            value: Exponent::Infinite,
            residual: 0.0,
            bracket: None,
        });
    };
    let reported = (lo, hi);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo < 1e-13 * hi.max(1.0) {
            break;
        }
    }
    let root = 0.5 * (lo + hi);
    Ok(ExponentResult {
        value: Exponent::Finite(root),
        residual: f(root).abs(),
        bracket: Some(reported),
    })
}

/// Diagnostic-only exponent of the aggregated single queue that serves
/// the whole closed neighborhood at unit rate: the largest root of
/// `sum_j Lambda_j(theta) - theta = 0`. A valid but loose lower bound;
/// never used in any region decision. Taking `u = theta` in the inner
/// infimum shows it can never exceed the clique-system exponent.
pub fn sum_queue_bound_exponent(
    models_closed: &[&ArrivalModel],
) -> Result<ExponentResult, DelayError> {
    reject_correlated(models_closed)?;
    let drift: f64 = models_closed.iter().map(|m| m.rate()).sum();
    if drift >= 1.0 {
        return Ok(ExponentResult {
            value: Exponent::Unstable,
            residual: 0.0,
            bracket: None,
        });
    }
    let f = |theta: f64| models_closed.iter().map(|m| m.log_mgf(theta)).sum::<f64>() - theta;
    let mut lo = 0.0;
    let mut hi = 1e-4;
    let mut bracket = None;
    while hi <= THETA_CAP {
        if f(hi) > 0.0 {
            bracket = Some((lo, hi));
            break;
        }
        lo = hi;
        hi *= 2.0;
    }
    let Some((mut lo, mut hi)) = bracket else {
        return Ok(ExponentResult {
            value: Exponent::Infinite,
            residual: 0.0,
            bracket: None,
        });
    };
    let reported = (lo, hi);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo < 1e-13 * hi.max(1.0) {
            break;
        }
    }
    let root = 0.5 * (lo + hi);
    Ok(ExponentResult {
        value: Exponent::Finite(root),
        residual: f(root).abs(),
        bracket: Some(reported),
    })
}

/// Per-link verdict of a delay-region check.
#[derive(Clone, Debug)]
pub struct LinkExponent {
    pub link: LinkId,
    /// Higher-priority competing neighbors used in the equation.
    pub competing: Vec<LinkId>,
    pub target: f64,
    pub result: ExponentResult,
    pub pass: bool,
}

#[derive(Clone, Debug)]
pub struct DelayRegionReport {
    pub ok: bool,
    pub rows: Vec<LinkExponent>,
}

fn check_dims(
    g: &InterferenceGraph,
    models: &[ArrivalModel],
    targets: Option<&[f64]>,
) -> Result<(), DelayError> {
    if models.len() != g.link_count() {
        return Err(DelayError::ModelLen {
            got: models.len(),
            expected: g.link_count(),
        });
    }
    if let Some(t) = targets {
        if t.len() != g.link_count() {
            return Err(DelayError::TargetLen {
                got: t.len(),
                expected: g.link_count(),
            });
        }
        for (i, &v) in t.iter().enumerate() {
            if !v.is_finite() || v < 0.0 {
                return Err(DelayError::BadTarget { link: i, value: v });
            }
        }
    }
    Ok(())
}

/// Checks whether every target exponent is achievable under the fixed
/// priority `p`: each link's exponent against its strictly
/// higher-priority neighbors must exceed its target (zero targets pass
/// vacuously; an unstable drift fails any positive target).
pub fn delay_region_check(
    g: &InterferenceGraph,
    models: &[ArrivalModel],
    targets: &[f64],
    p: &Priority,
) -> Result<DelayRegionReport, DelayError> {
    check_dims(g, models, Some(targets))?;
    if p.len() != g.link_count() {
        return Err(DelayError::PriorityLen {
            got: p.len(),
            expected: g.link_count(),
        });
    }
    let mut rows = Vec::with_capacity(g.link_count());
    let mut ok = true;
    for i in 0..g.link_count() {
        let competing = p.higher_priority_neighbors(g, i);
        let models_h: Vec<&ArrivalModel> = competing.iter().map(|&j| &models[j]).collect();
        let result = delay_exponent(&models[i], &models_h)?;
        let pass = result.value.admits(targets[i]);
        ok &= pass;
        rows.push(LinkExponent {
            link: i,
            competing,
            target: targets[i],
            result,
            pass,
        });
    }
    Ok(DelayRegionReport { ok, rows })
}

/// Worst-case exponents: every link against its whole neighborhood.
pub fn worst_case_exponents(
    g: &InterferenceGraph,
    models: &[ArrivalModel],
) -> Result<Vec<LinkExponent>, DelayError> {
    check_dims(g, models, None)?;
    let mut rows = Vec::with_capacity(g.link_count());
    for i in 0..g.link_count() {
        let competing = g.neighbors(i).to_vec();
        let models_h: Vec<&ArrivalModel> = competing.iter().map(|&j| &models[j]).collect();
        let result = delay_exponent(&models[i], &models_h)?;
        rows.push(LinkExponent {
            link: i,
            competing,
            target: 0.0,
            result,
            pass: true,
        });
    }
    Ok(rows)
}

#[derive(Clone, Debug)]
pub enum DelayPriorityOutcome {
    Feasible { priority: Priority },
    /// No remaining link passed the qualification test at some round, or
    /// the final verification failed; the targets are outside the
    /// constant-priority delay region.
    Infeasible { reason: String },
}

/// Greedy delay-aware priority assignment: each round recomputes every
/// remaining link's exponent against its remaining positive-target
/// neighbors, hands the lowest-indexed link whose target clears its
/// exponent the next-lowest rank, and zeroes that target. On success the
/// output is re-verified with [`delay_region_check`].
pub fn delay_priority(
    g: &InterferenceGraph,
    models: &[ArrivalModel],
    targets: &[f64],
) -> Result<DelayPriorityOutcome, DelayError> {
    check_dims(g, models, Some(targets))?;
    for (i, m) in models.iter().enumerate() {
        if m.is_correlated() {
            return Err(DelayError::CorrelatedModel { link: i });
        }
    }
    let n = g.link_count();
    let mut work = targets.to_vec();
    let mut remaining = vec![true; n];
    let mut ranks = vec![0usize; n];
    for k in 1..=n {
        let mut chosen = None;
        for i in 0..n {
            if !remaining[i] {
                continue;
            }
            let competing: Vec<LinkId> = g
                .neighbors(i)
                .iter()
                .copied()
                .filter(|&j| remaining[j] && work[j] > 0.0)
                .collect();
            let models_h: Vec<&ArrivalModel> = competing.iter().map(|&j| &models[j]).collect();
            let result = delay_exponent(&models[i], &models_h)?;
            if result.value.admits(work[i]) {
                chosen = Some(i);
                break;
            }
        }
        let Some(s) = chosen else {
            let left: Vec<usize> = (0..n).filter(|&i| remaining[i]).map(|i| i + 1).collect();
            return Ok(DelayPriorityOutcome::Infeasible {
                reason: format!("no remaining link qualifies at round {k}; remaining links {left:?} (1-based)"),
            });
        };
        ranks[s] = n + 1 - k;
        remaining[s] = false;
        work[s] = 0.0;
    }
    let priority = Priority::from_ranks(ranks).expect("assignment is a permutation");
    let report = delay_region_check(g, models, targets, &priority)?;
    if report.ok {
        Ok(DelayPriorityOutcome::Feasible { priority })
    } else {
        let failing: Vec<usize> = report
            .rows
            .iter()
            .filter(|r| !r.pass)
            .map(|r| r.link + 1)
            .collect();
        Ok(DelayPriorityOutcome::Infeasible {
            reason: format!("assignment completed but verification failed at links {failing:?} (1-based)"),
        })
    }
}

/// One threshold's worth of overflow measurements.
#[derive(Clone, Debug)]
pub struct OverflowPoint {
    pub threshold: u64,
    pub events: u64,
    pub measured_slots: u64,
    pub frequency: f64,
    /// Present iff events > 0.
    pub neg_log_frequency: Option<f64>,
    /// Fewer than 50 exceedance events.
    pub low_confidence: bool,
}

#[derive(Clone, Debug)]
pub enum SlopeEstimate {
    /// Least-squares slope of -log frequency against the threshold.
    Fit { slope: f64, points_used: usize },
    /// Every threshold saw zero exceedances.
    AllZero,
    /// Fewer than two thresholds had events; no fit possible.
    Insufficient { nonzero_points: usize },
}

#[derive(Clone, Debug)]
pub struct OverflowEstimate {
    pub link: LinkId,
    pub points: Vec<OverflowPoint>,
    pub slope: SlopeEstimate,
}

/// Monte Carlo estimate of the overflow decay: runs `reps` independent
/// replications of `slots` slots each, pools post-burn-in exceedance
/// frequencies of the end-of-slot queue at each threshold, and fits the
/// decay slope over the thresholds that saw at least one event.
#[allow(clippy::too_many_arguments)]
pub fn estimate_overflow(
    g: &InterferenceGraph,
    spec: &PrioritySpec,
    models: &[ArrivalModel],
    link: LinkId,
    thresholds: &[u64],
    slots: u64,
    reps: u64,
    seed: u64,
) -> Result<OverflowEstimate, DelayError> {
    g.check_index(link)?;
    check_dims(g, models, None)?;
    if thresholds.windows(2).any(|w| w[0] >= w[1]) || thresholds.is_empty() {
        return Err(DelayError::BadThresholds);
    }
    if reps == 0 || slots == 0 {
        return Err(DelayError::EmptyRun);
    }
    let mut events = vec![0u64; thresholds.len()];
    let mut measured = 0u64;
    for rep in 0..reps {
        let stats = engine::run(
            g,
            spec,
            models,
            slots,
            engine::replication_seed(seed, rep),
            thresholds,
        )?;
        measured += stats.measured_slots;
        for (t, e) in events.iter_mut().enumerate() {
            *e += stats.per_link[link].overflow_slots[t];
        }
    }
    let points: Vec<OverflowPoint> = thresholds
        .iter()
        .zip(&events)
        .map(|(&threshold, &ev)| {
            let frequency = ev as f64 / measured as f64;
            OverflowPoint {
                threshold,
                events: ev,
                measured_slots: measured,
                frequency,
                neg_log_frequency: (ev > 0).then(|| -frequency.ln()),
                low_confidence: ev < 50,
            }
        })
        .collect();
    let usable: Vec<(f64, f64)> = points
        .iter()
        .filter_map(|p| p.neg_log_frequency.map(|y| (p.threshold as f64, y)))
        .collect();
    let slope = if usable.is_empty() {
        SlopeEstimate::AllZero
    } else if usable.len() < 2 {
        SlopeEstimate::Insufficient {
            nonzero_points: usable.len(),
        }
    } else {
        let n = usable.len() as f64;
        let sx: f64 = usable.iter().map(|(x, _)| x).sum();
        let sy: f64 = usable.iter().map(|(_, y)| y).sum();
        let sxx: f64 = usable.iter().map(|(x, _)| x * x).sum();
        let sxy: f64 = usable.iter().map(|(x, y)| x * y).sum();
        SlopeEstimate::Fit {
            slope: (n * sxy - sx * sy) / (n * sxx - sx * sx),
            points_used: usable.len(),
        }
    };
    Ok(OverflowEstimate {
        link,
        points,
        slope,
    })
}

/// Exponent report CSV:
/// `link,competing_set,exponent,residual,empirical_slope,relative_gap`.
/// The competing set is pipe-separated 1-based ids; exponents print as
/// `inf`, `unstable`, or a number; empirical columns stay empty unless an
/// estimate is supplied for that link.
pub fn exponent_report_csv(
    rows: &[LinkExponent],
    empirical: &[Option<&OverflowEstimate>],
) -> String {
    let mut out = String::from("link,competing_set,exponent,residual,empirical_slope,relative_gap\n");
    for (idx, r) in rows.iter().enumerate() {
        let comp: Vec<String> = r.competing.iter().map(|&j| (j + 1).to_string()).collect();
        let exponent = match r.result.value {
            Exponent::Unstable => "unstable".to_string(),
            Exponent::Infinite => "inf".to_string(),
            Exponent::Finite(v) => format!("{v:.9}"),
        };
        let (slope_s, gap_s) = match empirical.get(idx).copied().flatten() {
            Some(est) => match est.slope {
                SlopeEstimate::Fit { slope, .. } => {
                    let gap = match r.result.value {
                        Exponent::Finite(v) if v != 0.0 => {
                            format!("{:.6}", (slope - v).abs() / v)
                        }
                        _ => String::new(),
                    };
                    (format!("{slope:.6}"), gap)
                }
                _ => ("nan".to_string(), String::new()),
            },
            None => (String::new(), String::new()),
        };
        let _ = writeln!(
            out,
            "{},{},{},{:.3e},{},{}",
            r.link + 1,
            comp.join("|"),
            exponent,
            r.result.residual,
            slope_s,
            gap_s
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::traffic::ArrivalModel;

    fn bern(p: f64) -> ArrivalModel {
        ArrivalModel::bernoulli(p).unwrap()
    }

    #[test]
    fn inner_inf_trivia() {
        // Empty competitor set: g(u) = -u, minimized at u = theta.
        assert!((inner_inf(&[], 3.0) + 3.0).abs() < 1e-12);
        assert_eq!(inner_inf(&[&bern(0.4)], 0.0), 0.0);
    }

    #[test]
    fn inner_inf_single_bernoulli_closed_form() {
        // Lambda'(u) < 1 everywhere for a Bernoulli competitor, so the
        // infimum sits at u = theta.
        let m = bern(0.4);
        let v = inner_inf(&[&m], 1.0);
        let expected = (0.6 + 0.4 * 1.0f64.exp()).ln() - 1.0;
        assert!((v - expected).abs() < 1e-9);
        assert!((expected + 0.476863).abs() < 1e-5);
        // Grid oracle for the same infimum.
        let mut best = f64::INFINITY;
        let mut u = 0.0;
        while u <= 1.0 {
            best = best.min(m.log_mgf(u) - u);
            u += 1e-5;
        }
        assert!((v - best).abs() < 1e-8);
    }

    #[test]
    fn inner_inf_interior_minimum() {
        // A batch competitor with steep MGF pushes the minimizer inside.
        let m = ArrivalModel::batch(vec![0, 3], vec![0.5, 0.5]).unwrap();
        let theta = 4.0;
        let v = inner_inf(&[&m], theta);
        // Grid oracle.
        let g = |u: f64| m.log_mgf(u) - u;
        let mut best = f64::INFINITY;
        let mut u = 0.0;
        while u <= theta {
            best = best.min(g(u));
            u += 1e-5;
        }
        assert!((v - best).abs() < 1e-7, "{v} vs {best}");
        assert!(v < g(theta) - 1e-6, "minimum should be interior");
    }

    #[test]
    fn solo_bernoulli_queue_has_infinite_exponent() {
        let r = delay_exponent(&bern(0.7), &[]).unwrap();
        assert_eq!(r.value, Exponent::Infinite);
    }

    #[test]
    fn two_link_clique_closed_form_exponent() {
        // Link with Bernoulli(0.3) behind a Bernoulli(0.4) competitor:
        // the exponent is ln 3.5.
        let r = delay_exponent(&bern(0.3), &[&bern(0.4)]).unwrap();
        match r.value {
            Exponent::Finite(v) => {
                assert!((v - 3.5f64.ln()).abs() < 1e-6, "got {v}");
                assert!(r.residual <= ROOT_TOL);
            }
            other => panic!("expected finite exponent, got {other:?}"),
        }
    }

    #[test]
    fn batch_solo_root_matches_quadratic() {
        // log(0.9 + 0.1 e^(3 theta)) = theta has largest root
        // ln((-1 + sqrt(37)) / 2) via x^3 factorization.
        let m = ArrivalModel::batch(vec![0, 3], vec![0.9, 0.1]).unwrap();
        let r = delay_exponent(&m, &[]).unwrap();
        let expected = ((-1.0 + 37.0f64.sqrt()) / 2.0).ln();
        match r.value {
            Exponent::Finite(v) => {
                assert!((v - expected).abs() < 1e-8, "got {v}, want {expected}");
                // Largest-root side condition.
                let f = |theta: f64| m.log_mgf(theta) - theta;
                assert!(f(v + 1e-3) > 0.0);
            }
            other => panic!("expected finite, got {other:?}"),
        }
    }

    #[test]
    fn unstable_drift_is_typed() {
        let r = delay_exponent(&bern(0.5), &[&bern(0.5)]).unwrap();
        assert_eq!(r.value, Exponent::Unstable);
        assert!(!r.value.admits(0.1));
        assert!(r.value.admits(0.0));
    }

    #[test]
    fn enlarging_the_competing_set_never_raises_the_exponent() {
        let subsets: [&[&ArrivalModel]; 3] = [
            &[],
            &[&bern(0.2)],
            &[&bern(0.2), &bern(0.3)],
        ];
        let mut last = f64::INFINITY;
        for (k, h) in subsets.iter().enumerate() {
            let r = delay_exponent(&bern(0.25), h).unwrap();
            let v = r.value.as_f64();
            assert!(v <= last + 1e-9, "exponent grew at step {k}");
            last = v;
        }
    }

    #[test]
    fn worst_case_exponent_is_the_smallest() {
        for seed in 0..10u64 {
            let g = InterferenceGraph::random(5, 0.5, seed).unwrap();
            let models: Vec<ArrivalModel> = (0..5)
                .map(|i| bern(0.08 + 0.02 * i as f64))
                .collect();
            let worst = worst_case_exponents(&g, &models).unwrap();
            // Any priority's per-link exponent dominates the worst case.
            let p = Priority::identity(5);
            let report = delay_region_check(&g, &models, &[0.0; 5], &p).unwrap();
            for (w, r) in worst.iter().zip(&report.rows) {
                assert!(w.result.value.as_f64() <= r.result.value.as_f64() + 1e-9);
            }
        }
    }

    #[test]
    fn region_check_on_the_closed_form_clique() {
        let g = InterferenceGraph::complete(2).unwrap();
        let models = vec![bern(0.3), bern(0.4)];
        let p = Priority::from_ranks(vec![2, 1]).unwrap();
        let ok = delay_region_check(&g, &models, &[1.2, 0.5], &p).unwrap();
        assert!(ok.ok, "1.2 < ln 3.5 must pass");
        let bad = delay_region_check(&g, &models, &[1.3, 0.0], &p).unwrap();
        assert!(!bad.ok, "1.3 > ln 3.5 must fail");
        let zeros = delay_region_check(&g, &models, &[0.0, 0.0], &p).unwrap();
        assert!(zeros.ok);
    }

    #[test]
    fn delay_priority_trace_on_a_two_link_clique() {
        let g = InterferenceGraph::complete(2).unwrap();
        let models = vec![bern(0.3), bern(0.4)];
        // Link 1 wants nothing, link 2 wants a solo-grade exponent.
        match delay_priority(&g, &models, &[0.0, 0.5]).unwrap() {
            DelayPriorityOutcome::Feasible { priority } => {
                assert_eq!(priority.ranks(), &[2, 1]);
            }
            other => panic!("expected feasible, got {other:?}"),
        }
        // The closed-form pair: link 1 tolerates ln 3.5 of interference.
        match delay_priority(&g, &models, &[1.2, 0.4]).unwrap() {
            DelayPriorityOutcome::Feasible { priority } => {
                assert_eq!(priority.ranks(), &[2, 1]);
            }
            other => panic!("expected feasible, got {other:?}"),
        }
    }

    #[test]
    fn delay_priority_infeasible_when_targets_exceed_all_orders() {
        let g = InterferenceGraph::complete(2).unwrap();
        let models = vec![bern(0.3), bern(0.4)];
        // Both links demand more than the cross exponents allow: link 1
        // behind link 2 caps at ln 3.5 ~ 1.25, and symmetric for link 2.
        match delay_priority(&g, &models, &[1.3, 1.3]).unwrap() {
            DelayPriorityOutcome::Infeasible { .. } => {}
            other => panic!("expected infeasible, got {other:?}"),
        }
    }

    #[test]
    fn finite_roots_satisfy_residual_and_largest_root_side_conditions() {
        let mut cases = 0;
        for (pi, hs) in [
            (0.3, vec![0.4]),
            (0.2, vec![0.3, 0.2]),
            (0.1, vec![0.1, 0.2, 0.3]),
            (0.45, vec![0.35]),
            (0.05, vec![0.6]),
        ] {
            let model = bern(pi);
            let owned: Vec<ArrivalModel> = hs.iter().map(|&p| bern(p)).collect();
            let competitors: Vec<&ArrivalModel> = owned.iter().collect();
            let r = delay_exponent(&model, &competitors).unwrap();
            if let Exponent::Finite(v) = r.value {
                assert!(r.residual <= ROOT_TOL, "residual {}", r.residual);
                let f = |theta: f64| model.log_mgf(theta) + inner_inf(&competitors, theta);
                assert!(f(v + 1e-3) > 0.0, "largest-root side condition at {v}");
                cases += 1;
            }
        }
        assert!(cases >= 3, "campaign should hit finite roots");
    }

    #[test]
    fn sum_queue_bound_is_looser_than_the_clique_exponent() {
        for (pi, hs) in [
            (0.3, vec![0.4]),
            (0.2, vec![0.3, 0.2]),
            (0.1, vec![0.15, 0.2]),
        ] {
            let model = bern(pi);
            let owned: Vec<ArrivalModel> = hs.iter().map(|&p| bern(p)).collect();
            let competitors: Vec<&ArrivalModel> = owned.iter().collect();
            let clique = delay_exponent(&model, &competitors).unwrap();
            let mut closed: Vec<&ArrivalModel> = vec![&model];
            closed.extend(&competitors);
            let sum = sum_queue_bound_exponent(&closed).unwrap();
            assert!(
                sum.value.as_f64() <= clique.value.as_f64() + 1e-9,
                "sum bound {:?} should not exceed clique bound {:?}",
                sum.value,
                clique.value
            );
        }
    }

    #[test]
    fn correlated_models_are_rejected() {
        let g = InterferenceGraph::complete(2).unwrap();
        let sync = ArrivalModel::sync_onoff(10, 0, 3, 1, "g").unwrap();
        let models = vec![bern(0.3), sync];
        assert!(matches!(
            delay_region_check(&g, &models, &[0.0, 0.0], &Priority::identity(2)),
            Err(DelayError::CorrelatedModel { .. })
        ));
        assert!(matches!(
            delay_priority(&g, &models, &[0.0, 0.0]),
            Err(DelayError::CorrelatedModel { .. })
        ));
    }

    #[test]
    fn overflow_estimate_zero_arrivals_flags_all_zero() {
        let g = InterferenceGraph::complete(2).unwrap();
        let models = vec![bern(0.0), bern(0.0)];
        let est = estimate_overflow(
            &g,
            &PrioritySpec::Fixed(Priority::identity(2)),
            &models,
            0,
            &[1, 2, 3],
            5_000,
            2,
            7,
        )
        .unwrap();
        assert!(matches!(est.slope, SlopeEstimate::AllZero));
        assert!(est.points.iter().all(|p| p.events == 0));
    }

    #[test]
    fn overflow_slope_tracks_the_closed_form_at_small_thresholds() {
        // Geometric tail with ratio 2/7: slope ln 3.5, measurable at
        // shallow thresholds.
        let g = InterferenceGraph::complete(2).unwrap();
        let models = vec![bern(0.3), bern(0.4)];
        let p = Priority::from_ranks(vec![2, 1]).unwrap();
        let est = estimate_overflow(
            &g,
            &PrioritySpec::Fixed(p),
            &models,
            0,
            &[1, 2, 3, 4, 5],
            400_000,
            2,
            123,
        )
        .unwrap();
        match est.slope {
            SlopeEstimate::Fit { slope, points_used } => {
                assert!(points_used >= 4);
                let target = 3.5f64.ln();
                assert!(
                    (slope - target).abs() / target < 0.15,
                    "slope {slope} vs {target}"
                );
            }
            other => panic!("expected a fit, got {other:?}"),
        }
    }

    #[test]
    fn report_csv_shape() {
        let g = InterferenceGraph::complete(2).unwrap();
        let models = vec![bern(0.3), bern(0.4)];
        let p = Priority::from_ranks(vec![2, 1]).unwrap();
        let report = delay_region_check(&g, &models, &[0.5, 0.2], &p).unwrap();
        let csv = exponent_report_csv(&report.rows, &[None, None]);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("1,2,"));
        assert!(lines[2].starts_with("2,,"));
    }
}
