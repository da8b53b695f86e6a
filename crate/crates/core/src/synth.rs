//! Stability regions and priority synthesis.
//!
//! Membership tests for the four nested regions (the worst-case maximal
//! region, the fixed-priority region of a given priority vector, the union
//! over all fixed priorities via peeling, and the convex-hull region), the
//! greedy stable-priority assignment with post-verification, sufficient
//! -condition checks for randomized priorities, convex decomposition of a
//! rate vector over maximal independent sets (exact, and approximate via
//! multiplicative weights against a pluggable max-weight oracle), and the
//! `1/delta` efficiency floor with its witness priority.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::engine::{Priority, PriorityDistribution};
use crate::graph::{
    compute_delta, enumerate_maximal_sets, max_weight_independent_set, DeltaMode, GraphError,
    IndependentSet, InterferenceGraph, LinkId, RemovalSequence, BRUTE_DELTA_CAP,
};
use crate::simplex::{self, Cmp, Constraint, LpOutcome};

/// Additive guard applied to linear-program coverage targets so the
/// declared inequalities survive downstream floating-point reductions.
const COVER_GUARD: f64 = 1e-9;
/// Strictness tolerance when deciding open-region membership from a solver
/// slack.
const MEMBER_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("rate vector has {got} entries, expected {expected}")]
    RateLen { got: usize, expected: usize },
    #[error("rate for link {link} is {value}; rates must be finite and nonnegative")]
    BadRate { link: usize, value: f64 },
    #[error("subset for link {link} contains {other}, which is not one of its neighbors")]
    NotANeighbor { link: usize, other: usize },
    #[error("subset list has {got} entries, expected {expected}")]
    SubsetLen { got: usize, expected: usize },
    #[error("slack must be positive and finite, got {0}")]
    BadSlack(f64),
    #[error("approximation tolerance must be in (0, 1), got {0}")]
    BadTolerance(f64),
    #[error("priority has {got} entries, expected {expected}")]
    PriorityLen { got: usize, expected: usize },
}

fn check_rates(g: &InterferenceGraph, a: &[f64]) -> Result<(), SynthError> {
    if a.len() != g.link_count() {
        return Err(SynthError::RateLen {
            got: a.len(),
            expected: g.link_count(),
        });
    }
    for (i, &v) in a.iter().enumerate() {
        if !v.is_finite() || v < 0.0 {
            return Err(SynthError::BadRate { link: i, value: v });
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Region membership
// ---------------------------------------------------------------------------

/// Links violating the worst-case condition `a_i + sum_(N_i) a_j < 1`.
pub fn a_min_violations(g: &InterferenceGraph, a: &[f64]) -> Result<Vec<LinkId>, SynthError> {
    check_rates(g, a)?;
    Ok((0..g.link_count())
        .filter(|&i| {
            let s: f64 = a[i] + g.neighbors(i).iter().map(|&j| a[j]).sum::<f64>();
            s >= 1.0
        })
        .collect())
}

/// Membership in the region every prioritized maximal scheduler supports.
pub fn in_a_min(g: &InterferenceGraph, a: &[f64]) -> Result<bool, SynthError> {
    Ok(a_min_violations(g, a)?.is_empty())
}

/// Links whose fixed-priority condition fails under `p`: the sum runs over
/// strictly higher-priority neighbors only.
pub fn a_p_violations(
    g: &InterferenceGraph,
    a: &[f64],
    p: &Priority,
) -> Result<Vec<LinkId>, SynthError> {
    check_rates(g, a)?;
    if p.len() != g.link_count() {
        return Err(SynthError::PriorityLen {
            got: p.len(),
            expected: g.link_count(),
        });
    }
    Ok((0..g.link_count())
        .filter(|&i| {
            let s: f64 = a[i]
                + g.neighbors(i)
                    .iter()
                    .filter(|&&j| p.rank(j) < p.rank(i))
                    .map(|&j| a[j])
                    .sum::<f64>();
            s >= 1.0
        })
        .collect())
}

/// Membership in the lower-bound region of the fixed priority `p`.
pub fn in_a_p(g: &InterferenceGraph, a: &[f64], p: &Priority) -> Result<bool, SynthError> {
    Ok(a_p_violations(g, a, p)?.is_empty())
}

/// Result of the peeling test for the union region over all fixed
/// priorities. The peel order doubles as a witness: reversing it gives a
/// stabilizing priority assignment.
#[derive(Clone, Debug)]
pub struct PeelOutcome {
    pub member: bool,
    /// Links zeroed, in peel order (first peeled gets the lowest priority).
    pub peeled: Vec<LinkId>,
    /// Positive-rate links left unpeelable (empty iff member).
    pub stuck: Vec<LinkId>,
}

/// Peeling membership test: repeatedly zero any positive-rate link whose
/// current closed-neighborhood rate sum is below 1 (lowest index first);
/// the vector is inside iff every positive entry is eventually zeroed.
pub fn peel_a(g: &InterferenceGraph, a: &[f64]) -> Result<PeelOutcome, SynthError> {
    check_rates(g, a)?;
    let n = g.link_count();
    let mut rates = a.to_vec();
    let mut peeled = Vec::new();
    loop {
        let mut pick = None;
        for i in 0..n {
            if rates[i] > 0.0 {
                let s: f64 = rates[i] + g.neighbors(i).iter().map(|&j| rates[j]).sum::<f64>();
                if s < 1.0 {
                    pick = Some(i);
                    break;
                }
            }
        }
        match pick {
            Some(i) => {
                rates[i] = 0.0;
                peeled.push(i);
            }
            None => break,
        }
    }
    let stuck: Vec<LinkId> = (0..n).filter(|&i| rates[i] > 0.0).collect();
    Ok(PeelOutcome {
        member: stuck.is_empty(),
        peeled,
        stuck,
    })
}

/// Membership in the union region over all fixed priorities.
pub fn in_a(g: &InterferenceGraph, a: &[f64]) -> Result<bool, SynthError> {
    Ok(peel_a(g, a)?.member)
}

/// Witness for convex-hull membership: the best achievable uniform slack
/// and a unit-mass combination achieving it.
#[derive(Clone, Debug)]
pub struct AMaxReport {
    pub member: bool,
    /// max s with `M theta >= a + s e`, `sum theta = 1`, `theta >= 0`.
    pub slack: f64,
    pub terms: Vec<(IndependentSet, f64)>,
}

/// Strict-slack membership in the convex-hull region: `a` is inside iff
/// some convex combination of maximal independent sets covers `a + s e`
/// with `s > 0`.
pub fn a_max_report(g: &InterferenceGraph, a: &[f64]) -> Result<AMaxReport, SynthError> {
    check_rates(g, a)?;
    let n = g.link_count();
    let sets = enumerate_maximal_sets(g)?;
    let k = sets.len();
    // Variables: theta_0..theta_k-1, s_plus, s_minus (s free).
    let mut constraints = Vec::with_capacity(n + 1);
    for i in 0..n {
        let mut coeffs = vec![0.0; k + 2];
        for (c, s) in sets.iter().enumerate() {
            if s.contains(i) {
                coeffs[c] = 1.0;
            }
        }
        coeffs[k] = -1.0;
        coeffs[k + 1] = 1.0;
        constraints.push(Constraint {
            coeffs,
            cmp: Cmp::Ge,
            rhs: a[i],
        });
    }
    let mut coeffs = vec![1.0; k];
    coeffs.extend_from_slice(&[0.0, 0.0]);
    constraints.push(Constraint {
        coeffs,
        cmp: Cmp::Eq,
        rhs: 1.0,
    });
    let mut objective = vec![0.0; k];
    objective.extend_from_slice(&[1.0, -1.0]);
    match simplex::maximize(&objective, &constraints) {
        LpOutcome::Optimal { objective, x, .. } => {
            let terms: Vec<(IndependentSet, f64)> = sets
                .into_iter()
                .zip(&x[..k])
                .filter(|(_, &w)| w > 1e-12)
                .map(|(s, &w)| (s, w))
                .collect();
            Ok(AMaxReport {
                member: objective > MEMBER_TOL,
                slack: objective,
                terms,
            })
        }
        // The program is always feasible (any unit simplex point works
        // with s negative enough) and bounded (s <= 1).
        _ => unreachable!("max-slack program is feasible and bounded"),
    }
}

/// Membership in the interior-of-convex-hull region.
pub fn in_a_max(g: &InterferenceGraph, a: &[f64]) -> Result<bool, SynthError> {
    Ok(a_max_report(g, a)?.member)
}

/// Region selector used by front ends.
#[derive(Clone, Debug)]
pub enum Region {
    AMin,
    A,
    AP(Priority),
    AMax,
}

pub fn region_membership(
    g: &InterferenceGraph,
    a: &[f64],
    region: &Region,
) -> Result<bool, SynthError> {
    match region {
        Region::AMin => in_a_min(g, a),
        Region::A => in_a(g, a),
        Region::AP(p) => in_a_p(g, a, p),
        Region::AMax => in_a_max(g, a),
    }
}

// ---------------------------------------------------------------------------
// Stable-Priority (greedy assignment plus verification)
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub enum StablePriorityOutcome {
    /// The produced priority verifiably stabilizes `a`.
    Feasible { priority: Priority },
    /// The rate vector lies outside the union region; the attempted
    /// assignment and its violated links are reported.
    Infeasible {
        attempted: Priority,
        violations: Vec<LinkId>,
    },
}

/// Greedy stable-priority assignment: repeatedly pick the remaining link
/// with the smallest closed-neighborhood rate sum (lowest index on ties),
/// hand it the next-lowest rank, and remove it. The result is verified
/// against the fixed-priority region before being declared feasible.
pub fn stable_priority(
    g: &InterferenceGraph,
    a: &[f64],
) -> Result<StablePriorityOutcome, SynthError> {
    check_rates(g, a)?;
    let n = g.link_count();
    let mut remaining = vec![true; n];
    let mut ranks = vec![0usize; n];
    for k in 1..=n {
        let mut pick: Option<(f64, LinkId)> = None;
        for i in 0..n {
            if !remaining[i] {
                continue;
            }
            let s: f64 = a[i]
                + g.neighbors(i)
                    .iter()
                    .filter(|&&j| remaining[j])
                    .map(|&j| a[j])
                    .sum::<f64>();
            match pick {
                Some((bs, _)) if s >= bs => {}
                _ => pick = Some((s, i)),
            }
        }
        let (_, s) = pick.expect("links remain");
        ranks[s] = n + 1 - k;
        remaining[s] = false;
    }
    let priority = Priority::from_ranks(ranks).expect("assignment is a permutation");
    let violations = a_p_violations(g, a, &priority)?;
    if violations.is_empty() {
        Ok(StablePriorityOutcome::Feasible { priority })
    } else {
        Ok(StablePriorityOutcome::Infeasible {
            attempted: priority,
            violations,
        })
    }
}

// ---------------------------------------------------------------------------
// Randomized priorities: sufficient condition and decompositions
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct Lemma1Row {
    pub link: LinkId,
    /// `a_i` plus the rates of the neighbors left outside the subset.
    pub lhs: f64,
    /// Probability that the link out-ranks its whole subset.
    pub win_probability: f64,
}

#[derive(Clone, Debug)]
pub struct Lemma1Report {
    pub holds: bool,
    pub rows: Vec<Lemma1Row>,
}

/// Exact check of the sufficient stability condition for an i.i.d.
/// priority process: for each link, the rate mass of the neighbors not in
/// its chosen subset plus its own rate must stay strictly below the
/// probability of out-ranking the entire subset.
pub fn check_lemma1(
    g: &InterferenceGraph,
    a: &[f64],
    dist: &PriorityDistribution,
    subsets: &[Vec<LinkId>],
) -> Result<Lemma1Report, SynthError> {
    check_rates(g, a)?;
    let n = g.link_count();
    if subsets.len() != n {
        return Err(SynthError::SubsetLen {
            got: subsets.len(),
            expected: n,
        });
    }
    if dist.link_count() != n {
        return Err(SynthError::PriorityLen {
            got: dist.link_count(),
            expected: n,
        });
    }
    for (i, subset) in subsets.iter().enumerate() {
        for &j in subset {
            if !g.neighbors(i).contains(&j) {
                return Err(SynthError::NotANeighbor { link: i, other: j });
            }
        }
    }
    let mut rows = Vec::with_capacity(n);
    let mut holds = true;
    for i in 0..n {
        let win = dist.win_probability(i, &subsets[i]);
        let lhs: f64 = a[i]
            + g.neighbors(i)
                .iter()
                .filter(|j| !subsets[i].contains(j))
                .map(|&j| a[j])
                .sum::<f64>();
        if lhs >= win {
            holds = false;
        }
        rows.push(Lemma1Row {
            link: i,
            lhs,
            win_probability: win,
        });
    }
    Ok(Lemma1Report { holds, rows })
}

/// A convex combination of maximal independent sets covering a rate vector
/// with uniform slack `eps`; `coverage_factor` is 1 for exact solves and
/// `1 - tol` for approximate ones.
#[derive(Clone, Debug, PartialEq)]
pub struct Decomposition {
    pub terms: Vec<(IndependentSet, f64)>,
    pub eps: f64,
    pub coverage_factor: f64,
}

impl Decomposition {
    /// Componentwise service the combination delivers.
    pub fn coverage(&self, n: usize) -> Vec<f64> {
        let mut cov = vec![0.0; n];
        for (s, w) in &self.terms {
            for &i in s.members() {
                cov[i] += w;
            }
        }
        cov
    }

    /// Coverage minus the declared target `coverage_factor * (a + eps)`.
    pub fn residuals(&self, a: &[f64]) -> Vec<f64> {
        self.coverage(a.len())
            .iter()
            .zip(a)
            .map(|(&c, &ai)| c - self.coverage_factor * (ai + self.eps))
            .collect()
    }

    pub fn total_weight(&self) -> f64 {
        self.terms.iter().map(|(_, w)| w).sum()
    }

    pub fn support(&self) -> usize {
        self.terms.len()
    }

    /// Export format: an `eps` line, a `factor` line, one `residual` line
    /// per link, then `set <k> weight <w> members <i...>` lines (1-based).
    /// Floats print in shortest round-trip form.
    pub fn to_text(&self, a: &[f64]) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "eps {}", self.eps);
        let _ = writeln!(out, "factor {}", self.coverage_factor);
        for (i, r) in self.residuals(a).iter().enumerate() {
            let _ = writeln!(out, "residual {} {}", i + 1, r);
        }
        for (k, (s, w)) in self.terms.iter().enumerate() {
            let members: Vec<String> =
                s.members().iter().map(|&i| (i + 1).to_string()).collect();
            let _ = writeln!(out, "set {} weight {} members {}", k + 1, w, members.join(" "));
        }
        out
    }

    /// Parses [`Decomposition::to_text`] output; residual lines are
    /// recomputable and ignored.
    pub fn from_text(text: &str) -> Result<Self, String> {
        let mut eps = None;
        let mut factor = 1.0;
        let mut terms = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            match fields[0] {
                "eps" if fields.len() == 2 => {
                    eps = Some(
                        fields[1]
                            .parse::<f64>()
                            .map_err(|_| format!("line {lineno}: malformed eps"))?,
                    );
                }
                "factor" if fields.len() == 2 => {
                    factor = fields[1]
                        .parse::<f64>()
                        .map_err(|_| format!("line {lineno}: malformed factor"))?;
                }
                "residual" => {}
                "set" => {
                    let wpos = fields
                        .iter()
                        .position(|&f| f == "weight")
                        .ok_or(format!("line {lineno}: missing `weight`"))?;
                    let mpos = fields
                        .iter()
                        .position(|&f| f == "members")
                        .ok_or(format!("line {lineno}: missing `members`"))?;
                    let w: f64 = fields
                        .get(wpos + 1)
                        .ok_or(format!("line {lineno}: missing weight value"))?
                        .parse()
                        .map_err(|_| format!("line {lineno}: malformed weight"))?;
                    let mut members = Vec::new();
                    for f in &fields[mpos + 1..] {
                        let v: usize = f
                            .parse()
                            .map_err(|_| format!("line {lineno}: malformed member id"))?;
                        if v == 0 {
                            return Err(format!("line {lineno}: member ids are 1-based"));
                        }
                        members.push(v - 1);
                    }
                    terms.push((IndependentSet::new(members), w));
                }
                other => return Err(format!("line {lineno}: unknown directive `{other}`")),
            }
        }
        Ok(Self {
            terms,
            eps: eps.ok_or("missing `eps` line".to_string())?,
            coverage_factor: factor,
        })
    }
}

#[derive(Debug, Error)]
pub enum DecomposeError {
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(
        "no convex combination of maximal independent sets covers the slack-padded rates: \
         the cheapest fractional cover needs total mass {required_mass:.6} > 1 \
         (binding links: {binding:?}, 1-based)"
    )]
    Infeasible {
        required_mass: f64,
        binding: Vec<usize>,
    },
    #[error(
        "approximate decomposition did not converge within {oracle_calls} oracle calls; \
         best minimum coverage ratio reached {best_ratio:.4} of target"
    )]
    NonConvergence {
        oracle_calls: usize,
        best_ratio: f64,
    },
}

/// Exact decomposition: searches the unit simplex over maximal
/// independent sets for the combination with the largest uniform slack
/// over `a`; feasible whenever that slack reaches `eps`. Interior rate
/// vectors therefore come back with strictly positive residuals against
/// the declared `a + eps e` target. The support is reduced to at most
/// `n + 1` terms preserving coverage and total mass.
///
/// When the best slack falls short, a second cheapest-cover solve
/// produces the certificate: the total fractional mass a cover of
/// `a + eps e` would need (necessarily above 1) and its binding links.
pub fn decompose_exact(
    g: &InterferenceGraph,
    a: &[f64],
    eps: f64,
) -> Result<Decomposition, DecomposeError> {
    check_rates(g, a)?;
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(SynthError::BadSlack(eps).into());
    }
    let n = g.link_count();
    let report = a_max_report(g, a)?;
    if report.slack < eps - MEMBER_TOL {
        return Err(infeasibility_certificate(g, a, eps));
    }
    let mut terms = caratheodory_reduce(n, report.terms);
    // The simplex constraint already pins the mass at 1; renormalize away
    // the last floating-point hair.
    let total: f64 = terms.iter().map(|(_, w)| w).sum();
    for (_, w) in &mut terms {
        *w /= total;
    }
    let d = Decomposition {
        terms,
        eps,
        coverage_factor: 1.0,
    };
    debug_assert!(d.residuals(a).iter().all(|&r| r >= -1e-9));
    Ok(d)
}

/// Cheapest fractional cover of `a + eps e`, run only to describe an
/// infeasible instance.
fn infeasibility_certificate(g: &InterferenceGraph, a: &[f64], eps: f64) -> DecomposeError {
    let n = g.link_count();
    let sets = match enumerate_maximal_sets(g) {
        Ok(s) => s,
        Err(e) => return DecomposeError::Synth(e.into()),
    };
    let k = sets.len();
    let mut constraints = Vec::with_capacity(n);
    for i in 0..n {
        let mut coeffs = vec![0.0; k];
        for (c, s) in sets.iter().enumerate() {
            if s.contains(i) {
                coeffs[c] = 1.0;
            }
        }
        constraints.push(Constraint {
            coeffs,
            cmp: Cmp::Ge,
            rhs: a[i] + eps,
        });
    }
    let objective = vec![-1.0; k];
    match simplex::maximize(&objective, &constraints) {
        LpOutcome::Optimal { x, dual, .. } => {
            let binding: Vec<usize> = dual
                .iter()
                .enumerate()
                .filter(|(_, &y)| y.abs() > 1e-9)
                .map(|(i, _)| i + 1)
                .collect();
            DecomposeError::Infeasible {
                required_mass: x.iter().sum(),
                binding,
            }
        }
        // Every link sits in some maximal set, so covers always exist and
        // the objective is bounded by 0.
        _ => unreachable!("covering program is feasible and bounded"),
    }
}

/// The exact max-weight oracle used by default for the approximate scheme:
/// enumerate once, answer argmax queries forever after.
pub fn exact_mwis_oracle(
    g: &InterferenceGraph,
) -> Result<impl FnMut(&[f64]) -> IndependentSet, GraphError> {
    let g = g.clone();
    Ok(move |w: &[f64]| {
        max_weight_independent_set(&g, w).expect("oracle inputs stay within caps")
    })
}

/// Outcome of [`decompose_approx`] plus its instrumentation.
#[derive(Clone, Debug)]
pub struct ApproxReport {
    pub decomposition: Decomposition,
    pub oracle_calls: usize,
    /// Schedule mass the successful inner solve used before padding.
    pub budget: f64,
}

/// Approximate decomposition by binary search over the schedule mass `t`
/// with a multiplicative-weights inner loop: multipliers over the links
/// pick oracle weights `lambda_i / (a_i + eps)`, the oracle's maximal sets
/// are averaged into the cover, and the multipliers decay exponentially in
/// each link's coverage gain. Succeeds once the averaged cover reaches
/// `(1 - tol)` of the padded target componentwise.
pub fn decompose_approx(
    g: &InterferenceGraph,
    a: &[f64],
    eps: f64,
    tol: f64,
    oracle: &mut dyn FnMut(&[f64]) -> IndependentSet,
) -> Result<ApproxReport, DecomposeError> {
    check_rates(g, a)?;
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(SynthError::BadSlack(eps).into());
    }
    if !(tol > 0.0 && tol < 1.0) {
        return Err(SynthError::BadTolerance(tol).into());
    }
    let n = g.link_count();
    let target: Vec<f64> = a.iter().map(|&ai| ai + eps).collect();
    // Required ratio carries a small guard so the declared factor still
    // holds verbatim after the support reduction.
    let needed = (1.0 - tol) * (1.0 + 10.0 * COVER_GUARD);
    let min_target = target.iter().cloned().fold(f64::INFINITY, f64::min);
    let width = 1.0 / min_target;
    let max_iters = ((4.0 * width * width * (n.max(2) as f64).ln() / (tol * tol)) as usize)
        .clamp(4_000, 400_000);

    let mut calls = 0usize;
    let mut best_ratio = f64::NEG_INFINITY;
    let mut inner = |t: f64, calls: &mut usize, best_ratio: &mut f64| -> Option<Vec<(IndependentSet, f64)>> {
        let mut lambda = vec![1.0 / n as f64; n];
        let mut hits: BTreeMap<IndependentSet, u64> = BTreeMap::new();
        let mut hit_count = vec![0u64; n];
        for it in 1..=max_iters {
            let weights: Vec<f64> = lambda
                .iter()
                .zip(&target)
                .map(|(&l, &tg)| l / tg)
                .collect();
            let set = oracle(&weights);
            *calls += 1;
            for &i in set.members() {
                hit_count[i] += 1;
            }
            *hits.entry(set.clone()).or_insert(0) += 1;
            // Ratio achieved by the running average at mass t.
            let ratio = hit_count
                .iter()
                .zip(&target)
                .map(|(&h, &tg)| t * h as f64 / it as f64 / tg)
                .fold(f64::INFINITY, f64::min);
            if ratio > *best_ratio {
                *best_ratio = ratio;
            }
            if ratio >= needed {
                let scale = t / it as f64;
                return Some(
                    hits.into_iter()
                        .map(|(s, h)| (s, h as f64 * scale))
                        .collect(),
                );
            }
            // Anytime multiplicative update against the coverage gains.
            let eta = (  (n.max(2) as f64).ln() / it as f64).sqrt() / (t * width);
            let mut norm = 0.0;
            for i in 0..n {
                let gain = if set.contains(i) { t / target[i] } else { 0.0 };
                lambda[i] *= (-eta * gain).exp();
                norm += lambda[i];
            }
            for l in &mut lambda {
                *l /= norm;
            }
        }
        None
    };

    // Mass 1 first; a feasible instance that fails here is reported as
    // non-convergent with the best ratio seen.
    let mut solution = match inner(1.0, &mut calls, &mut best_ratio) {
        Some(s) => s,
        None => {
            return Err(DecomposeError::NonConvergence {
                oracle_calls: calls,
                best_ratio,
            })
        }
    };
    let mut t_good = 1.0;
    let mut t_bad = needed * target.iter().cloned().fold(0.0, f64::max);
    for _ in 0..10 {
        let mid = 0.5 * (t_bad + t_good);
        if mid >= t_good {
            break;
        }
        match inner(mid, &mut calls, &mut best_ratio) {
            Some(s) => {
                solution = s;
                t_good = mid;
            }
            None => t_bad = mid,
        }
    }

    // Normalize to a distribution: pad the leftover onto the first set.
    let mass: f64 = solution.iter().map(|(_, w)| w).sum();
    let leftover = (1.0 - mass).max(0.0);
    if leftover > 0.0 {
        solution[0].1 += leftover;
    }
    let mut terms = caratheodory_reduce(n, solution);
    let total: f64 = terms.iter().map(|(_, w)| w).sum();
    for (_, w) in &mut terms {
        *w /= total;
    }
    let decomposition = Decomposition {
        terms,
        eps,
        coverage_factor: 1.0 - tol,
    };
    debug_assert!(decomposition.residuals(a).iter().all(|&r| r >= 0.0));
    Ok(ApproxReport {
        decomposition,
        oracle_calls: calls,
        budget: t_good,
    })
}

/// Shrinks a weighted collection of sets to at most `n + 1` terms without
/// changing total weight or componentwise coverage: repeatedly finds an
/// affine dependency among the member columns and walks along it until a
/// weight hits zero.
pub fn caratheodory_reduce(
    n: usize,
    terms: Vec<(IndependentSet, f64)>,
) -> Vec<(IndependentSet, f64)> {
    // Merge duplicates first.
    let mut merged: BTreeMap<IndependentSet, f64> = BTreeMap::new();
    for (s, w) in terms {
        if w > 0.0 {
            *merged.entry(s).or_insert(0.0) += w;
        }
    }
    let mut terms: Vec<(IndependentSet, f64)> = merged.into_iter().collect();
    while terms.len() > n + 1 {
        let s = terms.len();
        // Rows: one per link plus the all-ones row; columns: terms.
        let mut matrix = vec![vec![0.0f64; s]; n + 1];
        for (c, (set, _)) in terms.iter().enumerate() {
            for &i in set.members() {
                matrix[i][c] = 1.0;
            }
            matrix[n][c] = 1.0;
        }
        let Some(mut gamma) = null_vector(&mut matrix, s) else {
            break;
        };
        if gamma.iter().all(|&v| v <= 1e-14) {
            for v in &mut gamma {
                *v = -*v;
            }
        }
        let mut tau = f64::INFINITY;
        for (c, &gc) in gamma.iter().enumerate() {
            if gc > 1e-14 {
                tau = tau.min(terms[c].1 / gc);
            }
        }
        if !tau.is_finite() {
            break;
        }
        for (c, &gc) in gamma.iter().enumerate() {
            terms[c].1 -= tau * gc;
            if terms[c].1 < 1e-15 {
                terms[c].1 = 0.0;
            }
        }
        terms.retain(|(_, w)| *w > 0.0);
    }
    terms
}

/// A nonzero vector in the null space of an (n+1) x s matrix with s >
/// n+1, via Gauss-Jordan elimination. Consumes the matrix.
fn null_vector(matrix: &mut [Vec<f64>], s: usize) -> Option<Vec<f64>> {
    let m = matrix.len();
    let mut pivot_col = vec![usize::MAX; m];
    let mut rank = 0;
    for col in 0..s {
        // Partial pivot within the unreduced rows.
        let mut best = rank;
        for r in rank..m {
            if matrix[r][col].abs() > matrix[best][col].abs() {
                best = r;
            }
        }
        if rank >= m || matrix[best][col].abs() < 1e-11 {
            continue;
        }
        matrix.swap(rank, best);
        let piv = matrix[rank][col];
        for v in &mut matrix[rank] {
            *v /= piv;
        }
        for r in 0..m {
            if r != rank {
                let f = matrix[r][col];
                if f != 0.0 {
                    for c2 in 0..s {
                        matrix[r][c2] -= f * matrix[rank][c2];
                    }
                }
            }
        }
        pivot_col[rank] = col;
        rank += 1;
        if rank == m {
            break;
        }
    }
    // First non-pivot column spans a dependency.
    let pivots: Vec<usize> = pivot_col[..rank].to_vec();
    let free = (0..s).find(|c| !pivots.contains(c))?;
    let mut gamma = vec![0.0; s];
    gamma[free] = 1.0;
    for (r, &pc) in pivots.iter().enumerate() {
        gamma[pc] = -matrix[r][free];
    }
    Some(gamma)
}

/// Builds the per-slot priority distribution induced by a decomposition:
/// each term's members take the top ranks (by index order) with the term's
/// weight as probability.
pub fn decomposition_to_distribution(
    n: usize,
    d: &Decomposition,
) -> Result<PriorityDistribution, crate::engine::EngineError> {
    let entries = d
        .terms
        .iter()
        .map(|(s, w)| {
            let mut order: Vec<LinkId> = s.members().to_vec();
            order.extend((0..n).filter(|i| !s.contains(*i)));
            Ok((Priority::from_order(&order)?, *w))
        })
        .collect::<Result<Vec<_>, crate::engine::EngineError>>()?;
    PriorityDistribution::new(entries)
}

// ---------------------------------------------------------------------------
// Efficiency floor
// ---------------------------------------------------------------------------

/// `1/delta` together with the witness removal sequence and the priority
/// that realizes the floor (reverse peel order).
#[derive(Clone, Debug)]
pub struct EfficiencyFloor {
    pub delta: usize,
    pub floor: f64,
    pub witness: RemovalSequence,
    pub priority: Priority,
}

/// Computes the guaranteed fraction of the optimal stability region
/// reachable with a fixed priority: `1/delta`, using the exact factorial
/// search on small graphs and the greedy peel otherwise.
pub fn efficiency_floor(g: &InterferenceGraph) -> Result<EfficiencyFloor, GraphError> {
    let mode = if g.link_count() <= BRUTE_DELTA_CAP {
        DeltaMode::Brute
    } else {
        DeltaMode::Greedy
    };
    let (delta, witness) = compute_delta(g, mode)?;
    let reversed: Vec<LinkId> = witness.order.iter().rev().copied().collect();
    let priority = Priority::from_order(&reversed).expect("removal orders are permutations");
    Ok(EfficiencyFloor {
        delta,
        floor: 1.0 / delta as f64,
        witness,
        priority,
    })
}
