//! Slotted-time queueing simulator. Each slot the scheduler resolves a
//! priority vector, serves a maximal independent set of nonempty queues
//! greedily in priority order (one packet per served link), and then
//! appends the slot's arrivals. Counters satisfy
//! `Q_i(n) = Q_i(0) + A_i(n) - D_i(n)` exactly at every step.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::Rng;
use rand_chacha::ChaCha12Rng;
use thiserror::Error;

use crate::graph::{
    GraphError, IndependentSet, InterferenceGraph, LinkId, DEFAULT_ENUMERATION_CAP,
};
use crate::streams;
use crate::traffic::{group_phase, ArrivalModel, ArrivalSampler};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("{what} has {got} entries, expected {expected}")]
    DimensionMismatch {
        what: &'static str,
        got: usize,
        expected: usize,
    },
    #[error("priority ranks must be a permutation of 1..={n}")]
    NotAPermutation { n: usize },
    #[error("priority distribution weights must be nonnegative and sum to 1 (sum {0})")]
    BadWeights(f64),
    #[error("priority distribution must not be empty")]
    EmptyDistribution,
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("simulation needs at least one slot")]
    NoSlots,
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// A priority vector: rank per link, a bijection onto `1..=n`. Lower rank
/// means higher priority (served earlier in the greedy pass).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Priority {
    ranks: Vec<usize>,
}

impl Priority {
    pub fn from_ranks(ranks: Vec<usize>) -> Result<Self, EngineError> {
        let n = ranks.len();
        let mut seen = vec![false; n + 1];
        for &r in &ranks {
            if r == 0 || r > n || seen[r] {
                return Err(EngineError::NotAPermutation { n });
            }
            seen[r] = true;
        }
        Ok(Self { ranks })
    }

    /// Builds a priority from a service order: `order[0]` gets rank 1.
    pub fn from_order(order: &[LinkId]) -> Result<Self, EngineError> {
        let n = order.len();
        let mut ranks = vec![0; n];
        for (pos, &link) in order.iter().enumerate() {
            if link >= n || ranks[link] != 0 {
                return Err(EngineError::NotAPermutation { n });
            }
            ranks[link] = pos + 1;
        }
        Ok(Self { ranks })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            ranks: (1..=n).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.ranks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranks.is_empty()
    }

    /// Rank of link `i` (1 = highest priority).
    pub fn rank(&self, i: LinkId) -> usize {
        self.ranks[i]
    }

    pub fn ranks(&self) -> &[usize] {
        &self.ranks
    }

    /// Links ordered from highest to lowest priority.
    pub fn order(&self) -> Vec<LinkId> {
        let mut links: Vec<LinkId> = (0..self.ranks.len()).collect();
        links.sort_by_key(|&i| self.ranks[i]);
        links
    }

    /// Neighbors of `i` with strictly higher priority.
    pub fn higher_priority_neighbors(&self, g: &InterferenceGraph, i: LinkId) -> Vec<LinkId> {
        g.neighbors(i)
            .iter()
            .copied()
            .filter(|&j| self.ranks[j] < self.ranks[i])
            .collect()
    }

    /// Text form: one `priority <link> <rank>` line per link, 1-based.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (i, &r) in self.ranks.iter().enumerate() {
            let _ = writeln!(out, "priority {} {}", i + 1, r);
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, EngineError> {
        let mut pairs: Vec<(usize, usize)> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 3 || fields[0] != "priority" {
                return Err(EngineError::Parse {
                    line: lineno,
                    msg: "expected `priority <link> <rank>`".into(),
                });
            }
            let link: usize = fields[1].parse().map_err(|_| EngineError::Parse {
                line: lineno,
                msg: "malformed link id".into(),
            })?;
            let rank: usize = fields[2].parse().map_err(|_| EngineError::Parse {
                line: lineno,
                msg: "malformed rank".into(),
            })?;
            if link == 0 {
                return Err(EngineError::Parse {
                    line: lineno,
                    msg: "link ids are 1-based".into(),
                });
            }
            pairs.push((link - 1, rank));
        }
        let n = pairs.len();
        let mut ranks = vec![0usize; n];
        for (link, rank) in pairs {
            if link >= n || ranks[link] != 0 {
                return Err(EngineError::NotAPermutation { n });
            }
            ranks[link] = rank;
        }
        Self::from_ranks(ranks)
    }
}

/// A finite distribution over priority vectors, sampled i.i.d. per slot.
#[derive(Clone, Debug, PartialEq)]
pub struct PriorityDistribution {
    entries: Vec<(Priority, f64)>,
}

impl PriorityDistribution {
    pub fn new(entries: Vec<(Priority, f64)>) -> Result<Self, EngineError> {
        if entries.is_empty() {
            return Err(EngineError::EmptyDistribution);
        }
        let n = entries[0].0.len();
        for (p, w) in &entries {
            if p.len() != n {
                return Err(EngineError::DimensionMismatch {
                    what: "priority distribution entry",
                    got: p.len(),
                    expected: n,
                });
            }
            if !(*w >= 0.0) || !w.is_finite() {
                return Err(EngineError::BadWeights(*w));
            }
        }
        let sum: f64 = entries.iter().map(|(_, w)| w).sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(EngineError::BadWeights(sum));
        }
        let entries = entries
            .into_iter()
            .map(|(p, w)| (p, w / sum))
            .collect();
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[(Priority, f64)] {
        &self.entries
    }

    pub fn link_count(&self) -> usize {
        self.entries[0].0.len()
    }

    /// Exact probability that `i` beats every link in `others`.
    pub fn win_probability(&self, i: LinkId, others: &[LinkId]) -> f64 {
        self.entries
            .iter()
            .filter(|(p, _)| others.iter().all(|&j| p.rank(i) < p.rank(j)))
            .map(|(_, w)| w)
            .sum()
    }
}

/// How the per-slot priority vector is produced.
#[derive(Clone, Debug)]
pub enum PrioritySpec {
    Fixed(Priority),
    Distribution(PriorityDistribution),
    /// Longest queue first; ties toward the lower link index.
    Lqf,
    /// Max-weight: links of a maximum-queue-weight independent set get the
    /// top ranks, everything else follows in index order.
    MaxWeight,
}

/// Queue lengths plus cumulative arrival/departure counters.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimState {
    pub slot: u64,
    pub queues: Vec<u64>,
    pub cum_arrivals: Vec<u64>,
    pub cum_departures: Vec<u64>,
}

impl SimState {
    fn empty(n: usize) -> Self {
        Self {
            slot: 0,
            queues: vec![0; n],
            cum_arrivals: vec![0; n],
            cum_departures: vec![0; n],
        }
    }
}

/// What happened in one slot.
#[derive(Clone, Debug)]
pub struct StepRecord {
    pub schedule: IndependentSet,
}

/// Greedy prioritized maximal schedule: visit links from highest to lowest
/// priority; pick a link iff its queue is nonempty and none of its already
/// picked neighbors conflict. The result is independent and maximal with
/// respect to the nonempty-queue links.
pub fn prioritized_maximal_schedule(
    g: &InterferenceGraph,
    queues: &[u64],
    p: &Priority,
) -> IndependentSet {
    let n = g.link_count();
    debug_assert_eq!(queues.len(), n);
    debug_assert_eq!(p.len(), n);
    let mut picked = vec![false; n];
    let mut members = Vec::new();
    for i in p.order() {
        if queues[i] == 0 {
            continue;
        }
        if g.neighbors(i).iter().any(|&j| picked[j]) {
            continue;
        }
        picked[i] = true;
        members.push(i);
    }
    IndependentSet::new(members)
}

/// A single sequential simulation run; owns its state and streams.
pub struct Simulation {
    g: InterferenceGraph,
    spec: PrioritySpec,
    samplers: Vec<ArrivalSampler>,
    sched_rng: ChaCha12Rng,
    state: SimState,
    /// Enumerated maximal sets, only for the max-weight rule.
    families: Option<Vec<IndependentSet>>,
}

impl Simulation {
    pub fn new(
        g: &InterferenceGraph,
        spec: &PrioritySpec,
        models: &[ArrivalModel],
        seed: u64,
    ) -> Result<Self, EngineError> {
        let keys: Vec<u64> = (0..g.link_count() as u64).collect();
        Self::with_stream_keys(g, spec, models, seed, &keys)
    }

    /// As [`Simulation::new`] but with explicit per-link arrival stream
    /// keys, so two systems can be fed identical arrival sample paths.
    pub fn with_stream_keys(
        g: &InterferenceGraph,
        spec: &PrioritySpec,
        models: &[ArrivalModel],
        seed: u64,
        stream_keys: &[u64],
    ) -> Result<Self, EngineError> {
        let n = g.link_count();
        if models.len() != n {
            return Err(EngineError::DimensionMismatch {
                what: "arrival models",
                got: models.len(),
                expected: n,
            });
        }
        if stream_keys.len() != n {
            return Err(EngineError::DimensionMismatch {
                what: "stream keys",
                got: stream_keys.len(),
                expected: n,
            });
        }
        match spec {
            PrioritySpec::Fixed(p) => {
                if p.len() != n {
                    return Err(EngineError::DimensionMismatch {
                        what: "priority",
                        got: p.len(),
                        expected: n,
                    });
                }
            }
            PrioritySpec::Distribution(d) => {
                if d.link_count() != n {
                    return Err(EngineError::DimensionMismatch {
                        what: "priority distribution",
                        got: d.link_count(),
                        expected: n,
                    });
                }
            }
            _ => {}
        }
        // Shared phases for correlated groups, one draw per group name.
        let mut phases: BTreeMap<&str, u64> = BTreeMap::new();
        for m in models {
            if let Some(gname) = m.group() {
                phases
                    .entry(gname)
                    .or_insert_with(|| group_phase(seed, gname));
            }
        }
        let samplers = models
            .iter()
            .zip(stream_keys)
            .map(|(m, &key)| m.sampler(seed, key, m.group().map(|gr| phases[gr])))
            .collect();
        let families = match spec {
            PrioritySpec::MaxWeight => {
                Some(crate::graph::enumerate_maximal_sets_capped(g, DEFAULT_ENUMERATION_CAP)?)
            }
            _ => None,
        };
        Ok(Self {
            g: g.clone(),
            spec: spec.clone(),
            samplers,
            sched_rng: streams::substream(seed, streams::DOM_SCHEDULER, 0),
            state: SimState::empty(n),
            families,
        })
    }

    pub fn state(&self) -> &SimState {
        &self.state
    }

    pub fn graph(&self) -> &InterferenceGraph {
        &self.g
    }

    fn resolve_priority(&mut self) -> Priority {
        let n = self.g.link_count();
        match &self.spec {
            PrioritySpec::Fixed(p) => p.clone(),
            PrioritySpec::Distribution(d) => {
                let u = self.sched_rng.random::<f64>();
                let mut acc = 0.0;
                for (p, w) in d.entries() {
                    acc += w;
                    if u < acc {
                        return p.clone();
                    }
                }
                d.entries().last().unwrap().0.clone()
            }
            PrioritySpec::Lqf => {
                let mut links: Vec<LinkId> = (0..n).collect();
                links.sort_by(|&a, &b| {
                    self.state.queues[b]
                        .cmp(&self.state.queues[a])
                        .then(a.cmp(&b))
                });
                Priority::from_order(&links).expect("orders are permutations")
            }
            PrioritySpec::MaxWeight => {
                let weights: Vec<f64> =
                    self.state.queues.iter().map(|&q| q as f64).collect();
                let family = self.families.as_ref().expect("cached for max-weight");
                let mut best: Option<(f64, &IndependentSet)> = None;
                for s in family {
                    let v = s.weight(&weights);
                    match best {
                        Some((bv, _)) if v <= bv => {}
                        _ => best = Some((v, s)),
                    }
                }
                let chosen = best.expect("family is non-empty").1;
                let mut order: Vec<LinkId> = chosen.members().to_vec();
                order.extend((0..n).filter(|i| !chosen.contains(*i)));
                Priority::from_order(&order).expect("orders are permutations")
            }
        }
    }

    /// Advances one slot: schedule and depart on start-of-slot queues,
    /// then append the slot's arrivals.
    pub fn step(&mut self) -> StepRecord {
        let p = self.resolve_priority();
        let schedule = prioritized_maximal_schedule(&self.g, &self.state.queues, &p);
        for &i in schedule.members() {
            self.state.queues[i] -= 1;
            self.state.cum_departures[i] += 1;
        }
        let slot = self.state.slot;
        for (i, sampler) in self.samplers.iter_mut().enumerate() {
            let a = sampler.sample(slot) as u64;
            self.state.queues[i] += a;
            self.state.cum_arrivals[i] += a;
        }
        self.state.slot += 1;
        StepRecord { schedule }
    }
}

/// Per-link summary of a run.
#[derive(Clone, Debug, PartialEq)]
pub struct LinkStats {
    pub rate_in: f64,
    pub rate_out: f64,
    pub mean_queue: f64,
    pub max_queue: u64,
    pub drift: f64,
    pub final_queue: u64,
    pub cum_arrivals: u64,
    pub cum_departures: u64,
    /// Post-burn-in slots with end-of-slot queue strictly above each
    /// threshold, aligned with [`RunStats::thresholds`].
    pub overflow_slots: Vec<u64>,
}

/// Summary of one run (or of several merged replications).
#[derive(Clone, Debug, PartialEq)]
pub struct RunStats {
    pub slots: u64,
    pub burn_in: u64,
    /// Slots contributing to overflow frequencies (post burn-in).
    pub measured_slots: u64,
    pub thresholds: Vec<u64>,
    pub per_link: Vec<LinkStats>,
}

impl RunStats {
    pub fn overflow_frequency(&self, link: LinkId, t_idx: usize) -> f64 {
        self.per_link[link].overflow_slots[t_idx] as f64 / self.measured_slots as f64
    }
}

/// Runs `slots` steps from empty queues and collects statistics.
/// Overflow frequencies discard the first 10% of slots as burn-in.
pub fn run(
    g: &InterferenceGraph,
    spec: &PrioritySpec,
    models: &[ArrivalModel],
    slots: u64,
    seed: u64,
    thresholds: &[u64],
) -> Result<RunStats, EngineError> {
    let keys: Vec<u64> = (0..g.link_count() as u64).collect();
    run_observed(g, spec, models, slots, seed, thresholds, &keys, |_, _, _| {})
}

/// As [`run`] with explicit stream keys and a per-slot observer called
/// after every step with the slot index, the step record, and the
/// post-step state.
#[allow(clippy::too_many_arguments)]
pub fn run_observed(
    g: &InterferenceGraph,
    spec: &PrioritySpec,
    models: &[ArrivalModel],
    slots: u64,
    seed: u64,
    thresholds: &[u64],
    stream_keys: &[u64],
    mut observer: impl FnMut(u64, &StepRecord, &SimState),
) -> Result<RunStats, EngineError> {
    if slots == 0 {
        return Err(EngineError::NoSlots);
    }
    let n = g.link_count();
    let mut sim = Simulation::with_stream_keys(g, spec, models, seed, stream_keys)?;
    let burn_in = slots / 10;
    let mut queue_sum = vec![0u128; n];
    let mut max_queue = vec![0u64; n];
    let mut overflow = vec![vec![0u64; thresholds.len()]; n];
    for slot in 0..slots {
        let record = sim.step();
        let state = sim.state();
        for i in 0..n {
            let q = state.queues[i];
            queue_sum[i] += q as u128;
            max_queue[i] = max_queue[i].max(q);
            if slot >= burn_in {
                for (t_idx, &b) in thresholds.iter().enumerate() {
                    if q > b {
                        overflow[i][t_idx] += 1;
                    }
                }
            }
        }
        observer(slot, &record, state);
    }
    let state = sim.state();
    let per_link = (0..n)
        .map(|i| LinkStats {
            rate_in: state.cum_arrivals[i] as f64 / slots as f64,
            rate_out: state.cum_departures[i] as f64 / slots as f64,
            mean_queue: queue_sum[i] as f64 / slots as f64,
            max_queue: max_queue[i],
            drift: state.queues[i] as f64 / slots as f64,
            final_queue: state.queues[i],
            cum_arrivals: state.cum_arrivals[i],
            cum_departures: state.cum_departures[i],
            overflow_slots: overflow[i].clone(),
        })
        .collect();
    Ok(RunStats {
        slots,
        burn_in,
        measured_slots: slots - burn_in,
        thresholds: thresholds.to_vec(),
        per_link,
    })
}

/// Seed for replication `rep` of a run with master seed `master`.
pub fn replication_seed(master: u64, rep: u64) -> u64 {
    streams::replication_seed(master, rep)
}

/// Pools several replications as if they were one long run: counters and
/// overflow counts add, maxima combine, and rates are recomputed from the
/// pooled totals.
pub fn merge_runs(runs: &[RunStats]) -> Option<RunStats> {
    let first = runs.first()?;
    let n = first.per_link.len();
    let mut merged = first.clone();
    for r in &runs[1..] {
        assert_eq!(r.per_link.len(), n, "replications must match in shape");
        assert_eq!(r.thresholds, first.thresholds);
        merged.slots += r.slots;
        merged.burn_in += r.burn_in;
        merged.measured_slots += r.measured_slots;
        for i in 0..n {
            let (a, b) = (&mut merged.per_link[i], &r.per_link[i]);
            a.cum_arrivals += b.cum_arrivals;
            a.cum_departures += b.cum_departures;
            a.final_queue += b.final_queue;
            a.max_queue = a.max_queue.max(b.max_queue);
            for (t, &v) in b.overflow_slots.iter().enumerate() {
                a.overflow_slots[t] += v;
            }
        }
    }
    for i in 0..n {
        let total = merged.slots as f64;
        let weighted: f64 = runs
            .iter()
            .map(|r| r.per_link[i].mean_queue * r.slots as f64)
            .sum();
        let s = &mut merged.per_link[i];
        s.rate_in = s.cum_arrivals as f64 / total;
        s.rate_out = s.cum_departures as f64 / total;
        s.mean_queue = weighted / total;
        s.drift = s.final_queue as f64 / total;
    }
    Some(merged)
}

/// CSV summary, one row per link:
/// `link,rate_in,rate_out,mean_q,max_q,drift[,ovf_B<t>...]`.
pub fn summary_csv(stats: &RunStats) -> String {
    let mut out = String::from("link,rate_in,rate_out,mean_q,max_q,drift");
    for b in &stats.thresholds {
        let _ = write!(out, ",ovf_B{b}");
    }
    out.push('\n');
    for (i, s) in stats.per_link.iter().enumerate() {
        let _ = write!(
            out,
            "{},{:.6},{:.6},{:.6},{},{:.6}",
            i + 1,
            s.rate_in,
            s.rate_out,
            s.mean_queue,
            s.max_queue,
            s.drift
        );
        for t_idx in 0..stats.thresholds.len() {
            let _ = write!(out, ",{:.9}", stats.overflow_frequency(i, t_idx));
        }
        out.push('\n');
    }
    out
}

/// A reduced system whose tagged link's queue dominates the original's.
#[derive(Clone, Debug)]
pub struct DominantSystem {
    pub graph: InterferenceGraph,
    pub priority: Priority,
    pub models: Vec<ArrivalModel>,
    /// Original link ids of the members, index-aligned with the new graph.
    /// Feed these as stream keys to couple arrival sample paths.
    pub members: Vec<LinkId>,
    /// Index of the tagged link within the new graph.
    pub tagged: LinkId,
}

/// Clique system over the tagged link and its strictly higher-priority
/// neighbors; the tagged link gets the lowest priority and the rest keep
/// their relative order. Arrival models carry over unchanged.
pub fn build_dominant_system(
    g: &InterferenceGraph,
    i: LinkId,
    p: &Priority,
    models: &[ArrivalModel],
) -> Result<DominantSystem, EngineError> {
    g.check_index(i)?;
    if p.len() != g.link_count() {
        return Err(EngineError::DimensionMismatch {
            what: "priority",
            got: p.len(),
            expected: g.link_count(),
        });
    }
    let competitors = p.higher_priority_neighbors(g, i);
    dominant_from_competitors(g, i, &competitors, models, Some(p))
}

/// Worst-case variant: the clique spans the whole closed neighborhood,
/// regardless of priorities.
pub fn worst_case_dominant_system(
    g: &InterferenceGraph,
    i: LinkId,
    models: &[ArrivalModel],
) -> Result<DominantSystem, EngineError> {
    g.check_index(i)?;
    let competitors = g.neighbors(i).to_vec();
    dominant_from_competitors(g, i, &competitors, models, None)
}

fn dominant_from_competitors(
    g: &InterferenceGraph,
    i: LinkId,
    competitors: &[LinkId],
    models: &[ArrivalModel],
    p: Option<&Priority>,
) -> Result<DominantSystem, EngineError> {
    if models.len() != g.link_count() {
        return Err(EngineError::DimensionMismatch {
            what: "arrival models",
            got: models.len(),
            expected: g.link_count(),
        });
    }
    let mut members = competitors.to_vec();
    members.push(i);
    members.sort_unstable();
    let k = members.len();
    let clique = InterferenceGraph::complete(k)?;
    let tagged = members.binary_search(&i).expect("tagged link is a member");
    // Tagged link lowest; competitors keep their relative order (by the
    // original ranks when given, by index otherwise).
    let mut order: Vec<LinkId> = (0..k).filter(|&m| m != tagged).collect();
    if let Some(p) = p {
        order.sort_by_key(|&m| p.rank(members[m]));
    }
    order.push(tagged);
    let priority = Priority::from_order(&order).expect("orders are permutations");
    let models = members.iter().map(|&m| models[m].clone()).collect();
    Ok(DominantSystem {
        graph: clique,
        priority,
        models,
        members,
        tagged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g6() -> InterferenceGraph {
        InterferenceGraph::new(6, &[(0, 4), (0, 5), (1, 3), (1, 5), (2, 3), (4, 5)]).unwrap()
    }

    fn two_clique() -> InterferenceGraph {
        InterferenceGraph::complete(2).unwrap()
    }

    #[test]
    fn schedule_on_a_two_link_clique() {
        let g = two_clique();
        let p = Priority::from_ranks(vec![1, 2]).unwrap();
        let s = prioritized_maximal_schedule(&g, &[1, 1], &p);
        assert_eq!(s.members(), &[0]);
        let s = prioritized_maximal_schedule(&g, &[0, 0], &p);
        assert!(s.is_empty());
    }

    #[test]
    fn schedule_trace_on_sample_graph() {
        let g = g6();
        let p = Priority::identity(6);
        let s = prioritized_maximal_schedule(&g, &[3, 1, 2, 9, 4, 4], &p);
        assert_eq!(s.members(), &[0, 1, 2]);
    }

    #[test]
    fn one_slot_trace_matches_the_queueing_recursion() {
        let g = two_clique();
        // Arrivals this slot: link 2 gets one packet (rate-1 Bernoulli),
        // link 1 none.
        let models = vec![
            ArrivalModel::bernoulli(0.0).unwrap(),
            ArrivalModel::bernoulli(1.0).unwrap(),
        ];
        let spec = PrioritySpec::Fixed(Priority::from_ranks(vec![1, 2]).unwrap());
        let mut sim = Simulation::new(&g, &spec, &models, 3).unwrap();
        sim.state.queues = vec![1, 1];
        sim.step();
        assert_eq!(sim.state().queues, vec![0, 2]);
        assert_eq!(sim.state().cum_departures, vec![1, 0]);
        assert_eq!(sim.state().cum_arrivals, vec![0, 1]);
    }

    #[test]
    fn lqf_serves_the_longest_queue() {
        let g = two_clique();
        let models = vec![
            ArrivalModel::bernoulli(0.0).unwrap(),
            ArrivalModel::bernoulli(0.0).unwrap(),
        ];
        let mut sim = Simulation::new(&g, &PrioritySpec::Lqf, &models, 1).unwrap();
        sim.state.queues = vec![5, 2];
        let rec = sim.step();
        assert_eq!(rec.schedule.members(), &[0]);
        sim.state.queues = vec![2, 5];
        let rec = sim.step();
        assert_eq!(rec.schedule.members(), &[1]);
    }

    #[test]
    fn max_weight_prefers_the_heavier_independent_set() {
        let g = g6();
        let models: Vec<_> = (0..6).map(|_| ArrivalModel::bernoulli(0.0).unwrap()).collect();
        let mut sim = Simulation::new(&g, &PrioritySpec::MaxWeight, &models, 1).unwrap();
        sim.state.queues = vec![0, 0, 0, 5, 0, 4];
        let rec = sim.step();
        assert_eq!(rec.schedule.members(), &[3, 5]);
    }

    #[test]
    fn counters_satisfy_the_queueing_identity_exactly() {
        let g = g6();
        let models: Vec<_> = (0..6)
            .map(|i| ArrivalModel::bernoulli(0.1 * (i + 1) as f64).unwrap())
            .collect();
        let spec = PrioritySpec::Lqf;
        let mut sim = Simulation::new(&g, &spec, &models, 11).unwrap();
        for _ in 0..5000 {
            sim.step();
            let s = sim.state();
            for i in 0..6 {
                assert_eq!(
                    s.queues[i],
                    s.cum_arrivals[i] - s.cum_departures[i],
                    "identity violated at slot {}",
                    s.slot
                );
            }
        }
    }

    #[test]
    fn every_schedule_is_independent_and_maximal_among_nonempty() {
        let g = g6();
        let models: Vec<_> = (0..6)
            .map(|i| ArrivalModel::bernoulli(0.12 * (i + 1) as f64).unwrap())
            .collect();
        for spec in [
            PrioritySpec::Fixed(Priority::from_ranks(vec![3, 1, 5, 2, 6, 4]).unwrap()),
            PrioritySpec::Lqf,
            PrioritySpec::MaxWeight,
        ] {
            let mut sim = Simulation::new(&g, &spec, &models, 17).unwrap();
            for _ in 0..2000 {
                let before = sim.state().queues.clone();
                let rec = sim.step();
                let sched = &rec.schedule;
                assert!(crate::graph::is_independent(&g, sched.members()).unwrap());
                for i in 0..6 {
                    if before[i] > 0 && !sched.contains(i) {
                        // Maximality: some scheduled neighbor blocks i, so
                        // the closed neighborhood saw a departure.
                        assert!(
                            g.neighbors(i).iter().any(|&j| sched.contains(j)),
                            "link {i} was serviceable but unblocked"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn distribution_shares_service_evenly_on_a_clique() {
        let g = two_clique();
        let models = vec![
            ArrivalModel::bernoulli(1.0).unwrap(),
            ArrivalModel::bernoulli(1.0).unwrap(),
        ];
        let dist = PriorityDistribution::new(vec![
            (Priority::from_ranks(vec![1, 2]).unwrap(), 0.5),
            (Priority::from_ranks(vec![2, 1]).unwrap(), 0.5),
        ])
        .unwrap();
        let stats = run(
            &g,
            &PrioritySpec::Distribution(dist),
            &models,
            1_000_000,
            23,
            &[],
        )
        .unwrap();
        for s in &stats.per_link {
            assert!((s.rate_out - 0.5).abs() <= 0.01, "rate_out {}", s.rate_out);
        }
    }

    #[test]
    fn zero_rate_run_is_all_zero() {
        let g = two_clique();
        let models = vec![
            ArrivalModel::bernoulli(0.0).unwrap(),
            ArrivalModel::bernoulli(0.0).unwrap(),
        ];
        let spec = PrioritySpec::Fixed(Priority::identity(2));
        let stats = run(&g, &spec, &models, 10_000, 1, &[0, 5]).unwrap();
        for s in &stats.per_link {
            assert_eq!(s.rate_in, 0.0);
            assert_eq!(s.rate_out, 0.0);
            assert_eq!(s.max_queue, 0);
            assert!(s.overflow_slots.iter().all(|&c| c == 0));
        }
    }

    #[test]
    fn runs_are_deterministic_in_the_seed() {
        let g = g6();
        let models: Vec<_> = (0..6)
            .map(|i| ArrivalModel::bernoulli(0.08 * (i + 1) as f64).unwrap())
            .collect();
        let spec = PrioritySpec::Lqf;
        let a = run(&g, &spec, &models, 20_000, 5, &[2, 4]).unwrap();
        let b = run(&g, &spec, &models, 20_000, 5, &[2, 4]).unwrap();
        assert_eq!(a, b);
        let c = run(&g, &spec, &models, 20_000, 6, &[2, 4]).unwrap();
        assert_ne!(a, c);
        assert_eq!(summary_csv(&a), summary_csv(&b));
    }

    #[test]
    fn output_rate_is_bounded_by_input_rate() {
        let g = g6();
        let models: Vec<_> = (0..6)
            .map(|i| ArrivalModel::bernoulli(0.1 + 0.05 * i as f64).unwrap())
            .collect();
        let stats = run(&g, &PrioritySpec::Lqf, &models, 50_000, 9, &[]).unwrap();
        for s in &stats.per_link {
            assert!(s.rate_out <= s.rate_in + 1e-12);
        }
    }

    #[test]
    fn dominant_system_shapes() {
        let g = g6();
        let models: Vec<_> = (0..6).map(|_| ArrivalModel::bernoulli(0.2).unwrap()).collect();
        //

        // Worst case for link 6 (index 5): clique on {1,2,5,6}.
        let dom = worst_case_dominant_system(&g, 5, &models).unwrap();
        assert_eq!(dom.members, vec![0, 1, 4, 5]);
        assert_eq!(dom.graph.link_count(), 4);
        assert_eq!(dom.priority.rank(dom.tagged), 4);

        // No higher-priority neighbors: single-node system.
        let p = Priority::from_ranks(vec![1, 2, 3, 4, 5, 6]).unwrap();
        let dom0 = build_dominant_system(&g, 0, &p, &models).unwrap();
        assert_eq!(dom0.members, vec![0]);
        assert_eq!(dom0.graph.link_count(), 1);

        // Relative order of competitors is preserved.
        let p = Priority::from_ranks(vec![4, 2, 6, 5, 3, 1]).unwrap();
        let dom5 = build_dominant_system(&g, 3, &p, &models).unwrap();
        // Link 4 (index 3) has neighbors {2, 3} (indices {1, 2});
        // higher-priority ones under p: index 1 (rank 2). Members {1, 3}.
        assert_eq!(dom5.members, vec![1, 3]);
        assert_eq!(dom5.priority.rank(dom5.tagged), 2);
    }

    #[test]
    fn merge_runs_pools_counters() {
        let g = two_clique();
        let models = vec![
            ArrivalModel::bernoulli(0.4).unwrap(),
            ArrivalModel::bernoulli(0.4).unwrap(),
        ];
        let spec = PrioritySpec::Fixed(Priority::identity(2));
        let r1 = run(&g, &spec, &models, 10_000, replication_seed(7, 0), &[3]).unwrap();
        let r2 = run(&g, &spec, &models, 10_000, replication_seed(7, 1), &[3]).unwrap();
        let m = merge_runs(&[r1.clone(), r2.clone()]).unwrap();
        assert_eq!(m.slots, 20_000);
        assert_eq!(
            m.per_link[0].cum_arrivals,
            r1.per_link[0].cum_arrivals + r2.per_link[0].cum_arrivals
        );
        assert!((m.per_link[0].rate_in - (r1.per_link[0].rate_in + r2.per_link[0].rate_in) / 2.0).abs() < 1e-9);
    }

    #[test]
    fn priority_text_round_trip() {
        let p = Priority::from_ranks(vec![2, 4, 3, 1]).unwrap();
        let text = p.to_text();
        assert!(text.contains("priority 1 2"));
        assert_eq!(Priority::from_text(&text).unwrap(), p);
        assert!(Priority::from_text("priority 1 5\npriority 2 1\n").is_err());
    }

    proptest::proptest! {
        #[test]
        fn schedules_are_independent_and_maximal(seed in 0u64..50, qseed in 0u64..50) {
            let g = InterferenceGraph::random(8, 0.35, seed).unwrap();
            let mut rng = crate::streams::substream(qseed, 9, 9);
            let queues: Vec<u64> = (0..8).map(|_| rng.random::<u64>() % 4).collect();
            let mut order: Vec<usize> = (0..8).collect();
            // deterministic shuffle
            for k in (1..8).rev() {
                let j = (rng.random::<u64>() % (k as u64 + 1)) as usize;
                order.swap(k, j);
            }
            let p = Priority::from_order(&order).unwrap();
            let s = prioritized_maximal_schedule(&g, &queues, &p);
            proptest::prop_assert!(crate::graph::is_independent(&g, s.members()).unwrap());
            for i in 0..8 {
                if queues[i] > 0 && !s.contains(i) {
                    proptest::prop_assert!(g.neighbors(i).iter().any(|&j| s.contains(j)));
                }
            }
        }
    }
}
