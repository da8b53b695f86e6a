//! Interference graphs and exact combinatorial primitives: independence
//! tests, maximal-set enumeration, maximum-weight independent sets,
//! interference degrees, and the min-max peel parameter delta.
//!
//! Everything here is exact. Whole-graph enumeration is capped (default 24
//! links); closed-neighborhood searches use 64-bit masks and branch and
//! bound, so neighborhoods up to 64 links are handled without enumerating
//! the whole graph. Ties are always broken toward the lowest link index,
//! which makes every output deterministic.

use std::fmt::Write as _;

use thiserror::Error;

pub type LinkId = usize;

/// Default cap on whole-graph maximal-independent-set enumeration.
pub const DEFAULT_ENUMERATION_CAP: usize = 24;
/// Cap for the factorial search over removal sequences.
pub const BRUTE_DELTA_CAP: usize = 8;
/// Hard cap on closed-neighborhood size for exact interference degrees.
pub const NEIGHBORHOOD_CAP: usize = 64;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("link index {link} out of range for {n} links")]
    LinkOutOfRange { link: usize, n: usize },
    #[error("self-loop on link {link}")]
    SelfLoop { link: usize },
    #[error("duplicate edge between links {a} and {b}")]
    DuplicateEdge { a: usize, b: usize },
    #[error("graph has {n} links, above the enumeration cap of {cap} links")]
    AboveEnumerationCap { n: usize, cap: usize },
    #[error("graph has {n} links, above the removal-sequence search cap of {cap} links")]
    AboveFactorialCap { n: usize, cap: usize },
    #[error("closed neighborhood of link {link} has {size} links, above the exact-search cap of {cap}")]
    NeighborhoodTooLarge { link: usize, size: usize, cap: usize },
    #[error("graph must have at least one link")]
    Empty,
    #[error("weight vector has {got} entries, expected {expected}")]
    WeightLen { got: usize, expected: usize },
    #[error("weight for link {link} is {value}; weights must be finite and nonnegative")]
    BadWeight { link: usize, value: f64 },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// Undirected conflict graph over links `0..n`. Two adjacent links may not
/// transmit in the same slot.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InterferenceGraph {
    n: usize,
    adj: Vec<bool>,
    neighbors: Vec<Vec<LinkId>>,
}

impl InterferenceGraph {
    /// Builds a graph on `n` links from unordered conflict pairs.
    /// Self-loops and duplicate pairs (in either order) are rejected.
    pub fn new(n: usize, edges: &[(LinkId, LinkId)]) -> Result<Self, GraphError> {
        if n == 0 {
            return Err(GraphError::Empty);
        }
        let mut adj = vec![false; n * n];
        let mut neighbors = vec![Vec::new(); n];
        for &(a, b) in edges {
            for &v in &[a, b] {
                if v >= n {
                    return Err(GraphError::LinkOutOfRange { link: v, n });
                }
            }
            if a == b {
                return Err(GraphError::SelfLoop { link: a });
            }
            if adj[a * n + b] {
                return Err(GraphError::DuplicateEdge { a, b });
            }
            adj[a * n + b] = true;
            adj[b * n + a] = true;
            neighbors[a].push(b);
            neighbors[b].push(a);
        }
        for list in &mut neighbors {
            list.sort_unstable();
        }
        Ok(Self { n, adj, neighbors })
    }

    /// Complete conflict graph (every pair of links interferes).
    pub fn complete(n: usize) -> Result<Self, GraphError> {
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                edges.push((i, j));
            }
        }
        Self::new(n, &edges)
    }

    /// Graph with no conflicts at all.
    pub fn edgeless(n: usize) -> Result<Self, GraphError> {
        Self::new(n, &[])
    }

    /// Star conflict graph: link 0 conflicts with each of `leaves` others.
    pub fn star(leaves: usize) -> Result<Self, GraphError> {
        let edges: Vec<_> = (1..=leaves).map(|l| (0, l)).collect();
        Self::new(leaves + 1, &edges)
    }

    /// Erdos-Renyi style conflict graph, deterministic in `seed`.
    /// Pairs are visited in lexicographic order; this exists to drive
    /// randomized test campaigns reproducibly.
    pub fn random(n: usize, edge_prob: f64, seed: u64) -> Result<Self, GraphError> {
        use rand::Rng;
        let mut rng = crate::streams::substream(seed, crate::streams::DOM_GEOMETRY, u64::MAX);
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if rng.random::<f64>() < edge_prob {
                    edges.push((i, j));
                }
            }
        }
        Self::new(n, &edges)
    }

    pub fn link_count(&self) -> usize {
        self.n
    }

    pub fn adjacent(&self, i: LinkId, j: LinkId) -> bool {
        self.adj[i * self.n + j]
    }

    pub fn neighbors(&self, i: LinkId) -> &[LinkId] {
        &self.neighbors[i]
    }

    /// `{i}` union `N_i`, sorted.
    pub fn closed_neighborhood(&self, i: LinkId) -> Vec<LinkId> {
        let mut out = self.neighbors[i].clone();
        out.push(i);
        out.sort_unstable();
        out
    }

    /// All conflict pairs `(i, j)` with `i < j`, sorted.
    pub fn edges(&self) -> Vec<(LinkId, LinkId)> {
        let mut out = Vec::new();
        for i in 0..self.n {
            for &j in &self.neighbors[i] {
                if i < j {
                    out.push((i, j));
                }
            }
        }
        out
    }

    pub fn check_index(&self, i: LinkId) -> Result<(), GraphError> {
        if i >= self.n {
            return Err(GraphError::LinkOutOfRange { link: i, n: self.n });
        }
        Ok(())
    }

    /// Parses the plain-text graph format: a `links <n>` line followed by
    /// one `edge <i> <j>` line per conflict pair, 1-based and
    /// order-insensitive. Blank lines and `#` comments are ignored.
    pub fn from_text(text: &str) -> Result<Self, GraphError> {
        let mut n: Option<usize> = None;
        let mut edges: Vec<(LinkId, LinkId)> = Vec::new();
        let mut seen = std::collections::BTreeSet::new();
        for (idx, raw) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let word = parts.next().unwrap();
            match word {
                "links" => {
                    if n.is_some() {
                        return Err(GraphError::Parse {
                            line: lineno,
                            msg: "repeated `links` line".into(),
                        });
                    }
                    let v: usize = parse_field(parts.next(), lineno, "links")?;
                    if v == 0 {
                        return Err(GraphError::Parse {
                            line: lineno,
                            msg: "`links` must be positive".into(),
                        });
                    }
                    n = Some(v);
                }
                "edge" => {
                    let count = n.ok_or(GraphError::Parse {
                        line: lineno,
                        msg: "`edge` before `links` line".into(),
                    })?;
                    let a: usize = parse_field(parts.next(), lineno, "edge")?;
                    let b: usize = parse_field(parts.next(), lineno, "edge")?;
                    if a == 0 || a > count || b == 0 || b > count {
                        return Err(GraphError::Parse {
                            line: lineno,
                            msg: format!("edge endpoint out of range 1..{count}"),
                        });
                    }
                    if a == b {
                        return Err(GraphError::Parse {
                            line: lineno,
                            msg: format!("self-loop on link {a}"),
                        });
                    }
                    let key = (a.min(b), a.max(b));
                    if !seen.insert(key) {
                        return Err(GraphError::Parse {
                            line: lineno,
                            msg: format!("duplicate edge {} {}", key.0, key.1),
                        });
                    }
                    edges.push((a - 1, b - 1));
                }
                other => {
                    return Err(GraphError::Parse {
                        line: lineno,
                        msg: format!("unknown directive `{other}`"),
                    });
                }
            }
        }
        let n = n.ok_or(GraphError::Parse {
            line: 0,
            msg: "missing `links` line".into(),
        })?;
        Self::new(n, &edges)
    }

    /// Inverse of [`InterferenceGraph::from_text`]; edges sorted, 1-based.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "links {}", self.n);
        for (i, j) in self.edges() {
            let _ = writeln!(out, "edge {} {}", i + 1, j + 1);
        }
        out
    }
}

fn parse_field<T: std::str::FromStr>(
    field: Option<&str>,
    line: usize,
    what: &str,
) -> Result<T, GraphError> {
    field
        .ok_or(GraphError::Parse {
            line,
            msg: format!("`{what}` is missing a value"),
        })?
        .parse()
        .map_err(|_| GraphError::Parse {
            line,
            msg: format!("`{what}` has a malformed value"),
        })
}

/// A set of mutually non-adjacent links, stored sorted. The derived `Ord`
/// is lexicographic on the sorted member list, which is the tie-break
/// order used throughout the crate.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct IndependentSet {
    members: Vec<LinkId>,
}

impl IndependentSet {
    pub fn new(mut members: Vec<LinkId>) -> Self {
        members.sort_unstable();
        members.dedup();
        Self { members }
    }

    pub fn members(&self) -> &[LinkId] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, i: LinkId) -> bool {
        self.members.binary_search(&i).is_ok()
    }

    /// 0/1 membership vector of length `n`.
    pub fn indicator(&self, n: usize) -> Vec<f64> {
        let mut v = vec![0.0; n];
        for &i in &self.members {
            v[i] = 1.0;
        }
        v
    }

    pub fn mask(&self, n: usize) -> Vec<bool> {
        let mut v = vec![false; n];
        for &i in &self.members {
            v[i] = true;
        }
        v
    }

    pub fn weight(&self, w: &[f64]) -> f64 {
        self.members.iter().map(|&i| w[i]).sum()
    }
}

/// A permutation of the links together with the interference degree each
/// link had, within the residual subgraph, at the moment it was removed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RemovalSequence {
    pub order: Vec<LinkId>,
    pub per_step_degree: Vec<usize>,
}

impl RemovalSequence {
    /// Largest per-step interference degree along the sequence.
    pub fn peak(&self) -> usize {
        self.per_step_degree.iter().copied().max().unwrap_or(0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DeltaMode {
    /// Peel a minimum-interference-degree link at every step.
    Greedy,
    /// Minimize over all removal sequences (factorial; small graphs only).
    Brute,
}

/// True iff no two links of `set` conflict. Duplicates are ignored.
pub fn is_independent(g: &InterferenceGraph, set: &[LinkId]) -> Result<bool, GraphError> {
    for &i in set {
        g.check_index(i)?;
    }
    for (k, &i) in set.iter().enumerate() {
        for &j in &set[k + 1..] {
            if i != j && g.adjacent(i, j) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Every maximal independent set of `g`, sorted lexicographically by
/// member list. Uses the default enumeration cap.
pub fn enumerate_maximal_sets(g: &InterferenceGraph) -> Result<Vec<IndependentSet>, GraphError> {
    enumerate_maximal_sets_capped(g, DEFAULT_ENUMERATION_CAP)
}

/// As [`enumerate_maximal_sets`] with an explicit cap on the link count.
pub fn enumerate_maximal_sets_capped(
    g: &InterferenceGraph,
    cap: usize,
) -> Result<Vec<IndependentSet>, GraphError> {
    let n = g.link_count();
    if n > cap.min(NEIGHBORHOOD_CAP) {
        return Err(GraphError::AboveEnumerationCap {
            n,
            cap: cap.min(NEIGHBORHOOD_CAP),
        });
    }
    // Maximal independent sets of g are maximal cliques of the complement;
    // run Bron-Kerbosch with pivoting there.
    let full: u64 = if n == 64 { !0 } else { (1u64 << n) - 1 };
    let mut comp = vec![0u64; n];
    for i in 0..n {
        let mut m = full & !(1u64 << i);
        for &j in g.neighbors(i) {
            m &= !(1u64 << j);
        }
        comp[i] = m;
    }
    let mut out = Vec::new();
    bron_kerbosch(&comp, 0, full, 0, &mut out);
    let mut sets: Vec<IndependentSet> = out
        .into_iter()
        .map(|mask| IndependentSet::new(bits(mask)))
        .collect();
    sets.sort();
    Ok(sets)
}

fn bits(mut mask: u64) -> Vec<usize> {
    let mut v = Vec::new();
    while mask != 0 {
        let i = mask.trailing_zeros() as usize;
        v.push(i);
        mask &= mask - 1;
    }
    v
}

fn bron_kerbosch(adj: &[u64], r: u64, mut p: u64, mut x: u64, out: &mut Vec<u64>) {
    if p == 0 && x == 0 {
        out.push(r);
        return;
    }
    // Pivot on the candidate with the most candidate-neighbors.
    let mut pivot = usize::MAX;
    let mut best = -1i64;
    let mut scan = p | x;
    while scan != 0 {
        let u = scan.trailing_zeros() as usize;
        scan &= scan - 1;
        let d = (adj[u] & p).count_ones() as i64;
        if d > best {
            best = d;
            pivot = u;
        }
    }
    let mut cand = p & !adj[pivot];
    while cand != 0 {
        let v = cand.trailing_zeros() as usize;
        let vb = 1u64 << v;
        cand &= cand - 1;
        bron_kerbosch(adj, r | vb, p & adj[v], x & adj[v], out);
        p &= !vb;
        x |= vb;
    }
}

/// Maximum-weight independent set over nonnegative weights. The result is
/// always a maximal set; ties break toward the lexicographically smallest
/// member list.
pub fn max_weight_independent_set(
    g: &InterferenceGraph,
    w: &[f64],
) -> Result<IndependentSet, GraphError> {
    max_weight_independent_set_capped(g, w, DEFAULT_ENUMERATION_CAP)
}

pub fn max_weight_independent_set_capped(
    g: &InterferenceGraph,
    w: &[f64],
    cap: usize,
) -> Result<IndependentSet, GraphError> {
    let n = g.link_count();
    if w.len() != n {
        return Err(GraphError::WeightLen {
            got: w.len(),
            expected: n,
        });
    }
    for (i, &wi) in w.iter().enumerate() {
        if !wi.is_finite() || wi < 0.0 {
            return Err(GraphError::BadWeight { link: i, value: wi });
        }
    }
    let sets = enumerate_maximal_sets_capped(g, cap)?;
    // With nonnegative weights a maximum-weight independent set can always
    // be taken maximal; the enumeration is lex-sorted, so keeping strict
    // improvements lands on the lex-smallest maximizer.
    let mut best: Option<(f64, &IndependentSet)> = None;
    for s in &sets {
        let val = s.weight(w);
        match best {
            Some((bv, _)) if val <= bv => {}
            _ => best = Some((val, s)),
        }
    }
    Ok(best.expect("every graph has a maximal independent set").1.clone())
}

/// Maximum independent set size within the masked subgraph, by branch and
/// bound on local bitmasks.
fn mis_size(adj: &[u64], cand: u64) -> usize {
    if cand == 0 {
        return 0;
    }
    // Pick the candidate with the largest residual degree.
    let mut v = usize::MAX;
    let mut best_deg = 0i64;
    let mut scan = cand;
    while scan != 0 {
        let u = scan.trailing_zeros() as usize;
        scan &= scan - 1;
        let d = (adj[u] & cand).count_ones() as i64;
        if v == usize::MAX || d > best_deg {
            v = u;
            best_deg = d;
        }
    }
    if best_deg == 0 {
        return cand.count_ones() as usize;
    }
    let vb = 1u64 << v;
    // Branch: either take v (dropping its neighborhood) or discard it.
    let take = 1 + mis_size(adj, cand & !(adj[v] | vb));
    let skip = mis_size(adj, cand & !vb);
    take.max(skip)
}

/// Interference degree of a set of links restricted to `alive` members:
/// the maximum independent set size within the closed neighborhood of `i`
/// intersected with the alive set.
fn interference_degree_within(
    g: &InterferenceGraph,
    i: LinkId,
    alive: &[bool],
) -> Result<usize, GraphError> {
    let mut members: Vec<LinkId> = vec![i];
    for &j in g.neighbors(i) {
        if alive[j] {
            members.push(j);
        }
    }
    members.sort_unstable();
    let k = members.len();
    if k > NEIGHBORHOOD_CAP {
        return Err(GraphError::NeighborhoodTooLarge {
            link: i,
            size: k,
            cap: NEIGHBORHOOD_CAP,
        });
    }
    let mut local = vec![0u64; k];
    for (a, &ia) in members.iter().enumerate() {
        for (b, &ib) in members.iter().enumerate() {
            if a != b && g.adjacent(ia, ib) {
                local[a] |= 1u64 << b;
            }
        }
    }
    let full = if k == 64 { !0 } else { (1u64 << k) - 1 };
    Ok(mis_size(&local, full))
}

/// Interference degree of link `i`: the maximum independent set size in
/// the subgraph on `{i}` union `N_i`. Always at least 1.
pub fn interference_degree(g: &InterferenceGraph, i: LinkId) -> Result<usize, GraphError> {
    g.check_index(i)?;
    let alive = vec![true; g.link_count()];
    interference_degree_within(g, i, &alive)
}

/// `max_i` of [`interference_degree`].
pub fn max_interference_degree(g: &InterferenceGraph) -> Result<usize, GraphError> {
    let mut best = 0;
    for i in 0..g.link_count() {
        best = best.max(interference_degree(g, i)?);
    }
    Ok(best)
}

/// The min-max peel parameter: the minimum over removal sequences of the
/// largest per-step interference degree, with the achieving sequence.
///
/// Greedy mode peels a link of minimum current interference degree at each
/// step (lowest index on ties); brute mode searches all permutations and
/// requires at most [`BRUTE_DELTA_CAP`] links.
pub fn compute_delta(
    g: &InterferenceGraph,
    mode: DeltaMode,
) -> Result<(usize, RemovalSequence), GraphError> {
    let n = g.link_count();
    match mode {
        DeltaMode::Greedy => {
            let mut alive = vec![true; n];
            let mut order = Vec::with_capacity(n);
            let mut degs = Vec::with_capacity(n);
            for _ in 0..n {
                let mut pick: Option<(usize, LinkId)> = None;
                for i in 0..n {
                    if !alive[i] {
                        continue;
                    }
                    let d = interference_degree_within(g, i, &alive)?;
                    match pick {
                        Some((bd, _)) if d >= bd => {}
                        _ => pick = Some((d, i)),
                    }
                }
                let (d, i) = pick.expect("alive links remain");
                alive[i] = false;
                order.push(i);
                degs.push(d);
            }
            let seq = RemovalSequence {
                order,
                per_step_degree: degs,
            };
            Ok((seq.peak(), seq))
        }
        DeltaMode::Brute => {
            if n > BRUTE_DELTA_CAP {
                return Err(GraphError::AboveFactorialCap {
                    n,
                    cap: BRUTE_DELTA_CAP,
                });
            }
            let mut best: Option<(usize, Vec<LinkId>)> = None;
            let mut perm: Vec<LinkId> = Vec::with_capacity(n);
            let mut used = vec![false; n];
            brute_delta(g, &mut perm, &mut used, 0, &mut best)?;
            let (value, order) = best.expect("non-empty graph");
            // Recompute the per-step degrees along the winning sequence.
            let mut alive = vec![true; n];
            let mut degs = Vec::with_capacity(n);
            for &i in &order {
                degs.push(interference_degree_within(g, i, &alive)?);
                alive[i] = false;
            }
            Ok((
                value,
                RemovalSequence {
                    order,
                    per_step_degree: degs,
                },
            ))
        }
    }
}

/// Depth-first search over permutations in lexicographic order, pruning
/// prefixes whose running maximum already matches or exceeds the best.
fn brute_delta(
    g: &InterferenceGraph,
    perm: &mut Vec<LinkId>,
    used: &mut [bool],
    prefix_max: usize,
    best: &mut Option<(usize, Vec<LinkId>)>,
) -> Result<(), GraphError> {
    let n = g.link_count();
    if let Some((bv, _)) = best {
        if prefix_max >= *bv {
            return Ok(());
        }
    }
    if perm.len() == n {
        match best {
            Some((bv, _)) if prefix_max >= *bv => {}
            _ => *best = Some((prefix_max, perm.clone())),
        }
        return Ok(());
    }
    let alive: Vec<bool> = used.iter().map(|&u| !u).collect();
    for i in 0..n {
        if used[i] {
            continue;
        }
        let d = interference_degree_within(g, i, &alive)?;
        used[i] = true;
        perm.push(i);
        brute_delta(g, perm, used, prefix_max.max(d), best)?;
        perm.pop();
        used[i] = false;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Interference graph of the six-link sample network: edges
    /// 1-5, 1-6, 2-4, 2-6, 3-4, 5-6 in 1-based labels.
    pub(crate) fn g6() -> InterferenceGraph {
        InterferenceGraph::new(6, &[(0, 4), (0, 5), (1, 3), (1, 5), (2, 3), (4, 5)]).unwrap()
    }

    /// Brute-force oracle: all maximal independent sets by filtering every
    /// subset.
    fn enumerate_by_subsets(g: &InterferenceGraph) -> Vec<IndependentSet> {
        let n = g.link_count();
        let mut sets = Vec::new();
        'outer: for mask in 0u64..(1 << n) {
            let members = bits(mask);
            if !is_independent(g, &members).unwrap() {
                continue;
            }
            for add in 0..n {
                if mask & (1 << add) == 0 {
                    let mut bigger = members.clone();
                    bigger.push(add);
                    if is_independent(g, &bigger).unwrap() {
                        continue 'outer;
                    }
                }
            }
            sets.push(IndependentSet::new(members));
        }
        sets.sort();
        sets
    }

    #[test]
    fn independence_on_the_sample_graph() {
        let g = g6();
        assert!(is_independent(&g, &[0, 1, 2]).unwrap());
        assert!(!is_independent(&g, &[4, 5]).unwrap());
        assert!(is_independent(&g, &[]).unwrap());
        assert!(matches!(
            is_independent(&g, &[0, 6]),
            Err(GraphError::LinkOutOfRange { link: 6, .. })
        ));
    }

    #[test]
    fn maximal_sets_of_the_sample_graph() {
        let g = g6();
        let sets = enumerate_maximal_sets(&g).unwrap();
        assert!(sets.contains(&IndependentSet::new(vec![3, 5])));
        assert_eq!(sets, enumerate_by_subsets(&g));
        let expected: Vec<IndependentSet> = [
            vec![0, 1, 2],
            vec![0, 3],
            vec![1, 2, 4],
            vec![2, 5],
            vec![3, 4],
            vec![3, 5],
        ]
        .into_iter()
        .map(IndependentSet::new)
        .collect();
        assert_eq!(sets, expected);
    }

    #[test]
    fn maximal_sets_of_edgeless_graph() {
        let g = InterferenceGraph::edgeless(3).unwrap();
        let sets = enumerate_maximal_sets(&g).unwrap();
        assert_eq!(sets, vec![IndependentSet::new(vec![0, 1, 2])]);
    }

    #[test]
    fn enumeration_cap_is_enforced() {
        let g = InterferenceGraph::edgeless(5).unwrap();
        let err = enumerate_maximal_sets_capped(&g, 4).unwrap_err();
        assert!(err.to_string().contains("cap of 4"));
    }

    #[test]
    fn maximal_sets_pass_independence_and_are_maximal() {
        for seed in 0..20 {
            let g = InterferenceGraph::random(9, 0.35, seed).unwrap();
            for s in enumerate_maximal_sets(&g).unwrap() {
                assert!(is_independent(&g, s.members()).unwrap());
                for add in 0..g.link_count() {
                    if !s.contains(add) {
                        let mut bigger = s.members().to_vec();
                        bigger.push(add);
                        assert!(!is_independent(&g, &bigger).unwrap());
                    }
                }
            }
        }
    }

    #[test]
    fn mwis_on_the_sample_graph() {
        let g = g6();
        let ones = max_weight_independent_set(&g, &[1.0; 6]).unwrap();
        assert_eq!(ones.members(), &[0, 1, 2]);
        assert!((ones.weight(&[1.0; 6]) - 3.0).abs() < 1e-12);

        let zero = max_weight_independent_set(&g, &[0.0; 6]).unwrap();
        assert_eq!(zero.members(), &[0, 1, 2]); // lex-smallest maximal set

        let w = [0.0, 0.0, 0.0, 5.0, 0.0, 4.0];
        let heavy = max_weight_independent_set(&g, &w).unwrap();
        assert_eq!(heavy.members(), &[3, 5]);
        assert!((heavy.weight(&w) - 9.0).abs() < 1e-12);
    }

    #[test]
    fn mwis_dominates_every_enumerated_maximal_set() {
        for seed in 0..10 {
            let g = InterferenceGraph::random(8, 0.3, seed).unwrap();
            let w: Vec<f64> = (0..8).map(|i| ((seed + i as u64) % 5) as f64 * 0.3).collect();
            let best = max_weight_independent_set(&g, &w).unwrap();
            for s in enumerate_maximal_sets(&g).unwrap() {
                assert!(best.weight(&w) >= s.weight(&w) - 1e-12);
            }
        }
    }

    #[test]
    fn interference_degrees_on_the_sample_graph() {
        let g = g6();
        assert_eq!(interference_degree(&g, 0).unwrap(), 1); // {1,5,6} is a triangle
        assert_eq!(interference_degree(&g, 5).unwrap(), 2);
        let lone = InterferenceGraph::edgeless(1).unwrap();
        assert_eq!(interference_degree(&lone, 0).unwrap(), 1);
    }

    #[test]
    fn delta_trivial_families() {
        let k4 = InterferenceGraph::complete(4).unwrap();
        assert_eq!(compute_delta(&k4, DeltaMode::Greedy).unwrap().0, 1);
        assert_eq!(compute_delta(&k4, DeltaMode::Brute).unwrap().0, 1);

        let star = InterferenceGraph::star(5).unwrap();
        assert_eq!(compute_delta(&star, DeltaMode::Greedy).unwrap().0, 1);
        assert_eq!(compute_delta(&star, DeltaMode::Brute).unwrap().0, 1);
    }

    #[test]
    fn delta_greedy_matches_brute_on_sample_graph() {
        let g = g6();
        let (gd, gseq) = compute_delta(&g, DeltaMode::Greedy).unwrap();
        let (bd, bseq) = compute_delta(&g, DeltaMode::Brute).unwrap();
        assert_eq!(gd, bd);
        assert_eq!(gd, 1);
        assert_eq!(gseq.peak(), gd);
        assert_eq!(bseq.peak(), bd);
    }

    #[test]
    fn delta_is_bounded_by_max_interference_degree() {
        for seed in 100..130 {
            let g = InterferenceGraph::random(8, 0.4, seed).unwrap();
            let (delta, seq) = compute_delta(&g, DeltaMode::Greedy).unwrap();
            let cap = max_interference_degree(&g).unwrap();
            assert!(delta >= 1);
            assert!(delta <= cap);
            assert!(cap <= g.link_count());
            // Witness consistency: the recorded degrees replay exactly.
            let mut alive = vec![true; g.link_count()];
            for (k, &i) in seq.order.iter().enumerate() {
                assert_eq!(
                    interference_degree_within(&g, i, &alive).unwrap(),
                    seq.per_step_degree[k]
                );
                alive[i] = false;
            }
        }
    }

    #[test]
    fn brute_cap_is_enforced() {
        let g = InterferenceGraph::edgeless(9).unwrap();
        assert!(matches!(
            compute_delta(&g, DeltaMode::Brute),
            Err(GraphError::AboveFactorialCap { n: 9, cap: 8 })
        ));
    }

    #[test]
    fn text_format_round_trip() {
        let g = g6();
        let text = g.to_text();
        assert!(text.starts_with("links 6\n"));
        let back = InterferenceGraph::from_text(&text).unwrap();
        assert_eq!(g, back);
    }

    #[test]
    fn text_format_rejections() {
        assert!(InterferenceGraph::from_text("edge 1 2\nlinks 2\n").is_err());
        assert!(InterferenceGraph::from_text("").is_err());
        let dup = "links 3\nedge 1 2\nedge 2 1\n";
        let err = InterferenceGraph::from_text(dup).unwrap_err();
        assert!(err.to_string().contains("duplicate edge"));
        let missing = InterferenceGraph::from_text("# empty\n").unwrap_err();
        assert!(missing.to_string().contains("links"));
    }

    proptest::proptest! {
        #[test]
        fn greedy_equals_brute_on_small_graphs(seed in 0u64..40, n in 2usize..7) {
            let g = InterferenceGraph::random(n, 0.3, seed).unwrap();
            let gd = compute_delta(&g, DeltaMode::Greedy).unwrap().0;
            let bd = compute_delta(&g, DeltaMode::Brute).unwrap().0;
            proptest::prop_assert_eq!(gd, bd);
        }
    }
}
