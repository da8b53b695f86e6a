#!/usr/bin/env python3
"""Smoke test for the priosched_py extension module.

Builds nothing itself: run `cargo build -p priosched-py` first. The script
locates the cdylib under target/, copies it next to itself under the
importable module name, and exercises the main types and operations
against known closed-form values.
"""

import math
import shutil
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent


def load_module():
    here = Path(__file__).resolve().parent
    candidates = [
        ROOT / "target" / profile / name
        for profile in ("debug", "release")
        for name in ("libpriosched_py.so", "priosched_py.so", "libpriosched_py.dylib")
    ]
    built = next((c for c in candidates if c.exists()), None)
    if built is None:
        sys.exit("build the extension first: cargo build -p priosched-py")
    target = here / "priosched_py.so"
    if not target.exists() or built.stat().st_mtime > target.stat().st_mtime:
        shutil.copyfile(built, target)
    sys.path.insert(0, str(here))
    import priosched_py

    return priosched_py


def main():
    ps = load_module()
    checks = 0

    def ok(cond, what):
        nonlocal checks
        if not cond:
            sys.exit(f"FAILED: {what}")
        checks += 1
        print(f"ok {checks:2d}: {what}")

    # Sample six-link interference graph (0-based edges).
    g = ps.Graph(6, [(0, 4), (0, 5), (1, 3), (1, 5), (2, 3), (4, 5)])
    ok(g.link_count == 6, "graph construction")
    ok(g.is_independent([0, 1, 2]), "maximum independent set is independent")
    ok(not g.is_independent([4, 5]), "conflicting pair rejected")
    sets = g.maximal_independent_sets()
    ok(len(sets) == 6 and [3, 5] in sets, "maximal set enumeration")
    ok(g.max_weight_independent_set([0, 0, 0, 5, 0, 4]) == [3, 5], "max-weight set")
    ok(g.interference_degree(0) == 1 and g.interference_degree(5) == 2, "interference degrees")
    delta, order, degs = g.delta("brute")
    ok(delta == 1 and len(order) == 6 and max(degs) == 1, "delta via factorial search")
    floor, delta2, witness = g.efficiency_floor()
    ok(floor == 1.0 and delta2 == 1 and sorted(witness) == list(range(1, 7)), "efficiency floor")

    # Text round trip.
    ok(ps.Graph.from_text(g.to_text()).edges() == g.edges(), "graph text round trip")

    # Stability regions and the greedy assignment on the star.
    star = ps.Graph.star(3)
    rates = [0.4, 0.3, 0.3, 0.3]
    ok(not ps.in_a_min(star, rates), "star rates exceed the worst-case region")
    ok(ps.in_a(star, rates), "star rates sit inside the union region")
    ok(ps.in_a_max(star, rates), "star rates sit inside the hull region")
    ok(ps.stable_priority(star, rates) == [2, 4, 3, 1], "greedy stable priority")
    ok(ps.stable_priority(ps.Graph.complete(2), [0.6, 0.6]) is None, "overload is infeasible")

    # Decomposition of the two-link clique.
    clique = ps.Graph.complete(2)
    terms, eps = ps.decompose_exact(clique, [0.4, 0.4], 0.1)
    ok(
        sorted(terms) == [([0], 0.5), ([1], 0.5)] and eps == 0.1,
        "exact decomposition weights",
    )
    terms2, calls = ps.decompose_approx(clique, [0.4, 0.4], 0.1, 0.05)
    cover = [sum(w for m, w in terms2 if i in m) for i in range(2)]
    ok(min(cover) >= 0.475 and calls > 0, "approximate decomposition coverage")
    ok(
        ps.check_lemma1(clique, [0.4, 0.4], [([1, 2], 0.5), ([2, 1], 0.5)], [[1], [0]]),
        "sufficient condition for the fair coin distribution",
    )

    # Delay exponent closed form: ln 3.5.
    kind, value, residual = ps.delay_exponent(
        ps.Arrival.bernoulli(0.3), [ps.Arrival.bernoulli(0.4)]
    )
    ok(kind == "finite" and abs(value - math.log(3.5)) < 1e-6, "overflow exponent ln 3.5")
    kind, value, _ = ps.delay_exponent(ps.Arrival.bernoulli(0.5), [])
    ok(kind == "infinite", "solo Bernoulli queue never overflows asymptotically")
    models = [ps.Arrival.bernoulli(0.3), ps.Arrival.bernoulli(0.4)]
    ok(ps.delay_priority(clique, models, [1.2, 0.4]) == [2, 1], "delay-aware assignment")
    ok(ps.delay_region_check(clique, models, [1.2, 0.4], [2, 1]), "delay region check")

    # Arrival models: exact moments.
    b = ps.Arrival.batch([0, 3], [0.9, 0.1])
    ok(abs(b.rate - 0.3) < 1e-12 and b.bound == 3, "batch moments")
    ok(abs(b.log_mgf(1.0) - math.log(0.9 + 0.1 * math.exp(3.0))) < 1e-12, "batch log-MGF")
    ok(b.log_mgf(0.0) == 0.0, "log-MGF vanishes at zero")
    ok(abs(b.legendre(b.rate)) < 1e-9, "Legendre transform vanishes at the mean")

    # Geometric generation and interference models.
    net = ps.generate_network(12, 6.0, 2.0, 0.6, 7)
    ok(len(net.links) > 0, "geometric network generation")
    g1 = net.interference_khop(1)
    g2 = net.interference_khop(2)
    ok(set(map(tuple, g1.edges())) <= set(map(tuple, g2.edges())), "k-hop monotonicity")
    net.interference_primary()
    net.interference_phy(4.0, 3.0)

    # Simulation: a fair-coin distribution splits a saturated clique.
    stats = ps.simulate(
        clique,
        [ps.Arrival.bernoulli(1.0), ps.Arrival.bernoulli(1.0)],
        200_000,
        42,
        kind="distribution",
        dist=[([1, 2], 0.5), ([2, 1], 0.5)],
        thresholds=[10],
    )
    ok(
        all(abs(r - 0.5) < 0.01 for r in stats.rate_out),
        "saturated clique splits service evenly",
    )
    ok(stats.summary_csv.startswith("link,"), "summary CSV exposed")

    # Dominant system for the sample graph's link 5 (1-based 6).
    dom_graph, dom_ranks, members = ps.worst_case_dominant(
        g, 5, [ps.Arrival.bernoulli(0.2)] * 6
    )
    ok(members == [0, 1, 4, 5] and dom_graph.link_count == 4, "worst-case dominant clique")
    ok(dom_ranks[members.index(5)] == 4, "tagged link gets the lowest priority")

    print(f"\nall {checks} smoke checks passed")


if __name__ == "__main__":
    main()
