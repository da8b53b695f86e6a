//! Cross-module simulation properties: the per-slot service guarantee,
//! closure between the randomized-priority sufficient condition and
//! simulated rate stability, and coupled overflow dominance.

use priosched::delay;
use priosched::engine::{self, Priority, PrioritySpec, Simulation};
use priosched::graph::InterferenceGraph;
use priosched::synth;
use priosched::traffic::ArrivalModel;

fn g6() -> InterferenceGraph {
    InterferenceGraph::new(6, &[(0, 4), (0, 5), (1, 3), (1, 5), (2, 3), (4, 5)]).unwrap()
}

/// Whenever a link holds packets at the start of a slot, its closed
/// neighborhood sees at least one departure that slot.
#[test]
fn nonempty_links_guarantee_a_neighborhood_departure() {
    let g = g6();
    let models: Vec<ArrivalModel> = [0.3, 0.25, 0.2, 0.3, 0.25, 0.2]
        .iter()
        .map(|&p| ArrivalModel::bernoulli(p).unwrap())
        .collect();
    for spec in [
        PrioritySpec::Lqf,
        PrioritySpec::Fixed(Priority::from_ranks(vec![6, 5, 4, 3, 2, 1]).unwrap()),
    ] {
        let mut sim = Simulation::new(&g, &spec, &models, 7).unwrap();
        let mut start = sim.state().queues.clone();
        for _ in 0..20_000 {
            let rec = sim.step();
            for i in 0..6 {
                if start[i] > 0 {
                    let served = rec.schedule.contains(i)
                        || g.neighbors(i).iter().any(|&j| rec.schedule.contains(j));
                    assert!(served, "link {i} waited with no neighborhood departure");
                }
            }
            start = sim.state().queues.clone();
        }
    }
}

/// When the sufficient condition for an i.i.d. priority process holds
/// with whole-neighborhood subsets, the simulated system is rate stable.
#[test]
fn lemma1_pass_implies_simulated_rate_stability() {
    let g = g6();
    let a = [0.15, 0.3, 0.25, 0.3, 0.1, 0.15];
    let d = synth::decompose_exact(&g, &a, 0.02).unwrap();
    let dist = synth::decomposition_to_distribution(6, &d).unwrap();
    let subsets: Vec<Vec<usize>> = (0..6).map(|i| g.neighbors(i).to_vec()).collect();
    let report = synth::check_lemma1(&g, &a, &dist, &subsets).unwrap();
    assert!(report.holds, "decomposition-induced distribution must pass");
    let models: Vec<ArrivalModel> = a
        .iter()
        .map(|&p| ArrivalModel::bernoulli(p).unwrap())
        .collect();
    let stats = engine::run(
        &g,
        &PrioritySpec::Distribution(dist),
        &models,
        1_000_000,
        99,
        &[],
    )
    .unwrap();
    for (s, &ai) in stats.per_link.iter().zip(&a) {
        assert!(
            (s.rate_out - ai).abs() <= 0.01,
            "rate_out {} vs arrival rate {ai}",
            s.rate_out
        );
    }
}

/// Lemma-3 style comparison at the distribution level: the original
/// system's exceedance frequency never beats its clique dominant system.
#[test]
fn overflow_frequencies_are_dominated_by_the_clique_system() {
    let g = g6();
    let models: Vec<ArrivalModel> = [0.3, 0.3, 0.2, 0.25, 0.3, 0.25]
        .iter()
        .map(|&p| ArrivalModel::bernoulli(p).unwrap())
        .collect();
    let tagged = 5usize;
    let thresholds = [0u64, 1, 2, 4];
    let dom = engine::worst_case_dominant_system(&g, tagged, &models).unwrap();
    let keys: Vec<u64> = (0..6).collect();
    let dom_keys: Vec<u64> = dom.members.iter().map(|&m| m as u64).collect();
    let orig = engine::run_observed(
        &g,
        &PrioritySpec::Fixed(Priority::identity(6)),
        &models,
        200_000,
        5,
        &thresholds,
        &keys,
        |_, _, _| {},
    )
    .unwrap();
    let clique = engine::run_observed(
        &dom.graph,
        &PrioritySpec::Fixed(dom.priority.clone()),
        &dom.models,
        200_000,
        5,
        &thresholds,
        &dom_keys,
        |_, _, _| {},
    )
    .unwrap();
    for t in 0..thresholds.len() {
        let f_orig = orig.overflow_frequency(tagged, t);
        let f_dom = clique.overflow_frequency(dom.tagged, t);
        assert!(
            f_orig <= f_dom + 1e-12,
            "threshold {}: {f_orig} > {f_dom}",
            thresholds[t]
        );
    }
}

/// The empirical overflow slope of a single solo queue with batch
/// arrivals matches the root of its log-MGF equation.
#[test]
fn solo_batch_queue_slope_matches_its_exponent() {
    let g = InterferenceGraph::edgeless(1).unwrap();
    let model = ArrivalModel::batch(vec![0, 3], vec![0.9, 0.1]).unwrap();
    let expected = match delay::delay_exponent(&model, &[]).unwrap().value {
        delay::Exponent::Finite(v) => v,
        other => panic!("expected finite exponent, got {other:?}"),
    };
    let est = delay::estimate_overflow(
        &g,
        &PrioritySpec::Fixed(Priority::identity(1)),
        &[model],
        0,
        &[2, 4, 6, 8],
        400_000,
        3,
        17,
    )
    .unwrap();
    match est.slope {
        delay::SlopeEstimate::Fit { slope, .. } => {
            assert!(
                (slope - expected).abs() / expected < 0.15,
                "slope {slope} vs exponent {expected}"
            );
        }
        other => panic!("expected a fit, got {other:?}"),
    }
}
