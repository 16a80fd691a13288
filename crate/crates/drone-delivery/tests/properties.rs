//! Cross-module invariants, mostly on seeded random instances.

use std::collections::BTreeMap;

use drone_delivery::generators::random::{gen_random, Family, RandomParams};
use drone_delivery::generators::three_dm::{gen_3dm_ddt, ThreeDm};
use drone_delivery::instance::Handover;
use drone_delivery::schedule::{check_feasible, evaluate};
use drone_delivery::{ddc, ddt, CopyMode, Instance, Point, Schedule};
use proptest::prelude::*;

fn small_instance(seed: u64, family: Family) -> Instance {
    let params = RandomParams {
        nodes: 5 + (seed % 4) as usize,
        agents: 2 + (seed % 3) as usize,
        family,
        ..RandomParams::default()
    };
    gen_random(&params, seed).expect("generator yields valid instances")
}

fn path_length(inst: &Instance, points: &[Point]) -> f64 {
    points
        .windows(2)
        .map(|w| match (w[0], w[1]) {
            (a, b) if a == b => 0.0,
            (Point::Node(a), Point::Node(b)) => inst.edge(inst.edge_between(a, b).unwrap()).length,
            (Point::Node(a), Point::OnEdge { edge, offset }) | (Point::OnEdge { edge, offset }, Point::Node(a)) => {
                let d = inst.edge(edge);
                if a == d.u {
                    offset
                } else {
                    d.length - offset
                }
            }
            (Point::OnEdge { offset: x1, .. }, Point::OnEdge { offset: x2, .. }) => (x2 - x1).abs(),
        })
        .sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn agent_metric_is_symmetric_and_satisfies_triangle_inequality(seed in 0u64..4096) {
        let inst = small_instance(seed, Family::General);
        for a in 0..inst.agent_count() {
            let d = inst.agent_distances(a).unwrap();
            let nodes = &inst.agent(a).nodes;
            for &u in nodes {
                prop_assert_eq!(d.between(u, u), 0.0);
                for &v in nodes {
                    prop_assert!((d.between(u, v) - d.between(v, u)).abs() <= 1e-9);
                    for &w in nodes {
                        prop_assert!(d.between(u, w) <= d.between(u, v) + d.between(v, w) + 1e-9);
                    }
                }
            }
        }
    }

    #[test]
    fn in_range_distances_dominate_whole_graph_distances(seed in 0u64..4096) {
        let inst = small_instance(seed, Family::General);
        for a in 0..inst.agent_count() {
            let d = inst.agent_distances(a).unwrap();
            let mut all_equal = true;
            for &u in &inst.agent(a).nodes {
                let in_graph = inst.graph_paths(u);
                for &v in &inst.agent(a).nodes {
                    let restricted = d.between(u, v);
                    prop_assert!(restricted >= in_graph.dist[v] - 1e-9);
                    if restricted > in_graph.dist[v] + 1e-9 {
                        all_equal = false;
                    }
                }
            }
            prop_assert_eq!(inst.is_isometric(a).unwrap(), all_equal);
        }
    }

    #[test]
    fn splitting_preserves_agent_distances(seed in 0u64..4096, parts in 2usize..5) {
        let inst = small_instance(seed, Family::General);
        let mut plan = BTreeMap::new();
        for e in 0..inst.edge_count() {
            if e % 2 == 0 && inst.edge(e).length > 0.0 {
                let len = inst.edge(e).length;
                plan.insert(e, (1..parts).map(|j| len * j as f64 / parts as f64).collect::<Vec<_>>());
            }
        }
        let (split, _) = inst.split_edges(&plan).unwrap();
        for a in 0..inst.agent_count() {
            let before = inst.agent_distances(a).unwrap();
            let after = split.agent_distances(a).unwrap();
            for v in 0..inst.node_count() {
                let (x, y) = (before.to_node(v), after.to_node(v));
                prop_assert!(x == y || (x - y).abs() <= 1e-9, "agent {} node {}: {} vs {}", a, v, x, y);
            }
        }
    }

    #[test]
    fn serialization_roundtrips(seed in 0u64..4096) {
        let inst = small_instance(seed, Family::Tree);
        let reparsed = Instance::parse(&inst.to_json()).unwrap();
        prop_assert_eq!(inst.to_json(), reparsed.to_json());
        prop_assert_eq!(inst.digest(), reparsed.digest());
    }

    #[test]
    fn scaling_lengths_scales_both_objectives(seed in 0u64..2048, factor in 0.2f64..6.0) {
        let inst = small_instance(seed, Family::General);
        let sol = ddt::solve_ddt_multi(&inst);
        let eval = evaluate(&inst, &sol.schedule).unwrap();
        let mut data = inst.data();
        for e in &mut data.graph.edges {
            e.length *= factor;
        }
        let scaled = Instance::from_data(data).unwrap();
        let scaled_eval = evaluate(&scaled, &sol.schedule).unwrap();
        prop_assert!((scaled_eval.time - factor * eval.time).abs() <= 1e-9 * (1.0 + factor * eval.time));
        prop_assert!((scaled_eval.energy - factor * eval.energy).abs() <= 1e-9 * (1.0 + factor * eval.energy));
    }
}

#[test]
fn retiming_agents_to_arrive_with_the_package_keeps_the_delivery_time() {
    for seed in 0..24u64 {
        let inst = small_instance(seed, Family::General);
        let sol = ddt::solve_ddt_multi(&inst);
        let eval = evaluate(&inst, &sol.schedule).unwrap();
        let mut retimed = sol.schedule.clone();
        for (i, trip) in retimed.trips.iter_mut().enumerate() {
            let package_at = if i == 0 { 0.0 } else { eval.arrivals[i - 1] };
            let walk = path_length(&inst, &trip.empty_path) / inst.agent(trip.agent).speed;
            trip.start_time = f64::max(0.0, package_at - walk);
        }
        let again = evaluate(&inst, &retimed).unwrap();
        assert!(
            (again.time - eval.time).abs() <= 1e-9 * eval.time.max(1.0),
            "seed {seed}: {} vs {}",
            again.time,
            eval.time
        );
    }
}

#[test]
fn single_copy_feasibility_implies_multi_copy_feasibility() {
    for seed in 0..24u64 {
        let inst = small_instance(seed, Family::General);
        let multi = ddt::solve_ddt_multi(&inst);
        let single = ddt::compact_ddt(&inst, &multi.schedule).unwrap();
        let report = check_feasible(&inst, &single.schedule, CopyMode::Single);
        assert!(report.feasible, "seed {seed}: {:?}", report.violations);
        assert!(check_feasible(&inst, &single.schedule, CopyMode::Multi).feasible);
    }
}

#[test]
fn single_owner_edges_make_the_handover_manners_agree() {
    // Every edge of the matching gadgets belongs to exactly one agent, so
    // interior handovers cannot help.
    let dm = ThreeDm::new(2, vec![[1, 1, 1], [2, 2, 2], [1, 2, 2]]).unwrap();
    let g = gen_3dm_ddt(&dm, 1, 1.5, 0.0).unwrap();
    for e in 0..g.instance.edge_count() {
        assert_eq!(g.instance.agents_on_edge(e).len(), 1);
    }
    let node_mode = ddt::solve_ddt_multi(&g.instance.with_handover(Handover::Node));
    let edge_mode = ddt::solve_ddt_multi(&g.instance.with_handover(Handover::Edge));
    assert!((node_mode.time - edge_mode.time).abs() <= 1e-12);
}

#[test]
fn interior_handovers_never_hurt_and_help_only_with_shared_edges() {
    for seed in 0..16u64 {
        let params = RandomParams { nodes: 6, agents: 3, handover: Handover::Edge, ..RandomParams::default() };
        let inst = gen_random(&params, seed).unwrap();
        let edge_mode = ddt::solve_ddt_multi(&inst);
        let node_mode = ddt::solve_ddt_multi(&inst.with_handover(Handover::Node));
        assert!(
            edge_mode.time <= node_mode.time + 1e-9,
            "seed {seed}: edge {} > node {}",
            edge_mode.time,
            node_mode.time
        );
        let report = check_feasible(&inst, &edge_mode.schedule, CopyMode::Multi);
        assert!(report.feasible, "seed {seed}: {:?}", report.violations);
        let eval = evaluate(&inst, &edge_mode.schedule).unwrap();
        assert!((eval.time - edge_mode.time).abs() <= 1e-9 * edge_mode.time.max(1.0));
    }
}

#[test]
fn layered_graph_sizes_stay_within_the_construction_bounds() {
    for seed in 0..16u64 {
        let inst = small_instance(seed, Family::General);
        let layered = ddc::build_layered(&inst);
        let (n, m, k) = (inst.node_count(), inst.edge_count(), inst.agent_count());
        assert!(layered.node_count() <= n * k + 2, "seed {seed}");
        // Entry/exit arcs + two carry arcs per (edge, agent) + handover
        // pairs per node.
        assert!(layered.arc_count() <= 2 * k + 2 * m * k + n * k * k, "seed {seed}");
    }
}

#[test]
fn edge_mode_solver_agrees_with_subdivided_node_mode() {
    // Interior handovers as computed by the relay envelope inside the full
    // solver, against node handovers on a refined instance: the discrete
    // value can never beat the continuous one and approaches it as the
    // subdivision gets finer.
    for seed in 0..12u64 {
        let params = RandomParams {
            nodes: 5,
            agents: 3,
            handover: Handover::Edge,
            speed_choices: vec![0.5, 1.0, 2.0, 3.0],
            ..RandomParams::default()
        };
        let inst = gen_random(&params, 900 + seed).unwrap();
        let continuous = ddt::solve_ddt_multi(&inst);
        let mut plan = BTreeMap::new();
        for e in 0..inst.edge_count() {
            let len = inst.edge(e).length;
            if inst.agents_on_edge(e).len() >= 2 && len > 0.0 {
                plan.insert(e, (1..128).map(|j| len * j as f64 / 128.0).collect::<Vec<_>>());
            }
        }
        let (refined, _) = inst.split_edges(&plan).unwrap();
        let discrete = ddt::solve_ddt_multi(&refined.with_handover(Handover::Node));
        assert!(
            discrete.time >= continuous.time - 1e-9,
            "seed {seed}: discrete {} < continuous {}",
            discrete.time,
            continuous.time
        );
        assert!(
            discrete.time - continuous.time <= 0.15,
            "seed {seed}: subdivision {} far from continuous {}",
            discrete.time,
            continuous.time
        );
    }
}

#[test]
fn energy_solutions_hand_over_at_nodes_only() {
    for seed in 0..16u64 {
        let params = RandomParams { nodes: 7, agents: 3, handover: Handover::Edge, ..RandomParams::default() };
        let inst = gen_random(&params, seed).unwrap();
        let sol = ddc::solve_ddc_multi(&inst);
        for trip in &sol.schedule.trips {
            assert!(trip.pickup().as_node().is_some());
            assert!(trip.dropoff().as_node().is_some());
        }
        let report = check_feasible(&inst, &sol.schedule, CopyMode::Multi);
        assert!(report.feasible, "seed {seed}: {:?}", report.violations);
    }
}

#[test]
fn compacted_schedules_evaluate_to_their_reported_values() {
    for seed in 0..16u64 {
        let inst = small_instance(seed, Family::General);
        let multi_t = ddt::solve_ddt_multi(&inst);
        let single_t = ddt::compact_ddt(&inst, &multi_t.schedule).unwrap();
        assert_eq!(evaluate(&inst, &single_t.schedule).unwrap().time, single_t.time);
        let multi_c = ddc::solve_ddc_multi(&inst);
        let single_c = ddc::compact_ddc(&inst, &multi_c.schedule).unwrap();
        assert_eq!(evaluate(&inst, &single_c.schedule).unwrap().energy, single_c.energy);
        assert!(single_t.time >= multi_t.time - 1e-9);
        assert!(single_c.energy >= multi_c.energy - 1e-9);
    }
}

#[test]
fn schedule_files_roundtrip_through_json() {
    for seed in [3u64, 11, 19] {
        let inst = small_instance(seed, Family::General);
        let sol = ddt::solve_ddt_multi(&inst);
        let json = sol.schedule.to_json(&inst);
        let parsed = Schedule::parse(&inst, &json).unwrap();
        assert_eq!(json, parsed.to_json(&inst));
        assert_eq!(evaluate(&inst, &parsed).unwrap().time, sol.time);
    }
}
