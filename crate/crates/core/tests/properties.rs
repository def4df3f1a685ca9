use std::collections::HashMap;

use bpmn_core::edit::{add_element, delete_element, move_element};
use bpmn_core::graph::FlowGraph;
use bpmn_core::ir::{parse_process, random_process, serialize_process, validate, Element, TaskKind};
use bpmn_core::layout::{compute_layout, embed_di, Bounds};
use bpmn_core::similarity::{ged, rged, CostModel};
use bpmn_core::xml::{import_flow_graph, reconstruct_ir, strip_di, to_bpmn_xml, validate_xml_structure, BpmnDocument};
use bpmn_core::{apply_edit_script, EditOp};
use num_rational::Ratio;
use proptest::prelude::*;

fn model_strategy() -> impl Strategy<Value = bpmn_core::ProcessModel> {
    (any::<u64>(), 2usize..40).prop_map(|(seed, size)| random_process(seed, size))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn serialize_parse_round_trip(model in model_strategy()) {
        prop_assert!(validate(&model).ok);
        let text = serialize_process(&model);
        prop_assert_eq!(parse_process(&text).unwrap(), model);
    }

    #[test]
    fn emitted_xml_is_structurally_valid(model in model_strategy()) {
        let xml = to_bpmn_xml(&model).unwrap();
        let report = validate_xml_structure(&xml);
        prop_assert!(report.ok, "{}", report.summary());
    }

    #[test]
    fn reconstruct_inverts_emit(model in model_strategy()) {
        let xml = to_bpmn_xml(&model).unwrap();
        prop_assert_eq!(reconstruct_ir(&xml).unwrap(), model);
    }

    #[test]
    fn import_is_deterministic(model in model_strategy()) {
        let xml = to_bpmn_xml(&model).unwrap();
        prop_assert_eq!(import_flow_graph(&xml).unwrap(), import_flow_graph(&xml).unwrap());
    }

    #[test]
    fn embed_di_keeps_semantics_and_is_deterministic(model in model_strategy()) {
        let xml = to_bpmn_xml(&model).unwrap();
        let doc = BpmnDocument::parse(&xml).unwrap();
        let layout = compute_layout(&doc).unwrap();
        let enriched = embed_di(&xml, &layout).unwrap();
        prop_assert_eq!(strip_di(&enriched).unwrap(), xml.clone());
        prop_assert_eq!(embed_di(&xml, &compute_layout(&doc).unwrap()).unwrap(), enriched);
    }

    #[test]
    fn add_then_delete_is_identity(model in model_strategy(), pick in any::<prop::sample::Index>()) {
        let ids: Vec<String> = model.ids().into_iter().filter(|id| *id != "start").map(str::to_string).collect();
        prop_assume!(!ids.is_empty());
        let anchor = pick.get(&ids);
        let fresh = Element::task(TaskKind::Task, "fresh_task", "Fresh work");
        let added = add_element(&model, fresh, Some(anchor), None).unwrap();
        prop_assert_eq!(delete_element(&added, "fresh_task").unwrap(), model);
    }

    #[test]
    fn move_preserves_id_multiset(model in model_strategy(), a in any::<prop::sample::Index>(), b in any::<prop::sample::Index>()) {
        let ids: Vec<String> = model.ids().into_iter().map(str::to_string).collect();
        let (mover, anchor) = (a.get(&ids), b.get(&ids));
        if let Ok(moved) = move_element(&model, mover, None, Some(anchor)) {
            let mut before: Vec<&str> = model.ids();
            let mut after: Vec<&str> = moved.ids();
            before.sort_unstable();
            after.sort_unstable();
            prop_assert_eq!(before, after);
        }
    }

    #[test]
    fn delete_shrinks_by_block_size(model in model_strategy(), pick in any::<prop::sample::Index>()) {
        let ids: Vec<String> = model.ids().into_iter().map(str::to_string).collect();
        let id = pick.get(&ids);
        let block = 1 + model.find(id).unwrap().element.nested_count();
        if let Ok(smaller) = delete_element(&model, id) {
            prop_assert_eq!(smaller.element_count() + block, model.element_count());
        }
    }

    #[test]
    fn scripts_are_all_or_nothing(model in model_strategy(), pick in any::<prop::sample::Index>()) {
        let ids: Vec<String> = model.ids().into_iter().filter(|id| *id != "start").map(str::to_string).collect();
        let anchor = pick.get(&ids).clone();
        let ops = vec![
            EditOp::AddElement {
                element: Element::task(TaskKind::UserTask, "fresh_task", "Fresh work"),
                before_id: Some(anchor),
                after_id: None,
            },
            EditOp::DeleteElement { element_id: "no_such_element".into() },
        ];
        let snapshot = serialize_process(&model);
        let failure = apply_edit_script(&model, &ops).unwrap_err();
        let failed_at_second = matches!(failure, bpmn_core::EditError::ScriptFailed { index: 1, .. });
        prop_assert!(failed_at_second);
        prop_assert_eq!(serialize_process(&model), snapshot);
    }
}

/// Layout invariants on the first 200 generated documents: every node has a
/// shape, shapes never overlap, every flow has at least two waypoints and
/// both ends dock onto the shapes they connect.
#[test]
fn layout_invariants_on_two_hundred_documents() {
    let mut with_loops = 0;
    for seed in 0..200u64 {
        let model = random_process(seed, 8 + (seed as usize % 30));
        let xml = to_bpmn_xml(&model).unwrap();
        let doc = BpmnDocument::parse(&xml).unwrap();
        let layout = compute_layout(&doc).unwrap();
        let g = doc.flow_graph();
        assert_eq!(layout.shapes.len(), g.node_count(), "seed {seed}");
        let shapes: Vec<(&String, &Bounds)> = layout.shapes.iter().collect();
        for (i, (a, ra)) in shapes.iter().enumerate() {
            for (b, rb) in &shapes[i + 1..] {
                assert!(!ra.overlaps(rb), "seed {seed}: {a} overlaps {b}");
            }
        }
        let position: HashMap<&str, usize> = g.nodes.iter().enumerate().map(|(i, n)| (n.id.as_str(), i)).collect();
        let mut has_loop = false;
        for e in &g.edges {
            let points = &layout.edges[&e.id];
            assert!(points.len() >= 2, "seed {seed}: {}", e.id);
            assert!(layout.shapes[&e.source].on_boundary(points[0]), "seed {seed}: {} start", e.id);
            assert!(layout.shapes[&e.target].on_boundary(*points.last().unwrap()), "seed {seed}: {} end", e.id);
            has_loop |= position[e.target.as_str()] <= position[e.source.as_str()];
        }
        with_loops += usize::from(has_loop);
    }
    assert!(with_loops >= 10, "only {with_loops} documents contain loops");
}

// Independent GED oracle: enumerate every injective partial mapping and
// score it by pushing the first graph's edges through the mapping.

fn oracle_ged(g1: &FlowGraph, g2: &FlowGraph) -> u64 {
    let n1 = g1.nodes.len();
    let n2 = g2.nodes.len();
    let norm = |s: &str| s.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase();
    let idx1: HashMap<&str, usize> = g1.nodes.iter().enumerate().map(|(i, n)| (n.id.as_str(), i)).collect();
    let idx2: HashMap<&str, usize> = g2.nodes.iter().enumerate().map(|(i, n)| (n.id.as_str(), i)).collect();
    let e1: Vec<(usize, usize)> = g1.edges.iter().map(|e| (idx1[e.source.as_str()], idx1[e.target.as_str()])).collect();
    let e2: Vec<(usize, usize)> = g2.edges.iter().map(|e| (idx2[e.source.as_str()], idx2[e.target.as_str()])).collect();

    let score = |map: &[Option<usize>]| -> u64 {
        let mut cost = 0u64;
        let mut used = vec![false; n2];
        for (i, m) in map.iter().enumerate() {
            match m {
                None => cost += 1,
                Some(j) => {
                    used[*j] = true;
                    let (a, b) = (&g1.nodes[i], &g2.nodes[*j]);
                    if a.kind != b.kind || norm(&a.label) != norm(&b.label) {
                        cost += 1;
                    }
                }
            }
        }
        cost += used.iter().filter(|u| !**u).count() as u64;
        let mut image: HashMap<(usize, usize), i64> = HashMap::new();
        for &(s, t) in &e1 {
            match (map[s], map[t]) {
                (Some(x), Some(y)) => *image.entry((x, y)).or_default() += 1,
                _ => cost += 1,
            }
        }
        for &(s, t) in &e2 {
            *image.entry((s, t)).or_default() -= 1;
        }
        cost + image.values().map(|d| d.unsigned_abs()).sum::<u64>()
    };

    fn rec(i: usize, n1: usize, n2: usize, map: &mut Vec<Option<usize>>, used: &mut Vec<bool>, best: &mut u64, score: &dyn Fn(&[Option<usize>]) -> u64) {
        if i == n1 {
            *best = (*best).min(score(map));
            return;
        }
        map.push(None);
        rec(i + 1, n1, n2, map, used, best, score);
        map.pop();
        for j in 0..n2 {
            if !used[j] {
                used[j] = true;
                map.push(Some(j));
                rec(i + 1, n1, n2, map, used, best, score);
                map.pop();
                used[j] = false;
            }
        }
    }
    let mut best = u64::MAX;
    rec(0, n1, n2, &mut Vec::new(), &mut vec![false; n2], &mut best, &score);
    best
}

fn graph_strategy(max_nodes: usize) -> impl Strategy<Value = FlowGraph> {
    let node = (prop::sample::select(vec!["task", "startEvent", "exclusiveGateway"]), prop::sample::select(vec!["A", "B", " a", ""]));
    prop::collection::vec(node, 0..=max_nodes).prop_flat_map(|nodes| {
        let n = nodes.len();
        let edges = if n == 0 {
            Just(Vec::new()).boxed()
        } else {
            prop::collection::vec((0..n, 0..n), 0..=7).boxed()
        };
        (Just(nodes), edges).prop_map(|(nodes, edges)| {
            let mut g = FlowGraph::default();
            for (i, (kind, label)) in nodes.iter().enumerate() {
                g.add_node(&format!("n{i}"), kind, label);
            }
            for (s, t) in edges {
                g.add_edge(&format!("n{s}"), &format!("n{t}"), None);
            }
            g
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn exact_ged_matches_enumeration(g1 in graph_strategy(5), g2 in graph_strategy(5)) {
        let result = ged(&g1, &g2, &CostModel::default());
        prop_assert!(result.exact);
        prop_assert_eq!(result.cost, oracle_ged(&g1, &g2));
    }

    #[test]
    fn exact_ged_is_symmetric(g1 in graph_strategy(6), g2 in graph_strategy(6)) {
        let costs = CostModel::default();
        prop_assert_eq!(ged(&g1, &g2, &costs).cost, ged(&g2, &g1, &costs).cost);
    }

    #[test]
    fn rged_is_bounded(g1 in graph_strategy(8), g2 in graph_strategy(8)) {
        prop_assume!(!(g1.is_empty() && g2.is_empty()));
        let r = rged(&g1, &g2).unwrap();
        prop_assert!(r >= Ratio::from_integer(0) && r <= Ratio::from_integer(1));
        if !g1.is_empty() {
            prop_assert_eq!(rged(&g1, &g1).unwrap(), Ratio::from_integer(0));
        }
    }

    #[test]
    fn approximation_never_undercuts(g1 in graph_strategy(6), g2 in graph_strategy(6)) {
        let costs = CostModel::default();
        let exact = ged(&g1, &g2, &costs).cost;
        let approx = bpmn_core::similarity::ged_with_limit(&g1, &g2, &costs, 0).cost;
        prop_assert!(approx >= exact);
    }
}
