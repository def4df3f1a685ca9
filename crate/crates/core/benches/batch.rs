//! Sequential versus data-parallel batch evaluation.
//!
//! `cargo bench -p bpmn-core --bench batch` compares both execution modes on
//! pairwise GED over generated models and on the compile/layout pipeline.
//! Built with `--no-default-features`, both modes run sequentially.

use std::hint::black_box;

use bpmn_core::eval::compare_graphs;
use bpmn_core::graph::FlowGraph;
use bpmn_core::ir::random_process;
use bpmn_core::layout::layout_xml;
use bpmn_core::par::{map_ordered, ExecMode};
use bpmn_core::similarity::to_flow_graph;
use bpmn_core::xml::to_bpmn_xml;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn graph_pairs(count: u64, size: usize) -> Vec<(FlowGraph, FlowGraph)> {
    (0..count)
        .map(|seed| {
            let a = to_flow_graph(&random_process(seed, size)).unwrap();
            let b = to_flow_graph(&random_process(seed + 10_000, size)).unwrap();
            (a, b)
        })
        .collect()
}

fn bench_ged(c: &mut Criterion) {
    let mut group = c.benchmark_group("ged_pairs");
    // Six-node models stay under the exact threshold; twenty-node ones use
    // the greedy assignment.
    for (label, size) in [("exact", 6usize), ("greedy", 20)] {
        let pairs = graph_pairs(64, size);
        for mode in [ExecMode::Sequential, ExecMode::Parallel] {
            group.bench_with_input(BenchmarkId::new(label, format!("{mode:?}")), &pairs, |b, pairs| {
                b.iter(|| {
                    map_ordered(mode, pairs, |(x, y)| compare_graphs(x, y, true).map(|c| c.ged).ok())
                        .into_iter()
                        .flatten()
                        .sum::<u64>()
                })
            });
        }
    }
    group.finish();
}

fn bench_pipeline(c: &mut Criterion) {
    let models: Vec<_> = (0..64).map(|seed| random_process(seed, 30)).collect();
    let mut group = c.benchmark_group("compile_and_layout");
    for mode in [ExecMode::Sequential, ExecMode::Parallel] {
        group.bench_function(format!("{mode:?}"), |b| {
            b.iter(|| {
                map_ordered(mode, &models, |m| layout_xml(&to_bpmn_xml(black_box(m)).unwrap()).unwrap().len())
                    .into_iter()
                    .sum::<usize>()
            })
        });
    }
    group.finish();
}

criterion_group!(benches, bench_ged, bench_pipeline);
criterion_main!(benches);
