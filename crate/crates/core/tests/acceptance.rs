//! The release gate. Each test checks one numbered criterion end to end
//! and prints a `PASS criterion N` line (visible with `--nocapture`):
//!
//! 1. Ant Maze adjacency matches the published 23-region list exactly.
//! 2. Ant Fall adjacency matches the published 25-region list exactly.
//! 3. Pushing the block into the pit bridges regions 9 and 23.
//! 4. G-BLEU agrees with a brute-force oracle on 1,000 random pairs.
//! 5. The worked value gleu([5,11,3,4], [5,11,2,3,4]) = 6/14.
//! 6. The echo run over both scenarios is byte-for-byte deterministic.
//! 7. Canonical program traces validate against their scenario graphs.
//! 8. Published leaderboard numbers need live LLMs; the deterministic
//!    substitutes (property suite, planner control, replayable live runs)
//!    are all in working order.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use symtrace::assets;
use symtrace::grid::{Cell, GridFile, Pos, Scenario};
use symtrace::metrics::{gleu, DEFAULT_MAX_N};
use symtrace::oracle::{simulate_full, validate_trace};
use symtrace::region::{RegionId, RegionTrace};
use symtrace::runner::{self, RunConfig, SCORES_FILE};
use symtrace::topology::{bridged_graph, extract_graph, RegionGraph};

fn rid(id: u32) -> RegionId {
    RegionId::new(id).unwrap()
}

fn declared(json: &str) -> BTreeMap<RegionId, Vec<RegionId>> {
    serde_json::from_str(json).unwrap()
}

fn scenario(text: &str) -> Scenario {
    Scenario::from_grid_file(GridFile::parse(text).unwrap()).unwrap()
}

fn check_adjacency(criterion: u32, label: &str, grid_text: &str, adjacency_json: &str) {
    let started = Instant::now();
    let scenario = scenario(grid_text);
    let graph = extract_graph(&scenario.grid);
    let expected = declared(adjacency_json);
    let diff = graph.verify_against(&expected);
    assert!(diff.is_empty(), "adjacency diff for {label}:\n{diff}");
    assert_eq!(graph.node_count(), expected.len());
    let elapsed = started.elapsed();
    assert!(elapsed < Duration::from_secs(1), "took {elapsed:?}");
    println!(
        "PASS criterion {criterion}: {label} adjacency reproduces the published \
         {}-region list with zero diff ({elapsed:?})",
        expected.len()
    );
}

#[test]
fn criterion_1_ant_maze_adjacency() {
    check_adjacency(
        1,
        "ant-maze IV",
        assets::ANT_MAZE_P4_GRID,
        assets::ANT_MAZE_P4_ADJACENCY,
    );
}

#[test]
fn criterion_2_ant_fall_adjacency() {
    let started = Instant::now();
    let scenario = scenario(assets::ANT_FALL_P4_GRID);
    let graph = extract_graph(&scenario.grid);
    let expected = declared(assets::ANT_FALL_P4_ADJACENCY);
    let diff = graph.verify_against(&expected);
    assert!(diff.is_empty(), "adjacency diff for ant-fall IV:\n{diff}");
    assert_eq!(graph.node_count(), 25);
    let block_neighbors: Vec<u32> =
        graph.neighbors(rid(8)).map(RegionId::get).collect();
    assert_eq!(block_neighbors, [7, 10, 12, 13], "adj(8)");
    let elapsed = started.elapsed();
    assert!(elapsed < Duration::from_secs(1), "took {elapsed:?}");
    println!(
        "PASS criterion 2: ant-fall IV adjacency reproduces the published \
         25-region list, including adj(8) = {{7, 10, 12, 13}} ({elapsed:?})"
    );
}

#[test]
fn criterion_3_bridge_property() {
    let started = Instant::now();
    let scenario = scenario(assets::ANT_FALL_P4_GRID);
    let base = extract_graph(&scenario.grid);
    assert!(
        !base.connected(rid(1), rid(3)),
        "regions 1 and 3 must start disconnected"
    );

    // Run the canonical program; its pushes drop the block into the pit.
    let program = assets::parse_program(assets::ANT_FALL_CANONICAL_PROGRAM).unwrap();
    let (_, final_grid) = simulate_full(&scenario, &program).unwrap();
    let bridged = bridged_graph(&final_grid, &base).unwrap();
    assert!(bridged.connected(rid(1), rid(3)), "bridge must join 1 and 3");

    let bridge_edges: Vec<(RegionId, RegionId)> =
        bridged.bridge_edges().iter().copied().collect();
    assert_eq!(bridge_edges.len(), 1, "exactly one pit run is filled");

    // Independently derive the expected endpoints: the filled pit run,
    // extended one cell past each end, lands on the bridge's regions.
    let mut filled = final_grid.block_cells_in_pit();
    filled.sort();
    assert_eq!(filled.len(), final_grid.block_cells().len(), "block fully in pit");
    for cell in &filled {
        assert_eq!(scenario.grid.terrain(*cell), Some(Cell::Pit));
    }
    let first = filled[0];
    let last = filled[filled.len() - 1];
    let (end_a, end_b) = if first.col == last.col {
        (Pos::new(first.row.wrapping_sub(1), first.col), Pos::new(last.row + 1, last.col))
    } else {
        (Pos::new(first.row, first.col.wrapping_sub(1)), Pos::new(last.row, last.col + 1))
    };
    let mut expected = [
        final_grid.effective_region(end_a).expect("region past one run end"),
        final_grid.effective_region(end_b).expect("region past the other run end"),
    ];
    expected.sort();
    assert_eq!(bridge_edges[0], (expected[0], expected[1]));
    assert_eq!(bridge_edges[0], (rid(9), rid(23)));

    let elapsed = started.elapsed();
    assert!(elapsed < Duration::from_secs(1), "took {elapsed:?}");
    println!(
        "PASS criterion 3: the filled pit run bridges exactly its abutting \
         regions (9, 23), connecting regions 1 and 3 ({elapsed:?})"
    );
}

/// n-gram scoring by explicit enumeration; deliberately written with
/// none of the data structures the production path uses.
fn brute_force_gleu(hyp: &[u32], reference: &[u32], max_n: usize) -> f64 {
    fn grams(tokens: &[u32], max_n: usize) -> Vec<Vec<u32>> {
        let mut out = Vec::new();
        for n in 1..=max_n.min(tokens.len()) {
            for start in 0..=tokens.len() - n {
                out.push(tokens[start..start + n].to_vec());
            }
        }
        out
    }
    let hyp_grams = grams(hyp, max_n);
    let ref_grams = grams(reference, max_n);
    let mut counted: Vec<&Vec<u32>> = Vec::new();
    let mut matches = 0usize;
    for gram in &hyp_grams {
        if counted.contains(&gram) {
            continue;
        }
        counted.push(gram);
        let in_hyp = hyp_grams.iter().filter(|g| *g == gram).count();
        let in_ref = ref_grams.iter().filter(|g| *g == gram).count();
        matches += in_hyp.min(in_ref);
    }
    let precision = matches as f64 / hyp_grams.len() as f64;
    let recall = matches as f64 / ref_grams.len() as f64;
    precision.min(recall)
}

fn random_trace(rng: &mut StdRng) -> Vec<u32> {
    let len = rng.gen_range(1..=8);
    let mut ids = Vec::with_capacity(len);
    for _ in 0..len {
        let id = rng.gen_range(1..=10u32);
        if ids.last() == Some(&id) {
            ids.push(if id == 10 { 1 } else { id + 1 });
        } else {
            ids.push(id);
        }
    }
    ids
}

#[test]
fn criterion_4_metric_oracle_equivalence() {
    let started = Instant::now();
    let mut rng = StdRng::seed_from_u64(0x47_4c_45_55);
    for case in 0..1000 {
        let a = random_trace(&mut rng);
        let b = random_trace(&mut rng);
        let trace_a = RegionTrace::from_ids(a.iter().copied()).unwrap();
        let trace_b = RegionTrace::from_ids(b.iter().copied()).unwrap();

        let fast = gleu(&trace_a, &trace_b);
        let slow = brute_force_gleu(&a, &b, DEFAULT_MAX_N);
        assert!(
            (fast - slow).abs() <= 1e-12,
            "case {case}: {a:?} vs {b:?}: fast {fast}, brute force {slow}"
        );
        assert_eq!(fast, gleu(&trace_b, &trace_a), "symmetry on case {case}");
        assert_eq!(gleu(&trace_a, &trace_a), 1.0, "identity on case {case}");
    }
    let elapsed = started.elapsed();
    assert!(elapsed < Duration::from_secs(10), "took {elapsed:?}");
    println!(
        "PASS criterion 4: G-BLEU matches the brute-force oracle on 1,000 \
         random pairs within 1e-12, with symmetry and identity ({elapsed:?})"
    );
}

#[test]
fn criterion_5_worked_metric_value() {
    let hyp = RegionTrace::from_ids([5, 11, 3, 4]).unwrap();
    let reference = RegionTrace::from_ids([5, 11, 2, 3, 4]).unwrap();
    let value = gleu(&hyp, &reference);
    let expected = 6.0 / 14.0;
    assert!((value - expected).abs() <= 1e-12, "got {value}");
    let brute = brute_force_gleu(&[5, 11, 3, 4], &[5, 11, 2, 3, 4], DEFAULT_MAX_N);
    assert!((brute - expected).abs() <= 1e-12, "oracle got {brute}");
    println!("PASS criterion 5: gleu([5,11,3,4], [5,11,2,3,4]) = 6/14 = {value:.6}");
}

fn workspace_config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

#[test]
fn criterion_6_end_to_end_determinism() {
    let started = Instant::now();
    let dir = tempfile::tempdir().unwrap();

    let mut first = RunConfig::from_file(&workspace_config("echo_k4.json")).unwrap();
    first.output_dir = dir.path().join("a");
    let mut second = first.clone();
    second.output_dir = dir.path().join("b");

    let result = runner::evaluate(&first).unwrap();
    runner::evaluate(&second).unwrap();

    assert_eq!(result.records.len(), 88, "2 scenarios x 11 instructions x K=4");
    assert_eq!(result.summary.pairs.len(), 22);
    for pair in &result.summary.pairs {
        assert_eq!(
            pair.mean, 1.0,
            "echo must score 1.0 on {}/{}",
            pair.partition, pair.instruction_id
        );
    }

    let bytes_a = std::fs::read(first.output_dir.join(SCORES_FILE)).unwrap();
    let bytes_b = std::fs::read(second.output_dir.join(SCORES_FILE)).unwrap();
    assert!(!bytes_a.is_empty());
    assert_eq!(bytes_a, bytes_b, "scores.csv must be byte-identical");

    let elapsed = started.elapsed();
    assert!(elapsed < Duration::from_secs(30), "took {elapsed:?}");
    println!(
        "PASS criterion 6: echo run over 22 pairs, K=4, scores 1.0 everywhere \
         with byte-identical scores.csv across two runs ({elapsed:?})"
    );
}

#[test]
fn criterion_7_oracle_validity() {
    let started = Instant::now();
    let cases = [
        ("ant-maze IV whole", assets::ANT_MAZE_P4_GRID, assets::ANT_MAZE_CANONICAL_PROGRAM),
        ("ant-fall IV whole", assets::ANT_FALL_P4_GRID, assets::ANT_FALL_CANONICAL_PROGRAM),
        ("ant-fall IV before", assets::ANT_FALL_P4_BEFORE_GRID, assets::ANT_FALL_BEFORE_PROGRAM),
        ("ant-fall IV after", assets::ANT_FALL_P4_AFTER_GRID, assets::ANT_FALL_AFTER_PROGRAM),
    ];
    for (label, grid_text, program_json) in cases {
        let scenario = scenario(grid_text);
        let base = extract_graph(&scenario.grid);
        let program = assets::parse_program(program_json).unwrap();
        let (trace, final_grid) = simulate_full(&scenario, &program).unwrap();
        // Use the bridged graph when the program ends with the block in a
        // pit; phases that stop earlier validate against plain terrain.
        let graph: RegionGraph =
            bridged_graph(&final_grid, &base).unwrap_or_else(|_| base.clone());
        validate_trace(&trace, &graph)
            .unwrap_or_else(|violation| panic!("{label}: {violation}"));

        let ids: Vec<u32> = trace.regions().iter().map(|r| r.get()).collect();
        match label {
            "ant-maze IV whole" => {
                assert_eq!(ids.first(), Some(&5), "{label} start");
                assert_eq!(ids.last(), Some(&4), "{label} end");
            }
            "ant-fall IV whole" => {
                assert_eq!(ids.first(), Some(&1), "{label} start");
                assert_eq!(ids.last(), Some(&3), "{label} end");
            }
            _ => {}
        }
    }
    let elapsed = started.elapsed();
    assert!(elapsed < Duration::from_secs(5), "took {elapsed:?}");
    println!(
        "PASS criterion 7: all four canonical traces validate against their \
         scenario graphs, with the pinned start and end regions ({elapsed:?})"
    );
}

#[test]
fn criterion_8_desk_scale_substitutes() {
    // The published leaderboard numbers come from commercial LLMs queried
    // stochastically, so they cannot be regenerated here. What the gate
    // can hold is the substitute battery: (a) the metric property suite
    // (criterion 4 above plus tests/property.rs), (b) the instruction-blind
    // planner as a deterministic, recomputable lower-bound control, and
    // (c) a configurable live-run mode whose replay cache makes finished
    // runs exactly reproducible.

    // (b) Planner control: two runs agree byte for byte, and its scores sit
    // strictly between the floor and the echo ceiling at frozen values.
    let dir = tempfile::tempdir().unwrap();
    let mut first = RunConfig::from_file(&workspace_config("planner_all_scenarios.json")).unwrap();
    first.output_dir = dir.path().join("a");
    let mut second = first.clone();
    second.output_dir = dir.path().join("b");
    let result = runner::evaluate(&first).unwrap();
    runner::evaluate(&second).unwrap();
    let bytes_a = std::fs::read(first.output_dir.join(SCORES_FILE)).unwrap();
    let bytes_b = std::fs::read(second.output_dir.join(SCORES_FILE)).unwrap();
    assert_eq!(bytes_a, bytes_b, "planner control must be deterministic");

    let mean_of = |partition: &str, phase: &str| {
        result
            .summary
            .partitions
            .iter()
            .find(|row| {
                row.environment == partition.split_once(' ').unwrap().0
                    && row.phase.to_string() == phase
            })
            .map(|row| row.mean)
            .unwrap()
    };
    assert_eq!(mean_of("ant-maze IV", "whole"), 20.0 / 30.0);
    assert_eq!(mean_of("ant-fall IV", "whole"), 7.0 / 38.0);
    assert_eq!(mean_of("ant-fall IV", "before-block"), 7.0 / 18.0);
    assert_eq!(mean_of("ant-fall IV", "after-block"), 3.0 / 22.0);

    // (c) Live-run mode is configured (HTTP backend spec parses), and a
    // finished run replays from its cache byte for byte.
    let http = RunConfig::from_file(&workspace_config("http_example.json")).unwrap();
    assert!(!http.backend.is_offline(), "example config must be a live backend");

    let replayed = runner::replay(&first.output_dir).unwrap();
    assert!(replayed.scores_match, "replay must reproduce the stored scores");
    assert_eq!(replayed.result.records, result.records);

    println!(
        "PASS criterion 8: published LLM scores are not desk-reproducible; \
         substitutes hold (metric property suite, deterministic planner \
         control at its frozen means, and byte-exact replay of live runs)"
    );
}
