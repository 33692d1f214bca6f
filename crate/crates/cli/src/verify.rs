//! `oracle-verify`: the constraint solver against brute-force enumeration of
//! endpoint orders, on random networks.

use std::thread;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use twf_core::allen::verify_composition_table;
use twf_core::gen;
use twf_core::oracle::{brute_force_consistent, brute_force_minimal_network};
use twf_core::qcn::{is_consistent, path_consistency, Qcn};

/// Variables per network for the consistency comparison.
const MAX_CONSISTENCY_VARS: usize = 4;
/// Variables per network for the path-consistency soundness check.
const MAX_PC_VARS: usize = 5;

#[derive(Debug, Default, Serialize)]
struct Outcome {
    consistent: bool,
    disagreement: Option<String>,
    /// Pair whose path-consistent entry lost a realizable relation.
    unsound: Option<String>,
}

#[derive(Serialize)]
struct Summary {
    schema_version: u32,
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    seed: u64,
    instances: usize,
    table_entries_matching: usize,
    consistent_instances: usize,
    disagreements: Vec<String>,
    unsound_refinements: Vec<String>,
}

fn describe(net: &Qcn) -> String {
    let vars = net.variables();
    let parts: Vec<String> =
        net.constraints().into_iter().map(|(i, j, r)| format!("{} {r} {}", vars[i], vars[j])).collect();
    format!("[{}]", parts.join("; "))
}

fn instance(seed: u64, index: usize) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(index as u64));
    let mut out = Outcome::default();

    let n = rng.gen_range(1..=MAX_CONSISTENCY_VARS);
    let density = rng.gen_range(0.3..=1.0);
    let net = gen::network(&mut rng, n, density);
    out.consistent = brute_force_consistent(&net);
    if is_consistent(&net) != out.consistent {
        out.disagreement = Some(format!("#{index}: solver says {}, oracle {} on {}", !out.consistent, out.consistent, describe(&net)));
    }

    // Dense networks keep the 5-variable enumeration small.
    let n = rng.gen_range(2..=MAX_PC_VARS);
    let net = gen::network(&mut rng, n, if n == MAX_PC_VARS { 1.0 } else { 0.7 });
    let minimal = brute_force_minimal_network(&net);
    let (pc, _) = path_consistency(&net);
    'outer: for i in 0..n {
        for j in 0..n {
            if !minimal[i][j].is_subset(pc.get(i, j)) {
                let vars = net.variables();
                out.unsound = Some(format!("#{index}: {} {} lost {} on {}", vars[i], vars[j], minimal[i][j], describe(&net)));
                break 'outer;
            }
        }
    }
    out
}

/// Runs the cross-check and returns the exit status.
pub fn run(instances: usize, seed: u64, json: bool) -> u8 {
    let workers = thread::available_parallelism().map_or(1, |n| n.get()).min(instances.max(1));
    let chunk = instances.div_ceil(workers).max(1);
    // Each instance depends only on (seed, index); chunks are joined in order.
    let outcomes: Vec<Outcome> = thread::scope(|s| {
        let handles: Vec<_> = (0..instances)
            .step_by(chunk)
            .map(|start| s.spawn(move || (start..(start + chunk).min(instances)).map(|i| instance(seed, i)).collect::<Vec<_>>()))
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("worker panicked")).collect()
    });

    let summary = Summary {
        schema_version: crate::report::SCHEMA_VERSION,
        tool: "twf",
        version: env!("CARGO_PKG_VERSION"),
        command: "oracle-verify",
        seed,
        instances,
        table_entries_matching: verify_composition_table(),
        consistent_instances: outcomes.iter().filter(|o| o.consistent).count(),
        disagreements: outcomes.iter().filter_map(|o| o.disagreement.clone()).collect(),
        unsound_refinements: outcomes.iter().filter_map(|o| o.unsound.clone()).collect(),
    };
    if json {
        println!("{}", serde_json::to_string_pretty(&summary).expect("summary serializes"));
    } else {
        println!("composition table: {}/169 entries match", summary.table_entries_matching);
        println!(
            "consistency: {} instances (<= {MAX_CONSISTENCY_VARS} variables, {} consistent), {} disagreements",
            instances,
            summary.consistent_instances,
            summary.disagreements.len()
        );
        for d in &summary.disagreements {
            println!("  {d}");
        }
        println!(
            "path consistency: {} instances (<= {MAX_PC_VARS} variables), {} removed a realizable relation",
            instances,
            summary.unsound_refinements.len()
        );
        for u in &summary.unsound_refinements {
            println!("  {u}");
        }
    }
    let ok = summary.table_entries_matching == 169 && summary.disagreements.is_empty() && summary.unsound_refinements.is_empty();
    if ok {
        0
    } else {
        1
    }
}
