//! Seeded random instances for property tests and the `oracle-verify`
//! cross-check.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::allen::{BasicRelation, RelationSet};
use crate::extended::{crosses_loop_boundary, resolve_ref, ExtendedWorkflow};
use crate::qcn::Qcn;
use crate::workflow::{rename_occurrences, Workflow};

#[derive(Debug, Clone)]
pub struct GenConfig {
    /// Maximum tree depth (an atom has depth 1).
    pub max_depth: usize,
    /// Upper bound on atoms executed by any resolution at `bound`.
    pub max_atoms: usize,
    pub bound: u32,
    /// Atom names are drawn from the first `alphabet` letters.
    pub alphabet: usize,
    /// Probability that a composite node gets a label.
    pub label_prob: f64,
    pub max_constraints: usize,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig { max_depth: 4, max_atoms: 7, bound: 3, alphabet: 4, label_prob: 0.3, max_constraints: 4 }
    }
}

const NAMES: [&str; 8] = ["a", "b", "c", "d", "e", "f", "g", "h"];

fn tree<R: Rng>(rng: &mut R, depth: usize, cfg: &GenConfig) -> Workflow {
    if depth <= 1 || rng.gen_bool(0.35) {
        return Workflow::atom(NAMES[rng.gen_range(0..cfg.alphabet.clamp(1, NAMES.len()))]);
    }
    let mut sub = || tree(rng, depth - 1, cfg);
    let (x, y) = (sub(), sub());
    match rng.gen_range(0..7) {
        0 | 1 => Workflow::seq(x, y),
        2 | 3 => Workflow::conj(x, y),
        4 | 5 => Workflow::disj(x, y),
        _ => Workflow::repeat(x),
    }
}

/// A random workflow within the depth and resolved-atom limits, with
/// occurrences renamed and no labels.
pub fn workflow<R: Rng>(rng: &mut R, cfg: &GenConfig) -> Workflow {
    loop {
        let w = tree(rng, cfg.max_depth, cfg);
        if w.max_resolved_atoms(cfg.bound) <= cfg.max_atoms {
            return rename_occurrences(&w);
        }
    }
}

/// Random non-empty relation set: often a singleton, sometimes a small
/// disjunction, occasionally any mask.
pub fn relation_set<R: Rng>(rng: &mut R) -> RelationSet {
    match rng.gen_range(0..10) {
        0..=3 => RelationSet::single(*BasicRelation::ALL.choose(rng).unwrap()),
        4..=7 => {
            let k = rng.gen_range(2..=5);
            BasicRelation::ALL.choose_multiple(rng, k).copied().collect()
        }
        _ => RelationSet::from_bits(rng.gen_range(1..=RelationSet::UNIVERSAL.bits())),
    }
}

/// A network over `n` variables named `v0, v1, …`; each pair is constrained
/// with probability `density`.
pub fn network<R: Rng>(rng: &mut R, n: usize, density: f64) -> Qcn {
    let mut q = Qcn::with_variables((0..n).map(|i| format!("v{i}")));
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen_bool(density) {
                q.constrain(i, j, relation_set(rng));
            }
        }
    }
    q
}

/// A random workflow with some composites labeled and up to
/// `max_constraints` constraints between labels and unique atoms, none of
/// them crossing a loop boundary.
pub fn extended<R: Rng>(rng: &mut R, cfg: &GenConfig) -> ExtendedWorkflow {
    let mut w = workflow(rng, cfg);
    let composites: Vec<_> = w.nodes().into_iter().filter(|(_, n)| !n.is_atomic()).map(|(p, _)| p).collect();
    let mut next = 0;
    for p in composites {
        if rng.gen_bool(cfg.label_prob) {
            next += 1;
            w.get_mut(&p).unwrap().label = Some(format!("L{next}"));
        }
    }
    let mut refs: Vec<String> = (1..=next).map(|k| format!("L{k}")).collect();
    refs.extend(NAMES.iter().filter(|n| resolve_ref(&w, n).is_ok()).map(|n| n.to_string()));
    let mut net = Qcn::new();
    if refs.len() >= 2 {
        for _ in 0..rng.gen_range(0..=cfg.max_constraints) {
            let pair: Vec<&String> = refs.choose_multiple(rng, 2).collect();
            let (pa, pb) = (resolve_ref(&w, pair[0]).unwrap().1, resolve_ref(&w, pair[1]).unwrap().1);
            if crosses_loop_boundary(&w, &pa, &pb).is_some() {
                continue;
            }
            let i = net.add_variable(pair[0].clone());
            let j = net.add_variable(pair[1].clone());
            net.constrain(i, j, relation_set(rng));
        }
    }
    ExtendedWorkflow::new(w, net).expect("refs were resolved above")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extended::validate;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn generated_instances_respect_limits() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let cfg = GenConfig::default();
        for _ in 0..200 {
            let w = workflow(&mut rng, &cfg);
            assert!(w.depth() <= cfg.max_depth);
            assert!(w.max_resolved_atoms(cfg.bound) <= cfg.max_atoms);
            let ew = extended(&mut rng, &cfg);
            assert_eq!(validate(&ew), Ok(()), "{}", ew.workflow);
            assert!(ew.network.constraints().len() <= cfg.max_constraints);
        }
    }
}
