use std::fs;
use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use twf_core::allen::{relation_between, BasicRelation, RelationSet};
use twf_core::dsl::{self, Document};
use twf_core::extended::*;
use twf_core::gen::{self, GenConfig};
use twf_core::oracle::{check_model, hull, theta_of_source, Model};
use twf_core::qcn::{is_consistent, Qcn};
use twf_core::workflow::{Kind, SubsumptionVerdict, Workflow};

fn corpus(name: &str) -> Document {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus").join(name);
    dsl::parse(&fs::read_to_string(&path).unwrap()).unwrap_or_else(|e| panic!("{name}: {e:?}"))
}

fn corpus_files() -> Vec<String> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus");
    let mut out: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .filter_map(|e| e.ok()?.file_name().into_string().ok())
        .filter(|n| n.ends_with(".twf"))
        .collect();
    out.sort();
    out
}

fn ext(w: Workflow, cons: &[(&str, RelationSet, &str)]) -> ExtendedWorkflow {
    let mut net = Qcn::new();
    for (x, r, y) in cons {
        net.add_variable(*x);
        net.add_variable(*y);
        net.set_constraint(x, y, *r).unwrap();
    }
    ExtendedWorkflow::new(w, net).unwrap()
}

fn a(n: &str) -> Workflow {
    Workflow::atom(n)
}

fn seqs(w: &Workflow) -> usize {
    w.count_nodes(|k| matches!(k, Kind::Seq(..)))
}

fn verified(ew: &ExtendedWorkflow, m: &Model) -> bool {
    check_model(&ew.workflow, &m.resolved, &m.assignment, &ew.network, &ew.r_map).unwrap()
}

fn hull_of(ew: &ExtendedWorkflow, m: &Model, var: &str) -> twf_core::allen::RationalInterval {
    let runs = theta_of_source(m, &ew.r_map[var]).unwrap();
    assert_eq!(runs.len(), 1, "{var} runs once");
    hull(&runs[0].1).unwrap()
}

fn small_cfg(max_atoms: usize) -> GenConfig {
    GenConfig { max_depth: 4, max_atoms, bound: 2, alphabet: 4, ..GenConfig::default() }
}

#[test]
fn seqfree_structure_on_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..600 {
        let ew = gen::extended(&mut rng, &GenConfig::default());
        let (sf, added) = sequence_free_report(&ew);
        assert_eq!(seqs(&sf.workflow), 0, "{}", ew.workflow);
        assert_eq!(added.len(), seqs(&ew.workflow));
        assert_eq!(sequence_free(&sf), sf);
        assert_eq!(validate(&sf), Ok(()), "{}", ew.workflow);
        for (x, y) in &added {
            assert!(sf.network.relation(x, y).unwrap().is_subset(sequence_relation()));
        }
        for (i, j, r) in ew.network.constraints() {
            let vars = ew.network.variables();
            assert!(sf.network.relation(&vars[i], &vars[j]).unwrap().is_subset(r));
        }
    }
}

#[test]
fn seqfree_preserves_bounded_satisfiability() {
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    let (mut sat, mut unsat) = (0, 0);
    for _ in 0..150 {
        let ew = gen::extended(&mut rng, &small_cfg(5));
        let before = check_satisfiable(&ew, 2).unwrap();
        let after = check_satisfiable(&sequence_free(&ew), 2).unwrap();
        assert_eq!(before, after, "{}\n{:?}", ew.workflow, ew.network.constraints());
        if before {
            sat += 1
        } else {
            unsat += 1
        }
    }
    assert!(sat > 10 && unsat > 10, "{sat}/{unsat}");
}

#[test]
fn models_found_are_models() {
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    for _ in 0..150 {
        let ew = gen::extended(&mut rng, &small_cfg(5));
        if let Some(m) = find_model(&ew, 2, 5).unwrap() {
            assert!(verified(&ew, &m));
        }
    }
}

#[test]
fn plain_satisfiability_implies_network_consistency_without_choices() {
    let mut rng = ChaCha8Rng::seed_from_u64(34);
    let mut checked = 0;
    while checked < 100 {
        let ew = gen::extended(&mut rng, &small_cfg(5));
        if ew.workflow.count_nodes(|k| matches!(k, Kind::Disj(..) | Kind::Loop(_))) > 0 {
            continue;
        }
        checked += 1;
        if check_satisfiable(&ew, 1).unwrap() {
            assert!(is_consistent(&ew.network), "{}", ew.workflow);
        }
    }
}

#[test]
fn every_workflow_alone_is_satisfiable() {
    let mut rng = ChaCha8Rng::seed_from_u64(35);
    for _ in 0..200 {
        let w = gen::workflow(&mut rng, &GenConfig::default());
        assert!(check_satisfiable(&embed(&w), 3).unwrap(), "{w}");
        assert!(check_strong_satisfiable(&embed(&w)));
    }
}

#[test]
fn corpus_strong_implies_plain() {
    for name in corpus_files() {
        let doc = corpus(&name);
        if check_strong_satisfiable(&doc.ext) {
            let m = find_model(&doc.ext, 3, 7).unwrap().unwrap_or_else(|| panic!("{name}"));
            assert!(verified(&doc.ext, &m));
        }
    }
}

#[test]
fn counterexample_is_plain_but_not_strong() {
    let doc = corpus("counterexample.twf");
    assert!(!check_strong_satisfiable(&doc.ext));
    let m = find_model(&doc.ext, 3, 7).unwrap().expect("satisfiable");
    assert!(verified(&doc.ext, &m));
    // Only one branch runs, so no constraint is ever active.
    assert_eq!(m.executions().len(), 2);
}

#[test]
fn strong_does_not_imply_plain_for_composite_parts() {
    use BasicRelation::*;
    // The chain member `and{a; b}` gets its own variable, unrelated to a.
    let w = Workflow::seq(Workflow::conj(a("a"), a("b")), a("c"));
    let ew = ext(w, &[("c", RelationSet::single(Before), "a")]);
    assert!(check_strong_satisfiable(&ew));
    assert!(!check_satisfiable(&ew, 1).unwrap());

    // No sequence at all: a hull cannot strictly contain both of its parts.
    let w = Workflow::conj(a("a"), a("b")).labeled("L");
    let di = RelationSet::single(Contains);
    let ew = ext(w, &[("L", di, "a"), ("L", di, "b")]);
    assert_eq!(sequence_free(&ew).network, ew.network);
    assert!(check_strong_satisfiable(&ew));
    assert!(!check_satisfiable(&ew, 1).unwrap());
}

#[test]
fn recipe_schedule() {
    let doc = corpus("recette.twf");
    let ew = &doc.ext;
    assert_eq!(ew.workflow.atom_count(), 6);
    assert_eq!(seqs(&ew.workflow), 3);
    assert!(check_strong_satisfiable(ew));
    let m = find_model(ew, 3, 7).unwrap().expect("recipe is satisfiable");
    assert!(verified(ew, &m));
    let sear = hull_of(ew, &m, "saisir le foie gras");
    let fry = hull_of(ew, &m, "frire le tournedos");
    assert_eq!(relation_between(&sear, &fry), BasicRelation::Finishes);
    assert_eq!(sear.hi(), fry.hi());
    assert!(fry.lo() < sear.lo());
    let garnish = hull_of(ew, &m, "garnir");
    let serve = hull_of(ew, &m, "servir");
    assert_eq!(relation_between(&garnish, &serve), BasicRelation::Meets);
    assert_eq!(garnish.hi(), serve.lo());
}

#[test]
fn loop_boundary_validation() {
    let w = Workflow::seq(Workflow::repeat(Workflow::seq(a("x"), a("y"))).labeled("L"), a("z"));
    let b = RelationSet::single(BasicRelation::Before);
    assert_eq!(validate(&ext(w.clone(), &[("L", b, "z")])), Ok(()));
    assert_eq!(validate(&ext(w.clone(), &[("x", b, "y")])), Ok(()));
    let errs = validate(&ext(w, &[("y", b, "z")])).unwrap_err();
    assert_eq!(errs.len(), 1);
    assert!(errs[0].to_string().contains("inside the loop"));
}

#[test]
fn sufficient_subsumption_examples() {
    use BasicRelation::*;
    let chain = ext(Workflow::seq(a("α"), a("β")), &[("α", RelationSet::single(Before), "β")]);
    let wide = RelationSet::of(&[Before, Meets, Overlaps]);
    let par = ext(Workflow::conj(a("α"), a("β")), &[("α", wide, "β")]);
    assert_eq!(subsumes_sufficient(&chain, &par), Ok(SubsumptionVerdict::Holds));
    assert_eq!(subsumes_sufficient(&par, &chain), Ok(SubsumptionVerdict::Unknown));
    // N₂ mentions a variable N₁ lacks; it is unconstrained on the left.
    let extra = ext(Workflow::conj(a("α"), a("β")), &[("α", RelationSet::single(Before), "β")]);
    assert_eq!(subsumes_sufficient(&embed(&chain.workflow), &extra), Ok(SubsumptionVerdict::Unknown));
    let labeled = ext(Workflow::conj(a("x").labeled("α"), a("β")), &[("α", wide, "β")]);
    assert_eq!(subsumes_sufficient(&chain, &labeled), Err(ExtendedError::IncompatibleRef("α".into())));
}

#[test]
fn seqfree_witness_is_a_witness_of_the_original() {
    // On chains of atoms both forms share occurrences, so a model of one
    // re-checks as a model of the other.
    let mut rng = ChaCha8Rng::seed_from_u64(36);
    for _ in 0..60 {
        let n = rng.gen_range(2..=4);
        let w = Workflow::seq_all((0..n).map(|i| a(&format!("a{i}"))));
        let mut net = Qcn::with_variables((0..n).map(|i| format!("a{i}")));
        let (i, j) = (rng.gen_range(0..n), rng.gen_range(0..n));
        net.constrain(i, j, gen::relation_set(&mut rng));
        let ew = ExtendedWorkflow::new(w, net).unwrap();
        let sf = sequence_free(&ew);
        assert_eq!(check_satisfiable(&ew, 1).unwrap(), is_consistent(&sf.network));
    }
}
