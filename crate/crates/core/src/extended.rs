//! Workflows paired with a constraint network. Each network variable names
//! a subworkflow: either a node label or the name of an atom that occurs
//! exactly once.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::allen::{BasicRelation, RelationSet};
use crate::oracle::{self, Model, NodeMap, OracleError, DEFAULT_ATOM_BUDGET};
use crate::qcn::{entails, is_consistent, Qcn};
use crate::workflow::normal::{flat_items, Op};
use crate::workflow::{normalize, rename_occurrences, subsumes_syntactic, Kind, NodePath, SubsumptionVerdict, Workflow};

/// What a constraint variable refers to.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NodeRef {
    Label(String),
    Atom(String),
}

impl NodeRef {
    pub fn text(&self) -> &str {
        match self {
            NodeRef::Label(s) | NodeRef::Atom(s) => s,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RefError {
    #[error("`{0}` is neither a label nor an atom name")]
    Unknown(String),
    #[error("atom `{0}` occurs {1} times; label the occurrence you mean")]
    AmbiguousAtom(String, usize),
}

/// Resolves a variable name against a workflow: labels first, then atoms
/// whose name occurs once.
pub fn resolve_ref(w: &Workflow, name: &str) -> Result<(NodeRef, NodePath), RefError> {
    if let Some((path, _)) = w.find_label(name) {
        return Ok((NodeRef::Label(name.to_string()), path));
    }
    let hits: Vec<NodePath> =
        w.nodes().into_iter().filter(|(_, n)| n.atom_name() == Some(name)).map(|(p, _)| p).collect();
    match hits.len() {
        0 => Err(RefError::Unknown(name.to_string())),
        1 => Ok((NodeRef::Atom(name.to_string()), hits.into_iter().next().unwrap())),
        n => Err(RefError::AmbiguousAtom(name.to_string(), n)),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExtendedError {
    #[error(transparent)]
    Ref(#[from] RefError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("`{0}` names a label in one workflow and an atom in the other")]
    IncompatibleRef(String),
}

/// A workflow together with a network over (some of) its subworkflows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtendedWorkflow {
    pub workflow: Workflow,
    pub network: Qcn,
    /// Variable name to the node it denotes.
    pub r_map: NodeMap,
}

impl ExtendedWorkflow {
    /// Renames occurrences and resolves every network variable.
    pub fn new(workflow: Workflow, network: Qcn) -> Result<Self, ExtendedError> {
        let workflow = rename_occurrences(&workflow);
        let mut r_map = NodeMap::new();
        for v in network.variables() {
            let (_, path) = resolve_ref(&workflow, v)?;
            r_map.insert(v.clone(), path);
        }
        Ok(ExtendedWorkflow { workflow, network, r_map })
    }

    /// The variable attached to a node, if any.
    pub fn variable_of(&self, path: &NodePath) -> Option<&str> {
        self.r_map.iter().find(|(_, p)| *p == path).map(|(v, _)| v.as_str())
    }
}

/// `(w, ∅)`.
pub fn embed(w: &Workflow) -> ExtendedWorkflow {
    ExtendedWorkflow { workflow: rename_occurrences(w), network: Qcn::new(), r_map: NodeMap::new() }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    DuplicateLabel { label: String, paths: Vec<NodePath> },
    LabelShadowsAtom { label: String },
    UnmappedVariable { variable: String },
    DanglingPath { variable: String, path: NodePath },
    NotInjective { first: String, second: String, path: NodePath },
    LoopBoundary { inner: (String, NodePath), outer: (String, NodePath), loop_path: NodePath },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DuplicateLabel { label, paths } => {
                let ps: Vec<String> = paths.iter().map(ToString::to_string).collect();
                write!(f, "label `{label}` is used more than once (at {})", ps.join(", "))
            }
            Violation::LabelShadowsAtom { label } => write!(f, "label `{label}` is also an atom name"),
            Violation::UnmappedVariable { variable } => write!(f, "variable `{variable}` denotes no subworkflow"),
            Violation::DanglingPath { variable, path } => write!(f, "variable `{variable}` points at missing node {path}"),
            Violation::NotInjective { first, second, path } => {
                write!(f, "`{first}` and `{second}` both denote node {path}")
            }
            Violation::LoopBoundary { inner, outer, loop_path } => write!(
                f,
                "constraint between `{}` (at {}, inside the loop at {loop_path}) and `{}` (at {}, outside it)",
                inner.0, inner.1, outer.0, outer.1
            ),
        }
    }
}

/// Checks label uniqueness, that every variable denotes exactly one node and
/// no node carries two variables, and that no constraint crosses a loop
/// boundary. A constraint may relate a node to a loop node itself but not to
/// anything inside that loop's body from outside.
pub fn validate(ew: &ExtendedWorkflow) -> Result<(), Vec<Violation>> {
    let mut out = Vec::new();
    let w = &ew.workflow;
    let nodes = w.nodes();
    let mut labels: BTreeMap<&str, Vec<NodePath>> = BTreeMap::new();
    let mut atoms: BTreeSet<&str> = BTreeSet::new();
    for (p, n) in &nodes {
        if let Some(l) = n.label() {
            labels.entry(l).or_default().push(p.clone());
        }
        if let Some(a) = n.atom_name() {
            atoms.insert(a);
        }
    }
    for (label, paths) in &labels {
        if paths.len() > 1 {
            out.push(Violation::DuplicateLabel { label: label.to_string(), paths: paths.clone() });
        }
        if atoms.contains(label) {
            out.push(Violation::LabelShadowsAtom { label: label.to_string() });
        }
    }
    let mut owner: BTreeMap<&NodePath, &str> = BTreeMap::new();
    for v in ew.network.variables() {
        match ew.r_map.get(v) {
            None => out.push(Violation::UnmappedVariable { variable: v.clone() }),
            Some(p) if w.get(p).is_none() => {
                out.push(Violation::DanglingPath { variable: v.clone(), path: p.clone() })
            }
            Some(p) => {
                if let Some(first) = owner.insert(p, v) {
                    out.push(Violation::NotInjective { first: first.to_string(), second: v.clone(), path: p.clone() });
                }
            }
        }
    }
    let vars = ew.network.variables();
    for (i, j, _) in ew.network.constraints() {
        let (Some(pi), Some(pj)) = (ew.r_map.get(&vars[i]), ew.r_map.get(&vars[j])) else { continue };
        if let Some((loop_path, inner_is_first)) = crosses_loop_boundary(w, pi, pj) {
            let (a, b) = if inner_is_first { ((i, pi), (j, pj)) } else { ((j, pj), (i, pi)) };
            out.push(Violation::LoopBoundary {
                inner: (vars[a.0].clone(), a.1.clone()),
                outer: (vars[b.0].clone(), b.1.clone()),
                loop_path,
            });
        }
    }
    if out.is_empty() {
        Ok(())
    } else {
        Err(out)
    }
}

/// The first loop whose body contains exactly one of `a` and `b` while the
/// other is not the loop itself. The flag tells whether `a` is the inner one.
pub fn crosses_loop_boundary(w: &Workflow, a: &NodePath, b: &NodePath) -> Option<(NodePath, bool)> {
    w.nodes().into_iter().filter(|(_, n)| matches!(n.kind, Kind::Loop(_))).find_map(|(l, _)| {
        let (in_a, in_b) = (a.is_strictly_below(&l), b.is_strictly_below(&l));
        if in_a && !in_b && *b != l {
            Some((l, true))
        } else if in_b && !in_a && *a != l {
            Some((l, false))
        } else {
            None
        }
    })
}

/// Relation added between consecutive members of an eliminated sequence.
pub fn sequence_relation() -> RelationSet {
    RelationSet::of(&[BasicRelation::Before, BasicRelation::Meets])
}

struct SeqFree<'a> {
    source: &'a Workflow,
    taken: BTreeSet<String>,
    next_fresh: usize,
    added: Vec<(String, String)>,
}

impl SeqFree<'_> {
    fn fresh_label(&mut self) -> String {
        loop {
            self.next_fresh += 1;
            let l = format!("_{}", self.next_fresh);
            if self.taken.insert(l.clone()) {
                return l;
            }
        }
    }

    fn reference(&mut self, item: &mut Workflow) -> String {
        if let Some(l) = item.label() {
            return l.to_string();
        }
        if let Some(name) = item.atom_name() {
            if matches!(resolve_ref(self.source, name), Ok((NodeRef::Atom(_), _))) {
                return name.to_string();
            }
        }
        let l = self.fresh_label();
        item.label = Some(l.clone());
        l
    }

    fn transform(&mut self, w: &Workflow) -> Workflow {
        let map = |s: &mut Self, c: &Workflow| Box::new(s.transform(c));
        let kind = match &w.kind {
            Kind::Atomic { .. } => return w.clone(),
            Kind::Seq(..) => {
                let mut items: Vec<Workflow> = flat_items(w, Op::Seq).into_iter().map(|c| self.transform(c)).collect();
                let refs: Vec<String> = items.iter_mut().map(|it| self.reference(it)).collect();
                for pair in refs.windows(2) {
                    self.added.push((pair[0].clone(), pair[1].clone()));
                }
                return Workflow { label: w.label.clone(), ..Workflow::conj_all(items) };
            }
            Kind::Conj(a, b) => Kind::Conj(map(self, a), map(self, b)),
            Kind::Disj(a, b) => Kind::Disj(map(self, a), map(self, b)),
            Kind::Loop(b) => Kind::Loop(map(self, b)),
        };
        Workflow { kind, label: w.label.clone() }
    }
}

/// The sequence-free form: every maximal chain `x₁ -> … -> xₙ` becomes the
/// conjunction of its members plus `xᵢ {b,m} xᵢ₊₁` for each consecutive pair.
/// Members without a label or a unique atom name get a fresh `_k` label.
/// Inner chains are eliminated before the chains that contain them; the
/// result is normalized.
pub fn sequence_free(ew: &ExtendedWorkflow) -> ExtendedWorkflow {
    sequence_free_report(ew).0
}

/// [`sequence_free`] plus the list of constrained pairs it introduced.
pub fn sequence_free_report(ew: &ExtendedWorkflow) -> (ExtendedWorkflow, Vec<(String, String)>) {
    let mut taken = BTreeSet::new();
    for (_, n) in ew.workflow.nodes() {
        taken.extend(n.label().map(str::to_string));
        taken.extend(n.atom_name().map(str::to_string));
    }
    let mut pass = SeqFree { source: &ew.workflow, taken, next_fresh: 0, added: Vec::new() };
    let workflow = normalize(&pass.transform(&ew.workflow));
    let mut network = ew.network.clone();
    for (a, b) in &pass.added {
        let i = network.add_variable(a.clone());
        let j = network.add_variable(b.clone());
        network.constrain(i, j, sequence_relation());
    }
    let out = ExtendedWorkflow::new(workflow, network).expect("every reference introduced by the transform resolves");
    (out, pass.added)
}

/// Strong satisfiability: the network of the sequence-free form is consistent.
pub fn check_strong_satisfiable(ew: &ExtendedWorkflow) -> bool {
    is_consistent(&sequence_free(ew).network)
}

/// A bounded model of `ew`: loop counts up to `bound`, at most `budget`
/// executed atoms per resolution.
pub fn find_model(ew: &ExtendedWorkflow, bound: u32, budget: usize) -> Result<Option<Model>, ExtendedError> {
    Ok(oracle::find_model(&ew.workflow, &ew.network, &ew.r_map, bound, budget)?)
}

/// Bounded satisfiability with the default atom budget. Exact up to the
/// unroll bound; `BudgetExceeded` means the question was not decided.
pub fn check_satisfiable(ew: &ExtendedWorkflow, bound: u32) -> Result<bool, ExtendedError> {
    Ok(find_model(ew, bound, DEFAULT_ATOM_BUDGET)?.is_some())
}

/// Sufficient condition: `φ₁ ⊑ φ₂` by rewriting and `N₁ ⊨ N₂`. Variables of
/// `N₂` missing from `N₁` are added to `N₁` unconstrained.
pub fn subsumes_sufficient(ew1: &ExtendedWorkflow, ew2: &ExtendedWorkflow) -> Result<SubsumptionVerdict, ExtendedError> {
    for v in ew2.network.variables() {
        if ew1.network.index_of(v).is_none() {
            continue;
        }
        let (r1, _) = resolve_ref(&ew1.workflow, v)?;
        let (r2, _) = resolve_ref(&ew2.workflow, v)?;
        if std::mem::discriminant(&r1) != std::mem::discriminant(&r2) {
            return Err(ExtendedError::IncompatibleRef(v.clone()));
        }
    }
    if !subsumes_syntactic(&ew1.workflow, &ew2.workflow).holds() {
        return Ok(SubsumptionVerdict::Unknown);
    }
    let mut n1 = ew1.network.clone();
    for v in ew2.network.variables() {
        n1.add_variable(v.clone());
    }
    let ok = entails(&n1, &ew2.network).expect("all variables were added");
    Ok(if ok { SubsumptionVerdict::Holds } else { SubsumptionVerdict::Unknown })
}
