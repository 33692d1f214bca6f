//! Canonical forms modulo the structural equivalences of the language:
//! associativity and commutativity of conjunction and disjunction,
//! idempotence of disjunction and loop, associativity of sequence, and the
//! loop/sequence laws `w -> loop{w} ≡ loop{w} -> w ≡ loop{w} -> loop{w}`.
//!
//! Labeled nodes are kept as opaque boundaries: flattening never merges a
//! labeled child into its parent, since the label names that exact node.

use super::{rename_occurrences, Kind, NodePath, Workflow};

/// Structural fingerprint of a workflow, ignoring occurrence ids. The
/// derived order (constructor tag, then children, then names and labels) is
/// the canonical order of flattened conjunctions and disjunctions.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Shape {
    Atom(String, Option<String>),
    Seq(Box<Shape>, Box<Shape>, Option<String>),
    Conj(Box<Shape>, Box<Shape>, Option<String>),
    Disj(Box<Shape>, Box<Shape>, Option<String>),
    Loop(Box<Shape>, Option<String>),
}

impl Workflow {
    pub fn shape(&self) -> Shape {
        let l = self.label.clone();
        match &self.kind {
            Kind::Atomic { name, .. } => Shape::Atom(name.clone(), l),
            Kind::Seq(a, b) => Shape::Seq(Box::new(a.shape()), Box::new(b.shape()), l),
            Kind::Conj(a, b) => Shape::Conj(Box::new(a.shape()), Box::new(b.shape()), l),
            Kind::Disj(a, b) => Shape::Disj(Box::new(a.shape()), Box::new(b.shape()), l),
            Kind::Loop(b) => Shape::Loop(Box::new(b.shape()), l),
        }
    }
}

pub fn strip_labels(w: &Workflow) -> Workflow {
    let kind = match &w.kind {
        Kind::Atomic { .. } => w.kind.clone(),
        Kind::Seq(a, b) => Kind::Seq(Box::new(strip_labels(a)), Box::new(strip_labels(b))),
        Kind::Conj(a, b) => Kind::Conj(Box::new(strip_labels(a)), Box::new(strip_labels(b))),
        Kind::Disj(a, b) => Kind::Disj(Box::new(strip_labels(a)), Box::new(strip_labels(b))),
        Kind::Loop(b) => Kind::Loop(Box::new(strip_labels(b))),
    };
    Workflow { kind, label: None }
}

/// Canonical form: `normalize(a) == normalize(b)` implies `a ≡ b`.
pub fn normalize(w: &Workflow) -> Workflow {
    rename_occurrences(&norm(w))
}

#[derive(Clone, Copy, PartialEq)]
pub(crate) enum Op {
    Seq,
    Conj,
    Disj,
}

fn op_of(k: &Kind) -> Option<Op> {
    match k {
        Kind::Seq(..) => Some(Op::Seq),
        Kind::Conj(..) => Some(Op::Conj),
        Kind::Disj(..) => Some(Op::Disj),
        _ => None,
    }
}

/// Operands of `w` under `op`, descending through unlabeled nodes of the same operator.
pub(crate) fn flat_items(w: &Workflow, op: Op) -> Vec<&Workflow> {
    flat_items_at(w, op, NodePath::root()).into_iter().map(|(_, c)| c).collect()
}

/// [`flat_items`] with the path of each operand, given the path of `w`.
pub(crate) fn flat_items_at(w: &Workflow, op: Op, path: NodePath) -> Vec<(NodePath, &Workflow)> {
    let mut out = Vec::new();
    match &w.kind {
        Kind::Seq(a, b) | Kind::Conj(a, b) | Kind::Disj(a, b) if op_of(&w.kind) == Some(op) => {
            for (i, c) in [a, b].into_iter().enumerate() {
                let p = path.child(i as u8);
                if c.label.is_none() && op_of(&c.kind) == Some(op) {
                    out.extend(flat_items_at(c, op, p));
                } else {
                    out.push((p, &**c));
                }
            }
        }
        _ => out.push((path, w)),
    }
    out
}

fn normalized_items(w: &Workflow, op: Op) -> Vec<Workflow> {
    let mut out = Vec::new();
    for item in flat_items(w, op) {
        let n = norm(item);
        if n.label.is_none() && op_of(&n.kind) == Some(op) {
            out.extend(flat_items(&n, op).into_iter().cloned());
        } else {
            out.push(n);
        }
    }
    out
}

fn norm(w: &Workflow) -> Workflow {
    let label = w.label.clone();
    let mut out = match &w.kind {
        Kind::Atomic { .. } => return w.clone(),
        Kind::Seq(..) => Workflow::seq_all(canonical_loops(normalized_items(w, Op::Seq))),
        Kind::Conj(..) => {
            let mut items = normalized_items(w, Op::Conj);
            items.sort_by_cached_key(Workflow::shape);
            Workflow::conj_all(items)
        }
        Kind::Disj(..) => {
            let mut items = normalized_items(w, Op::Disj);
            items.sort_by_cached_key(Workflow::shape);
            items.dedup_by_key(|x| x.shape());
            Workflow::disj_all(items)
        }
        Kind::Loop(body) => {
            let body = norm(body);
            match body.kind {
                Kind::Loop(inner) if label.is_none() || body.label.is_none() => {
                    let mut merged = Workflow::repeat(*inner);
                    merged.label = label.or(body.label);
                    return merged;
                }
                kind => Workflow::repeat(Workflow { kind, label: body.label }),
            }
        }
    };
    if label.is_some() {
        out.label = label;
    }
    out
}

/// Inside a flattened sequence, every maximal run of items that are all `x`
/// or `loop{x}` and contains at least one loop becomes `loop{x}` followed by
/// `x` repeated (run length - 1) times.
fn canonical_loops(items: Vec<Workflow>) -> Vec<Workflow> {
    fn base(w: &Workflow) -> (&Workflow, bool) {
        match &w.kind {
            Kind::Loop(body) if w.label.is_none() => (body, true),
            _ => (w, false),
        }
    }
    let mut out = Vec::with_capacity(items.len());
    let mut i = 0;
    while i < items.len() {
        let key = base(&items[i]).0.shape();
        let mut j = i + 1;
        while j < items.len() && base(&items[j]).0.shape() == key {
            j += 1;
        }
        let has_loop = items[i..j].iter().any(|x| base(x).1);
        if has_loop {
            let rep = base(&items[i]).0.clone();
            out.push(Workflow::repeat(rep.clone()));
            out.extend(std::iter::repeat_n(rep, j - i - 1));
        } else {
            out.extend(items[i..j].iter().cloned());
        }
        i = j;
    }
    out
}
