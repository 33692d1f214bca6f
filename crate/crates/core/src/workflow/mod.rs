//! The compositional workflow language: atomic activities combined by
//! sequence, conjunction (parallel split/join), disjunction (exclusive
//! choice/merge) and loop.

pub(crate) mod normal;
mod resolve;
mod subsume;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use normal::{normalize, strip_labels, Shape};
pub use resolve::{resolutions, Anchor, Branch, Resolution, Resolutions, Resolved, Site};
pub use subsume::{subsumes_syntactic, subsumes_with_budget, SubsumptionVerdict, DEFAULT_REWRITE_BUDGET};

/// Distinguishes repeated occurrences of the same atomic activity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct OccurrenceId(pub u32);

impl fmt::Display for OccurrenceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Kind {
    Atomic { name: String, occ: OccurrenceId },
    Seq(Box<Workflow>, Box<Workflow>),
    Conj(Box<Workflow>, Box<Workflow>),
    Disj(Box<Workflow>, Box<Workflow>),
    Loop(Box<Workflow>),
}

/// A workflow node. The optional label names the node so that temporal
/// constraints can be attached to it.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Workflow {
    pub kind: Kind,
    pub label: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WorkflowError {
    #[error("unroll count must be at least 1")]
    ZeroUnroll,
    #[error("unroll bound must be at least 1")]
    ZeroBound,
    #[error("no node at path {0}")]
    InvalidPath(NodePath),
}

/// Child indices from the root: `0` is the left operand (or a loop body),
/// `1` the right operand.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct NodePath(pub Vec<u8>);

impl NodePath {
    pub fn root() -> Self {
        NodePath(Vec::new())
    }

    pub fn child(&self, idx: u8) -> Self {
        let mut steps = self.0.clone();
        steps.push(idx);
        NodePath(steps)
    }

    pub fn is_root(&self) -> bool {
        self.0.is_empty()
    }

    /// True if `self` lies strictly below `other`.
    pub fn is_strictly_below(&self, other: &NodePath) -> bool {
        self.0.len() > other.0.len() && self.0.starts_with(&other.0)
    }
}

impl fmt::Display for NodePath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("root");
        }
        for (k, s) in self.0.iter().enumerate() {
            if k > 0 {
                f.write_str(".")?;
            }
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

impl Workflow {
    fn node(kind: Kind) -> Self {
        Workflow { kind, label: None }
    }

    pub fn atom(name: impl Into<String>) -> Self {
        Self::node(Kind::Atomic { name: name.into(), occ: OccurrenceId::default() })
    }

    pub fn seq(a: Workflow, b: Workflow) -> Self {
        Self::node(Kind::Seq(Box::new(a), Box::new(b)))
    }

    pub fn conj(a: Workflow, b: Workflow) -> Self {
        Self::node(Kind::Conj(Box::new(a), Box::new(b)))
    }

    pub fn disj(a: Workflow, b: Workflow) -> Self {
        Self::node(Kind::Disj(Box::new(a), Box::new(b)))
    }

    pub fn repeat(body: Workflow) -> Self {
        Self::node(Kind::Loop(Box::new(body)))
    }

    /// Left-nested sequence of the given items. Panics on an empty list.
    pub fn seq_all(items: impl IntoIterator<Item = Workflow>) -> Self {
        let mut it = items.into_iter();
        let first = it.next().expect("sequence needs at least one item");
        it.fold(first, Workflow::seq)
    }

    /// Right-nested conjunction of the given items. Panics on an empty list.
    pub fn conj_all(items: impl IntoIterator<Item = Workflow>) -> Self {
        right_nest(items.into_iter().collect(), Workflow::conj)
    }

    /// Right-nested disjunction of the given items. Panics on an empty list.
    pub fn disj_all(items: impl IntoIterator<Item = Workflow>) -> Self {
        right_nest(items.into_iter().collect(), Workflow::disj)
    }

    pub fn labeled(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    pub fn atom_name(&self) -> Option<&str> {
        match &self.kind {
            Kind::Atomic { name, .. } => Some(name),
            _ => None,
        }
    }

    pub fn occurrence(&self) -> Option<OccurrenceId> {
        match &self.kind {
            Kind::Atomic { occ, .. } => Some(*occ),
            _ => None,
        }
    }

    pub fn is_atomic(&self) -> bool {
        matches!(self.kind, Kind::Atomic { .. })
    }

    pub fn children(&self) -> Vec<&Workflow> {
        match &self.kind {
            Kind::Atomic { .. } => vec![],
            Kind::Seq(a, b) | Kind::Conj(a, b) | Kind::Disj(a, b) => vec![a, b],
            Kind::Loop(b) => vec![b],
        }
    }

    fn children_mut(&mut self) -> Vec<&mut Workflow> {
        match &mut self.kind {
            Kind::Atomic { .. } => vec![],
            Kind::Seq(a, b) | Kind::Conj(a, b) | Kind::Disj(a, b) => vec![a, b],
            Kind::Loop(b) => vec![b],
        }
    }

    /// Every node with its path, in pre-order.
    pub fn nodes(&self) -> Vec<(NodePath, &Workflow)> {
        let mut out = Vec::new();
        collect_nodes(self, NodePath::root(), &mut out);
        out
    }

    pub fn get(&self, path: &NodePath) -> Option<&Workflow> {
        let mut cur = self;
        for &step in &path.0 {
            cur = *cur.children().get(step as usize)?;
        }
        Some(cur)
    }

    pub fn get_mut(&mut self, path: &NodePath) -> Option<&mut Workflow> {
        let mut cur = self;
        for &step in &path.0 {
            cur = cur.children_mut().into_iter().nth(step as usize)?;
        }
        Some(cur)
    }

    /// Atomic leaves, left to right.
    pub fn atoms(&self) -> Vec<&Workflow> {
        let mut out = Vec::new();
        collect_atoms(self, &mut out);
        out
    }

    pub fn atom_count(&self) -> usize {
        self.atoms().len()
    }

    pub fn depth(&self) -> usize {
        1 + self.children().iter().map(|c| c.depth()).max().unwrap_or(0)
    }

    pub fn count_nodes(&self, pred: impl Fn(&Kind) -> bool + Copy) -> usize {
        self.nodes().into_iter().filter(|(_, n)| pred(&n.kind)).count()
    }

    /// Largest number of atoms any resolution executes when loops run at
    /// most `bound` times.
    pub fn max_resolved_atoms(&self, bound: u32) -> usize {
        match &self.kind {
            Kind::Atomic { .. } => 1,
            Kind::Seq(a, b) | Kind::Conj(a, b) => a.max_resolved_atoms(bound) + b.max_resolved_atoms(bound),
            Kind::Disj(a, b) => a.max_resolved_atoms(bound).max(b.max_resolved_atoms(bound)),
            Kind::Loop(b) => bound as usize * b.max_resolved_atoms(bound),
        }
    }

    pub fn find_label(&self, label: &str) -> Option<(NodePath, &Workflow)> {
        self.nodes().into_iter().find(|(_, n)| n.label() == Some(label))
    }
}

fn right_nest(mut items: Vec<Workflow>, mk: fn(Workflow, Workflow) -> Workflow) -> Workflow {
    let mut acc = items.pop().expect("at least one item");
    while let Some(prev) = items.pop() {
        acc = mk(prev, acc);
    }
    acc
}

fn collect_nodes<'a>(w: &'a Workflow, path: NodePath, out: &mut Vec<(NodePath, &'a Workflow)>) {
    out.push((path.clone(), w));
    for (i, c) in w.children().into_iter().enumerate() {
        collect_nodes(c, path.child(i as u8), out);
    }
}

fn collect_atoms<'a>(w: &'a Workflow, out: &mut Vec<&'a Workflow>) {
    match &w.kind {
        Kind::Atomic { .. } => out.push(w),
        _ => w.children().into_iter().for_each(|c| collect_atoms(c, out)),
    }
}

/// Gives every atomic occurrence a distinct id, numbered 1, 2, … left to right.
pub fn rename_occurrences(w: &Workflow) -> Workflow {
    let mut out = w.clone();
    let mut next = 1;
    renumber(&mut out, &mut next);
    out
}

fn renumber(w: &mut Workflow, next: &mut u32) {
    if let Kind::Atomic { occ, .. } = &mut w.kind {
        *occ = OccurrenceId(*next);
        *next += 1;
        return;
    }
    for c in w.children_mut() {
        renumber(c, next);
    }
}

/// All subworkflows of `w`, including `w` itself, in pre-order.
pub fn subworkflows(w: &Workflow) -> Vec<&Workflow> {
    w.nodes().into_iter().map(|(_, n)| n).collect()
}

/// All subworkflows of `w` except `w` itself.
pub fn proper_subworkflows(w: &Workflow) -> Vec<&Workflow> {
    w.children().into_iter().flat_map(subworkflows).collect()
}

/// `w` iterated `n` times in sequence: `((w -> w) -> w) …`, each copy with
/// its own occurrence ids.
pub fn unroll(w: &Workflow, n: u32) -> Result<Workflow, WorkflowError> {
    if n == 0 {
        return Err(WorkflowError::ZeroUnroll);
    }
    let chain = Workflow::seq_all((0..n).map(|_| w.clone()));
    Ok(rename_occurrences(&chain))
}

/// Replaces the node at `at` by `replacement` and refreshes occurrence ids.
pub fn substitute(w: &Workflow, at: &NodePath, replacement: Workflow) -> Result<Workflow, WorkflowError> {
    let mut out = w.clone();
    let slot = out.get_mut(at).ok_or_else(|| WorkflowError::InvalidPath(at.clone()))?;
    *slot = replacement;
    Ok(rename_occurrences(&out))
}

/// True when `name` can be written without quotes in the textual syntax.
pub fn is_bare_identifier(name: &str) -> bool {
    const RESERVED: [&str; 5] = ["and", "or", "loop", "workflow", "constraints"];
    let mut chars = name.chars();
    let Some(first) = chars.next() else { return false };
    (first.is_alphabetic() || first == '_')
        && chars.all(|c| c.is_alphanumeric() || c == '_')
        && !RESERVED.contains(&name)
}

pub fn quote_name(name: &str) -> String {
    if is_bare_identifier(name) {
        name.to_string()
    } else {
        let escaped = name.replace('\\', "\\\\").replace('\'', "\\'");
        format!("'{escaped}'")
    }
}

/// Prints the workflow in the `.twf` expression syntax. Right-nested chains
/// of conjunctions and disjunctions print flat, so printing then parsing
/// reproduces the same tree.
impl fmt::Display for Workflow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(l) = &self.label {
            write!(f, "{}: ", quote_name(l))?;
        }
        match &self.kind {
            Kind::Atomic { name, .. } => f.write_str(&quote_name(name)),
            Kind::Seq(a, b) => {
                if self.label.is_some() {
                    f.write_str("(")?;
                }
                write_seq_operand(f, a, false)?;
                f.write_str(" -> ")?;
                write_seq_operand(f, b, true)?;
                if self.label.is_some() {
                    f.write_str(")")?;
                }
                Ok(())
            }
            Kind::Conj(..) => write_flat(f, self, "and{", "; "),
            Kind::Disj(..) => write_flat(f, self, "or{", " | "),
            Kind::Loop(b) => write!(f, "loop{{{b}}}"),
        }
    }
}

fn write_seq_operand(f: &mut fmt::Formatter<'_>, w: &Workflow, right: bool) -> fmt::Result {
    if right && w.label.is_none() && matches!(w.kind, Kind::Seq(..)) {
        write!(f, "({w})")
    } else {
        write!(f, "{w}")
    }
}

fn write_flat(f: &mut fmt::Formatter<'_>, w: &Workflow, open: &str, sep: &str) -> fmt::Result {
    f.write_str(open)?;
    let mut cur = w;
    let same = |a: &Kind, b: &Kind| std::mem::discriminant(a) == std::mem::discriminant(b);
    loop {
        let (l, r) = match &cur.kind {
            Kind::Conj(l, r) | Kind::Disj(l, r) => (l, r),
            _ => unreachable!(),
        };
        write!(f, "{l}{sep}")?;
        if r.label.is_none() && same(&r.kind, &w.kind) {
            cur = r;
        } else {
            write!(f, "{r}}}")?;
            return Ok(());
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a(n: &str) -> Workflow {
        Workflow::atom(n)
    }

    fn occs(w: &Workflow) -> Vec<u32> {
        w.atoms().iter().map(|x| x.occurrence().unwrap().0).collect()
    }

    #[test]
    fn subworkflows_of_atom_is_singleton() {
        let w = rename_occurrences(&a("α"));
        assert_eq!(subworkflows(&w), vec![&w]);
        assert!(proper_subworkflows(&w).is_empty());
    }

    #[test]
    fn subworkflows_of_sequence() {
        let w = rename_occurrences(&Workflow::seq(a("α"), a("β")));
        let s = subworkflows(&w);
        assert_eq!(s.len(), 3);
        assert!(s.contains(&&w));
        let names: Vec<_> = s.iter().filter_map(|x| x.atom_name()).collect();
        assert_eq!(names, vec!["α", "β"]);
        assert_eq!(proper_subworkflows(&w).len(), 2);
    }

    #[test]
    fn repeated_atom_occurrences_are_distinct_subworkflows() {
        // (α -> β) -> α has the two α occurrences as different members of S.
        let w = rename_occurrences(&Workflow::seq(Workflow::seq(a("α"), a("β")), a("α")));
        let s = subworkflows(&w);
        assert_eq!(s.len(), 5);
        let alphas: Vec<_> = s.iter().filter(|x| x.atom_name() == Some("α")).collect();
        assert_eq!(alphas.len(), 2);
        assert_ne!(alphas[0], alphas[1]);
    }

    #[test]
    fn rename_gives_distinct_ids() {
        let w = rename_occurrences(&Workflow::seq(a("α"), a("α")));
        assert_eq!(occs(&w), vec![1, 2]);
        let single = rename_occurrences(&a("α"));
        assert_eq!(occs(&single), vec![1]);
        let nested = rename_occurrences(&Workflow::conj(a("α"), Workflow::seq(a("α"), a("α"))));
        assert_eq!(occs(&nested), vec![1, 2, 3]);
    }

    #[test]
    fn unroll_shapes() {
        assert_eq!(unroll(&a("α"), 1).unwrap(), rename_occurrences(&a("α")));
        let two = unroll(&a("α"), 2).unwrap();
        assert_eq!(two, rename_occurrences(&Workflow::seq(a("α"), a("α"))));
        assert_eq!(occs(&two), vec![1, 2]);
        let three = unroll(&a("α"), 3).unwrap();
        assert_eq!(three, rename_occurrences(&Workflow::seq(Workflow::seq(a("α"), a("α")), a("α"))));
        assert_eq!(unroll(&a("α"), 0), Err(WorkflowError::ZeroUnroll));
    }

    #[test]
    fn substitute_examples() {
        let w = Workflow::seq(a("α"), a("β"));
        let out = substitute(&w, &NodePath(vec![0]), a("γ")).unwrap();
        assert_eq!(out, rename_occurrences(&Workflow::seq(a("γ"), a("β"))));

        let l = Workflow::repeat(a("α"));
        let out = substitute(&l, &NodePath(vec![0]), Workflow::seq(a("α"), a("α"))).unwrap();
        assert_eq!(out, rename_occurrences(&Workflow::repeat(Workflow::seq(a("α"), a("α")))));
        assert_eq!(occs(&out), vec![1, 2]);

        let out = substitute(&w, &NodePath::root(), a("δ")).unwrap();
        assert_eq!(out, rename_occurrences(&a("δ")));

        assert!(matches!(
            substitute(&w, &NodePath(vec![0, 0]), a("δ")),
            Err(WorkflowError::InvalidPath(_))
        ));
    }

    #[test]
    fn display_round_trips_nesting() {
        let w = Workflow::seq(
            a("α"),
            Workflow::conj_all([a("b"), Workflow::disj(a("c"), a("d")), a("e")]),
        );
        assert_eq!(w.to_string(), "α -> and{b; or{c | d}; e}");
        let r = Workflow::seq(a("x"), Workflow::seq(a("y"), a("z")));
        assert_eq!(r.to_string(), "x -> (y -> z)");
        assert_eq!(a("frire le tournedos").to_string(), "'frire le tournedos'");
        assert_eq!(Workflow::repeat(a("and")).labeled("L").to_string(), "L: loop{'and'}");
    }
}
