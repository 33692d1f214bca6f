//! Brute-force model theory. Bounded models are enumerated straight from
//! the semantics: pick a resolution, then try every weak order of the
//! executed atoms' endpoints. Nothing here calls the constraint solver, so
//! the oracle can serve as ground truth for it.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::ControlFlow;

use thiserror::Error;

use crate::allen::{relation_between, BasicRelation, Rational, RationalInterval, RelationSet};
use crate::qcn::Qcn;
use crate::workflow::{resolutions, Kind, NodePath, OccurrenceId, Resolution, Resolved, Workflow, WorkflowError};

pub const DEFAULT_ATOM_BUDGET: usize = 7;

/// The map from constraint variables to the source nodes they denote.
pub type NodeMap = BTreeMap<String, NodePath>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("no interval assigned to atom occurrence {0}")]
    MissingAssignment(OccurrenceId),
    #[error("variable `{0}` is not mapped to any subworkflow")]
    UnmappedVariable(String),
    #[error("a resolution executes {atoms} atoms, above the budget of {budget}")]
    BudgetExceeded { atoms: usize, budget: usize },
    #[error("node {0} is not executed under this model")]
    NotExecuted(NodePath),
    #[error(transparent)]
    Workflow(#[from] WorkflowError),
}

/// Smallest interval containing every member of `parts`.
pub fn hull(parts: &[RationalInterval]) -> Option<RationalInterval> {
    let lo = parts.iter().map(RationalInterval::lo).min()?;
    let hi = parts.iter().map(RationalInterval::hi).max()?;
    RationalInterval::new(lo, hi).ok()
}

pub type Assignment = BTreeMap<OccurrenceId, RationalInterval>;

/// A bounded model: one resolution plus a time interval for every executed
/// atom occurrence of the resolved workflow.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Model {
    pub resolved: Resolved,
    pub assignment: Assignment,
}

impl Model {
    pub fn resolution(&self) -> &Resolution {
        &self.resolved.resolution
    }

    /// Atom executions in left-to-right order.
    pub fn executions(&self) -> Vec<(String, OccurrenceId, RationalInterval)> {
        self.resolved
            .workflow
            .atoms()
            .into_iter()
            .filter_map(|a| {
                let occ = a.occurrence()?;
                Some((a.atom_name()?.to_string(), occ, *self.assignment.get(&occ)?))
            })
            .collect()
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (name, occ, iv) in self.executions() {
            writeln!(f, "{}{} = {}", crate::workflow::quote_name(&name), occ, iv)?;
        }
        Ok(())
    }
}

/// Θ of a node of the resolved workflow: the intervals of the atoms beneath it.
pub fn theta(model: &Model, resolved_path: &NodePath) -> Result<Vec<RationalInterval>, OracleError> {
    let node = model
        .resolved
        .workflow
        .get(resolved_path)
        .ok_or_else(|| OracleError::NotExecuted(resolved_path.clone()))?;
    leaf_intervals(node, &model.assignment)
}

/// Loop iteration indices of one executed instance, with its atoms' intervals.
pub type ThetaRun = (Vec<u32>, Vec<RationalInterval>);

/// Θ of every executed instance of a source node, keyed by the iteration
/// indices of its enclosing loops.
pub fn theta_of_source(model: &Model, source_path: &NodePath) -> Result<Vec<ThetaRun>, OracleError> {
    let out: Vec<_> = model
        .resolved
        .anchors_of(source_path)
        .map(|a| Ok((a.iterations.clone(), theta(model, &a.resolved)?)))
        .collect::<Result<_, OracleError>>()?;
    if out.is_empty() {
        return Err(OracleError::NotExecuted(source_path.clone()));
    }
    Ok(out)
}

fn leaf_intervals(w: &Workflow, asg: &Assignment) -> Result<Vec<RationalInterval>, OracleError> {
    let mut out = Vec::new();
    for a in w.atoms() {
        let occ = a.occurrence().expect("atoms carry occurrences");
        out.push(*asg.get(&occ).ok_or(OracleError::MissingAssignment(occ))?);
    }
    Ok(out)
}

/// Number of loops that strictly enclose both nodes.
fn shared_loops(source: &Workflow, a: &NodePath, b: &NodePath) -> usize {
    let common = a.0.iter().zip(&b.0).take_while(|(x, y)| x == y).count();
    // A strict ancestor of both is a shared prefix shorter than either path.
    (0..=common)
        .filter(|&len| len < a.0.len() && len < b.0.len())
        .filter(|&len| matches!(source.get(&NodePath(a.0[..len].to_vec())).map(|w| &w.kind), Some(Kind::Loop(_))))
        .count()
}

/// One constraint instance on the resolved tree: both endpoints executed,
/// paired within the same iteration of every loop they share.
#[derive(Debug, Clone)]
struct Instance {
    left: NodePath,
    right: NodePath,
    rel: RelationSet,
}

fn instances(source: &Workflow, resolved: &Resolved, net: &Qcn, r: &NodeMap) -> Result<Vec<Instance>, OracleError> {
    let vars = net.variables();
    let path_of = |v: &String| r.get(v).ok_or_else(|| OracleError::UnmappedVariable(v.clone()));
    let mut out = Vec::new();
    for (i, j, rel) in net.constraints() {
        let (pi, pj) = (path_of(&vars[i])?, path_of(&vars[j])?);
        let depth = shared_loops(source, pi, pj);
        for ai in resolved.anchors_of(pi) {
            for aj in resolved.anchors_of(pj) {
                if ai.iterations[..depth] == aj.iterations[..depth] {
                    out.push(Instance { left: ai.resolved.clone(), right: aj.resolved.clone(), rel });
                }
            }
        }
    }
    Ok(out)
}

fn seq_holds(left: &[RationalInterval], right: &[RationalInterval]) -> bool {
    let max_left = left.iter().map(RationalInterval::hi).max();
    let min_right = right.iter().map(RationalInterval::lo).min();
    match (max_left, min_right) {
        (Some(a), Some(b)) => a <= b,
        _ => false,
    }
}

fn rel_holds(left: &[RationalInterval], right: &[RationalInterval], rel: RelationSet) -> bool {
    match (hull(left), hull(right)) {
        (Some(a), Some(b)) => rel.contains(relation_between(&a, &b)),
        _ => false,
    }
}

/// Checks one assignment against the semantics: every sequence node has its
/// left part finished before its right part starts, and every constraint whose
/// endpoints are both executed holds between their hulls. Constraints touching
/// a node that this resolution does not execute are vacuous.
pub fn check_model(
    source: &Workflow,
    resolved: &Resolved,
    assignment: &Assignment,
    net: &Qcn,
    r: &NodeMap,
) -> Result<bool, OracleError> {
    let w = &resolved.workflow;
    for (_, node) in w.nodes() {
        if let Kind::Seq(a, b) = &node.kind {
            if !seq_holds(&leaf_intervals(a, assignment)?, &leaf_intervals(b, assignment)?) {
                return Ok(false);
            }
        }
    }
    for inst in instances(source, resolved, net, r)? {
        let left = leaf_intervals(w.get(&inst.left).expect("anchor path"), assignment)?;
        let right = leaf_intervals(w.get(&inst.right).expect("anchor path"), assignment)?;
        if !rel_holds(&left, &right, inst.rel) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Enumerates every weak order of the endpoints of `m` intervals in which
/// each interval starts strictly before it ends, as integer-valued
/// intervals (coordinate = rank of the endpoint's tie class).
///
/// Endpoints are inserted in the order `lo₀, hi₀, lo₁, hi₁, …`; each insertion
/// joins an existing tie class or opens a new one in some gap, so every weak
/// order is produced exactly once. After interval `k` is placed the relative
/// order of intervals `0..=k` is final, and `partial_ok(k, ivs)` may prune.
pub fn for_each_weak_order(
    m: usize,
    partial_ok: &mut dyn FnMut(usize, &[RationalInterval]) -> bool,
    visit: &mut dyn FnMut(&[RationalInterval]) -> ControlFlow<()>,
) -> ControlFlow<()> {
    let mut pos = vec![0usize; 2 * m];
    place(0, 0, m, &mut pos, partial_ok, visit)
}

fn intervals(pos: &[usize], count: usize) -> Vec<RationalInterval> {
    (0..count)
        .map(|i| {
            RationalInterval::new(Rational::from_integer(pos[2 * i] as i64), Rational::from_integer(pos[2 * i + 1] as i64))
                .expect("hi is always placed after lo")
        })
        .collect()
}

fn place(
    e: usize,
    blocks: usize,
    m: usize,
    pos: &mut [usize],
    partial_ok: &mut dyn FnMut(usize, &[RationalInterval]) -> bool,
    visit: &mut dyn FnMut(&[RationalInterval]) -> ControlFlow<()>,
) -> ControlFlow<()> {
    if e == 2 * m {
        return visit(&intervals(pos, m));
    }
    let is_hi = e % 2 == 1;
    let floor = if is_hi { pos[e - 1] + 1 } else { 0 };
    let mut descend = |pos: &mut [usize], blocks: usize| -> ControlFlow<()> {
        if is_hi && !partial_ok(e / 2, &intervals(pos, e / 2 + 1)) {
            return ControlFlow::Continue(());
        }
        place(e + 1, blocks, m, pos, partial_ok, visit)
    };
    for b in floor..blocks {
        pos[e] = b;
        descend(pos, blocks)?;
    }
    for gap in floor..=blocks {
        for p in pos[..e].iter_mut() {
            if *p >= gap {
                *p += 1;
            }
        }
        pos[e] = gap;
        let flow = descend(pos, blocks + 1);
        for p in pos[..e].iter_mut() {
            if *p > gap {
                *p -= 1;
            }
        }
        flow?;
    }
    ControlFlow::Continue(())
}

pub fn count_weak_orders(m: usize) -> u64 {
    let mut n = 0;
    let _ = for_each_weak_order(m, &mut |_, _| true, &mut |_| {
        n += 1;
        ControlFlow::Continue(())
    });
    n
}

enum Check {
    Seq(Vec<usize>, Vec<usize>),
    Rel(Vec<usize>, Vec<usize>, RelationSet),
}

impl Check {
    fn holds(&self, ivs: &[RationalInterval]) -> bool {
        let pick = |idx: &[usize]| idx.iter().map(|&i| ivs[i]).collect::<Vec<_>>();
        match self {
            Check::Seq(a, b) => seq_holds(&pick(a), &pick(b)),
            Check::Rel(a, b, rel) => rel_holds(&pick(a), &pick(b), *rel),
        }
    }

    fn ready_at(&self) -> usize {
        let (Check::Seq(a, b) | Check::Rel(a, b, _)) = self;
        a.iter().chain(b).copied().max().unwrap_or(0)
    }
}

/// Atom indices (left-to-right) under the node at `path`.
fn atom_indices(w: &Workflow, path: &NodePath) -> Vec<usize> {
    let mut leaves = Vec::new();
    let mut idx = 0;
    for (p, node) in w.nodes() {
        if node.is_atomic() {
            if p == *path || p.is_strictly_below(path) {
                leaves.push(idx);
            }
            idx += 1;
        }
    }
    leaves
}

/// Searches for a model of `(source, net)` over every resolution with loop
/// counts up to `bound`. Resolutions with more than `budget` atoms are
/// skipped; if that happens and nothing else yields a model, the result is
/// `BudgetExceeded` rather than a negative answer.
pub fn find_model(source: &Workflow, net: &Qcn, r: &NodeMap, bound: u32, budget: usize) -> Result<Option<Model>, OracleError> {
    let mut skipped = None;
    for resolved in resolutions(source, bound)?.entries {
        let m = resolved.workflow.atom_count();
        if m > budget {
            skipped = Some(m);
            continue;
        }
        if let Some(model) = model_of_resolution(source, resolved, net, r)? {
            return Ok(Some(model));
        }
    }
    match skipped {
        Some(atoms) => Err(OracleError::BudgetExceeded { atoms, budget }),
        None => Ok(None),
    }
}

/// Every model of one resolution, up to the weak order of its endpoints.
pub fn models_of_resolution(source: &Workflow, resolved: &Resolved, net: &Qcn, r: &NodeMap) -> Result<Vec<Assignment>, OracleError> {
    let mut out = Vec::new();
    search_resolution(source, resolved, net, r, &mut |asg| {
        out.push(asg);
        ControlFlow::Continue(())
    })?;
    Ok(out)
}

fn model_of_resolution(source: &Workflow, resolved: Resolved, net: &Qcn, r: &NodeMap) -> Result<Option<Model>, OracleError> {
    let mut found = None;
    search_resolution(source, &resolved, net, r, &mut |asg| {
        found = Some(asg);
        ControlFlow::Break(())
    })?;
    let Some(assignment) = found else { return Ok(None) };
    assert!(check_model(source, &resolved, &assignment, net, r)?, "enumerated model fails re-verification");
    Ok(Some(Model { resolved, assignment }))
}

fn search_resolution(
    source: &Workflow,
    resolved: &Resolved,
    net: &Qcn,
    r: &NodeMap,
    visit: &mut dyn FnMut(Assignment) -> ControlFlow<()>,
) -> Result<(), OracleError> {
    let w = &resolved.workflow;
    let mut checks = Vec::new();
    for (path, node) in w.nodes() {
        if let Kind::Seq(..) = node.kind {
            checks.push(Check::Seq(atom_indices(w, &path.child(0)), atom_indices(w, &path.child(1))));
        }
    }
    for inst in instances(source, resolved, net, r)? {
        checks.push(Check::Rel(atom_indices(w, &inst.left), atom_indices(w, &inst.right), inst.rel));
    }
    let occs: Vec<OccurrenceId> = w.atoms().iter().map(|a| a.occurrence().expect("renamed")).collect();
    let _ = for_each_weak_order(
        occs.len(),
        &mut |k, ivs| checks.iter().filter(|c| c.ready_at() == k).all(|c| c.holds(ivs)),
        &mut |ivs| visit(occs.iter().copied().zip(ivs.iter().copied()).collect()),
    );
    Ok(())
}

/// Consistency by brute force: some weak order of the variables' endpoints
/// satisfies every constraint.
pub fn brute_force_consistent(net: &Qcn) -> bool {
    let mut found = false;
    brute_force_solutions(net, &mut |_| {
        found = true;
        ControlFlow::Break(())
    });
    found
}

/// For every pair, the basic relations that occur in at least one solution.
/// Only sound relations can be kept by path consistency, so every entry here
/// must survive it.
pub fn brute_force_minimal_network(net: &Qcn) -> Vec<Vec<RelationSet>> {
    let n = net.len();
    let mut seen = vec![vec![RelationSet::EMPTY; n]; n];
    brute_force_solutions(net, &mut |ivs| {
        for i in 0..n {
            for j in 0..n {
                seen[i][j] = seen[i][j].with(relation_between(&ivs[i], &ivs[j]));
            }
        }
        ControlFlow::Continue(())
    });
    seen
}

fn brute_force_solutions(net: &Qcn, visit: &mut dyn FnMut(&[RationalInterval]) -> ControlFlow<()>) {
    let n = net.len();
    if (0..n).any(|i| !net.get(i, i).contains(BasicRelation::Equals)) {
        return;
    }
    let _ = for_each_weak_order(
        n,
        &mut |k, ivs| (0..k).all(|i| net.get(i, k).contains(relation_between(&ivs[i], &ivs[k]))),
        visit,
    );
}

/// Bounded, name-preserving subsumption: every model of `w1` (resolutions
/// with at most `budget` atoms, loop counts up to `bound`) is, after mapping
/// each atom occurrence to a same-named occurrence of some resolution of `w2`,
/// a model of `w2`. Resolutions of `w2` are explored with a bound of at least
/// the atom count so that no loop is cut short on the right-hand side.
pub fn subsumes_bounded(w1: &Workflow, w2: &Workflow, bound: u32, budget: usize) -> Result<bool, OracleError> {
    let empty = Qcn::new();
    let none = NodeMap::new();
    let right_bound = bound.max(budget as u32);
    let right: Vec<Resolved> = resolutions(w2, right_bound)?
        .entries
        .into_iter()
        .filter(|r| r.workflow.atom_count() <= budget)
        .collect();
    for left in resolutions(w1, bound)?.entries {
        if left.workflow.atom_count() > budget {
            continue;
        }
        let names = sorted_names(&left.workflow);
        let candidates: Vec<&Resolved> = right.iter().filter(|r| sorted_names(&r.workflow) == names).collect();
        for asg in models_of_resolution(w1, &left, &empty, &none)? {
            let mut matched = false;
            'cands: for cand in &candidates {
                for mapped in renamings(&left.workflow, &cand.workflow, &asg) {
                    if check_model(w2, cand, &mapped, &empty, &none)? {
                        matched = true;
                        break 'cands;
                    }
                }
            }
            if !matched {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

pub fn equivalent_bounded(w1: &Workflow, w2: &Workflow, bound: u32, budget: usize) -> Result<bool, OracleError> {
    Ok(subsumes_bounded(w1, w2, bound, budget)? && subsumes_bounded(w2, w1, bound, budget)?)
}

fn sorted_names(w: &Workflow) -> Vec<String> {
    let mut v: Vec<String> = w.atoms().iter().filter_map(|a| a.atom_name().map(str::to_string)).collect();
    v.sort();
    v
}

/// Every transfer of `asg` (over `from`'s occurrences) onto `to`'s
/// occurrences that maps each occurrence to one with the same name.
fn renamings(from: &Workflow, to: &Workflow, asg: &Assignment) -> Vec<Assignment> {
    let mut groups: BTreeMap<&str, (Vec<OccurrenceId>, Vec<OccurrenceId>)> = BTreeMap::new();
    for a in from.atoms() {
        groups.entry(a.atom_name().unwrap()).or_default().0.push(a.occurrence().unwrap());
    }
    for a in to.atoms() {
        groups.entry(a.atom_name().unwrap()).or_default().1.push(a.occurrence().unwrap());
    }
    let mut out = vec![Assignment::new()];
    for (src, dst) in groups.values() {
        let mut next = Vec::new();
        for perm in permutations(dst.len()) {
            for base in &out {
                let mut m = base.clone();
                for (k, &p) in perm.iter().enumerate() {
                    m.insert(dst[p], asg[&src[k]]);
                }
                next.push(m);
            }
        }
        out = next;
    }
    out
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for slot in 0..=p.len() {
            let mut q = p.clone();
            q.insert(slot, n - 1);
            out.push(q);
        }
    }
    out
}
