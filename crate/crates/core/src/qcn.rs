//! Qualitative constraint networks over Allen relations: path consistency,
//! backtracking scenario search, realization of atomic scenarios as
//! rational schedules, and entailment.

use std::collections::VecDeque;
use std::fmt;
use std::ops::ControlFlow;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::allen::{compose_sets, relation_between, BasicRelation, RationalInterval, RelationSet};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QcnError {
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("scenario admits no schedule: {0}")]
    Unrealizable(String),
    #[error("variables {0:?} of the entailed network are missing from the entailing one")]
    MissingVariables(Vec<String>),
}

/// A network `(V, C)`: interval variables and a full matrix of relation sets.
///
/// The matrix is kept converse-coherent (`C[j][i]` is always the inverse of
/// `C[i][j]`); unconstrained pairs hold the universal set and the diagonal
/// holds `{eq}` (or the empty set once a contradictory self-constraint is added).
#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Qcn {
    vars: Vec<String>,
    matrix: Vec<RelationSet>,
}

impl Default for Qcn {
    fn default() -> Self {
        Self::new()
    }
}

impl Qcn {
    pub fn new() -> Self {
        Qcn { vars: Vec::new(), matrix: Vec::new() }
    }

    pub fn with_variables<S: Into<String>>(names: impl IntoIterator<Item = S>) -> Self {
        let mut q = Self::new();
        for n in names {
            q.add_variable(n);
        }
        q
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn variables(&self) -> &[String] {
        &self.vars
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|v| v == name)
    }

    fn idx(&self, name: &str) -> Result<usize, QcnError> {
        self.index_of(name).ok_or_else(|| QcnError::UnknownVariable(name.to_string()))
    }

    /// Adds a variable (no-op if present) and returns its index.
    pub fn add_variable(&mut self, name: impl Into<String>) -> usize {
        let name = name.into();
        if let Some(i) = self.index_of(&name) {
            return i;
        }
        let n = self.vars.len();
        let mut m = vec![RelationSet::UNIVERSAL; (n + 1) * (n + 1)];
        for i in 0..n {
            for j in 0..n {
                m[i * (n + 1) + j] = self.matrix[i * n + j];
            }
        }
        m[n * (n + 1) + n] = RelationSet::EQ;
        self.matrix = m;
        self.vars.push(name);
        n
    }

    pub fn get(&self, i: usize, j: usize) -> RelationSet {
        self.matrix[i * self.vars.len() + j]
    }

    pub fn relation(&self, a: &str, b: &str) -> Result<RelationSet, QcnError> {
        Ok(self.get(self.idx(a)?, self.idx(b)?))
    }

    fn put(&mut self, i: usize, j: usize, r: RelationSet) {
        let n = self.vars.len();
        self.matrix[i * n + j] = r;
        self.matrix[j * n + i] = r.inverse();
    }

    /// Intersects `r` into `C[i][j]` (and its inverse into `C[j][i]`).
    /// On the diagonal only `eq` can survive.
    pub fn constrain(&mut self, i: usize, j: usize, r: RelationSet) {
        let cur = self.get(i, j);
        if i == j {
            let n = self.vars.len();
            self.matrix[i * n + i] = cur.intersection(r).intersection(RelationSet::EQ);
        } else {
            self.put(i, j, cur.intersection(r));
        }
    }

    pub fn set_constraint(&mut self, a: &str, b: &str, r: RelationSet) -> Result<(), QcnError> {
        let (i, j) = (self.idx(a)?, self.idx(b)?);
        self.constrain(i, j, r);
        Ok(())
    }

    /// Functional form of [`Qcn::set_constraint`].
    pub fn with_constraint(mut self, a: &str, b: &str, r: RelationSet) -> Result<Self, QcnError> {
        self.set_constraint(a, b, r)?;
        Ok(self)
    }

    /// Non-trivial constraints `(i, j, C[i][j])` with `i <= j`: every
    /// off-diagonal pair that is not universal, and every diagonal entry that
    /// is not `{eq}`.
    pub fn constraints(&self) -> Vec<(usize, usize, RelationSet)> {
        let n = self.vars.len();
        let mut out = Vec::new();
        for i in 0..n {
            for j in i..n {
                let r = self.get(i, j);
                let trivial = if i == j { r == RelationSet::EQ } else { r.is_universal() };
                if !trivial {
                    out.push((i, j, r));
                }
            }
        }
        out
    }

    pub fn has_empty_entry(&self) -> bool {
        self.matrix.iter().any(|r| r.is_empty())
    }

    pub fn is_atomic(&self) -> bool {
        self.matrix.iter().all(|r| r.len() == 1)
    }

    /// Same variables (in any order) and the same relation on every pair.
    pub fn same_constraints(&self, other: &Qcn) -> bool {
        self.len() == other.len() && other.restrict(&self.vars).is_ok_and(|r| r == *self)
    }

    /// The sub-network over the given variables, in the given order.
    pub fn restrict(&self, names: &[String]) -> Result<Qcn, QcnError> {
        let idx: Vec<usize> = names.iter().map(|n| self.idx(n)).collect::<Result<_, _>>()?;
        let mut out = Qcn::with_variables(names.iter().cloned());
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate() {
                let n = out.vars.len();
                out.matrix[a * n + b] = self.get(i, j);
            }
        }
        Ok(out)
    }
}

impl fmt::Debug for Qcn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Qcn {:?} [", self.vars)?;
        for (i, j, r) in self.constraints() {
            write!(f, " {}{}{}", self.vars[i], r, self.vars[j])?;
        }
        f.write_str(" ]")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PathConsistency {
    ConsistentSoFar,
    EmptyEntryFound,
}

/// Refines `C[i][j] ← C[i][j] ∩ (C[i][k] ∘ C[k][j])` over all triples until
/// nothing changes. Only relations that cannot take part in any solution are
/// removed.
pub fn path_consistency(net: &Qcn) -> (Qcn, PathConsistency) {
    let mut q = net.clone();
    let outcome = if propagate(&mut q, None) {
        PathConsistency::ConsistentSoFar
    } else {
        PathConsistency::EmptyEntryFound
    };
    (q, outcome)
}

/// In-place path consistency. When `touched` is given only that edge seeds
/// the queue (the rest of the network is assumed to be already closed).
fn propagate(q: &mut Qcn, touched: Option<(usize, usize)>) -> bool {
    let n = q.len();
    if (0..n).any(|i| q.get(i, i).is_empty()) {
        return false;
    }
    let mut queue: VecDeque<(usize, usize)> = VecDeque::new();
    let mut queued = vec![false; n * n];
    let push = |queue: &mut VecDeque<(usize, usize)>, queued: &mut Vec<bool>, i: usize, j: usize| {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        if !queued[a * n + b] {
            queued[a * n + b] = true;
            queue.push_back((a, b));
        }
    };
    match touched {
        Some((i, j)) => push(&mut queue, &mut queued, i, j),
        None => {
            for i in 0..n {
                for j in i + 1..n {
                    push(&mut queue, &mut queued, i, j);
                }
            }
        }
    }
    while let Some((i, j)) = queue.pop_front() {
        queued[i * n + j] = false;
        let cij = q.get(i, j);
        for k in 0..n {
            if k == i || k == j {
                continue;
            }
            // (i, k) through j.
            let cik = q.get(i, k);
            let refined = cik.intersection(compose_sets(cij, q.get(j, k)));
            if refined != cik {
                q.put(i, k, refined);
                if refined.is_empty() {
                    return false;
                }
                push(&mut queue, &mut queued, i, k);
            }
            // (k, j) through i.
            let ckj = q.get(k, j);
            let refined = ckj.intersection(compose_sets(q.get(k, i), cij));
            if refined != ckj {
                q.put(k, j, refined);
                if refined.is_empty() {
                    return false;
                }
                push(&mut queue, &mut queued, k, j);
            }
        }
    }
    !q.has_empty_entry()
}

/// A network in which every entry is a single basic relation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scenario(Qcn);

impl Scenario {
    pub fn new(q: Qcn) -> Option<Self> {
        q.is_atomic().then_some(Scenario(q))
    }

    pub fn network(&self) -> &Qcn {
        &self.0
    }

    pub fn relation(&self, i: usize, j: usize) -> BasicRelation {
        self.0.get(i, j).as_single().expect("scenario entries are singletons")
    }
}

/// A rational interval for every variable, in variable order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schedule {
    pub entries: Vec<(String, RationalInterval)>,
}

impl Schedule {
    pub fn get(&self, name: &str) -> Option<&RationalInterval> {
        self.entries.iter().find(|(n, _)| n == name).map(|(_, iv)| iv)
    }

    /// Checks every pair of `net` (matched by variable name) against the schedule.
    pub fn satisfies(&self, net: &Qcn) -> bool {
        let vars = net.variables();
        let ivs: Option<Vec<&RationalInterval>> = vars.iter().map(|v| self.get(v)).collect();
        let Some(ivs) = ivs else { return false };
        (0..vars.len()).all(|i| (0..vars.len()).all(|j| net.get(i, j).contains(relation_between(ivs[i], ivs[j]))))
    }
}

impl fmt::Display for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (name, iv) in &self.entries {
            writeln!(f, "{} = {}", crate::workflow::quote_name(name), iv)?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Cmp {
    Less,
    Equal,
}

/// Endpoint facts `(x, y, <|=)` for `i r j`, with endpoints numbered
/// `0 = i⁻, 1 = i⁺, 2 = j⁻, 3 = j⁺`.
fn endpoint_facts(r: BasicRelation) -> &'static [(usize, usize, Cmp)] {
    use BasicRelation::*;
    use Cmp::*;
    match r {
        Before => &[(1, 2, Less)],
        After => &[(3, 0, Less)],
        Meets => &[(1, 2, Equal)],
        MetBy => &[(3, 0, Equal)],
        Overlaps => &[(0, 2, Less), (2, 1, Less), (1, 3, Less)],
        OverlappedBy => &[(2, 0, Less), (0, 3, Less), (3, 1, Less)],
        Starts => &[(0, 2, Equal), (1, 3, Less)],
        StartedBy => &[(0, 2, Equal), (3, 1, Less)],
        During => &[(2, 0, Less), (1, 3, Less)],
        Contains => &[(0, 2, Less), (3, 1, Less)],
        Finishes => &[(2, 0, Less), (1, 3, Equal)],
        FinishedBy => &[(0, 2, Less), (1, 3, Equal)],
        Equals => &[(0, 2, Equal), (1, 3, Equal)],
    }
}

fn find(parent: &mut [usize], x: usize) -> usize {
    let mut root = x;
    while parent[root] != root {
        root = parent[root];
    }
    let mut cur = x;
    while parent[cur] != root {
        let next = parent[cur];
        parent[cur] = root;
        cur = next;
    }
    root
}

/// Builds a schedule for an atomic scenario: endpoints are merged by the
/// equalities, ordered by the strict facts, layered by longest path, and each
/// layer index becomes an integer coordinate. The result is re-checked
/// against every entry before it is returned.
pub fn realize_scenario(s: &Scenario) -> Result<Schedule, QcnError> {
    let q = s.network();
    let n = q.len();
    let points = 2 * n;
    let mut parent: Vec<usize> = (0..points).collect();
    let mut strict: Vec<(usize, usize)> = (0..n).map(|i| (2 * i, 2 * i + 1)).collect();
    for i in 0..n {
        for j in i + 1..n {
            let ends = [2 * i, 2 * i + 1, 2 * j, 2 * j + 1];
            for &(x, y, cmp) in endpoint_facts(s.relation(i, j)) {
                match cmp {
                    Cmp::Less => strict.push((ends[x], ends[y])),
                    Cmp::Equal => {
                        let (a, b) = (find(&mut parent, ends[x]), find(&mut parent, ends[y]));
                        parent[a] = b;
                    }
                }
            }
        }
    }
    let class: Vec<usize> = (0..points).map(|p| find(&mut parent, p)).collect();
    let mut succ: Vec<Vec<usize>> = vec![Vec::new(); points];
    let mut indeg = vec![0usize; points];
    for &(a, b) in &strict {
        let (ca, cb) = (class[a], class[b]);
        if ca == cb {
            return Err(QcnError::Unrealizable("an endpoint must precede itself".into()));
        }
        succ[ca].push(cb);
        indeg[cb] += 1;
    }
    let roots: Vec<usize> = (0..points).filter(|&p| class[p] == p).collect();
    let mut layer = vec![0i64; points];
    let mut ready: VecDeque<usize> = roots.iter().copied().filter(|&p| indeg[p] == 0).collect();
    let mut seen = 0;
    while let Some(p) = ready.pop_front() {
        seen += 1;
        for &s in &succ[p] {
            layer[s] = layer[s].max(layer[p] + 1);
            indeg[s] -= 1;
            if indeg[s] == 0 {
                ready.push_back(s);
            }
        }
    }
    if seen != roots.len() {
        return Err(QcnError::Unrealizable("endpoint order is cyclic".into()));
    }
    let entries = (0..n)
        .map(|i| {
            let iv = RationalInterval::from_integers(layer[class[2 * i]], layer[class[2 * i + 1]])
                .map_err(|e| QcnError::Unrealizable(e.to_string()))?;
            Ok((q.variables()[i].clone(), iv))
        })
        .collect::<Result<Vec<_>, QcnError>>()?;
    let schedule = Schedule { entries };
    if !schedule.satisfies(q) {
        return Err(QcnError::Unrealizable("layered endpoints violate a relation".into()));
    }
    Ok(schedule)
}

/// Backtracking over basic relations, most constrained edge first, with path
/// consistency after each choice. Every atomic leaf is realized before it is
/// reported, so `visit` only ever sees scenarios that have a schedule.
fn search<F>(mut q: Qcn, touched: Option<(usize, usize)>, visit: &mut F) -> ControlFlow<()>
where
    F: FnMut(Scenario, Schedule) -> ControlFlow<()>,
{
    if !propagate(&mut q, touched) {
        return ControlFlow::Continue(());
    }
    let n = q.len();
    let mut pick: Option<(usize, usize, usize)> = None;
    for i in 0..n {
        for j in i + 1..n {
            let size = q.get(i, j).len();
            if size > 1 && pick.is_none_or(|(_, _, best)| size < best) {
                pick = Some((i, j, size));
            }
        }
    }
    match pick {
        None => {
            let scenario = Scenario(q);
            match realize_scenario(&scenario) {
                Ok(schedule) => visit(scenario, schedule),
                Err(_) => ControlFlow::Continue(()),
            }
        }
        Some((i, j, _)) => {
            for r in q.get(i, j).iter() {
                let mut next = q.clone();
                next.put(i, j, RelationSet::single(r));
                search(next, Some((i, j)), visit)?;
            }
            ControlFlow::Continue(())
        }
    }
}

/// First realizable scenario found, with its schedule.
pub fn find_scenario(net: &Qcn) -> Option<(Scenario, Schedule)> {
    let mut found = None;
    let _ = search(net.clone(), None, &mut |s, sch| {
        found = Some((s, sch));
        ControlFlow::Break(())
    });
    found
}

pub fn is_consistent(net: &Qcn) -> bool {
    find_scenario(net).is_some()
}

/// Every realizable atomic scenario refining `net`.
pub fn scenarios(net: &Qcn) -> Vec<Scenario> {
    let mut out = Vec::new();
    let _ = search(net.clone(), None, &mut |s, _| {
        out.push(s);
        ControlFlow::Continue(())
    });
    out
}

/// `n1 ⊨ n2`: every solution of `n1` satisfies every constraint of `n2`.
///
/// Decided by refutation: for each constraint `(u, v, R)` of `n2`, `n1` with
/// `u (B \ R) v` added must be inconsistent. This is exactly the
/// scenario-by-scenario check, without listing scenarios one by one.
pub fn entails(n1: &Qcn, n2: &Qcn) -> Result<bool, QcnError> {
    let missing: Vec<String> =
        n2.variables().iter().filter(|v| n1.index_of(v).is_none()).cloned().collect();
    if !missing.is_empty() {
        return Err(QcnError::MissingVariables(missing));
    }
    for (a, b, r) in n2.constraints() {
        let (i, j) = (n1.idx(&n2.variables()[a])?, n1.idx(&n2.variables()[b])?);
        let mut probe = n1.clone();
        if i == j {
            if r.contains(BasicRelation::Equals) {
                continue;
            }
        } else {
            probe.constrain(i, j, r.complement());
        }
        if is_consistent(&probe) {
            return Ok(false);
        }
    }
    Ok(true)
}
