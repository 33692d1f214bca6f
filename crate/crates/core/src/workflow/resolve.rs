use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{rename_occurrences, Kind, NodePath, Workflow, WorkflowError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Branch {
    Left,
    Right,
}

/// One executed instance of an original node: its path in the source tree
/// plus the iteration index (1-based) of every enclosing loop, outermost first.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Site {
    pub path: NodePath,
    pub iterations: Vec<u32>,
}

/// Branch choices for every executed disjunction and an iteration count for
/// every executed loop.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Resolution {
    pub choices: BTreeMap<Site, Branch>,
    pub unrolls: BTreeMap<Site, u32>,
}

/// Links an executed source node to the subtree of the resolved workflow
/// that carries out that execution.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Anchor {
    pub node: NodePath,
    pub iterations: Vec<u32>,
    pub resolved: NodePath,
}

/// A loop-free, choice-free execution shape of a workflow.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Resolved {
    pub resolution: Resolution,
    pub workflow: Workflow,
    pub anchors: Vec<Anchor>,
}

impl Resolved {
    /// Anchors of one source node, one per executed instance.
    pub fn anchors_of<'a>(&'a self, node: &'a NodePath) -> impl Iterator<Item = &'a Anchor> + 'a {
        self.anchors.iter().filter(move |a| &a.node == node)
    }
}

#[derive(Debug, Clone)]
pub struct Resolutions {
    pub entries: Vec<Resolved>,
    /// Set when the workflow contains a loop, i.e. when iteration counts above
    /// the bound were not explored.
    pub bounded: bool,
}

struct Partial {
    workflow: Workflow,
    resolution: Resolution,
    anchors: Vec<Anchor>,
}

fn prefixed<'a>(anchors: &'a [Anchor], prefix: &[u8]) -> impl Iterator<Item = Anchor> + 'a {
    let prefix = prefix.to_vec();
    anchors.iter().map(move |a| {
        let mut steps = prefix.clone();
        steps.extend_from_slice(&a.resolved.0);
        Anchor { node: a.node.clone(), iterations: a.iterations.clone(), resolved: NodePath(steps) }
    })
}

fn merged(parts: &[&Partial]) -> Resolution {
    let mut r = Resolution::default();
    for p in parts {
        r.choices.extend(p.resolution.choices.iter().map(|(k, v)| (k.clone(), *v)));
        r.unrolls.extend(p.resolution.unrolls.iter().map(|(k, v)| (k.clone(), *v)));
    }
    r
}

fn resolve(w: &Workflow, path: &NodePath, iters: &[u32], bound: u32) -> Vec<Partial> {
    let self_anchor =
        Anchor { node: path.clone(), iterations: iters.to_vec(), resolved: NodePath::root() };
    let site = Site { path: path.clone(), iterations: iters.to_vec() };
    match &w.kind {
        Kind::Atomic { name, .. } => vec![Partial {
            workflow: Workflow::atom(name.clone()),
            resolution: Resolution::default(),
            anchors: vec![self_anchor],
        }],
        Kind::Seq(a, b) | Kind::Conj(a, b) => {
            let left = resolve(a, &path.child(0), iters, bound);
            let right = resolve(b, &path.child(1), iters, bound);
            let mut out = Vec::with_capacity(left.len() * right.len());
            for l in &left {
                for r in &right {
                    let workflow = match w.kind {
                        Kind::Seq(..) => Workflow::seq(l.workflow.clone(), r.workflow.clone()),
                        _ => Workflow::conj(l.workflow.clone(), r.workflow.clone()),
                    };
                    let mut anchors = vec![self_anchor.clone()];
                    anchors.extend(prefixed(&l.anchors, &[0]));
                    anchors.extend(prefixed(&r.anchors, &[1]));
                    out.push(Partial { workflow, resolution: merged(&[l, r]), anchors });
                }
            }
            out
        }
        Kind::Disj(a, b) => {
            let mut out = Vec::new();
            for (branch, child, idx) in [(Branch::Left, a, 0u8), (Branch::Right, b, 1u8)] {
                for p in resolve(child, &path.child(idx), iters, bound) {
                    let mut resolution = p.resolution;
                    resolution.choices.insert(site.clone(), branch);
                    let mut anchors = vec![self_anchor.clone()];
                    anchors.extend(p.anchors);
                    out.push(Partial { workflow: p.workflow, resolution, anchors });
                }
            }
            out
        }
        Kind::Loop(body) => {
            let mut out = Vec::new();
            for n in 1..=bound {
                let per_iteration: Vec<Vec<Partial>> = (1..=n)
                    .map(|i| {
                        let mut it = iters.to_vec();
                        it.push(i);
                        resolve(body, &path.child(0), &it, bound)
                    })
                    .collect();
                for combo in cartesian(&per_iteration) {
                    let workflow = Workflow::seq_all(combo.iter().map(|p| p.workflow.clone()));
                    let mut resolution = merged(&combo);
                    resolution.unrolls.insert(site.clone(), n);
                    let mut anchors = vec![self_anchor.clone()];
                    for (k, p) in combo.iter().enumerate() {
                        let i = k as u32 + 1;
                        // Copy i of a left-nested chain of n sits under n-i left
                        // steps, followed by one right step unless it is the first.
                        let prefix = if i == 1 {
                            vec![0u8; (n - 1) as usize]
                        } else {
                            let mut p = vec![0u8; (n - i) as usize];
                            p.push(1);
                            p
                        };
                        anchors.extend(prefixed(&p.anchors, &prefix));
                    }
                    out.push(Partial { workflow, resolution, anchors });
                }
            }
            out
        }
    }
}

fn cartesian(lists: &[Vec<Partial>]) -> Vec<Vec<&Partial>> {
    let mut acc: Vec<Vec<&Partial>> = vec![vec![]];
    for list in lists {
        let mut next = Vec::with_capacity(acc.len() * list.len());
        for prefix in &acc {
            for item in list {
                let mut v = prefix.clone();
                v.push(item);
                next.push(v);
            }
        }
        acc = next;
    }
    acc
}

/// Every combination of disjunction choices and loop counts in `1..=bound`,
/// each paired with its resolved workflow (fresh occurrence ids, no labels).
/// Choices inside a loop are made independently for every iteration.
pub fn resolutions(w: &Workflow, bound: u32) -> Result<Resolutions, WorkflowError> {
    if bound == 0 {
        return Err(WorkflowError::ZeroBound);
    }
    let bounded = w.count_nodes(|k| matches!(k, Kind::Loop(_))) > 0;
    let entries = resolve(w, &NodePath::root(), &[], bound)
        .into_iter()
        .map(|p| Resolved {
            resolution: p.resolution,
            workflow: rename_occurrences(&p.workflow),
            anchors: p.anchors,
        })
        .collect();
    Ok(Resolutions { entries, bounded })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a(n: &str) -> Workflow {
        Workflow::atom(n)
    }

    #[test]
    fn atom_has_single_resolution() {
        let rs = resolutions(&a("α"), 3).unwrap();
        assert_eq!(rs.entries.len(), 1);
        assert!(!rs.bounded);
        assert_eq!(rs.entries[0].workflow, rename_occurrences(&a("α")));
    }

    #[test]
    fn disjunction_yields_both_branches() {
        let rs = resolutions(&Workflow::disj(a("α"), a("β")), 3).unwrap();
        let shapes: Vec<_> = rs.entries.iter().map(|r| r.workflow.to_string()).collect();
        assert_eq!(shapes, vec!["α", "β"]);
        assert_eq!(rs.entries[0].resolution.choices.values().next(), Some(&Branch::Left));
    }

    #[test]
    fn loop_unrolls_up_to_bound() {
        let rs = resolutions(&Workflow::repeat(a("α")), 2).unwrap();
        assert!(rs.bounded);
        let shapes: Vec<_> = rs.entries.iter().map(|r| r.workflow.clone()).collect();
        assert_eq!(
            shapes,
            vec![rename_occurrences(&a("α")), rename_occurrences(&Workflow::seq(a("α"), a("α")))]
        );
        assert!(resolutions(&a("α"), 0).is_err());
    }

    #[test]
    fn choices_inside_loops_vary_per_iteration() {
        let w = Workflow::repeat(Workflow::disj(a("x"), a("y")));
        let rs = resolutions(&w, 2).unwrap();
        // n = 1: 2 shapes; n = 2: 4 shapes.
        assert_eq!(rs.entries.len(), 6);
        let last = &rs.entries[5];
        assert_eq!(last.workflow.to_string(), "y -> y");
        assert_eq!(last.resolution.choices.len(), 2);
    }

    #[test]
    fn anchors_point_at_executed_subtrees() {
        let w = Workflow::seq(a("α"), Workflow::repeat(Workflow::conj(a("β"), a("γ"))));
        let rs = resolutions(&w, 3).unwrap();
        for r in &rs.entries {
            for anchor in &r.anchors {
                let src = w.get(&anchor.node).unwrap();
                let dst = r.workflow.get(&anchor.resolved).unwrap();
                if let Some(name) = src.atom_name() {
                    assert_eq!(dst.atom_name(), Some(name));
                }
            }
        }
        let three = &rs.entries[2];
        let body_path = NodePath(vec![1, 0]);
        let body: Vec<_> = three.anchors_of(&body_path).collect();
        assert_eq!(body.len(), 3);
        assert_eq!(body.iter().map(|a| a.iterations.clone()).collect::<Vec<_>>(), vec![vec![1], vec![2], vec![3]]);
        let gamma_path = NodePath(vec![1, 0, 1]);
        let gammas: Vec<_> = three.anchors_of(&gamma_path).collect();
        for g in gammas {
            assert_eq!(three.workflow.get(&g.resolved).unwrap().atom_name(), Some("γ"));
        }
    }
}
