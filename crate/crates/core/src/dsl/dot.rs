use std::collections::BTreeMap;
use std::fmt::Write;

use crate::extended::ExtendedWorkflow;
use crate::workflow::normal::{flat_items_at, Op};
use crate::workflow::{Kind, NodePath, Workflow};

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

struct Anchor {
    entry: String,
    exit: String,
    cluster: Option<String>,
}

struct Emitter {
    out: String,
    depth: usize,
    next: usize,
    anchors: BTreeMap<NodePath, Anchor>,
}

impl Emitter {
    fn line(&mut self, s: &str) {
        for _ in 0..self.depth {
            self.out.push_str("  ");
        }
        self.out.push_str(s);
        self.out.push('\n');
    }

    fn fresh(&mut self) -> usize {
        self.next += 1;
        self.next
    }

    fn edge(&mut self, from: &str, to: &str) {
        self.line(&format!("{from} -> {to};"));
    }

    fn pair(&mut self, prefix_in: &str, prefix_out: &str, attrs: &str) -> (String, String) {
        let k = self.fresh();
        let (a, b) = (format!("{prefix_in}{k}"), format!("{prefix_out}{k}"));
        self.line(&format!("{a} [{attrs}];"));
        self.line(&format!("{b} [{attrs}];"));
        (a, b)
    }

    /// Emits `w` (rooted at `path`) and returns its entry and exit node ids.
    fn emit(&mut self, w: &Workflow, path: NodePath) -> (String, String) {
        let cluster = match (&w.kind, w.label()) {
            (Kind::Atomic { .. }, _) | (_, None) => None,
            (_, Some(label)) => {
                let id = format!("cluster_{}", self.fresh());
                self.line(&format!("subgraph {id} {{"));
                self.depth += 1;
                self.line(&format!("label=\"{}\";", escape(label)));
                self.line("style=dashed;");
                Some(id)
            }
        };
        let (entry, exit) = match &w.kind {
            Kind::Atomic { name, .. } => {
                let id = format!("act_{}", self.fresh());
                let text = match w.label() {
                    Some(l) => format!("{l}: {name}"),
                    None => name.clone(),
                };
                self.line(&format!("{id} [shape=box, style=rounded, label=\"{}\"];", escape(&text)));
                (id.clone(), id)
            }
            Kind::Seq(..) => {
                let parts = self.items(w, Op::Seq, &path);
                for pair in parts.windows(2) {
                    self.edge(&pair[0].1, &pair[1].0);
                }
                (parts[0].0.clone(), parts[parts.len() - 1].1.clone())
            }
            Kind::Conj(..) => {
                let bar = "shape=box, style=filled, fillcolor=black, label=\"\", width=0.08, height=0.5";
                let (fork, join) = self.pair("fork_", "join_", bar);
                self.branches(w, Op::Conj, &path, &fork, &join);
                (fork, join)
            }
            Kind::Disj(..) => {
                let (choice, merge) = self.pair("choice_", "merge_", "shape=diamond, label=\"\", width=0.3, height=0.3");
                self.branches(w, Op::Disj, &path, &choice, &merge);
                (choice, merge)
            }
            Kind::Loop(body) => {
                let (head, tail) = self.pair("loop_in_", "loop_out_", "shape=diamond, label=\"\", width=0.3, height=0.3");
                let (e, x) = self.emit(body, path.child(0));
                self.edge(&head, &e);
                self.edge(&x, &tail);
                self.line(&format!("{tail} -> {head} [label=\"repeat\"];"));
                (head, tail)
            }
        };
        if cluster.is_some() {
            self.depth -= 1;
            self.line("}");
        }
        self.anchors.insert(path, Anchor { entry: entry.clone(), exit: exit.clone(), cluster });
        (entry, exit)
    }

    /// Emits the operands of a flattened n-ary node.
    fn items(&mut self, w: &Workflow, op: Op, path: &NodePath) -> Vec<(String, String)> {
        flat_items_at(w, op, path.clone()).into_iter().map(|(p, n)| self.emit(n, p)).collect()
    }

    fn branches(&mut self, w: &Workflow, op: Op, path: &NodePath, split: &str, merge: &str) {
        for (e, x) in self.items(w, op, path) {
            self.edge(split, &e);
            self.edge(&x, merge);
        }
    }
}

/// Graphviz rendering in the style of an activity diagram: rounded boxes for
/// activities, black bars for fork/join, diamonds for choice/merge and for
/// loop entry/exit, dashed clusters for labeled composites, and dashed
/// labeled edges for constraints.
pub fn export_dot(name: &str, ew: &ExtendedWorkflow) -> String {
    let mut em = Emitter { out: String::new(), depth: 1, next: 0, anchors: BTreeMap::new() };
    let _ = writeln!(em.out, "digraph \"{}\" {{", escape(name));
    em.line("rankdir=LR;");
    em.line("compound=true;");
    em.line("node [fontname=\"Helvetica\"];");
    em.line("start [shape=circle, style=filled, fillcolor=black, label=\"\", width=0.2];");
    em.line("end [shape=doublecircle, style=filled, fillcolor=black, label=\"\", width=0.15];");
    let (entry, exit) = em.emit(&ew.workflow, NodePath::root());
    em.edge("start", &entry);
    em.edge(&exit, "end");
    let vars = ew.network.variables();
    for (i, j, r) in ew.network.constraints() {
        let (Some(pi), Some(pj)) = (ew.r_map.get(&vars[i]), ew.r_map.get(&vars[j])) else { continue };
        let (a, b) = (&em.anchors[pi], &em.anchors[pj]);
        let mut attrs = format!("style=dashed, color=gray40, fontcolor=gray40, constraint=false, label=\"{}\"", r);
        if pi != pj {
            if let Some(c) = &a.cluster {
                let _ = write!(attrs, ", ltail={c}");
            }
            if let Some(c) = &b.cluster {
                let _ = write!(attrs, ", lhead={c}");
            }
        }
        let line = format!("{} -> {} [{attrs}];", a.exit, b.entry);
        em.line(&line);
    }
    em.out.push_str("}\n");
    em.out
}
