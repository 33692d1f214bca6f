//! Sound, incomplete subsumption between workflows.
//!
//! `w1 ⊑ w2` is established by a goal-directed search over the rewrite rules
//!
//! * the normal-form equivalences (see [`normalize`]),
//! * `φ ⊑ loop{φ}`,
//! * `loop{φ} -> φ ⊑ loop{φ}`,
//! * `φ -> χ ⊑ and{φ; χ}`,
//!
//! closed under substitution at any position. Each use of one of the three
//! subsumption rules costs one unit of budget; when the budget runs out the
//! answer is `Unknown`, never a claim of non-subsumption.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::normal::{flat_items, Op};
use super::{normalize, strip_labels, Kind, Shape, Workflow};

pub const DEFAULT_REWRITE_BUDGET: u32 = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SubsumptionVerdict {
    Holds,
    Unknown,
}

impl SubsumptionVerdict {
    pub fn holds(self) -> bool {
        self == SubsumptionVerdict::Holds
    }
}

pub fn subsumes_syntactic(w1: &Workflow, w2: &Workflow) -> SubsumptionVerdict {
    subsumes_with_budget(w1, w2, DEFAULT_REWRITE_BUDGET)
}

pub fn subsumes_with_budget(w1: &Workflow, w2: &Workflow, budget: u32) -> SubsumptionVerdict {
    let a = normalize(&strip_labels(w1));
    let b = normalize(&strip_labels(w2));
    if Search::default().sub(&a, &b, budget) {
        SubsumptionVerdict::Holds
    } else {
        SubsumptionVerdict::Unknown
    }
}

#[derive(Default)]
struct Search {
    memo: HashMap<(Shape, Shape, u32), bool>,
}

fn items(w: &Workflow, op: Op) -> Vec<Workflow> {
    flat_items(w, op).into_iter().cloned().collect()
}

fn pick(ws: &[Workflow], mask: u32) -> Vec<Workflow> {
    ws.iter().enumerate().filter(|(i, _)| mask & (1 << i) != 0).map(|(_, w)| w.clone()).collect()
}

/// Non-empty subsets of `mask`.
fn subsets(mask: u32) -> impl Iterator<Item = u32> {
    let mut sub = mask;
    let mut done = mask == 0;
    std::iter::from_fn(move || {
        if done {
            return None;
        }
        let cur = sub;
        if sub == 0 {
            done = true;
            return None;
        }
        sub = (sub - 1) & mask;
        Some(cur)
    })
}

impl Search {
    fn sub(&mut self, a: &Workflow, b: &Workflow, budget: u32) -> bool {
        let key = (a.shape(), b.shape(), budget);
        if key.0 == key.1 {
            return true;
        }
        if let Some(&r) = self.memo.get(&key) {
            return r;
        }
        let r = self.step(a, b, budget);
        self.memo.insert(key, r);
        r
    }

    fn step(&mut self, a: &Workflow, b: &Workflow, budget: u32) -> bool {
        if let Kind::Loop(body) = &b.kind {
            if budget > 0 && self.sub(a, body, budget - 1) {
                return true;
            }
            if let Kind::Loop(inner) = &a.kind {
                if self.sub(inner, b, budget) {
                    return true;
                }
            }
            if let (Kind::Seq(..), true) = (&a.kind, budget > 0) {
                if self.chain_into_loop(&items(a, Op::Seq), body, b, budget - 1) {
                    return true;
                }
            }
        }
        let branches = |w: &Workflow| match w.kind {
            Kind::Disj(..) => items(w, Op::Disj),
            _ => vec![w.clone()],
        };
        if matches!(a.kind, Kind::Disj(..)) || matches!(b.kind, Kind::Disj(..)) {
            return self.covers(&branches(a), &branches(b), budget);
        }
        if let Kind::Loop(_) = b.kind {
            return false;
        }
        match (&a.kind, &b.kind) {
            (Kind::Conj(..), Kind::Conj(..)) => {
                let (xs, ys) = (items(a, Op::Conj), items(b, Op::Conj));
                let full_x = (1u32 << xs.len()) - 1;
                let full_y = (1u32 << ys.len()) - 1;
                self.conj_groups(&xs, &ys, full_x, full_y, budget)
            }
            (Kind::Seq(..), Kind::Conj(..)) if budget > 0 => {
                let (xs, ys) = (items(a, Op::Seq), items(b, Op::Conj));
                let full_y = (1u32 << ys.len()) - 1;
                self.chain_groups(&xs, &ys, 0, full_y, budget - 1)
            }
            (Kind::Seq(..), Kind::Seq(..)) => {
                let (xs, ys) = (items(a, Op::Seq), items(b, Op::Seq));
                self.chain_segments(&xs, &ys, 0, 0, budget)
            }
            _ => false,
        }
    }

    /// Disjunction congruence, associativity and idempotence
    /// (`x ≡ or{x | x}`): every right branch is above the disjunction of a
    /// group of left branches, and the groups together cover the left side.
    fn covers(&mut self, xs: &[Workflow], ys: &[Workflow], budget: u32) -> bool {
        let full = (1u32 << xs.len()) - 1;
        // Groups beyond single branches only for small disjunctions, and never
        // the whole left side against a lone right branch (that is the query).
        let grouped = xs.len() <= 6;
        let mut options: Vec<Vec<u32>> = Vec::with_capacity(ys.len());
        for y in ys {
            let mut ok = Vec::new();
            for g in subsets(full) {
                if g.count_ones() > 1 && (!grouped || (g == full && ys.len() == 1)) {
                    continue;
                }
                let lhs = if g.count_ones() == 1 {
                    xs[g.trailing_zeros() as usize].clone()
                } else {
                    Workflow::disj_all(pick(xs, g))
                };
                if self.sub(&lhs, y, budget) {
                    ok.push(g);
                }
            }
            if ok.is_empty() {
                return false;
            }
            options.push(ok);
        }
        fn go(options: &[Vec<u32>], j: usize, hit: u32, full: u32) -> bool {
            if j == options.len() {
                return hit == full;
            }
            options[j].iter().any(|&g| go(options, j + 1, hit | g, full))
        }
        go(&options, 0, 0, full)
    }

    /// `x1 -> … -> xn ⊑ loop{body}`: split the chain into pieces that are each
    /// below `body` as a whole, or single items below `loop{body}`.
    fn chain_into_loop(&mut self, xs: &[Workflow], body: &Workflow, whole: &Workflow, budget: u32) -> bool {
        let n = xs.len();
        let mut reach = vec![false; n + 1];
        reach[0] = true;
        for j in 1..=n {
            for i in 0..j {
                if !reach[i] {
                    continue;
                }
                let ok = if j - i == 1 {
                    self.sub(&xs[i], whole, budget)
                } else if i == 0 && j == n {
                    false
                } else {
                    self.sub(&Workflow::seq_all(xs[i..j].to_vec()), body, budget)
                };
                if ok {
                    reach[j] = true;
                    break;
                }
            }
        }
        reach[n]
    }

    /// Pairs groups of conjuncts; in every pair at least one side is a single item.
    fn conj_groups(&mut self, xs: &[Workflow], ys: &[Workflow], xrem: u32, yrem: u32, budget: u32) -> bool {
        if xrem == 0 || yrem == 0 {
            return xrem == 0 && yrem == 0;
        }
        let i = xrem.trailing_zeros();
        let xi = 1u32 << i;
        for h in subsets(yrem) {
            let ok = if h.count_ones() == 1 {
                self.sub(&xs[i as usize], &ys[h.trailing_zeros() as usize], budget)
            } else {
                self.sub(&xs[i as usize], &Workflow::conj_all(pick(ys, h)), budget)
            };
            if ok && self.conj_groups(xs, ys, xrem & !xi, yrem & !h, budget) {
                return true;
            }
        }
        let others = xrem & !xi;
        for g in subsets(others) {
            let group = g | xi;
            let conj = Workflow::conj_all(pick(xs, group));
            for j in 0..ys.len() {
                let yj = 1u32 << j;
                if yrem & yj == 0 {
                    continue;
                }
                if self.sub(&conj, &ys[j], budget)
                    && self.conj_groups(xs, ys, xrem & !group, yrem & !yj, budget)
                {
                    return true;
                }
            }
        }
        false
    }

    /// `x1 -> … -> xn ⊑ and{y1; …; ym}`: consecutive pieces of the chain are
    /// paired with groups of conjuncts.
    fn chain_groups(&mut self, xs: &[Workflow], ys: &[Workflow], p: usize, yrem: u32, budget: u32) -> bool {
        if p == xs.len() || yrem == 0 {
            return p == xs.len() && yrem == 0;
        }
        for e in p + 1..=xs.len() {
            if e - p == 1 {
                for h in subsets(yrem) {
                    let ok = if h.count_ones() == 1 {
                        self.sub(&xs[p], &ys[h.trailing_zeros() as usize], budget)
                    } else {
                        self.sub(&xs[p], &Workflow::conj_all(pick(ys, h)), budget)
                    };
                    if ok && self.chain_groups(xs, ys, e, yrem & !h, budget) {
                        return true;
                    }
                }
            } else {
                let seg = Workflow::seq_all(xs[p..e].to_vec());
                for j in 0..ys.len() {
                    let yj = 1u32 << j;
                    if yrem & yj != 0
                        && self.sub(&seg, &ys[j], budget)
                        && self.chain_groups(xs, ys, e, yrem & !yj, budget)
                    {
                        return true;
                    }
                }
            }
        }
        false
    }

    /// Chain against chain: consecutive pieces paired in order, at least one
    /// side of every pair being a single item.
    fn chain_segments(&mut self, xs: &[Workflow], ys: &[Workflow], p: usize, q: usize, budget: u32) -> bool {
        let (n, m) = (xs.len(), ys.len());
        if p == n || q == m {
            return p == n && q == m;
        }
        for e in p + 1..=n {
            for f in q + 1..=m {
                let (lx, ly) = (e - p, f - q);
                if lx > 1 && ly > 1 {
                    continue;
                }
                let ok = match (lx, ly) {
                    (1, 1) => self.sub(&xs[p], &ys[q], budget),
                    (_, 1) => self.sub(&Workflow::seq_all(xs[p..e].to_vec()), &ys[q], budget),
                    _ => self.sub(&xs[p], &Workflow::seq_all(ys[q..f].to_vec()), budget),
                };
                if ok && self.chain_segments(xs, ys, e, f, budget) {
                    return true;
                }
            }
        }
        false
    }
}
