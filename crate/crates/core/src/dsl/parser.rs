use std::collections::BTreeMap;

use super::lexer::{tokenize, Tok, Token};
use super::{Diagnostic, Document, Span};
use crate::allen::{BasicRelation, RelationSet};
use crate::extended::{resolve_ref, validate, ExtendedWorkflow, RefError, Violation};
use crate::qcn::Qcn;
use crate::workflow::{Kind, NodePath, OccurrenceId, Workflow};

#[derive(Debug)]
enum Node {
    Atom(String),
    Seq(Box<Expr>, Box<Expr>),
    And(Vec<Expr>),
    Or(Vec<Expr>),
    Loop(Box<Expr>),
}

#[derive(Debug)]
struct Expr {
    node: Node,
    label: Option<(String, Span)>,
    span: Span,
}

struct Constraint {
    left: (String, Span),
    rel: RelationSet,
    right: (String, Span),
    span: Span,
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

type PResult<T> = Result<T, Diagnostic>;

fn join(a: Span, b: Span) -> Span {
    Span { len: (b.offset + b.len).saturating_sub(a.offset), ..a }
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    fn span(&self) -> Span {
        self.toks[self.pos].span
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn unexpected(&self, wanted: &str) -> Diagnostic {
        Diagnostic::at(self.span(), format!("expected {wanted}, found {}", self.peek().describe()))
    }

    fn expect(&mut self, tok: Tok) -> PResult<Span> {
        if *self.peek() == tok {
            Ok(self.bump().span)
        } else {
            Err(self.unexpected(&tok.describe()))
        }
    }

    fn keyword(&mut self, kw: &str) -> PResult<Span> {
        match self.peek() {
            Tok::Ident(s) if s == kw => Ok(self.bump().span),
            _ => Err(self.unexpected(&format!("`{kw}`"))),
        }
    }

    fn name(&mut self, what: &str) -> PResult<(String, Span)> {
        match self.peek().clone() {
            Tok::Ident(s) => Ok((s, self.bump().span)),
            Tok::Quoted(s) => Ok((s, self.bump().span)),
            _ => Err(self.unexpected(what)),
        }
    }

    fn document(&mut self) -> PResult<(String, Expr, Vec<Constraint>)> {
        self.keyword("workflow")?;
        let (name, _) = self.name("a workflow name")?;
        self.expect(Tok::Equals)?;
        let expr = self.expr()?;
        let mut cons = Vec::new();
        if matches!(self.peek(), Tok::Ident(s) if s == "constraints") {
            self.bump();
            self.expect(Tok::LBrace)?;
            while *self.peek() != Tok::RBrace {
                cons.push(self.constraint()?);
            }
            self.bump();
        }
        if *self.peek() != Tok::Eof {
            return Err(self.unexpected("`->`, `constraints` or end of input"));
        }
        Ok((name, expr, cons))
    }

    fn expr(&mut self) -> PResult<Expr> {
        let mut left = self.term()?;
        while *self.peek() == Tok::Arrow {
            self.bump();
            let right = self.term()?;
            let span = join(left.span, right.span);
            left = Expr { node: Node::Seq(Box::new(left), Box::new(right)), label: None, span };
        }
        Ok(left)
    }

    fn term(&mut self) -> PResult<Expr> {
        let is_label = matches!(self.peek(), Tok::Ident(_) | Tok::Quoted(_)) && *self.peek_at(1) == Tok::Colon;
        if !is_label {
            return self.primary();
        }
        let (label, lspan) = self.name("a label")?;
        self.bump();
        let mut inner = self.primary()?;
        if let Some((_, prev)) = &inner.label {
            return Err(Diagnostic::at(*prev, format!("node already labeled `{label}`; one label per node")));
        }
        inner.span = join(lspan, inner.span);
        inner.label = Some((label, lspan));
        Ok(inner)
    }

    fn primary(&mut self) -> PResult<Expr> {
        let start = self.span();
        match self.peek().clone() {
            Tok::LParen => {
                self.bump();
                let mut e = self.expr()?;
                let end = self.expect(Tok::RParen)?;
                e.span = join(start, end);
                Ok(e)
            }
            Tok::Quoted(name) => {
                self.bump();
                Ok(Expr { node: Node::Atom(name), label: None, span: start })
            }
            Tok::Ident(word) if matches!(word.as_str(), "and" | "or" | "loop") && *self.peek_at(1) == Tok::LBrace => {
                self.bump();
                self.bump();
                let node = match word.as_str() {
                    "loop" => Node::Loop(Box::new(self.expr()?)),
                    "and" => Node::And(self.operands(Tok::Semi, "and")?),
                    _ => Node::Or(self.operands(Tok::Pipe, "or")?),
                };
                let end = self.expect(Tok::RBrace)?;
                Ok(Expr { node, label: None, span: join(start, end) })
            }
            Tok::Ident(word) if matches!(word.as_str(), "and" | "or" | "loop" | "workflow" | "constraints") => {
                Err(Diagnostic::at(start, format!("`{word}` is reserved; quote it to use it as an activity name")))
            }
            Tok::Ident(name) => {
                self.bump();
                Ok(Expr { node: Node::Atom(name), label: None, span: start })
            }
            _ => Err(self.unexpected("an activity, `and{`, `or{`, `loop{` or `(`")),
        }
    }

    fn operands(&mut self, sep: Tok, kw: &str) -> PResult<Vec<Expr>> {
        let mut items = vec![self.expr()?];
        while *self.peek() == sep {
            self.bump();
            items.push(self.expr()?);
        }
        if items.len() < 2 {
            return Err(Diagnostic::at(
                self.span(),
                format!("`{kw}{{…}}` needs at least two operands separated by {}", sep.describe()),
            ));
        }
        Ok(items)
    }

    fn constraint(&mut self) -> PResult<Constraint> {
        let left = self.name("a label or activity name")?;
        let open = self.expect(Tok::LBrace)?;
        let mut rel = RelationSet::EMPTY;
        if *self.peek() != Tok::RBrace {
            loop {
                let (word, span) = match self.peek().clone() {
                    Tok::Ident(w) => (w, self.bump().span),
                    _ => return Err(self.unexpected("an Allen relation")),
                };
                let r: BasicRelation = word.parse().map_err(|_| {
                    Diagnostic::at(span, format!("unknown relation `{word}` (use b, bi, m, mi, o, oi, s, si, d, di, f, fi, eq)"))
                })?;
                rel = rel.with(r);
                if *self.peek() == Tok::Comma {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::RBrace).map_err(|_| {
            Diagnostic::at(self.span(), format!("relation set opened at {}:{} is not closed", open.line, open.column))
        })?;
        let right = self.name("a label or activity name")?;
        let end = self.expect(Tok::Semi)?;
        let span = join(left.1, end);
        Ok(Constraint { left, rel, right, span })
    }
}

#[derive(Default)]
struct Lowered {
    spans: BTreeMap<NodePath, Span>,
    labels: BTreeMap<NodePath, Span>,
}

fn lower(e: Expr, path: NodePath, out: &mut Lowered) -> Workflow {
    out.spans.insert(path.clone(), e.span);
    let label = e.label.map(|(l, s)| {
        out.labels.insert(path.clone(), s);
        l
    });
    let kind = match e.node {
        Node::Atom(name) => Kind::Atomic { name, occ: OccurrenceId::default() },
        Node::Seq(a, b) => Kind::Seq(Box::new(lower(*a, path.child(0), out)), Box::new(lower(*b, path.child(1), out))),
        Node::Loop(b) => Kind::Loop(Box::new(lower(*b, path.child(0), out))),
        Node::And(items) => return Workflow { label, ..nest(items, e.span, true, path, out) },
        Node::Or(items) => return Workflow { label, ..nest(items, e.span, false, path, out) },
    };
    Workflow { kind, label }
}

/// Right-nests an n-ary operand list; the synthetic inner nodes share the
/// span of the whole construct.
fn nest(mut items: Vec<Expr>, span: Span, conj: bool, path: NodePath, out: &mut Lowered) -> Workflow {
    out.spans.insert(path.clone(), span);
    let first = items.remove(0);
    let left = lower(first, path.child(0), out);
    let right = if items.len() == 1 {
        lower(items.remove(0), path.child(1), out)
    } else {
        nest(items, span, conj, path.child(1), out)
    };
    if conj {
        Workflow::conj(left, right)
    } else {
        Workflow::disj(left, right)
    }
}

/// Parses a `.twf` document. Syntax errors stop at the first problem;
/// reference and validation problems are all reported together.
pub fn parse(text: &str) -> Result<Document, Vec<Diagnostic>> {
    let toks = tokenize(text).map_err(|d| vec![d])?;
    let mut p = Parser { toks, pos: 0 };
    let (name, expr, cons) = p.document().map_err(|d| vec![d])?;
    let mut low = Lowered::default();
    let workflow = crate::workflow::rename_occurrences(&lower(expr, NodePath::root(), &mut low));

    let mut diags = Vec::new();
    let mut net = Qcn::new();
    for c in &cons {
        for (name, span) in [&c.left, &c.right] {
            match resolve_ref(&workflow, name) {
                Ok(_) => {
                    net.add_variable(name.clone());
                }
                Err(e @ (RefError::Unknown(_) | RefError::AmbiguousAtom(..))) => {
                    diags.push(Diagnostic::at(*span, e.to_string()));
                }
            }
        }
    }
    if !diags.is_empty() {
        return Err(diags);
    }
    for c in &cons {
        net.set_constraint(&c.left.0, &c.right.0, c.rel).expect("variables were added above");
    }
    let ext = ExtendedWorkflow::new(workflow, net).map_err(|e| vec![Diagnostic::at(Span::default(), e.to_string())])?;
    if let Err(violations) = validate(&ext) {
        let constraint_span = |a: &str, b: &str| {
            cons.iter()
                .find(|c| (c.left.0 == a && c.right.0 == b) || (c.left.0 == b && c.right.0 == a))
                .map(|c| c.span)
                .unwrap_or_default()
        };
        let ref_span = |v: &str| {
            cons.iter()
                .flat_map(|c| [&c.left, &c.right])
                .find(|(n, _)| n == v)
                .map(|(_, s)| *s)
                .unwrap_or_default()
        };
        let label_span = |l: &str, nth: usize| {
            let paths: Vec<&NodePath> =
                low.labels.keys().filter(|p| ext.workflow.get(p).and_then(|w| w.label()) == Some(l)).collect();
            paths.get(nth).or(paths.first()).map(|p| low.labels[*p]).unwrap_or_default()
        };
        for v in violations {
            let span = match &v {
                Violation::DuplicateLabel { label, .. } => label_span(label, 1),
                Violation::LabelShadowsAtom { label } => label_span(label, 0),
                Violation::UnmappedVariable { variable } | Violation::DanglingPath { variable, .. } => ref_span(variable),
                Violation::NotInjective { second, .. } => ref_span(second),
                Violation::LoopBoundary { inner, outer, .. } => constraint_span(&inner.0, &outer.0),
            };
            diags.push(Diagnostic::at(span, v.to_string()));
        }
        return Err(diags);
    }
    Ok(Document { name, ext, spans: low.spans })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::print;

    fn first_error(src: &str) -> Diagnostic {
        parse(src).unwrap_err().remove(0)
    }

    #[test]
    fn sequence_is_left_associative() {
        let d = parse("workflow w = a -> b -> c").unwrap();
        assert_eq!(d.ext.workflow, crate::workflow::rename_occurrences(&Workflow::seq_all(["a", "b", "c"].map(Workflow::atom))));
        let d = parse("workflow w = a -> b").unwrap();
        assert!(matches!(d.ext.workflow.kind, Kind::Seq(..)));
    }

    #[test]
    fn nary_operators_nest_to_the_right() {
        let d = parse("workflow w = and{a; b; c}").unwrap();
        let expected = Workflow::conj(Workflow::atom("a"), Workflow::conj(Workflow::atom("b"), Workflow::atom("c")));
        assert_eq!(d.ext.workflow, crate::workflow::rename_occurrences(&expected));
        assert_eq!(d.spans.len(), 5);
    }

    #[test]
    fn empty_alternative_is_rejected() {
        let e = first_error("workflow w = or{ a | }");
        assert_eq!((e.span.line, e.span.column), (1, 22));
        let e = first_error("workflow w = or{ a }");
        assert!(e.message.contains("at least two"));
    }

    #[test]
    fn bad_relation_and_unknown_ref() {
        let e = first_error("workflow w = a -> b\nconstraints { a {b, q} b; }");
        assert_eq!((e.span.line, e.span.column), (2, 21));
        let e = first_error("workflow w = a -> b\nconstraints { a {b} zz; }");
        assert_eq!((e.span.line, e.span.column), (2, 21));
        assert!(e.message.contains("zz"));
    }

    #[test]
    fn duplicate_label_is_located() {
        let e = first_error("workflow w = L: a -> L: b");
        assert_eq!((e.span.line, e.span.column), (1, 22));
    }

    #[test]
    fn loop_boundary_is_a_diagnostic() {
        let e = first_error("workflow w = a -> loop{ b }\nconstraints {\n  a {b} b;\n}");
        assert_eq!(e.span.line, 3);
        assert!(parse("workflow w = a -> L: loop{ b }\nconstraints { a {b,m} L; }").is_ok());
    }

    #[test]
    fn labels_quotes_and_comments() {
        let src = "# header\nworkflow 'my flow' = g: ('x y' -> z) # trailing\nconstraints { g {eq} g; 'x y' {b} z; }\n";
        let d = parse(src).unwrap();
        assert_eq!(d.name, "my flow");
        assert_eq!(d.ext.workflow.label(), Some("g"));
        let again = parse(&print(&d.name, &d.ext)).unwrap();
        assert_eq!(again.ext.workflow, d.ext.workflow);
        assert!(again.ext.network.same_constraints(&d.ext.network));
    }

    #[test]
    fn reserved_words_need_quotes() {
        assert!(first_error("workflow w = and -> b").message.contains("reserved"));
        assert!(parse("workflow w = 'and' -> b").is_ok());
    }
}
