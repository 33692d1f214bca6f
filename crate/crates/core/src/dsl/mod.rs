//! The `.twf` text format.
//!
//! ```text
//! doc        := "workflow" name "=" expr ("constraints" "{" constraint* "}")?
//! expr       := term ("->" term)*                 (left-associative)
//! term       := (label ":")? primary
//! primary    := atom | "and" "{" expr (";" expr)+ "}" | "or" "{" expr ("|" expr)+ "}"
//!             | "loop" "{" expr "}" | "(" expr ")"
//! constraint := ref relset ref ";"
//! relset     := "{" (rel ("," rel)*)? "}"
//! ```
//!
//! Names and labels are identifiers or single-quoted strings. A `ref` is a
//! label or the name of an atom that occurs once. `#` comments run to the end
//! of the line.

mod dot;
mod lexer;
mod parser;

use std::collections::BTreeMap;
use std::fmt;

use crate::extended::ExtendedWorkflow;
use crate::workflow::{quote_name, NodePath};

pub use dot::export_dot;
pub use parser::parse;

/// A position in the source text. Lines and columns count from 1; columns
/// count characters, `offset` and `len` count bytes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Span {
    pub line: usize,
    pub column: usize,
    pub offset: usize,
    pub len: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub span: Span,
    pub message: String,
}

impl Diagnostic {
    pub fn at(span: Span, message: impl Into<String>) -> Self {
        Diagnostic { span, message: message.into() }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.span.line, self.span.column, self.message)
    }
}

/// A parsed file: the workflow's name, the extended workflow, and the
/// source span of every node.
#[derive(Debug, Clone)]
pub struct Document {
    pub name: String,
    pub ext: ExtendedWorkflow,
    pub spans: BTreeMap<NodePath, Span>,
}

/// Canonical text of an extended workflow. Variables that take part in no
/// constraint are kept alive with a trivial `x {eq} x;` line.
pub fn print(name: &str, ew: &ExtendedWorkflow) -> String {
    let mut out = format!("workflow {} = {}\n", quote_name(name), ew.workflow);
    let net = &ew.network;
    if net.is_empty() {
        return out;
    }
    let vars = net.variables();
    let cons = net.constraints();
    out.push_str("constraints {\n");
    for (i, j, r) in &cons {
        out.push_str(&format!("  {} {} {};\n", quote_name(&vars[*i]), r, quote_name(&vars[*j])));
    }
    for (i, v) in vars.iter().enumerate() {
        if !cons.iter().any(|&(a, b, _)| a == i || b == i) {
            out.push_str(&format!("  {0} {{eq}} {0};\n", quote_name(v)));
        }
    }
    out.push_str("}\n");
    out
}

pub fn print_document(doc: &Document) -> String {
    print(&doc.name, &doc.ext)
}
