//! Workflows extended with qualitative temporal constraints.
//!
//! Workflows are built from atomic activities with sequence, conjunction,
//! disjunction and loop. Constraint networks over Allen's interval relations
//! can be attached to labeled subworkflows. The crate decides consistency of
//! such networks, strong and bounded satisfiability of extended workflows,
//! equivalence by normal forms, and a sound subsumption check. Exact rational
//! schedules are produced as witnesses.

pub mod allen;
pub mod dsl;
pub mod extended;
pub mod gen;
pub mod oracle;
pub mod qcn;
pub mod workflow;
