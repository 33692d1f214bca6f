//! Allen's interval algebra: the 13 basic relations, relation sets, inversion,
//! composition and the endpoint definition of every relation over exact
//! rational intervals.

use std::fmt;
use std::str::FromStr;

use num_rational::Rational64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Exact time coordinate.
pub type Rational = Rational64;

/// One of the 13 basic relations between two proper intervals.
///
/// The discriminant doubles as the bit index inside a [`RelationSet`] and
/// fixes the canonical order used everywhere relations are enumerated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[repr(u8)]
pub enum BasicRelation {
    Before = 0,
    After = 1,
    Meets = 2,
    MetBy = 3,
    Overlaps = 4,
    OverlappedBy = 5,
    Starts = 6,
    StartedBy = 7,
    During = 8,
    Contains = 9,
    Finishes = 10,
    FinishedBy = 11,
    Equals = 12,
}

use BasicRelation::*;

impl BasicRelation {
    pub const ALL: [BasicRelation; 13] = [
        Before,
        After,
        Meets,
        MetBy,
        Overlaps,
        OverlappedBy,
        Starts,
        StartedBy,
        During,
        Contains,
        Finishes,
        FinishedBy,
        Equals,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Before => "b",
            After => "bi",
            Meets => "m",
            MetBy => "mi",
            Overlaps => "o",
            OverlappedBy => "oi",
            Starts => "s",
            StartedBy => "si",
            During => "d",
            Contains => "di",
            Finishes => "f",
            FinishedBy => "fi",
            Equals => "eq",
        }
    }

    /// The converse relation: `i r j` holds iff `j r.inverse() i` holds.
    pub fn inverse(self) -> Self {
        match self {
            Before => After,
            After => Before,
            Meets => MetBy,
            MetBy => Meets,
            Overlaps => OverlappedBy,
            OverlappedBy => Overlaps,
            Starts => StartedBy,
            StartedBy => Starts,
            During => Contains,
            Contains => During,
            Finishes => FinishedBy,
            FinishedBy => Finishes,
            Equals => Equals,
        }
    }
}

impl fmt::Display for BasicRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown Allen relation `{0}`")]
pub struct UnknownRelation(pub String);

impl FromStr for BasicRelation {
    type Err = UnknownRelation;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .iter()
            .copied()
            .find(|r| r.symbol() == s)
            .ok_or_else(|| UnknownRelation(s.to_string()))
    }
}

/// A disjunction of basic relations, stored as a 13-bit mask.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct RelationSet(u16);

impl RelationSet {
    pub const EMPTY: RelationSet = RelationSet(0);
    pub const UNIVERSAL: RelationSet = RelationSet((1 << 13) - 1);
    pub const EQ: RelationSet = RelationSet(1 << Equals as u16);

    pub const fn from_bits(bits: u16) -> Self {
        RelationSet(bits & Self::UNIVERSAL.0)
    }

    pub const fn bits(self) -> u16 {
        self.0
    }

    pub const fn single(r: BasicRelation) -> Self {
        RelationSet(1 << r as u16)
    }

    pub fn of(rels: &[BasicRelation]) -> Self {
        rels.iter().fold(Self::EMPTY, |acc, &r| acc.with(r))
    }

    pub fn with(self, r: BasicRelation) -> Self {
        RelationSet(self.0 | (1 << r as u16))
    }

    pub fn contains(self, r: BasicRelation) -> bool {
        self.0 & (1 << r as u16) != 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn is_universal(self) -> bool {
        self == Self::UNIVERSAL
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    /// The unique member of a singleton set.
    pub fn as_single(self) -> Option<BasicRelation> {
        if self.len() == 1 {
            BasicRelation::from_index(self.0.trailing_zeros() as usize)
        } else {
            None
        }
    }

    pub fn union(self, other: Self) -> Self {
        RelationSet(self.0 | other.0)
    }

    pub fn intersection(self, other: Self) -> Self {
        RelationSet(self.0 & other.0)
    }

    pub fn complement(self) -> Self {
        RelationSet(!self.0 & Self::UNIVERSAL.0)
    }

    pub fn is_subset(self, other: Self) -> bool {
        self.0 & !other.0 == 0
    }

    /// Members in canonical order.
    pub fn iter(self) -> impl Iterator<Item = BasicRelation> {
        BasicRelation::ALL.into_iter().filter(move |r| self.contains(*r))
    }

    pub fn inverse(self) -> Self {
        self.iter().fold(Self::EMPTY, |acc, r| acc.with(r.inverse()))
    }
}

impl fmt::Debug for RelationSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for RelationSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (k, r) in self.iter().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            f.write_str(r.symbol())?;
        }
        f.write_str("}")
    }
}

impl FromIterator<BasicRelation> for RelationSet {
    fn from_iter<I: IntoIterator<Item = BasicRelation>>(iter: I) -> Self {
        iter.into_iter().fold(Self::EMPTY, |acc, r| acc.with(r))
    }
}

impl FromStr for RelationSet {
    type Err = UnknownRelation;

    /// Accepts `{b,m}`, `b,m` or a single symbol.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let inner = s.trim().trim_start_matches('{').trim_end_matches('}');
        if inner.trim().is_empty() {
            return Ok(Self::EMPTY);
        }
        inner.split(',').map(|t| t.trim().parse::<BasicRelation>()).collect()
    }
}

pub fn inverse(r: BasicRelation) -> BasicRelation {
    r.inverse()
}

pub fn inverse_set(set: RelationSet) -> RelationSet {
    set.inverse()
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("degenerate interval [{lo}, {hi}]: an interval needs lo < hi")]
pub struct DegenerateInterval {
    pub lo: Rational,
    pub hi: Rational,
}

/// A closed, bounded interval of the rational time line, never reduced to a point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RationalInterval {
    lo: Rational,
    hi: Rational,
}

impl RationalInterval {
    pub fn new(lo: Rational, hi: Rational) -> Result<Self, DegenerateInterval> {
        if lo < hi {
            Ok(Self { lo, hi })
        } else {
            Err(DegenerateInterval { lo, hi })
        }
    }

    pub fn from_integers(lo: i64, hi: i64) -> Result<Self, DegenerateInterval> {
        Self::new(Rational::from_integer(lo), Rational::from_integer(hi))
    }

    pub fn lo(&self) -> Rational {
        self.lo
    }

    pub fn hi(&self) -> Rational {
        self.hi
    }

    pub fn relation_to(&self, other: &Self) -> BasicRelation {
        relation_between(self, other)
    }
}

impl fmt::Display for RationalInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

/// The unique basic relation holding between two intervals, read off their endpoints.
pub fn relation_between(i: &RationalInterval, j: &RationalInterval) -> BasicRelation {
    use std::cmp::Ordering::*;
    match (i.lo.cmp(&j.lo), i.hi.cmp(&j.hi)) {
        (Equal, Equal) => Equals,
        (Equal, Less) => Starts,
        (Equal, Greater) => StartedBy,
        (Greater, Equal) => Finishes,
        (Less, Equal) => FinishedBy,
        (Greater, Less) => During,
        (Less, Greater) => Contains,
        (Less, Less) => match i.hi.cmp(&j.lo) {
            Less => Before,
            Equal => Meets,
            Greater => Overlaps,
        },
        (Greater, Greater) => match i.lo.cmp(&j.hi) {
            Greater => After,
            Equal => MetBy,
            Less => OverlappedBy,
        },
    }
}

// Row = first relation, column = second; bit k stands for BasicRelation::ALL[k].
// Regenerated and compared bit-for-bit by `generate_composition_table`.
const COMPOSITION: [[u16; 13]; 13] = [
    [0x0001, 0x1fff, 0x0001, 0x0155, 0x0001, 0x0155, 0x0001, 0x0001, 0x0155, 0x0001, 0x0155, 0x0001, 0x0001],
    [0x1fff, 0x0002, 0x052a, 0x0002, 0x052a, 0x0002, 0x052a, 0x0002, 0x052a, 0x0002, 0x0002, 0x0002, 0x0002],
    [0x0001, 0x02aa, 0x0001, 0x1c00, 0x0001, 0x0150, 0x0004, 0x0004, 0x0150, 0x0001, 0x0150, 0x0001, 0x0004],
    [0x0a15, 0x0002, 0x10c0, 0x0002, 0x0520, 0x0002, 0x0520, 0x0002, 0x0520, 0x0002, 0x0008, 0x0008, 0x0008],
    [0x0001, 0x02aa, 0x0001, 0x02a0, 0x0015, 0x1ff0, 0x0010, 0x0a10, 0x0150, 0x0a15, 0x0150, 0x0015, 0x0010],
    [0x0a15, 0x0002, 0x0a10, 0x0002, 0x1ff0, 0x002a, 0x0520, 0x002a, 0x0520, 0x02aa, 0x0020, 0x02a0, 0x0020],
    [0x0001, 0x0002, 0x0001, 0x0008, 0x0015, 0x0520, 0x0040, 0x10c0, 0x0100, 0x0a15, 0x0100, 0x0015, 0x0040],
    [0x0a15, 0x0002, 0x0a10, 0x0008, 0x0a10, 0x0020, 0x10c0, 0x0080, 0x0520, 0x0200, 0x0020, 0x0200, 0x0080],
    [0x0001, 0x0002, 0x0001, 0x0002, 0x0155, 0x052a, 0x0100, 0x052a, 0x0100, 0x1fff, 0x0100, 0x0155, 0x0100],
    [0x0a15, 0x02aa, 0x0a10, 0x02a0, 0x0a10, 0x02a0, 0x0a10, 0x0200, 0x1ff0, 0x0200, 0x02a0, 0x0200, 0x0200],
    [0x0001, 0x0002, 0x0004, 0x0002, 0x0150, 0x002a, 0x0100, 0x002a, 0x0100, 0x02aa, 0x0400, 0x1c00, 0x0400],
    [0x0001, 0x02aa, 0x0004, 0x02a0, 0x0010, 0x02a0, 0x0010, 0x0200, 0x0150, 0x0200, 0x1c00, 0x0800, 0x0800],
    [0x0001, 0x0002, 0x0004, 0x0008, 0x0010, 0x0020, 0x0040, 0x0080, 0x0100, 0x0200, 0x0400, 0x0800, 0x1000],
];

/// Table lookup: every relation that may hold between `i` and `k` when `i r j` and `j s k`.
pub fn compose(r: BasicRelation, s: BasicRelation) -> RelationSet {
    RelationSet::from_bits(COMPOSITION[r.index()][s.index()])
}

/// Union of pairwise compositions.
pub fn compose_sets(a: RelationSet, b: RelationSet) -> RelationSet {
    let mut out = RelationSet::EMPTY;
    for r in a.iter() {
        for s in b.iter() {
            out = out.union(compose(r, s));
            if out.is_universal() {
                return out;
            }
        }
    }
    out
}

pub type CompositionTable = [[RelationSet; 13]; 13];

/// The shipped composition table.
pub fn composition_table() -> CompositionTable {
    let mut t = [[RelationSet::EMPTY; 13]; 13];
    for r in BasicRelation::ALL {
        for s in BasicRelation::ALL {
            t[r.index()][s.index()] = compose(r, s);
        }
    }
    t
}

/// Upper bound (exclusive) of the integer witness coordinates used to derive
/// the composition table. Three intervals have six endpoints, so seven
/// distinct values always suffice to realise every order type.
pub const WITNESS_COORDINATES: i64 = 9;

/// Derives the composition table from the endpoint definitions alone by
/// enumerating every triple of intervals with integer endpoints in `0..=8`.
pub fn generate_composition_table() -> CompositionTable {
    let intervals: Vec<RationalInterval> = (0..WITNESS_COORDINATES)
        .flat_map(|lo| (lo + 1..WITNESS_COORDINATES).map(move |hi| (lo, hi)))
        .map(|(lo, hi)| RationalInterval::from_integers(lo, hi).expect("lo < hi"))
        .collect();
    let mut t = [[RelationSet::EMPTY; 13]; 13];
    for i in &intervals {
        for j in &intervals {
            let r = relation_between(i, j);
            for k in &intervals {
                let s = relation_between(j, k);
                let cell = &mut t[r.index()][s.index()];
                *cell = cell.with(relation_between(i, k));
            }
        }
    }
    t
}

/// Number of table cells where the shipped constants agree with the derived table.
pub fn verify_composition_table() -> usize {
    let shipped = composition_table();
    let derived = generate_composition_table();
    shipped
        .iter()
        .flatten()
        .zip(derived.iter().flatten())
        .filter(|(a, b)| a == b)
        .count()
}

/// Fixed-width text grid of a composition table: a header row of column
/// symbols, then one row per first relation.
pub fn render_table(table: &CompositionTable) -> String {
    let cells: Vec<Vec<String>> = table
        .iter()
        .map(|row| row.iter().map(|c| c.to_string()).collect())
        .collect();
    let widths: Vec<usize> = (0..13)
        .map(|j| cells.iter().map(|row| row[j].len()).max().unwrap_or(0).max(BasicRelation::ALL[j].symbol().len()))
        .collect();
    let mut lines = Vec::with_capacity(14);
    let mut header = format!("{:>3} |", "∘");
    for (s, w) in BasicRelation::ALL.iter().zip(&widths) {
        header.push_str(&format!(" {:<w$}", s.symbol()));
    }
    lines.push(header);
    for r in BasicRelation::ALL {
        let mut line = format!("{:>3} |", r.symbol());
        for (cell, w) in cells[r.index()].iter().zip(&widths) {
            line.push_str(&format!(" {cell:<w$}"));
        }
        lines.push(line);
    }
    lines.iter().map(|l| format!("{}\n", l.trim_end())).collect()
}
