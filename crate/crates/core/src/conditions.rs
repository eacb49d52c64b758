//! The 21 necessary conditions defining the polyhedron Ω, and the four `H^s` conditions.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::matrix::{Dim, ExponentMatrix, Interaction, Perm, SignPair};
use crate::rational::{q, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ConditionId {
    B1,
    B2,
    B3,
    B4,
    B5,
    B6,
    B7,
    B8,
    B9,
    B10,
    B11,
    B12,
    B13,
    B14,
    B15,
    B16,
    B17,
    B18,
    B19,
    B20,
    B21,
    HS40,
    HS41,
    HS42,
    HS43,
}

impl ConditionId {
    pub const WAVE: [ConditionId; 21] = [
        ConditionId::B1,
        ConditionId::B2,
        ConditionId::B3,
        ConditionId::B4,
        ConditionId::B5,
        ConditionId::B6,
        ConditionId::B7,
        ConditionId::B8,
        ConditionId::B9,
        ConditionId::B10,
        ConditionId::B11,
        ConditionId::B12,
        ConditionId::B13,
        ConditionId::B14,
        ConditionId::B15,
        ConditionId::B16,
        ConditionId::B17,
        ConditionId::B18,
        ConditionId::B19,
        ConditionId::B20,
        ConditionId::B21,
    ];

    pub const HS: [ConditionId; 4] = [
        ConditionId::HS40,
        ConditionId::HS41,
        ConditionId::HS42,
        ConditionId::HS43,
    ];

    /// Position in the 21-entry wave table (`B1` is 0).
    pub fn wave_index(self) -> Option<usize> {
        let i = self as usize;
        (i < 21).then_some(i)
    }

    pub fn from_number(k: usize) -> Option<ConditionId> {
        match k {
            1..=21 => Some(ConditionId::WAVE[k - 1]),
            40..=43 => Some(ConditionId::HS[k - 40]),
            _ => None,
        }
    }

    pub fn number(self) -> usize {
        let i = self as usize;
        if i < 21 {
            i + 1
        } else {
            i - 21 + 40
        }
    }
}

impl fmt::Display for ConditionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Interaction/sign applicability of a condition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Tags {
    All,
    /// Sign pairs refer to the two high-frequency temporal variables, in column order.
    Only(Vec<(Interaction, SignPair)>),
}

impl Tags {
    fn only(interaction: Interaction, signs: &[SignPair]) -> Tags {
        Tags::Only(signs.iter().map(|&s| (interaction, s)).collect())
    }

    pub fn applies(&self, interaction: Interaction, signs: SignPair) -> bool {
        match self {
            Tags::All => true,
            Tags::Only(list) => list.contains(&(interaction, signs)),
        }
    }

    fn canonical(&self) -> Tags {
        match self {
            Tags::All => Tags::All,
            Tags::Only(list) => {
                let mut v = list.clone();
                v.sort();
                v.dedup();
                Tags::Only(v)
            }
        }
    }

    /// Relabels tags after the columns are moved by `p` (same convention as `LinearCondition::permuted`).
    pub fn permuted(&self, p: Perm) -> Tags {
        match self {
            Tags::All => Tags::All,
            Tags::Only(list) => {
                let moved = list
                    .iter()
                    .map(|&(inter, signs)| {
                        let low = p.source(inter.low_index());
                        let (h1, h2) = inter.high_pair();
                        let flipped = p.source(h1) > p.source(h2);
                        let signs = if flipped { signs.swapped() } else { signs };
                        (Interaction::from_low_index(low), signs)
                    })
                    .collect();
                Tags::Only(moved).canonical()
            }
        }
    }
}

/// `sigma . s + beta . b >= c0 + c1 * n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinearCondition {
    pub id: ConditionId,
    pub sigma: [Rational; 3],
    pub beta: [Rational; 3],
    pub rhs: (Rational, Rational),
    pub tags: Tags,
}

impl LinearCondition {
    pub fn lhs(&self, m: &ExponentMatrix) -> Rational {
        let mut acc = Rational::zero();
        for j in 0..3 {
            if !self.sigma[j].is_zero() {
                acc = acc + &self.sigma[j] * &m.s[j];
            }
            if !self.beta[j].is_zero() {
                acc = acc + &self.beta[j] * &m.b[j];
            }
        }
        acc
    }

    pub fn rhs_at(&self, n: Dim) -> Rational {
        &self.rhs.0 + &self.rhs.1 * n.as_rational()
    }

    pub fn evaluate(&self, m: &ExponentMatrix, n: Dim) -> ConditionStatus {
        ConditionStatus::new(self.id, self.lhs(m), self.rhs_at(n))
    }

    /// Coefficients re-indexed so that `permuted(p).lhs(m) == lhs(permute_columns(m, p))`.
    pub fn permuted(&self, p: Perm) -> LinearCondition {
        let inv = p.inverse();
        LinearCondition {
            id: self.id,
            sigma: inv.apply(&self.sigma),
            beta: inv.apply(&self.beta),
            rhs: self.rhs.clone(),
            tags: self.tags.permuted(p),
        }
    }

    /// Same inequality and tags, ignoring the id.
    pub fn same_shape(&self, other: &LinearCondition) -> bool {
        self.sigma == other.sigma
            && self.beta == other.beta
            && self.rhs == other.rhs
            && self.tags.canonical() == other.tags.canonical()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Status {
    Strict,
    Equality,
    Violated,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConditionStatus {
    pub id: ConditionId,
    pub status: Status,
    pub lhs: Rational,
    pub rhs: Rational,
}

impl ConditionStatus {
    pub fn new(id: ConditionId, lhs: Rational, rhs: Rational) -> Self {
        let status = match lhs.cmp(&rhs) {
            std::cmp::Ordering::Greater => Status::Strict,
            std::cmp::Ordering::Equal => Status::Equality,
            std::cmp::Ordering::Less => Status::Violated,
        };
        ConditionStatus {
            id,
            status,
            lhs,
            rhs,
        }
    }

    pub fn is_equality(&self) -> bool {
        self.status == Status::Equality
    }

    pub fn is_violated(&self) -> bool {
        self.status == Status::Violated
    }

    pub fn slack(&self) -> Rational {
        &self.lhs - &self.rhs
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum BoundaryClass {
    Interior,
    Face { tight: ConditionId },
    Edge { tight: Vec<ConditionId> },
    Outside { violated: Vec<ConditionId> },
}

fn r3(a: i64, b: i64, c: i64) -> [Rational; 3] {
    [
        Rational::from_int(a),
        Rational::from_int(b),
        Rational::from_int(c),
    ]
}

/// The authored table, with `rhs` kept as an affine form `c0 + c1 n`.
pub fn wave_conditions() -> Vec<LinearCondition> {
    use ConditionId::*;
    let zero = Rational::zero();
    let half = q(1, 2);
    let quarter = q(1, 4);
    let ones = r3(1, 1, 1);
    let none = r3(0, 0, 0);
    let equal = [SignPair::PP, SignPair::MM];
    let opposite = [SignPair::PM, SignPair::MP];
    let cond = |id, sigma: [Rational; 3], beta: [Rational; 3], c0: Rational, c1: Rational, tags| {
        LinearCondition {
            id,
            sigma,
            beta,
            rhs: (c0, c1),
            tags,
        }
    };
    vec![
        cond(
            B1,
            none.clone(),
            ones.clone(),
            half.clone(),
            zero.clone(),
            Tags::All,
        ),
        cond(
            B2,
            none.clone(),
            r3(1, 1, 0),
            zero.clone(),
            zero.clone(),
            Tags::All,
        ),
        cond(
            B3,
            none.clone(),
            r3(1, 0, 1),
            zero.clone(),
            zero.clone(),
            Tags::All,
        ),
        cond(
            B4,
            none.clone(),
            r3(0, 1, 1),
            zero.clone(),
            zero.clone(),
            Tags::All,
        ),
        cond(
            B5,
            ones.clone(),
            ones.clone(),
            half.clone(),
            half.clone(),
            Tags::All,
        ),
        cond(
            B6,
            ones.clone(),
            r3(1, 1, 0),
            zero.clone(),
            half.clone(),
            Tags::All,
        ),
        cond(
            B7,
            ones.clone(),
            r3(1, 0, 1),
            zero.clone(),
            half.clone(),
            Tags::All,
        ),
        cond(
            B8,
            ones.clone(),
            r3(0, 1, 1),
            zero.clone(),
            half.clone(),
            Tags::All,
        ),
        cond(
            B9,
            ones.clone(),
            r3(1, 0, 0),
            -&half,
            half.clone(),
            Tags::All,
        ),
        cond(
            B10,
            ones.clone(),
            r3(0, 1, 0),
            -&half,
            half.clone(),
            Tags::All,
        ),
        cond(
            B11,
            ones.clone(),
            r3(0, 0, 1),
            -&half,
            half.clone(),
            Tags::All,
        ),
        cond(
            B12,
            ones.clone(),
            none.clone(),
            quarter.clone(),
            quarter.clone(),
            Tags::All,
        ),
        cond(
            B13,
            r3(1, 2, 2),
            r3(1, 0, 0),
            zero.clone(),
            half.clone(),
            Tags::only(Interaction::LHH, &opposite),
        ),
        cond(
            B14,
            r3(2, 1, 2),
            r3(0, 1, 0),
            zero.clone(),
            half.clone(),
            Tags::only(Interaction::HLH, &opposite),
        ),
        cond(
            B15,
            r3(2, 2, 1),
            r3(0, 0, 1),
            zero.clone(),
            half.clone(),
            Tags::only(Interaction::HHL, &opposite),
        ),
        cond(
            B16,
            r3(0, 1, 1),
            r3(1, 0, 0),
            zero.clone(),
            zero.clone(),
            Tags::only(Interaction::LHH, &equal),
        ),
        cond(
            B17,
            r3(1, 0, 1),
            r3(0, 1, 0),
            zero.clone(),
            zero.clone(),
            Tags::only(Interaction::HLH, &equal),
        ),
        cond(
            B18,
            r3(1, 1, 0),
            r3(0, 0, 1),
            zero.clone(),
            zero.clone(),
            Tags::only(Interaction::HHL, &equal),
        ),
        cond(
            B19,
            r3(0, 1, 1),
            none.clone(),
            zero.clone(),
            zero.clone(),
            Tags::only(Interaction::LHH, &SignPair::ALL),
        ),
        cond(
            B20,
            r3(1, 0, 1),
            none.clone(),
            zero.clone(),
            zero.clone(),
            Tags::only(Interaction::HLH, &SignPair::ALL),
        ),
        cond(
            B21,
            r3(1, 1, 0),
            none,
            zero.clone(),
            zero,
            Tags::only(Interaction::HHL, &SignPair::ALL),
        ),
    ]
}

/// The table with `rhs` meant to be read at `n`; `n` is carried so exports are self-describing.
pub fn condition_table(_n: Dim) -> Vec<LinearCondition> {
    wave_conditions()
}

pub fn hs_table() -> Vec<LinearCondition> {
    use ConditionId::*;
    let zero = Rational::zero();
    let none = r3(0, 0, 0);
    let cond = |id, sigma, c1: Rational| LinearCondition {
        id,
        sigma,
        beta: none.clone(),
        rhs: (zero.clone(), c1),
        tags: Tags::All,
    };
    vec![
        cond(HS40, r3(1, 1, 1), q(1, 2)),
        cond(HS41, r3(1, 1, 0), zero.clone()),
        cond(HS42, r3(1, 0, 1), zero.clone()),
        cond(HS43, r3(0, 1, 1), zero.clone()),
    ]
}

thread_local! {
    static WAVE: Vec<LinearCondition> = wave_conditions();
    static HS: Vec<LinearCondition> = hs_table();
}

pub fn evaluate_conditions(m: &ExponentMatrix, n: Dim) -> Vec<ConditionStatus> {
    WAVE.with(|table| table.iter().map(|c| c.evaluate(m, n)).collect())
}

pub fn hs_conditions(s: &[Rational; 3], n: Dim) -> Vec<ConditionStatus> {
    let m = ExponentMatrix::new(s.clone(), Default::default());
    HS.with(|table| table.iter().map(|c| c.evaluate(&m, n)).collect())
}

pub fn classify_boundary(statuses: &[ConditionStatus]) -> BoundaryClass {
    let violated: Vec<ConditionId> = statuses
        .iter()
        .filter(|c| c.is_violated())
        .map(|c| c.id)
        .collect();
    if !violated.is_empty() {
        return BoundaryClass::Outside { violated };
    }
    let tight: Vec<ConditionId> = statuses
        .iter()
        .filter(|c| c.is_equality())
        .map(|c| c.id)
        .collect();
    match tight.len() {
        0 => BoundaryClass::Interior,
        1 => BoundaryClass::Face { tight: tight[0] },
        _ => BoundaryClass::Edge { tight },
    }
}

pub fn violated_ids(statuses: &[ConditionStatus]) -> Vec<ConditionId> {
    statuses
        .iter()
        .filter(|c| c.is_violated())
        .map(|c| c.id)
        .collect()
}

pub fn tight_ids(statuses: &[ConditionStatus]) -> Vec<ConditionId> {
    statuses
        .iter()
        .filter(|c| c.is_equality())
        .map(|c| c.id)
        .collect()
}

/// Machine-readable export of the table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConditionTableDoc {
    pub schema_version: u32,
    pub n: Dim,
    pub conditions: Vec<LinearCondition>,
    pub hs_conditions: Vec<LinearCondition>,
}

impl ConditionTableDoc {
    pub fn new(n: Dim) -> Self {
        ConditionTableDoc {
            schema_version: 1,
            n,
            conditions: condition_table(n),
            hs_conditions: hs_table(),
        }
    }
}
