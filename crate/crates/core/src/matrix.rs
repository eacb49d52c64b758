//! Exponent matrices, column permutations, interaction/sign tags and the type classification.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::rational::Rational;

/// Space dimension `n >= 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Dim(u32);

impl Dim {
    pub const THREE: Dim = Dim(3);

    pub fn new(n: u32) -> Result<Dim> {
        if n == 0 {
            Err(Error::InvalidDim(n))
        } else {
            Ok(Dim(n))
        }
    }

    pub fn get(self) -> u32 {
        self.0
    }

    pub fn as_rational(self) -> Rational {
        Rational::from_int(self.0 as i64)
    }

    /// Numerical subcommands work in `1 <= n <= 3`.
    pub fn require_numeric(self) -> Result<Dim> {
        if self.0 <= 3 {
            Ok(self)
        } else {
            Err(Error::UnsupportedDimension {
                n: self.0,
                need: "n <= 3",
            })
        }
    }
}

impl fmt::Display for Dim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Which of the three spatial frequencies is the low one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Interaction {
    LHH,
    HLH,
    HHL,
}

impl Interaction {
    pub const ALL: [Interaction; 3] = [Interaction::LHH, Interaction::HLH, Interaction::HHL];

    pub fn low_index(self) -> usize {
        match self {
            Interaction::LHH => 0,
            Interaction::HLH => 1,
            Interaction::HHL => 2,
        }
    }

    pub fn from_low_index(i: usize) -> Interaction {
        match i {
            0 => Interaction::LHH,
            1 => Interaction::HLH,
            2 => Interaction::HHL,
            _ => panic!("column index {i} out of range"),
        }
    }

    /// The two high-frequency columns in increasing order.
    pub fn high_pair(self) -> (usize, usize) {
        match self {
            Interaction::LHH => (1, 2),
            Interaction::HLH => (0, 2),
            Interaction::HHL => (0, 1),
        }
    }

    /// Transposition that brings this interaction's low column to slot 0.
    pub fn to_lhh(self) -> Perm {
        Perm::swap(0, self.low_index())
    }
}

impl fmt::Display for Interaction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Signs of a pair of temporal frequencies; for `LHH` these are the signs of `(tau1, tau2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SignPair {
    PP,
    PM,
    MP,
    MM,
}

impl SignPair {
    pub const ALL: [SignPair; 4] = [SignPair::PP, SignPair::PM, SignPair::MP, SignPair::MM];

    pub fn from_signs(first_nonneg: bool, second_nonneg: bool) -> SignPair {
        match (first_nonneg, second_nonneg) {
            (true, true) => SignPair::PP,
            (true, false) => SignPair::PM,
            (false, true) => SignPair::MP,
            (false, false) => SignPair::MM,
        }
    }

    pub fn signs(self) -> (f64, f64) {
        match self {
            SignPair::PP => (1.0, 1.0),
            SignPair::PM => (1.0, -1.0),
            SignPair::MP => (-1.0, 1.0),
            SignPair::MM => (-1.0, -1.0),
        }
    }

    pub fn equal_signs(self) -> bool {
        matches!(self, SignPair::PP | SignPair::MM)
    }

    pub fn swapped(self) -> SignPair {
        match self {
            SignPair::PM => SignPair::MP,
            SignPair::MP => SignPair::PM,
            other => other,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for SignPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TypeLabel {
    Ia,
    Ib,
    Ic,
    II,
    Inadmissible,
}

impl fmt::Display for TypeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// A permutation of the three columns: column `j` of the result is column `self.0[j]` of the input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Perm([usize; 3]);

impl Perm {
    pub const IDENTITY: Perm = Perm([0, 1, 2]);

    pub fn new(images: [usize; 3]) -> Result<Perm> {
        let mut seen = [false; 3];
        for &i in &images {
            if i > 2 || seen[i] {
                return Err(Error::InvalidArgument(format!(
                    "{images:?} is not a permutation of 0,1,2"
                )));
            }
            seen[i] = true;
        }
        Ok(Perm(images))
    }

    pub fn swap(i: usize, j: usize) -> Perm {
        let mut p = [0, 1, 2];
        p.swap(i, j);
        Perm(p)
    }

    pub fn all() -> [Perm; 6] {
        [
            Perm([0, 1, 2]),
            Perm([0, 2, 1]),
            Perm([1, 0, 2]),
            Perm([1, 2, 0]),
            Perm([2, 0, 1]),
            Perm([2, 1, 0]),
        ]
    }

    pub fn images(self) -> [usize; 3] {
        self.0
    }

    /// Source column for result slot `j`.
    pub fn source(self, j: usize) -> usize {
        self.0[j]
    }

    /// Result slot that receives source column `k`.
    pub fn target(self, k: usize) -> usize {
        self.0.iter().position(|&x| x == k).expect("bijection")
    }

    pub fn inverse(self) -> Perm {
        let mut inv = [0; 3];
        for (j, &k) in self.0.iter().enumerate() {
            inv[k] = j;
        }
        Perm(inv)
    }

    /// `self.then(other)` applies `self` first: `permute(permute(m, self), other)`.
    pub fn then(self, other: Perm) -> Perm {
        Perm([self.0[other.0[0]], self.0[other.0[1]], self.0[other.0[2]]])
    }

    pub fn apply<T: Clone>(self, cols: &[T; 3]) -> [T; 3] {
        [
            cols[self.0[0]].clone(),
            cols[self.0[1]].clone(),
            cols[self.0[2]].clone(),
        ]
    }

    pub fn is_identity(self) -> bool {
        self == Perm::IDENTITY
    }
}

impl Serialize for Perm {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.0.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Perm {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let images = <[usize; 3]>::deserialize(d)?;
        Perm::new(images).map_err(serde::de::Error::custom)
    }
}

/// The six exponents `[s0 s1 s2; b0 b1 b2]`.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct ExponentMatrix {
    pub s: [Rational; 3],
    pub b: [Rational; 3],
}

impl ExponentMatrix {
    pub fn new(s: [Rational; 3], b: [Rational; 3]) -> Self {
        ExponentMatrix { s, b }
    }

    pub fn zero() -> Self {
        ExponentMatrix::default()
    }

    pub fn s_sum(&self) -> Rational {
        self.s.iter().sum()
    }

    pub fn b_sum(&self) -> Rational {
        self.b.iter().sum()
    }

    /// Wire form with every entry written as `p/q`.
    pub fn to_wire_string(&self) -> String {
        let join = |v: &[Rational; 3]| {
            v.iter()
                .map(Rational::to_fraction_string)
                .collect::<Vec<_>>()
                .join(",")
        };
        format!("{};{}", join(&self.s), join(&self.b))
    }

    pub fn to_f64(&self) -> ([f64; 3], [f64; 3]) {
        (
            [self.s[0].to_f64(), self.s[1].to_f64(), self.s[2].to_f64()],
            [self.b[0].to_f64(), self.b[1].to_f64(), self.b[2].to_f64()],
        )
    }
}

impl fmt::Display for ExponentMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{},{},{};{},{},{}",
            self.s[0], self.s[1], self.s[2], self.b[0], self.b[1], self.b[2]
        )
    }
}

impl fmt::Debug for ExponentMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}]", self)
    }
}

impl FromStr for ExponentMatrix {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let rows: Vec<&str> = text.trim().split(';').collect();
        if rows.len() != 2 {
            return Err(Error::MatrixShape(format!(
                "expected two rows separated by ';', got {}",
                rows.len()
            )));
        }
        let mut entries = Vec::with_capacity(6);
        for (r, row) in rows.iter().enumerate() {
            let cells: Vec<&str> = row.split(',').collect();
            if cells.len() != 3 {
                return Err(Error::MatrixShape(format!(
                    "row {r} has {} entries, expected 3",
                    cells.len()
                )));
            }
            for (c, cell) in cells.iter().enumerate() {
                let value = cell
                    .parse::<Rational>()
                    .map_err(|source| Error::MatrixEntry {
                        index: 3 * r + c,
                        source,
                    })?;
                entries.push(value);
            }
        }
        let b = [entries[3].clone(), entries[4].clone(), entries[5].clone()];
        let s = [entries[0].clone(), entries[1].clone(), entries[2].clone()];
        Ok(ExponentMatrix { s, b })
    }
}

impl Serialize for ExponentMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_wire_string())
    }
}

impl<'de> Deserialize<'de> for ExponentMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

pub fn permute_columns(m: &ExponentMatrix, perm: Perm) -> ExponentMatrix {
    ExponentMatrix {
        s: perm.apply(&m.s),
        b: perm.apply(&m.b),
    }
}

/// Sorts `b` ascending (stable in the original column index) and labels the result.
pub fn normalize_type(m: &ExponentMatrix) -> (ExponentMatrix, Perm, TypeLabel) {
    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| m.b[i].cmp(&m.b[j]).then(i.cmp(&j)));
    let perm = Perm(order);
    let normalized = permute_columns(m, perm);
    let b = &normalized.b;
    let negatives = b.iter().filter(|x| x.is_negative()).count();
    let zeros = b.iter().filter(|x| x.is_zero()).count();
    let label = match (negatives, zeros) {
        (0, 0) => TypeLabel::Ic,
        (0, 1) => TypeLabel::Ib,
        (0, 2) => TypeLabel::Ia,
        (1, 0) => TypeLabel::II,
        _ => TypeLabel::Inadmissible,
    };
    (normalized, perm, label)
}
