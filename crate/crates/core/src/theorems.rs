//! Type-specific product theorems for the four admissible sign patterns of `b`.
//!
//! Every function here expects a matrix already in normal form (see `normalize_type`).

use serde::{Deserialize, Serialize};

use crate::conditions::Status;
use crate::matrix::ExponentMatrix;
use crate::rational::{q, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TheoremId {
    BThm2,
    PThm1,
    PThm2,
    PThm3,
    PThm4,
    PThm5,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HypothesisState {
    Strict,
    Equality,
    Violated,
    NotTriggered,
    TriggeredSatisfied,
    TriggeredFailed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hypothesis {
    pub id: String,
    pub state: HypothesisState,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TheoremCheck {
    pub theorem: TheoremId,
    pub hypotheses: Vec<Hypothesis>,
    pub holds: bool,
}

impl TheoremCheck {
    /// Ids of exceptions whose trigger fired and whose demanded strictness failed.
    pub fn failed_exceptions(&self) -> Vec<&str> {
        self.hypotheses
            .iter()
            .filter(|h| h.state == HypothesisState::TriggeredFailed)
            .map(|h| h.id.as_str())
            .collect()
    }

    pub fn failed(&self) -> Vec<&str> {
        self.hypotheses
            .iter()
            .filter(|h| !h.holds)
            .map(|h| h.id.as_str())
            .collect()
    }

    pub fn get(&self, id: &str) -> Option<&Hypothesis> {
        self.hypotheses.iter().find(|h| h.id == id)
    }
}

/// Builder collecting inequalities first, then exceptions that refer back to them.
struct Sheet {
    items: Vec<(String, Status)>,
    out: Vec<Hypothesis>,
}

impl Sheet {
    fn new() -> Self {
        Sheet {
            items: Vec::new(),
            out: Vec::new(),
        }
    }

    fn status(lhs: &Rational, rhs: &Rational) -> Status {
        match lhs.cmp(rhs) {
            std::cmp::Ordering::Greater => Status::Strict,
            std::cmp::Ordering::Equal => Status::Equality,
            std::cmp::Ordering::Less => Status::Violated,
        }
    }

    /// `lhs >= rhs`.
    fn ge(&mut self, id: &str, lhs: Rational, rhs: Rational) {
        let st = Sheet::status(&lhs, &rhs);
        self.items.push((id.to_string(), st));
        let state = match st {
            Status::Strict => HypothesisState::Strict,
            Status::Equality => HypothesisState::Equality,
            Status::Violated => HypothesisState::Violated,
        };
        self.out.push(Hypothesis {
            id: id.to_string(),
            state,
            holds: st != Status::Violated,
        });
    }

    /// Every `lhs > rhs` in the list (equality fails).
    fn gt_all(&mut self, id: &str, pairs: &[(&Rational, &Rational)]) {
        let statuses: Vec<Status> = pairs.iter().map(|(l, r)| Sheet::status(l, r)).collect();
        let state = if statuses.contains(&Status::Violated) {
            HypothesisState::Violated
        } else if statuses.contains(&Status::Equality) {
            HypothesisState::Equality
        } else {
            HypothesisState::Strict
        };
        self.out.push(Hypothesis {
            id: id.to_string(),
            state,
            holds: state == HypothesisState::Strict,
        });
    }

    fn lookup(&self, id: &str) -> Status {
        self.items
            .iter()
            .find(|(k, _)| k == id)
            .map(|(_, s)| *s)
            .unwrap_or_else(|| panic!("unknown hypothesis {id}"))
    }

    /// If `trigger`, none of `demanded` may be an equality.
    fn demand_strict(&mut self, id: &str, trigger: bool, demanded: &[&str]) {
        let state = if !trigger {
            HypothesisState::NotTriggered
        } else if demanded.iter().any(|d| self.lookup(d) == Status::Equality) {
            HypothesisState::TriggeredFailed
        } else {
            HypothesisState::TriggeredSatisfied
        };
        self.out.push(Hypothesis {
            id: id.to_string(),
            state,
            holds: state != HypothesisState::TriggeredFailed,
        });
    }

    /// At most one of `members` may be an equality.
    fn not_both(&mut self, id: &str, members: &[&str]) {
        let eq = members
            .iter()
            .filter(|d| self.lookup(d) == Status::Equality)
            .count();
        let state = if eq == 0 {
            HypothesisState::NotTriggered
        } else if eq == 1 {
            HypothesisState::TriggeredSatisfied
        } else {
            HypothesisState::TriggeredFailed
        };
        self.out.push(Hypothesis {
            id: id.to_string(),
            state,
            holds: state != HypothesisState::TriggeredFailed,
        });
    }

    fn any_equality(&self, ids: &[&str]) -> bool {
        ids.iter().any(|d| self.lookup(d) == Status::Equality)
    }

    fn finish(self, theorem: TheoremId) -> TheoremCheck {
        let holds = self.out.iter().all(|h| h.holds);
        TheoremCheck {
            theorem,
            hypotheses: self.out,
            holds,
        }
    }
}

fn r(n: i64) -> Rational {
    Rational::from_int(n)
}

/// `b0 = b1 = 0 < b2`.
pub fn check_thm1(m: &ExponentMatrix) -> TheoremCheck {
    let [s0, s1, s2] = &m.s;
    let b2 = &m.b[2];
    let sum = m.s_sum();
    let mut sh = Sheet::new();
    sh.gt_all("P101", &[(b2, &q(1, 2))]);
    sh.ge("P102", sum.clone(), q(3, 2));
    let top = Rational::max_of([s0, s1, s2]).expect("three");
    sh.ge("P103", sum, top);
    sh.not_both("P102/P103", &["P102", "P103"]);
    sh.finish(TheoremId::PThm1)
}

/// `b0 = 0 < b1, b2`.
pub fn check_thm2(m: &ExponentMatrix) -> TheoremCheck {
    let [s0, s1, s2] = &m.s;
    let [_, b1, b2] = &m.b;
    let zero = Rational::zero();
    let half = q(1, 2);
    let three_halves = q(3, 2);
    let sum = m.s_sum();
    let mut sh = Sheet::new();
    sh.gt_all("P201", &[(b1, &zero), (b2, &zero)]);
    sh.ge("P202", b1 + b2, half.clone());
    sh.ge("P203", sum.clone(), r(2) - (b1 + b2));
    sh.ge("P204", sum.clone(), &three_halves - b1);
    sh.ge("P205", sum.clone(), &three_halves - b2);
    sh.ge("P206", sum, r(1));
    sh.ge("P207", s0 + r(2) * (s1 + s2), three_halves.clone());
    sh.ge("P208", s1 + s2, zero.clone());
    sh.ge("P209", s0 + s2, zero.clone());
    sh.ge("P210", s0 + s1, zero);

    sh.demand_strict("P211a", *b1 == half, &["P203", "P205"]);
    sh.demand_strict("P211b", *b1 == half, &["P204", "P206"]);
    sh.demand_strict("P212a", *b2 == half, &["P203", "P204"]);
    sh.demand_strict("P212b", *b2 == half, &["P205", "P206"]);
    sh.demand_strict("P215", b1 + b2 == r(1), &["P203", "P206"]);
    let special = [
        half.clone(),
        three_halves.clone(),
        &three_halves - r(2) * b1,
        &three_halves - r(2) * b2,
        q(5, 2) - r(2) * (b1 + b2),
    ];
    sh.demand_strict("P216", special.contains(s0), &["P207"]);
    let eq = sh.any_equality(&["P203", "P204", "P205", "P206"]);
    sh.demand_strict("P217", eq, &["P208", "P209", "P210"]);
    sh.finish(TheoremId::PThm2)
}

/// `0 < b0, b1, b2`.
pub fn check_thm3(m: &ExponentMatrix) -> TheoremCheck {
    let [s0, s1, s2] = &m.s;
    let [b0, b1, b2] = &m.b;
    let zero = Rational::zero();
    let half = q(1, 2);
    let three_halves = q(3, 2);
    let two = r(2);
    let sum = m.s_sum();
    let bsum = m.b_sum();
    let mut sh = Sheet::new();
    sh.gt_all("P400", &[(b0, &zero), (b1, &zero), (b2, &zero)]);
    sh.ge("P401", bsum.clone(), half.clone());
    sh.ge("P402", sum.clone(), &two - &bsum);
    sh.ge("P403", sum.clone(), &three_halves - (b0 + b1));
    sh.ge("P404", sum.clone(), &three_halves - (b0 + b2));
    sh.ge("P405", sum.clone(), &three_halves - (b1 + b2));
    sh.ge("P406", sum, r(1));
    sh.ge(
        "P407",
        s0 + b0 + &two * s1 + &two * s2,
        three_halves.clone(),
    );
    sh.ge(
        "P408",
        &two * s0 + s1 + b1 + &two * s2,
        three_halves.clone(),
    );
    sh.ge(
        "P409",
        &two * s0 + &two * s1 + s2 + b2,
        three_halves.clone(),
    );
    sh.ge("P410", s1 + s2, zero.clone());
    sh.ge("P411", s0 + s2, zero.clone());
    sh.ge("P412", s0 + s1, zero);

    sh.demand_strict("P413", *b0 == half, &["P402", "P405"]);
    sh.demand_strict("P414", *b1 == half, &["P402", "P404"]);
    sh.demand_strict("P415", *b2 == half, &["P402", "P403"]);
    sh.demand_strict("P416", b0 + b1 == half, &["P403", "P406"]);
    sh.demand_strict("P417", b0 + b2 == half, &["P404", "P406"]);
    sh.demand_strict("P418", b1 + b2 == half, &["P405", "P406"]);
    sh.demand_strict("P419", bsum == r(1), &["P402", "P406"]);
    let bs = [b0, b1, b2];
    let s = [s0, s1, s2];
    for (k, (id, target)) in [("P420", "P407"), ("P421", "P408"), ("P422", "P409")]
        .into_iter()
        .enumerate()
    {
        let (i, j) = match k {
            0 => (1, 2),
            1 => (0, 2),
            _ => (0, 1),
        };
        let special = [
            three_halves.clone(),
            &half + &two * bs[k],
            &three_halves - &two * bs[i],
            &three_halves - &two * bs[j],
            q(5, 2) - &two * (bs[i] + bs[j]),
        ];
        let value = s[k] + bs[k];
        sh.demand_strict(id, special.contains(&value), &[target]);
    }
    let eq = sh.any_equality(&["P402", "P403", "P404", "P405", "P406"]);
    sh.demand_strict("P423", eq, &["P410", "P411", "P412"]);
    sh.finish(TheoremId::PThm3)
}

fn thm4_inequalities(m: &ExponentMatrix, sh: &mut Sheet) {
    let [s0, s1, s2] = &m.s;
    let [b0, b1, b2] = &m.b;
    let zero = Rational::zero();
    let three_halves = q(3, 2);
    let sum = m.s_sum();
    let bsum = m.b_sum();
    sh.gt_all("P500", &[(&zero, b0), (b1, &zero), (b2, &zero)]);
    sh.ge("P501", bsum.clone(), q(1, 2));
    sh.ge("P502", b0 + b1, zero.clone());
    sh.ge("P503", b0 + b2, zero.clone());
    sh.ge("P504", sum.clone(), r(2) - &bsum);
    sh.ge("P505", sum.clone(), &three_halves - (b0 + b1));
    sh.ge("P506", sum.clone(), &three_halves - (b0 + b2));
    sh.ge("P507", sum, r(1) - b0);
    sh.ge("P509", s0 + r(2) * (s1 + s2) + b0, three_halves);
    sh.ge("P510", s1 + s2, -b0);
    sh.ge("P511", s0 + s2, zero.clone());
    sh.ge("P512", s0 + s1, zero);
}

fn thm4_shared_exceptions(m: &ExponentMatrix, sh: &mut Sheet) {
    let [_, b1, b2] = &m.b;
    let half = q(1, 2);
    sh.demand_strict("P513", *b1 == half, &["P504", "P506", "P505", "P507"]);
    sh.demand_strict("P514", *b2 == half, &["P504", "P505", "P506", "P507"]);
    sh.demand_strict("P517", b1 + b2 == r(1), &["P504", "P507"]);
}

/// `b0 < 0 < b1, b2`.
pub fn check_thm4(m: &ExponentMatrix) -> TheoremCheck {
    let [s0, _, _] = &m.s;
    let [b0, b1, b2] = &m.b;
    let mut sh = Sheet::new();
    thm4_inequalities(m, &mut sh);
    thm4_shared_exceptions(m, &mut sh);
    let three_halves = q(3, 2);
    let special = [
        q(1, 2),
        &three_halves - r(2) * b1,
        &three_halves - r(2) * b2,
        q(5, 2) - r(2) * (b1 + b2),
    ];
    sh.demand_strict("P519", special.contains(&(s0 + b0)), &["P509"]);
    let eq501 = sh.any_equality(&["P501"]);
    sh.demand_strict("P520", eq501, &["P502", "P503"]);
    let eq = sh.any_equality(&["P504", "P505", "P506", "P507"]);
    sh.demand_strict("P521", eq, &["P510", "P511", "P512"]);
    sh.finish(TheoremId::PThm4)
}

/// `b0 < 0` and `b1, b2 > 1/2`.
pub fn thm5_applies(m: &ExponentMatrix) -> bool {
    let half = q(1, 2);
    m.b[0].is_negative() && m.b[1] > half && m.b[2] > half
}

/// The relaxed Type II theorem: no exceptional values of `s0 + b0`, and only `P507` equality forces `P510` strict.
pub fn check_thm5(m: &ExponentMatrix) -> TheoremCheck {
    let mut sh = Sheet::new();
    sh.gt_all(
        "P530",
        &[
            (&Rational::zero(), &m.b[0]),
            (&m.b[1], &q(1, 2)),
            (&m.b[2], &q(1, 2)),
        ],
    );
    thm4_inequalities(m, &mut sh);
    thm4_shared_exceptions(m, &mut sh);
    let eq501 = sh.any_equality(&["P501"]);
    sh.demand_strict("P520", eq501, &["P502", "P503"]);
    let eq507 = sh.any_equality(&["P507"]);
    sh.demand_strict("P521r", eq507, &["P510"]);
    sh.finish(TheoremId::PThm5)
}
