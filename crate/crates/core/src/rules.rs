//! Boundary rules in their two equivalent forms (grouped max-form and explicit exceptions),
//! and the three forms of the `H^s` edge rule.

use std::sync::OnceLock;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::conditions::{
    evaluate_conditions, hs_conditions, violated_ids, wave_conditions, ConditionId,
    ConditionStatus, Status,
};
use crate::error::{Error, Result};
use crate::matrix::{permute_columns, Dim, ExponentMatrix, Interaction, Perm};
use crate::mc::{map_chunks, substream};
use crate::rational::{q, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleFailure {
    pub rule: String,
    pub equalities: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome")]
pub enum RuleOutcome {
    Pass,
    Fail { triggered: Vec<RuleFailure> },
}

impl RuleOutcome {
    fn from_failures(triggered: Vec<RuleFailure>) -> RuleOutcome {
        if triggered.is_empty() {
            RuleOutcome::Pass
        } else {
            RuleOutcome::Fail { triggered }
        }
    }

    pub fn passed(&self) -> bool {
        matches!(self, RuleOutcome::Pass)
    }
}

/// `RELABEL[p][k]`: the table index of condition `k` after its columns are moved by perm `p`,
/// so that the status of condition `k` on `permute_columns(m, p)` is the status of `RELABEL[p][k]` on `m`.
fn relabel_table() -> &'static [[usize; 21]; 6] {
    static TABLE: OnceLock<[[usize; 21]; 6]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let table = wave_conditions();
        let mut out = [[0usize; 21]; 6];
        for (pi, p) in Perm::all().into_iter().enumerate() {
            for (k, c) in table.iter().enumerate() {
                let moved = c.permuted(p);
                out[pi][k] = table
                    .iter()
                    .position(|d| d.same_shape(&moved))
                    .expect("condition table is closed under permutation");
            }
        }
        out
    })
}

fn perm_index(p: Perm) -> usize {
    Perm::all()
        .iter()
        .position(|&x| x == p)
        .expect("perm is one of the six")
}

/// Condition id on `m` corresponding to `id` evaluated on `permute_columns(m, p)`.
pub fn relabel(id: ConditionId, p: Perm) -> ConditionId {
    match id.wave_index() {
        Some(k) => ConditionId::WAVE[relabel_table()[perm_index(p)][k]],
        None => id,
    }
}

/// Statuses of the 21 conditions as seen from a column-permuted frame.
struct Frame<'a> {
    statuses: &'a [ConditionStatus],
    map: &'a [usize; 21],
    perm: Perm,
}

impl<'a> Frame<'a> {
    fn new(statuses: &'a [ConditionStatus], perm: Perm) -> Self {
        Frame {
            statuses,
            map: &relabel_table()[perm_index(perm)],
            perm,
        }
    }

    fn status(&self, id: ConditionId) -> Status {
        let k = id.wave_index().expect("wave condition");
        self.statuses[self.map[k]].status
    }

    fn is_equality(&self, id: ConditionId) -> bool {
        self.status(id) == Status::Equality
    }

    fn original(&self, id: ConditionId) -> ConditionId {
        relabel(id, self.perm)
    }
}

fn require_inside(statuses: &[ConditionStatus]) -> Result<()> {
    let violated = violated_ids(statuses);
    if violated.is_empty() {
        Ok(())
    } else {
        Err(Error::Violated(violated))
    }
}

struct Member {
    label: &'static str,
    bases: &'static [ConditionId],
}

use ConditionId::*;

const GROUP_B: [Member; 2] = [
    Member {
        label: "B51",
        bases: &[B1],
    },
    Member {
        label: "B52",
        bases: &[B2, B3, B4],
    },
];

const GROUP_EQUAL_SIGNS: [Member; 4] = [
    Member {
        label: "B54",
        bases: &[B5],
    },
    Member {
        label: "B55",
        bases: &[B6, B7, B8],
    },
    Member {
        label: "B56",
        bases: &[B9, B10, B11, B12],
    },
    Member {
        label: "B57",
        bases: &[B16, B19],
    },
];

const GROUP_OPPOSITE_SIGNS: [Member; 5] = [
    Member {
        label: "B60",
        bases: &[B5],
    },
    Member {
        label: "B61",
        bases: &[B6, B7, B8],
    },
    Member {
        label: "B62",
        bases: &[B9, B10, B11, B12],
    },
    Member {
        label: "B63",
        bases: &[B13],
    },
    Member {
        label: "B64",
        bases: &[B19],
    },
];

/// Members at equality, where a member's rhs is the max of its base rhs values and the lhs is shared.
fn members_at_equality(frame: &Frame, members: &[Member]) -> Vec<String> {
    members
        .iter()
        .filter(|m| m.bases.iter().any(|&b| frame.is_equality(b)))
        .map(|m| m.label.to_string())
        .collect()
}

fn check_group(frame: &Frame, rule: String, members: &[Member], out: &mut Vec<RuleFailure>) {
    let eq = members_at_equality(frame, members);
    if eq.len() > 1 {
        out.push(RuleFailure {
            rule,
            equalities: eq,
        });
    }
}

pub fn grouped_rules_verdict(m: &ExponentMatrix) -> Result<RuleOutcome> {
    grouped_rules_verdict_at(m, Dim::THREE)
}

pub fn grouped_rules_verdict_at(m: &ExponentMatrix, n: Dim) -> Result<RuleOutcome> {
    let statuses = evaluate_conditions(m, n);
    require_inside(&statuses)?;
    Ok(grouped_from_statuses(&statuses))
}

fn grouped_from_statuses(statuses: &[ConditionStatus]) -> RuleOutcome {
    let mut failures = Vec::new();
    let frame = Frame::new(statuses, Perm::IDENTITY);
    check_group(&frame, "B53".into(), &GROUP_B, &mut failures);
    for inter in Interaction::ALL {
        let frame = Frame::new(statuses, inter.to_lhh());
        check_group(
            &frame,
            format!("B58[{inter}]"),
            &GROUP_EQUAL_SIGNS,
            &mut failures,
        );
        check_group(
            &frame,
            format!("B65[{inter}]"),
            &GROUP_OPPOSITE_SIGNS,
            &mut failures,
        );
    }
    RuleOutcome::from_failures(failures)
}

/// Equalities among `demanded` (reported in the original column frame).
fn strictness_failures(frame: &Frame, demanded: &[ConditionId]) -> Vec<String> {
    demanded
        .iter()
        .filter(|&&c| frame.is_equality(c))
        .map(|&c| frame.original(c).to_string())
        .collect()
}

fn check_exception(
    frame: &Frame,
    rule: String,
    trigger: bool,
    demanded: &[ConditionId],
    out: &mut Vec<RuleFailure>,
) {
    if !trigger {
        return;
    }
    let eq = strictness_failures(frame, demanded);
    if !eq.is_empty() {
        out.push(RuleFailure {
            rule,
            equalities: eq,
        });
    }
}

pub fn exception_list_verdict(m: &ExponentMatrix) -> Result<RuleOutcome> {
    exception_list_verdict_at(m, Dim::THREE)
}

pub fn exception_list_verdict_at(m: &ExponentMatrix, n: Dim) -> Result<RuleOutcome> {
    let statuses = evaluate_conditions(m, n);
    require_inside(&statuses)?;
    Ok(exceptions_from_statuses(m, n, &statuses))
}

fn exceptions_from_statuses(
    m: &ExponentMatrix,
    n: Dim,
    statuses: &[ConditionStatus],
) -> RuleOutcome {
    let nn = n.as_rational();
    let half = q(1, 2);
    let one = Rational::one();
    let quarter = q(1, 4);
    let mut failures = Vec::new();

    let frame = Frame::new(statuses, Perm::IDENTITY);
    let [b0, b1, b2] = &m.b;
    let bsum = m.b_sum();
    let pair_low = (&nn - &one) * &quarter;
    let once: [(&str, bool, &[ConditionId]); 10] = [
        ("B80", *b0 == half, &[B1, B4, B5, B8, B6, B10, B7, B11]),
        ("B81", *b1 == half, &[B1, B3, B5, B7, B6, B9, B8, B11]),
        ("B82", *b2 == half, &[B1, B2, B5, B6, B7, B9, B8, B10]),
        ("B83", b0 + b1 == one, &[B5, B11]),
        ("B84", b0 + b2 == one, &[B5, B10]),
        ("B85", b1 + b2 == one, &[B5, B9]),
        ("B86", b0 + b1 == pair_low, &[B6, B12]),
        ("B87", b0 + b2 == pair_low, &[B7, B12]),
        ("B88", b1 + b2 == pair_low, &[B8, B12]),
        ("B89", bsum == (&nn + &one) * &quarter, &[B5, B12]),
    ];
    for (rule, trigger, demanded) in once {
        check_exception(&frame, rule.to_string(), trigger, demanded, &mut failures);
    }

    let any_middle_equality = [B5, B6, B7, B8, B9, B10, B11, B12]
        .iter()
        .any(|&c| frame.is_equality(c));

    for inter in Interaction::ALL {
        let perm = inter.to_lhh();
        let frame = Frame::new(statuses, perm);
        let p = permute_columns(m, perm);
        let [b0, b1, b2] = &p.b;
        let gap = &p.s[0] - b0;
        let two = Rational::from_int(2);
        let bsum = p.b_sum();
        let per_interaction: [(&str, bool, &[ConditionId]); 6] = [
            (
                "B90",
                gap == (&nn + &two) * &half - &two * &bsum,
                &[B5, B13],
            ),
            ("B91", gap == &nn * &half - &two * (b0 + b1), &[B6, B13]),
            ("B92", gap == &nn * &half - &two * (b0 + b2), &[B7, B13]),
            ("B93", gap == (&nn - &two) * &half - &two * b0, &[B9, B13]),
            ("B94", gap == half, &[B12, B13]),
            ("B95", gap == &nn * &half - &two * b0, &[B19, B13]),
        ];
        for (rule, trigger, demanded) in per_interaction {
            check_exception(
                &frame,
                format!("{rule}[{inter}]"),
                trigger,
                demanded,
                &mut failures,
            );
        }
        check_exception(
            &frame,
            format!("B96[{inter}]"),
            any_middle_equality,
            &[B16, B19],
            &mut failures,
        );
    }
    RuleOutcome::from_failures(failures)
}

/// Outcomes of the three formulations of the `H^s` edge rule.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HsRuleReport {
    pub strict_pairs: RuleOutcome,
    pub grouped: RuleOutcome,
    pub exceptions: RuleOutcome,
}

impl HsRuleReport {
    pub fn agree(&self) -> bool {
        let p = self.strict_pairs.passed();
        p == self.grouped.passed() && p == self.exceptions.passed()
    }
}

pub fn hs_rule_check(s: &[Rational; 3], n: Dim) -> Result<HsRuleReport> {
    let st = hs_conditions(s, n);
    require_inside(&st)?;
    let eq = |k: usize| st[k].is_equality();
    let name = |k: usize| st[k].id.to_string();

    // sum tight forces the three pair sums strict
    let mut strict_pairs = Vec::new();
    if eq(0) {
        let bad: Vec<String> = (1..4).filter(|&k| eq(k)).map(name).collect();
        if !bad.is_empty() {
            let mut equalities = vec![name(0)];
            equalities.extend(bad);
            strict_pairs.push(RuleFailure {
                rule: "B44".into(),
                equalities,
            });
        }
    }

    // max form: sum >= n/2 and sum >= max(s), not both tight
    let sum: Rational = s.iter().sum();
    let half_n = n.as_rational() * q(1, 2);
    let top = Rational::max_of(s.iter()).expect("three entries");
    let mut grouped = Vec::new();
    if sum == half_n && sum == top {
        grouped.push(RuleFailure {
            rule: "B47".into(),
            equalities: vec!["B45".into(), "B46".into()],
        });
    }

    // s_i = n/2 makes the sum condition coincide with the pair sum excluding i
    let mut exceptions = Vec::new();
    let labels = ["B48a", "B48b", "B48c"];
    for i in 0..3 {
        if s[i] == half_n {
            let pair = 3 - i;
            if eq(0) || eq(pair) {
                exceptions.push(RuleFailure {
                    rule: labels[i].into(),
                    equalities: [0, pair].into_iter().filter(|&k| eq(k)).map(name).collect(),
                });
            }
        }
    }

    Ok(HsRuleReport {
        strict_pairs: RuleOutcome::from_failures(strict_pairs),
        grouped: RuleOutcome::from_failures(grouped),
        exceptions: RuleOutcome::from_failures(exceptions),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Disagreement {
    pub matrix: ExponentMatrix,
    pub grouped: RuleOutcome,
    pub exceptions: RuleOutcome,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub samples: u64,
    pub retained: u64,
    pub with_equalities: u64,
    /// Retained samples on which the grouped rules fail.
    pub grouped_failures: u64,
    pub agreements: u64,
    pub disagreements: Vec<Disagreement>,
}

/// Compares the two formulations on one matrix inside Ω; `None` when they agree.
pub fn compare_rules(m: &ExponentMatrix) -> Result<Option<Disagreement>> {
    let statuses = evaluate_conditions(m, Dim::THREE);
    require_inside(&statuses)?;
    let grouped = grouped_from_statuses(&statuses);
    let exceptions = exceptions_from_statuses(m, Dim::THREE, &statuses);
    if grouped.passed() == exceptions.passed() {
        Ok(None)
    } else {
        Ok(Some(Disagreement {
            matrix: m.clone(),
            grouped,
            exceptions,
        }))
    }
}

/// A hyperplane `sigma . s + beta . b = value` used to push samples onto faces.
#[derive(Debug, Clone)]
pub(crate) struct Hyperplane {
    coef: [i64; 6],
    value: Rational,
}

pub(crate) fn wave_hyperplanes(n: Dim) -> Vec<Hyperplane> {
    let mut out: Vec<Hyperplane> = wave_conditions()
        .iter()
        .map(|c| {
            let mut coef = [0i64; 6];
            for j in 0..3 {
                coef[j] = (&c.sigma[j].numer()).try_into().expect("small coefficient");
                coef[3 + j] = (&c.beta[j].numer()).try_into().expect("small coefficient");
            }
            Hyperplane {
                coef,
                value: c.rhs_at(n),
            }
        })
        .collect();
    let nn = n.as_rational();
    let plane = |coef: [i64; 6], value: Rational| Hyperplane { coef, value };
    for i in 0..3 {
        let mut c = [0; 6];
        c[3 + i] = 1;
        out.push(plane(c, q(1, 2)));
        // s_i - b_i at the exceptional values, written with the b terms moved left
        let mut g = [0; 6];
        g[i] = 1;
        g[3 + i] = 1;
        out.push(plane(g, q(1, 2) * &nn));
        out.push(plane(g, (&nn - Rational::from_int(2)) * q(1, 2)));
        let mut all = [0; 6];
        all[i] = 1;
        for j in 0..3 {
            all[3 + j] = 2;
        }
        all[3 + i] = 1;
        out.push(plane(all, (&nn + Rational::from_int(2)) * q(1, 2)));
        let mut gap = [0; 6];
        gap[i] = 1;
        gap[3 + i] = -1;
        out.push(plane(gap, q(1, 2)));
        for j in 0..3 {
            if j != i {
                let mut pair = [0; 6];
                pair[i] = 1;
                pair[3 + i] = 1;
                pair[3 + j] = 2;
                out.push(plane(pair, q(1, 2) * &nn));
            }
        }
    }
    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
        let mut c = [0; 6];
        c[3 + i] = 1;
        c[3 + j] = 1;
        out.push(plane(c, Rational::one()));
        out.push(plane(c, (&nn - Rational::one()) * q(1, 4)));
    }
    out.push(plane([0, 0, 0, 1, 1, 1], (&nn + Rational::one()) * q(1, 4)));
    out
}

/// Sets one unit-coefficient variable so that the point lies on `h`.
pub(crate) fn project(x: &mut [Rational; 6], h: &Hyperplane, rng: &mut impl Rng) {
    let units: Vec<usize> = (0..6).filter(|&k| h.coef[k].abs() == 1).collect();
    if units.is_empty() {
        return;
    }
    let v = units[rng.gen_range(0..units.len())];
    let mut rest = Rational::zero();
    for (k, (&c, xk)) in h.coef.iter().zip(x.iter()).enumerate() {
        if k != v && c != 0 {
            rest = rest + Rational::from_int(c) * xk;
        }
    }
    x[v] = (&h.value - rest) * Rational::from_int(h.coef[v]);
}

pub(crate) fn sample_denominator(rng: &mut impl Rng, bound: u32) -> i64 {
    let evens: Vec<i64> = (1..=bound as i64).filter(|d| d % 2 == 0).collect();
    if evens.is_empty() {
        1
    } else {
        evens[rng.gen_range(0..evens.len())]
    }
}

pub(crate) fn random_entry(rng: &mut impl Rng, d: i64, lo: i64, hi: i64) -> Rational {
    Rational::new(rng.gen_range(lo * d..=hi * d), d)
}

/// Draws a rational point, then projects it onto up to three random faces or trigger hyperplanes.
fn face_biased_wave_sample(
    rng: &mut impl Rng,
    bound: u32,
    planes: &[Hyperplane],
) -> ExponentMatrix {
    let d = sample_denominator(rng, bound);
    let mut x: [Rational; 6] = std::array::from_fn(|k| {
        if k < 3 {
            random_entry(rng, d, -1, 2)
        } else {
            random_entry(rng, d, -1, 1)
        }
    });
    let projections = rng.gen_range(0..=3);
    for _ in 0..projections {
        let h = &planes[rng.gen_range(0..planes.len())];
        project(&mut x, h, rng);
    }
    let [s0, s1, s2, b0, b1, b2] = x;
    ExponentMatrix::new([s0, s1, s2], [b0, b1, b2])
}

const MAX_ATTEMPTS: u64 = 10_000;

/// Runs the grouped and exception formulations on `count` retained face-biased samples inside Ω at n=3.
pub fn rules_equivalence_sample(
    count: u64,
    seed: u64,
    denominator_bound: u32,
) -> EquivalenceReport {
    let n = Dim::THREE;
    let planes = wave_hyperplanes(n);
    let chunks = map_chunks(count as usize, |_, range| {
        let mut attempts = 0u64;
        let mut with_eq = 0u64;
        let mut retained = 0u64;
        let mut failing = 0u64;
        let mut bad = Vec::new();
        for i in range {
            let mut rng = substream(seed, &[0x52554c45, i as u64]);
            for _ in 0..MAX_ATTEMPTS {
                attempts += 1;
                let m = face_biased_wave_sample(&mut rng, denominator_bound, &planes);
                let statuses = evaluate_conditions(&m, n);
                if statuses.iter().any(|c| c.is_violated()) {
                    continue;
                }
                retained += 1;
                if statuses.iter().any(|c| c.is_equality()) {
                    with_eq += 1;
                }
                let grouped = grouped_from_statuses(&statuses);
                let exceptions = exceptions_from_statuses(&m, n, &statuses);
                if !grouped.passed() {
                    failing += 1;
                }
                if grouped.passed() != exceptions.passed() {
                    bad.push(Disagreement {
                        matrix: m,
                        grouped,
                        exceptions,
                    });
                }
                break;
            }
        }
        (attempts, retained, with_eq, failing, bad)
    });
    let mut report = EquivalenceReport {
        samples: 0,
        retained: 0,
        with_equalities: 0,
        grouped_failures: 0,
        agreements: 0,
        disagreements: Vec::new(),
    };
    for (attempts, retained, with_eq, failing, bad) in chunks {
        report.grouped_failures += failing;
        report.samples += attempts;
        report.retained += retained;
        report.with_equalities += with_eq;
        report.agreements += retained - bad.len() as u64;
        report.disagreements.extend(bad);
    }
    report
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HsEquivalenceReport {
    pub samples: u64,
    pub retained: u64,
    pub with_equalities: u64,
    pub agreements: u64,
    pub disagreements: Vec<HsDisagreement>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HsDisagreement {
    pub s: [Rational; 3],
    pub report: HsRuleReport,
}

fn face_biased_hs_sample(rng: &mut impl Rng, bound: u32, n: Dim) -> [Rational; 3] {
    let d = sample_denominator(rng, bound);
    let mut s: [Rational; 3] = std::array::from_fn(|_| random_entry(rng, d, -2, 3));
    let half_n = n.as_rational() * q(1, 2);
    for _ in 0..rng.gen_range(0..=2) {
        let i = rng.gen_range(0..3);
        match rng.gen_range(0..3) {
            // sum = n/2
            0 => {
                let rest: Rational = (0..3).filter(|&k| k != i).map(|k| s[k].clone()).sum();
                s[i] = &half_n - rest;
            }
            // pair sum = 0
            1 => {
                let j = (i + 1 + rng.gen_range(0..2)) % 3;
                s[i] = -&s[j];
            }
            // single entry = n/2
            _ => s[i] = half_n.clone(),
        }
    }
    s
}

/// Agreement of the three `H^s` formulations over `count` retained samples.
pub fn hs_equivalence_sample(
    count: u64,
    seed: u64,
    denominator_bound: u32,
    n: Dim,
) -> HsEquivalenceReport {
    let chunks = map_chunks(count as usize, |_, range| {
        let mut attempts = 0u64;
        let mut retained = 0u64;
        let mut with_eq = 0u64;
        let mut bad = Vec::new();
        for i in range {
            let mut rng = substream(seed, &[0x4853, i as u64]);
            for _ in 0..MAX_ATTEMPTS {
                attempts += 1;
                let s = face_biased_hs_sample(&mut rng, denominator_bound, n);
                let st = hs_conditions(&s, n);
                if st.iter().any(|c| c.is_violated()) {
                    continue;
                }
                retained += 1;
                if st.iter().any(|c| c.is_equality()) {
                    with_eq += 1;
                }
                let report = hs_rule_check(&s, n).expect("inside");
                if !report.agree() {
                    bad.push(HsDisagreement { s, report });
                }
                break;
            }
        }
        (attempts, retained, with_eq, bad)
    });
    let mut report = HsEquivalenceReport {
        samples: 0,
        retained: 0,
        with_equalities: 0,
        agreements: 0,
        disagreements: Vec::new(),
    };
    for (attempts, retained, with_eq, bad) in chunks {
        report.samples += attempts;
        report.retained += retained;
        report.with_equalities += with_eq;
        report.agreements += retained - bad.len() as u64;
        report.disagreements.extend(bad);
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(text: &str) -> ExponentMatrix {
        text.parse().unwrap()
    }

    fn rules(o: &RuleOutcome) -> Vec<String> {
        match o {
            RuleOutcome::Pass => vec![],
            RuleOutcome::Fail { triggered } => triggered.iter().map(|f| f.rule.clone()).collect(),
        }
    }

    #[test]
    fn interior_passes_both() {
        let x = m("1,1,1;3/8,3/8,3/8");
        assert!(grouped_rules_verdict(&x).unwrap().passed());
        assert!(exception_list_verdict(&x).unwrap().passed());
    }

    #[test]
    fn edge_fails_both() {
        let x = m("1/3,1/3,1/3;1/4,1/4,1/2");
        let g = grouped_rules_verdict(&x).unwrap();
        let RuleOutcome::Fail { triggered } = &g else {
            panic!("expected failure")
        };
        let lhh = triggered.iter().find(|f| f.rule == "B58[LHH]").unwrap();
        assert_eq!(lhh.equalities, vec!["B54", "B55", "B56"]);

        let e = exception_list_verdict(&x).unwrap();
        let fired = rules(&e);
        assert!(fired.contains(&"B82".to_string()));
        assert!(fired.contains(&"B89".to_string()));
        let RuleOutcome::Fail { triggered } = &e else {
            unreachable!()
        };
        let b82 = triggered.iter().find(|f| f.rule == "B82").unwrap();
        assert_eq!(b82.equalities, vec!["B5", "B6"]);
    }

    #[test]
    fn single_face_passes_both() {
        let x = m("1/3,1/3,1/3;1/2,1/2,1/2");
        assert!(grouped_rules_verdict(&x).unwrap().passed());
        assert!(exception_list_verdict(&x).unwrap().passed());
    }

    #[test]
    fn outside_is_a_precondition_error() {
        let x = m("0,1/2,1/2;0,1/4,1/4");
        assert!(matches!(grouped_rules_verdict(&x), Err(Error::Violated(_))));
        assert!(matches!(
            exception_list_verdict(&x),
            Err(Error::Violated(_))
        ));
    }

    #[test]
    fn relabel_moves_tagged_conditions() {
        let swap01 = Perm::swap(0, 1);
        assert_eq!(relabel(B13, swap01), B14);
        assert_eq!(relabel(B16, Perm::swap(0, 2)), B18);
        assert_eq!(relabel(B6, Perm::swap(0, 2)), B8);
        assert_eq!(relabel(B5, swap01), B5);
    }

    #[test]
    fn hs_examples() {
        let n = Dim::THREE;
        let r = hs_rule_check(&[q(0, 1), q(3, 4), q(3, 4)], n).unwrap();
        assert!(r.strict_pairs.passed() && r.grouped.passed() && r.exceptions.passed());
        let r = hs_rule_check(&[q(0, 1), q(0, 1), q(3, 2)], n).unwrap();
        assert!(!r.strict_pairs.passed() && !r.grouped.passed() && !r.exceptions.passed());
        let r = hs_rule_check(&[q(2, 1), q(2, 1), q(2, 1)], n).unwrap();
        assert!(r.strict_pairs.passed() && r.grouped.passed() && r.exceptions.passed());
        assert!(hs_rule_check(&[q(0, 1), q(0, 1), q(0, 1)], n).is_err());
    }

    #[test]
    fn small_equivalence_run() {
        let r = rules_equivalence_sample(3000, 11, 24);
        assert_eq!(r.retained, 3000);
        assert!(
            r.disagreements.is_empty(),
            "{:?}",
            &r.disagreements[..r.disagreements.len().min(3)]
        );
        assert!(r.with_equalities * 4 >= r.retained);
    }

    #[test]
    fn equivalence_is_deterministic() {
        let a = rules_equivalence_sample(500, 3, 12);
        let b = rules_equivalence_sample(500, 3, 12);
        assert_eq!(a, b);
    }
}
