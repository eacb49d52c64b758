//! Product / not-product decisions: the general boundary-rule path, the type-specific path,
//! their cross-check, and the reduction of Type II matrices.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::conditions::{
    evaluate_conditions, tight_ids, violated_ids, ConditionId, ConditionStatus,
};
use crate::counterexample::{family_for, FamilyId};
use crate::error::{Error, Result};
use crate::matrix::{
    normalize_type, permute_columns, Dim, ExponentMatrix, Interaction, Perm, SignPair, TypeLabel,
};
use crate::mc::{map_chunks, substream};
use crate::rational::Rational;
use crate::rules::{
    grouped_rules_verdict_at, project, random_entry, sample_denominator, wave_hyperplanes,
    Hyperplane, RuleOutcome,
};
use crate::theorems::{
    check_thm1, check_thm2, check_thm3, check_thm4, check_thm5, thm5_applies, TheoremCheck,
    TheoremId,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    /// Proved in three space dimensions.
    Proved,
    /// Asserted for n = 1, 2 with the proof deferred elsewhere.
    StatedWithoutProofHere,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict")]
pub enum Verdict {
    Product {
        basis: TheoremId,
        provenance: Provenance,
    },
    NotProduct {
        violated: ConditionId,
        witness_family: FamilyId,
    },
    Unknown {
        tight: Vec<ConditionId>,
        failed_rules: Vec<String>,
    },
}

impl Verdict {
    pub fn is_product(&self) -> bool {
        matches!(self, Verdict::Product { .. })
    }

    pub fn is_not_product(&self) -> bool {
        matches!(self, Verdict::NotProduct { .. })
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Verdict::Product { .. } => "Product",
            Verdict::NotProduct { .. } => "NotProduct",
            Verdict::Unknown { .. } => "Unknown",
        }
    }

    /// Exit status used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Verdict::Product { .. } => 0,
            Verdict::NotProduct { .. } => 1,
            Verdict::Unknown { .. } => 2,
        }
    }
}

fn not_product(statuses: &[ConditionStatus]) -> Option<Verdict> {
    let violated = violated_ids(statuses);
    let first = *violated.first()?;
    Some(Verdict::NotProduct {
        violated: first,
        witness_family: family_for(first).expect("every wave condition has a family"),
    })
}

fn failed_rule_ids(outcome: &RuleOutcome) -> Vec<String> {
    match outcome {
        RuleOutcome::Pass => Vec::new(),
        RuleOutcome::Fail { triggered } => triggered.iter().map(|f| f.rule.clone()).collect(),
    }
}

/// Necessity from the 21 conditions, sufficiency from the grouped boundary rules.
pub fn decide(m: &ExponentMatrix, n: Dim) -> Verdict {
    let statuses = evaluate_conditions(m, n);
    if let Some(v) = not_product(&statuses) {
        return v;
    }
    let rules = grouped_rules_verdict_at(m, n).expect("no condition violated");
    if n.get() <= 3 && rules.passed() {
        let provenance = if n.get() == 3 {
            Provenance::Proved
        } else {
            Provenance::StatedWithoutProofHere
        };
        return Verdict::Product {
            basis: TheoremId::BThm2,
            provenance,
        };
    }
    Verdict::Unknown {
        tight: tight_ids(&statuses),
        failed_rules: failed_rule_ids(&rules),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TheoremHypothesisReport {
    pub normalized: ExponentMatrix,
    pub perm: Perm,
    /// Theorems consulted, in routing order (Type II may consult two).
    pub checks: Vec<TheoremCheck>,
}

impl TheoremHypothesisReport {
    pub fn proving_theorem(&self) -> Option<TheoremId> {
        self.checks.iter().find(|c| c.holds).map(|c| c.theorem)
    }
}

pub fn type_theorem_checks(normalized: &ExponentMatrix, label: TypeLabel) -> Vec<TheoremCheck> {
    match label {
        TypeLabel::Ia => vec![check_thm1(normalized)],
        TypeLabel::Ib => vec![check_thm2(normalized)],
        TypeLabel::Ic => vec![check_thm3(normalized)],
        TypeLabel::II => {
            let mut v = vec![check_thm4(normalized)];
            if thm5_applies(normalized) {
                v.push(check_thm5(normalized));
            }
            v
        }
        TypeLabel::Inadmissible => Vec::new(),
    }
}

/// Routes the normalized matrix to the theorem for its type (n = 3).
pub fn decide_type_specific(m: &ExponentMatrix) -> (TypeLabel, TheoremHypothesisReport, Verdict) {
    let (normalized, perm, label) = normalize_type(m);
    let checks = type_theorem_checks(&normalized, label);
    let report = TheoremHypothesisReport {
        normalized,
        perm,
        checks,
    };
    let verdict = if let Some(theorem) = report.proving_theorem() {
        Verdict::Product {
            basis: theorem,
            provenance: Provenance::Proved,
        }
    } else {
        let statuses = evaluate_conditions(m, Dim::THREE);
        not_product(&statuses).unwrap_or_else(|| Verdict::Unknown {
            tight: tight_ids(&statuses),
            failed_rules: report
                .checks
                .iter()
                .flat_map(|c| c.failed().into_iter().map(String::from))
                .collect(),
        })
    };
    (label, report, verdict)
}

/// Public verdict: Product if either path proves it.
pub fn decide_joined(m: &ExponentMatrix, n: Dim) -> Verdict {
    let general = decide(m, n);
    if n.get() != 3 || general.is_product() || general.is_not_product() {
        return general;
    }
    match decide_type_specific(m).2 {
        v @ Verdict::Product { .. } => v,
        _ => general,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Agreement {
    Match,
    /// The relaxed Type II theorem proves a matrix the general rules leave open.
    ExtensionOnly,
    Mismatch,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrossCheck {
    pub matrix: ExponentMatrix,
    pub type_label: TypeLabel,
    pub general: Verdict,
    pub type_specific: Verdict,
    pub agreement: Agreement,
}

pub fn cross_check(m: &ExponentMatrix) -> CrossCheck {
    let general = decide(m, Dim::THREE);
    let (label, _, type_specific) = decide_type_specific(m);
    let agreement = match (&general, &type_specific) {
        (Verdict::Product { .. }, Verdict::Product { .. })
        | (Verdict::NotProduct { .. }, Verdict::NotProduct { .. })
        | (Verdict::Unknown { .. }, Verdict::Unknown { .. }) => Agreement::Match,
        (
            Verdict::Unknown { .. },
            Verdict::Product {
                basis: TheoremId::PThm5,
                ..
            },
        ) => Agreement::ExtensionOnly,
        _ => Agreement::Mismatch,
    };
    CrossCheck {
        matrix: m.clone(),
        type_label: label,
        general,
        type_specific,
        agreement,
    }
}

/// Frequency/sign restriction attached to a reduced matrix.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Restriction {
    None,
    /// Signs `(+,+)` with `N0 << N1 ~ N2`.
    LowHighSigns {
        signs: SignPair,
    },
    Interaction {
        interaction: Interaction,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReducedMatrix {
    pub label: String,
    pub matrix: ExponentMatrix,
    pub restriction: Restriction,
    pub type_label: TypeLabel,
    /// Theorem 1 when the reduced `b` pattern is `(0, 0, +)`, Theorem 2 when `(0, +, +)`.
    pub check: Option<TheoremCheck>,
}

/// The six matrices whose product property implies that of a Type II matrix.
pub fn reduction_plan(m: &ExponentMatrix) -> Result<Vec<ReducedMatrix>> {
    let [s0, s1, s2] = &m.s;
    let [b0, b1, b2] = &m.b;
    if !(b0.is_negative() && b1.is_positive() && b2.is_positive()) {
        return Err(Error::NotTypeII);
    }
    let zero = Rational::zero();
    let mk = |s: [Rational; 3], b: [Rational; 3]| ExponentMatrix::new(s, b);
    let plan = [
        (
            "P1",
            mk(m.s.clone(), [zero.clone(), b0 + b1, b2.clone()]),
            Restriction::None,
        ),
        (
            "P2",
            mk(m.s.clone(), [zero.clone(), b1.clone(), b0 + b2]),
            Restriction::None,
        ),
        (
            "P3",
            mk(
                [s0.clone(), s1 + b0, s2.clone()],
                [zero.clone(), b1.clone(), b2.clone()],
            ),
            Restriction::LowHighSigns {
                signs: SignPair::PP,
            },
        ),
        (
            "P4",
            mk(
                [s0 + b0, s1.clone(), s2.clone()],
                [zero.clone(), b1.clone(), b2.clone()],
            ),
            Restriction::Interaction {
                interaction: Interaction::LHH,
            },
        ),
        (
            "P5",
            mk(
                [s0.clone(), s1 + b0, s2.clone()],
                [zero.clone(), b1.clone(), b2.clone()],
            ),
            Restriction::Interaction {
                interaction: Interaction::HLH,
            },
        ),
        (
            "P6",
            mk(
                [s0.clone(), s1.clone(), s2 + b0],
                [zero.clone(), b1.clone(), b2.clone()],
            ),
            Restriction::Interaction {
                interaction: Interaction::HHL,
            },
        ),
    ];
    Ok(plan
        .into_iter()
        .map(|(label, matrix, restriction)| {
            let (normalized, _, type_label) = normalize_type(&matrix);
            let check = match type_label {
                TypeLabel::Ia => Some(check_thm1(&normalized)),
                TypeLabel::Ib => Some(check_thm2(&normalized)),
                _ => None,
            };
            ReducedMatrix {
                label: label.to_string(),
                matrix,
                restriction,
                type_label,
                check,
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrossCheckReport {
    pub samples: u64,
    pub inside: u64,
    /// Sample counts for Ia, Ib, Ic, II, Inadmissible.
    pub by_type: [u64; 5],
    /// Same, restricted to samples satisfying all 21 conditions.
    pub inside_by_type: [u64; 5],
    pub matches: u64,
    pub extension_only: Vec<CrossCheck>,
    pub mismatches: Vec<CrossCheck>,
}

fn type_index(t: TypeLabel) -> usize {
    match t {
        TypeLabel::Ia => 0,
        TypeLabel::Ib => 1,
        TypeLabel::Ic => 2,
        TypeLabel::II => 3,
        TypeLabel::Inadmissible => 4,
    }
}

/// A matrix of a chosen sign pattern, pushed onto up to three faces or exceptional hyperplanes,
/// then columns shuffled.
fn typed_sample(rng: &mut impl Rng, bound: u32, planes: &[Hyperplane]) -> ExponentMatrix {
    let d = sample_denominator(rng, bound);
    let pos = |rng: &mut dyn rand::RngCore| {
        let k: i64 = rng.gen_range(1..=2 * d);
        Rational::new(k, d)
    };
    let zero = Rational::zero();
    let b: [Rational; 3] = match rng.gen_range(0..4) {
        0 => [zero.clone(), zero.clone(), pos(rng)],
        1 => [zero.clone(), pos(rng), pos(rng)],
        2 => [pos(rng), pos(rng), pos(rng)],
        _ => [-pos(rng), pos(rng), pos(rng)],
    };
    let mut x: [Rational; 6] = std::array::from_fn(|k| {
        if k < 3 {
            random_entry(rng, d, -1, 2)
        } else {
            b[k - 3].clone()
        }
    });
    for _ in 0..rng.gen_range(0..=3) {
        let h = &planes[rng.gen_range(0..planes.len())];
        project(&mut x, h, rng);
    }
    let [s0, s1, s2, b0, b1, b2] = x;
    let p = Perm::all()[rng.gen_range(0..6)];
    permute_columns(&ExponentMatrix::new([s0, s1, s2], [b0, b1, b2]), p)
}

/// Compares the general and type-specific paths on `count` samples spanning all four types.
pub fn cross_check_sample(count: u64, seed: u64, denominator_bound: u32) -> CrossCheckReport {
    let planes = wave_hyperplanes(Dim::THREE);
    let chunks = map_chunks(count as usize, |_, range| {
        let mut inside = 0u64;
        let mut by_type = [0u64; 5];
        let mut inside_by_type = [0u64; 5];
        let mut matches = 0u64;
        let mut ext = Vec::new();
        let mut bad = Vec::new();
        for i in range {
            let mut rng = substream(seed, &[0x5459_5045, i as u64]);
            let m = typed_sample(&mut rng, denominator_bound, &planes);
            let c = cross_check(&m);
            by_type[type_index(c.type_label)] += 1;
            if !c.general.is_not_product() {
                inside += 1;
                inside_by_type[type_index(c.type_label)] += 1;
            }
            match c.agreement {
                Agreement::Match => matches += 1,
                Agreement::ExtensionOnly => ext.push(c),
                Agreement::Mismatch => bad.push(c),
            }
        }
        (inside, by_type, inside_by_type, matches, ext, bad)
    });
    let mut report = CrossCheckReport {
        samples: count,
        inside: 0,
        by_type: [0; 5],
        inside_by_type: [0; 5],
        matches: 0,
        extension_only: Vec::new(),
        mismatches: Vec::new(),
    };
    for (inside, by_type, inside_by_type, matches, ext, bad) in chunks {
        report.inside += inside;
        for k in 0..5 {
            report.by_type[k] += by_type[k];
            report.inside_by_type[k] += inside_by_type[k];
        }
        report.matches += matches;
        report.extension_only.extend(ext);
        report.mismatches.extend(bad);
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;

    fn m(text: &str) -> ExponentMatrix {
        text.parse().unwrap()
    }

    #[test]
    fn decide_examples() {
        let n = Dim::THREE;
        assert_eq!(
            decide(&m("1,1,1;3/8,3/8,3/8"), n),
            Verdict::Product {
                basis: TheoremId::BThm2,
                provenance: Provenance::Proved
            }
        );
        assert_eq!(
            decide(&m("0,1/2,1/2;0,1/4,1/4"), n),
            Verdict::NotProduct {
                violated: ConditionId::B5,
                witness_family: FamilyId::new(3).unwrap()
            }
        );
        let Verdict::Unknown {
            tight,
            failed_rules,
        } = decide(&m("1/3,1/3,1/3;1/4,1/4,1/2"), n)
        else {
            panic!("expected Unknown")
        };
        assert_eq!(
            tight,
            vec![ConditionId::B5, ConditionId::B6, ConditionId::B12]
        );
        assert!(failed_rules.contains(&"B58[LHH]".to_string()));
    }

    #[test]
    fn low_dimensions_are_not_proved_here() {
        let n = Dim::new(1).unwrap();
        let v = decide(&m("1,1,1;1,1,1"), n);
        assert_eq!(
            v,
            Verdict::Product {
                basis: TheoremId::BThm2,
                provenance: Provenance::StatedWithoutProofHere
            }
        );
        let v4 = decide(&m("5,5,5;1,1,1"), Dim::new(4).unwrap());
        assert!(matches!(v4, Verdict::Unknown { .. }));
    }

    #[test]
    fn type_specific_examples() {
        let (label, _, v) = decide_type_specific(&m("1/2,1/2,1/2;-1/4,1/2,1/2"));
        assert_eq!(label, TypeLabel::II);
        assert!(matches!(
            v,
            Verdict::Product {
                basis: TheoremId::PThm4,
                ..
            }
        ));

        let (label, report, v) = decide_type_specific(&m("3/4,1/4,1/4;-1/4,3/4,3/4"));
        assert_eq!(label, TypeLabel::II);
        assert_eq!(report.checks.len(), 2);
        assert!(matches!(
            v,
            Verdict::Product {
                basis: TheoremId::PThm5,
                ..
            }
        ));

        let (label, _, v) = decide_type_specific(&m("1/2,1/2,1/2;0,0,3/4"));
        assert_eq!(label, TypeLabel::Ia);
        assert!(matches!(
            v,
            Verdict::Product {
                basis: TheoremId::PThm1,
                ..
            }
        ));
    }

    #[test]
    fn cross_check_examples() {
        assert_eq!(cross_check(&m("1,1,1;1,1,1")).agreement, Agreement::Match);
        let c = cross_check(&m("3/4,1/4,1/4;-1/4,3/4,3/4"));
        assert_eq!(c.agreement, Agreement::ExtensionOnly);
        let Verdict::Unknown { failed_rules, .. } = &c.general else {
            panic!("general path should be open")
        };
        assert!(failed_rules.contains(&"B65[LHH]".to_string()));
        assert_eq!(
            cross_check(&m("0,1/2,1/2;0,1/4,1/4")).agreement,
            Agreement::Match
        );
    }

    #[test]
    fn joined_verdict_uses_relaxed_theorem() {
        let v = decide_joined(&m("3/4,1/4,1/4;-1/4,3/4,3/4"), Dim::THREE);
        assert!(matches!(
            v,
            Verdict::Product {
                basis: TheoremId::PThm5,
                ..
            }
        ));
    }

    #[test]
    fn reduction_examples() {
        let plan = reduction_plan(&m("1/2,1/2,1/2;-1/4,1/2,1/2")).unwrap();
        assert_eq!(plan.len(), 6);
        assert_eq!(plan[0].matrix, m("1/2,1/2,1/2;0,1/4,1/2"));
        assert_eq!(plan[0].restriction, Restriction::None);
        assert_eq!(plan[3].matrix, m("1/4,1/2,1/2;0,1/2,1/2"));
        assert_eq!(
            plan[3].restriction,
            Restriction::Interaction {
                interaction: Interaction::LHH
            }
        );

        let plan = reduction_plan(&m("1,1,1;-1/4,1/4,1")).unwrap();
        assert_eq!(plan[0].matrix.b, [q(0, 1), q(0, 1), q(1, 1)]);
        assert_eq!(plan[0].type_label, TypeLabel::Ia);
        assert_eq!(plan[0].check.as_ref().unwrap().theorem, TheoremId::PThm1);

        assert!(matches!(
            reduction_plan(&m("1,1,1;1,1,1")),
            Err(Error::NotTypeII)
        ));
    }
}
