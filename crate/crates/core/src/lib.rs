//! Exact decision engine and numerical laboratory for product estimates in wave-Sobolev spaces `H^{s,b}`.

pub mod conditions;
pub mod counterexample;
pub mod dyadic;
pub mod error;
pub mod matrix;
pub mod mc;
pub mod oracle;
pub mod rational;
pub mod rules;
pub mod theorems;
pub mod trilinear;

pub use conditions::{
    classify_boundary, condition_table, evaluate_conditions, hs_conditions, BoundaryClass,
    ConditionId, ConditionStatus, LinearCondition, Status, Tags,
};
pub use counterexample::FamilyId;
pub use counterexample::{Estimate, ScalingReport};
pub use dyadic::{DyadicSumSpec, ScanReport, SumKind, SumParams, TableId};
pub use error::{Error, ParseRationalError, Result};
pub use matrix::{
    normalize_type, permute_columns, Dim, ExponentMatrix, Interaction, Perm, SignPair, TypeLabel,
};
pub use oracle::{
    cross_check, decide, decide_joined, decide_type_specific, reduction_plan, Agreement,
    CrossCheck, Provenance, TheoremHypothesisReport, Verdict,
};
pub use rational::{q, Rational};
pub use rules::{
    exception_list_verdict, grouped_rules_verdict, hs_rule_check, rules_equivalence_sample,
    RuleFailure, RuleOutcome,
};
pub use theorems::TheoremId;
pub use trilinear::{BlockReport, DyadicBlockSpec, IdentityReport, LeibnizReport, SplitReport};
