use hsb_core::conditions::{condition_table, violated_ids};
use hsb_core::counterexample::{family_for, witness_slope, FamilyId};
use hsb_core::dyadic::{dyadic_sum_bruteforce, DyadicSumSpec, SumKind, SumParams, TailMode};
use hsb_core::mc::substream;
use hsb_core::rules::{compare_rules, relabel};
use hsb_core::theorems::check_thm3;
use hsb_core::trilinear::{
    defect_bound, interaction_membership, leibniz_defect, random_triple, split_estimate, tau_signs,
    COMPARABILITY_FACTOR, DEFECT_CONSTANT,
};
use hsb_core::{
    classify_boundary, decide, decide_type_specific, evaluate_conditions, exception_list_verdict,
    grouped_rules_verdict, hs_rule_check, normalize_type, permute_columns, BoundaryClass, Dim,
    ExponentMatrix, Perm, Rational, Status, TheoremId, TypeLabel, Verdict,
};
use proptest::prelude::*;
use rand::Rng;
use std::collections::BTreeSet;

/// Rationals `k/d` with small denominators, so faces and edges are hit often.
fn grid() -> impl Strategy<Value = Rational> {
    prop_oneof![Just(2i64), Just(3), Just(4), Just(6), Just(8), Just(12)]
        .prop_flat_map(|d| (-d..=2 * d).prop_map(move |k| Rational::new(k, d)))
}

fn matrix() -> impl Strategy<Value = ExponentMatrix> {
    ([grid(), grid(), grid()], [grid(), grid(), grid()])
        .prop_map(|(s, b)| ExponentMatrix::new(s, b))
}

fn perm() -> impl Strategy<Value = Perm> {
    (0usize..6).prop_map(|i| Perm::all()[i])
}

fn status_counts(m: &ExponentMatrix) -> [usize; 3] {
    let mut c = [0; 3];
    for st in evaluate_conditions(m, Dim::THREE) {
        c[match st.status {
            Status::Strict => 0,
            Status::Equality => 1,
            Status::Violated => 2,
        }] += 1;
    }
    c
}

fn violated_set(m: &ExponentMatrix) -> BTreeSet<String> {
    violated_ids(&evaluate_conditions(m, Dim::THREE))
        .into_iter()
        .map(|id| format!("{id:?}"))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn rational_round_trips(p in -1_000_000_000i64..=1_000_000_000, d in 1i64..=1_000_000_000) {
        let r = Rational::new(p, d);
        let printed = r.to_string();
        prop_assert_eq!(printed.parse::<Rational>().unwrap(), r.clone());
        prop_assert_eq!(format!("{p}/{d}").parse::<Rational>().unwrap(), r.clone());
        let json = serde_json::to_string(&r).unwrap();
        prop_assert_eq!(serde_json::from_str::<Rational>(&json).unwrap(), r);
    }

    #[test]
    fn type_label_is_permutation_invariant(m in matrix()) {
        let (normalized, _, label) = normalize_type(&m);
        for p in Perm::all() {
            prop_assert_eq!(normalize_type(&permute_columns(&m, p)).2, label);
        }
        let (again, p2, label2) = normalize_type(&normalized);
        prop_assert_eq!(&again, &normalized);
        prop_assert!(p2.is_identity());
        prop_assert_eq!(label2, label);
    }

    #[test]
    fn condition_statuses_are_a_permutation_invariant_multiset(m in matrix(), p in perm()) {
        prop_assert_eq!(status_counts(&m), status_counts(&permute_columns(&m, p)));
    }

    #[test]
    fn condition_evaluation_is_pure(m in matrix()) {
        let a = evaluate_conditions(&m, Dim::THREE);
        let b = evaluate_conditions(&m.clone(), Dim::THREE);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn boundary_class_matches_counts(m in matrix()) {
        let [_, eq, viol] = status_counts(&m);
        let class = classify_boundary(&evaluate_conditions(&m, Dim::THREE));
        let ok = match class {
            BoundaryClass::Interior => eq == 0 && viol == 0,
            BoundaryClass::Face { .. } => eq == 1 && viol == 0,
            BoundaryClass::Edge { tight } => eq >= 2 && viol == 0 && tight.len() == eq,
            BoundaryClass::Outside { violated } => viol >= 1 && violated.len() == viol,
        };
        prop_assert!(ok);
    }

    #[test]
    fn violation_survives_moving_against_the_condition(m in matrix(), t in 1i64..=16) {
        let statuses = evaluate_conditions(&m, Dim::THREE);
        let step = Rational::new(t, 8);
        for c in condition_table(Dim::THREE) {
            let st = statuses.iter().find(|s| s.id == c.id).unwrap();
            if st.status != Status::Violated {
                continue;
            }
            let mut moved = m.clone();
            for j in 0..3 {
                moved.s[j] = &moved.s[j] - &(&step * &c.sigma[j]);
                moved.b[j] = &moved.b[j] - &(&step * &c.beta[j]);
            }
            prop_assert!(c.evaluate(&moved, Dim::THREE).is_violated());
        }
    }

    #[test]
    fn grouped_rules_equal_exception_list_inside(m in matrix()) {
        if let Ok(d) = compare_rules(&m) {
            prop_assert!(d.is_none(), "{:?}", d);
        }
    }

    #[test]
    fn rule_verdicts_are_permutation_invariant(m in matrix(), p in perm()) {
        let pm = permute_columns(&m, p);
        if let (Ok(a), Ok(b)) = (grouped_rules_verdict(&m), grouped_rules_verdict(&pm)) {
            prop_assert_eq!(a.passed(), b.passed());
        }
        if let (Ok(a), Ok(b)) = (exception_list_verdict(&m), exception_list_verdict(&pm)) {
            prop_assert_eq!(a.passed(), b.passed());
        }
    }

    #[test]
    fn no_equality_means_both_rule_sets_pass(m in matrix()) {
        if status_counts(&m) == [21, 0, 0] {
            prop_assert!(grouped_rules_verdict(&m).unwrap().passed());
            prop_assert!(exception_list_verdict(&m).unwrap().passed());
        }
    }

    #[test]
    fn hs_formulations_agree(s in [grid(), grid(), grid()], n in 1u32..=3) {
        let report = hs_rule_check(&s, Dim::new(n).unwrap());
        if let Ok(r) = report {
            prop_assert!(r.agree(), "{:?}", r);
        }
    }

    #[test]
    fn decide_is_permutation_invariant(m in matrix(), p in perm()) {
        let pm = permute_columns(&m, p);
        let (a, b) = (decide(&m, Dim::THREE), decide(&pm, Dim::THREE));
        prop_assert_eq!(a.kind(), b.kind());
        match (&a, &b) {
            (Verdict::NotProduct { .. }, Verdict::NotProduct { violated, witness_family: fb }) => {
                let back = relabel(*violated, p);
                let key = format!("{back:?}");
                prop_assert!(violated_set(&m).contains(&key));
                prop_assert_eq!(family_for(back), Some(*fb));
            }
            (Verdict::Unknown { tight: ta, .. }, Verdict::Unknown { tight: tb, .. }) => {
                let lhs: BTreeSet<String> = ta.iter().map(|id| format!("{id:?}")).collect();
                let rhs: BTreeSet<String> = tb.iter().map(|&id| format!("{:?}", relabel(id, p))).collect();
                prop_assert_eq!(lhs, rhs);
            }
            _ => {}
        }
    }

    #[test]
    fn decide_is_sound(m in matrix(), n in 1u32..=3) {
        let dim = Dim::new(n).unwrap();
        let statuses = evaluate_conditions(&m, dim);
        let any_violated = statuses.iter().any(|s| s.is_violated());
        let v = decide(&m, dim);
        prop_assert!(!(any_violated && v.is_product()));
        prop_assert!(!(!any_violated && v.is_not_product()));
        if let Verdict::NotProduct { violated, witness_family } = v {
            prop_assert!(statuses.iter().any(|s| s.id == violated && s.is_violated()));
            prop_assert_eq!(family_for(violated), Some(witness_family));
        }
    }

    #[test]
    fn admissible_region_has_a_type(m in matrix()) {
        if status_counts(&m)[2] == 0 {
            let label = normalize_type(&m).2;
            prop_assert!(matches!(label, TypeLabel::Ia | TypeLabel::Ib | TypeLabel::Ic | TypeLabel::II));
        }
    }

    #[test]
    fn type_specific_product_never_contradicts_conditions(m in matrix()) {
        let (_, _, v) = decide_type_specific(&m);
        if v.is_product() {
            prop_assert_eq!(status_counts(&m)[2], 0);
        }
    }

    #[test]
    fn violated_condition_has_growing_witness(m in matrix()) {
        if status_counts(&m)[2] > 0 {
            let (_, slope) = witness_slope(&m, Dim::THREE).unwrap();
            prop_assert!(slope.is_positive(), "slope {}", slope);
        }
    }
}

fn thm3_consequences(m: &ExponentMatrix) -> bool {
    let [s0, s1, s2] = &m.s;
    let weighted = s0 + &(Rational::from_int(2) * &(s1 + s2));
    let full = &weighted + &m.b_sum();
    weighted > Rational::one() && full > Rational::from_int(2)
}

#[test]
fn thm3_hypotheses_imply_strict_remark_bounds() {
    let mut rng = substream(7, &[0x424]);
    let mut hits = 0;
    for _ in 0..200_000 {
        let mut pick = |lo: i64, hi: i64| Rational::new(rng.gen_range(lo..=hi), 12);
        let s = [pick(-6, 18), pick(-6, 18), pick(-6, 18)];
        let b = [pick(1, 12), pick(1, 12), pick(1, 12)];
        let m = ExponentMatrix::new(s, b);
        let (label, report, verdict) = decide_type_specific(&m);
        if label != TypeLabel::Ic {
            continue;
        }
        let holds = report
            .checks
            .iter()
            .any(|c| c.theorem == TheoremId::PThm3 && c.holds);
        if holds {
            hits += 1;
            assert!(
                thm3_consequences(&report.normalized),
                "{}",
                m.to_wire_string()
            );
            assert!(verdict.is_product());
        }
        if check_thm3(&m).holds {
            assert!(thm3_consequences(&m), "{}", m.to_wire_string());
        }
    }
    assert!(hits > 1000, "only {hits} matrices satisfied the hypotheses");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sigma_is_nondecreasing_and_gamma_nonincreasing(
        p in grid(), b1 in grid(), b2 in grid(),
    ) {
        let params = SumParams { p, b0: Rational::zero(), b1, b2, a: Rational::zero() };
        let eval = |kind, n_exp, aux_exp| {
            dyadic_sum_bruteforce(&DyadicSumSpec {
                kind,
                params: params.clone(),
                n_exp,
                aux_exp,
                tail: TailMode::ClosedForm,
            })
        };
        if eval(SumKind::SigmaP, 0, 0).is_ok() {
            let mut last = 0.0;
            for n in 0..24 {
                let v = eval(SumKind::SigmaP, n, 0).unwrap();
                prop_assert!(v >= last * (1.0 - 1e-12));
                last = v;
            }
        }
        if eval(SumKind::Gamma, 0, 0).is_ok() {
            let mut last = f64::INFINITY;
            for n in 0..24 {
                let v = eval(SumKind::Gamma, n, 0).unwrap();
                prop_assert!(v <= last * (1.0 + 1e-12));
                last = v;
            }
        }
        let b_sum = &params.b1 + &params.b2;
        if b_sum > Rational::half() {
            if let Ok(at_one) = eval(SumKind::GammaAB, 30, 0) {
                let mut last = at_one;
                for a in 1..=30 {
                    let v = eval(SumKind::GammaAB, 30, a).unwrap();
                    prop_assert!(v <= at_one * (1.0 + 1e-12));
                    prop_assert!(v <= last * (1.0 + 1e-12));
                    last = v;
                }
                prop_assert!(last < at_one);
            }
        }
    }

    #[test]
    fn sign_pieces_partition_the_total(m in matrix(), family in 1u8..=9, seed in any::<u64>()) {
        let id = FamilyId::new(family).unwrap();
        let r = split_estimate(id, &m, 32.0, Dim::THREE, 2000, seed).unwrap();
        prop_assert!(r.sign_partition_error() <= 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn defect_is_nonnegative_and_bounded(seed in any::<u64>(), n in 1usize..=3) {
        let mut rng = substream(seed, &[0xDEF]);
        for _ in 0..256 {
            let x = random_triple(n, &mut rng);
            let signs = tau_signs(&x[1], &x[2]);
            let b = leibniz_defect(&x[0].xi, &x[1].xi, &x[2].xi, signs).unwrap();
            let bound = defect_bound(x[0].norm(), x[1].norm(), x[2].norm(), signs);
            let scale = x[0].norm() + x[1].norm() + x[2].norm();
            prop_assert!(b >= 0.0);
            prop_assert!(b <= DEFECT_CONSTANT * bound + 1e-12 * scale, "{b} vs {bound}");
        }
    }

    #[test]
    fn two_largest_brackets_are_comparable(seed in any::<u64>(), n in 1usize..=3) {
        let mut rng = substream(seed, &[0xC0]);
        for _ in 0..256 {
            let x = random_triple(n, &mut rng);
            let mut br = x.map(|p| (1.0 + p.norm() * p.norm()).sqrt());
            let membership = interaction_membership(br, COMPARABILITY_FACTOR);
            prop_assert!(membership.iter().any(|&b| b));
            br.sort_by(f64::total_cmp);
            prop_assert!(br[2] <= COMPARABILITY_FACTOR * br[1]);
        }
    }
}

#[test]
fn zero_matrix_estimate_is_the_volume_product() {
    use hsb_core::counterexample::{estimate_i, family_regions};
    for k in 1..=9 {
        let id = FamilyId::new(k).unwrap();
        for lambda in [16.0, 128.0] {
            let t = family_regions(id, lambda, Dim::THREE).unwrap();
            let [va, vb, _] = t.volumes();
            let e = estimate_i(id, &ExponentMatrix::zero(), lambda, Dim::THREE, 500, 1).unwrap();
            assert!(
                (e.i_hat - va * vb).abs() <= 1e-12 * va * vb,
                "F{k} at {lambda}"
            );
            assert!(e.stderr <= 1e-12 * va * vb);
        }
    }
}
