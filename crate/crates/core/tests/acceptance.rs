//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

use hsb_core::conditions::violated_ids;
use hsb_core::counterexample::{
    containment_check, family_for, matrix_with_slope, necessity_report, DEFAULT_LAMBDAS,
    SLOPE_TOLERANCE,
};
use hsb_core::dyadic::{
    ratio_scan, sample_row_params, scan_aux, totality_fuzz, TableId, ROW_MARGIN,
};
use hsb_core::mc::substream;
use hsb_core::oracle::cross_check_sample;
use hsb_core::rules::{hs_equivalence_sample, relabel, rules_equivalence_sample};
use hsb_core::trilinear::{
    block_grid, dyadic_block_check, leibniz_inequality_scan, sign_identities_check, split_estimate,
    BLOCK_RATIO_CAP, LEIBNIZ_TRAINING_SEED,
};
use hsb_core::{
    decide, decide_type_specific, evaluate_conditions, exception_list_verdict,
    grouped_rules_verdict, permute_columns, q, Dim, ExponentMatrix, FamilyId, Perm, Rational,
    TheoremId, TypeLabel, Verdict,
};
use rand::Rng;
use std::time::{Duration, Instant};

const SEED: u64 = 20_261_015;

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn rules_equivalence() -> Outcome {
    let start = Instant::now();
    let r = rules_equivalence_sample(100_000, SEED, 12);
    let elapsed = start.elapsed();
    outcome(
        r.retained >= 100_000 && r.disagreements.is_empty() && elapsed <= Duration::from_secs(60),
        format!(
            "retained={} with_equalities={} grouped_failures={} disagreements={} in {:.1}s (limit 60s)",
            r.retained,
            r.with_equalities,
            r.grouped_failures,
            r.disagreements.len(),
            elapsed.as_secs_f64()
        ),
    )
}

fn hs_equivalence() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for n in 1..=3 {
        let r = hs_equivalence_sample(100_000, SEED, 12, Dim::new(n).unwrap());
        pass &= r.retained >= 100_000 && r.disagreements.is_empty();
        parts.push(format!(
            "n={n}: retained={} with_equalities={} disagreements={}",
            r.retained,
            r.with_equalities,
            r.disagreements.len()
        ));
    }
    outcome(pass, parts.join("; "))
}

fn random_matrix(rng: &mut impl Rng) -> ExponentMatrix {
    let d = [2i64, 3, 4, 6, 8, 12][rng.gen_range(0..6)];
    let mut entry = || Rational::new(rng.gen_range(-d..=2 * d), d);
    ExponentMatrix::new([entry(), entry(), entry()], [entry(), entry(), entry()])
}

fn same_up_to_relabel(m: &ExponentMatrix, base: &Verdict, permuted: &Verdict, p: Perm) -> bool {
    match (base, permuted) {
        (Verdict::Product { basis: a, .. }, Verdict::Product { basis: b, .. }) => a == b,
        (
            Verdict::NotProduct { .. },
            Verdict::NotProduct {
                violated,
                witness_family,
            },
        ) => {
            let back = relabel(*violated, p);
            violated_ids(&evaluate_conditions(m, Dim::THREE)).contains(&back)
                && family_for(back) == Some(*witness_family)
        }
        (Verdict::Unknown { tight: a, .. }, Verdict::Unknown { tight: b, .. }) => {
            let mut mapped: Vec<_> = b.iter().map(|&id| relabel(id, p)).collect();
            let mut a = a.clone();
            mapped.sort_by_key(|id| id.number());
            a.sort_by_key(|id| id.number());
            a == mapped
        }
        _ => false,
    }
}

fn permutation_invariance() -> Outcome {
    let mut rng = substream(SEED, &[3]);
    let mut mismatches = 0;
    let mut rule_mismatches = 0;
    let mut kinds = [0usize; 3];
    for _ in 0..10_000 {
        let m = random_matrix(&mut rng);
        let base = decide(&m, Dim::THREE);
        kinds[match base {
            Verdict::Product { .. } => 0,
            Verdict::NotProduct { .. } => 1,
            Verdict::Unknown { .. } => 2,
        }] += 1;
        let rules = (grouped_rules_verdict(&m), exception_list_verdict(&m));
        for p in Perm::all() {
            let pm = permute_columns(&m, p);
            if !same_up_to_relabel(&m, &base, &decide(&pm, Dim::THREE), p) {
                mismatches += 1;
            }
            if let (Ok(g), Ok(e)) = (&rules.0, &rules.1) {
                let pg = grouped_rules_verdict(&pm).unwrap();
                let pe = exception_list_verdict(&pm).unwrap();
                if pg.passed() != g.passed() || pe.passed() != e.passed() {
                    rule_mismatches += 1;
                }
            }
        }
    }
    outcome(
        mismatches == 0 && rule_mismatches == 0,
        format!(
            "10000 matrices x 6 permutations (product={} not_product={} unknown={}): verdict mismatches={mismatches} rule mismatches={rule_mismatches}",
            kinds[0], kinds[1], kinds[2]
        ),
    )
}

fn cross_check() -> Outcome {
    let r = cross_check_sample(100_000, SEED, 12);
    let scoped = r.extension_only.iter().all(|c| {
        let (normalized, _, label) = hsb_core::normalize_type(&c.matrix);
        label == TypeLabel::II && normalized.b[1] > q(1, 2) && normalized.b[2] > q(1, 2)
    });
    let worked: ExponentMatrix = "3/4,1/4,1/4;-1/4,3/4,3/4".parse().unwrap();
    let general = decide(&worked, Dim::THREE);
    let (_, _, specific) = decide_type_specific(&worked);
    let worked_ok = matches!(general, Verdict::Unknown { .. })
        && matches!(
            specific,
            Verdict::Product {
                basis: TheoremId::PThm5,
                ..
            }
        );
    outcome(
        r.mismatches.is_empty() && scoped && worked_ok,
        format!(
            "samples={} inside={} by_type(Ia,Ib,Ic,II,inadmissible)={:?} matches={} extension_only={} (all Type II, b1,b2>1/2: {scoped}) mismatches={}; worked pair general={} type_specific={}",
            r.samples,
            r.inside,
            r.by_type,
            r.matches,
            r.extension_only.len(),
            r.mismatches.len(),
            general.kind(),
            specific.kind()
        ),
    )
}

fn counterexample_scaling() -> Outcome {
    let start = Instant::now();
    let mut failures = Vec::new();
    let mut worst: f64 = 0.0;
    let mut containment = 0;
    for k in 1..=9 {
        let id = FamilyId::new(k).unwrap();
        let n = Dim::THREE;
        for &lambda in &DEFAULT_LAMBDAS {
            containment += containment_check(id, lambda, n, 200_000, SEED).unwrap();
        }
        for target in [q(0, 1), q(1, 8), q(-1, 8)] {
            let m = matrix_with_slope(id, n, &target);
            let r = necessity_report(id, &m, &DEFAULT_LAMBDAS, n, 200_000, SEED, SLOPE_TOLERANCE)
                .unwrap();
            containment += r.containment_violations;
            worst = worst.max((r.slope - r.predicted_slope).abs());
            if !r.pass {
                failures.push(format!(
                    "F{k} target {target}: slope {:.4} vs {:.4}",
                    r.slope, r.predicted_slope
                ));
            }
        }
    }
    let elapsed = start.elapsed();
    outcome(
        failures.is_empty() && containment == 0 && elapsed <= Duration::from_secs(300),
        format!(
            "27 reports, worst |slope - predicted| = {worst:.4} (tolerance {SLOPE_TOLERANCE}), containment violations={containment}, {:.1}s (limit 300s){}",
            elapsed.as_secs_f64(),
            if failures.is_empty() { String::new() } else { format!("; failing: {}", failures.join(", ")) }
        ),
    )
}

fn dyadic_tables() -> Outcome {
    let mut failures = Vec::new();
    let mut rows = 0;
    let mut scans = 0;
    let mut totality_failures = 0;
    for t in TableId::ALL {
        for i in 0..t.rows().len() {
            rows += 1;
            let params = sample_row_params(t, i, 3, ROW_MARGIN, SEED);
            if params.len() < 3 {
                failures.push(format!("{t:?} row {i}: only {} tuples", params.len()));
            }
            for p in &params {
                scans += 1;
                match ratio_scan(t.kind(), p, scan_aux(t, 20), 6..=20) {
                    Ok(r) if r.pass && r.prediction.row == i => {}
                    Ok(r) => failures.push(format!(
                        "{t:?} row {i}: slope {:.3} vs {:.3}, ratio [{:.3}, {:.3}], row {}",
                        r.slope, r.predicted_slope, r.min_ratio, r.max_ratio, r.prediction.row
                    )),
                    Err(e) => failures.push(format!("{t:?} row {i}: {e}")),
                }
            }
        }
        let fuzz = totality_fuzz(t, 100_000, SEED);
        totality_failures += fuzz.failures;
        if fuzz.failures > 0 {
            failures.push(format!(
                "{t:?}: {} tuples without exactly one row",
                fuzz.failures
            ));
        }
    }
    outcome(
        failures.is_empty(),
        format!(
            "{rows} rows, {scans} scans over N=2^6..2^20, totality 10^5 tuples x {} tables with {totality_failures} failures{}",
            TableId::ALL.len(),
            if failures.is_empty() { String::new() } else { format!("; failing: {}", failures.join("; ")) }
        ),
    )
}

fn leibniz() -> Outcome {
    let seed = SEED ^ 0x5A5A;
    assert_ne!(seed, LEIBNIZ_TRAINING_SEED);
    let r = leibniz_inequality_scan(1_000_000, seed, Dim::THREE).unwrap();
    outcome(
        r.pass && r.defect_violations == 0 && r.modulation_violations == 0,
        format!(
            "10^6 triples on seed {seed:#x}: max_ratio_N92={:.9} (constant {}), max_ratio_N96={:.6} (constant {}), violations {}/{}, skipped {}",
            r.max_ratio_n92,
            r.modulation_constant,
            r.max_ratio_n96,
            r.defect_constant,
            r.modulation_violations,
            r.defect_violations,
            r.skipped
        ),
    )
}

fn sign_identities() -> Outcome {
    let r = sign_identities_check(1_000_000, SEED, Dim::THREE).unwrap();
    outcome(
        r.pass && r.violations.iter().all(|&v| v == 0),
        format!(
            "10^6 triples: violations={:?} at tolerance {:e}, max residual {:.2e}",
            r.violations, r.tolerance, r.max_residual
        ),
    )
}

fn splitting() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for k in [1, 3, 8] {
        let id = FamilyId::new(k).unwrap();
        let m = matrix_with_slope(id, Dim::THREE, &q(0, 1));
        let r = split_estimate(id, &m, 64.0, Dim::THREE, 200_000, SEED).unwrap();
        let partition = r.sign_partition_error();
        let consistent = r.interaction_consistent(3.0);
        pass &= partition <= 1e-12 && consistent;
        parts.push(format!(
            "F{k}: sign partition error {partition:.1e}, interaction bounds {consistent}"
        ));
    }
    outcome(pass, parts.join("; "))
}

fn dyadic_blocks() -> Outcome {
    let grid = block_grid();
    let mut worst: f64 = 0.0;
    let mut failures = Vec::new();
    for (k, spec) in grid.iter().enumerate() {
        match dyadic_block_check(spec, 1_000_000, SEED) {
            Ok(r) => {
                let ratios = [
                    Some(r.ratios.sobolev),
                    r.ratios.wave,
                    r.ratios.wave_low_output,
                ];
                let max = ratios.iter().flatten().fold(0.0f64, |a, &b| a.max(b));
                worst = worst.max(max);
                if !r.pass || max > BLOCK_RATIO_CAP {
                    failures.push(format!("spec {k}: ratio {max:.3}"));
                }
            }
            Err(e) => failures.push(format!("spec {k}: {e}")),
        }
    }
    outcome(
        grid.len() >= 12 && failures.is_empty(),
        format!(
            "{} specs at 10^6 samples, worst ratio {worst:.3} (cap {BLOCK_RATIO_CAP}){}",
            grid.len(),
            if failures.is_empty() {
                String::new()
            } else {
                format!("; failing: {}", failures.join(", "))
            }
        ),
    )
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("1 rule-formulation equivalence", rules_equivalence),
        ("2 H^s formulation equivalence", hs_equivalence),
        ("3 permutation invariance", permutation_invariance),
        ("4 type-theorem cross-check", cross_check),
        ("5 counterexample scaling", counterexample_scaling),
        ("6 dyadic tables", dyadic_tables),
        ("7 hyperbolic Leibniz", leibniz),
        ("8 sign identities", sign_identities),
        ("9 splitting consistency", splitting),
        ("10 dyadic blocks", dyadic_blocks),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let start = Instant::now();
        let o = run();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        if !o.pass {
            failed += 1;
        }
        println!(
            "{tag} criterion {name} [{:.1}s]: {}",
            start.elapsed().as_secs_f64(),
            o.detail
        );
    }
    println!("{} of 10 criteria passed", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
