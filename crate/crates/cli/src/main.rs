//! `hsb`: command-line front end for the wave-Sobolev product engine and its numerical checks.

use std::io::Write;
use std::ops::RangeInclusive;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use hsb_core::conditions::{ConditionTableDoc, Status};
use hsb_core::counterexample::{
    matrix_with_slope, necessity_report, violated_condition_witness, Witness, DEFAULT_LAMBDAS,
    SLOPE_TOLERANCE,
};
use hsb_core::dyadic::{ratio_scan, totality_fuzz, SumKind, SumParams, TableId, TotalityReport};
use hsb_core::oracle::TheoremHypothesisReport;
use hsb_core::rules::{exception_list_verdict_at, grouped_rules_verdict_at, HsRuleReport};
use hsb_core::trilinear::{
    block_grid, dyadic_block_check, leibniz_inequality_scan, sign_identities_check, DyadicBlockSpec,
};
use hsb_core::{
    classify_boundary, decide, decide_joined, decide_type_specific, evaluate_conditions,
    hs_conditions, hs_rule_check, normalize_type, rules_equivalence_sample, BoundaryClass,
    ConditionStatus, Dim, ExponentMatrix, FamilyId, Perm, Rational, RuleOutcome, SignPair,
    TypeLabel, Verdict,
};

const SCHEMA_VERSION: u32 = 1;
const EXIT_ERROR: u8 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "hsb",
    version,
    about = "Product estimates in wave-Sobolev spaces H^{s,b}: exact decisions and numerical checks"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// Emit a versioned JSON report instead of a table.
    #[arg(long, global = true)]
    json: bool,
    /// Seed for every Monte Carlo stream.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Sample count; each subcommand has its own default.
    #[arg(long, global = true)]
    samples: Option<usize>,
    /// Space dimension n.
    #[arg(long, global = true, default_value = "3", value_parser = parse_dim)]
    dim: Dim,
    /// Worker threads; affects wall time only.
    #[arg(long, global = true)]
    workers: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Decide whether an exponent matrix is a product.
    Check {
        /// Exponent matrix `s0,s1,s2;b0,b1,b2`; entries are integers, fractions or decimals.
        #[arg(long, value_parser = parse_matrix)]
        matrix: ExponentMatrix,
    },
    /// Decide the H^s product law for s = (s0,s1,s2) through its three rule formulations.
    HsCheck {
        #[arg(long, value_parser = parse_triple)]
        s: [Rational; 3],
    },
    /// Sign type of the b-row, normal form, and boundary class.
    Classify {
        /// Exponent matrix `s0,s1,s2;b0,b1,b2`; entries are integers, fractions or decimals.
        #[arg(long, value_parser = parse_matrix)]
        matrix: ExponentMatrix,
    },
    /// Scaling check of one counterexample family.
    Counterexample {
        #[arg(long, value_parser = parse_family)]
        family: FamilyId,
        /// Exponent matrix; defaults to one whose predicted slope is --target-slope.
        #[arg(long, value_parser = parse_matrix)]
        matrix: Option<ExponentMatrix>,
        #[arg(long, value_parser = parse_rational, default_value = "0", allow_hyphen_values = true)]
        target_slope: Rational,
        /// Comma-separated λ values (at least five, each ≥ 16).
        #[arg(long, value_delimiter = ',')]
        lambdas: Option<Vec<f64>>,
    },
    /// Brute-force dyadic sum against its regime closed form over N = 2^lo … 2^hi.
    Dyadic {
        /// One of SigmaA, XiA, sigma, gamma, Gamma, kappa, rho.
        #[arg(long = "fn", value_parser = parse_kind, required_unless_present = "totality")]
        kind: Option<SumKind>,
        #[arg(long, value_parser = parse_rational, default_value = "0", allow_hyphen_values = true)]
        p: Rational,
        #[arg(long, value_parser = parse_rational, default_value = "0", allow_hyphen_values = true)]
        b0: Rational,
        #[arg(long, value_parser = parse_rational, default_value = "0", allow_hyphen_values = true)]
        b1: Rational,
        #[arg(long, value_parser = parse_rational, default_value = "0", allow_hyphen_values = true)]
        b2: Rational,
        /// Exponent `a` of Σ_A and Ξ_A.
        #[arg(long, value_parser = parse_rational, default_value = "0", allow_hyphen_values = true)]
        a: Rational,
        /// m with A = 2^m for Γ, or r = 2^{-m} for κ and ρ.
        #[arg(long, default_value_t = 0)]
        aux_exp: u32,
        /// Inclusive exponent range `lo..hi` for N = 2^j.
        #[arg(long, value_parser = parse_range, default_value = "6..20")]
        n_range: RangeInclusive<u32>,
        /// Fuzz every regime table for totality instead of scanning one sum.
        #[arg(long, conflicts_with = "kind")]
        totality: bool,
    },
    /// Compare the grouped boundary rules with the exception list on random boundary points.
    RulesEquivalence {
        #[arg(long, default_value_t = 12)]
        denominator_bound: u32,
    },
    /// Hyperbolic Leibniz inequality and defect bound on random triples.
    Leibniz,
    /// The four sign identities on random constrained triples.
    Identities,
    /// Dyadic building-block ratios on the fixed grid, or on one block.
    Blocks {
        /// Spatial sizes `N0,N1,N2`.
        #[arg(long = "sizes", value_parser = parse_sizes, requires = "modulations")]
        sizes: Option<[u64; 3]>,
        /// Modulation sizes `L0,L1,L2`; `-` leaves one free.
        #[arg(long = "modulations", value_parser = parse_modulations, requires = "sizes", allow_hyphen_values = true)]
        modulations: Option<[Option<u64>; 3]>,
        #[arg(long, value_parser = parse_signs, default_value = "PP")]
        signs: SignPair,
    },
    /// Export the condition table as JSON.
    ExportConditions,
}

fn parse_dim(s: &str) -> Result<Dim, String> {
    let n: u32 = s.trim().parse().map_err(|e| format!("{e}"))?;
    Dim::new(n).map_err(|e| e.to_string())
}

fn parse_matrix(s: &str) -> Result<ExponentMatrix, String> {
    s.parse().map_err(|e: hsb_core::Error| e.to_string())
}

fn parse_rational(s: &str) -> Result<Rational, String> {
    s.parse::<Rational>().map_err(|e| e.to_string())
}

fn parse_triple(s: &str) -> Result<[Rational; 3], String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err(format!(
            "expected three comma-separated entries, got {}",
            parts.len()
        ));
    }
    Ok([
        parse_rational(parts[0])?,
        parse_rational(parts[1])?,
        parse_rational(parts[2])?,
    ])
}

fn parse_family(s: &str) -> Result<FamilyId, String> {
    let k: u8 = s
        .trim()
        .trim_start_matches('F')
        .parse()
        .map_err(|e| format!("{e}"))?;
    FamilyId::new(k).map_err(|e| e.to_string())
}

fn parse_kind(s: &str) -> Result<SumKind, String> {
    SumKind::parse(s).map_err(|e| e.to_string())
}

fn parse_range(s: &str) -> Result<RangeInclusive<u32>, String> {
    let (lo, hi) = s
        .split_once("..")
        .ok_or_else(|| "expected `lo..hi`".to_string())?;
    let hi = hi.trim_start_matches('=');
    let lo: u32 = lo.trim().parse().map_err(|e| format!("{e}"))?;
    let hi: u32 = hi.trim().parse().map_err(|e| format!("{e}"))?;
    if lo > hi {
        return Err("empty range".into());
    }
    Ok(lo..=hi)
}

fn parse_sizes(s: &str) -> Result<[u64; 3], String> {
    let v: Vec<u64> = s
        .split(',')
        .map(|t| t.trim().parse::<u64>().map_err(|e| format!("{e}")))
        .collect::<Result<_, _>>()?;
    v.try_into().map_err(|_| "expected three sizes".to_string())
}

fn parse_modulations(s: &str) -> Result<[Option<u64>; 3], String> {
    let v: Vec<Option<u64>> = s
        .split(',')
        .map(|t| match t.trim() {
            "-" | "." | "·" => Ok(None),
            t => t.parse::<u64>().map(Some).map_err(|e| format!("{e}")),
        })
        .collect::<Result<_, _>>()?;
    v.try_into()
        .map_err(|_| "expected three modulation sizes".to_string())
}

fn parse_signs(s: &str) -> Result<SignPair, String> {
    match s.trim().to_ascii_uppercase().as_str() {
        "PP" | "++" => Ok(SignPair::PP),
        "PM" | "+-" => Ok(SignPair::PM),
        "MP" | "-+" => Ok(SignPair::MP),
        "MM" | "--" => Ok(SignPair::MM),
        other => Err(format!("unknown sign pair {other}; use PP, PM, MP or MM")),
    }
}

/// Report plus the exit status it implies.
struct Outcome {
    json: serde_json::Value,
    text: String,
    code: u8,
}

fn outcome<T: Serialize>(report: &T, text: String, code: u8) -> anyhow::Result<Outcome> {
    Ok(Outcome {
        json: serde_json::to_value(report)?,
        text,
        code,
    })
}

fn pass_code(pass: bool) -> u8 {
    if pass {
        0
    } else {
        1
    }
}

fn verdict_word(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

#[derive(Serialize)]
struct RulesPair {
    grouped: RuleOutcome,
    exceptions: RuleOutcome,
}

#[derive(Serialize)]
struct CheckReport {
    schema_version: u32,
    input: ExponentMatrix,
    n: Dim,
    conditions: Vec<ConditionStatus>,
    boundary_class: BoundaryClass,
    #[serde(rename = "type")]
    type_label: TypeLabel,
    /// Absent when a condition is violated.
    rules: Option<RulesPair>,
    type_theorem_report: TheoremHypothesisReport,
    /// Verdict of the general rules alone.
    general_verdict: Verdict,
    /// Product if either the general rules or the type theorem proves it.
    verdict: Verdict,
    witness: Option<Witness>,
}

fn status_mark(s: &ConditionStatus) -> &'static str {
    match s.status {
        Status::Strict => "strict",
        Status::Equality => "equality",
        Status::Violated => "VIOLATED",
    }
}

fn run_check(m: ExponentMatrix, n: Dim) -> anyhow::Result<Outcome> {
    let conditions = evaluate_conditions(&m, n);
    let boundary_class = classify_boundary(&conditions);
    let (_, _, type_label) = normalize_type(&m);
    let rules = match (
        grouped_rules_verdict_at(&m, n),
        exception_list_verdict_at(&m, n),
    ) {
        (Ok(grouped), Ok(exceptions)) => Some(RulesPair {
            grouped,
            exceptions,
        }),
        _ => None,
    };
    let (_, type_theorem_report, _) = decide_type_specific(&m);
    let general_verdict = decide(&m, n);
    let verdict = decide_joined(&m, n);
    let witness = if verdict.is_not_product() {
        Some(violated_condition_witness(&m, n)?)
    } else {
        None
    };
    let mut text = format!("matrix {m}  n = {n}  type {type_label}  boundary {boundary_class:?}\n");
    for c in &conditions {
        text += &format!(
            "  {:<4} lhs {:>8}  rhs {:>8}  {}\n",
            c.id.to_string(),
            c.lhs.to_string(),
            c.rhs.to_string(),
            status_mark(c)
        );
    }
    if let Some(r) = &rules {
        text += &format!(
            "grouped rules: {}   exception list: {}\n",
            rule_word(&r.grouped),
            rule_word(&r.exceptions)
        );
    }
    if general_verdict.kind() != verdict.kind() {
        text += &format!("general rules alone: {}\n", general_verdict.kind());
    }
    text += &match &verdict {
        Verdict::Product { basis, provenance } => {
            format!("verdict: Product ({basis:?}, {provenance:?})")
        }
        Verdict::NotProduct {
            violated,
            witness_family,
        } => {
            let perm = witness
                .as_ref()
                .map(|w| format!("{:?}", w.perm.images()))
                .unwrap_or_default();
            format!(
                "verdict: NotProduct (violates {violated}, family {witness_family}, perm {perm})"
            )
        }
        Verdict::Unknown {
            tight,
            failed_rules,
        } => {
            format!("verdict: Unknown (tight {tight:?}, failed rules {failed_rules:?})")
        }
    };
    let code = verdict.exit_code() as u8;
    let report = CheckReport {
        schema_version: SCHEMA_VERSION,
        input: m,
        n,
        conditions,
        boundary_class,
        type_label,
        rules,
        type_theorem_report,
        general_verdict,
        verdict,
        witness,
    };
    outcome(&report, text, code)
}

fn rule_word(r: &RuleOutcome) -> String {
    match r {
        RuleOutcome::Pass => "pass".into(),
        RuleOutcome::Fail { triggered } => {
            let names: Vec<&str> = triggered.iter().map(|f| f.rule.as_str()).collect();
            format!("fail [{}]", names.join(", "))
        }
    }
}

#[derive(Serialize)]
struct HsCheckReport {
    schema_version: u32,
    s: [Rational; 3],
    n: Dim,
    conditions: Vec<ConditionStatus>,
    rules: Option<HsRuleReport>,
    formulations_agree: bool,
    product: bool,
}

fn run_hs_check(s: [Rational; 3], n: Dim) -> anyhow::Result<Outcome> {
    let conditions = hs_conditions(&s, n);
    let inside = conditions.iter().all(|c| !c.is_violated());
    let rules = if inside {
        Some(hs_rule_check(&s, n)?)
    } else {
        None
    };
    let agree = rules.as_ref().is_none_or(|r| r.agree());
    let product = inside
        && rules
            .as_ref()
            .is_some_and(|r| r.strict_pairs.passed() && agree);
    let mut text = format!("s = ({}, {}, {})  n = {n}\n", s[0], s[1], s[2]);
    for c in &conditions {
        text += &format!(
            "  {:<4} lhs {:>8}  rhs {:>8}  {}\n",
            c.id.to_string(),
            c.lhs.to_string(),
            c.rhs.to_string(),
            status_mark(c)
        );
    }
    if let Some(r) = &rules {
        text += &format!(
            "strict pairs: {}   max form: {}   exceptions: {}\n",
            rule_word(&r.strict_pairs),
            rule_word(&r.grouped),
            rule_word(&r.exceptions)
        );
    }
    text += if product {
        "verdict: Product"
    } else {
        "verdict: NotProduct"
    };
    let code = if !agree {
        EXIT_ERROR
    } else {
        pass_code(product)
    };
    let report = HsCheckReport {
        schema_version: SCHEMA_VERSION,
        s,
        n,
        conditions,
        rules,
        formulations_agree: agree,
        product,
    };
    outcome(&report, text, code)
}

#[derive(Serialize)]
struct ClassifyReport {
    schema_version: u32,
    input: ExponentMatrix,
    #[serde(rename = "type")]
    type_label: TypeLabel,
    normalized: ExponentMatrix,
    perm: Perm,
    boundary_class: BoundaryClass,
}

fn run_classify(m: ExponentMatrix, n: Dim) -> anyhow::Result<Outcome> {
    let (normalized, perm, type_label) = normalize_type(&m);
    let boundary_class = classify_boundary(&evaluate_conditions(&m, n));
    let text = format!(
        "type {type_label}\nnormal form {normalized}  (perm {:?})\nboundary {boundary_class:?}",
        perm.images()
    );
    let report = ClassifyReport {
        schema_version: SCHEMA_VERSION,
        input: m,
        type_label,
        normalized,
        perm,
        boundary_class,
    };
    outcome(&report, text, 0)
}

fn run_counterexample(
    family: FamilyId,
    matrix: Option<ExponentMatrix>,
    target: Rational,
    lambdas: Option<Vec<f64>>,
    c: &Common,
) -> anyhow::Result<Outcome> {
    let m = matrix.unwrap_or_else(|| matrix_with_slope(family, c.dim, &target));
    let lambdas = lambdas.unwrap_or_else(|| DEFAULT_LAMBDAS.to_vec());
    let samples = c.samples.unwrap_or(200_000);
    let r = necessity_report(
        family,
        &m,
        &lambdas,
        c.dim,
        samples,
        c.seed,
        SLOPE_TOLERANCE,
    )?;
    let mut text = format!(
        "family {}  matrix {}  n = {}  δ = {}  d = {}\n{:>8} {:>14} {:>12} {:>14}\n",
        r.family, r.matrix, r.n, r.delta, r.d, "lambda", "I_hat", "stderr", "C"
    );
    for row in &r.per_lambda {
        text += &format!(
            "{:>8} {:>14.6e} {:>12.3e} {:>14.6e}\n",
            row.lambda, row.i_hat, row.stderr, row.c
        );
    }
    text += &format!(
        "slope {:.4} ± {:.4}  predicted {:.4}  tolerance {}  containment violations {}  {}",
        r.slope,
        r.slope_stderr,
        r.predicted_slope,
        r.tolerance,
        r.containment_violations,
        verdict_word(r.pass)
    );
    let code = pass_code(r.pass);
    outcome(&r, text, code)
}

#[derive(Serialize)]
struct TotalitySummary {
    schema_version: u32,
    samples: usize,
    seed: u64,
    tables: Vec<TotalityReport>,
    pass: bool,
}

#[allow(clippy::too_many_arguments)]
fn run_dyadic(
    kind: Option<SumKind>,
    params: SumParams,
    aux_exp: u32,
    n_range: RangeInclusive<u32>,
    totality: bool,
    c: &Common,
) -> anyhow::Result<Outcome> {
    if totality {
        let samples = c.samples.unwrap_or(100_000);
        let tables: Vec<TotalityReport> = TableId::ALL
            .iter()
            .map(|&t| totality_fuzz(t, samples, c.seed))
            .collect();
        let pass = tables.iter().all(|t| t.failures == 0);
        let mut text = format!(
            "{:<10} {:>10} {:>9}  row hits\n",
            "table", "samples", "failures"
        );
        for t in &tables {
            text += &format!(
                "{:<10} {:>10} {:>9}  {:?}\n",
                format!("{:?}", t.table),
                t.samples,
                t.failures,
                t.row_hits
            );
        }
        text += verdict_word(pass);
        let report = TotalitySummary {
            schema_version: SCHEMA_VERSION,
            samples,
            seed: c.seed,
            tables,
            pass,
        };
        return outcome(&report, text, pass_code(pass));
    }
    let kind = kind.ok_or_else(|| anyhow!("--fn is required"))?;
    let r = ratio_scan(kind, &params, aux_exp, n_range)?;
    let pred = &r.prediction;
    let mut text = format!(
        "{kind:?}  table {:?} row {} [{}]  N^{} · aux^{} · log^{}{}\n{:>4} {:>16} {:>16} {:>10}\n",
        pred.table,
        pred.row,
        pred.label,
        pred.main_power,
        pred.aux_power,
        pred.logs,
        if pred.epsilon { " · N^ε" } else { "" },
        "j",
        "brute",
        "closed",
        "ratio"
    );
    for p in &r.points {
        text += &format!(
            "{:>4} {:>16.8e} {:>16.8e} {:>10.4}\n",
            p.n_exp, p.brute, p.closed, p.ratio
        );
    }
    text += &format!(
        "slope {:.4}  predicted {:.4}{}  ratio ∈ [{:.4}, {:.4}]  {}",
        r.slope,
        r.predicted_slope,
        if r.one_sided { " (upper bound)" } else { "" },
        r.min_ratio,
        r.max_ratio,
        verdict_word(r.pass)
    );
    let code = pass_code(r.pass);
    outcome(&r, text, code)
}

fn run_rules_equivalence(bound: u32, c: &Common) -> anyhow::Result<Outcome> {
    let samples = c.samples.unwrap_or(100_000);
    let r = rules_equivalence_sample(samples as u64, c.seed, bound);
    let pass = r.disagreements.is_empty();
    let mut text = format!(
        "samples {}  retained {}  with equalities {}  grouped failures {}  agreements {}  disagreements {}\n",
        r.samples,
        r.retained,
        r.with_equalities,
        r.grouped_failures,
        r.agreements,
        r.disagreements.len()
    );
    for d in r.disagreements.iter().take(10) {
        text += &format!(
            "  {}  grouped {}  exceptions {}\n",
            d.matrix,
            rule_word(&d.grouped),
            rule_word(&d.exceptions)
        );
    }
    text += verdict_word(pass);
    let report = EquivalenceJson {
        schema_version: SCHEMA_VERSION,
        seed: c.seed,
        denominator_bound: bound,
        pass,
        report: r,
    };
    outcome(&report, text, pass_code(pass))
}

#[derive(Serialize)]
struct EquivalenceJson {
    schema_version: u32,
    seed: u64,
    denominator_bound: u32,
    pass: bool,
    #[serde(flatten)]
    report: hsb_core::rules::EquivalenceReport,
}

fn run_leibniz(c: &Common) -> anyhow::Result<Outcome> {
    let r = leibniz_inequality_scan(c.samples.unwrap_or(1_000_000), c.seed, c.dim)?;
    let text = format!(
        "samples {}  n = {}\nmodulation inequality: max ratio {:.12}  constant {}  violations {}  (degenerate skipped {})\ndefect bound: max ratio {:.12}  constant {}  violations {}\n{}",
        r.samples,
        r.n,
        r.max_ratio_n92,
        r.modulation_constant,
        r.modulation_violations,
        r.skipped,
        r.max_ratio_n96,
        r.defect_constant,
        r.defect_violations,
        verdict_word(r.pass)
    );
    let code = pass_code(r.pass);
    outcome(&r, text, code)
}

fn run_identities(c: &Common) -> anyhow::Result<Outcome> {
    let r = sign_identities_check(c.samples.unwrap_or(1_000_000), c.seed, c.dim)?;
    let text = format!(
        "samples {}  n = {}  tolerance {:e}\nviolations (equal signs, opposite small-first, opposite large-first, null plane): {:?}\nmax relative residual {:e}\n{}",
        r.samples,
        r.n,
        r.tolerance,
        r.violations,
        r.max_residual,
        verdict_word(r.pass)
    );
    let code = pass_code(r.pass);
    outcome(&r, text, code)
}

#[derive(Serialize)]
struct BlocksSummary {
    schema_version: u32,
    samples: usize,
    seed: u64,
    blocks: Vec<hsb_core::trilinear::BlockReport>,
    pass: bool,
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.4}")).unwrap_or_else(|| "-".into())
}

fn run_blocks(
    sizes: Option<[u64; 3]>,
    modulations: Option<[Option<u64>; 3]>,
    signs: SignPair,
    c: &Common,
) -> anyhow::Result<Outcome> {
    let specs = match (sizes, modulations) {
        (Some(big_n), Some(big_l)) => vec![DyadicBlockSpec {
            big_n,
            big_l,
            signs,
            n: c.dim,
        }],
        _ => {
            if c.dim.get() != 3 {
                bail!("the fixed block grid is defined at --dim 3");
            }
            block_grid()
        }
    };
    let samples = c.samples.unwrap_or(1_000_000);
    let blocks = specs
        .iter()
        .map(|s| dyadic_block_check(s, samples, c.seed))
        .collect::<Result<Vec<_>, _>>()?;
    let pass = blocks.iter().all(|b| b.pass);
    let mut text = format!(
        "{:<14} {:<16} {:<5} {:>12} {:>9} {:>9} {:>9}\n",
        "N", "L", "signs", "J_hat", "sobolev", "wave", "low-out"
    );
    for b in &blocks {
        let l: Vec<String> = b
            .spec
            .big_l
            .iter()
            .map(|v| v.map(|x| x.to_string()).unwrap_or("-".into()))
            .collect();
        text += &format!(
            "{:<14} {:<16} {:<5} {:>12.4e} {:>9.4} {:>9} {:>9}\n",
            format!("{:?}", b.spec.big_n),
            l.join(","),
            b.spec.signs.to_string(),
            b.j_hat,
            b.ratios.sobolev,
            fmt_opt(b.ratios.wave),
            fmt_opt(b.ratios.wave_low_output)
        );
    }
    text += &format!(
        "cap {}  {}",
        blocks.first().map(|b| b.cap).unwrap_or_default(),
        verdict_word(pass)
    );
    let report = BlocksSummary {
        schema_version: SCHEMA_VERSION,
        samples,
        seed: c.seed,
        blocks,
        pass,
    };
    outcome(&report, text, pass_code(pass))
}

fn run_export(n: Dim) -> anyhow::Result<Outcome> {
    let doc = ConditionTableDoc::new(n);
    let text = serde_json::to_string_pretty(&doc)?;
    outcome(&doc, text, 0)
}

fn run(cli: Cli) -> anyhow::Result<Outcome> {
    let c = &cli.common;
    if let Some(w) = c.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build_global()
            .context("--workers: could not size the thread pool")?;
    }
    match cli.command {
        Command::Check { matrix } => run_check(matrix, c.dim),
        Command::HsCheck { s } => run_hs_check(s, c.dim),
        Command::Classify { matrix } => run_classify(matrix, c.dim),
        Command::Counterexample {
            family,
            matrix,
            target_slope,
            lambdas,
        } => run_counterexample(family, matrix, target_slope, lambdas, c),
        Command::Dyadic {
            kind,
            p,
            b0,
            b1,
            b2,
            a,
            aux_exp,
            n_range,
            totality,
        } => run_dyadic(
            kind,
            SumParams { p, b0, b1, b2, a },
            aux_exp,
            n_range,
            totality,
            c,
        ),
        Command::RulesEquivalence { denominator_bound } => {
            run_rules_equivalence(denominator_bound, c)
        }
        Command::Leibniz => run_leibniz(c),
        Command::Identities => run_identities(c),
        Command::Blocks {
            sizes,
            modulations,
            signs,
        } => run_blocks(sizes, modulations, signs, c),
        Command::ExportConditions => run_export(c.dim),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let json = cli.common.json;
    match run(cli) {
        Ok(out) => {
            let body = if json {
                match serde_json::to_string_pretty(&out.json) {
                    Ok(s) => s,
                    Err(e) => {
                        eprintln!("error: {e}");
                        return ExitCode::from(EXIT_ERROR);
                    }
                }
            } else {
                out.text
            };
            let mut stdout = std::io::stdout().lock();
            match writeln!(stdout, "{body}").and_then(|_| stdout.flush()) {
                Ok(()) => ExitCode::from(out.code),
                // A closed pipe (`| head`) is not a failure of the computation.
                Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => ExitCode::from(out.code),
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(EXIT_ERROR)
                }
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
