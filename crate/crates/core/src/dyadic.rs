//! Nested dyadic sums and their piecewise closed-form regimes.
//!
//! Dyadic numbers `2^j` are stored by their exponent `j`. Every table is authored as data: a row
//! is a list of linear predicates on the parameters plus the predicted exponents, with the row
//! text kept as its label.

use std::fmt;
use std::sync::OnceLock;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mc::{fit_line, substream};
use crate::rational::{q, Rational};

/// Neumaier-compensated sum.
#[derive(Debug, Clone, Copy, Default)]
struct Accumulator {
    sum: f64,
    carry: f64,
}

impl Accumulator {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SumKind {
    SigmaA,
    XiA,
    SigmaP,
    Gamma,
    GammaAB,
    KappaP,
    RhoP,
}

impl SumKind {
    pub const ALL: [SumKind; 7] = [
        SumKind::SigmaA,
        SumKind::XiA,
        SumKind::SigmaP,
        SumKind::Gamma,
        SumKind::GammaAB,
        SumKind::KappaP,
        SumKind::RhoP,
    ];

    pub fn parse(name: &str) -> Result<SumKind> {
        match name {
            "SigmaA" => Ok(SumKind::SigmaA),
            "XiA" => Ok(SumKind::XiA),
            "sigma" | "sigma_p" => Ok(SumKind::SigmaP),
            "gamma" => Ok(SumKind::Gamma),
            "Gamma" | "GammaAB" => Ok(SumKind::GammaAB),
            "kappa" | "kappa_p" => Ok(SumKind::KappaP),
            "rho" | "rho_p" => Ok(SumKind::RhoP),
            other => Err(Error::InvalidArgument(format!("unknown sum `{other}`"))),
        }
    }
}

/// Parameters of the sums; unused ones are ignored by each kind.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SumParams {
    pub p: Rational,
    pub b0: Rational,
    pub b1: Rational,
    pub b2: Rational,
    /// The exponent `A` of `Σ_A` and `Ξ_A`.
    pub a: Rational,
}

impl SumParams {
    fn get(&self, v: usize) -> &Rational {
        match v {
            0 => &self.p,
            1 => &self.b0,
            2 => &self.b1,
            3 => &self.b2,
            _ => &self.a,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum TailMode {
    #[default]
    ClosedForm,
    /// Drop the tail once it is certified below 2⁻²⁰ of the partial sum.
    Truncate,
}

/// One sum evaluation. `n_exp` is the exponent of the main argument (`N`, `N₀`, or `B` for `Γ`);
/// `aux_exp` is the exponent of `A` for `Γ(A,B)` and of `1/r` for `κ_p`, `ρ_p`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DyadicSumSpec {
    pub kind: SumKind,
    pub params: SumParams,
    pub n_exp: u32,
    #[serde(default)]
    pub aux_exp: u32,
    #[serde(default)]
    pub tail: TailMode,
}

const MAX_EXP: u32 = 64;

fn pow2(x: f64) -> f64 {
    x.exp2()
}

/// `Σ_{i=0}^{k} 2^{a i}`.
fn partial_geometric(a: f64, k: i64) -> f64 {
    let mut acc = Accumulator::default();
    for i in 0..=k {
        acc.add(pow2(a * i as f64));
    }
    acc.value()
}

/// Inner sums `S(k) = Σ_{L₁ ≤ 2^k} L₁^{1/2−b₁}` for `k = 0..=len-1`.
fn inner_prefix(b1: f64, len: usize) -> Vec<f64> {
    let a = 0.5 - b1;
    let mut out = Vec::with_capacity(len);
    let mut acc = Accumulator::default();
    for k in 0..len {
        acc.add(pow2(a * k as f64));
        out.push(acc.value());
    }
    out
}

/// `Γ(2^lo, 2^hi) = Σ_{lo ≤ k ≤ hi} 2^{−b₂ k} S(k)`.
fn gamma_ab(b1: f64, b2: f64, lo: u32, hi: u32) -> f64 {
    let inner = inner_prefix(b1, hi as usize + 1);
    let mut acc = Accumulator::default();
    for k in lo..=hi {
        acc.add(pow2(-b2 * k as f64) * inner[k as usize]);
    }
    acc.value()
}

fn sigma_p(p: f64, b1: f64, b2: f64, n: i64) -> f64 {
    if n < 0 {
        return 0.0;
    }
    let inner = inner_prefix(b1, n as usize + 1);
    let mut acc = Accumulator::default();
    for k in 0..=n {
        acc.add(pow2((p - b2) * k as f64) * inner[k as usize]);
    }
    acc.value()
}

/// `Σ_{k > K} 2^{−b₂ k} S(k)`, exact: `[S(K) y^{K+1} + x^{K+1}/(1−x)] / (1−y)` with
/// `x = 2^{1/2−b₁−b₂}`, `y = 2^{−b₂}`.
fn gamma_tail(b1: f64, b2: f64, big_k: i64) -> f64 {
    let a = 0.5 - b1;
    let x = pow2(a - b2);
    let y = pow2(-b2);
    let s = if big_k < 0 {
        0.0
    } else {
        partial_geometric(a, big_k)
    };
    let k1 = (big_k + 1) as f64;
    (s * pow2(-b2 * k1) + pow2((a - b2) * k1) / (1.0 - x)) / (1.0 - y)
}

fn gamma_sum(b1: f64, b2: f64, n: u32, tail: TailMode) -> Result<f64> {
    if !(b2 > 0.0 && b1 + b2 > 0.5) {
        return Err(Error::Divergent(format!(
            "γ needs b2 > 0 and b1 + b2 > 1/2, got b1 = {b1}, b2 = {b2}"
        )));
    }
    let mut acc = Accumulator::default();
    let mut s = partial_geometric(0.5 - b1, n as i64 - 1);
    let mut k = n as i64;
    loop {
        s += pow2((0.5 - b1) * k as f64);
        acc.add(pow2(-b2 * k as f64) * s);
        let rest = gamma_tail(b1, b2, k);
        match tail {
            TailMode::ClosedForm if k >= n as i64 + 64 => return Ok(acc.value() + rest),
            TailMode::Truncate if rest <= acc.value() * 2f64.powi(-20) => return Ok(acc.value()),
            _ => {}
        }
        k += 1;
        if k > n as i64 + 100_000 {
            return Err(Error::Divergent(
                "γ tail did not reach the truncation bound".into(),
            ));
        }
    }
}

/// Direct summation over dyadic indices; the infinite `γ` tail is closed-form or certified-truncated.
pub fn dyadic_sum_bruteforce(spec: &DyadicSumSpec) -> Result<f64> {
    if spec.n_exp > MAX_EXP || spec.aux_exp > MAX_EXP {
        return Err(Error::InvalidArgument(format!(
            "dyadic exponents are capped at {MAX_EXP}"
        )));
    }
    let pr = &spec.params;
    let (p, b0, b1, b2, a) = (
        pr.p.to_f64(),
        pr.b0.to_f64(),
        pr.b1.to_f64(),
        pr.b2.to_f64(),
        pr.a.to_f64(),
    );
    let n = spec.n_exp;
    let m = spec.aux_exp;
    let value = match spec.kind {
        SumKind::SigmaA => partial_geometric(a, n as i64),
        SumKind::XiA => {
            let mut acc = Accumulator::default();
            for i in n.div_ceil(2)..=n {
                acc.add(pow2(a * i as f64));
            }
            acc.value()
        }
        SumKind::SigmaP => sigma_p(p, b1, b2, n as i64),
        SumKind::Gamma => gamma_sum(b1, b2, n, spec.tail)?,
        SumKind::GammaAB => {
            if m > n {
                return Err(Error::InvalidArgument("Γ(A,B) needs A ≤ B".into()));
            }
            gamma_ab(b1, b2, m, n)
        }
        SumKind::KappaP => {
            // Σ_{1/r ≤ L₀ ≤ N₀} L₀^{−b₀} σ_p(r L₀)
            let mut acc = Accumulator::default();
            for l in m..=n {
                acc.add(pow2(-b0 * l as f64) * sigma_p(p, b1, b2, l as i64 - m as i64));
            }
            acc.value()
        }
        SumKind::RhoP => {
            // Σ_{L₀ ≤ N₀} L₀^{p−b₀} Γ(max(1, r L₀), L₀)
            let inner = inner_prefix(b1, n as usize + 1);
            let mut acc = Accumulator::default();
            for l in 0..=n {
                let lo = l.saturating_sub(m);
                let mut g = Accumulator::default();
                for k in lo..=l {
                    g.add(pow2(-b2 * k as f64) * inner[k as usize]);
                }
                acc.add(pow2((p - b0) * l as f64) * g.value());
            }
            acc.value()
        }
    };
    Ok(value)
}

// ---------------------------------------------------------------------------------------------
// Linear forms over (p, b0, b1, b2, A)

const VARS: [&str; 5] = ["p", "b0", "b1", "b2", "A"];

/// `Σ coef_v · v + constant`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinearForm {
    pub coef: [Rational; 5],
    pub constant: Rational,
}

impl LinearForm {
    pub fn eval(&self, params: &SumParams) -> Rational {
        let mut acc = self.constant.clone();
        for (v, c) in self.coef.iter().enumerate() {
            if !c.is_zero() {
                acc = acc + c * params.get(v);
            }
        }
        acc
    }

    /// Parses e.g. `1/2+p-b0-b1-b2`, `2b1`, `1/2A`.
    pub fn parse(text: &str) -> Result<LinearForm> {
        let bad = || Error::InvalidArgument(format!("malformed linear form `{text}`"));
        let mut form = LinearForm {
            coef: Default::default(),
            constant: Rational::zero(),
        };
        let cleaned: String = text.chars().filter(|c| !c.is_whitespace()).collect();
        let mut terms = Vec::new();
        let mut current = String::new();
        for ch in cleaned.chars() {
            if (ch == '+' || ch == '-') && !current.is_empty() {
                terms.push(std::mem::take(&mut current));
            }
            current.push(ch);
        }
        if !current.is_empty() {
            terms.push(current);
        }
        for term in terms {
            let (negative, body) = match term.strip_prefix('-') {
                Some(rest) => (true, rest),
                None => (false, term.strip_prefix('+').unwrap_or(&term)),
            };
            let split = body
                .find(|c: char| c.is_ascii_alphabetic())
                .unwrap_or(body.len());
            let (number, var) = body.split_at(split);
            let mut value = if number.is_empty() {
                Rational::one()
            } else {
                number.parse::<Rational>().map_err(|_| bad())?
            };
            if negative {
                value = -value;
            }
            if var.is_empty() {
                form.constant = &form.constant + &value;
            } else {
                let v = VARS.iter().position(|&name| name == var).ok_or_else(bad)?;
                form.coef[v] = &form.coef[v] + &value;
            }
        }
        Ok(form)
    }
}

impl fmt::Display for LinearForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (v, c) in self.coef.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let sign = if c.is_negative() {
                "-"
            } else if first {
                ""
            } else {
                "+"
            };
            let mag = c.abs();
            let num = if mag == Rational::one() {
                String::new()
            } else {
                mag.to_string()
            };
            write!(f, "{sign}{num}{}", VARS[v])?;
            first = false;
        }
        if first || !self.constant.is_zero() {
            let c = &self.constant;
            let sign = if c.is_negative() {
                "-"
            } else if first {
                ""
            } else {
                "+"
            };
            write!(f, "{sign}{}", c.abs())?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Cmp {
    Lt,
    Le,
    Eq,
    Ge,
    Gt,
}

/// `form cmp 0`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Predicate {
    pub form: LinearForm,
    pub cmp: Cmp,
}

impl Predicate {
    pub fn holds(&self, params: &SumParams) -> bool {
        let v = self.form.eval(params);
        match self.cmp {
            Cmp::Lt => v.is_negative(),
            Cmp::Le => !v.is_positive(),
            Cmp::Eq => v.is_zero(),
            Cmp::Ge => !v.is_negative(),
            Cmp::Gt => v.is_positive(),
        }
    }

    /// Distance from the boundary for strict sides; equalities count as infinitely far.
    fn margin(&self, params: &SumParams) -> f64 {
        let v = self.form.eval(params);
        match self.cmp {
            Cmp::Eq => f64::INFINITY,
            Cmp::Le | Cmp::Ge if v.is_zero() => f64::INFINITY,
            _ => v.abs().to_f64(),
        }
    }
}

/// Parses a chain such as `1/2+p-b1-b2<b0<p` into predicates.
fn parse_chain(text: &str) -> Vec<Predicate> {
    let mut parts = Vec::new();
    let mut ops = Vec::new();
    let mut rest = text;
    loop {
        let hit = ["<=", ">=", "<", ">", "="]
            .iter()
            .filter_map(|op| rest.find(op).map(|i| (i, *op)))
            .min_by_key(|&(i, op)| (i, std::cmp::Reverse(op.len())));
        match hit {
            Some((i, op)) => {
                parts.push(&rest[..i]);
                ops.push(op);
                rest = &rest[i + op.len()..];
            }
            None => {
                parts.push(rest);
                break;
            }
        }
    }
    ops.iter()
        .enumerate()
        .map(|(k, op)| {
            let lhs = LinearForm::parse(parts[k]).expect("authored table");
            let rhs = LinearForm::parse(parts[k + 1]).expect("authored table");
            let mut form = lhs;
            for v in 0..5 {
                form.coef[v] = &form.coef[v] - &rhs.coef[v];
            }
            form.constant = &form.constant - &rhs.constant;
            let cmp = match *op {
                "<" => Cmp::Lt,
                "<=" => Cmp::Le,
                "=" => Cmp::Eq,
                ">=" => Cmp::Ge,
                _ => Cmp::Gt,
            };
            Predicate { form, cmp }
        })
        .collect()
}

// ---------------------------------------------------------------------------------------------
// Regime tables

/// Which argument a row's logarithms are taken of.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LogArg {
    /// `N`, `N₀` or `B`.
    Main,
    /// `r N₀`.
    RTimesMain,
    /// `B/A`.
    MainOverAux,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TableId {
    SigmaA,
    XiA,
    SigmaP,
    Gamma,
    GammaAB,
    Kappa,
    /// `ρ_p` with `r N₀ < 1`.
    RhoLow,
    /// `ρ_p` with `r N₀ ≥ 1`.
    RhoHigh,
}

impl TableId {
    pub const ALL: [TableId; 8] = [
        TableId::SigmaA,
        TableId::XiA,
        TableId::SigmaP,
        TableId::Gamma,
        TableId::GammaAB,
        TableId::Kappa,
        TableId::RhoLow,
        TableId::RhoHigh,
    ];

    pub fn kind(self) -> SumKind {
        match self {
            TableId::SigmaA => SumKind::SigmaA,
            TableId::XiA => SumKind::XiA,
            TableId::SigmaP => SumKind::SigmaP,
            TableId::Gamma => SumKind::Gamma,
            TableId::GammaAB => SumKind::GammaAB,
            TableId::Kappa => SumKind::KappaP,
            TableId::RhoLow | TableId::RhoHigh => SumKind::RhoP,
        }
    }

    /// Parameter constraints under which the table is stated.
    pub fn domain(self) -> &'static [Predicate] {
        &table_data(self).domain
    }

    pub fn rows(self) -> &'static [RegimeRow] {
        &table_data(self).rows
    }

    pub fn in_domain(self, params: &SumParams) -> bool {
        self.domain().iter().all(|d| d.holds(params))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegimeRow {
    pub label: String,
    pub predicates: Vec<Predicate>,
    /// Power of the main argument.
    pub main_power: LinearForm,
    /// Power of `A` for `Γ(A,B)`, of `r` for `κ_p`, `ρ_p`.
    pub aux_power: LinearForm,
    /// Log factors printed in the row.
    pub logs: u32,
    /// The row carries "for any ε > 0".
    pub epsilon: bool,
    /// Log factors in the main argument hidden behind ε.
    pub hidden_logs: u32,
    /// One more hidden log when this form vanishes.
    pub extra_log_if_zero: Option<LinearForm>,
    pub log_arg: LogArg,
}

impl RegimeRow {
    pub fn matches(&self, params: &SumParams) -> bool {
        self.predicates.iter().all(|p| p.holds(params))
    }

    /// Total log factors divided out before fitting slopes.
    pub fn log_count(&self, params: &SumParams) -> u32 {
        let extra = match &self.extra_log_if_zero {
            Some(f) if f.eval(params).is_zero() => 1,
            _ => 0,
        };
        self.logs + self.hidden_logs + extra
    }

    pub fn margin(&self, params: &SumParams) -> f64 {
        self.predicates
            .iter()
            .map(|p| p.margin(params))
            .fold(f64::INFINITY, f64::min)
    }
}

struct TableData {
    domain: Vec<Predicate>,
    rows: Vec<RegimeRow>,
}

#[derive(Default)]
struct RowSpec {
    when: &'static str,
    main: &'static str,
    aux: &'static str,
    logs: u32,
    eps: bool,
    hidden: u32,
    extra_if_zero: Option<&'static str>,
    log_arg: Option<LogArg>,
}

fn build(domain: &[&str], default_log: LogArg, specs: Vec<RowSpec>) -> TableData {
    let form =
        |s: &str| LinearForm::parse(if s.is_empty() { "0" } else { s }).expect("authored table");
    TableData {
        domain: domain.iter().flat_map(|d| parse_chain(d)).collect(),
        rows: specs
            .into_iter()
            .map(|s| RegimeRow {
                label: s.when.replace(',', ", ").replace("  ", " "),
                predicates: s
                    .when
                    .split(',')
                    .flat_map(|c| parse_chain(c.trim()))
                    .collect(),
                main_power: form(s.main),
                aux_power: form(s.aux),
                logs: s.logs,
                epsilon: s.eps,
                hidden_logs: s.hidden,
                extra_log_if_zero: s.extra_if_zero.map(form),
                log_arg: s.log_arg.unwrap_or(default_log),
            })
            .collect(),
    }
}

macro_rules! row {
    ($when:expr $(, $field:ident : $value:expr)* $(,)?) => {
        RowSpec { when: $when, $($field: $value,)* ..Default::default() }
    };
}

fn table_data(id: TableId) -> &'static TableData {
    static TABLES: OnceLock<Vec<TableData>> = OnceLock::new();
    let tables = TABLES.get_or_init(|| TableId::ALL.iter().map(|&t| author_table(t)).collect());
    &tables[TableId::ALL.iter().position(|&t| t == id).expect("listed")]
}

fn author_table(id: TableId) -> TableData {
    use LogArg::*;
    match id {
        // Σ_A(N) = Σ_{N₀ ≤ N} N₀^A
        TableId::SigmaA => build(
            &[],
            Main,
            vec![row!("A>0", main: "A"), row!("A=0", logs: 1), row!("A<0")],
        ),
        // Ξ_A(N) = Σ_{N^{1/2} ≤ M ≤ N} M^A
        TableId::XiA => build(
            &[],
            Main,
            vec![
                row!("A>0", main: "A"),
                row!("A=0", logs: 1),
                row!("A<0", main: "1/2A"),
            ],
        ),
        // σ_p(N) = Σ_{L₁ ≤ L₂ ≤ N} L₁^{1/2−b₁} L₂^{p−b₂}
        TableId::SigmaP => build(
            &["p>0"],
            Main,
            vec![
                row!("b1<1/2,b1+b2<1/2+p", main: "1/2+p-b1-b2"),
                row!("b1<1/2,b1+b2=1/2+p", logs: 1),
                row!("b1<1/2,b1+b2>1/2+p"),
                row!("b1=1/2,b2<p", main: "p-b2", logs: 1),
                row!("b1=1/2,b2=p", logs: 2),
                row!("b1=1/2,b2>p"),
                row!("b1>1/2,b2<p", main: "p-b2"),
                row!("b1>1/2,b2=p", logs: 1),
                row!("b1>1/2,b2>p"),
            ],
        ),
        // γ(N) = Σ_{L₁ ≤ L₂, L₂ ≥ N} L₁^{1/2−b₁} L₂^{−b₂}
        TableId::Gamma => build(
            &["b2>0", "b1+b2>1/2"],
            Main,
            vec![
                row!("b1<1/2", main: "1/2-b1-b2"),
                row!("b1=1/2", main: "-b2", eps: true, hidden: 1),
                row!("b1>1/2", main: "-b2"),
            ],
        ),
        // Γ(A,B) = Σ_{L₁ ≤ L₂, A ≤ L₂ ≤ B} L₁^{1/2−b₁} L₂^{−b₂}
        TableId::GammaAB => build(
            &["b2>0"],
            Main,
            vec![
                row!("b1<1/2,b1+b2<1/2", main: "1/2-b1-b2"),
                row!("b1<1/2,b1+b2=1/2", eps: true, hidden: 1, log_arg: Some(MainOverAux)),
                row!("b1<1/2,b1+b2>1/2", aux: "1/2-b1-b2"),
                row!("b1=1/2", aux: "-b2", eps: true),
                row!("b1>1/2", aux: "-b2"),
            ],
        ),
        // κ_p(N₀,r) = Σ_{L₁ ≤ L₂ ≤ r L₀, L₀ ≤ N₀} L₀^{−b₀} L₁^{1/2−b₁} L₂^{p−b₂}
        TableId::Kappa => build(
            &["p>0", "b0>0"],
            RTimesMain,
            vec![
                row!("b1<1/2,b1+b2<1/2+p,b0+b1+b2<1/2+p", main: "1/2+p-b0-b1-b2", aux: "1/2+p-b1-b2"),
                row!("b1<1/2,b1+b2<1/2+p,b0+b1+b2=1/2+p", aux: "b0", logs: 1),
                row!("b1<1/2,b1+b2<1/2+p,b0+b1+b2>1/2+p", aux: "b0"),
                row!("b1<1/2,b1+b2>=1/2+p", aux: "b0"),
                row!("b1=1/2,b2<p,b0+b2<p", main: "p-b0-b2", aux: "p-b2", logs: 1),
                row!("b1=1/2,b2<p,b0+b2=p", aux: "b0", logs: 2),
                row!("b1=1/2,b2<p,b0+b2>p", aux: "b0"),
                row!("b1=1/2,b2>=p", aux: "b0"),
                row!("b1>1/2,b2<p,b0+b2<p", main: "p-b0-b2", aux: "p-b2"),
                row!("b1>1/2,b2<p,b0+b2=p", aux: "b0", logs: 1),
                row!("b1>1/2,b2<p,b0+b2>p", aux: "b0"),
                row!("b1>1/2,b2>=p", aux: "b0"),
            ],
        ),
        // ρ_p(N₀,r) = Σ_{L₀ ≤ N₀} L₀^{p−b₀} Γ(max(1, r L₀), L₀), here with r N₀ < 1
        TableId::RhoLow => build(
            &["p>0", "b2>0"],
            Main,
            vec![
                row!("b1<1/2,b1+b2<1/2,b0+b1+b2<1/2+p", main: "1/2+p-b0-b1-b2"),
                row!("b1<1/2,b1+b2<1/2,b0+b1+b2=1/2+p", eps: true, hidden: 1),
                row!("b1<1/2,b1+b2<1/2,b0+b1+b2>1/2+p"),
                row!("b1<1/2,b1+b2=1/2,b0<=p", main: "p-b0", eps: true, hidden: 1, extra_if_zero: Some("b0-p")),
                row!("b1<1/2,b1+b2=1/2,b0>p"),
                row!("b1+b2>1/2,b0<p", main: "p-b0"),
                row!("b1+b2>1/2,b0=p", eps: true, hidden: 1),
                row!("b1+b2>1/2,b0>p"),
            ],
        ),
        // the same sum with r N₀ ≥ 1
        TableId::RhoHigh => build(
            &["p>0", "b2>0"],
            Main,
            vec![
                row!("b1<1/2,b1+b2<1/2,b0+b1+b2<1/2+p", main: "1/2+p-b0-b1-b2"),
                row!("b1<1/2,b1+b2<1/2,b0+b1+b2=1/2+p", eps: true, hidden: 1),
                row!("b1<1/2,b1+b2<1/2,b0+b1+b2>1/2+p"),
                row!("b1<1/2,b1+b2=1/2,b0<p", main: "p-b0", eps: true),
                row!("b1<1/2,b1+b2=1/2,b0=p", eps: true, hidden: 1),
                row!("b1<1/2,b1+b2=1/2,b0>p"),
                row!("b1<1/2,b1+b2>1/2,b0+b1+b2<1/2+p", main: "1/2+p-b0-b1-b2", aux: "1/2-b1-b2"),
                row!("b1<1/2,b1+b2>1/2,b0+b1+b2=1/2+p", aux: "b0-p", eps: true, hidden: 1, log_arg: Some(RTimesMain)),
                row!("b1<1/2,b1+b2>1/2,1/2+p-b1-b2<b0<p", aux: "b0-p"),
                row!("b1<1/2,b1+b2>1/2,b0=p", eps: true),
                row!("b1<1/2,b1+b2>1/2,b0>p"),
                row!("b1=1/2,b0+b2<=p", main: "p-b0-b2", aux: "-b2", eps: true, hidden: 1,
                     extra_if_zero: Some("b0+b2-p"), log_arg: Some(RTimesMain)),
                row!("b1=1/2,p-b2<b0<p", aux: "b0-p"),
                row!("b1=1/2,b0=p", eps: true),
                row!("b1=1/2,b0>p"),
                row!("b1>1/2,b0+b2<p", main: "p-b0-b2", aux: "-b2"),
                row!("b1>1/2,b0+b2=p", aux: "b0-p", eps: true, hidden: 1, log_arg: Some(RTimesMain)),
                row!("b1>1/2,p-b2<b0<p", aux: "b0-p"),
                row!("b1>1/2,b0=p", eps: true),
                row!("b1>1/2,b0>p"),
            ],
        ),
    }
}

/// The table a spec's regime is read from.
pub fn table_for(spec: &DyadicSumSpec) -> TableId {
    match spec.kind {
        SumKind::SigmaA => TableId::SigmaA,
        SumKind::XiA => TableId::XiA,
        SumKind::SigmaP => TableId::SigmaP,
        SumKind::Gamma => TableId::Gamma,
        SumKind::GammaAB => TableId::GammaAB,
        SumKind::KappaP => TableId::Kappa,
        SumKind::RhoP => {
            if spec.n_exp < spec.aux_exp {
                TableId::RhoLow
            } else {
                TableId::RhoHigh
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegimePrediction {
    pub table: TableId,
    pub row: usize,
    pub label: String,
    pub main_power: Rational,
    pub aux_power: Rational,
    pub logs: u32,
    pub epsilon: bool,
    pub log_count: u32,
    pub log_arg: LogArg,
}

impl RegimePrediction {
    /// `main^{main_power} · aux^{aux_power} · log⟨·⟩^{log_count}`, where `aux` is `A` or `r`.
    pub fn closed_form(&self, spec: &DyadicSumSpec) -> f64 {
        let main = spec.n_exp as f64;
        let aux = match spec.kind {
            SumKind::KappaP | SumKind::RhoP => -(spec.aux_exp as f64),
            _ => spec.aux_exp as f64,
        };
        let mut v = pow2(self.main_power.to_f64() * main + self.aux_power.to_f64() * aux);
        if self.log_count > 0 {
            let arg = match self.log_arg {
                LogArg::Main => main,
                LogArg::RTimesMain => main + aux,
                LogArg::MainOverAux => main - aux,
            };
            v *= log_bracket(arg).powi(self.log_count as i32);
        }
        v
    }
}

/// `log⟨2^e⟩`, with `⟨x⟩ = (1 + x²)^{1/2}`, floored at `log⟨1⟩` so small arguments stay positive.
fn log_bracket(e: f64) -> f64 {
    let x = pow2(e.max(0.0));
    0.5 * (1.0 + x * x).ln()
}

/// The unique row matching `spec.params`.
pub fn regime_predict(spec: &DyadicSumSpec) -> Result<RegimePrediction> {
    let table = table_for(spec);
    if !table.in_domain(&spec.params) {
        return Err(Error::InvalidArgument(format!(
            "parameters outside the domain of the {table:?} table"
        )));
    }
    let matching: Vec<usize> = table
        .rows()
        .iter()
        .enumerate()
        .filter(|(_, r)| r.matches(&spec.params))
        .map(|(i, _)| i)
        .collect();
    assert_eq!(
        matching.len(),
        1,
        "{table:?} rows must partition the domain: {matching:?}"
    );
    let row = matching[0];
    let r = &table.rows()[row];
    Ok(RegimePrediction {
        table,
        row,
        label: r.label.clone(),
        main_power: r.main_power.eval(&spec.params),
        aux_power: r.aux_power.eval(&spec.params),
        logs: r.logs,
        epsilon: r.epsilon,
        log_count: r.log_count(&spec.params),
        log_arg: r.log_arg,
    })
}

/// Rows matching `params`, for totality checks.
pub fn matching_rows(table: TableId, params: &SumParams) -> Vec<usize> {
    table
        .rows()
        .iter()
        .enumerate()
        .filter(|(_, r)| r.matches(params))
        .map(|(i, _)| i)
        .collect()
}

// ---------------------------------------------------------------------------------------------
// Scans

pub const RATIO_CAP: f64 = 64.0;
pub const SLOPE_TOLERANCE: f64 = 0.05;
pub const EPSILON: f64 = 0.02;
/// Distance kept from every row and domain boundary when sampling scan parameters, so geometric
/// transients like `2^{-margin·j}` are already below `2⁻⁶` at the first scanned `N = 2⁶`.
pub const ROW_MARGIN: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    pub n_exp: u32,
    pub brute: f64,
    pub closed: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub schema_version: u32,
    pub kind: SumKind,
    pub params: SumParams,
    pub aux_exp: u32,
    pub prediction: RegimePrediction,
    pub points: Vec<ScanPoint>,
    /// Fitted slope of log₂(brute / log^k) against log₂ N.
    pub slope: f64,
    pub predicted_slope: f64,
    /// Log rows are checked one-sided: `slope ≤ predicted + ε`.
    pub one_sided: bool,
    pub max_ratio: f64,
    pub min_ratio: f64,
    pub pass: bool,
}

/// Brute force against the matching row over `N = 2^j`, `j ∈ n_range`, at fixed parameters and aux.
pub fn ratio_scan(
    kind: SumKind,
    params: &SumParams,
    aux_exp: u32,
    n_range: std::ops::RangeInclusive<u32>,
) -> Result<ScanReport> {
    if n_range.clone().count() < 6 {
        return Err(Error::InvalidArgument("need at least six N values".into()));
    }
    let specs: Vec<DyadicSumSpec> = n_range
        .map(|n_exp| DyadicSumSpec {
            kind,
            params: params.clone(),
            n_exp,
            aux_exp,
            tail: TailMode::ClosedForm,
        })
        .collect();
    let prediction = regime_predict(&specs[0])?;
    let mut points = Vec::with_capacity(specs.len());
    for spec in &specs {
        let here = regime_predict(spec)?;
        if here.table != prediction.table {
            return Err(Error::InvalidArgument(
                "the scan crosses from one ρ table to the other".into(),
            ));
        }
        let brute = dyadic_sum_bruteforce(spec)?;
        let closed = here.closed_form(spec);
        points.push(ScanPoint {
            n_exp: spec.n_exp,
            brute,
            closed,
            ratio: brute / closed,
        });
    }
    let xs: Vec<f64> = points.iter().map(|p| p.n_exp as f64).collect();
    let ys: Vec<f64> = points
        .iter()
        .map(|p| {
            let spec = DyadicSumSpec {
                kind,
                params: params.clone(),
                n_exp: p.n_exp,
                aux_exp,
                tail: TailMode::ClosedForm,
            };
            let logs = RegimePrediction {
                main_power: Rational::zero(),
                aux_power: Rational::zero(),
                ..prediction.clone()
            }
            .closed_form(&spec);
            (p.brute / logs).log2()
        })
        .collect();
    let (slope, _) = fit_line(&xs, &ys);
    let predicted = prediction.main_power.to_f64();
    let one_sided = prediction.logs > 0 || prediction.epsilon;
    let max_ratio = points.iter().map(|p| p.ratio).fold(0.0, f64::max);
    let min_ratio = points.iter().map(|p| p.ratio).fold(f64::INFINITY, f64::min);
    let slope_ok = if one_sided {
        slope <= predicted + EPSILON
    } else {
        (slope - predicted).abs() <= SLOPE_TOLERANCE
    };
    let ratio_ok = min_ratio >= 1.0 / RATIO_CAP && max_ratio <= RATIO_CAP;
    Ok(ScanReport {
        schema_version: 1,
        kind,
        params: params.clone(),
        aux_exp,
        prediction,
        points,
        slope,
        predicted_slope: predicted,
        one_sided,
        max_ratio,
        min_ratio,
        pass: slope_ok && ratio_ok,
    })
}

/// Default aux exponent for scans of each table: `A = 1` for `Γ`, `r = 1/4` for `κ` and the
/// `r N₀ ≥ 1` side of `ρ`, and `r` below every scanned `1/N₀` for the other side.
pub fn scan_aux(table: TableId, max_n_exp: u32) -> u32 {
    match table {
        TableId::Kappa | TableId::RhoHigh => 2,
        TableId::RhoLow => max_n_exp + 1,
        _ => 0,
    }
}

/// Grid of candidate parameters: each of `p, b0, b1, b2, A` is `k/8` in its box.
fn random_params(rng: &mut impl Rng) -> SumParams {
    let grid = |rng: &mut dyn rand::RngCore, lo: i64, hi: i64| q(rng.gen_range(lo..=hi), 8);
    SumParams {
        p: grid(rng, 1, 24),
        b0: grid(rng, -24, 24),
        b1: grid(rng, -24, 24),
        b2: grid(rng, -24, 24),
        a: grid(rng, -24, 24),
    }
}

/// `count` parameter tuples from the table's domain lying in `row`, each at least `margin` away
/// from the strict boundaries of the row.
pub fn sample_row_params(
    table: TableId,
    row: usize,
    count: usize,
    margin: f64,
    seed: u64,
) -> Vec<SumParams> {
    let r = &table.rows()[row];
    let mut rng = substream(seed, &[0xD1, table as u64, row as u64]);
    let mut out = Vec::with_capacity(count);
    let mut tries = 0u64;
    while out.len() < count && tries < 5_000_000 {
        tries += 1;
        let mut params = random_params(&mut rng);
        // land on equality rows by solving one equality for a variable it contains
        for pred in r.predicates.iter().filter(|p| p.cmp == Cmp::Eq) {
            snap_to_zero(&pred.form, &mut params);
        }
        if table.in_domain(&params)
            && r.matches(&params)
            && r.margin(&params) >= margin
            && table.domain().iter().all(|d| d.margin(&params) >= margin)
        {
            out.push(params);
        }
    }
    out
}

fn snap_to_zero(form: &LinearForm, params: &mut SumParams) {
    let Some(v) = (0..5).rev().find(|&v| !form.coef[v].is_zero()) else {
        return;
    };
    let c = form.coef[v].clone();
    let mut without = params.clone();
    set_var(&mut without, v, Rational::zero());
    let rest = form.eval(&without);
    set_var(params, v, -rest / c);
}

fn set_var(params: &mut SumParams, v: usize, value: Rational) {
    match v {
        0 => params.p = value,
        1 => params.b0 = value,
        2 => params.b1 = value,
        3 => params.b2 = value,
        _ => params.a = value,
    }
}

/// Draws `count` tuples from the table's domain and counts those matching other than exactly one row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TotalityReport {
    pub table: TableId,
    pub samples: usize,
    pub failures: usize,
    pub row_hits: Vec<usize>,
}

pub fn totality_fuzz(table: TableId, count: usize, seed: u64) -> TotalityReport {
    let chunks: Vec<(usize, Vec<usize>)> = (0..count.div_ceil(4096))
        .into_par_iter()
        .map(|c| {
            let mut rng = substream(seed, &[0xF2, table as u64, c as u64]);
            let mut hits = vec![0; table.rows().len()];
            let mut failures = 0;
            let todo = (count - c * 4096).min(4096);
            let mut done = 0;
            while done < todo {
                let mut params = random_params(&mut rng);
                // half the draws are pushed onto a random boundary of a random row
                if rng.gen_bool(0.5) {
                    let row = &table.rows()[rng.gen_range(0..table.rows().len())];
                    let pred = &row.predicates[rng.gen_range(0..row.predicates.len())];
                    snap_to_zero(&pred.form, &mut params);
                }
                if !table.in_domain(&params) {
                    continue;
                }
                done += 1;
                let m = matching_rows(table, &params);
                if m.len() == 1 {
                    hits[m[0]] += 1;
                } else {
                    failures += 1;
                }
            }
            (failures, hits)
        })
        .collect();
    let mut row_hits = vec![0; table.rows().len()];
    let mut failures = 0;
    for (f, h) in chunks {
        failures += f;
        for (t, x) in row_hits.iter_mut().zip(h) {
            *t += x;
        }
    }
    TotalityReport {
        table,
        samples: count,
        failures,
        row_hits,
    }
}
