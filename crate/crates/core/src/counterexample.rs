//! Counterexample families: λ-scaled space-time regions whose weighted trilinear integrals
//! grow faster than the product of norms when a necessary condition fails.

use std::f64::consts::PI;
use std::fmt;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::conditions::{evaluate_conditions, violated_ids, ConditionId};
use crate::error::{Error, Result};
use crate::matrix::{permute_columns, Dim, ExponentMatrix, Perm};
use crate::mc::{fit_line, map_chunks, substream, Moments, CHUNK};
use crate::rational::{q, Rational};
use crate::rules::relabel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct FamilyId(u8);

impl FamilyId {
    pub const ALL: [FamilyId; 9] = [
        FamilyId(1),
        FamilyId(2),
        FamilyId(3),
        FamilyId(4),
        FamilyId(5),
        FamilyId(6),
        FamilyId(7),
        FamilyId(8),
        FamilyId(9),
    ];

    pub fn new(k: u8) -> Result<FamilyId> {
        if (1..=9).contains(&k) {
            Ok(FamilyId(k))
        } else {
            Err(Error::UnknownFamily(k))
        }
    }

    pub fn get(self) -> u8 {
        self.0
    }

    /// Conditions whose necessity this family demonstrates.
    pub fn witnessed(self) -> &'static [ConditionId] {
        use ConditionId::*;
        match self.0 {
            1 => &[B1],
            2 => &[B2, B3, B4],
            3 => &[B5],
            4 => &[B6, B7, B8],
            5 => &[B9, B10, B11],
            6 => &[B12],
            7 => &[B13, B14, B15],
            8 => &[B16, B17, B18],
            _ => &[B19, B20, B21],
        }
    }

    /// The member of `witnessed()` the regions are written for; the rest are reached by permuting columns.
    pub fn canonical_condition(self) -> ConditionId {
        use ConditionId::*;
        match self.0 {
            1 => B1,
            2 => B3,
            3 => B5,
            4 => B7,
            5 => B9,
            6 => B12,
            7 => B13,
            8 => B16,
            _ => B20,
        }
    }

    /// λ-powers of the six weight factors on the regions: `(elliptic, hyperbolic)`.
    /// δ is this row dotted with `(s, b)`.
    pub fn weight_powers(self) -> ([i64; 3], [i64; 3]) {
        match self.0 {
            1 => ([0, 0, 0], [1, 1, 1]),
            2 => ([0, 0, 0], [1, 0, 1]),
            3 => ([1, 1, 1], [1, 1, 1]),
            4 => ([1, 1, 1], [1, 0, 1]),
            5 => ([1, 1, 1], [1, 0, 0]),
            6 => ([1, 1, 1], [0, 0, 0]),
            7 => ([1, 2, 2], [1, 0, 0]),
            8 => ([0, 1, 1], [1, 0, 0]),
            _ => ([1, 0, 1], [0, 0, 0]),
        }
    }

    /// `d(n) = c0 + c1 n`, the exponent of `|A|^{1/2}|B|^{1/2}/|C|^{1/2}`.
    pub fn volume_exponent_form(self) -> (Rational, Rational) {
        match self.0 {
            1 => (q(1, 2), q(0, 1)),
            3 => (q(1, 2), q(1, 2)),
            4 | 7 => (q(0, 1), q(1, 2)),
            5 => (q(-1, 2), q(1, 2)),
            6 => (q(1, 4), q(1, 4)),
            _ => (q(0, 1), q(0, 1)),
        }
    }

    pub fn min_dim(self) -> u32 {
        if self.0 == 7 {
            2
        } else {
            1
        }
    }
}

impl TryFrom<u8> for FamilyId {
    type Error = Error;
    fn try_from(k: u8) -> Result<FamilyId> {
        FamilyId::new(k)
    }
}

impl From<FamilyId> for u8 {
    fn from(f: FamilyId) -> u8 {
        f.0
    }
}

impl fmt::Display for FamilyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "F{}", self.0)
    }
}

/// The family demonstrating necessity of a wave condition.
pub fn family_for(id: ConditionId) -> Option<FamilyId> {
    FamilyId::ALL
        .into_iter()
        .find(|f| f.witnessed().contains(&id))
}

/// `coefficient · λ^power`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScaleExpr {
    pub coefficient: Rational,
    pub power: Rational,
}

impl ScaleExpr {
    pub fn new(coefficient: Rational, power: Rational) -> Self {
        ScaleExpr { coefficient, power }
    }

    pub fn at(&self, lambda: f64) -> f64 {
        if self.coefficient.is_zero() {
            return 0.0;
        }
        self.coefficient.to_f64() * lambda.powf(self.power.to_f64())
    }
}

fn sx(num: i64, den: i64, power: Rational) -> ScaleExpr {
    ScaleExpr::new(q(num, den), power)
}

fn c(num: i64, den: i64) -> ScaleExpr {
    sx(num, den, q(0, 1))
}

fn l(num: i64, den: i64) -> ScaleExpr {
    sx(num, den, q(1, 1))
}

/// A closed interval written as center plus or minus a half-width.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Interval {
    pub center: ScaleExpr,
    pub half_width: ScaleExpr,
}

fn iv(center: ScaleExpr, half_width: ScaleExpr) -> Interval {
    Interval { center, half_width }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Spatial {
    /// `|ξ| ≤ radius`.
    Ball { radius: ScaleExpr },
    /// One interval per axis; a halfspace `ξ₂ ≥ h` is folded into the ξ₂ interval.
    AxisBox { axes: Vec<Interval> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value")]
pub enum TimeCenter {
    Fixed(ScaleExpr),
    PlusNorm,
    MinusNorm,
    Xi1,
}

/// `|τ − center(ξ)| ≤ half_width`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Temporal {
    pub center: TimeCenter,
    pub half_width: ScaleExpr,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Region {
    pub n: Dim,
    pub spatial: Spatial,
    pub temporal: Temporal,
}

/// A space-time frequency `(τ, ξ)`; axes beyond `n` stay zero.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SamplePoint {
    pub tau: f64,
    pub xi: [f64; 3],
}

impl SamplePoint {
    pub fn new(tau: f64, xi: [f64; 3]) -> Self {
        SamplePoint { tau, xi }
    }

    pub fn norm(&self) -> f64 {
        (self.xi[0] * self.xi[0] + self.xi[1] * self.xi[1] + self.xi[2] * self.xi[2]).sqrt()
    }

    pub fn add(&self, other: &SamplePoint) -> SamplePoint {
        SamplePoint {
            tau: self.tau + other.tau,
            xi: [
                self.xi[0] + other.xi[0],
                self.xi[1] + other.xi[1],
                self.xi[2] + other.xi[2],
            ],
        }
    }

    pub fn neg(&self) -> SamplePoint {
        SamplePoint {
            tau: -self.tau,
            xi: [-self.xi[0], -self.xi[1], -self.xi[2]],
        }
    }

    fn scale(&self) -> f64 {
        self.tau.abs().max(self.norm())
    }
}

fn unit_ball_volume(n: u32) -> f64 {
    match n {
        1 => 2.0,
        2 => PI,
        3 => 4.0 * PI / 3.0,
        _ => PI.powf(n as f64 / 2.0) / gamma_half_integer(n + 2),
    }
}

// Γ(k/2) for integer k ≥ 1.
fn gamma_half_integer(k: u32) -> f64 {
    if k == 1 {
        PI.sqrt()
    } else if k == 2 {
        1.0
    } else {
        (k as f64 / 2.0 - 1.0) * gamma_half_integer(k - 2)
    }
}

impl Region {
    fn time_center(&self, xi: &[f64; 3], norm: f64, lambda: f64) -> f64 {
        match &self.temporal.center {
            TimeCenter::Fixed(e) => e.at(lambda),
            TimeCenter::PlusNorm => norm,
            TimeCenter::MinusNorm => -norm,
            TimeCenter::Xi1 => xi[0],
        }
    }

    /// Exact Lebesgue measure at `λ`.
    pub fn volume(&self, lambda: f64) -> f64 {
        let n = self.n.get();
        let spatial = match &self.spatial {
            Spatial::Ball { radius } => unit_ball_volume(n) * radius.at(lambda).powi(n as i32),
            Spatial::AxisBox { axes } => {
                axes.iter().map(|a| 2.0 * a.half_width.at(lambda)).product()
            }
        };
        spatial * 2.0 * self.temporal.half_width.at(lambda)
    }

    /// The exponent `p` with `volume ∝ λ^p`.
    pub fn volume_power(&self) -> Rational {
        let spatial = match &self.spatial {
            Spatial::Ball { radius } => &radius.power * self.n.as_rational(),
            Spatial::AxisBox { axes } => axes.iter().map(|a| a.half_width.power.clone()).sum(),
        };
        spatial + self.temporal.half_width.power.clone()
    }

    /// Uniform draw: ξ uniform in the spatial set, then τ uniform in the slab over ξ.
    pub fn sample(&self, lambda: f64, rng: &mut ChaCha8Rng) -> SamplePoint {
        let n = self.n.get() as usize;
        let mut xi = [0.0; 3];
        match &self.spatial {
            Spatial::Ball { radius } => {
                let r = radius.at(lambda);
                loop {
                    let mut sq = 0.0;
                    for x in xi.iter_mut().take(n) {
                        *x = rng.gen_range(-1.0..=1.0);
                        sq += *x * *x;
                    }
                    if sq <= 1.0 {
                        break;
                    }
                }
                for x in xi.iter_mut().take(n) {
                    *x *= r;
                }
            }
            Spatial::AxisBox { axes } => {
                for (x, a) in xi.iter_mut().zip(axes) {
                    let c = a.center.at(lambda);
                    let h = a.half_width.at(lambda);
                    *x = c + rng.gen_range(-h..=h);
                }
            }
        }
        let norm = (xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2]).sqrt();
        let h = self.temporal.half_width.at(lambda);
        let tau = self.time_center(&xi, norm, lambda) + rng.gen_range(-h..=h);
        SamplePoint { tau, xi }
    }

    /// Membership with a relative slack for rounding.
    pub fn contains(&self, p: &SamplePoint, lambda: f64) -> bool {
        let tol = 1e-9 * (1.0 + lambda * lambda);
        let n = self.n.get() as usize;
        if p.xi.iter().skip(n).any(|&x| x != 0.0) {
            return false;
        }
        let norm = p.norm();
        let inside = match &self.spatial {
            Spatial::Ball { radius } => norm <= radius.at(lambda) + tol,
            Spatial::AxisBox { axes } => axes
                .iter()
                .zip(p.xi.iter())
                .all(|(a, &x)| (x - a.center.at(lambda)).abs() <= a.half_width.at(lambda) + tol),
        };
        inside
            && (p.tau - self.time_center(&p.xi, norm, lambda)).abs()
                <= self.temporal.half_width.at(lambda) + tol
    }

    /// The same region with every half-width and radius halved around the same centers.
    pub fn shrunk(&self) -> Region {
        let half = |e: &ScaleExpr| ScaleExpr::new(&e.coefficient * &q(1, 2), e.power.clone());
        let spatial = match &self.spatial {
            Spatial::Ball { radius } => Spatial::Ball {
                radius: half(radius),
            },
            Spatial::AxisBox { axes } => Spatial::AxisBox {
                axes: axes
                    .iter()
                    .map(|a| iv(a.center.clone(), half(&a.half_width)))
                    .collect(),
            },
        };
        Region {
            n: self.n,
            spatial,
            temporal: Temporal {
                center: self.temporal.center.clone(),
                half_width: half(&self.temporal.half_width),
            },
        }
    }
}

/// Exact measure of `region` at `λ`.
pub fn region_volume(region: &Region, lambda: f64) -> f64 {
    region.volume(lambda)
}

/// The regions `A`, `B`, `C` of a family with `A + B ⊂ C`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionTriple {
    pub family: FamilyId,
    pub lambda: f64,
    pub a: Region,
    pub b: Region,
    pub c: Region,
}

impl RegionTriple {
    pub fn volumes(&self) -> [f64; 3] {
        [
            self.a.volume(self.lambda),
            self.b.volume(self.lambda),
            self.c.volume(self.lambda),
        ]
    }
}

fn slab(center: TimeCenter, half_width: ScaleExpr) -> Temporal {
    Temporal { center, half_width }
}

fn fixed(e: ScaleExpr) -> TimeCenter {
    TimeCenter::Fixed(e)
}

/// A box with the given ξ₁ interval and every transverse axis `|ξ_k| ≤ side`.
fn cross_box(n: usize, first: Interval, side: ScaleExpr) -> Spatial {
    let mut axes = vec![first];
    for _ in 1..n {
        axes.push(iv(c(0, 1), side.clone()));
    }
    Spatial::AxisBox { axes }
}

pub fn family_regions(id: FamilyId, lambda: f64, n: Dim) -> Result<RegionTriple> {
    n.require_numeric()?;
    if n.get() < id.min_dim() {
        return Err(Error::UnsupportedDimension {
            n: n.get(),
            need: "n >= 2 for the family using ξ₂",
        });
    }
    if !(lambda >= 16.0 && lambda.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "λ must be at least 16, got {lambda}"
        )));
    }
    let dim = n.get() as usize;
    let root = |k: i64| sx(k, 1, q(1, 2));
    let square = |k: i64| sx(k, 1, q(2, 1));
    let region = |spatial, temporal| Region {
        n,
        spatial,
        temporal,
    };
    let ball = |r: i64| Spatial::Ball { radius: c(r, 1) };
    let unit_box =
        |center: ScaleExpr, side: i64| cross_box(dim, iv(center, c(side, 1)), c(side, 1));

    let (a, b, cc) = match id.get() {
        1 => {
            let a = region(ball(1), slab(fixed(l(3, 2)), l(1, 2)));
            (a.clone(), a, region(ball(2), slab(fixed(l(3, 1)), l(1, 1))))
        }
        2 => (
            region(ball(1), slab(fixed(c(0, 1)), c(1, 1))),
            region(ball(1), slab(fixed(l(1, 1)), c(1, 1))),
            region(ball(2), slab(fixed(l(1, 1)), c(2, 1))),
        ),
        3 => {
            let a = region(
                cross_box(dim, iv(l(3, 2), l(1, 2)), l(1, 1)),
                slab(fixed(c(0, 1)), l(1, 2)),
            );
            let cc = region(
                cross_box(dim, iv(l(3, 1), l(1, 1)), l(2, 1)),
                slab(fixed(c(0, 1)), l(1, 1)),
            );
            (a.clone(), a, cc)
        }
        4 => (
            region(
                cross_box(dim, iv(l(9, 8), l(1, 8)), l(1, 4)),
                slab(TimeCenter::PlusNorm, c(1, 1)),
            ),
            region(
                cross_box(dim, iv(l(9, 4), l(1, 4)), l(1, 2)),
                slab(fixed(c(0, 1)), l(1, 2)),
            ),
            region(
                cross_box(dim, iv(l(7, 2), l(1, 2)), l(1, 1)),
                slab(fixed(c(0, 1)), l(5, 2)),
            ),
        ),
        5 => {
            let spatial = cross_box(dim, iv(l(5, 4), l(1, 4)), l(1, 2));
            (
                region(spatial.clone(), slab(TimeCenter::PlusNorm, c(1, 1))),
                region(spatial, slab(TimeCenter::MinusNorm, c(1, 1))),
                region(
                    cross_box(dim, iv(l(5, 2), l(1, 2)), l(1, 1)),
                    slab(fixed(c(0, 1)), l(3, 2)),
                ),
            )
        }
        6 => {
            let a = region(
                cross_box(dim, iv(l(3, 2), l(1, 2)), root(1)),
                slab(TimeCenter::Xi1, c(1, 1)),
            );
            let cc = region(
                cross_box(dim, iv(l(3, 1), l(1, 1)), root(2)),
                slab(TimeCenter::Xi1, c(2, 1)),
            );
            (a.clone(), a, cc)
        }
        7 => {
            // ξ₂ ≥ λ/2 within |ξ′| ≤ λ, and ξ₂ ≥ λ within |ξ′| ≤ 2λ.
            let small = |center: ScaleExpr| {
                let mut axes = vec![iv(center, l(1, 1)), iv(l(3, 4), l(1, 4))];
                axes.extend((2..dim).map(|_| iv(c(0, 1), l(1, 1))));
                Spatial::AxisBox { axes }
            };
            let mut big = vec![iv(c(0, 1), l(2, 1)), iv(l(3, 2), l(1, 2))];
            big.extend((2..dim).map(|_| iv(c(0, 1), l(2, 1))));
            (
                region(small(square(1)), slab(TimeCenter::Xi1, c(1, 1))),
                region(small(square(-1)), slab(TimeCenter::Xi1, c(1, 1))),
                region(
                    Spatial::AxisBox { axes: big },
                    slab(TimeCenter::Xi1, c(2, 1)),
                ),
            )
        }
        8 => (
            region(unit_box(l(1, 1), 1), slab(fixed(l(1, 1)), c(1, 1))),
            region(unit_box(l(-1, 1), 1), slab(fixed(l(1, 1)), c(1, 1))),
            region(unit_box(c(0, 1), 2), slab(fixed(l(2, 1)), c(2, 1))),
        ),
        _ => (
            region(unit_box(c(0, 1), 1), slab(fixed(c(0, 1)), c(1, 1))),
            region(unit_box(l(1, 1), 1), slab(fixed(l(1, 1)), c(1, 1))),
            region(unit_box(l(1, 1), 2), slab(fixed(l(1, 1)), c(2, 1))),
        ),
    };
    Ok(RegionTriple {
        family: id,
        lambda,
        a,
        b,
        c: cc,
    })
}

fn family_tag(id: FamilyId, lambda: f64) -> [u64; 2] {
    [id.get() as u64, lambda.to_bits()]
}

fn count_outside(
    triple: &RegionTriple,
    target: &Region,
    samples: usize,
    seed: u64,
    salt: u64,
) -> usize {
    let tag = family_tag(triple.family, triple.lambda);
    let lambda = triple.lambda;
    map_chunks(samples, |chunk, range| {
        let mut rng = substream(seed, &[salt, tag[0], tag[1], chunk]);
        range
            .filter(|_| {
                let x1 = triple.a.sample(lambda, &mut rng);
                let x2 = triple.b.sample(lambda, &mut rng);
                !target.contains(&x1.add(&x2), lambda)
            })
            .count()
    })
    .into_iter()
    .sum()
}

/// Draws `X₁ ∈ A`, `X₂ ∈ B` and counts sums outside `C`.
pub fn containment_check(
    id: FamilyId,
    lambda: f64,
    n: Dim,
    samples: usize,
    seed: u64,
) -> Result<usize> {
    if samples == 0 {
        return Err(Error::InvalidArgument("samples must be at least 1".into()));
    }
    let triple = family_regions(id, lambda, n)?;
    Ok(count_outside(&triple, &triple.c, samples, seed, 0xC0))
}

/// The checker run against `C` shrunk by half; a working checker reports violations here.
pub fn containment_self_test(
    id: FamilyId,
    lambda: f64,
    n: Dim,
    samples: usize,
    seed: u64,
) -> Result<usize> {
    if samples == 0 {
        return Err(Error::InvalidArgument("samples must be at least 1".into()));
    }
    let triple = family_regions(id, lambda, n)?;
    Ok(count_outside(
        &triple,
        &triple.c.shrunk(),
        samples,
        seed,
        0xC1,
    ))
}

fn bracket(x: f64) -> f64 {
    (1.0 + x * x).sqrt()
}

// Per-factor values ⟨ξ_j⟩ and ⟨|τ_j| − |ξ_j|⟩.
fn factors(points: [&SamplePoint; 3]) -> ([f64; 3], [f64; 3]) {
    let mut e = [0.0; 3];
    let mut h = [0.0; 3];
    for (j, p) in points.iter().enumerate() {
        let norm = p.norm();
        e[j] = bracket(norm);
        h[j] = bracket(p.tau.abs() - norm);
    }
    (e, h)
}

fn weight_f64(s: &[f64; 3], b: &[f64; 3], e: &[f64; 3], h: &[f64; 3]) -> f64 {
    let mut w = 1.0;
    for j in 0..3 {
        if s[j] != 0.0 {
            w *= e[j].powf(s[j]);
        }
        if b[j] != 0.0 {
            w *= h[j].powf(b[j]);
        }
    }
    w
}

/// The six-factor weight `Π ⟨ξ_j⟩^{s_j} ⟨|τ_j|−|ξ_j|⟩^{b_j}` on a point triple summing to zero.
pub fn weight_value(
    m: &ExponentMatrix,
    x0: &SamplePoint,
    x1: &SamplePoint,
    x2: &SamplePoint,
) -> Result<f64> {
    let sum = x0.add(x1).add(x2);
    let scale = x0.scale().max(x1.scale()).max(x2.scale()).max(1.0);
    let defect = sum.scale();
    if defect > 1e-9 * scale {
        return Err(Error::ConstraintViolated(defect));
    }
    let (s, b) = m.to_f64();
    let (e, h) = factors([x0, x1, x2]);
    Ok(weight_f64(&s, &b, &e, &h))
}

/// `Î = |A||B| · mean(1/w(−(X₁+X₂), X₁, X₂))` with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub i_hat: f64,
    pub stderr: f64,
}

/// Runs the sampling stream of [`estimate_i`], handing each `(X₀, X₁, X₂)` and its integrand value
/// to `visit`; returns one accumulator per chunk, in chunk order.
pub(crate) fn weighted_stream<A, F>(
    triple: &RegionTriple,
    m: &ExponentMatrix,
    samples: usize,
    seed: u64,
    visit: F,
) -> Vec<A>
where
    A: Default + Send,
    F: Fn(&mut A, [&SamplePoint; 3], f64) + Sync,
{
    let (s, b) = m.to_f64();
    let lambda = triple.lambda;
    let tag = family_tag(triple.family, lambda);
    map_chunks(samples, |chunk, range| {
        let mut rng = substream(seed, &[0xE5, tag[0], tag[1], chunk]);
        let mut acc = A::default();
        for _ in range {
            let x1 = triple.a.sample(lambda, &mut rng);
            let x2 = triple.b.sample(lambda, &mut rng);
            let x0 = x1.add(&x2).neg();
            let (e, h) = factors([&x0, &x1, &x2]);
            visit(&mut acc, [&x0, &x1, &x2], 1.0 / weight_f64(&s, &b, &e, &h));
        }
        acc
    })
}

fn estimate_on(triple: &RegionTriple, m: &ExponentMatrix, samples: usize, seed: u64) -> Estimate {
    let parts = weighted_stream(triple, m, samples, seed, |acc: &mut Moments, _, v| {
        acc.push(v)
    });
    let mut total = Moments::default();
    for p in &parts {
        total.merge(p);
    }
    let [va, vb, _] = triple.volumes();
    Estimate {
        i_hat: va * vb * total.mean(),
        stderr: va * vb * total.std_err(),
    }
}

pub fn estimate_i(
    id: FamilyId,
    m: &ExponentMatrix,
    lambda: f64,
    n: Dim,
    samples: usize,
    seed: u64,
) -> Result<Estimate> {
    if samples == 0 {
        return Err(Error::InvalidArgument("samples must be at least 1".into()));
    }
    let triple = family_regions(id, lambda, n)?;
    Ok(estimate_on(&triple, m, samples, seed))
}

/// `(δ, d)`: the weight exponent on the regions and the volume-ratio exponent.
pub fn family_exponents(id: FamilyId, m: &ExponentMatrix, n: Dim) -> (Rational, Rational) {
    let (ps, pb) = id.weight_powers();
    let mut delta = Rational::zero();
    for j in 0..3 {
        delta = delta + Rational::from_int(ps[j]) * &m.s[j] + Rational::from_int(pb[j]) * &m.b[j];
    }
    let (c0, c1) = id.volume_exponent_form();
    (delta, c0 + c1 * n.as_rational())
}

pub const DEFAULT_LAMBDAS: [f64; 6] = [16.0, 32.0, 64.0, 128.0, 256.0, 512.0];
pub const SLOPE_TOLERANCE: f64 = 0.07;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaRow {
    pub lambda: f64,
    #[serde(rename = "I_hat")]
    pub i_hat: f64,
    pub stderr: f64,
    #[serde(rename = "C")]
    pub c: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub schema_version: u32,
    pub family: FamilyId,
    pub matrix: ExponentMatrix,
    pub n: Dim,
    pub delta: Rational,
    pub d: Rational,
    pub per_lambda: Vec<LambdaRow>,
    pub slope: f64,
    pub slope_stderr: f64,
    pub predicted_slope: f64,
    pub tolerance: f64,
    pub containment_violations: usize,
    pub pass: bool,
}

/// Fits the log₂-slope of `C(λ) = Î/(|A||B||C|)^{1/2}` and compares it with `d − δ`.
pub fn necessity_report(
    id: FamilyId,
    m: &ExponentMatrix,
    lambdas: &[f64],
    n: Dim,
    samples: usize,
    seed: u64,
    tolerance: f64,
) -> Result<ScalingReport> {
    if lambdas.len() < 5 {
        return Err(Error::InvalidArgument("need at least five λ values".into()));
    }
    if samples < 2 {
        return Err(Error::InvalidArgument(
            "need at least two samples per λ".into(),
        ));
    }
    let mut rows = Vec::with_capacity(lambdas.len());
    let mut violations = 0;
    for &lambda in lambdas {
        let triple = family_regions(id, lambda, n)?;
        violations += count_outside(&triple, &triple.c, samples.min(CHUNK * 4), seed, 0xC0);
        let est = estimate_on(&triple, m, samples, seed);
        let [va, vb, vc] = triple.volumes();
        let norm = (va * vb * vc).sqrt();
        rows.push(LambdaRow {
            lambda,
            i_hat: est.i_hat,
            stderr: est.stderr,
            c: est.i_hat / norm,
        });
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.lambda.log2()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.c.log2()).collect();
    let (slope, _) = fit_line(&xs, &ys);
    // σ(log₂ C) ≈ σ(Î)/(Î ln 2), pushed through the least-squares weights.
    let mean_x = xs.iter().sum::<f64>() / xs.len() as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mean_x).powi(2)).sum();
    let var: f64 = rows
        .iter()
        .zip(&xs)
        .map(|(r, x)| {
            let sy = r.stderr / (r.i_hat * std::f64::consts::LN_2);
            ((x - mean_x) / sxx).powi(2) * sy * sy
        })
        .sum();
    let (delta, d) = family_exponents(id, m, n);
    let predicted = (&d - &delta).to_f64();
    Ok(ScalingReport {
        schema_version: 1,
        family: id,
        matrix: m.clone(),
        n,
        delta,
        d,
        per_lambda: rows,
        slope,
        slope_stderr: var.sqrt(),
        predicted_slope: predicted,
        tolerance,
        containment_violations: violations,
        pass: violations == 0 && (slope - predicted).abs() <= tolerance,
    })
}

/// Largest ratio, over sampled points, between a weight factor and its predicted size `λ^power`,
/// taken in whichever direction exceeds one.
pub fn weight_comparability(
    id: FamilyId,
    lambda: f64,
    n: Dim,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    let triple = family_regions(id, lambda, n)?;
    let (ps, pb) = id.weight_powers();
    let tag = family_tag(id, lambda);
    let worst = map_chunks(samples, |chunk, range| {
        let mut rng = substream(seed, &[0xCA, tag[0], tag[1], chunk]);
        let mut k: f64 = 1.0;
        for _ in range {
            let x1 = triple.a.sample(lambda, &mut rng);
            let x2 = triple.b.sample(lambda, &mut rng);
            let x0 = x1.add(&x2).neg();
            let (e, h) = factors([&x0, &x1, &x2]);
            for j in 0..3 {
                for (value, power) in [(e[j], ps[j]), (h[j], pb[j])] {
                    let ratio = value / lambda.powi(power as i32);
                    k = k.max(ratio).max(1.0 / ratio);
                }
            }
        }
        k
    });
    Ok(worst.into_iter().fold(1.0, f64::max))
}

/// Recorded bounds on `weight_comparability` over λ ∈ [16, 512] at n ≤ 3.
pub fn comparability_bound(id: FamilyId) -> f64 {
    match id.get() {
        2 => 4.0,
        5 | 8 => 5.0,
        _ => 6.0,
    }
}

/// The witness for the lowest violated condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub condition: ConditionId,
    pub family: FamilyId,
    /// `permute_columns(M, perm)` violates the family's canonical condition.
    pub perm: Perm,
}

pub fn violated_condition_witness(m: &ExponentMatrix, n: Dim) -> Result<Witness> {
    let statuses = evaluate_conditions(m, n);
    let violated = violated_ids(&statuses);
    let condition = *violated.first().ok_or(Error::NoViolation)?;
    let family = family_for(condition).expect("every wave condition has a family");
    let canonical = family.canonical_condition();
    let perm = Perm::all()
        .into_iter()
        .find(|&p| relabel(canonical, p) == condition)
        .expect("family members are permutations of the canonical condition");
    Ok(Witness {
        condition,
        family,
        perm,
    })
}

/// Predicted slope `d − δ` for the witnessing family on the permuted matrix.
pub fn witness_slope(m: &ExponentMatrix, n: Dim) -> Result<(Witness, Rational)> {
    let w = violated_condition_witness(m, n)?;
    let (delta, d) = family_exponents(w.family, &permute_columns(m, w.perm), n);
    Ok((w, d - delta))
}

/// A matrix on which the family's predicted slope `d − δ` equals `target`.
///
/// Every exponent the family weighs gets the common value that balances `δ = d`, the first two
/// are pushed apart by a δ-neutral offset so no weight factor is trivial, and the first one is
/// then moved to reach the target.
pub fn matrix_with_slope(id: FamilyId, n: Dim, target: &Rational) -> ExponentMatrix {
    let (ps, pb) = id.weight_powers();
    let (c0, c1) = id.volume_exponent_form();
    let d = c0 + c1 * n.as_rational();
    let total: i64 = ps.iter().chain(pb.iter()).sum();
    let t = &d / &Rational::from_int(total);
    let mut m = ExponentMatrix::zero();
    for j in 0..3 {
        if ps[j] != 0 {
            m.s[j] = t.clone();
        }
        if pb[j] != 0 {
            m.b[j] = t.clone();
        }
    }
    // (row, column, power): row 0 is s, row 1 is b.
    let slots: Vec<(usize, usize, i64)> = (0..3)
        .filter(|&j| ps[j] != 0)
        .map(|j| (0, j, ps[j]))
        .chain((0..3).filter(|&j| pb[j] != 0).map(|j| (1, j, pb[j])))
        .collect();
    let mut bump = |(row, j, p): (usize, usize, i64), by: Rational| {
        let cell = if row == 0 { &mut m.s[j] } else { &mut m.b[j] };
        *cell = &*cell + &(by / Rational::from_int(p));
    };
    if slots.len() >= 2 {
        bump(slots[0], q(1, 4));
        bump(slots[1], q(-1, 4));
    }
    bump(slots[0], -target);
    m
}
