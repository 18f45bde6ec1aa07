//! Unit-sphere primitives.
//!
//! Everything the protocols manipulate is a direction on S²: measurement
//! settings, the shared hidden variables, the flip-target directions and the
//! direction sums the parties feed into their sign functions. This module
//! holds the vector types, the sign convention, uniform sampling, the
//! deterministic quadrature nodes used by the oracles, and the
//! [`complete_to_unit`] rules that turn an arbitrary direction sum into a unit
//! vector.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, UnitSphere};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance of the unit-norm invariant.
pub const UNIT_TOLERANCE: f64 = 1e-12;

/// A plain 3-vector.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3::new(0.0, 0.0, 0.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    #[inline]
    pub fn dot(self, other: Vec3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    #[inline]
    pub fn norm_squared(self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.norm_squared().sqrt()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

impl From<[f64; 3]> for Vec3 {
    fn from([x, y, z]: [f64; 3]) -> Self {
        Self { x, y, z }
    }
}

impl From<Vec3> for [f64; 3] {
    fn from(v: Vec3) -> Self {
        v.to_array()
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    #[inline]
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    #[inline]
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    #[inline]
    fn mul(self, k: f64) -> Vec3 {
        Vec3::new(self.x * k, self.y * k, self.z * k)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    #[inline]
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

/// A point on the unit sphere. The norm is 1 within [`UNIT_TOLERANCE`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 3]", into = "[f64; 3]")]
pub struct UnitVector3(Vec3);

impl UnitVector3 {
    pub const X: UnitVector3 = UnitVector3(Vec3::new(1.0, 0.0, 0.0));
    pub const Y: UnitVector3 = UnitVector3(Vec3::new(0.0, 1.0, 0.0));
    pub const Z: UnitVector3 = UnitVector3(Vec3::new(0.0, 0.0, 1.0));

    /// Checked constructor: the components must already have unit norm.
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        let v = Vec3::new(x, y, z);
        if !v.is_finite() {
            return Err(Error::InvalidInput(format!("non-finite vector {v:?}")));
        }
        if (v.norm() - 1.0).abs() > UNIT_TOLERANCE {
            return Err(Error::InvalidInput(format!(
                "vector {v:?} has norm {} (expected 1)",
                v.norm()
            )));
        }
        Ok(Self(v))
    }

    /// Normalizes `v`; `None` when `v` is zero or not finite.
    pub fn normalize(v: Vec3) -> Option<Self> {
        let n = v.norm();
        if !n.is_finite() || n == 0.0 {
            return None;
        }
        Some(Self(v * (1.0 / n)))
    }

    /// Wraps a vector the caller has already normalized.
    pub(crate) fn from_unit_unchecked(v: Vec3) -> Self {
        debug_assert!((v.norm() - 1.0).abs() <= 1e-9, "not unit: {v:?}");
        Self(v)
    }

    #[inline]
    pub fn x(self) -> f64 {
        self.0.x
    }

    #[inline]
    pub fn y(self) -> f64 {
        self.0.y
    }

    #[inline]
    pub fn z(self) -> f64 {
        self.0.z
    }

    #[inline]
    pub fn as_vec(self) -> Vec3 {
        self.0
    }

    #[inline]
    pub fn dot(self, other: UnitVector3) -> f64 {
        self.0.dot(other.0)
    }

    pub fn to_array(self) -> [f64; 3] {
        self.0.to_array()
    }
}

impl Neg for UnitVector3 {
    type Output = UnitVector3;
    fn neg(self) -> UnitVector3 {
        UnitVector3(-self.0)
    }
}

impl Mul<Sign> for UnitVector3 {
    type Output = UnitVector3;
    fn mul(self, s: Sign) -> UnitVector3 {
        match s {
            Sign::Plus => self,
            Sign::Minus => -self,
        }
    }
}

impl TryFrom<[f64; 3]> for UnitVector3 {
    type Error = Error;
    fn try_from([x, y, z]: [f64; 3]) -> Result<Self> {
        Self::new(x, y, z)
    }
}

impl From<UnitVector3> for [f64; 3] {
    fn from(v: UnitVector3) -> Self {
        v.to_array()
    }
}

impl From<UnitVector3> for Vec3 {
    fn from(v: UnitVector3) -> Self {
        v.0
    }
}

/// A binary outcome in {−1, +1}.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "i8", into = "i8")]
pub enum Sign {
    Minus,
    Plus,
}

impl Sign {
    /// Sign of a finite real with `of(0.0) == Plus`. NaN maps to `Minus`;
    /// use [`sgn`] where the input is not known to be finite.
    #[inline]
    pub fn of(x: f64) -> Sign {
        if x >= 0.0 {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    #[inline]
    pub fn as_i8(self) -> i8 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }

    pub const BOTH: [Sign; 2] = [Sign::Plus, Sign::Minus];
}

impl Mul for Sign {
    type Output = Sign;
    #[inline]
    fn mul(self, o: Sign) -> Sign {
        if self == o {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }
}

impl Neg for Sign {
    type Output = Sign;
    #[inline]
    fn neg(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }
}

impl TryFrom<i8> for Sign {
    type Error = Error;
    fn try_from(v: i8) -> Result<Self> {
        match v {
            1 => Ok(Sign::Plus),
            -1 => Ok(Sign::Minus),
            other => Err(Error::InvalidInput(format!("{other} is not a sign"))),
        }
    }
}

impl From<Sign> for i8 {
    fn from(s: Sign) -> i8 {
        s.as_i8()
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Plus => "+1",
            Sign::Minus => "-1",
        })
    }
}

/// The sign function with the tie-break `sgn(0) = +1`.
pub fn sgn(x: f64) -> Result<Sign> {
    if !x.is_finite() {
        return Err(Error::NonFinite(x));
    }
    Ok(Sign::of(x))
}

/// One uniform draw from S².
pub fn sample_unit_sphere<R: Rng + ?Sized>(rng: &mut R) -> UnitVector3 {
    let [x, y, z] = UnitSphere.sample(rng);
    // Marsaglia's construction is unit up to a few ulps.
    UnitVector3::from_unit_unchecked(Vec3::new(x, y, z))
}

/// The rule used to complete a direction sum to a unit vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CompletionKind {
    /// Rescale to unit length.
    Normalize,
    /// Add the missing length along the part of ẑ orthogonal to the sum.
    Ortho,
    /// As `Ortho`, with the orthogonal part carrying an extra shared sign.
    OrthoSign,
}

impl CompletionKind {
    pub const ALL: [CompletionKind; 3] = [
        CompletionKind::Normalize,
        CompletionKind::Ortho,
        CompletionKind::OrthoSign,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CompletionKind::Normalize => "normalize",
            CompletionKind::Ortho => "ortho",
            CompletionKind::OrthoSign => "ortho-sign",
        }
    }
}

impl fmt::Display for CompletionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CompletionKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "normalize" => Ok(CompletionKind::Normalize),
            "ortho" => Ok(CompletionKind::Ortho),
            "ortho-sign" => Ok(CompletionKind::OrthoSign),
            other => Err(Error::InvalidInput(format!(
                "unknown completion strategy {other:?} (expected normalize, ortho or ortho-sign)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompletionStrategy {
    pub kind: CompletionKind,
    /// Norms below this are treated as zero.
    pub epsilon: f64,
}

impl CompletionStrategy {
    pub const DEFAULT_EPSILON: f64 = 1e-9;

    pub fn new(kind: CompletionKind, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1e-6) {
            return Err(Error::InvalidInput(format!(
                "completion epsilon {epsilon} outside (0, 1e-6)"
            )));
        }
        Ok(Self { kind, epsilon })
    }

    pub fn with_kind(kind: CompletionKind) -> Self {
        Self {
            kind,
            epsilon: Self::DEFAULT_EPSILON,
        }
    }
}

impl From<CompletionKind> for CompletionStrategy {
    fn from(kind: CompletionKind) -> Self {
        Self::with_kind(kind)
    }
}

/// The completed vector split into the part collinear with the input sum and
/// the part orthogonal to it. `base + orth` is the unit result; callers that
/// attach an extra sign to the completion vector flip `orth` only.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Completion {
    pub base: Vec3,
    pub orth: Vec3,
}

impl Completion {
    pub fn unit(self) -> UnitVector3 {
        self.with_orth_sign(Sign::Plus)
    }

    /// `base ± orth`, renormalized to absorb rounding.
    pub fn with_orth_sign(self, sign: Sign) -> UnitVector3 {
        let v = self.base + self.orth * sign.value();
        UnitVector3::normalize(v).expect("completion is never zero")
    }
}

/// Splits the completion of `w` into collinear and orthogonal parts.
pub fn completion_parts(
    w: Vec3,
    strategy: CompletionStrategy,
    fallback: UnitVector3,
    extra_sign: Sign,
) -> Completion {
    let norm = w.norm();
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if !(norm >= strategy.epsilon) {
        return Completion {
            base: fallback.as_vec(),
            orth: Vec3::ZERO,
        };
    }
    let normalized = Completion {
        base: w * (1.0 / norm),
        orth: Vec3::ZERO,
    };
    match strategy.kind {
        CompletionKind::Normalize => normalized,
        // Nothing (or only rounding noise) left to add.
        CompletionKind::Ortho | CompletionKind::OrthoSign if norm >= 1.0 - strategy.epsilon => {
            normalized
        }
        CompletionKind::Ortho | CompletionKind::OrthoSign => {
            let dir = w * (1.0 / norm);
            let direction = orthogonal_reference(dir, strategy.epsilon);
            let deficit = (1.0 - norm * norm).max(0.0).sqrt();
            let sign = match strategy.kind {
                CompletionKind::OrthoSign => extra_sign.value(),
                _ => 1.0,
            };
            Completion {
                base: w,
                orth: direction * (deficit * sign),
            }
        }
    }
}

/// Unit component of ẑ orthogonal to `dir` (x̂ when `dir` is parallel to ẑ).
fn orthogonal_reference(dir: Vec3, epsilon: f64) -> Vec3 {
    for reference in [UnitVector3::Z.as_vec(), UnitVector3::X.as_vec()] {
        let perp = reference - dir * reference.dot(dir);
        let n = perp.norm();
        if n > epsilon {
            return perp * (1.0 / n);
        }
    }
    unreachable!("ẑ and x̂ cannot both be parallel to a unit vector")
}

/// Completes the direction sum `w` to a unit vector.
///
/// * `Normalize` returns `w / |w|`.
/// * `Ortho` adds `sqrt(1 - |w|²)` along the part of ẑ orthogonal to `w`
///   when `|w| <= 1` and otherwise normalizes.
/// * `OrthoSign` is `Ortho` with the orthogonal part multiplied by `extra_sign`.
///
/// Any `w` shorter than `strategy.epsilon` yields `fallback`.
pub fn complete_to_unit(
    w: Vec3,
    strategy: CompletionStrategy,
    fallback: UnitVector3,
    extra_sign: Sign,
) -> UnitVector3 {
    completion_parts(w, strategy, fallback, extra_sign).unit()
}

/// Equal-weight quadrature nodes on S².
#[derive(Clone, Debug)]
pub struct SphereGrid {
    nodes: Vec<UnitVector3>,
}

impl SphereGrid {
    pub fn nodes(&self) -> &[UnitVector3] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn weight(&self) -> f64 {
        1.0 / self.nodes.len() as f64
    }

    /// Node-average of `f`, summed with compensation.
    pub fn average<F: Fn(UnitVector3) -> f64>(&self, f: F) -> f64 {
        let sum = crate::verify::compensated_sum(self.nodes.iter().map(|&n| f(n)));
        sum * self.weight()
    }
}

/// Fibonacci-lattice nodes: `z_i = 1 - (2i + 1)/n`, azimuth advancing by the
/// golden angle.
pub fn spherical_grid(n: usize) -> Result<SphereGrid> {
    if n < 2 {
        return Err(Error::InvalidInput(format!(
            "spherical grid needs at least 2 nodes, got {n}"
        )));
    }
    let golden_angle = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    let nodes = (0..n)
        .map(|i| {
            let z = 1.0 - (2 * i + 1) as f64 / n as f64;
            let r = (1.0 - z * z).max(0.0).sqrt();
            let phi = golden_angle * i as f64;
            let v = Vec3::new(r * phi.cos(), r * phi.sin(), z);
            UnitVector3::normalize(v).expect("lattice node is nonzero")
        })
        .collect();
    Ok(SphereGrid { nodes })
}
