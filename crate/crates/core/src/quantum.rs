//! Closed-form quantum targets for the state family
//! `cos γ |00⟩ + sin γ |11⟩`, `0 ≤ γ ≤ π/4`.
//!
//! With `c = cos 2γ` and `s = sin 2γ`, spin measurements along `â` and `b̂`
//! give
//!
//! ```text
//! P_QM(α, β | â, b̂) = ¼ [1 + α c a_z + β c b_z + αβ C(â, b̂)]
//! C(â, b̂)          = a_z b_z + s (a_x b_x − a_y b_y)
//! ```
//!
//! The module also carries the local/nonlocal split of this distribution,
//! `P_QM = (1 − s) P_L + s P_NL`, whose nonlocal part is
//!
//! ```text
//! P_NL = ¼ [1 + α F(a_z) + β F(b_z) + αβ G(â, b̂)]
//! F(x) = (c x − (1 − s) f(x)) / s,   f(x) = sgn(x) min(1, c|x| / (1 − s))
//! G    = a_x b_x − a_y b_y + (a_z b_z − (1 − s) f(a_z) f(b_z)) / s
//! ```
//!
//! and whose local part is the product of two biased coins,
//! `P_L = ¼ (1 + α f(a_z)) (1 + β f(b_z))`.

use std::f64::consts::{FRAC_PI_4, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Sign, UnitVector3, Vec3};

/// Denominators `1 − c·z` below this make the flip-target maps undefined.
pub const MAP_DENOMINATOR_FLOOR: f64 = 1e-9;

/// Entries below this are genuine failures rather than rounding noise.
pub const VALIDITY_FLOOR: f64 = -1e-9;

/// Entries in `[REPORT_CLAMP, 0)` are clamped to zero when reported.
pub const REPORT_CLAMP: f64 = -1e-12;

/// Accepted overshoot of `γ` past `π/4` (decimal radians on the command line).
const GAMMA_SLACK: f64 = 1e-9;

/// The entanglement angle `γ` with `c = cos 2γ` and `s = sin 2γ` cached.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct EntanglementParam {
    gamma: f64,
    c: f64,
    s: f64,
    /// `1 − s`, computed as `(cos γ − sin γ)²` to avoid cancellation near π/4.
    one_minus_s: f64,
}

impl EntanglementParam {
    pub fn new(gamma: f64) -> Result<Self> {
        if !(0.0..=FRAC_PI_4 + GAMMA_SLACK).contains(&gamma) {
            return Err(Error::InvalidInput(format!(
                "gamma = {gamma} outside [0, π/4]"
            )));
        }
        if (gamma - FRAC_PI_4).abs() <= GAMMA_SLACK {
            return Ok(Self::maximal());
        }
        let (sin, cos) = gamma.sin_cos();
        let diff = cos - sin;
        Ok(Self {
            gamma,
            c: (2.0 * gamma).cos(),
            s: (2.0 * gamma).sin(),
            one_minus_s: diff * diff,
        })
    }

    /// γ = π/4, with `c = 0` and `s = 1` exactly.
    pub fn maximal() -> Self {
        Self {
            gamma: FRAC_PI_4,
            c: 0.0,
            s: 1.0,
            one_minus_s: 0.0,
        }
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn one_minus_s(&self) -> f64 {
        self.one_minus_s
    }

    pub fn is_maximal(&self) -> bool {
        self.one_minus_s == 0.0
    }

    pub fn is_separable(&self) -> bool {
        self.s == 0.0
    }

    /// Half-width `(1 − s)/c` of the equatorial band where `F` vanishes.
    ///
    /// At γ = π/4 this is the limiting value 0: the band collapses onto the
    /// equator as the state approaches maximal entanglement.
    pub fn slice_half_width(&self) -> f64 {
        if self.is_maximal() {
            0.0
        } else {
            self.one_minus_s / self.c
        }
    }

    /// Non-strict: the boundary belongs to the slice.
    pub fn in_slice(&self, z: f64) -> bool {
        z.abs() <= self.slice_half_width()
    }

    /// Weight of the local part of the decomposition.
    pub fn p_local(&self) -> f64 {
        self.one_minus_s
    }
}

impl TryFrom<f64> for EntanglementParam {
    type Error = Error;
    fn try_from(gamma: f64) -> Result<Self> {
        Self::new(gamma)
    }
}

impl From<EntanglementParam> for f64 {
    fn from(p: EntanglementParam) -> f64 {
        p.gamma
    }
}

/// A distribution over `(α, β) ∈ {±1}²`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointDist {
    #[serde(rename = "pp")]
    pub p_pp: f64,
    #[serde(rename = "pm")]
    pub p_pm: f64,
    #[serde(rename = "mp")]
    pub p_mp: f64,
    #[serde(rename = "mm")]
    pub p_mm: f64,
}

/// Outcome pairs in the storage order `(+,+), (+,−), (−,+), (−,−)`.
pub const OUTCOMES: [(Sign, Sign); 4] = [
    (Sign::Plus, Sign::Plus),
    (Sign::Plus, Sign::Minus),
    (Sign::Minus, Sign::Plus),
    (Sign::Minus, Sign::Minus),
];

impl JointDist {
    pub fn from_fn<F: FnMut(Sign, Sign) -> f64>(mut f: F) -> Self {
        let [pp, pm, mp, mm] = OUTCOMES.map(|(a, b)| f(a, b));
        Self {
            p_pp: pp,
            p_pm: pm,
            p_mp: mp,
            p_mm: mm,
        }
    }

    /// `¼ [1 + α mean_a + β mean_b + αβ corr]`.
    pub fn from_moments(mean_a: f64, mean_b: f64, corr: f64) -> Self {
        Self::from_fn(|a, b| {
            let (a, b) = (a.value(), b.value());
            0.25 * (1.0 + a * mean_a + b * mean_b + a * b * corr)
        })
    }

    pub fn from_array(p: [f64; 4]) -> Self {
        Self {
            p_pp: p[0],
            p_pm: p[1],
            p_mp: p[2],
            p_mm: p[3],
        }
    }

    pub fn to_array(&self) -> [f64; 4] {
        [self.p_pp, self.p_pm, self.p_mp, self.p_mm]
    }

    pub fn get(&self, alpha: Sign, beta: Sign) -> f64 {
        match (alpha, beta) {
            (Sign::Plus, Sign::Plus) => self.p_pp,
            (Sign::Plus, Sign::Minus) => self.p_pm,
            (Sign::Minus, Sign::Plus) => self.p_mp,
            (Sign::Minus, Sign::Minus) => self.p_mm,
        }
    }

    pub fn total(&self) -> f64 {
        self.to_array().iter().sum()
    }

    pub fn min_entry(&self) -> f64 {
        self.to_array().into_iter().fold(f64::INFINITY, f64::min)
    }

    pub fn mean_alpha(&self) -> f64 {
        self.p_pp + self.p_pm - self.p_mp - self.p_mm
    }

    pub fn mean_beta(&self) -> f64 {
        self.p_pp - self.p_pm + self.p_mp - self.p_mm
    }

    pub fn correlation(&self) -> f64 {
        self.p_pp - self.p_pm - self.p_mp + self.p_mm
    }

    /// Largest entrywise absolute difference.
    pub fn max_abs_diff(&self, other: &JointDist) -> f64 {
        self.to_array()
            .into_iter()
            .zip(other.to_array())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }

    /// Errors when an entry is below [`VALIDITY_FLOOR`].
    pub fn validate(self, what: &str) -> Result<Self> {
        let min = self.min_entry();
        if min < VALIDITY_FLOOR {
            return Err(Error::Decomposition(format!(
                "{what} has entry {min:e} below {VALIDITY_FLOOR:e}"
            )));
        }
        Ok(self)
    }

    /// Entries in `[REPORT_CLAMP, 0)` set to zero; everything else untouched.
    pub fn clamped(&self) -> JointDist {
        let clamp = |p: f64| if (REPORT_CLAMP..0.0).contains(&p) { 0.0 } else { p };
        JointDist::from_array(self.to_array().map(clamp))
    }
}

/// The quantum correlation `⟨αβ⟩ = a_z b_z + s (a_x b_x − a_y b_y)`.
pub fn correlation(param: &EntanglementParam, a: UnitVector3, b: UnitVector3) -> f64 {
    a.z() * b.z() + param.s() * (a.x() * b.x() - a.y() * b.y())
}

pub fn p_qm(param: &EntanglementParam, a: UnitVector3, b: UnitVector3) -> JointDist {
    let c = param.c();
    JointDist::from_moments(c * a.z(), c * b.z(), correlation(param, a, b))
}

fn checked_denominator(param: &EntanglementParam, z: f64) -> Result<f64> {
    let denominator = 1.0 - param.c() * z;
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if !(denominator >= MAP_DENOMINATOR_FLOOR) {
        return Err(Error::DegenerateMap {
            denominator,
            floor: MAP_DENOMINATOR_FLOOR,
        });
    }
    Ok(denominator)
}

fn flip_target(param: &EntanglementParam, v: UnitVector3, z_numerator: f64) -> Result<UnitVector3> {
    let d = checked_denominator(param, v.z())?;
    let s = param.s();
    let raw = Vec3::new(s * v.x() / d, s * v.y() / d, z_numerator / d);
    // `raw` is unit up to rounding; the division amplifies it near the floor.
    Ok(UnitVector3::normalize(raw).expect("flip target has unit norm"))
}

/// Alice's flip-target direction for the first protocol,
/// `Â = (s a_x, s a_y, a_z − c) / (1 − c a_z)`.
pub fn hat_a_p1(param: &EntanglementParam, a: UnitVector3) -> Result<UnitVector3> {
    flip_target(param, a, a.z() - param.c())
}

/// Bob's flip-target direction, `B̂ = (s b_x, s b_y, b_z − c) / (1 − c b_z)`.
pub fn hat_b(param: &EntanglementParam, b: UnitVector3) -> Result<UnitVector3> {
    flip_target(param, b, b.z() - param.c())
}

/// Alice's direction in the nonlocal-part protocol,
/// `Â = (s a_x, s a_y, c − a_z) / (1 − c a_z)`.
pub fn hat_a_p2(param: &EntanglementParam, a: UnitVector3) -> Result<UnitVector3> {
    flip_target(param, a, param.c() - a.z())
}

/// `b̂′ = (b_x, −b_y, −b_z)`.
pub fn b_prime(b: UnitVector3) -> UnitVector3 {
    UnitVector3::from_unit_unchecked(Vec3::new(b.x(), -b.y(), -b.z()))
}

/// `f(x) = sgn(x) min(1, c|x| / (1 − s))`; identically 0 at γ = π/4.
pub fn epr2_f(param: &EntanglementParam, x: f64) -> f64 {
    if param.is_maximal() || x == 0.0 {
        return 0.0;
    }
    let magnitude = (param.c() * x.abs() / param.one_minus_s()).min(1.0);
    magnitude.copysign(x)
}

/// `F(x) = (c x − (1 − s) f(x)) / s`, exactly 0 on the slice.
pub fn epr2_big_f(param: &EntanglementParam, x: f64) -> f64 {
    if param.in_slice(x) {
        return 0.0;
    }
    epr2_big_f_formula(param, x)
}

/// The defining expression for `F`, with no slice shortcut.
pub fn epr2_big_f_formula(param: &EntanglementParam, x: f64) -> f64 {
    (param.c() * x - param.one_minus_s() * epr2_f(param, x)) / param.s()
}

/// `G(â, b̂) = a_x b_x − a_y b_y + (a_z b_z − (1 − s) f(a_z) f(b_z)) / s`.
pub fn epr2_g(param: &EntanglementParam, a: UnitVector3, b: UnitVector3) -> f64 {
    let fa = epr2_f(param, a.z());
    let fb = epr2_f(param, b.z());
    a.x() * b.x() - a.y() * b.y() + (a.z() * b.z() - param.one_minus_s() * fa * fb) / param.s()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Epr2Components {
    /// `F(a_z)`.
    pub f_a: f64,
    /// `F(b_z)`.
    pub f_b: f64,
    pub g: f64,
    pub p_local: f64,
}

impl Epr2Components {
    pub fn compute(param: &EntanglementParam, a: UnitVector3, b: UnitVector3) -> Result<Self> {
        require_entangled(param)?;
        Ok(Self {
            f_a: epr2_big_f(param, a.z()),
            f_b: epr2_big_f(param, b.z()),
            g: epr2_g(param, a, b),
            p_local: param.p_local(),
        })
    }
}

fn require_entangled(param: &EntanglementParam) -> Result<()> {
    if param.is_separable() {
        return Err(Error::InvalidInput(
            "the nonlocal part is undefined at gamma = 0".into(),
        ));
    }
    Ok(())
}

/// The nonlocal part `P_NL`.
pub fn p_nl(param: &EntanglementParam, a: UnitVector3, b: UnitVector3) -> Result<JointDist> {
    let k = Epr2Components::compute(param, a, b)?;
    JointDist::from_moments(k.f_a, k.f_b, k.g).validate("P_NL")
}

/// Closed form of the local part, `¼ (1 + α f(a_z)) (1 + β f(b_z))`.
pub fn p_local_product(param: &EntanglementParam, a: UnitVector3, b: UnitVector3) -> JointDist {
    let fa = epr2_f(param, a.z());
    let fb = epr2_f(param, b.z());
    JointDist::from_fn(|al, be| 0.25 * (1.0 + al.value() * fa) * (1.0 + be.value() * fb))
}

/// The local part recovered from the mixture, `(P_QM − s P_NL) / (1 − s)`.
///
/// Rounding in the numerator is divided by `1 − s`, so accuracy degrades
/// like `ε / (1 − s)` near maximal entanglement.
pub fn reconstruct_local(
    param: &EntanglementParam,
    a: UnitVector3,
    b: UnitVector3,
) -> Result<JointDist> {
    if param.is_separable() || param.is_maximal() {
        return Err(Error::InvalidInput(
            "local reconstruction needs 0 < gamma < π/4".into(),
        ));
    }
    let q = p_qm(param, a, b).to_array();
    let nl = p_nl(param, a, b)?.to_array();
    let (s, w) = (param.s(), param.one_minus_s());
    let local = JointDist::from_array([0, 1, 2, 3].map(|i| (q[i] - s * nl[i]) / w));
    local.validate("P_L")
}

/// Maximum CHSH combination of [`correlation`] over settings in the x–z plane.
///
/// For Alice's pair fixed, Bob's best response is available in closed form,
/// `S(θ₁, θ₂) = |M(a₁ + a₂)| + |M(a₁ − a₂)|` with `M = diag(s, 1)`; the
/// remaining two angles are optimized numerically by a grid scan followed by
/// a shrinking pattern search.
pub fn chsh_value(param: &EntanglementParam) -> f64 {
    let s = param.s();
    let score = |t1: f64, t2: f64| {
        let (s1, c1) = t1.sin_cos();
        let (s2, c2) = t2.sin_cos();
        let plus = (s * (s1 + s2)).hypot(c1 + c2);
        let minus = (s * (s1 - s2)).hypot(c1 - c2);
        plus + minus
    };

    const GRID: usize = 128;
    let step = PI / GRID as f64;
    let mut best = (0.0, 0.0, f64::NEG_INFINITY);
    for i in 0..GRID {
        for j in 0..GRID {
            let (t1, t2) = (i as f64 * step, j as f64 * step);
            let v = score(t1, t2);
            if v > best.2 {
                best = (t1, t2, v);
            }
        }
    }

    let (mut t1, mut t2, mut value) = best;
    let mut h = step;
    while h > 1e-12 {
        let mut moved = false;
        for (d1, d2) in [(h, 0.0), (-h, 0.0), (0.0, h), (0.0, -h)] {
            let v = score(t1 + d1, t2 + d2);
            if v > value {
                (t1, t2, value) = (t1 + d1, t2 + d2, v);
                moved = true;
            }
        }
        if !moved {
            h *= 0.5;
        }
    }
    value
}

#[cfg(test)]
#[allow(clippy::approx_constant)]
mod tests {
    use super::*;
    use crate::geometry::sample_unit_sphere;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_8, SQRT_2};

    const TOL: f64 = 1e-12;

    fn param(g: f64) -> EntanglementParam {
        EntanglementParam::new(g).unwrap()
    }

    fn unit(x: f64, y: f64, z: f64) -> UnitVector3 {
        UnitVector3::new(x, y, z).unwrap()
    }

    fn assert_dist(d: JointDist, expected: [f64; 4], tol: f64) {
        for (got, want) in d.to_array().into_iter().zip(expected) {
            assert!((got - want).abs() <= tol, "{d:?} vs {expected:?}");
        }
    }

    #[test]
    fn param_invariants() {
        for g in [0.0, 0.1, FRAC_PI_8, 0.7, FRAC_PI_4] {
            let p = param(g);
            assert!((p.c() * p.c() + p.s() * p.s() - 1.0).abs() <= TOL);
            assert!(p.c() >= 0.0 && p.s() >= 0.0);
            assert!((p.one_minus_s() - (1.0 - p.s())).abs() <= 1e-15);
        }
        assert!(EntanglementParam::new(-0.1).is_err());
        assert!(EntanglementParam::new(0.8).is_err());
        assert!(EntanglementParam::new(f64::NAN).is_err());
        // ten-digit radians for π/4 are accepted and snapped
        assert!(param(0.7853981634).is_maximal());
    }

    #[test]
    fn p_qm_examples() {
        let z = UnitVector3::Z;
        assert_dist(p_qm(&param(0.0), z, z), [1.0, 0.0, 0.0, 0.0], TOL);
        assert_dist(p_qm(&param(FRAC_PI_4), z, z), [0.5, 0.0, 0.0, 0.5], TOL);
        assert_dist(
            p_qm(&param(FRAC_PI_4), UnitVector3::X, UnitVector3::Y),
            [0.25; 4],
            TOL,
        );
    }

    #[test]
    fn correlation_examples() {
        for g in [0.0, 0.3, FRAC_PI_4] {
            assert!((correlation(&param(g), UnitVector3::Z, UnitVector3::Z) - 1.0).abs() <= TOL);
            assert!(correlation(&param(g), UnitVector3::X, UnitVector3::Y).abs() <= TOL);
        }
        let c = correlation(&param(FRAC_PI_8), UnitVector3::Y, UnitVector3::Y);
        assert!((c + 0.7071068).abs() < 1e-7);
    }

    #[test]
    fn hat_map_examples() {
        for g in [0.1, FRAC_PI_8, 0.7] {
            let v = hat_b(&param(g), UnitVector3::Z).unwrap();
            assert!((v.z() - 1.0).abs() <= TOL);
        }
        let a = unit(0.6, 0.0, 0.8);
        assert_eq!(hat_a_p1(&param(FRAC_PI_4), a).unwrap(), a);

        let v = hat_a_p1(&param(FRAC_PI_8), UnitVector3::X).unwrap();
        assert!((v.x() - 0.7071068).abs() < 1e-7);
        assert!(v.y().abs() <= TOL);
        assert!((v.z() + 0.7071068).abs() < 1e-7);

        for g in [FRAC_PI_4, FRAC_PI_8] {
            let v = hat_a_p2(&param(g), UnitVector3::Z).unwrap();
            assert!((v.z() + 1.0).abs() <= TOL, "{v:?}");
        }
    }

    #[test]
    fn hat_map_degenerate_denominator() {
        let err = hat_a_p1(&param(0.0), UnitVector3::Z).unwrap_err();
        assert!(matches!(err, Error::DegenerateMap { .. }));
        assert!(hat_b(&param(0.0), UnitVector3::Z).is_err());
        assert!(hat_b(&param(0.0), UnitVector3::X).is_ok());
    }

    #[test]
    fn hat_map_unit_norm_identity() {
        // s²(1 − z²) + (z ∓ c)² = (1 − c z)², checked on the raw formula
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut checked = 0;
        while checked < 10_000 {
            let p = param(rng.random_range(0.0..FRAC_PI_4));
            let a = sample_unit_sphere(&mut rng);
            let d = 1.0 - p.c() * a.z();
            if d < 1e-6 {
                continue;
            }
            checked += 1;
            for num_z in [a.z() - p.c(), p.c() - a.z()] {
                let raw = Vec3::new(p.s() * a.x(), p.s() * a.y(), num_z) * (1.0 / d);
                assert!((raw.norm() - 1.0).abs() <= 1e-9, "{raw:?}");
            }
            for v in [hat_a_p1(&p, a), hat_a_p2(&p, a), hat_b(&p, a)] {
                assert!((v.unwrap().as_vec().norm() - 1.0).abs() <= TOL);
            }
        }
    }

    #[test]
    fn b_prime_examples() {
        assert_eq!(b_prime(UnitVector3::X), UnitVector3::X);
        assert_eq!(b_prime(UnitVector3::Z), -UnitVector3::Z);
        assert_eq!(b_prime(unit(0.6, 0.8, 0.0)).to_array(), [0.6, -0.8, -0.0]);
    }

    #[test]
    fn small_f_examples() {
        let p = param(FRAC_PI_8);
        for g in [0.1, FRAC_PI_8, FRAC_PI_4] {
            assert_eq!(epr2_f(&param(g), 0.0), 0.0);
        }
        assert_eq!(epr2_f(&p, 0.5), 1.0);
        assert!((epr2_f(&p, 0.2) - 0.4828427).abs() < 1e-7);
        assert!((epr2_f(&p, -0.2) + 0.4828427).abs() < 1e-7);
    }

    #[test]
    fn big_f_examples() {
        let p = param(FRAC_PI_8);
        assert_eq!(epr2_big_f(&p, 0.2), 0.0);
        assert!((epr2_big_f(&p, 1.0) - 0.5857864).abs() < 1e-7);
        assert!((epr2_big_f(&p, -1.0) + 0.5857864).abs() < 1e-7);
        let h = p.slice_half_width();
        assert_eq!(epr2_big_f(&p, h), 0.0);
        assert!(epr2_big_f(&p, h + 1e-9) > 0.0);
        assert!(epr2_big_f_formula(&p, 0.2).abs() <= 1e-16);
    }

    #[test]
    fn slice_width_limits() {
        assert_eq!(param(FRAC_PI_4).slice_half_width(), 0.0);
        assert!((param(1e-9).slice_half_width() - 1.0).abs() < 1e-8);
        // shrinks monotonically toward the maximal state
        let mut last = f64::INFINITY;
        for i in 1..100 {
            let w = param(FRAC_PI_4 * i as f64 / 100.0).slice_half_width();
            assert!(w < last);
            last = w;
        }
    }

    #[test]
    fn g_examples() {
        let p = param(FRAC_PI_8);
        let a = unit(0.6, 0.8, 0.0);
        let b = unit(-0.28, 0.96, 0.0);
        assert!((epr2_g(&p, a, b) - a.dot(b_prime(b))).abs() <= TOL);
        for g in [0.2, FRAC_PI_8, FRAC_PI_4] {
            assert!((epr2_g(&param(g), UnitVector3::Z, UnitVector3::Z) - 1.0).abs() <= TOL);
        }
        assert!(epr2_g(&p, UnitVector3::Z, UnitVector3::X).abs() <= TOL);
    }

    #[test]
    fn p_nl_examples() {
        let p = param(FRAC_PI_8);
        let a = unit(0.6, 0.8, 0.0);
        let b = unit(-0.28, 0.96, 0.0);
        let expect = JointDist::from_moments(0.0, 0.0, a.dot(b_prime(b)));
        assert!(p_nl(&p, a, b).unwrap().max_abs_diff(&expect) <= TOL);

        for g in [0.1, FRAC_PI_8, 0.6, FRAC_PI_4] {
            let p = param(g);
            let f1 = epr2_big_f(&p, 1.0);
            let d = p_nl(&p, UnitVector3::Z, UnitVector3::Z).unwrap();
            assert_dist(d, [0.5 * (1.0 + f1), 0.0, 0.0, 0.5 * (1.0 - f1)], TOL);
        }
    }

    #[test]
    fn p_nl_is_p_qm_at_maximal_entanglement() {
        let p = param(FRAC_PI_4);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..1000 {
            let a = sample_unit_sphere(&mut rng);
            let b = sample_unit_sphere(&mut rng);
            let nl = p_nl(&p, a, b).unwrap();
            assert!(nl.max_abs_diff(&p_qm(&p, a, b)) <= TOL);
            assert!(nl.mean_alpha().abs() <= TOL);
        }
        // on the equator this is the b̂′ scalar product
        let a = unit(0.6, 0.8, 0.0);
        let b = unit(0.8, 0.6, 0.0);
        let expect = JointDist::from_moments(0.0, 0.0, a.dot(b_prime(b)));
        assert!(p_nl(&p, a, b).unwrap().max_abs_diff(&expect) <= TOL);
    }

    #[test]
    fn p_nl_requires_entanglement() {
        assert!(p_nl(&param(0.0), UnitVector3::Z, UnitVector3::Z).is_err());
    }

    #[test]
    fn reconstruct_local_examples() {
        let p = param(FRAC_PI_8);
        let d = reconstruct_local(&p, UnitVector3::X, UnitVector3::Y).unwrap();
        assert_dist(d, [0.25; 4], TOL);
        let d = reconstruct_local(&p, UnitVector3::Z, UnitVector3::Z).unwrap();
        assert_dist(d, [1.0, 0.0, 0.0, 0.0], TOL);
        assert!(reconstruct_local(&param(FRAC_PI_4), UnitVector3::Z, UnitVector3::Z).is_err());
    }

    #[test]
    fn reconstruction_matches_product_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        // Dividing by 1 − s amplifies rounding as γ → π/4; below γ = 0.7
        // the factor is under 70.
        for _ in 0..10_000 {
            let p = param(rng.random_range(0.01..0.7));
            let a = sample_unit_sphere(&mut rng);
            let b = sample_unit_sphere(&mut rng);
            let r = reconstruct_local(&p, a, b).unwrap();
            let prod = p_local_product(&p, a, b);
            assert!(r.max_abs_diff(&prod) <= 1e-12, "{r:?} vs {prod:?}");
        }
    }

    #[test]
    fn p_qm_marginals_and_symmetry() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..1000 {
            let p = param(rng.random_range(0.0..FRAC_PI_4));
            let a = sample_unit_sphere(&mut rng);
            let b = sample_unit_sphere(&mut rng);
            let d = p_qm(&p, a, b);
            for al in Sign::BOTH {
                let marginal = d.get(al, Sign::Plus) + d.get(al, Sign::Minus);
                assert!((marginal - 0.5 * (1.0 + al.value() * p.c() * a.z())).abs() <= 1e-15);
            }
            let flipped = p_qm(&p, -a, b);
            for (al, be) in OUTCOMES {
                assert!((flipped.get(-al, be) - d.get(al, be)).abs() <= 1e-15);
            }
            assert!((d.total() - 1.0).abs() <= TOL);
        }
    }

    #[test]
    fn chsh_examples() {
        assert!((chsh_value(&param(FRAC_PI_4)) - 2.0 * SQRT_2).abs() <= 1e-6);
        assert!((chsh_value(&param(0.0)) - 2.0).abs() <= 1e-6);
        let mid = chsh_value(&param(FRAC_PI_8));
        assert!(mid > 2.0 && mid < 2.0 * SQRT_2);
        // grows with entanglement along the family
        let mut last = 0.0;
        for i in 0..=10 {
            let v = chsh_value(&param(FRAC_PI_4 * i as f64 / 10.0));
            assert!(v >= last - 1e-9);
            last = v;
        }
    }

    #[test]
    fn clamped_only_touches_rounding_noise() {
        let d = JointDist::from_array([0.5, -1e-13, 0.5, -1e-6]);
        assert_eq!(d.clamped().to_array(), [0.5, 0.0, 0.5, -1e-6]);
        assert!(d.validate("x").is_err());
    }
}
