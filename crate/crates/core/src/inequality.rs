//! The two tri-additive s-functional inequalities, their unit-circle scaled
//! forms, the structural defects (derivation, permuting, homomorphism and
//! their unitary variants), and the sampled estimator of the effective
//! `theta` of a map.
//!
//! Notation used below, for a map `f` and a tuple `(x, y, z, w, a, b)`:
//!
//! ```text
//! tail    = 2f(x,z,a) - 2f(x,w,b) + 2f(y,z,b) - 2f(y,w,a)
//! combo_A = f(x+y, z-w, a+b) + f(x-y, z+w, a-b) - tail
//! combo_B = 2f((x+y)/2, z-w, a+b) + 2f((x-y)/2, z+w, a-b) - tail
//! control = (|x|^r + |y|^r)(|z|^r + |w|^r)(|a|^r + |b|^r)
//! ```
//!
//! Inequality A bounds `|combo_A|` by `|s combo_B| + theta * control`;
//! inequality B swaps the roles of the two combinations.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{random_element_with, AlgebraDescriptor, Element};
use crate::error::{Error, Result};
use crate::rng::{log_uniform, stream_rng, unit_phase};
use crate::trimap::{permutations, StabilityParams, TriEval};

const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Norms of sampled elements are drawn log-uniformly from this range, which
/// straddles 1 so both the contracting and the dilating regime are exercised.
pub const NORM_RANGE: (f64, f64) = (0.25, 4.0);

/// Tolerance on `|lambda| = 1` for the scalar variants.
pub const UNIT_MODULUS_TOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    A,
    B,
    #[serde(rename = "scalarA")]
    ScalarA,
    #[serde(rename = "scalarB")]
    ScalarB,
}

impl Variant {
    pub fn is_scalar(self) -> bool {
        matches!(self, Variant::ScalarA | Variant::ScalarB)
    }

    /// Whether the inequality has `combo_A` on its left-hand side.
    pub fn is_a(self) -> bool {
        matches!(self, Variant::A | Variant::ScalarA)
    }

    pub fn name(self) -> &'static str {
        match self {
            Variant::A => "A",
            Variant::B => "B",
            Variant::ScalarA => "scalarA",
            Variant::ScalarB => "scalarB",
        }
    }

    pub fn evaluate(self, f: &dyn TriEval, p: &StabilityParams, t: &SampleTuple) -> Result<IneqEvaluation> {
        match self {
            Variant::A => eval_ineq_01(f, p, t),
            Variant::B => eval_ineq_02(f, p, t),
            Variant::ScalarA | Variant::ScalarB => eval_ineq_scalar(f, p, t, self),
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "A" => Ok(Variant::A),
            "B" => Ok(Variant::B),
            "scalarA" => Ok(Variant::ScalarA),
            "scalarB" => Ok(Variant::ScalarB),
            other => Err(Error::Config(format!("unknown variant {other:?} (expected A, B, scalarA, scalarB)"))),
        }
    }
}

/// Which substitution a sampled tuple realises.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TupleFamily {
    Generic,
    /// `y = x`, `w = b = 0`: isolates `f(2x,z,a) - 2f(x,z,a)`.
    Doubling,
    /// `y = w = b = 0`: isolates `4f(x/2,z,a) - 2f(x,z,a)`.
    Halving,
}

impl TupleFamily {
    /// Sample `i` is a doubling tuple when `i % 8 == 0`, a halving tuple when
    /// `i % 8 == 1`, and generic otherwise. The two substitutions are the ones
    /// the stability bounds are derived from, so a sampled supremum that
    /// includes them dominates the constant each bound depends on.
    pub fn for_index(index: u64) -> Self {
        match index % 8 {
            0 => TupleFamily::Doubling,
            1 => TupleFamily::Halving,
            _ => TupleFamily::Generic,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SampleTuple {
    pub x: Element,
    pub y: Element,
    pub z: Element,
    pub w: Element,
    pub a: Element,
    pub b: Element,
    pub lambda: Complex64,
    pub mu: Complex64,
    pub eta: Complex64,
}

impl SampleTuple {
    pub fn new(x: Element, y: Element, z: Element, w: Element, a: Element, b: Element) -> Self {
        SampleTuple {
            x,
            y,
            z,
            w,
            a,
            b,
            lambda: ONE,
            mu: ONE,
            eta: ONE,
        }
    }

    pub fn with_scalars(mut self, lambda: Complex64, mu: Complex64, eta: Complex64) -> Result<Self> {
        for value in [lambda, mu, eta] {
            if (value.norm() - 1.0).abs() > UNIT_MODULUS_TOL {
                return Err(Error::NotUnitModulus { value });
            }
        }
        self.lambda = lambda;
        self.mu = mu;
        self.eta = eta;
        Ok(self)
    }

    pub fn zeros(alg: AlgebraDescriptor) -> Self {
        let z = Element::zero(alg);
        Self::new(z.clone(), z.clone(), z.clone(), z.clone(), z.clone(), z)
    }

    /// Deterministic tuple number `index` under `seed`; see
    /// [`TupleFamily::for_index`] for the substitution pattern.
    pub fn sample(alg: AlgebraDescriptor, seed: u64, index: u64, scalars: bool) -> Result<Self> {
        let mut rng = stream_rng(seed, index);
        let mut draw = || {
            let n = log_uniform(&mut rng, NORM_RANGE.0, NORM_RANGE.1);
            random_element_with(&mut rng, alg, n)
        };
        let (x, mut y, z, mut w, a, mut b) = (draw()?, draw()?, draw()?, draw()?, draw()?, draw()?);
        let (lambda, mu, eta) = if scalars {
            (unit_phase(&mut rng), unit_phase(&mut rng), unit_phase(&mut rng))
        } else {
            (ONE, ONE, ONE)
        };
        let zero = Element::zero(alg);
        match TupleFamily::for_index(index) {
            TupleFamily::Generic => {}
            TupleFamily::Doubling => {
                y = x.clone();
                w = zero.clone();
                b = zero;
            }
            TupleFamily::Halving => {
                y = zero.clone();
                w = zero.clone();
                b = zero;
            }
        }
        let t = SampleTuple {
            x,
            y,
            z,
            w,
            a,
            b,
            lambda,
            mu,
            eta,
        };
        Ok(t)
    }

    fn check_scalars(&self) -> Result<()> {
        for value in [self.lambda, self.mu, self.eta] {
            if (value.norm() - 1.0).abs() > UNIT_MODULUS_TOL {
                return Err(Error::NotUnitModulus { value });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IneqEvaluation {
    pub lhs: f64,
    pub rhs_control: f64,
    pub rhs_product: f64,
    pub slack: f64,
    /// Rounding allowance: a few ulps of the norms of the individual
    /// evaluations that were summed. Differences below it are not
    /// attributable to the map.
    pub rounding: f64,
}

impl IneqEvaluation {
    fn new(lhs: f64, rhs_control: f64, rhs_product: f64, rounding: f64) -> Self {
        IneqEvaluation {
            lhs,
            rhs_control,
            rhs_product,
            slack: rhs_control + rhs_product - lhs,
            rounding,
        }
    }

    pub fn holds(&self, tol: f64) -> bool {
        self.slack >= -tol
    }
}

/// `||v||^r`, with `0^0 = 1`.
pub fn pow_norm(e: &Element, r: f64) -> f64 {
    e.norm().powf(r)
}

/// `(|x|^r + |y|^r)(|z|^r + |w|^r)(|a|^r + |b|^r)`.
pub fn control_product(t: &SampleTuple, r: f64) -> f64 {
    (pow_norm(&t.x, r) + pow_norm(&t.y, r)) * (pow_norm(&t.z, r) + pow_norm(&t.w, r)) * (pow_norm(&t.a, r) + pow_norm(&t.b, r))
}

fn rot(lambda: Complex64, v: Element) -> Element {
    if lambda == ONE {
        v
    } else {
        v.scale(lambda)
    }
}

/// Multiple of `f64::EPSILON` per unit of summed magnitude allowed as
/// rounding in an inequality evaluation.
const ROUNDING_ULPS: f64 = 16.0;

/// A combination together with the sum of the norms of its terms.
struct Combo {
    value: Element,
    magnitude: f64,
}

fn tail(f: &dyn TriEval, t: &SampleTuple) -> Result<Combo> {
    let terms = [
        f.eval(&t.x, &t.z, &t.a)?,
        f.eval(&t.x, &t.w, &t.b)?,
        f.eval(&t.y, &t.z, &t.b)?,
        f.eval(&t.y, &t.w, &t.a)?,
    ];
    let s = terms[0].sub(&terms[1])?.add(&terms[2])?.sub(&terms[3])?;
    Ok(Combo {
        value: s.scale_real(2.0),
        magnitude: 2.0 * terms.iter().map(Element::norm).sum::<f64>(),
    })
}

/// `f(λ(x+y), μ(z-w), η(a+b)) + f(λ(x-y), μ(z+w), η(a-b))`, optionally with
/// the first argument halved and both terms doubled.
fn head(f: &dyn TriEval, t: &SampleTuple, halved: bool, [lambda, mu, eta]: [Complex64; 3]) -> Result<Combo> {
    let first = |v: Element| {
        let v = rot(lambda, v);
        if halved {
            v.scale_real(0.5)
        } else {
            v
        }
    };
    let p = f.eval(&first(t.x.add(&t.y)?), &rot(mu, t.z.sub(&t.w)?), &rot(eta, t.a.add(&t.b)?))?;
    let q = f.eval(&first(t.x.sub(&t.y)?), &rot(mu, t.z.add(&t.w)?), &rot(eta, t.a.sub(&t.b)?))?;
    let k = if halved { 2.0 } else { 1.0 };
    let magnitude = k * (p.norm() + q.norm());
    let s = p.add(&q)?;
    Ok(Combo {
        value: if halved { s.scale_real(2.0) } else { s },
        magnitude,
    })
}

fn combo_with_magnitude(f: &dyn TriEval, t: &SampleTuple, halved: bool, scaled: bool) -> Result<Combo> {
    let scalars = if scaled { [t.lambda, t.mu, t.eta] } else { [ONE; 3] };
    let h = head(f, t, halved, scalars)?;
    let tl = tail(f, t)?;
    Ok(Combo {
        value: h.value.sub(&rot(scalars[0] * scalars[1] * scalars[2], tl.value))?,
        magnitude: h.magnitude + tl.magnitude,
    })
}

fn combo(f: &dyn TriEval, t: &SampleTuple, halved: bool, scaled: bool) -> Result<Element> {
    Ok(combo_with_magnitude(f, t, halved, scaled)?.value)
}

fn evaluation(f: &dyn TriEval, p: &StabilityParams, t: &SampleTuple, left_halved: bool, left_scaled: bool) -> Result<IneqEvaluation> {
    let l = combo_with_magnitude(f, t, left_halved, left_scaled)?;
    let r = combo_with_magnitude(f, t, !left_halved, false)?;
    let s = p.s.norm();
    Ok(IneqEvaluation::new(
        l.value.norm(),
        r.value.scale(p.s).norm(),
        p.theta * control_product(t, p.r),
        ROUNDING_ULPS * f64::EPSILON * (l.magnitude + s * r.magnitude),
    ))
}

/// `f(x+y, z-w, a+b) + f(x-y, z+w, a-b) - tail`. Scalars in `t` are ignored.
pub fn combo_a(f: &dyn TriEval, t: &SampleTuple) -> Result<Element> {
    combo(f, t, false, false)
}

/// `2f((x+y)/2, z-w, a+b) + 2f((x-y)/2, z+w, a-b) - tail`. Scalars in `t`
/// are ignored.
pub fn combo_b(f: &dyn TriEval, t: &SampleTuple) -> Result<Element> {
    combo(f, t, true, false)
}

/// Inequality A with the control term `theta * control_product`; `theta = 0`
/// gives the pure inequality.
pub fn eval_ineq_01(f: &dyn TriEval, p: &StabilityParams, t: &SampleTuple) -> Result<IneqEvaluation> {
    p.validate()?;
    evaluation(f, p, t, false, false)
}

/// Inequality B: `combo_B` on the left, `s combo_A` on the right.
pub fn eval_ineq_02(f: &dyn TriEval, p: &StabilityParams, t: &SampleTuple) -> Result<IneqEvaluation> {
    p.validate()?;
    evaluation(f, p, t, true, false)
}

/// Unit-circle form: the left-hand side evaluates `f` at
/// `(λ·, μ·, η·)`-rotated arguments and subtracts `λμη · tail`; the
/// right-hand side is the unscaled one.
pub fn eval_ineq_scalar(f: &dyn TriEval, p: &StabilityParams, t: &SampleTuple, variant: Variant) -> Result<IneqEvaluation> {
    p.validate()?;
    t.check_scalars()?;
    evaluation(f, p, t, !variant.is_a(), true)
}

/// `||f(xy, z, a) - f(x, z, a) y - x f(y, z, a)||`.
pub fn derivation_defect(f: &dyn TriEval, x: &Element, y: &Element, z: &Element, a: &Element) -> Result<f64> {
    let lhs = f.eval(&x.mul(y)?, z, a)?;
    let rhs = f.eval(x, z, a)?.mul(y)?.add(&x.mul(&f.eval(y, z, a)?)?)?;
    lhs.dist(&rhs)
}

/// Max over the six orderings of `||f(x_σ1, x_σ2, x_σ3) - f(x1, x2, x3)||`.
pub fn permuting_defect(f: &dyn TriEval, x1: &Element, x2: &Element, x3: &Element) -> Result<f64> {
    let base = f.eval(x1, x2, x3)?;
    let mut worst: f64 = 0.0;
    for [p, q, r] in permutations([x1, x2, x3]) {
        worst = worst.max(f.eval(p, q, r)?.dist(&base)?);
    }
    Ok(worst)
}

/// `||f(xy, zw, ab) - f(x, z, a) f(y, w, b)||`, product taken in the codomain.
pub fn hom_defect(f: &dyn TriEval, x: &Element, y: &Element, z: &Element, w: &Element, a: &Element, b: &Element) -> Result<f64> {
    let lhs = f.eval(&x.mul(y)?, &z.mul(w)?, &a.mul(b)?)?;
    let rhs = f.eval(x, z, a)?.mul(&f.eval(y, w, b)?)?;
    lhs.dist(&rhs)
}

#[derive(Debug, Clone, Copy)]
pub enum UnitaryDerivationArgs<'a> {
    /// `||f(uy, z, a) - f(u, z, a) y - u f(y, z, a)||`, `u` unitary.
    Single {
        u: &'a Element,
        y: &'a Element,
        z: &'a Element,
        a: &'a Element,
    },
    /// Both leading arguments unitary:
    /// `||f(uv, z, a) - f(u, z, a) v - u f(v, z, a)||`.
    Pair {
        u: &'a Element,
        v: &'a Element,
        z: &'a Element,
        a: &'a Element,
    },
}

pub fn unitary_derivation_defect(f: &dyn TriEval, args: UnitaryDerivationArgs<'_>) -> Result<f64> {
    match args {
        UnitaryDerivationArgs::Single { u, y, z, a } => {
            u.require_unitary()?;
            derivation_defect(f, u, y, z, a)
        }
        UnitaryDerivationArgs::Pair { u, v, z, a } => {
            u.require_unitary()?;
            v.require_unitary()?;
            derivation_defect(f, u, v, z, a)
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub enum UnitaryHomArgs<'a> {
    /// `||f(uy, zw, ab) - f(u, z, a) f(y, w, b)||`, `u` unitary.
    Mixed {
        u: &'a Element,
        y: &'a Element,
        z: &'a Element,
        w: &'a Element,
        a: &'a Element,
        b: &'a Element,
    },
    /// `||f(u1 u2, u3 u4, u5 u6) - f(u1, u3, u5) f(u2, u4, u6)||`, all unitary.
    AllUnitary([&'a Element; 6]),
}

pub fn unitary_hom_defect(f: &dyn TriEval, args: UnitaryHomArgs<'_>) -> Result<f64> {
    match args {
        UnitaryHomArgs::Mixed { u, y, z, w, a, b } => {
            u.require_unitary()?;
            hom_defect(f, u, y, z, w, a, b)
        }
        UnitaryHomArgs::AllUnitary(us) => {
            for u in us {
                u.require_unitary()?;
            }
            hom_defect(f, us[0], us[1], us[2], us[3], us[4], us[5])
        }
    }
}

/// Right-hand sides of the structural hypotheses, for reporting defects
/// relative to the control they are assumed to satisfy.
pub mod controls {
    use super::pow_norm;
    use crate::algebra::Element;

    /// `theta (|x|^r + |y|^r) |z|^r |a|^r`.
    pub fn derivation(theta: f64, r: f64, x: &Element, y: &Element, z: &Element, a: &Element) -> f64 {
        theta * (pow_norm(x, r) + pow_norm(y, r)) * pow_norm(z, r) * pow_norm(a, r)
    }

    /// `theta |x1|^r |x2|^r |x3|^r`.
    pub fn permuting(theta: f64, r: f64, x1: &Element, x2: &Element, x3: &Element) -> f64 {
        theta * pow_norm(x1, r) * pow_norm(x2, r) * pow_norm(x3, r)
    }

    /// `theta (|x|^r + |y|^r)(|z|^r + |w|^r)(|a|^r + |b|^r)`.
    pub fn hom(theta: f64, r: f64, e: [&Element; 6]) -> f64 {
        theta * (pow_norm(e[0], r) + pow_norm(e[1], r)) * (pow_norm(e[2], r) + pow_norm(e[3], r)) * (pow_norm(e[4], r) + pow_norm(e[5], r))
    }

    /// `theta (1 + |y|^r) |z|^r |a|^r`.
    pub fn unitary_derivation(theta: f64, r: f64, y: &Element, z: &Element, a: &Element) -> f64 {
        theta * (1.0 + pow_norm(y, r)) * pow_norm(z, r) * pow_norm(a, r)
    }

    /// `2 theta |z|^r |a|^r`.
    pub fn unitary_pair(theta: f64, r: f64, z: &Element, a: &Element) -> f64 {
        2.0 * theta * pow_norm(z, r) * pow_norm(a, r)
    }

    /// `theta (1 + |y|^r)(|z|^r + |w|^r)(|a|^r + |b|^r)`.
    pub fn unitary_hom(theta: f64, r: f64, y: &Element, z: &Element, w: &Element, a: &Element, b: &Element) -> f64 {
        theta * (1.0 + pow_norm(y, r)) * (pow_norm(z, r) + pow_norm(w, r)) * (pow_norm(a, r) + pow_norm(b, r))
    }

    /// `8 theta`.
    pub fn all_unitary_hom(theta: f64) -> f64 {
        8.0 * theta
    }
}

/// Smallest `theta` for which the chosen inequality holds on the `count`
/// tuples `SampleTuple::sample(domain, seed, i, ..)`, `i < count`:
/// the max of `max(0, lhs - rhs_control - rounding) / control_product`.
/// Tuples with a vanishing control product are skipped. `p.theta` is
/// ignored.
///
/// Samples are independent streams, so the result does not depend on how
/// rayon splits the range.
pub fn estimate_theta(f: &dyn TriEval, p: &StabilityParams, variant: Variant, seed: u64, count: u64) -> Result<f64> {
    if count == 0 {
        return Err(Error::Config("estimate_theta needs at least one sample".into()));
    }
    let p0 = p.with_theta(0.0);
    p0.validate()?;
    let alg = f.domain();
    (0..count)
        .into_par_iter()
        .map(|i| {
            let t = SampleTuple::sample(alg, seed, i, variant.is_scalar())?;
            let denom = control_product(&t, p.r);
            if denom == 0.0 {
                return Ok(0.0);
            }
            let ev = variant.evaluate(f, &p0, &t)?;
            Ok((ev.lhs - ev.rhs_control - ev.rounding).max(0.0) / denom)
        })
        .try_reduce(|| 0.0, |a, b| Ok(a.max(b)))
}

/// Minimum slack of the chosen inequality (with `p.theta`) over the same
/// sample set `estimate_theta` uses.
pub fn min_slack(f: &dyn TriEval, p: &StabilityParams, variant: Variant, seed: u64, count: u64) -> Result<f64> {
    p.validate()?;
    let alg = f.domain();
    (0..count)
        .into_par_iter()
        .map(|i| {
            let t = SampleTuple::sample(alg, seed, i, variant.is_scalar())?;
            Ok(variant.evaluate(f, p, &t)?.slack)
        })
        .try_reduce(|| f64::INFINITY, |a, b| Ok(a.min(b)))
}

/// Max of `||combo_A||` and `||combo_B||` over the sample set: zero up to
/// rounding for every tri-additive map.
pub fn max_combo_residual(f: &dyn TriEval, seed: u64, count: u64) -> Result<(f64, f64)> {
    let alg = f.domain();
    (0..count)
        .into_par_iter()
        .map(|i| {
            let t = SampleTuple::sample(alg, seed, i, false)?;
            Ok((combo_a(f, &t)?.norm(), combo_b(f, &t)?.norm()))
        })
        .try_reduce(|| (0.0, 0.0), |a, b| Ok((a.0.max(b.0), a.1.max(b.1))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{random_element, random_unitary, AlgebraDescriptor};
    use crate::trimap::{make_poly_triderivation, make_pointwise_trihomomorphism, perturb, symmetrize, PerturbationSpec, TriMap, TrilinearTensor};

    fn params(theta: f64, r: f64) -> StabilityParams {
        StabilityParams::new(Complex64::new(0.5, 0.0), r, theta).unwrap()
    }

    fn poly3() -> AlgebraDescriptor {
        AlgebraDescriptor::poly(3).unwrap()
    }

    fn perturbed(r: f64) -> TriMap {
        perturb(make_poly_triderivation(3).unwrap(), PerturbationSpec::radial(0.1, r, 17)).unwrap()
    }

    /// Term-by-term oracle: every evaluation written out, summed in a
    /// different order from the implementation.
    fn naive_combo(f: &dyn TriEval, t: &SampleTuple, halved: bool, scaled: bool) -> Element {
        let (l, m, e) = if scaled { (t.lambda, t.mu, t.eta) } else { (ONE, ONE, ONE) };
        let k = if halved { 0.5 } else { 1.0 };
        let outer = if halved { 2.0 } else { 1.0 };
        let ev = |x: &Element, z: &Element, a: &Element| f.eval(x, z, a).unwrap();
        let xpy = t.x.add(&t.y).unwrap().scale(l).scale_real(k);
        let xmy = t.x.sub(&t.y).unwrap().scale(l).scale_real(k);
        let terms = [
            ev(&t.y, &t.w, &t.a).scale(l * m * e * 2.0),
            ev(&t.y, &t.z, &t.b).scale(-l * m * e * 2.0),
            ev(&t.x, &t.w, &t.b).scale(l * m * e * 2.0),
            ev(&t.x, &t.z, &t.a).scale(-l * m * e * 2.0),
            ev(&xmy, &t.z.add(&t.w).unwrap().scale(m), &t.a.sub(&t.b).unwrap().scale(e)).scale_real(outer),
            ev(&xpy, &t.z.sub(&t.w).unwrap().scale(m), &t.a.add(&t.b).unwrap().scale(e)).scale_real(outer),
        ];
        terms.iter().fold(Element::zero(f.codomain()), |acc, t| acc.add(t).unwrap())
    }

    #[test]
    fn exact_maps_cancel() {
        for alg in [AlgebraDescriptor::pointwise(3).unwrap(), poly3(), AlgebraDescriptor::matrix(2).unwrap()] {
            let d = TrilinearTensor::random(alg, alg, 5);
            for i in 0..50 {
                let t = SampleTuple::sample(alg, 3, i, true).unwrap();
                assert!(combo_a(&d, &t).unwrap().norm() <= 1e-12);
                assert!(combo_b(&d, &t).unwrap().norm() <= 1e-12);
                for v in [Variant::ScalarA, Variant::ScalarB] {
                    assert!(eval_ineq_scalar(&d, &params(0.0, 3.0), &t, v).unwrap().lhs <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn zero_tuple_and_zero_map() {
        let f = perturbed(3.0);
        let t0 = SampleTuple::zeros(poly3());
        assert!(combo_a(&f, &t0).unwrap().is_zero());
        assert!(combo_b(&f, &t0).unwrap().is_zero());
        let zero = TrilinearTensor::zeros(poly3(), poly3());
        let t = SampleTuple::sample(poly3(), 1, 5, false).unwrap();
        for v in [Variant::A, Variant::B] {
            let ev = v.evaluate(&zero, &params(0.0, 3.0), &t).unwrap();
            assert_eq!((ev.lhs, ev.rhs_control, ev.rhs_product, ev.slack), (0.0, 0.0, 0.0, 0.0));
        }
    }

    #[test]
    fn combos_match_naive_oracle() {
        let f = perturbed(3.0);
        for i in 2..12 {
            let t = SampleTuple::sample(poly3(), 9, i, true).unwrap();
            assert!(combo_a(&f, &t).unwrap().dist(&naive_combo(&f, &t, false, false)).unwrap() <= 1e-12);
            assert!(combo_b(&f, &t).unwrap().dist(&naive_combo(&f, &t, true, false)).unwrap() <= 1e-12);
        }
        // λ = i, μ = -1, η = 1
        let t = SampleTuple::sample(poly3(), 9, 3, false)
            .unwrap()
            .with_scalars(Complex64::new(0.0, 1.0), Complex64::new(-1.0, 0.0), ONE)
            .unwrap();
        let p = params(0.0, 3.0);
        let a = eval_ineq_scalar(&f, &p, &t, Variant::ScalarA).unwrap();
        assert!((a.lhs - naive_combo(&f, &t, false, true).norm()).abs() <= 1e-12);
        let b = eval_ineq_scalar(&f, &p, &t, Variant::ScalarB).unwrap();
        assert!((b.lhs - naive_combo(&f, &t, true, true).norm()).abs() <= 1e-12);
    }

    #[test]
    fn scalar_reduces_bitwise() {
        let f = perturbed(3.0);
        let p = params(0.07, 3.0);
        for i in 0..20 {
            let t = SampleTuple::sample(poly3(), 4, i, false).unwrap();
            assert_eq!(eval_ineq_scalar(&f, &p, &t, Variant::ScalarA).unwrap(), eval_ineq_01(&f, &p, &t).unwrap());
            assert_eq!(eval_ineq_scalar(&f, &p, &t, Variant::ScalarB).unwrap(), eval_ineq_02(&f, &p, &t).unwrap());
        }
    }

    #[test]
    fn non_unit_scalar_rejected() {
        let t = SampleTuple::sample(poly3(), 4, 3, false).unwrap();
        assert!(t.clone().with_scalars(Complex64::new(2.0, 0.0), ONE, ONE).is_err());
        let mut bad = t;
        bad.mu = Complex64::new(0.5, 0.0);
        assert!(eval_ineq_scalar(&perturbed(3.0), &params(0.0, 3.0), &bad, Variant::ScalarA).is_err());
    }

    #[test]
    fn s_out_of_range_rejected() {
        let t = SampleTuple::sample(poly3(), 4, 3, false).unwrap();
        let bad = StabilityParams {
            s: Complex64::new(1.5, 0.0),
            r: 3.0,
            theta: 0.0,
        };
        assert!(eval_ineq_01(&perturbed(3.0), &bad, &t).is_err());
        assert!(eval_ineq_02(&perturbed(3.0), &bad, &t).is_err());
    }

    #[test]
    fn families_follow_index() {
        let alg = poly3();
        let d = SampleTuple::sample(alg, 1, 8, false).unwrap();
        assert!(d.x.approx_eq(&d.y, 0.0) && d.w.is_zero() && d.b.is_zero());
        let h = SampleTuple::sample(alg, 1, 9, false).unwrap();
        assert!(h.y.is_zero() && h.w.is_zero() && h.b.is_zero() && !h.x.is_zero());
        let g = SampleTuple::sample(alg, 1, 10, false).unwrap();
        assert!(!g.y.is_zero() && !g.w.is_zero());
        for e in [&g.x, &g.y, &g.z, &g.w, &g.a, &g.b] {
            assert!((NORM_RANGE.0 - 1e-12..=NORM_RANGE.1 + 1e-12).contains(&e.norm()));
        }
    }

    #[test]
    fn slack_monotone_in_theta() {
        let f = perturbed(3.0);
        for i in 0..30 {
            let t = SampleTuple::sample(poly3(), 2, i, false).unwrap();
            let mut prev = f64::NEG_INFINITY;
            for theta in [0.0, 0.01, 0.1, 0.3, 1.0, 10.0] {
                let s = eval_ineq_01(&f, &params(theta, 3.0), &t).unwrap().slack;
                assert!(s >= prev);
                prev = s;
            }
        }
    }

    #[test]
    fn estimator_basics() {
        let d = make_poly_triderivation(3).unwrap();
        let p = params(0.0, 3.0);
        assert!(estimate_theta(&d, &p, Variant::A, 1, 200).unwrap() <= 1e-12);
        let zero = TrilinearTensor::zeros(poly3(), poly3());
        assert_eq!(estimate_theta(&zero, &p, Variant::B, 1, 50).unwrap(), 0.0);
        assert!(estimate_theta(&zero, &p, Variant::B, 1, 0).is_err());

        let f = perturbed(3.0);
        for v in [Variant::A, Variant::B, Variant::ScalarA, Variant::ScalarB] {
            let th = estimate_theta(&f, &p, v, 42, 400).unwrap();
            assert!(th > 0.0);
            let slack = min_slack(&f, &p.with_theta(th), v, 42, 400).unwrap();
            assert!(slack >= -1e-10, "{v:?}: {slack}");
        }
    }

    #[test]
    fn derivation_defect_cases() {
        let alg = AlgebraDescriptor::poly(4).unwrap();
        let d = make_poly_triderivation(4).unwrap();
        let f = perturb(d.clone(), PerturbationSpec::radial(0.1, 3.0, 2)).unwrap();
        let els: Vec<Element> = (0..4).map(|i| random_element(alg, i, 1.2).unwrap()).collect();
        assert!(derivation_defect(&d, &els[0], &els[1], &els[2], &els[3]).unwrap() <= 1e-12);
        assert_eq!(derivation_defect(&f, &Element::zero(alg), &els[1], &els[2], &els[3]).unwrap(), 0.0);

        let (x, y, z, a) = (&els[0], &els[1], &els[2], &els[3]);
        let oracle = f
            .eval(&x.mul(y).unwrap(), z, a)
            .unwrap()
            .sub(&f.eval(x, z, a).unwrap().mul(y).unwrap())
            .unwrap()
            .sub(&x.mul(&f.eval(y, z, a).unwrap()).unwrap())
            .unwrap()
            .norm();
        assert!((derivation_defect(&f, x, y, z, a).unwrap() - oracle).abs() <= 1e-12);
        assert!(oracle > 1e-3);
    }

    #[test]
    fn permuting_defect_cases() {
        let alg = AlgebraDescriptor::poly(2).unwrap();
        let t = TrilinearTensor::random(alg, alg, 11);
        let s = symmetrize(&t);
        let mut worst_sym: f64 = 0.0;
        for i in 0..50 {
            let e: Vec<Element> = (0..3).map(|j| random_element(alg, 100 * i + j, 1.0).unwrap()).collect();
            worst_sym = worst_sym.max(permuting_defect(&s, &e[0], &e[1], &e[2]).unwrap());
        }
        assert!(worst_sym <= 1e-12);
        let x = random_element(alg, 1, 1.0).unwrap();
        assert_eq!(permuting_defect(&t, &x, &x, &x).unwrap(), 0.0);

        let e: Vec<Element> = (0..3).map(|j| random_element(alg, 50 + j, 1.0).unwrap()).collect();
        let base = t.contract(&e[0], &e[1], &e[2]).unwrap();
        let orders = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
        let oracle = orders
            .iter()
            .map(|o| t.contract(&e[o[0]], &e[o[1]], &e[o[2]]).unwrap().dist(&base).unwrap())
            .fold(0.0, f64::max);
        assert_eq!(permuting_defect(&t, &e[0], &e[1], &e[2]).unwrap(), oracle);
        assert!(oracle > 0.0);
    }

    #[test]
    fn hom_defect_cases() {
        let alg = AlgebraDescriptor::pointwise(3).unwrap();
        let h = make_pointwise_trihomomorphism(3, &[1, 2, 0]).unwrap();
        let f = perturb(h.clone(), PerturbationSpec::radial(0.1, 3.0, 4)).unwrap();
        let e: Vec<Element> = (0..6).map(|j| random_element(alg, 70 + j, 1.1).unwrap()).collect();
        assert!(hom_defect(&h, &e[0], &e[1], &e[2], &e[3], &e[4], &e[5]).unwrap() <= 1e-12);
        let zero = Element::zero(alg);
        assert_eq!(hom_defect(&f, &zero, &e[1], &e[2], &e[3], &e[4], &e[5]).unwrap(), 0.0);
        let oracle = f
            .eval(&e[0].mul(&e[1]).unwrap(), &e[2].mul(&e[3]).unwrap(), &e[4].mul(&e[5]).unwrap())
            .unwrap()
            .dist(&f.eval(&e[0], &e[2], &e[4]).unwrap().mul(&f.eval(&e[1], &e[3], &e[5]).unwrap()).unwrap())
            .unwrap();
        assert_eq!(hom_defect(&f, &e[0], &e[1], &e[2], &e[3], &e[4], &e[5]).unwrap(), oracle);
    }

    #[test]
    fn unitary_defects() {
        let alg = AlgebraDescriptor::matrix(2).unwrap();
        let d = crate::trimap::make_inner_triderivation(2, 3).unwrap();
        let f = perturb(d.clone(), PerturbationSpec::radial(0.1, 3.0, 4)).unwrap();
        let e = Element::one(alg);
        let (y, z, a) = (
            random_element(alg, 1, 1.0).unwrap(),
            random_element(alg, 2, 1.0).unwrap(),
            random_element(alg, 3, 1.0).unwrap(),
        );
        // u = e reduces to ||f(e, z, a) y||
        let got = unitary_derivation_defect(&f, UnitaryDerivationArgs::Single { u: &e, y: &y, z: &z, a: &a }).unwrap();
        let want = f.eval(&e, &z, &a).unwrap().mul(&y).unwrap().norm();
        assert!((got - want).abs() <= 1e-12);

        let u = random_unitary(alg, 5).unwrap();
        let v = random_unitary(alg, 6).unwrap();
        assert!(unitary_derivation_defect(&d, UnitaryDerivationArgs::Single { u: &u, y: &y, z: &z, a: &a }).unwrap() <= 1e-12);
        assert!(unitary_derivation_defect(&d, UnitaryDerivationArgs::Pair { u: &u, v: &v, z: &z, a: &a }).unwrap() <= 1e-12);
        let oracle = f
            .eval(&u.mul(&y).unwrap(), &z, &a)
            .unwrap()
            .sub(&f.eval(&u, &z, &a).unwrap().mul(&y).unwrap())
            .unwrap()
            .sub(&u.mul(&f.eval(&y, &z, &a).unwrap()).unwrap())
            .unwrap()
            .norm();
        let got = unitary_derivation_defect(&f, UnitaryDerivationArgs::Single { u: &u, y: &y, z: &z, a: &a }).unwrap();
        assert!((got - oracle).abs() <= 1e-12);
        assert!(matches!(
            unitary_derivation_defect(&f, UnitaryDerivationArgs::Single { u: &y, y: &y, z: &z, a: &a }),
            Err(Error::NotUnitary { .. })
        ));

        // all six = e: ||f(e,e,e) - f(e,e,e)^2||
        let got = unitary_hom_defect(&f, UnitaryHomArgs::AllUnitary([&e; 6])).unwrap();
        let fe = f.eval(&e, &e, &e).unwrap();
        assert!((got - fe.dist(&fe.mul(&fe).unwrap()).unwrap()).abs() <= 1e-12);
        assert!(unitary_hom_defect(&f, UnitaryHomArgs::Mixed { u: &y, y: &y, z: &z, w: &z, a: &a, b: &a }).is_err());
    }

    #[test]
    fn unitary_hom_on_exact_pointwise() {
        // in C^n the unitaries are the unimodular vectors
        let alg = AlgebraDescriptor::pointwise(3).unwrap();
        let h = make_pointwise_trihomomorphism(3, &[0, 2, 1]).unwrap();
        let us: Vec<Element> = (0..6)
            .map(|k| {
                let mut rng = stream_rng(k, 0);
                Element::from_coeffs(alg, (0..3).map(|_| unit_phase(&mut rng)).collect()).unwrap()
            })
            .collect();
        let refs: [&Element; 6] = [&us[0], &us[1], &us[2], &us[3], &us[4], &us[5]];
        assert!(unitary_hom_defect(&h, UnitaryHomArgs::AllUnitary(refs)).unwrap() <= 1e-12);
        let y = random_element(alg, 9, 2.0).unwrap();
        assert!(
            unitary_hom_defect(&h, UnitaryHomArgs::Mixed { u: &us[0], y: &y, z: &us[1], w: &y, a: &us[2], b: &y }).unwrap()
                <= 1e-12
        );
    }
}
