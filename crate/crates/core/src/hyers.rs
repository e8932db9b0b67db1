//! The direct-method limit and the verifiers built on it.
//!
//! For `r > 1` the limit is `L(x,z,a) = lim 2^n f(x/2^n, z, a)` (contracting
//! the first argument); for `r < 1` it is `lim 2^-n f(2^n x, z, a)`. Both
//! rescalings are by powers of two, so for an exact trilinear map every
//! iterate reproduces `f(x,z,a)` bit for bit and the only movement comes from
//! the perturbation.
//!
//! The geometric tail used as a convergence certificate is
//!
//! ```text
//! tail(l) = step0 * rho^l / (1 - rho) * |x|^r |z|^r |a|^r
//! ```
//!
//! with `rho = 2^(1-r)` (contract) or `2^(r-1)` (dilate), and `step0` the
//! first-step majorant implied by the inequality the `theta` estimate came
//! from. At `l = 0` it equals the constant of the matching stability bound.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{unitary_decompose, AlgebraDescriptor, AlgebraKind, Element};
use crate::error::{Error, Result};
use crate::inequality::{derivation_defect, hom_defect, permuting_defect, pow_norm, SampleTuple, Variant, NORM_RANGE};
use crate::rng::{log_uniform, stream_rng, unit_phase};
use crate::trimap::TriEval;

/// Largest `n_max` for the contracting iteration. Beyond it `x/2^n` has
/// pushed the perturbation of any `r >= 3` map below binary64 resolution.
pub const CONTRACT_N_MAX_CAP: usize = 48;

/// Largest `n_max` for the dilating iteration. Its ratio `2^(r-1)` is close
/// to 1 for `r` near 1, so it needs more steps than the contracting branch.
pub const DILATE_N_MAX_CAP: usize = 160;

pub const DEFAULT_CAUCHY_TOL: f64 = 1e-11;

/// PASS threshold on bound ratios.
pub const BOUND_RATIO_TOL: f64 = 1e-6;

/// PASS threshold on structural residuals of extracted limits.
pub const STRUCTURE_TOL: f64 = 1e-8;

// Stream offset separating scalar draws from the tuple draws of the same
// sample index.
const SCALAR_STREAM: u64 = 1 << 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// `2^n f(x/2^n, z, a)`, for `r > 1`.
    Contract,
    /// `2^-n f(2^n x, z, a)`, for `r < 1`.
    Dilate,
}

impl Direction {
    /// Contract for `r > 1`, Dilate for `r < 1`; `r = 1` is excluded.
    pub fn for_r(r: f64) -> Result<Direction> {
        if !r.is_finite() || r < 0.0 {
            return Err(Error::InvalidParams(format!("r must be finite and >= 0, got {r}")));
        }
        if r == 1.0 {
            return Err(Error::Regime("r = 1 is excluded: both geometric series diverge".into()));
        }
        Ok(if r > 1.0 { Direction::Contract } else { Direction::Dilate })
    }

    pub fn n_max_cap(self) -> usize {
        match self {
            Direction::Contract => CONTRACT_N_MAX_CAP,
            Direction::Dilate => DILATE_N_MAX_CAP,
        }
    }

    /// Per-step decay ratio of the perturbation.
    pub fn rho(self, r: f64) -> f64 {
        match self {
            Direction::Contract => 2f64.powf(1.0 - r),
            Direction::Dilate => 2f64.powf(r - 1.0),
        }
    }

    /// The `n`-th iterate. Rescaling by `2^±n` is exact.
    pub fn iterate(self, f: &dyn TriEval, n: usize, x: &Element, z: &Element, a: &Element) -> Result<Element> {
        let up = 2f64.powi(n as i32);
        let down = 2f64.powi(-(n as i32));
        match self {
            Direction::Contract => Ok(f.eval(&x.scale_real(down), z, a)?.scale_real(up)),
            Direction::Dilate => Ok(f.eval(&x.scale_real(up), z, a)?.scale_real(down)),
        }
    }
}

/// How the geometric tail majorant is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum TailModel {
    /// `last_step * rho / (1 - rho)`: assumes the observed step keeps
    /// decaying at the nominal ratio.
    Empirical,
    /// Closed form from a sampled `theta` for the given inequality. This is
    /// an empirical certificate too, since `theta_hat` is a sampled supremum.
    Estimated { theta_hat: f64, variant: Variant },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HyersConfig {
    pub direction: Direction,
    pub n_max: usize,
    pub cauchy_tol: f64,
    pub r: f64,
    pub tail: TailModel,
}

impl HyersConfig {
    /// Direction chosen from `r`, `n_max` at the direction's cap.
    pub fn for_regime(r: f64, tail: TailModel) -> Result<Self> {
        let direction = Direction::for_r(r)?;
        let cfg = HyersConfig {
            direction,
            n_max: direction.n_max_cap(),
            cauchy_tol: DEFAULT_CAUCHY_TOL,
            r,
            tail,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_n_max(mut self, n_max: usize) -> Self {
        self.n_max = n_max;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.cauchy_tol = tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let expected = Direction::for_r(self.r)?;
        if expected != self.direction {
            return Err(Error::Regime(format!(
                "{:?} iteration needs {}, got r = {}",
                self.direction,
                match self.direction {
                    Direction::Contract => "r > 1",
                    Direction::Dilate => "r < 1",
                },
                self.r
            )));
        }
        let cap = self.direction.n_max_cap();
        if self.n_max < 2 || self.n_max > cap {
            return Err(Error::Config(format!("n_max must lie in [2, {cap}], got {}", self.n_max)));
        }
        if !(self.cauchy_tol > 0.0 && self.cauchy_tol.is_finite()) {
            return Err(Error::Config(format!("cauchy_tol must be positive, got {}", self.cauchy_tol)));
        }
        if let TailModel::Estimated { theta_hat, .. } = self.tail {
            if !(theta_hat >= 0.0 && theta_hat.is_finite()) {
                return Err(Error::Config(format!("theta_hat must be finite and >= 0, got {theta_hat}")));
            }
        }
        Ok(())
    }

    /// First-step majorant per unit `|x|^r |z|^r |a|^r`.
    fn step0(&self, theta: f64, variant: Variant) -> f64 {
        let r = self.r;
        match (self.direction, variant.is_a()) {
            (Direction::Contract, true) => 2f64.powf(1.0 - r) * theta,
            (Direction::Contract, false) => theta / 2.0,
            (Direction::Dilate, true) => theta,
            (Direction::Dilate, false) => 2f64.powf(r) * theta / 4.0,
        }
    }

    /// Tail majorant after `l` completed steps.
    pub fn tail_bound(&self, l: usize, last_step: f64, prod: f64) -> f64 {
        let rho = self.direction.rho(self.r);
        match self.tail {
            TailModel::Empirical => last_step * rho / (1.0 - rho),
            TailModel::Estimated { theta_hat, variant } => {
                self.step0(theta_hat, variant) * rho.powi(l as i32) / (1.0 - rho) * prod
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurvePoint {
    pub n: usize,
    pub last_step: f64,
    pub tail_bound: f64,
}

#[derive(Debug, Clone)]
pub struct HyersResult {
    pub value: Element,
    pub last_step: f64,
    pub tail_bound: f64,
    pub converged: bool,
    pub curve: Vec<CurvePoint>,
}

impl HyersResult {
    pub fn steps(&self) -> usize {
        self.curve.len()
    }

    pub fn require_converged(self) -> Result<Element> {
        if self.converged {
            Ok(self.value)
        } else {
            Err(Error::NonConvergence {
                steps: self.steps(),
                last_step: self.last_step,
                tail_bound: self.tail_bound,
            })
        }
    }
}

/// Runs the iteration until `last_step` and `tail_bound` are both within
/// `cfg.cauchy_tol`, or `cfg.n_max` steps have been taken. A run that stops
/// at `n_max` is returned with `converged = false`; see
/// [`HyersResult::require_converged`].
pub fn hyers_limit(f: &dyn TriEval, cfg: &HyersConfig, x: &Element, z: &Element, a: &Element) -> Result<HyersResult> {
    cfg.validate()?;
    let prod = pow_norm(x, cfg.r) * pow_norm(z, cfg.r) * pow_norm(a, cfg.r);
    let mut prev = cfg.direction.iterate(f, 0, x, z, a)?;
    let mut curve = Vec::new();
    for n in 1..=cfg.n_max {
        let next = cfg.direction.iterate(f, n, x, z, a)?;
        let last_step = next.dist(&prev)?;
        let tail_bound = cfg.tail_bound(n, last_step, prod);
        curve.push(CurvePoint { n, last_step, tail_bound });
        prev = next;
        if last_step <= cfg.cauchy_tol && tail_bound <= cfg.cauchy_tol {
            return Ok(HyersResult {
                value: prev,
                last_step,
                tail_bound,
                converged: true,
                curve,
            });
        }
    }
    let last = *curve.last().expect("n_max >= 2");
    Ok(HyersResult {
        value: prev,
        last_step: last.last_step,
        tail_bound: last.tail_bound,
        converged: false,
        curve,
    })
}

/// The first `count + 1` iterates, without any stopping rule.
pub fn hyers_iterates(f: &dyn TriEval, direction: Direction, count: usize, x: &Element, z: &Element, a: &Element) -> Result<Vec<Element>> {
    (0..=count).map(|n| direction.iterate(f, n, x, z, a)).collect()
}

/// `L` as a tri-map: every evaluation runs [`hyers_limit`] and fails on
/// non-convergence.
pub struct HyersLimitMap<'a> {
    f: &'a dyn TriEval,
    cfg: HyersConfig,
}

impl<'a> HyersLimitMap<'a> {
    pub fn new(f: &'a dyn TriEval, cfg: HyersConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(HyersLimitMap { f, cfg })
    }

    pub fn config(&self) -> &HyersConfig {
        &self.cfg
    }
}

impl TriEval for HyersLimitMap<'_> {
    fn domain(&self) -> AlgebraDescriptor {
        self.f.domain()
    }
    fn codomain(&self) -> AlgebraDescriptor {
        self.f.codomain()
    }
    fn eval(&self, x: &Element, z: &Element, a: &Element) -> Result<Element> {
        hyers_limit(self.f, &self.cfg, x, z, a)?.require_converged()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BoundKind {
    /// Inequality A, contracting: `2 theta / (2^r - 2)`.
    T23,
    /// Inequality A, dilating: `2 theta / (2 - 2^r)`.
    T24,
    /// Inequality B, contracting: `2^r theta / (2 (2^r - 2))`.
    T32,
    /// Inequality B, dilating: `2^r theta / (2 (2 - 2^r))`.
    T33,
}

impl BoundKind {
    pub fn for_regime(variant: Variant, r: f64) -> Result<BoundKind> {
        Ok(match (variant.is_a(), Direction::for_r(r)?) {
            (true, Direction::Contract) => BoundKind::T23,
            (true, Direction::Dilate) => BoundKind::T24,
            (false, Direction::Contract) => BoundKind::T32,
            (false, Direction::Dilate) => BoundKind::T33,
        })
    }

    pub fn direction(self) -> Direction {
        match self {
            BoundKind::T23 | BoundKind::T32 => Direction::Contract,
            BoundKind::T24 | BoundKind::T33 => Direction::Dilate,
        }
    }

    /// The inequality `theta` has to be estimated on.
    pub fn variant(self) -> Variant {
        match self {
            BoundKind::T23 | BoundKind::T24 => Variant::A,
            BoundKind::T32 | BoundKind::T33 => Variant::B,
        }
    }

    pub fn constant(self, theta: f64, r: f64) -> Result<f64> {
        if Direction::for_r(r)? != self.direction() {
            return Err(Error::Regime(format!("{self:?} does not apply at r = {r}")));
        }
        let p = 2f64.powf(r);
        Ok(match self {
            BoundKind::T23 => 2.0 * theta / (p - 2.0),
            BoundKind::T24 => 2.0 * theta / (2.0 - p),
            BoundKind::T32 => p * theta / (2.0 * (p - 2.0)),
            BoundKind::T33 => p * theta / (2.0 * (2.0 - p)),
        })
    }
}

/// `(x, z, a)` of sample `i`; the same draws `estimate_theta` sees.
fn sample_triple(alg: AlgebraDescriptor, seed: u64, i: u64) -> Result<(Element, Element, Element)> {
    let t = SampleTuple::sample(alg, seed, i, false)?;
    Ok((t.x, t.z, t.a))
}

/// Per-sample ratios `|f - L| / (C |x|^r |z|^r |a|^r)`. A sample with a zero
/// denominator contributes 0 when the numerator is also 0 and `inf`
/// otherwise.
pub fn bound_ratios(f: &dyn TriEval, l: &dyn TriEval, theta_hat: f64, r: f64, kind: BoundKind, seed: u64, count: u64) -> Result<Vec<f64>> {
    let c = kind.constant(theta_hat, r)?;
    let alg = f.domain();
    (0..count)
        .into_par_iter()
        .map(|i| {
            let (x, z, a) = sample_triple(alg, seed, i)?;
            let num = f.eval(&x, &z, &a)?.dist(&l.eval(&x, &z, &a)?)?;
            let den = c * pow_norm(&x, r) * pow_norm(&z, r) * pow_norm(&a, r);
            Ok(if den > 0.0 {
                num / den
            } else if num == 0.0 {
                0.0
            } else {
                f64::INFINITY
            })
        })
        .collect()
}

/// Max of [`bound_ratios`]; PASS iff `<= 1 + BOUND_RATIO_TOL`.
pub fn verify_bound(f: &dyn TriEval, l: &dyn TriEval, theta_hat: f64, r: f64, kind: BoundKind, seed: u64, count: u64) -> Result<f64> {
    Ok(bound_ratios(f, l, theta_hat, r, kind, seed, count)?.into_iter().fold(0.0, f64::max))
}

fn par_max(count: u64, g: impl Fn(u64) -> Result<f64> + Sync + Send) -> Result<f64> {
    (0..count).into_par_iter().map(g).try_reduce(|| 0.0, |a, b| Ok(a.max(b)))
}

/// Max over samples and slots of the additivity defect in that slot, each
/// divided by `1 + (|u| + |u'|) |v| |w|` so that samples of different scale
/// are comparable.
pub fn check_triadditivity(l: &dyn TriEval, seed: u64, count: u64) -> Result<f64> {
    let alg = l.domain();
    par_max(count, |i| {
        let t = SampleTuple::sample(alg, seed, i, false)?;
        let (nx, ny, nz, nw, na, nb) = (t.x.norm(), t.y.norm(), t.z.norm(), t.w.norm(), t.a.norm(), t.b.norm());
        let s1 = l.eval(&t.x.add(&t.y)?, &t.z, &t.a)?.sub(&l.eval(&t.x, &t.z, &t.a)?)?.sub(&l.eval(&t.y, &t.z, &t.a)?)?;
        let s2 = l.eval(&t.x, &t.z.add(&t.w)?, &t.a)?.sub(&l.eval(&t.x, &t.z, &t.a)?)?.sub(&l.eval(&t.x, &t.w, &t.a)?)?;
        let s3 = l.eval(&t.x, &t.z, &t.a.add(&t.b)?)?.sub(&l.eval(&t.x, &t.z, &t.a)?)?.sub(&l.eval(&t.x, &t.z, &t.b)?)?;
        Ok((s1.norm() / (1.0 + (nx + ny) * nz * na))
            .max(s2.norm() / (1.0 + nx * (nz + nw) * na))
            .max(s3.norm() / (1.0 + nx * nz * (na + nb))))
    })
}

/// `|L(λx, μz, ηa) - λμη L(x, z, a)| / (1 + |λμη| |x| |z| |a|)` with the
/// scalars drawn on the unit circle and, separately, with modulus
/// log-uniform in `[1/4, 4]`.
pub fn check_trilinearity(l: &dyn TriEval, seed: u64, count: u64) -> Result<f64> {
    let alg = l.domain();
    par_max(count, |i| {
        let (x, z, a) = sample_triple(alg, seed, i)?;
        let mut rng = stream_rng(seed, SCALAR_STREAM + i);
        let base = l.eval(&x, &z, &a)?;
        let scale = x.norm() * z.norm() * a.norm();
        let mut worst: f64 = 0.0;
        for general in [false, true] {
            let mut draw = || {
                let m = if general { log_uniform(&mut rng, NORM_RANGE.0, NORM_RANGE.1) } else { 1.0 };
                unit_phase(&mut rng) * m
            };
            let (lam, mu, eta) = (draw(), draw(), draw());
            worst = worst.max(trilinearity_residual(l, &base, scale, [lam, mu, eta], &x, &z, &a)?);
        }
        Ok(worst)
    })
}

/// Single-sample trilinearity residual, normalised as in
/// [`check_trilinearity`].
pub fn trilinearity_at(l: &dyn TriEval, scalars: [Complex64; 3], x: &Element, z: &Element, a: &Element) -> Result<f64> {
    let base = l.eval(x, z, a)?;
    trilinearity_residual(l, &base, x.norm() * z.norm() * a.norm(), scalars, x, z, a)
}

fn trilinearity_residual(l: &dyn TriEval, base: &Element, scale: f64, [lam, mu, eta]: [Complex64; 3], x: &Element, z: &Element, a: &Element) -> Result<f64> {
    let prod = lam * mu * eta;
    let lhs = l.eval(&x.scale(lam), &z.scale(mu), &a.scale(eta))?;
    Ok(lhs.dist(&base.scale(prod))? / (1.0 + prod.norm() * scale))
}

/// Max `|L1(x,z,a) - L2(x,z,a)|` where `Li` is the limit of `fi` under `cfg`.
pub fn check_uniqueness(f1: &dyn TriEval, f2: &dyn TriEval, cfg: &HyersConfig, seed: u64, count: u64) -> Result<f64> {
    if f1.domain() != f2.domain() || f1.codomain() != f2.codomain() {
        return Err(Error::AlgebraMismatch {
            left: f1.domain(),
            right: f2.domain(),
        });
    }
    let l1 = HyersLimitMap::new(f1, *cfg)?;
    let l2 = HyersLimitMap::new(f2, *cfg)?;
    let alg = f1.domain();
    par_max(count, |i| {
        let (x, z, a) = sample_triple(alg, seed, i)?;
        l1.eval(&x, &z, &a)?.dist(&l2.eval(&x, &z, &a)?)
    })
}

/// Whether a conclusion is proven to hold for the given `r`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    InScope,
    /// Computed, but outside the range of `r` the conclusion is stated for.
    Exploratory,
}

impl Regime {
    fn from_flag(ok: bool) -> Regime {
        if ok {
            Regime::InScope
        } else {
            Regime::Exploratory
        }
    }

    /// Plain stability bounds: any `r != 1`.
    pub fn stability(r: f64) -> Regime {
        Regime::from_flag(r != 1.0)
    }

    /// Derivation and homomorphism identities: `r > 2` or `r < 1`, since
    /// the defect is rescaled by `4^n / 2^(rn)`.
    pub fn structural(r: f64) -> Regime {
        Regime::from_flag(r > 2.0 || r < 1.0)
    }

    /// Permuting identity: `r != 1`.
    pub fn permuting(r: f64) -> Regime {
        Regime::from_flag(r != 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivationResiduals {
    /// Max derivation defect over samples and the three slots.
    pub derivation: f64,
    pub permuting: f64,
}

/// Evaluates `f` with its arguments moved so that `u` sits in slot `slot`
/// and `(v, w)` fill the other two slots in order.
fn eval_in_slot(f: &dyn TriEval, slot: usize, u: &Element, v: &Element, w: &Element) -> Result<Element> {
    match slot {
        0 => f.eval(u, v, w),
        1 => f.eval(v, u, w),
        _ => f.eval(v, w, u),
    }
}

/// `|f(.., xy, ..) - f(.., x, ..) y - x f(.., y, ..)|` with `x, y` in slot
/// `slot` and `(p, q)` in the remaining slots.
pub fn derivation_defect_in_slot(f: &dyn TriEval, slot: usize, x: &Element, y: &Element, p: &Element, q: &Element) -> Result<f64> {
    if slot == 0 {
        return derivation_defect(f, x, y, p, q);
    }
    let lhs = eval_in_slot(f, slot, &x.mul(y)?, p, q)?;
    let rhs = eval_in_slot(f, slot, x, p, q)?.mul(y)?.add(&x.mul(&eval_in_slot(f, slot, y, p, q)?)?)?;
    lhs.dist(&rhs)
}

/// Derivation defect (all three slots) and permuting defect of `L` over
/// seeded samples. Both PASS iff `<= STRUCTURE_TOL`; see
/// [`Regime::structural`] and [`Regime::permuting`] for when the conclusion
/// is covered.
pub fn check_hyperstability_derivation(l: &dyn TriEval, seed: u64, count: u64) -> Result<DerivationResiduals> {
    let alg = l.domain();
    (0..count)
        .into_par_iter()
        .map(|i| {
            let t = SampleTuple::sample(alg, seed, i, false)?;
            let mut der: f64 = 0.0;
            for slot in 0..3 {
                der = der.max(derivation_defect_in_slot(l, slot, &t.x, &t.y, &t.z, &t.a)?);
            }
            Ok((der, permuting_defect(l, &t.x, &t.z, &t.a)?))
        })
        .try_reduce(|| (0.0, 0.0), |a, b| Ok((a.0.max(b.0), a.1.max(b.1))))
        .map(|(derivation, permuting)| DerivationResiduals { derivation, permuting })
}

/// Max `hom_defect` of `H` over seeded 6-tuples.
pub fn check_hyperstability_hom(h: &dyn TriEval, seed: u64, count: u64) -> Result<f64> {
    let alg = h.domain();
    par_max(count, |i| {
        let t = SampleTuple::sample(alg, seed, i, false)?;
        hom_defect(h, &t.x, &t.y, &t.z, &t.w, &t.a, &t.b)
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedScaling {
    pub max_residual: f64,
    /// Sample index attaining the max (the smallest such index on ties).
    pub argmax: u64,
}

/// `|f(2x, z, a) - 2 f(x, z, a)|` at sample `i`.
pub fn fixed_scaling_residual(f: &dyn TriEval, seed: u64, i: u64) -> Result<f64> {
    let (x, z, a) = sample_triple(f.domain(), seed, i)?;
    f.eval(&x.scale_real(2.0), &z, &a)?.dist(&f.eval(&x, &z, &a)?.scale_real(2.0))
}

/// Max of [`fixed_scaling_residual`] over the samples. When it is zero up to
/// rounding the limit coincides with `f` and need not be extracted.
pub fn check_fixed_scaling(f: &dyn TriEval, seed: u64, count: u64) -> Result<FixedScaling> {
    (0..count)
        .into_par_iter()
        .map(|i| Ok((fixed_scaling_residual(f, seed, i)?, i)))
        .try_reduce(
            || (0.0, u64::MAX),
            |a, b| {
                let pick_b = b.0 > a.0 || (b.0 == a.0 && b.1 < a.1);
                Ok(if pick_b { b } else { a })
            },
        )
        .map(|(max_residual, argmax)| FixedScaling {
            max_residual,
            argmax: if argmax == u64::MAX { 0 } else { argmax },
        })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitaryExtension {
    /// Max norm of `sum_j λ_j [L(u_j y,z,a) - L(u_j,z,a) y - u_j L(y,z,a)]`.
    pub reconstructed: f64,
    /// Max norm of the directly evaluated derivation defect.
    pub direct: f64,
    /// Max distance between the two defect vectors.
    pub disagreement: f64,
}

/// Derivation defect of `L` on a matrix algebra rebuilt from the unitary
/// decomposition `x = sum_j λ_j u_j`, compared with the direct defect.
pub fn check_unitary_derivation_extension(l: &dyn TriEval, seed: u64, count: u64) -> Result<UnitaryExtension> {
    let alg = l.domain();
    if alg.kind() != AlgebraKind::MatrixCStar {
        return Err(Error::WrongKind {
            expected: "matrix",
            found: alg,
        });
    }
    (0..count)
        .into_par_iter()
        .map(|i| {
            let t = SampleTuple::sample(alg, seed, i, false)?;
            let (x, y, z, a) = (&t.x, &t.y, &t.z, &t.a);
            let lyz = l.eval(y, z, a)?;
            let mut rebuilt = Element::zero(l.codomain());
            for (lambda, u) in unitary_decompose(x)? {
                let piece = l.eval(&u.mul(y)?, z, a)?.sub(&l.eval(&u, z, a)?.mul(y)?)?.sub(&u.mul(&lyz)?)?;
                rebuilt = rebuilt.add(&piece.scale(lambda))?;
            }
            let direct = l.eval(&x.mul(y)?, z, a)?.sub(&l.eval(x, z, a)?.mul(y)?)?.sub(&x.mul(&lyz)?)?;
            Ok((rebuilt.norm(), direct.norm(), rebuilt.dist(&direct)?))
        })
        .try_reduce(|| (0.0, 0.0, 0.0), |a, b| Ok((a.0.max(b.0), a.1.max(b.1), a.2.max(b.2))))
        .map(|(reconstructed, direct, disagreement)| UnitaryExtension {
            reconstructed,
            direct,
            disagreement,
        })
}
