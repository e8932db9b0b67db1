//! Seeded experiments and their reports.
//!
//! A run is fully described by an [`ExperimentConfig`]. [`run_suite`] builds
//! the map, estimates `theta`, extracts the limit where the suite needs it
//! and records every check with its value, threshold and verdict, so a report
//! can be re-audited from its own numbers.

use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::algebra::{random_unitary_with, recombine, unitary_decompose, AlgebraDescriptor, AlgebraKind, Element};
use crate::error::{Error, Result};
use crate::hyers::{
    check_hyperstability_derivation, check_hyperstability_hom, check_triadditivity, check_trilinearity, check_uniqueness, hyers_limit,
    BoundKind, CurvePoint, Direction, HyersConfig, HyersLimitMap, Regime, TailModel,
};
use crate::inequality::{
    estimate_theta, max_combo_residual, unitary_derivation_defect, unitary_hom_defect, SampleTuple, UnitaryDerivationArgs, UnitaryHomArgs, Variant,
};
use crate::rng::{stream_rng, GENERATOR};
use crate::trimap::{
    make_inner_triderivation, make_pointwise_trihomomorphism, make_poly_triderivation, make_poly_trihomomorphism, perturb, PerturbationKind,
    PerturbationSpec, StabilityParams, TriEval, TriMap, TrilinearTensor,
};

pub const SCHEMA_VERSION: u32 = 1;

/// Number of sample triples whose convergence curves are kept.
pub const CURVE_PROBES: u64 = 3;

// Stream offset for the unitary draws of the unitary suite.
const UNITARY_STREAM: u64 = 1 << 41;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapRecipe {
    /// Gaussian tensor keyed by the experiment seed.
    ExactTrilinear,
    /// `t x' y' z'` on the truncated polynomial algebra.
    PolyTriderivation,
    /// Evaluation of all three arguments at `t = 0`.
    PolyTrihom,
    /// Coordinate projection cubed on `C^n`.
    PointwiseTrihom,
    /// `tr(z) tr(a) (c x - x c)` on matrices, `c` keyed by the seed.
    InnerTriderivation,
}

impl MapRecipe {
    pub fn build(self, alg: AlgebraDescriptor, seed: u64) -> Result<TrilinearTensor> {
        let need = |kind: AlgebraKind, expected: &'static str| {
            if alg.kind() == kind {
                Ok(())
            } else {
                Err(Error::WrongKind { expected, found: alg })
            }
        };
        match self {
            MapRecipe::ExactTrilinear => Ok(TrilinearTensor::random(alg, alg, seed)),
            MapRecipe::PolyTriderivation => {
                need(AlgebraKind::TruncatedPoly, "poly")?;
                make_poly_triderivation(alg.dim())
            }
            MapRecipe::PolyTrihom => {
                need(AlgebraKind::TruncatedPoly, "poly")?;
                make_poly_trihomomorphism(alg.dim(), Complex64::new(0.0, 0.0))
            }
            MapRecipe::PointwiseTrihom => {
                need(AlgebraKind::PointwiseCn, "pointwise")?;
                make_pointwise_trihomomorphism(alg.dim(), &(0..alg.dim()).collect::<Vec<_>>())
            }
            MapRecipe::InnerTriderivation => {
                need(AlgebraKind::MatrixCStar, "matrix")?;
                make_inner_triderivation(alg.dim(), seed)
            }
        }
    }

    /// The natural map for each algebra kind.
    pub fn default_for(alg: AlgebraDescriptor, suite: Suite) -> MapRecipe {
        match (alg.kind(), suite) {
            (AlgebraKind::TruncatedPoly, Suite::Homomorphism) => MapRecipe::PolyTrihom,
            (AlgebraKind::TruncatedPoly, _) => MapRecipe::PolyTriderivation,
            (AlgebraKind::PointwiseCn, _) => MapRecipe::PointwiseTrihom,
            (AlgebraKind::MatrixCStar, _) => MapRecipe::InnerTriderivation,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Inequality,
    Stability,
    Derivation,
    Homomorphism,
    Unitary,
}

impl Suite {
    /// Check names, in report order.
    pub fn checks(self) -> &'static [&'static str] {
        match self {
            Suite::Inequality => &["combo_a_exact", "combo_b_exact", "inequality_slack"],
            Suite::Stability => &["convergence", "bound_ratio", "uniqueness"],
            Suite::Derivation => &["bound_ratio", "triadditivity", "trilinearity", "derivation_residual", "permuting_residual"],
            Suite::Homomorphism => &["bound_ratio", "triadditivity", "trilinearity", "hom_residual"],
            Suite::Unitary => &[
                "decomposition_roundtrip",
                "extension_disagreement",
                "unitary_derivation_residual",
                "unitary_pair_residual",
                "all_unitary_hom_failures",
            ],
        }
    }
}

/// Thresholds. Every field has a default, so a config may override any
/// subset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Bound ratios pass when `<= 1 + bound_ratio`.
    pub bound_ratio: f64,
    /// Structural residuals of extracted limits.
    pub structure: f64,
    /// Residuals that vanish identically for exact maps.
    pub exact: f64,
    /// Unitary decomposition round trip.
    pub roundtrip: f64,
    /// Stopping tolerance of the Hyers iteration.
    pub cauchy: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            bound_ratio: 1e-6,
            structure: 1e-8,
            exact: 1e-12,
            roundtrip: 1e-10,
            cauchy: 1e-11,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub algebra: AlgebraDescriptor,
    pub map_recipe: MapRecipe,
    pub perturbation: Option<PerturbationSpec>,
    pub s: Complex64,
    /// Exponent of the control function.
    pub r: f64,
    pub variant: Variant,
    pub suite: Suite,
    pub seed: u64,
    /// Samples for every verification.
    pub sample_count: u64,
    /// Samples for the `theta` estimate; at least `sample_count`, so every
    /// verified triple is also an estimation triple.
    pub theta_sample_count: u64,
    /// Use this `theta` in the checks instead of the estimate.
    pub theta_override: Option<f64>,
    pub tolerances: Tolerances,
}

impl ExperimentConfig {
    /// Radial perturbation of the recipe's map with exponent `r`, variant
    /// A, `s = 1/2`, ten estimation samples per verification sample.
    pub fn new(algebra: AlgebraDescriptor, suite: Suite, r: f64, theta0: f64, seed: u64, sample_count: u64) -> Self {
        ExperimentConfig {
            algebra,
            map_recipe: MapRecipe::default_for(algebra, suite),
            perturbation: Some(PerturbationSpec::radial(theta0, r, seed)),
            s: Complex64::new(0.5, 0.0),
            r,
            variant: Variant::A,
            suite,
            seed,
            sample_count,
            theta_sample_count: sample_count.saturating_mul(10),
            theta_override: None,
            tolerances: Tolerances::default(),
        }
    }

    pub fn params(&self) -> Result<StabilityParams> {
        StabilityParams::new(self.s, self.r, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        self.params()?;
        Direction::for_r(self.r)?;
        if self.sample_count == 0 {
            return Err(Error::Config("sample_count must be at least 1".into()));
        }
        if self.theta_sample_count < self.sample_count {
            return Err(Error::Config(format!(
                "theta_sample_count ({}) must be at least sample_count ({})",
                self.theta_sample_count, self.sample_count
            )));
        }
        if let Some(p) = &self.perturbation {
            p.validate()?;
        }
        if let Some(t) = self.theta_override {
            if !(t >= 0.0 && t.is_finite()) {
                return Err(Error::Config(format!("theta_override must be finite and >= 0, got {t}")));
            }
        }
        if self.suite == Suite::Unitary && self.algebra.kind() != AlgebraKind::MatrixCStar {
            return Err(Error::WrongKind {
                expected: "matrix",
                found: self.algebra,
            });
        }
        let t = self.tolerances;
        for (name, v) in [
            ("bound_ratio", t.bound_ratio),
            ("structure", t.structure),
            ("exact", t.exact),
            ("roundtrip", t.roundtrip),
            ("cauchy", t.cauchy),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("tolerance {name} must be positive, got {v}")));
            }
        }
        self.map_recipe.build(self.algebra, self.seed).map(|_| ())
    }

    pub fn build_map(&self) -> Result<TriMap> {
        let d = self.map_recipe.build(self.algebra, self.seed)?;
        match self.perturbation {
            Some(spec) => perturb(d, spec),
            None => Ok(TriMap::exact(d)),
        }
    }

    /// Same exact part, other perturbation kind and direction seed.
    fn companion_map(&self) -> Result<TriMap> {
        let d = self.map_recipe.build(self.algebra, self.seed)?;
        match self.perturbation {
            Some(spec) => {
                let kind = match spec.kind {
                    PerturbationKind::Radial => PerturbationKind::SeededNoise,
                    PerturbationKind::SeededNoise => PerturbationKind::Radial,
                };
                perturb(
                    d,
                    PerturbationSpec {
                        kind,
                        direction_seed: spec.direction_seed.wrapping_add(1),
                        ..spec
                    },
                )
            }
            None => Ok(TriMap::exact(d)),
        }
    }
}

/// An `f64` that survives JSON even when infinite or NaN: finite values are
/// numbers, the rest the strings `"inf"`, `"-inf"`, `"nan"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Real(pub f64);

impl Serialize for Real {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let v = self.0;
        if v.is_finite() {
            s.serialize_f64(v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }
}

impl<'de> Deserialize<'de> for Real {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Str(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(Real(v)),
            Repr::Str(s) => match s.as_str() {
                "inf" => Ok(Real(f64::INFINITY)),
                "-inf" => Ok(Real(f64::NEG_INFINITY)),
                "nan" => Ok(Real(f64::NAN)),
                other => Err(serde::de::Error::custom(format!("not a number: {other:?}"))),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Pass => 0,
            Verdict::Fail => 1,
        }
    }

    fn from_flag(ok: bool) -> Verdict {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    /// PASS iff `value <= threshold`.
    AtMost,
    /// PASS iff `value >= threshold`.
    AtLeast,
}

impl Comparison {
    pub fn holds(self, value: f64, threshold: f64) -> bool {
        match self {
            Comparison::AtMost => value <= threshold,
            Comparison::AtLeast => value >= threshold,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckRecord {
    pub name: String,
    pub value: Real,
    pub threshold: Real,
    pub comparison: Comparison,
    pub verdict: Verdict,
    pub regime: Regime,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl CheckRecord {
    fn new(name: &str, value: f64, threshold: f64, comparison: Comparison, regime: Regime) -> Self {
        CheckRecord {
            name: name.into(),
            value: Real(value),
            threshold: Real(threshold),
            comparison,
            verdict: Verdict::from_flag(comparison.holds(value, threshold)),
            regime,
            note: None,
        }
    }

    fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    /// Whether the stored verdict follows from the stored numbers.
    pub fn is_consistent(&self) -> bool {
        self.verdict == Verdict::from_flag(self.comparison.holds(self.value.0, self.threshold.0))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Curve {
    pub label: String,
    pub converged: bool,
    pub points: Vec<CurvePoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerificationReport {
    pub schema_version: u32,
    pub generator: String,
    pub tool_version: String,
    pub config: ExperimentConfig,
    /// Sampled supremum of the inequality's effective `theta`.
    pub theta_hat: Option<f64>,
    /// The `theta` the checks were run against.
    pub theta_used: Option<f64>,
    /// How the Hyers stopping rule was certified, when a limit was taken.
    pub tail_certificate: Option<String>,
    pub checks: Vec<CheckRecord>,
    pub curves: Vec<Curve>,
    pub bound_ratios: Vec<Real>,
    pub verdict: Verdict,
    pub wall_clock_seconds: f64,
}

impl VerificationReport {
    /// Every stored verdict follows from the stored numbers, and the overall
    /// verdict is PASS exactly when all checks pass.
    pub fn is_consistent(&self) -> bool {
        let all = self.checks.iter().all(|c| c.verdict == Verdict::Pass);
        self.checks.iter().all(CheckRecord::is_consistent) && self.verdict == Verdict::from_flag(all)
    }

    pub fn check(&self, name: &str) -> Option<&CheckRecord> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// JSON text with the wall clock zeroed, for determinism comparisons.
    pub fn canonical_json(&self) -> String {
        let mut r = self.clone();
        r.wall_clock_seconds = 0.0;
        to_json(&r)
    }
}

fn to_json(rep: &VerificationReport) -> String {
    let mut s = serde_json::to_string_pretty(rep).expect("report serializes");
    s.push('\n');
    s
}

/// Runs a measurement, turning Hyers non-convergence into an infinite value
/// so it is recorded as a failure instead of aborting the run.
fn measured(g: impl FnOnce() -> Result<f64>) -> Result<(f64, Option<String>)> {
    match g() {
        Ok(v) => Ok((v, None)),
        Err(e @ Error::NonConvergence { .. }) => Ok((f64::INFINITY, Some(e.to_string()))),
        Err(e) => Err(e),
    }
}

fn record(name: &str, m: (f64, Option<String>), threshold: f64, cmp: Comparison, regime: Regime) -> CheckRecord {
    let rec = CheckRecord::new(name, m.0, threshold, cmp, regime);
    match m.1 {
        Some(n) => rec.with_note(n),
        None => rec,
    }
}

struct Context<'a> {
    cfg: &'a ExperimentConfig,
    f: TriMap,
    params: StabilityParams,
    theta_hat: Option<f64>,
    theta_used: Option<f64>,
    hyers: Option<HyersConfig>,
}

impl Context<'_> {
    fn theta(&self) -> f64 {
        self.theta_used.unwrap_or(0.0)
    }

    fn limit(&self) -> Result<HyersLimitMap<'_>> {
        HyersLimitMap::new(&self.f, self.hyers.expect("limit requested by a suite that sets it up"))
    }
}

/// Runs the configured suite. The numerical content depends only on the
/// config: samples are independent streams and all aggregation is by max,
/// so the rayon thread count does not matter.
pub fn run_suite(cfg: &ExperimentConfig) -> Result<VerificationReport> {
    let start = Instant::now();
    cfg.validate()?;
    let f = cfg.build_map()?;
    let params = cfg.params()?;
    let mut ctx = Context {
        cfg,
        f,
        params,
        theta_hat: None,
        theta_used: None,
        hyers: None,
    };
    if cfg.suite != Suite::Unitary {
        let th = estimate_theta(&ctx.f, &params, cfg.variant, cfg.seed, cfg.theta_sample_count)?;
        ctx.theta_hat = Some(th);
        ctx.theta_used = Some(cfg.theta_override.unwrap_or(th));
    }
    let needs_limit = cfg.suite != Suite::Inequality;
    let mut tail_certificate = None;
    if needs_limit {
        let tail = match ctx.theta_hat {
            Some(theta_hat) => {
                tail_certificate = Some(format!("empirical tail certificate (sampled theta, variant {})", cfg.variant.name()));
                TailModel::Estimated {
                    theta_hat,
                    variant: cfg.variant,
                }
            }
            None => {
                tail_certificate = Some("empirical tail certificate (observed step)".into());
                TailModel::Empirical
            }
        };
        ctx.hyers = Some(HyersConfig::for_regime(cfg.r, tail)?.with_tol(cfg.tolerances.cauchy));
    }

    let mut checks = Vec::new();
    let mut curves = Vec::new();
    let mut ratios = Vec::new();
    if let Some(h) = &ctx.hyers {
        for i in 0..CURVE_PROBES.min(cfg.sample_count) {
            let t = SampleTuple::sample(cfg.algebra, cfg.seed, i, false)?;
            let res = hyers_limit(&ctx.f, h, &t.x, &t.z, &t.a)?;
            curves.push(Curve {
                label: format!("sample-{i}"),
                converged: res.converged,
                points: res.curve,
            });
        }
    }

    match cfg.suite {
        Suite::Inequality => inequality_checks(&ctx, &mut checks)?,
        Suite::Stability => {
            stability_checks(&ctx, &mut checks, &mut ratios)?;
        }
        Suite::Derivation | Suite::Homomorphism => structural_checks(&ctx, &mut checks, &mut ratios)?,
        Suite::Unitary => unitary_checks(&ctx, &mut checks)?,
    }
    debug_assert_eq!(checks.iter().map(|c| c.name.as_str()).collect::<Vec<_>>(), cfg.suite.checks());

    let verdict = Verdict::from_flag(checks.iter().all(|c| c.verdict == Verdict::Pass));
    Ok(VerificationReport {
        schema_version: SCHEMA_VERSION,
        generator: GENERATOR.into(),
        tool_version: env!("CARGO_PKG_VERSION").into(),
        config: cfg.clone(),
        theta_hat: ctx.theta_hat,
        theta_used: ctx.theta_used,
        tail_certificate,
        checks,
        curves,
        bound_ratios: ratios.into_iter().map(Real).collect(),
        verdict,
        wall_clock_seconds: start.elapsed().as_secs_f64(),
    })
}

fn inequality_checks(ctx: &Context<'_>, checks: &mut Vec<CheckRecord>) -> Result<()> {
    let cfg = ctx.cfg;
    let tol = cfg.tolerances;
    let (ca, cb) = max_combo_residual(ctx.f.exact_part(), cfg.seed, cfg.sample_count)?;
    checks.push(CheckRecord::new("combo_a_exact", ca, tol.exact, Comparison::AtMost, Regime::InScope));
    checks.push(CheckRecord::new("combo_b_exact", cb, tol.exact, Comparison::AtMost, Regime::InScope));
    // Slack plus the evaluation's rounding allowance, relative to the size
    // of the terms.
    let p = ctx.params.with_theta(ctx.theta());
    let variant = cfg.variant;
    let slack = (0..cfg.theta_sample_count)
        .into_par_iter()
        .map(|i| {
            let t = SampleTuple::sample(cfg.algebra, cfg.seed, i, variant.is_scalar())?;
            let ev = variant.evaluate(&ctx.f, &p, &t)?;
            Ok((ev.slack + ev.rounding) / (1.0 + ev.lhs + ev.rhs_control + ev.rhs_product))
        })
        .try_reduce(|| f64::INFINITY, |a: f64, b| Ok(a.min(b)))?;
    checks.push(CheckRecord::new("inequality_slack", slack, -tol.exact, Comparison::AtLeast, Regime::InScope));
    Ok(())
}

fn bound_check(ctx: &Context<'_>, ratios: &mut Vec<f64>) -> Result<(CheckRecord, usize)> {
    let cfg = ctx.cfg;
    let kind = BoundKind::for_regime(cfg.variant, cfg.r)?;
    let c = kind.constant(ctx.theta(), cfg.r)?;
    let h = ctx.hyers.expect("stability suites set up the limit");
    let r = cfg.r;
    let per_sample: Vec<(f64, bool)> = (0..cfg.sample_count)
        .into_par_iter()
        .map(|i| {
            let t = SampleTuple::sample(cfg.algebra, cfg.seed, i, false)?;
            let res = hyers_limit(&ctx.f, &h, &t.x, &t.z, &t.a)?;
            let num = ctx.f.eval(&t.x, &t.z, &t.a)?.dist(&res.value)?;
            let den = c * t.x.norm().powf(r) * t.z.norm().powf(r) * t.a.norm().powf(r);
            let ratio = if den > 0.0 {
                num / den
            } else if num == 0.0 {
                0.0
            } else {
                f64::INFINITY
            };
            Ok((ratio, res.converged))
        })
        .collect::<Result<_>>()?;
    let unconverged = per_sample.iter().filter(|(_, ok)| !ok).count();
    ratios.extend(per_sample.iter().map(|(q, _)| *q));
    let max = per_sample.iter().map(|(q, _)| *q).fold(0.0, f64::max);
    let rec = CheckRecord::new("bound_ratio", max, 1.0 + cfg.tolerances.bound_ratio, Comparison::AtMost, Regime::stability(r))
        .with_note(format!("{kind:?} constant {c:e}"));
    Ok((rec, unconverged))
}

fn stability_checks(ctx: &Context<'_>, checks: &mut Vec<CheckRecord>, ratios: &mut Vec<f64>) -> Result<()> {
    let cfg = ctx.cfg;
    let (bound, unconverged) = bound_check(ctx, ratios)?;
    checks.push(
        CheckRecord::new("convergence", unconverged as f64, 0.0, Comparison::AtMost, Regime::stability(cfg.r))
            .with_note("number of samples whose Hyers iteration did not converge"),
    );
    checks.push(bound);
    let other = cfg.companion_map()?;
    let h = ctx.hyers.expect("stability suite sets up the limit");
    let m = measured(|| check_uniqueness(&ctx.f, &other, &h, cfg.seed, cfg.sample_count))?;
    checks.push(record("uniqueness", m, cfg.tolerances.structure, Comparison::AtMost, Regime::stability(cfg.r)));
    Ok(())
}

fn structural_checks(ctx: &Context<'_>, checks: &mut Vec<CheckRecord>, ratios: &mut Vec<f64>) -> Result<()> {
    let cfg = ctx.cfg;
    let tol = cfg.tolerances.structure;
    let (bound, unconverged) = bound_check(ctx, ratios)?;
    checks.push(if unconverged > 0 {
        CheckRecord::new("bound_ratio", f64::INFINITY, bound.threshold.0, Comparison::AtMost, bound.regime)
            .with_note(format!("{unconverged} samples did not converge"))
    } else {
        bound
    });
    let l = ctx.limit()?;
    let m = measured(|| check_triadditivity(&l, cfg.seed, cfg.sample_count))?;
    checks.push(record("triadditivity", m, tol, Comparison::AtMost, Regime::InScope));
    let m = measured(|| check_trilinearity(&l, cfg.seed, cfg.sample_count))?;
    checks.push(record("trilinearity", m, tol, Comparison::AtMost, Regime::InScope));
    let structural = Regime::structural(cfg.r);
    if cfg.suite == Suite::Derivation {
        let res = check_hyperstability_derivation(&l, cfg.seed, cfg.sample_count);
        let (d, p) = match res {
            Ok(v) => ((v.derivation, None), (v.permuting, None)),
            Err(e @ Error::NonConvergence { .. }) => ((f64::INFINITY, Some(e.to_string())), (f64::INFINITY, Some(e.to_string()))),
            Err(e) => return Err(e),
        };
        checks.push(record("derivation_residual", d, tol, Comparison::AtMost, structural));
        checks.push(record("permuting_residual", p, tol, Comparison::AtMost, Regime::permuting(cfg.r)));
    } else {
        let m = measured(|| check_hyperstability_hom(&l, cfg.seed, cfg.sample_count))?;
        checks.push(record("hom_residual", m, tol, Comparison::AtMost, structural));
    }
    Ok(())
}

fn unitary_checks(ctx: &Context<'_>, checks: &mut Vec<CheckRecord>) -> Result<()> {
    let cfg = ctx.cfg;
    let tol = cfg.tolerances;
    let alg = cfg.algebra;
    // The limit of an unperturbed map is the map itself.
    let limit;
    let l: &dyn TriEval = match cfg.perturbation {
        Some(p) if p.theta0 > 0.0 => {
            let h = HyersConfig::for_regime(cfg.r, TailModel::Empirical)?.with_tol(tol.cauchy);
            limit = HyersLimitMap::new(&ctx.f, h)?;
            &limit
        }
        _ => &ctx.f,
    };
    let roundtrip = (0..cfg.sample_count)
        .into_par_iter()
        .map(|i| {
            let x = SampleTuple::sample(alg, cfg.seed, i, false)?.x;
            recombine(alg, &unitary_decompose(&x)?)?.dist(&x)
        })
        .try_reduce(|| 0.0, |a: f64, b| Ok(a.max(b)))?;
    checks.push(CheckRecord::new("decomposition_roundtrip", roundtrip, tol.roundtrip, Comparison::AtMost, Regime::InScope));

    let ext = measured(|| Ok(crate::hyers::check_unitary_derivation_extension(l, cfg.seed, cfg.sample_count)?.disagreement))?;
    checks.push(record("extension_disagreement", ext, tol.structure, Comparison::AtMost, Regime::InScope));

    let structural = Regime::structural(cfg.r);
    let per_sample = |i: u64| -> Result<(Element, Element, Element, SampleTuple)> {
        let t = SampleTuple::sample(alg, cfg.seed, i, false)?;
        let mut rng = stream_rng(cfg.seed, UNITARY_STREAM + i);
        let u = random_unitary_with(&mut rng, alg)?;
        let v = random_unitary_with(&mut rng, alg)?;
        let w = random_unitary_with(&mut rng, alg)?;
        Ok((u, v, w, t))
    };
    let single = measured(|| {
        (0..cfg.sample_count)
            .into_par_iter()
            .map(|i| {
                let (u, _, _, t) = per_sample(i)?;
                unitary_derivation_defect(l, UnitaryDerivationArgs::Single { u: &u, y: &t.y, z: &t.z, a: &t.a })
            })
            .try_reduce(|| 0.0, |a: f64, b| Ok(a.max(b)))
    })?;
    checks.push(record("unitary_derivation_residual", single, tol.structure, Comparison::AtMost, structural));
    let pair = measured(|| {
        (0..cfg.sample_count)
            .into_par_iter()
            .map(|i| {
                let (u, v, _, t) = per_sample(i)?;
                unitary_derivation_defect(l, UnitaryDerivationArgs::Pair { u: &u, v: &v, z: &t.z, a: &t.a })
            })
            .try_reduce(|| 0.0, |a: f64, b| Ok(a.max(b)))
    })?;
    checks.push(record("unitary_pair_residual", pair, tol.structure, Comparison::AtMost, structural));

    // All-unitary homomorphism mode: only evaluability is checked, the
    // defect itself depends on the map.
    let failures: usize = (0..cfg.sample_count)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(cfg.seed, UNITARY_STREAM + i);
            let us: Vec<Element> = (0..6).map(|_| random_unitary_with(&mut rng, alg)).collect::<Result<_>>()?;
            let refs = [&us[0], &us[1], &us[2], &us[3], &us[4], &us[5]];
            Ok(match unitary_hom_defect(l, UnitaryHomArgs::AllUnitary(refs)) {
                Ok(v) if v.is_finite() => 0,
                Ok(_) | Err(Error::NonConvergence { .. }) | Err(Error::NotUnitary { .. }) => 1,
                Err(e) => return Err(e),
            })
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))?;
    checks.push(
        CheckRecord::new("all_unitary_hom_failures", failures as f64, 0.0, Comparison::AtMost, Regime::InScope)
            .with_note("number of unitary 6-tuples that could not be evaluated"),
    );
    Ok(())
}

/// Writes the report as JSON at `path` and each convergence curve as
/// `<stem>.<label>.csv` next to it. Returns every path written.
pub fn emit_report(rep: &VerificationReport, path: &Path) -> Result<Vec<PathBuf>> {
    write_file(path, &to_json(rep))?;
    let mut written = vec![path.to_path_buf()];
    for curve in &rep.curves {
        let csv_path = sibling(path, &format!("{}.csv", curve.label));
        let mut text = String::from("n,last_step,tail_bound\n");
        for p in &curve.points {
            text.push_str(&format!("{},{:e},{:e}\n", p.n, p.last_step, p.tail_bound));
        }
        write_file(&csv_path, &text)?;
        written.push(csv_path);
    }
    Ok(written)
}

/// `dir/<stem>.<suffix>` for `path = dir/<stem>.<ext>`.
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "report".into());
    path.with_file_name(format!("{stem}.{suffix}"))
}

pub(crate) fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|source| Error::Io {
            path: dir.display().to_string(),
            source,
        })?;
    }
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Reads a report, rejecting other schema versions and unknown fields.
pub fn read_report(path: &Path) -> Result<VerificationReport> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_report(&text, &path.display().to_string())
}

pub fn parse_report(text: &str, origin: &str) -> Result<VerificationReport> {
    let format_err = |source| Error::Format {
        path: origin.to_string(),
        source,
    };
    let value: serde_json::Value = serde_json::from_str(text).map_err(format_err)?;
    let found = value.get("schema_version").and_then(|v| v.as_u64()).unwrap_or(0);
    if found != u64::from(SCHEMA_VERSION) {
        return Err(Error::Schema {
            found: found as u32,
            expected: SCHEMA_VERSION,
        });
    }
    serde_json::from_value(value).map_err(format_err)
}

/// One config per `(r, theta0)` cell, `r` outermost. Each cell's
/// perturbation keeps the base kind and direction seed with the cell's
/// exponent and size.
pub fn sweep_configs(base: &ExperimentConfig, rs: &[f64], theta0s: &[f64]) -> Vec<ExperimentConfig> {
    let mut out = Vec::with_capacity(rs.len() * theta0s.len());
    for &r in rs {
        for &theta0 in theta0s {
            let spec = base.perturbation.unwrap_or_else(|| PerturbationSpec::radial(0.0, r, base.seed));
            out.push(ExperimentConfig {
                r,
                perturbation: Some(PerturbationSpec { theta0, r, ..spec }),
                ..base.clone()
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly_cfg(suite: Suite, r: f64, theta0: f64, samples: u64) -> ExperimentConfig {
        ExperimentConfig::new(AlgebraDescriptor::poly(3).unwrap(), suite, r, theta0, 42, samples)
    }

    #[test]
    fn exact_inequality_suite_passes() {
        let mut cfg = poly_cfg(Suite::Inequality, 3.0, 0.0, 200);
        cfg.map_recipe = MapRecipe::ExactTrilinear;
        let rep = run_suite(&cfg).unwrap();
        assert_eq!(rep.verdict, Verdict::Pass, "{rep:#?}");
        assert!(rep.check("combo_a_exact").unwrap().value.0 <= 1e-12);
        assert_eq!(rep.theta_hat, Some(0.0));
        assert!(rep.is_consistent());
    }

    #[test]
    fn zero_perturbation_bound_is_vacuous() {
        let rep = run_suite(&poly_cfg(Suite::Stability, 3.0, 0.0, 100)).unwrap();
        assert_eq!(rep.theta_hat, Some(0.0));
        assert_eq!(rep.check("bound_ratio").unwrap().value.0, 0.0);
        assert_eq!(rep.verdict, Verdict::Pass);
    }

    #[test]
    fn suites_list_their_checks_once() {
        let m = AlgebraDescriptor::matrix(2).unwrap();
        let cfgs = [
            poly_cfg(Suite::Inequality, 3.0, 0.1, 50),
            poly_cfg(Suite::Stability, 3.0, 0.1, 50),
            poly_cfg(Suite::Derivation, 3.0, 0.1, 50),
            ExperimentConfig::new(AlgebraDescriptor::pointwise(3).unwrap(), Suite::Homomorphism, 3.0, 0.1, 1, 50),
            ExperimentConfig::new(m, Suite::Unitary, 3.0, 0.0, 1, 20),
        ];
        for cfg in cfgs {
            let rep = run_suite(&cfg).unwrap();
            let names: Vec<&str> = rep.checks.iter().map(|c| c.name.as_str()).collect();
            assert_eq!(names, cfg.suite.checks());
            assert_eq!(rep.verdict, Verdict::Pass, "{:?}: {:#?}", cfg.suite, rep.checks);
            assert!(rep.is_consistent());
        }
    }

    #[test]
    fn low_r_derivation_is_flagged_exploratory() {
        let rep = run_suite(&poly_cfg(Suite::Derivation, 1.5, 0.1, 30)).unwrap();
        assert_eq!(rep.check("derivation_residual").unwrap().regime, Regime::Exploratory);
        assert_eq!(rep.check("permuting_residual").unwrap().regime, Regime::InScope);
    }

    #[test]
    fn theta_below_estimate_fails() {
        let mut cfg = poly_cfg(Suite::Stability, 3.0, 0.1, 200);
        cfg.variant = Variant::B;
        let th = run_suite(&cfg).unwrap().theta_hat.unwrap();
        cfg.theta_override = Some(th / 2.0);
        let rep = run_suite(&cfg).unwrap();
        assert_eq!(rep.verdict, Verdict::Fail);
        assert_eq!(rep.verdict.exit_code(), 1);
        assert!(rep.is_consistent());
    }

    #[test]
    fn config_validation_errors() {
        let mut cfg = poly_cfg(Suite::Stability, 1.0, 0.1, 10);
        assert!(matches!(cfg.validate(), Err(Error::Regime(_))));
        cfg.r = 3.0;
        cfg.s = Complex64::new(1.5, 0.0);
        assert!(matches!(cfg.validate(), Err(Error::InvalidParams(_))));
        cfg.s = Complex64::new(0.5, 0.0);
        cfg.sample_count = 0;
        assert!(cfg.validate().is_err());
        cfg.sample_count = 10;
        cfg.suite = Suite::Unitary;
        assert!(matches!(cfg.validate(), Err(Error::WrongKind { .. })));
        cfg.suite = Suite::Stability;
        cfg.map_recipe = MapRecipe::PointwiseTrihom;
        assert!(matches!(cfg.validate(), Err(Error::WrongKind { .. })));
    }

    #[test]
    fn report_roundtrip_and_csv() {
        let dir = tempfile::tempdir().unwrap();
        let mut rep = run_suite(&poly_cfg(Suite::Stability, 3.0, 0.1, 20)).unwrap();
        rep.bound_ratios.push(Real(f64::INFINITY));
        let path = dir.path().join("out/report.json");
        let written = emit_report(&rep, &path).unwrap();
        assert_eq!(written.len(), 1 + rep.curves.len());
        let back = read_report(&path).unwrap();
        assert_eq!(back, rep);
        for (csv, curve) in written[1..].iter().zip(&rep.curves) {
            let text = std::fs::read_to_string(csv).unwrap();
            let mut lines = text.lines();
            assert_eq!(lines.next(), Some("n,last_step,tail_bound"));
            assert_eq!(lines.count(), curve.points.len());
        }
    }

    #[test]
    fn unknown_fields_and_schema_are_rejected() {
        let rep = run_suite(&poly_cfg(Suite::Inequality, 3.0, 0.1, 10)).unwrap();
        let text = rep.canonical_json();
        assert!(parse_report(&text, "t").is_ok());
        let extra = text.replacen("{", "{\n  \"extra\": 1,", 1);
        assert!(matches!(parse_report(&extra, "t"), Err(Error::Format { .. })));
        let other = text.replace("\"schema_version\": 1", "\"schema_version\": 2");
        assert!(matches!(parse_report(&other, "t"), Err(Error::Schema { found: 2, .. })));
    }

    #[test]
    fn reports_do_not_depend_on_thread_count() {
        let cfg = poly_cfg(Suite::Stability, 3.0, 0.1, 64);
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| run_suite(&cfg).unwrap().canonical_json())
        };
        assert_eq!(run(1), run(4));
    }

    #[test]
    fn sweep_grid_order() {
        let base = poly_cfg(Suite::Stability, 3.0, 0.1, 10);
        let cells = sweep_configs(&base, &[0.5, 3.0], &[0.0, 0.1]);
        let got: Vec<(f64, f64)> = cells.iter().map(|c| (c.r, c.perturbation.unwrap().theta0)).collect();
        assert_eq!(got, vec![(0.5, 0.0), (0.5, 0.1), (3.0, 0.0), (3.0, 0.1)]);
        assert!(cells.iter().all(|c| c.perturbation.unwrap().r == c.r));
    }
}
