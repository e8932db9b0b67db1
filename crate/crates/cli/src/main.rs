//! `tristab`: command-line front end for the verification suites.
//!
//! Exit status: 0 when every check passes, 1 when any check fails, 2 on a
//! usage or configuration error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use tristab::experiment::{sweep_configs, Suite};
use tristab::plot::write_plots;
use tristab::{
    emit_report, run_suite, AlgebraDescriptor, AlgebraKind, Complex64, ExperimentConfig, MapRecipe, PerturbationKind, PerturbationSpec, Tolerances, Variant,
    Verdict, VerificationReport,
};

#[derive(Parser)]
#[command(name = "tristab", version, about = "Stability checks for tri-additive s-functional inequalities")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Subcommand)]
enum Command {
    /// Cancellation identities and the sampled inequality
    CheckInequality,
    /// Hyers limit, stability bound and uniqueness
    Stability,
    /// Stability bound plus triderivation hyperstability
    DerivationSuite,
    /// Stability bound plus trihomomorphism hyperstability
    HomSuite,
    /// Unitary decomposition and unitary derivation checks (matrix algebra)
    UnitarySuite,
    /// One report per (r, theta0) cell
    Sweep(SweepArgs),
}

#[derive(Args)]
struct SweepArgs {
    /// Suite run in every cell
    #[arg(long, value_enum, default_value = "stability")]
    suite: SuiteArg,
    /// Comma-separated exponents
    #[arg(long, value_delimiter = ',', default_value = "0.5,3,4", allow_hyphen_values = true)]
    rs: Vec<f64>,
    /// Comma-separated perturbation sizes
    #[arg(long = "theta0s", value_delimiter = ',', default_value = "0,0.01,0.1")]
    theta0s: Vec<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    Inequality,
    Stability,
    Derivation,
    Homomorphism,
    Unitary,
}

impl From<SuiteArg> for Suite {
    fn from(s: SuiteArg) -> Suite {
        match s {
            SuiteArg::Inequality => Suite::Inequality,
            SuiteArg::Stability => Suite::Stability,
            SuiteArg::Derivation => Suite::Derivation,
            SuiteArg::Homomorphism => Suite::Homomorphism,
            SuiteArg::Unitary => Suite::Unitary,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgebraArg {
    Pointwise,
    Poly,
    Matrix,
}

#[derive(Clone, Copy, ValueEnum)]
enum RecipeArg {
    Exact,
    PolyTriderivation,
    PolyTrihom,
    PointwiseTrihom,
    InnerTriderivation,
}

#[derive(Clone, Copy, ValueEnum)]
enum PerturbationArg {
    Radial,
    Noise,
    None,
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    #[value(name = "A")]
    A,
    #[value(name = "B")]
    B,
    #[value(name = "scalarA")]
    ScalarA,
    #[value(name = "scalarB")]
    ScalarB,
}

#[derive(Args)]
struct Common {
    /// Algebra kind (default: matrix for unitary-suite, pointwise for
    /// hom-suite, poly otherwise)
    #[arg(long, value_enum, global = true)]
    algebra: Option<AlgebraArg>,
    /// Dimension, or truncation order for poly (default: 2 for matrix, 3
    /// otherwise)
    #[arg(long, global = true)]
    dim: Option<usize>,
    /// Exponent of the control function; r = 1 is excluded
    #[arg(long, global = true, default_value_t = 3.0)]
    r: f64,
    /// Size of the perturbation added to the exact map
    #[arg(long, global = true, default_value_t = 0.1)]
    theta0: f64,
    /// Complex parameter s as RE,IM with |s| < 1
    #[arg(long, global = true, default_value = "0.5,0", value_parser = parse_complex, allow_hyphen_values = true)]
    s: Complex64,
    #[arg(long, value_enum, global = true, default_value = "A")]
    variant: VariantArg,
    #[arg(long, global = true, env = "TRISTAB_SEED", default_value_t = 42)]
    seed: u64,
    /// Samples per verification
    #[arg(long, global = true, default_value_t = 1000)]
    samples: u64,
    /// Samples for the theta estimate (default: 10 x samples)
    #[arg(long, global = true)]
    theta_samples: Option<u64>,
    /// Exact map (default depends on the algebra)
    #[arg(long, value_enum, global = true)]
    recipe: Option<RecipeArg>,
    #[arg(long, value_enum, global = true, default_value = "radial")]
    perturbation: PerturbationArg,
    /// Check against this theta instead of the sampled estimate
    #[arg(long, global = true)]
    theta_override: Option<f64>,
    /// Report path (a directory for sweep)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Write SVG plots next to the report
    #[arg(long, global = true)]
    plot: bool,
    /// Slack above 1 allowed for the bound ratio (default 1e-6)
    #[arg(long, global = true)]
    tol_bound_ratio: Option<f64>,
    /// Tolerance for structural residuals of the limit map (default 1e-8)
    #[arg(long, global = true)]
    tol_structure: Option<f64>,
    /// Tolerance for identities that hold exactly (default 1e-12)
    #[arg(long, global = true)]
    tol_exact: Option<f64>,
    /// Tolerance for the unitary decomposition round trip (default 1e-10)
    #[arg(long, global = true)]
    tol_roundtrip: Option<f64>,
    /// Stop the Hyers iteration once the tail bound is below this (default 1e-11)
    #[arg(long, global = true)]
    tol_cauchy: Option<f64>,
}

fn parse_complex(s: &str) -> std::result::Result<Complex64, String> {
    let (re, im) = s.split_once(',').ok_or_else(|| format!("expected RE,IM, got {s:?}"))?;
    let parse = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("{v:?}: {e}"));
    Ok(Complex64::new(parse(re)?, parse(im)?))
}

impl Common {
    fn config(&self, suite: Suite) -> Result<ExperimentConfig> {
        let kind = match self.algebra {
            Some(AlgebraArg::Pointwise) => AlgebraKind::PointwiseCn,
            Some(AlgebraArg::Poly) => AlgebraKind::TruncatedPoly,
            Some(AlgebraArg::Matrix) => AlgebraKind::MatrixCStar,
            None => match suite {
                Suite::Unitary => AlgebraKind::MatrixCStar,
                Suite::Homomorphism => AlgebraKind::PointwiseCn,
                _ => AlgebraKind::TruncatedPoly,
            },
        };
        let dim = self.dim.unwrap_or(if kind == AlgebraKind::MatrixCStar { 2 } else { 3 });
        let algebra = AlgebraDescriptor::new(kind, dim)?;
        let map_recipe = match self.recipe {
            None => MapRecipe::default_for(algebra, suite),
            Some(RecipeArg::Exact) => MapRecipe::ExactTrilinear,
            Some(RecipeArg::PolyTriderivation) => MapRecipe::PolyTriderivation,
            Some(RecipeArg::PolyTrihom) => MapRecipe::PolyTrihom,
            Some(RecipeArg::PointwiseTrihom) => MapRecipe::PointwiseTrihom,
            Some(RecipeArg::InnerTriderivation) => MapRecipe::InnerTriderivation,
        };
        let perturbation = match self.perturbation {
            PerturbationArg::None => None,
            PerturbationArg::Radial => Some(PerturbationSpec::radial(self.theta0, self.r, self.seed)),
            PerturbationArg::Noise => Some(PerturbationSpec {
                kind: PerturbationKind::SeededNoise,
                ..PerturbationSpec::radial(self.theta0, self.r, self.seed)
            }),
        };
        let d = Tolerances::default();
        let tolerances = Tolerances {
            bound_ratio: self.tol_bound_ratio.unwrap_or(d.bound_ratio),
            structure: self.tol_structure.unwrap_or(d.structure),
            exact: self.tol_exact.unwrap_or(d.exact),
            roundtrip: self.tol_roundtrip.unwrap_or(d.roundtrip),
            cauchy: self.tol_cauchy.unwrap_or(d.cauchy),
        };
        let cfg = ExperimentConfig {
            algebra,
            map_recipe,
            perturbation,
            s: self.s,
            r: self.r,
            variant: match self.variant {
                VariantArg::A => Variant::A,
                VariantArg::B => Variant::B,
                VariantArg::ScalarA => Variant::ScalarA,
                VariantArg::ScalarB => Variant::ScalarB,
            },
            suite,
            seed: self.seed,
            sample_count: self.samples,
            theta_sample_count: self.theta_samples.unwrap_or(self.samples.saturating_mul(10)),
            theta_override: self.theta_override,
            tolerances,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

fn print_report(rep: &VerificationReport) {
    let c = &rep.config;
    println!(
        "{:?} suite on {} (r = {}, seed = {}, samples = {})",
        c.suite, c.algebra, c.r, c.seed, c.sample_count
    );
    if let Some(th) = rep.theta_hat {
        println!("  theta_hat = {th:e}");
    }
    for check in &rep.checks {
        let op = match check.comparison {
            tristab::experiment::Comparison::AtMost => "<=",
            tristab::experiment::Comparison::AtLeast => ">=",
        };
        println!(
            "  {:<28} {:>12.4e} {op} {:<10e} {} ({:?})",
            check.name, check.value.0, check.threshold.0, check.verdict, check.regime
        );
    }
    println!("verdict: {}", rep.verdict);
}

fn write_outputs(rep: &VerificationReport, path: &Path, plot: bool) -> Result<()> {
    let mut written = emit_report(rep, path)?;
    if plot {
        written.extend(write_plots(rep, path)?);
    }
    for p in written {
        eprintln!("wrote {}", p.display());
    }
    Ok(())
}

fn run_one(common: &Common, suite: Suite) -> Result<Verdict> {
    let cfg = common.config(suite)?;
    let rep = run_suite(&cfg)?;
    print_report(&rep);
    if let Some(path) = &common.out {
        write_outputs(&rep, path, common.plot)?;
    }
    Ok(rep.verdict)
}

fn cell_name(r: f64, theta0: f64) -> String {
    format!("r{r}-theta0_{theta0}")
}

fn run_sweep(common: &Common, args: &SweepArgs) -> Result<Verdict> {
    if args.rs.is_empty() || args.theta0s.is_empty() {
        bail!("sweep needs at least one r and one theta0");
    }
    let base = common.config(args.suite.into())?;
    let cells = sweep_configs(&base, &args.rs, &args.theta0s);
    for cfg in &cells {
        cfg.validate()
            .with_context(|| format!("cell r = {}, theta0 = {}", cfg.r, cfg.perturbation.map_or(0.0, |p| p.theta0)))?;
    }
    let mut verdict = Verdict::Pass;
    for cfg in &cells {
        let theta0 = cfg.perturbation.map_or(0.0, |p| p.theta0);
        let rep = run_suite(cfg).with_context(|| format!("cell r = {}, theta0 = {theta0}", cfg.r))?;
        println!("[{}]", cell_name(cfg.r, theta0));
        print_report(&rep);
        if let Some(dir) = &common.out {
            write_outputs(&rep, &dir.join(format!("{}.json", cell_name(cfg.r, theta0))), common.plot)?;
        }
        if rep.verdict == Verdict::Fail {
            verdict = Verdict::Fail;
        }
    }
    Ok(verdict)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.common.plot && cli.common.out.is_none() {
        eprintln!("error: --plot needs --out");
        return ExitCode::from(2);
    }
    let result = match &cli.command {
        Command::CheckInequality => run_one(&cli.common, Suite::Inequality),
        Command::Stability => run_one(&cli.common, Suite::Stability),
        Command::DerivationSuite => run_one(&cli.common, Suite::Derivation),
        Command::HomSuite => run_one(&cli.common, Suite::Homomorphism),
        Command::UnitarySuite => run_one(&cli.common, Suite::Unitary),
        Command::Sweep(args) => run_sweep(&cli.common, args),
    };
    match result {
        Ok(v) => ExitCode::from(v.exit_code() as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
