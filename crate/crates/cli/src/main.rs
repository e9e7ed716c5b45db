//! `cvlab`: command-line front end for cvlab-core.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use cvlab_core::curvature::{curvature_table, write_curvature_csv};
use cvlab_core::families::{step_s_window, FamilyName, FamilySpec};
use cvlab_core::integrals::{
    chern_number, default_s_grid, growth_fit, lp_series, normalized_chern_series,
    normalized_scalar_series, normalized_sigma_series, write_series_csv, GrowthFit,
};
use cvlab_core::metric::{build_metric, ClassificationSnapshot, JsonReal};
use cvlab_core::numerics::log_spaced;
use cvlab_core::profile::file::{load_profile, ProfileSpec};
use cvlab_core::profile::{validate, ProfileKind};
use cvlab_core::{Error, Metric, Options, Profile, Series};
use serde::Serialize;
use serde_json::{json, Value};

#[derive(Parser)]
#[command(
    name = "cvlab",
    version,
    about = "Numerical lab for U(n)-invariant Kähler metrics on C^n"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the generator conditions; exit 1 on violation.
    Validate(Common),
    /// Class (Flat, S1, S2, S3), ξ(∞), x₀, r₀ and volume growth.
    Classify(Common),
    /// Curvature components on the model grid.
    CurvatureTable(Common),
    /// Normalized ball integrals over a range of radii, with a growth fit.
    Series(SeriesArgs),
    /// ∫ Ricⁿ over ℂⁿ with its expected value and bound.
    Chern(Common),
    /// Growth fit only, as `{metric, k, mode, fit}`.
    Report(SeriesArgs),
}

#[derive(Args, Clone)]
struct Common {
    /// Closed-form generator in the variable `t`.
    #[arg(long, conflicts_with_all = ["profile", "family"])]
    expr: Option<String>,
    /// What `--expr` generates.
    #[arg(long, default_value = "xi")]
    kind: KindArg,
    /// Profile file (`key = value` lines).
    #[arg(long, conflicts_with = "family")]
    profile: Option<PathBuf>,
    /// Built-in family.
    #[arg(long)]
    family: Option<FamilyArg>,
    #[command(flatten)]
    params: FamilyParams,
    /// Complex dimension.
    #[arg(long, default_value_t = 2)]
    n: usize,
    #[arg(long, env = "CVLAB_RMAX", default_value_t = 1e8)]
    rmax: f64,
    #[arg(long, env = "CVLAB_GRID", default_value_t = 4096)]
    grid: usize,
    /// Relative quadrature tolerance.
    #[arg(long, env = "CVLAB_TOL", default_value_t = 1e-8)]
    tol: f64,
    /// Output file (written atomically); stdout if absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    format: Option<Format>,
}

#[derive(Args, Clone, Default)]
struct FamilyParams {
    /// poly: ξ(∞).
    #[arg(long)]
    a: Option<String>,
    /// poly: rational | exponential.
    #[arg(long)]
    shape: Option<String>,
    /// s3: radius where ξ reaches 1.
    #[arg(long)]
    r0: Option<String>,
    /// lp: integrability exponent.
    #[arg(long)]
    p: Option<String>,
    /// lp: step height exponent.
    #[arg(long)]
    alpha: Option<String>,
    /// lp: step width exponent.
    #[arg(long)]
    beta: Option<String>,
    /// yau, lp: last step.
    #[arg(long)]
    lmax: Option<String>,
    /// yau: step width exponent.
    #[arg(long)]
    q: Option<String>,
    /// yau, lp: edge smoothing as a fraction of the step width.
    #[arg(long)]
    factor: Option<String>,
}

impl FamilyParams {
    fn map(&self) -> BTreeMap<String, String> {
        [
            ("a", &self.a),
            ("shape", &self.shape),
            ("r0", &self.r0),
            ("p", &self.p),
            ("alpha", &self.alpha),
            ("beta", &self.beta),
            ("lmax", &self.lmax),
            ("q", &self.q),
            ("factor", &self.factor),
        ]
        .into_iter()
        .filter_map(|(k, v)| v.as_ref().map(|v| (k.to_string(), v.clone())))
        .collect()
    }
}

#[derive(Args, Clone)]
struct SeriesArgs {
    #[command(flatten)]
    common: Common,
    /// Degree of the density.
    #[arg(long, default_value_t = 1)]
    k: usize,
    #[arg(long, default_value = "sigma")]
    mode: Mode,
    /// Number of radii.
    #[arg(long, default_value_t = 64)]
    points: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Xi,
    Fpp,
    H,
}

impl From<KindArg> for ProfileKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Xi => ProfileKind::Xi,
            KindArg::Fpp => ProfileKind::Fpp,
            KindArg::H => ProfileKind::H,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Yau,
    Lp,
    S3,
    Poly,
}

#[derive(Clone, Copy, PartialEq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Mode {
    Sigma,
    Chern,
    Scalar,
    Lp,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

/// A profile or family, resolved from flags or a file.
enum Source {
    Profile(Profile, String),
    Family(FamilySpec, String),
}

impl Common {
    fn source(&self) -> anyhow::Result<Source> {
        let params = self.params.map();
        if !params.is_empty() && self.family.is_none() {
            bail!(Error::InvalidArgument(
                "family parameters given without --family".into()
            ));
        }
        if let Some(expr) = &self.expr {
            let kind: ProfileKind = self.kind.into();
            let p = Profile::parse(kind, expr)?;
            return Ok(Source::Profile(p, format!("{}: {expr}", kind_name(kind))));
        }
        if let Some(path) = &self.profile {
            return Ok(match load_profile::<f64>(path)? {
                ProfileSpec::Profile(p) => Source::Profile(p, format!("file: {}", path.display())),
                ProfileSpec::Family(f) => {
                    let label = family_label(&f);
                    Source::Family(f, label)
                }
            });
        }
        if let Some(fam) = self.family {
            let name = match fam {
                FamilyArg::Yau => "yau",
                FamilyArg::Lp => "lp",
                FamilyArg::S3 => "s3",
                FamilyArg::Poly => "poly",
            };
            let spec = FamilySpec::new(name, params)?;
            let label = family_label(&spec);
            return Ok(Source::Family(spec, label));
        }
        bail!(Error::InvalidArgument(
            "one of --expr, --profile or --family is required".into()
        ))
    }

    fn options(&self) -> Options {
        Options::default()
            .with_grid(self.grid)
            .with_r_max(self.rmax)
            .with_rel_tol(self.tol)
    }

    fn build(&self, src: &Source, k: Option<usize>) -> anyhow::Result<Metric> {
        Ok(match src {
            Source::Profile(p, _) => build_metric(p, self.n, &self.options())?,
            Source::Family(f, _) => f.build(self.n, k, &self.options())?,
        })
    }
}

fn kind_name(k: ProfileKind) -> &'static str {
    match k {
        ProfileKind::Xi => "xi",
        ProfileKind::Fpp => "fpp",
        ProfileKind::H => "h",
    }
}

fn family_label(f: &FamilySpec) -> String {
    let name = match f.family {
        FamilyName::Yau => "yau",
        FamilyName::Lp => "lp",
        FamilyName::S3 => "s3",
        FamilyName::Poly => "poly",
    };
    let mut label = format!("family={name}");
    for (k, v) in &f.params {
        label += &format!(" {k}={v}");
    }
    label
}

fn real(x: f64) -> Value {
    serde_json::to_value(JsonReal(x)).expect("scalar")
}

fn fit_json(fit: &GrowthFit<f64>) -> Value {
    json!({
        "slope": real(fit.slope),
        "intercept": real(fit.intercept),
        "residual": real(fit.residual),
        "spread": real(fit.spread),
        "window": [real(fit.window.0), real(fit.window.1)],
        "verdict": fit.verdict,
    })
}

/// Write to `out` via a temporary file in the same directory, or to stdout.
fn emit(
    out: Option<&Path>,
    body: impl FnOnce(&mut dyn Write) -> anyhow::Result<()>,
) -> anyhow::Result<()> {
    match out {
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            body(&mut lock)?;
            lock.flush()?;
        }
        Some(path) => {
            let dir = path
                .parent()
                .filter(|d| !d.as_os_str().is_empty())
                .unwrap_or(Path::new("."));
            let mut tmp = tempfile::NamedTempFile::new_in(dir)
                .with_context(|| format!("creating a file in {}", dir.display()))?;
            body(tmp.as_file_mut())?;
            tmp.as_file_mut().flush()?;
            tmp.persist(path)
                .with_context(|| format!("writing {}", path.display()))?;
        }
    }
    Ok(())
}

fn emit_json(out: Option<&Path>, v: &Value) -> anyhow::Result<()> {
    emit(out, |w| {
        serde_json::to_writer_pretty(&mut *w, v)?;
        writeln!(w)?;
        Ok(())
    })
}

fn cmd_validate(c: &Common) -> anyhow::Result<ExitCode> {
    let src = c.source()?;
    let profile = match &src {
        Source::Profile(p, _) => p.clone(),
        Source::Family(f, _) => f.profile()?,
    };
    let report = validate(&profile);
    emit_json(
        c.out.as_deref(),
        &json!({"ok": report.ok, "violations": report.violations, "grid_points": report.grid_used.len()}),
    )?;
    Ok(if report.ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn cmd_classify(c: &Common) -> anyhow::Result<ExitCode> {
    let src = c.source()?;
    let m = c.build(&src, None)?;
    let snap = ClassificationSnapshot::from(m.classification());
    if c.format == Some(Format::Csv) {
        emit(c.out.as_deref(), |w| {
            let row = serde_json::to_value(&snap)?;
            let keys = [
                "class",
                "xi_infinity",
                "x0",
                "r0",
                "volume_growth",
                "ambiguous",
            ];
            writeln!(w, "{}", keys.join(","))?;
            let vals: Vec<String> = keys
                .iter()
                .map(|k| match &row[k] {
                    Value::String(s) => s.clone(),
                    other => other.to_string(),
                })
                .collect();
            writeln!(w, "{}", vals.join(","))?;
            Ok(())
        })?;
    } else {
        emit_json(c.out.as_deref(), &serde_json::to_value(&snap)?)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_curvature(c: &Common) -> anyhow::Result<ExitCode> {
    let src = c.source()?;
    let m = c.build(&src, None)?;
    let rows = curvature_table(&m);
    if c.format == Some(Format::Json) {
        let v: Vec<Value> = rows
            .iter()
            .map(|s| {
                json!({
                    "r": real(s.r), "x": real(s.x), "A": real(s.a), "B": real(s.b), "C": real(s.c),
                    "lambda": real(s.lambda), "mu": real(s.mu), "R": real(s.scalar),
                })
            })
            .collect();
        emit_json(c.out.as_deref(), &Value::Array(v))?;
    } else {
        emit(c.out.as_deref(), |w| Ok(write_curvature_csv(&rows, w)?))?;
    }
    Ok(ExitCode::SUCCESS)
}

fn compute_series(a: &SeriesArgs) -> anyhow::Result<(Source, Series, GrowthFit<f64>)> {
    let c = &a.common;
    if matches!(a.mode, Mode::Sigma | Mode::Chern) && !(1..=c.n).contains(&a.k) {
        bail!(Error::InvalidArgument(format!(
            "k = {} must lie in 1..={} for this mode",
            a.k, c.n
        )));
    }
    if a.points < 16 {
        bail!(Error::InvalidArgument(
            "--points must be at least 16".into()
        ));
    }
    let src = c.source()?;
    let m = c.build(&src, Some(a.k))?;
    let window = match a.mode {
        Mode::Sigma | Mode::Lp => step_s_window(&m)?,
        Mode::Chern | Mode::Scalar => None,
    };
    let grid = match window {
        Some((lo, hi)) => log_spaced(lo, hi, a.points),
        None => default_s_grid(&m, a.points)?,
    };
    let series = match a.mode {
        Mode::Sigma => normalized_sigma_series(&m, a.k, &grid)?,
        Mode::Chern => normalized_chern_series(&m, a.k, &grid)?,
        Mode::Scalar => normalized_scalar_series(&m, &grid)?,
        Mode::Lp => {
            let p = match &src {
                Source::Family(f, _) if f.family == FamilyName::Lp => f.lp_exponent()?,
                _ => c
                    .params
                    .p
                    .as_deref()
                    .map_or(Ok(2.0), str::parse)
                    .context("--p")?,
            };
            lp_series(&m, p, &grid)?
        }
    };
    let fit = growth_fit(&series, 0.5)?;
    Ok((src, series, fit))
}

fn label(src: &Source) -> &str {
    match src {
        Source::Profile(_, l) | Source::Family(_, l) => l,
    }
}

fn cmd_series(a: &SeriesArgs) -> anyhow::Result<ExitCode> {
    let (src, series, fit) = compute_series(a)?;
    let out = a.common.out.as_deref();
    if a.common.format == Some(Format::Json) {
        let rows: Vec<Value> = series
            .rows
            .iter()
            .map(|r| json!({"s": real(r.s), "vol": real(r.vol), "integral": real(r.integral), "normalized": real(r.normalized)}))
            .collect();
        emit_json(
            out,
            &json!({
                "metric": label(&src),
                "density": series.density_name,
                "k": a.k,
                "mode": a.mode,
                "rows": rows,
                "fit": fit_json(&fit),
            }),
        )?;
    } else {
        emit(out, |w| Ok(write_series_csv(&series, w)?))?;
        eprintln!("{}", serde_json::to_string(&fit_json(&fit))?);
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_report(a: &SeriesArgs) -> anyhow::Result<ExitCode> {
    let (src, _, fit) = compute_series(a)?;
    emit_json(
        a.common.out.as_deref(),
        &json!({
            "metric": label(&src),
            "k": a.k,
            "mode": a.mode,
            "fit": {"slope": real(fit.slope), "residual": real(fit.residual), "verdict": fit.verdict},
        }),
    )?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_chern(c: &Common) -> anyhow::Result<ExitCode> {
    let src = c.source()?;
    let m = c.build(&src, None)?;
    let cn = chern_number(&m)?;
    emit_json(
        c.out.as_deref(),
        &json!({
            "metric": label(&src),
            "n": c.n,
            "xi_infinity": real(m.classification().xi_infinity),
            "value": real(cn.value),
            "expected": real(cn.expected),
            "bound": real(cn.bound),
            "tail": real(cn.tail),
            "tail_share": real(cn.tail_share),
        }),
    )?;
    Ok(ExitCode::SUCCESS)
}

/// 1: invalid or incomplete profile and other runtime failures,
/// 2: unparsable input or arguments, 3: quadrature failure.
fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::Syntax { .. } | Error::UnknownIdentifier { .. } | Error::Arity { .. }) => 2,
        Some(Error::InvalidArgument(_) | Error::OutOfRange { .. }) => 2,
        Some(Error::Quadrature { .. }) => 3,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Validate(c) => cmd_validate(c),
        Command::Classify(c) => cmd_classify(c),
        Command::CurvatureTable(c) => cmd_curvature(c),
        Command::Series(a) => cmd_series(a),
        Command::Chern(c) => cmd_chern(c),
        Command::Report(a) => cmd_report(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
