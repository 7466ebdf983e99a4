//! `quantdim`: quantization dimension of Markov-type measures from a JSON
//! system definition.

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{ArgGroup, Parser, Subcommand};
use quantdim::antichain::DEFAULT_CAP;
use quantdim::geometry::{max_feasible_separation, write_samples_csv};
use quantdim::measure::f_decay_check;
use quantdim::spectral::SCHEMA_VERSION;
use quantdim::system::SystemLoadError;
use quantdim::{
    classify, diagnostics, dimension_fit, growth_series, sample_measure, Antichain, AntichainError,
    CylinderGeometry, FitOptions, GeometryError, LloydOptions, MarkovSystem, MeasureError, QuantizerError,
    SccDecomposition, SpectralOptions, SpectralReport,
};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(
    name = "quantdim",
    version,
    about = "Quantization dimension of Markov-type measures"
)]
struct Cli {
    /// System definition (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; created if missing.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    /// Tolerance of the root solver for s_r.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Maximal number of words in one antichain.
    #[arg(long, global = true, default_value_t = DEFAULT_CAP)]
    cap: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve for s_r, classify the coefficients and write report.json.
    Analyze {
        /// Also compute the growth series Q_k and the decay on F over A:B.
        #[arg(long)]
        k_range: Option<LevelRange>,
    },
    /// Export Λ_{j,r} with its diagnostics, or per-level diagnostics over A:B.
    #[command(group(ArgGroup::new("level").required(true).multiple(true).args(["j", "k_range"])))]
    Antichain {
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
        j: Option<u32>,
        #[arg(long)]
        k_range: Option<LevelRange>,
    },
    /// Realize the cylinder intervals and export those of Λ_{j,r}.
    Geometry {
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
        j: u32,
        /// Separation constant; defaults to the config value or 0.9 of the maximal feasible one.
        #[arg(long)]
        t: Option<f64>,
    },
    /// Sample the measure down to a cylinder resolution.
    Sample {
        #[arg(long, default_value_t = 10_000)]
        count: usize,
        #[arg(long, default_value_t = 1e-3)]
        resolution: f64,
        #[arg(long)]
        t: Option<f64>,
    },
    /// Empirical quantization errors and the fitted dimension.
    Quantize {
        #[arg(long, default_value = "geometric:2:12")]
        n_schedule: Schedule,
        /// Quantize every n on this fixed level instead of choosing one per n.
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
        j: Option<u32>,
        /// Exponent for the coefficient series; defaults to s_r.
        #[arg(long)]
        s_probe: Option<f64>,
        #[arg(long)]
        t: Option<f64>,
    },
    /// Collect the JSON artifacts in the output directory into summary.json.
    Report,
}

#[derive(Clone, Copy, Debug)]
struct LevelRange(u32, u32);

impl FromStr for LevelRange {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (a, b) = s.split_once(':').ok_or("expected A:B")?;
        let a: u32 = a.parse().map_err(|e| format!("{a}: {e}"))?;
        let b: u32 = b.parse().map_err(|e| format!("{b}: {e}"))?;
        if a == 0 || a > b {
            return Err(format!("need 1 <= A <= B, got {a}:{b}"));
        }
        Ok(LevelRange(a, b))
    }
}

#[derive(Clone, Debug)]
struct Schedule(Vec<usize>);

impl FromStr for Schedule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let rest = s.strip_prefix("geometric:").ok_or("expected geometric:A:B")?;
        let (a, b) = rest.split_once(':').ok_or("expected geometric:A:B")?;
        let a: u32 = a.parse().map_err(|e| format!("{a}: {e}"))?;
        let b: u32 = b.parse().map_err(|e| format!("{b}: {e}"))?;
        if a > b || b > 30 {
            return Err(format!("need A <= B <= 30, got {a}:{b}"));
        }
        Ok(Schedule(quantdim::quantizer::geometric_schedule(a, b)))
    }
}

/// Failure with its exit status.
#[derive(Debug)]
enum Failure {
    Usage(String),
    Validation(String),
    Solver(String),
    Io(String),
    Cap(String),
    Coarse(String),
    InvalidN(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Validation(_) => 2,
            Failure::Solver(_) => 3,
            Failure::Io(_) => 4,
            Failure::Cap(_) => 5,
            Failure::Coarse(_) => 6,
            Failure::InvalidN(_) => 7,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m)
            | Failure::Validation(m)
            | Failure::Solver(m)
            | Failure::Io(m)
            | Failure::Cap(m)
            | Failure::Coarse(m)
            | Failure::InvalidN(m) => m,
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

impl From<SystemLoadError> for Failure {
    fn from(e: SystemLoadError) -> Self {
        match e {
            SystemLoadError::Json(_) => Failure::Io(e.to_string()),
            SystemLoadError::Invalid(_) => Failure::Validation(e.to_string()),
        }
    }
}

impl From<quantdim::spectral::SpectralError> for Failure {
    fn from(e: quantdim::spectral::SpectralError) -> Self {
        Failure::Solver(e.to_string())
    }
}

impl From<AntichainError> for Failure {
    fn from(e: AntichainError) -> Self {
        match e {
            AntichainError::CapExceeded { .. } => Failure::Cap(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

impl From<MeasureError> for Failure {
    fn from(e: MeasureError) -> Self {
        match e {
            MeasureError::Antichain(inner) => inner.into(),
            MeasureError::InsufficientLevels { .. } => Failure::Usage(e.to_string()),
            MeasureError::IncompleteAntichain => Failure::Cap(e.to_string()),
        }
    }
}

impl From<QuantizerError> for Failure {
    fn from(e: QuantizerError) -> Self {
        match e {
            QuantizerError::Antichain(inner) => inner.into(),
            QuantizerError::ResolutionTooCoarse { .. } => Failure::Coarse(e.to_string()),
            QuantizerError::InvalidN { .. } => Failure::InvalidN(e.to_string()),
            QuantizerError::EmptySchedule | QuantizerError::InvalidOrder(_) => Failure::Usage(e.to_string()),
            QuantizerError::IncompleteAntichain | QuantizerError::InvalidWeights(_) => {
                Failure::Solver(e.to_string())
            }
        }
    }
}

impl From<GeometryError> for Failure {
    fn from(e: GeometryError) -> Self {
        match e {
            GeometryError::SeparationInfeasible { .. } => Failure::Validation(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

struct Context {
    out: PathBuf,
    seed: u64,
    cap: usize,
    spectral: SpectralOptions,
}

impl Context {
    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn create(&self, name: &str) -> Result<BufWriter<fs::File>, Failure> {
        fs::create_dir_all(&self.out)?;
        Ok(BufWriter::new(fs::File::create(self.path(name))?))
    }

    fn write_json(&self, name: &str, value: &Value) -> Result<PathBuf, Failure> {
        let mut w = self.create(name)?;
        serde_json::to_writer_pretty(&mut w, value).map_err(|e| Failure::Io(e.to_string()))?;
        writeln!(w)?;
        w.flush()?;
        Ok(self.path(name))
    }

    fn analyze(&self, sys: &MarkovSystem) -> Result<(SccDecomposition, SpectralReport), Failure> {
        let dec = SccDecomposition::new(sys);
        let report = classify(sys, &dec, &self.spectral)?;
        Ok((dec, report))
    }
}

fn load(config: Option<&Path>) -> Result<MarkovSystem, Failure> {
    let path = config.ok_or_else(|| Failure::Usage("--config is required for this command".into()))?;
    let text = fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    Ok(MarkovSystem::from_json(&text)?)
}

fn cmd_analyze(ctx: &Context, sys: &MarkovSystem, k_range: Option<LevelRange>) -> Result<(), Failure> {
    let (dec, report) = ctx.analyze(sys)?;
    let mut doc = report.to_json(&dec);
    if let Some(LevelRange(a, b)) = k_range {
        let growth = growth_series(sys, &report, a..=b, ctx.cap)?;
        let decay = f_decay_check(sys, &report, a as usize..=b as usize);
        doc["growth"] = json!({
            "levels": growth.levels,
            "q": growth.q,
            "slope": growth.slope,
            "quartile_ratio": growth.quartile_ratio,
            "trend": growth.trend,
            "agrees_with_classification": growth.agrees_with(report.classification),
        });
        doc["f_decay"] = json!({
            "f_vertices": decay.f_vertices.iter().map(|v| v + 1).collect::<Vec<_>>(),
            "sums": decay.sums,
            "rate": decay.rate,
            "passed": decay.passed,
        });
    }
    let path = ctx.write_json("report.json", &doc)?;
    let mut dot = ctx.create("condensation.dot")?;
    dot.write_all(dec.to_dot().as_bytes())?;
    dot.flush()?;
    println!(
        "s_r = {:.12}, classification = {:?}; wrote {}",
        report.s_r,
        report.classification,
        path.display()
    );
    Ok(())
}

fn diagnostics_row(sys: &MarkovSystem, chain: &Antichain, j: u32, s_r: f64) -> Result<String, Failure> {
    let d = diagnostics(sys, chain, s_r)?;
    Ok(format!(
        "{j};{};{};{};{};{};{}",
        d.phi, d.min_len, d.max_len, d.proxy, d.normalized_sum, d.normalized_sum
    ))
}

const DIAGNOSTICS_HEADER: &str = "j;phi;l1;l2;proxy;normalized_sum;Q_k";

fn cmd_antichain(
    ctx: &Context,
    sys: &MarkovSystem,
    j: Option<u32>,
    k_range: Option<LevelRange>,
) -> Result<(), Failure> {
    let (_, report) = ctx.analyze(sys)?;
    if let Some(j) = j {
        let chain = Antichain::lambda(sys, j, ctx.cap)?;
        let name = format!("antichain_j{j}.csv");
        let mut w = ctx.create(&name)?;
        chain.write_csv(sys, &mut w)?;
        w.flush()?;
        let mut d = ctx.create(&format!("antichain_j{j}_diagnostics.csv"))?;
        writeln!(d, "{DIAGNOSTICS_HEADER}")?;
        writeln!(d, "{}", diagnostics_row(sys, &chain, j, report.s_r)?)?;
        d.flush()?;
        println!(
            "Λ_{j}: {} words; wrote {}",
            chain.phi(),
            ctx.path(&name).display()
        );
    }
    if let Some(LevelRange(a, b)) = k_range {
        let mut w = ctx.create("levels.csv")?;
        writeln!(w, "{DIAGNOSTICS_HEADER}")?;
        for k in a..=b {
            let chain = Antichain::lambda(sys, k, ctx.cap)?;
            writeln!(w, "{}", diagnostics_row(sys, &chain, k, report.s_r)?)?;
        }
        w.flush()?;
        println!("levels {a}..{b}; wrote {}", ctx.path("levels.csv").display());
    }
    Ok(())
}

fn cmd_geometry(ctx: &Context, sys: &MarkovSystem, j: u32, t: Option<f64>) -> Result<(), Failure> {
    let geom = CylinderGeometry::realize(sys, t)?;
    let chain = Antichain::lambda(sys, j, ctx.cap)?;
    let name = format!("geometry_j{j}.csv");
    let mut w = ctx.create(&name)?;
    geom.write_antichain_csv(&chain, &mut w)?;
    w.flush()?;
    let (_, max_t) = max_feasible_separation(sys);
    let doc = json!({
        "schema_version": SCHEMA_VERSION,
        "separation_t": geom.separation_t(),
        "max_feasible_t": max_t,
        "gaps": (0..sys.n()).map(|i| geom.gap(i)).collect::<Vec<_>>(),
        "roots": (0..sys.n()).map(|i| {
            let iv = geom.root(i);
            [iv.left, iv.right()]
        }).collect::<Vec<_>>(),
        "level_j": j,
        "phi": chain.phi(),
    });
    ctx.write_json("geometry.json", &doc)?;
    println!("t = {}; wrote {}", geom.separation_t(), ctx.path(&name).display());
    Ok(())
}

fn cmd_sample(
    ctx: &Context,
    sys: &MarkovSystem,
    count: usize,
    resolution: f64,
    t: Option<f64>,
) -> Result<(), Failure> {
    let geom = CylinderGeometry::realize(sys, t)?;
    let samples = sample_measure(&geom, sys, count, resolution, ctx.seed)?;
    let mut w = ctx.create("samples.csv")?;
    write_samples_csv(&samples, &mut w)?;
    w.flush()?;
    println!("{count} samples; wrote {}", ctx.path("samples.csv").display());
    Ok(())
}

fn cmd_quantize(
    ctx: &Context,
    sys: &MarkovSystem,
    schedule: &Schedule,
    j: Option<u32>,
    s_probe: Option<f64>,
    t: Option<f64>,
) -> Result<(), Failure> {
    let (_, report) = ctx.analyze(sys)?;
    let geom = CylinderGeometry::realize(sys, t)?;
    let opts = FitOptions {
        level: j,
        cap: ctx.cap,
        lloyd: LloydOptions {
            seed: ctx.seed,
            ..FitOptions::default().lloyd
        },
        ..FitOptions::default()
    };
    let s = s_probe.unwrap_or(report.s_r);
    let fit = dimension_fit(sys, &geom, &schedule.0, s, &opts)?;
    let mut w = ctx.create("quantize.csv")?;
    fit.write_csv(&mut w)?;
    w.flush()?;
    let mut doc = fit.summary_json(report.s_r);
    doc["schema_version"] = json!(SCHEMA_VERSION);
    doc["order_r"] = json!(fit.order_r);
    doc["s_probe"] = json!(fit.s_probe);
    doc["points"] = serde_json::to_value(&fit.points).map_err(|e| Failure::Io(e.to_string()))?;
    let path = ctx.write_json("fit.json", &doc)?;
    println!(
        "slope = {:.4} ± {:.4}, s_r = {:.4}, relative difference {:.3}; wrote {}",
        fit.slope,
        fit.ci,
        report.s_r,
        fit.relative_error(report.s_r),
        path.display()
    );
    Ok(())
}

const ARTIFACTS: [&str; 3] = ["report.json", "geometry.json", "fit.json"];

fn cmd_report(ctx: &Context) -> Result<(), Failure> {
    let mut artifacts = serde_json::Map::new();
    for name in ARTIFACTS {
        let path = ctx.path(name);
        if !path.exists() {
            continue;
        }
        let text = fs::read_to_string(&path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
        let value: Value =
            serde_json::from_str(&text).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
        artifacts.insert(name.trim_end_matches(".json").to_string(), value);
    }
    if artifacts.is_empty() {
        return Err(Failure::Io(format!(
            "no artifacts ({}) in {}",
            ARTIFACTS.join(", "),
            ctx.out.display()
        )));
    }
    let doc = json!({ "schema_version": SCHEMA_VERSION, "artifacts": artifacts });
    let path = ctx.write_json("summary.json", &doc)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    let mut spectral = SpectralOptions::default();
    if let Some(tol) = cli.tol {
        if !(tol > 0.0 && tol < 1.0) {
            return Err(Failure::Usage(format!("--tol must lie in (0, 1), got {tol}")));
        }
        spectral.bisection_tol = tol;
    }
    if cli.cap == 0 {
        return Err(Failure::Usage("--cap must be positive".into()));
    }
    let ctx = Context {
        out: cli.out,
        seed: cli.seed,
        cap: cli.cap,
        spectral,
    };
    let config = cli.config.as_deref();
    match cli.command {
        Command::Analyze { k_range } => cmd_analyze(&ctx, &load(config)?, k_range),
        Command::Antichain { j, k_range } => cmd_antichain(&ctx, &load(config)?, j, k_range),
        Command::Geometry { j, t } => cmd_geometry(&ctx, &load(config)?, j, t),
        Command::Sample { count, resolution, t } => cmd_sample(&ctx, &load(config)?, count, resolution, t),
        Command::Quantize {
            n_schedule,
            j,
            s_probe,
            t,
        } => cmd_quantize(&ctx, &load(config)?, &n_schedule, j, s_probe, t),
        Command::Report => cmd_report(&ctx),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
