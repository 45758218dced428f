//! Command-line front end: `solve`, `validate`, `frames` and `catalog`.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::continuation::{ContinuationRecord, Extrapolation, LimitResult, MonitorRow, SweepMode};
use crate::curve::{ClosedCurve, CurveFile};
use crate::diskmesh::DiskMap;
use crate::error::{Error, Result};
use crate::homotopy::{frame_svg, sample_frame, write_frames, ArchiveMeta, FrameArchive, Homotopy, SweptArea};
use crate::oracle::{catalog, catalog_table, CatalogEntry, RasterEstimate};
use crate::pipeline::{run_pipeline, Outcome, RunConfig, Verdict};
use crate::plateau::{BoundaryParam, Pin, SolverSettings};
use crate::report::{cell, fmt12, to_json_string, write_json, write_text, Table};

/// Exit status when a verdict check fails.
pub const EXIT_VERDICT: i32 = 1;
/// Exit status for pipeline, input or usage errors.
pub const EXIT_ERROR: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "minhom", version, about = "Minimum-area null homotopies of planar curves")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the full pipeline on one curve file.
    Solve(SolveArgs),
    /// Run every catalog entry through the pipeline.
    Validate(ValidateArgs),
    /// Emit frames of a finished solve at chosen times.
    Frames(FramesArgs),
    /// List the oracle catalog and optionally write its curve files.
    Catalog(CatalogArgs),
}

/// Flag overrides. Precedence: flags, then `--solver`, then `--config`,
/// then defaults.
#[derive(Debug, Default, Args)]
pub struct ConfigArgs {
    /// Run configuration file (JSON).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Solver settings file (JSON).
    #[arg(long)]
    pub solver: Option<PathBuf>,
    #[arg(long)]
    pub rings: Option<usize>,
    #[arg(long)]
    pub boundary: Option<usize>,
    #[arg(long)]
    pub eps0: Option<f64>,
    #[arg(long)]
    pub factor: Option<f64>,
    #[arg(long)]
    pub count: Option<usize>,
    #[arg(long)]
    pub resolution: Option<usize>,
    /// Arc-length resampling size of the input curve.
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub step0: Option<f64>,
    #[arg(long)]
    pub step_min: Option<f64>,
    #[arg(long)]
    pub energy_tol: Option<f64>,
    #[arg(long)]
    pub stall_window: Option<usize>,
    #[arg(long)]
    pub max_outer: Option<usize>,
    #[arg(long)]
    pub cl_slack: Option<f64>,
    #[arg(long)]
    pub max_gap_factor: Option<f64>,
    #[arg(long)]
    pub phi_jump_tol: Option<f64>,
    /// Solve every ε from scratch, in parallel.
    #[arg(long)]
    pub cold: bool,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write one SVG drawing per archived frame.
    #[arg(long)]
    pub svg: bool,
    #[command(flatten)]
    pub cfg: ConfigArgs,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Only run entries whose name contains this text (repeatable).
    #[arg(long)]
    pub filter: Vec<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub cfg: ConfigArgs,
}

#[derive(Debug, Args)]
pub struct FramesArgs {
    /// Output directory of a previous `solve`.
    #[arg(long)]
    pub from: PathBuf,
    /// Comma-separated times in [0, 1].
    #[arg(long, value_delimiter = ',', required = true)]
    pub times: Vec<f64>,
    #[arg(long, default_value_t = 256)]
    pub n: usize,
    /// Destination; defaults to `<from>/frames_at`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CatalogArgs {
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 512)]
    pub resolution: usize,
    #[arg(long, default_value_t = crate::oracle::DEFAULT_SAMPLES)]
    pub samples: usize,
}

impl ConfigArgs {
    /// Resolve defaults, files and flags into one configuration.
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::from_json_str(&read(p)?)?,
            None => RunConfig::default(),
        };
        if let Some(p) = &self.solver {
            cfg.sweep.solver = SolverSettings::from_json_str(&read(p)?)?;
        }
        macro_rules! set {
            ($flag:ident => $($field:tt)+) => {
                if let Some(v) = self.$flag {
                    cfg.$($field)+ = v;
                }
            };
        }
        set!(rings => rings);
        set!(boundary => boundary_count);
        set!(eps0 => eps0);
        set!(factor => factor);
        set!(count => count);
        set!(resolution => resolution);
        set!(samples => samples);
        set!(step0 => sweep.solver.step0);
        set!(step_min => sweep.solver.step_min);
        set!(energy_tol => sweep.solver.energy_tol);
        set!(stall_window => sweep.solver.stall_window);
        set!(max_outer => sweep.solver.max_outer);
        set!(cl_slack => sweep.solver.cl_slack);
        if let Some(g) = self.max_gap_factor {
            cfg.sweep.solver.max_gap_factor = Some(g);
        }
        if let Some(t) = self.phi_jump_tol {
            cfg.phi_jump_tol = Some(t);
        }
        if self.cold {
            cfg.sweep.mode = SweepMode::Cold;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::Output(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

/// Serialized form of an error.
#[derive(Debug, Serialize)]
pub struct ErrorReport {
    pub kind: String,
    pub message: String,
    pub epsilon: Option<f64>,
    pub monitors: Option<Vec<MonitorRow>>,
}

impl ErrorReport {
    pub fn from_error(e: &Error) -> Self {
        let epsilon = match e {
            Error::SweepAborted { epsilon, .. } => Some(*epsilon),
            _ => None,
        };
        let monitors = match e.root() {
            Error::NonConvergence { monitors, .. } => Some(monitors.clone()),
            _ => None,
        };
        Self { kind: e.root().kind().to_string(), message: e.to_string(), epsilon, monitors }
    }
}

#[derive(Serialize)]
struct SweepReport<'a> {
    config: &'a RunConfig,
    mode: SweepMode,
    pins: [Pin; 3],
    energy_bound: f64,
    rows: &'a [MonitorRow],
    extrapolation: &'a Extrapolation,
}

pub fn sweep_table(rows: &[MonitorRow]) -> Table {
    let mut t = Table::new([
        "epsilon",
        "energy",
        "area",
        "conformality",
        "cone_energy",
        "iterations",
        "converged",
        "map_sup_distance",
        "planar_sup_distance",
        "trace_sup_distance",
        "phi_change",
        "planarity_defect",
    ]);
    for r in rows {
        t.push(vec![
            fmt12(r.epsilon),
            fmt12(r.energy),
            fmt12(r.area),
            fmt12(r.conformality),
            fmt12(r.cone_energy),
            r.iterations.to_string(),
            r.converged.to_string(),
            cell(r.map_sup_distance),
            cell(r.planar_sup_distance),
            cell(r.trace_sup_distance),
            cell(r.phi_change),
            fmt12(r.planarity_defect),
        ]);
    }
    t
}

/// Everything `frames` needs to rebuild the homotopy.
#[derive(Debug, Serialize, Deserialize)]
struct LimitState {
    rings: usize,
    boundary_count: usize,
    curve: CurveFile,
    u0: Vec<f64>,
    phi0: BoundaryParam,
}

#[derive(Serialize)]
struct PhiWitness {
    max_jump: f64,
    from: usize,
    to: usize,
    tol: f64,
}

#[derive(Serialize)]
struct LimitReport<'a> {
    config: &'a RunConfig,
    area0: f64,
    final_area: f64,
    u0_area: f64,
    planarity_defect: f64,
    limit_tol: f64,
    extrapolation: &'a Extrapolation,
    phi_continuity: PhiWitness,
    state: LimitState,
}

#[derive(Serialize)]
struct VerdictReport<'a> {
    config: &'a RunConfig,
    verdict: &'a Verdict,
    area0: f64,
    swept: &'a SweptArea,
    winding: &'a RasterEstimate,
    current: &'a RasterEstimate,
    catalog: Option<&'a CatalogEntry>,
}

fn limit_report<'a>(cfg: &'a RunConfig, limit: &'a LimitResult, homotopy: &Homotopy) -> LimitReport<'a> {
    let nb = limit.u0.mesh().boundary_count();
    let (i, jump) = limit.phi0.max_jump();
    LimitReport {
        config: cfg,
        area0: limit.area0,
        final_area: limit.final_area,
        u0_area: limit.u0_area,
        planarity_defect: limit.planarity_defect,
        limit_tol: limit.limit_tol,
        extrapolation: &limit.extrapolation,
        phi_continuity: PhiWitness {
            max_jump: jump,
            from: i,
            to: (i + 1) % nb,
            tol: cfg.phi_jump_tol.unwrap_or_else(|| crate::homotopy::default_phi_jump_tol(nb)),
        },
        state: LimitState {
            rings: cfg.rings,
            boundary_count: cfg.boundary_count,
            curve: homotopy.curve().to_file(),
            u0: limit.u0.values().to_vec(),
            phi0: limit.phi0.clone(),
        },
    }
}

fn write_solve_artifacts(out: &Path, cfg: &RunConfig, o: &Outcome, svg: bool) -> Result<()> {
    std::fs::create_dir_all(out)?;
    write_sweep(out, cfg, &o.record, &o.limit.extrapolation)?;
    write_json(out.join("limit.json"), &limit_report(cfg, &o.limit, &o.homotopy))?;
    write_text(out.join("u0.txt"), &o.limit.u0.to_text())?;
    let frames = (0..cfg.time_steps)
        .map(|j| sample_frame(&o.homotopy, j as f64 / (cfg.time_steps - 1) as f64, cfg.frame_samples))
        .collect::<Result<Vec<_>>>()?;
    let archive = FrameArchive {
        meta: ArchiveMeta {
            time_steps: cfg.time_steps,
            n: cfg.frame_samples,
            area: o.swept.total,
            u0_area: o.limit.u0_area,
        },
        frames,
    };
    write_frames(&archive, o.homotopy.curve().bounding_box(), out.join("frames"), svg)?;
    write_json(
        out.join("verdict.json"),
        &VerdictReport {
            config: cfg,
            verdict: &o.verdict,
            area0: o.limit.area0,
            swept: &o.swept,
            winding: &o.winding,
            current: &o.current,
            catalog: o.catalog.as_ref(),
        },
    )
}

fn write_sweep(out: &Path, cfg: &RunConfig, record: &ContinuationRecord, x: &Extrapolation) -> Result<()> {
    write_json(
        out.join("sweep.json"),
        &SweepReport {
            config: cfg,
            mode: record.mode,
            pins: record.pins,
            energy_bound: record.energy_bound,
            rows: &record.rows,
            extrapolation: x,
        },
    )?;
    write_text(out.join("sweep.csv"), &sweep_table(&record.rows).to_csv())
}

fn report_error(e: &Error, out: Option<&Path>) {
    eprintln!("error [{}]: {e}", e.root().kind());
    if let Some(dir) = out {
        let written = std::fs::create_dir_all(dir)
            .map_err(Error::from)
            .and_then(|_| write_json(dir.join("error.json"), &ErrorReport::from_error(e)));
        if let Err(w) = written {
            eprintln!("could not write error report: {w}");
        }
    }
}

pub fn cmd_solve(args: &SolveArgs) -> Result<bool> {
    let cfg = args.cfg.resolve()?;
    let curve = ClosedCurve::load(&args.input)?;
    let outcome = run_pipeline(&curve, &cfg)?;
    write_solve_artifacts(&args.out, &cfg, &outcome, args.svg)?;
    println!(
        "area0 = {}  planarity = {}  swept = {}  verdict = {}",
        fmt12(outcome.limit.area0),
        fmt12(outcome.limit.planarity_defect),
        fmt12(outcome.swept.total),
        if outcome.verdict.passed { "pass" } else { "fail" }
    );
    for c in outcome.verdict.checks.iter().filter(|c| !c.passed) {
        println!("  failed {}: {} (threshold {})", c.name, fmt12(c.value), fmt12(c.threshold));
    }
    Ok(outcome.verdict.passed)
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationRow {
    pub name: String,
    pub area0: Option<f64>,
    pub oracle: f64,
    pub oracle_kind: String,
    pub relative_error: Option<f64>,
    pub winding_error: Option<f64>,
    pub passed: bool,
    pub error: Option<String>,
}

pub fn validation_rows(cfg: &RunConfig, filter: &[String]) -> Result<Vec<ValidationRow>> {
    let entries: Vec<CatalogEntry> = catalog()
        .into_iter()
        .filter(|e| filter.is_empty() || filter.iter().any(|f| e.name.contains(f.as_str())))
        .collect();
    if entries.is_empty() {
        return Err(Error::Config("no catalog entries match the filter".into()));
    }
    use rayon::prelude::*;
    entries
        .par_iter()
        .map(|e| {
            let curve = e.shape.curve(cfg.samples)?;
            let (oracle, kind) = match e.exact_area {
                Some(a) => (a, "exact"),
                None => (e.winding_integral, "lower-bound"),
            };
            Ok(match run_pipeline(&curve, cfg) {
                Ok(o) => ValidationRow {
                    name: e.name.clone(),
                    area0: Some(o.limit.area0),
                    oracle,
                    oracle_kind: kind.into(),
                    relative_error: Some((o.limit.area0 - oracle) / oracle),
                    winding_error: Some(o.winding.error),
                    passed: o.verdict.passed,
                    error: None,
                },
                Err(err) => ValidationRow {
                    name: e.name.clone(),
                    area0: None,
                    oracle,
                    oracle_kind: kind.into(),
                    relative_error: None,
                    winding_error: None,
                    passed: false,
                    error: Some(format!("{}: {err}", err.root().kind())),
                },
            })
        })
        .collect()
}

#[derive(Serialize)]
struct ValidationReport<'a> {
    config: &'a RunConfig,
    rows: &'a [ValidationRow],
    passed: bool,
}

pub fn cmd_validate(args: &ValidateArgs) -> Result<bool> {
    let cfg = args.cfg.resolve()?;
    let rows = validation_rows(&cfg, &args.filter)?;
    let mut t = Table::new(["name", "area0", "oracle", "oracle_kind", "relative_error", "winding_error", "passed"]);
    for r in &rows {
        t.push(vec![
            r.name.clone(),
            cell(r.area0),
            fmt12(r.oracle),
            r.oracle_kind.clone(),
            cell(r.relative_error),
            cell(r.winding_error),
            if r.passed { "pass".into() } else { "fail".into() },
        ]);
    }
    print!("{}", t.to_csv());
    for r in rows.iter().filter(|r| r.error.is_some()) {
        eprintln!("{}: {}", r.name, r.error.as_deref().unwrap_or_default());
    }
    let passed = rows.iter().all(|r| r.passed);
    if let Some(out) = &args.out {
        std::fs::create_dir_all(out)?;
        write_text(out.join("validation.csv"), &t.to_csv())?;
        write_json(out.join("validation.json"), &ValidationReport { config: &cfg, rows: &rows, passed })?;
    }
    Ok(passed)
}

fn load_homotopy(dir: &Path) -> Result<Homotopy> {
    let path = dir.join("limit.json");
    if !path.is_file() {
        return Err(Error::Precondition(format!("no limit artifacts at {}", path.display())));
    }
    #[derive(Deserialize)]
    struct Wrapper {
        state: LimitState,
    }
    let w: Wrapper = serde_json::from_str(&read(&path)?).map_err(|e| Error::Parse(format!("limit.json: {e}")))?;
    let s = w.state;
    let mesh = Arc::new(crate::diskmesh::build_disk_mesh(s.rings, s.boundary_count)?);
    let u0 = DiskMap::new(mesh, 2, s.u0)?;
    let phi0 = BoundaryParam::new(s.phi0.lifted().to_vec(), s.phi0.pins())?;
    Homotopy::from_parts(u0, phi0, s.curve.into_curve()?)
}

pub fn cmd_frames(args: &FramesArgs) -> Result<bool> {
    if let Some(t) = args.times.iter().find(|t| !(0.0..=1.0).contains(*t)) {
        return Err(Error::Domain(format!("time {t} outside [0, 1]")));
    }
    let h = load_homotopy(&args.from)?;
    let frames = args.times.iter().map(|&t| sample_frame(&h, t, args.n)).collect::<Result<Vec<_>>>()?;
    let out = args.out.clone().unwrap_or_else(|| args.from.join("frames_at"));
    std::fs::create_dir_all(&out)?;
    #[derive(Serialize)]
    struct Doc<'a> {
        n: usize,
        frames: &'a [crate::homotopy::Frame],
    }
    write_json(out.join("frames.json"), &Doc { n: args.n, frames: &frames })?;
    let bbox = h.curve().bounding_box();
    for (j, f) in frames.iter().enumerate() {
        write_text(out.join(format!("frame_{j:03}.svg")), &frame_svg(f, bbox))?;
    }
    println!("wrote {} frames to {}", frames.len(), out.display());
    Ok(true)
}

pub fn cmd_catalog(args: &CatalogArgs) -> Result<bool> {
    let table = catalog_table(args.resolution, args.samples)?;
    print!("{}", table.to_csv());
    if let Some(out) = &args.out {
        std::fs::create_dir_all(out)?;
        write_text(out.join("catalog.csv"), &table.to_csv())?;
        for e in catalog() {
            let c = e.shape.curve(args.samples)?;
            write_text(out.join(format!("{}.json", e.name)), &to_json_string(&c.to_file())?)?;
        }
    }
    Ok(true)
}

/// Parse `args` and run; returns the process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_ERROR } else { 0 };
        }
    };
    let (result, out) = match &cli.command {
        Command::Solve(a) => (cmd_solve(a), Some(a.out.as_path())),
        Command::Validate(a) => (cmd_validate(a), a.out.as_deref()),
        Command::Frames(a) => (cmd_frames(a), None),
        Command::Catalog(a) => (cmd_catalog(a), a.out.as_deref()),
    };
    match result {
        Ok(true) => 0,
        Ok(false) => EXIT_VERDICT,
        Err(e) => {
            report_error(&e, out);
            EXIT_ERROR
        }
    }
}
