//! End-to-end run: resample, sweep, extract the limit, build the homotopy
//! and check it against the oracles.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::continuation::{epsilon_schedule, extract_limit, run_sweep, ContinuationRecord, LimitResult, SweepSettings};
use crate::curve::{resample_arclength, ClosedCurve};
use crate::diskmesh::{build_disk_mesh, max_principle_violation, DiskMesh};
use crate::error::{Error, Result};
use crate::homotopy::{build_null_homotopy, homotopy_swept_area, Homotopy, SweptArea};
use crate::oracle::{current_mass, match_catalog, winding_area, CatalogEntry, RasterEstimate};
use crate::plateau::{courant_lebesgue_check, OscillationReport};

/// Every knob of a run. Serialized into each report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub rings: usize,
    pub boundary_count: usize,
    pub eps0: f64,
    pub factor: f64,
    pub count: usize,
    /// Arc-length resampling size for the input curve.
    pub samples: usize,
    pub resolution: usize,
    /// Frame archive grid.
    pub time_steps: usize,
    pub frame_samples: usize,
    /// Space-time grid for the swept-area integral, per half.
    pub swept_time_steps: usize,
    pub swept_samples: usize,
    pub sweep: SweepSettings,
    /// `None` selects four mesh spacings of `4π/B`.
    pub phi_jump_tol: Option<f64>,
    /// Second-half swept area allowed, relative to the total.
    pub annulus_area_tol: f64,
    /// Relative tolerance on `|swept − map_area(u0)|`.
    pub swept_area_tol: f64,
    /// Relative slack in the winding lower bound, on top of the grid error.
    pub lower_bound_slack: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            rings: 24,
            boundary_count: 48,
            eps0: 0.2,
            factor: 0.5,
            count: 4,
            samples: crate::oracle::DEFAULT_SAMPLES,
            resolution: 512,
            time_steps: 33,
            frame_samples: 256,
            swept_time_steps: 257,
            swept_samples: 8192,
            sweep: SweepSettings::default(),
            phi_jump_tol: None,
            annulus_area_tol: 1e-3,
            swept_area_tol: 0.03,
            lower_bound_slack: 0.02,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rings == 0 {
            return Err(Error::Config("rings must be at least 1".into()));
        }
        if self.boundary_count < 12 || !self.boundary_count.is_multiple_of(3) {
            return Err(Error::Config(format!(
                "boundary_count must be >= 12 and divisible by 3, got {}",
                self.boundary_count
            )));
        }
        epsilon_schedule(self.eps0, self.factor, self.count)?;
        if self.samples < 3 {
            return Err(Error::Config("samples must be at least 3".into()));
        }
        if self.resolution < 64 {
            return Err(Error::Config("resolution must be at least 64".into()));
        }
        if self.time_steps < 2 || self.swept_time_steps < 2 {
            return Err(Error::Config("time step counts must be at least 2".into()));
        }
        if self.frame_samples < 3 || self.swept_samples < 3 {
            return Err(Error::Config("frame sample counts must be at least 3".into()));
        }
        self.sweep.solver.validate()
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(s).map_err(|e| Error::Config(format!("run config: {e}")))?;
        Ok(cfg)
    }

    pub fn mesh(&self) -> Result<Arc<DiskMesh>> {
        Ok(Arc::new(build_disk_mesh(self.rings, self.boundary_count)?))
    }

    pub fn schedule(&self) -> Result<Vec<f64>> {
        epsilon_schedule(self.eps0, self.factor, self.count)
    }
}

/// One named pass/fail check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub threshold: f64,
    pub detail: String,
}

impl Check {
    fn new(name: &str, passed: bool, value: f64, threshold: f64, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed, value, threshold, detail: detail.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub passed: bool,
    pub catalog_match: Option<String>,
    pub checks: Vec<Check>,
}

#[derive(Debug)]
pub struct Outcome {
    pub curve: ClosedCurve,
    pub record: ContinuationRecord,
    pub limit: LimitResult,
    pub homotopy: Homotopy,
    pub swept: SweptArea,
    pub winding: RasterEstimate,
    pub current: RasterEstimate,
    pub oscillation: Vec<OscillationReport>,
    pub catalog: Option<CatalogEntry>,
    pub verdict: Verdict,
}

/// Run the full pipeline on `input`.
pub fn run_pipeline(input: &ClosedCurve, cfg: &RunConfig) -> Result<Outcome> {
    cfg.validate()?;
    let catalog = match_catalog(input);
    let curve = resample_arclength(input, cfg.samples)?;
    let mesh = cfg.mesh()?;
    let record = run_sweep(&curve, &mesh, &cfg.schedule()?, &cfg.sweep)?;
    let limit = extract_limit(&record, &curve)?;
    let homotopy = build_null_homotopy(&limit, &curve, cfg.phi_jump_tol)?;
    let swept = homotopy_swept_area(&homotopy, cfg.swept_time_steps, cfg.swept_samples)?;
    let winding = winding_area(input, cfg.resolution)?;
    let current = current_mass(input, cfg.resolution)?;
    let oscillation = record
        .results
        .iter()
        .map(|r| courant_lebesgue_check(r, cfg.sweep.solver.cl_slack))
        .collect::<Result<Vec<_>>>()?;
    let verdict = judge(cfg, &record, &limit, &homotopy, &swept, &winding, &oscillation, catalog.as_ref());
    Ok(Outcome { curve, record, limit, homotopy, swept, winding, current, oscillation, catalog, verdict })
}

#[allow(clippy::too_many_arguments)]
fn judge(
    cfg: &RunConfig,
    record: &ContinuationRecord,
    limit: &LimitResult,
    homotopy: &Homotopy,
    swept: &SweptArea,
    winding: &RasterEstimate,
    oscillation: &[OscillationReport],
    catalog: Option<&CatalogEntry>,
) -> Verdict {
    let mut checks = Vec::new();
    let worst_cone = record.results.iter().map(|r| r.energy - r.cone_energy).fold(f64::NEG_INFINITY, f64::max);
    checks.push(Check::new("cone_competitor", worst_cone <= 1e-9, worst_cone, 1e-9, "max energy - cone energy"));
    let worst_bound = record.results.iter().map(|r| r.energy).fold(0.0, f64::max);
    checks.push(Check::new(
        "energy_bound",
        worst_bound <= record.energy_bound,
        worst_bound,
        record.energy_bound,
        "max energy against pi (m1^2 + m2^2)",
    ));
    let worst_am_gm = record.results.iter().map(|r| r.area - r.energy).fold(f64::NEG_INFINITY, f64::max);
    checks.push(Check::new("energy_dominates_area", worst_am_gm <= 1e-10, worst_am_gm, 1e-10, "max area - energy"));
    let worst_mp = record.results.iter().map(|r| max_principle_violation(&r.map)).fold(0.0, f64::max);
    checks.push(Check::new("maximum_principle", worst_mp <= 1e-10, worst_mp, 1e-10, "max interior overshoot"));
    let cl_ok = oscillation.iter().all(|o| o.passed);
    let cl_ratio = oscillation.iter().flat_map(|o| o.rows.iter().map(|r| r.oscillation / r.bound)).fold(0.0, f64::max);
    checks.push(Check::new(
        "courant_lebesgue",
        cl_ok,
        cl_ratio,
        cfg.sweep.solver.cl_slack,
        "max oscillation / bound over dyadic deltas",
    ));
    let lb = winding.value - (winding.error + cfg.lower_bound_slack * limit.area0);
    checks.push(Check::new(
        "winding_lower_bound",
        limit.area0 >= lb,
        limit.area0,
        lb,
        "area0 against winding area minus tolerance",
    ));
    let rel = (swept.total - limit.u0_area).abs() / limit.u0_area.max(1e-300);
    checks.push(Check::new(
        "swept_area_identity",
        rel <= cfg.swept_area_tol,
        rel,
        cfg.swept_area_tol,
        "relative |swept - map_area(u0)|",
    ));
    let half = swept.second_half / swept.total.max(1e-300);
    checks.push(Check::new(
        "second_half_area",
        half <= cfg.annulus_area_tol,
        half,
        cfg.annulus_area_tol,
        "second-half swept area relative to total",
    ));
    if let Some(e) = catalog {
        if let Some(exact) = e.exact_area {
            let rel = (limit.area0 - exact).abs() / exact;
            checks.push(Check::new(
                "catalog_exact",
                rel <= e.tolerance,
                rel,
                e.tolerance,
                format!("relative error of area0 against {}", e.name),
            ));
        }
    }
    let _ = homotopy;
    Verdict { passed: checks.iter().all(|c| c.passed), catalog_match: catalog.map(|e| e.name.clone()), checks }
}
