//! Continuation in the lift parameter: solve along a decreasing schedule,
//! monitor convergence, project to the plane and extrapolate to `ε = 0`.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curve::{lift, ClosedCurve};
use crate::diskmesh::{map_area, DiskMap, DiskMesh, HarmonicSolver};
use crate::error::{Error, Result};
use crate::plateau::{pins_for, select_pins, BoundaryParam, DouglasResult, Minimizer, Pin, SolverSettings};

/// How the per-ε solves are initialised.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepMode {
    /// Each solve starts from the previous ε's parametrization.
    Warm,
    /// Each solve starts from the pin interpolant; solves run in parallel.
    Cold,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSettings {
    pub solver: SolverSettings,
    /// Limit tolerance as a multiple of the curve diameter.
    pub limit_tol_factor: f64,
    pub planarity_slack: f64,
    pub mode: SweepMode,
}

impl Default for SweepSettings {
    fn default() -> Self {
        Self { solver: SolverSettings::default(), limit_tol_factor: 1e-3, planarity_slack: 0.5, mode: SweepMode::Warm }
    }
}

/// Geometric schedule `eps0 · factor^k`, `k = 0 .. count−1`.
pub fn epsilon_schedule(eps0: f64, factor: f64, count: usize) -> Result<Vec<f64>> {
    if !(eps0 > 0.0 && eps0 <= 1.0) {
        return Err(Error::Config(format!("eps0 must lie in (0, 1], got {eps0}")));
    }
    if !(factor > 0.0 && factor < 1.0) {
        return Err(Error::Config(format!("factor must lie in (0, 1), got {factor}")));
    }
    if count < 2 {
        return Err(Error::Config(format!("count must be at least 2, got {count}")));
    }
    Ok((0..count).map(|k| eps0 * factor.powi(k as i32)).collect())
}

/// Per-ε monitor values. Distances compare with the previous entry and are
/// absent for the first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonitorRow {
    pub epsilon: f64,
    pub energy: f64,
    pub area: f64,
    pub conformality: f64,
    pub cone_energy: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Vertexwise max distance between consecutive 4-space maps.
    pub map_sup_distance: Option<f64>,
    /// Same, after projecting both maps to the plane.
    pub planar_sup_distance: Option<f64>,
    /// Max distance between consecutive boundary traces.
    pub trace_sup_distance: Option<f64>,
    /// Max pointwise change of the boundary parametrization.
    pub phi_change: Option<f64>,
    /// Max `|(u₃, u₄)|` over the vertices.
    pub planarity_defect: f64,
}

#[derive(Debug, Clone)]
pub struct ContinuationRecord {
    pub epsilons: Vec<f64>,
    pub rows: Vec<MonitorRow>,
    pub results: Vec<DouglasResult>,
    pub pins: [Pin; 3],
    pub mode: SweepMode,
    pub settings: SweepSettings,
    /// `π(m₁² + m₂²)` with `m₁ = sup|γ| + 1`, `m₂ = √(Lip(γ)² + 2)`.
    pub energy_bound: f64,
}

/// Uniform energy bound from the radial competitor.
pub fn energy_bound(curve: &ClosedCurve) -> f64 {
    let m1 = curve.sup_norm() + 1.0;
    let lip = curve.lipschitz();
    let m2 = (lip * lip + 2.0).sqrt();
    std::f64::consts::PI * (m1 * m1 + m2 * m2)
}

fn sup_distance(a: &[f64], b: &[f64], dim: usize, coords: usize) -> f64 {
    a.chunks(dim)
        .zip(b.chunks(dim))
        .map(|(x, y)| x[..coords].iter().zip(&y[..coords]).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt())
        .fold(0.0, f64::max)
}

pub fn planarity_defect(map: &DiskMap) -> f64 {
    map.values().chunks(map.dim()).map(|v| v[2..].iter().map(|c| c * c).sum::<f64>().sqrt()).fold(0.0, f64::max)
}

fn monitor_rows(results: &[DouglasResult]) -> Vec<MonitorRow> {
    results
        .iter()
        .enumerate()
        .map(|(j, r)| {
            let prev = j.checked_sub(1).map(|p| &results[p]);
            let boundary = |res: &DouglasResult| -> Vec<f64> {
                res.map.boundary_values().into_iter().flatten().copied().collect()
            };
            MonitorRow {
                epsilon: r.epsilon,
                energy: r.energy,
                area: r.area,
                conformality: r.conformality,
                cone_energy: r.cone_energy,
                iterations: r.iterations,
                converged: r.converged,
                map_sup_distance: prev.map(|p| sup_distance(r.map.values(), p.map.values(), 4, 4)),
                planar_sup_distance: prev.map(|p| sup_distance(r.map.values(), p.map.values(), 4, 2)),
                trace_sup_distance: prev.map(|p| sup_distance(&boundary(r), &boundary(p), 4, 4)),
                phi_change: prev.map(|p| r.param.sup_distance(&p.param)),
                planarity_defect: planarity_defect(&r.map),
            }
        })
        .collect()
}

/// Solve along the schedule with shared pins.
pub fn run_sweep(
    curve: &ClosedCurve,
    mesh: &Arc<DiskMesh>,
    schedule: &[f64],
    cfg: &SweepSettings,
) -> Result<ContinuationRecord> {
    if schedule.is_empty() {
        return Err(Error::Config("empty epsilon schedule".into()));
    }
    for (k, &e) in schedule.iter().enumerate() {
        if !(e > 0.0 && e <= 1.0) {
            return Err(Error::Config(format!("schedule entry {e} outside (0, 1]")));
        }
        if k > 0 && !(e < schedule[k - 1]) {
            return Err(Error::Config("schedule must be strictly decreasing".into()));
        }
    }
    cfg.solver.validate()?;
    let solver = HarmonicSolver::new(mesh.clone())?;
    let pins = pins_for(&select_pins(curve)?, mesh.boundary_count());

    let solve_one = |eps: f64, warm: Option<&BoundaryParam>| -> Result<DouglasResult> {
        let lifted = lift(curve, eps)?;
        let mut m = Minimizer::new(&solver, &lifted, &cfg.solver).pins(pins);
        if let Some(w) = warm {
            m = m.warm_start(w);
        }
        m.run().map_err(|e| Error::SweepAborted { epsilon: eps, source: Box::new(e) })
    };

    let results = match cfg.mode {
        SweepMode::Warm => {
            let mut out: Vec<DouglasResult> = Vec::with_capacity(schedule.len());
            for &eps in schedule {
                let r = solve_one(eps, out.last().map(|r| &r.param))?;
                out.push(r);
            }
            out
        }
        SweepMode::Cold => schedule.par_iter().map(|&eps| solve_one(eps, None)).collect::<Result<Vec<_>>>()?,
    };

    Ok(ContinuationRecord {
        epsilons: schedule.to_vec(),
        rows: monitor_rows(&results),
        results,
        pins,
        mode: cfg.mode,
        settings: cfg.clone(),
        energy_bound: energy_bound(curve),
    })
}

/// Drop the two lift coordinates.
pub fn project(map: &DiskMap) -> Result<DiskMap> {
    if map.dim() != 4 {
        return Err(Error::Domain(format!("projection expects a 4-space map, got dimension {}", map.dim())));
    }
    let values = map.values().chunks(4).flat_map(|v| [v[0], v[1]]).collect();
    DiskMap::new(map.mesh().clone(), 2, values)
}

/// Extrapolation summary under the model `area(ε) = area0 + c·ε²`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Extrapolation {
    pub model: String,
    pub area0: f64,
    /// Two-point estimates from the last three entries, older first.
    pub estimates: Vec<f64>,
    /// The last two estimates disagree by more than 3× the predicted
    /// remaining decrement.
    pub flagged: bool,
}

/// Value at `x = 0` of the polynomial through `(x_i, y_i)`.
pub fn neville_at_zero(x: &[f64], y: &[f64]) -> f64 {
    let mut p = y.to_vec();
    let n = x.len();
    for level in 1..n {
        for i in 0..n - level {
            let (xi, xj) = (x[i], x[i + level]);
            p[i] = (xj * p[i] - xi * p[i + 1]) / (xj - xi);
        }
    }
    p[0]
}

pub fn extrapolate_area(epsilons: &[f64], areas: &[f64]) -> Extrapolation {
    let n = epsilons.len();
    let x: Vec<f64> = epsilons.iter().map(|e| e * e).collect();
    let model = "area(eps) = area0 + c * eps^2".to_string();
    if n < 3 {
        let area0 = *areas.last().unwrap_or(&0.0);
        return Extrapolation { model, area0, estimates: vec![], flagged: false };
    }
    let (xs, ys) = (&x[n - 3..], &areas[n - 3..]);
    let area0 = neville_at_zero(xs, ys);
    let older = neville_at_zero(&xs[..2], &ys[..2]);
    let newer = neville_at_zero(&xs[1..], &ys[1..]);
    let decrement = (ys[2] - newer).abs();
    Extrapolation { model, area0, estimates: vec![older, newer], flagged: (newer - older).abs() > 3.0 * decrement }
}

#[derive(Debug, Clone)]
pub struct LimitResult {
    pub u0: DiskMap,
    pub phi0: BoundaryParam,
    pub area0: f64,
    pub planarity_defect: f64,
    pub extrapolation: Extrapolation,
    pub final_area: f64,
    /// `map_area` of the projected limit map.
    pub u0_area: f64,
    pub limit_tol: f64,
}

/// Planar limit of a finished sweep.
pub fn extract_limit(record: &ContinuationRecord, curve: &ClosedCurve) -> Result<LimitResult> {
    let n = record.results.len();
    if n < 2 {
        return Err(Error::Precondition(format!("extrapolation needs at least two sweep entries, got {n}")));
    }
    let limit_tol = record.settings.limit_tol_factor * curve.diameter();
    let last = &record.results[n - 1];
    if let Some(r) = record.results.iter().find(|r| !r.converged) {
        return Err(Error::NonConvergence {
            reason: format!(
                "solve at epsilon {} stopped after {} iterations without converging",
                r.epsilon, r.iterations
            ),
            monitors: record.rows.clone(),
        });
    }
    let dist = record.rows[n - 1].planar_sup_distance.unwrap_or(f64::INFINITY);
    if !(dist <= limit_tol) {
        return Err(Error::NonConvergence {
            reason: format!("final planar sup-distance {dist:e} exceeds limit tolerance {limit_tol:e}"),
            monitors: record.rows.clone(),
        });
    }
    let areas: Vec<f64> = record.results.iter().map(|r| r.area).collect();
    let extrapolation = extrapolate_area(&record.epsilons, &areas);
    let u0 = project(&last.map)?;
    Ok(LimitResult {
        u0_area: map_area(&u0),
        u0,
        phi0: last.param.clone(),
        area0: extrapolation.area0.max(0.0),
        planarity_defect: planarity_defect(&last.map),
        extrapolation,
        final_area: last.area,
        limit_tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diskmesh::build_disk_mesh;
    use approx::assert_relative_eq;

    #[test]
    fn schedules() {
        let s = epsilon_schedule(0.2, 0.5, 4).unwrap();
        assert_eq!(s, vec![0.2, 0.1, 0.05, 0.025]);
        let s = epsilon_schedule(0.1, 0.1, 2).unwrap();
        assert_relative_eq!(s[1], 0.01, max_relative = 1e-15);
        assert!(matches!(epsilon_schedule(1.5, 0.5, 3), Err(Error::Config(_))));
        assert!(matches!(epsilon_schedule(0.2, 1.0, 3), Err(Error::Config(_))));
        assert!(matches!(epsilon_schedule(0.2, 0.5, 1), Err(Error::Config(_))));
    }

    #[test]
    fn neville_is_exact_on_quadratics() {
        let x = [0.04, 0.01, 0.0025];
        let y: Vec<f64> = x.iter().map(|v| 3.0 - 2.0 * v + 5.0 * v * v).collect();
        assert_relative_eq!(neville_at_zero(&x, &y), 3.0, max_relative = 1e-12);
    }

    #[test]
    fn circle_family_extrapolates_exactly() {
        let eps = [0.2, 0.1, 0.05, 0.025];
        let areas: Vec<f64> = eps.iter().map(|e| (1.0 + e * e) * std::f64::consts::PI).collect();
        let x = extrapolate_area(&eps, &areas);
        assert_relative_eq!(x.area0, std::f64::consts::PI, max_relative = 1e-12);
        assert!(!x.flagged);
    }

    #[test]
    fn projection_drops_lift() {
        let m = Arc::new(build_disk_mesh(4, 12).unwrap());
        let u = DiskMap::from_fn(m.clone(), 4, |p| vec![p[0], p[1], 0.1 * p[0], 0.1 * p[1]]).unwrap();
        let v = project(&u).unwrap();
        assert_eq!(v.dim(), 2);
        assert!(map_area(&v) <= map_area(&u) + 1e-10);
        let flat = DiskMap::from_fn(m, 4, |p| vec![p[0], p[1], 0.0, 0.0]).unwrap();
        assert_eq!(map_area(&project(&flat).unwrap()), map_area(&flat));
        assert!(matches!(project(&v), Err(Error::Domain(_))));
    }

    #[test]
    fn empty_schedule_rejected() {
        let c = ClosedCurve::new(vec![[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]]).unwrap();
        let m = Arc::new(build_disk_mesh(2, 12).unwrap());
        assert!(matches!(run_sweep(&c, &m, &[], &SweepSettings::default()), Err(Error::Config(_))));
    }
}
