//! Discrete Douglas minimization for a lifted Jordan curve.
//!
//! Harmonic extension at a fixed boundary parametrization alternates with
//! projected gradient descent on the parametrization itself.

mod param;

use std::f64::consts::TAU;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::curve::{dist2, ClosedCurve, LiftedCurve, Point2};
use crate::diskmesh::{conformality_residual, dirichlet_energy, map_area, DiskMap, DiskMesh, HarmonicSolver};
use crate::error::{Error, Result};

pub use param::{pava, pin_indices, project_monotone, BoundaryParam, Pin};

/// Solver settings. Every field is optional in the settings file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSettings {
    /// Trial step of the first descent iteration. Later iterations start
    /// from a Barzilai–Borwein estimate and halve on failure.
    pub step0: f64,
    /// Smallest trial step before the iteration is declared stationary.
    pub step_min: f64,
    /// Stop once `stall_window` consecutive outer iterations each lower the
    /// energy by less than this fraction of the cone energy.
    pub energy_tol: f64,
    pub stall_window: usize,
    pub max_outer: usize,
    /// Allowed ratio of measured boundary oscillation to the
    /// Courant–Lebesgue bound.
    pub cl_slack: f64,
    /// Largest increment of `φ` between adjacent boundary vertices, in units
    /// of the domain spacing `2π/B`. Keeps boundary chords from skipping
    /// over whole stretches of the curve. `None` disables the cap.
    pub max_gap_factor: Option<f64>,
    /// Run at `ε = 0` instead of rejecting it. The result is flagged.
    pub allow_flat: bool,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            step0: 1.0,
            step_min: 1e-12,
            energy_tol: 1e-8,
            stall_window: 20,
            max_outer: 500,
            cl_slack: 3.0,
            max_gap_factor: Some(1.5),
            allow_flat: false,
        }
    }
}

impl SolverSettings {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Config(format!("solver setting {what}")));
        if !(self.step0 > 0.0 && self.step0.is_finite()) {
            return bad("step0 must be positive");
        }
        if !(self.step_min > 0.0 && self.step_min <= self.step0) {
            return bad("step_min must be positive and at most step0");
        }
        if !(self.energy_tol > 0.0 && self.energy_tol.is_finite()) {
            return bad("energy_tol must be positive");
        }
        if self.stall_window == 0 {
            return bad("stall_window must be at least 1");
        }
        if self.max_outer == 0 {
            return bad("max_outer must be at least 1");
        }
        if !(self.cl_slack >= 1.0) {
            return bad("cl_slack must be at least 1");
        }
        if let Some(g) = self.max_gap_factor {
            if !(g >= 1.0 && g.is_finite()) {
                return bad("max_gap_factor must be at least 1");
            }
        }
        Ok(())
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(s).map_err(|e| Error::Config(format!("solver settings: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Outcome of one Douglas minimization.
#[derive(Debug, Clone)]
pub struct DouglasResult {
    pub map: DiskMap,
    pub param: BoundaryParam,
    pub energy: f64,
    pub area: f64,
    pub conformality: f64,
    pub cone_energy: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Energy after every accepted iterate, starting with the initial one.
    pub energy_history: Vec<f64>,
    pub epsilon: f64,
    /// Set when the solve ran on the flattened curve.
    pub flat: bool,
}

/// One accepted iterate, as passed to an observer.
#[derive(Debug)]
pub struct Iterate<'a> {
    pub iteration: usize,
    pub param: &'a BoundaryParam,
    pub energy: f64,
}

/// Boundary values `γ_ε ∘ φ` at the boundary vertices, vertex-major.
pub fn boundary_values(lifted: &LiftedCurve, param: &BoundaryParam) -> Vec<f64> {
    param.lifted().iter().flat_map(|&t| lifted.eval(t)).collect()
}

/// Radial extension `ρ·γ_ε(α)`.
pub fn cone_competitor(lifted: &LiftedCurve, mesh: &Arc<DiskMesh>) -> Result<DiskMap> {
    let on_boundary = mesh.is_boundary_vertex();
    let mut values = Vec::with_capacity(mesh.vertex_count() * 4);
    let mut b = 0;
    for (v, p) in mesh.vertices().iter().enumerate() {
        if on_boundary[v] {
            // exact sampled angles on the rim
            let k = mesh.boundary().iter().position(|&w| w == v).unwrap_or(b);
            values.extend(lifted.eval(mesh.boundary_angles()[k]));
            b += 1;
            continue;
        }
        let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
        if r == 0.0 {
            values.extend([0.0; 4]);
        } else {
            values.extend(lifted.eval(p[1].atan2(p[0])).map(|c| r * c));
        }
    }
    DiskMap::new(mesh.clone(), 4, values)
}

/// `√(8π E / log(1/δ))`.
pub fn courant_lebesgue_modulus(energy: f64, delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Domain(format!("delta must lie in (0, 1), got {delta}")));
    }
    if !(energy >= 0.0) {
        return Err(Error::Domain("energy must be nonnegative".into()));
    }
    Ok((8.0 * std::f64::consts::PI * energy / (1.0 / delta).ln()).sqrt())
}

/// One row of the Courant–Lebesgue diagnostic.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OscillationRow {
    pub delta: f64,
    pub oscillation: f64,
    pub bound: f64,
}

/// Measured boundary-trace oscillation against the Courant–Lebesgue bound
/// for `δ = 2⁻³ … 2⁻⁸`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OscillationReport {
    pub rows: Vec<OscillationRow>,
    pub slack: f64,
    pub passed: bool,
}

/// Largest diameter of the boundary trace over any arc of angular length
/// `delta`. The trace is linear between vertices, so windows anchored at a
/// vertex on either end cover the maximum.
pub fn boundary_oscillation(map: &DiskMap, delta: f64) -> f64 {
    let mesh = map.mesh();
    let angles = mesh.boundary_angles();
    let nb = angles.len();
    let mut worst: f64 = 0.0;
    for i in 0..nb {
        for dir in [1.0, -1.0] {
            let start = angles[i];
            let end = start + dir * delta;
            let mut pts = vec![map.boundary_trace(start), map.boundary_trace(end)];
            for j in 1..nb {
                let k = if dir > 0.0 { (i + j) % nb } else { (i + nb - j) % nb };
                let mut d = (angles[k] - start) * dir;
                if d < 0.0 {
                    d += TAU;
                }
                if d >= delta {
                    break;
                }
                pts.push(map.value(mesh.boundary()[k]).to_vec());
            }
            for a in 0..pts.len() {
                for b in a + 1..pts.len() {
                    let d: f64 = pts[a].iter().zip(&pts[b]).map(|(x, y)| (x - y).powi(2)).sum();
                    worst = worst.max(d.sqrt());
                }
            }
        }
    }
    worst
}

pub fn courant_lebesgue_check(result: &DouglasResult, slack: f64) -> Result<OscillationReport> {
    let mut rows = Vec::new();
    let mut passed = true;
    for k in 3..=8 {
        let delta = 0.5f64.powi(k);
        let bound = courant_lebesgue_modulus(result.energy, delta)?;
        let oscillation = boundary_oscillation(&result.map, delta);
        passed &= oscillation <= slack * bound;
        rows.push(OscillationRow { delta, oscillation, bound });
    }
    Ok(OscillationReport { rows, slack, passed })
}

/// Three pinned curve parameters with their images.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PinChoice {
    pub param: f64,
    pub point: Point2,
}

/// Greedy spread: `t = 0`, then the parameters nearest `2π/3` and `4π/3`
/// whose images are distinct from those already chosen and which keep every
/// pair at least `2π/6` apart.
pub fn select_pins(curve: &ClosedCurve) -> Result<[PinChoice; 3]> {
    let diam = curve.diameter();
    if !(diam > 1e-9) {
        return Err(Error::DegenerateCurve(format!(
            "curve diameter {diam:e} is too small to host three distinct pins"
        )));
    }
    let min_sep = 1e-6 * diam;
    let mut chosen = vec![PinChoice { param: 0.0, point: curve.eval(0.0) }];
    for target in [TAU / 3.0, 2.0 * TAU / 3.0] {
        let mut candidates = vec![target];
        let mut samples: Vec<f64> = curve.params().to_vec();
        samples.sort_by(|a, b| (a - target).abs().total_cmp(&(b - target).abs()));
        candidates.extend(samples);
        let pick = candidates.into_iter().find(|&t| {
            let p = curve.eval(t);
            chosen.iter().all(|c| {
                crate::curve::circular_distance(c.param, t) >= TAU / 6.0 - 1e-12 && dist2(c.point, p) >= min_sep
            }) && t > chosen.last().unwrap().param
        });
        match pick {
            Some(t) => chosen.push(PinChoice { param: t, point: curve.eval(t) }),
            None => {
                return Err(Error::DegenerateCurve("no three well-separated parameters with distinct images".into()))
            }
        }
    }
    Ok([chosen[0], chosen[1], chosen[2]])
}

/// Pins at the boundary indices of `θ = 0, 2π/3, 4π/3`.
pub fn pins_for(choice: &[PinChoice; 3], boundary_count: usize) -> [Pin; 3] {
    let idx = pin_indices(boundary_count);
    [0, 1, 2].map(|k| Pin { index: idx[k], param: choice[k].param })
}

/// Energy gradient with respect to the boundary parameters:
/// `Σ_c (K u)_{b_i,c} · γ_ε'(φ_i)_c`, zero at the pins.
fn parameter_gradient(residual: &[f64], lifted: &LiftedCurve, param: &BoundaryParam) -> Vec<f64> {
    let mut g: Vec<f64> = param
        .lifted()
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let d = lifted.derivative(t);
            (0..4).map(|c| residual[4 * i + c] * d[c]).sum()
        })
        .collect();
    for pin in param.pins() {
        g[pin.index] = 0.0;
    }
    g
}

/// One projected gradient step of length `step` from `current`, projected
/// by isotonic regression between the pins.
pub fn descent_step(current: &DouglasResult, lifted: &LiftedCurve, step: f64) -> Result<BoundaryParam> {
    descent_step_capped(current, lifted, step, None)
}

/// [`descent_step`] with an optional cap on adjacent increments.
pub fn descent_step_capped(
    current: &DouglasResult,
    lifted: &LiftedCurve,
    step: f64,
    gap_cap: Option<f64>,
) -> Result<BoundaryParam> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::Domain(format!("step must be positive, got {step}")));
    }
    let k = current.map.mesh().stiffness();
    let values = current.map.values();
    let mut residual = Vec::with_capacity(current.param.len() * 4);
    for &b in current.map.mesh().boundary() {
        let row = k.row(b);
        for c in 0..4 {
            residual.push(row.col_indices().iter().zip(row.values()).map(|(&j, &w)| w * values[j * 4 + c]).sum());
        }
    }
    let g = parameter_gradient(&residual, lifted, &current.param);
    let delta: Vec<f64> = g.iter().map(|v| -step * v).collect();
    current.param.moved(&delta, gap_cap)
}

/// Upper clamp on Barzilai–Borwein trial steps, in units of `step0`.
const BB_STEP_MAX: f64 = 1e6;

/// Barzilai–Borwein step `sᵀs / sᵀy` from two consecutive iterates and
/// their gradients, when the curvature estimate is positive.
fn bb_step(prev: &BoundaryParam, cur: &BoundaryParam, prev_grad: &[f64], grad: &[f64]) -> Option<f64> {
    let (mut ss, mut sy) = (0.0, 0.0);
    for (i, (a, b)) in prev.lifted().iter().zip(cur.lifted()).enumerate() {
        let s = b - a;
        ss += s * s;
        sy += s * (grad[i] - prev_grad[i]);
    }
    (sy > 0.0 && ss > 0.0).then(|| ss / sy)
}

struct Evaluated {
    param: BoundaryParam,
    values: Vec<f64>,
    energy: f64,
}

/// Douglas minimization with explicit control over the solver, pins, warm
/// start and an observer of every accepted iterate.
pub struct Minimizer<'a> {
    solver: &'a HarmonicSolver,
    lifted: &'a LiftedCurve,
    settings: &'a SolverSettings,
    pins: Option<[Pin; 3]>,
    warm: Option<&'a BoundaryParam>,
    observer: Option<&'a mut dyn FnMut(&Iterate<'_>)>,
}

impl<'a> Minimizer<'a> {
    pub fn new(solver: &'a HarmonicSolver, lifted: &'a LiftedCurve, settings: &'a SolverSettings) -> Self {
        Self { solver, lifted, settings, pins: None, warm: None, observer: None }
    }

    pub fn pins(mut self, pins: [Pin; 3]) -> Self {
        self.pins = Some(pins);
        self
    }

    pub fn warm_start(mut self, param: &'a BoundaryParam) -> Self {
        self.warm = Some(param);
        self
    }

    pub fn observer(mut self, f: &'a mut dyn FnMut(&Iterate<'_>)) -> Self {
        self.observer = Some(f);
        self
    }

    fn evaluate(&self, param: BoundaryParam) -> Result<Evaluated> {
        let g = boundary_values(self.lifted, &param);
        let values = self.solver.extend_values(&g, 4)?;
        let energy = self.solver.quadratic_energy(&values, 4);
        Ok(Evaluated { param, values, energy })
    }

    pub fn run(mut self) -> Result<DouglasResult> {
        let cfg = self.settings;
        cfg.validate()?;
        let eps = self.lifted.epsilon();
        if eps == 0.0 && !cfg.allow_flat {
            return Err(Error::Precondition(
                "epsilon = 0 gives a possibly non-Jordan curve; enable allow_flat to run anyway".into(),
            ));
        }
        let mesh = self.solver.mesh().clone();
        let nb = mesh.boundary_count();
        let pins = match self.pins {
            Some(p) => p,
            None => pins_for(&select_pins(self.lifted.base())?, nb),
        };
        let cone_energy = dirichlet_energy(&cone_competitor(self.lifted, &mesh)?);
        let gap_cap = cfg.max_gap_factor.map(|f| f * TAU / nb as f64);

        let mut current = self.evaluate(BoundaryParam::pin_interpolant(nb, pins)?)?;
        if let Some(w) = self.warm {
            if w.pins() != pins || w.len() != nb {
                return Err(Error::Precondition("warm start does not share the pins".into()));
            }
            let warm = self.evaluate(w.clone())?;
            if warm.energy < current.energy {
                current = warm;
            }
        }
        let mut history = vec![current.energy];
        if let Some(f) = self.observer.as_mut() {
            f(&Iterate { iteration: 0, param: &current.param, energy: current.energy });
        }

        let mut converged = false;
        let mut iterations = 0;
        let mut last_step = cfg.step0;
        let mut stalled = 0;
        let mut prev: Option<(BoundaryParam, Vec<f64>)> = None;
        while iterations < cfg.max_outer {
            let residual = self.solver.boundary_residual(&current.values, 4);
            let grad = parameter_gradient(&residual, self.lifted, &current.param);
            let mut step = match &prev {
                Some((p, g)) => bb_step(p, &current.param, g, &grad)
                    .map_or(cfg.step0.min(2.0 * last_step), |s| s.clamp(cfg.step_min, BB_STEP_MAX * cfg.step0)),
                None => cfg.step0,
            };
            let accepted = loop {
                let delta: Vec<f64> = grad.iter().map(|g| -step * g).collect();
                let trial_param = current.param.moved(&delta, gap_cap)?;
                if trial_param == current.param {
                    break None;
                }
                let trial = self.evaluate(trial_param)?;
                if trial.energy < current.energy {
                    break Some(trial);
                }
                step *= 0.5;
                if step < cfg.step_min {
                    if trial.energy > current.energy * (1.0 + 1e-12) {
                        return Err(Error::DescentFailure(format!(
                            "no energy decrease down to step {:e} (energy {} → {})",
                            cfg.step_min, current.energy, trial.energy
                        )));
                    }
                    break None;
                }
            };
            iterations += 1;
            let Some(next) = accepted else {
                converged = true;
                break;
            };
            last_step = step;
            prev = Some((current.param.clone(), grad.clone()));
            let decrease = current.energy - next.energy;
            current = next;
            history.push(current.energy);
            if let Some(f) = self.observer.as_mut() {
                f(&Iterate { iteration: iterations, param: &current.param, energy: current.energy });
            }
            if decrease < cfg.energy_tol * cone_energy {
                stalled += 1;
                if stalled >= cfg.stall_window {
                    converged = true;
                    break;
                }
            } else {
                stalled = 0;
            }
        }

        let map = DiskMap::new(mesh, 4, current.values)?;
        let energy = dirichlet_energy(&map);
        let area = map_area(&map);
        Ok(DouglasResult {
            conformality: conformality_residual(&map),
            map,
            param: current.param,
            energy,
            area,
            cone_energy,
            iterations,
            converged,
            energy_history: history,
            epsilon: eps,
            flat: eps == 0.0,
        })
    }
}

/// Minimize with default pins and a freshly factored solver.
pub fn douglas_minimize(lifted: &LiftedCurve, mesh: &Arc<DiskMesh>, cfg: &SolverSettings) -> Result<DouglasResult> {
    let solver = HarmonicSolver::new(mesh.clone())?;
    Minimizer::new(&solver, lifted, cfg).run()
}
