//! Acceptance criteria, one PASS/FAIL line each. Runs without the libtest
//! harness so the lines always reach the output.

use std::f64::consts::PI;
use std::sync::Arc;
use std::time::Instant;

use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};

use minhom::continuation::SweepMode;
use minhom::curve::{lift, self_intersections, ClosedCurve};
use minhom::diskmesh::{map_area, DiskMap, HarmonicSolver};
use minhom::homotopy::sample_frame;
use minhom::oracle::{catalog, current_mass, winding_area, CatalogEntry, Shape};
use minhom::pipeline::{run_pipeline, Outcome, RunConfig};
use minhom::plateau::{boundary_values, Iterate, Minimizer};

struct Case {
    entry: CatalogEntry,
    outcome: Outcome,
}

struct Criterion {
    id: usize,
    title: &'static str,
    failures: Vec<String>,
    notes: Vec<String>,
}

impl Criterion {
    fn new(id: usize, title: &'static str) -> Self {
        Self { id, title, failures: Vec::new(), notes: Vec::new() }
    }

    fn check(&mut self, ok: bool, what: impl Into<String>) {
        let what = what.into();
        if ok {
            self.notes.push(what);
        } else {
            self.failures.push(what);
        }
    }

    fn report(&self) -> bool {
        let ok = self.failures.is_empty();
        println!("criterion {} [{}] {}", self.id, if ok { "PASS" } else { "FAIL" }, self.title);
        for n in &self.notes {
            println!("    ok   {n}");
        }
        for f in &self.failures {
            println!("    FAIL {f}");
        }
        ok
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn case<'a>(cases: &'a [Case], name: &str) -> &'a Case {
    cases.iter().find(|c| c.entry.name == name).expect("catalog entry")
}

/// Per-coordinate overshoot of interior values beyond the boundary range.
fn overshoot(map: &DiskMap) -> f64 {
    let mesh = map.mesh();
    let dim = map.dim();
    let vals = map.values();
    let mut on_boundary = vec![false; mesh.vertex_count()];
    for &b in mesh.boundary() {
        on_boundary[b] = true;
    }
    let mut worst: f64 = 0.0;
    for c in 0..dim {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for &b in mesh.boundary() {
            lo = lo.min(vals[b * dim + c]);
            hi = hi.max(vals[b * dim + c]);
        }
        for v in (0..mesh.vertex_count()).filter(|&v| !on_boundary[v]) {
            let x = vals[v * dim + c];
            worst = worst.max(lo - x).max(x - hi);
        }
    }
    worst
}

fn criterion_1(cases: &[Case]) -> Criterion {
    let mut k = Criterion::new(1, "circle exactness");
    let o = &case(cases, "circle").outcome;
    let e = rel(o.limit.area0, PI);
    k.check(e <= 0.01, format!("area0 = {:.6} (rel err {e:.2e} <= 1e-2)", o.limit.area0));
    for r in &o.record.results {
        let exact = (1.0 + r.epsilon * r.epsilon) * PI;
        let e = rel(r.area, exact);
        k.check(e <= 0.02, format!("eps {}: area {:.6} vs (1+eps^2)pi, rel err {e:.2e} <= 2e-2", r.epsilon, r.area));
        let c = r.conformality / r.area;
        k.check(c <= 0.02, format!("eps {}: conformality / area = {c:.2e} <= 2e-2", r.epsilon));
    }
    k
}

fn criterion_2(cases: &[Case], resolution: usize) -> Criterion {
    let mut k = Criterion::new(2, "doubled circle");
    let c = case(cases, "doubled_circle");
    let e = rel(c.outcome.limit.area0, 2.0 * PI);
    k.check(e <= 0.03, format!("area0 = {:.6} (rel err {e:.2e} <= 3e-2)", c.outcome.limit.area0));
    let w = winding_area(&c.entry.shape.curve(4096).unwrap(), resolution).unwrap();
    let e = rel(w.value, 2.0 * PI);
    k.check(e <= 0.01, format!("winding_area = {:.6} (rel err {e:.2e} <= 1e-2)", w.value));
    let e = rel(c.outcome.winding.value, 2.0 * PI);
    k.check(
        e <= 0.01,
        format!("winding_area on the solved polygon = {:.6} (rel err {e:.2e})", c.outcome.winding.value),
    );
    k
}

fn criterion_3(cases: &[Case], resolution: usize) -> Criterion {
    let mut k = Criterion::new(3, "figure-eight contrast");
    let o = &case(cases, "figure_eight").outcome;
    let target = 1.36 * PI;
    let e = rel(o.limit.area0, target);
    k.check(e <= 0.04, format!("area0 = {:.6} vs 1.36 pi (rel err {e:.2e} <= 4e-2)", o.limit.area0));
    let lobes = Shape::CoincidentLobes { r: 1.0 }.curve(512).unwrap();
    let m = current_mass(&lobes, resolution).unwrap();
    k.check(m.value.abs() <= 0.01 * PI, format!("current_mass of coincident lobes = {:.3e} <= 1e-2 pi", m.value));
    k
}

fn criterion_4(cases: &[Case], cfg: &RunConfig) -> Criterion {
    let mut k = Criterion::new(4, "inequality suite");
    let tol = 1e-9;
    for c in cases {
        let name = &c.entry.name;
        let o = &c.outcome;
        let cone = o.record.results.iter().map(|r| r.energy - r.cone_energy).fold(f64::MIN, f64::max);
        k.check(cone <= tol, format!("{name}: max E(u) - E(cone) = {cone:.3e} <= 1e-9"));
        let am = o.record.results.iter().map(|r| r.area - r.energy).fold(f64::MIN, f64::max);
        k.check(am <= tol, format!("{name}: max area - energy = {am:.3e} <= 1e-9"));
        let mp = o.record.results.iter().map(|r| overshoot(&r.map)).fold(0.0, f64::max);
        k.check(mp <= tol, format!("{name}: max principle overshoot on final maps = {mp:.3e} <= 1e-9"));
        let em = o.record.results.iter().map(|r| r.energy).fold(0.0, f64::max);
        let curve = &o.curve;
        let m1 = curve.sup_norm() + 1.0;
        let lip = curve.lipschitz();
        let m2 = (lip * lip + 2.0).sqrt();
        let bound = PI * (m1 * m1 + m2 * m2);
        k.check(em <= bound, format!("{name}: max energy {em:.4} <= pi(m1^2 + m2^2) = {bound:.4}"));
        let lb = o.winding.value - (o.winding.error + cfg.lower_bound_slack * o.limit.area0);
        k.check(
            o.limit.area0 >= lb,
            format!("{name}: area0 {:.6} >= winding {:.6} - tolerance = {lb:.6}", o.limit.area0, o.winding.value),
        );
    }
    k
}

/// Re-run every solve of every catalog sweep with an observer: monotone
/// parametrization, exact pins, and a per-coordinate maximum principle on
/// each harmonic extension along the way.
fn iterate_checks(cases: &[Case], cfg: &RunConfig, k4: &mut Criterion, k5: &mut Criterion) {
    let mesh = cfg.mesh().unwrap();
    let solver = HarmonicSolver::new(Arc::clone(&mesh)).unwrap();
    for c in cases {
        let name = &c.entry.name;
        let o = &c.outcome;
        let pins = o.record.pins;
        let (mut iterates, mut bad_order, mut bad_pins, mut worst_mp) = (0usize, 0usize, 0usize, 0.0f64);
        let mut warm = None;
        for &eps in &o.record.epsilons {
            let lifted = lift(curve_of(o), eps).unwrap();
            let mut obs = |it: &Iterate<'_>| {
                iterates += 1;
                let v = it.param.lifted();
                let ordered = v.windows(2).all(|w| w[0] <= w[1])
                    && v[v.len() - 1] <= v[0] + 2.0 * PI
                    && (0.0..2.0 * PI).contains(&v[0]);
                if !ordered {
                    bad_order += 1;
                }
                if pins.iter().any(|p| v[p.index] != p.param) {
                    bad_pins += 1;
                }
                let g = boundary_values(&lifted, it.param);
                let vals = solver.extend_values(&g, 4).unwrap();
                let map = DiskMap::new(Arc::clone(&mesh), 4, vals).unwrap();
                worst_mp = worst_mp.max(overshoot(&map));
            };
            let mut m = Minimizer::new(&solver, &lifted, &cfg.sweep.solver).pins(pins);
            if let (SweepMode::Warm, Some(w)) = (cfg.sweep.mode, warm.as_ref()) {
                m = m.warm_start(w);
            }
            let r = m.observer(&mut obs).run().unwrap();
            warm = Some(r.param);
        }
        k5.check(
            bad_order == 0 && bad_pins == 0 && iterates > 0,
            format!("{name}: {iterates} iterates, {bad_order} non-monotone, {bad_pins} moved pins"),
        );
        k4.check(worst_mp <= 1e-9, format!("{name}: max principle overshoot over all iterates = {worst_mp:.3e}"));
    }
}

fn curve_of(o: &Outcome) -> &ClosedCurve {
    &o.curve
}

fn random_self_intersecting() -> impl Strategy<Value = ClosedCurve> {
    (5usize..12, any::<u64>()).prop_filter_map("simple or degenerate polygon", |(n, seed)| {
        let mut s = seed | 1;
        let mut next = || {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            (s >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
        };
        let pts: Vec<[f64; 2]> = (0..n).map(|_| [next(), next()]).collect();
        let curve = ClosedCurve::new(pts).ok()?;
        let crossings = self_intersections(&curve, 1e-9).crossings;
        (!crossings.is_empty()).then_some(curve)
    })
}

/// Piecewise-linear interpolant of the unit circle through the sample
/// parameters, evaluated at `t`.
fn circle_interpolant(params: &[f64], t: f64) -> [f64; 2] {
    let n = params.len();
    let t = t.rem_euclid(2.0 * PI);
    let k = params.iter().rposition(|&p| p <= t).unwrap_or(0);
    let (t0, t1) = (params[k], if k + 1 < n { params[k + 1] } else { 2.0 * PI });
    let s = (t - t0) / (t1 - t0);
    let (a, b) = (params[k], if k + 1 < n { params[k + 1] } else { 0.0 });
    [(1.0 - s) * a.cos() + s * b.cos(), (1.0 - s) * a.sin() + s * b.sin()]
}

fn dist(p: [f64; 4], q: [f64; 4]) -> f64 {
    (0..4).map(|c| (p[c] - q[c]).powi(2)).sum::<f64>().sqrt()
}

/// Lifted points at distinct parameters are separated by at least `ε` times
/// the distance between the corresponding points of the inscribed polygon,
/// which is positive because that polygon is convex.
fn lift_injectivity(k: &mut Criterion) {
    let mut runner = TestRunner::new(Config { cases: 100, failure_persistence: None, ..Config::default() });
    let count = std::cell::Cell::new(0usize);
    let strategy = (random_self_intersecting(), 0.01f64..0.5, proptest::collection::vec(0.0..2.0 * PI, 64));
    let result = runner.run(&strategy, |(curve, eps, extra)| {
        count.set(count.get() + 1);
        let lifted = lift(&curve, eps).unwrap();
        let t = curve.params();
        let separated = |a: f64, b: f64| -> Result<(), TestCaseError> {
            let d = dist(lifted.eval(a), lifted.eval(b));
            let (qa, qb) = (circle_interpolant(t, a), circle_interpolant(t, b));
            let floor = eps * ((qa[0] - qb[0]).powi(2) + (qa[1] - qb[1]).powi(2)).sqrt();
            prop_assert!(floor > 0.0, "inscribed polygon not injective at {a} {b}");
            prop_assert!(d >= floor * (1.0 - 1e-9), "params {a} {b}: {d} < {floor}");
            Ok(())
        };
        for cr in self_intersections(&curve, 1e-9).crossings {
            let (a, b) = cr.params;
            separated(a, b)?;
        }
        for i in 0..t.len() {
            for j in i + 1..t.len() {
                let chord = 2.0 * eps * ((t[i] - t[j]) / 2.0).sin().abs();
                let d = dist(lifted.points4()[i], lifted.points4()[j]);
                prop_assert!(d >= chord * (1.0 - 1e-9), "samples {i} {j}: {d} < {chord}");
            }
        }
        let mut s = extra;
        s.sort_by(f64::total_cmp);
        s.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        for i in 0..s.len() {
            for j in i + 1..s.len() {
                separated(s[i], s[j])?;
            }
        }
        Ok(())
    });
    k.check(
        result.is_ok() && count.get() >= 100,
        format!("lift injective on {} random self-intersecting polygons ({:?})", count.get(), result.err()),
    );
}

fn criterion_5(cases: &[Case], cfg: &RunConfig, k4: &mut Criterion) -> Criterion {
    let mut k = Criterion::new(5, "structural suite");
    iterate_checks(cases, cfg, k4, &mut k);
    lift_injectivity(&mut k);
    for c in cases {
        for (r, osc) in c.outcome.record.results.iter().zip(&c.outcome.oscillation) {
            if !r.converged {
                continue;
            }
            let worst = osc.rows.iter().map(|row| row.oscillation / row.bound).fold(0.0, f64::max);
            k.check(
                osc.passed && osc.slack <= 3.0 && worst <= 3.0,
                format!("{}: eps {} oscillation / Courant-Lebesgue bound = {worst:.3} <= 3", c.entry.name, r.epsilon),
            );
        }
    }
    k
}

fn criterion_6(cases: &[Case]) -> Criterion {
    let mut k = Criterion::new(6, "homotopy suite");
    for c in cases {
        let name = &c.entry.name;
        let o = &c.outcome;
        let h = &o.homotopy;
        let curve = h.curve();
        let max_gap = h.u0().mesh().boundary_count();
        let gap = h.interface_gap(4 * max_gap);
        let interp = curve.lipschitz() * o.limit.phi0.gaps().iter().cloned().fold(0.0, f64::max);
        k.check(gap <= interp, format!("{name}: interface gap {gap:.3e} <= interpolation bound {interp:.3e}"));
        let f = sample_frame(h, 1.0, curve.len()).unwrap();
        let dev = f
            .points
            .iter()
            .zip(curve.points())
            .map(|(a, b)| (a[0] - b[0]).abs().max((a[1] - b[1]).abs()))
            .fold(0.0, f64::max);
        k.check(dev <= 1e-12, format!("{name}: frame(1) deviation from the curve = {dev:.1e}"));
        let u0_area = map_area(h.u0());
        let e = rel(o.swept.total, u0_area);
        k.check(e <= 0.03, format!("{name}: |swept - map_area(u0)| / map_area = {e:.2e} <= 3e-2"));
        let half = o.swept.second_half / o.swept.total;
        k.check(half <= 1e-3, format!("{name}: second-half share = {half:.2e} <= 1e-3"));
    }
    k
}

fn criterion_7(cases: &[Case]) -> Criterion {
    let mut k = Criterion::new(7, "convergence monitors");
    for c in cases {
        let rows = &c.outcome.record.rows;
        let d: Vec<f64> = rows[rows.len() - 3..].iter().filter_map(|r| r.map_sup_distance).collect();
        let dec = d.len() == 3 && d.windows(2).all(|w| w[1] < w[0]);
        k.check(
            dec,
            format!(
                "{}: consecutive map sup-distances {:?} decreasing",
                c.entry.name,
                d.iter().map(|x| format!("{x:.3e}")).collect::<Vec<_>>()
            ),
        );
        let p: Vec<f64> = rows.iter().map(|r| r.planarity_defect).collect();
        let dec = p.windows(2).all(|w| w[1] < w[0]);
        k.check(dec, format!("{}: planarity defects {p:.4?} decreasing with eps", c.entry.name));
    }
    k
}

fn main() {
    let start = Instant::now();
    let cfg = RunConfig::default();
    println!(
        "acceptance: rings={} boundary_count={} resolution={} schedule={:?}",
        cfg.rings,
        cfg.boundary_count,
        cfg.resolution,
        cfg.schedule().unwrap()
    );
    let cases: Vec<Case> = catalog()
        .into_iter()
        .map(|entry| {
            let curve = entry.shape.curve(cfg.samples).unwrap();
            let outcome = run_pipeline(&curve, &cfg).unwrap_or_else(|e| panic!("{}: {e}", entry.name));
            Case { entry, outcome }
        })
        .collect();

    let mut k4 = criterion_4(&cases, &cfg);
    let k5 = criterion_5(&cases, &cfg, &mut k4);
    let all = [
        criterion_1(&cases),
        criterion_2(&cases, cfg.resolution),
        criterion_3(&cases, cfg.resolution),
        k4,
        k5,
        criterion_6(&cases),
        criterion_7(&cases),
    ];
    let mut passed = 0;
    for k in &all {
        if k.report() {
            passed += 1;
        }
    }
    println!("acceptance: {passed}/{} criteria passed in {:.1}s", all.len(), start.elapsed().as_secs_f64());
    if passed != all.len() {
        std::process::exit(1);
    }
}
