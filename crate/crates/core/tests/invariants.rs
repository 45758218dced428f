use std::f64::consts::{PI, TAU};
use std::sync::{Arc, OnceLock};

use approx::assert_relative_eq;
use proptest::prelude::*;

use minhom::continuation::{run_sweep, SweepMode, SweepSettings};
use minhom::curve::{lift, resample_arclength, winding_number, ClosedCurve};
use minhom::diskmesh::{build_disk_mesh, dirichlet_energy, harmonic_extend, map_area, DiskMap, DiskMesh};
use minhom::homotopy::homotopy_swept_area;
use minhom::oracle::{catalog, current_mass, winding_area, Shape};
use minhom::pipeline::{run_pipeline, Outcome, RunConfig};
use minhom::plateau::{douglas_minimize, Minimizer};

fn mesh() -> &'static Arc<DiskMesh> {
    static M: OnceLock<Arc<DiskMesh>> = OnceLock::new();
    M.get_or_init(|| Arc::new(build_disk_mesh(8, 24).unwrap()))
}

fn catalog_runs() -> &'static Vec<(String, Outcome)> {
    static R: OnceLock<Vec<(String, Outcome)>> = OnceLock::new();
    R.get_or_init(|| {
        let cfg = RunConfig { resolution: 128, swept_time_steps: 33, swept_samples: 1024, ..RunConfig::default() };
        catalog()
            .into_iter()
            .map(|e| (e.name.clone(), run_pipeline(&e.shape.curve(cfg.samples).unwrap(), &cfg).unwrap()))
            .collect()
    })
}

fn star_polygon(radii: &[f64], phase: f64) -> ClosedCurve {
    let n = radii.len();
    let pts = radii
        .iter()
        .enumerate()
        .map(|(k, r)| {
            let a = phase + TAU * k as f64 / n as f64;
            [r * a.cos(), r * a.sin()]
        })
        .collect();
    ClosedCurve::new(pts).unwrap()
}

fn rigid(angle: f64, shift: [f64; 2]) -> impl Fn([f64; 2]) -> [f64; 2] {
    let (s, c) = angle.sin_cos();
    move |p| [c * p[0] - s * p[1] + shift[0], s * p[0] + c * p[1] + shift[1]]
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, ..ProptestConfig::default() })]

    #[test]
    fn lift_segments_satisfy_the_isometry_defect(
        radii in proptest::collection::vec(0.3f64..2.0, 5..40),
        eps in 0.0f64..1.0,
    ) {
        let curve = star_polygon(&radii, 0.1);
        let lifted = lift(&curve, eps).unwrap();
        let p = lifted.points4();
        let t = curve.params();
        let n = p.len();
        for k in 0..n {
            let (a, b) = (p[k], p[(k + 1) % n]);
            let t1 = if k + 1 == n { TAU } else { t[k + 1] };
            let seg4: f64 = (0..4).map(|c| (b[c] - a[c]).powi(2)).sum();
            let seg2: f64 = (0..2).map(|c| (b[c] - a[c]).powi(2)).sum();
            let chord2 = (t1.cos() - t[k].cos()).powi(2) + (t1.sin() - t[k].sin()).powi(2);
            prop_assert!((seg4 - (seg2 + eps * eps * chord2)).abs() <= 1e-12 * (1.0 + seg4));
        }
    }

    #[test]
    fn regular_polygons_are_fixed_by_resampling(n in 3usize..200, r in 0.1f64..10.0, phase in 0.0f64..TAU) {
        let curve = star_polygon(&vec![r; n], phase);
        let once = resample_arclength(&curve, n).unwrap();
        let twice = resample_arclength(&once, n).unwrap();
        for (a, b) in once.points().iter().zip(twice.points()) {
            prop_assert!((a[0] - b[0]).abs() <= 1e-10 * r && (a[1] - b[1]).abs() <= 1e-10 * r);
        }
        for (a, b) in curve.points().iter().zip(once.points()) {
            prop_assert!((a[0] - b[0]).abs() <= 1e-10 * r && (a[1] - b[1]).abs() <= 1e-10 * r);
        }
    }

    #[test]
    fn winding_is_invariant_under_resampling_and_rigid_motion(
        radii in proptest::collection::vec(0.5f64..2.0, 5..30),
        q in (-2.5f64..2.5, -2.5f64..2.5),
        angle in 0.0f64..TAU,
        shift in (-5.0f64..5.0, -5.0f64..5.0),
    ) {
        let curve = star_polygon(&radii, 0.0);
        let q = [q.0, q.1];
        let fine = resample_arclength(&curve, 7 * radii.len()).unwrap();
        let max_seg = fine.segment_lengths().into_iter().fold(0.0, f64::max);
        prop_assume!(curve.distance_to(q) > max_seg);
        let w = winding_number(&curve, q).unwrap();
        prop_assert_eq!(winding_number(&fine, q).unwrap(), w);
        let f = rigid(angle, [shift.0, shift.1]);
        let moved = curve.transformed(&f).unwrap();
        prop_assert_eq!(winding_number(&moved, f(q)).unwrap(), w);
    }

    #[test]
    fn energy_dominates_area_for_any_map(values in proptest::collection::vec(-3.0f64..3.0, 1..4)) {
        let m = mesh();
        let dim = values.len();
        let seed = values.clone();
        let map = DiskMap::from_fn(Arc::clone(m), dim, |p| {
            seed.iter().enumerate().map(|(c, s)| s * (p[0] * (c + 1) as f64).sin() + p[1] * p[1] * s.cos()).collect()
        })
        .unwrap();
        prop_assert!(dirichlet_energy(&map) >= map_area(&map) - 1e-10);
    }

    #[test]
    fn energy_is_quadratic_and_isometry_invariant(lambda in -4.0f64..4.0, angle in 0.0f64..TAU, shift in (-3.0f64..3.0, -3.0f64..3.0)) {
        let m = mesh();
        let map = DiskMap::from_fn(Arc::clone(m), 2, |p| vec![p[0] + 0.3 * p[1] * p[1], (2.0 * p[0]).sin() - p[1]]).unwrap();
        let e = dirichlet_energy(&map);
        let scaled = dirichlet_energy(&map.scaled(lambda).unwrap());
        prop_assert!((scaled - lambda * lambda * e).abs() <= 1e-12 * lambda * lambda * e + 1e-300);
        let f = rigid(angle, [shift.0, shift.1]);
        let moved: Vec<f64> = map.values().chunks(2).flat_map(|v| f([v[0], v[1]])).collect();
        let moved = DiskMap::new(Arc::clone(m), 2, moved).unwrap();
        prop_assert!((dirichlet_energy(&moved) - e).abs() <= 1e-12 * e);
    }

    #[test]
    fn harmonic_extension_obeys_the_maximum_principle(data in proptest::collection::vec(-5.0f64..5.0, 24 * 3)) {
        let m = mesh();
        let boundary: Vec<Vec<f64>> = data.chunks(3).map(<[f64]>::to_vec).collect();
        let map = harmonic_extend(m, &boundary).unwrap();
        for c in 0..3 {
            let lo = boundary.iter().map(|v| v[c]).fold(f64::INFINITY, f64::min);
            let hi = boundary.iter().map(|v| v[c]).fold(f64::NEG_INFINITY, f64::max);
            for v in 0..m.vertex_count() {
                let x = map.values()[v * 3 + c];
                prop_assert!(x >= lo - 1e-10 && x <= hi + 1e-10);
            }
        }
    }

    #[test]
    fn map_area_ignores_vertex_labels(perm_seed in any::<u64>(), rot in 0usize..3) {
        let m = mesh();
        let n = m.vertex_count();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut s = perm_seed | 1;
        for i in (1..n).rev() {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            perm.swap(i, (s % (i as u64 + 1)) as usize);
        }
        let mut vertices = vec![[0.0; 2]; n];
        for (old, &new) in perm.iter().enumerate() {
            vertices[new] = m.vertices()[old];
        }
        let triangles = m.triangles().iter().map(|t| {
            let t = [perm[t[0]], perm[t[1]], perm[t[2]]];
            [t[rot], t[(rot + 1) % 3], t[(rot + 2) % 3]]
        }).collect();
        let boundary = m.boundary().iter().map(|&b| perm[b]).collect();
        let relabeled = Arc::new(DiskMesh::from_parts(vertices, triangles, boundary, m.boundary_angles().to_vec()).unwrap());
        let f = |p: [f64; 2]| vec![p[0] + p[1] * p[1], p[0] * p[1] - p[1], (3.0 * p[0]).cos()];
        let a = map_area(&DiskMap::from_fn(Arc::clone(m), 3, f).unwrap());
        let b = map_area(&DiskMap::from_fn(relabeled, 3, f).unwrap());
        prop_assert!((a - b).abs() <= 1e-12 * a);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, ..ProptestConfig::default() })]

    #[test]
    fn current_mass_never_exceeds_winding_area(
        pts in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 4..10),
    ) {
        let curve = ClosedCurve::new(pts.iter().map(|p| [p.0, p.1]).collect());
        prop_assume!(curve.is_ok());
        let curve = curve.unwrap();
        let w = winding_area(&curve, 96).unwrap();
        let m = current_mass(&curve, 96).unwrap();
        prop_assert!(m.value <= w.value + 1e-9);
    }

    #[test]
    fn winding_area_refinement_stays_within_the_error_estimate(radii in proptest::collection::vec(0.5f64..1.5, 6..16)) {
        let curve = star_polygon(&radii, 0.3);
        let coarse = winding_area(&curve, 96).unwrap();
        let fine = winding_area(&curve, 192).unwrap();
        prop_assert!((fine.value - coarse.value).abs() < coarse.error);
    }
}

#[test]
fn winding_area_refinement_on_the_catalog() {
    for e in catalog() {
        let curve = e.shape.curve(256).unwrap();
        let coarse = winding_area(&curve, 128).unwrap();
        let fine = winding_area(&curve, 256).unwrap();
        assert!((fine.value - coarse.value).abs() < coarse.error, "{}", e.name);
    }
    let lobes = Shape::CoincidentLobes { r: 1.0 }.curve(256).unwrap();
    assert!(current_mass(&lobes, 128).unwrap().value <= winding_area(&lobes, 128).unwrap().value + 1e-9);
}

#[test]
fn identity_disk_energy_converges_under_mesh_refinement() {
    let mut last = f64::INFINITY;
    for rings in [6, 12, 24, 48] {
        let mesh = Arc::new(build_disk_mesh(rings, 6 * rings).unwrap());
        let boundary: Vec<Vec<f64>> = mesh.boundary_angles().iter().map(|a| vec![a.cos(), a.sin()]).collect();
        let err = (dirichlet_energy(&harmonic_extend(&mesh, &boundary).unwrap()) - PI).abs();
        assert!(err < last, "rings {rings}: {err} !< {last}");
        last = err;
    }
    assert!(last < 1e-2);
}

#[test]
fn descent_energy_never_increases() {
    for (name, o) in catalog_runs() {
        for r in &o.record.results {
            for w in r.energy_history.windows(2) {
                assert!(w[1] <= w[0] + 1e-12, "{name} eps {}: {} -> {}", r.epsilon, w[0], w[1]);
            }
        }
    }
}

#[test]
fn converged_results_beat_the_cone_and_respect_the_energy_bound() {
    for (name, o) in catalog_runs() {
        for r in o.record.results.iter().filter(|r| r.converged) {
            assert!(r.energy <= r.cone_energy, "{name}");
            assert!(r.energy <= o.record.energy_bound, "{name}");
        }
    }
}

#[test]
fn parametrization_change_decreases_over_the_last_entries() {
    for (name, o) in catalog_runs() {
        let rows = &o.record.rows;
        assert!(rows.iter().all(|r| r.converged));
        let d: Vec<f64> = rows[rows.len() - 3..].iter().map(|r| r.phi_change.unwrap()).collect();
        // The circle keeps φ at the identity for every ε; its changes are
        // rounding noise.
        assert!(d.windows(2).all(|w| w[1] < w[0] || w.iter().all(|&x| x <= PHI_NOISE)), "{name}: {d:?}");
    }
}

const PHI_NOISE: f64 = 1e-9;

#[test]
fn planarity_decays_with_epsilon() {
    for (name, o) in catalog_runs() {
        let p: Vec<f64> = o.record.rows.iter().map(|r| r.planarity_defect).collect();
        assert!(p.windows(2).all(|w| w[1] < w[0]), "{name}: {p:?}");
        if name == "circle" {
            let slack = o.record.settings.planarity_slack;
            for r in &o.record.results {
                let worst = r.map.values().chunks(4).map(|v| v[2].abs().max(v[3].abs())).fold(0.0, f64::max);
                assert!(worst <= r.epsilon * (1.0 + slack));
            }
        }
    }
}

/// Rerun each ε cold. The converged area must agree with the warm result
/// to `5 × energy_tol` (relative to the cone energy), unless the cold run
/// settles in a strictly higher-energy critical point, which is the
/// opposite of warm-start lock-in.
#[test]
fn warm_start_is_neutral() {
    let cfg = RunConfig::default();
    let mesh = cfg.mesh().unwrap();
    let tol = cfg.sweep.solver.energy_tol;
    for e in catalog() {
        let curve = resample_arclength(&e.shape.curve(cfg.samples).unwrap(), cfg.samples).unwrap();
        let record = run_sweep(&curve, &mesh, &cfg.schedule().unwrap(), &cfg.sweep).unwrap();
        for r in &record.results {
            let lifted = lift(&curve, r.epsilon).unwrap();
            let cold = douglas_minimize(&lifted, &mesh, &cfg.sweep.solver).unwrap();
            let bound = 5.0 * tol * r.cone_energy;
            let neutral = (r.area - cold.area).abs() <= bound;
            let warm_lower = cold.energy - r.energy > bound;
            assert!(
                neutral || warm_lower,
                "{} eps {}: warm area {} energy {}, cold area {} energy {}",
                e.name,
                r.epsilon,
                r.area,
                r.energy,
                cold.area,
                cold.energy
            );
        }
    }
}

#[test]
fn cold_and_warm_sweeps_share_pins_and_schedule() {
    let cfg = RunConfig::default();
    let mesh = cfg.mesh().unwrap();
    let curve = Shape::Circle { r: 1.0 }.curve(64).unwrap();
    let cold = SweepSettings { mode: SweepMode::Cold, ..cfg.sweep.clone() };
    let a = run_sweep(&curve, &mesh, &[0.2, 0.1], &cfg.sweep).unwrap();
    let b = run_sweep(&curve, &mesh, &[0.2, 0.1], &cold).unwrap();
    assert_eq!(a.pins, b.pins);
    assert_eq!(a.epsilons, b.epsilons);
    assert_relative_eq!(a.results[0].energy, b.results[0].energy, max_relative = 1e-14);
}

#[test]
fn pinned_minimizer_matches_douglas_minimize() {
    let cfg = RunConfig::default();
    let mesh = cfg.mesh().unwrap();
    let curve = Shape::DoubledCircle { r: 1.0 }.curve(128).unwrap();
    let lifted = lift(&curve, 0.1).unwrap();
    let solver = minhom::diskmesh::HarmonicSolver::new(Arc::clone(&mesh)).unwrap();
    let a = Minimizer::new(&solver, &lifted, &cfg.sweep.solver).run().unwrap();
    let b = douglas_minimize(&lifted, &mesh, &cfg.sweep.solver).unwrap();
    assert_eq!(a.energy, b.energy);
    assert_eq!(a.param, b.param);
}

#[test]
fn second_half_area_shrinks_under_joint_refinement() {
    for (name, o) in catalog_runs() {
        let mut last = f64::INFINITY;
        for (t, n) in [(17, 512), (33, 1024), (65, 2048), (129, 4096)] {
            let s = homotopy_swept_area(&o.homotopy, t, n).unwrap();
            assert!(s.second_half < last, "{name} at ({t}, {n}): {} !< {last}", s.second_half);
            last = s.second_half;
        }
    }
}

#[test]
fn endpoint_frames() {
    for (name, o) in catalog_runs() {
        let start = minhom::homotopy::sample_frame(&o.homotopy, 0.0, 64).unwrap();
        assert_eq!(start.diameter(), 0.0, "{name}");
        let end = minhom::homotopy::sample_frame(&o.homotopy, 1.0, o.curve.len()).unwrap();
        assert_eq!(&end.points[..], o.curve.points(), "{name}");
    }
}
