//! Independent ground truth: raster winding integrals and a catalog of
//! curves whose minimal null-homotopy areas are known in closed form.

use std::f64::consts::{PI, TAU};

use rayon::prelude::*;
use serde::Serialize;

use crate::curve::{point_segment_distance, turning_angle, ClosedCurve, Point2};
use crate::error::{Error, Result};
use crate::report::{cell, fmt12, Table};

/// A raster integral with its attached error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RasterEstimate {
    pub value: f64,
    /// Area of the band within one cell diagonal of the curve plus any
    /// skipped cells, weighted by the largest `|w|` seen: the part of the
    /// integral the raster cannot resolve.
    pub error: f64,
    pub resolution: usize,
    /// Cells whose centres sit on the curve within tolerance and were
    /// left out.
    pub skipped: usize,
}

struct Grid {
    x0: f64,
    y0: f64,
    dx: f64,
    dy: f64,
    res: usize,
}

impl Grid {
    fn new(curve: &ClosedCurve, res: usize) -> Result<Self> {
        if res < 64 {
            return Err(Error::Domain(format!("resolution must be at least 64, got {res}")));
        }
        let (lo, hi) = curve.bounding_box();
        let pad = 0.1 * (hi[0] - lo[0]).max(hi[1] - lo[1]);
        let (x0, y0) = (lo[0] - pad, lo[1] - pad);
        let (w, h) = (hi[0] - lo[0] + 2.0 * pad, hi[1] - lo[1] + 2.0 * pad);
        Ok(Self { x0, y0, dx: w / res as f64, dy: h / res as f64, res })
    }

    fn center(&self, i: usize, j: usize) -> Point2 {
        [self.x0 + (i as f64 + 0.5) * self.dx, self.y0 + (j as f64 + 0.5) * self.dy]
    }

    fn cell_area(&self) -> f64 {
        self.dx * self.dy
    }

    fn diagonal(&self) -> f64 {
        self.dx.hypot(self.dy)
    }
}

/// Segments that can come within `tol` of the horizontal line at `y`.
fn row_segments(points: &[Point2], y: f64, tol: f64) -> Vec<usize> {
    let n = points.len();
    (0..n)
        .filter(|&k| {
            let (a, b) = (points[k], points[(k + 1) % n]);
            a[1].min(b[1]) - tol <= y && y <= a[1].max(b[1]) + tol
        })
        .collect()
}

fn near_curve(points: &[Point2], segments: &[usize], q: Point2, tol: f64) -> bool {
    let n = points.len();
    segments.iter().any(|&k| point_segment_distance(q, points[k], points[(k + 1) % n]).0 <= tol)
}

/// Row-parallel `Σ|w|` with ordered reduction. `row(j, segments)` yields the
/// winding per cell, `None` for cells on the curve.
fn integrate(
    curve: &ClosedCurve,
    grid: &Grid,
    row: impl Fn(usize, &[usize]) -> Vec<Option<i64>> + Sync,
) -> RasterEstimate {
    let pts = curve.points();
    let tol = curve.default_tolerance();
    let rows: Vec<(i64, i64, usize)> = (0..grid.res)
        .into_par_iter()
        .map(|j| {
            let segs = row_segments(pts, grid.center(0, j)[1], tol);
            let (mut sum, mut wmax, mut skipped) = (0, 0, 0);
            for wi in row(j, &segs) {
                match wi {
                    Some(v) => {
                        sum += v.abs();
                        wmax = wmax.max(v.abs());
                    }
                    None => skipped += 1,
                }
            }
            (sum, wmax, skipped)
        })
        .collect();
    let (mut sum, mut wmax, mut skipped) = (0i64, 0i64, 0usize);
    for (s, m, k) in rows {
        sum += s;
        wmax = wmax.max(m);
        skipped += k;
    }
    // cells within one diagonal of the curve cover at most this much area
    let band = curve.length() * 2.0 * grid.diagonal() + skipped as f64 * grid.cell_area();
    RasterEstimate {
        value: sum as f64 * grid.cell_area(),
        error: band * wmax.max(1) as f64,
        resolution: grid.res,
        skipped,
    }
}

/// `∫|w|` over a padded bounding grid, winding numbers from total turning
/// at cell centres.
pub fn winding_area(curve: &ClosedCurve, resolution: usize) -> Result<RasterEstimate> {
    let grid = Grid::new(curve, resolution)?;
    let pts = curve.points();
    let tol = curve.default_tolerance();
    Ok(integrate(curve, &grid, |j, segs| {
        (0..grid.res)
            .map(|i| {
                let q = grid.center(i, j);
                if near_curve(pts, segs, q, tol) {
                    None
                } else {
                    Some((turning_angle(pts, q) / TAU).round() as i64)
                }
            })
            .collect()
    }))
}

/// Signed winding per cell by scanline crossing counts, then `Σ|w|`.
/// Opposite orientations over the same region cancel before the absolute
/// value is taken.
pub fn current_mass(curve: &ClosedCurve, resolution: usize) -> Result<RasterEstimate> {
    let grid = Grid::new(curve, resolution)?;
    let pts = curve.points();
    let n = pts.len();
    let tol = curve.default_tolerance();
    Ok(integrate(curve, &grid, |j, segs| {
        let y = grid.center(0, j)[1];
        // crossings of the horizontal line: (x, +1 upward / −1 downward)
        let mut hits: Vec<(f64, i64)> = Vec::new();
        for &k in segs {
            let (a, b) = (pts[k], pts[(k + 1) % n]);
            let up = a[1] <= y && b[1] > y;
            let down = b[1] <= y && a[1] > y;
            if up || down {
                let x = a[0] + (y - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
                hits.push((x, if up { 1 } else { -1 }));
            }
        }
        hits.sort_by(|p, q| p.0.total_cmp(&q.0));
        // winding at x = signed crossings strictly to the right
        let mut out = Vec::with_capacity(grid.res);
        let mut right: i64 = hits.iter().map(|h| h.1).sum();
        let mut h = 0;
        for i in 0..grid.res {
            let q = grid.center(i, j);
            while h < hits.len() && hits[h].0 <= q[0] {
                right -= hits[h].1;
                h += 1;
            }
            out.push(if near_curve(pts, segs, q, tol) { None } else { Some(right) });
        }
        out
    }))
}

/// Shapes with closed-form oracle values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum Shape {
    Circle {
        r: f64,
    },
    DoubledCircle {
        r: f64,
    },
    /// Two circles tangent at the origin, lobe 1 centred at `(−r1, 0)`
    /// counterclockwise, lobe 2 centred at `(r2, 0)`.
    FigureEight {
        r1: f64,
        r2: f64,
        opposite: bool,
    },
    /// A circle traversed counterclockwise and then clockwise.
    CoincidentLobes {
        r: f64,
    },
}

fn circle_points(r: f64, turns: usize, n: usize) -> Vec<Point2> {
    (0..n)
        .map(|k| {
            let t = TAU * turns as f64 * k as f64 / n as f64;
            [r * t.cos(), r * t.sin()]
        })
        .collect()
}

impl Shape {
    /// Sampled polygon with `samples` vertices (rounded to even for the
    /// two-lobe shapes).
    pub fn curve(&self, samples: usize) -> Result<ClosedCurve> {
        let pts = match *self {
            Shape::Circle { r } => circle_points(r, 1, samples),
            Shape::DoubledCircle { r } => circle_points(r, 2, samples),
            Shape::FigureEight { r1, r2, opposite } => {
                let total = r1 + r2;
                let n1 = ((samples as f64 * r1 / total).round() as usize).max(3);
                let n2 = samples.saturating_sub(n1).max(3);
                let mut pts: Vec<Point2> = (0..n1)
                    .map(|k| {
                        let s = TAU * k as f64 / n1 as f64;
                        [-r1 + r1 * s.cos(), r1 * s.sin()]
                    })
                    .collect();
                let sign = if opposite { 1.0 } else { -1.0 };
                pts.extend((0..n2).map(|k| {
                    let s = TAU * k as f64 / n2 as f64;
                    [r2 - r2 * s.cos(), sign * r2 * s.sin()]
                }));
                pts
            }
            Shape::CoincidentLobes { r } => {
                let h = samples / 2;
                let mut pts: Vec<Point2> = (0..h)
                    .map(|k| {
                        let s = TAU * k as f64 / h as f64;
                        [-r + r * s.cos(), r * s.sin()]
                    })
                    .collect();
                pts.extend((0..h).map(|k| {
                    let s = TAU * k as f64 / h as f64;
                    [-r + r * s.cos(), -r * s.sin()]
                }));
                pts
            }
        };
        ClosedCurve::new(pts)
    }

    pub fn describe(&self) -> String {
        match *self {
            Shape::Circle { r } => format!("r={}", fmt12(r)),
            Shape::DoubledCircle { r } => format!("r={}", fmt12(r)),
            Shape::FigureEight { r1, r2, opposite } => {
                format!("r1={} r2={} {}", fmt12(r1), fmt12(r2), if opposite { "opposite" } else { "same" })
            }
            Shape::CoincidentLobes { r } => format!("r={}", fmt12(r)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CatalogEntry {
    pub name: String,
    pub shape: Shape,
    /// `None` when only the winding lower bound is known.
    pub exact_area: Option<f64>,
    pub winding_integral: f64,
    /// Relative tolerance on `area0` against `exact_area`.
    pub tolerance: f64,
    pub notes: String,
}

pub const DEFAULT_SAMPLES: usize = 256;

pub fn catalog() -> Vec<CatalogEntry> {
    let (r1, r2) = (1.0, 0.6);
    let lobes = PI * (r1 * r1 + r2 * r2);
    vec![
        CatalogEntry {
            name: "circle".into(),
            shape: Shape::Circle { r: 1.0 },
            exact_area: Some(PI),
            winding_integral: PI,
            tolerance: 0.01,
            notes: "simple closed curve; minimal sweep is the enclosed disk".into(),
        },
        CatalogEntry {
            name: "doubled_circle".into(),
            shape: Shape::DoubledCircle { r: 1.0 },
            exact_area: Some(2.0 * PI),
            winding_integral: 2.0 * PI,
            tolerance: 0.03,
            notes: "degree-two cover; the disk is swept twice".into(),
        },
        CatalogEntry {
            name: "figure_eight".into(),
            shape: Shape::FigureEight { r1, r2, opposite: true },
            exact_area: Some(lobes),
            winding_integral: lobes,
            tolerance: 0.04,
            notes: "opposite lobes tangent at the origin; signed cancellation would give |1 - 0.36|·π".into(),
        },
        CatalogEntry {
            name: "figure_eight_same".into(),
            shape: Shape::FigureEight { r1, r2, opposite: false },
            exact_area: None,
            winding_integral: lobes,
            tolerance: 0.04,
            notes: "same-orientation lobes meeting in a cusp; winding integral is only a lower bound".into(),
        },
    ]
}

/// Catalog entry whose generator reproduces `curve` sample for sample, up
/// to `1e-9 ×` diameter.
pub fn match_catalog(curve: &ClosedCurve) -> Option<CatalogEntry> {
    let tol = 1e-9 * curve.diameter().max(1e-300);
    catalog().into_iter().find(|e| {
        e.shape.curve(curve.len()).is_ok_and(|c| {
            c.len() == curve.len()
                && c.points().iter().zip(curve.points()).all(|(a, b)| crate::curve::dist2(*a, *b) <= tol)
        })
    })
}

/// Oracle table: name, parameters, winding integral, exact area, current mass.
pub fn catalog_table(resolution: usize, samples: usize) -> Result<Table> {
    let mut t = Table::new(["name", "parameters", "winding_integral", "winding_area", "exact_area", "current_mass"]);
    let rows = catalog()
        .par_iter()
        .map(|e| -> Result<Vec<String>> {
            let c = e.shape.curve(samples)?;
            let w = winding_area(&c, resolution)?;
            let m = current_mass(&c, resolution)?;
            Ok(vec![
                e.name.clone(),
                e.shape.describe(),
                fmt12(e.winding_integral),
                fmt12(w.value),
                cell(e.exact_area),
                fmt12(m.value),
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    for r in rows {
        t.push(r);
    }
    Ok(t)
}
