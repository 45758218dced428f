//! Closed planar curves: validation, arc-length resampling, the 4-space lift
//! and a few diagnostics (self-intersections, winding numbers).
//!
//! A curve is a closed polygon whose samples carry parameters in `[0, 2π)`;
//! between samples the curve is the linear interpolant in parameter, and the
//! last sample connects back to the first.

use std::f64::consts::{PI, TAU};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point2 = [f64; 2];
pub type Point4 = [f64; 4];

#[inline]
pub(crate) fn sub2(a: Point2, b: Point2) -> Point2 {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
pub(crate) fn dot2(a: Point2, b: Point2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
pub(crate) fn cross2(a: Point2, b: Point2) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

#[inline]
pub(crate) fn norm2(a: Point2) -> f64 {
    a[0].hypot(a[1])
}

#[inline]
pub(crate) fn dist2(a: Point2, b: Point2) -> f64 {
    norm2(sub2(a, b))
}

#[inline]
pub(crate) fn dist4(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Reduce an angle to its representative in `[0, 2π)`.
pub fn wrap_angle(t: f64) -> f64 {
    let r = t.rem_euclid(TAU);
    // rem_euclid can return exactly TAU for tiny negative inputs
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Distance between two parameters on the circle `ℝ / 2πℤ`.
pub fn circular_distance(a: f64, b: f64) -> f64 {
    let d = wrap_angle(a - b);
    d.min(TAU - d)
}

/// Distance from `q` to the segment `[a, b]`, together with the segment
/// fraction of the closest point.
pub(crate) fn point_segment_distance(q: Point2, a: Point2, b: Point2) -> (f64, f64) {
    let ab = sub2(b, a);
    let len2 = dot2(ab, ab);
    let s = if len2 > 0.0 { (dot2(sub2(q, a), ab) / len2).clamp(0.0, 1.0) } else { 0.0 };
    let c = [a[0] + s * ab[0], a[1] + s * ab[1]];
    (dist2(q, c), s)
}

/// A uniformly or explicitly parametrized closed planar polygon.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedCurve {
    params: Vec<f64>,
    points: Vec<Point2>,
}

impl ClosedCurve {
    /// Curve with uniform parameters `2πi/n`.
    pub fn new(points: Vec<Point2>) -> Result<Self> {
        let n = points.len();
        let params = (0..n).map(|i| TAU * i as f64 / n as f64).collect();
        Self::with_params(params, points)
    }

    pub fn with_params(params: Vec<f64>, points: Vec<Point2>) -> Result<Self> {
        let n = points.len();
        if n < 3 {
            return Err(Error::InvalidCurve { index: n, reason: format!("need at least 3 samples, got {n}") });
        }
        if params.len() != n {
            return Err(Error::InvalidCurve {
                index: params.len().min(n),
                reason: format!("{} parameters for {} points", params.len(), n),
            });
        }
        for (i, p) in points.iter().enumerate() {
            if !p[0].is_finite() || !p[1].is_finite() {
                return Err(Error::InvalidCurve { index: i, reason: "non-finite coordinate".into() });
            }
        }
        if params[0] != 0.0 {
            return Err(Error::InvalidCurve {
                index: 0,
                reason: format!("first parameter must be 0, got {}", params[0]),
            });
        }
        for i in 1..n {
            if !(params[i] > params[i - 1]) || !(params[i] < TAU) {
                return Err(Error::InvalidCurve {
                    index: i,
                    reason: format!(
                        "parameters must increase strictly within [0, 2π); got {} after {}",
                        params[i],
                        params[i - 1]
                    ),
                });
            }
        }
        let mut length = 0.0;
        for i in 0..n {
            let d = dist2(points[i], points[(i + 1) % n]);
            if d == 0.0 {
                return Err(Error::InvalidCurve {
                    index: i,
                    reason: format!("zero-length segment: sample {} repeats sample {i}", (i + 1) % n),
                });
            }
            length += d;
        }
        if !length.is_finite() || length <= 0.0 {
            return Err(Error::InvalidCurve { index: 0, reason: "total length is not finite and positive".into() });
        }
        Ok(Self { params, points })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn points(&self) -> &[Point2] {
        &self.points
    }

    /// Parameter span of segment `i` (the closing segment ends at `2π`).
    fn span(&self, i: usize) -> f64 {
        let n = self.len();
        if i + 1 < n {
            self.params[i + 1] - self.params[i]
        } else {
            TAU - self.params[n - 1]
        }
    }

    pub fn segment(&self, i: usize) -> (Point2, Point2) {
        let n = self.len();
        (self.points[i % n], self.points[(i + 1) % n])
    }

    pub fn segment_lengths(&self) -> Vec<f64> {
        (0..self.len())
            .map(|i| {
                let (a, b) = self.segment(i);
                dist2(a, b)
            })
            .collect()
    }

    pub fn length(&self) -> f64 {
        self.segment_lengths().iter().sum()
    }

    /// Maximum distance between any two samples.
    pub fn diameter(&self) -> f64 {
        let mut d: f64 = 0.0;
        for (i, a) in self.points.iter().enumerate() {
            for b in &self.points[i + 1..] {
                d = d.max(dist2(*a, *b));
            }
        }
        d
    }

    /// `sup |γ|`.
    pub fn sup_norm(&self) -> f64 {
        self.points.iter().map(|p| norm2(*p)).fold(0.0, f64::max)
    }

    /// Lipschitz constant of the piecewise-linear interpolant with respect to
    /// the parameter, i.e. the largest segment speed.
    pub fn lipschitz(&self) -> f64 {
        (0..self.len())
            .map(|i| {
                let (a, b) = self.segment(i);
                dist2(a, b) / self.span(i)
            })
            .fold(0.0, f64::max)
    }

    pub fn bounding_box(&self) -> (Point2, Point2) {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in &self.points {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        (lo, hi)
    }

    /// Signed exterior angle at every sample. Polygonal input cannot certify
    /// C¹ closure, so these are recorded rather than checked.
    pub fn corner_angles(&self) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let a = sub2(self.points[i], self.points[(i + n - 1) % n]);
                let b = sub2(self.points[(i + 1) % n], self.points[i]);
                cross2(a, b).atan2(dot2(a, b))
            })
            .collect()
    }

    /// Segment index and fraction for parameter `t` (taken mod 2π).
    pub fn locate(&self, t: f64) -> (usize, f64) {
        let t = wrap_angle(t);
        let k = self.params.partition_point(|&p| p <= t) - 1;
        let frac = ((t - self.params[k]) / self.span(k)).clamp(0.0, 1.0);
        (k, frac)
    }

    /// Piecewise-linear evaluation `γ(t)`.
    pub fn eval(&self, t: f64) -> Point2 {
        let (k, f) = self.locate(t);
        let (a, b) = self.segment(k);
        [a[0] + f * (b[0] - a[0]), a[1] + f * (b[1] - a[1])]
    }

    /// Right derivative of the interpolant at `t`.
    pub fn derivative(&self, t: f64) -> Point2 {
        let (k, _) = self.locate(t);
        let (a, b) = self.segment(k);
        let s = self.span(k);
        [(b[0] - a[0]) / s, (b[1] - a[1]) / s]
    }

    /// Distance from `q` to the polygon.
    pub fn distance_to(&self, q: Point2) -> f64 {
        (0..self.len())
            .map(|i| {
                let (a, b) = self.segment(i);
                point_segment_distance(q, a, b).0
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Default geometric tolerance: `1e-9 × length`.
    pub fn default_tolerance(&self) -> f64 {
        1e-9 * self.length()
    }

    pub fn transformed(&self, f: impl Fn(Point2) -> Point2) -> Result<Self> {
        Self::with_params(self.params.clone(), self.points.iter().map(|p| f(*p)).collect())
    }

    pub fn to_file(&self) -> CurveFile {
        CurveFile { n: self.len(), points: self.points.clone() }
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let file: CurveFile = serde_json::from_str(s).map_err(|e| Error::Parse(format!("curve file: {e}")))?;
        file.into_curve()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }
}

/// On-disk curve format: `{ "n": 4, "points": [[x, y], ...] }` with implicit
/// uniform parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveFile {
    pub n: usize,
    pub points: Vec<Point2>,
}

impl CurveFile {
    pub fn into_curve(self) -> Result<ClosedCurve> {
        if self.n != self.points.len() {
            return Err(Error::InvalidCurve {
                index: self.n.min(self.points.len()),
                reason: format!("declared n = {} but {} points given", self.n, self.points.len()),
            });
        }
        ClosedCurve::new(self.points)
    }
}

/// Resample at `n` points equally spaced in arc length along the polygon,
/// starting at the first sample. Parameters become `2πk/n`.
pub fn resample_arclength(curve: &ClosedCurve, n: usize) -> Result<ClosedCurve> {
    if n < 3 {
        return Err(Error::Domain(format!("resample count must be at least 3, got {n}")));
    }
    let seg = curve.segment_lengths();
    let mut cum = Vec::with_capacity(seg.len() + 1);
    cum.push(0.0);
    for s in &seg {
        cum.push(cum.last().unwrap() + s);
    }
    let total = *cum.last().unwrap();
    let m = curve.len();
    let points = (0..n)
        .map(|k| {
            let s = total * k as f64 / n as f64;
            let i = (cum.partition_point(|&c| c <= s) - 1).min(m - 1);
            let f = ((s - cum[i]) / seg[i]).clamp(0.0, 1.0);
            let (a, b) = curve.segment(i);
            [a[0] + f * (b[0] - a[0]), a[1] + f * (b[1] - a[1])]
        })
        .collect();
    ClosedCurve::new(points)
}

/// The curve lifted to 4-space, `γ_ε(t) = (γ(t), ε cos t, ε sin t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedCurve {
    base: ClosedCurve,
    epsilon: f64,
    points4: Vec<Point4>,
}

pub fn lift(curve: &ClosedCurve, epsilon: f64) -> Result<LiftedCurve> {
    if !(epsilon >= 0.0) || !epsilon.is_finite() {
        return Err(Error::Domain(format!("lift magnitude must be finite and >= 0, got {epsilon}")));
    }
    let points4 = curve
        .params()
        .iter()
        .zip(curve.points())
        .map(|(&t, p)| [p[0], p[1], epsilon * t.cos(), epsilon * t.sin()])
        .collect();
    Ok(LiftedCurve { base: curve.clone(), epsilon, points4 })
}

impl LiftedCurve {
    pub fn base(&self) -> &ClosedCurve {
        &self.base
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn points4(&self) -> &[Point4] {
        &self.points4
    }

    /// Piecewise-linear interpolation of the lifted samples in parameter.
    pub fn eval(&self, t: f64) -> Point4 {
        let n = self.points4.len();
        let (k, f) = self.base.locate(t);
        let a = self.points4[k];
        let b = self.points4[(k + 1) % n];
        std::array::from_fn(|c| a[c] + f * (b[c] - a[c]))
    }

    /// Right derivative of the interpolant.
    pub fn derivative(&self, t: f64) -> Point4 {
        let n = self.points4.len();
        let (k, _) = self.base.locate(t);
        let a = self.points4[k];
        let b = self.points4[(k + 1) % n];
        let s = self.base.span(k);
        std::array::from_fn(|c| (b[c] - a[c]) / s)
    }

    /// `sup |γ_ε|` over the samples.
    pub fn sup_norm(&self) -> f64 {
        self.points4.iter().map(|p| dist4(p, &[0.0; 4])).fold(0.0, f64::max)
    }
}

/// Smallest 4-space distance between lifted samples whose parameters are at
/// least `param_gap` apart on the circle.
pub fn min_lift_separation(lifted: &LiftedCurve, param_gap: f64) -> Result<f64> {
    if !(param_gap > 0.0) {
        return Err(Error::Domain(format!("param_gap must be positive, got {param_gap}")));
    }
    if param_gap >= PI {
        return Err(Error::Domain(format!(
            "param_gap must be below π (no admissible pairs otherwise), got {param_gap}"
        )));
    }
    let t = lifted.base.params();
    let p = &lifted.points4;
    let mut best = f64::INFINITY;
    for i in 0..p.len() {
        for j in i + 1..p.len() {
            if circular_distance(t[i], t[j]) >= param_gap {
                best = best.min(dist4(&p[i], &p[j]));
            }
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CrossingKind {
    Transverse,
    TangentialWithinTolerance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    pub params: (f64, f64),
    pub location: Point2,
    pub kind: CrossingKind,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IntersectionReport {
    pub crossings: Vec<Crossing>,
}

impl IntersectionReport {
    pub fn count(&self, kind: CrossingKind) -> usize {
        self.crossings.iter().filter(|c| c.kind == kind).count()
    }
}

/// Closest points between segments `[a, b]` and `[c, d]`: distance and the two
/// segment fractions.
fn segment_segment(a: Point2, b: Point2, c: Point2, d: Point2) -> (f64, f64, f64) {
    let r = sub2(b, a);
    let s = sub2(d, c);
    let denom = cross2(r, s);
    if denom != 0.0 {
        let qp = sub2(c, a);
        let u = cross2(qp, s) / denom;
        let v = cross2(qp, r) / denom;
        if (0.0..=1.0).contains(&u) && (0.0..=1.0).contains(&v) {
            return (0.0, u, v);
        }
    }
    let mut best = (f64::INFINITY, 0.0, 0.0);
    let (d1, f1) = point_segment_distance(a, c, d);
    if d1 < best.0 {
        best = (d1, 0.0, f1);
    }
    let (d2, f2) = point_segment_distance(b, c, d);
    if d2 < best.0 {
        best = (d2, 1.0, f2);
    }
    let (d3, f3) = point_segment_distance(c, a, b);
    if d3 < best.0 {
        best = (d3, f3, 0.0);
    }
    let (d4, f4) = point_segment_distance(d, a, b);
    if d4 < best.0 {
        best = (d4, f4, 1.0);
    }
    best
}

fn circular_index_distance(a: usize, b: usize, n: usize) -> usize {
    let d = a.abs_diff(b);
    d.min(n - d)
}

/// Proximities below `tol` between non-adjacent segments, clustered so that
/// one geometric contact yields one entry.
///
/// A contact is transverse when the strands' local chord directions have a
/// nonzero crossing sign beyond the local sampling turn; otherwise it is
/// reported as tangential.
pub fn self_intersections(curve: &ClosedCurve, tol: f64) -> IntersectionReport {
    let n = curve.len();
    struct Hit {
        i: usize,
        j: usize,
        dist: f64,
        u: f64,
        v: f64,
    }
    let mut hits = Vec::new();
    for i in 0..n {
        let (a, b) = curve.segment(i);
        for j in i + 2..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            let (c, d) = curve.segment(j);
            let (dist, u, v) = segment_segment(a, b, c, d);
            if dist <= tol {
                hits.push(Hit { i, j, dist, u, v });
            }
        }
    }

    // union-find over hits that touch the same pair of strands
    let mut parent: Vec<usize> = (0..hits.len()).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        let mut y = x;
        while p[y] != r {
            let next = p[y];
            p[y] = r;
            y = next;
        }
        r
    }
    for a in 0..hits.len() {
        for b in a + 1..hits.len() {
            let near = |x: usize, y: usize| circular_index_distance(x, y, n) <= 2;
            let (ha, hb) = (&hits[a], &hits[b]);
            if (near(ha.i, hb.i) && near(ha.j, hb.j)) || (near(ha.i, hb.j) && near(ha.j, hb.i)) {
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                if ra != rb {
                    parent[ra.max(rb)] = ra.min(rb);
                }
            }
        }
    }

    let turns = curve.corner_angles();
    let mut crossings = Vec::new();
    for root in 0..hits.len() {
        if find(&mut parent, root) != root {
            continue;
        }
        let rep = (0..hits.len())
            .filter(|&k| find(&mut parent, k) == root)
            .min_by(|&x, &y| hits[x].dist.total_cmp(&hits[y].dist))
            .unwrap();
        let h = &hits[rep];
        let param_at = |seg: usize, f: f64| wrap_angle(curve.params()[seg] + f * curve.span(seg));
        let t1 = param_at(h.i, h.u);
        let t2 = param_at(h.j, h.v);
        let p1 = curve.eval(t1);
        let p2 = curve.eval(t2);
        let location = [(p1[0] + p2[0]) / 2.0, (p1[1] + p2[1]) / 2.0];

        // chord tangents one segment either side of each contact
        let tangent = |seg: usize| {
            let before = curve.points()[(seg + n - 1) % n];
            let after = curve.points()[(seg + 2) % n];
            let t = sub2(after, before);
            let l = norm2(t);
            [t[0] / l, t[1] / l]
        };
        let ta = tangent(h.i);
        let tb = tangent(h.j);
        let local_turn = [h.i, h.i + 1, h.j, h.j + 1].iter().map(|&k| turns[k % n].abs()).fold(0.0, f64::max);
        let sin_tol = (2.0 * local_turn).sin().abs().max(1e-9);
        let kind = if cross2(ta, tb).abs() > sin_tol {
            CrossingKind::Transverse
        } else {
            CrossingKind::TangentialWithinTolerance
        };
        crossings.push(Crossing { params: (t1, t2), location, kind });
    }
    IntersectionReport { crossings }
}

/// Total signed turning of `γ − q`, in radians.
pub(crate) fn turning_angle(points: &[Point2], q: Point2) -> f64 {
    let n = points.len();
    let mut total = 0.0;
    for i in 0..n {
        let a = sub2(points[i], q);
        let b = sub2(points[(i + 1) % n], q);
        total += cross2(a, b).atan2(dot2(a, b));
    }
    total
}

/// Winding number of the curve around `point`, using the default tolerance.
pub fn winding_number(curve: &ClosedCurve, point: Point2) -> Result<i64> {
    winding_number_with_tol(curve, point, curve.default_tolerance())
}

pub fn winding_number_with_tol(curve: &ClosedCurve, point: Point2, tol: f64) -> Result<i64> {
    if curve.distance_to(point) <= tol {
        return Err(Error::IndeterminateWinding { x: point[0], y: point[1], tol });
    }
    let w = turning_angle(curve.points(), point) / TAU;
    let r = w.round();
    if (w - r).abs() > 0.25 {
        return Err(Error::IndeterminateWinding { x: point[0], y: point[1], tol });
    }
    Ok(r as i64)
}
