//! The explicit null homotopy: the first half of time sweeps the limit disk
//! outward from its centre, the second half slides the boundary
//! parametrization from `φ₀` to the identity.

use std::f64::consts::TAU;
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::continuation::LimitResult;
use crate::curve::{cross2, sub2, wrap_angle, ClosedCurve, Point2};
use crate::diskmesh::{map_area, DiskMap, MeshLocator};
use crate::error::{Error, Result};
use crate::plateau::BoundaryParam;
use crate::report::{fmt12, write_json, write_text};

/// Default `φ₀` jump tolerance: four mesh spacings of `4π/B`.
pub fn default_phi_jump_tol(boundary_count: usize) -> f64 {
    4.0 * (2.0 * TAU / boundary_count as f64)
}

#[derive(Debug, Clone)]
pub struct Homotopy {
    u0: DiskMap,
    phi0: BoundaryParam,
    curve: ClosedCurve,
    locator: MeshLocator,
}

/// Which half of the piecewise formula to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Disk,
    Reparam,
}

/// One time slice of the homotopy.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Frame {
    pub t: f64,
    pub points: Vec<Point2>,
}

impl Frame {
    pub fn diameter(&self) -> f64 {
        let mut d: f64 = 0.0;
        for a in &self.points {
            for b in &self.points {
                d = d.max(crate::curve::dist2(*a, *b));
            }
        }
        d
    }

    /// The frame as a polygon, if it is a valid closed curve.
    pub fn to_curve(&self) -> Result<ClosedCurve> {
        ClosedCurve::new(self.points.clone())
    }
}

/// Build `h₀` from the planar limit, checking that `φ₀` has no jump larger
/// than `phi_jump_tol` (defaulting to [`default_phi_jump_tol`]).
pub fn build_null_homotopy(limit: &LimitResult, curve: &ClosedCurve, phi_jump_tol: Option<f64>) -> Result<Homotopy> {
    let nb = limit.u0.mesh().boundary_count();
    let tol = phi_jump_tol.unwrap_or_else(|| default_phi_jump_tol(nb));
    let (i, jump) = limit.phi0.max_jump();
    if jump > tol {
        return Err(Error::DiscontinuousParam { from: i, to: (i + 1) % nb, jump, tol });
    }
    Homotopy::from_parts(limit.u0.clone(), limit.phi0.clone(), curve.clone())
}

impl Homotopy {
    /// Assemble without the continuity check.
    pub fn from_parts(u0: DiskMap, phi0: BoundaryParam, curve: ClosedCurve) -> Result<Self> {
        if u0.dim() != 2 {
            return Err(Error::Domain("homotopy needs a planar disk map".into()));
        }
        if phi0.len() != u0.mesh().boundary_count() {
            return Err(Error::Domain("parametrization does not match the mesh boundary".into()));
        }
        let locator = MeshLocator::new(u0.mesh());
        Ok(Self { u0, phi0, curve, locator })
    }

    pub fn u0(&self) -> &DiskMap {
        &self.u0
    }

    pub fn phi0(&self) -> &BoundaryParam {
        &self.phi0
    }

    pub fn curve(&self) -> &ClosedCurve {
        &self.curve
    }

    /// `h₀(t, θ)` on the requested branch.
    pub fn eval(&self, branch: Branch, t: f64, theta: f64) -> Point2 {
        match branch {
            Branch::Disk => {
                let r = (2.0 * t).min(1.0);
                let v = self.u0.eval_at(&self.locator, [r * theta.cos(), r * theta.sin()]);
                [v[0], v[1]]
            }
            Branch::Reparam => {
                let th = wrap_angle(theta);
                let phi = self.phi0.eval_lifted(self.u0.mesh().boundary_angles(), th);
                self.curve.eval((2.0 - 2.0 * t) * phi + (2.0 * t - 1.0) * th)
            }
        }
    }

    fn branch_for(t: f64) -> Branch {
        if t < 0.5 {
            Branch::Disk
        } else {
            Branch::Reparam
        }
    }

    fn frame_on(&self, branch: Branch, t: f64, n: usize) -> Frame {
        let points = (0..n).map(|k| self.eval(branch, t, TAU * k as f64 / n as f64)).collect();
        Frame { t, points }
    }

    /// Largest distance between the two branches at `t = 1/2`.
    pub fn interface_gap(&self, n: usize) -> f64 {
        let a = self.frame_on(Branch::Disk, 0.5, n);
        let b = self.frame_on(Branch::Reparam, 0.5, n);
        a.points.iter().zip(&b.points).map(|(p, q)| crate::curve::dist2(*p, *q)).fold(0.0, f64::max)
    }
}

/// The frame at time `t` sampled at `n` equally spaced angles.
pub fn sample_frame(h: &Homotopy, t: f64, n: usize) -> Result<Frame> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::Domain(format!("time {t} outside [0, 1]")));
    }
    if n < 3 {
        return Err(Error::Domain(format!("need at least 3 samples per frame, got {n}")));
    }
    Ok(h.frame_on(Homotopy::branch_for(t), t, n))
}

/// Swept area split by half.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweptArea {
    pub total: f64,
    pub first_half: f64,
    pub second_half: f64,
}

fn quad_area(a: Point2, b: Point2, c: Point2, d: Point2) -> f64 {
    0.5 * (cross2(sub2(b, a), sub2(c, a)).abs() + cross2(sub2(c, a), sub2(d, a)).abs())
}

/// Unsigned area of the space-time quad mesh spanned by `time_steps` frames
/// on `[t0, t1]` with `n` angles each.
fn swept_on(h: &Homotopy, branch: Branch, t0: f64, t1: f64, time_steps: usize, n: usize) -> f64 {
    let frames: Vec<Frame> = (0..time_steps)
        .into_par_iter()
        .map(|j| h.frame_on(branch, t0 + (t1 - t0) * j as f64 / (time_steps - 1) as f64, n))
        .collect();
    frames
        .windows(2)
        .map(|w| {
            (0..n)
                .map(|k| {
                    let k1 = (k + 1) % n;
                    quad_area(w[0].points[k], w[0].points[k1], w[1].points[k1], w[1].points[k])
                })
                .sum::<f64>()
        })
        .sum()
}

/// Area swept by the frame family. Each half gets its own grid of
/// `time_steps` times so the interface is sampled from both branches.
pub fn homotopy_swept_area(h: &Homotopy, time_steps: usize, n: usize) -> Result<SweptArea> {
    if time_steps < 2 {
        return Err(Error::Domain(format!("time_steps must be at least 2, got {time_steps}")));
    }
    if n < 3 {
        return Err(Error::Domain(format!("need at least 3 samples per frame, got {n}")));
    }
    let first_half = swept_on(h, Branch::Disk, 0.0, 0.5, time_steps, n);
    let second_half = swept_on(h, Branch::Reparam, 0.5, 1.0, time_steps, n);
    Ok(SweptArea { total: first_half + second_half, first_half, second_half })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArchiveMeta {
    pub time_steps: usize,
    pub n: usize,
    pub area: f64,
    pub u0_area: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrameArchive {
    pub meta: ArchiveMeta,
    pub frames: Vec<Frame>,
}

/// Frames at `t = j / (time_steps − 1)`.
pub fn frame_archive(h: &Homotopy, time_steps: usize, n: usize) -> Result<FrameArchive> {
    let swept = homotopy_swept_area(h, time_steps, n)?;
    let frames =
        (0..time_steps).map(|j| sample_frame(h, j as f64 / (time_steps - 1) as f64, n)).collect::<Result<Vec<_>>>()?;
    Ok(FrameArchive { meta: ArchiveMeta { time_steps, n, area: swept.total, u0_area: map_area(h.u0()) }, frames })
}

/// Closed-path drawing of one frame on a canvas fitted to `bbox`.
pub fn frame_svg(frame: &Frame, bbox: (Point2, Point2)) -> String {
    let (lo, hi) = bbox;
    let span = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1e-12);
    let pad = 0.1 * span;
    let size = 512.0;
    let scale = size / (span + 2.0 * pad);
    let map = |p: Point2| ((p[0] - lo[0] + pad) * scale, (hi[1] - p[1] + pad) * scale);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let mut d = String::new();
    for (k, p) in frame.points.iter().enumerate() {
        let (x, y) = map(*p);
        let _ = write!(d, "{}{} {} ", if k == 0 { "M" } else { "L" }, fmt12(x), fmt12(y));
    }
    d.push('Z');
    let _ = writeln!(s, r#"<path d="{d}" fill="none" stroke="black" stroke-width="1.5"/>"#);
    let _ = writeln!(s, r#"<text x="8" y="20" font-family="monospace" font-size="14">t = {}</text>"#, fmt12(frame.t));
    s.push_str("</svg>\n");
    s
}

/// Write `frames.json` and, if requested, `frame_XXX.svg` per frame.
pub fn export_frames(
    h: &Homotopy,
    time_steps: usize,
    n: usize,
    dir: impl AsRef<Path>,
    svg: bool,
) -> Result<FrameArchive> {
    let archive = frame_archive(h, time_steps, n)?;
    write_frames(&archive, h.curve().bounding_box(), dir, svg)?;
    Ok(archive)
}

pub(crate) fn write_frames(
    archive: &FrameArchive,
    bbox: (Point2, Point2),
    dir: impl AsRef<Path>,
    svg: bool,
) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    write_json(dir.join("frames.json"), archive)?;
    if svg {
        for (j, f) in archive.frames.iter().enumerate() {
            write_text(dir.join(format!("frame_{j:03}.svg")), &frame_svg(f, bbox))?;
        }
    }
    Ok(())
}
