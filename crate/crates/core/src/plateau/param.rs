//! Weakly monotone boundary reparametrizations and the projections that keep
//! descent iterates inside that set.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::curve::wrap_angle;
use crate::error::{Error, Result};

/// A boundary vertex held at a fixed curve parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pin {
    /// Boundary loop index (`0`, `B/3` or `2B/3`).
    pub index: usize,
    /// Curve parameter on the real-line lift of the parametrization.
    pub param: f64,
}

/// Boundary indices of the three pinned vertices, at `θ = 2kπ/3`.
pub fn pin_indices(boundary_count: usize) -> [usize; 3] {
    [0, boundary_count / 3, 2 * boundary_count / 3]
}

/// Discrete `φ`: one curve parameter per boundary vertex.
///
/// Stored as its monotone real-line lift: `lifted[0]` lies in `[0, 2π)`,
/// the sequence is nondecreasing, and `lifted[B-1] ≤ lifted[0] + 2π`, the
/// closing value standing for `φ(2π) = φ(0) + 2π`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryParam {
    lifted: Vec<f64>,
    pins: [Pin; 3],
}

impl BoundaryParam {
    /// Validating constructor.
    pub fn new(lifted: Vec<f64>, pins: [Pin; 3]) -> Result<Self> {
        let p = Self { lifted, pins };
        p.check()?;
        Ok(p)
    }

    /// The parametrization through the pins that is linear in `θ` between
    /// consecutive pins. When the pins sit at `0, 2π/3, 4π/3` this is the
    /// identity.
    pub fn pin_interpolant(boundary_count: usize, pins: [Pin; 3]) -> Result<Self> {
        check_pin_layout(boundary_count, &pins)?;
        let mut lifted = vec![0.0; boundary_count];
        for a in 0..3 {
            let (i0, v0) = (pins[a].index, pins[a].param);
            let (i1, v1) =
                if a == 2 { (boundary_count, pins[0].param + TAU) } else { (pins[a + 1].index, pins[a + 1].param) };
            for (i, slot) in lifted.iter_mut().enumerate().take(i1).skip(i0) {
                *slot = v0 + (v1 - v0) * (i - i0) as f64 / (i1 - i0) as f64;
            }
        }
        Self::new(lifted, pins)
    }

    fn check(&self) -> Result<()> {
        let b = self.lifted.len();
        check_pin_layout(b, &self.pins)?;
        if let Some(i) = self.lifted.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("non-finite parameter at boundary vertex {i}")));
        }
        if !(0.0..TAU).contains(&self.lifted[0]) {
            return Err(Error::Domain("first parameter must lie in [0, 2π)".into()));
        }
        for i in 1..b {
            if self.lifted[i] < self.lifted[i - 1] {
                return Err(Error::Domain(format!("parametrization decreases at boundary vertex {i}")));
            }
        }
        if self.lifted[b - 1] > self.lifted[0] + TAU {
            return Err(Error::Domain("parametrization winds more than once".into()));
        }
        for pin in &self.pins {
            if self.lifted[pin.index] != pin.param {
                return Err(Error::Domain(format!("pinned vertex {} moved off its parameter", pin.index)));
            }
        }
        Ok(())
    }

    /// True when the monotone-lift and pin invariants hold exactly.
    pub fn is_valid(&self) -> bool {
        self.check().is_ok()
    }

    pub fn len(&self) -> usize {
        self.lifted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lifted.is_empty()
    }

    pub fn lifted(&self) -> &[f64] {
        &self.lifted
    }

    pub fn pins(&self) -> [Pin; 3] {
        self.pins
    }

    /// Values reduced to `[0, 2π)`.
    pub fn values(&self) -> Vec<f64> {
        self.lifted.iter().map(|&v| wrap_angle(v)).collect()
    }

    /// First boundary index whose reduced value wrapped past `2π`, or `None`
    /// if no wrap occurs.
    pub fn wrap_index(&self) -> Option<usize> {
        self.lifted.iter().position(|&v| v >= TAU)
    }

    /// Increments `φ_{i+1} − φ_i` around the loop, including the closing one.
    pub fn gaps(&self) -> Vec<f64> {
        let b = self.lifted.len();
        (0..b)
            .map(
                |i| {
                    if i + 1 < b {
                        self.lifted[i + 1] - self.lifted[i]
                    } else {
                        self.lifted[0] + TAU - self.lifted[i]
                    }
                },
            )
            .collect()
    }

    /// Largest increment between adjacent boundary vertices.
    pub fn max_jump(&self) -> (usize, f64) {
        self.gaps()
            .into_iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, g)| if g > best.1 { (i, g) } else { best })
    }

    /// Largest pointwise difference to another parametrization with the same
    /// pins, measured on the lifts.
    pub fn sup_distance(&self, other: &Self) -> f64 {
        self.lifted.iter().zip(&other.lifted).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    /// Evaluate the lift at a domain angle, linearly between vertices.
    pub fn eval_lifted(&self, boundary_angles: &[f64], theta: f64) -> f64 {
        let b = self.lifted.len();
        let th = wrap_angle(theta);
        let k = boundary_angles.partition_point(|&a| a <= th).saturating_sub(1);
        let (a0, v0) = (boundary_angles[k], self.lifted[k]);
        let (a1, v1) = if k + 1 < b {
            (boundary_angles[k + 1], self.lifted[k + 1])
        } else {
            (boundary_angles[0] + TAU, self.lifted[0] + TAU)
        };
        v0 + (v1 - v0) * ((th - a0) / (a1 - a0)).clamp(0.0, 1.0)
    }

    /// Shift the free values by `delta` and project back; pins never move.
    pub(crate) fn moved(&self, delta: &[f64], gap_cap: Option<f64>) -> Result<Self> {
        let mut raw = self.lifted.clone();
        for (v, d) in raw.iter_mut().zip(delta) {
            *v += d;
        }
        for pin in &self.pins {
            raw[pin.index] = pin.param;
        }
        let lifted = project_monotone(&raw, &self.pins, gap_cap);
        Self::new(lifted, self.pins)
    }

    /// Return a copy with one value overwritten, bypassing validation. Used
    /// only for fault injection in tests.
    #[doc(hidden)]
    pub fn with_raw_value(&self, index: usize, value: f64) -> Self {
        let mut p = self.clone();
        p.lifted[index] = value;
        p
    }
}

fn check_pin_layout(boundary_count: usize, pins: &[Pin; 3]) -> Result<()> {
    if boundary_count < 3 || !boundary_count.is_multiple_of(3) {
        return Err(Error::Config(format!("boundary count {boundary_count} cannot host three pins")));
    }
    let want = pin_indices(boundary_count);
    for (pin, &idx) in pins.iter().zip(&want) {
        if pin.index != idx {
            return Err(Error::Domain(format!("pin at boundary index {} expected at {idx}", pin.index)));
        }
    }
    if !(pins[0].param >= 0.0 && pins[0].param < TAU)
        || !(pins[1].param > pins[0].param && pins[2].param > pins[1].param)
        || !(pins[2].param < pins[0].param + TAU)
    {
        return Err(Error::Domain("pin parameters must be in cyclic order within one turn".into()));
    }
    Ok(())
}

/// Weighted pool-adjacent-violators: least-squares nondecreasing fit.
pub fn pava(y: &[f64]) -> Vec<f64> {
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(y.len());
    for &v in y {
        blocks.push((v, 1));
        while blocks.len() > 1 {
            let (v2, w2) = blocks[blocks.len() - 1];
            let (v1, w1) = blocks[blocks.len() - 2];
            if v1 <= v2 {
                break;
            }
            blocks.pop();
            let w = w1 + w2;
            *blocks.last_mut().unwrap() = ((v1 * w1 as f64 + v2 * w2 as f64) / w as f64, w);
        }
    }
    blocks.into_iter().flat_map(|(v, w)| std::iter::repeat_n(v, w)).collect()
}

/// Projection onto `{lo ≤ x_1 ≤ … ≤ x_m ≤ hi}`.
fn project_ordered(y: &[f64], lo: f64, hi: f64) -> Vec<f64> {
    pava(y).into_iter().map(|v| v.clamp(lo, hi)).collect()
}

/// Projection onto `{x_{i+1} − x_i ≤ c}` with `x_0 = lo`, `x_{m+1} = hi`.
/// With `z_i = x_i − c·i` this is an antitonic fit clipped to the endpoints.
fn project_gaps(y: &[f64], lo: f64, hi: f64, c: f64) -> Vec<f64> {
    let m = y.len();
    let neg: Vec<f64> = y.iter().enumerate().map(|(i, v)| -(v - c * (i + 1) as f64)).collect();
    let zlo = hi - c * (m + 1) as f64;
    pava(&neg).into_iter().enumerate().map(|(i, v)| (-v).clamp(zlo, lo) + c * (i + 1) as f64).collect()
}

fn gaps_ok(x: &[f64], lo: f64, hi: f64, c: f64) -> bool {
    let tol = 1e-12 * (1.0 + c);
    let mut prev = lo;
    for &v in x {
        if v - prev > c + tol {
            return false;
        }
        prev = v;
    }
    hi - prev <= c + tol
}

/// Projection of one inter-pin arc: ordered between `lo` and `hi`, and, if
/// `cap` is given, with every increment at most `cap`. The capped case
/// alternates the two projections with Dykstra corrections and finishes on
/// the ordered set so monotonicity is exact.
fn project_arc(y: &[f64], lo: f64, hi: f64, cap: Option<f64>) -> Vec<f64> {
    let ordered = project_ordered(y, lo, hi);
    let Some(cap) = cap else { return ordered };
    let m = y.len();
    // never tighter than what the arc can accommodate
    let c = cap.max(1.25 * (hi - lo) / (m + 1) as f64);
    if gaps_ok(&ordered, lo, hi, c) {
        return ordered;
    }
    let mut x = y.to_vec();
    let mut p = vec![0.0; m];
    let mut q = vec![0.0; m];
    for _ in 0..500 {
        let xp: Vec<f64> = x.iter().zip(&p).map(|(a, b)| a + b).collect();
        let a = project_ordered(&xp, lo, hi);
        for i in 0..m {
            p[i] = xp[i] - a[i];
        }
        let aq: Vec<f64> = a.iter().zip(&q).map(|(u, v)| u + v).collect();
        let next = project_gaps(&aq, lo, hi, c);
        for i in 0..m {
            q[i] = aq[i] - next[i];
        }
        let change = next.iter().zip(&x).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max);
        x = next;
        if change < 1e-13 && gaps_ok(&a, lo, hi, c) {
            break;
        }
    }
    project_ordered(&x, lo, hi)
}

/// Project raw lifted values onto the monotone set through the pins, arc by
/// arc. With `gap_cap = None` this is plain isotonic regression.
pub fn project_monotone(raw: &[f64], pins: &[Pin; 3], gap_cap: Option<f64>) -> Vec<f64> {
    let b = raw.len();
    let mut out = raw.to_vec();
    for a in 0..3 {
        let (i0, lo) = (pins[a].index, pins[a].param);
        let (i1, hi) = if a == 2 { (b, pins[0].param + TAU) } else { (pins[a + 1].index, pins[a + 1].param) };
        out[i0] = lo;
        if i1 > i0 + 1 {
            let arc = project_arc(&raw[i0 + 1..i1], lo, hi, gap_cap);
            out[i0 + 1..i1].copy_from_slice(&arc);
        }
    }
    out
}
