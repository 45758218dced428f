//! Triangulated unit disk, piecewise-linear maps on it, and the energy, area
//! and harmonic-extension machinery.

use std::f64::consts::TAU;
use std::fmt::Write as _;
use std::sync::Arc;

use nalgebra::DMatrix;
use nalgebra_sparse::factorization::CscCholesky;
use nalgebra_sparse::{CooMatrix, CscMatrix, CsrMatrix};

use crate::curve::{cross2, dot2, sub2, wrap_angle, Point2};
use crate::error::{Error, Result};
use crate::report::fmt12;

/// Smallest admissible triangle area.
pub const MIN_TRIANGLE_AREA: f64 = 1e-14;

/// A triangulated closed unit disk.
///
/// Vertex 0 is the centre; vertices are numbered ring by ring outward and the
/// last ring is the boundary loop, with boundary vertex `k` at angle
/// `2πk / boundary_count`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiskMesh {
    vertices: Vec<Point2>,
    triangles: Vec<[usize; 3]>,
    boundary: Vec<usize>,
    boundary_angles: Vec<f64>,
    areas: Vec<f64>,
}

fn signed_area(a: Point2, b: Point2, c: Point2) -> f64 {
    0.5 * cross2(sub2(b, a), sub2(c, a))
}

/// Cotangent of the angle at `c` in triangle `(a, b, c)`.
fn cot_at(a: Point2, b: Point2, c: Point2) -> f64 {
    let u = sub2(a, c);
    let w = sub2(b, c);
    dot2(u, w) / cross2(u, w).abs()
}

/// Vertex counts per ring, innermost first. Counts are drawn from
/// `boundary_count / 2^k` so that ring transitions stay regular, and track
/// `2πj` so that triangles near the centre are close to equilateral.
fn ring_counts(rings: usize, boundary_count: usize) -> Vec<usize> {
    let mut candidates = vec![boundary_count];
    let mut c = boundary_count;
    while c.is_multiple_of(2) && c / 2 >= 3 {
        c /= 2;
        candidates.push(c);
    }
    let mut counts: Vec<usize> = Vec::with_capacity(rings);
    for j in 1..=rings {
        if j == rings {
            counts.push(boundary_count);
            continue;
        }
        let target = TAU * j as f64;
        let mut best = *candidates
            .iter()
            .min_by(|a, b| {
                let da = (**a as f64 / target).ln().abs();
                let db = (**b as f64 / target).ln().abs();
                da.total_cmp(&db).then(a.cmp(b))
            })
            .unwrap();
        if let Some(&prev) = counts.last() {
            best = best.max(prev);
        }
        counts.push(best);
    }
    counts
}

/// Concentric-ring triangulation with radii `j / rings` and
/// `boundary_count` vertices on the unit circle.
pub fn build_disk_mesh(rings: usize, boundary_count: usize) -> Result<DiskMesh> {
    if rings < 1 {
        return Err(Error::Config("rings must be at least 1".into()));
    }
    if boundary_count < 12 || !boundary_count.is_multiple_of(3) {
        return Err(Error::Config(format!("boundary_count must be >= 12 and divisible by 3, got {boundary_count}")));
    }
    let counts = ring_counts(rings, boundary_count);
    let mut vertices = vec![[0.0, 0.0]];
    let mut ring_idx: Vec<Vec<usize>> = Vec::with_capacity(rings);
    for (j, &n) in counts.iter().enumerate() {
        let r = (j + 1) as f64 / rings as f64;
        let idx: Vec<usize> = (0..n)
            .map(|k| {
                let a = TAU * k as f64 / n as f64;
                vertices.push(if j + 1 == rings {
                    // exact unit circle for the boundary ring
                    [a.cos(), a.sin()]
                } else {
                    [r * a.cos(), r * a.sin()]
                });
                vertices.len() - 1
            })
            .collect();
        ring_idx.push(idx);
    }

    let mut triangles = Vec::new();
    let first = &ring_idx[0];
    for k in 0..first.len() {
        triangles.push([0, first[k], first[(k + 1) % first.len()]]);
    }
    for w in ring_idx.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let (na, nb) = (a.len(), b.len());
        let (mut i, mut k) = (0, 0);
        while i < na || k < nb {
            let advance_outer = k < nb && (i == na || (k + 1) * na <= (i + 1) * nb);
            if advance_outer {
                triangles.push([a[i % na], b[k % nb], b[(k + 1) % nb]]);
                k += 1;
            } else {
                triangles.push([a[i % na], b[k % nb], a[(i + 1) % na]]);
                i += 1;
            }
        }
    }
    delaunay_flips(&vertices, &mut triangles);

    let boundary = ring_idx.pop().unwrap();
    let boundary_angles = (0..boundary_count).map(|k| TAU * k as f64 / boundary_count as f64).collect();
    DiskMesh::from_parts(vertices, triangles, boundary, boundary_angles)
}

/// Lawson edge flips until every interior edge has a nonnegative cotangent
/// weight. Edges are visited in sorted order for reproducibility.
fn delaunay_flips(vertices: &[Point2], triangles: &mut [[usize; 3]]) {
    loop {
        let mut edges: Vec<((usize, usize), usize, usize)> = Vec::with_capacity(triangles.len() * 3);
        for (t, tri) in triangles.iter().enumerate() {
            for a in 0..3 {
                let (i, j) = (tri[a], tri[(a + 1) % 3]);
                edges.push(((i.min(j), i.max(j)), t, tri[(a + 2) % 3]));
            }
        }
        edges.sort_unstable();
        let mut touched = vec![false; triangles.len()];
        let mut flipped = 0;
        for pair in edges.windows(2) {
            let ((e1, t1, k1), (e2, t2, k2)) = (pair[0], pair[1]);
            if e1 != e2 || touched[t1] || touched[t2] {
                continue;
            }
            let (i, j) = e1;
            let (pi, pj) = (vertices[i], vertices[j]);
            let weight = cot_at(pi, pj, vertices[k1]) + cot_at(pi, pj, vertices[k2]);
            if weight >= -1e-12 {
                continue;
            }
            let mut n1 = [k1, i, k2];
            let mut n2 = [k2, j, k1];
            for tri in [&mut n1, &mut n2] {
                if signed_area(vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]) < 0.0 {
                    tri.swap(1, 2);
                }
            }
            triangles[t1] = n1;
            triangles[t2] = n2;
            touched[t1] = true;
            touched[t2] = true;
            flipped += 1;
        }
        if flipped == 0 {
            break;
        }
    }
}

impl DiskMesh {
    /// Assemble and validate a mesh.
    pub fn from_parts(
        vertices: Vec<Point2>,
        triangles: Vec<[usize; 3]>,
        boundary: Vec<usize>,
        boundary_angles: Vec<f64>,
    ) -> Result<Self> {
        let nv = vertices.len();
        if boundary.len() != boundary_angles.len() || boundary.len() < 3 {
            return Err(Error::MeshQuality("boundary loop needs >= 3 vertices with angles".into()));
        }
        for (k, (&b, &a)) in boundary.iter().zip(&boundary_angles).enumerate() {
            if b >= nv {
                return Err(Error::MeshQuality(format!("boundary vertex {b} out of range")));
            }
            let p = vertices[b];
            if ((p[0] * p[0] + p[1] * p[1]).sqrt() - 1.0).abs() > 1e-12 {
                return Err(Error::MeshQuality(format!("boundary vertex {b} is off the unit circle")));
            }
            if (wrap_angle(p[1].atan2(p[0])) - a).abs() > 1e-9 && (a - TAU).abs() > 1e-9 {
                let d = crate::curve::circular_distance(p[1].atan2(p[0]), a);
                if d > 1e-9 {
                    return Err(Error::MeshQuality(format!("boundary vertex {b} does not sit at its angle {a}")));
                }
            }
            if k > 0 && !(a > boundary_angles[k - 1]) {
                return Err(Error::MeshQuality("boundary angles must increase strictly".into()));
            }
        }
        if !(boundary_angles[0] >= 0.0 && *boundary_angles.last().unwrap() < TAU) {
            return Err(Error::MeshQuality("boundary angles must lie in [0, 2π)".into()));
        }
        let mut areas = Vec::with_capacity(triangles.len());
        for (t, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= nv) {
                return Err(Error::MeshQuality(format!("triangle {t} references a missing vertex")));
            }
            let a = signed_area(vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]);
            if !(a > MIN_TRIANGLE_AREA) {
                return Err(Error::MeshQuality(format!("triangle {t} is degenerate or clockwise (signed area {a:e})")));
            }
            areas.push(a);
        }
        let mut edges: Vec<(usize, usize)> = triangles
            .iter()
            .flat_map(|t| (0..3).map(move |a| (t[a].min(t[(a + 1) % 3]), t[a].max(t[(a + 1) % 3]))))
            .collect();
        edges.sort_unstable();
        edges.dedup();
        let euler = nv as i64 - edges.len() as i64 + triangles.len() as i64;
        if euler != 1 {
            return Err(Error::MeshQuality(format!("Euler characteristic {euler}, expected 1")));
        }
        Ok(Self { vertices, triangles, boundary, boundary_angles, areas })
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn boundary(&self) -> &[usize] {
        &self.boundary
    }

    pub fn boundary_angles(&self) -> &[f64] {
        &self.boundary_angles
    }

    pub fn boundary_count(&self) -> usize {
        self.boundary.len()
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn triangle_areas(&self) -> &[f64] {
        &self.areas
    }

    pub fn euler_characteristic(&self) -> i64 {
        let mut edges: Vec<(usize, usize)> = self
            .triangles
            .iter()
            .flat_map(|t| (0..3).map(move |a| (t[a].min(t[(a + 1) % 3]), t[a].max(t[(a + 1) % 3]))))
            .collect();
        edges.sort_unstable();
        edges.dedup();
        self.vertices.len() as i64 - edges.len() as i64 + self.triangles.len() as i64
    }

    pub fn is_boundary_vertex(&self) -> Vec<bool> {
        let mut b = vec![false; self.vertices.len()];
        for &v in &self.boundary {
            b[v] = true;
        }
        b
    }

    /// Cotangent stiffness matrix of the piecewise-linear Dirichlet energy.
    pub fn stiffness(&self) -> CsrMatrix<f64> {
        let n = self.vertices.len();
        let mut coo = CooMatrix::new(n, n);
        for tri in &self.triangles {
            for a in 0..3 {
                let (i, j, k) = (tri[a], tri[(a + 1) % 3], tri[(a + 2) % 3]);
                let w = 0.5 * cot_at(self.vertices[i], self.vertices[j], self.vertices[k]);
                coo.push(i, j, -w);
                coo.push(j, i, -w);
                coo.push(i, i, w);
                coo.push(j, j, w);
            }
        }
        CsrMatrix::from(&coo)
    }

    /// Domain-space gradient operator of triangle `t`: rows give the
    /// gradients of the three barycentric hat functions.
    fn hat_gradients(&self, t: usize) -> [[f64; 2]; 3] {
        let [a, b, c] = self.triangles[t].map(|v| self.vertices[v]);
        let twice = 2.0 * self.areas[t];
        // gradient of the hat at vertex i is the rotated opposite edge / 2A
        let g = |p: Point2, q: Point2| [(p[1] - q[1]) / twice, (q[0] - p[0]) / twice];
        [g(b, c), g(c, a), g(a, b)]
    }
}

/// A piecewise-linear map from a disk mesh into `ℝ^dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiskMap {
    mesh: Arc<DiskMesh>,
    dim: usize,
    values: Vec<f64>,
}

impl DiskMap {
    /// `values` holds `dim` entries per vertex, vertex-major.
    pub fn new(mesh: Arc<DiskMesh>, dim: usize, values: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Domain("image dimension must be positive".into()));
        }
        if values.len() != mesh.vertex_count() * dim {
            return Err(Error::Domain(format!(
                "expected {} values for {} vertices in dimension {dim}, got {}",
                mesh.vertex_count() * dim,
                mesh.vertex_count(),
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("non-finite map value at vertex {}", i / dim)));
        }
        Ok(Self { mesh, dim, values })
    }

    /// Map defined by evaluating `f` at every domain vertex.
    pub fn from_fn(mesh: Arc<DiskMesh>, dim: usize, f: impl Fn(Point2) -> Vec<f64>) -> Result<Self> {
        let mut values = Vec::with_capacity(mesh.vertex_count() * dim);
        for p in mesh.vertices() {
            let v = f(*p);
            if v.len() != dim {
                return Err(Error::Domain("closure returned wrong dimension".into()));
            }
            values.extend(v);
        }
        Self::new(mesh, dim, values)
    }

    pub fn mesh(&self) -> &Arc<DiskMesh> {
        &self.mesh
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, vertex: usize) -> &[f64] {
        &self.values[vertex * self.dim..(vertex + 1) * self.dim]
    }

    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        Self::new(self.mesh.clone(), self.dim, self.values.iter().map(|v| lambda * v).collect())
    }

    /// Values at the boundary loop, in loop order.
    pub fn boundary_values(&self) -> Vec<&[f64]> {
        self.mesh.boundary().iter().map(|&b| self.value(b)).collect()
    }

    /// Image-space differential of triangle `t`: columns `∂u/∂x`, `∂u/∂y`.
    /// Built from edge differences so constant maps give exactly zero.
    fn differential(&self, t: usize) -> (Vec<f64>, Vec<f64>) {
        let [a, b, c] = self.mesh.triangles[t];
        let grads = self.mesh.hat_gradients(t);
        let (ua, ub, uc) = (self.value(a), self.value(b), self.value(c));
        let mut dx = vec![0.0; self.dim];
        let mut dy = vec![0.0; self.dim];
        for k in 0..self.dim {
            let (eb, ec) = (ub[k] - ua[k], uc[k] - ua[k]);
            dx[k] = eb * grads[1][0] + ec * grads[2][0];
            dy[k] = eb * grads[1][1] + ec * grads[2][1];
        }
        (dx, dy)
    }

    /// Per-triangle `(energy density × area, Jacobian × area)`.
    fn triangle_terms(&self, t: usize) -> (f64, f64) {
        let (dx, dy) = self.differential(t);
        let xx: f64 = dx.iter().map(|a| a * a).sum();
        let yy: f64 = dy.iter().map(|a| a * a).sum();
        let xy: f64 = dx.iter().zip(&dy).map(|(a, b)| a * b).sum();
        let area = self.mesh.areas[t];
        let jac = (xx * yy - xy * xy).max(0.0).sqrt();
        (0.5 * (xx + yy) * area, jac * area)
    }

    /// Piecewise-linear evaluation at a point of the closed disk. Points in
    /// the slivers between the boundary polygon and the circle take the
    /// boundary trace at their angle.
    pub fn eval_at(&self, locator: &MeshLocator, p: Point2) -> Vec<f64> {
        if let Some((t, bary)) = locator.locate(&self.mesh, p) {
            let [a, b, c] = self.mesh.triangles[t];
            let (ua, ub, uc) = (self.value(a), self.value(b), self.value(c));
            (0..self.dim).map(|k| ua[k] + bary[1] * (ub[k] - ua[k]) + bary[2] * (uc[k] - ua[k])).collect()
        } else {
            self.boundary_trace(p[1].atan2(p[0]))
        }
    }

    /// The boundary trace at angle `theta`, linear in angle between
    /// consecutive boundary vertices.
    pub fn boundary_trace(&self, theta: f64) -> Vec<f64> {
        let m = &self.mesh;
        let nb = m.boundary_count();
        let th = wrap_angle(theta);
        let k = m.boundary_angles.partition_point(|&a| a <= th).saturating_sub(1);
        let a0 = m.boundary_angles[k];
        let a1 = if k + 1 < nb { m.boundary_angles[k + 1] } else { m.boundary_angles[0] + TAU };
        let f = ((th - a0) / (a1 - a0)).clamp(0.0, 1.0);
        let u = self.value(m.boundary[k]);
        let v = self.value(m.boundary[(k + 1) % nb]);
        u.iter().zip(v).map(|(a, b)| a + f * (b - a)).collect()
    }

    /// Text export: vertex count and dimension, one line per vertex with the
    /// domain coordinates followed by the image, then the triangles.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let m = &self.mesh;
        let _ = writeln!(s, "# disk map: x y followed by {} image coordinates per vertex", self.dim);
        let _ = writeln!(s, "vertices {} image_dim {}", m.vertex_count(), self.dim);
        for (i, p) in m.vertices().iter().enumerate() {
            let mut line = format!("{} {}", fmt12(p[0]), fmt12(p[1]));
            for v in self.value(i) {
                line.push(' ');
                line.push_str(&fmt12(*v));
            }
            let _ = writeln!(s, "{line}");
        }
        let _ = writeln!(s, "triangles {}", m.triangles().len());
        for t in m.triangles() {
            let _ = writeln!(s, "{} {} {}", t[0], t[1], t[2]);
        }
        s
    }
}

/// `½ ∫ |∇u|²` of the piecewise-linear map, summed in triangle order.
pub fn dirichlet_energy(map: &DiskMap) -> f64 {
    (0..map.mesh.triangles.len()).map(|t| map.triangle_terms(t).0).sum()
}

/// `∫ √det(DuᵀDu)`, the parametric area.
pub fn map_area(map: &DiskMap) -> f64 {
    (0..map.mesh.triangles.len()).map(|t| map.triangle_terms(t).1).sum()
}

/// Energy minus area; zero exactly for weakly conformal maps.
pub fn conformality_residual(map: &DiskMap) -> f64 {
    let (e, a) = (0..map.mesh.triangles.len())
        .map(|t| map.triangle_terms(t))
        .fold((0.0, 0.0), |(e, a), (de, da)| (e + de, a + da));
    e - a
}

/// Largest amount by which any coordinate of `map` exceeds its boundary
/// extrema in the interior (zero when the maximum principle holds).
pub fn max_principle_violation(map: &DiskMap) -> f64 {
    let m = map.mesh();
    let on_boundary = m.is_boundary_vertex();
    let mut worst: f64 = 0.0;
    for c in 0..map.dim() {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for &b in m.boundary() {
            lo = lo.min(map.value(b)[c]);
            hi = hi.max(map.value(b)[c]);
        }
        for (v, _) in on_boundary.iter().enumerate().filter(|(_, &b)| !b) {
            let x = map.value(v)[c];
            worst = worst.max(x - hi).max(lo - x);
        }
    }
    worst
}

/// Discrete harmonic extension with a prefactored interior stiffness block.
pub struct HarmonicSolver {
    mesh: Arc<DiskMesh>,
    stiffness: CsrMatrix<f64>,
    interior: Vec<usize>,
    k_ib: CsrMatrix<f64>,
    chol: CscCholesky<f64>,
}

impl std::fmt::Debug for HarmonicSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HarmonicSolver")
            .field("vertices", &self.mesh.vertex_count())
            .field("interior", &self.interior.len())
            .finish()
    }
}

impl HarmonicSolver {
    pub fn new(mesh: Arc<DiskMesh>) -> Result<Self> {
        let stiffness = mesh.stiffness();
        let n = mesh.vertex_count();
        let on_boundary = mesh.is_boundary_vertex();
        let interior: Vec<usize> = (0..n).filter(|&v| !on_boundary[v]).collect();
        if interior.is_empty() {
            return Err(Error::MeshQuality("mesh has no interior vertices".into()));
        }
        let mut slot = vec![usize::MAX; n];
        for (k, &v) in interior.iter().enumerate() {
            slot[v] = k;
        }
        let mut bslot = vec![usize::MAX; n];
        for (k, &v) in mesh.boundary().iter().enumerate() {
            bslot[v] = k;
        }
        let ni = interior.len();
        let nb = mesh.boundary_count();
        let mut k_ii = CooMatrix::new(ni, ni);
        let mut k_ib = CooMatrix::new(ni, nb);
        for (row, &v) in interior.iter().enumerate() {
            let r = stiffness.row(v);
            for (&col, &val) in r.col_indices().iter().zip(r.values()) {
                if slot[col] != usize::MAX {
                    k_ii.push(row, slot[col], val);
                } else if bslot[col] != usize::MAX {
                    k_ib.push(row, bslot[col], val);
                } else {
                    return Err(Error::MeshQuality(format!(
                        "vertex {col} is neither interior nor on the boundary loop"
                    )));
                }
            }
        }
        let chol = CscCholesky::factor(&CscMatrix::from(&k_ii))
            .map_err(|e| Error::Solver(format!("interior stiffness factorization failed: {e:?}")))?;
        Ok(Self { mesh, stiffness, interior, k_ib: CsrMatrix::from(&k_ib), chol })
    }

    pub fn mesh(&self) -> &Arc<DiskMesh> {
        &self.mesh
    }

    pub fn stiffness(&self) -> &CsrMatrix<f64> {
        &self.stiffness
    }

    /// Harmonic extension of boundary values given as `boundary_count × dim`
    /// (vertex-major). Returns full per-vertex values.
    pub fn extend_values(&self, boundary: &[f64], dim: usize) -> Result<Vec<f64>> {
        let nb = self.mesh.boundary_count();
        if boundary.len() != nb * dim {
            return Err(Error::Domain(format!("expected {} boundary values, got {}", nb * dim, boundary.len())));
        }
        if boundary.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("non-finite boundary value".into()));
        }
        let ni = self.interior.len();
        let mut rhs = DMatrix::zeros(ni, dim);
        for (row, r) in self.k_ib.row_iter().enumerate() {
            for (&col, &val) in r.col_indices().iter().zip(r.values()) {
                for c in 0..dim {
                    rhs[(row, c)] -= val * boundary[col * dim + c];
                }
            }
        }
        let sol = self.chol.solve(&rhs);
        let mut values = vec![0.0; self.mesh.vertex_count() * dim];
        for (k, &v) in self.mesh.boundary().iter().enumerate() {
            values[v * dim..(v + 1) * dim].copy_from_slice(&boundary[k * dim..(k + 1) * dim]);
        }
        for (row, &v) in self.interior.iter().enumerate() {
            for c in 0..dim {
                values[v * dim + c] = sol[(row, c)];
            }
        }
        Ok(values)
    }

    pub fn extend(&self, boundary: &[Vec<f64>]) -> Result<DiskMap> {
        let dim = boundary.first().map(Vec::len).unwrap_or(0);
        if boundary.len() != self.mesh.boundary_count() {
            return Err(Error::Domain(format!(
                "expected {} boundary values, got {}",
                self.mesh.boundary_count(),
                boundary.len()
            )));
        }
        if dim == 0 || boundary.iter().any(|b| b.len() != dim) {
            return Err(Error::Domain("boundary values must share a positive dimension".into()));
        }
        let flat: Vec<f64> = boundary.iter().flatten().copied().collect();
        let values = self.extend_values(&flat, dim)?;
        DiskMap::new(self.mesh.clone(), dim, values)
    }

    /// `K u` restricted to the boundary loop: the derivative of the energy
    /// with respect to each boundary value (`boundary_count × dim`).
    pub fn boundary_residual(&self, values: &[f64], dim: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.mesh.boundary_count() * dim);
        for &b in self.mesh.boundary() {
            let r = self.stiffness.row(b);
            for c in 0..dim {
                out.push(r.col_indices().iter().zip(r.values()).map(|(&j, &w)| w * values[j * dim + c]).sum());
            }
        }
        out
    }

    /// `½ uᵀ K u`, the same energy as [`dirichlet_energy`] by a second route.
    pub fn quadratic_energy(&self, values: &[f64], dim: usize) -> f64 {
        let mut e = 0.0;
        for (i, r) in self.stiffness.row_iter().enumerate() {
            for c in 0..dim {
                let ku: f64 = r.col_indices().iter().zip(r.values()).map(|(&j, &w)| w * values[j * dim + c]).sum();
                e += values[i * dim + c] * ku;
            }
        }
        0.5 * e
    }
}

/// Discrete harmonic extension of per-boundary-vertex values.
pub fn harmonic_extend(mesh: &Arc<DiskMesh>, boundary_values: &[Vec<f64>]) -> Result<DiskMap> {
    HarmonicSolver::new(mesh.clone())?.extend(boundary_values)
}

/// Uniform bucket grid over `[-1, 1]²` for point location.
#[derive(Debug, Clone)]
pub struct MeshLocator {
    cells: usize,
    buckets: Vec<Vec<usize>>,
}

impl MeshLocator {
    pub fn new(mesh: &DiskMesh) -> Self {
        let cells = ((mesh.triangles().len() as f64).sqrt().ceil() as usize).max(1);
        let mut buckets = vec![Vec::new(); cells * cells];
        let to_cell = |x: f64| (((x + 1.0) / 2.0 * cells as f64).floor().max(0.0) as usize).min(cells - 1);
        for (t, tri) in mesh.triangles().iter().enumerate() {
            let ps = tri.map(|v| mesh.vertices()[v]);
            let (x0, x1) = (
                ps.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min),
                ps.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max),
            );
            let (y0, y1) = (
                ps.iter().map(|p| p[1]).fold(f64::INFINITY, f64::min),
                ps.iter().map(|p| p[1]).fold(f64::NEG_INFINITY, f64::max),
            );
            for cy in to_cell(y0)..=to_cell(y1) {
                for cx in to_cell(x0)..=to_cell(x1) {
                    buckets[cy * cells + cx].push(t);
                }
            }
        }
        Self { cells, buckets }
    }

    /// Containing triangle and barycentric weights, if `p` is in the mesh.
    pub fn locate(&self, mesh: &DiskMesh, p: Point2) -> Option<(usize, [f64; 3])> {
        if !(p[0].abs() <= 1.0 + 1e-12 && p[1].abs() <= 1.0 + 1e-12) {
            return None;
        }
        let n = self.cells;
        let to_cell = |x: f64| (((x + 1.0) / 2.0 * n as f64).floor().max(0.0) as usize).min(n - 1);
        let bucket = &self.buckets[to_cell(p[1]) * n + to_cell(p[0])];
        for &t in bucket {
            let [a, b, c] = mesh.triangles()[t].map(|v| mesh.vertices()[v]);
            let area = mesh.areas[t];
            let l0 = signed_area(p, b, c) / area;
            let l1 = signed_area(a, p, c) / area;
            let l2 = 1.0 - l0 - l1;
            if l0.min(l1).min(l2) >= -1e-12 {
                return Some((t, [l0, l1, l2]));
            }
        }
        None
    }
}
