//! Surface triangulations with all vertices on the level set, per-element
//! geometric frames, uniform refinement with closest-point projection, and
//! numerical measurement of how fast the flat geometry approaches the curved
//! one under refinement.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::level_surface::{projector, LevelSurface, SurfaceKind};
use crate::quadrature::{gauss_legendre_unit, TriangleRule};

/// An interior edge of a closed triangulation.
///
/// `elements[0] < elements[1]`; the lower element acts as the master side
/// when degrees of freedom are attached to the edge.
#[derive(Clone, Copy, Debug)]
pub struct MeshEdge {
    /// Vertex indices with `vertices[0] < vertices[1]`.
    pub vertices: [usize; 2],
    /// The two adjacent triangles, master first.
    pub elements: [usize; 2],
    /// Local edge index of this edge within each adjacent triangle.
    pub local: [usize; 2],
}

/// A closed triangulated surface with vertices on the level set.
///
/// Local edges of a triangle `(v0, v1, v2)` are `(v0,v1)`, `(v1,v2)`,
/// `(v2,v0)`, traversed counterclockwise with respect to the outward normal.
#[derive(Clone, Debug)]
pub struct SurfaceMesh {
    pub vertices: Vec<Vector3<f64>>,
    pub triangles: Vec<[usize; 3]>,
    pub edges: Vec<MeshEdge>,
    /// Global edge index of each local edge.
    pub tri_edges: Vec<[usize; 3]>,
    /// Maximum edge length.
    pub h: f64,
}

impl SurfaceMesh {
    /// Assemble edge connectivity from raw vertices and triangles.
    ///
    /// Fails unless every edge has exactly two adjacent triangles traversing
    /// it in opposite directions (closed, coherently oriented surface).
    pub fn from_raw(vertices: Vec<Vector3<f64>>, triangles: Vec<[usize; 3]>) -> Result<SurfaceMesh> {
        // key (min, max) -> (edge id); direction bookkeeping per adjacency
        let mut lookup: HashMap<(usize, usize), usize> = HashMap::new();
        let mut edges: Vec<MeshEdge> = Vec::with_capacity(triangles.len() * 3 / 2);
        let mut adjacency: Vec<Vec<(usize, usize, bool)>> = Vec::new();
        let mut tri_edges = vec![[usize::MAX; 3]; triangles.len()];

        for (t, tri) in triangles.iter().enumerate() {
            for i in 0..3 {
                let a = tri[i];
                let b = tri[(i + 1) % 3];
                if a == b {
                    return Err(Error::InvalidMesh(format!(
                        "triangle {t} repeats vertex {a}"
                    )));
                }
                let key = (a.min(b), a.max(b));
                let forward = a < b;
                let id = *lookup.entry(key).or_insert_with(|| {
                    edges.push(MeshEdge {
                        vertices: [key.0, key.1],
                        elements: [usize::MAX; 2],
                        local: [usize::MAX; 2],
                    });
                    adjacency.push(Vec::new());
                    edges.len() - 1
                });
                adjacency[id].push((t, i, forward));
                tri_edges[t][i] = id;
            }
        }

        for (id, adj) in adjacency.iter().enumerate() {
            if adj.len() != 2 {
                return Err(Error::InvalidMesh(format!(
                    "edge {:?} has {} adjacent triangles, expected 2",
                    edges[id].vertices,
                    adj.len()
                )));
            }
            let (t0, l0, f0) = adj[0];
            let (t1, l1, f1) = adj[1];
            if f0 == f1 {
                return Err(Error::InvalidMesh(format!(
                    "edge {:?} traversed twice in the same direction: inconsistent orientation",
                    edges[id].vertices
                )));
            }
            // master side = lower element index
            let (first, second) = if t0 < t1 {
                ((t0, l0), (t1, l1))
            } else {
                ((t1, l1), (t0, l0))
            };
            edges[id].elements = [first.0, second.0];
            edges[id].local = [first.1, second.1];
        }

        let h = edges
            .iter()
            .map(|e| (vertices[e.vertices[0]] - vertices[e.vertices[1]]).norm())
            .fold(0.0, f64::max);

        Ok(SurfaceMesh {
            vertices,
            triangles,
            edges,
            tri_edges,
            h,
        })
    }

    pub fn tri_vertices(&self, t: usize) -> [Vector3<f64>; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.n_vertices() as i64 - self.n_edges() as i64 + self.n_triangles() as i64
    }

    /// Sum of triangle areas.
    pub fn total_area(&self) -> f64 {
        self.triangles
            .iter()
            .map(|&[a, b, c]| {
                0.5 * (self.vertices[b] - self.vertices[a])
                    .cross(&(self.vertices[c] - self.vertices[a]))
                    .norm()
            })
            .sum()
    }

    /// Smallest interior angle over the whole mesh, in degrees.
    pub fn min_angle_degrees(&self) -> f64 {
        let mut min_angle = f64::INFINITY;
        for t in 0..self.n_triangles() {
            let v = self.tri_vertices(t);
            for i in 0..3 {
                let a = (v[(i + 1) % 3] - v[i]).normalize();
                let b = (v[(i + 2) % 3] - v[i]).normalize();
                min_angle = min_angle.min(a.dot(&b).clamp(-1.0, 1.0).acos());
            }
        }
        min_angle.to_degrees()
    }

    /// Physical point of barycentric coordinates in triangle `t`.
    pub fn barycentric_point(&self, t: usize, bary: &[f64; 3]) -> Vector3<f64> {
        let v = self.tri_vertices(t);
        bary[0] * v[0] + bary[1] * v[1] + bary[2] * v[2]
    }
}

/// Geometry of one flat triangle: outward normal, tangential projector data,
/// and the per-edge tangent/conormal/midpoint frame.
#[derive(Clone, Debug)]
pub struct ElementFrame {
    /// Outward unit normal `n_h`.
    pub normal: Vector3<f64>,
    pub area: f64,
    pub edges: [EdgeFrame; 3],
    /// Gradients of the barycentric coordinates (in-plane vectors).
    pub grad_bary: [Vector3<f64>; 3],
}

#[derive(Clone, Copy, Debug)]
pub struct EdgeFrame {
    /// Unit tangent along the counterclockwise traversal.
    pub tangent: Vector3<f64>,
    /// Unit outward in-plane conormal, `tangent × normal`.
    pub conormal: Vector3<f64>,
    pub midpoint: Vector3<f64>,
    pub length: f64,
}

impl ElementFrame {
    pub fn from_vertices(v: &[Vector3<f64>; 3]) -> Result<ElementFrame> {
        let e = [v[1] - v[0], v[2] - v[1], v[0] - v[2]];
        let raw = e[0].cross(&-e[2]);
        let doubled_area = raw.norm();
        if doubled_area < 2e-14 {
            return Err(Error::DegenerateTriangle(0.5 * doubled_area));
        }
        let normal = raw / doubled_area;
        let area = 0.5 * doubled_area;
        let edges = std::array::from_fn(|i| {
            let length = e[i].norm();
            let tangent = e[i] / length;
            EdgeFrame {
                tangent,
                conormal: tangent.cross(&normal),
                midpoint: 0.5 * (v[i] + v[(i + 1) % 3]),
                length,
            }
        });
        // grad of barycentric k is the inward rotation of the opposite edge
        let grad_bary = std::array::from_fn(|k| normal.cross(&e[(k + 1) % 3]) / doubled_area);
        Ok(ElementFrame {
            normal,
            area,
            edges,
            grad_bary,
        })
    }

    /// Tangential projector `P_h = I - n_h n_hᵀ`.
    pub fn projector(&self) -> Matrix3<f64> {
        projector(&self.normal)
    }
}

/// Frames for every element of the mesh.
pub fn compute_frames(mesh: &SurfaceMesh) -> Result<Vec<ElementFrame>> {
    (0..mesh.n_triangles())
        .map(|t| ElementFrame::from_vertices(&mesh.tri_vertices(t)))
        .collect()
}

const MAX_SPHERE_LEVEL: u32 = 8;

/// Icosahedral sphere mesh: the icosahedron subdivided `level` times, each
/// new vertex projected back to the surface.
pub fn build_sphere_mesh(surface: &LevelSurface, level: u32) -> Result<SurfaceMesh> {
    let SurfaceKind::Sphere { .. } = surface.kind() else {
        return Err(Error::UnsupportedSurface);
    };
    if level > MAX_SPHERE_LEVEL {
        return Err(Error::InvalidMesh(format!(
            "sphere subdivision level {level} exceeds cap {MAX_SPHERE_LEVEL}"
        )));
    }
    let phi = (1.0 + 5.0_f64.sqrt()) / 2.0;
    let raw = [
        [-1.0, phi, 0.0],
        [1.0, phi, 0.0],
        [-1.0, -phi, 0.0],
        [1.0, -phi, 0.0],
        [0.0, -1.0, phi],
        [0.0, 1.0, phi],
        [0.0, -1.0, -phi],
        [0.0, 1.0, -phi],
        [phi, 0.0, -1.0],
        [phi, 0.0, 1.0],
        [-phi, 0.0, -1.0],
        [-phi, 0.0, 1.0],
    ];
    let vertices: Vec<Vector3<f64>> = raw
        .iter()
        .map(|&[x, y, z]| {
            surface
                .closest_point(&(Vector3::new(x, y, z) / (1.0 + phi * phi).sqrt()))
                .map(|sp| sp.position)
        })
        .collect::<Result<_>>()?;
    let triangles: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    let mut mesh = SurfaceMesh::from_raw(vertices, triangles)?;
    for _ in 0..level {
        mesh = refine(surface, &mesh)?;
    }
    Ok(mesh)
}

/// Structured torus mesh from an `n_major × n_minor` parametric grid, each
/// quad split along its shorter diagonal. Vertices lie exactly on the level
/// set by construction.
pub fn build_torus_mesh(
    surface: &LevelSurface,
    n_major: usize,
    n_minor: usize,
) -> Result<SurfaceMesh> {
    let SurfaceKind::Torus {
        major_radius,
        minor_radius,
    } = *surface.kind()
    else {
        return Err(Error::UnsupportedSurface);
    };
    if n_major < 8 || n_minor < 4 {
        return Err(Error::InvalidResolution { n_major, n_minor });
    }
    let tau = std::f64::consts::TAU;
    let mut vertices = Vec::with_capacity(n_major * n_minor);
    for i in 0..n_major {
        let theta = tau * i as f64 / n_major as f64;
        for j in 0..n_minor {
            let psi = tau * j as f64 / n_minor as f64;
            let w = major_radius + minor_radius * psi.cos();
            vertices.push(Vector3::new(
                w * theta.cos(),
                w * theta.sin(),
                minor_radius * psi.sin(),
            ));
        }
    }
    let idx = |i: usize, j: usize| (i % n_major) * n_minor + (j % n_minor);
    let mut triangles = Vec::with_capacity(2 * n_major * n_minor);
    for i in 0..n_major {
        for j in 0..n_minor {
            let v00 = idx(i, j);
            let v10 = idx(i + 1, j);
            let v11 = idx(i + 1, j + 1);
            let v01 = idx(i, j + 1);
            let diag_a = (vertices[v00] - vertices[v11]).norm();
            let diag_b = (vertices[v10] - vertices[v01]).norm();
            if diag_a <= diag_b {
                triangles.push([v00, v10, v11]);
                triangles.push([v00, v11, v01]);
            } else {
                triangles.push([v00, v10, v01]);
                triangles.push([v10, v11, v01]);
            }
        }
    }
    SurfaceMesh::from_raw(vertices, triangles)
}

/// Uniform 1-to-4 refinement with edge midpoints projected to the surface.
pub fn refine(surface: &LevelSurface, mesh: &SurfaceMesh) -> Result<SurfaceMesh> {
    let mut vertices = mesh.vertices.clone();
    let mut midpoint_of: HashMap<(usize, usize), usize> = HashMap::new();
    let mut triangles = Vec::with_capacity(4 * mesh.n_triangles());

    let mut midpoint = |a: usize, b: usize, vertices: &mut Vec<Vector3<f64>>| -> Result<usize> {
        let key = (a.min(b), a.max(b));
        if let Some(&id) = midpoint_of.get(&key) {
            return Ok(id);
        }
        let projected = surface
            .closest_point(&(0.5 * (vertices[a] + vertices[b])))?
            .position;
        vertices.push(projected);
        let id = vertices.len() - 1;
        midpoint_of.insert(key, id);
        Ok(id)
    };

    for &[a, b, c] in &mesh.triangles {
        let mab = midpoint(a, b, &mut vertices)?;
        let mbc = midpoint(b, c, &mut vertices)?;
        let mca = midpoint(c, a, &mut vertices)?;
        triangles.push([a, mab, mca]);
        triangles.push([b, mbc, mab]);
        triangles.push([c, mca, mbc]);
        triangles.push([mab, mbc, mca]);
    }
    SurfaceMesh::from_raw(vertices, triangles)
}

/// Lifted edge frame at a point `x` of a straight edge: the tangent of the
/// lifted edge is `J_p τ_E` normalized, and its conormal completes the frame
/// with the exact surface normal.
pub fn lifted_edge_frame(
    surface: &LevelSurface,
    x: &Vector3<f64>,
    tangent: &Vector3<f64>,
) -> Result<(Vector3<f64>, Vector3<f64>, Vector3<f64>)> {
    let jac = surface.closest_point_jacobian(x)?;
    let n = surface.closest_point(x)?.normal;
    let lifted_tangent = (jac * tangent).normalize();
    let lifted_conormal = lifted_tangent.cross(&n);
    Ok((lifted_tangent, lifted_conormal, n))
}

/// Worst-case geometric gaps of one flat element against the curved surface.
///
/// Returns `(projector_gap, conormal_gap, conormal_tangential_gap,
/// conormal_inplane_gap)`:
/// - `‖P - P_h‖` sampled at a seven-point interior pattern,
/// - `‖n_El - n_E‖`, `‖n_El - P n_E‖`, `‖P_h n_El - n_E‖` sampled at five
///   Gauss points per edge, where `n_El` is the conormal of the lifted edge.
pub fn element_geometry_gaps(
    surface: &LevelSurface,
    vertices: &[Vector3<f64>; 3],
    frame: &ElementFrame,
) -> Result<(f64, f64, f64, f64)> {
    let p_h = frame.projector();
    let sample = TriangleRule::seven_point();
    let mut projector_gap: f64 = 0.0;
    for bary in &sample.points {
        let x = bary[0] * vertices[0] + bary[1] * vertices[1] + bary[2] * vertices[2];
        let p = surface.closest_point(&x)?.projector;
        projector_gap = projector_gap.max((p - p_h).norm());
    }

    let (nodes, _) = gauss_legendre_unit(5);
    let mut conormal_gap: f64 = 0.0;
    let mut conormal_tangential_gap: f64 = 0.0;
    let mut conormal_inplane_gap: f64 = 0.0;
    for (i, edge) in frame.edges.iter().enumerate() {
        let start = vertices[i];
        let along = edge.length * edge.tangent;
        for &s in &nodes {
            let x = start + s * along;
            let (_, lifted_conormal, n) = lifted_edge_frame(surface, &x, &edge.tangent)?;
            let p = projector(&n);
            conormal_gap = conormal_gap.max((lifted_conormal - edge.conormal).norm());
            conormal_tangential_gap =
                conormal_tangential_gap.max((lifted_conormal - p * edge.conormal).norm());
            conormal_inplane_gap =
                conormal_inplane_gap.max((p_h * lifted_conormal - edge.conormal).norm());
        }
    }
    Ok((
        projector_gap,
        conormal_gap,
        conormal_tangential_gap,
        conormal_inplane_gap,
    ))
}

/// Measured geometric gaps over a refinement sequence, with observed orders.
#[derive(Clone, Debug)]
pub struct GeometryRates {
    pub h: Vec<f64>,
    /// Max `‖P - P_h‖` per mesh.
    pub projector_gap: Vec<f64>,
    /// Max `‖n_El - n_E‖` per mesh.
    pub conormal_gap: Vec<f64>,
    /// Max `‖n_El - P n_E‖` per mesh.
    pub conormal_tangential_gap: Vec<f64>,
    /// Max `‖P_h n_El - n_E‖` per mesh.
    pub conormal_inplane_gap: Vec<f64>,
    /// Least-squares orders of the four quantities, in the same order.
    pub orders: [f64; 4],
}

/// Measure the geometric gaps on a sequence of at least three meshes of
/// decreasing `h` and fit the observed convergence orders.
pub fn measure_geometry_rates(
    surface: &LevelSurface,
    meshes: &[&SurfaceMesh],
) -> Result<GeometryRates> {
    if meshes.len() < 3 {
        return Err(Error::InsufficientMeshes {
            needed: 3,
            got: meshes.len(),
        });
    }
    for pair in meshes.windows(2) {
        if pair[1].h >= pair[0].h {
            return Err(Error::InvalidMesh(
                "geometry-rate meshes must have strictly decreasing h".into(),
            ));
        }
    }
    let mut rates = GeometryRates {
        h: Vec::new(),
        projector_gap: Vec::new(),
        conormal_gap: Vec::new(),
        conormal_tangential_gap: Vec::new(),
        conormal_inplane_gap: Vec::new(),
        orders: [0.0; 4],
    };
    for mesh in meshes {
        let frames = compute_frames(mesh)?;
        let mut gaps = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
        for (t, frame) in frames.iter().enumerate() {
            let g = element_geometry_gaps(surface, &mesh.tri_vertices(t), frame)?;
            gaps.0 = gaps.0.max(g.0);
            gaps.1 = gaps.1.max(g.1);
            gaps.2 = gaps.2.max(g.2);
            gaps.3 = gaps.3.max(g.3);
        }
        rates.h.push(mesh.h);
        rates.projector_gap.push(gaps.0);
        rates.conormal_gap.push(gaps.1);
        rates.conormal_tangential_gap.push(gaps.2);
        rates.conormal_inplane_gap.push(gaps.3);
    }
    rates.orders = [
        crate::analysis::least_squares_order(&rates.h, &rates.projector_gap),
        crate::analysis::least_squares_order(&rates.h, &rates.conormal_gap),
        crate::analysis::least_squares_order(&rates.h, &rates.conormal_tangential_gap),
        crate::analysis::least_squares_order(&rates.h, &rates.conormal_inplane_gap),
    ];
    Ok(rates)
}

/// Write the mesh in OFF format.
pub fn write_off<W: Write>(mesh: &SurfaceMesh, mut out: W) -> Result<()> {
    writeln!(out, "OFF")?;
    writeln!(
        out,
        "{} {} {}",
        mesh.n_vertices(),
        mesh.n_triangles(),
        mesh.n_edges()
    )?;
    for v in &mesh.vertices {
        writeln!(out, "{} {} {}", v.x, v.y, v.z)?;
    }
    for t in &mesh.triangles {
        writeln!(out, "3 {} {} {}", t[0], t[1], t[2])?;
    }
    Ok(())
}

/// Read a triangle mesh in OFF format and rebuild connectivity.
pub fn read_off<R: BufRead>(reader: R) -> Result<SurfaceMesh> {
    let mut lines = reader.lines().filter_map(|l| match l {
        Ok(line) => {
            let trimmed = line.trim().to_string();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                None
            } else {
                Some(Ok(trimmed))
            }
        }
        Err(e) => Some(Err(e)),
    });
    let header = lines
        .next()
        .transpose()?
        .ok_or_else(|| Error::Parse("empty OFF file".into()))?;
    if header != "OFF" {
        return Err(Error::Parse(format!("expected OFF header, got {header:?}")));
    }
    let counts = lines
        .next()
        .transpose()?
        .ok_or_else(|| Error::Parse("missing OFF counts line".into()))?;
    let counts: Vec<usize> = counts
        .split_whitespace()
        .map(|tok| tok.parse().map_err(|_| Error::Parse(format!("bad count {tok:?}"))))
        .collect::<Result<_>>()?;
    let [n_vertices, n_faces] = counts[..2] else {
        return Err(Error::Parse("OFF counts line needs vertex and face counts".into()));
    };
    let mut vertices = Vec::with_capacity(n_vertices);
    for _ in 0..n_vertices {
        let line = lines
            .next()
            .transpose()?
            .ok_or_else(|| Error::Parse("truncated vertex list".into()))?;
        let coords: Vec<f64> = line
            .split_whitespace()
            .map(|tok| tok.parse().map_err(|_| Error::Parse(format!("bad coordinate {tok:?}"))))
            .collect::<Result<_>>()?;
        if coords.len() != 3 {
            return Err(Error::Parse(format!("vertex line {line:?} is not 3d")));
        }
        vertices.push(Vector3::new(coords[0], coords[1], coords[2]));
    }
    let mut triangles = Vec::with_capacity(n_faces);
    for _ in 0..n_faces {
        let line = lines
            .next()
            .transpose()?
            .ok_or_else(|| Error::Parse("truncated face list".into()))?;
        let ids: Vec<usize> = line
            .split_whitespace()
            .map(|tok| tok.parse().map_err(|_| Error::Parse(format!("bad index {tok:?}"))))
            .collect::<Result<_>>()?;
        if ids.len() != 4 || ids[0] != 3 {
            return Err(Error::Parse(format!("face line {line:?} is not a triangle")));
        }
        triangles.push([ids[1], ids[2], ids[3]]);
    }
    SurfaceMesh::from_raw(vertices, triangles)
}
