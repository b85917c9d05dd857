//! The vector-valued tangential Crouzeix-Raviart space on a surface
//! triangulation.
//!
//! Each edge carries two global degrees of freedom, the conormal and the
//! tangential component of the field at the edge midpoint as seen from the
//! master element. The slave element uses the negated value for both
//! components, which makes the two conormal traces satisfy
//! `v|K+(m_E)·n_E+ = -v|K-(m_E)·n_E-` (and the tangential analogue) exactly,
//! and forces the edge means of both jump components to vanish.

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::level_surface::LevelSurface;
use crate::mesh::{compute_frames, lifted_edge_frame, ElementFrame, SurfaceMesh};
use crate::quadrature::gauss_legendre_unit;

/// Vertex opposite local edge `i` of the reference triangle.
pub const OPPOSITE_VERTEX: [usize; 3] = [2, 0, 1];

/// Scalar Crouzeix-Raviart basis values at a barycentric point:
/// `phi_i = 1 - 2 λ_opp(i)`, so `phi_i(m_Ej) = δ_ij`.
#[inline]
pub fn basis_values(bary: &[f64; 3]) -> [f64; 3] {
    std::array::from_fn(|i| 1.0 - 2.0 * bary[OPPOSITE_VERTEX[i]])
}

/// Constant gradients of the basis functions on a physical element.
#[inline]
pub fn basis_gradients(frame: &ElementFrame) -> [Vector3<f64>; 3] {
    std::array::from_fn(|i| -2.0 * frame.grad_bary[OPPOSITE_VERTEX[i]])
}

/// Signed mapping from local edge coefficients to the global edge DOFs.
#[derive(Clone, Debug)]
pub struct DofMap {
    /// Sign of element-local coefficients relative to the global DOF value:
    /// `+1` on the master side of each edge, `-1` on the slave side.
    signs: Vec<[f64; 3]>,
    n_dofs: usize,
}

impl DofMap {
    pub fn build(mesh: &SurfaceMesh) -> DofMap {
        let signs = (0..mesh.n_triangles())
            .map(|t| {
                std::array::from_fn(|i| {
                    let edge = &mesh.edges[mesh.tri_edges[t][i]];
                    if edge.elements[0] == t {
                        1.0
                    } else {
                        -1.0
                    }
                })
            })
            .collect();
        DofMap {
            signs,
            n_dofs: 2 * mesh.n_edges(),
        }
    }

    pub fn n_dofs(&self) -> usize {
        self.n_dofs
    }

    #[inline]
    pub fn sign(&self, element: usize, local_edge: usize) -> f64 {
        self.signs[element][local_edge]
    }

    /// Global index of the conormal-component DOF of an edge.
    #[inline]
    pub fn normal_dof(edge: usize) -> usize {
        2 * edge
    }

    /// Global index of the tangential-component DOF of an edge.
    #[inline]
    pub fn tangent_dof(edge: usize) -> usize {
        2 * edge + 1
    }
}

/// Mesh, element frames, and DOF numbering bundled for assembly and
/// evaluation.
#[derive(Clone, Debug)]
pub struct Space {
    pub mesh: SurfaceMesh,
    pub frames: Vec<ElementFrame>,
    pub dofs: DofMap,
}

/// Coefficients of a member of the tangential Crouzeix-Raviart space.
#[derive(Clone, Debug)]
pub struct DiscreteField {
    pub coeffs: Vec<f64>,
}

/// Per-element coefficients of the componentwise (non-conforming in the
/// tangency sense) interpolant. Not a member of the discrete space: the
/// coefficient vectors need not lie in any element plane and carry no
/// cross-element coupling.
#[derive(Clone, Debug)]
pub struct ComponentwiseField {
    /// For each element, the three edge-mean vectors.
    pub coeffs: Vec<[Vector3<f64>; 3]>,
}

impl Space {
    pub fn build(mesh: SurfaceMesh) -> Result<Space> {
        let frames = compute_frames(&mesh)?;
        let dofs = DofMap::build(&mesh);
        Ok(Space { mesh, frames, dofs })
    }

    pub fn n_dofs(&self) -> usize {
        self.dofs.n_dofs()
    }

    pub fn zero_field(&self) -> DiscreteField {
        DiscreteField {
            coeffs: vec![0.0; self.n_dofs()],
        }
    }

    /// Element-local coefficient pairs `(conormal, tangential)` per edge.
    #[inline]
    pub fn local_coefficients(&self, field: &DiscreteField, element: usize) -> [[f64; 2]; 3] {
        std::array::from_fn(|i| {
            let edge = self.mesh.tri_edges[element][i];
            let sign = self.dofs.sign(element, i);
            [
                sign * field.coeffs[DofMap::normal_dof(edge)],
                sign * field.coeffs[DofMap::tangent_dof(edge)],
            ]
        })
    }

    /// Evaluate a discrete field at a barycentric point of an element.
    pub fn evaluate(
        &self,
        field: &DiscreteField,
        element: usize,
        bary: &[f64; 3],
    ) -> Result<Vector3<f64>> {
        if element >= self.mesh.n_triangles() {
            return Err(Error::IndexOutOfRange(element));
        }
        let frame = &self.frames[element];
        let local = self.local_coefficients(field, element);
        let phi = basis_values(bary);
        let mut value = Vector3::zeros();
        for i in 0..3 {
            value += phi[i] * (local[i][0] * frame.edges[i].conormal + local[i][1] * frame.edges[i].tangent);
        }
        Ok(value)
    }

    /// The constant surface gradient of a discrete field on an element,
    /// `Σ_i c_i (∇phi_i)ᵀ`. Both factors lie in the element plane, so the
    /// matrix is already doubly projected.
    pub fn surface_gradient(&self, field: &DiscreteField, element: usize) -> Result<Matrix3<f64>> {
        if element >= self.mesh.n_triangles() {
            return Err(Error::IndexOutOfRange(element));
        }
        let frame = &self.frames[element];
        let local = self.local_coefficients(field, element);
        let grads = basis_gradients(frame);
        let mut jac = Matrix3::zeros();
        for i in 0..3 {
            let c = local[i][0] * frame.edges[i].conormal + local[i][1] * frame.edges[i].tangent;
            jac += c * grads[i].transpose();
        }
        Ok(jac)
    }
}

/// Interpolate an exact tangential field defined on the surface into the
/// discrete space: for each edge, the degrees of freedom are the edge means
/// of the field components along the lifted-edge conormal frame.
///
/// `exact` is evaluated at closest points `p(x)` of edge quadrature nodes.
pub fn interpolate_tan<F>(
    space: &Space,
    surface: &LevelSurface,
    exact: F,
) -> Result<DiscreteField>
where
    F: Fn(&Vector3<f64>) -> Result<Vector3<f64>>,
{
    let (nodes, weights) = gauss_legendre_unit(5);
    let mut field = space.zero_field();
    for (e, edge) in space.mesh.edges.iter().enumerate() {
        let master = edge.elements[0];
        let local = edge.local[0];
        let frame = &space.frames[master].edges[local];
        let start = space.mesh.vertices[space.mesh.triangles[master][local]];
        let along = frame.length * frame.tangent;
        let mut mean_n = 0.0;
        let mut mean_t = 0.0;
        for (&s, &w) in nodes.iter().zip(&weights) {
            let x = start + s * along;
            let (lifted_tangent, lifted_conormal, _) =
                lifted_edge_frame(surface, &x, &frame.tangent)?;
            let u = exact(&surface.closest_point(&x)?.position)?;
            mean_n += w * u.dot(&lifted_conormal);
            mean_t += w * u.dot(&lifted_tangent);
        }
        field.coeffs[DofMap::normal_dof(e)] = mean_n;
        field.coeffs[DofMap::tangent_dof(e)] = mean_t;
    }
    Ok(field)
}

/// Componentwise interpolation: per element and edge, the raw edge mean of
/// the extended field. The result is generally not tangential to the flat
/// elements and does not belong to the discrete space.
pub fn interpolate_componentwise<F>(
    space: &Space,
    surface: &LevelSurface,
    exact: F,
) -> Result<ComponentwiseField>
where
    F: Fn(&Vector3<f64>) -> Result<Vector3<f64>>,
{
    let (nodes, weights) = gauss_legendre_unit(5);
    let mut coeffs = Vec::with_capacity(space.mesh.n_triangles());
    for t in 0..space.mesh.n_triangles() {
        let mut alpha = [Vector3::zeros(); 3];
        for i in 0..3 {
            let frame = &space.frames[t].edges[i];
            let start = space.mesh.vertices[space.mesh.triangles[t][i]];
            let along = frame.length * frame.tangent;
            for (&s, &w) in nodes.iter().zip(&weights) {
                let x = start + s * along;
                alpha[i] += w * exact(&surface.closest_point(&x)?.position)?;
            }
        }
        coeffs.push(alpha);
    }
    Ok(ComponentwiseField { coeffs })
}

/// Edge integrals of the two jump components `∫_E [v·n_E]` and `∫_E [v·τ_E]`,
/// with the jump of a conormal component defined as the sum of the two
/// one-sided traces. Both vanish identically on the discrete space.
pub fn edge_jump_means(space: &Space, field: &DiscreteField) -> Result<Vec<[f64; 2]>> {
    let (nodes, weights) = gauss_legendre_unit(3);
    let mut means = Vec::with_capacity(space.mesh.n_edges());
    for edge in &space.mesh.edges {
        let [tp, tm] = edge.elements;
        let [lp, lm] = edge.local;
        let frame_p = space.frames[tp].edges[lp];
        let frame_m = space.frames[tm].edges[lm];
        let mut jump_n = 0.0;
        let mut jump_t = 0.0;
        for (&s, &w) in nodes.iter().zip(&weights) {
            // Barycentric coordinates of the same physical point on both
            // sides; the slave traverses the edge in the opposite direction.
            let mut bary_p = [0.0; 3];
            bary_p[lp] = 1.0 - s;
            bary_p[(lp + 1) % 3] = s;
            let mut bary_m = [0.0; 3];
            bary_m[lm] = s;
            bary_m[(lm + 1) % 3] = 1.0 - s;
            let vp = space.evaluate(field, tp, &bary_p)?;
            let vm = space.evaluate(field, tm, &bary_m)?;
            jump_n += w * (vp.dot(&frame_p.conormal) + vm.dot(&frame_m.conormal));
            jump_t += w * (vp.dot(&frame_p.tangent) + vm.dot(&frame_m.tangent));
        }
        means.push([frame_p.length * jump_n, frame_p.length * jump_t]);
    }
    Ok(means)
}
