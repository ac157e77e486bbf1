use super::{FittedMesh, Sign, SimplicialMesh};
use crate::geometry::{BoundingBox, Point2};
use crate::quadrature::{triangle_rule, QuadratureRule};
use crate::{Error, Result};

/// Classification of a polytopic face.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaceKind {
    /// Shared by two elements of the mesh.
    Interior,
    /// On the hold-all boundary.
    DomainBoundary,
    /// On the fitted zero-level set (submeshes only): the face separates an
    /// element of the submesh from the excluded region.
    FreeBoundary,
}

/// A face of a polytopic mesh: a maximal straight run of fine edges between
/// the same pair of elements (or between one element and a boundary).
///
/// Geometry-sensitive integrals iterate the constituent fine edges, so a
/// face stays valid when the underlying vertices move; `normal` is the unit
/// normal of the (straight) face pointing out of `elems[0]`.
#[derive(Debug, Clone)]
pub struct PolyFace {
    /// Incident elements; `elems[1] == usize::MAX` for boundary faces.
    pub elems: [usize; 2],
    pub kind: FaceKind,
    /// Fine-edge ids, ascending.
    pub fine_edges: Vec<usize>,
    pub normal: Point2,
    /// Total length |e| of the face.
    pub length: f64,
}

impl PolyFace {
    pub fn is_boundary(&self) -> bool {
        self.elems[1] == usize::MAX
    }
}

/// Agglomerated polytopic mesh over a fine simplicial mesh.
///
/// Elements are edge-connected sets of fine triangles; they may cover the
/// whole fine mesh or (for submeshes) a subset of it.
#[derive(Debug, Clone)]
pub struct PolytopicMesh<'m> {
    mesh: &'m SimplicialMesh,
    elements: Vec<Vec<usize>>,
    elem_of_tri: Vec<usize>,
    areas: Vec<f64>,
    diameters: Vec<f64>,
    bboxes: Vec<BoundingBox>,
    faces: Vec<PolyFace>,
    elem_faces: Vec<Vec<usize>>,
}

impl<'m> PolytopicMesh<'m> {
    /// Builds the mesh from element triangle sets (a partition of a subset of
    /// the fine triangles).
    pub fn build(mesh: &'m SimplicialMesh, mut elements: Vec<Vec<usize>>) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::EmptyRegion("polytopic mesh with no elements".into()));
        }
        let mut elem_of_tri = vec![usize::MAX; mesh.n_triangles()];
        for (e, tris) in elements.iter_mut().enumerate() {
            tris.sort_unstable();
            if tris.is_empty() {
                return Err(Error::InvalidMesh(format!("element {e} is empty")));
            }
            for &t in tris.iter() {
                if elem_of_tri[t] != usize::MAX {
                    return Err(Error::InvalidMesh(format!(
                        "triangle {t} belongs to elements {} and {e}",
                        elem_of_tri[t]
                    )));
                }
                elem_of_tri[t] = e;
            }
        }

        let mut areas = Vec::with_capacity(elements.len());
        let mut diameters = Vec::with_capacity(elements.len());
        let mut bboxes = Vec::with_capacity(elements.len());
        for tris in &elements {
            areas.push(tris.iter().map(|&t| mesh.area(t)).sum());
            let verts = element_vertices(mesh, tris);
            let pts: Vec<Point2> = verts.iter().map(|&v| mesh.vertex(v)).collect();
            bboxes.push(BoundingBox::of_points(pts.iter().copied()));
            let mut h: f64 = 0.0;
            for i in 0..pts.len() {
                for j in (i + 1)..pts.len() {
                    h = h.max(pts[i].dist(pts[j]));
                }
            }
            diameters.push(h);
        }

        let faces = build_faces(mesh, &elem_of_tri);
        let mut elem_faces = vec![Vec::new(); elements.len()];
        for (f, face) in faces.iter().enumerate() {
            elem_faces[face.elems[0]].push(f);
            if !face.is_boundary() {
                elem_faces[face.elems[1]].push(f);
            }
        }

        Ok(Self { mesh, elements, elem_of_tri, areas, diameters, bboxes, faces, elem_faces })
    }

    pub fn mesh(&self) -> &'m SimplicialMesh {
        self.mesh
    }

    pub fn n_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn element(&self, e: usize) -> &[usize] {
        &self.elements[e]
    }

    pub fn elements(&self) -> &[Vec<usize>] {
        &self.elements
    }

    /// Element owning a fine triangle (`usize::MAX` if uncovered).
    pub fn element_of_triangle(&self, t: usize) -> usize {
        self.elem_of_tri[t]
    }

    pub fn area(&self, e: usize) -> f64 {
        self.areas[e]
    }

    pub fn diameter(&self, e: usize) -> f64 {
        self.diameters[e]
    }

    /// Axis-aligned minimal box containing the element.
    pub fn bounding_box(&self, e: usize) -> &BoundingBox {
        &self.bboxes[e]
    }

    pub fn faces(&self) -> &[PolyFace] {
        &self.faces
    }

    pub fn face(&self, f: usize) -> &PolyFace {
        &self.faces[f]
    }

    pub fn element_faces(&self, e: usize) -> &[usize] {
        &self.elem_faces[e]
    }

    /// Perimeter of the element polygon (sum of its face lengths).
    pub fn perimeter(&self, e: usize) -> f64 {
        self.elem_faces[e].iter().map(|&f| self.faces[f].length).sum()
    }

    /// Composite rule over the element's fine triangles, exact for
    /// polynomials of total degree <= `order` on the polytope.
    pub fn quadrature_on_element(&self, e: usize, order: usize) -> QuadratureRule {
        let mut rule = QuadratureRule::default();
        for &t in &self.elements[e] {
            rule.extend(&triangle_rule(self.mesh.tri_points(t), order));
        }
        rule
    }

    /// The triangle on the `elems[0]` side of a fine edge of a face,
    /// or the single adjacent triangle for boundary faces.
    pub fn plus_side_triangle(&self, face: &PolyFace, fine_edge: usize) -> usize {
        let edge = self.mesh.edge(fine_edge);
        let t0 = edge.tris[0];
        if self.elem_of_tri[t0] == face.elems[0] {
            t0
        } else {
            edge.tris[1]
        }
    }

    /// The triangle on the `elems[1]` side (interior faces only).
    pub fn minus_side_triangle(&self, face: &PolyFace, fine_edge: usize) -> usize {
        let edge = self.mesh.edge(fine_edge);
        let t0 = edge.tris[0];
        if self.elem_of_tri[t0] == face.elems[0] {
            edge.tris[1]
        } else {
            t0
        }
    }

    /// Same combinatorial mesh with geometry recomputed on `moved`, a mesh
    /// with identical topology and displaced vertices. Keeping the element
    /// sets and face groupings fixed makes downstream quantities vary
    /// smoothly under vertex perturbations.
    pub fn rebuilt_on<'n>(&self, moved: &'n SimplicialMesh) -> PolytopicMesh<'n> {
        assert_eq!(moved.n_triangles(), self.mesh.n_triangles());
        let mut areas = Vec::with_capacity(self.elements.len());
        let mut diameters = Vec::with_capacity(self.elements.len());
        let mut bboxes = Vec::with_capacity(self.elements.len());
        for tris in &self.elements {
            areas.push(tris.iter().map(|&t| moved.area(t)).sum());
            let verts = element_vertices(moved, tris);
            let pts: Vec<Point2> = verts.iter().map(|&v| moved.vertex(v)).collect();
            bboxes.push(BoundingBox::of_points(pts.iter().copied()));
            let mut h: f64 = 0.0;
            for i in 0..pts.len() {
                for j in (i + 1)..pts.len() {
                    h = h.max(pts[i].dist(pts[j]));
                }
            }
            diameters.push(h);
        }
        let faces = self
            .faces
            .iter()
            .map(|face| {
                let rep = face.fine_edges[0];
                let tp = self.plus_side_triangle(face, rep);
                PolyFace {
                    elems: face.elems,
                    kind: face.kind,
                    fine_edges: face.fine_edges.clone(),
                    normal: moved.edge_normal_from(rep, tp),
                    length: face.fine_edges.iter().map(|&e| moved.edge_length(e)).sum(),
                }
            })
            .collect();
        PolytopicMesh {
            mesh: moved,
            elements: self.elements.clone(),
            elem_of_tri: self.elem_of_tri.clone(),
            areas,
            diameters,
            bboxes,
            faces,
            elem_faces: self.elem_faces.clone(),
        }
    }
}

fn element_vertices(mesh: &SimplicialMesh, tris: &[usize]) -> Vec<usize> {
    let mut verts: Vec<usize> = tris
        .iter()
        .flat_map(|&t| mesh.triangle(t).into_iter())
        .collect();
    verts.sort_unstable();
    verts.dedup();
    verts
}

/// Groups interface fine edges into maximal straight faces.
///
/// Two interface edges merge when they share a vertex, separate the same
/// (ordered) element pair with the same classification, and are collinear.
fn build_faces(mesh: &SimplicialMesh, elem_of_tri: &[usize]) -> Vec<PolyFace> {
    #[derive(Clone, Copy, PartialEq, Eq)]
    struct Key {
        plus: usize,
        minus: usize,
        kind: FaceKind,
    }

    // Classify fine edges.
    let mut edge_key: Vec<Option<Key>> = vec![None; mesh.n_edges()];
    for (e, edge) in mesh.edges().iter().enumerate() {
        let o0 = elem_of_tri[edge.tris[0]];
        let o1 = if edge.is_boundary() { usize::MAX } else { elem_of_tri[edge.tris[1]] };
        let key = match (o0, o1) {
            (usize::MAX, usize::MAX) => None,
            (a, usize::MAX) if !edge.is_boundary() => {
                // Interior fine edge against the uncovered region.
                Some(Key { plus: a, minus: usize::MAX, kind: FaceKind::FreeBoundary })
            }
            (usize::MAX, b) => {
                Some(Key { plus: b, minus: usize::MAX, kind: FaceKind::FreeBoundary })
            }
            (a, usize::MAX) => Some(Key { plus: a, minus: usize::MAX, kind: FaceKind::DomainBoundary }),
            (a, b) if a == b => None,
            (a, b) => Some(Key { plus: a.min(b), minus: a.max(b), kind: FaceKind::Interior }),
        };
        edge_key[e] = key;
    }

    // Union-find over interface edges.
    let mut parent: Vec<usize> = (0..mesh.n_edges()).collect();
    fn find(parent: &mut Vec<usize>, mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }

    let mut vertex_edges: Vec<Vec<usize>> = vec![Vec::new(); mesh.n_vertices()];
    for (e, key) in edge_key.iter().enumerate() {
        if key.is_some() {
            let [a, b] = mesh.edge(e).vertices;
            vertex_edges[a].push(e);
            vertex_edges[b].push(e);
        }
    }
    let dir = |e: usize| -> Point2 {
        let [a, b] = mesh.edge(e).vertices;
        (mesh.vertex(b) - mesh.vertex(a)).normalized()
    };
    for edges in &vertex_edges {
        for i in 0..edges.len() {
            for j in (i + 1)..edges.len() {
                let (a, b) = (edges[i], edges[j]);
                if edge_key[a] != edge_key[b] {
                    continue;
                }
                if dir(a).cross(dir(b)).abs() > 1e-9 {
                    continue;
                }
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                if ra != rb {
                    // Union by smaller root id keeps grouping deterministic.
                    let (lo, hi) = (ra.min(rb), ra.max(rb));
                    parent[hi] = lo;
                }
            }
        }
    }

    // Collect groups ordered by root edge id.
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = std::collections::BTreeMap::new();
    for e in 0..mesh.n_edges() {
        if edge_key[e].is_some() {
            let r = find(&mut parent, e);
            groups.entry(r).or_default().push(e);
        }
    }

    let mut faces = Vec::with_capacity(groups.len());
    for (_, mut fine_edges) in groups {
        fine_edges.sort_unstable();
        let key = edge_key[fine_edges[0]].unwrap();
        let rep = fine_edges[0];
        let rep_edge = mesh.edge(rep);
        let plus_tri = if elem_of_tri[rep_edge.tris[0]] == key.plus {
            rep_edge.tris[0]
        } else {
            rep_edge.tris[1]
        };
        let normal = mesh.edge_normal_from(rep, plus_tri);
        let length = fine_edges.iter().map(|&e| mesh.edge_length(e)).sum();
        let minus = if key.kind == FaceKind::Interior { key.minus } else { usize::MAX };
        faces.push(PolyFace { elems: [key.plus, minus], kind: key.kind, fine_edges, normal, length });
    }
    faces
}

/// Submesh of the elements inside the zero-level set, with face markers.
#[derive(Debug)]
pub struct Submesh<'m> {
    pub poly: PolytopicMesh<'m>,
    /// Parent element id (in the full mesh) per submesh element.
    pub parent_elem: Vec<usize>,
}

/// Extracts the computational domain of the state equation: the elements
/// whose triangles carry a negative level-set sign.
///
/// Faces on the zero-level set are marked [`FaceKind::FreeBoundary`]; faces
/// on the hold-all boundary remain [`FaceKind::DomainBoundary`].
pub fn extract_interior_submesh<'m>(
    poly: &PolytopicMesh<'m>,
    fitted: &FittedMesh,
) -> Result<Submesh<'m>> {
    let mut elements = Vec::new();
    let mut parent_elem = Vec::new();
    for e in 0..poly.n_elements() {
        let tris = poly.element(e);
        let inside = tris.iter().all(|&t| fitted.sign[t] == Sign::Neg);
        let mixed = !inside && tris.iter().any(|&t| fitted.sign[t] == Sign::Neg);
        if mixed {
            return Err(Error::InvalidMesh(format!(
                "element {e} mixes level-set signs; agglomerate on a fitted mesh first"
            )));
        }
        if inside {
            elements.push(tris.to_vec());
            parent_elem.push(e);
        }
    }
    if elements.is_empty() {
        return Err(Error::EmptyRegion("no elements with negative level-set sign".into()));
    }
    let sub = PolytopicMesh::build(poly.mesh(), elements)?;
    Ok(Submesh { poly: sub, parent_elem })
}
