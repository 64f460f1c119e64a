//! Polygonal meshes of a rectangular domain.
//!
//! A [`Mesh`] stores vertex coordinates and counter-clockwise cell loops. Edges
//! are derived at construction: each edge is stored once with a fixed global
//! orientation (tangent from the lower to the higher vertex index, normal equal
//! to the tangent rotated by -90 degrees), and every cell records for each of
//! its local edges whether that global normal points out of the cell.

mod criss;
mod io;
mod voronoi;

pub use criss::{generate_criss, generate_criss_in};
pub use io::{load_mesh, mesh_from_json, mesh_to_json, save_mesh};
pub use voronoi::{generate_voronoi, generate_voronoi_in, lloyd_relaxation, LloydTrace, VoronoiOptions};

use std::collections::HashMap;

use nalgebra::Vector2;

use crate::error::{Error, Result};

pub type Point = Vector2<f64>;

/// Axis-aligned rectangle `[x0, x1] x [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox {
    pub min: Point,
    pub max: Point,
}

impl BoundingBox {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Self {
            min: Point::new(x0, y0),
            max: Point::new(x1, y1),
        }
    }

    pub fn unit_square() -> Self {
        Self::new(0.0, 0.0, 1.0, 1.0)
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn center(&self) -> Point {
        (self.min + self.max) * 0.5
    }

    fn of_points(points: &[Point]) -> Self {
        let mut min = Point::new(f64::INFINITY, f64::INFINITY);
        let mut max = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in points {
            min = min.inf(p);
            max = max.sup(p);
        }
        Self { min, max }
    }
}

/// One edge of the mesh with its fixed global orientation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    /// Endpoints with `vertices[0] < vertices[1]`.
    pub vertices: [usize; 2],
    /// Adjacent cells; the second slot is `None` on the boundary.
    pub cells: [Option<usize>; 2],
}

impl Edge {
    pub fn is_boundary(&self) -> bool {
        self.cells[1].is_none()
    }
}

/// Geometric data of a cell computed once at construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellGeometry {
    pub area: f64,
    /// Area centroid.
    pub centroid: Point,
    /// Maximal vertex-to-vertex distance.
    pub diameter: f64,
}

#[derive(Debug, Clone)]
pub struct Mesh {
    vertices: Vec<Point>,
    cells: Vec<Vec<usize>>,
    edges: Vec<Edge>,
    cell_edges: Vec<Vec<usize>>,
    cell_edge_signs: Vec<Vec<f64>>,
    geometry: Vec<CellGeometry>,
    bbox: BoundingBox,
}

/// Counts and size measures of a mesh.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshStats {
    pub n_vertices: usize,
    pub n_edges: usize,
    pub n_cells: usize,
    /// Largest cell diameter.
    pub h: f64,
    /// Smallest ratio `h_e / h_K` over all cells and their edges.
    pub min_edge_ratio: f64,
}

impl Mesh {
    /// Build and validate a mesh. When `bbox` is `None` it is taken as the
    /// bounding box of the vertices.
    pub fn new(vertices: Vec<Point>, cells: Vec<Vec<usize>>, bbox: Option<BoundingBox>) -> Result<Self> {
        if cells.is_empty() {
            return Err(Error::InvalidMesh("mesh has no cells".into()));
        }
        for (i, p) in vertices.iter().enumerate() {
            if !p.x.is_finite() || !p.y.is_finite() {
                return Err(Error::InvalidMesh(format!("vertex {i} is not finite")));
            }
        }
        for (c, cell) in cells.iter().enumerate() {
            validate_cell(c, cell, &vertices)?;
        }

        let mut edge_index: HashMap<(usize, usize), usize> = HashMap::new();
        let mut edges: Vec<Edge> = Vec::new();
        let mut cell_edges = Vec::with_capacity(cells.len());
        let mut cell_edge_signs = Vec::with_capacity(cells.len());
        for (c, cell) in cells.iter().enumerate() {
            let n = cell.len();
            let mut ids = Vec::with_capacity(n);
            let mut signs = Vec::with_capacity(n);
            for k in 0..n {
                let (a, b) = (cell[k], cell[(k + 1) % n]);
                let key = (a.min(b), a.max(b));
                let id = match edge_index.get(&key) {
                    Some(&id) => {
                        let edge = &mut edges[id];
                        if edge.cells[1].is_some() {
                            return Err(Error::InvalidMesh(format!(
                                "edge ({}, {}) is shared by more than two cells",
                                key.0, key.1
                            )));
                        }
                        edge.cells[1] = Some(c);
                        id
                    }
                    None => {
                        let id = edges.len();
                        edges.push(Edge {
                            vertices: [key.0, key.1],
                            cells: [Some(c), None],
                        });
                        edge_index.insert(key, id);
                        id
                    }
                };
                ids.push(id);
                signs.push(if a < b { 1.0 } else { -1.0 });
            }
            cell_edges.push(ids);
            cell_edge_signs.push(signs);
        }

        // The two cells on an interior edge must traverse it in opposite directions.
        for (id, edge) in edges.iter().enumerate() {
            if let [Some(c0), Some(c1)] = edge.cells {
                let s0 = sign_of(&cell_edges[c0], &cell_edge_signs[c0], id);
                let s1 = sign_of(&cell_edges[c1], &cell_edge_signs[c1], id);
                if s0 == s1 {
                    return Err(Error::InvalidMesh(format!(
                        "cells {c0} and {c1} traverse edge ({}, {}) in the same direction",
                        edge.vertices[0], edge.vertices[1]
                    )));
                }
            }
        }

        let geometry = cells.iter().map(|cell| cell_geometry(cell, &vertices)).collect();
        let bbox = bbox.unwrap_or_else(|| BoundingBox::of_points(&vertices));
        Ok(Self {
            vertices,
            cells,
            edges,
            cell_edges,
            cell_edge_signs,
            geometry,
            bbox,
        })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn cells(&self) -> &[Vec<usize>] {
        &self.cells
    }

    pub fn cell(&self, c: usize) -> &[usize] {
        &self.cells[c]
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    /// Global edge ids of the local edges of cell `c`; local edge `k` joins
    /// local vertices `k` and `k + 1`.
    pub fn cell_edges(&self, c: usize) -> &[usize] {
        &self.cell_edges[c]
    }

    /// `+1` where the global normal of local edge `k` is outward for cell `c`.
    pub fn cell_edge_signs(&self, c: usize) -> &[f64] {
        &self.cell_edge_signs[c]
    }

    pub fn geometry(&self, c: usize) -> &CellGeometry {
        &self.geometry[c]
    }

    pub fn bbox(&self) -> BoundingBox {
        self.bbox
    }

    pub fn cell_points(&self, c: usize) -> Vec<Point> {
        self.cells[c].iter().map(|&v| self.vertices[v]).collect()
    }

    /// Unit tangent (lower to higher vertex index) of a global edge.
    pub fn edge_tangent(&self, e: usize) -> Point {
        let [a, b] = self.edges[e].vertices;
        (self.vertices[b] - self.vertices[a]).normalize()
    }

    /// Unit global normal: the tangent rotated by -90 degrees.
    pub fn edge_normal(&self, e: usize) -> Point {
        let t = self.edge_tangent(e);
        Point::new(t.y, -t.x)
    }

    pub fn edge_length(&self, e: usize) -> f64 {
        let [a, b] = self.edges[e].vertices;
        (self.vertices[b] - self.vertices[a]).norm()
    }

    pub fn edge_midpoint(&self, e: usize) -> Point {
        let [a, b] = self.edges[e].vertices;
        (self.vertices[a] + self.vertices[b]) * 0.5
    }

    pub fn total_area(&self) -> f64 {
        self.geometry.iter().map(|g| g.area).sum()
    }

    pub fn is_convex(&self, c: usize) -> bool {
        polygon_is_convex(&self.cell_points(c))
    }

    /// Indices of cells that fail the convexity check.
    pub fn nonconvex_cells(&self) -> Vec<usize> {
        (0..self.n_cells()).filter(|&c| !self.is_convex(c)).collect()
    }

    pub fn stats(&self) -> MeshStats {
        mesh_stats(self)
    }

    /// Locate a cell containing `p` among cells whose bounding box contains it.
    /// Intended for convex cells; a linear scan.
    pub fn locate(&self, p: &Point) -> Option<usize> {
        (0..self.n_cells()).find(|&c| point_in_convex(&self.cell_points(c), p, 1e-12))
    }
}

fn sign_of(ids: &[usize], signs: &[f64], edge: usize) -> f64 {
    ids.iter().position(|&e| e == edge).map(|k| signs[k]).unwrap_or(0.0)
}

pub fn mesh_stats(mesh: &Mesh) -> MeshStats {
    let mut h = 0.0_f64;
    let mut min_edge_ratio = f64::INFINITY;
    for c in 0..mesh.n_cells() {
        let g = mesh.geometry(c);
        h = h.max(g.diameter);
        for &e in mesh.cell_edges(c) {
            min_edge_ratio = min_edge_ratio.min(mesh.edge_length(e) / g.diameter);
        }
    }
    MeshStats {
        n_vertices: mesh.n_vertices(),
        n_edges: mesh.n_edges(),
        n_cells: mesh.n_cells(),
        h,
        min_edge_ratio,
    }
}

fn validate_cell(c: usize, cell: &[usize], vertices: &[Point]) -> Result<()> {
    let n = cell.len();
    if n < 3 {
        return Err(Error::InvalidMesh(format!("cell {c} has {n} vertices, at least 3 are required")));
    }
    for &v in cell {
        if v >= vertices.len() {
            return Err(Error::InvalidMesh(format!("cell {c} references missing vertex {v}")));
        }
    }
    let mut sorted = cell.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != n {
        return Err(Error::InvalidMesh(format!("cell {c} repeats a vertex")));
    }
    let pts: Vec<Point> = cell.iter().map(|&v| vertices[v]).collect();
    let area = signed_area(&pts);
    if area <= 0.0 {
        return Err(Error::InvalidMesh(format!(
            "cell {c} is not counter-clockwise (signed area {area:.3e})"
        )));
    }
    if !polygon_is_simple(&pts) {
        return Err(Error::InvalidMesh(format!("cell {c} is self-intersecting")));
    }
    Ok(())
}

pub(crate) fn signed_area(pts: &[Point]) -> f64 {
    let n = pts.len();
    let mut a = 0.0;
    for k in 0..n {
        let (p, q) = (pts[k], pts[(k + 1) % n]);
        a += p.x * q.y - q.x * p.y;
    }
    0.5 * a
}

pub(crate) fn cell_geometry(cell: &[usize], vertices: &[Point]) -> CellGeometry {
    let pts: Vec<Point> = cell.iter().map(|&v| vertices[v]).collect();
    polygon_geometry(&pts)
}

pub(crate) fn polygon_geometry(pts: &[Point]) -> CellGeometry {
    let n = pts.len();
    // Centroid relative to the first vertex to limit cancellation.
    let o = pts[0];
    let mut a2 = 0.0;
    let mut cx = 0.0;
    let mut cy = 0.0;
    for k in 0..n {
        let p = pts[k] - o;
        let q = pts[(k + 1) % n] - o;
        let cross = p.x * q.y - q.x * p.y;
        a2 += cross;
        cx += (p.x + q.x) * cross;
        cy += (p.y + q.y) * cross;
    }
    let area = 0.5 * a2;
    let centroid = o + Point::new(cx / (3.0 * a2), cy / (3.0 * a2));
    let mut diameter = 0.0_f64;
    for i in 0..n {
        for j in i + 1..n {
            diameter = diameter.max((pts[i] - pts[j]).norm());
        }
    }
    CellGeometry {
        area,
        centroid,
        diameter,
    }
}

fn cross(a: Point, b: Point) -> f64 {
    a.x * b.y - a.y * b.x
}

pub(crate) fn polygon_is_convex(pts: &[Point]) -> bool {
    let n = pts.len();
    let scale = pts.iter().map(|p| p.norm()).fold(1.0, f64::max);
    (0..n).all(|k| {
        let a = pts[k];
        let b = pts[(k + 1) % n];
        let c = pts[(k + 2) % n];
        cross(b - a, c - b) >= -1e-12 * scale * scale
    })
}

fn segments_intersect(p1: Point, p2: Point, q1: Point, q2: Point) -> bool {
    let d1 = cross(q2 - q1, p1 - q1);
    let d2 = cross(q2 - q1, p2 - q1);
    let d3 = cross(p2 - p1, q1 - p1);
    let d4 = cross(p2 - p1, q2 - p1);
    ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
}

fn polygon_is_simple(pts: &[Point]) -> bool {
    let n = pts.len();
    if n <= 3 {
        return true;
    }
    for i in 0..n {
        for j in i + 2..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            if segments_intersect(pts[i], pts[(i + 1) % n], pts[j], pts[(j + 1) % n]) {
                return false;
            }
        }
    }
    true
}

pub(crate) fn point_in_convex(pts: &[Point], p: &Point, tol: f64) -> bool {
    let n = pts.len();
    (0..n).all(|k| {
        let a = pts[k];
        let b = pts[(k + 1) % n];
        cross(b - a, p - a) >= -tol * (b - a).norm()
    })
}
