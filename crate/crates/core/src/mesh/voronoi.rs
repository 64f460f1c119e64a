//! Voronoi meshes from uniformly drawn seeds, relaxed with Lloyd's algorithm.
//!
//! Each cell is computed independently by clipping the domain rectangle with
//! the bisector half-planes of nearby seeds; seeds are bucketed on a uniform
//! grid and the search stops once no unvisited seed can reach the cell.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{polygon_geometry, BoundingBox, Mesh, Point};
use crate::error::{Error, Result};

/// Points closer than this are identified when cells are stitched together.
const MERGE_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VoronoiOptions {
    pub n_seeds: usize,
    pub rng_seed: u64,
    /// Upper bound on Lloyd iterations.
    pub lloyd_iterations: usize,
    /// Lloyd stops early once the largest seed displacement drops below
    /// `relative_tolerance * h`.
    pub relative_tolerance: f64,
    pub bbox: BoundingBox,
}

impl VoronoiOptions {
    pub fn new(n_seeds: usize, rng_seed: u64, lloyd_iterations: usize) -> Self {
        Self {
            n_seeds,
            rng_seed,
            lloyd_iterations,
            relative_tolerance: 1e-6,
            bbox: BoundingBox::unit_square(),
        }
    }

    pub fn with_bbox(mut self, bbox: BoundingBox) -> Self {
        self.bbox = bbox;
        self
    }

    /// Generate the mesh together with the Lloyd displacement history.
    pub fn build(&self) -> Result<(Mesh, LloydTrace)> {
        if self.n_seeds == 0 {
            return Err(Error::InvalidArgument("voronoi mesh needs at least one seed".into()));
        }
        let seeds = draw_seeds(self.n_seeds, self.rng_seed, &self.bbox);
        let (seeds, trace) = lloyd_relaxation(seeds, &self.bbox, self.lloyd_iterations, self.relative_tolerance);
        let cells = voronoi_cells(&seeds, &self.bbox);
        let mesh = stitch(&cells, self.bbox)?;
        Ok((mesh, trace))
    }
}

/// Largest seed displacement of every Lloyd iteration performed.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LloydTrace {
    pub displacements: Vec<f64>,
}

/// Voronoi mesh of the unit square.
pub fn generate_voronoi(n_seeds: usize, rng_seed: u64, lloyd_iterations: usize) -> Result<Mesh> {
    VoronoiOptions::new(n_seeds, rng_seed, lloyd_iterations).build().map(|(m, _)| m)
}

pub fn generate_voronoi_in(bbox: BoundingBox, n_seeds: usize, rng_seed: u64, lloyd_iterations: usize) -> Result<Mesh> {
    VoronoiOptions::new(n_seeds, rng_seed, lloyd_iterations)
        .with_bbox(bbox)
        .build()
        .map(|(m, _)| m)
}

fn draw_seeds(n: usize, rng_seed: u64, bbox: &BoundingBox) -> Vec<Point> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let draw = |rng: &mut ChaCha8Rng| {
        Point::new(
            bbox.min.x + rng.random::<f64>() * bbox.width(),
            bbox.min.y + rng.random::<f64>() * bbox.height(),
        )
    };
    let mut seeds: Vec<Point> = (0..n).map(|_| draw(&mut rng)).collect();
    // Coincident seeds are redrawn from the same stream until all are distinct.
    let tol = 1e-12 * (bbox.width() + bbox.height());
    loop {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| seeds[a].x.total_cmp(&seeds[b].x).then(seeds[a].y.total_cmp(&seeds[b].y)));
        let mut clash = None;
        for w in order.windows(2) {
            if (seeds[w[0]] - seeds[w[1]]).norm() <= tol {
                clash = Some(w[1].max(w[0]));
                break;
            }
        }
        match clash {
            Some(i) => seeds[i] = draw(&mut rng),
            None => return seeds,
        }
    }
}

/// Move seeds to the centroids of their cells until the largest displacement
/// falls below `relative_tolerance * h` or `max_iterations` is reached.
pub fn lloyd_relaxation(
    mut seeds: Vec<Point>,
    bbox: &BoundingBox,
    max_iterations: usize,
    relative_tolerance: f64,
) -> (Vec<Point>, LloydTrace) {
    let mut trace = LloydTrace::default();
    for _ in 0..max_iterations {
        let cells = voronoi_cells(&seeds, bbox);
        let mut h = 0.0_f64;
        let mut displacement = 0.0_f64;
        for (seed, cell) in seeds.iter_mut().zip(&cells) {
            let g = polygon_geometry(cell);
            h = h.max(g.diameter);
            displacement = displacement.max((g.centroid - *seed).norm());
            *seed = g.centroid;
        }
        trace.displacements.push(displacement);
        if displacement < relative_tolerance * h {
            break;
        }
    }
    (seeds, trace)
}

struct SeedGrid {
    nx: usize,
    ny: usize,
    dx: f64,
    dy: f64,
    origin: Point,
    buckets: Vec<Vec<usize>>,
}

impl SeedGrid {
    fn new(seeds: &[Point], bbox: &BoundingBox) -> Self {
        let side = (seeds.len() as f64).sqrt().ceil().max(1.0) as usize;
        let (nx, ny) = (side, side);
        let dx = bbox.width() / nx as f64;
        let dy = bbox.height() / ny as f64;
        let mut grid = Self {
            nx,
            ny,
            dx,
            dy,
            origin: bbox.min,
            buckets: vec![Vec::new(); nx * ny],
        };
        for (i, s) in seeds.iter().enumerate() {
            let (bx, by) = grid.bucket_of(s);
            grid.buckets[by * nx + bx].push(i);
        }
        grid
    }

    fn bucket_of(&self, p: &Point) -> (usize, usize) {
        let bx = (((p.x - self.origin.x) / self.dx).floor().max(0.0) as usize).min(self.nx - 1);
        let by = (((p.y - self.origin.y) / self.dy).floor().max(0.0) as usize).min(self.ny - 1);
        (bx, by)
    }
}

fn clip(poly: &[Point], mid: Point, dir: Point) -> Vec<Point> {
    let n = poly.len();
    let mut out = Vec::with_capacity(n + 1);
    for k in 0..n {
        let p = poly[k];
        let q = poly[(k + 1) % n];
        let dp = (p - mid).dot(&dir);
        let dq = (q - mid).dot(&dir);
        if dp <= 0.0 {
            out.push(p);
        }
        if (dp < 0.0 && dq > 0.0) || (dp > 0.0 && dq < 0.0) {
            let t = dp / (dp - dq);
            out.push(p + (q - p) * t);
        }
    }
    out
}

/// Voronoi cells of `seeds` clipped to `bbox`, each counter-clockwise.
pub(crate) fn voronoi_cells(seeds: &[Point], bbox: &BoundingBox) -> Vec<Vec<Point>> {
    let grid = SeedGrid::new(seeds, bbox);
    let rect = vec![
        bbox.min,
        Point::new(bbox.max.x, bbox.min.y),
        bbox.max,
        Point::new(bbox.min.x, bbox.max.y),
    ];
    let step = grid.dx.min(grid.dy);
    seeds
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let mut poly = rect.clone();
            let (bx, by) = grid.bucket_of(s);
            let max_ring = grid.nx.max(grid.ny);
            for ring in 0..=max_ring {
                let (x0, x1) = (bx as isize - ring as isize, bx as isize + ring as isize);
                let (y0, y1) = (by as isize - ring as isize, by as isize + ring as isize);
                for yy in y0..=y1 {
                    for xx in x0..=x1 {
                        let on_ring = yy == y0 || yy == y1 || xx == x0 || xx == x1;
                        if !on_ring || xx < 0 || yy < 0 || xx >= grid.nx as isize || yy >= grid.ny as isize {
                            continue;
                        }
                        for &j in &grid.buckets[yy as usize * grid.nx + xx as usize] {
                            if j != i {
                                let other = seeds[j];
                                poly = clip(&poly, (s + other) * 0.5, other - s);
                            }
                        }
                    }
                }
                // Seeds beyond this ring are at least `ring * step` away.
                let reach = poly.iter().map(|p| (p - s).norm()).fold(0.0, f64::max);
                if ring as f64 * step >= 2.0 * reach {
                    break;
                }
            }
            poly
        })
        .collect()
}

/// Merge coincident points across cells and build the mesh.
fn stitch(cells: &[Vec<Point>], bbox: BoundingBox) -> Result<Mesh> {
    let points: Vec<Point> = cells.iter().flatten().copied().collect();
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| points[a].x.total_cmp(&points[b].x).then(points[a].y.total_cmp(&points[b].y)));

    let mut representative = vec![usize::MAX; points.len()];
    let mut vertices: Vec<Point> = Vec::new();
    for (pos, &i) in order.iter().enumerate() {
        // Scan back over points within the x-window for an already merged one.
        let mut found = None;
        for &j in order[..pos].iter().rev() {
            if points[i].x - points[j].x > MERGE_TOLERANCE {
                break;
            }
            if (points[i] - points[j]).norm() <= MERGE_TOLERANCE {
                found = Some(representative[j]);
                break;
            }
        }
        representative[i] = match found {
            Some(r) => r,
            None => {
                vertices.push(points[i]);
                vertices.len() - 1
            }
        };
    }

    // Renumber vertices in order of first appearance for a cell-major layout.
    let mut renumber = vec![usize::MAX; vertices.len()];
    let mut ordered = Vec::with_capacity(vertices.len());
    let mut offset = 0;
    let mut loops = Vec::with_capacity(cells.len());
    for cell in cells {
        let mut ids: Vec<usize> = Vec::with_capacity(cell.len());
        for k in 0..cell.len() {
            let r = representative[offset + k];
            if renumber[r] == usize::MAX {
                renumber[r] = ordered.len();
                ordered.push(vertices[r]);
            }
            let id = renumber[r];
            if ids.last() != Some(&id) {
                ids.push(id);
            }
        }
        while ids.len() > 1 && ids.first() == ids.last() {
            ids.pop();
        }
        offset += cell.len();
        loops.push(ids);
    }
    let mesh = Mesh::new(ordered, loops, Some(bbox))?;
    let euler = mesh.n_vertices() as i64 - mesh.n_edges() as i64 + mesh.n_cells() as i64;
    if euler != 1 {
        return Err(Error::InvalidMesh(format!("voronoi mesh violates the Euler relation (V - E + C = {euler})")));
    }
    Ok(mesh)
}
