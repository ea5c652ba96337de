use serde::{Deserialize, Serialize};

use crate::error::{MfsError, Result};
use crate::Point;

/// Physical width of the exterior collar used when none is given.
pub const DEFAULT_COLLAR: f64 = 0.25;

/// Description of `Omega`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum DomainShape {
    /// The axis-aligned box `[lo, hi]`.
    Box { lo: Point, hi: Point },
    /// A simple polygon (planar domains only), vertices in order.
    Polygon { vertices: Vec<Point> },
}

fn default_collar() -> f64 {
    DEFAULT_COLLAR
}

/// Serializable recipe for a [`GridDomain`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub dim: usize,
    pub shape: DomainShape,
    pub cells: usize,
    #[serde(default = "default_collar")]
    pub collar: f64,
}

impl DomainSpec {
    /// The unit box `[0, 1]^dim`.
    pub fn unit_box(dim: usize, cells: usize) -> Self {
        Self { dim, shape: DomainShape::Box { lo: [0.0, 0.0], hi: [1.0, 1.0] }, cells, collar: DEFAULT_COLLAR }
    }

    pub fn with_cells(&self, cells: usize) -> Self {
        Self { cells, ..self.clone() }
    }

    pub fn build(&self) -> Result<GridDomain> {
        GridDomain::build(self.dim, self.shape.clone(), self.cells, self.collar)
    }
}

/// A uniform cell-centered mesh covering `Omega` plus an exterior collar.
///
/// Nodes are stored row-major over the extended box (x fastest). Values of
/// grid functions live on interior nodes only; every other node carries 0.
#[derive(Debug, Clone)]
pub struct GridDomain {
    dim: usize,
    shape: DomainShape,
    lo: Point,
    hi: Point,
    h: f64,
    collar_cells: usize,
    ext_shape: [usize; 2],
    nodes: Vec<Point>,
    interior: Vec<usize>,
    interior_of: Vec<Option<usize>>,
}

fn inside_polygon(p: Point, poly: &[Point]) -> bool {
    let mut inside = false;
    let n = poly.len();
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (poly[i], poly[j]);
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = a[0] + (p[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
            if p[0] < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

impl GridDomain {
    /// Mesh the box `[lo, hi]` with `cells` cells along the first axis.
    /// For `dim == 1` the second coordinates are ignored.
    pub fn rectangle(dim: usize, lo: Point, hi: Point, cells: usize, collar: f64) -> Result<Self> {
        Self::build(dim, DomainShape::Box { lo, hi }, cells, collar)
    }

    /// Mesh a polygon; `cells` counts cells across the bounding box width.
    pub fn polygon(vertices: Vec<Point>, cells: usize, collar: f64) -> Result<Self> {
        Self::build(2, DomainShape::Polygon { vertices }, cells, collar)
    }

    pub fn build(dim: usize, shape: DomainShape, cells: usize, collar: f64) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(MfsError::Config(format!("dimension must be 1 or 2, got {dim}")));
        }
        if cells == 0 {
            return Err(MfsError::Config("cells must be positive".into()));
        }
        if !(collar >= 0.0 && collar.is_finite()) {
            return Err(MfsError::Config(format!("collar width must be finite and >= 0, got {collar}")));
        }
        let (lo, mut hi) = match &shape {
            DomainShape::Box { lo, hi } => (*lo, *hi),
            DomainShape::Polygon { vertices } => {
                if dim != 2 {
                    return Err(MfsError::Config("polygon domains require dim = 2".into()));
                }
                if vertices.len() < 3 {
                    return Err(MfsError::Config("polygon needs at least 3 vertices".into()));
                }
                let mut lo = [f64::INFINITY; 2];
                let mut hi = [f64::NEG_INFINITY; 2];
                for v in vertices {
                    for a in 0..2 {
                        lo[a] = lo[a].min(v[a]);
                        hi[a] = hi[a].max(v[a]);
                    }
                }
                (lo, hi)
            }
        };
        for a in 0..dim {
            if !(lo[a].is_finite() && hi[a].is_finite() && hi[a] > lo[a]) {
                return Err(MfsError::Config(format!("empty or invalid box along axis {a}: [{}, {}]", lo[a], hi[a])));
            }
        }
        let h = (hi[0] - lo[0]) / cells as f64;
        let mut n = [cells, 1];
        if dim == 2 {
            let ratio = (hi[1] - lo[1]) / h;
            let ny = ratio.round().max(1.0);
            match shape {
                DomainShape::Box { .. } if (ratio - ny).abs() > 1e-9 * ratio.max(1.0) => {
                    return Err(MfsError::Config(format!(
                        "box height {} is not a multiple of the mesh width {h}",
                        hi[1] - lo[1]
                    )));
                }
                DomainShape::Polygon { .. } => {
                    let ny = ratio.ceil();
                    n[1] = ny as usize;
                    hi[1] = lo[1] + ny * h;
                }
                _ => n[1] = ny as usize,
            }
        } else {
            hi[1] = lo[1];
        }
        let c = if collar > 0.0 { (collar / h - 1e-9).ceil() as usize } else { 0 };
        let ext = [n[0] + 2 * c, if dim == 2 { n[1] + 2 * c } else { 1 }];
        let mut nodes = Vec::with_capacity(ext[0] * ext[1]);
        let mut interior = Vec::new();
        let mut interior_of = Vec::with_capacity(ext[0] * ext[1]);
        for iy in 0..ext[1] {
            for ix in 0..ext[0] {
                let x = lo[0] + (ix as f64 - c as f64 + 0.5) * h;
                let y = if dim == 2 { lo[1] + (iy as f64 - c as f64 + 0.5) * h } else { 0.0 };
                let in_box = ix >= c && ix < c + n[0] && (dim == 1 || (iy >= c && iy < c + n[1]));
                let inside = in_box
                    && match &shape {
                        DomainShape::Box { .. } => true,
                        DomainShape::Polygon { vertices } => inside_polygon([x, y], vertices),
                    };
                let idx = nodes.len();
                nodes.push([x, y]);
                if inside {
                    interior_of.push(Some(interior.len()));
                    interior.push(idx);
                } else {
                    interior_of.push(None);
                }
            }
        }
        if interior.is_empty() {
            return Err(MfsError::Config("domain contains no interior node at this resolution".into()));
        }
        Ok(Self { dim, shape, lo, hi, h, collar_cells: c, ext_shape: ext, nodes, interior, interior_of })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn shape(&self) -> &DomainShape {
        &self.shape
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// `h^N`.
    pub fn cell_measure(&self) -> f64 {
        self.h.powi(self.dim as i32)
    }

    /// Discrete measure of `Omega`.
    pub fn measure(&self) -> f64 {
        self.interior.len() as f64 * self.cell_measure()
    }

    pub fn bounding_box(&self) -> (Point, Point) {
        (self.lo, self.hi)
    }

    /// The box covered by interior and collar nodes.
    pub fn extended_box(&self) -> (Point, Point) {
        let w = self.collar_cells as f64 * self.h;
        let mut lo = [self.lo[0] - w, self.lo[1]];
        let mut hi = [self.hi[0] + w, self.hi[1]];
        if self.dim == 2 {
            lo[1] -= w;
            hi[1] += w;
        }
        (lo, hi)
    }

    pub fn collar_cells(&self) -> usize {
        self.collar_cells
    }

    /// Extended mesh size `[nx, ny]` (`ny = 1` in one dimension).
    pub fn ext_shape(&self) -> [usize; 2] {
        self.ext_shape
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_interior(&self) -> usize {
        self.interior.len()
    }

    pub fn node(&self, i: usize) -> Point {
        self.nodes[i]
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    /// Extended-node index of the `k`-th interior node.
    pub fn interior_node(&self, k: usize) -> usize {
        self.interior[k]
    }

    /// Interior index of extended node `i`, if it lies in `Omega`.
    pub fn interior_index(&self, i: usize) -> Option<usize> {
        self.interior_of[i]
    }

    pub fn interior_point(&self, k: usize) -> Point {
        self.nodes[self.interior[k]]
    }

    pub fn interior_points(&self) -> Vec<Point> {
        self.interior.iter().map(|&i| self.nodes[i]).collect()
    }

    /// Mean of the interior node coordinates.
    pub fn centroid(&self) -> Point {
        let n = self.interior.len() as f64;
        let mut c = [0.0, 0.0];
        for &i in &self.interior {
            c[0] += self.nodes[i][0] / n;
            c[1] += self.nodes[i][1] / n;
        }
        c
    }

    pub fn diameter(&self) -> f64 {
        let dx = self.hi[0] - self.lo[0];
        let dy = self.hi[1] - self.lo[1];
        (dx * dx + dy * dy).sqrt()
    }

    /// Distance between two extended nodes.
    #[inline]
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (self.nodes[i], self.nodes[j]);
        ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
    }

    /// Surface measure of the unit sphere in `R^N`.
    pub fn sphere_measure(&self) -> f64 {
        if self.dim == 1 {
            2.0
        } else {
            2.0 * std::f64::consts::PI
        }
    }
}
