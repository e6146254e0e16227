//! Field geometry: polygon validation, minimum bounding rectangles, and
//! rasterization of a field polygon into a visitability grid.
//!
//! Coordinates are planar meters. Grid row 0 is the top row of the bounding
//! rectangle (the max-y side), matching the text raster convention where the
//! first line of a map file is the northern edge.

use crate::gridworld::{Cell, GridMap};

/// A planar point in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
}

/// A simple polygon given as an ordered vertex ring. Closure is implicit:
/// the last vertex connects back to the first.
#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    vertices: Vec<Point>,
}

/// Axis-aligned minimum bounding rectangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mbr {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl Mbr {
    pub fn width(&self) -> f64 {
        self.max_x - self.min_x
    }

    pub fn height(&self) -> f64 {
        self.max_y - self.min_y
    }

    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.min_x && p.x <= self.max_x && p.y >= self.min_y && p.y <= self.max_y
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GeometryError {
    /// Fewer than three vertices.
    TooFewVertices(usize),
    /// Two consecutive vertices coincide, or the first vertex is repeated at
    /// the end of the ring.
    DuplicateVertex(usize),
    /// Two edges of the ring intersect or overlap.
    SelfIntersection { edge_a: usize, edge_b: usize },
    /// All vertices are collinear; the polygon enclosed no area.
    DegeneratePolygon,
    /// No cell center fell inside the polygon at the requested resolution.
    NoVisitableCells,
    /// Grid dimensions must be at least 1x1.
    EmptyGrid,
    /// Cell edge length must be positive and finite.
    BadCellSize(f64),
    /// A coordinate was NaN or infinite.
    NonFiniteCoordinate,
}

impl std::fmt::Display for GeometryError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::TooFewVertices(n) => write!(f, "polygon needs at least 3 vertices, got {n}"),
            Self::DuplicateVertex(i) => {
                write!(f, "duplicate consecutive vertex at index {i} (the ring closes implicitly)")
            }
            Self::SelfIntersection { edge_a, edge_b } => {
                write!(f, "polygon edges {edge_a} and {edge_b} intersect")
            }
            Self::DegeneratePolygon => write!(f, "polygon vertices are collinear"),
            Self::NoVisitableCells => write!(f, "no cell center lies inside the polygon"),
            Self::EmptyGrid => write!(f, "grid must have at least one row and one column"),
            Self::BadCellSize(s) => write!(f, "cell size must be positive and finite, got {s}"),
            Self::NonFiniteCoordinate => write!(f, "vertex coordinates must be finite"),
        }
    }
}

impl std::error::Error for GeometryError {}

impl Polygon {
    /// Validates and builds a polygon. Rejects rings with fewer than three
    /// vertices, coincident consecutive vertices, an explicitly repeated
    /// closing vertex, self-intersecting edges, and zero-area rings.
    pub fn new(vertices: Vec<Point>) -> Result<Self, GeometryError> {
        let n = vertices.len();
        if n < 3 {
            return Err(GeometryError::TooFewVertices(n));
        }
        if vertices.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
            return Err(GeometryError::NonFiniteCoordinate);
        }
        for i in 0..n {
            let j = (i + 1) % n;
            if vertices[i] == vertices[j] {
                return Err(GeometryError::DuplicateVertex(i));
            }
        }
        // Consecutive edges that double back on each other create a spike the
        // pairwise test below cannot see (they legitimately share a vertex).
        for i in 0..n {
            let a = vertices[i];
            let b = vertices[(i + 1) % n];
            let c = vertices[(i + 2) % n];
            let (ux, uy) = (b.x - a.x, b.y - a.y);
            let (vx, vy) = (c.x - b.x, c.y - b.y);
            if ux * vy - uy * vx == 0.0 && ux * vx + uy * vy < 0.0 {
                return Err(GeometryError::SelfIntersection { edge_a: i, edge_b: (i + 1) % n });
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                // Adjacent edges share exactly one endpoint by construction.
                if j == i + 1 || (i == 0 && j == n - 1) {
                    continue;
                }
                let (a1, a2) = (vertices[i], vertices[(i + 1) % n]);
                let (b1, b2) = (vertices[j], vertices[(j + 1) % n]);
                if segments_intersect(a1, a2, b1, b2) {
                    return Err(GeometryError::SelfIntersection { edge_a: i, edge_b: j });
                }
            }
        }
        let poly = Self { vertices };
        let mbr = compute_mbr(&poly);
        if !(mbr.min_x < mbr.max_x) || !(mbr.min_y < mbr.max_y) {
            return Err(GeometryError::DegeneratePolygon);
        }
        Ok(poly)
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }
}

/// Axis-aligned minimum bounding rectangle from the vertex extrema.
pub fn compute_mbr(polygon: &Polygon) -> Mbr {
    let mut mbr = Mbr {
        min_x: f64::INFINITY,
        min_y: f64::INFINITY,
        max_x: f64::NEG_INFINITY,
        max_y: f64::NEG_INFINITY,
    };
    for p in polygon.vertices() {
        mbr.min_x = mbr.min_x.min(p.x);
        mbr.min_y = mbr.min_y.min(p.y);
        mbr.max_x = mbr.max_x.max(p.x);
        mbr.max_y = mbr.max_y.max(p.y);
    }
    mbr
}

/// Even-odd ray-casting membership test. Points exactly on an edge count as
/// inside, so cell centers landing on a boundary get a deterministic label.
pub fn point_in_polygon(p: Point, polygon: &Polygon) -> bool {
    let verts = polygon.vertices();
    let n = verts.len();
    for i in 0..n {
        if point_on_segment(p, verts[i], verts[(i + 1) % n]) {
            return true;
        }
    }
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (vi, vj) = (verts[i], verts[j]);
        if (vi.y > p.y) != (vj.y > p.y) {
            let x_cross = vj.x + (vi.x - vj.x) * (p.y - vj.y) / (vi.y - vj.y);
            if p.x < x_cross {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

/// Splits the polygon's MBR into `rows` x `cols` equal cells and labels each
/// cell visitable iff its center lies inside the polygon. The resulting map's
/// start defaults to the first visitable cell in row-major order; callers
/// with explicit start positions replace it afterwards.
pub fn rasterize(polygon: &Polygon, rows: usize, cols: usize) -> Result<GridMap, GeometryError> {
    if rows == 0 || cols == 0 {
        return Err(GeometryError::EmptyGrid);
    }
    let mbr = compute_mbr(polygon);
    let cell_w = mbr.width() / cols as f64;
    let cell_h = mbr.height() / rows as f64;
    let mut visitable = vec![false; rows * cols];
    for r in 0..rows {
        // Row 0 sits along the max-y edge.
        let cy = mbr.max_y - (r as f64 + 0.5) * cell_h;
        for c in 0..cols {
            let cx = mbr.min_x + (c as f64 + 0.5) * cell_w;
            visitable[r * cols + c] = point_in_polygon(Point::new(cx, cy), polygon);
        }
    }
    let first = visitable
        .iter()
        .position(|&v| v)
        .ok_or(GeometryError::NoVisitableCells)?;
    let start = Cell::new(first / cols, first % cols);
    Ok(GridMap::new(rows, cols, visitable, vec![start])
        .expect("rasterized mask has a visitable start cell"))
}

/// Grid dimensions for a target cell edge length, by ceiling division of the
/// MBR extent. Always at least 1x1.
pub fn dims_for_cell_size(mbr: &Mbr, cell_size: f64) -> Result<(usize, usize), GeometryError> {
    if !(cell_size > 0.0) || !cell_size.is_finite() {
        return Err(GeometryError::BadCellSize(cell_size));
    }
    let rows = (mbr.height() / cell_size).ceil().max(1.0) as usize;
    let cols = (mbr.width() / cell_size).ceil().max(1.0) as usize;
    Ok((rows, cols))
}

fn point_on_segment(p: Point, a: Point, b: Point) -> bool {
    let cross = (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
    if cross != 0.0 {
        return false;
    }
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

fn orientation(a: Point, b: Point, c: Point) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

/// Segment intersection test including touching and collinear overlap.
fn segments_intersect(a1: Point, a2: Point, b1: Point, b2: Point) -> bool {
    let d1 = orientation(a1, a2, b1);
    let d2 = orientation(a1, a2, b2);
    let d3 = orientation(b1, b2, a1);
    let d4 = orientation(b1, b2, a2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && point_on_segment(b1, a1, a2))
        || (d2 == 0.0 && point_on_segment(b2, a1, a2))
        || (d3 == 0.0 && point_on_segment(a1, b1, b2))
        || (d4 == 0.0 && point_on_segment(a2, b1, b2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn poly(coords: &[(f64, f64)]) -> Polygon {
        Polygon::new(coords.iter().map(|&(x, y)| Point::new(x, y)).collect()).unwrap()
    }

    fn square10() -> Polygon {
        poly(&[(0.0, 0.0), (10.0, 0.0), (10.0, 10.0), (0.0, 10.0)])
    }

    fn triangle() -> Polygon {
        poly(&[(0.0, 0.0), (4.0, 0.0), (2.0, 3.0)])
    }

    #[test]
    fn mbr_of_axis_aligned_square_is_itself() {
        let m = compute_mbr(&square10());
        assert_eq!((m.min_x, m.min_y, m.max_x, m.max_y), (0.0, 0.0, 10.0, 10.0));
    }

    #[test]
    fn mbr_of_triangle_from_vertex_extrema() {
        let m = compute_mbr(&triangle());
        assert_eq!((m.min_x, m.min_y, m.max_x, m.max_y), (0.0, 0.0, 4.0, 3.0));
    }

    #[test]
    fn mbr_is_translation_equivariant() {
        let base = triangle();
        let shifted = Polygon::new(
            base.vertices()
                .iter()
                .map(|p| Point::new(p.x + 5.0, p.y + 5.0))
                .collect(),
        )
        .unwrap();
        let (a, b) = (compute_mbr(&base), compute_mbr(&shifted));
        assert_eq!(b.min_x, a.min_x + 5.0);
        assert_eq!(b.min_y, a.min_y + 5.0);
        assert_eq!(b.max_x, a.max_x + 5.0);
        assert_eq!(b.max_y, a.max_y + 5.0);
    }

    #[test]
    fn polygon_validation_rejects_bad_rings() {
        assert!(matches!(
            Polygon::new(vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0)]),
            Err(GeometryError::TooFewVertices(2))
        ));
        // Explicit closing vertex.
        assert!(matches!(
            Polygon::new(vec![
                Point::new(0.0, 0.0),
                Point::new(1.0, 0.0),
                Point::new(0.0, 1.0),
                Point::new(0.0, 0.0),
            ]),
            Err(GeometryError::DuplicateVertex(3))
        ));
        // Bowtie.
        assert!(matches!(
            Polygon::new(vec![
                Point::new(0.0, 0.0),
                Point::new(2.0, 2.0),
                Point::new(2.0, 0.0),
                Point::new(0.0, 2.0),
            ]),
            Err(GeometryError::SelfIntersection { .. })
        ));
        // Collinear spike.
        assert!(Polygon::new(vec![
            Point::new(0.0, 0.0),
            Point::new(2.0, 0.0),
            Point::new(1.0, 0.0),
        ])
        .is_err());
    }

    #[test]
    fn centroid_of_convex_polygon_is_inside() {
        let p = square10();
        assert!(point_in_polygon(Point::new(5.0, 5.0), &p));
    }

    #[test]
    fn point_outside_mbr_is_outside() {
        assert!(!point_in_polygon(Point::new(11.0, 5.0), &square10()));
        assert!(!point_in_polygon(Point::new(-1.0, -1.0), &triangle()));
    }

    #[test]
    fn hand_ray_cast_point_in_triangle() {
        assert!(point_in_polygon(Point::new(2.0, 1.0), &triangle()));
    }

    #[test]
    fn edge_points_count_as_inside() {
        let p = square10();
        assert!(point_in_polygon(Point::new(0.0, 5.0), &p));
        assert!(point_in_polygon(Point::new(10.0, 10.0), &p));
    }

    #[test]
    fn rasterize_square_covers_mbr() {
        let map = rasterize(&square10(), 2, 2).unwrap();
        assert_eq!(map.visitable_count(), 4);
    }

    #[test]
    fn rasterize_triangle_3x3_matches_hand_membership() {
        // Cell centers over Mbr(0,0,4,3), row 0 on top (y = 2.5):
        //   y=2.5: inside needs 5/3 <= x <= 7/3  -> only x=2
        //   y=1.5: inside needs 1 <= x <= 3      -> only x=2
        //   y=0.5: inside needs 1/3 <= x <= 11/3 -> x in {2/3, 2, 10/3}
        let map = rasterize(&triangle(), 3, 3).unwrap();
        let expected = [
            false, true, false, //
            false, true, false, //
            true, true, true,
        ];
        for (i, &want) in expected.iter().enumerate() {
            assert_eq!(map.is_visitable(Cell::new(i / 3, i % 3)), want, "cell {i}");
        }
        assert_eq!(map.visitable_count(), 5);
        // Default start is the first visitable cell in row-major order.
        assert_eq!(map.starts(), &[Cell::new(0, 1)]);
    }

    #[test]
    fn rasterize_1x1_single_cell() {
        let map = rasterize(&square10(), 1, 1).unwrap();
        assert_eq!((map.rows(), map.cols()), (1, 1));
        assert_eq!(map.visitable_count(), 1);
    }

    #[test]
    fn rasterize_with_no_interior_centers_errors() {
        // Thin diagonal band: at 1x2 both cell centers sit at y = 0.3, above
        // the band near x = 2.5 and below it near x = 7.5.
        let sliver = poly(&[(0.0, 0.0), (10.0, 0.5), (10.0, 0.6), (0.0, 0.1)]);
        assert_eq!(rasterize(&sliver, 1, 2), Err(GeometryError::NoVisitableCells));
    }

    #[test]
    fn dims_for_cell_size_uses_ceiling_division() {
        let m = compute_mbr(&square10());
        assert_eq!(dims_for_cell_size(&m, 3.0).unwrap(), (4, 4));
        assert_eq!(dims_for_cell_size(&m, 10.0).unwrap(), (1, 1));
        assert_eq!(dims_for_cell_size(&m, 100.0).unwrap(), (1, 1));
        assert!(dims_for_cell_size(&m, 0.0).is_err());
    }

    proptest! {
        // MBR tightness: shrinking any side excludes some vertex.
        #[test]
        fn mbr_is_tight(xs in proptest::collection::vec(-100.0f64..100.0, 3..8)) {
            let verts: Vec<Point> = xs
                .iter()
                .enumerate()
                .map(|(i, &x)| Point::new(x, (i as f64) * 7.3 + x * 0.1))
                .collect();
            if let Ok(p) = Polygon::new(verts) {
                let m = compute_mbr(&p);
                let vs = p.vertices();
                prop_assert!(vs.iter().all(|v| m.contains(*v)));
                prop_assert!(vs.iter().any(|v| v.x == m.min_x));
                prop_assert!(vs.iter().any(|v| v.x == m.max_x));
                prop_assert!(vs.iter().any(|v| v.y == m.min_y));
                prop_assert!(vs.iter().any(|v| v.y == m.max_y));
            }
        }

        // Visitable count stays within [1, rows*cols] whenever rasterize succeeds.
        #[test]
        fn rasterize_count_bounds(rows in 1usize..8, cols in 1usize..8) {
            if let Ok(map) = rasterize(&triangle(), rows, cols) {
                prop_assert!(map.visitable_count() >= 1);
                prop_assert!(map.visitable_count() <= rows * cols);
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        // Membership agrees with the half-plane (winding) rule on convex
        // polygons for 1,000 random points.
        #[test]
        fn even_odd_matches_winding_on_convex(
            n in 3usize..9,
            seed_angle in 0.0f64..1.0,
            radius in 1.0f64..50.0,
            px in -60.0f64..60.0,
            py in -60.0f64..60.0,
        ) {
            let verts: Vec<Point> = (0..n)
                .map(|i| {
                    let theta = (i as f64 / n as f64 + seed_angle) * std::f64::consts::TAU;
                    Point::new(radius * theta.cos(), radius * theta.sin())
                })
                .collect();
            let polygon = Polygon::new(verts).unwrap();
            let p = Point::new(px, py);
            // Convex CCW ring: inside iff p is on or left of every edge.
            let vs = polygon.vertices();
            let winding_inside = (0..vs.len())
                .all(|i| orientation(vs[i], vs[(i + 1) % vs.len()], p) >= 0.0);
            prop_assert_eq!(point_in_polygon(p, &polygon), winding_inside);
        }
    }
}
