//! Rotated-box geometry in image coordinates.
//!
//! All boxes live in pixel coordinates with the y axis pointing down. An
//! oriented box is `(cx, cy, w, h, theta_deg)` where `theta_deg` is
//! canonicalized to `[0, 180)`; a rectangle at `theta` and `theta + 180` is
//! the same point set. Rotation follows
//!
//! ```text
//! a' = a * cos(theta) - b * sin(theta)
//! b' = b * cos(theta) + a * sin(theta)
//! ```
//!
//! which turns the +x axis toward +y. With y pointing down that reads as a
//! clockwise turn on screen, matching what roLabelImg displays.
//!
//! Intersection of two rotated boxes is computed by Sutherland-Hodgman
//! clipping of the corner quadrilaterals followed by the shoelace area.

use thiserror::Error;

/// Vertices closer than this (in px) are merged after clipping.
pub const VERTEX_MERGE_EPS: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("coordinate is not finite")]
    NonFinite,
    #[error("box size must be positive, got w={w} h={h}")]
    NonPositiveSize { w: f64, h: f64 },
    #[error("empty extent: ({xmin},{ymin}) to ({xmax},{ymax}) does not span a box")]
    EmptyExtent {
        xmin: f64,
        ymin: f64,
        xmax: f64,
        ymax: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    fn dist(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Wraps an angle in degrees into `[0, 180)`.
///
/// Shared with the angle codec, which re-exports it as the public
/// canonicalization op.
pub(crate) fn wrap_deg(theta: f64) -> f64 {
    let w = theta.rem_euclid(180.0);
    // rem_euclid of a tiny negative can round up to exactly 180.0
    if w >= 180.0 {
        0.0
    } else {
        w
    }
}

/// Rotates `p` about `center` by `theta_deg` degrees.
pub fn rotate_point(p: Point, center: Point, theta_deg: f64) -> Point {
    let t = theta_deg.to_radians();
    let (sin, cos) = t.sin_cos();
    let a = p.x - center.x;
    let b = p.y - center.y;
    Point {
        x: center.x + a * cos - b * sin,
        y: center.y + b * cos + a * sin,
    }
}

/// Rotated rectangle: center, full side lengths, angle in degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrientedBox {
    cx: f64,
    cy: f64,
    w: f64,
    h: f64,
    theta_deg: f64,
}

impl OrientedBox {
    /// Builds a box, wrapping `theta_deg` into `[0, 180)`.
    pub fn new(cx: f64, cy: f64, w: f64, h: f64, theta_deg: f64) -> Result<Self, GeometryError> {
        if !(cx.is_finite() && cy.is_finite() && w.is_finite() && h.is_finite() && theta_deg.is_finite())
        {
            return Err(GeometryError::NonFinite);
        }
        if w <= 0.0 || h <= 0.0 {
            return Err(GeometryError::NonPositiveSize { w, h });
        }
        Ok(OrientedBox {
            cx,
            cy,
            w,
            h,
            theta_deg: wrap_deg(theta_deg),
        })
    }

    pub fn cx(&self) -> f64 {
        self.cx
    }

    pub fn cy(&self) -> f64 {
        self.cy
    }

    pub fn w(&self) -> f64 {
        self.w
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn theta_deg(&self) -> f64 {
        self.theta_deg
    }

    pub fn center(&self) -> Point {
        Point::new(self.cx, self.cy)
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    /// Corner quadrilateral in canonical order.
    pub fn corners(&self) -> QuadPolygon {
        let hw = self.w / 2.0;
        let hh = self.h / 2.0;
        let c = self.center();
        // positive-shoelace order before rotation; rotation preserves it
        let raw = [
            Point::new(self.cx - hw, self.cy - hh),
            Point::new(self.cx + hw, self.cy - hh),
            Point::new(self.cx + hw, self.cy + hh),
            Point::new(self.cx - hw, self.cy + hh),
        ];
        QuadPolygon::canonicalize(raw.map(|p| rotate_point(p, c, self.theta_deg)))
    }

    /// Axis-aligned bounding box of the corners.
    pub fn envelope(&self) -> HorizontalBox {
        let q = self.corners();
        let vs = q.vertices();
        let mut xmin = vs[0].x;
        let mut xmax = vs[0].x;
        let mut ymin = vs[0].y;
        let mut ymax = vs[0].y;
        for v in &vs[1..] {
            xmin = xmin.min(v.x);
            xmax = xmax.max(v.x);
            ymin = ymin.min(v.y);
            ymax = ymax.max(v.y);
        }
        // w, h > 0 so the projections span a nonempty range on both axes
        HorizontalBox {
            xmin,
            ymin,
            xmax,
            ymax,
        }
    }
}

/// Axis-aligned box stored as opposite corners, `xmin < xmax`, `ymin < ymax`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HorizontalBox {
    xmin: f64,
    ymin: f64,
    xmax: f64,
    ymax: f64,
}

impl HorizontalBox {
    pub fn new(xmin: f64, ymin: f64, xmax: f64, ymax: f64) -> Result<Self, GeometryError> {
        if !(xmin.is_finite() && ymin.is_finite() && xmax.is_finite() && ymax.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        if xmin >= xmax || ymin >= ymax {
            return Err(GeometryError::EmptyExtent {
                xmin,
                ymin,
                xmax,
                ymax,
            });
        }
        Ok(HorizontalBox {
            xmin,
            ymin,
            xmax,
            ymax,
        })
    }

    pub fn xmin(&self) -> f64 {
        self.xmin
    }

    pub fn ymin(&self) -> f64 {
        self.ymin
    }

    pub fn xmax(&self) -> f64 {
        self.xmax
    }

    pub fn ymax(&self) -> f64 {
        self.ymax
    }

    pub fn width(&self) -> f64 {
        self.xmax - self.xmin
    }

    pub fn height(&self) -> f64 {
        self.ymax - self.ymin
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn center(&self) -> Point {
        Point::new((self.xmin + self.xmax) / 2.0, (self.ymin + self.ymax) / 2.0)
    }

    /// Equivalent oriented box at angle zero.
    pub fn to_oriented(&self) -> OrientedBox {
        OrientedBox {
            cx: (self.xmin + self.xmax) / 2.0,
            cy: (self.ymin + self.ymax) / 2.0,
            w: self.width(),
            h: self.height(),
            theta_deg: 0.0,
        }
    }
}

/// Convex quadrilateral with a canonical vertex order: positive shoelace
/// orientation, starting at the vertex with the smallest `(y, x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadPolygon {
    vertices: [Point; 4],
}

impl QuadPolygon {
    fn canonicalize(mut vs: [Point; 4]) -> Self {
        if shoelace(&vs) < 0.0 {
            vs.reverse();
        }
        let start = (0..4)
            .min_by(|&i, &j| {
                (vs[i].y, vs[i].x)
                    .partial_cmp(&(vs[j].y, vs[j].x))
                    .expect("finite vertices")
            })
            .unwrap();
        vs.rotate_left(start);
        QuadPolygon { vertices: vs }
    }

    pub fn vertices(&self) -> &[Point; 4] {
        &self.vertices
    }

    pub fn area(&self) -> f64 {
        polygon_area(&self.vertices)
    }
}

fn shoelace(pts: &[Point]) -> f64 {
    let n = pts.len();
    let mut sum = 0.0;
    for i in 0..n {
        let p = pts[i];
        let q = pts[(i + 1) % n];
        sum += p.x * q.y - q.x * p.y;
    }
    sum / 2.0
}

/// Unsigned polygon area via the shoelace formula; fewer than 3 vertices
/// give 0.
pub fn polygon_area(pts: &[Point]) -> f64 {
    if pts.len() < 3 {
        return 0.0;
    }
    shoelace(pts).abs()
}

/// Cross product of `a -> b` with `a -> p`: positive when `p` lies left of
/// the edge (inside, for a positive-shoelace polygon). Divided by the edge
/// length this is the signed distance of `p` from the line.
fn edge_cross(p: Point, a: Point, b: Point) -> f64 {
    (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x)
}

fn line_intersection(s: Point, e: Point, a: Point, b: Point) -> Point {
    let dcx = a.x - b.x;
    let dcy = a.y - b.y;
    let dpx = s.x - e.x;
    let dpy = s.y - e.y;
    let n1 = a.x * b.y - a.y * b.x;
    let n2 = s.x * e.y - s.y * e.x;
    let den = dcx * dpy - dcy * dpx;
    if den == 0.0 {
        // degenerate (near-parallel) crossing, fall back to the endpoint
        return e;
    }
    Point {
        x: (n1 * dpx - n2 * dcx) / den,
        y: (n1 * dpy - n2 * dcy) / den,
    }
}

/// Intersection polygon of two quads via Sutherland-Hodgman clipping.
///
/// Returns the vertices of the overlap region after merging vertices closer
/// than [`VERTEX_MERGE_EPS`]; an empty vector means the interiors are
/// disjoint.
pub fn convex_intersect(a: &QuadPolygon, b: &QuadPolygon) -> Vec<Point> {
    let mut out: Vec<Point> = a.vertices.to_vec();
    for i in 0..4 {
        let ca = b.vertices[i];
        let cb = b.vertices[(i + 1) % 4];
        if out.is_empty() {
            break;
        }
        // Points within the merge threshold of the edge line count as
        // inside. A strict zero test would flag vertices of a coincident
        // edge as outside by one ulp and then intersect two near-parallel
        // lines, which lands far off the true region.
        let tol = -VERTEX_MERGE_EPS * ca.dist(cb);
        let input = std::mem::take(&mut out);
        let mut s = *input.last().unwrap();
        for e in input {
            let e_in = edge_cross(e, ca, cb) >= tol;
            let s_in = edge_cross(s, ca, cb) >= tol;
            match (s_in, e_in) {
                (true, true) => out.push(e),
                (true, false) => out.push(line_intersection(s, e, ca, cb)),
                (false, true) => {
                    out.push(line_intersection(s, e, ca, cb));
                    out.push(e);
                }
                (false, false) => {}
            }
            s = e;
        }
    }
    merge_close_vertices(out)
}

fn merge_close_vertices(pts: Vec<Point>) -> Vec<Point> {
    let mut merged: Vec<Point> = Vec::with_capacity(pts.len());
    for p in pts {
        if merged.last().is_some_and(|q| q.dist(p) < VERTEX_MERGE_EPS) {
            continue;
        }
        merged.push(p);
    }
    while merged.len() > 1 && merged[0].dist(*merged.last().unwrap()) < VERTEX_MERGE_EPS {
        merged.pop();
    }
    if merged.len() < 3 {
        return Vec::new();
    }
    merged
}

fn quad_lex_before(a: &QuadPolygon, b: &QuadPolygon) -> bool {
    for (p, q) in a.vertices.iter().zip(b.vertices.iter()) {
        match (p.x, p.y).partial_cmp(&(q.x, q.y)).expect("finite vertices") {
            std::cmp::Ordering::Less => return true,
            std::cmp::Ordering::Greater => return false,
            std::cmp::Ordering::Equal => {}
        }
    }
    true
}

/// Intersection-over-union of two rotated boxes.
///
/// The clipping order is fixed by a lexicographic comparison of the corner
/// quads so the result is bit-identical under argument swap.
pub fn rotated_iou(a: &OrientedBox, b: &OrientedBox) -> f64 {
    let qa = a.corners();
    let qb = b.corners();
    let inter = if quad_lex_before(&qa, &qb) {
        polygon_area(&convex_intersect(&qa, &qb))
    } else {
        polygon_area(&convex_intersect(&qb, &qa))
    };
    // the union uses the same shoelace measure as the intersection, so
    // coincident boxes land on exactly 1
    let union = qa.area() + qb.area() - inter;
    (inter / union).clamp(0.0, 1.0)
}

/// Intersection-over-union of two axis-aligned boxes.
pub fn horizontal_iou(a: &HorizontalBox, b: &HorizontalBox) -> f64 {
    let iw = a.xmax.min(b.xmax) - a.xmin.max(b.xmin);
    let ih = a.ymax.min(b.ymax) - a.ymin.max(b.ymin);
    if iw <= 0.0 || ih <= 0.0 {
        return 0.0;
    }
    let inter = iw * ih;
    (inter / (a.area() + b.area() - inter)).clamp(0.0, 1.0)
}
