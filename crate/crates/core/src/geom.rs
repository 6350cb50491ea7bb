//! Planar vector geometry: points, polylines, polygons with holes and
//! axis-aligned rectangles, plus the predicates used by query evaluation.
//!
//! All comparisons use an absolute tolerance of [`EPS`] world units. Polygon
//! point sets are closed on the outer ring and open on holes: the boundary of
//! a hole belongs to the polygon, its interior does not.

use serde::{Deserialize, Serialize};
use std::fmt;

/// Absolute tolerance for coordinate comparisons, in world units.
pub const EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GeomError {
    #[error("coordinate is not finite")]
    NonFinite,
    #[error("{0} needs at least {1} vertices")]
    TooFewVertices(&'static str, usize),
    #[error("consecutive vertices {0} and {1} coincide")]
    RepeatedVertex(usize, usize),
    #[error("ring {0} is self-intersecting")]
    SelfIntersecting(usize),
    #[error("ring {0} has zero area")]
    DegenerateRing(usize),
    #[error("hole {0} is not inside the outer ring")]
    HoleOutside(usize),
    #[error("holes {0} and {1} intersect")]
    HolesIntersect(usize, usize),
    #[error("rectangle bounds are inverted")]
    InvertedRect,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Result<Self, GeomError> {
        if !x.is_finite() || !y.is_finite() {
            return Err(GeomError::NonFinite);
        }
        Ok(Point { x, y })
    }

    pub fn dist(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    fn close_to(&self, other: &Point) -> bool {
        self.dist(other) <= EPS
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub xmin: f64,
    pub ymin: f64,
    pub xmax: f64,
    pub ymax: f64,
}

impl Rect {
    pub fn new(xmin: f64, ymin: f64, xmax: f64, ymax: f64) -> Result<Self, GeomError> {
        if ![xmin, ymin, xmax, ymax].iter().all(|v| v.is_finite()) {
            return Err(GeomError::NonFinite);
        }
        if xmin > xmax || ymin > ymax {
            return Err(GeomError::InvertedRect);
        }
        Ok(Rect { xmin, ymin, xmax, ymax })
    }

    pub fn from_point(p: Point) -> Self {
        Rect { xmin: p.x, ymin: p.y, xmax: p.x, ymax: p.y }
    }

    /// Square of half-width `r` centred on `p`.
    pub fn around(p: Point, r: f64) -> Self {
        Rect { xmin: p.x - r, ymin: p.y - r, xmax: p.x + r, ymax: p.y + r }
    }

    pub fn of_points<'a, I: IntoIterator<Item = &'a Point>>(pts: I) -> Option<Self> {
        let mut it = pts.into_iter();
        let first = it.next()?;
        let mut r = Rect::from_point(*first);
        for p in it {
            r.xmin = r.xmin.min(p.x);
            r.ymin = r.ymin.min(p.y);
            r.xmax = r.xmax.max(p.x);
            r.ymax = r.ymax.max(p.y);
        }
        Some(r)
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

    /// Half perimeter.
    pub fn margin(&self) -> f64 {
        self.width() + self.height()
    }

    pub fn center(&self) -> Point {
        Point { x: (self.xmin + self.xmax) / 2.0, y: (self.ymin + self.ymax) / 2.0 }
    }

    pub fn union(&self, o: &Rect) -> Rect {
        Rect {
            xmin: self.xmin.min(o.xmin),
            ymin: self.ymin.min(o.ymin),
            xmax: self.xmax.max(o.xmax),
            ymax: self.ymax.max(o.ymax),
        }
    }

    /// Closed intersection test, exact (no tolerance); used by index filters.
    pub fn intersects(&self, o: &Rect) -> bool {
        self.xmin <= o.xmax && o.xmin <= self.xmax && self.ymin <= o.ymax && o.ymin <= self.ymax
    }

    pub fn intersection_area(&self, o: &Rect) -> f64 {
        let w = self.xmax.min(o.xmax) - self.xmin.max(o.xmin);
        let h = self.ymax.min(o.ymax) - self.ymin.max(o.ymin);
        if w <= 0.0 || h <= 0.0 {
            0.0
        } else {
            w * h
        }
    }

    pub fn contains_rect(&self, o: &Rect) -> bool {
        self.xmin <= o.xmin && self.ymin <= o.ymin && self.xmax >= o.xmax && self.ymax >= o.ymax
    }

    pub fn contains_point(&self, p: &Point) -> bool {
        p.x >= self.xmin - EPS && p.x <= self.xmax + EPS && p.y >= self.ymin - EPS && p.y <= self.ymax + EPS
    }

    pub fn expanded(&self, d: f64) -> Rect {
        Rect { xmin: self.xmin - d, ymin: self.ymin - d, xmax: self.xmax + d, ymax: self.ymax + d }
    }

    /// Minimum distance from `p` to the closed rectangle.
    pub fn dist_to_point(&self, p: &Point) -> f64 {
        let dx = (self.xmin - p.x).max(0.0).max(p.x - self.xmax);
        let dy = (self.ymin - p.y).max(0.0).max(p.y - self.ymax);
        dx.hypot(dy)
    }

    fn corners(&self) -> [Point; 4] {
        [
            Point { x: self.xmin, y: self.ymin },
            Point { x: self.xmax, y: self.ymin },
            Point { x: self.xmax, y: self.ymax },
            Point { x: self.xmin, y: self.ymax },
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polyline {
    vertices: Vec<Point>,
}

impl Polyline {
    pub fn new(vertices: Vec<Point>) -> Result<Self, GeomError> {
        if vertices.len() < 2 {
            return Err(GeomError::TooFewVertices("polyline", 2));
        }
        check_finite(&vertices)?;
        for i in 1..vertices.len() {
            if vertices[i - 1].close_to(&vertices[i]) {
                return Err(GeomError::RepeatedVertex(i - 1, i));
            }
        }
        Ok(Polyline { vertices })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn segments(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        self.vertices.windows(2).map(|w| (w[0], w[1]))
    }

    pub fn length(&self) -> f64 {
        self.segments().map(|(a, b)| a.dist(&b)).sum()
    }
}

/// Polygon with an outer ring and optional holes. Rings are stored unclosed;
/// the edge from the last vertex back to the first is implicit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polygon {
    outer: Vec<Point>,
    holes: Vec<Vec<Point>>,
}

impl Polygon {
    pub fn new(outer: Vec<Point>, holes: Vec<Vec<Point>>) -> Result<Self, GeomError> {
        let outer = normalize_ring(outer);
        let holes: Vec<Vec<Point>> = holes.into_iter().map(normalize_ring).collect();
        validate_ring(&outer, 0)?;
        for (i, h) in holes.iter().enumerate() {
            validate_ring(h, i + 1)?;
            if !ring_edges(h).all(|(a, _)| point_in_ring_closed(&a, &outer))
                || rings_cross(h, &outer)
            {
                return Err(GeomError::HoleOutside(i));
            }
        }
        for i in 0..holes.len() {
            for j in i + 1..holes.len() {
                if rings_cross(&holes[i], &holes[j])
                    || point_in_ring_closed(&holes[i][0], &holes[j])
                    || point_in_ring_closed(&holes[j][0], &holes[i])
                {
                    return Err(GeomError::HolesIntersect(i, j));
                }
            }
        }
        Ok(Polygon { outer, holes })
    }

    pub fn from_rect(r: &Rect) -> Result<Self, GeomError> {
        Polygon::new(r.corners().to_vec(), vec![])
    }

    pub fn outer(&self) -> &[Point] {
        &self.outer
    }

    pub fn holes(&self) -> &[Vec<Point>] {
        &self.holes
    }

    fn rings(&self) -> impl Iterator<Item = &[Point]> {
        std::iter::once(self.outer.as_slice()).chain(self.holes.iter().map(|h| h.as_slice()))
    }

    fn edges(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        self.rings().flat_map(ring_edges)
    }

    pub fn without_holes(&self) -> Polygon {
        Polygon { outer: self.outer.clone(), holes: vec![] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Geometry {
    Point(Point),
    Polyline(Polyline),
    Polygon(Polygon),
    Rect(Rect),
}

impl Geometry {
    pub fn kind(&self) -> &'static str {
        match self {
            Geometry::Point(_) => "point",
            Geometry::Polyline(_) => "polyline",
            Geometry::Polygon(_) => "polygon",
            Geometry::Rect(_) => "rect",
        }
    }
}

/// Collection of polygons.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub members: Vec<Polygon>,
}

/// Collection of polylines.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub members: Vec<Polyline>,
}

impl Layer {
    pub fn mbr(&self) -> Option<Rect> {
        self.members.iter().map(|p| mbr(&Geometry::Polygon(p.clone()))).reduce(|a, b| a.union(&b))
    }

    pub fn area(&self) -> f64 {
        self.members.iter().map(area).sum()
    }
}

impl Network {
    pub fn mbr(&self) -> Option<Rect> {
        self.members.iter().map(|l| Rect::of_points(l.vertices()).unwrap()).reduce(|a, b| a.union(&b))
    }

    pub fn length(&self) -> f64 {
        self.members.iter().map(Polyline::length).sum()
    }
}

fn check_finite(pts: &[Point]) -> Result<(), GeomError> {
    if pts.iter().all(|p| p.x.is_finite() && p.y.is_finite()) {
        Ok(())
    } else {
        Err(GeomError::NonFinite)
    }
}

fn normalize_ring(mut ring: Vec<Point>) -> Vec<Point> {
    if ring.len() > 1 && ring[0].close_to(ring.last().unwrap()) {
        ring.pop();
    }
    ring
}

fn ring_edges(ring: &[Point]) -> impl Iterator<Item = (Point, Point)> + '_ {
    let n = ring.len();
    (0..n).map(move |i| (ring[i], ring[(i + 1) % n]))
}

fn validate_ring(ring: &[Point], idx: usize) -> Result<(), GeomError> {
    if ring.len() < 3 {
        return Err(GeomError::TooFewVertices("ring", 3));
    }
    check_finite(ring)?;
    let n = ring.len();
    for i in 0..n {
        if ring[i].close_to(&ring[(i + 1) % n]) {
            return Err(GeomError::RepeatedVertex(i, (i + 1) % n));
        }
    }
    let edges: Vec<(Point, Point)> = ring_edges(ring).collect();
    for i in 0..n {
        for j in i + 1..n {
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            let (a0, a1) = edges[i];
            let (b0, b1) = edges[j];
            if adjacent {
                // Adjacent edges share one endpoint; they may not fold back on each other.
                let (shared, other_a, other_b) = if j == i + 1 { (a1, a0, b1) } else { (a0, a1, b0) };
                if point_seg_dist(&other_b, &shared, &other_a) <= EPS
                    || point_seg_dist(&other_a, &shared, &other_b) <= EPS
                {
                    return Err(GeomError::SelfIntersecting(idx));
                }
            } else if segments_intersect(&a0, &a1, &b0, &b1) {
                return Err(GeomError::SelfIntersecting(idx));
            }
        }
    }
    if ring_signed_area(ring).abs() <= EPS {
        return Err(GeomError::DegenerateRing(idx));
    }
    Ok(())
}

fn ring_signed_area(ring: &[Point]) -> f64 {
    ring_edges(ring).map(|(a, b)| a.x * b.y - b.x * a.y).sum::<f64>() / 2.0
}

fn rings_cross(a: &[Point], b: &[Point]) -> bool {
    ring_edges(a).any(|(a0, a1)| ring_edges(b).any(|(b0, b1)| segments_intersect(&a0, &a1, &b0, &b1)))
}

/// Signed distance of `c` from the directed line `a -> b` (positive on the left).
fn side(a: &Point, b: &Point, c: &Point) -> f64 {
    let len = a.dist(b);
    let cross = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
    if len == 0.0 {
        0.0
    } else {
        cross / len
    }
}

/// Distance from `p` to the closed segment `a-b`.
pub fn point_seg_dist(p: &Point, a: &Point, b: &Point) -> f64 {
    let dx = b.x - a.x;
    let dy = b.y - a.y;
    let len2 = dx * dx + dy * dy;
    if len2 == 0.0 {
        return p.dist(a);
    }
    let t = (((p.x - a.x) * dx + (p.y - a.y) * dy) / len2).clamp(0.0, 1.0);
    let proj = Point { x: a.x + t * dx, y: a.y + t * dy };
    p.dist(&proj)
}

/// Closed segment intersection with tolerance [`EPS`].
pub fn segments_intersect(a0: &Point, a1: &Point, b0: &Point, b1: &Point) -> bool {
    let d1 = side(b0, b1, a0);
    let d2 = side(b0, b1, a1);
    let d3 = side(a0, a1, b0);
    let d4 = side(a0, a1, b1);
    let strict = |u: f64, v: f64| (u > EPS && v < -EPS) || (u < -EPS && v > EPS);
    if strict(d1, d2) && strict(d3, d4) {
        return true;
    }
    point_seg_dist(a0, b0, b1) <= EPS
        || point_seg_dist(a1, b0, b1) <= EPS
        || point_seg_dist(b0, a0, a1) <= EPS
        || point_seg_dist(b1, a0, a1) <= EPS
}

fn on_ring_boundary(p: &Point, ring: &[Point]) -> bool {
    ring_edges(ring).any(|(a, b)| point_seg_dist(p, &a, &b) <= EPS)
}

/// Crossing-number test for the open interior of a ring.
fn point_in_ring_open(p: &Point, ring: &[Point]) -> bool {
    let mut inside = false;
    for (a, b) in ring_edges(ring) {
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if p.x < x {
                inside = !inside;
            }
        }
    }
    inside
}

fn point_in_ring_closed(p: &Point, ring: &[Point]) -> bool {
    on_ring_boundary(p, ring) || point_in_ring_open(p, ring)
}

/// Smallest axis-aligned rectangle containing every vertex of `g`.
pub fn mbr(g: &Geometry) -> Rect {
    match g {
        Geometry::Point(p) => Rect::from_point(*p),
        Geometry::Polyline(l) => Rect::of_points(l.vertices()).expect("polyline has vertices"),
        Geometry::Polygon(p) => Rect::of_points(p.outer()).expect("ring has vertices"),
        Geometry::Rect(r) => *r,
    }
}

/// Area of the outer ring minus the holes; never negative.
pub fn area(p: &Polygon) -> f64 {
    let outer = ring_signed_area(&p.outer).abs();
    let holes: f64 = p.holes.iter().map(|h| ring_signed_area(h).abs()).sum();
    (outer - holes).max(0.0)
}

/// Area by fan triangulation from the first vertex of each ring. Same value as
/// [`area`] up to rounding; registered as a functionally equivalent method.
pub fn area_fan(p: &Polygon) -> f64 {
    fn fan(ring: &[Point]) -> f64 {
        let o = ring[0];
        let mut s = 0.0;
        for i in 1..ring.len() - 1 {
            let a = ring[i];
            let b = ring[i + 1];
            s += ((a.x - o.x) * (b.y - o.y) - (b.x - o.x) * (a.y - o.y)) / 2.0;
        }
        s.abs()
    }
    let holes: f64 = p.holes.iter().map(|h| fan(h)).sum();
    (fan(&p.outer) - holes).max(0.0)
}

/// Closed outer region, open holes.
pub fn inside(p: &Point, poly: &Polygon) -> bool {
    if !point_in_ring_closed(p, &poly.outer) {
        return false;
    }
    !poly.holes.iter().any(|h| point_in_ring_open(p, h) && !on_ring_boundary(p, h))
}

/// `g` lies entirely within the closed rectangle `r`.
pub fn within_rect(g: &Geometry, r: &Rect) -> bool {
    r.expanded(EPS).contains_rect(&mbr(g))
}

/// Minimum Euclidean distance from `p` to any segment of `l`.
pub fn distance(p: &Point, l: &Polyline) -> f64 {
    l.segments().map(|(a, b)| point_seg_dist(p, &a, &b)).fold(f64::INFINITY, f64::min)
}

/// Distance from `p` to the point set of `g` (zero when `p` is covered).
pub fn distance_to(p: &Point, g: &Geometry) -> f64 {
    match g {
        Geometry::Point(q) => p.dist(q),
        Geometry::Polyline(l) => distance(p, l),
        Geometry::Rect(r) => r.dist_to_point(p),
        Geometry::Polygon(poly) => {
            if inside(p, poly) {
                0.0
            } else {
                poly.edges().map(|(a, b)| point_seg_dist(p, &a, &b)).fold(f64::INFINITY, f64::min)
            }
        }
    }
}

/// Boundary segments and whether the geometry encloses area.
enum Shape<'a> {
    Pt(Point),
    Chain(Vec<(Point, Point)>, Point),
    Region(&'a Polygon),
    Box(Rect),
}

fn shape(g: &Geometry) -> Shape<'_> {
    match g {
        Geometry::Point(p) => Shape::Pt(*p),
        Geometry::Polyline(l) => Shape::Chain(l.segments().collect(), l.vertices()[0]),
        Geometry::Polygon(p) => Shape::Region(p),
        Geometry::Rect(r) => {
            let c = r.corners();
            if r.width() <= EPS && r.height() <= EPS {
                Shape::Pt(c[0])
            } else if r.width() <= EPS || r.height() <= EPS {
                Shape::Chain(vec![(c[0], c[2])], c[0])
            } else {
                Shape::Box(*r)
            }
        }
    }
}

fn shape_edges(s: &Shape<'_>) -> Vec<(Point, Point)> {
    match s {
        Shape::Pt(p) => vec![(*p, *p)],
        Shape::Chain(segs, _) => segs.clone(),
        Shape::Region(p) => p.edges().collect(),
        Shape::Box(r) => ring_edges(&r.corners()).collect(),
    }
}

fn anchor(s: &Shape<'_>) -> Point {
    match s {
        Shape::Pt(p) => *p,
        Shape::Chain(_, p) => *p,
        Shape::Region(p) => p.outer[0],
        Shape::Box(r) => Point { x: r.xmin, y: r.ymin },
    }
}

fn covers(region: &Shape<'_>, p: &Point) -> bool {
    match region {
        Shape::Region(poly) => inside(p, poly),
        Shape::Box(r) => r.contains_point(p),
        _ => false,
    }
}

/// True iff the closed point sets of `a` and `b` intersect.
pub fn overlaps(a: &Geometry, b: &Geometry) -> bool {
    if !mbr(a).expanded(EPS).intersects(&mbr(b)) {
        return false;
    }
    let sa = shape(a);
    let sb = shape(b);
    if let (Shape::Pt(p), Shape::Pt(q)) = (&sa, &sb) {
        return p.close_to(q);
    }
    let ea = shape_edges(&sa);
    let eb = shape_edges(&sb);
    for (a0, a1) in &ea {
        for (b0, b1) in &eb {
            if segments_intersect(a0, a1, b0, b1) {
                return true;
            }
        }
    }
    // No boundary contact: overlap only by containment of one in the other.
    covers(&sb, &anchor(&sa)) || covers(&sa, &anchor(&sb))
}

/// Exact geometry-versus-rectangle test.
pub fn intersects_rect(g: &Geometry, r: &Rect) -> bool {
    overlaps(g, &Geometry::Rect(*r))
}

/// Containment of `a` in `b` for the supported operand kinds: anything in a
/// rectangle, or a point in a polygon. `None` for other combinations.
pub fn contained_in(a: &Geometry, b: &Geometry) -> Option<bool> {
    match (a, b) {
        (_, Geometry::Rect(r)) => Some(within_rect(a, r)),
        (Geometry::Point(p), Geometry::Polygon(poly)) => Some(inside(p, poly)),
        _ => None,
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "POINT({} {})", self.x, self.y)
    }
}

fn write_coords(f: &mut fmt::Formatter<'_>, pts: &[Point], close: bool) -> fmt::Result {
    write!(f, "(")?;
    for (i, p) in pts.iter().enumerate() {
        if i > 0 {
            write!(f, ", ")?;
        }
        write!(f, "{} {}", p.x, p.y)?;
    }
    if close {
        write!(f, ", {} {}", pts[0].x, pts[0].y)?;
    }
    write!(f, ")")
}

impl fmt::Display for Geometry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Geometry::Point(p) => write!(f, "{p}"),
            Geometry::Polyline(l) => {
                write!(f, "LINESTRING")?;
                write_coords(f, l.vertices(), false)
            }
            Geometry::Polygon(p) => {
                write!(f, "POLYGON(")?;
                for (i, ring) in p.rings().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write_coords(f, ring, true)?;
                }
                write!(f, ")")
            }
            Geometry::Rect(r) => write!(f, "RECT({} {}, {} {})", r.xmin, r.ymin, r.xmax, r.ymax),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(x: f64, y: f64) -> Point {
        Point::new(x, y).unwrap()
    }

    fn square(x0: f64, y0: f64, s: f64) -> Vec<Point> {
        vec![pt(x0, y0), pt(x0 + s, y0), pt(x0 + s, y0 + s), pt(x0, y0 + s)]
    }

    fn poly(ring: Vec<Point>) -> Polygon {
        Polygon::new(ring, vec![]).unwrap()
    }

    #[test]
    fn mbr_of_point_is_degenerate() {
        assert_eq!(mbr(&Geometry::Point(pt(3.0, 4.0))), Rect { xmin: 3.0, ymin: 4.0, xmax: 3.0, ymax: 4.0 });
    }

    #[test]
    fn mbr_of_square() {
        let g = Geometry::Polygon(poly(square(0.0, 0.0, 10.0)));
        assert_eq!(mbr(&g), Rect::new(0.0, 0.0, 10.0, 10.0).unwrap());
    }

    #[test]
    fn area_unit_square_and_hole() {
        assert_eq!(area(&poly(square(0.0, 0.0, 1.0))), 1.0);
        let p = Polygon::new(square(0.0, 0.0, 10.0), vec![square(4.0, 4.0, 2.0)]).unwrap();
        assert_eq!(area(&p), 96.0);
        assert!(area(&p) <= area(&p.without_holes()));
    }

    #[test]
    fn closing_vertex_is_dropped() {
        let mut ring = square(0.0, 0.0, 1.0);
        ring.push(pt(0.0, 0.0));
        assert_eq!(poly(ring).outer().len(), 4);
    }

    #[test]
    fn rejects_bowtie() {
        let ring = vec![pt(0.0, 0.0), pt(2.0, 2.0), pt(2.0, 0.0), pt(0.0, 2.0)];
        assert_eq!(Polygon::new(ring, vec![]), Err(GeomError::SelfIntersecting(0)));
    }

    #[test]
    fn rejects_hole_outside_and_overlapping_holes() {
        let r = Polygon::new(square(0.0, 0.0, 10.0), vec![square(8.0, 8.0, 5.0)]);
        assert_eq!(r, Err(GeomError::HoleOutside(0)));
        let r = Polygon::new(square(0.0, 0.0, 10.0), vec![square(1.0, 1.0, 3.0), square(2.0, 2.0, 3.0)]);
        assert_eq!(r, Err(GeomError::HolesIntersect(0, 1)));
    }

    #[test]
    fn rejects_non_finite_and_short() {
        assert_eq!(Point::new(f64::NAN, 0.0), Err(GeomError::NonFinite));
        assert!(Polyline::new(vec![pt(0.0, 0.0)]).is_err());
        assert!(Polyline::new(vec![pt(0.0, 0.0), pt(0.0, 0.0)]).is_err());
    }

    #[test]
    fn inside_respects_holes_and_boundaries() {
        let p = Polygon::new(square(0.0, 0.0, 10.0), vec![square(4.0, 4.0, 2.0)]).unwrap();
        assert!(inside(&pt(1.0, 1.0), &p));
        assert!(!inside(&pt(5.0, 5.0), &p));
        assert!(inside(&pt(4.0, 5.0), &p), "hole boundary belongs to the polygon");
        assert!(inside(&pt(0.0, 5.0), &p), "outer boundary is inside");
        assert!(!inside(&pt(11.0, 5.0), &p));
        assert!(inside(&pt(0.5, 0.5), &poly(square(0.0, 0.0, 1.0))));
    }

    #[test]
    fn distance_cases() {
        let l = Polyline::new(vec![pt(0.0, 0.0), pt(1.0, 0.0)]).unwrap();
        assert_eq!(distance(&pt(0.0, 1.0), &l), 1.0);
        assert_eq!(distance(&pt(0.5, 0.0), &l), 0.0);
        assert_eq!(distance(&pt(2.0, 0.0), &l), 1.0);
    }

    #[test]
    fn overlaps_basic() {
        let a = Geometry::Rect(Rect::new(0.0, 0.0, 2.0, 2.0).unwrap());
        assert!(overlaps(&a, &a.clone()));
        let b = Geometry::Rect(Rect::new(5.0, 5.0, 6.0, 6.0).unwrap());
        assert!(!overlaps(&a, &b));
        // Touching along an edge counts.
        let c = Geometry::Rect(Rect::new(2.0, 0.0, 3.0, 1.0).unwrap());
        assert!(overlaps(&a, &c));
    }

    #[test]
    fn interlocking_l_shapes_do_not_overlap() {
        // Two L-shapes whose MBRs intersect while the shapes stay apart.
        let l1 = poly(vec![pt(0.0, 0.0), pt(4.0, 0.0), pt(4.0, 1.0), pt(1.0, 1.0), pt(1.0, 4.0), pt(0.0, 4.0)]);
        let l2 = poly(vec![pt(5.0, 5.0), pt(5.0, 2.0), pt(2.0, 2.0), pt(2.0, 1.5), pt(5.5, 1.5), pt(5.5, 5.0)]);
        let (a, b) = (Geometry::Polygon(l1), Geometry::Polygon(l2));
        assert!(mbr(&a).intersects(&mbr(&b)));
        assert!(!overlaps(&a, &b));
        assert!(!overlaps(&b, &a));
    }

    #[test]
    fn containment_without_boundary_contact() {
        let outer = Geometry::Polygon(poly(square(0.0, 0.0, 10.0)));
        let inner = Geometry::Polygon(poly(square(3.0, 3.0, 1.0)));
        assert!(overlaps(&outer, &inner));
        assert!(overlaps(&inner, &outer));
        let holed = Geometry::Polygon(Polygon::new(square(0.0, 0.0, 10.0), vec![square(2.0, 2.0, 4.0)]).unwrap());
        assert!(!overlaps(&holed, &inner), "shape sitting in a hole");
        assert!(!overlaps(&holed, &Geometry::Point(pt(4.0, 4.0))));
    }

    #[test]
    fn polyline_against_polygon() {
        let sq = Geometry::Polygon(poly(square(0.0, 0.0, 10.0)));
        let inner = Geometry::Polyline(Polyline::new(vec![pt(1.0, 1.0), pt(2.0, 2.0)]).unwrap());
        let crossing = Geometry::Polyline(Polyline::new(vec![pt(-1.0, 5.0), pt(11.0, 5.0)]).unwrap());
        let outside = Geometry::Polyline(Polyline::new(vec![pt(11.0, 0.0), pt(12.0, 12.0)]).unwrap());
        assert!(overlaps(&sq, &inner));
        assert!(overlaps(&sq, &crossing));
        assert!(!overlaps(&sq, &outside));
    }

    #[test]
    fn rect_intersection_is_exact() {
        let tri = Geometry::Polygon(poly(vec![pt(0.0, 0.0), pt(10.0, 0.0), pt(0.0, 10.0)]));
        let r = Rect::new(8.0, 8.0, 9.0, 9.0).unwrap();
        assert!(mbr(&tri).intersects(&r));
        assert!(!intersects_rect(&tri, &r));
        assert!(intersects_rect(&tri, &Rect::new(1.0, 1.0, 2.0, 2.0).unwrap()));
        assert!(intersects_rect(&tri, &Rect::new(-5.0, -5.0, 20.0, 20.0).unwrap()));
    }

    #[test]
    fn area_fan_agrees() {
        let p = Polygon::new(square(0.0, 0.0, 10.0), vec![square(4.0, 4.0, 2.0)]).unwrap();
        assert!((area_fan(&p) - 96.0).abs() < 1e-9);
    }

    #[test]
    fn wkt_display() {
        let g = Geometry::Polyline(Polyline::new(vec![pt(0.0, 0.0), pt(1.5, 2.0)]).unwrap());
        assert_eq!(g.to_string(), "LINESTRING(0 0, 1.5 2)");
    }
}
