//! Spatial aggregates built on the R-tree: expanding-box nearest search and
//! index nested-loop spatial join.

use super::{RTree, SidxError};
use crate::geom::{contained_in, distance_to, overlaps, Geometry, Point, Rect};
use crate::oid::Oid;

/// Growth factor applied to the search box while it finds nothing.
pub const CLOSEST_GROWTH: f64 = 2.0;

/// Oid of the geometry nearest to `p`, ties broken by smallest oid.
///
/// Starts with a box of half-width `sqrt(area / n)` over the tree bounds and
/// doubles it until some candidate appears. The first candidate distance `d`
/// is only an upper bound (a closer object may have an MBR outside the box),
/// so the search re-queries once with half-width `d` and takes the minimum.
pub fn closest<F>(tree: &RTree, p: Point, mut resolve: F) -> Result<(Oid, f64), SidxError>
where
    F: FnMut(Oid) -> Option<Geometry>,
{
    let bounds = tree.bounds().ok_or(SidxError::EmptyTree)?;
    let mut half = (bounds.area() / tree.len() as f64).sqrt();
    if half <= 0.0 {
        half = bounds.dist_to_point(&p).max(bounds.width().max(bounds.height())).max(1.0);
    }
    let mut candidates: Vec<Oid>;
    loop {
        candidates = tree.window_query(Rect::around(p, half)).collect();
        if !candidates.is_empty() {
            break;
        }
        half *= CLOSEST_GROWTH;
    }
    let (_, first) = best_of(&candidates, &p, &mut resolve)?;
    let guard: Vec<Oid> = tree.window_query(Rect::around(p, first)).collect();
    best_of(&guard, &p, &mut resolve)
}

fn best_of<F>(oids: &[Oid], p: &Point, resolve: &mut F) -> Result<(Oid, f64), SidxError>
where
    F: FnMut(Oid) -> Option<Geometry>,
{
    let mut best: Option<(Oid, f64)> = None;
    for &oid in oids {
        let g = resolve(oid).ok_or(SidxError::Unresolvable(oid))?;
        let d = distance_to(p, &g);
        best = match best {
            Some((b, bd)) if bd < d || (bd == d && b < oid) => Some((b, bd)),
            _ => Some((oid, d)),
        };
    }
    best.ok_or(SidxError::EmptyTree)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpatialPredicate {
    Overlaps,
    /// Left operand contained in the right one.
    Inside,
}

impl SpatialPredicate {
    pub fn eval(self, a: &Geometry, b: &Geometry) -> bool {
        match self {
            SpatialPredicate::Overlaps => overlaps(a, b),
            SpatialPredicate::Inside => contained_in(a, b).unwrap_or(false),
        }
    }
}

/// Pairs `(a, b)` whose exact geometries satisfy `pred`. Each entry of `ta`
/// probes `tb` with its MBR; only the probe results are buffered. With
/// `self_join` the identical pair is skipped and each unordered pair is
/// emitted once, as `(smaller, larger)`.
pub fn spatial_join<'a, FA, FB>(
    ta: &'a RTree,
    tb: &'a RTree,
    pred: SpatialPredicate,
    self_join: bool,
    mut resolve_a: FA,
    mut resolve_b: FB,
) -> impl Iterator<Item = Result<(Oid, Oid), SidxError>> + 'a
where
    FA: FnMut(Oid) -> Option<Geometry> + 'a,
    FB: FnMut(Oid) -> Option<Geometry> + 'a,
{
    ta.entries().into_iter().flat_map(move |ea| {
        let mut out = Vec::new();
        let Some(ga) = resolve_a(ea.oid) else {
            return vec![Err(SidxError::Unresolvable(ea.oid))];
        };
        let mut probe: Vec<Oid> = tb.window_query(ea.key).collect();
        probe.sort();
        for ob in probe {
            if self_join && ob <= ea.oid {
                continue;
            }
            match resolve_b(ob) {
                Some(gb) if pred.eval(&ga, &gb) => out.push(Ok((ea.oid, ob))),
                Some(_) => {}
                None => out.push(Err(SidxError::Unresolvable(ob))),
            }
        }
        out
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Polyline;
    use crate::sidx::{SpatialEntry, TreeParams, Variant};

    fn pt(x: f64, y: f64) -> Point {
        Point::new(x, y).unwrap()
    }

    #[test]
    fn closest_single_and_empty() {
        let mut t = RTree::new(Variant::RStar, TreeParams::default());
        assert_eq!(closest(&t, pt(0.0, 0.0), |_| None).unwrap_err(), SidxError::EmptyTree);
        let g = Geometry::Point(pt(5.0, 5.0));
        t.insert(SpatialEntry { key: crate::geom::mbr(&g), oid: Oid::new(1, 0) }).unwrap();
        let (oid, d) = closest(&t, pt(0.0, 0.0), |_| Some(g.clone())).unwrap();
        assert_eq!(oid, Oid::new(1, 0));
        assert!((d - 50f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn closest_prefers_nearer_line() {
        // The diagonal's MBR covers the probe; the short line is nearer.
        let far = Polyline::new(vec![pt(-100.0, -100.0), pt(100.0, 100.0)]).unwrap();
        let near = Polyline::new(vec![pt(30.0, 0.0), pt(30.0, 1.0)]).unwrap();
        let geoms = [Geometry::Polyline(far), Geometry::Polyline(near)];
        let mut t = RTree::new(Variant::Hilbert, TreeParams::default());
        for (i, g) in geoms.iter().enumerate() {
            t.insert(SpatialEntry { key: crate::geom::mbr(g), oid: Oid::new(0, i as u32) }).unwrap();
        }
        let p = pt(50.0, 0.0);
        let (oid, _) = closest(&t, p, |o| Some(geoms[o.slot as usize].clone())).unwrap();
        assert_eq!(oid, Oid::new(0, 1));
    }

    #[test]
    fn self_join_emits_unordered_pairs_once() {
        let geoms: Vec<Geometry> =
            (0..3).map(|i| Geometry::Rect(Rect::new(i as f64, 0.0, i as f64 + 1.5, 1.0).unwrap())).collect();
        let mut t = RTree::new(Variant::RStar, TreeParams::default());
        for (i, g) in geoms.iter().enumerate() {
            t.insert(SpatialEntry { key: crate::geom::mbr(g), oid: Oid::new(0, i as u32) }).unwrap();
        }
        let r = |o: Oid| Some(geoms[o.slot as usize].clone());
        let mut pairs: Vec<_> =
            spatial_join(&t, &t, SpatialPredicate::Overlaps, true, r, r).collect::<Result<_, _>>().unwrap();
        pairs.sort();
        assert_eq!(pairs, vec![(Oid::new(0, 0), Oid::new(0, 1)), (Oid::new(0, 1), Oid::new(0, 2))]);
    }
}
