//! Hilbert space-filling curve over a `2^k x 2^k` grid laid on a world rectangle.

use super::SidxError;
use crate::geom::Rect;

pub const MAX_ORDER: u32 = 31;

/// Position along the curve; always `< 4^order`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct HilbertValue(pub u64);

/// Curve index of cell `(x, y)` in a grid of side `2^order`.
pub fn xy_to_d(order: u32, mut x: u64, mut y: u64) -> u64 {
    let n: u64 = 1 << order;
    let mut d = 0u64;
    let mut s = n >> 1;
    while s > 0 {
        let rx = u64::from(x & s > 0);
        let ry = u64::from(y & s > 0);
        d += s * s * ((3 * rx) ^ ry);
        if ry == 0 {
            if rx == 1 {
                x = n - 1 - x;
                y = n - 1 - y;
            }
            std::mem::swap(&mut x, &mut y);
        }
        s >>= 1;
    }
    d
}

/// Grid cell holding `r`'s centre.
pub fn cell_of(r: &Rect, order: u32, world: &Rect) -> Result<(u64, u64), SidxError> {
    if !(1..=MAX_ORDER).contains(&order) {
        return Err(SidxError::BadOrder(order));
    }
    if !world.contains_rect(r) {
        return Err(SidxError::OutOfDomain);
    }
    let side = 1u64 << order;
    let c = r.center();
    let axis = |v: f64, lo: f64, extent: f64| -> u64 {
        if extent <= 0.0 {
            return 0;
        }
        let t = ((v - lo) / extent * side as f64).floor();
        (t.max(0.0) as u64).min(side - 1)
    };
    Ok((axis(c.x, world.xmin, world.width()), axis(c.y, world.ymin, world.height())))
}

/// Hilbert value of the cell containing the centre of `r`.
pub fn hilbert_value(r: &Rect, order: u32, world: &Rect) -> Result<HilbertValue, SidxError> {
    let (x, y) = cell_of(r, order, world)?;
    Ok(HilbertValue(xy_to_d(order, x, y)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_one_visits_four_cells() {
        assert_eq!(xy_to_d(1, 0, 0), 0);
        assert_eq!(xy_to_d(1, 0, 1), 1);
        assert_eq!(xy_to_d(1, 1, 1), 2);
        assert_eq!(xy_to_d(1, 1, 0), 3);
    }

    #[test]
    fn origin_corner_is_zero() {
        let world = Rect::new(-10.0, -10.0, 10.0, 10.0).unwrap();
        let corner = Rect::new(-10.0, -10.0, -10.0, -10.0).unwrap();
        for k in [1, 5, 16, 31] {
            assert_eq!(hilbert_value(&corner, k, &world).unwrap(), HilbertValue(0));
        }
    }

    #[test]
    fn rejects_outside_and_bad_order() {
        let world = Rect::new(0.0, 0.0, 1.0, 1.0).unwrap();
        let r = Rect::new(0.5, 0.5, 2.0, 2.0).unwrap();
        assert_eq!(hilbert_value(&r, 4, &world), Err(SidxError::OutOfDomain));
        assert_eq!(hilbert_value(&world, 0, &world), Err(SidxError::BadOrder(0)));
        assert_eq!(hilbert_value(&world, 32, &world), Err(SidxError::BadOrder(32)));
    }

    #[test]
    fn max_order_stays_in_range() {
        let world = Rect::new(0.0, 0.0, 1.0, 1.0).unwrap();
        let top = Rect::new(1.0, 1.0, 1.0, 1.0).unwrap();
        let v = hilbert_value(&top, MAX_ORDER, &world).unwrap();
        assert!(v.0 < 1u64 << 62);
    }
}
