use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Circumference of the circle.
pub const TAU: f64 = std::f64::consts::TAU;

/// Separation below which two points count as coincident.
pub const DELTA_MIN: f64 = 1e-12;

/// Reduce a finite real to `[0, 2π)`.
#[inline]
pub(crate) fn wrap(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    // rem_euclid rounds tiny negatives up to exactly TAU
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// A point of the circle, stored as its representative in `[0, 2π)`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CirclePos(f64);

impl CirclePos {
    /// Wrap `x` onto the circle. Fails for NaN and infinities.
    pub fn new(x: f64) -> Result<Self> {
        if !x.is_finite() {
            return invalid(format!("circle position must be finite, got {x}"));
        }
        Ok(Self(wrap(x)))
    }

    pub(crate) fn from_wrapped(x: f64) -> Self {
        debug_assert!((0.0..TAU).contains(&x));
        Self(x)
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Move by `delta` along the circle.
    pub fn shift(self, delta: f64) -> Self {
        Self(wrap(self.0 + delta))
    }
}

/// Geodesic distance on the circle, in `[0, π]`.
pub fn arc_distance(x: CirclePos, y: CirclePos) -> f64 {
    let d = (x.0 - y.0).abs();
    d.min(TAU - d)
}

/// Counter-clockwise distance from `from` to `to`, in `[0, 2π)`.
pub fn ccw_distance(from: CirclePos, to: CirclePos) -> f64 {
    let d = to.0 - from.0;
    if d >= 0.0 {
        d
    } else {
        d + TAU
    }
}

/// Wrap every position back into `[0, 2π)` and restore ascending order.
///
/// Each step only moves particles locally, so after rotating the wrapped
/// particles to the correct end an insertion sort finishes in near-linear time.
pub(crate) fn resort_cyclic<T>(
    items: &mut Vec<T>,
    scratch: &mut Vec<T>,
    pos: impl Fn(&T) -> f64,
    set: impl Fn(&mut T, f64),
) {
    let wrapped = items.iter().any(|it| {
        let p = pos(it);
        !(0.0..TAU).contains(&p)
    });
    if wrapped {
        scratch.clear();
        let mut low = Vec::new();
        let mut mid = Vec::with_capacity(items.len());
        for mut it in items.drain(..) {
            let p = pos(&it);
            if p >= TAU {
                set(&mut it, wrap(p));
                scratch.push(it);
            } else if p < 0.0 {
                set(&mut it, wrap(p));
                low.push(it);
            } else {
                mid.push(it);
            }
        }
        items.append(scratch);
        items.append(&mut mid);
        items.append(&mut low);
    }
    for i in 1..items.len() {
        let mut j = i;
        while j > 0 && pos(&items[j - 1]) > pos(&items[j]) {
            items.swap(j - 1, j);
            j -= 1;
        }
    }
}
