use serde::{Deserialize, Serialize};

use super::circle::{ccw_distance, CirclePos, DELTA_MIN, TAU};
use crate::error::{invalid, Error, Result};

/// Counter-clockwise arc from `start` to `end`, open at both ends.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Arc {
    start: CirclePos,
    end: CirclePos,
}

impl Arc {
    pub fn new(start: CirclePos, end: CirclePos) -> Self {
        Self { start, end }
    }

    pub fn start(&self) -> CirclePos {
        self.start
    }

    pub fn end(&self) -> CirclePos {
        self.end
    }

    pub fn length(&self) -> f64 {
        ccw_distance(self.start, self.end)
    }

    pub fn contains(&self, x: CirclePos) -> bool {
        let d = ccw_distance(self.start, x);
        d > 0.0 && d < self.length()
    }
}

/// A finite union of disjoint open arcs, or one of the two absorbing states.
///
/// `Arcs` always holds at least one arc, sorted by start position, with every
/// pair of endpoints at least [`DELTA_MIN`] apart.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum IntervalSet {
    Empty,
    FullCircle,
    Arcs(Vec<Arc>),
}

impl IntervalSet {
    /// Build from raw `(start, end)` pairs, each read counter-clockwise.
    pub fn normalize(raw: &[(f64, f64)]) -> Result<Self> {
        let arcs = raw
            .iter()
            .map(|&(s, e)| Ok(Arc::new(CirclePos::new(s)?, CirclePos::new(e)?)))
            .collect::<Result<Vec<_>>>()?;
        Self::from_arcs(arcs)
    }

    /// Validate and sort a list of arcs. An empty list gives `Empty`.
    pub fn from_arcs(mut arcs: Vec<Arc>) -> Result<Self> {
        if arcs.is_empty() {
            return Ok(Self::Empty);
        }
        arcs.sort_by(|a, b| a.start.value().total_cmp(&b.start.value()));
        let k = arcs.len();
        for (i, arc) in arcs.iter().enumerate() {
            let len = arc.length();
            if len <= DELTA_MIN || TAU - len <= DELTA_MIN {
                return Err(Error::DuplicateEndpoints {
                    at: arc.start.value(),
                });
            }
            if k == 1 {
                continue;
            }
            let next = arcs[(i + 1) % k].start;
            let room = ccw_distance(arc.start, next);
            if room <= DELTA_MIN {
                return Err(Error::DuplicateEndpoints {
                    at: next.value(),
                });
            }
            if (len - room).abs() <= DELTA_MIN {
                return Err(Error::DuplicateEndpoints {
                    at: arc.end.value(),
                });
            }
            if len > room {
                return Err(Error::OverlappingArcs { at: next.value() });
            }
        }
        Ok(Self::Arcs(arcs))
    }

    /// One arc of the given length starting at `start`.
    ///
    /// Lengths of `0` and `2π` give the absorbing states.
    pub fn single_arc(start: f64, length: f64) -> Result<Self> {
        if !(0.0..=TAU).contains(&length) {
            return invalid(format!("arc length {length} outside [0, 2π]"));
        }
        if length == 0.0 {
            return Ok(Self::Empty);
        }
        if length == TAU {
            return Ok(Self::FullCircle);
        }
        Self::normalize(&[(start, start + length)])
    }

    /// Assemble from endpoints already known to be valid.
    pub(crate) fn from_sorted_arcs_unchecked(arcs: Vec<Arc>) -> Self {
        if arcs.is_empty() {
            Self::Empty
        } else {
            Self::Arcs(arcs)
        }
    }

    pub fn arcs(&self) -> &[Arc] {
        match self {
            Self::Arcs(a) => a,
            _ => &[],
        }
    }

    pub fn raw(&self) -> Vec<(f64, f64)> {
        self.arcs()
            .iter()
            .map(|a| (a.start.value(), a.end.value()))
            .collect()
    }

    pub fn contains(&self, x: CirclePos) -> bool {
        match self {
            Self::Empty => false,
            Self::FullCircle => true,
            Self::Arcs(a) => a.iter().any(|arc| arc.contains(x)),
        }
    }

    pub fn total_length(&self) -> f64 {
        match self {
            Self::Empty => 0.0,
            Self::FullCircle => TAU,
            Self::Arcs(a) => a.iter().map(Arc::length).sum(),
        }
    }

    pub fn endpoint_count(&self) -> usize {
        2 * self.arcs().len()
    }

    pub fn is_absorbed(&self) -> bool {
        !matches!(self, Self::Arcs(_))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrapping_arc_is_valid() {
        let s = IntervalSet::normalize(&[(6.0, 0.5)]).unwrap();
        assert_eq!(s.arcs().len(), 1);
        assert!((s.total_length() - (TAU - 6.0 + 0.5)).abs() < 1e-12);
        assert!(s.contains(CirclePos::new(0.1).unwrap()));
        assert!(!s.contains(CirclePos::new(3.0).unwrap()));
    }

    #[test]
    fn overlap_and_duplicates_rejected() {
        assert!(matches!(
            IntervalSet::normalize(&[(0.0, 2.0), (1.0, 3.0)]),
            Err(Error::OverlappingArcs { .. })
        ));
        assert!(matches!(
            IntervalSet::normalize(&[(0.0, 1.0), (1.0, 3.0)]),
            Err(Error::DuplicateEndpoints { .. })
        ));
        assert!(matches!(
            IntervalSet::normalize(&[(1.0, 1.0)]),
            Err(Error::DuplicateEndpoints { .. })
        ));
        assert!(IntervalSet::normalize(&[(f64::NAN, 1.0)]).is_err());
    }

    #[test]
    fn arcs_sorted_and_empty_list() {
        let s = IntervalSet::normalize(&[(3.0, 4.0), (0.5, 1.0)]).unwrap();
        assert_eq!(s.raw(), vec![(0.5, 1.0), (3.0, 4.0)]);
        assert_eq!(IntervalSet::normalize(&[]).unwrap(), IntervalSet::Empty);
        assert_eq!(IntervalSet::single_arc(1.0, TAU).unwrap(), IntervalSet::FullCircle);
    }
}
