//! Dyadic interval labels.
//!
//! Every node of a binary tree owns a sub-interval of `[0, 1]`: the root owns
//! the whole interval and each child owns one half of its parent's interval,
//! the left child the lower half. The label is fully determined by the
//! root-to-node path, so it is stored as that path. Conversions to `f64` are
//! exact for depths up to 52.

use std::fmt;

use crate::error::{invalid_arg, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn flip(self) -> Side {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Side::Left => 'L',
            Side::Right => 'R',
        }
    }
}

/// Label `[lo, hi]` of a node, stored as its root-to-node path.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct IntervalLabel {
    path: Vec<Side>,
}

/// Largest grid exponent for which `k / 2^g` and every descent midpoint are
/// exactly representable in an `f64`.
pub const MAX_GRANULARITY: u32 = 52;

impl IntervalLabel {
    pub fn root() -> Self {
        Self { path: Vec::new() }
    }

    pub fn from_path(path: Vec<Side>) -> Self {
        Self { path }
    }

    pub fn path(&self) -> &[Side] {
        &self.path
    }

    pub fn depth(&self) -> usize {
        self.path.len()
    }

    pub fn child(&self, side: Side) -> Self {
        let mut path = Vec::with_capacity(self.path.len() + 1);
        path.extend_from_slice(&self.path);
        path.push(side);
        Self { path }
    }

    pub fn lo(&self) -> f64 {
        let mut lo = 0.0;
        let mut width = 1.0;
        for side in &self.path {
            width *= 0.5;
            if *side == Side::Right {
                lo += width;
            }
        }
        lo
    }

    pub fn hi(&self) -> f64 {
        let mut lo = 0.0;
        let mut width = 1.0;
        for side in &self.path {
            width *= 0.5;
            if *side == Side::Right {
                lo += width;
            }
        }
        lo + width
    }

    pub fn mid(&self) -> f64 {
        self.child(Side::Left).hi()
    }

    /// `hi` as a reduced dyadic fraction `num / 2^exp`. `None` beyond depth 127.
    pub fn hi_dyadic(&self) -> Option<(u128, u32)> {
        if self.path.len() > 127 {
            return None;
        }
        let mut num: u128 = 0;
        for side in &self.path {
            num = (num << 1) | u128::from(*side == Side::Right);
        }
        let mut num = num + 1;
        let mut exp = self.path.len() as u32;
        while exp > 0 && num.is_multiple_of(2) {
            num >>= 1;
            exp -= 1;
        }
        Some((num, exp))
    }

    /// True when `other` lies inside `self` (or equals it).
    pub fn contains(&self, other: &IntervalLabel) -> bool {
        other.path.starts_with(&self.path)
    }

    /// True when `self` lies entirely to the left of `other`, i.e.
    /// `self.hi <= other.lo`. Exact at any depth.
    pub fn precedes(&self, other: &IntervalLabel) -> bool {
        for (a, b) in self.path.iter().zip(&other.path) {
            if a != b {
                return *a == Side::Left;
            }
        }
        false
    }

    /// Exact ordering of `hi` values at any depth.
    ///
    /// `hi` is `0.b1 b2 ... bd 111...` in binary (L = 0, R = 1), so padding
    /// both paths with `R` and comparing lexicographically orders them.
    pub fn cmp_hi(&self, other: &IntervalLabel) -> std::cmp::Ordering {
        cmp_padded(&self.path, &other.path, Side::Right)
    }

    /// Exact ordering of `lo` values at any depth (paths padded with `L`).
    pub fn cmp_lo(&self, other: &IntervalLabel) -> std::cmp::Ordering {
        cmp_padded(&self.path, &other.path, Side::Left)
    }

    /// Path rendered as an `L`/`R` string; the root is `-`.
    pub fn path_string(&self) -> String {
        if self.path.is_empty() {
            "-".to_string()
        } else {
            self.path.iter().map(|s| s.as_char()).collect()
        }
    }

    pub fn parse_path(s: &str) -> Result<Self> {
        if s == "-" {
            return Ok(Self::root());
        }
        let path = s
            .chars()
            .map(|c| match c {
                'L' => Ok(Side::Left),
                'R' => Ok(Side::Right),
                other => Err(invalid_arg(format!(
                    "bad path character {other:?} in {s:?}"
                ))),
            })
            .collect::<Result<Vec<_>>>()?;
        if path.is_empty() {
            return Err(invalid_arg("empty path (use '-' for the root)"));
        }
        Ok(Self { path })
    }
}

fn cmp_padded(a: &[Side], b: &[Side], pad: Side) -> std::cmp::Ordering {
    let n = a.len().max(b.len());
    for i in 0..n {
        let x = a.get(i).copied().unwrap_or(pad);
        let y = b.get(i).copied().unwrap_or(pad);
        if x != y {
            return x.cmp(&y);
        }
    }
    std::cmp::Ordering::Equal
}

impl fmt::Display for IntervalLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo(), self.hi())
    }
}

/// Round `x` to the nearest grid point `k / 2^g` with `k >= 1`.
pub fn snap_to_grid(x: f64, granularity: u32) -> Result<f64> {
    if granularity == 0 || granularity > MAX_GRANULARITY {
        return Err(invalid_arg(format!(
            "granularity must be in 1..={MAX_GRANULARITY}, got {granularity}"
        )));
    }
    if !(x > 0.0 && x <= 1.0) {
        return Err(invalid_arg(format!(
            "interval end must be in (0, 1], got {x}"
        )));
    }
    let scale = (1u64 << granularity) as f64;
    let k = (x * scale).round().max(1.0);
    Ok(k / scale)
}

#[cfg(test)]
mod tests {
    use super::*;
    use Side::*;

    #[test]
    fn halvings() {
        let root = IntervalLabel::root();
        assert_eq!((root.lo(), root.hi()), (0.0, 1.0));
        let l = IntervalLabel::from_path(vec![Left]);
        assert_eq!((l.lo(), l.hi()), (0.0, 0.5));
        let lrl = IntervalLabel::from_path(vec![Left, Right, Left]);
        assert_eq!((lrl.lo(), lrl.hi()), (0.25, 0.375));
        assert_eq!(lrl.hi_dyadic(), Some((3, 3)));
        assert_eq!(
            IntervalLabel::from_path(vec![Left, Right, Right]).hi_dyadic(),
            Some((1, 1))
        );
    }

    #[test]
    fn precedes_and_contains() {
        let a = IntervalLabel::from_path(vec![Left, Right]);
        let b = IntervalLabel::from_path(vec![Right]);
        let c = IntervalLabel::from_path(vec![Left]);
        assert!(a.precedes(&b));
        assert!(!b.precedes(&a));
        assert!(!c.precedes(&a));
        assert!(c.contains(&a));
        assert!(!a.contains(&c));
    }

    #[test]
    fn exact_orderings_match_floats() {
        use std::cmp::Ordering;
        let all: Vec<IntervalLabel> = (0..4u32)
            .flat_map(|d| {
                (0..1u32 << d).map(move |k| {
                    IntervalLabel::from_path(
                        (0..d)
                            .rev()
                            .map(|b| if k >> b & 1 == 1 { Right } else { Left })
                            .collect(),
                    )
                })
            })
            .collect();
        for a in &all {
            for b in &all {
                assert_eq!(a.cmp_hi(b), a.hi().partial_cmp(&b.hi()).unwrap(), "{a} {b}");
                assert_eq!(a.cmp_lo(b), a.lo().partial_cmp(&b.lo()).unwrap(), "{a} {b}");
            }
        }
        let deep_l = IntervalLabel::from_path(vec![Left; 400]);
        let deep_lr = IntervalLabel::from_path([vec![Left; 399], vec![Right]].concat());
        assert_eq!(deep_l.cmp_hi(&deep_lr), Ordering::Less);
        assert_eq!(deep_l.cmp_lo(&deep_lr), Ordering::Less);
    }

    #[test]
    fn path_strings() {
        let l = IntervalLabel::parse_path("LRL").unwrap();
        assert_eq!(l.path_string(), "LRL");
        assert_eq!(
            IntervalLabel::parse_path("-").unwrap(),
            IntervalLabel::root()
        );
        assert!(IntervalLabel::parse_path("LX").is_err());
        assert!(IntervalLabel::parse_path("").is_err());
    }

    #[test]
    fn snapping() {
        assert_eq!(snap_to_grid(0.375, 16).unwrap(), 0.375);
        assert_eq!(snap_to_grid(0.3, 2).unwrap(), 0.25);
        assert_eq!(snap_to_grid(1e-9, 4).unwrap(), 1.0 / 16.0);
        assert!(snap_to_grid(0.0, 16).is_err());
        assert!(snap_to_grid(1.5, 16).is_err());
        assert!(snap_to_grid(0.5, 0).is_err());
        assert!(snap_to_grid(0.5, 53).is_err());
    }
}
