//! Piecewise-linear cumulative work curve over the unit interval.

use crate::error::{invalid_arg, Error, Result};
use crate::tree::{NodeHandle, TreeStore};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DistPoint {
    pub x: f64,
    /// Cumulative estimated work up to `x`.
    pub y: f64,
    /// Subtree whose interval ends at `x` and spans the segment ending here.
    pub node: Option<NodeHandle>,
}

/// Sorted `(x, cumulative work)` points; `x` strictly increasing, `y`
/// non-decreasing, first `y` is 0 and last `y` is the total work.
#[derive(Clone, Debug, PartialEq)]
pub struct WorkDistribution {
    points: Vec<DistPoint>,
}

impl WorkDistribution {
    /// Build directly from points, checking the ordering invariants.
    pub fn from_points(points: Vec<DistPoint>) -> Result<Self> {
        if points.len() < 2 {
            return Err(invalid_arg("a work distribution needs at least two points"));
        }
        if points[0].y != 0.0 {
            return Err(invalid_arg("work distribution must start at zero work"));
        }
        for w in points.windows(2) {
            if !(w[1].x > w[0].x) {
                return Err(invalid_arg(format!(
                    "x not increasing at {} -> {}",
                    w[0].x, w[1].x
                )));
            }
            if !(w[1].y >= w[0].y) || !w[1].y.is_finite() {
                return Err(invalid_arg(format!(
                    "y not non-decreasing at x = {}",
                    w[1].x
                )));
            }
        }
        Ok(WorkDistribution { points })
    }

    pub fn points(&self) -> &[DistPoint] {
        &self.points
    }

    pub fn total_work(&self) -> f64 {
        self.points.last().map_or(0.0, |p| p.y)
    }

    /// Index `i` of the first segment `(points[i], points[i+1])` with
    /// `y_i < y <= y_{i+1}`.
    pub fn segment_for(&self, y: f64) -> Option<usize> {
        self.points
            .windows(2)
            .position(|w| w[0].y < y && y <= w[1].y)
    }

    /// x at which the cumulative work reaches `y`, by linear interpolation on
    /// the first segment that crosses `y`.
    pub fn inverse_map(&self, y: f64) -> Result<f64> {
        let total = self.total_work();
        if total <= 0.0 {
            return Err(Error::FlatDistribution);
        }
        if !(0.0..=total).contains(&y) {
            return Err(invalid_arg(format!("work {y} outside [0, {total}]")));
        }
        let Some(i) = self.segment_for(y) else {
            return Ok(self.points[0].x);
        };
        let (a, b) = (self.points[i], self.points[i + 1]);
        let x = a.x + (y - a.y) * (b.x - a.x) / (b.y - a.y);
        Ok(x.clamp(a.x, b.x))
    }

    /// Cumulative work at `x` (the forward map).
    pub fn work_at(&self, x: f64) -> f64 {
        let first = self.points[0];
        let last = self.points[self.points.len() - 1];
        if x <= first.x {
            return 0.0;
        }
        if x >= last.x {
            return last.y;
        }
        let i = self.points.partition_point(|p| p.x <= x) - 1;
        let (a, b) = (self.points[i], self.points[i + 1]);
        a.y + (x - a.x) * (b.y - a.y) / (b.x - a.x)
    }

    /// Insert a point strictly inside an existing segment.
    pub(crate) fn insert(&mut self, point: DistPoint) -> Result<usize> {
        let i = self.points.partition_point(|p| p.x < point.x);
        if i == 0 || i == self.points.len() || self.points[i].x == point.x {
            return Err(invalid_arg(format!(
                "point x = {} is not inside a segment",
                point.x
            )));
        }
        let (a, b) = (self.points[i - 1], self.points[i]);
        if !(a.y <= point.y && point.y <= b.y) {
            return Err(invalid_arg("inserted point breaks monotonicity"));
        }
        self.points.insert(i, point);
        Ok(i)
    }

    pub(crate) fn set_node(&mut self, index: usize, node: Option<NodeHandle>) {
        self.points[index].node = node;
    }
}

/// Cumulative work curve for `subtrees` (given in interval order) with the
/// given per-subtree `works`. The curve starts at `(lo of the first subtree, 0)`
/// and each subtree adds a point at its `hi`.
pub fn build_distribution(
    tree: &TreeStore,
    subtrees: &[NodeHandle],
    works: &[f64],
) -> Result<WorkDistribution> {
    if subtrees.len() != works.len() {
        return Err(invalid_arg(format!(
            "{} subtrees but {} work values",
            subtrees.len(),
            works.len()
        )));
    }
    if subtrees.is_empty() {
        return Err(invalid_arg("no subtrees to distribute"));
    }
    if let Some(w) = works.iter().find(|w| !(**w >= 0.0) || !w.is_finite()) {
        return Err(invalid_arg(format!(
            "work values must be finite and >= 0, got {w}"
        )));
    }

    let labels = subtrees
        .iter()
        .map(|&s| tree.interval_of(s))
        .collect::<Result<Vec<_>>>()?;
    for w in labels.windows(2) {
        if !w[0].precedes(&w[1]) {
            return Err(invalid_arg(format!(
                "subtrees are not in interval order: {} then {}",
                w[0].path_string(),
                w[1].path_string()
            )));
        }
    }

    let mut points = Vec::with_capacity(subtrees.len() + 1);
    points.push(DistPoint {
        x: labels[0].lo(),
        y: 0.0,
        node: None,
    });
    let mut acc = 0.0;
    for ((label, &node), &work) in labels.iter().zip(subtrees).zip(works) {
        acc += work;
        let x = label.hi();
        let last = points.last_mut().expect("non-empty");
        if x <= last.x {
            // Deeper than f64 can separate; fold into the previous point.
            last.y = acc;
            continue;
        }
        points.push(DistPoint {
            x,
            y: acc,
            node: Some(node),
        });
    }
    if points.len() < 2 {
        return Err(invalid_arg("subtree intervals are too narrow to separate"));
    }
    WorkDistribution::from_points(points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::generate_perfect;

    fn level2(tree: &TreeStore) -> Vec<NodeHandle> {
        let r = tree.root().unwrap();
        let (l, rr) = (tree.left(r).unwrap(), tree.right(r).unwrap());
        vec![
            tree.left(l).unwrap(),
            tree.right(l).unwrap(),
            tree.left(rr).unwrap(),
            tree.right(rr).unwrap(),
        ]
    }

    #[test]
    fn four_subtrees_totalling_300() {
        let tree = generate_perfect(3).unwrap();
        let d = build_distribution(&tree, &level2(&tree), &[100.0, 100.0, 60.0, 40.0]).unwrap();
        assert_eq!(d.total_work(), 300.0);
        let xs: Vec<f64> = d.points().iter().map(|p| p.x).collect();
        assert_eq!(xs, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(d.inverse_map(150.0).unwrap(), 0.375);
        assert_eq!(d.inverse_map(0.0).unwrap(), 0.0);
        assert_eq!(d.inverse_map(300.0).unwrap(), 1.0);
        assert_eq!(d.work_at(0.375), 150.0);
        assert!(d.inverse_map(301.0).is_err());
    }

    #[test]
    fn single_subtree_and_flat() {
        let tree = generate_perfect(1).unwrap();
        let l = tree.left(tree.root().unwrap()).unwrap();
        let d = build_distribution(&tree, &[l], &[7.0]).unwrap();
        let pts: Vec<(f64, f64)> = d.points().iter().map(|p| (p.x, p.y)).collect();
        assert_eq!(pts, vec![(0.0, 0.0), (0.5, 7.0)]);

        let flat = build_distribution(&tree, &[l], &[0.0]).unwrap();
        assert!(matches!(
            flat.inverse_map(0.0),
            Err(Error::FlatDistribution)
        ));
    }

    #[test]
    fn zero_height_segments_are_skipped() {
        let tree = generate_perfect(3).unwrap();
        let d = build_distribution(&tree, &level2(&tree), &[10.0, 0.0, 0.0, 10.0]).unwrap();
        // y = 10 is reached at the end of the first segment
        assert_eq!(d.inverse_map(10.0).unwrap(), 0.25);
        assert_eq!(d.inverse_map(15.0).unwrap(), 0.875);
    }

    #[test]
    fn rejects_bad_input() {
        let tree = generate_perfect(3).unwrap();
        let lv = level2(&tree);
        assert!(build_distribution(&tree, &lv, &[1.0, 2.0]).is_err());
        assert!(build_distribution(&tree, &[lv[1], lv[0]], &[1.0, 2.0]).is_err());
        assert!(build_distribution(&tree, &lv[..1], &[-1.0]).is_err());
        assert!(build_distribution(&tree, &[], &[]).is_err());
    }
}
