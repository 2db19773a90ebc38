use crate::scalar::{squared_distance, Real};

const LEAF_SIZE: usize = 8;

enum Node<T> {
    Leaf { start: usize, end: usize },
    Split { axis: usize, value: T, left: usize, right: usize },
}

/// Static k-d tree answering exact nearest-neighbour distance queries.
///
/// Candidate distances are computed with [`squared_distance`] and subtrees
/// are pruned only when their bounding half-space is strictly farther than
/// the best candidate, so the returned minimum is bit-identical to an
/// exhaustive scan.
pub struct KdTree<'a, T, const D: usize> {
    points: &'a [[T; D]],
    order: Vec<usize>,
    nodes: Vec<Node<T>>,
}

impl<'a, T: Real, const D: usize> KdTree<'a, T, D> {
    pub fn new(points: &'a [[T; D]]) -> Self {
        let mut tree = Self {
            points,
            order: (0..points.len()).collect(),
            nodes: Vec::new(),
        };
        if !points.is_empty() {
            tree.build(0, points.len());
        }
        tree
    }

    fn build(&mut self, start: usize, end: usize) -> usize {
        let id = self.nodes.len();
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        // Split on the axis of largest spread.
        let mut best_axis = 0;
        let mut best_spread = T::neg_infinity();
        for axis in 0..D {
            let (lo, hi) = self.order[start..end].iter().fold(
                (T::infinity(), T::neg_infinity()),
                |(lo, hi), &i| (lo.min(self.points[i][axis]), hi.max(self.points[i][axis])),
            );
            if hi - lo > best_spread {
                best_spread = hi - lo;
                best_axis = axis;
            }
        }
        let mid = start + (end - start) / 2;
        let pts = self.points;
        self.order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            pts[a][best_axis]
                .partial_cmp(&pts[b][best_axis])
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        let value = pts[self.order[mid]][best_axis];
        self.nodes.push(Node::Leaf { start, end });
        let left = self.build(start, mid);
        let right = self.build(mid, end);
        self.nodes[id] = Node::Split {
            axis: best_axis,
            value,
            left,
            right,
        };
        id
    }

    /// Squared distance from `query` to its nearest point, or `None` for an
    /// empty tree.
    pub fn nearest_squared(&self, query: &[T; D]) -> Option<T> {
        if self.nodes.is_empty() {
            return None;
        }
        let mut best = T::infinity();
        self.search(0, query, &mut best);
        Some(best)
    }

    fn search(&self, id: usize, q: &[T; D], best: &mut T) {
        match &self.nodes[id] {
            Node::Leaf { start, end } => {
                for &i in &self.order[*start..*end] {
                    let d = squared_distance(q, &self.points[i]);
                    if d < *best {
                        *best = d;
                    }
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                // Points in `left` have coordinate <= value, points in
                // `right` have coordinate >= value.
                let diff = q[*axis] - *value;
                let (near, far) = if diff < T::zero() {
                    (*left, *right)
                } else {
                    (*right, *left)
                };
                self.search(near, q, best);
                if diff * diff <= *best {
                    self.search(far, q, best);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn matches_exhaustive_search() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let pts: Vec<[f64; 3]> = (0..3000)
            .map(|_| [rng.random(), rng.random(), rng.random::<f64>() * 0.1])
            .collect();
        let tree = KdTree::new(&pts);
        for _ in 0..500 {
            let q = [rng.random::<f64>() * 1.2 - 0.1, rng.random(), rng.random()];
            let brute = pts
                .iter()
                .map(|p| squared_distance(&q, p))
                .fold(f64::INFINITY, f64::min);
            assert_eq!(tree.nearest_squared(&q), Some(brute));
        }
    }

    #[test]
    fn duplicates_and_empty() {
        let pts = vec![[1.0f32, 1.0]; 40];
        let tree = KdTree::new(&pts);
        assert_eq!(tree.nearest_squared(&[1.0, 2.0]), Some(1.0));
        let empty: Vec<[f32; 2]> = Vec::new();
        assert_eq!(KdTree::new(&empty).nearest_squared(&[0.0, 0.0]), None);
    }
}
