//! RRT-Connect: bidirectional trees with greedy connect extension.

use super::{PlanGrid, PlannerStats};
use crate::geom::Vec2;
use rand::Rng;

struct Tree {
    nodes: Vec<Vec2>,
    parent: Vec<usize>,
}

impl Tree {
    fn new(root: Vec2) -> Self {
        Tree { nodes: vec![root], parent: vec![0] }
    }

    fn nearest(&self, p: Vec2) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, n) in self.nodes.iter().enumerate() {
            let d = n.dist(p);
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        best
    }

    /// Greedy connect-style extension: march from the nearest node toward
    /// `target` in `res` steps, adding nodes until blocked or arrived.
    /// Returns the last added (or nearest) node and whether it reached.
    fn extend(&mut self, grid: &PlanGrid, target: Vec2, res: f64) -> (usize, bool) {
        let mut cur = self.nearest(target);
        loop {
            let p = self.nodes[cur];
            let d = p.dist(target);
            if d <= res {
                if grid.is_free(target) {
                    self.nodes.push(target);
                    self.parent.push(cur);
                    return (self.nodes.len() - 1, true);
                }
                return (cur, false);
            }
            let next = p + (target - p) * (res / d);
            if !grid.is_free(next) {
                return (cur, false);
            }
            self.nodes.push(next);
            self.parent.push(cur);
            cur = self.nodes.len() - 1;
        }
    }

    fn path_to_root(&self, mut idx: usize) -> Vec<Vec2> {
        let mut path = vec![self.nodes[idx]];
        while self.parent[idx] != idx {
            idx = self.parent[idx];
            path.push(self.nodes[idx]);
        }
        path.reverse(); // root first
        path
    }
}

pub fn plan<R: Rng>(
    grid: &PlanGrid,
    start: Vec2,
    goal: Vec2,
    iterations: usize,
    restarts: usize,
    res: f64,
    rng: &mut R,
    stats: &mut PlannerStats,
) -> Option<Vec<Vec2>> {
    for _ in 0..restarts {
        let mut from_start = Tree::new(start);
        let mut from_goal = Tree::new(goal);
        // `a` grows toward samples; flipped each iteration.
        let mut a_is_start = true;
        for _ in 0..iterations {
            stats.iterations += 1;
            let (ta, tb) = if a_is_start {
                (&mut from_start, &mut from_goal)
            } else {
                (&mut from_goal, &mut from_start)
            };
            let sample = grid.sample(rng);
            let (ia, _) = ta.extend(grid, sample, res);
            let anchor = ta.nodes[ia];
            let (ib, reached) = tb.extend(grid, anchor, res);
            if reached {
                let (start_idx, goal_idx) = if a_is_start { (ia, ib) } else { (ib, ia) };
                let mut path = from_start.path_to_root(start_idx);
                let mut tail = from_goal.path_to_root(goal_idx);
                tail.reverse(); // meeting point first, goal last
                path.extend(tail.into_iter().skip(1));
                stats.nodes += from_start.nodes.len() + from_goal.nodes.len();
                return Some(path);
            }
            a_is_start = !a_is_start;
        }
        stats.nodes += from_start.nodes.len() + from_goal.nodes.len();
    }
    None
}
