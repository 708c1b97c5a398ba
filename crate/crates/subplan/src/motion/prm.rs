//! Lazy PRM: roadmap construction with deferred edge validation; escalates
//! through the sample-count schedule until a valid path is found.

use super::{PlanGrid, PlannerStats};
use crate::geom::Vec2;
use crate::sense::{GRID_RES, GRID_SIZE};
use rand::Rng;
use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashSet};

const MAX_REPAIRS: usize = 400; // re-searches per schedule tier

pub fn plan<R: Rng>(
    grid: &PlanGrid,
    start: Vec2,
    goal: Vec2,
    schedule: &[usize],
    res: f64,
    rng: &mut R,
    stats: &mut PlannerStats,
) -> Option<Vec<Vec2>> {
    for &n in schedule {
        if let Some(path) = plan_tier(grid, start, goal, n, res, rng, stats) {
            return Some(path);
        }
    }
    None
}

fn plan_tier<R: Rng>(
    grid: &PlanGrid,
    start: Vec2,
    goal: Vec2,
    n: usize,
    res: f64,
    rng: &mut R,
    stats: &mut PlannerStats,
) -> Option<Vec<Vec2>> {
    let span = GRID_RES * GRID_SIZE as f64;
    let area = span * span;
    let radius = (1.8 * (area / n as f64).sqrt()).max(0.25);

    // Nodes 0 and 1 are start and goal.
    let mut nodes = vec![start, goal];
    let mut tries = 0;
    while nodes.len() < n + 2 && tries < 20 * n {
        tries += 1;
        let p = grid.sample(rng);
        if grid.is_free(p) {
            nodes.push(p);
        }
    }
    stats.nodes += nodes.len();

    // Bucket grid for radius queries.
    let inv = 1.0 / radius;
    let key = |p: Vec2| -> (i64, i64) { ((p.x * inv).floor() as i64, (p.y * inv).floor() as i64) };
    let mut buckets: std::collections::HashMap<(i64, i64), Vec<usize>> =
        std::collections::HashMap::new();
    for (i, p) in nodes.iter().enumerate() {
        buckets.entry(key(*p)).or_default().push(i);
    }

    let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); nodes.len()];
    for (i, p) in nodes.iter().enumerate() {
        let (kx, ky) = key(*p);
        for dx in -1..=1 {
            for dy in -1..=1 {
                let Some(cands) = buckets.get(&(kx + dx, ky + dy)) else { continue };
                for &j in cands {
                    if j <= i {
                        continue;
                    }
                    let d = p.dist(nodes[j]);
                    if d <= radius && d > 1e-12 {
                        adj[i].push((j, d));
                        adj[j].push((i, d));
                    }
                }
            }
        }
    }

    // Lazy loop: search on the optimistic roadmap, validate the found path,
    // drop the first bad edge, repeat.
    let mut dead: HashSet<(usize, usize)> = HashSet::new();
    let edge_key = |a: usize, b: usize| if a < b { (a, b) } else { (b, a) };
    let mut checked: HashSet<(usize, usize)> = HashSet::new();
    for _ in 0..MAX_REPAIRS {
        stats.iterations += 1;
        let path = dijkstra(&nodes, &adj, &dead)?;
        let mut all_valid = true;
        for w in path.windows(2) {
            let k = edge_key(w[0], w[1]);
            if checked.contains(&k) {
                continue;
            }
            stats.collision_checks += 1;
            if grid.segment_free(nodes[w[0]], nodes[w[1]], res) {
                checked.insert(k);
            } else {
                dead.insert(k);
                all_valid = false;
                break;
            }
        }
        if all_valid {
            return Some(path.into_iter().map(|i| nodes[i]).collect());
        }
    }
    None
}

/// Shortest path 0 -> 1 over the optimistic roadmap; None if disconnected.
fn dijkstra(
    nodes: &[Vec2],
    adj: &[Vec<(usize, f64)>],
    dead: &HashSet<(usize, usize)>,
) -> Option<Vec<usize>> {
    let mut dist = vec![f64::INFINITY; nodes.len()];
    let mut prev = vec![usize::MAX; nodes.len()];
    let mut heap: BinaryHeap<Reverse<(u64, usize)>> = BinaryHeap::new();
    dist[0] = 0.0;
    heap.push(Reverse((0.0f64.to_bits(), 0)));
    while let Some(Reverse((dbits, u))) = heap.pop() {
        let d = f64::from_bits(dbits);
        if d > dist[u] {
            continue;
        }
        if u == 1 {
            break;
        }
        for &(v, w) in &adj[u] {
            let k = if u < v { (u, v) } else { (v, u) };
            if dead.contains(&k) {
                continue;
            }
            let nd = d + w;
            if nd < dist[v] {
                dist[v] = nd;
                prev[v] = u;
                heap.push(Reverse((nd.to_bits(), v)));
            }
        }
    }
    if !dist[1].is_finite() {
        return None;
    }
    let mut path = vec![1];
    let mut cur = 1;
    while cur != 0 {
        cur = prev[cur];
        path.push(cur);
    }
    path.reverse();
    Some(path)
}
