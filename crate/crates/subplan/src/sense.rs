//! Sensing: simulated LiDAR, egocentric multi-channel grid maps, geodesic
//! distance fields over the static floor plan, and waypoint task channels.

use crate::geom::{wrap_angle, Polygon, Pose2D, Segment, Vec2};
use crate::world::{MassClass, ObjectKind, SceneState};
use std::cmp::Reverse;
use std::collections::BinaryHeap;
use thiserror::Error;

pub const LIDAR_RAYS: usize = 220;
pub const LIDAR_FOV: f64 = 220.0 * std::f64::consts::PI / 180.0;
pub const LIDAR_MAX_RANGE: f64 = 5.6; // m
pub const GRID_SIZE: usize = 64;
pub const GRID_RES: f64 = 0.08; // m per cell
pub const GRID_CENTER: usize = 32; // robot cell (row, col)
pub const CHANNELS: usize = 8;
pub const NUM_WAYPOINTS: usize = 10;
pub const WAYPOINT_SPACING: f64 = 0.2; // m along the geodesic path
pub const TASK_VEC_LEN: usize = 2 + 2 * NUM_WAYPOINTS;

#[derive(Debug, Error)]
pub enum SenseError {
    #[error("goal ({0:.2}, {1:.2}) lies in blocked space")]
    GoalBlocked(f64, f64),
    #[error("no geodesic path from ({0:.2}, {1:.2})")]
    Unreachable(f64, f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Channel {
    Occupancy = 0,
    Door = 1,
    Button = 2,
    Movable = 3,
    Immovable = 4,
    Drawer = 5,
    Chair = 6,
    Task = 7,
}

impl Channel {
    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LidarScan {
    pub ranges: Vec<f64>,
    pub fov: f64,
    pub max_range: f64,
}

/// 220 evenly spaced rays over 220 degrees (inclusive endpoints) centered on
/// the robot heading; range = nearest wall or footprint hit.
pub fn raycast_lidar(state: &SceneState) -> LidarScan {
    let mut segs: Vec<Segment> = state.walls.clone();
    for o in &state.objects {
        segs.extend(o.world_footprint().edges());
    }
    let origin = state.robot.position();
    let step = LIDAR_FOV / (LIDAR_RAYS - 1) as f64;
    let mut ranges = Vec::with_capacity(LIDAR_RAYS);
    for i in 0..LIDAR_RAYS {
        let ang = state.robot.theta - LIDAR_FOV / 2.0 + i as f64 * step;
        let dir = Vec2::new(ang.cos(), ang.sin());
        let mut r = LIDAR_MAX_RANGE;
        for s in &segs {
            if let Some(t) = s.raycast(origin, dir) {
                if t < r {
                    r = t;
                }
            }
        }
        ranges.push(r.max(1e-9));
    }
    LidarScan {
        ranges,
        fov: LIDAR_FOV,
        max_range: LIDAR_MAX_RANGE,
    }
}

/// Egocentric 8-channel binary map, 64x64 at 0.08 m/cell, robot at cell
/// (32, 32), heading toward decreasing rows ("up").
#[derive(Clone, Debug, PartialEq)]
pub struct GridMap {
    /// [channel][row][col], row-major, values in {0, 1}.
    pub data: Vec<f64>,
}

impl GridMap {
    pub fn zeros() -> Self {
        GridMap {
            data: vec![0.0; CHANNELS * GRID_SIZE * GRID_SIZE],
        }
    }

    #[inline]
    pub fn get(&self, ch: Channel, row: usize, col: usize) -> f64 {
        self.data[(ch.index() * GRID_SIZE + row) * GRID_SIZE + col]
    }

    #[inline]
    pub fn set(&mut self, ch: Channel, row: usize, col: usize, v: f64) {
        self.data[(ch.index() * GRID_SIZE + row) * GRID_SIZE + col] = v;
    }

    pub fn channel(&self, ch: Channel) -> &[f64] {
        let n = GRID_SIZE * GRID_SIZE;
        &self.data[ch.index() * n..(ch.index() + 1) * n]
    }
}

/// Cell center in ego coordinates (forward, left) meters.
pub fn cell_center_ego(row: usize, col: usize) -> (f64, f64) {
    (
        (GRID_CENTER as f64 - row as f64) * GRID_RES,
        (GRID_CENTER as f64 - col as f64) * GRID_RES,
    )
}

pub fn cell_to_world(robot: &Pose2D, row: usize, col: usize) -> Vec2 {
    let (f, l) = cell_center_ego(row, col);
    let h = robot.heading();
    robot.position() + h * f + h.perp() * l
}

pub fn world_to_cell(robot: &Pose2D, p: Vec2) -> Option<(usize, usize)> {
    let d = p - robot.position();
    let h = robot.heading();
    let f = d.dot(h);
    let l = d.dot(h.perp());
    let row = GRID_CENTER as f64 - (f / GRID_RES).round();
    let col = GRID_CENTER as f64 - (l / GRID_RES).round();
    if row < 0.0 || col < 0.0 || row >= GRID_SIZE as f64 || col >= GRID_SIZE as f64 {
        return None;
    }
    Some((row as usize, col as usize))
}

/// Shortest-path distances to a goal over the static floor plan (walls
/// only), 8-connected at 0.08 m; blocked/unreachable cells hold +inf.
#[derive(Clone, Debug, PartialEq)]
pub struct GeodesicField {
    /// World position of cell (ix = 0, iy = 0)'s center.
    pub origin: Vec2,
    pub nx: usize,
    pub ny: usize,
    pub res: f64,
    /// dist[iy * nx + ix], meters.
    pub dist: Vec<f64>,
    pub goal: Vec2,
}

impl GeodesicField {
    pub fn cell_of(&self, p: Vec2) -> Option<(usize, usize)> {
        let ix = ((p.x - self.origin.x) / self.res).round();
        let iy = ((p.y - self.origin.y) / self.res).round();
        if ix < 0.0 || iy < 0.0 || ix >= self.nx as f64 || iy >= self.ny as f64 {
            return None;
        }
        Some((ix as usize, iy as usize))
    }

    pub fn cell_center(&self, ix: usize, iy: usize) -> Vec2 {
        Vec2::new(
            self.origin.x + ix as f64 * self.res,
            self.origin.y + iy as f64 * self.res,
        )
    }

    pub fn value(&self, ix: usize, iy: usize) -> f64 {
        self.dist[iy * self.nx + ix]
    }

    /// Distance at the cell containing `p`; +inf outside the grid.
    pub fn at(&self, p: Vec2) -> f64 {
        match self.cell_of(p) {
            Some((ix, iy)) => self.value(ix, iy),
            None => f64::INFINITY,
        }
    }
}

fn cell_square(center: Vec2, half: f64) -> Polygon {
    Polygon::rectangle(center.x, center.y, half, half)
}

/// Dijkstra from the goal over the wall-only floor plan. Edge costs are
/// res and res*sqrt(2); dynamic objects are ignored by construction.
pub fn compute_geodesic_field(walls: &[Segment], goal: Vec2) -> Result<GeodesicField, SenseError> {
    let mut lo = Vec2::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for w in walls {
        for p in [w.a, w.b] {
            lo.x = lo.x.min(p.x);
            lo.y = lo.y.min(p.y);
            hi.x = hi.x.max(p.x);
            hi.y = hi.y.max(p.y);
        }
    }
    // Cover the goal even in wall-less test scenes.
    lo.x = lo.x.min(goal.x);
    lo.y = lo.y.min(goal.y);
    hi.x = hi.x.max(goal.x);
    hi.y = hi.y.max(goal.y);

    let res = GRID_RES;
    let margin = 2.0 * res;
    let origin = Vec2::new(lo.x - margin, lo.y - margin);
    let nx = (((hi.x - origin.x + margin) / res).ceil() as usize) + 1;
    let ny = (((hi.y - origin.y + margin) / res).ceil() as usize) + 1;

    let mut blocked = vec![false; nx * ny];
    for iy in 0..ny {
        for ix in 0..nx {
            let c = Vec2::new(origin.x + ix as f64 * res, origin.y + iy as f64 * res);
            let near = walls
                .iter()
                .any(|w| w.distance_to_point(c) <= res * std::f64::consts::SQRT_2);
            if near {
                let sq = cell_square(c, res / 2.0);
                if walls.iter().any(|w| sq.intersects_segment(w)) {
                    blocked[iy * nx + ix] = true;
                }
            }
        }
    }

    let mut field = GeodesicField {
        origin,
        nx,
        ny,
        res,
        dist: vec![f64::INFINITY; nx * ny],
        goal,
    };
    let (gx, gy) = field
        .cell_of(goal)
        .ok_or(SenseError::GoalBlocked(goal.x, goal.y))?;
    if blocked[gy * nx + gx] {
        return Err(SenseError::GoalBlocked(goal.x, goal.y));
    }

    let diag = res * std::f64::consts::SQRT_2;
    let mut heap: BinaryHeap<Reverse<(u64, usize)>> = BinaryHeap::new();
    field.dist[gy * nx + gx] = 0.0;
    heap.push(Reverse((0.0f64.to_bits(), gy * nx + gx)));
    while let Some(Reverse((dbits, idx))) = heap.pop() {
        let d = f64::from_bits(dbits);
        if d > field.dist[idx] {
            continue;
        }
        let (ix, iy) = (idx % nx, idx / nx);
        for dy in -1i64..=1 {
            for dx in -1i64..=1 {
                if dx == 0 && dy == 0 {
                    continue;
                }
                let (jx, jy) = (ix as i64 + dx, iy as i64 + dy);
                if jx < 0 || jy < 0 || jx >= nx as i64 || jy >= ny as i64 {
                    continue;
                }
                let jdx = jy as usize * nx + jx as usize;
                if blocked[jdx] {
                    continue;
                }
                let cost = if dx != 0 && dy != 0 { diag } else { res };
                let nd = d + cost;
                if nd < field.dist[jdx] {
                    field.dist[jdx] = nd;
                    heap.push(Reverse((nd.to_bits(), jdx)));
                }
            }
        }
    }
    Ok(field)
}

/// Greedy-descent waypoints along the geodesic path from `start`, exactly
/// `spacing` meters apart by arc length (linear interpolation along the
/// traced polyline), padded with the goal once the path ends.
pub fn trace_waypoints(
    field: &GeodesicField,
    start: Vec2,
    n: usize,
    spacing: f64,
) -> Result<Vec<Vec2>, SenseError> {
    let (mut ix, mut iy) = field
        .cell_of(start)
        .ok_or(SenseError::Unreachable(start.x, start.y))?;
    if !field.value(ix, iy).is_finite() {
        return Err(SenseError::Unreachable(start.x, start.y));
    }

    let mut polyline = vec![start];
    let max_moves = field.nx * field.ny;
    for _ in 0..max_moves {
        let cur = field.value(ix, iy);
        if cur == 0.0 {
            break;
        }
        let mut best = (cur, ix, iy);
        for dy in -1i64..=1 {
            for dx in -1i64..=1 {
                if dx == 0 && dy == 0 {
                    continue;
                }
                let (jx, jy) = (ix as i64 + dx, iy as i64 + dy);
                if jx < 0 || jy < 0 || jx >= field.nx as i64 || jy >= field.ny as i64 {
                    continue;
                }
                let v = field.value(jx as usize, jy as usize);
                if v < best.0 {
                    best = (v, jx as usize, jy as usize);
                }
            }
        }
        if best.1 == ix && best.2 == iy {
            break; // local minimum: goal cell reached up to float noise
        }
        ix = best.1;
        iy = best.2;
        polyline.push(field.cell_center(ix, iy));
    }
    polyline.push(field.goal);

    let mut waypoints = Vec::with_capacity(n);
    let mut seg_idx = 0;
    let mut seg_off = 0.0; // arc length already consumed on current segment
    'outer: for _ in 0..n {
        let mut need = spacing;
        while seg_idx + 1 < polyline.len() {
            let a = polyline[seg_idx];
            let b = polyline[seg_idx + 1];
            let len = a.dist(b);
            let avail = len - seg_off;
            if avail >= need {
                seg_off += need;
                let t = seg_off / len;
                waypoints.push(a + (b - a) * t);
                continue 'outer;
            }
            need -= avail;
            seg_idx += 1;
            seg_off = 0.0;
        }
        waypoints.push(field.goal);
    }
    Ok(waypoints)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Observation {
    pub map: GridMap,
    /// [goal_range, goal_bearing, (forward, left) x 10 waypoints], ego
    /// frame; all zeros when no navigation goal is exposed.
    pub task_vec: [f64; TASK_VEC_LEN],
}

impl Observation {
    pub fn zeros() -> Self {
        Observation {
            map: GridMap::zeros(),
            task_vec: [0.0; TASK_VEC_LEN],
        }
    }
}

fn world_to_ego(robot: &Pose2D, p: Vec2) -> (f64, f64) {
    let d = p - robot.position();
    let h = robot.heading();
    (d.dot(h), d.dot(h.perp()))
}

fn raster_segment(map: &mut GridMap, ch: Channel, robot: &Pose2D, seg: &Segment) {
    let reach = GRID_RES * (GRID_SIZE as f64) * std::f64::consts::SQRT_2;
    if seg.distance_to_point(robot.position()) > reach {
        return;
    }
    let half_diag = GRID_RES * std::f64::consts::SQRT_2 / 2.0;
    for row in 0..GRID_SIZE {
        for col in 0..GRID_SIZE {
            let c = cell_to_world(robot, row, col);
            if seg.distance_to_point(c) > half_diag {
                continue;
            }
            let sq = world_cell_square(robot, row, col);
            if sq.intersects_segment(seg) {
                map.set(ch, row, col, 1.0);
            }
        }
    }
}

fn raster_polygon(map: &mut GridMap, ch: Channel, robot: &Pose2D, poly: &Polygon) {
    let centroid = poly.centroid();
    let radius = poly
        .vertices
        .iter()
        .map(|v| v.dist(centroid))
        .fold(0.0, f64::max);
    let half_diag = GRID_RES * std::f64::consts::SQRT_2 / 2.0;
    for row in 0..GRID_SIZE {
        for col in 0..GRID_SIZE {
            let c = cell_to_world(robot, row, col);
            if c.dist(centroid) > radius + half_diag {
                continue;
            }
            if poly.contains(c) || poly.distance_to_point(c) <= half_diag {
                let sq = world_cell_square(robot, row, col);
                if poly.intersects_polygon(&sq) {
                    map.set(ch, row, col, 1.0);
                }
            }
        }
    }
}

/// The (rotated) world-frame square covered by an ego cell.
fn world_cell_square(robot: &Pose2D, row: usize, col: usize) -> Polygon {
    let c = cell_to_world(robot, row, col);
    let h = robot.heading() * (GRID_RES / 2.0);
    let l = robot.heading().perp() * (GRID_RES / 2.0);
    Polygon::new(vec![c - h - l, c + h - l, c + h + l, c - h + l])
}

fn channel_for(kind: ObjectKind, mass: MassClass) -> Channel {
    match kind {
        ObjectKind::RevoluteDoor => Channel::Door,
        ObjectKind::PrismaticDrawer => Channel::Drawer,
        ObjectKind::Button => Channel::Button,
        ObjectKind::Chair => Channel::Chair,
        ObjectKind::FreeBox => match mass {
            MassClass::Light => Channel::Movable,
            MassClass::Immovable => Channel::Immovable,
        },
    }
}

fn mark_disc(map: &mut GridMap, ch: Channel, robot: &Pose2D, center: Vec2, radius: f64) {
    for row in 0..GRID_SIZE {
        for col in 0..GRID_SIZE {
            if cell_to_world(robot, row, col).dist(center) <= radius {
                map.set(ch, row, col, 1.0);
            }
        }
    }
}

/// Assemble the policy observation.
///
/// `nav` carries the goal and its geodesic field for navigation tasks (task
/// vector + drawn goal/waypoints); `ee_goal` draws a marker for stationary
/// reach tasks; with neither, the task channel and vector stay zero.
pub fn build_observation(
    state: &SceneState,
    nav: Option<(&GeodesicField, Vec2)>,
    ee_goal: Option<Vec2>,
) -> Observation {
    let mut map = GridMap::zeros();
    let robot = &state.robot;

    // Occupancy: known static walls plus current LiDAR returns.
    for w in &state.walls {
        raster_segment(&mut map, Channel::Occupancy, robot, w);
    }
    let scan = raycast_lidar(state);
    let step = LIDAR_FOV / (LIDAR_RAYS - 1) as f64;
    for (i, r) in scan.ranges.iter().enumerate() {
        if *r >= LIDAR_MAX_RANGE {
            continue;
        }
        let ang = robot.theta - LIDAR_FOV / 2.0 + i as f64 * step;
        let hit = robot.position() + Vec2::new(ang.cos(), ang.sin()) * *r;
        if let Some((row, col)) = world_to_cell(robot, hit) {
            map.set(Channel::Occupancy, row, col, 1.0);
        }
    }

    // Ground-truth semantic channels.
    for o in &state.objects {
        let ch = channel_for(o.kind, o.mass_class);
        raster_polygon(&mut map, ch, robot, &o.world_footprint());
    }

    let mut task_vec = [0.0; TASK_VEC_LEN];
    if let Some((field, goal)) = nav {
        let (f, l) = world_to_ego(robot, goal);
        task_vec[0] = (f * f + l * l).sqrt();
        task_vec[1] = if task_vec[0] > 1e-9 {
            wrap_angle(l.atan2(f))
        } else {
            0.0
        };
        let wps = trace_waypoints(field, robot.position(), NUM_WAYPOINTS, WAYPOINT_SPACING)
            .unwrap_or_else(|_| vec![goal; NUM_WAYPOINTS]);
        for (i, wp) in wps.iter().enumerate() {
            let (wf, wl) = world_to_ego(robot, *wp);
            task_vec[2 + 2 * i] = wf;
            task_vec[3 + 2 * i] = wl;
            if let Some((row, col)) = world_to_cell(robot, *wp) {
                map.set(Channel::Task, row, col, 1.0);
            }
        }
        mark_disc(&mut map, Channel::Task, robot, goal, 2.0 * GRID_RES);
    } else if let Some(goal) = ee_goal {
        mark_disc(&mut map, Channel::Task, robot, goal, 2.0 * GRID_RES);
    }

    Observation { map, task_vec }
}
