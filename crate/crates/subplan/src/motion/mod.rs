//! Motion generation: base planners on the egocentric map, the arm
//! reach-and-push planner, subgoal coordinate mapping, and the trajectory
//! executor that turns plans into low-level actions.

mod prm;
mod rrt;

use crate::geom::{wrap_angle, Pose2D, Segment, Vec2};
use crate::sense::{cell_to_world, world_to_cell, Channel, GridMap, GRID_RES, GRID_SIZE};
use crate::world::{
    LowLevelAction, SceneState, ACTION_DT, EE_MIN_REACH, EE_MAX_REACH, ROBOT_RADIUS, V_MAX, W_MAX,
};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const BASE_R_MAX: f64 = 2.5 * std::f64::consts::SQRT_2; // m, polar subgoal radius bound
pub const BASE_SPAN: f64 = 2.5; // m, half-side of the square the base target is clamped into
pub const PUSH_DIST_MAX: f64 = 0.25; // m
pub const PLAN_RESOLUTION: f64 = 0.05; // m, collision-check spacing
pub const SHORTCUT_ATTEMPTS: usize = 50;
/// Robot radius plus one map-cell diagonal: a path point in a free inflated
/// cell keeps the disc clear of anything the raster captured.
pub const INFLATE_RADIUS: f64 = ROBOT_RADIUS + 0.12;
/// Cells this close to the robot are forced free: the disc there is known
/// collision-free from the current pose.
pub const START_CLEAR_RADIUS: f64 = 0.15;
pub const EXEC_MAX_STEPS: usize = 300; // low-level actions per subgoal
pub const REACH_TOL: f64 = 0.05; // m, arm reach success tolerance
pub const REACH_EE_STEP: f64 = 0.05; // m per action step, approach phase
pub const PUSH_EE_STEP: f64 = 0.0125; // m per action step, push phase (slow deliberate contact)

const POS_TOL: f64 = 0.01; // m, waypoint capture radius
const ANG_TOL: f64 = 0.02; // rad, final heading tolerance
const ANG_ALIGN: f64 = 0.1; // rad, rotate-then-translate switch point

/// A subgoal action: either a base relocation in polar coordinates or an
/// arm push addressed by a map cell.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Subgoal {
    Base { r: f64, phi: f64, dtheta: f64 },
    /// `push_dir` is an ego-frame angle (0 = straight ahead, positive left).
    Arm { row: usize, col: usize, push_dir: f64, push_dist: f64 },
}

impl Subgoal {
    pub fn is_base(&self) -> bool {
        matches!(self, Subgoal::Base { .. })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum WorldTarget {
    Base(Pose2D),
    Arm { point: Vec2, dir: Vec2, dist: f64 },
}

/// Map a subgoal into world coordinates relative to the robot pose. Base
/// targets are clamped into the +-2.5 m ego square.
pub fn subgoal_to_world(subgoal: &Subgoal, robot: &Pose2D) -> WorldTarget {
    match *subgoal {
        Subgoal::Base { r, phi, dtheta } => {
            let f = (r * phi.cos()).clamp(-BASE_SPAN, BASE_SPAN);
            let l = (r * phi.sin()).clamp(-BASE_SPAN, BASE_SPAN);
            let h = robot.heading();
            let p = robot.position() + h * f + h.perp() * l;
            WorldTarget::Base(Pose2D::new(p.x, p.y, robot.theta + dtheta))
        }
        Subgoal::Arm { row, col, push_dir, push_dist } => {
            let point = cell_to_world(robot, row, col);
            let ang = robot.theta + push_dir;
            WorldTarget::Arm {
                point,
                dir: Vec2::new(ang.cos(), ang.sin()),
                dist: push_dist.clamp(0.0, PUSH_DIST_MAX),
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlannerKind {
    RrtConnect,
    LazyPrm,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlannerConfig {
    pub kind: PlannerKind,
    pub rrt_iterations: usize,
    pub rrt_restarts: usize,
    pub prm_schedule: Vec<usize>,
    pub resolution: f64,
    pub seed: u64,
}

impl PlannerConfig {
    pub fn rrt(seed: u64) -> Self {
        PlannerConfig {
            kind: PlannerKind::RrtConnect,
            rrt_iterations: 20,
            rrt_restarts: 2,
            prm_schedule: vec![500, 2000, 5000],
            resolution: PLAN_RESOLUTION,
            seed,
        }
    }

    pub fn prm(seed: u64) -> Self {
        PlannerConfig {
            kind: PlannerKind::LazyPrm,
            ..PlannerConfig::rrt(seed)
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        PlannerConfig { seed, ..self.clone() }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PlannerStats {
    pub iterations: usize,
    pub nodes: usize,
    pub collision_checks: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub enum MotionPlan {
    /// Densified base path: consecutive waypoints <= 0.05 m apart, headings
    /// along the direction of travel, final waypoint carries the subgoal
    /// heading.
    BasePath { waypoints: Vec<Pose2D>, stats: PlannerStats },
    ArmReachPush {
        reach_from: Vec2,
        reach_to: Vec2,
        push: Option<Segment>,
        stats: PlannerStats,
    },
    Failure { stats: PlannerStats },
}

impl MotionPlan {
    pub fn is_failure(&self) -> bool {
        matches!(self, MotionPlan::Failure { .. })
    }

    pub fn stats(&self) -> &PlannerStats {
        match self {
            MotionPlan::BasePath { stats, .. } => stats,
            MotionPlan::ArmReachPush { stats, .. } => stats,
            MotionPlan::Failure { stats } => stats,
        }
    }
}

/// Occupancy grid the base planners search on: the egocentric map cells in
/// a world-anchored frame. `from_occupancy` applies robot-radius inflation.
#[derive(Clone, Debug)]
pub struct PlanGrid {
    pub anchor: Pose2D,
    pub occupied: Vec<bool>,
}

impl PlanGrid {
    pub fn from_cells(anchor: Pose2D, occupied: Vec<bool>) -> Self {
        assert_eq!(occupied.len(), GRID_SIZE * GRID_SIZE);
        PlanGrid { anchor, occupied }
    }

    /// Inflate the occupancy channel by the robot radius so point planning
    /// is sound for the disc, then force the robot's immediate cells free.
    pub fn from_occupancy(map: &GridMap, robot: &Pose2D) -> Self {
        let src = map.channel(Channel::Occupancy);
        let rad = (INFLATE_RADIUS / GRID_RES).ceil() as i64;
        let mut offsets = Vec::new();
        for dr in -rad..=rad {
            for dc in -rad..=rad {
                let d = ((dr * dr + dc * dc) as f64).sqrt() * GRID_RES;
                if d <= INFLATE_RADIUS {
                    offsets.push((dr, dc));
                }
            }
        }
        let mut occupied = vec![false; GRID_SIZE * GRID_SIZE];
        for r in 0..GRID_SIZE as i64 {
            for c in 0..GRID_SIZE as i64 {
                if src[(r as usize) * GRID_SIZE + c as usize] != 1.0 {
                    continue;
                }
                for (dr, dc) in &offsets {
                    let (nr, nc) = (r + dr, c + dc);
                    if nr >= 0 && nc >= 0 && nr < GRID_SIZE as i64 && nc < GRID_SIZE as i64 {
                        occupied[(nr as usize) * GRID_SIZE + nc as usize] = true;
                    }
                }
            }
        }
        let clear = (START_CLEAR_RADIUS / GRID_RES).ceil() as i64;
        let center = GRID_SIZE as i64 / 2;
        for dr in -clear..=clear {
            for dc in -clear..=clear {
                if ((dr * dr + dc * dc) as f64).sqrt() * GRID_RES <= START_CLEAR_RADIUS {
                    let (r, c) = (center + dr, center + dc);
                    if r >= 0 && c >= 0 && r < GRID_SIZE as i64 && c < GRID_SIZE as i64 {
                        occupied[(r as usize) * GRID_SIZE + c as usize] = false;
                    }
                }
            }
        }
        PlanGrid { anchor: *robot, occupied }
    }

    pub fn is_free(&self, p: Vec2) -> bool {
        match world_to_cell(&self.anchor, p) {
            Some((r, c)) => !self.occupied[r * GRID_SIZE + c],
            None => false, // outside the local map
        }
    }

    /// Uniform sample over the map span.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> Vec2 {
        let half = GRID_RES * GRID_SIZE as f64 / 2.0;
        let f = rng.gen_range(-half..half);
        let l = rng.gen_range(-half..half);
        let h = self.anchor.heading();
        self.anchor.position() + h * f + h.perp() * l
    }

    /// Every point at `res` spacing along [a, b] (endpoints included) free.
    pub fn segment_free(&self, a: Vec2, b: Vec2, res: f64) -> bool {
        let n = (a.dist(b) / res).ceil().max(1.0) as usize;
        (0..=n).all(|k| self.is_free(a + (b - a) * (k as f64 / n as f64)))
    }
}

/// Base planning: RRT-Connect or Lazy PRM on the inflated grid, followed by
/// shortcut smoothing and densification to the check resolution. Occupied
/// start or goal cells yield Failure (the motion generator's no-op).
pub fn plan_base(grid: &PlanGrid, start: Pose2D, goal: Pose2D, cfg: &PlannerConfig) -> MotionPlan {
    let mut stats = PlannerStats::default();
    let s = start.position();
    let g = goal.position();
    if !grid.is_free(s) || !grid.is_free(g) {
        return MotionPlan::Failure { stats };
    }
    if s.dist(g) < 1e-9 {
        return MotionPlan::BasePath { waypoints: vec![goal], stats };
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let raw = if grid.segment_free(s, g, cfg.resolution) {
        Some(vec![s, g])
    } else {
        match cfg.kind {
            PlannerKind::RrtConnect => rrt::plan(
                grid,
                s,
                g,
                cfg.rrt_iterations,
                cfg.rrt_restarts,
                cfg.resolution,
                &mut rng,
                &mut stats,
            ),
            PlannerKind::LazyPrm => {
                prm::plan(grid, s, g, &cfg.prm_schedule, cfg.resolution, &mut rng, &mut stats)
            }
        }
    };
    match raw {
        Some(points) => {
            let smoothed = shortcut_smooth(grid, points, cfg.resolution, &mut rng);
            MotionPlan::BasePath {
                waypoints: densify(&smoothed, goal, cfg.resolution),
                stats,
            }
        }
        None => MotionPlan::Failure { stats },
    }
}

fn shortcut_smooth<R: Rng>(grid: &PlanGrid, mut pts: Vec<Vec2>, res: f64, rng: &mut R) -> Vec<Vec2> {
    for _ in 0..SHORTCUT_ATTEMPTS {
        if pts.len() < 3 {
            break;
        }
        let i = rng.gen_range(0..pts.len() - 2);
        let j = rng.gen_range(i + 2..pts.len());
        if grid.segment_free(pts[i], pts[j], res) {
            pts.drain(i + 1..j);
        }
    }
    pts
}

fn densify(pts: &[Vec2], goal: Pose2D, res: f64) -> Vec<Pose2D> {
    let mut out = Vec::new();
    for win in pts.windows(2) {
        let (a, b) = (win[0], win[1]);
        let len = a.dist(b);
        if len < 1e-12 {
            continue;
        }
        let heading = (b - a).angle();
        let n = (len / res).ceil() as usize;
        for k in 0..n {
            let p = a + (b - a) * (k as f64 / n as f64);
            out.push(Pose2D::new(p.x, p.y, heading));
        }
    }
    out.push(goal);
    out
}

/// Arm planning: annulus reachability, a straight-line approach checked
/// against walls when `collision_check` is on, then the (deliberately
/// unchecked) push segment.
pub fn plan_arm(
    state: &SceneState,
    target: Vec2,
    push_dir: Vec2,
    push_dist: f64,
    collision_check: bool,
) -> MotionPlan {
    let mut stats = PlannerStats::default();
    let d = target.dist(state.robot.position());
    if !(EE_MIN_REACH..=EE_MAX_REACH).contains(&d) {
        return MotionPlan::Failure { stats };
    }
    let approach = Segment::new(state.ee, target);
    if collision_check {
        for w in &state.walls {
            stats.collision_checks += 1;
            if approach.intersects(w) {
                return MotionPlan::Failure { stats };
            }
        }
    }
    let push = if push_dist > 1e-9 {
        Some(Segment::new(target, target + push_dir * push_dist))
    } else {
        None
    };
    MotionPlan::ArmReachPush {
        reach_from: state.ee,
        reach_to: target,
        push,
        stats,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum ArmPhase {
    Reach,
    Push,
    Retract,
    Done,
}

/// Waypoint-following controller: rotate-then-translate for base paths,
/// straight-line end-effector stepping (reach, push, retract) for arm
/// plans. Emits one action per call; `None` when the plan is finished.
pub struct Executor {
    plan: MotionPlan,
    wp_idx: usize,
    phase: ArmPhase,
    push_traveled: f64,
    phase_steps: usize,
    /// Expected EE position after the last commanded push step; a shortfall
    /// means the reach annulus blocked the push.
    push_expect: Option<Vec2>,
    pub steps: usize,
    pub aborted: bool,
}

impl Executor {
    pub fn new(plan: MotionPlan) -> Self {
        Executor {
            plan,
            wp_idx: 0,
            phase: ArmPhase::Reach,
            push_traveled: 0.0,
            phase_steps: 0,
            push_expect: None,
            steps: 0,
            aborted: false,
        }
    }

    pub fn next_action(&mut self, state: &SceneState) -> Option<LowLevelAction> {
        if self.aborted || self.steps >= EXEC_MAX_STEPS {
            if self.steps >= EXEC_MAX_STEPS && !matches!(self.plan, MotionPlan::Failure { .. }) {
                self.aborted = true;
            }
            return None;
        }
        let act = match &self.plan {
            MotionPlan::Failure { .. } => None,
            MotionPlan::BasePath { waypoints, .. } => {
                let mut idx = self.wp_idx;
                let a = base_action(state, waypoints, &mut idx);
                self.wp_idx = idx;
                a
            }
            MotionPlan::ArmReachPush { reach_to, push, .. } => {
                let (reach_to, push) = (*reach_to, *push);
                arm_action(state, reach_to, &push, self)
            }
        };
        if act.is_some() {
            self.steps += 1;
        }
        act
    }
}

fn base_action(state: &SceneState, wps: &[Pose2D], idx: &mut usize) -> Option<LowLevelAction> {
    let pos = state.robot.position();
    while *idx + 1 < wps.len() && pos.dist(wps[*idx].position()) <= POS_TOL {
        *idx += 1;
    }
    let target = wps[*idx];
    let d = pos.dist(target.position());
    if *idx + 1 == wps.len() && d <= POS_TOL {
        // Final waypoint: settle the subgoal heading.
        let err = wrap_angle(target.theta - state.robot.theta);
        if err.abs() <= ANG_TOL {
            return None;
        }
        return Some(LowLevelAction::new(0.0, (err / ACTION_DT).clamp(-W_MAX, W_MAX), 0.0, 0.0));
    }
    let bearing = (target.position() - pos).angle();
    let phi = wrap_angle(bearing - state.robot.theta);
    if phi.abs() > ANG_ALIGN {
        return Some(LowLevelAction::new(0.0, (phi / ACTION_DT).clamp(-W_MAX, W_MAX), 0.0, 0.0));
    }
    let v = (d / ACTION_DT).clamp(0.0, V_MAX);
    let w = (phi / ACTION_DT).clamp(-W_MAX, W_MAX);
    Some(LowLevelAction::new(v, w, 0.0, 0.0))
}

fn arm_action(
    state: &SceneState,
    reach_to: Vec2,
    push: &Option<Segment>,
    ex: &mut Executor,
) -> Option<LowLevelAction> {
    loop {
        match ex.phase {
            ArmPhase::Reach => {
                let d = state.ee.dist(reach_to);
                if d <= 1e-9 {
                    ex.phase = ArmPhase::Push;
                    ex.phase_steps = 0;
                    continue;
                }
                ex.phase_steps += 1;
                if ex.phase_steps > 60 {
                    // Annulus clamping kept the EE away from the target.
                    ex.aborted = true;
                    return None;
                }
                let step = (reach_to - state.ee).normalized() * d.min(REACH_EE_STEP);
                return Some(LowLevelAction::new(0.0, 0.0, step.x, step.y));
            }
            ArmPhase::Push => {
                let Some(seg) = push else {
                    ex.phase = ArmPhase::Retract;
                    ex.phase_steps = 0;
                    continue;
                };
                let blocked = ex
                    .push_expect
                    .is_some_and(|e| state.ee.dist(e) > PUSH_EE_STEP * 0.5);
                let total = seg.length();
                if blocked || ex.push_traveled >= total - 1e-9 {
                    ex.push_expect = None;
                    ex.phase = ArmPhase::Retract;
                    ex.phase_steps = 0;
                    continue;
                }
                let step = (total - ex.push_traveled).min(PUSH_EE_STEP);
                ex.push_traveled += step;
                let d = seg.direction() * step;
                ex.push_expect = Some(state.ee + d);
                return Some(LowLevelAction::new(0.0, 0.0, d.x, d.y));
            }
            ArmPhase::Retract => {
                let home = state.robot.transform(Vec2::new(EE_MIN_REACH, 0.0));
                let d = state.ee.dist(home);
                if d <= 1e-6 {
                    ex.phase = ArmPhase::Done;
                    return None;
                }
                ex.phase_steps += 1;
                if ex.phase_steps > 60 {
                    ex.phase = ArmPhase::Done;
                    return None;
                }
                let step = (home - state.ee).normalized() * d.min(REACH_EE_STEP);
                return Some(LowLevelAction::new(0.0, 0.0, step.x, step.y));
            }
            ArmPhase::Done => return None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ExecOutcome {
    pub actions: Vec<LowLevelAction>,
    pub final_state: SceneState,
    pub collided: bool,
    pub aborted: bool,
}

/// Run a plan to completion in a bare world (no task rewards): the
/// reference executor used by tests. Stops on body collision.
pub fn execute(plan: &MotionPlan, state: &SceneState) -> ExecOutcome {
    let mut ex = Executor::new(plan.clone());
    let mut s = state.clone();
    let mut actions = Vec::new();
    let mut collided = false;
    while let Some(a) = ex.next_action(&s) {
        let (next, ev) = crate::world::step(&s, &a);
        actions.push(a);
        s = next;
        if ev.body_collision {
            collided = true;
            ex.aborted = true;
            break;
        }
    }
    ExecOutcome {
        actions,
        final_state: s,
        collided,
        aborted: ex.aborted,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sense::GRID_CENTER;

    fn empty_grid() -> PlanGrid {
        PlanGrid::from_cells(
            Pose2D::new(0.0, 0.0, 0.0),
            vec![false; GRID_SIZE * GRID_SIZE],
        )
    }

    fn bare_state(robot: Pose2D) -> SceneState {
        SceneState {
            robot,
            ee: robot.transform(Vec2::new(EE_MIN_REACH, 0.0)),
            objects: Vec::new(),
            walls: Vec::new(),
            time: 0.0,
            ee_contact_s: 0.0,
        }
    }

    #[test]
    fn subgoal_rotation_only() {
        let robot = Pose2D::new(1.0, 1.0, 0.0);
        let sg = Subgoal::Base { r: 0.0, phi: 0.0, dtheta: std::f64::consts::FRAC_PI_4 };
        let WorldTarget::Base(t) = subgoal_to_world(&sg, &robot) else { panic!() };
        assert!(t.position().dist(robot.position()) < 1e-12);
        assert!((t.theta - std::f64::consts::FRAC_PI_4).abs() < 1e-12);
    }

    #[test]
    fn subgoal_polar_to_cartesian() {
        let robot = Pose2D::new(0.0, 0.0, 0.0);
        let sg = Subgoal::Base { r: 1.0, phi: std::f64::consts::FRAC_PI_2, dtheta: 0.0 };
        let WorldTarget::Base(t) = subgoal_to_world(&sg, &robot) else { panic!() };
        assert!(t.position().dist(Vec2::new(0.0, 1.0)) < 1e-12);
    }

    #[test]
    fn subgoal_arm_center_cell_is_robot() {
        let robot = Pose2D::new(2.0, -1.0, 0.6);
        let sg = Subgoal::Arm { row: GRID_CENTER, col: GRID_CENTER, push_dir: 0.0, push_dist: 0.1 };
        let WorldTarget::Arm { point, .. } = subgoal_to_world(&sg, &robot) else { panic!() };
        assert!(point.dist(robot.position()) < 1e-12);
    }

    #[test]
    fn base_target_clamped_into_square() {
        let robot = Pose2D::new(0.0, 0.0, 0.0);
        let sg = Subgoal::Base { r: BASE_R_MAX, phi: 0.0, dtheta: 0.0 };
        let WorldTarget::Base(t) = subgoal_to_world(&sg, &robot) else { panic!() };
        assert!(t.x <= BASE_SPAN + 1e-12);
    }

    #[test]
    fn plan_start_equals_goal() {
        let grid = empty_grid();
        let p = Pose2D::new(0.0, 0.0, 1.0);
        let plan = plan_base(&grid, p, p, &PlannerConfig::rrt(1));
        let MotionPlan::BasePath { waypoints, .. } = plan else { panic!() };
        assert_eq!(waypoints.len(), 1);
    }

    #[test]
    fn straight_shot_near_euclidean_both_planners() {
        let grid = empty_grid();
        let start = Pose2D::new(-1.0, 0.0, 0.0);
        let goal = Pose2D::new(1.0, 0.0, 0.0);
        for cfg in [PlannerConfig::rrt(7), PlannerConfig::prm(7)] {
            let plan = plan_base(&grid, start, goal, &cfg);
            let MotionPlan::BasePath { waypoints, .. } = plan else { panic!() };
            let len: f64 = waypoints
                .windows(2)
                .map(|w| w[0].position().dist(w[1].position()))
                .sum();
            assert!(len <= 1.1 * 2.0, "path length {len}");
            for w in waypoints.windows(2) {
                assert!(w[0].position().dist(w[1].position()) <= PLAN_RESOLUTION + 1e-9);
            }
        }
    }

    #[test]
    fn sealed_goal_fails_cleanly() {
        let mut occ = vec![false; GRID_SIZE * GRID_SIZE];
        // Box of occupied cells around the goal area (rows/cols 40..48).
        for r in 38..50 {
            for c in 38..50 {
                let edge = r == 38 || r == 49 || c == 38 || c == 49;
                if edge {
                    occ[r * GRID_SIZE + c] = true;
                }
            }
        }
        let grid = PlanGrid::from_cells(Pose2D::new(0.0, 0.0, 0.0), occ);
        let start = Pose2D::new(0.0, 0.0, 0.0);
        let goal_cell = cell_to_world(&grid.anchor, 44, 44);
        let goal = Pose2D::new(goal_cell.x, goal_cell.y, 0.0);
        for cfg in [PlannerConfig::rrt(3), PlannerConfig::prm(3)] {
            assert!(plan_base(&grid, start, goal, &cfg).is_failure());
        }
    }

    #[test]
    fn seeded_plans_are_identical() {
        let mut occ = vec![false; GRID_SIZE * GRID_SIZE];
        for r in 20..44 {
            occ[r * GRID_SIZE + 30] = true;
        }
        let grid = PlanGrid::from_cells(Pose2D::new(0.0, 0.0, 0.0), occ);
        let start = Pose2D::new(-1.5, 0.3, 0.0);
        let goal = Pose2D::new(1.5, -0.4, 0.5);
        for cfg in [PlannerConfig::rrt(11), PlannerConfig::prm(11)] {
            let a = plan_base(&grid, start, goal, &cfg);
            let b = plan_base(&grid, start, goal, &cfg);
            assert_eq!(a, b);
        }
    }

    #[test]
    fn executor_reaches_goal_pose() {
        let grid = empty_grid();
        let start = Pose2D::new(-1.0, -0.8, 2.0);
        let goal = Pose2D::new(1.2, 0.7, -1.0);
        let plan = plan_base(&grid, start, goal, &PlannerConfig::rrt(5));
        let out = execute(&plan, &bare_state(start));
        assert!(!out.collided && !out.aborted);
        assert!(out.final_state.robot.position().dist(goal.position()) <= 0.1);
        assert!(wrap_angle(out.final_state.robot.theta - goal.theta).abs() <= 0.1);
        assert!(out.actions.len() <= EXEC_MAX_STEPS);
    }

    #[test]
    fn one_meter_straight_path_takes_about_20_steps() {
        let grid = empty_grid();
        let start = Pose2D::new(0.0, 0.0, 0.0);
        let goal = Pose2D::new(1.0, 0.0, 0.0);
        let plan = plan_base(&grid, start, goal, &PlannerConfig::rrt(5));
        let out = execute(&plan, &bare_state(start));
        assert!(!out.aborted);
        // 0.05 m per action at full speed, already aligned.
        assert!((18..=23).contains(&out.actions.len()), "took {}", out.actions.len());
    }

    #[test]
    fn failure_plan_is_noop() {
        let plan = MotionPlan::Failure { stats: PlannerStats::default() };
        let out = execute(&plan, &bare_state(Pose2D::new(0.0, 0.0, 0.0)));
        assert!(out.actions.is_empty());
    }

    #[test]
    fn arm_out_of_reach_fails() {
        let s = bare_state(Pose2D::new(0.0, 0.0, 0.0));
        let plan = plan_arm(&s, Vec2::new(1.2, 0.0), Vec2::new(1.0, 0.0), 0.1, true);
        assert!(plan.is_failure());
        let plan2 = plan_arm(&s, Vec2::new(0.1, 0.0), Vec2::new(1.0, 0.0), 0.1, true);
        assert!(plan2.is_failure());
    }

    #[test]
    fn arm_collision_check_gates_wall_crossing() {
        let mut s = bare_state(Pose2D::new(0.0, 0.0, 0.0));
        // Wall between the EE rest position and the target, but clear of
        // the 0.3 m base disc.
        s.walls.push(Segment::new(Vec2::new(0.5, -2.0), Vec2::new(0.5, 2.0)));
        let target = Vec2::new(0.8, 0.0);
        let dir = Vec2::new(1.0, 0.0);
        let checked = plan_arm(&s, target, dir, 0.1, true);
        assert!(checked.is_failure());
        assert!(checked.stats().collision_checks > 0);
        let unchecked = plan_arm(&s, target, dir, 0.1, false);
        assert!(!unchecked.is_failure());
        assert_eq!(unchecked.stats().collision_checks, 0);
    }

    #[test]
    fn arm_execution_reaches_then_pushes_then_retracts() {
        let robot = Pose2D::new(0.0, 0.0, 0.0);
        let s = bare_state(robot);
        let target = Vec2::new(0.6, 0.2);
        let plan = plan_arm(&s, target, Vec2::new(1.0, 0.0), 0.2, true);
        let out = execute(&plan, &s);
        assert!(!out.aborted);
        // Push phase moved 0.2 m at 0.0125 m per step = 16 steps, plus the
        // reach and retract legs.
        assert!(out.actions.len() > 16);
        // Retracted home afterwards.
        let home = robot.transform(Vec2::new(EE_MIN_REACH, 0.0));
        assert!(out.final_state.ee.dist(home) < 1e-3);
    }
}
