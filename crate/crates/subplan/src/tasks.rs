//! Benchmark tasks: episode randomization, reward functions, success
//! predicates, and evaluation metrics (SR, SPL, completion counts).

use crate::geom::{Pose2D, Vec2};
use crate::sense::{compute_geodesic_field, GeodesicField, SenseError};
use crate::world::{
    load_fixture, JointValue, MassClass, ObjectKind, Rect, SceneError, SceneState, StepEvents,
    ACTION_DT, EE_MAX_REACH, EE_MIN_REACH, ROBOT_RADIUS,
};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use thiserror::Error;

pub const D_TH: f64 = 0.5; // m, navigation success radius
pub const D_GTH: f64 = 0.1; // m, gripper reach success radius
const MAX_REJECTIONS: usize = 100;
const SPAWN_MARGIN: f64 = 0.05; // extra clearance required at spawn
/// Free bands narrower than this cannot be traversed (inflated robot).
const BLOCK_BAND: f64 = 0.75;
/// Band that must open up once a light obstacle is cleared away.
const CLEAR_BAND: f64 = 0.9;

#[derive(Debug, Error)]
pub enum TaskError {
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error(transparent)]
    Sense(#[from] SenseError),
    #[error("no valid placement after {MAX_REJECTIONS} samples: {0}")]
    Placement(String),
    #[error("fixture has no [task] table")]
    MissingTask,
    #[error("unknown task kind `{0}`")]
    UnknownKind(String),
    #[error("unknown reward weight `{0}`")]
    UnknownWeight(String),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TaskKind {
    PointNav,
    TabletopReachM,
    PushDoorNav,
    ButtonDoorNav,
    InteractiveObstaclesNav,
    ArrangeKitchenMM,
    ArrangeChairMM,
}

impl TaskKind {
    pub fn parse(s: &str) -> Result<Self, TaskError> {
        Ok(match s {
            "point_nav" => TaskKind::PointNav,
            "tabletop_reach_m" => TaskKind::TabletopReachM,
            "push_door_nav" => TaskKind::PushDoorNav,
            "button_door_nav" => TaskKind::ButtonDoorNav,
            "interactive_obstacles_nav" => TaskKind::InteractiveObstaclesNav,
            "arrange_kitchen_mm" => TaskKind::ArrangeKitchenMM,
            "arrange_chair_mm" => TaskKind::ArrangeChairMM,
            other => return Err(TaskError::UnknownKind(other.into())),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            TaskKind::PointNav => "point_nav",
            TaskKind::TabletopReachM => "tabletop_reach_m",
            TaskKind::PushDoorNav => "push_door_nav",
            TaskKind::ButtonDoorNav => "button_door_nav",
            TaskKind::InteractiveObstaclesNav => "interactive_obstacles_nav",
            TaskKind::ArrangeKitchenMM => "arrange_kitchen_mm",
            TaskKind::ArrangeChairMM => "arrange_chair_mm",
        }
    }

    /// Navigation family: has a base goal, SR/SPL metrics.
    pub fn is_nav(&self) -> bool {
        matches!(
            self,
            TaskKind::PointNav
                | TaskKind::PushDoorNav
                | TaskKind::ButtonDoorNav
                | TaskKind::InteractiveObstaclesNav
        )
    }

    /// Mobile-manipulation family: no binary success, completion counts.
    pub fn is_mm(&self) -> bool {
        matches!(self, TaskKind::ArrangeKitchenMM | TaskKind::ArrangeChairMM)
    }

    /// Stationary manipulation runs with the base locked.
    pub fn base_motion_enabled(&self) -> bool {
        !matches!(self, TaskKind::TabletopReachM)
    }
}

/// Reward term magnitudes. The source material names the terms but not
/// their scales; these defaults are project constants, overridable per
/// fixture.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RewardWeights {
    pub nav: f64,
    pub reach: f64,
    pub succ: f64,
    pub door: f64,     // per rad opened
    pub button: f64,   // per first press
    pub obstacle: f64, // per m of light-obstacle displacement
    pub drawer: f64,   // per m closed
    pub cabinet: f64,  // per rad closed
    pub chair: f64,    // per m of progress toward the tucked pose
}

impl Default for RewardWeights {
    fn default() -> Self {
        RewardWeights {
            nav: 1.0,
            reach: 1.0,
            succ: 10.0,
            door: 5.0,
            button: 5.0,
            obstacle: 2.0,
            drawer: 5.0,
            cabinet: 2.0,
            chair: 5.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TaskSpec {
    pub kind: TaskKind,
    pub fixture_name: String,
    pub template: SceneState,
    pub regions: BTreeMap<String, Rect>,
    pub spawn_region: String,
    pub goal_region: Option<String>,
    pub d_th: f64,
    pub d_gth: f64,
    pub weights: RewardWeights,
}

impl TaskSpec {
    pub fn parse(text: &str) -> Result<TaskSpec, TaskError> {
        let fixture = load_fixture(text)?;
        let doc = fixture.task.ok_or(TaskError::MissingTask)?;
        let kind = TaskKind::parse(&doc.kind)?;
        let mut weights = RewardWeights::default();
        for (k, v) in &doc.weights {
            match k.as_str() {
                "nav" => weights.nav = *v,
                "reach" => weights.reach = *v,
                "succ" => weights.succ = *v,
                "door" => weights.door = *v,
                "button" => weights.button = *v,
                "obstacle" => weights.obstacle = *v,
                "drawer" => weights.drawer = *v,
                "cabinet" => weights.cabinet = *v,
                "chair" => weights.chair = *v,
                other => return Err(TaskError::UnknownWeight(other.into())),
            }
        }
        let spawn_region = doc.spawn_region.clone().unwrap_or_else(|| "spawn".into());
        if !fixture.regions.contains_key(&spawn_region) {
            return Err(TaskError::Invalid(format!("missing region `{spawn_region}`")));
        }
        let goal_region = if kind.is_nav() || kind == TaskKind::TabletopReachM {
            let name = doc.goal_region.clone().unwrap_or_else(|| "goal".into());
            if !fixture.regions.contains_key(&name) {
                return Err(TaskError::Invalid(format!("missing region `{name}`")));
            }
            Some(name)
        } else {
            None
        };
        Ok(TaskSpec {
            kind,
            fixture_name: fixture.name,
            template: fixture.scene,
            regions: fixture.regions,
            spawn_region,
            goal_region,
            d_th: doc.d_th.unwrap_or(D_TH),
            d_gth: doc.d_gth.unwrap_or(D_GTH),
            weights,
        })
    }

    pub fn builtin(kind: TaskKind) -> TaskSpec {
        TaskSpec::parse(fixtures::by_kind(kind)).expect("builtin fixture")
    }
}

/// Built-in task fixtures, embedded so the binary is self-contained.
pub mod fixtures {
    use super::TaskKind;

    pub const POINT_NAV: &str = include_str!("../fixtures/point_nav.toml");
    pub const TABLETOP_REACH: &str = include_str!("../fixtures/tabletop_reach.toml");
    pub const PUSH_DOOR_NAV: &str = include_str!("../fixtures/push_door_nav.toml");
    pub const BUTTON_DOOR_NAV: &str = include_str!("../fixtures/button_door_nav.toml");
    pub const OBSTACLES_NAV: &str = include_str!("../fixtures/obstacles_nav.toml");
    pub const ARRANGE_KITCHEN: &str = include_str!("../fixtures/arrange_kitchen.toml");
    pub const ARRANGE_CHAIR: &str = include_str!("../fixtures/arrange_chair.toml");

    pub fn by_kind(kind: TaskKind) -> &'static str {
        match kind {
            TaskKind::PointNav => POINT_NAV,
            TaskKind::TabletopReachM => TABLETOP_REACH,
            TaskKind::PushDoorNav => PUSH_DOOR_NAV,
            TaskKind::ButtonDoorNav => BUTTON_DOOR_NAV,
            TaskKind::InteractiveObstaclesNav => OBSTACLES_NAV,
            TaskKind::ArrangeKitchenMM => ARRANGE_KITCHEN,
            TaskKind::ArrangeChairMM => ARRANGE_CHAIR,
        }
    }

    pub fn all() -> [(TaskKind, &'static str); 7] {
        [
            (TaskKind::PointNav, POINT_NAV),
            (TaskKind::TabletopReachM, TABLETOP_REACH),
            (TaskKind::PushDoorNav, PUSH_DOOR_NAV),
            (TaskKind::ButtonDoorNav, BUTTON_DOOR_NAV),
            (TaskKind::InteractiveObstaclesNav, OBSTACLES_NAV),
            (TaskKind::ArrangeKitchenMM, ARRANGE_KITCHEN),
            (TaskKind::ArrangeChairMM, ARRANGE_CHAIR),
        ]
    }
}

/// One randomized episode: concrete scene, goals, and the geodesic field
/// computed once at reset.
#[derive(Clone, Debug, PartialEq)]
pub struct Episode {
    pub state: SceneState,
    pub nav_goal: Option<Vec2>,
    pub ee_goal: Option<Vec2>,
    pub field: Option<GeodesicField>,
    /// Geodesic start-to-goal distance at reset (0 for non-nav tasks).
    pub shortest_path: f64,
}

fn pose_clear(scene: &SceneState, p: Vec2, margin: f64) -> bool {
    let r = ROBOT_RADIUS + margin;
    scene.walls.iter().all(|w| w.distance_to_point(p) > r)
        && scene
            .objects
            .iter()
            .all(|o| o.world_footprint().distance_to_point(p) > r)
}

fn footprint_clear(scene: &SceneState, skip_id: &str, fp: &crate::geom::Polygon) -> bool {
    scene.walls.iter().all(|w| !fp.intersects_segment(w))
        && scene
            .objects
            .iter()
            .filter(|o| o.id != skip_id)
            .all(|o| !fp.intersects_polygon(&o.world_footprint()))
}

/// Seeded episode randomization: object state first, then the robot pose,
/// then goals and the geodesic field.
pub fn reset(spec: &TaskSpec, seed: u64) -> Result<Episode, TaskError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut scene = spec.template.clone();
    randomize_objects(spec, &mut scene, &mut rng)?;

    let spawn = spec.regions[&spec.spawn_region];
    let mut tries = 0;
    let robot = loop {
        tries += 1;
        if tries > MAX_REJECTIONS {
            return Err(TaskError::Placement("robot spawn".into()));
        }
        let p = spawn.sample(&mut rng);
        if pose_clear(&scene, p, SPAWN_MARGIN) {
            let theta = rng.gen_range(-std::f64::consts::PI..=std::f64::consts::PI);
            break Pose2D::new(p.x, p.y, theta);
        }
    };
    scene.robot = robot;
    scene.ee = robot.transform(Vec2::new(EE_MIN_REACH, 0.0));
    scene.time = 0.0;
    scene.ee_contact_s = 0.0;

    let mut ep = Episode {
        state: scene,
        nav_goal: None,
        ee_goal: None,
        field: None,
        shortest_path: 0.0,
    };

    if spec.kind.is_nav() {
        let region = spec.regions[spec.goal_region.as_ref().unwrap()];
        let mut tries = 0;
        loop {
            tries += 1;
            if tries > MAX_REJECTIONS {
                return Err(TaskError::Placement("navigation goal".into()));
            }
            let goal = region.sample(&mut rng);
            let Ok(field) = compute_geodesic_field(&ep.state.walls, goal) else {
                continue;
            };
            let d = field.at(ep.state.robot.position());
            if !d.is_finite() {
                continue;
            }
            if spec.kind == TaskKind::PointNav && !(1.0..=10.0).contains(&d) {
                continue;
            }
            ep.shortest_path = d;
            ep.nav_goal = Some(goal);
            ep.field = Some(field);
            break;
        }
    } else if spec.kind == TaskKind::TabletopReachM {
        let region = spec.regions[spec.goal_region.as_ref().unwrap()];
        let base = ep.state.robot.position();
        let mut tries = 0;
        loop {
            tries += 1;
            if tries > MAX_REJECTIONS {
                return Err(TaskError::Placement("reach goal".into()));
            }
            let goal = region.sample(&mut rng);
            let d = goal.dist(base);
            if d >= EE_MIN_REACH + 0.05 && d <= EE_MAX_REACH - 0.05 {
                ep.ee_goal = Some(goal);
                break;
            }
        }
    }
    Ok(ep)
}

fn randomize_objects(
    spec: &TaskSpec,
    scene: &mut SceneState,
    rng: &mut ChaCha8Rng,
) -> Result<(), TaskError> {
    match spec.kind {
        TaskKind::PointNav | TaskKind::TabletopReachM | TaskKind::PushDoorNav => Ok(()),
        TaskKind::ButtonDoorNav => {
            if let Some(zone) = spec.regions.get("button_zone").copied() {
                for o in &mut scene.objects {
                    if o.kind == ObjectKind::Button {
                        let p = zone.sample(rng);
                        o.anchor = Pose2D::new(p.x, p.y, o.anchor.theta);
                    }
                }
            }
            Ok(())
        }
        TaskKind::InteractiveObstaclesNav => randomize_obstacles(spec, scene, rng),
        TaskKind::ArrangeKitchenMM => {
            for o in &mut scene.objects {
                if matches!(o.kind, ObjectKind::PrismaticDrawer | ObjectKind::RevoluteDoor) {
                    let [lo, hi] = o.q_limits;
                    let frac = rng.gen_range(0.2..=1.0);
                    o.q = JointValue::Scalar(lo + frac * (hi - lo));
                }
            }
            Ok(())
        }
        TaskKind::ArrangeChairMM => {
            let ids: Vec<String> = scene
                .objects
                .iter()
                .filter(|o| o.kind == ObjectKind::Chair)
                .map(|o| o.id.clone())
                .collect();
            let mut tries = 0;
            for id in ids {
                loop {
                    tries += 1;
                    if tries > MAX_REJECTIONS {
                        return Err(TaskError::Placement(format!("chair `{id}`")));
                    }
                    let i = scene.objects.iter().position(|o| o.id == id).unwrap();
                    let anchor = scene.objects[i].anchor;
                    let ang = rng.gen_range(-std::f64::consts::PI..=std::f64::consts::PI);
                    let r = rng.gen_range(0.5..=1.2);
                    let p = anchor.position() + Vec2::new(ang.cos(), ang.sin()) * r;
                    let pose = Pose2D::new(p.x, p.y, anchor.theta);
                    let fp = scene.objects[i].footprint.transformed(&pose);
                    if footprint_clear(scene, &id, &fp) {
                        scene.objects[i].q = JointValue::Free(pose);
                        break;
                    }
                }
            }
            Ok(())
        }
    }
}

/// Obstacle randomization: one light, one immovable, both inside the zone,
/// initially blocking every traversable band, clearable once the light one
/// is pushed away.
fn randomize_obstacles(
    spec: &TaskSpec,
    scene: &mut SceneState,
    rng: &mut ChaCha8Rng,
) -> Result<(), TaskError> {
    let zone = spec
        .regions
        .get("obstacle_zone")
        .copied()
        .ok_or_else(|| TaskError::Invalid("missing region `obstacle_zone`".into()))?;
    let idxs: Vec<usize> = scene
        .objects
        .iter()
        .enumerate()
        .filter(|(_, o)| o.kind == ObjectKind::FreeBox)
        .map(|(i, _)| i)
        .collect();
    if idxs.len() != 2 {
        return Err(TaskError::Invalid("expected exactly two free boxes".into()));
    }
    let light_first = rng.gen_bool(0.5);
    let mut tries = 0;
    loop {
        tries += 1;
        if tries > MAX_REJECTIONS {
            return Err(TaskError::Placement("obstacles".into()));
        }
        let mut poses = Vec::new();
        for _ in 0..2 {
            let p = zone.sample(rng);
            poses.push(Pose2D::new(p.x, p.y, 0.0));
        }
        for (k, &i) in idxs.iter().enumerate() {
            scene.objects[i].q = JointValue::Free(poses[k]);
            scene.objects[i].mass_class = if (k == 0) == light_first {
                MassClass::Light
            } else {
                MassClass::Immovable
            };
        }
        let fps: Vec<_> = idxs.iter().map(|&i| scene.objects[i].world_footprint()).collect();
        if fps[0].intersects_polygon(&fps[1]) {
            continue;
        }
        if !idxs.iter().all(|&i| {
            let fp = scene.objects[i].world_footprint();
            let id = scene.objects[i].id.clone();
            footprint_clear(scene, &id, &fp)
        }) {
            continue;
        }
        // Band analysis along the zone's long axis.
        let spans_all = obstacle_spans(scene, &idxs, &zone);
        let immovable_only: Vec<usize> = idxs
            .iter()
            .copied()
            .filter(|&i| scene.objects[i].mass_class == MassClass::Immovable)
            .collect();
        let spans_cleared = obstacle_spans(scene, &immovable_only, &zone);
        if max_free_band(&zone, &spans_all) < BLOCK_BAND
            && max_free_band(&zone, &spans_cleared) >= CLEAR_BAND
        {
            return Ok(());
        }
    }
}

/// Object extents projected onto the zone's long axis.
fn obstacle_spans(scene: &SceneState, idxs: &[usize], zone: &Rect) -> Vec<(f64, f64)> {
    let vertical = (zone.hi.y - zone.lo.y) >= (zone.hi.x - zone.lo.x);
    idxs.iter()
        .map(|&i| {
            let (lo, hi) = scene.objects[i].world_footprint().bounding_box();
            if vertical {
                (lo.y, hi.y)
            } else {
                (lo.x, hi.x)
            }
        })
        .collect()
}

fn max_free_band(zone: &Rect, spans: &[(f64, f64)]) -> f64 {
    let vertical = (zone.hi.y - zone.lo.y) >= (zone.hi.x - zone.lo.x);
    let (lo, hi) = if vertical {
        (zone.lo.y, zone.hi.y)
    } else {
        (zone.lo.x, zone.hi.x)
    };
    let mut spans: Vec<(f64, f64)> = spans.to_vec();
    spans.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut best: f64 = 0.0;
    let mut cur = lo;
    for (a, b) in spans {
        best = best.max(a - cur);
        cur = cur.max(b);
    }
    best.max(hi - cur)
}

/// Per-step reward: sum of the task's active terms evaluated on the
/// transition from `prev` to `next`.
pub fn reward(
    spec: &TaskSpec,
    ep: &Episode,
    prev: &SceneState,
    next: &SceneState,
    events: &StepEvents,
) -> f64 {
    let w = &spec.weights;
    let mut r = 0.0;
    match spec.kind {
        TaskKind::PointNav => {
            r += w.nav * nav_progress(ep, prev, next);
        }
        TaskKind::TabletopReachM => {
            let goal = ep.ee_goal.expect("reach goal");
            r += w.reach * (-next.ee.dist(goal)) * ACTION_DT;
        }
        TaskKind::PushDoorNav => {
            r += w.nav * nav_progress(ep, prev, next);
            r += w.door * door_delta(prev, next);
        }
        TaskKind::ButtonDoorNav => {
            r += w.nav * nav_progress(ep, prev, next);
            r += w.button * events.button_pressed.len() as f64;
        }
        TaskKind::InteractiveObstaclesNav => {
            r += w.nav * nav_progress(ep, prev, next);
            r += w.obstacle * light_box_travel(prev, next);
        }
        TaskKind::ArrangeKitchenMM => {
            for (p, n) in prev.objects.iter().zip(&next.objects) {
                match p.kind {
                    ObjectKind::PrismaticDrawer => {
                        r += w.drawer * (p.q.scalar() - n.q.scalar());
                    }
                    ObjectKind::RevoluteDoor => {
                        r += w.cabinet * (p.q.scalar() - n.q.scalar());
                    }
                    _ => {}
                }
            }
        }
        TaskKind::ArrangeChairMM => {
            for (p, n) in prev.objects.iter().zip(&next.objects) {
                if p.kind == ObjectKind::Chair {
                    let home = p.anchor.position();
                    r += w.chair
                        * (p.q.free_pose().position().dist(home)
                            - n.q.free_pose().position().dist(home));
                }
            }
        }
    }
    if is_success(spec, ep, next) && !is_success(spec, ep, prev) {
        r += w.succ;
    }
    r
}

fn nav_progress(ep: &Episode, prev: &SceneState, next: &SceneState) -> f64 {
    let field = ep.field.as_ref().expect("nav field");
    let a = field.at(prev.robot.position());
    let b = field.at(next.robot.position());
    if a.is_finite() && b.is_finite() {
        a - b
    } else {
        0.0
    }
}

/// Net opening of every light revolute door.
fn door_delta(prev: &SceneState, next: &SceneState) -> f64 {
    prev.objects
        .iter()
        .zip(&next.objects)
        .filter(|(p, _)| p.kind == ObjectKind::RevoluteDoor && p.mass_class == MassClass::Light)
        .map(|(p, n)| n.q.scalar() - p.q.scalar())
        .sum()
}

fn light_box_travel(prev: &SceneState, next: &SceneState) -> f64 {
    prev.objects
        .iter()
        .zip(&next.objects)
        .filter(|(p, _)| p.kind == ObjectKind::FreeBox && p.mass_class == MassClass::Light)
        .map(|(p, n)| {
            n.q.free_pose()
                .position()
                .dist(p.q.free_pose().position())
        })
        .sum()
}

pub fn is_success(spec: &TaskSpec, ep: &Episode, state: &SceneState) -> bool {
    match spec.kind {
        k if k.is_nav() => {
            let goal = ep.nav_goal.expect("nav goal");
            state.robot.position().dist(goal) <= spec.d_th
        }
        TaskKind::TabletopReachM => {
            let goal = ep.ee_goal.expect("reach goal");
            state.ee.dist(goal) <= spec.d_gth
        }
        _ => false, // MM tasks are count-based
    }
}

/// Completion counts for MM tasks at the tight (5 deg / 5 cm) and loose
/// (10 deg / 10 cm) thresholds.
pub fn completion_counts(
    spec: &TaskSpec,
    state: &SceneState,
) -> Result<BTreeMap<String, usize>, TaskError> {
    if !spec.kind.is_mm() {
        return Err(TaskError::Invalid(format!(
            "completion counts undefined for {}",
            spec.kind.name()
        )));
    }
    let deg = std::f64::consts::PI / 180.0;
    let mut tight = 0;
    let mut loose = 0;
    for o in &state.objects {
        match (spec.kind, o.kind) {
            (TaskKind::ArrangeKitchenMM, ObjectKind::PrismaticDrawer) => {
                let residual = o.q.scalar() - o.q_limits[0];
                if residual <= 0.05 {
                    tight += 1;
                }
                if residual <= 0.10 {
                    loose += 1;
                }
            }
            (TaskKind::ArrangeKitchenMM, ObjectKind::RevoluteDoor) => {
                let residual = o.q.scalar() - o.q_limits[0];
                if residual <= 5.0 * deg {
                    tight += 1;
                }
                if residual <= 10.0 * deg {
                    loose += 1;
                }
            }
            (TaskKind::ArrangeChairMM, ObjectKind::Chair) => {
                let d = o.q.free_pose().position().dist(o.anchor.position());
                if d <= 0.05 {
                    tight += 1;
                }
                if d <= 0.10 {
                    loose += 1;
                }
            }
            _ => {}
        }
    }
    let mut out = BTreeMap::new();
    out.insert("5".to_string(), tight);
    out.insert("10".to_string(), loose);
    Ok(out)
}

/// Per-episode rollout record.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EpisodeResult {
    pub success: bool,
    pub path_length: f64,
    pub shortest_path: f64,
    pub reward_sum: f64,
    pub completion: BTreeMap<String, usize>,
    /// [base, arm] subgoals emitted / executed by the motion generator.
    pub subgoals_attempted: [usize; 2],
    pub subgoals_succeeded: [usize; 2],
    pub steps: usize,
    /// End-effector contact streaks that crossed 1 s.
    pub interactions: usize,
}

impl EpisodeResult {
    pub fn subgoal_success_rate(&self) -> Option<f64> {
        let att = self.subgoals_attempted[0] + self.subgoals_attempted[1];
        if att == 0 {
            return None;
        }
        let suc = self.subgoals_succeeded[0] + self.subgoals_succeeded[1];
        Some(suc as f64 / att as f64)
    }
}

/// Success weighted by path length: mean of S * l / max(p, l).
pub fn spl(results: &[EpisodeResult]) -> Result<f64, TaskError> {
    if results.is_empty() {
        return Err(TaskError::Invalid("spl over empty result set".into()));
    }
    let mut acc = 0.0;
    for r in results {
        if r.shortest_path <= 0.0 {
            return Err(TaskError::Invalid("spl needs positive shortest_path".into()));
        }
        if r.success {
            acc += r.shortest_path / r.path_length.max(r.shortest_path);
        }
    }
    Ok(acc / results.len() as f64)
}

pub fn success_rate(results: &[EpisodeResult]) -> f64 {
    if results.is_empty() {
        return 0.0;
    }
    results.iter().filter(|r| r.success).count() as f64 / results.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_fixtures_load_and_reset() {
        for (kind, text) in fixtures::all() {
            let spec = TaskSpec::parse(text).unwrap_or_else(|e| panic!("{kind:?}: {e}"));
            assert_eq!(spec.kind, kind);
            for seed in 0..5 {
                let ep = reset(&spec, seed).unwrap_or_else(|e| panic!("{kind:?} seed {seed}: {e}"));
                assert!(!crate::world::check_body_collision(&ep.state), "{kind:?} spawn collides");
            }
        }
    }

    #[test]
    fn reset_is_deterministic() {
        for (_, text) in fixtures::all() {
            let spec = TaskSpec::parse(text).unwrap();
            assert_eq!(reset(&spec, 42).unwrap(), reset(&spec, 42).unwrap());
        }
    }

    #[test]
    fn point_nav_geodesic_in_range() {
        let spec = TaskSpec::builtin(TaskKind::PointNav);
        for seed in 0..20 {
            let ep = reset(&spec, seed).unwrap();
            assert!(
                (1.0..=10.0).contains(&ep.shortest_path),
                "seed {seed}: {}",
                ep.shortest_path
            );
        }
    }

    #[test]
    fn nav_reward_tracks_geodesic_drop() {
        let spec = TaskSpec::builtin(TaskKind::PointNav);
        let ep = reset(&spec, 3).unwrap();
        let field = ep.field.as_ref().unwrap();
        let prev = ep.state.clone();
        // Move 0.32 m (4 cells) along the geodesic descent direction.
        let wps = crate::sense::trace_waypoints(field, prev.robot.position(), 2, 0.32).unwrap();
        let mut next = prev.clone();
        next.robot = Pose2D::new(wps[0].x, wps[0].y, prev.robot.theta);
        let r = reward(&spec, &ep, &prev, &next, &StepEvents::default());
        let expect = field.at(prev.robot.position()) - field.at(next.robot.position());
        assert!((r - spec.weights.nav * expect).abs() < 1e-12);
        assert!(r > 0.2, "progress reward was {r}");
    }

    #[test]
    fn success_threshold_brackets() {
        let spec = TaskSpec::builtin(TaskKind::PointNav);
        let mut ep = reset(&spec, 1).unwrap();
        let goal = ep.nav_goal.unwrap();
        ep.state.robot = Pose2D::new(goal.x - 0.49, goal.y, 0.0);
        assert!(is_success(&spec, &ep, &ep.state));
        ep.state.robot = Pose2D::new(goal.x - 0.51, goal.y, 0.0);
        assert!(!is_success(&spec, &ep, &ep.state));
    }

    #[test]
    fn mm_tasks_have_no_binary_success() {
        let spec = TaskSpec::builtin(TaskKind::ArrangeChairMM);
        let ep = reset(&spec, 0).unwrap();
        assert!(!is_success(&spec, &ep, &ep.state));
    }

    #[test]
    fn success_step_adds_bonus() {
        let spec = TaskSpec::builtin(TaskKind::PointNav);
        let mut ep = reset(&spec, 5).unwrap();
        let goal = ep.nav_goal.unwrap();
        let prev = {
            let mut s = ep.state.clone();
            s.robot = Pose2D::new(goal.x - 2.0, goal.y, 0.0);
            s
        };
        let next = {
            let mut s = ep.state.clone();
            s.robot = Pose2D::new(goal.x - 0.4, goal.y, 0.0);
            s
        };
        ep.state = prev.clone();
        let r = reward(&spec, &ep, &prev, &next, &StepEvents::default());
        assert!(r > spec.weights.succ, "expected success bonus, got {r}");
    }

    #[test]
    fn completion_counts_bracket() {
        let spec = TaskSpec::builtin(TaskKind::ArrangeKitchenMM);
        let mut state = spec.template.clone();
        for o in &mut state.objects {
            if o.kind == ObjectKind::PrismaticDrawer {
                o.q = JointValue::Scalar(0.07); // within 10 cm only
            }
            if o.kind == ObjectKind::RevoluteDoor {
                o.q = JointValue::Scalar(8.0 * std::f64::consts::PI / 180.0); // within 10 deg only
            }
        }
        let counts = completion_counts(&spec, &state).unwrap();
        assert_eq!(counts["5"], 0);
        assert_eq!(counts["10"], state.objects.len());
        assert!(completion_counts(&TaskSpec::builtin(TaskKind::PointNav), &state).is_err());
    }

    #[test]
    fn spl_formula_cases() {
        let mk = |success, p, l| EpisodeResult {
            success,
            path_length: p,
            shortest_path: l,
            ..Default::default()
        };
        assert_eq!(spl(&[mk(true, 5.0, 5.0)]).unwrap(), 1.0);
        assert_eq!(spl(&[mk(true, 10.0, 5.0)]).unwrap(), 0.5);
        assert_eq!(spl(&[mk(false, 3.0, 5.0)]).unwrap(), 0.0);
        assert!(spl(&[]).is_err());
        // Shorter-than-shortest travel (possible with a lucky spawn) caps
        // the ratio at 1.
        assert_eq!(spl(&[mk(true, 2.0, 5.0)]).unwrap(), 1.0);
    }

    #[test]
    fn obstacles_nav_blocks_and_randomizes_mass() {
        let spec = TaskSpec::builtin(TaskKind::InteractiveObstaclesNav);
        let mut saw_first_light = false;
        let mut saw_first_immovable = false;
        for seed in 0..12 {
            let ep = reset(&spec, seed).unwrap();
            let boxes: Vec<_> = ep
                .state
                .objects
                .iter()
                .filter(|o| o.kind == ObjectKind::FreeBox)
                .collect();
            assert_eq!(boxes.len(), 2);
            let light = boxes.iter().filter(|o| o.mass_class == MassClass::Light).count();
            assert_eq!(light, 1, "exactly one light obstacle");
            if boxes[0].mass_class == MassClass::Light {
                saw_first_light = true;
            } else {
                saw_first_immovable = true;
            }
        }
        assert!(saw_first_light && saw_first_immovable, "mass assignment never varied");
    }

    #[test]
    fn kitchen_randomizes_open_fractions() {
        let spec = TaskSpec::builtin(TaskKind::ArrangeKitchenMM);
        let ep = reset(&spec, 7).unwrap();
        for o in &ep.state.objects {
            if matches!(o.kind, ObjectKind::PrismaticDrawer | ObjectKind::RevoluteDoor) {
                let [lo, hi] = o.q_limits;
                let frac = (o.q.scalar() - lo) / (hi - lo);
                assert!((0.2..=1.0).contains(&frac), "frac {frac}");
            }
        }
    }
}
