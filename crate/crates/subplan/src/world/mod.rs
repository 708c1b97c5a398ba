//! Deterministic quasi-static 2D simulator: disc-base robot with a point
//! end-effector moving among walls and articulated objects.

pub mod scene;
pub mod sim;

pub use scene::{load_fixture, load_scene, Fixture, Rect, SceneError, TaskDoc};
pub use sim::{apply_push, check_body_collision, clamp_to_annulus, step};

use crate::geom::{Polygon, Pose2D, Segment, Vec2};
use std::collections::{BTreeMap, BTreeSet};

pub const ROBOT_RADIUS: f64 = 0.3; // m, base disc
pub const EE_MIN_REACH: f64 = 0.2; // m, inner annulus bound
pub const EE_MAX_REACH: f64 = 1.0; // m, outer annulus bound
pub const ACTION_DT: f64 = 0.1; // s per low-level action
pub const PHYSICS_DT: f64 = 0.025; // s per physics substep
pub const SUBSTEPS: usize = 4;
pub const V_MAX: f64 = 0.5; // m/s
pub const W_MAX: f64 = 1.0; // rad/s
pub const EE_STEP_MAX: f64 = 0.05; // m per action step
pub const HINGE_DEAD_ZONE: f64 = 0.1; // m, contacts closer to the hinge do not move the door
pub const EE_CONTACT_TOL: f64 = 0.03; // m, end-effector counts as touching within this

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum ObjectKind {
    RevoluteDoor,
    PrismaticDrawer,
    Button,
    FreeBox,
    Chair,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MassClass {
    Light,
    Immovable,
}

/// Joint state: scalar for hinged/sliding objects and buttons, a full pose
/// for free-standing boxes and chairs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum JointValue {
    Scalar(f64),
    Free(Pose2D),
}

impl JointValue {
    pub fn scalar(&self) -> f64 {
        match self {
            JointValue::Scalar(q) => *q,
            JointValue::Free(_) => panic!("scalar() on a free joint"),
        }
    }

    pub fn free_pose(&self) -> Pose2D {
        match self {
            JointValue::Free(p) => *p,
            JointValue::Scalar(_) => panic!("free_pose() on a scalar joint"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ArticulatedObject {
    pub id: String,
    pub kind: ObjectKind,
    /// Hinge pose for doors (rotation origin, zero-angle direction), axis
    /// origin/direction for drawers (slides along local +x), mount pose for
    /// buttons, initial (= tucked/home) pose for free objects.
    pub anchor: Pose2D,
    pub q: JointValue,
    pub q_limits: [f64; 2],
    pub mass_class: MassClass,
    /// Convex polygon in the object's local frame, CCW.
    pub footprint: Polygon,
    /// Button only: id of the door thrown open on press.
    pub link: Option<String>,
}

impl ArticulatedObject {
    pub fn world_footprint(&self) -> Polygon {
        match self.kind {
            ObjectKind::RevoluteDoor => {
                let pose = Pose2D::new(self.anchor.x, self.anchor.y, self.anchor.theta + self.q.scalar());
                self.footprint.transformed(&pose)
            }
            ObjectKind::PrismaticDrawer => {
                let shift = Vec2::new(self.q.scalar(), 0.0);
                Polygon::new(
                    self.footprint
                        .vertices
                        .iter()
                        .map(|v| self.anchor.transform(*v + shift))
                        .collect(),
                )
            }
            ObjectKind::Button => self.footprint.transformed(&self.anchor),
            ObjectKind::FreeBox | ObjectKind::Chair => {
                self.footprint.transformed(&self.q.free_pose())
            }
        }
    }

    pub fn is_scalar_joint(&self) -> bool {
        matches!(
            self.kind,
            ObjectKind::RevoluteDoor | ObjectKind::PrismaticDrawer | ObjectKind::Button
        )
    }

    /// World-frame hinge point (revolute) or axis origin (prismatic).
    pub fn hinge_world(&self) -> Vec2 {
        self.anchor.position()
    }

    /// World-frame prismatic axis direction (pushing along it opens).
    pub fn axis_world(&self) -> Vec2 {
        self.anchor.heading()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SceneState {
    pub robot: Pose2D,
    /// End-effector point, world frame, always inside the reach annulus.
    pub ee: Vec2,
    pub objects: Vec<ArticulatedObject>,
    pub walls: Vec<Segment>,
    pub time: f64,
    /// Running duration of uninterrupted end-effector/object contact.
    pub ee_contact_s: f64,
}

impl SceneState {
    pub fn object(&self, id: &str) -> Option<&ArticulatedObject> {
        self.objects.iter().find(|o| o.id == id)
    }

    /// Axis-aligned bounds of the wall set.
    pub fn wall_bounds(&self) -> (Vec2, Vec2) {
        let mut lo = Vec2::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for w in &self.walls {
            for p in [w.a, w.b] {
                lo.x = lo.x.min(p.x);
                lo.y = lo.y.min(p.y);
                hi.x = hi.x.max(p.x);
                hi.y = hi.y.max(p.y);
            }
        }
        (lo, hi)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LowLevelAction {
    pub v: f64,
    pub w: f64,
    pub ee_dx: f64,
    pub ee_dy: f64,
}

impl LowLevelAction {
    pub const ZERO: LowLevelAction = LowLevelAction {
        v: 0.0,
        w: 0.0,
        ee_dx: 0.0,
        ee_dy: 0.0,
    };

    pub fn new(v: f64, w: f64, ee_dx: f64, ee_dy: f64) -> Self {
        LowLevelAction { v, w, ee_dx, ee_dy }
    }

    pub fn clamped(&self) -> Self {
        LowLevelAction {
            v: self.v.clamp(-V_MAX, V_MAX),
            w: self.w.clamp(-W_MAX, W_MAX),
            ee_dx: self.ee_dx.clamp(-EE_STEP_MAX, EE_STEP_MAX),
            ee_dy: self.ee_dy.clamp(-EE_STEP_MAX, EE_STEP_MAX),
        }
    }
}

/// What happened during one action step.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct StepEvents {
    pub body_collision: bool,
    /// Signed joint deltas for scalar joints, translation distance for free
    /// objects. Only touched objects appear.
    pub joint_deltas: BTreeMap<String, f64>,
    pub button_pressed: BTreeSet<String>,
    /// Continuous end-effector contact streak at the end of the step.
    pub ee_contact_s: f64,
}

impl StepEvents {
    pub fn merge(&mut self, other: StepEvents) {
        self.body_collision |= other.body_collision;
        for (id, dq) in other.joint_deltas {
            *self.joint_deltas.entry(id).or_insert(0.0) += dq;
        }
        self.button_pressed.extend(other.button_pressed);
        self.ee_contact_s = other.ee_contact_s;
    }
}
