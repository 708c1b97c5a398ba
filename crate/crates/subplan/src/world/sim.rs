//! World dynamics: unicycle base integration, end-effector carry and clamp,
//! quasi-static push resolution, collision detection.

use super::*;
use crate::geom::{wrap_angle, Polygon, Pose2D, Segment, Vec2};

/// Advance one action step (4 physics substeps of 0.025 s).
///
/// Per substep: the base integrates unicycle kinematics (backed out to the
/// previous substep on collision), the end-effector is carried rigidly with
/// the base, displaced by its per-step velocity, clamped to the reach
/// annulus, and its sweep is applied to any objects it crosses.
pub fn step(state: &SceneState, action: &LowLevelAction) -> (SceneState, StepEvents) {
    let a = action.clamped();
    let mut s = state.clone();
    let mut ev = StepEvents::default();
    for _ in 0..SUBSTEPS {
        let collided = substep(&mut s, &a, &mut ev);
        if collided {
            ev.body_collision = true;
            break;
        }
    }
    ev.ee_contact_s = s.ee_contact_s;
    (s, ev)
}

fn substep(s: &mut SceneState, a: &LowLevelAction, ev: &mut StepEvents) -> bool {
    let dt = PHYSICS_DT;
    let old_robot = s.robot;
    let old_ee = s.ee;

    let cand = Pose2D {
        x: s.robot.x + a.v * s.robot.theta.cos() * dt,
        y: s.robot.y + a.v * s.robot.theta.sin() * dt,
        theta: wrap_angle(s.robot.theta + a.w * dt),
    };
    let mut collided = false;
    if body_collides_at(s, cand.position()) {
        collided = true; // back out: base stays at the previous substep pose
    } else {
        s.robot = cand;
    }

    // End-effector: rigid carry with the base, then world-frame displacement,
    // then annulus clamp.
    let ee_local = old_robot.inverse_transform(old_ee);
    let mut ee = s.robot.transform(ee_local);
    ee = ee + Vec2::new(a.ee_dx, a.ee_dy) * (dt / ACTION_DT);
    ee = clamp_to_annulus(ee, s.robot.position());
    let sweep = Segment::new(old_ee, ee);
    s.ee = ee;
    s.time += dt;

    let pushed = resolve_pushes(s, &sweep, ev);

    let touching = pushed
        || s.objects
            .iter()
            .any(|o| o.world_footprint().distance_to_point(s.ee) <= EE_CONTACT_TOL);
    if touching {
        s.ee_contact_s += dt;
    } else {
        s.ee_contact_s = 0.0;
    }

    // Objects may have moved into the base (e.g. a door swinging open).
    if !collided && check_body_collision(s) {
        collided = true;
    }
    collided
}

/// Resolve the effect of an end-effector sweep on a cloned state.
pub fn apply_push(state: &SceneState, sweep: &Segment) -> (SceneState, StepEvents) {
    let mut s = state.clone();
    let mut ev = StepEvents::default();
    resolve_pushes(&mut s, sweep, &mut ev);
    ev.ee_contact_s = s.ee_contact_s;
    (s, ev)
}

/// Returns true if the sweep touched any object.
fn resolve_pushes(s: &mut SceneState, sweep: &Segment, ev: &mut StepEvents) -> bool {
    if sweep.length() < 1e-12 {
        return false;
    }
    let mut touched = false;
    for i in 0..s.objects.len() {
        let fp = s.objects[i].world_footprint();
        let Some((t, edge)) = fp.sweep_contact(sweep) else {
            continue;
        };
        touched = true;
        let contact = sweep.a + (sweep.b - sweep.a) * t;
        let remainder = sweep.b - contact;
        // Interior lies left of each CCW edge, so this points into the
        // object. A sweep that does not press in (a separating retract from
        // a start-inside contact) touches without moving anything.
        let inward = (edge.b - edge.a).perp().normalized();
        if remainder.dot(inward) <= 1e-12 {
            continue;
        }
        let (kind, mass) = (s.objects[i].kind, s.objects[i].mass_class);
        match kind {
            ObjectKind::RevoluteDoor if mass == MassClass::Light => {
                let lever = contact - s.objects[i].hinge_world();
                let arm = lever.norm();
                if arm >= HINGE_DEAD_ZONE {
                    // Tangential sweep component at the contact radius.
                    let tangent = lever.perp().normalized();
                    let dq = remainder.dot(tangent) / arm;
                    nudge_scalar(&mut s.objects[i], dq, ev);
                }
            }
            ObjectKind::PrismaticDrawer if mass == MassClass::Light => {
                let dq = remainder.dot(s.objects[i].axis_world());
                nudge_scalar(&mut s.objects[i], dq, ev);
            }
            ObjectKind::Button => {
                if s.objects[i].q.scalar() == 0.0 {
                    s.objects[i].q = JointValue::Scalar(1.0);
                    ev.button_pressed.insert(s.objects[i].id.clone());
                    *ev.joint_deltas.entry(s.objects[i].id.clone()).or_insert(0.0) += 1.0;
                    if let Some(link) = s.objects[i].link.clone() {
                        open_door(s, &link, ev);
                    }
                }
            }
            ObjectKind::FreeBox | ObjectKind::Chair if mass == MassClass::Light => {
                let shift = inward * remainder.dot(inward);
                if !translation_blocked(s, i, shift) {
                    let p = s.objects[i].q.free_pose();
                    s.objects[i].q =
                        JointValue::Free(Pose2D::new(p.x + shift.x, p.y + shift.y, p.theta));
                    *ev.joint_deltas.entry(s.objects[i].id.clone()).or_insert(0.0) +=
                        shift.norm();
                }
            }
            _ => {} // immovable: contact without motion
        }
    }
    touched
}

fn nudge_scalar(obj: &mut ArticulatedObject, dq: f64, ev: &mut StepEvents) {
    let q0 = obj.q.scalar();
    let q1 = (q0 + dq).clamp(obj.q_limits[0], obj.q_limits[1]);
    if q1 != q0 {
        obj.q = JointValue::Scalar(q1);
        *ev.joint_deltas.entry(obj.id.clone()).or_insert(0.0) += q1 - q0;
    }
}

fn open_door(s: &mut SceneState, id: &str, ev: &mut StepEvents) {
    if let Some(door) = s.objects.iter_mut().find(|o| o.id == id) {
        let q0 = door.q.scalar();
        let q1 = door.q_limits[1];
        if q1 != q0 {
            door.q = JointValue::Scalar(q1);
            *ev.joint_deltas.entry(door.id.clone()).or_insert(0.0) += q1 - q0;
        }
    }
}

/// Whether shifting object `i` by `shift` would drive it into a wall or
/// another object's footprint.
fn translation_blocked(s: &SceneState, i: usize, shift: Vec2) -> bool {
    let moved: Polygon = s.objects[i].world_footprint().translated(shift);
    if s.walls.iter().any(|w| moved.intersects_segment(w)) {
        return true;
    }
    s.objects
        .iter()
        .enumerate()
        .any(|(j, o)| j != i && moved.intersects_polygon(&o.world_footprint()))
}

/// Project a point into the reach annulus around `base`.
pub fn clamp_to_annulus(ee: Vec2, base: Vec2) -> Vec2 {
    let d = ee - base;
    let n = d.norm();
    if n < 1e-9 {
        return base + Vec2::new(EE_MIN_REACH, 0.0);
    }
    let r = n.clamp(EE_MIN_REACH, EE_MAX_REACH);
    base + d * (r / n)
}

/// True iff the base disc touches any wall or object footprint. The
/// end-effector is a gripper point and never counts.
pub fn check_body_collision(state: &SceneState) -> bool {
    body_collides_at(state, state.robot.position())
}

fn body_collides_at(state: &SceneState, center: Vec2) -> bool {
    state
        .walls
        .iter()
        .any(|w| w.distance_to_point(center) <= ROBOT_RADIUS)
        || state
            .objects
            .iter()
            .any(|o| o.world_footprint().intersects_disc(center, ROBOT_RADIUS))
}
