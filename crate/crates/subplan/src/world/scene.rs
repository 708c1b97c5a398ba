//! Scene and task fixture files: strict TOML schema, validation, loading.
//!
//! A fixture describes walls as segments, articulated objects, named
//! rectangular regions used by episode randomization, an optional fixed
//! robot start, and an optional `[task]` table consumed by the task layer.
//!
//! ```toml
//! name = "two-rooms"
//!
//! [[wall]]
//! a = [0.0, 0.0]
//! b = [8.0, 0.0]
//!
//! [[object]]
//! id = "door0"
//! kind = "revolute_door"            # revolute_door | prismatic_drawer |
//!                                   # button | free_box | chair
//! anchor = [4.0, 3.0, 1.5707963]    # x, y, theta
//! q = 0.0                           # scalar joints only
//! q_limits = [0.0, 1.5707963]       # scalar joints only
//! mass_class = "light"              # light | immovable (default light)
//! footprint = [[0.0, -0.04], [1.2, -0.04], [1.2, 0.04], [0.0, 0.04]]
//!
//! [region.spawn]
//! rect = [0.5, 0.5, 3.0, 5.5]       # x0, y0, x1, y1
//!
//! [robot]
//! pose = [1.0, 1.0, 0.0]
//! ```

use super::{
    ArticulatedObject, JointValue, MassClass, ObjectKind, SceneState, EE_MAX_REACH, EE_MIN_REACH,
};
use crate::geom::{Polygon, Pose2D, Segment, Vec2};
use rand::Rng;
use serde::Deserialize;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("fixture parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid fixture: {0}")]
    Invalid(String),
}

fn bad(msg: impl Into<String>) -> SceneError {
    SceneError::Invalid(msg.into())
}

/// Axis-aligned rectangle used for spawn/goal/randomization regions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rect {
    pub lo: Vec2,
    pub hi: Vec2,
}

impl Rect {
    pub fn contains(&self, p: Vec2) -> bool {
        p.x >= self.lo.x && p.x <= self.hi.x && p.y >= self.lo.y && p.y <= self.hi.y
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> Vec2 {
        Vec2::new(
            rng.gen_range(self.lo.x..=self.hi.x),
            rng.gen_range(self.lo.y..=self.hi.y),
        )
    }

    pub fn center(&self) -> Vec2 {
        (self.lo + self.hi) * 0.5
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FixtureDoc {
    name: Option<String>,
    #[serde(default)]
    wall: Vec<WallDoc>,
    #[serde(default)]
    object: Vec<ObjectDoc>,
    #[serde(default)]
    region: BTreeMap<String, RegionDoc>,
    robot: Option<RobotDoc>,
    task: Option<TaskDoc>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct WallDoc {
    a: [f64; 2],
    b: [f64; 2],
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ObjectDoc {
    id: String,
    kind: String,
    anchor: [f64; 3],
    q: Option<f64>,
    q_limits: Option<[f64; 2]>,
    mass_class: Option<String>,
    footprint: Vec<[f64; 2]>,
    link: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RegionDoc {
    rect: [f64; 4],
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RobotDoc {
    pose: [f64; 3],
    ee: Option<[f64; 2]>,
}

/// Raw `[task]` table; interpreted by the task layer.
#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TaskDoc {
    pub kind: String,
    pub spawn_region: Option<String>,
    pub goal_region: Option<String>,
    pub d_th: Option<f64>,
    pub d_gth: Option<f64>,
    #[serde(default)]
    pub weights: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Fixture {
    pub name: String,
    pub scene: SceneState,
    pub regions: BTreeMap<String, Rect>,
    pub task: Option<TaskDoc>,
}

pub fn load_scene(text: &str) -> Result<SceneState, SceneError> {
    Ok(load_fixture(text)?.scene)
}

pub fn load_fixture(text: &str) -> Result<Fixture, SceneError> {
    let doc: FixtureDoc = toml::from_str(text)?;

    let mut walls = Vec::new();
    for (i, w) in doc.wall.iter().enumerate() {
        let a = Vec2::new(w.a[0], w.a[1]);
        let b = Vec2::new(w.b[0], w.b[1]);
        if a.dist(b) < 1e-9 {
            return Err(bad(format!("wall {i}: zero-length segment")));
        }
        walls.push(Segment::new(a, b));
    }

    let mut objects = Vec::new();
    for o in &doc.object {
        objects.push(build_object(o)?);
    }
    for (i, o) in objects.iter().enumerate() {
        if objects[..i].iter().any(|p| p.id == o.id) {
            return Err(bad(format!("object `{}`: duplicate id", o.id)));
        }
    }
    for o in &objects {
        if let Some(link) = &o.link {
            let target = objects
                .iter()
                .find(|p| &p.id == link)
                .ok_or_else(|| bad(format!("object `{}`: link `{link}` not found", o.id)))?;
            if target.kind != ObjectKind::RevoluteDoor {
                return Err(bad(format!(
                    "object `{}`: link `{link}` is not a revolute_door",
                    o.id
                )));
            }
        }
    }

    let mut regions = BTreeMap::new();
    for (name, r) in &doc.region {
        let [x0, y0, x1, y1] = r.rect;
        if x1 <= x0 || y1 <= y0 {
            return Err(bad(format!("region `{name}`: empty rect")));
        }
        regions.insert(
            name.clone(),
            Rect {
                lo: Vec2::new(x0, y0),
                hi: Vec2::new(x1, y1),
            },
        );
    }

    let robot = match &doc.robot {
        Some(r) => Pose2D::new(r.pose[0], r.pose[1], r.pose[2]),
        None => Pose2D::new(0.0, 0.0, 0.0),
    };
    let ee = match doc.robot.as_ref().and_then(|r| r.ee) {
        Some([x, y]) => {
            let ee = Vec2::new(x, y);
            let d = ee.dist(robot.position());
            if !(EE_MIN_REACH..=EE_MAX_REACH).contains(&d) {
                return Err(bad(format!(
                    "robot.ee: distance {d:.3} m outside reach [{EE_MIN_REACH}, {EE_MAX_REACH}]"
                )));
            }
            ee
        }
        None => robot.transform(Vec2::new(EE_MIN_REACH, 0.0)),
    };

    let scene = SceneState {
        robot,
        ee,
        objects,
        walls,
        time: 0.0,
        ee_contact_s: 0.0,
    };
    Ok(Fixture {
        name: doc.name.unwrap_or_default(),
        scene,
        regions,
        task: doc.task,
    })
}

fn build_object(o: &ObjectDoc) -> Result<ArticulatedObject, SceneError> {
    let id = &o.id;
    let kind = match o.kind.as_str() {
        "revolute_door" => ObjectKind::RevoluteDoor,
        "prismatic_drawer" => ObjectKind::PrismaticDrawer,
        "button" => ObjectKind::Button,
        "free_box" => ObjectKind::FreeBox,
        "chair" => ObjectKind::Chair,
        other => return Err(bad(format!("object `{id}`: unknown kind `{other}`"))),
    };
    let mass_class = match o.mass_class.as_deref() {
        None | Some("light") => MassClass::Light,
        Some("immovable") => MassClass::Immovable,
        Some(other) => return Err(bad(format!("object `{id}`: unknown mass_class `{other}`"))),
    };
    if o.link.is_some() && kind != ObjectKind::Button {
        return Err(bad(format!("object `{id}`: link only allowed on buttons")));
    }

    if o.footprint.len() < 3 {
        return Err(bad(format!("object `{id}`: footprint needs >= 3 vertices")));
    }
    let mut footprint = Polygon::new(
        o.footprint
            .iter()
            .map(|[x, y]| Vec2::new(*x, *y))
            .collect(),
    );
    if footprint.signed_area() < 0.0 {
        footprint.vertices.reverse();
    }
    if !footprint.is_convex_ccw() {
        return Err(bad(format!("object `{id}`: footprint not convex")));
    }

    let anchor = Pose2D::new(o.anchor[0], o.anchor[1], o.anchor[2]);

    let (q, q_limits) = match kind {
        ObjectKind::RevoluteDoor | ObjectKind::PrismaticDrawer => {
            let [lo, hi] =
                o.q_limits.ok_or_else(|| bad(format!("object `{id}`: q_limits required")))?;
            if hi <= lo {
                return Err(bad(format!("object `{id}`: q_limits must be ordered")));
            }
            let q = o.q.unwrap_or(lo);
            if q < lo || q > hi {
                return Err(bad(format!(
                    "object `{id}`: q = {q} outside limits [{lo}, {hi}]"
                )));
            }
            (JointValue::Scalar(q), [lo, hi])
        }
        ObjectKind::Button => {
            if o.q_limits.is_some() {
                return Err(bad(format!("object `{id}`: buttons have fixed limits")));
            }
            let q = o.q.unwrap_or(0.0);
            if q != 0.0 && q != 1.0 {
                return Err(bad(format!("object `{id}`: button q must be 0 or 1")));
            }
            (JointValue::Scalar(q), [0.0, 1.0])
        }
        ObjectKind::FreeBox | ObjectKind::Chair => {
            if o.q.is_some() || o.q_limits.is_some() {
                return Err(bad(format!(
                    "object `{id}`: free objects take no q/q_limits (pose = anchor)"
                )));
            }
            (JointValue::Free(anchor), [0.0, 0.0])
        }
    };

    Ok(ArticulatedObject {
        id: id.clone(),
        kind,
        anchor,
        q,
        q_limits,
        mass_class,
        footprint,
        link: o.link.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
        name = "one-room"
        [[wall]]
        a = [0.0, 0.0]
        b = [4.0, 0.0]
        [[wall]]
        a = [4.0, 0.0]
        b = [4.0, 4.0]
        [[wall]]
        a = [4.0, 4.0]
        b = [0.0, 4.0]
        [[wall]]
        a = [0.0, 4.0]
        b = [0.0, 0.0]
    "#;

    #[test]
    fn minimal_room_loads() {
        let scene = load_scene(MINIMAL).unwrap();
        assert_eq!(scene.walls.len(), 4);
        assert!(scene.objects.is_empty());
        assert_eq!(scene.time, 0.0);
    }

    #[test]
    fn door_fixture_round_trips() {
        let text = r#"
            [[object]]
            id = "door0"
            kind = "revolute_door"
            anchor = [2.0, 1.0, 1.5707963267948966]
            q = 0.0
            q_limits = [0.0, 1.5707963267948966]
            footprint = [[0.0, -0.04], [1.2, -0.04], [1.2, 0.04], [0.0, 0.04]]
        "#;
        let scene = load_scene(text).unwrap();
        let door = scene.object("door0").unwrap();
        assert_eq!(door.q, JointValue::Scalar(0.0));
        assert_eq!(door.q_limits, [0.0, std::f64::consts::FRAC_PI_2]);
        // Closed door runs along +y from the hinge.
        let fp = door.world_footprint();
        let (lo, hi) = fp.bounding_box();
        assert!((hi.y - 2.2).abs() < 1e-9 && (lo.y - 1.0).abs() < 1e-9);
    }

    #[test]
    fn q_outside_limits_rejected() {
        let text = r#"
            [[object]]
            id = "d"
            kind = "prismatic_drawer"
            anchor = [0.0, 0.0, 0.0]
            q = 0.9
            q_limits = [0.0, 0.5]
            footprint = [[0.0, -0.2], [0.4, -0.2], [0.4, 0.2], [0.0, 0.2]]
        "#;
        assert!(matches!(load_scene(text), Err(SceneError::Invalid(_))));
    }

    #[test]
    fn unknown_key_rejected() {
        let text = "name = \"x\"\nextra = 1\n";
        assert!(matches!(load_scene(text), Err(SceneError::Parse(_))));
    }

    #[test]
    fn nonconvex_footprint_rejected() {
        let text = r#"
            [[object]]
            id = "b"
            kind = "free_box"
            anchor = [0.0, 0.0, 0.0]
            footprint = [[0.0, 0.0], [1.0, 0.0], [0.2, 0.1], [0.0, 1.0]]
        "#;
        assert!(matches!(load_scene(text), Err(SceneError::Invalid(_))));
    }

    #[test]
    fn cw_footprint_normalized_to_ccw() {
        let text = r#"
            [[object]]
            id = "b"
            kind = "free_box"
            anchor = [1.0, 1.0, 0.0]
            footprint = [[-0.3, -0.3], [-0.3, 0.3], [0.3, 0.3], [0.3, -0.3]]
        "#;
        let scene = load_scene(text).unwrap();
        assert!(scene.objects[0].footprint.signed_area() > 0.0);
    }

    #[test]
    fn button_link_must_exist() {
        let text = r#"
            [[object]]
            id = "btn"
            kind = "button"
            anchor = [0.0, 0.0, 0.0]
            footprint = [[-0.1, -0.1], [0.1, -0.1], [0.1, 0.1], [-0.1, 0.1]]
            link = "missing"
        "#;
        assert!(matches!(load_scene(text), Err(SceneError::Invalid(_))));
    }
}
