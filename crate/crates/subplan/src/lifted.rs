//! Lifted environment: the action space is subgoals, each executed by a
//! motion generator; the lifted reward is the sum of per-low-level-step
//! task rewards over the executed trajectory. A flat stepping mode drives
//! the same world one low-level action at a time for baselines.

use crate::motion::{
    plan_arm, plan_base, subgoal_to_world, Executor, MotionPlan, PlanGrid, PlannerConfig, Subgoal,
    WorldTarget,
};
use crate::sense::{build_observation, Observation};
use crate::tasks::{
    completion_counts, is_success, reset, reward, Episode, EpisodeResult, TaskError, TaskSpec,
};
use crate::world::{step, LowLevelAction, SceneState, StepEvents};
use std::collections::BTreeMap;

pub const LIFTED_MAX: usize = 25;
pub const FLAT_MAX: usize = 750;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AbortReason {
    None,
    PlannerFailure,
    BodyCollision,
    ExecutorAbort,
}

/// One subgoal transition, including the executed low-level actions so the
/// reward can be re-derived by replay.
#[derive(Clone, Debug)]
pub struct LiftedTransition {
    pub obs: Observation,
    pub subgoal: Subgoal,
    pub reward: f64,
    pub next_obs: Observation,
    pub done: bool,
    /// Number of low-level steps executed (0 on planner failure).
    pub t: usize,
    pub planner_success: bool,
    pub abort: AbortReason,
    pub events: StepEvents,
    pub actions: Vec<LowLevelAction>,
}

#[derive(Clone, Debug)]
pub struct FlatTransition {
    pub reward: f64,
    pub done: bool,
    pub events: StepEvents,
}

/// Environment state for one episode. Cloning mid-episode yields an
/// independent copy that evolves identically under identical inputs.
#[derive(Clone, Debug)]
pub struct LiftedEnv {
    pub spec: TaskSpec,
    pub planner: PlannerConfig,
    pub ep: Episode,
    pub obs: Observation,
    pub lifted_steps: usize,
    pub flat_steps: usize,
    pub done: bool,
    pub success: bool,
    pub collided: bool,
    pub reward_sum: f64,
    pub path_length: f64,
    /// [base, arm] counters.
    pub subgoals_attempted: [usize; 2],
    pub subgoals_succeeded: [usize; 2],
    /// End-effector contact streaks that crossed 1 s.
    pub interactions: usize,
    interaction_credited: bool,
    plan_calls: u64,
    /// Check arm approach segments against walls (on in eval, off in train).
    pub arm_collision_check: bool,
}

impl LiftedEnv {
    pub fn new(spec: TaskSpec, planner: PlannerConfig, seed: u64) -> Result<Self, TaskError> {
        let ep = reset(&spec, seed)?;
        // Fold the episode seed into the planner stream so episodes do not
        // share sampling sequences.
        let planner = planner.with_seed(planner.seed ^ seed.wrapping_mul(0x9e37_79b9_7f4a_7c15));
        let obs = observe(&spec, &ep);
        Ok(LiftedEnv {
            spec,
            planner,
            ep,
            obs,
            lifted_steps: 0,
            flat_steps: 0,
            done: false,
            success: false,
            collided: false,
            reward_sum: 0.0,
            path_length: 0.0,
            subgoals_attempted: [0, 0],
            subgoals_succeeded: [0, 0],
            interactions: 0,
            interaction_credited: false,
            plan_calls: 0,
            arm_collision_check: false,
        })
    }

    pub fn lifted_step(&mut self, subgoal: &Subgoal) -> LiftedTransition {
        assert!(!self.done, "lifted_step on a finished episode");
        let obs = self.obs.clone();
        let slot = if subgoal.is_base() { 0 } else { 1 };
        self.subgoals_attempted[slot] += 1;

        let robot = self.ep.state.robot;
        let plan = match subgoal_to_world(subgoal, &robot) {
            WorldTarget::Base(_) if !self.spec.kind.base_motion_enabled() => MotionPlan::Failure {
                stats: Default::default(),
            },
            WorldTarget::Base(goal) => {
                let grid = PlanGrid::from_occupancy(&self.obs.map, &robot);
                let cfg = self
                    .planner
                    .with_seed(self.planner.seed.wrapping_add(self.plan_calls));
                plan_base(&grid, robot, goal, &cfg)
            }
            WorldTarget::Arm { point, dir, dist } => {
                plan_arm(&self.ep.state, point, dir, dist, self.arm_collision_check)
            }
        };
        self.plan_calls += 1;

        let planner_success = !plan.is_failure();
        let mut abort = if planner_success {
            AbortReason::None
        } else {
            AbortReason::PlannerFailure
        };
        let mut t = 0usize;
        let mut acc = 0.0;
        let mut actions = Vec::new();
        let mut events = StepEvents::default();

        if planner_success {
            let mut exec = Executor::new(plan);
            let mut completed = false;
            loop {
                let Some(a) = exec.next_action(&self.ep.state) else {
                    completed = true;
                    break;
                };
                let (next, ev) = step(&self.ep.state, &a);
                t += 1;
                self.flat_steps += 1;
                acc += reward(&self.spec, &self.ep, &self.ep.state, &next, &ev);
                self.path_length += next.robot.position().dist(self.ep.state.robot.position());
                self.note_contact(next.ee_contact_s);
                actions.push(a);
                let hit = ev.body_collision;
                events.merge(ev);
                self.ep.state = next;
                if hit {
                    self.collided = true;
                    abort = AbortReason::BodyCollision;
                    break;
                }
                if is_success(&self.spec, &self.ep, &self.ep.state) {
                    self.success = true;
                    completed = true;
                    break;
                }
            }
            if exec.aborted {
                abort = AbortReason::ExecutorAbort;
            } else if completed && !self.collided {
                self.subgoals_succeeded[slot] += 1;
            }
        } else if is_success(&self.spec, &self.ep, &self.ep.state) {
            // A no-op subgoal still observes the (possibly already terminal)
            // state.
            self.success = true;
        }

        self.lifted_steps += 1;
        self.reward_sum += acc;
        self.done = self.success || self.collided || self.lifted_steps >= LIFTED_MAX;
        self.obs = observe(&self.spec, &self.ep);
        LiftedTransition {
            obs,
            subgoal: *subgoal,
            reward: acc,
            next_obs: self.obs.clone(),
            done: self.done,
            t,
            planner_success,
            abort,
            events,
            actions,
        }
    }

    pub fn flat_step(&mut self, action: &LowLevelAction) -> FlatTransition {
        assert!(!self.done, "flat_step on a finished episode");
        let a = if self.spec.kind.base_motion_enabled() {
            *action
        } else {
            LowLevelAction { v: 0.0, w: 0.0, ..*action }
        };
        let (next, ev) = step(&self.ep.state, &a);
        self.flat_steps += 1;
        let r = reward(&self.spec, &self.ep, &self.ep.state, &next, &ev);
        self.path_length += next.robot.position().dist(self.ep.state.robot.position());
        self.note_contact(next.ee_contact_s);
        self.ep.state = next;
        self.reward_sum += r;
        if ev.body_collision {
            self.collided = true;
        } else if is_success(&self.spec, &self.ep, &self.ep.state) {
            self.success = true;
        }
        self.done = self.success || self.collided || self.flat_steps >= FLAT_MAX;
        self.obs = observe(&self.spec, &self.ep);
        FlatTransition {
            reward: r,
            done: self.done,
            events: ev,
        }
    }

    fn note_contact(&mut self, streak: f64) {
        if streak <= 0.0 {
            self.interaction_credited = false;
        } else if streak >= 1.0 && !self.interaction_credited {
            self.interactions += 1;
            self.interaction_credited = true;
        }
    }

    pub fn result(&self) -> EpisodeResult {
        let completion = if self.spec.kind.is_mm() {
            completion_counts(&self.spec, &self.ep.state).expect("mm counts")
        } else {
            BTreeMap::new()
        };
        EpisodeResult {
            success: self.success,
            path_length: self.path_length,
            shortest_path: self.ep.shortest_path,
            reward_sum: self.reward_sum,
            completion,
            subgoals_attempted: self.subgoals_attempted,
            subgoals_succeeded: self.subgoals_succeeded,
            steps: if self.lifted_steps > 0 {
                self.lifted_steps
            } else {
                self.flat_steps
            },
            interactions: self.interactions,
        }
    }
}

fn observe(spec: &TaskSpec, ep: &Episode) -> Observation {
    let _ = spec;
    let nav = ep.field.as_ref().map(|f| (f, ep.nav_goal.expect("nav goal")));
    build_observation(&ep.state, nav, ep.ee_goal)
}

/// Seeded rollout under a subgoal policy.
pub fn run_lifted_episode<F>(
    spec: &TaskSpec,
    planner: &PlannerConfig,
    seed: u64,
    arm_collision_check: bool,
    mut policy: F,
) -> Result<EpisodeResult, TaskError>
where
    F: FnMut(&Observation) -> Subgoal,
{
    let mut env = LiftedEnv::new(spec.clone(), planner.clone(), seed)?;
    env.arm_collision_check = arm_collision_check;
    while !env.done {
        let sg = policy(&env.obs);
        env.lifted_step(&sg);
    }
    Ok(env.result())
}

/// Seeded rollout under a low-level policy (750-step budget).
pub fn run_flat_episode<F>(
    spec: &TaskSpec,
    seed: u64,
    mut policy: F,
) -> Result<EpisodeResult, TaskError>
where
    F: FnMut(&Observation) -> LowLevelAction,
{
    let mut env = LiftedEnv::new(spec.clone(), PlannerConfig::rrt(0), seed)?;
    while !env.done {
        let a = policy(&env.obs);
        env.flat_step(&a);
    }
    Ok(env.result())
}

/// Replay a recorded action sequence from a cloned state, summing task
/// rewards exactly as the live rollout did.
pub fn replay_reward(
    spec: &TaskSpec,
    ep: &Episode,
    start: &SceneState,
    actions: &[LowLevelAction],
) -> f64 {
    let mut s = start.clone();
    let mut acc = 0.0;
    for a in actions {
        let (next, ev) = step(&s, a);
        acc += reward(spec, ep, &s, &next, &ev);
        s = next;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{wrap_angle, Vec2};
    use crate::sense::world_to_cell;
    use crate::tasks::{fixtures, TaskKind};
    use crate::world::ObjectKind;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_subgoal<R: Rng>(rng: &mut R) -> Subgoal {
        if rng.gen_bool(0.5) {
            Subgoal::Base {
                r: rng.gen_range(0.0..3.5),
                phi: rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI),
                dtheta: rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI),
            }
        } else {
            Subgoal::Arm {
                row: rng.gen_range(0..64),
                col: rng.gen_range(0..64),
                push_dir: rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI),
                push_dist: rng.gen_range(0.0..0.25),
            }
        }
    }

    #[test]
    fn lifted_reward_matches_flat_replay() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for (kind, text) in fixtures::all() {
            let spec = TaskSpec::parse(text).unwrap();
            let mut env = LiftedEnv::new(spec.clone(), PlannerConfig::rrt(5), 17).unwrap();
            let mut checked = 0;
            while !env.done && checked < 6 {
                let before = env.ep.state.clone();
                let tr = env.lifted_step(&random_subgoal(&mut rng));
                let replayed = replay_reward(&spec, &env.ep, &before, &tr.actions);
                assert!(
                    tr.reward == replayed,
                    "{kind:?}: lifted {} != replay {}",
                    tr.reward,
                    replayed
                );
                assert_eq!(tr.actions.len(), tr.t);
                checked += 1;
            }
        }
    }

    #[test]
    fn planner_failure_is_a_noop_step() {
        let spec = TaskSpec::parse(fixtures::POINT_NAV).unwrap();
        let mut env = LiftedEnv::new(spec, PlannerConfig::rrt(0), 4).unwrap();
        // Cell (32,32) is the robot itself: inside the minimum reach, so the
        // arm planner always fails.
        let noop = Subgoal::Arm { row: 32, col: 32, push_dir: 0.0, push_dist: 0.1 };
        let mut n = 0;
        while !env.done {
            let state_before = env.ep.state.clone();
            let tr = env.lifted_step(&noop);
            assert!(!tr.planner_success);
            assert_eq!(tr.t, 0);
            assert_eq!(tr.reward, 0.0);
            assert_eq!(tr.abort, AbortReason::PlannerFailure);
            assert_eq!(env.ep.state, state_before, "no-op must not change the world");
            n += 1;
        }
        assert_eq!(n, LIFTED_MAX);
        assert!(!env.success && !env.collided);
    }

    #[test]
    fn budgets_bound_episode_length() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let spec = TaskSpec::parse(fixtures::POINT_NAV).unwrap();
        for seed in [0, 1, 2] {
            let r = run_lifted_episode(&spec, &PlannerConfig::rrt(1), seed, false, |_| {
                random_subgoal(&mut rng)
            })
            .unwrap();
            assert!(r.steps <= LIFTED_MAX);
        }
        let r = run_flat_episode(&spec, 0, |_| LowLevelAction::ZERO).unwrap();
        assert_eq!(r.steps, FLAT_MAX, "zero actions never terminate early");
        assert_eq!(r.reward_sum, 0.0);
    }

    #[test]
    fn clone_mid_episode_stays_identical() {
        let spec = TaskSpec::parse(fixtures::PUSH_DOOR_NAV).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let mut env = LiftedEnv::new(spec, PlannerConfig::prm(2), 8).unwrap();
        for _ in 0..2 {
            if env.done {
                break;
            }
            env.lifted_step(&random_subgoal(&mut rng));
        }
        let mut twin = env.clone();
        let mut rng2 = rng.clone();
        while !env.done {
            let sg = random_subgoal(&mut rng);
            let sg2 = random_subgoal(&mut rng2);
            assert_eq!(sg, sg2);
            let a = env.lifted_step(&sg);
            let b = twin.lifted_step(&sg2);
            assert_eq!(a.reward, b.reward);
            assert_eq!(a.t, b.t);
            assert_eq!(env.ep.state, twin.ep.state);
        }
        assert_eq!(env.result(), twin.result());
    }

    #[test]
    fn tabletop_locks_the_base() {
        let spec = TaskSpec::parse(fixtures::TABLETOP_REACH).unwrap();
        let mut env = LiftedEnv::new(spec, PlannerConfig::rrt(0), 1).unwrap();
        let tr = env.lifted_step(&Subgoal::Base { r: 1.0, phi: 0.0, dtheta: 0.0 });
        assert!(!tr.planner_success, "base subgoals must fail when the base is locked");
        let pose_before = env.ep.state.robot;
        env.flat_step(&LowLevelAction::new(0.5, 1.0, 0.0, 0.0));
        assert_eq!(env.ep.state.robot, pose_before, "flat base commands are zeroed");
    }

    /// Hand-scripted navigate-push-navigate solution of the push-door task.
    #[test]
    fn scripted_push_door_solution_succeeds() {
        let spec = TaskSpec::parse(fixtures::PUSH_DOOR_NAV).unwrap();
        let mut env = LiftedEnv::new(spec, PlannerConfig::rrt(7), 11).unwrap();
        env.arm_collision_check = true;
        let goal = env.ep.nav_goal.unwrap();

        let base_toward = |env: &LiftedEnv, target: Vec2| -> Subgoal {
            let robot = env.ep.state.robot;
            let d = target - robot.position();
            Subgoal::Base {
                r: d.norm(),
                phi: wrap_angle(d.angle() - robot.theta),
                dtheta: 0.0,
            }
        };

        // Open the door: walk within reach of a mid-door contact point, push
        // along the door's outward normal, and re-stand as it swings away.
        let mut guard = 0;
        loop {
            guard += 1;
            assert!(guard <= 18, "door phase did not converge");
            let door = env.ep.state.object("door0").unwrap();
            if door.q.scalar() >= 1.1 || env.done {
                break;
            }
            let hinge = door.hinge_world();
            let swing = door.anchor.theta + door.q.scalar();
            let along = Vec2::new(swing.cos(), swing.sin());
            let normal = along.perp(); // q-increasing push direction
            let contact = hinge + along * 0.7 - normal * 0.10;
            let robot = env.ep.state.robot;
            if contact.dist(robot.position()) > 0.88 {
                env.lifted_step(&base_toward(&env, contact - normal * 0.55));
                continue;
            }
            let Some((row, col)) = world_to_cell(&robot, contact) else {
                panic!("contact point fell outside the ego map");
            };
            env.lifted_step(&Subgoal::Arm {
                row,
                col,
                push_dir: wrap_angle(normal.angle() - robot.theta),
                push_dist: 0.25,
            });
        }
        let q = env.ep.state.object("door0").unwrap().q.scalar();
        assert!(q >= 1.1, "door only opened to q = {q:.3}");
        assert!(!env.done, "episode ended during the push phase");

        // Drive to the sampled goal through the opened doorway.
        for _ in 0..8 {
            if env.done {
                break;
            }
            env.lifted_step(&base_toward(&env, goal));
        }
        assert!(env.success, "scripted run did not reach the goal");
        let res = env.result();
        assert!(res.success && res.steps <= LIFTED_MAX);
        assert!(res.subgoals_succeeded[1] >= 2, "arm subgoals should have executed");
    }

    #[test]
    fn interactions_count_long_contacts() {
        // A scripted push holds contact for well over a second.
        let spec = TaskSpec::parse(fixtures::ARRANGE_CHAIR).unwrap();
        let mut env = LiftedEnv::new(spec, PlannerConfig::rrt(3), 2).unwrap();
        let chair_pos = env
            .ep
            .state
            .objects
            .iter()
            .find(|o| o.kind == ObjectKind::Chair)
            .unwrap()
            .q
            .free_pose()
            .position();
        // Walk next to the chair, then push through it.
        let robot = env.ep.state.robot;
        let d = chair_pos - robot.position();
        let stand = robot.position() + d * ((d.norm() - 0.75) / d.norm());
        env.lifted_step(&Subgoal::Base {
            r: stand.dist(robot.position()),
            phi: wrap_angle(d.angle() - robot.theta),
            dtheta: wrap_angle(d.angle() - robot.theta),
        });
        if env.done {
            return; // sampled layout made the approach terminal; other seeds cover it
        }
        let robot = env.ep.state.robot;
        if let Some((row, col)) = world_to_cell(&robot, chair_pos) {
            let dir = (chair_pos - robot.position()).angle();
            env.lifted_step(&Subgoal::Arm {
                row,
                col,
                push_dir: wrap_angle(dir - robot.theta),
                push_dist: 0.25,
            });
            assert!(
                env.interactions >= 1,
                "a full 0.25 m push holds contact for 2 s and must be counted"
            );
        }
    }

    #[test]
    fn run_episode_is_deterministic() {
        let spec = TaskSpec::parse(fixtures::OBSTACLES_NAV).unwrap();
        let rollout = || {
            let mut rng = ChaCha8Rng::seed_from_u64(5);
            run_lifted_episode(&spec, &PlannerConfig::prm(9), 21, false, |_| {
                random_subgoal(&mut rng)
            })
            .unwrap()
        };
        assert_eq!(rollout(), rollout());
    }

    #[test]
    fn mm_episodes_report_counts() {
        let spec = TaskSpec::parse(fixtures::ARRANGE_KITCHEN).unwrap();
        let r = run_lifted_episode(&spec, &PlannerConfig::rrt(0), 6, false, |_| Subgoal::Arm {
            row: 32,
            col: 32,
            push_dir: 0.0,
            push_dist: 0.1,
        })
        .unwrap();
        assert!(!r.success);
        assert!(r.completion.contains_key("5") && r.completion.contains_key("10"));
        assert_eq!(r.steps, LIFTED_MAX, "count-based tasks run out the budget");
    }
}
