//! Subgoal-space reinforcement learning over classical motion generators in
//! a 2D mobile-manipulation simulator.

pub mod geom;
pub mod lifted;
pub mod motion;
pub mod sense;
pub mod tasks;
pub mod world;
