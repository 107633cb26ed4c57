//! Effort-minimizing conditional task and motion planning for a planar
//! mobile manipulator.
//!
//! The pipeline: [`pddl`] grounds a STRIPS task, [`ff`] finds symbolic
//! plans, [`rgraph`] merges them into a reachability graph, [`motion`]
//! plans lazily checked SE(2) paths in a [`world`], and [`engine`] searches
//! the graph for the lowest-effort validated trajectory. [`exec`] replays
//! the result against scripted events with online replanning.

pub mod bench;
pub mod engine;
pub mod exec;
pub mod ff;
pub mod motion;
pub mod pddl;
pub mod pipeline;
pub mod render;
pub mod rgraph;
pub mod scenario;
pub mod world;
