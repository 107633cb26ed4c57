//! Scenario files: PDDL sources, world, optional timeline and config.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::engine::EngineConfig;
use crate::exec::Timeline;
use crate::motion::PlannerParams;
use crate::pddl::{self, GroundAtom, GroundOptions, GroundTask, PddlError, State};
use crate::world::{Config, WorldError, WorldState};

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("{path}: {msg}")]
    Io { path: String, msg: String },
    #[error("{path}: {msg}")]
    Format { path: String, msg: String },
    #[error("{0}")]
    Pddl(String),
    #[error("{0}")]
    World(#[from] WorldError),
    #[error("{0}")]
    Invalid(String),
}

/// A foreseeable runtime condition: the state and geometry the robot may
/// find itself in when execution begins.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConditionSpec {
    pub name: String,
    #[serde(default)]
    pub add: Vec<String>,
    #[serde(default)]
    pub del: Vec<String>,
    /// Object in the gripper under this condition.
    #[serde(default)]
    pub held: Option<String>,
    /// Robot pose under this condition, if it differs.
    #[serde(default)]
    pub pose: Option<Config>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    domain: PathBuf,
    problem: PathBuf,
    world: PathBuf,
    #[serde(default)]
    timeline: Option<PathBuf>,
    #[serde(default)]
    engine: EngineConfig,
    #[serde(default)]
    planner: PlannerParams,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default)]
    conditions: Vec<ConditionSpec>,
    #[serde(default)]
    runtime_condition: Option<String>,
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub path: PathBuf,
    pub task: GroundTask,
    pub world: WorldState,
    pub timeline: Timeline,
    pub engine: EngineConfig,
    pub seed: u64,
    pub conditions: Vec<ConditionSpec>,
    pub runtime_condition: Option<String>,
}

fn read(path: &Path) -> Result<String, ScenarioError> {
    std::fs::read_to_string(path).map_err(|e| ScenarioError::Io {
        path: path.display().to_string(),
        msg: e.to_string(),
    })
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let text = read(path)?;
        let file: ScenarioFile = serde_json::from_str(&text).map_err(|e| ScenarioError::Format {
            path: path.display().to_string(),
            msg: e.to_string(),
        })?;
        let dir = path.parent().unwrap_or(Path::new("."));
        let dpath = dir.join(&file.domain);
        let ppath = dir.join(&file.problem);
        let diag = |p: &Path, e: PddlError| ScenarioError::Pddl(e.diagnostic(&p.display().to_string()));
        let domain = pddl::parse_domain(&read(&dpath)?).map_err(|e| diag(&dpath, e))?;
        let problem = pddl::parse_problem(&read(&ppath)?, &domain).map_err(|e| diag(&ppath, e))?;
        let task = pddl::ground(&domain, &problem, GroundOptions::default())
            .map_err(|e| diag(&ppath, e))?;
        let world = WorldState::load(&dir.join(&file.world))?;
        let timeline = match &file.timeline {
            Some(t) => {
                let tp = dir.join(t);
                Timeline::from_json(&read(&tp)?).map_err(|e| ScenarioError::Format {
                    path: tp.display().to_string(),
                    msg: e,
                })?
            }
            None => Timeline::default(),
        };
        let seed = file.seed.unwrap_or(file.planner.seed);
        let mut engine = file.engine;
        engine.planner = file.planner;
        engine.planner.seed = seed;
        if engine.max_attempts == 0 {
            return Err(ScenarioError::Invalid("max_attempts must be at least 1".into()));
        }
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let s = Scenario {
            name,
            path: path.to_path_buf(),
            task,
            world,
            timeline,
            engine,
            seed,
            conditions: file.conditions,
            runtime_condition: file.runtime_condition,
        };
        s.check_anchors()?;
        if let Some(rc) = &s.runtime_condition {
            if !s.conditions.iter().any(|c| &c.name == rc) {
                return Err(ScenarioError::Invalid(format!("unknown runtime condition `{rc}`")));
            }
        }
        Ok(s)
    }

    /// Overrides the seed everywhere it is used.
    pub fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
        self.engine.planner.seed = seed;
    }

    fn check_anchors(&self) -> Result<(), ScenarioError> {
        for o in &self.task.objects {
            let is_place = self.task.is_subtype(&o.ty, "location");
            if is_place && self.world.anchor(&o.name).is_none() && self.world.movable(&o.name).is_none() {
                return Err(ScenarioError::Invalid(format!("location `{}` has no anchor", o.name)));
            }
        }
        Ok(())
    }

    fn atoms(&self, items: &[String]) -> Result<Vec<u32>, ScenarioError> {
        items
            .iter()
            .map(|t| {
                GroundAtom::parse(t)
                    .and_then(|a| self.task.atom_id(&a))
                    .ok_or_else(|| ScenarioError::Invalid(format!("unknown atom `{t}`")))
            })
            .collect()
    }

    /// Symbolic state and world under a named condition.
    pub fn condition(&self, name: &str) -> Result<(State, WorldState), ScenarioError> {
        let c = self
            .conditions
            .iter()
            .find(|c| c.name == name)
            .ok_or_else(|| ScenarioError::Invalid(format!("unknown condition `{name}`")))?;
        let add = self.atoms(&c.add)?;
        let del = self.atoms(&c.del)?;
        let state: State = self
            .task
            .init
            .atoms()
            .iter()
            .copied()
            .filter(|a| !del.contains(a))
            .chain(add)
            .collect();
        let mut world = self.world.clone();
        if let Some(p) = c.pose {
            world.set_robot(p);
        }
        if let Some(id) = &c.held {
            let o = world
                .movable(id)
                .ok_or_else(|| ScenarioError::Invalid(format!("unknown held object `{id}`")))?
                .clone();
            let grasp = crate::world::find_grasps(&o, world.robot.gripper_width)
                .map_err(|e| ScenarioError::Invalid(e.to_string()))?
                .into_iter()
                .next()
                .ok_or_else(|| ScenarioError::Invalid(format!("`{id}` has no grasp")))?;
            let approach = grasp.approach_config(&o, world.robot.radius);
            let rel = approach.inverse().compose(&o.pose);
            let robot = world.robot.pose;
            world.set_object_pose(id, robot.compose(&rel));
            world.grasp(id);
        }
        if world.first_hit(&world.robot.pose, true).is_some() {
            return Err(ScenarioError::Invalid(format!("condition `{name}` starts in collision")));
        }
        Ok((state, world))
    }
}
