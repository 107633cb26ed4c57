//! Timed motion paths and the execution-time effort model.

use serde::{Deserialize, Serialize};

use super::{Config, Hit, Robot};

/// Geometric role of a symbolic action, derived from its schema name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionKind {
    MoveBase,
    MoveArm,
    Pick,
    Place,
    /// No geometric footprint; zero effort.
    Symbolic,
}

impl ActionKind {
    pub fn from_schema(name: &str) -> Self {
        let key: String = name
            .chars()
            .filter(|c| *c != '_' && *c != '-')
            .flat_map(char::to_lowercase)
            .collect();
        match key.as_str() {
            "movebase" | "move" => ActionKind::MoveBase,
            "movearm" => ActionKind::MoveArm,
            "pick" => ActionKind::Pick,
            "place" => ActionKind::Place,
            _ => ActionKind::Symbolic,
        }
    }

    /// Fixed manipulation time added on top of base motion.
    pub fn surcharge(self, robot: &Robot) -> f64 {
        match self {
            ActionKind::Pick => robot.pick_time_s,
            ActionKind::Place => robot.place_time_s,
            ActionKind::MoveArm => robot.arm_time_s,
            ActionKind::MoveBase | ActionKind::Symbolic => 0.0,
        }
    }
}

/// Base motion time: arc length / speed plus total rotation / angular speed.
pub fn travel_time(configs: &[Config], robot: &Robot) -> f64 {
    configs
        .windows(2)
        .map(|w| w[0].dist(&w[1]) / robot.speed_mps + w[0].dtheta(&w[1]).abs() / robot.ang_speed_rps)
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 4]", into = "[f64; 4]")]
pub struct TimedConfig {
    pub t: f64,
    pub c: Config,
}

impl From<[f64; 4]> for TimedConfig {
    fn from(v: [f64; 4]) -> Self {
        TimedConfig {
            t: v[0],
            c: Config::new(v[1], v[2], v[3]),
        }
    }
}

impl From<TimedConfig> for [f64; 4] {
    fn from(t: TimedConfig) -> Self {
        [t.t, t.c.x, t.c.y, t.c.theta]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Validation {
    Lazy,
    Valid,
    Invalid { hit: Hit, segment: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotionPath {
    /// Ground action index this motion executes.
    pub action: usize,
    pub waypoints: Vec<TimedConfig>,
    pub validated: Validation,
    pub effort_s: f64,
}

impl MotionPath {
    /// Time-parameterizes `configs` with the effort model; a positive
    /// surcharge is spent standing at the final configuration.
    pub fn timed(action: usize, configs: &[Config], robot: &Robot, surcharge: f64) -> Self {
        assert!(!configs.is_empty(), "motion path needs a configuration");
        let mut t = 0.0;
        let mut waypoints = vec![TimedConfig { t, c: configs[0] }];
        for w in configs.windows(2) {
            let dt = travel_time(w, robot);
            if dt <= 0.0 {
                continue;
            }
            t += dt;
            waypoints.push(TimedConfig { t, c: w[1] });
        }
        if surcharge > 0.0 {
            t += surcharge;
            let last = waypoints.last().expect("non-empty").c;
            waypoints.push(TimedConfig { t, c: last });
        }
        MotionPath {
            action,
            waypoints,
            validated: Validation::Lazy,
            effort_s: t,
        }
    }

    pub fn configs(&self) -> Vec<Config> {
        self.waypoints.iter().map(|w| w.c).collect()
    }

    pub fn start(&self) -> Config {
        self.waypoints[0].c
    }

    pub fn end(&self) -> Config {
        self.waypoints.last().expect("non-empty").c
    }

    pub fn duration(&self) -> f64 {
        self.waypoints.last().expect("non-empty").t - self.waypoints[0].t
    }

    /// Configuration at elapsed time `t` from the path start.
    pub fn config_at(&self, t: f64) -> Config {
        let t = t + self.waypoints[0].t;
        for w in self.waypoints.windows(2) {
            if t <= w[1].t {
                let span = w[1].t - w[0].t;
                let s = if span > 0.0 { ((t - w[0].t) / span).clamp(0.0, 1.0) } else { 1.0 };
                return w[0].c.lerp(&w[1].c, s);
            }
        }
        self.end()
    }

    /// Index of the segment active at elapsed time `t`.
    pub fn segment_at(&self, t: f64) -> usize {
        let t = t + self.waypoints[0].t;
        self.waypoints
            .windows(2)
            .position(|w| t <= w[1].t)
            .unwrap_or(self.waypoints.len().saturating_sub(2))
    }

    /// Appends `o`, shifting its clock to start where `self` ends.
    pub fn concat(&self, o: &MotionPath) -> MotionPath {
        let shift = self.waypoints.last().expect("non-empty").t - o.waypoints[0].t;
        let mut waypoints = self.waypoints.clone();
        for w in &o.waypoints[1..] {
            waypoints.push(TimedConfig { t: w.t + shift, c: w.c });
        }
        let mut out = MotionPath {
            action: self.action,
            waypoints,
            validated: Validation::Lazy,
            effort_s: 0.0,
        };
        out.effort_s = out.duration();
        out
    }
}

/// Effort of `path` executing an action of kind `kind`, from geometry alone.
pub fn effort(path: &MotionPath, kind: ActionKind, robot: &Robot) -> f64 {
    travel_time(&path.configs(), robot) + kind.surcharge(robot)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn robot() -> Robot {
        Robot {
            pose: Config::default(),
            radius: 0.25,
            speed_mps: 0.5,
            ang_speed_rps: 1.0,
            pick_time_s: 3.0,
            place_time_s: 2.0,
            arm_time_s: 1.0,
            gripper_width: 0.2,
        }
    }

    #[test]
    fn straight_two_metres() {
        let r = robot();
        let p = MotionPath::timed(0, &[Config::new(0.0, 0.0, 0.0), Config::new(2.0, 0.0, 0.0)], &r, 0.0);
        assert_eq!(p.effort_s, 4.0);
        assert_eq!(effort(&p, ActionKind::MoveBase, &r), 4.0);
    }

    #[test]
    fn pick_in_place() {
        let r = robot();
        let c = Config::new(1.0, 1.0, 0.0);
        let p = MotionPath::timed(0, &[c], &r, ActionKind::Pick.surcharge(&r));
        assert_eq!(p.effort_s, 3.0);
        assert_eq!(effort(&p, ActionKind::Pick, &r), 3.0);
        assert_eq!(p.duration(), p.effort_s);
    }

    #[test]
    fn rotation_adds() {
        let r = robot();
        let p = MotionPath::timed(0, &[Config::new(0.0, 0.0, 0.0), Config::new(1.0, 0.0, 1.5)], &r, 0.0);
        assert!((p.effort_s - 3.5).abs() < 1e-12);
        assert_eq!(p.config_at(0.0), Config::new(0.0, 0.0, 0.0));
        assert!(p.config_at(10.0).within(&Config::new(1.0, 0.0, 1.5), 1e-12, 1e-12));
    }

    #[test]
    fn kinds_from_names() {
        assert_eq!(ActionKind::from_schema("Move_base"), ActionKind::MoveBase);
        assert_eq!(ActionKind::from_schema("move-arm"), ActionKind::MoveArm);
        assert_eq!(ActionKind::from_schema("PICK"), ActionKind::Pick);
        assert_eq!(ActionKind::from_schema("stack"), ActionKind::Symbolic);
    }
}
