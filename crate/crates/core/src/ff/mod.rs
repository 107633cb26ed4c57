//! FF-style satisficing planner: relaxed-plan heuristic, helpful actions,
//! enforced hill-climbing with a greedy best-first fallback.

mod rpg;
mod search;

pub use rpg::{
    build_rpg, evaluate, extract_relaxed_plan, helpful_actions, Evaluation, RelaxedPlan, Rpg,
    RpgOutcome,
};
pub use search::{
    best_first, ehc, tp, DeadEnd, Plan, Planner, PlannerConfig, SearchStats, Unsolvable,
};
