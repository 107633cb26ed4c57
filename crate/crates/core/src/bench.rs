//! Repeated planning runs summarized as CSV.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use crate::pipeline;
use crate::scenario::Scenario;

pub const HEADER: &str = "scenario,seed,c_star,wall_s,point_checks,segment_checks,replans";

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub scenario: String,
    pub seed: u64,
    /// `None` when planning failed.
    pub c_star: Option<f64>,
    pub wall_s: f64,
    pub point_checks: u64,
    pub segment_checks: u64,
    pub replans: usize,
}

impl Row {
    pub fn csv(&self) -> String {
        let c = self.c_star.map_or(String::new(), |c| format!("{c:.6}"));
        format!(
            "{},{},{},{:.6},{},{},{}",
            self.scenario, self.seed, c, self.wall_s, self.point_checks, self.segment_checks, self.replans
        )
    }
}

/// Plans and executes one scenario at one seed.
pub fn run_one(sc: &Scenario, seed: u64, eager: bool) -> Row {
    let mut sc = sc.clone();
    sc.set_seed(seed);
    sc.engine.eager |= eager;
    let t = Instant::now();
    let r = pipeline::run(&sc);
    let wall_s = t.elapsed().as_secs_f64();
    let mut row = Row {
        scenario: sc.name.clone(),
        seed,
        c_star: None,
        wall_s,
        point_checks: 0,
        segment_checks: 0,
        replans: 0,
    };
    if let Ok((planned, trace)) = r {
        row.c_star = Some(planned.incumbent.c_star);
        row.point_checks = planned.engine.counts.point_checks;
        row.segment_checks = planned.engine.counts.segment_checks;
        row.replans = trace.replans;
    }
    row
}

/// Every scenario at every seed, rows ordered by scenario then seed
/// whatever the number of worker threads.
pub fn bench(scenarios: &[Scenario], seeds: &[u64], eager: bool, jobs: usize) -> Vec<Row> {
    let work: Vec<(usize, u64)> = (0..scenarios.len())
        .flat_map(|i| seeds.iter().map(move |s| (i, *s)))
        .collect();
    let slots: Vec<Mutex<Option<Row>>> = work.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    std::thread::scope(|scope| {
        for _ in 0..jobs.max(1).min(work.len().max(1)) {
            scope.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::Relaxed);
                let Some(&(i, seed)) = work.get(k) else {
                    break;
                };
                let row = run_one(&scenarios[i], seed, eager);
                *slots[k].lock().expect("slot lock") = Some(row);
            });
        }
    });
    slots
        .into_iter()
        .map(|m| m.into_inner().expect("slot lock").expect("every job ran"))
        .collect()
}

pub fn to_csv(rows: &[Row]) -> String {
    let mut out = String::from(HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.csv());
        out.push('\n');
    }
    out
}
