//! Run the tasks of a configuration and collect one report.
//!
//! A failing task is recorded in `errors` and the tasks that need its output
//! are skipped; the others still run. The JSON form of the report depends
//! only on the configuration (wall-times are opt-in).

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::collinearity::{analyze, check_genericity, trace_zero_set, CollinearitySet, GenericityReport, Orientation, TriState};
use crate::config::{Config, Task};
use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::linear::{hurwitz, linear_guas_test, linearize, LinearVerdict, Mat2};
use crate::simulate::{
    accessible_boundary, count_crossings, integrate, track_component, AccessibleRegion, BoundaryOptions, Construction,
    CrossingReport, IntegrateOptions, Status, TrackOptions, Trajectory,
};
use crate::system::SwitchedSystem;
use crate::verdict::{decide, Verdict};

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RunOptions {
    /// Record wall-clock time per task (makes the report non-reproducible).
    pub timings: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SystemEcho {
    pub name: String,
    pub x: String,
    pub x_form: String,
    pub y: String,
    pub y_form: String,
    pub smooth: bool,
    pub caveats: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComponentSummary {
    pub id: usize,
    pub orientation: Option<Orientation>,
    pub closed: bool,
    pub vertices: usize,
    pub touches_border: bool,
    pub encloses_origin: bool,
    pub q_sign_change: bool,
    pub signed_area: Option<f64>,
    /// `[xmin, ymin, xmax, ymax]`.
    pub bbox: [f64; 4],
    pub tangencies: Vec<Vec2>,
    pub tangencies_checked: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CollinearitySummary {
    pub components: Vec<ComponentSummary>,
    pub origin_isolated: TriState,
    pub degenerate: bool,
    pub origin_excluded: bool,
}

impl CollinearitySummary {
    fn new(z: &CollinearitySet) -> Self {
        let components = z
            .components
            .iter()
            .map(|c| {
                let bbox = c.polyline.iter().fold(
                    [f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY],
                    |b, p| [b[0].min(p.x), b[1].min(p.y), b[2].max(p.x), b[3].max(p.y)],
                );
                ComponentSummary {
                    id: c.id,
                    orientation: c.orientation,
                    closed: c.closed,
                    vertices: c.polyline.len(),
                    touches_border: c.touches_border,
                    encloses_origin: c.encloses_origin,
                    q_sign_change: c.q_sign_change,
                    signed_area: c.signed_area,
                    bbox,
                    tangencies: c.tangencies.clone(),
                    tangencies_checked: c.tangencies_checked,
                }
            })
            .collect();
        CollinearitySummary {
            components,
            origin_isolated: z.origin_isolated,
            degenerate: z.degenerate,
            origin_excluded: z.origin_excluded,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinearizationReport {
    pub a: Mat2,
    pub b: Mat2,
    pub a_hurwitz: Option<bool>,
    pub b_hurwitz: Option<bool>,
    pub verdict: Option<LinearVerdict>,
    /// Why the linear test did not run.
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub status: Status,
    pub t_end: f64,
    pub final_point: Vec2,
    pub final_radius: f64,
    pub max_radius: f64,
    pub min_radius: f64,
    pub switches: usize,
    pub samples: usize,
    pub failure: Option<String>,
}

impl RunSummary {
    fn new(t: &Trajectory) -> Self {
        let last = t.last();
        RunSummary {
            status: t.status,
            t_end: last.t,
            final_point: last.p,
            final_radius: last.p.norm(),
            max_radius: t.max_radius(),
            min_radius: t.min_radius(),
            switches: t.switches(),
            samples: t.samples.len(),
            failure: t.failure.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationSummary {
    pub policy: String,
    pub start: Vec2,
    pub t_max: f64,
    pub h: f64,
    pub seed: u64,
    pub runs: Vec<RunSummary>,
    pub converged: usize,
    pub escaped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundarySummary {
    pub start: Vec2,
    pub construction: Option<Construction>,
    pub vertices: usize,
    pub area: Option<f64>,
    pub simple: Option<bool>,
    pub mean_field_points_inward: Option<bool>,
    pub crossings: Option<CrossingReport>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrackSummary {
    pub component: usize,
    pub start: Vec2,
    pub advance: f64,
    pub tube: f64,
    pub side: f64,
    pub progress: f64,
    pub max_distance: f64,
    pub violations: usize,
    pub elapsed: f64,
    pub final_point: Vec2,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TaskError {
    pub task: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Timing {
    pub task: String,
    pub seconds: f64,
}

/// Geometry kept for figures and CSV export; not serialized.
#[derive(Debug, Clone, Default)]
pub struct Artifacts {
    pub zset: Option<CollinearitySet>,
    /// First trajectory of each simulation spec.
    pub trajectories: Vec<Trajectory>,
    pub regions: Vec<AccessibleRegion>,
    pub tracks: Vec<Trajectory>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalysisReport {
    pub config: Config,
    pub system: SystemEcho,
    pub collinearity: Option<CollinearitySummary>,
    pub genericity: Option<GenericityReport>,
    pub linearization: Option<LinearizationReport>,
    pub verdict: Option<Verdict>,
    pub simulations: Vec<SimulationSummary>,
    pub boundaries: Vec<BoundarySummary>,
    pub tracks: Vec<TrackSummary>,
    pub errors: Vec<TaskError>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timings: Option<Vec<Timing>>,
    #[serde(skip)]
    pub artifacts: Artifacts,
}

impl AnalysisReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Human-readable summary.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "system: {}", self.system.name);
        let _ = writeln!(s, "  X = {} [{}]", self.system.x, self.system.x_form);
        let _ = writeln!(s, "  Y = {} [{}]", self.system.y, self.system.y_form);
        for c in &self.system.caveats {
            let _ = writeln!(s, "  caveat: {c}");
        }
        if let Some(z) = &self.collinearity {
            let _ = writeln!(
                s,
                "collinearity: {} component(s), origin isolated: {:?}, degenerate: {}",
                z.components.len(),
                z.origin_isolated,
                z.degenerate
            );
            for c in &z.components {
                let _ = writeln!(
                    s,
                    "  #{} {:?} {} vertices={} border={} sign_change={} tangencies={}",
                    c.id,
                    c.orientation,
                    if c.closed { "closed" } else { "open" },
                    c.vertices,
                    c.touches_border,
                    c.q_sign_change,
                    c.tangencies.len()
                );
                for t in &c.tangencies {
                    let _ = writeln!(s, "      tangency at ({:.6}, {:.6})", t.x, t.y);
                }
            }
        }
        if let Some(g) = &self.genericity {
            let _ = writeln!(s, "genericity: G1 {:?}, G2 {:?}, G3 {:?}", g.g1.holds, g.g2.holds, g.g3.holds);
        }
        if let Some(l) = &self.linearization {
            match (&l.verdict, &l.note) {
                (Some(v), _) => {
                    let _ = writeln!(
                        s,
                        "linearization: {} (worst gain per revolution {:?}, {} dwell ray(s))",
                        v.class.as_str(),
                        v.worst_cycle_gain,
                        v.dwell_rays.len()
                    );
                }
                (None, Some(n)) => {
                    let _ = writeln!(s, "linearization: {n}");
                }
                _ => {}
            }
        }
        if let Some(v) = &self.verdict {
            let _ = writeln!(s, "verdict: {}", v.class);
            for r in &v.rules_fired {
                let _ = writeln!(s, "  rule {} -> {}: {}", r.rule_id, r.conclusion, r.citation);
            }
            for c in &v.caveats {
                let _ = writeln!(s, "  caveat: {c}");
            }
        }
        for sim in &self.simulations {
            let _ = writeln!(
                s,
                "simulate {} from ({}, {}): {} run(s), {} converged, {} escaped, max radius {:.4e}",
                sim.policy,
                sim.start.x,
                sim.start.y,
                sim.runs.len(),
                sim.converged,
                sim.escaped,
                sim.runs.iter().map(|r| r.max_radius).fold(0.0, f64::max)
            );
        }
        for b in &self.boundaries {
            let _ = writeln!(
                s,
                "boundary from ({}, {}): {:?}, {} vertices, area {:?}",
                b.start.x, b.start.y, b.construction, b.vertices, b.area
            );
            if let Some(c) = &b.crossings {
                let _ = writeln!(s, "  crossings n(q) = {}", c.count);
            }
        }
        for t in &self.tracks {
            let _ = writeln!(
                s,
                "track component {} advance {:+}: progress {:.4}, max distance {:.4e}, violations {}, final ({:.4}, {:.4})",
                t.component, t.advance, t.progress, t.max_distance, t.violations, t.final_point.x, t.final_point.y
            );
        }
        for e in &self.errors {
            let _ = writeln!(s, "error in {}: {}", e.task, e.message);
        }
        s
    }
}

/// Tasks to run, closed under dependencies.
fn closure(tasks: &[Task]) -> BTreeSet<Task> {
    let mut set: BTreeSet<Task> = tasks.iter().copied().collect();
    if set.contains(&Task::Verdict) {
        set.extend([Task::Trace, Task::Classify, Task::Genericity, Task::Linearize]);
    }
    if set.contains(&Task::Genericity) || set.contains(&Task::Track) {
        set.extend([Task::Trace, Task::Classify]);
    }
    if set.contains(&Task::Classify) {
        set.insert(Task::Trace);
    }
    set
}

struct Timer {
    on: bool,
    list: Vec<Timing>,
}

impl Timer {
    fn time<T>(&mut self, task: Task, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        if self.on {
            self.list.push(Timing {
                task: task.as_str().into(),
                seconds: start.elapsed().as_secs_f64(),
            });
        }
        out
    }
}

pub fn run(cfg: &Config) -> Result<AnalysisReport> {
    run_with(cfg, &RunOptions::default())
}

/// Derive the seed of simulation spec `k`.
pub fn spec_seed(seed: u64, k: usize) -> u64 {
    seed ^ (k as u64).wrapping_mul(0xD1B5_4A32_D192_ED03)
}

pub fn run_with(cfg: &Config, opts: &RunOptions) -> Result<AnalysisReport> {
    cfg.validate()?;
    let sys = cfg.build_system()?;
    let w = cfg.window;
    let tol = cfg.tolerances;
    let tasks = closure(&cfg.tasks);
    let mut errors = Vec::new();
    let mut timer = Timer { on: opts.timings, list: Vec::new() };
    let mut record = |task: Task, e: Error| {
        errors.push(TaskError {
            task: task.as_str().into(),
            message: e.to_string(),
        })
    };

    let system = SystemEcho {
        name: sys.name.clone(),
        x: sys.x.source.clone(),
        x_form: sys.x.form.to_string(),
        y: sys.y.source.clone(),
        y_form: sys.y.form.to_string(),
        smooth: sys.is_smooth(),
        caveats: sys.caveats.clone(),
    };

    let mut zset = None;
    if tasks.contains(&Task::Trace) {
        let full = tasks.contains(&Task::Classify);
        let res = timer.time(Task::Trace, || {
            sys.require_smooth()?;
            if full {
                analyze(&sys, &w, &tol)
            } else {
                trace_zero_set(&sys, &w, &tol)
            }
        });
        match res {
            Ok(z) => zset = Some(z),
            Err(e) => record(if full { Task::Classify } else { Task::Trace }, e),
        }
    }

    let genericity = match (&zset, tasks.contains(&Task::Genericity)) {
        (Some(z), true) => Some(timer.time(Task::Genericity, || check_genericity(&sys, z, &tol))),
        _ => None,
    };

    let mut linearization = None;
    if tasks.contains(&Task::Linearize) {
        let res = timer.time(Task::Linearize, || linearization_report(&sys, &tol));
        match res {
            Ok(l) => linearization = Some(l),
            Err(e) => record(Task::Linearize, e),
        }
    }

    let verdict = match (&zset, &genericity, tasks.contains(&Task::Verdict)) {
        (Some(z), Some(g), true) => {
            let lin = linearization.as_ref().and_then(|l| l.verdict.as_ref());
            Some(timer.time(Task::Verdict, || decide(z, g, lin, &sys, &w)))
        }
        _ => None,
    };

    let mut artifacts = Artifacts::default();
    let mut simulations = Vec::new();
    if tasks.contains(&Task::Simulate) {
        let out = timer.time(Task::Simulate, || simulate_all(&sys, cfg));
        for (summary, first) in out {
            simulations.push(summary);
            artifacts.trajectories.push(first);
        }
    }

    let mut boundaries = Vec::new();
    if tasks.contains(&Task::Boundary) {
        let bopts = BoundaryOptions {
            conv_tol: tol.conv_tol,
            ..BoundaryOptions::default()
        };
        for spec in &cfg.boundaries {
            let res = timer.time(Task::Boundary, || -> Result<(BoundarySummary, AccessibleRegion)> {
                let region = accessible_boundary(&sys, spec.start, &bopts)?;
                let mut notes = Vec::new();
                let crossings = match &zset {
                    Some(z) => {
                        if !z.components.is_empty() {
                            notes.push("Z is not {0}: boundary construction is heuristic".into());
                        }
                        match count_crossings(&sys, z, spec.start, &bopts) {
                            Ok(c) => Some(c),
                            Err(e) => {
                                notes.push(format!("crossing count unavailable: {e}"));
                                None
                            }
                        }
                    }
                    None => None,
                };
                Ok((
                    BoundarySummary {
                        start: spec.start,
                        construction: Some(region.construction),
                        vertices: region.boundary.len(),
                        area: Some(region.area()),
                        simple: Some(region.simple),
                        mean_field_points_inward: Some(region.mean_field_points_inward),
                        crossings,
                        notes,
                    },
                    region,
                ))
            });
            match res {
                Ok((s, r)) => {
                    boundaries.push(s);
                    artifacts.regions.push(r);
                }
                Err(e) => record(Task::Boundary, e),
            }
        }
    }

    let mut tracks = Vec::new();
    if tasks.contains(&Task::Track) {
        if let Some(z) = &zset {
            for spec in &cfg.tracks {
                let res = timer.time(Task::Track, || {
                    let c = z
                        .components
                        .iter()
                        .find(|c| c.id == spec.component)
                        .ok_or_else(|| Error::Invalid(format!("no component with id {}", spec.component)))?;
                    let topts = TrackOptions {
                        tube: spec.tube,
                        advance: spec.advance,
                        target: spec.target,
                        t_max: spec.t_max,
                        h: spec.h,
                    };
                    track_component(&sys, c, spec.start, &topts, &tol)
                });
                match res {
                    Ok(r) => {
                        tracks.push(TrackSummary {
                            component: spec.component,
                            start: spec.start,
                            advance: spec.advance,
                            tube: spec.tube,
                            side: r.side,
                            progress: r.progress,
                            max_distance: r.max_distance,
                            violations: r.violations,
                            elapsed: r.elapsed,
                            final_point: r.trajectory.last().p,
                        });
                        artifacts.tracks.push(r.trajectory);
                    }
                    Err(e) => record(Task::Track, e),
                }
            }
        }
    }

    artifacts.zset = zset.clone();
    Ok(AnalysisReport {
        config: cfg.clone(),
        system,
        collinearity: zset.as_ref().map(CollinearitySummary::new),
        genericity,
        linearization,
        verdict,
        simulations,
        boundaries,
        tracks,
        errors,
        timings: opts.timings.then_some(timer.list),
        artifacts,
    })
}

fn linearization_report(sys: &SwitchedSystem, tol: &crate::system::Tolerances) -> Result<LinearizationReport> {
    sys.require_smooth()?;
    if !sys.origin_is_equilibrium(tol.field_zero_tol) {
        let (a, b) = sys.field_jets(Vec2::ZERO).map(|(x, y)| (x.jacobian, y.jacobian))?;
        return Ok(LinearizationReport {
            a,
            b,
            a_hurwitz: None,
            b_hurwitz: None,
            verdict: None,
            note: Some("the origin is not an equilibrium; linear test not applicable".into()),
        });
    }
    let pair = linearize(sys)?;
    let ha = hurwitz(&pair.a, tol.hurwitz_tol);
    let hb = hurwitz(&pair.b, tol.hurwitz_tol);
    let (verdict, note) = match (&ha, &hb) {
        (Ok(true), Ok(true)) => (
            Some(linear_guas_test(&pair, tol.n_angles, tol.gain_tol, tol.rate_tol, tol.hurwitz_tol)?),
            None,
        ),
        (Err(e), _) | (_, Err(e)) => (None, Some(format!("linear test not applicable: {e}"))),
        _ => (None, Some("linearized pair not Hurwitz; linear test not applicable".into())),
    };
    Ok(LinearizationReport {
        a: pair.a,
        b: pair.b,
        a_hurwitz: ha.ok(),
        b_hurwitz: hb.ok(),
        verdict,
        note,
    })
}

fn simulate_all(sys: &SwitchedSystem, cfg: &Config) -> Vec<(SimulationSummary, Trajectory)> {
    cfg.simulations
        .iter()
        .enumerate()
        .map(|(k, spec)| {
            let seed = spec_seed(cfg.seed, k);
            let opts = IntegrateOptions::new(spec.t_max, spec.h, spec.start, &cfg.tolerances);
            let trajs: Vec<Trajectory> = (0..spec.count as u64)
                .into_par_iter()
                .map(|i| {
                    let policy = spec.policy.resolve(seed, i, spec.t_max);
                    integrate(sys, &policy, spec.start, &opts).unwrap_or_else(|e| Trajectory {
                        samples: vec![crate::simulate::TrajSample { t: 0.0, p: spec.start, u: 0.0 }],
                        status: Status::StepFailure,
                        t_max: spec.t_max,
                        failure: Some(e.to_string()),
                    })
                })
                .collect();
            let runs: Vec<RunSummary> = trajs.iter().map(RunSummary::new).collect();
            let summary = SimulationSummary {
                policy: spec.policy.to_string(),
                start: spec.start,
                t_max: spec.t_max,
                h: spec.h,
                seed,
                converged: runs.iter().filter(|r| r.status == Status::Converged).count(),
                escaped: runs.iter().filter(|r| r.status == Status::Escaped).count(),
                runs,
            };
            let first = trajs.into_iter().next().expect("count is positive");
            (summary, first)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtins;
    use crate::verdict::StabilityClass;

    #[test]
    fn radial_pair_default_run() {
        let r = run(&builtins::config("radial_pair").unwrap()).unwrap();
        assert!(r.errors.is_empty(), "{:?}", r.errors);
        assert_eq!(r.verdict.as_ref().unwrap().class, StabilityClass::Guas);
        assert_eq!(r.boundaries.len(), 1);
        assert!(r.simulations.iter().all(|s| s.converged == s.runs.len()));
        assert!(r.timings.is_none());
    }

    #[test]
    fn failing_task_is_recorded() {
        let r = run(&builtins::config("remark_gus_pair").map(|mut c| {
            c.tasks.push(Task::Trace);
            c
        }).unwrap())
        .unwrap();
        assert_eq!(r.errors.len(), 1);
        assert!(r.errors[0].message.contains("piecewise smooth"), "{}", r.errors[0].message);
        assert_eq!(r.simulations.len(), 3);
    }
}
