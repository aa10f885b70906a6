//! Registry of example systems with their default runs.

use crate::config::{BoundarySpec, Config, SimulateSpec, SystemSource, Task, TrackSpec};
use crate::error::{Error, Result};
use crate::field::{parse_field, FieldForm};
use crate::geometry::Vec2;
use crate::simulate::Policy;
use crate::system::{SwitchedSystem, Tolerances, Window};

/// Caveat attached to the polar escape example.
pub const SIMULATION_ONLY: &str = "fields not GAS: analysis theorems inapplicable, simulation only";

pub struct Builtin {
    pub name: &'static str,
    pub description: &'static str,
    x: &'static str,
    y: &'static str,
    form: FieldForm,
}

const ANALYSIS: &[Task] = &[
    Task::Trace,
    Task::Classify,
    Task::Genericity,
    Task::Linearize,
    Task::Verdict,
];

static REGISTRY: &[Builtin] = &[
    Builtin {
        name: "radial_pair",
        description: "radial contraction and a contracting focus; Z = {0}",
        x: "(-x, -y)",
        y: "(y - x, -x - y)",
        form: FieldForm::Cartesian,
    },
    Builtin {
        name: "unit_circle",
        description: "Y = X + (x^2 + y^2 - 1)(-y, x); Z is the unit circle, direct, no tangency",
        x: "(-x, -y)",
        y: "(-x - (x^2 + y^2 - 1)*y, -y + (x^2 + y^2 - 1)*x)",
        form: FieldForm::Cartesian,
    },
    Builtin {
        name: "offset_circle_tangency",
        description: "Y = X + ((x - 2)^2 + y^2 - 1)(-y, x); direct circle with two tangency points",
        x: "(-x, -y)",
        y: "(-x - ((x - 2)^2 + y^2 - 1)*y, -y + ((x - 2)^2 + y^2 - 1)*x)",
        form: FieldForm::Cartesian,
    },
    Builtin {
        name: "davydov_type1",
        description: "fold normal form X = (1, x), Y = (-1, x); Z is the line x = 0",
        x: "(1, x)",
        y: "(-1, x)",
        form: FieldForm::Cartesian,
    },
    Builtin {
        name: "davydov_type2",
        description: "X = (1, y - x^2), Y = (-1, y - x^2); Z is the parabola y = x^2",
        x: "(1, y - x^2)",
        y: "(-1, y - x^2)",
        form: FieldForm::Cartesian,
    },
    Builtin {
        name: "paper_linear_counterexample",
        description: "linear pair with entry E = -201/200 - sqrt(401)/200; Q <= 0 vanishing on a line",
        x: "(-x/20 - y/(-201/200 - sqrt(401)/200), (-201/200 - sqrt(401)/200)*x - y/20)",
        y: "(-x/20 - y, x - y/20)",
        form: FieldForm::Cartesian,
    },
    Builtin {
        name: "remark_gus_pair",
        description: "polar GUS fields that escape under radius feedback",
        // slot X is the field tilted outward near integer radii, slot Y near half-integers
        x: "(r, theta - pi/2 - 60*bump(2*r) + 60*(bump(frac(r + 1/2)) - bump(r + 1/2)))",
        y: "(r, theta + pi/2 + 60*(2*bump(r) - bump(frac(r))))",
        form: FieldForm::Polar,
    },
    Builtin {
        name: "unstable_linear_pair",
        description: "two Hurwitz foci with an unstable switching law",
        x: "(-0.1*x + y, -10*x - 0.1*y)",
        y: "(-0.1*x + 10*y, -x - 0.1*y)",
        form: FieldForm::Cartesian,
    },
];

pub fn registry() -> &'static [Builtin] {
    REGISTRY
}

pub fn names() -> impl Iterator<Item = &'static str> {
    REGISTRY.iter().map(|b| b.name)
}

fn lookup(name: &str) -> Result<&'static Builtin> {
    REGISTRY
        .iter()
        .find(|b| b.name == name)
        .ok_or_else(|| Error::UnknownBuiltin {
            name: name.to_string(),
            available: names().collect::<Vec<_>>().join(", "),
        })
}

pub fn system(name: &str) -> Result<SwitchedSystem> {
    let b = lookup(name)?;
    let mut s = SwitchedSystem::new(b.name, parse_field(b.x, b.form)?, parse_field(b.y, b.form)?);
    s.x.name = "X".into();
    s.y.name = "Y".into();
    if b.name == "remark_gus_pair" {
        s.caveats.push(SIMULATION_ONLY.to_string());
    }
    Ok(s)
}

/// Field sources `(x, y, form)` of a builtin.
pub fn sources(name: &str) -> Result<(&'static str, &'static str, FieldForm)> {
    let b = lookup(name)?;
    Ok((b.x, b.y, b.form))
}

fn sim(policy: Policy, start: Vec2, t_max: f64, h: f64, count: usize) -> SimulateSpec {
    SimulateSpec {
        policy,
        start,
        t_max,
        h,
        count,
        csv: None,
    }
}

/// Default run for a builtin.
pub fn config(name: &str) -> Result<Config> {
    let b = lookup(name)?;
    let mut tasks = ANALYSIS.to_vec();
    let mut simulations = Vec::new();
    let mut boundaries = Vec::new();
    let mut tracks = Vec::new();
    let p10 = Vec2::new(1.0, 0.0);
    let window = match name {
        "radial_pair" => {
            tasks.extend([Task::Simulate, Task::Boundary]);
            simulations.push(sim(Policy::Random { mean_dwell: 0.5 }, p10, 50.0, 1e-2, 10));
            simulations.push(sim(Policy::GreedyRadial, p10, 50.0, 1e-2, 1));
            boundaries.push(BoundarySpec { start: p10 });
            Window::square(3.0, 120)
        }
        "unit_circle" => {
            tasks.extend([Task::Simulate, Task::Boundary]);
            simulations.push(sim(Policy::GreedyRadial, Vec2::new(2.0, 0.0), 30.0, 1e-2, 1));
            simulations.push(sim(Policy::Random { mean_dwell: 0.5 }, Vec2::new(2.0, 0.0), 30.0, 1e-2, 5));
            boundaries.push(BoundarySpec { start: Vec2::new(2.0, 0.0) });
            Window::square(3.0, 120)
        }
        "offset_circle_tangency" => {
            tasks.push(Task::Simulate);
            simulations.push(sim(Policy::GreedyRadial, Vec2::new(3.5, 0.0), 30.0, 1e-2, 1));
            Window::square(4.0, 160)
        }
        "davydov_type1" => {
            tasks.extend([Task::Simulate, Task::Track]);
            simulations.push(sim(Policy::Constant { u: 0.5 }, Vec2::new(0.0, 0.5), 5.0, 1e-2, 1));
            for advance in [1.0, -1.0] {
                tracks.push(TrackSpec {
                    component: 0,
                    start: Vec2::new(0.05, 0.0),
                    advance,
                    tube: 0.1,
                    target: 1.05,
                    t_max: 200.0,
                    h: 1e-3,
                });
            }
            Window::square(2.0, 80)
        }
        "davydov_type2" => {
            tasks.push(Task::Simulate);
            simulations.push(sim(Policy::Chatter { period: 0.01, duty: 0.5 }, Vec2::new(0.5, 0.5), 5.0, 1e-3, 1));
            Window::square(2.0, 80)
        }
        "paper_linear_counterexample" => {
            tasks.push(Task::Simulate);
            simulations.push(sim(Policy::GreedyRadial, p10, 50.0, 1e-2, 1));
            Window::square(2.0, 80)
        }
        "remark_gus_pair" => {
            tasks = vec![Task::Simulate];
            simulations.push(sim(Policy::GusFeedback, p10, 100.0, 1e-3, 1));
            simulations.push(sim(Policy::Constant { u: 0.0 }, p10, 50.0, 1e-3, 1));
            simulations.push(sim(Policy::Constant { u: 1.0 }, p10, 50.0, 1e-3, 1));
            Window::square(12.0, 96)
        }
        "unstable_linear_pair" => {
            tasks.push(Task::Simulate);
            simulations.push(sim(Policy::GreedyRadial, p10, 20.0, 1e-3, 1));
            Window::square(2.0, 80)
        }
        _ => unreachable!("registry and defaults list the same names"),
    };
    Ok(Config {
        name: b.name.to_string(),
        system: SystemSource::Builtin { name: b.name.to_string() },
        window,
        tolerances: Tolerances::default(),
        tasks,
        seed: 0,
        simulations,
        boundaries,
        tracks,
        svg: None,
    })
}
