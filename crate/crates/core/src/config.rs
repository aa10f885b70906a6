//! Line-oriented run configuration.
//!
//! ```text
//! [system]
//! builtin = radial_pair          # or: x = (...), x_form = cartesian, y = ..., y_form = ...
//! [window]
//! xmin = -3
//! ...
//! [tolerances]
//! g1_tol = 1e-6
//! [tasks]
//! run = trace, classify, genericity, linearize, verdict, simulate
//! seed = 7
//! [simulate]                     # repeatable, likewise [boundary] and [track]
//! policy = random 0.5
//! start = 1, 0
//! ```
//!
//! With `builtin`, the registry entry supplies every section the file leaves
//! out. `#` starts a comment. `Display` writes a file that parses back to an
//! equal value.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::builtins;
use crate::error::{Error, Result};
use crate::field::{parse_field, FieldForm};
use crate::geometry::Vec2;
use crate::simulate::Policy;
use crate::system::{SwitchedSystem, Tolerances, Window};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Trace,
    Classify,
    Genericity,
    Linearize,
    Verdict,
    Simulate,
    Boundary,
    Track,
}

impl Task {
    pub const ALL: [Task; 8] = [
        Task::Trace,
        Task::Classify,
        Task::Genericity,
        Task::Linearize,
        Task::Verdict,
        Task::Simulate,
        Task::Boundary,
        Task::Track,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Task::Trace => "trace",
            Task::Classify => "classify",
            Task::Genericity => "genericity",
            Task::Linearize => "linearize",
            Task::Verdict => "verdict",
            Task::Simulate => "simulate",
            Task::Boundary => "boundary",
            Task::Track => "track",
        }
    }
}

impl FromStr for Task {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Task::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| Error::Invalid(format!("unknown task `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SystemSource {
    Builtin { name: String },
    Fields { x: String, x_form: FieldForm, y: String, y_form: FieldForm },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulateSpec {
    pub policy: Policy,
    pub start: Vec2,
    pub t_max: f64,
    pub h: f64,
    /// Number of trajectories; random policies draw a new schedule for each.
    pub count: usize,
    /// CSV export path for the first trajectory, relative to the output directory.
    pub csv: Option<String>,
}

impl Default for SimulateSpec {
    fn default() -> Self {
        SimulateSpec {
            policy: Policy::Constant { u: 1.0 },
            start: Vec2::new(1.0, 0.0),
            t_max: 20.0,
            h: 1e-3,
            count: 1,
            csv: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundarySpec {
    pub start: Vec2,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrackSpec {
    pub component: usize,
    pub start: Vec2,
    pub advance: f64,
    pub tube: f64,
    pub target: f64,
    pub t_max: f64,
    pub h: f64,
}

impl Default for TrackSpec {
    fn default() -> Self {
        TrackSpec {
            component: 0,
            start: Vec2::ZERO,
            advance: 1.0,
            tube: 0.1,
            target: 1.0,
            t_max: 200.0,
            h: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Config {
    pub name: String,
    pub system: SystemSource,
    pub window: Window,
    pub tolerances: Tolerances,
    pub tasks: Vec<Task>,
    pub seed: u64,
    pub simulations: Vec<SimulateSpec>,
    pub boundaries: Vec<BoundarySpec>,
    pub tracks: Vec<TrackSpec>,
    /// SVG figure path, relative to the output directory.
    pub svg: Option<String>,
}

impl Config {
    /// Config for explicit fields with default window, tolerances and tasks.
    pub fn from_fields(name: &str, x: &str, x_form: FieldForm, y: &str, y_form: FieldForm) -> Self {
        Config {
            name: name.to_string(),
            system: SystemSource::Fields {
                x: x.to_string(),
                x_form,
                y: y.to_string(),
                y_form,
            },
            window: Window::square(2.0, 80),
            tolerances: Tolerances::default(),
            tasks: vec![Task::Trace, Task::Classify, Task::Genericity, Task::Linearize, Task::Verdict],
            seed: 0,
            simulations: Vec::new(),
            boundaries: Vec::new(),
            tracks: Vec::new(),
            svg: None,
        }
    }

    pub fn has_task(&self, t: Task) -> bool {
        self.tasks.contains(&t)
    }

    pub fn build_system(&self) -> Result<SwitchedSystem> {
        match &self.system {
            SystemSource::Builtin { name } => builtins::system(name),
            SystemSource::Fields { x, x_form, y, y_form } => Ok(SwitchedSystem::new(
                self.name.clone(),
                parse_field(x, *x_form)?,
                parse_field(y, *y_form)?,
            )),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.window.validate()?;
        for s in &self.simulations {
            s.policy.validate()?;
            if !(s.h > 0.0 && s.t_max > 0.0) || s.count == 0 {
                return Err(Error::Invalid("simulate: h, t_max and count must be positive".into()));
            }
        }
        for t in &self.tracks {
            if t.advance.abs() != 1.0 || !(t.tube > 0.0) || !(t.h > 0.0) || !(t.t_max > 0.0) {
                return Err(Error::Invalid("track: advance must be +1 or -1; tube, h and t_max positive".into()));
            }
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        parse(text)
    }
}

impl FromStr for Config {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        parse(s)
    }
}

fn cfg_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Config { line, msg: msg.into() }
}

fn num<T: FromStr>(line: usize, key: &str, v: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    v.parse::<T>().map_err(|e| cfg_err(line, format!("`{key}`: {e}")))
}

fn point(line: usize, key: &str, v: &str) -> Result<Vec2> {
    let parts: Vec<&str> = v.split(',').map(str::trim).collect();
    if parts.len() != 2 {
        return Err(cfg_err(line, format!("`{key}` must be `x, y`")));
    }
    Ok(Vec2::new(num(line, key, parts[0])?, num(line, key, parts[1])?))
}

fn set_tolerance(t: &mut Tolerances, line: usize, key: &str, v: &str) -> Result<()> {
    match key {
        "refine_tol" => t.refine_tol = num(line, key, v)?,
        "g1_tol" => t.g1_tol = num(line, key, v)?,
        "g2_tol" => t.g2_tol = num(line, key, v)?,
        "g3_tol" => t.g3_tol = num(line, key, v)?,
        "probe_dist" => t.probe_dist = if v == "auto" { None } else { Some(num(line, key, v)?) },
        "field_zero_tol" => t.field_zero_tol = num(line, key, v)?,
        "degeneracy_tol" => t.degeneracy_tol = num(line, key, v)?,
        "isolation_tol" => t.isolation_tol = num(line, key, v)?,
        "tangency_tol" => t.tangency_tol = num(line, key, v)?,
        "hurwitz_tol" => t.hurwitz_tol = num(line, key, v)?,
        "gain_tol" => t.gain_tol = num(line, key, v)?,
        "rate_tol" => t.rate_tol = num(line, key, v)?,
        "n_angles" => t.n_angles = num(line, key, v)?,
        "conv_tol" => t.conv_tol = num(line, key, v)?,
        "escape_factor" => t.escape_factor = num(line, key, v)?,
        "event_tol" => t.event_tol = num(line, key, v)?,
        other => return Err(cfg_err(line, format!("unknown tolerance `{other}`"))),
    }
    Ok(())
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    None,
    System,
    Window,
    Tolerances,
    Tasks,
    Simulate,
    Boundary,
    Track,
    Output,
}

#[derive(Default)]
struct SystemKeys {
    name: Option<String>,
    builtin: Option<(usize, String)>,
    x: Option<String>,
    y: Option<String>,
    x_form: Option<FieldForm>,
    y_form: Option<FieldForm>,
}

fn parse(text: &str) -> Result<Config> {
    let mut section = Section::None;
    let mut sys = SystemKeys::default();
    let mut window: Vec<(usize, String, String)> = Vec::new();
    let mut tols: Vec<(usize, String, String)> = Vec::new();
    let mut tasks: Option<Vec<Task>> = None;
    let mut seed: Option<u64> = None;
    let mut sims: Option<Vec<SimulateSpec>> = None;
    let mut bounds: Option<Vec<BoundarySpec>> = None;
    let mut tracks: Option<Vec<TrackSpec>> = None;
    let mut svg: Option<Option<String>> = None;
    let mut seen_system = false;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(head) = content.strip_prefix('[') {
            let head = head
                .strip_suffix(']')
                .ok_or_else(|| cfg_err(line, "unterminated section header"))?
                .trim();
            section = match head {
                "system" => {
                    if seen_system {
                        return Err(cfg_err(line, "duplicate [system] section"));
                    }
                    seen_system = true;
                    Section::System
                }
                "window" => Section::Window,
                "tolerances" => Section::Tolerances,
                "tasks" => Section::Tasks,
                "simulate" => {
                    sims.get_or_insert_with(Vec::new).push(SimulateSpec::default());
                    Section::Simulate
                }
                "boundary" => {
                    bounds.get_or_insert_with(Vec::new).push(BoundarySpec { start: Vec2::new(1.0, 0.0) });
                    Section::Boundary
                }
                "track" => {
                    tracks.get_or_insert_with(Vec::new).push(TrackSpec::default());
                    Section::Track
                }
                "output" => Section::Output,
                other => return Err(cfg_err(line, format!("unknown section [{other}]"))),
            };
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| cfg_err(line, format!("expected `key = value`, got `{content}`")))?;
        let (key, value) = (key.trim(), value.trim());
        let unknown = || cfg_err(line, format!("unknown key `{key}`"));
        match section {
            Section::None => return Err(cfg_err(line, "key outside of any section")),
            Section::System => match key {
                "name" => sys.name = Some(value.to_string()),
                "builtin" => sys.builtin = Some((line, value.to_string())),
                "x" => sys.x = Some(value.to_string()),
                "y" => sys.y = Some(value.to_string()),
                "x_form" => sys.x_form = Some(value.parse().map_err(|e: Error| cfg_err(line, e.to_string()))?),
                "y_form" => sys.y_form = Some(value.parse().map_err(|e: Error| cfg_err(line, e.to_string()))?),
                _ => return Err(unknown()),
            },
            Section::Window => window.push((line, key.to_string(), value.to_string())),
            Section::Tolerances => tols.push((line, key.to_string(), value.to_string())),
            Section::Tasks => match key {
                "run" => {
                    let mut list = Vec::new();
                    for item in value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                        let t: Task = item.parse().map_err(|e: Error| cfg_err(line, e.to_string()))?;
                        if !list.contains(&t) {
                            list.push(t);
                        }
                    }
                    tasks = Some(list);
                }
                "seed" => seed = Some(num(line, key, value)?),
                _ => return Err(unknown()),
            },
            Section::Simulate => {
                let s = sims.as_mut().and_then(|v| v.last_mut()).expect("section pushed a spec");
                match key {
                    "policy" => s.policy = value.parse().map_err(|e: Error| cfg_err(line, e.to_string()))?,
                    "start" => s.start = point(line, key, value)?,
                    "t_max" => s.t_max = num(line, key, value)?,
                    "h" => s.h = num(line, key, value)?,
                    "count" => s.count = num(line, key, value)?,
                    "csv" => s.csv = Some(value.to_string()),
                    _ => return Err(unknown()),
                }
            }
            Section::Boundary => {
                let b = bounds.as_mut().and_then(|v| v.last_mut()).expect("section pushed a spec");
                match key {
                    "start" => b.start = point(line, key, value)?,
                    _ => return Err(unknown()),
                }
            }
            Section::Track => {
                let t = tracks.as_mut().and_then(|v| v.last_mut()).expect("section pushed a spec");
                match key {
                    "component" => t.component = num(line, key, value)?,
                    "start" => t.start = point(line, key, value)?,
                    "advance" => t.advance = num(line, key, value)?,
                    "tube" => t.tube = num(line, key, value)?,
                    "target" => t.target = num(line, key, value)?,
                    "t_max" => t.t_max = num(line, key, value)?,
                    "h" => t.h = num(line, key, value)?,
                    _ => return Err(unknown()),
                }
            }
            Section::Output => match key {
                "svg" => svg = Some(if value.is_empty() { None } else { Some(value.to_string()) }),
                _ => return Err(unknown()),
            },
        }
    }

    let mut cfg = match (&sys.builtin, &sys.x, &sys.y) {
        (Some((line, name)), None, None) => {
            let mut c = builtins::config(name).map_err(|e| cfg_err(*line, e.to_string()))?;
            if let Some(n) = &sys.name {
                c.name = n.clone();
            }
            c
        }
        (Some((line, _)), _, _) => return Err(cfg_err(*line, "`builtin` excludes `x` and `y`")),
        (None, Some(x), Some(y)) => Config::from_fields(
            sys.name.as_deref().unwrap_or("custom"),
            x,
            sys.x_form.unwrap_or(FieldForm::Cartesian),
            y,
            sys.y_form.unwrap_or(FieldForm::Cartesian),
        ),
        _ => return Err(cfg_err(0, "[system] needs `builtin` or both `x` and `y`")),
    };
    if let SystemSource::Fields { x, x_form, y, y_form } = &cfg.system {
        parse_field(x, *x_form).map_err(|e| cfg_err(0, format!("field x: {e}")))?;
        parse_field(y, *y_form).map_err(|e| cfg_err(0, format!("field y: {e}")))?;
    }
    let mut eps0_set = false;
    for (line, key, v) in &window {
        let w = &mut cfg.window;
        match key.as_str() {
            "xmin" => w.xmin = num(*line, key, v)?,
            "xmax" => w.xmax = num(*line, key, v)?,
            "ymin" => w.ymin = num(*line, key, v)?,
            "ymax" => w.ymax = num(*line, key, v)?,
            "grid_n" => w.grid_n = num(*line, key, v)?,
            "eps0" => {
                w.eps0 = num(*line, key, v)?;
                eps0_set = true;
            }
            _ => return Err(cfg_err(*line, format!("unknown key `{key}`"))),
        }
    }
    if !window.is_empty() && !eps0_set {
        let w = &mut cfg.window;
        w.eps0 = 0.05 * (w.xmax - w.xmin).min(w.ymax - w.ymin) * 0.5;
    }
    for (line, key, v) in &tols {
        set_tolerance(&mut cfg.tolerances, *line, key, v)?;
    }
    if let Some(t) = tasks {
        cfg.tasks = t;
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(s) = sims {
        cfg.simulations = s;
    }
    if let Some(b) = bounds {
        cfg.boundaries = b;
    }
    if let Some(t) = tracks {
        cfg.tracks = t;
    }
    if let Some(s) = svg {
        cfg.svg = s;
    }
    cfg.validate().map_err(|e| cfg_err(0, e.to_string()))?;
    Ok(cfg)
}

impl fmt::Display for Config {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "[system]")?;
        writeln!(f, "name = {}", self.name)?;
        match &self.system {
            SystemSource::Builtin { name } => writeln!(f, "builtin = {name}")?,
            SystemSource::Fields { x, x_form, y, y_form } => {
                writeln!(f, "x = {x}")?;
                writeln!(f, "x_form = {x_form}")?;
                writeln!(f, "y = {y}")?;
                writeln!(f, "y_form = {y_form}")?;
            }
        }
        let w = &self.window;
        writeln!(f, "\n[window]")?;
        writeln!(f, "xmin = {}\nxmax = {}\nymin = {}\nymax = {}", w.xmin, w.xmax, w.ymin, w.ymax)?;
        writeln!(f, "grid_n = {}\neps0 = {}", w.grid_n, w.eps0)?;
        let t = &self.tolerances;
        writeln!(f, "\n[tolerances]")?;
        writeln!(f, "refine_tol = {}", t.refine_tol)?;
        writeln!(f, "g1_tol = {}", t.g1_tol)?;
        writeln!(f, "g2_tol = {}", t.g2_tol)?;
        writeln!(f, "g3_tol = {}", t.g3_tol)?;
        match t.probe_dist {
            Some(p) => writeln!(f, "probe_dist = {p}")?,
            None => writeln!(f, "probe_dist = auto")?,
        }
        writeln!(f, "field_zero_tol = {}", t.field_zero_tol)?;
        writeln!(f, "degeneracy_tol = {}", t.degeneracy_tol)?;
        writeln!(f, "isolation_tol = {}", t.isolation_tol)?;
        writeln!(f, "tangency_tol = {}", t.tangency_tol)?;
        writeln!(f, "hurwitz_tol = {}", t.hurwitz_tol)?;
        writeln!(f, "gain_tol = {}", t.gain_tol)?;
        writeln!(f, "rate_tol = {}", t.rate_tol)?;
        writeln!(f, "n_angles = {}", t.n_angles)?;
        writeln!(f, "conv_tol = {}", t.conv_tol)?;
        writeln!(f, "escape_factor = {}", t.escape_factor)?;
        writeln!(f, "event_tol = {}", t.event_tol)?;
        writeln!(f, "\n[tasks]")?;
        let names: Vec<&str> = self.tasks.iter().map(|t| t.as_str()).collect();
        writeln!(f, "run = {}", names.join(", "))?;
        writeln!(f, "seed = {}", self.seed)?;
        for s in &self.simulations {
            writeln!(f, "\n[simulate]")?;
            writeln!(f, "policy = {}", s.policy)?;
            writeln!(f, "start = {}, {}", s.start.x, s.start.y)?;
            writeln!(f, "t_max = {}\nh = {}\ncount = {}", s.t_max, s.h, s.count)?;
            if let Some(c) = &s.csv {
                writeln!(f, "csv = {c}")?;
            }
        }
        for b in &self.boundaries {
            writeln!(f, "\n[boundary]")?;
            writeln!(f, "start = {}, {}", b.start.x, b.start.y)?;
        }
        for t in &self.tracks {
            writeln!(f, "\n[track]")?;
            writeln!(f, "component = {}", t.component)?;
            writeln!(f, "start = {}, {}", t.start.x, t.start.y)?;
            writeln!(f, "advance = {}\ntube = {}\ntarget = {}", t.advance, t.tube, t.target)?;
            writeln!(f, "t_max = {}\nh = {}", t.t_max, t.h)?;
        }
        writeln!(f, "\n[output]")?;
        writeln!(f, "svg = {}", self.svg.as_deref().unwrap_or(""))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn explicit_fields() {
        let text = "\
# a comment
[system]
name = linear
x = (-x, -y)
y = (y - x, -x - y)   # trailing comment

[window]
xmin = -1
xmax = 1
ymin = -1
ymax = 1
grid_n = 40

[tolerances]
g1_tol = 1e-5

[tasks]
run = trace, verdict
seed = 11

[simulate]
policy = chatter 0.01 0.5
start = 0.5, -0.25
";
        let c: Config = text.parse().unwrap();
        assert_eq!(c.name, "linear");
        assert_eq!(c.window.grid_n, 40);
        assert!((c.window.eps0 - 0.05).abs() < 1e-15);
        assert_eq!(c.tolerances.g1_tol, 1e-5);
        assert_eq!(c.tasks, vec![Task::Trace, Task::Verdict]);
        assert_eq!(c.seed, 11);
        assert_eq!(c.simulations.len(), 1);
        assert_eq!(c.simulations[0].start, Vec2::new(0.5, -0.25));
        assert_eq!(c.to_string().parse::<Config>().unwrap(), c);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let e = "[system]\nx = (1, 0)\ny = (0, 1)\n[window]\nxmin = abc\n".parse::<Config>().unwrap_err();
        assert!(matches!(e, Error::Config { line: 5, .. }), "{e}");
        let e = "[system]\nbuiltin = nope\n".parse::<Config>().unwrap_err();
        assert!(matches!(e, Error::Config { line: 2, .. }), "{e}");
        let e = "[sistem]\n".parse::<Config>().unwrap_err();
        assert!(e.is_config_error());
        let e = "[system]\nx = (1, 0)\n".parse::<Config>().unwrap_err();
        assert!(e.is_config_error());
    }

    #[test]
    fn builtin_overrides() {
        let c: Config = "[system]\nbuiltin = radial_pair\n[tasks]\nrun = trace\n".parse().unwrap();
        let base = builtins::config("radial_pair").unwrap();
        assert_eq!(c.window, base.window);
        assert_eq!(c.tasks, vec![Task::Trace]);
        assert_eq!(c.simulations, base.simulations);
    }

    #[test]
    fn every_builtin_round_trips() {
        for name in builtins::names() {
            let c = builtins::config(name).unwrap();
            assert_eq!(c.to_string().parse::<Config>().unwrap(), c, "{name}");
        }
    }
}
