//! Admissible trajectories of the switched system.
//!
//! Integration uses the classical fixed-step RK4 on `f_u = u X + (1 - u) Y`
//! with `u` frozen over each step. Discontinuities of the switching signal
//! are never stepped over: time-triggered switches shorten the step so it
//! ends on the switch, and state-triggered switches are located by
//! bisection on the step length.

mod boundary;
mod track;

pub use boundary::{accessible_boundary, count_crossings, BoundaryOptions, Construction, AccessibleRegion, CrossingReport};
pub use track::{track_component, TrackOptions, TrackReport, Tracker};

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::system::{SwitchedSystem, Tolerances};

/// A switching signal, possibly in feedback form.
pub trait Switching: Sync {
    /// Control value at `(t, q)`. `prev` is the value in effect just before.
    fn select(&self, sys: &SwitchedSystem, t: f64, q: Vec2, prev: Option<f64>) -> Result<f64>;

    /// First time-triggered switch strictly after `t`.
    fn next_time_event(&self, _t: f64) -> Option<f64> {
        None
    }

    /// Whether `select` depends on the state (switches need locating).
    fn state_dependent(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Policy {
    Constant { u: f64 },
    /// `(time, u)` pairs; each `u` holds from its time on.
    Schedule { switches: Vec<(f64, f64)> },
    /// `u = 1` for the first `duty` fraction of each period, then `u = 0`.
    Chatter { period: f64, duty: f64 },
    /// `u` maximizing the radial velocity `<f_u(q), q>`, ties to `u = 1`.
    GreedyRadial,
    /// `u = 0` when the fractional part of `|q|` lies in `[1/4, 3/4)`, else `u = 1`.
    GusFeedback,
    /// Random bang-bang schedule with exponential dwell times (seeded per trajectory).
    Random { mean_dwell: f64 },
    /// Follow a traced component of `Z`; resolved against a collinearity set.
    TrackComponent { component: usize, advance: f64, tube: f64 },
}

impl Policy {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Invalid(format!("policy: {m}")));
        match self {
            Policy::Constant { u } if !(0.0..=1.0).contains(u) => bad(format!("u = {u} outside [0, 1]")),
            Policy::Schedule { switches } => {
                if switches.is_empty() {
                    return bad("empty schedule".into());
                }
                if switches.windows(2).any(|w| !(w[0].0 < w[1].0)) {
                    return bad("schedule times must be strictly increasing".into());
                }
                if switches.iter().any(|s| !(0.0..=1.0).contains(&s.1)) {
                    return bad("schedule value outside [0, 1]".into());
                }
                Ok(())
            }
            Policy::Chatter { period, duty } => {
                if !(*period > 0.0) {
                    bad("chatter period must be positive".into())
                } else if !(0.0..=1.0).contains(duty) {
                    bad("chatter duty outside [0, 1]".into())
                } else {
                    Ok(())
                }
            }
            Policy::Random { mean_dwell } if !(*mean_dwell > 0.0) => bad("mean dwell must be positive".into()),
            Policy::TrackComponent { advance, tube, .. } if advance.abs() != 1.0 || !(*tube > 0.0) => {
                bad("track needs advance = +1 or -1 and a positive tube".into())
            }
            _ => Ok(()),
        }
    }

    /// Replace a random policy by its concrete schedule for trajectory `index`.
    pub fn resolve(&self, seed: u64, index: u64, t_max: f64) -> Policy {
        match self {
            Policy::Random { mean_dwell } => random_schedule(seed.wrapping_add(index.wrapping_mul(0x9E37_79B9_7F4A_7C15)), t_max, *mean_dwell),
            other => other.clone(),
        }
    }
}

/// Bang-bang schedule with exponentially distributed dwell times.
pub fn random_schedule(seed: u64, t_max: f64, mean_dwell: f64) -> Policy {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut switches = Vec::new();
    let mut t = 0.0;
    let mut u = if rng.gen_bool(0.5) { 1.0 } else { 0.0 };
    while t < t_max {
        switches.push((t, u));
        let e: f64 = rng.gen_range(f64::EPSILON..1.0);
        t += -mean_dwell * e.ln();
        u = 1.0 - u;
    }
    Policy::Schedule { switches }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Policy::Constant { u } => write!(f, "constant {u}"),
            Policy::Schedule { switches } => {
                write!(f, "schedule ")?;
                for (k, (t, u)) in switches.iter().enumerate() {
                    if k > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{t}:{u}")?;
                }
                Ok(())
            }
            Policy::Chatter { period, duty } => write!(f, "chatter {period} {duty}"),
            Policy::GreedyRadial => write!(f, "greedy_radial"),
            Policy::GusFeedback => write!(f, "gus_feedback"),
            Policy::Random { mean_dwell } => write!(f, "random {mean_dwell}"),
            Policy::TrackComponent { component, advance, tube } => write!(f, "track {component} {advance} {tube}"),
        }
    }
}

impl FromStr for Policy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let mut it = s.split_whitespace();
        let kind = it.next().unwrap_or("");
        let args: Vec<&str> = it.collect();
        let num = |k: usize| -> Result<f64> {
            args.get(k)
                .ok_or_else(|| Error::Invalid(format!("policy `{kind}`: missing argument {}", k + 1)))?
                .parse::<f64>()
                .map_err(|e| Error::Invalid(format!("policy `{kind}`: {e}")))
        };
        let want = |n: usize| -> Result<()> {
            if args.len() == n {
                Ok(())
            } else {
                Err(Error::Invalid(format!("policy `{kind}` takes {n} argument(s), got {}", args.len())))
            }
        };
        let p = match kind {
            "constant" => {
                want(1)?;
                Policy::Constant { u: num(0)? }
            }
            "schedule" => {
                want(1)?;
                let switches = args[0]
                    .split(',')
                    .map(|pair| {
                        let (t, u) = pair
                            .split_once(':')
                            .ok_or_else(|| Error::Invalid(format!("schedule entry `{pair}` is not time:u")))?;
                        let parse = |v: &str| v.trim().parse::<f64>().map_err(|e| Error::Invalid(format!("schedule: {e}")));
                        Ok((parse(t)?, parse(u)?))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Policy::Schedule { switches }
            }
            "chatter" => {
                want(2)?;
                Policy::Chatter { period: num(0)?, duty: num(1)? }
            }
            "greedy_radial" => {
                want(0)?;
                Policy::GreedyRadial
            }
            "gus_feedback" => {
                want(0)?;
                Policy::GusFeedback
            }
            "random" => {
                want(1)?;
                Policy::Random { mean_dwell: num(0)? }
            }
            "track" => {
                want(3)?;
                let c = num(0)?;
                if c < 0.0 || c.fract() != 0.0 {
                    return Err(Error::Invalid("track: component must be a non-negative integer".into()));
                }
                Policy::TrackComponent { component: c as usize, advance: num(1)?, tube: num(2)? }
            }
            other => return Err(Error::Invalid(format!("unknown policy `{other}`"))),
        };
        p.validate()?;
        Ok(p)
    }
}

fn chatter_phase(t: f64, period: f64) -> (f64, f64) {
    let k = (t / period + 1e-9).floor();
    (k, t - k * period)
}

impl Switching for Policy {
    fn select(&self, sys: &SwitchedSystem, t: f64, q: Vec2, _prev: Option<f64>) -> Result<f64> {
        Ok(match self {
            Policy::Constant { u } => *u,
            Policy::Schedule { switches } => {
                let eps = 1e-12 * switches.last().map_or(1.0, |s| s.0.abs().max(1.0));
                switches
                    .iter()
                    .rev()
                    .find(|s| s.0 <= t + eps)
                    .unwrap_or(&switches[0])
                    .1
            }
            Policy::Chatter { period, duty } => {
                let (_, ph) = chatter_phase(t, *period);
                if ph < duty * period - 1e-9 * period {
                    1.0
                } else {
                    0.0
                }
            }
            Policy::GreedyRadial => {
                let (a, b) = sys.fields(q)?;
                if a.dot(q) >= b.dot(q) {
                    1.0
                } else {
                    0.0
                }
            }
            Policy::GusFeedback => {
                let r = q.norm();
                let f = r - r.floor();
                if (0.25..0.75).contains(&f) {
                    0.0
                } else {
                    1.0
                }
            }
            Policy::Random { .. } => {
                return Err(Error::Invalid("random policy must be resolved to a schedule first".into()))
            }
            Policy::TrackComponent { .. } => {
                return Err(Error::Invalid("track policy needs a traced component".into()))
            }
        })
    }

    fn next_time_event(&self, t: f64) -> Option<f64> {
        match self {
            Policy::Schedule { switches } => {
                let eps = 1e-12 * switches.last().map_or(1.0, |s| s.0.abs().max(1.0));
                switches.iter().map(|s| s.0).find(|&s| s > t + eps)
            }
            Policy::Chatter { period, duty } => {
                let (k, _) = chatter_phase(t, *period);
                let eps = 1e-9 * period;
                [k * period + duty * period, (k + 1.0) * period, (k + 1.0) * period + duty * period]
                    .into_iter()
                    .find(|&s| s > t + eps)
            }
            _ => None,
        }
    }

    fn state_dependent(&self) -> bool {
        matches!(self, Policy::GreedyRadial | Policy::GusFeedback)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Completed,
    Converged,
    Escaped,
    StepFailure,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrajSample {
    pub t: f64,
    pub p: Vec2,
    /// Control in effect from this sample on.
    pub u: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub samples: Vec<TrajSample>,
    pub status: Status,
    pub t_max: f64,
    /// Message of the failing evaluation for `StepFailure`.
    pub failure: Option<String>,
}

impl Trajectory {
    pub fn last(&self) -> TrajSample {
        *self.samples.last().expect("trajectory has at least its initial sample")
    }

    pub fn points(&self) -> Vec<Vec2> {
        self.samples.iter().map(|s| s.p).collect()
    }

    pub fn max_radius(&self) -> f64 {
        self.samples.iter().map(|s| s.p.norm()).fold(0.0, f64::max)
    }

    pub fn min_radius(&self) -> f64 {
        self.samples.iter().map(|s| s.p.norm()).fold(f64::INFINITY, f64::min)
    }

    /// Number of control changes along the trajectory.
    pub fn switches(&self) -> usize {
        self.samples.windows(2).filter(|w| w[0].u != w[1].u).count()
    }

    /// Position at time `t` by linear interpolation between samples.
    pub fn at(&self, t: f64) -> Vec2 {
        let s = &self.samples;
        let k = s.partition_point(|x| x.t <= t);
        if k == 0 {
            return s[0].p;
        }
        if k >= s.len() {
            return s[s.len() - 1].p;
        }
        let (a, b) = (s[k - 1], s[k]);
        a.p.lerp(b.p, (t - a.t) / (b.t - a.t))
    }

    /// CSV with header `t,x,y,u`, 17 significant digits per value.
    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "t,x,y,u")?;
        for s in &self.samples {
            writeln!(w, "{:.16e},{:.16e},{:.16e},{:.16e}", s.t, s.p.x, s.p.y, s.u)?;
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("CSV is ASCII")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrateOptions {
    pub t_max: f64,
    pub h: f64,
    pub conv_tol: f64,
    pub escape_radius: f64,
    pub event_tol: f64,
}

impl IntegrateOptions {
    pub fn new(t_max: f64, h: f64, q0: Vec2, tol: &Tolerances) -> Self {
        IntegrateOptions {
            t_max,
            h,
            conv_tol: tol.conv_tol,
            escape_radius: tol.escape_factor * q0.norm().max(tol.conv_tol),
            event_tol: tol.event_tol * t_max.max(1.0),
        }
    }
}

/// One classical RK4 step with frozen control.
pub fn rk4_step(sys: &SwitchedSystem, u: f64, q: Vec2, h: f64) -> Result<Vec2> {
    let k1 = sys.velocity(u, q)?;
    let k2 = sys.velocity(u, q + k1 * (0.5 * h))?;
    let k3 = sys.velocity(u, q + k2 * (0.5 * h))?;
    let k4 = sys.velocity(u, q + k3 * h)?;
    let out = q + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
    if out.is_finite() {
        Ok(out)
    } else {
        Err(Error::Invalid(format!("non-finite state after step from ({}, {})", q.x, q.y)))
    }
}

/// Integrate from `q0` under a switching signal.
pub fn integrate(sys: &SwitchedSystem, policy: &dyn Switching, q0: Vec2, opts: &IntegrateOptions) -> Result<Trajectory> {
    integrate_until(sys, policy, q0, opts, &mut |_| false)
}

/// As [`integrate`], ending with `Completed` as soon as `stop` accepts a sample.
pub fn integrate_until(
    sys: &SwitchedSystem,
    policy: &dyn Switching,
    q0: Vec2,
    opts: &IntegrateOptions,
    stop: &mut dyn FnMut(&TrajSample) -> bool,
) -> Result<Trajectory> {
    if !(opts.h > 0.0) || !(opts.t_max > 0.0) {
        return Err(Error::Invalid("step and horizon must be positive".into()));
    }
    let mut samples = Vec::with_capacity((opts.t_max / opts.h) as usize + 2);
    let mut t = 0.0;
    let mut q = q0;
    let fail = |samples: Vec<TrajSample>, e: Error| Trajectory {
        samples,
        status: Status::StepFailure,
        t_max: opts.t_max,
        failure: Some(e.to_string()),
    };
    let mut u = match policy.select(sys, t, q, None) {
        Ok(u) => u,
        Err(e) => return Ok(fail(vec![TrajSample { t, p: q, u: 0.0 }], e)),
    };
    samples.push(TrajSample { t, p: q, u });
    if stop(&samples[0]) {
        return Ok(Trajectory { samples, status: Status::Completed, t_max: opts.t_max, failure: None });
    }
    let mut skip_check = false;
    let end = opts.t_max * (1.0 - 1e-14);
    let status = loop {
        let r = q.norm();
        if r < opts.conv_tol {
            break Status::Converged;
        }
        if r > opts.escape_radius {
            break Status::Escaped;
        }
        if t >= end {
            break Status::Completed;
        }
        let mut t1 = (t + opts.h).min(opts.t_max);
        if let Some(te) = policy.next_time_event(t) {
            if te < t1 {
                t1 = te;
            }
        }
        let mut q1 = match rk4_step(sys, u, q, t1 - t) {
            Ok(v) => v,
            Err(e) => return Ok(fail(samples, e)),
        };
        let mut event = false;
        if policy.state_dependent() && !skip_check {
            let wants = |tt: f64, qq: Vec2| policy.select(sys, tt, qq, Some(u)).map(|v| v != u);
            match wants(t1, q1) {
                Ok(true) => {
                    let (mut lo, mut hi) = (t, t1);
                    while hi - lo > opts.event_tol {
                        let mid = 0.5 * (lo + hi);
                        let qm = match rk4_step(sys, u, q, mid - t) {
                            Ok(v) => v,
                            Err(e) => return Ok(fail(samples, e)),
                        };
                        match wants(mid, qm) {
                            Ok(true) => {
                                hi = mid;
                                q1 = qm;
                            }
                            Ok(false) => lo = mid,
                            Err(e) => return Ok(fail(samples, e)),
                        }
                    }
                    t1 = hi;
                    event = true;
                }
                Ok(false) => {}
                Err(e) => return Ok(fail(samples, e)),
            }
        }
        skip_check = event;
        t = t1;
        q = q1;
        u = match policy.select(sys, t, q, Some(u)) {
            Ok(v) => v,
            Err(e) => return Ok(fail(samples, e)),
        };
        samples.push(TrajSample { t, p: q, u });
        if stop(samples.last().expect("just pushed")) {
            break Status::Completed;
        }
    };
    Ok(Trajectory {
        samples,
        status,
        t_max: opts.t_max,
        failure: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{parse_field, FieldForm};

    fn sys(x: &str, y: &str) -> SwitchedSystem {
        SwitchedSystem::new(
            "t",
            parse_field(x, FieldForm::Cartesian).unwrap(),
            parse_field(y, FieldForm::Cartesian).unwrap(),
        )
    }

    fn opts(t_max: f64, h: f64) -> IntegrateOptions {
        IntegrateOptions::new(t_max, h, Vec2::new(1.0, 0.0), &Tolerances::default())
    }

    #[test]
    fn exact_exponential_decay() {
        let s = sys("(-x, -y)", "(y - x, -x - y)");
        let tr = integrate(&s, &Policy::Constant { u: 1.0 }, Vec2::new(1.0, 0.0), &opts(1.0, 1e-3)).unwrap();
        let end = tr.last();
        assert_eq!(tr.status, Status::Completed);
        assert!((end.t - 1.0).abs() < 1e-12);
        assert!((end.p.x - (-1f64).exp()).abs() < 1e-8);
    }

    #[test]
    fn schedule_switches_land_on_times() {
        let s = sys("(-x, -y)", "(y - x, -x - y)");
        let p = Policy::Schedule { switches: vec![(0.0, 1.0), (0.3333, 0.0), (0.7, 1.0)] };
        let tr = integrate(&s, &p, Vec2::new(1.0, 0.0), &opts(1.0, 0.1)).unwrap();
        assert!(tr.samples.iter().any(|x| x.t == 0.3333 && x.u == 0.0));
        assert!(tr.samples.iter().any(|x| x.t == 0.7 && x.u == 1.0));
        assert_eq!(tr.switches(), 2);
    }

    #[test]
    fn chatter_alternates() {
        let s = sys("(-x, -y)", "(y - x, -x - y)");
        let p = Policy::Chatter { period: 0.1, duty: 0.5 };
        let tr = integrate(&s, &p, Vec2::new(1.0, 0.0), &opts(1.0, 0.01)).unwrap();
        // edges at 0.05, 0.1, ..., 0.95 and the final sample at t = 1
        assert_eq!(tr.switches(), 20);
    }

    #[test]
    fn greedy_ties_go_to_one() {
        let s = sys("(-x, -y)", "(-x, -y)");
        assert_eq!(Policy::GreedyRadial.select(&s, 0.0, Vec2::new(0.3, -2.0), None).unwrap(), 1.0);
    }

    #[test]
    fn state_events_are_located() {
        // rotation has zero radial velocity, so greedy leaves it once x > 0
        let s = sys("(-y, x)", "(1, 0)");
        let tr = integrate(&s, &Policy::GreedyRadial, Vec2::new(-0.5, 0.5), &opts(4.0, 0.1)).unwrap();
        let flip = tr.samples.windows(2).find(|w| w[0].u != w[1].u).unwrap()[1];
        assert!(flip.p.x.abs() < 1e-8, "{flip:?}");
    }

    #[test]
    fn policy_text_round_trip() {
        for src in ["constant 0.25", "schedule 0:1,1.5:0", "chatter 0.01 0.5", "greedy_radial", "gus_feedback", "random 0.5", "track 0 -1 0.1"] {
            let p: Policy = src.parse().unwrap();
            assert_eq!(p.to_string().parse::<Policy>().unwrap(), p);
        }
        assert!("constant 2".parse::<Policy>().is_err());
        assert!("schedule 1:0,0.5:1".parse::<Policy>().is_err());
        assert!("chatter 0 0.5".parse::<Policy>().is_err());
    }

    #[test]
    fn csv_format() {
        let s = sys("(-x, -y)", "(-x, -y)");
        let tr = integrate(&s, &Policy::Constant { u: 1.0 }, Vec2::new(1.0, 0.0), &opts(0.2, 0.1)).unwrap();
        let csv = tr.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("t,x,y,u"));
        assert_eq!(lines.next(), Some("0.0000000000000000e0,1.0000000000000000e0,0.0000000000000000e0,1.0000000000000000e0"));
        assert_eq!(csv.lines().count(), 4);
    }
}
