//! Bang-bang feedback that slides along a component of `Z`.
//!
//! On a component where `Q` changes sign and the two fields push `Q` in
//! opposite directions, the trajectory is held in a thin band on one side
//! of the component. Inside the band the average motion is the sliding
//! combination tangent to the level set of `Q`; the side is chosen so that
//! this motion advances along the component in the requested direction.

use serde::Serialize;

use super::{integrate_until, IntegrateOptions, Status, Switching, Trajectory};
use crate::collinearity::ZComponent;
use crate::error::{Error, Result};
use crate::geometry::{point_segment_distance, Vec2};
use crate::system::{SwitchedSystem, Tolerances};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackOptions {
    /// Tube radius around the component.
    pub tube: f64,
    /// `+1` follows the polyline vertex order, `-1` the reverse.
    pub advance: f64,
    /// Arclength progress after which tracking stops.
    pub target: f64,
    pub t_max: f64,
    pub h: f64,
}

impl Default for TrackOptions {
    fn default() -> Self {
        TrackOptions {
            tube: 0.1,
            advance: 1.0,
            target: f64::INFINITY,
            t_max: 200.0,
            h: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrackReport {
    pub trajectory: Trajectory,
    /// Sign of `Q` on the tracked side.
    pub side: f64,
    /// Arclength advanced along the component.
    pub progress: f64,
    pub max_distance: f64,
    /// Samples farther than the nominal tube from the component.
    pub violations: usize,
    /// Simulated time taken.
    pub elapsed: f64,
}

/// Switching feedback holding the state in the band `[tube/4, tube/2]`.
pub struct Tracker<'a> {
    comp: &'a ZComponent,
    sigma: f64,
    tube: f64,
}

impl<'a> Tracker<'a> {
    /// Signed distance, positive on the tracked side.
    fn offset(&self, sys: &SwitchedSystem, q: Vec2) -> Result<f64> {
        let v = sys.q(q)?;
        let sgn = if v == 0.0 { 0.0 } else { v.signum() };
        Ok(self.sigma * sgn * self.comp.distance(q))
    }
}

impl Switching for Tracker<'_> {
    fn select(&self, sys: &SwitchedSystem, _t: f64, q: Vec2, prev: Option<f64>) -> Result<f64> {
        let s = self.offset(sys, q)?;
        let g = sys.q_jet(q)?.grad();
        let (fx, fy) = sys.fields(q)?;
        // u whose field decreases sigma*Q
        let u_in = if self.sigma * g.dot(fx) < self.sigma * g.dot(fy) { 1.0 } else { 0.0 };
        let u_out = 1.0 - u_in;
        Ok(if s > 0.5 * self.tube {
            u_in
        } else if s < 0.25 * self.tube {
            u_out
        } else {
            prev.unwrap_or(u_out)
        })
    }

    fn state_dependent(&self) -> bool {
        true
    }
}

struct Arclength {
    cum: Vec<f64>,
    total: f64,
}

impl Arclength {
    fn new(c: &ZComponent) -> Self {
        let mut cum = vec![0.0];
        for (a, b) in c.segments() {
            cum.push(cum.last().unwrap() + a.dist(b));
        }
        let total = *cum.last().unwrap();
        Arclength { cum, total }
    }

    /// Nearest segment, distance and arclength coordinate of the projection.
    fn project(&self, c: &ZComponent, p: Vec2) -> (usize, f64, f64) {
        let mut best = (0, f64::INFINITY, 0.0);
        for (k, (a, b)) in c.segments().enumerate() {
            let (d, t) = point_segment_distance(p, a, b);
            if d < best.1 {
                best = (k, d, self.cum[k] + t * (self.cum[k + 1] - self.cum[k]));
            }
        }
        best
    }
}

/// Sliding velocity at `p`, or `None` when both fields push `Q` the same way.
fn sliding_velocity(sys: &SwitchedSystem, p: Vec2) -> Result<Option<Vec2>> {
    let g = sys.q_jet(p)?.grad();
    let (fx, fy) = sys.fields(p)?;
    let (gx, gy) = (g.dot(fx), g.dot(fy));
    if !(gx * gy < 0.0) {
        return Ok(None);
    }
    let u = gy / (gy - gx);
    Ok(Some(fx * u + fy * (1.0 - u)))
}

/// Follow component `c` from `q0` inside a tube, advancing along it.
pub fn track_component(
    sys: &SwitchedSystem,
    c: &ZComponent,
    q0: Vec2,
    opts: &TrackOptions,
    tol: &Tolerances,
) -> Result<TrackReport> {
    if !c.q_sign_change {
        return Err(Error::NoSignChange);
    }
    if opts.advance.abs() != 1.0 || !(opts.tube > 0.0) || !(opts.h > 0.0) {
        return Err(Error::Invalid("track needs advance = +1 or -1, a positive tube and step".into()));
    }
    if c.segments().next().is_none() {
        return Err(Error::Invalid(format!("component {} has no segments", c.id)));
    }
    let arc = Arclength::new(c);
    let (k0, d0, s0) = arc.project(c, q0);
    if d0 > opts.tube {
        return Err(Error::Invalid(format!(
            "start point is {d0:.3e} from component {}, outside the tube {}",
            c.id, opts.tube
        )));
    }
    let (a, b) = c.segments().nth(k0).expect("projected segment exists");
    let tangent = (b - a).normalized().ok_or_else(|| Error::Invalid("zero-length segment".into()))?;
    let foot = a + tangent * (q0 - a).dot(tangent).clamp(0.0, a.dist(b));
    let mut best: Option<(f64, f64)> = None;
    for side in [1.0, -1.0] {
        let p = foot + tangent.perp() * (side * 0.375 * opts.tube);
        let v = sys.q(p)?;
        if v == 0.0 {
            continue;
        }
        if let Some(vel) = sliding_velocity(sys, p)? {
            let prog = vel.dot(tangent) * opts.advance;
            if prog > 0.0 && best.is_none_or(|(_, b)| prog > b) {
                best = Some((v.signum(), prog));
            }
        }
    }
    let Some((sigma, _)) = best else {
        return Err(Error::Invalid(format!(
            "no sliding motion along component {} advances in direction {}",
            c.id, opts.advance
        )));
    };
    let tracker = Tracker { comp: c, sigma, tube: opts.tube };

    let mut iopts = IntegrateOptions::new(opts.t_max, opts.h, q0, tol);
    iopts.escape_radius = f64::INFINITY;
    iopts.conv_tol = 0.0;
    let allowed = |p: Vec2| {
        if c.tangencies.iter().any(|t| t.dist(p) <= 3.0 * opts.tube) {
            3.0 * opts.tube
        } else {
            opts.tube
        }
    };
    let mut progress = 0.0;
    let mut last = s0;
    let mut max_distance = 0.0f64;
    let mut violations = 0;
    let mut lost: Option<(f64, f64, f64)> = None;
    let mut stop = |smp: &super::TrajSample| {
        let (_, d, s) = arc.project(c, smp.p);
        let mut delta = s - last;
        if c.closed && arc.total > 0.0 {
            delta -= arc.total * (delta / arc.total).round();
        }
        last = s;
        progress += opts.advance * delta;
        max_distance = max_distance.max(d);
        if d > opts.tube {
            violations += 1;
        }
        let cap = allowed(smp.p);
        if d > cap {
            lost = Some((smp.t, d, cap));
            return true;
        }
        let at_end = !c.closed && if opts.advance > 0.0 { arc.total - s } else { s } <= opts.tube;
        progress >= opts.target || at_end
    };
    let trajectory = integrate_until(sys, &tracker, q0, &iopts, &mut stop)?;
    if let Some((t, distance, tube)) = lost {
        return Err(Error::TrackingLost { t, distance, tube });
    }
    if trajectory.status == Status::StepFailure {
        return Err(Error::Invalid(format!(
            "tracking integration failed: {}",
            trajectory.failure.clone().unwrap_or_default()
        )));
    }
    let elapsed = trajectory.last().t;
    Ok(TrackReport {
        trajectory,
        side: sigma,
        progress,
        max_distance,
        violations,
        elapsed,
    })
}
