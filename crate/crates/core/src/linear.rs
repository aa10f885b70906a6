//! Planar linear switched systems `q' = u A q + (1 - u) B q`.
//!
//! Stability is decided on the circle of directions. In polar coordinates a
//! constant-`u` system has angular velocity `omega_u = det(q, M_u q)` and
//! radial rate `rho_u = <q, M_u q>` on unit vectors, so along a rotating
//! trajectory `d(ln r)/d(theta) = rho_u / omega_u`. Two mechanisms can keep
//! the state from decaying:
//!
//! * a dwell ray, where some convex combination has `omega = 0` and the
//!   state can stay on the ray with radial rate `rho`;
//! * a full revolution whose accumulated log-gain is nonnegative.
//!
//! Both are detected on a uniform angle grid. Revolutions are maximum-mean
//! cycles of the ring graph whose arcs carry the best bang-bang log-gain
//! (on an arc where `omega_u` keeps its sign, `rho_u / omega_u` is a
//! monotone Moebius function of `u`, so an endpoint is optimal).

use std::f64::consts::TAU;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::graph::{max_mean_cycle, Edge};
use crate::system::SwitchedSystem;

pub type Mat2 = [[f64; 2]; 2];

pub fn mat_mul_vec(m: &Mat2, v: Vec2) -> Vec2 {
    Vec2::new(m[0][0] * v.x + m[0][1] * v.y, m[1][0] * v.x + m[1][1] * v.y)
}

pub fn trace(m: &Mat2) -> f64 {
    m[0][0] + m[1][1]
}

pub fn det(m: &Mat2) -> f64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

/// Largest singular value.
pub fn spectral_norm(m: &Mat2) -> f64 {
    let a = m[0][0] * m[0][0] + m[1][0] * m[1][0];
    let b = m[0][0] * m[0][1] + m[1][0] * m[1][1];
    let d = m[0][1] * m[0][1] + m[1][1] * m[1][1];
    let half_tr = 0.5 * (a + d);
    let disc = (0.25 * (a - d) * (a - d) + b * b).sqrt();
    (half_tr + disc).sqrt()
}

fn scale(m: &Mat2, s: f64) -> Mat2 {
    [[m[0][0] * s, m[0][1] * s], [m[1][0] * s, m[1][1] * s]]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearPair {
    pub a: Mat2,
    pub b: Mat2,
}

impl LinearPair {
    pub fn new(a: Mat2, b: Mat2) -> Self {
        LinearPair { a, b }
    }

    pub fn swapped(&self) -> Self {
        LinearPair { a: self.b, b: self.a }
    }

    /// `R^T M R` for the rotation `R` by `angle`.
    pub fn rotated(&self, angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        let conj = |m: &Mat2| -> Mat2 {
            let r = [[c, -s], [s, c]];
            let mut mr = [[0.0; 2]; 2];
            let mut out = [[0.0; 2]; 2];
            for i in 0..2 {
                for j in 0..2 {
                    mr[i][j] = (0..2).map(|k| m[i][k] * r[k][j]).sum();
                }
            }
            for i in 0..2 {
                for j in 0..2 {
                    out[i][j] = (0..2).map(|k| r[k][i] * mr[k][j]).sum();
                }
            }
            out
        };
        LinearPair { a: conj(&self.a), b: conj(&self.b) }
    }

    pub fn scaled(&self, s: f64) -> Self {
        LinearPair { a: scale(&self.a, s), b: scale(&self.b, s) }
    }

    /// `M_u = u A + (1 - u) B`.
    pub fn at(&self, u: f64) -> Mat2 {
        let mut m = [[0.0; 2]; 2];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = u * self.a[i][j] + (1.0 - u) * self.b[i][j];
            }
        }
        m
    }

    fn normalized(&self) -> Self {
        let s = spectral_norm(&self.a).max(spectral_norm(&self.b));
        if s > 0.0 {
            self.scaled(1.0 / s)
        } else {
            *self
        }
    }
}

/// Planar Hurwitz test `trace < 0`, `det > 0`; marginal spectra are refused.
pub fn hurwitz(m: &Mat2, tol: f64) -> Result<bool> {
    let (t, d) = (trace(m), det(m));
    if t.abs() < tol || d.abs() < tol {
        return Err(Error::MarginalSpectrum { trace: t, det: d });
    }
    Ok(t < 0.0 && d > 0.0)
}

/// Jacobians of both fields at the origin.
pub fn linearize(sys: &SwitchedSystem) -> Result<LinearPair> {
    let (x, y) = sys.field_jets(Vec2::ZERO)?;
    if x.value().norm() > 1e-9 || y.value().norm() > 1e-9 {
        return Err(Error::Invalid("linearization: the origin is not an equilibrium of both fields".into()));
    }
    Ok(LinearPair::new(x.jacobian, y.jacobian))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LinearClass {
    Guas,
    MarginalNotGuas,
    Unbounded,
    Unknown,
}

impl LinearClass {
    pub fn as_str(self) -> &'static str {
        match self {
            LinearClass::Guas => "guas",
            LinearClass::MarginalNotGuas => "marginal_not_guas",
            LinearClass::Unbounded => "unbounded",
            LinearClass::Unknown => "unknown",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DwellRay {
    pub angle: f64,
    pub u: f64,
    /// Radial rate of the dwelling combination (matrices at unit spectral scale).
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinearVerdict {
    pub class: LinearClass,
    /// Largest log radial gain over one revolution, if any revolution exists.
    pub worst_cycle_gain: Option<f64>,
    pub dwell_rays: Vec<DwellRay>,
    pub n_angles: usize,
}

#[derive(Debug, Clone, Copy)]
struct Sample {
    omega: [f64; 2],
    rho: [f64; 2],
}

fn sample(p: &LinearPair, theta: f64) -> Sample {
    let q = Vec2::from_polar(1.0, theta);
    let (bq, aq) = (mat_mul_vec(&p.b, q), mat_mul_vec(&p.a, q));
    Sample {
        omega: [q.cross(bq), q.cross(aq)],
        rho: [q.dot(bq), q.dot(aq)],
    }
}

const OMEGA_ZERO: f64 = 1e-14;

/// `(u*, rate)` if `theta` admits a combination with zero angular velocity.
fn dwell_at(s: &Sample) -> Option<(f64, f64)> {
    let snap = |w: f64| if w.abs() <= OMEGA_ZERO { 0.0 } else { w };
    let (w0, w1) = (snap(s.omega[0]), snap(s.omega[1]));
    if w0 == 0.0 && w1 == 0.0 {
        return Some(if s.rho[1] >= s.rho[0] { (1.0, s.rho[1]) } else { (0.0, s.rho[0]) });
    }
    if w0 * w1 > 0.0 {
        return None;
    }
    let u = w0 / (w0 - w1);
    Some((u, u * s.rho[1] + (1.0 - u) * s.rho[0]))
}

fn dwell_rate(p: &LinearPair, theta: f64) -> f64 {
    dwell_at(&sample(p, theta)).map_or(f64::NEG_INFINITY, |d| d.1)
}

fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() < 1e-13 {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

fn dwell_rays(p: &LinearPair, samples: &[Sample]) -> Vec<DwellRay> {
    let n = samples.len();
    let dt = TAU / n as f64;
    let flags: Vec<Option<(f64, f64)>> = samples.iter().map(dwell_at).collect();
    let mut rays = Vec::new();
    if flags.iter().all(|f| f.is_some()) {
        let k = (0..n)
            .max_by(|&a, &b| flags[a].unwrap().1.total_cmp(&flags[b].unwrap().1).then(b.cmp(&a)))
            .unwrap();
        let (u, rate) = flags[k].unwrap();
        rays.push(DwellRay { angle: k as f64 * dt, u, rate });
        return rays;
    }
    // start scanning right after a non-dwell index so runs do not wrap
    let start = (0..n).find(|&k| flags[k].is_none()).unwrap();
    let mut k = 1;
    while k <= n {
        let idx = (start + k) % n;
        if flags[idx].is_none() {
            k += 1;
            continue;
        }
        let mut best = idx;
        while k <= n && flags[(start + k) % n].is_some() {
            let j = (start + k) % n;
            if flags[j].unwrap().1 > flags[best].unwrap().1 {
                best = j;
            }
            k += 1;
        }
        let centre = best as f64 * dt;
        let theta = golden_max(|t| dwell_rate(p, t), centre - dt, centre + dt);
        let theta = if dwell_rate(p, theta) >= flags[best].unwrap().1 { theta } else { centre };
        let (u, rate) = dwell_at(&sample(p, theta)).unwrap();
        rays.push(DwellRay { angle: theta.rem_euclid(TAU), u, rate });
    }
    rays
}

/// Largest log-gain over one revolution in either rotation sense.
fn revolution_gain(samples_mid: &[Sample]) -> Option<f64> {
    let n = samples_mid.len();
    let dt = TAU / n as f64;
    let mut best: Option<f64> = None;
    for sense in [1.0, -1.0] {
        let mut edges = Vec::with_capacity(2 * n);
        for (k, s) in samples_mid.iter().enumerate() {
            let (from, to) = if sense > 0.0 { (k, (k + 1) % n) } else { ((k + 1) % n, k) };
            for u in 0..2 {
                let w = sense * s.omega[u];
                if w > 0.0 {
                    edges.push(Edge { from, to, weight: s.rho[u] / w * dt });
                }
            }
        }
        if let Some(c) = max_mean_cycle(n, &edges) {
            let gain = c.mean * c.nodes.len() as f64;
            best = Some(best.map_or(gain, |b: f64| b.max(gain)));
        }
    }
    best
}

/// Numerical GUAS classification of a planar linear pair.
pub fn linear_guas_test(pair: &LinearPair, n_angles: usize, gain_tol: f64, rate_tol: f64, hurwitz_tol: f64) -> Result<LinearVerdict> {
    for m in [&pair.a, &pair.b] {
        if !hurwitz(m, hurwitz_tol)? {
            return Err(Error::NotHurwitz { trace: trace(m), det: det(m) });
        }
    }
    if n_angles < 8 {
        return Err(Error::Invalid("n_angles must be at least 8".into()));
    }
    let p = pair.normalized();
    let dt = TAU / n_angles as f64;
    let nodes: Vec<Sample> = (0..n_angles).into_par_iter().map(|k| sample(&p, k as f64 * dt)).collect();
    let mids: Vec<Sample> = (0..n_angles)
        .into_par_iter()
        .map(|k| sample(&p, (k as f64 + 0.5) * dt))
        .collect();
    let rays = dwell_rays(&p, &nodes);
    let gain = revolution_gain(&mids);
    let max_rate = rays.iter().map(|r| r.rate).fold(f64::NEG_INFINITY, f64::max);
    let class = if max_rate > rate_tol || gain.is_some_and(|g| g > gain_tol) {
        LinearClass::Unbounded
    } else if max_rate.abs() <= rate_tol || gain.is_some_and(|g| g.abs() <= gain_tol) {
        LinearClass::MarginalNotGuas
    } else if max_rate < -rate_tol && gain.is_none_or(|g| g < -gain_tol) {
        LinearClass::Guas
    } else {
        LinearClass::Unknown
    };
    Ok(LinearVerdict {
        class,
        worst_cycle_gain: gain,
        dwell_rays: rays,
        n_angles,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const I: Mat2 = [[1.0, 0.0], [0.0, 1.0]];
    const NEG_I: Mat2 = [[-1.0, 0.0], [0.0, -1.0]];

    fn run(p: &LinearPair, n: usize) -> LinearVerdict {
        linear_guas_test(p, n, 1e-6, 1e-6, 1e-9).unwrap()
    }

    #[test]
    fn hurwitz_cases() {
        assert!(hurwitz(&NEG_I, 1e-9).unwrap());
        assert!(!hurwitz(&I, 1e-9).unwrap());
        assert!(matches!(
            hurwitz(&[[0.0, 1.0], [-1.0, 0.0]], 1e-9),
            Err(Error::MarginalSpectrum { .. })
        ));
        let b = [[-1.0 / 20.0, -1.0], [1.0, -1.0 / 20.0]];
        assert!(hurwitz(&b, 1e-9).unwrap());
        assert!((det(&b) - (1.0 + 1.0 / 400.0)).abs() < 1e-15);
    }

    #[test]
    fn spectral_norm_of_rotation_and_diagonal() {
        assert!((spectral_norm(&[[0.0, 1.0], [-1.0, 0.0]]) - 1.0).abs() < 1e-15);
        assert!((spectral_norm(&[[3.0, 0.0], [0.0, -5.0]]) - 5.0).abs() < 1e-15);
    }

    #[test]
    fn identical_stable_matrices() {
        let v = run(&LinearPair::new(NEG_I, NEG_I), 256);
        assert_eq!(v.class, LinearClass::Guas);
        // no rotation: no revolution, a single dwell representative
        assert_eq!(v.worst_cycle_gain, None);
        assert_eq!(v.dwell_rays.len(), 1);
        assert!((v.dwell_rays[0].rate + 1.0).abs() < 1e-12);
    }

    #[test]
    fn common_focus_gain_matches_closed_form() {
        // M = [[-a, -1], [1, -a]]: omega = 1, rho = -a, gain = -2 pi a / |M|
        let a = 0.3;
        let m = [[-a, -1.0], [1.0, -a]];
        let v = run(&LinearPair::new(m, m), 512);
        let s = spectral_norm(&m);
        let expect = -TAU * (a / s) / (1.0 / s);
        assert_eq!(v.class, LinearClass::Guas);
        assert!((v.worst_cycle_gain.unwrap() - expect).abs() < 1e-9);
    }

    #[test]
    fn non_hurwitz_is_refused() {
        assert!(matches!(
            linear_guas_test(&LinearPair::new(I, NEG_I), 64, 1e-6, 1e-6, 1e-9),
            Err(Error::NotHurwitz { .. })
        ));
    }

    #[test]
    fn rotation_of_pair_preserves_spectra() {
        let p = LinearPair::new([[-0.1, 1.0], [-10.0, -0.1]], [[-0.1, 10.0], [-1.0, -0.1]]);
        let r = p.rotated(0.7);
        assert!((trace(&r.a) - trace(&p.a)).abs() < 1e-12);
        assert!((det(&r.b) - det(&p.b)).abs() < 1e-12);
    }
}
