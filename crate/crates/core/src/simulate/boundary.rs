//! Boundary of the accessible set and crossing counts along `γ_X`.

use serde::Serialize;

use super::rk4_step;
use crate::collinearity::CollinearitySet;
use crate::error::{Error, Result};
use crate::geometry::{is_simple_polygon, polygon_boundary_distance, signed_area, winding_number, SegmentIndex, Vec2};
use crate::system::SwitchedSystem;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryOptions {
    pub h: f64,
    pub t_budget: f64,
    pub arclength_budget: f64,
    pub conv_tol: f64,
    /// Minimum vertex spacing of the output polygon, relative to `|q|`.
    pub spacing: f64,
}

impl Default for BoundaryOptions {
    fn default() -> Self {
        BoundaryOptions {
            h: 1e-3,
            t_budget: 500.0,
            arclength_budget: 1e3,
            conv_tol: 1e-6,
            spacing: 2e-4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "case", rename_all = "snake_case")]
pub enum Construction {
    /// Both curves reach the origin without meeting.
    NoForwardIntersection,
    /// `γ_X(q, tau) = γ_Y(q, t)` at the first such positive `t`.
    ForwardIntersection { tau: f64, t: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AccessibleRegion {
    /// Closed polygon (implicitly closed), starting at `q`.
    pub boundary: Vec<Vec2>,
    pub construction: Construction,
    pub mean_field_points_inward: bool,
    /// Result of the self-intersection check.
    pub simple: bool,
}

impl AccessibleRegion {
    /// Whether `p` lies in the closed region dilated by `margin`.
    pub fn contains(&self, p: Vec2, margin: f64) -> bool {
        winding_number(&self.boundary, p) != 0 || polygon_boundary_distance(&self.boundary, p) <= margin
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.boundary).abs()
    }
}

struct Curve {
    pts: Vec<Vec2>,
    times: Vec<f64>,
    converged: bool,
}

impl Curve {
    fn time_at(&self, k: usize, s: f64) -> f64 {
        self.times[k] + s * (self.times[k + 1] - self.times[k])
    }
}

/// Integral curve of `X` (`u = 1`) or `Y` (`u = 0`) from `q` within the budgets.
fn flow_curve(sys: &SwitchedSystem, u: f64, q: Vec2, opts: &BoundaryOptions) -> Result<Curve> {
    let mut pts = vec![q];
    let mut times = vec![0.0];
    let mut length = 0.0;
    let mut p = q;
    let mut t = 0.0;
    let far = 1e3 * q.norm().max(1.0);
    let converged = loop {
        if p.norm() < opts.conv_tol {
            break true;
        }
        if t >= opts.t_budget || length >= opts.arclength_budget || p.norm() > far {
            break false;
        }
        let next = rk4_step(sys, u, p, opts.h)?;
        length += next.dist(p);
        p = next;
        t += opts.h;
        pts.push(p);
        times.push(t);
    };
    Ok(Curve { pts, times, converged })
}

fn decimate(pts: &[Vec2], spacing: f64, out: &mut Vec<Vec2>) {
    for (k, &p) in pts.iter().enumerate() {
        let last = k + 1 == pts.len();
        if out.last().is_none_or(|l| l.dist(p) >= spacing || (last && l.dist(p) > 0.0)) {
            out.push(p);
        }
    }
}

/// Closed boundary of the accessible set from `q`, built from `γ_X` and `γ_Y`.
pub fn accessible_boundary(sys: &SwitchedSystem, q: Vec2, opts: &BoundaryOptions) -> Result<AccessibleRegion> {
    if !(q.norm() > opts.conv_tol) {
        return Err(Error::Invalid("accessible boundary needs q away from the origin".into()));
    }
    let gx = flow_curve(sys, 1.0, q, opts)?;
    let gy = flow_curve(sys, 0.0, q, opts)?;
    let qn = q.norm();
    let near_origin = 10.0 * opts.conv_tol;

    let xsegs: Vec<(Vec2, Vec2)> = gx.pts.windows(2).map(|w| (w[0], w[1])).collect();
    let index = SegmentIndex::new(xsegs, (0.01 * qn).max(1e-9));
    let mut hit = None;
    'sweep: for (j, w) in gy.pts.windows(2).enumerate() {
        for (k, s, r) in index.intersections(w[0], w[1]) {
            let p = w[0].lerp(w[1], s);
            if (j == 0 && k == 0) || p.dist(q) <= 1e-9 * qn.max(1.0) || p.norm() < near_origin {
                continue;
            }
            hit = Some((j, s, k, r, p));
            break 'sweep;
        }
    }

    let spacing = opts.spacing * qn;
    let mut poly = Vec::new();
    let construction = match hit {
        Some((j, s, k, r, p)) => {
            decimate(&gx.pts[..=k], spacing, &mut poly);
            poly.push(p);
            let back: Vec<Vec2> = gy.pts[1..=j].iter().rev().copied().collect();
            let start = poly.len();
            decimate(&back, spacing, &mut poly);
            if poly.len() > start && poly[start].dist(p) == 0.0 {
                poly.remove(start);
            }
            Construction::ForwardIntersection {
                tau: gx.time_at(k, r),
                t: gy.time_at(j, s),
            }
        }
        None => {
            if !(gx.converged && gy.converged) {
                return Err(Error::BoundaryInconclusive(format!(
                    "no intersection and {} did not reach the origin within the budget",
                    if gx.converged { "γ_Y" } else { "γ_X" }
                )));
            }
            decimate(&gx.pts, spacing, &mut poly);
            poly.push(Vec2::ZERO);
            let back: Vec<Vec2> = gy.pts[1..].iter().rev().copied().collect();
            decimate(&back, spacing, &mut poly);
            Construction::NoForwardIntersection
        }
    };
    if poly.last().is_some_and(|l| l.dist(q) == 0.0) && poly.len() > 1 {
        poly.pop();
    }
    if poly.len() < 3 {
        return Err(Error::BoundaryInconclusive("boundary curve has fewer than three vertices".into()));
    }

    let n = poly.len();
    let orient = signed_area(&poly).signum();
    let tangent = poly[1] - poly[n - 1];
    let inner = tangent.perp() * orient;
    let (fx, fy) = sys.fields(q)?;
    let mean_field_points_inward = ((fx + fy) * 0.5).dot(inner) > 0.0;
    let simple = is_simple_polygon(&poly);
    Ok(AccessibleRegion {
        boundary: poly,
        construction,
        mean_field_points_inward,
        simple,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossingReport {
    /// `n(q)`: distinct components crossed by `γ_X` at positive times.
    pub count: usize,
    /// Component ids in crossing order along `γ_X`.
    pub x_order: Vec<usize>,
    /// Component ids in crossing order along `γ_Y`.
    pub y_order: Vec<usize>,
    pub consistent: bool,
    pub warnings: Vec<String>,
}

fn crossing_order(sys: &SwitchedSystem, z: &CollinearitySet, pts: &[Vec2], unmatched: &mut usize) -> Result<Vec<usize>> {
    let reach = 2.0 * z.window.cell_diag();
    let mut order: Vec<usize> = Vec::new();
    let mut prev_sign = 0.0;
    let mut prev_p = pts[0];
    for &p in pts {
        let v = sys.q(p)?;
        if v == 0.0 {
            continue;
        }
        let sign = v.signum();
        if prev_sign != 0.0 && sign != prev_sign {
            let mid = prev_p.lerp(p, 0.5);
            let best = z
                .components
                .iter()
                .map(|c| (c.distance(mid), c.id))
                .filter(|(d, _)| *d <= reach + prev_p.dist(p))
                .min_by(|a, b| a.0.total_cmp(&b.0));
            match best {
                Some((_, id)) => {
                    if order.last() != Some(&id) {
                        order.push(id);
                    }
                }
                None => *unmatched += 1,
            }
        }
        prev_sign = sign;
        prev_p = p;
    }
    Ok(order)
}

/// Count the components of `Z` crossed by `γ_X(q, ·)`.
pub fn count_crossings(sys: &SwitchedSystem, z: &CollinearitySet, q: Vec2, opts: &BoundaryOptions) -> Result<CrossingReport> {
    let gx = flow_curve(sys, 1.0, q, opts)?;
    if !gx.converged {
        return Err(Error::Budget(format!(
            "γ_X from ({}, {}) did not reach the origin within t = {} / arclength {}",
            q.x, q.y, opts.t_budget, opts.arclength_budget
        )));
    }
    let gy = flow_curve(sys, 0.0, q, opts)?;
    let mut unmatched = 0;
    let x_order = crossing_order(sys, z, &gx.pts, &mut unmatched)?;
    let y_order = crossing_order(sys, z, &gy.pts, &mut unmatched)?;
    let mut distinct = x_order.clone();
    distinct.sort_unstable();
    distinct.dedup();
    let mut warnings = Vec::new();
    let consistent = x_order == y_order;
    if !consistent {
        warnings.push(format!("tracing consistency: γ_X crosses {x_order:?} but γ_Y crosses {y_order:?}"));
    }
    if !gy.converged {
        warnings.push("γ_Y did not reach the origin within the budget".into());
    }
    if unmatched > 0 {
        warnings.push(format!("{unmatched} sign change(s) of Q not matched to a traced component"));
    }
    Ok(CrossingReport {
        count: distinct.len(),
        x_order,
        y_order,
        consistent,
        warnings,
    })
}
