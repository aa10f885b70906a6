//! Tracing and classification of the collinearity set `Z = {Q = 0}`.
//!
//! `Q` is sampled on the window grid and sign changes are extracted by
//! marching squares. Zeros of `Q` without a sign change (curves where `Q`
//! only touches zero) are invisible to a sign scan; they are found by a
//! multiplicity-two Newton iteration started from every cell where the
//! local quadratic model of `Q` predicts a nearby touching zero.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{point_segment_distance, signed_area, winding_number, Vec2};
use crate::system::{SwitchedSystem, Tolerances, Window};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    Direct,
    Inverse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TriState {
    Yes,
    No,
    Unknown,
}

impl TriState {
    pub fn is_yes(self) -> bool {
        self == TriState::Yes
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZComponent {
    pub id: usize,
    pub polyline: Vec<Vec2>,
    pub closed: bool,
    pub orientation: Option<Orientation>,
    pub tangencies: Vec<Vec2>,
    /// Whether the tangency search ran (it needs a nonvanishing gradient).
    pub tangencies_checked: bool,
    pub touches_border: bool,
    /// Shoelace area of a closed component, `None` for open ones.
    pub signed_area: Option<f64>,
    pub encloses_origin: bool,
    pub q_sign_change: bool,
}

impl ZComponent {
    pub fn is_inverse(&self) -> bool {
        self.orientation == Some(Orientation::Inverse)
    }

    /// Polyline segments, including the closing one for loops.
    pub fn segments(&self) -> impl Iterator<Item = (Vec2, Vec2)> + '_ {
        let n = self.polyline.len();
        let m = if self.closed && n > 2 { n } else { n.saturating_sub(1) };
        (0..m).map(move |k| (self.polyline[k], self.polyline[(k + 1) % n]))
    }

    pub fn distance(&self, p: Vec2) -> f64 {
        if self.polyline.len() == 1 {
            return p.dist(self.polyline[0]);
        }
        self.segments()
            .map(|(a, b)| point_segment_distance(p, a, b).0)
            .fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CollinearitySet {
    pub components: Vec<ZComponent>,
    pub origin_isolated: TriState,
    pub degenerate: bool,
    /// Whether the disk of radius `eps0` around the origin was excluded
    /// (only done when both fields vanish at the origin).
    pub origin_excluded: bool,
    pub window: Window,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct G1Report {
    pub holds: TriState,
    pub worst_point: Option<Vec2>,
    pub min_grad_norm: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct G2Report {
    pub holds: TriState,
    pub hessian_det: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct G3Report {
    pub holds: TriState,
    /// `(tangency point, second derivative of Q along X)`.
    pub values: Vec<(Vec2, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GenericityReport {
    pub g1: G1Report,
    pub g2: G2Report,
    pub g3: G3Report,
}

fn q_scale(sys: &SwitchedSystem, p: Vec2) -> f64 {
    match sys.fields(p) {
        Ok((a, b)) => (a.norm() * b.norm()).max(1.0),
        Err(_) => 1.0,
    }
}

fn on_z(sys: &SwitchedSystem, p: Vec2, tol: &Tolerances) -> bool {
    matches!(sys.q(p), Ok(q) if q.abs() <= tol.refine_tol * q_scale(sys, p))
}

/// Newton projection onto `Q = 0`. `mult` is the assumed multiplicity of
/// the zero (1 for crossings, 2 for touching zeros). Steps are capped at
/// `max_step`.
fn project(sys: &SwitchedSystem, p0: Vec2, mult: f64, max_step: f64, tol: &Tolerances) -> Option<Vec2> {
    let mut p = p0;
    for _ in 0..60 {
        let j = sys.q_jet(p).ok()?;
        if j.value.abs() <= tol.refine_tol * q_scale(sys, p) {
            return Some(p);
        }
        let g = j.grad();
        let g2 = g.norm2();
        if !(g2 > 0.0) {
            return None;
        }
        let mut step = g * (mult * j.value / g2);
        let len = step.norm();
        if len > max_step {
            step = step * (max_step / len);
        }
        p = p - step;
        if p.dist(p0) > 4.0 * max_step || !p.is_finite() {
            return None;
        }
    }
    on_z(sys, p, tol).then_some(p)
}

const NODE_NUDGE: Vec2 = Vec2::new(3.7e-4, 9.3e-4);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum EdgeKey {
    H(usize, usize),
    V(usize, usize),
}

struct Segment {
    a: (EdgeKey, Vec2),
    b: (EdgeKey, Vec2),
}

struct Grid<'a> {
    w: &'a Window,
    n: usize,
    q: Vec<f64>,
    excluded: Vec<bool>,
}

impl Grid<'_> {
    fn qv(&self, i: usize, j: usize) -> f64 {
        self.q[j * (self.n + 1) + i]
    }

    fn pos(&self, i: usize, j: usize) -> bool {
        self.qv(i, j) >= 0.0
    }

    fn crossing(&self, a: (usize, usize), b: (usize, usize)) -> Vec2 {
        let (qa, qb) = (self.qv(a.0, a.1), self.qv(b.0, b.1));
        let t = if qa == qb { 0.5 } else { qa / (qa - qb) };
        self.w.node(a.0, a.1).lerp(self.w.node(b.0, b.1), t.clamp(0.0, 1.0))
    }
}

/// Marching-squares segments of one cell.
fn cell_segments(sys: &SwitchedSystem, g: &Grid, i: usize, j: usize, tol: &Tolerances) -> Result<Vec<Segment>> {
    let c = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)];
    let s: Vec<bool> = c.iter().map(|&(a, b)| g.pos(a, b)).collect();
    let edges = [
        (EdgeKey::H(i, j), c[0], c[1]),
        (EdgeKey::V(i + 1, j), c[1], c[2]),
        (EdgeKey::H(i, j + 1), c[3], c[2]),
        (EdgeKey::V(i, j), c[0], c[3]),
    ];
    let corner_of = [(0, 1), (1, 2), (3, 2), (0, 3)];
    let crossed: Vec<usize> = (0..4)
        .filter(|&e| s[corner_of[e].0] != s[corner_of[e].1])
        .collect();
    let pt = |e: usize| (edges[e].0, g.crossing(edges[e].1, edges[e].2));
    let seg = |e: usize, f: usize| Segment { a: pt(e), b: pt(f) };
    match crossed.len() {
        0 => Ok(vec![]),
        2 => Ok(vec![seg(crossed[0], crossed[1])]),
        _ => {
            let center = g.w.node(i, j).lerp(g.w.node(i + 1, j + 1), 0.5);
            let qc = sys.q(center)?;
            let joined_02 = if qc.abs() > tol.refine_tol * q_scale(sys, center) {
                (qc >= 0.0) == s[0]
            } else {
                // one subdivision: test which diagonal stays connected
                let mid = |k: usize| -> Result<bool> {
                    let p = center.lerp(g.w.node(c[k].0, c[k].1), 0.5);
                    Ok((sys.q(p)? >= 0.0) == s[k])
                };
                let d02 = mid(0)? && mid(2)?;
                let d13 = mid(1)? && mid(3)?;
                match (d02, d13) {
                    (true, false) => true,
                    (false, true) => false,
                    _ => return Err(Error::AmbiguousSaddle { i, j }),
                }
            };
            if joined_02 {
                // separate corners 1 and 3
                Ok(vec![seg(0, 1), seg(2, 3)])
            } else {
                Ok(vec![seg(3, 0), seg(1, 2)])
            }
        }
    }
}

fn link_segments(segs: Vec<Segment>) -> Vec<(Vec<Vec2>, bool)> {
    let mut by_key: HashMap<EdgeKey, Vec<usize>> = HashMap::new();
    for (k, s) in segs.iter().enumerate() {
        by_key.entry(s.a.0).or_default().push(k);
        by_key.entry(s.b.0).or_default().push(k);
    }
    let mut used = vec![false; segs.len()];
    let mut chains = Vec::new();
    let walk = |start: usize, from: EdgeKey, used: &mut Vec<bool>| -> (Vec<Vec2>, bool) {
        let mut pts = Vec::new();
        let mut k = start;
        let mut entry = from;
        let first_key = from;
        loop {
            used[k] = true;
            let s = &segs[k];
            let (enter, exit) = if s.a.0 == entry { (s.a, s.b) } else { (s.b, s.a) };
            if pts.is_empty() {
                pts.push(enter.1);
            }
            pts.push(exit.1);
            if exit.0 == first_key {
                pts.pop();
                return (pts, true);
            }
            match by_key[&exit.0].iter().find(|&&o| o != k && !used[o]) {
                Some(&o) => {
                    k = o;
                    entry = exit.0;
                }
                None => return (pts, false),
            }
        }
    };
    let mut keys: Vec<&EdgeKey> = by_key.keys().collect();
    keys.sort();
    // open chains first, starting from their dangling ends
    for key in keys.iter() {
        let list = &by_key[*key];
        if list.len() == 1 && !used[list[0]] {
            chains.push(walk(list[0], **key, &mut used));
        }
    }
    for k in 0..segs.len() {
        if !used[k] {
            let from = segs[k].a.0;
            chains.push(walk(k, from, &mut used));
        }
    }
    chains
}

fn dedup(pts: &mut Vec<Vec2>, eps: f64) {
    pts.dedup_by(|b, a| a.dist(*b) <= eps);
}

/// Multiplicity-two Newton from the cell center, accepted only when it
/// lands in the cell on a point where `Q` and `grad Q` both vanish.
fn touch_point(sys: &SwitchedSystem, w: &Window, i: usize, j: usize, tol: &Tolerances) -> Option<Vec2> {
    let lo = w.node(i, j);
    let hi = w.node(i + 1, j + 1);
    let center = lo.lerp(hi, 0.5);
    let diag = w.cell_diag();
    let p = if on_z(sys, center, tol) {
        center
    } else {
        let jet = sys.q_jet(center).ok()?;
        let gn = jet.grad().norm();
        if !(gn > 0.0) || jet.value.abs() > gn * diag {
            return None;
        }
        project(sys, center, 2.0, diag, tol)?
    };
    let inside = p.x >= lo.x && p.x < hi.x && p.y >= lo.y && p.y < hi.y;
    if !inside {
        return None;
    }
    let g = sys.q_jet(p).ok()?.grad().norm();
    (g * diag <= tol.refine_tol.sqrt() * q_scale(sys, p)).then_some(p)
}

/// Group touch points into chains ordered by a nearest-neighbour walk.
fn chain_points(mut pts: Vec<Vec2>, radius: f64) -> Vec<Vec<Vec2>> {
    let mut out = Vec::new();
    while !pts.is_empty() {
        // connected cluster of the first remaining point
        let mut cluster = vec![pts.swap_remove(0)];
        let mut k = 0;
        while k < cluster.len() {
            let c = cluster[k];
            let mut m = 0;
            while m < pts.len() {
                if pts[m].dist(c) <= radius {
                    cluster.push(pts.swap_remove(m));
                } else {
                    m += 1;
                }
            }
            k += 1;
        }
        // start from an extreme point, then walk to nearest neighbours
        let far = |from: Vec2, set: &[Vec2]| {
            (0..set.len())
                .max_by(|&a, &b| set[a].dist(from).total_cmp(&set[b].dist(from)))
                .unwrap()
        };
        let s = far(cluster[0], &cluster);
        let mut chain = vec![cluster.swap_remove(s)];
        while !cluster.is_empty() {
            let last = *chain.last().unwrap();
            let nn = (0..cluster.len())
                .min_by(|&a, &b| cluster[a].dist(last).total_cmp(&cluster[b].dist(last)))
                .unwrap();
            chain.push(cluster.swap_remove(nn));
        }
        out.push(chain);
    }
    out
}

/// Trace `Z \ {0}` inside the window.
pub fn trace_zero_set(sys: &SwitchedSystem, w: &Window, tol: &Tolerances) -> Result<CollinearitySet> {
    sys.require_smooth()?;
    w.validate()?;
    let n = w.grid_n;
    let origin_excluded = sys.origin_is_equilibrium(tol.field_zero_tol);

    // node samples of Q and of the field scale
    let rows: Vec<Vec<(f64, f64)>> = (0..=n)
        .into_par_iter()
        .map(|j| {
            (0..=n)
                .map(|i| {
                    let p = w.node(i, j);
                    let (a, b) = sys.fields(p)?;
                    let mut q = a.cross(b);
                    if q.abs() <= tol.refine_tol * (a.norm() * b.norm()).max(1.0) {
                        // node on Z: take the sign from a fixed tiny offset
                        q = sys.q(p + NODE_NUDGE * w.cell_diag())?;
                    }
                    Ok((q, a.norm().max(b.norm())))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let q: Vec<f64> = rows.iter().flatten().map(|v| v.0).collect();
    let scale: Vec<f64> = rows.iter().flatten().map(|v| v.1).collect();

    let cell = w.cell();
    let excluded: Vec<bool> = (0..n * n)
        .map(|k| {
            if !origin_excluded {
                return false;
            }
            let (i, j) = (k % n, k / n);
            let lo = w.node(i, j);
            let near = Vec2::new(0f64.clamp(lo.x, lo.x + cell.x), 0f64.clamp(lo.y, lo.y + cell.y));
            near.norm() < w.eps0
        })
        .collect();
    let grid = Grid { w, n, q, excluded };

    // degenerate cells: Q negligible at all four corners relative to the fields
    let degenerate_cell: Vec<bool> = (0..n * n)
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k % n, k / n);
            if grid.excluded[k] {
                return false;
            }
            let c = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)];
            let s = c
                .iter()
                .map(|&(a, b)| scale[b * (n + 1) + a])
                .fold(0.0, f64::max);
            s > tol.field_zero_tol
                && c
                    .iter()
                    .all(|&(a, b)| grid.qv(a, b).abs() <= tol.degeneracy_tol * s * s)
        })
        .collect();
    let degenerate = degenerate_cell.iter().any(|&d| d);

    // sign-change segments, merged in cell order
    let per_row: Vec<Vec<Segment>> = (0..n)
        .into_par_iter()
        .map(|j| {
            let mut out = Vec::new();
            for i in 0..n {
                if !grid.excluded[j * n + i] {
                    out.extend(cell_segments(sys, &grid, i, j, tol)?);
                }
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    let segs: Vec<Segment> = per_row.into_iter().flatten().collect();
    let chains = link_segments(segs);

    let diag = w.cell_diag();
    let refined: Vec<(Vec<Vec2>, bool)> = chains
        .into_par_iter()
        .map(|(pts, closed)| {
            let mut v: Vec<Vec2> = pts
                .into_iter()
                .filter_map(|p| project(sys, p, 1.0, diag, tol))
                .collect();
            dedup(&mut v, 1e-9 * diag);
            if closed && v.len() > 1 && v[0].dist(*v.last().unwrap()) <= 1e-9 * diag {
                v.pop();
            }
            (v, closed)
        })
        .filter(|(v, _)| !v.is_empty())
        .collect();

    // touching zeros in cells without a sign change
    let touch: Vec<Vec2> = (0..n * n)
        .into_par_iter()
        .filter_map(|k| {
            let (i, j) = (k % n, k / n);
            if grid.excluded[k] || degenerate_cell[k] {
                return None;
            }
            let s0 = grid.pos(i, j);
            let uniform = [(i + 1, j), (i + 1, j + 1), (i, j + 1)]
                .iter()
                .all(|&(a, b)| grid.pos(a, b) == s0);
            if !uniform {
                return None;
            }
            touch_point(sys, w, i, j, tol)
        })
        .collect();
    let touch_chains = chain_points(touch, 2.5 * diag);

    let mut components = Vec::new();
    for (pts, closed) in refined {
        components.push(make_component(sys, w, tol, components.len(), pts, closed));
    }
    for pts in touch_chains {
        components.push(make_component(sys, w, tol, components.len(), pts, false));
    }
    let origin_isolated = isolation_from(sys, w, tol, &components);
    Ok(CollinearitySet {
        components,
        origin_isolated,
        degenerate,
        origin_excluded,
        window: *w,
    })
}

fn make_component(sys: &SwitchedSystem, w: &Window, tol: &Tolerances, id: usize, pts: Vec<Vec2>, closed: bool) -> ZComponent {
    let closed = closed && pts.len() >= 3;
    let diag = w.cell_diag();
    let near_border = |p: Vec2| {
        (p.x - w.xmin).min(w.xmax - p.x).min(p.y - w.ymin).min(w.ymax - p.y) <= diag
    };
    let touches_border = !closed && (near_border(pts[0]) || near_border(*pts.last().unwrap()));
    let probe = tol.probe(w);
    let n = pts.len();
    let q_sign_change = n >= 2
        && (0..n).all(|k| {
            let prev = if k > 0 { pts[k - 1] } else if closed { pts[n - 1] } else { pts[k] };
            let next = if k + 1 < n { pts[k + 1] } else if closed { pts[0] } else { pts[k] };
            let Some(normal) = (next - prev).perp().normalized() else {
                return false;
            };
            match (sys.q(pts[k] + normal * probe), sys.q(pts[k] - normal * probe)) {
                (Ok(a), Ok(b)) => a * b < 0.0,
                _ => false,
            }
        });
    ZComponent {
        id,
        signed_area: closed.then(|| signed_area(&pts)),
        encloses_origin: closed && winding_number(&pts, Vec2::ZERO) != 0,
        polyline: pts,
        closed,
        orientation: None,
        tangencies: Vec::new(),
        tangencies_checked: false,
        touches_border,
        q_sign_change,
    }
}

fn isolation_from(sys: &SwitchedSystem, w: &Window, tol: &Tolerances, comps: &[ZComponent]) -> TriState {
    let reach = w.eps0 + 2.0 * w.cell_diag();
    if comps.iter().any(|c| c.distance(Vec2::ZERO) < reach) {
        return TriState::No;
    }
    const SAMPLES: usize = 1024;
    let clear = [0.25, 0.5, 1.0].iter().all(|&f| {
        let rad = f * w.eps0;
        (0..SAMPLES).all(|k| {
            let p = Vec2::from_polar(rad, 2.0 * std::f64::consts::PI * k as f64 / SAMPLES as f64);
            match sys.fields(p) {
                Ok((a, b)) => {
                    let s = a.norm() * b.norm();
                    s > 0.0 && a.cross(b).abs() > tol.isolation_tol * s
                }
                Err(_) => false,
            }
        })
    });
    if clear {
        TriState::Yes
    } else {
        TriState::Unknown
    }
}

/// Whether the origin is an isolated point of `Z`, probed on three small
/// circles and against the traced components.
pub fn origin_isolation(sys: &SwitchedSystem, w: &Window, tol: &Tolerances) -> Result<TriState> {
    Ok(trace_zero_set(sys, w, tol)?.origin_isolated)
}

/// Direct or inverse, from the sign of `<X, Y>` at every vertex.
pub fn classify_component(sys: &SwitchedSystem, c: &ZComponent, tol: &Tolerances) -> Result<Orientation> {
    let mut seen: Option<Orientation> = None;
    for &p in &c.polyline {
        let (a, b) = sys.fields(p)?;
        if a.norm() <= tol.field_zero_tol || b.norm() <= tol.field_zero_tol {
            return Err(Error::FieldZeroOnComponent {
                component: c.id,
                x: p.x,
                y: p.y,
            });
        }
        let o = if a.dot(b) > 0.0 {
            Orientation::Direct
        } else {
            Orientation::Inverse
        };
        match seen {
            None => seen = Some(o),
            Some(s) if s != o => return Err(Error::InconsistentClassification { component: c.id }),
            _ => {}
        }
    }
    seen.ok_or(Error::InconsistentClassification { component: c.id })
}

fn min_grad(sys: &SwitchedSystem, c: &ZComponent) -> Result<(f64, Vec2)> {
    let mut best = (f64::INFINITY, Vec2::ZERO);
    for &p in &c.polyline {
        let g = sys.q_jet(p)?.grad().norm();
        if g < best.0 {
            best = (g, p);
        }
    }
    Ok(best)
}

/// `<grad Q, X>` at `p`.
fn tangency_fn(sys: &SwitchedSystem, p: Vec2) -> Result<f64> {
    Ok(sys.q_jet(p)?.grad().dot(sys.x.eval(p)?))
}

/// Points of the component where `X` is tangent to `Z`.
pub fn find_tangencies(sys: &SwitchedSystem, c: &ZComponent, w: &Window, tol: &Tolerances) -> Result<Vec<Vec2>> {
    let (g, _) = min_grad(sys, c)?;
    if !(g > tol.g1_tol) || !c.q_sign_change {
        return Err(Error::TangencyUndefined { component: c.id });
    }
    let diag = w.cell_diag();
    let vals: Vec<f64> = c
        .polyline
        .iter()
        .map(|&p| tangency_fn(sys, p))
        .collect::<Result<_>>()?;
    let mut out = Vec::new();
    for (k, (a, b)) in c.segments().enumerate() {
        let n = c.polyline.len();
        let (ga, gb) = (vals[k], vals[(k + 1) % n]);
        if ga == 0.0 {
            out.push(a);
            continue;
        }
        if ga * gb >= 0.0 {
            continue;
        }
        // bisection along the segment, each trial point projected onto Z
        let (mut lo, mut hi) = (0.0, 1.0);
        let len = a.dist(b).max(f64::MIN_POSITIVE);
        let at = |s: f64| project(sys, a.lerp(b, s), 1.0, diag, tol).unwrap_or_else(|| a.lerp(b, s));
        while (hi - lo) * len > tol.tangency_tol {
            let mid = 0.5 * (lo + hi);
            let gm = tangency_fn(sys, at(mid))?;
            if gm == 0.0 {
                lo = mid;
                hi = mid;
                break;
            }
            if (gm > 0.0) == (ga > 0.0) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        out.push(at(0.5 * (lo + hi)));
    }
    if !c.closed {
        if let Some(&last) = c.polyline.last() {
            if *vals.last().unwrap() == 0.0 && c.polyline.len() > 1 {
                out.push(last);
            }
        }
    }
    Ok(out)
}

/// Trace, classify every component and locate tangencies where defined.
pub fn analyze(sys: &SwitchedSystem, w: &Window, tol: &Tolerances) -> Result<CollinearitySet> {
    let mut z = trace_zero_set(sys, w, tol)?;
    for c in &mut z.components {
        c.orientation = Some(classify_component(sys, c, tol)?);
        match find_tangencies(sys, c, w, tol) {
            Ok(t) => {
                c.tangencies = t;
                c.tangencies_checked = true;
            }
            Err(Error::TangencyUndefined { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(z)
}

/// `L_X(L_X Q)(p) = <X, H_Q X + J_X^T grad Q>`.
pub fn second_lie_derivative(sys: &SwitchedSystem, p: Vec2) -> Result<f64> {
    let qj = sys.q_jet(p)?;
    let xj = sys.x.jet(p)?;
    let x = xj.value();
    Ok(x.dot(qj.hess_mul(x) + xj.jacobian_t_mul(qj.grad())))
}

/// Numerical check of the genericity conditions G1, G2, G3.
pub fn check_genericity(sys: &SwitchedSystem, z: &CollinearitySet, tol: &Tolerances) -> GenericityReport {
    let mut worst: Option<(f64, Vec2)> = None;
    let mut g1_eval_failed = false;
    for c in &z.components {
        match min_grad(sys, c) {
            Ok((g, p)) => {
                if worst.is_none_or(|w| g < w.0) {
                    worst = Some((g, p));
                }
            }
            Err(_) => g1_eval_failed = true,
        }
    }
    let structural_fail = z.components.iter().any(|c| !c.q_sign_change);
    let g1_holds = if z.degenerate || structural_fail {
        TriState::No
    } else if g1_eval_failed {
        TriState::Unknown
    } else {
        match worst {
            None => TriState::Yes,
            Some((g, _)) if g > tol.g1_tol => TriState::Yes,
            Some(_) => TriState::Unknown,
        }
    };
    let g1 = G1Report {
        holds: g1_holds,
        worst_point: worst.map(|w| w.1),
        min_grad_norm: worst.map(|w| w.0),
    };

    let hd = sys.q_jet(Vec2::ZERO).ok().map(|j| j.hessian_det());
    let g2 = G2Report {
        holds: match hd {
            Some(d) if d.abs() > tol.g2_tol => TriState::Yes,
            _ => TriState::Unknown,
        },
        hessian_det: hd,
    };

    let mut values = Vec::new();
    let mut g3_ok = g1_holds == TriState::Yes && z.components.iter().all(|c| c.tangencies_checked);
    for c in &z.components {
        for &p in &c.tangencies {
            match second_lie_derivative(sys, p) {
                Ok(v) => {
                    g3_ok &= v.abs() > tol.g3_tol;
                    values.push((p, v));
                }
                Err(_) => g3_ok = false,
            }
        }
    }
    let g3 = G3Report {
        holds: if g3_ok { TriState::Yes } else { TriState::Unknown },
        values,
    };
    GenericityReport { g1, g2, g3 }
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

    #[test]
    fn radial_pair_has_no_components() {
        let s = sys("(-x, -y)", "(y - x, -x - y)");
        let z = trace_zero_set(&s, &Window::square(3.0, 60), &Tolerances::default()).unwrap();
        assert!(z.components.is_empty());
        assert_eq!(z.origin_isolated, TriState::Yes);
        assert!(!z.degenerate);
    }

    #[test]
    fn line_component_through_origin() {
        let s = sys("(1, x)", "(-1, x)");
        let w = Window::square(2.0, 40);
        let tol = Tolerances::default();
        let z = analyze(&s, &w, &tol).unwrap();
        assert_eq!(z.components.len(), 1);
        let c = &z.components[0];
        assert!(c.polyline.iter().all(|p| p.x.abs() < 1e-6));
        assert!(c.touches_border && c.q_sign_change);
        assert_eq!(c.orientation, Some(Orientation::Inverse));
        assert_eq!(z.origin_isolated, TriState::No);
    }

    #[test]
    fn degenerate_pair() {
        let s = sys("(-x, -y)", "(-x, -y)");
        let z = trace_zero_set(&s, &Window::square(1.0, 20), &Tolerances::default()).unwrap();
        assert!(z.degenerate);
        assert!(z.components.is_empty());
        assert_eq!(z.origin_isolated, TriState::Unknown);
    }

    #[test]
    fn parabola_tangency_and_g3() {
        let s = sys("(1, y - x^2)", "(-1, y - x^2)");
        let w = Window::square(2.0, 64);
        let tol = Tolerances::default();
        let z = analyze(&s, &w, &tol).unwrap();
        assert_eq!(z.components.len(), 1);
        let t = &z.components[0].tangencies;
        assert_eq!(t.len(), 1);
        assert!(t[0].norm() < 1e-6, "{:?}", t[0]);
        let g = check_genericity(&s, &z, &tol);
        assert_eq!(g.g1.holds, TriState::Yes);
        assert_eq!(g.g3.holds, TriState::Yes);
        assert!((g.g3.values[0].1 + 4.0).abs() < 1e-6);
    }

    #[test]
    fn touching_line_is_found() {
        // Q = -(y - x)^2 touches zero on the diagonal without a sign change
        let s = sys("(1 - (y - x)^2, 1)", "(1, 1)");
        let w = Window::square(2.0, 50);
        let z = analyze(&s, &w, &Tolerances::default()).unwrap();
        assert_eq!(z.components.len(), 1);
        let c = &z.components[0];
        assert!(!c.q_sign_change);
        assert!(c.polyline.len() > 20);
        assert!(c.polyline.iter().all(|p| (p.x - p.y).abs() < 1e-6));
        assert!(!c.tangencies_checked);
        let g = check_genericity(&s, &z, &Tolerances::default());
        assert_eq!(g.g1.holds, TriState::No);
    }
}
