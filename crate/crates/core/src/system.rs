//! Switched systems, analysis windows and numerical tolerances.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::FieldSpec;
use crate::geometry::Vec2;
use crate::jet::{Jet2, VecJet};

/// An ordered pair of planar fields `(X, Y)` driving `q' = u X + (1 - u) Y`.
#[derive(Debug, Clone, PartialEq)]
pub struct SwitchedSystem {
    pub name: String,
    pub x: FieldSpec,
    pub y: FieldSpec,
    /// Notes carried into every verdict about this system.
    pub caveats: Vec<String>,
}

impl SwitchedSystem {
    pub fn new(name: impl Into<String>, x: FieldSpec, y: FieldSpec) -> Self {
        SwitchedSystem {
            name: name.into(),
            x,
            y,
            caveats: Vec::new(),
        }
    }

    pub fn swapped(&self) -> Self {
        SwitchedSystem {
            name: format!("{} (swapped)", self.name),
            x: self.y.clone(),
            y: self.x.clone(),
            caveats: self.caveats.clone(),
        }
    }

    pub fn is_smooth(&self) -> bool {
        self.x.is_smooth() && self.y.is_smooth()
    }

    pub fn require_smooth(&self) -> Result<()> {
        for f in [&self.x, &self.y] {
            if !f.is_smooth() {
                return Err(Error::NotSmooth(if f.name.is_empty() {
                    f.source.clone()
                } else {
                    f.name.clone()
                }));
            }
        }
        Ok(())
    }

    /// `u X(p) + (1 - u) Y(p)`.
    pub fn velocity(&self, u: f64, p: Vec2) -> Result<Vec2> {
        if u == 1.0 {
            return self.x.eval(p);
        }
        if u == 0.0 {
            return self.y.eval(p);
        }
        Ok(self.x.eval(p)? * u + self.y.eval(p)? * (1.0 - u))
    }

    pub fn fields(&self, p: Vec2) -> Result<(Vec2, Vec2)> {
        Ok((self.x.eval(p)?, self.y.eval(p)?))
    }

    /// `Q(p) = det(X(p), Y(p))`.
    pub fn q(&self, p: Vec2) -> Result<f64> {
        let (a, b) = self.fields(p)?;
        Ok(a.cross(b))
    }

    /// `Q` with its analytic gradient and Hessian.
    pub fn q_jet(&self, p: Vec2) -> Result<Jet2> {
        let [x1, x2] = self.x.jet2(p)?;
        let [y1, y2] = self.y.jet2(p)?;
        Ok(x1 * y2 - x2 * y1)
    }

    pub fn field_jets(&self, p: Vec2) -> Result<(VecJet, VecJet)> {
        Ok((self.x.jet(p)?, self.y.jet(p)?))
    }

    /// Whether both fields vanish at the origin (the standing assumption of
    /// the stability theory); when they do not, the origin is an ordinary point.
    pub fn origin_is_equilibrium(&self, tol: f64) -> bool {
        match self.fields(Vec2::ZERO) {
            Ok((a, b)) => a.norm() <= tol && b.norm() <= tol,
            Err(_) => false,
        }
    }
}

/// Rectangular analysis window with its sampling grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub xmin: f64,
    pub xmax: f64,
    pub ymin: f64,
    pub ymax: f64,
    /// Number of cells per axis.
    pub grid_n: usize,
    /// Radius of the disk around the origin excluded from tracing.
    pub eps0: f64,
}

impl Window {
    /// Square window `[-half, half]^2` with a default exclusion radius.
    pub fn square(half: f64, grid_n: usize) -> Self {
        Window {
            xmin: -half,
            xmax: half,
            ymin: -half,
            ymax: half,
            grid_n,
            eps0: 0.05 * half,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Invalid(format!("window: {m}")));
        if !(self.xmin < self.xmax && self.ymin < self.ymax) {
            return bad("need xmin < xmax and ymin < ymax");
        }
        if !(self.xmin < 0.0 && self.xmax > 0.0 && self.ymin < 0.0 && self.ymax > 0.0) {
            return bad("must contain the origin in its interior");
        }
        if self.grid_n < 4 {
            return bad("grid_n must be at least 4");
        }
        let half = (self.xmax - self.xmin).min(self.ymax - self.ymin) * 0.5;
        if !(self.eps0 > 0.0 && self.eps0 < half) {
            return bad("eps0 must be positive and below the smallest half-extent");
        }
        Ok(())
    }

    pub fn cell(&self) -> Vec2 {
        Vec2::new(
            (self.xmax - self.xmin) / self.grid_n as f64,
            (self.ymax - self.ymin) / self.grid_n as f64,
        )
    }

    pub fn cell_diag(&self) -> f64 {
        self.cell().norm()
    }

    pub fn node(&self, i: usize, j: usize) -> Vec2 {
        let c = self.cell();
        Vec2::new(self.xmin + i as f64 * c.x, self.ymin + j as f64 * c.y)
    }

    pub fn contains(&self, p: Vec2) -> bool {
        p.x >= self.xmin && p.x <= self.xmax && p.y >= self.ymin && p.y <= self.ymax
    }

    /// Halve the cell size.
    pub fn refined(&self) -> Self {
        Window {
            grid_n: self.grid_n * 2,
            ..*self
        }
    }
}

/// Numerical tolerances of the analysis. All have defaults and can be
/// overridden by name from a config file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Newton refinement target for `|Q|`, relative to `max(1, |X||Y|)`.
    pub refine_tol: f64,
    pub g1_tol: f64,
    pub g2_tol: f64,
    pub g3_tol: f64,
    /// Offset used to probe the sign of `Q` across a component; `None` means half a cell.
    pub probe_dist: Option<f64>,
    pub field_zero_tol: f64,
    /// A cell whose `|Q|` samples all stay below this (relative) level is degenerate.
    pub degeneracy_tol: f64,
    /// Minimum `|sin(angle(X, Y))|` on the probe circles for an isolated origin.
    pub isolation_tol: f64,
    pub tangency_tol: f64,
    pub hurwitz_tol: f64,
    pub gain_tol: f64,
    pub rate_tol: f64,
    pub n_angles: usize,
    pub conv_tol: f64,
    /// Escape radius as a multiple of `|q0|`.
    pub escape_factor: f64,
    /// Event location tolerance relative to the time horizon.
    pub event_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            refine_tol: 1e-9,
            g1_tol: 1e-6,
            g2_tol: 1e-8,
            g3_tol: 1e-6,
            probe_dist: None,
            field_zero_tol: 1e-9,
            degeneracy_tol: 1e-12,
            isolation_tol: 1e-6,
            tangency_tol: 1e-10,
            hurwitz_tol: 1e-9,
            gain_tol: 1e-6,
            rate_tol: 1e-6,
            n_angles: 4096,
            conv_tol: 1e-6,
            escape_factor: 1e3,
            event_tol: 1e-9,
        }
    }
}

impl Tolerances {
    pub fn probe(&self, w: &Window) -> f64 {
        self.probe_dist
            .unwrap_or_else(|| 0.5 * w.cell().x.min(w.cell().y))
    }
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
    fn q_jet_radial_pair() {
        let s = sys("(-x, -y)", "(y - x, -x - y)");
        let j = s.q_jet(Vec2::new(1.0, 1.0)).unwrap();
        assert_eq!(j.value, 2.0);
        assert_eq!(j.gradient, [2.0, 2.0]);
        assert_eq!(j.hessian, [2.0, 0.0, 2.0]);
        let z = s.q_jet(Vec2::ZERO).unwrap();
        assert_eq!(z.value, 0.0);
        assert_eq!(z.gradient, [0.0, 0.0]);
    }

    #[test]
    fn q_jet_linear_in_x() {
        let s = sys("(1, x)", "(-1, x)");
        let j = s.q_jet(Vec2::new(0.5, 7.0)).unwrap();
        assert_eq!(j.value, 1.0);
        assert_eq!(j.gradient, [2.0, 0.0]);
        assert_eq!(j.hessian, [0.0; 3]);
    }

    #[test]
    fn q_is_antisymmetric() {
        let s = sys("(-x + x*y, -y)", "(y - x^3, -x - y)");
        let p = Vec2::new(0.3, -1.1);
        assert_eq!(s.q(p).unwrap(), -s.swapped().q(p).unwrap());
    }

    #[test]
    fn window_validation() {
        assert!(Window::square(3.0, 100).validate().is_ok());
        let mut w = Window::square(3.0, 100);
        w.xmin = 0.5;
        assert!(w.validate().is_err());
        let mut w = Window::square(3.0, 100);
        w.eps0 = 5.0;
        assert!(w.validate().is_err());
    }
}
