//! Planar vector fields given by component expressions.
//!
//! A Cartesian field is `(X1(x, y), X2(x, y))`. A polar field is given by
//! `(magnitude(r, theta), direction(r, theta))` and evaluates to
//! `magnitude * (cos(direction), sin(direction))`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{parse_pair, Env, Expr, Func, Var};
use crate::geometry::Vec2;
use crate::jet::{Jet2, Scalar, VecJet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldForm {
    Cartesian,
    Polar,
}

impl FieldForm {
    fn vars(self) -> &'static [Var] {
        match self {
            FieldForm::Cartesian => &[Var::X, Var::Y],
            FieldForm::Polar => &[Var::R, Var::Theta],
        }
    }
}

impl fmt::Display for FieldForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FieldForm::Cartesian => "cartesian",
            FieldForm::Polar => "polar",
        })
    }
}

impl FromStr for FieldForm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "cartesian" => Ok(FieldForm::Cartesian),
            "polar" => Ok(FieldForm::Polar),
            other => Err(Error::Invalid(format!(
                "unknown field form `{other}` (expected cartesian or polar)"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct FieldSpec {
    pub name: String,
    pub form: FieldForm,
    pub source: String,
    comps: [Expr; 2],
}

impl PartialEq for FieldSpec {
    fn eq(&self, other: &Self) -> bool {
        self.form == other.form && self.source == other.source
    }
}

struct Cart<S>(S, S);

impl<S: Copy> Env<S> for Cart<S> {
    fn get(&self, v: Var) -> S {
        match v {
            Var::X | Var::R => self.0,
            Var::Y | Var::Theta => self.1,
        }
    }
}

/// Parse a field from `"(c1, c2)"`.
pub fn parse_field(source: &str, form: FieldForm) -> Result<FieldSpec> {
    let comps = parse_pair(source, form.vars())?;
    Ok(FieldSpec {
        name: String::new(),
        form,
        source: source.to_string(),
        comps,
    })
}

impl FieldSpec {
    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn components(&self) -> &[Expr; 2] {
        &self.comps
    }

    /// Fields using `frac` are only piecewise smooth.
    pub fn is_smooth(&self) -> bool {
        !self.comps.iter().any(|c| c.uses_func(Func::Frac))
    }

    fn eval_generic<S: Scalar>(&self, x: S, y: S) -> Result<[S; 2]> {
        match self.form {
            FieldForm::Cartesian => {
                let env = Cart(x, y);
                Ok([self.comps[0].eval(&env, &self.source)?, self.comps[1].eval(&env, &self.source)?])
            }
            FieldForm::Polar => {
                let (r, th) = polar_coords(x, y)?;
                let env = Cart(r, th);
                let m = self.comps[0].eval(&env, &self.source)?;
                let d = self.comps[1].eval(&env, &self.source)?;
                let dv = d.value();
                let c = d.compose(dv.cos(), -dv.sin(), -dv.cos());
                let s = d.compose(dv.sin(), dv.cos(), -dv.sin());
                Ok([m * c, m * s])
            }
        }
    }

    /// Field value at `p` in Cartesian components.
    pub fn eval(&self, p: Vec2) -> Result<Vec2> {
        let [a, b] = self.eval_generic(p.x, p.y)?;
        Ok(Vec2::new(a, b))
    }

    /// Second-order jets of both components.
    pub fn jet2(&self, p: Vec2) -> Result<[Jet2; 2]> {
        let out = self.eval_generic(Jet2::var_x(p.x), Jet2::var_y(p.y))?;
        if !out.iter().all(Jet2::is_finite) {
            return Err(Error::Domain {
                msg: "non-finite derivative".into(),
                span: self.comps[0].span.join(self.comps[1].span),
                snippet: self.source.clone(),
            });
        }
        Ok(out)
    }

    /// Value and Jacobian at `p`.
    pub fn jet(&self, p: Vec2) -> Result<VecJet> {
        Ok(VecJet::from_components(self.jet2(p)?))
    }
}

/// `(r, theta)` as functions of `(x, y)`. At the origin only plain values are
/// defined (`r = 0`, `theta = 0`); jets there are refused.
fn polar_coords<S: Scalar>(x: S, y: S) -> Result<(S, S)> {
    let (xv, yv) = (x.value(), y.value());
    let r2 = xv * xv + yv * yv;
    if !S::TRACKS_DERIVATIVES {
        return Ok((S::constant(r2.sqrt()), S::constant(yv.atan2(xv))));
    }
    if r2 == 0.0 {
        return Err(Error::PolarOrigin);
    }
    let r_sq = x * x + y * y;
    let rv = r2.sqrt();
    let r = r_sq.compose(rv, 0.5 / rv, -0.25 / (rv * r2));
    Ok((r, theta_jet(yv.atan2(xv), x, y)))
}

/// Exact jet of `atan2(y, x)` composed with jets `x`, `y`.
fn theta_jet<S: Scalar>(value: f64, x: S, y: S) -> S {
    // grad theta = (-y, x) / r^2, Hess theta = [[2xy, y^2 - x^2], [y^2 - x^2, -2xy]] / r^4;
    // the second-order Taylor polynomial in (dx, dy) composes exactly at order 2.
    let (xv, yv) = (x.value(), y.value());
    let r2 = xv * xv + yv * yv;
    let tx = -yv / r2;
    let ty = xv / r2;
    let r4 = r2 * r2;
    let txx = 2.0 * xv * yv / r4;
    let txy = (yv * yv - xv * xv) / r4;
    let tyy = -2.0 * xv * yv / r4;
    let dx = x - S::constant(xv);
    let dy = y - S::constant(yv);
    let half = S::constant(0.5);
    S::constant(value)
        + S::constant(tx) * dx
        + S::constant(ty) * dy
        + half * (S::constant(txx) * dx * dx + S::constant(2.0 * txy) * dx * dy + S::constant(tyy) * dy * dy)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_eval_cartesian() {
        let f = parse_field("(-x, -y)", FieldForm::Cartesian).unwrap();
        assert_eq!(f.eval(Vec2::new(1.0, 2.0)).unwrap(), Vec2::new(-1.0, -2.0));
        let g = parse_field("(y - x, -x - y)", FieldForm::Cartesian).unwrap();
        assert_eq!(g.eval(Vec2::new(1.0, 0.0)).unwrap(), Vec2::new(-1.0, -1.0));
    }

    #[test]
    fn polar_definition() {
        let f = parse_field("(r, theta + pi/2 + 0.3)", FieldForm::Polar).unwrap();
        let v = f.eval(Vec2::new(1.0, 0.0)).unwrap();
        let a = std::f64::consts::FRAC_PI_2 + 0.3;
        assert!((v.x - a.cos()).abs() < 1e-15 && (v.y - a.sin()).abs() < 1e-15);
        // magnitude r extends by zero at the origin
        assert_eq!(f.eval(Vec2::ZERO).unwrap(), Vec2::ZERO);
        assert!(matches!(f.jet(Vec2::ZERO), Err(Error::PolarOrigin)));
    }

    #[test]
    fn malformed_sources() {
        assert!(matches!(
            parse_field("(-x, ", FieldForm::Cartesian),
            Err(Error::Syntax { pos: 5, .. })
        ));
        assert!(matches!(
            parse_field("(-x, -y) z", FieldForm::Cartesian),
            Err(Error::Syntax { .. })
        ));
        assert!(matches!(
            parse_field("(x, theta)", FieldForm::Cartesian),
            Err(Error::UnknownIdentifier { .. })
        ));
        assert!(matches!(
            parse_field("(x, y)", FieldForm::Polar),
            Err(Error::UnknownIdentifier { .. })
        ));
        let f = parse_field("(1/x, 0)", FieldForm::Cartesian).unwrap();
        assert!(matches!(f.eval(Vec2::ZERO), Err(Error::Domain { .. })));
    }

    #[test]
    fn jacobians() {
        let f = parse_field("(-x, -y)", FieldForm::Cartesian).unwrap();
        assert_eq!(f.jet(Vec2::new(0.3, -2.0)).unwrap().jacobian, [[-1.0, 0.0], [0.0, -1.0]]);
        let g = parse_field("(y - x, -x - y)", FieldForm::Cartesian).unwrap();
        assert_eq!(g.jet(Vec2::ZERO).unwrap().jacobian, [[-1.0, 1.0], [-1.0, -1.0]]);
        let h = parse_field("(x^2, x*y)", FieldForm::Cartesian).unwrap();
        let j = h.jet(Vec2::new(1.0, 2.0)).unwrap().jacobian;
        assert_eq!(j, [[2.0, 0.0], [2.0, 1.0]]);
        // finite-difference cross-check of the same Jacobian
        let e = 1e-6;
        let p = Vec2::new(1.0, 2.0);
        let dx = (h.eval(p + Vec2::new(e, 0.0)).unwrap() - h.eval(p - Vec2::new(e, 0.0)).unwrap()) * (0.5 / e);
        let dy = (h.eval(p + Vec2::new(0.0, e)).unwrap() - h.eval(p - Vec2::new(0.0, e)).unwrap()) * (0.5 / e);
        assert!((dx.x - j[0][0]).abs() < 1e-6 && (dx.y - j[1][0]).abs() < 1e-6);
        assert!((dy.x - j[0][1]).abs() < 1e-6 && (dy.y - j[1][1]).abs() < 1e-6);
    }

    #[test]
    fn smoothness_flag() {
        assert!(!parse_field("(r, theta + frac(r))", FieldForm::Polar).unwrap().is_smooth());
        assert!(parse_field("(r, theta + bump(r))", FieldForm::Polar).unwrap().is_smooth());
    }
}
