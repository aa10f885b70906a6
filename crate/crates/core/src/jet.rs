//! Second-order forward-mode jets in two variables.
//!
//! A [`Jet2`] carries a value together with its gradient and Hessian with
//! respect to the plane coordinates `(x, y)`. Arithmetic propagates all three
//! exactly by the chain rule, so evaluating an expression tree on seeded jets
//! yields analytic first and second derivatives.

use std::ops::{Add, Mul, Neg, Sub};

use serde::Serialize;

use crate::geometry::Vec2;

/// Numeric type an expression tree can be evaluated in.
pub trait Scalar: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Neg<Output = Self> {
    /// Whether derivative information is tracked.
    const TRACKS_DERIVATIVES: bool;

    fn constant(v: f64) -> Self;
    fn value(&self) -> f64;

    /// Compose a scalar function `f` with `self`, given `f(v)`, `f'(v)`, `f''(v)`
    /// at `v = self.value()`.
    fn compose(self, f0: f64, f1: f64, f2: f64) -> Self;

    fn is_constant(&self) -> bool;
}

impl Scalar for f64 {
    const TRACKS_DERIVATIVES: bool = false;

    fn constant(v: f64) -> Self {
        v
    }

    fn value(&self) -> f64 {
        *self
    }

    fn compose(self, f0: f64, _f1: f64, _f2: f64) -> Self {
        f0
    }

    fn is_constant(&self) -> bool {
        true
    }
}

/// Value, gradient and symmetric Hessian of a function of `(x, y)`.
/// The Hessian is stored as `[h_xx, h_xy, h_yy]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Jet2 {
    pub value: f64,
    pub gradient: [f64; 2],
    pub hessian: [f64; 3],
}

impl Jet2 {
    pub fn cst(v: f64) -> Self {
        Jet2 {
            value: v,
            ..Default::default()
        }
    }

    pub fn var_x(v: f64) -> Self {
        Jet2 {
            value: v,
            gradient: [1.0, 0.0],
            hessian: [0.0; 3],
        }
    }

    pub fn var_y(v: f64) -> Self {
        Jet2 {
            value: v,
            gradient: [0.0, 1.0],
            hessian: [0.0; 3],
        }
    }

    pub fn grad(&self) -> Vec2 {
        Vec2::new(self.gradient[0], self.gradient[1])
    }

    /// Hessian applied to a vector.
    pub fn hess_mul(&self, v: Vec2) -> Vec2 {
        let [a, b, c] = self.hessian;
        Vec2::new(a * v.x + b * v.y, b * v.x + c * v.y)
    }

    pub fn hessian_det(&self) -> f64 {
        let [a, b, c] = self.hessian;
        a * c - b * b
    }

    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
            && self.gradient.iter().all(|g| g.is_finite())
            && self.hessian.iter().all(|h| h.is_finite())
    }
}

impl Add for Jet2 {
    type Output = Jet2;
    fn add(self, o: Jet2) -> Jet2 {
        Jet2 {
            value: self.value + o.value,
            gradient: [self.gradient[0] + o.gradient[0], self.gradient[1] + o.gradient[1]],
            hessian: [
                self.hessian[0] + o.hessian[0],
                self.hessian[1] + o.hessian[1],
                self.hessian[2] + o.hessian[2],
            ],
        }
    }
}

impl Sub for Jet2 {
    type Output = Jet2;
    fn sub(self, o: Jet2) -> Jet2 {
        self + (-o)
    }
}

impl Neg for Jet2 {
    type Output = Jet2;
    fn neg(self) -> Jet2 {
        Jet2 {
            value: -self.value,
            gradient: [-self.gradient[0], -self.gradient[1]],
            hessian: [-self.hessian[0], -self.hessian[1], -self.hessian[2]],
        }
    }
}

impl Mul for Jet2 {
    type Output = Jet2;
    fn mul(self, o: Jet2) -> Jet2 {
        let (a, b) = (self, o);
        let [ax, ay] = a.gradient;
        let [bx, by] = b.gradient;
        Jet2 {
            value: a.value * b.value,
            gradient: [a.value * bx + b.value * ax, a.value * by + b.value * ay],
            hessian: [
                a.value * b.hessian[0] + b.value * a.hessian[0] + 2.0 * ax * bx,
                a.value * b.hessian[1] + b.value * a.hessian[1] + ax * by + ay * bx,
                a.value * b.hessian[2] + b.value * a.hessian[2] + 2.0 * ay * by,
            ],
        }
    }
}

impl Mul<f64> for Jet2 {
    type Output = Jet2;
    fn mul(self, s: f64) -> Jet2 {
        Jet2 {
            value: self.value * s,
            gradient: [self.gradient[0] * s, self.gradient[1] * s],
            hessian: [self.hessian[0] * s, self.hessian[1] * s, self.hessian[2] * s],
        }
    }
}

impl Scalar for Jet2 {
    const TRACKS_DERIVATIVES: bool = true;

    fn constant(v: f64) -> Self {
        Jet2::cst(v)
    }

    fn value(&self) -> f64 {
        self.value
    }

    fn compose(self, f0: f64, f1: f64, f2: f64) -> Self {
        let [gx, gy] = self.gradient;
        let [hxx, hxy, hyy] = self.hessian;
        Jet2 {
            value: f0,
            gradient: [f1 * gx, f1 * gy],
            hessian: [
                f1 * hxx + f2 * gx * gx,
                f1 * hxy + f2 * gx * gy,
                f1 * hyy + f2 * gy * gy,
            ],
        }
    }

    fn is_constant(&self) -> bool {
        self.gradient == [0.0; 2] && self.hessian == [0.0; 3]
    }
}

/// A vector field value together with its Jacobian (rows are components).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VecJet {
    pub value: [f64; 2],
    pub jacobian: [[f64; 2]; 2],
}

impl VecJet {
    pub fn from_components(c: [Jet2; 2]) -> Self {
        VecJet {
            value: [c[0].value, c[1].value],
            jacobian: [c[0].gradient, c[1].gradient],
        }
    }

    pub fn value(&self) -> Vec2 {
        Vec2::new(self.value[0], self.value[1])
    }

    /// `J^T v`.
    pub fn jacobian_t_mul(&self, v: Vec2) -> Vec2 {
        let j = self.jacobian;
        Vec2::new(j[0][0] * v.x + j[1][0] * v.y, j[0][1] * v.x + j[1][1] * v.y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_rule_second_order() {
        // f = x^2 y at (2, 3): f = 12, grad (12, 4), hess [[6, 4], [4, 0]]
        let x = Jet2::var_x(2.0);
        let y = Jet2::var_y(3.0);
        let f = x * x * y;
        assert_eq!(f.value, 12.0);
        assert_eq!(f.gradient, [12.0, 4.0]);
        assert_eq!(f.hessian, [6.0, 4.0, 0.0]);
    }

    #[test]
    fn compose_matches_sin() {
        let x = Jet2::var_x(0.7);
        let s = x.compose(0.7f64.sin(), 0.7f64.cos(), -0.7f64.sin());
        assert_eq!(s.gradient[0], 0.7f64.cos());
        assert_eq!(s.hessian[0], -0.7f64.sin());
        assert_eq!(s.gradient[1], 0.0);
    }
}
