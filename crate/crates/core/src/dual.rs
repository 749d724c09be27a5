//! Second-order forward-mode dual numbers with a fixed number of directions.
//!
//! `Dual2<N>` carries a value, an `N`-wide gradient and a full `N x N`
//! Hessian. Evaluating a scalar expression of `N` seed variables yields exact
//! first and second derivatives of that expression. The solver instantiates
//! `N = 12` for edge-based terms (four stencil vertices) and `N = 9` for
//! triangle-based terms.

use crate::math::Scalar;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy)]
pub struct Dual2<const N: usize> {
    pub v: f64,
    pub g: [f64; N],
    pub h: [[f64; N]; N],
}

impl<const N: usize> Dual2<N> {
    #[inline]
    pub fn constant(v: f64) -> Self {
        Self {
            v,
            g: [0.0; N],
            h: [[0.0; N]; N],
        }
    }

    /// Seed variable number `k`: value `v`, unit derivative in direction `k`.
    #[inline]
    pub fn variable(v: f64, k: usize) -> Self {
        let mut g = [0.0; N];
        g[k] = 1.0;
        Self {
            v,
            g,
            h: [[0.0; N]; N],
        }
    }

    /// Chain rule for a unary map with derivatives `d1 = f'`, `d2 = f''`
    /// evaluated at `self.v`; `fv = f(self.v)`.
    #[inline]
    fn unary(self, fv: f64, d1: f64, d2: f64) -> Self {
        let mut r = Self::constant(fv);
        for i in 0..N {
            r.g[i] = d1 * self.g[i];
        }
        for i in 0..N {
            for j in 0..N {
                r.h[i][j] = d1 * self.h[i][j] + d2 * self.g[i] * self.g[j];
            }
        }
        r
    }
}

impl<const N: usize> Add for Dual2<N> {
    type Output = Self;
    #[inline]
    fn add(mut self, o: Self) -> Self {
        self.v += o.v;
        for i in 0..N {
            self.g[i] += o.g[i];
        }
        for i in 0..N {
            for j in 0..N {
                self.h[i][j] += o.h[i][j];
            }
        }
        self
    }
}

impl<const N: usize> AddAssign for Dual2<N> {
    #[inline]
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl<const N: usize> Sub for Dual2<N> {
    type Output = Self;
    #[inline]
    fn sub(mut self, o: Self) -> Self {
        self.v -= o.v;
        for i in 0..N {
            self.g[i] -= o.g[i];
        }
        for i in 0..N {
            for j in 0..N {
                self.h[i][j] -= o.h[i][j];
            }
        }
        self
    }
}

impl<const N: usize> Neg for Dual2<N> {
    type Output = Self;
    #[inline]
    fn neg(mut self) -> Self {
        self.v = -self.v;
        for i in 0..N {
            self.g[i] = -self.g[i];
        }
        for i in 0..N {
            for j in 0..N {
                self.h[i][j] = -self.h[i][j];
            }
        }
        self
    }
}

impl<const N: usize> Mul for Dual2<N> {
    type Output = Self;
    #[inline]
    fn mul(self, o: Self) -> Self {
        let mut r = Self::constant(self.v * o.v);
        for i in 0..N {
            r.g[i] = self.g[i] * o.v + o.g[i] * self.v;
        }
        for i in 0..N {
            for j in 0..N {
                // Grouping keeps the Hessian bitwise symmetric.
                r.h[i][j] = self.h[i][j] * o.v
                    + o.h[i][j] * self.v
                    + (self.g[i] * o.g[j] + self.g[j] * o.g[i]);
            }
        }
        r
    }
}

impl<const N: usize> Div for Dual2<N> {
    type Output = Self;
    #[inline]
    fn div(self, o: Self) -> Self {
        let inv = o.v.recip();
        self * o.unary(inv, -inv * inv, 2.0 * inv * inv * inv)
    }
}

impl<const N: usize> Scalar for Dual2<N> {
    #[inline]
    fn zero() -> Self {
        Self::constant(0.0)
    }

    #[inline]
    fn from_f64(v: f64) -> Self {
        Self::constant(v)
    }

    #[inline]
    fn value(self) -> f64 {
        self.v
    }

    #[inline]
    fn scale(mut self, k: f64) -> Self {
        self.v *= k;
        for i in 0..N {
            self.g[i] *= k;
        }
        for i in 0..N {
            for j in 0..N {
                self.h[i][j] *= k;
            }
        }
        self
    }

    #[inline]
    fn sqrt(self) -> Self {
        let s = self.v.sqrt();
        let d1 = 0.5 / s;
        self.unary(s, d1, -0.5 * d1 / self.v)
    }

    /// `self` is the y-argument. Smooth away from the branch cut at the
    /// negative x-axis, which the callers exclude.
    fn atan2(self, x: Self) -> Self {
        let (yv, xv) = (self.v, x.v);
        let q = xv * xv + yv * yv;
        let fy = xv / q;
        let fx = -yv / q;
        let q2 = q * q;
        let fyy = -2.0 * xv * yv / q2;
        let fxx = 2.0 * xv * yv / q2;
        let fxy = (yv * yv - xv * xv) / q2;
        let mut r = Self::constant(yv.atan2(xv));
        for i in 0..N {
            r.g[i] = fy * self.g[i] + fx * x.g[i];
        }
        for i in 0..N {
            for j in 0..N {
                r.h[i][j] = fy * self.h[i][j]
                    + fx * x.h[i][j]
                    + fyy * self.g[i] * self.g[j]
                    + fxy * (self.g[i] * x.g[j] + x.g[i] * self.g[j])
                    + fxx * x.g[i] * x.g[j];
            }
        }
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::Vec3;

    type D = Dual2<3>;

    // A lumpy composite touching every primitive: products, quotients,
    // square roots and atan2 through vector operations.
    fn f<S: Scalar>(p: Vec3<S>) -> S {
        let q = Vec3::new(
            p.x * p.y + S::from_f64(0.3),
            p.z / (p.x + S::from_f64(2.0)),
            p.x,
        );
        let n = (q + p.scale(0.25)).norm();
        let t = p.cross(q).norm_sq().sqrt() + S::from_f64(0.1);
        n.atan2(t) + n * t.scale(0.05)
    }

    fn eval(p: [f64; 3]) -> f64 {
        f::<f64>(Vec3::from_f64s(p))
    }

    #[test]
    fn gradient_and_hessian_match_finite_differences() {
        let p0 = [0.7, -0.4, 1.3];
        let seeded = Vec3::new(
            D::variable(p0[0], 0),
            D::variable(p0[1], 1),
            D::variable(p0[2], 2),
        );
        let out = f(seeded);
        let eps = 1e-5;
        for i in 0..3 {
            let mut pp = p0;
            let mut pm = p0;
            pp[i] += eps;
            pm[i] -= eps;
            let fd = (eval(pp) - eval(pm)) / (2.0 * eps);
            assert!(
                (out.g[i] - fd).abs() < 1e-8 * (1.0 + fd.abs()),
                "grad[{i}]: {} vs fd {fd}",
                out.g[i]
            );
        }
        for i in 0..3 {
            for j in 0..3 {
                let mut ppp = p0;
                let mut ppm = p0;
                let mut pmp = p0;
                let mut pmm = p0;
                ppp[i] += eps;
                ppp[j] += eps;
                ppm[i] += eps;
                ppm[j] -= eps;
                pmp[i] -= eps;
                pmp[j] += eps;
                pmm[i] -= eps;
                pmm[j] -= eps;
                let fd = (eval(ppp) - eval(ppm) - eval(pmp) + eval(pmm)) / (4.0 * eps * eps);
                assert!(
                    (out.h[i][j] - fd).abs() < 1e-5 * (1.0 + fd.abs()),
                    "hess[{i}][{j}]: {} vs fd {fd}",
                    out.h[i][j]
                );
            }
        }
        // Symmetry is exact by construction.
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(out.h[i][j], out.h[j][i]);
            }
        }
    }
}
