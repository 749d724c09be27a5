//! Small fixed-size vector/tensor math, generic over the scalar type.
//!
//! Everything geometric in this crate is built from these primitives so the
//! same formulas can be evaluated with plain `f64` or with forward-mode dual
//! numbers (see [`crate::dual`]) for exact derivatives.

use std::fmt::Debug;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

/// Scalar abstraction shared by `f64` and the dual-number types.
pub trait Scalar:
    Copy
    + Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
{
    fn zero() -> Self;
    fn from_f64(v: f64) -> Self;
    /// Primal (value) part.
    fn value(self) -> f64;
    /// Multiplication by a constant that carries no derivative.
    fn scale(self, k: f64) -> Self;
    fn sqrt(self) -> Self;
    /// Four-quadrant arctangent; `self` is the y-argument.
    fn atan2(self, x: Self) -> Self;
}

impl Scalar for f64 {
    #[inline]
    fn zero() -> Self {
        0.0
    }
    #[inline]
    fn from_f64(v: f64) -> Self {
        v
    }
    #[inline]
    fn value(self) -> f64 {
        self
    }
    #[inline]
    fn scale(self, k: f64) -> Self {
        self * k
    }
    #[inline]
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    #[inline]
    fn atan2(self, x: Self) -> Self {
        f64::atan2(self, x)
    }
}

/// A 3-vector over an arbitrary scalar.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vec3<S> {
    pub x: S,
    pub y: S,
    pub z: S,
}

/// Plain `f64` 3-vector, the common case.
pub type V3 = Vec3<f64>;

impl<S: Scalar> Vec3<S> {
    #[inline]
    pub fn new(x: S, y: S, z: S) -> Self {
        Self { x, y, z }
    }

    #[inline]
    pub fn zero() -> Self {
        Self::new(S::zero(), S::zero(), S::zero())
    }

    #[inline]
    pub fn from_f64s(v: [f64; 3]) -> Self {
        Self::new(S::from_f64(v[0]), S::from_f64(v[1]), S::from_f64(v[2]))
    }

    #[inline]
    pub fn dot(self, o: Self) -> S {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    #[inline]
    pub fn cross(self, o: Self) -> Self {
        Self::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    #[inline]
    pub fn norm_sq(self) -> S {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> S {
        self.norm_sq().sqrt()
    }

    /// Unit vector and the original norm.
    #[inline]
    pub fn normalized(self) -> (Self, S) {
        let n = self.norm();
        (self / n, n)
    }

    /// Componentwise multiplication by a derivative-free constant.
    #[inline]
    pub fn scale(self, k: f64) -> Self {
        Self::new(self.x.scale(k), self.y.scale(k), self.z.scale(k))
    }

    #[inline]
    pub fn values(self) -> [f64; 3] {
        [self.x.value(), self.y.value(), self.z.value()]
    }
}

impl V3 {
    #[inline]
    pub fn as_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

impl<S: Scalar> From<[f64; 3]> for Vec3<S> {
    #[inline]
    fn from(v: [f64; 3]) -> Self {
        Self::from_f64s(v)
    }
}

impl<S: Scalar> Add for Vec3<S> {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl<S: Scalar> Sub for Vec3<S> {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl<S: Scalar> Neg for Vec3<S> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y, -self.z)
    }
}

impl<S: Scalar> Mul<S> for Vec3<S> {
    type Output = Self;
    #[inline]
    fn mul(self, k: S) -> Self {
        Self::new(self.x * k, self.y * k, self.z * k)
    }
}

impl<S: Scalar> Div<S> for Vec3<S> {
    type Output = Self;
    #[inline]
    fn div(self, k: S) -> Self {
        Self::new(self.x / k, self.y / k, self.z / k)
    }
}

impl<S: Scalar> AddAssign for Vec3<S> {
    #[inline]
    fn add_assign(&mut self, o: Self) {
        self.x += o.x;
        self.y += o.y;
        self.z += o.z;
    }
}

/// Unit normal and area of the triangle `(a, b, c)` with right-hand-rule
/// orientation. The caller is responsible for rejecting degenerate triangles;
/// this divides by the (doubled) area.
#[inline]
pub fn triangle_normal_area<S: Scalar>(a: Vec3<S>, b: Vec3<S>, c: Vec3<S>) -> (Vec3<S>, S) {
    let w = (b - a).cross(c - a);
    let (n, twice_area) = w.normalized();
    (n, twice_area.scale(0.5))
}

/// Area only; no normalization involved.
#[inline]
pub fn triangle_area<S: Scalar>(a: Vec3<S>, b: Vec3<S>, c: Vec3<S>) -> S {
    (b - a).cross(c - a).norm().scale(0.5)
}

/// Circumcenter of the triangle `(a, b, c)`, computed in the triangle's own
/// plane by intersecting perpendicular bisectors. May lie outside the triangle
/// for obtuse triangles.
#[inline]
pub fn circumcenter<S: Scalar>(a: Vec3<S>, b: Vec3<S>, c: Vec3<S>) -> Vec3<S> {
    let u = b - a;
    let v = c - a;
    let uu = u.norm_sq();
    let vv = v.norm_sq();
    let uv = u.dot(v);
    // Gram determinant equals |u x v|^2 and is positive for non-degenerate
    // triangles.
    let det = uu * vv - uv * uv;
    let alpha = (uu * vv - vv * uv).scale(0.5) / det;
    let beta = (vv * uu - uu * uv).scale(0.5) / det;
    a + u * alpha + v * beta
}

/// Plain 3x3 matrix in row-major layout.
pub type Mat3 = [[f64; 3]; 3];

/// Matrix-vector product.
#[inline]
pub fn mat_vec(m: &Mat3, v: V3) -> V3 {
    let v = v.as_array();
    V3::new(
        m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
        m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
        m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
    )
}

/// `v^T m` as a vector.
#[inline]
pub fn vec_mat(v: V3, m: &Mat3) -> V3 {
    let v = v.as_array();
    V3::new(
        m[0][0] * v[0] + m[1][0] * v[1] + m[2][0] * v[2],
        m[0][1] * v[0] + m[1][1] * v[1] + m[2][1] * v[2],
        m[0][2] * v[0] + m[1][2] * v[1] + m[2][2] * v[2],
    )
}

/// Outer product `a b^T`.
#[inline]
pub fn outer(a: V3, b: V3) -> Mat3 {
    let a = a.as_array();
    let b = b.as_array();
    std::array::from_fn(|i| std::array::from_fn(|j| a[i] * b[j]))
}

/// Orthogonal projector `id - n n^T` onto the plane normal to the unit
/// vector `n`.
#[inline]
pub fn tangent_projector(n: V3) -> Mat3 {
    let n = n.as_array();
    std::array::from_fn(|i| {
        std::array::from_fn(|j| if i == j { 1.0 - n[i] * n[j] } else { -n[i] * n[j] })
    })
}

/// Dense order-3 tensor over `f64` with all axes in ambient 3-space.
///
/// Used for the per-triangle Jacobian of the auxiliary field and the matching
/// split/multiplier variables. Axis 0 indexes the value (sphere-tangent)
/// direction; axes 1 and 2 index the in-plane derivative directions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tensor3(pub [[[f64; 3]; 3]; 3]);

impl Tensor3 {
    #[inline]
    pub fn zero() -> Self {
        Tensor3([[[0.0; 3]; 3]; 3])
    }

    /// Outer product `u ⊗ m` with `(u ⊗ m)[i][j][k] = u[i] * m[j][k]`.
    pub fn outer(u: V3, m: [[f64; 3]; 3]) -> Self {
        let u = u.as_array();
        let mut t = [[[0.0; 3]; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    t[i][j][k] = u[i] * m[j][k];
                }
            }
        }
        Tensor3(t)
    }

    /// Frobenius inner product.
    pub fn dot(&self, o: &Self) -> f64 {
        let mut s = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    s += self.0[i][j][k] * o.0[i][j][k];
                }
            }
        }
        s
    }

    #[inline]
    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn add(&self, o: &Self) -> Self {
        self.combine(o, 1.0)
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.combine(o, -1.0)
    }

    /// `self + k * o`.
    pub fn combine(&self, o: &Self, k: f64) -> Self {
        let mut t = self.0;
        for i in 0..3 {
            for j in 0..3 {
                for k2 in 0..3 {
                    t[i][j][k2] += k * o.0[i][j][k2];
                }
            }
        }
        Tensor3(t)
    }

    pub fn scale(&self, k: f64) -> Self {
        let mut t = self.0;
        for plane in t.iter_mut() {
            for row in plane.iter_mut() {
                for e in row.iter_mut() {
                    *e *= k;
                }
            }
        }
        Tensor3(t)
    }

    /// Applies the matrix `m` to every axis:
    /// `out[i][j][k] = Σ_abc self[a][b][c] m[i][a] m[j][b] m[k][c]`.
    pub fn apply_matrix_all_axes(&self, m: &[[f64; 3]; 3]) -> Self {
        // Three successive single-axis contractions.
        let mut t1 = [[[0.0; 3]; 3]; 3];
        for i in 0..3 {
            for b in 0..3 {
                for c in 0..3 {
                    let mut s = 0.0;
                    for a in 0..3 {
                        s += m[i][a] * self.0[a][b][c];
                    }
                    t1[i][b][c] = s;
                }
            }
        }
        let mut t2 = [[[0.0; 3]; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                for c in 0..3 {
                    let mut s = 0.0;
                    for b in 0..3 {
                        s += m[j][b] * t1[i][b][c];
                    }
                    t2[i][j][c] = s;
                }
            }
        }
        let mut t3 = [[[0.0; 3]; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    let mut s = 0.0;
                    for c in 0..3 {
                        s += m[k][c] * t2[i][j][c];
                    }
                    t3[i][j][k] = s;
                }
            }
        }
        Tensor3(t3)
    }

    /// Contracts axes 1 and 2 with a symmetric matrix for fixed axis 0:
    /// `out[a] = Σ_bc self[a][b][c] m[b][c]`.
    pub fn contract_last_two(&self, m: &[[f64; 3]; 3]) -> V3 {
        let mut out = [0.0; 3];
        for (a, plane) in self.0.iter().enumerate() {
            let mut s = 0.0;
            for b in 0..3 {
                for c in 0..3 {
                    s += plane[b][c] * m[b][c];
                }
            }
            out[a] = s;
        }
        V3::new(out[0], out[1], out[2])
    }

    /// Maximum absolute contraction of any axis with `n`; zero for tensors
    /// tangent to `n` in every axis.
    pub fn tangency_defect(&self, n: V3) -> f64 {
        let n = n.as_array();
        let mut worst = 0.0_f64;
        for j in 0..3 {
            for k in 0..3 {
                let mut s0 = 0.0;
                let mut s1 = 0.0;
                let mut s2 = 0.0;
                for a in 0..3 {
                    s0 += self.0[a][j][k] * n[a];
                    s1 += self.0[j][a][k] * n[a];
                    s2 += self.0[j][k][a] * n[a];
                }
                worst = worst.max(s0.abs()).max(s1.abs()).max(s2.abs());
            }
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn circumcenter_is_equidistant() {
        let a = V3::new(0.3, -0.2, 1.1);
        let b = V3::new(1.7, 0.4, 0.9);
        let c = V3::new(0.5, 1.3, 1.6);
        let m = circumcenter(a, b, c);
        let ra = (m - a).norm();
        assert_relative_eq!(ra, (m - b).norm(), max_relative = 1e-12);
        assert_relative_eq!(ra, (m - c).norm(), max_relative = 1e-12);
        // In-plane: the circumcenter lies in the triangle plane.
        let (n, _) = triangle_normal_area(a, b, c);
        assert!((m - a).dot(n).abs() < 1e-12);
    }

    #[test]
    fn circumcenter_equilateral() {
        // Unit equilateral triangle in the xy-plane; circumcenter at the
        // centroid, distance sqrt(3)/6 from each edge midpoint.
        let a = V3::new(0.0, 0.0, 0.0);
        let b = V3::new(1.0, 0.0, 0.0);
        let c = V3::new(0.5, 3f64.sqrt() / 2.0, 0.0);
        let m = circumcenter(a, b, c);
        let mid = (a + b).scale(0.5);
        assert_relative_eq!((m - mid).norm(), 3f64.sqrt() / 6.0, epsilon = 1e-14);
    }

    #[test]
    fn normal_follows_right_hand_rule() {
        let (n, area) = triangle_normal_area(
            V3::new(0.0, 0.0, 0.0),
            V3::new(1.0, 0.0, 0.0),
            V3::new(0.0, 1.0, 0.0),
        );
        assert_relative_eq!(n.z, 1.0, epsilon = 1e-15);
        assert_relative_eq!(area, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn tensor_axiswise_matrix_matches_rank_one() {
        let u = V3::new(0.3, -1.2, 0.7);
        let m = [[1.0, 0.2, 0.0], [-0.4, 0.9, 0.3], [0.1, 0.0, 1.2]];
        let p = [[0.5, 0.1, -0.2], [0.1, 0.8, 0.0], [-0.2, 0.0, 0.3]];
        let t = Tensor3::outer(u, p);
        let tm = t.apply_matrix_all_axes(&m);
        // (M ∘ (u ⊗ p))[i][j][k] = (M u)[i] * (M p M^T)[j][k]
        let mu = V3::new(
            m[0][0] * u.x + m[0][1] * u.y + m[0][2] * u.z,
            m[1][0] * u.x + m[1][1] * u.y + m[1][2] * u.z,
            m[2][0] * u.x + m[2][1] * u.y + m[2][2] * u.z,
        );
        let mut mpmt = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                for a in 0..3 {
                    for b in 0..3 {
                        mpmt[i][j] += m[i][a] * p[a][b] * m[j][b];
                    }
                }
            }
        }
        let expect = Tensor3::outer(mu, mpmt);
        assert!(tm.sub(&expect).norm() < 1e-13);
    }
}
