//! Vector, quaternion and rotation-matrix algebra.
//!
//! Quaternions are Hamilton, scalar-first `(w, x, y, z)`. An attitude
//! quaternion `q` maps body vectors into the inertial frame through the
//! sandwich `v_n = q * [0, v_b] * q^-1`.

use std::fmt;
use std::ops::{Add, AddAssign, Div, Index, Mul, Neg, Sub, SubAssign};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpatialError {
    #[error("rotation matrix is not orthonormal (residual {residual:.3e})")]
    NotOrthonormal { residual: f64 },
    #[error("rotation matrix is improper (determinant {det:.6})")]
    Improper { det: f64 },
}

/// Sign function with `sgn(0) = +1`.
#[inline]
pub fn sgn(x: f64) -> f64 {
    if x < 0.0 {
        -1.0
    } else {
        1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3::new(0.0, 0.0, 0.0);
    pub const X: Vec3 = Vec3::new(1.0, 0.0, 0.0);
    pub const Y: Vec3 = Vec3::new(0.0, 1.0, 0.0);
    pub const Z: Vec3 = Vec3::new(0.0, 0.0, 1.0);

    #[inline]
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    #[inline]
    pub const fn splat(v: f64) -> Self {
        Self::new(v, v, v)
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    #[inline]
    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    #[inline]
    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn norm_squared(self) -> f64 {
        self.dot(self)
    }

    /// Unit vector in the same direction, or `None` when the norm is not
    /// strictly positive.
    pub fn normalized(self) -> Option<Vec3> {
        let n = self.norm();
        (n > 0.0 && n.is_finite()).then(|| self / n)
    }

    /// Componentwise product; applies a diagonal matrix stored as a vector.
    #[inline]
    pub fn hadamard(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x * o.x, self.y * o.y, self.z * o.z)
    }

    pub fn max_abs(self) -> f64 {
        self.x.abs().max(self.y.abs()).max(self.z.abs())
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl Index<usize> for Vec3 {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        match i {
            0 => &self.x,
            1 => &self.y,
            2 => &self.z,
            _ => panic!("Vec3 index {i} out of range"),
        }
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    #[inline]
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Vec3 {
    fn add_assign(&mut self, o: Vec3) {
        *self = *self + o;
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    #[inline]
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl SubAssign for Vec3 {
    fn sub_assign(&mut self, o: Vec3) {
        *self = *self - o;
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    #[inline]
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Mul<Vec3> for f64 {
    type Output = Vec3;
    #[inline]
    fn mul(self, v: Vec3) -> Vec3 {
        v * self
    }
}

impl Div<f64> for Vec3 {
    type Output = Vec3;
    fn div(self, s: f64) -> Vec3 {
        Vec3::new(self.x / s, self.y / s, self.z / s)
    }
}

impl fmt::Display for Vec3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}, {}]", self.x, self.y, self.z)
    }
}

/// General 3x3 matrix, row-major storage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat3 {
    pub m: [[f64; 3]; 3],
}

impl Mat3 {
    pub const IDENTITY: Mat3 = Mat3 {
        m: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
    };

    pub fn from_rows(m: [[f64; 3]; 3]) -> Self {
        Self { m }
    }

    pub fn from_cols(c0: Vec3, c1: Vec3, c2: Vec3) -> Self {
        Self {
            m: [[c0.x, c1.x, c2.x], [c0.y, c1.y, c2.y], [c0.z, c1.z, c2.z]],
        }
    }

    pub fn diag(d: Vec3) -> Self {
        Self {
            m: [[d.x, 0.0, 0.0], [0.0, d.y, 0.0], [0.0, 0.0, d.z]],
        }
    }

    pub fn col(&self, j: usize) -> Vec3 {
        Vec3::new(self.m[0][j], self.m[1][j], self.m[2][j])
    }

    pub fn transpose(&self) -> Mat3 {
        let m = &self.m;
        Mat3::from_rows([
            [m[0][0], m[1][0], m[2][0]],
            [m[0][1], m[1][1], m[2][1]],
            [m[0][2], m[1][2], m[2][2]],
        ])
    }

    pub fn mul_vec(&self, v: Vec3) -> Vec3 {
        let m = &self.m;
        Vec3::new(
            m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
            m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
            m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z,
        )
    }

    pub fn mul_mat(&self, o: &Mat3) -> Mat3 {
        let mut out = [[0.0; 3]; 3];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = (0..3).map(|k| self.m[i][k] * o.m[k][j]).sum();
            }
        }
        Mat3::from_rows(out)
    }

    pub fn determinant(&self) -> f64 {
        let m = &self.m;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// Inverse via the adjugate; `None` if singular.
    pub fn inverse(&self) -> Option<Mat3> {
        let det = self.determinant();
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        let m = &self.m;
        let c = |a: usize, b: usize, c: usize, d: usize| m[a][b] * m[c][d] - m[a][d] * m[c][b];
        let adj = [
            [c(1, 1, 2, 2), -c(0, 1, 2, 2), c(0, 1, 1, 2)],
            [-c(1, 0, 2, 2), c(0, 0, 2, 2), -c(0, 0, 1, 2)],
            [c(1, 0, 2, 1), -c(0, 0, 2, 1), c(0, 0, 1, 1)],
        ];
        let mut out = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                out[i][j] = adj[i][j] / det;
            }
        }
        Some(Mat3::from_rows(out))
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        let m = &self.m;
        (m[0][1] - m[1][0]).abs() <= tol
            && (m[0][2] - m[2][0]).abs() <= tol
            && (m[1][2] - m[2][1]).abs() <= tol
    }

    /// Sylvester's criterion on the leading principal minors.
    pub fn is_positive_definite(&self) -> bool {
        let m = &self.m;
        let d1 = m[0][0];
        let d2 = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        d1 > 0.0 && d2 > 0.0 && self.determinant() > 0.0
    }
}

/// Proper rotation matrix. Columns are the images of the body axes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationMatrix(Mat3);

impl RotationMatrix {
    pub const IDENTITY: RotationMatrix = RotationMatrix(Mat3::IDENTITY);

    /// Checks orthonormality (max-abs residual of `S^T S - I` at most 1e-6)
    /// and `det = +1`.
    pub fn new(m: Mat3) -> Result<Self, SpatialError> {
        let residual = orthonormality_residual(&m);
        if !(residual <= 1e-6) {
            return Err(SpatialError::NotOrthonormal { residual });
        }
        let det = m.determinant();
        if det <= 0.0 {
            return Err(SpatialError::Improper { det });
        }
        Ok(Self(m))
    }

    pub fn from_cols(c0: Vec3, c1: Vec3, c2: Vec3) -> Result<Self, SpatialError> {
        Self::new(Mat3::from_cols(c0, c1, c2))
    }

    pub fn matrix(&self) -> &Mat3 {
        &self.0
    }

    pub fn col(&self, j: usize) -> Vec3 {
        self.0.col(j)
    }

    pub fn rotate(&self, v: Vec3) -> Vec3 {
        self.0.mul_vec(v)
    }

    /// Shepperd's method: picks the largest of `w, x, y, z` to divide by.
    /// The result has a non-negative scalar part.
    pub fn to_quat(&self) -> Quaternion {
        let m = &self.0.m;
        let trace = m[0][0] + m[1][1] + m[2][2];
        let q = if trace >= m[0][0] && trace >= m[1][1] && trace >= m[2][2] {
            let s = (1.0 + trace).sqrt() * 2.0;
            Quaternion::new(
                0.25 * s,
                (m[2][1] - m[1][2]) / s,
                (m[0][2] - m[2][0]) / s,
                (m[1][0] - m[0][1]) / s,
            )
        } else if m[0][0] >= m[1][1] && m[0][0] >= m[2][2] {
            let s = (1.0 + m[0][0] - m[1][1] - m[2][2]).sqrt() * 2.0;
            Quaternion::new(
                (m[2][1] - m[1][2]) / s,
                0.25 * s,
                (m[0][1] + m[1][0]) / s,
                (m[0][2] + m[2][0]) / s,
            )
        } else if m[1][1] >= m[2][2] {
            let s = (1.0 + m[1][1] - m[0][0] - m[2][2]).sqrt() * 2.0;
            Quaternion::new(
                (m[0][2] - m[2][0]) / s,
                (m[0][1] + m[1][0]) / s,
                0.25 * s,
                (m[1][2] + m[2][1]) / s,
            )
        } else {
            let s = (1.0 + m[2][2] - m[0][0] - m[1][1]).sqrt() * 2.0;
            Quaternion::new(
                (m[1][0] - m[0][1]) / s,
                (m[0][2] + m[2][0]) / s,
                (m[1][2] + m[2][1]) / s,
                0.25 * s,
            )
        };
        let q = q.normalized();
        if q.w < 0.0 {
            -q
        } else {
            q
        }
    }
}

/// Max-abs entry of `S^T S - I`.
pub fn orthonormality_residual(m: &Mat3) -> f64 {
    let g = m.transpose().mul_mat(m);
    let mut r: f64 = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            let e = if i == j { 1.0 } else { 0.0 };
            let d = (g.m[i][j] - e).abs();
            // NaN must propagate into the residual
            r = if d.is_nan() { f64::NAN } else { r.max(d) };
            if r.is_nan() {
                return r;
            }
        }
    }
    r
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quaternion {
    pub w: f64,
    pub v: Vec3,
}

impl Default for Quaternion {
    fn default() -> Self {
        Self::IDENTITY
    }
}

impl Quaternion {
    pub const IDENTITY: Quaternion = Quaternion {
        w: 1.0,
        v: Vec3::ZERO,
    };

    #[inline]
    pub const fn new(w: f64, x: f64, y: f64, z: f64) -> Self {
        Self {
            w,
            v: Vec3::new(x, y, z),
        }
    }

    pub const fn from_parts(w: f64, v: Vec3) -> Self {
        Self { w, v }
    }

    /// Pure quaternion `[0, v]`.
    pub const fn pure(v: Vec3) -> Self {
        Self { w: 0.0, v }
    }

    /// Rotation of `angle` radians about `axis`; the axis is normalized here.
    pub fn from_axis_angle(axis: Vec3, angle: f64) -> Self {
        let Some(a) = axis.normalized() else {
            return Self::IDENTITY;
        };
        let (s, c) = (0.5 * angle).sin_cos();
        Self::from_parts(c, a * s)
    }

    /// Exponential map of a rotation vector (axis times angle).
    pub fn from_rotation_vector(rv: Vec3) -> Self {
        let angle = rv.norm();
        if angle < 1e-12 {
            // second-order series keeps small perturbations accurate
            return Self::from_parts(1.0 - angle * angle / 8.0, rv * 0.5).normalized();
        }
        Self::from_axis_angle(rv, angle)
    }

    pub fn yaw(psi: f64) -> Self {
        let (s, c) = (0.5 * psi).sin_cos();
        Self::new(c, 0.0, 0.0, s)
    }

    /// Z-Y-X (yaw, pitch, roll) Euler angles in radians.
    pub fn from_euler_zyx(roll: f64, pitch: f64, yaw: f64) -> Self {
        Self::from_axis_angle(Vec3::Z, yaw)
            .mul(Self::from_axis_angle(Vec3::Y, pitch))
            .mul(Self::from_axis_angle(Vec3::X, roll))
    }

    /// Returns `(roll, pitch, yaw)` in radians, Z-Y-X convention.
    pub fn to_euler_zyx(&self) -> (f64, f64, f64) {
        let (w, x, y, z) = (self.w, self.v.x, self.v.y, self.v.z);
        let roll = (2.0 * (w * x + y * z)).atan2(1.0 - 2.0 * (x * x + y * y));
        let pitch = (2.0 * (w * y - z * x)).clamp(-1.0, 1.0).asin();
        let yaw = (2.0 * (w * z + x * y)).atan2(1.0 - 2.0 * (y * y + z * z));
        (roll, pitch, yaw)
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.w, self.v.x, self.v.y, self.v.z]
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Self::new(a[0], a[1], a[2], a[3])
    }

    pub fn dot(&self, o: &Quaternion) -> f64 {
        self.w * o.w + self.v.dot(o.v)
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn normalized(&self) -> Quaternion {
        let n = self.norm();
        Quaternion::from_parts(self.w / n, self.v / n)
    }

    pub fn conjugate(&self) -> Quaternion {
        Quaternion::from_parts(self.w, -self.v)
    }

    /// General inverse `q* / |q|^2`.
    pub fn inverse(&self) -> Quaternion {
        let n2 = self.dot(self);
        Quaternion::from_parts(self.w / n2, -self.v / n2)
    }

    /// Hamilton product `self * o`.
    #[inline]
    #[allow(clippy::should_implement_trait)]
    pub fn mul(self, o: Quaternion) -> Quaternion {
        Quaternion::from_parts(
            self.w * o.w - self.v.dot(o.v),
            o.v * self.w + self.v * o.w + self.v.cross(o.v),
        )
    }

    pub fn scale(self, s: f64) -> Quaternion {
        Quaternion::from_parts(self.w * s, self.v * s)
    }

    pub fn add(self, o: Quaternion) -> Quaternion {
        Quaternion::from_parts(self.w + o.w, self.v + o.v)
    }

    pub fn sub(self, o: Quaternion) -> Quaternion {
        Quaternion::from_parts(self.w - o.w, self.v - o.v)
    }

    /// Rotates a body-frame vector into the inertial frame, `q [0,v] q^-1`.
    pub fn rotate(&self, v: Vec3) -> Vec3 {
        self.mul(Quaternion::pure(v)).mul(self.conjugate()).v
    }

    /// Inverse rotation (inertial into body) for a unit quaternion.
    pub fn rotate_inverse(&self, v: Vec3) -> Vec3 {
        self.conjugate().rotate(v)
    }

    /// Rotation angle in `[0, pi]`, independent of the sign of `q`.
    pub fn angle(&self) -> f64 {
        2.0 * self.v.norm().atan2(self.w.abs())
    }

    pub fn is_finite(&self) -> bool {
        self.w.is_finite() && self.v.is_finite()
    }

    pub fn to_rotmat(&self) -> RotationMatrix {
        quat_to_rotmat(*self)
    }
}

impl Neg for Quaternion {
    type Output = Quaternion;
    fn neg(self) -> Quaternion {
        Quaternion::from_parts(-self.w, -self.v)
    }
}

impl fmt::Display for Quaternion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}, {}, {}]", self.w, self.v.x, self.v.y, self.v.z)
    }
}

pub fn quat_mul(a: Quaternion, b: Quaternion) -> Quaternion {
    a.mul(b)
}

/// Attitude error `q_d^-1 * q`, renormalized.
pub fn quat_error(q_d: Quaternion, q: Quaternion) -> Quaternion {
    q_d.conjugate().mul(q).normalized()
}

pub fn quat_to_rotmat(q: Quaternion) -> RotationMatrix {
    let q = q.normalized();
    let (w, x, y, z) = (q.w, q.v.x, q.v.y, q.v.z);
    RotationMatrix(Mat3::from_rows([
        [
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - w * z),
            2.0 * (x * z + w * y),
        ],
        [
            2.0 * (x * y + w * z),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - w * x),
        ],
        [
            2.0 * (x * z - w * y),
            2.0 * (y * z + w * x),
            1.0 - 2.0 * (x * x + y * y),
        ],
    ]))
}

pub fn rotmat_to_quat(s: &Mat3) -> Result<Quaternion, SpatialError> {
    Ok(RotationMatrix::new(*s)?.to_quat())
}
