//! Minimal 3-vector used for positions and directions.

use crate::real::Real;
use serde::{Deserialize, Serialize};
use std::ops::{Add, AddAssign, Div, Index, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Vec3<R> {
    pub x: R,
    pub y: R,
    pub z: R,
}

impl<R: Real> Vec3<R> {
    pub fn new(x: R, y: R, z: R) -> Self {
        Self { x, y, z }
    }

    pub fn zero() -> Self {
        Self::new(R::zero(), R::zero(), R::zero())
    }

    pub fn splat(v: R) -> Self {
        Self::new(v, v, v)
    }

    pub fn from_f64(x: f64, y: f64, z: f64) -> Self {
        Self::new(R::of(x), R::of(y), R::of(z))
    }

    pub fn dot(self, o: Self) -> R {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn norm_sq(self) -> R {
        self.dot(self)
    }

    pub fn norm(self) -> R {
        self.norm_sq().sqrt()
    }

    pub fn normalized(self) -> Self {
        self / self.norm()
    }

    /// Componentwise division.
    pub fn div_comp(self, o: Self) -> Self {
        Self::new(self.x / o.x, self.y / o.y, self.z / o.z)
    }

    /// Componentwise multiplication.
    pub fn mul_comp(self, o: Self) -> Self {
        Self::new(self.x * o.x, self.y * o.y, self.z * o.z)
    }

    pub fn cross(self, o: Self) -> Self {
        Self::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn max_component(self) -> R {
        self.x.max(self.y).max(self.z)
    }

    pub fn to_array(self) -> [R; 3] {
        [self.x, self.y, self.z]
    }

    /// An arbitrary unit vector orthogonal to `self` (assumed unit length).
    pub fn any_orthonormal(self) -> Self {
        let pick = if self.x.abs() < R::of(0.9) {
            Self::new(R::one(), R::zero(), R::zero())
        } else {
            Self::new(R::zero(), R::one(), R::zero())
        };
        self.cross(pick).normalized()
    }
}

impl<R: Real> Add for Vec3<R> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl<R: Real> AddAssign for Vec3<R> {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl<R: Real> Sub for Vec3<R> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl<R: Real> Mul<R> for Vec3<R> {
    type Output = Self;
    fn mul(self, s: R) -> Self {
        Self::new(self.x * s, self.y * s, self.z * s)
    }
}

impl<R: Real> Div<R> for Vec3<R> {
    type Output = Self;
    fn div(self, s: R) -> Self {
        Self::new(self.x / s, self.y / s, self.z / s)
    }
}

impl<R: Real> Neg for Vec3<R> {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y, -self.z)
    }
}

impl<R: Real> Index<usize> for Vec3<R> {
    type Output = R;
    fn index(&self, i: usize) -> &R {
        match i {
            0 => &self.x,
            1 => &self.y,
            2 => &self.z,
            _ => panic!("Vec3 index out of range: {i}"),
        }
    }
}
