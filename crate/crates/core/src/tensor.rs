//! Symmetric second-rank tensors in three dimensions.

use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

/// Component labels in storage order.
pub const COMPONENTS: [&str; 6] = ["11", "22", "33", "12", "13", "23"];

/// Symmetric 3×3 tensor stored as `[A11, A22, A33, A12, A13, A23]`.
///
/// Contractions and norms use the full 3×3 Frobenius convention, so each
/// off-diagonal entry counts twice.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SymTensor2 {
    pub c: [f64; 6],
}

impl SymTensor2 {
    pub const ZERO: Self = Self { c: [0.0; 6] };
    pub const IDENTITY: Self = Self { c: [1.0, 1.0, 1.0, 0.0, 0.0, 0.0] };

    pub fn new(c: [f64; 6]) -> Self {
        Self { c }
    }

    /// Tensor with a single nonzero component. For off-diagonal indices both
    /// `A_ij` and `A_ji` are set to `value`.
    pub fn unit(index: usize, value: f64) -> Self {
        let mut c = [0.0; 6];
        c[index] = value;
        Self { c }
    }

    /// Index into storage from a label like `"12"` or `"21"`.
    pub fn index_of(label: &str) -> Option<usize> {
        match label {
            "11" => Some(0),
            "22" => Some(1),
            "33" => Some(2),
            "12" | "21" => Some(3),
            "13" | "31" => Some(4),
            "23" | "32" => Some(5),
            _ => None,
        }
    }

    pub fn is_shear(index: usize) -> bool {
        index >= 3
    }

    pub fn trace(&self) -> f64 {
        self.c[0] + self.c[1] + self.c[2]
    }

    pub fn dev(&self) -> Self {
        let m = self.trace() / 3.0;
        let c = self.c;
        Self::new([c[0] - m, c[1] - m, c[2] - m, c[3], c[4], c[5]])
    }

    pub fn dot(&self, o: &Self) -> f64 {
        let (a, b) = (&self.c, &o.c);
        a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + 2.0 * (a[3] * b[3] + a[4] * b[4] + a[5] * b[5])
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { c: self.c.map(|v| v * s) }
    }

    pub fn is_finite(&self) -> bool {
        self.c.iter().all(|v| v.is_finite())
    }

    /// Full 3×3 matrix.
    pub fn to_matrix(&self) -> nalgebra::Matrix3<f64> {
        let c = self.c;
        nalgebra::Matrix3::new(c[0], c[3], c[4], c[3], c[1], c[5], c[4], c[5], c[2])
    }

    /// `Q A Qᵀ` for an orthogonal `Q`.
    pub fn rotate(&self, q: &nalgebra::Matrix3<f64>) -> Self {
        let m = q * self.to_matrix() * q.transpose();
        Self::new([m[(0, 0)], m[(1, 1)], m[(2, 2)], m[(0, 1)], m[(0, 2)], m[(1, 2)]])
    }

    pub fn max_abs_diff(&self, o: &Self) -> f64 {
        self.c.iter().zip(o.c.iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

impl Add for SymTensor2 {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self { c: std::array::from_fn(|i| self.c[i] + o.c[i]) }
    }
}

impl Sub for SymTensor2 {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self { c: std::array::from_fn(|i| self.c[i] - o.c[i]) }
    }
}

impl Neg for SymTensor2 {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(-1.0)
    }
}

impl Mul<SymTensor2> for f64 {
    type Output = SymTensor2;
    fn mul(self, t: SymTensor2) -> SymTensor2 {
        t.scale(self)
    }
}

impl Mul<f64> for SymTensor2 {
    type Output = SymTensor2;
    fn mul(self, s: f64) -> SymTensor2 {
        self.scale(s)
    }
}

impl AddAssign for SymTensor2 {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl SubAssign for SymTensor2 {
    fn sub_assign(&mut self, o: Self) {
        *self = *self - o;
    }
}
