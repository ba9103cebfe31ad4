//! Wendland C2 (quintic) smoothing kernel with compact support `2h`.
//!
//! `W(q) = σ_d (1 - q/2)^4 (1 + 2q)`, `q = r/h`, with `σ_2 = 7 / (4π h²)` and
//! `σ_3 = 21 / (16π h³)`.

use std::f64::consts::PI;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothingKernel {
    h: f64,
    dim: usize,
    normalization: f64,
}

impl SmoothingKernel {
    pub fn new(h: f64, dim: usize) -> Result<Self> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::invalid(format!("smoothing length must be positive, got {h}")));
        }
        let normalization = match dim {
            2 => 7.0 / (4.0 * PI * h * h),
            3 => 21.0 / (16.0 * PI * h * h * h),
            _ => return Err(Error::invalid(format!("kernel dimension must be 2 or 3, got {dim}"))),
        };
        Ok(Self { h, dim, normalization })
    }

    /// Kernel with `h = 1.3 dp`.
    pub fn for_spacing(dp: f64, dim: usize) -> Result<Self> {
        Self::new(1.3 * dp, dim)
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn support_radius(&self) -> f64 {
        2.0 * self.h
    }

    pub fn normalization(&self) -> f64 {
        self.normalization
    }

    pub fn value(&self, r: f64) -> Result<f64> {
        check_distance(r)?;
        Ok(self.value_unchecked(r))
    }

    /// Radial derivative `dW/dr`, non-positive everywhere.
    pub fn grad_mag(&self, r: f64) -> Result<f64> {
        check_distance(r)?;
        Ok(self.grad_mag_unchecked(r))
    }

    #[inline]
    pub(crate) fn value_unchecked(&self, r: f64) -> f64 {
        let q = r / self.h;
        if q >= 2.0 {
            return 0.0;
        }
        let t = 1.0 - 0.5 * q;
        let t2 = t * t;
        self.normalization * t2 * t2 * (1.0 + 2.0 * q)
    }

    #[inline]
    pub(crate) fn grad_mag_unchecked(&self, r: f64) -> f64 {
        let q = r / self.h;
        if q >= 2.0 {
            return 0.0;
        }
        let t = 1.0 - 0.5 * q;
        -5.0 * self.normalization / self.h * q * t * t * t
    }
}

fn check_distance(r: f64) -> Result<()> {
    if r >= 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("distance must be non-negative, got {r}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Composite Simpson over the radial measure of a ball, independent of
    /// the closed-form normalisation.
    fn radial_integral(kernel: &SmoothingKernel, n: usize) -> f64 {
        let a = kernel.support_radius();
        let step = a / n as f64;
        let shell = |r: f64| match kernel.dim() {
            2 => 2.0 * PI * r,
            _ => 4.0 * PI * r * r,
        };
        let f = |r: f64| kernel.value(r).unwrap() * shell(r);
        let mut sum = f(0.0) + f(a);
        for k in 1..n {
            let w = if k % 2 == 1 { 4.0 } else { 2.0 };
            sum += w * f(k as f64 * step);
        }
        sum * step / 3.0
    }

    #[test]
    fn zero_at_support_edge() {
        for dim in [2, 3] {
            let k = SmoothingKernel::new(0.37, dim).unwrap();
            assert_eq!(k.value(k.support_radius()).unwrap(), 0.0);
            assert_eq!(k.value(3.0).unwrap(), 0.0);
            assert_eq!(k.grad_mag(k.support_radius()).unwrap(), 0.0);
            assert_eq!(k.grad_mag(0.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn origin_value_2d_unit_h() {
        let k = SmoothingKernel::new(1.0, 2).unwrap();
        let w0 = k.value(0.0).unwrap();
        assert!((w0 - 7.0 / (4.0 * PI)).abs() < 1e-15);
        assert!((w0 - 0.5570).abs() < 1e-4);
    }

    #[test]
    fn normalization_by_quadrature() {
        for dim in [2, 3] {
            for h in [0.013, 1.0, 2.5] {
                let k = SmoothingKernel::new(h, dim).unwrap();
                let integral = radial_integral(&k, 4000);
                assert!((integral - 1.0).abs() < 1e-4, "dim {dim} h {h}: {integral}");
            }
        }
    }

    #[test]
    fn derivative_matches_central_differences() {
        for dim in [2, 3] {
            let h = 0.8;
            let k = SmoothingKernel::new(h, dim).unwrap();
            let eps = 1e-6 * h;
            let fd = |r: f64| (k.value(r + eps).unwrap() - k.value(r - eps).unwrap()) / (2.0 * eps);
            let g = k.grad_mag(0.7 * h).unwrap();
            assert!((g - fd(0.7 * h)).abs() <= 1e-6 * g.abs());
            for i in 1..=100 {
                let r = 1.98 * h * i as f64 / 100.0;
                let g = k.grad_mag(r).unwrap();
                assert!((g - fd(r)).abs() <= 1e-6 * g.abs(), "r = {r}");
            }
        }
    }

    #[test]
    fn monotone_and_signed() {
        let k = SmoothingKernel::new(1.3, 3).unwrap();
        let mut prev = f64::INFINITY;
        for i in 0..=400 {
            let r = 2.0 * 1.3 * i as f64 / 400.0;
            let w = k.value(r).unwrap();
            assert!(w >= 0.0 && w <= prev);
            assert!(k.grad_mag(r).unwrap() <= 0.0);
            prev = w;
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(SmoothingKernel::new(0.0, 2).is_err());
        assert!(SmoothingKernel::new(-1.0, 3).is_err());
        assert!(SmoothingKernel::new(1.0, 4).is_err());
        let k = SmoothingKernel::new(1.0, 2).unwrap();
        assert!(k.value(-0.1).is_err());
        assert!(k.grad_mag(f64::NAN).is_err());
    }
}
