//! Natural cubic splines on uniform grids, with first and second
//! derivatives. Backs sampled Cauchy data.

use thiserror::Error;

use crate::scalar::{approx_f64, real, Scalar};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SplineError {
    #[error("spline needs at least {min} points, got {got}")]
    TooFewPoints { min: usize, got: usize },
    #[error("sample grid is not uniform: spacing {got} at index {index}, expected {expected}")]
    NonUniform {
        index: usize,
        got: f64,
        expected: f64,
    },
    #[error("sample grid is not strictly increasing at index {index}")]
    NotIncreasing { index: usize },
    #[error("non-finite sample at index {index}")]
    NonFiniteSample { index: usize },
    #[error("query {x} outside spline range [{lo}, {hi}]")]
    OutOfRange { x: f64, lo: f64, hi: f64 },
}

/// Natural cubic interpolant of uniformly spaced samples: C^2, with zero
/// second derivative at both ends.
#[derive(Debug, Clone)]
pub struct CubicSpline<T> {
    x0: T,
    h: T,
    y: Vec<T>,
    /// Second derivatives at the nodes (the natural end conditions force
    /// the first and last entries to zero).
    m: Vec<T>,
}

impl<T: Scalar> CubicSpline<T> {
    /// Fit samples `y` at nodes `x0 + i*h`.
    pub fn natural(x0: T, h: T, y: &[T]) -> Result<Self, SplineError> {
        let n = y.len();
        if n < 3 {
            return Err(SplineError::TooFewPoints { min: 3, got: n });
        }
        for (i, v) in y.iter().enumerate() {
            if !v.is_finite() {
                return Err(SplineError::NonFiniteSample { index: i });
            }
        }

        // Tridiagonal system for interior second derivatives:
        //   m[i-1] + 4 m[i] + m[i+1] = 6 (y[i+1] - 2 y[i] + y[i-1]) / h^2
        let six = real::<T>(6.0);
        let four = real::<T>(4.0);
        let h2 = h * h;
        let interior = n - 2;
        let mut diag = vec![four; interior];
        let mut rhs: Vec<T> = (1..n - 1)
            .map(|i| six * (y[i + 1] - y[i] - y[i] + y[i - 1]) / h2)
            .collect();
        for i in 1..interior {
            let w = T::one() / diag[i - 1];
            diag[i] -= w;
            rhs[i] = rhs[i] - w * rhs[i - 1];
        }
        let mut m = vec![T::zero(); n];
        if interior > 0 {
            m[n - 2] = rhs[interior - 1] / diag[interior - 1];
            for i in (1..n - 2).rev() {
                m[i] = (rhs[i - 1] - m[i + 1]) / diag[i - 1];
            }
        }

        Ok(CubicSpline {
            x0,
            h,
            y: y.to_vec(),
            m,
        })
    }

    /// Fit samples given explicitly as `(xs, ys)`; validates that `xs` is
    /// uniform and strictly increasing.
    pub fn from_points(xs: &[T], ys: &[T]) -> Result<Self, SplineError> {
        let n = xs.len();
        if n < 3 {
            return Err(SplineError::TooFewPoints { min: 3, got: n });
        }
        let h = xs[1] - xs[0];
        if h <= T::zero() {
            return Err(SplineError::NotIncreasing { index: 1 });
        }
        let tol = real::<T>(1e-8) * h.abs().max(T::one());
        for i in 1..n {
            let d = xs[i] - xs[i - 1];
            if d <= T::zero() {
                return Err(SplineError::NotIncreasing { index: i });
            }
            if (d - h).abs() > tol {
                return Err(SplineError::NonUniform {
                    index: i,
                    got: approx_f64(d),
                    expected: approx_f64(h),
                });
            }
        }
        Self::natural(xs[0], h, ys)
    }

    pub fn x_min(&self) -> T {
        self.x0
    }

    pub fn x_max(&self) -> T {
        self.x0 + self.h * real(self.y.len() as f64 - 1.0)
    }

    /// Bracketing interval index for `x`, with a round-off slack of one part
    /// in 1e9 of the spacing at the ends.
    fn segment(&self, x: T) -> Result<usize, SplineError> {
        let slack = self.h * real::<T>(1e-9);
        if x < self.x_min() - slack || x > self.x_max() + slack {
            return Err(SplineError::OutOfRange {
                x: approx_f64(x),
                lo: approx_f64(self.x_min()),
                hi: approx_f64(self.x_max()),
            });
        }
        let raw = ((x - self.x0) / self.h).floor();
        let idx = raw.to_usize().unwrap_or(0);
        Ok(idx.min(self.y.len() - 2))
    }

    pub fn value(&self, x: T) -> Result<T, SplineError> {
        let i = self.segment(x)?;
        let (a, b) = self.local(i, x);
        let h = self.h;
        let six = real::<T>(6.0);
        let v = self.m[i] * b * b * b / (six * h)
            + self.m[i + 1] * a * a * a / (six * h)
            + (self.y[i] / h - self.m[i] * h / six) * b
            + (self.y[i + 1] / h - self.m[i + 1] * h / six) * a;
        Ok(v)
    }

    pub fn deriv1(&self, x: T) -> Result<T, SplineError> {
        let i = self.segment(x)?;
        let (a, b) = self.local(i, x);
        let h = self.h;
        let two = real::<T>(2.0);
        let six = real::<T>(6.0);
        let v = -self.m[i] * b * b / (two * h) + self.m[i + 1] * a * a / (two * h)
            - (self.y[i] / h - self.m[i] * h / six)
            + (self.y[i + 1] / h - self.m[i + 1] * h / six);
        Ok(v)
    }

    pub fn deriv2(&self, x: T) -> Result<T, SplineError> {
        let i = self.segment(x)?;
        let (a, b) = self.local(i, x);
        Ok((self.m[i] * b + self.m[i + 1] * a) / self.h)
    }

    /// (x - x_i, x_{i+1} - x) for segment `i`.
    fn local(&self, i: usize, x: T) -> (T, T) {
        let xi = self.x0 + self.h * real(i as f64);
        let a = x - xi;
        let b = self.h - a;
        (a, b)
    }
}
