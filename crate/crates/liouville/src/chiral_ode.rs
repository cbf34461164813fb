//! Stage S2: unit-Wronskian solution pairs of the linear equations
//! psi_k'' = u psi_k and chi_k'' = w chi_k.
//!
//! The initial conditions are synthesized at a base point so that the
//! assembled F matches the Cauchy data there: with
//!   g0 = (4/m) exp(-phi(x0)/2),  g0' = -(phi'(x0)/2) g0,
//!   h0 = -(pi(x0)/2) g0,  p0 = (g0' + h0)/2,  q0 = (g0' - h0)/2,
//! the chi block is gauged to the identity and the psi block is
//!   psi1 = p0, psi1' = (p0 q0 - 1)/g0, psi2 = g0, psi2' = q0,
//! which pins F, its time derivative, and its space derivative at (0, x0)
//! and makes both Wronskians exactly 1. g0 > 0 always, so the division is
//! safe.
//!
//! Integration is classical fixed-step fourth order. Dense output is
//! quintic Hermite on (value, derivative, curvature) node data — the
//! curvature f'' = p f comes free from the stored potential samples — so
//! interpolated queries sit below the integrator's own O(h^4) error and
//! second-differencing the assembled field stays clean. The Wronskian is
//! never renormalized mid-run: its drift is the integrator diagnostic.

use thiserror::Error;

use crate::initial_data::{CauchyData, DataError};
use crate::scalar::{approx_f64, real, Scalar};

/// Solution values above this are treated as overflow (growing potentials
/// produce exponential solutions).
const OVERFLOW_LIMIT: f64 = 1e150;

#[derive(Debug, Error)]
pub enum OdeError {
    #[error("mass must be positive, got {got}")]
    NonPositiveMass { got: f64 },
    #[error("data not evaluable at base point: {source}")]
    BasePoint {
        #[from]
        source: DataError,
    },
    #[error("potential failed at s = {at}: {source}")]
    Potential { at: f64, source: DataError },
    #[error("solution overflow at s = {at} (|f| > {limit:e})")]
    Overflow { at: f64, limit: f64 },
    #[error("step size must be positive, got {got}")]
    BadStep { got: f64 },
    #[error("range [{lo}, {hi}] does not contain base point {x0}")]
    BadRange { lo: f64, hi: f64, x0: f64 },
    #[error("query {s} outside integrated range [{lo}, {hi}]")]
    OutOfRange { s: f64, lo: f64, hi: f64 },
}

/// Wronskian-consistent initial conditions at a base point. Blocks are
/// ordered (f1, f1', f2, f2').
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiralIcs<T> {
    pub base_point: T,
    pub chi: [T; 4],
    pub psi: [T; 4],
}

/// Synthesize initial conditions from the data at `x0`.
pub fn synthesize_ics<T: Scalar>(
    data: &CauchyData<T>,
    mass: T,
    x0: T,
) -> Result<ChiralIcs<T>, OdeError> {
    if !(mass > T::zero()) {
        return Err(OdeError::NonPositiveMass {
            got: approx_f64(mass),
        });
    }
    let half = real::<T>(0.5);
    let phi = data.phi(x0)?;
    let dphi = data.phi_d1(x0)?;
    let pi = data.pi(x0)?;

    let g0 = real::<T>(4.0) / mass * (-phi * half).exp();
    let dg0 = -dphi * half * g0;
    let h0 = -pi * half * g0;
    let p0 = (dg0 + h0) * half;
    let q0 = (dg0 - h0) * half;

    Ok(ChiralIcs {
        base_point: x0,
        chi: [T::one(), T::zero(), T::zero(), T::one()],
        psi: [p0, (p0 * q0 - T::one()) / g0, g0, q0],
    })
}

impl<T: Scalar> ChiralIcs<T> {
    /// Wronskians of the two blocks at the base point (both 1 to round-off
    /// by construction).
    pub fn wronskians(&self) -> (T, T) {
        let w = |b: &[T; 4]| b[0] * b[3] - b[2] * b[1];
        (w(&self.chi), w(&self.psi))
    }
}

/// Two numerically integrated solutions of f'' = p(s) f on a uniform node
/// grid, with unit Wronskian up to integrator drift.
#[derive(Debug, Clone)]
pub struct WronskianPair<T> {
    start: T,
    step: T,
    /// (value, derivative) per node, for each solution.
    f1: Vec<(T, T)>,
    f2: Vec<(T, T)>,
    /// Potential at the nodes; f'' = p f supplies the derivative-of-
    /// derivative data for dense output.
    pot: Vec<T>,
}

/// Values of one chiral pair at a point.
#[derive(Debug, Clone, Copy)]
pub struct PairValues<T> {
    pub f1: T,
    pub df1: T,
    pub f2: T,
    pub df2: T,
}

/// Integrate both solutions of f'' = p(s) f from `x0` across `[a, b]` with
/// fixed step `h`, marching right then left. `ics` is (f1, f1', f2, f2') at
/// `x0`; the node set extends past the endpoints to whole steps.
pub fn integrate_pair<T, P>(
    potential: P,
    ics: [T; 4],
    x0: T,
    range: (T, T),
    h: T,
) -> Result<WronskianPair<T>, OdeError>
where
    T: Scalar,
    P: Fn(T) -> Result<T, DataError>,
{
    let (a, b) = range;
    if !(h > T::zero()) {
        return Err(OdeError::BadStep { got: approx_f64(h) });
    }
    if !(a <= x0 && x0 <= b) {
        return Err(OdeError::BadRange {
            lo: approx_f64(a),
            hi: approx_f64(b),
            x0: approx_f64(x0),
        });
    }

    let steps = |span: T| -> usize {
        let n = (span / h - real::<T>(1e-9)).ceil();
        n.to_usize().unwrap_or(0)
    };
    let n_right = steps(b - x0);
    let n_left = steps(x0 - a);

    let p = |s: T| -> Result<T, OdeError> {
        potential(s).map_err(|source| OdeError::Potential {
            at: approx_f64(s),
            source,
        })
    };

    // state: [f1, f1', f2, f2']; both solutions share potential evaluations
    let y0 = ics;
    let right = march(&p, y0, x0, h, n_right)?;
    let left = march(&p, y0, x0, -h, n_left)?;

    let total = n_left + n_right + 1;
    let mut f1 = Vec::with_capacity(total);
    let mut f2 = Vec::with_capacity(total);
    let mut pot = Vec::with_capacity(total);
    for node in left.iter().skip(1).rev().chain(right.iter()) {
        f1.push((node.y[0], node.y[1]));
        f2.push((node.y[2], node.y[3]));
        pot.push(node.p);
    }

    Ok(WronskianPair {
        start: x0 - h * real(n_left as f64),
        step: h,
        f1,
        f2,
        pot,
    })
}

struct Node<T> {
    y: [T; 4],
    p: T,
}

fn march<T: Scalar>(
    p: &impl Fn(T) -> Result<T, OdeError>,
    y0: [T; 4],
    x0: T,
    h: T,
    n: usize,
) -> Result<Vec<Node<T>>, OdeError> {
    let mut out = Vec::with_capacity(n + 1);
    let mut y = y0;
    let mut s = x0;
    out.push(Node { y, p: p(s)? });
    let half = real::<T>(0.5);
    let sixth = real::<T>(1.0 / 6.0);
    let two = real::<T>(2.0);
    let limit = real::<T>(OVERFLOW_LIMIT);

    for i in 0..n {
        // reuse p at s, s + h/2, s + h across both solutions and all stages
        let p0 = out.last().expect("pushed above").p;
        let pm = p(s + h * half)?;
        let s_next = x0 + h * real((i + 1) as f64);
        let p1 = p(s_next)?;

        let f = |pv: T, y: &[T; 4]| [y[1], pv * y[0], y[3], pv * y[2]];
        let k1 = f(p0, &y);
        let k2 = f(pm, &add(&y, &k1, h * half));
        let k3 = f(pm, &add(&y, &k2, h * half));
        let k4 = f(p1, &add(&y, &k3, h));
        for j in 0..4 {
            y[j] += h * sixth * (k1[j] + two * k2[j] + two * k3[j] + k4[j]);
            if y[j].abs() > limit {
                return Err(OdeError::Overflow {
                    at: approx_f64(s_next),
                    limit: OVERFLOW_LIMIT,
                });
            }
        }
        s = s_next;
        out.push(Node { y, p: p1 });
    }
    Ok(out)
}

#[inline]
fn add<T: Scalar>(y: &[T; 4], k: &[T; 4], c: T) -> [T; 4] {
    [
        y[0] + c * k[0],
        y[1] + c * k[1],
        y[2] + c * k[2],
        y[3] + c * k[3],
    ]
}

impl<T: Scalar> WronskianPair<T> {
    pub fn step(&self) -> T {
        self.step
    }

    pub fn node_count(&self) -> usize {
        self.f1.len()
    }

    pub fn range(&self) -> (T, T) {
        (
            self.start,
            self.start + self.step * real(self.f1.len() as f64 - 1.0),
        )
    }

    /// Node abscissae in order.
    pub fn nodes(&self) -> impl Iterator<Item = T> + '_ {
        (0..self.f1.len()).map(move |i| self.start + self.step * real(i as f64))
    }

    /// Values at node index `i`.
    pub fn node_values(&self, i: usize) -> PairValues<T> {
        PairValues {
            f1: self.f1[i].0,
            df1: self.f1[i].1,
            f2: self.f2[i].0,
            df2: self.f2[i].1,
        }
    }

    /// Max over nodes of |f1 f2' - f2 f1' - 1|.
    pub fn wronskian_drift(&self) -> T {
        let mut worst = T::zero();
        for i in 0..self.f1.len() {
            let w = self.f1[i].0 * self.f2[i].1 - self.f2[i].0 * self.f1[i].1;
            worst = worst.max((w - T::one()).abs());
        }
        worst
    }

    /// Dense evaluation of both solutions and their derivatives.
    pub fn eval(&self, s: T) -> Result<PairValues<T>, OdeError> {
        let (lo, hi) = self.range();
        let slack = self.step * real::<T>(1e-9);
        if s < lo - slack || s > hi + slack {
            return Err(OdeError::OutOfRange {
                s: approx_f64(s),
                lo: approx_f64(lo),
                hi: approx_f64(hi),
            });
        }
        if self.f1.len() == 1 {
            return Ok(self.node_values(0));
        }
        let raw = ((s - self.start) / self.step).floor();
        let i = raw.to_usize().unwrap_or(0).min(self.f1.len() - 2);
        let s_i = self.start + self.step * real(i as f64);
        let theta = (s - s_i) / self.step;

        let (v1, d1) = self.hermite(i, theta, &self.f1);
        let (v2, d2) = self.hermite(i, theta, &self.f2);
        Ok(PairValues {
            f1: v1,
            df1: d1,
            f2: v2,
            df2: d2,
        })
    }

    /// Quintic Hermite (two-point Taylor) interpolation of one solution on
    /// segment `i`, matching value, slope, and curvature at both nodes; the
    /// curvature data f'' = p f comes from the stored potential samples.
    /// Value error O(h^6), derivative error O(h^5) — both below the
    /// integrator's own error, so dense queries do not degrade the tables.
    fn hermite(&self, i: usize, theta: T, table: &[(T, T)]) -> (T, T) {
        let h = self.step;
        let (f0, d0) = table[i];
        let (f1, d1) = table[i + 1];
        let g0 = self.pot[i] * f0;
        let g1 = self.pot[i + 1] * f1;

        let c = |v: f64| real::<T>(v);
        let t1 = theta;
        let t2 = t1 * t1;
        let t3 = t2 * t1;
        let t4 = t3 * t1;
        let t5 = t4 * t1;

        let a0 = c(-6.0) * t5 + c(15.0) * t4 - c(10.0) * t3 + T::one();
        let a1 = c(-3.0) * t5 + c(8.0) * t4 - c(6.0) * t3 + t1;
        let a2 = (-t5 + c(3.0) * t4 - c(3.0) * t3 + t2) * c(0.5);
        let b0 = c(6.0) * t5 - c(15.0) * t4 + c(10.0) * t3;
        let b1 = c(-3.0) * t5 + c(7.0) * t4 - c(4.0) * t3;
        let b2 = (t5 - c(2.0) * t4 + t3) * c(0.5);

        let da0 = c(-30.0) * t4 + c(60.0) * t3 - c(30.0) * t2;
        let da1 = c(-15.0) * t4 + c(32.0) * t3 - c(18.0) * t2 + T::one();
        let da2 = c(-2.5) * t4 + c(6.0) * t3 - c(4.5) * t2 + t1;
        let db0 = c(30.0) * t4 - c(60.0) * t3 + c(30.0) * t2;
        let db1 = c(-15.0) * t4 + c(28.0) * t3 - c(12.0) * t2;
        let db2 = c(2.5) * t4 - c(4.0) * t3 + c(1.5) * t2;

        let h2 = h * h;
        let value = a0 * f0 + a1 * h * d0 + a2 * h2 * g0 + b0 * f1 + b1 * h * d1 + b2 * h2 * g1;
        let deriv =
            (da0 * f0 + da1 * h * d0 + da2 * h2 * g0 + db0 * f1 + db1 * h * d1 + db2 * h2 * g1) / h;
        (value, deriv)
    }

    /// Linear recombination (f1, f2) -> (a f1 + b f2, c f1 + d f2); the
    /// Wronskian scales by ad - bc.
    pub fn recombine(&self, a: T, b: T, c: T, d: T) -> WronskianPair<T> {
        let mix = |u: &[(T, T)], v: &[(T, T)], p: T, q: T| {
            u.iter()
                .zip(v)
                .map(|((uv, ud), (vv, vd))| (p * *uv + q * *vv, p * *ud + q * *vd))
                .collect::<Vec<_>>()
        };
        WronskianPair {
            start: self.start,
            step: self.step,
            f1: mix(&self.f1, &self.f2, a, b),
            f2: mix(&self.f1, &self.f2, c, d),
            pot: self.pot.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use approx::assert_abs_diff_eq;

    use super::*;
    use crate::expr::Params;
    use crate::initial_data::CauchyData;

    fn const_pot(v: f64) -> impl Fn(f64) -> Result<f64, DataError> {
        move |_| Ok(v)
    }

    fn data(phi: &str, pi: &str, m_param: Option<f64>) -> CauchyData<f64> {
        let mut params = Params::new();
        if let Some(m) = m_param {
            params.insert("m".into(), m);
        }
        CauchyData::from_expressions(phi, pi, params).unwrap()
    }

    #[test]
    fn ics_for_regression_family() {
        // phi = log(16/m^2), pi = 0, m = 1: k = (m/4) e^{c/2} = 1, so
        // g0 = 1 and the psi block is (0, -1, 1, 0)
        let d = data("log(16/m^2)", "0", Some(1.0));
        let ics = synthesize_ics(&d, 1.0, 0.0).unwrap();
        assert_eq!(ics.chi, [1.0, 0.0, 0.0, 1.0]);
        assert_abs_diff_eq!(ics.psi[0], 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(ics.psi[1], -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(ics.psi[2], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(ics.psi[3], 0.0, epsilon = 1e-14);
    }

    #[test]
    fn ics_for_zero_data_mass_four() {
        let d = data("0", "0", None);
        let ics = synthesize_ics(&d, 4.0, 0.0).unwrap();
        assert_abs_diff_eq!(ics.psi[2], 1.0, epsilon = 1e-14); // g0 = (4/4) e^0
        assert_abs_diff_eq!(ics.psi[0], 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(ics.psi[1], -1.0, epsilon = 1e-14);
    }

    #[test]
    fn chi_block_is_always_identity() {
        let d = data("exp(-x^2)", "0.4*sin(x)", None);
        for x0 in [-2.0, 0.0, 1.5] {
            let ics = synthesize_ics(&d, 2.0, x0).unwrap();
            assert_eq!(ics.chi, [1.0, 0.0, 0.0, 1.0]);
        }
    }

    #[test]
    fn ics_wronskians_are_exactly_one() {
        let d = data("1/cosh(x)", "0.3*exp(-x^2)", None);
        for (m, x0) in [(1.0, 0.0), (2.5, -1.2), (0.5, 3.0)] {
            let ics = synthesize_ics(&d, m, x0).unwrap();
            let (wc, wp) = ics.wronskians();
            assert_abs_diff_eq!(wc, 1.0, epsilon = 1e-15);
            assert_abs_diff_eq!(wp, 1.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn rejects_bad_mass_and_step() {
        let d = data("0", "0", None);
        assert!(matches!(
            synthesize_ics(&d, -1.0, 0.0),
            Err(OdeError::NonPositiveMass { .. })
        ));
        assert!(matches!(
            integrate_pair(const_pot(0.0), [1.0, 0.0, 0.0, 1.0], 0.0, (-1.0, 1.0), 0.0),
            Err(OdeError::BadStep { .. })
        ));
        assert!(matches!(
            integrate_pair(const_pot(0.0), [1.0, 0.0, 0.0, 1.0], 5.0, (-1.0, 1.0), 0.1),
            Err(OdeError::BadRange { .. })
        ));
    }

    #[test]
    fn free_particle_is_exact() {
        // p = 0: f1 = 1 and f2(s) = s are cubic-or-lower, so the method and
        // the Hermite dense output are exact and the drift is round-off.
        let wp =
            integrate_pair(const_pot(0.0), [1.0, 0.0, 0.0, 1.0], 0.0, (-4.0, 4.0), 1e-2).unwrap();
        for s in [-3.999, -1.0, 0.0, 0.5 * 1e-2, 2.345, 4.0] {
            let v = wp.eval(s).unwrap();
            assert_abs_diff_eq!(v.f1, 1.0, epsilon = 1e-13);
            assert_abs_diff_eq!(v.df1, 0.0, epsilon = 1e-13);
            assert_abs_diff_eq!(v.f2, s, epsilon = 1e-13);
            assert_abs_diff_eq!(v.df2, 1.0, epsilon = 1e-13);
        }
        assert!(wp.wronskian_drift() <= 1e-14);
    }

    #[test]
    fn cosh_sinh_oracle_for_unit_potential() {
        let wp =
            integrate_pair(const_pot(1.0), [1.0, 0.0, 0.0, 1.0], 0.0, (-4.0, 4.0), 1e-3).unwrap();
        for i in 0..81 {
            let s = -4.0 + 8.0 * i as f64 / 80.0;
            let v = wp.eval(s).unwrap();
            assert_abs_diff_eq!(v.f1, s.cosh(), epsilon = 1e-10);
            assert_abs_diff_eq!(v.f2, s.sinh(), epsilon = 1e-10);
        }
        assert!(wp.wronskian_drift() <= 1e-10);
    }

    #[test]
    fn cos_sin_oracle_for_negative_unit_potential() {
        let wp = integrate_pair(
            const_pot(-1.0),
            [1.0, 0.0, 0.0, 1.0],
            0.0,
            (-4.0, 4.0),
            1e-3,
        )
        .unwrap();
        for i in 0..81 {
            let s = -4.0 + 8.0 * i as f64 / 80.0;
            let v = wp.eval(s).unwrap();
            assert_abs_diff_eq!(v.f1, s.cos(), epsilon = 1e-10);
            assert_abs_diff_eq!(v.f2, s.sin(), epsilon = 1e-10);
        }
    }

    #[test]
    fn constant_potential_oracle_general_k() {
        // p = k^2: solutions are cosh(ks) and sinh(ks)/k combinations
        let k = 1.7;
        let wp = integrate_pair(
            const_pot(k * k),
            [1.0, 0.0, 0.0, 1.0],
            0.0,
            (-4.0, 4.0),
            1e-3,
        )
        .unwrap();
        for i in 0..41 {
            let s = -4.0 + 8.0 * i as f64 / 40.0;
            let v = wp.eval(s).unwrap();
            assert_abs_diff_eq!(v.f1, (k * s).cosh(), epsilon = 1e-9);
            assert_abs_diff_eq!(v.f2, (k * s).sinh() / k, epsilon = 1e-9);
        }
    }

    #[test]
    fn dense_output_derivative_accuracy() {
        // between nodes the derivative comes from its own Hermite fit
        let wp =
            integrate_pair(const_pot(1.0), [1.0, 0.0, 0.0, 1.0], 0.0, (-2.0, 2.0), 1e-2).unwrap();
        for i in 0..100 {
            let s = -1.99 + 3.98 * (i as f64 + 0.37) / 100.0;
            let v = wp.eval(s).unwrap();
            assert_abs_diff_eq!(v.df1, s.sinh(), epsilon = 1e-8);
            assert_abs_diff_eq!(v.df2, s.cosh(), epsilon = 1e-8);
        }
    }

    #[test]
    fn out_of_range_query_reports_bounds() {
        let wp =
            integrate_pair(const_pot(0.0), [1.0, 0.0, 0.0, 1.0], 0.0, (-1.0, 1.0), 0.1).unwrap();
        assert!(matches!(wp.eval(3.0), Err(OdeError::OutOfRange { .. })));
    }

    #[test]
    fn overflow_is_detected_with_location() {
        // p = 25 makes f ~ e^{5s}: e^{5*200} overflows well before s = 200
        let err = integrate_pair(
            const_pot(25.0),
            [1.0, 0.0, 0.0, 1.0],
            0.0,
            (0.0, 200.0),
            1e-2,
        )
        .unwrap_err();
        assert!(matches!(err, OdeError::Overflow { .. }));
    }

    #[test]
    fn wronskian_drift_scales_at_order_five() {
        // The per-step determinant defect of any 4-stage order-4 method on
        // f'' = p f starts at h^6 (the h^5 coefficient is traceless), so the
        // accumulated drift halves by ~32, one order better than the
        // local-error heuristic suggests.
        let d = Arc::new(data("1/cosh(x - 1) + 0.3*sin(x)", "0.2*exp(-x^2)", None));
        let pot = crate::potentials::compute_potentials(Arc::clone(&d), 2.0).unwrap();
        let drift = |h: f64| {
            let ics = synthesize_ics(&d, 2.0, 0.0).unwrap();
            integrate_pair(|s| pot.u(s), ics.psi, 0.0, (-8.0, 8.0), h)
                .unwrap()
                .wronskian_drift()
        };
        let (d1, d2) = (drift(1.0 / 16.0), drift(1.0 / 32.0));
        assert!(d2 > 1e-13, "drift too close to round-off to measure: {d2}");
        let ratio = d1 / d2;
        assert!(
            (24.0..=40.0).contains(&ratio),
            "expected order-5 drift scaling, got {ratio} ({d1} -> {d2})"
        );
    }

    #[test]
    fn drift_within_budget_at_default_step() {
        let d = Arc::new(data("exp(-x^2)", "0.5*sin(x)", None));
        let pot = crate::potentials::compute_potentials(Arc::clone(&d), 1.0).unwrap();
        let ics = synthesize_ics(&d, 1.0, 0.0).unwrap();
        let wp = integrate_pair(|s| pot.u(s), ics.psi, 0.0, (-8.0, 8.0), 1e-3).unwrap();
        assert!(wp.wronskian_drift() <= 1e-8);
    }

    #[test]
    fn superposition_of_initial_conditions() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        let (alpha, beta): (f64, f64) = (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        let run = |ics: [f64; 4]| {
            integrate_pair(
                |s: f64| Ok(0.3 * (0.5 * s).sin() + 0.1),
                ics,
                0.0,
                (-3.0, 3.0),
                1e-2,
            )
            .unwrap()
        };
        let v = run([1.0, 0.0, 0.0, 1.0]);
        let w = run([0.2, -0.4, 1.0, 0.7]);
        let combined = run([
            alpha * 1.0 + beta * 0.2,
            alpha * 0.0 + beta * -0.4,
            alpha * 0.0 + beta * 1.0,
            alpha * 1.0 + beta * 0.7,
        ]);
        for i in 0..61 {
            let s = -3.0 + 6.0 * i as f64 / 60.0;
            let (a, b, c) = (
                v.eval(s).unwrap(),
                w.eval(s).unwrap(),
                combined.eval(s).unwrap(),
            );
            assert_abs_diff_eq!(c.f1, alpha * a.f1 + beta * b.f1, epsilon = 1e-12);
            assert_abs_diff_eq!(c.f2, alpha * a.f2 + beta * b.f2, epsilon = 1e-12);
        }
    }

    #[test]
    fn recombine_preserves_unit_wronskian_for_unimodular_maps() {
        let wp =
            integrate_pair(const_pot(1.0), [1.0, 0.0, 0.0, 1.0], 0.0, (-2.0, 2.0), 1e-3).unwrap();
        let g = wp.recombine(2.0, 1.0, 3.0, 2.0); // det = 1
        assert!(g.wronskian_drift() <= 1e-10);
        let bad = wp.recombine(2.0, 0.0, 0.0, 1.0); // det = 2
        assert!((bad.wronskian_drift() - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn single_node_pair_is_queryable_at_base() {
        let wp =
            integrate_pair(const_pot(1.0), [1.0, 0.0, 0.0, 1.0], 0.5, (0.5, 0.5), 1e-3).unwrap();
        assert_eq!(wp.node_count(), 1);
        let v = wp.eval(0.5).unwrap();
        assert_eq!(v.f1, 1.0);
    }
}
