//! Final pipeline stages: F(t, x) from the chiral pairs, the field
//! phi = -log[(m^2/16) F^2], light-cone derivatives, and the restriction
//! map back to Cauchy data at t = 0.
//!
//! F pairs the chiral solutions crosswise:
//!
//!   F(t, x) = chi1(x+t) psi2(x-t) + chi2(x+t) psi1(x-t)
//!
//! Expanding F d+d-F - (d+F)(d-F) for this pairing factors into the product
//! of the two Wronskian forms, (chi1' chi2 - chi2' chi1)(psi2' psi1 -
//! psi1' psi2) = (-1)(+1) = -1, which is what the field equation demands of
//! phi in light-cone coordinates. The same-index pairing produces +1 and
//! fails the residual test; it stays available behind [`Pairing::SameIndex`]
//! as the negative control.

use serde::Serialize;
use thiserror::Error;

use crate::chiral_ode::{OdeError, PairValues, WronskianPair};
use crate::expr::{DiffError, EvalError, Expr, Params, ParseError};
use crate::initial_data::{CauchyData, DataError};
use crate::scalar::{approx_f64, real, Scalar};

#[derive(Debug, Error)]
pub enum AssemblyError {
    #[error(
        "{side} pair violates the unit-Wronskian requirement: deviation {deviation} > {tolerance}"
    )]
    BuildRejected {
        side: &'static str,
        deviation: f64,
        tolerance: f64,
    },
    #[error("point (t={t}, x={x}) outside solution domain; chi needs x+t in [{chi_lo}, {chi_hi}], psi needs x-t in [{psi_lo}, {psi_hi}]")]
    OutOfDomain {
        t: f64,
        x: f64,
        chi_lo: f64,
        chi_hi: f64,
        psi_lo: f64,
        psi_hi: f64,
    },
    #[error("F vanishes at (t={t}, x={x}); the field is singular there")]
    ZeroF { t: f64, x: f64 },
    #[error("grid is empty or inconsistent: {reason}")]
    BadGrid { reason: String },
    #[error("mass must be positive, got {got}")]
    NonPositiveMass { got: f64 },
    #[error("analytic chiral expression: {source}")]
    AnalyticParse {
        #[from]
        source: ParseError,
    },
    #[error("analytic chiral expression: {source}")]
    AnalyticDiff {
        #[from]
        source: DiffError,
    },
    #[error("analytic chiral evaluation: {source}")]
    AnalyticEval {
        #[from]
        source: EvalError,
    },
    #[error(transparent)]
    Restrict(#[from] DataError),
    #[error(transparent)]
    Table(#[from] OdeError),
}

/// Which index pairing assembles F. `Cross` is the physical one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Pairing {
    Cross,
    SameIndex,
}

/// A chiral solution pair: either an integrated table or a closed-form
/// family given by expressions of one variable.
#[derive(Debug, Clone)]
pub enum ChiralFamily<T> {
    Table(WronskianPair<T>),
    Analytic(AnalyticChiral<T>),
}

/// Closed-form chiral pair (f1, f2) with symbolic derivatives; defined on
/// all of R.
#[derive(Debug, Clone)]
pub struct AnalyticChiral<T> {
    f1: Expr<T>,
    df1: Expr<T>,
    f2: Expr<T>,
    df2: Expr<T>,
    params: Params<T>,
}

impl<T: Scalar> AnalyticChiral<T> {
    /// Parse the pair from expression text in the variable `x` (the chiral
    /// argument) and differentiate symbolically.
    pub fn from_texts(f1: &str, f2: &str, params: Params<T>) -> Result<Self, AssemblyError> {
        let f1 = crate::expr::parse(f1)?;
        let f2 = crate::expr::parse(f2)?;
        Self::from_exprs(f1, f2, params)
    }

    pub fn from_exprs(f1: Expr<T>, f2: Expr<T>, params: Params<T>) -> Result<Self, AssemblyError> {
        let df1 = f1.differentiate()?;
        let df2 = f2.differentiate()?;
        Ok(AnalyticChiral {
            f1,
            df1,
            f2,
            df2,
            params,
        })
    }

    pub fn eval(&self, s: T) -> Result<PairValues<T>, AssemblyError> {
        Ok(PairValues {
            f1: self.f1.eval(s, &self.params)?,
            df1: self.df1.eval(s, &self.params)?,
            f2: self.f2.eval(s, &self.params)?,
            df2: self.df2.eval(s, &self.params)?,
        })
    }

    /// Largest |f1 f2' - f2 f1' - 1| over `n` uniform probe points.
    pub fn wronskian_deviation(&self, lo: T, hi: T, n: usize) -> Result<T, AssemblyError> {
        let n = n.max(2);
        let mut worst = T::zero();
        for i in 0..n {
            let s = lo + (hi - lo) * real::<T>(i as f64 / (n - 1) as f64);
            let v = self.eval(s)?;
            let w = v.f1 * v.df2 - v.f2 * v.df1;
            worst = worst.max((w - T::one()).abs());
        }
        Ok(worst)
    }
}

impl<T: Scalar> ChiralFamily<T> {
    pub fn eval(&self, s: T) -> Result<PairValues<T>, AssemblyError> {
        match self {
            ChiralFamily::Table(wp) => Ok(wp.eval(s)?),
            ChiralFamily::Analytic(a) => a.eval(s),
        }
    }

    /// Integrated range; `None` for analytic families (defined everywhere).
    pub fn range(&self) -> Option<(T, T)> {
        match self {
            ChiralFamily::Table(wp) => Some(wp.range()),
            ChiralFamily::Analytic(_) => None,
        }
    }

    fn contains(&self, s: T) -> bool {
        match self.range() {
            None => true,
            Some((lo, hi)) => s >= lo && s <= hi,
        }
    }

    /// Wronskian deviation: exact node drift for tables, sampled over
    /// `probe` for analytic families.
    pub fn wronskian_deviation(&self, probe: (T, T), n: usize) -> Result<T, AssemblyError> {
        match self {
            ChiralFamily::Table(wp) => Ok(wp.wronskian_drift()),
            ChiralFamily::Analytic(a) => a.wronskian_deviation(probe.0, probe.1, n),
        }
    }
}

/// a*b + c*d with FMA-compensated rounding. The chiral products grow like
/// exp(k|s|) in opposite directions and cancel to O(1) where F is small;
/// naive evaluation loses most of the mantissa there, which the derivative
/// checks downstream would amplify by 1/delta^2.
fn dot2<T: Scalar>(a: T, b: T, c: T, d: T) -> T {
    let p = a * b;
    let e1 = a.mul_add(b, -p);
    let q = c * d;
    let e2 = c.mul_add(d, -q);
    let s = p + q;
    let shift = s - p;
    let es = (p - (s - shift)) + (q - shift);
    s + (e1 + e2 + es)
}

/// F and its light-cone derivatives at a point.
#[derive(Debug, Clone, Copy)]
pub struct FValues<T> {
    pub f: T,
    pub d_plus: T,
    pub d_minus: T,
    pub d_plus_minus: T,
}

impl<T: Scalar> FValues<T> {
    /// Cartesian time derivative d_t = d+ - d-.
    pub fn d_t(&self) -> T {
        self.d_plus - self.d_minus
    }

    /// Cartesian space derivative d_x = d+ + d-.
    pub fn d_x(&self) -> T {
        self.d_plus + self.d_minus
    }

    /// F d+d-F - (d+F)(d-F); equals -1 for a valid cross-paired solution.
    pub fn light_cone_form(&self) -> T {
        self.f * self.d_plus_minus - self.d_plus * self.d_minus
    }
}

/// Default gate on Wronskian deviation when building a solution.
pub const DEFAULT_DRIFT_TOL: f64 = 1e-6;

/// Probe interval and sample count for validating analytic families.
const ANALYTIC_PROBE: (f64, f64) = (-8.0, 8.0);
const ANALYTIC_PROBE_POINTS: usize = 64;

/// An assembled solution: evaluator for F, its derivatives, and phi.
/// Immutable; grid evaluation has no shared mutable state.
#[derive(Debug, Clone)]
pub struct LiouvilleSolution<T> {
    chi: ChiralFamily<T>,
    psi: ChiralFamily<T>,
    mass: T,
    pairing: Pairing,
}

/// Build with the cross pairing and the default drift gate.
pub fn build_solution<T: Scalar>(
    chi: ChiralFamily<T>,
    psi: ChiralFamily<T>,
    mass: T,
) -> Result<LiouvilleSolution<T>, AssemblyError> {
    LiouvilleSolution::build_with(chi, psi, mass, Pairing::Cross, real(DEFAULT_DRIFT_TOL))
}

impl<T: Scalar> LiouvilleSolution<T> {
    pub fn build_with(
        chi: ChiralFamily<T>,
        psi: ChiralFamily<T>,
        mass: T,
        pairing: Pairing,
        drift_tol: T,
    ) -> Result<Self, AssemblyError> {
        if !(mass > T::zero()) {
            return Err(AssemblyError::NonPositiveMass {
                got: approx_f64(mass),
            });
        }
        let probe = (real(ANALYTIC_PROBE.0), real(ANALYTIC_PROBE.1));
        for (side, fam) in [("chi", &chi), ("psi", &psi)] {
            let dev = fam.wronskian_deviation(probe, ANALYTIC_PROBE_POINTS)?;
            if dev > drift_tol {
                return Err(AssemblyError::BuildRejected {
                    side,
                    deviation: approx_f64(dev),
                    tolerance: approx_f64(drift_tol),
                });
            }
        }
        Ok(LiouvilleSolution {
            chi,
            psi,
            mass,
            pairing,
        })
    }

    pub fn mass(&self) -> T {
        self.mass
    }

    pub fn pairing(&self) -> Pairing {
        self.pairing
    }

    pub fn chi(&self) -> &ChiralFamily<T> {
        &self.chi
    }

    pub fn psi(&self) -> &ChiralFamily<T> {
        &self.psi
    }

    /// True when both chiral arguments of (t, x) lie inside the integrated
    /// ranges.
    pub fn contains(&self, t: T, x: T) -> bool {
        self.chi.contains(x + t) && self.psi.contains(x - t)
    }

    fn out_of_domain(&self, t: T, x: T) -> AssemblyError {
        let inf = real::<T>(f64::INFINITY);
        let (chi_lo, chi_hi) = self.chi.range().unwrap_or((-inf, inf));
        let (psi_lo, psi_hi) = self.psi.range().unwrap_or((-inf, inf));
        AssemblyError::OutOfDomain {
            t: approx_f64(t),
            x: approx_f64(x),
            chi_lo: approx_f64(chi_lo),
            chi_hi: approx_f64(chi_hi),
            psi_lo: approx_f64(psi_lo),
            psi_hi: approx_f64(psi_hi),
        }
    }

    /// F and its light-cone derivatives from the chiral tables.
    pub fn eval_f(&self, t: T, x: T) -> Result<FValues<T>, AssemblyError> {
        if !self.contains(t, x) {
            return Err(self.out_of_domain(t, x));
        }
        let c = self.chi.eval(x + t)?;
        let p = self.psi.eval(x - t)?;
        Ok(match self.pairing {
            Pairing::Cross => FValues {
                f: dot2(c.f1, p.f2, c.f2, p.f1),
                d_plus: dot2(c.df1, p.f2, c.df2, p.f1),
                d_minus: dot2(c.f1, p.df2, c.f2, p.df1),
                d_plus_minus: dot2(c.df1, p.df2, c.df2, p.df1),
            },
            Pairing::SameIndex => FValues {
                f: dot2(c.f1, p.f1, c.f2, p.f2),
                d_plus: dot2(c.df1, p.f1, c.df2, p.f2),
                d_minus: dot2(c.f1, p.df1, c.f2, p.df2),
                d_plus_minus: dot2(c.df1, p.df1, c.df2, p.df2),
            },
        })
    }

    /// phi(t, x) = -log[(m^2/16) F^2].
    pub fn eval_phi(&self, t: T, x: T) -> Result<T, AssemblyError> {
        let f = self.eval_f(t, x)?.f;
        self.phi_from_f(f, t, x)
    }

    fn phi_from_f(&self, f: T, t: T, x: T) -> Result<T, AssemblyError> {
        let scaled = self.mass * self.mass / real::<T>(16.0) * f * f;
        if scaled <= T::zero() {
            return Err(AssemblyError::ZeroF {
                t: approx_f64(t),
                x: approx_f64(x),
            });
        }
        let phi = -scaled.ln();
        if !phi.is_finite() {
            return Err(AssemblyError::ZeroF {
                t: approx_f64(t),
                x: approx_f64(x),
            });
        }
        Ok(phi)
    }

    /// phi and phi_t at a point, by chain rule from the F derivatives (no
    /// finite differencing).
    pub fn eval_phi_and_phi_t(&self, t: T, x: T) -> Result<(T, T), AssemblyError> {
        let v = self.eval_f(t, x)?;
        let phi = self.phi_from_f(v.f, t, x)?;
        let phi_t = -real::<T>(2.0) * v.d_t() / v.f;
        Ok((phi, phi_t))
    }

    /// Restriction to the initial slice: sampled Cauchy data
    /// (phi(0, x), phi_t(0, x)) on the given abscissae.
    pub fn restrict(&self, xs: &[T]) -> Result<CauchyData<T>, AssemblyError> {
        let mut phis = Vec::with_capacity(xs.len());
        let mut pis = Vec::with_capacity(xs.len());
        for &x in xs {
            let (phi, phi_t) = self.eval_phi_and_phi_t(T::zero(), x)?;
            phis.push(phi);
            pis.push(phi_t);
        }
        Ok(CauchyData::from_samples(xs, &phis, &pis)?)
    }

    /// Tabulate (t, x, F, phi) over the grid, tracking the minimum of F and
    /// of |F|.
    pub fn evaluate_grid(&self, grid: &SpacetimeGrid<T>) -> Result<FieldTable<T>, AssemblyError> {
        grid.validate()?;
        let ts = grid.t_nodes();
        let xs = grid.x_nodes();
        let mut rows = Vec::with_capacity(ts.len() * xs.len());
        let inf = real::<T>(f64::INFINITY);
        let (mut min_f, mut min_abs_f) = (inf, inf);
        for &t in &ts {
            for &x in &xs {
                let v = self.eval_f(t, x)?;
                let phi = self.phi_from_f(v.f, t, x)?;
                min_f = min_f.min(v.f);
                min_abs_f = min_abs_f.min(v.f.abs());
                rows.push(FieldSample { t, x, f: v.f, phi });
            }
        }
        Ok(FieldTable {
            grid: *grid,
            rows,
            min_f,
            min_abs_f,
        })
    }
}

/// A rectangular evaluation grid in (t, x).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpacetimeGrid<T> {
    pub t_min: T,
    pub t_max: T,
    pub x_min: T,
    pub x_max: T,
    pub nt: usize,
    pub nx: usize,
}

impl<T: Scalar> SpacetimeGrid<T> {
    pub fn new(t_min: T, t_max: T, nt: usize, x_min: T, x_max: T, nx: usize) -> Self {
        SpacetimeGrid {
            t_min,
            t_max,
            x_min,
            x_max,
            nt,
            nx,
        }
    }

    pub fn validate(&self) -> Result<(), AssemblyError> {
        let bad = |reason: String| Err(AssemblyError::BadGrid { reason });
        if self.nt == 0 || self.nx == 0 {
            return bad(format!(
                "node counts must be positive (nt={}, nx={})",
                self.nt, self.nx
            ));
        }
        if self.t_min > self.t_max || self.x_min > self.x_max {
            return bad("min exceeds max".into());
        }
        if self.nt == 1 && self.t_min != self.t_max {
            return bad("nt = 1 requires t_min = t_max".into());
        }
        if self.nx == 1 && self.x_min != self.x_max {
            return bad("nx = 1 requires x_min = x_max".into());
        }
        Ok(())
    }

    pub fn t_nodes(&self) -> Vec<T> {
        nodes(self.t_min, self.t_max, self.nt)
    }

    pub fn x_nodes(&self) -> Vec<T> {
        nodes(self.x_min, self.x_max, self.nx)
    }
}

fn nodes<T: Scalar>(lo: T, hi: T, n: usize) -> Vec<T> {
    if n <= 1 {
        return vec![lo];
    }
    (0..n)
        .map(|i| lo + (hi - lo) * real::<T>(i as f64 / (n - 1) as f64))
        .collect()
}

/// One grid node of an evaluated field.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FieldSample<T> {
    pub t: T,
    pub x: T,
    pub f: T,
    pub phi: T,
}

/// Row-major field table over a grid, with the minima of F and |F|.
#[derive(Debug, Clone)]
pub struct FieldTable<T> {
    pub grid: SpacetimeGrid<T>,
    pub rows: Vec<FieldSample<T>>,
    pub min_f: T,
    pub min_abs_f: T,
}

impl<T: Scalar> FieldTable<T> {
    /// Sup over nodes of |phi - other.phi|; grids must match.
    pub fn sup_phi_deviation(&self, other: &FieldTable<T>) -> Option<T> {
        if self.rows.len() != other.rows.len() {
            return None;
        }
        let mut sup = T::zero();
        for (a, b) in self.rows.iter().zip(&other.rows) {
            sup = sup.max((a.phi - b.phi).abs());
        }
        Some(sup)
    }
}
