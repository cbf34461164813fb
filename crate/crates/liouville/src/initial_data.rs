//! Cauchy data (phi, pi) for the initial-value problem, with derivative
//! access up to order 2 for phi and order 1 for pi.
//!
//! Two backings: closed-form (expression trees plus their symbolic
//! derivatives) and sampled (uniform grid with a natural cubic spline).
//! Sup-style seminorms over compact windows stand in for the smooth-function
//! topology at desk scale.

use std::sync::Arc;

use thiserror::Error;

use crate::expr::{self, DiffError, EvalError, Expr, Params, ParseError};
use crate::scalar::{real, Scalar};
use crate::spline::{CubicSpline, SplineError};

/// Which component of the pair an error refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Field {
    Phi,
    Pi,
}

impl std::fmt::Display for Field {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Field::Phi => "phi",
            Field::Pi => "pi",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DataError {
    #[error("{field}: {source}")]
    Parse {
        field: Field,
        #[source]
        source: ParseError,
    },
    #[error("{field}: {source}")]
    Eval {
        field: Field,
        #[source]
        source: EvalError,
    },
    #[error("{field}: {source}")]
    Diff {
        field: Field,
        #[source]
        source: DiffError,
    },
    #[error("{field} samples: {source}")]
    Samples {
        field: Field,
        #[source]
        source: SplineError,
    },
    #[error("sample arrays disagree in length: xs={xs}, phi={phi}, pi={pi}")]
    LengthMismatch { xs: usize, phi: usize, pi: usize },
    #[error("need at least 8 sample points, got {got}")]
    TooFewSamples { got: usize },
    #[error("derivative order {requested} exceeds backing capability {available}")]
    OrderUnavailable { requested: u32, available: u32 },
    #[error("perturbation requires closed-form data; this data is sampled")]
    PerturbSampled,
}

/// One component with its derivatives, closed-form backing.
#[derive(Debug, Clone)]
struct SymbolicComponent<T> {
    value: Expr<T>,
    derivs: Vec<Expr<T>>,
}

impl<T: Scalar> SymbolicComponent<T> {
    fn build(value: Expr<T>, orders: u32, field: Field) -> Result<Self, DataError> {
        let mut derivs = Vec::with_capacity(orders as usize);
        let mut cur = value.clone();
        for _ in 0..orders {
            cur = cur
                .differentiate()
                .map_err(|source| DataError::Diff { field, source })?;
            derivs.push(cur.clone());
        }
        Ok(SymbolicComponent { value, derivs })
    }

    fn eval(&self, order: u32, x: T, params: &Params<T>, field: Field) -> Result<T, DataError> {
        let e = if order == 0 {
            &self.value
        } else {
            &self.derivs[order as usize - 1]
        };
        e.eval(x, params)
            .map_err(|source| DataError::Eval { field, source })
    }
}

#[derive(Debug, Clone)]
enum Backing<T> {
    Closed {
        phi: SymbolicComponent<T>,
        pi: SymbolicComponent<T>,
        params: Params<T>,
    },
    Sampled {
        phi: CubicSpline<T>,
        pi: CubicSpline<T>,
    },
}

/// The pair (phi, pi) of initial functions.
///
/// Immutable after construction; shareable across threads.
#[derive(Debug, Clone)]
pub struct CauchyData<T> {
    backing: Backing<T>,
}

/// phi supports two derivatives, pi one.
const PHI_ORDERS: u32 = 2;
const PI_ORDERS: u32 = 1;

impl<T: Scalar> CauchyData<T> {
    /// Closed-form data from expression strings; derivatives are symbolic.
    pub fn from_expressions(
        phi_text: &str,
        pi_text: &str,
        params: Params<T>,
    ) -> Result<Self, DataError> {
        let phi = expr::parse(phi_text).map_err(|source| DataError::Parse {
            field: Field::Phi,
            source,
        })?;
        let pi = expr::parse(pi_text).map_err(|source| DataError::Parse {
            field: Field::Pi,
            source,
        })?;
        Self::from_exprs(phi, pi, params)
    }

    /// Closed-form data from already-parsed trees.
    pub fn from_exprs(phi: Expr<T>, pi: Expr<T>, params: Params<T>) -> Result<Self, DataError> {
        Ok(CauchyData {
            backing: Backing::Closed {
                phi: SymbolicComponent::build(phi, PHI_ORDERS, Field::Phi)?,
                pi: SymbolicComponent::build(pi, PI_ORDERS, Field::Pi)?,
                params,
            },
        })
    }

    /// Sampled data on a uniform, strictly increasing grid of at least 8
    /// points; derivatives come from the natural cubic spline.
    pub fn from_samples(xs: &[T], phi_vals: &[T], pi_vals: &[T]) -> Result<Self, DataError> {
        if xs.len() != phi_vals.len() || xs.len() != pi_vals.len() {
            return Err(DataError::LengthMismatch {
                xs: xs.len(),
                phi: phi_vals.len(),
                pi: pi_vals.len(),
            });
        }
        if xs.len() < 8 {
            return Err(DataError::TooFewSamples { got: xs.len() });
        }
        let phi = CubicSpline::from_points(xs, phi_vals).map_err(|source| DataError::Samples {
            field: Field::Phi,
            source,
        })?;
        let pi = CubicSpline::from_points(xs, pi_vals).map_err(|source| DataError::Samples {
            field: Field::Pi,
            source,
        })?;
        Ok(CauchyData {
            backing: Backing::Sampled { phi, pi },
        })
    }

    pub fn is_closed_form(&self) -> bool {
        matches!(self.backing, Backing::Closed { .. })
    }

    /// Largest interval on which the data can be evaluated, if bounded
    /// (sampled backing). Closed-form data evaluates anywhere.
    pub fn sample_range(&self) -> Option<(T, T)> {
        match &self.backing {
            Backing::Closed { .. } => None,
            Backing::Sampled { phi, .. } => Some((phi.x_min(), phi.x_max())),
        }
    }

    pub fn phi(&self, x: T) -> Result<T, DataError> {
        self.component(Field::Phi, 0, x)
    }

    pub fn phi_d1(&self, x: T) -> Result<T, DataError> {
        self.component(Field::Phi, 1, x)
    }

    pub fn phi_d2(&self, x: T) -> Result<T, DataError> {
        self.component(Field::Phi, 2, x)
    }

    pub fn pi(&self, x: T) -> Result<T, DataError> {
        self.component(Field::Pi, 0, x)
    }

    pub fn pi_d1(&self, x: T) -> Result<T, DataError> {
        self.component(Field::Pi, 1, x)
    }

    /// k-th derivative of the named component.
    pub fn component(&self, field: Field, order: u32, x: T) -> Result<T, DataError> {
        let cap = match field {
            Field::Phi => PHI_ORDERS,
            Field::Pi => PI_ORDERS,
        };
        if order > cap {
            return Err(DataError::OrderUnavailable {
                requested: order,
                available: cap,
            });
        }
        match &self.backing {
            Backing::Closed { phi, pi, params } => match field {
                Field::Phi => phi.eval(order, x, params, field),
                Field::Pi => pi.eval(order, x, params, field),
            },
            Backing::Sampled { phi, pi } => {
                let s = match field {
                    Field::Phi => phi,
                    Field::Pi => pi,
                };
                let r = match order {
                    0 => s.value(x),
                    1 => s.deriv1(x),
                    _ => s.deriv2(x),
                };
                r.map_err(|source| DataError::Samples { field, source })
            }
        }
    }

    /// New closed-form data from the given trees, sharing this data's
    /// parameter bindings. Sampled backing is rejected.
    pub fn like(&self, phi: Expr<T>, pi: Expr<T>) -> Result<CauchyData<T>, DataError> {
        match &self.backing {
            Backing::Sampled { .. } => Err(DataError::PerturbSampled),
            Backing::Closed { params, .. } => Self::from_exprs(phi, pi, params.clone()),
        }
    }

    /// New closed-form data (phi + eps*eta_phi, pi + eps*eta_pi) built as
    /// expression sums. Sampled backing is rejected.
    pub fn perturb(
        &self,
        eta_phi: &Expr<T>,
        eta_pi: &Expr<T>,
        eps: T,
    ) -> Result<CauchyData<T>, DataError> {
        match &self.backing {
            Backing::Sampled { .. } => Err(DataError::PerturbSampled),
            Backing::Closed { phi, pi, params } => {
                let bump = |base: &Expr<T>, eta: &Expr<T>| {
                    expr::add(base.clone(), expr::mul(Expr::Const(eps), eta.clone()))
                };
                Self::from_exprs(
                    bump(&phi.value, eta_phi),
                    bump(&pi.value, eta_pi),
                    params.clone(),
                )
            }
        }
    }
}

/// A concrete sup-seminorm: derivatives up to `order`, sup over |x| <= window,
/// approximated on `sample_count` uniform points.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct SeminormSpec {
    pub order: u32,
    pub window: f64,
    pub sample_count: usize,
}

impl SeminormSpec {
    pub fn new(order: u32, window: f64, sample_count: usize) -> Self {
        SeminormSpec {
            order,
            window,
            sample_count: sample_count.max(64),
        }
    }
}

impl Default for SeminormSpec {
    fn default() -> Self {
        SeminormSpec {
            order: 2,
            window: 4.0,
            sample_count: 1024,
        }
    }
}

/// max over k <= order and both components of sup |d^k f| on the window.
/// pi contributes derivatives only up to its backing capability.
pub fn seminorm<T: Scalar>(d: &CauchyData<T>, spec: &SeminormSpec) -> Result<T, DataError> {
    seminorm_against(d, None, spec)
}

/// Seminorm of the difference of two data sets evaluated pointwise; both must
/// be evaluable on the window.
pub fn seminorm_distance<T: Scalar>(
    a: &CauchyData<T>,
    b: &CauchyData<T>,
    spec: &SeminormSpec,
) -> Result<T, DataError> {
    seminorm_against(a, Some(b), spec)
}

fn seminorm_against<T: Scalar>(
    a: &CauchyData<T>,
    b: Option<&CauchyData<T>>,
    spec: &SeminormSpec,
) -> Result<T, DataError> {
    if spec.order > PHI_ORDERS {
        return Err(DataError::OrderUnavailable {
            requested: spec.order,
            available: PHI_ORDERS,
        });
    }
    let window = real::<T>(spec.window);
    let n = spec.sample_count.max(2);
    let mut sup = T::zero();
    for i in 0..n {
        let frac = real::<T>(i as f64 / (n - 1) as f64);
        let x = -window + (window + window) * frac;
        for (field, cap) in [(Field::Phi, PHI_ORDERS), (Field::Pi, PI_ORDERS)] {
            for k in 0..=spec.order.min(cap) {
                let mut v = a.component(field, k, x)?;
                if let Some(other) = b {
                    v -= other.component(field, k, x)?;
                }
                sup = sup.max(v.abs());
            }
        }
    }
    Ok(sup)
}

/// Parse the sampled-data CSV format: header `x,phi,pi`, one row per grid
/// point, decimal ASCII.
pub fn parse_csv<T: Scalar>(text: &str) -> Result<CauchyData<T>, CsvError> {
    let mut xs = Vec::new();
    let mut phis = Vec::new();
    let mut pis = Vec::new();
    let mut lines = text.lines().enumerate();

    let (_, header) = lines.next().ok_or(CsvError::MissingHeader)?;
    if header.trim() != "x,phi,pi" {
        return Err(CsvError::BadHeader {
            got: header.trim().to_string(),
        });
    }
    for (lineno, line) in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let mut next = |name: &'static str| -> Result<T, CsvError> {
            let raw = fields
                .next()
                .ok_or(CsvError::MissingField {
                    line: lineno + 1,
                    name,
                })?
                .trim();
            let v: f64 = raw.parse().map_err(|_| CsvError::BadNumber {
                line: lineno + 1,
                name,
                got: raw.to_string(),
            })?;
            Ok(real(v))
        };
        xs.push(next("x")?);
        phis.push(next("phi")?);
        pis.push(next("pi")?);
        if fields.next().is_some() {
            return Err(CsvError::ExtraFields { line: lineno + 1 });
        }
    }
    CauchyData::from_samples(&xs, &phis, &pis).map_err(CsvError::Data)
}

#[derive(Debug, Error)]
pub enum CsvError {
    #[error("missing CSV header")]
    MissingHeader,
    #[error("expected header `x,phi,pi`, got `{got}`")]
    BadHeader { got: String },
    #[error("line {line}: missing field `{name}`")]
    MissingField { line: usize, name: &'static str },
    #[error("line {line}: field `{name}` is not a number: `{got}`")]
    BadNumber {
        line: usize,
        name: &'static str,
        got: String,
    },
    #[error("line {line}: too many fields")]
    ExtraFields { line: usize },
    #[error(transparent)]
    Data(DataError),
}

/// Shared handle used by downstream stages that keep a provenance reference.
pub type DataHandle<T> = Arc<CauchyData<T>>;
