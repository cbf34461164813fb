//! Independent verification: field-equation residuals by two methods, a
//! leapfrog finite-difference oracle for the initial-value problem,
//! convergence fits, and continuity probes for the data-to-solution map and
//! its inverse.
//!
//! The two residual methods are deliberately different routes to the same
//! quantity. The finite-difference method second-differences the assembled
//! field directly; the light-cone method uses the exact chiral derivatives,
//! for which the residual of the field equation reduces algebraically to
//! 8 (F d+d-F - d+F d-F + 1) / F^2.

use serde::Serialize;
use thiserror::Error;

use crate::assembly::{AssemblyError, LiouvilleSolution, SpacetimeGrid};
use crate::expr::Expr;
use crate::initial_data::{
    seminorm, seminorm_distance, CauchyData, DataError, DataHandle, SeminormSpec,
};
use crate::pipeline::{self, PipelineError, PipelineSettings};
use crate::scalar::{approx_f64, real, Scalar};

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("CFL violation: dt/dx = {ratio} > 1")]
    CflViolation { ratio: f64 },
    #[error("oracle grid needs at least 2 spatial nodes (nt={nt}, nx={nx})")]
    BadOracleGrid { nt: usize, nx: usize },
    #[error("t = 0 is not on the oracle's time lattice (offset {offset})")]
    SliceOffLattice { offset: f64 },
    #[error("oracle blow-up at t = {t}, x = {x}: |phi| = {value:e}")]
    BlowUp { t: f64, x: f64, value: f64 },
    #[error("oracle and comparison grids disagree")]
    GridMismatch,
    #[error("eps list must be strictly decreasing and positive")]
    BadEpsList,
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Data(#[from] DataError),
}

// --- residuals ------------------------------------------------------------

/// How a residual was computed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum ResidualMethod<T> {
    /// Centered second differences of the field with step `delta`.
    FiniteDifference { delta: T },
    /// Exact chiral derivatives; no step parameter.
    LightCone,
}

#[derive(Debug, Clone, Serialize)]
pub struct ResidualReport<T> {
    pub method: ResidualMethod<T>,
    pub grid: SpacetimeGrid<T>,
    pub sup_residual: T,
}

/// Sup over grid nodes of the field-equation residual.
pub fn residual<T: Scalar>(
    sol: &LiouvilleSolution<T>,
    grid: &SpacetimeGrid<T>,
    method: ResidualMethod<T>,
) -> Result<ResidualReport<T>, VerifyError> {
    grid.validate().map_err(VerifyError::Assembly)?;
    let mut sup = T::zero();
    let half_m2 = sol.mass() * sol.mass() * real::<T>(0.5);
    for &t in &grid.t_nodes() {
        for &x in &grid.x_nodes() {
            let r = match method {
                ResidualMethod::LightCone => {
                    let v = sol.eval_f(t, x)?;
                    if v.f == T::zero() {
                        return Err(VerifyError::Assembly(AssemblyError::ZeroF {
                            t: approx_f64(t),
                            x: approx_f64(x),
                        }));
                    }
                    let defect = v.light_cone_form() + T::one();
                    real::<T>(8.0) * defect / (v.f * v.f)
                }
                ResidualMethod::FiniteDifference { delta } => {
                    let phi = sol.eval_phi(t, x)?;
                    let d2t = (sol.eval_phi(t + delta, x)? - phi - phi
                        + sol.eval_phi(t - delta, x)?)
                        / (delta * delta);
                    let d2x = (sol.eval_phi(t, x + delta)? - phi - phi
                        + sol.eval_phi(t, x - delta)?)
                        / (delta * delta);
                    d2t - d2x + half_m2 * phi.exp()
                }
            };
            sup = sup.max(r.abs());
        }
    }
    Ok(ResidualReport {
        method,
        grid: *grid,
        sup_residual: sup,
    })
}

// --- leapfrog oracle --------------------------------------------------------

/// Field values from the explicit finite-difference integration of the
/// initial-value problem, independent of the chiral construction.
#[derive(Debug, Clone)]
pub struct OracleField<T> {
    pub grid: SpacetimeGrid<T>,
    pub dt: T,
    pub dx: T,
    /// By time level (ascending t), then by x index.
    pub levels: Vec<Vec<T>>,
}

impl<T: Scalar> OracleField<T> {
    pub fn t_of(&self, level: usize) -> T {
        self.grid.t_min + self.dt * real(level as f64)
    }

    pub fn x_of(&self, i: usize) -> T {
        self.grid.x_min + self.dx * real(i as f64)
    }
}

/// Integrate the initial-value problem with the leapfrog scheme, forward
/// and backward in t from the t = 0 slice; spatial edges come from the
/// boundary callable each step. Requires dt/dx <= 1 and t = 0 on the time
/// lattice.
pub fn oracle_integrate<T, B>(
    data: &CauchyData<T>,
    mass: T,
    grid: &SpacetimeGrid<T>,
    boundary: B,
) -> Result<OracleField<T>, VerifyError>
where
    T: Scalar,
    B: Fn(T, T) -> Result<T, AssemblyError>,
{
    grid.validate().map_err(VerifyError::Assembly)?;
    if grid.nx < 2 {
        return Err(VerifyError::BadOracleGrid {
            nt: grid.nt,
            nx: grid.nx,
        });
    }
    let xs = grid.x_nodes();
    let nx = xs.len();
    let dx = xs[1] - xs[0];
    let nt = grid.nt;
    let dt = if nt > 1 {
        (grid.t_max - grid.t_min) / real::<T>((nt - 1) as f64)
    } else {
        T::zero()
    };
    if nt > 1 && dt / dx > T::one() + real(1e-12) {
        return Err(VerifyError::CflViolation {
            ratio: approx_f64(dt / dx),
        });
    }

    // locate t = 0 on the lattice
    let j0 = if nt == 1 {
        if grid.t_min.abs() > real(1e-12) {
            return Err(VerifyError::SliceOffLattice {
                offset: approx_f64(grid.t_min),
            });
        }
        0usize
    } else {
        let raw = (-grid.t_min / dt).round();
        let offset = (grid.t_min + dt * raw).abs();
        let j = raw.to_usize().unwrap_or(usize::MAX);
        if j >= nt || offset > dt * real(1e-9) {
            return Err(VerifyError::SliceOffLattice {
                offset: approx_f64(offset),
            });
        }
        j
    };

    let mut levels = vec![Vec::new(); nt];
    let slice: Result<Vec<T>, DataError> = xs.iter().map(|&x| data.phi(x)).collect();
    levels[j0] = slice?;

    let half_m2 = mass * mass * real::<T>(0.5);
    let half = real::<T>(0.5);
    let two = real::<T>(2.0);
    let r2 = if nt > 1 {
        (dt / dx) * (dt / dx)
    } else {
        T::zero()
    };
    let blow = real::<T>(1e6);

    let check = |v: T, t: T, x: T| -> Result<T, VerifyError> {
        if v.is_finite() && v.abs() <= blow {
            Ok(v)
        } else {
            Err(VerifyError::BlowUp {
                t: approx_f64(t),
                x: approx_f64(x),
                value: approx_f64(v.abs()),
            })
        }
    };

    // Taylor first step from the slice, then leapfrog; `dir` = +1 marches up
    // in t, -1 down (the scheme is symmetric under dt -> -dt).
    for dir in [1i64, -1] {
        let count = if dir > 0 { nt - 1 - j0 } else { j0 };
        let sdt = if dir > 0 { dt } else { -dt };
        for step in 1..=count {
            let level = (j0 as i64 + dir * step as i64) as usize;
            let prev = (j0 as i64 + dir * (step as i64 - 1)) as usize;
            let t_new = grid.t_min + dt * real(level as f64);
            let mut row = vec![T::zero(); nx];
            row[0] = boundary(t_new, xs[0])?;
            row[nx - 1] = boundary(t_new, xs[nx - 1])?;
            if step == 1 {
                // phi^1 = phi^0 + dt pi + (dt^2/2)(D2x phi^0 - (m^2/2) e^phi0)
                for i in 1..nx - 1 {
                    let p0 = levels[prev][i];
                    let lap = (levels[prev][i + 1] - two * p0 + levels[prev][i - 1]) / (dx * dx);
                    let pi = data.pi(xs[i])?;
                    let v = p0 + sdt * pi + sdt * sdt * half * (lap - half_m2 * p0.exp());
                    row[i] = check(v, t_new, xs[i])?;
                }
            } else {
                let back = (j0 as i64 + dir * (step as i64 - 2)) as usize;
                for i in 1..nx - 1 {
                    let p0 = levels[prev][i];
                    let v = two * p0 - levels[back][i]
                        + r2 * (levels[prev][i + 1] - two * p0 + levels[prev][i - 1])
                        - dt * dt * half_m2 * p0.exp();
                    row[i] = check(v, t_new, xs[i])?;
                }
            }
            levels[level] = row;
        }
    }

    Ok(OracleField {
        grid: *grid,
        dt,
        dx,
        levels,
    })
}

/// Sup over oracle nodes of |phi_exact - phi_oracle|.
pub fn compare<T: Scalar>(
    sol: &LiouvilleSolution<T>,
    oracle: &OracleField<T>,
) -> Result<T, VerifyError> {
    let mut sup = T::zero();
    for (level, row) in oracle.levels.iter().enumerate() {
        if row.is_empty() {
            return Err(VerifyError::GridMismatch);
        }
        let t = oracle.t_of(level);
        for (i, &v) in row.iter().enumerate() {
            let exact = sol.eval_phi(t, oracle.x_of(i))?;
            sup = sup.max((exact - v).abs());
        }
    }
    Ok(sup)
}

/// Build the oracle with Dirichlet boundaries taken from the exact solution
/// and return the sup deviation.
pub fn oracle_error_vs_solution<T: Scalar>(
    data: &CauchyData<T>,
    sol: &LiouvilleSolution<T>,
    grid: &SpacetimeGrid<T>,
) -> Result<T, VerifyError> {
    let oracle = oracle_integrate(data, sol.mass(), grid, |t, x| sol.eval_phi(t, x))?;
    compare(sol, &oracle)
}

// --- convergence fits -------------------------------------------------------

/// Least-squares slope of log(err) against log(h).
pub fn fit_log_slope(hs: &[f64], errs: &[f64]) -> f64 {
    assert_eq!(hs.len(), errs.len());
    let n = hs.len() as f64;
    let lx: Vec<f64> = hs.iter().map(|h| h.ln()).collect();
    let ly: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
    let sx: f64 = lx.iter().sum();
    let sy: f64 = ly.iter().sum();
    let sxx: f64 = lx.iter().map(|v| v * v).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| a * b).sum();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

// --- continuity probes --------------------------------------------------------

/// One row of an eps table.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ProbeRow<T> {
    pub eps: T,
    /// Distance on the input side of the map under test.
    pub input_distance: T,
    /// Deviation on the output side.
    pub output_deviation: T,
}

/// Shared configuration for both probes.
pub struct ProbeConfig<'g, T> {
    pub grid: &'g SpacetimeGrid<T>,
    pub spec: SeminormSpec,
    pub settings: PipelineSettings<T>,
    /// Sample count for the restriction slice of the inverse probe.
    pub restrict_points: usize,
}

fn validate_eps<T: Scalar>(eps_list: &[T]) -> Result<(), VerifyError> {
    if eps_list.is_empty() {
        return Err(VerifyError::BadEpsList);
    }
    for w in eps_list.windows(2) {
        if !(w[1] < w[0]) {
            return Err(VerifyError::BadEpsList);
        }
    }
    if !(*eps_list.last().expect("non-empty") > T::zero()) {
        return Err(VerifyError::BadEpsList);
    }
    Ok(())
}

/// Forward continuity: perturb the data by eps * eta, run the pipeline, and
/// measure the sup deviation of the field over the grid against the
/// seminorm distance of the inputs.
pub fn continuity_probe<T: Scalar>(
    data: &DataHandle<T>,
    eta_phi: &Expr<T>,
    eta_pi: &Expr<T>,
    eps_list: &[T],
    cfg: &ProbeConfig<'_, T>,
) -> Result<Vec<ProbeRow<T>>, VerifyError> {
    validate_eps(eps_list)?;
    let (base_sol, _) = pipeline::solve(data, cfg.grid, &cfg.settings)?;
    let base_table = base_sol.evaluate_grid(cfg.grid)?;

    let eta_data = data.like(eta_phi.clone(), eta_pi.clone())?;
    let eta_norm = seminorm(&eta_data, &cfg.spec)?;

    let mut rows = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let perturbed = std::sync::Arc::new(data.perturb(eta_phi, eta_pi, eps)?);
        let (sol, _) = pipeline::solve(&perturbed, cfg.grid, &cfg.settings)?;
        let table = sol.evaluate_grid(cfg.grid)?;
        let dev = table
            .sup_phi_deviation(&base_table)
            .ok_or(VerifyError::GridMismatch)?;
        rows.push(ProbeRow {
            eps,
            input_distance: eps * eta_norm,
            output_deviation: dev,
        });
    }
    Ok(rows)
}

/// Inverse continuity: perturb a solution through its generating data and
/// measure the seminorm distance of the restricted Cauchy data against the
/// sup deviation of the solutions.
pub fn inverse_continuity_probe<T: Scalar>(
    data: &DataHandle<T>,
    eta_phi: &Expr<T>,
    eta_pi: &Expr<T>,
    eps_list: &[T],
    cfg: &ProbeConfig<'_, T>,
) -> Result<Vec<ProbeRow<T>>, VerifyError> {
    validate_eps(eps_list)?;
    let (base_sol, _) = pipeline::solve(data, cfg.grid, &cfg.settings)?;
    let base_table = base_sol.evaluate_grid(cfg.grid)?;

    // restrict on the widest slice the chiral tables support at t = 0, and
    // cap the seminorm window to what that slice can answer
    let n = cfg.restrict_points.max(64);
    let w = cfg.settings.window;
    let (c_lo, c_hi) = base_sol.chi().range().unwrap_or((-w, w));
    let (p_lo, p_hi) = base_sol.psi().range().unwrap_or((-w, w));
    let pad = real::<T>(1e-9);
    let (lo, hi) = (c_lo.max(p_lo) + pad, c_hi.min(p_hi) - pad);
    let xs: Vec<T> = (0..n)
        .map(|i| lo + (hi - lo) * real::<T>(i as f64 / (n - 1) as f64))
        .collect();
    let base_restricted = base_sol.restrict(&xs)?;
    let w_avail = approx_f64((-lo).min(hi)) * (1.0 - 1e-12);
    let spec = SeminormSpec {
        window: cfg.spec.window.min(w_avail),
        ..cfg.spec
    };

    let mut rows = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let perturbed = std::sync::Arc::new(data.perturb(eta_phi, eta_pi, eps)?);
        let (sol, _) = pipeline::solve(&perturbed, cfg.grid, &cfg.settings)?;
        let table = sol.evaluate_grid(cfg.grid)?;
        let solution_dist = table
            .sup_phi_deviation(&base_table)
            .ok_or(VerifyError::GridMismatch)?;
        let restricted = sol.restrict(&xs)?;
        let data_dev = seminorm_distance(&restricted, &base_restricted, &spec)?;
        rows.push(ProbeRow {
            eps,
            input_distance: solution_dist,
            output_deviation: data_dev,
        });
    }
    Ok(rows)
}

/// True when output deviations decrease strictly along the (decreasing) eps
/// list.
pub fn monotone_decreasing<T: Scalar>(rows: &[ProbeRow<T>]) -> bool {
    rows.windows(2)
        .all(|w| w[1].output_deviation < w[0].output_deviation)
}

// --- corpus -------------------------------------------------------------------

/// A named closed-form Cauchy pair with its mass.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CorpusEntry {
    pub name: &'static str,
    pub phi: &'static str,
    pub pi: &'static str,
    pub mass: f64,
}

/// The default verification corpus: constants, Gaussians, sech profiles,
/// and low-frequency sines, with |phi| <= 3 and |pi| <= 2 on the window and
/// masses keeping the chiral growth scales O(1).
pub fn corpus() -> Vec<CorpusEntry> {
    vec![
        CorpusEntry {
            name: "const-log16",
            phi: "log(16)",
            pi: "0",
            mass: 1.0,
        },
        CorpusEntry {
            name: "zero",
            phi: "0",
            pi: "0",
            mass: 4.0,
        },
        CorpusEntry {
            name: "const-one",
            phi: "1",
            pi: "0",
            mass: 1.0,
        },
        CorpusEntry {
            name: "gaussian",
            phi: "exp(-x^2)",
            pi: "0",
            mass: 1.0,
        },
        CorpusEntry {
            name: "sech",
            phi: "1/cosh(x)",
            pi: "0",
            mass: 2.0,
        },
        CorpusEntry {
            name: "sine-low",
            phi: "0.5*sin(0.5*x)",
            pi: "0.3*cos(0.5*x)",
            mass: 1.0,
        },
        CorpusEntry {
            name: "gaussian-moving",
            phi: "exp(-x^2/4)",
            pi: "0.5*sin(0.5*x)",
            mass: 1.0,
        },
        CorpusEntry {
            name: "sech-offset",
            phi: "1/cosh(x - 1)",
            pi: "0.2*exp(-x^2)",
            mass: 2.0,
        },
        CorpusEntry {
            name: "mixed",
            phi: "0.8*sin(0.4*x) + 0.5*exp(-x^2)",
            pi: "0.3/cosh(x)",
            mass: 1.0,
        },
        CorpusEntry {
            name: "dip",
            phi: "0.5/cosh(0.5*x) - 1",
            pi: "-0.4*sin(0.3*x)",
            mass: 2.0,
        },
    ]
}

impl CorpusEntry {
    pub fn data<T: Scalar>(&self) -> DataHandle<T> {
        std::sync::Arc::new(
            CauchyData::from_expressions(self.phi, self.pi, crate::expr::Params::new())
                .expect("corpus entries parse"),
        )
    }
}

#[cfg(test)]
mod tests;
