//! The data-to-solution map S as a staged pipeline:
//!
//!   S1: (phi, pi) -> (u, w)      chiral potentials
//!   S2: (u, w)    -> (psi, chi)  unit-Wronskian pairs
//!   S3: (psi, chi) -> solution   assembly of F and phi
//!
//! Errors carry the failing stage. The chiral integration ranges are derived
//! from the light-cone hull of the requested grid, padded by a margin, and
//! must fit inside the data's evaluable window.

use serde::Serialize;
use thiserror::Error;

use crate::assembly::{AssemblyError, ChiralFamily, LiouvilleSolution, Pairing, SpacetimeGrid};
use crate::chiral_ode::{integrate_pair, synthesize_ics, OdeError};
use crate::initial_data::DataHandle;
use crate::potentials::{compute_potentials, PotentialError};
use crate::scalar::{approx_f64, real, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Stage {
    S1Potentials,
    S2ChiralOde,
    S3Assembly,
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Stage::S1Potentials => "S1 (potentials)",
            Stage::S2ChiralOde => "S2 (chiral ODE integration)",
            Stage::S3Assembly => "S3 (assembly)",
        })
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    /// Configuration-class failure: the requested grid needs chiral data
    /// outside the evaluable window.
    #[error("grid needs chiral range [{needed_lo}, {needed_hi}] but data is only evaluable on [{avail_lo}, {avail_hi}]")]
    RangeExceeded {
        needed_lo: f64,
        needed_hi: f64,
        avail_lo: f64,
        avail_hi: f64,
    },
    #[error("stage {stage} failed: {source}")]
    Potentials {
        stage: Stage,
        #[source]
        source: PotentialError,
    },
    #[error("stage {stage} failed: {source}")]
    ChiralOde {
        stage: Stage,
        #[source]
        source: OdeError,
    },
    #[error("stage {stage} failed: {source}")]
    Assembly {
        stage: Stage,
        #[source]
        source: AssemblyError,
    },
}

impl PipelineError {
    /// True for errors a user fixes by changing the configuration.
    pub fn is_config(&self) -> bool {
        matches!(self, PipelineError::RangeExceeded { .. })
    }
}

/// Numerical parameters of a pipeline run.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PipelineSettings<T> {
    pub mass: T,
    /// Base point for the chiral initial conditions.
    pub x0: T,
    /// ODE step.
    pub step: T,
    /// Gate on Wronskian drift when assembling.
    pub drift_tol: T,
    /// Padding added to the light-cone hull of the grid (keeps residual
    /// stencils and slice queries inside the tables).
    pub margin: T,
    /// Half-width of the data's working interval; chiral ranges must fit
    /// inside it (sampled data is additionally capped by its sample range).
    pub window: T,
    #[serde(skip)]
    pub pairing: Pairing,
}

impl<T: Scalar> PipelineSettings<T> {
    pub fn new(mass: T) -> Self {
        PipelineSettings {
            mass,
            x0: T::zero(),
            step: real(1e-3),
            drift_tol: real(1e-6),
            margin: real(0.25),
            window: real(8.0),
            pairing: Pairing::Cross,
        }
    }
}

/// Per-stage diagnostics of a successful run.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PipelineDiagnostics<T> {
    pub chi_drift: T,
    pub psi_drift: T,
    pub chi_nodes: usize,
    pub psi_nodes: usize,
}

/// Chiral ranges needed to cover the grid: x+t spans the chi argument,
/// x-t the psi one; both are padded and extended to include the base point.
pub fn required_ranges<T: Scalar>(grid: &SpacetimeGrid<T>, x0: T, margin: T) -> ((T, T), (T, T)) {
    let chi = (
        (grid.x_min + grid.t_min - margin).min(x0),
        (grid.x_max + grid.t_max + margin).max(x0),
    );
    let psi = (
        (grid.x_min - grid.t_max - margin).min(x0),
        (grid.x_max - grid.t_min + margin).max(x0),
    );
    (chi, psi)
}

/// Run the full pipeline.
pub fn solve<T: Scalar>(
    data: &DataHandle<T>,
    grid: &SpacetimeGrid<T>,
    settings: &PipelineSettings<T>,
) -> Result<(LiouvilleSolution<T>, PipelineDiagnostics<T>), PipelineError> {
    let (chi_range, psi_range) = required_ranges(grid, settings.x0, settings.margin);

    // the data must be evaluable on both chiral ranges
    let (avail_lo, avail_hi) = data
        .sample_range()
        .unwrap_or((-settings.window, settings.window));
    let needed_lo = chi_range.0.min(psi_range.0);
    let needed_hi = chi_range.1.max(psi_range.1);
    if needed_lo < avail_lo || needed_hi > avail_hi {
        return Err(PipelineError::RangeExceeded {
            needed_lo: approx_f64(needed_lo),
            needed_hi: approx_f64(needed_hi),
            avail_lo: approx_f64(avail_lo),
            avail_hi: approx_f64(avail_hi),
        });
    }

    // S1: potentials
    let pots = compute_potentials(data.clone(), settings.mass).map_err(|source| {
        PipelineError::Potentials {
            stage: Stage::S1Potentials,
            source,
        }
    })?;

    // S2: Wronskian pairs
    let ode = |source| PipelineError::ChiralOde {
        stage: Stage::S2ChiralOde,
        source,
    };
    let ics = synthesize_ics(data, settings.mass, settings.x0).map_err(ode)?;
    let chi = integrate_pair(
        |s| pots.w(s),
        ics.chi,
        settings.x0,
        chi_range,
        settings.step,
    )
    .map_err(ode)?;
    let psi = integrate_pair(
        |s| pots.u(s),
        ics.psi,
        settings.x0,
        psi_range,
        settings.step,
    )
    .map_err(ode)?;

    let diag = PipelineDiagnostics {
        chi_drift: chi.wronskian_drift(),
        psi_drift: psi.wronskian_drift(),
        chi_nodes: chi.node_count(),
        psi_nodes: psi.node_count(),
    };

    // S3: assembly
    let solution = LiouvilleSolution::build_with(
        ChiralFamily::Table(chi),
        ChiralFamily::Table(psi),
        settings.mass,
        settings.pairing,
        settings.drift_tol,
    )
    .map_err(|source| PipelineError::Assembly {
        stage: Stage::S3Assembly,
        source,
    })?;

    Ok((solution, diag))
}
