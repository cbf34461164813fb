//! Zero-curve continuation: given a chiral family whose F vanishes
//! somewhere, find zeros on a time slice and continue the curve x(t) with
//! F(t, x(t)) = 0 across the requested t-range.
//!
//! At a zero of F the light-cone form F d+d-F - (d+F)(d-F) = -1 forces
//! (d+F)(d-F) = 1, so d_x F = d+F + d-F cannot vanish (both factors share a
//! sign) and in fact |d_x F| >= 2. The curve is therefore single-valued in
//! t and Newton correction transverse to it is safe; parametrizing by t
//! matches the statement being checked.
//!
//! Running off the end of a finite chiral table is a truncation, not a
//! failure: finite tables cannot falsify a global statement, and reports
//! keep the two cases distinct.

use serde::Serialize;
use thiserror::Error;

use crate::assembly::{AssemblyError, FValues, LiouvilleSolution};
use crate::scalar::{approx_f64, real, Scalar};

#[derive(Debug, Error)]
pub enum TrackError {
    #[error("seed (t={t}, x={x}) is not on the zero set: |F| = {f} > {tol}")]
    BadSeed { t: f64, x: f64, f: f64, tol: f64 },
    #[error("time step must be positive, got {got}")]
    BadStep { got: f64 },
    #[error("empty or inverted t-range [{lo}, {hi}]")]
    BadRange { lo: f64, hi: f64 },
    #[error("scan needs at least 2 points, got {got}")]
    BadScan { got: usize },
    #[error("slice t = {t} leaves the solution domain over [{lo}, {hi}]")]
    SliceOutOfDomain { t: f64, lo: f64, hi: f64 },
    #[error(
        "Newton correction stalled at t = {t} near x = {x}: |F| = {f} after {iters} iterations \
         (invariant violation: |dF/dx| >= 2 should hold on the zero set)"
    )]
    NewtonStalled { t: f64, x: f64, f: f64, iters: u32 },
    #[error("|dF/dx| = {grad} below {min} at t = {t}, x = {x}; zero set is not transverse")]
    FlatGradient { t: f64, x: f64, grad: f64, min: f64 },
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
}

/// Newton target along the curve.
const NEWTON_TOL: f64 = 1e-10;
/// Newton iteration cap; quadratic convergence from an O(ht^2) predictor
/// needs at most 3, so hitting 5 flags pathology.
const NEWTON_CAP: u32 = 5;
/// Bisection/polish target for seeds.
const SEED_TOL: f64 = 1e-12;
/// Seeds fed to `track` must satisfy |F| <= this.
const SEED_PRECONDITION: f64 = 1e-10;
/// Structural lower bound on |dF/dx| at zeros, with slack.
const MIN_GRADIENT: f64 = 1e-6;

/// One point of a tracked curve with its diagnostics.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CurveSample<T> {
    pub t: T,
    pub x: T,
    pub f: T,
    pub df_dx: T,
    /// (d+F)(d-F); equals 1 on the zero set of a unit-Wronskian family.
    pub chiral_product: T,
}

/// Why a march stopped before covering the requested range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Truncation {
    DomainExit,
}

/// A continued curve t -> x(t) with F(t, x(t)) = 0.
#[derive(Debug, Clone, Serialize)]
pub struct ZeroCurve<T> {
    pub seed: (T, T),
    pub requested_range: (T, T),
    /// Samples ordered by increasing t, uniform step per side of the seed.
    pub samples: Vec<CurveSample<T>>,
    pub truncation: Option<Truncation>,
}

/// Summary statistics of a curve against the structural invariants.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LemmaReport<T> {
    pub max_abs_f: T,
    pub min_abs_df_dx: T,
    /// max |(d+F)(d-F) - 1| along the curve.
    pub max_product_defect: T,
    /// Fraction of the requested t-range actually covered.
    pub coverage: T,
    pub truncation: Option<Truncation>,
}

/// Scan F(t0, .) on `n_scan` uniform points of `x_range`; bracket each sign
/// change and bisect, then Newton-polish, to |F| <= 1e-12. Sorted; empty
/// when F has no sign change on the slice.
pub fn find_seed_zeros<T: Scalar>(
    sol: &LiouvilleSolution<T>,
    t0: T,
    x_range: (T, T),
    n_scan: usize,
) -> Result<Vec<T>, TrackError> {
    if n_scan < 2 {
        return Err(TrackError::BadScan { got: n_scan });
    }
    let (a, b) = x_range;
    if !(a < b) {
        return Err(TrackError::BadRange {
            lo: approx_f64(a),
            hi: approx_f64(b),
        });
    }
    let f_at = |x: T| -> Result<T, TrackError> {
        match sol.eval_f(t0, x) {
            Ok(v) => Ok(v.f),
            Err(AssemblyError::OutOfDomain { .. }) => Err(TrackError::SliceOutOfDomain {
                t: approx_f64(t0),
                lo: approx_f64(a),
                hi: approx_f64(b),
            }),
            Err(e) => Err(e.into()),
        }
    };

    let mut seeds = Vec::new();
    let mut prev_x = a;
    let mut prev_f = f_at(a)?;
    if prev_f == T::zero() {
        seeds.push(a);
    }
    for i in 1..n_scan {
        let x = a + (b - a) * real::<T>(i as f64 / (n_scan - 1) as f64);
        let f = f_at(x)?;
        if f == T::zero() {
            seeds.push(x);
        } else if prev_f * f < T::zero() {
            seeds.push(refine_zero(sol, t0, prev_x, prev_f, x, f)?);
        }
        prev_x = x;
        prev_f = f;
    }
    seeds.sort_by(|p, q| p.partial_cmp(q).expect("finite seeds"));
    Ok(seeds)
}

/// Bisection to a narrow bracket, then Newton polish.
fn refine_zero<T: Scalar>(
    sol: &LiouvilleSolution<T>,
    t0: T,
    mut lo: T,
    mut f_lo: T,
    mut hi: T,
    _f_hi: T,
) -> Result<T, TrackError> {
    let tol = real::<T>(SEED_TOL);
    let mut mid = (lo + hi) * real::<T>(0.5);
    for _ in 0..200 {
        mid = (lo + hi) * real::<T>(0.5);
        let fm = sol.eval_f(t0, mid)?.f;
        if fm.abs() <= tol {
            return Ok(mid);
        }
        if f_lo * fm < T::zero() {
            hi = mid;
        } else {
            lo = mid;
            f_lo = fm;
        }
        if (hi - lo).abs() <= real::<T>(1e-8) {
            break;
        }
    }
    // Newton from the bracket midpoint; the transversality bound makes this
    // converge in a step or two.
    let mut x = mid;
    for _ in 0..8 {
        let v = sol.eval_f(t0, x)?;
        if v.f.abs() <= tol {
            return Ok(x);
        }
        x -= v.f / v.d_x();
    }
    let f = sol.eval_f(t0, x)?.f;
    if f.abs() <= tol {
        Ok(x)
    } else {
        Err(TrackError::NewtonStalled {
            t: approx_f64(t0),
            x: approx_f64(x),
            f: approx_f64(f.abs()),
            iters: 8,
        })
    }
}

/// Continue the zero curve through `seed` over `t_range` with predictor
/// step `ht` (uniformized per side).
pub fn track<T: Scalar>(
    sol: &LiouvilleSolution<T>,
    seed: (T, T),
    t_range: (T, T),
    ht: T,
) -> Result<ZeroCurve<T>, TrackError> {
    let (t0, x0) = seed;
    let (t_lo, t_hi) = t_range;
    if !(ht > T::zero()) {
        return Err(TrackError::BadStep {
            got: approx_f64(ht),
        });
    }
    if !(t_lo <= t0 && t0 <= t_hi) {
        return Err(TrackError::BadRange {
            lo: approx_f64(t_lo),
            hi: approx_f64(t_hi),
        });
    }

    let seed_vals = sol.eval_f(t0, x0)?;
    if seed_vals.f.abs() > real(SEED_PRECONDITION) {
        return Err(TrackError::BadSeed {
            t: approx_f64(t0),
            x: approx_f64(x0),
            f: approx_f64(seed_vals.f.abs()),
            tol: SEED_PRECONDITION,
        });
    }

    let up = march_side(sol, t0, x0, t_hi, ht)?;
    let down = march_side(sol, t0, x0, t_lo, ht)?;

    let mut samples = Vec::with_capacity(up.samples.len() + down.samples.len() + 1);
    samples.extend(down.samples.iter().rev().copied());
    samples.push(sample_at(seed_vals, t0, x0));
    samples.extend(up.samples.iter().copied());

    let truncation = if up.truncated || down.truncated {
        Some(Truncation::DomainExit)
    } else {
        None
    };

    Ok(ZeroCurve {
        seed,
        requested_range: t_range,
        samples,
        truncation,
    })
}

struct SideMarch<T> {
    samples: Vec<CurveSample<T>>,
    truncated: bool,
}

fn sample_at<T: Scalar>(v: FValues<T>, t: T, x: T) -> CurveSample<T> {
    CurveSample {
        t,
        x,
        f: v.f,
        df_dx: v.d_x(),
        chiral_product: v.d_plus * v.d_minus,
    }
}

/// March from (t0, x0) toward t_end. Domain exit stops the march benignly;
/// Newton failure is an error.
fn march_side<T: Scalar>(
    sol: &LiouvilleSolution<T>,
    t0: T,
    x0: T,
    t_end: T,
    ht: T,
) -> Result<SideMarch<T>, TrackError> {
    let span = (t_end - t0).abs();
    let n = (span / ht - real::<T>(1e-12))
        .ceil()
        .to_usize()
        .unwrap_or(0);
    let mut out = SideMarch {
        samples: Vec::with_capacity(n),
        truncated: false,
    };
    if n == 0 {
        return Ok(out);
    }
    let step = (t_end - t0) / real(n as f64);

    // slope of the curve: dx/dt = -F_t / F_x
    let slope = |t: T, x: T| -> Result<Option<T>, TrackError> {
        match sol.eval_f(t, x) {
            Ok(v) => {
                let g = v.d_x();
                if g.abs() < real(MIN_GRADIENT) {
                    return Err(TrackError::FlatGradient {
                        t: approx_f64(t),
                        x: approx_f64(x),
                        grad: approx_f64(g.abs()),
                        min: MIN_GRADIENT,
                    });
                }
                Ok(Some(-v.d_t() / g))
            }
            Err(AssemblyError::OutOfDomain { .. }) => Ok(None),
            Err(e) => Err(e.into()),
        }
    };

    let mut t = t0;
    let mut x = x0;
    let half = real::<T>(0.5);
    let sixth = real::<T>(1.0 / 6.0);
    let two = real::<T>(2.0);

    for i in 1..=n {
        // fourth-order predictor along dx/dt = -F_t/F_x
        let t_next = t0 + step * real(i as f64);
        let Some(k1) = slope(t, x)? else {
            out.truncated = true;
            return Ok(out);
        };
        let Some(k2) = slope(t + step * half, x + step * half * k1)? else {
            out.truncated = true;
            return Ok(out);
        };
        let Some(k3) = slope(t + step * half, x + step * half * k2)? else {
            out.truncated = true;
            return Ok(out);
        };
        let Some(k4) = slope(t_next, x + step * k3)? else {
            out.truncated = true;
            return Ok(out);
        };
        let mut x_next = x + step * sixth * (k1 + two * k2 + two * k3 + k4);

        // Newton correction at fixed t
        let tol = real::<T>(NEWTON_TOL);
        let mut corrected = None;
        for iter in 0..=NEWTON_CAP {
            let v = match sol.eval_f(t_next, x_next) {
                Ok(v) => v,
                Err(AssemblyError::OutOfDomain { .. }) => {
                    out.truncated = true;
                    return Ok(out);
                }
                Err(e) => return Err(e.into()),
            };
            if v.f.abs() <= tol {
                corrected = Some(v);
                break;
            }
            if iter == NEWTON_CAP {
                return Err(TrackError::NewtonStalled {
                    t: approx_f64(t_next),
                    x: approx_f64(x_next),
                    f: approx_f64(v.f.abs()),
                    iters: NEWTON_CAP,
                });
            }
            let g = v.d_x();
            if g.abs() < real(MIN_GRADIENT) {
                return Err(TrackError::FlatGradient {
                    t: approx_f64(t_next),
                    x: approx_f64(x_next),
                    grad: approx_f64(g.abs()),
                    min: MIN_GRADIENT,
                });
            }
            x_next -= v.f / g;
        }
        let v = corrected.expect("loop either breaks with Some or returns");
        out.samples.push(sample_at(v, t_next, x_next));
        t = t_next;
        x = x_next;
    }
    Ok(out)
}

/// Summarize a curve against the requested range and the structural bounds.
pub fn lemma_report<T: Scalar>(curve: &ZeroCurve<T>) -> LemmaReport<T> {
    let mut max_abs_f = T::zero();
    let inf = real::<T>(f64::INFINITY);
    let mut min_grad = inf;
    let mut max_defect = T::zero();
    for s in &curve.samples {
        max_abs_f = max_abs_f.max(s.f.abs());
        min_grad = min_grad.min(s.df_dx.abs());
        max_defect = max_defect.max((s.chiral_product - T::one()).abs());
    }
    let (lo, hi) = curve.requested_range;
    let span = hi - lo;
    let coverage = if span > T::zero() {
        let covered_lo = curve.samples.first().map(|s| s.t).unwrap_or(lo);
        let covered_hi = curve.samples.last().map(|s| s.t).unwrap_or(lo);
        ((covered_hi - covered_lo) / span).min(T::one())
    } else {
        T::one()
    };
    LemmaReport {
        max_abs_f,
        min_abs_df_dx: min_grad,
        max_product_defect: max_defect,
        coverage,
        truncation: curve.truncation,
    }
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;

    use super::*;
    use crate::assembly::{build_solution, AnalyticChiral, ChiralFamily};
    use crate::expr::Params;

    fn analytic(f1: &str, f2: &str) -> ChiralFamily<f64> {
        ChiralFamily::Analytic(AnalyticChiral::from_texts(f1, f2, Params::new()).unwrap())
    }

    /// F = 2x
    fn two_x() -> crate::assembly::LiouvilleSolution<f64> {
        build_solution(analytic("1", "x"), analytic("1", "x"), 1.0).unwrap()
    }

    /// F = -cos(2x): chi = (cos, sin), psi = (sin, -cos)
    fn neg_cos_2x() -> crate::assembly::LiouvilleSolution<f64> {
        build_solution(
            analytic("cos(x)", "sin(x)"),
            analytic("sin(x)", "-cos(x)"),
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn seed_scan_finds_the_axis_zero() {
        let seeds = find_seed_zeros(&two_x(), 0.0, (-1.0, 1.0), 101).unwrap();
        assert_eq!(seeds.len(), 1);
        assert!(seeds[0].abs() <= 1e-12);
    }

    #[test]
    fn seed_scan_finds_cosine_zeros() {
        let sol = neg_cos_2x();
        // make sure the family really assembles to -cos(2x)
        let v = sol.eval_f(0.7, 1.3).unwrap();
        assert_abs_diff_eq!(v.f, -(2.0f64 * 1.3).cos(), epsilon = 1e-12);

        let seeds = find_seed_zeros(&sol, 0.0, (0.0, 3.0), 301).unwrap();
        assert_eq!(seeds.len(), 2);
        assert_abs_diff_eq!(seeds[0], std::f64::consts::FRAC_PI_4, epsilon = 1e-9);
        assert_abs_diff_eq!(seeds[1], 3.0 * std::f64::consts::FRAC_PI_4, epsilon = 1e-9);
    }

    #[test]
    fn scan_needs_two_points() {
        assert!(matches!(
            find_seed_zeros(&two_x(), 0.0, (-1.0, 1.0), 1),
            Err(TrackError::BadScan { got: 1 })
        ));
    }

    #[test]
    fn track_axis_curve_is_stationary() {
        let sol = two_x();
        let curve = track(&sol, (0.0, 0.0), (-5.0, 5.0), 1e-2).unwrap();
        assert!(curve.truncation.is_none());
        for s in &curve.samples {
            assert!(s.x.abs() <= 1e-12, "x({}) = {}", s.t, s.x);
            assert!(s.f.abs() <= 1e-12);
        }
        let report = lemma_report(&curve);
        assert!(report.max_abs_f <= 1e-14);
        assert_abs_diff_eq!(report.coverage, 1.0, epsilon = 1e-12);
        // d+F = d-F = 1 along the curve
        assert!(report.max_product_defect <= 1e-12);
        assert!(report.min_abs_df_dx >= 2.0 - 1e-12);
    }

    #[test]
    fn track_cosine_curve_is_stationary_at_quarter_pi() {
        let sol = neg_cos_2x();
        let x_star = std::f64::consts::FRAC_PI_4;
        let curve = track(&sol, (0.0, x_star), (-5.0, 5.0), 1e-2).unwrap();
        for s in &curve.samples {
            assert_abs_diff_eq!(s.x, x_star, epsilon = 1e-9);
        }
        let report = lemma_report(&curve);
        assert!(report.max_abs_f <= 1e-8);
        assert!((report.min_abs_df_dx - 2.0).abs() <= 1e-8);
        assert!(report.max_product_defect <= 1e-6);
        assert_abs_diff_eq!(report.coverage, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn tracks_a_genuinely_moving_curve() {
        // chi = (e^s, -e^{-s}/2), psi = (1, s - 1): both Wronskians are 1 and
        // F = e^{x+t}(x - t - 1) - e^{-(x+t)}/2 vanishes on a sloped curve
        // x(t) = t + 1 + e^{-2(x+t)}/2, so the predictor really integrates
        // dx/dt = -F_t/F_x instead of sitting still
        let sol = build_solution(
            analytic("exp(x)", "-exp(-x)/2"),
            analytic("1", "x - 1"),
            1.0,
        )
        .unwrap();
        let seeds = find_seed_zeros(&sol, 0.0, (0.0, 2.0), 401).unwrap();
        assert_eq!(seeds.len(), 1);
        let implicit = |t: f64, x: f64| (x + t).exp() * (x - t - 1.0) - (-(x + t)).exp() / 2.0;
        assert!(implicit(0.0, seeds[0]).abs() <= 1e-12);

        let curve = track(&sol, (0.0, seeds[0]), (-1.0, 1.0), 1e-2).unwrap();
        let report = lemma_report(&curve);
        assert!(report.max_abs_f <= 1e-8, "max |F| {}", report.max_abs_f);
        assert!(report.max_product_defect <= 1e-6);
        assert!(report.min_abs_df_dx >= 2.0 - 1e-6);
        assert_abs_diff_eq!(report.coverage, 1.0, epsilon = 1e-12);

        // the curve truly moves, and each sample solves the implicit equation
        let first = curve.samples.first().unwrap();
        let last = curve.samples.last().unwrap();
        assert!(
            (last.x - first.x) > 1.0,
            "curve barely moved: {} -> {}",
            first.x,
            last.x
        );
        for s in curve.samples.iter().step_by(17) {
            assert!(implicit(s.t, s.x).abs() <= 1e-8);
        }

        // reversibility holds on the moving curve too
        let back = track(&sol, (last.t, last.x), (0.0, last.t), 1e-2).unwrap();
        let returned = back.samples.first().unwrap();
        assert!((returned.x - seeds[0]).abs() <= 1e-8);
    }

    #[test]
    fn bad_seed_is_rejected() {
        let err = track(&two_x(), (0.0, 0.05), (-1.0, 1.0), 1e-2).unwrap_err();
        assert!(matches!(err, TrackError::BadSeed { .. }));
    }

    #[test]
    fn domain_exit_truncates_with_reason() {
        // table-backed family with a finite range: the t-range pushes the
        // chiral arguments out of it
        let wp = crate::chiral_ode::integrate_pair(
            |_| Ok(0.0),
            [1.0, 0.0, 0.0, 1.0],
            0.0,
            (-2.0, 2.0),
            1e-2,
        )
        .unwrap();
        let sol: crate::assembly::LiouvilleSolution<f64> = build_solution(
            ChiralFamily::Table(wp.clone()),
            ChiralFamily::Table(wp),
            1.0,
        )
        .unwrap();
        let curve = track(&sol, (0.0, 0.0), (-5.0, 5.0), 1e-2).unwrap();
        assert_eq!(curve.truncation, Some(Truncation::DomainExit));
        let report = lemma_report(&curve);
        assert!(report.coverage < 1.0);
        // inside the table the curve still sits on the axis
        for s in &curve.samples {
            assert!(s.x.abs() <= 1e-10);
        }
    }

    #[test]
    fn tracking_is_reversible() {
        let sol = neg_cos_2x();
        let x_star = 3.0 * std::f64::consts::FRAC_PI_4;
        let fwd = track(&sol, (0.0, x_star), (0.0, 5.0), 1e-2).unwrap();
        let end = fwd.samples.last().copied().unwrap();
        let back = track(&sol, (end.t, end.x), (0.0, end.t), 1e-2).unwrap();
        let returned = back.samples.first().copied().unwrap();
        assert!(
            (returned.x - x_star).abs() <= 1e-8,
            "returned to {} instead of {}",
            returned.x,
            x_star
        );
    }

    #[test]
    fn cauchy_built_solutions_have_no_seeds() {
        use std::sync::Arc;
        let data = Arc::new(
            crate::initial_data::CauchyData::from_expressions(
                "exp(-x^2)",
                "0.3*sin(x)",
                Params::new(),
            )
            .unwrap(),
        );
        let grid = crate::assembly::SpacetimeGrid::new(-2.0, 2.0, 11, -4.0, 4.0, 21);
        let (sol, _) =
            crate::pipeline::solve(&data, &grid, &crate::pipeline::PipelineSettings::new(1.0))
                .unwrap();
        let seeds = find_seed_zeros(&sol, 0.0, (-4.0, 4.0), 512).unwrap();
        assert!(seeds.is_empty());
    }
}
