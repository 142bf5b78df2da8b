//! Time stepping of the two parabolic equations and the run loop.
//!
//! One step is IMEX: chemotactic advection (first-order upwind on the face
//! velocity `χ w_r`) and the logistic/competition reaction are explicit, diffusion
//! is a θ-scheme. The step size keeps every explicit coefficient nonnegative, so
//! `u, v ≥ 0` is preserved cell by cell; `w` is re-solved after each update.

use log::{debug, info};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::elliptic::{self, EllipticError};
use crate::functionals::{moment_sample, FunctionalError, MomentConfig, MomentSample};
use crate::grid::{GridError, RadialField};
use crate::model::{ModelParams, Species};
use crate::scalar::Real;
use crate::tridiag;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StepError {
    #[error("time step {dt} fell below dt_min = {dt_min} at t = {t}")]
    StepCollapse { t: f64, dt: f64, dt_min: f64 },
    #[error("initial density is negative at cell {0}")]
    NegativeInitial(usize),
    #[error("diffusion solve failed")]
    DiffusionSolve,
    #[error(transparent)]
    Elliptic(#[from] EllipticError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Functional(#[from] FunctionalError),
    #[error("invalid step control: {0}")]
    Control(&'static str),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepControl<T> {
    /// Fraction of the advective outflow limit used per step.
    pub cfl_advection: T,
    /// Implicitness of diffusion (1 = backward Euler).
    pub diffusion_theta: T,
    pub dt_min: T,
    pub dt_max: T,
    /// `‖u‖∞ + ‖v‖∞` at which a run is declared blown up.
    pub blowup_threshold: T,
    pub t_end: T,
    pub max_steps: u64,
}

impl<T: Real> StepControl<T> {
    pub fn new(t_end: T) -> Self {
        Self {
            cfl_advection: T::lit(0.4),
            diffusion_theta: T::one(),
            dt_min: T::lit(1e-12),
            dt_max: T::lit(1e-2),
            blowup_threshold: T::lit(1e8),
            t_end,
            max_steps: 50_000_000,
        }
    }

    pub fn validate(&self) -> Result<(), StepError> {
        if !(self.cfl_advection > T::zero() && self.cfl_advection <= T::lit(0.5)) {
            return Err(StepError::Control("cfl_advection must lie in (0, 0.5]"));
        }
        if !(self.diffusion_theta >= T::zero() && self.diffusion_theta <= T::one()) {
            return Err(StepError::Control("diffusion_theta must lie in [0, 1]"));
        }
        if !(self.dt_min > T::zero()) {
            return Err(StepError::Control("dt_min must be positive"));
        }
        if !(self.dt_max >= self.dt_min) {
            return Err(StepError::Control("dt_max must be >= dt_min"));
        }
        if !(self.t_end >= T::zero()) || !self.t_end.is_finite() {
            return Err(StepError::Control("t_end must be finite and nonnegative"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct State<T> {
    pub t: T,
    pub u: RadialField<T>,
    pub v: RadialField<T>,
    pub w: RadialField<T>,
    pub dt_last: T,
    pub step_count: u64,
}

impl<T: Real> State<T> {
    /// Initial state at `t = 0`; solves for `w`.
    pub fn new(p: &ModelParams<T>, u: RadialField<T>, v: RadialField<T>) -> Result<Self, StepError> {
        for f in [&u, &v] {
            if let Some(i) = f.values.iter().position(|x| *x < T::zero()) {
                return Err(StepError::NegativeInitial(i));
            }
        }
        let w = elliptic::solve_w(p, &u, &v)?;
        Ok(Self { t: T::zero(), u, v, w, dt_last: T::zero(), step_count: 0 })
    }

    pub fn sup_sum(&self) -> T {
        self.u.sup() + self.v.sup()
    }
}

/// Per-species data the explicit update needs.
struct SpeciesStep<'a, T> {
    values: &'a [T],
    diffusion: T,
    chi: T,
    mu: T,
    /// `μ (u^{κ-1} + a v^{λ-1})` per cell: the loss rate of the reaction.
    loss: Vec<T>,
}

fn loss_rates<T: Real>(p: &ModelParams<T>, species: Species, own: &[T], other: &[T]) -> Vec<T> {
    let s = p.species(species);
    own.iter()
        .zip(other)
        .map(|(x, y)| s.mu * (x.powf(s.kappa - T::one()) + s.competition * y.powf(s.lambda - T::one())))
        .collect()
}

/// `χ r^{n-1} w_r` at faces, so that the advective flux through face `k` is
/// `velocity[k] · u_upwind`.
fn face_velocity<T: Real>(face_flux: &[T], chi: T) -> Vec<T> {
    face_flux.iter().map(|f| chi * *f).collect()
}

fn outflow_rates<T: Real>(velocity: &[T], meas: &[T]) -> Vec<T> {
    (0..meas.len())
        .map(|i| {
            let right = velocity[i + 1].max(T::zero());
            let left = (-velocity[i]).max(T::zero());
            (right + left) / meas[i]
        })
        .collect()
}

fn diffusion_conductance<T: Real>(u: &RadialField<T>, d: T) -> Vec<T> {
    let g = u.grid();
    let c = g.cell_centers();
    let m = g.cells();
    let mut out = vec![T::zero(); m + 1];
    for k in 1..m {
        out[k] = d * g.face_weight(k) / (c[k] - c[k - 1]);
    }
    out
}

/// Largest admissible step for the current state (before clipping to `t_end`).
fn stable_dt<T: Real>(p: &ModelParams<T>, s: &State<T>, c: &StepControl<T>, face_flux: &[T]) -> T {
    let g = s.u.grid();
    let meas = g.radial_measure();
    let mut dt = c.dt_max;
    for chi in [p.chi1, p.chi2] {
        let rate = outflow_rates(&face_velocity(face_flux, chi), meas).into_iter().fold(T::zero(), T::max);
        if rate > T::zero() {
            dt = dt.min(c.cfl_advection / rate);
        }
    }
    let su = s.u.sup();
    let sv = s.v.sup();
    let half = T::lit(0.5);
    let react_u = p.mu1 * (T::one() + su.powf(p.kappa1 - T::one()) + p.a1 * sv.powf(p.lambda1 - T::one()));
    let react_v = p.mu2 * (T::one() + p.a2 * su.powf(p.lambda2 - T::one()) + sv.powf(p.kappa2 - T::one()));
    dt = dt.min(half / react_u).min(half / react_v);
    let explicit = T::one() - c.diffusion_theta;
    if explicit > T::zero() {
        for d in [p.d1, p.d2] {
            let cond = diffusion_conductance(&s.u, d);
            let rate = (0..g.cells()).map(|i| (cond[i] + cond[i + 1]) / meas[i]).fold(T::zero(), T::max);
            if rate > T::zero() {
                dt = dt.min(T::lit(0.1) / (explicit * rate));
            }
        }
    }
    dt
}

/// Explicit advection + reaction (+ explicit diffusion part), then the implicit solve.
fn advance_species<T: Real>(
    sp: &SpeciesStep<'_, T>,
    face_flux: &[T],
    meas: &[T],
    cond: &[T],
    dt: T,
    theta: T,
) -> Option<Vec<T>> {
    let m = meas.len();
    let u = sp.values;
    let velocity = face_velocity(face_flux, sp.chi);
    let explicit_diff = T::one() - theta;
    let mut rhs = Vec::with_capacity(m);
    for i in 0..m {
        // outflow uses the cell's own value, inflow the neighbour's
        let (right, left) = (velocity[i + 1], velocity[i]);
        let mut out_rate = T::zero();
        let mut inflow = T::zero();
        if right > T::zero() {
            out_rate = out_rate + right;
        } else if i + 1 < m {
            inflow = inflow - right * u[i + 1];
        }
        if left < T::zero() {
            out_rate = out_rate - left;
        } else if i > 0 {
            inflow = inflow + left * u[i - 1];
        }
        let mut diff_out = T::zero();
        let mut diff_in = T::zero();
        if explicit_diff > T::zero() {
            diff_out = explicit_diff * (cond[i] + cond[i + 1]);
            if i > 0 {
                diff_in = diff_in + explicit_diff * cond[i] * u[i - 1];
            }
            if i + 1 < m {
                diff_in = diff_in + explicit_diff * cond[i + 1] * u[i + 1];
            }
        }
        let keep = T::one() - dt * ((out_rate + diff_out) / meas[i] + sp.loss[i]);
        let gained = dt * ((inflow + diff_in) / meas[i] + sp.mu * u[i]);
        rhs.push(u[i] * keep + gained);
    }

    if theta > T::zero() {
        let mut lower = vec![T::zero(); m];
        let mut diag = vec![T::zero(); m];
        let mut upper = vec![T::zero(); m];
        for i in 0..m {
            let a = theta * dt * cond[i];
            let b = theta * dt * cond[i + 1];
            lower[i] = -a;
            upper[i] = -b;
            diag[i] = meas[i] + a + b;
            rhs[i] = rhs[i] * meas[i];
        }
        tridiag::solve_in_place(&lower, &diag, &upper, &mut rhs)?;
    }
    Some(rhs)
}

/// Advances the state by one step.
pub fn step<T: Real>(p: &ModelParams<T>, s: &State<T>, c: &StepControl<T>) -> Result<State<T>, StepError> {
    let g = s.u.grid().clone();
    let meas = g.radial_measure();
    let face_flux = elliptic::flux_identity(p, &s.u, &s.v, &s.w);
    let remaining = c.t_end - s.t;
    let mut dt = stable_dt(p, s, c, &face_flux);
    // absorb a sliver left by round-off instead of taking a separate tiny step
    let finishing = remaining <= dt * (T::one() + T::lit(1e-6));
    if finishing {
        dt = remaining;
    }
    if dt < c.dt_min && !(finishing && dt > T::zero()) {
        return Err(StepError::StepCollapse { t: s.t.as_f64(), dt: dt.as_f64(), dt_min: c.dt_min.as_f64() });
    }

    let cond_u = diffusion_conductance(&s.u, p.d1);
    let cond_v = diffusion_conductance(&s.v, p.d2);
    let first = SpeciesStep {
        values: &s.u.values,
        diffusion: p.d1,
        chi: p.chi1,
        mu: p.mu1,
        loss: loss_rates(p, Species::First, &s.u.values, &s.v.values),
    };
    let second = SpeciesStep {
        values: &s.v.values,
        diffusion: p.d2,
        chi: p.chi2,
        mu: p.mu2,
        loss: loss_rates(p, Species::Second, &s.v.values, &s.u.values),
    };
    debug_assert!(first.diffusion > T::zero() && second.diffusion > T::zero());

    // the bound above guarantees nonnegativity; halving only guards against round-off
    loop {
        let next_u = advance_species(&first, &face_flux, meas, &cond_u, dt, c.diffusion_theta);
        let next_v = advance_species(&second, &face_flux, meas, &cond_v, dt, c.diffusion_theta);
        let admissible =
            |x: &Option<Vec<T>>| x.as_ref().is_some_and(|v| v.iter().all(|y| y.is_finite() && *y >= T::zero()));
        if admissible(&next_u) && admissible(&next_v) {
            let u = RadialField::new(g.clone(), next_u.expect("checked"))?;
            let v = RadialField::new(g.clone(), next_v.expect("checked"))?;
            let w = elliptic::solve_w(p, &u, &v)?;
            let t = if finishing && dt == remaining { c.t_end } else { s.t + dt };
            return Ok(State { t, u, v, w, dt_last: dt, step_count: s.step_count + 1 });
        }
        dt = dt * T::lit(0.5);
        if dt < c.dt_min {
            return Err(StepError::StepCollapse { t: s.t.as_f64(), dt: dt.as_f64(), dt_min: c.dt_min.as_f64() });
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TerminationCause {
    ReachedTEnd,
    BlowupThreshold,
    StepCollapse,
    /// The `max_steps` budget ran out before any other cause applied.
    StepLimit,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit<T> {
    /// Estimated blow-up time `T` in `‖u‖∞ + ‖v‖∞ ≈ C (T - t)^{-q}`.
    pub t_blowup: T,
    pub exponent: T,
    pub prefactor: T,
    pub points: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Termination<T> {
    pub cause: TerminationCause,
    pub time: T,
    pub steps: u64,
    pub message: Option<String>,
    pub fit: Option<PowerLawFit<T>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample<T> {
    pub t: T,
    pub step: u64,
    pub dt: T,
    pub mass_u: T,
    pub mass_v: T,
    pub sup_u: T,
    pub sup_v: T,
    pub min_u: T,
    pub min_v: T,
    pub lp_u: T,
    pub lq_v: T,
    pub concavity_margin: T,
    pub moments: Option<MomentSample<T>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FinalProfiles<T> {
    pub r: Vec<T>,
    pub u: Vec<T>,
    pub v: Vec<T>,
    pub w: Vec<T>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord<T> {
    pub samples: Vec<Sample<T>>,
    pub termination: Termination<T>,
    pub initial_mass_u: T,
    pub initial_mass_v: T,
    pub initially_nonincreasing: bool,
    pub lp_exponent_u: T,
    pub lq_exponent_v: T,
    pub final_profiles: FinalProfiles<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunOptions<T> {
    /// Record a sample every `sample_stride` accepted steps (plus the first and last state).
    pub sample_stride: u64,
    /// Number of trailing samples used by the blow-up power-law fit.
    pub fit_points: usize,
    pub moments: Option<MomentConfig<T>>,
    pub profile_eps: T,
    pub lp_exponent_u: T,
    pub lq_exponent_v: T,
}

impl<T: Real> RunOptions<T> {
    pub fn new(n: usize) -> Self {
        let p = T::of_usize(n) / T::lit(2.0) + T::one();
        Self {
            sample_stride: 10,
            fit_points: 10,
            moments: None,
            profile_eps: T::zero(),
            lp_exponent_u: p,
            lq_exponent_v: p,
        }
    }
}

fn sample<T: Real>(s: &State<T>, opts: &RunOptions<T>) -> Result<Sample<T>, StepError> {
    let moments = match &opts.moments {
        Some(cfg) => Some(moment_sample(s.t, &s.u, &s.v, cfg, opts.profile_eps)?),
        None => None,
    };
    let margin = s.u.accumulate().concavity_margin().max(s.v.accumulate().concavity_margin());
    Ok(Sample {
        t: s.t,
        step: s.step_count,
        dt: s.dt_last,
        mass_u: s.u.mass(),
        mass_v: s.v.mass(),
        sup_u: s.u.sup(),
        sup_v: s.v.sup(),
        min_u: s.u.min_value(),
        min_v: s.v.min_value(),
        lp_u: s.u.lp_norm(opts.lp_exponent_u),
        lq_v: s.v.lp_norm(opts.lq_exponent_v),
        concavity_margin: margin,
        moments,
    })
}

/// Advances until `t_end`, the blow-up threshold, step collapse or the step budget.
///
/// Step failures end the run and are recorded as the termination cause; only
/// invalid inputs produce an `Err`.
pub fn run<T: Real>(
    p: &ModelParams<T>,
    initial: State<T>,
    c: &StepControl<T>,
    opts: &RunOptions<T>,
) -> Result<RunRecord<T>, StepError> {
    c.validate()?;
    if opts.sample_stride == 0 {
        return Err(StepError::Control("sample_stride must be >= 1"));
    }
    if let Some(cfg) = &opts.moments {
        cfg.validate(p.n, p.radius)?;
    }
    let initial_mass_u = initial.u.mass();
    let initial_mass_v = initial.v.mass();
    let initially_nonincreasing = initial.u.is_nonincreasing() && initial.v.is_nonincreasing();
    let mut samples = vec![sample(&initial, opts)?];
    let mut state = initial;
    let mut message = None;

    let cause = loop {
        if state.sup_sum() >= c.blowup_threshold {
            break TerminationCause::BlowupThreshold;
        }
        if state.t >= c.t_end {
            break TerminationCause::ReachedTEnd;
        }
        if state.step_count >= c.max_steps {
            break TerminationCause::StepLimit;
        }
        match step(p, &state, c) {
            Ok(next) => state = next,
            Err(StepError::StepCollapse { t, dt, dt_min }) => {
                message = Some(format!("dt = {dt:e} < dt_min = {dt_min:e} at t = {t}"));
                break TerminationCause::StepCollapse;
            }
            Err(other) => return Err(other),
        }
        if state.step_count.is_multiple_of(opts.sample_stride) {
            samples.push(sample(&state, opts)?);
        }
    };
    if samples.last().map(|s| s.step) != Some(state.step_count) {
        samples.push(sample(&state, opts)?);
    }
    info!("run finished: {cause:?} at t = {} after {} steps", state.t, state.step_count);

    let fit = match cause {
        TerminationCause::BlowupThreshold | TerminationCause::StepCollapse => {
            let times: Vec<T> = samples.iter().map(|s| s.t).collect();
            let sups: Vec<T> = samples.iter().map(|s| s.sup_u + s.sup_v).collect();
            fit_power_law(&times, &sups, opts.fit_points)
        }
        _ => None,
    };
    let g = state.u.grid();
    Ok(RunRecord {
        samples,
        termination: Termination { cause, time: state.t, steps: state.step_count, message, fit },
        initial_mass_u,
        initial_mass_v,
        initially_nonincreasing,
        lp_exponent_u: opts.lp_exponent_u,
        lq_exponent_v: opts.lq_exponent_v,
        final_profiles: FinalProfiles {
            r: g.cell_centers().to_vec(),
            u: state.u.values.clone(),
            v: state.v.values.clone(),
            w: state.w.values.clone(),
        },
    })
}

/// Fits `S(t) ≈ C (T - t)^{-q}` to the last `k` samples.
///
/// For each trial `T > t_last`, `ln S` is regressed on `ln(T - t)`; `T` is chosen
/// to minimise the squared residual (log-spaced scan, then golden-section refinement).
pub fn fit_power_law<T: Real>(times: &[T], values: &[T], k: usize) -> Option<PowerLawFit<T>> {
    let len = times.len().min(values.len());
    if k < 3 || len < 3 {
        return None;
    }
    let start = len.saturating_sub(k);
    let ts: Vec<f64> = times[start..len].iter().map(|t| t.as_f64()).collect();
    let ys: Vec<f64> = values[start..len].iter().map(|v| v.as_f64().ln()).collect();
    if ys.iter().any(|y| !y.is_finite()) {
        return None;
    }
    let t_last = *ts.last()?;
    let span = t_last - ts[0];
    if !(span > 0.0) {
        return None;
    }
    let regress = |big_t: f64| -> (f64, f64, f64) {
        let xs: Vec<f64> = ts.iter().map(|t| (big_t - t).ln()).collect();
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
        let intercept = my - slope * mx;
        let sse = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
        (sse, slope, intercept)
    };
    let lo = (span * 1e-9).ln();
    let hi = (span * 1e3).ln();
    let scan: usize = 240;
    let offset = |j: f64| (lo + (hi - lo) * j / scan as f64).exp();
    let best = (0..=scan)
        .min_by(|&a, &b| regress(t_last + offset(a as f64)).0.total_cmp(&regress(t_last + offset(b as f64)).0))?;
    // golden section on the log-offset between the neighbours of the best scan point
    let (mut a, mut b) = (
        lo + (hi - lo) * (best.saturating_sub(1)) as f64 / scan as f64,
        lo + (hi - lo) * ((best + 1).min(scan)) as f64 / scan as f64,
    );
    let golden = 0.5 * (5f64.sqrt() - 1.0);
    let cost = |x: f64| regress(t_last + x.exp()).0;
    for _ in 0..80 {
        let x1 = b - golden * (b - a);
        let x2 = a + golden * (b - a);
        if cost(x1) < cost(x2) {
            b = x2;
        } else {
            a = x1;
        }
    }
    let big_t = t_last + (0.5 * (a + b)).exp();
    let (_, slope, intercept) = regress(big_t);
    if !(big_t.is_finite() && slope.is_finite() && intercept.is_finite()) {
        return None;
    }
    debug!("power-law fit: T = {big_t}, q = {}", -slope);
    Some(PowerLawFit {
        t_blowup: T::lit(big_t),
        exponent: T::lit(-slope),
        prefactor: T::lit(intercept.exp()),
        points: ts.len(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MassAudit<T> {
    /// Largest `(∫u(t) - e^{μ_1 t}∫u_0) / (e^{μ_1 t}∫u_0)` over samples (≤ 0 when the bound holds).
    pub max_violation_u: T,
    pub max_violation_v: T,
    pub worst_time: T,
    pub tolerance: T,
    pub passed: bool,
}

pub const MASS_SLACK: f64 = 1e-8;

/// Checks `∫u(t) ≤ e^{μ_1 t} ∫u_0` and `∫v(t) ≤ e^{μ_2 t} ∫v_0` at every sample.
pub fn mass_audit<T: Real>(record: &RunRecord<T>, p: &ModelParams<T>) -> MassAudit<T> {
    let rel = |mass: T, initial: T, mu: T, t: T| {
        let bound = (mu * t).exp() * initial;
        let scale = bound.max(T::min_positive_value());
        (mass - bound) / scale
    };
    let mut worst_u = T::neg_infinity();
    let mut worst_v = T::neg_infinity();
    let mut worst_time = T::zero();
    let mut worst = T::neg_infinity();
    for s in &record.samples {
        let vu = rel(s.mass_u, record.initial_mass_u, p.mu1, s.t);
        let vv = rel(s.mass_v, record.initial_mass_v, p.mu2, s.t);
        worst_u = worst_u.max(vu);
        worst_v = worst_v.max(vv);
        if vu.max(vv) > worst {
            worst = vu.max(vv);
            worst_time = s.t;
        }
    }
    let tolerance = T::lit(MASS_SLACK);
    MassAudit {
        max_violation_u: worst_u,
        max_violation_v: worst_v,
        worst_time,
        tolerance,
        passed: worst_u <= tolerance && worst_v <= tolerance,
    }
}

pub const CONCAVITY_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConcavityAudit<T> {
    /// Nonlocal signal, the monotonicity hypothesis on `μ` and nonincreasing initial data.
    pub applicable: bool,
    /// Largest `margin / max(‖u‖∞, ‖v‖∞)` over samples with nonzero data.
    pub max_relative_margin: Option<T>,
    pub worst_time: T,
    pub passed: bool,
}

/// Checks that the accumulations stay concave (up to `1e-6 ‖·‖∞`) when the
/// hypotheses guaranteeing it are met.
pub fn concavity_audit<T: Real>(record: &RunRecord<T>, p: &ModelParams<T>) -> ConcavityAudit<T> {
    let applicable =
        p.signal.is_jaeger_luckhaus() && record.initially_nonincreasing && crate::model::concavity_preserved(p);
    let mut worst: Option<T> = None;
    let mut worst_time = T::zero();
    for s in &record.samples {
        let scale = s.sup_u.max(s.sup_v);
        if scale <= T::zero() {
            continue;
        }
        let rel = s.concavity_margin / scale;
        if worst.is_none_or(|w| rel > w) {
            worst = Some(rel);
            worst_time = s.t;
        }
    }
    let passed = !applicable || worst.is_none_or(|w| w <= T::lit(CONCAVITY_TOLERANCE));
    ConcavityAudit { applicable, max_relative_margin: worst, worst_time, passed }
}
