//! Initial data families and validation against the theorem hypotheses.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::functionals::profile_constant;
use crate::grid::{GridError, RadialField, RadialGrid};
use crate::scalar::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InitDataError {
    #[error("requested data is infeasible; at most {max_inner_mass} can sit inside r_star")]
    InfeasibleData { max_inner_mass: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// Parameters of the truncated-power family `θ · min(K, L r^{-n(n-1)})`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Concentration<T> {
    /// Total mass of `u_0 + v_0`.
    pub m0: T,
    /// Mass required inside `B_{r_star}`; must lie in `(0, m0)`.
    pub m0_tilde: T,
    pub r_star: T,
    /// Profile constant `L` of `u_0 + v_0 ≤ L |x|^{-n(n-1)}`.
    pub limit: T,
    /// Fraction of the combined profile assigned to `v_0`.
    pub split: T,
}

/// Builds `(u_0, v_0)` from the truncated-power family.
///
/// The combined profile `f = θ min(K, c_i)` with `c_i = L r_{i+1}^{-n(n-1)}` is
/// nonincreasing and respects the profile bound at every point of every cell
/// (`θ ≤ 1`). Among the members with total mass `m0`, the widest one (smallest
/// `K`) carrying at least `m0_tilde` inside `B_{r_star}` is returned.
pub fn make_concentrated<T: Real>(
    grid: &Arc<RadialGrid<T>>,
    spec: &Concentration<T>,
) -> Result<(RadialField<T>, RadialField<T>), InitDataError> {
    let Concentration { m0, m0_tilde, r_star, limit, split } = *spec;
    if !(m0 > T::zero()) || !m0.is_finite() {
        return Err(InitDataError::InvalidArgument("m0 must be positive".into()));
    }
    if !(m0_tilde > T::zero()) {
        return Err(InitDataError::InvalidArgument("m0_tilde must be positive".into()));
    }
    if !(r_star > T::zero() && r_star < grid.radius()) {
        return Err(InitDataError::InvalidArgument("r_star must lie in (0, R)".into()));
    }
    if !(limit > T::zero()) {
        return Err(InitDataError::InvalidArgument("profile constant L must be positive".into()));
    }
    if !(split >= T::zero() && split <= T::one()) {
        return Err(InitDataError::InvalidArgument("split must lie in [0, 1]".into()));
    }

    let n = grid.dim();
    let exponent = T::of_usize(n * (n - 1));
    let caps: Vec<T> = grid.face_radii()[1..].iter().map(|r| limit / r.powf(exponent)).collect();
    let volumes = grid.shell_volumes();
    let inner_weights = grid.volumes_within(r_star);

    let total_at = |k: T| -> T { caps.iter().zip(volumes).map(|(c, v)| k.min(*c) * *v).sum() };
    let inner_at = |k: T| -> T { caps.iter().zip(&inner_weights).map(|(c, v)| k.min(*c) * *v).sum() };

    let cap_total = total_at(caps[0]);
    let cap_inner = inner_at(caps[0]);
    if cap_total < m0 {
        // the profile bound alone cannot hold mass m0
        return Err(InitDataError::InfeasibleData { max_inner_mass: cap_inner.as_f64() });
    }
    // max over the family, attained at K = caps[0] (pure power law)
    let max_inner = m0 * cap_inner / cap_total;
    let target = m0_tilde / m0 * (T::one() + T::lit(1e-12));
    if m0_tilde >= m0 || !(cap_inner / cap_total >= target) {
        return Err(InitDataError::InfeasibleData { max_inner_mass: max_inner.as_f64() });
    }

    let k_min = level_for_mass(&caps, volumes, m0);
    let fraction = |k: T| inner_at(k) / total_at(k);
    let k = if fraction(k_min) >= target {
        k_min
    } else {
        // fraction(K) is nondecreasing in K; bisect for the smallest feasible level
        let (mut lo, mut hi) = (k_min, caps[0]);
        for _ in 0..200 {
            let mid = T::lit(0.5) * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if fraction(mid) >= target {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    };

    let theta = (m0 / total_at(k)).min(T::one());
    let combined: Vec<T> = caps.iter().map(|c| theta * k.min(*c)).collect();
    let u0 = combined.iter().map(|f| (T::one() - split) * *f).collect();
    let v0 = combined.iter().map(|f| split * *f).collect();
    Ok((grid.field(u0)?, grid.field(v0)?))
}

/// Smallest `K` with `Σ min(K, c_i) V_i ≥ mass`, for caps `c_i` nonincreasing in `i`.
fn level_for_mass<T: Real>(caps: &[T], volumes: &[T], mass: T) -> T {
    // On [c_j, c_{j-1}] the total is K Σ_{i<j} V_i + Σ_{i≥j} c_i V_i.
    let m = caps.len();
    let mut tail: Vec<T> = vec![T::zero(); m + 1];
    for i in (0..m).rev() {
        tail[i] = tail[i + 1] + caps[i] * volumes[i];
    }
    let mut head = T::zero();
    for j in 1..=m {
        head = head + volumes[j - 1];
        let floor = if j < m { caps[j] } else { T::zero() };
        let k = (mass - tail[j]) / head;
        if k >= floor {
            return k.min(caps[j - 1]);
        }
    }
    caps[0]
}

/// Smooth radial bump `amplitude · exp(-(r/width)²)` sampled at cell centres.
pub fn bump<T: Real>(grid: &Arc<RadialGrid<T>>, amplitude: T, width: T) -> RadialField<T> {
    grid.sample(|r| amplitude * (-(r / width).powi(2)).exp())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Hypothesis<T> {
    /// Nonnegative data, as required for global boundedness.
    Bounded,
    /// Keller–Segel blow-up data: mass, concentration and pointwise profile bound on `u_0 + v_0`.
    KellerSegel { limit: T, m0: T, m0_tilde: T, r_star: T },
    /// Jäger–Luckhaus blow-up data: nonincreasing profiles, mass and concentration of `u_0`.
    JaegerLuckhaus { m0: T, m0_tilde: T, r_star: T },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    fn push(&mut self, name: &str, passed: bool, detail: String) {
        self.checks.push(Check { name: name.to_string(), passed, detail });
    }
}

const MASS_TOLERANCE: f64 = 1e-10;

/// Checks `(u_0, v_0)` against the hypotheses of one theorem.
pub fn validate<T: Real>(u0: &RadialField<T>, v0: &RadialField<T>, hypothesis: &Hypothesis<T>) -> ValidationReport {
    let mut report = ValidationReport::default();
    let same_grid = u0.grid() == v0.grid();
    report.push("same-grid", same_grid, String::new());
    if !same_grid {
        return report;
    }
    let min = u0.min_value().min(v0.min_value());
    report.push("nonnegative", min >= T::zero(), format!("min = {min}"));

    let mass_check = |report: &mut ValidationReport, got: T, want: T| {
        let ok = (got - want).abs() <= T::lit(MASS_TOLERANCE) * want.abs();
        report.push("mass", ok, format!("mass = {got}, required {want}"));
    };
    let tilde_range = |report: &mut ValidationReport, m0: T, m0_tilde: T| {
        let ok = m0_tilde > T::zero() && m0_tilde < m0;
        report.push("m0-tilde-range", ok, format!("m0_tilde = {m0_tilde}, m0 = {m0}"));
    };

    match *hypothesis {
        Hypothesis::Bounded => {}
        Hypothesis::KellerSegel { limit, m0, m0_tilde, r_star } => {
            tilde_range(&mut report, m0, m0_tilde);
            mass_check(&mut report, u0.mass() + v0.mass(), m0);
            let inner = u0.mass_within(r_star) + v0.mass_within(r_star);
            report.push("concentration", inner >= m0_tilde, format!("inner mass = {inner}, required {m0_tilde}"));
            let c = profile_constant(u0, v0, T::zero());
            let ok = c <= limit * (T::one() + T::lit(1e-12));
            report.push("profile", ok, format!("sup (u0+v0) r^(n(n-1)) = {c}, limit {limit}"));
        }
        Hypothesis::JaegerLuckhaus { m0, m0_tilde, r_star } => {
            tilde_range(&mut report, m0, m0_tilde);
            let monotone = u0.is_nonincreasing() && v0.is_nonincreasing();
            report.push("nonincreasing", monotone, String::new());
            mass_check(&mut report, u0.mass(), m0);
            let inner = u0.mass_within(r_star);
            report.push("concentration", inner >= m0_tilde, format!("inner mass = {inner}, required {m0_tilde}"));
        }
    }
    report
}
