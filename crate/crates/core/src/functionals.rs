//! Moment functionals of the mass accumulation and the blow-up diagnostics built on them.
//!
//! For `U` piecewise linear in `s` the weighted integrals
//!
//! ```text
//! φ = ∫_0^{s0} s^{-b} (s0 - s) U ds,      ψ = ∫_0^{s0} s^{-b} (s0 - s) U U_s ds
//! ```
//!
//! are evaluated piece by piece from antiderivatives of `s^{-b}`, `s^{1-b}`,
//! `s^{2-b}`. On the first piece `U(0) = 0` removes the `s^{-b}` term, which is
//! what keeps `b ∈ [1, 2)` integrable.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{Accumulated, RadialField};
use crate::model::ModelParams;
use crate::scalar::{power_integral, Real};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FunctionalError {
    #[error("weight exponent b = {0} must be < 2")]
    WeightExponent(f64),
    #[error("s0 = {s0} must lie in (0, {max})")]
    S0 { s0: f64, max: f64 },
    #[error("b = {b} outside the {regime:?} window ({lo}, {hi})")]
    Window { b: f64, regime: MomentRegime, lo: f64, hi: f64 },
    #[error("Riccati coefficient A = {0} must be positive")]
    RiccatiA(f64),
    #[error("Riccati coefficient B = {0} must be nonnegative")]
    RiccatiB(f64),
    #[error("audit needs at least 3 samples, got {0}")]
    TooFewSamples(usize),
    #[error("sample times must be strictly increasing")]
    UnorderedTimes,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MomentRegime {
    /// `b ∈ (1 - 2/n, min{1, 2 - 4/n})`.
    KellerSegel,
    /// `b ∈ (1, 2 - 4/n)`.
    JaegerLuckhaus,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentConfig<T> {
    pub s0: T,
    pub b: T,
    pub regime: MomentRegime,
}

impl<T: Real> MomentConfig<T> {
    /// Open interval of admissible `b` for the regime in dimension `n`.
    pub fn window(regime: MomentRegime, n: usize) -> (T, T) {
        let nn = T::of_usize(n);
        let two = T::lit(2.0);
        let four = T::lit(4.0);
        match regime {
            MomentRegime::KellerSegel => (T::one() - two / nn, T::one().min(two - four / nn)),
            MomentRegime::JaegerLuckhaus => (T::one(), two - four / nn),
        }
    }

    /// Checks `s0 ∈ (0, R^n)` and that `b` lies in the regime window.
    pub fn validate(&self, n: usize, radius: T) -> Result<(), FunctionalError> {
        let s_max = radius.powi(n as i32);
        if !(self.s0 > T::zero() && self.s0 < s_max) {
            return Err(FunctionalError::S0 { s0: self.s0.as_f64(), max: s_max.as_f64() });
        }
        let (lo, hi) = Self::window(self.regime, n);
        if !(self.b > lo && self.b < hi) {
            return Err(FunctionalError::Window {
                b: self.b.as_f64(),
                regime: self.regime,
                lo: lo.as_f64(),
                hi: hi.as_f64(),
            });
        }
        Ok(())
    }

    /// `(n - 1)(max{κ_1, κ_2} - 1) < b/2`, reported for Keller–Segel runs but not enforced.
    /// Returns `(holds, left-hand side, b/2)`.
    pub fn exponent_check(&self, p: &ModelParams<T>) -> (bool, T, T) {
        let lhs = T::of_usize(p.n - 1) * (p.kappa1.max(p.kappa2) - T::one());
        let rhs = self.b / T::lit(2.0);
        (lhs < rhs, lhs, rhs)
    }

    /// The radius `r⋆ = (s0/4)^{1/n}` used to place the initial concentration.
    pub fn concentration_radius(&self, n: usize) -> T {
        (self.s0 / T::lit(4.0)).powf(T::one() / T::of_usize(n))
    }
}

/// Per piece: `(∫ s^{-b}(s0-s) U ds, slope)`, restricted to `[0, s0]`.
fn pieces<T: Real>(u: &Accumulated<T>, s0: T, b: T) -> impl Iterator<Item = (T, T)> + '_ {
    let nodes = u.nodes();
    let values = u.values();
    (0..nodes.len() - 1).map_while(move |i| {
        let a = nodes[i];
        if a >= s0 {
            return None;
        }
        let c = nodes[i + 1].min(s0);
        let slope = (values[i + 1] - values[i]) / (nodes[i + 1] - nodes[i]);
        // U = U_a + slope (s - a) on the piece
        let w1 = s0 * power_integral(a, c, T::one() - b) - power_integral(a, c, T::lit(2.0) - b);
        let linear = slope * (w1 - a * weight0(a, c, s0, b));
        let constant = if values[i] == T::zero() { T::zero() } else { values[i] * weight0(a, c, s0, b) };
        Some((constant + linear, slope))
    })
}

/// `∫_a^c s^{-b}(s0 - s) ds`; only called with `a > 0` when `b ≥ 1`.
fn weight0<T: Real>(a: T, c: T, s0: T, b: T) -> T {
    if a == T::zero() && b >= T::one() {
        // multiplied by zero by the caller (U(0) = 0 and a = 0)
        return T::zero();
    }
    s0 * power_integral(a, c, -b) - power_integral(a, c, T::one() - b)
}

fn check_b<T: Real>(b: T) -> Result<(), FunctionalError> {
    if b < T::lit(2.0) {
        Ok(())
    } else {
        Err(FunctionalError::WeightExponent(b.as_f64()))
    }
}

/// `φ = ∫_0^{s0} s^{-b}(s0 - s) U(s) ds`.
pub fn phi<T: Real>(u: &Accumulated<T>, cfg: &MomentConfig<T>) -> Result<T, FunctionalError> {
    check_b(cfg.b)?;
    Ok(pieces(u, cfg.s0, cfg.b).map(|(integral, _)| integral).sum())
}

/// `ψ = ∫_0^{s0} s^{-b}(s0 - s) U(s) U_s(s) ds`; `U_s` is constant on each piece.
pub fn psi<T: Real>(u: &Accumulated<T>, cfg: &MomentConfig<T>) -> Result<T, FunctionalError> {
    check_b(cfg.b)?;
    Ok(pieces(u, cfg.s0, cfg.b).map(|(integral, slope)| integral * slope).sum())
}

/// The constant `ψ s0^{3-b} / φ²` of the lower bound `ψ ≥ c s0^{-(3-b)} φ²`;
/// infinite when `φ = 0`.
pub fn psi_phi_gap<T: Real>(u: &Accumulated<T>, cfg: &MomentConfig<T>) -> Result<T, FunctionalError> {
    let ph = phi(u, cfg)?;
    if ph == T::zero() {
        return Ok(T::infinity());
    }
    Ok(psi(u, cfg)? * cfg.s0.powf(T::lit(3.0) - cfg.b) / (ph * ph))
}

/// Largest relative violation of `U_s(s) ≤ U(s)/s ≤ U_s(0⁺)` over the interior nodes.
///
/// `U_s` at a node is taken from the piece to its right, which is the tighter
/// side of the first inequality for concave `U`.
pub fn mean_value_violation<T: Real>(u: &Accumulated<T>) -> T {
    let slopes = u.slopes();
    let nodes = u.nodes();
    let values = u.values();
    let origin = slopes[0];
    let scale = origin.abs().max(T::min_positive_value());
    let mut worst = T::zero();
    for i in 1..nodes.len() - 1 {
        let secant = values[i] / nodes[i];
        worst = worst.max((slopes[i] - secant) / scale).max((secant - origin) / scale);
    }
    worst
}

/// Blow-up time of the comparison problem `φ' = Aφ² - B`, `φ(0) = φ_0`:
///
/// `T* = ln((φ_0 + k)/(φ_0 - k)) / (2√(AB))` with `k = √(B/A)`, or `1/(Aφ_0)` when
/// `B = 0`; `None` when `φ_0 ≤ k` (no blow-up).
pub fn riccati_blowup_bound<T: Real>(a: T, b: T, phi0: T) -> Result<Option<T>, FunctionalError> {
    if !(a > T::zero()) {
        return Err(FunctionalError::RiccatiA(a.as_f64()));
    }
    if !(b >= T::zero()) {
        return Err(FunctionalError::RiccatiB(b.as_f64()));
    }
    if b == T::zero() {
        return Ok((phi0 > T::zero()).then(|| T::one() / (a * phi0)));
    }
    let k = (b / a).sqrt();
    if !(phi0 > k) {
        return Ok(None);
    }
    let log_ratio = (T::lit(2.0) * k / (phi0 - k)).ln_1p();
    Ok(Some(log_ratio / (T::lit(2.0) * (a * b).sqrt())))
}

/// `sup (u + v) r^{n(n-1)+ε}` over cells, with `r` the outer face of each cell
/// (where the pointwise bound is tightest for cell-constant data), and whether
/// it stays within `limit`.
pub fn profile_check<T: Real>(u: &RadialField<T>, v: &RadialField<T>, eps: T, limit: T) -> (bool, T) {
    let c = profile_constant(u, v, eps);
    (c <= limit, c)
}

pub fn profile_constant<T: Real>(u: &RadialField<T>, v: &RadialField<T>, eps: T) -> T {
    let g = u.grid();
    let n = g.dim();
    let exponent = T::of_usize(n * (n - 1)) + eps;
    let faces = g.face_radii();
    u.values
        .iter()
        .zip(&v.values)
        .enumerate()
        .map(|(i, (a, b))| (*a + *b) * faces[i + 1].powf(exponent))
        .fold(T::zero(), T::max)
}

/// Diagnostics of one time sample.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentSample<T> {
    pub t: T,
    pub phi_u: T,
    pub phi_v: T,
    pub psi_u: T,
    pub psi_v: T,
    /// `max` over both species of [`Accumulated::concavity_margin`].
    pub concavity_margin: T,
    pub profile_constant: T,
}

pub fn moment_sample<T: Real>(
    t: T,
    u: &RadialField<T>,
    v: &RadialField<T>,
    cfg: &MomentConfig<T>,
    eps: T,
) -> Result<MomentSample<T>, FunctionalError> {
    let uu = u.accumulate();
    let vv = v.accumulate();
    Ok(MomentSample {
        t,
        phi_u: phi(&uu, cfg)?,
        phi_v: phi(&vv, cfg)?,
        psi_u: psi(&uu, cfg)?,
        psi_v: psi(&vv, cfg)?,
        concavity_margin: uu.concavity_margin().max(vv.concavity_margin()),
        profile_constant: profile_constant(u, v, eps),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditPoint<T> {
    pub t: T,
    pub phi: T,
    /// Centred-difference estimate of `dφ/dt`.
    pub dphi: T,
    /// `dφ/dt - (Aφ² - B)`; nonnegative wherever the fitted inequality holds.
    pub slack: T,
}

/// Result of checking `φ' ≥ Aφ² - B` along a sampled trajectory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RiccatiAudit<T> {
    /// Least-squares slope of `dφ/dt` against `φ²`; `None` when no quadratic growth is seen.
    pub a: Option<T>,
    /// Smallest `B ≥ 0` for which the inequality holds at every interior sample.
    pub b: Option<T>,
    pub points: Vec<AuditPoint<T>>,
    /// Earliest `t_k + T*(A, B, φ_k)` over the interior samples.
    pub blowup_bound: Option<T>,
    /// Smallest `ψ s0^{3-b}/φ²` seen, when `ψ` was supplied and some `φ > 0`.
    pub gap_min: Option<T>,
    /// `coefficient · gap_min · s0^{-(3-b)}`, when a coefficient was supplied.
    pub a_structural: Option<T>,
}

/// Fits and checks the Riccati inequality `dφ/dt ≥ Aφ² - B` on samples `(t, φ)`.
///
/// `psi` (same length as `phi`) enables the empirical gap constant; with a
/// `coefficient` (e.g. `αχ_1 n / (2 d_3)`) it also yields the structural `A`.
pub fn audit_inequality<T: Real>(
    times: &[T],
    phi: &[T],
    psi: Option<&[T]>,
    cfg: &MomentConfig<T>,
    coefficient: Option<T>,
) -> Result<RiccatiAudit<T>, FunctionalError> {
    let len = times.len().min(phi.len());
    if len < 3 {
        return Err(FunctionalError::TooFewSamples(len));
    }
    if times[..len].windows(2).any(|w| !(w[1] > w[0])) {
        return Err(FunctionalError::UnorderedTimes);
    }
    let mut points: Vec<AuditPoint<T>> = (1..len - 1)
        .map(|k| {
            let (h0, h1) = (times[k] - times[k - 1], times[k + 1] - times[k]);
            // second-order derivative on a nonuniform stencil
            let dphi = (h0 * h0 * (phi[k + 1] - phi[k]) + h1 * h1 * (phi[k] - phi[k - 1])) / (h0 * h1 * (h0 + h1));
            AuditPoint { t: times[k], phi: phi[k], dphi, slack: T::zero() }
        })
        .collect();

    let count = T::of_usize(points.len());
    let mean_x = points.iter().map(|p| p.phi * p.phi).sum::<T>() / count;
    let mean_y = points.iter().map(|p| p.dphi).sum::<T>() / count;
    let (mut sxy, mut sxx) = (T::zero(), T::zero());
    for p in &points {
        let dx = p.phi * p.phi - mean_x;
        sxy = sxy + dx * (p.dphi - mean_y);
        sxx = sxx + dx * dx;
    }
    let slope = if sxx > T::zero() { Some(sxy / sxx) } else { None };
    let a = slope.filter(|a| *a > T::zero() && a.is_finite());

    let mut b = None;
    let mut blowup_bound = None;
    if let Some(a) = a {
        let b_fit = points.iter().map(|p| a * p.phi * p.phi - p.dphi).fold(T::zero(), T::max);
        for p in points.iter_mut() {
            p.slack = p.dphi - (a * p.phi * p.phi - b_fit);
        }
        for p in &points {
            if let Some(t_star) = riccati_blowup_bound(a, b_fit, p.phi)? {
                let candidate = p.t + t_star;
                blowup_bound = Some(blowup_bound.map_or(candidate, |cur: T| cur.min(candidate)));
            }
        }
        b = Some(b_fit);
    }

    let gap_min = psi.map(|psi| {
        let scale = cfg.s0.powf(T::lit(3.0) - cfg.b);
        (0..len)
            .filter(|&k| phi[k] > T::zero())
            .map(|k| psi[k] * scale / (phi[k] * phi[k]))
            .fold(T::infinity(), T::min)
    })
    .filter(|g| g.is_finite());
    let a_structural = match (gap_min, coefficient) {
        (Some(g), Some(c)) => Some(c * g / cfg.s0.powf(T::lit(3.0) - cfg.b)),
        _ => None,
    };
    Ok(RiccatiAudit { a, b, points, blowup_bound, gap_min, a_structural })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn linear(n: usize, s_max: f64, pieces: usize) -> Accumulated<f64> {
        let nodes: Vec<f64> = (0..=pieces).map(|i| s_max * i as f64 / pieces as f64).collect();
        Accumulated::from_nodes(n, nodes.clone(), nodes).unwrap()
    }

    fn cfg(s0: f64, b: f64) -> MomentConfig<f64> {
        MomentConfig { s0, b, regime: MomentRegime::KellerSegel }
    }

    #[test]
    fn phi_of_identity() {
        let u = linear(3, 1.0, 7);
        assert_relative_eq!(phi(&u, &cfg(1.0, 0.5)).unwrap(), 4.0 / 15.0, max_relative = 1e-13);
        for (s0, b) in [(0.3f64, 0.5f64), (0.8, 1.5), (0.5, 1.0), (0.9, -0.3)] {
            let expected = s0.powf(3.0 - b) / ((2.0 - b) * (3.0 - b));
            let u = linear(5, 1.0, 13);
            assert_relative_eq!(phi(&u, &cfg(s0, b)).unwrap(), expected, max_relative = 1e-12);
            assert_relative_eq!(psi(&u, &cfg(s0, b)).unwrap(), expected, max_relative = 1e-12);
        }
    }

    #[test]
    fn zero_accumulation() {
        let z = Accumulated::from_nodes(3, vec![0.0, 0.5, 1.0], vec![0.0; 3]).unwrap();
        assert_eq!(phi(&z, &cfg(0.7, 1.5)).unwrap(), 0.0);
        assert_eq!(psi(&z, &cfg(0.7, 1.5)).unwrap(), 0.0);
        assert!(psi_phi_gap(&z, &cfg(0.7, 1.5)).unwrap().is_infinite());
    }

    #[test]
    fn psi_ignores_flat_tail() {
        // U = s on [0, 0.2], constant afterwards
        let u = Accumulated::from_nodes(3, vec![0.0, 0.2, 1.0], vec![0.0, 0.2, 0.2]).unwrap();
        let head = linear(3, 0.2, 1);
        let c = cfg(0.6, 0.5);
        let expected = 0.6 * 0.2f64.powf(1.5) / 1.5 - 0.2f64.powf(2.5) / 2.5;
        assert_relative_eq!(psi(&u, &c).unwrap(), expected, max_relative = 1e-13);
        // the identity on [0, 0.2] alone: ψ over [0, 0.2] equals the same integral
        let c_head = cfg(0.6, 0.5);
        assert_relative_eq!(psi(&head, &c_head).unwrap(), expected, max_relative = 1e-13);
    }

    #[test]
    fn gap_of_identity() {
        for b in [0.5, 1.5] {
            let u = linear(5, 1.0, 9);
            let g = psi_phi_gap(&u, &cfg(0.4, b)).unwrap();
            assert_relative_eq!(g, (2.0 - b) * (3.0 - b), max_relative = 1e-12);
        }
    }

    #[test]
    fn rejects_b_two() {
        let u = linear(3, 1.0, 3);
        assert!(matches!(phi(&u, &cfg(0.5, 2.0)), Err(FunctionalError::WeightExponent(_))));
        assert!(psi(&u, &cfg(0.5, 2.5)).is_err());
    }

    #[test]
    fn riccati_examples() {
        assert_eq!(riccati_blowup_bound(1.0, 0.0, 2.0).unwrap(), Some(0.5));
        assert_relative_eq!(riccati_blowup_bound(1.0, 1.0, 2.0).unwrap().unwrap(), 0.5 * 3f64.ln(), max_relative = 1e-14);
        assert_eq!(riccati_blowup_bound(4.0, 1.0, 0.5).unwrap(), None);
        assert_eq!(riccati_blowup_bound(1.0, 1.0, 0.5).unwrap(), None);
        assert!(riccati_blowup_bound(0.0, 1.0, 2.0).is_err());
        assert!(riccati_blowup_bound(-1.0, 1.0, 2.0).is_err());
        assert!(riccati_blowup_bound(1.0, -1.0, 2.0).is_err());
    }

    #[test]
    fn window_checks() {
        let ks = MomentConfig { s0: 0.1, b: 0.5, regime: MomentRegime::KellerSegel };
        assert!(ks.validate(3, 1.0).is_ok());
        assert!(MomentConfig { b: 0.2, ..ks }.validate(3, 1.0).is_err());
        assert!(MomentConfig { s0: 1.0, ..ks }.validate(3, 1.0).is_err());
        let jl = MomentConfig { s0: 0.1, b: 1.1, regime: MomentRegime::JaegerLuckhaus };
        assert!(jl.validate(5, 1.0).is_ok());
        assert!(MomentConfig { b: 1.3, ..jl }.validate(5, 1.0).is_err());
        assert!(jl.validate(4, 1.0).is_err());
    }

    #[test]
    fn exponent_report() {
        let mut p = ModelParams::unit(3);
        p.kappa1 = 1.1;
        p.kappa2 = 1.05;
        let c = cfg(0.1, 0.6);
        let (ok, lhs, rhs) = c.exponent_check(&p);
        assert!(ok);
        assert_relative_eq!(lhs, 0.2, max_relative = 1e-12);
        assert_eq!(rhs, 0.3);
    }

    #[test]
    fn synthetic_riccati_audit() {
        let big_t = 1.0;
        let times: Vec<f64> = (0..2000).map(|k| 0.9 * k as f64 / 1999.0).collect();
        let phis: Vec<f64> = times.iter().map(|t| 1.0 / (big_t - t)).collect();
        let audit = audit_inequality(&times, &phis, None, &cfg(0.5, 0.5), None).unwrap();
        assert_relative_eq!(audit.a.unwrap(), 1.0, max_relative = 1e-3);
        assert!(audit.b.unwrap() < 1e-2);
        assert_relative_eq!(audit.blowup_bound.unwrap(), big_t, max_relative = 1e-2);
        assert!(audit.points.iter().all(|p| p.slack >= -1e-12));
    }

    #[test]
    fn audit_needs_samples() {
        assert_eq!(
            audit_inequality(&[0.0, 1.0], &[1.0, 2.0], None, &cfg(0.5, 0.5), None).unwrap_err(),
            FunctionalError::TooFewSamples(2)
        );
        assert_eq!(
            audit_inequality(&[0.0, 1.0, 1.0], &[1.0, 2.0, 3.0], None, &cfg(0.5, 0.5), None).unwrap_err(),
            FunctionalError::UnorderedTimes
        );
    }

    #[test]
    fn flat_trajectory_has_no_bound() {
        let times: Vec<f64> = (0..50).map(|k| k as f64 * 0.1).collect();
        let phis = vec![2.0; 50];
        let audit = audit_inequality(&times, &phis, None, &cfg(0.5, 0.5), None).unwrap();
        assert!(audit.a.is_none());
        assert!(audit.blowup_bound.is_none());
    }
}
