//! The signal equation `0 = d_3 Δw + αu + βv - h(u, v, w)` on the radial grid.
//!
//! Conservative finite volumes: the flux through face `k` is
//! `d_3 r_k^{n-1} (w_k - w_{k-1}) / (c_k - c_{k-1})`, zero at the origin (the
//! face weight vanishes) and at `r = R` (Neumann).

use thiserror::Error;

use crate::grid::{GridError, RadialField, RadialGrid};
use crate::model::{ModelParams, SignalKind};
use crate::scalar::Real;
use crate::tridiag;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EllipticError {
    #[error("u and v live on different grids")]
    GridMismatch,
    #[error("grid dimension {grid} does not match model dimension {model}")]
    Dimension { grid: usize, model: usize },
    #[error("density is negative at cell {0}")]
    NegativeDensity(usize),
    #[error("tridiagonal solve failed (zero pivot)")]
    SolveFailed,
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// `αu + βv` cellwise.
fn production<T: Real>(p: &ModelParams<T>, u: &RadialField<T>, v: &RadialField<T>) -> Vec<T> {
    u.values.iter().zip(&v.values).map(|(a, b)| p.alpha * *a + p.beta * *b).collect()
}

/// `M̄ = (1/|Ω|) ∫ (αu + βv) dx`.
pub fn mean_production<T: Real>(p: &ModelParams<T>, u: &RadialField<T>, v: &RadialField<T>) -> T {
    weighted_mean(u.grid(), &production(p, u, v))
}

fn weighted_mean<T: Real>(g: &RadialGrid<T>, values: &[T]) -> T {
    let total: T = values.iter().zip(g.radial_measure()).map(|(a, w)| *a * *w).sum();
    total / g.s_max() * T::of_usize(g.dim())
}

fn check_inputs<T: Real>(
    p: &ModelParams<T>,
    u: &RadialField<T>,
    v: &RadialField<T>,
) -> Result<(), EllipticError> {
    if u.grid() != v.grid() {
        return Err(EllipticError::GridMismatch);
    }
    if u.grid().dim() != p.n {
        return Err(EllipticError::Dimension { grid: u.grid().dim(), model: p.n });
    }
    for f in [u, v] {
        if let Some(i) = f.values.iter().position(|x| *x < T::zero()) {
            return Err(EllipticError::NegativeDensity(i));
        }
    }
    Ok(())
}

/// `d_3 r_k^{n-1} / (c_k - c_{k-1})` for interior faces `k = 1..m-1`; index 0 unused.
fn face_conductance<T: Real>(g: &RadialGrid<T>, d: T) -> Vec<T> {
    let c = g.cell_centers();
    let mut out = vec![T::zero(); g.cells()];
    for k in 1..g.cells() {
        out[k] = d * g.face_weight(k) / (c[k] - c[k - 1]);
    }
    out
}

/// Solves for `w` given `u` and `v`.
///
/// Keller–Segel: a diagonally dominant tridiagonal system. Jäger–Luckhaus: the
/// singular Neumann problem is integrated face by face from the origin after
/// removing the mean of the source, then the solution is shifted to zero mean.
pub fn solve_w<T: Real>(
    p: &ModelParams<T>,
    u: &RadialField<T>,
    v: &RadialField<T>,
) -> Result<RadialField<T>, EllipticError> {
    check_inputs(p, u, v)?;
    let g = u.grid();
    let source = production(p, u, v);
    let values = match p.signal {
        SignalKind::KellerSegel { gamma } => solve_keller_segel(g, p.d3, gamma, &source)?,
        SignalKind::JaegerLuckhaus => solve_jaeger_luckhaus(g, p.d3, &source),
    };
    Ok(RadialField::new(g.clone(), values)?)
}

fn solve_keller_segel<T: Real>(g: &RadialGrid<T>, d3: T, gamma: T, source: &[T]) -> Result<Vec<T>, EllipticError> {
    let m = g.cells();
    let cond = face_conductance(g, d3);
    let meas = g.radial_measure();
    let mut lower = vec![T::zero(); m];
    let mut diag = vec![T::zero(); m];
    let mut upper = vec![T::zero(); m];
    let mut rhs: Vec<T> = source.iter().zip(meas).map(|(f, w)| *f * *w).collect();
    for i in 0..m {
        let left = if i > 0 { cond[i] } else { T::zero() };
        let right = if i + 1 < m { cond[i + 1] } else { T::zero() };
        lower[i] = -left;
        upper[i] = -right;
        diag[i] = left + right + gamma * meas[i];
    }
    tridiag::solve_in_place(&lower, &diag, &upper, &mut rhs).ok_or(EllipticError::SolveFailed)?;
    Ok(rhs)
}

fn solve_jaeger_luckhaus<T: Real>(g: &RadialGrid<T>, d3: T, source: &[T]) -> Vec<T> {
    let m = g.cells();
    let mean = weighted_mean(g, source);
    let cond = face_conductance(g, d3);
    let meas = g.radial_measure();
    let mut w = vec![T::zero(); m];
    // Flux balance on the ball B_{r_k}: d3 r_k^{n-1} w_r = -Σ_{j<k} (f_j - mean) meas_j.
    let mut enclosed = T::zero();
    for k in 1..m {
        enclosed = enclosed + (source[k - 1] - mean) * meas[k - 1];
        w[k] = w[k - 1] - enclosed / cond[k];
    }
    let shift = weighted_mean(g, &w);
    w.iter_mut().for_each(|x| *x = *x - shift);
    w
}

fn signal_sink<T: Real>(p: &ModelParams<T>, u: &RadialField<T>, v: &RadialField<T>, w: &RadialField<T>) -> Vec<T> {
    match p.signal {
        SignalKind::KellerSegel { gamma } => w.values.iter().map(|x| gamma * *x).collect(),
        SignalKind::JaegerLuckhaus => vec![mean_production(p, u, v); w.len()],
    }
}

/// Max-norm residual of the discrete equation `d_3 Δ_h w + αu + βv - h`.
pub fn residual_w<T: Real>(p: &ModelParams<T>, u: &RadialField<T>, v: &RadialField<T>, w: &RadialField<T>) -> T {
    let g = u.grid();
    let m = g.cells();
    let cond = face_conductance(g, p.d3);
    let meas = g.radial_measure();
    let source = production(p, u, v);
    let sink = signal_sink(p, u, v, w);
    let wv = &w.values;
    let flux = |k: usize| if k == 0 || k == m { T::zero() } else { cond[k] * (wv[k] - wv[k - 1]) };
    (0..m)
        .map(|i| ((flux(i + 1) - flux(i)) / meas[i] + source[i] - sink[i]).abs())
        .fold(T::zero(), T::max)
}

/// `r^{n-1} w_r` at every face, from the integrated equation rather than by
/// differencing `w`:
///
/// - Keller–Segel: `-(α/d_3) U - (β/d_3) V + (γ/d_3) W`
/// - Jäger–Luckhaus: `-(α/d_3) U - (β/d_3) V + M̄ s / (n d_3)`
///
/// with `U, V, W` the accumulations at `s = r^n`.
pub fn flux_identity<T: Real>(p: &ModelParams<T>, u: &RadialField<T>, v: &RadialField<T>, w: &RadialField<T>) -> Vec<T> {
    let g = u.grid();
    let uu = u.accumulate();
    let vv = v.accumulate();
    let produced = uu.values().iter().zip(vv.values()).map(|(a, b)| (p.alpha * *a + p.beta * *b) / p.d3);
    let sink: Vec<T> = match p.signal {
        SignalKind::KellerSegel { gamma } => w.accumulate().values().iter().map(|x| gamma * *x / p.d3).collect(),
        SignalKind::JaegerLuckhaus => {
            let scale = mean_production(p, u, v) / (T::of_usize(g.dim()) * p.d3);
            g.face_s().iter().map(|s| scale * *s).collect()
        }
    };
    let mut out: Vec<T> = produced.zip(sink).map(|(a, b)| b - a).collect();
    // symmetry at the origin and no-flux at r = R hold exactly in the continuum
    out[0] = T::zero();
    let last = out.len() - 1;
    out[last] = T::zero();
    out
}

/// `w_r` at every face via [`flux_identity`]; zero at the origin.
pub fn flux_wr<T: Real>(p: &ModelParams<T>, u: &RadialField<T>, v: &RadialField<T>, w: &RadialField<T>) -> Vec<T> {
    let g = u.grid();
    flux_identity(p, u, v, w)
        .into_iter()
        .enumerate()
        .map(|(k, f)| if k == 0 { T::zero() } else { f / g.face_weight(k) })
        .collect()
}

/// Bound on `|r^{n-1} w_r|` valid for `t ≤ 1` when `∫(u_0 + v_0) = M_0`:
/// `2 (α e^{μ_1} + β e^{μ_2}) M_0 / (d_3 ω_n)`.
pub fn flux_bound<T: Real>(p: &ModelParams<T>, initial_mass: T) -> T {
    let omega = crate::scalar::sphere_area::<T>(p.n);
    T::lit(2.0) * (p.alpha * p.mu1.exp() + p.beta * p.mu2.exp()) * initial_mass / (p.d3 * omega)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    fn setup(n: usize, m: usize, signal: SignalKind<f64>) -> (ModelParams<f64>, Arc<RadialGrid<f64>>) {
        let mut p = ModelParams::unit(n);
        p.signal = signal;
        (p, Arc::new(RadialGrid::uniform(n, 1.0, m).unwrap()))
    }

    #[test]
    fn ks_constant_balance() {
        let (p, g) = setup(3, 50, SignalKind::KellerSegel { gamma: 1.0 });
        let one = g.sample(|_| 1.0);
        let w = solve_w(&p, &one, &one).unwrap();
        assert!(w.values.iter().all(|x| (x - 2.0).abs() < 1e-12));
        assert!(residual_w(&p, &one, &one, &w) < 1e-10);
    }

    #[test]
    fn jl_constant_source_gives_zero() {
        let (p, g) = setup(5, 50, SignalKind::JaegerLuckhaus);
        let u = g.sample(|_| 0.7);
        let v = g.sample(|_| 1.3);
        let w = solve_w(&p, &u, &v).unwrap();
        assert!(w.sup() < 1e-13);
        assert!(flux_wr(&p, &u, &v, &w).iter().all(|x| x.abs() < 1e-12));
    }

    #[test]
    fn zero_fields() {
        for signal in [SignalKind::KellerSegel { gamma: 2.0 }, SignalKind::JaegerLuckhaus] {
            let (p, g) = setup(3, 20, signal);
            let z = g.zeros();
            let w = solve_w(&p, &z, &z).unwrap();
            assert_eq!(w.sup(), 0.0);
            assert!(flux_wr(&p, &z, &z, &w).iter().all(|x| *x == 0.0));
            assert_eq!(residual_w(&p, &z, &z, &w), 0.0);
        }
    }

    #[test]
    fn ks_uniform_shift_residual_is_gamma() {
        let gamma = 2.5;
        let (p, g) = setup(3, 40, SignalKind::KellerSegel { gamma });
        let u = g.sample(|r| 1.0 + (-4.0 * r * r).exp());
        let v = g.sample(|r| 0.5 * r);
        let mut w = solve_w(&p, &u, &v).unwrap();
        w.values.iter_mut().for_each(|x| *x += 1.0);
        let res = residual_w(&p, &u, &v, &w);
        assert!((res - gamma).abs() < 1e-9, "residual {res}");
    }

    #[test]
    fn ks_integral_balance() {
        let gamma = 0.7;
        let (p, g) = setup(4, 80, SignalKind::KellerSegel { gamma });
        let u = g.sample(|r| 3.0 * (-10.0 * r * r).exp());
        let v = g.sample(|r| 1.0 + r);
        let w = solve_w(&p, &u, &v).unwrap();
        let lhs = p.alpha * u.mass() + p.beta * v.mass();
        let rhs = gamma * w.mass();
        assert!(((lhs - rhs) / lhs).abs() < 1e-10);
    }

    #[test]
    fn rejects_negative_density() {
        let (p, g) = setup(3, 10, SignalKind::JaegerLuckhaus);
        let mut u = g.sample(|_| 1.0);
        u.values[3] = -1e-3;
        assert_eq!(solve_w(&p, &u, &g.zeros()), Err(EllipticError::NegativeDensity(3)));
    }
}
