//! Cell-centred radial mesh on `(0, R)` and the mass-accumulation transform.
//!
//! Radial integrals are taken against the weight `r^{n-1}`; physical volumes carry
//! the extra factor `ω_n = n|B_1|`. In the variable `s = r^n` a cell-constant field
//! has an exactly piecewise-linear accumulation `U(s) = ∫_0^{s^{1/n}} ρ^{n-1} f dρ`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::{sphere_area, unit_ball_volume, Real};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("grid needs at least 2 cells, got {0}")]
    TooFewCells(usize),
    #[error("radius must be positive and finite")]
    Radius,
    #[error("dimension must be at least 1")]
    Dimension,
    #[error("refinement ratio must be >= 1, got {0}")]
    Refinement(f64),
    #[error("field has {got} values, grid has {expected} cells")]
    Length { expected: usize, got: usize },
    #[error("field value at cell {0} is not finite")]
    NonFinite(usize),
    #[error("s = {s} lies outside (0, {max})")]
    OutOfRange { s: f64, max: f64 },
    #[error("piecewise-linear data must start at s = 0 with value 0 and have increasing nodes")]
    BadNodes,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid<T> {
    n: usize,
    radius: T,
    face_radii: Vec<T>,
    cell_centers: Vec<T>,
    /// `|B_1| (r_{i+1}^n - r_i^n)`.
    shell_volumes: Vec<T>,
    /// `(r_{i+1}^n - r_i^n) / n`, the cell measure against `r^{n-1} dr`.
    radial_measure: Vec<T>,
    /// `s_k = r_k^n` at the faces.
    face_s: Vec<T>,
}

impl<T: Real> RadialGrid<T> {
    pub fn uniform(n: usize, radius: T, cells: usize) -> Result<Self, GridError> {
        Self::geometric(n, radius, cells, T::one())
    }

    /// Cell widths growing by `ratio` from the origin outwards (`ratio = 1` is uniform).
    pub fn geometric(n: usize, radius: T, cells: usize, ratio: T) -> Result<Self, GridError> {
        if cells < 2 {
            return Err(GridError::TooFewCells(cells));
        }
        if !(radius > T::zero()) || !radius.is_finite() {
            return Err(GridError::Radius);
        }
        if n == 0 {
            return Err(GridError::Dimension);
        }
        if !(ratio >= T::one()) || !ratio.is_finite() {
            return Err(GridError::Refinement(ratio.as_f64()));
        }
        let mut widths: Vec<T> = Vec::with_capacity(cells);
        let mut w = T::one();
        for _ in 0..cells {
            widths.push(w);
            w = w * ratio;
        }
        let total: T = widths.iter().copied().sum();
        let mut faces = Vec::with_capacity(cells + 1);
        faces.push(T::zero());
        let mut acc = T::zero();
        for w in &widths {
            acc = acc + *w;
            faces.push(radius * acc / total);
        }
        faces[cells] = radius;
        Ok(Self::from_faces(n, faces))
    }

    fn from_faces(n: usize, face_radii: Vec<T>) -> Self {
        let half = T::lit(0.5);
        let nn = T::of_usize(n);
        let ball = unit_ball_volume::<T>(n);
        let face_s: Vec<T> = face_radii.iter().map(|r| r.powi(n as i32)).collect();
        let cell_centers = face_radii.windows(2).map(|w| half * (w[0] + w[1])).collect();
        let ds: Vec<T> = face_s.windows(2).map(|w| w[1] - w[0]).collect();
        let shell_volumes = ds.iter().map(|&d| ball * d).collect();
        let radial_measure = ds.iter().map(|&d| d / nn).collect();
        let radius = *face_radii.last().expect("non-empty faces");
        Self { n, radius, face_radii, cell_centers, shell_volumes, radial_measure, face_s }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn radius(&self) -> T {
        self.radius
    }

    pub fn cells(&self) -> usize {
        self.cell_centers.len()
    }

    pub fn face_radii(&self) -> &[T] {
        &self.face_radii
    }

    pub fn cell_centers(&self) -> &[T] {
        &self.cell_centers
    }

    pub fn shell_volumes(&self) -> &[T] {
        &self.shell_volumes
    }

    pub fn radial_measure(&self) -> &[T] {
        &self.radial_measure
    }

    pub fn face_s(&self) -> &[T] {
        &self.face_s
    }

    /// `R^n`, the right end of the `s` interval.
    pub fn s_max(&self) -> T {
        self.face_s[self.cells()]
    }

    /// `|Ω| = |B_1| R^n`.
    pub fn domain_volume(&self) -> T {
        unit_ball_volume::<T>(self.n) * self.s_max()
    }

    /// Face area factor `r_k^{n-1}` (the `ω_n` is left out, as in `radial_measure`).
    pub fn face_weight(&self, k: usize) -> T {
        self.face_radii[k].powi(self.n as i32 - 1)
    }

    /// Volume of each cell inside `B_ρ(0)`.
    pub fn volumes_within(&self, rho: T) -> Vec<T> {
        let ball = unit_ball_volume::<T>(self.n);
        let n = self.n as i32;
        (0..self.cells())
            .map(|i| {
                let (lo, hi) = (self.face_radii[i], self.face_radii[i + 1]);
                if lo >= rho {
                    T::zero()
                } else if hi <= rho {
                    self.shell_volumes[i]
                } else {
                    ball * (rho.powi(n) - lo.powi(n))
                }
            })
            .collect()
    }

    pub fn omega(&self) -> T {
        sphere_area::<T>(self.n)
    }

    pub fn zeros(self: &Arc<Self>) -> RadialField<T> {
        RadialField { grid: Arc::clone(self), values: vec![T::zero(); self.cells()] }
    }

    pub fn field(self: &Arc<Self>, values: Vec<T>) -> Result<RadialField<T>, GridError> {
        RadialField::new(Arc::clone(self), values)
    }

    /// Samples `f` at the cell centres.
    pub fn sample(self: &Arc<Self>, f: impl Fn(T) -> T) -> RadialField<T> {
        let values = self.cell_centers.iter().map(|&r| f(r)).collect();
        RadialField { grid: Arc::clone(self), values }
    }
}

/// Cell averages of a radial function.
#[derive(Clone, Debug, PartialEq)]
pub struct RadialField<T> {
    grid: Arc<RadialGrid<T>>,
    pub values: Vec<T>,
}

impl<T: Real> RadialField<T> {
    pub fn new(grid: Arc<RadialGrid<T>>, values: Vec<T>) -> Result<Self, GridError> {
        if values.len() != grid.cells() {
            return Err(GridError::Length { expected: grid.cells(), got: values.len() });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(GridError::NonFinite(i));
        }
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &Arc<RadialGrid<T>> {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `∫_Ω f dx`.
    pub fn mass(&self) -> T {
        mass(self)
    }

    /// `∫_{B_ρ(0)} f dx`, with partial cells counted by their covered volume.
    pub fn mass_within(&self, rho: T) -> T {
        self.values.iter().zip(self.grid.volumes_within(rho)).map(|(v, w)| *v * w).sum()
    }

    pub fn sup(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    pub fn min_value(&self) -> T {
        self.values.iter().copied().fold(T::infinity(), T::min)
    }

    /// `(∫ |f|^p dx)^{1/p}`.
    pub fn lp_norm(&self, p: T) -> T {
        let sum: T = self.values.iter().zip(&self.grid.shell_volumes).map(|(v, w)| v.abs().powf(p) * *w).sum();
        sum.powf(T::one() / p)
    }

    pub fn is_nonincreasing(&self) -> bool {
        self.values.windows(2).all(|w| w[1] <= w[0])
    }

    pub fn accumulate(&self) -> Accumulated<T> {
        accumulate(self)
    }
}

/// `∫_Ω f dx = Σ f_i |shell_i|`.
pub fn mass<T: Real>(f: &RadialField<T>) -> T {
    f.values.iter().zip(&f.grid.shell_volumes).map(|(v, w)| *v * *w).sum()
}

/// Continuous piecewise-linear function of `s ∈ [0, s_max]` with `U(0) = 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Accumulated<T> {
    n: usize,
    nodes: Vec<T>,
    values: Vec<T>,
}

/// Builds `U(s) = ∫_0^{s^{1/n}} ρ^{n-1} f dρ`, exact for cell-constant `f`.
pub fn accumulate<T: Real>(f: &RadialField<T>) -> Accumulated<T> {
    let g = &f.grid;
    let mut values = Vec::with_capacity(g.cells() + 1);
    let mut acc = T::zero();
    values.push(acc);
    for (v, w) in f.values.iter().zip(&g.radial_measure) {
        acc = acc + *v * *w;
        values.push(acc);
    }
    Accumulated { n: g.n, nodes: g.face_s.clone(), values }
}

impl<T: Real> Accumulated<T> {
    /// Arbitrary piecewise-linear data; nodes must start at 0, increase strictly,
    /// and the value at 0 must be 0.
    pub fn from_nodes(n: usize, nodes: Vec<T>, values: Vec<T>) -> Result<Self, GridError> {
        let ok = nodes.len() >= 2
            && nodes.len() == values.len()
            && nodes[0] == T::zero()
            && values[0] == T::zero()
            && nodes.windows(2).all(|w| w[1] > w[0])
            && values.iter().all(|v| v.is_finite());
        if !ok {
            return Err(GridError::BadNodes);
        }
        Ok(Self { n, nodes, values })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn s_max(&self) -> T {
        *self.nodes.last().expect("non-empty")
    }

    /// `U(s_max)`; times `ω_n` this is the mass of the field.
    pub fn total(&self) -> T {
        *self.values.last().expect("non-empty")
    }

    /// Slope on each linear piece.
    pub fn slopes(&self) -> Vec<T> {
        self.nodes
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(s, u)| (u[1] - u[0]) / (s[1] - s[0]))
            .collect()
    }

    fn locate(&self, s: T) -> usize {
        // index of the piece [nodes[i], nodes[i+1]] containing s
        let idx = self.nodes.partition_point(|&x| x <= s);
        idx.saturating_sub(1).min(self.nodes.len() - 2)
    }

    /// `U(s)`, clamped to the end values outside `[0, s_max]`.
    pub fn eval(&self, s: T) -> T {
        if s <= T::zero() {
            return T::zero();
        }
        if s >= self.s_max() {
            return self.total();
        }
        let i = self.locate(s);
        let (s0, s1) = (self.nodes[i], self.nodes[i + 1]);
        let (u0, u1) = (self.values[i], self.values[i + 1]);
        u0 + (u1 - u0) * (s - s0) / (s1 - s0)
    }

    /// `U_s(s)`; equals `f/n` in the enclosing cell, with the mean of both
    /// neighbours at an interior node.
    pub fn slope(&self, s: T) -> Result<T, GridError> {
        if !(s > T::zero() && s < self.s_max()) {
            return Err(GridError::OutOfRange { s: s.as_f64(), max: self.s_max().as_f64() });
        }
        let slopes = self.slopes();
        let i = self.locate(s);
        if s == self.nodes[i] && i > 0 {
            return Ok(T::lit(0.5) * (slopes[i - 1] + slopes[i]));
        }
        Ok(slopes[i])
    }

    /// Largest increase of `U_s` across an interior node; `≤ 0` iff `U` is concave.
    ///
    /// For an accumulated field this is `max_i (f_{i+1} - f_i) / n`, i.e. the
    /// second difference of `U` integrated across the dual cell.
    pub fn concavity_margin(&self) -> T {
        let slopes = self.slopes();
        slopes.windows(2).map(|w| w[1] - w[0]).fold(T::neg_infinity(), T::max)
    }
}
