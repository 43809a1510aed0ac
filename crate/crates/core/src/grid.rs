//! Periodic rectangular lattice with Fourier-collocation calculus.
//!
//! Sites are stored x-fastest: `site = iy * nx + ix`. Axis 0 is x, axis 1
//! is y. Every spectral operation treats the box as periodic.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

pub const MIN_POINTS: usize = 16;

struct Plan {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

struct Inner {
    lengths: Vec<f64>,
    points: Vec<usize>,
    plans: Vec<Plan>,
}

/// A 1D or 2D periodic box. Cheap to clone; FFT plans are shared.
#[derive(Clone)]
pub struct Grid {
    inner: Arc<Inner>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("lengths", &self.inner.lengths)
            .field("points", &self.inner.points)
            .finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
            || (self.inner.lengths == other.inner.lengths
                && self.inner.points == other.inner.points)
    }
}

impl Grid {
    pub fn new(lengths: &[f64], points: &[usize]) -> Result<Self> {
        if lengths.is_empty() || lengths.len() > 2 {
            return Err(Error::InvalidGrid(format!(
                "dims must be 1 or 2, got {}",
                lengths.len()
            )));
        }
        if lengths.len() != points.len() {
            return Err(Error::InvalidGrid(
                "lengths and points differ in dimensionality".into(),
            ));
        }
        for (&l, &n) in lengths.iter().zip(points) {
            if !(l.is_finite() && l > 0.0) {
                return Err(Error::InvalidGrid(format!("box length {l} must be finite and > 0")));
            }
            if n < MIN_POINTS || !n.is_power_of_two() {
                return Err(Error::InvalidGrid(format!(
                    "point count {n} must be a power of two and >= {MIN_POINTS}"
                )));
            }
        }
        let mut planner = FftPlanner::new();
        let plans = points
            .iter()
            .map(|&n| Plan {
                forward: planner.plan_fft_forward(n),
                inverse: planner.plan_fft_inverse(n),
            })
            .collect();
        Ok(Self {
            inner: Arc::new(Inner {
                lengths: lengths.to_vec(),
                points: points.to_vec(),
                plans,
            }),
        })
    }

    pub fn new_1d(length: f64, points: usize) -> Result<Self> {
        Self::new(&[length], &[points])
    }

    pub fn new_2d(lengths: [f64; 2], points: [usize; 2]) -> Result<Self> {
        Self::new(&lengths, &points)
    }

    pub fn dims(&self) -> usize {
        self.inner.lengths.len()
    }

    pub fn lengths(&self) -> &[f64] {
        &self.inner.lengths
    }

    pub fn points(&self) -> &[usize] {
        &self.inner.points
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.inner.lengths[axis] / self.inner.points[axis] as f64
    }

    /// Total number of lattice sites.
    pub fn len(&self) -> usize {
        self.inner.points.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Volume element h_x (times h_y in 2D).
    pub fn cell_volume(&self) -> f64 {
        (0..self.dims()).map(|a| self.spacing(a)).product()
    }

    /// Lattice index of `site` along `axis`.
    pub fn index_along(&self, site: usize, axis: usize) -> usize {
        match axis {
            0 => site % self.inner.points[0],
            _ => site / self.inner.points[0],
        }
    }

    pub fn coordinate(&self, site: usize, axis: usize) -> f64 {
        self.index_along(site, axis) as f64 * self.spacing(axis)
    }

    /// Coordinates of every site along `axis`.
    pub fn coordinates(&self, axis: usize) -> Vec<f64> {
        (0..self.len()).map(|s| self.coordinate(s, axis)).collect()
    }

    pub(crate) fn check_axis(&self, axis: usize) -> Result<()> {
        if axis >= self.dims() {
            Err(Error::AxisOutOfRange {
                axis,
                dims: self.dims(),
            })
        } else {
            Ok(())
        }
    }

    /// Angular wavenumber of Fourier index `j` on `axis`, and whether it is
    /// the Nyquist mode.
    fn wavenumber(&self, axis: usize, j: usize) -> (f64, bool) {
        let n = self.inner.points[axis];
        let base = 2.0 * PI / self.inner.lengths[axis];
        if j < n / 2 {
            (base * j as f64, false)
        } else if j == n / 2 {
            (base * j as f64, true)
        } else {
            (base * (j as f64 - n as f64), false)
        }
    }

    fn spectral_multiplier(&self, axis: usize, j: usize, order: usize) -> Complex64 {
        let (k, nyquist) = self.wavenumber(axis, j);
        match order {
            1 if nyquist => Complex64::new(0.0, 0.0),
            1 => Complex64::new(0.0, k),
            _ => Complex64::new(-k * k, 0.0),
        }
    }

    /// Applies `f(j)` to every Fourier coefficient along `axis`, line by line.
    fn transform_axis<F>(&self, data: &mut [Complex64], axis: usize, multiplier: F)
    where
        F: Fn(usize) -> Complex64,
    {
        let plan = &self.inner.plans[axis];
        let n = self.inner.points[axis];
        let scale = 1.0 / n as f64;
        let weights: Vec<Complex64> = (0..n).map(|j| multiplier(j) * scale).collect();
        if axis == 0 {
            for line in data.chunks_exact_mut(n) {
                plan.forward.process(line);
                for (c, w) in line.iter_mut().zip(&weights) {
                    *c *= w;
                }
                plan.inverse.process(line);
            }
        } else {
            let nx = self.inner.points[0];
            let mut line = vec![Complex64::new(0.0, 0.0); n];
            for ix in 0..nx {
                for (iy, c) in line.iter_mut().enumerate() {
                    *c = data[iy * nx + ix];
                }
                plan.forward.process(&mut line);
                for (c, w) in line.iter_mut().zip(&weights) {
                    *c *= w;
                }
                plan.inverse.process(&mut line);
                for (iy, c) in line.iter().enumerate() {
                    data[iy * nx + ix] = *c;
                }
            }
        }
    }

    pub(crate) fn deriv_complex_slice(
        &self,
        values: &[Complex64],
        axis: usize,
        order: usize,
    ) -> Result<Vec<Complex64>> {
        self.check_axis(axis)?;
        if order != 1 && order != 2 {
            return Err(Error::UnsupportedOrder { order });
        }
        let mut data = values.to_vec();
        self.transform_axis(&mut data, axis, |j| self.spectral_multiplier(axis, j, order));
        Ok(data)
    }

    pub(crate) fn deriv_real_slice(
        &self,
        values: &[f64],
        axis: usize,
        order: usize,
    ) -> Result<Vec<f64>> {
        let data: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        Ok(self
            .deriv_complex_slice(&data, axis, order)?
            .into_iter()
            .map(|c| c.re)
            .collect())
    }

    /// Rectangle-rule quadrature with a fixed summation order.
    pub(crate) fn integrate_slice(&self, values: &[f64]) -> f64 {
        values.iter().sum::<f64>() * self.cell_volume()
    }

    /// Exact free propagator `exp(-i hbar |k|^2 dt / 2m)` applied in place.
    pub(crate) fn free_propagate(&self, psi: &mut [Complex64], hbar: f64, mass: f64, dt: f64) {
        let coeff = hbar * dt / (2.0 * mass);
        for axis in 0..self.dims() {
            self.transform_axis(psi, axis, |j| {
                let (k, _) = self.wavenumber(axis, j);
                Complex64::from_polar(1.0, -coeff * k * k)
            });
        }
    }

    /// Periodic antiderivative of one line of samples along `axis`.
    /// Returns `(periodic_part, slope)` with `periodic_part[0] == 0`.
    pub(crate) fn antiderivative_line(&self, line: &[f64], axis: usize) -> (Vec<f64>, f64) {
        let n = self.inner.points[axis];
        debug_assert_eq!(line.len(), n);
        let plan = &self.inner.plans[axis];
        let mut data: Vec<Complex64> = line.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        plan.forward.process(&mut data);
        let slope = data[0].re / n as f64;
        for (j, c) in data.iter_mut().enumerate() {
            let (k, nyquist) = self.wavenumber(axis, j);
            if j == 0 || nyquist {
                *c = Complex64::new(0.0, 0.0);
            } else {
                *c /= Complex64::new(0.0, k) * n as f64;
            }
        }
        plan.inverse.process(&mut data);
        let origin = data[0].re;
        (data.iter().map(|c| c.re - origin).collect(), slope)
    }
}

/// Scalar types that can live in a [`Field`].
pub trait FieldScalar: Copy + Send + Sync + fmt::Debug + PartialEq + 'static {
    fn to_complex(self) -> Complex64;
    fn from_complex(c: Complex64) -> Self;
}

impl FieldScalar for f64 {
    fn to_complex(self) -> Complex64 {
        Complex64::new(self, 0.0)
    }
    fn from_complex(c: Complex64) -> Self {
        c.re
    }
}

impl FieldScalar for Complex64 {
    fn to_complex(self) -> Complex64 {
        self
    }
    fn from_complex(c: Complex64) -> Self {
        c
    }
}

/// Sampled values, one per lattice site.
#[derive(Clone, Debug, PartialEq)]
pub struct Field<T> {
    grid: Grid,
    values: Vec<T>,
}

pub type RealField = Field<f64>;
pub type ComplexField = Field<Complex64>;

impl<T: FieldScalar> Field<T> {
    pub fn new(grid: &Grid, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "field has {} values, grid has {} sites",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self {
            grid: grid.clone(),
            values,
        })
    }

    /// Samples `f` at every site; `f` receives the site's coordinates.
    pub fn from_fn(grid: &Grid, f: impl Fn(&[f64]) -> T) -> Self {
        let mut coords = vec![0.0; grid.dims()];
        let values = (0..grid.len())
            .map(|site| {
                for (axis, c) in coords.iter_mut().enumerate() {
                    *c = grid.coordinate(site, axis);
                }
                f(&coords)
            })
            .collect();
        Self {
            grid: grid.clone(),
            values,
        }
    }

    pub fn constant(grid: &Grid, value: T) -> Self {
        Self {
            grid: grid.clone(),
            values: vec![value; grid.len()],
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn map<U: FieldScalar>(&self, f: impl Fn(T) -> U) -> Field<U> {
        Field {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map<U: FieldScalar, V: FieldScalar>(
        &self,
        other: &Field<U>,
        f: impl Fn(T, U) -> V,
    ) -> Result<Field<V>> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(Field {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }
}

impl RealField {
    pub fn max_abs(&self) -> f64 {
        max_abs(&self.values)
    }
}

pub(crate) fn max_abs(values: &[f64]) -> f64 {
    values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

/// Spectral derivative of order 1 or 2 along `axis`.
pub fn deriv<T: FieldScalar>(f: &Field<T>, axis: usize, order: usize) -> Result<Field<T>> {
    let data: Vec<Complex64> = f.values.iter().map(|v| v.to_complex()).collect();
    let out = f.grid.deriv_complex_slice(&data, axis, order)?;
    Ok(Field {
        grid: f.grid.clone(),
        values: out.into_iter().map(T::from_complex).collect(),
    })
}

/// `h^n * sum(f)`.
pub fn integrate(f: &RealField) -> f64 {
    f.grid.integrate_slice(&f.values)
}

/// Antiderivative along the single axis of a 1D field, split as
/// `F(x) = periodic_part(x) + secular_slope * x` with `F(0) = 0`.
pub fn cumulative_integral(f: &RealField, axis: usize) -> Result<(RealField, f64)> {
    f.grid.check_axis(axis)?;
    if f.grid.dims() != 1 {
        return Err(Error::InvalidGrid(
            "cumulative_integral operates on 1D fields".into(),
        ));
    }
    let (periodic, slope) = f.grid.antiderivative_line(&f.values, axis);
    Ok((
        Field {
            grid: f.grid.clone(),
            values: periodic,
        },
        slope,
    ))
}
