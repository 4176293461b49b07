use std::f64::consts::PI;

use crate::error::{invalid, Result};

/// Uniform periodic grid on [x_min, x_max) in internal length units.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid1D {
    n_points: usize,
    x_min: f64,
    x_max: f64,
    dx: f64,
}

impl Grid1D {
    pub fn new(n_points: usize, x_min: f64, x_max: f64) -> Result<Self> {
        if !n_points.is_power_of_two() || n_points < 4 {
            return Err(invalid(format!(
                "n_points must be a power of two >= 4, got {n_points}"
            )));
        }
        if !(x_min < x_max && x_min.is_finite() && x_max.is_finite()) {
            return Err(invalid(format!(
                "need x_min < x_max, got [{x_min}, {x_max}]"
            )));
        }
        Ok(Self {
            n_points,
            x_min,
            x_max,
            dx: (x_max - x_min) / n_points as f64,
        })
    }

    /// Grid on [−half_width, half_width).
    pub fn symmetric(n_points: usize, half_width: f64) -> Result<Self> {
        Self::new(n_points, -half_width, half_width)
    }

    pub fn len(&self) -> usize {
        self.n_points
    }

    pub fn is_empty(&self) -> bool {
        self.n_points == 0
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx
    }

    pub fn positions(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| self.x(i)).collect()
    }

    /// Wavenumbers in FFT order: 0, dk, …, (n/2 − 1)dk, −(n/2)dk, …, −dk.
    pub fn wavenumbers(&self) -> Vec<f64> {
        let n = self.n_points;
        let dk = 2.0 * PI / (self.x_max - self.x_min);
        (0..n)
            .map(|i| {
                if i < n / 2 {
                    i as f64 * dk
                } else {
                    (i as f64 - n as f64) * dk
                }
            })
            .collect()
    }

    pub fn k_nyquist(&self) -> f64 {
        PI / self.dx
    }

    /// dx ≤ min(ξ, λ_min)/5.
    pub fn resolves(&self, xi: f64, lambda_min: f64) -> bool {
        self.dx <= xi.min(lambda_min) / 5.0
    }

    /// Centered sub-grid of `n_sub` points sharing this grid's nodes, plus
    /// the offset of its first node. Requires a grid symmetric about 0.
    pub(crate) fn centered_subgrid(&self, n_sub: usize) -> Result<(Grid1D, usize)> {
        if n_sub > self.n_points || !n_sub.is_power_of_two() {
            return Err(invalid(
                "sub-grid size must be a power of two not exceeding the grid",
            ));
        }
        let offset = self.n_points / 2 - n_sub / 2;
        let x0 = self.x(offset);
        let sub = Grid1D {
            n_points: n_sub,
            x_min: x0,
            x_max: x0 + n_sub as f64 * self.dx,
            dx: self.dx,
        };
        Ok((sub, offset))
    }
}
