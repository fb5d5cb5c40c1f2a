use serde::{Deserialize, Serialize};

use crate::config::{DangerKernelSpec, KernelSpec};
use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::par::{self, Execution};
use crate::stochastic::RandomStream;

use super::EmpiricalMeasure;

/// Axis-aligned rectangle `[x_min, x_max] × [y_min, y_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Rect {
    pub fn centered(center: Vec2, half_width: f64) -> Self {
        Self {
            x_min: center.x - half_width,
            x_max: center.x + half_width,
            y_min: center.y - half_width,
            y_max: center.y + half_width,
        }
    }

    pub fn contains(&self, p: Vec2) -> bool {
        (self.x_min..=self.x_max).contains(&p.x) && (self.y_min..=self.y_max).contains(&p.y)
    }
}

/// Cell-averaged density on a uniform `nx × ny` grid; `values[j·nx + i]` is
/// the value on column `i`, row `j`. Units are mass per area.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridDensity {
    pub domain: Rect,
    pub nx: usize,
    pub ny: usize,
    pub values: Vec<f64>,
}

impl GridDensity {
    pub fn zeros(domain: Rect, nx: usize, ny: usize) -> Self {
        Self {
            domain,
            nx,
            ny,
            values: vec![0.0; nx * ny],
        }
    }

    /// One-cell indicator of the cell containing `p`, normalised to mass 1.
    pub fn point_mass(domain: Rect, nx: usize, ny: usize, p: Vec2) -> Result<Self> {
        let mut g = Self::zeros(domain, nx, ny);
        let (i, j) = g
            .cell_of(p)
            .ok_or_else(|| Error::InvalidArgument(format!("point {p:?} outside grid domain")))?;
        g.values[j * nx + i] = 1.0 / g.cell_area();
        Ok(g)
    }

    /// Samples `f` at cell centres and normalises to unit mass.
    pub fn from_fn(domain: Rect, nx: usize, ny: usize, f: impl Fn(Vec2) -> f64) -> Result<Self> {
        let mut g = Self::zeros(domain, nx, ny);
        for j in 0..ny {
            for i in 0..nx {
                g.values[j * nx + i] = f(g.center(i, j)).max(0.0);
            }
        }
        let mass = g.mass();
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::InvalidArgument("density has no mass on the grid".into()));
        }
        g.values.iter_mut().for_each(|v| *v /= mass);
        Ok(g)
    }

    #[inline]
    pub fn dx(&self) -> f64 {
        (self.domain.x_max - self.domain.x_min) / self.nx as f64
    }

    #[inline]
    pub fn dy(&self) -> f64 {
        (self.domain.y_max - self.domain.y_min) / self.ny as f64
    }

    #[inline]
    pub fn cell_area(&self) -> f64 {
        self.dx() * self.dy()
    }

    #[inline]
    pub fn center_x(&self, i: usize) -> f64 {
        self.domain.x_min + (i as f64 + 0.5) * self.dx()
    }

    #[inline]
    pub fn center_y(&self, j: usize) -> f64 {
        self.domain.y_min + (j as f64 + 0.5) * self.dy()
    }

    #[inline]
    pub fn center(&self, i: usize, j: usize) -> Vec2 {
        Vec2::new(self.center_x(i), self.center_y(j))
    }

    pub fn cell_of(&self, p: Vec2) -> Option<(usize, usize)> {
        if !self.domain.contains(p) {
            return None;
        }
        let i = (((p.x - self.domain.x_min) / self.dx()) as usize).min(self.nx - 1);
        let j = (((p.y - self.domain.y_min) / self.dy()) as usize).min(self.ny - 1);
        Some((i, j))
    }

    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.cell_area()
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Mass held by the outermost ring of cells.
    pub fn boundary_mass(&self) -> f64 {
        let (nx, ny) = (self.nx, self.ny);
        let mut acc = 0.0;
        for j in 0..ny {
            for i in 0..nx {
                if i == 0 || j == 0 || i + 1 == nx || j + 1 == ny {
                    acc += self.values[j * nx + i];
                }
            }
        }
        acc * self.cell_area()
    }

    pub fn mean(&self) -> Vec2 {
        let mut acc = Vec2::ZERO;
        for j in 0..self.ny {
            for i in 0..self.nx {
                acc += self.center(i, j) * self.values[j * self.nx + i];
            }
        }
        acc * self.cell_area() / self.mass()
    }

    /// Per-coordinate variance of the piecewise-constant density (cell
    /// widths included: each cell contributes `Δ²/12` of internal spread).
    pub fn variance(&self) -> Vec2 {
        let m = self.mean();
        let mut acc = Vec2::ZERO;
        for j in 0..self.ny {
            for i in 0..self.nx {
                let d = self.center(i, j) - m;
                acc += Vec2::new(d.x * d.x, d.y * d.y) * self.values[j * self.nx + i];
            }
        }
        let (dx, dy) = (self.dx(), self.dy());
        acc * self.cell_area() / self.mass() + Vec2::new(dx * dx / 12.0, dy * dy / 12.0)
    }

    /// Midpoint quadrature of `∫K(x - y)ρ(y)dy`, factored along the axes
    /// (`K` is `w` times a product of one-dimensional Gaussians).
    pub fn kernel_at(&self, kernel: &KernelSpec, x: Vec2) -> Vec2 {
        let c = kernel.coefficient();
        if c == 0.0 {
            return Vec2::ZERO;
        }
        let nx = self.nx;
        let gx: Vec<f64> = (0..nx).map(|i| kernel.envelope_1d(x.x - self.center_x(i))).collect();
        let dxs: Vec<f64> = (0..nx).map(|i| x.x - self.center_x(i)).collect();
        let mut out = Vec2::ZERO;
        for j in 0..self.ny {
            let dyj = x.y - self.center_y(j);
            let gy = kernel.envelope_1d(dyj);
            if gy == 0.0 {
                continue;
            }
            let row = &self.values[j * nx..(j + 1) * nx];
            let mut a = 0.0;
            let mut b = 0.0;
            for i in 0..nx {
                let w = row[i] * gx[i];
                a += w;
                b += w * dxs[i];
            }
            out.x += b * gy;
            out.y += a * gy * dyj;
        }
        out * (c * self.cell_area())
    }

    /// Midpoint quadrature of `∫H(x - y)ρ(y)dy`.
    pub fn danger_at(&self, danger: &DangerKernelSpec, x: Vec2) -> f64 {
        if danger.amplitude == 0.0 {
            return 0.0;
        }
        let nx = self.nx;
        let gx: Vec<f64> = (0..nx).map(|i| danger.envelope_1d(x.x - self.center_x(i))).collect();
        let mut out = 0.0;
        for j in 0..self.ny {
            let gy = danger.envelope_1d(x.y - self.center_y(j));
            if gy == 0.0 {
                continue;
            }
            let row = &self.values[j * nx..(j + 1) * nx];
            let a: f64 = row.iter().zip(&gx).map(|(r, g)| r * g).sum();
            out += a * gy;
        }
        out * danger.amplitude * self.cell_area()
    }

    /// `n` i.i.d. draws: a cell by mass, then uniform inside it.
    pub fn sample(&self, n: usize, stream: &mut RandomStream) -> EmpiricalMeasure {
        let mut cdf = Vec::with_capacity(self.values.len());
        let mut acc = 0.0;
        for v in &self.values {
            acc += v.max(0.0);
            cdf.push(acc);
        }
        let total = acc;
        let (dx, dy) = (self.dx(), self.dy());
        let points = (0..n)
            .map(|_| {
                let u = stream.uniform() * total;
                let cell = cdf.partition_point(|&c| c <= u).min(cdf.len() - 1);
                let (i, j) = (cell % self.nx, cell / self.nx);
                Vec2::new(
                    self.domain.x_min + (i as f64 + stream.uniform()) * dx,
                    self.domain.y_min + (j as f64 + stream.uniform()) * dy,
                )
            })
            .collect();
        EmpiricalMeasure { points }
    }
}

/// Field `(1/n)·Σ_p K(c - p)` at every cell centre `c` of `grid`, as
/// `(x components, y components)` in the grid's cell order.
///
/// Each cell accumulates particles in ascending order, so the result does not
/// depend on the execution mode.
pub fn kernel_field_from_points(
    grid: &GridDensity,
    kernel: &KernelSpec,
    points: &[Vec2],
    exec: Execution,
) -> (Vec<f64>, Vec<f64>) {
    let (nx, ny) = (grid.nx, grid.ny);
    let cells = nx * ny;
    let c = kernel.coefficient();
    if c == 0.0 || points.is_empty() {
        return (vec![0.0; cells], vec![0.0; cells]);
    }
    let np = points.len();
    // gx[p·nx + i] = g(cx_i - p.x), ax = (cx_i - p.x)·gx; likewise along y.
    let mut gx = vec![0.0; np * nx];
    let mut ax = vec![0.0; np * nx];
    let mut gy = vec![0.0; np * ny];
    let mut by = vec![0.0; np * ny];
    for (p, pt) in points.iter().enumerate() {
        for i in 0..nx {
            let d = grid.center_x(i) - pt.x;
            let g = kernel.envelope_1d(d);
            gx[p * nx + i] = g;
            ax[p * nx + i] = d * g;
        }
        for j in 0..ny {
            let d = grid.center_y(j) - pt.y;
            let g = kernel.envelope_1d(d);
            gy[p * ny + j] = g;
            by[p * ny + j] = d * g;
        }
    }
    let scale = c / np as f64;
    let rows = par::map_range(exec, ny, |j| {
        let mut fx = vec![0.0; nx];
        let mut fy = vec![0.0; nx];
        for p in 0..np {
            let gyj = gy[p * ny + j];
            let byj = by[p * ny + j];
            if gyj == 0.0 {
                continue;
            }
            let axp = &ax[p * nx..(p + 1) * nx];
            let gxp = &gx[p * nx..(p + 1) * nx];
            for i in 0..nx {
                fx[i] += axp[i] * gyj;
                fy[i] += gxp[i] * byj;
            }
        }
        fx.iter_mut().for_each(|v| *v *= scale);
        fy.iter_mut().for_each(|v| *v *= scale);
        (fx, fy)
    });
    let mut fx = Vec::with_capacity(cells);
    let mut fy = Vec::with_capacity(cells);
    for (rx, ry) in rows {
        fx.extend(rx);
        fy.extend(ry);
    }
    (fx, fy)
}
