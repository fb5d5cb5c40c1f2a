use serde::{Deserialize, Serialize};

use crate::config::ModelConfig;
use crate::control::PiecewiseConstantControl;
use crate::dynamics::{self, DensityNorm};
use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::measure::{GridDensity, Rect};
use crate::par::{self, Execution};

use super::fokker_planck::{fokker_planck_advance, pirate_drift_field};
use super::{auto_domain, initial_density, CommercialParticles, LawSeries};

/// Largest boundary-ring mass tolerated before the domain is enlarged.
pub const BOUNDARY_MASS_LIMIT: f64 = 1e-8;
const MAX_EXPANSIONS: usize = 3;
const EXPANSION_FACTOR: f64 = 1.5;

/// Pirate grid resolution; `domain: None` sizes the box automatically.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    pub domain: Option<Rect>,
}

impl GridSpec {
    pub fn from_config(cfg: &ModelConfig) -> Self {
        Self {
            nx: cfg.numerics.grid_nx,
            ny: cfg.numerics.grid_ny,
            domain: None,
        }
    }
}

/// Commercial points co-integrated with a Fokker–Planck pirate density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoupledRun {
    pub dt: f64,
    pub times: Vec<f64>,
    /// Commercial ships or particles at every time node.
    pub commercial: Vec<Vec<Vec2>>,
    pub law: Vec<GridDensity>,
    pub guards: Vec<Vec<Vec2>>,
    /// Mean danger between the commercial measure and the pirate density.
    pub contact: Vec<f64>,
    pub domain: Rect,
    pub expansions: usize,
    pub max_boundary_mass: f64,
    pub max_mass_drift: f64,
    pub min_density: f64,
    pub substeps: usize,
    pub warnings: Vec<String>,
}

impl CoupledRun {
    /// Left-endpoint quadrature of the contact rate over `[0, T]`.
    pub fn contact_integral(&self) -> f64 {
        let k = self.contact.len() - 1;
        self.contact[..k].iter().sum::<f64>() * self.dt
    }

    pub fn law_series(&self) -> LawSeries {
        LawSeries::Grid {
            times: self.times.clone(),
            slices: self.law.clone(),
        }
    }

    pub fn particles(&self) -> CommercialParticles {
        CommercialParticles {
            times: self.times.clone(),
            points: self.commercial.clone(),
        }
    }

    pub fn final_law(&self) -> &GridDensity {
        self.law.last().expect("run holds the initial slice")
    }
}

fn advance_commercial(
    points: &[Vec2],
    rho: &GridDensity,
    cfg: &ModelConfig,
    norm: DensityNorm,
    dt: f64,
    exec: Execution,
) -> Vec<Vec2> {
    let speeds = dynamics::speed_factors(points, norm, cfg, exec);
    par::map_range(exec, points.len(), |i| {
        let x = points[i];
        let push = rho.kernel_at(&cfg.kernels.cp, x);
        x + dynamics::commercial_velocity(cfg, x, speeds[i], push) * dt
    })
}

/// One explicit Euler step of the particle flow
/// `dx/dt = v(η ∗ μ^c)(x)·(r(x) + K^cp ∗ ρ(x))`.
pub fn transport_step(
    particles: &[Vec2],
    pirate_law: &GridDensity,
    cfg: &ModelConfig,
    dt: f64,
    exec: Execution,
) -> Result<Vec<Vec2>> {
    let next = advance_commercial(particles, pirate_law, cfg, DensityNorm::Particles, dt, exec);
    if let Some(i) = dynamics::first_non_finite(&next) {
        return Err(Error::Diverged { step: 0, t: f64::NAN, entity: format!("particle {i}") });
    }
    Ok(next)
}

fn contact_with(rho: &GridDensity, points: &[Vec2], cfg: &ModelConfig, exec: Execution) -> f64 {
    if cfg.danger.amplitude == 0.0 {
        return 0.0;
    }
    let per = par::map_slice(exec, points, |x| rho.danger_at(&cfg.danger, *x));
    per.iter().sum::<f64>() / points.len() as f64
}

fn run_once(
    cfg: &ModelConfig,
    control: &PiecewiseConstantControl,
    x0: &[Vec2],
    norm: DensityNorm,
    domain: Rect,
    grid: GridSpec,
) -> Result<CoupledRun> {
    let steps = cfg.numerics.steps;
    control.check_compatible(cfg.horizon, steps, cfg.n_guards)?;
    let exec = cfg.numerics.execution;
    let dt = cfg.dt();
    let mut rho = initial_density(&cfg.initial.pirates, domain, grid.nx, grid.ny)?;
    let mut x = x0.to_vec();
    let mut z = cfg.initial.guards.clone();

    let mut run = CoupledRun {
        dt,
        times: Vec::with_capacity(steps + 1),
        commercial: Vec::with_capacity(steps + 1),
        law: Vec::with_capacity(steps + 1),
        guards: Vec::with_capacity(steps + 1),
        contact: Vec::with_capacity(steps + 1),
        domain,
        expansions: 0,
        max_boundary_mass: 0.0,
        max_mass_drift: 0.0,
        min_density: f64::INFINITY,
        substeps: 0,
        warnings: cfg.warnings(),
    };
    for k in 0..=steps {
        let t = k as f64 * dt;
        run.max_boundary_mass = run.max_boundary_mass.max(rho.boundary_mass());
        run.max_mass_drift = run.max_mass_drift.max((rho.mass() - 1.0).abs());
        run.min_density = run.min_density.min(rho.min_value());
        run.contact.push(contact_with(&rho, &x, cfg, exec));
        if k == steps {
            run.times.push(t);
            run.commercial.push(x);
            run.guards.push(z);
            run.law.push(rho);
            break;
        }
        let u = control.at_step(k, steps);
        let drift = pirate_drift_field(&rho, &z, &x, cfg, exec);
        let (next_rho, sub) = fokker_planck_advance(&rho, &drift, cfg.kappa, dt, exec)?;
        run.substeps += sub;
        let next_x = advance_commercial(&x, &rho, cfg, norm, dt, exec);
        let next_z = dynamics::advance_guards(cfg, &z, u, dt);
        for (name, pts) in [("commercial", &next_x), ("guard", &next_z)] {
            if let Some(i) = dynamics::first_non_finite(pts) {
                return Err(Error::Diverged { step: k + 1, t: t + dt, entity: format!("{name} {i}") });
            }
        }
        if next_rho.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Diverged { step: k + 1, t: t + dt, entity: "pirate density".into() });
        }
        run.times.push(t);
        run.commercial.push(std::mem::replace(&mut x, next_x));
        run.guards.push(std::mem::replace(&mut z, next_z));
        run.law.push(std::mem::replace(&mut rho, next_rho));
    }
    Ok(run)
}

/// Co-integrates commercial points `x0` (ships or particles, per `norm`) with
/// the pirate Fokker–Planck density. With an automatic domain the box grows
/// and the run restarts while the boundary ring holds more than
/// [`BOUNDARY_MASS_LIMIT`].
pub fn simulate_coupled(
    cfg: &ModelConfig,
    control: &PiecewiseConstantControl,
    x0: &[Vec2],
    norm: DensityNorm,
    grid: GridSpec,
) -> Result<CoupledRun> {
    let mut domain = grid.domain.unwrap_or_else(|| auto_domain(cfg));
    let mut expansions = 0;
    loop {
        let mut run = run_once(cfg, control, x0, norm, domain, grid)?;
        run.expansions = expansions;
        if run.max_boundary_mass <= BOUNDARY_MASS_LIMIT {
            return Ok(run);
        }
        if grid.domain.is_some() || expansions == MAX_EXPANSIONS {
            run.warnings.push(format!(
                "boundary mass {:.3e} exceeds {:.0e}; truncation error may be visible",
                run.max_boundary_mass, BOUNDARY_MASS_LIMIT
            ));
            return Ok(run);
        }
        let c = Vec2::new(0.5 * (domain.x_min + domain.x_max), 0.5 * (domain.y_min + domain.y_max));
        let half = 0.5 * (domain.x_max - domain.x_min).max(domain.y_max - domain.y_min);
        domain = Rect::centered(c, half * EXPANSION_FACTOR);
        expansions += 1;
        log::info!("expanding pirate grid domain to half-width {:.3}", half * EXPANSION_FACTOR);
    }
}

/// Grid backend of the averaged model: the `N` ships with the pirate law
/// solved on the grid.
pub fn simulate_averaged_grid(cfg: &ModelConfig, control: &PiecewiseConstantControl) -> Result<CoupledRun> {
    simulate_coupled(cfg, control, &cfg.commercial_positions(), DensityNorm::Ships, GridSpec::from_config(cfg))
}

/// Mean-field system: `n_part` commercial particles drawn from the initial
/// commercial layout, transported by the flow map, against the pirate grid.
pub fn simulate_meanfield(
    cfg: &ModelConfig,
    control: &PiecewiseConstantControl,
    n_part: usize,
    grid: GridSpec,
) -> Result<CoupledRun> {
    if n_part == 0 {
        return Err(Error::InvalidArgument("simulate_meanfield needs n_part >= 1".into()));
    }
    let x0 = cfg.initial.commercial.positions(n_part);
    simulate_coupled(cfg, control, &x0, DensityNorm::Particles, grid)
}
