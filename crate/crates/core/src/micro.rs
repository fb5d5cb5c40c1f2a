//! Euler–Maruyama integration of the microscopic ship system.

use serde::{Deserialize, Serialize};

use crate::config::ModelConfig;
use crate::control::PiecewiseConstantControl;
use crate::dynamics::{self, DensityNorm};
use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::par::Execution;
use crate::stochastic::{self, EntityClass, RandomStream, StreamKey, STREAM_ALGORITHM};

/// Positions of all ships at one time node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemState {
    pub t: f64,
    /// Commercial ships.
    pub x: Vec<Vec2>,
    /// Pirates.
    pub y: Vec<Vec2>,
    /// Guards.
    pub z: Vec<Vec2>,
}

impl SystemState {
    fn check_finite(&self, step: usize) -> Result<()> {
        for (name, pts) in [("commercial", &self.x), ("pirate", &self.y), ("guard", &self.z)] {
            if let Some(i) = dynamics::first_non_finite(pts) {
                return Err(Error::Diverged {
                    step,
                    t: self.t,
                    entity: format!("{name} {i}"),
                });
            }
        }
        Ok(())
    }
}

/// States on the uniform grid `t_k = k·dt`, `k = 0..=K`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryBundle {
    pub dt: f64,
    pub states: Vec<SystemState>,
    pub master_seed: u64,
    pub replication: u64,
    pub stream_algorithm: String,
    pub warnings: Vec<String>,
}

impl TrajectoryBundle {
    pub fn final_state(&self) -> &SystemState {
        self.states.last().expect("bundle holds at least the initial state")
    }

    pub fn guard_path(&self) -> Vec<Vec<Vec2>> {
        self.states.iter().map(|s| s.z.clone()).collect()
    }
}

/// Stream keys driving pirate `m` in replication `replication`.
pub fn pirate_keys(master_seed: u64, m: usize, replication: u64) -> (StreamKey, StreamKey) {
    (
        StreamKey::new(master_seed, EntityClass::PirateInit, m as u64, replication),
        StreamKey::new(master_seed, EntityClass::PirateBm, m as u64, replication),
    )
}

/// Initial pirate positions and their Brownian streams, one per key pair.
pub fn pirate_streams(
    cfg: &ModelConfig,
    keys: impl IntoIterator<Item = (StreamKey, StreamKey)>,
) -> (Vec<Vec2>, Vec<RandomStream>) {
    keys.into_iter()
        .map(|(init, bm)| {
            let mut s = stochastic::stream(init);
            (stochastic::sample_initial(&cfg.initial.pirates, &mut s), stochastic::stream(bm))
        })
        .unzip()
}

pub fn initial_state(cfg: &ModelConfig, y0: Vec<Vec2>) -> SystemState {
    SystemState {
        t: 0.0,
        x: cfg.commercial_positions(),
        y: y0,
        z: cfg.initial.guards.clone(),
    }
}

/// Drift of commercial ship `n`.
pub fn drift_commercial(n: usize, state: &SystemState, cfg: &ModelConfig) -> Vec2 {
    let density = dynamics::congestion_density(n, &state.x, DensityNorm::Ships, cfg);
    let push = dynamics::kernel_mean(&cfg.kernels.cp, state.x[n], &state.y);
    dynamics::commercial_velocity(cfg, state.x[n], cfg.congestion.velocity(density), push)
}

/// Deterministic drift of pirate `m`.
pub fn drift_pirate(m: usize, state: &SystemState, cfg: &ModelConfig) -> Vec2 {
    dynamics::pirate_velocity(cfg, state.y[m], &state.z, &state.x)
}

/// Drift of guard `l` under the control value `u_t`.
pub fn drift_guard(l: usize, state: &SystemState, u_t: &[Vec2], cfg: &ModelConfig) -> Vec2 {
    dynamics::guard_velocity(cfg, l, &state.z, u_t)
}

/// One Euler–Maruyama step: explicit Euler on every drift plus
/// `√(2κ)·ΔW_m` on each pirate. `streams[m]` feeds pirate `m`.
pub fn step(
    state: &SystemState,
    dt: f64,
    u_t: &[Vec2],
    streams: &mut [RandomStream],
    cfg: &ModelConfig,
    exec: Execution,
) -> Result<SystemState> {
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument(format!("dt must be > 0, got {dt}")));
    }
    let speeds = dynamics::speed_factors(&state.x, DensityNorm::Ships, cfg, exec);
    let x: Vec<Vec2> = state
        .x
        .iter()
        .zip(&speeds)
        .map(|(xn, &v)| {
            let push = dynamics::kernel_mean(&cfg.kernels.cp, *xn, &state.y);
            *xn + dynamics::commercial_velocity(cfg, *xn, v, push) * dt
        })
        .collect();
    let noise = (2.0 * cfg.kappa).sqrt();
    let sqrt_dt = dt.sqrt();
    let y: Vec<Vec2> = state
        .y
        .iter()
        .zip(streams.iter_mut())
        .map(|(ym, s)| {
            let b = dynamics::pirate_velocity(cfg, *ym, &state.z, &state.x);
            *ym + b * dt + s.increment(sqrt_dt) * noise
        })
        .collect();
    let z = dynamics::advance_guards(cfg, &state.z, u_t, dt);
    let next = SystemState {
        t: state.t + dt,
        x,
        y,
        z,
    };
    Ok(next)
}

/// Integrates replication 0 of the microscopic system.
pub fn simulate(cfg: &ModelConfig, control: &PiecewiseConstantControl, master_seed: u64) -> Result<TrajectoryBundle> {
    simulate_replication(cfg, control, master_seed, 0)
}

pub fn simulate_replication(
    cfg: &ModelConfig,
    control: &PiecewiseConstantControl,
    master_seed: u64,
    replication: u64,
) -> Result<TrajectoryBundle> {
    let mut states = Vec::with_capacity(cfg.numerics.steps + 1);
    let warnings = integrate(cfg, control, master_seed, replication, |s| {
        states.push(s.clone());
    })?;
    Ok(TrajectoryBundle {
        dt: cfg.dt(),
        states,
        master_seed,
        replication,
        stream_algorithm: STREAM_ALGORITHM.to_string(),
        warnings,
    })
}

/// Runs one replication and hands every state (including `t = 0`) to
/// `observe` without storing the trajectory. Returns the run's warnings.
pub fn integrate(
    cfg: &ModelConfig,
    control: &PiecewiseConstantControl,
    master_seed: u64,
    replication: u64,
    mut observe: impl FnMut(&SystemState),
) -> Result<Vec<String>> {
    let steps = cfg.numerics.steps;
    control.check_compatible(cfg.horizon, steps, cfg.n_guards)?;
    let dt = cfg.dt();
    let (y0, mut streams) = pirate_streams(
        cfg,
        (0..cfg.n_pirates).map(|m| pirate_keys(master_seed, m, replication)),
    );
    let mut state = initial_state(cfg, y0);
    state.check_finite(0)?;
    observe(&state);
    for k in 0..steps {
        let mut next = step(&state, dt, control.at_step(k, steps), &mut streams, cfg, Execution::Sequential)?;
        next.t = (k + 1) as f64 * dt;
        next.check_finite(k + 1)?;
        observe(&next);
        state = next;
    }
    Ok(cfg.warnings())
}

/// `(1/(NM))·Σ_n Σ_m H^d(X_n - Y_m)`.
pub fn contact_rate(state: &SystemState, cfg: &ModelConfig) -> f64 {
    contact_rate_between(&state.x, &state.y, cfg)
}

pub fn contact_rate_between(ships: &[Vec2], pirates: &[Vec2], cfg: &ModelConfig) -> f64 {
    if cfg.danger.amplitude == 0.0 || ships.is_empty() || pirates.is_empty() {
        return 0.0;
    }
    let mut acc = 0.0;
    for x in ships {
        for y in pirates {
            acc += cfg.danger.eval(*x - *y);
        }
    }
    acc / (ships.len() * pirates.len()) as f64
}
