use serde::Serialize;

use super::ModelConfig;

/// Closed-form Lipschitz, growth and confinement constants of a configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConstantsReport {
    pub kernel_cp_lipschitz: f64,
    pub kernel_pg_lipschitz: f64,
    pub kernel_pc_lipschitz: f64,
    pub kernel_gg_lipschitz: f64,
    pub kernel_cp_sup: f64,
    pub kernel_pg_sup: f64,
    pub kernel_pc_sup: f64,
    pub kernel_gg_sup: f64,
    pub danger_lipschitz: f64,
    pub eta_lipschitz: f64,
    pub velocity_lipschitz: f64,
    pub route_lipschitz: f64,
    pub route_growth: f64,
    /// `sup|K^gg| + √2·u_max`, a bound on every guard speed.
    pub guard_speed: f64,
    /// `v_max·(C_r + sup|K^cp|)`: `|dX/dt| ≤ C·(1 + |X|)`.
    pub commercial_growth: f64,
    /// `sup|K^pg| + sup|K^pc|`, a bound on the pirate drift.
    pub pirate_drift_bound: f64,
    /// Largest initial guard distance from the origin.
    pub guard_initial_radius: f64,
    /// `R₀`.
    pub commercial_initial_radius: f64,
    /// `R_Z = (|Z⁰| + C_Z·T)·e^{C_Z·T}`.
    pub radius_guard: f64,
    /// `R_X = (R₀ + C_X·T)·e^{C_X·T}`.
    pub radius_commercial: f64,
    /// Crude bound on the Lipschitz constant of the full drift, used for the
    /// time-step policy.
    pub drift_lipschitz: f64,
}

pub fn lipschitz_constants(cfg: &ModelConfig) -> ConstantsReport {
    let k = &cfg.kernels;
    let t = cfg.horizon;
    let route_lipschitz = cfg.route.lipschitz();
    let route_growth = cfg.route.growth();
    let eta_lipschitz = cfg.congestion.eta_lipschitz(route_lipschitz);
    let v_max = cfg.congestion.v_max;

    let guard_speed = k.gg.sup_norm() + std::f64::consts::SQRT_2 * cfg.control_set.u_max;
    let commercial_growth = v_max * (route_growth + k.cp.sup_norm());
    let guard_initial_radius = cfg
        .initial
        .guards
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    let commercial_initial_radius = cfg.initial.commercial.radius_bound();

    let gronwall = |r0: f64, c: f64| (r0 + c * t) * (c * t).exp();

    // v is v_max-Lipschitz on [0,1]; the density moves by at most 2·L_η per
    // unit displacement; the bracket is bounded near the ships by C_r + sup|K^cp|.
    let commercial_lip = v_max * (route_lipschitz + k.cp.lipschitz())
        + v_max * 2.0 * eta_lipschitz * (route_growth + k.cp.sup_norm());
    let pirate_lip = k.pg.lipschitz() + k.pc.lipschitz();
    let guard_lip = 2.0 * k.gg.lipschitz();

    ConstantsReport {
        kernel_cp_lipschitz: k.cp.lipschitz(),
        kernel_pg_lipschitz: k.pg.lipschitz(),
        kernel_pc_lipschitz: k.pc.lipschitz(),
        kernel_gg_lipschitz: k.gg.lipschitz(),
        kernel_cp_sup: k.cp.sup_norm(),
        kernel_pg_sup: k.pg.sup_norm(),
        kernel_pc_sup: k.pc.sup_norm(),
        kernel_gg_sup: k.gg.sup_norm(),
        danger_lipschitz: cfg.danger.lipschitz(),
        eta_lipschitz,
        velocity_lipschitz: v_max,
        route_lipschitz,
        route_growth,
        guard_speed,
        commercial_growth,
        pirate_drift_bound: k.pg.sup_norm() + k.pc.sup_norm(),
        guard_initial_radius,
        commercial_initial_radius,
        radius_guard: gronwall(guard_initial_radius, guard_speed),
        radius_commercial: gronwall(commercial_initial_radius, commercial_growth),
        drift_lipschitz: commercial_lip.max(pirate_lip).max(guard_lip),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::KernelSpec;
    use crate::geometry::Vec2;

    #[test]
    fn zero_data_gives_zero_guard_radius() {
        let mut cfg = ModelConfig::default_scenario();
        cfg.kernels.gg = KernelSpec::zero();
        cfg.control_set.u_max = 0.0;
        cfg.initial.guards = vec![Vec2::ZERO; cfg.n_guards];
        assert_eq!(lipschitz_constants(&cfg).radius_guard, 0.0);
    }

    #[test]
    fn constants_scale_with_amplitude() {
        let mut cfg = ModelConfig::default_scenario();
        let a = lipschitz_constants(&cfg).kernel_cp_lipschitz;
        cfg.kernels.cp.amplitude *= 2.0;
        assert_eq!(lipschitz_constants(&cfg).kernel_cp_lipschitz, 2.0 * a);
    }
}
