//! Interaction kernels, the danger kernel, the congestion law and the route
//! field. Every evaluator is a pure function of an immutable spec.

use serde::{Deserialize, Serialize};

use crate::geometry::Vec2;

/// `e^{-1/2}`: the peak of `r e^{-r²/2}` over `r ≥ 0`, reached at `r = 1`.
pub(crate) const INV_SQRT_E: f64 = 0.606_530_659_712_633_4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelFamily {
    RadialGaussianPush,
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelSign {
    /// `+1`: the kernel points along its argument.
    Repulsive,
    /// `-1`: the kernel points against its argument.
    Attractive,
}

impl KernelSign {
    pub fn factor(self) -> f64 {
        match self {
            KernelSign::Repulsive => 1.0,
            KernelSign::Attractive => -1.0,
        }
    }
}

/// Pairwise interaction kernel `K(w) = ±a·w·exp(-|w|²/(2σ²))`.
///
/// The amplitude is a velocity per unit distance, the length scale a distance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSpec {
    pub family: KernelFamily,
    pub amplitude: f64,
    pub length_scale: f64,
    pub sign: KernelSign,
}

impl KernelSpec {
    pub fn gaussian(amplitude: f64, length_scale: f64, sign: KernelSign) -> Self {
        Self {
            family: KernelFamily::RadialGaussianPush,
            amplitude,
            length_scale,
            sign,
        }
    }

    pub fn zero() -> Self {
        Self {
            family: KernelFamily::Zero,
            amplitude: 0.0,
            length_scale: 1.0,
            sign: KernelSign::Repulsive,
        }
    }

    /// Signed amplitude; zero for the `zero` family.
    #[inline]
    pub fn coefficient(&self) -> f64 {
        match self.family {
            KernelFamily::RadialGaussianPush => self.sign.factor() * self.amplitude,
            KernelFamily::Zero => 0.0,
        }
    }

    /// Whether the kernel vanishes identically.
    pub fn is_null(&self) -> bool {
        self.coefficient() == 0.0
    }

    /// `exp(-d²/(2σ²))`, the one-dimensional factor of the Gaussian envelope.
    #[inline]
    pub fn envelope_1d(&self, d: f64) -> f64 {
        (-d * d / (2.0 * self.length_scale * self.length_scale)).exp()
    }

    #[inline]
    pub fn eval(&self, w: Vec2) -> Vec2 {
        let c = self.coefficient();
        if c == 0.0 {
            return Vec2::ZERO;
        }
        let s = self.length_scale;
        w * (c * (-w.norm_sq() / (2.0 * s * s)).exp())
    }

    /// Global Lipschitz constant. The Jacobian is `g·(I - w wᵀ/σ²)` with
    /// `g = e^{-|w|²/2σ²}`; its operator norm peaks at `w = 0` with value 1.
    pub fn lipschitz(&self) -> f64 {
        self.coefficient().abs()
    }

    /// `sup |K| = a·σ·e^{-1/2}`, attained on the circle `|w| = σ`.
    pub fn sup_norm(&self) -> f64 {
        self.coefficient().abs() * self.length_scale * INV_SQRT_E
    }

    pub(crate) fn validate(&self, key: &str, out: &mut Vec<crate::error::Violation>) {
        if !(self.amplitude >= 0.0 && self.amplitude.is_finite()) {
            out.push(violation(format!("{key}.amplitude"), "must be finite and >= 0"));
        }
        if !(self.length_scale > 0.0 && self.length_scale.is_finite()) {
            out.push(violation(format!("{key}.length_scale"), "must be finite and > 0"));
        }
    }
}

pub fn eval_kernel(spec: &KernelSpec, w: Vec2) -> Vec2 {
    spec.eval(w)
}

/// Contact-counting kernel `H(w) = amplitude·exp(-|w|²/(2σ_d²))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DangerKernelSpec {
    pub amplitude: f64,
    pub radius: f64,
}

impl DangerKernelSpec {
    #[inline]
    pub fn eval(&self, w: Vec2) -> f64 {
        if self.amplitude == 0.0 {
            return 0.0;
        }
        self.amplitude * (-w.norm_sq() / (2.0 * self.radius * self.radius)).exp()
    }

    #[inline]
    pub fn envelope_1d(&self, d: f64) -> f64 {
        (-d * d / (2.0 * self.radius * self.radius)).exp()
    }

    /// `amplitude·e^{-1/2}/σ_d`, the peak slope of the Gaussian profile.
    pub fn lipschitz(&self) -> f64 {
        self.amplitude * INV_SQRT_E / self.radius
    }

    pub(crate) fn validate(&self, key: &str, out: &mut Vec<crate::error::Violation>) {
        if !(self.amplitude >= 0.0 && self.amplitude.is_finite()) {
            out.push(violation(format!("{key}.amplitude"), "must be finite and >= 0"));
        }
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            out.push(violation(format!("{key}.radius"), "must be finite and > 0"));
        }
    }
}

pub fn eval_danger(spec: &DangerKernelSpec, w: Vec2) -> f64 {
    spec.eval(w)
}

/// Congestion counting kernel and the speed law.
///
/// `η(x, w) = |w|²/(|w|²+ε²) · exp(-|w - δ·r(x)|²/(2σ_η²))` and
/// `v(d) = v_max·(1 - clamp(d, 0, 1))`. With `δ = 0` the kernel is isotropic
/// and ignores `x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CongestionSpec {
    pub eta_scale: f64,
    pub eta_core: f64,
    pub v_max: f64,
    #[serde(default)]
    pub route_offset: f64,
}

impl CongestionSpec {
    /// `η` with the forward direction `r(x)` already evaluated.
    #[inline]
    pub fn eta(&self, w: Vec2, forward: Vec2) -> f64 {
        let r2 = w.norm_sq();
        if r2 == 0.0 {
            return 0.0;
        }
        let shifted = if self.route_offset == 0.0 {
            r2
        } else {
            (w - forward * self.route_offset).norm_sq()
        };
        let s = self.eta_scale;
        r2 / (r2 + self.eta_core * self.eta_core) * (-shifted / (2.0 * s * s)).exp()
    }

    #[inline]
    pub fn velocity(&self, density: f64) -> f64 {
        let d = if density.is_nan() { 1.0 } else { density.clamp(0.0, 1.0) };
        self.v_max * (1.0 - d)
    }

    /// Bound on `|∇_w η|`: `3√3/(8ε)` from the rational factor plus
    /// `e^{-1/2}/σ_η` from the envelope, plus the `x`-dependence through the
    /// shifted envelope when `δ > 0`.
    pub fn eta_lipschitz(&self, route_lipschitz: f64) -> f64 {
        let rational = 3.0 * 3f64.sqrt() / (8.0 * self.eta_core);
        let envelope = INV_SQRT_E / self.eta_scale;
        rational + envelope * (1.0 + self.route_offset * route_lipschitz)
    }

    pub(crate) fn validate(&self, key: &str, out: &mut Vec<crate::error::Violation>) {
        let checks = [
            ("eta_scale", self.eta_scale > 0.0),
            ("eta_core", self.eta_core > 0.0),
            ("v_max", self.v_max > 0.0),
            ("route_offset", self.route_offset >= 0.0),
        ];
        let values = [self.eta_scale, self.eta_core, self.v_max, self.route_offset];
        for ((name, ok), v) in checks.into_iter().zip(values) {
            if !ok || !v.is_finite() {
                out.push(violation(format!("{key}.{name}"), "out of range"));
            }
        }
    }
}

pub fn eval_eta(spec: &CongestionSpec, route: &RouteFieldSpec, x: Vec2, w: Vec2) -> f64 {
    let forward = if spec.route_offset == 0.0 {
        Vec2::ZERO
    } else {
        route.eval(x)
    };
    spec.eta(w, forward)
}

pub fn eval_velocity(spec: &CongestionSpec, density: f64) -> f64 {
    spec.velocity(density)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RouteFamily {
    Constant,
    Channel,
}

/// Safe-route vector field.
///
/// `channel`: `r(x) = d + k·(I - d dᵀ)(c - x)`, a unit heading plus a pull
/// back toward the lane centre line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RouteFieldSpec {
    pub family: RouteFamily,
    pub direction: Vec2,
    #[serde(default)]
    pub lane_center: Vec2,
    #[serde(default)]
    pub lane_stiffness: f64,
}

impl RouteFieldSpec {
    pub fn constant(direction: Vec2) -> Self {
        Self {
            family: RouteFamily::Constant,
            direction,
            lane_center: Vec2::ZERO,
            lane_stiffness: 0.0,
        }
    }

    #[inline]
    pub fn eval(&self, x: Vec2) -> Vec2 {
        match self.family {
            RouteFamily::Constant => self.direction,
            RouteFamily::Channel => {
                let d = self.direction;
                let off = self.lane_center - x;
                let ortho = off - d * off.dot(d);
                d + ortho * self.lane_stiffness
            }
        }
    }

    pub fn lipschitz(&self) -> f64 {
        match self.family {
            RouteFamily::Constant => 0.0,
            RouteFamily::Channel => self.lane_stiffness,
        }
    }

    /// `C` with `|r(x)| ≤ C·(1 + |x|)`.
    pub fn growth(&self) -> f64 {
        match self.family {
            RouteFamily::Constant => self.direction.norm(),
            RouteFamily::Channel => {
                let k = self.lane_stiffness;
                (1.0 + k * self.lane_center.norm()).max(k)
            }
        }
    }

    pub(crate) fn validate(&self, key: &str, out: &mut Vec<crate::error::Violation>) {
        if !self.direction.is_finite() || (self.direction.norm() - 1.0).abs() > 1e-9 {
            out.push(violation(format!("{key}.direction"), "must be a unit vector"));
        }
        if !self.lane_center.is_finite() {
            out.push(violation(format!("{key}.lane_center"), "must be finite"));
        }
        if !(self.lane_stiffness >= 0.0 && self.lane_stiffness.is_finite()) {
            out.push(violation(format!("{key}.lane_stiffness"), "must be finite and >= 0"));
        }
    }
}

pub fn eval_route(spec: &RouteFieldSpec, x: Vec2) -> Vec2 {
    spec.eval(x)
}

pub(crate) fn violation(key: impl Into<String>, message: &str) -> crate::error::Violation {
    crate::error::Violation {
        key: key.into(),
        message: message.to_string(),
    }
}
