//! `Ḣ^s` norms of radial Fourier-multiplier solutions by one-dimensional
//! quadrature in `r = |ξ|`.
//!
//! The Fourier transform is unitary throughout the crate,
//! `f̂(ξ) = (2π)^{-n/2} ∫ f(x) e^{-ix·ξ} dx`, so `‖f‖_{Ḣ^s}² = ∫ |ξ|^{2s}|f̂|² dξ`
//! and the mass is `P_f = (2π)^{n/2} f̂(0)`.

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::quadrature::{adaptive_panels, GaussLegendre};
use crate::symbols::OperatorParams;

pub type Profile = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Radial Fourier profile of a datum, with its `L¹` mass.
#[derive(Clone)]
pub struct RadialDatum {
    profile: Profile,
    pub l1_mass: f64,
    pub label: String,
    /// Beyond this radius the profile is treated as zero.
    pub cutoff: f64,
}

impl std::fmt::Debug for RadialDatum {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RadialDatum")
            .field("label", &self.label)
            .field("l1_mass", &self.l1_mass)
            .field("cutoff", &self.cutoff)
            .finish()
    }
}

impl RadialDatum {
    pub fn new(profile: Profile, l1_mass: f64, label: impl Into<String>, cutoff: f64) -> Self {
        Self {
            profile,
            l1_mass,
            label: label.into(),
            cutoff,
        }
    }

    /// `mass · (4πκ)^{-n/2} e^{-|x|²/(4κ)}`, whose transform is
    /// `(2π)^{-n/2} mass · e^{-κ r²}`.
    pub fn gaussian(n: usize, mass: f64, kappa: f64) -> Self {
        let c = mass * (2.0 * PI).powf(-(n as f64) / 2.0);
        let cutoff = ((1e18_f64).ln() / kappa).sqrt();
        Self::new(
            Arc::new(move |r: f64| c * (-kappa * r * r).exp()),
            mass,
            format!("gaussian(mass={mass}, kappa={kappa})"),
            cutoff,
        )
    }

    /// Profile equal to 1 on `[0, cutoff]` and zero beyond.
    pub fn truncated_unit(n: usize, cutoff: f64) -> Self {
        Self::new(
            Arc::new(|_| 1.0),
            (2.0 * PI).powf(n as f64 / 2.0),
            format!("unit[0,{cutoff}]"),
            cutoff,
        )
    }

    pub fn zero() -> Self {
        Self::new(Arc::new(|_| 0.0), 0.0, "zero", 0.0)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let inner = self.profile.clone();
        Self::new(
            Arc::new(move |r| factor * inner(r)),
            factor * self.l1_mass,
            format!("{factor}*{}", self.label),
            self.cutoff,
        )
    }

    pub fn value(&self, r: f64) -> f64 {
        if r > self.cutoff {
            0.0
        } else {
            (self.profile)(r)
        }
    }
}

/// Surface area of the unit sphere in ℝⁿ, `2π^{n/2}/Γ(n/2)`.
pub fn sphere_area(n: usize) -> f64 {
    2.0 * PI.powf(n as f64 / 2.0) / gamma(n as f64 / 2.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadratureSpec {
    pub panel_order: usize,
    /// Fixed upper cutoff; `None` selects it from the integrand.
    pub r_max: Option<f64>,
    /// Ratio between consecutive panel edges approaching the origin.
    pub refinement: f64,
    pub rel_tol: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            panel_order: 16,
            r_max: None,
            refinement: 0.5,
            rel_tol: 1e-14,
        }
    }
}

/// Radial integration engine.
#[derive(Debug, Clone)]
pub struct RadialQuadrature {
    spec: QuadratureSpec,
    rule: GaussLegendre,
}

impl Default for RadialQuadrature {
    fn default() -> Self {
        Self::new(QuadratureSpec::default()).expect("default spec is valid")
    }
}

const SCAN_LO: f64 = 1e-12;
const SCAN_HI: f64 = 1e6;
const SCAN_PER_DECADE: f64 = 40.0;
const NEGLIGIBLE: f64 = 1e-18;

impl RadialQuadrature {
    pub fn new(spec: QuadratureSpec) -> Result<Self> {
        if spec.panel_order < 8 {
            return Err(Error::InvalidParameter {
                name: "panel_order",
                reason: format!("must be at least 8, got {}", spec.panel_order),
            });
        }
        if !(spec.refinement > 0.0 && spec.refinement < 1.0) {
            return Err(Error::InvalidParameter {
                name: "refinement",
                reason: "geometric ratio must lie in (0, 1)".into(),
            });
        }
        Ok(Self {
            rule: GaussLegendre::new(spec.panel_order),
            spec,
        })
    }

    pub fn spec(&self) -> &QuadratureSpec {
        &self.spec
    }

    /// `ω_{n-1} ∫₀^{upper} r^{2s+n-1} amplitude(r)² dr`.
    pub fn weighted_square_integral<F>(&self, n: usize, s: f64, amplitude: F, upper: f64) -> Result<f64>
    where
        F: Fn(f64) -> f64,
    {
        let power = 2.0 * s + n as f64 - 1.0;
        let weighted = |r: f64| {
            if r == 0.0 {
                if power == 0.0 {
                    amplitude(0.0).powi(2)
                } else {
                    0.0
                }
            } else {
                r.powf(power) * amplitude(r).powi(2)
            }
        };
        let r_max = match self.spec.r_max {
            Some(r) => r.min(upper),
            None => match self.scan_upper(&amplitude, s + 0.5 * (n as f64 - 1.0), upper) {
                Some(r) => r,
                None => return Ok(0.0),
            },
        };
        let panels = self.panels(r_max);
        let integral = adaptive_panels(&self.rule, &weighted, &panels, self.spec.rel_tol, 40)?;
        Ok(sphere_area(n) * integral)
    }

    /// Radius beyond which `r^{half_power}|amplitude|` stays below
    /// `1e-18` of its peak, doubled; `None` if the amplitude vanishes.
    fn scan_upper<F: Fn(f64) -> f64>(&self, amplitude: &F, half_power: f64, upper: f64) -> Option<f64> {
        let hi = upper.min(SCAN_HI);
        if hi <= SCAN_LO {
            return if upper > 0.0 { Some(upper) } else { None };
        }
        let steps = ((hi / SCAN_LO).log10() * SCAN_PER_DECADE).ceil() as usize;
        let ratio = (hi / SCAN_LO).powf(1.0 / steps as f64);
        let mut peak = 0.0_f64;
        let mut samples = Vec::with_capacity(steps + 1);
        let mut r = SCAN_LO;
        for _ in 0..=steps {
            let g = amplitude(r).abs() * r.powf(half_power);
            peak = peak.max(g);
            samples.push((r.min(hi), g));
            r *= ratio;
        }
        if peak == 0.0 || !peak.is_finite() {
            return if peak == 0.0 { None } else { Some(hi) };
        }
        let last = samples
            .iter()
            .rev()
            .find(|(_, g)| *g > NEGLIGIBLE * peak)
            .map(|(r, _)| *r)
            .unwrap_or(SCAN_LO);
        Some((2.0 * last).min(upper))
    }

    fn panels(&self, r_max: f64) -> Vec<(f64, f64)> {
        let floor = r_max * 1e-16;
        let mut edges = vec![r_max];
        let mut r = r_max;
        while r > floor {
            r *= self.spec.refinement;
            edges.push(r);
        }
        edges.push(0.0);
        edges.windows(2).map(|w| (w[1], w[0])).rev().collect()
    }

    /// `‖multiplier(t,·)·datum‖_{Ḣ^s}`.
    pub fn hs_norm<M>(&self, params: &OperatorParams, multiplier: M, datum: &RadialDatum, s: f64, t: f64) -> Result<f64>
    where
        M: Fn(f64, f64) -> f64,
    {
        check_s_t(s, t)?;
        let sq = self.weighted_square_integral(params.n, s, |r| multiplier(t, r) * datum.value(r), datum.cutoff)?;
        Ok(sq.sqrt())
    }

    /// Norm of the linear solution `K̂0 v̂0 + K̂1 v̂1`.
    pub fn solution_norm(&self, params: &OperatorParams, v0: &RadialDatum, v1: &RadialDatum, s: f64, t: f64) -> Result<f64> {
        check_s_t(s, t)?;
        let upper = v0.cutoff.max(v1.cutoff);
        let sq = self.weighted_square_integral(
            params.n,
            s,
            |r| {
                let kv = params.kernel_eval(t, r);
                kv.k0 * v0.value(r) + kv.k1 * v1.value(r)
            },
            upper,
        )?;
        Ok(sq.sqrt())
    }

    /// `‖v(t) - G(t) P_{v0+v1}‖_{Ḣ^s}`, with the difference formed inside the integrand.
    pub fn profile_error(&self, params: &OperatorParams, v0: &RadialDatum, v1: &RadialDatum, s: f64, t: f64) -> Result<f64> {
        check_s_t(s, t)?;
        let mass = v0.l1_mass + v1.l1_mass;
        if mass != 0.0 && t == 0.0 {
            return Err(Error::Precondition(
                "profile error at t = 0 is unbounded for nonzero mass".into(),
            ));
        }
        let c = mass * (2.0 * PI).powf(-(params.n as f64) / 2.0);
        let upper = if mass == 0.0 { v0.cutoff.max(v1.cutoff) } else { f64::INFINITY };
        let sq = self.weighted_square_integral(
            params.n,
            s,
            |r| {
                let kv = params.kernel_eval(t, r);
                kv.k0 * v0.value(r) + kv.k1 * v1.value(r) - c * params.profile_hat(t, r)
            },
            upper,
        )?;
        Ok(sq.sqrt())
    }

    /// `‖G(t)‖_{Ḣ^s}` for unit mass, i.e. the norm of `(2π)^{-n/2} Ĝ(t,·)`.
    pub fn profile_norm(&self, params: &OperatorParams, s: f64, t: f64) -> Result<f64> {
        check_s_t(s, t)?;
        if t == 0.0 {
            return Err(Error::Precondition("profile norm diverges at t = 0".into()));
        }
        let c = (2.0 * PI).powf(-(params.n as f64) / 2.0);
        let sq = self.weighted_square_integral(params.n, s, |r| c * params.profile_hat(t, r), f64::INFINITY)?;
        Ok(sq.sqrt())
    }

    /// Evaluates `f(t)` for each time in parallel; results are in input order.
    pub fn over_times<F>(&self, times: &[f64], f: F) -> Result<Vec<f64>>
    where
        F: Fn(&Self, f64) -> Result<f64> + Sync,
    {
        times.par_iter().map(|&t| f(self, t)).collect()
    }
}

fn check_s_t(s: f64, t: f64) -> Result<()> {
    if !(s >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "s",
            reason: format!("must be non-negative, got {s}"),
        });
    }
    if !(t >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "t",
            reason: format!("must be non-negative, got {t}"),
        });
    }
    Ok(())
}

/// One row of the radial norm CSV.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct NormRow {
    pub t: f64,
    pub norm: f64,
    pub scaled_norm: f64,
    pub s: f64,
    pub sigma: f64,
    pub n: usize,
}
