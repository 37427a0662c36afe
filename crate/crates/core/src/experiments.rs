//! Scenario drivers: decay-rate fits, convergence to the diffusion profile and
//! lifespan scaling sweeps.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::evolve::{Integrator, NormRow, RunOutcome, RunStatus, Source, StepControl};
use crate::fit::{fit_power_law, geometric_times, linearity_residual, PowerLawFit};
use crate::radial::{QuadratureSpec, RadialDatum, RadialQuadrature};
use crate::symbols::OperatorParams;
use crate::torus::{FieldState, Grid};

/// `u₀ = u₁ = ε g` with `g` the L¹-normalised Gaussian of standard deviation `width`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianData {
    pub epsilon: f64,
    pub width: f64,
}

impl GaussianData {
    pub fn new(epsilon: f64, width: f64) -> Result<Self> {
        if !(epsilon >= 0.0 && epsilon.is_finite()) {
            return Err(invalid("eps", format!("must be non-negative, got {epsilon}")));
        }
        if !(width > 0.0 && width.is_finite()) {
            return Err(invalid("width", format!("must be positive, got {width}")));
        }
        Ok(Self { epsilon, width })
    }

    pub fn sample(&self, grid: &Grid) -> Vec<f64> {
        let w2 = self.width * self.width;
        let norm = self.epsilon / (2.0 * PI * w2).powf(grid.n as f64 / 2.0);
        grid.sample(|[x, y]| norm * (-(x * x + y * y) / (2.0 * w2)).exp())
    }

    /// The same datum as a radial profile in frequency.
    pub fn radial(&self, n: usize) -> RadialDatum {
        RadialDatum::gaussian(n, self.epsilon, self.width * self.width / 2.0)
    }

    /// `ε ∫(u₀ + u₁) dx`.
    pub fn initial_mass(&self) -> f64 {
        2.0 * self.epsilon
    }
}

/// Everything needed to launch one solver run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverSetup {
    pub params: OperatorParams,
    pub grid: Grid,
    pub ctrl: StepControl,
    pub data: GaussianData,
}

impl SolverSetup {
    pub fn initial_state(&self, integ: &mut Integrator) -> Result<FieldState> {
        let u = self.data.sample(&self.grid);
        FieldState::from_physical(integ.spectral(), &u, &u)
    }

    pub fn run<O>(&self, source: &Source, observer: O) -> Result<(RunOutcome, FieldState)>
    where
        O: FnMut(&FieldState, &[f64], &crate::torus::MassAccumulator),
    {
        let mut integ = Integrator::new(self.params, self.grid)?;
        let mut state = self.initial_state(&mut integ)?;
        let outcome = integ.run(&mut state, &self.ctrl, source, observer)?;
        Ok((outcome, state))
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Self {
        Self {
            data: GaussianData { epsilon, ..self.data },
            ..*self
        }
    }

    pub fn with_grid_size(&self, size: usize) -> Result<Self> {
        Ok(Self {
            grid: Grid::new(self.grid.n, size, self.grid.half_length)?,
            ..*self
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlopeReport {
    pub s: f64,
    pub target: f64,
    pub slope: f64,
    pub max_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl SlopeReport {
    fn new(s: f64, target: f64, fit: PowerLawFit, tolerance: f64) -> Self {
        Self {
            s,
            target,
            slope: fit.slope,
            max_residual: fit.max_residual,
            tolerance,
            pass: (fit.slope - target).abs() <= tolerance,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DecayReport {
    pub method: &'static str,
    pub window: (f64, f64),
    pub slopes: Vec<SlopeReport>,
    pub resolution_violation: Option<f64>,
    #[serde(skip)]
    pub series: Vec<NormRow>,
}

impl DecayReport {
    pub fn pass(&self) -> bool {
        self.slopes.iter().all(|s| s.pass)
    }
}

/// Linear decay of `‖v(t)‖_{Ḣ^s}` by radial quadrature on `[t_lo, t_hi]`.
pub fn radial_decay(
    params: &OperatorParams,
    data: &GaussianData,
    spec: QuadratureSpec,
    s_list: &[f64],
    window: (f64, f64),
    samples: usize,
    tolerance: f64,
) -> Result<DecayReport> {
    let quad = RadialQuadrature::new(spec)?;
    let datum = data.radial(params.n);
    let times = geometric_times(window.0, window.1, samples);
    let mut slopes = Vec::new();
    for &s in s_list {
        let norms = quad.over_times(&times, |q, t| q.solution_norm(params, &datum, &datum, s, t))?;
        let series: Vec<(f64, f64)> = times.iter().copied().zip(norms).collect();
        let fit = fit_power_law(&series)?;
        slopes.push(SlopeReport::new(s, -params.decay_exponent(s), fit, tolerance));
    }
    Ok(DecayReport {
        method: "radial",
        window,
        slopes,
        resolution_violation: None,
        series: Vec::new(),
    })
}

/// Latest decade of recorded times before the resolution rule is violated.
pub fn fit_window(outcome: &RunOutcome) -> Result<(f64, f64)> {
    let mut hi = outcome.t_final;
    if let Some(tv) = outcome.resolution_violation {
        hi = hi.min(tv);
    }
    let lo = hi / 10.0;
    let inside = outcome
        .series
        .rows
        .iter()
        .filter(|r| r.t >= lo * (1.0 - 1e-12) && r.t <= hi * (1.0 + 1e-12))
        .count();
    if lo <= 0.0 || inside < 5 {
        return Err(Error::InvalidExperiment(format!(
            "no resolved late-time decade: fit window [{lo}, {hi}] holds {inside} records"
        )));
    }
    Ok((lo, hi))
}

/// Decay of the solver's `L²` and `Ḣ^{σ_min}` norms on the latest resolved decade.
pub fn solver_decay(setup: &SolverSetup, source: &Source, tolerance: f64) -> Result<DecayReport> {
    if let Some(p) = source.exponent() {
        if !setup.params.hypotheses(p).supercritical {
            return Err(Error::InvalidExperiment(format!(
                "decay fits need a super-critical power, p = {p} <= p_crit = {}",
                setup.params.p_crit()
            )));
        }
    }
    let (outcome, _) = setup.run(source, |_, _, _| {})?;
    decay_from_outcome(&setup.params, &outcome, tolerance)
}

pub fn decay_from_outcome(params: &OperatorParams, outcome: &RunOutcome, tolerance: f64) -> Result<DecayReport> {
    if outcome.status != RunStatus::Completed {
        return Err(Error::InvalidExperiment(format!(
            "run blew up at t = {} before the fit window",
            outcome.t_final
        )));
    }
    let window = fit_window(outcome)?;
    let sm = params.sigma_min();
    let mut slopes = Vec::new();
    for (s, column) in [(0.0, 0usize), (sm, 1usize)] {
        let series = outcome
            .series
            .window(window.0, window.1, |r| if column == 0 { r.l2 } else { r.hs });
        let fit = fit_power_law(&series)?;
        slopes.push(SlopeReport::new(s, -params.decay_exponent(s), fit, tolerance));
    }
    Ok(DecayReport {
        method: "solver",
        window,
        slopes,
        resolution_violation: outcome.resolution_violation,
        series: outcome.series.rows.clone(),
    })
}

/// Distance of the solution from `θ G(t)` along a run.
#[derive(Debug, Clone, Serialize)]
pub struct ProfileReport {
    pub s: f64,
    pub times: Vec<f64>,
    /// `t^{(n+2s)/(4σ_min)} ‖u(t) - θ G(t)‖_{Ḣ^s}`.
    pub scaled_error: Vec<f64>,
    pub theta: f64,
    pub initial_mass: f64,
    pub nonlinear_mass: f64,
    /// Estimated `∫_T^∞ ∫|u|^p dx dt`, included in `theta`.
    pub tail_correction: Option<f64>,
    /// `‖u(T)‖_{L²} / (θ ‖G(T)‖_{L²})` at the final time.
    pub ratio: f64,
    /// `sup_t (1+t)^{n/(4σ_min)}‖u‖_{L²} + (1+t)^{(n+2σ_min)/(4σ_min)}‖u‖_{Ḣ^{σ_min}}`.
    pub weighted_sup: f64,
    pub zero_mode_residual: f64,
    pub status: RunStatus,
    pub t_final: f64,
    pub resolution_violation: Option<f64>,
    #[serde(skip)]
    pub series: Vec<NormRow>,
}

impl ProfileReport {
    pub fn error_at(&self, t: f64) -> Option<f64> {
        self.times
            .iter()
            .position(|&x| (x - t).abs() <= 1e-9 * t.max(1.0))
            .map(|i| self.scaled_error[i])
    }
}

/// Per-record inner products `(‖u‖², ⟨u, Ĝ⟩, ‖Ĝ‖²)` in `Ḣ^s` for unit-mass `G`.
#[derive(Debug, Clone, Copy)]
struct ProfileMoments {
    t: f64,
    uu: f64,
    ug: f64,
    gg: f64,
    l2_uu: f64,
    l2_gg: f64,
    rate: f64,
}

/// Runs `setup` and compares the solution with `θ G` on the torus.
pub fn profile_experiment(setup: &SolverSetup, source: &Source, s: f64) -> Result<ProfileReport> {
    let params = setup.params;
    if !(0.0..=params.sigma_min()).contains(&s) {
        return Err(invalid("s", format!("must lie in [0, sigma_min], got {s}")));
    }
    if let Some(p) = source.exponent() {
        if !params.hypotheses(p).supercritical {
            return Err(Error::InvalidExperiment(format!(
                "profile convergence needs p > p_crit = {}",
                params.p_crit()
            )));
        }
    }
    let grid = setup.grid;
    let radii = grid.wavenumber_radii();
    let weights: Vec<f64> = radii
        .iter()
        .map(|&r| if r == 0.0 { if s == 0.0 { 1.0 } else { 0.0 } } else { r.powf(2.0 * s) })
        .collect();
    let vol = grid.volume();
    let mut moments: Vec<ProfileMoments> = Vec::new();
    let (outcome, _) = setup.run(source, |state, _u, acc| {
        let t = state.t;
        if t <= 0.0 {
            return;
        }
        let (mut uu, mut ug, mut gg, mut l2_uu, mut l2_gg) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for idx in 0..state.uhat.len() {
            let g = params.profile_hat(t, radii[idx]) / vol;
            let c = state.uhat[idx];
            let w = weights[idx];
            uu += w * c.norm_sqr();
            ug += w * c.re * g;
            gg += w * g * g;
            l2_uu += c.norm_sqr();
            l2_gg += g * g;
        }
        moments.push(ProfileMoments {
            t,
            uu: vol * uu,
            ug: vol * ug,
            gg: vol * gg,
            l2_uu: vol * l2_uu,
            l2_gg: vol * l2_gg,
            rate: acc.last_sample.map_or(0.0, |x| x.1),
        });
    })?;

    let nonlinear_mass = outcome.mass.nonlinear_mass;
    let tail_correction = if source.exponent().is_some() && outcome.status == RunStatus::Completed {
        tail_estimate(&moments)
    } else {
        None
    };
    let theta = outcome.mass.initial_mass + nonlinear_mass + tail_correction.unwrap_or(0.0);
    let scale = params.decay_exponent(s);
    let mut times = Vec::with_capacity(moments.len());
    let mut scaled_error = Vec::with_capacity(moments.len());
    for m in &moments {
        let sq = (m.uu - 2.0 * theta * m.ug + theta * theta * m.gg).max(0.0);
        times.push(m.t);
        scaled_error.push(m.t.powf(scale) * sq.sqrt());
    }
    let ratio = moments
        .last()
        .map_or(f64::NAN, |m| m.l2_uu.sqrt() / (theta * m.l2_gg.sqrt()));
    let e0 = params.decay_exponent(0.0);
    let e1 = params.decay_exponent(params.sigma_min());
    let weighted_sup = outcome
        .series
        .rows
        .iter()
        .map(|r| (1.0 + r.t).powf(e0) * r.l2 + (1.0 + r.t).powf(e1) * r.hs)
        .fold(0.0, f64::max);
    Ok(ProfileReport {
        s,
        times,
        scaled_error,
        theta,
        initial_mass: outcome.mass.initial_mass,
        nonlinear_mass,
        tail_correction,
        ratio,
        weighted_sup,
        zero_mode_residual: outcome.zero_mode_residual(),
        status: outcome.status,
        t_final: outcome.t_final,
        resolution_violation: outcome.resolution_violation,
        series: outcome.series.rows,
    })
}

/// Power-law extrapolation of `N(t) = ∫|u|^p dx` over the last recorded decade.
fn tail_estimate(moments: &[ProfileMoments]) -> Option<f64> {
    let last = moments.last()?;
    let lo = last.t / 10.0;
    let series: Vec<(f64, f64)> = moments
        .iter()
        .filter(|m| m.t >= lo && m.rate > 0.0)
        .map(|m| (m.t, m.rate))
        .collect();
    let fit = fit_power_law(&series).ok()?;
    if fit.slope >= -1.0 {
        return None;
    }
    Some(fit.predict(last.t) * last.t / (-fit.slope - 1.0))
}

/// Scaled linear profile error `t^{(n+2s)/(4σ_min)}‖v - P G‖_{Ḣ^s}` by radial quadrature.
#[derive(Debug, Clone, Serialize)]
pub struct LinearProfileReport {
    pub s: f64,
    pub times: Vec<f64>,
    pub scaled_error: Vec<f64>,
    /// Negated log-log slope of `scaled_error`.
    pub extra_decay: f64,
    /// `α_min / (2σ_min)`.
    pub extra_decay_target: f64,
}

pub fn linear_profile_convergence(
    params: &OperatorParams,
    data: &GaussianData,
    spec: QuadratureSpec,
    s: f64,
    window: (f64, f64),
    samples: usize,
) -> Result<LinearProfileReport> {
    let quad = RadialQuadrature::new(spec)?;
    let datum = data.radial(params.n);
    let times = geometric_times(window.0, window.1, samples);
    let errors = quad.over_times(&times, |q, t| q.profile_error(params, &datum, &datum, s, t))?;
    let scale = params.decay_exponent(s);
    let scaled_error: Vec<f64> = times.iter().zip(&errors).map(|(t, e)| t.powf(scale) * e).collect();
    let series: Vec<(f64, f64)> = times.iter().copied().zip(scaled_error.iter().copied()).collect();
    let fit = fit_power_law(&series)?;
    Ok(LinearProfileReport {
        s,
        times,
        scaled_error,
        extra_decay: -fit.slope,
        extra_decay_target: params.alpha_min() / (2.0 * params.sigma_min()),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LifespanRecord {
    pub epsilon: f64,
    pub t_blowup: Option<f64>,
    /// `(T(10⁴), T(10⁸))` when both crossings were observed.
    pub threshold_band: Option<(f64, f64)>,
    pub grid_tag: String,
    /// Reason the run was left out of the fit.
    pub excluded: Option<String>,
    pub steps: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriticalFit {
    pub slope: f64,
    pub intercept: f64,
    /// Largest residual relative to the spread of `log T`.
    pub linearity_residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LifespanReport {
    pub p: f64,
    pub p_crit: f64,
    pub target_slope: Option<f64>,
    pub fitted_slope: Option<f64>,
    pub fit_residual: Option<f64>,
    pub critical: Option<CriticalFit>,
    /// `T_ε` nonincreasing in `ε` up to the threshold band.
    pub monotone: bool,
    pub records: Vec<LifespanRecord>,
}

/// Runs one blow-up detection per `ε` (in parallel) and fits the lifespan law.
pub fn lifespan_sweep(setup: &SolverSetup, p: f64, eps_list: &[f64], grid_tag: &str) -> Result<LifespanReport> {
    let params = setup.params;
    if eps_list.len() < 2 {
        return Err(Error::Precondition(format!(
            "lifespan sweep needs at least two epsilon values, got {}",
            eps_list.len()
        )));
    }
    if eps_list.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
        return Err(invalid("eps_list", "all epsilon values must be positive"));
    }
    let mut eps: Vec<f64> = eps_list.to_vec();
    eps.sort_by(f64::total_cmp);
    eps.dedup();
    if eps.len() < 2 || eps[eps.len() - 1] / eps[0] < 10.0 * (1.0 - 1e-12) {
        return Err(Error::Precondition(
            "epsilon list must span at least one decade".into(),
        ));
    }
    let hyp = params.hypotheses(p);
    if !hyp.blowup_range {
        return Err(Error::InvalidExperiment(format!(
            "p = {p} exceeds p_crit = {}; small data do not blow up",
            params.p_crit()
        )));
    }
    let level = setup.ctrl.blowup_threshold;
    let ctrl = StepControl {
        blowup_threshold: level.max(1e8),
        lifespan_level: Some(level),
        ..setup.ctrl
    };
    let records: Vec<LifespanRecord> = eps
        .par_iter()
        .map(|&e| -> Result<LifespanRecord> {
            let run = SolverSetup { ctrl, ..setup.with_epsilon(e) };
            let (out, _) = run.run(&Source::Power(p), |_, _, _| {})?;
            Ok(lifespan_record(e, &out, level, grid_tag))
        })
        .collect::<Result<_>>()?;

    let kept: Vec<(f64, f64)> = records
        .iter()
        .filter(|r| r.excluded.is_none())
        .filter_map(|r| r.t_blowup.map(|t| (r.epsilon, t)))
        .collect();
    let monotone = kept.windows(2).all(|w| {
        let band = records
            .iter()
            .find(|r| r.epsilon == w[1].0)
            .and_then(|r| r.threshold_band)
            .map_or(0.0, |(lo, hi)| hi - lo);
        w[1].1 <= w[0].1 + band
    });
    let critical_case = !hyp.supercritical && params.lifespan_exponent(p).is_err();
    let (target_slope, fitted_slope, fit_residual, critical) = if critical_case {
        let pts: Vec<(f64, f64)> = kept.iter().map(|&(e, t)| (e.powf(-(p - 1.0)), t.ln())).collect();
        let crit = if pts.len() >= 3 {
            let (slope, intercept, res) = linearity_residual(&pts);
            Some(CriticalFit {
                slope,
                intercept,
                linearity_residual: res,
            })
        } else {
            None
        };
        (None, None, None, crit)
    } else {
        let target = params.lifespan_exponent(p)?;
        let fit = fit_power_law(&kept).ok();
        (Some(target), fit.map(|f| f.slope), fit.map(|f| f.max_residual), None)
    };
    Ok(LifespanReport {
        p,
        p_crit: params.p_crit(),
        target_slope,
        fitted_slope,
        fit_residual,
        critical,
        monotone,
        records,
    })
}

fn lifespan_record(epsilon: f64, out: &RunOutcome, level: f64, grid_tag: &str) -> LifespanRecord {
    let t_blowup = out.crossing_time(level);
    let band = match (out.crossing_time(1e4), out.crossing_time(1e8)) {
        (Some(lo), Some(hi)) => Some((lo, hi)),
        _ => None,
    };
    let excluded = match (t_blowup, out.resolution_violation) {
        (None, _) => Some(format!("no blow-up before t = {}", out.t_end)),
        (Some(t), Some(tv)) if tv < t => Some(format!("resolution rule violated at t = {tv} before blow-up at {t}")),
        _ => None,
    };
    LifespanRecord {
        epsilon,
        t_blowup,
        threshold_band: band,
        grid_tag: grid_tag.to_string(),
        excluded,
        steps: out.steps,
    }
}
