//! Test-function functionals of the blow-up argument evaluated on stored
//! numerical solutions: cutoffs `η`, `φ = ⟨x⟩^{-n-2σ₀}`, the functionals `J_R`,
//! `J̃_R`, the four error terms and their scaling in `R`.

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::evolve::{RunStatus, Source, StepControl};
use crate::experiments::SolverSetup;
use crate::fit::least_squares;
use crate::symbols::OperatorParams;
use crate::torus::{Grid, Spectral};

/// Quintic smoothstep `6x⁵ - 15x⁴ + 10x³` and its first two derivatives.
fn smoothstep(x: f64) -> (f64, f64, f64) {
    let x = x.clamp(0.0, 1.0);
    let s = x * x * x * (10.0 - 15.0 * x + 6.0 * x * x);
    let d1 = 30.0 * x * x * (1.0 - x) * (1.0 - x);
    let d2 = 60.0 * x * (1.0 - x) * (1.0 - 2.0 * x);
    (s, d1, d2)
}

/// Temporal cutoff `η = (1 - S(2t-1))^k` on `[1/2, 1]`, `1` before, `0` after.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Eta {
    pub p: f64,
    pub power: u32,
    /// Measured `sup η^{-p'/p}(|η'|^{p'} + |η''|^{p'})` over `(1/2, 1)`.
    pub constant: f64,
}

pub fn conjugate(p: f64) -> f64 {
    p / (p - 1.0)
}

impl Eta {
    pub fn value(&self, t: f64) -> f64 {
        if t <= 0.5 {
            1.0
        } else if t >= 1.0 {
            0.0
        } else {
            (1.0 - smoothstep(2.0 * t - 1.0).0).powi(self.power as i32)
        }
    }

    pub fn d1(&self, t: f64) -> f64 {
        if t <= 0.5 || t >= 1.0 {
            return 0.0;
        }
        let (s, ds, _) = smoothstep(2.0 * t - 1.0);
        let k = self.power as f64;
        -2.0 * k * (1.0 - s).powi(self.power as i32 - 1) * ds
    }

    pub fn d2(&self, t: f64) -> f64 {
        if t <= 0.5 || t >= 1.0 {
            return 0.0;
        }
        let (s, ds, dds) = smoothstep(2.0 * t - 1.0);
        let k = self.power as f64;
        let q = 1.0 - s;
        4.0 * k * (k - 1.0) * q.powi(self.power as i32 - 2) * ds * ds - 4.0 * k * q.powi(self.power as i32 - 1) * dds
    }

    /// `η^{-p'/p}(|η'|^{p'} + |η''|^{p'})` at `t ∈ (1/2, 1)`, in logarithms
    /// since `η` underflows near `t = 1` for large powers.
    pub fn condition_quotient(&self, t: f64) -> f64 {
        if t <= 0.5 || t >= 1.0 {
            return 0.0;
        }
        let pc = conjugate(self.p);
        let (s, ds, dds) = smoothstep(2.0 * t - 1.0);
        let q = 1.0 - s;
        if q <= 0.0 {
            return 0.0;
        }
        let k = self.power as f64;
        let lq = q.ln();
        // η^{-p'/p} = q^{-k(p'-1)}, η' = -2k q^{k-1} S', η'' = 4k q^{k-2}((k-1)S'² - q S'').
        let base = -k * (pc - 1.0) * lq;
        let first = if ds > 0.0 {
            (base + pc * ((2.0 * k).ln() + (k - 1.0) * lq + ds.ln())).exp()
        } else {
            0.0
        };
        let bracket = ((k - 1.0) * ds * ds - q * dds).abs();
        let second = if bracket > 0.0 {
            (base + pc * ((4.0 * k).ln() + (k - 2.0) * lq + bracket.ln())).exp()
        } else {
            0.0
        };
        first + second
    }
}

/// Cutoff with the smallest power `⌈2p'⌉` that keeps the quotient bounded.
pub fn make_eta(p: f64) -> Result<Eta> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(invalid("p", format!("must exceed 1, got {p}")));
    }
    eta_with_power(p, (2.0 * conjugate(p)).ceil() as u32)
}

/// Near `t = 1` the quotient behaves like `(1-S)^{k-2p'}`, so powers below `2p'` diverge.
pub fn eta_with_power(p: f64, power: u32) -> Result<Eta> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(invalid("p", format!("must exceed 1, got {p}")));
    }
    if power < 2 || (power as f64) < 2.0 * conjugate(p) - 1e-12 {
        return Err(invalid(
            "eta_power",
            format!("power {power} < 2p' = {} leaves the cutoff quotient unbounded", 2.0 * conjugate(p)),
        ));
    }
    let mut eta = Eta { p, power, constant: 0.0 };
    let samples = 100_000;
    let mut sup = 0.0_f64;
    for i in 0..samples {
        let t = 0.5 + 0.5 * (i as f64 + 0.5) / samples as f64;
        sup = sup.max(eta.condition_quotient(t));
    }
    if !sup.is_finite() {
        return Err(invalid("eta_power", "cutoff quotient is not finite"));
    }
    eta.constant = sup;
    Ok(eta)
}

/// `σ - ⌊σ⌋`, or `integer_default` when `σ` is an integer.
pub fn sigma0(sigma: f64, integer_default: f64) -> Result<f64> {
    let frac = sigma - sigma.floor();
    if frac > 0.0 {
        return Ok(frac);
    }
    if !(integer_default > 0.0 && integer_default < 1.0) {
        return Err(invalid("sigma0", format!("must lie in (0, 1), got {integer_default}")));
    }
    Ok(integer_default)
}

/// `⟨x⟩^{-n-2σ₀}` at radius `|x|`.
pub fn phi(n: usize, sigma0: f64, radius: f64) -> f64 {
    (1.0 + radius * radius).powf(-(n as f64 + 2.0 * sigma0) / 2.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TestFunctions {
    pub n: usize,
    pub sigma: f64,
    pub sigma_min: f64,
    pub sigma0: f64,
    pub eta: Eta,
    pub r: f64,
    pub k: f64,
}

impl TestFunctions {
    pub fn new(params: &OperatorParams, p: f64, r: f64, k: f64) -> Result<Self> {
        if !(r > 0.0 && k > 0.0) {
            return Err(invalid("R", "scaling radius and stretch must be positive"));
        }
        Ok(Self {
            n: params.n,
            sigma: params.sigma,
            sigma_min: params.sigma_min(),
            sigma0: sigma0(params.sigma, 0.5)?,
            eta: make_eta(p)?,
            r,
            k,
        })
    }

    pub fn with_radius(&self, r: f64) -> Self {
        Self { r, ..*self }
    }

    /// End of the support of `η_R`, `R^{2σ_min}`.
    pub fn time_scale(&self) -> f64 {
        self.r.powf(2.0 * self.sigma_min)
    }

    pub fn eta_r(&self, t: f64) -> f64 {
        self.eta.value(t / self.time_scale())
    }

    pub fn eta_r_d1(&self, t: f64) -> f64 {
        let s = self.time_scale();
        self.eta.d1(t / s) / s
    }

    pub fn eta_r_d2(&self, t: f64) -> f64 {
        let s = self.time_scale();
        self.eta.d2(t / s) / (s * s)
    }

    pub fn phi_r(&self, radius: f64) -> f64 {
        phi(self.n, self.sigma0, radius / (self.k * self.r))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FracLapReport {
    pub sigma: f64,
    pub sigma0: f64,
    pub half_length: f64,
    pub size: usize,
    /// `sup |(-Δ)^σ φ| / φ` over `max|x_i| ≤ L/8`.
    pub ratio_sup: f64,
    pub argmax: f64,
    pub boundary_phi: f64,
}

/// Spectral `(-Δ)^σ φ` on `grid`; the ratio is taken on the central eighth of
/// the box so that periodic images of the slowly decaying tail stay negligible.
pub fn frac_lap_phi(sigma: f64, sigma0: f64, grid: Grid) -> Result<(Vec<f64>, FracLapReport)> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(invalid("sigma", format!("must be non-negative, got {sigma}")));
    }
    let boundary_phi = phi(grid.n, sigma0, grid.half_length);
    if boundary_phi >= 1e-8 {
        return Err(Error::Precondition(format!(
            "phi = {boundary_phi:e} at the boundary; enlarge the box until it drops below 1e-8"
        )));
    }
    let mut spectral = Spectral::new(grid);
    let values: Vec<f64> = (0..grid.len()).map(|i| phi(grid.n, sigma0, grid.radius(i))).collect();
    let field = if sigma == 0.0 {
        values.clone()
    } else {
        spectral.fractional_laplacian(sigma, &values)?
    };
    let window = grid.half_length / 8.0;
    let mut ratio_sup = 0.0_f64;
    let mut argmax = 0.0;
    for idx in 0..grid.len() {
        let [x, y] = grid.position(idx);
        if x.abs().max(y.abs()) > window {
            continue;
        }
        let ratio = field[idx].abs() / values[idx];
        if ratio > ratio_sup {
            ratio_sup = ratio;
            argmax = grid.radius(idx);
        }
    }
    Ok((
        field,
        FracLapReport {
            sigma,
            sigma0,
            half_length: grid.half_length,
            size: grid.size,
            ratio_sup,
            argmax,
            boundary_phi,
        },
    ))
}

/// Solution snapshots on a uniform time grid, plus `u₀ + u₁`.
#[derive(Debug, Clone)]
pub struct StoredSolution {
    pub params: OperatorParams,
    pub grid: Grid,
    pub p: f64,
    pub times: Vec<f64>,
    pub fields: Vec<Vec<f64>>,
    pub data_sum: Vec<f64>,
}

impl StoredSolution {
    pub fn new(
        params: OperatorParams,
        grid: Grid,
        p: f64,
        times: Vec<f64>,
        fields: Vec<Vec<f64>>,
        data_sum: Vec<f64>,
    ) -> Result<Self> {
        if times.len() != fields.len() || times.len() < 3 {
            return Err(Error::Precondition("need at least three snapshots, one per time".into()));
        }
        if times[0] != 0.0 || times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Precondition("snapshot times must start at 0 and increase".into()));
        }
        for f in fields.iter().chain(std::iter::once(&data_sum)) {
            if f.len() != grid.len() {
                return Err(Error::SizeMismatch {
                    expected: grid.len(),
                    found: f.len(),
                });
            }
        }
        Ok(Self {
            params,
            grid,
            p,
            times,
            fields,
            data_sum,
        })
    }

    /// Evolves `setup` with `|u|^p` up to `horizon`, keeping a snapshot every `dt`.
    pub fn record(setup: &SolverSetup, p: f64, dt: f64, horizon: f64) -> Result<Self> {
        let ctrl = StepControl {
            t_end: horizon,
            record_step: Some(dt),
            ..setup.ctrl
        };
        let run = SolverSetup { ctrl, ..*setup };
        let mut times = Vec::new();
        let mut fields = Vec::new();
        let (outcome, _) = run.run(&Source::Power(p), |state, u, _| {
            times.push(state.t);
            fields.push(u.to_vec());
        })?;
        if outcome.status != RunStatus::Completed {
            return Err(Error::Precondition(format!(
                "solution blew up at t = {} before the horizon {horizon}",
                outcome.t_final
            )));
        }
        let u0 = setup.data.sample(&setup.grid);
        let data_sum: Vec<f64> = u0.iter().map(|v| 2.0 * v).collect();
        Self::new(setup.params, setup.grid, p, times, fields, data_sum)
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().unwrap()
    }

    fn trapezoid_weights(&self) -> Vec<f64> {
        let t = &self.times;
        let mut w = vec![0.0; t.len()];
        for i in 0..t.len() - 1 {
            let h = t[i + 1] - t[i];
            w[i] += 0.5 * h;
            w[i + 1] += 0.5 * h;
        }
        w
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FunctionalReport {
    pub r: f64,
    pub k: f64,
    pub j_r: f64,
    pub j_r_tilde: f64,
    /// `J_{1,R} … J_{4,R}`.
    pub terms: [f64; 4],
    /// `∫ u_{0+1} φ_R dx`.
    pub data_term: f64,
    /// `J_R - (-D + J₁ - J₂ + J₃ - J₄)` relative to the largest term.
    pub identity_residual: f64,
    /// Hölder upper bounds for `|J_{i,R}|` built from `J̃_R` (i = 1, 4) or `J_R` (i = 2, 3).
    pub holder_bounds: [f64; 4],
}

/// Spatial weights attached to one `(R, K)`.
struct SpatialFactors {
    phi: Vec<f64>,
    lap: Vec<f64>,
    frac: Vec<f64>,
}

impl SpatialFactors {
    fn new(tf: &TestFunctions, grid: Grid) -> Result<Self> {
        let mut spectral = Spectral::new(grid);
        let phi: Vec<f64> = (0..grid.len()).map(|i| tf.phi_r(grid.radius(i))).collect();
        let lap: Vec<f64> = spectral.fractional_laplacian(1.0, &phi)?.into_iter().map(|v| -v).collect();
        let frac = spectral.fractional_laplacian(tf.sigma, &phi)?;
        Ok(Self { phi, lap, frac })
    }
}

/// Space-time quadrature (trapezoid in `t`, grid sum in `x`) of the functionals.
pub fn evaluate_functionals(sol: &StoredSolution, tf: &TestFunctions) -> Result<FunctionalReport> {
    let t_support = tf.time_scale();
    if sol.horizon() < t_support * (1.0 - 1e-12) {
        return Err(Error::Precondition(format!(
            "stored horizon {} does not cover the cutoff support R^(2 sigma_min) = {t_support}",
            sol.horizon()
        )));
    }
    let grid = sol.grid;
    let dx = grid.cell_volume();
    let p = sol.p;
    let pc = conjugate(p);
    let factors = SpatialFactors::new(tf, grid)?;
    let weights = sol.trapezoid_weights();
    let (a, b) = (sol.params.a, sol.params.b);

    let mut j = 0.0;
    let mut j_tilde = 0.0;
    let mut terms = [0.0; 4];
    // Hölder companions: time-space integrals of the conjugate factors.
    let mut h_eta2 = 0.0;
    let mut h_eta1 = 0.0;
    let mut h_lap = 0.0;
    let mut h_frac = 0.0;
    let phi_mass: f64 = factors.phi.iter().sum::<f64>() * dx;
    let lap_conj: f64 = factors
        .lap
        .iter()
        .zip(&factors.phi)
        .map(|(l, f)| l.abs().powf(pc) * f.powf(-pc / p))
        .sum::<f64>()
        * dx;
    let frac_conj: f64 = factors
        .frac
        .iter()
        .zip(&factors.phi)
        .map(|(l, f)| l.abs().powf(pc) * f.powf(-pc / p))
        .sum::<f64>()
        * dx;

    for (i, (&t, u)) in sol.times.iter().zip(&sol.fields).enumerate() {
        if t > t_support {
            break;
        }
        let w = weights[i];
        let eta = tf.eta_r(t);
        let (mut sa, mut sb, mut sl, mut sf) = (0.0, 0.0, 0.0, 0.0);
        for idx in 0..u.len() {
            let v = u[idx];
            let ph = factors.phi[idx];
            sa += v * ph;
            sb += v.abs().powf(p) * ph;
            sl += v * factors.lap[idx];
            sf += v * factors.frac[idx];
        }
        let (sa, sb, sl, sf) = (sa * dx, sb * dx, sl * dx, sf * dx);
        let d1 = tf.eta_r_d1(t);
        let d2 = tf.eta_r_d2(t);
        j += w * eta * sb;
        let late = t >= 0.5 * t_support;
        if late {
            j_tilde += w * eta * sb;
        }
        terms[0] += w * d2 * sa;
        terms[1] += w * a * eta * sl;
        terms[2] += w * b * eta * sf;
        terms[3] += w * d1 * sa;
        if late && eta > 0.0 {
            let ep = eta.powf(-pc / p);
            h_eta2 += w * ep * d2.abs().powf(pc) * phi_mass;
            h_eta1 += w * ep * d1.abs().powf(pc) * phi_mass;
        }
        h_lap += w * eta * lap_conj;
        h_frac += w * eta * frac_conj;
    }
    let data_term: f64 = sol
        .data_sum
        .iter()
        .zip(&factors.phi)
        .map(|(u, f)| u * f)
        .sum::<f64>()
        * dx;
    let rhs = -data_term + terms[0] - terms[1] + terms[2] - terms[3];
    let scale = [j, data_term.abs(), terms[0].abs(), terms[1].abs(), terms[2].abs(), terms[3].abs()]
        .into_iter()
        .fold(0.0, f64::max);
    let identity_residual = if scale > 0.0 { (j - rhs).abs() / scale } else { 0.0 };
    let holder_bounds = [
        j_tilde.powf(1.0 / p) * h_eta2.powf(1.0 / pc),
        a * j.powf(1.0 / p) * h_lap.powf(1.0 / pc),
        b * j.powf(1.0 / p) * h_frac.powf(1.0 / pc),
        j_tilde.powf(1.0 / p) * h_eta1.powf(1.0 / pc),
    ];
    Ok(FunctionalReport {
        r: tf.r,
        k: tf.k,
        j_r: j,
        j_r_tilde: j_tilde,
        terms,
        data_term,
        identity_residual,
        holder_bounds,
    })
}

/// Target exponents of `|J_{i,R}| / J^{1/p}` in `R`.
pub fn scaling_targets(params: &OperatorParams, p: f64) -> [f64; 4] {
    let sm = params.sigma_min();
    let base = (params.n as f64 + 2.0 * sm) / conjugate(p);
    [-4.0 * sm + base, -2.0 + base, -2.0 * params.sigma + base, -2.0 * sm + base]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScalingFit {
    pub term: usize,
    pub exponent: f64,
    pub target: f64,
    pub deviation: f64,
    /// Terms below quadrature noise cannot be fitted.
    pub inconclusive: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScalingReport {
    pub p: f64,
    pub reports: Vec<FunctionalReport>,
    pub fits: Vec<ScalingFit>,
}

impl ScalingReport {
    pub fn fit(&self, term: usize) -> &ScalingFit {
        &self.fits[term - 1]
    }
}

/// Fits `log|J_{i,R}| - (1/p) log J̃_R` (i = 1, 4) or `- (1/p) log J_R` (i = 2, 3)
/// against `log R`.
pub fn scaling_sweep(sol: &StoredSolution, tf: &TestFunctions, r_list: &[f64]) -> Result<ScalingReport> {
    if r_list.len() < 2 {
        return Err(Error::Precondition(format!(
            "scaling sweep needs at least two radii, got {}",
            r_list.len()
        )));
    }
    let (lo, hi) = r_list
        .iter()
        .fold((f64::INFINITY, 0.0_f64), |(l, h), &r| (l.min(r), h.max(r)));
    if hi / lo < 10f64.sqrt() * (1.0 - 1e-12) {
        return Err(Error::Precondition("radii must span at least half a decade".into()));
    }
    let reports: Vec<FunctionalReport> = r_list
        .iter()
        .map(|&r| evaluate_functionals(sol, &tf.with_radius(r)))
        .collect::<Result<_>>()?;
    let targets = scaling_targets(&sol.params, sol.p);
    let p = sol.p;
    let mut fits = Vec::new();
    for term in 0..4 {
        let mut pts = Vec::new();
        let mut inconclusive = false;
        for rep in &reports {
            let norm = if term == 0 || term == 3 { rep.j_r_tilde } else { rep.j_r };
            let value = rep.terms[term].abs();
            let noise = 1e-12 * rep.data_term.abs().max(rep.j_r);
            if !(norm > 0.0) || value <= noise {
                inconclusive = true;
                continue;
            }
            pts.push((rep.r.ln(), value.ln() - norm.ln() / p));
        }
        let exponent = if pts.len() >= 2 { least_squares(&pts).0 } else { f64::NAN };
        fits.push(ScalingFit {
            term: term + 1,
            exponent,
            target: targets[term],
            deviation: (exponent - targets[term]).abs(),
            inconclusive: inconclusive || pts.len() < 2,
        });
    }
    Ok(ScalingReport { p, reports, fits })
}

/// `B y^γ - y` for `y ≥ 0`.
pub fn elementary_lhs(b: f64, y: f64, gamma: f64) -> f64 {
    b * y.powf(gamma) - y
}

/// Upper bound `B^{1/(1-γ)}` of [`elementary_lhs`] for `γ ∈ (0, 1)`.
pub fn elementary_bound(b: f64, gamma: f64) -> f64 {
    b.powf(1.0 / (1.0 - gamma))
}
