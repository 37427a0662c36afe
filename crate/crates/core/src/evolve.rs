//! Time integration of `u_tt + 𝓛u + u_t = F` on the torus: exact propagation
//! of the linear flow per Fourier mode plus a second-order exponential
//! corrector for the Duhamel integral of `F`.

use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::quadrature::GaussLegendre;
use crate::symbols::{DuhamelWeights, KernelValues, OperatorParams};
use crate::torus::{FieldState, Grid, MassAccumulator, NonFinite, Spectral};

/// Steps are drawn from the ladder `dt_max · 2^{-j/LADDER_DIVISIONS}` so that
/// propagators can be reused.
const LADDER_DIVISIONS: f64 = 16.0;
const CACHE_LIMIT: usize = 96;

/// Thresholds at which the first crossing time of `‖u‖_∞` is recorded.
pub const CROSSING_LEVELS: [f64; 6] = [1e3, 1e4, 1e5, 1e6, 1e7, 1e8];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepControl {
    pub dt_max: f64,
    pub safety: f64,
    pub blowup_threshold: f64,
    pub t_end: f64,
    /// First positive recording time.
    pub record_start: f64,
    /// Ratio of consecutive recording times.
    pub record_ratio: f64,
    /// Extra `‖u‖_∞` level whose first crossing is recorded, used when the run
    /// continues past the level that defines the lifespan.
    #[serde(default)]
    pub lifespan_level: Option<f64>,
    /// Uniform recording interval; replaces the geometric grid when set.
    #[serde(default)]
    pub record_step: Option<f64>,
}

impl StepControl {
    pub fn new(t_end: f64) -> Self {
        Self {
            dt_max: 0.05,
            safety: 0.1,
            blowup_threshold: 1e6,
            t_end,
            record_start: 0.1,
            record_ratio: 10f64.powf(1.0 / 24.0),
            lifespan_level: None,
            record_step: None,
        }
    }

    /// Levels whose first crossing times are recorded, ascending.
    pub fn crossing_levels(&self) -> Vec<f64> {
        let mut levels: Vec<f64> = CROSSING_LEVELS.to_vec();
        levels.push(self.blowup_threshold);
        levels.extend(self.lifespan_level);
        levels.sort_by(f64::total_cmp);
        levels.dedup();
        levels
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt_max > 0.0 && self.dt_max.is_finite()) {
            return Err(invalid("dt_max", format!("must be positive, got {}", self.dt_max)));
        }
        if !(self.safety > 0.0 && self.safety <= 1.0) {
            return Err(invalid("safety", format!("must lie in (0, 1], got {}", self.safety)));
        }
        if !(self.blowup_threshold >= 1e3) {
            return Err(invalid(
                "blowup_threshold",
                format!("must be at least 1e3, got {}", self.blowup_threshold),
            ));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(invalid("t_end", format!("must be positive, got {}", self.t_end)));
        }
        if let Some(dt) = self.record_step {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(invalid("record_step", format!("must be positive, got {dt}")));
            }
        }
        if !(self.record_start > 0.0 && self.record_ratio > 1.0) {
            return Err(invalid(
                "record_ratio",
                "recording grid needs record_start > 0 and record_ratio > 1",
            ));
        }
        Ok(())
    }

    /// Recording times `0, t₀, t₀q, …` (or `0, Δ, 2Δ, …`) below `t_end`, then `t_end`.
    pub fn record_times(&self) -> Vec<f64> {
        let mut times = vec![0.0];
        if let Some(dt) = self.record_step {
            for k in 1.. {
                let t = dt * k as f64;
                if t >= self.t_end * (1.0 - 1e-12) {
                    break;
                }
                times.push(t);
            }
            times.push(self.t_end);
            return times;
        }
        for k in 0.. {
            let t = self.record_start * self.record_ratio.powi(k);
            if t >= self.t_end * (1.0 - 1e-12) {
                break;
            }
            times.push(t);
        }
        times.push(self.t_end);
        times
    }
}

/// Forcing term `F` of the system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Source {
    /// `F = 0`.
    Linear,
    /// `F = |u|^p`.
    Power(f64),
    /// `F = |u|^p + f` with `f` chosen so that `u = e^{-t} cos(k·x₁)` is the
    /// exact solution, `k` the `mode`-th wavenumber along the first axis.
    Manufactured { p: f64, mode: usize },
}

impl Source {
    pub fn exponent(&self) -> Option<f64> {
        match *self {
            Source::Linear => None,
            Source::Power(p) | Source::Manufactured { p, .. } => Some(p),
        }
    }

    /// Exact solution of the manufactured problem.
    pub fn manufactured_solution(grid: &Grid, mode: usize, t: f64) -> Vec<f64> {
        let k = mode as f64 * grid.fundamental();
        grid.sample(|[x, _]| (-t).exp() * (k * x).cos())
    }

    /// Spectral `F(t, u)`; returns `∫F dx`.
    fn evaluate(
        &self,
        params: &OperatorParams,
        spectral: &mut Spectral,
        t: f64,
        u: &[f64],
        out: &mut [Complex64],
    ) -> std::result::Result<f64, NonFinite> {
        match *self {
            Source::Linear => {
                out.iter_mut().for_each(|c| *c = Complex64::default());
                Ok(0.0)
            }
            Source::Power(p) => spectral.nonlinearity(u, p, out),
            Source::Manufactured { p, mode } => {
                let grid = *spectral.grid();
                let k = mode as f64 * grid.fundamental();
                let m = params.symbol(k);
                let decay = (-t).exp();
                let forced: Vec<f64> = (0..grid.len())
                    .map(|idx| {
                        let c = (k * grid.position(idx)[0]).cos();
                        u[idx].abs().powf(p) + m * decay * c - (decay * c.abs()).powf(p)
                    })
                    .collect();
                if forced.iter().any(|v| !v.is_finite()) {
                    return Err(NonFinite);
                }
                spectral.forward(&forced, out).map_err(|_| NonFinite)?;
                spectral.dealias(out);
                Ok(grid.volume() * out[0].re)
            }
        }
    }
}

/// Per-class propagator coefficients for one step size.
#[derive(Debug)]
struct Propagator {
    kernels: Vec<KernelValues>,
    weights: Vec<DuhamelWeights>,
}

/// Groups spectral indices by `|k|` so kernels are evaluated once per radius.
#[derive(Debug, Clone)]
struct RadiusClasses {
    class_of: Vec<usize>,
    symbols: Vec<f64>,
}

impl RadiusClasses {
    fn new(grid: &Grid, params: &OperatorParams) -> Self {
        let mut lookup: HashMap<i64, usize> = HashMap::new();
        let mut symbols = Vec::new();
        let mut class_of = Vec::with_capacity(grid.len());
        let k0 = grid.fundamental();
        for idx in 0..grid.len() {
            let [i, j] = grid.unflatten(idx);
            let ki = grid.wave_index(i);
            let kj = if grid.n == 2 { grid.wave_index(j) } else { 0 };
            let key = ki * ki + kj * kj;
            let class = *lookup.entry(key).or_insert_with(|| {
                symbols.push(params.symbol(k0 * (key as f64).sqrt()));
                symbols.len() - 1
            });
            class_of.push(class);
        }
        Self { class_of, symbols }
    }
}

/// Owns the spectral workspace and propagator cache for one run.
pub struct Integrator {
    params: OperatorParams,
    spectral: Spectral,
    classes: RadiusClasses,
    cache: HashMap<u64, Arc<Propagator>>,
}

impl Integrator {
    pub fn new(params: OperatorParams, grid: Grid) -> Result<Self> {
        if params.n != grid.n {
            return Err(invalid(
                "n",
                format!("operator dimension {} differs from grid dimension {}", params.n, grid.n),
            ));
        }
        Ok(Self {
            classes: RadiusClasses::new(&grid, &params),
            spectral: Spectral::new(grid),
            params,
            cache: HashMap::new(),
        })
    }

    pub fn params(&self) -> &OperatorParams {
        &self.params
    }

    pub fn grid(&self) -> &Grid {
        self.spectral.grid()
    }

    pub fn spectral(&mut self) -> &mut Spectral {
        &mut self.spectral
    }

    fn propagator(&mut self, h: f64) -> Arc<Propagator> {
        if let Some(p) = self.cache.get(&h.to_bits()) {
            return p.clone();
        }
        let kernels = self.classes.symbols.iter().map(|&m| KernelValues::from_symbol(m, h)).collect();
        let weights = self.classes.symbols.iter().map(|&m| DuhamelWeights::from_symbol(m, h)).collect();
        let prop = Arc::new(Propagator { kernels, weights });
        if self.cache.len() >= CACHE_LIMIT {
            self.cache.clear();
        }
        self.cache.insert(h.to_bits(), prop.clone());
        prop
    }

    /// Exact linear flow over `h`.
    pub fn linear_step(&mut self, state: &mut FieldState, h: f64) -> Result<()> {
        if !(h > 0.0) {
            return Err(invalid("h", format!("step must be positive, got {h}")));
        }
        let prop = self.propagator(h);
        for (idx, (u, v)) in state.uhat.iter_mut().zip(state.vhat.iter_mut()).enumerate() {
            let kv = &prop.kernels[self.classes.class_of[idx]];
            let (u0, v0) = (*u, *v);
            *u = kv.k0 * u0 + kv.k1 * v0;
            *v = kv.dk0 * u0 + kv.dk1 * v0;
        }
        state.t += h;
        Ok(())
    }

    /// One ETD2 predictor-corrector step given `F̂(t_k)` at the current state.
    /// On success the state is advanced and `∫F*` at the predictor is returned.
    fn etd2_core(
        &mut self,
        state: &mut FieldState,
        h: f64,
        source: &Source,
        f_k: &[Complex64],
        buf: &mut StepBuffers,
    ) -> std::result::Result<f64, NonFinite> {
        let prop = self.propagator(h);
        let class_of = &self.classes.class_of;
        for idx in 0..state.uhat.len() {
            let c = class_of[idx];
            let kv = &prop.kernels[c];
            let w = &prop.weights[c];
            let (u, v) = (state.uhat[idx], state.vhat[idx]);
            let lin_u = kv.k0 * u + kv.k1 * v;
            let lin_v = kv.dk0 * u + kv.dk1 * v;
            buf.lin_u[idx] = lin_u;
            buf.lin_v[idx] = lin_v;
            buf.pred_u[idx] = lin_u + w.w0 * f_k[idx];
        }
        self.spectral.enforce_symmetry(&mut buf.pred_u);
        self.spectral
            .inverse(&buf.pred_u, &mut buf.physical)
            .map_err(|_| NonFinite)?;
        let t1 = state.t + h;
        let rate_star = source.evaluate(&self.params, &mut self.spectral, t1, &buf.physical, &mut buf.f_star)?;
        for idx in 0..state.uhat.len() {
            let c = class_of[idx];
            let w = &prop.weights[c];
            let f0 = f_k[idx];
            let df = buf.f_star[idx] - f0;
            state.uhat[idx] = buf.lin_u[idx] + w.w0 * f0 + (w.w0 - w.w1) * df;
            state.vhat[idx] = buf.lin_v[idx] + w.w0t * f0 + (w.w0 / h) * df;
        }
        self.spectral.enforce_symmetry(&mut state.uhat);
        self.spectral.enforce_symmetry(&mut state.vhat);
        state.t = t1;
        Ok(rate_star)
    }

    /// Public single ETD2 step from `state` (evaluates `F(t_k)` itself).
    pub fn etd2_step(&mut self, state: &mut FieldState, h: f64, source: &Source) -> Result<()> {
        if !(h > 0.0) {
            return Err(invalid("h", format!("step must be positive, got {h}")));
        }
        let len = self.grid().len();
        let mut buf = StepBuffers::new(len);
        let u = state.physical_u(&mut self.spectral)?;
        let mut f_k = vec![Complex64::default(); len];
        source
            .evaluate(&self.params, &mut self.spectral, state.t, &u, &mut f_k)
            .map_err(|_| Error::Precondition("non-finite values in the nonlinearity".into()))?;
        self.etd2_core(state, h, source, &f_k, &mut buf)
            .map_err(|_| Error::Precondition("non-finite values in the nonlinearity".into()))?;
        Ok(())
    }

    /// Integrates until `ctrl.t_end` or blow-up. `observer` is called at every
    /// recording time with the current state and its physical `u`.
    pub fn run<O>(&mut self, state: &mut FieldState, ctrl: &StepControl, source: &Source, mut observer: O) -> Result<RunOutcome>
    where
        O: FnMut(&FieldState, &[f64], &MassAccumulator),
    {
        ctrl.validate()?;
        let grid = *self.grid();
        let len = grid.len();
        let s_record = self.params.sigma_min();
        let mut buf = StepBuffers::new(len);
        let record_times = ctrl.record_times();
        let mut next_record = 0usize;
        while next_record < record_times.len() && record_times[next_record] < state.t - 1e-12 {
            next_record += 1;
        }

        let t_start = state.t;
        let initial_mass_u = self.spectral.mass(&state.uhat);
        let initial_mass_v = self.spectral.mass(&state.vhat);
        let mut accumulator = MassAccumulator::new(initial_mass_u + initial_mass_v);
        let mut series = NormSeries::new(s_record);
        let mut ledger = Vec::new();
        let mut crossings: Vec<Crossing> = Vec::new();
        let mut resolution_violation = None;
        let mut steps = 0usize;
        let levels = ctrl.crossing_levels();

        let mut u = state.physical_u(&mut self.spectral)?;
        let mut f_k = vec![Complex64::default(); len];
        let blown = |u: &[f64]| -> (bool, f64) {
            let linf = u.iter().fold(0.0_f64, |a, v| if v.is_finite() { a.max(v.abs()) } else { f64::INFINITY });
            (!linf.is_finite() || linf > ctrl.blowup_threshold, linf)
        };

        let status;
        loop {
            let (is_blown, linf) = blown(&u);
            for &level in &levels {
                if linf > level && !crossings.iter().any(|c| c.level == level) {
                    crossings.push(Crossing { level, t: state.t });
                }
            }
            if is_blown {
                if series.rows.last().map_or(true, |r| r.t < state.t) && linf.is_finite() {
                    series.push(self.row(state, &u, &accumulator));
                }
                status = RunStatus::BlewUp;
                break;
            }
            if next_record < record_times.len() && (record_times[next_record] - state.t).abs() <= 1e-9 * record_times[next_record].max(1.0) {
                if series.rows.last().map_or(true, |r| r.t < state.t) {
                    series.push(self.row(state, &u, &accumulator));
                    observer(state, &u, &accumulator);
                }
                next_record += 1;
            }
            if state.t >= ctrl.t_end * (1.0 - 1e-12) {
                status = RunStatus::Completed;
                break;
            }
            if resolution_violation.is_none() && self.params.diffusion_length(state.t) > grid.half_length / 4.0 {
                resolution_violation = Some(state.t);
            }

            let rate_k = match source.evaluate(&self.params, &mut self.spectral, state.t, &u, &mut f_k) {
                Ok(r) => r,
                Err(NonFinite) => {
                    status = RunStatus::BlewUp;
                    break;
                }
            };
            let target = next_record_time(&record_times, next_record, ctrl.t_end);
            let h = choose_step(ctrl, source, linf, target - state.t);
            let t0 = state.t;
            let outcome = if source.exponent().is_none() {
                self.linear_step(state, h)?;
                Ok(0.0)
            } else {
                self.etd2_core(state, h, source, &f_k, &mut buf)
            };
            steps += 1;
            match outcome {
                Ok(rate_star) => {
                    accumulator.add_step(t0, rate_k, state.t, rate_star);
                    ledger.push(StepRecord { t: t0, h, rate0: rate_k, rate1: rate_star });
                }
                Err(NonFinite) => {
                    state.t = t0 + h;
                    status = RunStatus::BlewUp;
                    break;
                }
            }
            if (state.t - target).abs() <= 1e-9 * target.max(1.0) {
                state.t = target;
            }
            self.spectral.inverse(&state.uhat, &mut u)?;
        }

        let t_final = state.t;
        Ok(RunOutcome {
            status,
            t_final,
            t_end: ctrl.t_end,
            series,
            mass: accumulator,
            crossings,
            steps,
            ledger,
            resolution_violation,
            t_start,
            initial_mass_u,
            initial_mass_v,
        })
    }

    fn row(&self, state: &FieldState, u: &[f64], acc: &MassAccumulator) -> NormRow {
        let norms = self.spectral.norms(&state.uhat, u, self.params.sigma_min());
        NormRow {
            t: state.t,
            l2: norms.l2,
            hs: norms.hs,
            linf: norms.linf,
            l1: norms.l1,
            mass: self.spectral.mass(&state.uhat),
            nonlinear_mass: acc.nonlinear_mass,
        }
    }
}

struct StepBuffers {
    lin_u: Vec<Complex64>,
    lin_v: Vec<Complex64>,
    pred_u: Vec<Complex64>,
    f_star: Vec<Complex64>,
    physical: Vec<f64>,
}

impl StepBuffers {
    fn new(len: usize) -> Self {
        Self {
            lin_u: vec![Complex64::default(); len],
            lin_v: vec![Complex64::default(); len],
            pred_u: vec![Complex64::default(); len],
            f_star: vec![Complex64::default(); len],
            physical: vec![0.0; len],
        }
    }
}

fn next_record_time(times: &[f64], next: usize, t_end: f64) -> f64 {
    times.get(next).copied().unwrap_or(t_end).min(t_end)
}

/// Adaptive step on the ladder, clipped so that `remaining` is hit exactly.
fn choose_step(ctrl: &StepControl, source: &Source, linf: f64, remaining: f64) -> f64 {
    let mut target = ctrl.dt_max;
    if let Some(p) = source.exponent() {
        if linf > 0.0 {
            target = target.min(ctrl.safety / linf.powf(p - 1.0));
        }
    }
    let rungs = (LADDER_DIVISIONS * (ctrl.dt_max / target).log2()).ceil().max(0.0);
    let h = ctrl.dt_max * (-rungs / LADDER_DIVISIONS).exp2();
    if remaining <= h * (1.0 + 1e-9) {
        remaining
    } else {
        h
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RunStatus {
    Completed,
    BlewUp,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormRow {
    pub t: f64,
    pub l2: f64,
    pub hs: f64,
    pub linf: f64,
    pub l1: f64,
    pub mass: f64,
    pub nonlinear_mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormSeries {
    /// Order `s` of the recorded `Ḣ^s` column.
    pub hs_order: f64,
    pub rows: Vec<NormRow>,
}

impl NormSeries {
    pub fn new(hs_order: f64) -> Self {
        Self { hs_order, rows: Vec::new() }
    }

    fn push(&mut self, row: NormRow) {
        debug_assert!(self.rows.last().map_or(true, |r| r.t < row.t));
        self.rows.push(row);
    }

    /// `(t, column)` pairs with `t` in `[lo, hi]`.
    pub fn window<F: Fn(&NormRow) -> f64>(&self, lo: f64, hi: f64, column: F) -> Vec<(f64, f64)> {
        self.rows
            .iter()
            .filter(|r| r.t >= lo * (1.0 - 1e-12) && r.t <= hi * (1.0 + 1e-12))
            .map(|r| (r.t, column(r)))
            .collect()
    }

    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for row in &self.rows {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// First time `‖u‖_∞` exceeded `level`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Crossing {
    pub level: f64,
    pub t: f64,
}

/// One accepted step: `∫F` at its start (`rate0`) and at the predictor (`rate1`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepRecord {
    pub t: f64,
    pub h: f64,
    pub rate0: f64,
    pub rate1: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunOutcome {
    pub status: RunStatus,
    pub t_final: f64,
    pub t_end: f64,
    pub series: NormSeries,
    pub mass: MassAccumulator,
    pub crossings: Vec<Crossing>,
    pub steps: usize,
    #[serde(skip)]
    pub ledger: Vec<StepRecord>,
    /// First time the diffusion length exceeded `L/4`.
    pub resolution_violation: Option<f64>,
    pub t_start: f64,
    pub initial_mass_u: f64,
    pub initial_mass_v: f64,
}

impl RunOutcome {
    pub fn crossing_time(&self, level: f64) -> Option<f64> {
        self.crossings.iter().find(|c| c.level == level).map(|c| c.t)
    }

    /// Zero-mode prediction `M(t) = M₀ + (1-e^{-t})M₁ + ∫₀ᵗ (1-e^{-(t-τ)}) N(τ) dτ`
    /// with `N` the piecewise-linear source integral recorded in the step ledger.
    pub fn zero_mode_prediction(&self, t: f64) -> f64 {
        let gl = GaussLegendre::new(6);
        let mut acc = self.initial_mass_u + (-(-(t - self.t_start)).exp_m1()) * self.initial_mass_v;
        for rec in &self.ledger {
            let t1 = rec.t + rec.h;
            if t1 > t * (1.0 + 1e-12) {
                break;
            }
            let f = |tau: f64| {
                let lin = rec.rate0 + (tau - rec.t) / rec.h * (rec.rate1 - rec.rate0);
                -(-(t - tau)).exp_m1() * lin
            };
            acc += gl.integrate(&f, rec.t, t1);
        }
        acc
    }

    /// Largest relative gap between recorded masses and the zero-mode prediction.
    pub fn zero_mode_residual(&self) -> f64 {
        self.series
            .rows
            .iter()
            .map(|r| {
                let pred = self.zero_mode_prediction(r.t);
                (r.mass - pred).abs() / pred.abs().max(r.mass.abs()).max(f64::MIN_POSITIVE)
            })
            .fold(0.0, f64::max)
    }
}
