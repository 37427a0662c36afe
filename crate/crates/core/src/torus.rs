//! Periodic discretisation on `[-L, L)ⁿ` (n = 1 or 2).
//!
//! Spectral coefficients are Fourier-series coefficients about the origin,
//! `u(x) = Σ_k û_k e^{ik·x}` with `k ∈ (π/L)ℤⁿ`, so a field centred at `x = 0`
//! that is even has real coefficients, the mass is `(2L)ⁿ û_0` and Parseval reads
//! `‖u‖²_{L²} = (2L)ⁿ Σ |û_k|²`.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::symbols::OperatorParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub n: usize,
    /// Points per dimension.
    pub size: usize,
    /// Half box length `L`.
    pub half_length: f64,
}

impl Grid {
    pub fn new(n: usize, size: usize, half_length: f64) -> Result<Self> {
        if !(n == 1 || n == 2) {
            return Err(invalid("n", format!("torus grids support n = 1 or 2, got {n}")));
        }
        if size < 64 || !size.is_power_of_two() {
            return Err(invalid("grid_n", format!("must be a power of two >= 64, got {size}")));
        }
        if !(half_length.is_finite() && half_length > 0.0) {
            return Err(invalid("box_l", format!("must be positive, got {half_length}")));
        }
        Ok(Self { n, size, half_length })
    }

    pub fn len(&self) -> usize {
        self.size.pow(self.n as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.half_length / self.size as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.dx().powi(self.n as i32)
    }

    pub fn volume(&self) -> f64 {
        (2.0 * self.half_length).powi(self.n as i32)
    }

    pub fn fundamental(&self) -> f64 {
        std::f64::consts::PI / self.half_length
    }

    /// Integer wavenumber of FFT index `i` in `[-N/2, N/2)`.
    pub fn wave_index(&self, i: usize) -> i64 {
        let half = self.size / 2;
        if i < half {
            i as i64
        } else {
            i as i64 - self.size as i64
        }
    }

    pub fn coordinate(&self, j: usize) -> f64 {
        -self.half_length + j as f64 * self.dx()
    }

    /// Per-dimension index tuple of a flat (row-major) index.
    pub fn unflatten(&self, idx: usize) -> [usize; 2] {
        if self.n == 1 {
            [idx, 0]
        } else {
            [idx / self.size, idx % self.size]
        }
    }

    /// Spatial position of a flat index.
    pub fn position(&self, idx: usize) -> [f64; 2] {
        let [i, j] = self.unflatten(idx);
        if self.n == 1 {
            [self.coordinate(i), 0.0]
        } else {
            [self.coordinate(i), self.coordinate(j)]
        }
    }

    pub fn radius(&self, idx: usize) -> f64 {
        let [x, y] = self.position(idx);
        (x * x + y * y).sqrt()
    }

    /// `|k|` of every spectral index.
    pub fn wavenumber_radii(&self) -> Vec<f64> {
        let k0 = self.fundamental();
        (0..self.len())
            .map(|idx| {
                let [i, j] = self.unflatten(idx);
                let kx = self.wave_index(i) as f64;
                let ky = if self.n == 2 { self.wave_index(j) as f64 } else { 0.0 };
                k0 * (kx * kx + ky * ky).sqrt()
            })
            .collect()
    }

    /// Largest retained integer wavenumber under the 2/3 rule.
    pub fn dealias_cutoff(&self) -> i64 {
        ((self.size - 1) / 3) as i64
    }

    pub fn is_retained(&self, idx: usize) -> bool {
        let cut = self.dealias_cutoff();
        let [i, j] = self.unflatten(idx);
        let ok_i = self.wave_index(i).abs() <= cut;
        if self.n == 1 {
            ok_i
        } else {
            ok_i && self.wave_index(j).abs() <= cut
        }
    }

    /// Flat index of the mode `-k`.
    pub fn mirror(&self, idx: usize) -> usize {
        let [i, j] = self.unflatten(idx);
        let mi = (self.size - i) % self.size;
        if self.n == 1 {
            mi
        } else {
            mi * self.size + (self.size - j) % self.size
        }
    }

    /// Samples `f(x)` on the grid.
    pub fn sample<F: Fn([f64; 2]) -> f64>(&self, f: F) -> Vec<f64> {
        (0..self.len()).map(|idx| f(self.position(idx))).collect()
    }

    pub fn positions(&self) -> Vec<[f64; 2]> {
        (0..self.len()).map(|idx| self.position(idx)).collect()
    }
}

/// FFT plans plus the phase that re-centres coefficients at `x = 0`.
#[derive(Clone)]
pub struct Spectral {
    grid: Grid,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    phase: Vec<f64>,
    radii: Arc<Vec<f64>>,
    scratch: Vec<Complex64>,
    column: Vec<Complex64>,
}

impl std::fmt::Debug for Spectral {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Spectral").field("grid", &self.grid).finish()
    }
}

impl Spectral {
    pub fn new(grid: Grid) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(grid.size);
        let inverse = planner.plan_fft_inverse(grid.size);
        let scratch_len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        let phase = (0..grid.len())
            .map(|idx| {
                let [i, j] = grid.unflatten(idx);
                let mut parity = grid.wave_index(i);
                if grid.n == 2 {
                    parity += grid.wave_index(j);
                }
                if parity.rem_euclid(2) == 0 {
                    1.0
                } else {
                    -1.0
                }
            })
            .collect();
        Self {
            grid,
            forward,
            inverse,
            phase,
            radii: Arc::new(grid.wavenumber_radii()),
            scratch: vec![Complex64::default(); scratch_len],
            column: vec![Complex64::default(); grid.size],
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    /// Physical samples to spectral coefficients.
    pub fn forward(&mut self, physical: &[f64], out: &mut [Complex64]) -> Result<()> {
        check_len(self.grid.len(), physical.len())?;
        check_len(self.grid.len(), out.len())?;
        for (o, &v) in out.iter_mut().zip(physical) {
            *o = Complex64::new(v, 0.0);
        }
        self.transform(out, true);
        let norm = 1.0 / self.grid.len() as f64;
        for (o, &ph) in out.iter_mut().zip(&self.phase) {
            *o *= norm * ph;
        }
        Ok(())
    }

    /// Spectral coefficients to physical samples; the imaginary residue is dropped.
    pub fn inverse(&mut self, spectral: &[Complex64], out: &mut [f64]) -> Result<()> {
        check_len(self.grid.len(), spectral.len())?;
        check_len(self.grid.len(), out.len())?;
        let mut buf: Vec<Complex64> = spectral.iter().zip(&self.phase).map(|(c, &ph)| c * ph).collect();
        self.transform(&mut buf, false);
        for (o, c) in out.iter_mut().zip(&buf) {
            *o = c.re;
        }
        Ok(())
    }

    /// Complex inverse, keeping imaginary parts (for round-trip checks of complex modes).
    pub fn inverse_complex(&mut self, spectral: &[Complex64]) -> Result<Vec<Complex64>> {
        check_len(self.grid.len(), spectral.len())?;
        let mut buf: Vec<Complex64> = spectral.iter().zip(&self.phase).map(|(c, &ph)| c * ph).collect();
        self.transform(&mut buf, false);
        Ok(buf)
    }

    /// Complex forward transform (normalised, centred).
    pub fn forward_complex(&mut self, physical: &[Complex64]) -> Result<Vec<Complex64>> {
        check_len(self.grid.len(), physical.len())?;
        let mut buf = physical.to_vec();
        self.transform(&mut buf, true);
        let norm = 1.0 / self.grid.len() as f64;
        for (o, &ph) in buf.iter_mut().zip(&self.phase) {
            *o *= norm * ph;
        }
        Ok(buf)
    }

    fn transform(&mut self, data: &mut [Complex64], forward: bool) {
        let plan = if forward { &self.forward } else { &self.inverse };
        let n = self.grid.size;
        for row in data.chunks_exact_mut(n) {
            plan.process_with_scratch(row, &mut self.scratch);
        }
        if self.grid.n == 2 {
            for col in 0..n {
                for r in 0..n {
                    self.column[r] = data[r * n + col];
                }
                plan.process_with_scratch(&mut self.column, &mut self.scratch);
                for r in 0..n {
                    data[r * n + col] = self.column[r];
                }
            }
        }
    }

    /// Multiplies every coefficient by `m(|k|)`.
    pub fn apply_multiplier<M: Fn(f64) -> f64>(&self, spectral: &mut [Complex64], m: M) {
        for (c, &r) in spectral.iter_mut().zip(self.radii.iter()) {
            *c *= m(r);
        }
    }

    /// Zeroes the modes outside the 2/3-rule band.
    pub fn dealias(&self, spectral: &mut [Complex64]) {
        for (idx, c) in spectral.iter_mut().enumerate() {
            if !self.grid.is_retained(idx) {
                *c = Complex64::default();
            }
        }
    }

    /// `|u|^p` in spectral space, dealiased. Fails with [`NonFinite`] if any
    /// physical value (or its power) is not finite.
    pub fn nonlinearity(&mut self, physical: &[f64], p: f64, out: &mut [Complex64]) -> std::result::Result<f64, NonFinite> {
        let mut powered = Vec::with_capacity(physical.len());
        for &u in physical {
            let v = u.abs().powf(p);
            if !v.is_finite() {
                return Err(NonFinite);
            }
            powered.push(v);
        }
        let integral = powered.iter().sum::<f64>() * self.grid.cell_volume();
        self.forward(&powered, out).map_err(|_| NonFinite)?;
        self.dealias(out);
        Ok(integral)
    }

    /// Projects onto conjugate-symmetric coefficients, `û_{-k} = conj(û_k)`.
    pub fn enforce_symmetry(&self, spectral: &mut [Complex64]) {
        for idx in 0..spectral.len() {
            let m = self.grid.mirror(idx);
            if m < idx {
                continue;
            }
            if m == idx {
                spectral[idx].im = 0.0;
            } else {
                let avg = 0.5 * (spectral[idx] + spectral[m].conj());
                spectral[idx] = avg;
                spectral[m] = avg.conj();
            }
        }
    }

    pub fn norms(&self, spectral: &[Complex64], physical: &[f64], s: f64) -> Norms {
        let vol = self.grid.volume();
        let mut l2 = 0.0;
        let mut hs = 0.0;
        for (c, &r) in spectral.iter().zip(self.radii.iter()) {
            let a = c.norm_sqr();
            l2 += a;
            if r > 0.0 {
                hs += r.powf(2.0 * s) * a;
            } else if s == 0.0 {
                hs += a;
            }
        }
        let linf = physical.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
        let l1 = physical.iter().map(|v| v.abs()).sum::<f64>() * self.grid.cell_volume();
        Norms {
            l2: (vol * l2).sqrt(),
            hs: (vol * hs).sqrt(),
            linf,
            l1,
        }
    }

    /// Homogeneous Sobolev norm from coefficients alone.
    pub fn hs_norm(&self, spectral: &[Complex64], s: f64) -> f64 {
        let mut acc = 0.0;
        for (c, &r) in spectral.iter().zip(self.radii.iter()) {
            if r > 0.0 {
                acc += r.powf(2.0 * s) * c.norm_sqr();
            } else if s == 0.0 {
                acc += c.norm_sqr();
            }
        }
        (self.grid.volume() * acc).sqrt()
    }

    pub fn mass(&self, spectral: &[Complex64]) -> f64 {
        self.grid.volume() * spectral[0].re
    }

    /// Applies `-aΔ + b(-Δ)^σ` to a physical field.
    pub fn apply_operator(&mut self, params: &OperatorParams, physical: &[f64]) -> Result<Vec<f64>> {
        let mut spec = vec![Complex64::default(); self.grid.len()];
        self.forward(physical, &mut spec)?;
        self.apply_multiplier(&mut spec, |r| params.symbol(r));
        let mut out = vec![0.0; self.grid.len()];
        self.inverse(&spec, &mut out)?;
        Ok(out)
    }

    /// Applies `|k|^{2σ}` (the fractional Laplacian `(-Δ)^σ`) to a physical field.
    pub fn fractional_laplacian(&mut self, sigma: f64, physical: &[f64]) -> Result<Vec<f64>> {
        let mut spec = vec![Complex64::default(); self.grid.len()];
        self.forward(physical, &mut spec)?;
        self.apply_multiplier(&mut spec, |r| if r == 0.0 { 0.0 } else { r.powf(2.0 * sigma) });
        let mut out = vec![0.0; self.grid.len()];
        self.inverse(&spec, &mut out)?;
        Ok(out)
    }
}

fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::SizeMismatch { expected, found });
    }
    Ok(())
}

/// Non-finite value met while forming the nonlinearity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NonFinite;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Norms {
    pub l2: f64,
    pub hs: f64,
    pub linf: f64,
    pub l1: f64,
}

/// Spectral state `(û, v̂)` of `(u, u_t)` at time `t`.
#[derive(Debug, Clone)]
pub struct FieldState {
    pub grid: Grid,
    pub uhat: Vec<Complex64>,
    pub vhat: Vec<Complex64>,
    pub t: f64,
}

impl FieldState {
    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            uhat: vec![Complex64::default(); grid.len()],
            vhat: vec![Complex64::default(); grid.len()],
            t: 0.0,
        }
    }

    /// State from physical `(u, u_t)`; both are dealiased.
    pub fn from_physical(spectral: &mut Spectral, u: &[f64], ut: &[f64]) -> Result<Self> {
        let grid = *spectral.grid();
        let mut state = Self::zeros(grid);
        spectral.forward(u, &mut state.uhat)?;
        spectral.forward(ut, &mut state.vhat)?;
        spectral.dealias(&mut state.uhat);
        spectral.dealias(&mut state.vhat);
        Ok(state)
    }

    pub fn physical_u(&self, spectral: &mut Spectral) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.grid.len()];
        spectral.inverse(&self.uhat, &mut out)?;
        Ok(out)
    }
}

/// Running mass bookkeeping: `ε P_{u0+u1}` and `∫₀ᵗ ∫|u|^p dx dτ` by the trapezoid rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MassAccumulator {
    pub initial_mass: f64,
    pub nonlinear_mass: f64,
    /// Most recent `(t, ∫|u|^p dx)` sample.
    pub last_sample: Option<(f64, f64)>,
}

impl MassAccumulator {
    pub fn new(initial_mass: f64) -> Self {
        Self {
            initial_mass,
            nonlinear_mass: 0.0,
            last_sample: None,
        }
    }

    /// Adds the trapezoid over one step with end-point rates `rate0`, `rate1`.
    pub fn add_step(&mut self, t0: f64, rate0: f64, t1: f64, rate1: f64) {
        debug_assert!(t1 >= t0 && rate0 >= 0.0 && rate1 >= 0.0);
        self.nonlinear_mass += 0.5 * (t1 - t0) * (rate0 + rate1);
        self.last_sample = Some((t1, rate1));
    }

    pub fn theta(&self) -> f64 {
        self.initial_mass + self.nonlinear_mass
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn grid1() -> Grid {
        Grid::new(1, 64, 3.0).unwrap()
    }

    #[test]
    fn grid_validation() {
        assert!(Grid::new(3, 64, 1.0).is_err());
        assert!(Grid::new(1, 48, 1.0).is_err());
        assert!(Grid::new(1, 32, 1.0).is_err());
        assert!(Grid::new(2, 64, -1.0).is_err());
    }

    #[test]
    fn single_mode_round_trip() {
        let g = grid1();
        let mut sp = Spectral::new(g);
        let k = PI / g.half_length;
        let field: Vec<Complex64> = (0..g.len())
            .map(|j| Complex64::from_polar(1.0, k * g.coordinate(j)))
            .collect();
        let coeffs = sp.forward_complex(&field).unwrap();
        assert!((coeffs[1] - Complex64::new(1.0, 0.0)).norm() < 1e-14);
        for (i, c) in coeffs.iter().enumerate() {
            if i != 1 {
                assert!(c.norm() < 1e-14);
            }
        }
        let back = sp.inverse_complex(&coeffs).unwrap();
        for (a, b) in back.iter().zip(&field) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn constant_field_has_only_zero_mode() {
        let g = Grid::new(2, 64, 1.0).unwrap();
        let mut sp = Spectral::new(g);
        let mut out = vec![Complex64::default(); g.len()];
        sp.forward(&vec![2.5; g.len()], &mut out).unwrap();
        assert_relative_eq!(out[0].re, 2.5, max_relative = 1e-14);
        assert!(out[1..].iter().all(|c| c.norm() < 1e-14));
        assert_relative_eq!(sp.mass(&out), 2.5 * 4.0, max_relative = 1e-14);
    }

    #[test]
    fn parseval() {
        let g = Grid::new(2, 64, 2.0).unwrap();
        let mut sp = Spectral::new(g);
        let u = g.sample(|[x, y]| (x * 1.3).sin() * (-y * y).exp() + 0.2 * (3.0 * y).cos());
        let mut c = vec![Complex64::default(); g.len()];
        sp.forward(&u, &mut c).unwrap();
        let phys = (u.iter().map(|v| v * v).sum::<f64>() * g.cell_volume()).sqrt();
        let norms = sp.norms(&c, &u, 0.0);
        assert_relative_eq!(norms.l2, phys, max_relative = 1e-12);
        assert_relative_eq!(norms.hs, norms.l2, max_relative = 1e-14);
        let mut back = vec![0.0; g.len()];
        sp.inverse(&c, &mut back).unwrap();
        for (a, b) in back.iter().zip(&u) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn operator_eigenvalue_on_single_mode() {
        let g = grid1();
        let mut sp = Spectral::new(g);
        let params = OperatorParams::new(0.7, 1.9, 0.35, 1).unwrap();
        let k = PI / g.half_length;
        let u = g.sample(|[x, _]| (k * x).cos());
        let lu = sp.apply_operator(&params, &u).unwrap();
        let eig = 0.7 * k * k + 1.9 * k.powf(0.7);
        for (a, b) in lu.iter().zip(&u) {
            assert!((a - eig * b).abs() < 1e-12, "{a} vs {}", eig * b);
        }
    }

    #[test]
    fn classical_limit_matches_laplacian() {
        // a' = a + b with b' → 0 on a σ > 1 instance reproduces the σ = 1 operator.
        let g = Grid::new(1, 128, 10.0).unwrap();
        let mut sp = Spectral::new(g);
        let (a, b) = (0.4, 0.9);
        let limit = OperatorParams::new(a + b, 1e-300, 1.5, 1).unwrap();
        let u = g.sample(|[x, _]| (-x * x / 2.0).exp());
        let lu = sp.apply_operator(&limit, &u).unwrap();
        // -(a+b) d²/dx² e^{-x²/2} = (a+b)(1 - x²) e^{-x²/2}
        for (idx, v) in lu.iter().enumerate() {
            let x = g.coordinate(idx);
            let exact = (a + b) * (1.0 - x * x) * (-x * x / 2.0).exp();
            assert!((v - exact).abs() < 1e-10, "x={x}: {v} vs {exact}");
        }
    }

    #[test]
    fn operator_image_has_zero_mass() {
        let g = grid1();
        let mut sp = Spectral::new(g);
        let params = OperatorParams::new(1.0, 1.0, 0.5, 1).unwrap();
        let u = g.sample(|[x, _]| (-x * x).exp() + 0.1 * x);
        let lu = sp.apply_operator(&params, &u).unwrap();
        let mass = lu.iter().sum::<f64>() * g.cell_volume();
        assert!(mass.abs() < 1e-13);
    }

    #[test]
    fn nonlinearity_of_constant_and_zero() {
        let g = grid1();
        let mut sp = Spectral::new(g);
        let mut out = vec![Complex64::default(); g.len()];
        sp.nonlinearity(&vec![0.0; g.len()], 3.0, &mut out).unwrap();
        assert!(out.iter().all(|c| c.norm() == 0.0));
        let n = sp.nonlinearity(&vec![-2.0; g.len()], 1.5, &mut out).unwrap();
        assert_relative_eq!(out[0].re, 2.0_f64.powf(1.5), max_relative = 1e-14);
        assert_relative_eq!(n, 2.0_f64.powf(1.5) * 6.0, max_relative = 1e-14);
        assert!(out[1..].iter().all(|c| c.norm() < 1e-14));
    }

    #[test]
    fn nonlinearity_signals_non_finite() {
        let g = grid1();
        let mut sp = Spectral::new(g);
        let mut u = vec![1.0; g.len()];
        u[5] = f64::NAN;
        let mut out = vec![Complex64::default(); g.len()];
        assert_eq!(sp.nonlinearity(&u, 2.0, &mut out), Err(NonFinite));
        u[5] = 1e200;
        assert_eq!(sp.nonlinearity(&u, 2.0, &mut out), Err(NonFinite));
    }

    #[test]
    fn squaring_a_mode_doubles_its_frequency() {
        let g = grid1();
        let mut sp = Spectral::new(g);
        let k = 5.0 * PI / g.half_length;
        let u = g.sample(|[x, _]| (k * x).cos());
        let mut out = vec![Complex64::default(); g.len()];
        sp.nonlinearity(&u, 2.0, &mut out).unwrap();
        // cos² = 1/2 + cos(2kx)/2
        assert!((out[0].re - 0.5).abs() < 1e-14);
        assert!((out[10].re - 0.25).abs() < 1e-14 && (out[64 - 10].re - 0.25).abs() < 1e-14);
        for (i, c) in out.iter().enumerate() {
            if ![0, 10, 54].contains(&i) {
                assert!(c.norm() < 1e-14, "mode {i}: {c}");
            }
        }
    }

    #[test]
    fn hs_norm_of_single_mode() {
        let g = Grid::new(1, 64, 4.0).unwrap();
        let mut sp = Spectral::new(g);
        let k = 3.0 * PI / g.half_length;
        let amp = 0.8;
        let u = g.sample(|[x, _]| amp * (k * x).cos());
        let mut c = vec![Complex64::default(); g.len()];
        sp.forward(&u, &mut c).unwrap();
        for &s in &[0.0, 0.25, 0.5, 1.0] {
            // ∫ |D^s u|² = k^{2s} amp² L
            let direct = (k.powf(2.0 * s) * amp * amp * g.half_length).sqrt();
            assert_relative_eq!(sp.hs_norm(&c, s), direct, max_relative = 1e-13);
        }
    }

    #[test]
    fn gaussian_mass_is_normalised() {
        let g = Grid::new(1, 1024, 40.0).unwrap();
        let mut sp = Spectral::new(g);
        let u = g.sample(|[x, _]| (-x * x / 4.0).exp() / (4.0 * PI).sqrt());
        let mut c = vec![Complex64::default(); g.len()];
        sp.forward(&u, &mut c).unwrap();
        assert!((sp.mass(&c) - 1.0).abs() < 1e-10);
        let g2 = Grid::new(2, 256, 20.0).unwrap();
        let mut sp2 = Spectral::new(g2);
        let u2 = g2.sample(|[x, y]| (-(x * x + y * y) / 4.0).exp() / (4.0 * PI));
        let mut c2 = vec![Complex64::default(); g2.len()];
        sp2.forward(&u2, &mut c2).unwrap();
        assert!((sp2.mass(&c2) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn symmetry_projection_restores_real_field() {
        let g = Grid::new(2, 64, 1.0).unwrap();
        let mut sp = Spectral::new(g);
        let u = g.sample(|[x, y]| (2.0 * x + y).sin());
        let mut c = vec![Complex64::default(); g.len()];
        sp.forward(&u, &mut c).unwrap();
        let original = c.clone();
        c[7] += Complex64::new(0.0, 1e-3);
        sp.enforce_symmetry(&mut c);
        for idx in 0..c.len() {
            let m = g.mirror(idx);
            assert!((c[idx] - c[m].conj()).norm() < 1e-15);
        }
        sp.enforce_symmetry(&mut c);
        assert!((c[0] - original[0]).norm() < 1e-15);
    }

    #[test]
    fn mass_accumulator_is_monotone() {
        let mut acc = MassAccumulator::new(0.3);
        acc.add_step(0.0, 1.0, 0.5, 2.0);
        let first = acc.nonlinear_mass;
        acc.add_step(0.5, 2.0, 1.0, 0.0);
        assert!(acc.nonlinear_mass >= first);
        assert_relative_eq!(acc.theta(), 0.3 + 0.75 + 0.5);
    }
}
