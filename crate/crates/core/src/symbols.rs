//! Fourier symbol of the mixed operator `-aΔ + b(-Δ)^σ` and everything that
//! can be evaluated exactly from it: characteristic roots, the two solution
//! kernels `K̂0`, `K̂1` of the damped wave flow, the diffusion profile `Ĝ`,
//! the closed-form exponents, and the Duhamel moments used by the time
//! integrator.
//!
//! All kernels are written through `δ² = (1 - 4m)/4`, the squared half-gap
//! between the roots `λ± = -1/2 ± δ`:
//!
//! ```text
//! K̂1(t) = e^{-t/2} sinh(δt)/δ
//! K̂0(t) = e^{-t/2} (cosh(δt) + sinh(δt)/(2δ))
//! ```
//!
//! which is real in every regime (δ imaginary turns sinh/cosh into sin/cos).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Half-width of the discriminant band treated as near-degenerate.
pub const DEGENERATE_BAND: f64 = 1e-6;

/// Above this value of `|δ² t²|` the closed hyperbolic/trigonometric forms are
/// used; below it, the Taylor series in `δ² t²`.
const SERIES_SWITCH: f64 = 0.1;

/// Coefficients and order of `-aΔ + b(-Δ)^σ` in dimension `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatorParams {
    pub a: f64,
    pub b: f64,
    pub sigma: f64,
    pub n: usize,
}

impl OperatorParams {
    pub fn new(a: f64, b: f64, sigma: f64, n: usize) -> Result<Self> {
        if !(a.is_finite() && a > 0.0) {
            return Err(invalid("a", format!("must be positive and finite, got {a}")));
        }
        if !(b.is_finite() && b > 0.0) {
            return Err(invalid("b", format!("must be positive and finite, got {b}")));
        }
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(invalid("sigma", format!("must be positive and finite, got {sigma}")));
        }
        if sigma == 1.0 {
            return Err(Error::SigmaExcluded);
        }
        if n == 0 {
            return Err(invalid("n", "dimension must be at least 1"));
        }
        Ok(Self { a, b, sigma, n })
    }

    pub fn sigma_min(&self) -> f64 {
        self.sigma.min(1.0)
    }

    pub fn sigma_max(&self) -> f64 {
        self.sigma.max(1.0)
    }

    /// `1 + 2σ_min/n`.
    pub fn p_crit(&self) -> f64 {
        1.0 + 2.0 * self.sigma_min() / self.n as f64
    }

    pub fn is_anomalous(&self) -> bool {
        self.sigma < 1.0
    }

    /// `m(r) = a r² + b r^{2σ}`.
    pub fn symbol(&self, r: f64) -> f64 {
        debug_assert!(r >= 0.0);
        if r == 0.0 {
            return 0.0;
        }
        self.a * r * r + self.b * r.powf(2.0 * self.sigma)
    }

    pub fn char_roots(&self, r: f64) -> CharacteristicRoots {
        CharacteristicRoots::from_symbol(self.symbol(r))
    }

    pub fn kernel_eval(&self, t: f64, r: f64) -> KernelValues {
        KernelValues::from_symbol(self.symbol(r), t)
    }

    /// Straight transcription of the representation formula with complex
    /// roots. Loses accuracy near the degenerate point; kept as a cross-check.
    pub fn kernel_eval_complex(&self, t: f64, r: f64) -> KernelValues {
        let m = self.symbol(r);
        let roots = CharacteristicRoots::from_symbol(m);
        let (lp, lm) = (roots.lambda_plus, roots.lambda_minus);
        let ep = (lp * t).exp();
        let em = (lm * t).exp();
        let gap = lp - lm;
        let k0 = (lp * em - lm * ep) / gap;
        let k1 = (ep - em) / gap;
        let dk0 = (lp * lm * (em - ep)) / gap;
        let dk1 = (lp * ep - lm * em) / gap;
        KernelValues {
            k0: k0.re,
            k1: k1.re,
            dk0: dk0.re,
            dk1: dk1.re,
        }
    }

    /// Fourier multiplier of the diffusion profile: `e^{-b r^{2σ} t}` for
    /// σ < 1 and `e^{-a r² t}` for σ > 1.
    pub fn profile_hat(&self, t: f64, r: f64) -> f64 {
        (-self.profile_rate(r) * t).exp()
    }

    /// Exponent rate of [`Self::profile_hat`].
    pub fn profile_rate(&self, r: f64) -> f64 {
        if r == 0.0 {
            0.0
        } else if self.is_anomalous() {
            self.b * r.powf(2.0 * self.sigma)
        } else {
            self.a * r * r
        }
    }

    /// `min{2-2σ, 2σ}` for σ < 1, `min{2, 2σ-2}` for σ > 1.
    pub fn alpha_min(&self) -> f64 {
        if self.is_anomalous() {
            (2.0 - 2.0 * self.sigma).min(2.0 * self.sigma)
        } else {
            2.0_f64.min(2.0 * self.sigma - 2.0)
        }
    }

    /// Polynomial decay rate `(n+2s)/(4σ_min)` of the `Ḣ^s` norm.
    pub fn decay_exponent(&self, s: f64) -> f64 {
        (self.n as f64 + 2.0 * s) / (4.0 * self.sigma_min())
    }

    /// Exponent of the sub-critical lifespan law `T_ε ≈ ε^{exp}`.
    pub fn lifespan_exponent(&self, p: f64) -> Result<f64> {
        let p_crit = self.p_crit();
        if p >= p_crit || is_critical(p, p_crit) {
            return Err(Error::LifespanUndefined { p, p_crit });
        }
        let sm = self.sigma_min();
        let n = self.n as f64;
        Ok(-2.0 * sm * (p - 1.0) / (2.0 * sm - n * (p - 1.0)))
    }

    pub fn exponents(&self, s: f64, p: f64) -> Result<Exponents> {
        if !(0.0..=self.sigma_min() + 1e-15).contains(&s) {
            return Err(invalid("s", format!("must lie in [0, sigma_min = {}]", self.sigma_min())));
        }
        if !(p > 1.0) {
            return Err(invalid("p", format!("must exceed 1, got {p}")));
        }
        let p_crit = self.p_crit();
        Ok(Exponents {
            p_crit,
            sigma_min: self.sigma_min(),
            sigma_max: self.sigma_max(),
            decay_exp: self.decay_exponent(s),
            alpha_min: self.alpha_min(),
            lifespan_exp: self.lifespan_exponent(p).ok(),
            critical: is_critical(p, p_crit),
        })
    }

    /// Checks the existence-theorem hypotheses for the power `p`: `p ≥ 2`,
    /// `p ≤ n/(n-2σ_min)` when `n > 2σ_min`, and `p > p_crit`.
    pub fn hypotheses(&self, p: f64) -> Hypotheses {
        let sm = self.sigma_min();
        let n = self.n as f64;
        let gn_upper = if n > 2.0 * sm { Some(n / (n - 2.0 * sm)) } else { None };
        let gn_admissible = p >= 2.0 && gn_upper.map_or(true, |u| p <= u);
        let p_crit = self.p_crit();
        Hypotheses {
            gn_admissible,
            gn_upper,
            supercritical: p > p_crit && !is_critical(p, p_crit),
            blowup_range: p <= p_crit || is_critical(p, p_crit),
        }
    }

    pub fn duhamel_weights(&self, h: f64, r: f64) -> DuhamelWeights {
        DuhamelWeights::from_symbol(self.symbol(r), h)
    }

    /// Length scale reached by the diffusion profile at time `t`.
    pub fn diffusion_length(&self, t: f64) -> f64 {
        if self.is_anomalous() {
            (self.b * t).powf(1.0 / (2.0 * self.sigma))
        } else {
            (self.a * t).sqrt()
        }
    }
}

pub(crate) fn is_critical(p: f64, p_crit: f64) -> bool {
    (p - p_crit).abs() <= 1e-12 * p_crit
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Exponents {
    pub p_crit: f64,
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub decay_exp: f64,
    pub alpha_min: f64,
    pub lifespan_exp: Option<f64>,
    pub critical: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Hypotheses {
    pub gn_admissible: bool,
    pub gn_upper: Option<f64>,
    pub supercritical: bool,
    pub blowup_range: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Regime {
    RealDistinct,
    NearDegenerate,
    ComplexPair,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CharacteristicRoots {
    pub lambda_plus: Complex64,
    pub lambda_minus: Complex64,
    /// `1 - 4m`.
    pub discriminant: f64,
    pub regime: Regime,
}

impl CharacteristicRoots {
    pub fn from_symbol(m: f64) -> Self {
        let d = 1.0 - 4.0 * m;
        let regime = classify(d);
        let (lambda_plus, lambda_minus) = if d >= 0.0 {
            let sd = d.sqrt();
            // -2m/(1+√d) avoids the cancellation in -1/2 + √d/2 for small m.
            (
                Complex64::new(-2.0 * m / (1.0 + sd), 0.0),
                Complex64::new(-0.5 * (1.0 + sd), 0.0),
            )
        } else {
            let w = 0.5 * (-d).sqrt();
            (Complex64::new(-0.5, w), Complex64::new(-0.5, -w))
        };
        Self {
            lambda_plus,
            lambda_minus,
            discriminant: d,
            regime,
        }
    }
}

fn classify(d: f64) -> Regime {
    if d > DEGENERATE_BAND {
        Regime::RealDistinct
    } else if d < -DEGENERATE_BAND {
        Regime::ComplexPair
    } else {
        Regime::NearDegenerate
    }
}

/// `K̂0`, `K̂1` and their time derivatives at one `(t, |ξ|)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelValues {
    pub k0: f64,
    pub k1: f64,
    pub dk0: f64,
    pub dk1: f64,
}

impl KernelValues {
    pub fn from_symbol(m: f64, t: f64) -> Self {
        let q = 0.25 - m;
        let z = q * t * t;
        if z.abs() <= SERIES_SWITCH {
            let (shc, ch) = taylor_sinhc_cosh(z);
            Self::from_parts(m, t, t * shc, ch)
        } else if q > 0.0 {
            // Separated real roots: exponential form, never overflows for large t.
            let delta = q.sqrt();
            let sd = 2.0 * delta;
            let lp = -2.0 * m / (1.0 + sd);
            let lm = -0.5 * (1.0 + sd);
            let ep = (lp * t).exp();
            let em = (lm * t).exp();
            let k1 = (ep - em) / sd;
            Self {
                k0: (lp * em - lm * ep) / sd,
                k1,
                dk0: -m * k1,
                dk1: (lp * ep - lm * em) / sd,
            }
        } else {
            let omega = (-q).sqrt();
            let (sin, cos) = (omega * t).sin_cos();
            Self::from_parts(m, t, sin / omega, cos)
        }
    }

    /// `s = sinh(δt)/δ`, `c = cosh(δt)` (or their trigonometric versions).
    fn from_parts(m: f64, t: f64, s: f64, c: f64) -> Self {
        let e = (-0.5 * t).exp();
        let k1 = e * s;
        Self {
            k0: e * (c + 0.5 * s),
            k1,
            dk0: -m * k1,
            dk1: e * (c - 0.5 * s),
        }
    }
}

/// Six-term Taylor sums of `sinh(√z)/√z` and `cosh(√z)`; valid for either sign of `z`.
fn taylor_sinhc_cosh(z: f64) -> (f64, f64) {
    let mut shc = 0.0;
    let mut ch = 0.0;
    let mut term_s = 1.0; // z^k/(2k+1)!
    let mut term_c = 1.0; // z^k/(2k)!
    for k in 0..6 {
        shc += term_s;
        ch += term_c;
        let kf = k as f64;
        term_s *= z / ((2.0 * kf + 2.0) * (2.0 * kf + 3.0));
        term_c *= z / ((2.0 * kf + 1.0) * (2.0 * kf + 2.0));
    }
    (shc, ch)
}

/// Moments of `K̂1` and `∂_t K̂1` over one step of length `h`:
///
/// ```text
/// w0  = ∫₀ʰ K̂1(s) ds          w1  = (1/h) ∫₀ʰ s K̂1(s) ds
/// w0t = ∫₀ʰ ∂_tK̂1(s) ds       w1t = (1/h) ∫₀ʰ s ∂_tK̂1(s) ds
/// ```
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DuhamelWeights {
    pub w0: f64,
    pub w1: f64,
    pub w0t: f64,
    pub w1t: f64,
}

impl DuhamelWeights {
    pub fn from_symbol(m: f64, h: f64) -> Self {
        assert!(h > 0.0, "step must be positive");
        let d = 1.0 - 4.0 * m;
        let spectral_radius = if d >= 0.0 { 0.5 * (1.0 + d.sqrt()) } else { m.sqrt() };
        let (w0, w1) = if spectral_radius * h <= 2.0 {
            series_moments(m, h)
        } else if d > 0.0 && d.sqrt() * h >= 1.0 {
            divided_difference_moments(m, d, h)
        } else {
            ode_moments(m, h)
        };
        let k1 = KernelValues::from_symbol(m, h).k1;
        Self {
            w0,
            w1,
            w0t: k1,
            w1t: k1 - w0 / h,
        }
    }
}

/// Power series of `K̂1(s) = Σ c_k s^k`, from `K'' + K' + mK = 0`, integrated
/// termwise. Used when every `|λ| h ≤ 2`, so the terms decay factorially.
fn series_moments(m: f64, h: f64) -> (f64, f64) {
    // a_k = c_k h^k
    let (mut a_prev, mut a_cur) = (0.0_f64, h);
    let mut w0 = a_cur / 2.0;
    let mut w1 = a_cur / 3.0;
    let mut small = 0;
    for k in 0..80usize {
        let kf = k as f64;
        let a_next = -((kf + 1.0) * h * a_cur + m * h * h * a_prev) / ((kf + 2.0) * (kf + 1.0));
        let t0 = a_next / (kf + 3.0);
        let t1 = a_next / (kf + 4.0);
        w0 += t0;
        w1 += t1;
        if t0.abs() <= 1e-18 * w0.abs() && t1.abs() <= 1e-18 * w1.abs() {
            small += 1;
            if small >= 2 {
                break;
            }
        } else {
            small = 0;
        }
        a_prev = a_cur;
        a_cur = a_next;
    }
    (h * w0, h * w1)
}

/// Divided differences of `φ1(z) = (e^z-1)/z` and `g(z) = (z e^z - e^z + 1)/z²`
/// over the two real roots; well conditioned when `√d·h ≥ 1`.
fn divided_difference_moments(m: f64, d: f64, h: f64) -> (f64, f64) {
    let sd = d.sqrt();
    let lp = -2.0 * m / (1.0 + sd);
    let lm = -0.5 * (1.0 + sd);
    let (zp, zm) = (lp * h, lm * h);
    let w0 = h * (phi1(zp) - phi1(zm)) / sd;
    let w1 = h * (first_moment(zp) - first_moment(zm)) / sd;
    (w0, w1)
}

/// Moments from integrating the kernel ODE against 1 and s; used when the
/// symbol is bounded away from zero relative to `1/h²`.
fn ode_moments(m: f64, h: f64) -> (f64, f64) {
    let kv = KernelValues::from_symbol(m, h);
    let w0 = (1.0 - kv.k0) / m;
    let w1 = (w0 + kv.k1 - h * kv.dk1 - h * kv.k1) / (m * h);
    (w0, w1)
}

pub(crate) fn phi1(z: f64) -> f64 {
    if z == 0.0 {
        1.0
    } else {
        z.exp_m1() / z
    }
}

/// `∫₀¹ u e^{zu} du`.
fn first_moment(z: f64) -> f64 {
    if z.abs() < 0.5 {
        // Σ z^k / (k! (k+2))
        let mut sum = 0.0;
        let mut term = 1.0;
        for k in 0..30 {
            let contrib = term / (k as f64 + 2.0);
            sum += contrib;
            if contrib.abs() < 1e-18 {
                break;
            }
            term *= z / (k as f64 + 1.0);
        }
        sum
    } else {
        (z.exp() * (z - 1.0) + 1.0) / (z * z)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn unit() -> OperatorParams {
        OperatorParams::new(1.0, 1.0, 0.5, 1).unwrap()
    }

    #[test]
    fn symbol_values() {
        let p = unit();
        assert_eq!(p.symbol(0.0), 0.0);
        assert_relative_eq!(p.symbol(1.0), 2.0);
        let q = OperatorParams::new(2.0, 3.0, 1.5, 1).unwrap();
        assert_relative_eq!(q.symbol(2.0), 32.0, max_relative = 1e-14);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(matches!(OperatorParams::new(1.0, 1.0, 1.0, 1), Err(Error::SigmaExcluded)));
        assert!(matches!(
            OperatorParams::new(0.0, 1.0, 0.5, 1),
            Err(Error::InvalidParameter { name: "a", .. })
        ));
        assert!(matches!(
            OperatorParams::new(1.0, -1.0, 0.5, 1),
            Err(Error::InvalidParameter { name: "b", .. })
        ));
        assert!(OperatorParams::new(1.0, 1.0, 0.5, 0).is_err());
    }

    #[test]
    fn roots_at_zero_frequency() {
        let roots = unit().char_roots(0.0);
        assert_eq!(roots.lambda_plus, Complex64::new(0.0, 0.0));
        assert_eq!(roots.lambda_minus, Complex64::new(-1.0, 0.0));
        assert_eq!(roots.regime, Regime::RealDistinct);
    }

    #[test]
    fn roots_complex_pair() {
        let roots = unit().char_roots(1.0);
        assert_eq!(roots.regime, Regime::ComplexPair);
        assert_relative_eq!(roots.discriminant, -7.0);
        assert_relative_eq!(roots.lambda_plus.re, -0.5);
        assert_relative_eq!(roots.lambda_plus.im, 7.0_f64.sqrt() / 2.0, max_relative = 1e-15);
        assert_relative_eq!(roots.lambda_minus.im, -7.0_f64.sqrt() / 2.0, max_relative = 1e-15);
    }

    #[test]
    fn roots_degenerate_point() {
        // bisection for r² + r = 1/4
        let p = unit();
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid * mid + mid < 0.25 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let roots = p.char_roots(lo);
        assert_eq!(roots.regime, Regime::NearDegenerate);
        assert!((roots.lambda_plus.re + 0.5).abs() < 1e-7);
        assert!((roots.lambda_minus.re + 0.5).abs() < 1e-7);
    }

    #[test]
    fn root_sum_and_product() {
        let p = OperatorParams::new(0.7, 1.3, 1.5, 2).unwrap();
        for &r in &[0.0, 1e-6, 0.1, 0.3, 0.5, 2.0, 50.0] {
            let roots = p.char_roots(r);
            let m = p.symbol(r);
            let sum = roots.lambda_plus + roots.lambda_minus;
            let prod = roots.lambda_plus * roots.lambda_minus;
            assert!((sum.re + 1.0).abs() < 1e-14 && sum.im.abs() < 1e-12);
            assert!((prod.re - m).abs() <= 1e-13 * (1.0 + m) && prod.im.abs() < 1e-12 * (1.0 + m));
        }
    }

    #[test]
    fn kernels_at_zero_frequency() {
        let p = unit();
        for &t in &[0.0, 0.3, 1.0, 7.0, 40.0, 3000.0] {
            let kv = p.kernel_eval(t, 0.0);
            assert_relative_eq!(kv.k0, 1.0, max_relative = 1e-14);
            assert_relative_eq!(kv.k1, -(-t).exp_m1(), max_relative = 1e-13);
        }
    }

    #[test]
    fn kernels_at_degenerate_point_match_limit() {
        for &t in &[0.0, 0.5, 2.0, 10.0, 60.0] {
            let kv = KernelValues::from_symbol(0.25, t);
            let e = (-0.5 * t).exp();
            assert_relative_eq!(kv.k0, (1.0 + 0.5 * t) * e, max_relative = 1e-14);
            assert_relative_eq!(kv.k1, t * e, max_relative = 1e-14);
        }
    }

    #[test]
    fn kernels_reproduce_initial_data() {
        let p = OperatorParams::new(2.0, 0.5, 2.5, 2).unwrap();
        for &r in &[0.0, 0.2, 0.5, 3.0, 100.0] {
            let kv = p.kernel_eval(0.0, r);
            assert_eq!((kv.k0, kv.k1, kv.dk0, kv.dk1), (1.0, 0.0, 0.0, 1.0));
        }
    }

    #[test]
    fn complex_path_agrees_away_from_degeneracy() {
        let p = OperatorParams::new(1.0, 2.0, 0.3, 1).unwrap();
        for &r in &[0.0, 0.01, 0.05, 0.5, 1.0, 4.0] {
            if p.char_roots(r).regime == Regime::NearDegenerate {
                continue;
            }
            for &t in &[0.1, 1.0, 5.0, 20.0] {
                let a = p.kernel_eval(t, r);
                let b = p.kernel_eval_complex(t, r);
                for (x, y) in [(a.k0, b.k0), (a.k1, b.k1), (a.dk0, b.dk0), (a.dk1, b.dk1)] {
                    assert!((x - y).abs() <= 1e-11 * (1.0 + x.abs()), "r={r} t={t}: {x} vs {y}");
                }
            }
        }
    }

    #[test]
    fn profile_values() {
        let p = unit();
        assert_relative_eq!(p.profile_hat(1.0, 1.0), (-1.0_f64).exp());
        let q = OperatorParams::new(2.0, 1.0, 1.5, 1).unwrap();
        assert_relative_eq!(q.profile_hat(3.0, 1.0), (-6.0_f64).exp());
        assert_eq!(q.profile_hat(0.0, 5.0), 1.0);
        assert_eq!(p.profile_hat(7.0, 0.0), 1.0);
    }

    #[test]
    fn exponent_values() {
        let p = unit();
        let e = p.exponents(0.0, 1.5).unwrap();
        assert_relative_eq!(e.decay_exp, 0.5);
        assert_relative_eq!(e.alpha_min, 1.0);
        assert_relative_eq!(e.lifespan_exp.unwrap(), -1.0);
        assert_relative_eq!(e.p_crit, 2.0);
        assert!(!e.critical);
        assert!(p.exponents(0.0, 2.0).unwrap().critical);
        assert!(matches!(p.lifespan_exponent(2.5), Err(Error::LifespanUndefined { .. })));
        assert!(p.exponents(0.7, 1.5).is_err());

        let q = OperatorParams::new(1.0, 1.0, 1.5, 1).unwrap();
        assert_relative_eq!(q.lifespan_exponent(2.0).unwrap(), -2.0);
        assert_relative_eq!(q.alpha_min(), 1.0);
        assert_relative_eq!(q.decay_exponent(0.0), 0.25);
    }

    #[test]
    fn hypotheses_flags() {
        let p = unit();
        let h = p.hypotheses(3.0);
        assert!(h.gn_admissible && h.supercritical);
        assert!(!p.hypotheses(1.5).gn_admissible);
        let q = OperatorParams::new(1.0, 1.0, 0.5, 2).unwrap();
        // n/(n-2σ_min) = 2
        assert!(q.hypotheses(2.0).gn_admissible);
        assert!(!q.hypotheses(2.5).gn_admissible);
    }

    #[test]
    fn weights_at_zero_frequency() {
        for &h in &[1e-3, 0.05, 0.7, 1.5, 4.0, 30.0] {
            let w = DuhamelWeights::from_symbol(0.0, h);
            let exact = h - 1.0 + (-h).exp();
            assert_relative_eq!(w.w0, exact, max_relative = 1e-13);
            // (1/h) ∫ s (1 - e^{-s}) ds; the closed form cancels for small h
            let exact1 = if h < 1.0 {
                let mut term = -h;
                let mut acc = 0.0;
                for j in 1..40 {
                    term *= -h / j as f64;
                    acc += term / (j as f64 + 2.0);
                }
                acc
            } else {
                (h * h / 2.0 - (1.0 - (1.0 + h) * (-h).exp())) / h
            };
            assert_relative_eq!(w.w1, exact1, max_relative = 1e-13);
        }
    }

    #[test]
    fn weights_vanish_with_step() {
        let w = DuhamelWeights::from_symbol(3.0, 1e-9);
        assert!(w.w0.abs() < 1e-17 && w.w1.abs() < 1e-17 && w.w1t.abs() < 1e-8);
    }
}
