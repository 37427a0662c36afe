#![allow(dead_code)]

use dampwave::radial::{sphere_area, RadialQuadrature};
use dampwave::{KernelValues, OperatorParams};
use statrs::function::gamma::{gamma, gamma_lr};

/// Largest of `|∂ₜK̂1 + K̂1 - K̂0|` and `|∂ₜK̂0 + m K̂1|`, relative to the kernel size.
pub fn kernel_identity_residual(m: f64, kv: &KernelValues) -> f64 {
    let scale = [kv.k0, kv.k1, kv.dk0, kv.dk1, m * kv.k1]
        .iter()
        .fold(f64::MIN_POSITIVE, |acc, v| acc.max(v.abs()));
    let first = (kv.dk1 + kv.k1 - kv.k0).abs();
    let second = (kv.dk0 + m * kv.k1).abs();
    first.max(second) / scale
}

/// `∫₀^{ε₀} r^{k-1} e^{-A r^{2θ}} dr = γ(k/2θ, A ε₀^{2θ}) / (2θ A^{k/2θ})`, `k = n + 2s`, `A = 2ct`.
pub fn low_frequency_integral(n: usize, s: f64, theta: f64, c: f64, t: f64, eps0: f64) -> f64 {
    let k = n as f64 + 2.0 * s;
    let big_a = 2.0 * c * t;
    let shape = k / (2.0 * theta);
    gamma_lr(shape, big_a * eps0.powf(2.0 * theta)) * gamma(shape) / (2.0 * theta * big_a.powf(shape))
}

/// The same integral by the library's radial quadrature.
pub fn low_frequency_quadrature(n: usize, s: f64, theta: f64, c: f64, t: f64, eps0: f64) -> f64 {
    let quad = RadialQuadrature::default();
    let amplitude = |r: f64| (-c * r.powf(2.0 * theta) * t).exp();
    quad.weighted_square_integral(n, s, amplitude, eps0).unwrap() / sphere_area(n)
}

/// Symbols spanning the overdamped, degenerate and oscillating regimes.
pub fn regime_params() -> Vec<OperatorParams> {
    vec![
        OperatorParams::new(1.0, 1.0, 0.5, 1).unwrap(),
        OperatorParams::new(0.2, 1.0, 1.5, 2).unwrap(),
        OperatorParams::new(2.0, 0.3, 0.25, 1).unwrap(),
        OperatorParams::new(1e-3, 5.0, 2.5, 2).unwrap(),
    ]
}
