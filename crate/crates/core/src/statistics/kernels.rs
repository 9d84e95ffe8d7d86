use crate::special::x_coth_half;

const KERNEL_SERIES_MAX: f64 = 1e-3;

/// Weight of the k-th cumulant at `u = βħω`: `½u^{k−1}coth(u/2)` for even k,
/// `½u^{k−1}` for odd k.
pub fn cumulant_weight(k: u32, u: f64) -> f64 {
    if k % 2 == 0 {
        0.5 * u.powi(k as i32 - 2) * x_coth_half(u)
    } else {
        0.5 * u.powi(k as i32 - 1)
    }
}

/// `sinh(u(1−η)/2) sinh(uη/2) / (u sinh(u/2))`, evaluated without overflow.
///
/// Even in `u`, symmetric under `η ↔ 1−η`, equal to `η(1−η)/2` at `u = 0`.
pub fn cgf_kernel(eta: f64, u: f64) -> f64 {
    let u = u.abs();
    let p = eta * (1.0 - eta);
    if u < KERNEL_SERIES_MAX {
        return 0.5 * p * (1.0 - u * u * p / 12.0);
    }
    // multiply through by e^{−u/2} so every factor stays bounded for η ∈ [0, 1]
    let a = -(-u * eta).exp_m1();
    let b = -(-u * (1.0 - eta)).exp_m1();
    let c = -(-u).exp_m1();
    a * b / (2.0 * u * c)
}
