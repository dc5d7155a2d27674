//! Gamma function and its first two derivatives.

use statrs::function::gamma::{digamma, gamma};

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum SpecialError {
    #[error("argument {0} must be positive")]
    NonPositive(f64),
    #[error("derivative order {0} is not supported (0, 1 or 2)")]
    Order(u32),
}

/// Trigamma `ψ'(x)` for `x > 0`: upward recurrence to `x >= 12`, then the
/// asymptotic series in `1/x`.
pub fn trigamma(x: f64) -> f64 {
    let mut acc = 0.0;
    let mut y = x;
    while y < 12.0 {
        acc += 1.0 / (y * y);
        y += 1.0;
    }
    let z = 1.0 / (y * y);
    // Bernoulli-number coefficients B_{2k}
    let series = 1.0 / y
        + z / 2.0
        + z / y
            * (1.0 / 6.0
                + z * (-1.0 / 30.0 + z * (1.0 / 42.0 + z * (-1.0 / 30.0 + z * (5.0 / 66.0 + z * (-691.0 / 2730.0))))));
    acc + series
}

/// `Γ^{(order)}(x)` for order 0, 1, 2.
pub fn gamma_derivative(x: f64, order: u32) -> Result<f64, SpecialError> {
    if !(x > 0.0) {
        return Err(SpecialError::NonPositive(x));
    }
    let g = gamma(x);
    match order {
        0 => Ok(g),
        1 => Ok(g * digamma(x)),
        2 => {
            let psi = digamma(x);
            Ok(g * (psi * psi + trigamma(x)))
        }
        k => Err(SpecialError::Order(k)),
    }
}
