use crate::error::{Error, Result};

const RHO_MAX: f64 = 0.5 - 1e-6;

/// Exploration constants for both algorithms. `reg_hat` is the assumed
/// square-loss regret `R̂` of the oracle over the horizon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Schedules {
    pub c_gamma: f64,
    pub c_rho: f64,
    pub mu: f64,
    pub delta: f64,
    pub reg_hat: f64,
    pub rho_min: f64,
}

impl Default for Schedules {
    fn default() -> Self {
        Schedules {
            c_gamma: 1.0,
            c_rho: 1.0,
            mu: 1.0,
            delta: 0.05,
            reg_hat: 1.0,
            rho_min: 0.01,
        }
    }
}

impl Schedules {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("c_gamma", self.c_gamma),
            ("c_rho", self.c_rho),
            ("reg_hat", self.reg_hat),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.mu.is_finite() && self.mu >= 1.0) {
            return Err(Error::Config(format!("mu must be at least 1, got {}", self.mu)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::Config(format!("delta must lie in (0, 1), got {}", self.delta)));
        }
        if !(self.rho_min > 0.0 && self.rho_min < RHO_MAX) {
            return Err(Error::Config(format!("rho_min must lie in (0, 1/2), got {}", self.rho_min)));
        }
        Ok(())
    }

    /// `c_γ sqrt(n k (A - k) / R̂)`, with `k (A - k)` floored at 1 so that
    /// `γ` stays positive when the swap neighborhood is trivial.
    pub fn gamma(&self, n: usize, a: usize, k: usize) -> f64 {
        let swaps = (k * a.saturating_sub(k)).max(1) as f64;
        self.c_gamma * (n as f64 * swaps / self.reg_hat).sqrt()
    }

    /// Neighborhood size bound `B = k (A - k) + 1`.
    pub fn neighborhood_bound(a: usize, k: usize) -> f64 {
        (k * a.saturating_sub(k) + 1) as f64
    }

    /// `c_ρ n^{-1/3} (2 (1 - 1/e) k B τ(k))^{2/3} (4 R̂ + 32 ln(2/δ))^{1/3}`,
    /// clipped into `[ρ_min, 1/2 - 1e-6]`.
    pub fn rho(&self, n: usize, a: usize, k: usize, tau_k: f64) -> f64 {
        let phi = 2.0 * (1.0 - (-1.0f64).exp()) * k as f64 * Self::neighborhood_bound(a, k) * tau_k;
        let conf = 4.0 * self.reg_hat + 32.0 * (2.0 / self.delta).ln();
        let raw = self.c_rho * (n as f64).powf(-1.0 / 3.0) * phi.powf(2.0 / 3.0) * conf.cbrt();
        raw.clamp(self.rho_min, RHO_MAX)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_formula() {
        let s = Schedules {
            c_gamma: 2.0,
            reg_hat: 8.0,
            ..Schedules::default()
        };
        // 2 sqrt(100 * 2 * 4 / 8)
        assert!((s.gamma(100, 6, 2) - 20.0).abs() < 1e-12);
        assert!(s.gamma(10, 3, 3) > 0.0);
    }

    #[test]
    fn rho_formula_and_clipping() {
        let s = Schedules {
            c_rho: 1e-2,
            reg_hat: 2.0,
            ..Schedules::default()
        };
        let phi: f64 = 2.0 * (1.0 - (-1.0f64).exp()) * 2.0 * 9.0 * 1.5;
        let conf: f64 = 8.0 + 32.0 * 40.0f64.ln();
        let expect = 1e-2 * 1000.0f64.powf(-1.0 / 3.0) * phi.powf(2.0 / 3.0) * conf.cbrt();
        assert!(expect > 0.01);
        assert!((s.rho(1000, 6, 2, 1.5) - expect).abs() < 1e-12);
        let big = Schedules::default();
        assert_eq!(big.rho(10, 6, 2, 1.5), 0.5 - 1e-6);
        let tiny = Schedules {
            c_rho: 1e-9,
            ..Schedules::default()
        };
        assert_eq!(tiny.rho(10, 6, 2, 1.5), 0.01);
    }

    #[test]
    fn validation() {
        assert!(Schedules::default().validate().is_ok());
        let bad = Schedules {
            mu: 0.5,
            ..Schedules::default()
        };
        assert!(bad.validate().is_err());
    }
}
