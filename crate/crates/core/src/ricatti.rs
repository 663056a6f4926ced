//! Scalar Ricatti evolutions along a geodesic.

use crate::error::{Error, Result};
use crate::tolerances::{RICATTI_BLOWUP, RICATTI_STEP_SCALE};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RicattiMode {
    /// `φ' = −φ²`.
    Equality,
    /// Comparison solution `φ' = −φ²/n` of the traced inequality.
    Inequality { n: usize },
}

impl RicattiMode {
    fn divisor(self) -> f64 {
        match self {
            RicattiMode::Equality => 1.0,
            RicattiMode::Inequality { n } => n as f64,
        }
    }

    /// `φ₀ / (1 + φ₀ s / n)`.
    pub fn closed_form(self, phi0: f64, s: f64) -> f64 {
        phi0 / (1.0 + phi0 * s / self.divisor())
    }

    /// Parameter where the closed form blows up, if it does for `s > 0`.
    pub fn closed_form_blow_up(self, phi0: f64) -> Option<f64> {
        (phi0 < 0.0).then(|| -self.divisor() / phi0)
    }
}

#[derive(Clone, Debug)]
pub struct RicattiTrace {
    pub mode: RicattiMode,
    pub phi0: f64,
    /// `(s, φ(s))` pairs.
    pub samples: Vec<(f64, f64)>,
    pub blow_up: bool,
    pub blow_up_at: Option<f64>,
}

impl RicattiTrace {
    /// Largest relative deviation `|φ − φ_exact| / max(1, |φ_exact|)` over
    /// samples with `s ≤ fraction · s_blow-up`.
    pub fn closed_form_error(&self, fraction: f64) -> f64 {
        let cutoff = self
            .mode
            .closed_form_blow_up(self.phi0)
            .map_or(f64::INFINITY, |b| fraction * b);
        self.samples
            .iter()
            .filter(|(s, _)| *s <= cutoff)
            .map(|&(s, phi)| {
                let exact = self.mode.closed_form(self.phi0, s);
                (phi - exact).abs() / exact.abs().max(1.0)
            })
            .fold(0.0, f64::max)
    }
}

/// Integrates the selected Ricatti equation from `φ(0) = φ₀` to `s_max`
/// with RK4 and step `min(10⁻³, 10⁻³/|φ|)`, stopping once `|φ| > 10⁹`.
pub fn ricatti_evolve(phi0: f64, mode: RicattiMode, s_max: f64) -> Result<RicattiTrace> {
    if !(s_max > 0.0) {
        return Err(Error::InvalidParam(format!("s_max must be positive, got {s_max}")));
    }
    if let RicattiMode::Inequality { n: 0 } = mode {
        return Err(Error::InvalidParam("dimension must be positive".into()));
    }
    let c = mode.divisor();
    let rhs = |phi: f64| -phi * phi / c;
    let (mut s, mut phi) = (0.0f64, phi0);
    let mut samples = vec![(s, phi)];
    let mut blow_up_at = None;
    while s < s_max {
        if phi.abs() > RICATTI_BLOWUP {
            // The local solution φ/(1 + φ(t−s)/c) diverges at t = s − c/φ.
            blow_up_at = Some(s - c / phi);
            break;
        }
        let h = RICATTI_STEP_SCALE.min(RICATTI_STEP_SCALE / phi.abs()).min(s_max - s);
        let k1 = rhs(phi);
        let k2 = rhs(phi + h / 2.0 * k1);
        let k3 = rhs(phi + h / 2.0 * k2);
        let k4 = rhs(phi + h * k3);
        phi += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        s += h;
        if !phi.is_finite() {
            blow_up_at = Some(s);
            break;
        }
        samples.push((s, phi));
    }
    Ok(RicattiTrace {
        mode,
        phi0,
        samples,
        blow_up: blow_up_at.is_some(),
        blow_up_at,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn negative_start_blows_up_at_one() {
        let t = ricatti_evolve(-1.0, RicattiMode::Equality, 5.0).unwrap();
        assert!(t.blow_up);
        assert!((t.blow_up_at.unwrap() - 1.0).abs() < 1e-3);
        assert!(t.closed_form_error(0.99) < 1e-6);
    }

    #[test]
    fn zero_stays_zero() {
        let t = ricatti_evolve(0.0, RicattiMode::Equality, 3.0).unwrap();
        assert!(!t.blow_up);
        assert!(t.samples.iter().all(|&(_, p)| p == 0.0));
    }

    #[test]
    fn positive_comparison_solution_stays_finite() {
        let t = ricatti_evolve(1.0, RicattiMode::Inequality { n: 2 }, 10.0).unwrap();
        assert!(!t.blow_up);
        let &(s, phi) = t.samples.last().unwrap();
        assert!((s - 10.0).abs() < 1e-9);
        assert!((phi - 1.0 / (1.0 + s / 2.0)).abs() < 1e-9);
    }

    #[test]
    fn rejects_nonpositive_length() {
        assert!(ricatti_evolve(1.0, RicattiMode::Equality, 0.0).is_err());
    }

    proptest! {
        #[test]
        fn equality_mode_tracks_closed_form(phi0 in -5.0f64..5.0) {
            let t = ricatti_evolve(phi0, RicattiMode::Equality, 2.0).unwrap();
            prop_assert!(t.closed_form_error(0.99) < 1e-6);
            if let Some(b) = RicattiMode::Equality.closed_form_blow_up(phi0).filter(|b| *b < 1.9) {
                prop_assert!((t.blow_up_at.unwrap() - b).abs() < 1e-3);
            }
        }
    }
}
