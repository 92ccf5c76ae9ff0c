//! Closed-form steady state of the truncated four-state model
//! `{|g,0⟩, |g,1⟩, |g,2⟩, |e,0⟩}` under the non-Hermitian Hamiltonian, the
//! blockade criterion, and an exact solve of the same amplitude equations.
//!
//! All arguments are rates in one common unit; only ratios enter.

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::operators::{C64, I, ZERO};

/// Ratio standing in for "≫" in the strong-blockade criterion.
pub const BLOCKADE_RATIO: f64 = 5.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AnalyticAmplitudes {
    pub c0g: C64,
    pub c1g: C64,
    pub c2g: C64,
    pub c0e: C64,
}

impl AnalyticAmplitudes {
    pub fn norm_sqr(&self) -> f64 {
        self.c0g.norm_sqr() + self.c1g.norm_sqr() + self.c2g.norm_sqr() + self.c0e.norm_sqr()
    }

    /// `2|C₂g|² / |C₁g|⁴`.
    pub fn g2(&self) -> f64 {
        2.0 * self.c2g.norm_sqr() / self.c1g.norm_sqr().powi(2)
    }

    /// True when `|C₂g|² ≪ min(|C₀g|², |C₁g|²)` fails by the blockade ratio.
    pub fn two_phonon_flag(&self) -> bool {
        self.c2g.norm_sqr() * BLOCKADE_RATIO > self.c0g.norm_sqr().min(self.c1g.norm_sqr())
    }
}

fn check(epsilon: f64, kappa: f64, gamma: f64, lambda: f64) -> Result<()> {
    for (name, v) in [("epsilon", epsilon), ("kappa", kappa), ("gamma", gamma), ("lambda", lambda)] {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(Error::param(name, format!("must be finite and >= 0, got {v}")));
        }
    }
    if gamma == 0.0 {
        return Err(Error::param("gamma", "must be positive"));
    }
    Ok(())
}

/// `2κ + 4λ²/Γ`, the effective two-phonon damping of the closed forms.
fn two_phonon_damping(kappa: f64, gamma: f64, lambda: f64) -> f64 {
    2.0 * kappa + 4.0 * lambda * lambda / gamma
}

/// Weak-drive amplitudes:
/// `|C₁g|² = 4ε²/(8ε² + κ²)`,
/// `C₂g = √2ε C₁g / (i(2κ + 4λ²/Γ))`,
/// `C₀e = 2√2λ C₂g / (iΓ)`,
/// with `C₁g` real positive and `C₀g = i√(1 − |C₁g|²)` (phase from the
/// `C₀g` equation, modulus from `|C₀g|² + |C₁g|² ≈ 1`).
pub fn steady_amplitudes(epsilon: f64, kappa: f64, gamma: f64, lambda: f64) -> Result<AnalyticAmplitudes> {
    check(epsilon, kappa, gamma, lambda)?;
    let denom = 8.0 * epsilon * epsilon + kappa * kappa;
    if epsilon == 0.0 {
        return Ok(AnalyticAmplitudes { c0g: C64::new(1.0, 0.0), c1g: ZERO, c2g: ZERO, c0e: ZERO });
    }
    if denom == 0.0 {
        return Err(Error::Singular("8ε² + κ² vanishes".into()));
    }
    let damp = two_phonon_damping(kappa, gamma, lambda);
    if damp == 0.0 {
        return Err(Error::Singular("2κ + 4λ²/Γ vanishes".into()));
    }
    let c1 = (4.0 * epsilon * epsilon / denom).sqrt();
    let c1g = C64::new(c1, 0.0);
    let c2g = c1g * (2f64.sqrt() * epsilon) / (I * damp);
    let c0e = c2g * (2.0 * 2f64.sqrt() * lambda) / (I * gamma);
    let c0g = I * (1.0 - c1 * c1).max(0.0).sqrt();
    Ok(AnalyticAmplitudes { c0g, c1g, c2g, c0e })
}

/// `g₂(0) = (8ε² + κ²) / (2κ + 4λ²/Γ)²`.
pub fn g2_analytic(epsilon: f64, kappa: f64, gamma: f64, lambda: f64) -> Result<f64> {
    check(epsilon, kappa, gamma, lambda)?;
    let damp = two_phonon_damping(kappa, gamma, lambda);
    if damp == 0.0 {
        return Err(Error::Singular("2κ + 4λ²/Γ vanishes".into()));
    }
    Ok((8.0 * epsilon * epsilon + kappa * kappa) / (damp * damp))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlockadeDiagnostic {
    /// `4λ²/Γ`.
    pub nonlinear_rate: f64,
    /// `max{2√2ε, κ}`.
    pub competing_rate: f64,
    pub ratio: f64,
    pub strong: bool,
}

/// Strong blockade requires `4λ²/Γ ≫ max{2√2ε, κ}`.
pub fn blockade_condition(epsilon: f64, kappa: f64, gamma: f64, lambda: f64) -> BlockadeDiagnostic {
    let nonlinear_rate = if gamma > 0.0 { 4.0 * lambda * lambda / gamma } else { f64::INFINITY };
    let competing_rate = (2.0 * 2f64.sqrt() * epsilon).max(kappa);
    let ratio = if competing_rate > 0.0 {
        nonlinear_rate / competing_rate
    } else if nonlinear_rate > 0.0 {
        f64::INFINITY
    } else {
        0.0
    };
    BlockadeDiagnostic { nonlinear_rate, competing_rate, ratio, strong: ratio >= BLOCKADE_RATIO }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OracleSolution {
    /// Unit-norm amplitudes, `C₁g` real positive.
    pub amplitudes: AnalyticAmplitudes,
    /// `2|C₂g|²/|C₁g|⁴` from the unit-norm amplitudes.
    pub g2: f64,
    /// The same ratio with `C₀g = 1` (unnormalized).
    pub g2_unnormalized: f64,
}

/// Exact stationary solution of the four-amplitude equations
///
/// ```text
/// 0 = εC₀g − i(κ/2)C₁g + √2εC₂g
/// 0 = √2εC₁g − iκC₂g + √2λC₀e
/// 0 = √2λC₂g − i(Γ/2)C₀e
/// ```
///
/// with `C₀g = 1`, keeping every term; the result is then normalized.
pub fn four_state_oracle(epsilon: f64, kappa: f64, gamma: f64, lambda: f64) -> Result<OracleSolution> {
    check(epsilon, kappa, gamma, lambda)?;
    if epsilon == 0.0 {
        let amplitudes = AnalyticAmplitudes { c0g: C64::new(1.0, 0.0), c1g: ZERO, c2g: ZERO, c0e: ZERO };
        return Ok(OracleSolution { amplitudes, g2: f64::NAN, g2_unnormalized: f64::NAN });
    }
    let s2 = 2f64.sqrt();
    let z = |x: f64| C64::new(x, 0.0);
    let a = Matrix3::new(
        -I * (kappa / 2.0), z(s2 * epsilon), ZERO,
        z(s2 * epsilon), -I * kappa, z(s2 * lambda),
        ZERO, z(s2 * lambda), -I * (gamma / 2.0),
    );
    let b = Vector3::new(z(-epsilon), ZERO, ZERO);
    let x = a.lu().solve(&b).ok_or_else(|| Error::Singular("four-state system".into()))?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular("four-state system".into()));
    }
    let raw = AnalyticAmplitudes { c0g: z(1.0), c1g: x[0], c2g: x[1], c0e: x[2] };
    let norm = raw.norm_sqr().sqrt();
    // global phase making C₁g real positive
    let phase = if x[0].norm() > 0.0 { x[0].conj() / x[0].norm() } else { z(1.0) };
    let f = phase / norm;
    let amplitudes = AnalyticAmplitudes { c0g: raw.c0g * f, c1g: raw.c1g * f, c2g: raw.c2g * f, c0e: raw.c0e * f };
    Ok(OracleSolution { g2: amplitudes.g2(), g2_unnormalized: raw.g2(), amplitudes })
}
