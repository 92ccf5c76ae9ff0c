//! Model parameters, device-geometry maps and every Hamiltonian and
//! dissipation channel of the qubit–resonator system.
//!
//! All frequencies and rates are angular (rad/s). Conversion from cycle units
//! happens only at the configuration boundary.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::{HarmonicHamiltonian, RotatingFrame};
use crate::lindblad::CollapseOperator;
use crate::operators::{Operator, QubitMode, C64};

pub const HBAR: f64 = 1.054_571_817e-34;
pub const PLANCK: f64 = 6.626_070_15e-34;
pub const K_B: f64 = 1.380_649e-23;
pub const E_CHARGE: f64 = 1.602_176_634e-19;
/// Superconducting flux quantum `h / 2e`.
pub const FLUX_QUANTUM: f64 = PLANCK / (2.0 * E_CHARGE);

/// Ratio standing in for "≫" in the parameter-validity condition.
pub const VALIDITY_RATIO: f64 = 5.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Resonator frequency ω₀.
    pub omega0: f64,
    /// Longitudinal coupling g.
    pub g: f64,
    /// Qubit drive Rabi strength Ω_p.
    pub omega_p_drive: f64,
    /// Qubit drive detuning Δ = ω_q − ω_p.
    pub delta: f64,
    /// Mechanical drive strength ε.
    pub epsilon: f64,
    /// Mechanical drive detuning Δ_d = ω₀′ − ω_f.
    pub delta_d: f64,
    /// Qubit decay Γ.
    pub gamma: f64,
    /// Qubit pure dephasing Γ_f.
    pub gamma_phi: f64,
    /// Resonator decay κ.
    pub kappa: f64,
    /// Thermal phonon occupation of the bath.
    pub n_th: f64,
    pub fock_dim: usize,
}

impl SystemParams {
    /// Baseline device: ω₀/2π = 1 GHz, Q = 5×10³, g/2π = 80 MHz,
    /// Ω_p/2π = 100 MHz, ε/2π = 0.2 MHz, Γ/2π = 1 MHz, resonant qubit drive.
    pub fn baseline() -> Self {
        let mhz = 2.0 * PI * 1e6;
        let mut p = SystemParams {
            omega0: 1000.0 * mhz,
            g: 80.0 * mhz,
            omega_p_drive: 100.0 * mhz,
            delta: 0.0,
            epsilon: 0.2 * mhz,
            delta_d: 0.0,
            gamma: 1.0 * mhz,
            gamma_phi: 0.0,
            kappa: 1000.0 * mhz / 5e3,
            n_th: 0.0,
            fock_dim: 10,
        };
        p.delta = resonant_delta(&p).expect("baseline is resonant");
        p
    }

    pub fn validate(&self) -> Result<()> {
        let nonneg = [
            ("omega0", self.omega0),
            ("g", self.g),
            ("omega_p_drive", self.omega_p_drive),
            ("epsilon", self.epsilon),
            ("gamma", self.gamma),
            ("gamma_phi", self.gamma_phi),
            ("kappa", self.kappa),
            ("n_th", self.n_th),
        ];
        for (name, v) in nonneg {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::param(name, format!("must be finite and >= 0, got {v}")));
            }
        }
        if self.omega0 <= 0.0 {
            return Err(Error::param("omega0", "must be positive"));
        }
        if !self.delta.is_finite() || !self.delta_d.is_finite() {
            return Err(Error::param("delta", "must be finite"));
        }
        if self.fock_dim < 2 {
            return Err(Error::InvalidDimension(format!("fock_dim must be >= 2, got {}", self.fock_dim)));
        }
        Ok(())
    }

    pub fn space(&self) -> Result<QubitMode> {
        QubitMode::new(self.fock_dim)
    }

    /// Checks `Δ ≫ max{g, Ω_p} ≥ min{g, Ω_p} ≫ ε` with ratio [`VALIDITY_RATIO`].
    pub fn validity(&self) -> Validity {
        let hi = self.g.max(self.omega_p_drive);
        let lo = self.g.min(self.omega_p_drive);
        let delta_ratio = if hi > 0.0 { self.delta / hi } else { f64::INFINITY };
        let drive_ratio = if self.epsilon > 0.0 { lo / self.epsilon } else { f64::INFINITY };
        Validity {
            delta_ratio,
            drive_ratio,
            satisfied: delta_ratio >= VALIDITY_RATIO && drive_ratio >= VALIDITY_RATIO,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Validity {
    pub delta_ratio: f64,
    pub drive_ratio: f64,
    pub satisfied: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DerivedParams {
    /// Induced two-phonon coupling λ = 2Ω_p g²/ω₀².
    pub lambda_eff: f64,
    /// Dressed qubit half-splitting Δ̃ = √(Δ²/4 + Ω_p²).
    pub delta_tilde: f64,
    /// Renormalized resonator frequency ω₀′.
    pub omega0_prime: f64,
    /// Dressed-basis mixing angle, tan θ = 2Ω_p/Δ.
    pub theta: f64,
    /// Polaron displacement β = g/ω₀.
    pub beta: f64,
}

pub fn derive(params: &SystemParams) -> Result<DerivedParams> {
    let w0 = params.omega0;
    if !(w0 > 0.0) {
        return Err(Error::param("omega0", "must be positive"));
    }
    let (g, rabi, delta) = (params.g, params.omega_p_drive, params.delta);
    Ok(DerivedParams {
        lambda_eff: 2.0 * rabi * g * g / (w0 * w0),
        delta_tilde: (delta * delta / 4.0 + rabi * rabi).sqrt(),
        omega0_prime: renormalized_frequency(w0, g, rabi),
        theta: (2.0 * rabi).atan2(delta),
        beta: g / w0,
    })
}

/// ω₀′ = ω₀ − 4Ω_p²g²/(3ω₀³).
///
/// This matches the exact ground-state phonon spacing of the lab Hamiltonian
/// to within a few percent of the shift; see `model::tests`.
pub fn renormalized_frequency(omega0: f64, g: f64, rabi: f64) -> f64 {
    omega0 - 4.0 * rabi * rabi * g * g / (3.0 * omega0.powi(3))
}

/// Qubit detuning Δ that puts the dressed splitting on resonance,
/// `Δ̃ = ω₀′`.
pub fn resonant_delta(params: &SystemParams) -> Result<f64> {
    let w0p = renormalized_frequency(params.omega0, params.g, params.omega_p_drive);
    resonant_delta_for(w0p, params.omega_p_drive)
}

/// `Δ = 2√(ω₀′² − Ω_p²)`.
pub fn resonant_delta_for(omega0_prime: f64, rabi: f64) -> Result<f64> {
    if !(omega0_prime > rabi) {
        return Err(Error::NoResonance { omega0_prime, rabi });
    }
    Ok(2.0 * (omega0_prime * omega0_prime - rabi * rabi).sqrt())
}

/// Angular frequency ω_f of the mechanical drive.
pub fn drive_frequency(params: &SystemParams) -> f64 {
    renormalized_frequency(params.omega0, params.g, params.omega_p_drive) - params.delta_d
}

/// Frame co-rotating with the mechanical drive: resonator at ω_f, qubit at
/// 2ω_f. The lab generator is exactly periodic with period 2π/ω_f here.
pub fn drive_frame(params: &SystemParams) -> RotatingFrame {
    let wf = drive_frequency(params);
    RotatingFrame { resonator: wf, qubit: 2.0 * wf }
}

/// Interaction picture with respect to `ω₀ b†b + (Δ/2)σ_z`.
pub fn interaction_frame(params: &SystemParams) -> RotatingFrame {
    RotatingFrame { resonator: params.omega0, qubit: params.delta }
}

/// `H(t) = (Δ/2)σ_z + ω₀b†b + gσ_z(b† + b) + Ω_p σ_x + ε(b† e^{−iω_f t} + b e^{iω_f t})`
/// with ω_f = ω₀′ − Δ_d.
pub fn lab_hamiltonian(params: &SystemParams) -> Result<HarmonicHamiltonian> {
    params.validate()?;
    let s = params.space()?;
    let b = s.b();
    let sz = s.sz();
    let static_part = &(&(&sz * (params.delta / 2.0)) + &(&s.num() * params.omega0))
        + &(&(&sz * &(&b + &b.dag())) * params.g);
    let static_part = &static_part + &(&s.sx() * params.omega_p_drive);
    let mut h = HarmonicHamiltonian::constant(static_part);
    if params.epsilon != 0.0 {
        h.add_pair(&b.dag() * params.epsilon, -drive_frequency(params))?;
    }
    Ok(h)
}

/// Static effective Hamiltonian in the frame co-rotating with the drive:
/// `Δ_d(b†b + 2|e⟩⟨e|) + λ(b²σ_+ + b†²σ_−) + ε(b + b†)`.
///
/// The qubit label refers to the dressed basis; at Δ_d = 0 the frame is the
/// identity and the drive phase is removed.
pub fn effective_hamiltonian(params: &SystemParams) -> Result<Operator> {
    params.validate()?;
    let d = derive(params)?;
    let s = params.space()?;
    let b = s.b();
    let b2 = &b * &b;
    let two_phonon = &(&b2 * &s.sp()) + &(&b2.dag() * &s.sm());
    let detuning = &(&s.num() + &(&s.excited() * 2.0)) * params.delta_d;
    let drive = &(&b + &b.dag()) * params.epsilon;
    Ok(&(&detuning + &(&two_phonon * d.lambda_eff)) + &drive)
}

/// `H_eff − i(κ/2)b†b − i(Γ/2)|e⟩⟨e|`.
pub fn nonhermitian_hamiltonian(params: &SystemParams) -> Result<Operator> {
    let s = params.space()?;
    let h = effective_hamiltonian(params)?;
    let damping = &(&s.num() * (params.kappa / 2.0)) + &(&s.excited() * (params.gamma / 2.0));
    Ok(&h - &damping.scale(C64::new(0.0, 1.0)))
}

/// Qubit decay, pure dephasing (σ_z at Γ_f/2), thermal excitation and
/// damping of the resonator. Zero-rate channels are kept in the list.
pub fn collapse_operators(params: &SystemParams) -> Result<Vec<CollapseOperator>> {
    let s = params.space()?;
    Ok(vec![
        CollapseOperator::new("qubit_decay", s.sm(), params.gamma)?,
        CollapseOperator::new("qubit_dephasing", s.sz(), params.gamma_phi / 2.0)?,
        CollapseOperator::new("thermal_excitation", s.bdag(), params.kappa * params.n_th)?,
        CollapseOperator::new("resonator_damping", s.b(), params.kappa * (params.n_th + 1.0))?,
    ])
}

/// Bose–Einstein occupation `1/(exp(ħω₀/k_BT) − 1)`.
pub fn thermal_occupation(omega0: f64, temperature: f64) -> Result<f64> {
    if !(temperature >= 0.0) {
        return Err(Error::param("temperature", "must be non-negative"));
    }
    if temperature == 0.0 {
        return Ok(0.0);
    }
    Ok(1.0 / (HBAR * omega0 / (K_B * temperature)).exp_m1())
}

/// Device-level quantities from which g, ε and Ω_p follow. SI units.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeviceGeometry {
    /// Charging energy E_c (J).
    pub e_c: f64,
    /// Josephson energy E_J (J).
    pub e_j: f64,
    /// Resonator–island capacitance C₀(0) (F).
    pub c0: f64,
    /// Static bias V₀ (V).
    pub v0: f64,
    /// Resonator–island gap d (m).
    pub gap: f64,
    /// Zero-point amplitude X₀ (m).
    pub zero_point: f64,
    /// Static field B₀ (T).
    pub b0: f64,
    /// Drive current amplitude I₀ (A).
    pub i0: f64,
    /// Resonator length L (m).
    pub length: f64,
    /// Line–SQUID mutual inductance M (H).
    pub mutual_inductance: f64,
    /// Microwave current amplitude I_p (A).
    pub i_p: f64,
    /// Gate charge n_g.
    pub n_g: f64,
}

/// `X₀ = √(ħ / 2mω₀)`.
pub fn zero_point_fluctuation(mass: f64, omega0: f64) -> Result<f64> {
    if !(mass > 0.0 && omega0 > 0.0) {
        return Err(Error::param("mass", "mass and frequency must be positive"));
    }
    Ok((HBAR / (2.0 * mass * omega0)).sqrt())
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::param(name, format!("must be positive, got {v}")))
    }
}

fn non_negative(name: &'static str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::param(name, format!("must be non-negative, got {v}")))
    }
}

impl DeviceGeometry {
    /// Operation close to the charge-degeneracy point n_g ≈ 0.5.
    pub fn near_degeneracy(&self) -> bool {
        (self.n_g - 0.5).abs() < 0.05
    }
}

/// `g = 2E_c C₀(0) V₀ X₀ / (e d ħ)`.
pub fn coupling_from_geometry(dev: &DeviceGeometry) -> Result<f64> {
    positive("gap", dev.gap)?;
    positive("e_c", dev.e_c)?;
    positive("c0", dev.c0)?;
    positive("zero_point", dev.zero_point)?;
    non_negative("v0", dev.v0)?;
    Ok(2.0 * dev.e_c * dev.c0 * dev.v0 * dev.zero_point / (E_CHARGE * dev.gap * HBAR))
}

/// `ε = B₀ I₀ L X₀ / ħ`.
pub fn drive_from_lorentz(dev: &DeviceGeometry) -> Result<f64> {
    positive("length", dev.length)?;
    positive("zero_point", dev.zero_point)?;
    non_negative("b0", dev.b0)?;
    non_negative("i0", dev.i0)?;
    Ok(dev.b0 * dev.i0 * dev.length * dev.zero_point / HBAR)
}

/// `Ω_p = π E_J M I_p / (ħ Φ₀)`.
pub fn rabi_from_line(dev: &DeviceGeometry) -> Result<f64> {
    non_negative("e_j", dev.e_j)?;
    non_negative("mutual_inductance", dev.mutual_inductance)?;
    non_negative("i_p", dev.i_p)?;
    Ok(PI * dev.e_j * dev.mutual_inductance * dev.i_p / (HBAR * FLUX_QUANTUM))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const MHZ: f64 = 2.0 * PI * 1e6;

    fn device() -> DeviceGeometry {
        DeviceGeometry {
            e_c: PLANCK * 5e9,
            e_j: PLANCK * 10e9,
            c0: 5e-17,
            v0: 1.0,
            gap: 100e-9,
            zero_point: zero_point_fluctuation(1e-17, 2.0 * PI * 1e9).unwrap(),
            b0: 0.1,
            i0: 1e-9,
            length: 1e-6,
            mutual_inductance: 1e-11,
            i_p: 1e-7,
            n_g: 0.5,
        }
    }

    #[test]
    fn coupling_map() {
        let mut dev = device();
        dev.v0 = 0.0;
        assert_eq!(coupling_from_geometry(&dev).unwrap(), 0.0);
        dev.v0 = 0.3;
        let g1 = coupling_from_geometry(&dev).unwrap();
        dev.v0 = 0.6;
        assert_relative_eq!(coupling_from_geometry(&dev).unwrap(), 2.0 * g1, max_relative = 1e-14);

        // solve V₀ for g/2π = 80 MHz, then go forward again
        let target = 80.0 * MHZ;
        dev.v0 = target * E_CHARGE * dev.gap * HBAR / (2.0 * dev.e_c * dev.c0 * dev.zero_point);
        assert_relative_eq!(coupling_from_geometry(&dev).unwrap(), target, max_relative = 1e-12);

        dev.gap = 0.0;
        assert!(coupling_from_geometry(&dev).is_err());
    }

    #[test]
    fn drive_and_rabi_maps() {
        let mut dev = device();
        dev.i0 = 0.0;
        assert_eq!(drive_from_lorentz(&dev).unwrap(), 0.0);
        dev.i0 = 1e-9;
        let e1 = drive_from_lorentz(&dev).unwrap();
        dev.b0 *= 3.0;
        assert_relative_eq!(drive_from_lorentz(&dev).unwrap(), 3.0 * e1, max_relative = 1e-14);

        let target = 100.0 * MHZ;
        dev.i_p = target * HBAR * FLUX_QUANTUM / (PI * dev.e_j * dev.mutual_inductance);
        assert_relative_eq!(rabi_from_line(&dev).unwrap(), target, max_relative = 1e-12);
        assert!(dev.near_degeneracy());
    }

    #[test]
    fn derived_values() {
        let mut p = SystemParams::baseline();
        p.g = 0.1 * p.omega0;
        p.omega_p_drive = 0.1 * p.omega0;
        let d = derive(&p).unwrap();
        assert_relative_eq!(d.lambda_eff, p.omega0 / 500.0, max_relative = 1e-12);

        let p = SystemParams::baseline();
        let d = derive(&p).unwrap();
        assert_relative_eq!(d.lambda_eff / MHZ, 1.28, max_relative = 1e-12);

        let mut p = SystemParams::baseline();
        p.omega_p_drive = 0.0;
        let d = derive(&p).unwrap();
        assert_eq!(d.lambda_eff, 0.0);
        assert_eq!(d.delta_tilde, p.delta / 2.0);
        assert_eq!(d.theta, 0.0);

        p.omega0 = 0.0;
        assert!(derive(&p).is_err());
    }

    #[test]
    fn derive_is_scale_covariant() {
        let p = SystemParams::baseline();
        let d = derive(&p).unwrap();
        let s = 3.7;
        let mut q = p.clone();
        q.omega0 *= s;
        q.g *= s;
        q.omega_p_drive *= s;
        q.delta *= s;
        let e = derive(&q).unwrap();
        assert_relative_eq!(e.lambda_eff, s * d.lambda_eff, max_relative = 1e-12);
        assert_relative_eq!(e.delta_tilde, s * d.delta_tilde, max_relative = 1e-12);
        assert_relative_eq!(e.theta, d.theta, max_relative = 1e-12);
        assert_relative_eq!(e.beta, d.beta, max_relative = 1e-12);
    }

    #[test]
    fn resonance() {
        let w0p = 1000.0 * MHZ;
        assert_eq!(resonant_delta_for(w0p, 0.0).unwrap(), 2.0 * w0p);
        let delta = resonant_delta_for(w0p, 100.0 * MHZ).unwrap();
        assert_relative_eq!(delta / MHZ, 2.0 * (1000.0f64.powi(2) - 100.0f64.powi(2)).sqrt(), max_relative = 1e-12);
        assert_relative_eq!(delta / MHZ, 1989.97487, max_relative = 1e-8);

        let p = SystemParams::baseline();
        let d = derive(&p).unwrap();
        assert_relative_eq!(d.delta_tilde, d.omega0_prime, max_relative = 1e-12);
        assert!(matches!(resonant_delta_for(1.0, 2.0), Err(Error::NoResonance { .. })));
    }

    /// The renormalized frequency must agree with the exact spacing between the
    /// two lowest qubit-ground dressed levels of the undriven lab Hamiltonian.
    #[test]
    fn renormalized_frequency_matches_spectrum() {
        for rabi_mhz in [100.0, 200.0] {
            let mut p = SystemParams::baseline();
            p.omega_p_drive = rabi_mhz * MHZ;
            p.delta = resonant_delta(&p).unwrap();
            p.epsilon = 0.0;
            let h = lab_hamiltonian(&p).unwrap().static_part();
            let s = p.space().unwrap();
            let eig = nalgebra::SymmetricEigen::new(h.matrix().clone());
            let level = |q: usize, n: usize| {
                let idx = s.index(q, n);
                let k = (0..eig.eigenvalues.len())
                    .max_by(|&a, &b| {
                        eig.eigenvectors[(idx, a)].norm().partial_cmp(&eig.eigenvectors[(idx, b)].norm()).unwrap()
                    })
                    .unwrap();
                eig.eigenvalues[k]
            };
            let spacing = level(0, 1) - level(0, 0);
            let shift_exact = spacing - p.omega0;
            let shift_model = derive(&p).unwrap().omega0_prime - p.omega0;
            assert!(
                (shift_exact - shift_model).abs() < 0.05 * shift_model.abs(),
                "Ω_p = {rabi_mhz} MHz: exact shift {} MHz, model {} MHz",
                shift_exact / MHZ,
                shift_model / MHZ
            );
        }
    }

    #[test]
    fn hamiltonians() {
        let p = SystemParams::baseline();
        let h = lab_hamiltonian(&p).unwrap();
        for t in [0.0, 1.3e-10, 7.7e-9, 4.2e-7] {
            assert!(h.at(t).is_hermitian(1e-12 * h.at(t).max_abs()));
        }
        let mut q = p.clone();
        q.epsilon = 0.0;
        let h0 = lab_hamiltonian(&q).unwrap();
        assert!(h0.is_static());
        assert_eq!(h0.at(0.0), h0.at(1e-9));

        let s = p.space().unwrap();
        let mut q = p.clone();
        q.epsilon = 0.0;
        let heff = effective_hamiltonian(&q).unwrap();
        let lam = derive(&q).unwrap().lambda_eff;
        let e0 = s.index(1, 0);
        let g2 = s.index(0, 2);
        assert_relative_eq!(heff.get(e0, g2).re, 2f64.sqrt() * lam, max_relative = 1e-12);
        assert!(heff.is_hermitian(1e-6));

        // the {|g,2⟩, |e,0⟩} block splits by ±√2λ
        let block = nalgebra::Matrix2::new(heff.get(g2, g2), heff.get(g2, e0), heff.get(e0, g2), heff.get(e0, e0));
        let ev = nalgebra::SymmetricEigen::new(block).eigenvalues;
        let (lo, hi) = (ev.min(), ev.max());
        assert_relative_eq!(hi, 2f64.sqrt() * lam, max_relative = 1e-12);
        assert_relative_eq!(lo, -(2f64.sqrt()) * lam, max_relative = 1e-12);

        q.omega_p_drive = 0.0;
        let diag = effective_hamiltonian(&q).unwrap();
        let off = (0..s.dim())
            .flat_map(|i| (0..s.dim()).map(move |j| (i, j)))
            .filter(|(i, j)| i != j)
            .map(|(i, j)| diag.get(i, j).norm())
            .fold(0.0, f64::max);
        assert_eq!(off, 0.0);
    }

    #[test]
    fn nonhermitian_damping() {
        let p = SystemParams::baseline();
        let s = p.space().unwrap();
        let h = nonhermitian_hamiltonian(&p).unwrap();
        let g2 = s.index(0, 2);
        assert_relative_eq!(h.get(g2, g2).im, -p.kappa, max_relative = 1e-12);
        let anti = (&h - &h.dag()).scale(C64::new(0.0, -0.5));
        let mut diag: Vec<f64> = [s.index(0, 0), s.index(0, 1), s.index(0, 2), s.index(1, 0)]
            .iter()
            .map(|&i| anti.get(i, i).re)
            .collect();
        diag.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut expected = vec![0.0, -p.kappa / 2.0, -p.kappa, -p.gamma / 2.0];
        expected.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (a, b) in diag.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-6);
        }

        let mut q = p.clone();
        q.gamma = 0.0;
        q.kappa = 0.0;
        assert_eq!(nonhermitian_hamiltonian(&q).unwrap(), effective_hamiltonian(&q).unwrap());
    }

    #[test]
    fn channels() {
        let p = SystemParams::baseline();
        let c = collapse_operators(&p).unwrap();
        assert_eq!(c.len(), 4);
        assert_eq!(c[2].rate, 0.0);
        let mut q = p.clone();
        q.gamma = -1.0;
        assert!(collapse_operators(&q).is_err());

        let w0 = 2.0 * PI * 1e9;
        let t = HBAR * w0 / (K_B * 2f64.ln());
        assert_relative_eq!(thermal_occupation(w0, t).unwrap(), 1.0, max_relative = 1e-12);
        let n = thermal_occupation(w0, 10e-3).unwrap();
        assert!(n > 1e-3 && n < 1e-2, "n_th = {n}");
        assert_relative_eq!(n, 8.3e-3, max_relative = 0.02);
    }

    #[test]
    fn validity_flags() {
        let p = SystemParams::baseline();
        let v = p.validity();
        assert!(v.satisfied);
        assert_relative_eq!(v.drive_ratio, 400.0, max_relative = 1e-12);
        let mut q = p.clone();
        q.omega_p_drive = 500.0 * MHZ;
        q.delta = resonant_delta(&q).unwrap();
        assert!(!q.validity().satisfied);
    }
}
