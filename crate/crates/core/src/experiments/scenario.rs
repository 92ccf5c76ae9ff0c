//! Built-in reproductions of the reference figures.

use super::config::{Kind, OutputConfig, Pipeline, Scenario, SolverConfig, SweepConfig, SystemConfig};
use crate::error::{Error, Result};

pub struct Builtin {
    pub name: &'static str,
    pub description: &'static str,
    build: fn() -> Scenario,
}

impl Builtin {
    pub fn scenario(&self) -> Scenario {
        let mut s = (self.build)();
        s.output.name = self.name.into();
        s.output.description = self.description.into();
        s
    }
}

pub const BUILTINS: &[Builtin] = &[
    Builtin { name: "fig2d", description: "Rabi oscillation |e,0> <-> |g,2> from the full Hamiltonian, no dissipation", build: fig2d },
    Builtin { name: "fig3a", description: "P_n(t) and <n>(t) from the ground state, lab frame", build: fig3a },
    Builtin { name: "fig3b", description: "steady-state g2(tau), lab frame", build: fig3b },
    Builtin { name: "fig4", description: "<n> and g2(0) versus mechanical drive detuning", build: fig4 },
    Builtin { name: "fig5a", description: "g2(0) versus qubit decay for three qubit drive strengths", build: fig5a },
    Builtin { name: "fig5b", description: "g2(0) versus thermal occupation for two quality factors", build: fig5b },
    Builtin { name: "fig6", description: "g2(tau) for three qubit dephasing rates", build: fig6 },
    Builtin { name: "fig7a", description: "P_e, P_2 and g2(0) under a mechanical drive sweep", build: fig7a },
    Builtin { name: "fig7b", description: "detection ratio P_e/P_2 under a drive sweep for two qubit drive strengths", build: fig7b },
    Builtin { name: "fig8a", description: "four-state truncation fidelity versus mechanical drive", build: fig8a },
    Builtin { name: "fig8b", description: "four-state truncation fidelity versus qubit drive strength", build: fig8b },
];

pub fn builtin(name: &str) -> Result<Scenario> {
    BUILTINS
        .iter()
        .find(|b| b.name == name)
        .map(Builtin::scenario)
        .ok_or_else(|| Error::Config(format!("no built-in scenario named '{name}'")))
}

const MHZ: f64 = 1e6;


fn scenario(system: SystemConfig, sweep: SweepConfig, observables: &[&str]) -> Scenario {
    Scenario {
        system,
        solver: SolverConfig::default(),
        sweep,
        output: OutputConfig {
            name: String::new(),
            description: String::new(),
            observables: observables.iter().map(|s| s.to_string()).collect(),
            file: None,
        },
    }
}

fn fig2d() -> Scenario {
    let system = SystemConfig {
        g_hz: 100.0 * MHZ,
        omega_p_hz: 100.0 * MHZ,
        epsilon_hz: 0.0,
        gamma_hz: 0.0,
        kappa_hz: Some(0.0),
        ..Default::default()
    };
    let times = (0..=500).map(|k| k as f64 * 1e-9).collect();
    let mut sweep = SweepConfig::new(Kind::Evolution, Pipeline::LabFrame, "time_s", times);
    sweep.initial = Some("e0".into());
    scenario(system, sweep, &["p_0e", "p_2g"])
}

fn fig3a() -> Scenario {
    let grid = (0..=400).map(|k| k as f64 * 0.05).collect();
    let sweep = SweepConfig::new(Kind::Evolution, Pipeline::LabFrame, "kappa_t", grid);
    scenario(SystemConfig::default(), sweep, &["p0", "p1", "p2", "n_mean"])
}

fn tau_grid() -> Vec<f64> {
    (0..=50).map(|k| k as f64 * 0.1).collect()
}

fn fig3b() -> Scenario {
    let sweep = SweepConfig::new(Kind::Correlation, Pipeline::LabFrame, "kappa_tau", tau_grid());
    scenario(SystemConfig::default(), sweep, &["g2_tau"])
}

/// Coarse 0.5 MHz steps outside ±2 MHz, 0.1 MHz inside.
pub fn fig4_grid() -> Vec<f64> {
    let mut tenths: Vec<i64> = (-60..-20).step_by(5).collect();
    tenths.extend(-20..20);
    tenths.extend((20..=60).step_by(5));
    tenths.into_iter().map(|k| k as f64 * 0.1 * MHZ).collect()
}

fn fig4() -> Scenario {
    let sweep = SweepConfig::new(Kind::Sweep, Pipeline::LabFrame, "delta_d_hz", fig4_grid());
    scenario(SystemConfig::default(), sweep, &["n_mean", "g2_0"])
}

fn fig5a() -> Scenario {
    let grid = (1..=12).map(|k| k as f64 * 0.5 * MHZ).collect();
    let sweep = SweepConfig::new(Kind::Sweep, Pipeline::LabFrame, "gamma_hz", grid)
        .with_series("omega_p_hz", vec![50.0 * MHZ, 100.0 * MHZ, 200.0 * MHZ]);
    scenario(SystemConfig::default(), sweep, &["g2_0", "n_mean"])
}

fn fig5b() -> Scenario {
    // n_th = 2 puts ~3% of the thermal weight above n = 9
    let system = SystemConfig { fock_dim: 15, ..Default::default() };
    let grid = (0..=8).map(|k| k as f64 * 0.25).collect();
    let sweep = SweepConfig::new(Kind::Sweep, Pipeline::LabFrame, "n_th", grid).with_series("quality_factor", vec![5e3, 5e4]);
    scenario(system, sweep, &["g2_0", "n_mean"])
}

fn fig6() -> Scenario {
    let sweep = SweepConfig::new(Kind::Correlation, Pipeline::LabFrame, "kappa_tau", tau_grid())
        .with_series("gamma_phi_hz", vec![0.0, 0.2 * MHZ, 2.0 * MHZ]);
    scenario(SystemConfig::default(), sweep, &["g2_tau"])
}

/// 0.05 to 1.5 MHz in 0.05 MHz steps.
fn epsilon_grid() -> Vec<f64> {
    (1..=30).map(|k| k as f64 * 0.05 * MHZ).collect()
}

fn fig7a() -> Scenario {
    let sweep = SweepConfig::new(Kind::Sweep, Pipeline::LabFrame, "epsilon_hz", epsilon_grid());
    scenario(SystemConfig::default(), sweep, &["g2_0", "p_e", "p2"])
}

fn fig7b() -> Scenario {
    let sweep = SweepConfig::new(Kind::Sweep, Pipeline::LabFrame, "epsilon_hz", epsilon_grid())
        .with_series("omega_p_hz", vec![100.0 * MHZ, 200.0 * MHZ]);
    scenario(SystemConfig::default(), sweep, &["p2", "ratio", "g2_0"])
}

fn fig8a() -> Scenario {
    let sweep = SweepConfig::new(Kind::Sweep, Pipeline::LabFrame, "epsilon_hz", epsilon_grid());
    scenario(SystemConfig::default(), sweep, &["fidelity", "g2_0"])
}

fn fig8b() -> Scenario {
    let grid = (1..=12).map(|k| k as f64 * 25.0 * MHZ).collect();
    let sweep = SweepConfig::new(Kind::Sweep, Pipeline::LabFrame, "omega_p_hz", grid);
    scenario(SystemConfig::default(), sweep, &["fidelity", "g2_0"])
}
