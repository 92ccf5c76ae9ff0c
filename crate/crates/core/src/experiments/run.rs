//! Executes scenarios point by point on a worker pool.

use std::time::{Duration, Instant};

use log::{info, warn};
use rayon::prelude::*;

use super::config::{parse_initial, Kind, Pipeline, Scenario, SolverConfig, SweepConfig, SystemConfig};
use crate::analytic::{blockade_condition, four_state_oracle, g2_analytic, steady_amplitudes, AnalyticAmplitudes};
use crate::dynamics::{mesolve, schrodinger_evolve, MasterEquation, Observable, SolverOptions};
use crate::error::{Error, Result};
use crate::hamiltonian::HarmonicHamiltonian;
use crate::model::{collapse_operators, derive, drive_frame, effective_hamiltonian, lab_hamiltonian, SystemParams};
use crate::observables::{
    detection_quantities, g2_tau, g2_tau_driven, g2_zero, mean_number, truncation_fidelity, P2_FLOOR,
};
use crate::ode::OdeOptions;
use crate::operators::{DensityMatrix, Operator};
use crate::steadystate::{build_liouvillian, settle, steadystate_direct, window_average, SettledState, TimeAverageOptions};

#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    /// Value of the series parameter, if the scenario has one.
    pub series: Option<f64>,
    pub axis: f64,
    /// One value per requested observable, or the error that stopped this
    /// point.
    pub outcome: std::result::Result<Vec<f64>, String>,
}

#[derive(Clone, Debug)]
pub struct SweepResult {
    pub name: String,
    pub series_param: Option<String>,
    pub axis_param: String,
    pub observables: Vec<String>,
    /// Grid order: series-major, then axis.
    pub rows: Vec<Row>,
    pub config_hash: String,
    pub pipeline: Pipeline,
    pub solver: SolverConfig,
    pub wall_time: Duration,
}

impl SweepResult {
    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| r.outcome.is_err()).count()
    }

    /// Values of `observable` (NaN for failed rows) for one series value, or
    /// for all rows if `series` is `None`.
    pub fn column(&self, observable: &str, series: Option<f64>) -> Option<Vec<(f64, f64)>> {
        let k = self.observables.iter().position(|o| o == observable)?;
        Some(
            self.rows
                .iter()
                .filter(|r| series.is_none() || r.series == series)
                .map(|r| (r.axis, r.outcome.as_ref().map(|v| v[k]).unwrap_or(f64::NAN)))
                .collect(),
        )
    }
}

/// Runs every point of `scenario`; solver failures are recorded per row.
/// `threads = 0` uses one worker per core.
pub fn run(scenario: &Scenario, threads: usize) -> Result<SweepResult> {
    scenario.validate()?;
    let start = Instant::now();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    let systems = scenario.series_systems()?;
    let series: Vec<Option<f64>> = match &scenario.sweep.series_param {
        Some(_) => scenario.sweep.series_values.iter().map(|&v| Some(v)).collect(),
        None => vec![None],
    };
    let sw = &scenario.sweep;
    let obs = &scenario.output.observables;
    let solver = &scenario.solver;
    info!("{}: {} pipeline, {} series x {} points", scenario.name(), sw.pipeline, systems.len(), sw.values.len());

    let rows: Vec<Row> = pool.install(|| match sw.kind {
        Kind::Sweep => {
            let jobs: Vec<(Option<f64>, &SystemConfig, f64)> = series
                .iter()
                .zip(&systems)
                .flat_map(|(s, sys)| sw.values.iter().map(move |&v| (*s, sys, v)))
                .collect();
            jobs.par_iter()
                .map(|&(s, sys, v)| {
                    let outcome = (|| {
                        let mut sys = sys.clone();
                        sys.set(&sw.param, v)?;
                        sweep_point(&sys.to_params()?, solver, sw.pipeline, obs)
                    })();
                    log_point(scenario.name(), &sw.param, v, &outcome);
                    Row { series: s, axis: v, outcome: outcome.map_err(|e| e.to_string()) }
                })
                .collect()
        }
        Kind::Evolution | Kind::Correlation => {
            let per_series: Vec<Vec<Row>> = series
                .par_iter()
                .zip(systems.par_iter())
                .map(|(s, sys)| {
                    let outcome = sys.to_params().and_then(|p| match sw.kind {
                        Kind::Evolution => evolution(&p, solver, sw, obs),
                        _ => correlation(&p, solver, sw),
                    });
                    match outcome {
                        Ok(values) => sw
                            .values
                            .iter()
                            .zip(values)
                            .map(|(&v, vals)| Row { series: *s, axis: v, outcome: Ok(vals) })
                            .collect(),
                        Err(e) => {
                            warn!("{}: series {s:?} failed: {e}", scenario.name());
                            let msg = e.to_string();
                            sw.values.iter().map(|&v| Row { series: *s, axis: v, outcome: Err(msg.clone()) }).collect()
                        }
                    }
                })
                .collect();
            per_series.into_iter().flatten().collect()
        }
    });

    Ok(SweepResult {
        name: scenario.name().into(),
        series_param: sw.series_param.clone(),
        axis_param: sw.param.clone(),
        observables: obs.clone(),
        rows,
        config_hash: scenario.config_hash()?,
        pipeline: sw.pipeline,
        solver: solver.clone(),
        wall_time: start.elapsed(),
    })
}

fn log_point(name: &str, param: &str, v: f64, outcome: &Result<Vec<f64>>) {
    match outcome {
        Ok(vals) => info!("{name}: {param} = {v:e} -> {vals:?}"),
        Err(e) => warn!("{name}: {param} = {v:e} failed: {e}"),
    }
}

fn ode_options(solver: &SolverConfig) -> OdeOptions {
    OdeOptions { rtol: solver.rtol, atol: solver.atol, max_steps: solver.max_steps, ..Default::default() }
}

fn require_kappa(p: &SystemParams, what: &str) -> Result<f64> {
    if p.kappa > 0.0 {
        Ok(p.kappa)
    } else {
        Err(Error::Config(format!("{what} is in units of 1/kappa but kappa = 0")))
    }
}

/// Transient of `transient_kappa / κ` in the drive frame, averaged over
/// `window_periods` drive periods.
pub fn time_average_options(p: &SystemParams, solver: &SolverConfig) -> Result<TimeAverageOptions> {
    Ok(TimeAverageOptions {
        transient: Some(solver.transient_kappa / require_kappa(p, "the transient")?),
        window_periods: solver.window_periods,
        samples: solver.samples,
        drift_tol: solver.drift_tol,
        accelerate: solver.accelerate,
        frame: Some(drive_frame(p)),
        ode: ode_options(solver),
        initial: None,
    })
}

/// Lab-frame model after the transient, with its window-averaged ρ and ⟨n⟩
/// peak-to-peak.
pub fn settle_lab(p: &SystemParams, solver: &SolverConfig) -> Result<(SettledState, DensityMatrix, f64)> {
    let h = lab_hamiltonian(p)?;
    let c_ops = collapse_operators(p)?;
    let opts = time_average_options(p, solver)?;
    let settled = settle(&h, &c_ops, &opts)?;
    let avg = window_average(&settled, &[Observable::new("n_mean", p.space()?.num())], &opts)?;
    let ptp = avg.observables[0].peak_to_peak;
    Ok((settled, avg.rho, ptp))
}

/// Null-space steady state of the static effective model.
pub fn effective_steady_state(p: &SystemParams) -> Result<DensityMatrix> {
    let l = build_liouvillian(&effective_hamiltonian(p)?, &collapse_operators(p)?)?;
    steadystate_direct(&l)
}

fn closed_form_only(p: &SystemParams, pipeline: Pipeline) -> Result<()> {
    if p.delta_d != 0.0 || p.n_th != 0.0 || p.gamma_phi != 0.0 {
        return Err(Error::Config(format!(
            "the {pipeline} pipeline assumes resonant drive, zero temperature and no dephasing"
        )));
    }
    Ok(())
}

enum PointState {
    Numeric { rho: DensityMatrix, n_ptp: Option<f64> },
    Amplitudes { amps: AnalyticAmplitudes, g2: f64 },
}

fn sweep_point(p: &SystemParams, solver: &SolverConfig, pipeline: Pipeline, observables: &[String]) -> Result<Vec<f64>> {
    let d = derive(p)?;
    let state = match pipeline {
        Pipeline::LabFrame => {
            let (_, rho, ptp) = settle_lab(p, solver)?;
            PointState::Numeric { rho, n_ptp: Some(ptp) }
        }
        Pipeline::EffectiveStatic => PointState::Numeric { rho: effective_steady_state(p)?, n_ptp: None },
        Pipeline::Analytic => {
            closed_form_only(p, pipeline)?;
            let amps = steady_amplitudes(p.epsilon, p.kappa, p.gamma, d.lambda_eff)?;
            PointState::Amplitudes { amps, g2: g2_analytic(p.epsilon, p.kappa, p.gamma, d.lambda_eff)? }
        }
        Pipeline::Oracle => {
            closed_form_only(p, pipeline)?;
            let o = four_state_oracle(p.epsilon, p.kappa, p.gamma, d.lambda_eff)?;
            PointState::Amplitudes { amps: o.amplitudes, g2: o.g2 }
        }
    };
    let ratio = |p_e: f64, p2: f64| if p2 > P2_FLOOR { p_e / p2 } else { f64::NAN };
    observables
        .iter()
        .map(|name| {
            Ok(match (&state, name.as_str()) {
                (_, "g2_analytic") => g2_analytic(p.epsilon, p.kappa, p.gamma, d.lambda_eff)?,
                (_, "blockade_ratio") => blockade_condition(p.epsilon, p.kappa, p.gamma, d.lambda_eff).ratio,
                (PointState::Numeric { rho, .. }, "n_mean") => mean_number(rho)?,
                (PointState::Numeric { rho, .. }, "g2_0") => g2_zero(rho)?,
                (PointState::Numeric { rho, .. }, "fidelity") => truncation_fidelity(rho)?,
                (PointState::Numeric { rho, .. }, "p_e") => detection_quantities(rho)?.p_e,
                (PointState::Numeric { rho, .. }, "p2") => detection_quantities(rho)?.p2,
                (PointState::Numeric { rho, .. }, "ratio") => detection_quantities(rho)?.ratio.unwrap_or(f64::NAN),
                (PointState::Numeric { n_ptp: Some(v), .. }, "n_ptp") => *v,
                (PointState::Amplitudes { amps, .. }, "n_mean") => amps.c1g.norm_sqr() + 2.0 * amps.c2g.norm_sqr(),
                (PointState::Amplitudes { g2, .. }, "g2_0") => *g2,
                (PointState::Amplitudes { amps, .. }, "p_e") => amps.c0e.norm_sqr(),
                (PointState::Amplitudes { amps, .. }, "p2") => amps.c2g.norm_sqr(),
                (PointState::Amplitudes { amps, .. }, "ratio") => ratio(amps.c0e.norm_sqr(), amps.c2g.norm_sqr()),
                (_, other) => return Err(Error::Config(format!("observable '{other}' unavailable for {pipeline}"))),
            })
        })
        .collect()
}

fn evolution_observable(p: &SystemParams, name: &str) -> Result<Operator> {
    let s = p.space()?;
    let basis_projector = |q, n| Ok::<_, Error>(DensityMatrix::pure(&s.basis(q, n)?).as_operator());
    match name {
        "p0" | "p1" | "p2" | "p3" => s.fock_projector(name[1..].parse().expect("digit")),
        "n_mean" => Ok(s.num()),
        "p_0e" => basis_projector(1, 0),
        "p_2g" => basis_projector(0, 2),
        "p_e" => Ok(s.excited()),
        other => Err(Error::Config(format!("unknown evolution observable '{other}'"))),
    }
}

/// Time traces from a bare product state. Without any dissipation the
/// Schrödinger equation is integrated instead of the master equation.
fn evolution(p: &SystemParams, solver: &SolverConfig, sw: &SweepConfig, observables: &[String]) -> Result<Vec<Vec<f64>>> {
    let scale = match sw.param.as_str() {
        "kappa_t" => 1.0 / require_kappa(p, "kappa_t")?,
        _ => 1.0,
    };
    let mut times: Vec<f64> = sw.values.iter().map(|v| v * scale).collect();
    let prepend = times[0] != 0.0;
    if prepend {
        times.insert(0, 0.0);
    }
    let obs = observables
        .iter()
        .map(|n| Ok(Observable::new(n.clone(), evolution_observable(p, n)?)))
        .collect::<Result<Vec<_>>>()?;
    let (q, n) = parse_initial(sw.initial.as_deref().unwrap_or("g0"), p.fock_dim)?;
    let psi0 = p.space()?.basis(q, n)?;
    let c_ops: Vec<_> = collapse_operators(p)?.into_iter().filter(|c| c.rate > 0.0).collect();
    let ode = ode_options(solver);
    let mut traj = match sw.pipeline {
        Pipeline::LabFrame if c_ops.is_empty() => {
            schrodinger_evolve(&lab_hamiltonian(p)?, &psi0, &times, &obs, &SolverOptions { ode, ..Default::default() })?
        }
        Pipeline::LabFrame => {
            let opts = SolverOptions { ode, frame: Some(drive_frame(p)), store_states: false };
            mesolve(&lab_hamiltonian(p)?, &psi0.to_density(), &c_ops, &times, &obs, &opts)?
        }
        Pipeline::EffectiveStatic => {
            let h = HarmonicHamiltonian::constant(effective_hamiltonian(p)?);
            mesolve(&h, &psi0.to_density(), &c_ops, &times, &obs, &SolverOptions { ode, ..Default::default() })?
        }
        other => return Err(Error::Config(format!("{other} cannot evolve states"))),
    };
    if prepend {
        traj.records.remove(0);
    }
    Ok(traj.records)
}

/// Steady-state g₂(τ), one single-valued row per delay.
fn correlation(p: &SystemParams, solver: &SolverConfig, sw: &SweepConfig) -> Result<Vec<Vec<f64>>> {
    let scale = match sw.param.as_str() {
        "kappa_tau" => 1.0 / require_kappa(p, "kappa_tau")?,
        _ => 1.0,
    };
    let taus: Vec<f64> = sw.values.iter().map(|v| v * scale).collect();
    let ode = ode_options(solver);
    let curve = match sw.pipeline {
        Pipeline::LabFrame => {
            let (settled, rho, _) = settle_lab(p, solver)?;
            g2_tau_driven(&settled, mean_number(&rho)?, &taus, solver.phases, &ode)?
        }
        Pipeline::EffectiveStatic => {
            let rho = effective_steady_state(p)?;
            let h = HarmonicHamiltonian::constant(effective_hamiltonian(p)?);
            let eq = MasterEquation::new(&h, &collapse_operators(p)?, None)?;
            g2_tau(&eq, &rho, &taus, &ode)?
        }
        other => return Err(Error::Config(format!("{other} cannot compute correlations"))),
    };
    Ok(curve.values.into_iter().map(|v| vec![v]).collect())
}

/// Rabi frequency from a population that starts at its maximum. The first
/// minimum sits at half a Rabi period, so `Ω = π / (2 t_min)` for
/// `P = cos²(Ωt)`; `t_min` comes from a least-squares parabola through the
/// bottom quarter of the first dip, which averages out fast ripple.
pub fn fit_rabi_frequency(times: &[f64], pop: &[f64]) -> Result<f64> {
    if times.len() != pop.len() || times.len() < 3 {
        return Err(Error::param("times", "need at least three matching samples"));
    }
    let lo = pop.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = pop[0];
    let mid = 0.5 * (lo + hi);
    let enter = pop.iter().position(|&v| v < mid).ok_or_else(|| Error::param("pop", "no oscillation"))?;
    let leave = pop[enter..].iter().position(|&v| v >= mid).map_or(pop.len(), |k| enter + k);
    let dip_lo = pop[enter..leave].iter().cloned().fold(f64::INFINITY, f64::min);
    let cut = dip_lo + 0.25 * (hi - dip_lo);
    let idx: Vec<usize> = (enter..leave).filter(|&k| pop[k] <= cut).collect();
    if idx.len() < 3 {
        return Err(Error::param("times", "first minimum is not resolved"));
    }
    // centre and scale for conditioning
    let t0 = times[idx[0]];
    let s = times[*idx.last().unwrap()] - t0;
    let mut ata = nalgebra::Matrix3::<f64>::zeros();
    let mut atb = nalgebra::Vector3::<f64>::zeros();
    for &k in &idx {
        let x = (times[k] - t0) / s;
        let row = nalgebra::Vector3::new(1.0, x, x * x);
        ata += row * row.transpose();
        atb += row * pop[k];
    }
    let c = ata.lu().solve(&atb).ok_or_else(|| Error::Singular("parabola fit".into()))?;
    if !(c[2] > 0.0) {
        return Err(Error::param("pop", "first dip is not convex"));
    }
    let t_min = t0 - s * c[1] / (2.0 * c[2]);
    if !(t_min > 0.0) {
        return Err(Error::param("pop", "minimum at the initial time"));
    }
    Ok(std::f64::consts::PI / (2.0 * t_min))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::config::{OutputConfig, SweepConfig};

    fn closed_form(pipeline: Pipeline, observables: &[&str]) -> Scenario {
        Scenario {
            system: SystemConfig::default(),
            solver: SolverConfig::default(),
            sweep: SweepConfig::new(Kind::Sweep, pipeline, "epsilon_hz", vec![0.02e6, 0.2e6]),
            output: OutputConfig {
                name: "t".into(),
                description: String::new(),
                observables: observables.iter().map(|s| s.to_string()).collect(),
                file: None,
            },
        }
    }

    #[test]
    fn analytic_pipeline_matches_closed_form() {
        let r = run(&closed_form(Pipeline::Analytic, &["g2_0", "g2_analytic", "blockade_ratio"]), 2).unwrap();
        assert_eq!(r.rows.len(), 2);
        let row = r.rows[1].outcome.as_ref().unwrap();
        assert!((row[0] - 7.445e-3).abs() < 1e-5, "{row:?}");
        assert_eq!(row[0], row[1]);
        assert!(row[2] > 5.0);
    }

    #[test]
    fn rows_follow_grid_order_with_series() {
        let mut s = closed_form(Pipeline::Oracle, &["g2_0", "p2"]);
        s.sweep = s.sweep.clone().with_series("gamma_hz", vec![1e6, 2e6, 3e6]);
        let r = run(&s, 3).unwrap();
        let keys: Vec<_> = r.rows.iter().map(|r| (r.series.unwrap(), r.axis)).collect();
        assert_eq!(keys.len(), 6);
        assert_eq!(keys[0], (1e6, 0.02e6));
        assert_eq!(keys[5], (3e6, 0.2e6));
        assert_eq!(r.failures(), 0);
    }

    #[test]
    fn point_errors_are_attached_to_rows() {
        // the closed forms reject a detuned drive; the resonant point succeeds
        let mut s = closed_form(Pipeline::Oracle, &["g2_0"]);
        s.sweep.param = "delta_d_hz".into();
        s.sweep.values = vec![0.0, 1e6];
        let r = run(&s, 1).unwrap();
        assert!(r.rows[0].outcome.is_ok());
        assert!(r.rows[1].outcome.is_err());
        assert_eq!(r.failures(), 1);
    }

    #[test]
    fn effective_static_sweep_and_correlation() {
        let r = run(&closed_form(Pipeline::EffectiveStatic, &["g2_0", "fidelity", "n_mean"]), 2).unwrap();
        let row = r.rows[1].outcome.as_ref().unwrap();
        assert!(row[0] < 0.05 && row[1] > 0.99 && row[2] > 0.1, "{row:?}");

        let mut c = closed_form(Pipeline::EffectiveStatic, &["g2_tau"]);
        c.sweep = SweepConfig::new(Kind::Correlation, Pipeline::EffectiveStatic, "kappa_tau", vec![0.0, 1.0, 10.0]);
        let r = run(&c, 1).unwrap();
        let g: Vec<f64> = r.rows.iter().map(|r| r.outcome.as_ref().unwrap()[0]).collect();
        assert!((g[0] - row[0]).abs() < 1e-9 * row[0].max(1.0), "{g:?}");
        assert!(g[1] > g[0]);
        assert!((g[2] - 1.0).abs() < 0.05, "{g:?}");
    }

    #[test]
    fn effective_static_evolution_conserves_probability() {
        let mut s = closed_form(Pipeline::EffectiveStatic, &["p0", "p1", "p2", "p3"]);
        s.sweep = SweepConfig::new(Kind::Evolution, Pipeline::EffectiveStatic, "kappa_t", vec![0.5, 1.0, 2.0]);
        let r = run(&s, 1).unwrap();
        assert_eq!(r.rows.len(), 3);
        for row in &r.rows {
            let v = row.outcome.as_ref().unwrap();
            let total: f64 = v.iter().sum();
            assert!(total <= 1.0 + 1e-9 && total > 0.99, "{v:?}");
        }
    }

    #[test]
    fn rabi_fit_on_synthetic_cosine() {
        let w = 2.0 * std::f64::consts::PI * 2.83e6;
        let times: Vec<f64> = (0..=500).map(|k| k as f64 * 1e-9).collect();
        let pop: Vec<f64> = times.iter().map(|t| (w * t).cos().powi(2) + 0.005 * (6e9 * t).sin()).collect();
        let fit = fit_rabi_frequency(&times, &pop).unwrap();
        assert!((fit / w - 1.0).abs() < 0.02, "{fit} vs {w}");
    }
}
