//! Phonon statistics and qubit-detection observables: g₂(0), g₂(τ) by the
//! quantum regression theorem, truncation fidelity and population ratios.

use log::warn;
use nalgebra::DMatrix;

use crate::dynamics::MasterEquation;
use crate::error::{Error, Result};
use crate::lindblad::{unvectorize, vectorize};
use crate::ode::OdeOptions;
use crate::operators::{destroy, qeye, tensor, trace_product, DensityMatrix, Operator, C64};
use crate::steadystate::SettledState;

/// Below this mean phonon number g₂ is undefined.
pub const MEAN_FLOOR: f64 = 1e-12;
/// Below this two-phonon population the detection ratio is not reported.
pub const P2_FLOOR: f64 = 1e-14;

/// Annihilation operator of the mode on `[M]` or `[2, M]` dims.
pub fn mode_annihilator(dims: &[usize]) -> Result<Operator> {
    match dims {
        [m] => destroy(*m),
        [2, m] => tensor(&[qeye(2), destroy(*m)?]),
        _ => Err(Error::InvalidDimension(format!("expected [M] or [2, M], got {dims:?}"))),
    }
}

pub fn mean_number(rho: &DensityMatrix) -> Result<f64> {
    let b = mode_annihilator(rho.dims())?;
    Ok(trace_product((&b.dag() * &b).matrix(), rho.matrix()).re)
}

/// `Tr[b†b†bbρ] / Tr[b†bρ]²`.
pub fn g2_zero(rho: &DensityMatrix) -> Result<f64> {
    let b = mode_annihilator(rho.dims())?;
    let n = trace_product((&b.dag() * &b).matrix(), rho.matrix()).re;
    if n < MEAN_FLOOR {
        return Err(Error::UndefinedCorrelation { mean: n });
    }
    let b2 = &b * &b;
    Ok(trace_product((&b2.dag() * &b2).matrix(), rho.matrix()).re / (n * n))
}

/// Phonon-number distribution `P_n`, traced over the qubit.
pub fn phonon_distribution(rho: &DensityMatrix) -> Result<Vec<f64>> {
    let dims = rho.dims();
    let (q, m) = match dims {
        [m] => (1, *m),
        [2, m] => (2, *m),
        _ => return Err(Error::InvalidDimension(format!("expected [M] or [2, M], got {dims:?}"))),
    };
    Ok((0..m).map(|n| (0..q).map(|k| rho.population(k * m + n)).sum()).collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationCurve {
    pub taus: Vec<f64>,
    /// g₂(τ), clipped at zero.
    pub values: Vec<f64>,
    /// g₂(0) of the input state.
    pub reference: f64,
}

fn check_taus(taus: &[f64]) -> Result<()> {
    if taus.is_empty() || taus.iter().any(|t| !(*t >= 0.0)) || taus.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::param("taus", "must be non-empty, non-negative and strictly increasing"));
    }
    Ok(())
}

/// `g₂(τ) = Tr[b†b X(τ)] / ⟨b†b⟩²` with `X(0) = bρ_ss b†` evolved under the
/// (static) generator of `eq`.
pub fn g2_tau(eq: &MasterEquation, rho_ss: &DensityMatrix, taus: &[f64], opts: &OdeOptions) -> Result<CorrelationCurve> {
    check_taus(taus)?;
    if !eq.generator().is_static() {
        return Err(Error::param("generator", "use g2_tau_driven for time-dependent generators"));
    }
    let b = mode_annihilator(rho_ss.dims())?;
    let num = &b.dag() * &b;
    let mean = trace_product(num.matrix(), rho_ss.matrix()).re;
    if mean < MEAN_FLOOR {
        return Err(Error::UndefinedCorrelation { mean });
    }
    let mut lr = vec![C64::new(0.0, 0.0); eq.generator().super_dim()];
    eq.generator().apply(0.0, vectorize(rho_ss.matrix()).as_slice(), &mut lr);
    let residual = lr.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt() / eq.generator().frequency_scale().max(f64::MIN_POSITIVE);
    if residual > 1e-6 {
        warn!("g2_tau: input state is not stationary (relative residual {residual:.3e})");
    }
    let x0 = b.matrix() * rho_ss.matrix() * b.matrix().adjoint();
    let mut values = Vec::with_capacity(taus.len());
    let mut times = taus.to_vec();
    let shift = times[0] != 0.0;
    if shift {
        times.insert(0, 0.0);
    }
    eq.evolve(&x0, 0.0, &times, opts, |_, x| values.push(trace_product(num.matrix(), &x).re / (mean * mean)))?;
    let reference = g2_zero(rho_ss)?;
    if shift {
        values.remove(0);
    }
    Ok(CorrelationCurve { taus: taus.to_vec(), values: values.into_iter().map(|v| v.max(0.0)).collect(), reference })
}

/// g₂(τ) for a periodically driven generator, averaged over `phases` start
/// times `t₀` spread evenly across one drive period after the transient and
/// normalized by the window-averaged `n_mean²`.
///
/// Delays are rounded to whole drive periods so that long delays can use the
/// one-period propagator; the returned `taus` are the rounded values.
pub fn g2_tau_driven(
    settled: &SettledState,
    n_mean: f64,
    taus: &[f64],
    phases: usize,
    opts: &OdeOptions,
) -> Result<CorrelationCurve> {
    check_taus(taus)?;
    if n_mean < MEAN_FLOOR {
        return Err(Error::UndefinedCorrelation { mean: n_mean });
    }
    if phases == 0 {
        return Err(Error::param("phases", "need at least one start phase"));
    }
    let (period, map) = settled
        .period_map
        .as_ref()
        .ok_or_else(|| Error::param("settled", "driven correlations need the one-period propagator"))?;
    let period = *period;
    let eq = &settled.equation;
    let n = eq.generator().hilbert_dim();
    let b = mode_annihilator(eq.dims())?;
    let (bm, bd) = (b.matrix().clone(), b.matrix().adjoint());
    let num = (&b.dag() * &b).matrix().clone();
    let num_of = |v: &[C64]| trace_product(&num, &unvectorize(v, n)).re;

    let steps: Vec<u64> = taus.iter().map(|t| (t / period).round() as u64).collect();
    let starts: Vec<f64> = (0..phases).map(|j| j as f64 * period / phases as f64).collect();

    // the settled time is a whole number of periods, so the frame generator
    // seen from it is the one seen from t = 0
    let mut states = Vec::with_capacity(phases);
    eq.evolve_frame(&settled.rho_frame, 0.0, &starts, opts, |_, r| states.push(r))?;
    let xs: Vec<DMatrix<C64>> = states.iter().map(|r| &bm * r * &bd).collect();

    // Z_j = U(T, t₀ⱼ) X_j, one column per phase
    let d = n * n;
    let mut z = DMatrix::<C64>::zeros(d, phases);
    for (j, x) in xs.iter().enumerate() {
        let col = eq.propagate_frame_columns(&DMatrix::from_column_slice(d, 1, vectorize(x).as_slice()), starts[j], period, opts)?;
        z.set_column(j, &col.column(0));
    }

    // Y_j(m) = P^{m−1} Z_j via cached squarings
    let mut powers: Vec<DMatrix<C64>> = vec![map.clone()];
    let mut current = z;
    let mut at = 1u64;
    let mut per_step: Vec<DMatrix<C64>> = Vec::with_capacity(steps.len());
    for &m in &steps {
        if m == 0 {
            per_step.push(DMatrix::zeros(d, phases));
            continue;
        }
        let mut jump = m - at;
        let mut bit = 0;
        while jump > 0 {
            if bit >= powers.len() {
                let last = powers.last().unwrap();
                powers.push(last * last);
            }
            if jump & 1 == 1 {
                current = &powers[bit] * &current;
            }
            jump >>= 1;
            bit += 1;
        }
        at = m;
        per_step.push(current.clone());
    }

    // back from phase 0 to each t₀ⱼ and take Tr[b†b ·]
    let mut sums = vec![0.0; steps.len()];
    for j in 0..phases {
        let idx: Vec<usize> = (0..steps.len()).filter(|&k| steps[k] > 0).collect();
        let mut cols = DMatrix::<C64>::zeros(d, idx.len());
        for (c, &k) in idx.iter().enumerate() {
            cols.set_column(c, &per_step[k].column(j));
        }
        let moved = eq.propagate_frame_columns(&cols, 0.0, starts[j], opts)?;
        for (c, &k) in idx.iter().enumerate() {
            sums[k] += num_of(moved.column(c).as_slice());
        }
        for k in (0..steps.len()).filter(|&k| steps[k] == 0) {
            sums[k] += trace_product(&num, &xs[j]).re;
        }
    }
    let norm = phases as f64 * n_mean * n_mean;
    let values: Vec<f64> = sums.iter().map(|s| (s / norm).max(0.0)).collect();
    let reference = if steps[0] == 0 { values[0] } else { f64::NAN };
    Ok(CorrelationCurve { taus: steps.iter().map(|&m| m as f64 * period).collect(), values, reference })
}

/// Summed population of `{|g,0⟩, |g,1⟩, |g,2⟩, |e,0⟩}`.
pub fn truncation_fidelity(rho: &DensityMatrix) -> Result<f64> {
    match rho.dims() {
        [2, m] if *m >= 3 => {
            let m = *m;
            Ok(rho.population(0) + rho.population(1) + rho.population(2) + rho.population(m))
        }
        d => Err(Error::InvalidDimension(format!("fidelity needs [2, M >= 3], got {d:?}"))),
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Detection {
    /// Qubit excited-state population.
    pub p_e: f64,
    /// Two-phonon population, summed over the qubit.
    pub p2: f64,
    /// `P_e / P₂`, absent when `P₂` is below [`P2_FLOOR`].
    pub ratio: Option<f64>,
}

pub fn detection_quantities(rho: &DensityMatrix) -> Result<Detection> {
    match rho.dims() {
        [2, m] if *m >= 3 => {
            let m = *m;
            let p_e = (0..m).map(|k| rho.population(m + k)).sum();
            let p2 = rho.population(2) + rho.population(m + 2);
            let ratio = (p2 > P2_FLOOR).then(|| p_e / p2);
            Ok(Detection { p_e, p2, ratio })
        }
        d => Err(Error::InvalidDimension(format!("detection needs [2, M >= 3], got {d:?}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{HarmonicHamiltonian, RotatingFrame};
    use crate::lindblad::CollapseOperator;
    use crate::operators::{basis_state, number, QubitMode};
    use crate::steadystate::{build_liouvillian, settle, steadystate_direct, window_average, TimeAverageOptions};
    use crate::dynamics::Observable;
    use approx::assert_relative_eq;

    #[test]
    fn g2_of_reference_states() {
        let coh = DensityMatrix::coherent(10, C64::new(0.3f64.sqrt(), 0.0)).unwrap();
        assert!((g2_zero(&coh).unwrap() - 1.0).abs() < 1e-3);
        let fock = basis_state(&[5], &[1]).unwrap().to_density();
        assert_eq!(g2_zero(&fock).unwrap(), 0.0);
        let th = DensityMatrix::thermal(80, 1.0).unwrap();
        assert!((g2_zero(&th).unwrap() - 2.0).abs() < 1e-6);
        let vac = basis_state(&[5], &[0]).unwrap().to_density();
        assert!(matches!(g2_zero(&vac), Err(Error::UndefinedCorrelation { .. })));
    }

    #[test]
    fn fidelity_and_detection() {
        let s = QubitMode::new(5).unwrap();
        let g0 = s.basis(0, 0).unwrap().to_density();
        assert_eq!(truncation_fidelity(&g0).unwrap(), 1.0);
        let e1 = s.basis(1, 1).unwrap().to_density();
        assert_eq!(truncation_fidelity(&e1).unwrap(), 0.0);
        let d = detection_quantities(&g0).unwrap();
        assert_eq!((d.p_e, d.p2, d.ratio), (0.0, 0.0, None));

        // mixture: F + outside = 1
        let mix = DMatrix::from_diagonal(&nalgebra::DVector::from_fn(10, |i, _| C64::new((i + 1) as f64 / 55.0, 0.0)));
        let rho = DensityMatrix::new(s.dims(), mix).unwrap();
        let f = truncation_fidelity(&rho).unwrap();
        let outside: f64 = [3, 4, 6, 7, 8, 9].iter().map(|&i| rho.population(i)).sum();
        assert!((f + outside - 1.0).abs() < 1e-10);
        let d = detection_quantities(&rho).unwrap();
        assert_relative_eq!(d.p_e, (6.0 + 7.0 + 8.0 + 9.0 + 10.0) / 55.0, max_relative = 1e-12);
        assert_relative_eq!(d.p2, (3.0 + 8.0) / 55.0, max_relative = 1e-12);
        let p = phonon_distribution(&rho).unwrap();
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    fn thermal_cavity(m: usize, kappa: f64, nth: f64) -> (Operator, Vec<CollapseOperator>) {
        let b = destroy(m).unwrap();
        (
            &number(m).unwrap() * 2.0,
            vec![
                CollapseOperator::new("up", b.dag(), kappa * nth).unwrap(),
                CollapseOperator::new("down", b, kappa * (nth + 1.0)).unwrap(),
            ],
        )
    }

    #[test]
    fn regression_coincidence_and_decay() {
        let m = 40;
        let kappa = 1.0;
        let (h, c) = thermal_cavity(m, kappa, 0.5);
        let rho = steadystate_direct(&build_liouvillian(&h, &c).unwrap()).unwrap();
        let eq = MasterEquation::new(&HarmonicHamiltonian::constant(h), &c, None).unwrap();
        let taus: Vec<f64> = (0..=30).map(|k| k as f64 * 0.5).collect();
        let curve = g2_tau(&eq, &rho, &taus, &OdeOptions::default()).unwrap();
        assert!((curve.values[0] - g2_zero(&rho).unwrap()).abs() < 1e-9);
        // thermal light: g₂(τ) = 1 + e^{−κτ}
        for (t, v) in curve.taus.iter().zip(&curve.values) {
            assert!((v - 1.0 - (-kappa * t).exp()).abs() < 1e-6, "τ = {t}: {v}");
        }
        assert!((curve.values.last().unwrap() - 1.0).abs() < 0.05);
    }

    #[test]
    fn driven_correlation_phase_average() {
        let s = QubitMode::new(5).unwrap();
        let w = 8.0;
        let mut h = HarmonicHamiltonian::constant(
            &(&(&s.num() * w) + &(&s.excited() * (2.0 * w + 0.3))) + &(&s.sx() * 0.4),
        );
        h.add_pair(&(&s.sz() * &s.bdag()) * 0.6, 0.0).unwrap();
        h.add_pair(&s.bdag() * 0.35, -w).unwrap();
        let c = vec![CollapseOperator::new("b", s.b(), 0.4).unwrap(), CollapseOperator::new("sm", s.sm(), 0.6).unwrap()];
        let opts = TimeAverageOptions {
            frame: Some(RotatingFrame { resonator: w, qubit: 2.0 * w }),
            ode: OdeOptions { rtol: 1e-10, atol: 1e-12, ..Default::default() },
            ..Default::default()
        };
        let settled = settle(&h, &c, &opts).unwrap();
        let period = settled.period().unwrap();
        let avg = window_average(&settled, &[Observable::new("n", s.num())], &opts).unwrap();
        let nbar = avg.mean("n").unwrap();
        let taus: Vec<f64> = [0.0, 1.0, 3.0, 17.0, 60.0].iter().map(|k| k * period).collect();
        let curve = g2_tau_driven(&settled, nbar, &taus, 4, &opts.ode).unwrap();

        // brute force: integrate each X_j straight through τ
        let eq = &settled.equation;
        let b = s.b();
        let starts: Vec<f64> = (0..4).map(|j| j as f64 * period / 4.0).collect();
        let mut brute = vec![0.0; taus.len()];
        for &t0 in &starts {
            let rho = if t0 == 0.0 {
                settled.rho_frame.clone()
            } else {
                eq.evolve_frame(&settled.rho_frame, 0.0, &[t0], &opts.ode, |_, _| {}).unwrap()
            };
            let x = b.matrix() * rho * b.matrix().adjoint();
            let times: Vec<f64> = taus.iter().map(|t| t0 + t).collect();
            let mut k = 0;
            eq.evolve_frame(&x, t0, &times, &opts.ode, |_, x| {
                brute[k] += trace_product((&b.dag() * &b).matrix(), &x).re / (4.0 * nbar * nbar);
                k += 1;
            })
            .unwrap();
        }
        for (a, b) in curve.values.iter().zip(&brute) {
            assert!((a - b).abs() < 1e-7, "{a} vs {b}");
        }
        assert!((curve.values.last().unwrap() - 1.0).abs() < 0.05);
    }
}
