//! Stationary states: null-space solve of a static Liouvillian, and the
//! windowed long-time average of a periodically driven model.

use nalgebra::{DMatrix, DVector, Schur, SVD};

use crate::dynamics::{Generator, MasterEquation, Observable};
use crate::error::{Error, Result};
use crate::hamiltonian::{HarmonicHamiltonian, RotatingFrame};
use crate::lindblad::{unvectorize, vectorize, CollapseOperator};
use crate::ode::OdeOptions;
use crate::operators::{basis_state, trace_product, DensityMatrix, Operator, C64, ONE, ZERO};

/// Below this pivot ratio the row-replaced system is treated as singular.
const PIVOT_FLOOR: f64 = 1e-13;
/// Relative singular-value threshold for counting zero modes.
const NULL_TOL: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct Liouvillian {
    dims: Vec<usize>,
    matrix: DMatrix<C64>,
}

/// `L = −i(I⊗H − Hᵀ⊗I) + Σ_k D_k` for column-stacked ρ.
pub fn build_liouvillian(h: &Operator, c_ops: &[CollapseOperator]) -> Result<Liouvillian> {
    let gen = Generator::new(&HarmonicHamiltonian::constant(h.clone()), c_ops)?;
    Ok(Liouvillian { dims: h.dims().to_vec(), matrix: gen.dense_at(0.0) })
}

impl Liouvillian {
    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn hilbert_dim(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn apply(&self, rho: &DMatrix<C64>) -> DMatrix<C64> {
        unvectorize((&self.matrix * vectorize(rho)).as_slice(), self.hilbert_dim())
    }

    /// `‖vec(I)† L‖ / ‖L‖`; zero for a trace-preserving generator.
    pub fn trace_residual(&self) -> f64 {
        let n = self.hilbert_dim();
        let mut row = DVector::<C64>::zeros(n * n);
        for k in 0..n {
            row += self.matrix.row(k * n + k).transpose();
        }
        row.norm() / self.matrix.norm().max(f64::MIN_POSITIVE)
    }

    /// All eigenvalues, via complex Schur decomposition.
    pub fn spectrum(&self) -> Result<Vec<C64>> {
        let schur = Schur::try_new(self.matrix.clone(), f64::EPSILON, 0)
            .ok_or_else(|| Error::Singular("Schur decomposition did not converge".into()))?;
        let (_, t) = schur.unpack();
        Ok((0..t.nrows()).map(|i| t[(i, i)]).collect())
    }

    /// Smallest decay rate `−Re λ` among the eigenvalues other than the one
    /// closest to zero.
    pub fn spectral_gap(&self) -> Result<f64> {
        let mut ev = self.spectrum()?;
        ev.sort_by(|a, b| a.norm().partial_cmp(&b.norm()).unwrap());
        Ok(ev.iter().skip(1).map(|z| -z.re).fold(f64::INFINITY, f64::min))
    }
}

/// Solves `L vec(ρ) = 0` with `Tr ρ = 1` replacing the first equation.
pub fn steadystate_direct(l: &Liouvillian) -> Result<DensityMatrix> {
    let n = l.hilbert_dim();
    let d = n * n;
    let mut a = l.matrix.clone();
    for j in 0..d {
        a[(0, j)] = ZERO;
    }
    for k in 0..n {
        a[(0, k * n + k)] = ONE;
    }
    let mut rhs = DVector::<C64>::zeros(d);
    rhs[0] = ONE;
    let lu = a.lu();
    let u = lu.u();
    let diag: Vec<f64> = (0..d).map(|i| u[(i, i)].norm()).collect();
    let (lo, hi) = diag.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    let ratio = if hi > 0.0 { lo / hi } else { 0.0 };
    let solution = if ratio > PIVOT_FLOOR { lu.solve(&rhs) } else { None };
    let Some(x) = solution else {
        return Err(classify_singular(l, ratio));
    };
    let mut rho = DensityMatrix::unchecked(l.dims.clone(), unvectorize(x.as_slice(), n))?;
    rho.hermitize();
    rho.validate()?;
    Ok(rho)
}

fn classify_singular(l: &Liouvillian, ratio: f64) -> Error {
    let sv = SVD::new(l.matrix.clone(), false, false).singular_values;
    let max = sv.max();
    let zeros = sv.iter().filter(|&&s| s <= NULL_TOL * max.max(f64::MIN_POSITIVE)).count();
    if zeros > 1 || max == 0.0 {
        Error::MultipleSteadyStates { count: zeros.max(2) }
    } else {
        Error::IllConditioned { estimate: ratio }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TimeAverageOptions {
    /// Settling time before the window; defaults to 20 / (smallest positive
    /// channel rate).
    pub transient: Option<f64>,
    /// Window length in drive periods (or in units of the slowest decay time
    /// for a static generator).
    pub window_periods: f64,
    pub samples: usize,
    /// Largest relative change of any observable mean between two
    /// consecutive windows.
    pub drift_tol: f64,
    /// Cover the transient by powering the one-period propagator instead of
    /// stepping through it. Only used when the generator is periodic.
    pub accelerate: bool,
    pub frame: Option<RotatingFrame>,
    pub ode: OdeOptions,
    /// Defaults to the product ground state.
    pub initial: Option<DensityMatrix>,
}

impl Default for TimeAverageOptions {
    fn default() -> Self {
        TimeAverageOptions {
            transient: None,
            window_periods: 10.0,
            samples: 200,
            drift_tol: 0.01,
            accelerate: true,
            frame: None,
            ode: OdeOptions::default(),
            initial: None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ObservableStats {
    pub name: String,
    pub mean: f64,
    pub peak_to_peak: f64,
    /// Relative change of the mean from the previous window.
    pub drift: f64,
}

#[derive(Clone, Debug)]
pub struct TimeAverage {
    /// Lab-frame ρ averaged uniformly over the window.
    pub rho: DensityMatrix,
    pub observables: Vec<ObservableStats>,
    pub window_start: f64,
    pub window_end: f64,
    /// Drive period, if the generator is periodic.
    pub period: Option<f64>,
    pub transient: f64,
}

impl TimeAverage {
    pub fn mean(&self, name: &str) -> Option<f64> {
        self.observables.iter().find(|o| o.name == name).map(|o| o.mean)
    }
}

/// Smallest positive channel rate; the default transient is 20 times its
/// inverse.
pub fn slowest_rate(c_ops: &[CollapseOperator]) -> Option<f64> {
    c_ops.iter().map(|c| c.rate).filter(|&r| r > 0.0).reduce(f64::min)
}

struct WindowSums {
    rho: DMatrix<C64>,
    values: Vec<Vec<f64>>,
}

/// The model after its transient, ready for window averaging or
/// correlation runs.
#[derive(Clone, Debug)]
pub struct SettledState {
    pub equation: MasterEquation,
    /// Time reached after the transient (a whole number of periods when the
    /// period map was used).
    pub time: f64,
    /// State at `time`, in the integration frame.
    pub rho_frame: DMatrix<C64>,
    /// Drive period and the one-period frame propagator starting at `t = 0`.
    pub period_map: Option<(f64, DMatrix<C64>)>,
    /// Relaxation rate used for default time scales.
    pub slowest_rate: f64,
}

impl SettledState {
    pub fn rho_lab(&self) -> DMatrix<C64> {
        self.equation.to_lab(&self.rho_frame, self.time)
    }

    pub fn period(&self) -> Option<f64> {
        self.period_map.as_ref().map(|(p, _)| *p)
    }
}

/// Integrates from the initial state through the transient.
pub fn settle(h: &HarmonicHamiltonian, c_ops: &[CollapseOperator], opts: &TimeAverageOptions) -> Result<SettledState> {
    let equation = MasterEquation::new(h, c_ops, opts.frame)?;
    let dims = h.dims().to_vec();
    let n = equation.generator().hilbert_dim();
    let rate = slowest_rate(c_ops).ok_or_else(|| Error::param("c_ops", "no dissipation; no steady state"))?;
    let transient = opts.transient.unwrap_or(20.0 / rate);
    if !(transient >= 0.0) {
        return Err(Error::param("transient", "must be non-negative"));
    }
    let rho0 = match &opts.initial {
        Some(r) => {
            if r.dims() != dims.as_slice() {
                return Err(Error::DimensionMismatch { expected: dims, found: r.dims().to_vec() });
            }
            r.clone()
        }
        None => basis_state(&dims, &vec![0; dims.len()])?.to_density(),
    };
    let lab_period = h.period();
    match (lab_period, equation.generator().period()) {
        (Some(p), Some(pf)) if opts.accelerate && ((p - pf) / p).abs() < 1e-9 => {
            let k = (transient / p).ceil() as u64;
            let (_, map) = equation.period_map(0.0, &opts.ode)?;
            let v = apply_power(&map, vectorize(&equation.to_frame(rho0.matrix(), 0.0)), k);
            Ok(SettledState {
                time: k as f64 * p,
                rho_frame: unvectorize(v.as_slice(), n),
                period_map: Some((p, map)),
                slowest_rate: rate,
                equation,
            })
        }
        _ => {
            let rho = if transient > 0.0 {
                equation.evolve(rho0.matrix(), 0.0, &[transient], &opts.ode, |_, _| {})?.0
            } else {
                rho0.matrix().clone()
            };
            Ok(SettledState {
                time: transient,
                rho_frame: equation.to_frame(&rho, transient),
                period_map: None,
                slowest_rate: rate,
                equation,
            })
        }
    }
}

/// Averages ρ(t) and the observables over two consecutive windows after
/// `settled`; reports the second and fails if any mean moved by more than
/// `drift_tol` between them.
pub fn window_average(settled: &SettledState, observables: &[Observable], opts: &TimeAverageOptions) -> Result<TimeAverage> {
    if opts.samples < 2 {
        return Err(Error::param("samples", "need at least two samples per window"));
    }
    if !(opts.window_periods > 0.0) {
        return Err(Error::param("window_periods", "must be positive"));
    }
    let eq = &settled.equation;
    let dims = eq.dims().to_vec();
    let n = eq.generator().hilbert_dim();
    let period = settled.period().or_else(|| eq.generator().period());
    let window = opts.window_periods * period.unwrap_or(1.0 / settled.slowest_rate);
    let start = settled.time;

    // uniform left Riemann sums: exact for any periodic signal resolved by the grid
    let dt = window / opts.samples as f64;
    let times: Vec<f64> = (0..2 * opts.samples).map(|k| start + k as f64 * dt).collect();
    let mut sums = [
        WindowSums { rho: DMatrix::zeros(n, n), values: vec![Vec::new(); observables.len()] },
        WindowSums { rho: DMatrix::zeros(n, n), values: vec![Vec::new(); observables.len()] },
    ];
    let mut k = 0usize;
    eq.evolve(&settled.rho_lab(), start, &times, &opts.ode, |_, rho| {
        let w = &mut sums[k / opts.samples];
        w.rho += &rho;
        for (o, vals) in observables.iter().zip(w.values.iter_mut()) {
            vals.push(trace_product(o.op.matrix(), &rho).re);
        }
        k += 1;
    })?;

    let mut stats = Vec::with_capacity(observables.len());
    for (i, o) in observables.iter().enumerate() {
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let (m1, m2) = (mean(&sums[0].values[i]), mean(&sums[1].values[i]));
        let v2 = &sums[1].values[i];
        let ptp = v2.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - v2.iter().cloned().fold(f64::INFINITY, f64::min);
        let drift = if m2.abs() > 1e-9 { (m2 - m1).abs() / m2.abs() } else { (m2 - m1).abs() };
        if drift > opts.drift_tol {
            return Err(Error::NotConverged { observable: o.name.clone(), drift });
        }
        stats.push(ObservableStats { name: o.name.clone(), mean: m2, peak_to_peak: ptp, drift });
    }
    let [_, second] = sums;
    let mut rho = DensityMatrix::unchecked(dims, second.rho * C64::new(1.0 / opts.samples as f64, 0.0))?;
    rho.hermitize();
    rho.validate()?;
    Ok(TimeAverage {
        rho,
        observables: stats,
        window_start: start + window,
        window_end: start + 2.0 * window,
        period,
        transient: start,
    })
}

/// [`settle`] followed by [`window_average`].
pub fn steadystate_timeavg(
    h: &HarmonicHamiltonian,
    c_ops: &[CollapseOperator],
    observables: &[Observable],
    opts: &TimeAverageOptions,
) -> Result<TimeAverage> {
    let settled = settle(h, c_ops, opts)?;
    window_average(&settled, observables, opts)
}

/// `Pᵏ v` by binary powering.
pub fn apply_power(p: &DMatrix<C64>, mut v: DVector<C64>, mut k: u64) -> DVector<C64> {
    let mut q = p.clone();
    while k > 0 {
        if k & 1 == 1 {
            v = &q * v;
        }
        k >>= 1;
        if k > 0 {
            q = &q * &q;
        }
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{mesolve, SolverOptions};
    use crate::lindblad::lindblad_rhs;
    use crate::operators::{destroy, number, qeye, QubitMode};

    fn random_density(n: usize, seed: u64) -> DMatrix<C64> {
        let mut s = seed;
        let mut next = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let a = DMatrix::from_fn(n, n, |_, _| C64::new(next(), next()));
        let rho = &a * a.adjoint();
        let tr = rho.trace();
        rho / tr
    }

    #[test]
    fn action_matches_direct_rhs() {
        let s = QubitMode::new(3).unwrap();
        let h = &(&(&s.num() * 1.1) + &(&s.sz() * 0.7)) + &(&(&s.sz() * &(&s.b() + &s.bdag())) * 0.2);
        let c = vec![
            CollapseOperator::new("sm", s.sm(), 0.4).unwrap(),
            CollapseOperator::new("z", s.sz(), 0.1).unwrap(),
            CollapseOperator::new("up", s.bdag(), 0.05).unwrap(),
            CollapseOperator::new("b", s.b(), 0.3).unwrap(),
        ];
        let l = build_liouvillian(&h, &c).unwrap();
        assert!(l.trace_residual() < 1e-9);
        for seed in 0..10 {
            let rho = random_density(6, seed);
            let diff = (l.apply(&rho) - lindblad_rhs(&h, &c, &rho)).map(|z| z.norm()).max();
            assert!(diff < 1e-12, "seed {seed}: {diff}");
        }
        assert!(build_liouvillian(&destroy(3).unwrap(), &[]).is_err());
    }

    #[test]
    fn vacuum_is_dark_and_gap() {
        let m = 4;
        let kappa = 0.6;
        let c = [CollapseOperator::new("b", destroy(m).unwrap(), kappa).unwrap()];
        let l = build_liouvillian(&Operator::zeros(&[m]), &c).unwrap();
        let mut vac = DMatrix::zeros(m, m);
        vac[(0, 0)] = ONE;
        assert!(l.apply(&vac).map(|z| z.norm()).max() < 1e-15);
        let ev = l.spectrum().unwrap();
        let zeros = ev.iter().filter(|z| z.norm() < 1e-10).count();
        assert_eq!(zeros, 1);
        assert!(ev.iter().filter(|z| z.norm() >= 1e-10).all(|z| z.re <= -kappa / 2.0 + 1e-10));
        assert!((l.spectral_gap().unwrap() - kappa / 2.0).abs() < 1e-10);
    }

    #[test]
    fn thermal_detailed_balance() {
        let m = 40;
        let (kappa, nth) = (1.0, 1.0);
        let c = [
            CollapseOperator::new("up", destroy(m).unwrap().dag(), kappa * nth).unwrap(),
            CollapseOperator::new("down", destroy(m).unwrap(), kappa * (nth + 1.0)).unwrap(),
        ];
        let rho = steadystate_direct(&build_liouvillian(&Operator::zeros(&[m]), &c).unwrap()).unwrap();
        let n = crate::operators::expect(&number(m).unwrap(), &rho).unwrap().value;
        assert!((n - 1.0).abs() < 1e-8, "⟨n⟩ = {n}");
        for k in 0..6 {
            assert!((rho.population(k) - 0.5f64.powi(k as i32 + 1)).abs() < 1e-8);
        }
    }

    #[test]
    fn degenerate_null_space() {
        let l = build_liouvillian(&Operator::zeros(&[3]), &[]).unwrap();
        assert!(matches!(steadystate_direct(&l), Err(Error::MultipleSteadyStates { .. })));
        // two decoupled dark states
        let p = Operator::new(vec![3], DMatrix::from_fn(3, 3, |i, j| if i == 0 && j == 2 { ONE } else { ZERO })).unwrap();
        let c = [CollapseOperator::new("p", p, 1.0).unwrap()];
        let l = build_liouvillian(&Operator::zeros(&[3]), &c).unwrap();
        assert!(matches!(steadystate_direct(&l), Err(Error::MultipleSteadyStates { .. })));
    }

    fn driven_cavity() -> (Operator, Vec<CollapseOperator>) {
        let m = 8;
        let b = destroy(m).unwrap();
        let h = &(&number(m).unwrap() * 0.3) + &(&(&b + &b.dag()) * 0.25);
        (h, vec![CollapseOperator::new("b", b, 1.0).unwrap()])
    }

    #[test]
    fn long_time_limit_matches_null_space() {
        let (h, c) = driven_cavity();
        let ss = steadystate_direct(&build_liouvillian(&h, &c).unwrap()).unwrap();
        let rho0 = basis_state(&[8], &[0]).unwrap().to_density();
        let opts = SolverOptions { store_states: true, ..Default::default() };
        // coherences relax at κ/2, so 40/κ leaves e^{-20} of the initial offset
        let tr = mesolve(&HarmonicHamiltonian::constant(h), &rho0, &c, &[0.0, 40.0], &[], &opts).unwrap();
        let diff = (tr.states.last().unwrap() - ss.matrix()).map(|z| z.norm()).max();
        assert!(diff < 1e-6, "{diff}");
    }

    #[test]
    fn static_time_average_matches_direct() {
        let (h, c) = driven_cavity();
        let ss = steadystate_direct(&build_liouvillian(&h, &c).unwrap()).unwrap();
        let obs = [Observable::new("n", number(8).unwrap()), Observable::new("one", qeye(8))];
        let avg = steadystate_timeavg(&HarmonicHamiltonian::constant(h), &c, &obs, &TimeAverageOptions::default()).unwrap();
        let diff = (avg.rho.matrix() - ss.matrix()).map(|z| z.norm()).max();
        assert!(diff < 1e-6, "{diff}");
        assert!((avg.mean("one").unwrap() - 1.0).abs() < 1e-8);
        assert!(avg.rho.min_eigenvalue() >= -1e-8);
    }

    #[test]
    fn periodic_acceleration_matches_stepping() {
        let s = QubitMode::new(4).unwrap();
        let w = 6.0;
        let mut h = HarmonicHamiltonian::constant(&(&(&s.num() * w) + &(&s.excited() * 2.0 * w)) + &(&s.sx() * 0.9));
        h.add_pair(&(&s.sz() * &s.bdag()) * 0.5, 0.0).unwrap();
        h.add_pair(&s.bdag() * 0.3, -w).unwrap();
        let c = vec![CollapseOperator::new("b", s.b(), 0.5).unwrap(), CollapseOperator::new("sm", s.sm(), 0.8).unwrap()];
        let obs = [Observable::new("n", s.num())];
        let frame = Some(RotatingFrame { resonator: w, qubit: 2.0 * w });
        let fast = TimeAverageOptions { frame, ..Default::default() };
        let slow = TimeAverageOptions { frame, accelerate: false, ..Default::default() };
        let a = steadystate_timeavg(&h, &c, &obs, &fast).unwrap();
        let b = steadystate_timeavg(&h, &c, &obs, &slow).unwrap();
        assert!(a.period.is_some());
        // the accelerated path rounds the transient up to whole periods
        let shift = a.transient - b.transient;
        assert!(shift >= 0.0 && shift < a.period.unwrap());
        assert!((a.mean("n").unwrap() - b.mean("n").unwrap()).abs() < 1e-6);
        assert!((a.rho.matrix() - b.rho.matrix()).map(|z| z.norm()).max() < 1e-6);
    }

    #[test]
    fn drift_is_detected() {
        let (h, c) = driven_cavity();
        let obs = [Observable::new("n", number(8).unwrap())];
        let opts = TimeAverageOptions { transient: Some(0.0), window_periods: 0.5, ..Default::default() };
        assert!(matches!(
            steadystate_timeavg(&HarmonicHamiltonian::constant(h), &c, &obs, &opts),
            Err(Error::NotConverged { .. })
        ));
    }
}
