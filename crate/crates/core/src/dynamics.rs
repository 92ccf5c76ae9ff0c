//! Time evolution: Schrödinger and Lindblad master equations with harmonic
//! time dependence, optionally integrated in a diagonal rotating frame.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::hamiltonian::{HarmonicHamiltonian, RotatingFrame};
use crate::lindblad::{unvectorize, vectorize, CollapseOperator};
use crate::ode::{integrate, OdeOptions, OdeStats, OdeSystem};
use crate::operators::{DensityMatrix, Operator, StateVector, C64, HERMITIAN_TOL, I, ONE, ZERO};
use crate::sparse::{kron_entries, nonzeros, CsrMatrix};

/// `L(t) = Σ_k L_k e^{iν_k t}` acting on column-stacked density matrices.
#[derive(Clone, Debug)]
pub struct Generator {
    dims: Vec<usize>,
    n: usize,
    components: Vec<(f64, CsrMatrix)>,
    pattern: CsrMatrix,
    slots: Vec<Vec<usize>>,
    scale: f64,
    period: Option<f64>,
}

fn identity_entries(n: usize) -> Vec<(usize, usize, C64)> {
    (0..n).map(|i| (i, i, ONE)).collect()
}

fn transpose_entries(e: &[(usize, usize, C64)]) -> Vec<(usize, usize, C64)> {
    e.iter().map(|&(i, j, z)| (j, i, z)).collect()
}

fn conj_entries(e: &[(usize, usize, C64)]) -> Vec<(usize, usize, C64)> {
    e.iter().map(|&(i, j, z)| (i, j, z.conj())).collect()
}

/// Entries of `X ↦ c(AX − XA)` in the column-stacked representation.
fn commutator_entries(c: C64, a: &DMatrix<C64>) -> Vec<(usize, usize, C64)> {
    let n = a.nrows();
    let an = nonzeros(a);
    let id = identity_entries(n);
    let mut out: Vec<_> = kron_entries(c, &id, &an, n).collect();
    out.extend(kron_entries(-c, &transpose_entries(&an), &id, n));
    out
}

fn dissipator_entries(ch: &CollapseOperator) -> Vec<(usize, usize, C64)> {
    let a = ch.op.matrix();
    let n = a.nrows();
    let rate = C64::new(ch.rate, 0.0);
    let an = nonzeros(a);
    let ada = nonzeros(&(a.adjoint() * a));
    let id = identity_entries(n);
    let mut out: Vec<_> = kron_entries(rate, &conj_entries(&an), &an, n).collect();
    let half = rate * 0.5;
    out.extend(kron_entries(-half, &id, &ada, n));
    out.extend(kron_entries(-half, &transpose_entries(&ada), &id, n));
    out
}

impl Generator {
    pub fn new(h: &HarmonicHamiltonian, c_ops: &[CollapseOperator]) -> Result<Self> {
        let dims = h.dims().to_vec();
        let n: usize = dims.iter().product();
        let scale = h.frequency_scale();
        for t in [0.0, 0.123_456_7 / scale.max(1e-300)] {
            let ht = h.at(t);
            let dev = ht.hermiticity_error();
            if dev > HERMITIAN_TOL * ht.max_abs().max(1.0) {
                return Err(Error::NotHermitian { deviation: dev });
            }
        }
        for c in c_ops {
            if c.op.dims() != dims.as_slice() {
                return Err(Error::DimensionMismatch { expected: dims.clone(), found: c.op.dims().to_vec() });
            }
        }
        let d = n * n;
        let mut components: Vec<(f64, CsrMatrix)> = Vec::new();
        let mut static_entries = Vec::new();
        for term in h.terms() {
            let e = commutator_entries(-I, term.op.matrix());
            if term.freq == 0.0 {
                static_entries.extend(e);
            } else {
                components.push((term.freq, CsrMatrix::from_triplets(d, d, e)));
            }
        }
        for c in c_ops.iter().filter(|c| c.rate > 0.0) {
            static_entries.extend(dissipator_entries(c));
        }
        components.insert(0, (0.0, CsrMatrix::from_triplets(d, d, static_entries)));
        components.retain(|(f, m)| *f == 0.0 || m.nnz() > 0);

        let union = components
            .iter()
            .flat_map(|(_, m)| {
                (0..d).flat_map(move |i| m.indices()[m.indptr()[i]..m.indptr()[i + 1]].iter().map(move |&j| (i, j, ONE)))
            })
            .collect::<Vec<_>>();
        let pattern = CsrMatrix::from_triplets(d, d, union.into_iter().map(|(i, j, _)| (i, j, C64::new(1.0, 0.0))));
        let slots = components
            .iter()
            .map(|(_, m)| {
                (0..d)
                    .flat_map(|i| {
                        let pattern = &pattern;
                        m.indices()[m.indptr()[i]..m.indptr()[i + 1]]
                            .iter()
                            .map(move |&j| pattern.position(i, j).expect("pattern covers component"))
                    })
                    .collect()
            })
            .collect();
        Ok(Generator { dims, n, components, pattern, slots, scale, period: h.period() })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn hilbert_dim(&self) -> usize {
        self.n
    }

    pub fn super_dim(&self) -> usize {
        self.n * self.n
    }

    pub fn is_static(&self) -> bool {
        self.components.len() == 1
    }

    pub fn period(&self) -> Option<f64> {
        if self.is_static() {
            None
        } else {
            self.period
        }
    }

    pub fn frequency_scale(&self) -> f64 {
        self.scale
    }

    pub fn nnz(&self) -> usize {
        self.pattern.nnz()
    }

    /// `L(t)` as a sparse matrix.
    pub fn at(&self, t: f64) -> CsrMatrix {
        let mut m = self.pattern.clone();
        let vals = m.values_mut();
        vals.iter_mut().for_each(|v| *v = ZERO);
        for ((freq, comp), slots) in self.components.iter().zip(&self.slots) {
            let phase = C64::from_polar(1.0, freq * t);
            for (v, &s) in comp.values().iter().zip(slots) {
                vals[s] += v * phase;
            }
        }
        m
    }

    pub fn dense_at(&self, t: f64) -> DMatrix<C64> {
        self.at(t).to_dense()
    }

    /// `y = L(t) x`.
    pub fn apply(&self, t: f64, x: &[C64], y: &mut [C64]) {
        y.iter_mut().for_each(|v| *v = ZERO);
        for (freq, comp) in &self.components {
            comp.mul_add(C64::from_polar(1.0, freq * t), x, y);
        }
    }

    /// `Y = L(t) X` for column blocks of length `N²`.
    pub fn apply_columns(&self, t: f64, x: &[C64], y: &mut [C64]) {
        y.iter_mut().for_each(|v| *v = ZERO);
        if self.is_static() {
            self.components[0].1.mul_add_columns(ONE, x, y);
        } else {
            self.at(t).mul_add_columns(ONE, x, y);
        }
    }
}

struct Columns<'a> {
    gen: &'a Generator,
    cols: usize,
}

impl OdeSystem for Columns<'_> {
    fn dim(&self) -> usize {
        self.gen.super_dim() * self.cols
    }
    fn rhs(&self, t: f64, y: &[C64], dy: &mut [C64]) {
        if self.cols == 1 {
            self.gen.apply(t, y, dy)
        } else {
            self.gen.apply_columns(t, y, dy)
        }
    }
    fn frequency_scale(&self) -> f64 {
        self.gen.scale
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverOptions {
    pub ode: OdeOptions,
    /// Integrate in this rotating frame; observables are still reported in
    /// the lab frame.
    pub frame: Option<RotatingFrame>,
    pub store_states: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { ode: OdeOptions::default(), frame: None, store_states: false }
    }
}

#[derive(Clone, Debug)]
pub struct Observable {
    pub name: String,
    pub op: Operator,
}

impl Observable {
    pub fn new(name: impl Into<String>, op: Operator) -> Self {
        Observable { name: name.into(), op }
    }
}

#[derive(Clone, Debug, Default)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub names: Vec<String>,
    /// One row per time, one entry per observable.
    pub records: Vec<Vec<f64>>,
    /// Density matrices (master equation) or `N × 1` state columns.
    pub states: Vec<DMatrix<C64>>,
    /// Largest `|Tr ρ − 1|` (or `|‖ψ‖ − 1|`) seen at the outputs.
    pub max_norm_error: f64,
    pub stats: OdeStats,
}

impl Trajectory {
    pub fn series(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.names.iter().position(|n| n == name)?;
        Some(self.records.iter().map(|r| r[k]).collect())
    }
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::param("times", "no output times"));
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) || times.iter().any(|t| !t.is_finite()) {
        return Err(Error::param("times", "must be finite and strictly increasing"));
    }
    Ok(())
}

fn check_observables(dims: &[usize], obs: &[Observable]) -> Result<()> {
    for o in obs {
        if o.op.dims() != dims {
            return Err(Error::DimensionMismatch { expected: dims.to_vec(), found: o.op.dims().to_vec() });
        }
    }
    Ok(())
}

fn hermitize(m: &DMatrix<C64>) -> DMatrix<C64> {
    (m + m.adjoint()) * C64::new(0.5, 0.0)
}

/// The Lindblad generator of a lab-frame model, integrated in an optional
/// rotating frame. All matrices crossing this API are in the lab frame unless
/// the method name says otherwise.
#[derive(Clone, Debug)]
pub struct MasterEquation {
    dims: Vec<usize>,
    frame: Option<RotatingFrame>,
    generator: Generator,
}

impl MasterEquation {
    pub fn new(h: &HarmonicHamiltonian, c_ops: &[CollapseOperator], frame: Option<RotatingFrame>) -> Result<Self> {
        let generator = match &frame {
            Some(f) => Generator::new(&h.in_frame(f)?, c_ops)?,
            None => Generator::new(h, c_ops)?,
        };
        Ok(MasterEquation { dims: h.dims().to_vec(), frame, generator })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn generator(&self) -> &Generator {
        &self.generator
    }

    pub fn frame(&self) -> Option<&RotatingFrame> {
        self.frame.as_ref()
    }

    pub fn to_frame(&self, m: &DMatrix<C64>, t: f64) -> DMatrix<C64> {
        match &self.frame {
            Some(f) => f.to_frame(&self.dims, m, t).expect("dims validated"),
            None => m.clone(),
        }
    }

    pub fn to_lab(&self, m: &DMatrix<C64>, t: f64) -> DMatrix<C64> {
        match &self.frame {
            Some(f) => f.to_lab(&self.dims, m, t).expect("dims validated"),
            None => m.clone(),
        }
    }

    /// Evolves a lab-frame matrix from `t0`, reporting the lab-frame matrix at
    /// each time in `times`. Returns the final lab-frame matrix and stats.
    pub fn evolve<F>(&self, x0: &DMatrix<C64>, t0: f64, times: &[f64], opts: &OdeOptions, mut on_output: F) -> Result<(DMatrix<C64>, OdeStats)>
    where
        F: FnMut(f64, DMatrix<C64>),
    {
        let n = self.generator.hilbert_dim();
        if x0.shape() != (n, n) {
            return Err(Error::DimensionMismatch { expected: vec![n, n], found: vec![x0.nrows(), x0.ncols()] });
        }
        let y0 = vectorize(&self.to_frame(x0, t0));
        let sys = Columns { gen: &self.generator, cols: 1 };
        let (y, stats) = integrate(&sys, t0, y0.as_slice(), times, opts, |t, y| {
            on_output(t, self.to_lab(&unvectorize(y, n), t));
        })?;
        let t_end = times.last().copied().unwrap_or(t0);
        Ok((self.to_lab(&unvectorize(&y, n), t_end), stats))
    }

    /// Propagates frame-representation columns `vec X_f(t0) ↦ vec X_f(t1)`;
    /// `cols` is `N² × k`.
    pub fn propagate_frame_columns(&self, cols: &DMatrix<C64>, t0: f64, t1: f64, opts: &OdeOptions) -> Result<DMatrix<C64>> {
        let d = self.generator.super_dim();
        if cols.nrows() != d {
            return Err(Error::DimensionMismatch { expected: vec![d], found: vec![cols.nrows()] });
        }
        if t1 == t0 || cols.ncols() == 0 {
            return Ok(cols.clone());
        }
        let sys = Columns { gen: &self.generator, cols: cols.ncols() };
        let (y, _) = integrate(&sys, t0, cols.as_slice(), &[t1], opts, |_, _| {})?;
        Ok(DMatrix::from_column_slice(d, cols.ncols(), &y))
    }

    /// Evolves a frame-representation matrix, reporting frame matrices.
    pub fn evolve_frame<F>(&self, x0: &DMatrix<C64>, t0: f64, times: &[f64], opts: &OdeOptions, mut on_output: F) -> Result<DMatrix<C64>>
    where
        F: FnMut(f64, DMatrix<C64>),
    {
        let n = self.generator.hilbert_dim();
        let sys = Columns { gen: &self.generator, cols: 1 };
        let (y, _) = integrate(&sys, t0, vectorize(x0).as_slice(), times, opts, |t, y| on_output(t, unvectorize(y, n)))?;
        Ok(unvectorize(&y, n))
    }

    /// Frame-representation propagator `vec ρ_f(t0) ↦ vec ρ_f(t1)`.
    pub fn frame_propagator(&self, t0: f64, t1: f64, opts: &OdeOptions) -> Result<DMatrix<C64>> {
        let d = self.generator.super_dim();
        if t1 == t0 {
            return Ok(DMatrix::identity(d, d));
        }
        let mut y0 = vec![ZERO; d * d];
        for k in 0..d {
            y0[k * d + k] = ONE;
        }
        let sys = Columns { gen: &self.generator, cols: d };
        let (y, _) = integrate(&sys, t0, &y0, &[t1], opts, |_, _| {})?;
        Ok(DMatrix::from_column_slice(d, d, &y))
    }

    /// One-period frame propagator starting at `t0`, for periodic generators.
    pub fn period_map(&self, t0: f64, opts: &OdeOptions) -> Result<(f64, DMatrix<C64>)> {
        let period = self
            .generator
            .period()
            .ok_or_else(|| Error::param("frame", "generator is not periodic in this frame"))?;
        Ok((period, self.frame_propagator(t0, t0 + period, opts)?))
    }
}

/// Integrates `dρ/dt = −i[H(t), ρ] + Σ D[A_k, Ω_k]ρ` and records lab-frame
/// expectation values of `observables` at `times` (the first time is the
/// initial time).
pub fn mesolve(
    h: &HarmonicHamiltonian,
    rho0: &DensityMatrix,
    c_ops: &[CollapseOperator],
    times: &[f64],
    observables: &[Observable],
    opts: &SolverOptions,
) -> Result<Trajectory> {
    check_times(times)?;
    if rho0.dims() != h.dims() {
        return Err(Error::DimensionMismatch { expected: h.dims().to_vec(), found: rho0.dims().to_vec() });
    }
    check_observables(h.dims(), observables)?;
    let eq = MasterEquation::new(h, c_ops, opts.frame)?;
    let mut traj = Trajectory { names: observables.iter().map(|o| o.name.clone()).collect(), ..Default::default() };
    let (_, stats) = eq.evolve(rho0.matrix(), times[0], times, &opts.ode, |t, rho| {
        let rho = hermitize(&rho);
        let tr = rho.trace();
        traj.max_norm_error = traj.max_norm_error.max((tr - ONE).norm());
        traj.times.push(t);
        traj.records.push(observables.iter().map(|o| (o.op.matrix() * &rho).trace().re).collect());
        if opts.store_states {
            traj.states.push(rho);
        }
    })?;
    traj.stats = stats;
    Ok(traj)
}

struct Schrodinger {
    n: usize,
    terms: Vec<(f64, CsrMatrix)>,
    scale: f64,
}

impl OdeSystem for Schrodinger {
    fn dim(&self) -> usize {
        self.n
    }
    fn rhs(&self, t: f64, y: &[C64], dy: &mut [C64]) {
        dy.iter_mut().for_each(|v| *v = ZERO);
        for (freq, m) in &self.terms {
            m.mul_add(-I * C64::from_polar(1.0, freq * t), y, dy);
        }
    }
    fn frequency_scale(&self) -> f64 {
        self.scale
    }
}

/// Integrates `i∂_t|ψ⟩ = H(t)|ψ⟩`, recording lab-frame expectation values.
///
/// The norm is a quadratic invariant that Runge–Kutta steps do not conserve,
/// so error control runs at a hundredth of the requested tolerances to keep the
/// accumulated drift below them.
pub fn schrodinger_evolve(
    h: &HarmonicHamiltonian,
    psi0: &StateVector,
    times: &[f64],
    observables: &[Observable],
    opts: &SolverOptions,
) -> Result<Trajectory> {
    check_times(times)?;
    if psi0.dims() != h.dims() {
        return Err(Error::DimensionMismatch { expected: h.dims().to_vec(), found: psi0.dims().to_vec() });
    }
    check_observables(h.dims(), observables)?;
    let hf = match &opts.frame {
        Some(f) => h.in_frame(f)?,
        None => h.clone(),
    };
    let dims = h.dims().to_vec();
    let energies = match &opts.frame {
        Some(f) => f.energies(&dims)?,
        None => vec![0.0; psi0.amplitudes().len()],
    };
    for t in [0.0, 0.3 / hf.frequency_scale().max(1e-300)] {
        let ht = hf.at(t);
        let dev = ht.hermiticity_error();
        if dev > HERMITIAN_TOL * ht.max_abs().max(1.0) {
            return Err(Error::NotHermitian { deviation: dev });
        }
    }
    let sys = Schrodinger {
        n: energies.len(),
        terms: hf.terms().iter().map(|t| (t.freq, CsrMatrix::from_dense(t.op.matrix(), 0.0))).collect(),
        scale: hf.frequency_scale(),
    };
    // |ψ_f⟩ = W|ψ⟩ with W = e^{iRt}
    let rotate = |y: &[C64], t: f64, sign: f64| -> Vec<C64> {
        y.iter().zip(&energies).map(|(a, e)| a * C64::from_polar(1.0, sign * e * t)).collect()
    };
    let y0 = rotate(psi0.amplitudes().as_slice(), times[0], 1.0);
    let mut traj = Trajectory { names: observables.iter().map(|o| o.name.clone()).collect(), ..Default::default() };
    let ode = OdeOptions { rtol: opts.ode.rtol / 100.0, atol: opts.ode.atol / 100.0, ..opts.ode.clone() };
    let (_, stats) = integrate(&sys, times[0], &y0, times, &ode, |t, y| {
        let psi = DVector::from_vec(rotate(y, t, -1.0));
        let norm = psi.norm();
        traj.max_norm_error = traj.max_norm_error.max((norm - 1.0).abs());
        traj.times.push(t);
        traj.records.push(
            observables
                .iter()
                .map(|o| (psi.adjoint() * o.op.matrix() * &psi)[(0, 0)].re / (norm * norm))
                .collect(),
        );
        if opts.store_states {
            traj.states.push(DMatrix::from_column_slice(psi.len(), 1, psi.as_slice()));
        }
    })?;
    traj.stats = stats;
    Ok(traj)
}

/// Evolves an arbitrary operator `X` (not necessarily a state) under the
/// generator of `eq` from `t0` to `t0 + tau`, in the lab frame.
pub fn propagate_operator(eq: &MasterEquation, x: &Operator, t0: f64, tau: f64, opts: &OdeOptions) -> Result<Operator> {
    if tau < 0.0 {
        return Err(Error::param("tau", "must be non-negative"));
    }
    if x.dims() != eq.dims() {
        return Err(Error::DimensionMismatch { expected: eq.dims().to_vec(), found: x.dims().to_vec() });
    }
    if tau == 0.0 {
        return Ok(x.clone());
    }
    let (m, _) = eq.evolve(x.matrix(), t0, &[t0 + tau], opts, |_, _| {})?;
    Operator::new(eq.dims().to_vec(), m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lindblad::{commutator_super, dissipator_super};
    use crate::operators::{basis_state, destroy, number, pauli, qeye, Pauli, QubitMode};

    #[test]
    fn generator_matches_dense_superoperators() {
        let s = QubitMode::new(3).unwrap();
        let mut h = HarmonicHamiltonian::constant(&(&s.num() * 1.3) + &(&s.sz() * 0.4));
        h.add_pair(&s.bdag() * 0.2, -1.1).unwrap();
        let c = vec![
            CollapseOperator::new("a", s.b(), 0.3).unwrap(),
            CollapseOperator::new("z", s.sz(), 0.05).unwrap(),
        ];
        let gen = Generator::new(&h, &c).unwrap();
        assert!(!gen.is_static());
        for t in [0.0, 0.7, 3.3] {
            let mut dense = commutator_super(h.at(t).matrix());
            for ch in &c {
                dense += dissipator_super(ch);
            }
            let diff = (gen.dense_at(t) - &dense).map(|z| z.norm()).max();
            assert!(diff < 1e-13, "t = {t}: {diff}");
            let x: Vec<C64> = (0..36).map(|k| C64::new(k as f64, 1.0 - k as f64)).collect();
            let mut y = vec![ZERO; 36];
            gen.apply(t, &x, &mut y);
            let expected = &dense * DVector::from_vec(x.clone());
            assert!((DVector::from_vec(y) - expected).norm() < 1e-11);
        }
    }

    #[test]
    fn rejects_nonhermitian() {
        let h = HarmonicHamiltonian::constant(destroy(3).unwrap());
        assert!(matches!(Generator::new(&h, &[]), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn eigenstate_is_stationary() {
        let s = QubitMode::new(4).unwrap();
        let h = HarmonicHamiltonian::constant(&s.num() * 2.0);
        let psi = basis_state(&[2, 4], &[0, 1]).unwrap();
        let times: Vec<f64> = (0..20).map(|k| k as f64 * 0.3).collect();
        let obs = [Observable::new("p1", s.fock_projector(1).unwrap())];
        let tr = schrodinger_evolve(&h, &psi, &times, &obs, &SolverOptions::default()).unwrap();
        for p in tr.series("p1").unwrap() {
            assert!((p - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn two_level_rabi() {
        let omega = 2.3;
        let h = HarmonicHamiltonian::constant(&pauli(Pauli::X) * (omega / 2.0));
        let psi = basis_state(&[2], &[0]).unwrap();
        let pe = Operator::new(vec![2], DMatrix::from_diagonal(&DVector::from_vec(vec![ZERO, ONE]))).unwrap();
        let times: Vec<f64> = (0..=200).map(|k| k as f64 * 0.05).collect();
        let tr = schrodinger_evolve(&h, &psi, &times, &[Observable::new("pe", pe)], &SolverOptions::default()).unwrap();
        let worst = tr
            .times
            .iter()
            .zip(tr.series("pe").unwrap())
            .map(|(t, p)| (p - (omega * t / 2.0).sin().powi(2)).abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-8, "max error {worst}");
        assert!(tr.max_norm_error < 1e-8, "norm drift {} steps {:?}", tr.max_norm_error, tr.stats);
    }

    #[test]
    fn single_mode_decay() {
        let m = 6;
        let kappa = 0.7;
        let h = HarmonicHamiltonian::constant(&number(m).unwrap() * 5.0);
        let c = [CollapseOperator::new("b", destroy(m).unwrap(), kappa).unwrap()];
        let rho0 = basis_state(&[m], &[1]).unwrap().to_density();
        let times: Vec<f64> = (0..=50).map(|k| k as f64 * 0.1).collect();
        let tr = mesolve(&h, &rho0, &c, &times, &[Observable::new("n", number(m).unwrap())], &SolverOptions::default()).unwrap();
        for (t, n) in tr.times.iter().zip(tr.series("n").unwrap()) {
            let exact = (-kappa * t).exp();
            assert!(((n - exact) / exact).abs() < 1e-6, "t = {t}");
        }
        assert!(tr.max_norm_error < 1e-8);
    }

    #[test]
    fn frame_and_direct_agree() {
        let s = QubitMode::new(4).unwrap();
        let (w0, wq, wf) = (20.0, 30.0, 19.5);
        let mut h = HarmonicHamiltonian::constant(
            &(&(&s.num() * w0) + &(&s.excited() * wq)) + &(&s.sx() * 0.8),
        );
        h.add_pair(&(&s.sz() * &s.bdag()) * 0.3, 0.0).unwrap();
        h.add_pair(&s.bdag() * 0.4, -wf).unwrap();
        let c = vec![
            CollapseOperator::new("b", s.b(), 0.2).unwrap(),
            CollapseOperator::new("sm", s.sm(), 0.3).unwrap(),
        ];
        let rho0 = basis_state(&[2, 4], &[1, 0]).unwrap().to_density();
        let times: Vec<f64> = (0..=40).map(|k| k as f64 * 0.25).collect();
        let obs = [
            Observable::new("n", s.num()),
            Observable::new("x", &s.b() + &s.bdag()),
            Observable::new("sx", s.sx()),
        ];
        let direct = mesolve(&h, &rho0, &c, &times, &obs, &SolverOptions::default()).unwrap();
        let opts = SolverOptions { frame: Some(RotatingFrame { resonator: wf, qubit: 2.0 * wf }), ..Default::default() };
        let framed = mesolve(&h, &rho0, &c, &times, &obs, &opts).unwrap();
        for (a, b) in direct.records.iter().zip(&framed.records) {
            for (x, y) in a.iter().zip(b) {
                assert!((x - y).abs() < 1e-6, "{x} vs {y}");
            }
        }
    }

    #[test]
    fn propagation_is_linear_and_trace_preserving() {
        let s = QubitMode::new(3).unwrap();
        let mut h = HarmonicHamiltonian::constant(&(&s.num() * 1.0) + &(&s.sx() * 0.5));
        h.add_pair(&s.bdag() * 0.3, -1.0).unwrap();
        let c = vec![CollapseOperator::new("b", s.b(), 0.4).unwrap()];
        let eq = MasterEquation::new(&h, &c, None).unwrap();
        let opts = OdeOptions { rtol: 1e-12, atol: 1e-14, ..Default::default() };
        let x = Operator::new(s.dims(), DMatrix::from_fn(6, 6, |i, j| C64::new(i as f64 - j as f64, (i * j) as f64 * 0.1))).unwrap();
        let y = &s.b() * 2.0;
        let (a, b) = (C64::new(0.3, -1.2), C64::new(2.0, 0.5));
        let lhs = propagate_operator(&eq, &(&x.scale(a) + &y.scale(b)), 0.2, 1.5, &opts).unwrap();
        let px = propagate_operator(&eq, &x, 0.2, 1.5, &opts).unwrap();
        let py = propagate_operator(&eq, &y, 0.2, 1.5, &opts).unwrap();
        let rhs = &px.scale(a) + &py.scale(b);
        assert!((&lhs - &rhs).max_abs() < 1e-10);
        assert!((px.trace() - x.trace()).norm() < 1e-10);
    }

    #[test]
    fn propagator_composes_with_evolution() {
        let s = QubitMode::new(3).unwrap();
        let mut h = HarmonicHamiltonian::constant(&(&s.num() * 4.0) + &(&s.excited() * 8.0));
        h.add_pair(&(&s.sz() * &s.b()) * 0.3, 0.0).unwrap();
        h.add_pair(&s.bdag() * 0.2, -4.0).unwrap();
        let c = vec![CollapseOperator::new("b", s.b(), 0.3).unwrap()];
        let eq = MasterEquation::new(&h, &c, Some(RotatingFrame { resonator: 4.0, qubit: 8.0 })).unwrap();
        let opts = OdeOptions { rtol: 1e-10, atol: 1e-12, ..Default::default() };
        let (period, p) = eq.period_map(0.0, &opts).unwrap();
        assert!((period - 2.0 * std::f64::consts::PI / 4.0).abs() < 1e-12);
        let rho0 = basis_state(&[2, 3], &[0, 0]).unwrap().to_density();
        let v = &p * vectorize(&eq.to_frame(rho0.matrix(), 0.0));
        let via_map = eq.to_lab(&unvectorize(v.as_slice(), 6), period);
        let (direct, _) = eq.evolve(rho0.matrix(), 0.0, &[period], &opts, |_, _| {}).unwrap();
        assert!((via_map - direct).map(|z| z.norm()).max() < 1e-8);
        let _ = qeye(2);
    }
}
