//! Operators, states and expectation values on the qubit ⊗ resonator space.
//!
//! Basis ordering is fixed everywhere: the qubit factor comes first with
//! `|g⟩ = 0` and `|e⟩ = 1`, the Fock factor second in ascending phonon number.
//! A composite index is therefore `q * fock_dim + n`.

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Dense complex operator on a tensor-product space.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    dims: Vec<usize>,
    data: DMatrix<C64>,
}

impl Operator {
    pub fn new(dims: Vec<usize>, data: DMatrix<C64>) -> Result<Self> {
        if dims.is_empty() || dims.iter().any(|&d| d == 0) {
            return Err(Error::InvalidDimension(format!("bad subsystem dims {dims:?}")));
        }
        let n: usize = dims.iter().product();
        if data.nrows() != n || data.ncols() != n {
            return Err(Error::InvalidDimension(format!(
                "{}x{} matrix does not match dims {dims:?} (N = {n})",
                data.nrows(),
                data.ncols()
            )));
        }
        Ok(Operator { dims, data })
    }

    pub fn identity(dims: &[usize]) -> Self {
        let n = dims.iter().product();
        Operator { dims: dims.to_vec(), data: DMatrix::identity(n, n) }
    }

    pub fn zeros(dims: &[usize]) -> Self {
        let n = dims.iter().product();
        Operator { dims: dims.to_vec(), data: DMatrix::zeros(n, n) }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Total Hilbert-space dimension.
    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.data
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.data
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.data[(row, col)]
    }

    pub fn dag(&self) -> Operator {
        Operator { dims: self.dims.clone(), data: self.data.adjoint() }
    }

    pub fn trace(&self) -> C64 {
        self.data.trace()
    }

    /// `max |A - A†|` over all entries.
    pub fn hermiticity_error(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.data[(i, j)] - self.data[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_error() < tol
    }

    pub fn scale(&self, c: C64) -> Operator {
        Operator { dims: self.dims.clone(), data: &self.data * c }
    }

    pub fn apply(&self, psi: &StateVector) -> Result<StateVector> {
        check_dims(&self.dims, &psi.dims)?;
        Ok(StateVector { dims: psi.dims.clone(), amplitudes: &self.data * &psi.amplitudes })
    }

    /// Largest absolute entry, useful as a scale for tolerances.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    pub fn commutator(&self, other: &Operator) -> Operator {
        &(self * other) - &(other * self)
    }

    pub fn kron(&self, other: &Operator) -> Operator {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        Operator { dims, data: self.data.kronecker(&other.data) }
    }
}

fn check_dims(expected: &[usize], found: &[usize]) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected: expected.to_vec(), found: found.to_vec() });
    }
    Ok(())
}

impl<'a> Add<&'a Operator> for &'a Operator {
    type Output = Operator;
    fn add(self, rhs: &'a Operator) -> Operator {
        assert_eq!(self.dims, rhs.dims, "operator dims differ");
        Operator { dims: self.dims.clone(), data: &self.data + &rhs.data }
    }
}

impl Add for Operator {
    type Output = Operator;
    fn add(self, rhs: Operator) -> Operator {
        &self + &rhs
    }
}

impl<'a> Sub<&'a Operator> for &'a Operator {
    type Output = Operator;
    fn sub(self, rhs: &'a Operator) -> Operator {
        assert_eq!(self.dims, rhs.dims, "operator dims differ");
        Operator { dims: self.dims.clone(), data: &self.data - &rhs.data }
    }
}

impl Sub for Operator {
    type Output = Operator;
    fn sub(self, rhs: Operator) -> Operator {
        &self - &rhs
    }
}

impl<'a> Mul<&'a Operator> for &'a Operator {
    type Output = Operator;
    fn mul(self, rhs: &'a Operator) -> Operator {
        assert_eq!(self.dims, rhs.dims, "operator dims differ");
        Operator { dims: self.dims.clone(), data: &self.data * &rhs.data }
    }
}

impl Mul for Operator {
    type Output = Operator;
    fn mul(self, rhs: Operator) -> Operator {
        &self * &rhs
    }
}

impl Mul<f64> for &Operator {
    type Output = Operator;
    fn mul(self, rhs: f64) -> Operator {
        self.scale(C64::new(rhs, 0.0))
    }
}

impl Mul<f64> for Operator {
    type Output = Operator;
    fn mul(self, rhs: f64) -> Operator {
        &self * rhs
    }
}

impl Mul<C64> for &Operator {
    type Output = Operator;
    fn mul(self, rhs: C64) -> Operator {
        self.scale(rhs)
    }
}

impl Neg for &Operator {
    type Output = Operator;
    fn neg(self) -> Operator {
        self.scale(-ONE)
    }
}

/// Identity on a single subsystem of dimension `dim`.
pub fn qeye(dim: usize) -> Operator {
    Operator::identity(&[dim])
}

/// Truncated annihilation operator `b` with `b[n-1, n] = √n`.
pub fn destroy(fock_dim: usize) -> Result<Operator> {
    if fock_dim < 2 {
        return Err(Error::InvalidDimension(format!("fock_dim must be >= 2, got {fock_dim}")));
    }
    let mut data = DMatrix::zeros(fock_dim, fock_dim);
    for n in 1..fock_dim {
        data[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
    }
    Ok(Operator { dims: vec![fock_dim], data })
}

pub fn create(fock_dim: usize) -> Result<Operator> {
    Ok(destroy(fock_dim)?.dag())
}

pub fn number(fock_dim: usize) -> Result<Operator> {
    let b = destroy(fock_dim)?;
    Ok(&b.dag() * &b)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Pauli {
    Z,
    X,
    Plus,
    Minus,
}

/// Qubit operators with `σ_z = |e⟩⟨e| − |g⟩⟨g|` and `σ_+ = |e⟩⟨g|`.
pub fn pauli(which: Pauli) -> Operator {
    let mut data = DMatrix::zeros(2, 2);
    match which {
        Pauli::Z => {
            data[(0, 0)] = -ONE;
            data[(1, 1)] = ONE;
        }
        Pauli::X => {
            data[(0, 1)] = ONE;
            data[(1, 0)] = ONE;
        }
        Pauli::Plus => data[(1, 0)] = ONE,
        Pauli::Minus => data[(0, 1)] = ONE,
    }
    Operator { dims: vec![2], data }
}

/// Kronecker product in list order.
pub fn tensor(ops: &[Operator]) -> Result<Operator> {
    let (first, rest) = ops
        .split_first()
        .ok_or_else(|| Error::InvalidDimension("tensor of an empty operator list".into()))?;
    Ok(rest.iter().fold(first.clone(), |acc, op| acc.kron(op)))
}

/// Lift an operator on the last (resonator) factor of `dims` to the full space.
pub fn on_mode(dims: &[usize], op: &Operator) -> Result<Operator> {
    let (&mode, rest) = dims
        .split_last()
        .ok_or_else(|| Error::InvalidDimension("empty dims".into()))?;
    check_dims(&[mode], op.dims())?;
    if rest.is_empty() {
        return Ok(op.clone());
    }
    let pre: Vec<Operator> = rest.iter().map(|&d| qeye(d)).collect();
    Ok(tensor(&pre)?.kron(op))
}

/// Lift a qubit operator onto a `[2, fock_dim]` space.
pub fn on_qubit(fock_dim: usize, op: &Operator) -> Result<Operator> {
    check_dims(&[2], op.dims())?;
    Ok(op.kron(&qeye(fock_dim)))
}

/// Projector onto Fock state `|n⟩` of the resonator, with identity on the qubit.
pub fn fock_projector(fock_dim: usize, n: usize) -> Result<Operator> {
    if n >= fock_dim {
        return Err(Error::IndexOutOfRange { index: n, dim: fock_dim });
    }
    let mut p = DMatrix::zeros(fock_dim, fock_dim);
    p[(n, n)] = ONE;
    Ok(qeye(2).kron(&Operator { dims: vec![fock_dim], data: p }))
}

/// Convenience constructors for the standard `[2, fock_dim]` composite space.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct QubitMode {
    pub fock_dim: usize,
}

impl QubitMode {
    pub fn new(fock_dim: usize) -> Result<Self> {
        if fock_dim < 2 {
            return Err(Error::InvalidDimension(format!("fock_dim must be >= 2, got {fock_dim}")));
        }
        Ok(QubitMode { fock_dim })
    }

    pub fn dims(&self) -> Vec<usize> {
        vec![2, self.fock_dim]
    }

    pub fn dim(&self) -> usize {
        2 * self.fock_dim
    }

    pub fn index(&self, qubit: usize, phonons: usize) -> usize {
        qubit * self.fock_dim + phonons
    }

    pub fn identity(&self) -> Operator {
        Operator::identity(&self.dims())
    }

    pub fn b(&self) -> Operator {
        qeye(2).kron(&destroy(self.fock_dim).expect("fock_dim validated"))
    }

    pub fn bdag(&self) -> Operator {
        self.b().dag()
    }

    pub fn num(&self) -> Operator {
        let b = self.b();
        &b.dag() * &b
    }

    pub fn qubit(&self, which: Pauli) -> Operator {
        pauli(which).kron(&qeye(self.fock_dim))
    }

    pub fn sz(&self) -> Operator {
        self.qubit(Pauli::Z)
    }

    pub fn sx(&self) -> Operator {
        self.qubit(Pauli::X)
    }

    pub fn sp(&self) -> Operator {
        self.qubit(Pauli::Plus)
    }

    pub fn sm(&self) -> Operator {
        self.qubit(Pauli::Minus)
    }

    /// `|e⟩⟨e| ⊗ I`.
    pub fn excited(&self) -> Operator {
        &self.sp() * &self.sm()
    }

    pub fn fock_projector(&self, n: usize) -> Result<Operator> {
        fock_projector(self.fock_dim, n)
    }

    pub fn basis(&self, qubit: usize, phonons: usize) -> Result<StateVector> {
        basis_state(&self.dims(), &[qubit, phonons])
    }
}

/// Normalized pure state.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    dims: Vec<usize>,
    amplitudes: DVector<C64>,
}

pub const STATE_NORM_TOL: f64 = 1e-10;

impl StateVector {
    pub fn new(dims: Vec<usize>, amplitudes: DVector<C64>) -> Result<Self> {
        let n: usize = dims.iter().product();
        if amplitudes.len() != n {
            return Err(Error::InvalidDimension(format!(
                "{} amplitudes for dims {dims:?}",
                amplitudes.len()
            )));
        }
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > STATE_NORM_TOL {
            return Err(Error::InvalidState(format!("state norm {norm} is not 1")));
        }
        Ok(StateVector { dims, amplitudes })
    }

    /// Normalizes the amplitudes instead of rejecting them.
    pub fn normalized(dims: Vec<usize>, amplitudes: DVector<C64>) -> Result<Self> {
        let norm = amplitudes.norm();
        if norm == 0.0 {
            return Err(Error::InvalidState("zero vector".into()));
        }
        StateVector::new(dims, amplitudes / C64::new(norm, 0.0))
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    pub fn probability(&self, index: usize) -> f64 {
        self.amplitudes[index].norm_sqr()
    }

    pub fn to_density(&self) -> DensityMatrix {
        DensityMatrix {
            dims: self.dims.clone(),
            data: &self.amplitudes * self.amplitudes.adjoint(),
        }
    }
}

/// Product basis state `|i₁, i₂, …⟩`.
pub fn basis_state(dims: &[usize], indices: &[usize]) -> Result<StateVector> {
    if dims.len() != indices.len() {
        return Err(Error::DimensionMismatch { expected: dims.to_vec(), found: indices.to_vec() });
    }
    let mut flat = 0usize;
    for (&d, &i) in dims.iter().zip(indices) {
        if i >= d {
            return Err(Error::IndexOutOfRange { index: i, dim: d });
        }
        flat = flat * d + i;
    }
    let n = dims.iter().product();
    let mut amps = DVector::zeros(n);
    amps[flat] = ONE;
    Ok(StateVector { dims: dims.to_vec(), amplitudes: amps })
}

pub const TRACE_TOL: f64 = 1e-8;
pub const HERMITIAN_TOL: f64 = 1e-10;
pub const POSITIVITY_TOL: f64 = 1e-8;

/// Density matrix satisfying unit trace, Hermiticity and positivity within
/// [`TRACE_TOL`], [`HERMITIAN_TOL`] and [`POSITIVITY_TOL`].
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    dims: Vec<usize>,
    data: DMatrix<C64>,
}

impl DensityMatrix {
    pub fn new(dims: Vec<usize>, data: DMatrix<C64>) -> Result<Self> {
        let rho = DensityMatrix::unchecked(dims, data)?;
        rho.validate()?;
        Ok(rho)
    }

    /// Shape-checked but not physically validated; for intermediate results.
    pub fn unchecked(dims: Vec<usize>, data: DMatrix<C64>) -> Result<Self> {
        let op = Operator::new(dims, data)?;
        Ok(DensityMatrix { dims: op.dims, data: op.data })
    }

    pub fn pure(psi: &StateVector) -> Self {
        psi.to_density()
    }

    /// Bose–Einstein state of a single truncated mode, renormalized on the
    /// truncated space.
    pub fn thermal(fock_dim: usize, n_th: f64) -> Result<Self> {
        if fock_dim < 2 {
            return Err(Error::InvalidDimension(format!("fock_dim must be >= 2, got {fock_dim}")));
        }
        if !(n_th >= 0.0) {
            return Err(Error::param("n_th", "must be non-negative"));
        }
        let mut data = DMatrix::zeros(fock_dim, fock_dim);
        if n_th == 0.0 {
            data[(0, 0)] = ONE;
        } else {
            let r = n_th / (1.0 + n_th);
            let weights: Vec<f64> = (0..fock_dim).map(|n| r.powi(n as i32)).collect();
            let z: f64 = weights.iter().sum();
            for (n, w) in weights.iter().enumerate() {
                data[(n, n)] = C64::new(w / z, 0.0);
            }
        }
        Ok(DensityMatrix { dims: vec![fock_dim], data })
    }

    /// Truncated coherent state `|α⟩` built from the exponential series.
    pub fn coherent(fock_dim: usize, alpha: C64) -> Result<Self> {
        if fock_dim < 2 {
            return Err(Error::InvalidDimension(format!("fock_dim must be >= 2, got {fock_dim}")));
        }
        let mut amps = DVector::zeros(fock_dim);
        let mut term = C64::new((-alpha.norm_sqr() / 2.0).exp(), 0.0);
        for n in 0..fock_dim {
            if n > 0 {
                term = term * alpha / (n as f64).sqrt();
            }
            amps[n] = term;
        }
        Ok(StateVector::normalized(vec![fock_dim], amps)?.to_density())
    }

    pub fn kron(&self, other: &DensityMatrix) -> DensityMatrix {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        DensityMatrix { dims, data: self.data.kronecker(&other.data) }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.data
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.data
    }

    pub fn as_operator(&self) -> Operator {
        Operator { dims: self.dims.clone(), data: self.data.clone() }
    }

    pub fn trace(&self) -> C64 {
        self.data.trace()
    }

    pub fn population(&self, index: usize) -> f64 {
        self.data[(index, index)].re
    }

    pub fn hermiticity_error(&self) -> f64 {
        self.as_operator().hermiticity_error()
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> f64 {
        let h = (&self.data + self.data.adjoint()) * C64::new(0.5, 0.0);
        SymmetricEigen::new(h).eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Replace with the Hermitian part, rescaled to unit trace.
    pub fn hermitize(&mut self) {
        let h = (&self.data + self.data.adjoint()) * C64::new(0.5, 0.0);
        let tr = h.trace().re;
        self.data = if tr != 0.0 { h / C64::new(tr, 0.0) } else { h };
    }

    pub fn validate(&self) -> Result<()> {
        let tr = self.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} is not 1")));
        }
        let herm = self.hermiticity_error();
        if herm > HERMITIAN_TOL {
            return Err(Error::InvalidState(format!("not Hermitian ({herm:.3e})")));
        }
        let min = self.min_eigenvalue();
        if min < -POSITIVITY_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:.3e}")));
        }
        Ok(())
    }
}

/// `Tr[Aρ]` split into its real value and imaginary residue.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Expectation {
    pub value: f64,
    pub imag: f64,
}

pub fn expect(a: &Operator, rho: &DensityMatrix) -> Result<Expectation> {
    check_dims(a.dims(), rho.dims())?;
    let z = trace_product(a.matrix(), rho.matrix());
    Ok(Expectation { value: z.re, imag: z.im })
}

/// `Tr[A B]` without forming the product.
pub fn trace_product(a: &DMatrix<C64>, b: &DMatrix<C64>) -> C64 {
    let n = a.nrows();
    let mut acc = ZERO;
    for i in 0..n {
        for j in 0..n {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc
}
