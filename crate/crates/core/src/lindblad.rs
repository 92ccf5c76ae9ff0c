//! Lindblad dissipators and superoperator matrices.
//!
//! Density matrices are vectorized by stacking columns, so that
//! `vec(A X B) = (Bᵀ ⊗ A) vec(X)`. Under this convention
//! `vec(Hρ) = (I ⊗ H) vec(ρ)` and `vec(ρH) = (Hᵀ ⊗ I) vec(ρ)`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::operators::{Operator, C64, I, ONE};

/// Decay channel `D[A, rate]ρ = (rate/2)(2AρA† − A†Aρ − ρA†A)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CollapseOperator {
    pub name: String,
    pub op: Operator,
    pub rate: f64,
}

impl CollapseOperator {
    pub fn new(name: impl Into<String>, op: Operator, rate: f64) -> Result<Self> {
        let name = name.into();
        if !(rate >= 0.0) || !rate.is_finite() {
            return Err(Error::NegativeRate { channel: name, rate });
        }
        Ok(CollapseOperator { name, op, rate })
    }

    /// The jump operator scaled by `√rate`.
    pub fn scaled(&self) -> Operator {
        self.op.scale(C64::new(self.rate.sqrt(), 0.0))
    }
}

/// Right-hand side of the master equation, evaluated with matrix products.
pub fn lindblad_rhs(h: &Operator, c_ops: &[CollapseOperator], rho: &DMatrix<C64>) -> DMatrix<C64> {
    let hm = h.matrix();
    let mut out = (hm * rho - rho * hm) * (-I);
    for c in c_ops {
        if c.rate == 0.0 {
            continue;
        }
        out += dissipator(c, rho);
    }
    out
}

pub fn dissipator(c: &CollapseOperator, rho: &DMatrix<C64>) -> DMatrix<C64> {
    let a = c.op.matrix();
    let ad = a.adjoint();
    let ada = &ad * a;
    let half = C64::new(0.5 * c.rate, 0.0);
    (a * rho * &ad * C64::new(2.0, 0.0) - &ada * rho - rho * &ada) * half
}

/// `X ↦ AX` as an `N² × N²` matrix.
pub fn spre(a: &DMatrix<C64>) -> DMatrix<C64> {
    let n = a.nrows();
    DMatrix::<C64>::identity(n, n).kronecker(a)
}

/// `X ↦ XA` as an `N² × N²` matrix.
pub fn spost(a: &DMatrix<C64>) -> DMatrix<C64> {
    let n = a.nrows();
    a.transpose().kronecker(&DMatrix::<C64>::identity(n, n))
}

/// `X ↦ −i[A, X]`; `A` need not be Hermitian (harmonic components are not).
pub fn commutator_super(a: &DMatrix<C64>) -> DMatrix<C64> {
    (spre(a) - spost(a)) * (-I)
}

pub fn dissipator_super(c: &CollapseOperator) -> DMatrix<C64> {
    let a = c.op.matrix();
    let ad = a.adjoint();
    let ada = &ad * a;
    // vec(A X A†) = (conj(A) ⊗ A) vec(X)
    let jump = a.map(|z| z.conj()).kronecker(a);
    (jump - (spre(&ada) + spost(&ada)) * C64::new(0.5, 0.0)) * C64::new(c.rate, 0.0)
}

pub fn vectorize(m: &DMatrix<C64>) -> DVector<C64> {
    DVector::from_column_slice(m.as_slice())
}

pub fn unvectorize(v: &[C64], n: usize) -> DMatrix<C64> {
    DMatrix::from_column_slice(n, n, v)
}

/// Row vector `vec(I)†`, the trace functional.
pub fn trace_row(n: usize) -> DVector<C64> {
    let mut v = DVector::zeros(n * n);
    for i in 0..n {
        v[i * n + i] = ONE;
    }
    v
}
