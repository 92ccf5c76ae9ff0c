//! Hamiltonians with a finite set of harmonic time dependences, and the
//! rotating frames used to integrate them.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::operators::{Operator, C64, ZERO};

/// One term `A e^{iνt}` of a harmonic Hamiltonian.
#[derive(Clone, Debug, PartialEq)]
pub struct HarmonicTerm {
    pub op: Operator,
    /// Angular frequency ν in rad/s; zero for the static part.
    pub freq: f64,
}

/// `H(t) = Σ_k A_k e^{iν_k t}`, Hermitian for every `t` when the terms come in
/// conjugate pairs.
#[derive(Clone, Debug, PartialEq)]
pub struct HarmonicHamiltonian {
    dims: Vec<usize>,
    terms: Vec<HarmonicTerm>,
}

fn same_freq(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

impl HarmonicHamiltonian {
    pub fn new(dims: Vec<usize>) -> Self {
        HarmonicHamiltonian { dims, terms: Vec::new() }
    }

    pub fn constant(h: Operator) -> Self {
        let mut out = HarmonicHamiltonian::new(h.dims().to_vec());
        out.add_term(h, 0.0).expect("dims match");
        out
    }

    /// Adds `op e^{i freq t}`, merging with an existing term of the same
    /// frequency.
    pub fn add_term(&mut self, op: Operator, freq: f64) -> Result<()> {
        if op.dims() != self.dims.as_slice() {
            return Err(Error::DimensionMismatch {
                expected: self.dims.clone(),
                found: op.dims().to_vec(),
            });
        }
        match self.terms.iter_mut().find(|t| same_freq(t.freq, freq)) {
            Some(t) => t.op = &t.op + &op,
            None => self.terms.push(HarmonicTerm { op, freq }),
        }
        Ok(())
    }

    /// Adds the Hermitian pair `op e^{iνt} + op† e^{−iνt}`.
    pub fn add_pair(&mut self, op: Operator, freq: f64) -> Result<()> {
        if freq == 0.0 {
            let h = &op + &op.dag();
            return self.add_term(h, 0.0);
        }
        let d = op.dag();
        self.add_term(op, freq)?;
        self.add_term(d, -freq)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn terms(&self) -> &[HarmonicTerm] {
        &self.terms
    }

    pub fn is_static(&self) -> bool {
        self.terms.iter().all(|t| t.freq == 0.0 || t.op.max_abs() == 0.0)
    }

    /// The time-independent part.
    pub fn static_part(&self) -> Operator {
        self.terms
            .iter()
            .filter(|t| t.freq == 0.0)
            .fold(Operator::zeros(&self.dims), |acc, t| &acc + &t.op)
    }

    pub fn at(&self, t: f64) -> Operator {
        let n: usize = self.dims.iter().product();
        let mut m = DMatrix::<C64>::zeros(n, n);
        for term in &self.terms {
            let phase = C64::from_polar(1.0, term.freq * t);
            m += term.op.matrix() * phase;
        }
        Operator::new(self.dims.clone(), m).expect("dims consistent")
    }

    /// Rough bound on the fastest angular frequency in the dynamics.
    pub fn frequency_scale(&self) -> f64 {
        self.terms.iter().map(|t| t.freq.abs() + spectral_bound(&t.op)).sum()
    }

    /// The same dynamics seen from `frame`: `W H W† − R` with `W = e^{iRt}`.
    pub fn in_frame(&self, frame: &RotatingFrame) -> Result<HarmonicHamiltonian> {
        let energies = frame.energies(&self.dims)?;
        let n = energies.len();
        let mut parts: Vec<(f64, DMatrix<C64>)> = Vec::new();
        let mut push = |freq: f64, i: usize, j: usize, z: C64| {
            let slot = match parts.iter().position(|(f, _)| same_freq(*f, freq)) {
                Some(k) => k,
                None => {
                    parts.push((freq, DMatrix::zeros(n, n)));
                    parts.len() - 1
                }
            };
            parts[slot].1[(i, j)] += z;
        };
        for term in &self.terms {
            let m = term.op.matrix();
            for j in 0..n {
                for i in 0..n {
                    let z = m[(i, j)];
                    if z != ZERO {
                        let f = term.freq + energies[i] - energies[j];
                        // cancellation leaves rounding residue; snap it to zero
                        let mag = term.freq.abs() + energies[i].abs() + energies[j].abs();
                        let f = if f.abs() <= 1e-12 * mag { 0.0 } else { f };
                        push(f, i, j, z);
                    }
                }
            }
        }
        for (i, e) in energies.iter().enumerate() {
            if *e != 0.0 {
                push(0.0, i, i, C64::new(-e, 0.0));
            }
        }
        let mut out = HarmonicHamiltonian::new(self.dims.clone());
        for (freq, m) in parts {
            let freq = if same_freq(freq, 0.0) { 0.0 } else { freq };
            out.add_term(Operator::new(self.dims.clone(), m)?, freq)?;
        }
        Ok(out)
    }

    /// Smallest period `T` with `H(t + T) = H(t)`, if the nonzero frequencies
    /// are commensurate.
    pub fn period(&self) -> Option<f64> {
        let freqs: Vec<f64> = self
            .terms
            .iter()
            .filter(|t| t.freq != 0.0 && t.op.max_abs() > 0.0)
            .map(|t| t.freq.abs())
            .collect();
        let base = freqs.iter().cloned().fold(f64::INFINITY, f64::min);
        if !base.is_finite() {
            return None;
        }
        for f in &freqs {
            let r = f / base;
            if (r - r.round()).abs() > 1e-9 * r.max(1.0) {
                return None;
            }
        }
        Some(2.0 * std::f64::consts::PI / base)
    }
}

fn spectral_bound(op: &Operator) -> f64 {
    // max absolute row sum bounds the spectral radius
    let m = op.matrix();
    (0..m.nrows())
        .map(|i| m.row(i).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Frame rotating with `R = ω_r b†b + ω_q |e⟩⟨e|` on a `[2, M]` space (or the
/// matching single factor for `[M]` / `[2]`).
///
/// Operators transform elementwise: `(W A W†)_{ij} = A_{ij} e^{i(R_i − R_j)t}`,
/// so populations and any operator diagonal in the product basis are
/// frame-independent.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RotatingFrame {
    pub resonator: f64,
    pub qubit: f64,
}

impl RotatingFrame {
    pub fn energies(&self, dims: &[usize]) -> Result<Vec<f64>> {
        match dims {
            [2, m] => Ok((0..2)
                .flat_map(|q| (0..*m).map(move |n| (q as f64, n as f64)))
                .map(|(q, n)| q * self.qubit + n * self.resonator)
                .collect()),
            [m] => Ok((0..*m).map(|n| n as f64 * self.resonator).collect()),
            _ => Err(Error::InvalidDimension(format!("rotating frame needs [2, M] dims, got {dims:?}"))),
        }
    }

    /// `W(t) A W(t)†`, mapping a lab-frame matrix into this frame.
    pub fn to_frame(&self, dims: &[usize], m: &DMatrix<C64>, t: f64) -> Result<DMatrix<C64>> {
        let e = self.energies(dims)?;
        Ok(DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| {
            m[(i, j)] * C64::from_polar(1.0, (e[i] - e[j]) * t)
        }))
    }

    /// `W(t)† A W(t)`, mapping a frame matrix back to the lab.
    pub fn to_lab(&self, dims: &[usize], m: &DMatrix<C64>, t: f64) -> Result<DMatrix<C64>> {
        self.to_frame(dims, m, -t)
    }
}
