//! Exact statevector and density-matrix simulation.
//!
//! Qubit ordering is little-endian: qubit `q` is bit `q` of the basis index.
//! Gates act in place over index strides; no 2^n × 2^n operator is ever formed.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, Gate};
use crate::error::{Error, Result};

pub const DEFAULT_STATEVECTOR_CAP: usize = 16;
pub const DEFAULT_DENSITY_CAP: usize = 10;

type M2 = [[C64; 2]; 2];

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// 2×2 matrix of a single-qubit gate. `None` for CX.
pub fn gate_matrix(g: &Gate) -> Option<M2> {
    Some(match *g {
        Gate::Rx { angle, .. } => {
            let (s, c) = (angle / 2.0).sin_cos();
            [[C64::new(c, 0.0), C64::new(0.0, -s)], [C64::new(0.0, -s), C64::new(c, 0.0)]]
        }
        Gate::Ry { angle, .. } => {
            let (s, c) = (angle / 2.0).sin_cos();
            [[C64::new(c, 0.0), C64::new(-s, 0.0)], [C64::new(s, 0.0), C64::new(c, 0.0)]]
        }
        Gate::Rz { angle, .. } => {
            [[C64::from_polar(1.0, -angle / 2.0), ZERO], [ZERO, C64::from_polar(1.0, angle / 2.0)]]
        }
        Gate::Sx { .. } => {
            let a = C64::new(0.5, 0.5);
            let b = C64::new(0.5, -0.5);
            [[a, b], [b, a]]
        }
        Gate::X { .. } => [[ZERO, ONE], [ONE, ZERO]],
        Gate::H { .. } => {
            let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
            [[h, h], [h, -h]]
        }
        Gate::Cx { .. } => return None,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Statevector {
    n_qubits: usize,
    amplitudes: Vec<C64>,
}

impl Statevector {
    pub fn zero_state(n_qubits: usize) -> Self {
        let mut amplitudes = vec![ZERO; 1 << n_qubits];
        amplitudes[0] = ONE;
        Self { n_qubits, amplitudes }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &Statevector) -> C64 {
        self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a.conj() * b).sum()
    }

    /// |⟨self|other⟩|².
    pub fn fidelity(&self, other: &Statevector) -> f64 {
        self.inner(other).norm_sqr()
    }

    /// Apply every gate of `c` in order.
    pub fn apply(&mut self, c: &Circuit) -> Result<()> {
        if c.n_qubits() != self.n_qubits {
            return Err(Error::DimensionMismatch(format!(
                "{}-qubit circuit on {}-qubit state",
                c.n_qubits(),
                self.n_qubits
            )));
        }
        for g in c.gates() {
            self.apply_gate(g);
        }
        Ok(())
    }

    fn apply_gate(&mut self, g: &Gate) {
        match *g {
            Gate::Cx { control, target } => {
                let (cm, tm) = (1usize << control, 1usize << target);
                for i in 0..self.amplitudes.len() {
                    if i & cm != 0 && i & tm == 0 {
                        self.amplitudes.swap(i, i | tm);
                    }
                }
            }
            Gate::Rx { qubit, .. }
            | Gate::Ry { qubit, .. }
            | Gate::Rz { qubit, .. }
            | Gate::Sx { qubit }
            | Gate::X { qubit }
            | Gate::H { qubit } => {
                let m = gate_matrix(g).expect("single-qubit gate");
                apply_1q(&mut self.amplitudes, qubit, &m);
            }
        }
    }
}

fn apply_1q(v: &mut [C64], qubit: usize, m: &M2) {
    let stride = 1usize << qubit;
    let mut base = 0;
    while base < v.len() {
        for i in base..base + stride {
            let j = i + stride;
            let (a, b) = (v[i], v[j]);
            v[i] = m[0][0] * a + m[0][1] * b;
            v[j] = m[1][0] * a + m[1][1] * b;
        }
        base += 2 * stride;
    }
}

pub fn run_statevector(c: &Circuit) -> Result<Statevector> {
    run_statevector_capped(c, DEFAULT_STATEVECTOR_CAP)
}

pub fn run_statevector_capped(c: &Circuit, cap: usize) -> Result<Statevector> {
    if c.n_qubits() > cap {
        return Err(Error::WidthOverCap { width: c.n_qubits(), cap });
    }
    let mut sv = Statevector::zero_state(c.n_qubits());
    sv.apply(c)?;
    Ok(sv)
}

/// Depolarising rates. `p` is the probability that the touched qubits are
/// replaced by the maximally mixed state after a gate.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct NoiseModel {
    pub p1q: f64,
    pub p2q: f64,
}

impl NoiseModel {
    /// The rates used for the noisy benchmark pathway.
    pub const REFERENCE: NoiseModel = NoiseModel { p1q: 1e-3, p2q: 1e-2 };

    pub fn new(p1q: f64, p2q: f64) -> Result<Self> {
        let n = Self { p1q, p2q };
        n.validate()?;
        Ok(n)
    }

    pub fn noiseless() -> Self {
        Self::default()
    }

    pub fn validate(&self) -> Result<()> {
        for (name, p) in [("p1q", self.p1q), ("p2q", self.p2q)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidArgument(format!("{name} = {p} outside [0, 1]")));
            }
        }
        Ok(())
    }

    pub fn is_noiseless(&self) -> bool {
        self.p1q == 0.0 && self.p2q == 0.0
    }
}

/// Row-major 2^n × 2^n density matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    n_qubits: usize,
    dim: usize,
    entries: Vec<C64>,
}

impl DensityMatrix {
    pub fn zero_state(n_qubits: usize) -> Self {
        let dim = 1usize << n_qubits;
        let mut entries = vec![ZERO; dim * dim];
        entries[0] = ONE;
        Self { n_qubits, dim, entries }
    }

    pub fn from_statevector(sv: &Statevector) -> Self {
        let dim = sv.amplitudes.len();
        let mut entries = Vec::with_capacity(dim * dim);
        for r in 0..dim {
            for c in 0..dim {
                entries.push(sv.amplitudes[r] * sv.amplitudes[c].conj());
            }
        }
        Self { n_qubits: sv.n_qubits, dim, entries }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.entries[row * self.dim + col]
    }

    pub fn entries(&self) -> &[C64] {
        &self.entries
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    /// Tr(ρσ) for Hermitian ρ, σ; the imaginary part vanishes and is dropped.
    pub fn hs_inner(&self, other: &DensityMatrix) -> f64 {
        self.entries.iter().zip(&other.entries).map(|(a, b)| (a * b.conj()).re).sum()
    }

    pub fn purity(&self) -> f64 {
        self.hs_inner(self)
    }

    /// Reduced 2×2 state of one qubit.
    pub fn reduced_qubit(&self, qubit: usize) -> M2 {
        let m = 1usize << qubit;
        let mut out = [[ZERO; 2]; 2];
        for r in 0..self.dim {
            for c in 0..self.dim {
                if r & !m == c & !m {
                    out[(r & m != 0) as usize][(c & m != 0) as usize] += self.get(r, c);
                }
            }
        }
        out
    }

    pub fn to_matrix(&self) -> nalgebra::DMatrix<C64> {
        nalgebra::DMatrix::from_row_slice(self.dim, self.dim, &self.entries)
    }

    fn apply_1q(&mut self, qubit: usize, m: &M2) {
        let d = self.dim;
        let stride = 1usize << qubit;
        // ρ ← Mρ: mix row pairs.
        for r0 in (0..d).filter(|r| r & stride == 0) {
            let r1 = r0 | stride;
            for c in 0..d {
                let (a, b) = (self.entries[r0 * d + c], self.entries[r1 * d + c]);
                self.entries[r0 * d + c] = m[0][0] * a + m[0][1] * b;
                self.entries[r1 * d + c] = m[1][0] * a + m[1][1] * b;
            }
        }
        // ρ ← ρM†: mix column pairs with conjugated coefficients.
        for r in 0..d {
            let row = &mut self.entries[r * d..(r + 1) * d];
            for c0 in (0..d).filter(|c| c & stride == 0) {
                let c1 = c0 | stride;
                let (a, b) = (row[c0], row[c1]);
                row[c0] = a * m[0][0].conj() + b * m[0][1].conj();
                row[c1] = a * m[1][0].conj() + b * m[1][1].conj();
            }
        }
    }

    fn apply_cx(&mut self, control: usize, target: usize) {
        let d = self.dim;
        let (cm, tm) = (1usize << control, 1usize << target);
        for r in (0..d).filter(|r| r & cm != 0 && r & tm == 0) {
            let r1 = r | tm;
            for c in 0..d {
                self.entries.swap(r * d + c, r1 * d + c);
            }
        }
        for r in 0..d {
            let row = &mut self.entries[r * d..(r + 1) * d];
            for c in (0..d).filter(|c| c & cm != 0 && c & tm == 0) {
                row.swap(c, c | tm);
            }
        }
    }

    /// ρ ← (1−p)ρ + p·Tr_q(ρ)⊗I/2.
    fn depolarize_1q(&mut self, qubit: usize, p: f64) {
        if p == 0.0 {
            return;
        }
        let d = self.dim;
        let m = 1usize << qubit;
        let keep = 1.0 - p;
        for r0 in (0..d).filter(|r| r & m == 0) {
            let r1 = r0 | m;
            for c0 in (0..d).filter(|c| c & m == 0) {
                let c1 = c0 | m;
                let avg = (self.entries[r0 * d + c0] + self.entries[r1 * d + c1]) * 0.5;
                self.entries[r0 * d + c0] = self.entries[r0 * d + c0] * keep + avg * p;
                self.entries[r1 * d + c1] = self.entries[r1 * d + c1] * keep + avg * p;
                self.entries[r0 * d + c1] *= keep;
                self.entries[r1 * d + c0] *= keep;
            }
        }
    }

    /// ρ ← (1−p)ρ + p·Tr_ab(ρ)⊗I/4.
    fn depolarize_2q(&mut self, a: usize, b: usize, p: f64) {
        if p == 0.0 {
            return;
        }
        let d = self.dim;
        let (ma, mb) = (1usize << a, 1usize << b);
        let offs = [0, ma, mb, ma | mb];
        let keep = 1.0 - p;
        for r0 in (0..d).filter(|r| r & (ma | mb) == 0) {
            for c0 in (0..d).filter(|c| c & (ma | mb) == 0) {
                let tr: C64 = offs.iter().map(|o| self.entries[(r0 | o) * d + (c0 | o)]).sum();
                for (s, os) in offs.iter().enumerate() {
                    for (t, ot) in offs.iter().enumerate() {
                        let idx = (r0 | os) * d + (c0 | ot);
                        let mixed = if s == t { tr * 0.25 } else { ZERO };
                        self.entries[idx] = self.entries[idx] * keep + mixed * p;
                    }
                }
            }
        }
    }

    /// Apply the gates of `c`, each followed by its depolarising channel.
    pub fn apply(&mut self, c: &Circuit, noise: &NoiseModel) -> Result<()> {
        if c.n_qubits() != self.n_qubits {
            return Err(Error::DimensionMismatch(format!(
                "{}-qubit circuit on {}-qubit density matrix",
                c.n_qubits(),
                self.n_qubits
            )));
        }
        for g in c.gates() {
            match *g {
                Gate::Cx { control, target } => {
                    self.apply_cx(control, target);
                    self.depolarize_2q(control, target, noise.p2q);
                }
                Gate::Rx { qubit, .. }
                | Gate::Ry { qubit, .. }
                | Gate::Rz { qubit, .. }
                | Gate::Sx { qubit }
                | Gate::X { qubit }
                | Gate::H { qubit } => {
                    let m = gate_matrix(g).expect("single-qubit gate");
                    self.apply_1q(qubit, &m);
                    self.depolarize_1q(qubit, noise.p1q);
                }
            }
        }
        Ok(())
    }
}

pub fn run_density(c: &Circuit, noise: &NoiseModel) -> Result<DensityMatrix> {
    run_density_capped(c, noise, DEFAULT_DENSITY_CAP)
}

pub fn run_density_capped(c: &Circuit, noise: &NoiseModel, cap: usize) -> Result<DensityMatrix> {
    noise.validate()?;
    if c.n_qubits() > cap {
        return Err(Error::WidthOverCap { width: c.n_qubits(), cap });
    }
    let mut rho = DensityMatrix::zero_state(c.n_qubits());
    rho.apply(c, noise)?;
    Ok(rho)
}
