//! Gate-level circuits and the four data-encoding feature maps.
//!
//! Circuits are plain gate lists over `n_qubits` wires. Feature maps are built
//! from the abstract gate set {RX, RY, RZ, H, CX}; [`decompose_native`] lowers
//! them to {RZ, SX, X, CX}, on which [`circuit_metrics`] reports depth and
//! gate counts.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lower bound of the per-feature scaling box.
pub const THETA_MIN: f64 = 0.01;
/// Upper bound of the per-feature scaling box.
pub const THETA_MAX: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GateKind {
    Rx,
    Ry,
    Rz,
    Sx,
    X,
    H,
    Cx,
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            GateKind::Rx => "rx",
            GateKind::Ry => "ry",
            GateKind::Rz => "rz",
            GateKind::Sx => "sx",
            GateKind::X => "x",
            GateKind::H => "h",
            GateKind::Cx => "cx",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Gate {
    Rx { qubit: usize, angle: f64 },
    Ry { qubit: usize, angle: f64 },
    Rz { qubit: usize, angle: f64 },
    Sx { qubit: usize },
    X { qubit: usize },
    H { qubit: usize },
    Cx { control: usize, target: usize },
}

impl Gate {
    pub fn kind(&self) -> GateKind {
        match self {
            Gate::Rx { .. } => GateKind::Rx,
            Gate::Ry { .. } => GateKind::Ry,
            Gate::Rz { .. } => GateKind::Rz,
            Gate::Sx { .. } => GateKind::Sx,
            Gate::X { .. } => GateKind::X,
            Gate::H { .. } => GateKind::H,
            Gate::Cx { .. } => GateKind::Cx,
        }
    }

    /// Qubits touched, in order (control first for CX).
    pub fn qubits(&self) -> GateQubits {
        match *self {
            Gate::Rx { qubit, .. }
            | Gate::Ry { qubit, .. }
            | Gate::Rz { qubit, .. }
            | Gate::Sx { qubit }
            | Gate::X { qubit }
            | Gate::H { qubit } => GateQubits::One(qubit),
            Gate::Cx { control, target } => GateQubits::Two(control, target),
        }
    }

    pub fn angle(&self) -> Option<f64> {
        match *self {
            Gate::Rx { angle, .. } | Gate::Ry { angle, .. } | Gate::Rz { angle, .. } => Some(angle),
            _ => None,
        }
    }

    pub fn is_rotation(&self) -> bool {
        self.angle().is_some()
    }

    pub fn is_two_qubit(&self) -> bool {
        matches!(self, Gate::Cx { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GateQubits {
    One(usize),
    Two(usize, usize),
}

impl GateQubits {
    pub fn as_slice(&self) -> ([usize; 2], usize) {
        match *self {
            GateQubits::One(q) => ([q, q], 1),
            GateQubits::Two(a, b) => ([a, b], 2),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    n_qubits: usize,
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(n_qubits: usize) -> Result<Self> {
        if n_qubits == 0 {
            return Err(Error::InvalidArgument("circuit needs at least one qubit".into()));
        }
        Ok(Self { n_qubits, gates: Vec::new() })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    /// Append a gate, checking qubit range, distinctness and angle finiteness.
    pub fn push(&mut self, gate: Gate) -> Result<()> {
        let (qs, n) = gate.qubits().as_slice();
        for &q in &qs[..n] {
            if q >= self.n_qubits {
                return Err(Error::InvalidArgument(format!(
                    "qubit {q} out of range for {}-qubit circuit",
                    self.n_qubits
                )));
            }
        }
        if n == 2 && qs[0] == qs[1] {
            return Err(Error::InvalidArgument("two-qubit gate on a repeated qubit".into()));
        }
        if let Some(a) = gate.angle() {
            if !a.is_finite() {
                return Err(Error::InvalidArgument(format!("non-finite angle on {}", gate.kind())));
            }
        }
        self.gates.push(gate);
        Ok(())
    }

    /// Gate-list concatenation; both circuits must have the same width.
    pub fn compose(&self, other: &Circuit) -> Result<Circuit> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::DimensionMismatch(format!(
                "composing {}-qubit with {}-qubit circuit",
                self.n_qubits, other.n_qubits
            )));
        }
        let mut gates = self.gates.clone();
        gates.extend_from_slice(&other.gates);
        Ok(Circuit { n_qubits: self.n_qubits, gates })
    }

    // Internal builder for gates already known to be valid.
    fn add(&mut self, gate: Gate) {
        debug_assert!({
            let (qs, n) = gate.qubits().as_slice();
            qs[..n].iter().all(|&q| q < self.n_qubits)
        });
        self.gates.push(gate);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureMapKind {
    Rot2dof,
    Belis,
    Sakhnenko10,
    Zzfm,
}

impl FeatureMapKind {
    pub const ALL: [FeatureMapKind; 4] = [
        FeatureMapKind::Rot2dof,
        FeatureMapKind::Belis,
        FeatureMapKind::Sakhnenko10,
        FeatureMapKind::Zzfm,
    ];

    /// Two features per qubit for the rotation maps, one for zzfm.
    pub fn n_qubits(self, k: usize) -> usize {
        match self {
            FeatureMapKind::Zzfm => k,
            _ => k.div_ceil(2),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FeatureMapKind::Rot2dof => "rot2dof",
            FeatureMapKind::Belis => "belis",
            FeatureMapKind::Sakhnenko10 => "sakhnenko10",
            FeatureMapKind::Zzfm => "zzfm",
        }
    }
}

impl fmt::Display for FeatureMapKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for FeatureMapKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rot2dof" => Ok(FeatureMapKind::Rot2dof),
            "belis" => Ok(FeatureMapKind::Belis),
            "sakhnenko10" | "sakhnenko" => Ok(FeatureMapKind::Sakhnenko10),
            "zzfm" | "zzfeaturemap" => Ok(FeatureMapKind::Zzfm),
            other => Err(Error::InvalidArgument(format!("unknown feature map '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMapSpec {
    pub kind: FeatureMapKind,
    pub k: usize,
    pub reps: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<Vec<f64>>,
}

impl FeatureMapSpec {
    pub fn new(kind: FeatureMapKind, k: usize, reps: usize) -> Self {
        Self { kind, k, reps, theta: None }
    }

    pub fn with_theta(mut self, theta: Vec<f64>) -> Self {
        self.theta = Some(theta);
        self
    }

    pub fn n_qubits(&self) -> usize {
        self.kind.n_qubits(self.k)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidArgument("feature map needs k >= 1".into()));
        }
        if self.reps == 0 {
            return Err(Error::InvalidArgument("feature map needs reps >= 1".into()));
        }
        if let Some(theta) = &self.theta {
            if theta.len() != self.k {
                return Err(Error::DimensionMismatch(format!(
                    "theta has length {} but k = {}",
                    theta.len(),
                    self.k
                )));
            }
            if let Some(t) = theta.iter().find(|t| !(THETA_MIN..=THETA_MAX).contains(*t)) {
                return Err(Error::InvalidArgument(format!(
                    "theta component {t} outside [{THETA_MIN}, {THETA_MAX}]"
                )));
            }
        }
        Ok(())
    }
}

/// Build U(x) for one sample in the abstract gate set.
pub fn build_feature_map(spec: &FeatureMapSpec, x: &[f64]) -> Result<Circuit> {
    spec.validate()?;
    if x.len() != spec.k {
        return Err(Error::DimensionMismatch(format!(
            "feature vector has length {} but k = {}",
            x.len(),
            spec.k
        )));
    }
    if let Some(i) = x.iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(format!("non-finite feature at index {i}")));
    }
    let mut feats: Vec<f64> = match &spec.theta {
        Some(theta) => x.iter().zip(theta).map(|(v, t)| v * t).collect(),
        None => x.to_vec(),
    };
    let n = spec.n_qubits();
    let mut c = Circuit::new(n)?;
    match spec.kind {
        FeatureMapKind::Rot2dof => {
            feats.resize(2 * n, 0.0);
            for _ in 0..spec.reps {
                for q in 0..n {
                    c.add(Gate::Rx { qubit: q, angle: feats[2 * q] });
                    c.add(Gate::Rz { qubit: q, angle: feats[2 * q + 1] });
                }
            }
        }
        FeatureMapKind::Belis => {
            feats.resize(2 * n, 0.0);
            for _ in 0..spec.reps {
                for q in 0..n {
                    c.add(Gate::Rx { qubit: q, angle: feats[2 * q] });
                    c.add(Gate::Rz { qubit: q, angle: feats[2 * q + 1] });
                }
                for q in 0..n.saturating_sub(1) {
                    c.add(Gate::Cx { control: q, target: q + 1 });
                }
                for q in 0..n {
                    c.add(Gate::Rz { qubit: q, angle: feats[2 * q] });
                    c.add(Gate::Rx { qubit: q, angle: feats[2 * q + 1] });
                }
            }
        }
        FeatureMapKind::Sakhnenko10 => {
            feats.resize(2 * n, 0.0);
            for _ in 0..spec.reps {
                for q in 0..n {
                    c.add(Gate::Rx { qubit: q, angle: feats[2 * q] });
                    c.add(Gate::Ry { qubit: q, angle: FRAC_PI_2 });
                    c.add(Gate::Rx { qubit: q, angle: FRAC_PI_2 });
                    c.add(Gate::Rx { qubit: q, angle: feats[2 * q + 1] });
                }
                if n >= 2 {
                    for q in 0..n {
                        c.add(Gate::Cx { control: q, target: (q + 1) % n });
                    }
                }
            }
        }
        FeatureMapKind::Zzfm => {
            for _ in 0..spec.reps {
                for q in 0..n {
                    c.add(Gate::H { qubit: q });
                }
                for i in 0..n {
                    for j in (i + 1)..n {
                        c.add(Gate::Cx { control: i, target: j });
                        c.add(Gate::Rz { qubit: j, angle: 2.0 * feats[i] * feats[j] });
                        c.add(Gate::Cx { control: i, target: j });
                    }
                }
            }
        }
    }
    Ok(c)
}

/// Lower a circuit to {RZ, SX, X, CX}.
///
/// RX(θ) = RZ(π/2)·SX·RZ(θ+π)·SX·RZ(π/2) and RY(θ) = RZ(0)·SX·RZ(θ+π)·SX·RZ(π)
/// (gates listed in application order), H = RZ(π/2)·SX·RZ(π/2); each equal to
/// the original up to global phase. No RZ merging is performed.
pub fn decompose_native(c: &Circuit) -> Result<Circuit> {
    let mut out = Circuit { n_qubits: c.n_qubits, gates: Vec::with_capacity(c.gates.len() * 5) };
    for &g in &c.gates {
        match g {
            Gate::Rx { qubit, angle } => {
                out.gates.extend_from_slice(&[
                    Gate::Rz { qubit, angle: FRAC_PI_2 },
                    Gate::Sx { qubit },
                    Gate::Rz { qubit, angle: angle + PI },
                    Gate::Sx { qubit },
                    Gate::Rz { qubit, angle: FRAC_PI_2 },
                ]);
            }
            Gate::Ry { qubit, angle } => {
                out.gates.extend_from_slice(&[
                    Gate::Rz { qubit, angle: 0.0 },
                    Gate::Sx { qubit },
                    Gate::Rz { qubit, angle: angle + PI },
                    Gate::Sx { qubit },
                    Gate::Rz { qubit, angle: PI },
                ]);
            }
            Gate::H { qubit } => {
                out.gates.extend_from_slice(&[
                    Gate::Rz { qubit, angle: FRAC_PI_2 },
                    Gate::Sx { qubit },
                    Gate::Rz { qubit, angle: FRAC_PI_2 },
                ]);
            }
            Gate::Rz { .. } | Gate::Sx { .. } | Gate::X { .. } | Gate::Cx { .. } => out.gates.push(g),
        }
    }
    Ok(out)
}

/// Inverse circuit: reversed order, negated angles. SX† is emitted as
/// RZ(π)·SX·RZ(π), equal to SX† up to global phase; every other gate is
/// self-inverse or a rotation.
pub fn adjoint(c: &Circuit) -> Circuit {
    let mut gates = Vec::with_capacity(c.gates.len());
    for &g in c.gates.iter().rev() {
        match g {
            Gate::Rx { qubit, angle } => gates.push(Gate::Rx { qubit, angle: -angle }),
            Gate::Ry { qubit, angle } => gates.push(Gate::Ry { qubit, angle: -angle }),
            Gate::Rz { qubit, angle } => gates.push(Gate::Rz { qubit, angle: -angle }),
            Gate::Sx { qubit } => gates.extend_from_slice(&[
                Gate::Rz { qubit, angle: PI },
                Gate::Sx { qubit },
                Gate::Rz { qubit, angle: PI },
            ]),
            Gate::X { .. } | Gate::H { .. } | Gate::Cx { .. } => gates.push(g),
        }
    }
    Circuit { n_qubits: c.n_qubits, gates }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CircuitMetrics {
    pub n_qubits: usize,
    pub depth: usize,
    pub two_qubit_count: usize,
    pub gate_slot_count: usize,
    pub total_gates: usize,
}

/// ASAP layering over program order; every gate counts one layer.
/// `gate_slot_count` is the number of single-qubit rotation gates.
pub fn circuit_metrics(c: &Circuit) -> CircuitMetrics {
    let mut frontier = vec![0usize; c.n_qubits];
    let mut depth = 0;
    let mut two_qubit_count = 0;
    let mut gate_slot_count = 0;
    for g in &c.gates {
        let (qs, n) = g.qubits().as_slice();
        let layer = qs[..n].iter().map(|&q| frontier[q]).max().unwrap_or(0) + 1;
        for &q in &qs[..n] {
            frontier[q] = layer;
        }
        depth = depth.max(layer);
        if g.is_two_qubit() {
            two_qubit_count += 1;
        }
        if g.is_rotation() {
            gate_slot_count += 1;
        }
    }
    CircuitMetrics {
        n_qubits: c.n_qubits,
        depth,
        two_qubit_count,
        gate_slot_count,
        total_gates: c.gates.len(),
    }
}

/// Fidelity (compute-uncompute) circuit U(x) followed by U†(z).
pub fn fidelity_circuit(spec: &FeatureMapSpec, x: &[f64], z: &[f64]) -> Result<Circuit> {
    let ux = build_feature_map(spec, x)?;
    let uz = build_feature_map(spec, z)?;
    ux.compose(&adjoint(&uz))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64 as C64;

    type M2 = [[C64; 2]; 2];

    fn mul(a: &M2, b: &M2) -> M2 {
        let mut r = [[C64::new(0.0, 0.0); 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    r[i][j] += a[i][k] * b[k][j];
                }
            }
        }
        r
    }

    // Independent textbook matrices, not shared with the simulator.
    fn matrix(g: &Gate) -> M2 {
        let z = C64::new(0.0, 0.0);
        match *g {
            Gate::Rx { angle, .. } => {
                let (c, s) = ((angle / 2.0).cos(), (angle / 2.0).sin());
                [[C64::new(c, 0.0), C64::new(0.0, -s)], [C64::new(0.0, -s), C64::new(c, 0.0)]]
            }
            Gate::Ry { angle, .. } => {
                let (c, s) = ((angle / 2.0).cos(), (angle / 2.0).sin());
                [[C64::new(c, 0.0), C64::new(-s, 0.0)], [C64::new(s, 0.0), C64::new(c, 0.0)]]
            }
            Gate::Rz { angle, .. } => [[C64::from_polar(1.0, -angle / 2.0), z], [z, C64::from_polar(1.0, angle / 2.0)]],
            Gate::Sx { .. } => {
                let a = C64::new(0.5, 0.5);
                let b = C64::new(0.5, -0.5);
                [[a, b], [b, a]]
            }
            Gate::X { .. } => [[z, C64::new(1.0, 0.0)], [C64::new(1.0, 0.0), z]],
            Gate::H { .. } => {
                let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
                [[h, h], [h, -h]]
            }
            Gate::Cx { .. } => unreachable!(),
        }
    }

    fn unitary(gates: &[Gate]) -> M2 {
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        gates.iter().fold([[one, zero], [zero, one]], |acc, g| mul(&matrix(g), &acc))
    }

    fn equal_up_to_phase(a: &M2, b: &M2) -> f64 {
        let (mut bi, mut bj) = (0, 0);
        for i in 0..2 {
            for j in 0..2 {
                if b[i][j].norm() > b[bi][bj].norm() {
                    bi = i;
                    bj = j;
                }
            }
        }
        let phase = a[bi][bj] / b[bi][bj];
        let mut worst: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                worst = worst.max((a[i][j] - phase * b[i][j]).norm());
            }
        }
        worst
    }

    fn single(g: Gate) -> Circuit {
        let mut c = Circuit::new(1).unwrap();
        c.push(g).unwrap();
        c
    }

    #[test]
    fn rx_ry_h_decompose_to_equal_unitaries() {
        for &theta in &[0.0, 0.37, 1.9, -2.6, 4.4] {
            for g in [Gate::Rx { qubit: 0, angle: theta }, Gate::Ry { qubit: 0, angle: theta }] {
                let d = decompose_native(&single(g)).unwrap();
                assert_eq!(d.len(), 5);
                assert!(d.gates().iter().all(|g| matches!(g.kind(), GateKind::Rz | GateKind::Sx)));
                let err = equal_up_to_phase(&unitary(d.gates()), &matrix(&g));
                assert!(err < 1e-12, "{g:?}: {err}");
            }
        }
        let h = Gate::H { qubit: 0 };
        let d = decompose_native(&single(h)).unwrap();
        assert_eq!(d.len(), 3);
        assert!(equal_up_to_phase(&unitary(d.gates()), &matrix(&h)) < 1e-12);
    }

    #[test]
    fn rz_is_already_native() {
        let c = single(Gate::Rz { qubit: 0, angle: 0.8 });
        assert_eq!(decompose_native(&c).unwrap(), c);
    }

    #[test]
    fn sx_adjoint_inverts_up_to_phase() {
        let c = single(Gate::Sx { qubit: 0 });
        let both = c.compose(&adjoint(&c)).unwrap();
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        assert!(equal_up_to_phase(&unitary(both.gates()), &[[one, zero], [zero, one]]) < 1e-12);
    }

    #[test]
    fn adjoint_of_rotation_negates() {
        let c = single(Gate::Rx { qubit: 0, angle: 0.4 });
        assert_eq!(adjoint(&c).gates(), &[Gate::Rx { qubit: 0, angle: -0.4 }]);
        let empty = Circuit::new(3).unwrap();
        assert!(adjoint(&empty).is_empty());
    }

    #[test]
    fn push_rejects_bad_gates() {
        let mut c = Circuit::new(2).unwrap();
        assert!(c.push(Gate::X { qubit: 2 }).is_err());
        assert!(c.push(Gate::Cx { control: 1, target: 1 }).is_err());
        assert!(c.push(Gate::Rz { qubit: 0, angle: f64::NAN }).is_err());
        assert!(c.push(Gate::Cx { control: 1, target: 0 }).is_ok());
    }

    #[test]
    fn spec_validation() {
        let x = [0.1; 4];
        assert!(build_feature_map(&FeatureMapSpec::new(FeatureMapKind::Belis, 0, 2), &[]).is_err());
        assert!(build_feature_map(&FeatureMapSpec::new(FeatureMapKind::Belis, 4, 0), &x).is_err());
        let bad = FeatureMapSpec::new(FeatureMapKind::Belis, 4, 2).with_theta(vec![1.0; 3]);
        assert!(build_feature_map(&bad, &x).is_err());
        let out_of_box = FeatureMapSpec::new(FeatureMapKind::Belis, 4, 2).with_theta(vec![1.0, 1.0, 6.0, 1.0]);
        assert!(build_feature_map(&out_of_box, &x).is_err());
        assert!(build_feature_map(&FeatureMapSpec::new(FeatureMapKind::Belis, 4, 2), &x[..3]).is_err());
        assert!("nope".parse::<FeatureMapKind>().is_err());
    }

    #[test]
    fn theta_scales_features() {
        let spec = FeatureMapSpec::new(FeatureMapKind::Rot2dof, 2, 1).with_theta(vec![2.0, 0.5]);
        let c = build_feature_map(&spec, &[0.3, 0.8]).unwrap();
        assert_eq!(c.gates()[0].angle(), Some(0.6));
        assert_eq!(c.gates()[1].angle(), Some(0.4));
    }

    #[test]
    fn odd_k_pads_last_qubit() {
        let spec = FeatureMapSpec::new(FeatureMapKind::Rot2dof, 3, 1);
        let c = build_feature_map(&spec, &[0.1, 0.2, 0.3]).unwrap();
        assert_eq!(c.n_qubits(), 2);
        assert_eq!(c.gates()[3], Gate::Rz { qubit: 1, angle: 0.0 });
    }

    #[test]
    fn rot2dof_k8_counts() {
        let spec = FeatureMapSpec::new(FeatureMapKind::Rot2dof, 8, 2);
        let x: Vec<f64> = (0..8).map(|i| 0.1 * i as f64).collect();
        let c = build_feature_map(&spec, &x).unwrap();
        assert_eq!(c.n_qubits(), 4);
        let m = circuit_metrics(&c);
        assert_eq!(m.two_qubit_count, 0);
        assert_eq!(m.gate_slot_count, 16);
        let fid = fidelity_circuit(&spec, &x, &x).unwrap();
        assert_eq!(circuit_metrics(&fid).gate_slot_count, 32);
        let d = circuit_metrics(&decompose_native(&c).unwrap());
        assert_eq!(d.depth, 12);
    }

    #[test]
    fn small_map_counts() {
        let x = [0.2; 4];
        let belis = build_feature_map(&FeatureMapSpec::new(FeatureMapKind::Belis, 4, 2), &x).unwrap();
        assert_eq!(circuit_metrics(&belis).two_qubit_count, 2);
        let zz = build_feature_map(&FeatureMapSpec::new(FeatureMapKind::Zzfm, 4, 2), &x).unwrap();
        assert_eq!(circuit_metrics(&decompose_native(&zz).unwrap()).two_qubit_count, 24);
    }

    #[test]
    fn empty_circuit_has_zero_depth() {
        let m = circuit_metrics(&Circuit::new(2).unwrap());
        assert_eq!((m.depth, m.two_qubit_count, m.total_gates), (0, 0, 0));
    }

    #[test]
    fn builds_are_deterministic() {
        for kind in FeatureMapKind::ALL {
            let spec = FeatureMapSpec::new(kind, 5, 2);
            let x = [0.3, -1.2, 0.7, 2.2, -0.4];
            assert_eq!(build_feature_map(&spec, &x).unwrap(), build_feature_map(&spec, &x).unwrap());
        }
    }
}
