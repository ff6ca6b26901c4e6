//! Layered local circuits: named Cliffords, sampled two-qubit Cliffords,
//! dense unitaries, inversion, and light-cone gate removal.
//!
//! Clifford gates are carried as their conjugation action — the images of the
//! local `X_q`/`Z_q` generators — which is what both the tableau engine and
//! the inverter need. A dense unitary for any Clifford gate is reconstructed
//! from its action through the Choi state when the dense engine asks for one.

use crate::lattice::{Lattice, Region};
use faer::complex_native::c64;
use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CircuitError {
    #[error("gate supports overlap within a layer at qubit {0}")]
    LayerOverlap(u32),
    #[error("gate support has repeated qubit {0}")]
    RepeatedSupport(u32),
    #[error("dense gate is not unitary (deviation {0:.3e})")]
    NotUnitary(f64),
    #[error("dense gate dimension {dim} does not match support size {support}")]
    DimensionMismatch { dim: usize, support: usize },
    #[error("gate kind {0} expects {1} qubits")]
    WrongArity(String, usize),
}

/// A local Pauli on the (at most two) support qubits of a gate, in the same
/// `i^phase · X^x Z^z` convention as [`crate::pauli::PauliString`]. Bit `q` of
/// `x`/`z` refers to support qubit `q`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocalPauli {
    pub x: u8,
    pub z: u8,
    pub phase: u8,
}

impl LocalPauli {
    pub const fn identity() -> Self {
        LocalPauli { x: 0, z: 0, phase: 0 }
    }

    pub fn mul(self, other: LocalPauli) -> LocalPauli {
        let swap = (self.z & other.x).count_ones() & 1;
        LocalPauli {
            x: self.x ^ other.x,
            z: self.z ^ other.z,
            phase: (self.phase + other.phase + 2 * swap as u8) % 4,
        }
    }

    fn symplectic(self, other: LocalPauli) -> u8 {
        ((self.x & other.z).count_ones() + (self.z & other.x).count_ones()) as u8 & 1
    }
}

/// Conjugation action of a Clifford gate: `images[2q]` is the image of `X_q`,
/// `images[2q+1]` the image of `Z_q`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CliffordAction {
    pub arity: usize,
    pub images: Vec<LocalPauli>,
}

impl CliffordAction {
    /// Image of an arbitrary local Pauli under conjugation.
    pub fn apply(&self, p: LocalPauli) -> LocalPauli {
        let mut acc = LocalPauli { x: 0, z: 0, phase: p.phase };
        for q in 0..self.arity {
            if (p.x >> q) & 1 == 1 {
                acc = acc.mul(self.images[2 * q]);
            }
            if (p.z >> q) & 1 == 1 {
                acc = acc.mul(self.images[2 * q + 1]);
            }
        }
        acc
    }

    /// The inverse action, by inverting the symplectic map and fixing phases.
    pub fn inverse(&self) -> CliffordAction {
        let k = 2 * self.arity;
        // rows of m: image bits in (x0,z0,x1,z1) order
        let bits = |p: &LocalPauli| -> u8 {
            let mut b = 0u8;
            for q in 0..self.arity {
                b |= (((p.x >> q) & 1) << (2 * q)) | (((p.z >> q) & 1) << (2 * q + 1));
            }
            b
        };
        let m: Vec<u8> = self.images.iter().map(bits).collect();
        let minv = invert_gf2(&m, k);
        let images = (0..k)
            .map(|j| {
                let row = minv[j];
                let mut pre = LocalPauli::identity();
                for q in 0..self.arity {
                    if (row >> (2 * q)) & 1 == 1 {
                        pre.x |= 1 << q;
                    }
                    if (row >> (2 * q + 1)) & 1 == 1 {
                        pre.z |= 1 << q;
                    }
                }
                let img = self.apply(pre);
                pre.phase = (4 - img.phase) % 4;
                pre
            })
            .collect();
        CliffordAction { arity: self.arity, images }
    }

    fn is_symplectic(&self) -> bool {
        let k = 2 * self.arity;
        for i in 0..k {
            for j in i + 1..k {
                let want = if i / 2 == j / 2 { 1 } else { 0 };
                if self.images[i].symplectic(self.images[j]) != want {
                    return false;
                }
            }
        }
        true
    }
}

fn invert_gf2(rows: &[u8], k: usize) -> Vec<u8> {
    let mut a: Vec<u8> = rows.to_vec();
    let mut inv: Vec<u8> = (0..k).map(|i| 1u8 << i).collect();
    for col in 0..k {
        let pivot = (col..k).find(|&r| (a[r] >> col) & 1 == 1).expect("singular symplectic map");
        a.swap(col, pivot);
        inv.swap(col, pivot);
        for r in 0..k {
            if r != col && (a[r] >> col) & 1 == 1 {
                a[r] ^= a[col];
                inv[r] ^= inv[col];
            }
        }
    }
    inv
}

/// Dense gate payload; row-major entries as `(re, im)` pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DenseGate {
    pub dim: usize,
    pub elems: Vec<(f64, f64)>,
}

impl DenseGate {
    pub fn from_mat(m: &Mat<c64>) -> Self {
        let dim = m.nrows();
        let mut elems = Vec::with_capacity(dim * dim);
        for r in 0..dim {
            for c in 0..dim {
                let v = m.read(r, c);
                elems.push((v.re, v.im));
            }
        }
        DenseGate { dim, elems }
    }

    pub fn to_mat(&self) -> Mat<c64> {
        Mat::from_fn(self.dim, self.dim, |r, c| {
            let (re, im) = self.elems[r * self.dim + c];
            c64::new(re, im)
        })
    }

    pub fn unitarity_deviation(&self) -> f64 {
        let m = self.to_mat();
        let p = m.adjoint() * &m;
        let mut dev: f64 = 0.0;
        for r in 0..self.dim {
            for c in 0..self.dim {
                let want = if r == c { c64::new(1.0, 0.0) } else { c64::new(0.0, 0.0) };
                let d = p.read(r, c) - want;
                dev = dev.max((d.re * d.re + d.im * d.im).sqrt());
            }
        }
        dev
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum GateKind {
    H,
    S,
    Sdg,
    X,
    Y,
    Z,
    #[serde(rename = "CNOT")]
    Cnot,
    #[serde(rename = "CZ")]
    Cz,
    #[serde(rename = "SWAP")]
    Swap,
    #[serde(rename = "clifford")]
    Clifford { images: CliffordAction },
    #[serde(rename = "dense")]
    Dense { matrix: DenseGate },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gate {
    pub support: Vec<u32>,
    #[serde(flatten)]
    pub kind: GateKind,
}

const LP: fn(u8, u8, u8) -> LocalPauli = |x, z, phase| LocalPauli { x, z, phase };

impl Gate {
    pub fn new(support: Vec<u32>, kind: GateKind) -> Result<Self, CircuitError> {
        let mut seen = BTreeSet::new();
        for &q in &support {
            if !seen.insert(q) {
                return Err(CircuitError::RepeatedSupport(q));
            }
        }
        let arity = support.len();
        let expect = match &kind {
            GateKind::H | GateKind::S | GateKind::Sdg | GateKind::X | GateKind::Y | GateKind::Z => 1,
            GateKind::Cnot | GateKind::Cz | GateKind::Swap => 2,
            GateKind::Clifford { images } => images.arity,
            GateKind::Dense { matrix } => {
                if matrix.dim != 1 << arity {
                    return Err(CircuitError::DimensionMismatch {
                        dim: matrix.dim,
                        support: arity,
                    });
                }
                let dev = matrix.unitarity_deviation();
                if dev > 1e-12 {
                    return Err(CircuitError::NotUnitary(dev));
                }
                arity
            }
        };
        if arity != expect {
            return Err(CircuitError::WrongArity(format!("{kind:?}"), expect));
        }
        Ok(Gate { support, kind })
    }

    pub fn is_clifford(&self) -> bool {
        !matches!(self.kind, GateKind::Dense { .. })
    }

    /// Conjugation action for Clifford gates, `None` for dense ones.
    pub fn clifford_action(&self) -> Option<CliffordAction> {
        let act = |images: Vec<LocalPauli>| CliffordAction {
            arity: images.len() / 2,
            images,
        };
        Some(match &self.kind {
            // images of (X, Z) per support qubit
            GateKind::H => act(vec![LP(0, 1, 0), LP(1, 0, 0)]),
            GateKind::S => act(vec![LP(1, 1, 1), LP(0, 1, 0)]),
            GateKind::Sdg => act(vec![LP(1, 1, 3), LP(0, 1, 0)]),
            GateKind::X => act(vec![LP(1, 0, 0), LP(0, 1, 2)]),
            GateKind::Y => act(vec![LP(1, 0, 2), LP(0, 1, 2)]),
            GateKind::Z => act(vec![LP(1, 0, 2), LP(0, 1, 0)]),
            GateKind::Cnot => act(vec![
                LP(0b11, 0b00, 0), // X⊗I -> X⊗X
                LP(0b00, 0b01, 0), // Z⊗I -> Z⊗I
                LP(0b10, 0b00, 0), // I⊗X -> I⊗X
                LP(0b00, 0b11, 0), // I⊗Z -> Z⊗Z
            ]),
            GateKind::Cz => act(vec![
                LP(0b01, 0b10, 0), // X⊗I -> X⊗Z
                LP(0b00, 0b01, 0),
                LP(0b10, 0b01, 0), // I⊗X -> Z⊗X
                LP(0b00, 0b10, 0),
            ]),
            GateKind::Swap => act(vec![
                LP(0b10, 0b00, 0),
                LP(0b00, 0b10, 0),
                LP(0b01, 0b00, 0),
                LP(0b00, 0b01, 0),
            ]),
            GateKind::Clifford { images } => images.clone(),
            GateKind::Dense { .. } => return None,
        })
    }

    /// Dense matrix of the gate (Clifford gates via their Choi state).
    pub fn unitary_matrix(&self) -> Mat<c64> {
        match &self.kind {
            GateKind::Dense { matrix } => matrix.to_mat(),
            _ => {
                let action = self.clifford_action().expect("clifford");
                clifford_unitary(&action)
            }
        }
    }

    pub fn inverse(&self) -> Gate {
        let kind = match &self.kind {
            GateKind::S => GateKind::Sdg,
            GateKind::Sdg => GateKind::S,
            GateKind::Clifford { images } => GateKind::Clifford {
                images: images.inverse(),
            },
            GateKind::Dense { matrix } => {
                let m = matrix.to_mat();
                GateKind::Dense {
                    matrix: DenseGate::from_mat(&m.adjoint().to_owned()),
                }
            }
            other => other.clone(),
        };
        Gate {
            support: self.support.clone(),
            kind,
        }
    }
}

/// Reconstruct the unitary of a Clifford action from its Choi state: the Choi
/// vector of `U` is the (unique) stabilizer state fixed by
/// `img(P) ⊗ P^T` over the local generators.
pub fn clifford_unitary(action: &CliffordAction) -> Mat<c64> {
    use crate::pauli::PauliString;
    let k = action.arity;
    let d = 1usize << k;
    let mut gens: Vec<PauliString> = Vec::with_capacity(2 * k);
    for q in 0..k {
        for gi in 0..2 {
            let img = action.images[2 * q + gi];
            let mut p = PauliString::identity(2 * k);
            for t in 0..k {
                p.set_x(t, (img.x >> t) & 1 == 1);
                p.set_z(t, (img.z >> t) & 1 == 1);
            }
            // reference side carries P^T; X and Z are their own transposes
            if gi == 0 {
                p.set_x(k + q, true);
            } else {
                p.set_z(k + q, true);
            }
            p.set_phase(img.phase);
            debug_assert!(p.is_hermitian());
            gens.push(p);
        }
    }
    // Choi density matrix: uniform sum over the generated group
    let dim = 1usize << (2 * k);
    let mut rho = Mat::<c64>::zeros(dim, dim);
    for mask in 0..(1usize << (2 * k)) {
        let mut g = PauliString::identity(2 * k);
        for (bit, gen) in gens.iter().enumerate() {
            if (mask >> bit) & 1 == 1 {
                g = g.mul(gen);
            }
        }
        let gm = g.to_matrix();
        for r in 0..dim {
            for c in 0..dim {
                rho.write(r, c, rho.read(r, c) + gm.read(r, c));
            }
        }
    }
    let scale = c64::new(1.0 / dim as f64, 0.0);
    for r in 0..dim {
        for c in 0..dim {
            rho.write(r, c, rho.read(r, c) * scale);
        }
    }
    // principal eigenvector = Choi vector; reshape to the unitary
    let evd = rho.selfadjoint_eigendecomposition(faer::Side::Lower);
    let s = evd.s();
    let mut best = 0;
    for i in 0..dim {
        if s.column_vector().read(i).re > s.column_vector().read(best).re {
            best = i;
        }
    }
    let u_col = evd.u();
    let mut u = Mat::<c64>::zeros(d, d);
    let norm = (d as f64).sqrt();
    for i in 0..d {
        for j in 0..d {
            u.write(i, j, u_col.read(i * d + j, best) * c64::new(norm, 0.0));
        }
    }
    // fix global phase: make the first nonzero column entry real positive
    let mut phase = c64::new(1.0, 0.0);
    'outer: for j in 0..d {
        for i in 0..d {
            let v = u.read(i, j);
            let a = (v.re * v.re + v.im * v.im).sqrt();
            if a > 1e-9 {
                phase = c64::new(v.re / a, -v.im / a);
                break 'outer;
            }
        }
    }
    for i in 0..d {
        for j in 0..d {
            u.write(i, j, u.read(i, j) * phase);
        }
    }
    u
}

/// One layer of gates with pairwise disjoint supports.
#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Layer {
    pub gates: Vec<Gate>,
}

#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct Circuit {
    pub layers: Vec<Layer>,
}

impl Circuit {
    pub fn identity() -> Self {
        Circuit { layers: Vec::new() }
    }

    pub fn new(layers: Vec<Layer>) -> Result<Self, CircuitError> {
        for layer in &layers {
            let mut seen = BTreeSet::new();
            for g in &layer.gates {
                for &q in &g.support {
                    if !seen.insert(q) {
                        return Err(CircuitError::LayerOverlap(q));
                    }
                }
            }
        }
        Ok(Circuit { layers })
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn support(&self) -> BTreeSet<u32> {
        self.layers
            .iter()
            .flat_map(|l| l.gates.iter())
            .flat_map(|g| g.support.iter().copied())
            .collect()
    }

    pub fn gate_count(&self) -> usize {
        self.layers.iter().map(|l| l.gates.len()).sum()
    }

    pub fn is_clifford(&self) -> bool {
        self.layers.iter().all(|l| l.gates.iter().all(Gate::is_clifford))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("circuit serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        let c: Circuit = serde_json::from_str(text)?;
        Ok(c)
    }
}

/// Reverse the layer order and invert every gate.
pub fn invert(circuit: &Circuit) -> Circuit {
    Circuit {
        layers: circuit
            .layers
            .iter()
            .rev()
            .map(|l| Layer {
                gates: l.gates.iter().map(Gate::inverse).collect(),
            })
            .collect(),
    }
}

/// Past light cone of `region` under `circuit`: the qubits that can influence
/// the region through the layered gates, growing one gate at a time from the
/// last layer backward.
pub fn light_cone(circuit: &Circuit, region: &BTreeSet<u32>) -> BTreeSet<u32> {
    let mut cone = region.clone();
    for layer in circuit.layers.iter().rev() {
        let mut grown = cone.clone();
        for g in &layer.gates {
            if g.support.iter().any(|q| cone.contains(q)) {
                grown.extend(g.support.iter().copied());
            }
        }
        cone = grown;
    }
    cone
}

/// Remove from `circuit` every gate inside the light cone of `protected`,
/// leaving a circuit of no greater depth that acts trivially on `protected`.
pub fn restrict_outside_light_cone(circuit: &Circuit, protected: &Region) -> Circuit {
    let mut cone = protected.qubits.clone();
    let mut kept: Vec<Layer> = Vec::with_capacity(circuit.layers.len());
    for layer in circuit.layers.iter().rev() {
        let mut keep = Vec::new();
        let mut grown = cone.clone();
        for g in &layer.gates {
            if g.support.iter().any(|q| cone.contains(q)) {
                grown.extend(g.support.iter().copied());
            } else {
                keep.push(g.clone());
            }
        }
        cone = grown;
        kept.push(Layer { gates: keep });
    }
    kept.reverse();
    let layers: Vec<Layer> = kept.into_iter().filter(|l| !l.gates.is_empty()).collect();
    Circuit { layers }
}

fn gate_rng(seed: u64, layer: usize, gate_index: usize) -> ChaCha8Rng {
    // splitmix-style mix of (seed, layer, gate) so sweeps are reproducible
    let mut h = seed
        .wrapping_mul(0x9e3779b97f4a7c15)
        .wrapping_add((layer as u64).wrapping_mul(0xbf58476d1ce4e5b9))
        .wrapping_add((gate_index as u64).wrapping_mul(0x94d049bb133111eb));
    h ^= h >> 30;
    h = h.wrapping_mul(0xbf58476d1ce4e5b9);
    h ^= h >> 27;
    ChaCha8Rng::seed_from_u64(h)
}

/// Brickwork pairing for layer `layer`: every horizontal edge pairs with one
/// of the four vertical edges sharing a vertex with it, rotating per layer.
fn brickwork_pairs(lattice: &Lattice, layer: usize) -> Vec<(u32, u32)> {
    let mut pairs = Vec::new();
    for r in 0..lattice.rows() {
        for c in 0..lattice.cols() {
            let h = lattice.h_index(r, c);
            let v = match layer % 4 {
                0 => lattice.v_index(r, c),
                1 => lattice.v_index(r, c + 1),
                2 => lattice.v_index(r + lattice.rows() - 1, c),
                _ => lattice.v_index(r + lattice.rows() - 1, c + 1),
            };
            if lattice.is_valid_qubit(h) && lattice.is_valid_qubit(v) {
                pairs.push((h, v));
            }
        }
    }
    pairs
}

/// Uniformly random two-qubit Clifford action via the symplectic enumeration:
/// sample the images of X1, Z1, X2, Z2 subject to the commutation constraints,
/// then four independent signs.
pub fn random_clifford2_action(rng: &mut ChaCha8Rng) -> CliffordAction {
    random_clifford2(rng)
}

fn random_clifford2(rng: &mut ChaCha8Rng) -> CliffordAction {
    let all: Vec<LocalPauli> = (1u8..16)
        .map(|b| LocalPauli {
            x: (b & 1) | ((b >> 2) & 1) << 1,
            z: ((b >> 1) & 1) | ((b >> 3) & 1) << 1,
            phase: 0,
        })
        .collect();
    let alpha = all[rng.gen_range(0..all.len())];
    let betas: Vec<LocalPauli> = all.iter().copied().filter(|p| alpha.symplectic(*p) == 1).collect();
    let beta = betas[rng.gen_range(0..betas.len())];
    let gammas: Vec<LocalPauli> = all
        .iter()
        .copied()
        .filter(|p| alpha.symplectic(*p) == 0 && beta.symplectic(*p) == 0)
        .collect();
    let gamma = gammas[rng.gen_range(0..gammas.len())];
    let deltas: Vec<LocalPauli> = all
        .iter()
        .copied()
        .filter(|p| alpha.symplectic(*p) == 0 && beta.symplectic(*p) == 0 && gamma.symplectic(*p) == 1)
        .collect();
    let delta = deltas[rng.gen_range(0..deltas.len())];
    let mut images = vec![alpha, beta, gamma, delta];
    for img in &mut images {
        // canonical Hermitian phase, then a random sign
        img.phase = ((img.x & img.z).count_ones() as u8 & 1) + if rng.gen::<bool>() { 2 } else { 0 };
        img.phase %= 4;
    }
    let action = CliffordAction { arity: 2, images };
    debug_assert!(action.is_symplectic());
    action
}

/// Haar-random unitary on `dim` dimensions: QR of a complex Ginibre matrix
/// with the R diagonal phase fixed.
pub fn haar_unitary(rng: &mut ChaCha8Rng, dim: usize) -> Mat<c64> {
    let normal = |rng: &mut ChaCha8Rng| {
        // Box-Muller
        let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
        let u2: f64 = rng.gen();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    };
    let g = Mat::from_fn(dim, dim, |_, _| c64::new(normal(rng), normal(rng)));
    // modified Gram-Schmidt
    let mut q = g;
    for j in 0..dim {
        for p in 0..j {
            let mut dot = c64::new(0.0, 0.0);
            for i in 0..dim {
                dot += q.read(i, p).conj() * q.read(i, j);
            }
            for i in 0..dim {
                let v = q.read(i, j) - dot * q.read(i, p);
                q.write(i, j, v);
            }
        }
        let mut norm = 0.0;
        for i in 0..dim {
            let v = q.read(i, j);
            norm += v.re * v.re + v.im * v.im;
        }
        let norm = norm.sqrt();
        // fix the phase so the "R diagonal" is real positive
        let lead = q.read(j, j);
        let a = (lead.re * lead.re + lead.im * lead.im).sqrt();
        let ph = if a > 1e-300 {
            c64::new(lead.re / a, -lead.im / a)
        } else {
            c64::new(1.0, 0.0)
        };
        for i in 0..dim {
            let v = q.read(i, j) * ph * c64::new(1.0 / norm, 0.0);
            q.write(i, j, v);
        }
    }
    q
}

/// Brickwork circuit of uniformly random two-qubit Clifford gates on
/// lattice-adjacent pairs; deterministic per `(seed, layer, gate index)`.
pub fn random_shallow_clifford(lattice: &Lattice, depth: usize, seed: u64) -> Circuit {
    random_shallow_clifford_restricted(lattice, depth, seed, None)
}

/// Same as [`random_shallow_clifford`] but dropping gates whose support is not
/// fully inside `restrict_to`.
pub fn random_shallow_clifford_restricted(
    lattice: &Lattice,
    depth: usize,
    seed: u64,
    restrict_to: Option<&Region>,
) -> Circuit {
    let layers = (0..depth)
        .map(|layer| {
            let gates = brickwork_pairs(lattice, layer)
                .into_iter()
                .enumerate()
                .filter(|(_, (a, b))| match restrict_to {
                    Some(r) => r.qubits.contains(a) && r.qubits.contains(b),
                    None => true,
                })
                .map(|(gi, (a, b))| {
                    let mut rng = gate_rng(seed, layer, gi);
                    Gate {
                        support: vec![a, b],
                        kind: GateKind::Clifford {
                            images: random_clifford2(&mut rng),
                        },
                    }
                })
                .collect();
            Layer { gates }
        })
        .collect();
    Circuit { layers }
}

/// Brickwork circuit of Haar-random two-qubit dense unitaries; gates with
/// support outside `restrict_to` are dropped.
pub fn random_shallow_unitary(
    lattice: &Lattice,
    depth: usize,
    seed: u64,
    restrict_to: Option<&Region>,
) -> Circuit {
    let layers = (0..depth)
        .map(|layer| {
            let gates = brickwork_pairs(lattice, layer)
                .into_iter()
                .enumerate()
                .filter(|(_, (a, b))| match restrict_to {
                    Some(r) => r.qubits.contains(a) && r.qubits.contains(b),
                    None => true,
                })
                .map(|(gi, (a, b))| {
                    let mut rng = gate_rng(seed, layer, gi);
                    Gate {
                        support: vec![a, b],
                        kind: GateKind::Dense {
                            matrix: DenseGate::from_mat(&haar_unitary(&mut rng, 4)),
                        },
                    }
                })
                .collect();
            Layer { gates }
        })
        .collect();
    Circuit { layers }
}

/// Depth-1 circuit from an explicit gate list (validated).
pub fn single_layer(gates: Vec<Gate>) -> Result<Circuit, CircuitError> {
    Circuit::new(vec![Layer { gates }])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat_close(a: &Mat<c64>, b: &Mat<c64>, tol: f64) -> bool {
        let mut dev: f64 = 0.0;
        for r in 0..a.nrows() {
            for c in 0..a.ncols() {
                let d = a.read(r, c) - b.read(r, c);
                dev = dev.max((d.re * d.re + d.im * d.im).sqrt());
            }
        }
        dev < tol
    }

    #[test]
    fn named_actions_are_symplectic() {
        for kind in [
            GateKind::H,
            GateKind::S,
            GateKind::Sdg,
            GateKind::X,
            GateKind::Y,
            GateKind::Z,
        ] {
            let g = Gate::new(vec![0], kind).unwrap();
            assert!(g.clifford_action().unwrap().is_symplectic());
        }
        for kind in [GateKind::Cnot, GateKind::Cz, GateKind::Swap] {
            let g = Gate::new(vec![0, 1], kind).unwrap();
            assert!(g.clifford_action().unwrap().is_symplectic());
        }
    }

    #[test]
    fn action_inverse_composes_to_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let a = random_clifford2(&mut rng);
            let inv = a.inverse();
            for basis in [LP(1, 0, 0), LP(0, 1, 0), LP(2, 0, 0), LP(0, 2, 0)] {
                let roundtrip = inv.apply(a.apply(basis));
                assert_eq!(roundtrip, basis);
            }
        }
    }

    #[test]
    fn clifford_unitary_conjugates_as_action_says() {
        use crate::pauli::PauliString;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let action = random_clifford2(&mut rng);
            let u = clifford_unitary(&action);
            let gens = [
                PauliString::x_string(2, &[0]),
                PauliString::z_string(2, &[0]),
                PauliString::x_string(2, &[1]),
                PauliString::z_string(2, &[1]),
            ];
            for (i, p) in gens.iter().enumerate() {
                let img = action.images[i];
                let mut want = PauliString::identity(2);
                for q in 0..2 {
                    want.set_x(q, (img.x >> q) & 1 == 1);
                    want.set_z(q, (img.z >> q) & 1 == 1);
                }
                want.set_phase(img.phase);
                let lhs = &u * p.to_matrix() * u.adjoint();
                assert!(
                    mat_close(&lhs.to_owned(), &want.to_matrix(), 1e-9),
                    "U P U^dag mismatch for basis {i}"
                );
            }
        }
    }

    #[test]
    fn determinism_per_seed() {
        let lat = Lattice::torus(4, 4);
        let c1 = random_shallow_clifford(&lat, 2, 42);
        let c2 = random_shallow_clifford(&lat, 2, 42);
        assert_eq!(c1, c2);
        let c3 = random_shallow_clifford(&lat, 2, 43);
        assert_ne!(c1, c3);
    }

    #[test]
    fn brickwork_covers_all_qubits() {
        let lat = Lattice::torus(6, 6);
        let c = random_shallow_clifford(&lat, 3, 0);
        assert_eq!(c.support().len(), lat.qubit_count());
        // per-layer disjointness
        Circuit::new(c.layers.clone()).unwrap();
    }

    #[test]
    fn haar_gates_are_unitary() {
        let lat = Lattice::torus(4, 4);
        let c = random_shallow_unitary(&lat, 1, 5, None);
        for g in &c.layers[0].gates {
            if let GateKind::Dense { matrix } = &g.kind {
                assert!(matrix.unitarity_deviation() < 1e-12);
            }
        }
    }

    #[test]
    fn restrict_to_empty_gives_identity() {
        let lat = Lattice::torus(4, 4);
        let empty = Region::new("none", []);
        let c = random_shallow_unitary(&lat, 2, 5, Some(&empty));
        assert_eq!(c.gate_count(), 0);
    }

    #[test]
    fn invert_is_involution() {
        let lat = Lattice::torus(4, 4);
        let c = random_shallow_clifford(&lat, 3, 9);
        assert_eq!(invert(&invert(&c)), c);
        assert_eq!(invert(&c).depth(), c.depth());
    }

    #[test]
    fn light_cone_identity_and_monotonicity() {
        let lat = Lattice::torus(4, 4);
        let region: BTreeSet<u32> = [3u32, 7].into_iter().collect();
        assert_eq!(light_cone(&Circuit::identity(), &region), region);
        let c = random_shallow_clifford(&lat, 2, 1);
        let small: BTreeSet<u32> = [3u32].into_iter().collect();
        let cone_small = light_cone(&c, &small);
        let cone_big = light_cone(&c, &region);
        assert!(cone_small.is_subset(&cone_big));
    }

    #[test]
    fn restriction_protects_region() {
        let lat = Lattice::torus(4, 4);
        let c = random_shallow_clifford(&lat, 3, 2);
        let protected = Region::new("S", [0u32, 1, 2]);
        let r = restrict_outside_light_cone(&c, &protected);
        for layer in &r.layers {
            for g in &layer.gates {
                assert!(!g.support.iter().any(|q| protected.qubits.contains(q)));
            }
        }
        assert!(r.depth() <= c.depth());
        // protecting everything removes every gate
        let all = Region::new("all", lat.qubits());
        assert_eq!(restrict_outside_light_cone(&c, &all).gate_count(), 0);
        // protecting nothing removes nothing
        let none = Region::new("none", []);
        assert_eq!(restrict_outside_light_cone(&c, &none), c);
    }

    #[test]
    fn circuit_json_roundtrip() {
        let lat = Lattice::torus(4, 4);
        let mut c = random_shallow_clifford(&lat, 1, 3);
        c.layers.push(Layer {
            gates: vec![Gate::new(vec![0], GateKind::H).unwrap()],
        });
        let json = c.to_json();
        let back = Circuit::from_json(&json).unwrap();
        assert_eq!(c, back);
    }
}
