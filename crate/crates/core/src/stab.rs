//! Exact stabilizer engine.
//!
//! Pure stabilizer states are held as a full set of n commuting independent
//! Pauli generators with signs. Entropies come from GF(2) rank arithmetic:
//! `S(R) = (|R| − k_R)·log 2` where `k_R` counts the independent group
//! elements supported inside `R`, computed as the left kernel of the tableau
//! projected onto the complement's symplectic columns. Everything here is
//! exact; floating point only appears when converting `k·log 2` to nats.

use crate::circuits::{Circuit, Gate};
use crate::gf2::{iter_bits, BitMatrix};
use crate::lattice::{Lattice, Region, Topology};
use crate::pauli::PauliString;
use std::collections::BTreeSet;
use thiserror::Error;

pub const LN_2: f64 = std::f64::consts::LN_2;

#[derive(Debug, Error)]
pub enum StabError {
    #[error("toric code needs torus topology")]
    NeedsTorus,
    #[error("dense gate in circuit at layer {0}; the stabilizer engine is Clifford-only")]
    DenseGate(usize),
    #[error("regions overlap: {0} and {1}")]
    RegionsOverlap(String, String),
    #[error("region {label} has {size} qubits, above the dense handoff limit {limit}")]
    RegionTooLarge { label: String, size: usize, limit: usize },
    #[error("string path is closed; use closed_string_operator")]
    ClosedPath,
    #[error("closed loop expected; path endpoints differ")]
    OpenLoop,
    #[error("string operator leaves the allowed region at qubit {0}")]
    LeavesRegion(u32),
    #[error("no string route: keep-out region blocks all paths")]
    NoRoute,
    #[error("tableau parse error: {0}")]
    Parse(String),
    #[error("state/qubit-count mismatch: state has {state}, argument wants {want}")]
    SizeMismatch { state: usize, want: usize },
}

/// Pure n-qubit stabilizer state: n independent commuting signed Paulis.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StabilizerState {
    n: usize,
    rows: Vec<PauliString>,
}

impl StabilizerState {
    /// |0…0⟩: stabilized by Z on every qubit.
    pub fn zero_state(n: usize) -> Self {
        let rows = (0..n).map(|q| PauliString::z_string(n, &[q as u32])).collect();
        StabilizerState { n, rows }
    }

    pub fn from_generators(rows: Vec<PauliString>) -> Self {
        let n = rows.len();
        assert!(rows.iter().all(|r| r.n() == n), "generator count must equal qubit count");
        let st = StabilizerState { n, rows };
        debug_assert!(st.check_invariants());
        st
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn generators(&self) -> &[PauliString] {
        &self.rows
    }

    /// Generators commute pairwise, are independent, and carry real signs.
    pub fn check_invariants(&self) -> bool {
        for (i, a) in self.rows.iter().enumerate() {
            if !a.is_hermitian() {
                return false;
            }
            for b in self.rows.iter().skip(i + 1) {
                if !a.commutes_with(b) {
                    return false;
                }
            }
        }
        symplectic_matrix(&self.rows, self.n).rank() == self.n
    }

    /// Conjugate by a Clifford circuit, layer by layer.
    pub fn apply_circuit(&self, circuit: &Circuit) -> Result<StabilizerState, StabError> {
        let mut rows = self.rows.clone();
        for (li, layer) in circuit.layers.iter().enumerate() {
            for gate in &layer.gates {
                let action = gate.clifford_action().ok_or(StabError::DenseGate(li))?;
                apply_gate(&mut rows, gate, &action);
            }
        }
        Ok(StabilizerState { n: self.n, rows })
    }

    /// Conjugate by a Pauli: signs flip on anticommuting generators.
    pub fn apply_pauli(&self, p: &PauliString) -> StabilizerState {
        let rows = self
            .rows
            .iter()
            .map(|r| {
                let mut r2 = r.clone();
                if !r2.commutes_with(p) {
                    r2.flip_sign();
                }
                r2
            })
            .collect();
        StabilizerState { n: self.n, rows }
    }

    /// Exact region entropy as the integer k in S = k·log 2.
    pub fn entropy_log2(&self, region: &Region) -> usize {
        region_entropy_log2(&self.rows, self.n, &region.qubits)
    }

    /// Region entropy in nats.
    pub fn entropy(&self, region: &Region) -> f64 {
        self.entropy_log2(region) as f64 * LN_2
    }

    /// Conditional mutual information I(A:C|B) in units of log 2 (exact).
    pub fn cmi_log2(&self, a: &Region, b: &Region, c: &Region) -> Result<i64, StabError> {
        for (x, y) in [(a, b), (a, c), (b, c)] {
            if !x.is_disjoint(y) {
                return Err(StabError::RegionsOverlap(x.label.clone(), y.label.clone()));
            }
        }
        let ab = a.union(b, "AB");
        let bc = b.union(c, "BC");
        let abc = ab.union(c, "ABC");
        Ok(self.entropy_log2(&ab) as i64 + self.entropy_log2(&bc) as i64
            - self.entropy_log2(b) as i64
            - self.entropy_log2(&abc) as i64)
    }

    pub fn cmi(&self, a: &Region, b: &Region, c: &Region) -> Result<f64, StabError> {
        Ok(self.cmi_log2(a, b, c)? as f64 * LN_2)
    }

    /// Mutual information I(A:B) in units of log 2 (exact).
    pub fn mutual_information_log2(&self, a: &Region, b: &Region) -> Result<i64, StabError> {
        if !a.is_disjoint(b) {
            return Err(StabError::RegionsOverlap(a.label.clone(), b.label.clone()));
        }
        let ab = a.union(b, "AB");
        Ok(self.entropy_log2(a) as i64 + self.entropy_log2(b) as i64 - self.entropy_log2(&ab) as i64)
    }

    /// Expectation of a Hermitian Pauli: ±1 when ±P is in the stabilizer
    /// group, 0 otherwise.
    pub fn expectation(&self, p: &PauliString) -> i8 {
        assert_eq!(p.n(), self.n);
        assert!(p.is_hermitian(), "expectation of a non-hermitian pauli");
        if self.rows.iter().any(|r| !r.commutes_with(p)) {
            return 0;
        }
        let m = symplectic_matrix(&self.rows, self.n);
        let mut target = BitMatrix::zeros(1, 2 * self.n);
        p.write_symplectic_row(&mut target, 0);
        let tw: Vec<u64> = target.row(0).to_vec();
        match m.solve_left(&tw) {
            Some(combo) => {
                let mut prod = PauliString::identity(self.n);
                for idx in iter_bits(&combo) {
                    prod = prod.mul(&self.rows[idx]);
                }
                // prod and p share bits; they differ by a sign at most
                if prod.phase() == p.phase() {
                    1
                } else {
                    -1
                }
            }
            None => 0,
        }
    }

    /// Same stabilizer group (row spaces and signs both match)?
    pub fn same_state(&self, other: &StabilizerState) -> bool {
        if self.n != other.n {
            return false;
        }
        other.rows.iter().all(|r| self.expectation(r) == 1)
    }

    /// Dense reduced density matrix on `region`:
    /// ρ_R = 2^{−|R|} Σ over the supported subgroup of its signed Paulis.
    pub fn reduced_density_matrix(
        &self,
        region: &Region,
        limit: usize,
    ) -> Result<crate::dense::DensityMatrix, StabError> {
        if region.len() > limit {
            return Err(StabError::RegionTooLarge {
                label: region.label.clone(),
                size: region.len(),
                limit,
            });
        }
        let keep = region.sorted_vec();
        let gens = supported_subgroup(&self.rows, self.n, &region.qubits);
        let dim = 1usize << keep.len();
        let mut mat = faer::Mat::<faer::complex_native::c64>::zeros(dim, dim);
        let k = gens.len();
        for mask in 0..(1usize << k) {
            let mut g = PauliString::identity(self.n);
            for (bit, gen) in gens.iter().enumerate() {
                if (mask >> bit) & 1 == 1 {
                    g = g.mul(gen);
                }
            }
            let local = g.restrict(&keep);
            let gm = local.to_matrix();
            for r in 0..dim {
                for c in 0..dim {
                    mat.write(r, c, mat.read(r, c) + gm.read(r, c));
                }
            }
        }
        let scale = faer::complex_native::c64::new(1.0 / dim as f64, 0.0);
        for r in 0..dim {
            for c in 0..dim {
                mat.write(r, c, mat.read(r, c) * scale);
            }
        }
        let factors: Vec<crate::dense::Factor> = keep
            .iter()
            .map(|q| crate::dense::Factor {
                label: format!("q{q}"),
                dim: 2,
            })
            .collect();
        crate::dense::DensityMatrix::new(factors, mat)
            .map_err(|e| StabError::Parse(format!("reduced state invalid: {e}")))
    }

    /// Plain-text tableau dump: one row per generator, sign then the length-2n
    /// bitstring (X part then Z part).
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for r in &self.rows {
            out.push(if r.sign() == 1 { '+' } else { '-' });
            for q in 0..self.n {
                out.push(if r.x_bit(q) { '1' } else { '0' });
            }
            for q in 0..self.n {
                out.push(if r.z_bit(q) { '1' } else { '0' });
            }
            out.push('\n');
        }
        out
    }

    pub fn load(text: &str) -> Result<StabilizerState, StabError> {
        let lines: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty()).collect();
        let n = lines.len();
        let mut rows = Vec::with_capacity(n);
        for line in &lines {
            let line = line.trim();
            let (sign, bits) = line.split_at(1);
            if bits.len() != 2 * n {
                return Err(StabError::Parse(format!(
                    "row has {} bits, expected {}",
                    bits.len(),
                    2 * n
                )));
            }
            let mut p = PauliString::identity(n);
            for (i, ch) in bits.chars().enumerate() {
                let v = match ch {
                    '0' => false,
                    '1' => true,
                    other => return Err(StabError::Parse(format!("bad bit {other}"))),
                };
                if i < n {
                    p.set_x(i, v);
                } else {
                    p.set_z(i - n, v);
                }
            }
            // positive Hermitian phase i^{#Y}, then the recorded sign
            let y_count = (0..n).filter(|&q| p.x_bit(q) && p.z_bit(q)).count() % 4;
            p.set_phase(y_count as u8);
            match sign {
                "+" => {}
                "-" => p.flip_sign(),
                other => return Err(StabError::Parse(format!("bad sign {other}"))),
            }
            rows.push(p);
        }
        let st = StabilizerState { n, rows };
        if !st.check_invariants() {
            return Err(StabError::Parse("generators do not form a pure stabilizer group".into()));
        }
        Ok(st)
    }
}

fn apply_gate(rows: &mut [PauliString], gate: &Gate, action: &crate::circuits::CliffordAction) {
    for row in rows.iter_mut() {
        let mut local = crate::circuits::LocalPauli::identity();
        for (i, &q) in gate.support.iter().enumerate() {
            if row.x_bit(q as usize) {
                local.x |= 1 << i;
            }
            if row.z_bit(q as usize) {
                local.z |= 1 << i;
            }
        }
        if local.x == 0 && local.z == 0 {
            continue;
        }
        let img = action.apply(local);
        let new_phase = (row.phase() + img.phase) % 4;
        for (i, &q) in gate.support.iter().enumerate() {
            row.set_x(q as usize, (img.x >> i) & 1 == 1);
            row.set_z(q as usize, (img.z >> i) & 1 == 1);
        }
        row.set_phase(new_phase);
    }
}

/// Symplectic bit matrix of a generator list: row per generator, X columns
/// then Z columns.
fn symplectic_matrix(gens: &[PauliString], n: usize) -> BitMatrix {
    let mut m = BitMatrix::zeros(gens.len(), 2 * n);
    for (i, g) in gens.iter().enumerate() {
        g.write_symplectic_row(&mut m, i);
    }
    m
}

/// Number of independent group elements supported inside `region`, for the
/// group generated by `gens`: the left kernel of the projection onto the
/// complement's symplectic columns.
pub fn supported_count(gens: &[PauliString], n: usize, region: &BTreeSet<u32>) -> usize {
    complement_projection(gens, n, region).left_nullity()
}

/// Generators (as full Pauli strings with signs) of the subgroup supported
/// inside `region`.
pub fn supported_subgroup(gens: &[PauliString], n: usize, region: &BTreeSet<u32>) -> Vec<PauliString> {
    let proj = complement_projection(gens, n, region);
    proj.left_kernel()
        .into_iter()
        .map(|combo| {
            let mut p = PauliString::identity(n);
            for idx in iter_bits(&combo) {
                p = p.mul(&gens[idx]);
            }
            debug_assert!(p.supported_within(region));
            p
        })
        .collect()
}

fn complement_projection(gens: &[PauliString], n: usize, region: &BTreeSet<u32>) -> BitMatrix {
    let comp: Vec<usize> = (0..n).filter(|q| !region.contains(&(*q as u32))).collect();
    let mut m = BitMatrix::zeros(gens.len(), 2 * comp.len().max(1));
    for (i, g) in gens.iter().enumerate() {
        for (j, &q) in comp.iter().enumerate() {
            m.set(i, j, g.x_bit(q));
            m.set(i, comp.len() + j, g.z_bit(q));
        }
    }
    m
}

/// Region entropy (integer multiple of log 2) for the group generated by
/// `gens` — works for pure states (n generators) and for dephased subgroups.
pub fn region_entropy_log2(gens: &[PauliString], n: usize, region: &BTreeSet<u32>) -> usize {
    region.len() - supported_count(gens, n, region)
}

/// Toric code ground state on the torus: star and plaquette stabilizers plus
/// the two wrapping logical Z loops fixed to `sector`.
pub fn toric_code_ground_state(
    lattice: &Lattice,
    sector: (i8, i8),
) -> Result<StabilizerState, StabError> {
    if lattice.topology() != Topology::Torus {
        return Err(StabError::NeedsTorus);
    }
    let n = lattice.qubit_capacity();
    let (rows, cols) = (lattice.rows(), lattice.cols());
    let mut gens: Vec<PauliString> = Vec::with_capacity(n);
    // all stars and plaquettes except one of each (their products are identity)
    for r in 0..rows {
        for c in 0..cols {
            if (r, c) == (rows - 1, cols - 1) {
                continue;
            }
            let star: Vec<u32> = lattice.star_edges(r, c).into_iter().flatten().collect();
            gens.push(PauliString::x_string(n, &star));
        }
    }
    for r in 0..rows {
        for c in 0..cols {
            if (r, c) == (rows - 1, cols - 1) {
                continue;
            }
            let plaq: Vec<u32> = lattice.plaquette_edges(r, c).into_iter().flatten().collect();
            gens.push(PauliString::z_string(n, &plaq));
        }
    }
    // wrapping logical Zs: horizontal edges of row 0, vertical edges of col 0
    let loop_h: Vec<u32> = (0..cols).map(|c| lattice.h_index(0, c)).collect();
    let loop_v: Vec<u32> = (0..rows).map(|r| lattice.v_index(r, 0)).collect();
    let mut l1 = PauliString::z_string(n, &loop_h);
    if sector.0 < 0 {
        l1.flip_sign();
    }
    let mut l2 = PauliString::z_string(n, &loop_v);
    if sector.1 < 0 {
        l2.flip_sign();
    }
    gens.push(l1);
    gens.push(l2);
    Ok(StabilizerState::from_generators(gens))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Anyon {
    #[serde(rename = "1")]
    Vacuum,
    E,
    M,
    Epsilon,
}

/// An open string route: `e` runs on the vertex path (Z on the connecting
/// edges), `m` on the plaquette path (X on the crossed edges), `ε` on both.
#[derive(Clone, Debug, Default)]
pub struct StringPath {
    pub vertex_path: Vec<(usize, usize)>,
    pub plaquette_path: Vec<(usize, usize)>,
}

fn vertex_edge(lattice: &Lattice, a: (usize, usize), b: (usize, usize)) -> Option<u32> {
    let (rows, cols) = (lattice.rows(), lattice.cols());
    let dr = (b.0 + rows - a.0) % rows;
    let dc = (b.1 + cols - a.1) % cols;
    match (dr, dc) {
        (0, 1) => Some(lattice.h_index(a.0, a.1)),
        (0, dc) if dc == cols - 1 => Some(lattice.h_index(b.0, b.1)),
        (1, 0) => Some(lattice.v_index(a.0, a.1)),
        (dr, 0) if dr == rows - 1 => Some(lattice.v_index(b.0, b.1)),
        _ => None,
    }
}

/// Edge crossed when stepping between two adjacent plaquettes (the shared
/// edge between the dual sites).
fn plaquette_edge(lattice: &Lattice, a: (usize, usize), b: (usize, usize)) -> Option<u32> {
    let (rows, cols) = (lattice.rows(), lattice.cols());
    let dr = (b.0 + rows - a.0) % rows;
    let dc = (b.1 + cols - a.1) % cols;
    match (dr, dc) {
        // step right: shared edge is the right edge of a = v(a.0, a.1+1)
        (0, 1) => Some(lattice.v_index(a.0, a.1 + 1)),
        (0, dc) if dc == cols - 1 => Some(lattice.v_index(a.0, a.1)),
        (1, 0) => Some(lattice.h_index(a.0 + 1, a.1)),
        (dr, 0) if dr == rows - 1 => Some(lattice.h_index(a.0, a.1)),
        _ => None,
    }
}

fn path_edges(
    lattice: &Lattice,
    path: &[(usize, usize)],
    edge_of: impl Fn(&Lattice, (usize, usize), (usize, usize)) -> Option<u32>,
) -> Result<Vec<u32>, StabError> {
    let mut edges = Vec::new();
    for w in path.windows(2) {
        let e = edge_of(lattice, w[0], w[1])
            .ok_or_else(|| StabError::Parse(format!("path step {:?} -> {:?} not adjacent", w[0], w[1])))?;
        edges.push(e);
    }
    Ok(edges)
}

/// Open string operator creating anyon `a` at one end of the path and its
/// antiparticle at the other.
pub fn string_operator(
    lattice: &Lattice,
    anyon: Anyon,
    path: &StringPath,
) -> Result<PauliString, StabError> {
    let n = lattice.qubit_capacity();
    let check_open = |p: &[(usize, usize)]| -> Result<(), StabError> {
        if p.len() >= 2 && p.first() == p.last() {
            return Err(StabError::ClosedPath);
        }
        Ok(())
    };
    match anyon {
        Anyon::Vacuum => Ok(PauliString::identity(n)),
        Anyon::E => {
            check_open(&path.vertex_path)?;
            let edges = path_edges(lattice, &path.vertex_path, vertex_edge)?;
            Ok(PauliString::z_string(n, &edges))
        }
        Anyon::M => {
            check_open(&path.plaquette_path)?;
            let edges = path_edges(lattice, &path.plaquette_path, plaquette_edge)?;
            Ok(PauliString::x_string(n, &edges))
        }
        Anyon::Epsilon => {
            check_open(&path.vertex_path)?;
            check_open(&path.plaquette_path)?;
            let z = string_operator(lattice, Anyon::E, path)?;
            let x = string_operator(lattice, Anyon::M, path)?;
            Ok(z.mul(&x))
        }
    }
}

/// Closed sector witness inside `region`: for `e` a closed Z loop on the
/// vertex cycle, for `m` a closed X loop on the plaquette cycle, for `ε` both.
pub fn closed_string_operator(
    lattice: &Lattice,
    anyon: Anyon,
    loop_path: &StringPath,
    region: &Region,
) -> Result<PauliString, StabError> {
    let n = lattice.qubit_capacity();
    let check_closed = |p: &[(usize, usize)]| -> Result<(), StabError> {
        if p.len() < 2 || p.first() != p.last() {
            return Err(StabError::OpenLoop);
        }
        Ok(())
    };
    let op = match anyon {
        Anyon::Vacuum => PauliString::identity(n),
        Anyon::E => {
            check_closed(&loop_path.vertex_path)?;
            let edges = path_edges(lattice, &loop_path.vertex_path, vertex_edge)?;
            PauliString::z_string(n, &edges)
        }
        Anyon::M => {
            check_closed(&loop_path.plaquette_path)?;
            let edges = path_edges(lattice, &loop_path.plaquette_path, plaquette_edge)?;
            PauliString::x_string(n, &edges)
        }
        Anyon::Epsilon => {
            let z = closed_string_operator(lattice, Anyon::E, loop_path, region)?;
            let x = closed_string_operator(lattice, Anyon::M, loop_path, region)?;
            z.mul(&x)
        }
    };
    for q in op.support() {
        if !region.qubits.contains(&(q as u32)) {
            return Err(StabError::LeavesRegion(q as u32));
        }
    }
    Ok(op)
}

/// Shortest vertex path between two vertices avoiding edges in `keep_out`.
pub fn route_vertex_path(
    lattice: &Lattice,
    from: (usize, usize),
    to: (usize, usize),
    keep_out: &BTreeSet<u32>,
) -> Result<Vec<(usize, usize)>, StabError> {
    let (rows, cols) = (lattice.rows(), lattice.cols());
    let idx = |r: usize, c: usize| r * cols + c;
    let mut prev: Vec<Option<(usize, usize)>> = vec![None; rows * cols];
    let mut seen = vec![false; rows * cols];
    let mut queue = std::collections::VecDeque::new();
    seen[idx(from.0, from.1)] = true;
    queue.push_back(from);
    while let Some((r, c)) = queue.pop_front() {
        if (r, c) == to {
            let mut path = vec![(r, c)];
            let mut cur = (r, c);
            while let Some(p) = prev[idx(cur.0, cur.1)] {
                path.push(p);
                cur = p;
            }
            path.reverse();
            return Ok(path);
        }
        let steps = [
            ((r, (c + 1) % cols), lattice.h_index(r, c)),
            ((r, (c + cols - 1) % cols), lattice.h_index(r, (c + cols - 1) % cols)),
            (((r + 1) % rows, c), lattice.v_index(r, c)),
            (((r + rows - 1) % rows, c), lattice.v_index((r + rows - 1) % rows, c)),
        ];
        for (nb, edge) in steps {
            if keep_out.contains(&edge) || !lattice.is_valid_qubit(edge) {
                continue;
            }
            if !seen[idx(nb.0, nb.1)] {
                seen[idx(nb.0, nb.1)] = true;
                prev[idx(nb.0, nb.1)] = Some((r, c));
                queue.push_back(nb);
            }
        }
    }
    Err(StabError::NoRoute)
}

/// Shortest plaquette (dual) path avoiding crossed edges in `keep_out`.
pub fn route_plaquette_path(
    lattice: &Lattice,
    from: (usize, usize),
    to: (usize, usize),
    keep_out: &BTreeSet<u32>,
) -> Result<Vec<(usize, usize)>, StabError> {
    let (rows, cols) = (lattice.rows(), lattice.cols());
    let idx = |r: usize, c: usize| r * cols + c;
    let mut prev: Vec<Option<(usize, usize)>> = vec![None; rows * cols];
    let mut seen = vec![false; rows * cols];
    let mut queue = std::collections::VecDeque::new();
    seen[idx(from.0, from.1)] = true;
    queue.push_back(from);
    while let Some((r, c)) = queue.pop_front() {
        if (r, c) == to {
            let mut path = vec![(r, c)];
            let mut cur = (r, c);
            while let Some(p) = prev[idx(cur.0, cur.1)] {
                path.push(p);
                cur = p;
            }
            path.reverse();
            return Ok(path);
        }
        let neighbors = [
            (r, (c + 1) % cols),
            (r, (c + cols - 1) % cols),
            ((r + 1) % rows, c),
            ((r + rows - 1) % rows, c),
        ];
        for nb in neighbors {
            let edge = plaquette_edge(lattice, (r, c), nb).expect("adjacent plaquettes");
            if keep_out.contains(&edge) || !lattice.is_valid_qubit(edge) {
                continue;
            }
            if !seen[idx(nb.0, nb.1)] {
                seen[idx(nb.0, nb.1)] = true;
                prev[idx(nb.0, nb.1)] = Some((r, c));
                queue.push_back(nb);
            }
        }
    }
    Err(StabError::NoRoute)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuits::{random_shallow_clifford, invert, Gate, GateKind};
    use crate::lattice::{build_annulus_partition, ArcSpec};

    #[test]
    fn toric_code_is_valid_and_pure() {
        let lat = Lattice::torus(6, 6);
        let st = toric_code_ground_state(&lat, (1, 1)).unwrap();
        assert_eq!(st.n(), 72);
        assert!(st.check_invariants());
        let full = Region::new("all", lat.qubits());
        assert_eq!(st.entropy_log2(&full), 0);
        let empty = Region::new("none", []);
        assert_eq!(st.entropy_log2(&empty), 0);
    }

    #[test]
    fn open_plane_toric_code_rejected() {
        let lat = Lattice::new(4, 4, Topology::OpenPlane);
        assert!(matches!(
            toric_code_ground_state(&lat, (1, 1)),
            Err(StabError::NeedsTorus)
        ));
    }

    #[test]
    fn star_plaquette_expectations_are_plus_one() {
        let lat = Lattice::torus(6, 6);
        let st = toric_code_ground_state(&lat, (1, 1)).unwrap();
        let n = st.n();
        for r in 0..6 {
            for c in 0..6 {
                let star: Vec<u32> = lat.star_edges(r, c).into_iter().flatten().collect();
                assert_eq!(st.expectation(&PauliString::x_string(n, &star)), 1);
                let plq: Vec<u32> = lat.plaquette_edges(r, c).into_iter().flatten().collect();
                assert_eq!(st.expectation(&PauliString::z_string(n, &plq)), 1);
            }
        }
    }

    #[test]
    fn plaquette_entropy_is_three_log2() {
        let lat = Lattice::torus(6, 6);
        let st = toric_code_ground_state(&lat, (1, 1)).unwrap();
        let plq: Vec<u32> = lat.plaquette_edges(2, 2).into_iter().flatten().collect();
        let region = Region::new("plq", plq);
        assert_eq!(st.entropy_log2(&region), 3);
    }

    #[test]
    fn disk_entropy_follows_perimeter_rule() {
        // simply connected plaquette blocks: S = (perimeter - 1) log 2
        let lat = Lattice::torus(8, 8);
        let st = toric_code_ground_state(&lat, (1, 1)).unwrap();
        // 2x2 block of plaquettes: 12 edges, perimeter 8
        let mut qs = BTreeSet::new();
        for r in 2..4 {
            for c in 2..4 {
                qs.extend(lat.plaquette_edges(r, c).into_iter().flatten());
            }
        }
        assert_eq!(qs.len(), 12);
        assert_eq!(st.entropy_log2(&Region::new("block", qs)), 7);
        // domino: 7 edges, perimeter 6
        let mut qs = BTreeSet::new();
        for c in 2..4 {
            qs.extend(lat.plaquette_edges(2, c).into_iter().flatten());
        }
        assert_eq!(qs.len(), 7);
        assert_eq!(st.entropy_log2(&Region::new("domino", qs)), 5);
    }

    #[test]
    fn annulus_cmi_is_two_log2() {
        let lat = Lattice::torus(12, 12);
        let st = toric_code_ground_state(&lat, (1, 1)).unwrap();
        let p = build_annulus_partition(&lat, (5, 5), 2, 5, &ArcSpec::default()).unwrap();
        let cmi = st.cmi_log2(&p.a, &p.b(), &p.c).unwrap();
        assert_eq!(cmi, 2);
        // non-adjacent mutual information vanishes (Definition 1(ii))
        assert_eq!(st.mutual_information_log2(&p.a, &p.c).unwrap(), 0);
    }

    #[test]
    fn thin_annulus_cmi_also_two_log2() {
        let lat = Lattice::torus(6, 6);
        let st = toric_code_ground_state(&lat, (1, 1)).unwrap();
        let p = build_annulus_partition(&lat, (2, 2), 1, 2, &ArcSpec::default()).unwrap();
        assert_eq!(st.cmi_log2(&p.a, &p.b(), &p.c).unwrap(), 2);
    }

    #[test]
    fn sector_choice_does_not_change_definition1_quantities() {
        let lat = Lattice::torus(8, 8);
        let p = build_annulus_partition(&lat, (3, 3), 1, 3, &ArcSpec::default()).unwrap();
        let mut values = BTreeSet::new();
        for sector in [(1, 1), (1, -1), (-1, 1), (-1, -1)] {
            let st = toric_code_ground_state(&lat, sector).unwrap();
            values.insert(st.cmi_log2(&p.a, &p.b(), &p.c).unwrap());
        }
        assert_eq!(values.len(), 1);
    }

    #[test]
    fn product_state_cmi_zero() {
        let st = StabilizerState::zero_state(9);
        let a = Region::new("A", [0u32, 1, 2]);
        let b = Region::new("B", [3u32, 4, 5]);
        let c = Region::new("C", [6u32, 7, 8]);
        assert_eq!(st.cmi_log2(&a, &b, &c).unwrap(), 0);
    }

    #[test]
    fn clifford_roundtrip_preserves_group() {
        let lat = Lattice::torus(6, 6);
        let st = toric_code_ground_state(&lat, (1, 1)).unwrap();
        let u = random_shallow_clifford(&lat, 2, 17);
        let evolved = st.apply_circuit(&u).unwrap();
        assert!(evolved.check_invariants());
        let back = evolved.apply_circuit(&invert(&u)).unwrap();
        assert!(back.same_state(&st), "U then U^-1 must restore the stabilizer group");
    }

    #[test]
    fn single_cnot_update() {
        // |00> --CNOT--> stabilizers {Z1 Z2? no: X-part}: CNOT |00>=|00>,
        // group {ZI, ZZ} stays {ZI, IZ}-equivalent; check invariants instead
        let st = StabilizerState::zero_state(2);
        let g = Gate::new(vec![0, 1], GateKind::Cnot).unwrap();
        let c = crate::circuits::single_layer(vec![g]).unwrap();
        let out = st.apply_circuit(&c).unwrap();
        assert!(out.check_invariants());
        // CNOT maps IZ -> ZZ; expectation of ZZ must be +1
        let zz = PauliString::z_string(2, &[0, 1]);
        assert_eq!(out.expectation(&zz), 1);
    }

    #[test]
    fn e_string_anticommutes_with_endpoint_stars_only() {
        let lat = Lattice::torus(8, 8);
        let st = toric_code_ground_state(&lat, (1, 1)).unwrap();
        let path = StringPath {
            vertex_path: vec![(2, 2), (2, 3), (2, 4), (3, 4)],
            plaquette_path: vec![],
        };
        let v = string_operator(&lat, Anyon::E, &path).unwrap();
        let n = st.n();
        let mut flipped = 0;
        for r in 0..8 {
            for c in 0..8 {
                let star: Vec<u32> = lat.star_edges(r, c).into_iter().flatten().collect();
                let s = PauliString::x_string(n, &star);
                if !s.commutes_with(&v) {
                    flipped += 1;
                    assert!((r, c) == (2, 2) || (r, c) == (3, 4), "unexpected endpoint ({r},{c})");
                }
            }
        }
        assert_eq!(flipped, 2);
        // all plaquettes commute with a Z string
        for r in 0..8 {
            for c in 0..8 {
                let plq: Vec<u32> = lat.plaquette_edges(r, c).into_iter().flatten().collect();
                assert!(PauliString::z_string(n, &plq).commutes_with(&v));
            }
        }
    }

    #[test]
    fn closed_path_rejected_for_open_string() {
        let lat = Lattice::torus(8, 8);
        let path = StringPath {
            vertex_path: vec![(2, 2), (2, 3), (3, 3), (3, 2), (2, 2)],
            plaquette_path: vec![],
        };
        assert!(matches!(
            string_operator(&lat, Anyon::E, &path),
            Err(StabError::ClosedPath)
        ));
    }

    #[test]
    fn vacuum_string_is_identity() {
        let lat = Lattice::torus(8, 8);
        let v = string_operator(&lat, Anyon::Vacuum, &StringPath::default()).unwrap();
        assert!(v.is_identity_op());
    }

    #[test]
    fn routing_avoids_keepout() {
        let lat = Lattice::torus(8, 8);
        let keep_out: BTreeSet<u32> = [lat.h_index(2, 2)].into_iter().collect();
        let path = route_vertex_path(&lat, (2, 2), (2, 4), &keep_out).unwrap();
        let edges = path_edges(&lat, &path, vertex_edge).unwrap();
        assert!(!edges.contains(&lat.h_index(2, 2)));
    }

    #[test]
    fn tableau_dump_load_roundtrip() {
        let lat = Lattice::torus(4, 4);
        let st = toric_code_ground_state(&lat, (-1, 1)).unwrap();
        let evolved = st
            .apply_circuit(&random_shallow_clifford(&lat, 1, 3))
            .unwrap();
        let text = evolved.dump();
        let back = StabilizerState::load(&text).unwrap();
        assert!(back.same_state(&evolved));
    }

    #[test]
    fn entropy_invariant_under_inside_or_outside_cliffords() {
        let lat = Lattice::torus(6, 6);
        let st = toric_code_ground_state(&lat, (1, 1)).unwrap();
        let region = Region::new(
            "R",
            (0..12u32).map(|i| lat.h_index(1 + (i as usize) / 4, (i as usize) % 4)),
        );
        let inside = Region::new("in", region.qubits.iter().copied());
        let comp = Region::new("out", lat.qubits().filter(|q| !region.qubits.contains(q)));
        let before = st.entropy_log2(&region);
        let u_in = crate::circuits::random_shallow_clifford_restricted(&lat, 2, 5, Some(&inside));
        let u_out = crate::circuits::random_shallow_clifford_restricted(&lat, 2, 6, Some(&comp));
        assert_eq!(st.apply_circuit(&u_in).unwrap().entropy_log2(&region), before);
        assert_eq!(st.apply_circuit(&u_out).unwrap().entropy_log2(&region), before);
    }
}
