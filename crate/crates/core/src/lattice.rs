//! Square-lattice geometry with one qubit per edge.
//!
//! Horizontal edges come first in the qubit indexing (row-major), then
//! vertical edges: `h(r,c) = r·cols + c`, `v(r,c) = rows·cols + r·cols + c`.
//! On the torus `h(r,c)` joins vertex `(r,c)` to `(r,(c+1) mod cols)` and
//! `v(r,c)` joins `(r,c)` to `((r+1) mod rows, c)`.
//!
//! Two qubits are adjacent when their edges share a vertex or a plaquette;
//! all distances are graph distances on that adjacency. Geometry helpers work
//! in doubled coordinates, where vertex `(r,c) ↦ (2r,2c)`, the midpoint of
//! `h(r,c) ↦ (2r,2c+1)`, of `v(r,c) ↦ (2r+1,2c)`, and the center of plaquette
//! `(r,c) ↦ (2r+1,2c+1)`.

use serde::{Deserialize, Serialize};
use std::collections::{BTreeSet, VecDeque};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LatticeError {
    #[error("zero-width annulus: r_out ({r_out}) must exceed r_in ({r_in})")]
    ZeroWidthAnnulus { r_in: usize, r_out: usize },
    #[error("annulus radius {r_out} wraps the {rows}x{cols} torus")]
    AnnulusWraps { r_out: usize, rows: usize, cols: usize },
    #[error("r_in must be at least 1, got {0}")]
    InnerRadiusTooSmall(usize),
    #[error("sector {0} of the annulus is empty")]
    EmptySector(&'static str),
    #[error("A adjacent to C: annulus sectors violate the distance-2 requirement")]
    SectorsAdjacent,
    #[error("regions overlap: {0} and {1}")]
    RegionsOverlap(String, String),
    #[error("region {0} is empty")]
    EmptyRegion(String),
    #[error("n too large for circumference: {n} sectors need {needed} columns, annulus has {available}")]
    ChainTooFine { n: usize, needed: usize, available: usize },
    #[error("chain partition needs n >= 3, got {0}")]
    ChainTooCoarse(usize),
    #[error("chain sectors {0} and {1} are non-consecutive but adjacent")]
    ChainNotChainLike(usize, usize),
    #[error("ring does not fit: {0}")]
    RingDoesNotFit(String),
    #[error("qubit {0} outside lattice")]
    QubitOutOfRange(u32),
    #[error("operation requires torus topology")]
    RequiresTorus,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Topology {
    Torus,
    OpenPlane,
}

/// The lattice itself: dimensions, topology, and the derived qubit adjacency.
#[derive(Clone, Debug)]
pub struct Lattice {
    rows: usize,
    cols: usize,
    topology: Topology,
    adjacency: Vec<Vec<u32>>,
    valid: Vec<bool>,
}

impl Lattice {
    pub fn torus(rows: usize, cols: usize) -> Self {
        Self::new(rows, cols, Topology::Torus)
    }

    pub fn new(rows: usize, cols: usize, topology: Topology) -> Self {
        assert!(rows >= 2 && cols >= 2, "lattice needs at least 2x2 vertices");
        let n = 2 * rows * cols;
        let mut valid = vec![true; n];
        if topology == Topology::OpenPlane {
            // wrap edges do not exist on the open plane
            for r in 0..rows {
                valid[r * cols + (cols - 1)] = false;
            }
            for c in 0..cols {
                valid[rows * cols + (rows - 1) * cols + c] = false;
            }
        }
        let mut lat = Lattice {
            rows,
            cols,
            topology,
            adjacency: vec![Vec::new(); n],
            valid,
        };
        lat.build_adjacency();
        lat
    }

    fn build_adjacency(&mut self) {
        let n = self.qubit_capacity();
        let mut sets: Vec<BTreeSet<u32>> = vec![BTreeSet::new(); n];
        let connect_clique = |edges: &[Option<u32>], sets: &mut Vec<BTreeSet<u32>>| {
            let present: Vec<u32> = edges.iter().flatten().copied().collect();
            for &a in &present {
                for &b in &present {
                    if a != b {
                        sets[a as usize].insert(b);
                    }
                }
            }
        };
        for r in 0..self.rows {
            for c in 0..self.cols {
                let star = self.star_edges(r, c);
                connect_clique(&star, &mut sets);
                let plaq = self.plaquette_edges(r, c);
                connect_clique(&plaq, &mut sets);
            }
        }
        self.adjacency = sets.into_iter().map(|s| s.into_iter().collect()).collect();
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    /// Size of the index space (2·rows·cols); open-plane lattices leave the
    /// wrap slots unused.
    pub fn qubit_capacity(&self) -> usize {
        2 * self.rows * self.cols
    }

    pub fn qubit_count(&self) -> usize {
        self.valid.iter().filter(|&&v| v).count()
    }

    pub fn is_valid_qubit(&self, q: u32) -> bool {
        (q as usize) < self.valid.len() && self.valid[q as usize]
    }

    pub fn qubits(&self) -> impl Iterator<Item = u32> + '_ {
        (0..self.qubit_capacity() as u32).filter(move |&q| self.valid[q as usize])
    }

    pub fn neighbors(&self, q: u32) -> &[u32] {
        &self.adjacency[q as usize]
    }

    #[inline]
    pub fn h_index(&self, r: usize, c: usize) -> u32 {
        ((r % self.rows) * self.cols + (c % self.cols)) as u32
    }

    #[inline]
    pub fn v_index(&self, r: usize, c: usize) -> u32 {
        (self.rows * self.cols + (r % self.rows) * self.cols + (c % self.cols)) as u32
    }

    /// Signed wrap of row offsets into `[-rows, rows)` in doubled units.
    fn wrap_d(&self, delta: i64, period: i64) -> i64 {
        let p = 2 * period;
        let mut d = delta.rem_euclid(p);
        if d >= period {
            d -= p;
        }
        d
    }

    /// Doubled-coordinate midpoint of a qubit's edge.
    pub fn midpoint_doubled(&self, q: u32) -> (i64, i64) {
        let rc = self.rows * self.cols;
        let qi = q as usize;
        if qi < rc {
            let (r, c) = (qi / self.cols, qi % self.cols);
            (2 * r as i64, 2 * c as i64 + 1)
        } else {
            let (r, c) = ((qi - rc) / self.cols, (qi - rc) % self.cols);
            (2 * r as i64 + 1, 2 * c as i64)
        }
    }

    /// Offset of a qubit's midpoint from a plaquette center, minimal wrap.
    pub fn offset_from_plaquette(&self, q: u32, center: (usize, usize)) -> (i64, i64) {
        let (my, mx) = self.midpoint_doubled(q);
        let cy = 2 * center.0 as i64 + 1;
        let cx = 2 * center.1 as i64 + 1;
        match self.topology {
            Topology::Torus => (
                self.wrap_d(my - cy, self.rows as i64),
                self.wrap_d(mx - cx, self.cols as i64),
            ),
            Topology::OpenPlane => (my - cy, mx - cx),
        }
    }

    /// The four edges of star (vertex) `(r,c)`: right, left, down, up.
    pub fn star_edges(&self, r: usize, c: usize) -> [Option<u32>; 4] {
        let right = self.h_index(r, c);
        let left = self.h_index(r, (c + self.cols - 1) % self.cols);
        let down = self.v_index(r, c);
        let up = self.v_index((r + self.rows - 1) % self.rows, c);
        [right, left, down, up].map(|q| self.valid[q as usize].then_some(q))
    }

    /// The four edges of plaquette `(r,c)`: top, bottom, left, right.
    pub fn plaquette_edges(&self, r: usize, c: usize) -> [Option<u32>; 4] {
        let top = self.h_index(r, c);
        let bottom = self.h_index(r + 1, c);
        let left = self.v_index(r, c);
        let right = self.v_index(r, c + 1);
        [top, bottom, left, right].map(|q| self.valid[q as usize].then_some(q))
    }

    /// Multi-source BFS distance between two qubit sets (0 if they intersect).
    pub fn distance(&self, a: &BTreeSet<u32>, b: &BTreeSet<u32>) -> usize {
        if a.iter().any(|q| b.contains(q)) {
            return 0;
        }
        let mut dist = vec![usize::MAX; self.qubit_capacity()];
        let mut queue = VecDeque::new();
        for &q in a {
            dist[q as usize] = 0;
            queue.push_back(q);
        }
        while let Some(q) = queue.pop_front() {
            let d = dist[q as usize];
            for &nb in self.neighbors(q) {
                if dist[nb as usize] == usize::MAX {
                    dist[nb as usize] = d + 1;
                    if b.contains(&nb) {
                        return d + 1;
                    }
                    queue.push_back(nb);
                }
            }
        }
        usize::MAX
    }

    /// Grow a qubit set by `steps` lattice steps.
    pub fn ball(&self, seed: &BTreeSet<u32>, steps: usize) -> BTreeSet<u32> {
        let mut cur = seed.clone();
        for _ in 0..steps {
            let mut next = cur.clone();
            for &q in &cur {
                next.extend(self.neighbors(q).iter().copied());
            }
            cur = next;
        }
        cur
    }
}

/// A set of qubits with a label.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Region {
    pub label: String,
    pub qubits: BTreeSet<u32>,
}

impl Region {
    pub fn new(label: impl Into<String>, qubits: impl IntoIterator<Item = u32>) -> Self {
        Region {
            label: label.into(),
            qubits: qubits.into_iter().collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.qubits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.qubits.is_empty()
    }

    pub fn is_disjoint(&self, other: &Region) -> bool {
        self.qubits.is_disjoint(&other.qubits)
    }

    pub fn union(&self, other: &Region, label: impl Into<String>) -> Region {
        Region {
            label: label.into(),
            qubits: self.qubits.union(&other.qubits).copied().collect(),
        }
    }

    pub fn union_all<'a>(regions: impl IntoIterator<Item = &'a Region>, label: impl Into<String>) -> Region {
        let mut qubits = BTreeSet::new();
        for r in regions {
            qubits.extend(r.qubits.iter().copied());
        }
        Region { label: label.into(), qubits }
    }

    pub fn difference(&self, other: &BTreeSet<u32>, label: impl Into<String>) -> Region {
        Region {
            label: label.into(),
            qubits: self.qubits.difference(other).copied().collect(),
        }
    }

    pub fn sorted_vec(&self) -> Vec<u32> {
        self.qubits.iter().copied().collect()
    }
}

/// Angular assignment of annulus qubits to the four sectors of Fig-style
/// partitions: A on the left, C on the right, B split into top and bottom.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum ArcSpec {
    /// Diagonal quadrants rotated by `rotation`·90° counterclockwise; the
    /// diagonals themselves go to the B arcs so A and C stay separated.
    Quadrants { rotation: u8 },
    /// Explicit sector boundaries in radians, counterclockwise:
    /// A = [t0,t1), B1 = [t1,t2), C = [t2,t3), B2 = [t3,t0).
    Angles([f64; 4]),
}

impl Default for ArcSpec {
    fn default() -> Self {
        ArcSpec::Quadrants { rotation: 0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Sector {
    A,
    B1,
    C,
    B2,
}

impl ArcSpec {
    /// Classify a doubled-coordinate offset (dy grows downward, dx right).
    fn classify(&self, dy: i64, dx: i64) -> Sector {
        match self {
            ArcSpec::Quadrants { rotation } => {
                let (mut y, mut x) = (dy, dx);
                for _ in 0..(*rotation % 4) {
                    // rotate the offset 90 deg clockwise so sectors rotate CCW
                    let (ny, nx) = (-x, y);
                    y = ny;
                    x = nx;
                }
                if x.abs() > y.abs() {
                    if x > 0 {
                        Sector::C
                    } else {
                        Sector::A
                    }
                } else if y < 0 {
                    Sector::B1
                } else {
                    Sector::B2
                }
            }
            ArcSpec::Angles(bounds) => {
                let theta = (-(dy as f64)).atan2(dx as f64).rem_euclid(std::f64::consts::TAU);
                let norm = |t: f64| t.rem_euclid(std::f64::consts::TAU);
                let (t0, t1, t2, t3) = (norm(bounds[0]), norm(bounds[1]), norm(bounds[2]), norm(bounds[3]));
                let in_arc = |from: f64, to: f64, t: f64| {
                    if from <= to {
                        from <= t && t < to
                    } else {
                        t >= from || t < to
                    }
                };
                if in_arc(t0, t1, theta) {
                    Sector::A
                } else if in_arc(t1, t2, theta) {
                    Sector::B1
                } else if in_arc(t2, t3, theta) {
                    Sector::C
                } else {
                    Sector::B2
                }
            }
        }
    }
}

/// An annulus split into the four arcs of the standard TEE partition.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AnnulusPartition {
    pub a: Region,
    pub b1: Region,
    pub b2: Region,
    pub c: Region,
    pub center: (usize, usize),
    pub inner_radius: usize,
    pub outer_radius: usize,
}

impl AnnulusPartition {
    pub fn b(&self) -> Region {
        self.b1.union(&self.b2, "B")
    }

    pub fn abc(&self) -> Region {
        Region::union_all([&self.a, &self.b1, &self.b2, &self.c], "ABC")
    }

    pub fn width(&self) -> usize {
        self.outer_radius - self.inner_radius
    }

    /// All annulus qubits.
    pub fn qubits(&self) -> BTreeSet<u32> {
        self.abc().qubits
    }
}

/// Qubits of the square disk of plaquette radius `rho` around `center`.
pub fn disk_qubits(lattice: &Lattice, center: (usize, usize), rho: usize) -> BTreeSet<u32> {
    lattice
        .qubits()
        .filter(|&q| {
            let (dy, dx) = lattice.offset_from_plaquette(q, center);
            dy.abs().max(dx.abs()) <= 2 * rho as i64 - 1
        })
        .collect()
}

/// Qubits with `2·r_in ≤ Chebyshev offset ≤ 2·r_out − 1` from the center.
pub fn annulus_qubits(
    lattice: &Lattice,
    center: (usize, usize),
    r_in: usize,
    r_out: usize,
) -> BTreeSet<u32> {
    lattice
        .qubits()
        .filter(|&q| {
            let (dy, dx) = lattice.offset_from_plaquette(q, center);
            let d = dy.abs().max(dx.abs());
            d >= 2 * r_in as i64 && d <= 2 * r_out as i64 - 1
        })
        .collect()
}

/// Build the Fig-1a style annulus partition. Fails when the geometry cannot
/// honor the invariants (zero width, wrapping, empty sector, A adjacent to C).
pub fn build_annulus_partition(
    lattice: &Lattice,
    center: (usize, usize),
    r_in: usize,
    r_out: usize,
    arc_spec: &ArcSpec,
) -> Result<AnnulusPartition, LatticeError> {
    if r_in < 1 {
        return Err(LatticeError::InnerRadiusTooSmall(r_in));
    }
    if r_out <= r_in {
        return Err(LatticeError::ZeroWidthAnnulus { r_in, r_out });
    }
    if lattice.topology() == Topology::Torus && 2 * r_out >= lattice.rows().min(lattice.cols()) {
        return Err(LatticeError::AnnulusWraps {
            r_out,
            rows: lattice.rows(),
            cols: lattice.cols(),
        });
    }
    let annulus = annulus_qubits(lattice, center, r_in, r_out);
    let mut a = BTreeSet::new();
    let mut b1 = BTreeSet::new();
    let mut b2 = BTreeSet::new();
    let mut c = BTreeSet::new();
    for &q in &annulus {
        let (dy, dx) = lattice.offset_from_plaquette(q, center);
        match arc_spec.classify(dy, dx) {
            Sector::A => a.insert(q),
            Sector::B1 => b1.insert(q),
            Sector::C => c.insert(q),
            Sector::B2 => b2.insert(q),
        };
    }
    for (name, set) in [("A", &a), ("B1", &b1), ("C", &c), ("B2", &b2)] {
        if set.is_empty() {
            return Err(LatticeError::EmptySector(name));
        }
    }
    if lattice.distance(&a, &c) < 2 {
        return Err(LatticeError::SectorsAdjacent);
    }
    Ok(AnnulusPartition {
        a: Region { label: "A".into(), qubits: a },
        b1: Region { label: "B1".into(), qubits: b1 },
        b2: Region { label: "B2".into(), qubits: b2 },
        c: Region { label: "C".into(), qubits: c },
        center,
        inner_radius: r_in,
        outer_radius: r_out,
    })
}

/// An ordered list of subsystems forming an open chain: consecutive regions
/// adjacent, non-consecutive ones at lattice distance ≥ 2.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChainPartition {
    pub subsystems: Vec<Region>,
    /// True when the first and last subsystems touch; the Fig-5 style cut
    /// leaves this false, and callers treating the chain as open rely on it.
    pub wrap_adjacent: bool,
}

/// Check the chain-like property: regions disjoint and nonempty, consecutive
/// ones adjacent, non-consecutive ones at distance ≥ 2.
pub fn is_chain_like(lattice: &Lattice, regions: &[Region]) -> Result<bool, LatticeError> {
    for (i, r) in regions.iter().enumerate() {
        if r.is_empty() {
            return Err(LatticeError::EmptyRegion(r.label.clone()));
        }
        for s in regions.iter().skip(i + 1) {
            if !r.is_disjoint(s) {
                return Err(LatticeError::RegionsOverlap(r.label.clone(), s.label.clone()));
            }
        }
    }
    for i in 0..regions.len() {
        for j in i + 1..regions.len() {
            let d = lattice.distance(&regions[i].qubits, &regions[j].qubits);
            if j == i + 1 {
                if d != 1 {
                    return Ok(false);
                }
            } else if d < 2 {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Cut an annulus into the Fig-5 open chain: n slabs by doubled x-offset, the
/// two end caps covering the hole-free columns and the middle slabs (each with
/// a top and bottom component) splitting the hole span.
pub fn chain_partition(
    lattice: &Lattice,
    annulus: &AnnulusPartition,
    n: usize,
) -> Result<ChainPartition, LatticeError> {
    if n < 3 {
        return Err(LatticeError::ChainTooCoarse(n));
    }
    let r_in = annulus.inner_radius as i64;
    // middle slabs live on the hole-span columns [-(2·r_in−1), 2·r_in−1]
    let span = 4 * r_in - 1;
    let middle = n - 2;
    if span < 2 * middle as i64 {
        return Err(LatticeError::ChainTooFine {
            n,
            needed: 2 * middle + 2,
            available: span as usize + 2,
        });
    }
    // cut positions over the hole span, each middle slab at least 2 wide
    let mut cuts = Vec::with_capacity(n - 1);
    cuts.push(-(2 * r_in) + 1); // first cut: everything strictly left is X1
    for k in 1..middle {
        cuts.push(-(2 * r_in) + 1 + (span * k as i64) / middle as i64);
    }
    cuts.push(2 * r_in); // last cut: everything at or right of it is Xn
    let mut sets: Vec<BTreeSet<u32>> = vec![BTreeSet::new(); n];
    for &q in &annulus.qubits() {
        let (_, dx) = lattice.offset_from_plaquette(q, annulus.center);
        let idx = cuts.iter().filter(|&&cut| dx >= cut).count();
        sets[idx].insert(q);
    }
    let subsystems: Vec<Region> = sets
        .into_iter()
        .enumerate()
        .map(|(i, qubits)| Region {
            label: format!("X{}", i + 1),
            qubits,
        })
        .collect();
    for r in &subsystems {
        if r.is_empty() {
            return Err(LatticeError::EmptyRegion(r.label.clone()));
        }
    }
    validate_chain(lattice, &subsystems)?;
    let wrap_adjacent =
        lattice.distance(&subsystems[0].qubits, &subsystems[n - 1].qubits) <= 1;
    Ok(ChainPartition { subsystems, wrap_adjacent })
}

fn validate_chain(lattice: &Lattice, subsystems: &[Region]) -> Result<(), LatticeError> {
    let n = subsystems.len();
    for i in 0..n {
        for j in i + 1..n {
            let d = lattice.distance(&subsystems[i].qubits, &subsystems[j].qubits);
            if j > i + 1 && d < 2 {
                return Err(LatticeError::ChainNotChainLike(i + 1, j + 1));
            }
        }
    }
    Ok(())
}

/// The 12-qubit staircase ring: the thinnest lattice annulus supporting both
/// a closed Z loop and a closed X loop around a single-plaquette hole. The
/// qubits come back in cyclic order around the hole at `center`.
pub fn staircase_ring(lattice: &Lattice, center: (usize, usize)) -> Result<Vec<u32>, LatticeError> {
    if lattice.topology() != Topology::Torus {
        return Err(LatticeError::RequiresTorus);
    }
    if lattice.rows() < 6 || lattice.cols() < 6 {
        return Err(LatticeError::RingDoesNotFit(
            "staircase ring needs at least a 6x6 torus".into(),
        ));
    }
    let (r, c) = center;
    let (rows, cols) = (lattice.rows(), lattice.cols());
    let rm1 = (r + rows - 1) % rows;
    let cm1 = (c + cols - 1) % cols;
    Ok(vec![
        lattice.v_index(rm1, c),
        lattice.h_index(rm1, c),
        lattice.v_index(rm1, c + 1),
        lattice.h_index(r, c + 1),
        lattice.v_index(r, c + 2),
        lattice.h_index(r + 1, c + 1),
        lattice.v_index(r + 1, c + 1),
        lattice.h_index(r + 2, c),
        lattice.v_index(r + 1, c),
        lattice.h_index(r + 1, cm1),
        lattice.v_index(r, cm1),
        lattice.h_index(r, cm1),
    ])
}

/// The 10-qubit rectangular ring around a two-vertex hole (the perimeter of a
/// 3x2 plaquette block). Returned in cyclic order; it supports a closed Z
/// loop only, so it is the minimal single-sector annulus.
pub fn rect_ring(lattice: &Lattice, top_vertex: (usize, usize)) -> Result<Vec<u32>, LatticeError> {
    if lattice.topology() != Topology::Torus {
        return Err(LatticeError::RequiresTorus);
    }
    if lattice.rows() < 6 || lattice.cols() < 5 {
        return Err(LatticeError::RingDoesNotFit(
            "rect ring needs at least a 6x5 torus".into(),
        ));
    }
    let (r, c) = top_vertex;
    let (rows, cols) = (lattice.rows(), lattice.cols());
    let rm1 = (r + rows - 1) % rows;
    let cm1 = (c + cols - 1) % cols;
    Ok(vec![
        lattice.h_index(rm1, cm1),
        lattice.h_index(rm1, c),
        lattice.v_index(rm1, c + 1),
        lattice.v_index(r, c + 1),
        lattice.v_index(r + 1, c + 1),
        lattice.h_index(r + 2, c),
        lattice.h_index(r + 2, cm1),
        lattice.v_index(r + 1, cm1),
        lattice.v_index(r, cm1),
        lattice.v_index(rm1, cm1),
    ])
}

/// Partition a cyclically ordered ring of qubits into an open 5-chain in the
/// Fig-5 mirror style, validating chain-likeness on the lattice.
///
/// `pattern` gives the block index (0-based) of each cyclic position.
pub fn ring_chain_blocks(
    lattice: &Lattice,
    ring: &[u32],
    pattern: &[usize],
) -> Result<ChainPartition, LatticeError> {
    assert_eq!(ring.len(), pattern.len());
    let n = pattern.iter().max().map(|m| m + 1).unwrap_or(0);
    let mut sets: Vec<BTreeSet<u32>> = vec![BTreeSet::new(); n];
    for (&q, &b) in ring.iter().zip(pattern) {
        sets[b].insert(q);
    }
    let subsystems: Vec<Region> = sets
        .into_iter()
        .enumerate()
        .map(|(i, qubits)| Region {
            label: format!("X{}", i + 1),
            qubits,
        })
        .collect();
    for r in &subsystems {
        if r.is_empty() {
            return Err(LatticeError::EmptyRegion(r.label.clone()));
        }
    }
    validate_chain(lattice, &subsystems)?;
    let wrap_adjacent =
        lattice.distance(&subsystems[0].qubits, &subsystems[n - 1].qubits) <= 1;
    Ok(ChainPartition { subsystems, wrap_adjacent })
}

/// Default 5-block mirror pattern for the 12-qubit staircase ring; block
/// boundaries are chosen so staircase-corner pairs never split across
/// non-consecutive blocks.
pub const STAIRCASE_5BLOCKS: [usize; 12] = [0, 1, 1, 2, 3, 3, 4, 3, 3, 2, 1, 1];

/// Default 5-block mirror pattern for the 10-qubit rectangular ring.
pub const RECT_5BLOCKS: [usize; 10] = [0, 1, 2, 3, 4, 4, 4, 3, 2, 1];

/// A/B/C arc tripartition of the staircase ring (positions 0-2 / 3-5 and
/// 9-11 / 6-8), with B mirrored across the hole so A and C stay distance 2.
pub fn staircase_tripartition(lattice: &Lattice, ring: &[u32]) -> Result<(Region, Region, Region), LatticeError> {
    assert_eq!(ring.len(), 12);
    let a = Region::new("A", [ring[0], ring[1], ring[2]]);
    let b = Region::new("B", [ring[3], ring[4], ring[5], ring[9], ring[10], ring[11]]);
    let c = Region::new("C", [ring[6], ring[7], ring[8]]);
    if !is_chain_like(lattice, &[a.clone(), b.clone(), c.clone()])? {
        return Err(LatticeError::SectorsAdjacent);
    }
    Ok((a, b, c))
}

/// JSON document for region and partition serialization.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionDocument {
    pub lattice: LatticeSpec,
    pub regions: Vec<RegionSpec>,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSpec {
    pub rows: usize,
    pub cols: usize,
    pub topology: Topology,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionSpec {
    pub label: String,
    pub qubits: Vec<u32>,
}

impl RegionDocument {
    pub fn new(lattice: &Lattice, regions: &[Region]) -> Self {
        RegionDocument {
            lattice: LatticeSpec {
                rows: lattice.rows(),
                cols: lattice.cols(),
                topology: lattice.topology(),
            },
            regions: regions
                .iter()
                .map(|r| RegionSpec {
                    label: r.label.clone(),
                    qubits: r.sorted_vec(),
                })
                .collect(),
        }
    }

    pub fn build_lattice(&self) -> Lattice {
        Lattice::new(self.lattice.rows, self.lattice.cols, self.lattice.topology)
    }

    pub fn region(&self, label: &str) -> Option<Region> {
        self.regions
            .iter()
            .find(|r| r.label == label)
            .map(|r| Region::new(r.label.clone(), r.qubits.iter().copied()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn torus_counts_and_symmetry() {
        let lat = Lattice::torus(4, 5);
        assert_eq!(lat.qubit_count(), 40);
        for q in lat.qubits() {
            for &nb in lat.neighbors(q) {
                assert!(lat.neighbors(nb).contains(&q), "adjacency not symmetric");
            }
        }
    }

    #[test]
    fn open_plane_drops_wrap_edges() {
        let lat = Lattice::new(3, 3, Topology::OpenPlane);
        assert_eq!(lat.qubit_count(), 2 * 9 - 3 - 3);
    }

    #[test]
    fn quadrant_annulus_tiles_disjointly() {
        let lat = Lattice::torus(12, 12);
        let p = build_annulus_partition(&lat, (5, 5), 2, 5, &ArcSpec::default()).unwrap();
        let total = p.a.len() + p.b1.len() + p.b2.len() + p.c.len();
        assert_eq!(total, annulus_qubits(&lat, (5, 5), 2, 5).len());
        assert!(p.a.is_disjoint(&p.c));
        assert!(p.a.is_disjoint(&p.b1));
        assert!(p.b1.is_disjoint(&p.b2));
    }

    #[test]
    fn zero_width_annulus_rejected() {
        let lat = Lattice::torus(12, 12);
        let err = build_annulus_partition(&lat, (5, 5), 2, 2, &ArcSpec::default()).unwrap_err();
        assert!(matches!(err, LatticeError::ZeroWidthAnnulus { .. }));
    }

    #[test]
    fn thin_annulus_keeps_a_c_separated() {
        // the derived example: 6x6 torus, r_in=1, r_out=2, quadrant arcs
        let lat = Lattice::torus(6, 6);
        let p = build_annulus_partition(&lat, (2, 2), 1, 2, &ArcSpec::default()).unwrap();
        assert!(lat.distance(&p.a.qubits, &p.c.qubits) >= 2);
    }

    #[test]
    fn annulus_wrap_rejected() {
        let lat = Lattice::torus(8, 8);
        let err = build_annulus_partition(&lat, (3, 3), 1, 4, &ArcSpec::default()).unwrap_err();
        assert!(matches!(err, LatticeError::AnnulusWraps { .. }));
    }

    #[test]
    fn chain_partition_tiles_and_is_chain_like() {
        let lat = Lattice::torus(12, 12);
        let ann = build_annulus_partition(&lat, (5, 5), 2, 3, &ArcSpec::default()).unwrap();
        let chain = chain_partition(&lat, &ann, 5).unwrap();
        assert_eq!(chain.subsystems.len(), 5);
        let union: BTreeSet<u32> = chain
            .subsystems
            .iter()
            .flat_map(|r| r.qubits.iter().copied())
            .collect();
        assert_eq!(union, ann.qubits());
        assert!(!chain.wrap_adjacent, "Fig-5 cut should leave X1 and Xn separated");
        assert!(is_chain_like(&lat, &chain.subsystems).unwrap());
    }

    #[test]
    fn chain_partition_n3_matches_abc_shape() {
        let lat = Lattice::torus(12, 12);
        let ann = build_annulus_partition(&lat, (5, 5), 2, 4, &ArcSpec::default()).unwrap();
        let chain = chain_partition(&lat, &ann, 3).unwrap();
        assert_eq!(chain.subsystems.len(), 3);
        assert!(lat.distance(&chain.subsystems[0].qubits, &chain.subsystems[2].qubits) >= 2);
    }

    #[test]
    fn chain_partition_too_fine_errors() {
        let lat = Lattice::torus(12, 12);
        let ann = build_annulus_partition(&lat, (5, 5), 1, 2, &ArcSpec::default()).unwrap();
        // hole span is 3 columns; n-2 middle slabs of width 2 outgrow it fast
        let err = chain_partition(&lat, &ann, ann.qubits().len() + 1).unwrap_err();
        assert!(matches!(err, LatticeError::ChainTooFine { .. }));
    }

    #[test]
    fn staircase_ring_is_a_cycle() {
        let lat = Lattice::torus(8, 8);
        let ring = staircase_ring(&lat, (3, 3)).unwrap();
        assert_eq!(ring.len(), 12);
        let set: BTreeSet<u32> = ring.iter().copied().collect();
        assert_eq!(set.len(), 12);
        for i in 0..12 {
            let a = ring[i];
            let b = ring[(i + 1) % 12];
            assert!(lat.neighbors(a).contains(&b), "ring positions {i} and {} not adjacent", (i + 1) % 12);
        }
    }

    #[test]
    fn staircase_blocks_are_chain_like() {
        let lat = Lattice::torus(8, 8);
        let ring = staircase_ring(&lat, (3, 3)).unwrap();
        let chain = ring_chain_blocks(&lat, &ring, &STAIRCASE_5BLOCKS).unwrap();
        assert_eq!(chain.subsystems.len(), 5);
        assert!(!chain.wrap_adjacent);
    }

    #[test]
    fn rect_ring_blocks_are_chain_like() {
        let lat = Lattice::torus(8, 8);
        let ring = rect_ring(&lat, (3, 3)).unwrap();
        assert_eq!(ring.len(), 10);
        let chain = ring_chain_blocks(&lat, &ring, &RECT_5BLOCKS).unwrap();
        assert_eq!(chain.subsystems.len(), 5);
        assert!(!chain.wrap_adjacent);
    }

    #[test]
    fn region_document_roundtrip() {
        let lat = Lattice::torus(6, 6);
        let p = build_annulus_partition(&lat, (2, 2), 1, 2, &ArcSpec::default()).unwrap();
        let doc = RegionDocument::new(&lat, &[p.a.clone(), p.b(), p.c.clone()]);
        let json = serde_json::to_string(&doc).unwrap();
        let back: RegionDocument = serde_json::from_str(&json).unwrap();
        assert_eq!(back.region("A").unwrap().qubits, p.a.qubits);
    }
}
