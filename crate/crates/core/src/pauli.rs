//! n-qubit Pauli operators with phase tracking.
//!
//! A `PauliString` stores the operator `i^phase · Π_j X_j^{x_j} Z_j^{z_j}` with
//! the X mask applied before the Z mask on every qubit. In this convention
//! `Y = i·XZ`, so a Hermitian Pauli has `phase ≡ |x∧z| (mod 2)`.

use crate::gf2::BitMatrix;
use faer::complex_native::c64;
use faer::Mat;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PauliString {
    n: usize,
    x: Vec<u64>,
    z: Vec<u64>,
    /// Exponent of `i`, mod 4.
    phase: u8,
}

fn words(n: usize) -> usize {
    n.div_ceil(64).max(1)
}

fn parity_and(a: &[u64], b: &[u64]) -> bool {
    a.iter().zip(b).fold(0u32, |acc, (x, y)| acc ^ (x & y).count_ones()) & 1 == 1
}

impl PauliString {
    pub fn identity(n: usize) -> Self {
        PauliString {
            n,
            x: vec![0; words(n)],
            z: vec![0; words(n)],
            phase: 0,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn phase(&self) -> u8 {
        self.phase
    }

    pub fn set_phase(&mut self, phase: u8) {
        self.phase = phase % 4;
    }

    /// Number of Y factors (both bits set), mod 4.
    fn y_count_mod4(&self) -> u8 {
        (self
            .x
            .iter()
            .zip(&self.z)
            .map(|(a, b)| (a & b).count_ones())
            .sum::<u32>()
            % 4) as u8
    }

    /// Sign relative to the positive Hermitian form `i^{#Y} X^x Z^z`; panics
    /// if the operator is not Hermitian.
    pub fn sign(&self) -> i8 {
        let y = self.y_count_mod4();
        if self.phase == y {
            1
        } else if self.phase == (y + 2) % 4 {
            -1
        } else {
            panic!("pauli has imaginary phase {} (y count {y})", self.phase)
        }
    }

    pub fn x_bit(&self, q: usize) -> bool {
        (self.x[q / 64] >> (q % 64)) & 1 == 1
    }

    pub fn z_bit(&self, q: usize) -> bool {
        (self.z[q / 64] >> (q % 64)) & 1 == 1
    }

    pub fn set_x(&mut self, q: usize, v: bool) {
        if v {
            self.x[q / 64] |= 1 << (q % 64);
        } else {
            self.x[q / 64] &= !(1 << (q % 64));
        }
    }

    pub fn set_z(&mut self, q: usize, v: bool) {
        if v {
            self.z[q / 64] |= 1 << (q % 64);
        } else {
            self.z[q / 64] &= !(1 << (q % 64));
        }
    }

    pub fn flip_sign(&mut self) {
        self.phase = (self.phase + 2) % 4;
    }

    pub fn is_identity_op(&self) -> bool {
        self.x.iter().all(|&w| w == 0) && self.z.iter().all(|&w| w == 0)
    }

    /// Qubits where the operator acts nontrivially.
    pub fn support(&self) -> Vec<usize> {
        (0..self.n).filter(|&q| self.x_bit(q) || self.z_bit(q)).collect()
    }

    pub fn weight(&self) -> usize {
        self.x
            .iter()
            .zip(&self.z)
            .map(|(a, b)| (a | b).count_ones() as usize)
            .sum()
    }

    /// Z-string on the given qubits.
    pub fn z_string(n: usize, qubits: &[u32]) -> Self {
        let mut p = Self::identity(n);
        for &q in qubits {
            p.set_z(q as usize, true);
        }
        p
    }

    /// X-string on the given qubits.
    pub fn x_string(n: usize, qubits: &[u32]) -> Self {
        let mut p = Self::identity(n);
        for &q in qubits {
            p.set_x(q as usize, true);
        }
        p
    }

    /// True iff the two operators commute (symplectic product is zero).
    pub fn commutes_with(&self, other: &PauliString) -> bool {
        assert_eq!(self.n, other.n);
        !(parity_and(&self.x, &other.z) ^ parity_and(&self.z, &other.x))
    }

    /// `self · other` with exact phase.
    pub fn mul(&self, other: &PauliString) -> PauliString {
        assert_eq!(self.n, other.n);
        // X^a Z^b · X^c Z^d = (-1)^{b·c} X^{a^c} Z^{b^d}
        let swap = parity_and(&self.z, &other.x);
        let x: Vec<u64> = self.x.iter().zip(&other.x).map(|(a, b)| a ^ b).collect();
        let z: Vec<u64> = self.z.iter().zip(&other.z).map(|(a, b)| a ^ b).collect();
        let phase = (self.phase + other.phase + if swap { 2 } else { 0 }) % 4;
        PauliString { n: self.n, x, z, phase }
    }

    pub fn is_hermitian(&self) -> bool {
        let y_parity = parity_and(&self.x, &self.z);
        (self.phase % 2 == 1) == y_parity
    }

    /// Copy the symplectic bits (x part then z part) into a `BitMatrix` row.
    pub fn write_symplectic_row(&self, m: &mut BitMatrix, row: usize) {
        for q in 0..self.n {
            m.set(row, q, self.x_bit(q));
            m.set(row, self.n + q, self.z_bit(q));
        }
    }

    /// Restriction of the operator to a subset of qubits (new qubit `i` is
    /// `keep[i]`); the phase is carried over unchanged.
    pub fn restrict(&self, keep: &[u32]) -> PauliString {
        let mut p = PauliString::identity(keep.len());
        for (i, &q) in keep.iter().enumerate() {
            p.set_x(i, self.x_bit(q as usize));
            p.set_z(i, self.z_bit(q as usize));
        }
        p.phase = self.phase;
        p
    }

    /// True iff the support is contained in `allowed`.
    pub fn supported_within(&self, allowed: &std::collections::BTreeSet<u32>) -> bool {
        self.support().iter().all(|&q| allowed.contains(&(q as u32)))
    }

    /// Dense matrix of the operator, qubit 0 as the most significant bit.
    ///
    /// `P|c⟩ = i^phase (−1)^{z·c} |c ⊕ x⟩`, so each column holds one entry.
    pub fn to_matrix(&self) -> Mat<c64> {
        assert!(self.n <= 24, "dense pauli limited to small qubit counts");
        let dim = 1usize << self.n;
        let phase = match self.phase {
            0 => c64::new(1.0, 0.0),
            1 => c64::new(0.0, 1.0),
            2 => c64::new(-1.0, 0.0),
            _ => c64::new(0.0, -1.0),
        };
        let mut xm = 0usize;
        let mut zm = 0usize;
        for q in 0..self.n {
            // qubit 0 = most significant bit of the basis index
            let bit = 1usize << (self.n - 1 - q);
            if self.x_bit(q) {
                xm |= bit;
            }
            if self.z_bit(q) {
                zm |= bit;
            }
        }
        let mut m = Mat::<c64>::zeros(dim, dim);
        for col in 0..dim {
            let row = col ^ xm;
            let sgn = if ((col & zm).count_ones() & 1) == 1 { -1.0 } else { 1.0 };
            m.write(row, col, phase * c64::new(sgn, 0.0));
        }
        m
    }
}

impl std::fmt::Display for PauliString {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let p = match self.phase {
            0 => "+",
            1 => "+i",
            2 => "-",
            _ => "-i",
        };
        write!(f, "{p}")?;
        for q in 0..self.n {
            let ch = match (self.x_bit(q), self.z_bit(q)) {
                (false, false) => '.',
                (true, false) => 'X',
                (false, true) => 'Z',
                (true, true) => 'Y',
            };
            write!(f, "{ch}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn multiplication_phases() {
        // X·Z = -Z·X on one qubit
        let x = PauliString::x_string(1, &[0]);
        let z = PauliString::z_string(1, &[0]);
        let xz = x.mul(&z);
        let zx = z.mul(&x);
        assert_eq!(xz.phase(), 0);
        assert_eq!(zx.phase(), 2);
        assert!(!x.commutes_with(&z));
        // Y = i XZ is hermitian
        let mut y = xz.clone();
        y.set_phase(1);
        assert!(y.is_hermitian());
        assert!(!xz.is_hermitian());
        // Y·Y = I
        let yy = y.mul(&y);
        assert!(yy.is_identity_op());
        assert_eq!(yy.phase(), 0);
    }

    #[test]
    fn commutation_overlap_rule() {
        // XX and ZZ commute (even overlap), XI and ZZ anticommute? XI vs ZZ:
        // overlap on qubit 0 only -> anticommute.
        let xx = PauliString::x_string(2, &[0, 1]);
        let zz = PauliString::z_string(2, &[0, 1]);
        let xi = PauliString::x_string(2, &[0]);
        assert!(xx.commutes_with(&zz));
        assert!(!xi.commutes_with(&zz));
    }

    #[test]
    fn dense_matrix_matches_convention() {
        let z = PauliString::z_string(1, &[0]);
        let m = z.to_matrix();
        assert_eq!(m.read(0, 0), c64::new(1.0, 0.0));
        assert_eq!(m.read(1, 1), c64::new(-1.0, 0.0));
        let x = PauliString::x_string(1, &[0]);
        let m = x.to_matrix();
        assert_eq!(m.read(0, 1), c64::new(1.0, 0.0));
        assert_eq!(m.read(1, 0), c64::new(1.0, 0.0));
        // qubit 0 is the most significant bit: Z on qubit 0 of two
        let z0 = PauliString::z_string(2, &[0]);
        let m = z0.to_matrix();
        assert_eq!(m.read(1, 1), c64::new(1.0, 0.0));
        assert_eq!(m.read(2, 2), c64::new(-1.0, 0.0));
    }
}
