//! Dense density-matrix engine: labeled tensor factors, partial trace,
//! entropies, channels, and the Petz recovery map.
//!
//! Every state carries its factor labels and all subsystem addressing goes
//! through them; raw index arithmetic stays inside this module. Matrices are
//! `faer` column-major complex; factor 0 is the most significant digit of the
//! basis index.

use crate::circuits::Circuit;
use faer::complex_native::c64;
use faer::Mat;
use thiserror::Error;

/// Eigenvalue cutoff below which a weight is treated as zero in entropies.
pub const DEFAULT_EIG_CUTOFF: f64 = 1e-12;
/// Relative pseudo-inverse threshold for the Petz map square roots.
pub const DEFAULT_PINV_REL: f64 = 1e-10;
/// Dense states above this qubit-equivalent dimension are refused.
pub const DEFAULT_DENSE_LIMIT_QUBITS: usize = 12;
/// Eager PSD validation only below this dimension (it costs an eigendecomposition).
const PSD_CHECK_DIM: usize = 257;

#[derive(Debug, Error)]
pub enum DenseError {
    #[error("matrix is not hermitian (deviation {0:.3e})")]
    NotHermitian(f64),
    #[error("trace is {0}, expected 1")]
    BadTrace(f64),
    #[error("matrix has eigenvalue {0:.3e} below the PSD tolerance")]
    NotPsd(f64),
    #[error("unknown factor label {0}")]
    UnknownLabel(String),
    #[error("label sets overlap at {0}")]
    OverlappingLabels(String),
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),
    #[error("factor labels differ: {0}")]
    FactorMismatch(String),
    #[error("input state has weight {weight:.3e} outside the channel support")]
    SupportMismatch { weight: f64 },
    #[error("channel output trace drifted by {drift:.3e}, beyond the 1e-8 budget")]
    TraceDrift { drift: f64 },
    #[error("invalid probabilities: {0}")]
    BadProbs(String),
    #[error("kraus operators incomplete: deviation {0:.3e}")]
    KrausIncomplete(f64),
    #[error("state of {qubits} qubit-equivalents exceeds the dense limit {limit}")]
    TooLarge { qubits: usize, limit: usize },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Factor {
    pub label: String,
    pub dim: usize,
}

impl Factor {
    pub fn qubit(label: impl Into<String>) -> Self {
        Factor { label: label.into(), dim: 2 }
    }
}

fn total_dim(factors: &[Factor]) -> usize {
    factors.iter().map(|f| f.dim).product::<usize>().max(1)
}

#[derive(Clone, Debug)]
pub struct DensityMatrix {
    factors: Vec<Factor>,
    mat: Mat<c64>,
}

fn hermitian_deviation(m: &Mat<c64>) -> f64 {
    let mut dev: f64 = 0.0;
    for r in 0..m.nrows() {
        for c in r..m.ncols() {
            let d = m.read(r, c) - m.read(c, r).conj();
            dev = dev.max((d.re * d.re + d.im * d.im).sqrt());
        }
    }
    dev
}

fn trace(m: &Mat<c64>) -> c64 {
    let mut t = c64::new(0.0, 0.0);
    for i in 0..m.nrows() {
        t += m.read(i, i);
    }
    t
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: &Mat<c64>) -> Vec<f64> {
    m.selfadjoint_eigenvalues(faer::Side::Lower)
}

impl DensityMatrix {
    /// Validates Hermiticity (1e−12) and unit trace (1e−10) always, and
    /// positive semidefiniteness eagerly for small matrices; large states get
    /// their spectrum checked wherever eigenvalues are computed anyway.
    pub fn new(factors: Vec<Factor>, mat: Mat<c64>) -> Result<Self, DenseError> {
        let d = total_dim(&factors);
        if mat.nrows() != d || mat.ncols() != d {
            return Err(DenseError::DimMismatch(format!(
                "matrix is {}x{}, factors give {}",
                mat.nrows(),
                mat.ncols(),
                d
            )));
        }
        let herm = hermitian_deviation(&mat);
        if herm > 1e-12 {
            return Err(DenseError::NotHermitian(herm));
        }
        let t = trace(&mat);
        if (t.re - 1.0).abs() > 1e-10 || t.im.abs() > 1e-10 {
            return Err(DenseError::BadTrace(t.re));
        }
        if d < PSD_CHECK_DIM {
            let evs = hermitian_eigenvalues(&mat);
            if let Some(&min) = evs.first() {
                if min < -1e-10 {
                    return Err(DenseError::NotPsd(min));
                }
            }
        }
        Ok(DensityMatrix { factors, mat })
    }

    pub fn pure(factors: Vec<Factor>, amplitudes: &[c64]) -> Result<Self, DenseError> {
        let d = total_dim(&factors);
        if amplitudes.len() != d {
            return Err(DenseError::DimMismatch(format!(
                "{} amplitudes for dimension {d}",
                amplitudes.len()
            )));
        }
        let norm: f64 = amplitudes.iter().map(|a| a.re * a.re + a.im * a.im).sum();
        let norm = norm.sqrt();
        let mat = Mat::from_fn(d, d, |r, c| {
            amplitudes[r] * amplitudes[c].conj() * c64::new(1.0 / (norm * norm), 0.0)
        });
        DensityMatrix::new(factors, mat)
    }

    pub fn maximally_mixed(factors: Vec<Factor>) -> Self {
        let d = total_dim(&factors);
        let mat = Mat::from_fn(d, d, |r, c| {
            if r == c {
                c64::new(1.0 / d as f64, 0.0)
            } else {
                c64::new(0.0, 0.0)
            }
        });
        DensityMatrix { factors, mat }
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn labels(&self) -> Vec<&str> {
        self.factors.iter().map(|f| f.label.as_str()).collect()
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &Mat<c64> {
        &self.mat
    }

    fn positions(&self, labels: &[&str]) -> Result<Vec<usize>, DenseError> {
        let mut seen = std::collections::BTreeSet::new();
        labels
            .iter()
            .map(|l| {
                if !seen.insert(*l) {
                    return Err(DenseError::OverlappingLabels((*l).into()));
                }
                self.factors
                    .iter()
                    .position(|f| f.label == *l)
                    .ok_or_else(|| DenseError::UnknownLabel((*l).into()))
            })
            .collect()
    }

    /// Basis-index map for reordering factors: `map[new_index] = old_index`.
    fn index_map(&self, new_order: &[usize]) -> Vec<usize> {
        let dims: Vec<usize> = self.factors.iter().map(|f| f.dim).collect();
        let k = dims.len();
        let d = self.dim();
        // strides of old factor positions
        let mut old_strides = vec![1usize; k];
        for i in (0..k.saturating_sub(1)).rev() {
            old_strides[i] = old_strides[i + 1] * dims[i + 1];
        }
        let mut map = vec![0usize; d];
        let mut digits = vec![0usize; k];
        for (new_idx, slot) in map.iter_mut().enumerate() {
            // decompose new_idx in the new factor order
            let mut rem = new_idx;
            for (j, &old_pos) in new_order.iter().enumerate().rev() {
                let dim = dims[old_pos];
                digits[j] = rem % dim;
                rem /= dim;
            }
            let mut old_idx = 0;
            for (j, &old_pos) in new_order.iter().enumerate() {
                old_idx += digits[j] * old_strides[old_pos];
            }
            *slot = old_idx;
        }
        map
    }

    /// Reorder factors to `new_order` (a permutation of positions).
    pub fn permuted(&self, new_order: &[usize]) -> DensityMatrix {
        let map = self.index_map(new_order);
        let d = self.dim();
        let mat = Mat::from_fn(d, d, |r, c| self.mat.read(map[r], map[c]));
        let factors = new_order.iter().map(|&i| self.factors[i].clone()).collect();
        DensityMatrix { factors, mat }
    }

    /// Permute so the given labels come first (in the given order), the rest
    /// keeping their relative order. Returns the state and the leading block
    /// dimension.
    fn to_front(&self, labels: &[&str]) -> Result<(DensityMatrix, usize), DenseError> {
        let front = self.positions(labels)?;
        let mut order = front.clone();
        for i in 0..self.factors.len() {
            if !front.contains(&i) {
                order.push(i);
            }
        }
        let dim_front: usize = front.iter().map(|&i| self.factors[i].dim).product::<usize>().max(1);
        Ok((self.permuted(&order), dim_front))
    }

    /// Trace out everything but `keep` (kept factors keep their relative order).
    pub fn partial_trace(&self, keep: &[&str]) -> Result<DensityMatrix, DenseError> {
        let keep_pos = self.positions(keep)?;
        let mut order: Vec<usize> = (0..self.factors.len()).filter(|i| keep_pos.contains(i)).collect();
        let traced: Vec<usize> = (0..self.factors.len()).filter(|i| !keep_pos.contains(i)).collect();
        order.extend(&traced);
        let perm = self.permuted(&order);
        let dk: usize = keep_pos.iter().map(|&i| self.factors[i].dim).product::<usize>().max(1);
        let dt = self.dim() / dk;
        let mut mat = Mat::<c64>::zeros(dk, dk);
        for r in 0..dk {
            for c in 0..dk {
                let mut s = c64::new(0.0, 0.0);
                for t in 0..dt {
                    s += perm.mat.read(r * dt + t, c * dt + t);
                }
                mat.write(r, c, s);
            }
        }
        let factors = perm.factors[..keep_pos.len()].to_vec();
        Ok(DensityMatrix { factors, mat })
    }

    /// Marginal on a label set (unsorted union helper).
    pub fn marginal(&self, labels: &[&str]) -> Result<DensityMatrix, DenseError> {
        self.partial_trace(labels)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.mat)
    }

    /// Von Neumann entropy in nats, eigenvalue cutoff `DEFAULT_EIG_CUTOFF`.
    pub fn entropy(&self) -> Result<f64, DenseError> {
        self.entropy_with_cutoff(DEFAULT_EIG_CUTOFF)
    }

    pub fn entropy_with_cutoff(&self, cutoff: f64) -> Result<f64, DenseError> {
        let evs = self.eigenvalues();
        if let Some(&min) = evs.first() {
            if min < -1e-9 {
                return Err(DenseError::NotPsd(min));
            }
        }
        Ok(evs
            .iter()
            .filter(|&&l| l > cutoff)
            .map(|&l| -l * l.ln())
            .sum())
    }

    /// Entropy of the marginal on `labels`.
    pub fn subsystem_entropy(&self, labels: &[&str]) -> Result<f64, DenseError> {
        self.partial_trace(labels)?.entropy()
    }

    /// I(A:C|B) = S(AB) + S(BC) − S(B) − S(ABC).
    pub fn cmi(&self, a: &[&str], b: &[&str], c: &[&str]) -> Result<f64, DenseError> {
        for (x, y) in [(a, b), (a, c), (b, c)] {
            for l in x {
                if y.contains(l) {
                    return Err(DenseError::OverlappingLabels((*l).into()));
                }
            }
        }
        fn join<'a>(xs: &[&[&'a str]]) -> Vec<&'a str> {
            xs.iter().flat_map(|s| s.iter().copied()).collect()
        }
        let s_ab = self.subsystem_entropy(&join(&[a, b]))?;
        let s_bc = self.subsystem_entropy(&join(&[b, c]))?;
        let s_b = self.subsystem_entropy(b)?;
        let s_abc = self.subsystem_entropy(&join(&[a, b, c]))?;
        Ok(s_ab + s_bc - s_b - s_abc)
    }

    pub fn mutual_information(&self, a: &[&str], b: &[&str]) -> Result<f64, DenseError> {
        for l in a {
            if b.contains(l) {
                return Err(DenseError::OverlappingLabels((*l).into()));
            }
        }
        let s_a = self.subsystem_entropy(a)?;
        let s_b = self.subsystem_entropy(b)?;
        let ab: Vec<&str> = a.iter().chain(b.iter()).copied().collect();
        let s_ab = self.subsystem_entropy(&ab)?;
        Ok(s_a + s_b - s_ab)
    }

    /// Conjugate by an operator acting on the given factors: ρ → (O⊗I)ρ(O⊗I)†.
    pub fn conjugated(&self, op: &Mat<c64>, labels: &[&str]) -> Result<DensityMatrix, DenseError> {
        let (perm, ds) = self.to_front(labels)?;
        if op.nrows() != ds || op.ncols() != ds {
            return Err(DenseError::DimMismatch(format!(
                "operator is {}x{}, factors give {ds}",
                op.nrows(),
                op.ncols()
            )));
        }
        let m = self.dim() / ds;
        let left = apply_block_left(op, &perm.mat, m);
        let full = apply_block_right_adjoint(&left, op, m);
        // restore original factor order
        let interim = DensityMatrix { factors: perm.factors.clone(), mat: full };
        let target: Vec<usize> = self
            .factors
            .iter()
            .map(|f| interim.factors.iter().position(|g| g.label == f.label).unwrap())
            .collect();
        Ok(interim.permuted(&target))
    }

    /// Apply a circuit whose gate supports refer to qubits labeled `q{index}`.
    pub fn apply_circuit(&self, circuit: &Circuit) -> Result<DensityMatrix, DenseError> {
        let mut state = self.clone();
        for layer in &circuit.layers {
            for gate in &layer.gates {
                let u = gate.unitary_matrix();
                let labels: Vec<String> = gate.support.iter().map(|q| format!("q{q}")).collect();
                let refs: Vec<&str> = labels.iter().map(String::as_str).collect();
                state = state.conjugated(&u, &refs)?;
            }
        }
        Ok(state)
    }

    /// Convex mixture. Entropy is concave, so S(mix) ≥ Σ p S(ρ).
    pub fn mix(states: &[DensityMatrix], probs: &[f64]) -> Result<DensityMatrix, DenseError> {
        if states.is_empty() || states.len() != probs.len() {
            return Err(DenseError::BadProbs("length mismatch".into()));
        }
        if probs.iter().any(|&p| p < 0.0) {
            return Err(DenseError::BadProbs("negative probability".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(DenseError::BadProbs(format!("probabilities sum to {total}")));
        }
        let first = &states[0];
        let d = first.dim();
        let mut mat = Mat::<c64>::zeros(d, d);
        for (st, &p) in states.iter().zip(probs) {
            if st.labels() != first.labels() || st.dim() != d {
                return Err(DenseError::FactorMismatch(
                    "mixture components must share factors".into(),
                ));
            }
            for r in 0..d {
                for c in 0..d {
                    mat.write(r, c, mat.read(r, c) + st.mat.read(r, c) * c64::new(p, 0.0));
                }
            }
        }
        Ok(DensityMatrix { factors: first.factors.clone(), mat })
    }

    /// Permute `other` into this state's factor order (labels must match).
    pub fn aligned_with(&self, other: &DensityMatrix) -> Result<DensityMatrix, DenseError> {
        let mut order = Vec::with_capacity(self.factors.len());
        for f in &self.factors {
            let pos = other
                .factors
                .iter()
                .position(|g| g.label == f.label && g.dim == f.dim)
                .ok_or_else(|| DenseError::FactorMismatch(f.label.clone()))?;
            order.push(pos);
        }
        if order.len() != other.factors.len() {
            return Err(DenseError::FactorMismatch("label sets differ".into()));
        }
        Ok(other.permuted(&order))
    }

    /// ½‖ρ−ρ'‖₁ via the spectrum of the difference.
    pub fn trace_distance(&self, other: &DensityMatrix) -> Result<f64, DenseError> {
        let o = self.aligned_with(other)?;
        let d = self.dim();
        let diff = Mat::from_fn(d, d, |r, c| self.mat.read(r, c) - o.mat.read(r, c));
        let evs = hermitian_eigenvalues(&diff);
        Ok(0.5 * evs.iter().map(|l| l.abs()).sum::<f64>())
    }

    /// Uhlmann fidelity F = Tr√(√ρ σ √ρ) ∈ [0,1].
    pub fn fidelity(&self, other: &DensityMatrix) -> Result<f64, DenseError> {
        let o = self.aligned_with(other)?;
        let sqrt = matrix_sqrt(&self.mat);
        let inner = &sqrt * &o.mat * &sqrt;
        let evs = hermitian_eigenvalues(&inner.to_owned());
        Ok(evs.iter().map(|&l| l.max(0.0).sqrt()).sum())
    }

    pub fn tensor(&self, other: &DensityMatrix) -> DensityMatrix {
        let d1 = self.dim();
        let d2 = other.dim();
        let mat = Mat::from_fn(d1 * d2, d1 * d2, |r, c| {
            self.mat.read(r / d2, c / d2) * other.mat.read(r % d2, c % d2)
        });
        let mut factors = self.factors.clone();
        factors.extend(other.factors.iter().cloned());
        DensityMatrix { factors, mat }
    }

    /// Qubit-equivalent size guard for desk-scale work.
    pub fn check_dense_limit(&self, limit_qubits: usize) -> Result<(), DenseError> {
        let qubits = (self.dim() as f64).log2().ceil() as usize;
        if qubits > limit_qubits {
            return Err(DenseError::TooLarge { qubits, limit: limit_qubits });
        }
        Ok(())
    }
}

/// `(O ⊗ I_m) · A` where the leading factor block of `A`'s rows has dimension
/// `O.ncols()`.
fn apply_block_left(op: &Mat<c64>, a: &Mat<c64>, m: usize) -> Mat<c64> {
    let (s_out, s_in) = (op.nrows(), op.ncols());
    let cols = a.ncols();
    let mut out = Mat::<c64>::zeros(s_out * m, cols);
    for i in 0..s_out {
        for t in 0..s_in {
            let w = op.read(i, t);
            if w.re == 0.0 && w.im == 0.0 {
                continue;
            }
            for r in 0..m {
                let (or, ar) = (i * m + r, t * m + r);
                for c in 0..cols {
                    out.write(or, c, out.read(or, c) + w * a.read(ar, c));
                }
            }
        }
    }
    out
}

/// `A · (O ⊗ I_m)†` acting on the column index.
fn apply_block_right_adjoint(a: &Mat<c64>, op: &Mat<c64>, m: usize) -> Mat<c64> {
    let (s_out, s_in) = (op.nrows(), op.ncols());
    let rows = a.nrows();
    let mut out = Mat::<c64>::zeros(rows, s_out * m);
    for j in 0..s_out {
        for t in 0..s_in {
            let w = op.read(j, t).conj();
            if w.re == 0.0 && w.im == 0.0 {
                continue;
            }
            for c in 0..m {
                let (oc, ac) = (j * m + c, t * m + c);
                for r in 0..rows {
                    out.write(r, oc, out.read(r, oc) + a.read(r, ac) * w);
                }
            }
        }
    }
    out
}

/// Hermitian PSD square root via eigendecomposition (negative dust clipped).
pub fn matrix_sqrt(m: &Mat<c64>) -> Mat<c64> {
    let evd = m.selfadjoint_eigendecomposition(faer::Side::Lower);
    let u = evd.u();
    let s = evd.s();
    let d = m.nrows();
    let mut out = Mat::<c64>::zeros(d, d);
    for k in 0..d {
        let l = s.column_vector().read(k).re.max(0.0).sqrt();
        if l == 0.0 {
            continue;
        }
        for r in 0..d {
            for c in 0..d {
                out.write(r, c, out.read(r, c) + u.read(r, k) * u.read(c, k).conj() * c64::new(l, 0.0));
            }
        }
    }
    out
}

/// Pseudo-inverse square root with relative eigenvalue threshold; also
/// returns the support projector.
pub fn matrix_inv_sqrt(m: &Mat<c64>, rel_threshold: f64) -> (Mat<c64>, Mat<c64>) {
    let evd = m.selfadjoint_eigendecomposition(faer::Side::Lower);
    let u = evd.u();
    let s = evd.s();
    let d = m.nrows();
    let lmax = (0..d).fold(0.0f64, |acc, k| acc.max(s.column_vector().read(k).re));
    let thresh = rel_threshold * lmax;
    let mut inv = Mat::<c64>::zeros(d, d);
    let mut proj = Mat::<c64>::zeros(d, d);
    for k in 0..d {
        let l = s.column_vector().read(k).re;
        if l <= thresh {
            continue;
        }
        let w = 1.0 / l.sqrt();
        for r in 0..d {
            for c in 0..d {
                let uv = u.read(r, k) * u.read(c, k).conj();
                inv.write(r, c, inv.read(r, c) + uv * c64::new(w, 0.0));
                proj.write(r, c, proj.read(r, c) + uv);
            }
        }
    }
    (inv, proj)
}

/// A completely positive map given by Kraus operators from the `in_labels`
/// factors to the `out_factors`.
#[derive(Clone, Debug)]
pub struct QuantumChannel {
    pub in_labels: Vec<String>,
    pub in_dims: Vec<usize>,
    pub out_factors: Vec<Factor>,
    pub kraus: Vec<Mat<c64>>,
    /// Projector onto the input support on which ΣK†K must act as identity;
    /// `None` means the full input space.
    pub support_projector: Option<Mat<c64>>,
}

impl QuantumChannel {
    pub fn in_dim(&self) -> usize {
        self.in_dims.iter().product::<usize>().max(1)
    }

    pub fn out_dim(&self) -> usize {
        total_dim(&self.out_factors)
    }

    /// Identity channel on the given factors.
    pub fn identity(factors: Vec<Factor>) -> Self {
        let d = total_dim(&factors);
        let eye = Mat::from_fn(d, d, |r, c| {
            if r == c {
                c64::new(1.0, 0.0)
            } else {
                c64::new(0.0, 0.0)
            }
        });
        QuantumChannel {
            in_labels: factors.iter().map(|f| f.label.clone()).collect(),
            in_dims: factors.iter().map(|f| f.dim).collect(),
            out_factors: factors,
            kraus: vec![eye],
            support_projector: None,
        }
    }

    /// Unitary conjugation as a channel.
    pub fn unitary(u: Mat<c64>, factors: Vec<Factor>) -> Self {
        QuantumChannel {
            in_labels: factors.iter().map(|f| f.label.clone()).collect(),
            in_dims: factors.iter().map(|f| f.dim).collect(),
            out_factors: factors,
            kraus: vec![u],
            support_projector: None,
        }
    }

    /// Partial trace over `drop` as a channel on the `from` factors.
    pub fn trace_out(from: Vec<Factor>, drop: &[&str]) -> Self {
        let keep: Vec<Factor> = from.iter().filter(|f| !drop.contains(&f.label.as_str())).cloned().collect();
        let dk = total_dim(&keep);
        let dt: usize = from
            .iter()
            .filter(|f| drop.contains(&f.label.as_str()))
            .map(|f| f.dim)
            .product::<usize>()
            .max(1);
        // kraus ops assume [keep..., drop...] input order; callers go through
        // apply(), which permutes by in_labels first.
        let mut in_labels: Vec<String> = keep.iter().map(|f| f.label.clone()).collect();
        let mut in_dims: Vec<usize> = keep.iter().map(|f| f.dim).collect();
        for f in from.iter().filter(|f| drop.contains(&f.label.as_str())) {
            in_labels.push(f.label.clone());
            in_dims.push(f.dim);
        }
        let kraus = (0..dt)
            .map(|t| {
                Mat::from_fn(dk, dk * dt, |r, c| {
                    if c == r * dt + t {
                        c64::new(1.0, 0.0)
                    } else {
                        c64::new(0.0, 0.0)
                    }
                })
            })
            .collect();
        QuantumChannel {
            in_labels,
            in_dims,
            out_factors: keep,
            kraus,
            support_projector: None,
        }
    }

    /// Deviation of ΣK†K from the identity (or the support projector).
    pub fn completeness_deviation(&self) -> f64 {
        let din = self.in_dim();
        let mut acc = Mat::<c64>::zeros(din, din);
        for k in &self.kraus {
            let p = k.adjoint() * k;
            for r in 0..din {
                for c in 0..din {
                    acc.write(r, c, acc.read(r, c) + p.read(r, c));
                }
            }
        }
        let mut dev: f64 = 0.0;
        for r in 0..din {
            for c in 0..din {
                let want = match &self.support_projector {
                    Some(p) => p.read(r, c),
                    None => {
                        if r == c {
                            c64::new(1.0, 0.0)
                        } else {
                            c64::new(0.0, 0.0)
                        }
                    }
                };
                let d = acc.read(r, c) - want;
                dev = dev.max((d.re * d.re + d.im * d.im).sqrt());
            }
        }
        dev
    }

    /// Apply to a state: the `in_labels` factors are consumed and replaced by
    /// the channel's output factors. Output is symmetrized and its trace
    /// drift must stay within 1e−8.
    pub fn apply(&self, state: &DensityMatrix) -> Result<DensityMatrix, DenseError> {
        let labels: Vec<&str> = self.in_labels.iter().map(String::as_str).collect();
        if let Some(proj) = &self.support_projector {
            let marg = state.partial_trace(&labels)?;
            let mut inside = 0.0;
            for r in 0..marg.dim() {
                for c in 0..marg.dim() {
                    inside += (proj.read(r, c) * marg.mat.read(c, r)).re;
                }
            }
            let outside = 1.0 - inside;
            if outside > 1e-8 {
                return Err(DenseError::SupportMismatch { weight: outside });
            }
        }
        let (perm, ds) = state.to_front(&labels)?;
        if ds != self.in_dim() {
            return Err(DenseError::DimMismatch(format!(
                "channel input dim {} vs state block {ds}",
                self.in_dim()
            )));
        }
        let m = state.dim() / ds;
        let dout = self.out_dim();
        let mut acc = Mat::<c64>::zeros(dout * m, dout * m);
        for k in &self.kraus {
            let left = apply_block_left(k, &perm.mat, m);
            let full = apply_block_right_adjoint(&left, k, m);
            for r in 0..dout * m {
                for c in 0..dout * m {
                    acc.write(r, c, acc.read(r, c) + full.read(r, c));
                }
            }
        }
        // hermitize, then renormalize within the drift budget
        let dtot = dout * m;
        let mut sym = Mat::<c64>::zeros(dtot, dtot);
        for r in 0..dtot {
            for c in 0..dtot {
                let v = (acc.read(r, c) + acc.read(c, r).conj()) * c64::new(0.5, 0.0);
                sym.write(r, c, v);
            }
        }
        let t = trace(&sym).re;
        let drift = (t - 1.0).abs();
        if drift > 1e-8 {
            return Err(DenseError::TraceDrift { drift });
        }
        if t != 0.0 {
            let inv = c64::new(1.0 / t, 0.0);
            for r in 0..dtot {
                for c in 0..dtot {
                    sym.write(r, c, sym.read(r, c) * inv);
                }
            }
        }
        let mut factors = self.out_factors.clone();
        factors.extend(perm.factors[self.in_labels.len()..].iter().cloned());
        Ok(DensityMatrix { factors, mat: sym })
    }

    /// `self ∘ other` (apply `other` first). Output labels of `other` must
    /// equal this channel's input labels, in order.
    pub fn compose_after(&self, other: &QuantumChannel) -> Result<QuantumChannel, DenseError> {
        let other_out: Vec<&str> = other.out_factors.iter().map(|f| f.label.as_str()).collect();
        let self_in: Vec<&str> = self.in_labels.iter().map(String::as_str).collect();
        if other_out != self_in {
            return Err(DenseError::FactorMismatch(format!(
                "compose: {other_out:?} feeds {self_in:?}"
            )));
        }
        let mut kraus = Vec::with_capacity(self.kraus.len() * other.kraus.len());
        for ka in &self.kraus {
            for kb in &other.kraus {
                kraus.push((ka * kb).to_owned());
            }
        }
        Ok(QuantumChannel {
            in_labels: other.in_labels.clone(),
            in_dims: other.in_dims.clone(),
            out_factors: self.out_factors.clone(),
            kraus,
            support_projector: other.support_projector.clone(),
        })
    }
}

/// Channels applied in sequence; each stage may touch a different subset of
/// the state's factors, so this composes maps that plain Kraus products
/// cannot without blowing up the lifted operator dimension.
#[derive(Clone, Debug)]
pub struct ChannelPipeline {
    pub stages: Vec<QuantumChannel>,
}

impl ChannelPipeline {
    pub fn single(ch: QuantumChannel) -> Self {
        ChannelPipeline { stages: vec![ch] }
    }

    pub fn then(mut self, ch: QuantumChannel) -> Self {
        self.stages.push(ch);
        self
    }

    pub fn apply(&self, state: &DensityMatrix) -> Result<DensityMatrix, DenseError> {
        let mut cur = state.clone();
        for stage in &self.stages {
            cur = stage.apply(&cur)?;
        }
        Ok(cur)
    }
}

/// The Petz recovery map Φ^ρ_{B→BC}(X) = ρ_BC^{1/2} ρ_B^{−1/2} X ρ_B^{−1/2} ρ_BC^{1/2},
/// built from the reduced state `rho_bc` alone.
pub fn petz_map(rho_bc: &DensityMatrix, b_labels: &[&str]) -> Result<QuantumChannel, DenseError> {
    petz_map_with(rho_bc, b_labels, DEFAULT_PINV_REL)
}

pub fn petz_map_with(
    rho_bc: &DensityMatrix,
    b_labels: &[&str],
    pinv_rel: f64,
) -> Result<QuantumChannel, DenseError> {
    let (bc, db) = rho_bc.to_front(b_labels)?;
    let dbc = bc.dim();
    let dc = dbc / db;
    let rho_b = bc.partial_trace(b_labels)?;
    let (b_inv_sqrt, b_proj) = matrix_inv_sqrt(&rho_b.mat, pinv_rel);
    let bc_sqrt = matrix_sqrt(&bc.mat);
    let kraus = (0..dc)
        .map(|c_idx| {
            // K_c = ρ_BC^{1/2} (ρ_B^{-1/2} ⊗ |c⟩)
            let embed = Mat::from_fn(dbc, db, |row, col| {
                let (b_row, c_row) = (row / dc, row % dc);
                if c_row == c_idx {
                    b_inv_sqrt.read(b_row, col)
                } else {
                    c64::new(0.0, 0.0)
                }
            });
            (&bc_sqrt * &embed).to_owned()
        })
        .collect();
    Ok(QuantumChannel {
        in_labels: b_labels.iter().map(|s| s.to_string()).collect(),
        in_dims: b_labels
            .iter()
            .map(|l| {
                bc.factors
                    .iter()
                    .find(|f| f.label == *l)
                    .map(|f| f.dim)
                    .unwrap_or(1)
            })
            .collect(),
        out_factors: bc.factors.clone(),
        kraus,
        support_projector: Some(b_proj),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn bell_pair(a: &str, b: &str) -> DensityMatrix {
        let amps = [
            c64::new(1.0, 0.0),
            c64::new(0.0, 0.0),
            c64::new(0.0, 0.0),
            c64::new(1.0, 0.0),
        ];
        DensityMatrix::pure(vec![Factor::qubit(a), Factor::qubit(b)], &amps).unwrap()
    }

    fn ghz(labels: &[&str]) -> DensityMatrix {
        let d = 1usize << labels.len();
        let mut amps = vec![c64::new(0.0, 0.0); d];
        amps[0] = c64::new(1.0, 0.0);
        amps[d - 1] = c64::new(1.0, 0.0);
        DensityMatrix::pure(labels.iter().map(|l| Factor::qubit(*l)).collect(), &amps).unwrap()
    }

    #[test]
    fn partial_trace_of_bell_is_maximally_mixed() {
        let bell = bell_pair("a", "b");
        let ra = bell.partial_trace(&["a"]).unwrap();
        assert_abs_diff_eq!(ra.mat.read(0, 0).re, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(ra.mat.read(1, 1).re, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(ra.entropy().unwrap(), std::f64::consts::LN_2, epsilon = 1e-10);
        // keep = all leaves the state unchanged
        let full = bell.partial_trace(&["a", "b"]).unwrap();
        assert_abs_diff_eq!(bell.trace_distance(&full).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn entropy_of_pure_and_mixed() {
        let bell = bell_pair("a", "b");
        assert_abs_diff_eq!(bell.entropy().unwrap(), 0.0, epsilon = 1e-10);
        let mm = DensityMatrix::maximally_mixed(vec![Factor::qubit("a"), Factor::qubit("b")]);
        assert_abs_diff_eq!(mm.entropy().unwrap(), (4.0f64).ln(), epsilon = 1e-12);
    }

    #[test]
    fn uniform_orthogonal_mixture_entropy() {
        let factors = vec![Factor { label: "x".into(), dim: 4 }];
        let states: Vec<DensityMatrix> = (0..4)
            .map(|i| {
                let mut amps = vec![c64::new(0.0, 0.0); 4];
                amps[i] = c64::new(1.0, 0.0);
                DensityMatrix::pure(factors.clone(), &amps).unwrap()
            })
            .collect();
        let mixed = DensityMatrix::mix(&states, &[0.25; 4]).unwrap();
        assert_abs_diff_eq!(mixed.entropy().unwrap(), (4.0f64).ln(), epsilon = 1e-12);
    }

    #[test]
    fn mix_rejects_bad_probs() {
        let a = bell_pair("a", "b");
        assert!(DensityMatrix::mix(&[a.clone()], &[0.5]).is_err());
        assert!(DensityMatrix::mix(&[a.clone(), a.clone()], &[0.7, 0.4]).is_err());
        assert!(DensityMatrix::mix(&[a.clone(), a], &[1.2, -0.2]).is_err());
    }

    #[test]
    fn cmi_of_product_state_vanishes() {
        let p = DensityMatrix::maximally_mixed(vec![Factor::qubit("a")])
            .tensor(&DensityMatrix::maximally_mixed(vec![Factor::qubit("b")]))
            .tensor(&DensityMatrix::maximally_mixed(vec![Factor::qubit("c")]));
        let cmi = p.cmi(&["a"], &["b"], &["c"]).unwrap();
        assert_abs_diff_eq!(cmi, 0.0, epsilon = 1e-10);
    }

    #[test]
    fn ghz_cmi_is_log2() {
        let g = ghz(&["a", "b", "c"]);
        let cmi = g.cmi(&["a"], &["b"], &["c"]).unwrap();
        assert_abs_diff_eq!(cmi, std::f64::consts::LN_2, epsilon = 1e-9);
    }

    #[test]
    fn classical_4_site_mixture_is_locally_markov_but_correlated() {
        // ½(|0000⟩⟨0000| + |1111⟩⟨1111|): all chain-like proper CMIs vanish
        // while I(X1:X4) = log 2; both numbers recorded here.
        let labels = ["x1", "x2", "x3", "x4"];
        let d = 16;
        let mut mat = Mat::<c64>::zeros(d, d);
        mat.write(0, 0, c64::new(0.5, 0.0));
        mat.write(15, 15, c64::new(0.5, 0.0));
        let rho = DensityMatrix::new(labels.iter().map(|l| Factor::qubit(*l)).collect(), mat).unwrap();
        let cmi = rho.cmi(&["x1"], &["x2", "x3"], &["x4"]).unwrap();
        assert_abs_diff_eq!(cmi, 0.0, epsilon = 1e-10);
        let mi = rho.mutual_information(&["x1"], &["x4"]).unwrap();
        assert_abs_diff_eq!(mi, std::f64::consts::LN_2, epsilon = 1e-10);
    }

    #[test]
    fn conjugation_by_swap_moves_factors() {
        // swap on (a,b) must exchange the marginals
        let mut amps = vec![c64::new(0.0, 0.0); 4];
        amps[2] = c64::new(1.0, 0.0); // |10>
        let rho = DensityMatrix::pure(vec![Factor::qubit("a"), Factor::qubit("b")], &amps).unwrap();
        let swap = crate::circuits::Gate::new(vec![0, 1], crate::circuits::GateKind::Swap)
            .unwrap()
            .unitary_matrix();
        let out = rho.conjugated(&swap, &["a", "b"]).unwrap();
        let a = out.partial_trace(&["a"]).unwrap();
        assert_abs_diff_eq!(a.mat.read(0, 0).re, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn unitary_invariance_of_entropy() {
        let g = ghz(&["q0", "q1", "q2"]);
        let circ = crate::circuits::single_layer(vec![crate::circuits::Gate::new(
            vec![0, 1],
            crate::circuits::GateKind::Cnot,
        )
        .unwrap()])
        .unwrap();
        let out = g.apply_circuit(&circ).unwrap();
        assert_abs_diff_eq!(out.entropy().unwrap(), 0.0, epsilon = 1e-10);
        // depth-1 gate inside {q0,q1} leaves S(q0q1) unchanged
        let before = g.subsystem_entropy(&["q0", "q1"]).unwrap();
        let after = out.subsystem_entropy(&["q0", "q1"]).unwrap();
        assert_abs_diff_eq!(before, after, epsilon = 1e-10);
    }

    #[test]
    fn trace_distance_extremes() {
        let a = bell_pair("a", "b");
        assert_abs_diff_eq!(a.trace_distance(&a).unwrap(), 0.0, epsilon = 1e-12);
        let mut amps = vec![c64::new(0.0, 0.0); 4];
        amps[1] = c64::new(1.0, 0.0);
        let b = DensityMatrix::pure(vec![Factor::qubit("a"), Factor::qubit("b")], &amps).unwrap();
        assert_abs_diff_eq!(a.trace_distance(&b).unwrap(), 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(a.fidelity(&b).unwrap(), 0.0, epsilon = 1e-8);
        assert_abs_diff_eq!(a.fidelity(&a).unwrap(), 1.0, epsilon = 1e-8);
    }

    #[test]
    fn alignment_is_order_insensitive() {
        let bell = bell_pair("a", "b");
        let flipped = bell.permuted(&[1, 0]);
        assert_abs_diff_eq!(bell.trace_distance(&flipped).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn petz_reconstructs_its_own_marginal() {
        // Φ(ρ_B) = ρ_BC for any state
        let g = ghz(&["a", "b", "c"]);
        let rho_bc = g.partial_trace(&["b", "c"]).unwrap();
        let ch = petz_map(&rho_bc, &["b"]).unwrap();
        assert!(ch.completeness_deviation() < 1e-10);
        let rho_b = rho_bc.partial_trace(&["b"]).unwrap();
        let rebuilt = ch.apply(&rho_b).unwrap();
        assert!(rebuilt.trace_distance(&rho_bc).unwrap() < 1e-10);
    }

    #[test]
    fn petz_recovers_markov_state_and_fails_otherwise() {
        // markov: classical chain ½(|000⟩+|111⟩ diag) — I(A:C|B)=0
        let labels = ["a", "b", "c"];
        let mut mat = Mat::<c64>::zeros(8, 8);
        mat.write(0, 0, c64::new(0.5, 0.0));
        mat.write(7, 7, c64::new(0.5, 0.0));
        let markov = DensityMatrix::new(labels.iter().map(|l| Factor::qubit(*l)).collect(), mat).unwrap();
        let rho_bc = markov.partial_trace(&["b", "c"]).unwrap();
        let ch = petz_map(&rho_bc, &["b"]).unwrap();
        let recovered = ch.apply(&markov.partial_trace(&["a", "b"]).unwrap()).unwrap();
        assert!(recovered.trace_distance(&markov).unwrap() < 1e-8);

        // non-markov: GHZ has I(A:C|B) = log 2; recovery must fail
        let g = ghz(&["a", "b", "c"]);
        let ch = petz_map(&g.partial_trace(&["b", "c"]).unwrap(), &["b"]).unwrap();
        let attempted = ch.apply(&g.partial_trace(&["a", "b"]).unwrap()).unwrap();
        assert!(attempted.trace_distance(&g).unwrap() > 0.1);
    }

    #[test]
    fn petz_rejects_input_outside_support() {
        // reference is |00><00| on (b,c); feed it a b-input orthogonal to that
        let mut amps = vec![c64::new(0.0, 0.0); 4];
        amps[0] = c64::new(1.0, 0.0);
        let ref_bc = DensityMatrix::pure(vec![Factor::qubit("b"), Factor::qubit("c")], &amps).unwrap();
        let ch = petz_map(&ref_bc, &["b"]).unwrap();
        let mut one = Mat::<c64>::zeros(2, 2);
        one.write(1, 1, c64::new(1.0, 0.0));
        let bad = DensityMatrix::new(vec![Factor::qubit("b")], one).unwrap();
        assert!(matches!(
            ch.apply(&bad),
            Err(DenseError::SupportMismatch { .. })
        ));
    }

    #[test]
    fn trace_out_channel_matches_partial_trace() {
        let g = ghz(&["a", "b", "c"]);
        let ch = QuantumChannel::trace_out(
            vec![Factor::qubit("a"), Factor::qubit("b"), Factor::qubit("c")],
            &["c"],
        );
        let out = ch.apply(&g).unwrap();
        let direct = g.partial_trace(&["a", "b"]).unwrap();
        assert!(out.trace_distance(&direct).unwrap() < 1e-12);
    }

    #[test]
    fn identity_channel_is_identity() {
        let g = ghz(&["a", "b"]);
        let ch = QuantumChannel::identity(vec![Factor::qubit("a"), Factor::qubit("b")]);
        let out = ch.apply(&g).unwrap();
        assert!(out.trace_distance(&g).unwrap() < 1e-12);
    }

    #[test]
    fn invalid_states_rejected() {
        let mut m = Mat::<c64>::zeros(2, 2);
        m.write(0, 0, c64::new(0.7, 0.0));
        m.write(1, 1, c64::new(0.7, 0.0));
        assert!(matches!(
            DensityMatrix::new(vec![Factor::qubit("a")], m),
            Err(DenseError::BadTrace(_))
        ));
        let mut m = Mat::<c64>::zeros(2, 2);
        m.write(0, 0, c64::new(1.0, 0.0));
        m.write(0, 1, c64::new(0.5, 0.0));
        assert!(matches!(
            DensityMatrix::new(vec![Factor::qubit("a")], m),
            Err(DenseError::NotHermitian(_))
        ));
        let mut m = Mat::<c64>::zeros(2, 2);
        m.write(0, 0, c64::new(1.5, 0.0));
        m.write(1, 1, c64::new(-0.5, 0.0));
        assert!(matches!(
            DensityMatrix::new(vec![Factor::qubit("a")], m),
            Err(DenseError::NotPsd(_))
        ));
    }
}
