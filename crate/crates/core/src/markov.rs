//! Quantum Markov chain analysis over ordered subsystem blocks:
//! locally-Markov detection, the constancy equivalence, canonical Markov
//! chains by iterated Petz extension, and the entropy-difference lemma for
//! reversible channel pairs.

use crate::dense::{petz_map, ChannelPipeline, DenseError, DensityMatrix};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MarkovError {
    #[error("chain needs at least {need} blocks, got {got}")]
    TooFewBlocks { need: usize, got: usize },
    #[error("blocks do not partition the state's factors: {0}")]
    BadBlocks(String),
    #[error("petz extension failed at step k={k}: {source}")]
    PetzStep {
        k: usize,
        #[source]
        source: DenseError,
    },
    #[error("partitions are not related by a single move: {0}")]
    NotMoveRelated(String),
    #[error(transparent)]
    Dense(#[from] DenseError),
}

/// A named block of factor labels.
#[derive(Clone, Debug, Serialize)]
pub struct Block {
    pub name: String,
    pub labels: Vec<String>,
}

impl Block {
    pub fn new(name: impl Into<String>, labels: impl IntoIterator<Item = impl Into<String>>) -> Self {
        Block {
            name: name.into(),
            labels: labels.into_iter().map(Into::into).collect(),
        }
    }
}

/// A density matrix together with an ordered blocking X1..Xn of its factors.
#[derive(Clone, Debug)]
pub struct OrderedChain {
    pub state: DensityMatrix,
    pub blocks: Vec<Block>,
}

impl OrderedChain {
    pub fn new(state: DensityMatrix, blocks: Vec<Block>) -> Result<Self, MarkovError> {
        let mut seen: Vec<&str> = Vec::new();
        for b in &blocks {
            for l in &b.labels {
                if seen.contains(&l.as_str()) {
                    return Err(MarkovError::BadBlocks(format!("label {l} repeated")));
                }
                seen.push(l);
            }
        }
        let mut state_labels = state.labels();
        state_labels.sort_unstable();
        let mut block_labels: Vec<&str> = seen.clone();
        block_labels.sort_unstable();
        if state_labels != block_labels {
            return Err(MarkovError::BadBlocks(format!(
                "blocks cover {block_labels:?} but state has {state_labels:?}"
            )));
        }
        Ok(OrderedChain { state, blocks })
    }

    pub fn n(&self) -> usize {
        self.blocks.len()
    }

    /// Labels of the contiguous block range `[from, to)`.
    pub fn range_labels(&self, from: usize, to: usize) -> Vec<&str> {
        self.blocks[from..to]
            .iter()
            .flat_map(|b| b.labels.iter().map(String::as_str))
            .collect()
    }

    fn range_name(&self, from: usize, to: usize) -> String {
        self.blocks[from..to]
            .iter()
            .map(|b| b.name.as_str())
            .collect::<Vec<_>>()
            .join("")
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TripartitionCmi {
    pub a: String,
    pub b: String,
    pub c: String,
    pub cmi: f64,
    pub full_cover: bool,
}

/// Outcome of a Markov scan at a fixed tolerance.
#[derive(Clone, Debug, Serialize)]
pub struct MarkovReport {
    pub tripartitions: Vec<TripartitionCmi>,
    pub is_locally_markov: Option<bool>,
    pub is_markov: Option<bool>,
    /// Common full-cover CMI value when the spread is within tolerance.
    pub global_cmi_constant: Option<f64>,
    pub full_cover_spread: Option<f64>,
    /// I(X1:Xn), the empty-conditioner pair the chain-like scans never see.
    /// States like ½(|0…0⟩⟨0…0| + |1…1⟩⟨1…1|) are Markov at this scan's
    /// convention (every chain-like B is nonempty) yet keep this at log 2;
    /// both numbers are reported so the discrepancy stays visible.
    pub endpoint_mutual_information: Option<f64>,
    pub tolerance: f64,
}

fn scan(chain: &OrderedChain, proper_only: bool) -> Result<Vec<TripartitionCmi>, MarkovError> {
    let n = chain.n();
    let mut out = Vec::new();
    for start in 0..n {
        for end in (start + 3)..=n {
            let full_cover = start == 0 && end == n;
            if proper_only && full_cover {
                continue;
            }
            for j in (start + 1)..end {
                for k in (j + 1)..end {
                    let a = chain.range_labels(start, j);
                    let b = chain.range_labels(j, k);
                    let c = chain.range_labels(k, end);
                    let cmi = chain.state.cmi(&a, &b, &c)?;
                    out.push(TripartitionCmi {
                        a: chain.range_name(start, j),
                        b: chain.range_name(j, k),
                        c: chain.range_name(k, end),
                        cmi,
                        full_cover,
                    });
                }
            }
        }
    }
    Ok(out)
}

/// Definition-3 scan: every chain-like tripartition, full covers included.
pub fn is_markov_chain(chain: &OrderedChain, tol: f64) -> Result<MarkovReport, MarkovError> {
    if chain.n() < 3 {
        return Err(MarkovError::TooFewBlocks { need: 3, got: chain.n() });
    }
    let trips = scan(chain, false)?;
    let is_markov = trips.iter().all(|t| t.cmi.abs() <= tol);
    let proper_ok = trips
        .iter()
        .filter(|t| !t.full_cover)
        .all(|t| t.cmi.abs() <= tol);
    let (constant, spread) = full_cover_stats(&trips);
    let n = chain.n();
    let endpoint_mi = chain
        .state
        .mutual_information(&chain.range_labels(0, 1), &chain.range_labels(n - 1, n))?;
    Ok(MarkovReport {
        tripartitions: trips,
        is_locally_markov: if chain.n() >= 4 { Some(proper_ok) } else { None },
        is_markov: Some(is_markov),
        global_cmi_constant: if spread.map(|s| s <= tol).unwrap_or(false) {
            constant
        } else {
            None
        },
        full_cover_spread: spread,
        endpoint_mutual_information: Some(endpoint_mi),
        tolerance: tol,
    })
}

/// Appendix-C scan: only tripartitions whose union is a proper subset.
pub fn is_locally_markov(chain: &OrderedChain, tol: f64) -> Result<MarkovReport, MarkovError> {
    if chain.n() < 4 {
        return Err(MarkovError::TooFewBlocks { need: 4, got: chain.n() });
    }
    let trips = scan(chain, true)?;
    let ok = trips.iter().all(|t| t.cmi.abs() <= tol);
    Ok(MarkovReport {
        tripartitions: trips,
        is_locally_markov: Some(ok),
        is_markov: None,
        global_cmi_constant: None,
        full_cover_spread: None,
        endpoint_mutual_information: None,
        tolerance: tol,
    })
}

fn full_cover_stats(trips: &[TripartitionCmi]) -> (Option<f64>, Option<f64>) {
    let vals: Vec<f64> = trips.iter().filter(|t| t.full_cover).map(|t| t.cmi).collect();
    if vals.is_empty() {
        return (None, None);
    }
    let min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mean = vals.iter().sum::<f64>() / vals.len() as f64;
    (Some(mean), Some(max - min))
}

/// All full-cover chain-like CMIs and their spread (Proposition-1 content).
pub fn cmi_constancy_scan(chain: &OrderedChain) -> Result<(Vec<TripartitionCmi>, f64), MarkovError> {
    if chain.n() < 4 {
        return Err(MarkovError::TooFewBlocks { need: 4, got: chain.n() });
    }
    let n = chain.n();
    let mut out = Vec::new();
    for j in 1..n {
        for k in (j + 1)..n {
            let a = chain.range_labels(0, j);
            let b = chain.range_labels(j, k);
            let c = chain.range_labels(k, n);
            let cmi = chain.state.cmi(&a, &b, &c)?;
            out.push(TripartitionCmi {
                a: chain.range_name(0, j),
                b: chain.range_name(j, k),
                c: chain.range_name(k, n),
                cmi,
                full_cover: true,
            });
        }
    }
    let (_, spread) = full_cover_stats(&out);
    Ok((out, spread.unwrap_or(0.0)))
}

#[derive(Clone, Debug)]
pub struct CanonicalChain {
    pub tau: DensityMatrix,
    /// Whether the input passed the locally-Markov premise at the tolerance.
    pub locally_markov_input: bool,
    pub warning: Option<String>,
}

/// The canonical Markov chain: τ₂ = σ_{X1X2}, τ_{k+1} = Φ^σ_{Xk→XkXk+1}(τ_k).
///
/// Runs even when σ is not locally Markov (the recursion is well defined) but
/// flags the output; the indistinguishability and max-entropy certificates
/// are only asserted under the premise.
pub fn canonical_markov_chain(chain: &OrderedChain, tol: f64) -> Result<CanonicalChain, MarkovError> {
    if chain.n() < 4 {
        return Err(MarkovError::TooFewBlocks { need: 4, got: chain.n() });
    }
    let premise = is_locally_markov(chain, tol)?;
    let locally_markov_input = premise.is_locally_markov.unwrap_or(false);
    let n = chain.n();
    let mut tau = chain.state.partial_trace(&chain.range_labels(0, 2))?;
    for k in 2..n {
        // Petz map defined by σ's marginal on X_k X_{k+1}
        let mut labels = chain.range_labels(k - 1, k);
        labels.extend(chain.range_labels(k, k + 1));
        let sigma_pair = chain.state.partial_trace(&labels)?;
        let b_labels = chain.range_labels(k - 1, k);
        let phi = petz_map(&sigma_pair, &b_labels).map_err(|e| MarkovError::PetzStep { k, source: e })?;
        tau = phi.apply(&tau).map_err(|e| MarkovError::PetzStep { k, source: e })?;
    }
    Ok(CanonicalChain {
        tau,
        locally_markov_input,
        warning: if locally_markov_input {
            None
        } else {
            Some("input chain is not locally Markov at tolerance; certificates not asserted".into())
        },
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct IndistinguishabilityReport {
    pub per_subsystem: Vec<(String, f64)>,
    pub max_trace_distance: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub failing_subsystem: Option<String>,
}

/// Proposition-2 check: τ and σ agree on every connected proper subsystem
/// (contiguous block intervals).
pub fn verify_indistinguishability(
    tau: &DensityMatrix,
    chain: &OrderedChain,
    tol: f64,
) -> Result<IndistinguishabilityReport, MarkovError> {
    let n = chain.n();
    let mut per = Vec::new();
    let mut max_d: f64 = 0.0;
    let mut failing = None;
    for i in 0..n {
        for j in (i + 1)..=n {
            if i == 0 && j == n {
                continue;
            }
            let labels = chain.range_labels(i, j);
            let t = tau.partial_trace(&labels)?;
            let s = chain.state.partial_trace(&labels)?;
            let d = t.trace_distance(&s)?;
            if d > max_d {
                max_d = d;
                if d > tol {
                    failing = Some(chain.range_name(i, j));
                }
            }
            per.push((chain.range_name(i, j), d));
        }
    }
    Ok(IndistinguishabilityReport {
        per_subsystem: per,
        max_trace_distance: max_d,
        tolerance: tol,
        pass: max_d <= tol,
        failing_subsystem: failing,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct MaxEntropyReport {
    pub marginal_ab_distance: f64,
    pub marginal_bc_distance: f64,
    pub cmi_tau: f64,
    pub s_tau: f64,
    pub s_sigma: f64,
    pub tolerance: f64,
    pub certified: bool,
}

/// Proposition-4 certificate for a full-cover split `(j, k)`: marginals of τ
/// match σ on AB and BC and I(A:C|B)_τ vanishes, which pins τ as the unique
/// maximum-entropy state with those marginals.
pub fn verify_max_entropy(
    tau: &DensityMatrix,
    chain: &OrderedChain,
    split: (usize, usize),
    tol: f64,
) -> Result<MaxEntropyReport, MarkovError> {
    let (j, k) = split;
    let n = chain.n();
    assert!(0 < j && j < k && k < n, "split must give three nonempty parts");
    let ab = chain.range_labels(0, k);
    let bc = chain.range_labels(j, n);
    let d_ab = tau
        .partial_trace(&ab)?
        .trace_distance(&chain.state.partial_trace(&ab)?)?;
    let d_bc = tau
        .partial_trace(&bc)?
        .trace_distance(&chain.state.partial_trace(&bc)?)?;
    let a = chain.range_labels(0, j);
    let b = chain.range_labels(j, k);
    let c = chain.range_labels(k, n);
    let cmi_tau = tau.cmi(&a, &b, &c)?;
    let s_tau = tau.entropy()?;
    let s_sigma = chain.state.entropy()?;
    Ok(MaxEntropyReport {
        marginal_ab_distance: d_ab,
        marginal_bc_distance: d_bc,
        cmi_tau,
        s_tau,
        s_sigma,
        tolerance: tol,
        certified: d_ab <= tol && d_bc <= tol && cmi_tau.abs() <= tol,
    })
}

/// Tolerance ladder: construction noise must stay below the premise
/// tolerances, and premises below the conclusion tolerance.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct LemmaTolerances {
    pub marginal_premise: f64,
    pub fixed_point_premise: f64,
    pub conclusion: f64,
}

impl Default for LemmaTolerances {
    fn default() -> Self {
        LemmaTolerances {
            marginal_premise: 1e-8,
            fixed_point_premise: 1e-7,
            conclusion: 1e-6,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LemmaOneReport {
    pub marginal_p_distance: f64,
    pub marginal_q_distance: f64,
    pub fixed_point_rho: f64,
    pub fixed_point_rho_prime: f64,
    pub premises_hold: bool,
    pub entropy_difference_error: f64,
    pub mutual_information_error: f64,
    pub tolerances: LemmaTolerances,
    pub pass: bool,
}

/// The entropy-difference lemma: for ρ, ρ' on PQ with matching marginals and
/// channel pipelines R: Q→Q̂, T: Q̂→Q such that T∘R fixes both states,
/// S(ρ) − S(ρ') = S(R(ρ)) − S(R(ρ')); the proof's intermediate identity
/// I(P:Q)_ρ = I(P:Q̂)_{R(ρ)} is verified alongside.
pub fn entropy_difference_lemma_check(
    rho: &DensityMatrix,
    rho_prime: &DensityMatrix,
    r_channel: &ChannelPipeline,
    t_channel: &ChannelPipeline,
    p_labels: &[&str],
    q_labels: &[&str],
    tols: LemmaTolerances,
) -> Result<LemmaOneReport, MarkovError> {
    let d_p = rho
        .partial_trace(p_labels)?
        .trace_distance(&rho_prime.partial_trace(p_labels)?)?;
    let d_q = rho
        .partial_trace(q_labels)?
        .trace_distance(&rho_prime.partial_trace(q_labels)?)?;
    let r_rho = r_channel.apply(rho)?;
    let r_rho_p = r_channel.apply(rho_prime)?;
    let fix_rho = t_channel.apply(&r_rho)?.trace_distance(rho)?;
    let fix_rho_p = t_channel.apply(&r_rho_p)?.trace_distance(rho_prime)?;
    let premises_hold = d_p <= tols.marginal_premise
        && d_q <= tols.marginal_premise
        && fix_rho <= tols.fixed_point_premise
        && fix_rho_p <= tols.fixed_point_premise;

    let s_rho = rho.entropy()?;
    let s_rho_p = rho_prime.entropy()?;
    let s_r_rho = r_rho.entropy()?;
    let s_r_rho_p = r_rho_p.entropy()?;
    let entropy_difference_error = ((s_rho - s_rho_p) - (s_r_rho - s_r_rho_p)).abs();

    // Q̂ is whatever the output carries besides P
    let q_hat: Vec<&str> = r_rho
        .labels()
        .into_iter()
        .filter(|l| !p_labels.contains(l))
        .collect();
    let mi_before = rho.mutual_information(p_labels, q_labels)?;
    let mi_after = r_rho.mutual_information(p_labels, &q_hat)?;
    let mutual_information_error = (mi_before - mi_after).abs();

    Ok(LemmaOneReport {
        marginal_p_distance: d_p,
        marginal_q_distance: d_q,
        fixed_point_rho: fix_rho,
        fixed_point_rho_prime: fix_rho_p,
        premises_hold,
        entropy_difference_error,
        mutual_information_error,
        tolerances: tols,
        pass: premises_hold
            && entropy_difference_error <= tols.conclusion
            && mutual_information_error <= tols.conclusion,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct LocalToGlobalReport {
    pub cmi_rho: f64,
    pub cmi_sigma: f64,
    pub marginal_ab_distance: f64,
    pub marginal_bc_distance: f64,
    pub applicable: bool,
    pub global_trace_distance: f64,
    pub pass: bool,
}

/// Two Markov states with matching AB and BC marginals are globally equal.
/// When the Markov premise fails only the `applicable` flag is raised.
pub fn local_to_global_check(
    rho: &DensityMatrix,
    sigma: &DensityMatrix,
    a: &[&str],
    b: &[&str],
    c: &[&str],
    premise_tol: f64,
    conclusion_tol: f64,
) -> Result<LocalToGlobalReport, MarkovError> {
    let cmi_rho = rho.cmi(a, b, c)?;
    let cmi_sigma = sigma.cmi(a, b, c)?;
    let ab: Vec<&str> = a.iter().chain(b.iter()).copied().collect();
    let bc: Vec<&str> = b.iter().chain(c.iter()).copied().collect();
    let d_ab = rho.partial_trace(&ab)?.trace_distance(&sigma.partial_trace(&ab)?)?;
    let d_bc = rho.partial_trace(&bc)?.trace_distance(&sigma.partial_trace(&bc)?)?;
    let applicable = cmi_rho.abs() <= premise_tol
        && cmi_sigma.abs() <= premise_tol
        && d_ab <= premise_tol
        && d_bc <= premise_tol;
    let global = rho.trace_distance(sigma)?;
    Ok(LocalToGlobalReport {
        cmi_rho,
        cmi_sigma,
        marginal_ab_distance: d_ab,
        marginal_bc_distance: d_bc,
        applicable,
        global_trace_distance: global,
        pass: !applicable || global <= conclusion_tol,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum MoveKind {
    Identical,
    /// Boundaries inside X1X2 and/or X4X5 move; X3 fixed.
    Move1,
    /// Boundaries inside X2X3X4 move; X1 and X5 fixed.
    Move2,
}

fn sorted(labels: &[String]) -> Vec<&str> {
    let mut v: Vec<&str> = labels.iter().map(String::as_str).collect();
    v.sort_unstable();
    v
}

fn union_sorted(blocks: &[Block]) -> Vec<&str> {
    let mut v: Vec<&str> = blocks
        .iter()
        .flat_map(|b| b.labels.iter().map(String::as_str))
        .collect();
    v.sort_unstable();
    v
}

/// Decide whether two 5-block partitions are related by one of the two
/// boundary moves (or identical).
pub fn classify_move(p: &[Block], q: &[Block]) -> Result<MoveKind, MarkovError> {
    if p.len() != 5 || q.len() != 5 {
        return Err(MarkovError::NotMoveRelated(format!(
            "need 5 blocks, got {} and {}",
            p.len(),
            q.len()
        )));
    }
    if union_sorted(p) != union_sorted(q) {
        return Err(MarkovError::NotMoveRelated(
            "partitions cover different label sets".into(),
        ));
    }
    let same = |i: usize| sorted(&p[i].labels) == sorted(&q[i].labels);
    if (0..5).all(same) {
        return Ok(MoveKind::Identical);
    }
    // move 1: X'1X'2 = X1X2 and X'4X'5 = X4X5, X3 fixed
    if same(2)
        && union_sorted(&p[0..2]) == union_sorted(&q[0..2])
        && union_sorted(&p[3..5]) == union_sorted(&q[3..5])
    {
        return Ok(MoveKind::Move1);
    }
    // move 2: X'2X'3X'4 = X2X3X4, X1 and X5 fixed
    if same(0) && same(4) && union_sorted(&p[1..4]) == union_sorted(&q[1..4]) {
        return Ok(MoveKind::Move2);
    }
    let first_mismatch = (0..5).find(|&i| !same(i)).unwrap_or(0);
    Err(MarkovError::NotMoveRelated(format!(
        "first unmatched boundary at block X{}",
        first_mismatch + 1
    )))
}

#[derive(Clone, Debug, Serialize)]
pub struct MovesReport {
    pub move_kind: MoveKind,
    pub locally_markov_first: bool,
    pub locally_markov_second: bool,
    pub trace_distance: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Appendix-F check: the canonical Markov chains built from two move-related
/// partitions of the same annulus state coincide.
pub fn moves_invariance_check(
    state: &DensityMatrix,
    first: Vec<Block>,
    second: Vec<Block>,
    tol: f64,
) -> Result<MovesReport, MarkovError> {
    let move_kind = classify_move(&first, &second)?;
    let chain1 = OrderedChain::new(state.clone(), first)?;
    let chain2 = OrderedChain::new(state.clone(), second)?;
    let c1 = canonical_markov_chain(&chain1, 1e-9)?;
    let c2 = canonical_markov_chain(&chain2, 1e-9)?;
    let d = c1.tau.trace_distance(&c2.tau)?;
    Ok(MovesReport {
        move_kind,
        locally_markov_first: c1.locally_markov_input,
        locally_markov_second: c2.locally_markov_input,
        trace_distance: d,
        tolerance: tol,
        pass: d <= tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::{Factor, QuantumChannel};
    use approx::assert_abs_diff_eq;
    use faer::complex_native::c64;
    use faer::Mat;

    fn classical_pair_state(labels: &[&str]) -> DensityMatrix {
        // ½(|0..0><0..0| + |1..1><1..1|)
        let d = 1usize << labels.len();
        let mut mat = Mat::<c64>::zeros(d, d);
        mat.write(0, 0, c64::new(0.5, 0.0));
        mat.write(d - 1, d - 1, c64::new(0.5, 0.0));
        DensityMatrix::new(labels.iter().map(|l| Factor::qubit(*l)).collect(), mat).unwrap()
    }

    fn ghz_state(labels: &[&str]) -> DensityMatrix {
        let d = 1usize << labels.len();
        let mut amps = vec![c64::new(0.0, 0.0); d];
        amps[0] = c64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        amps[d - 1] = c64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        DensityMatrix::pure(labels.iter().map(|l| Factor::qubit(*l)).collect(), &amps).unwrap()
    }

    fn single_blocks(labels: &[&str]) -> Vec<Block> {
        labels
            .iter()
            .enumerate()
            .map(|(i, l)| Block::new(format!("X{}", i + 1), [*l]))
            .collect()
    }

    #[test]
    fn product_state_is_markov() {
        let p = DensityMatrix::maximally_mixed(vec![Factor::qubit("a")])
            .tensor(&DensityMatrix::maximally_mixed(vec![Factor::qubit("b")]))
            .tensor(&DensityMatrix::maximally_mixed(vec![Factor::qubit("c")]));
        let chain = OrderedChain::new(p, single_blocks(&["a", "b", "c"])).unwrap();
        let report = is_markov_chain(&chain, 1e-9).unwrap();
        assert_eq!(report.is_markov, Some(true));
        assert!(report.tripartitions.iter().all(|t| t.cmi.abs() < 1e-10));
    }

    #[test]
    fn ghz_three_blocks_not_markov() {
        let g = ghz_state(&["a", "b", "c"]);
        let chain = OrderedChain::new(g, single_blocks(&["a", "b", "c"])).unwrap();
        let report = is_markov_chain(&chain, 1e-9).unwrap();
        assert_eq!(report.is_markov, Some(false));
        let full = report.tripartitions.iter().find(|t| t.full_cover).unwrap();
        assert_abs_diff_eq!(full.cmi, std::f64::consts::LN_2, epsilon = 1e-9);
    }

    #[test]
    fn classical_mixture_markov_convention() {
        // ½(|0000⟩⟨0000| + |1111⟩⟨1111|): every chain-like CMI (nonempty B)
        // vanishes, so the Definition-3 scan says Markov — yet I(X1:X4) stays
        // at log 2. Both numbers are recorded side by side.
        let rho = classical_pair_state(&["a", "b", "c", "d"]);
        let chain = OrderedChain::new(rho, single_blocks(&["a", "b", "c", "d"])).unwrap();
        let loc = is_locally_markov(&chain, 1e-9).unwrap();
        assert_eq!(loc.is_locally_markov, Some(true));
        let full = is_markov_chain(&chain, 1e-9).unwrap();
        assert_eq!(full.is_markov, Some(true));
        assert!(full.full_cover_spread.unwrap() < 1e-10);
        assert_abs_diff_eq!(full.global_cmi_constant.unwrap(), 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(
            full.endpoint_mutual_information.unwrap(),
            std::f64::consts::LN_2,
            epsilon = 1e-9
        );
    }

    #[test]
    fn locally_markov_needs_four_blocks() {
        let g = ghz_state(&["a", "b", "c"]);
        let chain = OrderedChain::new(g, single_blocks(&["a", "b", "c"])).unwrap();
        assert!(matches!(
            is_locally_markov(&chain, 1e-9),
            Err(MarkovError::TooFewBlocks { need: 4, .. })
        ));
    }

    #[test]
    fn proposition1_equivalence_on_samples() {
        // locally Markov <=> constant full-cover CMI, checked both ways
        let states = [
            classical_pair_state(&["a", "b", "c", "d"]),
            ghz_state(&["a", "b", "c", "d"]),
            cluster_state(&["a", "b", "c", "d"]),
            DensityMatrix::maximally_mixed(vec![Factor::qubit("a")])
                .tensor(&DensityMatrix::maximally_mixed(vec![Factor::qubit("b")]))
                .tensor(&DensityMatrix::maximally_mixed(vec![Factor::qubit("c")]))
                .tensor(&DensityMatrix::maximally_mixed(vec![Factor::qubit("d")])),
        ];
        for state in states {
            let chain = OrderedChain::new(state, single_blocks(&["a", "b", "c", "d"])).unwrap();
            let loc = is_locally_markov(&chain, 1e-7).unwrap().is_locally_markov.unwrap();
            let (_, spread) = cmi_constancy_scan(&chain).unwrap();
            assert_eq!(loc, spread <= 1e-7, "Prop 1 equivalence failed (spread {spread})");
        }
    }

    fn cluster_state(labels: &[&str]) -> DensityMatrix {
        // linear cluster: amplitudes 2^{-n/2} (−1)^{Σ x_i x_{i+1}}
        let n = labels.len();
        let d = 1usize << n;
        let norm = 1.0 / (d as f64).sqrt();
        let amps: Vec<c64> = (0..d)
            .map(|x| {
                let mut sign = 0;
                for i in 0..n - 1 {
                    sign ^= ((x >> (n - 1 - i)) & (x >> (n - 2 - i))) & 1;
                }
                c64::new(if sign == 1 { -norm } else { norm }, 0.0)
            })
            .collect();
        DensityMatrix::pure(labels.iter().map(|l| Factor::qubit(*l)).collect(), &amps).unwrap()
    }

    #[test]
    fn cluster_chain_nonconstant_and_not_locally_markov() {
        let g = cluster_state(&["a", "b", "c", "d"]);
        let chain = OrderedChain::new(g, single_blocks(&["a", "b", "c", "d"])).unwrap();
        let loc = is_locally_markov(&chain, 1e-7).unwrap();
        assert_eq!(loc.is_locally_markov, Some(false));
        let (_, spread) = cmi_constancy_scan(&chain).unwrap();
        assert!(
            spread > 0.1,
            "cluster full covers should have nonconstant CMI, spread {spread}"
        );
    }

    #[test]
    fn canonical_chain_of_markov_state_is_fixed_point() {
        let rho = classical_pair_state(&["a", "b", "c", "d"]);
        let chain = OrderedChain::new(rho.clone(), single_blocks(&["a", "b", "c", "d"])).unwrap();
        let canonical = canonical_markov_chain(&chain, 1e-8).unwrap();
        assert!(canonical.locally_markov_input);
        // for this classical state the recursion reproduces it exactly
        let d = canonical.tau.trace_distance(&rho).unwrap();
        assert!(d < 1e-8, "tau differs from sigma by {d}");
        assert_abs_diff_eq!(
            canonical.tau.entropy().unwrap(),
            rho.entropy().unwrap(),
            epsilon = 1e-8
        );
    }

    #[test]
    fn canonical_chain_passes_certificates() {
        let rho = classical_pair_state(&["a", "b", "c", "d"]);
        let chain = OrderedChain::new(rho, single_blocks(&["a", "b", "c", "d"])).unwrap();
        let canonical = canonical_markov_chain(&chain, 1e-8).unwrap();
        let ind = verify_indistinguishability(&canonical.tau, &chain, 1e-7).unwrap();
        assert!(ind.pass, "max marginal distance {}", ind.max_trace_distance);
        let tau_chain = OrderedChain::new(canonical.tau.clone(), chain.blocks.clone()).unwrap();
        let markov = is_markov_chain(&tau_chain, 1e-7).unwrap();
        assert_eq!(markov.is_markov, Some(true));
        let max_ent = verify_max_entropy(&canonical.tau, &chain, (1, 3), 1e-7).unwrap();
        assert!(max_ent.certified);
    }

    #[test]
    fn perturbed_marginal_fails_indistinguishability() {
        let rho = classical_pair_state(&["a", "b", "c", "d"]);
        let chain = OrderedChain::new(rho, single_blocks(&["a", "b", "c", "d"])).unwrap();
        // adversarial tau with wrong proper marginals
        let tau = DensityMatrix::maximally_mixed(
            ["a", "b", "c", "d"].iter().map(|l| Factor::qubit(*l)).collect(),
        );
        let ind = verify_indistinguishability(&tau, &chain, 1e-7).unwrap();
        assert!(!ind.pass);
        assert!(ind.failing_subsystem.is_some());
    }

    #[test]
    fn rejected_max_entropy_candidate() {
        // GHZ has the right marginals only for itself; a candidate with
        // I(A:C|B) > 0 must not be certified
        let g = ghz_state(&["a", "b", "c", "d"]);
        let chain = OrderedChain::new(g.clone(), single_blocks(&["a", "b", "c", "d"])).unwrap();
        let rep = verify_max_entropy(&g, &chain, (1, 3), 1e-7).unwrap();
        assert!(!rep.certified);
        assert!(rep.cmi_tau > 0.1);
    }

    #[test]
    fn lemma_one_identity_channels() {
        let rho = classical_pair_state(&["p", "q"]);
        let rho_prime = {
            // same marginals, different joint: anticorrelated pair
            let mut mat = Mat::<c64>::zeros(4, 4);
            mat.write(1, 1, c64::new(0.5, 0.0));
            mat.write(2, 2, c64::new(0.5, 0.0));
            DensityMatrix::new(vec![Factor::qubit("p"), Factor::qubit("q")], mat).unwrap()
        };
        let r = ChannelPipeline::single(QuantumChannel::identity(vec![Factor::qubit("q")]));
        let t = ChannelPipeline::single(QuantumChannel::identity(vec![Factor::qubit("q")]));
        let rep = entropy_difference_lemma_check(
            &rho,
            &rho_prime,
            &r,
            &t,
            &["p"],
            &["q"],
            LemmaTolerances::default(),
        )
        .unwrap();
        assert!(rep.premises_hold);
        assert!(rep.pass, "entropy err {}", rep.entropy_difference_error);
    }

    #[test]
    fn lemma_one_isometric_embedding() {
        // R embeds q into (q, e) with a fixed ancilla; T traces the ancilla
        let rho = classical_pair_state(&["p", "q"]);
        let mut mat = Mat::<c64>::zeros(4, 4);
        mat.write(1, 1, c64::new(0.5, 0.0));
        mat.write(2, 2, c64::new(0.5, 0.0));
        let rho_prime =
            DensityMatrix::new(vec![Factor::qubit("p"), Factor::qubit("q")], mat).unwrap();
        // kraus: |q,0><q| embedding
        let mut k = Mat::<c64>::zeros(4, 2);
        k.write(0, 0, c64::new(1.0, 0.0));
        k.write(2, 1, c64::new(1.0, 0.0));
        let r = ChannelPipeline::single(QuantumChannel {
            in_labels: vec!["q".into()],
            in_dims: vec![2],
            out_factors: vec![Factor::qubit("q"), Factor::qubit("e")],
            kraus: vec![k],
            support_projector: None,
        });
        let t = ChannelPipeline::single(QuantumChannel::trace_out(
            vec![Factor::qubit("q"), Factor::qubit("e")],
            &["e"],
        ));
        let rep = entropy_difference_lemma_check(
            &rho,
            &rho_prime,
            &r,
            &t,
            &["p"],
            &["q"],
            LemmaTolerances::default(),
        )
        .unwrap();
        assert!(rep.premises_hold);
        assert!(rep.pass);
    }

    #[test]
    fn local_to_global_on_markov_pairs() {
        let rho = classical_pair_state(&["a", "b", "c"]);
        let rep = local_to_global_check(&rho, &rho, &["a"], &["b"], &["c"], 1e-8, 1e-6).unwrap();
        assert!(rep.applicable);
        assert!(rep.pass);
        // non-markov premise: GHZ flagged not applicable
        let g = ghz_state(&["a", "b", "c"]);
        let rep = local_to_global_check(&g, &g, &["a"], &["b"], &["c"], 1e-8, 1e-6).unwrap();
        assert!(!rep.applicable);
    }

    #[test]
    fn move_classification() {
        let p = vec![
            Block::new("X1", ["a"]),
            Block::new("X2", ["b", "f"]),
            Block::new("X3", ["c"]),
            Block::new("X4", ["d"]),
            Block::new("X5", ["e"]),
        ];
        assert_eq!(classify_move(&p, &p).unwrap(), MoveKind::Identical);
        let q = vec![
            Block::new("X1", ["a", "b"]),
            Block::new("X2", ["f"]),
            Block::new("X3", ["c"]),
            Block::new("X4", ["d"]),
            Block::new("X5", ["e"]),
        ];
        assert_eq!(classify_move(&p, &q).unwrap(), MoveKind::Move1);
        let q2 = vec![
            Block::new("X1", ["a"]),
            Block::new("X2", ["b"]),
            Block::new("X3", ["f", "c"]),
            Block::new("X4", ["d"]),
            Block::new("X5", ["e"]),
        ];
        assert_eq!(classify_move(&p, &q2).unwrap(), MoveKind::Move2);
        let bad = vec![
            Block::new("X1", ["a", "c"]),
            Block::new("X2", ["b", "f"]),
            Block::new("X3", ["e"]),
            Block::new("X4", ["d"]),
            Block::new("X5", Vec::<String>::new()),
        ];
        assert!(matches!(
            classify_move(&p, &bad),
            Err(MarkovError::NotMoveRelated(_))
        ));
    }

    #[test]
    fn moves_invariance_on_classical_chain() {
        // 6 qubits so blocks can shift while staying nonempty
        let labels = ["a", "b", "c", "d", "e", "f"];
        let rho = classical_pair_state(&labels);
        let p = vec![
            Block::new("X1", ["a"]),
            Block::new("X2", ["b", "c"]),
            Block::new("X3", ["d"]),
            Block::new("X4", ["e"]),
            Block::new("X5", ["f"]),
        ];
        let q = vec![
            Block::new("X1", ["a", "b"]),
            Block::new("X2", ["c"]),
            Block::new("X3", ["d"]),
            Block::new("X4", ["e"]),
            Block::new("X5", ["f"]),
        ];
        let rep = moves_invariance_check(&rho, p, q, 1e-7).unwrap();
        assert_eq!(rep.move_kind, MoveKind::Move1);
        assert!(rep.pass, "trace distance {}", rep.trace_distance);
    }
}
