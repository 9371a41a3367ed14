//! Ordering cost functions built from single-site entropies and the pairwise
//! mutual-information matrix, together with the block-entropy bounds they
//! descend from.
//!
//! Everything here consumes only the L single-site entropies S_k and the
//! L x L matrix I_{i,j}; no state is ever recomputed. For every cut j and
//! every stride delta in 1..=floor(j/2),
//!
//! ```text
//! S_[1..j]  <=  sum_{k<=j} S_k  -  sum_{k<=j-delta} I_{k,k+delta}
//! ```
//!
//! and the weighted average of those bounds over delta (weights proportional
//! to delta^-2) gives the per-cut estimate I_hat_j. Aggregating the cuts as
//! log2 sum_j 2^(I_hat_j) yields the chain cost; its max-term approximation
//! is within log2(L-1) below it.

use serde::{Deserialize, Serialize};

use crate::entropy::QmiMatrix;
use crate::error::{Error, Result};

/// Orientation of the distance-weighted objective: minimize either
/// +sum I |i-j|^eta (eta > 0 groups correlated pairs) or its negation
/// (used with eta < 0).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn factor(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

impl std::fmt::Display for Sign {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Sign::Plus => "+",
            Sign::Minus => "-",
        })
    }
}

impl std::str::FromStr for Sign {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "+" | "plus" => Ok(Sign::Plus),
            "-" | "minus" => Ok(Sign::Minus),
            other => Err(Error::Parse(format!("sign must be + or -, got `{other}`"))),
        }
    }
}

/// Single-site entropies paired with the mutual-information matrix they were
/// computed alongside. Costs require the von Neumann (alpha = 1) matrix.
#[derive(Clone, Debug)]
pub struct CostInputs {
    single_site: Vec<f64>,
    qmi: QmiMatrix,
}

impl CostInputs {
    pub fn new(single_site: Vec<f64>, qmi: QmiMatrix) -> Result<Self> {
        if qmi.alpha() != 1.0 {
            return Err(Error::AlphaMismatch(qmi.alpha()));
        }
        if single_site.len() != qmi.num_sites() {
            return Err(Error::LengthMismatch(format!(
                "{} entropies for {} sites",
                single_site.len(),
                qmi.num_sites()
            )));
        }
        Ok(Self { single_site, qmi })
    }

    pub fn num_sites(&self) -> usize {
        self.single_site.len()
    }

    /// S_k, 1-based.
    pub fn site_entropy(&self, k: usize) -> f64 {
        self.single_site[k - 1]
    }

    pub fn single_site(&self) -> &[f64] {
        &self.single_site
    }

    pub fn qmi(&self) -> &QmiMatrix {
        &self.qmi
    }

    pub fn relabel(&self, perm: &crate::state::SitePermutation) -> Result<Self> {
        let single_site = (1..=self.num_sites()).map(|p| self.site_entropy(perm.site_at(p))).collect();
        Ok(Self { single_site, qmi: self.qmi.relabel(perm)? })
    }
}

/// Distance-weighted total correlation, summed over ordered pairs (each
/// unordered pair counted twice, matching the unrestricted double sum).
pub fn idist(qmi: &QmiMatrix, eta: f64, sign: Sign) -> f64 {
    let l = qmi.num_sites();
    let mut total = 0.0;
    for i in 1..=l {
        for j in 1..=l {
            if i != j {
                total += qmi.get(i, j) * ((i as f64 - j as f64).abs()).powf(eta);
            }
        }
    }
    sign.factor() * total
}

/// Same objective with each unordered pair counted once.
pub fn idist_unordered(qmi: &QmiMatrix, eta: f64, sign: Sign) -> f64 {
    0.5 * idist(qmi, eta, sign)
}

/// Normalization c_j of the delta^-2 weights, with the largest admissible
/// stride floor(j/2). Defined for j >= 2.
pub fn weights(j: usize) -> Result<(f64, usize)> {
    if j < 2 {
        return Err(Error::WeightUndefined(j));
    }
    let delta_max = j / 2;
    let inv: f64 = (1..=delta_max).map(|d| 1.0 / (d * d) as f64).sum();
    Ok((1.0 / inv, delta_max))
}

/// Upper bound on the block entropy S_[1..j] from stride-delta pair
/// correlations.
pub fn main_bound(inputs: &CostInputs, j: usize, delta: usize) -> Result<f64> {
    let l = inputs.num_sites();
    if j < 2 || j > l - 1 {
        return Err(Error::CutOutOfRange { cut: j, max: l - 1 });
    }
    if delta < 1 || delta > j / 2 {
        return Err(Error::DeltaOutOfRange { j, delta, max: j / 2 });
    }
    let total: f64 = (1..=j).map(|k| inputs.site_entropy(k)).sum();
    let corr: f64 = (1..=j - delta).map(|k| inputs.qmi().get(k, k + delta)).sum();
    Ok(total - corr)
}

/// Weighted average of the stride bounds at cut j. By convention the j = 1
/// value is S_1 (the delta sum is empty there and S_1 already bounds the
/// one-site block), which keeps the cut aggregation total over j = 1..L-1.
pub fn i_hat_j(inputs: &CostInputs, j: usize) -> Result<f64> {
    let l = inputs.num_sites();
    if j < 1 || j > l - 1 {
        return Err(Error::CutOutOfRange { cut: j, max: l - 1 });
    }
    if j == 1 {
        return Ok(inputs.site_entropy(1));
    }
    block_estimate(inputs, 1, j)
}

/// log2 sum_j 2^(I_hat_j) over all cuts, evaluated with the max shifted out
/// so tens-of-bits exponents cannot overflow.
pub fn i_mps(inputs: &CostInputs) -> Result<f64> {
    let values = all_i_hat(inputs)?;
    Ok(logsumexp2(&values))
}

/// max_j I_hat_j: lower approximation of the aggregate, within log2(L-1).
pub fn i_mps_check(inputs: &CostInputs) -> Result<f64> {
    let values = all_i_hat(inputs)?;
    Ok(values.iter().copied().fold(f64::NEG_INFINITY, f64::max))
}

pub fn all_i_hat(inputs: &CostInputs) -> Result<Vec<f64>> {
    (1..inputs.num_sites()).map(|j| i_hat_j(inputs, j)).collect()
}

/// The cut estimate generalized to an arbitrary contiguous block [i, j].
pub fn i_block(inputs: &CostInputs, i: usize, j: usize) -> Result<f64> {
    let l = inputs.num_sites();
    if i < 1 || j > l || i >= j {
        return Err(Error::BadBlock(i, j));
    }
    block_estimate(inputs, i, j)
}

fn block_estimate(inputs: &CostInputs, i: usize, j: usize) -> Result<f64> {
    let len = j - i + 1;
    let (c, delta_max) = weights(len)?;
    let total: f64 = (i..=j).map(|k| inputs.site_entropy(k)).sum();
    let mut corr = 0.0;
    for delta in 1..=delta_max {
        let stride: f64 = (i..=j - delta).map(|k| inputs.qmi().get(k, k + delta)).sum();
        corr += stride / (delta * delta) as f64;
    }
    Ok(total - c * corr)
}

/// Aggregate block estimate of a perfectly balanced binary tree over L = 2^M
/// sites: log2 of the summed 2^(I_hat) over every internal layer's aligned
/// contiguous blocks [2^l (i-1) + 1, 2^l i], l = 1..M-1. (A fixed two-site
/// block per layer would be the alternative reading; the layer-sized blocks
/// are the ones consistent with a balanced tree.)
pub fn i_tree(inputs: &CostInputs) -> Result<f64> {
    let l = inputs.num_sites();
    if l < 4 || !l.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(l));
    }
    let m = l.trailing_zeros() as usize;
    let mut exponents = Vec::new();
    for layer in 1..m {
        let width = 1usize << layer;
        for block in 1..=(l / width) {
            let lo = width * (block - 1) + 1;
            let hi = width * block;
            exponents.push(i_block(inputs, lo, hi)?);
        }
    }
    Ok(logsumexp2(&exponents))
}

/// log2(sum 2^v) with the maximum shifted out.
pub fn logsumexp2(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp2()).sum::<f64>().log2()
}

/// Every cost evaluated on one set of inputs.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CostReport {
    pub idist: f64,
    pub eta: f64,
    pub sign: Sign,
    pub i_hat: Vec<f64>,
    pub i_mps: f64,
    pub i_mps_check: f64,
    /// Rows indexed by j = 2..=L-1, columns by delta = 1..=floor(j/2).
    pub main_bounds: Vec<Vec<f64>>,
    pub i_tree: Option<f64>,
}

impl CostReport {
    pub fn compute(inputs: &CostInputs, eta: f64, sign: Sign, with_tree: bool) -> Result<Self> {
        let l = inputs.num_sites();
        let i_hat = all_i_hat(inputs)?;
        let i_mps = logsumexp2(&i_hat);
        let i_mps_check = i_hat.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if i_mps < i_mps_check - 1e-12 || i_mps > i_mps_check + ((l - 1) as f64).log2() + 1e-9 {
            return Err(Error::Internal(format!(
                "aggregate {i_mps} escapes its sandwich around {i_mps_check}"
            )));
        }
        let mut main_bounds = Vec::new();
        for j in 2..l {
            main_bounds.push((1..=j / 2).map(|d| main_bound(inputs, j, d)).collect::<Result<_>>()?);
        }
        let i_tree = if with_tree { Some(i_tree(inputs)?) } else { None };
        Ok(Self {
            idist: idist(inputs.qmi(), eta, sign),
            eta,
            sign,
            i_hat,
            i_mps,
            i_mps_check,
            main_bounds,
            i_tree,
        })
    }

    pub fn csv_header() -> &'static str {
        "permutation,idist,eta,sign,i_mps,i_mps_check,i_tree"
    }

    pub fn csv_row(&self, permutation: &[usize]) -> String {
        let perm = permutation.iter().map(|p| p.to_string()).collect::<Vec<_>>().join("-");
        let tree = self.i_tree.map_or(String::new(), |t| format!("{t:.16e}"));
        format!(
            "{perm},{:.16e},{},{},{:.16e},{:.16e},{tree}",
            self.idist, self.eta, self.sign, self.i_mps, self.i_mps_check
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entropy::{qmi_matrix, subset_entropy, Alpha};
    use crate::generate;
    use crate::state::SiteSubset;
    use approx::assert_abs_diff_eq;

    fn inputs_for(state: &crate::state::DenseState) -> CostInputs {
        let q = qmi_matrix(state, Alpha::VON_NEUMANN).unwrap();
        let s = (1..=state.num_sites())
            .map(|k| subset_entropy(state, &SiteSubset::single(k), Alpha::VON_NEUMANN).unwrap())
            .collect();
        CostInputs::new(s, q).unwrap()
    }

    fn ghz_inputs(l: usize) -> CostInputs {
        inputs_for(&generate::ghz(l, 2).unwrap())
    }

    #[test]
    fn idist_ghz3_double_sum() {
        let q = ghz_inputs(3);
        assert_abs_diff_eq!(idist(q.qmi(), 2.0, Sign::Plus), 12.0, epsilon = 1e-9);
        assert_abs_diff_eq!(idist_unordered(q.qmi(), 2.0, Sign::Plus), 6.0, epsilon = 1e-9);
        assert_abs_diff_eq!(idist(q.qmi(), 2.0, Sign::Minus), -12.0, epsilon = 1e-9);
    }

    #[test]
    fn idist_of_zero_matrix_vanishes() {
        let q = QmiMatrix::new(4, 1.0, vec![0.0; 16]).unwrap();
        for eta in [-2.0, 1.0, 2.0] {
            assert_eq!(idist(&q, eta, Sign::Plus), 0.0);
        }
    }

    #[test]
    fn weight_values() {
        assert_eq!(weights(2).unwrap(), (1.0, 1));
        assert_eq!(weights(3).unwrap(), (1.0, 1));
        let (c, dmax) = weights(5).unwrap();
        assert_abs_diff_eq!(c, 0.8, epsilon = 1e-15);
        assert_eq!(dmax, 2);
        assert!(weights(1).is_err());
    }

    #[test]
    fn ghz_main_bounds() {
        let q = ghz_inputs(5);
        // j=3, delta=1: 3 - 2 = 1, tight against the 1-bit block entropy.
        assert_abs_diff_eq!(main_bound(&q, 3, 1).unwrap(), 1.0, epsilon = 1e-9);
        // j=4, delta=2: 4 - 2 = 2 >= 1.
        assert_abs_diff_eq!(main_bound(&q, 4, 2).unwrap(), 2.0, epsilon = 1e-9);
        assert!(main_bound(&q, 1, 1).is_err());
        assert!(main_bound(&q, 3, 2).is_err());
    }

    #[test]
    fn product_state_costs_vanish() {
        let inputs = inputs_for(&generate::basis_product(5, 2, &[0, 1, 0, 1, 1]).unwrap());
        for j in 2..5 {
            assert_abs_diff_eq!(i_hat_j(&inputs, j).unwrap(), 0.0, epsilon = 1e-9);
            for d in 1..=j / 2 {
                assert_abs_diff_eq!(main_bound(&inputs, j, d).unwrap(), 0.0, epsilon = 1e-9);
            }
        }
        // Four cuts, all exponents zero.
        assert_abs_diff_eq!(i_mps(&inputs).unwrap(), 2.0, epsilon = 1e-9);
        assert_abs_diff_eq!(i_mps_check(&inputs).unwrap(), 0.0, epsilon = 1e-9);
    }

    #[test]
    fn ghz4_weighted_average_fixture() {
        let q = ghz_inputs(4);
        let i_hat = all_i_hat(&q).unwrap();
        assert_eq!(i_hat.len(), 3);
        for v in &i_hat {
            assert_abs_diff_eq!(*v, 1.0, epsilon = 1e-9);
        }
        assert_abs_diff_eq!(i_mps(&q).unwrap(), 6f64.log2(), epsilon = 1e-9);
        assert_abs_diff_eq!(i_mps_check(&q).unwrap(), 1.0, epsilon = 1e-9);
        // The whole-chain block gives the 1.2-bit weighted estimate.
        assert_abs_diff_eq!(i_block(&q, 1, 4).unwrap(), 1.2, epsilon = 1e-9);
    }

    #[test]
    fn i_hat_is_a_convex_combination_of_main_bounds() {
        let inputs = inputs_for(&generate::random_mps(7, 2, 3, 33).unwrap());
        for j in 2..7 {
            let (c, dmax) = weights(j).unwrap();
            let mut expect = 0.0;
            let mut weight_total = 0.0;
            for d in 1..=dmax {
                let w = c / (d * d) as f64;
                weight_total += w;
                expect += w * main_bound(&inputs, j, d).unwrap();
            }
            assert_abs_diff_eq!(weight_total, 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(i_hat_j(&inputs, j).unwrap(), expect, epsilon = 1e-9);
        }
    }

    #[test]
    fn i_block_matches_i_hat_on_prefixes() {
        let inputs = inputs_for(&generate::random_mps(6, 2, 3, 2).unwrap());
        for j in 2..6 {
            assert_abs_diff_eq!(
                i_block(&inputs, 1, j).unwrap(),
                i_hat_j(&inputs, j).unwrap(),
                epsilon = 1e-12
            );
        }
        assert!(i_block(&inputs, 3, 3).is_err());
        assert!(i_block(&inputs, 0, 2).is_err());
    }

    #[test]
    fn ghz_block_estimate_is_translation_invariant() {
        let q = ghz_inputs(6);
        assert_abs_diff_eq!(
            i_block(&q, 2, 5).unwrap(),
            i_hat_j(&q, 4).unwrap(),
            epsilon = 1e-9
        );
    }

    #[test]
    fn logsumexp_tracks_a_dominant_term() {
        let vals = [80.0, 1.0, 2.0];
        let lse = logsumexp2(&vals);
        assert!(lse >= 80.0 && lse <= 80.0 + 1e-6);
        // No overflow even for huge exponents.
        assert!(logsumexp2(&[4000.0, 3990.0]).is_finite());
    }

    #[test]
    fn tree_cost_of_product_state_counts_blocks() {
        let inputs = inputs_for(&generate::basis_product(8, 2, &[0; 8]).unwrap());
        // Layers of width 2 and 4: 4 + 2 = 6 blocks, all exponents zero.
        assert_abs_diff_eq!(i_tree(&inputs).unwrap(), 6f64.log2(), epsilon = 1e-9);
    }

    #[test]
    fn tree_cost_of_ghz_exceeds_one_bit() {
        let q = ghz_inputs(8);
        let t = i_tree(&q).unwrap();
        assert!(t >= 1.0);
        // All six blocks carry at least one bit of estimate.
        assert!(t >= 1.0 + 0.0_f64.max(6f64.log2() - 3.0));
    }

    #[test]
    fn tree_cost_requires_power_of_two() {
        let inputs = inputs_for(&generate::random_mps(6, 2, 2, 1).unwrap());
        assert!(matches!(i_tree(&inputs), Err(Error::NotPowerOfTwo(6))));
    }

    #[test]
    fn cost_report_fixture() {
        let q = ghz_inputs(4);
        let report = CostReport::compute(&q, 2.0, Sign::Plus, true).unwrap();
        assert_abs_diff_eq!(report.idist, 40.0, epsilon = 1e-9);
        assert_abs_diff_eq!(report.i_mps, 6f64.log2(), epsilon = 1e-9);
        assert!(report.i_tree.is_some());
        // Rows for j = 2 and j = 3, each admitting only delta = 1.
        assert_eq!(report.main_bounds.len(), 2);
        assert_eq!(report.main_bounds[0].len(), 1);
        assert_eq!(report.main_bounds[1].len(), 1);
        let row = report.csv_row(&[1, 2, 3, 4]);
        assert!(row.starts_with("1-2-3-4,"));
    }

    #[test]
    fn inputs_require_von_neumann_matrix() {
        let q = QmiMatrix::new(3, 0.5, vec![0.0; 9]).unwrap();
        assert!(matches!(CostInputs::new(vec![0.0; 3], q), Err(Error::AlphaMismatch(_))));
    }
}
