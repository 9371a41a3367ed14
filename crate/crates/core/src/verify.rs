//! Brute-force oracles for the entropy inequalities and identities the rest
//! of the crate relies on: strong subadditivity and its chained
//! consequences, the weak subadditivity of Renyi orders, rank
//! subadditivity, the Slater singular-value pairing, and the
//! ordering-versus-truncation-error diagnostic.
//!
//! Everything here recomputes entropies from reduced density matrices and
//! never trusts the Schmidt route it is checking.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::cost::CostInputs;
use crate::entropy::{
    self, block_qmi, entropy_of_density, qmi, qmi_matrix, subset_rank, Alpha, SubsetEntropyCache,
};
use crate::error::{Error, Result};
use crate::generate::{self, HamiltonianSpec};
use crate::optimize::{cost_of_ordering, Objective};
use crate::state::{DenseState, DensityMatrix, SitePermutation, SiteSubset, StateOrigin};

pub const MARGIN_TOL: f64 = 1e-9;
const SLATER_REL_TOL: f64 = 1e-8;
const MAX_WITNESSES: usize = 5;

/// Outcome of one inequality suite: the worst signed margin (right side
/// minus left side) over all checked instances, and up to five failing
/// witnesses.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub worst_margin: f64,
    pub instances: usize,
    pub tolerance: f64,
    pub witnesses: Vec<String>,
}

impl CheckResult {
    pub fn summary_csv_header() -> &'static str {
        "name,instances,worst_margin,passed"
    }

    pub fn summary_csv_row(&self) -> String {
        format!("{},{},{:.16e},{}", self.name, self.instances, self.worst_margin, self.passed)
    }
}

/// Accumulates margins; `passed` is exactly `worst_margin >= -tolerance`.
pub(crate) struct MarginAccumulator {
    name: String,
    tolerance: f64,
    worst: f64,
    instances: usize,
    witnesses: Vec<String>,
}

impl MarginAccumulator {
    pub fn new(name: impl Into<String>, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            tolerance,
            worst: f64::INFINITY,
            instances: 0,
            witnesses: Vec::new(),
        }
    }

    pub fn observe(&mut self, margin: f64, witness: impl FnOnce() -> String) {
        self.instances += 1;
        if margin < self.worst {
            self.worst = margin;
        }
        if margin < -self.tolerance && self.witnesses.len() < MAX_WITNESSES {
            self.witnesses.push(witness());
        }
    }

    pub fn finish(self) -> CheckResult {
        CheckResult {
            passed: self.worst >= -self.tolerance,
            name: self.name,
            worst_margin: self.worst,
            instances: self.instances,
            tolerance: self.tolerance,
            witnesses: self.witnesses,
        }
    }
}

/// Merge suite results under one name, keeping the worst margin.
pub fn merge_results(name: impl Into<String>, results: &[CheckResult]) -> CheckResult {
    let mut acc = MarginAccumulator::new(
        name,
        results.iter().map(|r| r.tolerance).fold(f64::INFINITY, f64::min),
    );
    for r in results {
        if r.instances > 0 {
            acc.observe(r.worst_margin, || {
                r.witnesses.first().cloned().unwrap_or_else(|| r.name.clone())
            });
        }
    }
    let mut merged = acc.finish();
    merged.instances = results.iter().map(|r| r.instances).sum();
    merged.passed = results.iter().all(|r| r.passed);
    merged
}

/// Haar-random unit vector of the given dimension, deterministic per rng.
fn haar_vector<R: Rng>(dim: usize, rng: &mut R) -> nalgebra::DVector<C64> {
    let mut v = nalgebra::DVector::from_fn(dim, |_, _| {
        C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let norm = v.norm();
    v /= C64::from(norm);
    v
}

/// Full-rank (almost surely) random density on the product of `dims`,
/// obtained by tracing an equal-size ancilla out of a Haar-random pure state.
pub fn random_density(dims: &[usize], seed: u64) -> Result<DensityMatrix> {
    let system: usize = dims.iter().product();
    random_density_with_ancilla(dims, system, seed)
}

pub fn random_density_with_ancilla(
    dims: &[usize],
    ancilla: usize,
    seed: u64,
) -> Result<DensityMatrix> {
    let system: usize = dims.iter().product();
    if system == 0 || ancilla == 0 {
        return Err(Error::BadSubset("subsystem dimensions must be positive".into()));
    }
    let cap = crate::state::amplitude_budget();
    if (system as u128) * (ancilla as u128) > cap as u128 {
        return Err(Error::BudgetExceeded { needed: system as u128 * ancilla as u128, cap });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let psi = haar_vector(system * ancilla, &mut rng);
    let m = DMatrix::from_fn(system, ancilla, |a, b| psi[a * ancilla + b]);
    DensityMatrix::new(&m * m.adjoint())
}

/// Partial trace of a density matrix over the subsystems not in `keep`
/// (0-based positions into `dims`, strictly increasing).
pub fn partial_trace(rho: &DensityMatrix, dims: &[usize], keep: &[usize]) -> Result<DensityMatrix> {
    let total: usize = dims.iter().product();
    if rho.dim() != total {
        return Err(Error::LengthMismatch(format!(
            "density dimension {} vs subsystem product {total}",
            rho.dim()
        )));
    }
    if keep.is_empty() || !keep.windows(2).all(|w| w[0] < w[1]) || keep.iter().any(|&k| k >= dims.len())
    {
        return Err(Error::BadSubset(format!("keep positions {keep:?}")));
    }
    let traced: Vec<usize> = (0..dims.len()).filter(|p| !keep.contains(p)).collect();
    let strides: Vec<usize> = (0..dims.len())
        .map(|p| dims[p + 1..].iter().product::<usize>())
        .collect();
    let kept_dim: usize = keep.iter().map(|&p| dims[p]).product();
    let traced_dim: usize = traced.iter().map(|&p| dims[p]).product();

    let flat = |positions: &[usize], mut idx: usize| -> usize {
        let mut x = 0;
        for &p in positions.iter().rev() {
            x += (idx % dims[p]) * strides[p];
            idx /= dims[p];
        }
        x
    };

    let mut out = DMatrix::<C64>::zeros(kept_dim, kept_dim);
    for a in 0..kept_dim {
        let xa = flat(keep, a);
        for b in 0..kept_dim {
            let xb = flat(keep, b);
            let mut sum = C64::new(0.0, 0.0);
            for t in 0..traced_dim {
                let xt = flat(&traced, t);
                sum += rho.entries()[(xa + xt, xb + xt)];
            }
            out[(a, b)] = sum;
        }
    }
    DensityMatrix::new(out)
}

fn vn(rho: &DensityMatrix) -> Result<f64> {
    entropy_of_density(rho, Alpha::VON_NEUMANN)
}

/// Strong subadditivity margin S(AB) + S(BC) - S(B) - S(ABC) of one
/// tripartite density.
pub fn check_ssa(rho: &DensityMatrix, dims: (usize, usize, usize)) -> Result<CheckResult> {
    let dims = [dims.0, dims.1, dims.2];
    let s_ab = vn(&partial_trace(rho, &dims, &[0, 1])?)?;
    let s_bc = vn(&partial_trace(rho, &dims, &[1, 2])?)?;
    let s_b = vn(&partial_trace(rho, &dims, &[1])?)?;
    let s_abc = vn(rho)?;
    let mut acc = MarginAccumulator::new("ssa", MARGIN_TOL);
    acc.observe(s_ab + s_bc - s_b - s_abc, || {
        format!("S(AB)={s_ab} S(BC)={s_bc} S(B)={s_b} S(ABC)={s_abc}")
    });
    Ok(acc.finish())
}

/// SSA over seeded random qubit-tripartite densities.
pub fn check_ssa_random(trials: usize, seed: u64) -> Result<CheckResult> {
    let mut acc = MarginAccumulator::new("ssa", MARGIN_TOL);
    for t in 0..trials {
        let rho = random_density(&[2, 2, 2], seed.wrapping_add(t as u64))?;
        let single = check_ssa(&rho, (2, 2, 2))?;
        acc.observe(single.worst_margin, || format!("seed {}", seed.wrapping_add(t as u64)));
    }
    Ok(acc.finish())
}

/// Subadditivity S(A) + S(B) - S(AB) >= 0 at alpha = 1 over random
/// bipartite densities.
pub fn check_sa_random(trials: usize, seed: u64) -> Result<CheckResult> {
    let dims = [2usize, 2];
    let mut acc = MarginAccumulator::new("sa", MARGIN_TOL);
    for t in 0..trials {
        let rho = random_density(&dims, seed.wrapping_add(t as u64))?;
        let s_a = vn(&partial_trace(&rho, &dims, &[0])?)?;
        let s_b = vn(&partial_trace(&rho, &dims, &[1])?)?;
        let s_ab = vn(&rho)?;
        acc.observe(s_a + s_b - s_ab, || format!("seed {}", seed.wrapping_add(t as u64)));
    }
    Ok(acc.finish())
}

/// Weak subadditivity of the Renyi orders:
/// S_a(A) - S_0(B) <= S_a(AB) <= S_a(A) + S_0(B).
pub fn check_wsa_random(trials: usize, alphas: &[f64], seed: u64) -> Result<CheckResult> {
    let dims = [2usize, 2];
    let mut acc = MarginAccumulator::new("wsa", MARGIN_TOL);
    for t in 0..trials {
        let inst_seed = seed.wrapping_add(t as u64);
        let rho = random_density(&dims, inst_seed)?;
        let rho_a = partial_trace(&rho, &dims, &[0])?;
        let rho_b = partial_trace(&rho, &dims, &[1])?;
        let s0_b = entropy_of_density(&rho_b, Alpha::HARTLEY)?;
        for &a in alphas {
            let alpha = Alpha::new(a)?;
            let s_ab = entropy_of_density(&rho, alpha)?;
            let s_a = entropy_of_density(&rho_a, alpha)?;
            acc.observe(s_a + s0_b - s_ab, || format!("upper, alpha={a}, seed {inst_seed}"));
            acc.observe(s_ab - (s_a - s0_b), || format!("lower, alpha={a}, seed {inst_seed}"));
        }
    }
    Ok(acc.finish())
}

/// The central block-entropy bound, checked for every admissible (j, delta),
/// plus a replay of its derivation on small states: each strong-subadditivity
/// step on the comb-shaped subsets and each subadditivity step joining the
/// disjoint combs.
pub fn check_main_bound(state: &DenseState) -> Result<CheckResult> {
    let l = state.num_sites();
    let inputs = CostInputs::new(
        (1..=l)
            .map(|k| entropy::subset_entropy(state, &SiteSubset::single(k), Alpha::VON_NEUMANN))
            .collect::<Result<_>>()?,
        qmi_matrix(state, Alpha::VON_NEUMANN)?,
    )?;
    let mut acc = MarginAccumulator::new("main-bound", MARGIN_TOL);
    let mut cache = SubsetEntropyCache::new(state);
    let replay_chain = l <= 8;

    for j in 2..l {
        let block = entropy::block_entropy(state, j, Alpha::VON_NEUMANN)?;
        for delta in 1..=j / 2 {
            let bound = crate::cost::main_bound(&inputs, j, delta)?;
            acc.observe(bound - block, || format!("j={j} delta={delta} bound={bound} block={block}"));
            if !replay_chain {
                continue;
            }
            // SSA steps: grow each residue comb one stride at a time. The
            // first pair seeds the chain; every later extension is one SSA
            // instance S(K) + S({k, k+d}) >= S({k}) + S(K + {k+d}).
            for k0 in 1..=delta {
                let mut comb = vec![k0];
                let mut current = k0;
                while current + delta <= j {
                    let next = current + delta;
                    if comb.len() >= 2 {
                        let k_set = SiteSubset::new(comb.iter().copied())?;
                        let pair = SiteSubset::new([current, next])?;
                        let single = SiteSubset::single(current);
                        let mut grown = comb.clone();
                        grown.push(next);
                        let grown_set = SiteSubset::new(grown.iter().copied())?;
                        let margin = cache.von_neumann(&k_set)?
                            + cache.von_neumann(&pair)?
                            - cache.von_neumann(&single)?
                            - cache.von_neumann(&grown_set)?;
                        acc.observe(margin, || {
                            format!("ssa step j={j} delta={delta} comb={comb:?} next={next}")
                        });
                    }
                    comb.push(next);
                    current = next;
                }
            }
            // SA steps: join the disjoint combs back into the block.
            let comb_of = |k0: usize| -> Vec<usize> {
                (0..).map(|t| k0 + t * delta).take_while(|&s| s <= j).collect()
            };
            let mut union = comb_of(1);
            for k0 in 2..=delta {
                let next = comb_of(k0);
                let u_set = SiteSubset::new(union.iter().copied())?;
                let n_set = SiteSubset::new(next.iter().copied())?;
                let mut joined = union.clone();
                joined.extend(&next);
                joined.sort_unstable();
                let j_set = SiteSubset::new(joined.iter().copied())?;
                let margin = cache.von_neumann(&u_set)? + cache.von_neumann(&n_set)?
                    - cache.von_neumann(&j_set)?;
                acc.observe(margin, || format!("sa step j={j} delta={delta} joining {next:?}"));
                union = joined;
            }
        }
    }
    Ok(acc.finish())
}

/// Gap between block-to-site and site-to-site correlations, bounded by twice
/// the single-site entropy and by 2 log2(d).
pub fn check_qmi_gap(state: &DenseState) -> Result<CheckResult> {
    let l = state.num_sites();
    let log2d = (state.local_dim() as f64).log2();
    let mut acc = MarginAccumulator::new("qmi-gap", MARGIN_TOL);
    for k in 1..=l - 2 {
        let block = SiteSubset::range(1, k)?;
        let site = SiteSubset::single(k + 1);
        let gap = block_qmi(state, &block, &site)?
            - qmi(state, k, k + 1, Alpha::VON_NEUMANN)?;
        let s_next =
            entropy::subset_entropy(state, &SiteSubset::single(k + 1), Alpha::VON_NEUMANN)?;
        acc.observe(2.0 * s_next - gap, || format!("k={k} gap={gap} S_k+1={s_next}"));
        acc.observe(2.0 * log2d - gap, || format!("k={k} gap={gap} vs 2 log2 d"));
    }
    Ok(acc.finish())
}

/// Which sorted pairing of the nonzero singular values yields a constant
/// product.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pairing {
    /// sigma_k * sigma_{M+1-k}: the full sorted mirror.
    MirrorInclusive,
    /// sigma_k * sigma_{M-k}: shifted mirror, k = 1..M-1.
    MirrorExclusive,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PairingReport {
    pub cut: usize,
    pub nonzero: usize,
    pub pairing: Pairing,
    pub constant: f64,
    pub max_rel_dev: f64,
    pub passed: bool,
}

/// Test both candidate pairings of the cut's nonzero singular values for
/// constancy of the product; flag-agnostic so generic states can serve as
/// negative controls.
pub fn slater_pairing(state: &DenseState, cut: usize) -> Result<PairingReport> {
    let spectrum = state.schmidt(cut)?;
    let sigma: Vec<f64> = spectrum.values().iter().copied().filter(|&s| s > 1e-10).collect();
    let m = sigma.len();
    let rel_spread = |products: &[f64]| -> f64 {
        let max = products.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = products.iter().copied().fold(f64::INFINITY, f64::min);
        if max <= 0.0 {
            return f64::INFINITY;
        }
        (max - min) / max
    };
    // k <-> M+1-k always admits at least one product.
    let inclusive: Vec<f64> = (1..=m).map(|k| sigma[k - 1] * sigma[m - k]).collect();
    let exclusive: Vec<f64> = (1..m).map(|k| sigma[k - 1] * sigma[m - k - 1]).collect();
    let inc_dev = rel_spread(&inclusive);
    let exc_dev = if exclusive.is_empty() { f64::INFINITY } else { rel_spread(&exclusive) };
    let (pairing, products, dev) = if inc_dev <= exc_dev {
        (Pairing::MirrorInclusive, inclusive, inc_dev)
    } else {
        (Pairing::MirrorExclusive, exclusive, exc_dev)
    };
    Ok(PairingReport {
        cut,
        nonzero: m,
        pairing,
        constant: products.iter().sum::<f64>() / products.len() as f64,
        max_rel_dev: dev,
        passed: dev <= SLATER_REL_TOL,
    })
}

/// The pairing constancy across every cut of a Slater-generated state.
pub fn check_slater_symmetry(state: &DenseState) -> Result<CheckResult> {
    if !matches!(state.origin(), StateOrigin::Slater { .. }) {
        return Err(Error::NotSlaterState);
    }
    let mut acc = MarginAccumulator::new("slater-symmetry", 0.0);
    for cut in 1..state.num_sites() {
        let report = slater_pairing(state, cut)?;
        acc.observe(SLATER_REL_TOL - report.max_rel_dev, || {
            format!("cut {cut}: rel dev {:.3e} via {:?}", report.max_rel_dev, report.pairing)
        });
    }
    Ok(acc.finish())
}

/// Hartley-entropy subadditivity: rank(AB) <= rank(A) rank(B), exact on
/// integer ranks after the 1e-12 eigenvalue cutoff.
pub fn check_rank_sa(state: &DenseState, a: &SiteSubset, b: &SiteSubset) -> Result<CheckResult> {
    a.is_disjoint(b)?;
    let union = a.union(b)?;
    union.check_range(state.num_sites())?;
    let rank_a = subset_rank(state, a)?;
    let rank_b = subset_rank(state, b)?;
    let rank_ab = subset_rank(state, &union)?;
    let margin = ((rank_a * rank_b) as f64).log2() - (rank_ab as f64).log2();
    let mut acc = MarginAccumulator::new("rank-sa", 0.0);
    acc.observe(margin, || {
        format!("A={:?} B={:?} ranks {rank_a} {rank_b} {rank_ab}", a.sites(), b.sites())
    });
    let mut result = acc.finish();
    result.passed = rank_ab <= rank_a * rank_b;
    Ok(result)
}

/// Rank subadditivity across all contiguous disjoint block pairs plus seeded
/// non-contiguous pairs, with |A| + |B| capped.
pub fn check_rank_sa_battery(
    state: &DenseState,
    max_total: usize,
    random_pairs: usize,
    seed: u64,
) -> Result<CheckResult> {
    let l = state.num_sites();
    let mut acc = MarginAccumulator::new("rank-sa", 0.0);
    let mut all_pass = true;
    let mut run = |a: SiteSubset, b: SiteSubset, acc: &mut MarginAccumulator| -> Result<()> {
        let single = check_rank_sa(state, &a, &b)?;
        all_pass &= single.passed;
        acc.observe(single.worst_margin, || {
            single.witnesses.first().cloned().unwrap_or_default()
        });
        Ok(())
    };
    // All contiguous disjoint block pairs within the size cap.
    for a_lo in 1..=l {
        for a_hi in a_lo..=l {
            for b_lo in a_hi + 1..=l {
                for b_hi in b_lo..=l {
                    if (a_hi - a_lo + 1) + (b_hi - b_lo + 1) > max_total {
                        continue;
                    }
                    run(SiteSubset::range(a_lo, a_hi)?, SiteSubset::range(b_lo, b_hi)?, &mut acc)?;
                }
            }
        }
    }
    // Seeded random (generally non-contiguous) disjoint pairs.
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut drawn = 0;
    while drawn < random_pairs {
        let size_a = rng.gen_range(1..=max_total - 1);
        let size_b = rng.gen_range(1..=max_total - size_a);
        if size_a + size_b > l {
            continue;
        }
        let mut sites: Vec<usize> = (1..=l).collect();
        for i in 0..size_a + size_b {
            let j = rng.gen_range(i..l);
            sites.swap(i, j);
        }
        let mut a_sites = sites[..size_a].to_vec();
        let mut b_sites = sites[size_a..size_a + size_b].to_vec();
        a_sites.sort_unstable();
        b_sites.sort_unstable();
        run(SiteSubset::new(a_sites)?, SiteSubset::new(b_sites)?, &mut acc)?;
        drawn += 1;
    }
    let mut result = acc.finish();
    result.passed = all_pass;
    Ok(result)
}

/// How well each objective, evaluated on the relabeled pair-information
/// matrix alone, predicts the true truncation error of the physically
/// reordered state.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EfficacyEntry {
    pub objective: String,
    pub spearman: Option<f64>,
    pub degenerate: bool,
    pub regret: f64,
    pub argmin: Vec<usize>,
    pub argmin_true_error: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EfficacyReport {
    pub chi: usize,
    pub num_orderings: usize,
    pub min_true_error: f64,
    pub entries: Vec<EfficacyEntry>,
}

/// Enumerate every canonical ordering of the state (qudit reordering),
/// record the exact per-cut truncation tail sum at bond `chi`, and rank-
/// correlate each objective against it. Reported, never asserted: the
/// objectives are heuristics.
pub fn check_ordering_efficacy(
    state: &DenseState,
    chi: usize,
    objectives: &[Objective],
) -> Result<EfficacyReport> {
    use itertools::Itertools;
    let l = state.num_sites();
    if l > 8 {
        return Err(Error::ExhaustiveCap { l, cap: 8 });
    }
    let inputs = CostInputs::new(
        (1..=l)
            .map(|k| entropy::subset_entropy(state, &SiteSubset::single(k), Alpha::VON_NEUMANN))
            .collect::<Result<_>>()?,
        qmi_matrix(state, Alpha::VON_NEUMANN)?,
    )?;

    let mut errors = Vec::new();
    let mut costs: Vec<Vec<f64>> = vec![Vec::new(); objectives.len()];
    let mut perms = Vec::new();
    for perm in (1..=l).permutations(l) {
        if perm.iter().rev().cmp(perm.iter()) == std::cmp::Ordering::Less {
            continue;
        }
        let ordering = SitePermutation::new(perm)?;
        let permuted = state.permute_sites(&ordering, false)?;
        let mut eps_sq = 0.0;
        for j in 1..l {
            eps_sq += permuted.schmidt(j)?.truncation_error_sq(chi);
        }
        errors.push(eps_sq);
        for (slot, objective) in objectives.iter().enumerate() {
            costs[slot].push(cost_of_ordering(&inputs, &ordering, *objective)?);
        }
        perms.push(ordering);
    }
    let min_true = errors.iter().copied().fold(f64::INFINITY, f64::min);

    let mut entries = Vec::new();
    for (slot, objective) in objectives.iter().enumerate() {
        let values = &costs[slot];
        let argmin = values
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| a.total_cmp(b))
            .map(|(i, _)| i)
            .expect("nonempty enumeration");
        let spearman = spearman(values, &errors);
        entries.push(EfficacyEntry {
            objective: objective.to_string(),
            degenerate: spearman.is_none(),
            spearman,
            regret: errors[argmin] - min_true,
            argmin: perms[argmin].as_slice().to_vec(),
            argmin_true_error: errors[argmin],
        });
    }
    Ok(EfficacyReport { chi, num_orderings: perms.len(), min_true_error: min_true, entries })
}

/// Spearman rank correlation with average ranks on ties; `None` when either
/// side is constant (product states make every ordering equivalent).
pub fn spearman(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let rx = average_ranks(xs);
    let ry = average_ranks(ys);
    pearson(&rx, &ry)
}

fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = rank;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
        sxy += (x - mx) * (y - my);
    }
    if sxx < 1e-18 || syy < 1e-18 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

/// Random probability spectrum of 2..=max_len entries (squared normals,
/// normalized).
pub fn random_spectrum<R: Rng>(rng: &mut R, max_len: usize) -> Vec<f64> {
    let n = rng.gen_range(2..=max_len);
    let mut v: Vec<f64> = (0..n)
        .map(|_| {
            let g: f64 = rng.sample(StandardNormal);
            g * g
        })
        .collect();
    let sum: f64 = v.iter().sum();
    for x in &mut v {
        *x /= sum;
    }
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

/// A named state of the built-in test battery.
pub struct BatteryState {
    pub name: String,
    pub state: DenseState,
}

/// Deterministic battery: product states, GHZ and W families, Slater
/// instances, seeded random MPS (including a couple of qutrit chains) and
/// small exact ground states.
pub fn battery() -> Result<Vec<BatteryState>> {
    let mut states = Vec::new();
    let mut push = |name: String, state: DenseState| {
        states.push(BatteryState { name, state });
    };

    push("product-zeros-l4".into(), generate::basis_product(4, 2, &[0, 0, 0, 0])?);
    push("product-mixed-l5".into(), generate::basis_product(5, 2, &[0, 1, 0, 1, 1])?);
    for l in 3..=8 {
        push(format!("ghz-l{l}"), generate::ghz(l, 2)?);
        push(format!("w-l{l}"), generate::w_state(l)?);
    }
    for (l, n, seed) in [(4, 2, 101u64), (6, 3, 102), (8, 4, 103), (5, 2, 104)] {
        push(
            format!("slater-l{l}-n{n}"),
            generate::slater(&generate::random_orthonormal(l, n, seed))?,
        );
    }
    let mut seed = 200u64;
    for l in 3..=8usize {
        for chi in [2usize, 4] {
            push(format!("random-mps-l{l}-chi{chi}"), generate::random_mps(l, 2, chi, seed)?);
            seed += 1;
        }
    }
    push("random-mps-l5-chi1".into(), generate::random_mps(5, 2, 1, 230)?);
    push("random-mps-d3-l4".into(), generate::random_mps(4, 3, 2, 231)?);
    push("random-mps-d3-l5".into(), generate::random_mps(5, 3, 3, 232)?);
    for (l, g) in [(4usize, 1.0), (6, 0.5), (6, 1.0), (8, 1.0)] {
        push(
            format!("tfim-l{l}-g{g}"),
            generate::ground_state(&HamiltonianSpec::TransverseIsing {
                l,
                coupling: 1.0,
                field: g,
            })?,
        );
    }
    for (l, delta) in [(4usize, 1.0), (6, 1.0), (6, 0.5), (8, 1.0)] {
        push(
            format!("xxz-l{l}-delta{delta}"),
            generate::ground_state(&HamiltonianSpec::Xxz { l, coupling: 1.0, anisotropy: delta })?,
        );
    }
    Ok(states)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn random_density_is_valid_and_deterministic() {
        let a = random_density(&[2, 2, 2], 9).unwrap();
        let b = random_density(&[2, 2, 2], 9).unwrap();
        assert_eq!(a.entries(), b.entries());
        let trace: f64 = a.eigenvalues().iter().sum();
        assert_abs_diff_eq!(trace, 1.0, epsilon = 1e-12);
        // Full rank almost surely.
        assert_eq!(a.rank(1e-12), 8);
    }

    #[test]
    fn ancilla_dimension_one_gives_a_pure_projector() {
        let rho = random_density_with_ancilla(&[2, 2], 1, 3).unwrap();
        assert_abs_diff_eq!(rho.eigenvalues()[0], 1.0, epsilon = 1e-10);
    }

    #[test]
    fn partial_trace_of_product_factorizes() {
        let rho = random_density(&[2, 3], 5).unwrap();
        let a = partial_trace(&rho, &[2, 3], &[0]).unwrap();
        let b = partial_trace(&rho, &[2, 3], &[1]).unwrap();
        assert_eq!(a.dim(), 2);
        assert_eq!(b.dim(), 3);
        let ta: f64 = a.eigenvalues().iter().sum();
        let tb: f64 = b.eigenvalues().iter().sum();
        assert_abs_diff_eq!(ta, 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(tb, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn ssa_on_product_density_is_tight() {
        let a = random_density(&[2], 1).unwrap();
        let b = random_density(&[2], 2).unwrap();
        let c = random_density(&[2], 3).unwrap();
        let ab = a.entries().kronecker(b.entries());
        let abc = DensityMatrix::new(ab.kronecker(c.entries())).unwrap();
        let result = check_ssa(&abc, (2, 2, 2)).unwrap();
        assert!(result.passed);
        assert_abs_diff_eq!(result.worst_margin, 0.0, epsilon = 1e-9);
    }

    #[test]
    fn ssa_on_ghz_has_unit_margin() {
        let ghz = generate::ghz(3, 2).unwrap();
        let rho = ghz.reduced_density(&SiteSubset::range(1, 3).unwrap()).unwrap();
        let result = check_ssa(&rho, (2, 2, 2)).unwrap();
        assert_abs_diff_eq!(result.worst_margin, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn ssa_random_small_batch_passes() {
        let result = check_ssa_random(50, 11).unwrap();
        assert!(result.passed, "worst {}", result.worst_margin);
    }

    #[test]
    fn main_bound_ghz_is_tight_at_unit_stride() {
        let state = generate::ghz(5, 2).unwrap();
        let result = check_main_bound(&state).unwrap();
        assert!(result.passed, "worst {}", result.worst_margin);
        assert_abs_diff_eq!(result.worst_margin, 0.0, epsilon = 1e-9);
    }

    #[test]
    fn main_bound_holds_on_random_mps() {
        for seed in 0..10 {
            let state = generate::random_mps(6, 2, 3, seed).unwrap();
            let result = check_main_bound(&state).unwrap();
            assert!(result.passed, "seed {seed}: worst {}", result.worst_margin);
        }
    }

    #[test]
    fn qmi_gap_examples() {
        let product = generate::basis_product(4, 2, &[0, 1, 1, 0]).unwrap();
        let result = check_qmi_gap(&product).unwrap();
        assert!(result.passed);

        let ghz = generate::ghz(4, 2).unwrap();
        let result = check_qmi_gap(&ghz).unwrap();
        assert!(result.passed);
    }

    #[test]
    fn slater_pairing_constancy_and_negative_control() {
        let coeffs = generate::random_orthonormal(6, 3, 77);
        let state = generate::slater(&coeffs).unwrap();
        let result = check_slater_symmetry(&state).unwrap();
        assert!(result.passed, "worst {}", result.worst_margin);

        // A generic entangled state fails the constancy test at some cut.
        let generic = generate::random_mps(6, 2, 4, 5).unwrap();
        let mut any_fail = false;
        for cut in 1..6 {
            let report = slater_pairing(&generic, cut).unwrap();
            if report.nonzero >= 4 {
                any_fail |= !report.passed;
            }
        }
        assert!(any_fail);
        assert!(matches!(check_slater_symmetry(&generic), Err(Error::NotSlaterState)));
    }

    #[test]
    fn slater_flag_survives_fermionic_reordering() {
        let coeffs = generate::random_orthonormal(5, 2, 13);
        let state = generate::slater(&coeffs).unwrap();
        let perm = SitePermutation::new(vec![3, 1, 5, 2, 4]).unwrap();
        let reordered = state.permute_sites(&perm, true).unwrap();
        let result = check_slater_symmetry(&reordered).unwrap();
        assert!(result.passed);
    }

    #[test]
    fn rank_sa_examples() {
        let ghz = generate::ghz(4, 2).unwrap();
        let result =
            check_rank_sa(&ghz, &SiteSubset::single(1), &SiteSubset::single(2)).unwrap();
        assert!(result.passed);
        assert_abs_diff_eq!(result.worst_margin, 1.0, epsilon = 1e-12);

        let product = generate::basis_product(4, 2, &[0, 0, 1, 1]).unwrap();
        let result =
            check_rank_sa(&product, &SiteSubset::new([1, 3]).unwrap(), &SiteSubset::single(2))
                .unwrap();
        assert!(result.passed);
        assert_abs_diff_eq!(result.worst_margin, 0.0, epsilon = 1e-12);

        let mps = generate::random_mps(6, 2, 3, 21).unwrap();
        let batch = check_rank_sa_battery(&mps, 5, 10, 3).unwrap();
        assert!(batch.passed);
    }

    #[test]
    fn spearman_handles_ties_and_degenerate_input() {
        assert_abs_diff_eq!(
            spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]).unwrap(),
            1.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            spearman(&[1.0, 2.0, 3.0], &[30.0, 20.0, 10.0]).unwrap(),
            -1.0,
            epsilon = 1e-12
        );
        assert!(spearman(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).is_none());
    }

    #[test]
    fn efficacy_on_ghz_reports_zero_regret() {
        let ghz = generate::ghz(4, 2).unwrap();
        let report = check_ordering_efficacy(&ghz, 1, &[Objective::default()]).unwrap();
        assert_eq!(report.num_orderings, 12);
        let entry = &report.entries[0];
        assert_abs_diff_eq!(entry.regret, 0.0, epsilon = 1e-9);
        // All orderings equivalent for GHZ: correlation degenerate.
        assert!(entry.degenerate);
    }

    #[test]
    fn efficacy_on_product_state_is_degenerate() {
        let product = generate::basis_product(4, 2, &[0, 1, 0, 1]).unwrap();
        let report = check_ordering_efficacy(&product, 1, &[Objective::IMps]).unwrap();
        assert!(report.entries[0].degenerate);
        assert_abs_diff_eq!(report.min_true_error, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn battery_builds_and_is_nontrivial() {
        let battery = battery().unwrap();
        assert!(battery.len() > 30);
        for item in &battery {
            assert_abs_diff_eq!(item.state.norm_squared(), 1.0, epsilon = 1e-9);
        }
    }
}
