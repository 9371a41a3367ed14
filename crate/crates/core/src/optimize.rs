//! Search over site permutations minimizing a cost evaluated on a fixed
//! mutual-information matrix. Candidate orderings only relabel the matrix;
//! the state is never recomputed, so fermionic sign conventions cannot leak
//! into the search loop.

use itertools::Itertools;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cost::{self, CostInputs, CostReport, Sign};
use crate::error::{Error, Result};
use crate::state::SitePermutation;

pub const DEFAULT_EXHAUSTIVE_CAP: usize = 9;
const IMPROVEMENT_TOL: f64 = 1e-12;

/// Objective to minimize over orderings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Objective {
    Idist { eta: f64, sign: Sign },
    IMps,
    IMpsCheck,
    ITree,
}

impl Default for Objective {
    /// The distance-squared grouping convention.
    fn default() -> Self {
        Objective::Idist { eta: 2.0, sign: Sign::Plus }
    }
}

impl std::fmt::Display for Objective {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Objective::Idist { eta, sign } => write!(f, "idist(eta={eta}, sign={sign})"),
            Objective::IMps => f.write_str("i-mps"),
            Objective::IMpsCheck => f.write_str("i-mps-check"),
            Objective::ITree => f.write_str("i-tree"),
        }
    }
}

/// Objective value of `ordering`: position p carries site ordering[p], so
/// entropies and pair informations are looked up through the permutation.
pub fn cost_of_ordering(
    inputs: &CostInputs,
    ordering: &SitePermutation,
    objective: Objective,
) -> Result<f64> {
    let l = inputs.num_sites();
    if ordering.len() != l {
        return Err(Error::BadPermutation(format!("{:?}", ordering.as_slice()), l));
    }
    match objective {
        Objective::Idist { eta, sign } => {
            let q = inputs.qmi();
            let mut total = 0.0;
            for p in 1..=l {
                for r in 1..=l {
                    if p != r {
                        let dist = (p as f64 - r as f64).abs();
                        total += q.get(ordering.site_at(p), ordering.site_at(r)) * dist.powf(eta);
                    }
                }
            }
            Ok(sign.factor() * total)
        }
        Objective::IMps => cost::i_mps(&inputs.relabel(ordering)?),
        Objective::IMpsCheck => cost::i_mps_check(&inputs.relabel(ordering)?),
        Objective::ITree => cost::i_tree(&inputs.relabel(ordering)?),
    }
}

/// One accepted or rejected step of a search run.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub step: usize,
    pub temperature: f64,
    pub cost: f64,
    pub accepted: bool,
}

/// Outcome of a search: the canonical best ordering, its cost, the work
/// spent, and the full cost breakdown at the optimum.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OrderingReport {
    pub best: Vec<usize>,
    pub best_cost: f64,
    pub evaluations: usize,
    pub trajectory: Option<Vec<TrajectoryPoint>>,
    pub cost_report: CostReport,
}

impl OrderingReport {
    fn build(
        inputs: &CostInputs,
        objective: Objective,
        best: SitePermutation,
        best_cost: f64,
        evaluations: usize,
        trajectory: Option<Vec<TrajectoryPoint>>,
    ) -> Result<Self> {
        let best = best.canonical();
        let check = cost_of_ordering(inputs, &best, objective)?;
        if (check - best_cost).abs() > IMPROVEMENT_TOL {
            return Err(Error::Internal(format!(
                "reported cost {best_cost} disagrees with re-evaluation {check}"
            )));
        }
        let relabeled = inputs.relabel(&best)?;
        let (eta, sign) = match objective {
            Objective::Idist { eta, sign } => (eta, sign),
            _ => (2.0, Sign::Plus),
        };
        let l = inputs.num_sites();
        let with_tree = l >= 4 && l.is_power_of_two();
        let cost_report = CostReport::compute(&relabeled, eta, sign, with_tree)?;
        Ok(Self { best: best.as_slice().to_vec(), best_cost, evaluations, trajectory, cost_report })
    }

    pub fn best_permutation(&self) -> SitePermutation {
        SitePermutation::new(self.best.clone()).expect("report holds a valid permutation")
    }
}

fn better(cost: f64, perm: &SitePermutation, best_cost: f64, best: &SitePermutation) -> bool {
    if cost < best_cost - IMPROVEMENT_TOL {
        return true;
    }
    if cost <= best_cost + IMPROVEMENT_TOL {
        return perm.canonical().as_slice() < best.canonical().as_slice();
    }
    false
}

/// Global minimum by enumeration of all orderings, visiting one
/// representative per reversal pair (distance costs cannot split them).
/// Ties resolve to the lexicographically smallest canonical permutation.
pub fn exhaustive(inputs: &CostInputs, objective: Objective) -> Result<OrderingReport> {
    exhaustive_with_cap(inputs, objective, DEFAULT_EXHAUSTIVE_CAP)
}

pub fn exhaustive_with_cap(
    inputs: &CostInputs,
    objective: Objective,
    cap: usize,
) -> Result<OrderingReport> {
    let l = inputs.num_sites();
    if cap > DEFAULT_EXHAUSTIVE_CAP {
        return Err(Error::BadSearchConfig(format!(
            "exhaustive cap {cap} above the hard limit {DEFAULT_EXHAUSTIVE_CAP}"
        )));
    }
    if l > cap {
        return Err(Error::ExhaustiveCap { l, cap });
    }
    let mut best: Option<(f64, SitePermutation)> = None;
    let mut evaluations = 0;
    for perm in (1..=l).permutations(l) {
        let reversed_is_smaller = perm.iter().rev().cmp(perm.iter()) == std::cmp::Ordering::Less;
        if reversed_is_smaller {
            continue;
        }
        let candidate = SitePermutation::new(perm)?;
        let cost = cost_of_ordering(inputs, &candidate, objective)?;
        evaluations += 1;
        match &best {
            Some((c, _)) if cost >= *c - IMPROVEMENT_TOL => {}
            _ => best = Some((cost, candidate)),
        }
    }
    let (best_cost, best) = best.expect("at least one permutation");
    OrderingReport::build(inputs, objective, best, best_cost, evaluations, None)
}

/// Steepest-descent local search over pairwise swaps and segment reversals.
/// Deterministic given the start; stops when no neighbor improves the cost
/// by more than 1e-12.
pub fn two_opt(
    inputs: &CostInputs,
    objective: Objective,
    start: &SitePermutation,
) -> Result<OrderingReport> {
    let l = inputs.num_sites();
    if start.len() != l {
        return Err(Error::BadPermutation(format!("{:?}", start.as_slice()), l));
    }
    let mut current = start.clone();
    let mut current_cost = cost_of_ordering(inputs, &current, objective)?;
    let mut evaluations = 1;
    let mut trajectory = vec![TrajectoryPoint {
        step: 0,
        temperature: 0.0,
        cost: current_cost,
        accepted: true,
    }];
    loop {
        let mut best_neighbor: Option<(f64, Vec<usize>)> = None;
        let perm = current.as_slice();
        let mut consider = |candidate: Vec<usize>| -> Result<()> {
            let candidate_perm = SitePermutation::new(candidate)?;
            let cost = cost_of_ordering(inputs, &candidate_perm, objective)?;
            evaluations += 1;
            if best_neighbor.as_ref().is_none_or(|(c, _)| cost < *c - IMPROVEMENT_TOL) {
                best_neighbor = Some((cost, candidate_perm.as_slice().to_vec()));
            }
            Ok(())
        };
        for i in 0..l {
            for j in i + 1..l {
                let mut swapped = perm.to_vec();
                swapped.swap(i, j);
                consider(swapped)?;
            }
        }
        for i in 0..l {
            for j in i + 2..l {
                let mut reversed = perm.to_vec();
                reversed[i..=j].reverse();
                consider(reversed)?;
            }
        }
        match best_neighbor {
            Some((cost, neighbor)) if cost < current_cost - IMPROVEMENT_TOL => {
                current = SitePermutation::new(neighbor)?;
                current_cost = cost;
                trajectory.push(TrajectoryPoint {
                    step: trajectory.len(),
                    temperature: 0.0,
                    cost,
                    accepted: true,
                });
            }
            _ => break,
        }
    }
    OrderingReport::build(inputs, objective, current, current_cost, evaluations, Some(trajectory))
}

/// Multi-start local search; restart r shuffles the identity with seed + r.
pub fn two_opt_restarts(
    inputs: &CostInputs,
    objective: Objective,
    restarts: usize,
    seed: u64,
) -> Result<OrderingReport> {
    if restarts == 0 {
        return Err(Error::BadSearchConfig("restarts must be at least 1".into()));
    }
    let l = inputs.num_sites();
    let mut winner: Option<(f64, SitePermutation)> = None;
    let mut evaluations = 0;
    for r in 0..restarts {
        let start = if r == 0 {
            SitePermutation::identity(l)
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(r as u64));
            let mut perm: Vec<usize> = (1..=l).collect();
            perm.shuffle(&mut rng);
            SitePermutation::new(perm)?
        };
        let report = two_opt(inputs, objective, &start)?;
        evaluations += report.evaluations;
        let perm = report.best_permutation();
        if winner.as_ref().is_none_or(|(c, p)| better(report.best_cost, &perm, *c, p)) {
            winner = Some((report.best_cost, perm));
        }
    }
    let (best_cost, best) = winner.expect("at least one restart");
    OrderingReport::build(inputs, objective, best, best_cost, evaluations, None)
}

/// Simulated-annealing schedule. The initial temperature defaults to the
/// mean |cost change| over 100 seeded probe moves from the start ordering.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AnnealParams {
    pub initial_temp: Option<f64>,
    pub cooling: f64,
    pub steps_per_temp: usize,
    pub temp_levels: usize,
    pub restarts: usize,
    pub record_trajectory: bool,
}

impl Default for AnnealParams {
    fn default() -> Self {
        Self {
            initial_temp: None,
            cooling: 0.9,
            steps_per_temp: 250,
            temp_levels: 60,
            restarts: 4,
            record_trajectory: false,
        }
    }
}

impl AnnealParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.cooling > 0.0 && self.cooling < 1.0) {
            return Err(Error::BadSearchConfig(format!(
                "cooling ratio must lie in (0, 1), got {}",
                self.cooling
            )));
        }
        if self.steps_per_temp == 0 || self.temp_levels == 0 || self.restarts == 0 {
            return Err(Error::BadSearchConfig(
                "steps, levels and restarts must be at least 1".into(),
            ));
        }
        if let Some(t) = self.initial_temp {
            if !(t > 0.0) {
                return Err(Error::BadSearchConfig(format!("initial temperature {t} must be positive")));
            }
        }
        Ok(())
    }
}

fn propose<R: Rng>(perm: &[usize], rng: &mut R) -> Vec<usize> {
    let l = perm.len();
    let i = rng.gen_range(0..l - 1);
    let j = rng.gen_range(i + 1..l);
    let mut next = perm.to_vec();
    if rng.gen_bool(0.5) {
        next.swap(i, j);
    } else {
        next[i..=j].reverse();
    }
    next
}

/// Metropolis annealing with swap and segment-reversal moves and geometric
/// cooling. Restart r is fully determined by seed + r, so the result does
/// not depend on how restarts are scheduled.
pub fn anneal(
    inputs: &CostInputs,
    objective: Objective,
    params: &AnnealParams,
    seed: u64,
) -> Result<OrderingReport> {
    params.validate()?;
    let l = inputs.num_sites();
    let mut winner: Option<(f64, SitePermutation)> = None;
    let mut evaluations = 0;
    let mut trajectory = params.record_trajectory.then(Vec::new);
    let mut global_step = 0usize;

    for r in 0..params.restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(r as u64));
        let mut current: Vec<usize> = (1..=l).collect();
        if r > 0 {
            current.shuffle(&mut rng);
        }
        let mut current_cost =
            cost_of_ordering(inputs, &SitePermutation::new(current.clone())?, objective)?;
        evaluations += 1;

        let t0 = match params.initial_temp {
            Some(t) => t,
            None => {
                let mut sum = 0.0;
                for _ in 0..100 {
                    let probe = propose(&current, &mut rng);
                    let cost =
                        cost_of_ordering(inputs, &SitePermutation::new(probe)?, objective)?;
                    evaluations += 1;
                    sum += (cost - current_cost).abs();
                }
                (sum / 100.0).max(1e-12)
            }
        };

        let mut best_cost = current_cost;
        let mut best = current.clone();
        let mut temperature = t0;
        for _level in 0..params.temp_levels {
            for _step in 0..params.steps_per_temp {
                let candidate = propose(&current, &mut rng);
                let cost =
                    cost_of_ordering(inputs, &SitePermutation::new(candidate.clone())?, objective)?;
                evaluations += 1;
                let delta = cost - current_cost;
                let accepted = delta <= 0.0 || rng.gen::<f64>() < (-delta / temperature).exp();
                if accepted {
                    current = candidate;
                    current_cost = cost;
                    if current_cost < best_cost - IMPROVEMENT_TOL {
                        best_cost = current_cost;
                        best = current.clone();
                    }
                }
                if let Some(t) = trajectory.as_mut() {
                    t.push(TrajectoryPoint {
                        step: global_step,
                        temperature,
                        cost: current_cost,
                        accepted,
                    });
                }
                global_step += 1;
            }
            temperature *= params.cooling;
        }

        let best_perm = SitePermutation::new(best)?;
        if winner.as_ref().is_none_or(|(c, p)| better(best_cost, &best_perm, *c, p)) {
            winner = Some((best_cost, best_perm));
        }
    }
    let (best_cost, best) = winner.expect("at least one restart");
    OrderingReport::build(inputs, objective, best, best_cost, evaluations, trajectory)
}

/// Search method selector for batch front-ends.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Exhaustive,
    TwoOpt,
    Anneal,
}

/// Bundled search configuration.
#[derive(Clone, Debug)]
pub struct SearchConfig {
    pub objective: Objective,
    pub method: Method,
    pub seed: u64,
    pub restarts: usize,
    pub start: Option<SitePermutation>,
    pub anneal: AnnealParams,
    pub max_exhaustive_l: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            objective: Objective::default(),
            method: Method::Exhaustive,
            seed: 0,
            restarts: 20,
            start: None,
            anneal: AnnealParams::default(),
            max_exhaustive_l: DEFAULT_EXHAUSTIVE_CAP,
        }
    }
}

pub fn run_search(inputs: &CostInputs, config: &SearchConfig) -> Result<OrderingReport> {
    match config.method {
        Method::Exhaustive => exhaustive_with_cap(inputs, config.objective, config.max_exhaustive_l),
        Method::TwoOpt => match &config.start {
            Some(start) => two_opt(inputs, config.objective, start),
            None => two_opt_restarts(inputs, config.objective, config.restarts, config.seed),
        },
        Method::Anneal => {
            let mut params = config.anneal.clone();
            if config.restarts > 0 {
                params.restarts = config.restarts;
            }
            anneal(inputs, config.objective, &params, config.seed)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entropy::QmiMatrix;
    use approx::assert_abs_diff_eq;

    fn zero_inputs(l: usize) -> CostInputs {
        CostInputs::new(vec![0.0; l], QmiMatrix::new(l, 1.0, vec![0.0; l * l]).unwrap()).unwrap()
    }

    /// One strong pair I_{a,b} = 1, everything else zero.
    fn one_pair_inputs(l: usize, a: usize, b: usize) -> CostInputs {
        let mut entries = vec![0.0; l * l];
        entries[(a - 1) * l + (b - 1)] = 1.0;
        entries[(b - 1) * l + (a - 1)] = 1.0;
        CostInputs::new(vec![0.0; l], QmiMatrix::new(l, 1.0, entries).unwrap()).unwrap()
    }

    #[test]
    fn identity_and_reversal_cost_the_same() {
        let inputs = one_pair_inputs(5, 1, 4);
        let id = SitePermutation::identity(5);
        let cost_id = cost_of_ordering(&inputs, &id, Objective::default()).unwrap();
        let cost_rev = cost_of_ordering(&inputs, &id.reversed(), Objective::default()).unwrap();
        assert_abs_diff_eq!(cost_id, cost_rev, epsilon = 1e-12);
        assert_abs_diff_eq!(cost_id, 2.0 * 9.0, epsilon = 1e-12);
    }

    #[test]
    fn relabel_consistency_with_direct_evaluation() {
        let inputs = one_pair_inputs(6, 2, 5);
        let perm = SitePermutation::new(vec![3, 1, 6, 2, 5, 4]).unwrap();
        let direct = cost_of_ordering(&inputs, &perm, Objective::default()).unwrap();
        let relabeled = inputs.relabel(&perm).unwrap();
        let via_matrix = cost::idist(relabeled.qmi(), 2.0, Sign::Plus);
        assert_abs_diff_eq!(direct, via_matrix, epsilon = 1e-12);
    }

    #[test]
    fn exhaustive_zero_matrix_returns_identity() {
        let report = exhaustive(&zero_inputs(3), Objective::default()).unwrap();
        assert_eq!(report.best, vec![1, 2, 3]);
        assert_eq!(report.best_cost, 0.0);
        assert_eq!(report.evaluations, 3); // 3!/2 canonical orderings
    }

    #[test]
    fn exhaustive_places_the_strong_pair_adjacent() {
        let inputs = one_pair_inputs(5, 1, 5);
        let report = exhaustive(&inputs, Objective::default()).unwrap();
        assert_abs_diff_eq!(report.best_cost, 2.0, epsilon = 1e-12);
        let pos1 = report.best.iter().position(|&s| s == 1).unwrap();
        let pos5 = report.best.iter().position(|&s| s == 5).unwrap();
        assert_eq!(pos1.abs_diff(pos5), 1);
        assert_eq!(report.evaluations, 60);
    }

    #[test]
    fn exhaustive_respects_the_cap() {
        let inputs = zero_inputs(5);
        assert!(matches!(
            exhaustive_with_cap(&inputs, Objective::default(), 4),
            Err(Error::ExhaustiveCap { l: 5, cap: 4 })
        ));
    }

    #[test]
    fn two_opt_keeps_a_global_optimum() {
        let inputs = one_pair_inputs(5, 1, 5);
        let optimum = exhaustive(&inputs, Objective::default()).unwrap();
        let report =
            two_opt(&inputs, Objective::default(), &optimum.best_permutation()).unwrap();
        assert_eq!(report.best, optimum.best);
        assert_abs_diff_eq!(report.best_cost, optimum.best_cost, epsilon = 1e-12);
    }

    #[test]
    fn two_opt_descends_monotonically_from_any_start() {
        let inputs = one_pair_inputs(5, 1, 5);
        let optimum = exhaustive(&inputs, Objective::default()).unwrap();
        for perm in (1..=5).permutations(5) {
            let report =
                two_opt(&inputs, Objective::default(), &SitePermutation::new(perm).unwrap())
                    .unwrap();
            let costs: Vec<f64> =
                report.trajectory.as_ref().unwrap().iter().map(|p| p.cost).collect();
            assert!(costs.windows(2).all(|w| w[1] < w[0] - 1e-12 || w.len() < 2));
            assert_abs_diff_eq!(report.best_cost, optimum.best_cost, epsilon = 1e-12);
        }
    }

    #[test]
    fn anneal_zero_matrix_is_trivially_optimal() {
        let inputs = zero_inputs(5);
        let report =
            anneal(&inputs, Objective::default(), &AnnealParams::default(), 1).unwrap();
        assert_eq!(report.best_cost, 0.0);
    }

    #[test]
    fn anneal_is_deterministic_per_seed() {
        let inputs = one_pair_inputs(6, 2, 6);
        let mut params = AnnealParams::default();
        params.record_trajectory = true;
        let a = anneal(&inputs, Objective::default(), &params, 7).unwrap();
        let b = anneal(&inputs, Objective::default(), &params, 7).unwrap();
        assert_eq!(a.best, b.best);
        assert_eq!(a.best_cost, b.best_cost);
        assert_eq!(a.evaluations, b.evaluations);
        let ta = a.trajectory.as_ref().unwrap();
        let tb = b.trajectory.as_ref().unwrap();
        assert_eq!(ta.len(), tb.len());
        for (x, y) in ta.iter().zip(tb) {
            assert_eq!(x.cost, y.cost);
            assert_eq!(x.accepted, y.accepted);
        }
    }

    #[test]
    fn anneal_validates_config() {
        let mut params = AnnealParams::default();
        params.cooling = 1.5;
        assert!(anneal(&zero_inputs(4), Objective::default(), &params, 0).is_err());
    }

    #[test]
    fn ghz_like_matrix_makes_all_orderings_equal() {
        let l = 4;
        let mut entries = vec![1.0; l * l];
        for i in 0..l {
            entries[i * l + i] = 0.0;
        }
        let inputs =
            CostInputs::new(vec![1.0; l], QmiMatrix::new(l, 1.0, entries).unwrap()).unwrap();
        let reference =
            cost_of_ordering(&inputs, &SitePermutation::identity(l), Objective::default())
                .unwrap();
        for perm in (1..=l).permutations(l) {
            let cost = cost_of_ordering(
                &inputs,
                &SitePermutation::new(perm).unwrap(),
                Objective::default(),
            )
            .unwrap();
            assert_abs_diff_eq!(cost, reference, epsilon = 1e-12);
        }
    }
}
