//! Matrix product states via sequential SVD, bond truncation and the
//! per-cut truncation-error accounting.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::{checked_dim, DenseState, SINGULAR_VALUE_CUTOFF};

/// Open-boundary matrix product state. Core `k` (0-based) is stored as a
/// (chi_k * d) x chi_{k+1} matrix whose row index is `left * d + physical`,
/// so a left-to-right contraction is a plain matrix product per physical
/// level.
#[derive(Clone, Debug)]
pub struct MatrixProductState {
    l: usize,
    d: usize,
    cores: Vec<DMatrix<C64>>,
    bond_dims: Vec<usize>,
}

impl MatrixProductState {
    pub fn new(l: usize, d: usize, cores: Vec<DMatrix<C64>>) -> Result<Self> {
        if l < 2 {
            return Err(Error::TooFewSites(l));
        }
        if d < 2 {
            return Err(Error::BadLocalDim(d));
        }
        if cores.len() != l {
            return Err(Error::LengthMismatch(format!("{} cores for {l} sites", cores.len())));
        }
        let mut bond_dims = Vec::with_capacity(l + 1);
        bond_dims.push(1usize);
        for (k, core) in cores.iter().enumerate() {
            let left = bond_dims[k];
            if core.nrows() != left * d {
                return Err(Error::LengthMismatch(format!(
                    "core {} has {} rows, expected {} * {}",
                    k + 1,
                    core.nrows(),
                    left,
                    d
                )));
            }
            bond_dims.push(core.ncols());
        }
        if *bond_dims.last().unwrap() != 1 {
            return Err(Error::LengthMismatch("last bond dimension must be 1".into()));
        }
        Ok(Self { l, d, cores, bond_dims })
    }

    /// Cores filled with standard-normal real and imaginary parts, bond
    /// dimensions clipped to min(chi, d^k, d^(L-k)). Deterministic in `rng`:
    /// cores are filled left to right, row-major, real part before imaginary.
    pub fn random<R: Rng>(l: usize, d: usize, chi: usize, rng: &mut R) -> Result<Self> {
        if chi < 1 {
            return Err(Error::BadBondDimension);
        }
        checked_dim(l, d)?;
        let bond = |k: usize| -> usize {
            let left = (d as u128).checked_pow(k as u32).unwrap_or(u128::MAX);
            let right = (d as u128).checked_pow((l - k) as u32).unwrap_or(u128::MAX);
            (chi as u128).min(left).min(right) as usize
        };
        let mut cores = Vec::with_capacity(l);
        for k in 0..l {
            let (left, right) = (bond(k), bond(k + 1));
            let mut core = DMatrix::<C64>::zeros(left * d, right);
            for r in 0..left * d {
                for c in 0..right {
                    let re: f64 = rng.sample(StandardNormal);
                    let im: f64 = rng.sample(StandardNormal);
                    core[(r, c)] = C64::new(re, im);
                }
            }
            cores.push(core);
        }
        Self::new(l, d, cores)
    }

    pub fn num_sites(&self) -> usize {
        self.l
    }

    pub fn local_dim(&self) -> usize {
        self.d
    }

    pub fn bond_dims(&self) -> &[usize] {
        &self.bond_dims
    }

    pub fn max_bond(&self) -> usize {
        self.bond_dims.iter().copied().max().unwrap_or(1)
    }

    pub fn cores(&self) -> &[DMatrix<C64>] {
        &self.cores
    }

    /// Contract all cores into the full amplitude vector (site 1 slowest).
    pub fn contract(&self) -> DVector<C64> {
        // Accumulator: (prefix dim D) x chi_k matrix.
        let mut acc = DMatrix::<C64>::identity(1, 1);
        for core in &self.cores {
            let d_prefix = acc.nrows();
            let chi_left = acc.ncols();
            let chi_right = core.ncols();
            let mut next = DMatrix::<C64>::zeros(d_prefix * self.d, chi_right);
            for s in 0..self.d {
                // Rows of `core` with physical level s: a * d + s.
                let slice = DMatrix::from_fn(chi_left, chi_right, |a, b| core[(a * self.d + s, b)]);
                let block = &acc * slice;
                for r in 0..d_prefix {
                    for b in 0..chi_right {
                        next[(r * self.d + s, b)] = block[(r, b)];
                    }
                }
            }
            acc = next;
        }
        DVector::from_column_slice(acc.column(0).as_slice())
    }
}

/// Left-to-right sequential SVD factorization with optional bond cap.
///
/// Returns the MPS and the per-cut discarded weight, measured on the state
/// entering each step (so later cuts see the effect of earlier truncations).
/// Without a cap only exact numerical zeros are dropped and the MPS
/// reconstructs the input to ~1e-10.
pub fn to_mps(state: &DenseState, chi_max: Option<usize>) -> Result<(MatrixProductState, Vec<f64>)> {
    if chi_max == Some(0) {
        return Err(Error::BadBondDimension);
    }
    let (l, d) = (state.num_sites(), state.local_dim());
    let mut per_cut_errors = Vec::with_capacity(l - 1);
    let mut cores = Vec::with_capacity(l);

    // Remaining factor: (chi * d^(k..)) amplitudes as a matrix.
    let mut rest = DMatrix::from_fn(d, state.dim() / d, |r, c| {
        state.amplitudes()[r * (state.dim() / d) + c]
    });
    for _cut in 1..l {
        let svd = rest.clone().svd(true, true);
        let u = svd.u.as_ref().expect("svd with u");
        let v_t = svd.v_t.as_ref().expect("svd with v_t");
        let sigma = &svd.singular_values;

        let mut keep = sigma.iter().filter(|&&s| s > SINGULAR_VALUE_CUTOFF).count().max(1);
        if let Some(cap) = chi_max {
            keep = keep.min(cap);
        }
        let discarded: f64 = sigma.iter().skip(keep).map(|s| s * s).sum();
        per_cut_errors.push(discarded);

        cores.push(u.columns(0, keep).into_owned());
        // Carry sigma * V^t forward and expose the next physical index.
        let mut carry = v_t.rows(0, keep).into_owned();
        for (r, &s) in sigma.iter().take(keep).enumerate() {
            for c in 0..carry.ncols() {
                carry[(r, c)] *= C64::from(s);
            }
        }
        let next_cols = carry.ncols() / d;
        rest = DMatrix::from_fn(keep * d, next_cols, |r, c| {
            let (a, s) = (r / d, r % d);
            carry[(a, s * next_cols + c)]
        });
    }
    cores.push(rest);
    let mps = MatrixProductState::new(l, d, cores)?;
    Ok((mps, per_cut_errors))
}

/// Idealized and realized truncation error at bond dimension `chi`.
///
/// `per_cut` holds the discarded weight of the *original* state's Schmidt
/// spectrum at each cut; `total` is their sum, an upper bound for the
/// realized sweep error which is checked here. `sweep_per_cut` holds the
/// weights actually discarded during the sequential sweep.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TruncationProfile {
    pub chi: usize,
    pub per_cut: Vec<f64>,
    pub total: f64,
    pub realized: f64,
    pub sweep_per_cut: Vec<f64>,
}

pub fn truncation_profile(state: &DenseState, chi: usize) -> Result<TruncationProfile> {
    if chi < 1 {
        return Err(Error::BadBondDimension);
    }
    let l = state.num_sites();
    let mut per_cut = Vec::with_capacity(l - 1);
    for j in 1..l {
        per_cut.push(state.schmidt(j)?.truncation_error_sq(chi));
    }
    let total: f64 = per_cut.iter().sum();

    let (mps, sweep_per_cut) = to_mps(state, Some(chi))?;
    let reconstructed = mps.contract();
    let realized: f64 = state
        .amplitudes()
        .iter()
        .zip(reconstructed.iter())
        .map(|(a, b)| (a - b).norm_sqr())
        .sum();
    if realized > total + 1e-9 {
        return Err(Error::Internal(format!(
            "realized truncation error {realized} exceeds the subadditive bound {total}"
        )));
    }
    Ok(TruncationProfile { chi, per_cut, total, realized, sweep_per_cut })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn max_deviation(a: &DenseState, b: &DVector<C64>) -> f64 {
        a.amplitudes().iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    #[test]
    fn lossless_round_trip_random_state() {
        let psi = generate::random_mps(6, 2, 4, 3).unwrap();
        let (mps, errors) = to_mps(&psi, None).unwrap();
        assert!(errors.iter().all(|&e| e < 1e-20));
        assert!(max_deviation(&psi, &mps.contract()) < 1e-10);
        let psi3 = generate::random_mps(4, 3, 3, 9).unwrap();
        let (mps3, _) = to_mps(&psi3, None).unwrap();
        assert!(max_deviation(&psi3, &mps3.contract()) < 1e-10);
    }

    #[test]
    fn product_state_truncates_to_chi_one_exactly() {
        let psi = generate::basis_product(4, 2, &[0, 1, 1, 0]).unwrap();
        let (mps, errors) = to_mps(&psi, Some(1)).unwrap();
        assert!(errors.iter().all(|&e| e.abs() < 1e-20));
        assert_eq!(mps.max_bond(), 1);
        assert!(max_deviation(&psi, &mps.contract()) < 1e-12);
    }

    #[test]
    fn ghz_chi_one_sweep_error() {
        let psi = generate::ghz(4, 2).unwrap();
        let (_, errors) = to_mps(&psi, Some(1)).unwrap();
        assert_abs_diff_eq!(errors[0], 0.5, epsilon = 1e-12);
        // After the first truncation the leftover is a product piece.
        assert!(errors[1].abs() < 1e-12 && errors[2].abs() < 1e-12);
    }

    #[test]
    fn ghz_truncation_profile_fixture() {
        let psi = generate::ghz(4, 2).unwrap();
        let profile = truncation_profile(&psi, 1).unwrap();
        for e in &profile.per_cut {
            assert_abs_diff_eq!(*e, 0.5, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(profile.total, 1.5, epsilon = 1e-12);
        assert!(profile.realized <= profile.total + 1e-9);

        let exact = truncation_profile(&psi, 2).unwrap();
        assert_abs_diff_eq!(exact.total, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(exact.realized, 0.0, epsilon = 1e-10);
    }

    #[test]
    fn profile_of_wide_spectrum_matches_tail_sum() {
        // Two-site state with Schmidt probabilities (0.9, 0.1).
        let a = 0.9f64.sqrt();
        let b = 0.1f64.sqrt();
        let psi = DenseState::new(
            2,
            2,
            vec![C64::new(a, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(b, 0.0)],
        )
        .unwrap();
        let profile = truncation_profile(&psi, 1).unwrap();
        assert_abs_diff_eq!(profile.per_cut[0], 0.1, epsilon = 1e-12);
    }

    #[test]
    fn random_mps_bond_dims_are_clipped() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mps = MatrixProductState::random(5, 2, 7, &mut rng).unwrap();
        assert_eq!(mps.bond_dims(), &[1, 2, 4, 4, 2, 1]);
    }

    #[test]
    fn realized_error_is_bounded_by_idealized_total() {
        for seed in 0..20 {
            let psi = generate::random_mps(7, 2, 4, seed).unwrap();
            for chi in 1..=3 {
                let p = truncation_profile(&psi, chi).unwrap();
                assert!(p.realized <= p.total + 1e-9, "seed {seed} chi {chi}");
            }
        }
    }
}
