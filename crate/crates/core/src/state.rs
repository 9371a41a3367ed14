//! Dense pure states, site subsets, Schmidt spectra and reduced density
//! matrices.
//!
//! Amplitudes are stored with site 1 slowest-varying: basis state
//! |s_1 s_2 ... s_L> sits at flat index s_1 d^(L-1) + s_2 d^(L-2) + ... + s_L.
//! With that layout the bipartition {1..j} | {j+1..L} is a contiguous
//! d^j x d^(L-j) matrix view of the amplitude vector.
//!
//! Sites are numbered 1..=L throughout the public API.

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

pub(crate) const NORM_TOL: f64 = 1e-9;
pub(crate) const HERMITICITY_TOL: f64 = 1e-10;
pub(crate) const PSD_TOL: f64 = 1e-10;
/// Singular values below this are treated as exact zeros for rank purposes.
pub const SINGULAR_VALUE_CUTOFF: f64 = 1e-12;
/// Probability (eigenvalue) floor used for 0*log(0) and rank counting.
pub const EIGENVALUE_FLOOR: f64 = 1e-12;

const DEFAULT_AMPLITUDE_BUDGET: usize = 1 << 20;

/// Maximum number of amplitudes any dense object may hold, overridable via
/// the `ENTORDER_MAX_AMPLITUDES` environment variable (read once per process).
pub fn amplitude_budget() -> usize {
    static BUDGET: OnceLock<usize> = OnceLock::new();
    *BUDGET.get_or_init(|| {
        std::env::var("ENTORDER_MAX_AMPLITUDES")
            .ok()
            .and_then(|v| v.parse().ok())
            .unwrap_or(DEFAULT_AMPLITUDE_BUDGET)
    })
}

pub(crate) fn checked_dim(l: usize, d: usize) -> Result<usize> {
    let needed = (d as u128).checked_pow(l as u32).unwrap_or(u128::MAX);
    let cap = amplitude_budget();
    if needed > cap as u128 {
        return Err(Error::BudgetExceeded { needed, cap });
    }
    Ok(needed as usize)
}

/// How a state was produced. Only the Slater generator is tracked; the
/// singular-value pairing check is meaningful for those states alone.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StateOrigin {
    Generic,
    Slater { particles: usize },
}

/// A normalized pure state of `L` sites with local dimension `d`, held as a
/// full complex amplitude vector. Ground truth for every oracle in the crate.
#[derive(Clone, Debug)]
pub struct DenseState {
    l: usize,
    d: usize,
    amps: DVector<C64>,
    origin: StateOrigin,
}

impl DenseState {
    /// Build a state from raw amplitudes, validating length, norm and budget.
    pub fn new(l: usize, d: usize, amps: Vec<C64>) -> Result<Self> {
        if l < 2 {
            return Err(Error::TooFewSites(l));
        }
        if d < 2 {
            return Err(Error::BadLocalDim(d));
        }
        let dim = checked_dim(l, d)?;
        if amps.len() != dim {
            return Err(Error::AmplitudeLength { expected: dim, got: amps.len() });
        }
        let amps = DVector::from_vec(amps);
        let norm_sq = amps.norm_squared();
        if (norm_sq - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized(norm_sq));
        }
        Ok(Self { l, d, amps, origin: StateOrigin::Generic })
    }

    /// Same as [`DenseState::new`] but renormalizes instead of rejecting, for
    /// generator output whose norm is only correct up to rounding.
    pub(crate) fn from_unnormalized(l: usize, d: usize, mut amps: DVector<C64>) -> Result<Self> {
        let norm = amps.norm();
        if norm < 1e-12 {
            return Err(Error::NotNormalized(0.0));
        }
        amps /= C64::from(norm);
        Ok(Self { l, d, amps, origin: StateOrigin::Generic })
    }

    pub(crate) fn with_origin(mut self, origin: StateOrigin) -> Self {
        self.origin = origin;
        self
    }

    pub fn num_sites(&self) -> usize {
        self.l
    }

    pub fn local_dim(&self) -> usize {
        self.d
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        self.amps.as_slice()
    }

    pub fn origin(&self) -> StateOrigin {
        self.origin
    }

    pub fn norm_squared(&self) -> f64 {
        self.amps.norm_squared()
    }

    /// d^(L-k): stride of site `k` (1-based) in the flat index.
    fn site_stride(&self, site: usize) -> usize {
        self.d.pow((self.l - site) as u32)
    }

    /// Singular values of the d^j x d^(L-j) unfolding at cut `j`, sorted
    /// nonincreasing. Squared values are the eigenvalues of the left-block
    /// reduced density matrix.
    pub fn schmidt(&self, cut: usize) -> Result<SchmidtSpectrum> {
        if cut < 1 || cut >= self.l {
            return Err(Error::CutOutOfRange { cut, max: self.l - 1 });
        }
        let rows = self.d.pow(cut as u32);
        let cols = self.dim() / rows;
        // Row-major unfolding: the amplitude vector is already laid out as
        // (left block, right block) with the left block slowest.
        let m = DMatrix::from_fn(rows, cols, |r, c| self.amps[r * cols + c]);
        let mut values: Vec<f64> = m.svd(false, false).singular_values.iter().copied().collect();
        values.sort_by(|a, b| b.total_cmp(a));
        SchmidtSpectrum::new(values, cut)
    }

    /// Reduced density matrix of `subset`, tracing out its complement.
    pub fn reduced_density(&self, subset: &SiteSubset) -> Result<DensityMatrix> {
        subset.check_range(self.l)?;
        let m = subset.len();
        let kept_dim = (self.d as u128).checked_pow(m as u32).unwrap_or(u128::MAX);
        // The density matrix itself must fit the amplitude budget.
        let cap = amplitude_budget();
        if kept_dim.saturating_mul(kept_dim) > cap as u128 {
            return Err(Error::BudgetExceeded { needed: kept_dim * kept_dim, cap });
        }
        let kept_dim = kept_dim as usize;
        let env_dim = self.dim() / kept_dim;

        // Gather psi into a (kept, traced) matrix, then rho = M M^dagger.
        let complement: Vec<usize> = (1..=self.l).filter(|s| !subset.contains(*s)).collect();
        let kept_strides: Vec<usize> = subset.sites().iter().map(|&s| self.site_stride(s)).collect();
        let env_strides: Vec<usize> = complement.iter().map(|&s| self.site_stride(s)).collect();

        let mut gathered = DMatrix::<C64>::zeros(kept_dim, env_dim);
        for x in 0..self.dim() {
            let mut a = 0;
            for &stride in &kept_strides {
                a = a * self.d + (x / stride) % self.d;
            }
            let mut b = 0;
            for &stride in &env_strides {
                b = b * self.d + (x / stride) % self.d;
            }
            gathered[(a, b)] = self.amps[x];
        }
        let rho = &gathered * gathered.adjoint();
        DensityMatrix::new(rho)
    }

    /// Reorder sites so that chain position `p` holds the original site
    /// `perm[p]`. In fermionic mode (d = 2 occupation basis) each amplitude
    /// additionally picks up the parity sign of the permutation restricted to
    /// its occupied sites, matching a Jordan-Wigner mode relabeling.
    pub fn permute_sites(&self, perm: &SitePermutation, fermionic: bool) -> Result<DenseState> {
        if perm.len() != self.l {
            return Err(Error::BadPermutation(format!("{:?}", perm.as_slice()), self.l));
        }
        if fermionic && self.d != 2 {
            return Err(Error::FermionicNeedsQubits(self.d));
        }
        let inverse = perm.inverse();
        let mut out = DVector::<C64>::zeros(self.dim());
        let strides: Vec<usize> = (1..=self.l).map(|s| self.site_stride(s)).collect();
        let mut occupied_positions: Vec<usize> = Vec::with_capacity(self.l);
        for x in 0..self.dim() {
            // Destination index: new position p carries the digit of site perm[p].
            let mut y = 0;
            for p in 1..=self.l {
                y = y * self.d + (x / strides[perm.site_at(p) - 1]) % self.d;
            }
            let mut amp = self.amps[x];
            if fermionic {
                occupied_positions.clear();
                for site in 1..=self.l {
                    if (x / strides[site - 1]) % 2 == 1 {
                        occupied_positions.push(inverse.site_at(site));
                    }
                }
                if parity_of_inversions(&occupied_positions) {
                    amp = -amp;
                }
            }
            out[y] = amp;
        }
        let origin = match (self.origin, fermionic) {
            (StateOrigin::Slater { particles }, true) => StateOrigin::Slater { particles },
            _ => StateOrigin::Generic,
        };
        Ok(DenseState { l: self.l, d: self.d, amps: out, origin })
    }
}

/// True if sorting `seq` requires an odd number of transpositions.
fn parity_of_inversions(seq: &[usize]) -> bool {
    let mut inversions = 0usize;
    for i in 0..seq.len() {
        for j in i + 1..seq.len() {
            if seq[i] > seq[j] {
                inversions += 1;
            }
        }
    }
    inversions % 2 == 1
}

/// A permutation of sites 1..=L; `site_at(p)` is the original site placed at
/// chain position `p`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SitePermutation {
    perm: Vec<usize>,
}

impl SitePermutation {
    pub fn new(perm: Vec<usize>) -> Result<Self> {
        let l = perm.len();
        let mut seen = vec![false; l + 1];
        for &p in &perm {
            if p < 1 || p > l || seen[p] {
                return Err(Error::BadPermutation(format!("{perm:?}"), l));
            }
            seen[p] = true;
        }
        Ok(Self { perm })
    }

    pub fn identity(l: usize) -> Self {
        Self { perm: (1..=l).collect() }
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    /// Original site at chain position `p` (1-based).
    pub fn site_at(&self, p: usize) -> usize {
        self.perm[p - 1]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.perm
    }

    pub fn reversed(&self) -> Self {
        let mut perm = self.perm.clone();
        perm.reverse();
        Self { perm }
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.perm.len()];
        for (pos0, &site) in self.perm.iter().enumerate() {
            inv[site - 1] = pos0 + 1;
        }
        Self { perm: inv }
    }

    /// Apply `self` then `other`: `compose(self, other).site_at(p) =
    /// self.site_at(other.site_at(p))`. Permuting a state by `self` and then
    /// by `other` equals permuting once by this composition.
    pub fn compose(&self, other: &Self) -> Self {
        let perm = (1..=self.perm.len()).map(|p| self.site_at(other.site_at(p))).collect();
        Self { perm }
    }

    /// The lexicographically smaller of the permutation and its reversal.
    /// Distance-based chain costs cannot tell a chain from its mirror.
    pub fn canonical(&self) -> Self {
        let rev = self.reversed();
        if rev.perm < self.perm {
            rev
        } else {
            self.clone()
        }
    }
}

/// Nonempty strictly increasing set of sites in 1..=L.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SiteSubset {
    sites: Vec<usize>,
}

impl SiteSubset {
    pub fn new(sites: impl IntoIterator<Item = usize>) -> Result<Self> {
        let sites: Vec<usize> = sites.into_iter().collect();
        if sites.is_empty() {
            return Err(Error::BadSubset("empty".into()));
        }
        if sites.iter().any(|&s| s == 0) {
            return Err(Error::BadSubset("sites are 1-based".into()));
        }
        if !sites.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::BadSubset(format!("{sites:?} is not strictly increasing")));
        }
        Ok(Self { sites })
    }

    pub fn single(site: usize) -> Self {
        Self { sites: vec![site] }
    }

    pub fn range(lo: usize, hi: usize) -> Result<Self> {
        if lo == 0 || hi < lo {
            return Err(Error::BadSubset(format!("bad range [{lo}, {hi}]")));
        }
        Ok(Self { sites: (lo..=hi).collect() })
    }

    pub fn sites(&self) -> &[usize] {
        &self.sites
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, site: usize) -> bool {
        self.sites.binary_search(&site).is_ok()
    }

    pub fn check_range(&self, l: usize) -> Result<()> {
        match self.sites.last() {
            Some(&max) if max > l => Err(Error::SiteOutOfRange { site: max, max: l }),
            _ => Ok(()),
        }
    }

    pub fn is_disjoint(&self, other: &Self) -> Result<()> {
        for &s in &self.sites {
            if other.contains(s) {
                return Err(Error::OverlappingSubsets(s));
            }
        }
        Ok(())
    }

    pub fn union(&self, other: &Self) -> Result<Self> {
        self.is_disjoint(other)?;
        let mut sites: Vec<usize> = self.sites.iter().chain(&other.sites).copied().collect();
        sites.sort_unstable();
        Ok(Self { sites })
    }

    pub fn complement(&self, l: usize) -> Result<Self> {
        self.check_range(l)?;
        let sites: Vec<usize> = (1..=l).filter(|s| !self.contains(*s)).collect();
        if sites.is_empty() {
            return Err(Error::BadSubset("complement of the full chain is empty".into()));
        }
        Ok(Self { sites })
    }

    /// Bitmask with bit (site - 1) set; usable as a cache key for L <= 64.
    pub fn mask(&self) -> u64 {
        self.sites.iter().fold(0u64, |m, &s| m | (1u64 << (s - 1)))
    }

    pub fn from_mask(mask: u64) -> Result<Self> {
        Self::new((1..=64usize).filter(|s| mask & (1u64 << (s - 1)) != 0))
    }
}

/// Singular values across one bipartition cut, sorted nonincreasing.
#[derive(Clone, Debug)]
pub struct SchmidtSpectrum {
    values: Vec<f64>,
    cut: usize,
}

impl SchmidtSpectrum {
    pub fn new(values: Vec<f64>, cut: usize) -> Result<Self> {
        if !values.windows(2).all(|w| w[0] >= w[1]) || values.iter().any(|&v| v < 0.0) {
            return Err(Error::Internal("Schmidt values must be nonincreasing and nonnegative".into()));
        }
        Ok(Self { values, cut })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn cut(&self) -> usize {
        self.cut
    }

    /// Squared singular values: the reduced-density eigenvalues of the block.
    pub fn probabilities(&self) -> Vec<f64> {
        self.values.iter().map(|v| v * v).collect()
    }

    /// Number of singular values above the zero cutoff.
    pub fn rank(&self) -> usize {
        self.values.iter().filter(|&&v| v > SINGULAR_VALUE_CUTOFF).count()
    }

    /// Discarded weight when keeping at most `chi` values.
    pub fn truncation_error_sq(&self, chi: usize) -> f64 {
        self.values.iter().skip(chi).map(|v| v * v).sum()
    }
}

/// A validated density operator: Hermitian, unit trace, positive
/// semidefinite within tolerance. Eigenvalues are computed on construction
/// (the positivity check needs them anyway) and cached sorted nonincreasing.
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    entries: DMatrix<C64>,
    eigenvalues: Vec<f64>,
}

impl DensityMatrix {
    pub fn new(entries: DMatrix<C64>) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(Error::NotHermitian(f64::INFINITY));
        }
        let adj = entries.adjoint();
        let dev = (&entries - &adj).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if dev > HERMITICITY_TOL {
            return Err(Error::NotHermitian(dev));
        }
        let trace = entries.trace();
        if (trace.re - 1.0).abs() > NORM_TOL || trace.im.abs() > NORM_TOL {
            return Err(Error::BadTrace(trace.re));
        }
        // Work on the Hermitized matrix so rounding in the input cannot leak
        // complex eigenvalues into the spectrum.
        let herm = (&entries + adj) * C64::from(0.5);
        let mut eigenvalues: Vec<f64> =
            herm.symmetric_eigen().eigenvalues.iter().copied().collect();
        eigenvalues.sort_by(|a, b| b.total_cmp(a));
        if let Some(&min) = eigenvalues.last() {
            if min < -PSD_TOL {
                return Err(Error::NotPositiveSemidefinite(min));
            }
        }
        for v in &mut eigenvalues {
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        Ok(Self { entries, eigenvalues })
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<C64> {
        &self.entries
    }

    /// Eigenvalues sorted nonincreasing, clamped at zero from below.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn rank(&self, cutoff: f64) -> usize {
        self.eigenvalues.iter().filter(|&&v| v > cutoff).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate;
    use approx::assert_abs_diff_eq;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn new_rejects_bad_inputs() {
        assert!(DenseState::new(1, 2, vec![c(1.0), c(0.0)]).is_err());
        assert!(DenseState::new(2, 1, vec![c(1.0), c(0.0)]).is_err());
        assert!(DenseState::new(2, 2, vec![c(1.0); 3]).is_err());
        assert!(DenseState::new(2, 2, vec![c(0.7), c(0.0), c(0.0), c(0.0)]).is_err());
    }

    #[test]
    fn schmidt_of_product_state_is_rank_one() {
        let psi = generate::basis_product(3, 2, &[0, 1, 0]).unwrap();
        for cut in 1..3 {
            let spec = psi.schmidt(cut).unwrap();
            assert_eq!(spec.rank(), 1);
            assert_abs_diff_eq!(spec.values()[0], 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn schmidt_of_ghz_mid_cut() {
        let psi = generate::ghz(4, 2).unwrap();
        let spec = psi.schmidt(2).unwrap();
        assert_eq!(spec.rank(), 2);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert_abs_diff_eq!(spec.values()[0], r, epsilon = 1e-12);
        assert_abs_diff_eq!(spec.values()[1], r, epsilon = 1e-12);
        assert!(psi.schmidt(0).is_err());
        assert!(psi.schmidt(4).is_err());
    }

    #[test]
    fn schmidt_probabilities_match_rdm_eigenvalues() {
        let psi = generate::w_state(4).unwrap();
        let spec = psi.schmidt(2).unwrap();
        let rho = psi.reduced_density(&SiteSubset::range(1, 2).unwrap()).unwrap();
        let probs = spec.probabilities();
        assert_abs_diff_eq!(probs.iter().sum::<f64>(), 1.0, epsilon = 1e-9);
        for (p, e) in probs.iter().zip(rho.eigenvalues()) {
            assert_abs_diff_eq!(p, e, epsilon = 1e-9);
        }
    }

    #[test]
    fn ghz_reduced_densities() {
        let psi = generate::ghz(4, 2).unwrap();
        let rho1 = psi.reduced_density(&SiteSubset::single(1)).unwrap();
        assert_abs_diff_eq!(rho1.entries()[(0, 0)].re, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(rho1.entries()[(1, 1)].re, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(rho1.entries()[(0, 1)].norm(), 0.0, epsilon = 1e-12);

        // Non-adjacent subset {1,3}: still perfectly classically correlated.
        let rho13 = psi.reduced_density(&SiteSubset::new([1, 3]).unwrap()).unwrap();
        for (i, want) in [(0usize, 0.5), (1, 0.0), (2, 0.0), (3, 0.5)] {
            assert_abs_diff_eq!(rho13.entries()[(i, i)].re, want, epsilon = 1e-12);
        }
    }

    #[test]
    fn full_subset_reduced_density_is_projector() {
        let psi = generate::w_state(3).unwrap();
        let rho = psi.reduced_density(&SiteSubset::range(1, 3).unwrap()).unwrap();
        let eigs = rho.eigenvalues();
        assert_abs_diff_eq!(eigs[0], 1.0, epsilon = 1e-10);
        assert!(eigs[1..].iter().all(|&v| v < 1e-10));
    }

    #[test]
    fn permutation_validation_and_identity() {
        assert!(SitePermutation::new(vec![1, 1, 3]).is_err());
        assert!(SitePermutation::new(vec![0, 1, 2]).is_err());
        let psi = generate::w_state(3).unwrap();
        let same = psi.permute_sites(&SitePermutation::identity(3), false).unwrap();
        for (a, b) in psi.amplitudes().iter().zip(same.amplitudes()) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn qudit_swap_moves_product_factors() {
        let psi = generate::basis_product(3, 2, &[1, 0, 0]).unwrap();
        let perm = SitePermutation::new(vec![2, 1, 3]).unwrap();
        let swapped = psi.permute_sites(&perm, false).unwrap();
        let expect = generate::basis_product(3, 2, &[0, 1, 0]).unwrap();
        for (a, b) in swapped.amplitudes().iter().zip(expect.amplitudes()) {
            assert_abs_diff_eq!((a - b).norm(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn permutation_compose_matches_sequential_application() {
        let psi = generate::w_state(4).unwrap();
        let a = SitePermutation::new(vec![2, 4, 1, 3]).unwrap();
        let b = SitePermutation::new(vec![3, 1, 4, 2]).unwrap();
        let sequential =
            psi.permute_sites(&a, false).unwrap().permute_sites(&b, false).unwrap();
        let composed = psi.permute_sites(&a.compose(&b), false).unwrap();
        for (x, y) in sequential.amplitudes().iter().zip(composed.amplitudes()) {
            assert_eq!(x, y);
        }
    }

    #[test]
    fn fermionic_permutation_requires_qubits() {
        let psi = generate::ghz(2, 3).unwrap();
        let err = psi.permute_sites(&SitePermutation::identity(2).reversed(), true);
        assert!(err.is_err());
    }

    #[test]
    fn subset_validation() {
        assert!(SiteSubset::new([]).is_err());
        assert!(SiteSubset::new([2, 2]).is_err());
        assert!(SiteSubset::new([3, 1]).is_err());
        let s = SiteSubset::new([1, 3]).unwrap();
        assert!(s.check_range(2).is_err());
        let c = s.complement(4).unwrap();
        assert_eq!(c.sites(), &[2, 4]);
        assert_eq!(SiteSubset::from_mask(s.mask()).unwrap(), s);
    }

    #[test]
    fn density_matrix_rejects_corrupted_inputs() {
        // Non-Hermitian.
        let m = DMatrix::from_row_slice(2, 2, &[c(0.5), c(0.3), c(0.1), c(0.5)]);
        assert!(matches!(DensityMatrix::new(m), Err(Error::NotHermitian(_))));
        // Hermitian but not PSD.
        let m = DMatrix::from_row_slice(2, 2, &[c(1.2), c(0.0), c(0.0), c(-0.2)]);
        assert!(matches!(DensityMatrix::new(m), Err(Error::NotPositiveSemidefinite(_))));
        // Wrong trace.
        let m = DMatrix::from_row_slice(2, 2, &[c(0.9), c(0.0), c(0.0), c(0.9)]);
        assert!(matches!(DensityMatrix::new(m), Err(Error::BadTrace(_))));
    }
}
