//! Entropy measures on spectra and reduced states, pairwise quantum mutual
//! information, block entropies and the bond-dimension simulability bounds.
//!
//! Every entropy in this crate is base-2 (bits), so values plug directly
//! into the 2^x aggregation used by the ordering costs.

use std::collections::HashMap;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::{DenseState, DensityMatrix, SiteSubset, EIGENVALUE_FLOOR};

const QMI_NEGATIVITY_TOL: f64 = 1e-9;

/// Entropy order: 0 selects the Hartley (log-rank) limit, 1 the von Neumann
/// entropy, anything else the Renyi entropy of that order.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Alpha(f64);

impl Alpha {
    pub const HARTLEY: Alpha = Alpha(0.0);
    pub const VON_NEUMANN: Alpha = Alpha(1.0);

    pub fn new(alpha: f64) -> Result<Self> {
        if !alpha.is_finite() || alpha < 0.0 {
            return Err(Error::NegativeAlpha(alpha));
        }
        Ok(Self(alpha))
    }

    pub fn value(&self) -> f64 {
        self.0
    }

    pub fn is_von_neumann(&self) -> bool {
        self.0 == 1.0
    }
}

/// Entropy of a probability spectrum in bits.
///
/// Entries may be negative down to -1e-10 (clamped to zero) and the sum may
/// deviate from 1 by up to 1e-6 (renormalized); anything worse is an error.
/// Entries at or below 1e-12 are ignored for the von Neumann and Hartley
/// branches.
pub fn entropy(spectrum: &[f64], alpha: Alpha) -> Result<f64> {
    let mut clamped = Vec::with_capacity(spectrum.len());
    for &p in spectrum {
        if p < -1e-10 {
            return Err(Error::NegativeSpectrumEntry(p));
        }
        clamped.push(p.max(0.0));
    }
    let sum: f64 = clamped.iter().sum();
    if (sum - 1.0).abs() > 1e-6 {
        return Err(Error::SpectrumNotNormalized(sum));
    }
    for p in &mut clamped {
        *p /= sum;
    }
    let a = alpha.value();
    if a == 1.0 {
        Ok(clamped
            .iter()
            .filter(|&&p| p > EIGENVALUE_FLOOR)
            .map(|&p| -p * p.log2())
            .sum())
    } else if a == 0.0 {
        let rank = clamped.iter().filter(|&&p| p > EIGENVALUE_FLOOR).count();
        Ok((rank as f64).log2())
    } else {
        let z: f64 = clamped.iter().map(|&p| p.powf(a)).sum();
        Ok(z.log2() / (1.0 - a))
    }
}

pub fn entropy_of_density(rho: &DensityMatrix, alpha: Alpha) -> Result<f64> {
    entropy(rho.eigenvalues(), alpha)
}

/// Entropy of the subset's reduced state. For a pure global state the
/// nonzero reduced spectra of a subset and its complement coincide, so the
/// smaller side is diagonalized.
pub fn subset_entropy(state: &DenseState, subset: &SiteSubset, alpha: Alpha) -> Result<f64> {
    subset.check_range(state.num_sites())?;
    let side = if 2 * subset.len() > state.num_sites() && subset.len() < state.num_sites() {
        subset.complement(state.num_sites())?
    } else {
        subset.clone()
    };
    entropy_of_density(&state.reduced_density(&side)?, alpha)
}

/// Rank of the subset's reduced state with the 1e-12 eigenvalue cutoff.
pub fn subset_rank(state: &DenseState, subset: &SiteSubset) -> Result<usize> {
    subset.check_range(state.num_sites())?;
    let side = if 2 * subset.len() > state.num_sites() && subset.len() < state.num_sites() {
        subset.complement(state.num_sites())?
    } else {
        subset.clone()
    };
    Ok(state.reduced_density(&side)?.rank(EIGENVALUE_FLOOR))
}

/// Memoizes von Neumann subset entropies of one state, keyed by site mask.
/// The inequality replays evaluate the same few-site entropies many times.
pub struct SubsetEntropyCache<'a> {
    state: &'a DenseState,
    cache: HashMap<u64, f64>,
}

impl<'a> SubsetEntropyCache<'a> {
    pub fn new(state: &'a DenseState) -> Self {
        Self { state, cache: HashMap::new() }
    }

    pub fn von_neumann(&mut self, subset: &SiteSubset) -> Result<f64> {
        let mask = subset.mask();
        if let Some(&v) = self.cache.get(&mask) {
            return Ok(v);
        }
        let v = subset_entropy(self.state, subset, Alpha::VON_NEUMANN)?;
        self.cache.insert(mask, v);
        Ok(v)
    }
}

/// Quantum mutual information I_{i,j} = S_i + S_j - S_{ij} in bits.
///
/// At alpha = 1 subadditivity makes this nonnegative; values below -1e-9
/// are rejected as evidence of a broken reduced state and small negative
/// rounding is clamped to zero. For alpha != 1 the raw difference is
/// returned unchecked and may legitimately be negative.
pub fn qmi(state: &DenseState, i: usize, j: usize, alpha: Alpha) -> Result<f64> {
    if i == j {
        return Err(Error::EqualSites(i, j));
    }
    let l = state.num_sites();
    for site in [i, j] {
        if site < 1 || site > l {
            return Err(Error::SiteOutOfRange { site, max: l });
        }
    }
    let s_i = subset_entropy(state, &SiteSubset::single(i), alpha)?;
    let s_j = subset_entropy(state, &SiteSubset::single(j), alpha)?;
    let pair = SiteSubset::new([i.min(j), i.max(j)])?;
    let s_ij = subset_entropy(state, &pair, alpha)?;
    let value = s_i + s_j - s_ij;
    if alpha.is_von_neumann() {
        if value < -QMI_NEGATIVITY_TOL {
            return Err(Error::NegativeQmi { i, j, value });
        }
        Ok(value.max(0.0))
    } else {
        Ok(value)
    }
}

/// Symmetric L x L matrix of pairwise mutual informations, zero diagonal.
#[derive(Clone, Debug, PartialEq)]
pub struct QmiMatrix {
    l: usize,
    alpha: f64,
    entries: Vec<f64>,
}

impl QmiMatrix {
    /// Assemble from explicit entries, enforcing symmetry and zero diagonal.
    pub fn new(l: usize, alpha: f64, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != l * l {
            return Err(Error::LengthMismatch(format!(
                "{} entries for an {l} x {l} matrix",
                entries.len()
            )));
        }
        let m = Self { l, alpha, entries };
        for i in 1..=l {
            if m.get(i, i) != 0.0 {
                return Err(Error::Internal(format!("nonzero diagonal at {i}")));
            }
            for j in i + 1..=l {
                if (m.get(i, j) - m.get(j, i)).abs() > 1e-10 {
                    return Err(Error::Internal(format!("asymmetry at ({i}, {j})")));
                }
                if alpha == 1.0 && m.get(i, j) < -QMI_NEGATIVITY_TOL {
                    return Err(Error::NegativeQmi { i, j, value: m.get(i, j) });
                }
            }
        }
        Ok(m)
    }

    pub fn num_sites(&self) -> usize {
        self.l
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Entry I_{i,j} with 1-based sites.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[(i - 1) * self.l + (j - 1)]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    /// Relabel sites so position p carries original site perm[p]; costs on
    /// the relabeled matrix equal costs of the physically reordered chain.
    pub fn relabel(&self, perm: &crate::state::SitePermutation) -> Result<QmiMatrix> {
        if perm.len() != self.l {
            return Err(Error::BadPermutation(format!("{:?}", perm.as_slice()), self.l));
        }
        let mut entries = vec![0.0; self.l * self.l];
        for p in 1..=self.l {
            for q in 1..=self.l {
                entries[(p - 1) * self.l + (q - 1)] = self.get(perm.site_at(p), perm.site_at(q));
            }
        }
        Ok(QmiMatrix { l: self.l, alpha: self.alpha, entries })
    }
}

/// All pairwise mutual informations; each unordered pair is computed once.
pub fn qmi_matrix(state: &DenseState, alpha: Alpha) -> Result<QmiMatrix> {
    let l = state.num_sites();
    let mut entries = vec![0.0; l * l];
    let singles: Vec<f64> = (1..=l)
        .map(|k| subset_entropy(state, &SiteSubset::single(k), alpha))
        .collect::<Result<_>>()?;
    for i in 1..=l {
        for j in i + 1..=l {
            let s_ij = subset_entropy(state, &SiteSubset::new([i, j])?, alpha)?;
            let mut value = singles[i - 1] + singles[j - 1] - s_ij;
            if alpha.is_von_neumann() {
                if value < -QMI_NEGATIVITY_TOL {
                    return Err(Error::NegativeQmi { i, j, value });
                }
                value = value.max(0.0);
            }
            entries[(i - 1) * l + (j - 1)] = value;
            entries[(j - 1) * l + (i - 1)] = value;
        }
    }
    QmiMatrix::new(l, alpha.value(), entries)
}

/// Entropy of the left block {1..j} across cut `j`, from the Schmidt
/// spectrum (the SVD route, independent of the partial-trace route).
pub fn block_entropy(state: &DenseState, cut: usize, alpha: Alpha) -> Result<f64> {
    let spectrum = state.schmidt(cut)?;
    entropy(&spectrum.probabilities(), alpha)
}

/// Single-site and left-block entropies at one order.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EntropyProfile {
    pub alpha: f64,
    pub single_site: Vec<f64>,
    pub blocks: Vec<f64>,
}

pub fn entropy_profile(state: &DenseState, alpha: Alpha) -> Result<EntropyProfile> {
    let l = state.num_sites();
    let single_site = (1..=l)
        .map(|k| subset_entropy(state, &SiteSubset::single(k), alpha))
        .collect::<Result<Vec<_>>>()?;
    let blocks = (1..l).map(|j| block_entropy(state, j, alpha)).collect::<Result<Vec<_>>>()?;
    Ok(EntropyProfile { alpha: alpha.value(), single_site, blocks })
}

/// Von Neumann mutual information between two disjoint site subsets.
pub fn block_qmi(state: &DenseState, a: &SiteSubset, b: &SiteSubset) -> Result<f64> {
    a.is_disjoint(b)?;
    let union = a.union(b)?;
    union.check_range(state.num_sites())?;
    let s_a = subset_entropy(state, a, Alpha::VON_NEUMANN)?;
    let s_b = subset_entropy(state, b, Alpha::VON_NEUMANN)?;
    let s_ab = subset_entropy(state, &union, Alpha::VON_NEUMANN)?;
    Ok(s_a + s_b - s_ab)
}

/// Relative entropy S(rho || sigma) in bits, with sigma regularized as
/// (1 - 1e-10) sigma + 1e-10 I/dim so rank-deficient product marginals do
/// not produce log(0).
pub fn relative_entropy(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::LengthMismatch(format!(
            "density dimensions {} and {}",
            rho.dim(),
            sigma.dim()
        )));
    }
    let dim = rho.dim();
    let eps = 1e-10;
    let mut sig = sigma.entries() * C64::from(1.0 - eps);
    for k in 0..dim {
        sig[(k, k)] += C64::from(eps / dim as f64);
    }
    let rho_eig = rho.entries().clone().symmetric_eigen();
    let sig_eig = sig.symmetric_eigen();
    let mut value = 0.0;
    for i in 0..dim {
        let r = rho_eig.eigenvalues[i].max(0.0);
        if r <= EIGENVALUE_FLOOR {
            continue;
        }
        value += r * r.log2();
        for j in 0..dim {
            let overlap: C64 = rho_eig
                .eigenvectors
                .column(i)
                .iter()
                .zip(sig_eig.eigenvectors.column(j).iter())
                .map(|(a, b)| a.conj() * b)
                .sum();
            let p = overlap.norm_sqr();
            if p > 0.0 {
                value -= r * p * sig_eig.eigenvalues[j].max(f64::MIN_POSITIVE).log2();
            }
        }
    }
    Ok(value)
}

/// Truncation-error bound at bond dimension `chi` from a Renyi block entropy.
///
/// For 0 < alpha < 1 this is an upper bound on eps_j(chi), for alpha > 1 a
/// lower bound; the von Neumann and Hartley orders admit neither and are
/// rejected.
pub fn simbound(chi: usize, alpha: Alpha, s_alpha: f64) -> Result<f64> {
    if chi < 1 {
        return Err(Error::BadBondDimension);
    }
    let a = alpha.value();
    if a == 0.0 || a == 1.0 {
        return Err(Error::UnsupportedAlpha(a));
    }
    if a < 1.0 {
        let base = chi as f64 / (1.0 - a);
        Ok(base.powf((a - 1.0) / a) * ((1.0 - a) / a * s_alpha).exp2())
    } else {
        Ok(1.0 - (chi as f64).powf((a - 1.0) / a) * (-(a - 1.0) / a * s_alpha).exp2())
    }
}
