//! Test-state generators: product states, GHZ, W, Slater determinants,
//! exact-diagonalization ground states and random matrix product states.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::mps::MatrixProductState;
use crate::state::{checked_dim, DenseState, StateOrigin};

const ORTHONORMALITY_TOL: f64 = 1e-10;
/// Dense 2^L x 2^L diagonalization is kept to desk scale.
pub const GROUND_STATE_MAX_SITES: usize = 12;

/// Tensor product of per-site local vectors. Each local vector must have
/// length `d`; vectors are normalized (zero vectors are rejected).
pub fn product_state(l: usize, d: usize, locals: &[Vec<C64>]) -> Result<DenseState> {
    if l < 2 {
        return Err(Error::TooFewSites(l));
    }
    if d < 2 {
        return Err(Error::BadLocalDim(d));
    }
    if locals.len() != l {
        return Err(Error::LengthMismatch(format!(
            "{} local vectors for {l} sites",
            locals.len()
        )));
    }
    let dim = checked_dim(l, d)?;
    let mut normalized: Vec<Vec<C64>> = Vec::with_capacity(l);
    for (k, v) in locals.iter().enumerate() {
        if v.len() != d {
            return Err(Error::LocalVectorLength { site: k + 1, expected: d, got: v.len() });
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-12 {
            return Err(Error::ZeroLocalVector(k + 1));
        }
        normalized.push(v.iter().map(|z| z / norm).collect());
    }
    let mut amps = DVector::from_element(1, C64::new(1.0, 0.0));
    for v in &normalized {
        let mut next = DVector::zeros(amps.len() * d);
        for (i, a) in amps.iter().enumerate() {
            for (s, z) in v.iter().enumerate() {
                next[i * d + s] = a * z;
            }
        }
        amps = next;
    }
    debug_assert_eq!(amps.len(), dim);
    DenseState::from_unnormalized(l, d, amps)
}

/// Computational-basis product state |levels[0] levels[1] ...>.
pub fn basis_product(l: usize, d: usize, levels: &[usize]) -> Result<DenseState> {
    let locals: Vec<Vec<C64>> = levels
        .iter()
        .map(|&s| {
            let mut v = vec![C64::new(0.0, 0.0); d];
            if s < d {
                v[s] = C64::new(1.0, 0.0);
            }
            v
        })
        .collect();
    if levels.iter().any(|&s| s >= d) {
        return Err(Error::Parse(format!("basis level out of range 0..{d}")));
    }
    product_state(l, d, &locals)
}

/// (|0...0> + |1...1>)/sqrt(2).
pub fn ghz(l: usize, d: usize) -> Result<DenseState> {
    if l < 2 {
        return Err(Error::TooFewSites(l));
    }
    if d < 2 {
        return Err(Error::BadLocalDim(d));
    }
    let dim = checked_dim(l, d)?;
    let mut amps = vec![C64::new(0.0, 0.0); dim];
    let r = std::f64::consts::FRAC_1_SQRT_2;
    amps[0] = C64::new(r, 0.0);
    let ones = (0..l).fold(0usize, |acc, _| acc * d + 1);
    amps[ones] = C64::new(r, 0.0);
    DenseState::new(l, d, amps)
}

/// Uniform superposition of the single-excitation qubit basis states.
pub fn w_state(l: usize) -> Result<DenseState> {
    if l < 2 {
        return Err(Error::TooFewSites(l));
    }
    let dim = checked_dim(l, 2)?;
    let mut amps = vec![C64::new(0.0, 0.0); dim];
    let a = 1.0 / (l as f64).sqrt();
    for k in 1..=l {
        amps[1 << (l - k)] = C64::new(a, 0.0);
    }
    DenseState::new(l, 2, amps)
}

/// Second quantization of a Slater determinant with `N` particles in `L`
/// orbitals. The amplitude of occupation pattern `x` with |x| = N is the
/// determinant of the NxN submatrix of `coeffs` formed by the occupied rows
/// in increasing order; Cauchy-Binet makes the result normalized.
pub fn slater(coeffs: &DMatrix<f64>) -> Result<DenseState> {
    let l = coeffs.nrows();
    let n = coeffs.ncols();
    if l < 2 {
        return Err(Error::TooFewSites(l));
    }
    if n == 0 || n > l {
        return Err(Error::BadParticleCount { n, l });
    }
    let gram = coeffs.transpose() * coeffs;
    let dev = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| (gram[(i, j)] - if i == j { 1.0 } else { 0.0 }).abs())
        .fold(0.0, f64::max);
    if dev > ORTHONORMALITY_TOL {
        return Err(Error::NonOrthonormalColumns(dev));
    }
    let dim = checked_dim(l, 2)?;
    let mut amps = vec![C64::new(0.0, 0.0); dim];
    let mut rows: Vec<usize> = Vec::with_capacity(n);
    for x in 0..dim {
        if x.count_ones() as usize != n {
            continue;
        }
        rows.clear();
        for k in 0..l {
            if (x >> (l - 1 - k)) & 1 == 1 {
                rows.push(k);
            }
        }
        let sub = DMatrix::from_fn(n, n, |i, j| coeffs[(rows[i], j)]);
        amps[x] = C64::new(sub.determinant(), 0.0);
    }
    Ok(DenseState::from_unnormalized(l, 2, DVector::from_vec(amps))?
        .with_origin(StateOrigin::Slater { particles: n }))
}

/// Random real orthonormal L x N coefficient matrix, deterministic per seed.
pub fn random_orthonormal(l: usize, n: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = DMatrix::from_fn(l, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = m.qr();
    qr.q().columns(0, n).into_owned()
}

/// Spin-chain models diagonalized exactly for ground states.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum HamiltonianSpec {
    /// H = -J sum Z_k Z_{k+1} - g sum X_k, open boundary.
    TransverseIsing { l: usize, coupling: f64, field: f64 },
    /// H = J sum (X_k X_{k+1} + Y_k Y_{k+1} + Delta Z_k Z_{k+1}), open boundary.
    Xxz { l: usize, coupling: f64, anisotropy: f64 },
}

impl HamiltonianSpec {
    pub fn heisenberg(l: usize, coupling: f64) -> Self {
        Self::Xxz { l, coupling, anisotropy: 1.0 }
    }

    pub fn num_sites(&self) -> usize {
        match *self {
            Self::TransverseIsing { l, .. } | Self::Xxz { l, .. } => l,
        }
    }

    /// Dense real-symmetric matrix in the computational basis (site 1 slowest).
    fn matrix(&self) -> DMatrix<f64> {
        let l = self.num_sites();
        let dim = 1usize << l;
        let z = |x: usize, k: usize| -> f64 {
            if (x >> (l - 1 - k)) & 1 == 0 {
                1.0
            } else {
                -1.0
            }
        };
        let mut h = DMatrix::<f64>::zeros(dim, dim);
        match *self {
            Self::TransverseIsing { coupling, field, .. } => {
                for x in 0..dim {
                    let mut diag = 0.0;
                    for k in 0..l - 1 {
                        diag -= coupling * z(x, k) * z(x, k + 1);
                    }
                    h[(x, x)] += diag;
                    for k in 0..l {
                        let y = x ^ (1 << (l - 1 - k));
                        h[(y, x)] -= field;
                    }
                }
            }
            Self::Xxz { coupling, anisotropy, .. } => {
                for x in 0..dim {
                    let mut diag = 0.0;
                    for k in 0..l - 1 {
                        diag += coupling * anisotropy * z(x, k) * z(x, k + 1);
                        // XX + YY flips antiparallel neighbors with weight 2.
                        if z(x, k) != z(x, k + 1) {
                            let y = x ^ (1 << (l - 1 - k)) ^ (1 << (l - 2 - k));
                            h[(y, x)] += 2.0 * coupling;
                        }
                    }
                    h[(x, x)] += diag;
                }
            }
        }
        h
    }
}

/// Normalized eigenvector of smallest eigenvalue, with the largest-magnitude
/// amplitude (first such index on ties) rotated to the positive real axis.
pub fn ground_state(spec: &HamiltonianSpec) -> Result<DenseState> {
    let l = spec.num_sites();
    if l < 2 {
        return Err(Error::TooFewSites(l));
    }
    if l > GROUND_STATE_MAX_SITES {
        return Err(Error::DiagonalizationBudget { l, max: GROUND_STATE_MAX_SITES });
    }
    let eig = spec.matrix().symmetric_eigen();
    let mut best = 0;
    for i in 1..eig.eigenvalues.len() {
        if eig.eigenvalues[i] < eig.eigenvalues[best] {
            best = i;
        }
    }
    let col = eig.eigenvectors.column(best);
    let mut anchor = 0;
    for (i, v) in col.iter().enumerate() {
        if v.abs() > col[anchor].abs() + 1e-15 {
            anchor = i;
        }
    }
    let sign = if col[anchor] < 0.0 { -1.0 } else { 1.0 };
    let amps = DVector::from_iterator(col.len(), col.iter().map(|&v| C64::new(sign * v, 0.0)));
    DenseState::from_unnormalized(l, 2, amps)
}

/// Contract seeded random MPS cores (standard-normal real and imaginary
/// parts) to a normalized dense state. Every cut j then has Schmidt rank at
/// most min(chi, d^j, d^(L-j)).
pub fn random_mps(l: usize, d: usize, chi: usize, seed: u64) -> Result<DenseState> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mps = MatrixProductState::random(l, d, chi, &mut rng)?;
    DenseState::from_unnormalized(l, d, mps.contract())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entropy::{block_entropy, Alpha};
    use crate::state::SiteSubset;
    use approx::assert_abs_diff_eq;

    #[test]
    fn product_state_amplitudes() {
        let zero = vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
        let psi = product_state(2, 2, &[zero.clone(), zero]).unwrap();
        let amps = psi.amplitudes();
        assert_abs_diff_eq!(amps[0].re, 1.0, epsilon = 1e-12);
        assert!(amps[1..].iter().all(|z| z.norm() < 1e-12));

        let plus = vec![C64::new(1.0, 0.0), C64::new(1.0, 0.0)];
        let psi = product_state(3, 2, &[plus.clone(), plus.clone(), plus]).unwrap();
        for z in psi.amplitudes() {
            assert_abs_diff_eq!(z.re, 1.0 / 8f64.sqrt(), epsilon = 1e-12);
        }
    }

    #[test]
    fn product_state_rejects_zero_vector() {
        let zero = vec![C64::new(0.0, 0.0); 2];
        let one = vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
        assert!(matches!(
            product_state(2, 2, &[one, zero]),
            Err(Error::ZeroLocalVector(2))
        ));
    }

    #[test]
    fn ghz_amplitudes() {
        let psi = ghz(2, 2).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let amps = psi.amplitudes();
        assert_abs_diff_eq!(amps[0].re, r, epsilon = 1e-12);
        assert_abs_diff_eq!(amps[3].re, r, epsilon = 1e-12);
        assert!(amps[1].norm() < 1e-12 && amps[2].norm() < 1e-12);
        assert!(ghz(1, 2).is_err());
    }

    #[test]
    fn w_state_amplitudes() {
        let psi = w_state(2).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let amps = psi.amplitudes();
        assert!(amps[0].norm() < 1e-12 && amps[3].norm() < 1e-12);
        assert_abs_diff_eq!(amps[1].re, r, epsilon = 1e-12);
        assert_abs_diff_eq!(amps[2].re, r, epsilon = 1e-12);
    }

    #[test]
    fn slater_single_orbital_cases() {
        let c = DMatrix::from_column_slice(2, 1, &[1.0, 0.0]);
        let psi = slater(&c).unwrap();
        assert_abs_diff_eq!(psi.amplitudes()[0b10].re, 1.0, epsilon = 1e-12);

        let r = std::f64::consts::FRAC_1_SQRT_2;
        let c = DMatrix::from_column_slice(2, 1, &[r, r]);
        let psi = slater(&c).unwrap();
        assert_abs_diff_eq!(psi.amplitudes()[0b10].re, r, epsilon = 1e-12);
        assert_abs_diff_eq!(psi.amplitudes()[0b01].re, r, epsilon = 1e-12);
    }

    #[test]
    fn slater_rejects_non_orthonormal() {
        let c = DMatrix::from_column_slice(2, 1, &[1.0, 1.0]);
        assert!(matches!(slater(&c), Err(Error::NonOrthonormalColumns(_))));
    }

    #[test]
    fn slater_is_normalized_by_cauchy_binet() {
        let c = random_orthonormal(6, 3, 7);
        let psi = slater(&c).unwrap();
        assert_abs_diff_eq!(psi.norm_squared(), 1.0, epsilon = 1e-10);
        assert!(matches!(psi.origin(), StateOrigin::Slater { particles: 3 }));
    }

    #[test]
    fn fermionic_swap_matches_row_swapped_coefficients() {
        let c = random_orthonormal(3, 2, 11);
        let psi = slater(&c).unwrap();
        let perm = crate::state::SitePermutation::new(vec![2, 1, 3]).unwrap();
        let swapped = psi.permute_sites(&perm, true).unwrap();
        let mut rows = c.clone();
        rows.swap_rows(0, 1);
        let direct = slater(&rows).unwrap();
        for (a, b) in swapped.amplitudes().iter().zip(direct.amplitudes()) {
            assert_abs_diff_eq!((a - b).norm(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn classical_ising_ground_state_is_product() {
        let psi =
            ground_state(&HamiltonianSpec::TransverseIsing { l: 4, coupling: 1.0, field: 0.0 })
                .unwrap();
        for j in 1..4 {
            assert_abs_diff_eq!(block_entropy(&psi, j, Alpha::VON_NEUMANN).unwrap(), 0.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn heisenberg_two_sites_is_the_singlet() {
        let psi = ground_state(&HamiltonianSpec::heisenberg(2, 1.0)).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let amps = psi.amplitudes();
        assert_abs_diff_eq!(amps[1].re, r, epsilon = 1e-9);
        assert_abs_diff_eq!(amps[2].re, -r, epsilon = 1e-9);
        assert_abs_diff_eq!(block_entropy(&psi, 1, Alpha::VON_NEUMANN).unwrap(), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn ground_state_rejects_oversized_l() {
        let spec = HamiltonianSpec::TransverseIsing { l: 13, coupling: 1.0, field: 1.0 };
        assert!(matches!(ground_state(&spec), Err(Error::DiagonalizationBudget { .. })));
    }

    #[test]
    fn random_mps_is_deterministic_and_rank_bounded() {
        let a = random_mps(6, 2, 2, 42).unwrap();
        let b = random_mps(6, 2, 2, 42).unwrap();
        for (x, y) in a.amplitudes().iter().zip(b.amplitudes()) {
            assert_eq!(x, y);
        }
        for j in 1..6 {
            assert!(a.schmidt(j).unwrap().rank() <= 2);
        }
        let c = random_mps(6, 2, 1, 5).unwrap();
        for j in 1..6 {
            assert_abs_diff_eq!(block_entropy(&c, j, Alpha::VON_NEUMANN).unwrap(), 0.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn w_two_site_rdm_matches_block() {
        let psi = w_state(3).unwrap();
        let rho = psi.reduced_density(&SiteSubset::range(1, 2).unwrap()).unwrap();
        let spec = psi.schmidt(2).unwrap();
        for (p, e) in spec.probabilities().iter().zip(rho.eigenvalues()) {
            assert_abs_diff_eq!(p, e, epsilon = 1e-9);
        }
    }
}
