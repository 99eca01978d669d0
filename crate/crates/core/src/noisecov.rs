//! Covariance of the AFB-output noise and the weighted least-squares
//! counterparts of the ALS updates.
//!
//! White noise of variance `sigma2` at the receiver input leaves the analysis
//! filter bank correlated across neighbouring subcarriers and symbols. With
//! `w3 = vec(W3)` (antenna-major, then symbol, then subcarrier) the
//! covariance is `sigma2 (I_{N_R} kron Bbar)`, with `Bbar` block tridiagonal:
//! `B` on the diagonal, `S A+` above and `S A-` below.
//!
//! All dense. Intended for `M N` up to about a thousand.

use nalgebra::{Cholesky, DMatrix, Dyn};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::channel::complex_gaussian;
use crate::error::{Error, Result};
use crate::linalg::{hermitian_solve, CMatrix};
use crate::prototype::{InterferenceWeights, PrototypeFilter};
use crate::tensor::{khatri_rao, known_factor};
use crate::waveform::{sfb_output_len, FilterBank};

const J: Complex64 = Complex64::new(0.0, 1.0);
const RIDGE_EIG_TOL: f64 = 1e-10;
const RIDGE: f64 = 1e-8;

fn check_m(m: usize) -> Result<()> {
    if m < 4 || !m.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!("M = {m} must be even and >= 4")));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Blocks
// ---------------------------------------------------------------------------

/// Frequency-direction covariance: unit diagonal, `j beta` above, `-j beta`
/// below, with the wrapped corners `B[0, M-1] = j beta`, `B[M-1, 0] = -j beta`.
pub fn build_b(m: usize, beta: f64) -> Result<CMatrix> {
    check_m(m)?;
    let mut b = CMatrix::identity(m, m);
    for i in 0..m - 1 {
        b[(i, i + 1)] = J * beta;
        b[(i + 1, i)] = -J * beta;
    }
    b[(0, m - 1)] = J * beta;
    b[(m - 1, 0)] = -J * beta;
    Ok(b)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeDirection {
    Plus,
    Minus,
}

/// `A+-`: `j` times a symmetric tridiagonal matrix with `+-gamma` on the
/// diagonal, `delta` beside it and `-delta` in the corners.
pub fn build_apm(m: usize, gamma: f64, delta: f64, dir: TimeDirection) -> Result<CMatrix> {
    check_m(m)?;
    let g = match dir {
        TimeDirection::Plus => gamma,
        TimeDirection::Minus => -gamma,
    };
    let mut a = CMatrix::zeros(m, m);
    for i in 0..m {
        a[(i, i)] = J * g;
    }
    for i in 0..m - 1 {
        a[(i, i + 1)] = J * delta;
        a[(i + 1, i)] = J * delta;
    }
    a[(0, m - 1)] = -J * delta;
    a[(m - 1, 0)] = -J * delta;
    Ok(a)
}

/// `diag(1, -1, 1, -1, ...)`.
pub fn build_s(m: usize) -> CMatrix {
    CMatrix::from_fn(m, m, |i, j| {
        if i != j {
            Complex64::new(0.0, 0.0)
        } else if i % 2 == 0 {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(-1.0, 0.0)
        }
    })
}

/// `N x N` block grid with `B` on the diagonal, `S A+` on the block
/// superdiagonal and `S A-` on the block subdiagonal.
pub fn assemble_bbar(b: &CMatrix, aplus: &CMatrix, aminus: &CMatrix, s: &CMatrix, n: usize) -> Result<CMatrix> {
    let m = b.nrows();
    if n == 0 || [b, aplus, aminus, s].iter().any(|x| x.shape() != (m, m)) {
        return Err(Error::DimensionMismatch("blocks must all be M x M and N >= 1".into()));
    }
    let up = s * aplus;
    let down = s * aminus;
    let mut bbar = CMatrix::zeros(m * n, m * n);
    for q in 0..n {
        bbar.view_mut((q * m, q * m), (m, m)).copy_from(b);
        if q + 1 < n {
            bbar.view_mut((q * m, (q + 1) * m), (m, m)).copy_from(&up);
            bbar.view_mut(((q + 1) * m, q * m), (m, m)).copy_from(&down);
        }
    }
    Ok(bbar)
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseCovarianceModel {
    pub b: CMatrix,
    pub aplus: CMatrix,
    pub aminus: CMatrix,
    pub s: CMatrix,
    pub bbar: CMatrix,
    pub sigma2: f64,
}

impl NoiseCovarianceModel {
    pub fn new(weights: &InterferenceWeights, m: usize, n: usize, sigma2: f64) -> Result<Self> {
        if sigma2.is_nan() || sigma2 < 0.0 {
            return Err(Error::InvalidParameter(format!("sigma2 = {sigma2} must be >= 0")));
        }
        let b = build_b(m, weights.beta)?;
        let aplus = build_apm(m, weights.gamma, weights.delta, TimeDirection::Plus)?;
        let aminus = build_apm(m, weights.gamma, weights.delta, TimeDirection::Minus)?;
        let s = build_s(m);
        let bbar = assemble_bbar(&b, &aplus, &aminus, &s, n)?;
        Ok(Self {
            b,
            aplus,
            aminus,
            s,
            bbar,
            sigma2,
        })
    }

    /// `C_w3 = sigma2 (I_{N_R} kron Bbar)`.
    pub fn cw3(&self, num_rx: usize) -> CMatrix {
        let k = self.bbar.nrows();
        let mut c = CMatrix::zeros(num_rx * k, num_rx * k);
        for r in 0..num_rx {
            c.view_mut((r * k, r * k), (k, k)).copy_from(&self.bbar);
        }
        c * Complex64::new(self.sigma2, 0.0)
    }
}

// ---------------------------------------------------------------------------
// Empirical covariance
// ---------------------------------------------------------------------------

/// Exact single-antenna AFB noise covariance for unit input variance:
/// `E[w_{m,n} w*_{m',n'}] = <g_{m',n'}, g_{m,n}>`, all orders of neighbours.
pub fn exact_noise_gram(filter: &PrototypeFilter, n: usize) -> CMatrix {
    let m = filter.num_subcarriers();
    CMatrix::from_fn(m * n, m * n, |i, j| {
        filter.atom_inner_product(j % m, (j / m) as i64, i % m, (i / m) as i64)
    })
}

/// Sample covariance of `w3` when unit-variance white noise on `num_rx`
/// antennas passes through the analysis bank.
pub fn empirical_noise_cov_rx(
    filter: &PrototypeFilter,
    n: usize,
    num_rx: usize,
    trials: usize,
    seed: u64,
) -> Result<CMatrix> {
    if trials < 1000 {
        return Err(Error::InvalidParameter(format!(
            "{trials} trials; at least 1000 required"
        )));
    }
    if n == 0 || num_rx == 0 {
        return Err(Error::InvalidParameter("N and N_R must be >= 1".into()));
    }
    let m = filter.num_subcarriers();
    let bank = FilterBank::new(filter.clone());
    let len = sfb_output_len(filter, n);
    let dim = num_rx * m * n;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut acc = CMatrix::zeros(dim, dim);
    let mut w = CMatrix::zeros(dim, 1);
    for _ in 0..trials {
        for r in 0..num_rx {
            let noise: Vec<Complex64> = (0..len).map(|_| complex_gaussian(&mut rng, 1.0)).collect();
            let y = bank.analyze(&noise, n)?;
            w.rows_mut(r * m * n, m * n).copy_from_slice(y.as_slice());
        }
        acc.gerc(
            Complex64::new(1.0, 0.0),
            &w.column(0),
            &w.column(0),
            Complex64::new(1.0, 0.0),
        );
    }
    Ok(acc / Complex64::new(trials as f64, 0.0))
}

/// Single-antenna sample covariance (`MN x MN`).
pub fn empirical_noise_cov(filter: &PrototypeFilter, n: usize, trials: usize, seed: u64) -> Result<CMatrix> {
    empirical_noise_cov_rx(filter, n, 1, trials, seed)
}

// ---------------------------------------------------------------------------
// Permutations
// ---------------------------------------------------------------------------

/// Index maps between the stacked noise vectors: `w2[i] = w3[p23[i]]` and
/// `w1[i] = w3[p13[i]]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PermutationMaps {
    pub p23: Vec<usize>,
    pub p13: Vec<usize>,
}

impl PermutationMaps {
    pub fn new(m: usize, n: usize, num_rx: usize) -> Result<Self> {
        if m == 0 || n == 0 || num_rx == 0 {
            return Err(Error::InvalidParameter(
                "permutation dimensions must be positive".into(),
            ));
        }
        let w3 = |m_: usize, q: usize, r: usize| r * m * n + q * m + m_;
        let mut p23 = vec![0; m * n * num_rx];
        let mut p13 = vec![0; m * n * num_rx];
        for r in 0..num_rx {
            for q in 0..n {
                for i in 0..m {
                    p23[q * m * num_rx + r * m + i] = w3(i, q, r);
                    p13[i * num_rx * n + r * n + q] = w3(i, q, r);
                }
            }
        }
        Ok(Self { p23, p13 })
    }
}

pub fn build_permutations(m: usize, n: usize, num_rx: usize) -> Result<PermutationMaps> {
    PermutationMaps::new(m, n, num_rx)
}

/// 0/1 matrix `P` with `(P v)[i] = v[map[i]]`.
pub fn permutation_matrix(map: &[usize]) -> DMatrix<f64> {
    let mut p = DMatrix::zeros(map.len(), map.len());
    for (i, &j) in map.iter().enumerate() {
        p[(i, j)] = 1.0;
    }
    p
}

/// `P v`.
pub fn permute<T: Copy>(map: &[usize], v: &[T]) -> Vec<T> {
    map.iter().map(|&j| v[j]).collect()
}

/// `P^T v`.
pub fn permute_back<T: Copy + Default>(map: &[usize], v: &[T]) -> Vec<T> {
    let mut out = vec![T::default(); v.len()];
    for (i, &j) in map.iter().enumerate() {
        out[j] = v[i];
    }
    out
}

/// `C_w1 = P13 C_w3 P13^T` for `C_w3 = sigma2 (I_{N_R} kron Bbar)`.
pub fn build_cw1(model: &NoiseCovarianceModel, maps: &PermutationMaps, num_rx: usize) -> Result<CMatrix> {
    let cw3 = model.cw3(num_rx);
    if cw3.nrows() != maps.p13.len() {
        return Err(Error::DimensionMismatch(format!(
            "covariance of order {} vs permutation of order {}",
            cw3.nrows(),
            maps.p13.len()
        )));
    }
    let p = &maps.p13;
    Ok(CMatrix::from_fn(p.len(), p.len(), |i, j| cw3[(p[i], p[j])]))
}

// ---------------------------------------------------------------------------
// Weighted least squares
// ---------------------------------------------------------------------------

/// Factorized `Bbar^-1`, regularized with a small ridge when `Bbar` is close
/// to singular.
#[derive(Clone)]
pub struct WlsWeight {
    chol: Cholesky<Complex64, Dyn>,
    dim: usize,
    pub regularized: bool,
}

impl std::fmt::Debug for WlsWeight {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("WlsWeight")
            .field("dim", &self.dim)
            .field("regularized", &self.regularized)
            .finish()
    }
}

impl WlsWeight {
    pub fn new(bbar: &CMatrix) -> Result<Self> {
        let dim = bbar.nrows();
        if dim == 0 || bbar.ncols() != dim {
            return Err(Error::DimensionMismatch(format!("Bbar is {:?}", bbar.shape())));
        }
        let lmin = bbar.clone().symmetric_eigen().eigenvalues.min();
        let regularized = lmin < RIDGE_EIG_TOL;
        let mut mat = bbar.clone();
        if regularized {
            log::warn!("Bbar min eigenvalue {lmin:e}; adding a {RIDGE:e} ridge");
            for i in 0..dim {
                mat[(i, i)] += RIDGE;
            }
        }
        let chol = mat
            .cholesky()
            .ok_or_else(|| Error::RankDeficient(format!("Bbar not positive definite (min eigenvalue {lmin:e})")))?;
        Ok(Self { chol, dim, regularized })
    }

    pub fn identity(dim: usize) -> Result<Self> {
        Self::new(&CMatrix::identity(dim, dim))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `Bbar^-1 X`.
    pub fn apply_inverse(&self, x: &CMatrix) -> CMatrix {
        self.chol.solve(x)
    }
}

fn gls(phi: &CMatrix, rhs: &CMatrix, weight: &WlsWeight) -> Result<CMatrix> {
    let w_phi = weight.apply_inverse(phi);
    let normal = phi.adjoint() * &w_phi;
    hermitian_solve(&normal, &(w_phi.adjoint() * rhs))
}

/// Per-antenna GLS channel update:
/// `H^(r) = [Phi^H Bbar^-1 Phi]^-1 Phi^H Bbar^-1 vec(Y^(r))`, `Phi = C^T (.) Gamma`.
pub fn wls_update_h(y3: &CMatrix, c: &CMatrix, m: usize, weight: &WlsWeight) -> Result<CMatrix> {
    if m == 0 || !c.nrows().is_multiple_of(m) {
        return Err(Error::DimensionMismatch(format!("C has {} rows, M = {m}", c.nrows())));
    }
    let nt = c.nrows() / m;
    let phi = khatri_rao(&c.transpose(), &known_factor(m, nt))?;
    if y3.nrows() != phi.nrows() || weight.dim() != phi.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "Y3 has {} rows, weight order {}, expected M N = {}",
            y3.nrows(),
            weight.dim(),
            phi.nrows()
        )));
    }
    Ok(gls(&phi, y3, weight)?.transpose())
}

/// GLS symbol update. `vec(Y^(r)) = (I_N kron Gamma diag(H[r, :])) vec(C)`,
/// recovered from `vec(Y2)` through `P23^T`.
pub fn wls_update_c(
    y2: &CMatrix,
    h: &CMatrix,
    m: usize,
    weight: &WlsWeight,
    maps: &PermutationMaps,
) -> Result<CMatrix> {
    let nr = h.nrows();
    if m == 0 || !h.ncols().is_multiple_of(m) || y2.nrows() != m * nr {
        return Err(Error::DimensionMismatch(format!(
            "H {:?} and Y2 {:?} do not fit M = {m}",
            h.shape(),
            y2.shape()
        )));
    }
    let rank = h.ncols();
    let n = y2.ncols();
    let k = m * n;
    if weight.dim() != k || maps.p23.len() != k * nr {
        return Err(Error::DimensionMismatch(
            "weight or permutation order differs from M N".into(),
        ));
    }
    let y3 = permute_back(&maps.p23, y2.as_slice());
    let gamma = known_factor(m, rank / m);

    let mut normal = CMatrix::zeros(rank * n, rank * n);
    let mut rhs = CMatrix::zeros(rank * n, 1);
    for r in 0..nr {
        let block = &gamma * CMatrix::from_diagonal(&h.row(r).transpose());
        let mut d = CMatrix::zeros(k, rank * n);
        for q in 0..n {
            d.view_mut((q * m, q * rank), (m, rank)).copy_from(&block);
        }
        let wd = weight.apply_inverse(&d);
        normal += d.adjoint() * &wd;
        let yr = CMatrix::from_column_slice(k, 1, &y3[r * k..(r + 1) * k]);
        rhs += wd.adjoint() * yr;
    }
    let c = hermitian_solve(&normal, &rhs)?;
    Ok(CMatrix::from_column_slice(rank, n, c.as_slice()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs_diff;
    use crate::receiver::{als_update_c, als_update_h};
    use crate::tensor::ReceivedTensor;

    fn weights() -> InterferenceWeights {
        InterferenceWeights {
            beta: 0.2398,
            gamma: 0.5594,
            delta: 0.2131,
        }
    }

    fn random(rows: usize, cols: usize, seed: u64) -> CMatrix {
        let mut g = ChaCha8Rng::seed_from_u64(seed);
        CMatrix::from_fn(rows, cols, |_, _| complex_gaussian(&mut g, 1.0))
    }

    fn is_hermitian(a: &CMatrix, tol: f64) -> bool {
        max_abs_diff(a, &a.adjoint()) <= tol
    }

    #[test]
    fn block_entries() {
        let b = build_b(4, 0.3).unwrap();
        assert_eq!(b[(0, 0)], Complex64::new(1.0, 0.0));
        assert_eq!(b[(0, 1)], J * 0.3);
        assert_eq!(b[(1, 0)], -J * 0.3);
        assert_eq!(b[(0, 3)], J * 0.3);
        assert_eq!(b[(3, 0)], -J * 0.3);
        assert_eq!(b[(0, 2)], Complex64::new(0.0, 0.0));
        assert!(is_hermitian(&b, 0.0));
        assert!(build_b(5, 0.3).is_err());

        let ap = build_apm(4, 0.5, 0.2, TimeDirection::Plus).unwrap();
        let am = build_apm(4, 0.5, 0.2, TimeDirection::Minus).unwrap();
        assert_eq!(ap[(2, 2)], J * 0.5);
        assert_eq!(am[(2, 2)], -J * 0.5);
        assert_eq!(ap[(0, 3)], -J * 0.2);
        assert_eq!(ap[(3, 0)], -J * 0.2);
        let s = build_s(4);
        assert!(max_abs_diff(&(&s * &am), &(&s * &ap).adjoint()) < 1e-15);
    }

    #[test]
    fn bbar_structure() {
        let w = weights();
        let one = NoiseCovarianceModel::new(&w, 8, 1, 1.0).unwrap();
        assert_eq!(one.bbar, one.b);
        let two = NoiseCovarianceModel::new(&w, 8, 2, 1.0).unwrap();
        assert_eq!(two.bbar.view((0, 8), (8, 8)).into_owned(), &two.s * &two.aplus);
        assert_eq!(two.bbar.view((8, 0), (8, 8)).into_owned(), &two.s * &two.aminus);
        assert!(two.bbar.clone().symmetric_eigen().eigenvalues.min() > 0.0);
        let model = NoiseCovarianceModel::new(&w, 16, 8, 1.0).unwrap();
        assert!(is_hermitian(&model.bbar, 1e-15));
    }

    #[test]
    fn first_order_truncation_is_indefinite_for_longer_frames() {
        // The untruncated covariance is (twice) a near-projection, so dropping
        // the farther neighbours pushes its small eigenvalues below zero.
        for n in [4, 8] {
            let model = NoiseCovarianceModel::new(&weights(), 8, n, 1.0).unwrap();
            assert!(model.bbar.clone().symmetric_eigen().eigenvalues.min() < -0.05);
        }
    }

    #[test]
    fn bbar_is_the_first_order_part_of_the_exact_gram() {
        let filter = crate::prototype::design_prototype(8, 4).unwrap();
        let w = crate::prototype::compute_weights(&filter).unwrap();
        let (m, n) = (8, 4);
        let exact = exact_noise_gram(&filter, n);
        let bbar = NoiseCovarianceModel::new(&w, m, n, 1.0).unwrap().bbar;
        let mut residual = 0.0f64;
        for i in 0..m * n {
            for j in 0..m * n {
                let dm = (i % m) as i64 - (j % m) as i64;
                let dn = (i / m) as i64 - (j / m) as i64;
                let near = dn.abs() <= 1 && (dm.abs() <= 1 || dm.abs() == m as i64 - 1);
                if near {
                    assert!((exact[(i, j)] - bbar[(i, j)]).norm() < 1e-9, "entry ({i},{j})");
                } else {
                    assert_eq!(bbar[(i, j)], Complex64::new(0.0, 0.0));
                    residual = residual.max(exact[(i, j)].norm());
                }
            }
        }
        // Second-order neighbours are far from negligible.
        assert!(residual > 0.1);
    }

    #[test]
    fn permutations_are_index_identities() {
        let (m, n, nr) = (3, 2, 2);
        let maps = build_permutations(m, n, nr).unwrap();
        let y = ReceivedTensor::new((0..nr).map(|r| random(m, n, 50 + r as u64)).collect()).unwrap();
        let w3: Vec<Complex64> = y.unfold3().as_slice().to_vec();
        assert_eq!(permute(&maps.p23, &w3), y.unfold2().as_slice());
        assert_eq!(permute(&maps.p13, &w3), y.unfold1().as_slice());
        assert_eq!(permute_back(&maps.p23, y.unfold2().as_slice()), w3);
        for map in [&maps.p23, &maps.p13] {
            let p = permutation_matrix(map);
            assert_eq!(&p * p.transpose(), DMatrix::identity(12, 12));
        }
        let single = build_permutations(4, 3, 1).unwrap();
        assert_eq!(single.p23, (0..12).collect::<Vec<_>>());
    }

    #[test]
    fn cw1_is_a_congruence() {
        let model = NoiseCovarianceModel::new(&weights(), 4, 2, 0.5).unwrap();
        let maps = build_permutations(4, 2, 2).unwrap();
        let cw1 = build_cw1(&model, &maps, 2).unwrap();
        let p = permutation_matrix(&maps.p13).map(|x| Complex64::new(x, 0.0));
        assert!(max_abs_diff(&cw1, &(&p * model.cw3(2) * p.transpose())) < 1e-15);
        let mut e1: Vec<f64> = cw1.symmetric_eigen().eigenvalues.iter().copied().collect();
        let mut e3: Vec<f64> = model.cw3(2).symmetric_eigen().eigenvalues.iter().copied().collect();
        e1.sort_by(f64::total_cmp);
        e3.sort_by(f64::total_cmp);
        assert!(e1.iter().zip(&e3).all(|(a, b)| (a - b).abs() < 1e-12));

        let tiny = NoiseCovarianceModel::new(&weights(), 4, 1, 0.5).unwrap();
        let cw1 = build_cw1(&tiny, &build_permutations(4, 1, 1).unwrap(), 1).unwrap();
        assert!(max_abs_diff(&cw1, &(&tiny.b * Complex64::new(0.5, 0.0))) < 1e-15);
    }

    #[test]
    fn identity_weight_reduces_to_ls() {
        let (m, n, nr, nt) = (4, 3, 3, 2);
        let h = random(nr, m * nt, 60);
        let c = random(m * nt, n, 61);
        let y2 = random(m * nr, n, 62);
        let y3 = ReceivedTensor::fold2(&y2, m).unwrap().unfold3();
        let ident = WlsWeight::identity(m * n).unwrap();
        assert!(!ident.regularized);
        let maps = build_permutations(m, n, nr).unwrap();
        let c_w = wls_update_c(&y2, &h, m, &ident, &maps).unwrap();
        assert!(max_abs_diff(&c_w, &als_update_c(&y2, &h, m).unwrap()) < 1e-12);
        let h_w = wls_update_h(&y3, &c, m, &ident).unwrap();
        assert!(max_abs_diff(&h_w, &als_update_h(&y3, &c, m).unwrap()) < 1e-12);
    }

    #[test]
    fn gls_is_exact_on_noiseless_data() {
        let (m, n, nr) = (4, 3, 2);
        let model = NoiseCovarianceModel::new(&weights(), m, n, 1.0).unwrap();
        let weight = WlsWeight::new(&model.bbar).unwrap();
        let h = random(nr, m, 70);
        let c = random(m, n, 71);
        let y2 = crate::receiver::model_y2(&h, &c, m).unwrap();
        let y3 = ReceivedTensor::fold2(&y2, m).unwrap().unfold3();
        let maps = build_permutations(m, n, nr).unwrap();
        assert!(max_abs_diff(&wls_update_c(&y2, &h, m, &weight, &maps).unwrap(), &c) < 1e-10);
        assert!(max_abs_diff(&wls_update_h(&y3, &c, m, &weight).unwrap(), &h) < 1e-10);
    }

    #[test]
    fn singular_weight_gets_a_ridge() {
        let mut bbar = CMatrix::identity(4, 4);
        bbar[(3, 3)] = Complex64::new(0.0, 0.0);
        assert!(WlsWeight::new(&bbar).unwrap().regularized);
    }

    #[test]
    fn too_few_trials_rejected() {
        let filter = crate::prototype::design_prototype(8, 4).unwrap();
        assert!(empirical_noise_cov(&filter, 4, 10, 0).is_err());
    }
}
