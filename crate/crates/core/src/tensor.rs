//! The received `M x N x N_R` tensor, its unfoldings and the constrained-CPD
//! algebra around it.
//!
//! Unfoldings (vec is column-major throughout):
//!
//! ```text
//! Y2 = [Y^(1); ...; Y^(N_R)]           (M N_R) x N   = (H (.) Gamma) C
//! Y3 = [vec Y^(1) ... vec Y^(N_R)]     (M N)   x N_R = (C^T (.) Gamma) H^T
//! Y1 = [Y^(1)^T; ...; Y^(N_R)^T]       (N_R N) x M   = (H (.) C^T) Gamma^T
//! ```

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{frobenius_sq, CMatrix};

#[derive(Debug, Clone, PartialEq)]
pub struct ReceivedTensor {
    slices: Vec<CMatrix>,
}

impl ReceivedTensor {
    /// One frontal slice `Y^(r)` (M x N) per receive antenna.
    pub fn new(slices: Vec<CMatrix>) -> Result<Self> {
        let first = slices
            .first()
            .ok_or_else(|| Error::InvalidParameter("tensor needs at least one slice".into()))?;
        let shape = first.shape();
        if shape.0 == 0 || shape.1 == 0 {
            return Err(Error::InvalidParameter("empty frontal slice".into()));
        }
        if slices.iter().any(|s| s.shape() != shape) {
            return Err(Error::DimensionMismatch("frontal slices differ in shape".into()));
        }
        if slices
            .iter()
            .any(|s| s.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()))
        {
            return Err(Error::InvalidParameter("tensor has non-finite entries".into()));
        }
        Ok(Self { slices })
    }

    pub fn from_fn(m: usize, n: usize, nr: usize, f: impl Fn(usize, usize, usize) -> Complex64) -> Result<Self> {
        Self::new((0..nr).map(|r| DMatrix::from_fn(m, n, |i, j| f(i, j, r))).collect())
    }

    /// `(M, N, N_R)`.
    pub fn dims(&self) -> (usize, usize, usize) {
        let (m, n) = self.slices[0].shape();
        (m, n, self.slices.len())
    }

    pub fn get(&self, m: usize, n: usize, r: usize) -> Complex64 {
        self.slices[r][(m, n)]
    }

    pub fn slice(&self, r: usize) -> &CMatrix {
        &self.slices[r]
    }

    pub fn slices(&self) -> &[CMatrix] {
        &self.slices
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.slices.iter().map(frobenius_sq).sum::<f64>().sqrt()
    }

    pub fn unfold2(&self) -> CMatrix {
        let (m, n, nr) = self.dims();
        DMatrix::from_fn(m * nr, n, |i, q| self.slices[i / m][(i % m, q)])
    }

    pub fn fold2(y2: &CMatrix, m: usize) -> Result<Self> {
        if m == 0 || !y2.nrows().is_multiple_of(m) {
            return Err(Error::DimensionMismatch(format!(
                "{} rows do not stack {m}-row slices",
                y2.nrows()
            )));
        }
        Self::new((0..y2.nrows() / m).map(|r| y2.rows(r * m, m).into_owned()).collect())
    }

    pub fn unfold3(&self) -> CMatrix {
        let (m, n, nr) = self.dims();
        DMatrix::from_fn(m * n, nr, |i, r| self.slices[r][(i % m, i / m)])
    }

    pub fn fold3(y3: &CMatrix, m: usize, n: usize) -> Result<Self> {
        if y3.nrows() != m * n {
            return Err(Error::DimensionMismatch(format!("{} rows are not {m}x{n}", y3.nrows())));
        }
        Self::new(
            (0..y3.ncols())
                .map(|r| DMatrix::from_fn(m, n, |i, q| y3[(q * m + i, r)]))
                .collect(),
        )
    }

    pub fn unfold1(&self) -> CMatrix {
        let (m, n, nr) = self.dims();
        DMatrix::from_fn(nr * n, m, |i, p| self.slices[i / n][(p, i % n)])
    }

    pub fn fold1(y1: &CMatrix, n: usize) -> Result<Self> {
        if n == 0 || !y1.nrows().is_multiple_of(n) {
            return Err(Error::DimensionMismatch(format!(
                "{} rows do not stack {n}-row slices",
                y1.nrows()
            )));
        }
        Self::new((0..y1.nrows() / n).map(|r| y1.rows(r * n, n).transpose()).collect())
    }
}

/// `Gamma = [I_M ... I_M]` with `N_T` copies.
pub fn known_factor(m: usize, num_tx: usize) -> CMatrix {
    DMatrix::from_fn(m, m * num_tx, |i, k| {
        if k % m == i {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

/// Columnwise Kronecker product; row `i J + j` of column `k` is `A[i,k] B[j,k]`.
pub fn khatri_rao(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    if a.ncols() != b.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "Khatri-Rao factors have {} and {} columns",
            a.ncols(),
            b.ncols()
        )));
    }
    let j = b.nrows();
    Ok(DMatrix::from_fn(a.nrows() * j, a.ncols(), |row, k| {
        a[(row / j, k)] * b[(row % j, k)]
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Unfolding {
    Mode1,
    Mode2,
    Mode3,
}

/// `|| Y - [[Gamma, C^T, H]] ||_F`, evaluated on the mode-2 unfolding.
pub fn cpd_cost(y: &ReceivedTensor, gamma: &CMatrix, c: &CMatrix, h: &CMatrix) -> Result<f64> {
    cpd_cost_via(y, gamma, c, h, Unfolding::Mode2)
}

/// As [`cpd_cost`], through any of the three unfoldings.
pub fn cpd_cost_via(y: &ReceivedTensor, gamma: &CMatrix, c: &CMatrix, h: &CMatrix, mode: Unfolding) -> Result<f64> {
    let (m, n, nr) = y.dims();
    let rank = gamma.ncols();
    if gamma.nrows() != m || c.shape() != (rank, n) || h.shape() != (nr, rank) {
        return Err(Error::DimensionMismatch(format!(
            "factors Gamma {:?}, C {:?}, H {:?} do not fit tensor {m}x{n}x{nr}",
            gamma.shape(),
            c.shape(),
            h.shape()
        )));
    }
    let residual = match mode {
        Unfolding::Mode2 => y.unfold2() - khatri_rao(h, gamma)? * c,
        Unfolding::Mode3 => y.unfold3() - khatri_rao(&c.transpose(), gamma)? * h.transpose(),
        Unfolding::Mode1 => y.unfold1() - khatri_rao(h, &c.transpose())? * gamma.transpose(),
    };
    Ok(frobenius_sq(&residual).sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct KrFactorization {
    /// `N_R x M`.
    pub h: CMatrix,
    /// `N x M`, i.e. `C^T`.
    pub c: CMatrix,
    /// Columns that were identically zero.
    pub flagged: Vec<usize>,
}

/// Best rank-1 split of each column of a SIMO `Y1 = H (.) C^T`, up to a
/// per-column scale.
pub fn kr_factorize(y1: &CMatrix, num_rx: usize) -> Result<KrFactorization> {
    if num_rx == 0 || !y1.nrows().is_multiple_of(num_rx) {
        return Err(Error::DimensionMismatch(format!(
            "{} rows do not split over {num_rx} antennas",
            y1.nrows()
        )));
    }
    let n = y1.nrows() / num_rx;
    let m = y1.ncols();
    let mut h = CMatrix::zeros(num_rx, m);
    let mut c = CMatrix::zeros(n, m);
    let mut flagged = Vec::new();
    for col in 0..m {
        let block = DMatrix::from_fn(num_rx, n, |r, q| y1[(r * n + q, col)]);
        if block.iter().all(|z| z.norm() == 0.0) {
            flagged.push(col);
            continue;
        }
        let svd = block.svd(true, true);
        let (idx, sigma) =
            svd.singular_values
                .iter()
                .copied()
                .enumerate()
                .fold(
                    (0, f64::NEG_INFINITY),
                    |best, (i, s)| if s > best.1 { (i, s) } else { best },
                );
        let u = svd.u.as_ref().expect("requested U");
        let v_t = svd.v_t.as_ref().expect("requested V^H");
        for r in 0..num_rx {
            h[(r, col)] = u[(r, idx)] * sigma;
        }
        for q in 0..n {
            c[(q, col)] = v_t[(idx, q)];
        }
    }
    Ok(KrFactorization { h, c, flagged })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Identifiability {
    /// `M + min(N, M N_T) + min(N_R, M N_T) >= 2 M N_T + 2`.
    pub holds: bool,
    /// SIMO reduction `N_R >= 2` (false for `N_T > 1`).
    pub simo_condition: bool,
}

pub fn check_identifiability(m: usize, n: usize, num_tx: usize, num_rx: usize) -> Identifiability {
    let rank = m * num_tx;
    Identifiability {
        holds: m + n.min(rank) + num_rx.min(rank) >= 2 * rank + 2,
        simo_condition: num_tx == 1 && num_rx >= 2,
    }
}
