//! Structured matrices of the first-order interference model and the
//! conversion between real OQAM frames and complex pseudo-symbol frames:
//!
//! ```text
//! C = D + j [ beta E D + S (-gamma D Ebar + delta Zbar D Etilde) ]
//! ```

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::prototype::{InterferenceWeights, PrototypeFilter};

/// Sign applied to the band-edge (corner) entries of `E` and `Zbar`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrequencyWrap {
    /// Subcarrier `M - 1` neighbours subcarrier 0 with the regular weights.
    Circulant,
    /// Crossing the band edge flips the atom sign (even-length prototypes
    /// with `M/2` even).
    Negated,
}

impl FrequencyWrap {
    pub fn for_filter(filter: &PrototypeFilter) -> Self {
        if filter.wrap_sign() > 0.0 {
            Self::Circulant
        } else {
            Self::Negated
        }
    }

    pub fn sign(self) -> f64 {
        match self {
            Self::Circulant => 1.0,
            Self::Negated => -1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StructMatrices {
    pub wrap: FrequencyWrap,
    /// `diag(1, -1, 1, -1, ...)`, M x M.
    pub s: DMatrix<f64>,
    /// Skew-symmetric circulant, M x M.
    pub e: DMatrix<f64>,
    /// Skew-symmetric tridiagonal Toeplitz, N x N.
    pub ebar: DMatrix<f64>,
    /// Symmetric tridiagonal Toeplitz, N x N.
    pub etilde: DMatrix<f64>,
    /// `Z + Z^-1`, M x M.
    pub zbar: DMatrix<f64>,
}

impl StructMatrices {
    /// Matrices exactly as displayed with the model (circulant corners).
    pub fn build(m: usize, n: usize) -> Result<Self> {
        Self::with_wrap(m, n, FrequencyWrap::Circulant)
    }

    pub fn with_wrap(m: usize, n: usize, wrap: FrequencyWrap) -> Result<Self> {
        if m < 4 || !m.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!("M = {m} must be even and >= 4")));
        }
        if n < 2 {
            return Err(Error::InvalidParameter(format!("N = {n} must be >= 2")));
        }
        let w = wrap.sign();
        let s = DMatrix::from_fn(m, m, |i, j| {
            if i != j {
                0.0
            } else if i % 2 == 0 {
                1.0
            } else {
                -1.0
            }
        });

        let mut e = DMatrix::zeros(m, m);
        let mut zbar = DMatrix::zeros(m, m);
        for i in 0..m - 1 {
            e[(i, i + 1)] = 1.0;
            e[(i + 1, i)] = -1.0;
            zbar[(i, i + 1)] = 1.0;
            zbar[(i + 1, i)] = 1.0;
        }
        e[(0, m - 1)] = -w;
        e[(m - 1, 0)] = w;
        zbar[(0, m - 1)] = w;
        zbar[(m - 1, 0)] = w;

        let mut ebar = DMatrix::zeros(n, n);
        let mut etilde = DMatrix::zeros(n, n);
        for i in 0..n - 1 {
            ebar[(i, i + 1)] = 1.0;
            ebar[(i + 1, i)] = -1.0;
            etilde[(i, i + 1)] = 1.0;
            etilde[(i + 1, i)] = 1.0;
        }
        Ok(Self {
            wrap,
            s,
            e,
            ebar,
            etilde,
            zbar,
        })
    }

    pub fn num_subcarriers(&self) -> usize {
        self.e.nrows()
    }

    pub fn num_symbols(&self) -> usize {
        self.ebar.nrows()
    }
}

/// Weights plus the cached structure for one frame geometry.
#[derive(Debug, Clone)]
pub struct InterferenceModel {
    pub weights: InterferenceWeights,
    pub structs: Arc<StructMatrices>,
}

impl InterferenceModel {
    pub fn new(weights: InterferenceWeights, structs: StructMatrices) -> Self {
        Self {
            weights,
            structs: Arc::new(structs),
        }
    }

    /// Model matched to the filter bank built from `filter`.
    pub fn for_filter(filter: &PrototypeFilter, weights: InterferenceWeights, num_symbols: usize) -> Result<Self> {
        let structs =
            StructMatrices::with_wrap(filter.num_subcarriers(), num_symbols, FrequencyWrap::for_filter(filter))?;
        Ok(Self::new(weights, structs))
    }

    pub fn virtualize(&self, frame: &DMatrix<f64>) -> Result<CMatrix> {
        virtualize(frame, &self.weights, &self.structs)
    }
}

/// Pseudo-symbols for a (possibly stacked, `M N_T x N`) real frame.
pub fn virtualize(frame: &DMatrix<f64>, weights: &InterferenceWeights, structs: &StructMatrices) -> Result<CMatrix> {
    let m = structs.num_subcarriers();
    let n = structs.num_symbols();
    if frame.ncols() != n || frame.nrows() == 0 || !frame.nrows().is_multiple_of(m) {
        return Err(Error::DimensionMismatch(format!(
            "frame {}x{} does not stack {m}x{n} blocks",
            frame.nrows(),
            frame.ncols()
        )));
    }
    let mut out = CMatrix::zeros(frame.nrows(), n);
    for t in 0..frame.nrows() / m {
        let d = frame.rows(t * m, m).into_owned();
        let time = &d * &structs.ebar * (-weights.gamma) + &structs.zbar * &d * &structs.etilde * weights.delta;
        let imag = &structs.e * &d * weights.beta + &structs.s * time;
        for q in 0..n {
            for p in 0..m {
                out[(t * m + p, q)] = Complex64::new(d[(p, q)], imag[(p, q)]);
            }
        }
    }
    Ok(out)
}

/// Elementwise real part.
pub fn devirtualize(c: &CMatrix) -> DMatrix<f64> {
    c.map(|z| z.re)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub bin_centers: Vec<f64>,
    /// Normalised so that `sum(density) * bin_width = 1`.
    pub density: Vec<f64>,
    pub bin_width: f64,
    pub mean: f64,
    pub variance: f64,
    pub count: usize,
}

impl Histogram {
    /// Bins `values` over the symmetric range `[-R, R]`, `R = max |value|`.
    pub fn from_values(values: &[f64], bins: usize) -> Result<Self> {
        if bins < 10 {
            return Err(Error::InvalidParameter(format!("need at least 10 bins, got {bins}")));
        }
        if values.is_empty() {
            return Err(Error::InvalidParameter("no samples to bin".into()));
        }
        let count = values.len();
        let mean = values.iter().sum::<f64>() / count as f64;
        let variance = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / count as f64;
        let peak = values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let range = if peak > 0.0 { peak * (1.0 + 1e-9) } else { 1.0 };
        let width = 2.0 * range / bins as f64;
        let mut counts = vec![0usize; bins];
        for v in values {
            let idx = ((v + range) / width).floor().clamp(0.0, (bins - 1) as f64) as usize;
            counts[idx] += 1;
        }
        let bin_centers = (0..bins).map(|i| -range + (i as f64 + 0.5) * width).collect();
        let density = counts.iter().map(|c| *c as f64 / (count as f64 * width)).collect();
        Ok(Self {
            bin_centers,
            density,
            bin_width: width,
            mean,
            variance,
            count,
        })
    }
}

/// Histogram of `Im{C}` over every entry of the frame.
pub fn interference_histogram(c: &CMatrix, bins: usize) -> Result<Histogram> {
    let values: Vec<f64> = c.iter().map(|z| z.im).collect();
    Histogram::from_values(&values, bins)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn weights() -> InterferenceWeights {
        InterferenceWeights {
            beta: 0.2398,
            gamma: 0.5594,
            delta: 0.2131,
        }
    }

    #[test]
    fn displayed_structures() {
        let s = StructMatrices::build(4, 3).unwrap();
        assert_eq!(
            s.e.row(0).iter().copied().collect::<Vec<_>>(),
            vec![0.0, 1.0, 0.0, -1.0]
        );
        assert_eq!(
            s.e.row(3).iter().copied().collect::<Vec<_>>(),
            vec![1.0, 0.0, -1.0, 0.0]
        );
        assert_eq!(
            s.zbar.row(0).iter().copied().collect::<Vec<_>>(),
            vec![0.0, 1.0, 0.0, 1.0]
        );
        assert_eq!(
            s.ebar,
            DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 0.0, -1.0, 0.0, 1.0, 0.0, -1.0, 0.0])
        );
        assert_eq!(
            s.etilde,
            DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0])
        );
        assert_eq!(
            s.s.diagonal().iter().copied().collect::<Vec<_>>(),
            vec![1.0, -1.0, 1.0, -1.0]
        );
        assert_eq!(s.e.transpose(), -&s.e);
        assert_eq!(s.zbar.transpose(), s.zbar);
    }

    #[test]
    fn negated_wrap_flips_only_corners() {
        let a = StructMatrices::build(6, 3).unwrap();
        let b = StructMatrices::with_wrap(6, 3, FrequencyWrap::Negated).unwrap();
        let diff = &a.e - &b.e;
        assert_eq!(diff.iter().filter(|x| **x != 0.0).count(), 2);
        assert_eq!(b.e[(0, 5)], 1.0);
        assert_eq!(b.zbar[(5, 0)], -1.0);
        assert_eq!(a.ebar, b.ebar);
    }

    #[test]
    fn rejects_small_dims() {
        assert!(StructMatrices::build(2, 4).is_err());
        assert!(StructMatrices::build(5, 4).is_err());
        assert!(StructMatrices::build(8, 1).is_err());
    }

    #[test]
    fn real_part_is_the_frame() {
        let s = StructMatrices::build(8, 6).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let d = DMatrix::from_fn(8, 6, |_, _| if rng.gen::<bool>() { 0.7 } else { -0.7 });
        let c = virtualize(&d, &weights(), &s).unwrap();
        assert_eq!(devirtualize(&c), d);
        assert_eq!(
            virtualize(&DMatrix::zeros(8, 6), &weights(), &s).unwrap(),
            CMatrix::zeros(8, 6)
        );
        assert!(virtualize(&DMatrix::zeros(7, 6), &weights(), &s).is_err());
    }

    #[test]
    fn devirtualize_cases() {
        let x = DMatrix::from_fn(3, 2, |i, j| (i + 2 * j) as f64);
        let jx = x.map(|v| Complex64::new(0.0, v));
        assert_eq!(devirtualize(&jx), DMatrix::zeros(3, 2));
        assert_eq!(devirtualize(&x.map(|v| Complex64::new(v, 0.0))), x);
    }

    #[test]
    fn stacked_frames_are_independent() {
        let s = StructMatrices::build(4, 4).unwrap();
        let d = DMatrix::from_fn(8, 4, |i, j| ((i * 7 + j * 3) % 5) as f64 - 2.0);
        let c = virtualize(&d, &weights(), &s).unwrap();
        let top = virtualize(&d.rows(0, 4).into_owned(), &weights(), &s).unwrap();
        let bottom = virtualize(&d.rows(4, 4).into_owned(), &weights(), &s).unwrap();
        assert_eq!(c.rows(0, 4), top);
        assert_eq!(c.rows(4, 4), bottom);
    }

    #[test]
    fn degenerate_histogram() {
        let h = interference_histogram(&CMatrix::zeros(4, 4), 10).unwrap();
        assert_eq!(h.mean, 0.0);
        assert_eq!(h.variance, 0.0);
        assert_eq!(h.density.iter().filter(|d| **d > 0.0).count(), 1);
        assert!(interference_histogram(&CMatrix::zeros(4, 4), 5).is_err());
    }
}
