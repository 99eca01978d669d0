//! Joint channel estimation and symbol detection by alternating least
//! squares on the constrained CPD `Y2 = (H (.) Gamma) C`.
//!
//! Because `Gamma = [I_M ... I_M]`, both normal equations are block diagonal
//! over subcarriers: subcarrier `m` only couples the `N_T` columns
//! `t M + m` of `H` (and rows of `C`). The updates below solve those
//! `N_T x N_T` systems directly instead of forming the Khatri-Rao product.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::channel::complex_gaussian;
use crate::error::{Error, Result};
use crate::interference::InterferenceModel;
use crate::linalg::{frobenius_sq, hermitian_solve, CMatrix, RANK_TOL};
use crate::tensor::{check_identifiability, Identifiability, ReceivedTensor};
use crate::waveform::{qam_to_oqam, Constellation};

const SCALE_TOL: f64 = 1e-9;
const MONOTONE_SLACK: f64 = 1e-10;

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ReceiverMode {
    StructureBlind,
    Informed,
    TrainingOnly,
    PerfectCsi,
}

impl ReceiverMode {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::StructureBlind => "structure_blind",
            Self::Informed => "informed",
            Self::TrainingOnly => "training_only",
            Self::PerfectCsi => "perfect_csi",
        }
    }
}

impl std::str::FromStr for ReceiverMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "structure_blind" => Ok(Self::StructureBlind),
            "informed" => Ok(Self::Informed),
            "training_only" => Ok(Self::TrainingOnly),
            "perfect_csi" => Ok(Self::PerfectCsi),
            other => Err(Error::InvalidParameter(format!("unknown receiver mode '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlsConfig {
    pub max_iters: usize,
    /// Relative cost-change threshold.
    pub tol: f64,
    /// Plain iterations before the scaling fix and the informed steps.
    pub n_simple_iters: usize,
    pub mode: ReceiverMode,
    pub seed: u64,
}

impl Default for AlsConfig {
    fn default() -> Self {
        Self {
            max_iters: 200,
            tol: 1e-6,
            n_simple_iters: 2,
            mode: ReceiverMode::Informed,
            seed: 0,
        }
    }
}

impl AlsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::InvalidParameter("max_iters must be >= 1".into()));
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(Error::InvalidParameter(format!("tol = {} must be > 0", self.tol)));
        }
        if self.n_simple_iters == 0 {
            return Err(Error::InvalidParameter("n_simple_iters must be >= 1".into()));
        }
        Ok(())
    }
}

/// What the symbol factor `C` is made of.
#[derive(Debug, Clone)]
pub enum SymbolStructure {
    /// FBMC/OQAM pseudo-symbols: real data plus structured imaginary
    /// interference.
    Oqam(InterferenceModel),
    /// Plain QAM symbols (CP-OFDM).
    Qam,
}

/// Training known to the receiver.
#[derive(Debug, Clone, PartialEq)]
pub struct Preamble {
    /// Leading columns of `C` whose values are fully determined by the
    /// preamble, `M N_T x n_known`.
    pub known: CMatrix,
    /// Leading columns of the real OQAM-staggered data frame, `M N_T x n_pre`.
    pub forced: DMatrix<f64>,
}

impl Preamble {
    /// FBMC preamble from its real frame columns. Pseudo-symbol column `q`
    /// depends on data columns `q - 1 .. q + 1`, so only the first
    /// `n_pre - 1` columns are known.
    pub fn oqam(forced: DMatrix<f64>, model: &InterferenceModel) -> Result<Self> {
        let n_pre = forced.ncols();
        let n = model.structs.num_symbols();
        if n_pre < 2 || n_pre > n {
            return Err(Error::InvalidParameter(format!(
                "OQAM preamble needs 2..={n} columns, got {n_pre}"
            )));
        }
        let mut padded = DMatrix::zeros(forced.nrows(), n);
        padded.columns_mut(0, n_pre).copy_from(&forced);
        let c = model.virtualize(&padded)?;
        Ok(Self {
            known: c.columns(0, n_pre - 1).into_owned(),
            forced,
        })
    }

    /// CP-OFDM preamble from its QAM columns.
    pub fn qam(symbols: CMatrix) -> Result<Self> {
        if symbols.ncols() == 0 {
            return Err(Error::InvalidParameter("QAM preamble needs at least one column".into()));
        }
        Ok(Self {
            forced: qam_to_oqam(&symbols),
            known: symbols,
        })
    }

    /// Number of staggered real columns excluded from the BER.
    pub fn frame_len(&self) -> usize {
        self.forced.ncols()
    }
}

/// Everything the receiver knows about the transmission apart from `Y`.
#[derive(Debug, Clone)]
pub struct ReceiverSetup {
    pub num_tx: usize,
    pub constellation: Constellation,
    pub structure: SymbolStructure,
    pub preamble: Preamble,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReceiverReport {
    /// `N_R x M N_T`.
    pub h_hat: CMatrix,
    /// Final symbol factor after scaling.
    pub c_hat: CMatrix,
    /// Detected real frame, OQAM-staggered (`M N_T x N_fbmc`).
    pub d_hat: DMatrix<f64>,
    pub iterations: usize,
    pub cost_trace: Vec<f64>,
    pub converged: bool,
    pub identifiability: Identifiability,
}

// ---------------------------------------------------------------------------
// Least-squares updates
// ---------------------------------------------------------------------------

fn check_dims(h: &CMatrix, m: usize) -> Result<usize> {
    if m == 0 || !h.ncols().is_multiple_of(m) || h.ncols() == 0 {
        return Err(Error::DimensionMismatch(format!(
            "H has {} columns, not a multiple of M = {m}",
            h.ncols()
        )));
    }
    Ok(h.ncols() / m)
}

/// Per-subcarrier `N_T x N_T` Gram matrices, checked against a common
/// threshold so the test matches the rank test on the full Khatri-Rao matrix.
fn checked_grams(grams: &[CMatrix], what: &str) -> Result<()> {
    let mut spectra = Vec::with_capacity(grams.len());
    for g in grams {
        let eig = if g.nrows() == 1 {
            vec![g[(0, 0)].re]
        } else {
            g.clone().symmetric_eigen().eigenvalues.iter().copied().collect()
        };
        spectra.push(eig);
    }
    let lmax = spectra.iter().flatten().copied().fold(0.0, f64::max);
    if lmax <= 0.0 {
        return Err(Error::RankDeficient(format!("{what} is identically zero")));
    }
    for (m, eig) in spectra.iter().enumerate() {
        let lmin = eig.iter().copied().fold(f64::INFINITY, f64::min);
        if lmin <= RANK_TOL * RANK_TOL * lmax {
            return Err(Error::RankDeficient(format!(
                "{what} is rank deficient at subcarrier {m} (eigenvalue {lmin:e} vs {lmax:e})"
            )));
        }
    }
    Ok(())
}

fn h_block(h: &CMatrix, m: usize, sub: usize, nt: usize) -> CMatrix {
    DMatrix::from_fn(h.nrows(), nt, |r, t| h[(r, t * m + sub)])
}

fn c_block(c: &CMatrix, m: usize, sub: usize, nt: usize, ncols: usize) -> CMatrix {
    DMatrix::from_fn(nt, ncols, |t, q| c[(t * m + sub, q)])
}

/// Symbol update `C = (H (.) Gamma)^+ Y2`.
pub fn als_update_c(y2: &CMatrix, h: &CMatrix, m: usize) -> Result<CMatrix> {
    let nt = check_dims(h, m)?;
    let nr = h.nrows();
    if y2.nrows() != m * nr {
        return Err(Error::DimensionMismatch(format!(
            "Y2 has {} rows, expected M N_R = {}",
            y2.nrows(),
            m * nr
        )));
    }
    let n = y2.ncols();
    let blocks: Vec<CMatrix> = (0..m).map(|sub| h_block(h, m, sub, nt)).collect();
    let grams: Vec<CMatrix> = blocks.iter().map(|b| b.adjoint() * b).collect();
    checked_grams(&grams, "H (.) Gamma")?;
    let mut c = CMatrix::zeros(m * nt, n);
    for sub in 0..m {
        let y_sub = DMatrix::from_fn(nr, n, |r, q| y2[(r * m + sub, q)]);
        let sol = hermitian_solve(&grams[sub], &(blocks[sub].adjoint() * y_sub))?;
        for t in 0..nt {
            c.row_mut(t * m + sub).copy_from(&sol.row(t));
        }
    }
    Ok(c)
}

fn update_h(
    sample: impl Fn(usize, usize, usize) -> Complex64,
    nr: usize,
    c: &CMatrix,
    m: usize,
    ncols: usize,
) -> Result<CMatrix> {
    if m == 0 || !c.nrows().is_multiple_of(m) || c.nrows() == 0 {
        return Err(Error::DimensionMismatch(format!(
            "C has {} rows, not a multiple of M = {m}",
            c.nrows()
        )));
    }
    let nt = c.nrows() / m;
    let blocks: Vec<CMatrix> = (0..m).map(|sub| c_block(c, m, sub, nt, ncols)).collect();
    let grams: Vec<CMatrix> = blocks.iter().map(|b| b * b.adjoint()).collect();
    checked_grams(&grams, "C^T (.) Gamma")?;
    let mut h = CMatrix::zeros(nr, m * nt);
    for sub in 0..m {
        // Row r of Y^(r) at subcarrier `sub` equals H_sub[r, :] C_sub.
        let y_sub = DMatrix::from_fn(nr, ncols, |r, q| sample(r, sub, q));
        let rhs = (y_sub * blocks[sub].adjoint()).adjoint();
        let sol = hermitian_solve(&grams[sub], &rhs)?.adjoint();
        for t in 0..nt {
            h.column_mut(t * m + sub).copy_from(&sol.column(t));
        }
    }
    Ok(h)
}

/// Channel update `H = [(C^T (.) Gamma)^+ Y3]^T`.
pub fn als_update_h(y3: &CMatrix, c: &CMatrix, m: usize) -> Result<CMatrix> {
    let n = c.ncols();
    if y3.nrows() != m * n {
        return Err(Error::DimensionMismatch(format!(
            "Y3 has {} rows, expected M N = {}",
            y3.nrows(),
            m * n
        )));
    }
    update_h(|r, sub, q| y3[(q * m + sub, r)], y3.ncols(), c, m, n)
}

fn update_h_y2(y2: &CMatrix, c: &CMatrix, m: usize, ncols: usize) -> Result<CMatrix> {
    update_h(|r, sub, q| y2[(r * m + sub, q)], y2.nrows() / m, c, m, ncols)
}

/// `(H (.) Gamma) C` without forming the Khatri-Rao product.
pub fn model_y2(h: &CMatrix, c: &CMatrix, m: usize) -> Result<CMatrix> {
    let nt = check_dims(h, m)?;
    if c.nrows() != h.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "C has {} rows, H has {} columns",
            c.nrows(),
            h.ncols()
        )));
    }
    let nr = h.nrows();
    Ok(DMatrix::from_fn(nr * m, c.ncols(), |row, q| {
        let (r, sub) = (row / m, row % m);
        (0..nt).map(|t| h[(r, t * m + sub)] * c[(t * m + sub, q)]).sum()
    }))
}

fn cost(y2: &CMatrix, h: &CMatrix, c: &CMatrix, m: usize) -> Result<f64> {
    Ok(frobenius_sq(&(y2 - model_y2(h, c, m)?)).sqrt())
}

// ---------------------------------------------------------------------------
// Scaling, detection, projection
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingFix {
    /// One complex factor per CPD column `t M + m`.
    pub alpha: Vec<Complex64>,
    pub c: CMatrix,
    pub h: CMatrix,
}

/// Least-squares fit of the leading columns of `c_hat` to the known
/// pseudo-symbols; rows of `C` are multiplied by `alpha`, columns of `H`
/// divided by it, which leaves `(H (.) Gamma) C` unchanged.
pub fn resolve_scaling(c_hat: &CMatrix, h_hat: &CMatrix, known: &CMatrix) -> Result<ScalingFix> {
    let n_known = known.ncols();
    if n_known == 0 || known.nrows() != c_hat.nrows() || n_known > c_hat.ncols() || h_hat.ncols() != c_hat.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "preamble {:?} does not fit C {:?} / H {:?}",
            known.shape(),
            c_hat.shape(),
            h_hat.shape()
        )));
    }
    let mut alpha = Vec::with_capacity(c_hat.nrows());
    for k in 0..c_hat.nrows() {
        let mut num = Complex64::new(0.0, 0.0);
        let mut est = 0.0;
        let mut reference = 0.0;
        for q in 0..n_known {
            num += c_hat[(k, q)].conj() * known[(k, q)];
            est += c_hat[(k, q)].norm_sqr();
            reference += known[(k, q)].norm_sqr();
        }
        if reference.sqrt() < SCALE_TOL || est.sqrt() < SCALE_TOL {
            return Err(Error::Scaling(format!(
                "preamble row {k} too small to fix the scale (known {:e}, estimate {:e})",
                reference.sqrt(),
                est.sqrt()
            )));
        }
        alpha.push(num / est);
    }
    let mut c = c_hat.clone();
    let mut h = h_hat.clone();
    for (k, a) in alpha.iter().enumerate() {
        for q in 0..c.ncols() {
            c[(k, q)] *= a;
        }
        for r in 0..h.nrows() {
            h[(r, k)] /= a;
        }
    }
    Ok(ScalingFix { alpha, c, h })
}

/// Nearest PAM level of every real part.
pub fn detect(c: &CMatrix, constellation: &Constellation) -> DMatrix<f64> {
    c.map(|z| constellation.decide(z.re))
}

impl SymbolStructure {
    /// Hard decision on `C` with the preamble forced, returning the rebuilt
    /// symbol factor and the OQAM-staggered detected frame.
    fn project(
        &self,
        c: &CMatrix,
        constellation: &Constellation,
        preamble: &Preamble,
    ) -> Result<(CMatrix, DMatrix<f64>)> {
        match self {
            Self::Oqam(model) => {
                let mut d = detect(c, constellation);
                let n_pre = preamble.forced.ncols();
                d.columns_mut(0, n_pre).copy_from(&preamble.forced);
                Ok((model.virtualize(&d)?, d))
            }
            Self::Qam => {
                let mut q = c.map(|z| constellation.decide_complex(z));
                let n_pre = preamble.known.ncols();
                q.columns_mut(0, n_pre).copy_from(&preamble.known);
                let d = qam_to_oqam(&q);
                Ok((q, d))
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Estimators
// ---------------------------------------------------------------------------

fn relative_change(prev: f64, cur: f64, scale: f64) -> f64 {
    let floor = 1e-13 * scale;
    if prev <= floor && cur <= floor {
        0.0
    } else {
        (prev - cur).abs() / prev.max(floor)
    }
}

fn random_h(nr: usize, cols: usize, seed: u64) -> CMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DMatrix::from_fn(nr, cols, |_, _| complex_gaussian(&mut rng, 1.0))
}

/// Blind, informed or training-only estimation (see [`equalize_perfect_csi`]
/// for the genie baseline).
pub fn joint_estimate(y: &ReceivedTensor, cfg: &AlsConfig, setup: &ReceiverSetup) -> Result<ReceiverReport> {
    cfg.validate()?;
    let (m, n, nr) = y.dims();
    let nt = setup.num_tx;
    if setup.preamble.known.nrows() != m * nt || setup.preamble.known.ncols() > n {
        return Err(Error::DimensionMismatch(format!(
            "preamble {:?} does not fit M N_T = {} x N = {n}",
            setup.preamble.known.shape(),
            m * nt
        )));
    }
    let identifiability = check_identifiability(m, n, nt, nr);
    let y2 = y.unfold2();
    let scale = y.frobenius_norm();

    match cfg.mode {
        ReceiverMode::PerfectCsi => Err(Error::InvalidParameter(
            "perfect-CSI equalization needs the true channel; use equalize_perfect_csi".into(),
        )),
        ReceiverMode::TrainingOnly => {
            let known = &setup.preamble.known;
            let h = update_h_y2(&y2, known, m, known.ncols())?;
            let c = als_update_c(&y2, &h, m)?;
            let (_, d_hat) = setup.structure.project(&c, &setup.constellation, &setup.preamble)?;
            Ok(ReceiverReport {
                cost_trace: vec![cost(&y2, &h, &c, m)?],
                h_hat: h,
                c_hat: c,
                d_hat,
                iterations: 0,
                converged: true,
                identifiability,
            })
        }
        ReceiverMode::StructureBlind | ReceiverMode::Informed => {
            let informed = cfg.mode == ReceiverMode::Informed;
            let mut h = random_h(nr, m * nt, cfg.seed);
            let mut c = CMatrix::zeros(m * nt, n);
            let mut trace = Vec::new();
            let mut converged = false;
            let mut last_d: Option<DMatrix<f64>> = None;
            let mut iterations = 0;

            for iter in 1..=cfg.max_iters {
                iterations = iter;
                c = als_update_c(&y2, &h, m)?;
                let mut fixed_point = false;
                if informed && iter > cfg.n_simple_iters {
                    let (c_proj, d) = setup.structure.project(&c, &setup.constellation, &setup.preamble)?;
                    fixed_point = last_d.as_ref() == Some(&d);
                    c = c_proj;
                    last_d = Some(d);
                }
                h = update_h_y2(&y2, &c, m, n)?;
                let j = cost(&y2, &h, &c, m)?;
                if informed && iter == cfg.n_simple_iters {
                    let fix = resolve_scaling(&c, &h, &setup.preamble.known)?;
                    c = fix.c;
                    h = fix.h;
                }
                let prev = trace.last().copied();
                trace.push(j);
                if informed && iter <= cfg.n_simple_iters {
                    continue;
                }
                if fixed_point || prev.is_some_and(|p| relative_change(p, j, scale) < cfg.tol) {
                    converged = true;
                    break;
                }
            }

            let (c, h) = if informed {
                (c, h)
            } else {
                let fix = resolve_scaling(&c, &h, &setup.preamble.known)?;
                (fix.c, fix.h)
            };
            let (c_final, d_hat) = if informed {
                let c_ls = als_update_c(&y2, &h, m)?;
                let (_, d) = setup.structure.project(&c_ls, &setup.constellation, &setup.preamble)?;
                (c, d)
            } else {
                let (_, d) = setup.structure.project(&c, &setup.constellation, &setup.preamble)?;
                (c, d)
            };
            Ok(ReceiverReport {
                h_hat: h,
                c_hat: c_final,
                d_hat,
                iterations,
                cost_trace: trace,
                converged,
                identifiability,
            })
        }
    }
}

/// Genie baseline: one symbol update with the true channel, then detect.
pub fn equalize_perfect_csi(y: &ReceivedTensor, h_true: &CMatrix, setup: &ReceiverSetup) -> Result<ReceiverReport> {
    let (m, n, nr) = y.dims();
    let y2 = y.unfold2();
    let c = als_update_c(&y2, h_true, m)?;
    let (_, d_hat) = setup.structure.project(&c, &setup.constellation, &setup.preamble)?;
    Ok(ReceiverReport {
        cost_trace: vec![cost(&y2, h_true, &c, m)?],
        h_hat: h_true.clone(),
        c_hat: c,
        d_hat,
        iterations: 0,
        converged: true,
        identifiability: check_identifiability(m, n, setup.num_tx, nr),
    })
}

/// True if every step of a plain-ALS trace is non-increasing.
pub fn is_monotone(trace: &[f64]) -> bool {
    trace.windows(2).all(|w| w[1] <= w[0] + MONOTONE_SLACK * w[0].max(1.0))
}

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

pub fn nmse(h_hat: &CMatrix, h_true: &CMatrix) -> Result<f64> {
    if h_hat.shape() != h_true.shape() {
        return Err(Error::DimensionMismatch(format!(
            "{:?} vs {:?}",
            h_hat.shape(),
            h_true.shape()
        )));
    }
    let denom = frobenius_sq(h_true);
    if denom == 0.0 {
        return Err(Error::InvalidParameter("reference channel is zero".into()));
    }
    Ok(frobenius_sq(&(h_hat - h_true)) / denom)
}

/// Bit error rate over the staggered real frames, skipping the first
/// `skip_cols` (preamble) columns.
pub fn ber(
    d_hat: &DMatrix<f64>,
    d_true: &DMatrix<f64>,
    skip_cols: usize,
    constellation: &Constellation,
) -> Result<f64> {
    if d_hat.shape() != d_true.shape() {
        return Err(Error::DimensionMismatch(format!(
            "{:?} vs {:?}",
            d_hat.shape(),
            d_true.shape()
        )));
    }
    if skip_cols >= d_true.ncols() {
        return Err(Error::InvalidParameter(format!(
            "no payload left after skipping {skip_cols} of {} columns",
            d_true.ncols()
        )));
    }
    let mut errors = 0u64;
    let mut total = 0u64;
    for q in skip_cols..d_true.ncols() {
        for i in 0..d_true.nrows() {
            let a = constellation.gray_bits(d_hat[(i, q)]);
            let b = constellation.gray_bits(d_true[(i, q)]);
            errors += u64::from((a ^ b).count_ones());
            total += constellation.bits_per_real() as u64;
        }
    }
    Ok(errors as f64 / total as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interference::StructMatrices;
    use crate::linalg::{max_abs_diff, pinv_solve};
    use crate::prototype::InterferenceWeights;
    use crate::tensor::{khatri_rao, known_factor};

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn random(rows: usize, cols: usize, seed: u64) -> CMatrix {
        let mut g = rng(seed);
        DMatrix::from_fn(rows, cols, |_, _| complex_gaussian(&mut g, 1.0))
    }

    fn weights() -> InterferenceWeights {
        InterferenceWeights {
            beta: 0.2398,
            gamma: 0.5594,
            delta: 0.2131,
        }
    }

    fn oqam_setup(m: usize, n: usize) -> (ReceiverSetup, DMatrix<f64>) {
        let model = InterferenceModel::new(weights(), StructMatrices::build(m, n).unwrap());
        let qpsk = Constellation::qpsk();
        let mut g = rng(77);
        let d = DMatrix::from_fn(m, n, |_, _| qpsk.random_level(&mut g));
        let preamble = Preamble::oqam(d.columns(0, 2).into_owned(), &model).unwrap();
        let setup = ReceiverSetup {
            num_tx: 1,
            constellation: qpsk,
            structure: SymbolStructure::Oqam(model),
            preamble,
        };
        (setup, d)
    }

    fn tensor_from(h: &CMatrix, c: &CMatrix, m: usize) -> ReceivedTensor {
        ReceivedTensor::fold2(&model_y2(h, c, m).unwrap(), m).unwrap()
    }

    #[test]
    fn updates_match_khatri_rao_oracle() {
        let (m, n, nr, nt) = (4, 7, 3, 2);
        let h = random(nr, m * nt, 1);
        let c = random(m * nt, n, 2);
        let gamma = known_factor(m, nt);
        let y2 = khatri_rao(&h, &gamma).unwrap() * &c;
        assert!(max_abs_diff(&model_y2(&h, &c, m).unwrap(), &y2) < 1e-12);
        let noisy = &y2 + random(m * nr, n, 3).scale(0.1);
        let c_ls = als_update_c(&noisy, &h, m).unwrap();
        let oracle = pinv_solve(&khatri_rao(&h, &gamma).unwrap(), &noisy).unwrap();
        assert!(max_abs_diff(&c_ls, &oracle) < 1e-10);
        assert!(max_abs_diff(&als_update_c(&y2, &h, m).unwrap(), &c) < 1e-10);

        let y3 = ReceivedTensor::fold2(&noisy, m).unwrap().unfold3();
        let h_ls = als_update_h(&y3, &c, m).unwrap();
        let kr = khatri_rao(&c.transpose(), &gamma).unwrap();
        let oracle = pinv_solve(&kr, &y3).unwrap().transpose();
        assert!(max_abs_diff(&h_ls, &oracle) < 1e-10);
        let y3 = ReceivedTensor::fold2(&y2, m).unwrap().unfold3();
        assert!(max_abs_diff(&als_update_h(&y3, &c, m).unwrap(), &h) < 1e-10);
    }

    #[test]
    fn simple_update_cases() {
        let m = 4;
        let y = random(2 * m, 5, 4);
        let ones = CMatrix::from_element(2, m, Complex64::new(1.0, 0.0));
        let c = als_update_c(&y, &ones, m).unwrap();
        for i in 0..m {
            for q in 0..5 {
                let avg = (y[(i, q)] + y[(m + i, q)]) / 2.0;
                assert!((c[(i, q)] - avg).norm() < 1e-14);
            }
        }
        assert_eq!(
            als_update_c(&CMatrix::zeros(2 * m, 5), &ones, m).unwrap(),
            CMatrix::zeros(m, 5)
        );

        let h = random(2, m, 5);
        let c2 = CMatrix::from_element(m, 1, Complex64::new(2.0, 0.0));
        let y3 = DMatrix::from_fn(m, 2, |i, r| h[(r, i)] * 2.0);
        assert!(max_abs_diff(&als_update_h(&y3, &c2, m).unwrap(), &h) < 1e-15);
    }

    #[test]
    fn rank_errors_name_the_subcarrier() {
        let m = 4;
        let mut h = random(2, m, 6);
        h.column_mut(2).fill(Complex64::new(0.0, 0.0));
        let err = als_update_c(&random(2 * m, 3, 7), &h, m).unwrap_err();
        assert!(err.to_string().contains("subcarrier 2"), "{err}");
        // Two transmitters need at least two data columns per subcarrier.
        let c = random(2 * m, 1, 8);
        assert!(als_update_h(&random(m, 3, 9), &c, m).is_err());
    }

    #[test]
    fn scaling_is_recovered_and_product_kept() {
        let m = 4;
        let h = random(2, m, 10);
        let c = random(m, 6, 11);
        let mut g = rng(12);
        let alpha: Vec<Complex64> = (0..m).map(|_| complex_gaussian(&mut g, 1.0) + 0.5).collect();
        let mut c_hat = c.clone();
        let mut h_hat = h.clone();
        for (k, a) in alpha.iter().enumerate() {
            c_hat.row_mut(k).iter_mut().for_each(|z| *z /= a);
            h_hat.column_mut(k).iter_mut().for_each(|z| *z *= a);
        }
        let fix = resolve_scaling(&c_hat, &h_hat, &c.columns(0, 1).into_owned()).unwrap();
        for (got, want) in fix.alpha.iter().zip(&alpha) {
            assert!((got - want).norm() < 1e-10);
        }
        assert!(max_abs_diff(&fix.c, &c) < 1e-10);
        assert!(max_abs_diff(&fix.h, &h) < 1e-10);
        assert!(
            max_abs_diff(
                &model_y2(&fix.h, &fix.c, m).unwrap(),
                &model_y2(&h_hat, &c_hat, m).unwrap()
            ) < 1e-12
        );

        let ident = resolve_scaling(&c, &h, &c.columns(0, 2).into_owned()).unwrap();
        assert!(ident.alpha.iter().all(|a| (a - 1.0).norm() < 1e-14));
        assert!(resolve_scaling(&c, &h, &CMatrix::zeros(m, 1)).is_err());
    }

    #[test]
    fn detection_rounds_to_nearest_level() {
        let q = Constellation::qpsk();
        let c = DMatrix::from_column_slice(2, 1, &[Complex64::new(0.9, 3.0), Complex64::new(-0.1, -2.0)]);
        let d = detect(&c, &q);
        let l = 0.5f64.sqrt();
        assert_eq!(d.as_slice(), &[l, -l]);
    }

    #[test]
    fn informed_noiseless_recovers_exactly() {
        let (m, n) = (8, 12);
        let (setup, d) = oqam_setup(m, n);
        let SymbolStructure::Oqam(model) = &setup.structure else {
            unreachable!()
        };
        let c = model.virtualize(&d).unwrap();
        let h = CMatrix::from_fn(2, m, |r, _| Complex64::new(1.0 + r as f64 * 0.5, 0.3));
        let y = tensor_from(&h, &c, m);
        let cfg = AlsConfig {
            seed: 3,
            ..AlsConfig::default()
        };
        let rep = joint_estimate(&y, &cfg, &setup).unwrap();
        assert_eq!(rep.d_hat, d);
        assert!(rep.converged && rep.iterations <= 5, "{} iterations", rep.iterations);
        assert!(nmse(&rep.h_hat, &h).unwrap() < 1e-20);
        assert!(*rep.cost_trace.last().unwrap() < 1e-10);
        assert!(rep.identifiability.holds);

        let pci = equalize_perfect_csi(&y, &h, &setup).unwrap();
        assert_eq!(pci.d_hat, d);
        assert_eq!(pci.iterations, 0);
        let train = joint_estimate(
            &y,
            &AlsConfig {
                mode: ReceiverMode::TrainingOnly,
                ..cfg.clone()
            },
            &setup,
        )
        .unwrap();
        assert_eq!(train.iterations, 0);
        assert!(nmse(&train.h_hat, &h).unwrap() < 1e-20);
        assert!(joint_estimate(
            &y,
            &AlsConfig {
                mode: ReceiverMode::PerfectCsi,
                ..cfg
            },
            &setup
        )
        .is_err());
    }

    #[test]
    fn blind_trace_is_monotone() {
        let (m, n) = (8, 12);
        let (setup, d) = oqam_setup(m, n);
        let SymbolStructure::Oqam(model) = &setup.structure else {
            unreachable!()
        };
        let h = random(2, m, 20);
        let y2 = model_y2(&h, &model.virtualize(&d).unwrap(), m).unwrap() + random(2 * m, n, 21).scale(0.3);
        let y = ReceivedTensor::fold2(&y2, m).unwrap();
        let cfg = AlsConfig {
            mode: ReceiverMode::StructureBlind,
            seed: 5,
            ..AlsConfig::default()
        };
        let rep = joint_estimate(&y, &cfg, &setup).unwrap();
        assert!(rep.cost_trace.len() >= 2);
        assert!(is_monotone(&rep.cost_trace));
        assert!(!is_monotone(&[1.0, 2.0]));
    }

    #[test]
    fn qam_structure_round_trip() {
        let (m, n) = (4, 6);
        let qpsk = Constellation::qpsk();
        let mut g = rng(30);
        let sym = qpsk.random_qam(m, n, &mut g);
        let setup = ReceiverSetup {
            num_tx: 1,
            constellation: qpsk,
            structure: SymbolStructure::Qam,
            preamble: Preamble::qam(sym.columns(0, 1).into_owned()).unwrap(),
        };
        let h = random(2, m, 31);
        let y = tensor_from(&h, &sym, m);
        let cfg = AlsConfig {
            mode: ReceiverMode::StructureBlind,
            ..AlsConfig::default()
        };
        let rep = joint_estimate(&y, &cfg, &setup).unwrap();
        assert_eq!(rep.d_hat, qam_to_oqam(&sym));
        assert!(nmse(&rep.h_hat, &h).unwrap() < 1e-20);
    }

    #[test]
    fn metric_examples() {
        let h = random(2, 4, 40);
        assert_eq!(nmse(&h, &h).unwrap(), 0.0);
        assert!((nmse(&CMatrix::zeros(2, 4), &h).unwrap() - 1.0).abs() < 1e-15);
        assert!((nmse(&h.scale(2.0), &h).unwrap() - 1.0).abs() < 1e-15);

        let q = Constellation::qpsk();
        let l = 0.5f64.sqrt();
        let truth = DMatrix::from_element(2, 4, l);
        let mut est = truth.clone();
        est[(0, 3)] = -l;
        est[(1, 0)] = -l;
        assert_eq!(ber(&est, &truth, 2, &q).unwrap(), 0.25);
        assert_eq!(ber(&truth, &truth, 0, &q).unwrap(), 0.0);
        assert!(ber(&truth, &truth, 4, &q).is_err());
    }
}
