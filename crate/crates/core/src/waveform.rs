//! OQAM mapping, synthesis/analysis filter banks and the CP-OFDM baseline.
//!
//! Frames are column-per-symbol matrices: an OQAM frame for `N_T` antennas is
//! a real `(M N_T) x N` matrix whose row block `t` holds `D^(t)`.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prototype::{ambient_phasor, PrototypeFilter};

pub type TimeSignal = Vec<Complex64>;

// ---------------------------------------------------------------------------
// Constellation
// ---------------------------------------------------------------------------

/// Square QAM with unit average symbol energy and Gray-coded PAM rails.
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    order: usize,
    side: usize,
    scale: f64,
}

impl Constellation {
    pub fn qam(order: usize) -> Result<Self> {
        let side = (order as f64).sqrt().round() as usize;
        if side < 2 || side * side != order || !side.is_power_of_two() {
            return Err(Error::InvalidParameter(format!(
                "QAM order {order} must be the square of a power of two"
            )));
        }
        let scale = (3.0 / (2.0 * (order as f64 - 1.0))).sqrt();
        Ok(Self { order, side, scale })
    }

    pub fn qpsk() -> Self {
        Self::qam(4).expect("QPSK is valid")
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Bits carried by one real OQAM symbol.
    pub fn bits_per_real(&self) -> usize {
        self.side.trailing_zeros() as usize
    }

    pub fn pam_levels(&self) -> Vec<f64> {
        (0..self.side).map(|i| self.level(i)).collect()
    }

    fn level(&self, index: usize) -> f64 {
        (2.0 * index as f64 - (self.side as f64 - 1.0)) * self.scale
    }

    /// Index of the PAM level nearest to `x`.
    pub fn nearest_index(&self, x: f64) -> usize {
        let raw = (x / self.scale + (self.side as f64 - 1.0)) / 2.0;
        raw.round().clamp(0.0, (self.side - 1) as f64) as usize
    }

    /// Nearest PAM level (the OQAM decision device).
    pub fn decide(&self, x: f64) -> f64 {
        self.level(self.nearest_index(x))
    }

    pub fn decide_complex(&self, z: Complex64) -> Complex64 {
        Complex64::new(self.decide(z.re), self.decide(z.im))
    }

    /// Gray label of the PAM level nearest to `x`.
    pub fn gray_bits(&self, x: f64) -> u32 {
        let i = self.nearest_index(x) as u32;
        i ^ (i >> 1)
    }

    pub fn random_level<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.level(rng.gen_range(0..self.side))
    }

    pub fn random_qam<R: Rng + ?Sized>(&self, rows: usize, cols: usize, rng: &mut R) -> DMatrix<Complex64> {
        DMatrix::from_fn(rows, cols, |_, _| {
            Complex64::new(self.random_level(rng), self.random_level(rng))
        })
    }
}

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModulationConfig {
    pub constellation_order: usize,
    pub num_subcarriers: usize,
    pub num_fbmc_symbols: usize,
    pub num_tx: usize,
    pub num_rx: usize,
    pub preamble_len: usize,
}

impl ModulationConfig {
    pub fn validate(&self) -> Result<()> {
        Constellation::qam(self.constellation_order)?;
        if self.num_subcarriers < 4 || !self.num_subcarriers.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!(
                "M = {} must be even and >= 4",
                self.num_subcarriers
            )));
        }
        if self.num_fbmc_symbols == 0 || !self.num_fbmc_symbols.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!(
                "N = {} must be a positive even number",
                self.num_fbmc_symbols
            )));
        }
        if self.preamble_len < 2 || !self.preamble_len.is_multiple_of(2) || self.preamble_len >= self.num_fbmc_symbols {
            return Err(Error::InvalidParameter(format!(
                "preamble length {} must be even, >= 2 and shorter than the frame",
                self.preamble_len
            )));
        }
        if self.num_tx == 0 || self.num_rx == 0 {
            return Err(Error::InvalidParameter("antenna counts must be positive".into()));
        }
        Ok(())
    }

    pub fn constellation(&self) -> Constellation {
        Constellation::qam(self.constellation_order).expect("validated constellation")
    }

    pub fn num_ofdm_symbols(&self) -> usize {
        self.num_fbmc_symbols / 2
    }
}

// ---------------------------------------------------------------------------
// OQAM staggering
// ---------------------------------------------------------------------------

/// Real part to slot `2k`, imaginary part to slot `2k + 1`.
pub fn qam_to_oqam(qam: &DMatrix<Complex64>) -> DMatrix<f64> {
    DMatrix::from_fn(qam.nrows(), 2 * qam.ncols(), |m, n| {
        let z = qam[(m, n / 2)];
        if n % 2 == 0 {
            z.re
        } else {
            z.im
        }
    })
}

pub fn oqam_to_qam(frame: &DMatrix<f64>) -> Result<DMatrix<Complex64>> {
    if !frame.ncols().is_multiple_of(2) {
        return Err(Error::DimensionMismatch(format!(
            "OQAM frame has an odd number of symbols ({})",
            frame.ncols()
        )));
    }
    Ok(DMatrix::from_fn(frame.nrows(), frame.ncols() / 2, |m, k| {
        Complex64::new(frame[(m, 2 * k)], frame[(m, 2 * k + 1)])
    }))
}

// ---------------------------------------------------------------------------
// Filter banks
// ---------------------------------------------------------------------------

/// Length of the SFB output for `N` symbols: `(N - 1) M/2 + L_g`.
pub fn sfb_output_len(filter: &PrototypeFilter, num_symbols: usize) -> usize {
    if num_symbols == 0 {
        return 0;
    }
    (num_symbols - 1) * filter.hop() + filter.len()
}

/// Synthesis/analysis bank with cached FFT plans.
pub struct FilterBank {
    filter: PrototypeFilter,
    ifft: Arc<dyn Fft<f64>>,
    fft: Arc<dyn Fft<f64>>,
    // exp(-j 2 pi m c / M)
    center_twiddle: Vec<Complex64>,
}

impl std::fmt::Debug for FilterBank {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FilterBank").field("filter", &self.filter).finish()
    }
}

impl Clone for FilterBank {
    fn clone(&self) -> Self {
        Self::new(self.filter.clone())
    }
}

impl FilterBank {
    pub fn new(filter: PrototypeFilter) -> Self {
        let m = filter.num_subcarriers();
        let mut planner = FftPlanner::new();
        let ifft = planner.plan_fft_inverse(m);
        let fft = planner.plan_fft_forward(m);
        let center_twiddle = (0..m)
            .map(|k| Complex64::from_polar(1.0, -2.0 * PI * k as f64 * filter.center() / m as f64))
            .collect();
        Self {
            filter,
            ifft,
            fft,
            center_twiddle,
        }
    }

    pub fn filter(&self) -> &PrototypeFilter {
        &self.filter
    }

    /// `s(l) = sum_{m,n} d_{m,n} g_{m,n}(l)` via one M-point IFFT per symbol.
    pub fn synthesize(&self, frame: &DMatrix<f64>) -> Result<TimeSignal> {
        let m = self.filter.num_subcarriers();
        check_rows(frame.nrows(), m)?;
        let n_sym = frame.ncols();
        let hop = self.filter.hop();
        let taps = self.filter.taps();
        let mut out = vec![Complex64::new(0.0, 0.0); sfb_output_len(&self.filter, n_sym)];
        let mut buf = vec![Complex64::new(0.0, 0.0); m];
        for n in 0..n_sym {
            for (k, slot) in buf.iter_mut().enumerate() {
                *slot = frame[(k, n)] * ambient_phasor(k, n as i64) * self.center_twiddle[k];
            }
            self.ifft.process(&mut buf);
            let offset = n * hop;
            for (i, g) in taps.iter().enumerate() {
                let l = offset + i;
                out[l] += buf[l % m] * *g;
            }
        }
        Ok(out)
    }

    /// Matched-filter outputs `y_{p,q} = sum_l r(l) conj(g_{p,q}(l))` via one
    /// M-point FFT per symbol.
    pub fn analyze(&self, signal: &[Complex64], num_symbols: usize) -> Result<DMatrix<Complex64>> {
        let m = self.filter.num_subcarriers();
        let needed = sfb_output_len(&self.filter, num_symbols);
        if signal.len() < needed {
            return Err(Error::SignalTooShort {
                needed,
                got: signal.len(),
            });
        }
        let hop = self.filter.hop();
        let taps = self.filter.taps();
        let mut out = DMatrix::zeros(m, num_symbols);
        let mut buf = vec![Complex64::new(0.0, 0.0); m];
        for q in 0..num_symbols {
            buf.iter_mut().for_each(|b| *b = Complex64::new(0.0, 0.0));
            let offset = q * hop;
            for (i, g) in taps.iter().enumerate() {
                let l = offset + i;
                buf[l % m] += signal[l] * *g;
            }
            self.fft.process(&mut buf);
            for p in 0..m {
                out[(p, q)] = buf[p] * self.center_twiddle[p].conj() * ambient_phasor(p, q as i64).conj();
            }
        }
        Ok(out)
    }
}

fn check_rows(rows: usize, m: usize) -> Result<()> {
    if rows != m {
        return Err(Error::DimensionMismatch(format!(
            "frame has {rows} rows but the filter bank has {m} subcarriers"
        )));
    }
    Ok(())
}

pub fn sfb_modulate(frame: &DMatrix<f64>, filter: &PrototypeFilter) -> Result<TimeSignal> {
    FilterBank::new(filter.clone()).synthesize(frame)
}

pub fn afb_demodulate(
    signal: &[Complex64],
    filter: &PrototypeFilter,
    num_symbols: usize,
) -> Result<DMatrix<Complex64>> {
    FilterBank::new(filter.clone()).analyze(signal, num_symbols)
}

/// Direct evaluation of the SFB sum, atom by atom.
pub fn sfb_modulate_direct(frame: &DMatrix<f64>, filter: &PrototypeFilter) -> Result<TimeSignal> {
    check_rows(frame.nrows(), filter.num_subcarriers())?;
    let len = sfb_output_len(filter, frame.ncols());
    let mut out = vec![Complex64::new(0.0, 0.0); len];
    for n in 0..frame.ncols() {
        let start = n * filter.hop();
        for m in 0..frame.nrows() {
            let d = frame[(m, n)];
            if d == 0.0 {
                continue;
            }
            for (l, o) in out.iter_mut().enumerate().skip(start).take(filter.len()) {
                *o += filter.atom_sample(m, n as i64, l as i64) * d;
            }
        }
    }
    Ok(out)
}

/// Direct evaluation of the AFB inner products.
pub fn afb_demodulate_direct(
    signal: &[Complex64],
    filter: &PrototypeFilter,
    num_symbols: usize,
) -> Result<DMatrix<Complex64>> {
    let needed = sfb_output_len(filter, num_symbols);
    if signal.len() < needed {
        return Err(Error::SignalTooShort {
            needed,
            got: signal.len(),
        });
    }
    let m = filter.num_subcarriers();
    Ok(DMatrix::from_fn(m, num_symbols, |p, q| {
        let start = q * filter.hop();
        (start..start + filter.len())
            .map(|l| signal[l] * filter.atom_sample(p, q as i64, l as i64).conj())
            .sum()
    }))
}

// ---------------------------------------------------------------------------
// CP-OFDM
// ---------------------------------------------------------------------------

/// Unitary IDFT per column with a cyclic prefix of `cp_len` samples.
pub fn ofdm_modulate(qam: &DMatrix<Complex64>, cp_len: usize) -> Result<TimeSignal> {
    let m = qam.nrows();
    if m == 0 || cp_len >= m {
        return Err(Error::InvalidParameter(format!(
            "cyclic prefix {cp_len} must be shorter than the {m}-point symbol"
        )));
    }
    let ifft = FftPlanner::new().plan_fft_inverse(m);
    let norm = 1.0 / (m as f64).sqrt();
    let mut out = Vec::with_capacity(qam.ncols() * (m + cp_len));
    let mut buf = vec![Complex64::new(0.0, 0.0); m];
    for col in qam.column_iter() {
        buf.iter_mut().zip(col.iter()).for_each(|(b, x)| *b = *x * norm);
        ifft.process(&mut buf);
        out.extend_from_slice(&buf[m - cp_len..]);
        out.extend_from_slice(&buf);
    }
    Ok(out)
}

pub fn ofdm_demodulate(
    signal: &[Complex64],
    num_subcarriers: usize,
    cp_len: usize,
    num_symbols: usize,
) -> Result<DMatrix<Complex64>> {
    let m = num_subcarriers;
    if m == 0 || cp_len >= m {
        return Err(Error::InvalidParameter(format!(
            "cyclic prefix {cp_len} must be shorter than the {m}-point symbol"
        )));
    }
    let needed = num_symbols * (m + cp_len);
    if signal.len() < needed {
        return Err(Error::SignalTooShort {
            needed,
            got: signal.len(),
        });
    }
    let fft = FftPlanner::new().plan_fft_forward(m);
    let norm = 1.0 / (m as f64).sqrt();
    let mut out = DMatrix::zeros(m, num_symbols);
    let mut buf = vec![Complex64::new(0.0, 0.0); m];
    for k in 0..num_symbols {
        let start = k * (m + cp_len) + cp_len;
        buf.copy_from_slice(&signal[start..start + m]);
        fft.process(&mut buf);
        for p in 0..m {
            out[(p, k)] = buf[p] * norm;
        }
    }
    Ok(out)
}
