//! Block-fading multipath channels, AWGN and per-subcarrier frequency responses.

use std::f64::consts::PI;
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::waveform::TimeSignal;

const BUILTIN_PROFILES: &str = include_str!("../fixtures/profiles.toml");

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelProfile {
    pub name: String,
    tap_powers: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProfileEntry {
    name: String,
    length: usize,
    tap_powers: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProfileFile {
    profile: Vec<ProfileEntry>,
}

impl ChannelProfile {
    /// Builds a profile, normalising the powers to unit total.
    pub fn new(name: impl Into<String>, tap_powers: Vec<f64>) -> Result<Self> {
        if tap_powers.is_empty() {
            return Err(Error::InvalidParameter("profile has no taps".into()));
        }
        if tap_powers.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidParameter(
                "tap powers must be finite and nonnegative".into(),
            ));
        }
        let total: f64 = tap_powers.iter().sum();
        if total <= 0.0 {
            return Err(Error::InvalidParameter("tap powers sum to zero".into()));
        }
        Ok(Self {
            name: name.into(),
            tap_powers: tap_powers.into_iter().map(|p| p / total).collect(),
        })
    }

    pub fn flat() -> Self {
        Self::new("flat", vec![1.0]).expect("single tap profile")
    }

    pub fn tap_powers(&self) -> &[f64] {
        &self.tap_powers
    }

    pub fn len(&self) -> usize {
        self.tap_powers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tap_powers.is_empty()
    }

    pub fn parse_fixture(text: &str) -> Result<Vec<Self>> {
        let file: ProfileFile = toml::from_str(text).map_err(|e| Error::Fixture(e.to_string()))?;
        file.profile
            .into_iter()
            .map(|p| {
                if p.length != p.tap_powers.len() {
                    return Err(Error::Fixture(format!(
                        "profile {} declares length {} but lists {} taps",
                        p.name,
                        p.length,
                        p.tap_powers.len()
                    )));
                }
                Self::new(p.name, p.tap_powers)
            })
            .collect()
    }

    pub fn load_fixture(path: impl AsRef<Path>) -> Result<Vec<Self>> {
        Self::parse_fixture(&std::fs::read_to_string(path)?)
    }

    /// Looks up one of the shipped profiles (`peda`, `vehb`, `flat`).
    pub fn builtin(name: &str) -> Result<Self> {
        if name == "flat" {
            return Ok(Self::flat());
        }
        Self::parse_fixture(BUILTIN_PROFILES)?
            .into_iter()
            .find(|p| p.name == name)
            .ok_or_else(|| Error::Fixture(format!("unknown channel profile {name:?}")))
    }
}

/// Channel taps and responses for every `(r, t)` link, constant over a frame.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    num_tx: usize,
    num_rx: usize,
    num_subcarriers: usize,
    impulse: Vec<Vec<Complex64>>,
    freq: Vec<Vec<Complex64>>,
}

impl ChannelSet {
    /// `impulse[r * num_tx + t]` is the response from Tx `t` to Rx `r`.
    pub fn from_impulse_responses(
        num_tx: usize,
        num_rx: usize,
        num_subcarriers: usize,
        impulse: Vec<Vec<Complex64>>,
    ) -> Result<Self> {
        if impulse.len() != num_tx * num_rx || num_subcarriers == 0 {
            return Err(Error::DimensionMismatch(format!(
                "{} impulse responses for {num_rx}x{num_tx} links",
                impulse.len()
            )));
        }
        let freq = impulse.iter().map(|h| dft_response(h, num_subcarriers)).collect();
        Ok(Self {
            num_tx,
            num_rx,
            num_subcarriers,
            impulse,
            freq,
        })
    }

    pub fn num_tx(&self) -> usize {
        self.num_tx
    }

    pub fn num_rx(&self) -> usize {
        self.num_rx
    }

    pub fn num_subcarriers(&self) -> usize {
        self.num_subcarriers
    }

    pub fn impulse(&self, r: usize, t: usize) -> &[Complex64] {
        &self.impulse[r * self.num_tx + t]
    }

    pub fn freq_response(&self, r: usize, t: usize) -> &[Complex64] {
        &self.freq[r * self.num_tx + t]
    }

    /// The factor `H` (`N_R x M N_T`) with `H[r, t M + m] = H_m^(r,t)`.
    pub fn factor_matrix(&self) -> CMatrix {
        let m = self.num_subcarriers;
        DMatrix::from_fn(self.num_rx, m * self.num_tx, |r, k| self.freq_response(r, k / m)[k % m])
    }
}

/// `H_p = sum_k h_k exp(-j 2 pi p k / M)`.
pub fn dft_response(taps: &[Complex64], num_subcarriers: usize) -> Vec<Complex64> {
    (0..num_subcarriers)
        .map(|p| {
            taps.iter()
                .enumerate()
                .map(|(k, h)| h * Complex64::from_polar(1.0, -2.0 * PI * (p * k) as f64 / num_subcarriers as f64))
                .sum()
        })
        .collect()
}

/// Circularly-symmetric complex Gaussian sample with variance `var`.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, var: f64) -> Complex64 {
    let s = (var / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * s, im * s)
}

/// Independent Rayleigh taps per link, tap `k` with variance `tap_powers[k]`.
pub fn draw_channel(
    profile: &ChannelProfile,
    num_tx: usize,
    num_rx: usize,
    num_subcarriers: usize,
    seed: u64,
) -> Result<ChannelSet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let impulse = (0..num_tx * num_rx)
        .map(|_| {
            profile
                .tap_powers()
                .iter()
                .map(|p| complex_gaussian(&mut rng, *p))
                .collect()
        })
        .collect();
    ChannelSet::from_impulse_responses(num_tx, num_rx, num_subcarriers, impulse)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub sigma2: f64,
    pub seed: u64,
}

/// `r^(r)(l) = sum_t (h^(r,t) * s^(t))(l) + w^(r)(l)` with full linear
/// convolution; the output is `L_s + L_h - 1` samples long.
pub fn apply_channel(signals: &[TimeSignal], channels: &ChannelSet, noise: &NoiseSpec) -> Result<Vec<TimeSignal>> {
    if signals.len() != channels.num_tx() {
        return Err(Error::DimensionMismatch(format!(
            "{} transmit signals for {} transmit antennas",
            signals.len(),
            channels.num_tx()
        )));
    }
    if noise.sigma2 < 0.0 || !noise.sigma2.is_finite() {
        return Err(Error::InvalidParameter(format!("noise variance {}", noise.sigma2)));
    }
    let sig_len = signals.iter().map(Vec::len).max().unwrap_or(0);
    let max_taps = (0..channels.num_rx())
        .flat_map(|r| (0..channels.num_tx()).map(move |t| (r, t)))
        .map(|(r, t)| channels.impulse(r, t).len())
        .max()
        .unwrap_or(1);
    let out_len = sig_len + max_taps - 1;
    let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
    let mut outputs = Vec::with_capacity(channels.num_rx());
    for r in 0..channels.num_rx() {
        let mut out = vec![Complex64::new(0.0, 0.0); out_len];
        for (t, s) in signals.iter().enumerate() {
            for (k, h) in channels.impulse(r, t).iter().enumerate() {
                for (i, x) in s.iter().enumerate() {
                    out[i + k] += h * x;
                }
            }
        }
        if noise.sigma2 > 0.0 {
            out.iter_mut()
                .for_each(|v| *v += complex_gaussian(&mut rng, noise.sigma2));
        }
        outputs.push(out);
    }
    Ok(outputs)
}

/// `sigma^2 = P / 10^(snr_db / 10)`.
pub fn snr_to_sigma2(snr_db: f64, signal_power: f64) -> Result<f64> {
    if signal_power <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "signal power {signal_power} must be positive"
        )));
    }
    Ok(signal_power / 10f64.powf(snr_db / 10.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_profiles() {
        let peda = ChannelProfile::builtin("peda").unwrap();
        assert_eq!(peda.len(), 9);
        assert!((peda.tap_powers().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(ChannelProfile::builtin("vehb").unwrap().len(), 18);
        assert!(ChannelProfile::builtin("nope").is_err());
    }

    #[test]
    fn fixture_validation() {
        let bad = "[[profile]]\nname = \"x\"\nlength = 3\ntap_powers = [1.0, 0.5]\n";
        assert!(ChannelProfile::parse_fixture(bad).is_err());
        assert!(ChannelProfile::new("neg", vec![1.0, -0.1]).is_err());
    }

    #[test]
    fn flat_profile_has_constant_magnitude() {
        let ch = draw_channel(&ChannelProfile::flat(), 1, 2, 16, 5).unwrap();
        for r in 0..2 {
            let h = ch.freq_response(r, 0);
            assert!(h.iter().all(|x| (x.norm() - h[0].norm()).abs() < 1e-14));
        }
    }

    #[test]
    fn freq_responses_track_impulses() {
        let ch = draw_channel(&ChannelProfile::builtin("vehb").unwrap(), 2, 2, 32, 7).unwrap();
        for r in 0..2 {
            for t in 0..2 {
                let again = dft_response(ch.impulse(r, t), 32);
                for (a, b) in again.iter().zip(ch.freq_response(r, t)) {
                    assert_eq!(a, b);
                }
            }
        }
        let h = ch.factor_matrix();
        assert_eq!(h.shape(), (2, 64));
        assert_eq!(h[(1, 32 + 5)], ch.freq_response(1, 1)[5]);
    }

    #[test]
    fn identity_channel_without_noise() {
        let s: TimeSignal = (0..10).map(|i| Complex64::new(i as f64, 1.0)).collect();
        let ch = ChannelSet::from_impulse_responses(1, 1, 8, vec![vec![Complex64::new(1.0, 0.0)]]).unwrap();
        let out = apply_channel(std::slice::from_ref(&s), &ch, &NoiseSpec { sigma2: 0.0, seed: 0 }).unwrap();
        assert_eq!(out[0], s);
    }

    #[test]
    fn convolution_length() {
        let s: TimeSignal = vec![Complex64::new(1.0, 0.0); 20];
        let ch = draw_channel(&ChannelProfile::builtin("peda").unwrap(), 1, 1, 8, 1).unwrap();
        let out = apply_channel(&[s], &ch, &NoiseSpec { sigma2: 0.0, seed: 0 }).unwrap();
        assert_eq!(out[0].len(), 20 + 9 - 1);
    }

    #[test]
    fn same_seed_same_noise() {
        let s: TimeSignal = vec![Complex64::new(0.0, 0.0); 64];
        let ch = draw_channel(&ChannelProfile::flat(), 1, 2, 8, 1).unwrap();
        let spec = NoiseSpec { sigma2: 0.3, seed: 99 };
        assert_eq!(
            apply_channel(std::slice::from_ref(&s), &ch, &spec).unwrap(),
            apply_channel(&[s], &ch, &spec).unwrap()
        );
    }

    #[test]
    fn snr_conversion() {
        assert_eq!(snr_to_sigma2(0.0, 1.0).unwrap(), 1.0);
        assert!((snr_to_sigma2(10.0, 1.0).unwrap() - 0.1).abs() < 1e-15);
        assert!((snr_to_sigma2(3.0, 2.0).unwrap() - 2.0 / 10f64.powf(0.3)).abs() < 1e-15);
        assert!(snr_to_sigma2(3.0, 0.0).is_err());
    }
}
