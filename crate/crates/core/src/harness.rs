//! Monte Carlo driver: scenario files, paired FBMC / CP-OFDM trials, per-SNR
//! aggregation and CSV output.

use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{apply_channel, draw_channel, snr_to_sigma2, ChannelProfile, ChannelSet, NoiseSpec};
use crate::error::{Error, Result};
use crate::interference::{Histogram, InterferenceModel};
use crate::linalg::CMatrix;
use crate::prototype::{compute_weights, design_prototype, InterferenceWeights};
use crate::receiver::{
    ber, equalize_perfect_csi, joint_estimate, nmse, AlsConfig, Preamble, ReceiverMode, ReceiverReport, ReceiverSetup,
    SymbolStructure,
};
use crate::tensor::ReceivedTensor;
use crate::waveform::{
    ofdm_demodulate, ofdm_modulate, qam_to_oqam, Constellation, FilterBank, ModulationConfig, TimeSignal,
};

/// Rows with more than this fraction of flagged trials are unreliable.
pub const UNRELIABLE_FLAG_FRACTION: f64 = 0.01;

const CSV_HEADER: [&str; 10] = [
    "system",
    "mode",
    "snr_db",
    "nmse",
    "ber",
    "avg_iterations",
    "iter_std",
    "trials",
    "flagged",
    "seed",
];

// ---------------------------------------------------------------------------
// Scenario
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum System {
    Fbmc,
    CpOfdm,
}

impl System {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Fbmc => "fbmc",
            Self::CpOfdm => "cp_ofdm",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReceiverSection {
    pub max_iters: usize,
    pub tol: f64,
    pub n_simple_iters: usize,
}

impl Default for ReceiverSection {
    fn default() -> Self {
        let d = AlsConfig::default();
        Self {
            max_iters: d.max_iters,
            tol: d.tol,
            n_simple_iters: d.n_simple_iters,
        }
    }
}

fn default_ofdm_modes() -> Vec<String> {
    vec![ReceiverMode::StructureBlind.as_str().into()]
}

fn default_overlap() -> usize {
    4
}

fn default_bins() -> usize {
    61
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    /// Profile name, looked up in `profiles_file` or the built-in fixture.
    pub profile: String,
    #[serde(default)]
    pub profiles_file: Option<PathBuf>,
    pub systems: Vec<System>,
    pub receiver_modes: Vec<String>,
    #[serde(default = "default_ofdm_modes")]
    pub ofdm_modes: Vec<String>,
    pub snr_grid_db: Vec<f64>,
    pub trials_per_point: usize,
    pub cp_len: usize,
    #[serde(default = "default_overlap")]
    pub overlap: usize,
    pub seed: u64,
    #[serde(default)]
    pub histogram_frames: usize,
    #[serde(default = "default_bins")]
    pub histogram_bins: usize,
    pub modulation: ModulationConfig,
    #[serde(default)]
    pub receiver: ReceiverSection,
}

impl Scenario {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let s: Self = toml::from_str(text).map_err(|e| Error::Fixture(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    /// Relative `profiles_file` paths resolve against the scenario's folder.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut s = Self::from_toml_str(&std::fs::read_to_string(path)?)?;
        if let (Some(file), Some(dir)) = (s.profiles_file.as_mut(), path.parent()) {
            if file.is_relative() {
                *file = dir.join(&*file);
            }
        }
        Ok(s)
    }

    pub fn builtin(name: &str) -> Result<Self> {
        match name {
            "peda" => Self::from_toml_str(include_str!("../fixtures/peda.scenario")),
            "vehb" => Self::from_toml_str(include_str!("../fixtures/vehb.scenario")),
            other => Err(Error::Fixture(format!("no built-in scenario '{other}'"))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.modulation.validate()?;
        if self.trials_per_point == 0 {
            return Err(Error::InvalidParameter("trials_per_point must be >= 1".into()));
        }
        if self.snr_grid_db.is_empty() || self.snr_grid_db.iter().any(|s| !s.is_finite()) {
            return Err(Error::InvalidParameter(
                "snr_grid_db must be non-empty and finite".into(),
            ));
        }
        if self.systems.is_empty() {
            return Err(Error::InvalidParameter("no systems selected".into()));
        }
        if self.systems.contains(&System::CpOfdm) && self.cp_len >= self.modulation.num_subcarriers {
            return Err(Error::InvalidParameter(format!("cp_len = {} must be < M", self.cp_len)));
        }
        if self.histogram_bins < 10 {
            return Err(Error::InvalidParameter("histogram_bins must be >= 10".into()));
        }
        self.fbmc_modes()?;
        self.cp_ofdm_modes()?;
        self.als_config(ReceiverMode::Informed, 0).validate()
    }

    pub fn fbmc_modes(&self) -> Result<Vec<ReceiverMode>> {
        self.receiver_modes.iter().map(|m| m.parse()).collect()
    }

    pub fn cp_ofdm_modes(&self) -> Result<Vec<ReceiverMode>> {
        self.ofdm_modes.iter().map(|m| m.parse()).collect()
    }

    /// Keep only the listed modes (both systems).
    pub fn restrict_modes(&mut self, keep: &[ReceiverMode]) -> Result<()> {
        let names: Vec<&str> = keep.iter().map(|m| m.as_str()).collect();
        self.receiver_modes.retain(|m| names.contains(&m.as_str()));
        self.ofdm_modes.retain(|m| names.contains(&m.as_str()));
        if self.receiver_modes.is_empty() && self.ofdm_modes.is_empty() {
            return Err(Error::InvalidParameter("mode filter removed every mode".into()));
        }
        Ok(())
    }

    pub fn channel_profile(&self) -> Result<ChannelProfile> {
        match &self.profiles_file {
            None => ChannelProfile::builtin(&self.profile),
            Some(path) => ChannelProfile::load_fixture(path)?
                .into_iter()
                .find(|p| p.name == self.profile)
                .ok_or_else(|| Error::Fixture(format!("profile '{}' not in {}", self.profile, path.display()))),
        }
    }

    fn als_config(&self, mode: ReceiverMode, seed: u64) -> AlsConfig {
        AlsConfig {
            max_iters: self.receiver.max_iters,
            tol: self.receiver.tol,
            n_simple_iters: self.receiver.n_simple_iters,
            mode,
            seed,
        }
    }
}

// ---------------------------------------------------------------------------
// Seeds
// ---------------------------------------------------------------------------

fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of trial `trial` at SNR index `snr_index`.
pub fn trial_seed(base: u64, snr_index: usize, trial: usize) -> u64 {
    mix(mix(base ^ mix(trial as u64)) ^ ((snr_index as u64) << 40))
}

/// Sub-streams drawn from one trial seed. Data, channel and receiver
/// initialization depend only on the trial index so that SNR points are
/// paired too; the noise changes with the SNR.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct TrialSeeds {
    data: u64,
    channel: u64,
    init: u64,
    noise: u64,
}

impl TrialSeeds {
    fn new(base: u64, snr_index: usize, trial: usize) -> Self {
        let stem = mix(base ^ mix(trial as u64));
        Self {
            data: mix(stem ^ 1),
            channel: mix(stem ^ 2),
            init: mix(stem ^ 3),
            noise: trial_seed(base, snr_index, trial),
        }
    }
}

// ---------------------------------------------------------------------------
// Experiment
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct ModeMetrics {
    pub system: System,
    pub mode: ReceiverMode,
    /// `None` when the receiver reported a rank or scaling failure.
    pub outcome: Option<Metrics>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub nmse: f64,
    pub ber: f64,
    pub iterations: usize,
}

/// Everything that does not change between trials.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub scenario: Scenario,
    pub profile: ChannelProfile,
    pub weights: InterferenceWeights,
    bank: FilterBank,
    model: InterferenceModel,
    constellation: Constellation,
    /// Known QPSK preamble, `M N_T x preamble_len / 2`.
    preamble_qam: CMatrix,
}

impl Experiment {
    pub fn new(scenario: Scenario) -> Result<Self> {
        scenario.validate()?;
        let cfg = &scenario.modulation;
        let profile = scenario.channel_profile()?;
        let filter = design_prototype(cfg.num_subcarriers, scenario.overlap)?;
        let weights = compute_weights(&filter)?;
        let model = InterferenceModel::for_filter(&filter, weights, cfg.num_fbmc_symbols)?;
        let mut rng = ChaCha8Rng::seed_from_u64(mix(scenario.seed ^ 0x5052_4541_4D42_4C45));
        let preamble_qam =
            Constellation::qpsk().random_qam(cfg.num_subcarriers * cfg.num_tx, cfg.preamble_len / 2, &mut rng);
        Ok(Self {
            constellation: cfg.constellation(),
            bank: FilterBank::new(filter),
            profile,
            weights,
            model,
            preamble_qam,
            scenario,
        })
    }

    fn cfg(&self) -> &ModulationConfig {
        &self.scenario.modulation
    }

    /// QAM payload per transmitter, stacked `M N_T x N/2`, preamble first.
    fn draw_symbols(&self, seed: u64) -> CMatrix {
        let cfg = self.cfg();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut q = self
            .constellation
            .random_qam(cfg.num_subcarriers * cfg.num_tx, cfg.num_ofdm_symbols(), &mut rng);
        q.columns_mut(0, self.preamble_qam.ncols())
            .copy_from(&self.preamble_qam);
        q
    }

    fn receive(
        &self,
        signals: &[TimeSignal],
        channel: &ChannelSet,
        noise: &NoiseSpec,
        system: System,
    ) -> Result<ReceivedTensor> {
        let cfg = self.cfg();
        let rx = apply_channel(signals, channel, noise)?;
        let slices = rx
            .iter()
            .map(|r| match system {
                System::Fbmc => self.bank.analyze(r, cfg.num_fbmc_symbols),
                System::CpOfdm => ofdm_demodulate(r, cfg.num_subcarriers, self.scenario.cp_len, cfg.num_ofdm_symbols()),
            })
            .collect::<Result<Vec<_>>>()?;
        ReceivedTensor::new(slices)
    }

    #[allow(clippy::too_many_arguments)]
    fn run_modes(
        &self,
        system: System,
        modes: &[ReceiverMode],
        y: &ReceivedTensor,
        setup: &ReceiverSetup,
        h_true: &CMatrix,
        d_true: &DMatrix<f64>,
        init_seed: u64,
    ) -> Vec<ModeMetrics> {
        modes
            .iter()
            .map(|&mode| {
                let report: Result<ReceiverReport> = match mode {
                    ReceiverMode::PerfectCsi => equalize_perfect_csi(y, h_true, setup),
                    _ => joint_estimate(y, &self.scenario.als_config(mode, init_seed), setup),
                };
                let outcome = report.and_then(|rep| {
                    Ok(Metrics {
                        nmse: nmse(&rep.h_hat, h_true)?,
                        ber: ber(&rep.d_hat, d_true, setup.preamble.frame_len(), &self.constellation)?,
                        iterations: rep.iterations,
                    })
                });
                if let Err(e) = &outcome {
                    log::debug!("{} {} flagged: {e}", system.as_str(), mode.as_str());
                }
                ModeMetrics {
                    system,
                    mode,
                    outcome: outcome.ok(),
                }
            })
            .collect()
    }

    /// One transmit/channel/receive cycle at `snr_db` for every configured
    /// system and mode, all sharing the channel and noise stream.
    pub fn run_trial(&self, snr_db: f64, snr_index: usize, trial: usize) -> Result<Vec<ModeMetrics>> {
        let sigma2 = snr_to_sigma2(snr_db, 1.0)?;
        self.run_trial_with(sigma2, TrialSeeds::new(self.scenario.seed, snr_index, trial))
    }

    /// As [`Experiment::run_trial`] with an explicit noise variance (0 allowed).
    pub fn run_trial_sigma2(&self, sigma2: f64, snr_index: usize, trial: usize) -> Result<Vec<ModeMetrics>> {
        self.run_trial_with(sigma2, TrialSeeds::new(self.scenario.seed, snr_index, trial))
    }

    fn run_trial_with(&self, sigma2: f64, seeds: TrialSeeds) -> Result<Vec<ModeMetrics>> {
        let cfg = self.cfg();
        let (m, nt) = (cfg.num_subcarriers, cfg.num_tx);
        let qam = self.draw_symbols(seeds.data);
        let channel = draw_channel(&self.profile, nt, cfg.num_rx, m, seeds.channel)?;
        let h_true = channel.factor_matrix();
        let noise = NoiseSpec {
            sigma2,
            seed: seeds.noise,
        };
        let d_true = qam_to_oqam(&qam);
        let mut out = Vec::new();

        for &system in &self.scenario.systems {
            match system {
                System::Fbmc => {
                    let modes = self.scenario.fbmc_modes()?;
                    if modes.is_empty() {
                        continue;
                    }
                    let signals = (0..nt)
                        .map(|t| self.bank.synthesize(&d_true.rows(t * m, m).into_owned()))
                        .collect::<Result<Vec<_>>>()?;
                    let y = self.receive(&signals, &channel, &noise, system)?;
                    let setup = ReceiverSetup {
                        num_tx: nt,
                        constellation: self.constellation.clone(),
                        structure: SymbolStructure::Oqam(self.model.clone()),
                        preamble: Preamble::oqam(d_true.columns(0, cfg.preamble_len).into_owned(), &self.model)?,
                    };
                    out.extend(self.run_modes(system, &modes, &y, &setup, &h_true, &d_true, seeds.init));
                }
                System::CpOfdm => {
                    let modes = self.scenario.cp_ofdm_modes()?;
                    if modes.is_empty() {
                        continue;
                    }
                    let signals = (0..nt)
                        .map(|t| ofdm_modulate(&qam.rows(t * m, m).into_owned(), self.scenario.cp_len))
                        .collect::<Result<Vec<_>>>()?;
                    let y = self.receive(&signals, &channel, &noise, system)?;
                    let setup = ReceiverSetup {
                        num_tx: nt,
                        constellation: self.constellation.clone(),
                        structure: SymbolStructure::Qam,
                        preamble: Preamble::qam(self.preamble_qam.clone())?,
                    };
                    out.extend(self.run_modes(system, &modes, &y, &setup, &h_true, &d_true, seeds.init));
                }
            }
        }
        Ok(out)
    }

    /// Im{C} of noiseless identity-channel frames, one vector per frame.
    pub fn interference_samples(&self) -> Result<Vec<Vec<f64>>> {
        let frames = self.scenario.histogram_frames;
        if frames == 0 {
            return Err(Error::InvalidParameter("histogram needs at least one frame".into()));
        }
        let cfg = self.cfg();
        let m = cfg.num_subcarriers;
        let mut rng = ChaCha8Rng::seed_from_u64(mix(self.scenario.seed ^ 0x4849_5354));
        (0..frames)
            .map(|_| {
                let d = DMatrix::from_fn(m, cfg.num_fbmc_symbols, |_, _| {
                    self.constellation.random_level(&mut rng)
                });
                let c = self.bank.analyze(&self.bank.synthesize(&d)?, cfg.num_fbmc_symbols)?;
                Ok(c.iter().map(|z| z.im).collect())
            })
            .collect()
    }

    /// Histogram of [`Experiment::interference_samples`].
    pub fn histogram(&self) -> Result<Histogram> {
        let values: Vec<f64> = self.interference_samples()?.concat();
        Histogram::from_values(&values, self.scenario.histogram_bins)
    }

    /// Im{C} of first-order modelled frames (no filter bank), binned.
    pub fn model_histogram(&self, frames: usize) -> Result<Histogram> {
        let cfg = self.cfg();
        let mut rng = ChaCha8Rng::seed_from_u64(mix(self.scenario.seed ^ 0x4d4f_4445));
        let mut values = Vec::new();
        for _ in 0..frames {
            let d = DMatrix::from_fn(cfg.num_subcarriers, cfg.num_fbmc_symbols, |_, _| {
                self.constellation.random_level(&mut rng)
            });
            values.extend(self.model.virtualize(&d)?.iter().map(|z| z.im));
        }
        Histogram::from_values(&values, self.scenario.histogram_bins)
    }
}

// ---------------------------------------------------------------------------
// Aggregation and output
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub system: String,
    pub mode: String,
    pub snr_db: f64,
    pub nmse: f64,
    pub ber: f64,
    pub avg_iterations: f64,
    pub iter_std: f64,
    pub trials: usize,
    pub flagged: usize,
    pub seed: u64,
    #[serde(skip)]
    pub unreliable: bool,
}

fn aggregate(system: System, mode: ReceiverMode, snr_db: f64, seed: u64, samples: &[Option<Metrics>]) -> ResultRow {
    let ok: Vec<&Metrics> = samples.iter().flatten().collect();
    let flagged = samples.len() - ok.len();
    let count = ok.len();
    let mean = |f: &dyn Fn(&Metrics) -> f64| {
        if count == 0 {
            f64::NAN
        } else {
            ok.iter().map(|m| f(m)).sum::<f64>() / count as f64
        }
    };
    let avg_iterations = mean(&|m| m.iterations as f64);
    let iter_std = if count == 0 {
        f64::NAN
    } else {
        (ok.iter()
            .map(|m| (m.iterations as f64 - avg_iterations).powi(2))
            .sum::<f64>()
            / count as f64)
            .sqrt()
    };
    ResultRow {
        system: system.as_str().into(),
        mode: mode.as_str().into(),
        snr_db,
        nmse: mean(&|m| m.nmse),
        ber: mean(&|m| m.ber),
        avg_iterations,
        iter_std,
        trials: count,
        flagged,
        seed,
        unreliable: flagged as f64 > UNRELIABLE_FLAG_FRACTION * samples.len() as f64,
    }
}

/// Full SNR x trial grid. Trials run in parallel; the reduction follows trial
/// order, so the rows do not depend on the thread count.
pub fn run_scenario(scenario: &Scenario) -> Result<Vec<ResultRow>> {
    let exp = Experiment::new(scenario.clone())?;
    let mut rows = Vec::new();
    for (si, &snr) in scenario.snr_grid_db.iter().enumerate() {
        let trials: Vec<Vec<ModeMetrics>> = (0..scenario.trials_per_point)
            .into_par_iter()
            .map(|t| exp.run_trial(snr, si, t))
            .collect::<Result<Vec<_>>>()?;
        let Some(first) = trials.first() else { continue };
        for (k, slot) in first.iter().enumerate() {
            let samples: Vec<Option<Metrics>> = trials.iter().map(|t| t[k].outcome).collect();
            let row = aggregate(slot.system, slot.mode, snr, scenario.seed, &samples);
            if row.unreliable {
                log::warn!(
                    "{} {} at {snr} dB: {} of {} trials flagged; row unreliable",
                    row.system,
                    row.mode,
                    row.flagged,
                    samples.len()
                );
            }
            rows.push(row);
        }
        log::info!("{}: {snr} dB done", scenario.name);
    }
    Ok(rows)
}

pub fn write_csv<W: std::io::Write>(rows: &[ResultRow], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(CSV_HEADER)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv_file(rows: &[ResultRow], path: impl AsRef<Path>) -> Result<()> {
    write_csv(rows, std::fs::File::create(path)?)
}

pub fn emit_histogram(scenario: &Scenario) -> Result<Histogram> {
    Experiment::new(scenario.clone())?.histogram()
}

pub fn write_histogram_csv<W: std::io::Write>(hist: &Histogram, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["bin_center", "density"])?;
    for (c, d) in hist.bin_centers.iter().zip(&hist.density) {
        w.write_record([c.to_string(), d.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> Scenario {
        let mut s = Scenario::builtin("peda").unwrap();
        s.modulation.num_subcarriers = 16;
        s.modulation.num_fbmc_symbols = 20;
        s.snr_grid_db = vec![10.0, 30.0];
        s.trials_per_point = 3;
        s.histogram_frames = 5;
        s
    }

    #[test]
    fn fixtures_parse_and_unknown_keys_fail() {
        for name in ["peda", "vehb"] {
            let s = Scenario::builtin(name).unwrap();
            assert_eq!(s.modulation.num_subcarriers, 32);
            assert_eq!(s.modulation.num_fbmc_symbols, 106);
            assert_eq!(s.fbmc_modes().unwrap().len() + s.cp_ofdm_modes().unwrap().len(), 5);
        }
        let text = include_str!("../fixtures/peda.scenario");
        assert!(Scenario::from_toml_str(&format!("bogus = 1\n{text}")).is_err());
        let bad = text.replace("trials_per_point = 500", "trials_per_point = 0");
        assert!(Scenario::from_toml_str(&bad).is_err());
        let bad = text.replace("\"informed\",", "\"psychic\",");
        assert!(Scenario::from_toml_str(&bad).is_err());
    }

    #[test]
    fn noiseless_flat_trial() {
        let mut s = small();
        s.profile = "flat".into();
        let exp = Experiment::new(s).unwrap();
        let out = exp.run_trial_sigma2(0.0, 0, 0).unwrap();
        for m in &out {
            let metrics = m.outcome.expect("no flagged trial");
            assert_eq!(metrics.ber, 0.0, "{:?} {:?}", m.system, m.mode);
            match (m.system, m.mode) {
                (System::CpOfdm, _) | (_, ReceiverMode::PerfectCsi) => assert!(metrics.nmse < 1e-18),
                // Interference beyond the first-order neighbours is not modelled.
                (System::Fbmc, ReceiverMode::Informed) => assert!(metrics.nmse < 1e-2),
                _ => {}
            }
        }
    }

    #[test]
    fn runs_are_deterministic_and_degenerate_trials_work() {
        let mut s = small();
        s.trials_per_point = 1;
        let a = run_scenario(&s).unwrap();
        let b = run_scenario(&s).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 2 * 5);
        assert!(a.iter().all(|r| r.trials == 1 && r.iter_std == 0.0));
        let mut buf = Vec::new();
        write_csv(&a, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("system,mode,snr_db,nmse,ber,avg_iterations,iter_std,trials,flagged,seed\n"));
        assert_eq!(text.lines().count(), 11);
    }

    #[test]
    fn mode_filter() {
        let mut s = small();
        s.restrict_modes(&[ReceiverMode::Informed]).unwrap();
        assert_eq!(s.receiver_modes, vec!["informed"]);
        assert!(s.ofdm_modes.is_empty());
        assert!(s.restrict_modes(&[ReceiverMode::TrainingOnly]).is_err());
    }

    #[test]
    fn aggregation_counts_flags() {
        let ok = Some(Metrics {
            nmse: 0.5,
            ber: 0.1,
            iterations: 4,
        });
        let row = aggregate(System::Fbmc, ReceiverMode::Informed, 5.0, 1, &[ok, None, ok]);
        assert_eq!((row.trials, row.flagged), (2, 1));
        assert!(row.unreliable);
        assert_eq!(row.nmse, 0.5);
    }

    #[test]
    fn histogram_needs_frames() {
        let mut s = small();
        let h = emit_histogram(&s).unwrap();
        assert!(h.count > 0);
        let mut buf = Vec::new();
        write_histogram_csv(&h, &mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("bin_center,density\n"));
        s.histogram_frames = 0;
        assert!(emit_histogram(&s).is_err());
    }
}
