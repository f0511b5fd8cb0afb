//! Time-varying multipath channel, AWGN and Bernoulli-Gaussian impulse noise.
//!
//! Each resolvable path carries an independent Rayleigh-envelope complex
//! process synthesized as a sum of equal-power sinusoids with random arrival
//! angles and phases, which realizes the classical Doppler spectrum: the
//! ensemble autocorrelation of every tap is J0(2 pi f_d tau). Tap delays are
//! quantized to the working sample rate; taps landing on the same sample are
//! power-summed into one process.

use std::io::Write;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::{OfdmConfig, TimeSignal};
use crate::harness::format_float;
use crate::seed;

/// Sinusoids per fading tap. Enough for near-Gaussian statistics while
/// keeping generation cheap inside Monte Carlo loops.
const SINUSOIDS_PER_TAP: usize = 32;

/// Oscillator recurrences are re-synchronized from exact trigonometry this
/// often to stop rounding drift over long realizations.
const OSC_RESYNC: usize = 8192;

/// One multipath tap: excess delay and relative power.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PdpTap {
    pub delay_ns: f64,
    pub power_db: f64,
}

/// Power delay profile of a tapped-delay-line channel.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerDelayProfile {
    taps: Vec<PdpTap>,
}

impl PowerDelayProfile {
    /// Delays must start at zero and strictly increase.
    pub fn new(taps: Vec<PdpTap>) -> Result<Self> {
        if taps.is_empty() {
            return Err(Error::EmptyProfile);
        }
        if taps[0].delay_ns != 0.0 {
            return Err(Error::InvalidConfig("first tap delay must be 0 ns".into()));
        }
        if taps.windows(2).any(|w| w[1].delay_ns <= w[0].delay_ns) {
            return Err(Error::InvalidConfig(
                "tap delays must be strictly increasing".into(),
            ));
        }
        Ok(PowerDelayProfile { taps })
    }

    /// 3GPP Extended Vehicular A model: 9 taps, 0..2510 ns.
    pub fn eva() -> Self {
        let taps = [
            (0.0, 0.0),
            (30.0, -1.5),
            (150.0, -1.4),
            (310.0, -3.6),
            (370.0, -0.6),
            (710.0, -9.1),
            (1090.0, -7.0),
            (1730.0, -12.0),
            (2510.0, -16.9),
        ];
        PowerDelayProfile {
            taps: taps
                .iter()
                .map(|&(delay_ns, power_db)| PdpTap { delay_ns, power_db })
                .collect(),
        }
    }

    /// Single path at zero delay, unit power.
    pub fn flat() -> Self {
        PowerDelayProfile {
            taps: vec![PdpTap {
                delay_ns: 0.0,
                power_db: 0.0,
            }],
        }
    }

    pub fn taps(&self) -> &[PdpTap] {
        &self.taps
    }

    pub fn num_paths(&self) -> usize {
        self.taps.len()
    }

    /// Linear tap powers normalized to sum to one.
    pub fn normalized_powers(&self) -> Vec<f64> {
        let linear: Vec<f64> = self
            .taps
            .iter()
            .map(|t| 10f64.powf(t.power_db / 10.0))
            .collect();
        let total: f64 = linear.iter().sum();
        linear.into_iter().map(|p| p / total).collect()
    }

    /// Tap delays rounded to the nearest sample at `sampling_rate_hz`.
    pub fn quantized_delays(&self, sampling_rate_hz: f64) -> Vec<usize> {
        self.taps
            .iter()
            .map(|t| (t.delay_ns * 1e-9 * sampling_rate_hz).round() as usize)
            .collect()
    }

    pub fn max_delay_samples(&self, sampling_rate_hz: f64) -> usize {
        self.quantized_delays(sampling_rate_hz)
            .into_iter()
            .max()
            .unwrap_or(0)
    }

    /// Quantize delays and merge taps that land on the same sample, summing
    /// their normalized powers. Returns (delay_samples, power) pairs.
    pub fn merged_taps(&self, sampling_rate_hz: f64) -> Vec<(usize, f64)> {
        let delays = self.quantized_delays(sampling_rate_hz);
        let powers = self.normalized_powers();
        let mut merged: Vec<(usize, f64)> = Vec::new();
        for (d, p) in delays.into_iter().zip(powers) {
            match merged.last_mut() {
                Some((last_d, last_p)) if *last_d == d => *last_p += p,
                _ => merged.push((d, p)),
            }
        }
        merged
    }
}

/// Per-sample complex gains of every (merged) tap over a stretch of time.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    /// `taps x samples`, row-major per tap.
    tap_gains: Vec<Vec<Complex64>>,
    tap_delays_samples: Vec<usize>,
    doppler_hz: f64,
    sampling_rate_hz: f64,
}

impl ChannelRealization {
    pub fn num_taps(&self) -> usize {
        self.tap_gains.len()
    }

    pub fn num_samples(&self) -> usize {
        self.tap_gains.first().map_or(0, Vec::len)
    }

    pub fn gain(&self, tap: usize, sample: usize) -> Complex64 {
        self.tap_gains[tap][sample]
    }

    pub fn tap_gains(&self, tap: usize) -> &[Complex64] {
        &self.tap_gains[tap]
    }

    pub fn tap_delays_samples(&self) -> &[usize] {
        &self.tap_delays_samples
    }

    pub fn doppler_hz(&self) -> f64 {
        self.doppler_hz
    }

    pub fn sampling_rate_hz(&self) -> f64 {
        self.sampling_rate_hz
    }

    pub fn max_delay_samples(&self) -> usize {
        self.tap_delays_samples.iter().copied().max().unwrap_or(0)
    }
}

/// Synthesize one tap as a sum of equal-power sinusoids.
///
/// Writes `amp * sum_n exp(j(2 pi f_d cos(a_n) t / fs + phi_n))` for
/// `t = 0..len` into a fresh buffer. With zero Doppler all oscillators stand
/// still and the tap is constant over time.
fn tap_process(
    power: f64,
    doppler_hz: f64,
    len: usize,
    sampling_rate_hz: f64,
    rng: &mut ChaCha8Rng,
) -> Vec<Complex64> {
    let two_pi = std::f64::consts::TAU;
    let amp = (power / SINUSOIDS_PER_TAP as f64).sqrt();
    let mut freq = [0.0f64; SINUSOIDS_PER_TAP];
    let mut phase = [0.0f64; SINUSOIDS_PER_TAP];
    for n in 0..SINUSOIDS_PER_TAP {
        let angle = two_pi * rng.random::<f64>();
        freq[n] = doppler_hz * angle.cos();
        phase[n] = two_pi * rng.random::<f64>();
    }

    // Oscillator state split into re/im arrays so the inner loop vectorizes.
    let mut osc_re = [0.0f64; SINUSOIDS_PER_TAP];
    let mut osc_im = [0.0f64; SINUSOIDS_PER_TAP];
    let mut rot_re = [0.0f64; SINUSOIDS_PER_TAP];
    let mut rot_im = [0.0f64; SINUSOIDS_PER_TAP];
    let resync = |t: usize, osc_re: &mut [f64], osc_im: &mut [f64]| {
        for n in 0..SINUSOIDS_PER_TAP {
            let (s, c) = (two_pi * freq[n] * t as f64 / sampling_rate_hz + phase[n]).sin_cos();
            osc_re[n] = c;
            osc_im[n] = s;
        }
    };
    for n in 0..SINUSOIDS_PER_TAP {
        let (s, c) = (two_pi * freq[n] / sampling_rate_hz).sin_cos();
        rot_re[n] = c;
        rot_im[n] = s;
    }
    resync(0, &mut osc_re, &mut osc_im);

    let mut gains = Vec::with_capacity(len);
    for t in 0..len {
        if t > 0 && t % OSC_RESYNC == 0 {
            resync(t, &mut osc_re, &mut osc_im);
        }
        let mut acc_re = 0.0;
        let mut acc_im = 0.0;
        for n in 0..SINUSOIDS_PER_TAP {
            acc_re += osc_re[n];
            acc_im += osc_im[n];
            let re = osc_re[n] * rot_re[n] - osc_im[n] * rot_im[n];
            let im = osc_re[n] * rot_im[n] + osc_im[n] * rot_re[n];
            osc_re[n] = re;
            osc_im[n] = im;
        }
        gains.push(Complex64::new(amp * acc_re, amp * acc_im));
    }
    gains
}

/// Generate a time-varying channel realization.
///
/// Each merged tap is an independent process scaled to its profile power.
/// Identical seeds produce bit-identical realizations.
pub fn generate_channel(
    profile: &PowerDelayProfile,
    doppler_hz: f64,
    num_samples: usize,
    sampling_rate_hz: f64,
    master_seed: u64,
) -> Result<ChannelRealization> {
    if profile.taps().is_empty() {
        return Err(Error::EmptyProfile);
    }
    if num_samples == 0 {
        return Err(Error::InvalidConfig("num_samples must be >= 1".into()));
    }
    if doppler_hz < 0.0 {
        return Err(Error::InvalidConfig("doppler_hz must be >= 0".into()));
    }
    let merged = profile.merged_taps(sampling_rate_hz);
    let mut tap_gains = Vec::with_capacity(merged.len());
    let mut tap_delays = Vec::with_capacity(merged.len());
    for (l, &(delay, power)) in merged.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed::mix(&[master_seed, l as u64]));
        tap_gains.push(tap_process(
            power,
            doppler_hz,
            num_samples,
            sampling_rate_hz,
            &mut rng,
        ));
        tap_delays.push(delay);
    }
    Ok(ChannelRealization {
        tap_gains,
        tap_delays_samples: tap_delays,
        doppler_hz,
        sampling_rate_hz,
    })
}

/// Pass a signal through the channel: y(t) = sum_l h_l(t) x(t - d_l), with
/// zero pre-padding before the start of the signal. Noise is not added here.
pub fn apply_channel(tx: &TimeSignal, realization: &ChannelRealization) -> Result<TimeSignal> {
    let n = tx.len();
    if realization.num_samples() < n {
        return Err(Error::LengthMismatch {
            left: realization.num_samples(),
            right: n,
        });
    }
    let mut out = vec![Complex64::default(); n];
    for (gains, &d) in realization
        .tap_gains
        .iter()
        .zip(&realization.tap_delays_samples)
    {
        for t in d..n {
            out[t] += gains[t] * tx.samples[t - d];
        }
    }
    Ok(TimeSignal {
        samples: out,
        sampling_rate_hz: tx.sampling_rate_hz,
    })
}

/// Standard-normal pair via Box-Muller.
#[inline]
fn gaussian_pair(rng: &mut ChaCha8Rng) -> (f64, f64) {
    let u1: f64 = 1.0 - rng.random::<f64>(); // (0, 1]
    let u2: f64 = rng.random();
    let r = (-2.0 * u1.ln()).sqrt();
    let (s, c) = (std::f64::consts::TAU * u2).sin_cos();
    (r * c, r * s)
}

/// Add circular complex white Gaussian noise calibrated against the measured
/// mean power of the input: sigma_w^2 = P / 10^(snr_db/10).
///
/// An infinite `snr_db` disables the noise entirely.
pub fn add_awgn(signal: &TimeSignal, snr_db: f64, noise_seed: u64) -> Result<TimeSignal> {
    if snr_db.is_infinite() && snr_db > 0.0 {
        return Ok(signal.clone());
    }
    let p_signal = signal.mean_power();
    if p_signal <= 0.0 {
        return Err(Error::ZeroPowerSignal);
    }
    let sigma2 = p_signal * 10f64.powf(-snr_db / 10.0);
    let scale = (sigma2 / 2.0).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(noise_seed);
    let samples = signal
        .samples
        .iter()
        .map(|&x| {
            let (re, im) = gaussian_pair(&mut rng);
            x + Complex64::new(scale * re, scale * im)
        })
        .collect();
    Ok(TimeSignal {
        samples,
        sampling_rate_hz: signal.sampling_rate_hz,
    })
}

/// Add Bernoulli-Gaussian impulse noise: i(n) = v(n) * lambda(n), where
/// lambda(n) is Bernoulli(p) and v(n) is circular complex Gaussian with power
/// sigma_bg^2 = P / 10^(sir_db/10) against the measured input power.
///
/// The gate and the Gaussian stream are drawn independently of `p` and
/// `sir_db` (common random numbers): with a fixed seed, raising `p` only adds
/// impulse positions and changing `sir_db` only rescales the same impulses,
/// so sweeps over the impulse parameters stay paired sample-for-sample.
pub fn add_impulse_noise(
    signal: &TimeSignal,
    sir_db: f64,
    p: f64,
    noise_seed: u64,
) -> Result<TimeSignal> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::ProbabilityRange(p));
    }
    let p_signal = signal.mean_power();
    if p_signal <= 0.0 {
        return Err(Error::ZeroPowerSignal);
    }
    let sigma2 = p_signal * 10f64.powf(-sir_db / 10.0);
    let scale = (sigma2 / 2.0).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(noise_seed);
    let samples = signal
        .samples
        .iter()
        .map(|&x| {
            let gate: f64 = rng.random();
            let (re, im) = gaussian_pair(&mut rng);
            if gate < p {
                x + Complex64::new(scale * re, scale * im)
            } else {
                x
            }
        })
        .collect();
    Ok(TimeSignal {
        samples,
        sampling_rate_hz: signal.sampling_rate_hz,
    })
}

/// Noise applied to one frame. Powers are always derived from the measured
/// clean-signal power, never hard-coded.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub snr_db: f64,
    /// Impulse noise disabled when `None`.
    pub sir_db: Option<f64>,
    pub impulse_probability: f64,
    pub seed: u64,
}

impl NoiseSpec {
    /// Corrupt a clean channel output with AWGN and (optionally) impulse
    /// noise. Both powers are calibrated against the *clean* signal, matching
    /// the SNR/SIR definitions, so the two noise terms are generated
    /// independently and summed.
    pub fn apply(&self, clean: &TimeSignal) -> Result<TimeSignal> {
        let awgn_seed = seed::mix(&[self.seed, seed::TAG_AWGN]);
        let impulse_seed = seed::mix(&[self.seed, seed::TAG_IMPULSE]);
        let mut out = add_awgn(clean, self.snr_db, awgn_seed)?;
        if let Some(sir_db) = self.sir_db {
            let with_impulse =
                add_impulse_noise(clean, sir_db, self.impulse_probability, impulse_seed)?;
            for (o, (w, c)) in out
                .samples
                .iter_mut()
                .zip(with_impulse.samples.iter().zip(&clean.samples))
            {
                *o += w - c;
            }
        }
        Ok(out)
    }
}

/// Exact channel frequency response over the occupied subcarriers for one
/// OFDM symbol, evaluated at the mid-sample of the symbol's useful part:
/// H(s,k) = sum_l h_l(t_s) exp(-j 2 pi k d_l / N).
///
/// Serves as the oracle for estimator error and for response surface dumps.
pub fn true_frequency_response(
    realization: &ChannelRealization,
    config: &OfdmConfig,
    symbol_index: usize,
) -> Result<Vec<Complex64>> {
    if symbol_index >= config.symbols_per_frame {
        return Err(Error::SymbolIndex {
            index: symbol_index,
            count: config.symbols_per_frame,
        });
    }
    let t_s = symbol_index * config.symbol_samples() + config.cp_samples + config.fft_size / 2;
    if t_s >= realization.num_samples() {
        return Err(Error::LengthMismatch {
            left: realization.num_samples(),
            right: t_s + 1,
        });
    }
    let n = config.fft_size as f64;
    let gains: Vec<Complex64> = (0..realization.num_taps())
        .map(|l| realization.gain(l, t_s))
        .collect();
    Ok((0..config.occupied_subcarriers)
        .map(|q| {
            let k = config.bin_offset(q) as f64;
            let mut h = Complex64::default();
            for (g, &d) in gains.iter().zip(realization.tap_delays_samples()) {
                let angle = -std::f64::consts::TAU * k * d as f64 / n;
                h += g * Complex64::from_polar(1.0, angle);
            }
            h
        })
        .collect())
}

/// Dump |H(s,k)| and its phase over a whole frame as CSV with columns
/// `symbol_index,subcarrier,magnitude,phase`.
pub fn write_channel_dump_csv<W: Write>(
    realization: &ChannelRealization,
    config: &OfdmConfig,
    out: &mut W,
) -> Result<()> {
    writeln!(out, "symbol_index,subcarrier,magnitude,phase")?;
    for s in 0..config.symbols_per_frame {
        let response = true_frequency_response(realization, config, s)?;
        for (k, h) in response.iter().enumerate() {
            writeln!(
                out,
                "{s},{k},{},{}",
                format_float(h.norm()),
                format_float(h.arg())
            )?;
        }
    }
    Ok(())
}
