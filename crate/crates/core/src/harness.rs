//! Monte Carlo experiment driver: per-frame simulation, BER and channel-MSE
//! metrics, sweep execution and CSV emission.
//!
//! Seeding is paired by construction: the per-frame streams depend on the
//! master seed, the SNR and the frame index but never on the estimator, so
//! every method sees bit-identical channels, data and noise at a sweep point.
//! See [`crate::seed`] for the exact derivation.

use std::io::Write;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::channel::{apply_channel, generate_channel, true_frequency_response, NoiseSpec};
use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::estimators::{estimate_frame, ChannelEstimate, Method};
use crate::grid::{
    demodulate_frame, equalize_and_demap, modulate_bits, modulate_frame, ResourceGrid,
};
use crate::seed;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Reported in place of -infinity when an estimate matches the oracle exactly.
pub const MSE_FLOOR_DB: f64 = -300.0;

/// Exact CSV header, in field order.
pub const CSV_HEADER: &str =
    "method,snr_db,sir_db,p,speed_kmh,frames,total_bits,bit_errors,ber,channel_mse_db,seed";

/// One sweep point: the noise condition shared by all estimators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub snr_db: f64,
    /// Impulse noise disabled when `None`.
    pub sir_db: Option<f64>,
    pub p: f64,
}

impl SweepPoint {
    pub fn no_impulse(snr_db: f64) -> Self {
        SweepPoint {
            snr_db,
            sir_db: None,
            p: 0.0,
        }
    }
}

/// One Monte Carlo measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct BerRecord {
    pub method: Method,
    pub snr_db: f64,
    pub sir_db: Option<f64>,
    pub p: f64,
    pub speed_kmh: f64,
    pub frames: usize,
    pub total_bits: u64,
    pub bit_errors: u64,
    pub ber: f64,
    pub channel_mse_db: f64,
    /// Point-level derived seed (informational; reproducibility needs the
    /// scenario's master seed).
    pub seed: u64,
    /// Set when an estimator failed on at least one frame; the aggregate
    /// fields then cover the surviving frames and `ber`/`channel_mse_db`
    /// are NaN in the CSV.
    pub failed: bool,
}

/// Floating-point fields are printed with 9 significant digits.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x.is_infinite() {
        if x > 0.0 {
            "inf".to_string()
        } else {
            "-inf".to_string()
        }
    } else {
        format!("{x:.8e}")
    }
}

impl BerRecord {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            self.method,
            format_float(self.snr_db),
            self.sir_db.map(format_float).unwrap_or_default(),
            format_float(self.p),
            format_float(self.speed_kmh),
            self.frames,
            self.total_bits,
            self.bit_errors,
            format_float(self.ber),
            format_float(self.channel_mse_db),
            self.seed
        )
    }
}

/// Bit error rate: Hamming distance over length.
pub fn ber(tx_bits: &[u8], rx_bits: &[u8]) -> Result<f64> {
    if tx_bits.len() != rx_bits.len() {
        return Err(Error::LengthMismatch {
            left: tx_bits.len(),
            right: rx_bits.len(),
        });
    }
    if tx_bits.is_empty() {
        return Err(Error::InvalidConfig("empty bit sequences".into()));
    }
    let errors = tx_bits.iter().zip(rx_bits).filter(|(a, b)| a != b).count();
    Ok(errors as f64 / tx_bits.len() as f64)
}

/// Relative channel estimation error in dB:
/// 10 log10( sum |H_hat - H|^2 / sum |H|^2 ), floored at [`MSE_FLOOR_DB`].
pub fn channel_mse(estimate: &ChannelEstimate, oracle: &[Vec<Complex64>]) -> Result<f64> {
    if oracle.len() != estimate.n_symbols() {
        return Err(Error::LengthMismatch {
            left: oracle.len(),
            right: estimate.n_symbols(),
        });
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for (s, row) in oracle.iter().enumerate() {
        if row.len() != estimate.n_subcarriers() {
            return Err(Error::LengthMismatch {
                left: row.len(),
                right: estimate.n_subcarriers(),
            });
        }
        for (k, &h) in row.iter().enumerate() {
            num += (estimate.row(s)[k] - h).norm_sqr();
            den += h.norm_sqr();
        }
    }
    if den <= 0.0 {
        return Err(Error::ZeroPowerSignal);
    }
    Ok(mse_db(num, den))
}

fn mse_db(num: f64, den: f64) -> f64 {
    if num == 0.0 {
        MSE_FLOOR_DB
    } else {
        (10.0 * (num / den).log10()).max(MSE_FLOOR_DB)
    }
}

/// Point-level seed recorded in [`BerRecord`].
pub fn point_seed(master_seed: u64, point: &SweepPoint) -> u64 {
    seed::mix(&[
        master_seed,
        point.snr_db.to_bits(),
        point.sir_db.map_or(u64::MAX, f64::to_bits),
        point.p.to_bits(),
    ])
}

#[derive(Debug, Clone, Copy, Default)]
struct FrameStats {
    total_bits: u64,
    bit_errors: u64,
    mse_num: f64,
    mse_den: f64,
}

/// Simulate one frame end to end for one estimator.
fn simulate_frame(
    scenario: &ScenarioConfig,
    point: &SweepPoint,
    frame_index: usize,
    method: Method,
) -> Result<FrameStats> {
    let config = &scenario.ofdm;
    let base = seed::mix(&[
        scenario.master_seed,
        point.snr_db.to_bits(),
        frame_index as u64,
    ]);

    // Transmit side.
    let mut rng = ChaCha8Rng::seed_from_u64(seed::mix(&[base, seed::TAG_BITS]));
    let tx_bits: Vec<u8> = (0..config.data_bits_per_frame())
        .map(|_| rng.random_range(0..2u8))
        .collect();
    let data = modulate_bits(&tx_bits, config.modulation_order)?;
    let tx_grid = ResourceGrid::build(config, &data)?;
    let tx = modulate_frame(&tx_grid, config)?;

    // Channel and noise.
    let realization = generate_channel(
        &scenario.profile,
        scenario.doppler_hz(),
        tx.len(),
        config.sampling_rate_hz,
        seed::mix(&[base, seed::TAG_CHANNEL]),
    )?;
    let clean = apply_channel(&tx, &realization)?;
    let noise = NoiseSpec {
        snr_db: point.snr_db,
        sir_db: point.sir_db,
        impulse_probability: point.p,
        seed: base,
    };
    let rx_signal = noise.apply(&clean)?;

    // Receive side.
    let rx_grid = demodulate_frame(&rx_signal, config)?;
    let estimate = estimate_frame(method, &rx_grid, config, &scenario.svr, &scenario.df)?;

    // Metrics: BER over data cells only, channel MSE against the oracle.
    let data_positions = config.data_positions();
    let bits_per_cell = config.bits_per_symbol();
    let bits_per_symbol_row = data_positions.len() * bits_per_cell;
    let mut stats = FrameStats::default();
    for s in 0..config.symbols_per_frame {
        let row = rx_grid.row(s);
        let h_row = estimate.row(s);
        let y: Vec<Complex64> = data_positions.iter().map(|&k| row[k]).collect();
        let h: Vec<Complex64> = data_positions.iter().map(|&k| h_row[k]).collect();
        let rx_bits = equalize_and_demap(&y, &h, config)?;
        let tx_slice = &tx_bits[s * bits_per_symbol_row..(s + 1) * bits_per_symbol_row];
        stats.bit_errors += tx_slice
            .iter()
            .zip(&rx_bits)
            .filter(|(a, b)| a != b)
            .count() as u64;
        stats.total_bits += rx_bits.len() as u64;

        let oracle = true_frequency_response(&realization, config, s)?;
        for (k, &hv) in h_row.iter().enumerate() {
            stats.mse_num += (hv - oracle[k]).norm_sqr();
            stats.mse_den += oracle[k].norm_sqr();
        }
    }
    Ok(stats)
}

/// An estimator failure is recorded, not fatal; anything else aborts the run.
fn is_estimator_failure(e: &Error) -> bool {
    matches!(
        e,
        Error::SymbolEstimate { .. } | Error::SolverDidNotConverge { .. }
    )
}

fn aggregate(
    scenario: &ScenarioConfig,
    point: &SweepPoint,
    method: Method,
    outcomes: Vec<Result<FrameStats>>,
) -> Result<BerRecord> {
    let mut total = FrameStats::default();
    let mut failed = false;
    for outcome in outcomes {
        match outcome {
            Ok(stats) => {
                total.total_bits += stats.total_bits;
                total.bit_errors += stats.bit_errors;
                total.mse_num += stats.mse_num;
                total.mse_den += stats.mse_den;
            }
            Err(e) if is_estimator_failure(&e) => failed = true,
            Err(e) => return Err(e),
        }
    }
    let (ber, mse) = if failed || total.total_bits == 0 {
        (f64::NAN, f64::NAN)
    } else {
        (
            total.bit_errors as f64 / total.total_bits as f64,
            mse_db(total.mse_num, total.mse_den),
        )
    };
    Ok(BerRecord {
        method,
        snr_db: point.snr_db,
        sir_db: point.sir_db,
        p: point.p,
        speed_kmh: scenario.speed_kmh,
        frames: scenario.frames_per_point,
        total_bits: total.total_bits,
        bit_errors: total.bit_errors,
        ber,
        channel_mse_db: mse,
        seed: point_seed(scenario.master_seed, point),
        failed,
    })
}

/// Run one sweep point for one estimator, frames in parallel when the
/// `parallel` feature is enabled. Output is identical to [`run_point_seq`].
pub fn run_point(
    scenario: &ScenarioConfig,
    point: &SweepPoint,
    method: Method,
) -> Result<BerRecord> {
    scenario.validate()?;
    #[cfg(feature = "parallel")]
    let outcomes: Vec<Result<FrameStats>> = (0..scenario.frames_per_point)
        .into_par_iter()
        .map(|f| simulate_frame(scenario, point, f, method))
        .collect();
    #[cfg(not(feature = "parallel"))]
    let outcomes: Vec<Result<FrameStats>> = (0..scenario.frames_per_point)
        .map(|f| simulate_frame(scenario, point, f, method))
        .collect();
    aggregate(scenario, point, method, outcomes)
}

/// Frame-sequential variant of [`run_point`], always available (also the
/// baseline for the throughput benchmarks). With the `parallel` feature on,
/// per-symbol SVR solves inside each frame may still use the rayon pool;
/// run inside a one-thread pool for a fully serial execution.
pub fn run_point_seq(
    scenario: &ScenarioConfig,
    point: &SweepPoint,
    method: Method,
) -> Result<BerRecord> {
    scenario.validate()?;
    let outcomes: Vec<Result<FrameStats>> = (0..scenario.frames_per_point)
        .map(|f| simulate_frame(scenario, point, f, method))
        .collect();
    aggregate(scenario, point, method, outcomes)
}

/// Sweep points in deterministic emission order: SNR outermost, then SIR and
/// impulse probability (when enabled).
pub fn sweep_points(scenario: &ScenarioConfig) -> Vec<SweepPoint> {
    let mut points = Vec::new();
    for &snr_db in &scenario.snr_db_list {
        if scenario.sir_db_list.is_empty() {
            points.push(SweepPoint::no_impulse(snr_db));
        } else {
            for &sir_db in &scenario.sir_db_list {
                for &p in &scenario.p_list {
                    points.push(SweepPoint {
                        snr_db,
                        sir_db: Some(sir_db),
                        p,
                    });
                }
            }
        }
    }
    points
}

/// Run the whole cross product of sweep points and estimators, streaming CSV
/// rows to `out` as they complete. Rows are flushed per record so partial
/// results survive an I/O failure.
pub fn run_scenario<W: Write>(scenario: &ScenarioConfig, out: &mut W) -> Result<Vec<BerRecord>> {
    scenario.validate()?;
    writeln!(out, "{CSV_HEADER}")?;
    out.flush()?;
    let mut records = Vec::new();
    for point in sweep_points(scenario) {
        for &method in &scenario.estimators {
            let record = run_point(scenario, &point, method)?;
            writeln!(out, "{}", record.csv_row())?;
            out.flush()?;
            records.push(record);
        }
    }
    Ok(records)
}
