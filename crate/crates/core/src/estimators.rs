//! The three pilot-aided channel estimators: per-symbol least squares with
//! linear interpolation, decision feedback, and complex SVR interpolation.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{hard_decision, OfdmConfig, ResourceGrid, EQUALIZER_FLOOR};
use crate::svr::{gram_matrix, rbf_kernel, solve_dual, PilotObservations, SvrHyperparams};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Estimation method identifier carried through records and CSV output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Ls,
    DecisionFeedback,
    Svr,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Ls => "LS",
            Method::DecisionFeedback => "DF",
            Method::Svr => "SVR",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ls" => Ok(Method::Ls),
            "df" | "decision-feedback" => Ok(Method::DecisionFeedback),
            "svr" => Ok(Method::Svr),
            other => Err(Error::InvalidConfig(format!(
                "unknown estimator '{other}' (expected ls, df or svr)"
            ))),
        }
    }
}

/// Per-symbol solver statistics reported by the SVR estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveDiagnostics {
    pub iterations: usize,
    pub final_objective: f64,
    pub support_vectors: usize,
}

/// Channel estimate over the full frame grid.
#[derive(Debug, Clone)]
pub struct ChannelEstimate {
    n_symbols: usize,
    n_subcarriers: usize,
    h_hat: Vec<Complex64>,
    pub method: Method,
    pub per_symbol_diagnostics: Option<Vec<SolveDiagnostics>>,
}

impl ChannelEstimate {
    fn new(n_symbols: usize, n_subcarriers: usize, h_hat: Vec<Complex64>, method: Method) -> Self {
        debug_assert_eq!(h_hat.len(), n_symbols * n_subcarriers);
        debug_assert!(h_hat.iter().all(|h| h.re.is_finite() && h.im.is_finite()));
        ChannelEstimate {
            n_symbols,
            n_subcarriers,
            h_hat,
            method,
            per_symbol_diagnostics: None,
        }
    }

    pub fn n_symbols(&self) -> usize {
        self.n_symbols
    }

    pub fn n_subcarriers(&self) -> usize {
        self.n_subcarriers
    }

    pub fn row(&self, s: usize) -> &[Complex64] {
        &self.h_hat[s * self.n_subcarriers..(s + 1) * self.n_subcarriers]
    }

    pub fn values(&self) -> &[Complex64] {
        &self.h_hat
    }
}

/// Least squares at pilot positions: H_p(m) = Y_p(m) / X_p(m).
pub fn ls_pilot_estimate(y_p: &[Complex64], x_p: &[Complex64]) -> Result<Vec<Complex64>> {
    if y_p.len() != x_p.len() {
        return Err(Error::LengthMismatch {
            left: y_p.len(),
            right: x_p.len(),
        });
    }
    x_p.iter()
        .zip(y_p)
        .enumerate()
        .map(|(m, (&x, &y))| {
            if x.norm() == 0.0 {
                Err(Error::ZeroPilotSymbol(m))
            } else {
                Ok(y / x)
            }
        })
        .collect()
}

/// Linear interpolation of pilot values across all subcarriers, holding the
/// edge values constant outside the pilot span.
fn linear_interpolate(positions: &[usize], values: &[Complex64], n: usize) -> Vec<Complex64> {
    debug_assert_eq!(positions.len(), values.len());
    debug_assert!(!positions.is_empty());
    let mut out = Vec::with_capacity(n);
    let last = positions.len() - 1;
    let mut seg = 0usize;
    for k in 0..n {
        if k <= positions[0] {
            out.push(values[0]);
            continue;
        }
        if k >= positions[last] {
            out.push(values[last]);
            continue;
        }
        while positions[seg + 1] < k {
            seg += 1;
        }
        let x0 = positions[seg] as f64;
        let x1 = positions[seg + 1] as f64;
        let t = (k as f64 - x0) / (x1 - x0);
        out.push(values[seg] + (values[seg + 1] - values[seg]) * t);
    }
    out
}

fn pilot_observations_for_symbol(rx: &ResourceGrid, s: usize) -> Result<Vec<Complex64>> {
    let row = rx.row(s);
    let positions = rx.pilot_positions();
    let y_p: Vec<Complex64> = positions.iter().map(|&k| row[k]).collect();
    let x_p: Vec<Complex64> = (0..positions.len()).map(|m| rx.known_pilot(s, m)).collect();
    ls_pilot_estimate(&y_p, &x_p)
}

/// Per-symbol pilot LS followed by linear interpolation in frequency.
pub fn ls_estimate_frame(rx: &ResourceGrid, config: &OfdmConfig) -> Result<ChannelEstimate> {
    config.validate()?;
    let n_sub = rx.n_subcarriers();
    let positions = rx.pilot_positions();
    let mut h_hat = Vec::with_capacity(rx.n_symbols() * n_sub);
    for s in 0..rx.n_symbols() {
        let pilots = pilot_observations_for_symbol(rx, s).map_err(|e| symbol_error(s, e))?;
        h_hat.extend(linear_interpolate(&positions, &pilots, n_sub));
    }
    Ok(ChannelEstimate::new(
        rx.n_symbols(),
        n_sub,
        h_hat,
        Method::Ls,
    ))
}

/// Decision feedback options.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DfOptions {
    /// Re-run the pilot LS initialization every `period` symbols. `None`
    /// keeps pure feedback after the first symbol.
    pub reanchor_period: Option<usize>,
}

/// Decision feedback: symbol 0 is estimated by pilot LS; afterwards each
/// symbol is equalized with the previous estimate, hard-decided (pilot cells
/// use the known pilot), and the estimate is refreshed from the decision:
/// H(k, i) = Y(k, i) / decided X(k, i).
///
/// Decision errors propagate into later symbols; that is the nature of the
/// method, not a fault.
pub fn decision_feedback_estimate(
    rx: &ResourceGrid,
    config: &OfdmConfig,
    options: &DfOptions,
) -> Result<ChannelEstimate> {
    config.validate()?;
    if let Some(period) = options.reanchor_period {
        if period == 0 {
            return Err(Error::InvalidConfig(
                "reanchor_period must be positive".into(),
            ));
        }
    }
    let n_sub = rx.n_subcarriers();
    let positions = rx.pilot_positions();
    let order = config.modulation_order;
    let mut h_hat: Vec<Complex64> = Vec::with_capacity(rx.n_symbols() * n_sub);

    let ls_row = |s: usize| -> Result<Vec<Complex64>> {
        let pilots = pilot_observations_for_symbol(rx, s).map_err(|e| symbol_error(s, e))?;
        Ok(linear_interpolate(&positions, &pilots, n_sub))
    };

    let mut prev = ls_row(0)?;
    h_hat.extend_from_slice(&prev);
    for s in 1..rx.n_symbols() {
        let reanchor = options
            .reanchor_period
            .is_some_and(|period| s % period == 0);
        let row = rx.row(s);
        let mut current = Vec::with_capacity(n_sub);
        if reanchor {
            current = ls_row(s)?;
        } else {
            let mut pilot_idx = 0usize;
            for k in 0..n_sub {
                let h_prev = if prev[k].norm() < EQUALIZER_FLOOR {
                    Complex64::new(EQUALIZER_FLOOR, 0.0)
                } else {
                    prev[k]
                };
                let decided = if rx.pilot_mask(s, k) {
                    let p = rx.known_pilot(s, pilot_idx);
                    pilot_idx += 1;
                    p
                } else {
                    hard_decision(row[k] / h_prev, order)
                };
                current.push(row[k] / decided);
            }
        }
        h_hat.extend_from_slice(&current);
        prev = current;
    }
    Ok(ChannelEstimate::new(
        rx.n_symbols(),
        n_sub,
        h_hat,
        Method::DecisionFeedback,
    ))
}

fn symbol_error(symbol: usize, source: Error) -> Error {
    Error::SymbolEstimate {
        symbol,
        source: Box::new(source),
    }
}

/// Complex SVR estimation: per OFDM symbol, pilot LS observations feed the
/// dual solver and the solved weights interpolate the response at every
/// occupied subcarrier. The Gram matrix and the prediction kernel are built
/// once per frame since the comb layout is time-invariant.
pub fn svr_estimate_frame(
    rx: &ResourceGrid,
    config: &OfdmConfig,
    params: &SvrHyperparams,
) -> Result<ChannelEstimate> {
    config.validate()?;
    params.validate()?;
    let n_sub = rx.n_subcarriers();
    let positions = rx.pilot_positions();
    if positions.len() < 2 {
        return Err(Error::InvalidConfig(
            "SVR estimation needs at least 2 pilots per symbol".into(),
        ));
    }
    let gram = gram_matrix(&positions, params.kernel_sigma)?;
    // Prediction kernel K(P_m, k) for every subcarrier, reused by all symbols.
    let kernel_rows: Vec<Vec<f64>> = (0..n_sub)
        .map(|k| {
            positions
                .iter()
                .map(|&p| rbf_kernel(p as f64, k as f64, params.kernel_sigma))
                .collect()
        })
        .collect();

    let estimate_symbol = |s: usize| -> Result<(Vec<Complex64>, SolveDiagnostics)> {
        let pilots = pilot_observations_for_symbol(rx, s).map_err(|e| symbol_error(s, e))?;
        let obs =
            PilotObservations::new(positions.clone(), pilots).map_err(|e| symbol_error(s, e))?;
        let solution = solve_dual(&gram, &obs, params).map_err(|e| symbol_error(s, e))?;
        let row = kernel_rows
            .iter()
            .map(|kr| {
                let mut acc = solution.bias;
                for (w, &k) in solution.psi.iter().zip(kr) {
                    acc += w * k;
                }
                acc
            })
            .collect();
        let diag = SolveDiagnostics {
            iterations: solution.iterations_used,
            final_objective: solution.final_objective,
            support_vectors: solution.support_vector_count(),
        };
        Ok((row, diag))
    };

    // Chunked so the per-solve work stays large relative to task overhead
    // (frames already fan out in the harness).
    #[cfg(feature = "parallel")]
    let per_symbol: Vec<(Vec<Complex64>, SolveDiagnostics)> = (0..rx.n_symbols())
        .into_par_iter()
        .with_min_len(8)
        .map(estimate_symbol)
        .collect::<Result<_>>()?;
    #[cfg(not(feature = "parallel"))]
    let per_symbol: Vec<(Vec<Complex64>, SolveDiagnostics)> = (0..rx.n_symbols())
        .map(estimate_symbol)
        .collect::<Result<_>>()?;

    let mut h_hat = Vec::with_capacity(rx.n_symbols() * n_sub);
    let mut diagnostics = Vec::with_capacity(rx.n_symbols());
    for (row, diag) in per_symbol {
        h_hat.extend(row);
        diagnostics.push(diag);
    }
    let mut estimate = ChannelEstimate::new(rx.n_symbols(), n_sub, h_hat, Method::Svr);
    estimate.per_symbol_diagnostics = Some(diagnostics);
    Ok(estimate)
}

/// Dispatch one frame to the selected estimator.
pub fn estimate_frame(
    method: Method,
    rx: &ResourceGrid,
    config: &OfdmConfig,
    svr_params: &SvrHyperparams,
    df_options: &DfOptions,
) -> Result<ChannelEstimate> {
    match method {
        Method::Ls => ls_estimate_frame(rx, config),
        Method::DecisionFeedback => decision_feedback_estimate(rx, config, df_options),
        Method::Svr => svr_estimate_frame(rx, config, svr_params),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{
        apply_channel, generate_channel, true_frequency_response, PowerDelayProfile,
    };
    use crate::grid::{demodulate_frame, modulate_bits, modulate_frame, LteBandwidth};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn test_config() -> OfdmConfig {
        let mut config = OfdmConfig::lte(LteBandwidth::Mhz5);
        config.symbols_per_frame = 4;
        config
    }

    /// Transmit one random frame through the given per-(symbol,subcarrier)
    /// channel response applied in the frequency domain.
    fn synthetic_rx(
        config: &OfdmConfig,
        h: impl Fn(usize, usize) -> Complex64,
        seed: u64,
    ) -> (ResourceGrid, ResourceGrid) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bits: Vec<u8> = (0..config.data_bits_per_frame())
            .map(|_| rng.random_range(0..2) as u8)
            .collect();
        let data = modulate_bits(&bits, config.modulation_order).unwrap();
        let tx = ResourceGrid::build(config, &data).unwrap();
        let rows: Vec<Vec<Complex64>> = (0..config.symbols_per_frame)
            .map(|s| {
                tx.row(s)
                    .iter()
                    .enumerate()
                    .map(|(k, &x)| x * h(s, k))
                    .collect()
            })
            .collect();
        let rx = ResourceGrid::from_received(config, rows).unwrap();
        (tx, rx)
    }

    fn frame_mse(est: &ChannelEstimate, oracle: impl Fn(usize, usize) -> Complex64) -> f64 {
        let mut num = 0.0;
        let mut count = 0usize;
        for s in 0..est.n_symbols() {
            for (k, &h) in est.row(s).iter().enumerate() {
                num += (h - oracle(s, k)).norm_sqr();
                count += 1;
            }
        }
        num / count as f64
    }

    #[test]
    fn pilot_ls_divides_complex_values() {
        let y = vec![Complex64::new(2.0, 2.0)];
        let x = vec![Complex64::new(1.0, 1.0)];
        let h = ls_pilot_estimate(&y, &x).unwrap();
        assert!((h[0] - Complex64::new(2.0, 0.0)).norm() < 1e-15);

        let zero_y = ls_pilot_estimate(&[Complex64::default()], &x).unwrap();
        assert_eq!(zero_y[0], Complex64::default());

        assert!(matches!(
            ls_pilot_estimate(&y, &[Complex64::default()]),
            Err(Error::ZeroPilotSymbol(0))
        ));
    }

    #[test]
    fn ls_recovers_flat_channel_everywhere() {
        let config = test_config();
        let c = Complex64::new(0.6, -0.8);
        let (_, rx) = synthetic_rx(&config, |_, _| c, 1);
        let est = ls_estimate_frame(&rx, &config).unwrap();
        for s in 0..est.n_symbols() {
            for &h in est.row(s) {
                assert!((h - c).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn ls_is_exact_on_affine_responses() {
        let config = test_config();
        let h = |_s: usize, k: usize| Complex64::new(1.0 + 0.002 * k as f64, 0.01 * k as f64);
        let (_, rx) = synthetic_rx(&config, h, 2);
        let est = ls_estimate_frame(&rx, &config).unwrap();
        // Linear interpolation reproduces affine functions inside the pilot span.
        for s in 0..est.n_symbols() {
            for (k, &v) in est.row(s).iter().enumerate() {
                assert!((v - h(s, k)).norm() < 1e-12, "k = {k}");
            }
        }
    }

    #[test]
    fn ls_beats_nearest_neighbor_on_eva() {
        // Independent baseline: nearest-pilot interpolation on the same data.
        let config = test_config();
        let ch = generate_channel(
            &PowerDelayProfile::eva(),
            0.0,
            config.frame_samples(),
            config.sampling_rate_hz,
            77,
        )
        .unwrap();
        let h_true: Vec<Vec<Complex64>> = (0..config.symbols_per_frame)
            .map(|s| true_frequency_response(&ch, &config, s).unwrap())
            .collect();
        let (_, rx) = synthetic_rx(&config, |s, k| h_true[s][k], 3);
        let est = ls_estimate_frame(&rx, &config).unwrap();

        let positions = rx.pilot_positions();
        let mut nn_err = 0.0;
        let mut lin_err = 0.0;
        let mut count = 0usize;
        for s in 0..config.symbols_per_frame {
            let pilots = pilot_observations_for_symbol(&rx, s).unwrap();
            for k in 0..config.occupied_subcarriers {
                let nearest = positions
                    .iter()
                    .enumerate()
                    .min_by_key(|(_, &p)| (p as isize - k as isize).abs())
                    .map(|(m, _)| pilots[m])
                    .unwrap();
                nn_err += (nearest - h_true[s][k]).norm_sqr();
                lin_err += (est.row(s)[k] - h_true[s][k]).norm_sqr();
                count += 1;
            }
        }
        assert!(
            lin_err / count as f64 <= nn_err / count as f64,
            "linear {lin_err} vs nearest-neighbor {nn_err}"
        );
    }

    #[test]
    fn ls_matches_oracle_at_pilots_in_loopback() {
        let config = test_config();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let bits: Vec<u8> = (0..config.data_bits_per_frame())
            .map(|_| rng.random_range(0..2) as u8)
            .collect();
        let data = modulate_bits(&bits, config.modulation_order).unwrap();
        let tx = ResourceGrid::build(&config, &data).unwrap();
        let signal = modulate_frame(&tx, &config).unwrap();
        let ch = generate_channel(
            &PowerDelayProfile::eva(),
            0.0,
            signal.len(),
            config.sampling_rate_hz,
            8,
        )
        .unwrap();
        let rx_signal = apply_channel(&signal, &ch).unwrap();
        let rx = demodulate_frame(&rx_signal, &config).unwrap();
        let est = ls_estimate_frame(&rx, &config).unwrap();
        for s in 0..config.symbols_per_frame {
            let h = true_frequency_response(&ch, &config, s).unwrap();
            let rms = (h.iter().map(|v| v.norm_sqr()).sum::<f64>() / h.len() as f64).sqrt();
            for &k in &rx.pilot_positions() {
                assert!(
                    (est.row(s)[k] - h[k]).norm() / rms < 1e-9,
                    "symbol {s} pilot {k}"
                );
            }
        }
    }

    #[test]
    fn df_tracks_static_channel_exactly() {
        let config = test_config();
        let c = Complex64::new(0.9, 0.3);
        let (tx, rx) = synthetic_rx(&config, |_, _| c, 7);
        let est = decision_feedback_estimate(&rx, &config, &DfOptions::default()).unwrap();
        for s in 0..est.n_symbols() {
            for &h in est.row(s) {
                assert!((h - c).norm() < 1e-10);
            }
        }
        // Zero bit errors: equalizing with the estimate reproduces the data.
        for s in 0..config.symbols_per_frame {
            for k in 0..config.occupied_subcarriers {
                if !rx.pilot_mask(s, k) {
                    let decided = hard_decision(rx.row(s)[k] / est.row(s)[k], 16);
                    assert!((decided - tx.row(s)[k]).norm() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn df_inherits_forced_decision_errors() {
        // Symbol 1 is stretched radially so no received value sits on a
        // constellation point: every decision disagrees with the observation
        // and the updated estimate must mechanically equal Y / decided(X).
        let config = test_config();
        let c = Complex64::new(1.0, 0.0);
        let (_, rx_clean) = synthetic_rx(&config, |_, _| c, 11);
        let mut rows: Vec<Vec<Complex64>> = (0..config.symbols_per_frame)
            .map(|s| rx_clean.row(s).to_vec())
            .collect();
        for (k, v) in rows[1].iter_mut().enumerate() {
            if !rx_clean.pilot_mask(1, k) {
                *v *= 2.5;
            }
        }
        let rx = ResourceGrid::from_received(&config, rows.clone()).unwrap();
        let est = decision_feedback_estimate(&rx, &config, &DfOptions::default()).unwrap();
        for k in 0..config.occupied_subcarriers {
            if !rx.pilot_mask(1, k) {
                let decided = hard_decision(rows[1][k] / est.row(0)[k], 16);
                let expected = rows[1][k] / decided;
                assert!((est.row(1)[k] - expected).norm() < 1e-12);
                // The error propagates: the estimate is not the true channel.
                assert!((est.row(1)[k] - c).norm() > 0.1);
            }
        }
    }

    #[test]
    fn df_stays_near_ls_on_slow_channels() {
        // Slowly varying synthetic channel at high SNR: DF within 3 dB of LS.
        let config = test_config();
        let h = |s: usize, k: usize| {
            Complex64::from_polar(
                1.0 + 0.02 * (k as f64 / 50.0).sin(),
                0.001 * s as f64 + 0.3 * (k as f64 / 80.0).cos(),
            )
        };
        let (_, rx) = synthetic_rx(&config, h, 13);
        let ls = ls_estimate_frame(&rx, &config).unwrap();
        let df = decision_feedback_estimate(&rx, &config, &DfOptions::default()).unwrap();
        let mse_ls = frame_mse(&ls, h);
        let mse_df = frame_mse(&df, h);
        let db = |x: f64| 10.0 * x.log10();
        assert!(
            db(mse_df) <= db(mse_ls) + 3.0,
            "DF {} dB vs LS {} dB",
            db(mse_df),
            db(mse_ls)
        );
    }

    #[test]
    fn df_reanchor_resets_estimate() {
        let config = test_config();
        let c = Complex64::new(0.5, 0.5);
        let (_, rx) = synthetic_rx(&config, |_, _| c, 17);
        let opts = DfOptions {
            reanchor_period: Some(2),
        };
        let est = decision_feedback_estimate(&rx, &config, &opts).unwrap();
        // Re-anchored symbols carry the pilot-LS interpolation exactly.
        let ls = ls_estimate_frame(&rx, &config).unwrap();
        assert_eq!(est.row(2), ls.row(2));
    }

    #[test]
    fn svr_recovers_flat_channel_within_tolerance() {
        let config = test_config();
        let c = Complex64::new(0.7, -0.4);
        let (_, rx) = synthetic_rx(&config, |_, _| c, 19);
        let params = SvrHyperparams::for_pilot_spacing(config.pilot_spacing);
        let est = svr_estimate_frame(&rx, &config, &params).unwrap();
        for s in 0..est.n_symbols() {
            for (k, &h) in est.row(s).iter().enumerate() {
                assert!((h - c).norm() < 1e-2, "symbol {s} subcarrier {k}: {h}");
            }
        }
        let diags = est.per_symbol_diagnostics.as_ref().unwrap();
        assert_eq!(diags.len(), config.symbols_per_frame);
        assert!(diags.iter().all(|d| d.iterations > 0));
    }

    #[test]
    fn svr_zero_frame_gives_zero_estimate() {
        let config = test_config();
        let rows =
            vec![vec![Complex64::default(); config.occupied_subcarriers]; config.symbols_per_frame];
        let rx = ResourceGrid::from_received(&config, rows).unwrap();
        let params = SvrHyperparams::for_pilot_spacing(config.pilot_spacing);
        let est = svr_estimate_frame(&rx, &config, &params).unwrap();
        assert!(est.values().iter().all(|h| h.norm() == 0.0));
    }

    #[test]
    fn svr_beats_ls_on_static_eva() {
        let config = test_config();
        let ch = generate_channel(
            &PowerDelayProfile::eva(),
            0.0,
            config.frame_samples(),
            config.sampling_rate_hz,
            23,
        )
        .unwrap();
        let h_true: Vec<Vec<Complex64>> = (0..config.symbols_per_frame)
            .map(|s| true_frequency_response(&ch, &config, s).unwrap())
            .collect();
        let (_, rx) = synthetic_rx(&config, |s, k| h_true[s][k], 29);
        let params = SvrHyperparams::for_pilot_spacing(config.pilot_spacing);
        let svr = svr_estimate_frame(&rx, &config, &params).unwrap();
        let ls = ls_estimate_frame(&rx, &config).unwrap();
        let mse_svr = frame_mse(&svr, |s, k| h_true[s][k]);
        let mse_ls = frame_mse(&ls, |s, k| h_true[s][k]);
        assert!(
            mse_svr <= mse_ls,
            "SVR MSE {mse_svr} should not exceed LS MSE {mse_ls}"
        );
    }

    #[test]
    fn svr_with_tiny_gamma_matches_pilots() {
        let config = test_config();
        let ch = generate_channel(
            &PowerDelayProfile::eva(),
            0.0,
            config.frame_samples(),
            config.sampling_rate_hz,
            31,
        )
        .unwrap();
        let h_true: Vec<Vec<Complex64>> = (0..config.symbols_per_frame)
            .map(|s| true_frequency_response(&ch, &config, s).unwrap())
            .collect();
        let (_, rx) = synthetic_rx(&config, |s, k| h_true[s][k], 37);
        let params = SvrHyperparams {
            epsilon: 0.0,
            gamma: 1e-6,
            c: 1e6,
            kernel_sigma: config.pilot_spacing as f64,
            solver_tolerance: 1e-9,
            ..SvrHyperparams::default()
        };
        let est = svr_estimate_frame(&rx, &config, &params).unwrap();
        for s in 0..config.symbols_per_frame {
            for &k in &rx.pilot_positions() {
                assert!(
                    (est.row(s)[k] - h_true[s][k]).norm() < 1e-3,
                    "symbol {s} pilot {k}"
                );
            }
        }
    }

    #[test]
    fn svr_solver_failure_carries_symbol_index() {
        let config = test_config();
        let (_, rx) = synthetic_rx(&config, |_, _| Complex64::new(1.0, 0.0), 41);
        let params = SvrHyperparams {
            epsilon: 0.0,
            gamma: 1e-6,
            c: 1e6,
            solver_tolerance: 1e-14,
            max_iterations: 102, // one sweep over 51 pilots
            ..SvrHyperparams::default()
        };
        match svr_estimate_frame(&rx, &config, &params) {
            Err(Error::SymbolEstimate { source, .. }) => {
                assert!(matches!(*source, Error::SolverDidNotConverge { .. }));
            }
            other => panic!("expected symbol-tagged solver failure, got {other:?}"),
        }
    }

    #[test]
    fn estimates_are_finite_for_garbage_input() {
        let config = test_config();
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let rows: Vec<Vec<Complex64>> = (0..config.symbols_per_frame)
            .map(|_| {
                (0..config.occupied_subcarriers)
                    .map(|_| {
                        Complex64::new(
                            1e6 * (rng.random::<f64>() - 0.5),
                            1e6 * (rng.random::<f64>() - 0.5),
                        )
                    })
                    .collect()
            })
            .collect();
        let rx = ResourceGrid::from_received(&config, rows).unwrap();
        let params = SvrHyperparams::for_pilot_spacing(config.pilot_spacing);
        for method in [Method::Ls, Method::DecisionFeedback, Method::Svr] {
            let est = estimate_frame(method, &rx, &config, &params, &DfOptions::default()).unwrap();
            assert!(
                est.values()
                    .iter()
                    .all(|h| h.re.is_finite() && h.im.is_finite()),
                "{method} produced non-finite estimates"
            );
        }
    }

    #[test]
    fn method_names_round_trip() {
        for (s, m) in [
            ("ls", Method::Ls),
            ("DF", Method::DecisionFeedback),
            ("svr", Method::Svr),
        ] {
            assert_eq!(s.parse::<Method>().unwrap(), m);
        }
        assert!("mmse".parse::<Method>().is_err());
        assert_eq!(Method::DecisionFeedback.to_string(), "DF");
    }
}
