//! Scenario configuration: presets, validation, and the flat key-value
//! config-file format consumed by the CLI.
//!
//! Files hold one `key = value` pair per line; `#` starts a comment. Unknown
//! and duplicate keys are hard errors. Keys are applied in a fixed canonical
//! order (preset first, then numerology, then sweep lists), so their order in
//! the file does not matter.

use std::collections::HashSet;

use crate::channel::{PdpTap, PowerDelayProfile};
use crate::error::{Error, Result};
use crate::estimators::{DfOptions, Method};
use crate::grid::{LteBandwidth, OfdmConfig};
use crate::svr::{BiasMode, SvrHyperparams};

/// Speed of light, m/s.
const C_LIGHT: f64 = 299_792_458.0;

/// Full description of a Monte Carlo sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub ofdm: OfdmConfig,
    pub profile: PowerDelayProfile,
    pub speed_kmh: f64,
    pub carrier_hz: f64,
    pub snr_db_list: Vec<f64>,
    /// Impulse noise disabled when empty.
    pub sir_db_list: Vec<f64>,
    pub p_list: Vec<f64>,
    pub estimators: Vec<Method>,
    pub svr: SvrHyperparams,
    pub df: DfOptions,
    pub frames_per_point: usize,
    pub master_seed: u64,
}

impl ScenarioConfig {
    /// The reference simulation setup: 5 MHz LTE downlink (512-point FFT,
    /// 301 occupied subcarriers), 16-QAM, 9-path vehicular channel at
    /// 350 km/h with a 2.15 GHz carrier, 140-symbol frames.
    pub fn paper_table3() -> Self {
        let ofdm = OfdmConfig::lte(LteBandwidth::Mhz5);
        let svr = SvrHyperparams::for_pilot_spacing(ofdm.pilot_spacing);
        ScenarioConfig {
            ofdm,
            profile: PowerDelayProfile::eva(),
            speed_kmh: 350.0,
            carrier_hz: 2.15e9,
            snr_db_list: vec![0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0],
            sir_db_list: vec![],
            p_list: vec![],
            estimators: vec![Method::Ls, Method::DecisionFeedback, Method::Svr],
            svr,
            df: DfOptions::default(),
            frames_per_point: 100,
            master_seed: 1,
        }
    }

    /// Maximum Doppler shift implied by the mobile speed and carrier.
    pub fn doppler_hz(&self) -> f64 {
        (self.speed_kmh / 3.6) * self.carrier_hz / C_LIGHT
    }

    pub fn validate(&self) -> Result<()> {
        self.ofdm.validate()?;
        self.svr.validate()?;
        let fail = |msg: String| Err(Error::InvalidConfig(msg));
        if self.frames_per_point == 0 {
            return fail("frames_per_point must be >= 1".into());
        }
        if self.speed_kmh < 0.0 {
            return fail("speed_kmh must be >= 0".into());
        }
        if !(self.carrier_hz > 0.0) {
            return fail("carrier_hz must be > 0".into());
        }
        if self.snr_db_list.is_empty() {
            return fail("snr_db_list must not be empty".into());
        }
        if self.sir_db_list.is_empty() != self.p_list.is_empty() {
            return fail("sir_db_list and p_list must be set together (or both left empty)".into());
        }
        for &p in &self.p_list {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::ProbabilityRange(p));
            }
        }
        // Guard-interval rule: the prefix must absorb the full delay spread.
        self.ofdm
            .validate_guard(self.profile.max_delay_samples(self.ofdm.sampling_rate_hz))?;
        Ok(())
    }
}

/// All recognized config keys, in the order they are applied.
const KEY_ORDER: &[&str] = &[
    "preset",
    "bandwidth_mhz",
    "modulation_order",
    "pilot_spacing",
    "symbols_per_frame",
    "cp_samples",
    "channel_taps",
    "speed_kmh",
    "carrier_hz",
    "snr_db_list",
    "sir_db_list",
    "p_list",
    "estimators",
    "frames_per_point",
    "master_seed",
    "svr_epsilon",
    "svr_gamma",
    "svr_c",
    "svr_kernel_sigma",
    "svr_tolerance",
    "svr_max_iterations",
    "svr_bias",
    "df_reanchor_period",
];

pub fn preset_by_name(name: &str) -> Result<ScenarioConfig> {
    match name.trim() {
        "paper-table3" => Ok(ScenarioConfig::paper_table3()),
        other => Err(Error::InvalidConfig(format!(
            "unknown preset '{other}' (available: paper-table3)"
        ))),
    }
}

/// Parse config text on top of a base scenario. A `preset` key, if present,
/// replaces the base before the remaining keys are applied.
pub fn apply_config_text(base: ScenarioConfig, text: &str) -> Result<ScenarioConfig> {
    let mut entries: Vec<(usize, String, String)> = Vec::new();
    let mut seen: HashSet<String> = HashSet::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let stripped = raw.split('#').next().unwrap_or("").trim();
        if stripped.is_empty() {
            continue;
        }
        let (key, value) = stripped.split_once('=').ok_or_else(|| Error::ConfigParse {
            line,
            msg: format!("expected 'key = value', got '{stripped}'"),
        })?;
        let key = key.trim().to_ascii_lowercase();
        let value = value.trim().to_string();
        if !KEY_ORDER.contains(&key.as_str()) {
            return Err(Error::ConfigParse {
                line,
                msg: format!("unknown key '{key}'"),
            });
        }
        if !seen.insert(key.clone()) {
            return Err(Error::ConfigParse {
                line,
                msg: format!("duplicate key '{key}'"),
            });
        }
        entries.push((line, key, value));
    }

    let mut cfg = base;
    for &key in KEY_ORDER {
        if let Some((line, _, value)) = entries.iter().find(|(_, k, _)| k == key) {
            apply_key(&mut cfg, key, value).map_err(|e| Error::ConfigParse {
                line: *line,
                msg: e.to_string(),
            })?;
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn parse_f64(value: &str) -> Result<f64> {
    value
        .trim()
        .parse::<f64>()
        .map_err(|_| Error::InvalidConfig(format!("'{value}' is not a number")))
}

fn parse_usize(value: &str) -> Result<usize> {
    value
        .trim()
        .parse::<usize>()
        .map_err(|_| Error::InvalidConfig(format!("'{value}' is not a non-negative integer")))
}

fn parse_f64_list(value: &str) -> Result<Vec<f64>> {
    let trimmed = value.trim();
    if trimmed.is_empty() || trimmed.eq_ignore_ascii_case("none") {
        return Ok(vec![]);
    }
    trimmed.split(',').map(parse_f64).collect()
}

pub fn parse_estimator_list(value: &str) -> Result<Vec<Method>> {
    let trimmed = value.trim();
    if trimmed.is_empty() || trimmed.eq_ignore_ascii_case("none") {
        return Ok(vec![]);
    }
    let mut out = Vec::new();
    for part in trimmed.split(',') {
        let m: Method = part.parse()?;
        if !out.contains(&m) {
            out.push(m);
        }
    }
    Ok(out)
}

fn parse_taps(value: &str) -> Result<PowerDelayProfile> {
    let mut taps = Vec::new();
    for part in value.split(',') {
        let (delay, power) = part.trim().split_once(':').ok_or_else(|| {
            Error::InvalidConfig(format!("tap '{part}' must be 'delay_ns:power_db'"))
        })?;
        taps.push(PdpTap {
            delay_ns: parse_f64(delay)?,
            power_db: parse_f64(power)?,
        });
    }
    PowerDelayProfile::new(taps)
}

fn apply_key(cfg: &mut ScenarioConfig, key: &str, value: &str) -> Result<()> {
    match key {
        "preset" => *cfg = preset_by_name(value)?,
        "bandwidth_mhz" => {
            let bw = LteBandwidth::from_mhz(parse_f64(value)?).ok_or_else(|| {
                Error::InvalidConfig(format!(
                    "'{value}' is not a standard bandwidth (1.25, 2.5, 5, 10, 15, 20)"
                ))
            })?;
            let keep = cfg.ofdm.clone();
            cfg.ofdm = OfdmConfig::lte(bw);
            cfg.ofdm.modulation_order = keep.modulation_order;
            cfg.ofdm.pilot_spacing = keep.pilot_spacing;
            cfg.ofdm.symbols_per_frame = keep.symbols_per_frame;
        }
        "modulation_order" => cfg.ofdm.modulation_order = parse_usize(value)?,
        "pilot_spacing" => cfg.ofdm.pilot_spacing = parse_usize(value)?,
        "symbols_per_frame" => cfg.ofdm.symbols_per_frame = parse_usize(value)?,
        "cp_samples" => cfg.ofdm.cp_samples = parse_usize(value)?,
        "channel_taps" => cfg.profile = parse_taps(value)?,
        "speed_kmh" => cfg.speed_kmh = parse_f64(value)?,
        "carrier_hz" => cfg.carrier_hz = parse_f64(value)?,
        "snr_db_list" => cfg.snr_db_list = parse_f64_list(value)?,
        "sir_db_list" => cfg.sir_db_list = parse_f64_list(value)?,
        "p_list" => cfg.p_list = parse_f64_list(value)?,
        "estimators" => cfg.estimators = parse_estimator_list(value)?,
        "frames_per_point" => cfg.frames_per_point = parse_usize(value)?,
        "master_seed" => {
            cfg.master_seed = value
                .trim()
                .parse::<u64>()
                .map_err(|_| Error::InvalidConfig(format!("'{value}' is not a valid seed")))?
        }
        "svr_epsilon" => cfg.svr.epsilon = parse_f64(value)?,
        "svr_gamma" => cfg.svr.gamma = parse_f64(value)?,
        "svr_c" => cfg.svr.c = parse_f64(value)?,
        "svr_kernel_sigma" => cfg.svr.kernel_sigma = parse_f64(value)?,
        "svr_tolerance" => cfg.svr.solver_tolerance = parse_f64(value)?,
        "svr_max_iterations" => cfg.svr.max_iterations = parse_usize(value)?,
        "svr_bias" => {
            cfg.svr.bias_mode = match value.trim().to_ascii_lowercase().as_str() {
                "zero" => BiasMode::Zero,
                "mean-residual" => BiasMode::MeanResidual,
                other => {
                    return Err(Error::InvalidConfig(format!(
                        "unknown svr_bias '{other}' (zero | mean-residual)"
                    )))
                }
            }
        }
        "df_reanchor_period" => {
            let period = parse_usize(value)?;
            cfg.df.reanchor_period = if period == 0 { None } else { Some(period) };
        }
        _ => unreachable!("key list mismatch"),
    }
    Ok(())
}
