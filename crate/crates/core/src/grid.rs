//! OFDM signal path for one LTE-style downlink frame: Gray-coded QAM,
//! comb-type pilot insertion, unitary IDFT/DFT with cyclic prefix, and
//! zero-forcing equalization back to bits.
//!
//! Transforms are unitary (`1/sqrt(N)` both directions) so Parseval holds and
//! noise variance is the same in time and frequency domain.

use std::cell::RefCell;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::seed;

/// Magnitude floor applied before dividing by a channel estimate. Deep fades
/// must degrade gracefully instead of producing infinities mid-sweep.
pub const EQUALIZER_FLOOR: f64 = 1e-12;

/// LTE transmission bandwidths with their standard numerology.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LteBandwidth {
    Mhz1_25,
    Mhz2_5,
    Mhz5,
    Mhz10,
    Mhz15,
    Mhz20,
}

impl LteBandwidth {
    /// (sampling rate Hz, FFT size, occupied subcarriers)
    pub fn numerology(self) -> (f64, usize, usize) {
        match self {
            LteBandwidth::Mhz1_25 => (1.92e6, 128, 76),
            LteBandwidth::Mhz2_5 => (3.84e6, 256, 151),
            LteBandwidth::Mhz5 => (7.68e6, 512, 301),
            LteBandwidth::Mhz10 => (15.36e6, 1024, 601),
            LteBandwidth::Mhz15 => (23.04e6, 1536, 901),
            LteBandwidth::Mhz20 => (30.72e6, 2048, 1201),
        }
    }

    pub fn from_mhz(mhz: f64) -> Option<Self> {
        let all = [
            (1.25, LteBandwidth::Mhz1_25),
            (2.5, LteBandwidth::Mhz2_5),
            (5.0, LteBandwidth::Mhz5),
            (10.0, LteBandwidth::Mhz10),
            (15.0, LteBandwidth::Mhz15),
            (20.0, LteBandwidth::Mhz20),
        ];
        all.iter()
            .find(|(v, _)| (v - mhz).abs() < 1e-9)
            .map(|&(_, bw)| bw)
    }
}

/// Deterministic pilot sequence: unit-magnitude QPSK points drawn from a
/// seeded hash of (symbol, pilot index), known to both ends of the link.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PilotPolicy {
    pub seed: u64,
}

impl Default for PilotPolicy {
    fn default() -> Self {
        PilotPolicy {
            seed: 0x70_696c_6f74,
        }
    }
}

impl PilotPolicy {
    /// Pilot value transmitted at OFDM symbol `s`, pilot index `m`.
    pub fn value(&self, s: usize, m: usize) -> Complex64 {
        const A: f64 = std::f64::consts::FRAC_1_SQRT_2;
        match seed::mix(&[self.seed, s as u64, m as u64]) & 3 {
            0 => Complex64::new(A, A),
            1 => Complex64::new(A, -A),
            2 => Complex64::new(-A, A),
            _ => Complex64::new(-A, -A),
        }
    }
}

/// Numerology of the OFDM link.
#[derive(Debug, Clone, PartialEq)]
pub struct OfdmConfig {
    pub fft_size: usize,
    pub occupied_subcarriers: usize,
    pub cp_samples: usize,
    pub subcarrier_spacing_hz: f64,
    pub sampling_rate_hz: f64,
    /// Comb pilot spacing in subcarrier indices.
    pub pilot_spacing: usize,
    pub symbols_per_frame: usize,
    /// Square QAM order: 4, 16 or 64.
    pub modulation_order: usize,
    pub pilot_policy: PilotPolicy,
}

impl OfdmConfig {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        fft_size: usize,
        occupied_subcarriers: usize,
        cp_samples: usize,
        subcarrier_spacing_hz: f64,
        sampling_rate_hz: f64,
        pilot_spacing: usize,
        symbols_per_frame: usize,
        modulation_order: usize,
    ) -> Result<Self> {
        let cfg = OfdmConfig {
            fft_size,
            occupied_subcarriers,
            cp_samples,
            subcarrier_spacing_hz,
            sampling_rate_hz,
            pilot_spacing,
            symbols_per_frame,
            modulation_order,
            pilot_policy: PilotPolicy::default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Standard numerology for an LTE bandwidth: 15 kHz spacing, comb pilots
    /// every 6th subcarrier, 140 symbols per 10 ms radio frame, 16-QAM, and a
    /// cyclic prefix of 36 samples at the 512-FFT rate (scaled with FFT size),
    /// which exceeds the longest standardized vehicular delay spread.
    pub fn lte(bw: LteBandwidth) -> Self {
        let (fs, n, occ) = bw.numerology();
        OfdmConfig {
            fft_size: n,
            occupied_subcarriers: occ,
            cp_samples: 36 * n / 512,
            subcarrier_spacing_hz: 15e3,
            sampling_rate_hz: fs,
            pilot_spacing: 6,
            symbols_per_frame: 140,
            modulation_order: 16,
            pilot_policy: PilotPolicy::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidConfig(msg));
        if self.fft_size < 2 {
            return fail(format!("fft_size {} too small", self.fft_size));
        }
        if self.occupied_subcarriers == 0 || self.occupied_subcarriers > self.fft_size {
            return fail(format!(
                "occupied_subcarriers {} must be in 1..={}",
                self.occupied_subcarriers, self.fft_size
            ));
        }
        if self.pilot_spacing == 0 {
            return fail("pilot_spacing must be positive".into());
        }
        if self.num_pilots() < 2 {
            return fail(format!(
                "pilot spacing {} yields {} pilot(s); at least 2 required",
                self.pilot_spacing,
                self.num_pilots()
            ));
        }
        if self.symbols_per_frame == 0 {
            return fail("symbols_per_frame must be positive".into());
        }
        if !matches!(self.modulation_order, 4 | 16 | 64) {
            return fail(format!(
                "modulation_order {} not one of 4, 16, 64",
                self.modulation_order
            ));
        }
        if !(self.sampling_rate_hz > 0.0) || !(self.subcarrier_spacing_hz > 0.0) {
            return fail("sampling_rate and subcarrier_spacing must be positive".into());
        }
        Ok(())
    }

    /// Comb pilot count per OFDM symbol: ceil(occupied / spacing).
    pub fn num_pilots(&self) -> usize {
        self.occupied_subcarriers.div_ceil(self.pilot_spacing)
    }

    pub fn pilot_positions(&self) -> Vec<usize> {
        (0..self.occupied_subcarriers)
            .step_by(self.pilot_spacing)
            .collect()
    }

    pub fn is_pilot(&self, subcarrier: usize) -> bool {
        subcarrier.is_multiple_of(self.pilot_spacing) && subcarrier < self.occupied_subcarriers
    }

    pub fn data_positions(&self) -> Vec<usize> {
        (0..self.occupied_subcarriers)
            .filter(|&k| !self.is_pilot(k))
            .collect()
    }

    pub fn bits_per_symbol(&self) -> usize {
        bits_per_symbol(self.modulation_order).expect("validated order")
    }

    /// Samples per OFDM symbol including the cyclic prefix.
    pub fn symbol_samples(&self) -> usize {
        self.fft_size + self.cp_samples
    }

    pub fn frame_samples(&self) -> usize {
        self.symbols_per_frame * self.symbol_samples()
    }

    pub fn data_cells_per_symbol(&self) -> usize {
        self.occupied_subcarriers - self.num_pilots()
    }

    pub fn data_bits_per_frame(&self) -> usize {
        self.symbols_per_frame * self.data_cells_per_symbol() * self.bits_per_symbol()
    }

    /// Guard-interval rule: the cyclic prefix must cover the longest channel
    /// delay, otherwise inter-symbol interference leaks into the grid.
    pub fn validate_guard(&self, max_delay_samples: usize) -> Result<()> {
        if self.cp_samples < max_delay_samples {
            return Err(Error::InvalidConfig(format!(
                "cyclic prefix of {} samples shorter than channel delay of {} samples",
                self.cp_samples, max_delay_samples
            )));
        }
        Ok(())
    }

    /// Signed FFT-bin offset of occupied subcarrier `q`.
    ///
    /// Occupied subcarriers sit centered around DC with the DC bin unused and
    /// edge bins zeroed; when the grid fills the whole FFT the mapping is the
    /// identity (useful for small test configurations).
    pub fn bin_offset(&self, q: usize) -> isize {
        debug_assert!(q < self.occupied_subcarriers);
        if self.occupied_subcarriers == self.fft_size {
            return q as isize;
        }
        let half_lo = (self.occupied_subcarriers / 2) as isize;
        let q = q as isize;
        if q < half_lo {
            q - half_lo
        } else {
            q - half_lo + 1
        }
    }

    /// FFT bin index (0..fft_size) of occupied subcarrier `q`.
    pub fn bin_index(&self, q: usize) -> usize {
        let n = self.fft_size as isize;
        ((self.bin_offset(q) + n) % n) as usize
    }
}

// ---------------------------------------------------------------------------
// Gray-coded square QAM
// ---------------------------------------------------------------------------

fn bits_per_symbol(order: usize) -> Result<usize> {
    match order {
        4 => Ok(2),
        16 => Ok(4),
        64 => Ok(6),
        _ => Err(Error::InvalidConfig(format!(
            "modulation order {order} not one of 4, 16, 64"
        ))),
    }
}

#[inline]
fn gray_encode(idx: u32) -> u32 {
    idx ^ (idx >> 1)
}

#[inline]
fn gray_decode(g: u32) -> u32 {
    let mut b = g;
    let mut s = 1;
    while s < 8 {
        b ^= b >> s;
        s <<= 1;
    }
    b
}

/// Amplitude normalization so the constellation has unit average power:
/// E[|s|^2] = 2(M-1)/3 for square M-QAM.
fn qam_scale(order: usize) -> f64 {
    (2.0 * (order as f64 - 1.0) / 3.0).sqrt()
}

/// PAM level for one Gray-coded bit group (MSB first), e.g. for two bits
/// 00 -> -3, 01 -> -1, 11 -> +1, 10 -> +3.
#[inline]
fn pam_level(group: u32, levels: u32) -> f64 {
    (2 * gray_decode(group) as i32 - (levels as i32 - 1)) as f64
}

/// Map a bit sequence (one bit per byte, values 0/1) onto Gray-coded square
/// QAM symbols with unit average power. The first half of each group drives
/// the in-phase axis, the second half the quadrature axis.
pub fn modulate_bits(bits: &[u8], order: usize) -> Result<Vec<Complex64>> {
    let m = bits_per_symbol(order)?;
    if !bits.len().is_multiple_of(m) {
        return Err(Error::BitCount {
            len: bits.len(),
            bits_per_symbol: m,
        });
    }
    let half = m / 2;
    let levels = 1u32 << half;
    let scale = qam_scale(order);
    let mut out = Vec::with_capacity(bits.len() / m);
    for chunk in bits.chunks_exact(m) {
        let pack = |b: &[u8]| {
            b.iter()
                .fold(0u32, |acc, &bit| (acc << 1) | (bit & 1) as u32)
        };
        let re = pam_level(pack(&chunk[..half]), levels);
        let im = pam_level(pack(&chunk[half..]), levels);
        out.push(Complex64::new(re / scale, im / scale));
    }
    Ok(out)
}

/// Nearest constellation point (hard decision) for one received symbol.
pub fn hard_decision(s: Complex64, order: usize) -> Complex64 {
    let m = bits_per_symbol(order).expect("valid order");
    let levels = (1u32 << (m / 2)) as i32;
    let scale = qam_scale(order);
    let snap = |x: f64| {
        let idx = (((x * scale) + (levels - 1) as f64) / 2.0).round() as i32;
        let idx = idx.clamp(0, levels - 1);
        (2 * idx - (levels - 1)) as f64 / scale
    };
    Complex64::new(snap(s.re), snap(s.im))
}

/// Gray-demap one symbol into `m` bits appended to `out`.
pub fn demap_symbol(s: Complex64, order: usize, out: &mut Vec<u8>) {
    let m = bits_per_symbol(order).expect("valid order");
    let half = m / 2;
    let levels = (1u32 << half) as i32;
    let scale = qam_scale(order);
    let axis_bits = |x: f64, out: &mut Vec<u8>| {
        let idx = (((x * scale) + (levels - 1) as f64) / 2.0).round() as i32;
        let idx = idx.clamp(0, levels - 1) as u32;
        let g = gray_encode(idx);
        for i in (0..half).rev() {
            out.push(((g >> i) & 1) as u8);
        }
    };
    axis_bits(s.re, out);
    axis_bits(s.im, out);
}

/// Demap a symbol sequence back to bits (hard decisions).
pub fn demap_symbols(symbols: &[Complex64], order: usize) -> Result<Vec<u8>> {
    let m = bits_per_symbol(order)?;
    let mut out = Vec::with_capacity(symbols.len() * m);
    for &s in symbols {
        demap_symbol(s, order, &mut out);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Resource grid
// ---------------------------------------------------------------------------

/// One frame of frequency-domain symbols over the occupied subcarriers.
///
/// Built on the transmit side with known pilots and payload data; on the
/// receive side it holds the demodulated observations in the same layout.
#[derive(Debug, Clone)]
pub struct ResourceGrid {
    n_symbols: usize,
    n_subcarriers: usize,
    pilot_spacing: usize,
    pilot_policy: PilotPolicy,
    symbols: Vec<Complex64>,
}

impl ResourceGrid {
    /// Build a transmit grid: comb pilots at every `pilot_spacing`-th
    /// subcarrier of every OFDM symbol, data cells filled row-major from
    /// `data_symbols`. The payload must fill the data cells exactly.
    pub fn build(config: &OfdmConfig, data_symbols: &[Complex64]) -> Result<Self> {
        config.validate()?;
        let expected = config.symbols_per_frame * config.data_cells_per_symbol();
        if data_symbols.len() != expected {
            return Err(Error::DataLength {
                expected,
                got: data_symbols.len(),
            });
        }
        let n_sub = config.occupied_subcarriers;
        let mut symbols = Vec::with_capacity(config.symbols_per_frame * n_sub);
        let mut data = data_symbols.iter();
        for s in 0..config.symbols_per_frame {
            let mut pilot_idx = 0;
            for k in 0..n_sub {
                if config.is_pilot(k) {
                    symbols.push(config.pilot_policy.value(s, pilot_idx));
                    pilot_idx += 1;
                } else {
                    symbols.push(*data.next().expect("count checked"));
                }
            }
        }
        Ok(ResourceGrid {
            n_symbols: config.symbols_per_frame,
            n_subcarriers: n_sub,
            pilot_spacing: config.pilot_spacing,
            pilot_policy: config.pilot_policy,
            symbols,
        })
    }

    /// Wrap received (demodulated) rows in the grid layout.
    pub fn from_received(config: &OfdmConfig, rows: Vec<Vec<Complex64>>) -> Result<Self> {
        if rows.len() != config.symbols_per_frame {
            return Err(Error::LengthMismatch {
                left: rows.len(),
                right: config.symbols_per_frame,
            });
        }
        let mut symbols = Vec::with_capacity(rows.len() * config.occupied_subcarriers);
        for row in &rows {
            if row.len() != config.occupied_subcarriers {
                return Err(Error::LengthMismatch {
                    left: row.len(),
                    right: config.occupied_subcarriers,
                });
            }
            symbols.extend_from_slice(row);
        }
        Ok(ResourceGrid {
            n_symbols: config.symbols_per_frame,
            n_subcarriers: config.occupied_subcarriers,
            pilot_spacing: config.pilot_spacing,
            pilot_policy: config.pilot_policy,
            symbols,
        })
    }

    pub fn n_symbols(&self) -> usize {
        self.n_symbols
    }

    pub fn n_subcarriers(&self) -> usize {
        self.n_subcarriers
    }

    pub fn row(&self, s: usize) -> &[Complex64] {
        &self.symbols[s * self.n_subcarriers..(s + 1) * self.n_subcarriers]
    }

    /// Comb pattern is time-invariant: true exactly at columns 0, spacing, ...
    pub fn pilot_mask(&self, _symbol: usize, subcarrier: usize) -> bool {
        subcarrier.is_multiple_of(self.pilot_spacing) && subcarrier < self.n_subcarriers
    }

    pub fn pilot_positions(&self) -> Vec<usize> {
        (0..self.n_subcarriers)
            .step_by(self.pilot_spacing)
            .collect()
    }

    pub fn num_pilots(&self) -> usize {
        self.n_subcarriers.div_ceil(self.pilot_spacing)
    }

    /// Known transmitted pilot value at (symbol, pilot index).
    pub fn known_pilot(&self, s: usize, m: usize) -> Complex64 {
        self.pilot_policy.value(s, m)
    }

    pub fn pilot_spacing(&self) -> usize {
        self.pilot_spacing
    }
}

// ---------------------------------------------------------------------------
// OFDM modulation
// ---------------------------------------------------------------------------

/// Complex baseband sample sequence.
#[derive(Debug, Clone)]
pub struct TimeSignal {
    pub samples: Vec<Complex64>,
    pub sampling_rate_hz: f64,
}

impl TimeSignal {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn mean_power(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        self.samples.iter().map(|s| s.norm_sqr()).sum::<f64>() / self.samples.len() as f64
    }
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn unitary_transform(buf: &mut [Complex64], inverse: bool) {
    let fft = PLANNER.with(|p| {
        let mut planner = p.borrow_mut();
        if inverse {
            planner.plan_fft_inverse(buf.len())
        } else {
            planner.plan_fft_forward(buf.len())
        }
    });
    fft.process(buf);
    let s = 1.0 / (buf.len() as f64).sqrt();
    for v in buf.iter_mut() {
        *v *= s;
    }
}

/// One OFDM symbol: map occupied subcarriers onto FFT bins, unitary inverse
/// transform, then prepend the cyclic prefix.
pub fn ofdm_modulate(grid_row: &[Complex64], config: &OfdmConfig) -> Result<Vec<Complex64>> {
    if grid_row.len() != config.occupied_subcarriers {
        return Err(Error::LengthMismatch {
            left: grid_row.len(),
            right: config.occupied_subcarriers,
        });
    }
    let n = config.fft_size;
    let mut buf = vec![Complex64::default(); n];
    for (q, &x) in grid_row.iter().enumerate() {
        buf[config.bin_index(q)] = x;
    }
    unitary_transform(&mut buf, true);
    let cp = config.cp_samples;
    let mut out = Vec::with_capacity(n + cp);
    out.extend_from_slice(&buf[n - cp..]);
    out.extend_from_slice(&buf);
    Ok(out)
}

/// Inverse of [`ofdm_modulate`]: strip the cyclic prefix, unitary forward
/// transform, extract the occupied bins.
pub fn ofdm_demodulate(segment: &[Complex64], config: &OfdmConfig) -> Result<Vec<Complex64>> {
    let expected = config.symbol_samples();
    if segment.len() != expected {
        return Err(Error::SegmentLength {
            expected,
            got: segment.len(),
        });
    }
    let mut buf = segment[config.cp_samples..].to_vec();
    unitary_transform(&mut buf, false);
    Ok((0..config.occupied_subcarriers)
        .map(|q| buf[config.bin_index(q)])
        .collect())
}

/// Serialize a whole frame of grid rows into one baseband signal.
pub fn modulate_frame(grid: &ResourceGrid, config: &OfdmConfig) -> Result<TimeSignal> {
    let mut samples = Vec::with_capacity(config.frame_samples());
    for s in 0..grid.n_symbols() {
        samples.extend(ofdm_modulate(grid.row(s), config)?);
    }
    Ok(TimeSignal {
        samples,
        sampling_rate_hz: config.sampling_rate_hz,
    })
}

/// Split a received frame into symbols and demodulate each back to the grid.
pub fn demodulate_frame(signal: &TimeSignal, config: &OfdmConfig) -> Result<ResourceGrid> {
    let expected = config.frame_samples();
    if signal.len() != expected {
        return Err(Error::SegmentLength {
            expected,
            got: signal.len(),
        });
    }
    let step = config.symbol_samples();
    let rows = signal
        .samples
        .chunks_exact(step)
        .map(|seg| ofdm_demodulate(seg, config))
        .collect::<Result<Vec<_>>>()?;
    ResourceGrid::from_received(config, rows)
}

/// Zero-forcing equalization followed by hard decisions and Gray demapping.
///
/// `y` and `h_hat` are matching sequences of received values and channel
/// estimates (typically the data cells of one OFDM symbol). Estimates with
/// magnitude below [`EQUALIZER_FLOOR`] are clamped so deep fades produce bit
/// errors instead of faults.
pub fn equalize_and_demap(
    y: &[Complex64],
    h_hat: &[Complex64],
    config: &OfdmConfig,
) -> Result<Vec<u8>> {
    if y.len() != h_hat.len() {
        return Err(Error::LengthMismatch {
            left: y.len(),
            right: h_hat.len(),
        });
    }
    let order = config.modulation_order;
    let m = bits_per_symbol(order)?;
    let mut bits = Vec::with_capacity(y.len() * m);
    for (&yv, &hv) in y.iter().zip(h_hat) {
        let h = if hv.norm() < EQUALIZER_FLOOR {
            Complex64::new(EQUALIZER_FLOOR, 0.0)
        } else {
            hv
        };
        demap_symbol(yv / h, order, &mut bits);
    }
    Ok(bits)
}
