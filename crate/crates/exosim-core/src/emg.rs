//! Surface EMG processing and the assist-efficiency metric.
//!
//! The pipeline mirrors standard offline EMG practice: bandpass to the
//! contractile band, full-wave rectification, low-pass smoothing into an
//! activation envelope, then trapezoidal integration (iEMG) and peak
//! extraction. Efficiency compares integrated activation with and without
//! assistance:
//!
//! ```text
//! E = 1 - iEMG_assist / iEMG_no_assist
//! ```
//!
//! Both filters are Butterworth cascades applied forward and backward
//! (zero phase), so envelope peaks keep their timing and repeated metrics
//! comparisons stay aligned. Zero-phase filtering is acausal and therefore
//! only suits recorded traces, which is all this module handles.
//!
//! A seeded synthetic generator produces band-limited noise modulated by
//! a known activation profile, giving end-to-end tests a ground truth
//! without human recordings.

#[allow(unused_imports)]
use num_traits::Float;

use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::{require_positive, InvalidParam};

/// Acquisition rate of the reference hardware (Hz).
pub const DEFAULT_SAMPLE_RATE: f64 = 10_000.0;

/// Default bandpass corners (Hz): the surface-EMG contractile band.
pub const BANDPASS_LOW_HZ: f64 = 50.0;
/// Upper bandpass corner (Hz).
pub const BANDPASS_HIGH_HZ: f64 = 400.0;
/// Default bandpass order (per edge, before the zero-phase double pass).
pub const BANDPASS_ORDER: usize = 4;

/// Default envelope smoothing cutoff (Hz).
pub const SMOOTH_CUTOFF_HZ: f64 = 10.0;
/// Smoothing filter order.
pub const SMOOTH_ORDER: usize = 2;

/// Sliding window for the display RMS envelope (s).
pub const RMS_WINDOW_S: f64 = 0.1;

/// A uniformly sampled EMG recording, amplitudes in millivolts.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EmgTrace {
    /// Sampling rate (Hz).
    pub sample_rate: f64,
    /// Amplitude samples (mV).
    pub samples: Vec<f64>,
}

impl EmgTrace {
    /// Builds a trace after checking the field invariants.
    ///
    /// # Errors
    ///
    /// See [`EmgTrace::validate`].
    pub fn new(sample_rate: f64, samples: Vec<f64>) -> Result<Self, InvalidParam> {
        let trace = Self { sample_rate, samples };
        trace.validate()?;
        Ok(trace)
    }

    /// Checks: positive rate, at least two samples, all finite.
    ///
    /// # Errors
    ///
    /// [`InvalidParam`] naming the offending field.
    pub fn validate(&self) -> Result<(), InvalidParam> {
        require_positive(self.sample_rate, "sample_rate")?;
        if self.samples.len() < 2 {
            return Err(InvalidParam::new("samples", "need at least 2 samples"));
        }
        if self.samples.iter().any(|v| !v.is_finite()) {
            return Err(InvalidParam::new("samples", "must all be finite"));
        }
        Ok(())
    }

    /// Recording length in seconds, `(n - 1) / sample_rate`.
    #[must_use]
    pub fn duration(&self) -> f64 {
        (self.samples.len().saturating_sub(1)) as f64 / self.sample_rate
    }
}

/// Scalar summaries of a processed (rectified and smoothed) trace.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EmgMetrics {
    /// Largest envelope value (mV).
    pub peak: f64,
    /// Trapezoidal integral of the envelope (mV*s).
    pub iemg: f64,
    /// Trace duration (s).
    pub duration: f64,
}

/// Failure modes of the EMG operations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum EmgError {
    /// The input trace violates its invariants.
    #[error("invalid trace: {0}")]
    InvalidTrace(#[from] InvalidParam),
    /// Bandpass corners must satisfy `0 < f_lo < f_hi < rate / 2` with a
    /// positive order.
    #[error("bandpass corners must satisfy 0 < f_lo < f_hi < sample_rate / 2")]
    InvalidBand,
    /// Smoothing cutoff must sit in `(0, rate / 2)`.
    #[error("smoothing cutoff must lie in (0, sample_rate / 2)")]
    InvalidCutoff,
    /// Efficiency needs a nonzero no-assist integral.
    #[error("no-assist iEMG is zero, efficiency undefined")]
    DivisionByZero,
}

/// Zero-phase Butterworth bandpass.
///
/// `order` is the order of each edge (high-pass at `f_lo`, low-pass at
/// `f_hi`); the forward-backward pass squares the magnitude response, so
/// effective rolloff doubles.
///
/// # Errors
///
/// [`EmgError::InvalidTrace`] for a malformed trace;
/// [`EmgError::InvalidBand`] unless `0 < f_lo < f_hi < rate / 2` and
/// `order >= 1`.
pub fn bandpass(
    trace: &EmgTrace,
    f_lo: f64,
    f_hi: f64,
    order: usize,
) -> Result<EmgTrace, EmgError> {
    trace.validate()?;
    let nyquist = trace.sample_rate / 2.0;
    if !(f_lo.is_finite() && f_hi.is_finite() && 0.0 < f_lo && f_lo < f_hi && f_hi < nyquist)
        || order == 0
    {
        return Err(EmgError::InvalidBand);
    }
    let mut sections = butterworth_sections(f_lo, trace.sample_rate, order, true);
    sections.extend(butterworth_sections(f_hi, trace.sample_rate, order, false));
    // The 1/f_lo edge dominates the transient; pad for it.
    let pad = (3.0 * trace.sample_rate / f_lo) as usize;
    Ok(EmgTrace {
        sample_rate: trace.sample_rate,
        samples: filtfilt(&sections, &trace.samples, pad),
    })
}

/// Full-wave rectification, elementwise absolute value.
#[must_use]
pub fn rectify(trace: &EmgTrace) -> EmgTrace {
    EmgTrace {
        sample_rate: trace.sample_rate,
        samples: trace.samples.iter().map(|v| v.abs()).collect(),
    }
}

/// Zero-phase low-pass Butterworth envelope smoothing (order
/// [`SMOOTH_ORDER`]).
///
/// # Errors
///
/// [`EmgError::InvalidTrace`] for a malformed trace;
/// [`EmgError::InvalidCutoff`] unless `0 < f_c < rate / 2`.
pub fn smooth(trace: &EmgTrace, f_c: f64) -> Result<EmgTrace, EmgError> {
    trace.validate()?;
    if !(f_c.is_finite() && 0.0 < f_c && f_c < trace.sample_rate / 2.0) {
        return Err(EmgError::InvalidCutoff);
    }
    let sections = butterworth_sections(f_c, trace.sample_rate, SMOOTH_ORDER, false);
    let pad = (3.0 * trace.sample_rate / f_c) as usize;
    Ok(EmgTrace {
        sample_rate: trace.sample_rate,
        samples: filtfilt(&sections, &trace.samples, pad),
    })
}

/// Peak and trapezoidal integral of an envelope trace.
///
/// Meaningful on rectified, smoothed input; on raw signed data the
/// integral cancels and the peak may be negative.
#[must_use]
pub fn metrics(trace: &EmgTrace) -> EmgMetrics {
    let n = trace.samples.len();
    if n < 2 {
        let peak = trace.samples.first().copied().unwrap_or(0.0);
        return EmgMetrics { peak, iemg: 0.0, duration: 0.0 };
    }
    let dt = 1.0 / trace.sample_rate;
    let sum: f64 = trace.samples.iter().sum();
    let iemg = dt * (sum - 0.5 * (trace.samples[0] + trace.samples[n - 1]));
    let peak = trace.samples.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    EmgMetrics { peak, iemg, duration: trace.duration() }
}

/// Assist efficiency, `1 - iemg_assist / iemg_no_assist`.
///
/// Zero when assistance changes nothing, 1 in the silent-muscle limit,
/// negative when assistance increases effort.
///
/// # Errors
///
/// [`EmgError::DivisionByZero`] when the no-assist integral is zero.
pub fn efficiency(assist: &EmgMetrics, no_assist: &EmgMetrics) -> Result<f64, EmgError> {
    if no_assist.iemg == 0.0 {
        return Err(EmgError::DivisionByZero);
    }
    Ok(1.0 - assist.iemg / no_assist.iemg)
}

/// Bandpass, rectify, and smooth a raw trace with the default settings,
/// returning the envelope and its metrics.
///
/// # Errors
///
/// Propagates [`bandpass`] and [`smooth`] failures; both default corner
/// setups need `sample_rate > 800` Hz.
pub fn process(trace: &EmgTrace) -> Result<(EmgTrace, EmgMetrics), EmgError> {
    let banded = bandpass(trace, BANDPASS_LOW_HZ, BANDPASS_HIGH_HZ, BANDPASS_ORDER)?;
    let envelope = smooth(&rectify(&banded), SMOOTH_CUTOFF_HZ)?;
    let summary = metrics(&envelope);
    Ok((envelope, summary))
}

/// Sliding root-mean-square envelope over a centred `window` (s), for
/// display alongside processed traces. Windows shrink near the edges.
///
/// # Errors
///
/// [`EmgError::InvalidTrace`] for a malformed trace;
/// [`EmgError::InvalidCutoff`] for a non-positive or non-finite window.
pub fn rms_envelope(trace: &EmgTrace, window: f64) -> Result<EmgTrace, EmgError> {
    trace.validate()?;
    if !(window.is_finite() && window > 0.0) {
        return Err(EmgError::InvalidCutoff);
    }
    let n = trace.samples.len();
    let half = (((window * trace.sample_rate) as usize).max(1) / 2).max(1);
    // Prefix sums of squares; one subtraction per output sample.
    let mut cumsq = Vec::with_capacity(n + 1);
    cumsq.push(0.0);
    for &v in &trace.samples {
        cumsq.push(cumsq.last().unwrap() + v * v);
    }
    let samples = (0..n)
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(n);
            ((cumsq[hi] - cumsq[lo]) / (hi - lo) as f64).sqrt()
        })
        .collect();
    Ok(EmgTrace { sample_rate: trace.sample_rate, samples })
}

/// Synthetic EMG: seeded zero-mean Gaussian noise, band-limited to the
/// default contractile band, then amplitude-modulated by `activation`
/// (one value per output sample, each in `[0, 1]`).
///
/// Deterministic for a fixed seed, so paired assist and no-assist traces
/// with known activation ratios can drive pipeline tests.
///
/// # Errors
///
/// [`EmgError::InvalidTrace`] for out-of-range activation values or
/// fewer than 2 samples; [`EmgError::InvalidBand`] when `sample_rate`
/// cannot carry the 50 to 400 Hz band.
pub fn synth_emg(activation: &[f64], sample_rate: f64, seed: u64) -> Result<EmgTrace, EmgError> {
    if activation.iter().any(|a| !(a.is_finite() && (0.0..=1.0).contains(a))) {
        return Err(EmgError::InvalidTrace(InvalidParam::new(
            "activation",
            "values must lie in [0, 1]",
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise: Vec<f64> =
        (0..activation.len()).map(|_| StandardNormal.sample(&mut rng)).collect();
    let banded = bandpass(
        &EmgTrace::new(sample_rate, noise)?,
        BANDPASS_LOW_HZ,
        BANDPASS_HIGH_HZ,
        BANDPASS_ORDER,
    )?;
    let samples = banded.samples.iter().zip(activation).map(|(n, a)| n * a).collect();
    Ok(EmgTrace { sample_rate, samples })
}

/// One second-order filter section, transposed direct form II, `a0`
/// normalized away.
#[derive(Debug, Clone, Copy)]
struct Biquad {
    b0: f64,
    b1: f64,
    b2: f64,
    a1: f64,
    a2: f64,
}

impl Biquad {
    /// Bilinear-transform Butterworth low-pass stage with quality `q`.
    fn lowpass(f_c: f64, f_s: f64, q: f64) -> Self {
        let k = (core::f64::consts::PI * f_c / f_s).tan();
        let a0 = 1.0 + k / q + k * k;
        Self {
            b0: k * k / a0,
            b1: 2.0 * k * k / a0,
            b2: k * k / a0,
            a1: 2.0 * (k * k - 1.0) / a0,
            a2: (1.0 - k / q + k * k) / a0,
        }
    }

    /// High-pass counterpart of [`Biquad::lowpass`]; same poles, zeros
    /// moved from z = -1 to z = +1.
    fn highpass(f_c: f64, f_s: f64, q: f64) -> Self {
        let k = (core::f64::consts::PI * f_c / f_s).tan();
        let a0 = 1.0 + k / q + k * k;
        Self {
            b0: 1.0 / a0,
            b1: -2.0 / a0,
            b2: 1.0 / a0,
            a1: 2.0 * (k * k - 1.0) / a0,
            a2: (1.0 - k / q + k * k) / a0,
        }
    }

    /// Single real-pole stage for odd filter orders.
    fn first_order(f_c: f64, f_s: f64, highpass: bool) -> Self {
        let k = (core::f64::consts::PI * f_c / f_s).tan();
        let a0 = k + 1.0;
        let (b0, b1) = if highpass { (1.0 / a0, -1.0 / a0) } else { (k / a0, k / a0) };
        Self { b0, b1, b2: 0.0, a1: (k - 1.0) / a0, a2: 0.0 }
    }

    fn dc_gain(&self) -> f64 {
        (self.b0 + self.b1 + self.b2) / (1.0 + self.a1 + self.a2)
    }

    /// Runs the section in place, with state pre-loaded to the steady
    /// response for the first sample. Constant inputs then pass through
    /// exactly (up to rounding) instead of ringing from a zero state.
    fn run_in_place(&self, x: &mut [f64]) {
        let Some(&x0) = x.first() else { return };
        let y0 = self.dc_gain() * x0;
        let mut s1 = y0 - self.b0 * x0;
        let mut s2 = self.b2 * x0 - self.a2 * y0;
        for v in x.iter_mut() {
            let xi = *v;
            let y = self.b0 * xi + s1;
            s1 = self.b1 * xi - self.a1 * y + s2;
            s2 = self.b2 * xi - self.a2 * y;
            *v = y;
        }
    }
}

/// Butterworth cascade of the given order as second-order sections (plus
/// one first-order stage when the order is odd). Stage qualities follow
/// the pole angles of the analog prototype,
/// `q_k = 1 / (2 sin(pi (2k + 1) / (2 n)))`.
fn butterworth_sections(f_c: f64, f_s: f64, order: usize, highpass: bool) -> Vec<Biquad> {
    let mut sections = Vec::with_capacity(order.div_ceil(2));
    for k in 0..order / 2 {
        let angle = core::f64::consts::PI * (2 * k + 1) as f64 / (2.0 * order as f64);
        let q = 1.0 / (2.0 * angle.sin());
        sections.push(if highpass {
            Biquad::highpass(f_c, f_s, q)
        } else {
            Biquad::lowpass(f_c, f_s, q)
        });
    }
    if order % 2 == 1 {
        sections.push(Biquad::first_order(f_c, f_s, highpass));
    }
    sections
}

/// Forward-backward application of a section cascade with odd-symmetric
/// edge extension of `pad` samples (clamped to the trace length), the
/// standard zero-phase recipe: the extension gives transients room to die
/// outside the data, and the reversed second pass cancels the phase of
/// the first.
fn filtfilt(sections: &[Biquad], samples: &[f64], pad: usize) -> Vec<f64> {
    let n = samples.len();
    let pad = pad.min(n - 1);
    let first = samples[0];
    let last = samples[n - 1];
    let mut buf = Vec::with_capacity(n + 2 * pad);
    for i in (1..=pad).rev() {
        buf.push(2.0 * first - samples[i]);
    }
    buf.extend_from_slice(samples);
    for i in 1..=pad {
        buf.push(2.0 * last - samples[n - 1 - i]);
    }
    for s in sections {
        s.run_in_place(&mut buf);
    }
    buf.reverse();
    for s in sections {
        s.run_in_place(&mut buf);
    }
    buf.reverse();
    buf[pad..pad + n].to_vec()
}
