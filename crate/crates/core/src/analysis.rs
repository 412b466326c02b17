//! Oscillation analysis of sampled outputs: analytic signal, spectrogram,
//! steady-state sinusoid estimation, and transient decay fitting.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Matrix4, Vector3, Vector4};
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sim::Signal;

/// Fraction of samples dropped at each end of an analytic signal before
/// envelope statistics are taken.
pub const EDGE_TRIM: f64 = 0.05;
/// Fraction of the record (ending at the trailing trim) used as the noise-floor reference.
pub const TAIL_FRACTION: f64 = 0.2;
/// The decay fit covers samples whose envelope exceeds this multiple of the floor.
pub const FLOOR_MULTIPLE: f64 = 3.0;
/// Default relative threshold for [`Spectrogram::ridges`].
pub const DEFAULT_RIDGE_THRESHOLD: f64 = 0.1;
/// Zero-padding factor for steady-state peak search.
const PEAK_PADDING: usize = 8;
const MIN_PERIODS: f64 = 5.0;
const MIN_FIT_SAMPLES: usize = 8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("signal has {len} samples, at least {min} required")]
    TooShort { len: usize, min: usize },
    #[error("window of {window} samples is longer than the signal ({len} samples)")]
    WindowTooLong { window: usize, len: usize },
    #[error("analysis window too short: {0}")]
    WindowTooShort(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("no oscillating component found")]
    NoOscillation,
    #[error("no transient above the noise floor")]
    NoTransient,
}

/// Periodic Hann window.
pub fn hann(len: usize) -> Vec<f64> {
    (0..len)
        .map(|i| 0.5 * (1.0 - (2.0 * PI * i as f64 / len as f64).cos()))
        .collect()
}

fn fft_in_place(buf: &mut [Complex64], inverse: bool) {
    let mut planner = FftPlanner::<f64>::new();
    let fft = if inverse {
        planner.plan_fft_inverse(buf.len())
    } else {
        planner.plan_fft_forward(buf.len())
    };
    fft.process(buf);
}

/// Complex signal x + j·H{x} on the same time grid as its source.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticSignal {
    pub t0: f64,
    pub dt: f64,
    pub samples: Vec<Complex64>,
}

impl AnalyticSignal {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    pub fn envelope(&self) -> Vec<f64> {
        self.samples.iter().map(|z| z.norm()).collect()
    }

    /// Instantaneous phase with 2π jumps removed.
    pub fn unwrapped_phase(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        let mut offset = 0.0;
        let mut prev: Option<f64> = None;
        for z in &self.samples {
            let p = z.arg();
            if let Some(q) = prev {
                let d = p - q;
                if d > PI {
                    offset -= 2.0 * PI;
                } else if d < -PI {
                    offset += 2.0 * PI;
                }
            }
            prev = Some(p);
            out.push(p + offset);
        }
        out
    }

    /// Index range left after trimming [`EDGE_TRIM`] of the samples at each end.
    pub fn trimmed_range(&self) -> std::ops::Range<usize> {
        let cut = (EDGE_TRIM * self.len() as f64).ceil() as usize;
        cut..self.len().saturating_sub(cut).max(cut)
    }
}

/// Analytic signal by the frequency-domain construction: positive-frequency
/// bins doubled, negative-frequency bins zeroed, DC and Nyquist unchanged.
///
/// The real part of the result is the input, sample for sample.
pub fn analytic(signal: &Signal) -> Result<AnalyticSignal, AnalysisError> {
    let n = signal.len();
    if n < 8 {
        return Err(AnalysisError::TooShort { len: n, min: 8 });
    }
    let mut buf: Vec<Complex64> = signal.samples.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    fft_in_place(&mut buf, false);
    let half = n / 2;
    // even n: the Nyquist bin is kept once, unscaled
    let positive_end = if n.is_multiple_of(2) { half } else { half + 1 };
    for z in &mut buf[1..positive_end] {
        *z *= 2.0;
    }
    for z in &mut buf[half + 1..] {
        *z = Complex64::new(0.0, 0.0);
    }
    fft_in_place(&mut buf, true);
    let scale = 1.0 / n as f64;
    let samples = buf
        .into_iter()
        .zip(&signal.samples)
        .map(|(z, &x)| Complex64::new(x, z.im * scale))
        .collect();
    Ok(AnalyticSignal {
        t0: signal.t0,
        dt: signal.dt,
        samples,
    })
}

/// Energy at strictly negative frequencies as a fraction of total energy.
pub fn negative_frequency_energy_ratio(samples: &[Complex64]) -> f64 {
    let n = samples.len();
    if n == 0 {
        return 0.0;
    }
    let mut buf = samples.to_vec();
    fft_in_place(&mut buf, false);
    let total: f64 = buf.iter().map(|z| z.norm_sqr()).sum();
    if total == 0.0 {
        return 0.0;
    }
    let negative: f64 = buf[n / 2 + 1..].iter().map(|z| z.norm_sqr()).sum();
    negative / total
}

/// Hann-windowed magnitude STFT.
///
/// Magnitudes are amplitude-calibrated: a steady sinusoid of amplitude A
/// centred on a bin shows magnitude A there (DC and Nyquist bins are scaled
/// by half as much, so a constant c shows c).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrogram {
    /// Frame centre times (s).
    pub times: Vec<f64>,
    /// Bin frequencies (Hz), 0 ..= Nyquist.
    pub freqs: Vec<f64>,
    /// `magnitudes[frame][bin]`.
    pub magnitudes: Vec<Vec<f64>>,
    pub window_len: usize,
    pub hop: usize,
}

impl Spectrogram {
    pub fn bin_width(&self) -> f64 {
        if self.freqs.len() > 1 {
            self.freqs[1] - self.freqs[0]
        } else {
            0.0
        }
    }

    fn coherent_gain(&self) -> f64 {
        hann(self.window_len).iter().sum()
    }

    /// Σ(w·x)² of one frame, recovered from its magnitudes.
    pub fn frame_energy(&self, frame: usize) -> f64 {
        let n = self.window_len;
        let g = self.coherent_gain();
        let nyquist = if n.is_multiple_of(2) { Some(n / 2) } else { None };
        let mut full = 0.0;
        for (k, &m) in self.magnitudes[frame].iter().enumerate() {
            if k == 0 || Some(k) == nyquist {
                full += (m * g).powi(2);
            } else {
                full += 2.0 * (m * g / 2.0).powi(2);
            }
        }
        full / n as f64
    }

    /// Σ over frames of w² covering any fully overlapped sample: Σw²/hop.
    pub fn overlap_energy_gain(&self) -> f64 {
        hann(self.window_len).iter().map(|w| w * w).sum::<f64>() / self.hop as f64
    }

    /// Frame-averaged magnitude per bin.
    pub fn mean_spectrum(&self) -> Vec<f64> {
        let mut mean = vec![0.0; self.freqs.len()];
        for frame in &self.magnitudes {
            for (m, v) in mean.iter_mut().zip(frame) {
                *m += v;
            }
        }
        let count = self.magnitudes.len().max(1) as f64;
        mean.iter_mut().for_each(|m| *m /= count);
        mean
    }

    /// Frequencies of the local maxima of the frame-averaged spectrum that
    /// reach `rel_threshold` of its global maximum.
    pub fn ridges(&self, rel_threshold: f64) -> Vec<f64> {
        self.peaks(&self.mean_spectrum(), rel_threshold)
    }

    /// Like [`Spectrogram::ridges`], for a single frame.
    pub fn frame_ridges(&self, frame: usize, rel_threshold: f64) -> Vec<f64> {
        self.peaks(&self.magnitudes[frame], rel_threshold)
    }

    fn peaks(&self, mags: &[f64], rel_threshold: f64) -> Vec<f64> {
        let top = mags.iter().cloned().fold(0.0, f64::max);
        if top == 0.0 {
            return Vec::new();
        }
        let mut out = Vec::new();
        for k in 0..mags.len() {
            let left = if k > 0 { mags[k - 1] } else { f64::NEG_INFINITY };
            let right = mags.get(k + 1).copied().unwrap_or(f64::NEG_INFINITY);
            if mags[k] > left && mags[k] >= right && mags[k] >= rel_threshold * top {
                out.push(self.interpolated_peak(mags, k).0);
            }
        }
        out
    }

    /// Largest interpolated peak of one frame with frequency in `[lo, hi]` Hz.
    pub fn peak_in_band(&self, frame: usize, lo: f64, hi: f64) -> Option<(f64, f64)> {
        let mags = &self.magnitudes[frame];
        let k = (0..mags.len())
            .filter(|&k| self.freqs[k] >= lo && self.freqs[k] <= hi)
            .max_by(|&a, &b| mags[a].total_cmp(&mags[b]))?;
        Some(self.interpolated_peak(mags, k))
    }

    fn interpolated_peak(&self, mags: &[f64], k: usize) -> (f64, f64) {
        let (delta, value) = if k > 0 && k + 1 < mags.len() {
            parabolic_log_peak(mags[k - 1], mags[k], mags[k + 1])
        } else {
            (0.0, mags[k])
        };
        ((k as f64 + delta) * self.bin_width(), value)
    }

    /// Index of the first frame whose centre is at or after `t`.
    pub fn frame_at(&self, t: f64) -> Option<usize> {
        self.times.iter().position(|&c| c >= t)
    }
}

/// Vertex of the parabola through the log magnitudes at bins k−1, k, k+1.
/// Returns the bin offset in [−0.5, 0.5] and the interpolated magnitude.
fn parabolic_log_peak(left: f64, centre: f64, right: f64) -> (f64, f64) {
    let tiny = f64::MIN_POSITIVE;
    let (a, b, c) = (left.max(tiny).ln(), centre.max(tiny).ln(), right.max(tiny).ln());
    let denom = a - 2.0 * b + c;
    if denom >= 0.0 {
        return (0.0, centre);
    }
    let delta = (0.5 * (a - c) / denom).clamp(-0.5, 0.5);
    let log_peak = b - 0.25 * (a - c) * delta;
    (delta, log_peak.exp())
}

pub fn spectrogram(signal: &Signal, window_len: usize, hop: usize) -> Result<Spectrogram, AnalysisError> {
    let n = signal.len();
    if window_len < 2 {
        return Err(AnalysisError::InvalidParameter(format!(
            "window length must be >= 2, got {window_len}"
        )));
    }
    if hop == 0 {
        return Err(AnalysisError::InvalidParameter("hop must be >= 1".into()));
    }
    if window_len > n {
        return Err(AnalysisError::WindowTooLong { window: window_len, len: n });
    }
    let window = hann(window_len);
    let gain: f64 = window.iter().sum();
    let bins = window_len / 2 + 1;
    let nyquist = window_len.is_multiple_of(2).then_some(window_len / 2);
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(window_len);

    let mut times = Vec::new();
    let mut magnitudes = Vec::new();
    let mut buf = vec![Complex64::new(0.0, 0.0); window_len];
    let mut start = 0;
    while start + window_len <= n {
        for (i, z) in buf.iter_mut().enumerate() {
            *z = Complex64::new(signal.samples[start + i] * window[i], 0.0);
        }
        fft.process(&mut buf);
        let frame: Vec<f64> = (0..bins)
            .map(|k| {
                let factor = if k == 0 || Some(k) == nyquist { 1.0 } else { 2.0 };
                factor * buf[k].norm() / gain
            })
            .collect();
        magnitudes.push(frame);
        times.push(signal.t0 + (start as f64 + window_len as f64 / 2.0) * signal.dt);
        start += hop;
    }
    let freqs = (0..bins).map(|k| k as f64 / (window_len as f64 * signal.dt)).collect();
    Ok(Spectrogram {
        times,
        freqs,
        magnitudes,
        window_len,
        hop,
    })
}

/// Dominant steady sinusoid plus bias after the transient has been discarded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteadyEstimate {
    pub f_hz: f64,
    pub omega: f64,
    pub amplitude: f64,
    pub bias: f64,
    /// Start time of the window the estimate was taken from.
    pub window_start: f64,
}

/// Estimates the steady component from `discard` seconds after the signal start.
///
/// The bias is the Hann-weighted mean of the window (so a partial period of
/// the oscillation does not leak into it). The frequency is the log-parabolic
/// interpolated peak of the zero-padded Hann spectrum of the demeaned window,
/// and the amplitude is twice the peak magnitude over the window's coherent gain.
pub fn estimate_steady(signal: &Signal, discard: f64) -> Result<SteadyEstimate, AnalysisError> {
    if !(discard.is_finite() && discard >= 0.0) {
        return Err(AnalysisError::InvalidParameter(format!("discard must be >= 0, got {discard}")));
    }
    if discard >= signal.duration() {
        return Err(AnalysisError::WindowTooShort(format!(
            "discard {discard} s leaves nothing of a {} s signal",
            signal.duration()
        )));
    }
    let tail = signal.tail_from(signal.t0 + discard);
    let n = tail.len();
    if n < 16 {
        return Err(AnalysisError::WindowTooShort(format!("{n} samples remain after discard")));
    }

    let window = hann(n);
    let gain: f64 = window.iter().sum();
    let bias = window.iter().zip(&tail.samples).map(|(w, x)| w * x).sum::<f64>() / gain;

    let nfft = n.next_power_of_two() * PEAK_PADDING;
    let mut buf = vec![Complex64::new(0.0, 0.0); nfft];
    for (i, (w, x)) in window.iter().zip(&tail.samples).enumerate() {
        buf[i] = Complex64::new(w * (x - bias), 0.0);
    }
    fft_in_place(&mut buf, false);
    let mags: Vec<f64> = buf[..=nfft / 2].iter().map(|z| z.norm()).collect();
    let k = (1..mags.len() - 1)
        .max_by(|&a, &b| mags[a].total_cmp(&mags[b]))
        .ok_or(AnalysisError::NoOscillation)?;
    let scale = tail.samples.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    if mags[k] <= 1e-12 * gain * scale.max(f64::MIN_POSITIVE) {
        return Err(AnalysisError::NoOscillation);
    }
    let (delta, peak) = parabolic_log_peak(mags[k - 1], mags[k], mags[k + 1]);
    let f_hz = (k as f64 + delta) / (nfft as f64 * tail.dt);
    let amplitude = 2.0 * peak / gain;

    let periods = tail.duration() * f_hz;
    if periods < MIN_PERIODS {
        return Err(AnalysisError::WindowTooShort(format!(
            "window covers {periods:.2} periods of {f_hz:.4} Hz, at least {MIN_PERIODS} needed"
        )));
    }
    Ok(SteadyEstimate {
        f_hz,
        omega: 2.0 * PI * f_hz,
        amplitude,
        bias,
        window_start: tail.t0,
    })
}

/// Least-squares sinusoid c + a·cos(ω(t−tₘ)) + b·sin(ω(t−tₘ)) over a window.
#[derive(Debug, Clone, Copy, PartialEq)]
struct SinusoidFit {
    omega: f64,
    t_mid: f64,
    a: f64,
    b: f64,
    c: f64,
}

impl SinusoidFit {
    fn value(&self, t: f64) -> f64 {
        let (s, co) = (self.omega * (t - self.t_mid)).sin_cos();
        self.c + self.a * co + self.b * s
    }

    fn linear(signal: &Signal, omega: f64, t_mid: f64) -> Option<Self> {
        let mut ata = Matrix3::<f64>::zeros();
        let mut atb = Vector3::<f64>::zeros();
        for (t, &y) in signal.times().zip(&signal.samples) {
            let (s, c) = (omega * (t - t_mid)).sin_cos();
            let row = Vector3::new(c, s, 1.0);
            ata += row * row.transpose();
            atb += row * y;
        }
        let x = ata.lu().solve(&atb)?;
        Some(Self {
            omega,
            t_mid,
            a: x[0],
            b: x[1],
            c: x[2],
        })
    }

    fn sum_sq(&self, signal: &Signal) -> f64 {
        signal
            .times()
            .zip(&signal.samples)
            .map(|(t, &y)| (y - self.value(t)).powi(2))
            .sum()
    }

    /// Gauss-Newton on (a, b, c, ω), keeping a step only if it lowers the residual.
    fn refine(mut self, signal: &Signal, iterations: usize) -> Self {
        let mut best = self.sum_sq(signal);
        for _ in 0..iterations {
            let mut jtj = Matrix4::<f64>::zeros();
            let mut jtr = Vector4::<f64>::zeros();
            for (t, &y) in signal.times().zip(&signal.samples) {
                let tau = t - self.t_mid;
                let (s, c) = (self.omega * tau).sin_cos();
                let row = Vector4::new(c, s, 1.0, tau * (self.b * c - self.a * s));
                jtj += row * row.transpose();
                jtr += row * (y - self.value(t));
            }
            let Some(step) = jtj.lu().solve(&jtr) else { break };
            let candidate = Self {
                a: self.a + step[0],
                b: self.b + step[1],
                c: self.c + step[2],
                omega: self.omega + step[3],
                ..self
            };
            let value = candidate.sum_sq(signal);
            if !(value < best) {
                break;
            }
            best = value;
            self = candidate;
        }
        self
    }
}

/// Exponential fit to the envelope of the transient.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayEstimate {
    /// Time constant τ̂ (s).
    pub tau: f64,
    /// Fitted envelope at the signal start.
    pub initial_envelope: f64,
    /// Mean instantaneous frequency of the transient over the fit interval (Hz).
    pub transient_f_hz: f64,
    pub fit_start: f64,
    pub fit_end: f64,
    pub noise_floor: f64,
    /// Envelope of the residual after the steady component is removed.
    pub envelope: Signal,
}

impl DecayEstimate {
    /// Residual envelope at time `t` relative to the fitted initial envelope.
    pub fn relative_envelope_at(&self, t: f64) -> f64 {
        self.envelope.hold(t) / self.initial_envelope
    }
}

/// Fits the decay constant of whatever remains once the steady sinusoid and
/// bias are subtracted.
///
/// The steady component is re-fitted by least squares over the steady window
/// (frequency included) and subtracted from the whole record. The residual's
/// envelope is taken from its analytic signal, edges trimmed, and a
/// log-linear least-squares fit made over the leading stretch where the
/// envelope exceeds [`FLOOR_MULTIPLE`] times the floor, i.e. the maximum
/// envelope over the final [`TAIL_FRACTION`] of the trimmed record. That fit
/// seeds a damped-sinusoid least-squares fit of the residual over the same
/// stretch, which gives the reported τ̂ and transient frequency.
pub fn estimate_decay(signal: &Signal, steady: &SteadyEstimate) -> Result<DecayEstimate, AnalysisError> {
    let window = signal.tail_from(steady.window_start);
    if window.len() < 16 {
        return Err(AnalysisError::WindowTooShort(format!("{} samples in steady window", window.len())));
    }
    let t_mid = window.t0 + 0.5 * window.duration();
    let fit = SinusoidFit::linear(&window, steady.omega, t_mid)
        .ok_or_else(|| AnalysisError::WindowTooShort("degenerate steady window".into()))?
        .refine(&window, 4);

    let residual: Vec<f64> = signal
        .times()
        .zip(&signal.samples)
        .map(|(t, &y)| y - fit.value(t))
        .collect();
    let residual = Signal {
        t0: signal.t0,
        dt: signal.dt,
        samples: residual,
    };
    let analytic = analytic(&residual)?;
    let env = analytic.envelope();
    let range = analytic.trimmed_range();
    if range.len() < 2 * MIN_FIT_SAMPLES {
        return Err(AnalysisError::TooShort {
            len: signal.len(),
            min: 4 * MIN_FIT_SAMPLES,
        });
    }

    let scale = signal.samples.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    let tail_len = ((TAIL_FRACTION * env.len() as f64).ceil() as usize).clamp(1, range.len());
    let tail_floor = env[range.end - tail_len..range.end].iter().cloned().fold(0.0, f64::max);
    let noise_floor = tail_floor.max(1e-12 * scale);
    let threshold = FLOOR_MULTIPLE * noise_floor;

    let start = range.start;
    let end = (start..range.end).find(|&k| env[k] <= threshold).unwrap_or(range.end);
    if end - start < MIN_FIT_SAMPLES {
        return Err(AnalysisError::NoTransient);
    }

    let count = (end - start) as f64;
    let ts: Vec<f64> = (start..end).map(|k| analytic.time(k)).collect();
    let ls: Vec<f64> = env[start..end].iter().map(|e| e.ln()).collect();
    let (slope, intercept) = linear_fit(&ts, &ls, count);
    if !(slope < 0.0) {
        return Err(AnalysisError::NoTransient);
    }

    let phase = analytic.unwrapped_phase();
    let (phase_slope, _) = linear_fit(&ts, &phase[start..end], count);

    // The analytic envelope of a one-sided transient carries a slowly
    // decaying non-oscillatory tail, which biases the log fit towards long
    // time constants. Refine on the residual itself.
    let (mut rate, mut omega_t) = (-slope, phase_slope.abs());
    let mut initial_envelope = (intercept + slope * signal.t0).exp();
    if let Some(d) = DampedFit::fit(&ts, &residual.samples[start..end], rate, omega_t) {
        rate = d.rate;
        omega_t = d.omega;
        initial_envelope = d.amplitude * (d.rate * (d.t0 - signal.t0)).exp();
    }

    Ok(DecayEstimate {
        tau: 1.0 / rate,
        initial_envelope,
        transient_f_hz: omega_t / (2.0 * PI),
        fit_start: analytic.time(start),
        fit_end: analytic.time(end - 1),
        noise_floor,
        envelope: Signal {
            t0: signal.t0,
            dt: signal.dt,
            samples: env,
        },
    })
}

/// e^{−rate·(t−t0)}·(c·cos ω(t−t0) + s·sin ω(t−t0)), fitted by damped
/// Gauss-Newton from an initial (rate, ω).
struct DampedFit {
    t0: f64,
    rate: f64,
    omega: f64,
    amplitude: f64,
}

impl DampedFit {
    fn fit(ts: &[f64], y: &[f64], rate: f64, omega: f64) -> Option<Self> {
        let t0 = *ts.first()?;
        let basis = |p: &Vector4<f64>, t: f64| {
            let x = t - t0;
            let e = (-p[2] * x).exp();
            let (sn, cs) = (p[3] * x).sin_cos();
            (x, e, sn, cs)
        };
        let cost = |p: &Vector4<f64>| -> f64 {
            ts.iter()
                .zip(y)
                .map(|(&t, &v)| {
                    let (_, e, sn, cs) = basis(p, t);
                    (v - e * (p[0] * cs + p[1] * sn)).powi(2)
                })
                .sum()
        };
        // linear amplitudes at the starting rate and frequency
        let mut ata = nalgebra::Matrix2::<f64>::zeros();
        let mut atb = nalgebra::Vector2::<f64>::zeros();
        for (&t, &v) in ts.iter().zip(y) {
            let (_, e, sn, cs) = basis(&Vector4::new(0.0, 0.0, rate, omega), t);
            let row = nalgebra::Vector2::new(e * cs, e * sn);
            ata += row * row.transpose();
            atb += row * v;
        }
        let cs0 = ata.lu().solve(&atb)?;
        let mut p = Vector4::new(cs0[0], cs0[1], rate, omega);
        let mut current = cost(&p);
        let mut lambda = 1e-3;
        for _ in 0..100 {
            let mut jtj = Matrix4::<f64>::zeros();
            let mut jtr = Vector4::<f64>::zeros();
            for (&t, &v) in ts.iter().zip(y) {
                let (x, e, sn, cs) = basis(&p, t);
                let m = e * (p[0] * cs + p[1] * sn);
                let row = Vector4::new(e * cs, e * sn, -x * m, x * e * (p[1] * cs - p[0] * sn));
                jtj += row * row.transpose();
                jtr += row * (v - m);
            }
            let mut improved = false;
            while lambda < 1e12 {
                let mut damped = jtj;
                for i in 0..4 {
                    damped[(i, i)] *= 1.0 + lambda;
                }
                let Some(step) = damped.lu().solve(&jtr) else { break };
                let trial = p + step;
                let c = cost(&trial);
                if c.is_finite() && c < current {
                    let small = (current - c) <= 1e-14 * current;
                    p = trial;
                    current = c;
                    lambda = (lambda * 0.3).max(1e-12);
                    improved = !small;
                    break;
                }
                lambda *= 10.0;
            }
            if !improved {
                break;
            }
        }
        (p[2] > 0.0 && p.iter().all(|v| v.is_finite())).then(|| DampedFit {
            t0,
            rate: p[2],
            omega: p[3].abs(),
            amplitude: p[0].hypot(p[1]),
        })
    }
}

fn linear_fit(x: &[f64], y: &[f64], count: f64) -> (f64, f64) {
    let mx = x.iter().sum::<f64>() / count;
    let my = y.iter().sum::<f64>() / count;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

pub const FLAG_NO_TRANSIENT: &str = "NoTransient";

/// Summary of the oscillation found in a signal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OscillationReport {
    pub f_hz: f64,
    pub omega_rad_s: f64,
    pub amplitude: f64,
    pub bias: f64,
    pub tau_s: Option<f64>,
    pub transient_f_hz: Option<f64>,
    pub flags: Vec<String>,
}

/// Runs the steady and decay estimators; a missing transient becomes the
/// `NoTransient` flag instead of an error.
pub fn oscillation_report(signal: &Signal, discard: f64) -> Result<OscillationReport, AnalysisError> {
    let steady = estimate_steady(signal, discard)?;
    let mut report = OscillationReport {
        f_hz: steady.f_hz,
        omega_rad_s: steady.omega,
        amplitude: steady.amplitude,
        bias: steady.bias,
        tau_s: None,
        transient_f_hz: None,
        flags: Vec::new(),
    };
    match estimate_decay(signal, &steady) {
        Ok(decay) => {
            report.tau_s = Some(decay.tau);
            report.transient_f_hz = Some(decay.transient_f_hz);
        }
        Err(AnalysisError::NoTransient) => report.flags.push(FLAG_NO_TRANSIENT.to_string()),
        Err(e) => return Err(e),
    }
    Ok(report)
}
