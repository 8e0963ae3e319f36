//! Sample-by-sample multichannel FIR machinery.
//!
//! The physical simulation runs `w -> speakers -> secondary paths`; the
//! adaptive updates use the commuted filtered-reference form
//! `e[t] = d_e[t] + X_e[t] w`, which is exact while `w` is held fixed for
//! at least `N_t + max IR length` samples.

use nalgebra::{DMatrix, DVector};

use crate::error::{AncError, Result};
use crate::scene::{ImpulseResponseSet, MicRole};

/// Ring buffer over the last `len` samples with a contiguous history view.
///
/// Storage is doubled so that `history()` is always one slice, newest first.
#[derive(Debug, Clone)]
pub struct DelayLine {
    buf: Vec<f64>,
    len: usize,
    pos: usize,
}

impl DelayLine {
    pub fn new(len: usize) -> Self {
        let len = len.max(1);
        DelayLine {
            buf: vec![0.0; 2 * len],
            len,
            pos: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn push(&mut self, sample: f64) {
        self.pos = if self.pos == 0 { self.len - 1 } else { self.pos - 1 };
        self.buf[self.pos] = sample;
        self.buf[self.pos + self.len] = sample;
    }

    /// `[x[t], x[t-1], ..., x[t-len+1]]`.
    #[inline]
    pub fn history(&self) -> &[f64] {
        &self.buf[self.pos..self.pos + self.len]
    }

    /// `sum_k coeffs[k] * x[t-k]`; `coeffs` must not be longer than the line.
    #[inline]
    pub fn dot(&self, coeffs: &[f64]) -> f64 {
        debug_assert!(coeffs.len() <= self.len);
        coeffs
            .iter()
            .zip(self.history())
            .map(|(c, x)| c * x)
            .sum()
    }

    pub fn reset(&mut self) {
        self.buf.iter_mut().for_each(|v| *v = 0.0);
        self.pos = 0;
    }
}

/// Push `sample` and return `sum_k coeffs[k] * input[t-k]`.
#[inline]
pub fn fir_step(state: &mut DelayLine, coeffs: &[f64], sample: f64) -> f64 {
    state.push(sample);
    state.dot(coeffs)
}

/// A FIR filter with its own delay line.
#[derive(Debug, Clone)]
pub struct FirFilter {
    coeffs: Vec<f64>,
    state: DelayLine,
}

impl FirFilter {
    pub fn new(coeffs: Vec<f64>) -> Self {
        let state = DelayLine::new(coeffs.len());
        FirFilter { coeffs, state }
    }

    pub fn step(&mut self, sample: f64) -> f64 {
        fir_step(&mut self.state, &self.coeffs, sample)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }
}

/// Column layout of the stacked control filter: `(speaker, reference, tap)`
/// maps to `((s * N_r) + r) * N_t + tau`, taps fastest.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FilterLayout {
    pub n_speakers: usize,
    pub n_refs: usize,
    pub taps: usize,
}

impl FilterLayout {
    pub fn new(n_speakers: usize, n_refs: usize, taps: usize) -> Self {
        FilterLayout {
            n_speakers,
            n_refs,
            taps,
        }
    }

    pub fn len(&self) -> usize {
        self.n_speakers * self.n_refs * self.taps
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, speaker: usize, reference: usize, tap: usize) -> usize {
        debug_assert!(speaker < self.n_speakers && reference < self.n_refs && tap < self.taps);
        (speaker * self.n_refs + reference) * self.taps + tap
    }

    /// Inverse of [`FilterLayout::index`].
    pub fn decompose(&self, index: usize) -> (usize, usize, usize) {
        let tap = index % self.taps;
        let pair = index / self.taps;
        (pair / self.n_refs, pair % self.n_refs, tap)
    }

    /// Offset of the contiguous tap block of one (speaker, reference) pair.
    #[inline]
    pub fn block(&self, speaker: usize, reference: usize) -> std::ops::Range<usize> {
        let start = self.index(speaker, reference, 0);
        start..start + self.taps
    }
}

/// The stacked control filter `w`.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterWeights {
    pub layout: FilterLayout,
    pub w: DVector<f64>,
}

impl FilterWeights {
    pub fn zeros(layout: FilterLayout) -> Self {
        FilterWeights {
            layout,
            w: DVector::zeros(layout.len()),
        }
    }

    pub fn from_vec(layout: FilterLayout, w: Vec<f64>) -> Result<Self> {
        if w.len() != layout.len() {
            return Err(AncError::shape("filter weights", layout.len(), w.len()));
        }
        if let Some(i) = w.iter().position(|v| !v.is_finite()) {
            return Err(AncError::NonFinite {
                what: "filter weights".into(),
                index: i,
            });
        }
        Ok(FilterWeights {
            layout,
            w: DVector::from_vec(w),
        })
    }

    pub fn get(&self, speaker: usize, reference: usize, tap: usize) -> f64 {
        self.w[self.layout.index(speaker, reference, tap)]
    }

    pub fn norm(&self) -> f64 {
        self.w.norm()
    }

    pub fn is_finite(&self) -> bool {
        self.w.iter().all(|v| v.is_finite())
    }
}

/// Filtered-reference matrices at one sample: `X_e` is `N_e x L`, `X_z` is
/// `N_z x L`. Row `j` at column `index(s, r, tau)` holds
/// `(g_{j,s} * x_r)[t - tau]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSnapshot {
    pub x_e: DMatrix<f64>,
    pub x_z: DMatrix<f64>,
    pub t: usize,
}

impl ReferenceSnapshot {
    pub fn zeros(n_primary: usize, n_secondary: usize, layout: FilterLayout) -> Self {
        ReferenceSnapshot {
            x_e: DMatrix::zeros(n_primary, layout.len()),
            x_z: DMatrix::zeros(n_secondary, layout.len()),
            t: 0,
        }
    }

    pub fn filter_len(&self) -> usize {
        self.x_e.ncols()
    }
}

/// Microphone signals produced by one propagation step.
#[derive(Debug, Clone, PartialEq)]
pub struct MicSample {
    pub e: Vec<f64>,
    pub z: Vec<f64>,
    pub d_e: Vec<f64>,
    pub d_z: Vec<f64>,
}

impl MicSample {
    fn zeros(n_primary: usize, n_secondary: usize) -> Self {
        MicSample {
            e: vec![0.0; n_primary],
            z: vec![0.0; n_secondary],
            d_e: vec![0.0; n_primary],
            d_z: vec![0.0; n_secondary],
        }
    }
}

/// Every delay line a running scene needs.
///
/// `estimate` is the secondary-path model used for the filtered references;
/// it must have the same counts as the true paths but may differ in value
/// and length.
#[derive(Debug, Clone)]
pub struct DelayLineBank {
    layout: FilterLayout,
    n_primary: usize,
    n_secondary: usize,
    /// source samples feeding the primary paths
    noise: DelayLine,
    /// source samples feeding the reference paths
    source: DelayLine,
    refs: Vec<DelayLine>,
    speakers: Vec<DelayLine>,
    /// filtered references, indexed `(mic * N_s + s) * N_r + r`
    filtered_e: Vec<DelayLine>,
    filtered_z: Vec<DelayLine>,
    out: MicSample,
}

fn group_len(rows: &[Vec<f64>]) -> usize {
    rows.iter().map(Vec::len).max().unwrap_or(1)
}

fn bank_len(rows: &[Vec<Vec<f64>>]) -> usize {
    rows.iter()
        .flatten()
        .map(Vec::len)
        .max()
        .unwrap_or(1)
}

impl DelayLineBank {
    pub fn new(irs: &ImpulseResponseSet, estimate: &ImpulseResponseSet, taps: usize) -> Self {
        let layout = FilterLayout::new(irs.n_speakers(), irs.n_refs(), taps);
        let n_primary = irs.n_primary();
        let n_secondary = irs.n_secondary();
        let g_len = bank_len(&irs.g_e)
            .max(bank_len(&irs.g_z))
            .max(bank_len(&estimate.g_e))
            .max(bank_len(&estimate.g_z));
        let est_len = bank_len(&estimate.g_e).max(bank_len(&estimate.g_z));
        let pairs = layout.n_speakers * layout.n_refs;
        DelayLineBank {
            layout,
            n_primary,
            n_secondary,
            noise: DelayLine::new(group_len(&irs.p_e).max(group_len(&irs.p_z))),
            source: DelayLine::new(group_len(&irs.h_ref)),
            refs: (0..layout.n_refs)
                .map(|_| DelayLine::new(taps.max(est_len)))
                .collect(),
            speakers: (0..layout.n_speakers).map(|_| DelayLine::new(g_len)).collect(),
            filtered_e: (0..n_primary * pairs).map(|_| DelayLine::new(taps)).collect(),
            filtered_z: (0..n_secondary * pairs).map(|_| DelayLine::new(taps)).collect(),
            out: MicSample::zeros(n_primary, n_secondary),
        }
    }

    pub fn layout(&self) -> FilterLayout {
        self.layout
    }

    /// Reference histories, newest first.
    pub fn reference_history(&self, reference: usize) -> &[f64] {
        self.refs[reference].history()
    }

    pub fn speaker_history(&self, speaker: usize) -> &[f64] {
        self.speakers[speaker].history()
    }

    pub fn reset(&mut self) {
        let lines = std::iter::once(&mut self.noise)
            .chain(std::iter::once(&mut self.source))
            .chain(self.refs.iter_mut())
            .chain(self.speakers.iter_mut())
            .chain(self.filtered_e.iter_mut())
            .chain(self.filtered_z.iter_mut());
        lines.for_each(DelayLine::reset);
    }
}

/// Feed one source sample through the reference paths and push the reference
/// samples `x_r[t]` into the bank. Returns the new reference samples.
pub fn reference_step(irs: &ImpulseResponseSet, d_t: f64, bank: &mut DelayLineBank) -> Vec<f64> {
    bank.source.push(d_t);
    let source = &bank.source;
    irs.h_ref
        .iter()
        .zip(bank.refs.iter_mut())
        .map(|(h, line)| {
            let x = source.dot(h);
            line.push(x);
            x
        })
        .collect()
}

/// `y_s[t] = sum_r sum_tau w_{s,r}[tau] * x_r[t - tau]`, written into `y`.
pub fn control_output(weights: &FilterWeights, bank: &DelayLineBank, y: &mut [f64]) {
    let layout = weights.layout;
    let w = weights.w.as_slice();
    for (s, ys) in y.iter_mut().enumerate().take(layout.n_speakers) {
        *ys = (0..layout.n_refs)
            .map(|r| bank.refs[r].dot(&w[layout.block(s, r)]))
            .sum();
    }
}

/// Propagate the source sample `d_t` and speaker outputs `y` to every mic.
///
/// Returns the controlled signals `e`, `z` and the noise-only components
/// `d_e`, `d_z`.
pub fn propagate_sample<'a>(
    irs: &ImpulseResponseSet,
    d_t: f64,
    y: &[f64],
    bank: &'a mut DelayLineBank,
) -> &'a MicSample {
    bank.noise.push(d_t);
    for (line, &ys) in bank.speakers.iter_mut().zip(y) {
        line.push(ys);
    }
    let noise = &bank.noise;
    let speakers = &bank.speakers;
    let mic = |primary: &[f64], secondary: &[Vec<f64>]| -> (f64, f64) {
        let d = noise.dot(primary);
        let control: f64 = secondary
            .iter()
            .zip(speakers)
            .map(|(g, line)| line.dot(g))
            .sum();
        (d, d + control)
    };
    for j in 0..bank.n_primary {
        let (d, e) = mic(&irs.p_e[j], &irs.g_e[j]);
        bank.out.d_e[j] = d;
        bank.out.e[j] = e;
    }
    for k in 0..bank.n_secondary {
        let (d, z) = mic(&irs.p_z[k], &irs.g_z[k]);
        bank.out.d_z[k] = d;
        bank.out.z[k] = z;
    }
    &bank.out
}

/// Modelled control contribution `sum_s (g_hat_{j,s} * y_s)[t]` at one mic,
/// using the speaker samples already pushed by [`propagate_sample`].
pub fn modelled_control(
    estimate: &ImpulseResponseSet,
    role: MicRole,
    mic: usize,
    bank: &DelayLineBank,
) -> f64 {
    (0..bank.layout.n_speakers)
        .map(|s| bank.speakers[s].dot(estimate.secondary_path(role, mic, s)))
        .sum()
}

/// Filter the current reference samples through the secondary-path estimates
/// and copy the resulting histories into `snap`.
///
/// The reference lines must already hold `x_r[t]` (see [`reference_step`]).
pub fn assemble_snapshot(
    estimate: &ImpulseResponseSet,
    bank: &mut DelayLineBank,
    t: usize,
    snap: &mut ReferenceSnapshot,
) {
    let layout = bank.layout;
    let fill = |role: MicRole,
                n_mics: usize,
                lines: &mut [DelayLine],
                refs: &[DelayLine],
                x: &mut DMatrix<f64>| {
        for m in 0..n_mics {
            for s in 0..layout.n_speakers {
                let g = estimate.secondary_path(role, m, s);
                for (r, reference) in refs.iter().enumerate() {
                    let line = &mut lines[(m * layout.n_speakers + s) * layout.n_refs + r];
                    line.push(reference.dot(g));
                    for (tau, &v) in line.history().iter().enumerate() {
                        x[(m, layout.index(s, r, tau))] = v;
                    }
                }
            }
        }
    };
    fill(
        MicRole::Primary,
        bank.n_primary,
        &mut bank.filtered_e,
        &bank.refs,
        &mut snap.x_e,
    );
    fill(
        MicRole::Secondary,
        bank.n_secondary,
        &mut bank.filtered_z,
        &bank.refs,
        &mut snap.x_z,
    );
    snap.t = t;
}
