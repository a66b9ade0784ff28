//! Frequency-domain data: periodograms, Welch smoothing, cutoff detection,
//! and block planning.
//!
//! Frequencies are indexed `k = 1..=K` with `ω_k = 2πk/T` and
//! `K = ⌊(T−1)/2⌋`; the zero frequency and `π` are never part of the grid.

use std::ops::Range;

use num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::Scalar;

/// `T × d` matrix of observations, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeries<T> {
    values: Vec<T>,
    n_obs: usize,
    dim: usize,
    label: String,
}

impl<T: Scalar> TimeSeries<T> {
    pub const MIN_LEN: usize = 4;

    /// Builds a series from row-major values with `dim` columns.
    pub fn new(values: Vec<T>, dim: usize, label: impl Into<String>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("series dimension must be >= 1".into()));
        }
        if !values.len().is_multiple_of(dim) {
            return Err(Error::InvalidInput(format!(
                "{} values do not split into rows of width {dim}",
                values.len()
            )));
        }
        let n_obs = values.len() / dim;
        if n_obs < Self::MIN_LEN {
            return Err(Error::InvalidInput(format!(
                "series needs at least {} observations, got {n_obs}",
                Self::MIN_LEN
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!(
                "observation {} column {}",
                pos / dim,
                pos % dim
            )));
        }
        Ok(Self {
            values,
            n_obs,
            dim,
            label: label.into(),
        })
    }

    pub fn univariate(values: Vec<T>, label: impl Into<String>) -> Result<Self> {
        Self::new(values, 1, label)
    }

    /// Builds a series from equal-length columns.
    pub fn from_columns(columns: &[Vec<T>], label: impl Into<String>) -> Result<Self> {
        let dim = columns.len();
        let n = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != n) {
            return Err(Error::InvalidInput("columns differ in length".into()));
        }
        let values = (0..n).flat_map(|t| columns.iter().map(move |c| c[t])).collect();
        Self::new(values, dim, label)
    }

    pub fn n_obs(&self) -> usize {
        self.n_obs
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn row(&self, t: usize) -> &[T] {
        &self.values[t * self.dim..(t + 1) * self.dim]
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        self.values.iter().skip(j).step_by(self.dim).copied().collect()
    }

    pub fn columns(&self) -> Vec<Vec<T>> {
        (0..self.dim).map(|j| self.column(j)).collect()
    }

    pub fn column_means(&self) -> Vec<T> {
        let n = T::from_usize_lossy(self.n_obs);
        (0..self.dim)
            .map(|j| self.values.iter().skip(j).step_by(self.dim).copied().sum::<T>() / n)
            .collect()
    }

    /// Copy with every column shifted to zero sample mean.
    pub fn demeaned(&self) -> Self {
        let means = self.column_means();
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(i, v)| *v - means[i % self.dim])
            .collect();
        Self {
            values,
            n_obs: self.n_obs,
            dim: self.dim,
            label: self.label.clone(),
        }
    }
}

/// One retained Fourier frequency with its trigonometric values cached.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FreqPoint<T> {
    /// 1-based index `k`.
    pub index: usize,
    pub omega: T,
    pub cos: T,
    pub sin: T,
}

impl<T: Scalar> FreqPoint<T> {
    pub fn new(index: usize, omega: T) -> Self {
        let (sin, cos) = omega.sin_cos();
        Self {
            index,
            omega,
            cos,
            sin,
        }
    }

    /// Frequency not tied to a grid position.
    pub fn at(omega: T) -> Self {
        Self::new(0, omega)
    }
}

/// Periodogram ordinate `I(ω_k)`: a `d × d` Hermitian matrix, row-major.
#[derive(Clone, Copy, Debug)]
pub struct Ordinate<'a, T> {
    dim: usize,
    entries: &'a [Complex<T>],
}

impl<'a, T: Scalar> Ordinate<'a, T> {
    pub fn new(dim: usize, entries: &'a [Complex<T>]) -> Self {
        assert_eq!(entries.len(), dim * dim, "ordinate entry count");
        Self { dim, entries }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> Complex<T> {
        self.entries[i * self.dim + j]
    }

    /// The real ordinate of a univariate series.
    pub fn scalar(&self) -> T {
        self.entries[0].re
    }

    pub fn entries(&self) -> &'a [Complex<T>] {
        self.entries
    }
}

/// Periodogram on the retained grid `k = 1..=K`.
#[derive(Clone, Debug)]
pub struct Periodogram<T> {
    n_obs: usize,
    dim: usize,
    freqs: Vec<FreqPoint<T>>,
    ordinates: Vec<Complex<T>>,
}

impl<T: Scalar> Periodogram<T> {
    /// Number of retained frequencies `K`.
    pub fn len(&self) -> usize {
        self.freqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs.is_empty()
    }

    pub fn n_obs(&self) -> usize {
        self.n_obs
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Frequency `k` (1-based).
    pub fn freq(&self, k: usize) -> &FreqPoint<T> {
        &self.freqs[k - 1]
    }

    pub fn freqs(&self) -> &[FreqPoint<T>] {
        &self.freqs
    }

    pub fn frequencies(&self) -> Vec<T> {
        self.freqs.iter().map(|f| f.omega).collect()
    }

    /// Ordinate `k` (1-based).
    pub fn ordinate(&self, k: usize) -> Ordinate<'_, T> {
        let n = self.dim * self.dim;
        Ordinate::new(self.dim, &self.ordinates[(k - 1) * n..k * n])
    }

    /// Builds a periodogram from explicit values (univariate), mainly for
    /// synthetic checks. `ordinates[k-1]` is `I(ω_k)` with `ω_k = 2πk/n_obs`.
    pub fn from_univariate(n_obs: usize, ordinates: &[T]) -> Result<Self> {
        let k_max = retained_len(n_obs);
        if ordinates.len() != k_max {
            return Err(Error::InvalidInput(format!(
                "expected {k_max} ordinates for T = {n_obs}, got {}",
                ordinates.len()
            )));
        }
        Ok(Self {
            n_obs,
            dim: 1,
            freqs: grid(n_obs),
            ordinates: ordinates.iter().map(|&v| Complex::new(v, T::zero())).collect(),
        })
    }

    /// Builds a periodogram from explicit `d × d` row-major ordinates.
    pub fn from_matrices(n_obs: usize, dim: usize, ordinates: Vec<Complex<T>>) -> Result<Self> {
        let k_max = retained_len(n_obs);
        if ordinates.len() != k_max * dim * dim {
            return Err(Error::InvalidInput(format!(
                "expected {} ordinate entries, got {}",
                k_max * dim * dim,
                ordinates.len()
            )));
        }
        Ok(Self {
            n_obs,
            dim,
            freqs: grid(n_obs),
            ordinates,
        })
    }
}

/// `K = ⌊(T−1)/2⌋`.
pub fn retained_len(n_obs: usize) -> usize {
    n_obs.saturating_sub(1) / 2
}

fn grid<T: Scalar>(n_obs: usize) -> Vec<FreqPoint<T>> {
    let step = T::TAU() / T::from_usize_lossy(n_obs);
    (1..=retained_len(n_obs))
        .map(|k| FreqPoint::new(k, step * T::from_usize_lossy(k)))
        .collect()
}

fn column_dft<T: Scalar>(planner: &mut FftPlanner<T>, column: &[T]) -> Vec<Complex<T>> {
    let mut buf: Vec<Complex<T>> = column.iter().map(|&v| Complex::new(v, T::zero())).collect();
    planner.plan_fft_forward(buf.len()).process(&mut buf);
    buf
}

/// Periodogram `I(ω_k) = J(ω_k) J(ω_k)ᴴ / T` of the column-demeaned series on
/// the retained grid.
///
/// The FFT sums from `t = 0`; the unit-modulus phase relative to a `t = 1`
/// origin is common to every component and cancels in `J Jᴴ`.
pub fn compute_periodogram<T: Scalar>(y: &TimeSeries<T>) -> Result<Periodogram<T>> {
    let z = y.demeaned();
    let n = z.n_obs();
    let d = z.dim();
    let mut planner = FftPlanner::new();
    let dfts: Vec<Vec<Complex<T>>> = z.columns().iter().map(|c| column_dft(&mut planner, c)).collect();
    let k_max = retained_len(n);
    let inv_n = T::one() / T::from_usize_lossy(n);
    let mut ordinates = Vec::with_capacity(k_max * d * d);
    for k in 1..=k_max {
        for i in 0..d {
            for j in 0..d {
                ordinates.push(dfts[i][k] * dfts[j][k].conj() * inv_n);
            }
        }
    }
    Ok(Periodogram {
        n_obs: n,
        dim: d,
        freqs: grid(n),
        ordinates,
    })
}

// ---------------------------------------------------------------------------
// Welch smoothing

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Window {
    Hann,
    Rectangular,
}

impl Window {
    fn weights<T: Scalar>(self, len: usize) -> Vec<T> {
        match self {
            Window::Rectangular => vec![T::one(); len],
            Window::Hann => {
                let n = T::from_usize_lossy(len);
                (0..len)
                    .map(|t| {
                        let x = T::TAU() * T::from_usize_lossy(t) / n;
                        T::lit(0.5) - T::lit(0.5) * x.cos()
                    })
                    .collect()
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WelchConfig {
    pub n_segments: usize,
    pub overlap: f64,
    pub window: Window,
}

impl Default for WelchConfig {
    fn default() -> Self {
        Self {
            n_segments: 8,
            overlap: 0.5,
            window: Window::Hann,
        }
    }
}

/// Welch-averaged power per series component.
#[derive(Clone, Debug, PartialEq)]
pub struct SmoothedSpectrum<T> {
    /// Length of the series the spectrum was estimated from.
    pub n_obs: usize,
    pub frequencies: Vec<T>,
    /// `power[j][i]` is the power of column `j` at `frequencies[i]`.
    pub power: Vec<Vec<T>>,
}

/// Averages windowed segment periodograms, per column.
///
/// Segments of length `L = ⌊T / (1 + (n−1)(1−overlap))⌋` start every
/// `⌊L(1−overlap)⌋` samples. Each segment periodogram is divided by `Σ w_t²`,
/// so white noise of variance `σ²` has expected power `σ²`.
pub fn welch_smooth<T: Scalar>(y: &TimeSeries<T>, cfg: &WelchConfig) -> Result<SmoothedSpectrum<T>> {
    if cfg.n_segments == 0 {
        return Err(Error::InvalidInput("n_segments must be >= 1".into()));
    }
    if !(0.0..1.0).contains(&cfg.overlap) {
        return Err(Error::InvalidInput(format!(
            "overlap fraction must lie in [0, 1), got {}",
            cfg.overlap
        )));
    }
    let n = y.n_obs();
    let span = 1.0 + (cfg.n_segments as f64 - 1.0) * (1.0 - cfg.overlap);
    let seg_len = (n as f64 / span).floor() as usize;
    if seg_len < TimeSeries::<T>::MIN_LEN {
        return Err(Error::InvalidInput(format!(
            "segment length {seg_len} < {} for T = {n} and {} segments",
            TimeSeries::<T>::MIN_LEN,
            cfg.n_segments
        )));
    }
    let step = ((seg_len as f64 * (1.0 - cfg.overlap)).floor() as usize).max(1);
    let weights: Vec<T> = cfg.window.weights(seg_len);
    let norm = weights.iter().map(|w| *w * *w).sum::<T>();
    let k_max = retained_len(seg_len);
    let z = y.demeaned();
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(seg_len);
    let mut power = vec![vec![T::zero(); k_max]; z.dim()];
    for (j, col) in z.columns().iter().enumerate() {
        for s in 0..cfg.n_segments {
            let start = s * step;
            let mut buf: Vec<Complex<T>> = col[start..start + seg_len]
                .iter()
                .zip(&weights)
                .map(|(v, w)| Complex::new(*v * *w, T::zero()))
                .collect();
            fft.process(&mut buf);
            for k in 1..=k_max {
                power[j][k - 1] = power[j][k - 1] + buf[k].norm_sqr() / norm;
            }
        }
        let count = T::from_usize_lossy(cfg.n_segments);
        for p in power[j].iter_mut() {
            *p = *p / count;
        }
    }
    let step_omega = T::TAU() / T::from_usize_lossy(seg_len);
    Ok(SmoothedSpectrum {
        n_obs: n,
        frequencies: (1..=k_max).map(|k| step_omega * T::from_usize_lossy(k)).collect(),
        power,
    })
}

/// Index on the retained periodogram grid where the smoothed power first
/// falls to `ratio × max` at or after its peak.
///
/// The crossing frequency is mapped to the nearest `ω_k = 2πk/T` of the
/// original series. For several columns the largest index wins. When power
/// never falls that far, returns `K` (no blocking).
pub fn find_cutoff<T: Scalar>(s: &SmoothedSpectrum<T>, ratio: T) -> usize {
    let k_max = retained_len(s.n_obs);
    let n = T::from_usize_lossy(s.n_obs);
    s.power
        .iter()
        .map(|col| {
            let Some((peak, max)) = col
                .iter()
                .copied()
                .enumerate()
                .fold(None, |best: Option<(usize, T)>, (i, p)| match best {
                    Some((_, m)) if m >= p => best,
                    _ => Some((i, p)),
                })
            else {
                return k_max;
            };
            let threshold = ratio * max;
            match (peak..col.len()).find(|&i| col[i] <= threshold) {
                Some(i) => {
                    let k = (s.frequencies[i] * n / T::TAU()).round().to_usize().unwrap_or(k_max);
                    k.clamp(1, k_max.max(1))
                }
                None => k_max,
            }
        })
        .max()
        .unwrap_or(k_max)
}

/// Partition of the frequency indices into an individually updated prefix and
/// balanced contiguous blocks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockPlan {
    pub n_individual: usize,
    /// Half-open ranges of 1-based frequency indices.
    pub blocks: Vec<Range<usize>>,
    pub block_size_target: usize,
}

impl BlockPlan {
    pub fn n_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn total_updates(&self) -> usize {
        self.n_individual + self.blocks.len()
    }
}

/// Splits `ñ+1..=K` into `⌈(K−ñ)/B⌉` blocks whose lengths differ by at most one.
pub fn make_block_plan(k_max: usize, n_individual: usize, block_size: usize) -> Result<BlockPlan> {
    if block_size == 0 {
        return Err(Error::InvalidInput("block size must be >= 1".into()));
    }
    if n_individual > k_max {
        return Err(Error::InvalidInput(format!(
            "n_individual {n_individual} exceeds K = {k_max}"
        )));
    }
    let rest = k_max - n_individual;
    let n_blocks = rest.div_ceil(block_size);
    let mut blocks = Vec::with_capacity(n_blocks);
    let mut start = n_individual + 1;
    for b in 0..n_blocks {
        let len = rest / n_blocks + usize::from(b < rest % n_blocks);
        blocks.push(start..start + len);
        start += len;
    }
    Ok(BlockPlan {
        n_individual,
        blocks,
        block_size_target: block_size,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Direct-sum DFT periodogram over the full symmetric grid.
    fn full_grid_direct(y: &[f64]) -> Vec<(i64, f64)> {
        let n = y.len() as i64;
        let mean = y.iter().sum::<f64>() / n as f64;
        let lo = -((n + 1) / 2) + 1;
        let hi = n / 2;
        (lo..=hi)
            .map(|k| {
                let w = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
                let (mut re, mut im) = (0.0, 0.0);
                for (t, v) in y.iter().enumerate() {
                    let a = w * (t + 1) as f64;
                    re += (v - mean) * a.cos();
                    im -= (v - mean) * a.sin();
                }
                (k, (re * re + im * im) / n as f64)
            })
            .collect()
    }

    #[test]
    fn zero_signal() {
        let y = TimeSeries::univariate(vec![0.0; 8], "zero").unwrap();
        let p = compute_periodogram(&y).unwrap();
        assert_eq!(p.len(), 3);
        assert!((1..=3).all(|k| p.ordinate(k).scalar() == 0.0));
    }

    #[test]
    fn alternating_signal() {
        let y = TimeSeries::univariate(vec![1.0, -1.0, 1.0, -1.0], "alt").unwrap();
        let p = compute_periodogram(&y).unwrap();
        assert_eq!(p.len(), 1);
        assert!((p.freq(1).omega - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
        assert!(p.ordinate(1).scalar().abs() < 1e-15);
        let full = full_grid_direct(&[1.0, -1.0, 1.0, -1.0]);
        let at_pi = full.iter().find(|(k, _)| *k == 2).unwrap().1;
        assert!((at_pi - 4.0).abs() < 1e-12);
    }

    #[test]
    fn matches_direct_sum() {
        let y: Vec<f64> = (0..37).map(|t| ((t * 7919) % 31) as f64 / 7.0 - 2.0).collect();
        let p = compute_periodogram(&TimeSeries::univariate(y.clone(), "x").unwrap()).unwrap();
        let full = full_grid_direct(&y);
        for k in 1..=p.len() {
            let direct = full.iter().find(|(j, _)| *j == k as i64).unwrap().1;
            assert!((p.ordinate(k).scalar() - direct).abs() < 1e-10);
        }
    }

    #[test]
    fn rejects_short_or_nonfinite() {
        assert!(TimeSeries::univariate(vec![1.0, 2.0, 3.0], "s").is_err());
        assert!(TimeSeries::univariate(vec![1.0, f64::NAN, 3.0, 4.0], "s").is_err());
        assert!(TimeSeries::new(vec![1.0; 7], 2, "s").is_err());
    }

    #[test]
    fn welch_degenerate_is_raw_periodogram() {
        let y: Vec<f64> = (0..50).map(|t| (t as f64 * 0.37).sin() + 0.1 * t as f64).collect();
        let ts = TimeSeries::univariate(y, "x").unwrap();
        let raw = compute_periodogram(&ts).unwrap();
        let cfg = WelchConfig {
            n_segments: 1,
            overlap: 0.0,
            window: Window::Rectangular,
        };
        let s = welch_smooth(&ts, &cfg).unwrap();
        assert_eq!(s.frequencies.len(), raw.len());
        for k in 1..=raw.len() {
            assert!((s.power[0][k - 1] - raw.ordinate(k).scalar()).abs() < 1e-10);
            assert!((s.frequencies[k - 1] - raw.freq(k).omega).abs() < 1e-14);
        }
    }

    #[test]
    fn welch_zero_and_errors() {
        let ts = TimeSeries::univariate(vec![0.0; 64], "z").unwrap();
        let s = welch_smooth(&ts, &WelchConfig::default()).unwrap();
        assert!(s.power[0].iter().all(|p| *p == 0.0));
        let bad = WelchConfig {
            n_segments: 40,
            ..WelchConfig::default()
        };
        assert!(welch_smooth(&ts, &bad).is_err());
        let bad_overlap = WelchConfig {
            overlap: 1.0,
            ..WelchConfig::default()
        };
        assert!(welch_smooth(&ts, &bad_overlap).is_err());
    }

    fn spectrum(power: Vec<f64>, n_obs: usize) -> SmoothedSpectrum<f64> {
        let freqs = (1..=power.len())
            .map(|k| std::f64::consts::TAU * k as f64 / n_obs as f64)
            .collect();
        SmoothedSpectrum {
            n_obs,
            frequencies: freqs,
            power: vec![power],
        }
    }

    #[test]
    fn cutoff_first_crossing() {
        let s = spectrum(vec![4.0, 3.0, 2.0, 1.9, 1.5], 11);
        assert_eq!(find_cutoff(&s, 0.5), 3);
    }

    #[test]
    fn cutoff_flat_is_k() {
        let s = spectrum(vec![1.0; 5], 11);
        assert_eq!(find_cutoff(&s, 0.5), 5);
    }

    #[test]
    fn cutoff_uses_highest_column() {
        let mut s = spectrum(vec![4.0, 3.0, 1.0, 1.0, 1.0], 11);
        s.power.push(vec![1.0, 4.0, 3.0, 2.5, 1.0]);
        assert_eq!(find_cutoff(&s, 0.5), 5);
    }

    #[test]
    fn cutoff_maps_to_raw_grid() {
        // Smoothed grid at 2πi/10, series of length 101: ω = 2π·3/10 ↔ k = 30.
        let s = SmoothedSpectrum {
            n_obs: 101,
            frequencies: (1..=4).map(|i| std::f64::consts::TAU * i as f64 / 10.0).collect(),
            power: vec![vec![5.0, 4.0, 2.0, 1.0]],
        };
        assert_eq!(find_cutoff(&s, 0.5), 30);
    }

    #[test]
    fn block_plans() {
        let p = make_block_plan(4999, 75, 100).unwrap();
        assert_eq!(p.n_blocks(), 50);
        assert_eq!(p.total_updates(), 125);
        let p = make_block_plan(10, 10, 3).unwrap();
        assert_eq!(p.n_blocks(), 0);
        let p = make_block_plan(10, 4, 3).unwrap();
        assert_eq!(p.blocks, vec![5..8, 8..11]);
        assert!(make_block_plan(10, 11, 3).is_err());
        assert!(make_block_plan(10, 1, 0).is_err());
    }
}
