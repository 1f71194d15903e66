//! Exact fractional Brownian motion sampling.
//!
//! Two samplers are provided:
//!
//! * [`CirculantFbm`] draws fBm on a regular grid by circulant embedding of
//!   fractional Gaussian noise (Davies–Harte / Wood–Chan) and a cumulative
//!   sum. Cost is `O(m log m)` per path with `m ≥ 2n` the embedding size.
//! * [`DenseFbm`] draws fBm at an arbitrary finite point set from a Cholesky
//!   factor of the covariance matrix, `O(n³)` once per point set.
//!
//! For `H = 1/2` both fall back to independent Gaussian increments, which is
//! the same law.

use std::sync::Arc;

use rand::RngCore;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, Lane};
use crate::scalar::Scalar;

/// Eigenvalues of the circulant embedding above `-TOL_EIG` are clamped to 0.
pub const TOL_EIG: f64 = 1e-12;
/// Relative diagonal jitter tried first when a covariance is not numerically PD.
pub const TOL_JITTER: f64 = 1e-12;
/// Jitter is multiplied by 10 at most this many times.
pub const JITTER_ESCALATIONS: u32 = 3;
/// Point-count cap of the dense sampler.
pub const N_MAX: usize = 4096;

/// Hurst index in the open interval (0, 1).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64", bound = "T: Scalar")]
pub struct Hurst<T>(T);

impl<T: Scalar> Hurst<T> {
    pub fn new(h: T) -> Result<Self> {
        if h > T::zero() && h < T::one() {
            Ok(Hurst(h))
        } else {
            Err(Error::invalid("h", format!("Hurst index must lie in (0, 1), got {h}")))
        }
    }

    #[inline]
    pub fn value(self) -> T {
        self.0
    }

    pub fn is_brownian(self) -> bool {
        self.0 == T::lit(0.5)
    }
}

impl<T: Scalar> TryFrom<f64> for Hurst<T> {
    type Error = Error;
    fn try_from(h: f64) -> Result<Self> {
        Hurst::new(T::lit(h))
    }
}

impl<T: Scalar> From<Hurst<T>> for f64 {
    fn from(h: Hurst<T>) -> f64 {
        h.0.to_f64_lossy()
    }
}

/// Regular grid `{0, dt, …, n·dt}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid<T> {
    n: usize,
    dt: T,
}

impl<T: Scalar> TimeGrid<T> {
    pub fn new(n: usize, dt: T) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("n", "grid needs at least one step"));
        }
        if !(dt > T::zero()) || !dt.is_finite() {
            return Err(Error::invalid("dt", format!("step must be positive, got {dt}")));
        }
        Ok(TimeGrid { n, dt })
    }

    pub fn steps(&self) -> usize {
        self.n
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    pub fn horizon(&self) -> T {
        self.time(self.n)
    }

    #[inline]
    pub fn time(&self, k: usize) -> T {
        T::from_usize(k).expect("grid index") * self.dt
    }

    /// All `n + 1` grid points including the origin.
    pub fn times(&self) -> Vec<T> {
        (0..=self.n).map(|k| self.time(k)).collect()
    }
}

/// Strictly increasing finite set of non-negative times.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet<T> {
    times: Vec<T>,
}

impl<T: Scalar> PointSet<T> {
    pub fn new(times: Vec<T>) -> Result<Self> {
        if let Some(bad) = times.iter().find(|t| !t.is_finite() || **t < T::zero()) {
            return Err(Error::invalid("times", format!("times must be finite and non-negative, got {bad}")));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("times", "times must be strictly increasing"));
        }
        Ok(PointSet { times })
    }

    pub fn times(&self) -> &[T] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn into_vec(self) -> Vec<T> {
        self.times
    }
}

/// A realization of `B_H` on a point set.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSample<T> {
    pub times: PointSet<T>,
    pub values: Vec<T>,
    pub seed: u64,
}

/// `Cov(B_H(s), B_H(t)) = ½(t^{2H} + s^{2H} − |t − s|^{2H})`.
#[inline]
pub fn fbm_cov<T: Scalar>(s: T, t: T, h: Hurst<T>) -> T {
    let two_h = h.value() + h.value();
    let half = T::lit(0.5);
    half * (pow_nonneg(t, two_h) + pow_nonneg(s, two_h) - pow_nonneg((t - s).abs(), two_h))
}

#[inline]
fn pow_nonneg<T: Scalar>(x: T, p: T) -> T {
    if x == T::zero() {
        T::zero()
    } else {
        x.powf(p)
    }
}

/// Autocovariance of unit-step fractional Gaussian noise at lag `k`.
fn fgn_autocov<T: Scalar>(k: usize, h: Hurst<T>) -> T {
    let two_h = h.value() + h.value();
    let k = T::from_usize(k).expect("lag");
    let half = T::lit(0.5);
    half * (pow_nonneg((k + T::one()).abs(), two_h) - T::lit(2.0) * pow_nonneg(k, two_h)
        + pow_nonneg((k - T::one()).abs(), two_h))
}

#[inline]
fn normal<T: Scalar, R: RngCore + ?Sized>(rng: &mut R) -> T {
    T::lit(rng::standard_normal(rng))
}

/// Scratch buffers for [`CirculantFbm`], reusable across paths.
#[derive(Debug, Default)]
pub struct CirculantWorkspace<T> {
    buffer: Vec<Complex<T>>,
    scratch: Vec<Complex<T>>,
}

/// Precomputed circulant-embedding sampler for one grid and Hurst index.
#[derive(Clone)]
pub struct CirculantFbm<T: Scalar> {
    grid: TimeGrid<T>,
    h: Hurst<T>,
    embedding: usize,
    /// Per-frequency standard deviations of the spectral coefficients.
    scales: Vec<T>,
    fft: Option<Arc<dyn Fft<T>>>,
}

impl<T: Scalar> std::fmt::Debug for CirculantFbm<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CirculantFbm")
            .field("grid", &self.grid)
            .field("h", &self.h)
            .field("embedding", &self.embedding)
            .finish()
    }
}

impl<T: Scalar> CirculantFbm<T> {
    /// Uses the smallest power-of-two embedding of size at least `2n`.
    pub fn new(grid: TimeGrid<T>, h: Hurst<T>) -> Result<Self> {
        let size = 2 * grid.steps().next_power_of_two();
        Self::with_embedding(grid, h, size)
    }

    pub fn with_embedding(grid: TimeGrid<T>, h: Hurst<T>, embedding: usize) -> Result<Self> {
        if h.is_brownian() {
            return Ok(CirculantFbm { grid, h, embedding: 0, scales: Vec::new(), fft: None });
        }
        let n = grid.steps();
        if embedding < 2 * n || !embedding.is_multiple_of(2) {
            return Err(Error::invalid("embedding", format!("need an even size >= {}, got {embedding}", 2 * n)));
        }
        let half = embedding / 2;
        let mut row: Vec<Complex<T>> = (0..embedding)
            .map(|k| {
                let lag = if k <= half { k } else { embedding - k };
                Complex::new(fgn_autocov(lag, h), T::zero())
            })
            .collect();
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(embedding);
        fft.process(&mut row);

        let tol = T::lit(TOL_EIG);
        let min = row.iter().map(|c| c.re).fold(T::infinity(), T::min);
        if min < -tol {
            return Err(Error::EmbeddingNotPsd { size: embedding, min_eigenvalue: min.to_f64_lossy() });
        }
        let m = T::from_usize(embedding).expect("size");
        let scales = row
            .iter()
            .enumerate()
            .map(|(k, c)| {
                let lambda = c.re.max(T::zero());
                if k == 0 || k == half {
                    (lambda / m).sqrt()
                } else {
                    (lambda / (m + m)).sqrt()
                }
            })
            .collect();
        Ok(CirculantFbm { grid, h, embedding, scales, fft: Some(fft) })
    }

    pub fn grid(&self) -> TimeGrid<T> {
        self.grid
    }

    pub fn hurst(&self) -> Hurst<T> {
        self.h
    }

    pub fn embedding_size(&self) -> usize {
        self.embedding
    }

    /// Writes the `n + 1` path values (starting with `B_H(0) = 0`) into `out`.
    pub fn sample_into<R: RngCore + ?Sized>(&self, rng: &mut R, ws: &mut CirculantWorkspace<T>, out: &mut Vec<T>) {
        let n = self.grid.steps();
        out.clear();
        out.reserve(n + 1);
        out.push(T::zero());
        let step_scale = self.grid.dt().powf(self.h.value());
        let Some(fft) = &self.fft else {
            let mut acc = T::zero();
            for _ in 0..n {
                acc = acc + step_scale * normal::<T, R>(rng);
                out.push(acc);
            }
            return;
        };

        let m = self.embedding;
        let half = m / 2;
        ws.buffer.clear();
        ws.buffer.resize(m, Complex::new(T::zero(), T::zero()));
        ws.buffer[0] = Complex::new(self.scales[0] * normal::<T, R>(rng), T::zero());
        ws.buffer[half] = Complex::new(self.scales[half] * normal::<T, R>(rng), T::zero());
        for k in 1..half {
            let re = self.scales[k] * normal::<T, R>(rng);
            let im = self.scales[k] * normal::<T, R>(rng);
            ws.buffer[k] = Complex::new(re, im);
            ws.buffer[m - k] = Complex::new(re, -im);
        }
        let scratch_len = fft.get_inplace_scratch_len();
        if ws.scratch.len() < scratch_len {
            ws.scratch.resize(scratch_len, Complex::new(T::zero(), T::zero()));
        }
        fft.process_with_scratch(&mut ws.buffer, &mut ws.scratch[..scratch_len]);

        let mut acc = T::zero();
        for c in &ws.buffer[..n] {
            acc = acc + step_scale * c.re;
            out.push(acc);
        }
    }

    pub fn sample_with<R: RngCore + ?Sized>(&self, rng: &mut R) -> Vec<T> {
        let mut out = Vec::new();
        self.sample_into(rng, &mut CirculantWorkspace::default(), &mut out);
        out
    }
}

/// Exact fBm sample on a regular grid, deterministic in `(grid, h, seed)`.
pub fn sample_fbm_grid<T: Scalar>(grid: TimeGrid<T>, h: Hurst<T>, seed: u64) -> Result<PathSample<T>> {
    let sampler = CirculantFbm::new(grid, h)?;
    let values = sampler.sample_with(&mut rng::stream(seed, 0, Lane::Gaussian));
    Ok(PathSample { times: PointSet { times: grid.times() }, values, seed })
}

/// Cholesky-based sampler for a fixed point set.
#[derive(Debug, Clone)]
pub struct DenseFbm<T> {
    times: Vec<T>,
    /// Index of the first strictly positive time.
    first_positive: usize,
    kind: DenseKind<T>,
    jitter: T,
}

#[derive(Debug, Clone)]
enum DenseKind<T> {
    /// Row-major packed lower-triangular factor of the covariance of the
    /// positive points.
    Cholesky(Vec<T>),
    /// `H = 1/2`: square roots of the consecutive time gaps.
    Increments(Vec<T>),
}

impl<T: Scalar> DenseFbm<T> {
    pub fn new(points: &PointSet<T>, h: Hurst<T>) -> Result<Self> {
        Self::with_cap(points, h, N_MAX)
    }

    pub fn with_cap(points: &PointSet<T>, h: Hurst<T>, cap: usize) -> Result<Self> {
        let times = points.times().to_vec();
        if times.len() > cap {
            return Err(Error::TooManyPoints { count: times.len(), cap });
        }
        let first_positive = times.iter().position(|t| *t > T::zero()).unwrap_or(times.len());
        let positive = &times[first_positive..];
        if h.is_brownian() {
            let mut prev = T::zero();
            let gaps = positive
                .iter()
                .map(|&t| {
                    let g = (t - prev).sqrt();
                    prev = t;
                    g
                })
                .collect();
            return Ok(DenseFbm { times, first_positive, kind: DenseKind::Increments(gaps), jitter: T::zero() });
        }
        let n = positive.len();
        let mut cov = vec![T::zero(); n * (n + 1) / 2];
        let mut max_diag = T::zero();
        for i in 0..n {
            for j in 0..=i {
                let v = fbm_cov(positive[i], positive[j], h);
                cov[i * (i + 1) / 2 + j] = v;
            }
            max_diag = max_diag.max(cov[i * (i + 1) / 2 + i]);
        }
        let mut jitter = T::zero();
        let mut attempt = cholesky_packed(&cov, n, jitter);
        let mut escalation = 0;
        while attempt.is_none() && escalation <= JITTER_ESCALATIONS {
            jitter = T::lit(TOL_JITTER) * max_diag * T::lit(10f64.powi(escalation as i32));
            attempt = cholesky_packed(&cov, n, jitter);
            escalation += 1;
        }
        match attempt {
            Some(l) => Ok(DenseFbm { times, first_positive, kind: DenseKind::Cholesky(l), jitter }),
            None => Err(Error::FactorizationFailure { size: n, jitter: jitter.to_f64_lossy() }),
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Diagonal jitter that was needed for the factorization (0 if none).
    pub fn jitter(&self) -> T {
        self.jitter
    }

    pub fn sample_into<R: RngCore + ?Sized>(&self, rng: &mut R, out: &mut Vec<T>) {
        out.clear();
        out.resize(self.first_positive, T::zero());
        match &self.kind {
            DenseKind::Increments(gaps) => {
                let mut acc = T::zero();
                for &g in gaps {
                    acc = acc + g * normal::<T, R>(rng);
                    out.push(acc);
                }
            }
            DenseKind::Cholesky(l) => {
                let n = self.times.len() - self.first_positive;
                let z: Vec<T> = (0..n).map(|_| normal::<T, R>(rng)).collect();
                for i in 0..n {
                    let row = &l[i * (i + 1) / 2..i * (i + 1) / 2 + i + 1];
                    let v = row.iter().zip(&z).fold(T::zero(), |acc, (a, b)| acc + *a * *b);
                    out.push(v);
                }
            }
        }
    }
}

/// Packed lower-triangular Cholesky factor of `a + jitter·I`; `None` if a
/// pivot is not positive.
fn cholesky_packed<T: Scalar>(a: &[T], n: usize, jitter: T) -> Option<Vec<T>> {
    let mut l = vec![T::zero(); a.len()];
    for i in 0..n {
        let ri = i * (i + 1) / 2;
        for j in 0..=i {
            let rj = j * (j + 1) / 2;
            let mut sum = a[ri + j];
            for k in 0..j {
                sum = sum - l[ri + k] * l[rj + k];
            }
            if i == j {
                let d = sum + jitter;
                if !(d > T::zero()) {
                    return None;
                }
                l[ri + i] = d.sqrt();
            } else {
                l[ri + j] = sum / l[rj + j];
            }
        }
    }
    Some(l)
}

/// Exact joint sample of `B_H` at the given points.
pub fn sample_fbm_points<T: Scalar>(points: PointSet<T>, h: Hurst<T>, seed: u64) -> Result<PathSample<T>> {
    let sampler = DenseFbm::new(&points, h)?;
    let mut values = Vec::with_capacity(points.len());
    sampler.sample_into(&mut rng::stream(seed, 0, Lane::Gaussian), &mut values);
    Ok(PathSample { times: points, values, seed })
}
