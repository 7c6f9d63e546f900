//! Seeded fractional Brownian motion and fractional Ornstein-Uhlenbeck paths.
//!
//! Fractional Gaussian noise is drawn exactly with the Davies-Harte circulant
//! embedding. When the embedding is not non-negative definite for the
//! requested `(n, H)` the generator falls back to a Cholesky factorisation of
//! the increment covariance and says so in [`SamplePath::meta`].
//!
//! Every path owns an independent random stream: ChaCha8 seeded through
//! `seed_from_u64(base_seed + path_index)`, with standard normals from the
//! ziggurat sampler of `rand_distr::StandardNormal`.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::csv::CsvBuffer;
use crate::error::{require_finite, require_hurst, require_positive, Error, Result};
use crate::numerics::{cholesky, ols_slope, pairwise_sum_rows};

pub const PRNG_LABEL: &str = "chacha8(seed_from_u64)";
pub const NORMAL_LABEL: &str = "ziggurat(rand_distr::StandardNormal)";

/// Relative size of a negative circulant eigenvalue that is still treated as
/// round-off and clipped to zero.
const EIGEN_CLIP: f64 = 1e-10;

/// Parameters of `dP = kappa (P - level) dt + sigma dB^H`.
///
/// The drift is used exactly as written: with `kappa > 0` the price is pushed
/// away from `level`, mean reversion needs `kappa < 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FouParams {
    pub kappa: f64,
    pub level: f64,
    pub sigma: f64,
    pub hurst: f64,
}

impl FouParams {
    pub fn new(kappa: f64, level: f64, sigma: f64, hurst: f64) -> Result<Self> {
        let params = Self {
            kappa,
            level,
            sigma,
            hurst,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        require_finite("kappa", self.kappa)?;
        require_finite("level", self.level)?;
        require_positive("sigma", self.sigma)?;
        require_hurst(self.hurst)
    }
}

/// A realisation on a uniform time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePath {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub seed: u64,
    pub meta: String,
}

impl SamplePath {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn dt(&self) -> f64 {
        if self.times.len() < 2 {
            0.0
        } else {
            self.times[1] - self.times[0]
        }
    }

    pub fn terminal(&self) -> f64 {
        *self.values.last().expect("sample paths are never empty")
    }

    pub fn increments(&self) -> Vec<f64> {
        self.values.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Keeps every `stride`-th point, so a fine path can drive a coarser
    /// scheme with the same underlying noise.
    pub fn subsample(&self, stride: usize) -> Result<SamplePath> {
        if stride == 0 || !(self.len() - 1).is_multiple_of(stride) {
            return Err(Error::domain(format!(
                "stride {stride} does not divide {} steps",
                self.len() - 1
            )));
        }
        let steps = (self.len() - 1) / stride;
        let dt = self.dt() * stride as f64;
        Ok(SamplePath {
            times: uniform_times(steps, dt),
            values: self.values.iter().step_by(stride).copied().collect(),
            seed: self.seed,
            meta: format!("{};subsample={stride}", self.meta),
        })
    }

    /// `t,value` CSV.
    pub fn to_csv(&self) -> String {
        let mut buf = CsvBuffer::with_header(&["t", "value"]);
        for (t, v) in self.times.iter().zip(&self.values) {
            buf.push_floats(&[*t, *v]);
        }
        buf.into_string()
    }
}

fn uniform_times(n_steps: usize, dt: f64) -> Vec<f64> {
    (0..=n_steps).map(|i| i as f64 * dt).collect()
}

/// Seed of the `index`-th path in a batch.
pub fn path_seed(base_seed: u64, index: u64) -> u64 {
    base_seed.wrapping_add(index)
}

/// `Cov(B^H_s, B^H_t) = (s^{2H} + t^{2H} - |t - s|^{2H}) / 2`.
pub fn fbm_covariance(s: f64, t: f64, hurst: f64) -> Result<f64> {
    require_hurst(hurst)?;
    if !(s >= 0.0 && t >= 0.0) {
        return Err(Error::domain(format!(
            "fbm covariance needs s, t >= 0, got s={s}, t={t}"
        )));
    }
    let h2 = 2.0 * hurst;
    Ok(0.5 * (s.powf(h2) + t.powf(h2) - (t - s).abs().powf(h2)))
}

/// Autocovariance of unit-step fractional Gaussian noise at lag `k`.
fn fgn_autocovariance(k: usize, hurst: f64) -> f64 {
    let h2 = 2.0 * hurst;
    let k = k as f64;
    0.5 * ((k + 1.0).powf(h2) - 2.0 * k.powf(h2) + (k - 1.0).abs().powf(h2))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FbmMethod {
    DaviesHarte,
    Cholesky,
}

impl FbmMethod {
    pub fn label(self) -> &'static str {
        match self {
            FbmMethod::DaviesHarte => "davies-harte",
            FbmMethod::Cholesky => "cholesky",
        }
    }
}

enum Kernel {
    Circulant {
        /// `sqrt(lambda_k / m)` for the `m = 2n` circulant eigenvalues.
        weights: Vec<f64>,
        fft: Arc<dyn Fft<f64>>,
    },
    Cholesky {
        factor: Vec<f64>,
    },
}

/// Precomputed fBM sampler for a fixed `(n_steps, dt, hurst)`.
pub struct FbmGenerator {
    n_steps: usize,
    dt: f64,
    hurst: f64,
    method: FbmMethod,
    fallback: Option<String>,
    kernel: Kernel,
}

impl std::fmt::Debug for FbmGenerator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FbmGenerator")
            .field("n_steps", &self.n_steps)
            .field("dt", &self.dt)
            .field("hurst", &self.hurst)
            .field("method", &self.method)
            .field("fallback", &self.fallback)
            .finish()
    }
}

impl FbmGenerator {
    /// Davies-Harte, falling back to Cholesky on a negative eigenvalue.
    pub fn new(n_steps: usize, dt: f64, hurst: f64) -> Result<Self> {
        validate_grid(n_steps, dt, hurst)?;
        let eigenvalues = circulant_eigenvalues(n_steps, hurst);
        match embedding_defect(&eigenvalues) {
            None => Ok(Self::circulant(n_steps, dt, hurst, &eigenvalues)),
            Some(min) => {
                let mut gen = Self::cholesky(n_steps, dt, hurst)?;
                gen.fallback = Some(format!(
                    "davies-harte embedding has eigenvalue {min:e}"
                ));
                Ok(gen)
            }
        }
    }

    /// Forces a specific method, without fallback.
    pub fn with_method(n_steps: usize, dt: f64, hurst: f64, method: FbmMethod) -> Result<Self> {
        validate_grid(n_steps, dt, hurst)?;
        match method {
            FbmMethod::DaviesHarte => {
                let eigenvalues = circulant_eigenvalues(n_steps, hurst);
                if let Some(min) = embedding_defect(&eigenvalues) {
                    return Err(Error::Generation {
                        method: FbmMethod::DaviesHarte.label(),
                        reason: format!("circulant embedding has eigenvalue {min:e}"),
                    });
                }
                Ok(Self::circulant(n_steps, dt, hurst, &eigenvalues))
            }
            FbmMethod::Cholesky => Self::cholesky(n_steps, dt, hurst),
        }
    }

    fn circulant(n_steps: usize, dt: f64, hurst: f64, eigenvalues: &[f64]) -> Self {
        let m = eigenvalues.len() as f64;
        let weights = eigenvalues.iter().map(|l| (l.max(0.0) / m).sqrt()).collect();
        let fft = FftPlanner::new().plan_fft_forward(eigenvalues.len());
        Self {
            n_steps,
            dt,
            hurst,
            method: FbmMethod::DaviesHarte,
            fallback: None,
            kernel: Kernel::Circulant { weights, fft },
        }
    }

    fn cholesky(n_steps: usize, dt: f64, hurst: f64) -> Result<Self> {
        let n = n_steps;
        let gamma: Vec<f64> = (0..n).map(|k| fgn_autocovariance(k, hurst)).collect();
        let mut cov = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                cov[i * n + j] = gamma[i.abs_diff(j)];
            }
        }
        let factor = cholesky(&cov, n)?;
        Ok(Self {
            n_steps,
            dt,
            hurst,
            method: FbmMethod::Cholesky,
            fallback: None,
            kernel: Kernel::Cholesky { factor },
        })
    }

    pub fn method(&self) -> FbmMethod {
        self.method
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn hurst(&self) -> f64 {
        self.hurst
    }

    pub fn meta(&self) -> String {
        let method = match &self.fallback {
            None => self.method.label().to_string(),
            Some(why) => format!("{}(fallback: {why})", self.method.label()),
        };
        format!("fbm;method={method};prng={PRNG_LABEL};normal={NORMAL_LABEL}")
    }

    /// Fractional Gaussian noise increments `B(t_{i+1}) - B(t_i)`.
    pub fn increments(&self, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scale = self.dt.powf(self.hurst);
        let n = self.n_steps;
        match &self.kernel {
            Kernel::Circulant { weights, fft } => {
                // Real part of FFT(sqrt(lambda/m) * (a + ib)) has exactly the
                // circulant covariance; its first n entries are the fGn.
                let mut buf: Vec<Complex<f64>> = weights
                    .iter()
                    .map(|w| {
                        let re: f64 = StandardNormal.sample(&mut rng);
                        let im: f64 = StandardNormal.sample(&mut rng);
                        Complex::new(w * re, w * im)
                    })
                    .collect();
                fft.process(&mut buf);
                buf[..n].iter().map(|c| c.re * scale).collect()
            }
            Kernel::Cholesky { factor } => {
                let z: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
                (0..n)
                    .map(|i| {
                        let row = &factor[i * n..i * n + i + 1];
                        row.iter().zip(&z).map(|(l, z)| l * z).sum::<f64>() * scale
                    })
                    .collect()
            }
        }
    }

    pub fn sample(&self, seed: u64) -> SamplePath {
        let mut values = Vec::with_capacity(self.n_steps + 1);
        let mut acc = 0.0;
        values.push(acc);
        for dx in self.increments(seed) {
            acc += dx;
            values.push(acc);
        }
        SamplePath {
            times: uniform_times(self.n_steps, self.dt),
            values,
            seed,
            meta: self.meta(),
        }
    }

    /// `n_paths` paths with seeds `base_seed + i`, generated in parallel and
    /// returned in index order.
    pub fn sample_batch(&self, base_seed: u64, n_paths: usize) -> Vec<SamplePath> {
        (0..n_paths as u64)
            .into_par_iter()
            .map(|i| self.sample(path_seed(base_seed, i)))
            .collect()
    }
}

fn validate_grid(n_steps: usize, dt: f64, hurst: f64) -> Result<()> {
    if n_steps == 0 {
        return Err(Error::domain("n_steps must be >= 1"));
    }
    require_positive("dt", dt)?;
    require_hurst(hurst)
}

/// Eigenvalues of the `2n` circulant matrix embedding the fGn covariance.
fn circulant_eigenvalues(n: usize, hurst: f64) -> Vec<f64> {
    let m = 2 * n;
    let mut row: Vec<Complex<f64>> = Vec::with_capacity(m);
    row.extend((0..=n).map(|k| Complex::new(fgn_autocovariance(k, hurst), 0.0)));
    row.extend((1..n).rev().map(|k| Complex::new(fgn_autocovariance(k, hurst), 0.0)));
    FftPlanner::new().plan_fft_forward(m).process(&mut row);
    row.into_iter().map(|c| c.re).collect()
}

/// The most negative eigenvalue if it is beyond round-off, else `None`.
fn embedding_defect(eigenvalues: &[f64]) -> Option<f64> {
    let max = eigenvalues.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    let min = eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    (min < -EIGEN_CLIP * max).then_some(min)
}

/// One fBM path on `t = i * dt`, `i = 0..=n_steps`, starting at zero.
pub fn generate_fbm(n_steps: usize, dt: f64, hurst: f64, seed: u64) -> Result<SamplePath> {
    Ok(FbmGenerator::new(n_steps, dt, hurst)?.sample(seed))
}

/// Euler scheme for the fOU price driven by its own fBM path.
pub fn simulate_fou(
    params: &FouParams,
    p0: f64,
    n_steps: usize,
    dt: f64,
    seed: u64,
) -> Result<SamplePath> {
    params.validate()?;
    let driver = generate_fbm(n_steps, dt, params.hurst, seed)?;
    simulate_fou_with_driver(params, p0, &driver)
}

/// Euler scheme `P_{i+1} = P_i + kappa (P_i - K) dt + sigma (B_{i+1} - B_i)`
/// on the grid of an existing driver path.
pub fn simulate_fou_with_driver(
    params: &FouParams,
    p0: f64,
    driver: &SamplePath,
) -> Result<SamplePath> {
    params.validate()?;
    require_finite("p0", p0)?;
    let dt = driver.dt();
    let mut values = Vec::with_capacity(driver.len());
    let mut p = p0;
    values.push(p);
    for db in driver.increments() {
        p += params.kappa * (p - params.level) * dt + params.sigma * db;
        values.push(p);
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::domain(format!("price path diverged at index {i}")));
    }
    Ok(SamplePath {
        times: driver.times.clone(),
        values,
        seed: driver.seed,
        meta: format!("fou-euler;{}", driver.meta),
    })
}

/// Cross-path sample variance of `B(t_i)` for `i = 1..=n_steps`.
pub fn variance_profile(gen: &FbmGenerator, base_seed: u64, n_paths: usize) -> Result<Vec<f64>> {
    if n_paths < 2 {
        return Err(Error::domain("variance profile needs at least two paths"));
    }
    let rows: Vec<(Vec<f64>, Vec<f64>)> = (0..n_paths as u64)
        .into_par_iter()
        .map(|i| {
            let path = gen.sample(path_seed(base_seed, i));
            let squares = path.values.iter().map(|v| v * v).collect();
            (path.values, squares)
        })
        .collect();
    let (sums, squares): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
    let s1 = pairwise_sum_rows(&sums);
    let s2 = pairwise_sum_rows(&squares);
    let n = n_paths as f64;
    Ok(s1
        .iter()
        .zip(&s2)
        .skip(1)
        .map(|(a, b)| (b - a * a / n) / (n - 1.0))
        .collect())
}

/// Log-log slope of the variance profile against time; `2H` in expectation.
pub fn variance_scaling_exponent(gen: &FbmGenerator, base_seed: u64, n_paths: usize) -> Result<f64> {
    let var = variance_profile(gen, base_seed, n_paths)?;
    let log_t: Vec<f64> = (1..=gen.n_steps()).map(|i| (i as f64 * gen.dt()).ln()).collect();
    let log_v: Vec<f64> = var.iter().map(|v| v.ln()).collect();
    ols_slope(&log_t, &log_v)
}
