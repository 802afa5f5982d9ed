//! Chunked, order-fixed Monte Carlo over Haar samples.
//!
//! Samples are grouped into chunks keyed by chunk index; chunks run in
//! parallel and are merged in index order, so results do not depend on
//! the number of worker threads.

use crate::haar::{sample_block, EnsembleKind, Method, SamplerConfig, SpectrumSample};
use crate::{c, Error, Result, C64};
use rayon::prelude::*;

pub const DEFAULT_CHUNK: usize = 1000;

/// Streaming mean and second moment for a complex variable.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Welford {
    pub count: u64,
    mean: C64,
    m2_re: f64,
    m2_im: f64,
}

impl Welford {
    pub fn push(&mut self, x: C64) {
        self.count += 1;
        let d = x - self.mean;
        self.mean += d / self.count as f64;
        let d2 = x - self.mean;
        self.m2_re += d.re * d2.re;
        self.m2_im += d.im * d2.im;
    }

    /// Chan et al. pairwise combination.
    pub fn merge(&mut self, other: &Welford) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let n = (self.count + other.count) as f64;
        let (na, nb) = (self.count as f64, other.count as f64);
        let d = other.mean - self.mean;
        self.mean += d * (nb / n);
        self.m2_re += other.m2_re + d.re * d.re * na * nb / n;
        self.m2_im += other.m2_im + d.im * d.im * na * nb / n;
        self.count += other.count;
    }

    pub fn mean(&self) -> C64 {
        self.mean
    }

    pub fn estimate(&self) -> MCEstimate {
        let n = self.count as f64;
        let (sr, si) = if self.count > 1 {
            ((self.m2_re / (n - 1.0) / n).sqrt(), (self.m2_im / (n - 1.0) / n).sqrt())
        } else {
            (f64::NAN, f64::NAN)
        };
        MCEstimate {
            mean: self.mean,
            stderr_re: sr,
            stderr_im: si,
            count: self.count,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MCEstimate {
    pub mean: C64,
    pub stderr_re: f64,
    pub stderr_im: f64,
    pub count: u64,
}

impl MCEstimate {
    pub fn stderr(&self) -> f64 {
        self.stderr_re.hypot(self.stderr_im)
    }

    /// Largest componentwise |mean − target| in units of stderr.
    pub fn zscore(&self, target: C64) -> f64 {
        // a zero stderr (constant statistic) only tolerates rounding-level gaps
        let z = |d: f64, se: f64| {
            if se > 0.0 {
                d / se
            } else if d <= 1e-12 * target.norm().max(1.0) {
                0.0
            } else {
                f64::INFINITY
            }
        };
        z((self.mean.re - target.re).abs(), self.stderr_re)
            .max(z((self.mean.im - target.im).abs(), self.stderr_im))
    }
}

/// Chunk length: one Metropolis chain, or [`DEFAULT_CHUNK`] independent draws.
pub fn chunk_len(cfg: &SamplerConfig) -> usize {
    match cfg.method {
        Method::JpdfMcmc => cfg.mcmc_chain_len,
        _ => DEFAULT_CHUNK,
    }
}

/// Folds `f` over samples `0..total` chunk by chunk; returns the per-chunk
/// accumulators in chunk order.
pub fn fold_chunks<T, I, F>(
    kind: EnsembleKind,
    n: usize,
    cfg: &SamplerConfig,
    start: u64,
    total: usize,
    init: I,
    f: F,
) -> Result<Vec<T>>
where
    T: Send,
    I: Fn() -> T + Sync,
    F: Fn(&mut T, &SpectrumSample) -> Result<()> + Sync,
{
    let size = chunk_len(cfg);
    let chunks = total.div_ceil(size);
    (0..chunks)
        .into_par_iter()
        .map(|ci| {
            let lo = ci * size;
            let count = size.min(total - lo);
            let mut acc = init();
            for s in sample_block(kind, n, cfg, start + lo as u64, count)? {
                f(&mut acc, &s)?;
            }
            Ok(acc)
        })
        .collect()
}

/// Means of `k` complex statistics over `n_samples` accepted samples. The
/// statistic writes into its slice and returns false to reject a sample,
/// which is then replaced by a draw from beyond the first `n_samples`.
pub fn run_mc_multi<F>(
    kind: EnsembleKind,
    n: usize,
    cfg: &SamplerConfig,
    n_samples: usize,
    k: usize,
    f: F,
) -> Result<Vec<MCEstimate>>
where
    F: Fn(&SpectrumSample, &mut [C64]) -> Result<bool> + Sync,
{
    if n_samples < 2 {
        return Err(Error::InvalidArgument("need at least 2 samples".into()));
    }
    let init = || (vec![Welford::default(); k], vec![c(0.0, 0.0); k], 0usize);
    let step = |acc: &mut (Vec<Welford>, Vec<C64>, usize), s: &SpectrumSample| {
        let (w, buf, rejected) = acc;
        if f(s, buf)? {
            for (wi, &x) in w.iter_mut().zip(buf.iter()) {
                wi.push(x);
            }
        } else {
            *rejected += 1;
        }
        Ok(())
    };
    let mut parts = fold_chunks(kind, n, cfg, 0, n_samples, init, step)?;
    let mut next = n_samples as u64;
    let mut missing: usize = parts.iter().map(|p| p.2).sum();
    let mut guard = 0;
    while missing > 0 {
        guard += 1;
        if guard > 20 {
            return Err(Error::NonConvergence("too many rejected samples".into()));
        }
        let extra = fold_chunks(kind, n, cfg, next, missing, init, step)?;
        next += missing as u64;
        missing = extra.iter().map(|p| p.2).sum();
        parts.extend(extra);
    }
    let batch = cfg.method == Method::JpdfMcmc;
    Ok((0..k)
        .map(|j| {
            let chunks: Vec<Welford> = parts.iter().map(|p| p.0[j]).collect();
            combine(&chunks, batch)
        })
        .collect())
}

pub fn run_mc<F>(
    kind: EnsembleKind,
    n: usize,
    cfg: &SamplerConfig,
    n_samples: usize,
    f: F,
) -> Result<MCEstimate>
where
    F: Fn(&SpectrumSample) -> Result<Option<C64>> + Sync,
{
    let v = run_mc_multi(kind, n, cfg, n_samples, 1, |s, out| match f(s)? {
        Some(x) => {
            out[0] = x;
            Ok(true)
        }
        None => Ok(false),
    })?;
    Ok(v[0])
}

/// Merges chunk accumulators in order. With `batch`, the standard error
/// comes from the spread of chunk means (correlated draws within a chunk).
pub fn combine(chunks: &[Welford], batch: bool) -> MCEstimate {
    let mut all = Welford::default();
    for w in chunks {
        all.merge(w);
    }
    let mut est = all.estimate();
    let used: Vec<&Welford> = chunks.iter().filter(|w| w.count > 0).collect();
    if batch && used.len() > 1 {
        let total = all.count as f64;
        let b = used.len() as f64;
        let (mut sr, mut si) = (0.0, 0.0);
        for w in &used {
            let d = w.mean - all.mean;
            let wt = w.count as f64 / total;
            sr += (wt * d.re).powi(2);
            si += (wt * d.im).powi(2);
        }
        est.stderr_re = (sr * b / (b - 1.0)).sqrt();
        est.stderr_im = (si * b / (b - 1.0)).sqrt();
    }
    est
}
