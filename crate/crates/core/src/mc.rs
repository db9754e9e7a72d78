//! Monte Carlo accumulation with deterministic chunked reduction.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::rng::{substream, Stream};

/// Samples per chunk. Chunk boundaries are fixed so the reduction order is too.
pub const CHUNK: usize = 1 << 16;

/// Mean estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
    pub n_samples: u64,
}

impl Estimate {
    pub fn scaled(self, factor: f64) -> Self {
        Self {
            value: self.value * factor,
            stderr: self.stderr * factor.abs(),
            n_samples: self.n_samples,
        }
    }

    /// Distance to `target` in units of the standard error.
    pub fn z_score(&self, target: f64) -> f64 {
        if self.stderr == 0.0 {
            if self.value == target { 0.0 } else { f64::INFINITY }
        } else {
            (self.value - target).abs() / self.stderr
        }
    }
}

/// Welford running mean and variance.
#[derive(Debug, Clone, Copy, Default)]
pub struct Accumulator {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Accumulator {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(self, other: Self) -> Self {
        if self.n == 0 {
            return other;
        }
        if other.n == 0 {
            return self;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        let mean = self.mean + delta * other.n as f64 / n as f64;
        let m2 = self.m2 + other.m2 + delta * delta * (self.n as f64 * other.n as f64) / n as f64;
        Self { n, mean, m2 }
    }

    pub fn estimate(&self) -> Estimate {
        let var = if self.n > 1 { self.m2 / (self.n - 1) as f64 } else { 0.0 };
        Estimate {
            value: self.mean,
            stderr: (var / self.n.max(1) as f64).sqrt(),
            n_samples: self.n,
        }
    }
}

fn pairwise_merge(mut accs: Vec<Accumulator>) -> Accumulator {
    if accs.is_empty() {
        return Accumulator::default();
    }
    while accs.len() > 1 {
        accs = accs
            .chunks(2)
            .map(|p| if p.len() == 2 { p[0].merge(p[1]) } else { p[0] })
            .collect();
    }
    accs[0]
}

/// Estimate `k` means at once: `f` fills one value per component for each sample.
pub fn mean_many<F>(n_samples: u64, seed: u64, k: usize, f: F) -> Vec<Estimate>
where
    F: Fn(&mut Stream, &mut [f64]) + Sync,
{
    let n_chunks = (n_samples as usize).div_ceil(CHUNK);
    let per_chunk: Vec<Vec<Accumulator>> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = substream(seed, c as u64);
            let len = CHUNK.min(n_samples as usize - c * CHUNK);
            let mut accs = vec![Accumulator::default(); k];
            let mut buf = vec![0.0; k];
            for _ in 0..len {
                f(&mut rng, &mut buf);
                for (a, &x) in accs.iter_mut().zip(&buf) {
                    a.push(x);
                }
            }
            accs
        })
        .collect();
    (0..k)
        .map(|i| pairwise_merge(per_chunk.iter().map(|c| c[i]).collect()).estimate())
        .collect()
}

pub fn mean<F>(n_samples: u64, seed: u64, f: F) -> Estimate
where
    F: Fn(&mut Stream) -> f64 + Sync,
{
    mean_many(n_samples, seed, 1, |rng, out| out[0] = f(rng))[0]
}

/// One-sample Kolmogorov–Smirnov statistic against `cdf`. Sorts `samples`.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &mut [f64], cdf: F) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    samples
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let c = cdf(x);
            (c - i as f64 / n).abs().max(((i + 1) as f64 / n - c).abs())
        })
        .fold(0.0, f64::max)
}

/// Two-sample Kolmogorov–Smirnov statistic. Sorts both inputs.
pub fn ks_two_sample(a: &mut [f64], b: &mut [f64]) -> f64 {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Two-sample KS critical value at significance `level` (asymptotic).
pub fn ks_two_sample_critical(level: f64, na: usize, nb: usize) -> f64 {
    let c = (-(level / 2.0).ln() / 2.0).sqrt();
    c * ((na + nb) as f64 / (na as f64 * nb as f64)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn merge_matches_sequential() {
        let xs: Vec<f64> = (0..1000).map(|i| ((i * 37) % 101) as f64 / 7.0).collect();
        let mut whole = Accumulator::default();
        xs.iter().for_each(|&x| whole.push(x));
        let mut a = Accumulator::default();
        let mut b = Accumulator::default();
        xs[..300].iter().for_each(|&x| a.push(x));
        xs[300..].iter().for_each(|&x| b.push(x));
        let m = a.merge(b).estimate();
        let w = whole.estimate();
        assert!((m.value - w.value).abs() < 1e-12);
        assert!((m.stderr - w.stderr).abs() < 1e-12);
    }

    #[test]
    fn deterministic_for_seed() {
        let f = |r: &mut Stream| r.random::<f64>();
        let a = mean(200_000, 3, f);
        let b = mean(200_000, 3, f);
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        assert!(a.z_score(0.5) < 4.0);
    }
}
