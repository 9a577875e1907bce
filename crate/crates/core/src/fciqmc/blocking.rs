//! Blocking analysis of serially correlated samples.
//!
//! Samples are repeatedly averaged in adjacent pairs; the standard error of
//! the block means grows until blocks are longer than the autocorrelation
//! time. The reported error is taken at the largest block size that still
//! leaves [`MIN_BLOCKS`] blocks.

pub const MIN_BLOCKS: usize = 32;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlockingLevel {
    pub block_size: usize,
    pub blocks: usize,
    pub error: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EstimatorReport {
    pub label: String,
    pub mean: f64,
    pub error: f64,
    /// Power of two.
    pub block_size: usize,
    pub samples: usize,
}

impl EstimatorReport {
    pub fn from_samples(label: impl Into<String>, samples: &[f64]) -> Self {
        let finite: Vec<f64> = samples.iter().copied().filter(|x| x.is_finite()).collect();
        let label = label.into();
        if finite.is_empty() {
            return EstimatorReport { label, mean: f64::NAN, error: f64::NAN, block_size: 1, samples: 0 };
        }
        let mean = finite.iter().sum::<f64>() / finite.len() as f64;
        let levels = blocking_analysis(&finite);
        let chosen = levels
            .iter()
            .rev()
            .find(|l| l.blocks >= MIN_BLOCKS)
            .or(levels.first())
            .copied()
            .unwrap_or(BlockingLevel { block_size: 1, blocks: finite.len(), error: f64::NAN });
        EstimatorReport { label, mean, error: chosen.error, block_size: chosen.block_size, samples: finite.len() }
    }

    /// `|mean − reference| ≤ k·error`, with a small absolute floor so that
    /// noiseless estimators are compared up to rounding.
    pub fn agrees_with(&self, reference: f64, k: f64) -> bool {
        (self.mean - reference).abs() <= k * self.error + 1e-12
    }
}

/// Standard error of the mean at every pair-averaging level with at least two
/// blocks.
pub fn blocking_analysis(samples: &[f64]) -> Vec<BlockingLevel> {
    let mut levels = Vec::new();
    let mut data = samples.to_vec();
    let mut block_size = 1;
    while data.len() >= 2 {
        let n = data.len() as f64;
        let mean = data.iter().sum::<f64>() / n;
        let var = data.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        levels.push(BlockingLevel { block_size, blocks: data.len(), error: (var / n).sqrt() });
        data = data.chunks_exact(2).map(|p| 0.5 * (p[0] + p[1])).collect();
        block_size *= 2;
    }
    levels
}
