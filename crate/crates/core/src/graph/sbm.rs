use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{stratified_split, Graph};
use crate::error::{Error, Result};

/// Parameters of a stochastic block model with Gaussian node features.
#[derive(Debug, Clone, PartialEq)]
pub struct SbmSpec {
    /// Block sizes; block `b` gets label `b`.
    pub sizes: Vec<usize>,
    pub p_in: f64,
    pub p_out: f64,
    /// One row per block: the mean feature vector of its nodes.
    pub feature_means: Array2<f64>,
    pub noise_sd: f64,
    /// Fraction of each block placed in the train mask.
    pub train_frac: f64,
    pub seed: u64,
}

impl SbmSpec {
    /// Blocks whose means sit `separation` apart along distinct coordinate
    /// axes of a `d`-dimensional feature space (`d` must be at least the
    /// number of blocks).
    pub fn axis_separated(
        sizes: Vec<usize>,
        p_in: f64,
        p_out: f64,
        d: usize,
        separation: f64,
        noise_sd: f64,
        seed: u64,
    ) -> Self {
        let c = sizes.len();
        let means = Array2::from_shape_fn((c, d), |(b, k)| if k == b { separation } else { 0.0 });
        SbmSpec {
            sizes,
            p_in,
            p_out,
            feature_means: means,
            noise_sd,
            train_frac: 0.1,
            seed,
        }
    }
}

/// Samples a graph. One ChaCha8 stream drives, in order: the upper-triangle
/// edge coin flips (row-major), the feature noise (row-major), then the
/// stratified split, so output is bit-reproducible for a seed.
pub fn sbm_generate(spec: &SbmSpec) -> Result<Graph> {
    let c = spec.sizes.len();
    if c == 0 || spec.sizes.contains(&0) {
        return Err(Error::validation("every block must contain at least one node"));
    }
    if !(0.0 <= spec.p_out && spec.p_out <= spec.p_in && spec.p_in <= 1.0) {
        return Err(Error::validation(format!(
            "need 0 <= p_out <= p_in <= 1, got p_in={} p_out={}",
            spec.p_in, spec.p_out
        )));
    }
    if spec.feature_means.nrows() != c {
        return Err(Error::validation(format!(
            "{} feature-mean rows for {c} blocks",
            spec.feature_means.nrows()
        )));
    }
    if !(spec.noise_sd >= 0.0) || !spec.noise_sd.is_finite() {
        return Err(Error::validation(format!(
            "noise_sd must be finite and nonnegative, got {}",
            spec.noise_sd
        )));
    }

    let labels: Vec<usize> = spec
        .sizes
        .iter()
        .enumerate()
        .flat_map(|(b, &s)| std::iter::repeat_n(b, s))
        .collect();
    let n = labels.len();
    let d = spec.feature_means.ncols();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let mut adjacency = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in (i + 1)..n {
            let p = if labels[i] == labels[j] { spec.p_in } else { spec.p_out };
            if rng.random_bool(p) {
                adjacency[[i, j]] = 1.0;
                adjacency[[j, i]] = 1.0;
            }
        }
    }

    let noise = Normal::new(0.0, spec.noise_sd).map_err(|e| Error::validation(format!("noise distribution: {e}")))?;
    let mut features = Array2::<f64>::zeros((n, d));
    for i in 0..n {
        for k in 0..d {
            features[[i, k]] = spec.feature_means[[labels[i], k]] + noise.sample(&mut rng);
        }
    }

    let split_seed = rng.random::<u64>();
    let (train, test) = stratified_split(&labels, c, spec.train_frac, split_seed)?;
    Graph::new(features, adjacency, labels, c, train, test)
}
