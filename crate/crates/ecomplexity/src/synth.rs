//! Seeded synthetic export matrices for tests and demonstrations.
//!
//! Real trade matrices are strongly nested: diversified countries export
//! nearly every product. The generators here produce desk-scale stand-ins
//! with that structure, deterministically from an explicit seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Uniform};

use crate::error::Result;
use crate::matrix::ExportMatrix;

/// Seed of the canonical nested-plus-noise test matrix. Chosen so that the
/// 10x20 shape survives pruning and binarization intact and the
/// single-iteration ranking demonstrably disagrees with the converged one.
pub const CANONICAL_SEED: u64 = 2;

/// Seed of the 100-matrix random corpus.
pub const CORPUS_SEED: u64 = 20;

fn country_labels(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("C{i:02}")).collect()
}

fn product_labels(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("P{i:02}")).collect()
}

/// Triangular 0/1 matrix with random bit flips: country `i` exports the
/// first `floor(n_products * (n_countries - i) / n_countries)` products,
/// then every cell is flipped independently with probability `flip_prob`.
/// Values are 0/1 flows; the result is pruned, so rows or columns emptied
/// by the flips are dropped.
pub fn nested_noise_matrix(
    n_countries: usize,
    n_products: usize,
    flip_prob: f64,
    seed: u64,
) -> Result<ExportMatrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Vec::with_capacity(n_countries * n_products);
    for c in 0..n_countries {
        let cutoff = n_products * (n_countries - c) / n_countries;
        for p in 0..n_products {
            let mut bit = p < cutoff;
            if rng.gen::<f64>() < flip_prob {
                bit = !bit;
            }
            values.push(if bit { 1.0 } else { 0.0 });
        }
    }
    let m = ExportMatrix::from_dense(
        country_labels(n_countries),
        product_labels(n_products),
        values,
    )?;
    let (pruned, _, _) = m.prune()?;
    Ok(pruned)
}

/// The repository's canonical 10x20 nested-plus-noise matrix (15% flips,
/// seed [`CANONICAL_SEED`]), used throughout the tests as a desk-scale
/// stand-in for a real trade dataset.
pub fn canonical_test_matrix() -> ExportMatrix {
    nested_noise_matrix(10, 20, 0.15, CANONICAL_SEED)
        .expect("canonical generator parameters are valid")
}

/// Dense positive matrix with log-normally distributed entries.
pub fn lognormal_matrix(
    n_countries: usize,
    n_products: usize,
    mu: f64,
    sigma: f64,
    seed: u64,
) -> Result<ExportMatrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dist = LogNormal::new(mu, sigma)
        .map_err(|e| crate::error::Error::InvalidParameter(e.to_string()))?;
    let values: Vec<f64> = (0..n_countries * n_products)
        .map(|_| dist.sample(&mut rng))
        .collect();
    ExportMatrix::from_dense(
        country_labels(n_countries),
        product_labels(n_products),
        values,
    )
}

/// Dense positive matrix with entries log-uniform in `[lo, hi]`.
pub fn log_uniform_matrix(
    n_countries: usize,
    n_products: usize,
    lo: f64,
    hi: f64,
    rng: &mut ChaCha8Rng,
) -> Result<ExportMatrix> {
    let dist = Uniform::new(lo.ln(), hi.ln());
    let values: Vec<f64> = (0..n_countries * n_products)
        .map(|_| dist.sample(rng).exp())
        .collect();
    ExportMatrix::from_dense(
        country_labels(n_countries),
        product_labels(n_products),
        values,
    )
}

/// The standard random corpus: 100 matrices, 5-30 countries by 5-50
/// products, entries log-uniform in [1, 1e6]. Everything is positive, so
/// every matrix is pruned by construction.
pub fn random_corpus(seed: u64) -> Vec<ExportMatrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..100)
        .map(|_| {
            let nc = rng.gen_range(5..=30);
            let np = rng.gen_range(5..=50);
            log_uniform_matrix(nc, np, 1.0, 1e6, &mut rng)
                .expect("positive entries always build")
        })
        .collect()
}
