//! ECI+ and PCI+ on the extensive flow matrix.
//!
//! The country iteration
//!
//! ```text
//! Xc_c^N = sum_p X_cp / ( sum_c' X_c'p / Xc_c'^{N-1} )
//! ```
//!
//! and its product twin self-close over two half-steps of the
//! fitness-complexity map run on X instead of the binary matrix: the even
//! country iterate F^(2N) is the country score X_c^N and the inverted even
//! product iterate 1/Q^(2N) is the product score X_p^N. The engine therefore
//! drives [`crate::fitness::run`] with the extensive weights and exposes the
//! half-step trace so that relabeling is directly observable. Each half-step
//! divides both vectors by their geometric mean, which suits the extensive
//! magnitudes; intermediate scalars cancel, so this agrees with per-full-step
//! normalization up to rounding.
//!
//! The final scores subtract iteration-independent offsets:
//!
//! ```text
//! ECI+_c = log Xc_c^inf - log( sum_p X_cp / X_p )
//! PCI+_p = log X_p      - log( Xp_p^inf )
//! ```
//!
//! ECI+ is invariant under a change of currency unit; PCI+ is not — its
//! log X_p term shifts every score by the logarithm of the unit change, and
//! the library deliberately preserves that behavior so the dependence can be
//! demonstrated rather than silently corrected.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fitness::{self, AlgoConfig, IterationTrace, Normalization, Stop};
use crate::matrix::{BipartiteWeights, ExportMatrix};

/// Converged scores plus the half-step trace they came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EciPlusResult {
    pub countries: Vec<String>,
    pub products: Vec<String>,
    /// Converged country iterate, unit geometric mean.
    pub xc_inf: Vec<f64>,
    /// Converged product iterate, unit geometric mean.
    pub xp_inf: Vec<f64>,
    /// log(xc_inf) minus the per-country share-sum offset.
    pub eci_plus: Vec<f64>,
    /// log of the raw product total minus log(xp_inf).
    pub pci_plus: Vec<f64>,
    pub trace: IterationTrace,
}

/// Default configuration for the ECI+ iteration: ones init, geometric-mean
/// normalization, 200 full iterations.
pub fn default_config() -> AlgoConfig {
    AlgoConfig {
        normalization: Normalization::GeometricMean,
        ..AlgoConfig::default()
    }
}

/// Run the coupled country/product iteration on the extensive matrix.
///
/// `config.stop` counts full iterations (two half-steps each); the returned
/// trace is the half-step trace, so `trace.f[2 * n]` is the country iterate
/// at full iteration `n`. A rank-stable stop is extended by one half-step
/// when it fires on an odd half-step, keeping the trace aligned on full
/// iterations.
pub fn eci_iterate(x: &ExportMatrix, config: &AlgoConfig) -> Result<IterationTrace> {
    config.validate()?;
    let half_step_config = AlgoConfig {
        stop: match config.stop {
            Stop::FixedIterations(n) => {
                let doubled = n.checked_mul(2).ok_or_else(|| {
                    Error::InvalidParameter("iteration count overflow".into())
                })?;
                Stop::FixedIterations(doubled)
            }
            Stop::RankStable { window, check_every } => Stop::RankStable {
                window,
                check_every,
            },
        },
        max_iterations: config.max_iterations,
        ..*config
    };
    let mut trace = fitness::run(x, &half_step_config)?;
    if trace.iterations % 2 == 1 {
        let (f, q, norms) = fitness::step(
            x,
            trace.final_f(),
            trace.final_q(),
            config.normalization,
        )?;
        trace.f.push(f);
        trace.q.push(q);
        trace.normalizers.push(norms);
        trace.iterations += 1;
    }
    Ok(trace)
}

/// Per-country offset: the sum over products of the country's share in that
/// product's total export. Dimensionless, and iteration independent.
pub fn eci_plus_offsets(x: &ExportMatrix) -> Vec<f64> {
    let product_totals = x.product_totals();
    (0..x.n_countries())
        .map(|c| {
            (0..x.n_products())
                .map(|p| x.weight(c, p) / product_totals[p])
                .sum()
        })
        .collect()
}

/// ECI+ scores from the converged country iterate: log(xc_inf) minus the
/// log of the share-sum offset. Both terms are invariant under a global
/// rescaling of the flows. Inputs must be strictly positive, which the
/// pruned matrix and the iteration guarantee.
pub fn eci_plus_scores(x: &ExportMatrix, xc_inf: &[f64]) -> Vec<f64> {
    assert_eq!(x.n_countries(), xc_inf.len(), "country count mismatch");
    let offsets = eci_plus_offsets(x);
    xc_inf
        .iter()
        .zip(&offsets)
        .map(|(&v, &o)| v.ln() - o.ln())
        .collect()
}

/// PCI+ scores: log of the raw product total (currency units) minus log of
/// the converged product iterate. Rescaling the flows by s shifts every
/// score by log s.
pub fn pci_plus_scores(x: &ExportMatrix, xp_inf: &[f64]) -> Vec<f64> {
    assert_eq!(x.n_products(), xp_inf.len(), "product count mismatch");
    let product_totals = x.product_totals();
    product_totals
        .iter()
        .zip(xp_inf)
        .map(|(&t, &v)| t.ln() - v.ln())
        .collect()
}

/// Full pipeline: iterate, extract the converged vectors, apply offsets.
pub fn run_eciplus(x: &ExportMatrix, config: &AlgoConfig) -> Result<EciPlusResult> {
    let trace = eci_iterate(x, config)?;
    let xc_inf = trace.final_f().to_vec();
    let xp_inf: Vec<f64> = trace.final_q().iter().map(|&q| 1.0 / q).collect();
    let eci_plus = eci_plus_scores(x, &xc_inf);
    let pci_plus = pci_plus_scores(x, &xp_inf);
    Ok(EciPlusResult {
        countries: x.countries().to_vec(),
        products: x.products().to_vec(),
        xc_inf,
        xp_inf,
        eci_plus,
        pci_plus,
        trace,
    })
}
