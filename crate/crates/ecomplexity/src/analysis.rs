//! Forensic comparison of metric variants: proportionality of the two
//! iterations, rank correlations, the single-iteration anomaly, and scatter
//! tables for external plotting.

use serde::{Deserialize, Serialize};

use crate::eciplus;
use crate::error::{Error, Result};
use crate::fitness::{self, AlgoConfig, Init, Normalization, Stop};
use crate::matrix::{BinaryMatrix, BipartiteWeights, ExportMatrix};

fn check_finite(scores: &[f64]) -> Result<()> {
    if let Some(i) = scores.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFiniteScore { index: i });
    }
    Ok(())
}

fn is_constant(scores: &[f64]) -> bool {
    scores.windows(2).all(|w| w[0] == w[1])
}

/// Ranks with 1 = highest score and ties resolved by average rank.
pub fn average_ranks(scores: &[f64]) -> Result<Vec<f64>> {
    check_finite(scores)?;
    let n = scores.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .expect("finite scores compare")
            .then(a.cmp(&b))
    });
    let mut ranks = vec![0.0; n];
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        // Positions start..end (0-based) share the average of ranks
        // start+1..=end.
        let avg = (start + 1 + end) as f64 / 2.0;
        for &idx in &order[start..end] {
            ranks[idx] = avg;
        }
        start = end;
    }
    Ok(ranks)
}

/// Pearson correlation on the raw scores. Bit-identical inputs give exactly
/// 1; a constant side is degenerate.
pub fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.len() < 2 {
        return Err(Error::DegenerateDistribution);
    }
    check_finite(a)?;
    check_finite(b)?;
    if is_constant(a) || is_constant(b) {
        return Err(Error::DegenerateDistribution);
    }
    if a == b {
        return Ok(1.0);
    }
    let n = a.len() as f64;
    let mean_a = a.iter().sum::<f64>() / n;
    let mean_b = b.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var_a = 0.0;
    let mut var_b = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        let (dx, dy) = (x - mean_a, y - mean_b);
        cov += dx * dy;
        var_a += dx * dx;
        var_b += dy * dy;
    }
    if var_a == 0.0 || var_b == 0.0 {
        return Err(Error::DegenerateDistribution);
    }
    Ok(cov / (var_a * var_b).sqrt())
}

/// Spearman rank correlation with average-rank tie handling. Identical
/// rankings — including the all-tied case — give exactly 1; a constant side
/// against a non-constant one is degenerate.
pub fn spearman(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.is_empty() {
        return Err(Error::DegenerateDistribution);
    }
    let ra = average_ranks(a)?;
    let rb = average_ranks(b)?;
    if ra == rb {
        return Ok(1.0);
    }
    pearson(&ra, &rb)
}

/// Scores, ranks and correlation statistics for two score sets over the
/// same labels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankReport {
    pub labels: Vec<String>,
    pub scores_a: Vec<f64>,
    pub scores_b: Vec<f64>,
    /// Rank 1 = highest score; ties share their average rank.
    pub ranks_a: Vec<f64>,
    pub ranks_b: Vec<f64>,
    pub spearman: f64,
    /// None when either score set is constant.
    pub pearson: Option<f64>,
    pub max_rank_displacement: f64,
}

impl RankReport {
    /// Number of label pairs whose relative order differs between the two
    /// rankings.
    pub fn pairwise_swaps(&self) -> usize {
        let n = self.ranks_a.len();
        let mut swaps = 0;
        for i in 0..n {
            for j in i + 1..n {
                let da = self.ranks_a[i] - self.ranks_a[j];
                let db = self.ranks_b[i] - self.ranks_b[j];
                if (da > 0.0 && db < 0.0) || (da < 0.0 && db > 0.0) {
                    swaps += 1;
                }
            }
        }
        swaps
    }
}

/// Build the full rank report for two score sets.
pub fn rank_correlations(labels: &[String], a: &[f64], b: &[f64]) -> Result<RankReport> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if labels.len() != a.len() {
        return Err(Error::LengthMismatch {
            left: labels.len(),
            right: a.len(),
        });
    }
    if a.len() < 2 {
        return Err(Error::DegenerateDistribution);
    }
    let ranks_a = average_ranks(a)?;
    let ranks_b = average_ranks(b)?;
    let spearman = spearman(a, b)?;
    let pearson = match pearson(a, b) {
        Ok(v) => Some(v),
        Err(Error::DegenerateDistribution) => None,
        Err(e) => return Err(e),
    };
    let max_rank_displacement = ranks_a
        .iter()
        .zip(&ranks_b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    Ok(RankReport {
        labels: labels.to_vec(),
        scores_a: a.to_vec(),
        scores_b: b.to_vec(),
        ranks_a,
        ranks_b,
        spearman,
        pearson,
        max_rank_displacement,
    })
}

fn renormalize_geometric(v: &[f64]) -> Vec<f64> {
    let g = Normalization::GeometricMean.mean(v);
    v.iter().map(|x| x / g).collect()
}

fn max_relative_deviation(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| (x / y - 1.0).abs())
        .fold(0.0, f64::max)
}

/// Per-iteration agreement between the two formulations of the same map.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub iterations: usize,
    pub tol: f64,
    /// Max relative deviation of the country iterates at each full
    /// iteration, after renormalizing both sides to unit geometric mean.
    pub country_deviation: Vec<f64>,
    /// Same for the inverted product iterates.
    pub product_deviation: Vec<f64>,
    pub max_deviation: f64,
    /// Rank agreement of the final country vectors; 1 means identical order.
    /// Meaningful when score gaps exceed the cross-formulation deviation;
    /// on inputs whose exact scores are tied (symmetric or diagonal
    /// matrices) the tie is broken by rounding noise and this can be
    /// anything.
    pub converged_spearman: f64,
}

/// Verify that running the fitness map on the extensive matrix with
/// arithmetic-mean normalization and the ECI+ iteration with geometric-mean
/// normalization produce proportional iterates: the even fitness iterate
/// F^(2N) matches the country iterate at full iteration N once both are
/// rescaled to unit geometric mean, which cancels the differing per-step
/// normalizers exactly. Fails with the offending iteration if any deviation
/// exceeds `tol`.
pub fn equivalence_check(
    x: &ExportMatrix,
    iterations: usize,
    tol: f64,
) -> Result<EquivalenceReport> {
    if iterations < 1 {
        return Err(Error::InvalidParameter(
            "equivalence check needs at least one iteration".into(),
        ));
    }
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::InvalidParameter(
            "tolerance must be positive and finite".into(),
        ));
    }
    let fitness_cfg = AlgoConfig {
        init: Init::Ones,
        normalization: Normalization::ArithmeticMean,
        stop: Stop::FixedIterations(2 * iterations),
        ..AlgoConfig::default()
    };
    let fitness_trace = fitness::run(x, &fitness_cfg)?;

    let eci_cfg = AlgoConfig {
        stop: Stop::FixedIterations(iterations),
        ..eciplus::default_config()
    };
    let eci_trace = eciplus::eci_iterate(x, &eci_cfg)?;

    let mut country_deviation = Vec::with_capacity(iterations);
    let mut product_deviation = Vec::with_capacity(iterations);
    let mut max_deviation = 0.0f64;
    for n in 1..=iterations {
        let fc = renormalize_geometric(&fitness_trace.f[2 * n]);
        let xc = renormalize_geometric(&eci_trace.f[2 * n]);
        let dev_c = max_relative_deviation(&fc, &xc);

        let invert = |q: &[f64]| -> Vec<f64> { q.iter().map(|&v| 1.0 / v).collect() };
        let fp = renormalize_geometric(&invert(&fitness_trace.q[2 * n]));
        let xp = renormalize_geometric(&invert(&eci_trace.q[2 * n]));
        let dev_p = max_relative_deviation(&fp, &xp);

        let dev = dev_c.max(dev_p);
        if dev > tol {
            return Err(Error::EquivalenceViolation {
                iteration: n,
                deviation: dev,
                tol,
            });
        }
        max_deviation = max_deviation.max(dev);
        country_deviation.push(dev_c);
        product_deviation.push(dev_p);
    }

    let converged_spearman = spearman(fitness_trace.final_f(), eci_trace.final_f())?;
    Ok(EquivalenceReport {
        iterations,
        tol,
        country_deviation,
        product_deviation,
        max_deviation,
        converged_spearman,
    })
}

/// Fitness after a single iteration from degree initial conditions versus
/// the converged fitness from constant initial conditions, both on the
/// binarized matrix. The report's `scores_a` side is the single-iteration
/// run.
pub fn one_iteration_anomaly(x: &ExportMatrix) -> Result<RankReport> {
    let rca = x.rca()?;
    let (m, _, _) = rca.binarize(1.0)?;

    let one_cfg = AlgoConfig {
        init: Init::Degree,
        stop: Stop::FixedIterations(1),
        ..AlgoConfig::default()
    };
    let one = fitness::run(&m, &one_cfg)?;

    let converged_cfg = AlgoConfig {
        init: Init::Ones,
        stop: Stop::FixedIterations(200),
        ..AlgoConfig::default()
    };
    let converged = fitness::run(&m, &converged_cfg)?;

    rank_correlations(m.countries(), one.final_f(), converged.final_f())
}

/// Pearson correlation between diversification and a country score vector.
pub fn diversity_correlation(m: &BinaryMatrix, scores: &[f64]) -> Result<f64> {
    if scores.len() != m.n_countries() {
        return Err(Error::LengthMismatch {
            left: scores.len(),
            right: m.n_countries(),
        });
    }
    pearson(&fitness::diversification(m), scores)
}

/// Pearson correlation between the ECI+ offset term and the converged
/// country iterate, across countries.
pub fn offset_correlation(x: &ExportMatrix) -> Result<f64> {
    let offsets = eciplus::eci_plus_offsets(x);
    let trace = eciplus::eci_iterate(x, &eciplus::default_config())?;
    pearson(&offsets, trace.final_f())
}

/// One labeled point of a scatter comparison.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScatterRow {
    pub label: String,
    pub x: f64,
    pub y: f64,
}

/// Rows for external plotting, order preserved.
pub fn scatter_table(labels: &[String], x: &[f64], y: &[f64]) -> Result<Vec<ScatterRow>> {
    if labels.len() != x.len() || x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: labels.len().max(x.len()),
            right: y.len(),
        });
    }
    Ok(labels
        .iter()
        .zip(x.iter().zip(y))
        .map(|(label, (&x, &y))| ScatterRow {
            label: label.clone(),
            x,
            y,
        })
        .collect())
}

/// The three standard score pairings for comparing ECI+ against fitness
/// variants: ECI+ on the x axis, a fitness transform on the y axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScatterPreset {
    /// Standardized fitness after one iteration from degree init.
    OneIterationStandardized,
    /// Standardized fitness at convergence (200 iterations, ones init).
    ConvergedStandardized,
    /// Log fitness at convergence.
    ConvergedLog,
}

/// Build a preset scatter table on the shared country set of the extensive
/// matrix and its binarization.
pub fn scatter_preset(x: &ExportMatrix, preset: ScatterPreset) -> Result<Vec<ScatterRow>> {
    let eci = eciplus::run_eciplus(x, &eciplus::default_config())?;
    let rca = x.rca()?;
    let (m, _, _) = rca.binarize(1.0)?;

    let cfg = match preset {
        ScatterPreset::OneIterationStandardized => AlgoConfig {
            init: Init::Degree,
            stop: Stop::FixedIterations(1),
            ..AlgoConfig::default()
        },
        _ => AlgoConfig {
            init: Init::Ones,
            stop: Stop::FixedIterations(200),
            ..AlgoConfig::default()
        },
    };
    let trace = fitness::run(&m, &cfg)?;
    let scores = match preset {
        ScatterPreset::ConvergedLog => fitness::log_scores(trace.final_f(), cfg.epsilon_floor),
        _ => fitness::standardize(trace.final_f())?,
    };

    // Binarization may have dropped countries; align ECI+ to the survivors.
    let mut eci_scores = Vec::with_capacity(m.n_countries());
    for label in m.countries() {
        let i = x
            .countries()
            .iter()
            .position(|c| c == label)
            .expect("binarized countries are a subset");
        eci_scores.push(eci.eci_plus[i]);
    }
    scatter_table(m.countries(), &eci_scores, &scores)
}
