//! The fitness-complexity fixed-point iteration.
//!
//! One step maps the country vector F and the product vector Q to
//!
//! ```text
//! F'_c = sum_p M_cp * Q_p            (weighted diversification)
//! Q'_p = 1 / sum_c (M_cp / F_c)      (harmonic penalty by weak exporters)
//! ```
//!
//! with both right-hand sides reading the previous iteration (a Jacobi-style
//! simultaneous update), followed by dividing each vector by its configured
//! mean. The per-step normalization is what keeps the hyperbolic second
//! equation from diverging; the scalars divided out are recorded in the
//! trace. The input weights may be the binary matrix or the raw extensive
//! flows; the map itself does not care.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{BinaryMatrix, BipartiteWeights};

/// Initial condition for the iteration.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Init {
    /// F_c = 1 and Q_p = 1 for all countries and products.
    Ones,
    /// F_c = row total, Q_p = column total (the degrees k_c, k_p on a binary
    /// matrix), normalized by the configured mean before the first step.
    Degree,
}

/// Which mean the per-step normalization divides by.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    ArithmeticMean,
    GeometricMean,
}

impl Normalization {
    pub fn mean(self, values: &[f64]) -> f64 {
        match self {
            Normalization::ArithmeticMean => {
                values.iter().sum::<f64>() / values.len() as f64
            }
            Normalization::GeometricMean => {
                (values.iter().map(|v| v.ln()).sum::<f64>() / values.len() as f64).exp()
            }
        }
    }
}

/// Stopping rule for [`run`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stop {
    /// Run exactly this many iterations.
    FixedIterations(usize),
    /// Stop once the country ranking has been unchanged for `window`
    /// consecutive checks, checking every `check_every` iterations.
    RankStable { window: usize, check_every: usize },
}

/// Full parameterization of a run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlgoConfig {
    pub init: Init,
    pub normalization: Normalization,
    pub stop: Stop,
    /// Cap for rank-stable stopping; ignored by fixed-iteration runs.
    pub max_iterations: usize,
    /// Floor applied inside logarithms only, never inside the iteration.
    pub epsilon_floor: f64,
}

impl Default for AlgoConfig {
    fn default() -> Self {
        Self {
            init: Init::Ones,
            normalization: Normalization::ArithmeticMean,
            stop: Stop::FixedIterations(200),
            max_iterations: 1000,
            epsilon_floor: 1e-300,
        }
    }
}

impl AlgoConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations < 1 {
            return Err(Error::InvalidParameter(
                "max_iterations must be at least 1".into(),
            ));
        }
        if !(self.epsilon_floor.is_finite() && self.epsilon_floor > 0.0) {
            return Err(Error::InvalidParameter(
                "epsilon_floor must be positive and finite".into(),
            ));
        }
        match self.stop {
            Stop::FixedIterations(n) if n < 1 => Err(Error::InvalidParameter(
                "fixed iteration count must be at least 1".into(),
            )),
            Stop::RankStable { window, check_every } if window < 1 || check_every < 1 => {
                Err(Error::InvalidParameter(
                    "rank-stable window and check interval must be at least 1".into(),
                ))
            }
            _ => Ok(()),
        }
    }
}

/// The scalars each vector was divided by at one normalization point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Normalizers {
    pub f: f64,
    pub q: f64,
}

/// Every iterate of a run: `f[0]`/`q[0]` hold the (normalized) initial
/// condition and `f[n]` the country vector after step `n`. `normalizers[0]`
/// records the initialization scaling, `normalizers[n]` the scalars of step
/// `n`. When the same engine is driven with the extensive matrix, the even
/// country iterates are (up to rescaling) the country scores of the
/// ECI+ formulation and the inverted even product iterates its product
/// scores.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationTrace {
    pub f: Vec<Vec<f64>>,
    pub q: Vec<Vec<f64>>,
    pub normalizers: Vec<Normalizers>,
    pub iterations: usize,
    pub converged: bool,
}

impl IterationTrace {
    pub fn final_f(&self) -> &[f64] {
        self.f.last().expect("trace holds the initial vectors")
    }

    pub fn final_q(&self) -> &[f64] {
        self.q.last().expect("trace holds the initial vectors")
    }
}

/// Number of products each country exports: the row sums k_c of the binary
/// matrix. At least 1 everywhere since the matrix is pruned.
pub fn diversification(m: &BinaryMatrix) -> Vec<f64> {
    m.country_totals()
}

/// Number of countries exporting each product: the column sums k_p.
pub fn ubiquity(m: &BinaryMatrix) -> Vec<f64> {
    m.product_totals()
}

fn check_positive(values: &[f64], what: &str) -> Result<()> {
    for (i, &v) in values.iter().enumerate() {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::ZeroFitness(format!(
                "{what}[{i}] = {v}; expected strictly positive and finite"
            )));
        }
    }
    Ok(())
}

/// One Jacobi step: raw update from the previous (F, Q) pair, then each
/// vector divided by its configured mean. Returns the new vectors and the
/// normalizers applied.
pub fn step<M: BipartiteWeights>(
    m: &M,
    f: &[f64],
    q: &[f64],
    normalization: Normalization,
) -> Result<(Vec<f64>, Vec<f64>, Normalizers)> {
    let (nc, np) = (m.n_countries(), m.n_products());
    if f.len() != nc {
        return Err(Error::LengthMismatch {
            left: f.len(),
            right: nc,
        });
    }
    if q.len() != np {
        return Err(Error::LengthMismatch {
            left: q.len(),
            right: np,
        });
    }
    check_positive(f, "F")?;
    check_positive(q, "Q")?;

    let mut new_f = vec![0.0; nc];
    for c in 0..nc {
        let mut acc = 0.0;
        for p in 0..np {
            acc += m.weight(c, p) * q[p];
        }
        new_f[c] = acc;
    }

    let mut new_q = vec![0.0; np];
    for p in 0..np {
        let mut denom = 0.0;
        for c in 0..nc {
            denom += m.weight(c, p) / f[c];
        }
        if denom == 0.0 {
            return Err(Error::NotPruned);
        }
        new_q[p] = 1.0 / denom;
    }

    if new_f.iter().any(|&v| !(v.is_finite() && v > 0.0))
        || new_q.iter().any(|&v| !(v.is_finite() && v > 0.0))
    {
        return Err(Error::ZeroFitness(
            "raw update left the positive range (underflow or overflow)".into(),
        ));
    }

    let norms = Normalizers {
        f: normalization.mean(&new_f),
        q: normalization.mean(&new_q),
    };
    for v in &mut new_f {
        *v /= norms.f;
    }
    for v in &mut new_q {
        *v /= norms.q;
    }
    check_positive(&new_f, "normalized F")?;
    check_positive(&new_q, "normalized Q")?;
    Ok((new_f, new_q, norms))
}

/// Country indices ordered best-first, ties broken by index so that equal
/// scores compare reproducibly.
fn ranking(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .expect("scores are finite")
            .then(a.cmp(&b))
    });
    order
}

const DEFAULT_STABILITY_WINDOW: usize = 10;

/// Run the iteration to the configured stopping rule and record every
/// iterate. Deterministic: identical inputs produce bit-identical traces.
///
/// The `converged` flag reports whether the country ranking was unchanged
/// over the trailing stability window (the rule's own window, or 10
/// iterations for fixed-length runs), so a fixed 1-iteration run comes back
/// unconverged while a fixed 200-iteration run on a well-behaved matrix
/// comes back converged.
pub fn run<M: BipartiteWeights>(m: &M, config: &AlgoConfig) -> Result<IterationTrace> {
    config.validate()?;
    let (nc, np) = (m.n_countries(), m.n_products());
    if nc == 0 || np == 0 {
        return Err(Error::AllPruned);
    }
    if !m.is_pruned() {
        return Err(Error::NotPruned);
    }

    let (mut f, mut q) = match config.init {
        Init::Ones => (vec![1.0; nc], vec![1.0; np]),
        Init::Degree => (m.country_totals(), m.product_totals()),
    };
    let init_norms = Normalizers {
        f: config.normalization.mean(&f),
        q: config.normalization.mean(&q),
    };
    for v in &mut f {
        *v /= init_norms.f;
    }
    for v in &mut q {
        *v /= init_norms.q;
    }
    check_positive(&f, "initial F")?;
    check_positive(&q, "initial Q")?;

    let (limit, window, check_every) = match config.stop {
        Stop::FixedIterations(n) => (n, DEFAULT_STABILITY_WINDOW, 1),
        Stop::RankStable { window, check_every } => {
            (config.max_iterations, window, check_every)
        }
    };

    let mut trace = IterationTrace {
        f: vec![f.clone()],
        q: vec![q.clone()],
        normalizers: vec![init_norms],
        iterations: 0,
        converged: false,
    };

    let mut last_ranking = ranking(&f);
    let mut stable_checks = 0usize;
    for n in 1..=limit {
        let (new_f, new_q, norms) = step(m, &f, &q, config.normalization)?;
        f = new_f;
        q = new_q;
        trace.f.push(f.clone());
        trace.q.push(q.clone());
        trace.normalizers.push(norms);
        trace.iterations = n;

        if n % check_every == 0 {
            let current = ranking(&f);
            if current == last_ranking {
                stable_checks += 1;
            } else {
                stable_checks = 0;
                last_ranking = current;
            }
            if stable_checks >= window {
                trace.converged = true;
                if let Stop::RankStable { .. } = config.stop {
                    return Ok(trace);
                }
            } else {
                trace.converged = false;
            }
        }
    }

    if let Stop::RankStable { .. } = config.stop {
        return Err(Error::MaxIterationsExceeded {
            max: config.max_iterations,
        });
    }
    Ok(trace)
}

/// Elementwise log with a floor: quasi-zero scores are a genuine feature of
/// the hyperbolic map, so the floor keeps the logarithm finite without
/// touching the iteration itself.
pub fn log_scores(scores: &[f64], epsilon_floor: f64) -> Vec<f64> {
    scores.iter().map(|&v| v.max(epsilon_floor).ln()).collect()
}

/// Z-scores against the population standard deviation.
pub fn standardize(scores: &[f64]) -> Result<Vec<f64>> {
    if scores.len() < 2 {
        return Err(Error::DegenerateDistribution);
    }
    if let Some(i) = scores.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFiniteScore { index: i });
    }
    if scores.windows(2).all(|w| w[0] == w[1]) {
        return Err(Error::DegenerateDistribution);
    }
    let n = scores.len() as f64;
    let mean = scores.iter().sum::<f64>() / n;
    let var = scores.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let sd = var.sqrt();
    if sd == 0.0 {
        return Err(Error::DegenerateDistribution);
    }
    Ok(scores.iter().map(|v| (v - mean) / sd).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::ExportMatrix;
    use approx::assert_relative_eq;

    fn bits(rows: &[&[u8]]) -> BinaryMatrix {
        BinaryMatrix::from_bits(
            (0..rows.len()).map(|i| format!("C{i}")).collect(),
            (0..rows[0].len()).map(|i| format!("P{i}")).collect(),
            rows.iter().flat_map(|r| r.iter().copied()).collect(),
        )
        .unwrap()
    }

    fn identity_bits(n: usize) -> BinaryMatrix {
        BinaryMatrix::from_bits(
            (0..n).map(|i| format!("C{i}")).collect(),
            (0..n).map(|i| format!("P{i}")).collect(),
            (0..n * n)
                .map(|i| u8::from(i / n == i % n))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn degrees_are_row_and_column_sums() {
        let m = bits(&[&[1, 1], &[0, 1]]);
        assert_eq!(diversification(&m), vec![2.0, 1.0]);
        assert_eq!(ubiquity(&m), vec![1.0, 2.0]);
        let id = identity_bits(3);
        assert_eq!(diversification(&id), vec![1.0; 3]);
        assert_eq!(ubiquity(&id), vec![1.0; 3]);
        let row = bits(&[&[1, 1, 1]]);
        assert_eq!(diversification(&row), vec![3.0]);
        let col = bits(&[&[1], &[1], &[1]]);
        assert_eq!(ubiquity(&col), vec![3.0]);
    }

    #[test]
    fn step_fixes_the_symmetric_point() {
        let id = identity_bits(2);
        let (f, q, _) = step(&id, &[1.0, 1.0], &[1.0, 1.0], Normalization::ArithmeticMean)
            .unwrap();
        assert_eq!(f, vec![1.0, 1.0]);
        assert_eq!(q, vec![1.0, 1.0]);
    }

    #[test]
    fn one_jacobi_step_by_hand() {
        // Raw F' = (2, 1) and raw Q' = (1, 1/2); means 3/2 and 3/4.
        let m = bits(&[&[1, 1], &[0, 1]]);
        let (f, q, norms) =
            step(&m, &[1.0, 1.0], &[1.0, 1.0], Normalization::ArithmeticMean).unwrap();
        assert_relative_eq!(f[0], 4.0 / 3.0, max_relative = 1e-15);
        assert_relative_eq!(f[1], 2.0 / 3.0, max_relative = 1e-15);
        assert_relative_eq!(q[0], 4.0 / 3.0, max_relative = 1e-15);
        assert_relative_eq!(q[1], 2.0 / 3.0, max_relative = 1e-15);
        assert_relative_eq!(norms.f, 1.5, max_relative = 1e-15);
        assert_relative_eq!(norms.q, 0.75, max_relative = 1e-15);
    }

    #[test]
    fn step_rejects_nonpositive_scores() {
        let m = bits(&[&[1, 1], &[0, 1]]);
        let err = step(&m, &[1.0, 0.0], &[1.0, 1.0], Normalization::ArithmeticMean).unwrap_err();
        assert!(matches!(err, Error::ZeroFitness(_)));
    }

    #[test]
    fn run_on_identity_stays_constant() {
        let id = identity_bits(3);
        let cfg = AlgoConfig::default();
        let trace = run(&id, &cfg).unwrap();
        assert_eq!(trace.iterations, 200);
        for f in &trace.f {
            assert_eq!(f, &vec![1.0; 3]);
        }
        assert!(trace.converged);
    }

    #[test]
    fn hyperbolic_decay_follows_the_ratio_recursion() {
        // F ratio r and Q ratio both grow by 1 per step, alternating, so the
        // F ratio at step n is n + 1 and the weak country decays like 2/(n+2).
        let m = bits(&[&[1, 1], &[0, 1]]);
        let cfg = AlgoConfig {
            stop: Stop::FixedIterations(10_000),
            ..AlgoConfig::default()
        };
        let trace = run(&m, &cfg).unwrap();
        for n in [1usize, 2, 3, 10, 100, 1000, 10_000] {
            let f = &trace.f[n];
            assert_relative_eq!(f[0] / f[1], (n + 1) as f64, max_relative = 1e-9);
            assert_relative_eq!(f[1], 2.0 / (n as f64 + 2.0), max_relative = 1e-9);
        }
        // Arithmetic-mean normalization pins F0 + F1 = 2, so F -> (2, 0).
        assert!(trace.final_f()[0] > 1.999);
        let logs = log_scores(trace.final_f(), 1e-300);
        assert!(logs.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn nested_matrix_ranks_diversified_country_first() {
        let m = bits(&[&[1, 1, 1], &[1, 1, 0], &[1, 0, 0]]);
        let cfg = AlgoConfig {
            stop: Stop::FixedIterations(1000),
            ..AlgoConfig::default()
        };
        let trace = run(&m, &cfg).unwrap();
        let f = trace.final_f();
        assert!(f[0] > f[1] && f[1] > f[2]);
    }

    #[test]
    fn arithmetic_mean_is_one_after_every_step() {
        let m = bits(&[&[1, 1, 0], &[0, 1, 1], &[1, 0, 0]]);
        let trace = run(&m, &AlgoConfig::default()).unwrap();
        for (f, q) in trace.f.iter().zip(&trace.q) {
            let mf = f.iter().sum::<f64>() / f.len() as f64;
            let mq = q.iter().sum::<f64>() / q.len() as f64;
            assert!((mf - 1.0).abs() <= 1e-12);
            assert!((mq - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn rank_stable_stopping_fires() {
        let m = bits(&[&[1, 1, 1], &[1, 1, 0], &[1, 0, 0]]);
        let cfg = AlgoConfig {
            stop: Stop::RankStable {
                window: 10,
                check_every: 1,
            },
            max_iterations: 500,
            ..AlgoConfig::default()
        };
        let trace = run(&m, &cfg).unwrap();
        assert!(trace.converged);
        assert!(trace.iterations < 500);
    }

    #[test]
    fn rank_stable_can_exhaust_iterations() {
        // The weak-country ratio keeps growing, but the ranking is already
        // frozen, so force an exhaust with an impossible window.
        let m = bits(&[&[1, 1], &[0, 1]]);
        let cfg = AlgoConfig {
            stop: Stop::RankStable {
                window: 100,
                check_every: 1,
            },
            max_iterations: 20,
            ..AlgoConfig::default()
        };
        assert!(matches!(
            run(&m, &cfg).unwrap_err(),
            Error::MaxIterationsExceeded { max: 20 }
        ));
    }

    #[test]
    fn degree_init_is_normalized_before_the_first_step() {
        let m = bits(&[&[1, 1], &[0, 1]]);
        let cfg = AlgoConfig {
            init: Init::Degree,
            stop: Stop::FixedIterations(1),
            ..AlgoConfig::default()
        };
        let trace = run(&m, &cfg).unwrap();
        // k_c = (2, 1), mean 3/2 -> initial F = (4/3, 2/3).
        assert_relative_eq!(trace.f[0][0], 4.0 / 3.0, max_relative = 1e-15);
        assert_relative_eq!(trace.f[0][1], 2.0 / 3.0, max_relative = 1e-15);
        assert_eq!(trace.normalizers[0].f, 1.5);
    }

    #[test]
    fn run_works_on_extensive_matrices_too() {
        let x = ExportMatrix::from_dense(
            vec!["A".into(), "B".into()],
            vec!["p".into(), "q".into()],
            vec![3.0, 1.0, 0.5, 2.0],
        )
        .unwrap();
        let trace = run(&x, &AlgoConfig::default()).unwrap();
        assert_eq!(trace.iterations, 200);
        assert!(trace.final_f().iter().all(|&v| v > 0.0));
    }

    #[test]
    fn log_scores_floors_zeros() {
        assert_eq!(log_scores(&[1.0, 1.0], 1e-300), vec![0.0, 0.0]);
        let e = std::f64::consts::E;
        let l = log_scores(&[e, e * e], 1e-300);
        assert_relative_eq!(l[0], 1.0, max_relative = 1e-14);
        assert_relative_eq!(l[1], 2.0, max_relative = 1e-14);
        let floored = log_scores(&[0.0, 1.0], 1e-300);
        assert_relative_eq!(floored[0], 1e-300f64.ln(), max_relative = 1e-14);
        assert_eq!(floored[1], 0.0);
        assert!(floored.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn standardize_matches_hand_zscores() {
        assert_eq!(standardize(&[1.0, 3.0]).unwrap(), vec![-1.0, 1.0]);
        assert!(matches!(
            standardize(&[5.0, 5.0, 5.0]).unwrap_err(),
            Error::DegenerateDistribution
        ));
        let z = standardize(&[1.0, 2.0, 3.0]).unwrap();
        let r = (1.5f64).sqrt();
        assert_relative_eq!(z[0], -r, max_relative = 1e-15);
        assert_relative_eq!(z[1], 0.0, epsilon = 1e-15);
        assert_relative_eq!(z[2], r, max_relative = 1e-15);
        let mean = z.iter().sum::<f64>() / 3.0;
        let var = z.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / 3.0;
        assert!(mean.abs() <= 1e-12 && (var.sqrt() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn config_validation() {
        let bad = AlgoConfig {
            max_iterations: 0,
            ..AlgoConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = AlgoConfig {
            epsilon_floor: 0.0,
            ..AlgoConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = AlgoConfig {
            stop: Stop::FixedIterations(0),
            ..AlgoConfig::default()
        };
        assert!(bad.validate().is_err());
        assert!(AlgoConfig::default().validate().is_ok());
    }
}
