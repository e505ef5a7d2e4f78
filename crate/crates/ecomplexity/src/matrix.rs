//! Country-product export matrices and the transformations between them.
//!
//! The pipeline is `ExportMatrix` (raw flows, currency units) -> `RcaMatrix`
//! (revealed comparative advantage, dimensionless) -> `BinaryMatrix`
//! (RCA thresholded at 1). All three share the same (country, product)
//! index structure and are immutable once built.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Guard against pathological inputs blowing up the dense representation.
pub const MAX_DENSE_ENTRIES: usize = 10_000_000;

/// Read-only view of a labeled country-product weight matrix.
///
/// Both the extensive flow matrix and the binary matrix implement this, so
/// the iterative engines can run on either. Row and column totals fix their
/// summation order (ascending index, one running accumulator) so that
/// results are reproducible bit for bit.
pub trait BipartiteWeights {
    fn countries(&self) -> &[String];
    fn products(&self) -> &[String];
    fn weight(&self, country: usize, product: usize) -> f64;

    fn n_countries(&self) -> usize {
        self.countries().len()
    }

    fn n_products(&self) -> usize {
        self.products().len()
    }

    /// Row totals; for a binary matrix this is the diversification k_c.
    fn country_totals(&self) -> Vec<f64> {
        (0..self.n_countries())
            .map(|c| (0..self.n_products()).map(|p| self.weight(c, p)).sum())
            .collect()
    }

    /// Column totals; for a binary matrix this is the ubiquity k_p.
    fn product_totals(&self) -> Vec<f64> {
        (0..self.n_products())
            .map(|p| (0..self.n_countries()).map(|c| self.weight(c, p)).sum())
            .collect()
    }

    /// True when every row and column carries positive weight.
    fn is_pruned(&self) -> bool {
        self.country_totals().iter().all(|&t| t > 0.0)
            && self.product_totals().iter().all(|&t| t > 0.0)
    }
}

fn check_labels(labels: &[String]) -> Result<()> {
    let mut seen = std::collections::BTreeSet::new();
    for l in labels {
        if !seen.insert(l) {
            return Err(Error::DuplicateLabel { label: l.clone() });
        }
    }
    Ok(())
}

fn checked_dims(n_countries: usize, n_products: usize) -> Result<usize> {
    match n_countries.checked_mul(n_products) {
        Some(n) if n <= MAX_DENSE_ENTRIES => Ok(n),
        Some(n) => Err(Error::InputTooLarge {
            entries: n,
            max: MAX_DENSE_ENTRIES,
        }),
        None => Err(Error::InputTooLarge {
            entries: usize::MAX,
            max: MAX_DENSE_ENTRIES,
        }),
    }
}

/// Extensive export matrix X_cp: nonnegative flows in currency units.
#[derive(Clone, Debug, PartialEq)]
pub struct ExportMatrix {
    countries: Vec<String>,
    products: Vec<String>,
    values: Vec<f64>, // dense, row-major
}

impl BipartiteWeights for ExportMatrix {
    fn countries(&self) -> &[String] {
        &self.countries
    }

    fn products(&self) -> &[String] {
        &self.products
    }

    fn weight(&self, country: usize, product: usize) -> f64 {
        self.values[country * self.products.len() + product]
    }
}

impl ExportMatrix {
    /// Build from a dense row-major value table. Labels must be unique and
    /// every value finite and nonnegative.
    pub fn from_dense(
        countries: Vec<String>,
        products: Vec<String>,
        values: Vec<f64>,
    ) -> Result<Self> {
        let n = checked_dims(countries.len(), products.len())?;
        if values.len() != n {
            return Err(Error::LengthMismatch {
                left: values.len(),
                right: n,
            });
        }
        check_labels(&countries)?;
        check_labels(&products)?;
        for (i, &v) in values.iter().enumerate() {
            let (c, p) = (i / products.len().max(1), i % products.len().max(1));
            if !v.is_finite() {
                return Err(Error::NonFiniteValue {
                    country: countries[c].clone(),
                    product: products[p].clone(),
                });
            }
            if v < 0.0 {
                return Err(Error::NegativeValue {
                    country: countries[c].clone(),
                    product: products[p].clone(),
                    value: v,
                });
            }
        }
        Ok(Self {
            countries,
            products,
            values,
        })
    }

    /// Aggregate raw flow records into a matrix. Duplicate (country, product)
    /// pairs are summed; labels end up sorted and deduplicated. The result is
    /// unpruned: all-zero rows or columns may remain.
    pub fn ingest_flows<C, P>(records: impl IntoIterator<Item = (C, P, f64)>) -> Result<Self>
    where
        C: Into<String>,
        P: Into<String>,
    {
        let mut sums: BTreeMap<(String, String), f64> = BTreeMap::new();
        let mut any = false;
        for (country, product, value) in records {
            any = true;
            let country = country.into();
            let product = product.into();
            if !value.is_finite() {
                return Err(Error::NonFiniteValue { country, product });
            }
            if value < 0.0 {
                return Err(Error::NegativeValue {
                    country,
                    product,
                    value,
                });
            }
            *sums.entry((country, product)).or_insert(0.0) += value;
        }
        if !any {
            return Err(Error::EmptyInput);
        }

        let mut countries: Vec<String> = sums.keys().map(|(c, _)| c.clone()).collect();
        countries.dedup();
        let mut products: Vec<String> = sums.keys().map(|(_, p)| p.clone()).collect();
        products.sort();
        products.dedup();

        let n = checked_dims(countries.len(), products.len())?;
        let mut values = vec![0.0; n];
        for ((c, p), v) in &sums {
            let ci = countries.binary_search(c).expect("country indexed");
            let pi = products.binary_search(p).expect("product indexed");
            values[ci * products.len() + pi] = *v;
        }
        Ok(Self {
            countries,
            products,
            values,
        })
    }

    pub fn value(&self, country: usize, product: usize) -> f64 {
        self.weight(country, product)
    }

    /// Grand total X, accumulated as the sum of the country totals.
    pub fn grand_total(&self) -> f64 {
        self.country_totals().iter().sum()
    }

    /// All values multiplied by a positive factor (unit change).
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor.is_finite() && factor > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "scale factor must be positive and finite, got {factor}"
            )));
        }
        Self::from_dense(
            self.countries.clone(),
            self.products.clone(),
            self.values.iter().map(|v| v * factor).collect(),
        )
    }

    /// Remove all-zero rows and columns until none remain. Returns the pruned
    /// matrix plus the dropped country and product labels. Idempotent.
    pub fn prune(&self) -> Result<(Self, Vec<String>, Vec<String>)> {
        self.prune_with_min_totals(0.0, 0.0)
    }

    /// Pruning with minimum-total filters: countries whose total export falls
    /// below `min_country_total` (and likewise products below
    /// `min_product_total`) are dropped along with the all-zero rows and
    /// columns. Dropping is repeated until the matrix is stable, since
    /// removing a country lowers product totals and vice versa.
    pub fn prune_with_min_totals(
        &self,
        min_country_total: f64,
        min_product_total: f64,
    ) -> Result<(Self, Vec<String>, Vec<String>)> {
        for (name, m) in [("country", min_country_total), ("product", min_product_total)] {
            if !(m.is_finite() && m >= 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "minimum {name} total must be nonnegative and finite, got {m}"
                )));
            }
        }

        let mut keep_c: Vec<bool> = vec![true; self.countries.len()];
        let mut keep_p: Vec<bool> = vec![true; self.products.len()];
        loop {
            let mut changed = false;
            for c in 0..self.countries.len() {
                if !keep_c[c] {
                    continue;
                }
                let total: f64 = (0..self.products.len())
                    .filter(|&p| keep_p[p])
                    .map(|p| self.weight(c, p))
                    .sum();
                if !(total > 0.0 && total >= min_country_total) {
                    keep_c[c] = false;
                    changed = true;
                }
            }
            for p in 0..self.products.len() {
                if !keep_p[p] {
                    continue;
                }
                let total: f64 = (0..self.countries.len())
                    .filter(|&c| keep_c[c])
                    .map(|c| self.weight(c, p))
                    .sum();
                if !(total > 0.0 && total >= min_product_total) {
                    keep_p[p] = false;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }

        if !keep_c.iter().any(|&k| k) || !keep_p.iter().any(|&k| k) {
            return Err(Error::AllPruned);
        }

        let countries: Vec<String> = select(&self.countries, &keep_c);
        let products: Vec<String> = select(&self.products, &keep_p);
        let mut values = Vec::with_capacity(countries.len() * products.len());
        for c in 0..self.countries.len() {
            if !keep_c[c] {
                continue;
            }
            for p in 0..self.products.len() {
                if keep_p[p] {
                    values.push(self.weight(c, p));
                }
            }
        }
        let dropped_c = reject(&self.countries, &keep_c);
        let dropped_p = reject(&self.products, &keep_p);
        Ok((
            Self {
                countries,
                products,
                values,
            },
            dropped_c,
            dropped_p,
        ))
    }

    /// Revealed comparative advantage: RCA_cp = (X_cp / X_c) / (X_p / X).
    ///
    /// Requires a pruned matrix so no denominator vanishes. The result is
    /// dimensionless and invariant under a global rescaling of the flows.
    pub fn rca(&self) -> Result<RcaMatrix> {
        let country_totals = self.country_totals();
        let product_totals = self.product_totals();
        if country_totals.iter().any(|&t| t <= 0.0) || product_totals.iter().any(|&t| t <= 0.0) {
            return Err(Error::NotPruned);
        }
        let total: f64 = country_totals.iter().sum();

        let np = self.products.len();
        let mut values = vec![0.0; self.values.len()];
        for c in 0..self.countries.len() {
            for p in 0..np {
                values[c * np + p] =
                    (self.weight(c, p) / country_totals[c]) / (product_totals[p] / total);
            }
        }
        Ok(RcaMatrix {
            countries: self.countries.clone(),
            products: self.products.clone(),
            values,
        })
    }
}

fn select(labels: &[String], keep: &[bool]) -> Vec<String> {
    labels
        .iter()
        .zip(keep)
        .filter(|(_, &k)| k)
        .map(|(l, _)| l.clone())
        .collect()
}

fn reject(labels: &[String], keep: &[bool]) -> Vec<String> {
    labels
        .iter()
        .zip(keep)
        .filter(|(_, &k)| !k)
        .map(|(l, _)| l.clone())
        .collect()
}

/// Dimensionless RCA ratios with the same index structure as the flows.
#[derive(Clone, Debug, PartialEq)]
pub struct RcaMatrix {
    countries: Vec<String>,
    products: Vec<String>,
    values: Vec<f64>,
}

impl RcaMatrix {
    pub fn countries(&self) -> &[String] {
        &self.countries
    }

    pub fn products(&self) -> &[String] {
        &self.products
    }

    pub fn value(&self, country: usize, product: usize) -> f64 {
        self.values[country * self.products.len() + product]
    }

    /// Threshold into the binary matrix: entry 1 iff RCA strictly exceeds
    /// `threshold` (1 by default; an RCA of exactly 1 maps to 0). Rows and
    /// columns left empty by the thresholding are dropped and reported.
    pub fn binarize(&self, threshold: f64) -> Result<(BinaryMatrix, Vec<String>, Vec<String>)> {
        if !(threshold.is_finite() && threshold > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "threshold must be positive and finite, got {threshold}"
            )));
        }
        let np = self.products.len();
        let bits: Vec<u8> = self
            .values
            .iter()
            .map(|&v| u8::from(v > threshold))
            .collect();

        let keep_c: Vec<bool> = (0..self.countries.len())
            .map(|c| bits[c * np..(c + 1) * np].iter().any(|&b| b == 1))
            .collect();
        let keep_p: Vec<bool> = (0..np)
            .map(|p| (0..self.countries.len()).any(|c| bits[c * np + p] == 1))
            .collect();
        if !keep_c.iter().any(|&k| k) || !keep_p.iter().any(|&k| k) {
            return Err(Error::AllPruned);
        }

        let countries = select(&self.countries, &keep_c);
        let products = select(&self.products, &keep_p);
        let mut values = Vec::with_capacity(countries.len() * products.len());
        for c in 0..self.countries.len() {
            if !keep_c[c] {
                continue;
            }
            for p in 0..np {
                if keep_p[p] {
                    values.push(bits[c * np + p]);
                }
            }
        }
        Ok((
            BinaryMatrix {
                countries,
                products,
                values,
            },
            reject(&self.countries, &keep_c),
            reject(&self.products, &keep_p),
        ))
    }
}

/// 0/1 export matrix M_cp from RCA thresholding. Pruned by construction:
/// every country exports at least one product and every product has at
/// least one exporter.
#[derive(Clone, Debug, PartialEq)]
pub struct BinaryMatrix {
    countries: Vec<String>,
    products: Vec<String>,
    values: Vec<u8>,
}

impl BipartiteWeights for BinaryMatrix {
    fn countries(&self) -> &[String] {
        &self.countries
    }

    fn products(&self) -> &[String] {
        &self.products
    }

    fn weight(&self, country: usize, product: usize) -> f64 {
        f64::from(self.values[country * self.products.len() + product])
    }
}

impl BinaryMatrix {
    /// Build directly from 0/1 entries; mainly for tests and synthetic data.
    pub fn from_bits(
        countries: Vec<String>,
        products: Vec<String>,
        values: Vec<u8>,
    ) -> Result<Self> {
        let n = checked_dims(countries.len(), products.len())?;
        if values.len() != n {
            return Err(Error::LengthMismatch {
                left: values.len(),
                right: n,
            });
        }
        check_labels(&countries)?;
        check_labels(&products)?;
        if values.iter().any(|&b| b > 1) {
            return Err(Error::InvalidParameter(
                "binary matrix entries must be 0 or 1".into(),
            ));
        }
        let m = Self {
            countries,
            products,
            values,
        };
        if !m.is_pruned() {
            return Err(Error::NotPruned);
        }
        Ok(m)
    }

    pub fn bit(&self, country: usize, product: usize) -> u8 {
        self.values[country * self.products.len() + product]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(prefix: &str, n: usize) -> Vec<String> {
        (0..n).map(|i| format!("{prefix}{i}")).collect()
    }

    fn matrix(rows: &[&[f64]]) -> ExportMatrix {
        let nc = rows.len();
        let np = rows[0].len();
        ExportMatrix::from_dense(
            labels("C", nc),
            labels("P", np),
            rows.iter().flat_map(|r| r.iter().copied()).collect(),
        )
        .unwrap()
    }

    #[test]
    fn ingest_sums_duplicates() {
        let m = ExportMatrix::ingest_flows(vec![("A", "p1", 10.0), ("A", "p1", 5.0)]).unwrap();
        assert_eq!(m.n_countries(), 1);
        assert_eq!(m.n_products(), 1);
        assert_eq!(m.value(0, 0), 15.0);
    }

    #[test]
    fn ingest_empty_is_an_error() {
        let err = ExportMatrix::ingest_flows(Vec::<(String, String, f64)>::new()).unwrap_err();
        assert!(matches!(err, Error::EmptyInput));
    }

    #[test]
    fn ingest_rejects_negative_and_non_finite() {
        let err = ExportMatrix::ingest_flows(vec![("A", "p1", -3.0)]).unwrap_err();
        assert!(matches!(err, Error::NegativeValue { .. }));
        let err = ExportMatrix::ingest_flows(vec![("A", "p1", f64::NAN)]).unwrap_err();
        assert!(matches!(err, Error::NonFiniteValue { .. }));
    }

    #[test]
    fn ingest_sorts_labels() {
        let m =
            ExportMatrix::ingest_flows(vec![("B", "q", 1.0), ("A", "p", 2.0), ("B", "p", 3.0)])
                .unwrap();
        assert_eq!(m.countries(), ["A", "B"]);
        assert_eq!(m.products(), ["p", "q"]);
        assert_eq!(m.value(1, 1), 1.0);
        assert_eq!(m.value(0, 0), 2.0);
        assert_eq!(m.value(0, 1), 0.0);
    }

    #[test]
    fn prune_drops_zero_rows_and_columns() {
        let m = matrix(&[&[1.0, 0.0], &[0.0, 0.0]]);
        let (pruned, dc, dp) = m.prune().unwrap();
        assert_eq!(pruned.n_countries(), 1);
        assert_eq!(pruned.n_products(), 1);
        assert_eq!(pruned.value(0, 0), 1.0);
        assert_eq!(dc, ["C1"]);
        assert_eq!(dp, ["P1"]);
    }

    #[test]
    fn prune_is_a_noop_on_full_matrices() {
        let m = matrix(&[&[1.0, 1.0], &[1.0, 1.0]]);
        let (pruned, dc, dp) = m.prune().unwrap();
        assert_eq!(pruned, m);
        assert!(dc.is_empty() && dp.is_empty());
    }

    #[test]
    fn prune_of_all_zero_matrix_fails() {
        let m = matrix(&[&[0.0, 0.0], &[0.0, 0.0]]);
        assert!(matches!(m.prune().unwrap_err(), Error::AllPruned));
    }

    #[test]
    fn prune_is_idempotent() {
        let m = matrix(&[&[1.0, 0.0, 2.0], &[0.0, 0.0, 0.0], &[3.0, 0.0, 0.0]]);
        let (once, _, _) = m.prune().unwrap();
        let (twice, dc, dp) = once.prune().unwrap();
        assert_eq!(once, twice);
        assert!(dc.is_empty() && dp.is_empty());
    }

    #[test]
    fn min_total_filters_cascade() {
        // Dropping C1 (total 3 < 5) removes P2's only support.
        let m = matrix(&[&[10.0, 0.0, 0.0], &[0.0, 1.0, 2.0], &[0.0, 7.0, 0.0]]);
        let (pruned, dc, dp) = m.prune_with_min_totals(5.0, 0.0).unwrap();
        assert_eq!(dc, ["C1"]);
        assert_eq!(dp, ["P2"]);
        assert_eq!(pruned.n_countries(), 2);
        assert_eq!(pruned.n_products(), 2);
    }

    #[test]
    fn rca_of_uniform_matrix_is_all_ones() {
        let m = matrix(&[&[1.0, 1.0], &[1.0, 1.0]]);
        let r = m.rca().unwrap();
        for c in 0..2 {
            for p in 0..2 {
                assert_eq!(r.value(c, p), 1.0);
            }
        }
    }

    #[test]
    fn rca_of_diagonal_matrix() {
        let m = matrix(&[&[10.0, 0.0], &[0.0, 10.0]]);
        let r = m.rca().unwrap();
        assert_eq!(r.value(0, 0), 2.0);
        assert_eq!(r.value(0, 1), 0.0);
        assert_eq!(r.value(1, 0), 0.0);
        assert_eq!(r.value(1, 1), 2.0);
    }

    #[test]
    fn rca_requires_pruning() {
        let m = matrix(&[&[1.0, 0.0], &[1.0, 0.0]]);
        assert!(matches!(m.rca().unwrap_err(), Error::NotPruned));
    }

    #[test]
    fn rca_zero_exactly_where_flows_are_zero() {
        let m = matrix(&[&[1.0, 0.0, 2.0], &[3.0, 4.0, 0.0], &[0.0, 5.0, 6.0]]);
        let r = m.rca().unwrap();
        for c in 0..3 {
            for p in 0..3 {
                assert_eq!(r.value(c, p) == 0.0, m.value(c, p) == 0.0);
            }
        }
    }

    #[test]
    fn binarize_is_strict_at_the_threshold() {
        // RCA values: [[4/3, 2/3], [2/3, 4/3]] -> strict threshold keeps the diagonal.
        let m = matrix(&[&[2.0, 1.0], &[1.0, 2.0]]);
        let r = m.rca().unwrap();
        let (b, _, _) = r.binarize(1.0).unwrap();
        assert_eq!(b.bit(0, 0), 1);
        assert_eq!(b.bit(0, 1), 0);
        assert_eq!(b.bit(1, 0), 0);
        assert_eq!(b.bit(1, 1), 1);

        // RCA exactly 1 everywhere -> nothing strictly exceeds the threshold.
        let uniform = matrix(&[&[1.0, 1.0], &[1.0, 1.0]]);
        let r = uniform.rca().unwrap();
        assert!(matches!(r.binarize(1.0).unwrap_err(), Error::AllPruned));
    }

    #[test]
    fn binarize_reports_dropped_labels() {
        // C2 mirrors the world average closely enough to lose every product.
        let m = matrix(&[&[9.0, 1.0], &[1.0, 9.0], &[5.0, 5.0]]);
        let r = m.rca().unwrap();
        let (b, dropped_c, _) = r.binarize(1.0).unwrap();
        assert_eq!(dropped_c, ["C2"]);
        assert_eq!(b.n_countries(), 2);
    }

    #[test]
    fn grand_total_matches_country_totals() {
        let m = matrix(&[&[1.5, 2.5], &[3.0, 4.0]]);
        assert_eq!(m.grand_total(), 11.0);
        let by_country: f64 = m.country_totals().iter().sum();
        assert_eq!(m.grand_total(), by_country);
    }

    #[test]
    fn scaled_rejects_bad_factors() {
        let m = matrix(&[&[1.0]]);
        assert!(m.scaled(0.0).is_err());
        assert!(m.scaled(f64::NAN).is_err());
        assert_eq!(m.scaled(2.0).unwrap().value(0, 0), 2.0);
    }

    #[test]
    fn duplicate_labels_rejected() {
        let err = ExportMatrix::from_dense(
            vec!["A".into(), "A".into()],
            vec!["p".into()],
            vec![1.0, 2.0],
        )
        .unwrap_err();
        assert!(matches!(err, Error::DuplicateLabel { .. }));
    }
}
