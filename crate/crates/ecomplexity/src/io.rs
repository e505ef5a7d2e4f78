//! File formats: flow CSV ingestion, matrix JSON, score and scatter CSV,
//! the run-configuration text format, and trace export.
//!
//! Every reader here consumes untrusted input and must fail with an error,
//! never a panic, whatever the bytes are. The fuzz targets under `fuzz/`
//! exercise exactly these entry points.

use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::analysis::ScatterRow;
use crate::eciplus::EciPlusResult;
use crate::error::{Error, Result};
use crate::fitness::{AlgoConfig, Init, IterationTrace, Normalization, Normalizers, Stop};
use crate::matrix::{BipartiteWeights, ExportMatrix, MAX_DENSE_ENTRIES};

pub const FLOWS_HEADER: [&str; 3] = ["country", "product", "value"];

/// Read `country,product,value` flow records and aggregate them into an
/// (unpruned) export matrix. Errors carry 1-based line numbers.
pub fn read_flows_csv<R: Read>(reader: R) -> Result<ExportMatrix> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let headers = rdr.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != FLOWS_HEADER {
        return Err(Error::CsvFormat {
            line: 1,
            message: format!(
                "expected header {:?}, found {:?}",
                FLOWS_HEADER.join(","),
                headers.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }

    let mut records = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 3 {
            return Err(Error::CsvFormat {
                line,
                message: format!("expected 3 fields, found {}", record.len()),
            });
        }
        let value: f64 = record[2].parse().map_err(|_| Error::CsvFormat {
            line,
            message: format!("cannot parse value {:?} as a number", &record[2]),
        })?;
        records.push((record[0].to_string(), record[1].to_string(), value));
    }
    ExportMatrix::ingest_flows(records)
}

/// Byte-slice front end for [`read_flows_csv`].
pub fn parse_flows_csv(bytes: &[u8]) -> Result<ExportMatrix> {
    read_flows_csv(bytes)
}

#[derive(Serialize, Deserialize)]
struct MatrixJson {
    countries: Vec<String>,
    products: Vec<String>,
    triplets: Vec<(usize, usize, f64)>,
}

/// Serialize a matrix as `{countries, products, triplets}` with triplets
/// `[country_index, product_index, value]` sorted by (country, product) and
/// zero entries omitted.
pub fn matrix_to_json(m: &ExportMatrix) -> String {
    let mut triplets = Vec::new();
    for c in 0..m.n_countries() {
        for p in 0..m.n_products() {
            let v = m.value(c, p);
            if v != 0.0 {
                triplets.push((c, p, v));
            }
        }
    }
    let doc = MatrixJson {
        countries: m.countries().to_vec(),
        products: m.products().to_vec(),
        triplets,
    };
    serde_json::to_string(&doc).expect("matrix serializes")
}

/// Parse and validate a matrix JSON document.
pub fn matrix_from_json(bytes: &[u8]) -> Result<ExportMatrix> {
    let doc: MatrixJson = serde_json::from_slice(bytes)?;
    let (nc, np) = (doc.countries.len(), doc.products.len());
    let entries = nc.checked_mul(np).ok_or(Error::InputTooLarge {
        entries: usize::MAX,
        max: MAX_DENSE_ENTRIES,
    })?;
    if entries > MAX_DENSE_ENTRIES {
        return Err(Error::InputTooLarge {
            entries,
            max: MAX_DENSE_ENTRIES,
        });
    }
    let mut values = vec![0.0; entries];
    let mut filled = vec![false; entries];
    for &(c, p, v) in &doc.triplets {
        if c >= nc || p >= np {
            return Err(Error::InvalidParameter(format!(
                "triplet index ({c}, {p}) out of range for {nc}x{np} matrix"
            )));
        }
        let i = c * np + p;
        if filled[i] {
            return Err(Error::InvalidParameter(format!(
                "duplicate triplet for ({c}, {p})"
            )));
        }
        filled[i] = true;
        values[i] = v;
    }
    ExportMatrix::from_dense(doc.countries, doc.products, values)
}

/// Write a `label,score`-shaped CSV with custom column names.
pub fn scores_to_csv(key: &str, value: &str, labels: &[String], scores: &[f64]) -> Result<String> {
    if labels.len() != scores.len() {
        return Err(Error::LengthMismatch {
            left: labels.len(),
            right: scores.len(),
        });
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([key, value])?;
    for (label, score) in labels.iter().zip(scores) {
        w.serialize((label, score))?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Read labeled scores back. The first column is the label; the score is
/// taken from `column` when given, from the second column otherwise.
pub fn read_scores_csv<R: Read>(reader: R, column: Option<&str>) -> Result<Vec<(String, f64)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let headers = rdr.headers()?.clone();
    if headers.len() < 2 {
        return Err(Error::CsvFormat {
            line: 1,
            message: "score files need a label column and a score column".into(),
        });
    }
    let score_idx = match column {
        None => 1,
        Some(name) => headers.iter().position(|h| h == name).ok_or_else(|| {
            Error::CsvFormat {
                line: 1,
                message: format!(
                    "no column {:?}; available: {}",
                    name,
                    headers.iter().collect::<Vec<_>>().join(",")
                ),
            }
        })?,
    };

    let mut out: Vec<(String, f64)> = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() <= score_idx {
            return Err(Error::CsvFormat {
                line,
                message: format!("expected at least {} fields", score_idx + 1),
            });
        }
        let label = record[0].to_string();
        if !seen.insert(label.clone()) {
            return Err(Error::DuplicateLabel { label });
        }
        let score: f64 = record[score_idx].parse().map_err(|_| Error::CsvFormat {
            line,
            message: format!("cannot parse score {:?} as a number", &record[score_idx]),
        })?;
        if !score.is_finite() {
            return Err(Error::CsvFormat {
                line,
                message: format!("non-finite score {score}"),
            });
        }
        out.push((label, score));
    }
    if out.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(out)
}

/// Byte-slice front end for [`read_scores_csv`].
pub fn parse_scores_csv(bytes: &[u8], column: Option<&str>) -> Result<Vec<(String, f64)>> {
    read_scores_csv(bytes, column)
}

/// Write scatter rows as `label,x,y`.
pub fn scatter_to_csv(rows: &[ScatterRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["label", "x", "y"])?;
    for row in rows {
        w.serialize((&row.label, row.x, row.y))?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Read scatter rows back; used to round-trip tables bit-exactly.
pub fn read_scatter_csv<R: Read>(reader: R) -> Result<Vec<ScatterRow>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(reader);
    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 3 {
            return Err(Error::CsvFormat {
                line,
                message: format!("expected 3 fields, found {}", record.len()),
            });
        }
        let parse = |s: &str| -> Result<f64> {
            s.parse().map_err(|_| Error::CsvFormat {
                line,
                message: format!("cannot parse {s:?} as a number"),
            })
        };
        rows.push(ScatterRow {
            label: record[0].to_string(),
            x: parse(&record[1])?,
            y: parse(&record[2])?,
        });
    }
    Ok(rows)
}

/// The two CSV tables of an ECI+ run: `country,xc_inf,eci_plus` and
/// `product,xp_raw_total,xp_inf,pci_plus`.
pub fn eciplus_tables(x: &ExportMatrix, result: &EciPlusResult) -> Result<(String, String)> {
    let mut cw = csv::Writer::from_writer(Vec::new());
    cw.write_record(["country", "xc_inf", "eci_plus"])?;
    for (i, label) in result.countries.iter().enumerate() {
        cw.serialize((label, result.xc_inf[i], result.eci_plus[i]))?;
    }
    let countries = String::from_utf8(cw.into_inner().map_err(|e| e.into_error())?)
        .expect("csv output is utf-8");

    let totals = x.product_totals();
    let mut pw = csv::Writer::from_writer(Vec::new());
    pw.write_record(["product", "xp_raw_total", "xp_inf", "pci_plus"])?;
    for (i, label) in result.products.iter().enumerate() {
        pw.serialize((label, totals[i], result.xp_inf[i], result.pci_plus[i]))?;
    }
    let products = String::from_utf8(pw.into_inner().map_err(|e| e.into_error())?)
        .expect("csv output is utf-8");
    Ok((countries, products))
}

#[derive(Serialize, Deserialize)]
struct TraceJson {
    iterations: usize,
    #[serde(rename = "F")]
    f: Vec<Vec<f64>>,
    #[serde(rename = "Q")]
    q: Vec<Vec<f64>>,
    normalizers: Vec<Normalizers>,
    converged: bool,
    /// Which iteration each stored row corresponds to (row 0 is the initial
    /// condition); relevant when the trace is thinned.
    kept_iterations: Vec<usize>,
}

/// Serialize a trace, keeping every `keep_every`-th iterate plus the final
/// one. `keep_every` of 1 keeps everything.
pub fn trace_to_json(trace: &IterationTrace, keep_every: usize) -> Result<String> {
    if keep_every < 1 {
        return Err(Error::InvalidParameter(
            "keep-every must be at least 1".into(),
        ));
    }
    let mut kept: Vec<usize> = (0..=trace.iterations).step_by(keep_every).collect();
    if *kept.last().expect("at least the initial row") != trace.iterations {
        kept.push(trace.iterations);
    }
    let doc = TraceJson {
        iterations: trace.iterations,
        f: kept.iter().map(|&i| trace.f[i].clone()).collect(),
        q: kept.iter().map(|&i| trace.q[i].clone()).collect(),
        normalizers: kept.iter().map(|&i| trace.normalizers[i]).collect(),
        converged: trace.converged,
        kept_iterations: kept,
    };
    Ok(serde_json::to_string(&doc).expect("trace serializes"))
}

/// Parse the run-configuration text format: one `key = value` per line,
/// `#` comments. Keys: `init` (ones|degree), `normalization`
/// (arithmetic-mean|geometric-mean, or arith|geom), `stop` (`fixed:N`,
/// `rank-stable:WINDOW` or `rank-stable:WINDOW:CHECK_EVERY`),
/// `max_iterations`, `epsilon_floor`. Missing keys keep their defaults.
pub fn parse_config_text(text: &str) -> Result<AlgoConfig> {
    let mut config = AlgoConfig::default();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::InvalidParameter(format!("config line {line_no}: expected `key = value`"))
        })?;
        let (key, value) = (key.trim(), value.trim());
        let bad = |message: String| {
            Error::InvalidParameter(format!("config line {line_no}: {message}"))
        };
        match key {
            "init" => {
                config.init = match value {
                    "ones" => Init::Ones,
                    "degree" => Init::Degree,
                    other => return Err(bad(format!("unknown init {other:?}"))),
                };
            }
            "normalization" => {
                config.normalization = match value {
                    "arithmetic-mean" | "arithmetic" | "arith" => Normalization::ArithmeticMean,
                    "geometric-mean" | "geometric" | "geom" => Normalization::GeometricMean,
                    other => return Err(bad(format!("unknown normalization {other:?}"))),
                };
            }
            "stop" => {
                let mut parts = value.split(':');
                let kind = parts.next().unwrap_or_default();
                let nums: Vec<&str> = parts.collect();
                config.stop = match (kind, nums.as_slice()) {
                    ("fixed", [n]) => Stop::FixedIterations(
                        n.parse()
                            .map_err(|_| bad(format!("bad iteration count {n:?}")))?,
                    ),
                    ("rank-stable", [w]) => Stop::RankStable {
                        window: w.parse().map_err(|_| bad(format!("bad window {w:?}")))?,
                        check_every: 1,
                    },
                    ("rank-stable", [w, k]) => Stop::RankStable {
                        window: w.parse().map_err(|_| bad(format!("bad window {w:?}")))?,
                        check_every: k
                            .parse()
                            .map_err(|_| bad(format!("bad check interval {k:?}")))?,
                    },
                    _ => {
                        return Err(bad(format!(
                            "unknown stop rule {value:?}; use fixed:N or rank-stable:W[:K]"
                        )))
                    }
                };
            }
            "max_iterations" => {
                config.max_iterations = value
                    .parse()
                    .map_err(|_| bad(format!("bad max_iterations {value:?}")))?;
            }
            "epsilon_floor" => {
                config.epsilon_floor = value
                    .parse()
                    .map_err(|_| bad(format!("bad epsilon_floor {value:?}")))?;
            }
            other => return Err(bad(format!("unknown key {other:?}"))),
        }
    }
    config.validate()?;
    Ok(config)
}

/// Byte-slice front end for [`parse_config_text`].
pub fn parse_config_bytes(bytes: &[u8]) -> Result<AlgoConfig> {
    let text = std::str::from_utf8(bytes)
        .map_err(|e| Error::InvalidParameter(format!("config is not UTF-8: {e}")))?;
    parse_config_text(text)
}
