//! Text persistence formats. All numbers are written with Rust's shortest
//! round-trip float formatting (at most 17 significant digits), so a
//! save/load cycle reproduces every value bit-exactly.
//!
//! * Embeddings (`embtsv v1`): header `embtsv v1 dim=<n>`, then one record
//!   per line: `<id><TAB><label 0|1><TAB><v1> <v2> … <vn>`.
//! * Classifier (`linclf v1`): four lines — `linclf v1`, `dim <n>`,
//!   `b <value>`, `w <v1> … <vn>`.
//! * Bandit (`linucb v1`): `linucb v1`, `dim <n> alpha <α>`,
//!   `arms <λ1> … <λk>`, then per arm an `A` line followed by `n` matrix
//!   rows, a `b` line, and one vector line.

use std::io::{BufRead, BufReader, Read, Write};

use crate::bandit::LinUcb;
use crate::classifier::{LabeledEmbedding, LinearClassifier};
use crate::geometry::Embedding;
use crate::linalg::SquareMat;
use crate::{Error, Result};

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

struct Lines<R> {
    inner: std::io::Lines<BufReader<R>>,
    lineno: usize,
}

impl<R: Read> Lines<R> {
    fn new(input: R) -> Self {
        Self {
            inner: BufReader::new(input).lines(),
            lineno: 0,
        }
    }

    fn next_line(&mut self) -> Result<Option<String>> {
        self.lineno += 1;
        match self.inner.next() {
            None => Ok(None),
            Some(line) => Ok(Some(line?)),
        }
    }

    fn expect_line(&mut self) -> Result<String> {
        let lineno = self.lineno + 1;
        self.next_line()?
            .ok_or_else(|| parse_err(lineno, "unexpected end of file"))
    }
}

fn parse_f64(token: &str, line: usize) -> Result<f64> {
    let v: f64 = token
        .parse()
        .map_err(|_| parse_err(line, format!("invalid number {token:?}")))?;
    if !v.is_finite() {
        return Err(parse_err(line, format!("non-finite value {token:?}")));
    }
    Ok(v)
}

fn parse_vector(text: &str, expected: usize, line: usize) -> Result<Vec<f64>> {
    let values: Vec<&str> = text.split_whitespace().collect();
    if values.len() != expected {
        return Err(parse_err(
            line,
            format!("expected {expected} values, got {}", values.len()),
        ));
    }
    values.iter().map(|t| parse_f64(t, line)).collect()
}

fn join(values: &[f64]) -> String {
    values
        .iter()
        .map(f64::to_string)
        .collect::<Vec<_>>()
        .join(" ")
}

/// Writes labeled embeddings in `embtsv v1` format; ids are the row indices.
pub fn save_embeddings<W: Write>(mut out: W, records: &[LabeledEmbedding<f64>]) -> Result<()> {
    let dim = records
        .first()
        .map(|r| r.embedding.dim())
        .ok_or_else(|| Error::Data("cannot save an empty embedding list".into()))?;
    writeln!(out, "embtsv v1 dim={dim}")?;
    for (id, rec) in records.iter().enumerate() {
        if rec.embedding.dim() != dim {
            return Err(Error::Data(format!(
                "record {id} has dimension {}, expected {dim}",
                rec.embedding.dim()
            )));
        }
        writeln!(
            out,
            "{id}\t{}\t{}",
            rec.label as u8,
            join(rec.embedding.values())
        )?;
    }
    Ok(())
}

pub fn load_embeddings<R: Read>(input: R) -> Result<Vec<LabeledEmbedding<f64>>> {
    let mut lines = Lines::new(input);
    let header = lines.expect_line()?;
    let tokens: Vec<&str> = header.split_whitespace().collect();
    match tokens.as_slice() {
        ["embtsv", "v1", dim_field] => {
            let dim: usize = dim_field
                .strip_prefix("dim=")
                .and_then(|d| d.parse().ok())
                .ok_or_else(|| parse_err(1, format!("malformed header field {dim_field:?}")))?;
            if dim == 0 {
                return Err(parse_err(1, "dim must be at least 1"));
            }
            let mut records = Vec::new();
            while let Some(line) = lines.next_line()? {
                let lineno = lines.lineno;
                if line.trim().is_empty() {
                    continue;
                }
                let fields: Vec<&str> = line.split('\t').collect();
                if fields.len() != 3 {
                    return Err(parse_err(
                        lineno,
                        format!("expected 3 tab-separated fields, got {}", fields.len()),
                    ));
                }
                let label = match fields[1] {
                    "0" => false,
                    "1" => true,
                    other => {
                        return Err(parse_err(
                            lineno,
                            format!("label must be 0 or 1, got {other:?}"),
                        ))
                    }
                };
                let values = parse_vector(fields[2], dim, lineno)?;
                let embedding =
                    Embedding::new(values).map_err(|e| parse_err(lineno, e.to_string()))?;
                records.push(LabeledEmbedding::new(embedding, label));
            }
            Ok(records)
        }
        _ => Err(Error::Version { found: header }),
    }
}

/// Writes a classifier in `linclf v1` format.
pub fn save_classifier<W: Write>(mut out: W, clf: &LinearClassifier<f64>) -> Result<()> {
    writeln!(out, "linclf v1")?;
    writeln!(out, "dim {}", clf.dim())?;
    writeln!(out, "b {}", clf.bias())?;
    writeln!(out, "w {}", join(clf.weights()))?;
    Ok(())
}

pub fn load_classifier<R: Read>(input: R) -> Result<LinearClassifier<f64>> {
    let mut lines = Lines::new(input);
    let header = lines.expect_line()?;
    if header.trim() != "linclf v1" {
        return Err(Error::Version { found: header });
    }
    let dim_line = lines.expect_line()?;
    let dim: usize = dim_line
        .strip_prefix("dim ")
        .and_then(|d| d.trim().parse().ok())
        .ok_or_else(|| parse_err(2, format!("malformed dim line {dim_line:?}")))?;
    if dim == 0 {
        return Err(parse_err(2, "dim must be at least 1"));
    }
    let b_line = lines.expect_line()?;
    let bias = b_line
        .strip_prefix("b ")
        .ok_or_else(|| parse_err(3, format!("malformed bias line {b_line:?}")))
        .and_then(|t| parse_f64(t.trim(), 3))?;
    let w_line = lines.expect_line()?;
    let weights = w_line
        .strip_prefix("w ")
        .ok_or_else(|| parse_err(4, format!("malformed weights line {w_line:?}")))
        .and_then(|t| parse_vector(t, dim, 4))?;
    Ok(LinearClassifier::from_parts(weights, bias)?)
}

/// Writes bandit state in `linucb v1` format.
pub fn save_bandit<W: Write>(mut out: W, bandit: &LinUcb<f64>) -> Result<()> {
    writeln!(out, "linucb v1")?;
    writeln!(out, "dim {} alpha {}", bandit.dim(), bandit.alpha())?;
    writeln!(out, "arms {}", join(bandit.arms()))?;
    for arm in 0..bandit.arms().len() {
        let (a, b) = bandit.arm_stats(arm).map_err(crate::Error::from)?;
        writeln!(out, "A")?;
        for row in a.rows() {
            writeln!(out, "{}", join(row))?;
        }
        writeln!(out, "b")?;
        writeln!(out, "{}", join(b))?;
    }
    Ok(())
}

pub fn load_bandit<R: Read>(input: R) -> Result<LinUcb<f64>> {
    let mut lines = Lines::new(input);
    let header = lines.expect_line()?;
    if header.trim() != "linucb v1" {
        return Err(Error::Version { found: header });
    }
    let meta = lines.expect_line()?;
    let tokens: Vec<&str> = meta.split_whitespace().collect();
    let (dim, alpha) = match tokens.as_slice() {
        ["dim", d, "alpha", a] => (
            d.parse::<usize>()
                .map_err(|_| parse_err(2, format!("invalid dim {d:?}")))?,
            parse_f64(a, 2)?,
        ),
        _ => return Err(parse_err(2, format!("malformed metadata line {meta:?}"))),
    };
    if dim == 0 {
        return Err(parse_err(2, "dim must be at least 1"));
    }
    let arms_line = lines.expect_line()?;
    let arms: Vec<f64> = arms_line
        .strip_prefix("arms ")
        .ok_or_else(|| parse_err(3, format!("malformed arms line {arms_line:?}")))?
        .split_whitespace()
        .map(|t| parse_f64(t, 3))
        .collect::<Result<_>>()?;

    let mut a_mats = Vec::with_capacity(arms.len());
    let mut b_vecs = Vec::with_capacity(arms.len());
    for _ in 0..arms.len() {
        let marker = lines.expect_line()?;
        if marker.trim() != "A" {
            return Err(parse_err(
                lines.lineno,
                format!("expected 'A', got {marker:?}"),
            ));
        }
        let mut rows = Vec::with_capacity(dim);
        for _ in 0..dim {
            let row_line = lines.expect_line()?;
            rows.push(parse_vector(&row_line, dim, lines.lineno)?);
        }
        let a = SquareMat::from_rows(rows)
            .ok_or_else(|| parse_err(lines.lineno, "ragged matrix rows"))?;
        let marker = lines.expect_line()?;
        if marker.trim() != "b" {
            return Err(parse_err(
                lines.lineno,
                format!("expected 'b', got {marker:?}"),
            ));
        }
        let b_line = lines.expect_line()?;
        let b = parse_vector(&b_line, dim, lines.lineno)?;
        a_mats.push(a);
        b_vecs.push(b);
    }
    Ok(LinUcb::from_parts(arms, dim, alpha, a_mats, b_vecs)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sample_embeddings() -> Vec<LabeledEmbedding<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        (0..10)
            .map(|i| {
                let values: Vec<f64> = (0..5)
                    .map(|_| crate::linalg::standard_normal(&mut rng))
                    .collect();
                LabeledEmbedding::new(Embedding::new(values).unwrap(), i % 2 == 0)
            })
            .collect()
    }

    #[test]
    fn embeddings_round_trip_bit_exact() {
        let records = sample_embeddings();
        let mut buf = Vec::new();
        save_embeddings(&mut buf, &records).unwrap();
        let back = load_embeddings(buf.as_slice()).unwrap();
        assert_eq!(back, records);
        // and the files themselves are byte-identical
        let mut buf2 = Vec::new();
        save_embeddings(&mut buf2, &back).unwrap();
        assert_eq!(buf, buf2);
    }

    #[test]
    fn embeddings_reject_bad_rows() {
        let wrong_dim = "embtsv v1 dim=3\n0\t1\t0.5 1.5\n";
        match load_embeddings(wrong_dim.as_bytes()).unwrap_err() {
            Error::Parse { line, message } => {
                assert_eq!(line, 2);
                assert!(message.contains("expected 3 values"));
            }
            other => panic!("unexpected {other:?}"),
        }

        let zero_dim = "embtsv v1 dim=0\n";
        assert!(matches!(
            load_embeddings(zero_dim.as_bytes()).unwrap_err(),
            Error::Parse { line: 1, .. }
        ));

        let bad_version = "embtsv v2 dim=3\n";
        assert!(matches!(
            load_embeddings(bad_version.as_bytes()).unwrap_err(),
            Error::Version { .. }
        ));

        let bad_label = "embtsv v1 dim=1\n0\t2\t0.5\n";
        assert!(matches!(
            load_embeddings(bad_label.as_bytes()).unwrap_err(),
            Error::Parse { line: 2, .. }
        ));

        let non_finite = "embtsv v1 dim=1\n0\t1\tNaN\n";
        assert!(matches!(
            load_embeddings(non_finite.as_bytes()).unwrap_err(),
            Error::Parse { line: 2, .. }
        ));
    }

    #[test]
    fn classifier_round_trip_preserves_predictions_bit_exact() {
        let clf = LinearClassifier::from_parts(
            vec![0.1234567890123456, -2.5e-17, 7.0],
            -0.3860473119183154,
        )
        .unwrap();
        let mut buf = Vec::new();
        save_classifier(&mut buf, &clf).unwrap();
        let back = load_classifier(buf.as_slice()).unwrap();
        assert_eq!(back, clf);
        let z = Embedding::new(vec![0.3, -1.7, 2.9]).unwrap();
        assert_eq!(
            back.predict_proba(&z).unwrap(),
            clf.predict_proba(&z).unwrap()
        );
    }

    #[test]
    fn classifier_load_errors() {
        assert!(matches!(
            load_classifier("linclf v9\n".as_bytes()).unwrap_err(),
            Error::Version { .. }
        ));
        let truncated = "linclf v1\ndim 3\nb 0.5\n";
        assert!(matches!(
            load_classifier(truncated.as_bytes()).unwrap_err(),
            Error::Parse { line: 4, .. }
        ));
        let ragged = "linclf v1\ndim 3\nb 0.5\nw 1.0 2.0\n";
        assert!(matches!(
            load_classifier(ragged.as_bytes()).unwrap_err(),
            Error::Parse { line: 4, .. }
        ));
    }

    fn trained_bandit() -> LinUcb<f64> {
        let mut bandit = LinUcb::new(&[1.0, 1.5, 2.0], 4, 4.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..25 {
            let x: Vec<f64> = (0..4)
                .map(|_| crate::linalg::standard_normal(&mut rng))
                .collect();
            let arm = rng.random_range(0..3);
            let r: f64 = rng.random();
            bandit.update(arm, &Embedding::new(x).unwrap(), r).unwrap();
        }
        bandit
    }

    #[test]
    fn bandit_round_trip_preserves_scores_bit_exact() {
        let bandit = trained_bandit();
        let mut buf = Vec::new();
        save_bandit(&mut buf, &bandit).unwrap();
        let back = load_bandit(buf.as_slice()).unwrap();
        assert_eq!(back, bandit);
        let x = Embedding::new(vec![0.2, -0.4, 1.1, 0.9]).unwrap();
        assert_eq!(back.ucb_scores(&x).unwrap(), bandit.ucb_scores(&x).unwrap());
    }

    #[test]
    fn bandit_load_rejects_truncation_and_non_pd() {
        let bandit = trained_bandit();
        let mut buf = Vec::new();
        save_bandit(&mut buf, &bandit).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let truncated: String = text.lines().take(8).collect::<Vec<_>>().join("\n");
        assert!(matches!(
            load_bandit(truncated.as_bytes()).unwrap_err(),
            Error::Parse { .. }
        ));

        let non_pd = "linucb v1\ndim 2 alpha 4\narms 1\nA\n1 2\n2 1\nb\n0 0\n";
        assert!(matches!(
            load_bandit(non_pd.as_bytes()).unwrap_err(),
            Error::Bandit(crate::bandit::BanditError::NotPositiveDefinite)
        ));
    }
}
