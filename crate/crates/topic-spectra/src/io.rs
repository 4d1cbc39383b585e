//! On-disk formats.
//!
//! A corpus directory holds `manifest.json` (`{p, n, lengths}`) next to
//! `counts.csv`, a triplet file `doc_id,word_id,count` with 0-based
//! indices and a mandatory header line. Matrices (topic and weight
//! estimates, ground truth) are headerless CSV, row-major, printed with 17
//! significant digits so reading back reproduces every f64 bit-exactly.

use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use crate::corpus::{Corpus, TopicModel};
use crate::error::{Error, Result};
use crate::mat::Mat;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const COUNTS_FILE: &str = "counts.csv";
pub const TOPICS_FILE: &str = "a.csv";
pub const WEIGHTS_FILE: &str = "w.csv";

#[derive(serde::Serialize, serde::Deserialize)]
struct CorpusManifest {
    p: usize,
    n: usize,
    lengths: Vec<u32>,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes `manifest.json` and `counts.csv` into `dir`, creating it if
/// needed.
pub fn write_corpus(corpus: &Corpus, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let manifest = CorpusManifest {
        p: corpus.vocab_size(),
        n: corpus.num_docs(),
        lengths: corpus.lengths().to_vec(),
    };
    write_json(&manifest, &dir.join(MANIFEST_FILE))?;

    let path = dir.join(COUNTS_FILE);
    let mut out = String::from("doc_id,word_id,count\n");
    for i in 0..corpus.num_docs() {
        for &(w, c) in corpus.doc(i) {
            out.push_str(&format!("{i},{w},{c}\n"));
        }
    }
    std::fs::write(&path, out).map_err(io_err(&path))
}

/// Reads a corpus directory, validating every invariant: indices in
/// range, nonnegative counts, and column sums equal to the declared
/// lengths.
pub fn read_corpus(dir: &Path) -> Result<Corpus> {
    let manifest_path = dir.join(MANIFEST_FILE);
    let text = std::fs::read_to_string(&manifest_path).map_err(io_err(&manifest_path))?;
    let manifest: CorpusManifest =
        serde_json::from_str(&text).map_err(|e| Error::MalformedManifest {
            path: manifest_path.clone(),
            reason: e.to_string(),
        })?;
    if manifest.lengths.len() != manifest.n {
        return Err(Error::MalformedManifest {
            path: manifest_path,
            reason: format!(
                "{} lengths declared for n = {}",
                manifest.lengths.len(),
                manifest.n
            ),
        });
    }

    let counts_path = dir.join(COUNTS_FILE);
    let file = std::fs::File::open(&counts_path).map_err(io_err(&counts_path))?;
    let reader = BufReader::new(file);
    let mut docs: Vec<Vec<(u32, u32)>> = vec![vec![]; manifest.n];
    let mut lines = reader.lines().enumerate();

    let header = match lines.next() {
        Some((_, Ok(h))) => h,
        Some((_, Err(e))) => return Err(io_err(&counts_path)(e)),
        None => {
            return Err(Error::MalformedRecord {
                path: counts_path,
                line: 1,
                reason: "missing header line".into(),
            })
        }
    };
    if header.trim() != "doc_id,word_id,count" {
        return Err(Error::MalformedRecord {
            path: counts_path,
            line: 1,
            reason: format!("expected header `doc_id,word_id,count`, found `{header}`"),
        });
    }

    for (idx, line) in lines {
        let line = line.map_err(io_err(&counts_path))?;
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let mut next_field = |name: &str| -> Result<i64> {
            let field = fields.next().ok_or_else(|| Error::MalformedRecord {
                path: counts_path.clone(),
                line: line_no,
                reason: format!("missing field `{name}`"),
            })?;
            field.trim().parse::<i64>().map_err(|_| Error::MalformedRecord {
                path: counts_path.clone(),
                line: line_no,
                reason: format!("field `{name}` is not an integer: `{field}`"),
            })
        };
        let doc = next_field("doc_id")?;
        let word = next_field("word_id")?;
        let count = next_field("count")?;
        if doc < 0 || doc as usize >= manifest.n {
            return Err(Error::IndexOutOfRange {
                path: counts_path,
                line: line_no,
                axis: "doc_id",
                index: doc.max(0) as usize,
                bound: manifest.n,
            });
        }
        if word < 0 || word as usize >= manifest.p {
            return Err(Error::IndexOutOfRange {
                path: counts_path,
                line: line_no,
                axis: "word_id",
                index: word.max(0) as usize,
                bound: manifest.p,
            });
        }
        if count < 0 {
            return Err(Error::MalformedRecord {
                path: counts_path,
                line: line_no,
                reason: format!("negative count {count}"),
            });
        }
        if count > 0 {
            docs[doc as usize].push((word as u32, count as u32));
        }
    }
    for col in &mut docs {
        col.sort_unstable();
    }
    Corpus::new(manifest.p, docs, manifest.lengths)
}

/// Headerless row-major CSV with 17 significant digits per entry.
pub fn write_matrix_csv(m: &Mat, path: &Path) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    let file = std::fs::File::create(path).map_err(io_err(path))?;
    let mut out = std::io::BufWriter::new(file);
    for i in 0..m.rows() {
        let row = m
            .row(i)
            .iter()
            .map(|v| format!("{v:.16e}"))
            .collect::<Vec<_>>()
            .join(",");
        writeln!(out, "{row}").map_err(io_err(path))?;
    }
    out.flush().map_err(io_err(path))
}

pub fn read_matrix_csv(path: &Path) -> Result<Mat> {
    let file = std::fs::File::open(path).map_err(io_err(path))?;
    let reader = BufReader::new(file);
    let mut rows: Vec<Vec<f64>> = vec![];
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let row: std::result::Result<Vec<f64>, _> = line
            .split(',')
            .map(|f| f.trim().parse::<f64>())
            .collect();
        let row = row.map_err(|e| Error::MalformedRecord {
            path: path.to_path_buf(),
            line: idx + 1,
            reason: format!("non-numeric entry: {e}"),
        })?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(Error::MalformedRecord {
                    path: path.to_path_buf(),
                    line: idx + 1,
                    reason: format!("ragged row: {} fields, expected {}", row.len(), first.len()),
                });
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::MalformedRecord {
            path: path.to_path_buf(),
            line: 1,
            reason: "empty matrix file".into(),
        });
    }
    Ok(Mat::from_rows(&rows))
}

/// Writes ground truth or estimates: `a.csv` (p×K) and `w.csv` (K×n).
pub fn write_topic_model(model: &TopicModel, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    write_matrix_csv(model.topics(), &dir.join(TOPICS_FILE))?;
    write_matrix_csv(model.weights(), &dir.join(WEIGHTS_FILE))
}

pub fn read_topic_model(dir: &Path) -> Result<TopicModel> {
    let a = read_matrix_csv(&dir.join(TOPICS_FILE))?;
    let w = read_matrix_csv(&dir.join(WEIGHTS_FILE))?;
    TopicModel::new(a, w)
}

/// Pretty-printed JSON with a trailing newline.
pub fn write_json<T: serde::Serialize>(value: &T, path: &Path) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Domain {
        what: format!("json serialization: {e}"),
    })?;
    text.push('\n');
    std::fs::write(path, text).map_err(io_err(path))
}

/// Resolves a path that must already exist, for friendlier CLI errors.
pub fn existing_dir(path: &str) -> Result<PathBuf> {
    let p = PathBuf::from(path);
    if p.is_dir() {
        Ok(p)
    } else {
        Err(Error::Io {
            path: p,
            source: std::io::Error::new(std::io::ErrorKind::NotFound, "directory not found"),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{generate_synthetic_corpus, LengthLaw, SyntheticParams};

    fn tmpdir(tag: &str) -> PathBuf {
        let dir = std::env::temp_dir().join(format!(
            "topic-spectra-io-{tag}-{}",
            std::process::id()
        ));
        let _ = std::fs::remove_dir_all(&dir);
        std::fs::create_dir_all(&dir).unwrap();
        dir
    }

    #[test]
    fn corpus_round_trip() {
        let params = SyntheticParams {
            p: 18,
            n: 25,
            k: 2,
            length_law: LengthLaw::Uniform(5, 20),
            anchor_words_per_topic: 2,
            ..Default::default()
        };
        let (corpus, _) = generate_synthetic_corpus(&params, 77).unwrap();
        let dir = tmpdir("corpus-rt");
        write_corpus(&corpus, &dir).unwrap();
        let back = read_corpus(&dir).unwrap();
        assert_eq!(corpus, back);
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn model_round_trip_is_bit_exact() {
        let params = SyntheticParams {
            p: 12,
            n: 9,
            k: 3,
            length_law: LengthLaw::Fixed(11),
            anchor_words_per_topic: 1,
            ..Default::default()
        };
        let (_, model) = generate_synthetic_corpus(&params, 5).unwrap();
        let dir = tmpdir("model-rt");
        write_topic_model(&model, &dir).unwrap();
        let back = read_topic_model(&dir).unwrap();
        assert_eq!(model.topics(), back.topics());
        assert_eq!(model.weights(), back.weights());
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn rejects_out_of_range_doc_index() {
        let dir = tmpdir("bad-doc");
        std::fs::write(
            dir.join(MANIFEST_FILE),
            r#"{"p": 3, "n": 2, "lengths": [2, 2]}"#,
        )
        .unwrap();
        std::fs::write(
            dir.join(COUNTS_FILE),
            "doc_id,word_id,count\n0,0,2\n5,1,2\n",
        )
        .unwrap();
        let err = read_corpus(&dir).unwrap_err();
        match err {
            Error::IndexOutOfRange { axis, index, bound, line, .. } => {
                assert_eq!(axis, "doc_id");
                assert_eq!(index, 5);
                assert_eq!(bound, 2);
                assert_eq!(line, 3);
            }
            other => panic!("unexpected error: {other}"),
        }
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn rejects_length_mismatch() {
        let dir = tmpdir("bad-len");
        std::fs::write(
            dir.join(MANIFEST_FILE),
            r#"{"p": 3, "n": 1, "lengths": [5]}"#,
        )
        .unwrap();
        std::fs::write(dir.join(COUNTS_FILE), "doc_id,word_id,count\n0,0,2\n0,1,2\n").unwrap();
        let err = read_corpus(&dir).unwrap_err();
        assert!(
            matches!(err, Error::LengthMismatch { doc: 0, declared: 5, actual: 4 }),
            "{err}"
        );
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn rejects_negative_and_malformed_records() {
        let dir = tmpdir("bad-rec");
        std::fs::write(
            dir.join(MANIFEST_FILE),
            r#"{"p": 3, "n": 1, "lengths": [2]}"#,
        )
        .unwrap();
        std::fs::write(dir.join(COUNTS_FILE), "doc_id,word_id,count\n0,0,-2\n").unwrap();
        assert!(matches!(
            read_corpus(&dir).unwrap_err(),
            Error::MalformedRecord { line: 2, .. }
        ));

        std::fs::write(dir.join(COUNTS_FILE), "wrong,header,here\n0,0,2\n").unwrap();
        assert!(matches!(
            read_corpus(&dir).unwrap_err(),
            Error::MalformedRecord { line: 1, .. }
        ));

        std::fs::write(dir.join(MANIFEST_FILE), "{not json").unwrap();
        assert!(matches!(
            read_corpus(&dir).unwrap_err(),
            Error::MalformedManifest { .. }
        ));
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn matrix_round_trip_preserves_bits() {
        let m = Mat::from_rows(&[
            vec![std::f64::consts::PI, 1.0 / 3.0, 1e-300],
            vec![-2.5e17, f64::EPSILON, 0.1 + 0.2],
        ]);
        let dir = tmpdir("mat-rt");
        let path = dir.join("m.csv");
        write_matrix_csv(&m, &path).unwrap();
        let back = read_matrix_csv(&path).unwrap();
        assert_eq!(m, back);
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn matrix_reader_rejects_garbage() {
        let dir = tmpdir("mat-bad");
        let path = dir.join("m.csv");
        std::fs::write(&path, "1.0,2.0\n3.0,abc\n").unwrap();
        assert!(matches!(
            read_matrix_csv(&path).unwrap_err(),
            Error::MalformedRecord { line: 2, .. }
        ));
        std::fs::write(&path, "1.0,2.0\n3.0\n").unwrap();
        assert!(matches!(
            read_matrix_csv(&path).unwrap_err(),
            Error::MalformedRecord { line: 2, .. }
        ));
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
