//! Labeled vectors and the CSV interchange format.
//!
//! One row per sample: `label,x1,...,xL`. A header row is optional and is
//! recognised by its second field not parsing as a number. `L` is taken from
//! the first data row.

use std::cmp::Ordering;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{validation, Error, Result};

/// Orders labels numerically when both parse as integers, otherwise
/// lexicographically. Integers sort before other labels.
pub fn label_cmp(a: &str, b: &str) -> Ordering {
    match (a.parse::<i64>(), b.parse::<i64>()) {
        (Ok(x), Ok(y)) => x.cmp(&y),
        (Ok(_), Err(_)) => Ordering::Less,
        (Err(_), Ok(_)) => Ordering::Greater,
        _ => a.cmp(b),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    dim: usize,
    labels: Vec<String>,
    samples: Vec<DVector<f64>>,
}

/// All samples of one class as the columns of an `L × n_c` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassData {
    pub label: String,
    pub samples: DMatrix<f64>,
}

impl ClassData {
    pub fn count(&self) -> usize {
        self.samples.ncols()
    }

    pub fn dim(&self) -> usize {
        self.samples.nrows()
    }

    pub fn mean(&self) -> DVector<f64> {
        self.samples.column_mean()
    }
}

impl Dataset {
    pub fn new(dim: usize) -> Self {
        Dataset {
            dim,
            labels: Vec::new(),
            samples: Vec::new(),
        }
    }

    pub fn push(&mut self, label: impl Into<String>, x: DVector<f64>) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        self.labels.push(label.into());
        self.samples.push(x);
        Ok(())
    }

    /// Adds every column of `samples` under `label`.
    pub fn push_columns(&mut self, label: &str, samples: &DMatrix<f64>) -> Result<()> {
        for c in samples.column_iter() {
            self.push(label, c.into_owned())?;
        }
        Ok(())
    }

    pub fn from_classes(classes: &[ClassData]) -> Result<Self> {
        let dim = classes
            .first()
            .map(ClassData::dim)
            .ok_or_else(|| validation("no classes"))?;
        let mut ds = Dataset::new(dim);
        for c in classes {
            ds.push_columns(&c.label, &c.samples)?;
        }
        Ok(ds)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn samples(&self) -> &[DVector<f64>] {
        &self.samples
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &DVector<f64>)> {
        self.labels
            .iter()
            .map(String::as_str)
            .zip(self.samples.iter())
    }

    /// Distinct labels in [`label_cmp`] order.
    pub fn distinct_labels(&self) -> Vec<String> {
        let mut l = self.labels.clone();
        l.sort_by(|a, b| label_cmp(a, b));
        l.dedup();
        l
    }

    /// Groups samples by label, classes in [`label_cmp`] order and samples in
    /// file order within each class.
    pub fn group(&self) -> Vec<ClassData> {
        self.distinct_labels()
            .into_iter()
            .map(|label| {
                let cols: Vec<&DVector<f64>> = self
                    .iter()
                    .filter(|(l, _)| *l == label)
                    .map(|(_, x)| x)
                    .collect();
                let samples = DMatrix::from_fn(self.dim, cols.len(), |i, j| cols[j][i]);
                ClassData { label, samples }
            })
            .collect()
    }

    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut ds: Option<Dataset> = None;
        for (index, record) in rdr.records().enumerate() {
            let record = record.map_err(|e| Error::MalformedRow {
                line: e.position().map_or(0, |p| p.line()),
                message: e.to_string(),
            })?;
            let line = record.position().map_or(index as u64 + 1, |p| p.line());
            if record.iter().all(str::is_empty) {
                continue;
            }
            if record.len() < 2 {
                return Err(Error::MalformedRow {
                    line,
                    message: "expected a label and at least one value".into(),
                });
            }
            let is_first = ds.is_none();
            let values: std::result::Result<Vec<f64>, _> =
                record.iter().skip(1).map(str::parse::<f64>).collect();
            let values = match values {
                Ok(v) => v,
                Err(_) if is_first && index == 0 => continue, // header
                Err(e) => {
                    return Err(Error::MalformedRow {
                        line,
                        message: format!("non-numeric value: {e}"),
                    })
                }
            };
            if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
                return Err(Error::MalformedRow {
                    line,
                    message: format!("non-finite value in column {}", bad + 2),
                });
            }
            let ds = ds.get_or_insert_with(|| Dataset::new(values.len()));
            if values.len() != ds.dim {
                return Err(Error::MalformedRow {
                    line,
                    message: format!("expected {} values, found {}", ds.dim, values.len()),
                });
            }
            ds.push(&record[0], DVector::from_vec(values))?;
        }
        ds.ok_or_else(|| validation("dataset has no rows"))
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let f = File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_csv_reader(std::io::BufReader::new(f))
    }

    /// Writes a header row followed by one row per sample. Values use the
    /// shortest representation that round-trips.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let csv_err = |e: csv::Error| Error::Io(e.to_string());
        let mut header = vec!["label".to_string()];
        header.extend((1..=self.dim).map(|i| format!("x{i}")));
        w.write_record(&header).map_err(csv_err)?;
        for (label, x) in self.iter() {
            let mut row = Vec::with_capacity(self.dim + 1);
            row.push(label.to_string());
            row.extend(x.iter().map(|v| v.to_string()));
            w.write_record(&row).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_csv_file(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let f = File::create(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        self.write_csv(std::io::BufWriter::new(f))
    }
}

/// Per-class partition into training samples and the remainder.
#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub train: Vec<ClassData>,
    pub rest: Vec<ClassData>,
    /// Classes with fewer samples than requested.
    pub skipped: Vec<String>,
}

/// Draws `n` training samples per class without replacement, keeping the
/// drawn samples in their original order. Classes with fewer than `n`
/// samples are skipped with a warning.
pub fn split_per_class<R: Rng + ?Sized>(groups: &[ClassData], n: usize, rng: &mut R) -> Split {
    let mut split = Split {
        train: Vec::new(),
        rest: Vec::new(),
        skipped: Vec::new(),
    };
    for g in groups {
        if g.count() < n {
            log::warn!("class {} has {} samples, fewer than {n}; skipped", g.label, g.count());
            split.skipped.push(g.label.clone());
            continue;
        }
        let mut idx: Vec<usize> = (0..g.count()).collect();
        idx.shuffle(rng);
        let (mut train, mut rest) = (idx[..n].to_vec(), idx[n..].to_vec());
        train.sort_unstable();
        rest.sort_unstable();
        split.train.push(ClassData {
            label: g.label.clone(),
            samples: g.samples.select_columns(&train),
        });
        split.rest.push(ClassData {
            label: g.label.clone(),
            samples: g.samples.select_columns(&rest),
        });
    }
    split
}
