//! Binary-classification datasets: delimited text and IDX loaders,
//! standardisation, and a seeded synthetic generator.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{check_dim, Error, Result};

const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
const IDX_LABELS_MAGIC: u32 = 0x0000_0801;
const SD_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum Provenance {
    File(PathBuf),
    Synthetic { seed: u64, generator: String },
}

/// `N × d` row-major features with labels in `{0, 1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Vec<f64>,
    labels: Vec<f64>,
    dim: usize,
    pub name: String,
    pub provenance: Provenance,
}

impl Dataset {
    pub fn new(
        features: Vec<f64>,
        labels: Vec<f64>,
        dim: usize,
        name: impl Into<String>,
        provenance: Provenance,
    ) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::Empty("dataset has no rows".into()));
        }
        if dim == 0 {
            return Err(Error::config("dataset needs at least one feature"));
        }
        check_dim(labels.len() * dim, features.len())?;
        if labels.iter().any(|&y| y != 0.0 && y != 1.0) {
            return Err(Error::config("dataset labels must be 0 or 1"));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::config("dataset features must be finite"));
        }
        Ok(Self { features, labels, dim, name: name.into(), provenance })
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    /// Appends a constant-1 feature column.
    pub fn with_intercept(&self) -> Self {
        let dim = self.dim + 1;
        let mut features = Vec::with_capacity(self.len() * dim);
        for row in self.features.chunks_exact(self.dim) {
            features.extend_from_slice(row);
            features.push(1.0);
        }
        Self { features, dim, ..self.clone() }
    }

    /// Writes `x0,...,x{d-1},label` with a header row.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(fs::File::create(path)?);
        let header: Vec<String> = (0..self.dim).map(|j| format!("x{j}")).chain(["label".into()]).collect();
        writeln!(out, "{}", header.join(","))?;
        for (row, y) in self.features.chunks_exact(self.dim).zip(&self.labels) {
            for v in row {
                write!(out, "{v},")?;
            }
            writeln!(out, "{}", *y as u8)?;
        }
        out.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LabelColumn {
    Index(usize),
    Name(String),
}

impl std::str::FromStr for LabelColumn {
    type Err = std::convert::Infallible;

    /// A bare integer selects by index, anything else by header name.
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(s.parse::<usize>().map_or_else(|_| LabelColumn::Name(s.to_string()), LabelColumn::Index))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DelimitedOptions {
    pub delimiter: u8,
    pub has_header: bool,
    pub label_column: LabelColumn,
    /// Label text mapped to 1; every other label maps to 0.
    pub positive_label: String,
}

impl Default for DelimitedOptions {
    fn default() -> Self {
        Self {
            delimiter: b',',
            has_header: true,
            label_column: LabelColumn::Name("label".into()),
            positive_label: "1".into(),
        }
    }
}

/// Loads a delimited text file, one datum per row.
pub fn load_delimited(path: &Path, options: &DelimitedOptions) -> Result<Dataset> {
    let text = fs::read_to_string(path)?;
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(options.delimiter)
        .has_headers(options.has_header)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());

    let parse_err = |row: usize, column: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        row,
        column,
        message,
    };

    let headers = if options.has_header {
        Some(reader.headers().map_err(|e| parse_err(1, 0, e.to_string()))?.clone())
    } else {
        None
    };
    let label_idx = match (&options.label_column, &headers) {
        (LabelColumn::Index(i), _) => *i,
        (LabelColumn::Name(name), Some(h)) => h.iter().position(|c| c == name).ok_or_else(|| {
            Error::config(format!("{}: no label column named {name:?}", path.display()))
        })?,
        (LabelColumn::Name(name), None) => {
            return Err(Error::config(format!(
                "label column {name:?} given by name but the file has no header"
            )))
        }
    };

    let mut features = Vec::new();
    let mut labels = Vec::new();
    let mut width = None;
    let first_data_row = if options.has_header { 2 } else { 1 };
    for (i, record) in reader.records().enumerate() {
        let row = first_data_row + i;
        let record = record.map_err(|e| parse_err(row, 0, e.to_string()))?;
        if label_idx >= record.len() {
            return Err(Error::config(format!(
                "{}: label column {label_idx} out of range for row {row} with {} columns",
                path.display(),
                record.len()
            )));
        }
        let w = *width.get_or_insert(record.len());
        if record.len() != w {
            return Err(parse_err(row, record.len(), format!("expected {w} columns, found {}", record.len())));
        }
        for (col, field) in record.iter().enumerate() {
            if col == label_idx {
                labels.push(if field == options.positive_label { 1.0 } else { 0.0 });
                continue;
            }
            let v: f64 = field
                .parse()
                .map_err(|_| parse_err(row, col + 1, format!("non-numeric feature {field:?}")))?;
            if !v.is_finite() {
                return Err(parse_err(row, col + 1, format!("non-finite feature {field:?}")));
            }
            features.push(v);
        }
    }
    let Some(w) = width else {
        return Err(Error::Empty(format!("{}: no data rows", path.display())));
    };
    if w < 2 {
        return Err(Error::config(format!("{}: need at least one feature column", path.display())));
    }
    let name = path.file_stem().map_or_else(|| "data".into(), |s| s.to_string_lossy().into_owned());
    Dataset::new(features, labels, w - 1, name, Provenance::File(path.to_path_buf()))
}

/// Maps a digit label to `{0, 1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LabelRule {
    /// Even digits → 1, odd → 0.
    #[default]
    Parity,
    /// The given digit → 1, every other digit → 0.
    OneVsRest(u8),
}

impl LabelRule {
    pub fn apply(self, digit: u8) -> f64 {
        match self {
            LabelRule::Parity => f64::from(u8::from(digit.is_multiple_of(2))),
            LabelRule::OneVsRest(d) => f64::from(u8::from(digit == d)),
        }
    }
}

struct IdxReader<'a> {
    bytes: &'a [u8],
    pos: usize,
    what: &'static str,
}

impl<'a> IdxReader<'a> {
    fn u32(&mut self) -> Result<u32> {
        let end = self.pos + 4;
        let chunk = self
            .bytes
            .get(self.pos..end)
            .ok_or_else(|| Error::Format(format!("{}: truncated header at byte {}", self.what, self.pos)))?;
        self.pos = end;
        Ok(u32::from_be_bytes(chunk.try_into().expect("four bytes")))
    }

    fn payload(&self, len: usize) -> Result<&'a [u8]> {
        let available = self.bytes.len() - self.pos;
        if available < len {
            return Err(Error::Format(format!(
                "{}: truncated payload, expected {len} bytes, found {available}",
                self.what
            )));
        }
        Ok(&self.bytes[self.pos..self.pos + len])
    }
}

/// Parses an IDX unsigned-byte image file (`0x00000803`, dims `n × rows × cols`).
/// Returns `(n, rows * cols, pixels)`.
pub fn parse_idx_images(bytes: &[u8]) -> Result<(usize, usize, &[u8])> {
    let mut r = IdxReader { bytes, pos: 0, what: "IDX images" };
    let magic = r.u32()?;
    if magic != IDX_IMAGES_MAGIC {
        return Err(Error::Format(format!("IDX images: bad magic number {magic:#010x}")));
    }
    let n = r.u32()? as usize;
    let rows = r.u32()? as usize;
    let cols = r.u32()? as usize;
    let d = rows * cols;
    Ok((n, d, r.payload(n * d)?))
}

/// Parses an IDX unsigned-byte label file (`0x00000801`, dim `n`).
pub fn parse_idx_labels(bytes: &[u8]) -> Result<&[u8]> {
    let mut r = IdxReader { bytes, pos: 0, what: "IDX labels" };
    let magic = r.u32()?;
    if magic != IDX_LABELS_MAGIC {
        return Err(Error::Format(format!("IDX labels: bad magic number {magic:#010x}")));
    }
    let n = r.u32()? as usize;
    r.payload(n)
}

/// Loads an IDX image/label pair, scaling pixels to `[0, 1]` by `/255`.
pub fn load_idx_pair(images_path: &Path, labels_path: &Path, rule: LabelRule) -> Result<Dataset> {
    let image_bytes = fs::read(images_path)?;
    let label_bytes = fs::read(labels_path)?;
    let (n, d, pixels) = parse_idx_images(&image_bytes)?;
    let digits = parse_idx_labels(&label_bytes)?;
    if digits.len() != n {
        return Err(Error::Format(format!(
            "IDX pair: {n} images but {} labels",
            digits.len()
        )));
    }
    if n == 0 || d == 0 {
        return Err(Error::Empty("IDX images file holds no pixels".into()));
    }
    let features = pixels.iter().map(|&b| f64::from(b) / 255.0).collect();
    let labels = digits.iter().map(|&l| rule.apply(l)).collect();
    let name = images_path.file_stem().map_or_else(|| "idx".into(), |s| s.to_string_lossy().into_owned());
    Dataset::new(features, labels, d, name, Provenance::File(images_path.to_path_buf()))
}

/// Serialises images (`n` images of `rows × cols` bytes) in IDX format.
pub fn encode_idx_images(rows: usize, cols: usize, pixels: &[u8]) -> Vec<u8> {
    let n = pixels.len().checked_div(rows * cols).unwrap_or(0);
    let mut out = Vec::with_capacity(16 + pixels.len());
    for v in [IDX_IMAGES_MAGIC, n as u32, rows as u32, cols as u32] {
        out.extend_from_slice(&v.to_be_bytes());
    }
    out.extend_from_slice(pixels);
    out
}

pub fn encode_idx_labels(labels: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&IDX_LABELS_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    out
}

/// Per-column affine transform `(x - mean) / sd` with population `sd`.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardization {
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
}

/// Centres each column and divides by its population standard deviation
/// (floored at `1e-12`, so constant columns become zero).
pub fn standardize(data: &Dataset) -> Result<(Dataset, Standardization)> {
    let n = data.len();
    if n < 2 {
        return Err(Error::config("standardization needs at least two rows"));
    }
    let d = data.dim;
    let mut mean = vec![0.0; d];
    for row in data.features.chunks_exact(d) {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let mut var = vec![0.0; d];
    for row in data.features.chunks_exact(d) {
        for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
            *s += (v - m) * (v - m);
        }
    }
    let sd: Vec<f64> = var.iter().map(|s| (s / n as f64).sqrt().max(SD_FLOOR)).collect();
    let features = data
        .features
        .chunks_exact(d)
        .flat_map(|row| row.iter().zip(&mean).zip(&sd).map(|((v, m), s)| (v - m) / s))
        .collect();
    Ok((Dataset { features, ..data.clone() }, Standardization { mean, sd }))
}

/// Two unit-variance Gaussian clouds centred at `±(separation/2) u` with
/// `u = (1, ..., 1)/√d`. Even rows are labelled 1, odd rows 0.
pub fn synth_logistic(seed: u64, n: usize, d: usize, separation: f64) -> Result<Dataset> {
    if n < 2 || d < 1 {
        return Err(Error::config(format!("synthetic data needs N >= 2 and d >= 1, got N={n}, d={d}")));
    }
    if !separation.is_finite() {
        return Err(Error::config("separation must be finite"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift = 0.5 * separation / (d as f64).sqrt();
    let mut features = Vec::with_capacity(n * d);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let positive = i % 2 == 0;
        let sign = if positive { 1.0 } else { -1.0 };
        for _ in 0..d {
            let z: f64 = StandardNormal.sample(&mut rng);
            features.push(sign * shift + z);
        }
        labels.push(if positive { 1.0 } else { 0.0 });
    }
    Dataset::new(
        features,
        labels,
        d,
        format!("synth-{seed}-{n}x{d}-sep{separation}"),
        Provenance::Synthetic { seed, generator: "gaussian-clouds-v1".into() },
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_tmp(contents: &[u8]) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents).unwrap();
        f
    }

    #[test]
    fn delimited_with_header_and_named_labels() {
        let f = write_tmp(b"a,b,diagnosis\n1.0,2.0,M\n3,4,B\n-1,0.5,M\n");
        let opts = DelimitedOptions {
            label_column: LabelColumn::Name("diagnosis".into()),
            positive_label: "M".into(),
            ..Default::default()
        };
        let d = load_delimited(f.path(), &opts).unwrap();
        assert_eq!(d.len(), 3);
        assert_eq!(d.dim(), 2);
        assert_eq!(d.labels(), &[1.0, 0.0, 1.0]);
        assert_eq!(d.row(2), &[-1.0, 0.5]);
    }

    #[test]
    fn delimited_label_by_index_without_header() {
        let f = write_tmp(b"-1;0.1;0.2\n1;0.3;0.4\n");
        let opts = DelimitedOptions {
            delimiter: b';',
            has_header: false,
            label_column: LabelColumn::Index(0),
            positive_label: "1".into(),
        };
        let d = load_delimited(f.path(), &opts).unwrap();
        assert_eq!(d.labels(), &[0.0, 1.0]);
        assert_eq!(d.row(1), &[0.3, 0.4]);
    }

    #[test]
    fn delimited_nan_is_located() {
        let f = write_tmp(b"a,b,label\n1,2,1\n3,NaN,0\n");
        match load_delimited(f.path(), &DelimitedOptions::default()) {
            Err(Error::Parse { row, column, .. }) => assert_eq!((row, column), (3, 2)),
            other => panic!("{other:?}"),
        }
        let f = write_tmp(b"a,b,label\n1,x,1\n");
        assert!(matches!(load_delimited(f.path(), &DelimitedOptions::default()), Err(Error::Parse { row: 2, .. })));
    }

    #[test]
    fn delimited_missing_label_column() {
        let f = write_tmp(b"a,b,c\n1,2,3\n");
        assert!(matches!(load_delimited(f.path(), &DelimitedOptions::default()), Err(Error::Config(_))));
        let opts = DelimitedOptions { label_column: LabelColumn::Index(7), ..Default::default() };
        assert!(matches!(load_delimited(f.path(), &opts), Err(Error::Config(_))));
    }

    #[test]
    fn delimited_empty_file() {
        let f = write_tmp(b"");
        let opts = DelimitedOptions { has_header: false, label_column: LabelColumn::Index(0), ..Default::default() };
        assert!(matches!(load_delimited(f.path(), &opts), Err(Error::Empty(_))));
        let f = write_tmp(b"a,label\n");
        assert!(matches!(load_delimited(f.path(), &DelimitedOptions::default()), Err(Error::Empty(_))));
    }

    #[test]
    fn label_column_parsing() {
        assert_eq!("3".parse::<LabelColumn>().unwrap(), LabelColumn::Index(3));
        assert_eq!("y".parse::<LabelColumn>().unwrap(), LabelColumn::Name("y".into()));
    }

    fn idx_fixture() -> (tempfile::NamedTempFile, tempfile::NamedTempFile) {
        let mut pixels = vec![0u8; 4 * 2 * 2];
        pixels[0] = 255;
        pixels[5] = 51;
        (write_tmp(&encode_idx_images(2, 2, &pixels)), write_tmp(&encode_idx_labels(&[0, 1, 2, 3])))
    }

    #[test]
    fn idx_parity_labels_and_scaling() {
        let (img, lab) = idx_fixture();
        let d = load_idx_pair(img.path(), lab.path(), LabelRule::Parity).unwrap();
        assert_eq!(d.len(), 4);
        assert_eq!(d.dim(), 4);
        assert_eq!(d.labels(), &[1.0, 0.0, 1.0, 0.0]);
        assert_eq!(d.row(0)[0], 1.0);
        assert!((d.row(1)[1] - 0.2).abs() < 1e-15);
        let d = load_idx_pair(img.path(), lab.path(), LabelRule::OneVsRest(3)).unwrap();
        assert_eq!(d.labels(), &[0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn idx_count_mismatch() {
        let (img, _) = idx_fixture();
        let lab = write_tmp(&encode_idx_labels(&[0, 1, 2]));
        assert!(matches!(load_idx_pair(img.path(), lab.path(), LabelRule::Parity), Err(Error::Format(_))));
    }

    #[test]
    fn idx_bad_magic_and_truncation() {
        let mut bytes = encode_idx_images(2, 2, &[0u8; 8]);
        assert!(parse_idx_labels(&bytes).is_err());
        bytes.truncate(bytes.len() - 1);
        assert!(matches!(parse_idx_images(&bytes), Err(Error::Format(_))));
        assert!(parse_idx_images(&bytes[..10]).is_err());
        assert!(parse_idx_images(&[]).is_err());
    }

    #[test]
    fn standardize_two_points() {
        let d = Dataset::new(vec![1.0, 5.0, 3.0, 5.0], vec![0.0, 1.0], 2, "t", Provenance::File("x".into())).unwrap();
        let (s, tr) = standardize(&d).unwrap();
        assert_eq!(tr.mean, vec![2.0, 5.0]);
        assert_eq!(tr.sd[0], 1.0);
        assert_eq!(s.row(0), &[-1.0, 0.0]);
        assert_eq!(s.row(1), &[1.0, 0.0]);
    }

    #[test]
    fn standardize_is_idempotent() {
        let d = synth_logistic(4, 50, 3, 1.0).unwrap();
        let (once, _) = standardize(&d).unwrap();
        let (twice, _) = standardize(&once).unwrap();
        for (a, b) in once.features().iter().zip(twice.features()) {
            assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn synthetic_is_deterministic_and_balanced() {
        let a = synth_logistic(7, 200, 5, 4.0).unwrap();
        let b = synth_logistic(7, 200, 5, 4.0).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.labels().iter().sum::<f64>(), 100.0);
        assert_ne!(a, synth_logistic(8, 200, 5, 4.0).unwrap());
        assert!(synth_logistic(1, 1, 5, 1.0).is_err());
    }

    #[test]
    fn intercept_column() {
        let d = synth_logistic(1, 4, 2, 1.0).unwrap().with_intercept();
        assert_eq!(d.dim(), 3);
        assert_eq!(d.row(3)[2], 1.0);
    }

    #[test]
    fn csv_round_trip() {
        let d = synth_logistic(2, 6, 3, 2.0).unwrap();
        let f = tempfile::NamedTempFile::new().unwrap();
        d.write_csv(f.path()).unwrap();
        let back = load_delimited(f.path(), &DelimitedOptions::default()).unwrap();
        assert_eq!(back.features(), d.features());
        assert_eq!(back.labels(), d.labels());
    }
}
