//! Binary image datasets: the synthetic generator, the plain-text loader and
//! the train/validation/test split.

use std::collections::HashSet;
use std::io::Write;
use std::path::Path;

use arm_core::{RngStream, Sampler};

use crate::config::{DatasetSpec, PatternFamily, SyntheticSpec};
use crate::error::{HarnessError, Result};

/// A flattened binary image, row-major.
pub type Image = Vec<u8>;

/// Images split into disjoint training, validation and test sets.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub width: usize,
    pub train: Vec<Image>,
    pub valid: Vec<Image>,
    pub test: Vec<Image>,
}

impl Dataset {
    pub fn all(&self) -> impl Iterator<Item = &Image> {
        self.train.iter().chain(&self.valid).chain(&self.test)
    }
}

/// Every distinct `side × side` bars-and-stripes image, in a fixed order:
/// first all row patterns, then the column patterns not already present.
pub fn bars_and_stripes(side: usize) -> Vec<Image> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for by_column in [false, true] {
        for mask in 0u64..1 << side {
            let img: Image = (0..side * side)
                .map(|p| {
                    let (r, c) = (p / side, p % side);
                    ((mask >> if by_column { c } else { r }) & 1) as u8
                })
                .collect();
            if seen.insert(img.clone()) {
                out.push(img);
            }
        }
    }
    out
}

fn shuffle<T>(items: &mut [T], rng: &mut Sampler) {
    for i in (1..items.len()).rev() {
        let j = rng.index(i + 1);
        items.swap(i, j);
    }
}

fn mixture_images(side: usize, components: usize, flip: f64, count: usize, rng: &mut Sampler) -> Result<Vec<Image>> {
    let dim = side * side;
    let prototypes: Vec<Image> = (0..components)
        .map(|_| (0..dim).map(|_| u8::from(rng.uniform() < 0.5)).collect())
        .collect();
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(count);
    let max_attempts = 1000 * count.max(1);
    for _ in 0..max_attempts {
        if out.len() == count {
            break;
        }
        let proto = &prototypes[rng.index(components)];
        let img: Image = proto.iter().map(|&b| b ^ u8::from(rng.uniform() < flip)).collect();
        if seen.insert(img.clone()) {
            out.push(img);
        }
    }
    if out.len() < count {
        return Err(HarnessError::Config(format!(
            "mixture produced only {} distinct images, {count} requested",
            out.len()
        )));
    }
    Ok(out)
}

/// Deterministic synthetic dataset. Images are distinct across all three
/// splits.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<Dataset> {
    let needed = spec.train + spec.valid + spec.test;
    let mut rng = RngStream::new(spec.seed, 0x5eed).sampler();
    let side = spec.family.side();
    let mut images = match spec.family {
        PatternFamily::BarsAndStripes { side } => {
            if side > 16 {
                return Err(HarnessError::Config(format!("bars-and-stripes side {side} too large")));
            }
            let mut all = bars_and_stripes(side);
            if needed > all.len() {
                return Err(HarnessError::Config(format!(
                    "{needed} images requested but the {side}x{side} family has only {}",
                    all.len()
                )));
            }
            shuffle(&mut all, &mut rng);
            all.truncate(needed);
            all
        }
        PatternFamily::BernoulliMixture { side, components, flip } => {
            mixture_images(side, components, flip, needed, &mut rng)?
        }
    };
    let test = images.split_off(spec.train + spec.valid);
    let valid = images.split_off(spec.train);
    Ok(Dataset {
        width: side * side,
        train: images,
        valid,
        test,
    })
}

/// Reads one image per line of whitespace-separated `0`/`1` values.
///
/// Blank lines are skipped. All images must share the width of the first
/// one, or `width` when given. Tokens that are not numbers and rows of the
/// wrong width are parse errors carrying the line number; numbers other
/// than 0 and 1 are validation errors naming line and column.
pub fn load_plaintext_binary_images(path: &Path, width: Option<usize>) -> Result<Vec<Image>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| HarnessError::Data(format!("cannot read dataset {}: {e}", path.display())))?;
    parse_plaintext_binary_images(&text, width).map_err(|e| match e {
        HarnessError::Parse { line, message, .. } => HarnessError::Parse {
            path: path.to_path_buf(),
            line,
            message,
        },
        other => other,
    })
}

/// [`load_plaintext_binary_images`] on an in-memory string.
pub fn parse_plaintext_binary_images(text: &str, width: Option<usize>) -> Result<Vec<Image>> {
    let mut width = width;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |message: String| HarnessError::Parse {
            path: Default::default(),
            line: line_no,
            message,
        };
        let mut img = Vec::new();
        for (col, tok) in line.split_whitespace().enumerate() {
            let value: f64 = tok
                .parse()
                .map_err(|_| parse_err(format!("column {}: `{tok}` is not a number", col + 1)))?;
            img.push(match value {
                0.0 => 0,
                1.0 => 1,
                _ => {
                    return Err(HarnessError::Data(format!(
                        "line {line_no}, column {}: value `{tok}` is not binary",
                        col + 1
                    )))
                }
            });
        }
        match width {
            Some(w) if w != img.len() => {
                return Err(parse_err(format!("expected {w} values, found {}", img.len())));
            }
            None => width = Some(img.len()),
            _ => {}
        }
        out.push(img);
    }
    if out.is_empty() {
        return Err(HarnessError::Data("dataset contains no images".into()));
    }
    Ok(out)
}

/// Writes images in the format read by [`load_plaintext_binary_images`].
pub fn write_plaintext_binary_images(path: &Path, images: &[Image]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| HarnessError::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    for img in images {
        let line: Vec<&str> = img.iter().map(|&b| if b == 1 { "1" } else { "0" }).collect();
        writeln!(w, "{}", line.join(" ")).map_err(|e| HarnessError::io(path, e))?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}

/// Shuffles loaded images with `seed` and splits them 80/10/10.
pub fn split_images(mut images: Vec<Image>, seed: u64) -> Result<Dataset> {
    let width = images.first().map(Vec::len).unwrap_or(0);
    if images.len() < 3 {
        return Err(HarnessError::Data(format!(
            "need at least 3 images to split, found {}",
            images.len()
        )));
    }
    shuffle(&mut images, &mut RngStream::new(seed, 0x5711).sampler());
    let n = images.len();
    let n_valid = (n / 10).max(1);
    let n_test = (n / 10).max(1);
    let test = images.split_off(n - n_test);
    let valid = images.split_off(n - n_test - n_valid);
    Ok(Dataset {
        width,
        train: images,
        valid,
        test,
    })
}

/// Materialises the dataset named by `spec`.
pub fn load_dataset(spec: &DatasetSpec, synthetic: &SyntheticSpec) -> Result<Dataset> {
    match spec {
        DatasetSpec::Synthetic => generate_synthetic(synthetic),
        DatasetSpec::File(path) => split_images(load_plaintext_binary_images(path, None)?, synthetic.seed),
    }
}

/// Splits a square image into its upper and lower halves by rows.
pub fn halves(img: &[u8], side: usize) -> (Image, Image) {
    let cut = (side / 2) * side;
    (img[..cut].to_vec(), img[cut..].to_vec())
}

/// Side length of a square image of `width` pixels.
pub fn square_side(width: usize) -> Result<usize> {
    let side = (width as f64).sqrt().round() as usize;
    if side * side != width || side < 2 {
        return Err(HarnessError::Data(format!("images of width {width} are not square")));
    }
    Ok(side)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_simple_line() {
        assert_eq!(
            parse_plaintext_binary_images("0 1 0 1\n", Some(4)).unwrap(),
            vec![vec![0, 1, 0, 1]]
        );
    }

    #[test]
    fn non_binary_value_names_column() {
        let err = parse_plaintext_binary_images("0 0.5 1 0\n", Some(4)).unwrap_err();
        assert!(matches!(err, HarnessError::Data(_)));
        assert!(err.to_string().contains("column 2"), "{err}");
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let err = parse_plaintext_binary_images("0 1\n1 x\n", None).unwrap_err();
        match err {
            HarnessError::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        let err = parse_plaintext_binary_images("0 1\n\n1 0 1\n", None).unwrap_err();
        assert!(matches!(err, HarnessError::Parse { line: 3, .. }));
    }

    #[test]
    fn halves_split_rows() {
        let img: Vec<u8> = (0..16).map(|i| u8::from(i >= 8)).collect();
        let (up, low) = halves(&img, 4);
        assert_eq!(up, vec![0; 8]);
        assert_eq!(low, vec![1; 8]);
    }
}
