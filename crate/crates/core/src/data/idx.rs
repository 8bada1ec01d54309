//! Big-endian IDX reader (MNIST family) and a matching writer.

use std::fs;
use std::io::{Cursor, Read};
use std::path::Path;

use byteorder::{BigEndian, ReadBytesExt, WriteBytesExt};

use super::{Dataset, Split};
use crate::error::{Error, Result};

const IMAGES_MAGIC: u32 = 0x0000_0803;
const LABELS_MAGIC: u32 = 0x0000_0801;

pub const TRAIN_IMAGES: &str = "train-images-idx3-ubyte";
pub const TRAIN_LABELS: &str = "train-labels-idx1-ubyte";
pub const TEST_IMAGES: &str = "t10k-images-idx3-ubyte";
pub const TEST_LABELS: &str = "t10k-labels-idx1-ubyte";

struct RawImages {
    n: usize,
    width: usize,
    pixels: Vec<u8>,
}

fn read_magic(cur: &mut Cursor<Vec<u8>>, expected: u32, what: &str) -> Result<()> {
    let magic = cur.read_u32::<BigEndian>()?;
    if magic != expected {
        return Err(Error::Format(format!(
            "{what}: magic 0x{magic:08x}, expected 0x{expected:08x}"
        )));
    }
    Ok(())
}

fn parse_images(bytes: Vec<u8>) -> Result<RawImages> {
    let mut cur = Cursor::new(bytes);
    read_magic(&mut cur, IMAGES_MAGIC, "images")?;
    let n = cur.read_u32::<BigEndian>()? as usize;
    let rows = cur.read_u32::<BigEndian>()? as usize;
    let cols = cur.read_u32::<BigEndian>()? as usize;
    let width = rows * cols;
    let mut pixels = vec![0u8; n * width];
    cur.read_exact(&mut pixels)?;
    Ok(RawImages { n, width, pixels })
}

fn parse_labels(bytes: Vec<u8>) -> Result<Vec<u8>> {
    let mut cur = Cursor::new(bytes);
    read_magic(&mut cur, LABELS_MAGIC, "labels")?;
    let n = cur.read_u32::<BigEndian>()? as usize;
    let mut labels = vec![0u8; n];
    cur.read_exact(&mut labels)?;
    Ok(labels)
}

fn assemble(images: RawImages, labels: Vec<u8>, n_classes: usize, split: Split) -> Result<Dataset> {
    if images.n != labels.len() {
        return Err(Error::InconsistentPair {
            images: images.n,
            labels: labels.len(),
        });
    }
    let features = images.pixels.iter().map(|&b| b as f64 / 255.0).collect();
    let labels = labels.into_iter().map(|l| l as usize).collect();
    Dataset::new(features, labels, images.width, n_classes, split)
}

fn class_count(labels: &[u8]) -> usize {
    labels.iter().copied().max().map_or(1, |m| m as usize + 1)
}

/// Loads one image/label file pair. The class count is `max label + 1`.
pub fn load_idx(
    images: impl AsRef<Path>,
    labels: impl AsRef<Path>,
    split: Split,
) -> Result<Dataset> {
    let images = parse_images(fs::read(images)?)?;
    let labels = parse_labels(fs::read(labels)?)?;
    let n_classes = class_count(&labels);
    assemble(images, labels, n_classes, split)
}

pub struct MnistSplits {
    pub train: Dataset,
    pub test: Dataset,
}

/// Loads the four standard MNIST-format files from `dir`.
pub fn load_mnist_dir(dir: impl AsRef<Path>) -> Result<MnistSplits> {
    let dir = dir.as_ref();
    let train_images = parse_images(fs::read(dir.join(TRAIN_IMAGES))?)?;
    let train_labels = parse_labels(fs::read(dir.join(TRAIN_LABELS))?)?;
    let test_images = parse_images(fs::read(dir.join(TEST_IMAGES))?)?;
    let test_labels = parse_labels(fs::read(dir.join(TEST_LABELS))?)?;
    let n_classes = class_count(&train_labels).max(class_count(&test_labels));
    Ok(MnistSplits {
        train: assemble(train_images, train_labels, n_classes, Split::Train)?,
        test: assemble(test_images, test_labels, n_classes, Split::Test)?,
    })
}

/// Serializes features as an IDX3 image file. Features are scaled by 255 and
/// rounded; `rows * cols` must equal the feature width.
pub fn encode_idx_images(data: &Dataset, rows: usize, cols: usize) -> Result<Vec<u8>> {
    if rows * cols != data.n_features() {
        return Err(Error::shape(format!(
            "{rows}x{cols} images cannot hold {} features",
            data.n_features()
        )));
    }
    let mut out = Vec::with_capacity(16 + data.features().len());
    out.write_u32::<BigEndian>(IMAGES_MAGIC)?;
    out.write_u32::<BigEndian>(data.len() as u32)?;
    out.write_u32::<BigEndian>(rows as u32)?;
    out.write_u32::<BigEndian>(cols as u32)?;
    out.extend(
        data.features()
            .iter()
            .map(|&x| (x.clamp(0.0, 1.0) * 255.0).round() as u8),
    );
    Ok(out)
}

pub fn encode_idx_labels(data: &Dataset) -> Result<Vec<u8>> {
    if data.n_classes() > 256 {
        return Err(Error::invalid("IDX labels are single bytes"));
    }
    let mut out = Vec::with_capacity(8 + data.len());
    out.write_u32::<BigEndian>(LABELS_MAGIC)?;
    out.write_u32::<BigEndian>(data.len() as u32)?;
    out.extend(data.labels().iter().map(|&l| l as u8));
    Ok(out)
}
