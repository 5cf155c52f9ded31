//! Reading and writing of IDX image and label files (the MNIST container).
//!
//! Layout, all integers big-endian:
//!
//! ```text
//! images: 0x00000803 | count u32 | rows u32 | cols u32 | count*rows*cols bytes
//! labels: 0x00000801 | count u32 | count bytes
//! ```
//!
//! Gzip-compressed files (leading `1f 8b`) are decompressed transparently on read.

use std::fs;
use std::io::Read;
use std::path::Path;

use flate2::read::GzDecoder;

use crate::raster::GrayImage;

pub const IMAGES_MAGIC: u32 = 0x0000_0803;
pub const LABELS_MAGIC: u32 = 0x0000_0801;

#[derive(Debug, thiserror::Error)]
pub enum IdxError {
    #[error("bad magic number {found:#010x}, expected {expected:#010x}")]
    BadMagic { found: u32, expected: u32 },
    #[error("truncated file: header promises {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("oversized file: {extra} trailing bytes after declared payload")]
    Oversized { extra: usize },
    #[error("image {index} is {height}x{width}, dataset is {expected_height}x{expected_width}")]
    DimensionMismatch {
        index: usize,
        height: usize,
        width: usize,
        expected_height: usize,
        expected_width: usize,
    },
    #[error("dimension {0} does not fit in a u32 header field")]
    TooLarge(usize),
    #[error("gzip decode failed: {0}")]
    Gzip(std::io::Error),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

/// An 8-bit grayscale image as stored in an IDX file, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ByteImage {
    pub height: usize,
    pub width: usize,
    pub pixels: Vec<u8>,
}

impl ByteImage {
    pub fn new(height: usize, width: usize, pixels: Vec<u8>) -> Self {
        assert_eq!(pixels.len(), height * width, "pixel buffer size");
        Self {
            height,
            width,
            pixels,
        }
    }

    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.pixels[row * self.width + col]
    }

    pub fn to_gray(&self) -> GrayImage {
        GrayImage::from_u8(self.height, self.width, &self.pixels)
    }

    /// Rounds and clamps a working-precision image to 8 bits.
    pub fn from_gray(image: &GrayImage) -> Self {
        Self::new(image.height(), image.width(), image.to_u8())
    }
}

/// An ordered collection of equally sized 8-bit images.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ImageDataset {
    pub height: usize,
    pub width: usize,
    pub images: Vec<ByteImage>,
}

impl ImageDataset {
    pub fn new(height: usize, width: usize, images: Vec<ByteImage>) -> Self {
        Self {
            height,
            width,
            images,
        }
    }

    pub fn count(&self) -> usize {
        self.images.len()
    }

    /// Returns the first image whose shape disagrees with the dataset's.
    pub fn check_dimensions(&self) -> Result<(), IdxError> {
        for (index, img) in self.images.iter().enumerate() {
            if img.height != self.height || img.width != self.width {
                return Err(IdxError::DimensionMismatch {
                    index,
                    height: img.height,
                    width: img.width,
                    expected_height: self.height,
                    expected_width: self.width,
                });
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LabelVector {
    pub labels: Vec<u8>,
}

impl LabelVector {
    pub fn new(labels: Vec<u8>) -> Self {
        Self { labels }
    }

    pub fn count(&self) -> usize {
        self.labels.len()
    }
}

fn is_gzip(bytes: &[u8]) -> bool {
    bytes.len() >= 2 && bytes[0] == 0x1f && bytes[1] == 0x8b
}

fn maybe_gunzip(bytes: &[u8]) -> Result<std::borrow::Cow<'_, [u8]>, IdxError> {
    if is_gzip(bytes) {
        let mut out = Vec::new();
        GzDecoder::new(bytes)
            .read_to_end(&mut out)
            .map_err(IdxError::Gzip)?;
        Ok(out.into())
    } else {
        Ok(bytes.into())
    }
}

fn be_u32(bytes: &[u8], offset: usize) -> Result<u32, IdxError> {
    match bytes.get(offset..offset + 4) {
        Some(b) => Ok(u32::from_be_bytes([b[0], b[1], b[2], b[3]])),
        None => Err(IdxError::Truncated {
            expected: offset + 4,
            found: bytes.len(),
        }),
    }
}

fn check_magic(bytes: &[u8], expected: u32) -> Result<(), IdxError> {
    let found = be_u32(bytes, 0)?;
    if found != expected {
        return Err(IdxError::BadMagic { found, expected });
    }
    Ok(())
}

fn check_payload(bytes: &[u8], header: usize, payload: usize) -> Result<(), IdxError> {
    let expected = header + payload;
    if bytes.len() < expected {
        Err(IdxError::Truncated {
            expected,
            found: bytes.len(),
        })
    } else if bytes.len() > expected {
        Err(IdxError::Oversized {
            extra: bytes.len() - expected,
        })
    } else {
        Ok(())
    }
}

fn header_u32(value: usize) -> Result<[u8; 4], IdxError> {
    u32::try_from(value)
        .map(u32::to_be_bytes)
        .map_err(|_| IdxError::TooLarge(value))
}

pub fn read_idx_images(bytes: &[u8]) -> Result<ImageDataset, IdxError> {
    let bytes = maybe_gunzip(bytes)?;
    check_magic(&bytes, IMAGES_MAGIC)?;
    let count = be_u32(&bytes, 4)? as usize;
    let height = be_u32(&bytes, 8)? as usize;
    let width = be_u32(&bytes, 12)? as usize;
    let overflow = || IdxError::Truncated {
        expected: usize::MAX,
        found: bytes.len(),
    };
    let size = height.checked_mul(width).ok_or_else(overflow)?;
    let payload = count.checked_mul(size).ok_or_else(overflow)?;
    check_payload(&bytes, 16, payload)?;
    let images = (0..count)
        .map(|n| {
            let start = 16 + n * size;
            ByteImage::new(height, width, bytes[start..start + size].to_vec())
        })
        .collect();
    Ok(ImageDataset::new(height, width, images))
}

pub fn write_idx_images(dataset: &ImageDataset) -> Result<Vec<u8>, IdxError> {
    dataset.check_dimensions()?;
    let size = dataset.height * dataset.width;
    let mut out = Vec::with_capacity(16 + dataset.count() * size);
    out.extend_from_slice(&IMAGES_MAGIC.to_be_bytes());
    out.extend_from_slice(&header_u32(dataset.count())?);
    out.extend_from_slice(&header_u32(dataset.height)?);
    out.extend_from_slice(&header_u32(dataset.width)?);
    for img in &dataset.images {
        out.extend_from_slice(&img.pixels);
    }
    Ok(out)
}

pub fn read_idx_labels(bytes: &[u8]) -> Result<LabelVector, IdxError> {
    let bytes = maybe_gunzip(bytes)?;
    check_magic(&bytes, LABELS_MAGIC)?;
    let count = be_u32(&bytes, 4)? as usize;
    check_payload(&bytes, 8, count)?;
    Ok(LabelVector::new(bytes[8..].to_vec()))
}

pub fn write_idx_labels(labels: &LabelVector) -> Result<Vec<u8>, IdxError> {
    let mut out = Vec::with_capacity(8 + labels.count());
    out.extend_from_slice(&LABELS_MAGIC.to_be_bytes());
    out.extend_from_slice(&header_u32(labels.count())?);
    out.extend_from_slice(&labels.labels);
    Ok(out)
}

fn read_file(path: &Path) -> Result<Vec<u8>, IdxError> {
    fs::read(path).map_err(|source| IdxError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), IdxError> {
    fs::write(path, bytes).map_err(|source| IdxError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_images(path: impl AsRef<Path>) -> Result<ImageDataset, IdxError> {
    read_idx_images(&read_file(path.as_ref())?)
}

pub fn load_labels(path: impl AsRef<Path>) -> Result<LabelVector, IdxError> {
    read_idx_labels(&read_file(path.as_ref())?)
}

pub fn save_images(path: impl AsRef<Path>, dataset: &ImageDataset) -> Result<(), IdxError> {
    write_file(path.as_ref(), &write_idx_images(dataset)?)
}

pub fn save_labels(path: impl AsRef<Path>, labels: &LabelVector) -> Result<(), IdxError> {
    write_file(path.as_ref(), &write_idx_labels(labels)?)
}
