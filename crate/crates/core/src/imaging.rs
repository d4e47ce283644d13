//! Grey-image encoding of transactions.
//!
//! The instruction byte stream fills a 32x32 image row by row (truncated or
//! zero-padded to 1024 bytes). The value becomes a single 32-pixel row holding
//! its big-endian bytes, and the combined image stacks that row under the
//! bytecode image.

use std::fs::File;
use std::io::{self, BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::evmdecode::{decode_bytecode, instruction_bytes, InstructionSeq};
use crate::txcore::{Transaction, U256};

pub const IMAGE_SIDE: usize = 32;
pub const BYTECODE_PIXELS: usize = IMAGE_SIDE * IMAGE_SIDE;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ImageMode {
    /// 32x32, instruction bytes only.
    BytecodeOnly,
    /// 33x32, instruction bytes plus the value row.
    Combined,
    /// 1x32, the value row alone.
    ValueRow,
}

impl ImageMode {
    pub fn dims(self) -> (usize, usize) {
        match self {
            ImageMode::BytecodeOnly => (IMAGE_SIDE, IMAGE_SIDE),
            ImageMode::Combined => (IMAGE_SIDE + 1, IMAGE_SIDE),
            ImageMode::ValueRow => (1, IMAGE_SIDE),
        }
    }

    /// Mode fed to the classifier for the given value switch.
    pub fn for_value(with_value: bool) -> Self {
        if with_value {
            ImageMode::Combined
        } else {
            ImageMode::BytecodeOnly
        }
    }

    pub fn from_dims(rows: usize, cols: usize) -> Option<Self> {
        [
            ImageMode::BytecodeOnly,
            ImageMode::Combined,
            ImageMode::ValueRow,
        ]
        .into_iter()
        .find(|m| m.dims() == (rows, cols))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ImageError {
    #[error("shape mismatch: expected {expected:?}, got {got:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },
    #[error("{0} pixels do not fill a {1}x{2} image")]
    PixelCount(usize, usize, usize),
    #[error("bad PGM: {0}")]
    BadPgm(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Row-major 8-bit intensity matrix.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GreyImage {
    rows: usize,
    cols: usize,
    pixels: Vec<u8>,
}

impl GreyImage {
    pub fn new(rows: usize, cols: usize, pixels: Vec<u8>) -> Result<Self, ImageError> {
        if rows == 0 || cols == 0 || pixels.len() != rows * cols {
            return Err(ImageError::PixelCount(pixels.len(), rows, cols));
        }
        Ok(GreyImage { rows, cols, pixels })
    }

    pub fn zeros(mode: ImageMode) -> Self {
        let (rows, cols) = mode.dims();
        GreyImage {
            rows,
            cols,
            pixels: vec![0; rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn mode(&self) -> Option<ImageMode> {
        ImageMode::from_dims(self.rows, self.cols)
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<u8> {
        self.pixels
    }

    pub fn pixel(&self, row: usize, col: usize) -> u8 {
        assert!(row < self.rows && col < self.cols, "pixel out of bounds");
        self.pixels[row * self.cols + col]
    }

    pub fn row(&self, row: usize) -> &[u8] {
        &self.pixels[row * self.cols..(row + 1) * self.cols]
    }

    fn expect_mode(&self, mode: ImageMode) -> Result<(), ImageError> {
        if self.dims() != mode.dims() {
            return Err(ImageError::ShapeMismatch {
                expected: mode.dims(),
                got: self.dims(),
            });
        }
        Ok(())
    }
}

/// Grey Image 1: the flattened instruction stream laid out row-major in 32x32.
pub fn encode_bytecode_image(seq: &InstructionSeq) -> GreyImage {
    let mut pixels = instruction_bytes(seq);
    pixels.resize(BYTECODE_PIXELS, 0);
    GreyImage {
        rows: IMAGE_SIDE,
        cols: IMAGE_SIDE,
        pixels,
    }
}

/// Grey Image 2: the 32 big-endian bytes of the value.
pub fn encode_value_image(value: &U256) -> GreyImage {
    GreyImage {
        rows: 1,
        cols: IMAGE_SIDE,
        pixels: value.to_be_bytes().to_vec(),
    }
}

/// Final image: the bytecode rows with the value row appended as row 32.
pub fn combine_images(bytecode: &GreyImage, value: &GreyImage) -> Result<GreyImage, ImageError> {
    bytecode.expect_mode(ImageMode::BytecodeOnly)?;
    value.expect_mode(ImageMode::ValueRow)?;
    let mut pixels = Vec::with_capacity((IMAGE_SIDE + 1) * IMAGE_SIDE);
    pixels.extend_from_slice(&bytecode.pixels);
    pixels.extend_from_slice(&value.pixels);
    Ok(GreyImage {
        rows: IMAGE_SIDE + 1,
        cols: IMAGE_SIDE,
        pixels,
    })
}

pub fn preprocess_transaction(tx: &Transaction, with_value: bool) -> GreyImage {
    let bytecode = encode_bytecode_image(&decode_bytecode(&tx.bytecode));
    if with_value {
        combine_images(&bytecode, &encode_value_image(&tx.value)).expect("shapes fixed by construction")
    } else {
        bytecode
    }
}

/// Writes a binary (P5) PGM with maxval 255.
pub fn export_pgm(img: &GreyImage, path: &Path) -> Result<(), ImageError> {
    let mut f = File::create(path)?;
    f.write_all(&pgm_bytes(img))?;
    Ok(())
}

pub fn pgm_bytes(img: &GreyImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.cols, img.rows).into_bytes();
    out.extend_from_slice(&img.pixels);
    out
}

fn header_token(r: &mut impl BufRead) -> Result<String, ImageError> {
    let mut token = Vec::new();
    let mut byte = [0u8; 1];
    loop {
        if r.read(&mut byte)? == 0 {
            break;
        }
        match byte[0] {
            b'#' if token.is_empty() => {
                let mut skip = Vec::new();
                r.read_until(b'\n', &mut skip)?;
            }
            b if b.is_ascii_whitespace() => {
                if !token.is_empty() {
                    break;
                }
            }
            b => token.push(b),
        }
    }
    String::from_utf8(token).map_err(|_| ImageError::BadPgm("non-ascii header".into()))
}

pub fn import_pgm(path: &Path) -> Result<GreyImage, ImageError> {
    let mut r = BufReader::new(File::open(path)?);
    if header_token(&mut r)? != "P5" {
        return Err(ImageError::BadPgm("expected P5 magic".into()));
    }
    let mut num = |what: &str| -> Result<usize, ImageError> {
        header_token(&mut r)?
            .parse()
            .map_err(|_| ImageError::BadPgm(format!("bad {what}")))
    };
    let cols = num("width")?;
    let rows = num("height")?;
    let maxval = num("maxval")?;
    if maxval != 255 {
        return Err(ImageError::BadPgm(format!("unsupported maxval {maxval}")));
    }
    let mut pixels = vec![0u8; rows * cols];
    r.read_exact(&mut pixels)?;
    GreyImage::new(rows, cols, pixels)
}
