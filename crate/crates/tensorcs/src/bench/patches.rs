//! Image-patch ingestion: binary PGM reading, random training patches and
//! non-overlapping test tiling with exact reassembly.

use crate::dict::TrainingSet;
use crate::error::{Error, Result};
use crate::tensor::Tensor;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::io::Read;
use std::path::Path;

/// Grayscale image with row-major pixels scaled to [0,1].
#[derive(Debug, Clone)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<f64>,
}

impl GrayImage {
    pub fn pixel(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * self.width + col]
    }

    /// Extracts a patch as a tensor of shape [patch, patch], entry (i, j) =
    /// pixel(top + i, left + j).
    pub fn patch(&self, top: usize, left: usize, patch: usize) -> Result<Tensor> {
        if top + patch > self.height || left + patch > self.width {
            return Err(Error::invalid("patch window out of bounds"));
        }
        let mut t = Tensor::zeros(vec![patch, patch]);
        for j in 0..patch {
            for i in 0..patch {
                t.set(&[i, j], self.pixel(top + i, left + j));
            }
        }
        Ok(t)
    }
}

fn read_header_token<R: Read>(r: &mut R) -> Result<String> {
    // tokens are separated by whitespace; '#' starts a comment to end of line
    let mut tok = String::new();
    let mut in_comment = false;
    let mut byte = [0u8; 1];
    loop {
        if r.read(&mut byte)? == 0 {
            if tok.is_empty() {
                return Err(Error::Format("unexpected end of PGM header".into()));
            }
            return Ok(tok);
        }
        let c = byte[0];
        if in_comment {
            if c == b'\n' {
                in_comment = false;
            }
            continue;
        }
        if c == b'#' {
            in_comment = true;
            continue;
        }
        if c.is_ascii_whitespace() {
            if tok.is_empty() {
                continue;
            }
            return Ok(tok);
        }
        tok.push(c as char);
    }
}

/// Reads a binary 8-bit grayscale PGM (magic P5, maxval <= 255).
pub fn read_pgm<R: Read>(mut r: R) -> Result<GrayImage> {
    let magic = read_header_token(&mut r)?;
    if magic != "P5" {
        return Err(Error::Format(format!(
            "unsupported image magic {magic:?}, expected binary PGM (P5)"
        )));
    }
    let parse = |s: String| -> Result<usize> {
        s.parse()
            .map_err(|_| Error::Format(format!("bad PGM header field {s:?}")))
    };
    let width = parse(read_header_token(&mut r)?)?;
    let height = parse(read_header_token(&mut r)?)?;
    let maxval = parse(read_header_token(&mut r)?)?;
    if width == 0 || height == 0 {
        return Err(Error::Format("PGM with zero dimension".into()));
    }
    if maxval == 0 || maxval > 255 {
        return Err(Error::Format(format!(
            "only 8-bit PGM supported (maxval {maxval})"
        )));
    }
    let mut raw = vec![0u8; width * height];
    r.read_exact(&mut raw)
        .map_err(|_| Error::Format("truncated PGM pixel data".into()))?;
    let scale = 1.0 / maxval as f64;
    Ok(GrayImage {
        width,
        height,
        pixels: raw.iter().map(|&b| b as f64 * scale).collect(),
    })
}

/// Writes a binary 8-bit PGM; values are clamped to [0,1] and quantized.
pub fn write_pgm<W: std::io::Write>(w: &mut W, img: &GrayImage) -> Result<()> {
    writeln!(w, "P5")?;
    writeln!(w, "{} {}", img.width, img.height)?;
    writeln!(w, "255")?;
    let bytes: Vec<u8> = img
        .pixels
        .iter()
        .map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
        .collect();
    w.write_all(&bytes)?;
    Ok(())
}

/// Random patch positions, uniform over valid top-left corners.
pub fn random_patches(
    img: &GrayImage,
    patch: usize,
    count: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Tensor>> {
    if img.height < patch || img.width < patch {
        return Err(Error::invalid("image smaller than the patch size"));
    }
    (0..count)
        .map(|_| {
            let top = rng.gen_range(0..=img.height - patch);
            let left = rng.gen_range(0..=img.width - patch);
            img.patch(top, left, patch)
        })
        .collect()
}

/// Non-overlapping tiling in row-major tile order; partial border tiles are
/// discarded. Returns the patches and the tile grid (rows, cols).
pub fn tile_patches(img: &GrayImage, patch: usize) -> Result<(Vec<Tensor>, usize, usize)> {
    let rows = img.height / patch;
    let cols = img.width / patch;
    let mut out = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            out.push(img.patch(r * patch, c * patch, patch)?);
        }
    }
    Ok((out, rows, cols))
}

/// Inverse of `tile_patches` over the cropped region.
pub fn assemble_tiles(patches: &[Tensor], rows: usize, cols: usize, patch: usize) -> Result<GrayImage> {
    if patches.len() != rows * cols {
        return Err(Error::invalid("assemble_tiles: tile count mismatch"));
    }
    let mut img = GrayImage {
        width: cols * patch,
        height: rows * patch,
        pixels: vec![0.0; rows * cols * patch * patch],
    };
    for r in 0..rows {
        for c in 0..cols {
            let t = &patches[r * cols + c];
            if t.shape() != [patch, patch] {
                return Err(Error::invalid("assemble_tiles: wrong patch shape"));
            }
            for j in 0..patch {
                for i in 0..patch {
                    img.pixels[(r * patch + i) * img.width + c * patch + j] =
                        t.get(&[i, j]);
                }
            }
        }
    }
    Ok(img)
}

/// Loads a PGM corpus into a training set of random patches. Unreadable or
/// unsupported files produce a warning on stderr and are skipped; failing
/// every file is an error.
pub fn extract_patches<P: AsRef<Path>>(
    paths: &[P],
    patch: usize,
    per_image: usize,
    seed: u64,
) -> Result<TrainingSet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut slices = Vec::new();
    for p in paths {
        let p = p.as_ref();
        let loaded = std::fs::File::open(p)
            .map_err(Error::from)
            .and_then(read_pgm)
            .and_then(|img| random_patches(&img, patch, per_image, &mut rng));
        match loaded {
            Ok(mut ps) => slices.append(&mut ps),
            Err(e) => eprintln!("warning: skipping {}: {e}", p.display()),
        }
    }
    if slices.is_empty() {
        return Err(Error::invalid("no usable images in the corpus"));
    }
    TrainingSet::new(Tensor::stack_last(&slices)?)
}
