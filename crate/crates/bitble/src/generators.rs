//! Test-matrix and data ingestion: discretized Laplacians, CSV matrices,
//! binary PGM/PPM image channels, and seeded random matrices.
//!
//! Non-square or odd-sized inputs are zero-padded to the next power-of-two
//! square, anchored top-left. Image pixels map row-major (matrix row = image
//! row) and are scaled into [0, 1] by 1/255.

use std::fs;
use std::path::Path;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::matrix::ComplexMatrix;
use crate::{Error, Result};

/// 1D discretized Laplacian on `2^n` points: 2 on the diagonal, -1 to each
/// neighbor; periodic boundaries wrap the stencil around.
pub fn laplacian_1d(n: u32, periodic: bool) -> ComplexMatrix {
    assert!(n >= 1, "laplacian needs at least one qubit");
    let size = 1usize << n;
    let mut m = ComplexMatrix::zeros(size, size);
    for i in 0..size {
        m[(i, i)] += Complex64::new(2.0, 0.0);
        for step in [1isize, -1] {
            let j = i as isize + step;
            if periodic {
                let j = j.rem_euclid(size as isize) as usize;
                m[(i, j)] += Complex64::new(-1.0, 0.0);
            } else if (0..size as isize).contains(&j) {
                m[(i, j as usize)] += Complex64::new(-1.0, 0.0);
            }
        }
    }
    m
}

/// 2D discretized Laplacian as the Kronecker sum of the 1D operators along
/// each direction: `L = Lxx (x) I + I (x) Lyy`, size `2^(nx+ny)`.
pub fn laplacian_2d(nx: u32, ny: u32, periodic: bool) -> ComplexMatrix {
    let lxx = laplacian_1d(nx, periodic);
    let lyy = laplacian_1d(ny, periodic);
    let ix = ComplexMatrix::identity(1 << nx);
    let iy = ComplexMatrix::identity(1 << ny);
    lxx.kron(&iy).add(&ix.kron(&lyy))
}

fn parse_complex_token(token: &str, line: usize) -> Result<Complex64> {
    let err = || Error::Parse {
        line,
        msg: format!("bad complex token '{token}' (expected a, a+bi or a-bi)"),
    };
    let t = token.trim();
    if t.is_empty() {
        return Err(err());
    }
    if let Some(body) = t.strip_suffix('i') {
        // split into real and signed imaginary parts; the sign separating
        // them is the last +/- not part of an exponent and not leading
        let bytes = body.as_bytes();
        let mut split = None;
        for idx in (1..bytes.len()).rev() {
            let c = bytes[idx] as char;
            if (c == '+' || c == '-') && !matches!(bytes[idx - 1] as char, 'e' | 'E') {
                split = Some(idx);
                break;
            }
        }
        let (re_str, im_str) = match split {
            Some(idx) => (&body[..idx], &body[idx..]),
            None => ("0", body),
        };
        let re: f64 = if re_str.is_empty() {
            0.0
        } else {
            re_str.trim().parse().map_err(|_| err())?
        };
        let im: f64 = match im_str.trim() {
            "+" | "" => 1.0,
            "-" => -1.0,
            s => s.parse().map_err(|_| err())?,
        };
        Ok(Complex64::new(re, im))
    } else {
        Ok(Complex64::new(t.parse().map_err(|_| err())?, 0.0))
    }
}

/// Parses a CSV matrix with tokens `a`, `a+bi` or `a-bi` and zero-pads it to
/// the next power-of-two square.
pub fn load_csv(path: impl AsRef<Path>) -> Result<ComplexMatrix> {
    let text = fs::read_to_string(path)?;
    parse_csv_matrix(&text)
}

pub fn parse_csv_matrix(text: &str) -> Result<ComplexMatrix> {
    let mut rows: Vec<Vec<Complex64>> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|token| parse_complex_token(token, idx + 1))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse {
            line: 1,
            msg: "empty matrix".into(),
        });
    }
    let width = rows.iter().map(|r| r.len()).max().unwrap();
    for row in &mut rows {
        row.resize(width, Complex64::new(0.0, 0.0));
    }
    Ok(ComplexMatrix::from_rows(rows)?.pad_to_power_of_two())
}

/// Parses a CSV vector (tokens separated by commas and/or newlines).
pub fn load_state_csv(path: impl AsRef<Path>) -> Result<Vec<Complex64>> {
    let text = fs::read_to_string(path)?;
    let mut values = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        for token in raw.split(',') {
            if token.trim().is_empty() {
                continue;
            }
            values.push(parse_complex_token(token, idx + 1)?);
        }
    }
    if values.is_empty() {
        return Err(Error::Parse {
            line: 1,
            msg: "empty state".into(),
        });
    }
    let len = values.len().next_power_of_two();
    values.resize(len, Complex64::new(0.0, 0.0));
    Ok(values)
}

/// Serializes a matrix in the CSV dialect accepted by [`load_csv`].
pub fn write_csv(m: &ComplexMatrix) -> String {
    let mut out = String::new();
    for r in 0..m.rows() {
        let line: Vec<String> = m
            .row(r)
            .iter()
            .map(|z| {
                if z.im == 0.0 {
                    format!("{}", z.re)
                } else if z.im < 0.0 {
                    format!("{}-{}i", z.re, -z.im)
                } else {
                    format!("{}+{}i", z.re, z.im)
                }
            })
            .collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

/// Which channel of an image to extract.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Channel {
    R,
    G,
    B,
}

/// Loads one channel of a binary PGM (P5) or PPM (P6) image with maxval 255,
/// scales to [0, 1] and pads to the next power-of-two square.
pub fn load_image_channel(path: impl AsRef<Path>, channel: Channel) -> Result<ComplexMatrix> {
    let bytes = fs::read(path)?;
    parse_image_channel(&bytes, channel)
}

pub fn parse_image_channel(bytes: &[u8], channel: Channel) -> Result<ComplexMatrix> {
    let perr = |msg: &str| Error::Parse {
        line: 1,
        msg: msg.into(),
    };
    let magic = bytes.get(..2).ok_or_else(|| perr("truncated image"))?;
    let channels = match magic {
        b"P5" => 1usize,
        b"P6" => 3usize,
        _ => return Err(perr("only binary PGM (P5) and PPM (P6) are supported")),
    };
    // header: magic, width, height, maxval as whitespace-separated tokens,
    // with '#' comments running to end of line
    let mut pos = 2;
    let mut fields = [0usize; 3];
    let mut field_idx = 0;
    while field_idx < 3 {
        while pos < bytes.len() && (bytes[pos].is_ascii_whitespace() || bytes[pos] == b'#') {
            if bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                pos += 1;
            }
        }
        let start = pos;
        while pos < bytes.len() && bytes[pos].is_ascii_digit() {
            pos += 1;
        }
        if start == pos {
            return Err(perr("malformed image header"));
        }
        fields[field_idx] = std::str::from_utf8(&bytes[start..pos])
            .unwrap()
            .parse()
            .map_err(|_| perr("bad header field"))?;
        field_idx += 1;
    }
    let (width, height, maxval) = (fields[0], fields[1], fields[2]);
    if maxval != 255 {
        return Err(perr("only maxval 255 images are supported"));
    }
    if width == 0 || height == 0 {
        return Err(perr("image has zero dimension"));
    }
    pos += 1; // single whitespace byte after maxval
    let need = width * height * channels;
    let data = bytes
        .get(pos..pos + need)
        .ok_or_else(|| perr("truncated pixel data"))?;
    let offset = match channel {
        Channel::R => 0,
        Channel::G => 1.min(channels - 1),
        Channel::B => 2.min(channels - 1),
    };
    let mut m = ComplexMatrix::zeros(height, width);
    for r in 0..height {
        for c in 0..width {
            let v = data[(r * width + c) * channels + offset] as f64 / 255.0;
            m[(r, c)] = Complex64::new(v, 0.0);
        }
    }
    Ok(m.pad_to_power_of_two())
}

/// Seeded standard-normal random matrix of size `2^n`; complex entries get
/// independent real and imaginary parts. Entries are drawn row-major, so a
/// given seed is reproducible across runs and platforms.
pub fn random_matrix(n: u32, complex: bool, seed: u64) -> ComplexMatrix {
    let size = 1usize << n;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m = ComplexMatrix::zeros(size, size);
    for r in 0..size {
        for c in 0..size {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = if complex {
                StandardNormal.sample(&mut rng)
            } else {
                0.0
            };
            m[(r, c)] = Complex64::new(re, im);
        }
    }
    m
}
