//! Multilevel 2-D Haar decomposition of the normalized strip and the
//! sign-based binary iris code derived from its level-3 subbands.

use std::fmt;

use crate::error::{Error, Result};
use crate::normalize::NormalizedIris;

/// Bits in an iris code (and its mask).
pub const CODE_BITS: usize = 2048;
/// Packed byte length of the code bit plane.
pub const CODE_BYTES: usize = CODE_BITS / 8;

/// Dense row-major matrix of wavelet-domain values.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl CoefficientMatrix {
    pub fn from_values(rows: usize, cols: usize, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), rows * cols);
        Self { rows, cols, values }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::from_values(rows, cols, vec![0.0; rows * cols])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.cols + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, v: f64) {
        self.values[row * self.cols + col] = v;
    }

    /// Sum of squared values.
    pub fn energy(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }
}

/// The three detail subbands of one decomposition level.
///
/// `detail_x` is high-pass along x / low-pass along y (responds to variation
/// across columns), `detail_y` the reverse, `detail_xy` high-pass in both.
#[derive(Debug, Clone, PartialEq)]
pub struct DetailBands {
    pub detail_x: CoefficientMatrix,
    pub detail_y: CoefficientMatrix,
    pub detail_xy: CoefficientMatrix,
}

/// Complete multilevel decomposition: detail bands for levels `1..=n` plus
/// the final approximation. Total coefficient count equals the input pixel
/// count.
#[derive(Debug, Clone, PartialEq)]
pub struct SubbandSet {
    /// `details[k]` holds level `k + 1`.
    pub details: Vec<DetailBands>,
    pub approx: CoefficientMatrix,
}

impl SubbandSet {
    pub fn levels(&self) -> usize {
        self.details.len()
    }

    /// Sum of squared coefficients over every subband.
    pub fn energy(&self) -> f64 {
        self.approx.energy()
            + self
                .details
                .iter()
                .map(|d| d.detail_x.energy() + d.detail_y.energy() + d.detail_xy.energy())
                .sum::<f64>()
    }
}

fn check_divisible(rows: usize, cols: usize, levels: usize) -> Result<()> {
    if levels == 0 || levels > 16 {
        return Err(Error::IndivisibleDims { rows, cols, levels });
    }
    let div = 1usize << levels;
    if rows == 0 || cols == 0 || !rows.is_multiple_of(div) || !cols.is_multiple_of(div) {
        return Err(Error::IndivisibleDims { rows, cols, levels });
    }
    Ok(())
}

/// One in-place analysis level on the `rows` x `cols` top-left region of
/// `data` (row stride `stride`). `scale` is applied to each pair sum and
/// difference: `1/sqrt(2)` for the orthonormal transform, `1.0` for the
/// integer-exact variant.
fn dwt_level_inplace(data: &mut [f64], stride: usize, rows: usize, cols: usize, scale: f64) {
    let mut scratch = vec![0.0f64; rows.max(cols)];
    // Rows: pairs along x -> [low | high].
    for row in data.chunks_mut(stride).take(rows) {
        for p in 0..cols / 2 {
            let a = row[2 * p];
            let b = row[2 * p + 1];
            scratch[p] = (a + b) * scale;
            scratch[cols / 2 + p] = (a - b) * scale;
        }
        row[..cols].copy_from_slice(&scratch[..cols]);
    }
    // Columns: pairs along y -> [low ; high].
    for col in 0..cols {
        for p in 0..rows / 2 {
            let a = data[(2 * p) * stride + col];
            let b = data[(2 * p + 1) * stride + col];
            scratch[p] = (a + b) * scale;
            scratch[rows / 2 + p] = (a - b) * scale;
        }
        for (p, &v) in scratch[..rows].iter().enumerate() {
            data[p * stride + col] = v;
        }
    }
}

/// Inverse of [`dwt_level_inplace`]; `scale` must be the reciprocal pair
/// (`1/sqrt(2)` inverts the orthonormal transform).
fn idwt_level_inplace(data: &mut [f64], stride: usize, rows: usize, cols: usize, scale: f64) {
    let mut scratch = vec![0.0f64; rows.max(cols)];
    for col in 0..cols {
        for p in 0..rows / 2 {
            let l = data[p * stride + col];
            let h = data[(rows / 2 + p) * stride + col];
            scratch[2 * p] = (l + h) * scale;
            scratch[2 * p + 1] = (l - h) * scale;
        }
        for (p, &v) in scratch[..rows].iter().enumerate() {
            data[p * stride + col] = v;
        }
    }
    for row in data.chunks_mut(stride).take(rows) {
        for p in 0..cols / 2 {
            let l = row[p];
            let h = row[cols / 2 + p];
            scratch[2 * p] = (l + h) * scale;
            scratch[2 * p + 1] = (l - h) * scale;
        }
        row[..cols].copy_from_slice(&scratch[..cols]);
    }
}

fn extract_block(
    data: &[f64],
    stride: usize,
    row0: usize,
    col0: usize,
    rows: usize,
    cols: usize,
) -> CoefficientMatrix {
    let mut values = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        let start = (row0 + r) * stride + col0;
        values.extend_from_slice(&data[start..start + cols]);
    }
    CoefficientMatrix::from_values(rows, cols, values)
}

/// Orthonormal multilevel 2-D Haar analysis. Each level filters rows then
/// columns with `(a + b)/sqrt(2)` and `(a - b)/sqrt(2)` on non-overlapping
/// pairs and recurses on the approximation, so total energy is preserved.
pub fn haar_dwt2(m: &CoefficientMatrix, levels: usize) -> Result<SubbandSet> {
    check_divisible(m.rows, m.cols, levels)?;
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    let mut data = m.values.clone();
    let stride = m.cols;

    let mut details = Vec::with_capacity(levels);
    let (mut rows, mut cols) = (m.rows, m.cols);
    for _ in 0..levels {
        dwt_level_inplace(&mut data, stride, rows, cols, inv_sqrt2);
        let (hr, hc) = (rows / 2, cols / 2);
        details.push(DetailBands {
            detail_x: extract_block(&data, stride, 0, hc, hr, hc),
            detail_y: extract_block(&data, stride, hr, 0, hr, hc),
            detail_xy: extract_block(&data, stride, hr, hc, hr, hc),
        });
        rows = hr;
        cols = hc;
    }
    let approx = extract_block(&data, stride, 0, 0, rows, cols);
    Ok(SubbandSet { details, approx })
}

/// Exact inverse of [`haar_dwt2`].
pub fn haar_idwt2(s: &SubbandSet) -> Result<CoefficientMatrix> {
    let levels = s.levels();
    let (ar, ac) = (s.approx.rows, s.approx.cols);
    let rows = ar << levels;
    let cols = ac << levels;
    check_divisible(rows, cols, levels)?;
    for (k, bands) in s.details.iter().enumerate() {
        let (er, ec) = (rows >> (k + 1), cols >> (k + 1));
        for band in [&bands.detail_x, &bands.detail_y, &bands.detail_xy] {
            if band.rows != er || band.cols != ec {
                return Err(Error::IndivisibleDims {
                    rows: band.rows,
                    cols: band.cols,
                    levels,
                });
            }
        }
    }

    let stride = cols;
    let mut data = vec![0.0f64; rows * cols];
    // Place the approximation, then unwind levels from the deepest out.
    for r in 0..ar {
        for c in 0..ac {
            data[r * stride + c] = s.approx.get(r, c);
        }
    }
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    for k in (0..levels).rev() {
        let (hr, hc) = (rows >> (k + 1), cols >> (k + 1));
        let bands = &s.details[k];
        for r in 0..hr {
            for c in 0..hc {
                data[r * stride + hc + c] = bands.detail_x.get(r, c);
                data[(hr + r) * stride + c] = bands.detail_y.get(r, c);
                data[(hr + r) * stride + hc + c] = bands.detail_xy.get(r, c);
            }
        }
        idwt_level_inplace(&mut data, stride, hr * 2, hc * 2, inv_sqrt2);
    }
    Ok(CoefficientMatrix::from_values(rows, cols, data))
}

/// Shape metadata carried along with a code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CodeMeta {
    pub strip_rows: u16,
    pub strip_cols: u16,
    /// Column shift applied to the source strip before encoding.
    pub shift_cols: i16,
}

impl Default for CodeMeta {
    fn default() -> Self {
        Self {
            strip_rows: 64,
            strip_cols: 512,
            shift_cols: 0,
        }
    }
}

/// 2048-bit binary template plus a same-size usability mask, packed MSB
/// first.
#[derive(Clone, PartialEq, Eq)]
pub struct IrisCode {
    bits: [u8; CODE_BYTES],
    mask: [u8; CODE_BYTES],
    meta: CodeMeta,
}

impl fmt::Debug for IrisCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("IrisCode")
            .field("set_bits", &count_ones(&self.bits))
            .field("usable_bits", &count_ones(&self.mask))
            .field("meta", &self.meta)
            .finish()
    }
}

fn count_ones(bytes: &[u8; CODE_BYTES]) -> u32 {
    bytes.iter().map(|b| b.count_ones()).sum()
}

impl IrisCode {
    pub fn from_planes(bits: [u8; CODE_BYTES], mask: [u8; CODE_BYTES], meta: CodeMeta) -> Self {
        Self { bits, mask, meta }
    }

    pub fn bit_bytes(&self) -> &[u8; CODE_BYTES] {
        &self.bits
    }

    pub fn mask_bytes(&self) -> &[u8; CODE_BYTES] {
        &self.mask
    }

    pub fn meta(&self) -> CodeMeta {
        self.meta
    }

    pub fn set_meta(&mut self, meta: CodeMeta) {
        self.meta = meta;
    }

    #[inline]
    pub fn bit(&self, index: usize) -> bool {
        self.bits[index / 8] >> (7 - index % 8) & 1 == 1
    }

    #[inline]
    pub fn mask_bit(&self, index: usize) -> bool {
        self.mask[index / 8] >> (7 - index % 8) & 1 == 1
    }

    pub fn usable_bits(&self) -> u32 {
        count_ones(&self.mask)
    }
}

#[inline]
fn set_packed(plane: &mut [u8; CODE_BYTES], index: usize, value: bool) {
    let byte = index / 8;
    let bit = 7 - index % 8;
    if value {
        plane[byte] |= 1 << bit;
    } else {
        plane[byte] &= !(1 << bit);
    }
}

/// Encodes a normalized strip into its 2048-bit code.
///
/// The strip is decomposed three levels; the emitted segments are, in order,
/// the mean-centered approximation, then `detail_x`, `detail_y`, and
/// `detail_xy` of level 3, each row-major. A coefficient of exactly zero
/// encodes as 1. A code bit is usable only when every strip pixel in its
/// 8x8 spatial support block is valid, identically across the four segments.
///
/// Internally the decomposition runs unnormalized (`a + b`, `a - b`), which
/// is integer-exact in f64 and shares every coefficient sign with
/// [`haar_dwt2`]: the per-subband scale factors are positive. The
/// approximation segment subtracts the subband mean, which an affine
/// intensity map only rescales, so codes are invariant under positive-gain
/// intensity changes.
pub fn encode_iris(n: &NormalizedIris) -> Result<IrisCode> {
    let (rows, cols) = (n.radial_res(), n.angular_res());
    check_divisible(rows, cols, 3)?;
    let (block_rows, block_cols) = (rows / 8, cols / 8);
    if block_rows * block_cols * 4 != CODE_BITS {
        return Err(Error::CodeSizeMismatch { rows, cols });
    }

    let mut data: Vec<f64> = n.strip().iter().map(|&v| v as f64).collect();
    let stride = cols;
    let (mut r, mut c) = (rows, cols);
    for _ in 0..3 {
        dwt_level_inplace(&mut data, stride, r, c, 1.0);
        r /= 2;
        c /= 2;
    }
    debug_assert_eq!((r, c), (block_rows, block_cols));

    let ll = extract_block(&data, stride, 0, 0, r, c);
    let dx = extract_block(&data, stride, 0, c, r, c);
    let dy = extract_block(&data, stride, r, 0, r, c);
    let dxy = extract_block(&data, stride, r, c, r, c);

    // Without centering, the approximation of a non-negative image is all
    // non-negative and carries no information.
    let mean = ll.values().iter().sum::<f64>() / ll.values().len() as f64;

    let mut bits = [0u8; CODE_BYTES];
    let segments: [&[f64]; 4] = [ll.values(), dx.values(), dy.values(), dxy.values()];
    let seg_len = block_rows * block_cols;
    for (s, segment) in segments.iter().enumerate() {
        for (i, &v) in segment.iter().enumerate() {
            let coeff = if s == 0 { v - mean } else { v };
            set_packed(&mut bits, s * seg_len + i, coeff >= 0.0);
        }
    }

    let mut mask = [0u8; CODE_BYTES];
    for bi in 0..block_rows {
        for bj in 0..block_cols {
            let mut all_valid = true;
            'block: for dr in 0..8 {
                for dc in 0..8 {
                    if !n.valid(bi * 8 + dr, bj * 8 + dc) {
                        all_valid = false;
                        break 'block;
                    }
                }
            }
            if all_valid {
                for s in 0..4 {
                    set_packed(&mut mask, s * seg_len + bi * block_cols + bj, true);
                }
            }
        }
    }

    Ok(IrisCode {
        bits,
        mask,
        meta: CodeMeta {
            strip_rows: rows as u16,
            strip_cols: cols as u16,
            shift_cols: 0,
        },
    })
}

/// Serializes a code as 256 code bytes followed by 256 mask bytes.
pub fn pack_code(code: &IrisCode) -> Vec<u8> {
    let mut out = Vec::with_capacity(2 * CODE_BYTES);
    out.extend_from_slice(&code.bits);
    out.extend_from_slice(&code.mask);
    out
}

/// Inverse of [`pack_code`]. The packed form carries no shape metadata, so
/// `meta` comes back at its default; template storage restores it.
pub fn unpack_code(bytes: &[u8]) -> Result<IrisCode> {
    if bytes.len() != 2 * CODE_BYTES {
        return Err(Error::BadLength {
            found: bytes.len(),
            expected: 2 * CODE_BYTES,
        });
    }
    let mut bits = [0u8; CODE_BYTES];
    let mut mask = [0u8; CODE_BYTES];
    bits.copy_from_slice(&bytes[..CODE_BYTES]);
    mask.copy_from_slice(&bytes[CODE_BYTES..]);
    Ok(IrisCode {
        bits,
        mask,
        meta: CodeMeta::default(),
    })
}
