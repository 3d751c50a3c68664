//! Masked fractional Hamming distance with rotation compensation, the
//! on-disk template store, enrollment/verification/identification, and
//! score-distribution evaluation.

use std::fs::{File, OpenOptions};
use std::io::{Read, Seek, SeekFrom, Write};
use std::path::Path;

use crate::encode::{encode_iris, CodeMeta, IrisCode, CODE_BYTES};
use crate::error::{Error, Result};
use crate::localize::{Boundaries, CircleParams};
use crate::normalize::NormalizedIris;

/// Default minimum number of jointly usable bits for a comparison to count.
pub const DEFAULT_MIN_OVERLAP: u32 = 512;

/// Fraction of disagreeing bits over the jointly usable positions.
///
/// Returns `(hd, usable_bits)`.
pub fn hamming_distance(a: &IrisCode, b: &IrisCode, min_overlap: u32) -> Result<(f64, u32)> {
    let mut usable = 0u32;
    let mut differing = 0u32;
    for i in 0..CODE_BYTES {
        let m = a.mask_bytes()[i] & b.mask_bytes()[i];
        usable += m.count_ones();
        differing += ((a.bit_bytes()[i] ^ b.bit_bytes()[i]) & m).count_ones();
    }
    if usable < min_overlap {
        return Err(Error::InsufficientOverlap {
            usable,
            min: min_overlap,
        });
    }
    Ok((differing as f64 / usable as f64, usable))
}

/// Accept/reject decision relative to a threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Accept,
    Reject,
}

/// Outcome of a rotation-compensated comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchResult {
    pub hd: f64,
    pub usable_bits: u32,
    /// Column shift of the probe strip that produced the best distance.
    pub best_shift: i32,
    pub decision: Decision,
    pub threshold: f64,
}

/// Matching parameters: the shift set searched, the accept threshold, and
/// the minimum mask overlap.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchParams {
    pub shifts: Vec<i32>,
    pub threshold: f64,
    pub min_overlap: u32,
}

impl Default for MatchParams {
    fn default() -> Self {
        Self {
            shifts: (-4..=4).map(|k| 4 * k).collect(),
            threshold: 0.35,
            min_overlap: DEFAULT_MIN_OVERLAP,
        }
    }
}

/// Compares a probe strip against a stored code at every configured column
/// shift, re-encoding the shifted strip each time, and reports the minimum
/// distance.
///
/// Shifts must be multiples of four columns; re-encoding makes the
/// comparison exact at that granularity where bit-level rotation of level-3
/// coefficients would not be.
pub fn match_with_shifts(
    probe: &NormalizedIris,
    gallery: &IrisCode,
    params: &MatchParams,
) -> Result<MatchResult> {
    if params.shifts.is_empty() {
        return Err(Error::InvalidShifts("shift set is empty".into()));
    }
    for &s in &params.shifts {
        if s % 4 != 0 || s.unsigned_abs() as usize >= probe.angular_res() {
            return Err(Error::InvalidShifts(format!(
                "shift {s} must be a multiple of 4 smaller than the strip width"
            )));
        }
    }

    let mut best: Option<(f64, u32, i32)> = None;
    let mut last_err = None;
    for &shift in &params.shifts {
        let shifted = probe.shifted_columns(shift);
        let mut code = encode_iris(&shifted)?;
        let mut meta = code.meta();
        meta.shift_cols = shift as i16;
        code.set_meta(meta);
        match hamming_distance(&code, gallery, params.min_overlap) {
            Ok((hd, usable)) => {
                if best.is_none_or(|(b, _, _)| hd < b) {
                    best = Some((hd, usable, shift));
                }
            }
            Err(e @ Error::InsufficientOverlap { .. }) => last_err = Some(e),
            Err(e) => return Err(e),
        }
    }
    match best {
        Some((hd, usable_bits, best_shift)) => Ok(MatchResult {
            hd,
            usable_bits,
            best_shift,
            decision: if hd <= params.threshold {
                Decision::Accept
            } else {
                Decision::Reject
            },
            threshold: params.threshold,
        }),
        None => Err(last_err.expect("no result implies every shift lacked overlap")),
    }
}

/// A persisted identity: subject id, code, detected boundaries, enrollment
/// time (seconds since the Unix epoch).
#[derive(Debug, Clone, PartialEq)]
pub struct TemplateRecord {
    pub subject_id: String,
    pub code: IrisCode,
    pub boundaries: Boundaries,
    pub created_at: u64,
}

const STORE_MAGIC: &[u8; 4] = b"IRDB";
const STORE_VERSION: u8 = 1;

/// Adds `record` to the store at `db_path`, creating the file on first use.
/// Re-enrolling an existing subject replaces its record only when
/// `overwrite` is set. The write happens under an exclusive file lock and is
/// synced before returning.
pub fn enroll(db_path: impl AsRef<Path>, record: &TemplateRecord, overwrite: bool) -> Result<()> {
    if record.subject_id.is_empty() {
        return Err(Error::EmptySubjectId);
    }
    let mut file = OpenOptions::new()
        .read(true)
        .write(true)
        .create(true)
        .truncate(false)
        .open(db_path)?;
    file.lock()?;
    let mut bytes = Vec::new();
    file.read_to_end(&mut bytes)?;
    let mut records = if bytes.is_empty() {
        Vec::new()
    } else {
        parse_store(&bytes)?
    };

    match records
        .iter_mut()
        .find(|r| r.subject_id == record.subject_id)
    {
        Some(existing) => {
            if !overwrite {
                return Err(Error::DuplicateId(record.subject_id.clone()));
            }
            *existing = record.clone();
        }
        None => records.push(record.clone()),
    }

    let serialized = serialize_store(&records);
    file.seek(SeekFrom::Start(0))?;
    file.set_len(0)?;
    file.write_all(&serialized)?;
    file.sync_all()?;
    Ok(())
}

/// Reads every record in the store (shared lock).
pub fn load_store(db_path: impl AsRef<Path>) -> Result<Vec<TemplateRecord>> {
    let mut file = File::open(db_path)?;
    file.lock_shared()?;
    let mut bytes = Vec::new();
    file.read_to_end(&mut bytes)?;
    if bytes.is_empty() {
        return Ok(Vec::new());
    }
    parse_store(&bytes)
}

/// Serializes records in the store wire format; exposed so tests can check
/// byte-exactness of the layout.
pub fn serialize_store(records: &[TemplateRecord]) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(STORE_MAGIC);
    out.push(STORE_VERSION);
    out.extend_from_slice(&(records.len() as u32).to_le_bytes());
    for r in records {
        let id = r.subject_id.as_bytes();
        out.extend_from_slice(&(id.len() as u16).to_le_bytes());
        out.extend_from_slice(id);
        out.extend_from_slice(&r.created_at.to_le_bytes());
        for v in [
            r.boundaries.pupil.cx,
            r.boundaries.pupil.cy,
            r.boundaries.pupil.r,
            r.boundaries.limbic.cx,
            r.boundaries.limbic.cy,
            r.boundaries.limbic.r,
        ] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        let meta = r.code.meta();
        out.extend_from_slice(&meta.strip_rows.to_le_bytes());
        out.extend_from_slice(&meta.strip_cols.to_le_bytes());
        out.extend_from_slice(r.code.bit_bytes());
        out.extend_from_slice(r.code.mask_bytes());
    }
    out
}

/// Parses the store wire format.
pub fn parse_store(bytes: &[u8]) -> Result<Vec<TemplateRecord>> {
    let mut cur = Cursor { bytes, pos: 0 };
    let magic = cur.take(4)?;
    if magic != STORE_MAGIC {
        return Err(Error::MalformedStore("bad magic".into()));
    }
    let version = cur.take(1)?[0];
    if version != STORE_VERSION {
        return Err(Error::MalformedStore(format!(
            "unsupported version {version}"
        )));
    }
    let count = u32::from_le_bytes(cur.take(4)?.try_into().unwrap());
    let mut records = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let id_len = u16::from_le_bytes(cur.take(2)?.try_into().unwrap()) as usize;
        let id = std::str::from_utf8(cur.take(id_len)?)
            .map_err(|e| Error::MalformedStore(format!("subject id not UTF-8: {e}")))?
            .to_string();
        if id.is_empty() {
            return Err(Error::MalformedStore("empty subject id".into()));
        }
        let created_at = u64::from_le_bytes(cur.take(8)?.try_into().unwrap());
        let mut circ = [0.0f64; 6];
        for v in &mut circ {
            *v = f64::from_le_bytes(cur.take(8)?.try_into().unwrap());
        }
        let strip_rows = u16::from_le_bytes(cur.take(2)?.try_into().unwrap());
        let strip_cols = u16::from_le_bytes(cur.take(2)?.try_into().unwrap());
        let mut bits = [0u8; CODE_BYTES];
        bits.copy_from_slice(cur.take(CODE_BYTES)?);
        let mut mask = [0u8; CODE_BYTES];
        mask.copy_from_slice(cur.take(CODE_BYTES)?);

        let boundaries = Boundaries::new(
            CircleParams::new(circ[0], circ[1], circ[2]),
            CircleParams::new(circ[3], circ[4], circ[5]),
        )
        .map_err(|e| Error::MalformedStore(format!("record '{id}': {e}")))?;
        let code = IrisCode::from_planes(
            bits,
            mask,
            CodeMeta {
                strip_rows,
                strip_cols,
                shift_cols: 0,
            },
        );
        records.push(TemplateRecord {
            subject_id: id,
            code,
            boundaries,
            created_at,
        });
    }
    Ok(records)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::MalformedStore(format!(
                "unexpected end of store at byte {}",
                self.pos
            )));
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }
}

/// Matches `probe` against one enrolled subject.
pub fn verify(
    db_path: impl AsRef<Path>,
    subject_id: &str,
    probe: &NormalizedIris,
    params: &MatchParams,
) -> Result<MatchResult> {
    let records = load_store(db_path)?;
    let record = records
        .iter()
        .find(|r| r.subject_id == subject_id)
        .ok_or_else(|| Error::UnknownSubject(subject_id.to_string()))?;
    match_with_shifts(probe, &record.code, params)
}

/// Linear scan of the whole store, sorted by ascending distance (ties by
/// subject id). Records without enough mask overlap are skipped.
pub fn identify(
    db_path: impl AsRef<Path>,
    probe: &NormalizedIris,
    params: &MatchParams,
) -> Result<Vec<(String, MatchResult)>> {
    let records = load_store(db_path)?;
    if records.is_empty() {
        return Err(Error::EmptyStore);
    }
    let mut results = Vec::new();
    for record in &records {
        match match_with_shifts(probe, &record.code, params) {
            Ok(result) => results.push((record.subject_id.clone(), result)),
            Err(Error::InsufficientOverlap { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    results.sort_by(|a, b| a.1.hd.total_cmp(&b.1.hd).then_with(|| a.0.cmp(&b.0)));
    Ok(results)
}

/// One row of the threshold sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocRow {
    pub threshold: f64,
    /// Fraction of imposter scores accepted at this threshold.
    pub far: f64,
    /// Fraction of genuine scores rejected at this threshold.
    pub frr: f64,
}

/// Genuine/imposter score lists with their FAR/FRR sweep and decidability.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreDistribution {
    pub genuine: Vec<f64>,
    pub imposter: Vec<f64>,
    pub rows: Vec<RocRow>,
    pub dprime: f64,
}

/// Builds the FAR/FRR table over thresholds 0.01..=0.50 (step 0.01) and the
/// decidability index from raw score lists.
pub fn evaluate(genuine: Vec<f64>, imposter: Vec<f64>) -> Result<ScoreDistribution> {
    if genuine.is_empty() {
        return Err(Error::EmptyInput("genuine score list"));
    }
    if imposter.is_empty() {
        return Err(Error::EmptyInput("imposter score list"));
    }
    let rows = (1..=50)
        .map(|i| {
            let t = i as f64 / 100.0;
            let far = imposter.iter().filter(|&&s| s <= t).count() as f64 / imposter.len() as f64;
            let frr = genuine.iter().filter(|&&s| s > t).count() as f64 / genuine.len() as f64;
            RocRow {
                threshold: t,
                far,
                frr,
            }
        })
        .collect();
    let dprime = decidability(&genuine, &imposter);
    Ok(ScoreDistribution {
        genuine,
        imposter,
        rows,
        dprime,
    })
}

/// `|mean_imp - mean_gen| / sqrt((var_imp + var_gen) / 2)` with population
/// variances, so it is exactly recomputable from the emitted score lists.
pub fn decidability(genuine: &[f64], imposter: &[f64]) -> f64 {
    let stats = |xs: &[f64]| {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
        (mean, var)
    };
    let (mg, vg) = stats(genuine);
    let (mi, vi) = stats(imposter);
    (mi - mg).abs() / ((vi + vg) / 2.0).sqrt()
}

impl ScoreDistribution {
    /// CSV emission: header, one `threshold,far,frr` row per sweep point,
    /// then a trailing `# dprime=<value>` comment line.
    pub fn write_csv(&self, w: &mut impl Write) -> std::io::Result<()> {
        writeln!(w, "threshold,far,frr")?;
        for row in &self.rows {
            writeln!(w, "{:.2},{:.6},{:.6}", row.threshold, row.far, row.frr)?;
        }
        writeln!(w, "# dprime={:.6}", self.dprime)
    }
}
