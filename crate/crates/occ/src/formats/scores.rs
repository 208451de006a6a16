use std::path::Path;

use sparse_occ_core::losses::ClassScores;

use super::{put_f32, put_u32, read_file, write_file, ByteReader, FormatError, Result};

pub const SCORES_MAGIC: &[u8; 4] = b"SCRS";

pub fn encode_scores(scores: &ClassScores) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(12 + 4 * scores.data().len());
    out.extend_from_slice(SCORES_MAGIC);
    put_u32(&mut out, scores.rows())?;
    put_u32(&mut out, scores.num_classes())?;
    for &v in scores.data() {
        put_f32(&mut out, v)?;
    }
    Ok(out)
}

pub fn decode_scores(bytes: &[u8]) -> Result<ClassScores> {
    let mut r = ByteReader::new(bytes);
    r.magic(SCORES_MAGIC)?;
    let rows = r.u32()?;
    let classes = r.u32()?;
    let count = (rows as usize)
        .checked_mul(classes as usize)
        .filter(|n| n.checked_mul(4).is_some())
        .ok_or(FormatError::DimsOverflow([rows, classes, 1]))?;
    r.require(4 * count)?;
    let data = (0..count).map(|_| r.f32().map(f64::from)).collect::<Result<Vec<_>>>()?;
    r.finish()?;
    Ok(ClassScores::new(classes as usize, data)?)
}

pub fn write_scores(path: impl AsRef<Path>, scores: &ClassScores) -> Result<()> {
    write_file(path.as_ref(), &encode_scores(scores)?)
}

pub fn read_scores(path: impl AsRef<Path>) -> Result<ClassScores> {
    decode_scores(&read_file(path.as_ref())?)
}
