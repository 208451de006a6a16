use std::path::Path;

use sparse_occ_core::sampling::FeatureMap;

use super::{put_f32, put_u32, read_file, write_file, ByteReader, FormatError, Result};

pub const FMAP_MAGIC: &[u8; 4] = b"FMAP";

pub fn encode_fmap(fm: &FeatureMap) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(16 + 4 * fm.data().len());
    out.extend_from_slice(FMAP_MAGIC);
    put_u32(&mut out, fm.width())?;
    put_u32(&mut out, fm.height())?;
    put_u32(&mut out, fm.channels())?;
    for &v in fm.data() {
        put_f32(&mut out, v)?;
    }
    Ok(out)
}

pub fn decode_fmap(bytes: &[u8]) -> Result<FeatureMap> {
    let mut r = ByteReader::new(bytes);
    r.magic(FMAP_MAGIC)?;
    let raw = [r.u32()?, r.u32()?, r.u32()?];
    let count = raw
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d as usize))
        .filter(|n| n.checked_mul(4).is_some())
        .ok_or(FormatError::DimsOverflow(raw))?;
    r.require(4 * count)?;
    let data = (0..count).map(|_| r.f32().map(f64::from)).collect::<Result<Vec<_>>>()?;
    r.finish()?;
    Ok(FeatureMap::new(
        raw[0] as usize,
        raw[1] as usize,
        raw[2] as usize,
        data,
    )?)
}

pub fn write_fmap(path: impl AsRef<Path>, fm: &FeatureMap) -> Result<()> {
    write_file(path.as_ref(), &encode_fmap(fm)?)
}

pub fn read_fmap(path: impl AsRef<Path>) -> Result<FeatureMap> {
    decode_fmap(&read_file(path.as_ref())?)
}
