use std::path::Path;

use sparse_occ_core::{ClassTaxonomy, VoxelGrid};

use super::{put_f32, put_u32, read_file, write_file, ByteReader, FormatError, Result};

pub const OVG_MAGIC: &[u8; 4] = b"OVG1";

/// Magic, origin, voxel size and dims.
pub const OVG_HEADER_LEN: usize = 4 + 12 + 4 + 12;

pub fn encode_grid(grid: &VoxelGrid, taxonomy: &ClassTaxonomy) -> Result<Vec<u8>> {
    grid.validate(taxonomy)?;
    let mut out = Vec::with_capacity(OVG_HEADER_LEN + 2 * grid.len());
    out.extend_from_slice(OVG_MAGIC);
    for c in grid.origin() {
        put_f32(&mut out, c)?;
    }
    put_f32(&mut out, grid.voxel_size())?;
    for d in grid.dims() {
        put_u32(&mut out, d)?;
    }
    for l in grid.labels() {
        out.extend_from_slice(&l.to_le_bytes());
    }
    Ok(out)
}

pub fn decode_grid(bytes: &[u8], taxonomy: &ClassTaxonomy) -> Result<VoxelGrid> {
    let mut r = ByteReader::new(bytes);
    r.magic(OVG_MAGIC)?;
    let origin = [f64::from(r.f32()?), f64::from(r.f32()?), f64::from(r.f32()?)];
    let voxel_size = f64::from(r.f32()?);
    let raw = [r.u32()?, r.u32()?, r.u32()?];
    let count = raw
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d as usize))
        .filter(|n| n.checked_mul(2).is_some_and(|b| b <= isize::MAX as usize))
        .ok_or(FormatError::DimsOverflow(raw))?;
    r.require(2 * count)?;
    let mut labels = Vec::with_capacity(count);
    for _ in 0..count {
        let l = r.u16()?;
        if !taxonomy.is_label(l) {
            return Err(FormatError::InvalidClassId(l));
        }
        labels.push(l);
    }
    r.finish()?;
    let dims = raw.map(|d| d as usize);
    Ok(VoxelGrid::new(origin, voxel_size, dims, labels)?)
}

pub fn write_grid(path: impl AsRef<Path>, grid: &VoxelGrid, taxonomy: &ClassTaxonomy) -> Result<()> {
    write_file(path.as_ref(), &encode_grid(grid, taxonomy)?)
}

pub fn read_grid(path: impl AsRef<Path>, taxonomy: &ClassTaxonomy) -> Result<VoxelGrid> {
    decode_grid(&read_file(path.as_ref())?, taxonomy)
}
