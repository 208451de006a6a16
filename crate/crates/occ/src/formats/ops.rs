use std::path::Path;

use sparse_occ_core::{validate, ClassTaxonomy, LabeledPointSet};

use super::{put_f32, put_u32, read_file, write_file, ByteReader, FormatError, Result};

pub const OPS_MAGIC: &[u8; 4] = b"OPS1";

/// Validates `set` against `taxonomy`, then serializes it.
pub fn encode_ops(set: &LabeledPointSet, taxonomy: &ClassTaxonomy) -> Result<Vec<u8>> {
    validate(set, taxonomy)?;
    let labeled = set.classes();
    let record = 12 + if labeled.is_some() { 2 } else { 0 };
    let mut out = Vec::with_capacity(9 + record * set.len());
    out.extend_from_slice(OPS_MAGIC);
    put_u32(&mut out, set.len())?;
    out.push(u8::from(labeled.is_some()));
    for (i, p) in set.positions().iter().enumerate() {
        for &c in p {
            put_f32(&mut out, c)?;
        }
        if let Some(classes) = labeled {
            out.extend_from_slice(&classes[i].to_le_bytes());
        }
    }
    Ok(out)
}

pub fn decode_ops(bytes: &[u8], taxonomy: &ClassTaxonomy) -> Result<LabeledPointSet> {
    let mut r = ByteReader::new(bytes);
    r.magic(OPS_MAGIC)?;
    let count = r.u32()? as usize;
    let labeled = r.u8()? != 0;
    let record = 12 + if labeled { 2 } else { 0 };
    r.require(count.saturating_mul(record))?;

    let mut positions = Vec::with_capacity(count);
    let mut classes = Vec::with_capacity(if labeled { count } else { 0 });
    for _ in 0..count {
        positions.push([f64::from(r.f32()?), f64::from(r.f32()?), f64::from(r.f32()?)]);
        if labeled {
            let c = r.u16()?;
            if !taxonomy.is_semantic(c) {
                return Err(FormatError::InvalidClassId(c));
            }
            classes.push(c);
        }
    }
    r.finish()?;
    let set = if labeled {
        LabeledPointSet::labeled(positions, classes)?
    } else {
        LabeledPointSet::new(positions)
    };
    validate(&set, taxonomy)?;
    Ok(set)
}

pub fn write_ops(path: impl AsRef<Path>, set: &LabeledPointSet, taxonomy: &ClassTaxonomy) -> Result<()> {
    write_file(path.as_ref(), &encode_ops(set, taxonomy)?)
}

pub fn read_ops(path: impl AsRef<Path>, taxonomy: &ClassTaxonomy) -> Result<LabeledPointSet> {
    decode_ops(&read_file(path.as_ref())?, taxonomy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tax() -> ClassTaxonomy {
        ClassTaxonomy::occ3d()
    }

    #[test]
    fn layout_sizes() {
        let labeled = LabeledPointSet::labeled(vec![[1.0, 2.0, 3.0]; 3], vec![4; 3]).unwrap();
        assert_eq!(encode_ops(&labeled, &tax()).unwrap().len(), 9 + 3 * 14);
        let bare = LabeledPointSet::new(vec![[1.0, 2.0, 3.0]; 3]);
        assert_eq!(encode_ops(&bare, &tax()).unwrap().len(), 9 + 3 * 12);
        assert_eq!(encode_ops(&LabeledPointSet::default(), &tax()).unwrap().len(), 9);
    }

    #[test]
    fn bad_magic() {
        let mut bytes = encode_ops(&LabeledPointSet::new(vec![[0.0; 3]]), &tax()).unwrap();
        bytes[..4].copy_from_slice(b"XXXX");
        assert!(matches!(decode_ops(&bytes, &tax()), Err(FormatError::BadMagic { .. })));
    }

    #[test]
    fn truncated_records() {
        let set = LabeledPointSet::labeled(vec![[0.5; 3]; 10], vec![1; 10]).unwrap();
        let bytes = encode_ops(&set, &tax()).unwrap();
        let cut = &bytes[..9 + 7 * 14];
        assert!(matches!(
            decode_ops(cut, &tax()),
            Err(FormatError::TruncatedFile { expected, found }) if expected == 9 + 140 && found == 107
        ));
        assert!(matches!(
            decode_ops(&bytes[..6], &tax()),
            Err(FormatError::TruncatedFile { .. })
        ));
        let mut long = bytes.clone();
        long.push(0);
        assert!(matches!(decode_ops(&long, &tax()), Err(FormatError::TrailingData(1))));
    }

    #[test]
    fn class_ids_are_checked() {
        let set = LabeledPointSet::labeled(vec![[0.0; 3]], vec![17]).unwrap();
        assert!(encode_ops(&set, &tax()).is_err());
        let mut bytes = encode_ops(&LabeledPointSet::labeled(vec![[0.0; 3]], vec![3]).unwrap(), &tax()).unwrap();
        let n = bytes.len();
        bytes[n - 2..].copy_from_slice(&40u16.to_le_bytes());
        assert!(matches!(
            decode_ops(&bytes, &tax()),
            Err(FormatError::InvalidClassId(40))
        ));
    }

    #[test]
    fn huge_coordinates_are_rejected() {
        let set = LabeledPointSet::new(vec![[1e300, 0.0, 0.0]]);
        assert!(matches!(
            encode_ops(&set, &tax()),
            Err(FormatError::NotRepresentable(_))
        ));
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.ops");
        let set = LabeledPointSet::labeled(vec![[0.25, -1.5, 3.0], [7.0, 8.0, -9.5]], vec![0, 16]).unwrap();
        write_ops(&path, &set, &tax()).unwrap();
        assert_eq!(read_ops(&path, &tax()).unwrap(), set);
    }

    proptest! {
        #[test]
        fn rewrite_is_byte_identical(
            pts in prop::collection::vec(prop::array::uniform3(-1e4f64..1e4), 0..64),
            labeled in any::<bool>(),
            seed in 0u16..17,
        ) {
            let set = if labeled {
                let classes = (0..pts.len()).map(|i| (i as u16 + seed) % 17).collect();
                LabeledPointSet::labeled(pts, classes).unwrap()
            } else {
                LabeledPointSet::new(pts)
            };
            let bytes = encode_ops(&set, &tax()).unwrap();
            let back = decode_ops(&bytes, &tax()).unwrap();
            prop_assert_eq!(encode_ops(&back, &tax()).unwrap(), bytes);
            prop_assert_eq!(decode_ops(&encode_ops(&back, &tax()).unwrap(), &tax()).unwrap(), back);
        }

        #[test]
        fn f32_sets_round_trip_exactly(pts in prop::collection::vec(prop::array::uniform3(-1e4f32..1e4), 0..64)) {
            let set = LabeledPointSet::new(pts.iter().map(|p| p.map(f64::from)).collect());
            prop_assert_eq!(decode_ops(&encode_ops(&set, &tax()).unwrap(), &tax()).unwrap(), set);
        }
    }
}
