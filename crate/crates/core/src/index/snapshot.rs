//! `CSIX1` binary index snapshots (little-endian).
//!
//! Layout:
//!
//! ```text
//! magic "CSIX1"
//! u32 min_fragment_points, u32 fragment_stride, u32 tangent_window
//! f64 d_log_r, f64 d_phi, f64 d_theta               bucket params
//! u32 n_log_r, u32 n_phi, u32 n_theta, f64 log_r_min, f64 d_log_r (effective)
//! u64 n_curves, then n_curves x u64 curve checksum
//! u64 n_fragments, then per fragment:
//!     u32 curve, u32 start, u32 end
//!     f64 p_x, f64 p_y, f64 p_theta, u8 reflected
//!     f64 rotation, f64 scale, f64 t_x, f64 t_y, u8 reflect
//! same-scale table:  u64 n_offsets, u32 offsets..., u64 n_entries, u32 entries...
//! scale-free table:  same layout
//! ```
//!
//! Curve points are not stored; the snapshot is loaded against the corpus it
//! was built from and every curve checksum must agree.

use std::io::{Read, Write};

use byteorder::{LittleEndian as LE, ReadBytesExt, WriteBytesExt};
use sha2::{Digest, Sha256};

use super::{BucketParams, CanonicalFragment, Csr, FragmentIndex, GridShape, Prior, RelativeConfiguration};
use crate::corpus::{CorpusConfig, CurveRecord, FragmentRef};
use crate::error::{Error, Result};
use crate::geometry::{Point2, Similarity2};

pub const MAGIC: &[u8; 5] = b"CSIX1";

/// Content checksum of one curve (id, image id and point coordinates).
pub fn curve_checksum(c: &CurveRecord) -> u64 {
    let mut h = Sha256::new();
    h.update(c.curve_id.to_le_bytes());
    h.update((c.image_id.len() as u64).to_le_bytes());
    h.update(c.image_id.as_bytes());
    for p in c.points() {
        h.update(p.x.to_bits().to_le_bytes());
        h.update(p.y.to_bits().to_le_bytes());
    }
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("sha256 digest has 32 bytes"))
}

pub fn write_snapshot<W: Write>(prior: &Prior, mut w: W) -> Result<()> {
    let idx = &prior.index;
    w.write_all(MAGIC)?;
    for v in [
        prior.corpus.min_fragment_points,
        prior.corpus.fragment_stride,
        prior.corpus.tangent_window,
    ] {
        w.write_u32::<LE>(u32_of(v)?)?;
    }
    let p = idx.params();
    for v in [p.d_log_r, p.d_phi, p.d_theta] {
        w.write_f64::<LE>(v)?;
    }
    let s = &idx.shape;
    for v in [s.n_log_r, s.n_phi, s.n_theta] {
        w.write_u32::<LE>(u32_of(v)?)?;
    }
    w.write_f64::<LE>(s.log_r_min)?;
    w.write_f64::<LE>(s.d_log_r)?;

    w.write_u64::<LE>(prior.curves.len() as u64)?;
    for c in &prior.curves {
        w.write_u64::<LE>(curve_checksum(c))?;
    }

    w.write_u64::<LE>(idx.len() as u64)?;
    for f in idx.fragments() {
        w.write_u32::<LE>(f.fragment.curve)?;
        w.write_u32::<LE>(f.fragment.start)?;
        w.write_u32::<LE>(f.fragment.end)?;
        w.write_f64::<LE>(f.config.p.x)?;
        w.write_f64::<LE>(f.config.p.y)?;
        w.write_f64::<LE>(f.config.theta)?;
        w.write_u8(f.config.reflected as u8)?;
        let t = &f.to_canonical;
        w.write_f64::<LE>(t.rotation)?;
        w.write_f64::<LE>(t.scale)?;
        w.write_f64::<LE>(t.translation.x)?;
        w.write_f64::<LE>(t.translation.y)?;
        w.write_u8(t.reflect as u8)?;
    }
    write_csr(&mut w, &idx.same_scale)?;
    write_csr(&mut w, &idx.scale_free)?;
    w.flush()?;
    Ok(())
}

fn u32_of(v: usize) -> Result<u32> {
    u32::try_from(v).map_err(|_| Error::Snapshot(format!("value {v} exceeds u32")))
}

fn write_csr<W: Write>(w: &mut W, csr: &Csr) -> Result<()> {
    for table in [&csr.offsets, &csr.entries] {
        w.write_u64::<LE>(table.len() as u64)?;
        for &v in table.iter() {
            w.write_u32::<LE>(v)?;
        }
    }
    Ok(())
}

fn read_u32s<R: Read>(r: &mut R, limit: usize) -> Result<Vec<u32>> {
    let n = r.read_u64::<LE>()? as usize;
    if n > limit {
        return Err(Error::Snapshot(format!("table length {n} exceeds {limit}")));
    }
    let mut v = vec![0u32; n];
    r.read_u32_into::<LE>(&mut v)?;
    Ok(v)
}

fn read_flag<R: Read>(r: &mut R) -> Result<bool> {
    match r.read_u8()? {
        0 => Ok(false),
        1 => Ok(true),
        b => Err(Error::Snapshot(format!("bad flag byte {b}"))),
    }
}

/// Reads a snapshot and attaches it to `curves`, which must be the corpus the
/// snapshot was built from.
pub fn read_snapshot<R: Read>(mut r: R, curves: Vec<CurveRecord>) -> Result<Prior> {
    let mut magic = [0u8; 5];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Snapshot(format!("bad magic {magic:?}")));
    }
    let corpus = CorpusConfig {
        min_fragment_points: r.read_u32::<LE>()? as usize,
        fragment_stride: r.read_u32::<LE>()? as usize,
        tangent_window: r.read_u32::<LE>()? as usize,
        ..CorpusConfig::default()
    };
    let params = BucketParams {
        d_log_r: r.read_f64::<LE>()?,
        d_phi: r.read_f64::<LE>()?,
        d_theta: r.read_f64::<LE>()?,
    };
    let shape = GridShape {
        n_log_r: r.read_u32::<LE>()? as usize,
        n_phi: r.read_u32::<LE>()? as usize,
        n_theta: r.read_u32::<LE>()? as usize,
        log_r_min: r.read_f64::<LE>()?,
        d_log_r: r.read_f64::<LE>()?,
    };
    let n_cells = shape
        .n_log_r
        .checked_mul(shape.n_phi)
        .and_then(|v| v.checked_mul(shape.n_theta))
        .filter(|&v| v > 0 && v <= super::MAX_CELLS)
        .ok_or_else(|| Error::Snapshot("grid shape out of range".into()))?;
    if !(shape.d_log_r > 0.0 && params.d_phi > 0.0 && params.d_theta > 0.0) {
        return Err(Error::Snapshot("non-positive cell size".into()));
    }

    let n_curves = r.read_u64::<LE>()? as usize;
    if n_curves != curves.len() {
        return Err(Error::ChecksumMismatch(format!(
            "snapshot has {n_curves} curves, corpus has {}",
            curves.len()
        )));
    }
    for (k, c) in curves.iter().enumerate() {
        let stored = r.read_u64::<LE>()?;
        if stored != curve_checksum(c) {
            return Err(Error::ChecksumMismatch(format!(
                "curve #{k} (id {}) differs from the indexed corpus",
                c.curve_id
            )));
        }
    }

    let n_frag = r.read_u64::<LE>()? as usize;
    if n_frag > u32::MAX as usize {
        return Err(Error::Snapshot("fragment count out of range".into()));
    }
    let mut fragments = Vec::with_capacity(n_frag.min(1 << 24));
    for _ in 0..n_frag {
        let fragment = FragmentRef {
            curve: r.read_u32::<LE>()?,
            start: r.read_u32::<LE>()?,
            end: r.read_u32::<LE>()?,
        };
        let valid = curves
            .get(fragment.curve as usize)
            .is_some_and(|c| fragment.start < fragment.end && (fragment.end as usize) < c.poly.len());
        if !valid {
            return Err(Error::Snapshot(format!("fragment {fragment:?} out of range")));
        }
        let config = RelativeConfiguration {
            p: Point2::new(r.read_f64::<LE>()?, r.read_f64::<LE>()?),
            theta: r.read_f64::<LE>()?,
            reflected: read_flag(&mut r)?,
        };
        let to_canonical = Similarity2 {
            rotation: r.read_f64::<LE>()?,
            scale: r.read_f64::<LE>()?,
            translation: Point2::new(r.read_f64::<LE>()?, r.read_f64::<LE>()?),
            reflect: read_flag(&mut r)?,
        };
        fragments.push(CanonicalFragment {
            fragment,
            config,
            to_canonical,
        });
    }
    let same_scale = Csr {
        offsets: read_u32s(&mut r, n_cells + 1)?,
        entries: read_u32s(&mut r, n_frag)?,
    };
    let scale_free = Csr {
        offsets: read_u32s(&mut r, shape.n_phi * shape.n_theta + 1)?,
        entries: read_u32s(&mut r, n_frag)?,
    };
    let index = FragmentIndex::from_parts(params, fragments, shape, same_scale, scale_free)?;
    Ok(Prior {
        curves,
        corpus,
        index,
        skipped: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{synth_corpus, SynthFamily};
    use crate::index::QueryTolerances;

    fn prior() -> Prior {
        let curves = synth_corpus(4, 25, SynthFamily::SmoothedRandomWalks);
        Prior::build(curves, CorpusConfig::default(), BucketParams::default()).unwrap()
    }

    #[test]
    fn round_trip_serves_identical_queries() {
        let p = prior();
        let mut buf = Vec::new();
        write_snapshot(&p, &mut buf).unwrap();
        assert_eq!(&buf[..5], MAGIC);
        let q = read_snapshot(buf.as_slice(), p.curves.clone()).unwrap();
        assert_eq!(q.index, p.index);
        let tol = QueryTolerances::default();
        for id in (0..p.index.len() as u32).step_by(97) {
            let c = p.index.fragment(id).config;
            assert_eq!(p.index.query_scale_invariant(&c, &tol), q.index.query_scale_invariant(&c, &tol));
            assert_eq!(p.index.query_same_scale(&c, &tol), q.index.query_same_scale(&c, &tol));
        }
    }

    #[test]
    fn mismatched_corpus_is_rejected() {
        let p = prior();
        let mut buf = Vec::new();
        write_snapshot(&p, &mut buf).unwrap();
        let mut other = p.curves.clone();
        let mut pts = other[3].points().to_vec();
        pts[1].x += 0.5;
        other[3].poly = crate::geometry::Polyline::new(pts).unwrap();
        assert!(matches!(read_snapshot(buf.as_slice(), other), Err(Error::ChecksumMismatch(_))));
        let fewer = p.curves[..10].to_vec();
        assert!(matches!(read_snapshot(buf.as_slice(), fewer), Err(Error::ChecksumMismatch(_))));
    }

    #[test]
    fn bad_magic_and_truncation() {
        let p = prior();
        let mut buf = Vec::new();
        write_snapshot(&p, &mut buf).unwrap();
        let mut bad = buf.clone();
        bad[4] = b'2';
        assert!(matches!(read_snapshot(bad.as_slice(), p.curves.clone()), Err(Error::Snapshot(_))));
        let cut = &buf[..buf.len() / 2];
        assert!(read_snapshot(cut, p.curves.clone()).is_err());
    }
}
