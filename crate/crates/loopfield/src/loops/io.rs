//! Loop configuration serialization.
//!
//! Two interchangeable on-disk forms: a self-describing JSON document and a
//! compact little-endian binary format. Both carry the loop polygons and the
//! claimed parent forest; loading rebuilds the forest from the polygons and
//! rejects files whose stored parents disagree, so corrupted or hand-edited
//! artifacts fail loudly instead of silently skewing statistics. Writers emit
//! canonical configurations, making artifacts byte-stable for fixed seeds.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{assemble, Loop, LoopConfiguration};
use crate::lattice::{GeometryKind, LatticeSpec};
use crate::{Error, Result};

const MAGIC: &[u8; 8] = b"LOOPSET\x01";
const NO_PARENT: u32 = u32::MAX;

/// On-disk encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Binary,
}

impl Format {
    pub fn from_extension(path: &Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => Format::Json,
            _ => Format::Binary,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct ConfigDto {
    spec: LatticeSpec,
    seed: u64,
    sweeps: u32,
    autocorr_time: Option<f64>,
    warnings: Vec<String>,
    dropped_exterior: u64,
    interface_edges: u64,
    loops: Vec<Vec<[i32; 2]>>,
    parent: Vec<Option<u32>>,
}

fn rebuild(dto: ConfigDto) -> Result<LoopConfiguration> {
    let loops = dto.loops.into_iter().map(|vertices| Loop { vertices }).collect();
    let cfg = assemble(
        dto.spec,
        dto.seed,
        dto.sweeps,
        dto.autocorr_time,
        dto.warnings,
        dto.dropped_exterior,
        dto.interface_edges,
        loops,
    )?;
    if cfg.parent != dto.parent {
        return Err(Error::Format(
            "stored parent forest disagrees with the loop polygons".into(),
        ));
    }
    Ok(cfg)
}

pub fn write_json<W: Write>(cfg: &LoopConfiguration, w: W) -> Result<()> {
    let dto = ConfigDto {
        spec: cfg.spec,
        seed: cfg.seed,
        sweeps: cfg.sweeps,
        autocorr_time: cfg.autocorr_time,
        warnings: cfg.warnings.clone(),
        dropped_exterior: cfg.dropped_exterior,
        interface_edges: cfg.interface_edges,
        loops: cfg.loops.iter().map(|l| l.vertices.clone()).collect(),
        parent: cfg.parent.clone(),
    };
    serde_json::to_writer(w, &dto).map_err(|e| Error::Format(e.to_string()))
}

pub fn read_json<R: Read>(r: R) -> Result<LoopConfiguration> {
    let dto: ConfigDto = serde_json::from_reader(r).map_err(|e| Error::Format(e.to_string()))?;
    rebuild(dto)
}

fn put_u32(w: &mut impl Write, v: u32) -> Result<()> {
    Ok(w.write_all(&v.to_le_bytes())?)
}

fn put_u64(w: &mut impl Write, v: u64) -> Result<()> {
    Ok(w.write_all(&v.to_le_bytes())?)
}

fn put_f64(w: &mut impl Write, v: f64) -> Result<()> {
    Ok(w.write_all(&v.to_le_bytes())?)
}

fn get_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn get_u64(r: &mut impl Read) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn get_f64(r: &mut impl Read) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

pub fn write_binary<W: Write>(cfg: &LoopConfiguration, mut w: W) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&[match cfg.spec.geometry {
        GeometryKind::TriangularSite => 0u8,
        GeometryKind::SquareFk => 1u8,
    }])?;
    put_u32(&mut w, cfg.spec.radius)?;
    put_u32(&mut w, cfg.spec.q)?;
    put_f64(&mut w, cfg.spec.p)?;
    put_u64(&mut w, cfg.seed)?;
    put_u32(&mut w, cfg.sweeps)?;
    put_u64(&mut w, cfg.dropped_exterior)?;
    put_u64(&mut w, cfg.interface_edges)?;
    put_f64(&mut w, cfg.autocorr_time.unwrap_or(f64::NAN))?;
    put_u32(&mut w, cfg.warnings.len() as u32)?;
    for warn in &cfg.warnings {
        let bytes = warn.as_bytes();
        put_u32(&mut w, bytes.len() as u32)?;
        w.write_all(bytes)?;
    }
    put_u32(&mut w, cfg.loops.len() as u32)?;
    for lp in &cfg.loops {
        put_u32(&mut w, lp.vertices.len() as u32)?;
        for v in &lp.vertices {
            w.write_all(&v[0].to_le_bytes())?;
            w.write_all(&v[1].to_le_bytes())?;
        }
    }
    for &p in &cfg.parent {
        put_u32(&mut w, p.unwrap_or(NO_PARENT))?;
    }
    Ok(())
}

pub fn read_binary<R: Read>(mut r: R) -> Result<LoopConfiguration> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("not a loop configuration file".into()));
    }
    let mut geom = [0u8; 1];
    r.read_exact(&mut geom)?;
    let geometry = match geom[0] {
        0 => GeometryKind::TriangularSite,
        1 => GeometryKind::SquareFk,
        g => return Err(Error::Format(format!("unknown geometry tag {g}"))),
    };
    let radius = get_u32(&mut r)?;
    let q = get_u32(&mut r)?;
    let p = get_f64(&mut r)?;
    let spec = LatticeSpec { geometry, radius, p, q };
    let seed = get_u64(&mut r)?;
    let sweeps = get_u32(&mut r)?;
    let dropped = get_u64(&mut r)?;
    let edges = get_u64(&mut r)?;
    let autocorr = get_f64(&mut r)?;
    let n_warn = get_u32(&mut r)? as usize;
    let mut warnings = Vec::with_capacity(n_warn.min(64));
    for _ in 0..n_warn {
        let len = get_u32(&mut r)? as usize;
        if len > 1 << 20 {
            return Err(Error::Format("oversized warning string".into()));
        }
        let mut buf = vec![0u8; len];
        r.read_exact(&mut buf)?;
        warnings.push(String::from_utf8(buf).map_err(|e| Error::Format(e.to_string()))?);
    }
    let n_loops = get_u32(&mut r)? as usize;
    let mut loops = Vec::with_capacity(n_loops.min(1 << 24));
    for _ in 0..n_loops {
        let n_verts = get_u32(&mut r)? as usize;
        if n_verts > 1 << 28 {
            return Err(Error::Format("oversized loop".into()));
        }
        let mut buf = vec![0u8; n_verts * 8];
        r.read_exact(&mut buf)?;
        let vertices = buf
            .chunks_exact(8)
            .map(|c| {
                [
                    i32::from_le_bytes([c[0], c[1], c[2], c[3]]),
                    i32::from_le_bytes([c[4], c[5], c[6], c[7]]),
                ]
            })
            .collect();
        loops.push(Loop { vertices });
    }
    let mut parent = Vec::with_capacity(n_loops);
    for _ in 0..n_loops {
        let p = get_u32(&mut r)?;
        parent.push((p != NO_PARENT).then_some(p));
    }
    let cfg = assemble(
        spec,
        seed,
        sweeps,
        (!autocorr.is_nan()).then_some(autocorr),
        warnings,
        dropped,
        edges,
        loops,
    )?;
    if cfg.parent != parent {
        return Err(Error::Format(
            "stored parent forest disagrees with the loop polygons".into(),
        ));
    }
    Ok(cfg)
}

pub fn save(cfg: &LoopConfiguration, path: &Path, format: Format) -> Result<()> {
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    match format {
        Format::Json => write_json(cfg, &mut w)?,
        Format::Binary => write_binary(cfg, &mut w)?,
    }
    w.flush()?;
    Ok(())
}

/// Load a configuration, sniffing the format from the leading bytes.
pub fn load(path: &Path) -> Result<LoopConfiguration> {
    let mut reader = BufReader::new(File::open(path)?);
    let mut bytes = Vec::new();
    reader.read_to_end(&mut bytes)?;
    if bytes.starts_with(MAGIC) {
        read_binary(&bytes[..])
    } else {
        read_json(&bytes[..])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{sample_loops, LatticeSpec};

    fn sample_small() -> LoopConfiguration {
        let spec = LatticeSpec::critical_percolation(10).unwrap();
        sample_loops(&spec, 12, None).unwrap()
    }

    #[test]
    fn binary_roundtrip_preserves_everything() {
        let cfg = sample_small();
        let mut buf = Vec::new();
        write_binary(&cfg, &mut buf).unwrap();
        let back = read_binary(&buf[..]).unwrap();
        assert_eq!(back.loops, cfg.loops);
        assert_eq!(back.parent, cfg.parent);
        assert_eq!(back.depth, cfg.depth);
        assert_eq!(back.seed, cfg.seed);
        assert_eq!(back.interface_edges, cfg.interface_edges);
    }

    #[test]
    fn json_roundtrip_preserves_everything() {
        let cfg = sample_small();
        let mut buf = Vec::new();
        write_json(&cfg, &mut buf).unwrap();
        let back = read_json(&buf[..]).unwrap();
        assert_eq!(back.loops, cfg.loops);
        assert_eq!(back.parent, cfg.parent);
    }

    #[test]
    fn serialization_is_byte_stable() {
        let a = sample_small();
        let b = sample_small();
        let (mut ba, mut bb) = (Vec::new(), Vec::new());
        write_binary(&a, &mut ba).unwrap();
        write_binary(&b, &mut bb).unwrap();
        assert_eq!(ba, bb);
        let (mut ja, mut jb) = (Vec::new(), Vec::new());
        write_json(&a, &mut ja).unwrap();
        write_json(&b, &mut jb).unwrap();
        assert_eq!(ja, jb);
    }

    #[test]
    fn tampered_parent_is_rejected() {
        let cfg = sample_small();
        let mut buf = Vec::new();
        write_json(&cfg, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        // Flip the first stored parent entry to a bogus value.
        let tampered = text.replacen("\"parent\":[null", "\"parent\":[0", 1);
        if tampered != text {
            assert!(read_json(tampered.as_bytes()).is_err());
        }
    }
}
