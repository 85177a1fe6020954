//! Field snapshots.
//!
//! Binary layout, all integers and floats little-endian:
//!
//! | bytes | content |
//! |-------|---------|
//! | 4 | magic `G2FS` |
//! | 4 | format version (u32, currently 1) |
//! | 4 | points per dimension n (u32) |
//! | 1 | active-dimension bit mask, bit d for dimension d |
//! | 1 | shape tag: 0 scalar, 1 form, 2 tensor, 3 form gradient |
//! | 1 | shape parameter (degree or rank) |
//! | 1 | reserved, zero |
//! | 4 | component count (u32) |
//! | 8 | point count (u64) |
//! | 8·count | values as f64, component-major (`c * npts + p`) |

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{Field, GridSpec, Shape};
use crate::error::{G2Error, Result};

pub const SNAPSHOT_VERSION: u32 = 1;
const MAGIC: &[u8; 4] = b"G2FS";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SnapshotFormat {
    Binary,
    Json,
}

#[derive(Serialize, Deserialize)]
struct JsonSnapshot {
    version: u32,
    grid: GridSpec,
    shape: Shape,
    components: usize,
    data: Vec<f64>,
}

fn io_err(e: std::io::Error) -> G2Error {
    G2Error::Config(format!("snapshot i/o: {e}"))
}

fn shape_tag(s: Shape) -> (u8, u8) {
    match s {
        Shape::Scalar => (0, 0),
        Shape::Form(k) => (1, k as u8),
        Shape::Tensor(r) => (2, r as u8),
        Shape::FormGrad(k) => (3, k as u8),
    }
}

fn shape_from_tag(tag: u8, param: u8) -> Result<Shape> {
    let p = param as usize;
    match tag {
        0 => Ok(Shape::Scalar),
        1 if p <= 7 => Ok(Shape::Form(p)),
        2 if p <= 4 => Ok(Shape::Tensor(p)),
        3 if p <= 7 => Ok(Shape::FormGrad(p)),
        _ => Err(G2Error::Config(format!("unknown shape tag {tag}/{param}"))),
    }
}

pub fn write_snapshot(f: &Field, format: SnapshotFormat, w: &mut impl Write) -> Result<()> {
    match format {
        SnapshotFormat::Json => {
            let s = JsonSnapshot {
                version: SNAPSHOT_VERSION,
                grid: *f.grid(),
                shape: f.shape(),
                components: f.ncomp(),
                data: f.data().to_vec(),
            };
            serde_json::to_writer(w, &s).map_err(|e| G2Error::Config(e.to_string()))
        }
        SnapshotFormat::Binary => {
            let grid = f.grid();
            let mask = (0..7).fold(0u8, |m, d| if grid.active[d] { m | (1 << d) } else { m });
            let (tag, param) = shape_tag(f.shape());
            let mut buf = Vec::with_capacity(32 + 8 * f.data().len());
            buf.extend_from_slice(MAGIC);
            buf.extend_from_slice(&SNAPSHOT_VERSION.to_le_bytes());
            buf.extend_from_slice(&(grid.n as u32).to_le_bytes());
            buf.extend_from_slice(&[mask, tag, param, 0]);
            buf.extend_from_slice(&(f.ncomp() as u32).to_le_bytes());
            buf.extend_from_slice(&(f.npts() as u64).to_le_bytes());
            for x in f.data() {
                buf.extend_from_slice(&x.to_le_bytes());
            }
            w.write_all(&buf).map_err(io_err)
        }
    }
}

pub fn read_snapshot(format: SnapshotFormat, r: &mut impl Read) -> Result<Field> {
    match format {
        SnapshotFormat::Json => {
            let s: JsonSnapshot = serde_json::from_reader(r).map_err(|e| G2Error::Config(e.to_string()))?;
            if s.version != SNAPSHOT_VERSION {
                return Err(G2Error::Config(format!("unsupported snapshot version {}", s.version)));
            }
            Field::from_data(s.grid, s.shape, s.data)
        }
        SnapshotFormat::Binary => {
            let mut head = [0u8; 28];
            r.read_exact(&mut head).map_err(io_err)?;
            if &head[0..4] != MAGIC {
                return Err(G2Error::Config("not a field snapshot".into()));
            }
            let u32_at = |i: usize| u32::from_le_bytes(head[i..i + 4].try_into().unwrap());
            let version = u32_at(4);
            if version != SNAPSHOT_VERSION {
                return Err(G2Error::Config(format!("unsupported snapshot version {version}")));
            }
            let n = u32_at(8) as usize;
            let mask = head[12];
            let shape = shape_from_tag(head[13], head[14])?;
            let dims: Vec<usize> = (0..7).filter(|d| mask & (1 << d) != 0).collect();
            let grid = GridSpec::new(n, &dims)?;
            let ncomp = u32_at(16) as usize;
            let npts = u64::from_le_bytes(head[20..28].try_into().unwrap()) as usize;
            if ncomp != shape.ncomp() || npts != grid.npts() {
                return Err(G2Error::Shape("snapshot header is inconsistent".into()));
            }
            let mut raw = vec![0u8; 8 * ncomp * npts];
            r.read_exact(&mut raw).map_err(io_err)?;
            let data = raw
                .chunks_exact(8)
                .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
                .collect();
            Field::from_data(grid, shape, data)
        }
    }
}
