use crate::error::{Error, Result};
use crate::grid::{ExtendedScores, GridDims, Position, TokenGrid};
use crate::scalar::Scalar;

use super::{narrow, widen};

pub const MAGIC: [u8; 4] = *b"ATPK";
pub const FORMAT_VERSION: u32 = 1;
/// Flag bit 0: cross/self attention scores follow the keys.
pub const FLAG_EXTENDED: u32 = 1;

pub fn encode_binary<T: Scalar>(grid: &TokenGrid<T>) -> Result<Vec<u8>> {
    let n = grid.n_tokens();
    let to_u32 = |field: &'static str, v: usize| {
        u32::try_from(v)
            .map_err(|_| Error::validation(field, format!("{v} does not fit in 32 bits")))
    };
    let to_i32 = |field: &'static str, v: u32| {
        i32::try_from(v).map_err(|_| {
            Error::validation(field, format!("{v} does not fit in a signed 32-bit int"))
        })
    };

    let mut out = Vec::with_capacity(24 + 8 * grid.n_subimages() + n * (16 + 4 * grid.key_dim()));
    out.extend_from_slice(&MAGIC);
    for v in [
        FORMAT_VERSION,
        to_u32("n_tokens", n)?,
        to_u32("keys", grid.key_dim())?,
        to_u32("grid_dims", grid.n_subimages())?,
    ] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for d in grid.grid_dims() {
        out.extend_from_slice(&d.height.to_le_bytes());
        out.extend_from_slice(&d.width.to_le_bytes());
    }
    let flags = if grid.extended().is_some() {
        FLAG_EXTENDED
    } else {
        0
    };
    out.extend_from_slice(&flags.to_le_bytes());

    let put_f32 = |out: &mut Vec<u8>, v: Vec<f32>| {
        v.iter()
            .for_each(|x| out.extend_from_slice(&x.to_le_bytes()))
    };
    put_f32(&mut out, narrow("scores", grid.scores())?);
    for p in grid.positions() {
        out.extend_from_slice(&to_i32("positions", p.row)?.to_le_bytes());
        out.extend_from_slice(&to_i32("positions", p.col)?.to_le_bytes());
    }
    for &s in grid.subimage_ids() {
        out.extend_from_slice(&to_i32("subimage_ids", s)?.to_le_bytes());
    }
    put_f32(&mut out, narrow("keys", grid.keys())?);
    if let Some(ext) = grid.extended() {
        put_f32(&mut out, narrow("extended", &ext.cross_attention)?);
        put_f32(&mut out, narrow("extended", &ext.self_attention)?);
    }
    Ok(out)
}

struct Reader<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, len: usize, what: &str) -> Result<&'a [u8]> {
        let end = self
            .at
            .checked_add(len)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| {
                Error::format(format!(
                    "truncated while reading {what}: need {len} bytes at offset {}, file has {}",
                    self.at,
                    self.bytes.len()
                ))
            })?;
        let s = &self.bytes[self.at..end];
        self.at = end;
        Ok(s)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(
            self.take(4, what)?.try_into().expect("4 bytes"),
        ))
    }

    fn f32s(&mut self, count: usize, what: &str) -> Result<Vec<f32>> {
        Ok(self
            .take(count * 4, what)?
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
            .collect())
    }

    fn i32s(&mut self, count: usize, what: &str) -> Result<Vec<i32>> {
        Ok(self
            .take(count * 4, what)?
            .chunks_exact(4)
            .map(|c| i32::from_le_bytes(c.try_into().expect("4 bytes")))
            .collect())
    }
}

pub fn decode_binary<T: Scalar>(bytes: &[u8]) -> Result<TokenGrid<T>> {
    let mut r = Reader { bytes, at: 0 };
    let magic = r.take(4, "magic")?;
    if magic != MAGIC {
        return Err(Error::format(format!(
            "bad magic {magic:02x?}, expected \"ATPK\""
        )));
    }
    let version = r.u32("version")?;
    if version != FORMAT_VERSION {
        return Err(Error::format(format!(
            "unsupported version {version}, expected {FORMAT_VERSION}"
        )));
    }
    let n = r.u32("n_tokens")? as usize;
    let key_dim = r.u32("key_dim")? as usize;
    let n_sub = r.u32("n_subimages")? as usize;
    // bound the dims table by the bytes actually present before allocating
    let dims_raw = r.take(
        n_sub
            .checked_mul(8)
            .ok_or_else(|| Error::format("n_subimages overflows"))?,
        "grid_dims",
    )?;
    let grid_dims: Vec<GridDims> = dims_raw
        .chunks_exact(8)
        .map(|c| {
            GridDims::new(
                u32::from_le_bytes(c[..4].try_into().expect("4 bytes")),
                u32::from_le_bytes(c[4..].try_into().expect("4 bytes")),
            )
        })
        .collect();
    let flags = r.u32("flags")?;
    if flags & !FLAG_EXTENDED != 0 {
        return Err(Error::format(format!("unknown flag bits {flags:#x}")));
    }
    let extended = flags & FLAG_EXTENDED != 0;

    let per_token = 4u64 + 8 + 4 + 4 * key_dim as u64 + if extended { 8 } else { 0 };
    let expected = (n as u64)
        .checked_mul(per_token)
        .ok_or_else(|| Error::format("declared sizes overflow"))?;
    let remaining = (bytes.len() - r.at) as u64;
    if remaining != expected {
        return Err(Error::format(format!(
            "payload is {remaining} bytes but the header declares {expected} ({n} tokens, key_dim {key_dim})"
        )));
    }

    let scores = r.f32s(n, "scores")?;
    let raw_positions = r.i32s(2 * n, "positions")?;
    let raw_subimages = r.i32s(n, "subimage_ids")?;
    let keys = r.f32s(n * key_dim, "keys")?;
    let ext = if extended {
        let cross = r.f32s(n, "extended")?;
        let selfa = r.f32s(n, "extended")?;
        Some(ExtendedScores {
            cross_attention: widen(&cross),
            self_attention: widen(&selfa),
        })
    } else {
        None
    };

    let positions = raw_positions
        .chunks_exact(2)
        .enumerate()
        .map(
            |(i, rc)| match (u32::try_from(rc[0]), u32::try_from(rc[1])) {
                (Ok(row), Ok(col)) => Ok(Position::new(row, col)),
                _ => Err(Error::validation(
                    "positions",
                    format!("token {i} has negative coordinates ({}, {})", rc[0], rc[1]),
                )),
            },
        )
        .collect::<Result<Vec<_>>>()?;
    let subimage_ids = raw_subimages
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            u32::try_from(s).map_err(|_| {
                Error::validation("subimage_ids", format!("token {i} has negative id {s}"))
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let grid = TokenGrid::new(
        widen(&scores),
        positions,
        widen(&keys),
        key_dim,
        subimage_ids,
        grid_dims,
    )?;
    match ext {
        Some(e) => grid.with_extended(e),
        None => Ok(grid),
    }
}
