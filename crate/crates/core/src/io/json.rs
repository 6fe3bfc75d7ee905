use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{ExtendedScores, GridDims, Position, TokenGrid};
use crate::scalar::Scalar;

use super::binary::FORMAT_VERSION;
use super::{narrow, widen};

/// JSON mirror of a token dump. Arrays carry 32-bit floats.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JsonDump {
    pub format: String,
    pub version: u32,
    pub n_tokens: usize,
    pub key_dim: usize,
    /// `[height, width]` per sub-image.
    pub grid_dims: Vec<[u32; 2]>,
    pub scores: Vec<f32>,
    /// `[row, col]` per token.
    pub positions: Vec<[i64; 2]>,
    pub subimage_ids: Vec<i64>,
    /// One key vector per token.
    pub keys: Vec<Vec<f32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extended: Option<JsonExtended>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JsonExtended {
    pub cross_attention: Vec<f32>,
    pub self_attention: Vec<f32>,
}

impl JsonDump {
    pub fn from_grid<T: Scalar>(grid: &TokenGrid<T>) -> Result<Self> {
        let keys = narrow("keys", grid.keys())?;
        Ok(Self {
            format: "ATPK".to_owned(),
            version: FORMAT_VERSION,
            n_tokens: grid.n_tokens(),
            key_dim: grid.key_dim(),
            grid_dims: grid
                .grid_dims()
                .iter()
                .map(|d| [d.height, d.width])
                .collect(),
            scores: narrow("scores", grid.scores())?,
            positions: grid
                .positions()
                .iter()
                .map(|p| [i64::from(p.row), i64::from(p.col)])
                .collect(),
            subimage_ids: grid.subimage_ids().iter().map(|&s| i64::from(s)).collect(),
            keys: keys.chunks(grid.key_dim()).map(<[f32]>::to_vec).collect(),
            extended: match grid.extended() {
                Some(e) => Some(JsonExtended {
                    cross_attention: narrow("extended", &e.cross_attention)?,
                    self_attention: narrow("extended", &e.self_attention)?,
                }),
                None => None,
            },
        })
    }

    pub fn into_grid<T: Scalar>(self) -> Result<TokenGrid<T>> {
        if self.format != "ATPK" {
            return Err(Error::format(format!(
                "format tag {:?}, expected \"ATPK\"",
                self.format
            )));
        }
        if self.version != FORMAT_VERSION {
            return Err(Error::format(format!(
                "unsupported version {}, expected {FORMAT_VERSION}",
                self.version
            )));
        }
        let n = self.n_tokens;
        for (name, len) in [
            ("scores", self.scores.len()),
            ("positions", self.positions.len()),
            ("subimage_ids", self.subimage_ids.len()),
            ("keys", self.keys.len()),
        ] {
            if len != n {
                return Err(Error::validation(
                    name,
                    format!("{len} entries but n_tokens is {n}"),
                ));
            }
        }
        if let Some(i) = self.keys.iter().position(|k| k.len() != self.key_dim) {
            return Err(Error::validation(
                "keys",
                format!(
                    "token {i} has {} entries, key_dim is {}",
                    self.keys[i].len(),
                    self.key_dim
                ),
            ));
        }
        let to_u32 = |field: &'static str, i: usize, v: i64| {
            u32::try_from(v).map_err(|_| {
                Error::validation(field, format!("token {i} has out-of-range value {v}"))
            })
        };
        let positions = self
            .positions
            .iter()
            .enumerate()
            .map(|(i, &[r, c])| {
                Ok(Position::new(
                    to_u32("positions", i, r)?,
                    to_u32("positions", i, c)?,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        let subimage_ids = self
            .subimage_ids
            .iter()
            .enumerate()
            .map(|(i, &s)| to_u32("subimage_ids", i, s))
            .collect::<Result<Vec<_>>>()?;
        let keys: Vec<f32> = self.keys.concat();
        let grid = TokenGrid::new(
            widen(&self.scores),
            positions,
            widen(&keys),
            self.key_dim,
            subimage_ids,
            self.grid_dims
                .iter()
                .map(|&[h, w]| GridDims::new(h, w))
                .collect(),
        )?;
        match self.extended {
            Some(e) => grid.with_extended(ExtendedScores {
                cross_attention: widen(&e.cross_attention),
                self_attention: widen(&e.self_attention),
            }),
            None => Ok(grid),
        }
    }
}

pub fn encode_json<T: Scalar>(grid: &TokenGrid<T>) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec(&JsonDump::from_grid(grid)?)
        .map_err(|e| Error::format(e.to_string()))?;
    bytes.push(b'\n');
    Ok(bytes)
}

pub fn decode_json<T: Scalar>(bytes: &[u8]) -> Result<TokenGrid<T>> {
    let dump: JsonDump = serde_json::from_slice(bytes).map_err(|e| Error::format(e.to_string()))?;
    dump.into_grid()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shortest_f32_text_round_trips() {
        let g = TokenGrid::raster(
            1,
            2,
            vec![0.1f64 as f32 as f64, 0.7f32 as f64],
            vec![0.3f32 as f64, -2.5],
            1,
        )
        .unwrap();
        let bytes = encode_json(&g).unwrap();
        let text = std::str::from_utf8(&bytes).unwrap();
        assert!(text.contains("\"scores\":[0.1,0.7]"), "{text}");
        assert_eq!(decode_json::<f64>(&bytes).unwrap(), g);
    }

    #[test]
    fn rejects_wrong_tag_and_negative_score() {
        let g = TokenGrid::raster(1, 1, vec![1.0f64], vec![1.0], 1).unwrap();
        let mut dump = JsonDump::from_grid(&g).unwrap();
        dump.version = 2;
        assert!(matches!(
            dump.clone().into_grid::<f64>(),
            Err(Error::Format(_))
        ));
        dump.version = 1;
        dump.scores[0] = -1.0;
        assert!(matches!(
            dump.into_grid::<f64>(),
            Err(Error::Validation {
                field: "scores",
                ..
            })
        ));
        assert!(matches!(
            decode_json::<f64>(b"{\"format\":"),
            Err(Error::Format(_))
        ));
    }
}
