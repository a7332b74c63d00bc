//! Binary field snapshots.
//!
//! Layout, all little-endian:
//!
//! | offset | size | content                    |
//! |--------|------|----------------------------|
//! | 0      | 4    | magic `KSE2`               |
//! | 4      | 4    | version (u32, currently 1) |
//! | 8      | 4    | n (u32)                    |
//! | 12     | 8    | L (f64)                    |
//! | 20     | 8    | t (f64)                    |
//! | 28     | 4    | field count (u32)          |
//! | 32     | 32   | reserved, zero             |
//!
//! followed by one block per field: a 32-byte NUL-padded name and `n·n`
//! f64 samples in row-major order (x2 fastest).

use std::fs;
use std::path::Path;

use crate::error::{KseError, Result};
use crate::model::State;
use crate::spectral::{Grid, ScalarField};

pub const MAGIC: &[u8; 4] = b"KSE2";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 64;
pub const NAME_LEN: usize = 32;

/// Field names written for a [`State`], in order.
pub const STATE_FIELDS: [&str; 3] = ["rho", "c", "omega"];

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub n: usize,
    pub length: f64,
    pub t: f64,
    pub fields: Vec<(String, Vec<f64>)>,
}

impl Snapshot {
    pub fn from_state(state: &State) -> Self {
        let grid = state.grid();
        Snapshot {
            n: grid.n(),
            length: grid.length(),
            t: state.t,
            fields: STATE_FIELDS
                .iter()
                .zip(state.fields())
                .map(|(name, f)| (name.to_string(), f.values().to_vec()))
                .collect(),
        }
    }

    pub fn field(&self, name: &str) -> Option<&[f64]> {
        self.fields
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_slice())
    }

    pub fn to_state(&self) -> Result<State> {
        let grid = Grid::new(self.n, self.length)?;
        let get = |name: &str| -> Result<ScalarField> {
            let v = self.field(name).ok_or_else(|| KseError::InitialData(format!(
                "snapshot has no field '{name}'"
            )))?;
            ScalarField::from_values(&grid, v.to_vec())
        };
        State::new(self.t, get("rho")?, get("c")?, get("omega")?)
    }

    pub fn encode(&self) -> Vec<u8> {
        let nn = self.n * self.n;
        let mut out = Vec::with_capacity(HEADER_LEN + self.fields.len() * (NAME_LEN + 8 * nn));
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(self.n as u32).to_le_bytes());
        out.extend_from_slice(&self.length.to_le_bytes());
        out.extend_from_slice(&self.t.to_le_bytes());
        out.extend_from_slice(&(self.fields.len() as u32).to_le_bytes());
        out.resize(HEADER_LEN, 0);
        for (name, values) in &self.fields {
            let mut block = [0u8; NAME_LEN];
            let bytes = name.as_bytes();
            block[..bytes.len().min(NAME_LEN)].copy_from_slice(&bytes[..bytes.len().min(NAME_LEN)]);
            out.extend_from_slice(&block);
            for v in values {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> std::result::Result<Self, String> {
        if bytes.len() < HEADER_LEN {
            return Err(format!("file is {} bytes, shorter than the header", bytes.len()));
        }
        if &bytes[0..4] != MAGIC {
            return Err("bad magic".into());
        }
        let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
        let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
        let version = u32_at(4);
        if version != VERSION {
            return Err(format!("unsupported version {version}"));
        }
        let n = u32_at(8) as usize;
        let length = f64_at(12);
        let t = f64_at(20);
        let count = u32_at(28) as usize;
        if bytes[32..HEADER_LEN].iter().any(|&b| b != 0) {
            return Err("reserved header bytes are not zero".into());
        }
        let nn = n
            .checked_mul(n)
            .ok_or_else(|| format!("grid size {n} overflows"))?;
        let block = NAME_LEN + 8 * nn;
        let expected = count
            .checked_mul(block)
            .and_then(|b| b.checked_add(HEADER_LEN))
            .ok_or_else(|| "field count overflows".to_string())?;
        if bytes.len() != expected {
            return Err(format!("expected {expected} bytes, found {}", bytes.len()));
        }
        let mut fields = Vec::with_capacity(count);
        for b in 0..count {
            let start = HEADER_LEN + b * block;
            let raw = &bytes[start..start + NAME_LEN];
            let end = raw.iter().position(|&c| c == 0).unwrap_or(NAME_LEN);
            let name = std::str::from_utf8(&raw[..end])
                .map_err(|_| format!("field {b} name is not UTF-8"))?
                .to_string();
            let values = bytes[start + NAME_LEN..start + block]
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect();
            fields.push((name, values));
        }
        Ok(Snapshot {
            n,
            length,
            t,
            fields,
        })
    }
}

pub fn write_snapshot(path: &Path, state: &State) -> Result<()> {
    fs::write(path, Snapshot::from_state(state).encode()).map_err(|e| KseError::io(path, e))
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot> {
    let bytes = fs::read(path).map_err(|e| KseError::io(path, e))?;
    Snapshot::decode(&bytes).map_err(|reason| KseError::Snapshot {
        path: path.to_path_buf(),
        reason,
    })
}

pub fn read_state(path: &Path) -> Result<State> {
    read_snapshot(path)?.to_state()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> State {
        let grid = Grid::new(8, 3.5).unwrap();
        State::new(
            0.125,
            ScalarField::from_fn(&grid, |x1, x2| 1.0 + 0.1 * (x1 - x2).sin()),
            ScalarField::from_fn(&grid, |x1, _| x1 / 3.0),
            ScalarField::from_fn(&grid, |_, x2| x2.cos() * 1e-300),
        )
        .unwrap()
    }

    #[test]
    fn header_layout() {
        let bytes = Snapshot::from_state(&sample()).encode();
        assert_eq!(&bytes[..4], b"KSE2");
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 8);
        assert_eq!(f64::from_le_bytes(bytes[12..20].try_into().unwrap()), 3.5);
        assert_eq!(f64::from_le_bytes(bytes[20..28].try_into().unwrap()), 0.125);
        assert_eq!(u32::from_le_bytes(bytes[28..32].try_into().unwrap()), 3);
        assert_eq!(bytes.len(), 64 + 3 * (32 + 8 * 64));
        assert_eq!(&bytes[64..67], b"rho");
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let s = sample();
        let bytes = Snapshot::from_state(&s).encode();
        let back = Snapshot::decode(&bytes).unwrap().to_state().unwrap();
        assert_eq!(back, s);
        assert_eq!(Snapshot::from_state(&back).encode(), bytes);
    }

    #[test]
    fn corrupt_input_rejected() {
        let bytes = Snapshot::from_state(&sample()).encode();
        assert!(Snapshot::decode(&bytes[..100]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(Snapshot::decode(&bad).is_err());
        let mut bad = bytes;
        bad[40] = 1;
        assert!(Snapshot::decode(&bad).is_err());
    }
}
