//! Versioned binary parameter checkpoints.
//!
//! Layout: magic `EIGN`, format version (u32 LE), config hash (u64 LE),
//! scalar count (u64 LE), then the flat parameter array as little-endian f64
//! in schema order. Round-trips are bit-exact.

use std::io::{Read, Write};
use std::path::Path;

use super::params::{params_from_flat, Params};
use super::ModelConfig;
use crate::{Error, Result};

const MAGIC: &[u8; 4] = b"EIGN";
const VERSION: u32 = 1;

/// FNV-1a over the canonical JSON encoding of the config.
pub fn config_hash(cfg: &ModelConfig) -> u64 {
    let json = serde_json::to_string(cfg).expect("config serializes");
    let mut hash: u64 = 0xcbf29ce484222325;
    for b in json.as_bytes() {
        hash ^= *b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

pub fn save_params(path: &Path, cfg: &ModelConfig, params: &Params) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(MAGIC)?;
    f.write_all(&VERSION.to_le_bytes())?;
    f.write_all(&config_hash(cfg).to_le_bytes())?;
    let count: u64 = params.scalar_count() as u64;
    f.write_all(&count.to_le_bytes())?;
    for (_, t) in params.entries() {
        for v in &t.data {
            f.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn load_params(path: &Path, cfg: &ModelConfig) -> Result<Params> {
    let mut f = std::fs::File::open(path)?;
    let mut magic = [0u8; 4];
    f.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Checkpoint("bad magic".into()));
    }
    let mut b4 = [0u8; 4];
    f.read_exact(&mut b4)?;
    let version = u32::from_le_bytes(b4);
    if version != VERSION {
        return Err(Error::Checkpoint(format!(
            "unsupported version {}",
            version
        )));
    }
    let mut b8 = [0u8; 8];
    f.read_exact(&mut b8)?;
    let hash = u64::from_le_bytes(b8);
    if hash != config_hash(cfg) {
        return Err(Error::Checkpoint(
            "checkpoint was written for a different config".into(),
        ));
    }
    f.read_exact(&mut b8)?;
    let count = u64::from_le_bytes(b8) as usize;
    let mut flat = Vec::with_capacity(count);
    for _ in 0..count {
        f.read_exact(&mut b8)?;
        flat.push(f64::from_le_bytes(b8));
    }
    params_from_flat(cfg, &flat)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{init_params, Architecture};

    #[test]
    fn roundtrip_is_bit_exact() {
        let dir = std::env::temp_dir().join(format!("eign-ckpt-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("model.ckpt");
        let cfg = ModelConfig::new(Architecture::Eign, 2, 8).with_dims(1, 2, 1, 1);
        let params = init_params(&cfg, 17).unwrap();
        save_params(&path, &cfg, &params).unwrap();
        let loaded = load_params(&path, &cfg).unwrap();
        for ((n1, t1), (n2, t2)) in params.entries().iter().zip(loaded.entries()) {
            assert_eq!(n1, n2);
            for (a, b) in t1.data.iter().zip(&t2.data) {
                assert_eq!(a.to_bits(), b.to_bits());
            }
        }
        // a different config is rejected
        let other = ModelConfig::new(Architecture::Eign, 3, 8).with_dims(1, 2, 1, 1);
        assert!(load_params(&path, &other).is_err());
        std::fs::remove_dir_all(&dir).ok();
    }
}
