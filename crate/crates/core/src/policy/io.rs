//! Versioned flat policy file.
//!
//! Layout: the 8-byte magic `HCPOLICY`, a little-endian `u32` version, a
//! little-endian `u32` header length, the header as UTF-8 JSON (shapes,
//! normalization, arbitrary provenance), then every weight as a
//! little-endian `f64` in [`Policy::params`] order.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::mlp::{Activation, Mlp};
use super::{Normalization, Policy, PolicyDims};
use crate::error::PolicyError;

pub const MAGIC: &[u8; 8] = b"HCPOLICY";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyHeader {
    pub dims: PolicyDims,
    pub tactile_sizes: Vec<usize>,
    pub proprio_sizes: Vec<usize>,
    pub decoder_sizes: Vec<usize>,
    pub norm: Normalization,
    pub param_count: usize,
    /// Resolved configuration the policy was trained with.
    #[serde(default)]
    pub config: serde_json::Value,
}

pub fn write_policy<W: Write>(w: &mut W, policy: &Policy, config: &serde_json::Value) -> Result<(), PolicyError> {
    policy.validate()?;
    let header = PolicyHeader {
        dims: policy.dims,
        tactile_sizes: policy.tactile.sizes(),
        proprio_sizes: policy.proprio.sizes(),
        decoder_sizes: policy.decoder.sizes(),
        norm: policy.norm,
        param_count: policy.param_count(),
        config: config.clone(),
    };
    let json = serde_json::to_vec(&header).map_err(|e| PolicyError::Format(e.to_string()))?;
    let len = u32::try_from(json.len()).map_err(|_| PolicyError::Format("header too large".into()))?;
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&len.to_le_bytes())?;
    w.write_all(&json)?;
    for p in policy.params() {
        w.write_all(&p.to_le_bytes())?;
    }
    Ok(())
}

/// Reads a policy and the header it was stored with.
pub fn read_policy<R: Read>(r: &mut R) -> Result<(Policy, PolicyHeader), PolicyError> {
    let mut magic = [0u8; 8];
    read_exact(r, &mut magic, "magic")?;
    if &magic != MAGIC {
        return Err(PolicyError::Format("not a policy file (bad magic)".into()));
    }
    let mut word = [0u8; 4];
    read_exact(r, &mut word, "version")?;
    let version = u32::from_le_bytes(word);
    if version != VERSION {
        return Err(PolicyError::Format(format!("unsupported version {version}, expected {VERSION}")));
    }
    read_exact(r, &mut word, "header length")?;
    let mut json = vec![0u8; u32::from_le_bytes(word) as usize];
    read_exact(r, &mut json, "header")?;
    let header: PolicyHeader = serde_json::from_slice(&json).map_err(|e| PolicyError::Format(e.to_string()))?;

    let layers = |sizes: &[usize], out: Activation| -> Result<Mlp, PolicyError> {
        if sizes.len() < 2 {
            return Err(PolicyError::Shape(format!("layer sizes {sizes:?} need at least input and output")));
        }
        Ok(Mlp::init(sizes, out, &mut rand::rngs::mock::StepRng::new(0, 0)))
    };
    let mut policy = Policy {
        dims: header.dims,
        tactile: layers(&header.tactile_sizes, Activation::Tanh)?,
        proprio: layers(&header.proprio_sizes, Activation::Tanh)?,
        decoder: layers(&header.decoder_sizes, Activation::Linear)?,
        norm: header.norm,
    };
    if policy.param_count() != header.param_count {
        return Err(PolicyError::Shape(format!(
            "header declares {} weights but the layer sizes hold {}",
            header.param_count,
            policy.param_count()
        )));
    }
    let mut body = vec![0u8; 8 * header.param_count];
    read_exact(r, &mut body, "weights")?;
    let params: Vec<f64> =
        body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk"))).collect();
    policy.set_params(&params)?;
    policy.validate()?;
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(PolicyError::Format("trailing bytes after weights".into()));
    }
    Ok((policy, header))
}

fn read_exact<R: Read>(r: &mut R, buf: &mut [u8], what: &str) -> Result<(), PolicyError> {
    r.read_exact(buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => PolicyError::Format(format!("file truncated in {what}")),
        _ => PolicyError::Io(e),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn policy() -> Policy {
        Policy::init(PolicyDims { horizon: 3, hidden: 5 }, Normalization::default(), 8)
    }

    #[test]
    fn round_trip_is_exact() {
        let p = policy();
        let mut buf = Vec::new();
        write_policy(&mut buf, &p, &serde_json::json!({"seed": 8})).unwrap();
        assert_eq!(&buf[..8], MAGIC);
        let (q, h) = read_policy(&mut buf.as_slice()).unwrap();
        assert_eq!(q, p);
        assert_eq!(h.config["seed"], 8);
    }

    #[test]
    fn truncation_and_corruption_are_errors() {
        let mut buf = Vec::new();
        write_policy(&mut buf, &policy(), &serde_json::Value::Null).unwrap();
        for cut in [4, 12, 20, buf.len() - 1] {
            assert!(matches!(read_policy(&mut &buf[..cut]), Err(PolicyError::Format(_))), "cut at {cut}");
        }
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(read_policy(&mut bad.as_slice()).is_err());
        let mut long = buf.clone();
        long.push(0);
        assert!(read_policy(&mut long.as_slice()).is_err());
    }
}
