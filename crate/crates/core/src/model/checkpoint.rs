//! Binary checkpoint: `u64` LE header length, JSON header, then every tensor
//! as contiguous little-endian `f64` in header order.

use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::{LayerDims, ModelParams};
use crate::error::{Error, Result};

pub const FORMAT_VERSION: &str = "afgcl-ckpt-1";

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TensorEntry {
    name: String,
    shape: Vec<usize>,
    offset: usize,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    version: String,
    dims: LayerDims,
    tensors: Vec<TensorEntry>,
}

pub fn to_bytes(params: &ModelParams) -> Result<Vec<u8>> {
    params.validate()?;
    let mut tensors = Vec::new();
    let mut data = Vec::new();
    let mut offset = 0;
    for (name, t) in params.tensors() {
        tensors.push(TensorEntry { name: name.to_string(), shape: t.shape().to_vec(), offset });
        offset += t.len();
        for &x in t.iter() {
            data.extend_from_slice(&x.to_le_bytes());
        }
    }
    let header = serde_json::to_vec(&Header {
        version: FORMAT_VERSION.to_string(),
        dims: params.dims(),
        tensors,
    })?;
    let mut out = Vec::with_capacity(8 + header.len() + data.len());
    out.extend_from_slice(&(header.len() as u64).to_le_bytes());
    out.extend_from_slice(&header);
    out.extend_from_slice(&data);
    Ok(out)
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Checkpoint(msg.into())
}

pub fn from_bytes(bytes: &[u8]) -> Result<ModelParams> {
    let len_bytes: [u8; 8] = bytes
        .get(..8)
        .ok_or_else(|| bad("truncated header length"))?
        .try_into()
        .expect("eight bytes");
    let header_len = usize::try_from(u64::from_le_bytes(len_bytes)).map_err(|_| bad("header length overflow"))?;
    let header_end = 8usize.checked_add(header_len).ok_or_else(|| bad("header length overflow"))?;
    let header_bytes = bytes.get(8..header_end).ok_or_else(|| bad("truncated header"))?;
    let header: Header = serde_json::from_slice(header_bytes).map_err(|e| bad(format!("header: {e}")))?;
    if header.version != FORMAT_VERSION {
        return Err(bad(format!("unsupported version {:?}", header.version)));
    }
    let payload = &bytes[header_end..];
    if payload.len() % 8 != 0 {
        return Err(bad("payload is not a whole number of f64 values"));
    }
    let values: Vec<f64> = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("eight bytes")))
        .collect();

    let d = header.dims;
    let expected: Vec<(&str, Vec<usize>)> = vec![
        ("gcn.0.weight", vec![d.input, d.hidden]),
        ("gcn.0.bn_scale", vec![d.hidden]),
        ("gcn.0.bn_shift", vec![d.hidden]),
        ("gcn.1.weight", vec![d.hidden, d.embed]),
        ("gcn.1.bn_scale", vec![d.embed]),
        ("gcn.1.bn_shift", vec![d.embed]),
        ("proj.0.weight", vec![d.embed, d.output]),
        ("proj.0.bias", vec![d.output]),
        ("proj.1.weight", vec![d.output, d.output]),
        ("proj.1.bias", vec![d.output]),
    ];
    if header.tensors.len() != expected.len() {
        return Err(bad(format!("expected {} tensors, found {}", expected.len(), header.tensors.len())));
    }
    let mut blocks = Vec::with_capacity(expected.len());
    for (entry, (name, shape)) in header.tensors.iter().zip(&expected) {
        if entry.name != *name || entry.shape != *shape {
            return Err(bad(format!(
                "tensor {:?} {:?} does not match expected {name:?} {shape:?}",
                entry.name, entry.shape
            )));
        }
        let len: usize = shape.iter().product();
        let slice = entry
            .offset
            .checked_add(len)
            .and_then(|end| values.get(entry.offset..end))
            .ok_or_else(|| bad(format!("tensor {name} runs past the payload")))?;
        blocks.push(slice.to_vec());
    }
    let total: usize = expected.iter().map(|(_, s)| s.iter().product::<usize>()).sum();
    if total != values.len() {
        return Err(bad(format!("payload holds {} values, header describes {total}", values.len())));
    }
    let mut it = blocks.into_iter();
    let mut m2 = |r, c| Array2::from_shape_vec((r, c), it.next().expect("block")).map_err(|e| bad(e.to_string()));
    let w1 = m2(d.input, d.hidden)?;
    let s1 = Array1::from(m2(1, d.hidden)?.into_raw_vec_and_offset().0);
    let b1 = Array1::from(m2(1, d.hidden)?.into_raw_vec_and_offset().0);
    let w2 = m2(d.hidden, d.embed)?;
    let s2 = Array1::from(m2(1, d.embed)?.into_raw_vec_and_offset().0);
    let b2 = Array1::from(m2(1, d.embed)?.into_raw_vec_and_offset().0);
    let q1 = m2(d.embed, d.output)?;
    let c1 = Array1::from(m2(1, d.output)?.into_raw_vec_and_offset().0);
    let q2 = m2(d.output, d.output)?;
    let c2 = Array1::from(m2(1, d.output)?.into_raw_vec_and_offset().0);
    let params = ModelParams {
        gcn_weights: [w1, w2],
        bn_scale: [s1, s2],
        bn_shift: [b1, b2],
        proj_weights: [q1, q2],
        proj_biases: [c1, c2],
    };
    params.validate().map_err(|e| bad(e.to_string()))?;
    Ok(params)
}

pub fn save(params: &ModelParams, path: &Path) -> Result<()> {
    fs::write(path, to_bytes(params)?).map_err(|e| Error::io(path, e))
}

pub fn load(path: &Path) -> Result<ModelParams> {
    from_bytes(&fs::read(path).map_err(|e| Error::io(path, e))?)
}
