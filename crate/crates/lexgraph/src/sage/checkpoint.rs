//! Model checkpoint container.
//!
//! Layout: the magic bytes `LXG1`, a little-endian u64 header length, a JSON
//! header (shapes, training config, seed), then the parameter tensors as
//! little-endian f64 blocks in declared order.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::model::{ClassifierHead, SageLayer, SageModel};
use super::tensor::Tensor;
use super::train::TrainConfig;
use super::SageError;

const MAGIC: &[u8; 4] = b"LXG1";

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    version: u32,
    shapes: Vec<Vec<usize>>,
    config: TrainConfig,
    seed: u64,
}

/// Write a model checkpoint.
pub fn save_model(
    path: impl AsRef<Path>,
    model: &SageModel,
    config: &TrainConfig,
) -> Result<(), SageError> {
    let header = Header {
        version: 1,
        shapes: model.params().iter().map(|p| p.shape().to_vec()).collect(),
        config: config.clone(),
        seed: config.seed,
    };
    let header_bytes = serde_json::to_vec(&header)
        .map_err(|e| SageError::Checkpoint(format!("header encode: {e}")))?;

    let mut out = BufWriter::new(File::create(path.as_ref()).map_err(io_err)?);
    out.write_all(MAGIC).map_err(io_err)?;
    out.write_all(&(header_bytes.len() as u64).to_le_bytes())
        .map_err(io_err)?;
    out.write_all(&header_bytes).map_err(io_err)?;
    for param in model.params() {
        for v in param.values() {
            out.write_all(&v.to_le_bytes()).map_err(io_err)?;
        }
    }
    out.flush().map_err(io_err)?;
    Ok(())
}

/// Read a model checkpoint back, along with its training config.
pub fn load_model(path: impl AsRef<Path>) -> Result<(SageModel, TrainConfig), SageError> {
    let mut reader = BufReader::new(File::open(path.as_ref()).map_err(io_err)?);

    let mut magic = [0u8; 4];
    reader.read_exact(&mut magic).map_err(io_err)?;
    if &magic != MAGIC {
        return Err(SageError::Checkpoint(format!(
            "bad magic {:?}, expected {:?}",
            magic, MAGIC
        )));
    }
    let mut len_bytes = [0u8; 8];
    reader.read_exact(&mut len_bytes).map_err(io_err)?;
    let header_len = u64::from_le_bytes(len_bytes) as usize;
    let mut header_bytes = vec![0u8; header_len];
    reader.read_exact(&mut header_bytes).map_err(io_err)?;
    let header: Header = serde_json::from_slice(&header_bytes)
        .map_err(|e| SageError::Checkpoint(format!("header decode: {e}")))?;
    if header.version != 1 {
        return Err(SageError::Checkpoint(format!(
            "unsupported checkpoint version {}",
            header.version
        )));
    }
    if header.shapes.len() < 4 || !header.shapes.len().is_multiple_of(2) {
        return Err(SageError::Checkpoint(format!(
            "unexpected parameter count {}",
            header.shapes.len()
        )));
    }

    let mut tensors = Vec::with_capacity(header.shapes.len());
    for shape in &header.shapes {
        let len: usize = shape.iter().product();
        let mut values = Vec::with_capacity(len);
        let mut buf = [0u8; 8];
        for _ in 0..len {
            reader.read_exact(&mut buf).map_err(io_err)?;
            values.push(f64::from_le_bytes(buf));
        }
        tensors.push(Tensor::from_values(shape, values)?);
    }

    let mut it = tensors.into_iter();
    let layer_count = (header.shapes.len() - 2) / 2;
    let mut layers = Vec::with_capacity(layer_count);
    for _ in 0..layer_count {
        let weight = it.next().unwrap();
        let bias = it.next().unwrap();
        layers.push(SageLayer { weight, bias });
    }
    let class_head = ClassifierHead {
        weight: it.next().unwrap(),
        bias: it.next().unwrap(),
    };
    Ok((SageModel { layers, class_head }, header.config))
}

fn io_err(e: std::io::Error) -> SageError {
    SageError::Checkpoint(e.to_string())
}
