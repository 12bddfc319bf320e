//! Checkpoints are HCUBE files with one record per stored tensor. A tensor
//! of shape `[a, b, c, d]` is written as an `a x b x (c*d)` record and a
//! vector of length `c` as `1 x 1 x c`.

use std::path::Path;

use super::{HyperNet, ModelConfig};
use crate::error::{Error, Result};
use crate::io::hcube::{read_records, write_records, HcubeRecord};
use crate::scalar::Scalar;

fn record_dims(shape: &[usize]) -> (usize, usize, usize) {
    match *shape {
        [a, b, c, d] => (a, b, c * d),
        [a, b, c] => (a, b, c),
        [a, b] => (1, a, b),
        [c] => (1, 1, c),
        _ => (1, 1, shape.iter().product()),
    }
}

pub fn save_checkpoint<T: Scalar>(net: &HyperNet<T>, path: impl AsRef<Path>) -> Result<()> {
    let records: Vec<HcubeRecord> = net
        .params
        .records()
        .into_iter()
        .map(|(name, t)| {
            let (height, width, bands) = record_dims(t.shape());
            HcubeRecord { name, height, width, bands, data: t.data().iter().map(|v| v.as_f64()).collect() }
        })
        .collect();
    write_records(path, &records)
}

/// Builds a network for `config` and fills it from `path`. Every record name
/// and shape must match the architecture exactly.
pub fn load_checkpoint<T: Scalar>(config: &ModelConfig, path: impl AsRef<Path>) -> Result<HyperNet<T>> {
    let mut net = HyperNet::new(config, 0)?;
    let expected = net.params.records();
    let records = read_records(path)?;
    if records.len() != expected.len() {
        return Err(Error::contract(
            "load checkpoint",
            format!("model has {} tensors, checkpoint has {}", expected.len(), records.len()),
        ));
    }
    for (r, (name, t)) in records.iter().zip(&expected) {
        if &r.name != name || (r.height, r.width, r.bands) != record_dims(t.shape()) {
            return Err(Error::contract(
                "load checkpoint",
                format!(
                    "record {} ({}x{}x{}) does not match {} {:?}",
                    r.name, r.height, r.width, r.bands, name, t.shape()
                ),
            ));
        }
    }
    net.params
        .load_records(records.into_iter().map(|r| (r.name, r.data.into_iter().map(T::lit).collect())).collect())?;
    Ok(net)
}
