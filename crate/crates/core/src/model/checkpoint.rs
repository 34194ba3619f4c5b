//! Binary checkpoint files.
//!
//! Layout, little-endian throughout: magic `APCK`, `u32` version, the
//! canonical model config text (`u64` length + UTF-8), `u64` iteration,
//! `u64` seed, the optimizer settings, then one record per named layer
//! holding the weight and bias blobs, followed by the momentum blobs of every
//! layer in the same order.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::layers::optim::OptimizerConfig;
use crate::model::config::ModelConfig;
use crate::model::net::ActionNet;
use crate::tensor::{read_u32, read_u64, Tensor};

const MAGIC: &[u8; 4] = b"APCK";
const VERSION: u32 = 1;

/// A trained network plus everything needed to resume its training.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model: ActionNet,
    pub optimizer: OptimizerConfig,
    /// Number of optimizer steps already taken.
    pub iteration: usize,
    pub seed: u64,
}

fn write_str<W: Write>(w: &mut W, s: &str) -> Result<()> {
    w.write_all(&(s.len() as u64).to_le_bytes())?;
    w.write_all(s.as_bytes())?;
    Ok(())
}

fn read_str<R: Read>(r: &mut R) -> Result<String> {
    let len = read_u64(r)?;
    if len > 1 << 24 {
        return Err(Error::Format(format!("string field of {len} bytes")));
    }
    let mut buf = vec![0u8; len as usize];
    r.read_exact(&mut buf)?;
    String::from_utf8(buf).map_err(|_| Error::Format("string field is not UTF-8".into()))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    Ok(f64::from_bits(read_u64(r)?))
}

impl Checkpoint {
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        write_str(&mut w, &self.model.config().to_text())?;
        w.write_all(&(self.iteration as u64).to_le_bytes())?;
        w.write_all(&self.seed.to_le_bytes())?;
        let o = &self.optimizer;
        for v in [o.learning_rate, o.momentum, o.lr_decay_factor] {
            w.write_all(&v.to_bits().to_le_bytes())?;
        }
        for v in [o.batch_size, o.lr_step_iterations, o.max_iterations] {
            w.write_all(&(v as u64).to_le_bytes())?;
        }
        let params = self.model.named_params();
        w.write_all(&(params.len() as u32).to_le_bytes())?;
        for (name, p) in &params {
            write_str(&mut w, name)?;
            p.weights().write_blob(&mut w)?;
            p.bias().write_blob(&mut w)?;
        }
        for (_, p) in &params {
            p.momentum_weights().write_blob(&mut w)?;
            p.momentum_bias().write_blob(&mut w)?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Format("not a checkpoint file (bad magic)".into()));
        }
        let version = read_u32(&mut r)?;
        if version != VERSION {
            return Err(Error::Format(format!("unsupported checkpoint version {version}")));
        }
        let config = ModelConfig::from_text(&read_str(&mut r)?)?;
        let iteration = read_u64(&mut r)? as usize;
        let seed = read_u64(&mut r)?;
        let (learning_rate, momentum, lr_decay_factor) = (read_f64(&mut r)?, read_f64(&mut r)?, read_f64(&mut r)?);
        let optimizer = OptimizerConfig {
            learning_rate,
            momentum,
            lr_decay_factor,
            batch_size: read_u64(&mut r)? as usize,
            lr_step_iterations: read_u64(&mut r)? as usize,
            max_iterations: read_u64(&mut r)? as usize,
        };
        let mut model = ActionNet::build(config, seed)?;
        let count = read_u32(&mut r)? as usize;
        let mut params = model.named_params_mut();
        if count != params.len() {
            return Err(Error::Format(format!(
                "checkpoint holds {count} layers, config implies {}",
                params.len()
            )));
        }
        for (expected, p) in params.iter_mut() {
            let name = read_str(&mut r)?;
            if &name != expected {
                return Err(Error::Format(format!("layer '{name}' where '{expected}' was expected")));
            }
            let w = Tensor::read_blob(&mut r)?;
            let b = Tensor::read_blob(&mut r)?;
            if w.dims() != p.weights().dims() || b.dims() != p.bias().dims() {
                return Err(Error::Format(format!("layer '{name}' has shape {} / {}", w.shape(), b.shape())));
            }
            p.weights_mut().copy_from_slice(w.data());
            p.bias_mut().copy_from_slice(b.data());
        }
        for (_, p) in params.iter_mut() {
            let mw = Tensor::read_blob(&mut r)?;
            let mb = Tensor::read_blob(&mut r)?;
            p.set_momentum(mw, mb)?;
        }
        drop(params);
        Ok(Checkpoint {
            model,
            optimizer,
            iteration,
            seed,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_from(BufReader::new(File::open(path)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::svd::svd_compress_fc;

    fn sample() -> Checkpoint {
        let mut model = ActionNet::build(ModelConfig::tiny(), 21).unwrap();
        for (_, p) in model.named_params_mut() {
            let dims_w = p.weights().dims().to_vec();
            let dims_b = p.bias().dims().to_vec();
            p.set_momentum(
                Tensor::random_uniform(&dims_w, -0.1, 0.1, 1).unwrap(),
                Tensor::random_uniform(&dims_b, -0.1, 0.1, 2).unwrap(),
            )
            .unwrap();
        }
        Checkpoint {
            model,
            optimizer: OptimizerConfig::finetune(),
            iteration: 77,
            seed: 21,
        }
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let ck = sample();
        let mut buf = Vec::new();
        ck.write_to(&mut buf).unwrap();
        let back = Checkpoint::read_from(&buf[..]).unwrap();
        assert_eq!(back, ck);
        let x = Tensor::random_uniform(&[2, 3, 4, 8, 8], 0.0, 1.0, 5).unwrap();
        assert_eq!(back.model.forward(&x).unwrap(), ck.model.forward(&x).unwrap());
    }

    #[test]
    fn factored_model_round_trips() {
        let mut ck = sample();
        ck.model = svd_compress_fc(&ck.model, 4).unwrap();
        let mut buf = Vec::new();
        ck.write_to(&mut buf).unwrap();
        assert_eq!(Checkpoint::read_from(&buf[..]).unwrap(), ck);
    }

    #[test]
    fn corrupt_files_are_rejected() {
        let mut buf = Vec::new();
        sample().write_to(&mut buf).unwrap();
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(Checkpoint::read_from(&bad[..]), Err(Error::Format(_))));
        assert!(Checkpoint::read_from(&buf[..buf.len() - 3]).is_err());
    }

    #[test]
    fn header_layout() {
        let mut buf = Vec::new();
        sample().write_to(&mut buf).unwrap();
        assert_eq!(&buf[..4], b"APCK");
        assert_eq!(u32::from_le_bytes(buf[4..8].try_into().unwrap()), 1);
        let len = u64::from_le_bytes(buf[8..16].try_into().unwrap()) as usize;
        let text = std::str::from_utf8(&buf[16..16 + len]).unwrap();
        assert_eq!(ModelConfig::from_text(text).unwrap(), ModelConfig::tiny());
    }
}
