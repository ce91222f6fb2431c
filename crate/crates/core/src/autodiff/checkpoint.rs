//! Binary parameter checkpoints.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! offset  size  field
//! 0       8     magic "SSLCKPT1"
//! 8       4     u32 header length H in bytes
//! 12      H     UTF-8 header, one `key=value` per line:
//!                 widths=7,20,20,16,7
//!                 activation=tanh
//!                 seed=<u64>
//!                 input_mean=<comma separated f64>   (optional)
//!                 input_std=<comma separated f64>    (optional)
//!                 config_hash=<hex>                  (optional)
//! 12+H    8     u64 parameter count N
//! 20+H    8·N   parameters as IEEE-754 binary64, little-endian
//! ```

use std::io::{Read, Write};

use crate::autodiff::mlp::{Activation, MlpSpec, Parameters};
use crate::error::Error;

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"SSLCKPT1";

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub spec: MlpSpec,
    pub params: Parameters,
    pub seed: u64,
    pub input_mean: Option<Vec<f64>>,
    pub input_std: Option<Vec<f64>>,
    pub config_hash: Option<String>,
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(",")
}

fn parse_floats(s: &str) -> Result<Vec<f64>, Error> {
    s.split(',')
        .map(|t| t.parse::<f64>().map_err(|_| Error::Checkpoint(format!("bad number `{t}`"))))
        .collect()
}

impl Checkpoint {
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<(), Error> {
        let mut header = String::new();
        let widths: Vec<String> = self.spec.widths().iter().map(|w| w.to_string()).collect();
        header.push_str(&format!("widths={}\n", widths.join(",")));
        header.push_str(&format!("activation={}\n", self.spec.activation().name()));
        header.push_str(&format!("seed={}\n", self.seed));
        if let Some(m) = &self.input_mean {
            header.push_str(&format!("input_mean={}\n", join(m)));
        }
        if let Some(s) = &self.input_std {
            header.push_str(&format!("input_std={}\n", join(s)));
        }
        if let Some(h) = &self.config_hash {
            header.push_str(&format!("config_hash={h}\n"));
        }
        w.write_all(CHECKPOINT_MAGIC)?;
        w.write_all(&(header.len() as u32).to_le_bytes())?;
        w.write_all(header.as_bytes())?;
        w.write_all(&(self.params.len() as u64).to_le_bytes())?;
        for v in self.params.values() {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to a Vec cannot fail");
        buf
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self, Error> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != CHECKPOINT_MAGIC {
            return Err(Error::Checkpoint("bad magic".into()));
        }
        let mut b4 = [0u8; 4];
        r.read_exact(&mut b4)?;
        let hlen = u32::from_le_bytes(b4) as usize;
        let mut hbuf = vec![0u8; hlen];
        r.read_exact(&mut hbuf)?;
        let header = String::from_utf8(hbuf).map_err(|_| Error::Checkpoint("header is not UTF-8".into()))?;

        let (mut widths, mut activation, mut seed) = (None, None, None);
        let (mut input_mean, mut input_std, mut config_hash) = (None, None, None);
        for line in header.lines() {
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Checkpoint(format!("bad header line `{line}`")))?;
            match k {
                "widths" => {
                    let w: Result<Vec<usize>, _> = v.split(',').map(str::parse).collect();
                    widths = Some(w.map_err(|_| Error::Checkpoint("bad widths".into()))?);
                }
                "activation" => {
                    activation = Some(
                        Activation::parse(v).ok_or_else(|| Error::Checkpoint(format!("unknown activation `{v}`")))?,
                    )
                }
                "seed" => seed = Some(v.parse::<u64>().map_err(|_| Error::Checkpoint("bad seed".into()))?),
                "input_mean" => input_mean = Some(parse_floats(v)?),
                "input_std" => input_std = Some(parse_floats(v)?),
                "config_hash" => config_hash = Some(v.to_string()),
                _ => return Err(Error::Checkpoint(format!("unknown header key `{k}`"))),
            }
        }
        let spec = MlpSpec::new(
            widths.ok_or_else(|| Error::Checkpoint("missing widths".into()))?,
            activation.ok_or_else(|| Error::Checkpoint("missing activation".into()))?,
        )?;
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b8)?;
        let n = u64::from_le_bytes(b8) as usize;
        if n != spec.param_count() {
            return Err(Error::Checkpoint(format!(
                "parameter count {n} does not match widths ({})",
                spec.param_count()
            )));
        }
        let mut values = Vec::with_capacity(n);
        for _ in 0..n {
            r.read_exact(&mut b8)?;
            values.push(f64::from_le_bytes(b8));
        }
        let mut rest = Vec::new();
        r.read_to_end(&mut rest)?;
        if !rest.is_empty() {
            return Err(Error::Checkpoint(format!("{} trailing bytes", rest.len())));
        }
        let params = spec.parameters(values)?;
        Ok(Self {
            spec,
            params,
            seed: seed.ok_or_else(|| Error::Checkpoint("missing seed".into()))?,
            input_mean,
            input_std,
            config_hash,
        })
    }
}
