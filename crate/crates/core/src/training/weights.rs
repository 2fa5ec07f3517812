//! Versioned single-precision weight files.
//!
//! Layout, little endian:
//!
//! ```text
//! magic      8   "TRJCAST\0"
//! version    u32
//! k p H Z    u32 x 4
//! in out     u32 x 2      feature width (8) and output width (4)
//! gates      4 bytes      "IFGO"
//! biases     u8           2 = separate input and recurrent bias per cell
//! dec_init   u8           0 = full state, 1 = hidden only
//! latent_act u8           1 = ReLU before the latent projection
//! float      u8           bytes per value (4)
//! count      u64          parameter count
//! echo_len   u32, echo    UTF-8 config text
//! values     f32 x count  tensors in TENSOR_NAMES order
//! checksum   u64          FNV-1a over every preceding byte
//! ```

use std::path::Path;

use crate::error::{Error, Result};
use crate::lstm::GATE_ORDER;
use crate::model::{DecoderInit, ModelDims, ModelParams, INPUT_DIM, OUTPUT_DIM};
use crate::tensor::Real;

pub const MAGIC: [u8; 8] = *b"TRJCAST\0";
pub const FORMAT_VERSION: u32 = 1;
const BIAS_DUAL: u8 = 2;
const LATENT_RELU: u8 = 1;
const FLOAT_BYTES: u8 = 4;

/// Everything stored in a weight file besides the values.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightHeader {
    pub version: u32,
    pub dims: ModelDims,
    pub param_count: u64,
    /// Configuration text echoed at save time.
    pub config_echo: String,
}

pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Serializes to bytes, rounding every value to `f32`.
pub fn encode_model<T: Real>(params: &ModelParams<T>, config_echo: &str) -> Vec<u8> {
    let d = params.dims;
    let count = params.param_count();
    let mut out = Vec::with_capacity(64 + config_echo.len() + 4 * count);
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    for v in [d.k, d.p, d.hidden, d.latent, INPUT_DIM, OUTPUT_DIM] {
        out.extend_from_slice(&(v as u32).to_le_bytes());
    }
    out.extend_from_slice(&GATE_ORDER);
    let init = match d.decoder_init {
        DecoderInit::Full => 0u8,
        DecoderInit::HiddenOnly => 1u8,
    };
    out.extend_from_slice(&[BIAS_DUAL, init, LATENT_RELU, FLOAT_BYTES]);
    out.extend_from_slice(&(count as u64).to_le_bytes());
    out.extend_from_slice(&(config_echo.len() as u32).to_le_bytes());
    out.extend_from_slice(config_echo.as_bytes());
    for t in params.tensors() {
        for v in t {
            out.extend_from_slice(&(v.as_f64() as f32).to_le_bytes());
        }
    }
    let sum = fnv1a(&out);
    out.extend_from_slice(&sum.to_le_bytes());
    out
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(Error::Integrity {
                path: self.path.to_path_buf(),
                msg: format!("truncated while reading {what} at byte {}", self.pos),
            });
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().expect("8 bytes")))
    }
}

/// Parses bytes produced by [`encode_model`]. `path` is only used in messages.
pub fn decode_model(bytes: &[u8], path: &Path) -> Result<(ModelParams<f64>, WeightHeader)> {
    let format = |msg: String| Error::Format { path: path.to_path_buf(), msg };
    let integrity = |msg: String| Error::Integrity { path: path.to_path_buf(), msg };
    let mut c = Cursor { bytes, pos: 0, path };

    if c.take(8, "magic")? != MAGIC {
        return Err(format("not a weight file (bad magic)".into()));
    }
    let version = c.u32("version")?;
    if version != FORMAT_VERSION {
        return Err(format(format!("format version {version} is not supported (expected {FORMAT_VERSION})")));
    }
    let mut v = [0usize; 6];
    for (i, slot) in v.iter_mut().enumerate() {
        *slot = c.u32(["k", "p", "hidden", "latent", "input width", "output width"][i])? as usize;
    }
    if v[4] != INPUT_DIM || v[5] != OUTPUT_DIM {
        return Err(format(format!("feature/output widths {}x{} differ from {INPUT_DIM}x{OUTPUT_DIM}", v[4], v[5])));
    }
    let gates = c.take(4, "gate order")?;
    if gates != GATE_ORDER {
        return Err(format(format!("gate order {:?} differs from IFGO", String::from_utf8_lossy(gates))));
    }
    let flags = c.take(4, "convention flags")?;
    if flags[0] != BIAS_DUAL || flags[2] != LATENT_RELU || flags[3] != FLOAT_BYTES {
        return Err(format(format!("unsupported conventions (bias {}, latent activation {}, float width {})", flags[0], flags[2], flags[3])));
    }
    let decoder_init = match flags[1] {
        0 => DecoderInit::Full,
        1 => DecoderInit::HiddenOnly,
        x => return Err(format(format!("unknown decoder init tag {x}"))),
    };
    let dims = ModelDims { k: v[0], p: v[1], hidden: v[2], latent: v[3], decoder_init };
    dims.validate().map_err(|e| format(e.to_string()))?;
    let count = c.u64("parameter count")?;
    if count != dims.param_count() as u64 {
        return Err(integrity(format!("header says {count} parameters, dimensions imply {}", dims.param_count())));
    }
    let echo_len = c.u32("config length")? as usize;
    let echo = String::from_utf8(c.take(echo_len, "config text")?.to_vec())
        .map_err(|_| integrity("config text is not UTF-8".into()))?;
    let raw = c.take(4 * count as usize, "parameter values")?;
    let body_end = c.pos;
    let stored = c.u64("checksum")?;
    if c.pos != bytes.len() {
        return Err(integrity(format!("{} trailing bytes after checksum", bytes.len() - c.pos)));
    }
    if fnv1a(&bytes[..body_end]) != stored {
        return Err(integrity("checksum mismatch".into()));
    }

    let values: Vec<f64> = raw
        .chunks_exact(4)
        .map(|b| f64::from(f32::from_le_bytes(b.try_into().expect("4 bytes"))))
        .collect();
    let mut params = ModelParams::<f64>::zeros(dims);
    params.set_flat(&values)?;
    Ok((params, WeightHeader { version, dims, param_count: count, config_echo: echo }))
}

pub fn save_model<T: Real>(params: &ModelParams<T>, config_echo: &str, path: &Path) -> Result<()> {
    std::fs::write(path, encode_model(params, config_echo))?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<(ModelParams<f64>, WeightHeader)> {
    let bytes = std::fs::read(path)?;
    decode_model(&bytes, path)
}

/// Loads and checks the stored dimensions against `expected`.
pub fn load_model_expecting(path: &Path, expected: &ModelDims) -> Result<(ModelParams<f64>, WeightHeader)> {
    let (params, header) = load_model(path)?;
    if header.dims != *expected {
        return Err(Error::dimension("load_model", format!("{expected:?}"), format!("{:?}", header.dims)));
    }
    Ok((params, header))
}
