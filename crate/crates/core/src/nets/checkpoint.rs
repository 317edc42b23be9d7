//! Binary model checkpoints.
//!
//! Little-endian layout: magic `NIF1`, version `u32`, a model-kind tag,
//! the architecture block (dims, activation tags with omega0 as f64, mode
//! tag) and finally every parameter segment as f64 arrays in layout order.
//! The reader validates all counts before constructing a model.

use super::activation::Activation;
use super::coordnet::{BlockStyle, CoordNet, ShapeNetConfig};
use super::deeponet::{DeepOnet, DeepOnetConfig};
use super::fourier::{FourierConfig, FourierNet};
use super::model::Model;
use super::nif::{NifModel, ParamTarget, ParameterNetConfig};
use crate::error::{Error, Result};
use crate::numerics::Matrix;
use std::io::{Read, Write};
use std::path::Path;

const MAGIC: &[u8; 4] = b"NIF1";
const VERSION: u32 = 1;

/// Any trainable architecture, for storage and the command-line surface.
#[derive(Debug, Clone)]
pub enum AnyModel {
    Coord(CoordNet),
    Nif(NifModel),
    DeepOnet(DeepOnet),
    Fourier(FourierNet),
}

impl AnyModel {
    pub fn as_model(&self) -> &dyn Model {
        match self {
            AnyModel::Coord(m) => m,
            AnyModel::Nif(m) => m,
            AnyModel::DeepOnet(m) => m,
            AnyModel::Fourier(m) => m,
        }
    }

    pub fn as_model_mut(&mut self) -> &mut dyn Model {
        match self {
            AnyModel::Coord(m) => m,
            AnyModel::Nif(m) => m,
            AnyModel::DeepOnet(m) => m,
            AnyModel::Fourier(m) => m,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            AnyModel::Coord(m) => {
                if m.cfg().activation.is_sine() {
                    "siren"
                } else {
                    "mlp"
                }
            }
            AnyModel::Nif(m) => match m.param_cfg().target {
                ParamTarget::Full => "nif-full",
                ParamTarget::LastLayer => "nif-lastlayer",
            },
            AnyModel::DeepOnet(_) => "deeponet",
            AnyModel::Fourier(_) => "fourier",
        }
    }
}

struct Writer<W: Write>(W);

impl<W: Write> Writer<W> {
    fn u32(&mut self, v: u32) -> Result<()> {
        self.0.write_all(&v.to_le_bytes())?;
        Ok(())
    }
    fn f64(&mut self, v: f64) -> Result<()> {
        self.0.write_all(&v.to_le_bytes())?;
        Ok(())
    }
    fn f64s(&mut self, vs: &[f64]) -> Result<()> {
        self.u32(vs.len() as u32)?;
        for &v in vs {
            self.f64(v)?;
        }
        Ok(())
    }
    fn usizes(&mut self, vs: &[usize]) -> Result<()> {
        self.u32(vs.len() as u32)?;
        for &v in vs {
            self.u32(v as u32)?;
        }
        Ok(())
    }
    fn activation(&mut self, a: Activation) -> Result<()> {
        let (tag, omega0) = match a {
            Activation::Swish => (0, 0.0),
            Activation::Tanh => (1, 0.0),
            Activation::Relu => (2, 0.0),
            Activation::Sine { omega0 } => (3, omega0),
            Activation::Identity => (4, 0.0),
        };
        self.u32(tag)?;
        self.f64(omega0)
    }
}

struct Reader<R: Read>(R);

impl<R: Read> Reader<R> {
    fn u32(&mut self) -> Result<u32> {
        let mut b = [0u8; 4];
        self.0.read_exact(&mut b)?;
        Ok(u32::from_le_bytes(b))
    }
    fn f64(&mut self) -> Result<f64> {
        let mut b = [0u8; 8];
        self.0.read_exact(&mut b)?;
        Ok(f64::from_le_bytes(b))
    }
    fn f64s(&mut self) -> Result<Vec<f64>> {
        let n = self.u32()? as usize;
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            out.push(self.f64()?);
        }
        Ok(out)
    }
    fn usizes(&mut self) -> Result<Vec<usize>> {
        let n = self.u32()? as usize;
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            out.push(self.u32()? as usize);
        }
        Ok(out)
    }
    fn activation(&mut self) -> Result<Activation> {
        let tag = self.u32()?;
        let omega0 = self.f64()?;
        Ok(match tag {
            0 => Activation::Swish,
            1 => Activation::Tanh,
            2 => Activation::Relu,
            3 => Activation::Sine { omega0 },
            4 => Activation::Identity,
            other => return Err(Error::Parse { msg: format!("unknown activation tag {other}"), line: 0 }),
        })
    }
}

/// Serializes a model to `path`.
pub fn save_model(path: &Path, model: &AnyModel) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = Writer(std::io::BufWriter::new(file));
    w.0.write_all(MAGIC)?;
    w.u32(VERSION)?;
    match model {
        AnyModel::Coord(net) => {
            w.u32(0)?;
            let c = net.cfg();
            w.usizes(&[c.d_in, c.width, c.n_blocks, c.d_out])?;
            w.activation(c.activation)?;
            w.u32(match c.block_style {
                BlockStyle::ResNetHalfSum => 0,
                BlockStyle::PlainChain => 1,
            })?;
            w.f64s(net.params())?;
        }
        AnyModel::Nif(net) => {
            w.u32(1)?;
            let s = net.shape_cfg();
            w.usizes(&[s.d_in, s.width, s.n_blocks, s.d_out])?;
            w.activation(s.activation)?;
            w.u32(match s.block_style {
                BlockStyle::ResNetHalfSum => 0,
                BlockStyle::PlainChain => 1,
            })?;
            let p = net.param_cfg();
            w.u32(p.d_in as u32)?;
            w.usizes(&p.hidden)?;
            w.u32(p.bottleneck as u32)?;
            w.activation(p.activation)?;
            w.u32(match p.target {
                ParamTarget::Full => 0,
                ParamTarget::LastLayer => 1,
            })?;
            w.u32(u32::from(p.last_layer_bias))?;
            w.f64s(net.params())?;
        }
        AnyModel::DeepOnet(net) => {
            w.u32(2)?;
            let c = net.cfg();
            w.usizes(&c.branch)?;
            w.usizes(&c.trunk)?;
            w.activation(c.activation)?;
            w.f64s(net.params())?;
        }
        AnyModel::Fourier(net) => {
            w.u32(3)?;
            let c = net.cfg();
            w.usizes(&[c.d_in, c.n_features, c.d_out])?;
            w.f64(c.sigma)?;
            w.usizes(&c.hidden)?;
            w.activation(c.activation)?;
            w.f64s(net.frequencies().data())?;
            w.f64s(net.params())?;
        }
    }
    w.0.flush()?;
    Ok(())
}

/// Loads a model written by [`save_model`].
pub fn load_model(path: &Path) -> Result<AnyModel> {
    let file = std::fs::File::open(path)?;
    let mut r = Reader(std::io::BufReader::new(file));
    let mut magic = [0u8; 4];
    r.0.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Parse { msg: "bad checkpoint magic".into(), line: 0 });
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::Parse { msg: format!("unsupported checkpoint version {version}"), line: 0 });
    }
    match r.u32()? {
        0 => {
            let dims = r.usizes()?;
            if dims.len() != 4 {
                return Err(Error::Parse { msg: "bad coord config block".into(), line: 0 });
            }
            let activation = r.activation()?;
            let block_style = match r.u32()? {
                0 => BlockStyle::ResNetHalfSum,
                1 => BlockStyle::PlainChain,
                other => return Err(Error::Parse { msg: format!("unknown block style {other}"), line: 0 }),
            };
            let cfg = ShapeNetConfig {
                d_in: dims[0],
                width: dims[1],
                n_blocks: dims[2],
                d_out: dims[3],
                activation,
                block_style,
            };
            Ok(AnyModel::Coord(CoordNet::from_params(cfg, r.f64s()?)?))
        }
        1 => {
            let dims = r.usizes()?;
            if dims.len() != 4 {
                return Err(Error::Parse { msg: "bad shape config block".into(), line: 0 });
            }
            let activation = r.activation()?;
            let block_style = match r.u32()? {
                0 => BlockStyle::ResNetHalfSum,
                1 => BlockStyle::PlainChain,
                other => return Err(Error::Parse { msg: format!("unknown block style {other}"), line: 0 }),
            };
            let shape = ShapeNetConfig {
                d_in: dims[0],
                width: dims[1],
                n_blocks: dims[2],
                d_out: dims[3],
                activation,
                block_style,
            };
            let d_in = r.u32()? as usize;
            let hidden = r.usizes()?;
            let bottleneck = r.u32()? as usize;
            let pn_act = r.activation()?;
            let target = match r.u32()? {
                0 => ParamTarget::Full,
                1 => ParamTarget::LastLayer,
                other => return Err(Error::Parse { msg: format!("unknown target tag {other}"), line: 0 }),
            };
            let last_layer_bias = r.u32()? != 0;
            let pcfg = ParameterNetConfig {
                d_in,
                hidden,
                bottleneck,
                activation: pn_act,
                target,
                last_layer_bias,
            };
            Ok(AnyModel::Nif(NifModel::from_params(shape, pcfg, r.f64s()?)?))
        }
        2 => {
            let branch = r.usizes()?;
            let trunk = r.usizes()?;
            let activation = r.activation()?;
            let cfg = DeepOnetConfig { branch, trunk, activation };
            Ok(AnyModel::DeepOnet(DeepOnet::from_params(cfg, r.f64s()?)?))
        }
        3 => {
            let dims = r.usizes()?;
            if dims.len() != 3 {
                return Err(Error::Parse { msg: "bad fourier config block".into(), line: 0 });
            }
            let sigma = r.f64()?;
            let hidden = r.usizes()?;
            let activation = r.activation()?;
            let cfg = FourierConfig {
                d_in: dims[0],
                n_features: dims[1],
                sigma,
                hidden,
                d_out: dims[2],
                activation,
            };
            let b = Matrix::from_vec(cfg.n_features, cfg.d_in, r.f64s()?)?;
            Ok(AnyModel::Fourier(FourierNet::from_parts(cfg, b, r.f64s()?)?))
        }
        other => Err(Error::Parse { msg: format!("unknown model kind {other}"), line: 0 }),
    }
}
