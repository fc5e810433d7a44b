//! Flat binary checkpoints.
//!
//! Layout (all integers and floats little-endian):
//!
//! ```text
//! magic    8 bytes  "GDYCKPT1"
//! kind     u32      1 = glm, 2 = mlp, 3 = ensemble
//! glm:     u32 activation code, f64 pre_scale, u64 K,
//!          K f64 weights, K f64 velocity
//! mlp:     u64 layer count, then per layer:
//!          u32 activation code, f64 pre_scale, u64 out, u64 in,
//!          out*in f64 weights (row-major), out f64 bias,
//!          out*in f64 weight velocity (row-major), out f64 bias velocity
//! ensemble: u64 member count, then each member as an mlp body
//! ```
//!
//! Activation codes: 0 linear, 1 relu, 2 sigmoid. Velocities are stored so
//! a run can resume with momentum intact.

use std::path::Path;

use nalgebra::{DMatrix, DVector};

use super::{Activation, ActivationKind, Dense, Glm, Mlp};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"GDYCKPT1";

#[derive(Debug, Clone, PartialEq)]
pub enum Checkpoint {
    Glm(Glm),
    Mlp(Mlp),
    Ensemble(Vec<Mlp>),
}

pub(crate) struct Writer(pub(crate) Vec<u8>);

impl Writer {
    pub(crate) fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    pub(crate) fn u64(&mut self, v: usize) {
        self.0.extend_from_slice(&(v as u64).to_le_bytes());
    }
    pub(crate) fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    pub(crate) fn row_major(&mut self, m: &DMatrix<f64>) {
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                self.f64(m[(r, c)]);
            }
        }
    }
    pub(crate) fn activation(&mut self, a: Activation) {
        self.u32(a.kind.code());
        self.f64(a.pre_scale);
    }
    pub(crate) fn mlp(&mut self, net: &Mlp) {
        let (vw, vb) = net.velocities();
        self.u64(net.layers().len());
        for (l, layer) in net.layers().iter().enumerate() {
            self.activation(layer.activation);
            self.u64(layer.outputs());
            self.u64(layer.inputs());
            self.row_major(&layer.weights);
            layer.bias.iter().for_each(|&v| self.f64(v));
            self.row_major(&vw[l]);
            vb[l].iter().for_each(|&v| self.f64(v));
        }
    }
}

pub(crate) struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    /// Reader over `bytes` after checking they start with `magic`.
    pub(crate) fn open(bytes: &'a [u8], magic: &[u8; 8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(8).ok() != Some(&magic[..]) {
            return Err(Error::Checkpoint("bad magic".into()));
        }
        Ok(r)
    }

    /// Fails unless every byte was consumed.
    pub(crate) fn finish(self) -> Result<()> {
        if self.pos != self.bytes.len() {
            return Err(Error::Checkpoint(format!(
                "{} trailing bytes",
                self.bytes.len() - self.pos
            )));
        }
        Ok(())
    }

    pub(crate) fn take(&mut self, n: usize) -> Result<&[u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::Checkpoint(format!("truncated at byte {}", self.pos)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }
    pub(crate) fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(
            self.take(4)?.try_into().expect("4 bytes"),
        ))
    }
    pub(crate) fn u64(&mut self) -> Result<usize> {
        let v = u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes"));
        usize::try_from(v).map_err(|_| Error::Checkpoint(format!("size {v} too large")))
    }
    pub(crate) fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(
            self.take(8)?.try_into().expect("8 bytes"),
        ))
    }
    pub(crate) fn vector(&mut self, n: usize) -> Result<DVector<f64>> {
        self.check_remaining(n)?;
        let v: Result<Vec<f64>> = (0..n).map(|_| self.f64()).collect();
        Ok(DVector::from_vec(v?))
    }
    pub(crate) fn row_major(&mut self, rows: usize, cols: usize) -> Result<DMatrix<f64>> {
        let n = rows
            .checked_mul(cols)
            .ok_or_else(|| Error::Checkpoint("dimension overflow".into()))?;
        self.check_remaining(n)?;
        let v: Result<Vec<f64>> = (0..n).map(|_| self.f64()).collect();
        Ok(DMatrix::from_row_slice(rows, cols, &v?))
    }
    pub(crate) fn check_remaining(&self, floats: usize) -> Result<()> {
        if floats.saturating_mul(8) > self.bytes.len() - self.pos {
            return Err(Error::Checkpoint(format!("truncated at byte {}", self.pos)));
        }
        Ok(())
    }
    pub(crate) fn activation(&mut self) -> Result<Activation> {
        let code = self.u32()?;
        let kind = ActivationKind::from_code(code)
            .ok_or_else(|| Error::Checkpoint(format!("unknown activation code {code}")))?;
        let scale = self.f64()?;
        Activation::new(kind, scale).map_err(|e| Error::Checkpoint(e.to_string()))
    }
    pub(crate) fn mlp(&mut self) -> Result<Mlp> {
        let count = self.u64()?;
        let mut layers = Vec::new();
        let mut vw = Vec::new();
        let mut vb = Vec::new();
        for _ in 0..count {
            let activation = self.activation()?;
            let out = self.u64()?;
            let inp = self.u64()?;
            let weights = self.row_major(out, inp)?;
            let bias = self.vector(out)?;
            vw.push(self.row_major(out, inp)?);
            vb.push(self.vector(out)?);
            layers.push(Dense {
                weights,
                bias,
                activation,
            });
        }
        let mut net = Mlp::new(layers).map_err(|e| Error::Checkpoint(e.to_string()))?;
        net.set_velocities(vw, vb);
        Ok(net)
    }
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer(MAGIC.to_vec());
        match self {
            Checkpoint::Glm(g) => {
                w.u32(1);
                w.activation(g.activation);
                w.u64(g.dim());
                g.weights.iter().for_each(|&v| w.f64(v));
                g.velocity.iter().for_each(|&v| w.f64(v));
            }
            Checkpoint::Mlp(m) => {
                w.u32(2);
                w.mlp(m);
            }
            Checkpoint::Ensemble(members) => {
                w.u32(3);
                w.u64(members.len());
                members.iter().for_each(|m| w.mlp(m));
            }
        }
        w.0
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::open(bytes, MAGIC)?;
        let ckpt = match r.u32()? {
            1 => {
                let activation = r.activation()?;
                let k = r.u64()?;
                let weights = r.vector(k)?;
                let velocity = r.vector(k)?;
                let mut g = Glm::new(weights, activation);
                g.velocity = velocity;
                Checkpoint::Glm(g)
            }
            2 => Checkpoint::Mlp(r.mlp()?),
            3 => {
                let n = r.u64()?;
                let members: Result<Vec<Mlp>> = (0..n).map(|_| r.mlp()).collect();
                Checkpoint::Ensemble(members?)
            }
            other => return Err(Error::Checkpoint(format!("unknown kind {other}"))),
        };
        r.finish()?;
        Ok(ckpt)
    }
}

pub fn save_checkpoint(ckpt: &Checkpoint, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, ckpt.to_bytes()).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Checkpoint::from_bytes(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::TrainConfig;
    use crate::rng::Stream;

    fn trained_mlp(seed: u64) -> Mlp {
        let mut rng = Stream::new(seed);
        let mut net = Mlp::readout(4, 6, 1, 3, Activation::RELU, &mut rng);
        let x = DMatrix::from_fn(4, 8, |_, _| rng.normal());
        let y = DMatrix::from_fn(3, 8, |_, _| rng.normal());
        net.train_session(&x, &y, &TrainConfig::default(), &mut rng)
            .unwrap();
        net
    }

    #[test]
    fn round_trips_every_kind() {
        let mut rng = Stream::new(9);
        let sig = Activation::new(ActivationKind::Sigmoid, 1000.0).unwrap();
        let mut g = Glm::random(5, sig, &mut rng);
        g.velocity[2] = 0.25;
        for ckpt in [
            Checkpoint::Glm(g),
            Checkpoint::Mlp(trained_mlp(1)),
            Checkpoint::Ensemble(vec![trained_mlp(2), trained_mlp(3)]),
        ] {
            let bytes = ckpt.to_bytes();
            assert_eq!(&bytes[..8], MAGIC);
            assert_eq!(Checkpoint::from_bytes(&bytes).unwrap(), ckpt);
        }
    }

    #[test]
    fn glm_layout_is_flat() {
        let g = Glm::new(DVector::from_vec(vec![1.5, -2.0]), Activation::RELU);
        let bytes = Checkpoint::Glm(g).to_bytes();
        assert_eq!(bytes.len(), 8 + 4 + 4 + 8 + 8 + 4 * 8);
        assert_eq!(&bytes[8..12], &1u32.to_le_bytes());
        assert_eq!(&bytes[12..16], &1u32.to_le_bytes());
        assert_eq!(&bytes[32..40], &1.5f64.to_le_bytes());
    }

    #[test]
    fn corrupt_inputs_are_rejected() {
        let bytes = Checkpoint::Mlp(trained_mlp(4)).to_bytes();
        assert!(Checkpoint::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(Checkpoint::from_bytes(&extra).is_err());
        let mut bad = bytes;
        bad[0] = b'X';
        assert!(matches!(
            Checkpoint::from_bytes(&bad),
            Err(Error::Checkpoint(_))
        ));
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.ckpt");
        let ckpt = Checkpoint::Mlp(trained_mlp(5));
        save_checkpoint(&ckpt, &path).unwrap();
        assert_eq!(load_checkpoint(&path).unwrap(), ckpt);
    }
}
