//! Resumable run state.
//!
//! Layout (little-endian, same conventions as model checkpoints):
//!
//! ```text
//! magic     8 bytes  "GDYRUN01"
//! logs      u64 L completed sessions, then L + 1 records (baseline first):
//!           u64 session, f64 mean, median, min, max, loss,
//!           u64 normal images, u64 special images
//! model     u64 byte length, then a model checkpoint
//! streams   u64 M, then M streams owned by the model
//! sampler   u64 N, N u64 unused ids in order, then a stream
//! shuffle   stream
//! noise     stream
//! trained   u64 T, T u64 ids
//!
//! stream:   u32 key[2], u32 id[2], u64 block, u32 buf[4], u32 pos,
//!           u32 has_spare, f64 spare (0 when absent)
//! ```

use std::path::Path;

use super::session::{IdSampler, SessionLog};
use crate::error::{Error, Result};
use crate::models::checkpoint::{Reader, Writer};
use crate::models::Checkpoint;
use crate::rng::{Stream, StreamState};

pub const RUN_MAGIC: &[u8; 8] = b"GDYRUN01";

/// Everything needed to continue a run after `logs.len()` sessions.
#[derive(Debug, Clone)]
pub struct RunState {
    pub baseline: SessionLog,
    pub logs: Vec<SessionLog>,
    pub model: Checkpoint,
    pub model_streams: Vec<Stream>,
    pub sampler: IdSampler,
    pub shuffle: Stream,
    pub noise: Stream,
    /// Ids already trained on, in training order.
    pub trained: Vec<usize>,
}

impl Writer {
    fn stream(&mut self, s: &Stream) {
        let st = s.state();
        st.key.iter().chain(&st.id).for_each(|&v| self.u32(v));
        self.0.extend_from_slice(&st.block.to_le_bytes());
        st.buf.iter().for_each(|&v| self.u32(v));
        self.u32(st.pos);
        self.u32(u32::from(st.spare_normal.is_some()));
        self.f64(st.spare_normal.unwrap_or(0.0));
    }

    fn ids(&mut self, ids: &[usize]) {
        self.u64(ids.len());
        ids.iter().for_each(|&i| self.u64(i));
    }

    fn log(&mut self, l: &SessionLog) {
        self.u64(l.session);
        for v in [l.mean_r2, l.median_r2, l.min_r2, l.max_r2, l.train_loss] {
            self.f64(v);
        }
        self.u64(l.normal_images);
        self.u64(l.special_images);
    }
}

impl Reader<'_> {
    fn stream(&mut self) -> Result<Stream> {
        let mut words = [0u32; 4];
        for w in &mut words {
            *w = self.u32()?;
        }
        let block = u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes"));
        let mut buf = [0u32; 4];
        for w in &mut buf {
            *w = self.u32()?;
        }
        let pos = self.u32()?;
        let has_spare = self.u32()?;
        let spare = self.f64()?;
        Stream::from_state(StreamState {
            key: [words[0], words[1]],
            id: [words[2], words[3]],
            block,
            buf,
            pos,
            spare_normal: (has_spare != 0).then_some(spare),
        })
        .ok_or_else(|| Error::Checkpoint(format!("stream position {pos} out of range")))
    }

    /// A count that must fit in the remaining bytes at `width` bytes each.
    fn count(&mut self, width: usize) -> Result<usize> {
        let n = self.u64()?;
        self.check_remaining(n.saturating_mul(width) / 8)?;
        Ok(n)
    }

    fn ids(&mut self) -> Result<Vec<usize>> {
        let n = self.count(8)?;
        (0..n).map(|_| self.u64()).collect()
    }

    fn log(&mut self) -> Result<SessionLog> {
        Ok(SessionLog {
            session: self.u64()?,
            mean_r2: self.f64()?,
            median_r2: self.f64()?,
            min_r2: self.f64()?,
            max_r2: self.f64()?,
            train_loss: self.f64()?,
            normal_images: self.u64()?,
            special_images: self.u64()?,
        })
    }
}

impl RunState {
    /// Completed sessions.
    pub fn sessions(&self) -> usize {
        self.logs.len()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer(RUN_MAGIC.to_vec());
        w.u64(self.logs.len());
        std::iter::once(&self.baseline)
            .chain(&self.logs)
            .for_each(|l| w.log(l));
        let model = self.model.to_bytes();
        w.u64(model.len());
        w.0.extend_from_slice(&model);
        w.u64(self.model_streams.len());
        self.model_streams.iter().for_each(|s| w.stream(s));
        let (remaining, rng) = self.sampler.parts();
        w.ids(remaining);
        w.stream(rng);
        w.stream(&self.shuffle);
        w.stream(&self.noise);
        w.ids(&self.trained);
        w.0
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::open(bytes, RUN_MAGIC)?;
        let sessions = r.count(8)?;
        let baseline = r.log()?;
        let logs = (0..sessions).map(|_| r.log()).collect::<Result<Vec<_>>>()?;
        let len = r.count(1)?;
        let model = Checkpoint::from_bytes(r.take(len)?)?;
        let m = r.count(8)?;
        let model_streams = (0..m).map(|_| r.stream()).collect::<Result<Vec<_>>>()?;
        let remaining = r.ids()?;
        let sampler = IdSampler::new(remaining, r.stream()?);
        let shuffle = r.stream()?;
        let noise = r.stream()?;
        let trained = r.ids()?;
        r.finish()?;
        Ok(RunState {
            baseline,
            logs,
            model,
            model_streams,
            sampler,
            shuffle,
            noise,
            trained,
        })
    }

    /// Writes to a sibling temporary file and renames it into place, so a
    /// crash never leaves a half-written state behind.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let tmp = path.with_extension("tmp");
        std::fs::write(&tmp, self.to_bytes()).map_err(|e| Error::io(&tmp, e))?;
        std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}
