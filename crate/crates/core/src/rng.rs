//! Counter-based random streams.
//!
//! Every random draw in the crate comes from a [`Stream`] backed by the
//! Philox4x32-10 block function. A stream is identified by a 64-bit key and
//! a 64-bit stream id; its output is the concatenation of the Philox blocks
//! for counters `(i_lo, i_hi, id_lo, id_hi)`, `i = 0, 1, 2, ...`, each block
//! read as four little-endian `u32` words.
//!
//! Seeding hierarchy: an experiment seed is turned into child seeds with
//! [`derive_seed`], one level per label (run, member, purpose). Because the
//! derivation is itself a Philox evaluation, any language with a Philox
//! implementation reproduces the same integer streams.
//!
//! Floating-point draws use the top 53 bits of a `u64` built as
//! `(w1 << 32) | w0`: `u = (x >> 11) * 2^-53`, so `u ∈ [0, 1)`.

const PHILOX_M0: u32 = 0xD251_1F53;
const PHILOX_M1: u32 = 0xCD9E_8D57;
const PHILOX_W0: u32 = 0x9E37_79B9;
const PHILOX_W1: u32 = 0xBB67_AE85;

/// One Philox4x32 evaluation with 10 rounds.
pub fn philox4x32_10(counter: [u32; 4], key: [u32; 2]) -> [u32; 4] {
    let mut ctr = counter;
    let mut k = key;
    for round in 0..10 {
        if round > 0 {
            k[0] = k[0].wrapping_add(PHILOX_W0);
            k[1] = k[1].wrapping_add(PHILOX_W1);
        }
        let p0 = u64::from(PHILOX_M0) * u64::from(ctr[0]);
        let p1 = u64::from(PHILOX_M1) * u64::from(ctr[2]);
        let (hi0, lo0) = ((p0 >> 32) as u32, p0 as u32);
        let (hi1, lo1) = ((p1 >> 32) as u32, p1 as u32);
        ctr = [hi1 ^ ctr[1] ^ k[0], lo1, hi0 ^ ctr[3] ^ k[1], lo0];
    }
    ctr
}

fn split(x: u64) -> (u32, u32) {
    (x as u32, (x >> 32) as u32)
}

/// Derives a child seed from `parent` and a label. Labels are usually small
/// integers (run index, member index) combined with a purpose tag.
pub fn derive_seed(parent: u64, label: u64, tag: u32) -> u64 {
    let (k0, k1) = split(parent);
    let (l0, l1) = split(label);
    let out = philox4x32_10([l0, l1, tag, 0x5EED_0001], [k0, k1]);
    u64::from(out[0]) | (u64::from(out[1]) << 32)
}

/// Purpose tags used with [`derive_seed`]. Fixed so logs stay comparable.
pub mod tag {
    pub const RUN: u32 = 1;
    pub const MEMBER: u32 = 2;
    pub const INIT: u32 = 3;
    pub const SHUFFLE: u32 = 4;
    pub const SAMPLE: u32 = 5;
    pub const CORPUS: u32 = 6;
    pub const NETWORK: u32 = 7;
    pub const CROP: u32 = 8;
    pub const PERMUTATION: u32 = 9;
    pub const POOL: u32 = 10;
    pub const NOISE: u32 = 11;
}

/// Complete position of a [`Stream`], for checkpoints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StreamState {
    pub key: [u32; 2],
    pub id: [u32; 2],
    /// Next block counter.
    pub block: u64,
    pub buf: [u32; 4],
    /// Words of `buf` already consumed, 0 to 4.
    pub pos: u32,
    pub spare_normal: Option<f64>,
}

/// A deterministic random stream.
#[derive(Debug, Clone, PartialEq)]
pub struct Stream {
    key: [u32; 2],
    id: [u32; 2],
    block: u64,
    buf: [u32; 4],
    pos: usize,
    spare_normal: Option<f64>,
}

impl Stream {
    pub fn new(seed: u64) -> Self {
        Self::with_id(seed, 0)
    }

    pub fn with_id(seed: u64, id: u64) -> Self {
        let (k0, k1) = split(seed);
        let (i0, i1) = split(id);
        Stream {
            key: [k0, k1],
            id: [i0, i1],
            block: 0,
            buf: [0; 4],
            pos: 4,
            spare_normal: None,
        }
    }

    pub fn state(&self) -> StreamState {
        StreamState {
            key: self.key,
            id: self.id,
            block: self.block,
            buf: self.buf,
            pos: self.pos as u32,
            spare_normal: self.spare_normal,
        }
    }

    /// Stream continuing exactly where `state` was taken; `None` if `pos > 4`.
    pub fn from_state(state: StreamState) -> Option<Self> {
        (state.pos <= 4).then_some(Stream {
            key: state.key,
            id: state.id,
            block: state.block,
            buf: state.buf,
            pos: state.pos as usize,
            spare_normal: state.spare_normal,
        })
    }

    /// Child stream for `(label, tag)`; the parent is not advanced.
    pub fn child(&self, label: u64, tag: u32) -> Stream {
        let seed = u64::from(self.key[0]) | (u64::from(self.key[1]) << 32);
        Stream::new(derive_seed(seed, label, tag))
    }

    pub fn next_u32(&mut self) -> u32 {
        if self.pos == 4 {
            let (b0, b1) = split(self.block);
            self.buf = philox4x32_10([b0, b1, self.id[0], self.id[1]], self.key);
            self.block = self.block.wrapping_add(1);
            self.pos = 0;
        }
        let w = self.buf[self.pos];
        self.pos += 1;
        w
    }

    pub fn next_u64(&mut self) -> u64 {
        let lo = u64::from(self.next_u32());
        let hi = u64::from(self.next_u32());
        lo | (hi << 32)
    }

    /// Uniform in `[0, 1)` with 53 random mantissa bits.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Uniform integer in `[0, n)` by rejection on the largest multiple of `n`.
    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0, "below(0)");
        let n = n as u64;
        let zone = u64::MAX - (u64::MAX % n);
        loop {
            let x = self.next_u64();
            if x < zone {
                return (x % n) as usize;
            }
        }
    }

    /// Standard normal via Box-Muller; the second variate is cached.
    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.spare_normal = Some(r * theta.sin());
        r * theta.cos()
    }

    /// Fisher-Yates, iterating from the back.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }

    /// `k` distinct values from `0..n`, in draw order (partial Fisher-Yates).
    pub fn sample_distinct(&mut self, n: usize, k: usize) -> Vec<usize> {
        assert!(k <= n, "cannot draw {k} distinct values from {n}");
        let mut pool: Vec<usize> = (0..n).collect();
        for i in 0..k {
            let j = i + self.below(n - i);
            pool.swap(i, j);
        }
        pool.truncate(k);
        pool
    }
}
