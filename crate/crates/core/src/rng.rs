//! Counter-based random streams.
//!
//! A [`RngStream`] is a plain key `(seed, stream_id)`. Every draw it produces
//! is addressed by that key plus a position counter, so any draw can be
//! regenerated without replaying the ones before it. The keystream comes
//! from ChaCha8, which is counter-based: the seed selects the key, the stream
//! id selects the nonce and the position selects the block counter.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::sampling::UniformDraw;

/// Key of an independent random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    /// Derives the `index`-th child stream. Children of distinct parents or
    /// distinct indices get distinct stream ids (up to 64-bit collisions).
    pub fn split(&self, index: u64) -> RngStream {
        let id = splitmix64(self.stream_id ^ splitmix64(index.wrapping_add(0xA076_1D64_78BD_642F)));
        RngStream {
            seed: self.seed,
            stream_id: id,
        }
    }

    /// A generator positioned at the start of this stream.
    pub fn sampler(&self) -> Sampler {
        Sampler::new(*self)
    }

    /// Regenerates the `index`-th draw of length `len`, as produced by a
    /// fresh sampler calling [`Sampler::uniform_draw`] with the same length.
    pub fn draw_at(&self, index: u64, len: usize) -> UniformDraw {
        let mut s = self.sampler();
        // each f64 consumes one u64, i.e. two 32-bit keystream words
        s.rng.set_word_pos(u128::from(index) * len as u128 * 2);
        s.uniform_draw(len)
    }
}

/// Live generator for one [`RngStream`].
#[derive(Debug, Clone)]
pub struct Sampler {
    stream: RngStream,
    rng: ChaCha8Rng,
}

impl Sampler {
    pub fn new(stream: RngStream) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(stream.seed);
        rng.set_stream(stream.stream_id);
        Self { stream, rng }
    }

    /// Resumes a stream at a saved keystream position.
    pub fn resume(stream: RngStream, word_pos: u128) -> Self {
        let mut s = Self::new(stream);
        s.rng.set_word_pos(word_pos);
        s
    }

    pub fn stream(&self) -> RngStream {
        self.stream
    }

    /// Current keystream position, in 32-bit words.
    pub fn word_pos(&self) -> u128 {
        self.rng.get_word_pos()
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        self.rng.gen::<f64>()
    }

    #[inline]
    pub fn fill_uniform(&mut self, out: &mut [f64]) {
        for x in out.iter_mut() {
            *x = self.rng.gen::<f64>();
        }
    }

    pub fn uniform_draw(&mut self, len: usize) -> UniformDraw {
        let mut values = vec![0.0; len];
        self.fill_uniform(&mut values);
        UniformDraw::from_trusted(values)
    }

    /// Standard exponential variate by inversion.
    #[inline]
    pub fn exp1(&mut self) -> f64 {
        -(1.0 - self.uniform()).ln()
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform index in `0..n`.
    pub fn index(&mut self, n: usize) -> usize {
        self.rng.gen_range(0..n)
    }
}
