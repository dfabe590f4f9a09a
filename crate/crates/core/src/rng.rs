//! Named, independent random substreams derived from one master seed.
//!
//! Every stream is a ChaCha8 generator keyed by the master seed with a
//! distinct 64-bit stream id, so a drop's geometry, shadowing, fading and
//! scheduler draws never alias each other or any other drop's.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Per-drop purposes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DropStream {
    Geometry = 0,
    Shadowing = 1,
    Fading = 2,
    Scheduler = 3,
    /// Fast fading on interfering links, kept apart from serving-link fading so
    /// scheduling policies see identical serving channels on the same seed.
    InterferenceFading = 4,
}

const ANALYSIS_BIT: u64 = 1 << 63;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Streams {
    master_seed: u64,
}

impl Streams {
    pub fn new(master_seed: u64) -> Self {
        Self { master_seed }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    fn stream(&self, id: u64) -> SimRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(id);
        rng
    }

    pub fn drop_stream(&self, drop: u64, purpose: DropStream) -> SimRng {
        assert!(drop < (1 << 55), "drop index out of range");
        self.stream((drop << 4) | purpose as u64)
    }

    /// Streams outside the per-drop space (bootstrap resamples, test harnesses).
    /// `domain` separates independent consumers, `index` enumerates within one.
    pub fn analysis_stream(&self, domain: u16, index: u64) -> SimRng {
        assert!(index < (1 << 47), "analysis index out of range");
        self.stream(ANALYSIS_BIT | (u64::from(domain) << 47) | index)
    }
}
