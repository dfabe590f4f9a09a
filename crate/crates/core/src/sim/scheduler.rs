use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchedulerPolicy {
    /// Pick the UE whose instantaneous SNR is highest relative to its own
    /// fading-free mean. With i.i.d. fading every UE wins about 1/N of slots.
    #[default]
    TemporalFairOpportunistic,
    RoundRobin,
}

/// One UE's channel as the scheduler sees it in a slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellEntry {
    pub instantaneous_snr: f64,
    pub mean_snr: f64,
}

/// Index into `cell` of the UE served this slot, or `None` if nobody is
/// schedulable. Entries with zero mean SNR (no usable link) are never picked.
pub fn schedule_slot<R: Rng + ?Sized>(
    cell: &[CellEntry],
    policy: SchedulerPolicy,
    slot_index: u64,
    rng: &mut R,
) -> Option<usize> {
    let eligible = cell.iter().enumerate().filter(|(_, e)| e.mean_snr > 0.0);
    match policy {
        SchedulerPolicy::TemporalFairOpportunistic => {
            argmax_random_tie(eligible.map(|(i, e)| (i, e.instantaneous_snr / e.mean_snr)), rng)
        }
        SchedulerPolicy::RoundRobin => {
            let idx: Vec<usize> = eligible.map(|(i, _)| i).collect();
            round_robin(idx.len(), slot_index).map(|k| idx[k])
        }
    }
}

#[inline]
pub(crate) fn round_robin(len: usize, slot_index: u64) -> Option<usize> {
    (len > 0).then(|| (slot_index % len as u64) as usize)
}

/// Argmax with uniform tie-breaking (reservoir over the tied set).
#[inline]
pub(crate) fn argmax_random_tie<R, I>(scores: I, rng: &mut R) -> Option<usize>
where
    R: Rng + ?Sized,
    I: IntoIterator<Item = (usize, f64)>,
{
    let mut best: Option<(usize, f64)> = None;
    let mut ties = 0u32;
    for (i, s) in scores {
        match best {
            Some((_, b)) if s < b => {}
            Some((_, b)) if s == b => {
                ties += 1;
                if rng.random_range(0..=ties) == 0 {
                    best = Some((i, s));
                }
            }
            _ => {
                best = Some((i, s));
                ties = 0;
            }
        }
    }
    best.map(|(i, _)| i)
}
