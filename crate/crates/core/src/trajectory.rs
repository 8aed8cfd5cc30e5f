//! Stored run output: snapshots at requested times plus the per-step time
//! series of every measured functional.

use crate::diagnostics::DiagnosticsRecord;
use crate::grid::State;

/// Run metadata attached to every trajectory.
#[derive(Clone, Debug, Default)]
pub struct RunMeta {
    pub steps: u64,
    pub wall_seconds: f64,
    /// FNV-1a digest of the canonical config string.
    pub config_digest: u64,
    /// Mass of the exponential kernel beyond the gap between the datum
    /// support and the nearest boundary (truncated runs only).
    pub kernel_tail_mass: Option<f64>,
}

/// Snapshots (strictly increasing times, the t = 0 datum first) and the
/// per-step diagnostics series.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub snapshots: Vec<(f64, State)>,
    pub series: Vec<DiagnosticsRecord>,
    /// Set when the time step collapsed; the run is truncated there.
    pub singular_at: Option<f64>,
    pub meta: RunMeta,
}

impl Trajectory {
    pub fn snapshot_times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|(t, _)| *t).collect()
    }

    pub fn final_state(&self) -> &State {
        &self.snapshots.last().expect("trajectory has snapshots").1
    }
}

pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

/// Captures requested snapshot times by linear interpolation between the two
/// integration steps that bracket each time.
pub(crate) struct SnapshotCollector {
    times: Vec<f64>,
    next: usize,
    pub out: Vec<(f64, State)>,
}

impl SnapshotCollector {
    pub fn new(times: &[f64], initial: &State) -> Self {
        SnapshotCollector {
            times: times.to_vec(),
            next: 0,
            out: vec![(0.0, initial.clone())],
        }
    }

    pub fn done(&self) -> bool {
        self.next >= self.times.len()
    }

    pub fn offer(&mut self, t_prev: f64, u_prev: &[f64], t_new: f64, u_new: &[f64]) {
        let slack = 1e-12 * t_new.abs().max(1.0);
        while self.next < self.times.len() && self.times[self.next] <= t_new + slack {
            let ts = self.times[self.next];
            let theta = if t_new > t_prev {
                ((ts - t_prev) / (t_new - t_prev)).clamp(0.0, 1.0)
            } else {
                1.0
            };
            let u = u_prev
                .iter()
                .zip(u_new)
                .map(|(a, b)| a + theta * (b - a))
                .collect();
            self.out.push((ts, State { u, t: ts }));
            self.next += 1;
        }
    }
}
