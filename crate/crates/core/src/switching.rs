//! Piecewise-constant switching schedules and the standing assumptions on them.
//!
//! A schedule is a list of segments `(tau_k, matrix)` played from `t0`, either
//! once or repeated forever. Segment `k` occupies `[t_k, t_{k+1})` with
//! `t_{k+1} - t_k = tau_k`, so queries are right-continuous at switch instants.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::DirectedGraph;
use crate::matrix::InteractionMatrix;

/// One dwell interval of a schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Segment {
    pub dwell: f64,
    pub matrix: usize,
}

/// Lower and upper dwell-time bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DwellBounds {
    pub lower: f64,
    pub upper: f64,
}

/// A resolved segment: global index, time span and active matrix.
#[derive(Debug, Clone, Copy)]
pub struct SegmentView<'a> {
    pub index: usize,
    pub start: f64,
    pub end: f64,
    pub matrix_index: usize,
    pub matrix: &'a InteractionMatrix,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SwitchingSchedule {
    pool: Vec<InteractionMatrix>,
    segments: Vec<Segment>,
    periodic: bool,
    t0: f64,
    /// `offsets[k]` is `t_k - t0` within one pass; has `segments.len() + 1` entries.
    #[serde(skip)]
    offsets: Vec<f64>,
}

impl SwitchingSchedule {
    pub fn new(
        pool: Vec<InteractionMatrix>,
        segments: Vec<Segment>,
        periodic: bool,
        t0: f64,
    ) -> Result<Self> {
        if segments.is_empty() || pool.is_empty() {
            return Err(Error::EmptySchedule);
        }
        let n = pool[0].n();
        for (index, m) in pool.iter().enumerate() {
            if m.n() != n {
                return Err(Error::PoolDimensionMismatch {
                    index,
                    expected: n,
                    actual: m.n(),
                });
            }
        }
        for (k, seg) in segments.iter().enumerate() {
            if !(seg.dwell > 0.0 && seg.dwell.is_finite()) {
                return Err(Error::NonPositiveDwell {
                    segment: k,
                    dwell: seg.dwell,
                });
            }
            if seg.matrix >= pool.len() {
                return Err(Error::UnknownMatrix {
                    segment: k,
                    index: seg.matrix,
                });
            }
        }
        let offsets = compensated_prefix_sums(segments.iter().map(|s| s.dwell));
        Ok(Self {
            pool,
            segments,
            periodic,
            t0,
            offsets,
        })
    }

    /// Cycles through `pool` in order, matrix `i` held for `dwells[i]`, forever.
    pub fn cyclic(pool: Vec<InteractionMatrix>, dwells: &[f64]) -> Result<Self> {
        if dwells.len() != pool.len() {
            return Err(Error::DimensionMismatch {
                expected: pool.len(),
                actual: dwells.len(),
            });
        }
        let segments = dwells
            .iter()
            .enumerate()
            .map(|(matrix, &dwell)| Segment { dwell, matrix })
            .collect();
        Self::new(pool, segments, true, 0.0)
    }

    /// `C(t) = matrix` for all `t`, with nominal switch instants every `dwell`.
    pub fn constant(matrix: InteractionMatrix, dwell: f64) -> Result<Self> {
        Self::cyclic(vec![matrix], &[dwell])
    }

    pub fn with_start(mut self, t0: f64) -> Self {
        self.t0 = t0;
        self
    }

    pub fn n(&self) -> usize {
        self.pool[0].n()
    }

    pub fn pool(&self) -> &[InteractionMatrix] {
        &self.pool
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn is_periodic(&self) -> bool {
        self.periodic
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    /// Number of segments in one pass (the period, for periodic schedules).
    pub fn period_len(&self) -> usize {
        self.segments.len()
    }

    /// Duration of one pass through the segment list.
    pub fn period_duration(&self) -> f64 {
        self.offsets[self.segments.len()]
    }

    /// End of the schedule, `None` when it repeats forever.
    pub fn end_time(&self) -> Option<f64> {
        (!self.periodic).then(|| self.t0 + self.period_duration())
    }

    /// Switch instant `t_k`.
    pub fn switch_time(&self, k: usize) -> Result<f64> {
        let len = self.segments.len();
        if self.periodic {
            let cycles = (k / len) as f64;
            Ok(self.t0 + cycles * self.period_duration() + self.offsets[k % len])
        } else if k <= len {
            Ok(self.t0 + self.offsets[k])
        } else {
            Err(Error::WindowOutOfHorizon {
                start: k,
                window: 0,
                segments: len,
            })
        }
    }

    pub fn segment(&self, k: usize) -> Result<SegmentView<'_>> {
        let len = self.segments.len();
        if !self.periodic && k >= len {
            return Err(Error::WindowOutOfHorizon {
                start: k,
                window: 1,
                segments: len,
            });
        }
        let seg = self.segments[k % len];
        Ok(SegmentView {
            index: k,
            start: self.switch_time(k)?,
            end: self.switch_time(k + 1)?,
            matrix_index: seg.matrix,
            matrix: &self.pool[seg.matrix],
        })
    }

    /// Global index `k` of the segment with `t_k <= t < t_{k+1}`.
    pub fn segment_index_at(&self, t: f64) -> Result<usize> {
        let horizon_err = || Error::OutOfHorizon {
            t,
            start: self.t0,
            end: self.end_time().unwrap_or(f64::INFINITY),
        };
        if !(t >= self.t0) || !t.is_finite() {
            return Err(horizon_err());
        }
        let len = self.segments.len();
        let period = self.period_duration();
        let mut cycles = if self.periodic {
            ((t - self.t0) / period).floor() as usize
        } else {
            0
        };
        if self.periodic {
            // Correct the division against the exact switch-time arithmetic.
            while cycles > 0 && t < self.switch_time(cycles * len)? {
                cycles -= 1;
            }
            while t >= self.switch_time((cycles + 1) * len)? {
                cycles += 1;
            }
        } else if t >= self.t0 + period {
            return Err(horizon_err());
        }
        let base = self.t0 + cycles as f64 * period;
        let r = self.offsets[..len].partition_point(|&off| base + off <= t);
        Ok(cycles * len + r - 1)
    }

    /// The matrix `C(t)`.
    pub fn matrix_at(&self, t: f64) -> Result<&InteractionMatrix> {
        let k = self.segment_index_at(t)?;
        Ok(&self.pool[self.segments[k % self.segments.len()].matrix])
    }

    /// Smallest and largest dwell over one period (or the whole finite schedule).
    pub fn dwell_bounds(&self) -> DwellBounds {
        let (lower, upper) = self
            .segments
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), s| {
                (lo.min(s.dwell), hi.max(s.dwell))
            });
        DwellBounds { lower, upper }
    }

    /// Union of the support graphs of segments `start .. start + window`.
    pub fn union_graph(&self, start: usize, window: usize) -> Result<DirectedGraph> {
        if window == 0 {
            return Err(Error::EmptyWindow);
        }
        let len = self.segments.len();
        if !self.periodic && start + window > len {
            return Err(Error::WindowOutOfHorizon {
                start,
                window,
                segments: len,
            });
        }
        let mut g = DirectedGraph::empty(self.n());
        for k in start..start + window {
            let m = &self.pool[self.segments[k % len].matrix];
            g.union_with(&m.support_graph());
        }
        Ok(g)
    }

    /// Pool indices referenced by at least one segment, ascending.
    pub fn used_matrices(&self) -> Vec<usize> {
        let mut used: Vec<usize> = self.segments.iter().map(|s| s.matrix).collect();
        used.sort_unstable();
        used.dedup();
        used
    }

    /// Every used matrix is doubly stochastic with zero diagonal; returns the
    /// smallest nonzero weight across them.
    pub fn verify_weights(&self, tol: f64) -> Result<f64> {
        let mut gamma = f64::INFINITY;
        for idx in self.used_matrices() {
            let m = &self.pool[idx];
            if !m.is_doubly_stochastic_within(tol) {
                return Err(Error::NotDoublyStochastic { matrix_index: idx });
            }
            gamma = gamma.min(m.gamma());
        }
        Ok(gamma)
    }

    /// Every window of `window` consecutive segments has a strongly connected
    /// union graph. Periodic schedules check one period of window starts.
    pub fn verify_connectivity(&self, window: usize) -> bool {
        if window == 0 {
            return false;
        }
        let len = self.segments.len();
        let starts = if self.periodic {
            0..len
        } else if window <= len {
            0..len - window + 1
        } else {
            return false;
        };
        starts.into_iter().all(|l| {
            self.union_graph(l, window)
                .is_ok_and(|g| g.is_strongly_connected())
        })
    }

    /// Smallest window satisfying [`verify_connectivity`](Self::verify_connectivity),
    /// scanning up to `n * period_len`.
    pub fn smallest_window(&self) -> Option<usize> {
        let cap = self.n() * self.segments.len();
        (1..=cap).find(|&b| self.verify_connectivity(b))
    }
}

/// Prefix sums `[0, a0, a0+a1, ...]` with Neumaier compensation.
fn compensated_prefix_sums(values: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut out = vec![0.0];
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
        out.push(sum + comp);
    }
    out
}
