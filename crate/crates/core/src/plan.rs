//! Work division for the data-parallel engine.

use alloc::vec::Vec;
use core::ops::Range;

use crate::accum::ExactSum;
use crate::error::{Error, Result};
use crate::types::CellTable;

/// Contiguous, ordered, disjoint index ranges covering `0..M`; worker `ρ`
/// owns `ranges()[ρ]`.
///
/// The first `M mod P` workers get one extra vector. With more workers than
/// vectors the trailing ranges are empty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChunkPlan {
    ranges: Vec<Range<usize>>,
}

impl ChunkPlan {
    /// Splits `total` vectors over `workers` workers.
    pub fn new(total: usize, workers: usize) -> Result<Self> {
        if total == 0 {
            return Err(Error::Empty("training set"));
        }
        if workers == 0 {
            return Err(Error::InvalidConfig("worker count must be at least 1"));
        }
        let base = total / workers;
        let extra = total % workers;
        let mut start = 0;
        let ranges = (0..workers)
            .map(|w| {
                let len = base + usize::from(w < extra);
                let r = start..start + len;
                start += len;
                r
            })
            .collect();
        Ok(Self { ranges })
    }

    /// Worker ranges in worker order.
    pub fn ranges(&self) -> &[Range<usize>] {
        &self.ranges
    }

    /// Number of workers.
    pub fn workers(&self) -> usize {
        self.ranges.len()
    }

    /// Number of vectors covered.
    pub fn total(&self) -> usize {
        self.ranges.last().map_or(0, |r| r.end)
    }
}

/// Serial round-robin ownership of codevectors during updation: worker `φ`
/// recomputes codevector `c` iff `c mod P == φ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UpdateAssignment {
    workers: usize,
}

impl UpdateAssignment {
    /// Assignment over `workers` workers (at least 1).
    pub fn new(workers: usize) -> Result<Self> {
        if workers == 0 {
            return Err(Error::InvalidConfig("worker count must be at least 1"));
        }
        Ok(Self { workers })
    }

    /// Number of workers.
    pub fn workers(&self) -> usize {
        self.workers
    }

    /// The worker that updates codevector `index`.
    #[inline]
    pub fn owner(&self, index: usize) -> usize {
        index % self.workers
    }

    /// Codevector indices owned by `worker` in a codebook of `size` entries,
    /// ascending.
    pub fn owned(&self, worker: usize, size: usize) -> impl Iterator<Item = usize> {
        (worker..size).step_by(self.workers)
    }
}

/// Master-side integration: concatenates partial cell tables in worker order
/// and sums the per-worker distortions in ascending worker index.
///
/// `expected_total` is the training-set size; the partials must tile it.
pub fn integrate(
    partials: &[CellTable],
    distortions: &[ExactSum],
    expected_total: usize,
) -> Result<(CellTable, ExactSum)> {
    if partials.len() != distortions.len() {
        return Err(Error::PlanViolation("one distortion per partial table is required"));
    }
    let covered: usize = partials.iter().map(|p| p.len()).sum();
    if covered < expected_total {
        return Err(Error::PlanViolation("partial tables leave a gap"));
    }
    if covered > expected_total {
        return Err(Error::PlanViolation("partial tables overlap"));
    }
    let mut cells = Vec::with_capacity(covered);
    for p in partials {
        cells.extend_from_slice(p.as_slice());
    }
    let total: ExactSum = distortions.iter().collect();
    Ok((CellTable::from_indices(cells), total))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn sizes(plan: &ChunkPlan) -> Vec<usize> {
        plan.ranges().iter().map(|r| r.len()).collect()
    }

    #[test]
    fn partition_examples() {
        assert_eq!(sizes(&ChunkPlan::new(2000, 4).unwrap()), vec![500; 4]);
        assert_eq!(sizes(&ChunkPlan::new(10, 4).unwrap()), vec![3, 3, 2, 2]);
        let whole = ChunkPlan::new(7, 1).unwrap();
        assert_eq!((whole.ranges().len(), whole.ranges()[0].clone()), (1, 0..7));
        assert_eq!(sizes(&ChunkPlan::new(2, 4).unwrap()), vec![1, 1, 0, 0]);
        assert!(ChunkPlan::new(0, 2).is_err());
        assert!(ChunkPlan::new(3, 0).is_err());
    }

    #[test]
    fn integrate_examples() {
        let mut d0 = ExactSum::new();
        d0.add(4.5);
        let mut d1 = ExactSum::new();
        d1.add(6.5);
        let parts = [CellTable::from_indices(vec![1, 1]), CellTable::from_indices(vec![0, 0])];
        let (ct, td) = integrate(&parts, &[d0.clone(), d1], 4).unwrap();
        assert_eq!(ct.as_slice(), &[1, 1, 0, 0]);
        assert_eq!(td.value(), 11.0);

        let (ct, td) = integrate(&parts[..1], &[d0.clone()], 2).unwrap();
        assert_eq!(ct.as_slice(), &[1, 1]);
        assert_eq!(td.value(), 4.5);

        let zero = [ExactSum::new(), ExactSum::new()];
        assert_eq!(integrate(&parts, &zero, 4).unwrap().1.value(), 0.0);
    }

    #[test]
    fn integrate_rejects_bad_coverage() {
        let parts = [CellTable::from_indices(vec![1, 1]), CellTable::from_indices(vec![0])];
        let d = [ExactSum::new(), ExactSum::new()];
        assert!(matches!(integrate(&parts, &d, 4), Err(Error::PlanViolation(_))));
        assert!(matches!(integrate(&parts, &d, 2), Err(Error::PlanViolation(_))));
        assert!(matches!(integrate(&parts, &d[..1], 3), Err(Error::PlanViolation(_))));
    }

    #[test]
    fn round_robin_owners() {
        let a = UpdateAssignment::new(3).unwrap();
        assert_eq!(a.owned(1, 8).collect::<Vec<_>>(), vec![1, 4, 7]);
        assert_eq!(a.owner(7), 1);
        let a = UpdateAssignment::new(8).unwrap();
        assert_eq!(a.owned(5, 4).count(), 0);
    }

    proptest! {
        #[test]
        fn plan_tiles_and_balances(m in 1usize..5000, p in 1usize..64) {
            let plan = ChunkPlan::new(m, p).unwrap();
            prop_assert_eq!(plan.workers(), p);
            let mut next = 0;
            for r in plan.ranges() {
                prop_assert_eq!(r.start, next);
                next = r.end;
            }
            prop_assert_eq!(next, m);
            let s = sizes(&plan);
            let (lo, hi) = (s.iter().min().unwrap(), s.iter().max().unwrap());
            prop_assert!(hi - lo <= 1);
            prop_assert!(*lo == m / p && *hi == m.div_ceil(p));
        }

        #[test]
        fn every_codevector_has_one_owner(s in 1usize..300, p in 1usize..40) {
            let a = UpdateAssignment::new(p).unwrap();
            let mut seen = vec![0usize; s];
            for w in 0..p {
                for c in a.owned(w, s) {
                    prop_assert_eq!(a.owner(c), w);
                    seen[c] += 1;
                }
            }
            prop_assert!(seen.iter().all(|&n| n == 1));
        }
    }
}
