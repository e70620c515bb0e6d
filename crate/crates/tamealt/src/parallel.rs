//! Rayon driver for censuses. Work items are split into fixed chunks, so
//! the merged tally does not depend on the worker count.

use std::ops::Range;

use rayon::prelude::*;
use tamealt_core::census::{build_report, CensusError, CensusParams, CensusReport, StructureRecord, Tally};

pub const WORKERS_ENV: &str = "TAMEALT_WORKERS";

const CHUNK: u64 = 2048;

/// Worker count from `TAMEALT_WORKERS`, else the available parallelism.
pub fn worker_count() -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

fn pool(workers: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .expect("thread pool")
}

fn chunks(len: u64) -> Vec<Range<u64>> {
    (0..len.div_ceil(CHUNK))
        .map(|c| c * CHUNK..((c + 1) * CHUNK).min(len))
        .collect()
}

pub fn parallel_tally(params: &CensusParams, workers: usize) -> Result<Tally, CensusError> {
    let parts = pool(workers).install(|| {
        chunks(params.len())
            .into_par_iter()
            .map(|r| params.tally_range(r))
            .collect::<Result<Vec<_>, _>>()
    })?;
    Ok(parts.into_iter().fold(Tally::default(), Tally::merge))
}

pub fn parallel_census(params: &CensusParams, workers: usize) -> Result<CensusReport, CensusError> {
    Ok(build_report(params, parallel_tally(params, workers)?))
}

/// Examines every item and hands the records to `sink` in index order,
/// one batch at a time.
pub fn for_each_record<F>(params: &CensusParams, workers: usize, mut sink: F) -> Result<Tally, CensusError>
where
    F: FnMut(&StructureRecord),
{
    let pool = pool(workers);
    let mut tally = Tally::default();
    let all = chunks(params.len());
    for batch in all.chunks(64) {
        let records = pool.install(|| {
            batch
                .par_iter()
                .map(|r| r.clone().map(|i| params.examine(i)).collect::<Result<Vec<_>, _>>())
                .collect::<Result<Vec<_>, _>>()
        })?;
        for r in records.iter().flatten() {
            tally.record(r);
            sink(r);
        }
    }
    Ok(tally)
}

#[cfg(test)]
mod tests {
    use super::*;
    use tamealt_core::census::{run_census, CensusKind, Mode};
    use tamealt_core::operad::Signature;

    #[test]
    fn worker_count_does_not_change_results() {
        let sig = Signature::with_arities(&[2, 2]).unwrap();
        let params = CensusParams::new(
            CensusKind::Automorphisms,
            sig,
            2,
            3,
            Mode::Sampled { samples: 5000, seed: 3 },
        )
        .unwrap();
        let one = parallel_census(&params, 1).unwrap();
        let four = parallel_census(&params, 4).unwrap();
        assert_eq!(one, four);
        assert_eq!(one, run_census(&params).unwrap());
        let mut seen = 0;
        let t = for_each_record(&params, 3, |r| {
            assert_eq!(r.index, seen);
            seen += 1;
        })
        .unwrap();
        assert_eq!(t, one.tally);
    }
}
