//! Chunked on-disk cache of sample records.
//!
//! A sample set is identified by a tag string (model, config, seed, revision);
//! its chunks are stored as fixed-width little-endian records so interrupted
//! runs resume at the last complete chunk.

use std::fs;
use std::io::{Read, Write};
use std::path::PathBuf;

use bbmlab::batch::{derive_seed, run_indexed, BatchError, SampleRange};
use bbmlab::brw::{CensoredCount, CountStatus};

pub const CHUNK: u64 = 10_000;

pub trait Record: Sized + Send {
    const KIND: &'static str;
    const SIZE: usize;
    fn encode(&self, out: &mut Vec<u8>);
    fn decode(bytes: &[u8]) -> Self;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CountRecord {
    pub value: u64,
    pub status: CountStatus,
    pub pruned: u64,
    pub work: u64,
}

impl From<&CensoredCount> for CountRecord {
    fn from(c: &CensoredCount) -> Self {
        Self { value: c.value, status: c.status, pruned: c.pruned_count, work: c.work }
    }
}

pub fn status_code(s: CountStatus) -> u8 {
    match s {
        CountStatus::Exact => 0,
        CountStatus::CountCapped => 1,
        CountStatus::WorkCapped => 2,
    }
}

pub fn status_from(code: u8) -> CountStatus {
    match code {
        0 => CountStatus::Exact,
        1 => CountStatus::CountCapped,
        _ => CountStatus::WorkCapped,
    }
}

fn u64_at(b: &[u8], at: usize) -> u64 {
    u64::from_le_bytes(b[at..at + 8].try_into().unwrap())
}

impl Record for CountRecord {
    const KIND: &'static str = "counts";
    const SIZE: usize = 25;

    fn encode(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.value.to_le_bytes());
        out.push(status_code(self.status));
        out.extend_from_slice(&self.pruned.to_le_bytes());
        out.extend_from_slice(&self.work.to_le_bytes());
    }

    fn decode(b: &[u8]) -> Self {
        Self { value: u64_at(b, 0), status: status_from(b[8]), pruned: u64_at(b, 9), work: u64_at(b, 17) }
    }
}

/// A composed `N_x` sample with the `Z_x` of the same realization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ComposedRecord {
    pub count: CountRecord,
    pub z: u64,
}

impl Record for ComposedRecord {
    const KIND: &'static str = "composed";
    const SIZE: usize = 33;

    fn encode(&self, out: &mut Vec<u8>) {
        self.count.encode(out);
        out.extend_from_slice(&self.z.to_le_bytes());
    }

    fn decode(b: &[u8]) -> Self {
        Self { count: CountRecord::decode(&b[..25]), z: u64_at(b, 25) }
    }
}

/// `None` keeps everything in memory.
#[derive(Debug, Clone, Default)]
pub struct SampleCache {
    dir: Option<PathBuf>,
}

impl SampleCache {
    pub fn new(dir: Option<PathBuf>) -> Self {
        Self { dir }
    }

    pub fn dir(&self) -> Option<&PathBuf> {
        self.dir.as_ref()
    }

    fn load<R: Record>(&self, path: &PathBuf, expect: u64) -> Option<Vec<R>> {
        let mut bytes = Vec::new();
        fs::File::open(path).ok()?.read_to_end(&mut bytes).ok()?;
        if bytes.len() != expect as usize * R::SIZE {
            return None;
        }
        Some(bytes.chunks_exact(R::SIZE).map(R::decode).collect())
    }

    fn store<R: Record>(&self, path: &PathBuf, records: &[R]) -> std::io::Result<()> {
        let mut bytes = Vec::with_capacity(records.len() * R::SIZE);
        for r in records {
            r.encode(&mut bytes);
        }
        let tmp = path.with_extension("tmp");
        fs::File::create(&tmp)?.write_all(&bytes)?;
        fs::rename(&tmp, path)
    }

    /// Records for every index of `range`, from cache where possible.
    pub fn load_or_run<R, S, I, F>(
        &self,
        tag: &str,
        range: SampleRange,
        workers: usize,
        init: I,
        sample: F,
    ) -> Result<Vec<R>, BatchError>
    where
        R: Record,
        I: Fn() -> S + Sync + Send,
        F: Fn(&mut S, u64, &bbmlab::rng::RngStream) -> R + Sync + Send,
    {
        let fp = derive_seed(0, tag);
        if let Some(dir) = &self.dir {
            let _ = fs::create_dir_all(dir);
        }
        let mut all = Vec::with_capacity(range.len() as usize);
        for (k, chunk) in range.chunks(CHUNK).enumerate() {
            let path = self.dir.as_ref().map(|d| d.join(format!("{}-{fp:016x}-{k}.bin", R::KIND)));
            if let Some(recs) = path.as_ref().and_then(|p| self.load::<R>(p, chunk.len())) {
                all.extend(recs);
                continue;
            }
            let recs = run_indexed(chunk, workers, &init, &sample)?;
            if let Some(p) = &path {
                // a failed write only costs a recomputation later
                let _ = self.store(p, &recs);
            }
            all.extend(recs);
        }
        Ok(all)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn records_round_trip() {
        let c = CountRecord { value: 7, status: CountStatus::CountCapped, pruned: 3, work: 99 };
        let mut b = Vec::new();
        c.encode(&mut b);
        assert_eq!(b.len(), CountRecord::SIZE);
        assert_eq!(CountRecord::decode(&b), c);
        let z = ComposedRecord { count: c, z: 12 };
        let mut b = Vec::new();
        z.encode(&mut b);
        assert_eq!(b.len(), ComposedRecord::SIZE);
        assert_eq!(ComposedRecord::decode(&b), z);
    }

    #[test]
    fn cache_reuses_chunks() {
        let dir = tempfile::tempdir().unwrap();
        let cache = SampleCache::new(Some(dir.path().to_path_buf()));
        let range = SampleRange::new(1, 25_000);
        let f = |_: &mut (), i: u64, _: &bbmlab::rng::RngStream| CountRecord {
            value: i,
            status: CountStatus::Exact,
            pruned: 0,
            work: 1,
        };
        let a = cache.load_or_run("t", range, 1, || (), f).unwrap();
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 3);
        let b = cache
            .load_or_run("t", range, 1, || (), |_, _, _| -> CountRecord { panic!("should be cached") })
            .unwrap();
        assert_eq!(a, b);
    }
}
