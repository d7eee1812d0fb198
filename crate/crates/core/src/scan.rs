//! Streaming scan of `L(n) = Σ λ(k)` and `M(n) = Σ μ(k)` with resumable
//! checkpoints.

use std::fs;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::multiplicative::{SegmentSieve, SieveConfig, SignSegment, DEFAULT_SEGMENT_LEN};

pub const CHECKPOINT_FORMAT_VERSION: u32 = 1;

/// Summary of a completed scan over `[1, n_max]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScanReport {
    pub n_max: u64,
    #[serde(rename = "final_L")]
    pub final_l: i64,
    #[serde(rename = "final_M")]
    pub final_m: i64,
    /// Minimum of `L(n)` over `2 <= n <= n_max`.
    #[serde(rename = "min_L")]
    pub min_l: i64,
    /// Maximum of `L(n)` over `2 <= n <= n_max`.
    #[serde(rename = "max_L_on_range")]
    pub max_l_on_range: i64,
    /// Every `(n, L(n))` with `n >= 2` and `L(n) >= 0`, ascending.
    pub nonneg_events: Vec<(u64, i64)>,
    pub first_positive_n: Option<u64>,
}

impl ScanReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    /// `L(n)` if `n` is a recorded event.
    pub fn event_at(&self, n: u64) -> Option<i64> {
        self.nonneg_events
            .binary_search_by_key(&n, |e| e.0)
            .ok()
            .map(|i| self.nonneg_events[i].1)
    }

    /// The state at `next_n = n_max + 1`, from which the scan can be extended.
    pub fn to_checkpoint(&self) -> ScanCheckpoint {
        ScanCheckpoint {
            next_n: self.n_max + 1,
            running_l: self.final_l,
            running_m: self.final_m,
            nonneg_events: self.nonneg_events.clone(),
            format_version: CHECKPOINT_FORMAT_VERSION,
            min_l: Some(self.min_l),
            max_l: Some(self.max_l_on_range),
            first_positive_n: self.first_positive_n,
        }
    }

    /// Events CSV with header `n,L`.
    pub fn write_events_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "n,L")?;
        for (n, l) in &self.nonneg_events {
            writeln!(out, "{n},{l}")?;
        }
        Ok(())
    }
}

/// Scan state after all `n < next_n` have been consumed.
///
/// `min_L`, `max_L` and `first_positive_n` go beyond the minimal resume state
/// so that a resumed report matches an uninterrupted one exactly.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScanCheckpoint {
    pub next_n: u64,
    #[serde(rename = "running_L")]
    pub running_l: i64,
    #[serde(rename = "running_M")]
    pub running_m: i64,
    pub nonneg_events: Vec<(u64, i64)>,
    pub format_version: u32,
    #[serde(rename = "min_L")]
    pub min_l: Option<i64>,
    #[serde(rename = "max_L")]
    pub max_l: Option<i64>,
    pub first_positive_n: Option<u64>,
}

impl ScanCheckpoint {
    /// State after `n = 1`: `L(1) = M(1) = 1`.
    pub fn fresh() -> Self {
        Self {
            next_n: 2,
            running_l: 1,
            running_m: 1,
            nonneg_events: Vec::new(),
            format_version: CHECKPOINT_FORMAT_VERSION,
            min_l: None,
            max_l: None,
            first_positive_n: None,
        }
    }

    fn validate(&self) -> Result<()> {
        let corrupt = |m: &str| Err(Error::CheckpointCorrupt(m.to_string()));
        if self.next_n < 2 {
            return corrupt("next_n below 2");
        }
        if (self.running_l - self.next_n as i64 + 1) % 2 != 0 {
            return corrupt("running_L has the wrong parity");
        }
        if self.nonneg_events.windows(2).any(|w| w[0].0 >= w[1].0)
            || self
                .nonneg_events
                .iter()
                .any(|&(n, l)| n < 2 || n >= self.next_n || l < 0)
        {
            return corrupt("events out of order or out of range");
        }
        if self.min_l.is_some() != self.max_l.is_some() || self.min_l.is_some() != (self.next_n > 2)
        {
            return corrupt("extrema inconsistent with next_n");
        }
        Ok(())
    }
}

/// Serializes as one JSON line followed by `crc32=XXXXXXXX`.
pub fn write_checkpoint(cp: &ScanCheckpoint) -> Result<String> {
    let json = serde_json::to_string(cp)?;
    let crc = crc32fast::hash(json.as_bytes());
    Ok(format!("{json}\ncrc32={crc:08x}\n"))
}

pub fn read_checkpoint(bytes: &[u8]) -> Result<ScanCheckpoint> {
    let corrupt = |m: &str| Error::CheckpointCorrupt(m.to_string());
    let text = std::str::from_utf8(bytes).map_err(|_| corrupt("not UTF-8"))?;
    let body = text
        .strip_suffix('\n')
        .ok_or_else(|| corrupt("missing final newline"))?;
    let (json, footer) = body
        .rsplit_once('\n')
        .ok_or_else(|| corrupt("missing checksum line"))?;
    let stored = footer
        .strip_prefix("crc32=")
        .filter(|h| h.len() == 8)
        .and_then(|h| u32::from_str_radix(h, 16).ok())
        .ok_or_else(|| corrupt("malformed checksum line"))?;
    if crc32fast::hash(json.as_bytes()) != stored {
        return Err(corrupt("checksum mismatch"));
    }
    let value: serde_json::Value =
        serde_json::from_str(json).map_err(|e| corrupt(&e.to_string()))?;
    let found = value
        .get("format_version")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| corrupt("missing format_version"))?;
    if found != CHECKPOINT_FORMAT_VERSION as u64 {
        return Err(Error::CheckpointVersion {
            found: u32::try_from(found).unwrap_or(u32::MAX),
            expected: CHECKPOINT_FORMAT_VERSION,
        });
    }
    let cp: ScanCheckpoint = serde_json::from_value(value).map_err(|e| corrupt(&e.to_string()))?;
    cp.validate()?;
    Ok(cp)
}

/// Writes through a temporary file and a rename.
pub fn write_checkpoint_file(path: &Path, cp: &ScanCheckpoint) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, write_checkpoint(cp)?)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn read_checkpoint_file(path: &Path) -> Result<ScanCheckpoint> {
    read_checkpoint(&fs::read(path)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScanOptions {
    pub segment_len: usize,
    /// Sieving workers; 0 means the available parallelism.
    pub threads: usize,
    /// Emit a checkpoint whenever the scan passes a multiple of this.
    pub checkpoint_every: Option<u64>,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self {
            segment_len: DEFAULT_SEGMENT_LEN,
            threads: 0,
            checkpoint_every: None,
        }
    }
}

/// Notifications from [`scan_summatory_with`].
#[derive(Debug)]
pub enum ScanEvent<'a> {
    /// All `n <= scanned_to` consumed.
    Progress {
        scanned_to: u64,
        n_max: u64,
    },
    Checkpoint(&'a ScanCheckpoint),
}

struct Reducer {
    state: ScanCheckpoint,
}

impl Reducer {
    fn consume(&mut self, seg: &SignSegment) -> Result<()> {
        let s = &mut self.state;
        debug_assert_eq!(seg.lo(), s.next_n);
        let (mut l, mut m) = (s.running_l, s.running_m);
        let (mut lo_l, mut hi_l) = (s.min_l.unwrap_or(i64::MAX), s.max_l.unwrap_or(i64::MIN));
        let mut n = seg.lo();
        for (&dl, &dm) in seg.lambda_values().iter().zip(seg.mu_values()) {
            l += dl as i64;
            m += dm as i64;
            if (l ^ n as i64) & 1 != 0 || dl == 0 {
                return Err(Error::Domain(format!("parity check failed at n = {n}")));
            }
            lo_l = lo_l.min(l);
            hi_l = hi_l.max(l);
            if l >= 0 {
                s.nonneg_events.push((n, l));
                if l > 0 && s.first_positive_n.is_none() {
                    s.first_positive_n = Some(n);
                }
            }
            n += 1;
        }
        s.running_l = l;
        s.running_m = m;
        s.min_l = Some(lo_l);
        s.max_l = Some(hi_l);
        s.next_n = n;
        Ok(())
    }
}

fn thread_pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Domain(format!("cannot start worker pool: {e}")))
}

/// Sieves `[lo, hi]` in ascending segments, several at a time, and hands
/// them to `f` in order.
fn for_each_segment(
    lo: u64,
    hi: u64,
    opts: &ScanOptions,
    mut f: impl FnMut(&SignSegment) -> Result<()>,
) -> Result<()> {
    if lo > hi {
        return Ok(());
    }
    if opts.segment_len == 0 {
        return Err(Error::Domain("segment length must be positive".into()));
    }
    let sieve = SegmentSieve::new(
        SieveConfig {
            segment_len: opts.segment_len,
        },
        hi,
    );
    let pool = thread_pool(opts.threads)?;
    let batch = pool.current_num_threads().max(1) as u64;
    let seg = opts.segment_len as u64;
    let mut start = lo;
    while start <= hi {
        let ranges: Vec<(u64, u64)> = (0..batch)
            .map(|i| start.saturating_add(i * seg))
            .filter(|&a| a <= hi)
            .map(|a| (a, a.saturating_add(seg - 1).min(hi)))
            .collect();
        let segments: Vec<SignSegment> = pool.install(|| {
            ranges
                .par_iter()
                .map(|&(a, b)| sieve.sieve(a, b))
                .collect::<Result<_>>()
        })?;
        for s in &segments {
            f(s)?;
        }
        let last = ranges.last().map(|r| r.1).unwrap_or(hi);
        if last == hi {
            break;
        }
        start = last + 1;
    }
    Ok(())
}

/// Scans up to `n_max`, optionally resuming from `checkpoint`.
pub fn scan_summatory(n_max: u64, checkpoint: Option<ScanCheckpoint>) -> Result<ScanReport> {
    scan_summatory_with(n_max, checkpoint, &ScanOptions::default(), &mut |_| Ok(()))
}

pub fn scan_summatory_with(
    n_max: u64,
    checkpoint: Option<ScanCheckpoint>,
    opts: &ScanOptions,
    observer: &mut dyn FnMut(ScanEvent<'_>) -> Result<()>,
) -> Result<ScanReport> {
    if n_max < 2 {
        return Err(Error::Domain(format!("scan needs n_max >= 2, got {n_max}")));
    }
    let state = advance(n_max, checkpoint, opts, observer)?;
    Ok(ScanReport {
        n_max,
        final_l: state.running_l,
        final_m: state.running_m,
        min_l: state.min_l.unwrap_or(state.running_l),
        max_l_on_range: state.max_l.unwrap_or(state.running_l),
        nonneg_events: state.nonneg_events,
        first_positive_n: state.first_positive_n,
    })
}

/// Scans through `n_stop` and returns the state at `next_n = n_stop + 1`.
pub fn checkpoint_at(n_stop: u64, checkpoint: Option<ScanCheckpoint>) -> Result<ScanCheckpoint> {
    advance(n_stop, checkpoint, &ScanOptions::default(), &mut |_| Ok(()))
}

fn advance(
    n_stop: u64,
    checkpoint: Option<ScanCheckpoint>,
    opts: &ScanOptions,
    observer: &mut dyn FnMut(ScanEvent<'_>) -> Result<()>,
) -> Result<ScanCheckpoint> {
    let start = match checkpoint {
        Some(cp) => {
            if cp.format_version != CHECKPOINT_FORMAT_VERSION {
                return Err(Error::CheckpointVersion {
                    found: cp.format_version,
                    expected: CHECKPOINT_FORMAT_VERSION,
                });
            }
            cp.validate()?;
            cp
        }
        None => ScanCheckpoint::fresh(),
    };
    if start.next_n > n_stop.saturating_add(1) {
        return Err(Error::InvalidRange {
            lo: start.next_n,
            hi: n_stop,
        });
    }
    let mut reducer = Reducer { state: start };
    let lo = reducer.state.next_n;
    for_each_segment(lo, n_stop, opts, |seg| {
        let before = reducer.state.next_n - 1;
        reducer.consume(seg)?;
        let after = reducer.state.next_n - 1;
        observer(ScanEvent::Progress {
            scanned_to: after,
            n_max: n_stop,
        })?;
        if let Some(every) = opts.checkpoint_every.filter(|&e| e > 0) {
            if after / every > before / every {
                observer(ScanEvent::Checkpoint(&reducer.state))?;
            }
        }
        Ok(())
    })?;
    Ok(reducer.state)
}

/// Neumaier-compensated sum.
#[derive(Debug, Default, Clone, Copy)]
struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// `(1/ln N) · Σ_{2≤n≤N, L(n)<0} 1/n`.
pub fn log_density_negative(n_max: u64) -> Result<f64> {
    log_density_negative_with(n_max, &ScanOptions::default())
}

pub fn log_density_negative_with(n_max: u64, opts: &ScanOptions) -> Result<f64> {
    if n_max < 2 {
        return Err(Error::Domain(format!(
            "density needs n_max >= 2, got {n_max}"
        )));
    }
    let mut acc = CompensatedSum::default();
    let mut l = 1i64;
    for_each_segment(2, n_max, opts, |seg| {
        for (n, &dl) in (seg.lo()..).zip(seg.lambda_values()) {
            l += dl as i64;
            if l < 0 {
                acc.add(1.0 / n as f64);
            }
        }
        Ok(())
    })?;
    Ok(acc.value() / (n_max as f64).ln())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multiplicative::lambda_point;
    use proptest::prelude::*;

    /// L(n) for n <= len by point evaluation.
    fn l_oracle(len: u64) -> Vec<i64> {
        let mut out = vec![0i64];
        for n in 1..=len {
            let prev = *out.last().unwrap();
            out.push(prev + lambda_point(n).unwrap().value() as i64);
        }
        out
    }

    fn small_opts(seg: usize) -> ScanOptions {
        ScanOptions {
            segment_len: seg,
            threads: 1,
            checkpoint_every: None,
        }
    }

    #[test]
    fn ten() {
        let r = scan_summatory(10, None).unwrap();
        assert_eq!((r.final_l, r.final_m), (0, -1));
        assert_eq!(r.nonneg_events, vec![(2, 0), (4, 0), (6, 0), (10, 0)]);
        assert_eq!(r.first_positive_n, None);
        assert_eq!(r.min_l, -2);
        assert_eq!(r.max_l_on_range, 0);
    }

    #[test]
    fn nonpositive_up_to_1500() {
        let r = scan_summatory(1500, None).unwrap();
        assert_eq!(r.first_positive_n, None);
        assert!(r.max_l_on_range <= 0);
    }

    #[test]
    fn matches_point_oracle() {
        let l = l_oracle(3000);
        let r = scan_summatory_with(3000, None, &small_opts(97), &mut |_| Ok(())).unwrap();
        assert_eq!(r.final_l, l[3000]);
        let want: Vec<(u64, i64)> = (2..=3000u64)
            .filter(|&n| l[n as usize] >= 0)
            .map(|n| (n, l[n as usize]))
            .collect();
        assert_eq!(r.nonneg_events, want);
        assert_eq!(r.min_l, *l[2..].iter().min().unwrap());
    }

    #[test]
    fn segmentation_and_threads_do_not_matter() {
        let base = scan_summatory(200_000, None).unwrap();
        for (seg, threads) in [(1000, 1), (4099, 3), (1 << 16, 2)] {
            let opts = ScanOptions {
                segment_len: seg,
                threads,
                checkpoint_every: None,
            };
            assert_eq!(
                scan_summatory_with(200_000, None, &opts, &mut |_| Ok(())).unwrap(),
                base
            );
        }
    }

    #[test]
    fn fresh_checkpoint() {
        let cp = ScanCheckpoint::fresh();
        assert_eq!((cp.next_n, cp.running_l, cp.running_m), (2, 1, 1));
        assert_eq!(
            read_checkpoint(write_checkpoint(&cp).unwrap().as_bytes()).unwrap(),
            cp
        );
    }

    #[test]
    fn checkpoint_at_end_of_range() {
        let cp = checkpoint_at(100, None).unwrap();
        assert_eq!(cp.next_n, 101);
        let r = scan_summatory(100, Some(cp)).unwrap();
        assert_eq!(r, scan_summatory(100, None).unwrap());
        let cp = checkpoint_at(100, None).unwrap();
        assert!(scan_summatory(50, Some(cp.clone())).is_err());
        assert_eq!(scan_summatory(100, None).unwrap().to_checkpoint(), cp);
    }

    #[test]
    fn corrupted_checkpoints() {
        let cp = checkpoint_at(1000, None).unwrap();
        let text = write_checkpoint(&cp).unwrap();
        let truncated = &text.as_bytes()[..text.len() / 2];
        assert!(matches!(
            read_checkpoint(truncated),
            Err(Error::CheckpointCorrupt(_))
        ));
        let flipped = text.replacen("\"running_M\":", "\"running_M\":1", 1);
        assert!(matches!(
            read_checkpoint(flipped.as_bytes()),
            Err(Error::CheckpointCorrupt(_))
        ));
        assert!(read_checkpoint(b"").is_err());
    }

    #[test]
    fn version_mismatch() {
        let mut cp = checkpoint_at(10, None).unwrap();
        cp.format_version = 2;
        let text = write_checkpoint(&cp).unwrap();
        assert!(matches!(
            read_checkpoint(text.as_bytes()),
            Err(Error::CheckpointVersion {
                found: 2,
                expected: 1
            })
        ));
        assert!(matches!(
            scan_summatory(20, Some(cp)),
            Err(Error::CheckpointVersion { .. })
        ));
    }

    #[test]
    fn checkpoint_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("scan.ckpt");
        let cp = checkpoint_at(12_345, None).unwrap();
        write_checkpoint_file(&path, &cp).unwrap();
        assert_eq!(read_checkpoint_file(&path).unwrap(), cp);
    }

    #[test]
    fn observer_sees_checkpoints() {
        let opts = ScanOptions {
            segment_len: 1000,
            threads: 1,
            checkpoint_every: Some(2500),
        };
        let mut seen = Vec::new();
        let mut last = 0;
        let report = scan_summatory_with(10_000, None, &opts, &mut |ev| {
            match ev {
                ScanEvent::Progress { scanned_to, .. } => last = scanned_to,
                ScanEvent::Checkpoint(cp) => seen.push(cp.clone()),
            }
            Ok(())
        })
        .unwrap();
        assert_eq!(last, 10_000);
        assert_eq!(
            seen.iter().map(|c| c.next_n).collect::<Vec<_>>(),
            vec![3002, 5002, 8002, 10_001]
        );
        for cp in seen {
            assert_eq!(scan_summatory(10_000, Some(cp)).unwrap(), report);
        }
    }

    #[test]
    fn report_json_and_csv() {
        let r = scan_summatory(10, None).unwrap();
        let json = r.to_json().unwrap();
        assert!(json.contains("\"final_L\": 0"));
        assert!(json.contains("\"first_positive_n\": null"));
        assert_eq!(ScanReport::from_json(&json).unwrap(), r);
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["nonneg_events"][0], serde_json::json!([2, 0]));
        let mut csv = Vec::new();
        r.write_events_csv(&mut csv).unwrap();
        assert_eq!(
            String::from_utf8(csv).unwrap(),
            "n,L\n2,0\n4,0\n6,0\n10,0\n"
        );
    }

    #[test]
    fn density_small() {
        let want = (1.0 / 3.0 + 0.2 + 1.0 / 7.0 + 0.125 + 1.0 / 9.0) / 10f64.ln();
        assert!((log_density_negative(10).unwrap() - want).abs() < 1e-15);
        assert!((want - 0.39621).abs() < 1e-5);
        let d = log_density_negative(10_000).unwrap();
        assert!((0.80..=0.90).contains(&d), "{d}");
        assert!(log_density_negative(1).is_err());
    }

    #[test]
    fn compensated_sum_beats_naive() {
        let mut c = CompensatedSum::default();
        c.add(1.0);
        for _ in 0..1000 {
            c.add(1e-17);
        }
        assert!((c.value() - (1.0 + 1e-14)).abs() < 1e-16);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(scan_summatory(1, None).is_err());
        let mut cp = ScanCheckpoint::fresh();
        cp.running_l = 2;
        assert!(scan_summatory(10, Some(cp)).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn resume_is_bit_identical(n_max in 2u64..20_000, cut in 0.0f64..1.0, seg in 7usize..5000) {
            let opts = small_opts(seg);
            let full = scan_summatory_with(n_max, None, &opts, &mut |_| Ok(())).unwrap();
            let stop = 1 + ((n_max - 1) as f64 * cut) as u64;
            let cp = if stop < 2 { ScanCheckpoint::fresh() } else { checkpoint_at(stop, None).unwrap() };
            let cp = read_checkpoint(write_checkpoint(&cp).unwrap().as_bytes()).unwrap();
            let resumed = scan_summatory_with(n_max, Some(cp), &opts, &mut |_| Ok(())).unwrap();
            prop_assert_eq!(resumed, full);
        }
    }
}
