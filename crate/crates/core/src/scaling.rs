//! Strong-scaling measurements and the Amdahl's-law fit
//! `t(c) = ((1 - p) + p / c) * t1`.

use std::path::Path;
use std::time::Instant;

use crate::data::DiscretizedDataset;
use crate::error::{Error, Result};
use crate::generation::{generate_all, GenerationConfig};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measurement {
    pub workers: usize,
    pub repeat: usize,
    pub seconds: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmdahlFit {
    pub t1: f64,
    pub p: f64,
    /// Euclidean norm of the time residuals.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingReport {
    pub measurements: Vec<Measurement>,
    pub fit: AmdahlFit,
}

pub fn amdahl_time(t1: f64, p: f64, cores: f64) -> f64 {
    ((1.0 - p) + p / cores) * t1
}

/// Least-squares `t1` for a fixed `p`, and the resulting squared error.
fn profile(points: &[(f64, f64)], p: f64) -> (f64, f64) {
    let (mut tg, mut gg) = (0.0, 0.0);
    for &(c, t) in points {
        let g = (1.0 - p) + p / c;
        tg += t * g;
        gg += g * g;
    }
    let t1 = tg / gg;
    let sse = points
        .iter()
        .map(|&(c, t)| {
            let r = t - t1 * ((1.0 - p) + p / c);
            r * r
        })
        .sum();
    (t1, sse)
}

/// Fits `(t1, p)` by a grid search on `p` in `[0, 1]`, refined around the
/// best grid point, with `t1` solved in closed form for each candidate.
pub fn fit_amdahl(points: &[(usize, f64)]) -> Result<AmdahlFit> {
    let mut counts: Vec<usize> = points.iter().map(|p| p.0).collect();
    counts.sort_unstable();
    counts.dedup();
    if counts.len() < 2 {
        return Err(Error::InvalidArgument(
            "Amdahl fit needs measurements at two or more worker counts".into(),
        ));
    }
    if points
        .iter()
        .any(|&(c, t)| c == 0 || !(t.is_finite() && t >= 0.0))
    {
        return Err(Error::InvalidArgument(
            "worker counts must be >= 1 and times finite".into(),
        ));
    }
    let pts: Vec<(f64, f64)> = points.iter().map(|&(c, t)| (c as f64, t)).collect();

    const STEPS: usize = 100;
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut best = (0.0, f64::INFINITY);
    for _ in 0..40 {
        let step = (hi - lo) / STEPS as f64;
        for k in 0..=STEPS {
            let p = if k == STEPS { hi } else { lo + step * k as f64 };
            let (_, sse) = profile(&pts, p);
            if sse < best.1 {
                best = (p, sse);
            }
        }
        lo = (best.0 - step).max(0.0);
        hi = (best.0 + step).min(1.0);
        if hi - lo <= f64::EPSILON * 4.0 {
            break;
        }
    }
    let p = best.0.clamp(0.0, 1.0);
    let (t1, sse) = profile(&pts, p);
    Ok(AmdahlFit {
        t1,
        p,
        residual: sse.sqrt(),
    })
}

pub fn fit_measurements(measurements: &[Measurement]) -> Result<AmdahlFit> {
    let pts: Vec<(usize, f64)> = measurements.iter().map(|m| (m.workers, m.seconds)).collect();
    fit_amdahl(&pts)
}

/// Times `generate_all` `repeats` times at each worker count, one run at a
/// time. Each run uses its own cache subdirectory.
pub fn run_benchmark(
    dd: &DiscretizedDataset,
    y: &[f64],
    cfg: &GenerationConfig,
    worker_counts: &[usize],
    repeats: usize,
) -> Result<Vec<Measurement>> {
    if worker_counts.is_empty() || repeats == 0 {
        return Err(Error::InvalidArgument(
            "need at least one worker count and one repeat".into(),
        ));
    }
    let mut out = Vec::with_capacity(worker_counts.len() * repeats);
    for &workers in worker_counts {
        for repeat in 0..repeats {
            let mut run = cfg.clone();
            run.workers = workers;
            run.keep_cache = false;
            run.cache_dir = cfg.cache_dir.join(format!("bench-w{workers}-r{repeat}"));
            let clock = Instant::now();
            generate_all(dd, y, &run).map_err(|e| Error::Benchmark {
                workers,
                repeat,
                message: e.to_string(),
            })?;
            out.push(Measurement {
                workers,
                repeat,
                seconds: clock.elapsed().as_secs_f64(),
            });
        }
    }
    Ok(out)
}

pub fn write_measurements(path: &Path, ms: &[Measurement]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    w.write_record(["workers", "repeat", "seconds"])
        .map_err(|e| Error::csv(path, e))?;
    for m in ms {
        w.write_record([m.workers.to_string(), m.repeat.to_string(), m.seconds.to_string()])
            .map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_measurements(path: &Path) -> Result<Vec<Measurement>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    let headers = r.headers().map_err(|e| Error::csv(path, e))?.clone();
    if headers.iter().collect::<Vec<_>>() != ["workers", "repeat", "seconds"] {
        return Err(Error::Parse {
            path: path.into(),
            record: 0,
            message: "expected header workers,repeat,seconds".into(),
        });
    }
    let mut out = Vec::new();
    for (k, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        let bad = || Error::Parse {
            path: path.into(),
            record: k + 1,
            message: "malformed measurement".into(),
        };
        out.push(Measurement {
            workers: rec[0].trim().parse().map_err(|_| bad())?,
            repeat: rec[1].trim().parse().map_err(|_| bad())?,
            seconds: rec[2].trim().parse().map_err(|_| bad())?,
        });
    }
    Ok(out)
}

impl std::fmt::Display for AmdahlFit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "t1={} p={} residual={}", self.t1, self.p, self.residual)
    }
}
