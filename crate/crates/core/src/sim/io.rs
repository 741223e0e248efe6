//! Trajectory files: a CSV with header `traj,t,x0,...,x{d-1}` (one row per
//! sample, floats with 17 significant digits) plus a sidecar
//! `<stem>.meta.json` carrying the time step, provenance and normalization.

use super::{BatchMeta, Normalization, TrajectoryBatch};
use crate::error::{DaaError, Result};
use crate::scalar::Real;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

/// Contents of the sidecar JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct BatchFile<T> {
    pub n_traj: usize,
    pub n_samples: usize,
    pub dim: usize,
    pub dt: T,
    #[serde(flatten)]
    pub meta: BatchMeta<T>,
    pub normalization: Option<Normalization<T>>,
}

pub fn meta_path(csv: &Path) -> PathBuf {
    let stem = csv.file_stem().and_then(|s| s.to_str()).unwrap_or("trajectories");
    csv.with_file_name(format!("{stem}.meta.json"))
}

pub(crate) fn fmt_float(out: &mut String, v: f64) {
    write!(out, "{v:.16e}").expect("writing to a String cannot fail");
}

pub fn write_csv<T: Real>(path: &Path, batch: &TrajectoryBatch<T>) -> Result<()> {
    let d = batch.dim();
    let mut s = String::from("traj,t");
    for i in 0..d {
        write!(s, ",x{i}").unwrap();
    }
    s.push('\n');
    let dt = batch.dt.to_f64_lossy();
    for b in 0..batch.n_traj() {
        for i in 0..batch.n_samples() {
            write!(s, "{b},").unwrap();
            fmt_float(&mut s, i as f64 * dt);
            for &v in batch.point(b, i) {
                s.push(',');
                fmt_float(&mut s, v.to_f64_lossy());
            }
            s.push('\n');
        }
    }
    fs::write(path, s)?;
    Ok(())
}

/// Writes the CSV and its sidecar.
pub fn write_batch<T: Real>(path: &Path, batch: &TrajectoryBatch<T>) -> Result<()> {
    write_csv(path, batch)?;
    let file = BatchFile {
        n_traj: batch.n_traj(),
        n_samples: batch.n_samples(),
        dim: batch.dim(),
        dt: batch.dt,
        meta: batch.meta.clone(),
        normalization: batch.normalization.clone(),
    };
    fs::write(meta_path(path), serde_json::to_string_pretty(&file)? + "\n")?;
    Ok(())
}

/// Reads a trajectory CSV; the time step comes from the first two samples.
pub fn read_csv<T: Real>(path: &Path) -> Result<TrajectoryBatch<T>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let header = rdr.headers()?.clone();
    let names: Vec<String> = header.iter().map(str::to_string).collect();
    let bad_header = |message: &str| DaaError::ParseError {
        line: 1,
        column: names.join(","),
        message: message.to_string(),
    };
    if names.len() < 3 || names[0] != "traj" || names[1] != "t" {
        return Err(bad_header("expected header traj,t,x0,..."));
    }
    let dim = names.len() - 2;
    if names[2..].iter().enumerate().any(|(i, n)| *n != format!("x{i}")) {
        return Err(bad_header("state columns must be x0..x{d-1}"));
    }

    let mut trajs: Vec<Vec<T>> = Vec::new();
    let mut times: Vec<f64> = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let cell = |col: usize| -> Result<f64> {
            let raw = rec.get(col).unwrap_or("").trim();
            let err = |message: String| DaaError::ParseError {
                line,
                column: names[col].clone(),
                message,
            };
            let v: f64 = raw.parse().map_err(|_| err(format!("cannot parse `{raw}`")))?;
            if !v.is_finite() {
                return Err(err(format!("non-finite value `{raw}`")));
            }
            Ok(v)
        };
        if rec.len() != names.len() {
            return Err(DaaError::ParseError {
                line,
                column: "*".into(),
                message: format!("expected {} fields, found {}", names.len(), rec.len()),
            });
        }
        let raw_traj = rec.get(0).unwrap_or("").trim();
        let traj: usize = raw_traj.parse().map_err(|_| DaaError::ParseError {
            line,
            column: "traj".into(),
            message: format!("cannot parse `{raw_traj}` as a trajectory index"),
        })?;
        if traj == trajs.len() {
            trajs.push(Vec::new());
        } else if traj + 1 != trajs.len() {
            return Err(DaaError::ParseError {
                line,
                column: "traj".into(),
                message: "rows must be grouped by trajectory in increasing order".into(),
            });
        }
        let t = cell(1)?;
        if traj == 0 {
            times.push(t);
        }
        let current = trajs.last_mut().expect("pushed above");
        for col in 2..names.len() {
            current.push(T::lit(cell(col)?));
        }
    }
    if trajs.is_empty() {
        return Err(DaaError::ParseError {
            line: 2,
            column: "*".into(),
            message: "no trajectories".into(),
        });
    }
    let expected = trajs[0].len() / dim;
    for (b, t) in trajs.iter().enumerate() {
        if t.len() / dim != expected {
            return Err(DaaError::InconsistentTrajectoryLengths {
                traj: b,
                expected,
                got: t.len() / dim,
            });
        }
    }
    let dt = if times.len() >= 2 { times[1] - times[0] } else { 1.0 };
    TrajectoryBatch::from_trajectories(trajs, dim, T::lit(dt))
}

/// Reads a CSV and, when present, its sidecar.
pub fn load_batch<T: Real>(path: &Path) -> Result<TrajectoryBatch<T>> {
    let mut batch = read_csv::<T>(path)?;
    let side = meta_path(path);
    if side.exists() {
        let file: BatchFile<T> = serde_json::from_str(&fs::read_to_string(side)?)?;
        if file.dim != batch.dim() || file.n_traj != batch.n_traj() || file.n_samples != batch.n_samples() {
            return Err(DaaError::InvalidConfig("sidecar shape disagrees with CSV".into()));
        }
        batch.dt = file.dt;
        batch.meta = file.meta;
        batch.normalization = file.normalization;
    }
    Ok(batch)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::archetypes::SystemSpec;
    use crate::sim::{simulate, InitRegion, SimConfig};
    use proptest::prelude::*;

    #[test]
    fn nan_cell_is_located() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.csv");
        fs::write(&p, "traj,t,x0,x1\n0,0,1.0,2.0\n0,0.1,NaN,2.0\n").unwrap();
        match read_csv::<f64>(&p) {
            Err(DaaError::ParseError { line, column, .. }) => {
                assert_eq!(line, 3);
                assert_eq!(column, "x0");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn ragged_trajectories_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("ragged.csv");
        fs::write(&p, "traj,t,x0\n0,0,1\n0,0.1,2\n1,0,1\n").unwrap();
        assert!(matches!(
            read_csv::<f64>(&p),
            Err(DaaError::InconsistentTrajectoryLengths { traj: 1, expected: 2, got: 1 })
        ));
    }

    #[test]
    fn simulated_batch_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("ring.csv");
        let spec = SystemSpec::<f64>::ring_attractor(2);
        let cfg = SimConfig::new(0.2, 2.0, 50, 1);
        let mut b = simulate(&spec.field().unwrap(), 0.0, &InitRegion::annulus(0.5, 1.5), &cfg).unwrap();
        b.meta.source = Some(crate::sim::BatchSource::System(spec));
        write_batch(&p, &b).unwrap();
        let back = load_batch::<f64>(&p).unwrap();
        assert_eq!((back.n_traj(), back.n_intervals(), back.dim()), (50, 10, 2));
        assert_eq!(back, b);
        // CSV alone recovers data and dt exactly
        let bare = read_csv::<f64>(&p).unwrap();
        assert_eq!(bare.data(), b.data());
        assert_eq!(bare.dt, b.dt);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn csv_round_trip_is_bit_exact(
            vals in proptest::collection::vec(-1e6f64..1e6, 12),
            dt in 1e-3f64..10.0,
        ) {
            let dir = tempfile::tempdir().unwrap();
            let p = dir.path().join("rt.csv");
            let b = TrajectoryBatch::from_flat(2, 3, 2, vals, dt).unwrap();
            write_csv(&p, &b).unwrap();
            let back = read_csv::<f64>(&p).unwrap();
            prop_assert_eq!(back.data(), b.data());
            prop_assert_eq!(back.dt, dt);
        }
    }
}
