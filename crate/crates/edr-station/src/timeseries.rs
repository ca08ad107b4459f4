//! Time-series CSV ingestion: header `time,value`, `time` as HH:MM.
//!
//! Files may cover any part of the day; only rows inside the scenario
//! window are used. Rows inside the window must land exactly on the
//! grid's step lattice — off-step rows are an error, because dropping
//! or averaging them would silently resample the data.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use edr_core::{ClockTime, TimeGrid};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TimeseriesError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: expected header `time,value`, found `{found}`")]
    Header { path: PathBuf, found: String },
    #[error("{path}:{line}: {detail}")]
    Parse {
        path: PathBuf,
        line: usize,
        detail: String,
    },
    #[error("{path}:{line}: duplicate timestamp {time} inside the event window")]
    Duplicate {
        path: PathBuf,
        line: usize,
        time: ClockTime,
    },
    #[error(
        "{path}:{line}: timestamp {time} falls inside the event window but off its \
         {step_min}-minute step lattice"
    )]
    Misaligned {
        path: PathBuf,
        line: usize,
        time: ClockTime,
        step_min: u32,
    },
    #[error("{path}: no value for window step {time}")]
    MissingStep { path: PathBuf, time: ClockTime },
}

/// Load the window's per-step values from a CSV covering any superset
/// of the window.
pub fn load_window_csv(path: &Path, grid: &TimeGrid) -> Result<Vec<f64>, TimeseriesError> {
    let text = fs::read_to_string(path).map_err(|source| TimeseriesError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut lines = text.lines().enumerate();

    let (_, header) = lines.next().ok_or_else(|| TimeseriesError::Header {
        path: path.to_path_buf(),
        found: String::new(),
    })?;
    if header.trim() != "time,value" {
        return Err(TimeseriesError::Header {
            path: path.to_path_buf(),
            found: header.trim().to_string(),
        });
    }

    let start = grid.start().minutes();
    let end = grid.end_minutes();
    let step = grid.step_minutes();
    let mut slots: Vec<Option<f64>> = vec![None; grid.steps()];

    for (idx, raw) in lines {
        let line = idx + 1;
        let row = raw.trim();
        if row.is_empty() {
            continue;
        }
        let (time_s, value_s) = row.split_once(',').ok_or_else(|| TimeseriesError::Parse {
            path: path.to_path_buf(),
            line,
            detail: format!("expected `time,value`, found `{row}`"),
        })?;
        let time: ClockTime = time_s.trim().parse().map_err(|e| TimeseriesError::Parse {
            path: path.to_path_buf(),
            line,
            detail: format!("{e}"),
        })?;
        let value: f64 = value_s
            .trim()
            .parse()
            .map_err(|_| TimeseriesError::Parse {
                path: path.to_path_buf(),
                line,
                detail: format!("`{}` is not a number", value_s.trim()),
            })?;

        let minutes = time.minutes();
        if minutes < start || minutes >= end {
            continue; // outside the window: sliced out
        }
        let offset = minutes - start;
        if offset % step != 0 {
            return Err(TimeseriesError::Misaligned {
                path: path.to_path_buf(),
                line,
                time,
                step_min: step,
            });
        }
        let slot = (offset / step) as usize;
        if slots[slot].is_some() {
            return Err(TimeseriesError::Duplicate {
                path: path.to_path_buf(),
                line,
                time,
            });
        }
        slots[slot] = Some(value);
    }

    let mut values = Vec::with_capacity(grid.steps());
    for (i, slot) in slots.into_iter().enumerate() {
        match slot {
            Some(v) => values.push(v),
            None => {
                return Err(TimeseriesError::MissingStep {
                    path: path.to_path_buf(),
                    time: grid.step_start(i),
                })
            }
        }
    }
    Ok(values)
}

/// Render a window-aligned series back to the CSV format.
pub fn render_series_csv(grid: &TimeGrid, values: &[f64]) -> String {
    let mut out = String::from("time,value\n");
    for (label, v) in grid.step_labels().zip(values) {
        let _ = writeln!(out, "{label},{v}");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn grid(start_h: u32, hours: u32, step: u32) -> TimeGrid {
        TimeGrid::from_hours(ClockTime::from_hm(start_h, 0).unwrap(), hours, step).unwrap()
    }

    fn write_temp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    fn full_day_csv(step_min: u32) -> String {
        let mut s = String::from("time,value\n");
        let mut t = 0;
        while t < 24 * 60 {
            s.push_str(&format!("{:02}:{:02},{}\n", t / 60, t % 60, t));
            t += step_min;
        }
        s
    }

    #[test]
    fn full_day_file_slices_to_twenty_window_values() {
        let f = write_temp(&full_day_csv(15));
        let g = grid(16, 5, 15);
        let values = load_window_csv(f.path(), &g).unwrap();
        assert_eq!(values.len(), 20);
        assert_eq!(values[0], (16 * 60) as f64);
        assert_eq!(values[19], (20 * 60 + 45) as f64);
    }

    #[test]
    fn missing_window_step_is_named() {
        let mut csv = String::from("time,value\n");
        let mut t = 16 * 60;
        while t < 21 * 60 {
            if t != 17 * 60 + 15 {
                csv.push_str(&format!("{:02}:{:02},1.0\n", t / 60, t % 60));
            }
            t += 15;
        }
        let f = write_temp(&csv);
        let err = load_window_csv(f.path(), &grid(16, 5, 15)).unwrap_err();
        match err {
            TimeseriesError::MissingStep { time, .. } => assert_eq!(time.to_string(), "17:15"),
            other => panic!("expected MissingStep, got {other}"),
        }
    }

    #[test]
    fn finer_resolution_than_the_grid_is_rejected() {
        let f = write_temp(&full_day_csv(5));
        let err = load_window_csv(f.path(), &grid(16, 5, 15)).unwrap_err();
        assert!(matches!(err, TimeseriesError::Misaligned { .. }));
    }

    #[test]
    fn duplicate_window_rows_are_rejected_with_line_numbers() {
        let csv = "time,value\n16:00,1.0\n16:15,2.0\n16:00,3.0\n";
        let f = write_temp(csv);
        let err = load_window_csv(f.path(), &grid(16, 1, 15)).unwrap_err();
        match err {
            TimeseriesError::Duplicate { line, time, .. } => {
                assert_eq!(line, 4);
                assert_eq!(time.to_string(), "16:00");
            }
            other => panic!("expected Duplicate, got {other}"),
        }
    }

    #[test]
    fn non_numeric_values_are_rejected_with_line_numbers() {
        let csv = "time,value\n16:00,1.0\n16:15,banana\n16:30,2.0\n16:45,2.0\n";
        let f = write_temp(csv);
        let err = load_window_csv(f.path(), &grid(16, 1, 15)).unwrap_err();
        match err {
            TimeseriesError::Parse { line, detail, .. } => {
                assert_eq!(line, 3);
                assert!(detail.contains("banana"));
            }
            other => panic!("expected Parse, got {other}"),
        }
    }

    #[test]
    fn wrong_header_is_rejected() {
        let f = write_temp("timestamp,kw\n16:00,1.0\n");
        assert!(matches!(
            load_window_csv(f.path(), &grid(16, 1, 15)),
            Err(TimeseriesError::Header { .. })
        ));
    }

    #[test]
    fn series_render_and_load_round_trip() {
        let g = grid(16, 1, 15);
        let values = vec![1.5, 2.25, 0.1, 300.0];
        let f = write_temp(&render_series_csv(&g, &values));
        assert_eq!(load_window_csv(f.path(), &g).unwrap(), values);
    }
}
