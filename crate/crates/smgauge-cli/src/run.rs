//! One run: build the initial state, evolve, stream diagnostics and
//! snapshots to disk.

use std::fs::File;
use std::io::{self, BufWriter};
use std::path::Path;

use smgauge::diagnostics::{DiagnosticsRecord, DiagnosticsStream};
use smgauge::evolution::evolve;
use smgauge::gauge::GaugeState;

use crate::config::{Format, RunConfig};
use crate::format::{create, CsvDiagnostics, JsonlDiagnostics, Layout, Provenance, Snapshot};
use crate::initial::build_initial_state;
use crate::CliError;

#[derive(Clone, Debug, PartialEq)]
pub struct RunSummary {
    pub rows: usize,
    pub snapshots: usize,
    pub last: Option<DiagnosticsRecord>,
}

struct Writers {
    layout: Layout,
    prov: Provenance,
    csv: Option<CsvDiagnostics<BufWriter<File>>>,
    jsonl: Option<JsonlDiagnostics<BufWriter<File>>>,
    snapshot_csv: bool,
    rows: usize,
    snapshots: usize,
    last: Option<DiagnosticsRecord>,
}

impl Writers {
    fn open(cfg: &RunConfig, dir: &Path) -> io::Result<Self> {
        let layout = Layout { dir: dir.to_path_buf() };
        std::fs::create_dir_all(dir)?;
        let prov = Provenance { config_sha256: cfg.hash(), seed: cfg.seed };
        let has = |f| cfg.outputs.formats.contains(&f);
        let csv = if has(Format::Csv) { Some(CsvDiagnostics::new(create(&layout.diagnostics_csv())?, &prov)?) } else { None };
        let jsonl =
            if has(Format::Jsonl) { Some(JsonlDiagnostics::new(create(&layout.diagnostics_jsonl())?, &prov)?) } else { None };
        Ok(Writers { layout, prov, csv, jsonl, snapshot_csv: has(Format::Csv), rows: 0, snapshots: 0, last: None })
    }

    fn row(&mut self, row: &DiagnosticsRecord) -> io::Result<()> {
        if let Some(w) = self.csv.as_mut() {
            w.write(row)?;
        }
        if let Some(w) = self.jsonl.as_mut() {
            w.write(row)?;
        }
        self.rows += 1;
        self.last = Some(*row);
        Ok(())
    }

    fn snapshot(&mut self, step: usize, state: &GaugeState) -> io::Result<()> {
        let snap = Snapshot::of(state);
        snap.write_binary(create(&self.layout.snapshot(step, "bin"))?)?;
        if self.snapshot_csv {
            snap.write_csv(create(&self.layout.snapshot(step, "csv"))?, &self.prov)?;
        }
        self.snapshots += 1;
        Ok(())
    }

    fn flush(&mut self) -> io::Result<()> {
        if let Some(w) = self.csv.as_mut() {
            w.flush()?;
        }
        if let Some(w) = self.jsonl.as_mut() {
            w.flush()?;
        }
        Ok(())
    }
}

/// Executes `cfg`, writing into `out` (or `cfg.outputs.dir`).
///
/// On a numerical abort the rows recorded before the failure are flushed
/// and [`CliError::Aborted`] is returned.
pub fn run(cfg: &RunConfig, out: Option<&Path>) -> Result<RunSummary, CliError> {
    cfg.validate()?;
    let state = build_initial_state(cfg)?;
    let weights = cfg.virial_weights();
    let mut stream = DiagnosticsStream::new(weights)?;
    let dir = out.unwrap_or(&cfg.outputs.dir);
    let mut w = Writers::open(cfg, dir)?;
    log::info!("run: m = {}, n = {}, dt = {:e}, t_end = {}, output {}", cfg.index(), cfg.grid.n, cfg.time.dt, cfg.time.t_end, dir.display());

    let snapshot_cadence = cfg.outputs.snapshot_cadence;
    let mut io_error: Option<io::Error> = None;
    let mut sink = |step: usize, s: &GaugeState| -> smgauge::Result<()> {
        let mut write = || -> io::Result<()> {
            if let Some(row) = stream.push(s) {
                w.row(&row)?;
            }
            if snapshot_cadence > 0 && step % snapshot_cadence == 0 {
                w.snapshot(step, s)?;
            }
            Ok(())
        };
        write().map_err(|e| {
            io_error = Some(e);
            smgauge::Error::Sink("output write")
        })
    };
    let traj = evolve(&state, &cfg.evolution(), &mut sink)?;
    if let Some(e) = io_error {
        return Err(CliError::Io(e));
    }
    if let Some(row) = stream.finish() {
        w.row(&row)?;
    }
    w.flush()?;
    let summary = RunSummary { rows: w.rows, snapshots: w.snapshots, last: w.last };
    match traj.aborted {
        Some(cause) => Err(CliError::Aborted { rows: summary.rows, cause }),
        None => Ok(summary),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::TEST_CONFIG;
    use crate::format::read_diagnostics_csv;

    fn cfg(f: impl FnOnce(&mut RunConfig)) -> RunConfig {
        let mut c = RunConfig::from_json(TEST_CONFIG).unwrap();
        f(&mut c);
        c
    }

    #[test]
    fn zero_duration_writes_one_row() {
        let dir = tempfile::tempdir().unwrap();
        let c = cfg(|c| c.time.t_end = 0.0);
        let s = run(&c, Some(dir.path())).unwrap();
        assert_eq!(s.rows, 1);
        let rows = read_diagnostics_csv(File::open(dir.path().join("diagnostics.csv")).unwrap()).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0][0], 0.0);
        assert!(dir.path().join("snapshots/step_00000000.bin").exists());
    }

    #[test]
    fn rows_follow_record_cadence() {
        let dir = tempfile::tempdir().unwrap();
        let c = cfg(|c| c.outputs.formats = vec![Format::Csv, Format::Jsonl]);
        let s = run(&c, Some(dir.path())).unwrap();
        // 10 steps recorded every 2: t = 0, 0.02, ..., 0.1.
        assert_eq!(s.rows, 6);
        assert_eq!(s.snapshots, 3);
        let rows = read_diagnostics_csv(File::open(dir.path().join("diagnostics.csv")).unwrap()).unwrap();
        assert!((rows[5][0] - 0.1).abs() < 1e-15);
        assert!(rows[0][9].is_nan() && rows[5][9].is_nan() && rows[2][9].is_finite());
        let jl = std::fs::read_to_string(dir.path().join("diagnostics.jsonl")).unwrap();
        assert_eq!(jl.lines().count(), 7);
    }

    #[test]
    fn identical_configs_give_identical_bytes() {
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        let c = cfg(|_| {});
        run(&c, Some(a.path())).unwrap();
        run(&c, Some(b.path())).unwrap();
        let read = |d: &tempfile::TempDir, f: &str| std::fs::read(d.path().join(f)).unwrap();
        assert_eq!(read(&a, "diagnostics.csv"), read(&b, "diagnostics.csv"));
        assert_eq!(read(&a, "snapshots/step_00000004.bin"), read(&b, "snapshots/step_00000004.bin"));
    }

    #[test]
    fn absurd_dt_aborts_with_partial_output() {
        let dir = tempfile::tempdir().unwrap();
        let c = cfg(|c| {
            c.time.dt = 1e305;
            c.time.t_end = 1e306;
            c.time.record_cadence = 1;
            c.outputs.snapshot_cadence = 0;
        });
        let err = run(&c, Some(dir.path())).unwrap_err();
        assert_eq!(err.exit_code(), 2, "{err}");
        let rows = read_diagnostics_csv(File::open(dir.path().join("diagnostics.csv")).unwrap()).unwrap();
        assert!(!rows.is_empty() && rows.len() < 11);
    }

    #[test]
    fn unwritable_output_is_an_io_error() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        std::fs::write(&blocker, b"x").unwrap();
        let err = run(&cfg(|_| {}), Some(&blocker.join("sub"))).unwrap_err();
        assert_eq!(err.exit_code(), 3, "{err}");
    }
}
