//! File formats: the diagnostics stream (CSV, JSONL) and field snapshots
//! (CSV, little-endian binary).
//!
//! Floats are written with `{:e}`, the shortest representation that parses
//! back to the same bits, so CSV round trips are exact as well.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use smgauge::diagnostics::DiagnosticsRecord;
use smgauge::gauge::GaugeState;

pub const SNAPSHOT_COLUMNS: [&str; 7] = ["r", "re_plus", "im_plus", "re_minus", "im_minus", "a2", "a0"];

const MAGIC: &[u8; 8] = b"SMGSNAP1";

/// Self-description written ahead of every output file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Provenance {
    pub config_sha256: String,
    pub seed: u64,
}

impl Provenance {
    fn comment(&self) -> String {
        format!("# smgauge {} config_sha256={} seed={}", env!("CARGO_PKG_VERSION"), self.config_sha256, self.seed)
    }
}

fn join(values: &[f64]) -> String {
    let mut line = String::with_capacity(values.len() * 24);
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            line.push(',');
        }
        line.push_str(&format!("{v:e}"));
    }
    line
}

/// JSON number, or null for NaN and infinities.
fn json_number(v: f64) -> String {
    if v.is_finite() {
        format!("{v:e}")
    } else {
        "null".to_owned()
    }
}

pub struct CsvDiagnostics<W: Write> {
    out: W,
}

impl<W: Write> CsvDiagnostics<W> {
    pub fn new(mut out: W, prov: &Provenance) -> io::Result<Self> {
        writeln!(out, "{}", prov.comment())?;
        writeln!(out, "{}", DiagnosticsRecord::COLUMNS.join(","))?;
        Ok(CsvDiagnostics { out })
    }

    pub fn write(&mut self, row: &DiagnosticsRecord) -> io::Result<()> {
        writeln!(self.out, "{}", join(&row.values()))
    }

    pub fn flush(&mut self) -> io::Result<()> {
        self.out.flush()
    }
}

pub struct JsonlDiagnostics<W: Write> {
    out: W,
}

impl<W: Write> JsonlDiagnostics<W> {
    /// The first line is a header object; every further line is one row.
    pub fn new(mut out: W, prov: &Provenance) -> io::Result<Self> {
        let header = serde_json::json!({
            "smgauge": env!("CARGO_PKG_VERSION"),
            "config_sha256": prov.config_sha256,
            "seed": prov.seed,
            "columns": DiagnosticsRecord::COLUMNS,
        });
        writeln!(out, "{header}")?;
        Ok(JsonlDiagnostics { out })
    }

    pub fn write(&mut self, row: &DiagnosticsRecord) -> io::Result<()> {
        let fields: Vec<String> =
            DiagnosticsRecord::COLUMNS.iter().zip(row.values()).map(|(k, v)| format!("\"{k}\":{}", json_number(v))).collect();
        writeln!(self.out, "{{{}}}", fields.join(","))
    }

    pub fn flush(&mut self) -> io::Result<()> {
        self.out.flush()
    }
}

/// Parses diagnostics CSV back into rows, skipping `#` comments and the
/// header.
pub fn read_diagnostics_csv(reader: impl Read) -> io::Result<Vec<[f64; 11]>> {
    let mut rows = Vec::new();
    for line in BufReader::new(reader).lines() {
        let line = line?;
        if line.starts_with('#') || line.starts_with("t,") || line.is_empty() {
            continue;
        }
        let values = parse_floats(&line)?;
        let row: [f64; 11] = values.try_into().map_err(|_| bad_data("diagnostics row needs 11 columns"))?;
        rows.push(row);
    }
    Ok(rows)
}

fn bad_data(msg: &str) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, msg.to_owned())
}

fn parse_floats(line: &str) -> io::Result<Vec<f64>> {
    line.split(',').map(|s| s.trim().parse::<f64>().map_err(|_| bad_data("unparseable float"))).collect()
}

/// The seven snapshot columns of one state.
#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub m: u32,
    pub r_max: f64,
    pub t: f64,
    /// Indexed by [`SNAPSHOT_COLUMNS`].
    pub columns: [Vec<f64>; 7],
}

impl Snapshot {
    pub fn of(state: &GaugeState) -> Self {
        let g = state.grid();
        let d = state.derived();
        let p = &state.psi_plus.values;
        let q = &state.psi_minus.values;
        Snapshot {
            m: state.m,
            r_max: g.r_max(),
            t: state.t,
            columns: [
                g.nodes().collect(),
                p.iter().map(|z| z.re).collect(),
                p.iter().map(|z| z.im).collect(),
                q.iter().map(|z| z.re).collect(),
                q.iter().map(|z| z.im).collect(),
                d.a2.clone(),
                d.a0.clone(),
            ],
        }
    }

    pub fn len(&self) -> usize {
        self.columns[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn write_csv(&self, mut out: impl Write, prov: &Provenance) -> io::Result<()> {
        writeln!(out, "{} m={} r_max={:e} t={:e}", prov.comment(), self.m, self.r_max, self.t)?;
        writeln!(out, "{}", SNAPSHOT_COLUMNS.join(","))?;
        for i in 0..self.len() {
            let row: Vec<f64> = self.columns.iter().map(|c| c[i]).collect();
            writeln!(out, "{}", join(&row))?;
        }
        out.flush()
    }

    pub fn read_csv(reader: impl Read) -> io::Result<Self> {
        let mut lines = BufReader::new(reader).lines();
        let first = lines.next().ok_or_else(|| bad_data("empty snapshot"))??;
        let field = |key: &str| -> io::Result<&str> {
            first
                .split_whitespace()
                .find_map(|w| w.strip_prefix(key))
                .ok_or_else(|| bad_data("snapshot comment lacks m, r_max or t"))
        };
        let m = field("m=")?.parse().map_err(|_| bad_data("bad m"))?;
        let r_max = field("r_max=")?.parse().map_err(|_| bad_data("bad r_max"))?;
        let t = field("t=")?.parse().map_err(|_| bad_data("bad t"))?;
        let header = lines.next().ok_or_else(|| bad_data("missing header"))??;
        if header != SNAPSHOT_COLUMNS.join(",") {
            return Err(bad_data("unexpected snapshot header"));
        }
        let mut columns: [Vec<f64>; 7] = Default::default();
        for line in lines {
            let values = parse_floats(&line?)?;
            if values.len() != 7 {
                return Err(bad_data("snapshot row needs 7 columns"));
            }
            for (c, v) in columns.iter_mut().zip(values) {
                c.push(v);
            }
        }
        Ok(Snapshot { m, r_max, t, columns })
    }

    /// Magic, m (u32), n (u64), r_max, t, then the seven columns; all LE.
    pub fn write_binary(&self, mut out: impl Write) -> io::Result<()> {
        out.write_all(MAGIC)?;
        out.write_all(&self.m.to_le_bytes())?;
        out.write_all(&(self.len() as u64).to_le_bytes())?;
        out.write_all(&self.r_max.to_le_bytes())?;
        out.write_all(&self.t.to_le_bytes())?;
        for c in &self.columns {
            for v in c {
                out.write_all(&v.to_le_bytes())?;
            }
        }
        out.flush()
    }

    pub fn read_binary(mut input: impl Read) -> io::Result<Self> {
        let mut magic = [0u8; 8];
        input.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(bad_data("not a smgauge snapshot"));
        }
        let mut b4 = [0u8; 4];
        let mut b8 = [0u8; 8];
        input.read_exact(&mut b4)?;
        let m = u32::from_le_bytes(b4);
        input.read_exact(&mut b8)?;
        let n = usize::try_from(u64::from_le_bytes(b8)).map_err(|_| bad_data("length overflow"))?;
        let mut f64_at = |input: &mut dyn Read| -> io::Result<f64> {
            input.read_exact(&mut b8)?;
            Ok(f64::from_le_bytes(b8))
        };
        let r_max = f64_at(&mut input)?;
        let t = f64_at(&mut input)?;
        let mut columns: [Vec<f64>; 7] = Default::default();
        for c in columns.iter_mut() {
            // Grow while reading so a corrupt length cannot force a huge allocation.
            for _ in 0..n {
                c.push(f64_at(&mut input)?);
            }
        }
        Ok(Snapshot { m, r_max, t, columns })
    }
}

/// Where one run's files go.
#[derive(Clone, Debug)]
pub struct Layout {
    pub dir: PathBuf,
}

impl Layout {
    pub fn diagnostics_csv(&self) -> PathBuf {
        self.dir.join("diagnostics.csv")
    }

    pub fn diagnostics_jsonl(&self) -> PathBuf {
        self.dir.join("diagnostics.jsonl")
    }

    pub fn snapshot(&self, step: usize, ext: &str) -> PathBuf {
        self.dir.join("snapshots").join(format!("step_{step:08}.{ext}"))
    }
}

pub fn create(path: &Path) -> io::Result<BufWriter<File>> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}
