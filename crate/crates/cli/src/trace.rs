//! Trace and summary CSV files.
//!
//! A trace starts with one metadata line,
//!
//! ```text
//! # vi-trace algo=fogda-vi gamma=0.0049 alpha=50.0 stride=1 seed=42 m=50 n=50 L=… delta0=none iters=100000 cadence=log tol=0.0 reference=0 instance=-
//! ```
//!
//! followed by a CSV table with columns
//! `k,res_natural,gap,tangent_ub,dist_to_ref,step_norm,wall_ns` and, for
//! energy diagnostics, extra `lyap_*` columns. Missing values are empty
//! fields. The metadata is enough to re-run the trace exactly.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use vi_core::gamebench::{SummaryRow, CHECKPOINTS};
use vi_core::{Algorithm, Cadence, MetricRecord};

use crate::error::{CliError, CliResult};
use crate::output::atomic_write;

pub const BASE_COLUMNS: [&str; 7] = [
    "k",
    "res_natural",
    "gap",
    "tangent_ub",
    "dist_to_ref",
    "step_norm",
    "wall_ns",
];

const MAGIC: &str = "# vi-trace";

#[derive(Debug, Clone, PartialEq)]
pub struct TraceHeader {
    pub algorithm: Algorithm,
    pub gamma: f64,
    pub alpha: f64,
    pub stride: usize,
    pub seed: u64,
    pub m: usize,
    pub n: usize,
    pub lipschitz: f64,
    pub delta0: Option<f64>,
    /// Requested iteration budget.
    pub iters: usize,
    pub cadence: Cadence,
    pub tol: Option<f64>,
    pub reference: bool,
    /// Instance file the payoffs came from; generated from `seed` otherwise.
    pub instance: Option<PathBuf>,
}

pub fn format_cadence(c: Cadence) -> String {
    match c {
        Cadence::Every => "every".into(),
        Cadence::Log => "log".into(),
        Cadence::Stride(n) => n.to_string(),
    }
}

pub fn parse_cadence(s: &str) -> Result<Cadence, String> {
    match s {
        "log" => Ok(Cadence::Log),
        "every" => Ok(Cadence::Every),
        _ => match s.parse::<usize>() {
            Ok(n) if n > 0 => Ok(Cadence::Stride(n)),
            _ => Err(format!("cadence must be 'log', 'every' or a positive stride (got '{s}')")),
        },
    }
}

/// Shortest decimal that parses back to the same `f64`, switching to
/// exponent notation for very small or large magnitudes.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "none".into(), fmt_f64)
}

impl TraceHeader {
    pub fn to_line(&self) -> String {
        let instance = self
            .instance
            .as_ref()
            .map_or_else(|| "-".to_string(), |p| p.display().to_string());
        format!(
            "{MAGIC} algo={} gamma={} alpha={} stride={} seed={} m={} n={} L={} delta0={} iters={} cadence={} tol={} reference={} instance={}",
            self.algorithm,
            fmt_f64(self.gamma),
            fmt_f64(self.alpha),
            self.stride,
            self.seed,
            self.m,
            self.n,
            fmt_f64(self.lipschitz),
            opt(self.delta0),
            self.iters,
            format_cadence(self.cadence),
            opt(self.tol),
            u8::from(self.reference),
            instance,
        )
    }

    pub fn parse(line: &str) -> CliResult<Self> {
        let bad = |msg: String| CliError::Config(format!("bad trace header: {msg}"));
        let rest = line
            .strip_prefix(MAGIC)
            .ok_or_else(|| bad(format!("expected '{MAGIC} …', got '{line}'")))?;
        // the instance path is last and may contain spaces
        let (fields, instance) = match rest.split_once(" instance=") {
            Some((f, i)) => (f, i),
            None => return Err(bad("missing instance field".into())),
        };
        let mut map = BTreeMap::new();
        for tok in fields.split_whitespace() {
            let (k, v) = tok
                .split_once('=')
                .ok_or_else(|| bad(format!("field '{tok}' is not key=value")))?;
            map.insert(k, v);
        }
        let get = |k: &str| map.get(k).copied().ok_or_else(|| bad(format!("missing field '{k}'")));
        fn num<T: std::str::FromStr>(k: &str, v: &str) -> CliResult<T> {
            v.parse()
                .map_err(|_| CliError::Config(format!("bad trace header: {k}='{v}'")))
        }
        let opt_num = |k: &str| -> CliResult<Option<f64>> {
            match get(k)? {
                "none" => Ok(None),
                v => num(k, v).map(Some),
            }
        };
        Ok(TraceHeader {
            algorithm: get("algo")?.parse()?,
            gamma: num("gamma", get("gamma")?)?,
            alpha: num("alpha", get("alpha")?)?,
            stride: num("stride", get("stride")?)?,
            seed: num("seed", get("seed")?)?,
            m: num("m", get("m")?)?,
            n: num("n", get("n")?)?,
            lipschitz: num("L", get("L")?)?,
            delta0: opt_num("delta0")?,
            iters: num("iters", get("iters")?)?,
            cadence: parse_cadence(get("cadence")?).map_err(bad)?,
            tol: opt_num("tol")?,
            reference: match get("reference")? {
                "0" => false,
                "1" => true,
                v => return Err(bad(format!("reference='{v}'"))),
            },
            instance: match instance.trim_end() {
                "-" => None,
                p => Some(PathBuf::from(p)),
            },
        })
    }
}

/// Extra per-iteration columns keyed by `k`.
#[derive(Debug, Clone, Default)]
pub struct ExtraColumns {
    pub names: Vec<&'static str>,
    pub rows: BTreeMap<usize, Vec<Option<f64>>>,
}

fn field(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

pub fn render_trace(header: &TraceHeader, records: &[MetricRecord], extra: &ExtraColumns) -> Vec<u8> {
    let mut out = header.to_line().into_bytes();
    out.push(b'\n');
    let mut w = csv::Writer::from_writer(out);
    let cols: Vec<&str> = BASE_COLUMNS.iter().chain(&extra.names).copied().collect();
    w.write_record(&cols).expect("in-memory write");
    for r in records {
        let mut row = vec![
            r.k.to_string(),
            fmt_f64(r.res_natural),
            field(r.gap),
            field(r.tangent_ub),
            field(r.dist_to_ref),
            fmt_f64(r.step_norm),
            r.wall_ns.to_string(),
        ];
        match extra.rows.get(&r.k) {
            Some(vals) => row.extend(vals.iter().map(|v| field(*v))),
            None => row.extend(std::iter::repeat_n(String::new(), extra.names.len())),
        }
        w.write_record(&row).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

pub fn write_trace(
    path: &Path,
    header: &TraceHeader,
    records: &[MetricRecord],
    extra: &ExtraColumns,
) -> CliResult<()> {
    atomic_write(path, &render_trace(header, records, extra))
}

/// A trace read back from disk. Rows keep the raw field strings.
#[derive(Debug, Clone)]
pub struct TraceFile {
    pub header: TraceHeader,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl TraceFile {
    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }
}

pub fn read_header(path: &Path) -> CliResult<TraceHeader> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    TraceHeader::parse(text.lines().next().unwrap_or_default())
}

pub fn read_trace(path: &Path) -> CliResult<TraceFile> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let (first, body) = text.split_once('\n').unwrap_or((&text, ""));
    let header = TraceHeader::parse(first)?;
    let csv_err = |source| CliError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut r = csv::Reader::from_reader(body.as_bytes());
    let columns = r.headers().map_err(csv_err)?.iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.map(|r| r.iter().map(String::from).collect()))
        .collect::<Result<_, _>>()
        .map_err(csv_err)?;
    Ok(TraceFile {
        header,
        columns,
        rows,
    })
}

pub fn summary_columns() -> Vec<String> {
    let mut cols: Vec<String> = [
        "label", "algo", "gamma", "alpha", "iters", "res_initial", "res_final", "gap_final",
    ]
    .map(String::from)
    .to_vec();
    cols.extend(CHECKPOINTS.iter().map(|k| format!("res_k{k}")));
    cols.extend(CHECKPOINTS.iter().map(|k| format!("gap_k{k}")));
    cols.extend(["wall_ns", "op_evals", "projections", "status", "error"].map(String::from));
    cols
}

/// One summary line per run, in run order. Failed runs keep their label and
/// error message.
pub fn render_summary(rows: &[Result<SummaryRow, (String, String)>]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(summary_columns()).expect("in-memory write");
    for row in rows {
        let rec: Vec<String> = match row {
            Ok(s) => {
                let mut v = vec![
                    s.label.clone(),
                    s.algorithm.to_string(),
                    fmt_f64(s.gamma),
                    fmt_f64(s.alpha),
                    s.iterations.to_string(),
                    fmt_f64(s.initial_res),
                    fmt_f64(s.final_res),
                    field(s.final_gap),
                ];
                v.extend(s.res_at.iter().map(|x| field(*x)));
                v.extend(s.gap_at.iter().map(|x| field(*x)));
                v.extend([
                    s.wall_ns.to_string(),
                    s.op_evals.to_string(),
                    s.projections.to_string(),
                    s.status.clone(),
                    String::new(),
                ]);
                v
            }
            Err((label, msg)) => {
                let mut v = vec![String::new(); summary_columns().len()];
                v[0] = label.clone();
                let n = v.len();
                v[n - 2] = "error".into();
                v[n - 1] = msg.clone();
                v
            }
        };
        w.write_record(&rec).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

/// Human-readable table of the same rows.
pub fn summary_table(rows: &[Result<SummaryRow, (String, String)>]) -> String {
    let mut s = format!(
        "{:<16} {:>10} {:>8} {:>12} {:>12} {:>10}\n",
        "run", "gamma", "iters", "res_final", "gap_final", "status"
    );
    for row in rows {
        match row {
            Ok(r) => {
                let gap = r.final_gap.map_or_else(|| "-".into(), |g| format!("{g:.3e}"));
                let _ = writeln!(
                    s,
                    "{:<16} {:>10.4e} {:>8} {:>12.3e} {:>12} {:>10}",
                    r.label, r.gamma, r.iterations, r.final_res, gap, r.status
                );
            }
            Err((label, msg)) => {
                let _ = writeln!(s, "{label:<16} error: {msg}");
            }
        }
    }
    s
}
