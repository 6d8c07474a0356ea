//! Command-line front end. Data goes to stdout or `--out`, diagnostics to
//! stderr. Exit codes: 0 ok, 1 input error, 2 numerical failure.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::algebra::{CMatrix, CVector, C64};
use crate::error::{Error, Result};
use crate::graph::{compile, reduce_indefinite_halflines, CompiledSystem};
use crate::io::{
    matrix_to_rows, read_document, write_graph, CompiledDocument, Document, Format, GraphModel, GraphSpec, Rows,
};
use crate::spectral::{apply_resolvent, eigenvalues, green, herglotz_decompose, SpectralProblem};

#[derive(Parser, Debug)]
#[command(name = "cansys", version, about = "Canonical systems and quantum graphs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Top,
}

#[derive(Subcommand, Debug)]
pub enum Top {
    /// Parse and check a system or graph file.
    Validate { path: PathBuf },
    /// Run a computation on a system or graph file.
    Run {
        path: PathBuf,
        #[arg(long, global = true)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, global = true)]
        format: Option<OutputFormat>,
        #[command(subcommand)]
        command: RunCommand,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Csv,
    Toml,
}

#[derive(Subcommand, Debug)]
pub enum RunCommand {
    /// Serialize the compiled system.
    Compile,
    /// Eigenvalues, multiplicities and weights in a window.
    Spectrum {
        #[arg(long, num_args = 2, allow_negative_numbers = true, required = true)]
        window: Vec<f64>,
    },
    /// `m(z)` at the points of a file (`re,im` per line) or given by `--z`.
    Mfunction {
        #[arg(long)]
        points: Option<PathBuf>,
        #[arg(long, allow_negative_numbers = true)]
        z: Vec<String>,
    },
    /// Herglotz data `A`, `B` and the atoms in a window.
    Measure {
        #[arg(long, num_args = 2, allow_negative_numbers = true, required = true)]
        window: Vec<f64>,
        #[arg(long, default_value_t = 1e-3)]
        tol: f64,
    },
    /// The Green kernel `G(x, y, z)`.
    Green {
        #[arg(long, allow_negative_numbers = true)]
        x: f64,
        #[arg(long, allow_negative_numbers = true)]
        y: f64,
        #[arg(long, allow_negative_numbers = true)]
        z: String,
    },
    /// `(S − z)⁻¹h` for `h` sampled in a CSV file (`x, h_1, …, h_2n`, linear interpolation).
    Resolve {
        #[arg(long)]
        h: PathBuf,
        #[arg(long, allow_negative_numbers = true)]
        z: String,
    },
    /// Convert a Schrödinger graph into a canonical graph file.
    Schr2cs,
}

/// Parse arguments and run; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_input_error() {
                1
            } else {
                2
            }
        }
    }
}

pub fn execute(cli: &Cli) -> Result<()> {
    match &cli.command {
        Top::Validate { path } => {
            let summary = validate(path)?;
            println!("{summary}");
            Ok(())
        }
        Top::Run { path, out, format, command } => {
            let text = run(path, command, *format)?;
            emit(out.as_deref(), &text)
        }
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::Input(format!("{}: {e}", p.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes()).map_err(|e| Error::Input(e.to_string()))
        }
    }
}

/// What a file turns into.
pub enum Loaded {
    System(SpectralProblem),
    Graph { compiled: CompiledSystem, vertices: usize, edges: usize },
}

impl Loaded {
    pub fn problem(&self) -> Result<SpectralProblem> {
        match self {
            Loaded::System(p) => Ok(p.clone()),
            Loaded::Graph { compiled, .. } => compiled.problem(),
        }
    }
}

/// Read a file, compiling graphs (with half-line reduction and warnings on stderr).
pub fn load(path: &Path) -> Result<Loaded> {
    match read_document(path)? {
        Document::System(s) => Ok(Loaded::System(s.build()?)),
        Document::Graph(g) => load_graph(&g),
    }
}

fn load_graph(g: &GraphSpec) -> Result<Loaded> {
    let graph = match g.build()? {
        GraphModel::Canonical(q) => q,
        GraphModel::Schrodinger(s) => s.to_canonical()?.0,
    };
    let reduction = reduce_indefinite_halflines(&graph)?;
    for r in &reduction.reduced {
        eprintln!(
            "note: half line `{}` is theta-form (θ = {}); replaced by vertex `{}` with row ({}, {})",
            r.edge, r.theta, r.vertex, r.row.0, r.row.1
        );
    }
    let compiled = compile(&reduction.graph)?;
    for w in &compiled.warnings {
        eprintln!("warning: {w}");
    }
    Ok(Loaded::Graph { vertices: reduction.graph.vertices().len(), edges: reduction.graph.edge_count(), compiled })
}

pub fn validate(path: &Path) -> Result<String> {
    match load(path)? {
        Loaded::System(p) => {
            let h = p.hamiltonian();
            let definite = h.is_definite()?;
            let end = if h.tail().is_some() { "∞".to_string() } else { h.end().to_string() };
            Ok(format!(
                "OK: system of order {} on [{}, {end}], {}",
                h.order(),
                h.start(),
                if definite { "definite" } else { "not definite" }
            ))
        }
        Loaded::Graph { compiled, vertices, edges } => {
            Ok(format!("OK: {edges} edges, {vertices} vertices, compiled order {}", compiled.order()))
        }
    }
}

/// Parse `re,im`, `re` or `re+imi`-free forms: accepts `a,b` and a plain real `a`.
pub fn parse_z(s: &str) -> Result<C64> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let num = |t: &str| t.parse::<f64>().map_err(|_| Error::Input(format!("bad complex number `{s}`")));
    match parts.as_slice() {
        [re] => Ok(C64::new(num(re)?, 0.0)),
        [re, im] => Ok(C64::new(num(re)?, num(im)?)),
        _ => Err(Error::Input(format!("bad complex number `{s}` (expected re,im)"))),
    }
}

fn read_points(path: &Path) -> Result<Vec<C64>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#') && !l.starts_with("re"))
        .map(parse_z)
        .collect()
}

fn csv_table(header: &[String], rows: &[Vec<String>]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(|e| Error::Input(e.to_string()))?;
    for r in rows {
        w.write_record(r).map_err(|e| Error::Input(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Input(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Input(e.to_string()))
}

fn json<T: Serialize>(v: &T) -> Result<String> {
    serde_json::to_string_pretty(v).map(|s| s + "\n").map_err(|e| Error::Input(e.to_string()))
}

fn num(x: f64) -> String {
    format!("{x}")
}

/// Hermitian weight columns: real diagonal, `re`/`im` above the diagonal.
fn weight_header(n: usize) -> Vec<String> {
    let mut h = Vec::new();
    for i in 1..=n {
        for j in i..=n {
            if i == j {
                h.push(format!("rho_{i}_{j}"));
            } else {
                h.push(format!("rho_{i}_{j}_re"));
                h.push(format!("rho_{i}_{j}_im"));
            }
        }
    }
    h
}

fn weight_cells(m: &CMatrix) -> Vec<String> {
    let n = m.nrows();
    let mut out = Vec::new();
    for i in 0..n {
        for j in i..n {
            if i == j {
                out.push(num(m[(i, i)].re));
            } else {
                out.push(num(m[(i, j)].re));
                out.push(num(m[(i, j)].im));
            }
        }
    }
    out
}

fn matrix_header(prefix: &str, rows: usize, cols: usize) -> Vec<String> {
    let mut h = Vec::new();
    for i in 1..=rows {
        for j in 1..=cols {
            h.push(format!("{prefix}_{i}_{j}_re"));
            h.push(format!("{prefix}_{i}_{j}_im"));
        }
    }
    h
}

fn matrix_cells(m: &CMatrix) -> Vec<String> {
    let mut out = Vec::new();
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.push(num(m[(i, j)].re));
            out.push(num(m[(i, j)].im));
        }
    }
    out
}

#[derive(Serialize)]
struct AtomOut {
    t: f64,
    multiplicity: usize,
    weight: Rows,
}

#[derive(Serialize)]
struct SpectrumOut {
    window: (f64, f64),
    scan_points: usize,
    eigenvalues: Vec<AtomOut>,
    warnings: Vec<String>,
}

#[derive(Serialize)]
struct MPointOut {
    z: [f64; 2],
    status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    m: Option<Rows>,
}

#[derive(Serialize)]
struct MeasureOut {
    window: (f64, f64),
    a: Rows,
    b: Rows,
    atoms: Vec<AtomOut>,
    tail_lower: Rows,
    tail_upper: Rows,
    truncation_bound: f64,
}

#[derive(Serialize)]
struct GreenOut {
    x: f64,
    y: f64,
    z: [f64; 2],
    g: Rows,
}

#[derive(Serialize)]
struct SampleOut {
    x: f64,
    g: Vec<[f64; 2]>,
}

fn window_of(w: &[f64]) -> Result<(f64, f64)> {
    match w {
        [a, b] => Ok((*a, *b)),
        _ => Err(Error::Input("--window takes two numbers".into())),
    }
}

/// Run one command and return the text to emit.
pub fn run(path: &Path, command: &RunCommand, format: Option<OutputFormat>) -> Result<String> {
    let csv = format == Some(OutputFormat::Csv);
    if let RunCommand::Schr2cs = command {
        let Document::Graph(g) = read_document(path)? else {
            return Err(Error::Input("schr2cs needs a graph file".into()));
        };
        let GraphModel::Schrodinger(s) = g.build()? else {
            return Err(Error::Input("schr2cs needs Schrödinger edges".into()));
        };
        let (canonical, residuals) = s.to_canonical()?;
        for (v, orth, iso) in residuals {
            eprintln!("vertex `{v}`: transported condition residuals ‖αα*−I‖ = {orth:.3e}, ‖αJα*‖ = {iso:.3e}");
        }
        let f = if format == Some(OutputFormat::Json) { Format::Json } else { Format::Toml };
        return write_graph(&GraphSpec::from_graph(&canonical), f);
    }
    let loaded = load(path)?;
    match command {
        RunCommand::Compile => match &loaded {
            Loaded::Graph { compiled, .. } => json(&CompiledDocument::new(compiled)?),
            Loaded::System(p) => json(&serde_json::json!({ "system": crate::io::SystemSpec::from_problem(p) })),
        },
        RunCommand::Spectrum { window } => {
            let problem = loaded.problem()?;
            let d = eigenvalues(&problem, window_of(window)?)?;
            for w in &d.warnings {
                eprintln!("warning: {w}");
            }
            if csv {
                let mut header = vec!["t".to_string(), "multiplicity".to_string()];
                header.extend(weight_header(problem.n()));
                let rows: Vec<Vec<String>> = d
                    .points
                    .iter()
                    .map(|p| {
                        let mut r = vec![num(p.t), p.multiplicity.to_string()];
                        r.extend(weight_cells(&p.weight));
                        r
                    })
                    .collect();
                csv_table(&header, &rows)
            } else {
                json(&SpectrumOut {
                    window: d.window,
                    scan_points: d.scan_points,
                    eigenvalues: d
                        .points
                        .iter()
                        .map(|p| AtomOut { t: p.t, multiplicity: p.multiplicity, weight: matrix_to_rows(&p.weight) })
                        .collect(),
                    warnings: d.warnings.iter().map(|w| w.to_string()).collect(),
                })
            }
        }
        RunCommand::Mfunction { points, z } => {
            let problem = loaded.problem()?;
            let mut zs = match points {
                Some(p) => read_points(p)?,
                None => Vec::new(),
            };
            for s in z {
                zs.push(parse_z(s)?);
            }
            let n = problem.n();
            let mut results = Vec::with_capacity(zs.len());
            for &zz in &zs {
                match problem.m(zz) {
                    Ok(m) => results.push((zz, "ok".to_string(), Some(m))),
                    Err(e @ (Error::AtEigenvalue { .. } | Error::RealZ)) => {
                        eprintln!("z = {zz}: {e}");
                        let status = if matches!(e, Error::RealZ) { "RealZ" } else { "AtEigenvalue" };
                        results.push((zz, status.to_string(), None));
                    }
                    Err(e) => return Err(e),
                }
            }
            if csv {
                let mut header = vec!["re_z".to_string(), "im_z".to_string(), "status".to_string()];
                header.extend(matrix_header("m", n, n));
                let rows: Vec<Vec<String>> = results
                    .iter()
                    .map(|(zz, status, m)| {
                        let mut r = vec![num(zz.re), num(zz.im), status.clone()];
                        match m {
                            Some(m) => r.extend(matrix_cells(m)),
                            None => r.extend(std::iter::repeat_n(String::new(), 2 * n * n)),
                        }
                        r
                    })
                    .collect();
                csv_table(&header, &rows)
            } else {
                json(
                    &results
                        .iter()
                        .map(|(zz, status, m)| MPointOut {
                            z: [zz.re, zz.im],
                            status: status.clone(),
                            m: m.as_ref().map(matrix_to_rows),
                        })
                        .collect::<Vec<_>>(),
                )
            }
        }
        RunCommand::Measure { window, tol } => {
            let problem = loaded.problem()?;
            let d = eigenvalues(&problem, window_of(window)?)?;
            for w in &d.warnings {
                eprintln!("warning: {w}");
            }
            let data = herglotz_decompose(&problem, &d, *tol)?;
            let atoms: Vec<AtomOut> = d
                .points
                .iter()
                .map(|p| AtomOut { t: p.t, multiplicity: p.multiplicity, weight: matrix_to_rows(&p.weight) })
                .collect();
            if csv {
                let n = problem.n();
                let mut header = vec!["t".to_string(), "multiplicity".to_string()];
                header.extend(weight_header(n));
                let rows: Vec<Vec<String>> = d
                    .points
                    .iter()
                    .map(|p| {
                        let mut r = vec![num(p.t), p.multiplicity.to_string()];
                        r.extend(weight_cells(&p.weight));
                        r
                    })
                    .collect();
                eprintln!("A = {:?}", matrix_cells(&data.a));
                eprintln!("B = {:?}", matrix_cells(&data.b));
                eprintln!("truncation bound = {}", data.tail.bound);
                csv_table(&header, &rows)
            } else {
                json(&MeasureOut {
                    window: data.window,
                    a: matrix_to_rows(&data.a),
                    b: matrix_to_rows(&data.b),
                    atoms,
                    tail_lower: matrix_to_rows(&data.tail.lower),
                    tail_upper: matrix_to_rows(&data.tail.upper),
                    truncation_bound: data.tail.bound,
                })
            }
        }
        RunCommand::Green { x, y, z } => {
            let problem = loaded.problem()?;
            let zz = parse_z(z)?;
            let g = green(&problem, zz, *x, *y)?;
            if csv {
                let rows: Vec<Vec<String>> = (0..g.nrows())
                    .flat_map(|i| {
                        let g = &g;
                        (0..g.ncols()).map(move |j| {
                            vec![(i + 1).to_string(), (j + 1).to_string(), num(g[(i, j)].re), num(g[(i, j)].im)]
                        })
                    })
                    .collect();
                csv_table(&["row".into(), "col".into(), "re".into(), "im".into()], &rows)
            } else {
                json(&GreenOut { x: *x, y: *y, z: [zz.re, zz.im], g: matrix_to_rows(&g) })
            }
        }
        RunCommand::Resolve { h, z } => {
            let problem = loaded.problem()?;
            let zz = parse_z(z)?;
            let samples = read_samples(h, 2 * problem.n())?;
            let xs: Vec<f64> = samples.iter().map(|(x, _)| *x).collect();
            let interp = |x: f64| -> Result<CVector> { Ok(interpolate(&samples, x)) };
            let sol = apply_resolvent(&problem, zz, interp)?;
            let values = xs.iter().map(|&x| Ok((x, sol.evaluate(x)?))).collect::<Result<Vec<_>>>()?;
            if csv {
                let d = 2 * problem.n();
                let mut header = vec!["x".to_string()];
                for i in 1..=d {
                    header.push(format!("g_{i}_re"));
                    header.push(format!("g_{i}_im"));
                }
                let rows: Vec<Vec<String>> = values
                    .iter()
                    .map(|(x, g)| {
                        let mut r = vec![num(*x)];
                        for v in g.iter() {
                            r.push(num(v.re));
                            r.push(num(v.im));
                        }
                        r
                    })
                    .collect();
                csv_table(&header, &rows)
            } else {
                json(
                    &values
                        .iter()
                        .map(|(x, g)| SampleOut { x: *x, g: g.iter().map(|v| [v.re, v.im]).collect() })
                        .collect::<Vec<_>>(),
                )
            }
        }
        RunCommand::Schr2cs => unreachable!("handled above"),
    }
}

fn read_samples(path: &Path, d: usize) -> Result<Vec<(f64, CVector)>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
    let mut out: Vec<(f64, CVector)> = Vec::new();
    for (line, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
        let vals: std::result::Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        let Ok(vals) = vals else {
            if line == 0 {
                continue;
            }
            return Err(Error::Input(format!("{}: line {}: not numeric", path.display(), line + 1)));
        };
        if vals.len() != d + 1 {
            return Err(Error::Input(format!(
                "{}: line {}: expected x and {d} components",
                path.display(),
                line + 1
            )));
        }
        out.push((vals[0], CVector::from_iterator(d, vals[1..].iter().map(|&v| C64::new(v, 0.0)))));
    }
    if out.is_empty() {
        return Err(Error::Input(format!("{}: no samples", path.display())));
    }
    if out.windows(2).any(|w| !(w[1].0 > w[0].0)) {
        return Err(Error::Input(format!("{}: sample points must increase", path.display())));
    }
    Ok(out)
}

/// Linear interpolation, constant outside the sampled range.
fn interpolate(samples: &[(f64, CVector)], x: f64) -> CVector {
    let first = &samples[0];
    let last = &samples[samples.len() - 1];
    if x <= first.0 {
        return first.1.clone();
    }
    if x >= last.0 {
        return last.1.clone();
    }
    let i = samples.partition_point(|(s, _)| *s <= x) - 1;
    let (x0, v0) = &samples[i];
    let (x1, v1) = &samples[i + 1];
    let w = (x - x0) / (x1 - x0);
    v0 * C64::new(1.0 - w, 0.0) + v1 * C64::new(w, 0.0)
}
