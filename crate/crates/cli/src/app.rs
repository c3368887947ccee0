//! Argument parsing and subcommand execution.

use std::collections::BTreeMap;
use std::fmt::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use graph_eikonal::hydra::wave_snapshot;
use graph_eikonal::pipeline::{parse_sources, run, Run};
use graph_eikonal::poly::{Piece, PiecewisePoly, Poly};
use graph_eikonal::rational::{fmt_rational, parse_rational, Rational};
use graph_eikonal::verify::{verify, Report};
use graph_eikonal::{Error, MetricGraph};

use crate::dto::{self, ConfigEcho, Envelope, Output, WaveValueDto};
use crate::svg;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_INVARIANT: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "eikonal", version, about = "Exact wave hydras and eikonal algebras on metric graphs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Particle segments, amplitudes and corner points of each source.
    Hydra(Common),
    /// Families of cells of the multi-source partition with their eigenvalue maps.
    Partition(Common),
    /// Projection blocks per family and source, optionally evaluated at `--at`.
    Eikonal(Common),
    /// Standard-algebra decomposition of the eikonal algebra.
    Classify(Common),
    /// Exact wave values at given points for piecewise-polynomial controls.
    Wave(WaveArgs),
    /// Runs the invariant suite; exits with 2 if anything fails.
    Verify(Common),
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Graph description (JSON).
    #[arg(long)]
    pub graph: PathBuf,
    /// Controlled boundary vertices.
    #[arg(long, value_delimiter = ',', required = true)]
    pub sigma: Vec<String>,
    /// Final time, as an integer or `p/q`.
    #[arg(long = "T", value_name = "RATIONAL")]
    pub horizon: String,
    /// Write the result envelope here (`-` for stdout).
    #[arg(long)]
    pub json: Option<PathBuf>,
    /// Write a space-time diagram here.
    #[arg(long)]
    pub svg: Option<PathBuf>,
    /// Family parameter at which to evaluate the generators.
    #[arg(long)]
    pub at: Option<String>,
    /// Restrict to one family (1-based).
    #[arg(long)]
    pub family: Option<usize>,
    /// Seed for the random elements used by the block decomposition.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct WaveArgs {
    #[command(flatten)]
    pub common: Common,
    /// Controls per source (JSON): `{"g1": [{"start": "0", "end": "1", "coeffs": ["0", "1"]}]}`.
    #[arg(long)]
    pub controls: PathBuf,
    /// Points such as `e1@1/4` or `v`.
    #[arg(long = "point", required = true)]
    pub points: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError {
            code: EXIT_INPUT,
            message: format!("[{}] {e}", e.module()),
        }
    }
}

fn input_error(message: impl Into<String>) -> CliError {
    CliError {
        code: EXIT_INPUT,
        message: message.into(),
    }
}

/// What a subcommand produced; `main` decides where it goes.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub envelope: Envelope,
    pub summary: String,
    pub svg: Option<String>,
    pub code: i32,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PieceSpec {
    start: String,
    end: String,
    coeffs: Vec<String>,
}

/// Parses `{"source id": [pieces...]}`; each piece is a polynomial in `s - start`.
pub fn parse_controls(text: &str) -> Result<BTreeMap<String, PiecewisePoly>, Error> {
    let raw: BTreeMap<String, Vec<PieceSpec>> =
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("controls: {e}")))?;
    let mut out = BTreeMap::new();
    for (id, pieces) in raw {
        let pieces = pieces
            .into_iter()
            .map(|p| {
                Ok(Piece {
                    start: parse_rational(&p.start)?,
                    end: parse_rational(&p.end)?,
                    poly: Poly::new(p.coeffs.iter().map(|c| parse_rational(c)).collect::<Result<_, _>>()?),
                })
            })
            .collect::<Result<Vec<_>, Error>>()?;
        out.insert(id, PiecewisePoly::new(pieces)?);
    }
    Ok(out)
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| input_error(format!("cannot read {}: {e}", path.display())))
}

struct Loaded {
    graph: MetricGraph,
    run: Run,
    echo: ConfigEcho,
}

fn load(c: &Common) -> Result<Loaded, CliError> {
    let graph = MetricGraph::from_json(&read(&c.graph)?)?;
    let horizon = parse_rational(&c.horizon)?;
    let sources = parse_sources(&graph, &c.sigma.join(","))?;
    if let Some(r) = &c.at {
        parse_rational(r)?;
    }
    let run = run(&graph, &sources, &horizon, c.seed)?;
    if let Some(f) = c.family {
        if f == 0 || f > run.sigma.families.len() {
            return Err(input_error(format!(
                "family {f} does not exist (there are {})",
                run.sigma.families.len()
            )));
        }
    }
    let echo = ConfigEcho {
        graph: c.graph.display().to_string(),
        sigma: c.sigma.clone(),
        horizon: fmt_rational(&horizon),
        seed: c.seed,
        family: c.family,
        at: c.at.clone(),
    };
    Ok(Loaded { graph, run, echo })
}

fn envelope(command: &str, l: &Loaded, output: Output) -> Envelope {
    Envelope {
        command: command.to_string(),
        config: l.echo.clone(),
        output,
        diagnostics: l.run.diagnostics.clone(),
    }
}

fn families_in_scope(c: &Common, l: &Loaded) -> Vec<usize> {
    match c.family {
        Some(f) => vec![f - 1],
        None => (0..l.run.sigma.families.len()).collect(),
    }
}

pub fn execute(cmd: &Command) -> Result<Outcome, CliError> {
    match cmd {
        Command::Hydra(c) => hydra(c),
        Command::Partition(c) => partition(c),
        Command::Eikonal(c) => eikonal(c),
        Command::Classify(c) => classify(c),
        Command::Wave(w) => wave(w),
        Command::Verify(c) => verify_cmd(c),
    }
}

fn hydra(c: &Common) -> Result<Outcome, CliError> {
    let l = load(c)?;
    let g = &l.graph;
    let mut summary = String::new();
    for s in &l.run.sources {
        let _ = writeln!(
            summary,
            "source {}: {} segments, {} corner points",
            g.vertex(s.source).id,
            s.hydra.segments.len(),
            s.hydra.corners.len()
        );
        for seg in &s.hydra.segments {
            let _ = writeln!(
                summary,
                "  {}  ({}, {}) -> ({}, {})  a = {}",
                g.edge(seg.edge).id,
                seg.o0,
                seg.t0,
                seg.o1,
                seg.t1,
                seg.value
            );
        }
    }
    let segs: Vec<&[_]> = l.run.sources.iter().map(|s| s.hydra.segments.as_slice()).collect();
    let svg = c.svg.as_ref().map(|_| svg::hydra_svg(g, &l.run.horizon, &segs));
    Ok(Outcome {
        envelope: envelope("hydra", &l, Output::Hydra(dto::hydras(g, &l.run))),
        summary,
        svg,
        code: EXIT_OK,
    })
}

fn partition(c: &Common) -> Result<Outcome, CliError> {
    let l = load(c)?;
    let g = &l.graph;
    let p = dto::partition(g, &l.run.sigma, &l.run.blocks);
    let mut summary = String::new();
    for fam in &p.families {
        let cells: Vec<String> = fam.cells.iter().map(|c| format!("{}({},{})", c.edge, c.lo, c.hi)).collect();
        let _ = writeln!(summary, "family {}  eps = {}  cells {}", fam.id, fam.eps, cells.join(" "));
        for t in &fam.taus {
            let _ = writeln!(summary, "  tau[{}] = {}", t.source, t.tau);
        }
    }
    let segs: Vec<&[_]> = l.run.sources.iter().map(|s| s.hydra.segments.as_slice()).collect();
    let svg = c.svg.as_ref().map(|_| svg::partition_svg(g, &l.run.sigma, &segs));
    Ok(Outcome {
        envelope: envelope("partition", &l, Output::Partition(p)),
        summary,
        svg,
        code: EXIT_OK,
    })
}

fn eikonal(c: &Common) -> Result<Outcome, CliError> {
    let l = load(c)?;
    let g = &l.graph;
    let at = c.at.as_deref().map(parse_rational).transpose()?;
    let mut blocks = Vec::new();
    let mut summary = String::new();
    for f in families_in_scope(c, &l) {
        for b in &l.run.blocks[f] {
            let value = match &at {
                Some(r) => Some(b.evaluate(r)?),
                None => None,
            };
            let d = dto::block(g, &l.run.sigma, b, value.as_ref());
            let _ = writeln!(summary, "family {} source {}  eps = {}", d.family, d.source, d.eps);
            for row in &d.rows {
                let _ = writeln!(summary, "  tau = {}  P = {}", row.tau, rows_text(&row.projection));
            }
            if let (Some(r), Some(v)) = (&at, &d.value) {
                let _ = writeln!(summary, "  E({}) = {}", r, rows_text(v));
            }
            blocks.push(d);
        }
    }
    Ok(Outcome {
        envelope: envelope("eikonal", &l, Output::Eikonal(blocks)),
        summary,
        svg: None,
        code: EXIT_OK,
    })
}

fn rows_text(m: &[Vec<String>]) -> String {
    let rows: Vec<String> = m.iter().map(|r| format!("[{}]", r.join(", "))).collect();
    format!("[{}]", rows.join(", "))
}

fn classify(c: &Common) -> Result<Outcome, CliError> {
    let l = load(c)?;
    let d = dto::descriptor(&l.run.descriptor);
    let mut summary = format!("{}\n", d.rendered);
    for link in d.links.iter().filter(|k| k.glued) {
        let _ = writeln!(summary, "  glued {} ~ {}", link.a, link.b);
    }
    for s in &d.summands {
        if let Some(b) = &s.endpoint_blocks {
            let _ = writeln!(summary, "  {}: endpoint blocks {:?}", s.text, b);
        }
    }
    Ok(Outcome {
        envelope: envelope("classify", &l, Output::Classify(d)),
        summary,
        svg: None,
        code: EXIT_OK,
    })
}

fn wave(w: &WaveArgs) -> Result<Outcome, CliError> {
    let l = load(&w.common)?;
    let g = &l.graph;
    let controls = parse_controls(&read(&w.controls)?)?;
    for id in controls.keys() {
        if !w.common.sigma.contains(id) {
            return Err(input_error(format!("control given for {id}, which is not controlled")));
        }
    }
    let hydras: Vec<_> = l.run.sources.iter().map(|s| s.hydra.clone()).collect();
    let phis: Vec<PiecewisePoly> = l
        .run
        .sources
        .iter()
        .map(|s| controls.get(&g.vertex(s.source).id).cloned().unwrap_or_default())
        .collect();
    let mut values = Vec::new();
    let mut summary = String::new();
    for p in &w.points {
        let x = g.parse_point(p)?;
        let u: Rational = wave_snapshot(g, &hydras, &phis, &x)?;
        let _ = writeln!(summary, "{}  {}", g.label(&x), fmt_rational(&u));
        values.push(WaveValueDto {
            point: g.label(&x),
            value: fmt_rational(&u),
        });
    }
    Ok(Outcome {
        envelope: envelope("wave", &l, Output::Wave(values)),
        summary,
        svg: None,
        code: EXIT_OK,
    })
}

/// Exit code for an invariant report.
pub fn report_code(report: &Report) -> i32 {
    if report.all_passed() {
        EXIT_OK
    } else {
        EXIT_INVARIANT
    }
}

fn verify_cmd(c: &Common) -> Result<Outcome, CliError> {
    let l = load(c)?;
    let report = verify(&l.graph, &l.run);
    let mut summary = String::new();
    for ch in &report.checks {
        let tag = if ch.passed { "PASS" } else { "FAIL" };
        let _ = writeln!(summary, "{tag} {} ({})", ch.name, ch.detail);
    }
    let code = report_code(&report);
    if code == EXIT_OK {
        summary.push_str("all invariants hold\n");
    } else {
        let _ = writeln!(summary, "{} invariant(s) violated", report.failures().len());
    }
    Ok(Outcome {
        envelope: envelope("verify", &l, Output::Verify(dto::checks(&report))),
        summary,
        svg: None,
        code,
    })
}

/// Parses arguments, runs, writes files; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    let common = match &cli.command {
        Command::Wave(w) => &w.common,
        Command::Hydra(c)
        | Command::Partition(c)
        | Command::Eikonal(c)
        | Command::Classify(c)
        | Command::Verify(c) => c,
    };
    match execute(&cli.command) {
        Ok(out) => {
            let json = serde_json::to_string_pretty(&out.envelope).expect("envelope serializes");
            match &common.json {
                Some(p) if p.as_os_str() == "-" => println!("{json}"),
                Some(p) => {
                    if let Err(e) = std::fs::write(p, json + "\n") {
                        eprintln!("error: cannot write {}: {e}", p.display());
                        return EXIT_INPUT;
                    }
                    print!("{}", out.summary);
                }
                None => print!("{}", out.summary),
            }
            if let (Some(p), Some(s)) = (&common.svg, &out.svg) {
                if let Err(e) = std::fs::write(p, s) {
                    eprintln!("error: cannot write {}: {e}", p.display());
                    return EXIT_INPUT;
                }
            }
            out.code
        }
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use graph_eikonal::rational::{frac, int};
    use graph_eikonal::verify::Check;

    #[test]
    fn controls_use_the_local_variable() {
        let c = parse_controls(r#"{"g1": [{"start": "1/4", "end": "9/4", "coeffs": ["0", "0", "0", "1"]}]}"#).unwrap();
        let phi = &c["g1"];
        assert_eq!(phi.eval(&int(2)), frac(343, 64));
        assert_eq!(phi.eval(&frac(1, 8)), int(0));
    }

    #[test]
    fn malformed_controls_are_rejected() {
        for text in [
            "[]",
            r#"{"g1": [{"start": "0", "end": "1"}]}"#,
            r#"{"g1": [{"start": "0.5", "end": "1", "coeffs": ["1"]}]}"#,
            r#"{"g1": [{"start": "1", "end": "0", "coeffs": ["1"]}]}"#,
            r#"{"g1": [{"start": "0", "end": "2", "coeffs": ["1"]}, {"start": "1", "end": "3", "coeffs": ["1"]}]}"#,
        ] {
            assert!(parse_controls(text).is_err(), "{text}");
        }
    }

    #[test]
    fn failed_invariants_exit_with_two() {
        let check = |passed| Check {
            name: "x",
            passed,
            detail: String::new(),
        };
        assert_eq!(report_code(&Report { checks: vec![check(true)] }), EXIT_OK);
        assert_eq!(report_code(&Report { checks: vec![check(true), check(false)] }), EXIT_INVARIANT);
    }
}
