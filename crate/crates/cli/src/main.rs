//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage or parse error, 2 genericity failure after
//! all γ retries, 3 loop or trace failure, 4 template mismatch or a failed
//! invariant check.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bandtrace::config::{parse_config, RunConfig, SvgOutput};
use bandtrace::pipeline::{run_double_points, run_pipeline, RunReport};
use bandtrace::report::{to_json, to_json_string, verify_report};
use bandtrace::svg::{render_svg, View};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::Value;

#[derive(Parser)]
#[command(name = "bandtrace", version, about = "Braids of perturbed branched disks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ViewArg {
    Disk,
    Braid,
}

#[derive(Subcommand)]
enum Command {
    /// Find double points and check genericity.
    DoublePoints {
        config: PathBuf,
        /// Write the JSON report here instead of stdout.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run the full pipeline and print the braid and its invariants.
    Trace {
        config: PathBuf,
        /// Also write the JSON report.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Re-run the invariant suite on a stored JSON report.
    Verify { report: PathBuf },
    /// Render a view of a config (runs the pipeline) or a stored report (.json).
    Plot {
        input: PathBuf,
        #[arg(long, value_enum, default_value = "braid")]
        view: ViewArg,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run several configs in parallel and write one report per config.
    Report {
        #[arg(required = true)]
        configs: Vec<PathBuf>,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
}

#[derive(Debug)]
struct Failure(u8, String);

impl Failure {
    fn usage(msg: impl Into<String>) -> Self {
        Failure(1, msg.into())
    }
}

fn load_config(path: &Path) -> Result<RunConfig, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    parse_config(&text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn write_out(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| Failure::usage(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn status(report: &RunReport) -> Result<(), Failure> {
    match &report.failure {
        None => Ok(()),
        Some(f) => Err(Failure(
            report.exit_code() as u8,
            format!("{} stage failed: {}", f.stage.name(), f.message),
        )),
    }
}

fn summary(r: &RunReport) -> String {
    let mut out = format!("double points: {}\n", r.double_points.len());
    for (i, d) in r.double_points.iter().enumerate() {
        out.push_str(&format!(
            "  p{i} = {:.6}{:+.6}i  sign {:+}\n",
            d.image.z1.re,
            d.image.z1.im,
            d.sign.value()
        ));
    }
    if let Some(t) = &r.traced {
        let w = t.word.to_text();
        out.push_str(&format!("word: {}\n", if w.is_empty() { "(empty)" } else { &w }));
    }
    if let Some(b) = &r.bands {
        out.push_str(&format!("bands: {}\n", b.bands.len()));
    }
    if let Some(i) = &r.invariants {
        out.push_str(&format!("exponent sum: {}\ncomponents: {}\n", i.exponent_sum, i.components));
        if let Some(a) = &i.alexander {
            out.push_str(&format!("alexander: {a}\n"));
        }
        if let Some(g) = i.genus {
            out.push_str(&format!("genus: {g}\n"));
        }
    }
    for c in &r.checks {
        out.push_str(&format!("check {}: {}\n", c.name, if c.passed { "pass" } else { "FAIL" }));
    }
    out
}

fn verify(path: &Path) -> Result<(), Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    let v: Value = serde_json::from_str(&text)
        .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    let checks = verify_report(&v).map_err(Failure::usage)?;
    let mut ok = true;
    for c in &checks {
        println!("{} {}: {}", if c.passed { "pass" } else { "FAIL" }, c.name, c.detail);
        ok &= c.passed;
    }
    if ok {
        Ok(())
    } else {
        Err(Failure(4, "invariant checks failed".into()))
    }
}

fn plot(input: &Path, view: ViewArg, output: Option<&Path>) -> Result<(), Failure> {
    let view = match view {
        ViewArg::Disk => View::Disk,
        ViewArg::Braid => View::Braid,
    };
    let report: Value = if input.extension().is_some_and(|e| e == "json") {
        let text = fs::read_to_string(input)
            .map_err(|e| Failure::usage(format!("{}: {e}", input.display())))?;
        serde_json::from_str(&text).map_err(|e| Failure::usage(format!("{}: {e}", input.display())))?
    } else {
        let mut cfg = load_config(input)?;
        if view == View::Disk {
            cfg.outputs.svg = SvgOutput::Disk;
        }
        let r = run_pipeline(&cfg);
        if let Some(f) = &r.failure {
            eprintln!("warning: {} stage failed: {}", f.stage.name(), f.message);
        }
        to_json(&r)
    };
    let svg = render_svg(&report, view).map_err(|e| Failure::usage(e.to_string()))?;
    write_out(output, &svg)
}

fn batch(configs: &[PathBuf], out_dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(out_dir).map_err(|e| Failure::usage(format!("{}: {e}", out_dir.display())))?;
    let loaded: Vec<(PathBuf, RunConfig)> = configs
        .iter()
        .map(|p| load_config(p).map(|c| (p.clone(), c)))
        .collect::<Result<_, _>>()?;
    let results: Vec<(PathBuf, RunReport)> = std::thread::scope(|s| {
        let handles: Vec<_> = loaded
            .iter()
            .map(|(p, c)| s.spawn(move || (p.clone(), run_pipeline(c))))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("pipeline thread panicked"))
            .collect()
    });
    let mut worst = 0u8;
    for (path, r) in &results {
        let stem = path.file_stem().map_or("run".into(), |s| s.to_string_lossy().into_owned());
        let json = to_json(r);
        let mut written = Vec::new();
        if r.config.outputs.json {
            let p = out_dir.join(format!("{stem}.json"));
            write_out(Some(&p), &to_json_string(r))?;
            written.push(p);
        }
        let svg = r.config.outputs.svg;
        let views = [
            (matches!(svg, SvgOutput::Disk | SvgOutput::Both), View::Disk, "disk"),
            (matches!(svg, SvgOutput::Braid | SvgOutput::Both), View::Braid, "braid"),
        ];
        for (want, view, name) in views {
            if want {
                if let Ok(doc) = render_svg(&json, view) {
                    let p = out_dir.join(format!("{stem}.{name}.svg"));
                    write_out(Some(&p), &doc)?;
                    written.push(p);
                }
            }
        }
        let code = r.exit_code() as u8;
        worst = worst.max(code);
        let outcome = match &r.failure {
            None => "ok".to_string(),
            Some(f) => format!("{} failed: {}", f.stage.name(), f.message),
        };
        let files: Vec<String> = written.iter().map(|p| p.display().to_string()).collect();
        println!("{}: {outcome} [{}]", path.display(), files.join(", "));
    }
    if worst == 0 {
        Ok(())
    } else {
        Err(Failure(worst, "some runs failed".into()))
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::DoublePoints { config, output } => {
            let r = run_double_points(&load_config(&config)?);
            write_out(output.as_deref(), &to_json_string(&r))?;
            status(&r)
        }
        Command::Trace { config, json } => {
            let r = run_pipeline(&load_config(&config)?);
            print!("{}", summary(&r));
            if let Some(p) = json {
                write_out(Some(&p), &to_json_string(&r))?;
            }
            status(&r)
        }
        Command::Verify { report } => verify(&report),
        Command::Plot { input, view, output } => plot(&input, view, output.as_deref()),
        Command::Report { configs, out_dir } => batch(&configs, &out_dir),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure(code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
