//! `spinform`: run scenes end to end, write meshes and residual reports, and
//! list the scene catalog.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use serde_json::{json, Map, Value};

use spinform::mesh::write_obj;
use spinform::pipeline::{run_pipeline, Pipeline, PipelineOutput, Tolerances};
use spinform::report::ResidualReport;
use spinform::scene::{catalog, scene_by_name, Ambient, Scene};
use spinform::spaceforms::hyperboloid_to_poincare;

/// Exit status when a residual exceeds its tolerance.
const EXIT_RESIDUALS: u8 = 1;
/// Exit status for configuration, scene and I/O errors.
const EXIT_ERROR: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "spinform", version, about = "Reconstruct submanifolds from generalized Killing spinors")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve a scene and check the residuals against their tolerances.
    Run(RunArgs),
    /// List the built-in scenes.
    Scenes {
        /// Machine-readable output.
        #[arg(long)]
        json: bool,
    },
}

#[derive(clap::Args, Debug)]
struct RunArgs {
    /// Catalog scene name, or path to a scene JSON file.
    scene: String,
    /// Nodes per axis (at least 9).
    #[arg(long)]
    resolution: Option<usize>,
    /// Write the reconstructed surface as OBJ (surfaces only).
    #[arg(long)]
    mesh: Option<PathBuf>,
    /// Write the residual report as JSON.
    #[arg(long)]
    report: Option<PathBuf>,
    /// reconstruct, verify, weierstrass or roundtrip.
    #[arg(long, default_value = "verify")]
    pipeline: Pipeline,
    /// Tolerance override, `name=value`; repeatable.
    #[arg(long = "tol", value_parser = parse_override)]
    tolerances: Vec<(String, f64)>,
    /// Export hyperbolic meshes in the Poincaré ball instead of the hyperboloid.
    #[arg(long)]
    poincare: bool,
}

fn parse_override(s: &str) -> std::result::Result<(String, f64), String> {
    let (name, value) = s.split_once('=').ok_or_else(|| format!("expected name=value, got `{s}`"))?;
    let v: f64 = value.parse().map_err(|e| format!("bad tolerance `{value}`: {e}"))?;
    if !(v >= 0.0) {
        return Err(format!("tolerance must be nonnegative, got {v}"));
    }
    Ok((name.to_string(), v))
}

fn load_scene(arg: &str) -> Result<Scene> {
    let path = Path::new(arg);
    if path.extension().is_some_and(|e| e == "json") || path.is_file() {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading scene file {arg}"))?;
        return Scene::from_json(&text).with_context(|| format!("parsing scene file {arg}"));
    }
    Ok(scene_by_name(arg)?)
}

fn entries_json(report: &ResidualReport) -> Value {
    let map: Map<String, Value> =
        report.entries.iter().map(|(k, e)| (k.clone(), json!({ "max": e.max, "mean": e.mean }))).collect();
    Value::Object(map)
}

fn report_json(out: &PipelineOutput, tol: &Tolerances) -> Value {
    let h = out.grid.max_spacing();
    let tolerances: Map<String, Value> =
        out.report.entries.keys().map(|k| (k.clone(), json!(tol.for_entry(k, h)))).collect();
    let failures = out.failures(tol);
    json!({
        "schema": 1,
        "scene": out.scene,
        "pipeline": out.pipeline.name(),
        "resolution": out.grid.counts,
        "residuals": entries_json(&out.report),
        "tolerances": tolerances,
        "diagnostics": entries_json(&out.diagnostics),
        "failures": failures,
        "pass": failures.is_empty(),
        "timestamp": chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
    })
}

fn run(args: RunArgs) -> Result<bool> {
    let mut scene = load_scene(&args.scene)?;
    if let Some(res) = args.resolution {
        scene = scene.with_resolution(res)?;
    }
    let tol = Tolerances { overrides: args.tolerances.into_iter().collect::<BTreeMap<_, _>>(), ..Default::default() };
    let out = run_pipeline(&scene, args.pipeline).with_context(|| format!("running {} on {}", args.pipeline, scene.name))?;
    let doc = report_json(&out, &tol);

    let text = serde_json::to_string_pretty(&doc)? + "\n";
    match &args.report {
        Some(path) => std::fs::write(path, &text).with_context(|| format!("writing report {}", path.display()))?,
        None => print!("{text}"),
    }
    if let Some(path) = &args.mesh {
        if scene.p != 2 {
            bail!("meshes are only written for surfaces, scene has p = {}", scene.p);
        }
        let imm = out.immersion.as_ref().context("pipeline produced no immersion")?;
        let positions: Vec<Vec<f64>> = if args.poincare && scene.ambient == Ambient::Hyperbolic {
            imm.positions.iter().map(|x| hyperboloid_to_poincare(x)).collect()
        } else {
            imm.positions.clone()
        };
        write_obj(path, &positions, &out.grid).with_context(|| format!("writing mesh {}", path.display()))?;
    }
    let failures = out.failures(&tol);
    for name in &failures {
        eprintln!("residual `{name}` above tolerance: {:.3e}", out.report.max(name));
    }
    Ok(failures.is_empty())
}

fn scenes(as_json: bool) -> Result<()> {
    if as_json {
        let list: Vec<Value> = catalog()
            .iter()
            .map(|e| json!({ "name": e.name, "p": e.p, "q": e.q, "ambient": e.ambient, "oracle": e.oracle }))
            .collect();
        println!("{}", serde_json::to_string_pretty(&list)?);
    } else {
        println!("{:<20} {:>2} {:>2}  {:<11} oracle", "name", "p", "q", "ambient");
        for e in catalog() {
            let ambient = serde_json::to_value(e.ambient)?;
            println!("{:<20} {:>2} {:>2}  {:<11} {}", e.name, e.p, e.q, ambient.as_str().unwrap_or_default(), e.oracle);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(args) => run(args),
        Command::Scenes { json } => scenes(json).map(|()| true),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_RESIDUALS),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
