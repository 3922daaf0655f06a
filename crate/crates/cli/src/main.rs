use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fieldsplit::harness::{
    build_field, deploy, emit_report, field_svg, loss_svg, plan, run_scenario, write_atomic, EmitOptions, Format,
    HarnessError, Method, ScenarioConfig, Stage,
};
use fieldsplit::scaling::{scale_time, HardwareMetrics, ScalingWeights};
use fieldsplit::split::{train, ModelSpec};

#[derive(Parser, Debug)]
#[command(name = "fieldsplit", version, about = "Edge placement, UAV tour energy and split-learning simulation")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Scenario file (JSON). Defaults to the built-in 100-acre, 25-sensor scenario.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides every seed in the scenario.
    #[arg(long, global = true, env = "EENERGY_SEED")]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    #[arg(long, global = true, value_enum)]
    format: Option<FormatArg>,
    /// Leave the generation-time comment out of SVG files.
    #[arg(long, global = true)]
    no_timestamp: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
    Svg,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
            FormatArg::Svg => Format::Svg,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MethodArg {
    EenergySplit,
    Kmeans,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::EenergySplit => Method::EenergySplit,
            MethodArg::Kmeans => Method::Kmeans,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Place edge devices and assign sensors.
    Deploy {
        #[arg(long, value_enum, default_value = "eenergy-split")]
        method: MethodArg,
    },
    /// Deploy, route the UAV and count energy-feasible rounds.
    PlanTour {
        #[arg(long, value_enum, default_value = "eenergy-split")]
        method: MethodArg,
    },
    /// Train the split model once per split fraction.
    SimulateSl {
        /// Run only this fraction instead of the configured list.
        #[arg(long)]
        fraction: Option<f64>,
    },
    /// Full pipeline for every configured method and split fraction.
    Compare,
    /// Convert an execution time between hardware profiles.
    ScaleTime {
        #[arg(long)]
        t_src: f64,
        #[arg(long)]
        profile_src: String,
        #[arg(long)]
        profile_tgt: String,
    },
}

fn load(g: &Global) -> Result<ScenarioConfig, HarnessError> {
    let cfg = match &g.config {
        Some(p) => ScenarioConfig::load(p)?,
        None => ScenarioConfig::default(),
    };
    let cfg = match g.seed {
        Some(s) => cfg.with_seed(s),
        None => cfg,
    };
    cfg.validate()?;
    Ok(cfg)
}

fn json<T: serde::Serialize>(value: &T) -> Result<Vec<u8>, HarnessError> {
    let mut v = serde_json::to_vec_pretty(value).map_err(|e| HarnessError::at(Stage::Report, e))?;
    v.push(b'\n');
    Ok(v)
}

fn emit(out: &Path, name: &str, bytes: &[u8]) -> Result<(), HarnessError> {
    let path = out.join(name);
    write_atomic(&path, bytes)?;
    println!("{}", path.display());
    Ok(())
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    let g = &cli.global;
    let opts = EmitOptions {
        svg_timestamp: !g.no_timestamp,
    };
    match cli.command {
        Command::ScaleTime {
            t_src,
            profile_src,
            profile_tgt,
        } => {
            let cfg = |e: fieldsplit::scaling::ScalingError| HarnessError::Config(e.to_string());
            let src = HardwareMetrics::profile(&profile_src).map_err(cfg)?;
            let tgt = HardwareMetrics::profile(&profile_tgt).map_err(cfg)?;
            let t = scale_time(t_src, &src, &tgt, &ScalingWeights::default()).map_err(cfg)?;
            println!("{t:.2}");
        }
        Command::Deploy { method } => {
            let cfg = load(g)?;
            let field = build_field(&cfg)?;
            let dep = deploy(&cfg, &field, method.into())?;
            match g.format.map_or(Format::Csv, Format::from) {
                Format::Csv => {
                    let mut buf = Vec::new();
                    dep.write_csv(&mut buf).map_err(|e| HarnessError::at(Stage::Report, e))?;
                    emit(&g.out, "deployment.csv", &buf)?;
                }
                Format::Json => {
                    let doc = serde_json::json!({ "field": field, "deployment": dep });
                    emit(&g.out, "deployment.json", &json(&doc)?)?;
                }
                Format::Svg => emit(&g.out, "deployment.svg", field_svg(&field, &dep, None).as_bytes())?,
            }
        }
        Command::PlanTour { method } => {
            let cfg = load(g)?;
            let field = build_field(&cfg)?;
            let (dep, p) = plan(&cfg, &field, method.into())?;
            match g.format.map_or(Format::Csv, Format::from) {
                Format::Csv => {
                    let mut buf = Vec::new();
                    p.write_legs_csv(&mut buf).map_err(|e| HarnessError::at(Stage::Report, e))?;
                    emit(&g.out, "tour_legs.csv", &buf)?;
                }
                Format::Json => emit(&g.out, "tour.json", &json(&p)?)?,
                Format::Svg => emit(&g.out, "tour.svg", field_svg(&field, &dep, Some(&p)).as_bytes())?,
            }
        }
        Command::SimulateSl { fraction } => {
            let cfg = load(g)?;
            let sl = &cfg.split_learning;
            let fractions = fraction.map_or_else(|| sl.split_fractions.clone(), |f| vec![f]);
            if let Some(f) = fractions.iter().find(|f| !(0.0..=1.0).contains(*f)) {
                return Err(HarnessError::Config(format!("split fraction {f} outside [0, 1]")));
            }
            let layers = sl.layer_sizes.len().saturating_sub(1);
            let format = g.format.map_or(Format::Csv, Format::from);
            let mut traces = Vec::new();
            for f in fractions {
                let split = ModelSpec::split_for_fraction(layers, f);
                let (trace, _) = train(&ModelSpec::new(sl.layer_sizes.clone(), split), &sl.federation)
                    .map_err(|e| HarnessError::at(Stage::SplitLearning, e))?;
                if format == Format::Csv {
                    let mut buf = Vec::new();
                    trace.write_csv(&mut buf).map_err(|e| HarnessError::at(Stage::Report, e))?;
                    emit(&g.out, &format!("sl_trace_{f}.csv"), &buf)?;
                }
                traces.push((f, split, trace));
            }
            match format {
                Format::Csv => {}
                Format::Json => {
                    let doc: Vec<_> = traces
                        .iter()
                        .map(|(f, s, t)| serde_json::json!({ "fraction": f, "split_index": s, "trace": t }))
                        .collect();
                    emit(&g.out, "sl_traces.json", &json(&doc)?)?;
                }
                Format::Svg => {
                    let series: Vec<(String, Vec<f64>)> = traces
                        .into_iter()
                        .map(|(f, s, t)| (format!("fraction {f} (cut {s})"), t.step_losses))
                        .collect();
                    emit(&g.out, "sl_loss.svg", loss_svg(&series).as_bytes())?;
                }
            }
        }
        Command::Compare => {
            let cfg = load(g)?;
            let report = run_scenario(&cfg)?;
            let formats = match g.format {
                Some(f) => vec![f.into()],
                None => vec![Format::Csv, Format::Svg],
            };
            for f in formats {
                println!("{}", emit_report(&report, f, &g.out, opts)?.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 1 } else { 2 })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn command_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn global_flags_parse_after_subcommand() {
        let cli = Cli::try_parse_from([
            "fieldsplit", "scale-time", "--t-src", "1", "--profile-src", "rtx-class",
            "--profile-tgt", "jetson-class", "--seed", "5", "--format", "json",
        ])
        .unwrap();
        assert_eq!(cli.global.seed, Some(5));
        assert!(matches!(cli.global.format, Some(FormatArg::Json)));
        assert!(Cli::try_parse_from(["fieldsplit", "bogus"]).is_err());
    }
}
