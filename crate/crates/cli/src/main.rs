//! Command line front end: synthesize datasets, compute distance matrices,
//! fit pipelines, predict, explain components, run permutation tests and
//! render reports.

use clap::{Parser, Subcommand};
use mdreg::pipeline::config::{PipelineConfig, SpaceKind};
use mdreg::pipeline::io::{
    load_covariates, load_dataset, load_object, save_dataset, Dataset, Object,
    ObjectSet,
};
use mdreg::pipeline::report::{render_report, summarize, ReportOptions};
use mdreg::pipeline::synth::{synth_dataset, SynthKind};
use mdreg::pipeline::{fit_pipeline, FittedPipeline};
use mdreg::{Error, Result};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "mdreg",
    about = "Distance-based regression for shapes, curves, correlation matrices and points",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset plus a ready-to-fit configuration.
    Synth {
        /// shapes-on-shapes | curve-on-shape | speed-on-corrmat
        #[arg(long)]
        scenario: String,
        #[arg(long, default_value_t = 12)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Effect size; 0 yields an exact null.
        #[arg(long, default_value_t = 1.0)]
        signal: f64,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Compute the pairwise distance matrix of a dataset as CSV.
    Distmat {
        /// shape | curve | corr | point
        #[arg(long)]
        space: String,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit the pipeline described by a configuration file.
    Fit {
        #[arg(long)]
        config: PathBuf,
        /// Where to store the fitted model (JSON).
        #[arg(long)]
        out: PathBuf,
    },
    /// Predict the response object for a new predictor.
    Predict {
        #[arg(long)]
        model: PathBuf,
        /// A single-subject file in the predictor space's format.
        #[arg(long)]
        input: PathBuf,
        /// Comma-separated covariate values matching the training columns.
        #[arg(long)]
        covariates: Option<String>,
        /// Output file; printed as JSON when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Backscore a +/- c standard-deviation perturbation of one predictor
    /// component together with the model's paired response objects.
    Explain {
        #[arg(long)]
        model: PathBuf,
        /// 1-based predictor component.
        #[arg(long, default_value_t = 1)]
        component: usize,
        /// Perturbation size in component standard deviations.
        #[arg(long, default_value_t = 2.0)]
        magnitude: f64,
        #[arg(long, default_value_t = 1.0)]
        amplification: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Permutation F-test of the response or of one design block.
    Test {
        #[arg(long)]
        model: PathBuf,
        /// "response", "scores", or a covariate column name.
        #[arg(long, default_value = "response")]
        target: String,
        #[arg(long, default_value_t = 199)]
        replicates: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render summary.json, explain.json and SVG visualizations.
    Report {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        component: usize,
        #[arg(long, default_value_t = 2.0)]
        magnitude: f64,
        #[arg(long, default_value_t = 1.0)]
        amplification: f64,
        /// Also run the response permutation test with this many replicates.
        #[arg(long)]
        replicates: Option<usize>,
    },
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dataset_file(space: SpaceKind, stem: &str) -> String {
    match space {
        SpaceKind::Shape => format!("{stem}.json"),
        SpaceKind::Curve => format!("{stem}.csv"),
        SpaceKind::Corr => format!("{stem}_manifest.json"),
        SpaceKind::Point => format!("{stem}.csv"),
    }
}

/// Dataset paths in a config file are taken relative to the config itself.
fn resolve(base: &Path, p: &str) -> PathBuf {
    let path = Path::new(p);
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        base.parent().unwrap_or(Path::new(".")).join(path)
    }
}

fn load_model(path: &Path) -> Result<FittedPipeline> {
    FittedPipeline::from_json(&std::fs::read_to_string(path)?)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text)?;
    Ok(())
}

fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Synth {
            scenario,
            n,
            seed,
            signal,
            out,
        } => {
            let kind: SynthKind = scenario.parse()?;
            let ds = synth_dataset(kind, n, seed, signal)?;
            std::fs::create_dir_all(&out)?;
            let mut cfg = ds.config;
            cfg.predictor_path = dataset_file(cfg.predictor_space, "predictors");
            cfg.response_path = dataset_file(cfg.response_space, "responses");
            save_dataset(
                &Dataset {
                    ids: ds.ids.clone(),
                    objects: ds.predictors,
                },
                &out.join(&cfg.predictor_path),
            )?;
            save_dataset(
                &Dataset {
                    ids: ds.ids,
                    objects: ds.responses,
                },
                &out.join(&cfg.response_path),
            )?;
            let cfg_path = out.join("pipeline.conf");
            write_text(&cfg_path, &cfg.emit())?;
            println!("wrote {}", cfg_path.display());
            Ok(())
        }
        Command::Distmat { space, data, out } => {
            let kind: SpaceKind = space.parse()?;
            let ds = load_dataset(kind, &data)?;
            let d = ds.objects.distance_matrix()?;
            d.write_csv(&out)?;
            println!("wrote {} ({} subjects)", out.display(), d.n());
            Ok(())
        }
        Command::Fit { config, out } => {
            let cfg = PipelineConfig::parse(&std::fs::read_to_string(&config)?)?;
            let predictors = load_dataset(
                cfg.predictor_space,
                &resolve(&config, &cfg.predictor_path),
            )?;
            let responses =
                load_dataset(cfg.response_space, &resolve(&config, &cfg.response_path))?;
            if predictors.ids != responses.ids {
                return Err(Error::InvalidInput(
                    "predictor and response subject ids disagree".into(),
                ));
            }
            let covariates = match &cfg.covariate_path {
                Some(p) => Some(load_covariates(&resolve(&config, p))?),
                None => None,
            };
            let fp = fit_pipeline(
                predictors.ids,
                predictors.objects,
                responses.objects,
                covariates,
                cfg,
            )?;
            write_text(&out, &fp.to_json()?)?;
            println!(
                "fit: n={} predictor_dims={} response_dims={} components={} r2={:.4}",
                fp.n(),
                fp.predictor_embedding.k,
                fp.response_embedding.k,
                fp.pls.a,
                fp.assessment.r2
            );
            println!("wrote {}", out.display());
            Ok(())
        }
        Command::Predict {
            model,
            input,
            covariates,
            out,
        } => {
            let fp = load_model(&model)?;
            let x = load_object(fp.config.predictor_space, &input)?;
            let extra: Vec<f64> = match covariates {
                Some(s) => s
                    .split(',')
                    .map(|tok| {
                        tok.trim().parse().map_err(|_| {
                            Error::InvalidInput(format!("bad covariate value {tok:?}"))
                        })
                    })
                    .collect::<Result<_>>()?,
                None => Vec::new(),
            };
            let pred = fp.predict_new(&x, &extra)?;
            match out {
                Some(path) => {
                    let set = singleton(&pred);
                    save_dataset(
                        &Dataset {
                            ids: vec!["prediction".into()],
                            objects: set,
                        },
                        &path,
                    )?;
                    println!("wrote {}", path.display());
                }
                None => println!("{}", serde_json::to_string_pretty(&pred)?),
            }
            Ok(())
        }
        Command::Explain {
            model,
            component,
            magnitude,
            amplification,
            out,
        } => {
            let fp = load_model(&model)?;
            let ex = fp.explain_component(component, magnitude, amplification)?;
            let text = serde_json::to_string_pretty(&ex)?;
            match out {
                Some(path) => {
                    write_text(&path, &text)?;
                    println!("wrote {}", path.display());
                }
                None => println!("{text}"),
            }
            Ok(())
        }
        Command::Test {
            model,
            target,
            replicates,
            seed,
            out,
        } => {
            let fp = load_model(&model)?;
            let res = if target == "response" {
                fp.test_response(replicates, seed)?
            } else {
                fp.test_block(&target, replicates, seed)?
            };
            println!(
                "target={target} F={:.6} p={:.6} p_conservative={:.6} R={}",
                res.observed, res.p, res.p_conservative, res.r
            );
            if let Some(path) = out {
                write_text(&path, &serde_json::to_string_pretty(&res)?)?;
                println!("wrote {}", path.display());
            }
            Ok(())
        }
        Command::Report {
            model,
            out,
            component,
            magnitude,
            amplification,
            replicates,
        } => {
            let fp = load_model(&model)?;
            let permutation = match replicates {
                Some(r) => Some(fp.test_response(r, fp.config.seed)?),
                None => None,
            };
            let opts = ReportOptions {
                component,
                c: magnitude,
                amplification,
                permutation,
            };
            let written = render_report(&fp, &out, &opts)?;
            let summary = summarize(&fp, &opts);
            println!(
                "report: r2={:.4} components={} files={}",
                summary.r2,
                summary.components,
                written.len()
            );
            for p in written {
                println!("wrote {}", p.display());
            }
            Ok(())
        }
    }
}

fn singleton(obj: &Object) -> ObjectSet {
    match obj {
        Object::Shape(s) => ObjectSet::Shapes(vec![s.clone()]),
        Object::Curve(c) => ObjectSet::Curves(vec![c.clone()]),
        Object::Corr(c) => ObjectSet::Corrs(vec![c.clone()]),
        Object::Point(p) => ObjectSet::Points(vec![p.clone()]),
    }
}
