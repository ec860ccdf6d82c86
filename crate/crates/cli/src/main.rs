mod report;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use binmarg::datasets::{
    trust_counts, trust_graph, twin_counts, twin_graph, twin_group, TWIN_LABELS,
};
use binmarg::icf::fit_report;
use binmarg::io::{
    parse_dataset, parse_graph, parse_group, write_dataset, write_graph, write_group,
};
use binmarg::mobius::check_membership;
use binmarg::symmetry::{combined_fit_report, symmetry_model_dim};
use binmarg::*;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use report::*;

#[derive(Parser)]
#[command(
    name = "binmarg",
    version,
    about = "Fit binary marginal independence models of bi-directed graphs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the model of a graph to a dataset.
    Fit {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[command(flatten)]
        opts: FitArgs,
    },
    /// Fit a graph model under a vertex permutation symmetry.
    Symfit {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        group: PathBuf,
        #[command(flatten)]
        opts: FitArgs,
    },
    /// Backward stepwise edge deletion from the complete graph.
    Stepwise {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[command(flatten)]
        opts: FitArgs,
    },
    /// Möbius parameters of the empirical distribution.
    Mobius {
        #[arg(long)]
        data: PathBuf,
    },
    /// Check whether the empirical distribution lies in a graph model.
    Check {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        graph: PathBuf,
        /// Largest tolerated factorization residual.
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
    /// Write the bundled twin and trust datasets, graphs and group.
    Datasets {
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgorithmArg {
    Icf,
    Gradient,
}

#[derive(Clone, Copy, ValueEnum)]
enum InnerArg {
    Gp,
    Newton,
}

#[derive(Args)]
struct FitArgs {
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, default_value_t = 500)]
    max_iter: usize,
    #[arg(long, value_enum, default_value_t = AlgorithmArg::Icf)]
    algorithm: AlgorithmArg,
    #[arg(long, value_enum, default_value_t = InnerArg::Newton)]
    inner: InnerArg,
    /// Added to every cell before fitting.
    #[arg(long)]
    pseudo_count: Option<f64>,
    #[arg(long, default_value_t = 1)]
    multi_start: usize,
    /// Seed for the random starting points of `--multi-start`.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl FitArgs {
    fn options(&self) -> FitOptions {
        FitOptions {
            algorithm: match self.algorithm {
                AlgorithmArg::Icf => Algorithm::Icf,
                AlgorithmArg::Gradient => Algorithm::Gradient,
            },
            inner_method: match self.inner {
                InnerArg::Gp => InnerMethod::GradientProjection,
                InnerArg::Newton => InnerMethod::ProjectedNewton,
            },
            tol_outer: self.tol,
            max_cycles: self.max_iter,
            pseudo_count: self.pseudo_count,
            multi_start: self.multi_start,
            seed: self.seed,
            ..FitOptions::default()
        }
    }
}

struct Outcome {
    report: Value,
    converged: bool,
}

/// Input files with their digests, keyed by flag name.
#[derive(Default)]
struct Inputs(Map<String, Value>);

impl Inputs {
    fn read(&mut self, name: &str, path: &Path) -> Result<String> {
        let text =
            fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        self.0.insert(name.into(), json!(digest(text.as_bytes())));
        Ok(text)
    }
}

fn body(entries: Vec<(&str, Value)>) -> Map<String, Value> {
    entries
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect()
}

fn run(command: Command) -> Result<Outcome> {
    let mut inputs = Inputs::default();
    match command {
        Command::Fit { graph, data, opts } => {
            let n = parse_dataset(&inputs.read("data", &data)?)?;
            let g = parse_graph(&inputs.read("graph", &graph)?, n.labels())?;
            let options = opts.options();
            let f = fit_report(&g, &n, &options)?;
            let report = envelope(
                "fit",
                body(vec![
                    ("model", model_block(&g, f.dim)),
                    ("fit", fit_block(&f, &options)),
                    ("estimates", estimates_block(&g, &f)),
                ]),
                inputs.0,
                options_block(&options),
            );
            Ok(Outcome {
                report,
                converged: f.converged,
            })
        }
        Command::Symfit {
            graph,
            data,
            group,
            opts,
        } => {
            let n = parse_dataset(&inputs.read("data", &data)?)?;
            let g = parse_graph(&inputs.read("graph", &graph)?, n.labels())?;
            let s = parse_group(&inputs.read("group", &group)?, n.labels())?;
            let options = opts.options();
            let f = combined_fit_report(&g, &s, &n, &options)?;
            let counts = match options.pseudo_count {
                Some(eps) => n.with_pseudo_count(eps)?,
                None => n.clone(),
            };
            let sym_ll = loglik(&symmetry_mle(&counts, &s)?, &counts)?;
            let sym_dim = symmetry_model_dim(&s, n.n_vars())?;
            let sym_vs_sat = lr_test(
                sym_ll,
                sym_dim,
                saturated_loglik(&counts),
                (1 << n.n_vars()) - 1,
            )?;
            let vs_sym = lr_test(f.loglik, f.dim, sym_ll, sym_dim)?;
            let symmetry = json!({
                "generators": write_group(&s, n.labels()).lines().collect::<Vec<_>>(),
                "group_order": s.order(),
                "loglik": num(sym_ll),
                "dimension": sym_dim,
                "vs_saturated": test_block(&sym_vs_sat),
                "model_vs_symmetry": test_block(&vs_sym),
            });
            let report = envelope(
                "symfit",
                body(vec![
                    ("model", model_block(&g, f.dim)),
                    ("fit", fit_block(&f, &options)),
                    ("symmetry", symmetry),
                    ("estimates", estimates_block(&g, &f)),
                ]),
                inputs.0,
                options_block(&options),
            );
            Ok(Outcome {
                report,
                converged: f.converged,
            })
        }
        Command::Stepwise { data, alpha, opts } => {
            let n = parse_dataset(&inputs.read("data", &data)?)?;
            let options = opts.options();
            let trace = backward_stepwise(&n, alpha, &options)?;
            let g = &trace.final_graph;
            let steps: Vec<Value> = trace
                .steps
                .iter()
                .map(|s| {
                    json!({
                        "removed": [g.label(s.removed.0), g.label(s.removed.1)],
                        "deviance": num(s.deviance),
                        "df": s.df,
                        "p_value": num(s.p_value),
                        "dimension": s.dim,
                    })
                })
                .collect();
            let skipped: Vec<Value> = trace
                .skipped
                .iter()
                .map(|(step, (v, w), e)| {
                    json!({ "step": step, "edge": [g.label(*v), g.label(*w)], "error": e.code() })
                })
                .collect();
            let mut opts_block = options_block(&options);
            opts_block["alpha"] = num(alpha);
            let report = envelope(
                "stepwise",
                body(vec![
                    ("steps", json!(steps)),
                    ("skipped", json!(skipped)),
                    ("model", model_block(g, trace.final_fit.dim)),
                    ("fit", fit_block(&trace.final_fit, &options)),
                    ("estimates", estimates_block(g, &trace.final_fit)),
                ]),
                inputs.0,
                opts_block,
            );
            Ok(Outcome {
                report,
                converged: true,
            })
        }
        Command::Mobius { data } => {
            let n = parse_dataset(&inputs.read("data", &data)?)?;
            let g = BidirectedGraph::new(n.labels())?;
            let p = n.empirical();
            let q = mobius_forward(&p);
            let mut table = Map::new();
            for a in 1..q.as_slice().len() {
                let s = VertexSet::from_bits(a as u32);
                let name: Vec<&str> = s.iter().map(|v| g.label(v)).collect();
                table.insert(name.join(","), num(q.get(s)));
            }
            let report = envelope(
                "mobius",
                body(vec![
                    ("vertices", json!(n.labels())),
                    ("total", num(n.total())),
                    ("cells", cells(&g, &p)),
                    ("q", Value::Object(table)),
                ]),
                inputs.0,
                json!({}),
            );
            Ok(Outcome {
                report,
                converged: true,
            })
        }
        Command::Check { data, graph, tol } => {
            let n = parse_dataset(&inputs.read("data", &data)?)?;
            let g = parse_graph(&inputs.read("graph", &graph)?, n.labels())?;
            let m = check_membership(&n.empirical(), &g, tol)?;
            let violations: Vec<Value> = m
                .violations
                .iter()
                .map(|&(d, r)| json!({ "set": set_labels(&g, d), "residual": num(r) }))
                .collect();
            let report = envelope(
                "check",
                body(vec![
                    (
                        "model",
                        model_block(&g, ConnectedSetCatalog::new(&g)?.len()),
                    ),
                    ("member", json!(m.member)),
                    ("max_residual", num(m.max_residual)),
                    ("violations", json!(violations)),
                ]),
                inputs.0,
                json!({ "tol": num(tol) }),
            );
            Ok(Outcome {
                report,
                converged: true,
            })
        }
        Command::Datasets { out } => {
            fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
            let files = [
                ("twin.csv", write_dataset(&twin_counts())),
                ("twin4cycle.g", write_graph(&twin_graph())),
                ("twin.group", write_group(&twin_group(), &TWIN_LABELS)),
                ("trust.csv", write_dataset(&trust_counts())),
                ("trust.g", write_graph(&trust_graph())),
            ];
            let mut written = Map::new();
            for (name, text) in &files {
                let path = out.join(name);
                fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
                written.insert(name.to_string(), json!(digest(text.as_bytes())));
            }
            let report = envelope(
                "datasets",
                body(vec![("files", Value::Object(written))]),
                Map::new(),
                json!({}),
            );
            Ok(Outcome {
                report,
                converged: true,
            })
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(outcome) => {
            println!(
                "{}",
                serde_json::to_string_pretty(&outcome.report).expect("report serializes")
            );
            if outcome.converged {
                ExitCode::SUCCESS
            } else {
                eprintln!("error[no-convergence]: fit did not converge");
                ExitCode::from(2)
            }
        }
        Err(e) => {
            let (code, exit) = match e.downcast_ref::<binmarg::Error>() {
                Some(err) if err.is_convergence_failure() => (err.code(), 2),
                Some(err) => (err.code(), 1),
                None => ("io", 1),
            };
            eprintln!("error[{code}]: {e:#}");
            ExitCode::from(exit)
        }
    }
}
