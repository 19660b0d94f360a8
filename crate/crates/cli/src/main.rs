use std::collections::BTreeMap;
use std::fs;
use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use qrepair::bundle::{load_benchmark, load_bundle_with, LoadOptions};
use qrepair::gateway::ProviderSpec;
use qrepair::harness::{analyze_against, records_to_jsonl, run_tests, SystemClock};
use qrepair::lab::report::{render_breakdown, render_rubric_table, render_success_table};
use qrepair::lab::rubric::{
    consensus_sheets, disputed_cells, paired_judgments, sheets_from_jsonl, sheets_to_jsonl, CONSENSUS_RATER,
};
use qrepair::lab::stats::Agreement;
use qrepair::lab::{
    aggregate_rubrics, cohen_kappa, fixed_set_breakdown, percent_agreement, reconcile, run_experiment,
    ExperimentOptions, ExperimentReport, RubricSheet,
};
use qrepair::mutation::{enumerate_mutants, mutant_count_by_operator};
use qrepair::prompt::{build_prompt, PromptConfig};
use qrepair::{parse_qasm_unchecked, print_qasm};

#[derive(Parser)]
#[command(
    name = "qrepair",
    version,
    about = "Mutation-analysis-augmented repair of OpenQASM 2.0 circuits"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct RunFlags {
    /// Shots for distribution tests that do not set their own.
    #[arg(long, default_value_t = 4096)]
    shots: u64,
    /// Seed for distribution tests that do not set their own.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Per-test time limit.
    #[arg(long, default_value_t = 10_000)]
    timeout_ms: u64,
}

impl RunFlags {
    fn load_options(&self) -> LoadOptions {
        LoadOptions {
            default_shots: self.shots,
            default_seed: self.seed,
        }
    }
}

#[derive(Copy, Clone, ValueEnum)]
enum ProviderKind {
    LiveHttp,
    Replay,
    PerfectOracle,
    Noop,
}

#[derive(Subcommand)]
enum Command {
    /// List the mutants of a QASM program.
    Mutate {
        qasm: PathBuf,
        /// Write each mutant as <index>.qasm into this directory.
        #[arg(long)]
        emit: Option<PathBuf>,
    },
    /// Print the mutation-analysis records of a bundle as JSON lines.
    Analyze {
        bundle: PathBuf,
        #[command(flatten)]
        run: RunFlags,
    },
    /// Print the system and user prompt for a bundle.
    Prompt {
        bundle: PathBuf,
        #[arg(long, default_value = "S+D+M")]
        config: PromptConfig,
        #[command(flatten)]
        run: RunFlags,
        /// Emit the prompt bundle as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Run the full experiment over a benchmark directory.
    Repair {
        benchmark: PathBuf,
        #[arg(long, value_enum, default_value = "perfect-oracle")]
        provider: ProviderKind,
        /// Replay store to read from (implies --provider replay).
        #[arg(long)]
        replay: Option<PathBuf>,
        #[arg(long, default_value = "https://api.openai.com/v1/chat/completions")]
        endpoint: String,
        #[arg(long)]
        model: Option<String>,
        #[arg(long, default_value_t = 5)]
        samples: usize,
        #[arg(long, value_delimiter = ',', default_values = ["S", "S+D", "S+M", "S+D+M"])]
        configs: Vec<PromptConfig>,
        /// Append every generated response to this replay store.
        #[arg(long)]
        record: Option<PathBuf>,
        /// Write the JSON report here and print tables; otherwise print the JSON.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        run: RunFlags,
    },
    /// Print tables for a saved report.
    Report {
        report: PathBuf,
        /// Rubric sheets (JSON lines); consensus sheets feed the quality table.
        #[arg(long)]
        rubrics: Option<PathBuf>,
    },
    /// Record and reconcile explanation-quality judgments.
    Rubric {
        #[command(subcommand)]
        action: RubricAction,
    },
    /// Agreement statistics between two raters.
    Kappa {
        #[arg(long)]
        sheets: PathBuf,
        #[arg(long)]
        rater_a: String,
        #[arg(long)]
        rater_b: String,
    },
}

#[derive(Subcommand)]
enum RubricAction {
    /// Append one sheet.
    Add {
        #[arg(long)]
        sheets: PathBuf,
        #[arg(long)]
        bundle: String,
        #[arg(long)]
        config: PromptConfig,
        #[arg(long)]
        rater: String,
        /// Nine 0/1 judgments, rows Position/Cause/Change, columns
        /// Correctness/Completeness/Complexity, e.g. 110,100,111.
        #[arg(long)]
        cells: String,
    },
    /// Settle disagreements between two raters interactively (stdin) and
    /// append consensus sheets.
    Reconcile {
        #[arg(long)]
        sheets: PathBuf,
        #[arg(long)]
        rater_a: String,
        #[arg(long)]
        rater_b: String,
    },
    /// Print the quality table from the consensus sheets.
    Show {
        #[arg(long)]
        sheets: PathBuf,
    },
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Mutate { qasm, emit } => mutate(&qasm, emit.as_deref()),
        Command::Analyze { bundle, run } => analyze(&bundle, &run),
        Command::Prompt {
            bundle,
            config,
            run,
            json,
        } => prompt(&bundle, config, &run, json),
        Command::Repair {
            benchmark,
            provider,
            replay,
            endpoint,
            model,
            samples,
            configs,
            record,
            out,
            run,
        } => {
            let spec = match (provider, replay) {
                (_, Some(path)) => ProviderSpec::Replay { path },
                (ProviderKind::Replay, None) => bail!("--provider replay needs --replay <path>"),
                (ProviderKind::LiveHttp, None) => ProviderSpec::LiveHttp {
                    endpoint,
                    model: model.context("--provider live-http needs --model")?,
                },
                (ProviderKind::PerfectOracle, None) => ProviderSpec::PerfectOracle,
                (ProviderKind::Noop, None) => ProviderSpec::Noop,
            };
            let options = ExperimentOptions {
                configs,
                n_samples: samples,
                time_limit_ms: run.timeout_ms,
                record,
            };
            repair(&benchmark, &spec, &options, &run, out.as_deref())
        }
        Command::Report { report, rubrics } => report_cmd(&report, rubrics.as_deref()),
        Command::Rubric { action } => rubric(action),
        Command::Kappa {
            sheets,
            rater_a,
            rater_b,
        } => kappa(&sheets, &rater_a, &rater_b),
    }
}

fn mutate(path: &Path, emit: Option<&Path>) -> Result<()> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let circuit = parse_qasm_unchecked(&text)?;
    let mutants = enumerate_mutants(&circuit)?;
    let mut out = io::stdout().lock();
    for (i, m) in mutants.iter().enumerate() {
        writeln!(out, "{}", m.id)?;
        if let Some(dir) = emit {
            fs::create_dir_all(dir)?;
            fs::write(dir.join(format!("{i:04}.qasm")), print_qasm(&m.circuit))?;
        }
    }
    let counts: Vec<String> = mutant_count_by_operator(&circuit)
        .into_iter()
        .map(|(t, n)| format!("{t}:{n}"))
        .collect();
    eprintln!("{} mutants ({})", mutants.len(), counts.join(", "));
    Ok(())
}

fn analyze(dir: &Path, run: &RunFlags) -> Result<()> {
    let bundle = load_bundle_with(dir, run.load_options())?;
    let baseline = run_tests(&bundle.buggy_circuit, &bundle.tests, run.timeout_ms);
    let records = analyze_against(
        &bundle.buggy_circuit,
        &bundle.tests,
        &baseline,
        run.timeout_ms,
        &SystemClock::default(),
    )?;
    print!("{}", records_to_jsonl(&records));
    Ok(())
}

fn prompt(dir: &Path, config: PromptConfig, run: &RunFlags, json: bool) -> Result<()> {
    let bundle = load_bundle_with(dir, run.load_options())?;
    let baseline = run_tests(&bundle.buggy_circuit, &bundle.tests, run.timeout_ms);
    let records = if config.includes_mutation() {
        Some(analyze_against(
            &bundle.buggy_circuit,
            &bundle.tests,
            &baseline,
            run.timeout_ms,
            &SystemClock::default(),
        )?)
    } else {
        None
    };
    let p = build_prompt(&bundle, config, Some(&baseline), records.as_deref())?;
    if json {
        println!("{}", serde_json::to_string_pretty(&p)?);
    } else {
        print!("{}\n---\n\n{}", p.system_prompt, p.user_prompt);
    }
    Ok(())
}

fn repair(
    benchmark: &Path,
    spec: &ProviderSpec,
    options: &ExperimentOptions,
    run: &RunFlags,
    out: Option<&Path>,
) -> Result<()> {
    let bundles = load_benchmark(benchmark, run.load_options())?;
    let provider = spec.build()?;
    let report = run_experiment(&bundles, options, &*provider)?;
    match out {
        Some(path) => {
            fs::write(path, report.to_json()).with_context(|| format!("writing {}", path.display()))?;
            print!(
                "{}\n{}",
                render_success_table(&report),
                render_breakdown(&fixed_set_breakdown(&report))
            );
        }
        None => print!("{}", report.to_json()),
    }
    Ok(())
}

fn read_sheets(path: &Path) -> Result<Vec<RubricSheet>> {
    match fs::read_to_string(path) {
        Ok(text) => Ok(sheets_from_jsonl(&text).with_context(|| format!("parsing {}", path.display()))?),
        Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(Vec::new()),
        Err(e) => Err(e).with_context(|| format!("reading {}", path.display())),
    }
}

fn append_sheets(path: &Path, sheets: &[RubricSheet]) -> Result<()> {
    let mut f = fs::OpenOptions::new().create(true).append(true).open(path)?;
    f.write_all(sheets_to_jsonl(sheets).as_bytes())?;
    Ok(())
}

fn report_cmd(path: &Path, rubrics: Option<&Path>) -> Result<()> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let report = ExperimentReport::from_json(&text)?;
    print!(
        "{}\n{}",
        render_success_table(&report),
        render_breakdown(&fixed_set_breakdown(&report))
    );
    if let Some(r) = rubrics {
        let counts = aggregate_rubrics(&consensus_sheets(&read_sheets(r)?))?;
        print!("\n{}", render_rubric_table(&counts));
    }
    Ok(())
}

fn rubric(action: RubricAction) -> Result<()> {
    match action {
        RubricAction::Add {
            sheets,
            bundle,
            config,
            rater,
            cells,
        } => {
            let existing = read_sheets(&sheets)?;
            if existing
                .iter()
                .any(|s| s.bundle_id == bundle && s.config == config && s.rater == rater)
            {
                bail!("{rater} already judged {bundle} under {config}");
            }
            let sheet = RubricSheet {
                bundle_id: bundle,
                config,
                rater,
                judgments: RubricSheet::parse_cells(&cells).map_err(anyhow::Error::msg)?,
            };
            append_sheets(&sheets, &[sheet])
        }
        RubricAction::Reconcile {
            sheets,
            rater_a,
            rater_b,
        } => {
            let all = read_sheets(&sheets)?;
            let pick = |rater: &str| -> BTreeMap<(String, PromptConfig), RubricSheet> {
                all.iter()
                    .filter(|s| s.rater == rater)
                    .map(|s| ((s.bundle_id.clone(), s.config), s.clone()))
                    .collect()
            };
            let (a, b, done) = (pick(&rater_a), pick(&rater_b), pick(CONSENSUS_RATER));
            let stdin = io::stdin();
            let mut lines = stdin.lock().lines();
            let mut new = Vec::new();
            for (key, sa) in &a {
                let Some(sb) = b.get(key) else { continue };
                if done.contains_key(key) {
                    continue;
                }
                let disputes = disputed_cells(sa, sb);
                if !disputes.is_empty() {
                    println!("{} / {}: {} disputed cell(s)", key.0, key.1, disputes.len());
                }
                let mut failure = None;
                let sheet = reconcile(sa, sb, |e, c, x, y| loop {
                    print!(
                        "  {e}/{c}: {rater_a}={} {rater_b}={} consensus [0/1]? ",
                        u8::from(x),
                        u8::from(y)
                    );
                    let _ = io::stdout().flush();
                    match lines.next() {
                        Some(Ok(l)) if l.trim() == "0" => return false,
                        Some(Ok(l)) if l.trim() == "1" => return true,
                        Some(Ok(_)) => continue,
                        _ => {
                            failure = Some("input ended before all disputes were settled");
                            return x;
                        }
                    }
                })?;
                if let Some(msg) = failure {
                    append_sheets(&sheets, &new)?;
                    bail!("{msg}; saved {} consensus sheet(s)", new.len());
                }
                new.push(sheet);
            }
            append_sheets(&sheets, &new)?;
            println!("saved {} consensus sheet(s)", new.len());
            Ok(())
        }
        RubricAction::Show { sheets } => {
            let counts = aggregate_rubrics(&consensus_sheets(&read_sheets(&sheets)?))?;
            print!("{}", render_rubric_table(&counts));
            Ok(())
        }
    }
}

fn kappa(sheets: &Path, rater_a: &str, rater_b: &str) -> Result<()> {
    let all = read_sheets(sheets)?;
    let (a, b) = paired_judgments(&all, rater_a, rater_b)?;
    let t = Agreement::tally(&a, &b)?;
    let p: f64 = percent_agreement(&a, &b)?;
    println!("agreement: {} of {} ({:.1}%)", t.matches(), t.total(), p * 100.0);
    match cohen_kappa::<f64>(&a, &b) {
        Ok(k) => println!("cohen kappa: {k:.3}"),
        Err(e) => println!("cohen kappa: {e}"),
    }
    Ok(())
}
