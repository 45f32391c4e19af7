//! `emkit` command-line front end.
//!
//! Exit codes: 0 success, 1 I/O or other failure, 2 malformed input,
//! 3 empty input, 4 iteration cap reached (final state still written),
//! 5 unparseable sentences.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use emkit::dice::{self, IndependentDiceDistribution};
use emkit::em::{EmOptions, EmTrace, StopReason};
use emkit::estimation::{
    corpus_log_likelihood, cross_entropy, entropy, perplexity, relative_entropy, relative_frequency_estimate,
    seeded_rng,
};
use emkit::fmt::format_sig;
use emkit::io::{parse_corpus, parse_distribution, write_distribution};
use emkit::maxent::{maxent_duality_check, parse_feature_table, DualityGrid};
use emkit::pcfg::{
    best_parse, parent_decode, parent_encode, parse_all, parse_grammar, parse_pcfg, parse_sentence_corpus,
    parse_treebank, pcfg_em, tree_mass, treebank_estimate, write_pcfg, write_treebank, Pcfg, Sentence,
};
use emkit::{Corpus, Error};

#[derive(Parser)]
#[command(
    name = "emkit",
    version,
    about = "Relative-frequency, maximum-likelihood and EM estimation"
)]
struct Cli {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Write the main result here instead of standard output.
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Relative-frequency estimate of a corpus.
    Rf { corpus: PathBuf },
    /// Log-likelihood, cross-entropy, entropy, relative entropy and
    /// perplexity of a corpus under a distribution.
    Measure {
        corpus: PathBuf,
        distribution: PathBuf,
        /// Accept distributions that do not sum to one.
        #[arg(long)]
        no_validate: bool,
    },
    /// EM for two independent dice observed only through their sums.
    DiceEm {
        /// Corpus of sums, `sum<TAB>frequency`.
        sums: PathBuf,
        /// Starting instance; drawn from `--seed` when omitted.
        #[arg(long)]
        start: Option<PathBuf>,
        /// Also write the per-iteration trace here.
        #[arg(long)]
        trace: Option<PathBuf>,
        #[command(flatten)]
        em: EmArgs,
    },
    /// Probabilistic context-free grammars.
    #[command(subcommand)]
    Pcfg(PcfgCommand),
    /// Maximum-entropy checks.
    #[command(subcommand)]
    Maxent(MaxentCommand),
}

#[derive(Subcommand)]
enum PcfgCommand {
    /// Treebank grammar of a treebank file.
    ReadTreebank { treebank: PathBuf },
    /// EM training on a sentence corpus.
    Em {
        grammar: PathBuf,
        sentences: PathBuf,
        /// Start from a random instance drawn from `--seed` instead of the
        /// grammar file's probabilities.
        #[arg(long)]
        random_start: bool,
        /// Write every iterate to `DIR/iter-NNNN.pcfg`.
        #[arg(long, value_name = "DIR")]
        snapshots: Option<PathBuf>,
        /// Also write the per-iteration trace here.
        #[arg(long)]
        trace: Option<PathBuf>,
        #[command(flatten)]
        em: EmArgs,
    },
    /// Every parse of a sentence.
    Parse {
        grammar: PathBuf,
        #[arg(required = true)]
        words: Vec<String>,
    },
    /// The most probable parse of a sentence.
    Best {
        grammar: PathBuf,
        #[arg(required = true)]
        words: Vec<String>,
    },
    /// Probability mass of the trees with at most `--max-nodes` internal nodes.
    Mass {
        grammar: PathBuf,
        #[arg(long, default_value_t = 25)]
        max_nodes: usize,
    },
    /// Parent-encode (or with `--decode`, decode) a treebank.
    ParentEncode {
        treebank: PathBuf,
        #[arg(long)]
        decode: bool,
    },
}

#[derive(Subcommand)]
enum MaxentCommand {
    /// Grid comparison of the maximum-entropy and maximum-likelihood
    /// estimates. The support is every type named in either file.
    Duality {
        features: PathBuf,
        corpus: PathBuf,
        #[arg(long, default_value_t = DualityGrid::default().simplex_steps)]
        simplex_steps: usize,
        #[arg(long, default_value_t = DualityGrid::default().lambda_points)]
        lambda_points: usize,
    },
}

#[derive(Args)]
struct EmArgs {
    #[arg(long, default_value_t = EmOptions::default().max_iterations)]
    max_iter: usize,
    #[arg(long, default_value_t = EmOptions::default().tol_log_likelihood)]
    tol_loglik: f64,
    #[arg(long, default_value_t = EmOptions::default().tol_parameters)]
    tol_param: f64,
}

impl EmArgs {
    fn options(&self) -> EmOptions {
        EmOptions {
            max_iterations: self.max_iter,
            tol_log_likelihood: self.tol_loglik,
            tol_parameters: self.tol_param,
        }
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn parsed<T>(path: &Path, r: emkit::Result<T>) -> Result<T> {
    r.with_context(|| path.display().to_string())
}

struct Out {
    path: Option<PathBuf>,
}

impl Out {
    fn write(&self, text: &str) -> Result<()> {
        match &self.path {
            Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
            None => {
                print!("{text}");
                Ok(())
            }
        }
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Exit status for a finished EM run.
fn em_status<I>(trace: &EmTrace<I>) -> ExitCode {
    match trace.stop_reason {
        StopReason::MaxIterations => {
            log::warn!(
                "stopped after {} iterations without converging",
                trace.iterations()
            );
            ExitCode::from(4)
        }
        StopReason::Converged(_) => ExitCode::SUCCESS,
    }
}

fn sentence_of(words: &[String]) -> Vec<String> {
    words
        .iter()
        .flat_map(|w| w.split_whitespace())
        .map(String::from)
        .collect()
}

/// A grammar file with probabilities, or the uniform PCFG on a bare CFG.
fn load_pcfg(path: &Path) -> Result<Pcfg> {
    let text = read(path)?;
    let file = parsed(path, parse_grammar(&text))?;
    match file.probs {
        Some(_) => parsed(path, parse_pcfg(&text)),
        None => Ok(Pcfg::uniform(Arc::new(file.cfg))),
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    let out = Out {
        path: cli.output.clone(),
    };
    match cli.command {
        Command::Rf { corpus } => {
            let f: Corpus<String> = parsed(&corpus, parse_corpus(&read(&corpus)?))?;
            let p = parsed(&corpus, relative_frequency_estimate(&f))?;
            out.write(&write_distribution(&p))?;
        }
        Command::Measure {
            corpus,
            distribution,
            no_validate,
        } => {
            let f: Corpus<String> = parsed(&corpus, parse_corpus(&read(&corpus)?))?;
            let p = parsed(
                &distribution,
                parse_distribution(&read(&distribution)?, !no_validate),
            )?;
            let p_tilde = parsed(&corpus, relative_frequency_estimate(&f))?;
            let rows = [
                ("size", f.size()),
                ("log2_likelihood", corpus_log_likelihood(&f, &p)),
                ("cross_entropy", cross_entropy(&p_tilde, &p)),
                ("entropy", entropy(&p_tilde)),
                ("relative_entropy", relative_entropy(&p_tilde, &p)),
                ("perplexity", perplexity(&f, &p)?),
            ];
            out.write(
                &rows
                    .iter()
                    .map(|(k, v)| format!("{k}\t{}\n", format_sig(*v)))
                    .collect::<String>(),
            )?;
        }
        Command::DiceEm {
            sums,
            start,
            trace,
            em,
        } => {
            let f: Corpus<u8> = parsed(&sums, parse_corpus(&read(&sums)?))?;
            let p0 = match start {
                Some(path) => parsed(&path, dice::parse_dice_start(&read(&path)?))?,
                None => IndependentDiceDistribution::random(&mut seeded_rng(cli.seed)),
            };
            let t = dice::dice_em(&f, p0, &em.options())?;
            if let Some(path) = trace {
                write_file(&path, &t.to_tsv())?;
            }
            out.write(&dice::write_dice_start(t.final_instance()))?;
            return Ok(em_status(&t));
        }
        Command::Pcfg(cmd) => return run_pcfg(cmd, cli.seed, &out),
        Command::Maxent(MaxentCommand::Duality {
            features,
            corpus,
            simplex_steps,
            lambda_points,
        }) => {
            let text = read(&features)?;
            let fs = parsed(&features, parse_feature_table::<String>(&text))?;
            let f: Corpus<String> = parsed(&corpus, parse_corpus(&read(&corpus)?))?;
            let mut support: BTreeSet<String> = f.support().cloned().collect();
            for line in text
                .lines()
                .filter(|l| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
            {
                if let Some(ty) = line.split('\t').nth(1) {
                    support.insert(ty.trim().to_string());
                }
            }
            let support: Vec<String> = support.into_iter().collect();
            let grid = DualityGrid {
                simplex_steps,
                lambda_points,
                ..DualityGrid::default()
            };
            let r = maxent_duality_check(&support, &fs, &f, &grid)?;
            let mut text = String::new();
            text.push_str(&format!("passed\t{}\n", r.passed));
            text.push_str(&format!("distance\t{}\n", format_sig(r.distance)));
            text.push_str(&format!("resolution\t{}\n", format_sig(r.resolution)));
            for (name, l) in fs.names().iter().zip(&r.mle_lambdas) {
                text.push_str(&format!("lambda\t{name}\t{}\n", format_sig(*l)));
            }
            for x in &support {
                text.push_str(&format!(
                    "p\t{x}\t{}\t{}\n",
                    format_sig(r.maxent.prob(x)),
                    format_sig(r.mle.prob(x))
                ));
            }
            out.write(&text)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn run_pcfg(cmd: PcfgCommand, seed: u64, out: &Out) -> Result<ExitCode> {
    match cmd {
        PcfgCommand::ReadTreebank { treebank } => {
            let tb = parsed(&treebank, parse_treebank(&read(&treebank)?))?;
            let g = parsed(&treebank, treebank_estimate(&tb))?;
            out.write(&write_pcfg(&g))?;
        }
        PcfgCommand::Em {
            grammar,
            sentences,
            random_start,
            snapshots,
            trace,
            em,
        } => {
            let mut g0 = load_pcfg(&grammar)?;
            if random_start {
                g0 = Pcfg::random(g0.shared_cfg().clone(), &mut seeded_rng(seed));
            }
            let f: Corpus<Sentence> = parsed(&sentences, parse_sentence_corpus(&read(&sentences)?))?;
            let t = pcfg_em(&g0, &f, &em.options())?;
            if let Some(dir) = snapshots {
                fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
                for it in &t.iterates {
                    write_file(
                        &dir.join(format!("iter-{:04}.pcfg", it.iteration)),
                        &write_pcfg(&it.instance),
                    )?;
                }
            }
            if let Some(path) = trace {
                write_file(&path, &t.to_tsv())?;
            }
            out.write(&write_pcfg(t.final_instance()))?;
            return Ok(em_status(&t));
        }
        PcfgCommand::Parse { grammar, words } => {
            let g = load_pcfg(&grammar)?;
            let text: String = parse_all(g.cfg(), &sentence_of(&words))
                .iter()
                .map(|t| format!("{t}\t{}\n", format_sig(g.tree_probability(t).unwrap_or(0.0))))
                .collect();
            out.write(&text)?;
        }
        PcfgCommand::Best { grammar, words } => {
            let g = load_pcfg(&grammar)?;
            let words = sentence_of(&words);
            let Some(b) = best_parse(&g, &words) else {
                return Err(Error::UnparseableSentence(vec![words.join(" ")]).into());
            };
            if b.co_maximal.len() > 1 {
                log::warn!("{} parses tie for the maximum", b.co_maximal.len());
            }
            out.write(&format!("{}\n{}\n", b.tree, format_sig(b.probability)))?;
        }
        PcfgCommand::Mass { grammar, max_nodes } => {
            let g = load_pcfg(&grammar)?;
            let m = tree_mass(&g, max_nodes);
            out.write(&format!(
                "partial_sum\t{}\nexhausted\t{}\n",
                format_sig(m.partial_sum),
                m.exhausted
            ))?;
        }
        PcfgCommand::ParentEncode { treebank, decode } => {
            let tb = parsed(&treebank, parse_treebank(&read(&treebank)?))?;
            let tb = if decode {
                parsed(&treebank, parent_decode(&tb))?
            } else {
                parent_encode(&tb)
            };
            out.write(&write_treebank(&tb))?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn exit_code(err: &anyhow::Error) -> u8 {
    let Some(e) = err.chain().find_map(|c| c.downcast_ref::<Error>()) else {
        return 1;
    };
    match e {
        Error::EmptyCorpus | Error::EmptyTreebank => 3,
        Error::UnparseableSentence(_) => 5,
        Error::MstepRegression { .. } | Error::DegenerateNormalizer | Error::ScaleExceeded(_) => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
