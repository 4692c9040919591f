//! Command-line front end. Output is `key=value` lines.
//!
//! Exit codes: 0 success, 1 invalid configuration, 2 unreadable or empty
//! input, 3 model/corpus vocabulary mismatch, 4 corrupt model file.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::corpus::Corpus;
use crate::datasets::{gen_bars, gen_mv_xor, gen_seq_consecutive};
use crate::engine::{GraphTm, TrainConfig, Trainer};
use crate::error::{Error, Result};
use crate::exec::{Executor, Parallelism};
use crate::interpret::{decode_clause, trace_to_nodes};
use crate::model_io::{load_model, save_model};

#[derive(Parser, Debug)]
#[command(name = "graphtm", version, about = "Graph Tsetlin Machine")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a synthetic train/test corpus pair.
    Gen(GenArgs),
    /// Train a model and write it to a file.
    Train(TrainArgs),
    /// Accuracy and confusion counts of a model on a corpus.
    Eval(EvalArgs),
    /// Print every clause in symbolic form.
    Inspect(InspectArgs),
    /// Trace clauses down to node-level formulas.
    Trace(TraceArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Task {
    /// Two-node multivalue XOR.
    Xor,
    /// Consecutive-A sequences.
    Seq,
    /// 8x8 bar orientation on 2x2 patches.
    Bars,
}

#[derive(Args, Debug, Clone)]
pub struct TaskArgs {
    #[arg(long, value_enum)]
    pub task: Option<Task>,
    /// Training samples.
    #[arg(long, default_value_t = 40_000)]
    pub count: usize,
    /// Noiseless test samples.
    #[arg(long, default_value_t = 10_000)]
    pub test_count: usize,
    /// Training label noise.
    #[arg(long, default_value_t = 0.01)]
    pub noise: f64,
    /// Distinct values per node (xor).
    #[arg(long, default_value_t = 10)]
    pub n: usize,
    /// Sequence length (seq).
    #[arg(long, default_value_t = 5)]
    pub length: usize,
    /// Number of classes (seq).
    #[arg(long, default_value_t = 2)]
    pub classes: usize,
}

impl TaskArgs {
    /// Train and test corpora; the test set is noiseless and drawn from a
    /// separate seed.
    fn generate(&self, task: Task, seed: u64) -> Result<(Corpus, Corpus)> {
        let test_seed = seed ^ 0x7465_7374;
        Ok(match task {
            Task::Xor => (
                gen_mv_xor(self.n, self.noise, self.count, seed)?,
                gen_mv_xor(self.n, 0.0, self.test_count, test_seed)?,
            ),
            Task::Seq => (
                gen_seq_consecutive(self.length, self.classes, self.count, self.noise, seed)?,
                gen_seq_consecutive(self.length, self.classes, self.test_count, 0.0, test_seed)?,
            ),
            Task::Bars => (
                gen_bars(self.count, self.noise, seed)?,
                gen_bars(self.test_count, 0.0, test_seed)?,
            ),
        })
    }
}

#[derive(Args, Debug)]
pub struct GenArgs {
    #[command(flatten)]
    pub task: TaskArgs,
    #[arg(long)]
    pub train_out: PathBuf,
    #[arg(long)]
    pub test_out: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    /// Training corpus file (or use --task).
    #[arg(long)]
    pub train: Option<PathBuf>,
    /// Test corpus file.
    #[arg(long)]
    pub test: Option<PathBuf>,
    #[command(flatten)]
    pub task: TaskArgs,
    /// Where to write the model.
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, default_value_t = 100)]
    pub clauses: usize,
    #[arg(long = "T", default_value_t = 100)]
    pub threshold: u32,
    #[arg(long = "s", default_value_t = 2.0)]
    pub specificity: f64,
    #[arg(long, default_value_t = 2)]
    pub depth: usize,
    #[arg(long, default_value_t = 64)]
    pub hv_size: usize,
    #[arg(long, default_value_t = 256)]
    pub msg_size: usize,
    #[arg(long, default_value_t = 2)]
    pub bits_per_symbol: usize,
    #[arg(long, default_value_t = 2)]
    pub bits_per_clause: usize,
    /// States per automaton action.
    #[arg(long, default_value_t = 128)]
    pub states: u16,
    #[arg(long)]
    pub max_included: Option<usize>,
    #[arg(long, default_value_t = 10)]
    pub epochs: usize,
    /// Stop once test accuracy reaches this value.
    #[arg(long)]
    pub target_acc: Option<f64>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Worker threads; 1 runs sequentially. Defaults to all cores.
    #[arg(long)]
    pub workers: Option<usize>,
}

impl TrainArgs {
    pub fn config(&self) -> TrainConfig {
        TrainConfig {
            num_clauses: self.clauses,
            threshold: self.threshold,
            specificity: self.specificity,
            depth: self.depth,
            hv_size: self.hv_size,
            msg_size: self.msg_size,
            bits_per_symbol: self.bits_per_symbol,
            bits_per_clause: self.bits_per_clause,
            n_states: self.states,
            max_included_literals: self.max_included,
            epochs: self.epochs,
            seed: self.seed,
        }
    }
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Args, Debug)]
pub struct InspectArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Also print each clause's trace.
    #[arg(long)]
    pub trace: bool,
}

#[derive(Args, Debug)]
pub struct TraceArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Only this clause.
    #[arg(long)]
    pub clause: Option<usize>,
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_)
        | Error::AlreadyRegistered(_)
        | Error::OutOfRange { .. }
        | Error::BindingOverflow { .. }
        | Error::SpaceExhausted(_)
        | Error::Collision(_)
        | Error::Generation(_) => 1,
        Error::Io(_) | Error::Parse { .. } | Error::EmptyCorpus | Error::UnknownSymbol(_) | Error::UnknownEdgeType(_) => 2,
        Error::SpaceMismatch { .. } | Error::UnboundGraph => 3,
        Error::CorruptModel(_) => 4,
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let help = matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion);
            if help {
                let _ = write!(out, "{}", e.render());
            } else {
                let _ = write!(err, "{}", e.render());
            }
            return if help { 0 } else { 1 };
        }
    };
    match dispatch(cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn dispatch(cmd: Command, out: &mut dyn Write) -> Result<()> {
    match cmd {
        Command::Gen(a) => cmd_gen(&a, out),
        Command::Train(a) => cmd_train(&a, out),
        Command::Eval(a) => cmd_eval(&a, out),
        Command::Inspect(a) => cmd_inspect(&a, out),
        Command::Trace(a) => cmd_trace(&a, out),
    }
}

fn cmd_gen(a: &GenArgs, out: &mut dyn Write) -> Result<()> {
    let task = a.task.task.ok_or_else(|| Error::Config("--task is required".into()))?;
    let (train, test) = a.task.generate(task, a.seed)?;
    train.save(&a.train_out)?;
    writeln!(out, "train={} graphs={}", a.train_out.display(), train.len())?;
    if let Some(p) = &a.test_out {
        test.save(p)?;
        writeln!(out, "test={} graphs={}", p.display(), test.len())?;
    }
    Ok(())
}

fn read_corpus(path: &Path) -> Result<Corpus> {
    let c = Corpus::load(path)?;
    if c.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    Ok(c)
}

fn cmd_train(a: &TrainArgs, out: &mut dyn Write) -> Result<()> {
    let config = a.config();
    config.validate()?;
    let (train, test) = match (&a.train, a.task.task) {
        (Some(p), _) => {
            let train = read_corpus(p)?;
            let test = a.test.as_deref().map(read_corpus).transpose()?;
            (train, test)
        }
        (None, Some(task)) => {
            let (tr, te) = a.task.generate(task, a.seed)?;
            (tr, (!te.is_empty()).then_some(te))
        }
        (None, None) => return Err(Error::Config("give --train or --task".into())),
    };
    if let Some(t) = &test {
        if t.vocabulary_hash() != train.vocabulary_hash() {
            return Err(Error::SpaceMismatch {
                model: train.vocabulary_hash(),
                corpus: t.vocabulary_hash(),
            });
        }
    }
    let space = train.symbol_space(config.hv_size, config.bits_per_symbol, config.seed)?;
    let classes = train.num_classes().max(test.as_ref().map_or(0, Corpus::num_classes)).max(2);
    let mut model = GraphTm::new(config.clone(), space, classes)?;
    let train_g = train.bind(model.symbols())?;
    let test_g = match &test {
        Some(t) => t.bind(model.symbols())?,
        None => Vec::new(),
    };
    writeln!(
        out,
        "clauses={} T={} s={} depth={} hv_size={} msg_size={} classes={} train={} test={}",
        config.num_clauses,
        config.threshold,
        config.specificity,
        config.depth,
        config.hv_size,
        config.msg_size,
        classes,
        train_g.len(),
        test_g.len()
    )?;
    let mut trainer = Trainer::new(&model, config.seed, Parallelism::from_workers(a.workers))?;
    let mut io_err = None;
    trainer.fit(&mut model, &train_g, &test_g, config.epochs, |m| {
        if let Err(e) = writeln!(out, "{m}") {
            io_err = Some(e);
        }
        !matches!((a.target_acc, m.test_acc), (Some(t), Some(acc)) if acc >= t)
    })?;
    if let Some(e) = io_err {
        return Err(e.into());
    }
    save_model(&model, &a.model)?;
    writeln!(out, "model={}", a.model.display())?;
    Ok(())
}

fn cmd_eval(a: &EvalArgs, out: &mut dyn Write) -> Result<()> {
    let model = load_model(&a.model)?;
    let corpus = read_corpus(&a.data)?;
    let graphs = corpus.bind(model.symbols())?;
    let exec = Executor::new(Parallelism::from_workers(a.workers))?;
    let preds = model.predict_all(&graphs, &exec)?;
    let k = model.num_classes().max(corpus.num_classes());
    let mut confusion = vec![vec![0usize; k]; k];
    let mut labelled = 0;
    for (g, &p) in graphs.iter().zip(&preds) {
        if let Some(l) = g.label {
            confusion[l][p] += 1;
            labelled += 1;
        }
    }
    if labelled == 0 {
        return Err(Error::Config("corpus has no labels".into()));
    }
    let correct: usize = (0..k).map(|c| confusion[c][c]).sum();
    writeln!(out, "graphs={labelled} correct={correct} accuracy={:.4}", correct as f64 / labelled as f64)?;
    for (c, row) in confusion.iter().enumerate() {
        let n: usize = row.iter().sum();
        let acc = if n == 0 { 0.0 } else { row[c] as f64 / n as f64 };
        let cells: Vec<String> = row.iter().enumerate().map(|(p, v)| format!("pred{p}={v}")).collect();
        writeln!(out, "class={c} count={n} correct={} accuracy={acc:.4} {}", row[c], cells.join(" "))?;
    }
    Ok(())
}

fn cmd_inspect(a: &InspectArgs, out: &mut dyn Write) -> Result<()> {
    let model = load_model(&a.model)?;
    writeln!(
        out,
        "clauses={} depth={} classes={} symbols={} edge_types={}",
        model.num_clauses(),
        model.depth(),
        model.num_classes(),
        model.symbols().num_symbols(),
        model.symbols().num_edge_types()
    )?;
    for j in 0..model.num_clauses() {
        write!(out, "{}", decode_clause(&model, j)?)?;
        if a.trace {
            let t = trace_to_nodes(&model, j)?;
            writeln!(out, "  formula: {}", t.render_formula())?;
            for line in t.render_tree().lines() {
                writeln!(out, "    {line}")?;
            }
        }
    }
    Ok(())
}

fn cmd_trace(a: &TraceArgs, out: &mut dyn Write) -> Result<()> {
    let model = load_model(&a.model)?;
    let clauses: Vec<usize> = match a.clause {
        Some(j) if j >= model.num_clauses() => {
            return Err(Error::OutOfRange {
                index: j,
                bound: model.num_clauses(),
            })
        }
        Some(j) => vec![j],
        None => (0..model.num_clauses()).collect(),
    };
    for j in clauses {
        let t = trace_to_nodes(&model, j)?;
        writeln!(out, "clause={j} formula={}", t.render_formula())?;
        for line in t.render_tree().lines() {
            writeln!(out, "  {line}")?;
        }
    }
    Ok(())
}
