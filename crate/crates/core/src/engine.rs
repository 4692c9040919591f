//! Forward pass and training loop.
//!
//! A clause is a conjunction of one component per layer. Layer 0 reads the
//! node hypervectors; layer `i >= 1` reads the message hypervectors built
//! from the clauses that matched at layer `i - 1` on neighbouring nodes.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::automata::{draw, ClauseTeam, ClauseWeights, Component, FeedbackProbs, IncludeBudget, TaTeam};
use crate::error::{Error, Result};
use crate::exec::{Executor, Parallelism};
use crate::graph::{InputGraph, LayerState};
use crate::hypervector::{Hypervector, MessageSpace, SymbolSpace};

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub num_clauses: usize,
    /// Voting margin `T`.
    pub threshold: u32,
    /// Specificity `s`.
    pub specificity: f64,
    pub depth: usize,
    pub hv_size: usize,
    pub msg_size: usize,
    pub bits_per_symbol: usize,
    pub bits_per_clause: usize,
    /// States per action, `N`.
    pub n_states: u16,
    pub max_included_literals: Option<usize>,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            num_clauses: 100,
            threshold: 100,
            specificity: 2.0,
            depth: 2,
            hv_size: 64,
            msg_size: 256,
            bits_per_symbol: 2,
            bits_per_clause: 2,
            n_states: 128,
            max_included_literals: None,
            epochs: 10,
            seed: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("clauses", self.num_clauses),
            ("threshold", self.threshold as usize),
            ("depth", self.depth),
            ("hypervector size", self.hv_size),
            ("bits per symbol", self.bits_per_symbol),
            ("states per action", self.n_states as usize),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        if self.depth > 1 && (self.msg_size == 0 || self.bits_per_clause == 0) {
            return Err(Error::Config(
                "message size and bits per clause must be positive when depth > 1".into(),
            ));
        }
        if self.specificity.is_nan() || self.specificity < 1.0 || !self.specificity.is_finite() {
            return Err(Error::Config(format!("specificity must be >= 1, got {}", self.specificity)));
        }
        if self.n_states > 32_768 {
            return Err(Error::Config("states per action must be at most 32768".into()));
        }
        if self.max_included_literals == Some(0) {
            return Err(Error::Config("max included literals must be positive".into()));
        }
        Ok(())
    }

    /// Literals per layer: `2 * hv_size` at layer 0, `2 * msg_size` above.
    pub fn literal_counts(&self) -> Vec<usize> {
        std::iter::once(2 * self.hv_size)
            .chain(std::iter::repeat_n(2 * self.msg_size, self.depth - 1))
            .collect()
    }
}

/// True iff every literal the component includes is 1 in `hv`.
pub fn eval_component(component: &Component, hv: &Hypervector) -> Result<bool> {
    if component.literals() != hv.len() {
        return Err(Error::Config(format!(
            "component has {} literals but the vector has {}",
            component.literals(),
            hv.len()
        )));
    }
    Ok(component.matches(hv))
}

/// Index of the largest vote, lowest index on ties.
pub fn argmax(votes: &[i64]) -> usize {
    let mut best = 0;
    for (c, &v) in votes.iter().enumerate() {
        if v > votes[best] {
            best = c;
        }
    }
    best
}

/// Per-clause feedback probability for a class with vote sum `v`:
/// `(T - clip(v)) / 2T` for the target class, `(T + clip(v)) / 2T` otherwise.
pub fn feedback_probability(threshold: u32, v: i64, target: bool) -> f64 {
    feedback_threshold(threshold, v, target) as f64 / (1u64 << 32) as f64
}

fn feedback_threshold(threshold: u32, v: i64, target: bool) -> u64 {
    let t = threshold as i64;
    let v = v.clamp(-t, t);
    let num = if target { t - v } else { t + v } as u64;
    (num << 32) / (2 * t as u64)
}

/// Result of evaluating one graph.
#[derive(Clone, Debug)]
pub struct Forward {
    pub votes: Vec<i64>,
    pub clause_outputs: Vec<bool>,
    pub state: LayerState,
}

impl Forward {
    pub fn prediction(&self) -> usize {
        argmax(&self.votes)
    }
}

// word comparisons per layer before the rayon path is used
#[cfg(feature = "parallel")]
const PAR_LAYER_WORK: usize = 1 << 14;

#[derive(Clone, Debug)]
pub struct GraphTm {
    config: TrainConfig,
    symbols: SymbolSpace,
    fingerprint: u64,
    messages: Option<MessageSpace>,
    team: TaTeam,
    weights: ClauseWeights,
}

impl GraphTm {
    /// Fresh model: all automata weakly excluded, message bits drawn from
    /// the config seed, weights randomly `+1` or `-1`.
    pub fn new(config: TrainConfig, symbols: SymbolSpace, num_classes: usize) -> Result<Self> {
        config.validate()?;
        let messages = if config.depth > 1 {
            Some(MessageSpace::new(
                config.msg_size,
                config.bits_per_clause,
                config.num_clauses,
                symbols.num_edge_types(),
                config.seed,
            )?)
        } else {
            None
        };
        let mut model = Self::blank(config, symbols, messages, num_classes)?;
        let mut rng = ChaCha8Rng::seed_from_u64(model.config.seed);
        rng.set_stream(u64::MAX);
        for j in 0..model.num_clauses() {
            for c in 0..num_classes {
                model.weights.set(j, c, if rng.gen::<bool>() { 1 } else { -1 });
            }
        }
        Ok(model)
    }

    /// Model with every automaton excluded and all weights zero, for
    /// setting clauses by hand.
    pub fn blank(
        config: TrainConfig,
        symbols: SymbolSpace,
        messages: Option<MessageSpace>,
        num_classes: usize,
    ) -> Result<Self> {
        config.validate()?;
        let team = TaTeam::new(config.num_clauses, &config.literal_counts(), config.n_states)?;
        let weights = ClauseWeights::zeros(config.num_clauses, num_classes);
        Self::from_parts(config, symbols, messages, team, weights)
    }

    pub fn from_parts(
        config: TrainConfig,
        symbols: SymbolSpace,
        messages: Option<MessageSpace>,
        team: TaTeam,
        weights: ClauseWeights,
    ) -> Result<Self> {
        config.validate()?;
        if weights.num_classes() == 0 {
            return Err(Error::Config("at least one class is required".into()));
        }
        if symbols.hv_size() != config.hv_size {
            return Err(Error::Config(format!(
                "symbol space has size {} but the config says {}",
                symbols.hv_size(),
                config.hv_size
            )));
        }
        match (&messages, config.depth > 1) {
            (None, true) => return Err(Error::Config("depth > 1 needs a message space".into())),
            (Some(_), false) => return Err(Error::Config("depth 1 takes no message space".into())),
            (Some(ms), true) => {
                if ms.msg_size() != config.msg_size || ms.num_clauses() != config.num_clauses {
                    return Err(Error::Config("message space does not match the config".into()));
                }
                if ms.num_edge_types() < symbols.num_edge_types() {
                    return Err(Error::Config(format!(
                        "message space covers {} edge types, symbol space has {}",
                        ms.num_edge_types(),
                        symbols.num_edge_types()
                    )));
                }
            }
            (None, false) => {}
        }
        let counts = config.literal_counts();
        let shape_ok = team.num_clauses() == config.num_clauses
            && team.n_states() == config.n_states
            && team.clauses().iter().all(|c| {
                c.components.len() == counts.len()
                    && c.components.iter().zip(&counts).all(|(comp, &l)| comp.literals() == l)
            });
        if !shape_ok || weights.num_clauses() != config.num_clauses {
            return Err(Error::Config("automata or weights do not match the config".into()));
        }
        Ok(Self {
            fingerprint: symbols.fingerprint(),
            config,
            symbols,
            messages,
            team,
            weights,
        })
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn symbols(&self) -> &SymbolSpace {
        &self.symbols
    }

    pub fn messages(&self) -> Option<&MessageSpace> {
        self.messages.as_ref()
    }

    pub fn team(&self) -> &TaTeam {
        &self.team
    }

    pub fn weights(&self) -> &ClauseWeights {
        &self.weights
    }

    pub fn num_classes(&self) -> usize {
        self.weights.num_classes()
    }

    pub fn num_clauses(&self) -> usize {
        self.config.num_clauses
    }

    pub fn depth(&self) -> usize {
        self.config.depth
    }

    /// Includes exactly `literals` in one component and excludes the rest.
    pub fn set_component_literals(&mut self, clause: usize, layer: usize, literals: &[usize]) -> Result<()> {
        let n = self.config.n_states;
        let width = self.team.component(clause, layer)?.literals();
        if let Some(&bad) = literals.iter().find(|&&k| k >= width) {
            return Err(Error::OutOfRange { index: bad, bound: width });
        }
        for k in 0..width {
            let state = if literals.contains(&k) { n - 1 } else { n };
            self.team.set_state(clause, layer, k, state)?;
        }
        Ok(())
    }

    pub fn set_weights(&mut self, clause: usize, weights: &[i32]) -> Result<()> {
        if clause >= self.num_clauses() {
            return Err(Error::OutOfRange {
                index: clause,
                bound: self.num_clauses(),
            });
        }
        if weights.len() != self.num_classes() {
            return Err(Error::Config(format!(
                "{} weights for {} classes",
                weights.len(),
                self.num_classes()
            )));
        }
        for (c, &w) in weights.iter().enumerate() {
            self.weights.set(clause, c, w);
        }
        Ok(())
    }

    pub fn forward(&self, graph: &InputGraph) -> Result<Forward> {
        self.forward_with(graph, &Executor::sequential())
    }

    pub fn forward_with(&self, graph: &InputGraph, exec: &Executor) -> Result<Forward> {
        if graph.space_fingerprint() != self.fingerprint {
            return Err(Error::UnboundGraph);
        }
        let nn = graph.num_nodes();
        let m = self.num_clauses();
        let mut state = LayerState::new(nn, m);
        let mut prev = self.eval_layer(0, graph.node_hvs(), None, exec);
        state.push_layer(None, prev.clone());
        for layer in 1..self.depth() {
            let msgs = self.deliver(graph, &prev);
            let cur = self.eval_layer(layer, &msgs, Some(&prev), exec);
            state.push_layer(Some(msgs), cur.clone());
            prev = cur;
        }
        let clause_outputs: Vec<bool> = (0..m).map(|j| state.final_matches(j).iter().any(|&b| b)).collect();
        let mut votes = vec![0i64; self.num_classes()];
        for (j, _) in clause_outputs.iter().enumerate().filter(|(_, &o)| o) {
            for (c, v) in votes.iter_mut().enumerate() {
                *v += self.weights.get(j, c) as i64;
            }
        }
        Ok(Forward {
            votes,
            clause_outputs,
            state,
        })
    }

    fn eval_layer(&self, layer: usize, hvs: &[Hypervector], prev: Option<&[bool]>, exec: &Executor) -> Vec<bool> {
        let nn = hvs.len();
        let mut out = vec![false; self.num_clauses() * nn];
        if nn == 0 {
            return out;
        }
        let clauses = self.team.clauses();
        let row = |(j, row): (usize, &mut [bool])| {
            let comp = &clauses[j].components[layer];
            for (n, slot) in row.iter_mut().enumerate() {
                *slot = prev.is_none_or(|p| p[j * nn + n]) && comp.matches(&hvs[n]);
            }
        };
        let work = out.len() * hvs[0].words().len();
        #[cfg(feature = "parallel")]
        if exec.is_parallel() && work >= PAR_LAYER_WORK {
            exec.install(|| out.par_chunks_mut(nn).enumerate().for_each(row));
            return out;
        }
        let _ = (exec, work);
        out.chunks_mut(nn).enumerate().for_each(row);
        out
    }

    /// Builds every node's inbox for the next layer from the current matches.
    fn deliver(&self, graph: &InputGraph, matches: &[bool]) -> Vec<Hypervector> {
        let ms = self.messages.as_ref().expect("message layers need a message space");
        let nn = graph.num_nodes();
        let mut inbox = vec![Hypervector::empty(ms.msg_size()); nn];
        for e in graph.edges() {
            for j in 0..self.num_clauses() {
                if matches[j * nn + e.src] {
                    inbox[e.dst]
                        .bundle(ms.bound(j, e.edge_type))
                        .expect("message bits are validated at construction");
                }
            }
        }
        inbox
    }

    pub fn predict(&self, graph: &InputGraph) -> Result<usize> {
        Ok(self.forward(graph)?.prediction())
    }

    /// Predictions for a batch, spread over graphs.
    pub fn predict_all(&self, graphs: &[InputGraph], exec: &Executor) -> Result<Vec<usize>> {
        #[cfg(feature = "parallel")]
        if exec.is_parallel() {
            return exec.install(|| graphs.par_iter().map(|g| self.predict(g)).collect());
        }
        let _ = exec;
        graphs.iter().map(|g| self.predict(g)).collect()
    }

    /// Fraction of labelled graphs predicted correctly.
    pub fn accuracy(&self, graphs: &[InputGraph], exec: &Executor) -> Result<f64> {
        if graphs.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let labels = labels_of(graphs)?;
        let preds = self.predict_all(graphs, exec)?;
        let hits = preds.iter().zip(&labels).filter(|(p, l)| p == l).count();
        Ok(hits as f64 / graphs.len() as f64)
    }
}

fn labels_of(graphs: &[InputGraph]) -> Result<Vec<usize>> {
    graphs
        .iter()
        .enumerate()
        .map(|(i, g)| g.label.ok_or_else(|| Error::Config(format!("graph {i} has no label"))))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub train_acc: f64,
    pub test_acc: Option<f64>,
    pub elapsed_ms: u128,
}

impl std::fmt::Display for EpochMetrics {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "epoch={} train_acc={:.4}", self.epoch, self.train_acc)?;
        match self.test_acc {
            Some(a) => write!(f, " test_acc={a:.4}")?,
            None => write!(f, " test_acc=na")?,
        }
        write!(f, " elapsed_ms={}", self.elapsed_ms)
    }
}

struct StepCtx<'a> {
    graph: &'a InputGraph,
    state: &'a LayerState,
    outputs: &'a [bool],
    target: usize,
    p_target: u64,
    negative: Option<(usize, u64)>,
    probs: FeedbackProbs,
    n_states: u16,
    cap: Option<usize>,
}

impl StepCtx<'_> {
    fn literals(&self, layer: usize, node: usize) -> &Hypervector {
        if layer == 0 {
            self.graph.node_hv(node)
        } else {
            self.state.message(layer, node)
        }
    }

    fn pick_node(&self, clause: usize, rng: &mut ChaCha8Rng) -> Option<usize> {
        if !self.outputs[clause] {
            return None;
        }
        let hits = self.state.final_matches(clause);
        let count = hits.iter().filter(|&&b| b).count();
        let pick = rng.gen_range(0..count);
        hits.iter().enumerate().filter(|(_, &b)| b).nth(pick).map(|(n, _)| n)
    }

    fn type_i(&self, team: &mut ClauseTeam, node: Option<usize>, rng: &mut ChaCha8Rng) {
        let mut budget = IncludeBudget {
            cap: self.cap,
            count: team.included_total(),
        };
        for (layer, comp) in team.components.iter_mut().enumerate() {
            match node {
                Some(n) => comp.type_i(self.literals(layer, n).words(), true, &self.probs, self.n_states, &mut budget, rng),
                None => comp.type_i(&[], false, &self.probs, self.n_states, &mut budget, rng),
            }
        }
    }

    fn type_ii(&self, team: &mut ClauseTeam, node: usize) {
        let mut budget = IncludeBudget {
            cap: None,
            count: team.included_total(),
        };
        for (layer, comp) in team.components.iter_mut().enumerate() {
            comp.type_ii(self.literals(layer, node).words(), true, self.n_states, &mut budget);
        }
    }

    /// Target class: positive-weight clauses learn the pattern, negative ones
    /// are pushed to reject it. Non-target class: the mirror image.
    fn update(&self, j: usize, team: &mut ClauseTeam, row: &mut [i32], rng: &mut ChaCha8Rng) {
        let fired = self.outputs[j];
        if draw(rng, self.p_target) {
            let node = self.pick_node(j, rng);
            let y = self.target;
            if row[y] >= 0 {
                self.type_i(team, node, rng);
            } else if let Some(n) = node {
                self.type_ii(team, n);
            }
            if fired {
                row[y] += 1;
            }
        }
        if let Some((c, p)) = self.negative {
            if draw(rng, p) {
                let node = self.pick_node(j, rng);
                if row[c] < 0 {
                    self.type_i(team, node, rng);
                } else if let Some(n) = node {
                    self.type_ii(team, n);
                }
                if fired {
                    row[c] -= 1;
                }
            }
        }
    }
}

/// Training state: a master stream for shuffling and class sampling plus
/// one stream per clause, so results do not depend on the worker count.
#[derive(Debug)]
pub struct Trainer {
    master: ChaCha8Rng,
    clause_rngs: Vec<ChaCha8Rng>,
    exec: Executor,
}

impl Trainer {
    pub fn new(model: &GraphTm, seed: u64, parallelism: Parallelism) -> Result<Self> {
        let master = ChaCha8Rng::seed_from_u64(seed);
        let clause_rngs = (0..model.num_clauses())
            .map(|j| {
                let mut r = ChaCha8Rng::seed_from_u64(seed);
                r.set_stream(j as u64 + 1);
                r
            })
            .collect();
        Ok(Self {
            master,
            clause_rngs,
            exec: Executor::new(parallelism)?,
        })
    }

    pub fn executor(&self) -> &Executor {
        &self.exec
    }

    pub fn train_step(&mut self, model: &mut GraphTm, graph: &InputGraph, label: usize) -> Result<()> {
        let k = model.num_classes();
        if label >= k {
            return Err(Error::OutOfRange { index: label, bound: k });
        }
        if self.clause_rngs.len() != model.num_clauses() {
            return Err(Error::Config("trainer was built for a different model".into()));
        }
        let fwd = model.forward_with(graph, &self.exec)?;
        let t = model.config.threshold;
        let negative = (k > 1).then(|| {
            let mut c = self.master.gen_range(0..k - 1);
            if c >= label {
                c += 1;
            }
            (c, feedback_threshold(t, fwd.votes[c], false))
        });
        let ctx = StepCtx {
            graph,
            state: &fwd.state,
            outputs: &fwd.clause_outputs,
            target: label,
            p_target: feedback_threshold(t, fwd.votes[label], true),
            negative,
            probs: FeedbackProbs::new(model.config.specificity)?,
            n_states: model.config.n_states,
            cap: model.config.max_included_literals,
        };
        let clauses = model.team.clauses_mut();
        let rows = model.weights.rows_mut();
        let rngs = &mut self.clause_rngs;
        #[cfg(feature = "parallel")]
        if self.exec.is_parallel() {
            let rows: Vec<&mut [i32]> = rows.collect();
            self.exec.install(|| {
                clauses
                    .par_iter_mut()
                    .zip(rows)
                    .zip(rngs.par_iter_mut())
                    .enumerate()
                    .with_min_len(8)
                    .for_each(|(j, ((team, row), rng))| ctx.update(j, team, row, rng))
            });
            return Ok(());
        }
        for (j, ((team, row), rng)) in clauses.iter_mut().zip(rows).zip(rngs.iter_mut()).enumerate() {
            ctx.update(j, team, row, rng);
        }
        Ok(())
    }

    /// One shuffled pass over `train`, then accuracy on both sets.
    pub fn run_epoch(
        &mut self,
        model: &mut GraphTm,
        train: &[InputGraph],
        test: &[InputGraph],
        epoch: usize,
    ) -> Result<EpochMetrics> {
        if train.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let labels = labels_of(train)?;
        let start = Instant::now();
        let mut order: Vec<usize> = (0..train.len()).collect();
        order.shuffle(&mut self.master);
        for i in order {
            self.train_step(model, &train[i], labels[i])?;
        }
        let train_acc = model.accuracy(train, &self.exec)?;
        let test_acc = if test.is_empty() {
            None
        } else {
            Some(model.accuracy(test, &self.exec)?)
        };
        Ok(EpochMetrics {
            epoch,
            train_acc,
            test_acc,
            elapsed_ms: start.elapsed().as_millis(),
        })
    }

    /// Runs up to `epochs` epochs. `on_epoch` sees each epoch's metrics and
    /// returns `false` to stop early.
    pub fn fit(
        &mut self,
        model: &mut GraphTm,
        train: &[InputGraph],
        test: &[InputGraph],
        epochs: usize,
        mut on_epoch: impl FnMut(&EpochMetrics) -> bool,
    ) -> Result<Vec<EpochMetrics>> {
        if train.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let mut out = Vec::with_capacity(epochs);
        for epoch in 1..=epochs {
            let m = self.run_epoch(model, train, test, epoch)?;
            out.push(m);
            if !on_epoch(&m) {
                break;
            }
        }
        Ok(out)
    }
}
