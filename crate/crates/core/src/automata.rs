//! Tsetlin automata teams and the Type I / Type II feedback tables.
//!
//! Every literal of every clause component owns one two-action automaton
//! with `2N` states. States `0..N` select Include, `N..2N` select Exclude.
//! A reward deepens the current action (away from the `N-1 | N` boundary),
//! a penalty moves toward or across it. Both saturate at the ends.

use rand::RngCore;

use crate::error::{Error, Result};
use crate::hypervector::{test_bit, words_for, Hypervector};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Action {
    Include,
    Exclude,
}

/// Feedback probabilities as 32-bit fixed-point thresholds.
#[derive(Clone, Copy, Debug)]
pub struct FeedbackProbs {
    /// `(s - 1) / s`
    high: u64,
    /// `1 / s`
    low: u64,
    /// `ln(1 - low)`, for sampling gaps between `1 / s` events
    log_miss: f64,
}

const ONE: u64 = 1 << 32;

fn threshold(p: f64) -> u64 {
    (p.clamp(0.0, 1.0) * ONE as f64).round() as u64
}

impl FeedbackProbs {
    pub fn new(s: f64) -> Result<Self> {
        if s.is_nan() || s < 1.0 {
            return Err(Error::Config(format!("specificity s must be >= 1, got {s}")));
        }
        let low = threshold(1.0 / s);
        Ok(Self {
            high: threshold((s - 1.0) / s),
            low,
            log_miss: (1.0 - low as f64 / ONE as f64).ln(),
        })
    }

    /// Index of the first `1 / s` event at or after `from` in a run of
    /// independent trials.
    #[inline]
    fn skip<R: RngCore + ?Sized>(&self, from: usize, rng: &mut R) -> usize {
        match self.low {
            0 => usize::MAX,
            t if t >= ONE => from,
            _ => {
                let u = ((rng.next_u64() >> 11) + 1) as f64 / (1u64 << 53) as f64;
                from.saturating_add((u.ln() / self.log_miss) as usize)
            }
        }
    }
}

#[inline]
pub(crate) fn draw<R: RngCore + ?Sized>(rng: &mut R, thr: u64) -> bool {
    match thr {
        0 => false,
        t if t >= ONE => true,
        t => (rng.next_u32() as u64) < t,
    }
}

/// Running count of included literals across a clause's components, with
/// the optional cap on Type I inclusions.
#[derive(Clone, Copy, Debug)]
pub struct IncludeBudget {
    pub cap: Option<usize>,
    pub count: usize,
}

impl IncludeBudget {
    fn full(&self) -> bool {
        self.cap.is_some_and(|c| self.count >= c)
    }
}

/// The automata of one clause component (one layer of one clause).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Component {
    states: Vec<u16>,
    include: Vec<u64>,
    included: usize,
}

impl Component {
    /// All automata start in state `N`, the weakest Exclude state.
    pub fn new(literals: usize, n_states: u16) -> Self {
        Self {
            states: vec![n_states; literals],
            include: vec![0; words_for(literals)],
            included: 0,
        }
    }

    pub(crate) fn from_states(states: Vec<u16>, n_states: u16) -> Self {
        let mut include = vec![0u64; words_for(states.len())];
        let mut included = 0;
        for (k, &s) in states.iter().enumerate() {
            if s < n_states {
                include[k / 64] |= 1 << (k % 64);
                included += 1;
            }
        }
        Self {
            states,
            include,
            included,
        }
    }

    pub fn literals(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[u16] {
        &self.states
    }

    pub fn state(&self, literal: usize) -> u16 {
        self.states[literal]
    }

    pub fn include_mask(&self) -> &[u64] {
        &self.include
    }

    pub fn included_count(&self) -> usize {
        self.included
    }

    pub fn is_included(&self, literal: usize) -> bool {
        test_bit(&self.include, literal)
    }

    pub fn included_literals(&self) -> Vec<usize> {
        (0..self.literals()).filter(|&k| self.is_included(k)).collect()
    }

    /// Overwrites one automaton's state, keeping the include mask in sync.
    pub fn set_state(&mut self, literal: usize, state: u16, n_states: u16) {
        let was = self.is_included(literal);
        let now = state < n_states;
        self.states[literal] = state;
        if was != now {
            self.include[literal / 64] ^= 1 << (literal % 64);
            if now {
                self.included += 1;
            } else {
                self.included -= 1;
            }
        }
    }

    /// True iff every included literal is 1 in `hv`. An empty component
    /// matches anything.
    #[inline]
    pub fn matches(&self, hv: &Hypervector) -> bool {
        self.include
            .iter()
            .zip(hv.words())
            .all(|(inc, bits)| inc & !bits == 0)
    }

    #[inline]
    fn toward_include(&mut self, k: usize, n: u16, budget: &mut IncludeBudget, capped: bool) {
        let s = self.states[k];
        if s == 0 {
            return;
        }
        if s == n {
            if capped && budget.full() {
                return;
            }
            self.include[k / 64] |= 1 << (k % 64);
            self.included += 1;
            budget.count += 1;
        }
        self.states[k] = s - 1;
    }

    #[inline]
    fn toward_exclude(&mut self, k: usize, n: u16, budget: &mut IncludeBudget) {
        let s = self.states[k];
        if s == 2 * n - 1 {
            return;
        }
        if s == n - 1 {
            self.include[k / 64] &= !(1 << (k % 64));
            self.included -= 1;
            budget.count -= 1;
        }
        self.states[k] = s + 1;
    }

    /// Type I feedback (target-class sample).
    ///
    /// | clause, literal | Include              | Exclude               |
    /// |-----------------|----------------------|-----------------------|
    /// | 1, 1            | reward `(s-1)/s`     | penalty `(s-1)/s`     |
    /// | 1, 0            | n/a                  | reward `1/s`          |
    /// | 0, any          | penalty `1/s`        | reward `1/s`          |
    ///
    /// Every outcome above is either "one step toward Include" (first row)
    /// or "one step toward Exclude" (the rest).
    #[allow(clippy::needless_range_loop)]
    pub fn type_i<R: RngCore + ?Sized>(
        &mut self,
        literal_values: &[u64],
        clause_value: bool,
        probs: &FeedbackProbs,
        n: u16,
        budget: &mut IncludeBudget,
        rng: &mut R,
    ) {
        let len = self.states.len();
        // positions hit by the 1/s event come from geometric gaps
        let mut next_low = probs.skip(0, rng);
        for w in 0..self.include.len() {
            let base = w * 64;
            let valid = if len - base >= 64 { u64::MAX } else { (1u64 << (len - base)) - 1 };
            let ones = if clause_value { literal_values[w] & valid } else { 0 };
            let mut low = 0u64;
            while next_low < (base + 64).min(len) {
                low |= 1 << (next_low - base);
                next_low = probs.skip(next_low + 1, rng);
            }
            let mut todo = ones | (low & !ones);
            while todo != 0 {
                let b = todo.trailing_zeros() as usize;
                todo &= todo - 1;
                let k = base + b;
                if ones >> b & 1 == 1 {
                    let s = self.states[k];
                    // saturated automata take no draw
                    if s == 0 || (s == n && budget.full()) {
                        continue;
                    }
                    if draw(rng, probs.high) {
                        self.toward_include(k, n, budget, true);
                    }
                } else {
                    self.toward_exclude(k, n, budget);
                }
            }
        }
    }

    /// Type II feedback (non-target sample): when the clause is true, every
    /// excluded literal that is 0 takes a penalty toward Include. Nothing
    /// else changes.
    #[allow(clippy::needless_range_loop)]
    pub fn type_ii(&mut self, literal_values: &[u64], clause_value: bool, n: u16, budget: &mut IncludeBudget) {
        if !clause_value {
            return;
        }
        let literals = self.states.len();
        for w in 0..self.include.len() {
            let mut cand = !literal_values[w] & !self.include[w];
            while cand != 0 {
                let k = w * 64 + cand.trailing_zeros() as usize;
                cand &= cand - 1;
                if k >= literals {
                    break;
                }
                self.toward_include(k, n, budget, false);
            }
        }
    }
}

/// One clause: a component per layer.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClauseTeam {
    pub components: Vec<Component>,
}

impl ClauseTeam {
    pub fn included_total(&self) -> usize {
        self.components.iter().map(Component::included_count).sum()
    }
}

/// Automata for all clauses. Layer 0 has `2 * hv_size` literals, message
/// layers `2 * msg_size`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TaTeam {
    n_states: u16,
    clauses: Vec<ClauseTeam>,
}

impl TaTeam {
    pub fn new(num_clauses: usize, literal_counts: &[usize], n_states: u16) -> Result<Self> {
        if n_states == 0 || n_states > 32_768 {
            return Err(Error::Config(format!("states per action must be in 1..=32768, got {n_states}")));
        }
        let clause = ClauseTeam {
            components: literal_counts
                .iter()
                .map(|&l| Component::new(l, n_states))
                .collect(),
        };
        Ok(Self {
            n_states,
            clauses: vec![clause; num_clauses],
        })
    }

    pub(crate) fn from_clauses(n_states: u16, clauses: Vec<ClauseTeam>) -> Self {
        Self { n_states, clauses }
    }

    pub fn n_states(&self) -> u16 {
        self.n_states
    }

    pub fn num_clauses(&self) -> usize {
        self.clauses.len()
    }

    pub fn clauses(&self) -> &[ClauseTeam] {
        &self.clauses
    }

    pub(crate) fn clauses_mut(&mut self) -> &mut [ClauseTeam] {
        &mut self.clauses
    }

    pub fn component(&self, clause: usize, layer: usize) -> Result<&Component> {
        self.clauses
            .get(clause)
            .ok_or(Error::OutOfRange {
                index: clause,
                bound: self.clauses.len(),
            })?
            .components
            .get(layer)
            .ok_or(Error::OutOfRange {
                index: layer,
                bound: self.clauses[clause].components.len(),
            })
    }

    fn component_mut(&mut self, clause: usize, layer: usize) -> Result<&mut Component> {
        self.component(clause, layer)?;
        Ok(&mut self.clauses[clause].components[layer])
    }

    pub fn action(&self, clause: usize, layer: usize, literal: usize) -> Result<Action> {
        let c = self.component(clause, layer)?;
        let state = *c.states.get(literal).ok_or(Error::OutOfRange {
            index: literal,
            bound: c.literals(),
        })?;
        Ok(if state < self.n_states {
            Action::Include
        } else {
            Action::Exclude
        })
    }

    pub fn set_state(&mut self, clause: usize, layer: usize, literal: usize, state: u16) -> Result<()> {
        let n = self.n_states;
        if state >= 2 * n {
            return Err(Error::OutOfRange {
                index: state as usize,
                bound: 2 * n as usize,
            });
        }
        let c = self.component_mut(clause, layer)?;
        if literal >= c.literals() {
            return Err(Error::OutOfRange {
                index: literal,
                bound: c.literals(),
            });
        }
        c.set_state(literal, state, n);
        Ok(())
    }

    fn check_width(c: &Component, hv: &Hypervector) -> Result<()> {
        if hv.len() != c.literals() {
            return Err(Error::Config(format!(
                "component has {} literals but the vector has {}",
                c.literals(),
                hv.len()
            )));
        }
        Ok(())
    }

    #[allow(clippy::too_many_arguments)]
    pub fn type_i_feedback<R: RngCore + ?Sized>(
        &mut self,
        clause: usize,
        layer: usize,
        literal_values: &Hypervector,
        clause_value: bool,
        s: f64,
        max_included: Option<usize>,
        rng: &mut R,
    ) -> Result<()> {
        let probs = FeedbackProbs::new(s)?;
        let n = self.n_states;
        let count = self.component(clause, layer).map(|_| self.clauses[clause].included_total())?;
        let mut budget = IncludeBudget {
            cap: max_included,
            count,
        };
        let c = self.component_mut(clause, layer)?;
        Self::check_width(c, literal_values)?;
        c.type_i(literal_values.words(), clause_value, &probs, n, &mut budget, rng);
        Ok(())
    }

    pub fn type_ii_feedback(
        &mut self,
        clause: usize,
        layer: usize,
        literal_values: &Hypervector,
        clause_value: bool,
    ) -> Result<()> {
        let n = self.n_states;
        let c = self.component_mut(clause, layer)?;
        Self::check_width(c, literal_values)?;
        let mut budget = IncludeBudget { cap: None, count: 0 };
        c.type_ii(literal_values.words(), clause_value, n, &mut budget);
        Ok(())
    }
}

/// Signed per-class clause weights, stored clause-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClauseWeights {
    num_classes: usize,
    values: Vec<i32>,
}

impl ClauseWeights {
    pub fn zeros(num_clauses: usize, num_classes: usize) -> Self {
        Self {
            num_classes,
            values: vec![0; num_clauses * num_classes],
        }
    }

    pub(crate) fn from_values(num_classes: usize, values: Vec<i32>) -> Self {
        Self { num_classes, values }
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn num_clauses(&self) -> usize {
        self.values.len() / self.num_classes.max(1)
    }

    pub fn get(&self, clause: usize, class: usize) -> i32 {
        self.values[clause * self.num_classes + class]
    }

    pub fn set(&mut self, clause: usize, class: usize, w: i32) {
        self.values[clause * self.num_classes + class] = w;
    }

    pub fn row(&self, clause: usize) -> &[i32] {
        &self.values[clause * self.num_classes..(clause + 1) * self.num_classes]
    }

    pub fn values(&self) -> &[i32] {
        &self.values
    }

    pub(crate) fn rows_mut(&mut self) -> std::slice::ChunksMut<'_, i32> {
        self.values.chunks_mut(self.num_classes)
    }
}
