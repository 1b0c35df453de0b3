//! Coreference-chain probabilities, the weighted pairwise coreference loss
//! and the language-modeling head.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::autodiff::{softmax, Tape, Var};
use crate::error::{Error, Result};
use crate::reader::{read_sequence, GateRecord, Mode, ModelParams, ParamVars, ReaderConfig, StepVars, OUTPUT};

/// ψ values are clamped to `[EPS, 1 - EPS]` before taking logarithms.
pub const PSI_EPS: f64 = 1e-7;

fn check_pair(len: usize, t1: usize, t2: usize) -> Result<()> {
    if t1 >= t2 {
        return Err(Error::Contract(format!("pair ({t1}, {t2}) must satisfy t1 < t2")));
    }
    if t2 >= len {
        return Err(Error::Contract(format!("pair ({t1}, {t2}) outside sequence of length {len}")));
    }
    Ok(())
}

/// Probability that cell `cell` is not overwritten on `t1+1 ..= t2`.
pub fn chain_survival(overwrites: &[Vec<f64>], cell: usize, t1: usize, t2: usize) -> Result<f64> {
    check_pair(overwrites.len(), t1, t2)?;
    Ok(overwrites[t1 + 1..=t2].iter().map(|o| 1.0 - o[cell]).product())
}

/// Probability that tokens `t1 < t2` corefer through some memory cell:
/// `Σ_i (u_t1 + o_t1) · u_t2 · ω_{t1,t2}`.
pub fn coref_probability(records: &[GateRecord], t1: usize, t2: usize) -> Result<f64> {
    check_pair(records.len(), t1, t2)?;
    let cells = records[t1].cells();
    let mut psi = 0.0;
    for i in 0..cells {
        let stored = records[t1].u[i] + records[t1].o[i];
        let survival: f64 = records[t1 + 1..=t2].iter().map(|g| 1.0 - g.o[i]).product();
        psi += stored * records[t2].u[i] * survival;
    }
    Ok(psi)
}

/// Pairwise coreference probabilities for `t1 < t2`.
#[derive(Clone, Debug, PartialEq)]
pub struct CorefMatrix {
    len: usize,
    psi: BTreeMap<(usize, usize), f64>,
}

impl CorefMatrix {
    /// All pairs of a sequence in O(T² N).
    pub fn from_records(records: &[GateRecord]) -> Self {
        let len = records.len();
        let mut psi = BTreeMap::new();
        for t1 in 0..len {
            let cells = records[t1].cells();
            let stored: Vec<f64> = (0..cells).map(|i| records[t1].u[i] + records[t1].o[i]).collect();
            let mut survival = vec![1.0; cells];
            for t2 in t1 + 1..len {
                let g = &records[t2];
                let mut p = 0.0;
                for i in 0..cells {
                    survival[i] *= 1.0 - g.o[i];
                    p += stored[i] * g.u[i] * survival[i];
                }
                psi.insert((t1, t2), p);
            }
        }
        CorefMatrix { len, psi }
    }

    /// Only the requested pairs.
    pub fn for_pairs(records: &[GateRecord], pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut psi = BTreeMap::new();
        for (t1, t2) in pairs {
            psi.insert((t1, t2), coref_probability(records, t1, t2)?);
        }
        Ok(CorefMatrix {
            len: records.len(),
            psi,
        })
    }

    pub fn from_values(len: usize, values: impl IntoIterator<Item = ((usize, usize), f64)>) -> Result<Self> {
        let mut psi = BTreeMap::new();
        for ((t1, t2), p) in values {
            check_pair(len, t1, t2)?;
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Contract(format!("ψ({t1}, {t2}) = {p} outside [0, 1]")));
            }
            psi.insert((t1, t2), p);
        }
        Ok(CorefMatrix { len, psi })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, t1: usize, t2: usize) -> Option<f64> {
        self.psi.get(&(t1, t2)).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(usize, usize), &f64)> {
        self.psi.iter()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LinkKind {
    /// Pronoun-name link.
    Coref,
    /// Adjacent tokens inside one mention span.
    SelfLink,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PairLabel {
    pub t1: usize,
    pub t2: usize,
    pub label: bool,
    pub kind: LinkKind,
}

/// Supervised token pairs; unlabeled pairs are simply absent.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PairLabels {
    entries: Vec<PairLabel>,
}

impl PairLabels {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a pair given in either order. Re-adding a pair is an error.
    pub fn push(&mut self, a: usize, b: usize, label: bool, kind: LinkKind) -> Result<()> {
        let (t1, t2) = (a.min(b), a.max(b));
        if t1 == t2 {
            return Err(Error::Contract(format!("pair ({a}, {b}) links a token to itself")));
        }
        if self.entries.iter().any(|e| e.t1 == t1 && e.t2 == t2) {
            return Err(Error::Contract(format!("duplicate labeled pair ({t1}, {t2})")));
        }
        self.entries.push(PairLabel { t1, t2, label, kind });
        Ok(())
    }

    /// Self links `(a, a+1), …, (b-1, b)` for an inclusive span.
    pub fn push_span(&mut self, first: usize, last: usize) -> Result<()> {
        for t in first..last {
            self.push(t, t + 1, true, LinkKind::SelfLink)?;
        }
        Ok(())
    }

    pub fn entries(&self) -> &[PairLabel] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn pairs(&self) -> BTreeSet<(usize, usize)> {
        self.entries.iter().map(|e| (e.t1, e.t2)).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub self_link: f64,
    pub coref: f64,
    /// Extra factor on negative pairs.
    pub neg_ratio: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights {
            self_link: 0.1,
            coref: 5.0,
            neg_ratio: 10.0,
        }
    }
}

impl LossWeights {
    pub fn weight(&self, kind: LinkKind, label: bool) -> f64 {
        let base = match kind {
            LinkKind::Coref => self.coref,
            LinkKind::SelfLink => self.self_link,
        };
        if label {
            base
        } else {
            base * self.neg_ratio
        }
    }
}

/// Binary cross-entropy with ψ clamped away from 0 and 1.
pub fn binary_cross_entropy(psi: f64, label: bool) -> f64 {
    let p = psi.clamp(PSI_EPS, 1.0 - PSI_EPS);
    if label {
        -p.ln()
    } else {
        -(1.0 - p).ln()
    }
}

/// Weighted cross-entropy over the labeled pairs.
pub fn coref_loss(psi: &CorefMatrix, labels: &PairLabels, weights: &LossWeights) -> Result<f64> {
    let mut total = 0.0;
    for e in labels.entries() {
        let p = psi
            .get(e.t1, e.t2)
            .ok_or_else(|| Error::Contract(format!("no ψ for labeled pair ({}, {})", e.t1, e.t2)))?;
        total += weights.weight(e.kind, e.label) * binary_cross_entropy(p, e.label);
    }
    Ok(total)
}

/// Tape form of ψ for use in training.
pub struct TapeChains<'a> {
    steps: &'a [StepVars],
    keep: Vec<Option<Var>>,
}

impl<'a> TapeChains<'a> {
    pub fn new(steps: &'a [StepVars]) -> Self {
        TapeChains {
            steps,
            keep: vec![None; steps.len()],
        }
    }

    fn keep(&mut self, tape: &mut Tape, t: usize) -> Result<Var> {
        if let Some(v) = self.keep[t] {
            return Ok(v);
        }
        let v = tape.one_minus(self.steps[t].o)?;
        self.keep[t] = Some(v);
        Ok(v)
    }

    pub fn psi(&mut self, tape: &mut Tape, t1: usize, t2: usize) -> Result<Var> {
        check_pair(self.steps.len(), t1, t2)?;
        let mut chain = tape.add(self.steps[t1].u, self.steps[t1].o)?;
        chain = tape.mul(chain, self.steps[t2].u)?;
        for t in t1 + 1..=t2 {
            let k = self.keep(tape, t)?;
            chain = tape.mul(chain, k)?;
        }
        tape.sum(chain)
    }
}

/// Tape form of [`coref_loss`].
pub fn coref_loss_on_tape(tape: &mut Tape, steps: &[StepVars], labels: &PairLabels, weights: &LossWeights) -> Result<Option<Var>> {
    let mut chains = TapeChains::new(steps);
    let mut total: Option<Var> = None;
    for e in labels.entries() {
        let psi = chains.psi(tape, e.t1, e.t2)?;
        let clamped = tape.clip(psi, PSI_EPS, 1.0 - PSI_EPS)?;
        let p = if e.label { clamped } else { tape.one_minus(clamped)? };
        let log_p = tape.log(p)?;
        let term = tape.scale(log_p, -weights.weight(e.kind, e.label))?;
        total = Some(match total {
            Some(acc) => tape.add(acc, term)?,
            None => term,
        });
    }
    Ok(total)
}

/// Vocabulary logits `O h`.
pub fn lm_logits(tape: &mut Tape, pv: &ParamVars, hidden: Var) -> Result<Var> {
    tape.matvec(pv.get(OUTPUT), hidden)
}

/// Next-word distribution `softmax(O h)` for a plain hidden state.
pub fn lm_distribution(params: &ModelParams, hidden: &[f64]) -> Result<Vec<f64>> {
    let out = params.get(OUTPUT);
    let cols = out.shape()[1];
    if hidden.len() != cols {
        return Err(Error::dim("lm_logits", format!("hidden of length {} vs output {:?}", hidden.len(), out.shape())));
    }
    let logits: Vec<f64> = (0..out.shape()[0])
        .map(|r| out.row(r).iter().zip(hidden).map(|(a, b)| a * b).sum())
        .collect();
    Ok(softmax(&logits))
}

/// Mean next-token cross-entropy of a read sequence, predicting
/// `tokens[t + 1]` from the output at `t`. `None` for one-token sequences.
pub fn lm_loss_on_tape(tape: &mut Tape, pv: &ParamVars, steps: &[StepVars], tokens: &[usize]) -> Result<Option<Var>> {
    if tokens.len() < 2 {
        return Ok(None);
    }
    let mut total: Option<Var> = None;
    for t in 0..tokens.len() - 1 {
        let logits = lm_logits(tape, pv, steps[t].output)?;
        let ce = tape.cross_entropy(logits, tokens[t + 1])?;
        total = Some(match total {
            Some(acc) => tape.add(acc, ce)?,
            None => ce,
        });
    }
    let total = total.expect("at least one prediction");
    Ok(Some(tape.scale(total, 1.0 / (tokens.len() - 1) as f64)?))
}

/// Running negative log-likelihood for perplexity.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct NllAccumulator {
    pub total: f64,
    pub count: usize,
}

impl NllAccumulator {
    pub fn add_probability(&mut self, p: f64) {
        self.total -= p.ln();
        self.count += 1;
    }

    pub fn perplexity(&self) -> Result<f64> {
        if self.count == 0 {
            return Err(Error::Contract("perplexity of an empty corpus".into()));
        }
        Ok((self.total / self.count as f64).exp())
    }
}

/// `exp(mean NLL)` of next-token predictions over every sequence, reading
/// in eval mode.
pub fn perplexity(params: &ModelParams, config: &ReaderConfig, sequences: &[Vec<usize>]) -> Result<f64> {
    let mut acc = NllAccumulator::default();
    for seq in sequences.iter().filter(|s| s.len() >= 2) {
        let read = read_sequence(params, config, seq, Mode::Eval, 0)?;
        for t in 0..seq.len() - 1 {
            let dist = lm_distribution(params, &read.hidden[t])?;
            acc.add_probability(dist[seq[t + 1]]);
        }
    }
    acc.perplexity()
}
