//! Per-token building blocks of the reader, expressed as tape operations.

use std::collections::HashMap;

use super::config::ReaderConfig;
use super::params::{GruNames, ModelParams, MEM_PROJ};
use crate::autodiff::{Tape, Var};
use crate::error::{Error, Result};

/// Tape handles for every model tensor. Frozen tensors enter as constants.
pub struct ParamVars {
    vars: HashMap<String, Var>,
}

impl ParamVars {
    pub fn register(tape: &mut Tape, params: &ModelParams) -> Self {
        let vars = params
            .iter()
            .map(|(name, t)| {
                let v = if params.is_frozen(name) {
                    tape.constant(t.clone())
                } else {
                    tape.param(name, t)
                };
                (name.clone(), v)
            })
            .collect();
        ParamVars { vars }
    }

    pub fn get(&self, name: &str) -> Var {
        *self
            .vars
            .get(name)
            .unwrap_or_else(|| panic!("parameter {name} was not registered"))
    }

    pub fn try_get(&self, name: &str) -> Option<Var> {
        self.vars.get(name).copied()
    }
}

/// `W x + b`
pub fn linear(tape: &mut Tape, w: Var, b: Option<Var>, x: Var) -> Result<Var> {
    let y = tape.matvec(w, x)?;
    match b {
        Some(b) => tape.add(y, b),
        None => Ok(y),
    }
}

/// Standard GRU cell:
/// `z = σ(W_z x + U_z h + b_z)`, `r = σ(W_r x + U_r h + b_r)`,
/// `n = tanh(W_n x + b_n + r ⊙ (U_n h + b_hn))`, `h' = (1 - z) ⊙ n + z ⊙ h`.
pub fn gru(tape: &mut Tape, pv: &ParamVars, names: &GruNames, input: Var, hidden: Var) -> Result<Var> {
    let gate = |tape: &mut Tape, w: &str, u: &str, b: &str| -> Result<Var> {
        let wx = tape.matvec(pv.get(w), input)?;
        let uh = tape.matvec(pv.get(u), hidden)?;
        let s = tape.add(wx, uh)?;
        let s = tape.add(s, pv.get(b))?;
        tape.sigmoid(s)
    };
    let z = gate(tape, &names.wz, &names.uz, &names.bz)?;
    let r = gate(tape, &names.wr, &names.ur, &names.br)?;
    let wx = linear(tape, pv.get(&names.wn), Some(pv.get(&names.bn)), input)?;
    let uh = linear(tape, pv.get(&names.un), Some(pv.get(&names.bhn)), hidden)?;
    let ruh = tape.mul(r, uh)?;
    let pre = tape.add(wx, ruh)?;
    let n = tape.tanh(pre)?;
    let diff = tape.sub(hidden, n)?;
    let zd = tape.mul(z, diff)?;
    tape.add(n, zd)
}

/// `h̃ = tanh(W h_prev + U x)`
pub fn pre_recurrent(tape: &mut Tape, pv: &ParamVars, h_prev: Var, x: Var) -> Result<Var> {
    let wh = tape.matvec(pv.get("pre.w"), h_prev)?;
    let ux = tape.matvec(pv.get("pre.u"), x)?;
    let s = tape.add(wh, ux)?;
    tape.tanh(s)
}

/// `e = σ(φ_e · h̃)`, `r = σ(φ_r · h̃) · e`.
pub fn entity_and_reference_gates(tape: &mut Tape, pv: &ParamVars, h_tilde: Var) -> Result<(Var, Var)> {
    let le = tape.dot(pv.get("gate.phi_e"), h_tilde)?;
    let e = tape.sigmoid(le)?;
    let lr = tape.dot(pv.get("gate.phi_r"), h_tilde)?;
    let sr = tape.sigmoid(lr)?;
    let r = tape.mul(sr, e)?;
    Ok((e, r))
}

pub struct Attention {
    pub query: Var,
    pub alpha: Var,
}

/// Query network: two layers, tanh hidden, linear output.
pub fn query(tape: &mut Tape, pv: &ParamVars, h_tilde: Var) -> Result<Var> {
    let hidden = linear(tape, pv.get("query.w1"), Some(pv.get("query.b1")), h_tilde)?;
    let hidden = tape.tanh(hidden)?;
    linear(tape, pv.get("query.w2"), Some(pv.get("query.b2")), hidden)
}

/// Cell logits `k_i · q + b` compete with a NULL option of logit 0; the
/// cell shares of that softmax, scaled by `r`, are the attention weights.
pub fn memory_attention(tape: &mut Tape, pv: &ParamVars, h_tilde: Var, keys: &[Var], r: Var) -> Result<Attention> {
    let q = query(tape, pv, h_tilde)?;
    let bias = pv.get("attn.bias");
    let mut logits = Vec::with_capacity(keys.len() + 1);
    for &k in keys {
        let kq = tape.dot(k, q)?;
        logits.push(tape.add(kq, bias)?);
    }
    logits.push(tape.constant_scalar(0.0)?);
    let logits = tape.concat(&logits)?;
    let probs = tape.softmax(logits)?;
    let cells = tape.slice(probs, 0, keys.len())?;
    let alpha = tape.mul(r, cells)?;
    Ok(Attention { query: q, alpha })
}

pub struct WriteGates {
    pub u: Var,
    pub o: Var,
    pub copy: Var,
    pub overwrite_total: Var,
}

/// Slack tolerated on `e - Σu` before it counts as a broken invariant.
const OVERWRITE_SLACK: f64 = 1e-9;

/// How the overwrite mass is spread over cells.
#[derive(Clone, Copy, Debug)]
pub enum Selection<'a> {
    /// Gumbel-softmax with the given noise samples.
    Gumbel(&'a [f64]),
    /// Tempered softmax of `-s_prev` without noise.
    Softmax,
    /// All mass on the least salient cell, lowest index on ties. This is
    /// the zero-temperature limit and carries no gradient.
    Argmin,
}

/// `u = min(α, 2 s_prev)`, `õ = e - Σu`, `o = õ · GSM(-s_prev, τ)`,
/// `copy = 1 - u - o`. `noise` holds Gumbel samples; `None` is the
/// deterministic tempered softmax.
pub fn update_overwrite_gates(
    tape: &mut Tape,
    alpha: Var,
    s_prev: Var,
    e: Var,
    tau: f64,
    noise: Option<&[f64]>,
) -> Result<WriteGates> {
    let selection = match noise {
        Some(g) => Selection::Gumbel(g),
        None => Selection::Softmax,
    };
    write_gates(tape, alpha, s_prev, e, tau, selection)
}

pub fn write_gates(
    tape: &mut Tape,
    alpha: Var,
    s_prev: Var,
    e: Var,
    tau: f64,
    selection: Selection,
) -> Result<WriteGates> {
    let cap = tape.scale(s_prev, 2.0)?;
    let u = tape.min(alpha, cap)?;
    let updated = tape.sum(u)?;
    let remaining = tape.sub(e, updated)?;
    let raw = tape.scalar(remaining);
    if raw < -OVERWRITE_SLACK {
        return Err(Error::Invariant(format!("overwrite mass e - Σu = {raw} is negative")));
    }
    // rounding can leave -1e-17 here
    let overwrite_total = tape.clip(remaining, 0.0, 1.0)?;
    let choice = match selection {
        Selection::Gumbel(g) => {
            let neg_s = tape.neg(s_prev)?;
            tape.gumbel_softmax(neg_s, Some(g), tau)?
        }
        Selection::Softmax => {
            let neg_s = tape.neg(s_prev)?;
            tape.gumbel_softmax(neg_s, None, tau)?
        }
        Selection::Argmin => {
            let s = tape.data(s_prev);
            let mut best = 0;
            for (i, &v) in s.iter().enumerate() {
                if v < s[best] {
                    best = i;
                }
            }
            let mut one_hot = vec![0.0; s.len()];
            one_hot[best] = 1.0;
            tape.constant_vector(one_hot)?
        }
    };
    let o = tape.mul(overwrite_total, choice)?;
    let written = tape.add(u, o)?;
    let copy = tape.one_minus(written)?;
    let copy = tape.clip(copy, 0.0, 1.0)?;
    Ok(WriteGates {
        u,
        o,
        copy,
        overwrite_total,
    })
}

/// `λ = e γ_e + (1 - e) γ_n`, `s = λ · copy · s_prev + u + o`.
pub fn salience_step(
    tape: &mut Tape,
    s_prev: Var,
    gates: &WriteGates,
    e: Var,
    config: &ReaderConfig,
) -> Result<(Var, Var)> {
    let (ge, gn) = (config.gamma_entity(), config.gamma_nonentity());
    let lambda = tape.affine(e, ge - gn, gn)?;
    let kept = tape.mul(gates.copy, s_prev)?;
    let decayed = tape.mul(lambda, kept)?;
    let s = tape.add(decayed, gates.u)?;
    let s = tape.add(s, gates.o)?;
    Ok((lambda, s))
}

pub struct MemoryWrite {
    pub keys: Vec<Var>,
    pub values: Vec<Var>,
    pub key_candidate: Var,
    pub value_candidate: Var,
}

/// Key candidate network: `z = tanh(W1 h̃ + b1)`, `k̃ = z + tanh(W2 z + b2)`.
pub fn key_candidate(tape: &mut Tape, pv: &ParamVars, h_tilde: Var) -> Result<Var> {
    let z = linear(tape, pv.get("key.w1"), Some(pv.get("key.b1")), h_tilde)?;
    let z = tape.tanh(z)?;
    let inner = linear(tape, pv.get("key.w2"), Some(pv.get("key.b2")), z)?;
    let inner = tape.tanh(inner)?;
    tape.add(z, inner)
}

/// `ṽ = tanh(W h̃ + b)`
pub fn value_candidate(tape: &mut Tape, pv: &ParamVars, h_tilde: Var) -> Result<Var> {
    let v = linear(tape, pv.get("value.w"), Some(pv.get("value.b")), h_tilde)?;
    tape.tanh(v)
}

/// Per cell: `k ← u · GRU_k(k, k̃) + o · k̃ + copy · k`, same for values.
#[allow(clippy::too_many_arguments)]
pub fn memory_state_step(
    tape: &mut Tape,
    pv: &ParamVars,
    h_tilde: Var,
    keys: &[Var],
    values: &[Var],
    gates: &WriteGates,
) -> Result<MemoryWrite> {
    let kc = key_candidate(tape, pv, h_tilde)?;
    let vc = value_candidate(tape, pv, h_tilde)?;
    let gru_k = GruNames::new("gru_k");
    let gru_v = GruNames::new("gru_v");
    let mut new_keys = Vec::with_capacity(keys.len());
    let mut new_values = Vec::with_capacity(values.len());
    for (i, (&k, &v)) in keys.iter().zip(values).enumerate() {
        let u = tape.index(gates.u, i)?;
        let o = tape.index(gates.o, i)?;
        let c = tape.index(gates.copy, i)?;
        new_keys.push(blend(tape, pv, &gru_k, k, kc, u, o, c)?);
        new_values.push(blend(tape, pv, &gru_v, v, vc, u, o, c)?);
    }
    Ok(MemoryWrite {
        keys: new_keys,
        values: new_values,
        key_candidate: kc,
        value_candidate: vc,
    })
}

#[allow(clippy::too_many_arguments)]
fn blend(
    tape: &mut Tape,
    pv: &ParamVars,
    names: &GruNames,
    prev: Var,
    candidate: Var,
    u: Var,
    o: Var,
    copy: Var,
) -> Result<Var> {
    let updated = gru(tape, pv, names, candidate, prev)?;
    let a = tape.mul(u, updated)?;
    let b = tape.mul(o, candidate)?;
    let c = tape.mul(copy, prev)?;
    let ab = tape.add(a, b)?;
    tape.add(ab, c)
}

pub struct RecurrentOut {
    pub hidden: Var,
    pub c: Var,
    pub summary: Var,
}

/// `m = Σ s_i v_i`, `c = min(σ(w_c · h̃ + b_c), Σ s_i)`,
/// `h = GRU(x, (1 - c) h_prev + c m)`.
pub fn recurrent_step(
    tape: &mut Tape,
    pv: &ParamVars,
    h_prev: Var,
    x: Var,
    values: &[Var],
    salience: Var,
    h_tilde: Var,
) -> Result<RecurrentOut> {
    let mut summary: Option<Var> = None;
    for (i, &v) in values.iter().enumerate() {
        let s = tape.index(salience, i)?;
        let term = tape.mul(s, v)?;
        summary = Some(match summary {
            Some(acc) => tape.add(acc, term)?,
            None => term,
        });
    }
    let mut m = summary.ok_or_else(|| Error::Contract("memory has no cells".into()))?;
    if let Some(proj) = pv.try_get(MEM_PROJ) {
        m = tape.matvec(proj, m)?;
    }
    let logit = tape.dot(pv.get("gate.w_c"), h_tilde)?;
    let logit = tape.add(logit, pv.get("gate.b_c"))?;
    let importance = tape.sigmoid(logit)?;
    let total = tape.sum(salience)?;
    let c = tape.min(importance, total)?;
    let delta = tape.sub(m, h_prev)?;
    let shift = tape.mul(c, delta)?;
    let mixed = tape.add(h_prev, shift)?;
    let hidden = gru(tape, pv, &GruNames::new("gru"), x, mixed)?;
    Ok(RecurrentOut { hidden, c, summary: m })
}
