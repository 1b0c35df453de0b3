use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::ReaderConfig;
use super::params::{ModelParams, EMBED};
use super::state::{GateRecord, MemoryState};
use super::step::{
    entity_and_reference_gates, memory_attention, memory_state_step, pre_recurrent, recurrent_step, salience_step,
    write_gates, ParamVars, Selection,
};
use crate::autodiff::{Tape, Var};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// Dropout and Gumbel noise drawn from the seeded stream.
    Train,
    /// No dropout; overwrites go to the least salient cell.
    Eval,
}

/// Tape handles produced for one token.
#[derive(Clone, Copy, Debug)]
pub struct StepVars {
    pub e: Var,
    pub u: Var,
    pub o: Var,
    /// Hidden state carried to the next token.
    pub hidden: Var,
    /// Hidden state after output dropout; feeds the language-model head.
    pub output: Var,
}

pub struct TapeRead {
    pub steps: Vec<StepVars>,
    pub records: Vec<GateRecord>,
    pub final_state: MemoryState,
}

/// Plain-value result of reading a sequence.
#[derive(Clone, Debug)]
pub struct ReadOutput {
    pub hidden: Vec<Vec<f64>>,
    pub records: Vec<GateRecord>,
    pub final_state: MemoryState,
}

/// Noise for one sequence. All draws come from one stream in a fixed order,
/// so a seed pins both dropout masks and Gumbel samples.
struct NoiseStream {
    rng: ChaCha8Rng,
    dropout: f64,
}

impl NoiseStream {
    fn mask(&mut self, len: usize) -> Option<Vec<f64>> {
        if self.dropout <= 0.0 {
            return None;
        }
        let keep = 1.0 - self.dropout;
        let scale = 1.0 / keep;
        Some(
            (0..len)
                .map(|_| if self.rng.gen::<f64>() < keep { scale } else { 0.0 })
                .collect(),
        )
    }

    fn gumbel(&mut self, len: usize) -> Vec<f64> {
        (0..len)
            .map(|_| {
                let u: f64 = self.rng.gen_range(f64::EPSILON..1.0);
                -(-u.ln()).ln()
            })
            .collect()
    }
}

fn dropout(tape: &mut Tape, x: Var, mask: Option<Vec<f64>>) -> Result<Var> {
    match mask {
        Some(m) => tape.mul_const(x, &m),
        None => Ok(x),
    }
}

fn check_state(config: &ReaderConfig, init: &MemoryState) -> Result<()> {
    let ok = init.cells() == config.cells
        && init.keys.len() == config.cells
        && init.values.len() == config.cells
        && init.keys.iter().all(|k| k.len() == config.key_dim)
        && init.values.iter().all(|v| v.len() == config.value_dim)
        && init.hidden.len() == config.hidden_dim;
    if ok {
        Ok(())
    } else {
        Err(Error::dim("read_sequence", "initial memory state does not match the configuration"))
    }
}

fn at_token(token_index: usize) -> impl Fn(Error) -> Error {
    move |err| match err {
        Error::NonFinite { op } => Error::Numeric {
            token_index,
            detail: format!("non-finite value from {op}"),
        },
        other => other,
    }
}

/// Reads `tokens` onto an existing tape, starting from `init`.
#[allow(clippy::too_many_arguments)]
pub fn read_on_tape(
    tape: &mut Tape,
    pv: &ParamVars,
    config: &ReaderConfig,
    tokens: &[usize],
    mode: Mode,
    seed: u64,
    init: &MemoryState,
) -> Result<TapeRead> {
    config.validate()?;
    check_state(config, init)?;
    if tokens.is_empty() {
        return Err(Error::Contract("cannot read an empty sequence".into()));
    }
    let vocab = tape.value(pv.get(EMBED)).shape()[0];
    if let Some(&bad) = tokens.iter().find(|&&t| t >= vocab) {
        return Err(Error::Contract(format!("token id {bad} outside vocabulary of {vocab}")));
    }

    let mut noise = NoiseStream {
        rng: ChaCha8Rng::seed_from_u64(seed),
        dropout: if mode == Mode::Train { config.dropout } else { 0.0 },
    };

    let mut keys = Vec::with_capacity(config.cells);
    let mut values = Vec::with_capacity(config.cells);
    for i in 0..config.cells {
        keys.push(tape.constant_vector(init.keys[i].clone())?);
        values.push(tape.constant_vector(init.values[i].clone())?);
    }
    let mut salience = tape.constant_vector(init.salience.clone())?;
    let mut hidden = tape.constant_vector(init.hidden.clone())?;

    let embed = pv.get(EMBED);
    let mut steps = Vec::with_capacity(tokens.len());
    let mut records = Vec::with_capacity(tokens.len());

    for (t, &token) in tokens.iter().enumerate() {
        let mut token_step = || -> Result<(StepVars, GateRecord, Vec<Var>, Vec<Var>, Var)> {
            let x = tape.row(embed, token)?;
            let x = dropout(tape, x, noise.mask(config.embed_dim))?;
            let h_tilde = pre_recurrent(tape, pv, hidden, x)?;
            let h_tilde = dropout(tape, h_tilde, noise.mask(config.hidden_dim))?;

            let (e, r) = entity_and_reference_gates(tape, pv, h_tilde)?;
            let attention = memory_attention(tape, pv, h_tilde, &keys, r)?;
            let gumbel = match mode {
                Mode::Train => Some(noise.gumbel(config.cells)),
                Mode::Eval => None,
            };
            let selection = gumbel.as_deref().map_or(Selection::Argmin, Selection::Gumbel);
            let gates = write_gates(tape, attention.alpha, salience, e, config.tau, selection)?;
            let (lambda, new_salience) = salience_step(tape, salience, &gates, e, config)?;
            let write = memory_state_step(tape, pv, h_tilde, &keys, &values, &gates)?;
            let rec = recurrent_step(tape, pv, hidden, x, &write.values, new_salience, h_tilde)?;
            let output = dropout(tape, rec.hidden, noise.mask(config.hidden_dim))?;

            let record = GateRecord {
                e: tape.scalar(e),
                r: tape.scalar(r),
                c: tape.scalar(rec.c),
                lambda: tape.scalar(lambda),
                m: tape.data(rec.summary).to_vec(),
                query: tape.data(attention.query).to_vec(),
                key_candidate: tape.data(write.key_candidate).to_vec(),
                value_candidate: tape.data(write.value_candidate).to_vec(),
                alpha: tape.data(attention.alpha).to_vec(),
                u: tape.data(gates.u).to_vec(),
                o: tape.data(gates.o).to_vec(),
                copy: tape.data(gates.copy).to_vec(),
                salience: tape.data(new_salience).to_vec(),
            };
            let vars = StepVars {
                e,
                u: gates.u,
                o: gates.o,
                hidden: rec.hidden,
                output,
            };
            Ok((vars, record, write.keys, write.values, new_salience))
        };
        let (vars, record, new_keys, new_values, new_salience) = token_step().map_err(at_token(t))?;
        keys = new_keys;
        values = new_values;
        salience = new_salience;
        hidden = vars.hidden;
        steps.push(vars);
        records.push(record);
    }

    let final_state = MemoryState {
        keys: keys.iter().map(|&k| tape.data(k).to_vec()).collect(),
        values: values.iter().map(|&v| tape.data(v).to_vec()).collect(),
        salience: tape.data(salience).to_vec(),
        hidden: tape.data(hidden).to_vec(),
    };
    Ok(TapeRead {
        steps,
        records,
        final_state,
    })
}

/// Reads a token-id sequence from zero memory.
pub fn read_sequence(
    params: &ModelParams,
    config: &ReaderConfig,
    tokens: &[usize],
    mode: Mode,
    seed: u64,
) -> Result<ReadOutput> {
    read_sequence_from(params, config, tokens, mode, seed, &MemoryState::zeros(config))
}

pub fn read_sequence_from(
    params: &ModelParams,
    config: &ReaderConfig,
    tokens: &[usize],
    mode: Mode,
    seed: u64,
    init: &MemoryState,
) -> Result<ReadOutput> {
    let mut tape = Tape::new();
    let pv = ParamVars::register(&mut tape, params);
    let read = read_on_tape(&mut tape, &pv, config, tokens, mode, seed, init)?;
    Ok(ReadOutput {
        hidden: read.steps.iter().map(|s| tape.data(s.hidden).to_vec()).collect(),
        records: read.records,
        final_state: read.final_state,
    })
}
