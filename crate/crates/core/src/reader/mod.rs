//! The referential reader: a recurrent unit that drives a fixed-size
//! key/value/salience memory through update and overwrite gates.

mod config;
mod params;
mod sequence;
mod state;
pub mod step;

#[cfg(test)]
mod tests;

pub use config::{decay_rate, ReaderConfig};
pub use params::{expected_shapes, GruNames, ModelParams, EMBED, MEM_PROJ, OUTPUT};
pub use sequence::{read_on_tape, read_sequence, read_sequence_from, Mode, ReadOutput, StepVars, TapeRead};
pub use state::{CellTrace, GateRecord, MemoryState, TraceRecord};
pub use step::ParamVars;
