use super::DebugError;
use crate::qasm::{CircuitIR, Op};
use crate::sim::{shot_rng, EngineConfig, Machine};
use crate::state::GateMatrix;
use std::collections::BTreeMap;

/// One step of a session's history.
#[derive(Debug, Clone)]
pub enum Action {
    Op(Op),
    Gate { gate: GateMatrix, targets: Vec<usize> },
}

impl Action {
    fn is_unitary(&self) -> bool {
        match self {
            Action::Op(op) => op.is_unitary(),
            Action::Gate { .. } => true,
        }
    }
}

/// Re-executes a recorded history from `|0...0>` once per shot, so that
/// sampled evidence comes from fresh preparations instead of the live state.
pub(crate) struct Replay<'a> {
    pub ir: &'a CircuitIR,
    pub actions: &'a [Action],
    pub config: &'a EngineConfig,
}

impl Replay<'_> {
    fn apply(machine: &mut Machine, action: &Action, rng: &mut rand_chacha::ChaCha8Rng, index: usize) -> Result<(), DebugError> {
        match action {
            Action::Op(op) => {
                machine.apply(op, rng)?;
            }
            Action::Gate { gate, targets } => machine.backend.apply_gate(gate, targets)?,
        }
        machine.check_norm(index)?;
        Ok(())
    }

    /// Per shot: replay, apply `rotations`, then measure `measure`. Keys are
    /// the selected `clbits` followed by the measured bits.
    pub fn sample(
        &self,
        rotations: &[Op],
        measure: &[usize],
        clbits: &[usize],
        shots: u64,
        seed: u64,
    ) -> Result<BTreeMap<String, u64>, DebugError> {
        let mut machine = Machine::new(self.ir, self.config)?;
        let split = self
            .actions
            .iter()
            .position(|a| !a.is_unitary())
            .unwrap_or(self.actions.len());
        let mut unused = shot_rng(seed, u64::MAX);
        for (i, a) in self.actions[..split].iter().enumerate() {
            Self::apply(&mut machine, a, &mut unused, i)?;
        }
        let prepared = machine.backend.state().clone();
        let mut counts = BTreeMap::new();
        for shot in 0..shots {
            machine.backend.set_state(prepared.clone());
            machine.clbits.iter_mut().for_each(|b| *b = 0);
            let mut rng = shot_rng(seed, shot);
            for (i, a) in self.actions.iter().enumerate().skip(split) {
                Self::apply(&mut machine, a, &mut rng, i)?;
            }
            for op in rotations {
                machine.apply(op, &mut rng)?;
            }
            let mut key: String = clbits
                .iter()
                .map(|&c| if machine.clbits[c] == 1 { '1' } else { '0' })
                .collect();
            for &q in measure {
                key.push(if machine.backend.measure(q, &mut rng)? == 1 { '1' } else { '0' });
            }
            *counts.entry(key).or_insert(0) += 1;
        }
        Ok(counts)
    }
}
