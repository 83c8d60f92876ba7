use super::stats::{compare_samples, DistributionVerdict, Verdict, DEFAULT_ALPHA};
use super::HarnessError;
use crate::qasm::CircuitIR;
use crate::sim::{execute, EngineConfig, EngineInfo, RunResult};
use crate::state::{equal_up_to_global_phase, inner_product, STATE_TOL};
use serde::Serialize;
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EngineRun {
    pub engine: EngineInfo,
    pub counts: BTreeMap<String, u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairComparison {
    pub a: usize,
    pub b: usize,
    pub identical_counts: bool,
    pub distribution: DistributionVerdict,
    /// `|<a|b>|` of the final states, for measurement-free programs.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub state_overlap: Option<f64>,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossEngineReport {
    pub verdict: Verdict,
    pub shots: u64,
    pub runs: Vec<EngineRun>,
    pub pairs: Vec<PairComparison>,
    /// Description of the first failing pair.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
}

/// Runs `ir` under every configuration and compares all pairs: a
/// two-sample chi-square test on the counts at `alpha = 0.01` and, when the
/// program has no measurement, the final states up to global phase.
pub fn cross_engine_verify(
    ir: &CircuitIR,
    configs: &[EngineConfig],
    shots: u64,
) -> Result<CrossEngineReport, HarnessError> {
    if configs.len() < 2 {
        return Err(HarnessError::OutOfRange("cross-engine verification needs at least two engines".into()));
    }
    let results: Vec<RunResult> = configs
        .iter()
        .map(|c| {
            let mut c = c.clone();
            c.shots = shots;
            execute(ir, &c)
        })
        .collect::<Result<_, _>>()?;
    let states = if ir.has_measurement() {
        None
    } else {
        let finals = configs
            .iter()
            .map(|c| {
                let mut c = c.clone();
                c.shots = 1;
                c.record_statevector = true;
                let snap = execute(ir, &c)?.final_state.expect("single shot records state");
                Ok(snap.to_state()?)
            })
            .collect::<Result<Vec<_>, HarnessError>>()?;
        Some(finals)
    };

    let mut pairs = Vec::new();
    let mut witness = None;
    for a in 0..configs.len() {
        for b in a + 1..configs.len() {
            let (ra, rb) = (&results[a], &results[b]);
            let distribution = compare_samples(&ra.counts, &rb.counts, DEFAULT_ALPHA)?;
            let mut pass = distribution.verdict == Verdict::Pass;
            let mut state_overlap = None;
            if let Some(states) = &states {
                state_overlap = Some(inner_product(&states[a], &states[b])?.norm());
                pass &= equal_up_to_global_phase(&states[a], &states[b], STATE_TOL)?;
            }
            let verdict = Verdict::from_bool(pass);
            if !pass && witness.is_none() {
                witness = Some(format!(
                    "{} (seed {}) vs {} (seed {}): p = {:.3e}, TVD = {:.4}{}",
                    ra.engine.method,
                    ra.engine.seed,
                    rb.engine.method,
                    rb.engine.seed,
                    distribution.p_value,
                    distribution.tvd,
                    state_overlap
                        .map(|o| format!(", |<a|b>| = {o:.6}"))
                        .unwrap_or_default()
                ));
            }
            pairs.push(PairComparison {
                a,
                b,
                identical_counts: ra.counts == rb.counts,
                distribution,
                state_overlap,
                verdict,
            });
        }
    }
    Ok(CrossEngineReport {
        verdict: Verdict::from_bool(witness.is_none()),
        shots,
        runs: results
            .into_iter()
            .map(|r| EngineRun {
                engine: r.engine,
                counts: r.counts,
            })
            .collect(),
        pairs,
        witness,
    })
}
