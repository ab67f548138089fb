//! Autocorrelators, lifetimes and the edge-versus-bulk diagnostic.
//!
//! The autocorrelator of qubit `k` is
//! `Z_k(t) = min_{0 <= 2nT <= t} |<Z_k(0)> <Z_k(2nT)>|`, a running minimum
//! sampled at even periods only.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::evolution::{FloquetStepPlan, Workspace};
use crate::state::StateVector;

/// Default lifetime threshold on `Z_k`.
pub const LIFETIME_THRESHOLD: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AutocorrelatorTrace {
    pub qubit: usize,
    /// Even period counts `0, 2, 4, ...`; multiply by `T` for time.
    pub sample_periods: Vec<u64>,
    /// Raw `<Z_k>` at each sample.
    pub expectations: Vec<f64>,
    /// Running minimum `Z_k` at each sample.
    pub values: Vec<f64>,
    pub initial_expectation: f64,
    pub period: f64,
}

impl AutocorrelatorTrace {
    /// Start a trace from `<Z_k(0)>`.
    pub fn new(qubit: usize, initial_expectation: f64, period: f64) -> Self {
        AutocorrelatorTrace {
            qubit,
            sample_periods: vec![0],
            expectations: vec![initial_expectation],
            values: vec![initial_expectation.abs() * initial_expectation.abs()],
            initial_expectation,
            period,
        }
    }

    /// Zero initial expectation makes the trace identically zero.
    pub fn is_degenerate(&self) -> bool {
        self.initial_expectation == 0.0
    }

    pub fn push(&mut self, period_count: u64, expectation: f64) {
        let current = (self.initial_expectation * expectation).abs();
        let last = *self.values.last().expect("trace starts non-empty");
        self.sample_periods.push(period_count);
        self.expectations.push(expectation);
        self.values.push(current.min(last));
    }

    /// `Z_k` at the final sample.
    pub fn final_value(&self) -> f64 {
        *self.values.last().expect("trace starts non-empty")
    }

    pub fn horizon(&self) -> u64 {
        *self.sample_periods.last().expect("trace starts non-empty")
    }

    /// Sample times `2nT` in units of the drive's time.
    pub fn sample_times(&self) -> Vec<f64> {
        self.sample_periods.iter().map(|&p| p as f64 * self.period).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Lifetime {
    /// First even period count with `Z_k` below threshold.
    Periods(u64),
    /// Never dropped within the simulated horizon.
    Unbounded,
}

impl Lifetime {
    pub fn periods(self) -> Option<u64> {
        match self {
            Lifetime::Periods(p) => Some(p),
            Lifetime::Unbounded => None,
        }
    }
}

/// Evolve `initial` for `n_periods` and record the autocorrelator of each
/// qubit in `qubits` at every even period.
pub fn record_trace(
    initial: &StateVector,
    plan: &FloquetStepPlan,
    qubits: &[usize],
    n_periods: u64,
) -> Result<Vec<AutocorrelatorTrace>> {
    if n_periods < 2 || !n_periods.is_multiple_of(2) {
        return Err(Error::invalid(format!(
            "trace length must be an even number of periods >= 2, got {n_periods}"
        )));
    }
    let z0 = initial.sigma_z_all();
    let mut traces = qubits
        .iter()
        .map(|&k| {
            if k == 0 || k > initial.n_qubits() {
                return Err(Error::invalid(format!("qubit {k} out of range")));
            }
            Ok(AutocorrelatorTrace::new(k, z0[k - 1], plan.period()))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut state = initial.clone();
    let mut ws = Workspace::new();
    for p in 1..=n_periods {
        ws.apply_period(&mut state, plan)?;
        if p % 2 == 0 {
            let z = state.sigma_z_all();
            for trace in &mut traces {
                trace.push(p, z[trace.qubit - 1]);
            }
        }
    }
    Ok(traces)
}

/// Earliest sample with `Z_k < threshold`.
pub fn lifetime(trace: &AutocorrelatorTrace, threshold: f64) -> Lifetime {
    trace
        .values
        .iter()
        .zip(&trace.sample_periods)
        .find(|(v, _)| **v < threshold)
        .map_or(Lifetime::Unbounded, |(_, &p)| Lifetime::Periods(p))
}

/// Evolve until `Z_k` of every listed qubit falls below `threshold` or the
/// horizon is reached, without storing the trace. Returns one lifetime per
/// qubit.
pub fn first_passage(
    initial: &StateVector,
    plan: &FloquetStepPlan,
    qubits: &[usize],
    threshold: f64,
    horizon: u64,
) -> Result<Vec<Lifetime>> {
    let z0 = initial.sigma_z_all();
    let mut out: Vec<Lifetime> = qubits
        .iter()
        .map(|&k| {
            if k == 0 || k > initial.n_qubits() {
                return Err(Error::invalid(format!("qubit {k} out of range")));
            }
            Ok(if z0[k - 1].abs() * z0[k - 1].abs() < threshold {
                Lifetime::Periods(0)
            } else {
                Lifetime::Unbounded
            })
        })
        .collect::<Result<_>>()?;
    let mut pending = out.iter().filter(|l| matches!(l, Lifetime::Unbounded)).count();
    let mut state = initial.clone();
    let mut ws = Workspace::new();
    let mut p = 0;
    while pending > 0 && p < horizon {
        ws.apply_period(&mut state, plan)?;
        p += 1;
        if p % 2 == 0 {
            for (slot, &k) in out.iter_mut().zip(qubits) {
                if matches!(slot, Lifetime::Unbounded) {
                    let z = state.sigma_z_expectation(k)?;
                    if (z0[k - 1] * z).abs() < threshold {
                        *slot = Lifetime::Periods(p);
                        pending -= 1;
                    }
                }
            }
        }
    }
    Ok(out)
}

/// `Z_edge - Z_bulk` at the common horizon of the two traces.
pub fn fspt_diagnostic(edge: &AutocorrelatorTrace, bulk: &AutocorrelatorTrace) -> Result<f64> {
    if edge.sample_periods != bulk.sample_periods {
        return Err(Error::invalid(format!(
            "edge trace ends at period {} but bulk trace at {}",
            edge.horizon(),
            bulk.horizon()
        )));
    }
    Ok(edge.final_value() - bulk.final_value())
}

/// One row of a per-period trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRow {
    pub period: u64,
    pub time: f64,
    pub qubit: usize,
    pub expectation: f64,
    /// `Z_k` over the even periods up to and including this one.
    pub running_min_z: f64,
}

/// Like [`record_trace`] but emits a row at every period, odd ones
/// included, so the period-doubled oscillation of `<Z_k>` is visible.
pub fn period_trace(
    initial: &StateVector,
    plan: &FloquetStepPlan,
    qubits: &[usize],
    n_periods: u64,
) -> Result<Vec<TraceRow>> {
    let n = initial.n_qubits();
    if let Some(&k) = qubits.iter().find(|&&k| k == 0 || k > n) {
        return Err(Error::invalid(format!("qubit {k} out of range")));
    }
    let z0 = initial.sigma_z_all();
    let mut running: Vec<f64> = z0.iter().map(|z| z * z).collect();
    let mut rows = Vec::with_capacity((n_periods as usize + 1) * qubits.len());
    let mut emit = |p: u64, z: &[f64], running: &[f64]| {
        for &k in qubits {
            rows.push(TraceRow {
                period: p,
                time: p as f64 * plan.period(),
                qubit: k,
                expectation: z[k - 1],
                running_min_z: running[k - 1],
            });
        }
    };
    emit(0, &z0, &running);
    let mut state = initial.clone();
    let mut ws = Workspace::new();
    for p in 1..=n_periods {
        ws.apply_period(&mut state, plan)?;
        let z = state.sigma_z_all();
        if p % 2 == 0 {
            for k in 0..n {
                running[k] = running[k].min((z0[k] * z[k]).abs());
            }
        }
        emit(p, &z, &running);
    }
    Ok(rows)
}

/// Bulk qubit for the L = 4 figures: `ceil(L/2) + 1`, i.e. qubit 3.
pub fn figure_bulk_qubit(n_qubits: usize) -> usize {
    (n_qubits.div_ceil(2) + 1).min(n_qubits)
}

/// Middle qubit `ceil(L/2)` used for lifetime scaling.
pub fn middle_qubit(n_qubits: usize) -> usize {
    n_qubits.div_ceil(2).max(1)
}
