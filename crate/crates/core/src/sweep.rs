//! Disorder-ensemble campaigns over parameter grids.
//!
//! Every (cell, realization) pair is an independent work item. Realizations
//! are drawn from [`realization_rng`] keyed by the campaign seed, the cell's
//! disorder index and the realization index, so results do not depend on
//! the worker count or on completion order. Cells that differ only in the
//! initial state or the H2I pulse count share their disorder draws, which
//! makes those panels directly comparable.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::evolution::{compile_step, Workspace};
use crate::model::{realization_rng, sample_realization, FloquetDriveSpec, ModelKind};
use crate::observables::{figure_bulk_qubit, LIFETIME_THRESHOLD};
use crate::parallel::Execution;
use crate::state::{basis_label, StateVector, MAX_QUBITS};

/// Default limit on `sum over cells of realizations * states * periods * cost(L)`,
/// where `cost(L)` is `2^L` for diagonal steps and `4^L` for dense ones.
pub const DEFAULT_WORK_BUDGET: f64 = 1e13;

/// A drive parameter that can label a grid axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Parameter {
    Epsilon,
    J0,
    SigmaJ,
    H0,
    SigmaH,
    T2,
    /// `0` selects the Ising model, `n > 0` the Heisenberg model with `n` pulses.
    H2iPulses,
    L,
    InitialState,
}

impl Parameter {
    pub const ALL: [Parameter; 9] = [
        Parameter::Epsilon,
        Parameter::J0,
        Parameter::SigmaJ,
        Parameter::H0,
        Parameter::SigmaH,
        Parameter::T2,
        Parameter::H2iPulses,
        Parameter::L,
        Parameter::InitialState,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Parameter::Epsilon => "epsilon",
            Parameter::J0 => "J0",
            Parameter::SigmaJ => "sigma_J",
            Parameter::H0 => "h0",
            Parameter::SigmaH => "sigma_h",
            Parameter::T2 => "t2",
            Parameter::H2iPulses => "h2i_pulses",
            Parameter::L => "L",
            Parameter::InitialState => "initial_state",
        }
    }

    fn is_integer(self) -> bool {
        matches!(self, Parameter::H2iPulses | Parameter::L)
    }

    /// Axes that change the protocol but not the disorder draw.
    fn shares_disorder(self) -> bool {
        matches!(self, Parameter::H2iPulses | Parameter::InitialState)
    }
}

impl fmt::Display for Parameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Parameter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Parameter::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Parameter::ALL.iter().map(|p| p.name()).collect();
                Error::config(format!(
                    "unknown axis {s:?}, expected one of {}",
                    names.join(", ")
                ))
            })
    }
}

impl Serialize for Parameter {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum AxisValue {
    Number(f64),
    Text(String),
}

impl AxisValue {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            AxisValue::Number(x) => Some(*x),
            AxisValue::Text(_) => None,
        }
    }
}

/// Float formatting used in every record file: 17 significant digits.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Text form of a coordinate as written to record files.
pub fn format_coordinate(parameter: Parameter, value: &AxisValue) -> String {
    match value {
        AxisValue::Number(x) if parameter.is_integer() => format!("{}", *x as i64),
        AxisValue::Number(x) => format_float(*x),
        AxisValue::Text(s) => s.clone(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepAxis {
    pub parameter: Parameter,
    pub values: Vec<AxisValue>,
}

impl SweepAxis {
    pub fn numeric(parameter: Parameter, values: Vec<f64>) -> Result<Self> {
        let axis = SweepAxis {
            parameter,
            values: values.into_iter().map(AxisValue::Number).collect(),
        };
        axis.validate()?;
        Ok(axis)
    }

    /// `count` evenly spaced values from `min` to `max` inclusive.
    pub fn linear(parameter: Parameter, min: f64, max: f64, count: usize) -> Result<Self> {
        Self::numeric(parameter, grid(min, max, count, false)?)
    }

    /// `count` log-spaced values from `min` to `max` inclusive; both must be positive.
    pub fn logarithmic(parameter: Parameter, min: f64, max: f64, count: usize) -> Result<Self> {
        Self::numeric(parameter, grid(min, max, count, true)?)
    }

    /// Initial-state axis; the entry `"all"` expands to every basis string of length `n_qubits`.
    pub fn initial_states(values: &[String], n_qubits: usize) -> Result<Self> {
        let mut out = Vec::new();
        for v in values {
            if v == "all" {
                check_enumerable(n_qubits)?;
                out.extend((0..1usize << n_qubits).map(|i| AxisValue::Text(basis_label(i, n_qubits))));
            } else {
                out.push(AxisValue::Text(v.clone()));
            }
        }
        let axis = SweepAxis {
            parameter: Parameter::InitialState,
            values: out,
        };
        axis.validate()?;
        Ok(axis)
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::config(format!("axis {} has no values", self.parameter)));
        }
        for v in &self.values {
            match (self.parameter, v) {
                (Parameter::InitialState, AxisValue::Text(s)) => {
                    if s.is_empty() || !s.chars().all(|c| c == '0' || c == '1') {
                        return Err(Error::config(format!(
                            "initial_state axis entry {s:?} is not a bit string"
                        )));
                    }
                }
                (Parameter::InitialState, AxisValue::Number(x)) => {
                    return Err(Error::config(format!(
                        "initial_state axis needs bit strings, got {x}"
                    )));
                }
                (p, AxisValue::Text(s)) => {
                    return Err(Error::config(format!("axis {p} needs numbers, got {s:?}")));
                }
                (p, AxisValue::Number(x)) => {
                    if !x.is_finite() {
                        return Err(Error::config(format!("axis {p} has non-finite value {x}")));
                    }
                    if p.is_integer() && (x.fract() != 0.0 || *x < 0.0) {
                        return Err(Error::config(format!(
                            "axis {p} needs nonnegative integers, got {x}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

fn grid(min: f64, max: f64, count: usize, log: bool) -> Result<Vec<f64>> {
    if count == 0 || !min.is_finite() || !max.is_finite() {
        return Err(Error::config(format!(
            "grid needs finite bounds and count >= 1, got ({min}, {max}, {count})"
        )));
    }
    if log && !(min > 0.0 && max > 0.0) {
        return Err(Error::config(format!(
            "log grid needs positive bounds, got ({min}, {max})"
        )));
    }
    if count == 1 {
        return Ok(vec![min]);
    }
    let (a, b) = if log { (min.ln(), max.ln()) } else { (min, max) };
    Ok((0..count)
        .map(|i| {
            if i == count - 1 {
                return max;
            }
            let x = a + (b - a) * i as f64 / (count - 1) as f64;
            if log {
                x.exp()
            } else {
                x
            }
        })
        .collect())
}

fn check_enumerable(n_qubits: usize) -> Result<()> {
    if n_qubits == 0 || n_qubits > 16 {
        return Err(Error::Capacity {
            what: "chain length for basis-state enumeration".into(),
            requested: n_qubits as f64,
            limit: 16.0,
        });
    }
    Ok(())
}

/// Quantity recorded per realization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ObservableId {
    /// Autocorrelator of qubit `k` at the horizon.
    Z(usize),
    /// First even period with `Z_k < 0.1`; runs that never cross count as the horizon.
    Lifetime(usize),
    /// `Z_1 - Z_bulk` at the horizon, bulk being qubit `ceil(L/2) + 1`.
    Fspt,
}

impl ObservableId {
    fn qubits(self, n_qubits: usize) -> Vec<usize> {
        match self {
            ObservableId::Z(k) | ObservableId::Lifetime(k) => vec![k],
            ObservableId::Fspt => vec![1, figure_bulk_qubit(n_qubits)],
        }
    }
}

impl fmt::Display for ObservableId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ObservableId::Z(k) => write!(f, "Z_{k}"),
            ObservableId::Lifetime(k) => write!(f, "lifetime_{k}"),
            ObservableId::Fspt => f.write_str("fspt"),
        }
    }
}

impl FromStr for ObservableId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let qubit = |rest: &str| {
            rest.parse::<usize>()
                .ok()
                .filter(|&k| k >= 1)
                .ok_or_else(|| Error::config(format!("bad qubit index in observable {s:?}")))
        };
        if s == "fspt" {
            Ok(ObservableId::Fspt)
        } else if let Some(rest) = s.strip_prefix("Z_").or_else(|| s.strip_prefix("z_")) {
            Ok(ObservableId::Z(qubit(rest)?))
        } else if let Some(rest) = s.strip_prefix("lifetime_") {
            Ok(ObservableId::Lifetime(qubit(rest)?))
        } else {
            Err(Error::config(format!(
                "unknown observable {s:?}, expected Z_k, lifetime_k or fspt"
            )))
        }
    }
}

impl Serialize for ObservableId {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Which computational basis states each realization is evolved from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InitialStates {
    Fixed(String),
    /// Every basis string; the per-realization value is their average.
    All,
    /// `N` uniform random basis strings drawn from the realization's stream.
    Random(usize),
}

impl InitialStates {
    fn count(&self, n_qubits: usize) -> usize {
        match self {
            InitialStates::Fixed(_) => 1,
            InitialStates::All => 1 << n_qubits,
            InitialStates::Random(n) => *n,
        }
    }

    fn check(&self, n_qubits: usize) -> Result<()> {
        match self {
            InitialStates::Fixed(s) if s.len() != n_qubits => Err(Error::config(format!(
                "initial state {s:?} has length {} but L = {n_qubits}",
                s.len()
            ))),
            InitialStates::Fixed(s) => StateVector::basis_state(s).map(|_| ()),
            InitialStates::All => check_enumerable(n_qubits),
            InitialStates::Random(0) => Err(Error::config("random:N needs N >= 1")),
            InitialStates::Random(_) => Ok(()),
        }
    }

    /// Basis states for one realization; random picks consume `rng` after the disorder draw.
    pub fn draw<R: Rng + ?Sized>(&self, n_qubits: usize, rng: &mut R) -> Vec<StateVector> {
        match self {
            InitialStates::Fixed(s) => vec![StateVector::basis_state(s).expect("checked")],
            InitialStates::All => (0..1usize << n_qubits)
                .map(|i| StateVector::basis_index_state(n_qubits, i))
                .collect(),
            InitialStates::Random(n) => (0..*n)
                .map(|_| StateVector::basis_index_state(n_qubits, rng.random_range(0..1usize << n_qubits)))
                .collect(),
        }
    }
}

impl fmt::Display for InitialStates {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitialStates::Fixed(s) => f.write_str(s),
            InitialStates::All => f.write_str("all"),
            InitialStates::Random(n) => write!(f, "random:{n}"),
        }
    }
}

impl FromStr for InitialStates {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "all" {
            return Ok(InitialStates::All);
        }
        if let Some(n) = s.strip_prefix("random:") {
            return n
                .parse()
                .map(InitialStates::Random)
                .map_err(|_| Error::config(format!("bad state count in {s:?}")));
        }
        if !s.is_empty() && s.chars().all(|c| c == '0' || c == '1') {
            return Ok(InitialStates::Fixed(s.to_string()));
        }
        Err(Error::config(format!(
            "initial_state must be a bit string, \"all\" or \"random:N\", got {s:?}"
        )))
    }
}

/// Streaming mean and variance (Welford), mergeable across partial ensembles.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RunningStats {
    count: u64,
    mean: f64,
    m2: f64,
}

impl RunningStats {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    /// Combine with another partial ensemble (Chan et al. pairwise update).
    pub fn merge(&self, other: &RunningStats) -> RunningStats {
        if other.count == 0 {
            return *self;
        }
        if self.count == 0 {
            return *other;
        }
        let n = self.count + other.count;
        let delta = other.mean - self.mean;
        let mean = self.mean + delta * other.count as f64 / n as f64;
        let m2 = self.m2
            + other.m2
            + delta * delta * (self.count as f64 * other.count as f64) / n as f64;
        RunningStats { count: n, mean, m2 }
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance; zero for fewer than two samples.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    /// Standard error of the mean.
    pub fn stderr(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            (self.variance() / self.count as f64).sqrt()
        }
    }
}

impl FromIterator<f64> for RunningStats {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = RunningStats::new();
        for x in iter {
            s.push(x);
        }
        s
    }
}

/// One cell and observable of a campaign.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRecord {
    pub coordinates: Vec<(Parameter, AxisValue)>,
    pub observable: ObservableId,
    pub mean: f64,
    pub stderr: f64,
    pub n_realizations: u64,
    pub seed: u64,
}

/// A resolved grid point.
#[derive(Debug, Clone)]
pub struct Cell {
    pub index: usize,
    pub coordinates: Vec<(Parameter, AxisValue)>,
    pub spec: FloquetDriveSpec,
    pub initial: InitialStates,
    /// Index used in the seed schedule; shared by cells differing only in protocol axes.
    pub disorder_index: u64,
}

/// A fully specified ensemble campaign.
#[derive(Debug, Clone)]
pub struct Campaign {
    pub base: FloquetDriveSpec,
    pub initial: InitialStates,
    pub axes: Vec<SweepAxis>,
    pub observables: Vec<ObservableId>,
    /// Periods evolved per run; must be even.
    pub horizon: u64,
    pub n_realizations: u64,
    pub seed: u64,
    pub work_budget: f64,
}

impl Campaign {
    pub fn new(
        base: FloquetDriveSpec,
        initial: InitialStates,
        axes: Vec<SweepAxis>,
        observables: Vec<ObservableId>,
        horizon: u64,
        n_realizations: u64,
        seed: u64,
    ) -> Self {
        Campaign {
            base,
            initial,
            axes,
            observables,
            horizon,
            n_realizations,
            seed,
            work_budget: DEFAULT_WORK_BUDGET,
        }
    }

    pub fn axis_parameters(&self) -> Vec<Parameter> {
        self.axes.iter().map(|a| a.parameter).collect()
    }

    pub fn n_cells(&self) -> usize {
        self.axes.iter().map(|a| a.values.len()).product()
    }

    /// Resolve every grid point in row-major order (last axis fastest).
    pub fn cells(&self) -> Result<Vec<Cell>> {
        self.check_shape()?;
        let n_cells = self.n_cells();
        let mut cells = Vec::with_capacity(n_cells);
        for index in 0..n_cells {
            let mut rem = index;
            let mut picks = vec![0; self.axes.len()];
            for (a, axis) in self.axes.iter().enumerate().rev() {
                picks[a] = rem % axis.values.len();
                rem /= axis.values.len();
            }
            let mut spec = self.base.clone();
            let mut initial = self.initial.clone();
            let mut disorder_index = 0u64;
            let mut coordinates = Vec::with_capacity(self.axes.len());
            for (axis, &pick) in self.axes.iter().zip(&picks) {
                let value = &axis.values[pick];
                apply_coordinate(&mut spec, &mut initial, axis.parameter, value);
                if !axis.parameter.shares_disorder() {
                    disorder_index = disorder_index * axis.values.len() as u64 + pick as u64;
                }
                coordinates.push((axis.parameter, value.clone()));
            }
            let cell = Cell {
                index,
                coordinates,
                spec,
                initial,
                disorder_index,
            };
            self.check_cell(&cell)?;
            cells.push(cell);
        }
        Ok(cells)
    }

    fn check_shape(&self) -> Result<()> {
        if self.observables.is_empty() {
            return Err(Error::config("no observables requested"));
        }
        if self.n_realizations == 0 {
            return Err(Error::config("realizations must be >= 1"));
        }
        if self.horizon < 2 || !self.horizon.is_multiple_of(2) {
            return Err(Error::config(format!(
                "horizon must be an even number of periods >= 2, got {}",
                self.horizon
            )));
        }
        for (i, axis) in self.axes.iter().enumerate() {
            axis.validate()?;
            if self.axes[..i].iter().any(|a| a.parameter == axis.parameter) {
                return Err(Error::config(format!("axis {} given twice", axis.parameter)));
            }
        }
        Ok(())
    }

    fn check_cell(&self, cell: &Cell) -> Result<()> {
        let ctx = |e: Error| match e {
            Error::InvalidInput(m) | Error::Config(m) => {
                Error::config(format!("cell {}: {m}", describe(&cell.coordinates)))
            }
            other => other,
        };
        if cell.spec.n_qubits > MAX_QUBITS {
            return Err(Error::Capacity {
                what: "chain length".into(),
                requested: cell.spec.n_qubits as f64,
                limit: MAX_QUBITS as f64,
            });
        }
        cell.spec.validate().map_err(ctx)?;
        cell.initial.check(cell.spec.n_qubits).map_err(ctx)?;
        for obs in &self.observables {
            if obs.qubits(cell.spec.n_qubits).iter().any(|&k| k > cell.spec.n_qubits) {
                return Err(ctx(Error::config(format!(
                    "observable {obs} needs more than L = {} qubits",
                    cell.spec.n_qubits
                ))));
            }
        }
        Ok(())
    }

    /// Estimated amplitude updates for the whole campaign.
    pub fn work(&self) -> Result<f64> {
        Ok(self.cells()?.iter().map(|c| self.cell_work(c)).sum())
    }

    fn cell_work(&self, cell: &Cell) -> f64 {
        let dim = (1u64 << cell.spec.n_qubits) as f64;
        let per_period = match (cell.spec.model, cell.spec.h2i_pulses) {
            (ModelKind::Ising, _) => dim,
            (ModelKind::Heisenberg, _) => dim * dim,
        };
        self.n_realizations as f64
            * cell.initial.count(cell.spec.n_qubits) as f64
            * self.horizon as f64
            * per_period
    }

    fn check_budget(&self, cells: &[&Cell]) -> Result<()> {
        let work: f64 = cells.iter().map(|c| self.cell_work(c)).sum();
        if work > self.work_budget {
            return Err(Error::Capacity {
                what: format!(
                    "campaign work ({} cells x {} realizations x {} periods, weighted by states and 2^L)",
                    cells.len(),
                    self.n_realizations,
                    self.horizon
                ),
                requested: work,
                limit: self.work_budget,
            });
        }
        Ok(())
    }
}

fn describe(coords: &[(Parameter, AxisValue)]) -> String {
    if coords.is_empty() {
        return "(base)".into();
    }
    coords
        .iter()
        .map(|(p, v)| format!("{p}={}", format_coordinate(*p, v)))
        .collect::<Vec<_>>()
        .join(", ")
}

fn apply_coordinate(
    spec: &mut FloquetDriveSpec,
    initial: &mut InitialStates,
    parameter: Parameter,
    value: &AxisValue,
) {
    let x = value.as_f64().unwrap_or(f64::NAN);
    match parameter {
        Parameter::Epsilon => spec.epsilon = x,
        Parameter::J0 => spec.distribution.j0 = x,
        Parameter::SigmaJ => spec.distribution.sigma_j = x,
        Parameter::H0 => spec.distribution.h0 = x,
        Parameter::SigmaH => spec.distribution.sigma_h = x,
        Parameter::T2 => spec.t2 = x,
        Parameter::H2iPulses => {
            spec.h2i_pulses = x as u32;
            spec.model = if spec.h2i_pulses == 0 {
                ModelKind::Ising
            } else {
                ModelKind::Heisenberg
            };
        }
        Parameter::L => spec.n_qubits = x as usize,
        Parameter::InitialState => {
            if let AxisValue::Text(s) = value {
                *initial = InitialStates::Fixed(s.clone());
            }
        }
    }
}

/// Evolve one initial state for `horizon` periods and evaluate every
/// observable. Stops early once only lifetimes are pending and all have crossed.
fn evaluate(
    initial: &StateVector,
    plan: &crate::evolution::FloquetStepPlan,
    observables: &[ObservableId],
    horizon: u64,
    ws: &mut Workspace,
) -> Result<Vec<f64>> {
    let n = initial.n_qubits();
    let z0 = initial.sigma_z_all();
    let mut running: Vec<f64> = z0.iter().map(|z| z * z).collect();
    let mut crossed: Vec<Option<u64>> = running
        .iter()
        .map(|&v| (v < LIFETIME_THRESHOLD).then_some(0))
        .collect();
    let needs_full = observables
        .iter()
        .any(|o| !matches!(o, ObservableId::Lifetime(_)));
    let lifetime_qubits: Vec<usize> = observables
        .iter()
        .filter_map(|o| match o {
            ObservableId::Lifetime(k) => Some(*k),
            _ => None,
        })
        .collect();
    let mut state = initial.clone();
    let mut p = 0;
    while p < horizon {
        if !needs_full && lifetime_qubits.iter().all(|&k| crossed[k - 1].is_some()) {
            break;
        }
        ws.apply_period(&mut state, plan)?;
        p += 1;
        if p % 2 == 0 {
            for (k, z) in state.sigma_z_all().into_iter().enumerate() {
                let v = (z0[k] * z).abs();
                if v < running[k] {
                    running[k] = v;
                }
                if crossed[k].is_none() && running[k] < LIFETIME_THRESHOLD {
                    crossed[k] = Some(p);
                }
            }
        }
    }
    Ok(observables
        .iter()
        .map(|o| match *o {
            ObservableId::Z(k) => running[k - 1],
            ObservableId::Lifetime(k) => crossed[k - 1].unwrap_or(horizon) as f64,
            ObservableId::Fspt => running[0] - running[figure_bulk_qubit(n) - 1],
        })
        .collect())
}

/// Per-realization observable values for one cell, averaged over the
/// realization's initial states.
fn realization_values(campaign: &Campaign, cell: &Cell, realization: u64) -> Result<Vec<f64>> {
    let mut rng = realization_rng(campaign.seed, cell.disorder_index, realization);
    let disorder = sample_realization(&cell.spec.distribution, cell.spec.n_qubits, &mut rng);
    let states = cell.initial.draw(cell.spec.n_qubits, &mut rng);
    let plan = compile_step(&cell.spec, &disorder)?;
    let mut ws = Workspace::new();
    let mut acc = vec![0.0; campaign.observables.len()];
    for s in &states {
        for (a, v) in acc
            .iter_mut()
            .zip(evaluate(s, &plan, &campaign.observables, campaign.horizon, &mut ws)?)
        {
            *a += v;
        }
    }
    let n = states.len() as f64;
    Ok(acc.into_iter().map(|a| a / n).collect())
}

/// Run a campaign and return its records, cell-major in grid order.
pub fn run_campaign(campaign: &Campaign, exec: Execution) -> Result<Vec<SweepRecord>> {
    let mut out = Vec::new();
    run_campaign_streaming(campaign, exec, |_| false, |batch| {
        out.extend_from_slice(batch);
        Ok(())
    })?;
    Ok(out)
}

/// Run a campaign in batches of cells, handing each finished batch of
/// records to `sink` in grid order. Cells for which `skip` returns true
/// are not evaluated.
pub fn run_campaign_streaming<S, K>(
    campaign: &Campaign,
    exec: Execution,
    skip: K,
    mut sink: S,
) -> Result<()>
where
    S: FnMut(&[SweepRecord]) -> Result<()>,
    K: Fn(&Cell) -> bool,
{
    let cells = campaign.cells()?;
    let pending: Vec<&Cell> = cells.iter().filter(|c| !skip(c)).collect();
    campaign.check_budget(&pending)?;
    let per_cell = campaign.n_realizations as usize;
    let batch_cells = (4096 / per_cell).max(1);
    for batch in pending.chunks(batch_cells) {
        let values = exec.map(batch.len() * per_cell, |item| {
            realization_values(campaign, batch[item / per_cell], (item % per_cell) as u64)
        });
        let mut records = Vec::with_capacity(batch.len() * campaign.observables.len());
        for (c, cell) in batch.iter().enumerate() {
            let mut stats = vec![RunningStats::new(); campaign.observables.len()];
            for item in &values[c * per_cell..(c + 1) * per_cell] {
                let item = item.as_ref().map_err(clone_error)?;
                for (s, v) in stats.iter_mut().zip(item) {
                    s.push(*v);
                }
            }
            for (obs, s) in campaign.observables.iter().zip(&stats) {
                records.push(SweepRecord {
                    coordinates: cell.coordinates.clone(),
                    observable: *obs,
                    mean: s.mean(),
                    stderr: s.stderr(),
                    n_realizations: s.count(),
                    seed: campaign.seed,
                });
            }
        }
        sink(&records)?;
    }
    Ok(())
}

fn clone_error(e: &Error) -> Error {
    match e {
        Error::InvalidInput(m) => Error::InvalidInput(m.clone()),
        Error::Config(m) => Error::Config(m.clone()),
        Error::Capacity {
            what,
            requested,
            limit,
        } => Error::Capacity {
            what: what.clone(),
            requested: *requested,
            limit: *limit,
        },
        Error::Schema { path, message } => Error::Schema {
            path: path.clone(),
            message: message.clone(),
        },
        Error::Io { path, source } => Error::Io {
            path: path.clone(),
            source: std::io::Error::new(source.kind(), source.to_string()),
        },
    }
}
