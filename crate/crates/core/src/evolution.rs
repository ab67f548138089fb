//! One Floquet period `U_F = U_2 U_1`: the imperfect global pi-pulse followed
//! by the interaction segment.
//!
//! The interaction segment is compiled once per realization into a
//! [`FloquetStepPlan`] and reused for every period of the run.

use std::f64::consts::{FRAC_PI_2, TAU};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{
    self, heisenberg_hamiltonian, wrapped_ising_phase_table, DisorderRealization, FloquetDriveSpec,
    ModelKind,
};
use crate::state::{qubit_mask, StateVector};

pub type CMatrix = DMatrix<Complex64>;

#[derive(Debug, Clone)]
pub enum InteractionStep {
    /// Ising evolution as `exp(-i table_s)` on each basis state.
    DiagonalPhases {
        table: Vec<f64>,
        factors: Vec<Complex64>,
    },
    /// Dense `exp(-i H_H t2)`.
    DenseUnitary(CMatrix),
    /// `[P U_H(t2/n) P^dag U_H(t2/n)]^(n/2)` with `P = prod_{k odd} exp(+i pi/2 Z_k)`.
    H2IComposite {
        segment: CMatrix,
        /// Qubit labels receiving the z pi-pulses.
        pulse_qubits: Vec<usize>,
        pulses: u32,
        /// The whole bracket multiplied out once at compile time.
        composite: CMatrix,
    },
}

#[derive(Debug, Clone)]
pub struct FloquetStepPlan {
    n_qubits: usize,
    u1_angle: f64,
    u1_cos: f64,
    u1_sin: f64,
    interaction: InteractionStep,
    period: f64,
}

impl FloquetStepPlan {
    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    /// Per-qubit x rotation angle `(pi/2)(1 - epsilon)` of `U_1`.
    pub fn u1_angle(&self) -> f64 {
        self.u1_angle
    }

    pub fn interaction(&self) -> &InteractionStep {
        &self.interaction
    }

    /// `T = t1 + t2`.
    pub fn period(&self) -> f64 {
        self.period
    }

    /// Dense matrix of the interaction segment `U_2` (or its H2I replacement).
    pub fn interaction_unitary(&self) -> CMatrix {
        match &self.interaction {
            InteractionStep::DiagonalPhases { factors, .. } => {
                CMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(factors))
            }
            InteractionStep::DenseUnitary(u) => u.clone(),
            InteractionStep::H2IComposite { composite, .. } => composite.clone(),
        }
    }
}

/// `exp(-i H t)` for a real symmetric `H` via its eigendecomposition.
pub fn hermitian_exp(h: &DMatrix<f64>, t: f64) -> CMatrix {
    let eig = h.clone().symmetric_eigen();
    let v = eig.eigenvectors.map(|x| Complex64::new(x, 0.0));
    let mut scaled = v.clone();
    for (mut col, &lambda) in scaled.column_iter_mut().zip(eig.eigenvalues.iter()) {
        col *= Complex64::from_polar(1.0, -(lambda * t).rem_euclid(TAU));
    }
    scaled * v.transpose()
}

/// `exp(-i t (sum_n J_n sigma_n . sigma_{n+1} + sum_n h_n Z_n))`.
///
/// The mean field `hbar * sum_n Z_n` commutes with the exchange terms, so it
/// is split off and applied as exact wrapped diagonal phases; only the
/// residual `h_n - hbar` enters the eigendecomposition.
pub fn heisenberg_propagator(realization: &DisorderRealization, t: f64) -> Result<CMatrix> {
    let n = realization.n_qubits();
    model::check_dense_cap(n)?;
    let fields = realization.onsite_fields();
    let mean = fields.iter().sum::<f64>() / n as f64;
    let residual = DisorderRealization::new(
        realization.bond_couplings().to_vec(),
        fields.iter().map(|h| h - mean).collect(),
    )?;
    let mut u = hermitian_exp(&heisenberg_hamiltonian(&residual)?, t);
    let uniform = DisorderRealization::new(vec![0.0; n - 1], vec![mean; n])?;
    let phases = wrapped_ising_phase_table(&uniform, t);
    for (mut row, phi) in u.row_iter_mut().zip(phases) {
        row *= Complex64::from_polar(1.0, -phi);
    }
    Ok(u)
}

/// Odd-labelled qubits 1, 3, 5, ... that receive the H2I z pulses.
pub fn h2i_pulse_qubits(n_qubits: usize) -> Vec<usize> {
    (1..=n_qubits).step_by(2).collect()
}

/// Diagonal of `P = prod_{k in qubits} exp(+i (pi/2) Z_k)`.
fn pulse_diagonal(n_qubits: usize, qubits: &[usize]) -> Vec<Complex64> {
    (0..1usize << n_qubits)
        .map(|s| {
            qubits.iter().fold(Complex64::new(1.0, 0.0), |acc, &k| {
                let z = if s & qubit_mask(n_qubits, k) == 0 { 1.0 } else { -1.0 };
                acc * Complex64::from_polar(1.0, z * FRAC_PI_2)
            })
        })
        .collect()
}

fn matrix_power(base: &CMatrix, mut exp: u32) -> CMatrix {
    let mut result = CMatrix::identity(base.nrows(), base.ncols());
    let mut square = base.clone();
    while exp > 0 {
        if exp & 1 == 1 {
            result = &result * &square;
        }
        exp >>= 1;
        if exp > 0 {
            square = &square * &square;
        }
    }
    result
}

fn h2i_bracket(segment: &CMatrix, pulse: &[Complex64]) -> CMatrix {
    // P S P^dag has entries p_r S_rc conj(p_c).
    let mut conjugated = segment.clone();
    for ((r, c), x) in conjugated
        .iter_mut()
        .enumerate()
        .map(|(i, x)| ((i % segment.nrows(), i / segment.nrows()), x))
    {
        *x *= pulse[r] * pulse[c].conj();
    }
    conjugated * segment
}

/// Compile the per-period plan for one realization.
pub fn compile_step(spec: &FloquetDriveSpec, realization: &DisorderRealization) -> Result<FloquetStepPlan> {
    spec.validate()?;
    if realization.n_qubits() != spec.n_qubits {
        return Err(Error::invalid(format!(
            "realization has {} sites but the drive is for L = {}",
            realization.n_qubits(),
            spec.n_qubits
        )));
    }
    let interaction = match (spec.model, spec.h2i_pulses) {
        // z pulses commute with diagonal evolution, so Ising ignores them.
        (ModelKind::Ising, _) => {
            let table = wrapped_ising_phase_table(realization, spec.t2);
            let factors = table.iter().map(|&phi| Complex64::from_polar(1.0, -phi)).collect();
            InteractionStep::DiagonalPhases { table, factors }
        }
        (ModelKind::Heisenberg, 0) => {
            InteractionStep::DenseUnitary(heisenberg_propagator(realization, spec.t2)?)
        }
        (ModelKind::Heisenberg, pulses) => {
            let segment = heisenberg_propagator(realization, spec.t2 / pulses as f64)?;
            let pulse_qubits = h2i_pulse_qubits(spec.n_qubits);
            let pulse = pulse_diagonal(spec.n_qubits, &pulse_qubits);
            let composite = matrix_power(&h2i_bracket(&segment, &pulse), pulses / 2);
            InteractionStep::H2IComposite {
                segment,
                pulse_qubits,
                pulses,
                composite,
            }
        }
    };
    let u1_angle = FRAC_PI_2 * (1.0 - spec.epsilon);
    Ok(FloquetStepPlan {
        n_qubits: spec.n_qubits,
        u1_angle,
        u1_cos: u1_angle.cos(),
        u1_sin: u1_angle.sin(),
        interaction,
        period: spec.period(),
    })
}

fn dense_apply(matrix: &CMatrix, state: &mut StateVector, scratch: &mut Vec<Complex64>) {
    let x = state.amplitudes_mut();
    scratch.clear();
    scratch.resize(x.len(), Complex64::new(0.0, 0.0));
    for (col, &xj) in matrix.column_iter().zip(x.iter()) {
        for (y, &m) in scratch.iter_mut().zip(col.iter()) {
            *y += m * xj;
        }
    }
    x.copy_from_slice(scratch);
}

fn check_dims(state: &StateVector, plan: &FloquetStepPlan) -> Result<()> {
    if state.n_qubits() != plan.n_qubits {
        return Err(Error::invalid(format!(
            "state has {} qubits but the plan is for {}",
            state.n_qubits(),
            plan.n_qubits
        )));
    }
    Ok(())
}

fn apply_u1(state: &mut StateVector, plan: &FloquetStepPlan) {
    for k in 1..=plan.n_qubits {
        state.rotate_x_unchecked(k, plan.u1_cos, plan.u1_sin);
    }
}

/// Reusable per-worker evolution buffer.
#[derive(Debug, Default)]
pub struct Workspace {
    scratch: Vec<Complex64>,
}

impl Workspace {
    pub fn new() -> Self {
        Self::default()
    }

    /// Advance `state` by one period: pulse first, then interaction.
    pub fn apply_period(&mut self, state: &mut StateVector, plan: &FloquetStepPlan) -> Result<()> {
        check_dims(state, plan)?;
        apply_u1(state, plan);
        match &plan.interaction {
            InteractionStep::DiagonalPhases { factors, .. } => state.apply_diagonal_factors(factors),
            InteractionStep::DenseUnitary(u) => dense_apply(u, state, &mut self.scratch),
            InteractionStep::H2IComposite { composite, .. } => {
                dense_apply(composite, state, &mut self.scratch)
            }
        }
        Ok(())
    }

    /// Advance one period applying the H2I bracket pulse by pulse.
    pub fn apply_h2i_period(&mut self, state: &mut StateVector, plan: &FloquetStepPlan) -> Result<()> {
        check_dims(state, plan)?;
        let InteractionStep::H2IComposite {
            segment,
            pulse_qubits,
            pulses,
            ..
        } = &plan.interaction
        else {
            return Err(Error::invalid("plan has no H2I pulse sequence"));
        };
        apply_u1(state, plan);
        for _ in 0..pulses / 2 {
            dense_apply(segment, state, &mut self.scratch);
            for &k in pulse_qubits {
                state.apply_z_rotation(k, FRAC_PI_2)?;
            }
            dense_apply(segment, state, &mut self.scratch);
            for &k in pulse_qubits {
                state.apply_z_rotation(k, -FRAC_PI_2)?;
            }
        }
        Ok(())
    }
}

/// Convenience wrapper around [`Workspace::apply_period`].
pub fn apply_period(state: &mut StateVector, plan: &FloquetStepPlan) -> Result<()> {
    Workspace::new().apply_period(state, plan)
}

pub fn apply_h2i_period(state: &mut StateVector, plan: &FloquetStepPlan) -> Result<()> {
    Workspace::new().apply_h2i_period(state, plan)
}

/// Spectral norm `||a - b||_2`.
pub fn operator_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    (a - b).singular_values().max()
}

/// `||U~_2(n) - U_2^Ising||_2` for one realization: how far `n` H2I pulses
/// leave the Heisenberg segment from the Ising segment it emulates.
pub fn h2i_operator_error(realization: &DisorderRealization, t2: f64, pulses: u32) -> Result<f64> {
    let base = FloquetDriveSpec {
        n_qubits: realization.n_qubits(),
        epsilon: 0.0,
        t1: 1.0,
        t2,
        model: ModelKind::Heisenberg,
        h2i_pulses: pulses,
        distribution: model::DisorderDistribution::clean(),
    };
    let h2i = compile_step(&base, realization)?;
    let ising = compile_step(
        &FloquetDriveSpec {
            model: ModelKind::Ising,
            h2i_pulses: 0,
            ..base
        },
        realization,
    )?;
    Ok(operator_distance(&h2i.interaction_unitary(), &ising.interaction_unitary()))
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use approx::assert_abs_diff_eq;

    use super::*;
    use crate::model::{realization_rng, sample_realization, DisorderDistribution};

    fn spec(n: usize, epsilon: f64, model: ModelKind, pulses: u32) -> FloquetDriveSpec {
        FloquetDriveSpec {
            n_qubits: n,
            epsilon,
            t1: 1.0,
            t2: 1.0,
            model,
            h2i_pulses: pulses,
            distribution: DisorderDistribution {
                j0: 5.0,
                sigma_j: 3.0,
                h0: 2.0e4,
                sigma_h: 50.0,
            },
        }
    }

    fn realization(n: usize, seed: u64) -> DisorderRealization {
        let s = spec(n, 0.0, ModelKind::Ising, 0);
        sample_realization(&s.distribution, n, &mut realization_rng(seed, 0, 0))
    }

    fn max_unitarity_defect(u: &CMatrix) -> f64 {
        let d = u.adjoint() * u - CMatrix::identity(u.nrows(), u.ncols());
        d.iter().map(|x| x.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn perfect_pulses_double_the_period() {
        let plan = compile_step(&spec(4, 0.0, ModelKind::Ising, 0), &realization(4, 1)).unwrap();
        let mut ws = Workspace::new();
        let mut s = StateVector::basis_state("0000").unwrap();
        ws.apply_period(&mut s, &plan).unwrap();
        for z in s.sigma_z_all() {
            assert_abs_diff_eq!(z, -1.0, epsilon = 1e-12);
        }
        ws.apply_period(&mut s, &plan).unwrap();
        for z in s.sigma_z_all() {
            assert_abs_diff_eq!(z, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn full_error_pulse_is_identity() {
        let plan = compile_step(&spec(3, 1.0, ModelKind::Ising, 0), &realization(3, 2)).unwrap();
        let mut s = StateVector::basis_state("101").unwrap();
        for _ in 0..100 {
            apply_period(&mut s, &plan).unwrap();
        }
        for (z, e) in s.sigma_z_all().into_iter().zip([-1.0, 1.0, -1.0]) {
            assert_abs_diff_eq!(z, e, epsilon = 1e-12);
        }
    }

    #[test]
    fn single_spin_echo_returns_after_twenty_periods() {
        let mut sp = spec(1, 0.1, ModelKind::Ising, 0);
        sp.distribution = DisorderDistribution::clean();
        let plan = compile_step(&sp, &DisorderRealization::zeros(1)).unwrap();
        let mut s = StateVector::basis_state("0").unwrap();
        let mut first_return = None;
        for period in 1..=40u32 {
            apply_period(&mut s, &plan).unwrap();
            if period % 2 == 0 {
                let n = (period / 2) as f64;
                let z = s.sigma_z_expectation(1).unwrap();
                assert_abs_diff_eq!(z, (2.0 * PI * n * 0.1).cos(), epsilon = 1e-12);
                if first_return.is_none() && (z - 1.0).abs() < 1e-10 {
                    first_return = Some(period);
                }
            }
        }
        assert_eq!(first_return, Some(20));
    }

    #[test]
    fn zero_duration_interaction_is_identity() {
        let mut sp = spec(3, 0.2, ModelKind::Ising, 0);
        sp.t2 = 0.0;
        let r = realization(3, 3);
        let plan = compile_step(&sp, &r).unwrap();
        match plan.interaction() {
            InteractionStep::DiagonalPhases { table, .. } => assert!(table.iter().all(|&p| p == 0.0)),
            other => panic!("unexpected {other:?}"),
        }
        sp.model = ModelKind::Heisenberg;
        let plan = compile_step(&sp, &r).unwrap();
        let u = plan.interaction_unitary();
        assert!((u - CMatrix::identity(8, 8)).iter().all(|x| x.norm() < 1e-14));
    }

    #[test]
    fn ising_interaction_keeps_populations() {
        let plan = compile_step(&spec(4, 0.0, ModelKind::Ising, 0), &realization(4, 4)).unwrap();
        let mut s = StateVector::basis_state("0110").unwrap();
        let InteractionStep::DiagonalPhases { factors, .. } = plan.interaction() else {
            panic!()
        };
        s.apply_diagonal_factors(factors);
        assert_eq!(s.sigma_z_all(), vec![1.0, -1.0, -1.0, 1.0]);
    }

    #[test]
    fn dense_plans_are_unitary() {
        let r = realization(4, 5);
        for pulses in [0, 2, 8, 64] {
            let plan = compile_step(&spec(4, 0.1, ModelKind::Heisenberg, pulses), &r).unwrap();
            assert!(max_unitarity_defect(&plan.interaction_unitary()) < 1e-10);
        }
    }

    #[test]
    fn heisenberg_semigroup() {
        let r = realization(4, 6);
        let mut sp = spec(4, 0.0, ModelKind::Heisenberg, 0);
        let once = compile_step(&sp, &r).unwrap().interaction_unitary();
        sp.t2 = 2.0;
        let twice = compile_step(&sp, &r).unwrap().interaction_unitary();
        let diff = &once * &once - twice;
        assert!(diff.iter().all(|x| x.norm() < 1e-10));
    }

    #[test]
    fn odd_pulse_count_is_rejected() {
        let err = compile_step(&spec(4, 0.0, ModelKind::Heisenberg, 7), &realization(4, 7)).unwrap_err();
        assert!(matches!(err, Error::InvalidInput(_)));
    }

    #[test]
    fn h2i_literal_and_composed_agree() {
        let r = realization(4, 8);
        let plan = compile_step(&spec(4, 0.07, ModelKind::Heisenberg, 16), &r).unwrap();
        let mut ws = Workspace::new();
        let mut a = StateVector::basis_state("1000").unwrap();
        let mut b = a.clone();
        for _ in 0..20 {
            ws.apply_period(&mut a, &plan).unwrap();
            ws.apply_h2i_period(&mut b, &plan).unwrap();
        }
        for (x, y) in a.amplitudes().iter().zip(b.amplitudes()) {
            assert!((x - y).norm() < 1e-10);
        }
        let ising = compile_step(&spec(4, 0.07, ModelKind::Ising, 0), &r).unwrap();
        assert!(apply_h2i_period(&mut a, &ising).is_err());
    }

    #[test]
    fn h2i_with_trivial_hamiltonian_is_identity() {
        let plan = compile_step(
            &spec(4, 0.0, ModelKind::Heisenberg, 8),
            &DisorderRealization::zeros(4),
        )
        .unwrap();
        let u = plan.interaction_unitary();
        assert!((u - CMatrix::identity(16, 16)).iter().all(|x| x.norm() < 1e-13));
    }

    #[test]
    fn h2i_of_pure_ising_is_exact() {
        // With the exchange XX + YY terms absent the pulses cancel exactly,
        // so compare an Ising-only dense segment against the diagonal U_2.
        let r = realization(4, 9);
        let ising = compile_step(&spec(4, 0.0, ModelKind::Ising, 0), &r).unwrap();
        let table = model::ising_phase_table(&r, 1.0 / 8.0);
        let seg = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            16,
            table.iter().map(|&p| Complex64::from_polar(1.0, -p)),
        ));
        let pulse = pulse_diagonal(4, &h2i_pulse_qubits(4));
        let composite = matrix_power(&h2i_bracket(&seg, &pulse), 4);
        assert!(operator_distance(&composite, &ising.interaction_unitary()) < 1e-9);
    }

    #[test]
    fn pulse_mask_is_odd_sites() {
        assert_eq!(h2i_pulse_qubits(4), vec![1, 3]);
        assert_eq!(h2i_pulse_qubits(5), vec![1, 3, 5]);
    }

    #[test]
    fn norm_preserved_over_many_periods() {
        let r = realization(4, 10);
        for (model, pulses) in [(ModelKind::Ising, 0), (ModelKind::Heisenberg, 0), (ModelKind::Heisenberg, 8)] {
            let plan = compile_step(&spec(4, 0.13, model, pulses), &r).unwrap();
            let mut ws = Workspace::new();
            let mut s = StateVector::basis_state("1010").unwrap();
            for _ in 0..10_000 {
                ws.apply_period(&mut s, &plan).unwrap();
            }
            assert!((s.norm_sqr() - 1.0).abs() < 1e-10, "{model:?} {pulses}");
        }
    }
}
