//! Drive parameters and quenched disorder.

use std::f64::consts::TAU;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::{qubit_mask, z_sign};

/// Bond-coupling law recorded in output metadata.
pub const BOND_SAMPLING: &str = "uniform on [max(J0 - sigma_J, 0), J0 + sigma_J]";

/// Largest chain for which dense `2^L x 2^L` matrices are built.
pub const DENSE_QUBIT_CAP: usize = 12;

/// Uniform disorder on `h_n in [h0 - sigma_h, h0 + sigma_h]` and
/// `J_n in [max(J0 - sigma_J, 0), J0 + sigma_J]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisorderDistribution {
    pub j0: f64,
    pub sigma_j: f64,
    pub h0: f64,
    pub sigma_h: f64,
}

impl DisorderDistribution {
    /// No couplings and no fields.
    pub fn clean() -> Self {
        DisorderDistribution {
            j0: 0.0,
            sigma_j: 0.0,
            h0: 0.0,
            sigma_h: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.j0, self.sigma_j, self.h0, self.sigma_h];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite disorder parameter in {self:?}")));
        }
        if self.j0 < 0.0 || self.sigma_j < 0.0 || self.sigma_h < 0.0 {
            return Err(Error::invalid(format!(
                "J0, sigma_J and sigma_h must be nonnegative, got {self:?}"
            )));
        }
        Ok(())
    }

    /// Support of the bond-coupling law after truncation at zero.
    pub fn bond_support(&self) -> (f64, f64) {
        ((self.j0 - self.sigma_j).max(0.0), self.j0 + self.sigma_j)
    }

    pub fn field_support(&self) -> (f64, f64) {
        (self.h0 - self.sigma_h, self.h0 + self.sigma_h)
    }
}

/// One quenched draw of bond couplings `J_1..J_{L-1}` and fields `h_1..h_L`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DisorderRealization {
    bond_couplings: Vec<f64>,
    onsite_fields: Vec<f64>,
}

impl DisorderRealization {
    pub fn new(bond_couplings: Vec<f64>, onsite_fields: Vec<f64>) -> Result<Self> {
        if onsite_fields.is_empty() {
            return Err(Error::invalid("realization needs at least one onsite field"));
        }
        if bond_couplings.len() + 1 != onsite_fields.len() {
            return Err(Error::invalid(format!(
                "{} bond couplings do not fit a chain of {} sites",
                bond_couplings.len(),
                onsite_fields.len()
            )));
        }
        if bond_couplings.iter().chain(&onsite_fields).any(|v| !v.is_finite()) {
            return Err(Error::invalid("non-finite coupling or field"));
        }
        Ok(DisorderRealization {
            bond_couplings,
            onsite_fields,
        })
    }

    /// Uncoupled, field-free chain.
    pub fn zeros(n_qubits: usize) -> Self {
        DisorderRealization {
            bond_couplings: vec![0.0; n_qubits.saturating_sub(1)],
            onsite_fields: vec![0.0; n_qubits],
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.onsite_fields.len()
    }

    pub fn bond_couplings(&self) -> &[f64] {
        &self.bond_couplings
    }

    pub fn onsite_fields(&self) -> &[f64] {
        &self.onsite_fields
    }

    /// Add constants to every coupling and every field.
    pub fn shifted(&self, bond_shift: f64, field_shift: f64) -> Self {
        DisorderRealization {
            bond_couplings: self.bond_couplings.iter().map(|j| j + bond_shift).collect(),
            onsite_fields: self.onsite_fields.iter().map(|h| h + field_shift).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Ising,
    Heisenberg,
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ModelKind::Ising => "ising",
            ModelKind::Heisenberg => "heisenberg",
        })
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ising" => Ok(ModelKind::Ising),
            "heisenberg" => Ok(ModelKind::Heisenberg),
            other => Err(Error::config(format!("unknown model kind {other:?}"))),
        }
    }
}

/// Full description of the binary drive `U_F = U_2 U_1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FloquetDriveSpec {
    pub n_qubits: usize,
    /// Fractional shortfall of the global pi-pulse.
    pub epsilon: f64,
    pub t1: f64,
    pub t2: f64,
    pub model: ModelKind,
    /// Number of interleaved z pulses during the interaction segment; 0 disables them.
    pub h2i_pulses: u32,
    pub distribution: DisorderDistribution,
}

impl FloquetDriveSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_qubits == 0 {
            return Err(Error::invalid("chain length must be at least 1"));
        }
        if !self.epsilon.is_finite() {
            return Err(Error::invalid("epsilon must be finite"));
        }
        if !(self.t1.is_finite() && self.t1 > 0.0) {
            return Err(Error::invalid(format!("t1 must be positive, got {}", self.t1)));
        }
        if !(self.t2.is_finite() && self.t2 >= 0.0) {
            return Err(Error::invalid(format!("t2 must be nonnegative, got {}", self.t2)));
        }
        if !self.h2i_pulses.is_multiple_of(2) {
            return Err(Error::invalid(format!(
                "h2i_pulses must be even, got {}",
                self.h2i_pulses
            )));
        }
        self.distribution.validate()
    }

    /// Floquet period `T = t1 + t2`.
    pub fn period(&self) -> f64 {
        self.t1 + self.t2
    }
}

fn uniform<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    let u: f64 = rng.random();
    lo + u * (hi - lo)
}

/// Draw one quenched realization. Couplings are uniform on the truncated
/// support `[max(J0 - sigma_J, 0), J0 + sigma_J]`, not clipped.
pub fn sample_realization<R: Rng + ?Sized>(
    distribution: &DisorderDistribution,
    n_qubits: usize,
    rng: &mut R,
) -> DisorderRealization {
    let (jlo, jhi) = distribution.bond_support();
    let (hlo, hhi) = distribution.field_support();
    let bond_couplings = (1..n_qubits).map(|_| uniform(rng, jlo, jhi)).collect();
    let onsite_fields = (0..n_qubits).map(|_| uniform(rng, hlo, hhi)).collect();
    DisorderRealization {
        bond_couplings,
        onsite_fields,
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_4761_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for one realization of one campaign cell. Depends only on the
/// three indices, so work can be scheduled in any order.
pub fn realization_seed(campaign_seed: u64, cell_index: u64, realization_index: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(campaign_seed) ^ cell_index) ^ realization_index)
}

pub fn realization_rng(campaign_seed: u64, cell_index: u64, realization_index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(realization_seed(campaign_seed, cell_index, realization_index))
}

/// Diagonal of `H_2 t2` over the computational basis:
/// `t2 * (sum_n J_n z_n z_{n+1} + sum_n h_n z_n)`.
pub fn ising_phase_table(realization: &DisorderRealization, t2: f64) -> Vec<f64> {
    diagonal_table(
        &realization.bond_couplings.iter().map(|j| j * t2).collect::<Vec<_>>(),
        &realization.onsite_fields.iter().map(|h| h * t2).collect::<Vec<_>>(),
    )
}

/// Same unitary as [`ising_phase_table`], but each per-term phase `J_n t2`
/// and `h_n t2` is reduced mod 2pi before the table is summed. Entries are
/// integer combinations of the per-term phases, so `exp(-i table)` is
/// unchanged while large fields and 2pi-shifted couplings lose no precision.
pub fn wrapped_ising_phase_table(realization: &DisorderRealization, t2: f64) -> Vec<f64> {
    diagonal_table(
        &realization.bond_couplings.iter().map(|j| (j * t2).rem_euclid(TAU)).collect::<Vec<_>>(),
        &realization.onsite_fields.iter().map(|h| (h * t2).rem_euclid(TAU)).collect::<Vec<_>>(),
    )
}

fn diagonal_table(bonds: &[f64], fields: &[f64]) -> Vec<f64> {
    let n = fields.len();
    (0..1usize << n)
        .map(|s| {
            let zz: f64 = bonds
                .iter()
                .enumerate()
                .map(|(i, j)| j * z_sign(s, n, i + 1) * z_sign(s, n, i + 2))
                .sum();
            let z: f64 = fields
                .iter()
                .enumerate()
                .map(|(i, h)| h * z_sign(s, n, i + 1))
                .sum();
            zz + z
        })
        .collect()
}

pub(crate) fn check_dense_cap(n_qubits: usize) -> Result<()> {
    if n_qubits > DENSE_QUBIT_CAP {
        return Err(Error::Capacity {
            what: "chain length for dense matrices".into(),
            requested: n_qubits as f64,
            limit: DENSE_QUBIT_CAP as f64,
        });
    }
    Ok(())
}

/// Dense `sum_n J_n sigma_n . sigma_{n+1} + sum_n h_n sigma^z_n`.
///
/// The matrix is real symmetric in the computational basis: `XX + YY` maps
/// an antiparallel pair to twice its flipped partner and kills parallel pairs.
pub fn heisenberg_hamiltonian(realization: &DisorderRealization) -> Result<DMatrix<f64>> {
    let n = realization.n_qubits();
    check_dense_cap(n)?;
    let dim = 1usize << n;
    let diag = ising_phase_table(realization, 1.0);
    let mut h = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(diag));
    for (i, &j) in realization.bond_couplings.iter().enumerate() {
        let pair = qubit_mask(n, i + 1) | qubit_mask(n, i + 2);
        for s in 0..dim {
            let bits = s & pair;
            if bits != 0 && bits != pair {
                h[(s ^ pair, s)] += 2.0 * j;
            }
        }
    }
    Ok(h)
}
