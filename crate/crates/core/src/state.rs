//! Exact L-qubit state vectors.
//!
//! Qubit labels run from 1 to L and qubit 1 is the most significant bit of
//! the basis index, so the string `"1000"` on four qubits is index 8. A bit
//! value of 0 is spin up (`<Z> = +1`) and 1 is spin down (`<Z> = -1`).

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest chain the state vector will allocate for.
pub const MAX_QUBITS: usize = 30;

/// Bit mask of qubit `k` (1-based, MSB first) in an `n_qubits` basis index.
#[inline]
pub fn qubit_mask(n_qubits: usize, k: usize) -> usize {
    1 << (n_qubits - k)
}

/// `+1` or `-1`: the Z eigenvalue of qubit `k` in basis state `index`.
#[inline]
pub fn z_sign(index: usize, n_qubits: usize, k: usize) -> f64 {
    if index & qubit_mask(n_qubits, k) == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Parse a bit string into its basis index.
pub fn basis_index(bits: &str) -> Result<usize> {
    if bits.is_empty() {
        return Err(Error::invalid("basis string is empty"));
    }
    if bits.len() > MAX_QUBITS {
        return Err(Error::Capacity {
            what: "qubit count".into(),
            requested: bits.len() as f64,
            limit: MAX_QUBITS as f64,
        });
    }
    bits.chars().try_fold(0usize, |acc, c| match c {
        '0' => Ok(acc << 1),
        '1' => Ok((acc << 1) | 1),
        other => Err(Error::invalid(format!(
            "basis string {bits:?} contains non-binary character {other:?}"
        ))),
    })
}

/// Render a basis index as an `n_qubits`-character bit string.
pub fn basis_label(index: usize, n_qubits: usize) -> String {
    (1..=n_qubits)
        .map(|k| if index & qubit_mask(n_qubits, k) == 0 { '0' } else { '1' })
        .collect()
}

/// Flip every bit of a basis string.
pub fn flip_bits(bits: &str) -> String {
    bits.chars()
        .map(|c| match c {
            '0' => '1',
            '1' => '0',
            other => other,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// Computational basis state from a bit string such as `"1000"`.
    pub fn basis_state(bits: &str) -> Result<Self> {
        let index = basis_index(bits)?;
        Ok(Self::basis_index_state(bits.len(), index))
    }

    pub(crate) fn basis_index_state(n_qubits: usize, index: usize) -> Self {
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        amplitudes[index] = Complex64::new(1.0, 0.0);
        StateVector {
            n_qubits,
            amplitudes,
        }
    }

    /// Wrap an explicit amplitude vector. The vector must have length `2^L`
    /// and unit norm to within `1e-10`.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let dim = amplitudes.len();
        if dim < 2 || !dim.is_power_of_two() {
            return Err(Error::invalid(format!(
                "amplitude vector length {dim} is not 2^L with L >= 1"
            )));
        }
        let n_qubits = dim.trailing_zeros() as usize;
        let state = StateVector {
            n_qubits,
            amplitudes,
        };
        let norm = state.norm_sqr();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::invalid(format!("state norm^2 is {norm}, expected 1")));
        }
        Ok(state)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    fn check_qubit(&self, k: usize) -> Result<()> {
        if k == 0 || k > self.n_qubits {
            return Err(Error::invalid(format!(
                "qubit index {k} out of range 1..={}",
                self.n_qubits
            )));
        }
        Ok(())
    }

    /// `<sigma^z_k>` for qubit `k` (1-based).
    pub fn sigma_z_expectation(&self, k: usize) -> Result<f64> {
        self.check_qubit(k)?;
        let mask = qubit_mask(self.n_qubits, k);
        Ok(self
            .amplitudes
            .iter()
            .enumerate()
            .map(|(s, a)| if s & mask == 0 { a.norm_sqr() } else { -a.norm_sqr() })
            .sum())
    }

    /// `<sigma^z_k>` for every qubit in one pass over the amplitudes.
    pub fn sigma_z_all(&self) -> Vec<f64> {
        let n = self.n_qubits;
        let mut out = vec![0.0; n];
        for (s, a) in self.amplitudes.iter().enumerate() {
            let p = a.norm_sqr();
            for (slot, k) in out.iter_mut().zip(1..=n) {
                if s & qubit_mask(n, k) == 0 {
                    *slot += p;
                } else {
                    *slot -= p;
                }
            }
        }
        out
    }

    /// Apply `exp(-i * angle * sigma^x_k) = cos(angle) I - i sin(angle) sigma^x`.
    ///
    /// With this convention `angle = pi/2` is an exact spin flip.
    pub fn apply_x_rotation(&mut self, k: usize, angle: f64) -> Result<()> {
        self.check_qubit(k)?;
        if !angle.is_finite() {
            return Err(Error::invalid(format!("rotation angle {angle} is not finite")));
        }
        self.rotate_x_unchecked(k, angle.cos(), angle.sin());
        Ok(())
    }

    /// Inner loop of the x rotation with precomputed `cos` and `sin`.
    pub(crate) fn rotate_x_unchecked(&mut self, k: usize, cos: f64, sin: f64) {
        let mask = qubit_mask(self.n_qubits, k);
        let c = Complex64::new(cos, 0.0);
        let mis = Complex64::new(0.0, -sin);
        // Walk blocks of 2*mask: the lower half has bit k clear, the upper half set.
        for block in self.amplitudes.chunks_exact_mut(mask << 1) {
            let (lo, hi) = block.split_at_mut(mask);
            for (a0, a1) in lo.iter_mut().zip(hi.iter_mut()) {
                let x0 = *a0;
                let x1 = *a1;
                *a0 = c * x0 + mis * x1;
                *a1 = mis * x0 + c * x1;
            }
        }
    }

    /// Apply `exp(-i * angle * sigma^z_k)`. Diagonal, so populations are untouched.
    pub fn apply_z_rotation(&mut self, k: usize, angle: f64) -> Result<()> {
        self.check_qubit(k)?;
        if !angle.is_finite() {
            return Err(Error::invalid(format!("rotation angle {angle} is not finite")));
        }
        let mask = qubit_mask(self.n_qubits, k);
        let up = Complex64::from_polar(1.0, -angle);
        let down = up.conj();
        for (s, a) in self.amplitudes.iter_mut().enumerate() {
            *a *= if s & mask == 0 { up } else { down };
        }
        Ok(())
    }

    /// `amplitude_s <- amplitude_s * exp(-i * phases_s)`.
    pub fn apply_diagonal_phases(&mut self, phases: &[f64]) -> Result<()> {
        if phases.len() != self.dim() {
            return Err(Error::invalid(format!(
                "phase table length {} does not match state dimension {}",
                phases.len(),
                self.dim()
            )));
        }
        for (a, &phi) in self.amplitudes.iter_mut().zip(phases) {
            *a *= Complex64::from_polar(1.0, -phi);
        }
        Ok(())
    }

    /// Multiply amplitudes elementwise by precomputed unit-modulus factors.
    pub(crate) fn apply_diagonal_factors(&mut self, factors: &[Complex64]) {
        debug_assert_eq!(factors.len(), self.dim());
        for (a, f) in self.amplitudes.iter_mut().zip(factors) {
            *a *= f;
        }
    }
}
