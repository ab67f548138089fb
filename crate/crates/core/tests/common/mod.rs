//! Dense-matrix reference implementations built from Kronecker products,
//! independent of the crate's bit-twiddling fast paths.

#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64;

pub type M = DMatrix<Complex64>;

const I: Complex64 = Complex64::new(0.0, 1.0);

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn pauli(which: char) -> M {
    match which {
        'I' => M::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c(1.0)]),
        'X' => M::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)]),
        'Y' => M::from_row_slice(2, 2, &[c(0.0), -I, I, c(0.0)]),
        'Z' => M::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c(-1.0)]),
        _ => unreachable!(),
    }
}

/// `op` on qubit `k` (1-based, qubit 1 leftmost in the tensor product).
pub fn site(op: &M, k: usize, n: usize) -> M {
    let mut out = M::identity(1, 1);
    for q in 1..=n {
        let f = if q == k { op.clone() } else { pauli('I') };
        out = out.kronecker(&f);
    }
    out
}

pub fn ising_h(bonds: &[f64], fields: &[f64]) -> M {
    let n = fields.len();
    let z = pauli('Z');
    let mut h = M::zeros(1 << n, 1 << n);
    for (i, &j) in bonds.iter().enumerate() {
        h += site(&z, i + 1, n) * site(&z, i + 2, n) * c(j);
    }
    for (i, &f) in fields.iter().enumerate() {
        h += site(&z, i + 1, n) * c(f);
    }
    h
}

pub fn heisenberg_h(bonds: &[f64], fields: &[f64]) -> M {
    let n = fields.len();
    let mut h = M::zeros(1 << n, 1 << n);
    for (i, &j) in bonds.iter().enumerate() {
        for p in ['X', 'Y', 'Z'] {
            let s = pauli(p);
            h += site(&s, i + 1, n) * site(&s, i + 2, n) * c(j);
        }
    }
    for (i, &f) in fields.iter().enumerate() {
        h += site(&pauli('Z'), i + 1, n) * c(f);
    }
    h
}

fn one_norm(a: &M) -> f64 {
    (0..a.ncols())
        .map(|j| a.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `exp(a)` by Taylor series with scaling and squaring.
pub fn expm(a: &M) -> M {
    let norm = one_norm(a);
    let s = if norm > 0.25 {
        (norm / 0.25).log2().ceil() as i32
    } else {
        0
    };
    let scaled = a / c(2f64.powi(s));
    let n = a.nrows();
    let mut term = M::identity(n, n);
    let mut sum = M::identity(n, n);
    for k in 1..=24 {
        term = &term * &scaled / c(k as f64);
        sum += &term;
    }
    for _ in 0..s {
        sum = &sum * &sum;
    }
    sum
}

/// `exp(-i h t)`.
pub fn propagator(h: &M, t: f64) -> M {
    expm(&(h * Complex64::new(0.0, -t)))
}

/// Global pulse `prod_k exp(-i angle X_k)`.
pub fn pulse(angle: f64, n: usize) -> M {
    let one = pauli('I') * c(angle.cos()) - pauli('X') * (I * angle.sin());
    let mut out = M::identity(1, 1);
    for _ in 0..n {
        out = out.kronecker(&one);
    }
    out
}

/// `prod_{k odd} exp(+i angle Z_k)`.
pub fn odd_z_rotation(angle: f64, n: usize) -> M {
    let mut out = M::identity(1 << n, 1 << n);
    for k in (1..=n).step_by(2) {
        let one = pauli('I') * c(angle.cos()) + pauli('Z') * (I * angle.sin());
        out = &out * site(&one, k, n);
    }
    out
}

/// `[P U_H(t2/n) P^dag U_H(t2/n)]^(n/2)` by repeated multiplication.
pub fn h2i_unitary(bonds: &[f64], fields: &[f64], t2: f64, pulses: u32) -> M {
    let n = fields.len();
    let seg = propagator(&heisenberg_h(bonds, fields), t2 / pulses as f64);
    let p = odd_z_rotation(std::f64::consts::FRAC_PI_2, n);
    let pd = p.adjoint();
    let bracket = &p * &seg * &pd * &seg;
    let mut out = M::identity(1 << n, 1 << n);
    for _ in 0..pulses / 2 {
        out = &bracket * &out;
    }
    out
}

pub fn basis_vector(bits: &str) -> nalgebra::DVector<Complex64> {
    let n = bits.len();
    let mut v = nalgebra::DVector::from_element(1 << n, c(0.0));
    v[usize::from_str_radix(bits, 2).unwrap()] = c(1.0);
    v
}

pub fn max_abs_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Dense `U_F = U_2 U_1` for a drive, built only from the reference routines.
pub fn floquet_unitary(
    spec: &dtc_core::model::FloquetDriveSpec,
    realization: &dtc_core::model::DisorderRealization,
) -> M {
    use dtc_core::model::ModelKind;
    let n = spec.n_qubits;
    let bonds = realization.bond_couplings();
    let fields = realization.onsite_fields();
    let u1 = pulse(std::f64::consts::FRAC_PI_2 * (1.0 - spec.epsilon), n);
    let u2 = match (spec.model, spec.h2i_pulses) {
        (ModelKind::Ising, _) => propagator(&ising_h(bonds, fields), spec.t2),
        (ModelKind::Heisenberg, 0) => propagator(&heisenberg_h(bonds, fields), spec.t2),
        (ModelKind::Heisenberg, p) => h2i_unitary(bonds, fields, spec.t2, p),
    };
    u2 * u1
}

/// Evolve `bits` for `periods` periods with the dense reference and return
/// `<Z_k>` after each period, indexed `[period - 1][k - 1]`.
pub fn dense_z_history(u: &M, bits: &str, periods: usize) -> Vec<Vec<f64>> {
    let n = bits.len();
    let mut psi = basis_vector(bits);
    (0..periods)
        .map(|_| {
            psi = u * &psi;
            (1..=n)
                .map(|k| {
                    psi.iter()
                        .enumerate()
                        .map(|(s, a)| {
                            let bit = (s >> (n - k)) & 1;
                            a.norm_sqr() * if bit == 0 { 1.0 } else { -1.0 }
                        })
                        .sum()
                })
                .collect()
        })
        .collect()
}
