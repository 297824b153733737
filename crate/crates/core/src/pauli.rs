//! Pauli-string algebra and the generalized Bloch parametrization.
//!
//! An n-qubit Pauli string is indexed by a base-4 code in `[0, 4^n)` with
//! digit values `{0: I, 1: X, 2: Y, 3: Z}`; qubit 0 carries the most
//! significant digit. Code 0 is the identity and is excluded from the
//! "nontrivial" basis used for Bloch vectors and traceless observables.
//!
//! A density matrix is written as
//! `rho = I/2^n + 2^((-1-n)/2) * theta . P`
//! where `theta` has length `4^n - 1`; a traceless observable is
//! `X = x . P`. Expectation values reduce to `2^((n-1)/2) * theta . x`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest qubit count accepted by the basis constructors.
pub const MAX_QUBITS: usize = 6;

/// Density matrices are dense complex matrices of side `2^n`.
pub type DensityMatrix = DMatrix<Complex64>;

/// Index into the n-qubit Pauli basis `{I, X, Y, Z}^{⊗n}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PauliString {
    n: usize,
    code: usize,
}

impl PauliString {
    pub fn new(n: usize, code: usize) -> Result<Self> {
        check_qubits(n)?;
        if code >= 1 << (2 * n) {
            return Err(Error::Validation(format!(
                "Pauli code {code} out of range for {n} qubit(s)"
            )));
        }
        Ok(Self { n, code })
    }

    pub fn identity(n: usize) -> Result<Self> {
        Self::new(n, 0)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn code(&self) -> usize {
        self.code
    }

    pub fn is_identity(&self) -> bool {
        self.code == 0
    }

    /// Base-4 digit for `qubit`, with qubit 0 as the most significant digit.
    pub fn digit(&self, qubit: usize) -> u8 {
        debug_assert!(qubit < self.n);
        ((self.code >> (2 * (self.n - 1 - qubit))) & 0b11) as u8
    }

    /// Number of non-identity tensor factors.
    pub fn weight(&self) -> usize {
        (0..self.n).filter(|&q| self.digit(q) != 0).count()
    }

    pub fn label(&self) -> String {
        (0..self.n)
            .map(|q| match self.digit(q) {
                0 => 'I',
                1 => 'X',
                2 => 'Y',
                3 => 'Z',
                _ => unreachable!(),
            })
            .collect()
    }

    /// Bit masks over computational-basis indices. Bit `n-1-q` of the index
    /// corresponds to qubit `q`, matching the Kronecker order of [`matrix`].
    ///
    /// Returns `(x_mask, zy_mask, n_y)`: positions where the string flips the
    /// basis bit (X or Y), positions contributing a `(-1)^bit` phase (Z or
    /// Y), and the Y count.
    ///
    /// [`matrix`]: PauliString::matrix
    fn masks(&self) -> (usize, usize, u32) {
        let mut x_mask = 0usize;
        let mut zy_mask = 0usize;
        let mut n_y = 0u32;
        for q in 0..self.n {
            let bit = 1usize << (self.n - 1 - q);
            match self.digit(q) {
                1 => x_mask |= bit,
                2 => {
                    x_mask |= bit;
                    zy_mask |= bit;
                    n_y += 1;
                }
                3 => zy_mask |= bit,
                _ => {}
            }
        }
        (x_mask, zy_mask, n_y)
    }

    /// Dense matrix realization, `2^n x 2^n`.
    pub fn matrix(&self) -> DMatrix<Complex64> {
        let d = 1usize << self.n;
        let (x_mask, zy_mask, n_y) = self.masks();
        let i_pow = i_power(n_y);
        let mut m = DMatrix::zeros(d, d);
        for col in 0..d {
            let row = col ^ x_mask;
            let sign = if (col & zy_mask).count_ones() % 2 == 0 {
                1.0
            } else {
                -1.0
            };
            m[(row, col)] = i_pow * sign;
        }
        m
    }

    /// `tr[P m]` in O(2^n) using the signed-permutation structure of `P`.
    pub fn trace_with(&self, m: &DMatrix<Complex64>) -> Complex64 {
        let d = 1usize << self.n;
        debug_assert_eq!(m.nrows(), d);
        let (x_mask, zy_mask, n_y) = self.masks();
        let i_pow = i_power(n_y);
        let mut acc = Complex64::new(0.0, 0.0);
        for col in 0..d {
            let row = col ^ x_mask;
            let sign = if (col & zy_mask).count_ones() % 2 == 0 {
                1.0
            } else {
                -1.0
            };
            acc += m[(col, row)] * sign;
        }
        acc * i_pow
    }

    /// Left-multiplication `P m` in O(4^n).
    pub fn mul_left(&self, m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let d = 1usize << self.n;
        debug_assert_eq!(m.nrows(), d);
        let (x_mask, zy_mask, n_y) = self.masks();
        let i_pow = i_power(n_y);
        let mut out = DMatrix::zeros(d, d);
        for row in 0..d {
            let src = row ^ x_mask;
            let sign = if (src & zy_mask).count_ones() % 2 == 0 {
                1.0
            } else {
                -1.0
            };
            let factor = i_pow * sign;
            for col in 0..d {
                out[(row, col)] = factor * m[(src, col)];
            }
        }
        out
    }

    /// Whether this string commutes with `other` (symplectic parity).
    pub fn commutes_with(&self, other: &PauliString) -> bool {
        debug_assert_eq!(self.n, other.n);
        let (xa, za) = self.xz_bits();
        let (xb, zb) = other.xz_bits();
        ((xa & zb).count_ones() + (xb & za).count_ones()) % 2 == 0
    }

    fn xz_bits(&self) -> (usize, usize) {
        let mut x = 0usize;
        let mut z = 0usize;
        for q in 0..self.n {
            let bit = 1usize << (self.n - 1 - q);
            match self.digit(q) {
                1 => x |= bit,
                2 => {
                    x |= bit;
                    z |= bit;
                }
                3 => z |= bit,
                _ => {}
            }
        }
        (x, z)
    }
}

fn i_power(k: u32) -> Complex64 {
    match k % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

fn check_qubits(n: usize) -> Result<()> {
    if n == 0 || n > MAX_QUBITS {
        return Err(Error::SizeOutOfRange { n, max: MAX_QUBITS });
    }
    Ok(())
}

/// Hilbert-space dimension `2^n`.
pub fn dim(n: usize) -> usize {
    1 << n
}

/// Number of nontrivial basis strings, `4^n - 1`.
pub fn basis_len(n: usize) -> usize {
    (1 << (2 * n)) - 1
}

/// The nontrivial Pauli basis in ascending code order (codes `1..4^n`).
pub fn pauli_basis(n: usize) -> Result<Vec<PauliString>> {
    check_qubits(n)?;
    Ok((1..1 << (2 * n))
        .map(|code| PauliString { n, code })
        .collect())
}

/// Generalized Bloch vector: coordinates of a state in the nontrivial
/// Pauli basis. The chart extends beyond the physical state space; positivity
/// is tracked separately via [`is_physical`].
#[derive(Debug, Clone, PartialEq)]
pub struct BlochVector {
    n: usize,
    theta: DVector<f64>,
}

impl BlochVector {
    pub fn new(n: usize, theta: DVector<f64>) -> Result<Self> {
        check_qubits(n)?;
        if theta.len() != basis_len(n) {
            return Err(Error::DimensionMismatch {
                context: "BlochVector",
                expected: basis_len(n),
                actual: theta.len(),
            });
        }
        Ok(Self { n, theta })
    }

    pub fn zeros(n: usize) -> Result<Self> {
        Self::new(n, DVector::zeros(basis_len(n)))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn coords(&self) -> &DVector<f64> {
        &self.theta
    }

    pub fn norm_squared(&self) -> f64 {
        self.theta.norm_squared()
    }

    /// Squared norm of a pure state's Bloch vector, `2 - 2^(1-n)`.
    pub fn pure_norm_squared(n: usize) -> f64 {
        2.0 - (2.0f64).powi(1 - n as i32)
    }
}

/// Real coefficient vector of a traceless observable `X = x . P`.
#[derive(Debug, Clone, PartialEq)]
pub struct Observable {
    n: usize,
    coeffs: DVector<f64>,
}

impl Observable {
    pub fn new(n: usize, coeffs: DVector<f64>) -> Result<Self> {
        check_qubits(n)?;
        if coeffs.len() != basis_len(n) {
            return Err(Error::DimensionMismatch {
                context: "Observable",
                expected: basis_len(n),
                actual: coeffs.len(),
            });
        }
        Ok(Self { n, coeffs })
    }

    /// Pauli Z on qubit 0, identity elsewhere.
    pub fn single_z(n: usize) -> Result<Self> {
        check_qubits(n)?;
        let mut coeffs = DVector::zeros(basis_len(n));
        let code = 3usize << (2 * (n - 1));
        coeffs[code - 1] = 1.0;
        Ok(Self { n, coeffs })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn coeffs(&self) -> &DVector<f64> {
        &self.coeffs
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.norm()
    }

    /// Dense Hermitian realization `x . P`.
    pub fn matrix(&self) -> DMatrix<Complex64> {
        let d = dim(self.n);
        let mut m = DMatrix::zeros(d, d);
        for (idx, &x) in self.coeffs.iter().enumerate() {
            if x != 0.0 {
                let p = PauliString {
                    n: self.n,
                    code: idx + 1,
                };
                m += p.matrix() * Complex64::new(x, 0.0);
            }
        }
        m
    }
}

fn infer_qubits(rho: &DMatrix<Complex64>) -> Result<usize> {
    let d = rho.nrows();
    if rho.ncols() != d || d < 2 || !d.is_power_of_two() {
        return Err(Error::Validation(format!(
            "density matrix must be square with power-of-two side, got {}x{}",
            rho.nrows(),
            rho.ncols()
        )));
    }
    let n = d.trailing_zeros() as usize;
    check_qubits(n)?;
    Ok(n)
}

fn hermiticity_defect(m: &DMatrix<Complex64>) -> f64 {
    (m - m.adjoint()).norm()
}

/// Bloch coordinates of a Hermitian unit-trace matrix:
/// `theta_i = 2^((1-n)/2) tr[P_i rho]`.
pub fn bloch_from_density(rho: &DMatrix<Complex64>) -> Result<BlochVector> {
    let n = infer_qubits(rho)?;
    if hermiticity_defect(rho) > 1e-10 * rho.norm().max(1.0) {
        return Err(Error::Validation("density matrix is not Hermitian".into()));
    }
    let trace = rho.trace();
    if (trace - Complex64::new(1.0, 0.0)).norm() > 1e-9 {
        return Err(Error::Validation(format!(
            "density matrix trace {trace} is not 1"
        )));
    }
    let scale = (2.0f64).powf((1.0 - n as f64) / 2.0);
    let mut theta = DVector::zeros(basis_len(n));
    for code in 1..=basis_len(n) {
        let p = PauliString { n, code };
        theta[code - 1] = scale * p.trace_with(rho).re;
    }
    BlochVector::new(n, theta)
}

/// Matrix realization of Bloch coordinates:
/// `I/2^n + 2^((-1-n)/2) theta . P`.
///
/// Positivity is not enforced; the chart must remain evaluable on a
/// neighborhood of the physical body. Use [`is_physical`] to test it.
pub fn density_from_bloch(theta: &BlochVector) -> DMatrix<Complex64> {
    let n = theta.n;
    let d = dim(n);
    let mut rho = DMatrix::from_diagonal_element(d, d, Complex64::new(1.0 / d as f64, 0.0));
    let scale = (2.0f64).powf(-(1.0 + n as f64) / 2.0);
    for (idx, &t) in theta.theta.iter().enumerate() {
        if t != 0.0 {
            let p = PauliString { n, code: idx + 1 };
            let (x_mask, zy_mask, n_y) = p.masks();
            let factor = i_power(n_y) * (scale * t);
            for col in 0..d {
                let row = col ^ x_mask;
                let sign = if (col & zy_mask).count_ones() % 2 == 0 {
                    1.0
                } else {
                    -1.0
                };
                rho[(row, col)] += factor * sign;
            }
        }
    }
    rho
}

/// `tr[rho X] = 2^((n-1)/2) theta . x`.
pub fn expectation(theta: &BlochVector, obs: &Observable) -> Result<f64> {
    if theta.n != obs.n {
        return Err(Error::DimensionMismatch {
            context: "expectation",
            expected: theta.n,
            actual: obs.n,
        });
    }
    Ok((2.0f64).powf((theta.n as f64 - 1.0) / 2.0) * theta.theta.dot(&obs.coeffs))
}

/// Minimum eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue(m: &DMatrix<Complex64>) -> f64 {
    m.clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
}

/// Whether a Hermitian matrix is PSD up to `-tol` on its smallest eigenvalue.
pub fn is_physical(rho: &DMatrix<Complex64>, tol: f64) -> bool {
    min_eigenvalue(rho) >= -tol
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Random Hermitian unit-trace matrix built from a Ginibre sample; the
    /// dense-matrix oracle for the Bloch chart tests.
    fn random_density(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<Complex64> {
        let d = dim(n);
        let g = DMatrix::from_fn(d, d, |_, _| {
            c(
                StandardNormal.sample(rng),
                StandardNormal.sample(rng),
            )
        });
        let h = &g * g.adjoint();
        let tr = h.trace().re;
        h / c(tr, 0.0)
    }

    #[test]
    fn basis_counts_and_order() {
        let b1 = pauli_basis(1).unwrap();
        assert_eq!(b1.len(), 3);
        assert_eq!(
            b1.iter().map(|p| p.label()).collect::<Vec<_>>(),
            vec!["X", "Y", "Z"]
        );

        let b2 = pauli_basis(2).unwrap();
        assert_eq!(b2.len(), 15);
        assert_eq!(b2[0].label(), "IX");
        assert_eq!(b2[1].label(), "IY");
        assert_eq!(b2[2].label(), "IZ");

        assert_eq!(pauli_basis(3).unwrap().len(), 63);
        assert!(matches!(
            pauli_basis(0),
            Err(Error::SizeOutOfRange { .. })
        ));
        assert!(matches!(
            pauli_basis(MAX_QUBITS + 1),
            Err(Error::SizeOutOfRange { .. })
        ));
    }

    #[test]
    fn matrices_match_kronecker_products() {
        let x = DMatrix::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)]);
        let y = DMatrix::from_row_slice(2, 2, &[c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)]);
        let z = DMatrix::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)]);
        let eye = DMatrix::identity(2, 2);
        let single = [eye, x, y, z];

        for code in 0..16 {
            let p = PauliString::new(2, code).unwrap();
            let expected = single[(code >> 2) & 3].kronecker(&single[code & 3]);
            assert!((p.matrix() - expected).norm() < 1e-14, "code {code}");
        }
    }

    #[test]
    fn basis_orthogonality_exhaustive() {
        for n in 1..=3 {
            let d = dim(n) as f64;
            let basis = pauli_basis(n).unwrap();
            for pi in &basis {
                for pj in &basis {
                    let t = pi.trace_with(&pj.matrix());
                    let expected = if pi.code() == pj.code() { d } else { 0.0 };
                    assert!(
                        (t - c(expected, 0.0)).norm() < 1e-12,
                        "tr[P{} P{}] = {t}",
                        pi.code(),
                        pj.code()
                    );
                }
            }
        }
    }

    #[test]
    fn fast_trace_and_mul_match_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 1..=3 {
            let m = random_density(n, &mut rng);
            for p in pauli_basis(n).unwrap() {
                let dense = (p.matrix() * &m).trace();
                assert!((p.trace_with(&m) - dense).norm() < 1e-12);
                assert!((p.mul_left(&m) - p.matrix() * &m).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn bloch_of_ground_state_and_mixed_state() {
        let mut rho0 = DMatrix::zeros(2, 2);
        rho0[(0, 0)] = c(1.0, 0.0);
        let b = bloch_from_density(&rho0).unwrap();
        assert_abs_diff_eq!(b.coords()[0], 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(b.coords()[1], 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(b.coords()[2], 1.0, epsilon = 1e-14);

        let mixed = DMatrix::from_diagonal_element(2, 2, c(0.5, 0.0));
        let b = bloch_from_density(&mixed).unwrap();
        assert!(b.norm_squared() < 1e-28);
    }

    #[test]
    fn two_qubit_ground_state_purity() {
        let d = 4;
        let mut rho = DMatrix::zeros(d, d);
        rho[(0, 0)] = c(1.0, 0.0);
        let b = bloch_from_density(&rho).unwrap();
        assert_abs_diff_eq!(b.norm_squared(), 1.5, epsilon = 1e-12);
    }

    #[test]
    fn density_from_bloch_examples() {
        let origin = BlochVector::zeros(2).unwrap();
        let rho = density_from_bloch(&origin);
        assert!((rho - DMatrix::from_diagonal_element(4, 4, c(0.25, 0.0))).norm() < 1e-14);

        let up = BlochVector::new(1, DVector::from_vec(vec![0.0, 0.0, 1.0])).unwrap();
        let rho = density_from_bloch(&up);
        let mut expected = DMatrix::zeros(2, 2);
        expected[(0, 0)] = c(1.0, 0.0);
        assert!((rho - expected).norm() < 1e-14);

        // Outside the Bloch ball: still Hermitian/unit trace, not PSD.
        let out = BlochVector::new(1, DVector::from_vec(vec![0.0, 0.0, 2.0])).unwrap();
        let rho = density_from_bloch(&out);
        assert!((rho.trace() - c(1.0, 0.0)).norm() < 1e-14);
        assert!(!is_physical(&rho, 1e-10));
        assert!(min_eigenvalue(&rho) < -0.4);
    }

    #[test]
    fn roundtrip_and_purity_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in 1..=3 {
            for _ in 0..10 {
                let rho = random_density(n, &mut rng);
                let b = bloch_from_density(&rho).unwrap();
                let back = density_from_bloch(&b);
                assert!((&back - &rho).norm() < 1e-12);

                let purity = (&rho * &rho).trace().re;
                let identity = (2.0f64).powi(-(n as i32)) + b.norm_squared() / 2.0;
                assert_abs_diff_eq!(purity, identity, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn expectation_examples_and_dense_oracle() {
        let up = BlochVector::new(1, DVector::from_vec(vec![0.0, 0.0, 1.0])).unwrap();
        let z = Observable::new(1, DVector::from_vec(vec![0.0, 0.0, 1.0])).unwrap();
        assert_abs_diff_eq!(expectation(&up, &z).unwrap(), 1.0, epsilon = 1e-14);

        let origin = BlochVector::zeros(1).unwrap();
        assert_abs_diff_eq!(expectation(&origin, &z).unwrap(), 0.0, epsilon = 1e-14);

        // Random (theta, x) pairs against the dense-trace oracle.
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for n in 1..=3 {
            for _ in 0..100 {
                let rho = random_density(n, &mut rng);
                let theta = bloch_from_density(&rho).unwrap();
                let coeffs = DVector::from_fn(basis_len(n), |_, _| {
                    let v: f64 = StandardNormal.sample(&mut rng);
                    v
                });
                let obs = Observable::new(n, coeffs).unwrap();
                let direct = (rho * obs.matrix()).trace().re;
                assert_abs_diff_eq!(
                    expectation(&theta, &obs).unwrap(),
                    direct,
                    epsilon = 1e-12 * (1.0 + direct.abs())
                );
            }
        }
    }

    #[test]
    fn single_z_preset() {
        let obs = Observable::single_z(2).unwrap();
        assert_eq!(obs.norm(), 1.0);
        let m = obs.matrix();
        let p = PauliString::new(2, 0b1100).unwrap();
        assert_eq!(p.label(), "ZI");
        assert!((m - p.matrix()).norm() < 1e-14);
    }

    #[test]
    fn validation_errors() {
        let bad = DMatrix::from_row_slice(2, 2, &[c(1., 0.), c(1., 0.), c(0., 0.), c(0., 0.)]);
        assert!(matches!(
            bloch_from_density(&bad),
            Err(Error::Validation(_))
        ));

        let rect = DMatrix::<Complex64>::zeros(2, 3);
        assert!(bloch_from_density(&rect).is_err());

        let theta = DVector::zeros(7);
        assert!(matches!(
            BlochVector::new(2, theta),
            Err(Error::DimensionMismatch { .. })
        ));

        let b1 = BlochVector::zeros(1).unwrap();
        let o2 = Observable::single_z(2).unwrap();
        assert!(expectation(&b1, &o2).is_err());
    }
}
