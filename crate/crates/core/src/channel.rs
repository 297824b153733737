//! Quantum channels as Pauli transfer matrices and signed-weight Kraus sets.
//!
//! A channel is stored as its full `4^n x 4^n` transfer matrix `T` in the
//! normalized Pauli basis (`T_ij = 2^-n tr[P_i E(P_j)]`, index 0 = identity).
//! The unital block `A = T[1:,1:]` and the translation column give the affine
//! action `theta -> A theta + c` on Bloch vectors. The module also provides
//! the channel metrics driving the cost bounds: the noise strength Γ (inverse
//! spectral norm of `A`), the β margin (distance of every output from the
//! boundary of the state body), and the inverse-map metrics ν and η.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optim::{nelder_mead, NelderMeadOptions};
use crate::pauli::{basis_len, dim, min_eigenvalue, BlochVector, PauliString};

fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Full Pauli transfer matrix in the normalized Pauli basis.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferMap {
    n: usize,
    full: DMatrix<f64>,
}

impl TransferMap {
    pub fn from_full(n: usize, full: DMatrix<f64>) -> Result<Self> {
        let side = 1 << (2 * n);
        if full.nrows() != side || full.ncols() != side {
            return Err(Error::DimensionMismatch {
                context: "TransferMap",
                expected: side,
                actual: full.nrows(),
            });
        }
        Ok(Self { n, full })
    }

    pub fn identity(n: usize) -> Self {
        let side = 1 << (2 * n);
        Self {
            n,
            full: DMatrix::identity(side, side),
        }
    }

    /// Build from the affine Bloch action `theta -> a theta + c`.
    pub fn from_bloch_affine(n: usize, a: &DMatrix<f64>, c: &DVector<f64>) -> Result<Self> {
        let m = basis_len(n);
        if a.nrows() != m || a.ncols() != m || c.len() != m {
            return Err(Error::DimensionMismatch {
                context: "from_bloch_affine",
                expected: m,
                actual: a.nrows(),
            });
        }
        let mut full = DMatrix::zeros(m + 1, m + 1);
        full[(0, 0)] = 1.0;
        let col_scale = (2.0f64).powf((n as f64 - 1.0) / 2.0);
        for i in 0..m {
            full[(i + 1, 0)] = col_scale * c[i];
            for j in 0..m {
                full[(i + 1, j + 1)] = a[(i, j)];
            }
        }
        Ok(Self { n, full })
    }

    /// `T_ij = 2^-n tr[P_i E(P_j)]` with `E` given by a Kraus set.
    pub fn from_kraus(ch: &KrausChannel) -> Self {
        let n = ch.n;
        let d = dim(n);
        let side = 1 << (2 * n);
        let scale = 1.0 / d as f64;
        let adjoints: Vec<DMatrix<Complex64>> = ch.ops.iter().map(|k| k.adjoint()).collect();
        let mut full = DMatrix::zeros(side, side);
        for j in 0..side {
            let pj = PauliString::new(n, j).expect("valid code");
            let image = if j == 0 {
                let mut acc = DMatrix::zeros(d, d);
                for (op, (adj, &w)) in ch.ops.iter().zip(adjoints.iter().zip(&ch.weights)) {
                    acc += (op * adj) * c64(w, 0.0);
                }
                acc
            } else {
                let mut acc = DMatrix::zeros(d, d);
                for (op, (adj, &w)) in ch.ops.iter().zip(adjoints.iter().zip(&ch.weights)) {
                    acc += (op * pj.mul_left(adj)) * c64(w, 0.0);
                }
                acc
            };
            for i in 0..side {
                let pi = PauliString::new(n, i).expect("valid code");
                full[(i, j)] = scale * pi.trace_with(&image).re;
            }
        }
        Self { n, full }
    }

    pub fn from_unitary(n: usize, u: &DMatrix<Complex64>) -> Self {
        Self::from_kraus(&KrausChannel::unitary(n, u.clone()))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn full(&self) -> &DMatrix<f64> {
        &self.full
    }

    pub fn side(&self) -> usize {
        self.full.nrows()
    }

    /// Unital block `A = T[1:,1:]`.
    pub fn unital_part(&self) -> DMatrix<f64> {
        let m = self.side() - 1;
        self.full.view((1, 1), (m, m)).into_owned()
    }

    /// Bloch translation `c`; `c_i = 2^((1-n)/2) T_{i0}`.
    pub fn translation(&self) -> DVector<f64> {
        let m = self.side() - 1;
        let scale = (2.0f64).powf((1.0 - self.n as f64) / 2.0);
        DVector::from_fn(m, |i, _| scale * self.full[(i + 1, 0)])
    }

    /// Raw first column below the identity row (the same data as
    /// [`translation`](Self::translation) without the Bloch normalization).
    pub fn translation_column(&self) -> DVector<f64> {
        let m = self.side() - 1;
        DVector::from_fn(m, |i, _| self.full[(i + 1, 0)])
    }

    /// Apply `other` first, then `self`.
    pub fn compose(&self, other: &TransferMap) -> Result<TransferMap> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                context: "compose",
                expected: self.n,
                actual: other.n,
            });
        }
        Ok(TransferMap {
            n: self.n,
            full: &self.full * &other.full,
        })
    }

    /// Tensor product; `self` covers the leading (most significant) qubits.
    pub fn tensor(&self, other: &TransferMap) -> TransferMap {
        TransferMap {
            n: self.n + other.n,
            full: self.full.kronecker(&other.full),
        }
    }

    /// Inverse map. Fails when the channel is not injective.
    pub fn inverse(&self) -> Result<TransferMap> {
        let svd = self.full.clone().svd(false, false);
        let max = svd.singular_values.max();
        let min = svd.singular_values.min();
        if min <= 1e-12 * max.max(1.0) {
            return Err(Error::NonInvertible {
                smallest_singular_value: min,
            });
        }
        let inv = self
            .full
            .clone()
            .try_inverse()
            .ok_or(Error::NonInvertible {
                smallest_singular_value: min,
            })?;
        Ok(TransferMap { n: self.n, full: inv })
    }

    pub fn is_trace_preserving(&self, tol: f64) -> bool {
        let ok0 = (self.full[(0, 0)] - 1.0).abs() <= tol;
        ok0 && (1..self.side()).all(|j| self.full[(0, j)].abs() <= tol)
    }

    pub fn is_unital(&self, tol: f64) -> bool {
        (1..self.side()).all(|i| self.full[(i, 0)].abs() <= tol)
    }

    pub fn is_cptp(&self, tol: f64) -> bool {
        self.is_trace_preserving(tol.max(1e-10)) && min_eigenvalue(&self.choi()) >= -tol
    }

    /// Affine Bloch action `A theta + c`.
    pub fn apply_bloch(&self, theta: &BlochVector) -> Result<BlochVector> {
        if theta.n() != self.n {
            return Err(Error::DimensionMismatch {
                context: "apply_bloch",
                expected: self.n,
                actual: theta.n(),
            });
        }
        let out = self.unital_part() * theta.coords() + self.translation();
        BlochVector::new(self.n, out)
    }

    /// Apply the channel to a Hermitian operator via its Pauli coefficients.
    pub fn apply_density(&self, rho: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
        let d = dim(self.n);
        if rho.nrows() != d || rho.ncols() != d {
            return Err(Error::DimensionMismatch {
                context: "apply_density",
                expected: d,
                actual: rho.nrows(),
            });
        }
        let side = self.side();
        let norm = 1.0 / (d as f64).sqrt();
        let mut coeffs = DVector::zeros(side);
        for code in 0..side {
            let p = PauliString::new(self.n, code).expect("valid code");
            coeffs[code] = norm * p.trace_with(rho).re;
        }
        let out = &self.full * coeffs;
        let mut result = DMatrix::zeros(d, d);
        for code in 0..side {
            if out[code] != 0.0 {
                let p = PauliString::new(self.n, code).expect("valid code");
                result += p.matrix() * c64(norm * out[code], 0.0);
            }
        }
        Ok(result)
    }

    /// Choi operator `(E ⊗ id)(|Γ><Γ|)` with the unnormalized maximally
    /// entangled pair, assembled from the transfer matrix.
    pub fn choi(&self) -> DMatrix<Complex64> {
        let d = dim(self.n);
        let side = self.side();
        let scale = 1.0 / d as f64;
        let mut m = DMatrix::zeros(d * d, d * d);
        for j in 0..side {
            let pj = PauliString::new(self.n, j).expect("valid code");
            let pj_m = pj.matrix();
            for k in 0..side {
                let t = self.full[(j, k)];
                if t == 0.0 {
                    continue;
                }
                let pk = PauliString::new(self.n, k).expect("valid code");
                let pk_m = pk.matrix();
                // M += (T_jk / d) P_j ⊗ P_k^T, written entrywise over the
                // single nonzero of each Pauli column.
                for c1 in 0..d {
                    for r2 in 0..d {
                        // row index pair (r1, r2), column pair (c1, c2)
                        let mut r1 = 0;
                        let mut v1 = c64(0.0, 0.0);
                        for r in 0..d {
                            let v = pj_m[(r, c1)];
                            if v != c64(0.0, 0.0) {
                                r1 = r;
                                v1 = v;
                                break;
                            }
                        }
                        let mut c2 = 0;
                        let mut v2 = c64(0.0, 0.0);
                        for cc in 0..d {
                            let v = pk_m[(cc, r2)];
                            if v != c64(0.0, 0.0) {
                                c2 = cc;
                                v2 = v;
                                break;
                            }
                        }
                        m[(r1 * d + r2, c1 * d + c2)] += v1 * v2 * scale * t;
                    }
                }
            }
        }
        m
    }

    /// `Γ = 1 / ||A||` with the spectral norm of the unital block.
    pub fn noise_strength(&self) -> f64 {
        let a = self.unital_part();
        let svd = a.svd(false, false);
        1.0 / svd.singular_values.max()
    }

    /// Write the full matrix as row-major CSV at 17 significant digits.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        for i in 0..self.side() {
            let row: Vec<String> = (0..self.side())
                .map(|j| format!("{:.16e}", self.full[(i, j)]))
                .collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// `ν(E) = ||T||_F^2 / d^2`; equals `tr[Choi(E)^2] / d^2` in the normalized
/// Pauli basis. Usually evaluated on inverse maps.
pub fn nu(map: &TransferMap) -> f64 {
    let d2 = map.side() as f64;
    map.full().norm_squared() / d2
}

/// ν via the Choi-square route; kept as an independent oracle for
/// [`nu`].
pub fn nu_choi_route(map: &TransferMap) -> f64 {
    let choi = map.choi();
    let d2 = map.side() as f64;
    (&choi * &choi).trace().re / d2
}

/// `η(E) = tr[(E(I))^2] / d^2`.
pub fn eta(map: &TransferMap) -> f64 {
    let d = dim(map.n()) as f64;
    let col0_sq: f64 = (0..map.side()).map(|i| map.full()[(i, 0)].powi(2)).sum();
    col0_sq / d
}

/// Kraus representation with signed weights; weights other than +1 encode
/// Hermiticity-preserving maps such as channel inverses.
#[derive(Debug, Clone)]
pub struct KrausChannel {
    n: usize,
    ops: Vec<DMatrix<Complex64>>,
    weights: Vec<f64>,
    cptp: bool,
}

impl KrausChannel {
    pub fn new(n: usize, ops: Vec<DMatrix<Complex64>>, weights: Vec<f64>) -> Result<Self> {
        let d = dim(n);
        if ops.is_empty() || ops.len() != weights.len() {
            return Err(Error::Validation(
                "Kraus operators and weights must be non-empty and matched".into(),
            ));
        }
        if ops.iter().any(|k| k.nrows() != d || k.ncols() != d) {
            return Err(Error::DimensionMismatch {
                context: "KrausChannel",
                expected: d,
                actual: ops[0].nrows(),
            });
        }
        let cptp = weights.iter().all(|&w| w > 0.0);
        Ok(Self {
            n,
            ops,
            weights,
            cptp,
        })
    }

    pub fn cptp(n: usize, ops: Vec<DMatrix<Complex64>>) -> Result<Self> {
        let weights = vec![1.0; ops.len()];
        Self::new(n, ops, weights)
    }

    pub fn unitary(n: usize, u: DMatrix<Complex64>) -> Self {
        Self {
            n,
            ops: vec![u],
            weights: vec![1.0],
            cptp: true,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn ops(&self) -> &[DMatrix<Complex64>] {
        &self.ops
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn claims_cptp(&self) -> bool {
        self.cptp
    }

    /// `Σ w_i K_i ρ K_i†`.
    pub fn apply(&self, rho: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let d = dim(self.n);
        let mut out = DMatrix::zeros(d, d);
        for (op, &w) in self.ops.iter().zip(&self.weights) {
            out += (op * rho * op.adjoint()) * c64(w, 0.0);
        }
        out
    }

    /// `Σ w_i K_i† K_i`, the trace-preservation witness.
    pub fn completeness(&self) -> DMatrix<Complex64> {
        let d = dim(self.n);
        let mut out = DMatrix::zeros(d, d);
        for (op, &w) in self.ops.iter().zip(&self.weights) {
            out += (op.adjoint() * op) * c64(w, 0.0);
        }
        out
    }

    /// Choi operator `Σ w_i |K_i>><<K_i|` with row-major vectorization.
    pub fn choi(&self) -> DMatrix<Complex64> {
        let d = dim(self.n);
        let mut m = DMatrix::zeros(d * d, d * d);
        for (op, &w) in self.ops.iter().zip(&self.weights) {
            let v = DVector::from_fn(d * d, |i, _| op[(i / d, i % d)]);
            m += (&v * v.adjoint()) * c64(w, 0.0);
        }
        m
    }

    /// Trace preservation to `tol` and complete positivity of the Choi
    /// operator to `-tol`.
    pub fn is_cptp(&self, tol: f64) -> bool {
        let d = dim(self.n);
        let defect = (self.completeness() - DMatrix::<Complex64>::identity(d, d)).norm();
        defect <= tol && min_eigenvalue(&self.choi()) >= -tol
    }

    /// Tensor product; `self` covers the leading qubits.
    pub fn tensor(&self, other: &KrausChannel) -> KrausChannel {
        let mut ops = Vec::with_capacity(self.ops.len() * other.ops.len());
        let mut weights = Vec::with_capacity(ops.capacity());
        for (a, &wa) in self.ops.iter().zip(&self.weights) {
            for (b, &wb) in other.ops.iter().zip(&other.weights) {
                ops.push(a.kronecker(b));
                weights.push(wa * wb);
            }
        }
        KrausChannel {
            n: self.n + other.n,
            ops,
            weights,
            cptp: self.cptp && other.cptp,
        }
    }
}

/// Signed-weight Kraus set from the Choi eigendecomposition. Weights are all
/// +1 exactly when the Choi operator is PSD.
pub fn kraus_from_ptm(map: &TransferMap) -> Result<KrausChannel> {
    let d = dim(map.n());
    let choi = map.choi();
    if (&choi - choi.adjoint()).norm() > 1e-9 * choi.norm().max(1.0) {
        return Err(Error::Validation(
            "transfer matrix is not Hermiticity-preserving (Choi not Hermitian)".into(),
        ));
    }
    let eig = choi.symmetric_eigen();
    let mut ops = Vec::new();
    let mut weights = Vec::new();
    let scale = eig.eigenvalues.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    for (idx, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda.abs() <= 1e-12 * scale.max(1.0) {
            continue;
        }
        let v = eig.eigenvectors.column(idx);
        let s = lambda.abs().sqrt();
        let k = DMatrix::from_fn(d, d, |r, c| v[r * d + c] * s);
        ops.push(k);
        weights.push(lambda.signum());
    }
    KrausChannel::new(map.n(), ops, weights)
}

/// The four built-in noise families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseKind {
    GlobalDepolarizing,
    LocalDepolarizing,
    LocalDephasing,
    AmplitudeDamping,
}

impl NoiseKind {
    pub fn label(&self) -> &'static str {
        match self {
            NoiseKind::GlobalDepolarizing => "global-depolarizing",
            NoiseKind::LocalDepolarizing => "local-depolarizing",
            NoiseKind::LocalDephasing => "local-dephasing",
            NoiseKind::AmplitudeDamping => "amplitude-damping",
        }
    }
}

impl std::str::FromStr for NoiseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "global-depolarizing" | "global-dep" => Ok(NoiseKind::GlobalDepolarizing),
            "local-depolarizing" | "local-dep" => Ok(NoiseKind::LocalDepolarizing),
            "local-dephasing" | "dephasing" => Ok(NoiseKind::LocalDephasing),
            "amplitude-damping" | "amp-damping" => Ok(NoiseKind::AmplitudeDamping),
            other => Err(Error::Validation(format!("unknown noise kind '{other}'"))),
        }
    }
}

/// A per-layer noise channel: one of the built-in families at rate `p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub kind: NoiseKind,
    pub n: usize,
    pub p: f64,
}

impl NoiseModel {
    pub fn new(kind: NoiseKind, n: usize, p: f64) -> Result<Self> {
        if n == 0 || n > crate::pauli::MAX_QUBITS {
            return Err(Error::SizeOutOfRange {
                n,
                max: crate::pauli::MAX_QUBITS,
            });
        }
        if !(0.0..1.0).contains(&p) {
            return Err(Error::Validation(format!(
                "error rate p = {p} must lie in [0, 1)"
            )));
        }
        Ok(Self { kind, n, p })
    }

    pub fn is_unital(&self) -> bool {
        !matches!(self.kind, NoiseKind::AmplitudeDamping)
    }

    /// Closed-form β where the worst case is known; `None` means numeric
    /// minimization is required.
    pub fn beta_analytic(&self) -> Option<f64> {
        match self.kind {
            NoiseKind::GlobalDepolarizing => Some(self.p),
            // Dephasing fixes the computational axis and amplitude damping
            // fixes |0...0>, so some pure input stays rank-deficient.
            NoiseKind::LocalDephasing | NoiseKind::AmplitudeDamping => Some(0.0),
            NoiseKind::LocalDepolarizing => {
                if self.n == 1 {
                    Some(self.p)
                } else {
                    None
                }
            }
        }
    }

    /// Single-qubit factor of the local models.
    pub fn single_qubit_kraus(&self) -> Result<KrausChannel> {
        let p = self.p;
        let eye = DMatrix::<Complex64>::identity(2, 2);
        let x = PauliString::new(1, 1)?.matrix();
        let y = PauliString::new(1, 2)?.matrix();
        let z = PauliString::new(1, 3)?.matrix();
        match self.kind {
            NoiseKind::LocalDepolarizing => KrausChannel::new(
                1,
                vec![
                    eye * c64((1.0 - 0.75 * p).sqrt(), 0.0),
                    x * c64((0.25 * p).sqrt(), 0.0),
                    y * c64((0.25 * p).sqrt(), 0.0),
                    z * c64((0.25 * p).sqrt(), 0.0),
                ],
                vec![1.0; 4],
            ),
            NoiseKind::LocalDephasing => KrausChannel::new(
                1,
                vec![
                    eye * c64((1.0 - 0.5 * p).sqrt(), 0.0),
                    z * c64((0.5 * p).sqrt(), 0.0),
                ],
                vec![1.0; 2],
            ),
            NoiseKind::AmplitudeDamping => {
                let mut e1 = DMatrix::zeros(2, 2);
                e1[(0, 0)] = c64(1.0, 0.0);
                e1[(1, 1)] = c64((1.0 - p).sqrt(), 0.0);
                let mut e2 = DMatrix::zeros(2, 2);
                e2[(0, 1)] = c64(p.sqrt(), 0.0);
                KrausChannel::new(1, vec![e1, e2], vec![1.0; 2])
            }
            NoiseKind::GlobalDepolarizing => Err(Error::Validation(
                "global depolarizing has no single-qubit factor for n > 1".into(),
            )),
        }
    }

    /// Full layer Kraus set (local models tensored across the register).
    pub fn kraus(&self) -> Result<KrausChannel> {
        match self.kind {
            NoiseKind::GlobalDepolarizing => {
                let side = 1 << (2 * self.n);
                let w0 = 1.0 - self.p + self.p / side as f64;
                let wi = self.p / side as f64;
                let mut ops = Vec::with_capacity(side);
                for code in 0..side {
                    let w = if code == 0 { w0 } else { wi };
                    ops.push(PauliString::new(self.n, code)?.matrix() * c64(w.sqrt(), 0.0));
                }
                KrausChannel::new(self.n, ops, vec![1.0; side])
            }
            _ => {
                let single = self.single_qubit_kraus()?;
                let mut acc = single.clone();
                for _ in 1..self.n {
                    acc = acc.tensor(&single);
                }
                Ok(acc)
            }
        }
    }

    /// Full layer transfer matrix.
    pub fn transfer_map(&self) -> Result<TransferMap> {
        match self.kind {
            NoiseKind::GlobalDepolarizing => {
                let side = 1 << (2 * self.n);
                let mut full = DMatrix::identity(side, side) * (1.0 - self.p);
                full[(0, 0)] = 1.0;
                TransferMap::from_full(self.n, full)
            }
            _ => {
                let single = TransferMap::from_kraus(&self.single_qubit_kraus()?);
                let mut acc = single.clone();
                for _ in 1..self.n {
                    acc = acc.tensor(&single);
                }
                Ok(acc)
            }
        }
    }
}

/// Result of the β-margin search: the margin and the pure state achieving it.
#[derive(Debug, Clone)]
pub struct BetaMargin {
    pub beta: f64,
    pub worst_state: DVector<Complex64>,
}

/// Options for the multi-start β minimization.
#[derive(Debug, Clone, Copy)]
pub struct BetaOptions {
    pub restarts: usize,
    pub nm: NelderMeadOptions,
}

impl Default for BetaOptions {
    fn default() -> Self {
        Self {
            restarts: 32,
            nm: NelderMeadOptions {
                max_iters: 4000,
                f_tol: 1e-12,
                x_tol: 1e-8,
            },
        }
    }
}

fn ket_from_params(params: &[f64]) -> Option<DVector<Complex64>> {
    let d = params.len() / 2;
    let v = DVector::from_fn(d, |i, _| c64(params[2 * i], params[2 * i + 1]));
    let norm = v.norm();
    if norm < 1e-8 {
        return None;
    }
    Some(v / c64(norm, 0.0))
}

fn min_eig_vec(m: &DMatrix<Complex64>) -> (f64, DVector<Complex64>) {
    let eig = m.clone().symmetric_eigen();
    let mut idx = 0;
    for i in 1..eig.eigenvalues.len() {
        if eig.eigenvalues[i] < eig.eigenvalues[idx] {
            idx = i;
        }
    }
    (eig.eigenvalues[idx], eig.eigenvectors.column(idx).into_owned())
}

/// Largest β with `E(rho) - β I / 2^n >= 0` for all states. The minimum of
/// the output's smallest eigenvalue over states is attained on pure states
/// (the smallest eigenvalue is concave), so the search runs over the
/// pure-state manifold with `opts.restarts` random starts.
///
/// Fails with [`Error::RankDeficientOutput`] when the margin is below 1e-9.
pub fn beta_margin<R: Rng + ?Sized>(
    map: &TransferMap,
    opts: BetaOptions,
    rng: &mut R,
) -> Result<BetaMargin> {
    let n = map.n();
    let d = dim(n);
    if !map.is_trace_preserving(1e-8) {
        return Err(Error::Validation(
            "beta margin requires a trace-preserving channel".into(),
        ));
    }
    let adjoint = TransferMap::from_full(n, map.full().transpose())?;

    // Alternating eigenvector descent on g(psi, phi) = <phi|E(psi psi†)|phi>:
    // each half-step is an exact argmin, so the value decreases
    // monotonically toward min_psi λ_min(E(psi psi†)).
    let descend = |start: DVector<Complex64>| -> Result<(f64, DVector<Complex64>)> {
        let mut psi = start;
        let mut prev = f64::INFINITY;
        for _ in 0..200 {
            let out = map.apply_density(&(&psi * psi.adjoint()))?;
            let (_, phi) = min_eig_vec(&out);
            let back = adjoint.apply_density(&(&phi * phi.adjoint()))?;
            let (val, psi_new) = min_eig_vec(&back);
            psi = psi_new;
            if prev - val < 1e-14 {
                break;
            }
            prev = val;
        }
        let final_val = min_eigenvalue(&map.apply_density(&(&psi * psi.adjoint()))?);
        Ok((final_val, psi))
    };

    let mut best_val = f64::INFINITY;
    let mut best_psi = DVector::zeros(d);
    for _ in 0..opts.restarts.max(1) {
        let raw = DVector::from_fn(d, |_, _| {
            c64(StandardNormal.sample(rng), StandardNormal.sample(rng))
        });
        let norm = raw.norm();
        let (val, psi) = descend(raw / c64(norm, 0.0))?;
        if val < best_val {
            best_val = val;
            best_psi = psi;
        }
    }

    // Derivative-free polish around the best candidate.
    let objective = |params: &[f64]| -> f64 {
        match ket_from_params(params) {
            Some(ket) => {
                let rho = &ket * ket.adjoint();
                match map.apply_density(&rho) {
                    Ok(out) => min_eigenvalue(&out),
                    Err(_) => f64::INFINITY,
                }
            }
            None => f64::INFINITY,
        }
    };
    let start: Vec<f64> = (0..d).flat_map(|i| [best_psi[i].re, best_psi[i].im]).collect();
    let (x, v) = nelder_mead(objective, &start, 0.05, opts.nm);
    if v < best_val {
        best_val = v;
        best_psi = ket_from_params(&x)
            .ok_or_else(|| Error::NonConvergence("beta polish degenerated".into()))?;
    }

    let beta = (d as f64 * best_val).max(0.0);
    if beta <= 1e-9 {
        return Err(Error::RankDeficientOutput { beta });
    }
    Ok(BetaMargin {
        beta,
        worst_state: best_psi,
    })
}

/// β for a built-in model: analytic value where known, numeric search
/// otherwise.
pub fn beta_for_model<R: Rng + ?Sized>(
    model: &NoiseModel,
    opts: BetaOptions,
    rng: &mut R,
) -> Result<f64> {
    if let Some(beta) = model.beta_analytic() {
        if beta <= 1e-9 {
            return Err(Error::RankDeficientOutput { beta });
        }
        return Ok(beta);
    }
    Ok(beta_margin(&model.transfer_map()?, opts, rng)?.beta)
}

/// Random CPTP channel from a Haar-like isometry: Ginibre blocks orthonormalized
/// so that `Σ K† K = I`.
pub fn random_cptp_kraus<R: Rng + ?Sized>(n: usize, num_ops: usize, rng: &mut R) -> KrausChannel {
    let d = dim(n);
    let blocks: Vec<DMatrix<Complex64>> = (0..num_ops.max(1))
        .map(|_| {
            DMatrix::from_fn(d, d, |_, _| {
                c64(StandardNormal.sample(rng), StandardNormal.sample(rng))
            })
        })
        .collect();
    let mut gram = DMatrix::zeros(d, d);
    for b in &blocks {
        gram += b.adjoint() * b;
    }
    // gram^(-1/2) via the Hermitian eigendecomposition.
    let eig = gram.symmetric_eigen();
    let mut inv_sqrt = DMatrix::zeros(d, d);
    for (idx, &lambda) in eig.eigenvalues.iter().enumerate() {
        let v = eig.eigenvectors.column(idx);
        inv_sqrt += (v * v.adjoint()) * c64(1.0 / lambda.max(1e-300).sqrt(), 0.0);
    }
    let ops: Vec<DMatrix<Complex64>> = blocks.into_iter().map(|b| b * &inv_sqrt).collect();
    KrausChannel::cptp(n, ops).expect("dimensions are consistent")
}
