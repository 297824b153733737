//! SLD quantum Fisher information over the Bloch chart.
//!
//! The estimation parameters are always the noiseless Bloch coordinates
//! `theta`; the state under measurement is `E'(rho(theta))`, so the
//! parameter derivatives are the channel images of the Pauli directions.
//! The Fisher matrix feeds the Cramér–Rao bound
//! `Var >= (2^(n-1)/N) x^T J^{-1} x`, which the noise-absorbing observable
//! `Y = (A^{-1})^T x . P + offset` saturates whenever the unital block is
//! invertible.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::channel::TransferMap;
use crate::error::{Error, Result};
use crate::pauli::{basis_len, density_from_bloch, dim, BlochVector, Observable, PauliString};

/// Eigenvalue-pair cutoff below which the SLD sum treats a mode as absent.
const RANK_CUTOFF: f64 = 1e-12;
/// Derivative mass allowed inside the cut modes before the information is
/// declared divergent.
const KERNEL_TOL: f64 = 1e-9;

fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Symmetric PSD Fisher matrix over the nontrivial Pauli directions.
#[derive(Debug, Clone)]
pub struct QfiMatrix {
    n: usize,
    j: DMatrix<f64>,
}

impl QfiMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.j
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.j
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.j
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min)
    }
}

/// SLD Fisher matrix of `E'(rho(theta))` with respect to `theta`.
///
/// Eigen-decomposes the output state and accumulates
/// `J_ij = 2 Σ Re[<a|D_i|b><b|D_j|a>]/(λ_a + λ_b)` over eigenpairs above the
/// rank cutoff, where `D_i` is the channel image of the i-th Pauli
/// direction. Returns [`Error::DivergentInformation`] when a cut mode still
/// carries derivative weight (the rank-deficiency failure surface).
pub fn qfi_bloch(eff: &TransferMap, theta: &BlochVector) -> Result<QfiMatrix> {
    let n = eff.n();
    if theta.n() != n {
        return Err(Error::DimensionMismatch {
            context: "qfi_bloch",
            expected: n,
            actual: theta.n(),
        });
    }
    let d = dim(n);
    let m = basis_len(n);
    let rho_out = eff.apply_density(&density_from_bloch(theta))?;
    let eig = rho_out.symmetric_eigen();
    let lambda = &eig.eigenvalues;
    let v = &eig.eigenvectors;

    // D_i = 2^((-1-n)/2) Σ_j A_ji P_j, rotated into the eigenbasis.
    let a = eff.unital_part();
    let scale = (2.0f64).powf(-(1.0 + n as f64) / 2.0);
    let mut rotated: Vec<DMatrix<Complex64>> = Vec::with_capacity(m);
    for i in 0..m {
        let mut di = DMatrix::<Complex64>::zeros(d, d);
        for j in 0..m {
            let aji = a[(j, i)];
            if aji != 0.0 {
                let p = PauliString::new(n, j + 1)?;
                di += p.matrix() * c64(scale * aji, 0.0);
            }
        }
        rotated.push(v.adjoint() * di * v);
    }

    // W_i[a,b] = D̃_i[a,b] / sqrt(λ_a + λ_b) on the retained modes.
    let mut weights = DMatrix::<f64>::zeros(d, d);
    let mut cut = Vec::new();
    for r in 0..d {
        for col in 0..d {
            let s = lambda[r].max(0.0) + lambda[col].max(0.0);
            if s > RANK_CUTOFF {
                weights[(r, col)] = 1.0 / s.sqrt();
            } else {
                cut.push((r, col));
            }
        }
    }
    if !cut.is_empty() {
        for di in &rotated {
            for &(r, col) in &cut {
                if di[(r, col)].norm() > KERNEL_TOL {
                    return Err(Error::DivergentInformation);
                }
            }
        }
    }

    let w: Vec<DMatrix<Complex64>> = rotated
        .into_iter()
        .map(|di| {
            DMatrix::from_fn(d, d, |r, col| di[(r, col)] * c64(weights[(r, col)], 0.0))
        })
        .collect();

    let mut j = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        for k in i..m {
            let mut acc = 0.0;
            for r in 0..d {
                for col in 0..d {
                    acc += (w[i][(r, col)] * w[k][(r, col)].conj()).re;
                }
            }
            j[(i, k)] = 2.0 * acc;
            j[(k, i)] = 2.0 * acc;
        }
    }
    Ok(QfiMatrix { n, j })
}

/// Quantum Cramér–Rao variance lower bound `(2^(n-1)/copies) x^T J^{-1} x`.
pub fn cr_bound(j: &QfiMatrix, obs: &Observable, copies: f64) -> Result<f64> {
    if obs.n() != j.n {
        return Err(Error::DimensionMismatch {
            context: "cr_bound",
            expected: j.n,
            actual: obs.n(),
        });
    }
    if copies <= 0.0 {
        return Err(Error::Validation("copies must be positive".into()));
    }
    let eig = j.j.clone().symmetric_eigen();
    let max = eig.eigenvalues.iter().cloned().fold(0.0f64, f64::max);
    let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    if min <= 1e-12 * max.max(1.0) {
        return Err(Error::SingularInformation {
            min_eigenvalue: min,
        });
    }
    // x^T J^{-1} x through the eigenbasis.
    let mut quad = 0.0;
    for (idx, &lam) in eig.eigenvalues.iter().enumerate() {
        let proj = eig.eigenvectors.column(idx).dot(obs.coeffs());
        quad += proj * proj / lam;
    }
    Ok((2.0f64).powi(j.n as i32 - 1) / copies * quad)
}

/// Traceless observable plus an identity offset, as produced by
/// [`optimal_observable`].
#[derive(Debug, Clone)]
pub struct OffsetObservable {
    pub offset: f64,
    pub observable: Observable,
}

impl OffsetObservable {
    pub fn matrix(&self) -> DMatrix<Complex64> {
        let d = dim(self.observable.n());
        self.observable.matrix() + DMatrix::identity(d, d) * c64(self.offset, 0.0)
    }
}

/// The observable measured after the noise that reproduces the noiseless
/// expectation: `Y = (-2^((n-1)/2) (A^{-1})^T x . c) I + (A^{-1})^T x . P`.
/// Its variance on the noisy state saturates [`cr_bound`].
pub fn optimal_observable(noise: &TransferMap, obs: &Observable) -> Result<OffsetObservable> {
    let n = noise.n();
    if obs.n() != n {
        return Err(Error::DimensionMismatch {
            context: "optimal_observable",
            expected: n,
            actual: obs.n(),
        });
    }
    let a = noise.unital_part();
    let svd = a.clone().svd(false, false);
    let smin = svd.singular_values.min();
    if smin <= 1e-12 * svd.singular_values.max().max(1.0) {
        return Err(Error::NonInvertible {
            smallest_singular_value: smin,
        });
    }
    // y = (A^{-1})^T x, i.e. solve A^T y = x.
    let y = a
        .transpose()
        .lu()
        .solve(obs.coeffs())
        .ok_or(Error::NonInvertible {
            smallest_singular_value: smin,
        })?;
    let offset = -(2.0f64).powf((n as f64 - 1.0) / 2.0) * y.dot(&noise.translation());
    Ok(OffsetObservable {
        offset,
        observable: Observable::new(n, y)?,
    })
}

/// Scalar `b` with `J ⪯ b I` for the compiled circuit before measurement:
/// `2^(n-1) N margin^{-1} γ^{-2L}` where the margin is β, or
/// `1 - (1-β)^L` for unital layers.
pub fn qfi_layered_bound(
    n: usize,
    copies: f64,
    depth: usize,
    gamma: f64,
    beta: f64,
    unital: bool,
) -> Result<f64> {
    if !(0.0..1.0).contains(&beta) || beta == 0.0 {
        return Err(Error::RankDeficientOutput { beta });
    }
    if gamma < 1.0 || depth == 0 || copies <= 0.0 {
        return Err(Error::Validation(
            "need gamma >= 1, depth >= 1, copies > 0".into(),
        ));
    }
    let margin = if unital {
        -((depth as f64) * (1.0 - beta).ln()).exp_m1()
    } else {
        beta
    };
    Ok((2.0f64).powi(n as i32 - 1) * copies / margin
        * (-2.0 * depth as f64 * gamma.ln()).exp())
}

/// Variance `tr[rho op^2] - tr[rho op]^2` of a Hermitian operator.
pub fn variance(rho: &DMatrix<Complex64>, op: &DMatrix<Complex64>) -> f64 {
    let mean = (rho * op).trace().re;
    let second = (rho * op * op).trace().re;
    second - mean * mean
}

/// Hermitian PSD square root.
fn psd_sqrt(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let eig = m.clone().symmetric_eigen();
    let d = m.nrows();
    let mut out = DMatrix::zeros(d, d);
    for (idx, &lam) in eig.eigenvalues.iter().enumerate() {
        if lam > 0.0 {
            let v = eig.eigenvectors.column(idx);
            out += (v * v.adjoint()) * c64(lam.sqrt(), 0.0);
        }
    }
    out
}

/// Uhlmann fidelity `(tr sqrt(sqrt(a) b sqrt(a)))^2`.
pub fn fidelity(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    let sa = psd_sqrt(a);
    let inner = &sa * b * &sa;
    let eig = inner.symmetric_eigen();
    let root_sum: f64 = eig
        .eigenvalues
        .iter()
        .map(|&lam| lam.max(0.0).sqrt())
        .sum();
    root_sum * root_sum
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;
    use crate::channel::{
        kraus_from_ptm, random_cptp_kraus, KrausChannel, NoiseKind, NoiseModel,
    };
    use crate::pauli::bloch_from_density;
    use approx::assert_abs_diff_eq;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn model(kind: NoiseKind, n: usize, p: f64) -> NoiseModel {
        NoiseModel::new(kind, n, p).unwrap()
    }

    /// Bloch vector of `(1 - mix) I/d + mix * (random density)`: full rank
    /// for every mix < 1, physical for every n.
    fn random_interior_bloch(n: usize, mix: f64, rng: &mut ChaCha8Rng) -> BlochVector {
        use rand_distr::{Distribution, StandardNormal};
        let d = dim(n);
        let g = DMatrix::from_fn(d, d, |_, _| {
            Complex64::new(StandardNormal.sample(rng), StandardNormal.sample(rng))
        });
        let h = &g * g.adjoint();
        let tr = h.trace().re;
        let rho = h * Complex64::new(mix / tr, 0.0)
            + DMatrix::<Complex64>::identity(d, d) * Complex64::new((1.0 - mix) / d as f64, 0.0);
        bloch_from_density(&rho).unwrap()
    }

    #[test]
    fn depolarizing_closed_form_on_pure_axis() {
        let p = 0.15;
        let t = model(NoiseKind::GlobalDepolarizing, 1, p).transfer_map().unwrap();
        let theta = BlochVector::new(1, DVector::from_vec(vec![0.0, 0.0, 1.0])).unwrap();
        let j = qfi_bloch(&t, &theta).unwrap();
        let q = 1.0 - p;
        let expected = DMatrix::from_diagonal(&DVector::from_vec(vec![
            q * q,
            q * q,
            q * q / (1.0 - q * q),
        ]));
        assert!((j.matrix() - expected).norm() < 1e-9, "J = {}", j.matrix());
    }

    #[test]
    fn maximally_mixed_through_isotropic_channel() {
        // theta = 0 through A = alpha I: J = 2^(n-1) alpha^2 I, the value
        // consistent with the noiseless QCRB equality Var = (ΔX)^2.
        for n in 1..=2usize {
            let p = 0.2;
            let alpha = 1.0 - p;
            let t = model(NoiseKind::GlobalDepolarizing, n, p).transfer_map().unwrap();
            let theta = BlochVector::zeros(n).unwrap();
            let j = qfi_bloch(&t, &theta).unwrap();
            let expected = (2.0f64).powi(n as i32 - 1) * alpha * alpha;
            let m = basis_len(n);
            assert!(
                (j.matrix() - DMatrix::<f64>::identity(m, m) * expected).norm() < 1e-9,
                "n = {n}"
            );
        }
    }

    #[test]
    fn pure_state_through_identity_diverges() {
        let t = TransferMap::identity(1);
        let theta = BlochVector::new(1, DVector::from_vec(vec![0.0, 0.0, 1.0])).unwrap();
        assert!(matches!(
            qfi_bloch(&t, &theta),
            Err(Error::DivergentInformation)
        ));
    }

    #[test]
    fn cr_bound_equals_variance_on_noiseless_full_rank_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for n in 1..=2usize {
            let t = TransferMap::identity(n);
            for _ in 0..10 {
                let theta = random_interior_bloch(n, 0.6, &mut rng);
                let j = qfi_bloch(&t, &theta).unwrap();
                let coeffs = DVector::from_fn(basis_len(n), |_, _| rng.gen_range(-1.0..1.0));
                let obs = Observable::new(n, coeffs).unwrap();
                let bound = cr_bound(&j, &obs, 1.0).unwrap();
                let rho = density_from_bloch(&theta);
                let var = variance(&rho, &obs.matrix());
                assert_abs_diff_eq!(bound, var, epsilon = 1e-9 * (1.0 + var));
            }
        }
    }

    #[test]
    fn cr_bound_scales_inversely_with_copies() {
        let t = model(NoiseKind::GlobalDepolarizing, 1, 0.1).transfer_map().unwrap();
        let theta = BlochVector::new(1, DVector::from_vec(vec![0.0, 0.0, 0.7])).unwrap();
        let j = qfi_bloch(&t, &theta).unwrap();
        let obs = Observable::single_z(1).unwrap();
        let b1 = cr_bound(&j, &obs, 1.0).unwrap();
        let b2 = cr_bound(&j, &obs, 2.0).unwrap();
        assert_abs_diff_eq!(b2, b1 / 2.0, epsilon = 1e-14);
    }

    #[test]
    fn cr_bound_depolarizing_z_axis_example() {
        let p = 0.1;
        let t = model(NoiseKind::GlobalDepolarizing, 1, p).transfer_map().unwrap();
        let theta = BlochVector::new(1, DVector::from_vec(vec![0.0, 0.0, 1.0])).unwrap();
        let j = qfi_bloch(&t, &theta).unwrap();
        let obs = Observable::single_z(1).unwrap();
        let q = 1.0 - p;
        let expected = (1.0 - q * q) / (q * q);
        assert_abs_diff_eq!(cr_bound(&j, &obs, 1.0).unwrap(), expected, epsilon = 1e-9);
    }

    #[test]
    fn optimal_observable_examples() {
        let n = 1;
        let x = Observable::single_z(n).unwrap();

        let id = TransferMap::identity(n);
        let y = optimal_observable(&id, &x).unwrap();
        assert_abs_diff_eq!(y.offset, 0.0, epsilon = 1e-12);
        assert!((y.observable.coeffs() - x.coeffs()).norm() < 1e-12);

        let p = 0.2;
        let dep = model(NoiseKind::GlobalDepolarizing, n, p).transfer_map().unwrap();
        let y = optimal_observable(&dep, &x).unwrap();
        assert_abs_diff_eq!(y.offset, 0.0, epsilon = 1e-12);
        assert!((y.observable.coeffs() * (1.0 - p) - x.coeffs()).norm() < 1e-12);

        let ad = model(NoiseKind::AmplitudeDamping, n, p).transfer_map().unwrap();
        let y = optimal_observable(&ad, &x).unwrap();
        assert_abs_diff_eq!(y.offset, -p / (1.0 - p), epsilon = 1e-12);
        assert_abs_diff_eq!(y.observable.coeffs()[2], 1.0 / (1.0 - p), epsilon = 1e-12);

        // Singular unital block: the direction cannot be unwound.
        let mut twirl = DMatrix::<f64>::zeros(4, 4);
        twirl[(0, 0)] = 1.0;
        let t = TransferMap::from_full(1, twirl).unwrap();
        assert!(matches!(
            optimal_observable(&t, &x),
            Err(Error::NonInvertible { .. })
        ));
    }

    #[test]
    fn optimal_observable_absorbs_noise_on_random_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for kind in [
            NoiseKind::GlobalDepolarizing,
            NoiseKind::LocalDephasing,
            NoiseKind::AmplitudeDamping,
        ] {
            let n = 2;
            let t = model(kind, n, 0.17).transfer_map().unwrap();
            let x = Observable::single_z(n).unwrap();
            let y = optimal_observable(&t, &x).unwrap();
            for _ in 0..10 {
                let theta = random_interior_bloch(n, rng.gen_range(0.1..0.9), &mut rng);
                let rho = density_from_bloch(&theta);
                let noisy = t.apply_density(&rho).unwrap();
                let lhs = (rho * x.matrix()).trace().re;
                let rhs = (noisy * y.matrix()).trace().re;
                assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn saturation_identity_variance_equals_cr_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for kind in [NoiseKind::GlobalDepolarizing, NoiseKind::AmplitudeDamping] {
            let n = 1;
            let t = model(kind, n, 0.25).transfer_map().unwrap();
            let x = Observable::single_z(n).unwrap();
            let y = optimal_observable(&t, &x).unwrap();
            for _ in 0..10 {
                let theta = random_interior_bloch(n, rng.gen_range(0.2..0.9), &mut rng);
                let j = qfi_bloch(&t, &theta).unwrap();
                let bound = cr_bound(&j, &x, 1.0).unwrap();
                let noisy = t.apply_density(&density_from_bloch(&theta)).unwrap();
                let var_y = variance(&noisy, &y.matrix());
                assert_abs_diff_eq!(bound, var_y, epsilon = 1e-9 * (1.0 + var_y));
            }
        }
    }

    #[test]
    fn data_processing_monotonicity() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 1;
        let theta = random_interior_bloch(n, 0.5, &mut rng);
        let j_clean = qfi_bloch(&TransferMap::identity(n), &theta).unwrap();
        for _ in 0..10 {
            let ch = random_cptp_kraus(n, 2, &mut rng);
            let t = TransferMap::from_kraus(&ch);
            let out = t.apply_density(&density_from_bloch(&theta)).unwrap();
            if crate::pauli::min_eigenvalue(&out) < 1e-6 {
                continue;
            }
            let j_noisy = qfi_bloch(&t, &theta).unwrap();
            for _ in 0..50 {
                let v = DVector::from_fn(basis_len(n), |_, _| rng.gen_range(-1.0..1.0));
                let lhs = (j_noisy.matrix() * &v).dot(&v);
                let rhs = (j_clean.matrix() * &v).dot(&v);
                assert!(lhs <= rhs + 1e-8, "monotonicity violated: {lhs} > {rhs}");
            }
        }
    }

    #[test]
    fn single_layer_qfi_cap_dominates() {
        use crate::channel::{beta_margin, BetaOptions};
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let opts = BetaOptions {
            restarts: 12,
            ..Default::default()
        };
        for n in 1..=2usize {
            for _ in 0..20 {
                // Random CPTP blended with a strong twirl so beta > 1e-3.
                let raw = TransferMap::from_kraus(&random_cptp_kraus(n, 3, &mut rng));
                let w = rng.gen_range(0.05..0.4);
                let side = 1usize << (2 * n);
                let mut twirl = DMatrix::<f64>::zeros(side, side);
                twirl[(0, 0)] = 1.0;
                let full = raw.full() * (1.0 - w) + twirl * w;
                let t = TransferMap::from_full(n, full).unwrap();
                let beta = beta_margin(&t, opts, &mut rng).unwrap().beta;
                assert!(beta > 1e-3);
                let gamma = t.noise_strength();
                let bound = (2.0f64).powi(n as i32 - 1) / beta / (gamma * gamma);
                let theta = random_interior_bloch(n, rng.gen_range(0.2..0.95), &mut rng);
                let j = qfi_bloch(&t, &theta).unwrap();
                assert!(
                    j.max_eigenvalue() <= bound + 1e-8,
                    "n={n} J_max={} bound={bound}",
                    j.max_eigenvalue()
                );
            }
        }
    }

    #[test]
    fn layered_qfi_cap_and_copy_scaling() {
        let n = 1;
        let p = 0.1;
        let depth = 5;
        let gamma = 1.0 / (1.0 - p);
        let b = qfi_layered_bound(n, 1.0, depth, gamma, p, true).unwrap();
        let expected = (1.0 - (1.0f64 - p).powi(depth as i32)).recip()
            * (1.0 - p).powi(2 * depth as i32);
        assert_abs_diff_eq!(b, expected, epsilon = 1e-12);

        // Additivity: N copies scale the bound linearly.
        let b10 = qfi_layered_bound(n, 10.0, depth, gamma, p, true).unwrap();
        assert_abs_diff_eq!(b10, 10.0 * b, epsilon = 1e-12);

        // The compiled-circuit Fisher information must respect it.
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let noise = model(NoiseKind::GlobalDepolarizing, n, p);
        let circ =
            crate::circuit::random_circuit(n, depth, crate::circuit::EnsembleKind::Haar, &noise, 3)
                .unwrap();
        let eff = crate::circuit::compile_effective(&circ).unwrap();
        let theta = random_interior_bloch(n, 0.8, &mut rng);
        let j = qfi_bloch(&eff.map, &theta).unwrap();
        assert!(j.max_eigenvalue() <= b + 1e-8);

        assert!(matches!(
            qfi_layered_bound(n, 1.0, depth, gamma, 0.0, true),
            Err(Error::RankDeficientOutput { .. })
        ));
    }

    #[test]
    fn qfi_matches_bures_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let n = 1;
        let t = model(NoiseKind::GlobalDepolarizing, n, 0.2).transfer_map().unwrap();
        let theta = random_interior_bloch(n, 0.5, &mut rng);
        let j = qfi_bloch(&t, &theta).unwrap();

        let sqrt_fid = |a: &BlochVector, b: &BlochVector| -> f64 {
            let ra = t.apply_density(&density_from_bloch(a)).unwrap();
            let rb = t.apply_density(&density_from_bloch(b)).unwrap();
            fidelity(&ra, &rb).sqrt()
        };
        let eps = 1e-4;
        let m = basis_len(n);
        let shifted = |dir: &DVector<f64>, sign: f64| {
            BlochVector::new(
                n,
                theta.coords() + dir * (sign * eps),
            )
            .unwrap()
        };
        let j_dir = |dir: &DVector<f64>| -> f64 {
            let fp = sqrt_fid(&theta, &shifted(dir, 1.0));
            let fm = sqrt_fid(&theta, &shifted(dir, -1.0));
            4.0 * (2.0 - fp - fm) / (eps * eps)
        };

        for i in 0..m {
            let ei = DVector::from_fn(m, |k, _| if k == i { 1.0 } else { 0.0 });
            assert_abs_diff_eq!(j_dir(&ei), j.matrix()[(i, i)], epsilon = 1e-4);
            for k in (i + 1)..m {
                let ek = DVector::from_fn(m, |q, _| if q == k { 1.0 } else { 0.0 });
                let plus = &ei + &ek;
                let minus = &ei - &ek;
                let fd = (j_dir(&plus) - j_dir(&minus)) / 4.0;
                assert_abs_diff_eq!(fd, j.matrix()[(i, k)], epsilon = 1e-4);
            }
        }
    }

    #[test]
    fn qfi_symmetric_and_psd() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 1..=2usize {
            let ch = random_cptp_kraus(n, 3, &mut rng);
            let t = TransferMap::from_kraus(&ch);
            let theta = random_interior_bloch(n, 0.5, &mut rng);
            let out = t.apply_density(&density_from_bloch(&theta)).unwrap();
            if crate::pauli::min_eigenvalue(&out) < 1e-8 {
                continue;
            }
            let j = qfi_bloch(&t, &theta).unwrap();
            assert!((j.matrix() - j.matrix().transpose()).norm() < 1e-10);
            assert!(j.min_eigenvalue() >= -1e-8);
        }
    }

    #[test]
    fn singular_information_reports_null_direction() {
        // Dephasing kills the x/y blocks of a state on the z-axis? No: at
        // theta on the z-axis the Fisher matrix stays positive; instead
        // build a rank-deficient J directly through a fully dephased output
        // where the transverse derivatives vanish is not reachable with
        // p < 1. Use a near-complete twirl and check conditioning instead.
        let side = 4usize;
        let mut twirl = DMatrix::<f64>::zeros(side, side);
        twirl[(0, 0)] = 1.0;
        // A tiny residual keeps apply_density exact but J numerically
        // singular.
        twirl[(1, 1)] = 1e-9;
        twirl[(2, 2)] = 1e-9;
        twirl[(3, 3)] = 1e-9;
        let t = TransferMap::from_full(1, twirl).unwrap();
        let theta = BlochVector::new(1, DVector::from_vec(vec![0.3, 0.0, 0.4])).unwrap();
        let j = qfi_bloch(&t, &theta).unwrap();
        let obs = Observable::single_z(1).unwrap();
        assert!(matches!(
            cr_bound(&j, &obs, 1.0),
            Err(Error::SingularInformation { .. })
        ));
    }

    #[test]
    fn kraus_route_consistency_for_qfi_states() {
        // The transfer-map application used inside qfi_bloch agrees with
        // direct Kraus application.
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let n = 2;
        let ch = random_cptp_kraus(n, 4, &mut rng);
        let t = TransferMap::from_kraus(&ch);
        let theta = random_interior_bloch(n, 0.7, &mut rng);
        let rho = density_from_bloch(&theta);
        let via_map = t.apply_density(&rho).unwrap();
        let via_kraus = ch.apply(&rho);
        assert!((via_map - via_kraus).norm() < 1e-10);

        // And kraus_from_ptm returns an equivalent action.
        let k2 = kraus_from_ptm(&t).unwrap();
        let via_k2 = k2.apply(&rho);
        assert!((ch.apply(&rho) - via_k2).norm() < 1e-9);
        let _ = KrausChannel::cptp(n, k2.ops().to_vec());
    }

    #[test]
    fn bloch_chart_consistency() {
        // qfi at theta recovered from a density matrix equals qfi at the
        // original theta.
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let t = model(NoiseKind::LocalDephasing, 1, 0.3).transfer_map().unwrap();
        let theta = random_interior_bloch(1, 0.6, &mut rng);
        let theta2 = bloch_from_density(&density_from_bloch(&theta)).unwrap();
        let j1 = qfi_bloch(&t, &theta).unwrap();
        let j2 = qfi_bloch(&t, &theta2).unwrap();
        assert!((j1.matrix() - j2.matrix()).norm() < 1e-9);
    }
}
