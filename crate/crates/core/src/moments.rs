//! Haar moment formulas and Monte-Carlo design checks.
//!
//! The second-moment Weingarten identities validate the unitary samplers
//! (a 2-design must match them within statistical error) and give an
//! independent check of the per-layer ν/η recursions used by the
//! average-case bounds.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

use crate::bounds::{nu_eta_recursion, nu_recursion};
use crate::channel::{eta, nu, NoiseModel, TransferMap};
use crate::circuit::sample_unitary;
use crate::circuit::EnsembleKind;
use crate::error::{Error, Result};
use crate::pauli::dim;

/// Outcome of one Monte-Carlo moment comparison.
#[derive(Debug, Clone)]
pub struct MomentCheck {
    pub label: String,
    pub lhs: f64,
    pub rhs: f64,
    pub stderr: f64,
    pub n_samples: usize,
    /// |lhs - rhs| in units of the standard error (infinite when stderr = 0
    /// and the values differ).
    pub sigma: f64,
    pub pass: bool,
}

impl MomentCheck {
    fn evaluate(label: String, lhs: f64, rhs: f64, stderr: f64, n_samples: usize, max_sigma: f64) -> Self {
        let diff = (lhs - rhs).abs();
        let sigma = if stderr > 0.0 {
            diff / stderr
        } else if diff == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        // Zero-variance ensembles (e.g. unitarily invariant noise) leave only
        // floating-point jitter; agreement at that level passes regardless of
        // the degenerate standard error.
        let float_floor = diff <= 1e-10 * rhs.abs().max(1.0);
        MomentCheck {
            label,
            lhs,
            rhs,
            stderr,
            n_samples,
            sigma,
            pass: sigma <= max_sigma || float_floor,
        }
    }
}

/// Second-order Weingarten coefficients `(Wg[1,1], Wg[2])` for dimension d:
/// `1/(d^2-1)` and `-1/(d(d^2-1))`.
pub fn weingarten2(d: usize) -> Result<(f64, f64)> {
    if d < 2 {
        return Err(Error::Validation(format!(
            "Weingarten coefficients need dimension d >= 2, got {d}"
        )));
    }
    let df = d as f64;
    Ok((1.0 / (df * df - 1.0), -1.0 / (df * (df * df - 1.0))))
}

/// Which second-moment identity to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MomentPattern {
    /// `E[tr(U A U† B U C U† D)]`
    Trace4,
    /// `E[tr(U A U† B) tr(U C U† D)]`
    Trace2x2,
}

fn check_square(m: &DMatrix<Complex64>, d: usize, what: &'static str) -> Result<()> {
    if m.nrows() != d || m.ncols() != d {
        return Err(Error::DimensionMismatch {
            context: what,
            expected: d,
            actual: m.nrows(),
        });
    }
    Ok(())
}

/// Closed-form right-hand side of the chosen second-moment identity for
/// Hermitian inputs (the expectation is real).
pub fn second_moment_rhs(
    a: &DMatrix<Complex64>,
    b: &DMatrix<Complex64>,
    c: &DMatrix<Complex64>,
    d_mat: &DMatrix<Complex64>,
    pattern: MomentPattern,
) -> Result<f64> {
    let d = a.nrows();
    check_square(a, d, "second_moment A")?;
    check_square(b, d, "second_moment B")?;
    check_square(c, d, "second_moment C")?;
    check_square(d_mat, d, "second_moment D")?;
    let df = d as f64;

    let tr = |m: &DMatrix<Complex64>| m.trace().re;
    let tr2 = |x: &DMatrix<Complex64>, y: &DMatrix<Complex64>| (x * y).trace().re;

    let t_ac = tr2(a, c);
    let t_bd = tr2(b, d_mat);
    let (t_a, t_b, t_c, t_d) = (tr(a), tr(b), tr(c), tr(d_mat));

    let paired = t_ac * t_b * t_d + t_a * t_c * t_bd;
    let crossed = t_ac * t_bd + t_a * t_b * t_c * t_d;
    let denom = df * df - 1.0;
    Ok(match pattern {
        MomentPattern::Trace4 => paired / denom - crossed / (df * denom),
        MomentPattern::Trace2x2 => crossed / denom - paired / (df * denom),
    })
}

/// `E[tr(U A U† B)] = tr A tr B / d`.
pub fn first_moment_rhs(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    (a.trace() * b.trace()).re / a.nrows() as f64
}

/// Run first- and second-moment checks of `kind` against the Haar formulas
/// on fixed Hermitian test matrices. A 2-design passes all checks within
/// 4 standard errors; failures are reported as data, not errors.
pub fn verify_design<R: Rng + ?Sized>(
    kind: EnsembleKind,
    n: usize,
    n_samples: usize,
    rng: &mut R,
) -> Result<Vec<MomentCheck>> {
    if n_samples < 1000 {
        return Err(Error::Validation(
            "need at least 10^3 samples for a meaningful check".into(),
        ));
    }
    let d = dim(n);
    // Fixed Hermitian test matrices; deterministic and well-conditioned.
    let herm = |offset: usize| -> DMatrix<Complex64> {
        DMatrix::from_fn(d, d, |i, j| {
            let phase = ((i * d + j + offset) as f64).sin();
            let re = ((i + 3 * j + offset) as f64).cos();
            if i == j {
                Complex64::new(re + 1.5, 0.0)
            } else if i < j {
                Complex64::new(re, phase)
            } else {
                let pr = ((j + 3 * i + offset) as f64).cos();
                let pi = ((j * d + i + offset) as f64).sin();
                Complex64::new(pr, -pi)
            }
        })
    };
    let a = herm(1);
    let b = herm(2);
    let c = herm(3);
    let d_mat = herm(4);

    // One statistic pass per drawn unitary: all three checks share samples.
    let rhs = [
        first_moment_rhs(&a, &b),
        second_moment_rhs(&a, &b, &c, &d_mat, MomentPattern::Trace4)?,
        second_moment_rhs(&a, &b, &c, &d_mat, MomentPattern::Trace2x2)?,
    ];
    let mut sum = [0.0f64; 3];
    let mut sum_sq = [0.0f64; 3];
    for layer in 0..n_samples {
        let u = sample_unitary(kind, n, layer, rng)?;
        let ua = &u * &a * u.adjoint();
        let uc = &u * &c * u.adjoint();
        let t_ab = (&ua * &b).trace().re;
        let vals = [
            t_ab,
            (&ua * &b * &uc * &d_mat).trace().re,
            t_ab * (&uc * &d_mat).trace().re,
        ];
        for (i, v) in vals.iter().enumerate() {
            sum[i] += v;
            sum_sq[i] += v * v;
        }
    }

    let names = [
        "first-moment",
        "second-moment-trace4",
        "second-moment-trace2x2",
    ];
    let checks = (0..3)
        .map(|i| {
            let mean = sum[i] / n_samples as f64;
            let var = (sum_sq[i] / n_samples as f64 - mean * mean).max(0.0);
            MomentCheck::evaluate(
                format!("{}[{}]", names[i], kind.label()),
                mean,
                rhs[i],
                (var / n_samples as f64).sqrt(),
                n_samples,
                4.0,
            )
        })
        .collect();
    Ok(checks)
}

/// Monte-Carlo check of the ν (and, for non-unital noise, η) recursion: the
/// sampled average of `ν(N_depth^{-1})` over Haar layers must match the
/// deterministic recursion prediction within 3 standard errors.
pub fn mc_nu_recursion_check<R: Rng + ?Sized>(
    noise: &NoiseModel,
    depth: usize,
    n_samples: usize,
    rng: &mut R,
) -> Result<Vec<MomentCheck>> {
    let n = noise.n;
    let d = dim(n);
    let layer = noise.transfer_map()?;
    let layer_inv = layer.inverse()?;
    let (nu_layer, eta_layer) = (nu(&layer_inv), eta(&layer_inv));
    let unital = noise.is_unital();

    // Deterministic prediction: iterate from the identity map's metrics.
    let mut nu_pred = 1.0f64;
    let mut eta_pred = 1.0 / d as f64;
    for _ in 0..depth {
        if unital {
            nu_pred = nu_recursion(nu_pred, nu_layer, d);
        } else {
            let (nn, ee) = nu_eta_recursion(nu_pred, eta_pred, nu_layer, eta_layer, d);
            nu_pred = nn;
            eta_pred = ee;
        }
    }

    let mut nu_samples = Vec::with_capacity(n_samples);
    let mut eta_samples = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        let mut acc = TransferMap::identity(n);
        for _ in 0..depth {
            let u = crate::circuit::haar_unitary(d, rng);
            let u_ptm = TransferMap::from_unitary(n, &u);
            let u_ptm_t = TransferMap::from_full(n, u_ptm.full().transpose())?;
            // N_l = E ∘ U ∘ N_{l-1} ∘ U†.
            acc = layer.compose(&u_ptm)?.compose(&acc)?.compose(&u_ptm_t)?;
        }
        let inv = acc.inverse()?;
        nu_samples.push(nu(&inv));
        eta_samples.push(eta(&inv));
    }

    let stats = |samples: &[f64]| {
        let mean = samples.iter().sum::<f64>() / samples.len() as f64;
        let var = samples
            .iter()
            .map(|v| (v - mean) * (v - mean))
            .sum::<f64>()
            / samples.len() as f64;
        (mean, (var / samples.len() as f64).sqrt())
    };

    let (nu_mean, nu_se) = stats(&nu_samples);
    let mut checks = vec![MomentCheck::evaluate(
        format!("nu-recursion[{} n={n} depth={depth}]", noise.kind.label()),
        nu_mean,
        nu_pred,
        nu_se,
        n_samples,
        3.0,
    )];
    if !unital {
        let (eta_mean, eta_se) = stats(&eta_samples);
        checks.push(MomentCheck::evaluate(
            format!("eta-recursion[{} n={n} depth={depth}]", noise.kind.label()),
            eta_mean,
            eta_pred,
            eta_se,
            n_samples,
            3.0,
        ));
    }
    Ok(checks)
}
