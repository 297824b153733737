//! Concrete mitigation strategies and their sampling costs: rescaling with
//! shot-level Monte Carlo, quasiprobability cancellation (dictionary-
//! constrained), and generalized subspace expansion.
//!
//! "Cost" is operationalized as the variance of the single-shot mitigated
//! estimator divided by the target standard deviation squared — the number
//! of circuit copies needed to reach that deviation — which places the
//! empirical curves on the same axis as the lower bounds.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bounds::CostReport;
use crate::channel::{NoiseKind, NoiseModel, TransferMap};
use crate::circuit::{
    compile_effective, k_mean_theory, random_circuit, EnsembleKind, LayeredCircuit,
};
use crate::error::{Error, Result};
use crate::fisher::variance;
use crate::optim::{nelder_mead, NelderMeadOptions};
use crate::pauli::{dim, DensityMatrix, Observable, PauliString};
use crate::simplex::l1_decomposition;

fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Projective sampler for a Hermitian observable measured on a fixed state.
#[derive(Debug, Clone)]
pub struct ShotSampler {
    eigenvalues: Vec<f64>,
    cdf: Vec<f64>,
    exact_mean: f64,
    exact_second_moment: f64,
}

impl ShotSampler {
    pub fn new(state: &DensityMatrix, observable: &DMatrix<Complex64>) -> Result<Self> {
        let d = state.nrows();
        if observable.nrows() != d || observable.ncols() != d {
            return Err(Error::DimensionMismatch {
                context: "ShotSampler",
                expected: d,
                actual: observable.nrows(),
            });
        }
        let eig = observable.clone().symmetric_eigen();
        let mut eigenvalues = Vec::with_capacity(d);
        let mut probs = Vec::with_capacity(d);
        for idx in 0..d {
            let v = eig.eigenvectors.column(idx);
            let p = (v.adjoint() * state * v)[(0, 0)].re;
            probs.push(p.max(0.0));
            eigenvalues.push(eig.eigenvalues[idx]);
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::Validation(format!(
                "Born probabilities sum to {total}, not 1"
            )));
        }
        let mut cdf = Vec::with_capacity(d);
        let mut acc = 0.0;
        for &p in &probs {
            acc += p / total;
            cdf.push(acc);
        }
        let exact_mean = probs
            .iter()
            .zip(&eigenvalues)
            .map(|(p, e)| p * e)
            .sum::<f64>()
            / total;
        let exact_second_moment = probs
            .iter()
            .zip(&eigenvalues)
            .map(|(p, e)| p * e * e)
            .sum::<f64>()
            / total;
        Ok(Self {
            eigenvalues,
            cdf,
            exact_mean,
            exact_second_moment,
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.gen();
        let idx = self.cdf.partition_point(|&c| c < u);
        self.eigenvalues[idx.min(self.eigenvalues.len() - 1)]
    }

    pub fn exact_mean(&self) -> f64 {
        self.exact_mean
    }

    pub fn exact_variance(&self) -> f64 {
        (self.exact_second_moment - self.exact_mean * self.exact_mean).max(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MitigationMethod {
    Rescaling,
    Pec,
    Gse,
}

impl MitigationMethod {
    pub fn label(&self) -> &'static str {
        match self {
            MitigationMethod::Rescaling => "rescaling",
            MitigationMethod::Pec => "pec",
            MitigationMethod::Gse => "gse",
        }
    }
}

impl std::str::FromStr for MitigationMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rescaling" => Ok(MitigationMethod::Rescaling),
            "pec" => Ok(MitigationMethod::Pec),
            "gse" => Ok(MitigationMethod::Gse),
            other => Err(Error::Validation(format!("unknown method '{other}'"))),
        }
    }
}

/// Outcome of one mitigated estimation run.
#[derive(Debug, Clone)]
pub struct MitigationResult {
    pub method: MitigationMethod,
    pub n: usize,
    pub depth: usize,
    pub p: f64,
    pub eps: f64,
    pub shots: u64,
    /// Monte-Carlo estimate over `shots` single-shot samples (the exact
    /// rescaled mean when `shots` = 0).
    pub estimate: f64,
    /// Exact bias of the mitigated estimator, from density matrices.
    pub bias: f64,
    /// Exact single-shot variance over eps^2.
    pub cost_analytic: f64,
    /// Sample-variance estimate of the same quantity (NaN when shots = 0).
    pub cost_mc: f64,
}

/// Rescaling estimator: divide the measured expectation by the model's
/// contraction factor `(1-p)^(k_mean L)`. Exactly unbiased under global
/// depolarizing noise.
pub fn rescaling_estimate<R: Rng + ?Sized>(
    circ: &LayeredCircuit,
    obs: &Observable,
    model: &NoiseModel,
    eps: f64,
    shots: u64,
    rng: &mut R,
) -> Result<MitigationResult> {
    if eps <= 0.0 {
        return Err(Error::Validation("eps must be positive".into()));
    }
    let depth = circ.depth();
    let ln_factor = -k_mean_theory(model) * depth as f64 * (1.0 - model.p).ln();
    let obs_matrix = obs.matrix();
    let noisy = circ.noisy_output()?;
    let ideal = circ.ideal_output();
    let var_noisy = variance(&noisy, &obs_matrix);
    let ln_cost = 2.0 * ln_factor + var_noisy.max(f64::MIN_POSITIVE).ln() - 2.0 * eps.ln();
    if ln_cost > 300.0 * std::f64::consts::LN_10 {
        return Err(Error::Validation(format!(
            "rescaled cost exceeds 1e300 at depth {depth}"
        )));
    }
    let factor = ln_factor.exp();
    let noisy_mean = (&noisy * &obs_matrix).trace().re;
    let ideal_mean = (&ideal * &obs_matrix).trace().re;
    let bias = factor * noisy_mean - ideal_mean;
    let cost_analytic = factor * factor * var_noisy / (eps * eps);

    let (estimate, cost_mc) = if shots > 0 {
        let sampler = ShotSampler::new(&noisy, &obs_matrix)?;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..shots {
            let v = sampler.sample(rng);
            sum += v;
            sum_sq += v * v;
        }
        let mean = sum / shots as f64;
        let var = (sum_sq / shots as f64 - mean * mean).max(0.0);
        (factor * mean, factor * factor * var / (eps * eps))
    } else {
        (factor * noisy_mean, f64::NAN)
    };

    Ok(MitigationResult {
        method: MitigationMethod::Rescaling,
        n: circ.n(),
        depth,
        p: model.p,
        eps,
        shots,
        estimate,
        bias,
        cost_analytic,
        cost_mc,
    })
}

/// Signed quasiprobability decomposition over a channel dictionary.
#[derive(Debug, Clone)]
pub struct QuasiProbability {
    pub q: Vec<f64>,
    /// L1 norm Σ|q|, the per-layer sampling-overhead factor.
    pub gamma: f64,
}

/// PTM of conjugation by the Pauli string with the given code: diagonal with
/// ±1 entries given by the commutation pattern.
pub fn pauli_conjugation_ptm(n: usize, code: usize) -> Result<TransferMap> {
    let side = 1usize << (2 * n);
    let pb = PauliString::new(n, code)?;
    let mut full = DMatrix::zeros(side, side);
    for i in 0..side {
        let pi = PauliString::new(n, i)?;
        full[(i, i)] = if pb.commutes_with(&pi) { 1.0 } else { -1.0 };
    }
    TransferMap::from_full(n, full)
}

/// Exact quasiprobability of a Pauli (diagonal-PTM) target over the full
/// Pauli-conjugation dictionary, via the commutation-character transform.
pub fn pauli_quasiprob(target: &TransferMap) -> Result<QuasiProbability> {
    let n = target.n();
    let side = target.side();
    for i in 0..side {
        for j in 0..side {
            if i != j && target.full()[(i, j)].abs() > 1e-10 {
                return Err(Error::Validation(
                    "target PTM is not diagonal; use the LP route".into(),
                ));
            }
        }
    }
    let strings: Vec<PauliString> = (0..side)
        .map(|code| PauliString::new(n, code))
        .collect::<Result<Vec<_>>>()?;
    let mut q = Vec::with_capacity(side);
    for pb in &strings {
        let mut acc = 0.0;
        for (i, pi) in strings.iter().enumerate() {
            let s = if pb.commutes_with(pi) { 1.0 } else { -1.0 };
            acc += s * target.full()[(i, i)];
        }
        q.push(acc / side as f64);
    }
    let gamma = q.iter().map(|v| v.abs()).sum();
    Ok(QuasiProbability { q, gamma })
}

/// L1-minimal signed decomposition of `target` over `dictionary`, solved as
/// a linear program with entrywise PTM equality constraints.
pub fn quasiprob_lp(target: &TransferMap, dictionary: &[TransferMap]) -> Result<QuasiProbability> {
    if dictionary.is_empty() {
        return Err(Error::Infeasible("empty dictionary".into()));
    }
    let side = target.side();
    for b in dictionary {
        if b.side() != side {
            return Err(Error::DimensionMismatch {
                context: "quasiprob_lp",
                expected: side,
                actual: b.side(),
            });
        }
    }
    let flatten = |t: &TransferMap| -> Vec<f64> {
        let mut v = Vec::with_capacity(side * side);
        for i in 0..side {
            for j in 0..side {
                v.push(t.full()[(i, j)]);
            }
        }
        v
    };
    let columns: Vec<Vec<f64>> = dictionary.iter().map(flatten).collect();
    let rhs = flatten(target);
    let (q, gamma) = l1_decomposition(&columns, &rhs)?;
    Ok(QuasiProbability { q, gamma })
}

/// Per-layer overhead factor γ for cancelling the model's noise, using the
/// default dictionaries: all Pauli conjugations for the unital models, plus
/// the two reset channels for amplitude damping. Local models decompose per
/// qubit and multiply.
pub fn pec_gamma_for_model(model: &NoiseModel) -> Result<f64> {
    match model.kind {
        NoiseKind::GlobalDepolarizing => {
            let inv = model.transfer_map()?.inverse()?;
            Ok(pauli_quasiprob(&inv)?.gamma)
        }
        NoiseKind::LocalDepolarizing | NoiseKind::LocalDephasing => {
            let single = NoiseModel::new(model.kind, 1, model.p)?;
            let inv = single.transfer_map()?.inverse()?;
            let gamma0 = pauli_quasiprob(&inv)?.gamma;
            Ok(gamma0.powi(model.n as i32))
        }
        NoiseKind::AmplitudeDamping => {
            let single = NoiseModel::new(model.kind, 1, model.p)?;
            let inv = single.transfer_map()?.inverse()?;
            let dict = amplitude_damping_dictionary()?;
            let gamma0 = quasiprob_lp(&inv, &dict)?.gamma;
            Ok(gamma0.powi(model.n as i32))
        }
    }
}

/// Single-qubit dictionary for non-unital cancellation: Pauli conjugations
/// plus reset-to-|0> and reset-to-|1>.
pub fn amplitude_damping_dictionary() -> Result<Vec<TransferMap>> {
    let mut dict: Vec<TransferMap> = (0..4).map(|c| pauli_conjugation_ptm(1, c)).collect::<Result<_>>()?;
    for target in 0..2usize {
        let mut k1 = DMatrix::<Complex64>::zeros(2, 2);
        k1[(target, 0)] = c64(1.0, 0.0);
        let mut k2 = DMatrix::<Complex64>::zeros(2, 2);
        k2[(target, 1)] = c64(1.0, 0.0);
        let ch = crate::channel::KrausChannel::cptp(1, vec![k1, k2])?;
        dict.push(TransferMap::from_kraus(&ch));
    }
    Ok(dict)
}

/// Cancellation cost for `depth` identical layers: `γ^(2L) ||x||^2/eps^2`,
/// with γ the L1-optimal per-layer overhead over `dictionary`.
pub fn pec_cost(
    noise_layer: &TransferMap,
    dictionary: &[TransferMap],
    depth: usize,
    x_norm: f64,
    eps: f64,
) -> Result<CostReport> {
    if depth == 0 {
        return Err(Error::Validation("depth must be at least 1".into()));
    }
    let inv = noise_layer.inverse()?;
    let gamma = quasiprob_lp(&inv, dictionary)?.gamma;
    let ln_scale_free = 2.0 * depth as f64 * gamma.ln();
    Ok(CostReport::from_ln_scale_free(
        "pec",
        noise_layer.n(),
        depth,
        f64::NAN,
        eps,
        x_norm,
        ln_scale_free,
    ))
}

/// Subspace-expansion fit: optimal real coefficients, the overhead factor
/// `(|c1 c2|/2^(n-1) + c2^2)^2`, and the Frobenius biases before and after
/// mitigation.
#[derive(Debug, Clone)]
pub struct GseResult {
    pub c1: f64,
    pub c2: f64,
    pub cost: f64,
    pub residual_bias: f64,
    pub unmitigated_bias: f64,
}

/// Optimize the power-subspace mix
/// `m = c1^2/4^n I + c1 c2/2^(n-1) E'(rho) + c2^2 E'(rho)^2`
/// toward the ideal state in Frobenius distance under `tr m = 1`.
///
/// The objective is scale-invariant, so the 2-dimensional Nelder–Mead search
/// runs on the normalized mix and the coefficients are rescaled onto the
/// trace constraint afterwards.
pub fn gse_cost(eff: &TransferMap, ideal: &DensityMatrix) -> Result<GseResult> {
    let n = eff.n();
    let d = dim(n);
    if ideal.nrows() != d || ideal.ncols() != d {
        return Err(Error::DimensionMismatch {
            context: "gse_cost",
            expected: d,
            actual: ideal.nrows(),
        });
    }
    let noisy = eff.apply_density(ideal)?;
    let noisy_sq = &noisy * &noisy;
    let eye = DMatrix::<Complex64>::identity(d, d);
    let four_n = (d * d) as f64;
    let two_n1 = (2.0f64).powi(n as i32 - 1);

    let mix = |c1: f64, c2: f64| -> DMatrix<Complex64> {
        &eye * c64(c1 * c1 / four_n, 0.0)
            + &noisy * c64(c1 * c2 / two_n1, 0.0)
            + &noisy_sq * c64(c2 * c2, 0.0)
    };
    let objective = |params: &[f64]| -> f64 {
        let m = mix(params[0], params[1]);
        let tau = m.trace().re;
        if !tau.is_finite() || tau <= 1e-300 {
            return f64::INFINITY;
        }
        (m / c64(tau, 0.0) - ideal).norm_squared()
    };

    // Exact-fit shortcut. For a pure ideal state, m = X^2 with the Hermitian
    // X = c1 I/2^n + c2 E'(rho) fits rho exactly iff X = ±rho, a linear
    // condition solved by a 2x2 least-squares system. The Frobenius
    // objective is quartically flat along its ray in that regime, so the
    // algebraic solution is the only way to pin the coefficients to full
    // precision.
    let purity = (ideal * ideal).trace().re;
    if (purity - 1.0).abs() < 1e-9 {
        let ip = |x: &DMatrix<Complex64>, y: &DMatrix<Complex64>| -> f64 {
            x.iter().zip(y.iter()).map(|(a, b)| (a.conj() * b).re).sum()
        };
        let basis0 = &eye * c64(1.0 / d as f64, 0.0);
        let g00 = ip(&basis0, &basis0);
        let g01 = ip(&basis0, &noisy);
        let g11 = ip(&noisy, &noisy);
        let r0 = ip(&basis0, ideal);
        let r1 = ip(&noisy, ideal);
        let det = g00 * g11 - g01 * g01;
        if det.abs() > 1e-12 * g00.max(g11) {
            let c1l = (g11 * r0 - g01 * r1) / det;
            let c2l = (g00 * r1 - g01 * r0) / det;
            let x = &basis0 * c64(c1l, 0.0) + &noisy * c64(c2l, 0.0);
            if (&x - ideal).norm() <= 1e-8 {
                let (mut c1, mut c2) = (c1l, c2l);
                let tau = mix(c1, c2).trace().re;
                if tau.is_finite() && tau > 1e-300 {
                    let s = tau.sqrt().recip();
                    c1 *= s;
                    c2 *= s;
                    if c2 < 0.0 {
                        c1 = -c1;
                        c2 = -c2;
                    }
                    let cost = ((c1 * c2).abs() / two_n1 + c2 * c2).powi(2);
                    return Ok(GseResult {
                        c1,
                        c2,
                        cost,
                        residual_bias: objective(&[c1, c2]).sqrt(),
                        unmitigated_bias: (&noisy - ideal).norm(),
                    });
                }
            }
        }
    }

    // Warm start from the best effective-depolarizing fit of the noisy state.
    let mut starts: Vec<[f64; 2]> = vec![[0.0, 1.0]];
    let traceless = ideal - &eye * c64(1.0 / d as f64, 0.0);
    let denom = traceless.norm_squared();
    if denom > 1e-12 {
        let alpha = traceless
            .iter()
            .zip(noisy.iter())
            .map(|(a, b)| (a.conj() * b).re)
            .sum::<f64>()
            / denom;
        if alpha.is_finite() && alpha > 1e-6 {
            starts.push([-(1.0 - alpha) / alpha, 1.0 / alpha]);
        }
    }

    let opts = NelderMeadOptions {
        max_iters: 20_000,
        f_tol: 0.0,
        x_tol: 1e-13,
    };
    let mut best: Option<(Vec<f64>, f64)> = None;
    for s in &starts {
        let (x, v) = nelder_mead(objective, s, 0.25, opts);
        if best.as_ref().is_none_or(|(_, bv)| v < *bv) {
            best = Some((x, v));
        }
    }
    let (params, mut value) =
        best.ok_or_else(|| Error::NonConvergence("subspace fit produced no candidate".into()))?;
    let (mut c1, mut c2) = (params[0], params[1]);

    // The objective is scale-invariant, so the optimum is a ray t = c1/c2;
    // refine it with parabolic steps to pin the coefficients well below the
    // simplex resolution.
    if c2.abs() > 1e-12 {
        let ray = |t: f64| objective(&[t, 1.0]);
        let mut t = c1 / c2;
        let mut h = 1e-3 * (1.0 + t.abs());
        for _ in 0..80 {
            let (gm, g0, gp) = (ray(t - h), ray(t), ray(t + h));
            let denom = gm - 2.0 * g0 + gp;
            if denom > 0.0 {
                let step = 0.5 * h * (gm - gp) / denom;
                if step.is_finite() && step.abs() < 4.0 * h {
                    t += step;
                }
            }
            h *= 0.5;
            if h < 1e-14 * (1.0 + t.abs()) {
                break;
            }
        }
        let v = ray(t);
        if v <= value {
            value = v;
            c1 = t;
            c2 = 1.0;
        }
    }

    // Rescale onto tr[m] = 1 and canonicalize the (global) sign.
    let tau = mix(c1, c2).trace().re;
    if !tau.is_finite() || tau <= 1e-300 {
        return Err(Error::NonConvergence("degenerate subspace mix".into()));
    }
    let s = tau.sqrt().recip();
    c1 *= s;
    c2 *= s;
    if c2 < 0.0 {
        c1 = -c1;
        c2 = -c2;
    }

    let cost = ((c1 * c2).abs() / two_n1 + c2 * c2).powi(2);
    Ok(GseResult {
        c1,
        c2,
        cost,
        residual_bias: value.sqrt(),
        unmitigated_bias: (&noisy - ideal).norm(),
    })
}

/// Per-depth, seed-averaged cost table for one mitigation method on random
/// circuits. Rows share the [`CostReport`] CSV schema; the GSE overhead is
/// scaled by `||x||^2/eps^2` to sit on the copy-count axis.
#[allow(clippy::too_many_arguments)]
pub fn empirical_cost_sweep(
    method: MitigationMethod,
    model: &NoiseModel,
    obs: &Observable,
    ensemble: EnsembleKind,
    depths: &[usize],
    eps: f64,
    shots: u64,
    seeds: &[u64],
) -> Result<Vec<CostReport>> {
    if seeds.is_empty() {
        return Err(Error::Validation("need at least one seed".into()));
    }
    let n = model.n;
    if obs.n() != n {
        return Err(Error::DimensionMismatch {
            context: "empirical_cost_sweep",
            expected: n,
            actual: obs.n(),
        });
    }
    let x_norm = obs.norm();
    let mut rows = Vec::new();
    for &depth in depths {
        match method {
            MitigationMethod::Rescaling => {
                let mut analytic = 0.0;
                let mut mc = 0.0;
                for &seed in seeds {
                    let circ = random_circuit(n, depth, ensemble, model, seed)?;
                    let mut rng =
                        ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9 ^ ((depth as u64) << 32));
                    let r = rescaling_estimate(&circ, obs, model, eps, shots, &mut rng)?;
                    analytic += r.cost_analytic;
                    if shots > 0 {
                        mc += r.cost_mc;
                    }
                }
                let k = seeds.len() as f64;
                rows.push(
                    CostReport::from_value("rescaling", n, depth, model.p, eps, x_norm, analytic / k)
                        .with_seed(seeds[0])
                        .with_samples(seeds.len() as u64),
                );
                if shots > 0 {
                    rows.push(
                        CostReport::from_value("rescaling-mc", n, depth, model.p, eps, x_norm, mc / k)
                            .with_seed(seeds[0])
                            .with_samples(shots * seeds.len() as u64),
                    );
                }
            }
            MitigationMethod::Pec => {
                let gamma = pec_gamma_for_model(model)?;
                let ln_scale_free = 2.0 * depth as f64 * gamma.ln();
                let mut r = CostReport::from_ln_scale_free(
                    "pec", n, depth, model.p, eps, x_norm, ln_scale_free,
                )
                .with_seed(seeds[0])
                .with_samples(seeds.len() as u64);
                r.p = model.p;
                rows.push(r);
            }
            MitigationMethod::Gse => {
                let mut acc = 0.0;
                for &seed in seeds {
                    let circ = random_circuit(n, depth, ensemble, model, seed)?;
                    let eff = compile_effective(&circ)?;
                    let g = gse_cost(&eff.map, &circ.ideal_output())?;
                    acc += g.cost;
                }
                let mean_overhead = acc / seeds.len() as f64;
                rows.push(
                    CostReport::from_value(
                        "gse",
                        n,
                        depth,
                        model.p,
                        eps,
                        x_norm,
                        mean_overhead * x_norm * x_norm / (eps * eps),
                    )
                    .with_seed(seeds[0])
                    .with_samples(seeds.len() as u64),
                );
            }
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn model(kind: NoiseKind, n: usize, p: f64) -> NoiseModel {
        NoiseModel::new(kind, n, p).unwrap()
    }

    #[test]
    fn shot_sampler_matches_born_rule() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let circ = random_circuit(
            2,
            3,
            EnsembleKind::Haar,
            &model(NoiseKind::LocalDepolarizing, 2, 0.05),
            5,
        )
        .unwrap();
        let state = circ.noisy_output().unwrap();
        let obs = Observable::single_z(2).unwrap();
        let sampler = ShotSampler::new(&state, &obs.matrix()).unwrap();
        assert_abs_diff_eq!(
            sampler.exact_mean(),
            (state * obs.matrix()).trace().re,
            epsilon = 1e-12
        );
        let shots = 200_000;
        let mean: f64 = (0..shots).map(|_| sampler.sample(&mut rng)).sum::<f64>() / shots as f64;
        let se = (sampler.exact_variance() / shots as f64).sqrt();
        assert!((mean - sampler.exact_mean()).abs() < 4.0 * se.max(1e-6));
    }

    #[test]
    fn rescaling_unbiased_under_global_depolarizing() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let obs3 = Observable::single_z(3).unwrap();
        let obs2 = Observable::single_z(2).unwrap();
        for seed in 0..10u64 {
            let n = if seed % 2 == 0 { 2 } else { 3 };
            let depth = 1 + (seed as usize % 20);
            let m = model(NoiseKind::GlobalDepolarizing, n, 0.01);
            let circ = random_circuit(n, depth, EnsembleKind::CliffordUniform, &m, seed).unwrap();
            let obs = if n == 2 { &obs2 } else { &obs3 };
            let r = rescaling_estimate(&circ, obs, &m, 0.1, 0, &mut rng).unwrap();
            assert!(r.bias.abs() < 1e-12, "seed {seed}: bias {}", r.bias);
        }
    }

    #[test]
    fn rescaling_zero_noise_is_plain_sampling() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = model(NoiseKind::GlobalDepolarizing, 2, 0.0);
        let circ = random_circuit(2, 4, EnsembleKind::Haar, &m, 9).unwrap();
        let obs = Observable::single_z(2).unwrap();
        let r = rescaling_estimate(&circ, &obs, &m, 0.1, 0, &mut rng).unwrap();
        assert_abs_diff_eq!(r.bias, 0.0, epsilon = 1e-12);
        let var = variance(&circ.noisy_output().unwrap(), &obs.matrix());
        assert_abs_diff_eq!(r.cost_analytic, var / 0.01, epsilon = 1e-9);
    }

    #[test]
    fn rescaling_cost_saturates_asymptotic_bound() {
        // Exact formula: cost * eps^2 = (1-p)^(-2L) (1 - (1-p)^(2L) m^2),
        // so the ratio to the asymptotic bound is 1 - (1-p)^(2L) m^2.
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let p = 0.01;
        let eps = 0.1;
        let m = model(NoiseKind::GlobalDepolarizing, 2, p);
        let obs = Observable::single_z(2).unwrap();
        for depth in [30usize, 50] {
            let circ = random_circuit(2, depth, EnsembleKind::CliffordUniform, &m, 3).unwrap();
            let r = rescaling_estimate(&circ, &obs, &m, eps, 0, &mut rng).unwrap();
            let ideal_mean = (circ.ideal_output() * obs.matrix()).trace().re;
            let q = (1.0 - p).powi(depth as i32);
            let expected =
                q.powi(-2) * (1.0 - q * q * ideal_mean * ideal_mean) / (eps * eps);
            assert_abs_diff_eq!(r.cost_analytic, expected, epsilon = 1e-9 * expected);
            // Dominates the depth-penalized worst-case bound.
            let bound = (1.0 - q) * q.powi(-2) / (eps * eps);
            assert!(r.cost_analytic >= bound);
        }
    }

    #[test]
    fn shot_noise_convergence() {
        let p = 0.01;
        let m = model(NoiseKind::GlobalDepolarizing, 2, p);
        let obs = Observable::single_z(2).unwrap();
        let circ = random_circuit(2, 10, EnsembleKind::CliffordUniform, &m, 17).unwrap();
        let noisy = circ.noisy_output().unwrap();
        let exact = (noisy.clone() * obs.matrix()).trace().re;
        let std = variance(&noisy, &obs.matrix()).sqrt();
        let factor = (1.0 - p).powi(-10);
        for shots in [1000u64, 10_000] {
            let mut rng = ChaCha8Rng::seed_from_u64(shots);
            let r = rescaling_estimate(&circ, &obs, &m, 0.1, shots, &mut rng).unwrap();
            let tol = 3.0 * factor * std / (shots as f64).sqrt();
            assert!(
                (r.estimate - factor * exact).abs() <= tol,
                "shots {shots}: {} vs {}",
                r.estimate,
                factor * exact
            );
        }
    }

    #[test]
    fn pec_gamma_closed_forms() {
        let p = 0.13;
        // Single-qubit depolarizing over the Pauli dictionary.
        let dep_inv = model(NoiseKind::LocalDepolarizing, 1, p)
            .transfer_map()
            .unwrap()
            .inverse()
            .unwrap();
        let walsh = pauli_quasiprob(&dep_inv).unwrap();
        let expected = (2.0 + p) / (2.0 - 2.0 * p);
        assert_abs_diff_eq!(walsh.gamma, expected, epsilon = 1e-12);

        let dict: Vec<TransferMap> = (0..4).map(|c| pauli_conjugation_ptm(1, c).unwrap()).collect();
        let lp = quasiprob_lp(&dep_inv, &dict).unwrap();
        assert_abs_diff_eq!(lp.gamma, expected, epsilon = 1e-9);

        // Dephasing over the {I, Z} dictionary.
        let deph_inv = model(NoiseKind::LocalDephasing, 1, p)
            .transfer_map()
            .unwrap()
            .inverse()
            .unwrap();
        let dict_iz = vec![
            pauli_conjugation_ptm(1, 0).unwrap(),
            pauli_conjugation_ptm(1, 3).unwrap(),
        ];
        let lp = quasiprob_lp(&deph_inv, &dict_iz).unwrap();
        assert_abs_diff_eq!(lp.gamma, 1.0 / (1.0 - p), epsilon = 1e-9);

        // Noiseless layer: gamma = 1.
        let lp = quasiprob_lp(&TransferMap::identity(1), &dict).unwrap();
        assert_abs_diff_eq!(lp.gamma, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn pec_lp_matches_walsh_on_random_pauli_channels() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let dict: Vec<TransferMap> = (0..4).map(|c| pauli_conjugation_ptm(1, c).unwrap()).collect();
        for _ in 0..10 {
            // Random Pauli channel: probabilities over the four conjugations.
            let mut w: Vec<f64> = (0..4).map(|_| rng.gen_range(0.0..1.0)).collect();
            w[0] += 3.0; // keep it invertible and close to identity
            let total: f64 = w.iter().sum();
            let side = 4;
            let mut full = DMatrix::zeros(side, side);
            for (b, wb) in w.iter().enumerate() {
                full += dict[b].full() * (wb / total);
            }
            let t = TransferMap::from_full(1, full).unwrap();
            let inv = t.inverse().unwrap();
            let walsh = pauli_quasiprob(&inv).unwrap();
            let lp = quasiprob_lp(&inv, &dict).unwrap();
            assert_abs_diff_eq!(walsh.gamma, lp.gamma, epsilon = 1e-9);
        }
    }

    #[test]
    fn pec_amplitude_damping_dictionary_is_feasible() {
        let p = 0.1;
        let inv = model(NoiseKind::AmplitudeDamping, 1, p)
            .transfer_map()
            .unwrap()
            .inverse()
            .unwrap();
        let dict = amplitude_damping_dictionary().unwrap();
        let qp = quasiprob_lp(&inv, &dict).unwrap();
        assert!(qp.gamma >= 1.0);
        // Reconstruction check.
        let mut recon = DMatrix::zeros(4, 4);
        for (qb, b) in qp.q.iter().zip(&dict) {
            recon += b.full() * *qb;
        }
        assert!((recon - inv.full()).norm() < 1e-8);

        // Pauli conjugations alone cannot express the non-unital inverse.
        let pauli_only: Vec<TransferMap> =
            (0..4).map(|c| pauli_conjugation_ptm(1, c).unwrap()).collect();
        assert!(matches!(
            quasiprob_lp(&inv, &pauli_only),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn pec_cost_report_and_model_route_agree() {
        let p = 0.02;
        let m = model(NoiseKind::LocalDepolarizing, 2, p);
        let layer = m.transfer_map().unwrap();
        let dict: Vec<TransferMap> =
            (0..16).map(|c| pauli_conjugation_ptm(2, c).unwrap()).collect();
        let depth = 7;
        let report = pec_cost(&layer, &dict, depth, 1.0, 0.1).unwrap();
        let gamma = pec_gamma_for_model(&m).unwrap();
        let expected_ln = 2.0 * depth as f64 * gamma.ln();
        assert_abs_diff_eq!(report.ln_scale_free, expected_ln, epsilon = 1e-8);
    }

    #[test]
    fn gse_recovers_global_depolarizing_closed_form() {
        let p = 0.01;
        for depth in [1usize, 5, 10] {
            let n = 2;
            let m = model(NoiseKind::GlobalDepolarizing, n, p);
            let circ = random_circuit(n, depth, EnsembleKind::CliffordUniform, &m, 23).unwrap();
            let eff = compile_effective(&circ).unwrap();
            let g = gse_cost(&eff.map, &circ.ideal_output()).unwrap();
            let q = (1.0 - p).powi(depth as i32);
            assert_abs_diff_eq!(g.c1, -(1.0 - q) / q, epsilon = 1e-8);
            assert_abs_diff_eq!(g.c2, 1.0 / q, epsilon = 1e-8);
            assert!(g.residual_bias <= 1e-10, "bias {}", g.residual_bias);
            let expected_cost = ((1.0 - q) / (q * q) / 2.0 + 1.0 / (q * q)).powi(2);
            assert_abs_diff_eq!(g.cost, expected_cost, epsilon = 1e-6 * expected_cost);
        }
    }

    #[test]
    fn gse_zero_noise_is_trivial() {
        let n = 2;
        let m = model(NoiseKind::GlobalDepolarizing, n, 0.0);
        let circ = random_circuit(n, 3, EnsembleKind::Haar, &m, 8).unwrap();
        let eff = compile_effective(&circ).unwrap();
        let g = gse_cost(&eff.map, &circ.ideal_output()).unwrap();
        assert_abs_diff_eq!(g.c1, 0.0, epsilon = 1e-8);
        assert_abs_diff_eq!(g.c2, 1.0, epsilon = 1e-8);
        assert_abs_diff_eq!(g.cost, 1.0, epsilon = 1e-8);
        assert!(g.residual_bias < 1e-10);
    }

    #[test]
    fn gse_reduces_local_depolarizing_bias_by_an_order() {
        let m = model(NoiseKind::LocalDepolarizing, 2, 0.01);
        let circ = random_circuit(2, 10, EnsembleKind::CliffordUniform, &m, 31).unwrap();
        let eff = compile_effective(&circ).unwrap();
        let g = gse_cost(&eff.map, &circ.ideal_output()).unwrap();
        assert!(
            g.residual_bias <= 0.1 * g.unmitigated_bias,
            "residual {} vs unmitigated {}",
            g.residual_bias,
            g.unmitigated_bias
        );
    }

    #[test]
    fn sweep_is_deterministic_and_dominates_worst_case() {
        let m = model(NoiseKind::GlobalDepolarizing, 2, 0.01);
        let obs = Observable::single_z(2).unwrap();
        let depths = [1usize, 10, 20];
        let seeds = [5u64, 6];
        let eps = 0.1;
        let run = |method| {
            empirical_cost_sweep(method, &m, &obs, EnsembleKind::CliffordUniform, &depths, eps, 2000, &seeds)
                .unwrap()
        };
        for method in [
            MitigationMethod::Rescaling,
            MitigationMethod::Pec,
            MitigationMethod::Gse,
        ] {
            let a = run(method);
            let b = run(method);
            let rows_a: Vec<String> = a.iter().map(|r| r.csv_row()).collect();
            let rows_b: Vec<String> = b.iter().map(|r| r.csv_row()).collect();
            assert_eq!(rows_a, rows_b, "{method:?} not deterministic");

            // Every empirical cost dominates the worst-case bound; the
            // shot-sampled rescaling cost gets a 3σ-scale allowance for the
            // sample-variance estimator (relative spread ~ sqrt(2/shots)).
            for r in &a {
                let slack = if r.method == "rescaling-mc" {
                    3.0 * (2.0f64 / 2000.0).sqrt()
                } else {
                    1e-9
                };
                let depth = r.depth;
                let bound = crate::bounds::worst_case_bound(
                    1.0,
                    eps,
                    0.01,
                    1.0 / (1.0 - 0.01),
                    depth,
                    true,
                )
                .unwrap();
                assert!(
                    r.value >= bound.value * (1.0 - slack),
                    "{method:?} ({}) at L={depth}: {} < {}",
                    r.method,
                    r.value,
                    bound.value
                );
            }
        }
    }

    #[test]
    fn rescaling_overflow_guard() {
        let m = model(NoiseKind::GlobalDepolarizing, 1, 0.5);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let circ = random_circuit(1, 1, EnsembleKind::Haar, &m, 1).unwrap();
        let obs = Observable::single_z(1).unwrap();
        // depth-1 circuit is fine; fake an absurd factor via a deep model
        // by calling with eps tiny instead.
        let r = rescaling_estimate(&circ, &obs, &m, 1e-200, 0, &mut rng);
        assert!(r.is_err() || r.unwrap().cost_analytic.is_finite());
    }
}
