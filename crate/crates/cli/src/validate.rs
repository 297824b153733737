//! The `validate` subcommand: run every module's invariant suite at desk
//! scale and report one line per check.

use nalgebra::DMatrix;
use qemb_core::bounds::{nu_recursion, average_bound_homogeneous, average_rate_nonunital};
use qemb_core::channel::{
    beta_margin, eta, nu, nu_choi_route, BetaOptions, NoiseKind, NoiseModel, TransferMap,
};
use qemb_core::circuit::{
    compile_effective, exponent_sweep, k_mean_theory, random_circuit, EnsembleKind,
};
use qemb_core::fisher::{cr_bound, optimal_observable, qfi_bloch, variance};
use qemb_core::mitigation::{
    gse_cost, pauli_conjugation_ptm, pauli_quasiprob, quasiprob_lp, rescaling_estimate,
};
use qemb_core::moments::{verify_design, weingarten2};
use qemb_core::pauli::{
    bloch_from_density, density_from_bloch, pauli_basis, Observable,
};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub expected_fail: bool,
    pub detail: String,
}

impl CheckResult {
    /// An expected-fail fixture "passes" the suite by failing its check.
    pub fn suite_ok(&self) -> bool {
        self.passed != self.expected_fail
    }
}

fn check(
    name: &'static str,
    expected_fail: bool,
    body: impl FnOnce() -> Result<String, String>,
) -> CheckResult {
    match body() {
        Ok(detail) => CheckResult {
            name,
            passed: true,
            expected_fail,
            detail,
        },
        Err(detail) => CheckResult {
            name,
            passed: false,
            expected_fail,
            detail,
        },
    }
}

fn all_kinds() -> [NoiseKind; 4] {
    [
        NoiseKind::GlobalDepolarizing,
        NoiseKind::LocalDepolarizing,
        NoiseKind::LocalDephasing,
        NoiseKind::AmplitudeDamping,
    ]
}

fn random_state(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<num_complex::Complex64> {
    let d = 1usize << n;
    let g = DMatrix::from_fn(d, d, |_, _| {
        num_complex::Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    });
    let h = &g * g.adjoint();
    let tr = h.trace().re;
    
    h * num_complex::Complex64::new(0.7 / tr, 0.0)
        + DMatrix::identity(d, d) * num_complex::Complex64::new(0.3 / d as f64, 0.0)
}

pub fn run_all(n_max: usize, seed: u64) -> Vec<CheckResult> {
    let n_max = n_max.clamp(1, 3);
    let mut results = Vec::new();

    results.push(check("pauli-orthogonality", false, || {
        for n in 1..=n_max.min(2) {
            let basis = pauli_basis(n).map_err(|e| e.to_string())?;
            for a in &basis {
                for b in &basis {
                    let t = a.trace_with(&b.matrix());
                    let want = if a.code() == b.code() { (1 << n) as f64 } else { 0.0 };
                    if (t.re - want).abs() > 1e-12 || t.im.abs() > 1e-12 {
                        return Err(format!("tr[P{} P{}] = {t}", a.code(), b.code()));
                    }
                }
            }
        }
        Ok("tr[P_i P_j] = 2^n δ_ij".into())
    }));

    results.push(check("pauli-roundtrip-purity", false, || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst: f64 = 0.0;
        for n in 1..=n_max.min(2) {
            for _ in 0..10 {
                let rho = random_state(n, &mut rng);
                let b = bloch_from_density(&rho).map_err(|e| e.to_string())?;
                worst = worst.max((density_from_bloch(&b) - &rho).norm());
                let purity = (&rho * &rho).trace().re;
                let ident = (2.0f64).powi(-(n as i32)) + b.norm_squared() / 2.0;
                if (purity - ident).abs() > 1e-10 {
                    return Err(format!("purity identity off by {}", purity - ident));
                }
            }
        }
        if worst > 1e-12 {
            return Err(format!("roundtrip residual {worst:.2e}"));
        }
        Ok(format!("roundtrip residual {worst:.2e}"))
    }));

    results.push(check("channel-cptp-models", false, || {
        for kind in all_kinds() {
            for p in [0.001, 0.01, 0.1] {
                let m = NoiseModel::new(kind, n_max.min(2), p).map_err(|e| e.to_string())?;
                if !m.kraus().map_err(|e| e.to_string())?.is_cptp(1e-10) {
                    return Err(format!("{kind:?} p={p} Kraus set not CPTP"));
                }
                if !m.transfer_map().map_err(|e| e.to_string())?.is_cptp(1e-10) {
                    return Err(format!("{kind:?} p={p} Choi not PSD"));
                }
            }
        }
        Ok("four models CPTP at p ∈ {1e-3, 1e-2, 1e-1}".into())
    }));

    results.push(check("channel-inverse-roundtrip", false, || {
        let mut worst: f64 = 0.0;
        for kind in all_kinds() {
            for p in [0.001, 0.01, 0.1] {
                let n = n_max.min(2);
                let t = NoiseModel::new(kind, n, p)
                    .map_err(|e| e.to_string())?
                    .transfer_map()
                    .map_err(|e| e.to_string())?;
                let inv = t.inverse().map_err(|e| e.to_string())?;
                let round = inv.compose(&t).map_err(|e| e.to_string())?;
                worst = worst.max((round.full() - TransferMap::identity(n).full()).norm());
            }
        }
        if worst > 1e-9 {
            return Err(format!("inverse roundtrip residual {worst:.2e}"));
        }
        Ok(format!("residual {worst:.2e}"))
    }));

    results.push(check("nu-route-equivalence", false, || {
        let mut worst: f64 = 0.0;
        for kind in all_kinds() {
            let inv = NoiseModel::new(kind, 1, 0.05)
                .map_err(|e| e.to_string())?
                .transfer_map()
                .map_err(|e| e.to_string())?
                .inverse()
                .map_err(|e| e.to_string())?;
            worst = worst.max((nu(&inv) - nu_choi_route(&inv)).abs());
        }
        if worst > 1e-12 {
            return Err(format!("route gap {worst:.2e}"));
        }
        Ok(format!("Frobenius vs Choi gap {worst:.2e}"))
    }));

    results.push(check("nu-eta-multiplicative", false, || {
        let a = NoiseModel::new(NoiseKind::AmplitudeDamping, 1, 0.07)
            .and_then(|m| m.transfer_map())
            .and_then(|t| t.inverse())
            .map_err(|e| e.to_string())?;
        let b = NoiseModel::new(NoiseKind::LocalDepolarizing, 1, 0.03)
            .and_then(|m| m.transfer_map())
            .and_then(|t| t.inverse())
            .map_err(|e| e.to_string())?;
        let ab = a.tensor(&b);
        let dn = (nu(&ab) - nu(&a) * nu(&b)).abs();
        let de = (eta(&ab) - eta(&a) * eta(&b)).abs();
        if dn > 1e-10 || de > 1e-10 {
            return Err(format!("nu gap {dn:.2e}, eta gap {de:.2e}"));
        }
        Ok(format!("nu gap {dn:.2e}, eta gap {de:.2e}"))
    }));

    results.push(check("gamma-closed-forms", false, || {
        let p = 0.02;
        let g1 = NoiseModel::new(NoiseKind::GlobalDepolarizing, 2, p)
            .and_then(|m| m.transfer_map())
            .map_err(|e| e.to_string())?
            .noise_strength();
        if (g1 - 1.0 / (1.0 - p)).abs() > 1e-12 {
            return Err(format!("global-dep gamma {g1}"));
        }
        let g2 = NoiseModel::new(NoiseKind::AmplitudeDamping, 1, p)
            .and_then(|m| m.transfer_map())
            .map_err(|e| e.to_string())?
            .noise_strength();
        if (g2 - (1.0f64 - p).powf(-0.5)).abs() > 1e-12 {
            return Err(format!("amp-damping gamma {g2}"));
        }
        Ok("Γ matches 1/(1-p) and (1-p)^(-1/2)".into())
    }));

    results.push(check("beta-global-dep", false, || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xbe7a);
        let t = NoiseModel::new(NoiseKind::GlobalDepolarizing, 1, 0.01)
            .and_then(|m| m.transfer_map())
            .map_err(|e| e.to_string())?;
        let opts = BetaOptions {
            restarts: 8,
            ..Default::default()
        };
        let beta = beta_margin(&t, opts, &mut rng).map_err(|e| e.to_string())?.beta;
        if (beta - 0.01).abs() > 1e-6 {
            return Err(format!("numeric beta {beta}"));
        }
        Ok(format!("numeric beta {beta:.8} vs analytic 0.01"))
    }));

    results.push(check("circuit-oracle-equivalence", false, || {
        let mut worst: f64 = 0.0;
        let mut idx = 0u64;
        for kind in all_kinds() {
            for n in 1..=n_max.min(2) {
                idx += 1;
                let noise = NoiseModel::new(kind, n, 0.03).map_err(|e| e.to_string())?;
                let circ = random_circuit(n, 4, EnsembleKind::Haar, &noise, seed + idx)
                    .map_err(|e| e.to_string())?;
                let direct = circ.noisy_output().map_err(|e| e.to_string())?;
                let eff = compile_effective(&circ).map_err(|e| e.to_string())?;
                let via = eff
                    .map
                    .apply_density(&circ.ideal_output())
                    .map_err(|e| e.to_string())?;
                worst = worst.max((direct - via).norm());
            }
        }
        if worst > 1e-9 {
            return Err(format!("oracle gap {worst:.2e}"));
        }
        Ok(format!("max gap {worst:.2e}"))
    }));

    results.push(check("exponents-match-theory", false, || {
        for kind in [
            NoiseKind::LocalDepolarizing,
            NoiseKind::LocalDephasing,
            NoiseKind::AmplitudeDamping,
        ] {
            let n = n_max.min(2);
            let noise = NoiseModel::new(kind, n, 1e-3).map_err(|e| e.to_string())?;
            let target = k_mean_theory(&noise);
            let pts = exponent_sweep(n, &noise, EnsembleKind::Haar, seed, &[1, 4, 9])
                .map_err(|e| e.to_string())?;
            for pt in pts {
                if (pt.k_geo - target).abs() > 1e-8 {
                    return Err(format!(
                        "{kind:?}: k_geo {} vs theory {target} at depth {}",
                        pt.k_geo, pt.depth
                    ));
                }
            }
        }
        Ok("k_geo equals its determinant value at every depth".into())
    }));

    results.push(check("fisher-saturation", false, || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xf1);
        let t = NoiseModel::new(NoiseKind::AmplitudeDamping, 1, 0.2)
            .and_then(|m| m.transfer_map())
            .map_err(|e| e.to_string())?;
        let x = Observable::single_z(1).map_err(|e| e.to_string())?;
        let y = optimal_observable(&t, &x).map_err(|e| e.to_string())?;
        let mut worst: f64 = 0.0;
        for _ in 0..5 {
            let rho = random_state(1, &mut rng);
            let theta = bloch_from_density(&rho).map_err(|e| e.to_string())?;
            let j = qfi_bloch(&t, &theta).map_err(|e| e.to_string())?;
            let bound = cr_bound(&j, &x, 1.0).map_err(|e| e.to_string())?;
            let noisy = t.apply_density(&rho).map_err(|e| e.to_string())?;
            worst = worst.max((bound - variance(&noisy, &y.matrix())).abs());
        }
        if worst > 1e-9 {
            return Err(format!("saturation gap {worst:.2e}"));
        }
        Ok(format!("CR bound = Var[Y] within {worst:.2e}"))
    }));

    results.push(check("single-layer-qfi-cap", false, || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x51);
        let opts = BetaOptions {
            restarts: 8,
            ..Default::default()
        };
        for _ in 0..10 {
            let n = 1 + (rng.gen_range(0..n_max.min(2)));
            let n = n.min(2);
            let raw = TransferMap::from_kraus(&qemb_core::channel::random_cptp_kraus(
                n, 3, &mut rng,
            ));
            let w = rng.gen_range(0.1..0.4);
            let side = 1usize << (2 * n);
            let mut twirl = DMatrix::<f64>::zeros(side, side);
            twirl[(0, 0)] = 1.0;
            let t = TransferMap::from_full(n, raw.full() * (1.0 - w) + twirl * w)
                .map_err(|e| e.to_string())?;
            let beta = beta_margin(&t, opts, &mut rng).map_err(|e| e.to_string())?.beta;
            let gamma = t.noise_strength();
            let bound = (2.0f64).powi(n as i32 - 1) / beta / (gamma * gamma);
            let theta = bloch_from_density(&random_state(n, &mut rng)).map_err(|e| e.to_string())?;
            let j = qfi_bloch(&t, &theta).map_err(|e| e.to_string())?;
            if j.max_eigenvalue() > bound + 1e-8 {
                return Err(format!("J_max {} > bound {bound}", j.max_eigenvalue()));
            }
        }
        Ok("J ⪯ 2^(n-1) β^-1 Γ^-2 I on 10 random channels".into())
    }));

    results.push(check("bounds-recursion-product", false, || {
        let p = 0.03f64;
        let nu_layer = (4.0 - 2.0 * p + p * p) / (4.0 * (1.0 - p) * (1.0 - p));
        let mut acc = 1.0f64;
        for _ in 0..7 {
            acc = nu_recursion(acc, nu_layer, 2);
        }
        let product = (acc - 0.25) * 4.0 / 3.0;
        // At n = 1 the bound's additive offset (2^n - 2)/(4^n - 1) vanishes,
        // so the scale-free value is the product itself.
        let r = average_bound_homogeneous(nu_layer, 1, 8, 1.0, 1.0).map_err(|e| e.to_string())?;
        let gap = (r.scale_free - product).abs();
        if gap > 1e-12 {
            return Err(format!("recursion/product gap {gap:.2e}"));
        }
        Ok(format!("gap {gap:.2e}"))
    }));

    results.push(check("rate-unital-reduction", false, || {
        let nu0 = 1.021;
        let d2 = 16.0;
        let a = average_rate_nonunital(nu0, 0.5, 2);
        let b = (d2 * nu0 * nu0 - 1.0) / (d2 - 1.0);
        if (a - b).abs() > 1e-14 {
            return Err(format!("rates differ: {a} vs {b}"));
        }
        Ok("η0 = 1/2 recovers the unital rate".into())
    }));

    results.push(check("pec-closed-forms", false, || {
        let p = 0.05;
        let inv = NoiseModel::new(NoiseKind::LocalDepolarizing, 1, p)
            .and_then(|m| m.transfer_map())
            .and_then(|t| t.inverse())
            .map_err(|e| e.to_string())?;
        let walsh = pauli_quasiprob(&inv).map_err(|e| e.to_string())?.gamma;
        let closed = (2.0 + p) / (2.0 - 2.0 * p);
        let dict: Vec<TransferMap> = (0..4)
            .map(|c| pauli_conjugation_ptm(1, c))
            .collect::<Result<_, _>>()
            .map_err(|e: qemb_core::Error| e.to_string())?;
        let lp = quasiprob_lp(&inv, &dict).map_err(|e| e.to_string())?.gamma;
        if (walsh - closed).abs() > 1e-9 || (lp - closed).abs() > 1e-9 {
            return Err(format!("γ: walsh {walsh}, lp {lp}, closed {closed}"));
        }
        Ok(format!("γ = {closed:.6} via transform and LP"))
    }));

    results.push(check("gse-global-dep", false, || {
        let p = 0.01;
        let depth = 5;
        let noise = NoiseModel::new(NoiseKind::GlobalDepolarizing, 2, p).map_err(|e| e.to_string())?;
        let circ = random_circuit(2, depth, EnsembleKind::CliffordUniform, &noise, seed + 5)
            .map_err(|e| e.to_string())?;
        let eff = compile_effective(&circ).map_err(|e| e.to_string())?;
        let g = gse_cost(&eff.map, &circ.ideal_output()).map_err(|e| e.to_string())?;
        let q = (1.0f64 - p).powi(depth as i32);
        if (g.c1 + (1.0 - q) / q).abs() > 1e-8 || (g.c2 - 1.0 / q).abs() > 1e-8 {
            return Err(format!("c = ({}, {})", g.c1, g.c2));
        }
        Ok(format!("c1 = {:.8}, c2 = {:.8}, bias {:.1e}", g.c1, g.c2, g.residual_bias))
    }));

    results.push(check("rescaling-unbiased", false, || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x2e);
        let mut worst: f64 = 0.0;
        for i in 0..10u64 {
            let n = 1 + (i as usize % n_max.min(2));
            let noise = NoiseModel::new(NoiseKind::GlobalDepolarizing, n, 0.01)
                .map_err(|e| e.to_string())?;
            let circ = random_circuit(n, 1 + i as usize % 8, EnsembleKind::CliffordUniform, &noise, seed + i)
                .map_err(|e| e.to_string())?;
            let obs = Observable::single_z(n).map_err(|e| e.to_string())?;
            let r = rescaling_estimate(&circ, &obs, &noise, 0.1, 0, &mut rng)
                .map_err(|e| e.to_string())?;
            worst = worst.max(r.bias.abs());
        }
        if worst > 1e-12 {
            return Err(format!("max bias {worst:.2e}"));
        }
        Ok(format!("max bias {worst:.2e}"))
    }));

    results.push(check("weingarten-identity", false, || {
        for d in 2..=8usize {
            let (w11, w2) = weingarten2(d).map_err(|e| e.to_string())?;
            let df = d as f64;
            if (df * df * w11 + df * w2 - 1.0).abs() > 1e-14 {
                return Err(format!("row-sum identity fails at d = {d}"));
            }
        }
        Ok("d² Wg[1,1] + d Wg[2] = 1".into())
    }));

    for (kind, name) in [
        (EnsembleKind::Haar, "design-haar"),
        (EnsembleKind::CliffordUniform, "design-clifford"),
    ] {
        results.push(check(name, false, move || {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ kind.label().len() as u64);
            let checks = verify_design(kind, 2, 20_000, &mut rng).map_err(|e| e.to_string())?;
            let sigmas: Vec<String> = checks.iter().map(|c| format!("{:.2}σ", c.sigma)).collect();
            if checks.iter().all(|c| c.pass) {
                Ok(format!("moment checks at [{}]", sigmas.join(", ")))
            } else {
                Err(format!("moment check outside 4σ: [{}]", sigmas.join(", ")))
            }
        }));
    }

    results.push(check("design-hea-single-layer", true, || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x8ea);
        let checks =
            verify_design(EnsembleKind::HardwareEfficient, 2, 20_000, &mut rng).map_err(|e| e.to_string())?;
        let failed = checks
            .iter()
            .filter(|c| c.label.starts_with("second-moment"))
            .any(|c| !c.pass);
        if failed {
            // The fixture is supposed to fail; surface that as Err so the
            // expected-fail accounting sees a failure.
            Err("single hardware-efficient layer is not a 2-design".into())
        } else {
            Ok("second-moment checks unexpectedly passed".into())
        }
    }));

    results
}
