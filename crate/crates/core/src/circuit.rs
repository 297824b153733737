//! Layered noisy circuits, random-unitary ensembles, and compilation into an
//! effective noise channel.
//!
//! A circuit is `L` layers of (unitary, noise) pairs acting on an initial
//! state. Compilation produces the single channel `E'` with
//! `noisy output = E'(ideal output)`, obtained by conjugating the noisy chain
//! with the inverse of the ideal one. The singular values of the unital block
//! of `E'`, written as `(1-p)^(kL)`, drive the convergence-to-global-
//! depolarizing study.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::channel::{KrausChannel, NoiseKind, NoiseModel, TransferMap};
use crate::error::{Error, Result};
use crate::pauli::{bloch_from_density, dim, min_eigenvalue, BlochVector, DensityMatrix};

fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// One circuit layer: the PTM always present, the Kraus set kept when
/// available so direct density-matrix simulation stays independent of the
/// transfer-matrix route.
#[derive(Debug, Clone)]
pub struct NoiseLayer {
    ptm: TransferMap,
    kraus: Option<KrausChannel>,
}

impl NoiseLayer {
    pub fn from_model(model: &NoiseModel) -> Result<Self> {
        Ok(Self {
            ptm: model.transfer_map()?,
            kraus: Some(model.kraus()?),
        })
    }

    pub fn from_parts(ptm: TransferMap, kraus: Option<KrausChannel>) -> Self {
        Self { ptm, kraus }
    }

    pub fn ptm(&self) -> &TransferMap {
        &self.ptm
    }

    pub fn kraus(&self) -> Option<&KrausChannel> {
        self.kraus.as_ref()
    }
}

#[derive(Debug, Clone)]
pub struct Layer {
    pub unitary: DMatrix<Complex64>,
    pub noise: NoiseLayer,
}

/// Noisy layered circuit: initial state, then `(U_l, E_l)` per layer.
#[derive(Debug, Clone)]
pub struct LayeredCircuit {
    n: usize,
    layers: Vec<Layer>,
    initial_state: DensityMatrix,
}

impl LayeredCircuit {
    /// Validates unitarity of every gate layer (1e-9) and CPTP-ness of every
    /// noise layer.
    pub fn new(n: usize, layers: Vec<Layer>, initial_state: DensityMatrix) -> Result<Self> {
        let d = dim(n);
        if initial_state.nrows() != d || initial_state.ncols() != d {
            return Err(Error::DimensionMismatch {
                context: "LayeredCircuit initial state",
                expected: d,
                actual: initial_state.nrows(),
            });
        }
        for (idx, layer) in layers.iter().enumerate() {
            let u = &layer.unitary;
            if u.nrows() != d || u.ncols() != d {
                return Err(Error::DimensionMismatch {
                    context: "LayeredCircuit unitary",
                    expected: d,
                    actual: u.nrows(),
                });
            }
            let defect = (u.adjoint() * u - DMatrix::<Complex64>::identity(d, d)).norm();
            if defect > 1e-9 {
                return Err(Error::Validation(format!(
                    "layer {idx} unitary defect {defect:.3e}"
                )));
            }
            if !layer.noise.ptm.is_cptp(1e-8) {
                return Err(Error::Validation(format!("layer {idx} noise is not CPTP")));
            }
        }
        Ok(Self {
            n,
            layers,
            initial_state,
        })
    }

    /// All-|0> initial state.
    pub fn ground_state(n: usize) -> DensityMatrix {
        let d = dim(n);
        let mut rho = DMatrix::zeros(d, d);
        rho[(0, 0)] = c64(1.0, 0.0);
        rho
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn initial_state(&self) -> &DensityMatrix {
        &self.initial_state
    }

    /// Noiseless output `U_L ... U_1 rho_0 U_1† ... U_L†`.
    pub fn ideal_output(&self) -> DensityMatrix {
        let mut rho = self.initial_state.clone();
        for layer in &self.layers {
            rho = &layer.unitary * rho * layer.unitary.adjoint();
        }
        rho
    }

    pub fn ideal_bloch(&self) -> Result<BlochVector> {
        bloch_from_density(&self.ideal_output())
    }

    /// Direct density-matrix simulation, applying each unitary and noise
    /// layer in order. Uses the Kraus route when available.
    pub fn noisy_output(&self) -> Result<DensityMatrix> {
        let mut rho = self.initial_state.clone();
        for layer in &self.layers {
            rho = &layer.unitary * rho * layer.unitary.adjoint();
            rho = match &layer.noise.kraus {
                Some(k) => k.apply(&rho),
                None => layer.noise.ptm.apply_density(&rho)?,
            };
        }
        Ok(rho)
    }
}

/// The compiled circuit: `map` is the effective noise channel and
/// `ideal_unitary` the composed noiseless gate.
#[derive(Debug, Clone)]
pub struct EffectiveChannel {
    pub map: TransferMap,
    pub ideal_unitary: DMatrix<Complex64>,
}

/// Compile the circuit into `E' = E_L U_L ... E_1 U_1 U_1† ... U_L†` so that
/// the noisy output equals `E'` applied to the ideal output.
pub fn compile_effective(circ: &LayeredCircuit) -> Result<EffectiveChannel> {
    let n = circ.n();
    let d = dim(n);
    let mut noisy = TransferMap::identity(n);
    let mut ideal_ptm = TransferMap::identity(n);
    let mut ideal_unitary = DMatrix::<Complex64>::identity(d, d);
    for layer in circ.layers() {
        let u_ptm = TransferMap::from_unitary(n, &layer.unitary);
        noisy = layer.noise.ptm.compose(&u_ptm)?.compose(&noisy)?;
        ideal_ptm = u_ptm.compose(&ideal_ptm)?;
        ideal_unitary = &layer.unitary * ideal_unitary;
    }
    // PTMs of unitaries are orthogonal, so the inverse is the transpose.
    let ideal_inverse = TransferMap::from_full(n, ideal_ptm.full().transpose())?;
    Ok(EffectiveChannel {
        map: noisy.compose(&ideal_inverse)?,
        ideal_unitary,
    })
}

/// Random-unitary ensembles for the convergence experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnsembleKind {
    Haar,
    CliffordUniform,
    TwoQubitRandomPairs,
    HardwareEfficient,
}

impl EnsembleKind {
    pub fn label(&self) -> &'static str {
        match self {
            EnsembleKind::Haar => "haar",
            EnsembleKind::CliffordUniform => "clifford",
            EnsembleKind::TwoQubitRandomPairs => "two-qubit-pairs",
            EnsembleKind::HardwareEfficient => "hardware-efficient",
        }
    }
}

impl std::str::FromStr for EnsembleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "haar" => Ok(EnsembleKind::Haar),
            "clifford" | "clifford-uniform" => Ok(EnsembleKind::CliffordUniform),
            "two-qubit-pairs" | "2q-random-pairs" => Ok(EnsembleKind::TwoQubitRandomPairs),
            "hardware-efficient" | "hea" => Ok(EnsembleKind::HardwareEfficient),
            other => Err(Error::Validation(format!("unknown ensemble '{other}'"))),
        }
    }
}

/// Serializable circuit description for reproducible sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircuitSpec {
    pub n: usize,
    pub l: usize,
    pub ensemble: EnsembleKind,
    pub noise: NoiseModel,
    pub seed: u64,
}

/// Haar-random unitary via QR of a complex Ginibre matrix with the
/// R-diagonal phase fix.
pub fn haar_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> DMatrix<Complex64> {
    let g = DMatrix::from_fn(d, d, |_, _| {
        c64(StandardNormal.sample(rng), StandardNormal.sample(rng))
    });
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..d {
        let diag = r[(j, j)];
        let phase = if diag.norm() > 0.0 {
            diag / c64(diag.norm(), 0.0)
        } else {
            c64(1.0, 0.0)
        };
        for i in 0..d {
            q[(i, j)] *= phase;
        }
    }
    q
}

// --- Uniform Clifford sampling -------------------------------------------
//
// Signless tableau sweep: sample a uniform anticommuting Pauli pair for each
// qubit block, reduce it to (X_i, Z_i) by a recorded gate sequence, and
// right-multiply by a uniform Pauli. The (pair, Pauli) choices biject with
// Clifford group elements modulo phase, so the sampled PTMs are exactly
// uniform.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct PauliBits {
    x: u64,
    z: u64,
}

impl PauliBits {
    fn anticommutes(&self, other: &PauliBits) -> bool {
        (((self.x & other.z).count_ones() + (self.z & other.x).count_ones()) % 2) == 1
    }
}

#[derive(Debug, Clone, Copy)]
enum CliffGate {
    H(usize),
    S(usize),
    Cnot(usize, usize),
    Swap(usize, usize),
}

fn apply_gate(g: CliffGate, p: &mut PauliBits) {
    match g {
        CliffGate::H(q) => {
            let bit = 1u64 << q;
            let x = p.x & bit;
            let z = p.z & bit;
            p.x = (p.x & !bit) | z;
            p.z = (p.z & !bit) | x;
        }
        CliffGate::S(q) => {
            let bit = 1u64 << q;
            if p.x & bit != 0 {
                p.z ^= bit;
            }
        }
        CliffGate::Cnot(c, t) => {
            if p.x & (1 << c) != 0 {
                p.x ^= 1 << t;
            }
            if p.z & (1 << t) != 0 {
                p.z ^= 1 << c;
            }
        }
        CliffGate::Swap(a, b) => {
            let (ba, bb) = (1u64 << a, 1u64 << b);
            let xa = (p.x & ba != 0) as u64;
            let xb = (p.x & bb != 0) as u64;
            let za = (p.z & ba != 0) as u64;
            let zb = (p.z & bb != 0) as u64;
            p.x = (p.x & !(ba | bb)) | (xb * ba) | (xa * bb);
            p.z = (p.z & !(ba | bb)) | (zb * ba) | (za * bb);
        }
    }
}

/// Reduce `p` to X on the first available qubit at or after `block`,
/// recording gates and keeping `q` conjugated alongside.
fn reduce_to_x(
    block: usize,
    n: usize,
    p: &mut PauliBits,
    q: &mut PauliBits,
    gates: &mut Vec<CliffGate>,
) {
    let mut push = |g: CliffGate, p: &mut PauliBits, q: &mut PauliBits| {
        apply_gate(g, p);
        apply_gate(g, q);
        gates.push(g);
    };
    for qu in block..n {
        let bit = 1u64 << qu;
        if p.z & bit != 0 {
            if p.x & bit != 0 {
                push(CliffGate::S(qu), p, q);
            } else {
                push(CliffGate::H(qu), p, q);
            }
        }
    }
    let pivot = (block..n).find(|&qu| p.x & (1 << qu) != 0).expect("nonzero");
    for qu in (block..n).filter(|&qu| qu != pivot) {
        if p.x & (1 << qu) != 0 {
            push(CliffGate::Cnot(pivot, qu), p, q);
        }
    }
    if pivot != block {
        push(CliffGate::Swap(block, pivot), p, q);
    }
}

/// Uniformly random n-qubit Clifford unitary (dense, up to global phase).
pub fn clifford_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<Complex64> {
    let mut gates: Vec<CliffGate> = Vec::new();
    for block in 0..n {
        let m = n - block;
        // Uniform nonidentity Pauli on the block...
        let p_code = rng.gen_range(1..(1u64 << (2 * m)));
        let mut p = PauliBits {
            x: (p_code & ((1 << m) - 1)) << block,
            z: (p_code >> m) << block,
        };
        // ...and a uniform anticommuting partner by rejection.
        let mut q;
        loop {
            let q_code = rng.gen_range(0..(1u64 << (2 * m)));
            q = PauliBits {
                x: (q_code & ((1 << m) - 1)) << block,
                z: (q_code >> m) << block,
            };
            if p.anticommutes(&q) {
                break;
            }
        }

        reduce_to_x(block, n, &mut p, &mut q, &mut gates);
        debug_assert_eq!(p.x, 1 << block);
        debug_assert_eq!(p.z, 0);

        let target = PauliBits {
            x: 0,
            z: 1 << block,
        };
        if q != target {
            let mut push = |g: CliffGate, p: &mut PauliBits, q: &mut PauliBits| {
                apply_gate(g, q);
                apply_gate(g, p);
                gates.push(g);
            };
            push(CliffGate::H(block), &mut p, &mut q);
            // q now has an X component on `block`; sweep it to X_block with
            // operations that fix Z_block, then flip back.
            for qu in block..n {
                let bit = 1u64 << qu;
                if q.z & bit != 0 {
                    if q.x & bit != 0 {
                        push(CliffGate::S(qu), &mut p, &mut q);
                    } else if qu != block {
                        push(CliffGate::H(qu), &mut p, &mut q);
                    }
                }
            }
            for qu in (block + 1)..n {
                if q.x & (1 << qu) != 0 {
                    push(CliffGate::Cnot(block, qu), &mut p, &mut q);
                }
            }
            push(CliffGate::H(block), &mut p, &mut q);
        }
        debug_assert_eq!(q.x, 0);
        debug_assert_eq!(q.z, 1 << block);
        debug_assert_eq!(p.x, 1 << block);
        debug_assert_eq!(p.z, 0);
    }

    // The recorded circuit C maps each sampled pair to (X_i, Z_i); the
    // sampled Clifford is C† times a uniform Pauli soaking up the sign bits.
    let d = dim(n);
    let mut u = DMatrix::<Complex64>::identity(d, d);
    for &g in &gates {
        u *= gate_matrix(g, n).adjoint();
    }
    let pauli_code = rng.gen_range(0..(1usize << (2 * n)));
    let pauli = crate::pauli::PauliString::new(n, pauli_code).expect("valid code");
    u * pauli.matrix()
}

fn gate_matrix(g: CliffGate, n: usize) -> DMatrix<Complex64> {
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    match g {
        CliffGate::H(q) => {
            let h = DMatrix::from_row_slice(
                2,
                2,
                &[
                    c64(inv_sqrt2, 0.0),
                    c64(inv_sqrt2, 0.0),
                    c64(inv_sqrt2, 0.0),
                    c64(-inv_sqrt2, 0.0),
                ],
            );
            embed_one_qubit(&h, q_to_qubit(q, n), n)
        }
        CliffGate::S(q) => {
            let s = DMatrix::from_row_slice(
                2,
                2,
                &[c64(1.0, 0.0), c64(0.0, 0.0), c64(0.0, 0.0), c64(0.0, 1.0)],
            );
            embed_one_qubit(&s, q_to_qubit(q, n), n)
        }
        CliffGate::Cnot(cq, t) => {
            let mut m = DMatrix::from_element(4, 4, c64(0.0, 0.0));
            m[(0, 0)] = c64(1.0, 0.0);
            m[(1, 1)] = c64(1.0, 0.0);
            m[(2, 3)] = c64(1.0, 0.0);
            m[(3, 2)] = c64(1.0, 0.0);
            embed_two_qubit(&m, q_to_qubit(cq, n), q_to_qubit(t, n), n)
        }
        CliffGate::Swap(a, b) => {
            let mut m = DMatrix::from_element(4, 4, c64(0.0, 0.0));
            m[(0, 0)] = c64(1.0, 0.0);
            m[(1, 2)] = c64(1.0, 0.0);
            m[(2, 1)] = c64(1.0, 0.0);
            m[(3, 3)] = c64(1.0, 0.0);
            embed_two_qubit(&m, q_to_qubit(a, n), q_to_qubit(b, n), n)
        }
    }
}

/// Tableau bit positions count from 0; circuit qubit 0 is the most
/// significant basis bit.
fn q_to_qubit(bit: usize, n: usize) -> usize {
    n - 1 - bit
}

/// Embed a single-qubit gate at `qubit` (0 = most significant).
pub fn embed_one_qubit(u: &DMatrix<Complex64>, qubit: usize, n: usize) -> DMatrix<Complex64> {
    let d = dim(n);
    let shift = n - 1 - qubit;
    let mut out = DMatrix::zeros(d, d);
    for col in 0..d {
        let bit = (col >> shift) & 1;
        for (new_bit, row_base) in [(0usize, col & !(1 << shift)), (1, col | (1 << shift))] {
            let amp = u[(new_bit, bit)];
            if amp != c64(0.0, 0.0) {
                out[(row_base, col)] += amp;
            }
        }
    }
    out
}

/// Embed a two-qubit gate; `u` acts on the ordered pair `(q1, q2)` with `q1`
/// the more significant local index.
pub fn embed_two_qubit(
    u: &DMatrix<Complex64>,
    q1: usize,
    q2: usize,
    n: usize,
) -> DMatrix<Complex64> {
    assert_ne!(q1, q2);
    let d = dim(n);
    let s1 = n - 1 - q1;
    let s2 = n - 1 - q2;
    let mut out = DMatrix::zeros(d, d);
    for col in 0..d {
        let b1 = (col >> s1) & 1;
        let b2 = (col >> s2) & 1;
        let local_col = (b1 << 1) | b2;
        for local_row in 0..4 {
            let amp = u[(local_row, local_col)];
            if amp != c64(0.0, 0.0) {
                let mut row = col & !(1 << s1) & !(1 << s2);
                if local_row & 0b10 != 0 {
                    row |= 1 << s1;
                }
                if local_row & 0b01 != 0 {
                    row |= 1 << s2;
                }
                out[(row, col)] += amp;
            }
        }
    }
    out
}

fn rotation_z(angle: f64) -> DMatrix<Complex64> {
    DMatrix::from_row_slice(
        2,
        2,
        &[
            Complex64::from_polar(1.0, -angle / 2.0),
            c64(0.0, 0.0),
            c64(0.0, 0.0),
            Complex64::from_polar(1.0, angle / 2.0),
        ],
    )
}

fn rotation_y(angle: f64) -> DMatrix<Complex64> {
    let (s, c) = (angle / 2.0).sin_cos();
    DMatrix::from_row_slice(2, 2, &[c64(c, 0.0), c64(-s, 0.0), c64(s, 0.0), c64(c, 0.0)])
}

/// One hardware-efficient layer: ZYZ rotations with uniform angles on every
/// qubit, then CZ on nearest-neighbor pairs with the brick parity set by
/// `layer_index`.
pub fn hardware_efficient_layer<R: Rng + ?Sized>(
    n: usize,
    layer_index: usize,
    rng: &mut R,
) -> DMatrix<Complex64> {
    let d = dim(n);
    let mut u = DMatrix::<Complex64>::identity(1, 1);
    for _ in 0..n {
        let a = rng.gen_range(0.0..std::f64::consts::TAU);
        let b = rng.gen_range(0.0..std::f64::consts::TAU);
        let g = rng.gen_range(0.0..std::f64::consts::TAU);
        let rot = rotation_z(g) * rotation_y(b) * rotation_z(a);
        u = u.kronecker(&rot);
    }
    debug_assert_eq!(u.nrows(), d);
    let mut cz = DMatrix::<Complex64>::identity(4, 4);
    cz[(3, 3)] = c64(-1.0, 0.0);
    let start = layer_index % 2;
    let mut q = start;
    while q + 1 < n {
        u = embed_two_qubit(&cz, q, q + 1, n) * u;
        q += 2;
    }
    u
}

/// One layer of independent Haar 4x4 unitaries on a random (near-)perfect
/// matching of the qubits.
pub fn two_qubit_pairs_layer<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<Complex64> {
    let d = dim(n);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut u = DMatrix::<Complex64>::identity(d, d);
    for pair in order.chunks_exact(2) {
        let gate = haar_unitary(4, rng);
        u = embed_two_qubit(&gate, pair[0], pair[1], n) * u;
    }
    u
}

/// Draw one layer unitary from the ensemble. `layer_index` sets the brick
/// parity of the hardware-efficient ansatz and is ignored otherwise.
pub fn sample_unitary<R: Rng + ?Sized>(
    kind: EnsembleKind,
    n: usize,
    layer_index: usize,
    rng: &mut R,
) -> Result<DMatrix<Complex64>> {
    match kind {
        EnsembleKind::Haar => Ok(haar_unitary(dim(n), rng)),
        EnsembleKind::CliffordUniform => Ok(clifford_unitary(n, rng)),
        EnsembleKind::TwoQubitRandomPairs => {
            if n < 2 {
                return Err(Error::SizeOutOfRange { n, max: 1 });
            }
            Ok(two_qubit_pairs_layer(n, rng))
        }
        EnsembleKind::HardwareEfficient => {
            if n < 2 {
                return Err(Error::SizeOutOfRange { n, max: 1 });
            }
            Ok(hardware_efficient_layer(n, layer_index, rng))
        }
    }
}

/// Random circuit with one noise channel per layer, deterministic in `seed`.
pub fn random_circuit(
    n: usize,
    depth: usize,
    kind: EnsembleKind,
    noise: &NoiseModel,
    seed: u64,
) -> Result<LayeredCircuit> {
    if noise.n != n {
        return Err(Error::DimensionMismatch {
            context: "random_circuit noise",
            expected: n,
            actual: noise.n,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise_layer = NoiseLayer::from_model(noise)?;
    let layers = (0..depth)
        .map(|l| {
            Ok(Layer {
                unitary: sample_unitary(kind, n, l, &mut rng)?,
                noise: noise_layer.clone(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    LayeredCircuit::new(n, layers, LayeredCircuit::ground_state(n))
}

/// Per-direction singular exponents of the effective channel's unital block:
/// `sigma_i = (1-p)^(k_i L)`, reported ascending in `k` together with their
/// geometric-mean exponent.
#[derive(Debug, Clone)]
pub struct SingularExponents {
    pub k: Vec<f64>,
    pub k_geo: f64,
}

pub fn singular_exponents(eff: &EffectiveChannel, p: f64, depth: usize) -> Result<SingularExponents> {
    if !(0.0..1.0).contains(&p) || p == 0.0 {
        return Err(Error::Validation(format!("p = {p} must lie in (0, 1)")));
    }
    if depth == 0 {
        return Err(Error::Validation("depth must be at least 1".into()));
    }
    let a = eff.map.unital_part();
    exponents_from_unital(&a, 0.0, p, depth)
}

fn exponents_from_unital(
    a: &DMatrix<f64>,
    log_scale: f64,
    p: f64,
    depth: usize,
) -> Result<SingularExponents> {
    let svd = a.clone().svd(false, false);
    let denom = depth as f64 * (1.0 - p).ln();
    let mut k: Vec<f64> = svd
        .singular_values
        .iter()
        .map(|&s| {
            if s <= 0.0 {
                return Err(Error::Validation(
                    "unital part is singular; exponents undefined".into(),
                ));
            }
            Ok((s.ln() + log_scale) / denom)
        })
        .collect::<Result<Vec<_>>>()?;
    k.sort_by(f64::total_cmp);
    let k_geo = k.iter().sum::<f64>() / k.len() as f64;
    Ok(SingularExponents { k, k_geo })
}

/// Theoretical geometric-mean exponent per noise model:
/// global depolarizing 1, local depolarizing `3n 4^(n-1)/(4^n-1)`,
/// dephasing and amplitude damping `2n 4^(n-1)/(4^n-1)`.
pub fn k_mean_theory(model: &NoiseModel) -> f64 {
    let n = model.n as f64;
    let four_n = (4.0f64).powi(model.n as i32);
    let ratio = n * four_n / 4.0 / (four_n - 1.0);
    match model.kind {
        NoiseKind::GlobalDepolarizing => 1.0,
        NoiseKind::LocalDepolarizing => 3.0 * ratio,
        NoiseKind::LocalDephasing | NoiseKind::AmplitudeDamping => 2.0 * ratio,
    }
}

/// One row of a depth sweep.
#[derive(Debug, Clone, Copy)]
pub struct ExponentSweepPoint {
    pub depth: usize,
    pub k_min: f64,
    pub k_max: f64,
    pub k_geo: f64,
}

/// Track the effective channel incrementally through a random circuit,
/// emitting exponents at each requested depth. The running unital block is
/// renormalized every layer with the scale kept in the log domain, so deep
/// sweeps cannot underflow.
pub fn exponent_sweep(
    n: usize,
    noise: &NoiseModel,
    kind: EnsembleKind,
    seed: u64,
    depths: &[usize],
) -> Result<Vec<ExponentSweepPoint>> {
    if noise.n != n {
        return Err(Error::DimensionMismatch {
            context: "exponent_sweep noise",
            expected: n,
            actual: noise.n,
        });
    }
    if depths.is_empty() {
        return Ok(Vec::new());
    }
    let mut sorted = depths.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted[0] == 0 {
        return Err(Error::Validation("depths must be at least 1".into()));
    }
    let p = noise.p;
    let max_depth = *sorted.last().expect("nonempty");

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise_a = noise.transfer_map()?.unital_part();
    let m = noise_a.nrows();
    let mut acc = DMatrix::<f64>::identity(m, m);
    let mut log_scale = 0.0f64;
    let mut out = Vec::with_capacity(sorted.len());
    let mut next = 0usize;

    for layer in 0..max_depth {
        let u = sample_unitary(kind, n, layer, &mut rng)?;
        let r = TransferMap::from_unitary(n, &u).unital_part();
        // E'_{l+1} = E U E'_l U†; unital blocks multiply.
        acc = &noise_a * &r * &acc * r.transpose();
        let scale = acc.norm();
        if scale > 0.0 {
            acc /= scale;
            log_scale += scale.ln();
        }
        let depth = layer + 1;
        if next < sorted.len() && sorted[next] == depth {
            let exps = exponents_from_unital(&acc, log_scale, p, depth)?;
            out.push(ExponentSweepPoint {
                depth,
                k_min: exps.k[0],
                k_max: *exps.k.last().expect("nonempty"),
                k_geo: exps.k_geo,
            });
            next += 1;
        }
    }
    Ok(out)
}

/// Density-matrix view of a Bloch vector pushed through a transfer map;
/// test harnesses use it as the oracle pairing for [`compile_effective`].
pub fn effective_output(eff: &EffectiveChannel, ideal: &DensityMatrix) -> Result<DensityMatrix> {
    eff.map.apply_density(ideal)
}

/// PSD / trace sanity for simulated outputs.
pub fn output_is_physical(rho: &DensityMatrix) -> bool {
    (rho.trace() - c64(1.0, 0.0)).norm() < 1e-9 && min_eigenvalue(rho) >= -1e-10
}
