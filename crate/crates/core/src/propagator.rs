//! Time propagation of driven spin Hamiltonians
//! `H(t) = H₀ + Σ_k 2Ω_k cos(ω_k t + φ_k) X_k`.
//!
//! The static part is diagonalised once and the drive is integrated in its
//! interaction picture with the fourth-order Magnus expansion (two Gauss
//! nodes, one commutator), so every step is an exact exponential of a
//! Hermitian matrix. When all drives share one carrier the one-period
//! propagator is computed once and raised to the number of whole periods.

use std::f64::consts::PI;

use nalgebra::{Complex, DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;

const I: C64 = C64::new(0.0, 1.0);

/// A state vector over the product basis of N ions (dimension 4^N).
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    amplitudes: DVector<C64>,
}

pub const MAX_DYNAMICS_IONS: usize = 4;
const NORM_TOL: f64 = 1e-9;

fn ions_for_dim(dim: usize) -> Option<usize> {
    (1..=MAX_DYNAMICS_IONS).find(|&n| 4usize.pow(n as u32) == dim)
}

impl QuantumState {
    pub fn new(amplitudes: DVector<C64>) -> Result<Self> {
        if ions_for_dim(amplitudes.len()).is_none() {
            return Err(Error::Domain(format!(
                "state dimension {} is not 4^N with 1 ≤ N ≤ {MAX_DYNAMICS_IONS}",
                amplitudes.len()
            )));
        }
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::Domain(format!("state norm {norm} is not 1")));
        }
        Ok(QuantumState { amplitudes })
    }

    /// Normalises `amplitudes` before constructing the state.
    pub fn normalized(amplitudes: DVector<C64>) -> Result<Self> {
        let norm = amplitudes.norm();
        if !(norm > 0.0) {
            return Err(Error::Domain("zero state vector".into()));
        }
        Self::new(amplitudes / C64::from(norm))
    }

    /// Basis vector `index` of an `n_ions` register.
    pub fn basis(n_ions: usize, index: usize) -> Result<Self> {
        let dim = 4usize.pow(n_ions as u32);
        if index >= dim {
            return Err(Error::Domain(format!("basis index {index} ≥ {dim}")));
        }
        let mut v = DVector::zeros(dim);
        v[index] = C64::from(1.0);
        Self::new(v)
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn n_ions(&self) -> usize {
        ions_for_dim(self.dim()).expect("validated at construction")
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub fn amplitude(&self, index: usize) -> C64 {
        self.amplitudes[index]
    }

    pub fn population(&self, index: usize) -> f64 {
        self.amplitudes[index].norm_sqr()
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    /// ⟨self|other⟩
    pub fn overlap(&self, other: &QuantumState) -> C64 {
        self.amplitudes.dotc(&other.amplitudes)
    }

    /// |⟨self|other⟩|²
    pub fn fidelity(&self, other: &QuantumState) -> f64 {
        self.overlap(other).norm_sqr()
    }

    /// Max-norm distance between amplitude vectors.
    pub fn distance(&self, other: &QuantumState) -> f64 {
        (&self.amplitudes - &other.amplitudes).camax()
    }

    pub fn apply(&self, unitary: &DMatrix<C64>) -> Result<QuantumState> {
        if unitary.nrows() != self.dim() || unitary.ncols() != self.dim() {
            return Err(Error::Domain(format!(
                "operator of shape {}×{} applied to dimension {}",
                unitary.nrows(),
                unitary.ncols(),
                self.dim()
            )));
        }
        Self::new(unitary * &self.amplitudes)
    }
}

/// One monochromatic drive term 2Ω [cos(ωt + φ) X + sin(ωt + φ) Y].
///
/// With X = T_x (Y absent) this is a linearly polarised drive whose resonant
/// Rabi frequency is Ω; with X = T_x/2, Y = ±T_y/2 it is circularly polarised
/// with the same resonant Rabi frequency and no counter-rotating part.
#[derive(Debug, Clone, PartialEq)]
pub struct Drive {
    /// Hermitian in-phase operator X.
    pub operator: DMatrix<C64>,
    /// Hermitian quadrature operator Y.
    pub quadrature: Option<DMatrix<C64>>,
    /// Ω in rad/s.
    pub rabi_rate: f64,
    /// ω in rad/s.
    pub carrier: f64,
    pub phase: f64,
}

impl Drive {
    pub fn linear(operator: DMatrix<C64>, rabi_rate: f64, carrier: f64, phase: f64) -> Self {
        Drive {
            operator,
            quadrature: None,
            rabi_rate,
            carrier,
            phase,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DrivenHamiltonian {
    /// Hermitian, rad/s.
    pub static_part: DMatrix<C64>,
    pub drives: Vec<Drive>,
}

fn is_hermitian(m: &DMatrix<C64>) -> bool {
    (m - m.adjoint()).camax() <= 1e-12 * m.camax().max(1.0)
}

impl DrivenHamiltonian {
    pub fn undriven(static_part: DMatrix<C64>) -> Self {
        DrivenHamiltonian {
            static_part,
            drives: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.static_part.nrows()
    }

    /// Lab-frame H(t).
    pub fn at(&self, t: f64) -> DMatrix<C64> {
        let mut h = self.static_part.clone();
        for d in &self.drives {
            let theta = d.carrier * t + d.phase;
            h += &d.operator * C64::from(2.0 * d.rabi_rate * theta.cos());
            if let Some(y) = &d.quadrature {
                h += y * C64::from(2.0 * d.rabi_rate * theta.sin());
            }
        }
        h
    }

    fn validate(&self) -> Result<()> {
        let n = self.dim();
        if self.static_part.ncols() != n {
            return Err(Error::Domain("static Hamiltonian is not square".into()));
        }
        if !is_hermitian(&self.static_part) {
            return Err(Error::Domain("static Hamiltonian is not Hermitian".into()));
        }
        for d in &self.drives {
            for op in std::iter::once(&d.operator).chain(d.quadrature.iter()) {
                if op.shape() != (n, n) {
                    return Err(Error::Domain("drive operator has wrong shape".into()));
                }
                if !is_hermitian(op) {
                    return Err(Error::Domain("drive operator is not Hermitian".into()));
                }
            }
            if !(d.carrier >= 0.0) || !d.carrier.is_finite() || !d.rabi_rate.is_finite() {
                return Err(Error::Domain("drive carrier must be non-negative".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagatorOptions {
    /// Max-norm change of the propagator under step doubling.
    pub tolerance: f64,
    /// Magnus steps per carrier period (or per fastest cycle) on the first pass.
    pub initial_steps: usize,
    /// Upper limit on steps per period before giving up.
    pub max_steps: usize,
    /// Rotating-wave cutoff in rad/s: interaction-picture terms oscillating
    /// faster than this are dropped. `None` keeps the full time dependence.
    pub rwa_cutoff: Option<f64>,
}

impl Default for PropagatorOptions {
    fn default() -> Self {
        PropagatorOptions {
            tolerance: 1e-8,
            initial_steps: 64,
            max_steps: 1 << 17,
            rwa_cutoff: None,
        }
    }
}

impl PropagatorOptions {
    pub fn rotating_wave(cutoff: f64) -> Self {
        PropagatorOptions {
            rwa_cutoff: Some(cutoff),
            ..Self::default()
        }
    }
}

/// Result of a converged propagation.
#[derive(Debug, Clone, PartialEq)]
pub struct Propagation {
    pub unitary: DMatrix<C64>,
    /// Steps per period (or per fastest cycle) used in the accepted pass.
    pub steps_per_period: usize,
    /// Max-norm difference to the previous (half-step) pass.
    pub change: f64,
}

/// exp(−i·K·time) for Hermitian K.
pub fn expm_hermitian(k: &DMatrix<C64>, time: f64) -> DMatrix<C64> {
    let sym = (k + k.adjoint()) * C64::from(0.5);
    let eig = SymmetricEigen::new(sym);
    let phases = eig.eigenvalues.map(|l| (-I * (l * time)).exp());
    let v = &eig.eigenvectors;
    v * DMatrix::from_diagonal(&phases) * v.adjoint()
}

/// max |U†U − 1|
pub fn unitarity_defect(u: &DMatrix<C64>) -> f64 {
    let n = u.nrows();
    (u.adjoint() * u - DMatrix::<C64>::identity(n, n)).camax()
}

fn mat_pow(base: &DMatrix<C64>, mut exp: u64) -> DMatrix<C64> {
    let n = base.nrows();
    let mut acc = DMatrix::<C64>::identity(n, n);
    let mut sq = base.clone();
    while exp > 0 {
        if exp & 1 == 1 {
            acc = &sq * &acc;
        }
        exp >>= 1;
        if exp > 0 {
            sq = &sq * &sq;
        }
    }
    acc
}

/// One interaction-picture matrix element c·exp(i(ν t + φ)).
#[derive(Debug, Clone, Copy)]
struct Term {
    row: usize,
    col: usize,
    coeff: C64,
    freq: f64,
    phase: f64,
}

/// Static eigenframe with the drive written as a sum of oscillating
/// matrix elements in it.
struct Frame {
    basis: DMatrix<C64>,
    energies: DVector<f64>,
    terms: Vec<Term>,
    rabi_scale: f64,
}

impl Frame {
    fn new(h: &DrivenHamiltonian, rwa_cutoff: Option<f64>) -> Self {
        let h0 = &h.static_part;
        let n = h0.nrows();
        let diagonal = (0..n).all(|i| (0..n).all(|j| i == j || h0[(i, j)] == C64::from(0.0)));
        let (basis, energies) = if diagonal {
            (
                DMatrix::identity(n, n),
                DVector::from_fn(n, |i, _| h0[(i, i)].re),
            )
        } else {
            let eig = SymmetricEigen::new((h0 + h0.adjoint()) * C64::from(0.5));
            (eig.eigenvectors, eig.eigenvalues)
        };
        let mut terms = Vec::new();
        let mut rabi_scale = 0.0;
        for d in &h.drives {
            // 2Ω(cos θ X + sin θ Y) = Ω(X − iY) e^{iθ} + Ω(X + iY) e^{−iθ}
            let x = basis.adjoint() * &d.operator * &basis;
            let y = match &d.quadrature {
                Some(q) => basis.adjoint() * q * &basis,
                None => DMatrix::zeros(n, n),
            };
            let omega = C64::from(d.rabi_rate);
            let plus = (&x - &y * I) * omega;
            let minus = (&x + &y * I) * omega;
            rabi_scale += 2.0 * d.rabi_rate.abs() * x.camax().max(y.camax());
            for (m, sign) in [(plus, 1.0), (minus, -1.0)] {
                for a in 0..n {
                    for b in 0..n {
                        let coeff = m[(a, b)];
                        if coeff.norm() <= 1e-14 * d.rabi_rate.abs() {
                            continue;
                        }
                        let freq = energies[a] - energies[b] + sign * d.carrier;
                        if rwa_cutoff.is_some_and(|c| freq.abs() > c) {
                            continue;
                        }
                        terms.push(Term {
                            row: a,
                            col: b,
                            coeff,
                            freq,
                            phase: sign * d.phase,
                        });
                    }
                }
            }
        }
        Frame {
            basis,
            energies,
            terms,
            rabi_scale,
        }
    }

    fn dim(&self) -> usize {
        self.energies.len()
    }

    fn fastest(&self) -> f64 {
        self.terms.iter().map(|t| t.freq.abs()).fold(0.0, f64::max)
    }

    /// H_I(t) = e^{iEt} V(t) e^{−iEt}
    fn interaction(&self, t: f64) -> DMatrix<C64> {
        let n = self.dim();
        let mut v = DMatrix::<C64>::zeros(n, n);
        for term in &self.terms {
            v[(term.row, term.col)] += term.coeff * (I * (term.freq * t + term.phase)).exp();
        }
        v
    }

    /// Interaction-picture propagator from t0 to t1.
    fn integrate(&self, t0: f64, t1: f64, steps: usize) -> DMatrix<C64> {
        let n = self.dim();
        let mut u = DMatrix::<C64>::identity(n, n);
        if self.terms.is_empty() || t1 <= t0 {
            return u;
        }
        let h = (t1 - t0) / steps as f64;
        let off = 3f64.sqrt() / 6.0;
        let comm_weight = 3f64.sqrt() / 12.0 * h * h;
        for s in 0..steps {
            let t = t0 + s as f64 * h;
            let h1 = self.interaction(t + (0.5 - off) * h);
            let h2 = self.interaction(t + (0.5 + off) * h);
            let comm = &h1 * &h2 - &h2 * &h1;
            let k = (&h1 + &h2) * C64::from(0.5 * h) + comm * (I * comm_weight);
            u = expm_hermitian(&k, 1.0) * u;
        }
        u
    }

    /// Lab-frame propagator U(t1, t0).
    fn lab(&self, t0: f64, t1: f64, steps: usize) -> DMatrix<C64> {
        let ui = self.integrate(t0, t1, steps);
        let n = self.dim();
        let mut m = ui;
        for a in 0..n {
            let la = (-I * (self.energies[a] * t1)).exp();
            for b in 0..n {
                m[(a, b)] *= la * (I * (self.energies[b] * t0)).exp();
            }
        }
        &self.basis * m * self.basis.adjoint()
    }
}

/// Propagator over [0, duration] with step doubling until the max-norm change
/// falls below `opts.tolerance`.
pub fn propagate(
    h: &DrivenHamiltonian,
    duration: f64,
    opts: &PropagatorOptions,
) -> Result<Propagation> {
    h.validate()?;
    if !(duration >= 0.0) || !duration.is_finite() {
        return Err(Error::Domain(format!("duration must be non-negative, got {duration}")));
    }
    if opts.rwa_cutoff.is_some_and(|c| !(c >= 0.0)) {
        return Err(Error::Domain("rotating-wave cutoff must be non-negative".into()));
    }
    let frame = Frame::new(h, opts.rwa_cutoff);
    if frame.terms.is_empty() {
        return Ok(Propagation {
            unitary: frame.lab(0.0, duration, 1),
            steps_per_period: 0,
            change: 0.0,
        });
    }

    // The lab-frame Hamiltonian is periodic only without the rotating-wave cut.
    let carriers: Vec<f64> = h.drives.iter().map(|d| d.carrier).collect();
    let single_carrier = opts.rwa_cutoff.is_none()
        && carriers[0] > 0.0
        && carriers.iter().all(|w| *w == carriers[0]);
    let run = |m: usize| -> DMatrix<C64> {
        if single_carrier {
            let period = 2.0 * PI / carriers[0];
            let whole = (duration / period).floor();
            let rest = duration - whole * period;
            let rest_steps = ((m as f64) * rest / period).ceil().max(1.0) as usize;
            let tail = frame.lab(0.0, rest, rest_steps);
            if whole >= 1.0 {
                tail * mat_pow(&frame.lab(0.0, period, m), whole as u64)
            } else {
                tail
            }
        } else {
            let rate = frame.fastest() + frame.rabi_scale;
            let cycles = (duration * rate / (2.0 * PI)).max(1.0);
            let steps = (cycles * m as f64).ceil() as usize;
            frame.lab(0.0, duration, steps)
        }
    };

    let mut m = opts.initial_steps.max(1);
    let mut prev = run(m);
    let mut change = f64::INFINITY;
    while 2 * m <= opts.max_steps {
        m *= 2;
        let next = run(m);
        change = (&next - &prev).camax();
        prev = next;
        if change < opts.tolerance {
            return Ok(Propagation {
                unitary: prev,
                steps_per_period: m,
                change,
            });
        }
    }
    Err(Error::NoConvergence {
        what: "time propagation",
        iterations: m,
        residual: change,
    })
}

/// Evolves `state` under `h` for `duration`.
pub fn evolve(
    state: &QuantumState,
    h: &DrivenHamiltonian,
    duration: f64,
    opts: &PropagatorOptions,
) -> Result<QuantumState> {
    if h.dim() != state.dim() {
        return Err(Error::Domain(format!(
            "Hamiltonian dimension {} does not match state dimension {}",
            h.dim(),
            state.dim()
        )));
    }
    let p = propagate(h, duration, opts)?;
    state.apply(&p.unitary)
}
