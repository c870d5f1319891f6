//! Microwave-driven gates on the electron–nuclear four-level system of one
//! ion and on small chains: CNOT pulses in either direction, the three-pulse
//! SWAP, the CNOT fidelity of the high-field model against the exact levels,
//! and the conditional phase produced by spin–spin coupling.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, Matrix4};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hyperfine::{
    diagonalize, exact_hamiltonian, highfield_hamiltonian, Ratios, SingleIonHamiltonian, Spin,
    SpinBasisState,
};
use crate::propagator::{evolve, DrivenHamiltonian, Drive, PropagatorOptions, QuantumState, C64};
use crate::units::IonSpecies;

/// Gates are only built in or near the Paschen–Back regime.
pub const MIN_GATE_FIELD: f64 = 0.5;
/// Default Rabi rate is A divided by this.
pub const DEFAULT_RABI_DIVISOR: f64 = 2000.0;
const PI_PULSE_TOL: f64 = 1e-9;

/// Which spin a transition flips.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FlipKind {
    Nuclear,
    Electron,
}

/// Polarisation of the driving field relative to the flipped spin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum Polarization {
    /// Rotating in the sense of the target transition. Transitions of the
    /// opposite sense (e.g. the nuclear flip of the other electron
    /// manifold) are then detuned by roughly the sum of the two frequencies.
    #[default]
    Circular,
    /// 2Ω cos(ωt + φ) T_x: both senses at once.
    Linear,
}

/// A monochromatic pulse on one single-ion transition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PulseSpec {
    /// rad/s
    pub carrier: f64,
    /// rad/s
    pub rabi_rate: f64,
    /// s
    pub duration: f64,
    /// rad, relative to the start of the pulse.
    pub phase: f64,
    pub target: (SpinBasisState, SpinBasisState),
    pub polarization: Polarization,
}

impl PulseSpec {
    pub fn new(
        carrier: f64,
        rabi_rate: f64,
        duration: f64,
        phase: f64,
        target: (SpinBasisState, SpinBasisState),
    ) -> Result<Self> {
        if !(rabi_rate > 0.0) || !rabi_rate.is_finite() {
            return Err(Error::Domain(format!("Rabi rate must be positive, got {rabi_rate}")));
        }
        if !(duration > 0.0) || !duration.is_finite() {
            return Err(Error::Domain(format!("pulse duration must be positive, got {duration}")));
        }
        if !(carrier >= 0.0) || !carrier.is_finite() {
            return Err(Error::Domain(format!("carrier must be non-negative, got {carrier}")));
        }
        flip_kind(target)?;
        Ok(PulseSpec {
            carrier,
            rabi_rate,
            duration,
            phase,
            target,
            polarization: Polarization::default(),
        })
    }

    /// π pulse: duration = π / rabi_rate.
    pub fn pi_pulse(
        carrier: f64,
        rabi_rate: f64,
        target: (SpinBasisState, SpinBasisState),
    ) -> Result<Self> {
        Self::new(carrier, rabi_rate, PI / rabi_rate, 0.0, target)
    }

    pub fn is_pi_pulse(&self) -> bool {
        (self.rabi_rate * self.duration - PI).abs() <= PI_PULSE_TOL
    }

    pub fn flip_kind(&self) -> FlipKind {
        flip_kind(self.target).expect("validated at construction")
    }

    /// Same pulse with a different Rabi rate, keeping the pulse area.
    pub fn with_rabi_rate(&self, rabi_rate: f64) -> Result<Self> {
        let area = self.rabi_rate * self.duration;
        let mut p = Self::new(self.carrier, rabi_rate, area / rabi_rate, self.phase, self.target)?;
        p.polarization = self.polarization;
        Ok(p)
    }

    pub fn with_polarization(mut self, polarization: Polarization) -> Self {
        self.polarization = polarization;
        self
    }

    /// Local index (2·s + i) of the target state whose flipped spin is up.
    fn raised_local(&self) -> (usize, usize) {
        let (a, b) = self.target;
        let a_up = match self.flip_kind() {
            FlipKind::Nuclear => a.m_i == Spin::Up,
            FlipKind::Electron => a.m_s == Spin::Up,
        };
        if a_up {
            (a.index(), b.index())
        } else {
            (b.index(), a.index())
        }
    }
}

fn flip_kind((a, b): (SpinBasisState, SpinBasisState)) -> Result<FlipKind> {
    match (a.m_s == b.m_s, a.m_i == b.m_i) {
        (true, false) => Ok(FlipKind::Nuclear),
        (false, true) => Ok(FlipKind::Electron),
        _ => Err(Error::Domain(format!(
            "target {a} ↔ {b} is not a single-spin flip"
        ))),
    }
}

/// Level structure a gate is designed for and simulated with.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LevelModel {
    /// Full isotropic hyperfine coupling.
    Exact,
    /// Diagonal high-field Hamiltonian with the given gyromagnetic ratios.
    HighField(Ratios),
}

impl LevelModel {
    pub fn hamiltonian(&self, species: &IonSpecies, field: f64) -> Result<SingleIonHamiltonian> {
        match self {
            LevelModel::Exact => exact_hamiltonian(species, field),
            LevelModel::HighField(r) => highfield_hamiltonian(species, field, r),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            LevelModel::Exact => "exact",
            LevelModel::HighField(Ratios::Natural) => "high-field natural",
            LevelModel::HighField(_) => "high-field effective",
        }
    }
}

fn check_gate_field(field: f64) -> Result<()> {
    if field >= MIN_GATE_FIELD && field.is_finite() {
        Ok(())
    } else {
        Err(Error::Range {
            quantity: "B [T]",
            value: field,
            min: MIN_GATE_FIELD,
            max: f64::INFINITY,
        })
    }
}

fn resonant_pi_pulse(
    species: &IonSpecies,
    field: f64,
    model: &LevelModel,
    target: (SpinBasisState, SpinBasisState),
) -> Result<PulseSpec> {
    check_gate_field(field)?;
    let spectrum = diagonalize(&model.hamiltonian(species, field)?);
    let carrier = spectrum.transition(target.0, target.1);
    let rabi = species.hyperfine_a.abs() / DEFAULT_RABI_DIVISOR;
    PulseSpec::pi_pulse(carrier, rabi, target)
}

/// Nuclear flip |½,½⟩ ↔ |½,−½⟩ controlled by the electron (m_S = ½).
pub fn cnot_si_pulse(species: &IonSpecies, field: f64, model: &LevelModel) -> Result<PulseSpec> {
    resonant_pi_pulse(
        species,
        field,
        model,
        (SpinBasisState::UP_UP, SpinBasisState::UP_DOWN),
    )
}

/// Electron flip |½,½⟩ ↔ |−½,½⟩ controlled by the nucleus (m_I = ½).
pub fn cnot_is_pulse(species: &IonSpecies, field: f64, model: &LevelModel) -> Result<PulseSpec> {
    resonant_pi_pulse(
        species,
        field,
        model,
        (SpinBasisState::UP_UP, SpinBasisState::DOWN_UP),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum SwapOrder {
    /// CNOT_IS, CNOT_SI, CNOT_IS
    #[default]
    IsSiIs,
    /// CNOT_SI, CNOT_IS, CNOT_SI
    SiIsSi,
}

/// The three CNOT pulses of a SWAP, in time order.
pub fn swap_sequence(
    species: &IonSpecies,
    field: f64,
    model: &LevelModel,
    order: SwapOrder,
) -> Result<[PulseSpec; 3]> {
    let si = cnot_si_pulse(species, field, model)?;
    let is = cnot_is_pulse(species, field, model)?;
    Ok(match order {
        SwapOrder::IsSiIs => [is, si, is],
        SwapOrder::SiIsSi => [si, is, si],
    })
}

/// Transverse axis of a spin-½ operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

/// Transverse spin-½ operator (I_x or S_x) on one ion of an `n_ions` register.
/// Ion 0 is the most significant factor; each ion's local index is 2·s + i.
pub fn transverse_operator(n_ions: usize, ion: usize, kind: FlipKind) -> Result<DMatrix<C64>> {
    spin_operator(n_ions, ion, kind, Axis::X)
}

/// T_x or T_y of the electron (T = S) or nucleus (T = I) of one ion.
pub fn spin_operator(
    n_ions: usize,
    ion: usize,
    kind: FlipKind,
    axis: Axis,
) -> Result<DMatrix<C64>> {
    if ion >= n_ions || n_ions == 0 || n_ions > crate::propagator::MAX_DYNAMICS_IONS {
        return Err(Error::Domain(format!(
            "ion {ion} outside a register of {n_ions} ions"
        )));
    }
    let mut local = DMatrix::<C64>::zeros(4, 4);
    let pairs = match kind {
        FlipKind::Nuclear => [(0, 1), (2, 3)],
        FlipKind::Electron => [(0, 2), (1, 3)],
    };
    // First index of each pair has the flipped spin up.
    let upper = match axis {
        Axis::X => C64::from(0.5),
        Axis::Y => C64::new(0.0, -0.5),
    };
    for (a, b) in pairs {
        local[(a, b)] = upper;
        local[(b, a)] = upper.conj();
    }
    let mut op = DMatrix::<C64>::identity(1, 1);
    for k in 0..n_ions {
        let factor = if k == ion {
            local.clone()
        } else {
            DMatrix::identity(4, 4)
        };
        op = op.kronecker(&factor);
    }
    Ok(op)
}

fn complex_matrix(m: &Matrix4<f64>) -> DMatrix<C64> {
    DMatrix::from_fn(4, 4, |i, j| C64::from(m[(i, j)]))
}

/// Static Hamiltonian plus the pulse's drive on `ion`.
pub fn driven(
    static_part: &DMatrix<C64>,
    ion: usize,
    pulse: &PulseSpec,
) -> Result<DrivenHamiltonian> {
    let dim = static_part.nrows();
    let n_ions = (1..=crate::propagator::MAX_DYNAMICS_IONS)
        .find(|&n| 4usize.pow(n as u32) == dim)
        .ok_or_else(|| Error::Domain(format!("dimension {dim} is not 4^N")))?;
    let kind = pulse.flip_kind();
    let tx = spin_operator(n_ions, ion, kind, Axis::X)?;
    let drive = match pulse.polarization {
        Polarization::Linear => Drive::linear(tx, pulse.rabi_rate, pulse.carrier, pulse.phase),
        Polarization::Circular => {
            // Sense of rotation from the target's energy ordering, with the
            // other ions in |½,½⟩.
            let (up, down) = pulse.raised_local();
            let shift = 2 * (n_ions - 1 - ion);
            let e = |local: usize| static_part[(local << shift, local << shift)].re;
            let sense = if e(up) >= e(down) { 0.5 } else { -0.5 };
            Drive {
                operator: tx * C64::from(0.5),
                quadrature: Some(spin_operator(n_ions, ion, kind, Axis::Y)? * C64::from(sense)),
                rabi_rate: pulse.rabi_rate,
                carrier: pulse.carrier,
                phase: pulse.phase,
            }
        }
    };
    Ok(DrivenHamiltonian {
        static_part: static_part.clone(),
        drives: vec![drive],
    })
}

/// Applies `pulses` in order to one ion of `state`.
pub fn run_pulses(
    state: &QuantumState,
    static_part: &DMatrix<C64>,
    ion: usize,
    pulses: &[PulseSpec],
    opts: &PropagatorOptions,
) -> Result<QuantumState> {
    let mut psi = state.clone();
    for p in pulses {
        psi = evolve(&psi, &driven(static_part, ion, p)?, p.duration, opts)?;
    }
    Ok(psi)
}

/// Applies `pulses` to a single ion with Hamiltonian `h`.
pub fn apply_single_ion(
    state: &QuantumState,
    h: &SingleIonHamiltonian,
    pulses: &[PulseSpec],
    opts: &PropagatorOptions,
) -> Result<QuantumState> {
    run_pulses(state, &complex_matrix(&h.matrix), 0, pulses, opts)
}

/// Full propagator of a pulse sequence (dimension of `static_part`).
pub fn sequence_unitary(
    static_part: &DMatrix<C64>,
    ion: usize,
    pulses: &[PulseSpec],
    opts: &PropagatorOptions,
) -> Result<DMatrix<C64>> {
    let n = static_part.nrows();
    let mut u = DMatrix::<C64>::identity(n, n);
    for p in pulses {
        let step = crate::propagator::propagate(&driven(static_part, ion, p)?, p.duration, opts)?;
        u = step.unitary * u;
    }
    Ok(u)
}

/// Worst-case population a 4×4 unitary moves along the SWAP permutation
/// |s,i⟩ → |i,s⟩, i.e. SWAP fidelity up to diagonal phases.
pub fn swap_overlap(u: &DMatrix<C64>) -> f64 {
    SpinBasisState::ALL
        .iter()
        .map(|s| {
            let image = SpinBasisState::new(s.m_i, s.m_s);
            u[(image.index(), s.index())].norm_sqr()
        })
        .fold(f64::INFINITY, f64::min)
}

/// One point of the CNOT_SI fidelity curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FidelityPoint {
    /// T
    pub field: f64,
    /// Ω_S(B)/A
    pub b_over_a: f64,
    /// |⟨Ψ|Ψ_exact⟩|²
    pub fidelity: f64,
    /// Population of |−½,½⟩ after the exact evolution.
    pub leakage: f64,
    /// sin²θ of the exact levels.
    pub mixing: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FidelityOptions {
    /// Ratios of the high-field reference model.
    pub reference: Ratios,
    pub initial: SpinBasisState,
    /// Ω_R = A / rabi_divisor
    pub rabi_divisor: f64,
    pub propagator: PropagatorOptions,
}

impl Default for FidelityOptions {
    fn default() -> Self {
        FidelityOptions {
            reference: Ratios::published_fit(),
            initial: SpinBasisState::UP_UP,
            rabi_divisor: DEFAULT_RABI_DIVISOR,
            propagator: PropagatorOptions::default(),
        }
    }
}

/// Squared overlap of two single-ion evolutions, each under its own static
/// Hamiltonian and pulse.
pub fn pulse_overlap(
    initial: &QuantumState,
    reference: (&DMatrix<C64>, &PulseSpec),
    exact: (&DMatrix<C64>, &PulseSpec),
    opts: &PropagatorOptions,
) -> Result<(QuantumState, QuantumState)> {
    let a = run_pulses(initial, reference.0, 0, std::slice::from_ref(reference.1), opts)?;
    let b = run_pulses(initial, exact.0, 0, std::slice::from_ref(exact.1), opts)?;
    Ok((a, b))
}

/// Fidelity of a CNOT_SI designed on the high-field model against the same
/// gate on the exact levels at one field.
pub fn cnot_fidelity(
    species: &IonSpecies,
    field: f64,
    opts: &FidelityOptions,
) -> Result<FidelityPoint> {
    if !(opts.rabi_divisor > 0.0) {
        return Err(Error::Domain("Rabi divisor must be positive".into()));
    }
    let rabi = species.hyperfine_a.abs() / opts.rabi_divisor;
    let ref_model = LevelModel::HighField(opts.reference);
    let h_ref = ref_model.hamiltonian(species, field)?;
    let h_ex = LevelModel::Exact.hamiltonian(species, field)?;
    let p_ref = cnot_si_pulse(species, field, &ref_model)?.with_rabi_rate(rabi)?;
    let p_ex = cnot_si_pulse(species, field, &LevelModel::Exact)?.with_rabi_rate(rabi)?;
    let psi0 = QuantumState::basis(1, opts.initial.index())?;
    let (a, b) = pulse_overlap(
        &psi0,
        (&complex_matrix(&h_ref.matrix), &p_ref),
        (&complex_matrix(&h_ex.matrix), &p_ex),
        &opts.propagator,
    )?;
    Ok(FidelityPoint {
        field,
        b_over_a: species.electron_larmor(field) / species.hyperfine_a,
        fidelity: a.fidelity(&b),
        leakage: b.population(SpinBasisState::DOWN_UP.index()),
        mixing: diagonalize(&h_ex).leakage(),
    })
}

/// Per-field outcome of a fidelity sweep.
#[derive(Debug)]
pub struct FidelitySample {
    pub field: f64,
    pub result: Result<FidelityPoint>,
}

/// CNOT_SI fidelity at each field, computed in parallel, in input order.
pub fn cnot_fidelity_curve(
    species: &IonSpecies,
    fields: &[f64],
    opts: &FidelityOptions,
) -> Vec<FidelitySample> {
    fields
        .par_iter()
        .map(|&field| FidelitySample {
            field,
            result: cnot_fidelity(species, field, opts),
        })
        .collect()
}

/// exp(−i H t) for H = −½ J S_z¹ S_z² in the basis |↑↑⟩, |↑↓⟩, |↓↑⟩, |↓↓⟩.
pub fn two_qubit_conditional_phase(j_pair: f64, duration: f64) -> Result<Matrix4<C64>> {
    if !(j_pair > 0.0) || !j_pair.is_finite() {
        return Err(Error::Domain(format!("coupling must be positive, got {j_pair}")));
    }
    if !(duration >= 0.0) || !duration.is_finite() {
        return Err(Error::Domain(format!("duration must be non-negative, got {duration}")));
    }
    let phase = j_pair * duration / 8.0;
    let aligned = C64::from_polar(1.0, phase);
    let anti = C64::from_polar(1.0, -phase);
    Ok(Matrix4::from_diagonal(&nalgebra::Vector4::new(
        aligned, anti, anti, aligned,
    )))
}

/// (φ_↑↑ + φ_↓↓ − φ_↑↓ − φ_↓↑)/2 of a diagonal two-qubit gate.
pub fn entangling_phase(u: &Matrix4<C64>) -> f64 {
    0.5 * (u[(0, 0)].arg() + u[(3, 3)].arg() - u[(1, 1)].arg() - u[(2, 2)].arg())
}

/// Time after which the conditional phase is maximally entangling (J t/4 = π/2).
pub fn entangling_time(j_pair: f64) -> Result<f64> {
    if !(j_pair > 0.0) || !j_pair.is_finite() {
        return Err(Error::Domain(format!("coupling must be positive, got {j_pair}")));
    }
    Ok(2.0 * PI / j_pair)
}

/// Diagonal static Hamiltonian of a chain,
/// Σ_i (Ω_S^i S_z^i + Ω_I^i I_z^i + A S_z^i I_z^i) − ½ Σ_{i<k} J_ik S_z^i S_z^k.
pub fn chain_hamiltonian(
    electron_larmor: &[f64],
    nuclear_larmor: &[f64],
    hyperfine_a: f64,
    j: &DMatrix<f64>,
) -> Result<DMatrix<C64>> {
    let n = electron_larmor.len();
    if n == 0 || n > crate::propagator::MAX_DYNAMICS_IONS {
        return Err(Error::Capacity {
            what: "ions for dynamics",
            value: n,
            max: crate::propagator::MAX_DYNAMICS_IONS,
        });
    }
    if nuclear_larmor.len() != n || j.shape() != (n, n) {
        return Err(Error::Domain("chain inputs have inconsistent sizes".into()));
    }
    let dim = 4usize.pow(n as u32);
    let diag = DVector::from_fn(dim, |index, _| {
        let spins: Vec<SpinBasisState> = (0..n)
            .map(|k| SpinBasisState::from_index((index >> (2 * (n - 1 - k))) & 3))
            .collect();
        let mut e = 0.0;
        for (k, s) in spins.iter().enumerate() {
            let (ms, mi) = (s.m_s.value(), s.m_i.value());
            e += electron_larmor[k] * ms + nuclear_larmor[k] * mi + hyperfine_a * ms * mi;
        }
        for a in 0..n {
            for b in a + 1..n {
                e -= 0.5 * j[(a, b)] * spins[a].m_s.value() * spins[b].m_s.value();
            }
        }
        C64::from(e)
    });
    Ok(DMatrix::from_diagonal(&diag))
}

/// Index of a product state of a chain (ion 0 most significant).
pub fn chain_index(spins: &[SpinBasisState]) -> usize {
    spins.iter().fold(0, |acc, s| acc * 4 + s.index())
}

/// Electron-flip frequency of `ion` in a diagonal chain Hamiltonian, given
/// the other ions' product states.
pub fn chain_flip_frequency(h: &DMatrix<C64>, spins: &[SpinBasisState], ion: usize) -> f64 {
    let mut flipped = spins.to_vec();
    let s = spins[ion];
    flipped[ion] = SpinBasisState::new(s.m_s.flipped(), s.m_i);
    let e0 = h[(chain_index(spins), chain_index(spins))].re;
    let e1 = h[(chain_index(&flipped), chain_index(&flipped))].re;
    if s.m_s == Spin::Up {
        e0 - e1
    } else {
        e1 - e0
    }
}
