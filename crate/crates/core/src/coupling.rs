//! Magnetic-gradient-induced coupling between the electron spins of a chain
//! and the resulting two-qubit gate times.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::crystal::{CrystalConfiguration, NormalModes};
use crate::error::{Error, Result};
use crate::units::{Frequency, IonSpecies, HBAR};

/// Offset field and axial gradient, B(z) = B0 + b·z.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldConfig {
    /// T
    pub b0: f64,
    /// T/m
    pub gradient: f64,
}

impl FieldConfig {
    pub fn new(b0: f64, gradient: f64) -> Result<Self> {
        if !(b0 > 0.0) || !b0.is_finite() {
            return Err(Error::Domain(format!("offset field must be positive, got {b0} T")));
        }
        if !(gradient >= 0.0) || !gradient.is_finite() {
            return Err(Error::Domain(format!(
                "field gradient must be non-negative, got {gradient} T/m"
            )));
        }
        Ok(FieldConfig { b0, gradient })
    }

    pub fn at(&self, z: f64) -> f64 {
        self.b0 + self.gradient * z
    }
}

/// Spin-operator convention the coupling constants are expressed in.
///
/// Written with spin-1/2 operators the coupling carries the prefactor
/// 2ℏ/(m ν_l²); written with Pauli operators it is four times smaller,
/// ℏ/(2 m ν_l²). The published gate-time table uses the latter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum CouplingNormalization {
    #[default]
    Pauli,
    SpinOperator,
}

impl CouplingNormalization {
    fn prefactor(self) -> f64 {
        match self {
            CouplingNormalization::Pauli => 0.5,
            CouplingNormalization::SpinOperator => 2.0,
        }
    }
}

/// Symmetric coupling matrix J (rad/s, zero diagonal) and its inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingMatrix {
    pub j: DMatrix<f64>,
    pub modes: NormalModes,
    pub crystal: CrystalConfiguration,
    pub field: FieldConfig,
    pub normalization: CouplingNormalization,
}

impl CouplingMatrix {
    pub fn n_ions(&self) -> usize {
        self.j.nrows()
    }

    /// J_ij as an ordinary frequency in Hz.
    pub fn hz(&self, i: usize, k: usize) -> f64 {
        Frequency::from_angular(self.j[(i, k)]).hz()
    }

    /// The pair used for gate times: the two central ions for even N, the
    /// lower central neighbour pair for odd N.
    pub fn central_pair(&self) -> (usize, usize) {
        let n = self.n_ions();
        let i = (n - 1) / 2;
        if n.is_multiple_of(2) {
            (i, i + 1)
        } else {
            (i - 1, i)
        }
    }
}

/// ∂Ω_S/∂z = γ_S·b in (rad/s)/m.
pub fn larmor_gradient(species: &IonSpecies, gradient: f64) -> f64 {
    species.gamma_s * gradient
}

/// J_ij = Σ_l c ℏ/(m ν_z² μ_l) D_il D_jl (∂Ω_S/∂z)² for arbitrary mode data,
/// with c = 2 (spin operators) or 1/2 (Pauli operators). The diagonal is zero.
pub fn coupling_from_modes(
    eigenvalues: &[f64],
    mode_matrix: &DMatrix<f64>,
    mass: f64,
    nu_z: Frequency,
    larmor_gradient: f64,
    normalization: CouplingNormalization,
) -> DMatrix<f64> {
    let n = mode_matrix.nrows();
    let wz2 = nu_z.angular().powi(2);
    let scale = normalization.prefactor() * HBAR / mass * larmor_gradient.powi(2);
    DMatrix::from_fn(n, n, |i, k| {
        if i == k {
            return 0.0;
        }
        eigenvalues
            .iter()
            .enumerate()
            .map(|(l, mu)| mode_matrix[(i, l)] * mode_matrix[(k, l)] / (wz2 * mu))
            .sum::<f64>()
            * scale
    })
}

/// Coupling matrix of an N-ion chain in a field gradient `gradient` (T/m).
pub fn j_matrix(
    species: &IonSpecies,
    nu_z: Frequency,
    field: FieldConfig,
    n_ions: usize,
    normalization: CouplingNormalization,
) -> Result<CouplingMatrix> {
    if !(field.gradient > 0.0) {
        return Err(Error::Domain(format!(
            "coupling needs a positive gradient, got {} T/m",
            field.gradient
        )));
    }
    let crystal = CrystalConfiguration::new(species.clone(), nu_z, n_ions)?;
    let modes = crystal.normal_modes()?;
    let j = coupling_from_modes(
        &modes.eigenvalues,
        &modes.mode_matrix,
        species.mass,
        nu_z,
        larmor_gradient(species, field.gradient),
        normalization,
    );
    Ok(CouplingMatrix {
        j,
        modes,
        crystal,
        field,
        normalization,
    })
}

/// Gate time T with T·(J/2π) = π, for a pair coupling J in rad/s.
pub fn gate_time(j_pair: f64) -> Result<f64> {
    if !(j_pair > 0.0) || !j_pair.is_finite() {
        return Err(Error::Domain(format!(
            "gate time needs a positive coupling, got {j_pair} rad/s"
        )));
    }
    Ok(PI / Frequency::from_angular(j_pair).hz())
}

/// One row of the published two-qubit gate-time table (B0 = 1 T, ¹⁷¹Yb⁺).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GateTimeRow {
    pub nu_z_khz: f64,
    pub n_ions: usize,
    pub gradient: f64,
    pub min_spacing_um: f64,
    pub j_khz: f64,
    pub gate_time_ms: f64,
}

const fn row(nu_z_khz: f64, n_ions: usize, gradient: f64, min_spacing_um: f64, j_khz: f64, gate_time_ms: f64) -> GateTimeRow {
    GateTimeRow {
        nu_z_khz,
        n_ions,
        gradient,
        min_spacing_um,
        j_khz,
        gate_time_ms,
    }
}

/// Reference values: ν_z, N, b, Δz_min, nearest-neighbour J (middle pair for
/// four ions), and gate time.
pub const GATE_TIME_REFERENCE: [GateTimeRow; 12] = [
    row(600.0, 3, 50.0, 4.15, 0.0444, 70.8),
    row(600.0, 3, 100.0, 4.15, 0.178, 17.7),
    row(600.0, 3, 300.0, 4.15, 1.60, 1.97),
    row(600.0, 4, 50.0, 3.50, 0.0368, 85.2),
    row(600.0, 4, 100.0, 3.50, 0.147, 21.3),
    row(600.0, 4, 300.0, 3.50, 1.33, 2.37),
    row(200.0, 3, 50.0, 8.63, 0.399, 7.87),
    row(200.0, 3, 100.0, 8.63, 1.60, 1.97),
    row(200.0, 3, 300.0, 8.63, 14.38, 0.218),
    row(200.0, 4, 50.0, 7.28, 0.332, 9.47),
    row(200.0, 4, 100.0, 7.28, 1.33, 2.37),
    row(200.0, 4, 300.0, 7.28, 11.94, 0.263),
];

/// Computed counterpart of a reference row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GateTimeResult {
    pub reference: GateTimeRow,
    pub min_spacing_um: f64,
    pub j_khz: f64,
    pub gate_time_ms: f64,
}

impl GateTimeResult {
    /// Relative deviations (Δz_min, J, T) from the reference values.
    pub fn deviations(&self) -> [f64; 3] {
        let r = &self.reference;
        [
            self.min_spacing_um / r.min_spacing_um - 1.0,
            self.j_khz / r.j_khz - 1.0,
            self.gate_time_ms / r.gate_time_ms - 1.0,
        ]
    }

    pub fn max_deviation(&self) -> f64 {
        self.deviations().iter().fold(0.0, |m, d| m.max(d.abs()))
    }
}

/// Recomputes one gate-time row for `species` at B0 = 1 T.
pub fn compute_gate_row(species: &IonSpecies, reference: GateTimeRow) -> Result<GateTimeResult> {
    let nu_z = Frequency::from_khz(reference.nu_z_khz);
    let field = FieldConfig::new(1.0, reference.gradient)?;
    let cm = j_matrix(species, nu_z, field, reference.n_ions, CouplingNormalization::Pauli)?;
    let (i, k) = cm.central_pair();
    let j = cm.j[(i, k)];
    Ok(GateTimeResult {
        reference,
        min_spacing_um: cm.crystal.min_spacing() * 1e6,
        j_khz: Frequency::from_angular(j).khz(),
        gate_time_ms: gate_time(j)? * 1e3,
    })
}

/// All twelve reference rows, recomputed.
pub fn gate_time_table(species: &IonSpecies) -> Result<Vec<GateTimeResult>> {
    GATE_TIME_REFERENCE
        .iter()
        .map(|r| compute_gate_row(species, *r))
        .collect()
}
