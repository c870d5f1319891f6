//! Ground-state hyperfine structure of a single S = 1/2, I = 1/2 ion in a
//! strong field.
//!
//! All 4×4 matrices use the product basis ordered as
//! `|½,½⟩, |½,−½⟩, |−½,½⟩, |−½,−½⟩` (labels are `|m_S, m_I⟩`). Energies are
//! angular frequencies (ℏ = 1 in rad/s).

use std::f64::consts::FRAC_PI_4;
use std::fmt;

use nalgebra::{Matrix2, Matrix4, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::IonSpecies;

/// A spin-1/2 projection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Spin {
    Up,
    Down,
}

impl Spin {
    pub fn value(self) -> f64 {
        match self {
            Spin::Up => 0.5,
            Spin::Down => -0.5,
        }
    }

    pub fn flipped(self) -> Spin {
        match self {
            Spin::Up => Spin::Down,
            Spin::Down => Spin::Up,
        }
    }

    pub fn from_value(v: f64) -> Option<Spin> {
        if v == 0.5 {
            Some(Spin::Up)
        } else if v == -0.5 {
            Some(Spin::Down)
        } else {
            None
        }
    }
}

/// Product state `|m_S, m_I⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpinBasisState {
    pub m_s: Spin,
    pub m_i: Spin,
}

impl SpinBasisState {
    pub const UP_UP: Self = Self::new(Spin::Up, Spin::Up);
    pub const UP_DOWN: Self = Self::new(Spin::Up, Spin::Down);
    pub const DOWN_UP: Self = Self::new(Spin::Down, Spin::Up);
    pub const DOWN_DOWN: Self = Self::new(Spin::Down, Spin::Down);

    /// Basis order shared by every matrix in the crate.
    pub const ALL: [Self; 4] = [Self::UP_UP, Self::UP_DOWN, Self::DOWN_UP, Self::DOWN_DOWN];

    pub const fn new(m_s: Spin, m_i: Spin) -> Self {
        SpinBasisState { m_s, m_i }
    }

    pub fn index(self) -> usize {
        match (self.m_s, self.m_i) {
            (Spin::Up, Spin::Up) => 0,
            (Spin::Up, Spin::Down) => 1,
            (Spin::Down, Spin::Up) => 2,
            (Spin::Down, Spin::Down) => 3,
        }
    }

    pub fn from_index(i: usize) -> Self {
        Self::ALL[i]
    }
}

impl fmt::Display for SpinBasisState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = |x: Spin| if x == Spin::Up { "1/2" } else { "-1/2" };
        write!(f, "|{},{}>", s(self.m_s), s(self.m_i))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HamiltonianKind {
    /// Full isotropic hyperfine coupling.
    Exact,
    /// Only the A·S_z·I_z part, natural gyromagnetic ratios.
    HighField,
    /// Only the A·S_z·I_z part, effective gyromagnetic ratios.
    HighFieldEffective,
}

/// Fitted gyromagnetic ratios γ'(B) = c0 + c1·exp(−decay·B), in (rad/s)/T.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectiveFit {
    pub electron: [f64; 2],
    pub nuclear: [f64; 2],
    /// 1/T
    pub decay: f64,
    pub valid_range: (f64, f64),
}

const GHZ: f64 = 2.0 * std::f64::consts::PI * 1e9;

/// γ_S' ≈ 28.1 + 5.5 e^(−1.5 B/T) and γ_I' ≈ −(0.085 + 5.5 e^(−1.5 B/T)), GHz/T,
/// valid for 1 T ≤ B ≤ 5 T (¹⁷¹Yb⁺).
pub const PUBLISHED_FIT: EffectiveFit = EffectiveFit {
    electron: [28.1 * GHZ, 5.5 * GHZ],
    nuclear: [-0.085 * GHZ, -5.5 * GHZ],
    decay: 1.5,
    valid_range: (1.0, 5.0),
};

impl EffectiveFit {
    fn basis(&self, field: f64) -> f64 {
        (-self.decay * field).exp()
    }

    /// Effective ratios at the offset field `field`.
    pub fn at(&self, field: f64) -> Result<EffectiveRatios> {
        let (lo, hi) = self.valid_range;
        if !(lo..=hi).contains(&field) {
            return Err(Error::Range {
                quantity: "B0 [T]",
                value: field,
                min: lo,
                max: hi,
            });
        }
        let e = self.basis(field);
        Ok(EffectiveRatios {
            gamma_s: self.electron[0] + self.electron[1] * e,
            gamma_i: self.nuclear[0] + self.nuclear[1] * e,
            valid_range: self.valid_range,
        })
    }
}

/// Effective gyromagnetic ratios at one field, (rad/s)/T.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectiveRatios {
    pub gamma_s: f64,
    pub gamma_i: f64,
    pub valid_range: (f64, f64),
}

impl EffectiveRatios {
    pub fn gamma_s_ghz_per_tesla(&self) -> f64 {
        self.gamma_s / GHZ
    }

    pub fn gamma_i_ghz_per_tesla(&self) -> f64 {
        self.gamma_i / GHZ
    }
}

/// Gyromagnetic ratios used by the high-field Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Ratios {
    Natural,
    /// Fixed effective ratios (already evaluated at some B0).
    Effective(EffectiveRatios),
    /// Effective ratios evaluated at the Hamiltonian's own field.
    Fit(EffectiveFit),
}

impl Ratios {
    pub fn published_fit() -> Self {
        Ratios::Fit(PUBLISHED_FIT)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SingleIonHamiltonian {
    /// rad/s, real symmetric.
    pub matrix: Matrix4<f64>,
    pub kind: HamiltonianKind,
    /// T
    pub field: f64,
    /// Hyperfine constant the matrix was built with, rad/s.
    pub hyperfine_a: f64,
}

fn check_field(field: f64) -> Result<()> {
    if field > 0.0 && field.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("magnetic field must be positive, got {field} T")))
    }
}

/// H₀ = Ω_S S_z + Ω_I I_z + A S·I.
pub fn exact_hamiltonian(species: &IonSpecies, field: f64) -> Result<SingleIonHamiltonian> {
    species.require_spin_half()?;
    check_field(field)?;
    let ws = species.electron_larmor(field);
    let wi = species.nuclear_larmor(field);
    let a = species.hyperfine_a;
    let mut m = Matrix4::zeros();
    m[(0, 0)] = 0.5 * (ws + wi) + 0.25 * a;
    m[(1, 1)] = 0.5 * (ws - wi) - 0.25 * a;
    m[(2, 2)] = -0.5 * (ws - wi) - 0.25 * a;
    m[(3, 3)] = -0.5 * (ws + wi) + 0.25 * a;
    // A (S_x I_x + S_y I_y) = (A/2)(S₊I₋ + S₋I₊) couples |½,−½⟩ and |−½,½⟩.
    m[(1, 2)] = 0.5 * a;
    m[(2, 1)] = 0.5 * a;
    Ok(SingleIonHamiltonian {
        matrix: m,
        kind: HamiltonianKind::Exact,
        field,
        hyperfine_a: a,
    })
}

/// Larmor frequencies (Ω_S, Ω_I) in rad/s for the requested ratios.
pub fn larmor_frequencies(species: &IonSpecies, field: f64, ratios: &Ratios) -> Result<(f64, f64)> {
    match ratios {
        Ratios::Natural => Ok((species.electron_larmor(field), species.nuclear_larmor(field))),
        Ratios::Effective(r) => {
            let (lo, hi) = r.valid_range;
            if !(lo..=hi).contains(&field) {
                return Err(Error::Range {
                    quantity: "B [T]",
                    value: field,
                    min: lo,
                    max: hi,
                });
            }
            Ok((r.gamma_s * field, r.gamma_i * field))
        }
        Ratios::Fit(fit) => {
            let r = fit.at(field)?;
            Ok((r.gamma_s * field, r.gamma_i * field))
        }
    }
}

/// H₁ = Ω_S S_z + Ω_I I_z + A S_z I_z, with natural or effective Larmor frequencies.
pub fn highfield_hamiltonian(
    species: &IonSpecies,
    field: f64,
    ratios: &Ratios,
) -> Result<SingleIonHamiltonian> {
    species.require_spin_half()?;
    check_field(field)?;
    let (ws, wi) = larmor_frequencies(species, field, ratios)?;
    let a = species.hyperfine_a;
    let diag = SpinBasisState::ALL.map(|s| {
        let (ms, mi) = (s.m_s.value(), s.m_i.value());
        ws * ms + wi * mi + a * ms * mi
    });
    let kind = match ratios {
        Ratios::Natural => HamiltonianKind::HighField,
        _ => HamiltonianKind::HighFieldEffective,
    };
    Ok(SingleIonHamiltonian {
        matrix: Matrix4::from_diagonal(&diag.into()),
        kind,
        field,
        hyperfine_a: a,
    })
}

/// One eigen-level, labelled by its dominant product state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Level {
    pub label: SpinBasisState,
    /// rad/s
    pub energy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HyperfineSpectrum {
    /// In basis order: `levels[k].label == SpinBasisState::ALL[k]`.
    pub levels: [Level; 4],
    /// θ with upper mixed state cos θ|½,−½⟩ + sin θ|−½,½⟩; zero for the
    /// high-field kinds.
    pub mixing_angle: f64,
    /// Column k is the eigenvector of `levels[k]`.
    pub eigenvectors: Matrix4<f64>,
    pub kind: HamiltonianKind,
    pub field: f64,
}

impl HyperfineSpectrum {
    pub fn energy(&self, state: SpinBasisState) -> f64 {
        self.levels[state.index()].energy
    }

    /// |E_a − E_b| in rad/s between the levels labelled `a` and `b`.
    pub fn transition(&self, a: SpinBasisState, b: SpinBasisState) -> f64 {
        (self.energy(a) - self.energy(b)).abs()
    }

    /// All six level pairs with their transition frequencies.
    pub fn transitions(&self) -> Vec<(SpinBasisState, SpinBasisState, f64)> {
        let mut out = Vec::with_capacity(6);
        for i in 0..4 {
            for j in i + 1..4 {
                let (a, b) = (SpinBasisState::ALL[i], SpinBasisState::ALL[j]);
                out.push((a, b, self.transition(a, b)));
            }
        }
        out
    }

    /// Nuclear flip in the m_S = +½ manifold (the CNOT_SI transition).
    pub fn nuclear_flip(&self) -> f64 {
        self.transition(SpinBasisState::UP_UP, SpinBasisState::UP_DOWN)
    }

    /// Electron flip in the m_I = +½ manifold (the CNOT_IS transition).
    pub fn electron_flip(&self) -> f64 {
        self.transition(SpinBasisState::UP_UP, SpinBasisState::DOWN_UP)
    }

    /// Probability sin²θ that a nuclear flip also moves the electron.
    pub fn leakage(&self) -> f64 {
        self.mixing_angle.sin().powi(2)
    }
}

/// Diagonalises a single-ion Hamiltonian. The exact kind is solved through the
/// closed form of its coupled 2×2 block.
pub fn diagonalize(h: &SingleIonHamiltonian) -> HyperfineSpectrum {
    let m = &h.matrix;
    let mut vecs = Matrix4::identity();
    let mut energies = [m[(0, 0)], m[(1, 1)], m[(2, 2)], m[(3, 3)]];
    let mut theta = 0.0;

    let coupling = m[(1, 2)];
    if coupling != 0.0 {
        let (d1, d2) = (m[(1, 1)], m[(2, 2)]);
        let mean = 0.5 * (d1 + d2);
        let half_gap = 0.5 * (d1 - d2);
        let radius = half_gap.hypot(coupling);
        // tan 2θ = 2c/(d1 − d2); θ ∈ (−π/4, π/4) when d1 ≠ d2.
        theta = if half_gap == 0.0 {
            FRAC_PI_4.copysign(coupling)
        } else {
            0.5 * (coupling / half_gap).atan()
        };
        let (s, c) = theta.sin_cos();
        // Eigenvector (c, s) has energy mean + sgn(half_gap)·radius, and is
        // dominated by |½,−½⟩ for |θ| < π/4.
        let sign = if half_gap >= 0.0 { 1.0 } else { -1.0 };
        energies[1] = mean + sign * radius;
        energies[2] = mean - sign * radius;
        vecs[(1, 1)] = c;
        vecs[(2, 1)] = s;
        vecs[(1, 2)] = -s;
        vecs[(2, 2)] = c;
    }
    let levels = [0, 1, 2, 3].map(|k| Level {
        label: SpinBasisState::ALL[k],
        energy: energies[k],
    });
    HyperfineSpectrum {
        levels,
        mixing_angle: theta,
        eigenvectors: vecs,
        kind: h.kind,
        field: h.field,
    }
}

/// Published fit evaluated at `field` (1 T ≤ B0 ≤ 5 T).
pub fn effective_ratios(field: f64) -> Result<EffectiveRatios> {
    PUBLISHED_FIT.at(field)
}

/// Effective Larmor frequencies (Ω_S', Ω_I') that make the diagonal model
/// reproduce the transition frequencies of the exact spectrum at `field`.
///
/// With R = √((Ω_S − Ω_I)² + A²) these are ((Ω_S + Ω_I ± R)/2); all four
/// single-flip transitions then coincide with the exact ones.
pub fn matched_larmor(species: &IonSpecies, field: f64) -> Result<(f64, f64)> {
    let spec = diagonalize(&exact_hamiltonian(species, field)?);
    let half_a = 0.5 * species.hyperfine_a;
    Ok((spec.electron_flip() - half_a, spec.nuclear_flip() - half_a))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefitPoint {
    pub field: f64,
    /// Matched γ_S' = Ω_S'/B, (rad/s)/T.
    pub gamma_s: f64,
    pub gamma_i: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefitReport {
    pub fit: EffectiveFit,
    pub points: Vec<RefitPoint>,
    /// max |γ_fit − γ_matched| over the grid, (rad/s)/T.
    pub max_residual_s: f64,
    pub max_residual_i: f64,
    /// Max relative error of the reconstructed electron-flip transitions.
    pub electron_flip_rel_error: f64,
    /// Max relative error of the reconstructed nuclear-flip transitions.
    pub nuclear_flip_rel_error: f64,
}

/// Residuals of any effective fit against the exact spectrum on `grid`.
pub fn fit_residuals(
    species: &IonSpecies,
    fit: &EffectiveFit,
    grid: &[f64],
) -> Result<(f64, f64, f64, f64)> {
    let a = species.hyperfine_a;
    let mut out = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for &b in grid {
        let (ws, wi) = matched_larmor(species, b)?;
        let e = (-fit.decay * b).exp();
        let gs = fit.electron[0] + fit.electron[1] * e;
        let gi = fit.nuclear[0] + fit.nuclear[1] * e;
        out.0 = out.0.max((gs - ws / b).abs());
        out.1 = out.1.max((gi - wi / b).abs());
        // Both electron flips (m_I = ±½) are Ω_S' ± A/2; same for nuclear flips.
        for sign in [1.0, -1.0] {
            let exact_e = ws + sign * 0.5 * a;
            let exact_n = wi + sign * 0.5 * a;
            out.2 = out.2.max(((gs * b + sign * 0.5 * a) / exact_e - 1.0).abs());
            out.3 = out.3.max(((gi * b + sign * 0.5 * a) / exact_n - 1.0).abs());
        }
    }
    Ok(out)
}

/// Least-squares fit of γ'(B) = c0 + c1·e^(−1.5 B/T) to the matched effective
/// ratios on `grid`.
pub fn refit_effective_ratios(species: &IonSpecies, grid: &[f64]) -> Result<RefitReport> {
    species.require_spin_half()?;
    if grid.len() < 5 {
        return Err(Error::Domain(format!(
            "refit needs at least 5 grid points, got {}",
            grid.len()
        )));
    }
    if let Some(&b) = grid.iter().find(|&&b| !(b > 0.5 && b < 10.0)) {
        return Err(Error::Range {
            quantity: "grid B [T]",
            value: b,
            min: 0.5,
            max: 10.0,
        });
    }
    let decay = PUBLISHED_FIT.decay;
    let points = grid
        .iter()
        .map(|&b| {
            let (ws, wi) = matched_larmor(species, b)?;
            Ok(RefitPoint {
                field: b,
                gamma_s: ws / b,
                gamma_i: wi / b,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    // Normal equations for the two-column design [1, e^(−decay·B)].
    let mut ata = Matrix2::zeros();
    let mut rhs_s = Vector2::zeros();
    let mut rhs_i = Vector2::zeros();
    for p in &points {
        let row = Vector2::new(1.0, (-decay * p.field).exp());
        ata += row * row.transpose();
        rhs_s += row * p.gamma_s;
        rhs_i += row * p.gamma_i;
    }
    let scale = ata.amax();
    if ata.determinant().abs() < 1e-12 * scale * scale {
        return Err(Error::Numerical("singular refit design matrix".into()));
    }
    let lu = ata.lu();
    let cs = lu.solve(&rhs_s).ok_or_else(|| Error::Numerical("refit solve failed".into()))?;
    let ci = lu.solve(&rhs_i).ok_or_else(|| Error::Numerical("refit solve failed".into()))?;
    let lo = grid.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = grid.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let fit = EffectiveFit {
        electron: [cs[0], cs[1]],
        nuclear: [ci[0], ci[1]],
        decay,
        valid_range: (lo, hi),
    };
    let (rs, ri, ee, ne) = fit_residuals(species, &fit, grid)?;
    Ok(RefitReport {
        fit,
        points,
        max_residual_s: rs,
        max_residual_i: ri,
        electron_flip_rel_error: ee,
        nuclear_flip_rel_error: ne,
    })
}
