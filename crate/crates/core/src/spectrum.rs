//! Electron-spin-flip lines of an ion chain in a field gradient: every ion
//! sits at its own Larmor frequency, and each line is further shifted by the
//! spin–spin couplings depending on the other ions' electron spins.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::coupling::{j_matrix, CouplingNormalization, FieldConfig};
use crate::crystal::{CrystalConfiguration, MAX_IONS, MIN_IONS};
use crate::error::{Error, Result};
use crate::hyperfine::{larmor_frequencies, Ratios, Spin};
use crate::units::{Frequency, IonSpecies};

/// Lines closer than this (Hz) are merged.
pub const MERGE_TOLERANCE_HZ: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct ChainConfig {
    pub species: IonSpecies,
    pub n_ions: usize,
    pub field: FieldConfig,
    pub nu_z: Frequency,
    /// Zero-based indices of active ions, sorted and unique.
    pub active_set: Vec<usize>,
    /// Common electron spin of the passive ions.
    pub passive_polarization: Spin,
    /// Nuclear states of the flipping ion for which lines are listed.
    pub nuclear_manifolds: Vec<Spin>,
    /// Ratios giving the Larmor frequency at the offset field.
    pub ratios: Ratios,
}

impl ChainConfig {
    /// Validated configuration with nuclei polarised to m_I = ½ and the
    /// effective-ratio fit at the offset field.
    pub fn new(
        species: IonSpecies,
        n_ions: usize,
        field: FieldConfig,
        nu_z: Frequency,
        active_set: Vec<usize>,
        passive_polarization: Spin,
    ) -> Result<Self> {
        let cfg = ChainConfig {
            species,
            n_ions,
            field,
            nu_z,
            active_set,
            passive_polarization,
            nuclear_manifolds: vec![Spin::Up],
            ratios: Ratios::published_fit(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_ions > MAX_IONS {
            return Err(Error::Capacity {
                what: "ions",
                value: self.n_ions,
                max: MAX_IONS,
            });
        }
        if self.n_ions < MIN_IONS {
            return Err(Error::Domain(format!(
                "a chain needs at least {MIN_IONS} ions, got {}",
                self.n_ions
            )));
        }
        if self.active_set.is_empty() {
            return Err(Error::Domain("active set is empty".into()));
        }
        if self.active_set.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Domain("active set must be sorted and unique".into()));
        }
        if let Some(&bad) = self.active_set.iter().find(|&&i| i >= self.n_ions) {
            return Err(Error::Domain(format!(
                "active ion {} outside a chain of {}",
                bad + 1,
                self.n_ions
            )));
        }
        if self.nuclear_manifolds.is_empty() {
            return Err(Error::Domain("no nuclear manifold selected".into()));
        }
        self.species.require_spin_half()
    }

    pub fn is_active(&self, ion: usize) -> bool {
        self.active_set.binary_search(&ion).is_ok()
    }
}

/// One electron-flip line of one ion.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralLine {
    /// Zero-based.
    pub ion: usize,
    pub nuclear: Spin,
    /// rad/s
    pub frequency: f64,
    /// Spin configurations of the other ions producing this line: bit j set
    /// ⇔ ion j has m_S = +½. The flipping ion's own bit is always clear.
    pub conditions: Vec<u32>,
}

impl SpectralLine {
    pub fn weight(&self) -> usize {
        self.conditions.len()
    }

    pub fn hz(&self) -> f64 {
        self.frequency / (2.0 * PI)
    }

    /// m_S of `other` in the first conditioning configuration.
    pub fn condition(&self, other: usize) -> Spin {
        spin_of(self.conditions[0], other)
    }
}

fn spin_of(mask: u32, ion: usize) -> Spin {
    if mask >> ion & 1 == 1 {
        Spin::Up
    } else {
        Spin::Down
    }
}

/// Per-ion Larmor frequencies and couplings the lines are built from.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainLevels {
    /// Ω_S'(B0) + γ_S·b·z_i, rad/s.
    pub larmor: Vec<f64>,
    /// Equilibrium positions, m.
    pub positions: Vec<f64>,
    /// rad/s; zero when b = 0.
    pub j: DMatrix<f64>,
    pub hyperfine_a: f64,
}

pub fn chain_levels(cfg: &ChainConfig) -> Result<ChainLevels> {
    cfg.validate()?;
    let crystal = CrystalConfiguration::new(cfg.species.clone(), cfg.nu_z, cfg.n_ions)?;
    let positions = crystal.positions_si();
    let (offset, _) = larmor_frequencies(&cfg.species, cfg.field.b0, &cfg.ratios)?;
    let slope = cfg.species.gamma_s * cfg.field.gradient;
    let larmor = positions.iter().map(|z| offset + slope * z).collect();
    let j = if cfg.field.gradient > 0.0 {
        j_matrix(
            &cfg.species,
            cfg.nu_z,
            cfg.field,
            cfg.n_ions,
            CouplingNormalization::default(),
        )?
        .j
    } else {
        DMatrix::zeros(cfg.n_ions, cfg.n_ions)
    };
    Ok(ChainLevels {
        larmor,
        positions,
        j,
        hyperfine_a: cfg.species.hyperfine_a,
    })
}

/// Ω_i + A m_I − ½ Σ_j J_ij m_S^j for every configuration of the other ions,
/// unmerged (one entry per configuration).
fn enumerate_ion(
    levels: &ChainLevels,
    ion: usize,
    nuclear: Spin,
    allowed: impl Fn(u32) -> bool,
) -> Vec<SpectralLine> {
    let n = levels.larmor.len();
    let base = levels.larmor[ion] + levels.hyperfine_a * nuclear.value();
    let others: Vec<usize> = (0..n).filter(|&k| k != ion).collect();
    (0..1u32 << others.len())
        .filter_map(|bits| {
            let mask = others
                .iter()
                .enumerate()
                .fold(0u32, |m, (b, &k)| m | ((bits >> b & 1) << k));
            if !allowed(mask) {
                return None;
            }
            let shift: f64 = others
                .iter()
                .map(|&k| levels.j[(ion, k)] * spin_of(mask, k).value())
                .sum();
            Some(SpectralLine {
                ion,
                nuclear,
                frequency: base - 0.5 * shift,
                conditions: vec![mask],
            })
        })
        .collect()
}

/// Merges lines of the same ion and nuclear state closer than
/// [`MERGE_TOLERANCE_HZ`]; output sorted by frequency, then ion.
pub fn merge_lines(mut lines: Vec<SpectralLine>) -> Vec<SpectralLine> {
    let tol = 2.0 * PI * MERGE_TOLERANCE_HZ;
    lines.sort_by(|a, b| {
        (a.ion, a.nuclear.value(), a.frequency)
            .partial_cmp(&(b.ion, b.nuclear.value(), b.frequency))
            .expect("finite frequencies")
    });
    let mut merged: Vec<SpectralLine> = Vec::new();
    for line in lines {
        match merged.last_mut() {
            Some(last)
                if last.ion == line.ion
                    && last.nuclear == line.nuclear
                    && line.frequency - last.frequency <= tol =>
            {
                last.conditions.extend(line.conditions);
            }
            _ => merged.push(line),
        }
    }
    for l in &mut merged {
        l.conditions.sort_unstable();
    }
    merged.sort_by(|a, b| {
        (a.frequency, a.ion)
            .partial_cmp(&(b.frequency, b.ion))
            .expect("finite frequencies")
    });
    merged
}

fn collect(
    cfg: &ChainConfig,
    levels: &ChainLevels,
    ions: &[usize],
    allowed: impl Fn(u32) -> bool + Sync,
) -> Vec<SpectralLine> {
    let jobs: Vec<(usize, Spin)> = ions
        .iter()
        .flat_map(|&i| cfg.nuclear_manifolds.iter().map(move |&s| (i, s)))
        .collect();
    jobs.par_iter()
        .flat_map_iter(|&(ion, nuclear)| enumerate_ion(levels, ion, nuclear, &allowed))
        .collect()
}

/// Every configuration-conditioned line of every ion, one entry per
/// configuration (no merging).
pub fn conditional_lines(cfg: &ChainConfig) -> Result<Vec<SpectralLine>> {
    let levels = chain_levels(cfg)?;
    let ions: Vec<usize> = (0..cfg.n_ions).collect();
    Ok(collect(cfg, &levels, &ions, |_| true))
}

/// All lines of all ions, merged.
pub fn full_spectrum(cfg: &ChainConfig) -> Result<Vec<SpectralLine>> {
    Ok(merge_lines(conditional_lines(cfg)?))
}

/// Lines of the active ions with every passive ion fixed at the passive
/// polarisation, unmerged.
pub fn active_conditional_lines(cfg: &ChainConfig) -> Result<Vec<SpectralLine>> {
    let levels = chain_levels(cfg)?;
    let passive_up = cfg.passive_polarization == Spin::Up;
    let passive: Vec<usize> = (0..cfg.n_ions).filter(|&k| !cfg.is_active(k)).collect();
    Ok(collect(cfg, &levels, &cfg.active_set, move |mask| {
        passive
            .iter()
            .all(|&k| (mask >> k & 1 == 1) == passive_up)
    }))
}

/// Lines left for the active ions once the passive electrons are polarised.
pub fn active_spectrum(cfg: &ChainConfig) -> Result<Vec<SpectralLine>> {
    Ok(merge_lines(active_conditional_lines(cfg)?))
}

/// Weighted mean frequency of each ion's lines (rad/s), indexed by ion.
pub fn group_centers(lines: &[SpectralLine], n_ions: usize) -> Vec<Option<f64>> {
    let mut sum = vec![0.0; n_ions];
    let mut weight = vec![0usize; n_ions];
    for l in lines {
        sum[l.ion] += l.frequency * l.weight() as f64;
        weight[l.ion] += l.weight();
    }
    sum.iter()
        .zip(&weight)
        .map(|(s, &w)| (w > 0).then(|| s / w as f64))
        .collect()
}

/// Smallest gap between adjacent ions' Larmor frequencies, min_i γ_S·b·Δz_i
/// (rad/s).
pub fn addressing_separation(cfg: &ChainConfig) -> Result<f64> {
    cfg.validate()?;
    let crystal = CrystalConfiguration::new(cfg.species.clone(), cfg.nu_z, cfg.n_ions)?;
    let slope = (cfg.species.gamma_s * cfg.field.gradient).abs();
    Ok(slope * crystal.min_spacing())
}

/// Whether adjacent ions are resolved with a given bandwidth (rad/s).
pub fn is_addressable(cfg: &ChainConfig, bandwidth: f64) -> Result<bool> {
    Ok(addressing_separation(cfg)? > bandwidth)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::yb171;
    use approx::assert_relative_eq;

    fn config(n: usize, gradient: f64, active: Vec<usize>) -> ChainConfig {
        ChainConfig::new(
            yb171(),
            n,
            FieldConfig::new(1.0, gradient).unwrap(),
            Frequency::from_khz(600.0),
            active,
            Spin::Up,
        )
        .unwrap()
    }

    #[test]
    fn three_ion_groups_are_gradient_split() {
        let cfg = config(3, 500.0, vec![1, 2]);
        let lines = full_spectrum(&cfg).unwrap();
        let centers: Vec<f64> = group_centers(&lines, 3).into_iter().map(Option::unwrap).collect();
        let pos = chain_levels(&cfg).unwrap().positions;
        for i in 0..2 {
            let want = cfg.species.gamma_s * 500.0 * (pos[i + 1] - pos[i]);
            assert_relative_eq!(centers[i + 1] - centers[i], want, max_relative = 1e-6);
        }
        let sep = addressing_separation(&cfg).unwrap() / (2.0 * PI);
        assert!((sep / 1e6 - 58.0).abs() < 0.5, "{sep}");
    }

    #[test]
    fn weights_count_configurations() {
        for n in [2, 3, 4, 5] {
            let mut cfg = config(n, 300.0, vec![0]);
            cfg.nuclear_manifolds = vec![Spin::Up, Spin::Down];
            let lines = full_spectrum(&cfg).unwrap();
            for ion in 0..n {
                let w: usize = lines.iter().filter(|l| l.ion == ion).map(|l| l.weight()).sum();
                assert_eq!(w, 2 * (1 << (n - 1)));
            }
        }
    }

    #[test]
    fn conditional_shift_is_half_coupling() {
        let cfg = config(3, 500.0, vec![0, 1, 2]);
        let levels = chain_levels(&cfg).unwrap();
        let lines = conditional_lines(&cfg).unwrap();
        let f = |ion: usize, mask: u32| {
            lines
                .iter()
                .find(|l| l.ion == ion && l.conditions[0] == mask)
                .unwrap()
                .frequency
        };
        // Ion 0 with ion 1 flipped from down to up (ion 2 down).
        assert_relative_eq!(f(0, 0b000) - f(0, 0b010), 0.5 * levels.j[(0, 1)], max_relative = 1e-9);
    }

    #[test]
    fn no_gradient_means_one_line_per_manifold() {
        let mut cfg = config(3, 0.0, vec![0]);
        cfg.nuclear_manifolds = vec![Spin::Up, Spin::Down];
        let lines = full_spectrum(&cfg).unwrap();
        let mut freqs: Vec<f64> = lines.iter().map(|l| l.frequency).collect();
        freqs.dedup_by(|a, b| (*a - *b).abs() < 2.0 * PI * MERGE_TOLERANCE_HZ);
        assert_eq!(freqs.len(), 2);
        assert_eq!(addressing_separation(&cfg).unwrap(), 0.0);
    }

    #[test]
    fn passive_polarization_collapses_lines() {
        for n in [3, 4] {
            let cfg = config(n, 500.0, vec![1, 2]);
            let full = conditional_lines(&cfg).unwrap();
            let active = active_conditional_lines(&cfg).unwrap();
            for ion in [1, 2] {
                assert_eq!(full.iter().filter(|l| l.ion == ion).count(), 1 << (n - 1));
                assert_eq!(active.iter().filter(|l| l.ion == ion).count(), 2);
                let merged = active_spectrum(&cfg).unwrap();
                assert_eq!(merged.iter().filter(|l| l.ion == ion).count(), 2);
            }
            assert!(active.iter().all(|l| cfg.is_active(l.ion)));
        }
    }

    #[test]
    fn active_lines_are_subset_of_full() {
        let cfg = config(4, 500.0, vec![1, 2]);
        let full = full_spectrum(&cfg).unwrap();
        for line in active_spectrum(&cfg).unwrap() {
            for mask in &line.conditions {
                assert!(full.iter().any(|f| f.ion == line.ion
                    && f.conditions.contains(mask)
                    && (f.frequency - line.frequency).abs() < 2.0 * PI * MERGE_TOLERANCE_HZ));
            }
        }
    }

    #[test]
    fn passive_flip_shifts_active_lines() {
        let up = config(4, 500.0, vec![1, 2]);
        let mut down = up.clone();
        down.passive_polarization = Spin::Down;
        let a = active_conditional_lines(&up).unwrap();
        let b = active_conditional_lines(&down).unwrap();
        let j = chain_levels(&up).unwrap().j;
        for ion in [1usize, 2] {
            let passive_sum: f64 = [0usize, 3].iter().map(|&k| j[(ion, k)]).sum();
            let la: Vec<f64> = a.iter().filter(|l| l.ion == ion).map(|l| l.frequency).collect();
            let lb: Vec<f64> = b.iter().filter(|l| l.ion == ion).map(|l| l.frequency).collect();
            for (x, y) in la.iter().zip(&lb) {
                assert_relative_eq!(y - x, 0.5 * passive_sum, max_relative = 1e-6);
            }
            assert_relative_eq!(la[1] - la[0], lb[1] - lb[0], max_relative = 1e-6);
        }
    }

    #[test]
    fn global_flip_negates_shifts() {
        let cfg = config(4, 500.0, vec![0]);
        let levels = chain_levels(&cfg).unwrap();
        let lines = conditional_lines(&cfg).unwrap();
        let all = (1u32 << 4) - 1;
        for l in &lines {
            let center = levels.larmor[l.ion] + levels.hyperfine_a * 0.5;
            let flipped = (!l.conditions[0]) & all & !(1 << l.ion);
            let partner = lines
                .iter()
                .find(|m| m.ion == l.ion && m.conditions[0] == flipped)
                .unwrap();
            assert_relative_eq!(partner.frequency - center, -(l.frequency - center), epsilon = 1e-6);
        }
    }

    #[test]
    fn output_is_sorted() {
        let lines = full_spectrum(&config(4, 500.0, vec![1, 2])).unwrap();
        assert!(lines.windows(2).all(|w| w[0].frequency <= w[1].frequency));
    }

    #[test]
    fn validation() {
        let base = config(3, 500.0, vec![0]);
        let mut c = base.clone();
        c.active_set = vec![];
        assert!(c.validate().is_err());
        c.active_set = vec![3];
        assert!(c.validate().is_err());
        c.active_set = vec![1, 1];
        assert!(c.validate().is_err());
        c.active_set = vec![0];
        c.n_ions = 21;
        assert!(matches!(c.validate(), Err(Error::Capacity { .. })));
    }

    #[test]
    fn separation_linear_in_gradient() {
        let a = addressing_separation(&config(3, 200.0, vec![0])).unwrap();
        let b = addressing_separation(&config(3, 600.0, vec![0])).unwrap();
        assert_relative_eq!(b / a, 3.0, max_relative = 1e-12);
    }
}
