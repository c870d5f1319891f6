//! Equilibrium positions and axial normal modes of a linear Coulomb crystal.
//!
//! Positions are dimensionless, in units of the length scale
//! [`ion_length_scale`]. The dimensionless potential is
//! `V(u) = Σ u_i²/2 + Σ_{i<j} 1/|u_i − u_j|`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::units::{ion_length_scale, Frequency, IonSpecies};

pub const MIN_IONS: usize = 2;
pub const MAX_IONS: usize = 20;

const NEWTON_BUDGET: usize = 200;
const GRADIENT_TOL: f64 = 1e-12;

/// Equilibrium crystal of identical ions.
#[derive(Debug, Clone, PartialEq)]
pub struct CrystalConfiguration {
    pub species: IonSpecies,
    pub nu_z: Frequency,
    /// Ascending, centred on zero, in units of ℓ.
    pub positions: Vec<f64>,
}

/// Axial normal modes. Column `l` of `mode_matrix` belongs to `eigenvalues[l]`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalModes {
    /// μ_l, ascending; μ_1 = 1 is the centre-of-mass mode.
    pub eigenvalues: Vec<f64>,
    pub mode_matrix: DMatrix<f64>,
    /// ν_l = ν_z √μ_l.
    pub frequencies: Vec<Frequency>,
}

impl CrystalConfiguration {
    pub fn new(species: IonSpecies, nu_z: Frequency, n_ions: usize) -> Result<Self> {
        ion_length_scale(&species, nu_z)?;
        let positions = equilibrium_positions(n_ions)?;
        Ok(CrystalConfiguration {
            species,
            nu_z,
            positions,
        })
    }

    pub fn n_ions(&self) -> usize {
        self.positions.len()
    }

    /// ℓ in metres.
    pub fn length_scale(&self) -> f64 {
        ion_length_scale(&self.species, self.nu_z).expect("validated at construction")
    }

    /// Positions in metres.
    pub fn positions_si(&self) -> Vec<f64> {
        let l = self.length_scale();
        self.positions.iter().map(|u| u * l).collect()
    }

    /// Smallest neighbour gap in metres.
    pub fn min_spacing(&self) -> f64 {
        self.length_scale() * min_gap(&self.positions)
    }

    pub fn normal_modes(&self) -> Result<NormalModes> {
        normal_modes(self)
    }
}

fn check_count(n_ions: usize) -> Result<()> {
    if n_ions < MIN_IONS {
        return Err(Error::Domain(format!(
            "need at least {MIN_IONS} ions, got {n_ions}"
        )));
    }
    if n_ions > MAX_IONS {
        return Err(Error::Capacity {
            what: "n_ions",
            value: n_ions,
            max: MAX_IONS,
        });
    }
    Ok(())
}

/// Dimensionless potential energy.
pub fn potential(u: &[f64]) -> f64 {
    let mut v = 0.5 * u.iter().map(|x| x * x).sum::<f64>();
    for i in 0..u.len() {
        for j in i + 1..u.len() {
            v += 1.0 / (u[i] - u[j]).abs();
        }
    }
    v
}

/// Gradient of [`potential`].
pub fn gradient(u: &[f64]) -> Vec<f64> {
    (0..u.len())
        .map(|i| {
            let mut g = u[i];
            for j in 0..u.len() {
                if j != i {
                    let d = u[i] - u[j];
                    g -= d.signum() / (d * d);
                }
            }
            g
        })
        .collect()
}

/// Hessian of [`potential`].
pub fn hessian(u: &[f64]) -> DMatrix<f64> {
    let n = u.len();
    let mut h = DMatrix::zeros(n, n);
    for i in 0..n {
        let mut diag = 1.0;
        for j in 0..n {
            if j != i {
                let k = 2.0 / (u[i] - u[j]).abs().powi(3);
                h[(i, j)] = -k;
                diag += k;
            }
        }
        h[(i, i)] = diag;
    }
    h
}

fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn is_ascending(u: &[f64]) -> bool {
    u.windows(2).all(|w| w[0] < w[1])
}

fn min_gap(u: &[f64]) -> f64 {
    u.windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min)
}

/// Equilibrium positions of `n_ions` ions, ascending, in units of ℓ.
///
/// Damped Newton iteration from a uniformly spaced guess.
pub fn equilibrium_positions(n_ions: usize) -> Result<Vec<f64>> {
    check_count(n_ions)?;
    let n = n_ions;
    // Uniform spacing of the right order of magnitude (~ N^(-0.56) for large N).
    let spacing = 2.0 * (n as f64).powf(-0.56);
    let mut u: Vec<f64> = (0..n)
        .map(|i| (i as f64 - (n as f64 - 1.0) / 2.0) * spacing)
        .collect();

    let mut residual = max_norm(&gradient(&u));
    for _ in 0..NEWTON_BUDGET {
        if residual < GRADIENT_TOL {
            return Ok(symmetrize(u));
        }
        let g = DVector::from_vec(gradient(&u));
        let step = hessian(&u)
            .cholesky()
            .map(|c| c.solve(&g))
            // Away from the minimum the Hessian may be indefinite; fall back
            // to steepest descent.
            .unwrap_or_else(|| g.clone());

        let v0 = potential(&u);
        let mut alpha = 1.0;
        let mut accepted = false;
        while alpha > 1e-12 {
            let trial: Vec<f64> = u.iter().zip(step.iter()).map(|(x, s)| x - alpha * s).collect();
            if is_ascending(&trial) {
                let r = max_norm(&gradient(&trial));
                if potential(&trial) <= v0 || r < residual {
                    u = trial;
                    residual = r;
                    accepted = true;
                    break;
                }
            }
            alpha *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if residual < GRADIENT_TOL {
        return Ok(symmetrize(u));
    }
    Err(Error::NoConvergence {
        what: "equilibrium positions",
        iterations: NEWTON_BUDGET,
        residual,
    })
}

/// Enforces exact mirror symmetry u_i = −u_{N−1−i}.
fn symmetrize(u: Vec<f64>) -> Vec<f64> {
    let n = u.len();
    (0..n).map(|i| 0.5 * (u[i] - u[n - 1 - i])).collect()
}

/// Minimum neighbour distance Δz_min in metres.
pub fn min_spacing(species: &IonSpecies, nu_z: Frequency, n_ions: usize) -> Result<f64> {
    let l = ion_length_scale(species, nu_z)?;
    Ok(l * min_gap(&equilibrium_positions(n_ions)?))
}

/// Eigen-decomposition of the dimensionless Hessian at equilibrium.
pub fn normal_modes(config: &CrystalConfiguration) -> Result<NormalModes> {
    let u = &config.positions;
    check_count(u.len())?;
    if !is_ascending(u) {
        return Err(Error::Domain("positions must be strictly ascending".into()));
    }
    let residual = max_norm(&gradient(u));
    if residual > 1e-10 {
        return Err(Error::Domain(format!(
            "configuration is not an equilibrium (gradient {residual:e})"
        )));
    }
    let n = u.len();
    let eig = SymmetricEigen::try_new(hessian(u), f64::EPSILON, 10_000)
        .ok_or_else(|| Error::Numerical("Hessian eigen-decomposition failed".into()))?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let mut mode_matrix = DMatrix::zeros(n, n);
    let mut eigenvalues = Vec::with_capacity(n);
    for (col, &k) in order.iter().enumerate() {
        let mu = eig.eigenvalues[k];
        if !(mu > 0.0) {
            return Err(Error::Numerical(format!(
                "non-positive Hessian eigenvalue {mu}"
            )));
        }
        let mut v = eig.eigenvectors.column(k).into_owned();
        // Sign convention: first component with appreciable weight is positive.
        let pivot = v.iter().copied().find(|x| x.abs() > 1e-8).unwrap_or(1.0);
        if pivot < 0.0 {
            v.neg_mut();
        }
        mode_matrix.set_column(col, &v);
        eigenvalues.push(mu);
    }
    let frequencies = eigenvalues
        .iter()
        .map(|mu| Frequency::from_angular(config.nu_z.angular() * mu.sqrt()))
        .collect();
    Ok(NormalModes {
        eigenvalues,
        mode_matrix,
        frequencies,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::yb171;
    use approx::assert_relative_eq;

    /// Solves g(x) = 0 on [lo, hi] by bisection; g must change sign.
    fn bisect(mut lo: f64, mut hi: f64, g: impl Fn(f64) -> f64) -> f64 {
        let mut glo = g(lo);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let gm = g(mid);
            if (gm > 0.0) == (glo > 0.0) {
                lo = mid;
                glo = gm;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Independent oracle for N = 4: symmetric positions ±a, ±c solved by
    /// nested bisection on the force balance.
    fn four_ion_oracle() -> (f64, f64) {
        let outer = |a: f64| {
            bisect(a + 1e-3, 10.0, |c| {
                c - 1.0 / (c - a).powi(2) - 1.0 / (c + a).powi(2) - 1.0 / (4.0 * c * c)
            })
        };
        let a = bisect(0.05, 1.0, |a| {
            let c = outer(a);
            a - 1.0 / (4.0 * a * a) - 1.0 / (a + c).powi(2) + 1.0 / (c - a).powi(2)
        });
        (a, outer(a))
    }

    #[test]
    fn two_ions_closed_form() {
        let u = equilibrium_positions(2).unwrap();
        let x = 0.5f64.powf(2.0 / 3.0);
        assert_relative_eq!(u[1], x, max_relative = 1e-12);
        assert_relative_eq!(u[0], -x, max_relative = 1e-12);
        assert_relative_eq!(x, 0.629_960_524_947, max_relative = 1e-11);
    }

    #[test]
    fn three_ions_closed_form() {
        // Middle ion at rest, outer ions obey u = 1/u² + 1/(2u)² ⇒ u³ = 5/4.
        let u = equilibrium_positions(3).unwrap();
        let x = 1.25f64.cbrt();
        assert!(u[1].abs() < 1e-14);
        assert_relative_eq!(u[2], x, max_relative = 1e-12);
        assert_relative_eq!(u[2], 1.0772, epsilon = 5e-5);
    }

    #[test]
    fn four_ions_match_bisection_oracle() {
        let (a, c) = four_ion_oracle();
        let u = equilibrium_positions(4).unwrap();
        assert_relative_eq!(u[2], a, max_relative = 1e-10);
        assert_relative_eq!(u[3], c, max_relative = 1e-10);
        assert_relative_eq!(u[3], 1.4368, epsilon = 5e-5);
        assert_relative_eq!(u[2], 0.4544, epsilon = 5e-5);
    }

    #[test]
    fn equilibrium_invariants_all_sizes() {
        for n in MIN_IONS..=MAX_IONS {
            let u = equilibrium_positions(n).unwrap();
            assert_eq!(u.len(), n);
            assert!(is_ascending(&u));
            assert!(u.iter().sum::<f64>().abs() < 1e-12, "n = {n}");
            assert!(max_norm(&gradient(&u)) < 1e-10, "n = {n}");
        }
    }

    #[test]
    fn rejects_bad_counts() {
        assert!(matches!(equilibrium_positions(1), Err(Error::Domain(_))));
        assert!(matches!(
            equilibrium_positions(21),
            Err(Error::Capacity { .. })
        ));
    }

    #[test]
    fn local_minimum_against_perturbations() {
        use rand_like::Lcg;
        for n in [2, 3, 5, 8] {
            let u = equilibrium_positions(n).unwrap();
            let v0 = potential(&u);
            let mut rng = Lcg(0x5eed + n as u64);
            for _ in 0..100 {
                let p: Vec<f64> = u.iter().map(|x| x + 1e-3 * rng.symmetric()).collect();
                assert!(potential(&p) > v0);
            }
        }
    }

    /// Minimal deterministic generator so the perturbation test does not
    /// depend on an RNG crate.
    mod rand_like {
        pub struct Lcg(pub u64);
        impl Lcg {
            pub fn symmetric(&mut self) -> f64 {
                self.0 = self.0.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                ((self.0 >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
            }
        }
    }

    #[test]
    fn table_spacings() {
        let yb = yb171();
        let cases = [(600.0, 3, 4.15), (600.0, 4, 3.50), (200.0, 3, 8.63), (200.0, 4, 7.28)];
        for (khz, n, um) in cases {
            let dz = min_spacing(&yb, Frequency::from_khz(khz), n).unwrap() * 1e6;
            assert!((dz / um - 1.0).abs() < 2e-3, "{khz} kHz N={n}: {dz}");
        }
    }

    #[test]
    fn spacing_scaling_law() {
        let yb = yb171();
        let scaled = |khz: f64| {
            let nu = Frequency::from_khz(khz);
            min_spacing(&yb, nu, 4).unwrap() * nu.angular().powf(2.0 / 3.0)
        };
        let reference = scaled(600.0);
        for khz in [50.0, 200.0, 1000.0, 3300.0] {
            assert_relative_eq!(scaled(khz), reference, max_relative = 1e-9);
        }
    }

    #[test]
    fn modes_two_and_three_ions() {
        let yb = yb171();
        let nu = Frequency::from_khz(600.0);
        let m2 = CrystalConfiguration::new(yb.clone(), nu, 2).unwrap().normal_modes().unwrap();
        assert_relative_eq!(m2.eigenvalues[0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(m2.eigenvalues[1], 3.0, epsilon = 1e-12);
        let m3 = CrystalConfiguration::new(yb, nu, 3).unwrap().normal_modes().unwrap();
        // Hand evaluation of the 3×3 Hessian at u = (0, ±(5/4)^(1/3)):
        // eigenvalues 1, 3 and 29/5.
        for (mu, want) in m3.eigenvalues.iter().zip([1.0, 3.0, 5.8]) {
            assert_relative_eq!(*mu, want, epsilon = 1e-10);
        }
        assert_relative_eq!(m3.frequencies[1].khz(), 600.0 * 3f64.sqrt(), max_relative = 1e-12);
    }

    #[test]
    fn mode_invariants_all_sizes() {
        let yb = yb171();
        for n in MIN_IONS..=MAX_IONS {
            let cfg = CrystalConfiguration::new(yb.clone(), Frequency::from_khz(600.0), n).unwrap();
            let modes = cfg.normal_modes().unwrap();
            let d = &modes.mode_matrix;
            assert_relative_eq!(modes.eigenvalues[0], 1.0, epsilon = 1e-9);
            assert!(modes.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
            let ortho = d.transpose() * d - DMatrix::identity(n, n);
            assert!(ortho.amax() < 1e-10, "n = {n}");
            let com = 1.0 / (n as f64).sqrt();
            for i in 0..n {
                assert!((d[(i, 0)] - com).abs() < 1e-9, "n = {n}");
            }
            let h = hessian(&cfg.positions);
            let rebuilt = d * DMatrix::from_diagonal(&DVector::from_vec(modes.eigenvalues.clone())) * d.transpose();
            assert!((rebuilt - &h).amax() < 1e-9);
            assert!(h.clone().cholesky().is_some());
            assert!((&h - h.transpose()).amax() == 0.0);
        }
    }

    #[test]
    fn normal_modes_rejects_non_equilibrium() {
        let cfg = CrystalConfiguration {
            species: yb171(),
            nu_z: Frequency::from_khz(600.0),
            positions: vec![-1.0, 0.0, 1.0],
        };
        assert!(matches!(cfg.normal_modes(), Err(Error::Domain(_))));
    }
}
