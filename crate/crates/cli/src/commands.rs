//! One function per subcommand: resolve inputs, compute, tabulate.

use std::f64::consts::PI;

use clap::{Args, ValueEnum};
use ionspin::coupling::gate_time_table;
use ionspin::crystal::CrystalConfiguration;
use ionspin::dynamics::{cnot_fidelity_curve, FidelityOptions, DEFAULT_RABI_DIVISOR};
use ionspin::hyperfine::{
    diagonalize, exact_hamiltonian, highfield_hamiltonian, larmor_frequencies, refit_effective_ratios, Ratios,
    Spin, PUBLISHED_FIT,
};
use ionspin::magnet::{field as halbach_field, segment_factor, HalbachGeometry, Shape};
use ionspin::pseudopotential::{
    cyclotron_frequency, floquet_secular_frequency, secular_frequency, shifted_modes, RfTrapParams,
};
use ionspin::spectrum::{active_spectrum, addressing_separation, full_spectrum, ChainConfig, SpectralLine};
use ionspin::coupling::FieldConfig;
use ionspin::units::{Frequency, IonSpecies};
use serde_json::{json, Value};

use crate::config::{resolve, resolve_quantity, Polarization, RunConfig};
use crate::error::CliError;
use crate::output::{col, Cell, Report};
use crate::units::{self, Dimension, Sweep};

const TWO_PI: f64 = 2.0 * PI;
const GHZ_PER_T: f64 = TWO_PI * 1e9;

/// Everything a subcommand needs besides its own flags.
pub struct Context {
    pub config: RunConfig,
    pub species: IonSpecies,
}

/// A report, plus a failure to signal after the report has been written.
pub struct Outcome {
    pub report: Report,
    pub failure: Option<CliError>,
}

impl From<Report> for Outcome {
    fn from(report: Report) -> Self {
        Outcome { report, failure: None }
    }
}

type Run = Result<Outcome, CliError>;

fn hz(angular: f64) -> f64 {
    angular / TWO_PI
}

/// Grid over a swept parameter: an explicit flag value wins, then a sweep
/// flag, then the config file's sweep, then `fallback`.
fn grid(
    name: &str,
    single: Option<f64>,
    sweep: &Option<String>,
    config: &RunConfig,
    dimension_of: impl Fn(&str) -> Option<Dimension> + Copy,
    fallback: impl FnOnce() -> Result<Vec<f64>, CliError>,
) -> Result<Vec<f64>, CliError> {
    if let Some(v) = single {
        return Ok(vec![v]);
    }
    let sweep = match sweep {
        Some(text) => Some(Sweep::parse(text, dimension_of).map_err(|e| CliError::Validation(e.0))?),
        None => config.sweep(dimension_of)?,
    };
    match sweep {
        Some(s) if s.parameter == name => Ok(s.values()),
        Some(s) => Err(CliError::Validation(format!(
            "cannot sweep {:?} here; only {name:?}",
            s.parameter
        ))),
        None => fallback(),
    }
}

fn only_field(p: &str) -> Option<Dimension> {
    (p == "B").then_some(Dimension::Field)
}

// ---------------------------------------------------------------- crystal

#[derive(Debug, Args)]
pub struct CrystalArgs {
    /// Number of ions (2–20).
    #[arg(long)]
    pub n: Option<usize>,
    /// Axial trap frequency ν_z, e.g. 600kHz.
    #[arg(long = "nu-z", value_parser = units::frequency)]
    pub nu_z: Option<f64>,
}

/// Equilibrium positions and axial normal modes, one row per (ion, mode).
pub fn crystal(ctx: &Context, a: &CrystalArgs) -> Run {
    let cfg = &ctx.config;
    let n = resolve(a.n, cfg.chain.n, 3);
    let nu_z = resolve_quantity(a.nu_z, &cfg.trap.nu_z, Dimension::Frequency, "trap.nu_z", 600e3)?;
    let crystal = CrystalConfiguration::new(ctx.species.clone(), Frequency::from_hz(nu_z), n)?;
    let modes = crystal.normal_modes()?;
    let positions = crystal.positions_si();

    let mut r = Report::new(
        "crystal",
        vec![
            col("ion", ""),
            col("position", "um"),
            col("mode", ""),
            col("mu", ""),
            col("mode_frequency", "kHz"),
            col("D", ""),
        ],
    );
    for (i, z) in positions.iter().enumerate() {
        for l in 0..n {
            r.push(vec![
                (i + 1).into(),
                (z * 1e6).into(),
                (l + 1).into(),
                modes.eigenvalues[l].into(),
                modes.frequencies[l].khz().into(),
                modes.mode_matrix[(i, l)].into(),
            ]);
        }
    }
    let spacings: Vec<f64> = positions.windows(2).map(|w| (w[1] - w[0]) * 1e6).collect();
    r.inputs = json!({ "species": ctx.species.name, "n": n, "nu_z_kHz": nu_z / 1e3 });
    r.summary = json!({
        "min_spacing_um": crystal.min_spacing() * 1e6,
        "length_scale_um": crystal.length_scale() * 1e6,
        "spacings_um": spacings,
    });
    Ok(r.into())
}

// ---------------------------------------------------------------- table1

#[derive(Debug, Args)]
pub struct Table1Args {
    /// Exit with status 4 if any relative deviation exceeds the tolerance.
    #[arg(long)]
    pub check: bool,
    /// Relative tolerance for --check.
    #[arg(long, default_value_t = 0.01, value_parser = units::number)]
    pub tolerance: f64,
}

/// Gate-time table at B0 = 1 T beside the published values.
pub fn table1(ctx: &Context, a: &Table1Args) -> Run {
    if !(a.tolerance > 0.0) {
        return Err(CliError::Validation(format!("tolerance must be positive, got {}", a.tolerance)));
    }
    let results = gate_time_table(&ctx.species)?;
    let mut r = Report::new(
        "table1",
        vec![
            col("nu_z", "kHz"),
            col("N", ""),
            col("b", "T/m"),
            col("dz_min", "um"),
            col("dz_min_published", "um"),
            col("dz_min_rel_dev", ""),
            col("J", "kHz"),
            col("J_published", "kHz"),
            col("J_rel_dev", ""),
            col("T", "ms"),
            col("T_published", "ms"),
            col("T_rel_dev", ""),
        ],
    );
    let mut worst: f64 = 0.0;
    for res in &results {
        let p = &res.reference;
        let [dz, j, t] = res.deviations();
        worst = worst.max(res.max_deviation());
        r.push(vec![
            p.nu_z_khz.into(),
            p.n_ions.into(),
            p.gradient.into(),
            res.min_spacing_um.into(),
            p.min_spacing_um.into(),
            dz.into(),
            res.j_khz.into(),
            p.j_khz.into(),
            j.into(),
            res.gate_time_ms.into(),
            p.gate_time_ms.into(),
            t.into(),
        ]);
    }
    r.inputs = json!({ "species": ctx.species.name, "B0_T": 1.0, "check": a.check, "tolerance": a.tolerance });
    r.summary = json!({ "max_abs_rel_dev": worst, "within_tolerance": worst <= a.tolerance });
    let failure = (a.check && worst > a.tolerance).then(|| {
        CliError::Tolerance(format!(
            "largest relative deviation {worst:.4} exceeds tolerance {}",
            a.tolerance
        ))
    });
    Ok(Outcome { report: r, failure })
}

// ---------------------------------------------------------------- levels

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RatioChoice {
    /// Natural gyromagnetic ratios.
    Natural,
    /// Effective ratios from the published fit (1–5 T).
    Fit,
}

impl RatioChoice {
    fn ratios(self) -> Ratios {
        match self {
            RatioChoice::Natural => Ratios::Natural,
            RatioChoice::Fit => Ratios::published_fit(),
        }
    }

    fn label(self) -> &'static str {
        match self {
            RatioChoice::Natural => "natural",
            RatioChoice::Fit => "fit",
        }
    }
}

#[derive(Debug, Args)]
pub struct LevelsArgs {
    /// Magnetic field, e.g. 1T.
    #[arg(long = "B", value_parser = units::field)]
    pub field: Option<f64>,
    /// Field sweep, e.g. B=0.1T:5T:50.
    #[arg(long)]
    pub sweep: Option<String>,
    /// Ratios of the high-field model.
    #[arg(long, value_enum, default_value_t = RatioChoice::Natural)]
    pub ratios: RatioChoice,
}

/// Levels and transitions of the exact and high-field single-ion models.
pub fn levels(ctx: &Context, a: &LevelsArgs) -> Run {
    let cfg = &ctx.config;
    let fields = grid("B", a.field, &a.sweep, cfg, only_field, || {
        Ok(vec![resolve_quantity(None, &cfg.field.b0, Dimension::Field, "field.b0", 1.0)?])
    })?;
    let ratios = a.ratios.ratios();
    let mut r = Report::new(
        "levels",
        vec![col("B", "T"), col("model", ""), col("kind", ""), col("label", ""), col("frequency", "GHz")],
    );
    let mut summary = Vec::with_capacity(fields.len());
    for &b in &fields {
        let exact = diagonalize(&exact_hamiltonian(&ctx.species, b)?);
        let high = diagonalize(&highfield_hamiltonian(&ctx.species, b, &ratios)?);
        for (model, spec) in [("exact", &exact), ("high-field", &high)] {
            for level in &spec.levels {
                r.push(vec![b.into(), model.into(), "level".into(), level.label.to_string().into(), (hz(level.energy) / 1e9).into()]);
            }
            for (from, to, f) in spec.transitions() {
                r.push(vec![b.into(), model.into(), "transition".into(), format!("{from}->{to}").into(), (hz(f) / 1e9).into()]);
            }
        }
        summary.push(json!({
            "B_T": b,
            "nuclear_flip_exact_GHz": hz(exact.nuclear_flip()) / 1e9,
            "nuclear_flip_highfield_GHz": hz(high.nuclear_flip()) / 1e9,
            "electron_flip_exact_GHz": hz(exact.electron_flip()) / 1e9,
            "electron_flip_highfield_GHz": hz(high.electron_flip()) / 1e9,
            "cos_theta": exact.mixing_angle.cos().abs(),
            "sin_theta": exact.mixing_angle.sin().abs(),
            "leakage": exact.leakage(),
        }));
    }
    r.inputs = json!({ "species": ctx.species.name, "fields_T": fields, "highfield_ratios": a.ratios.label() });
    r.summary = Value::Array(summary);
    Ok(r.into())
}

// ---------------------------------------------------------------- fidelity

#[derive(Debug, Args)]
pub struct FidelityArgs {
    /// Single field, e.g. 1T.
    #[arg(long = "B", value_parser = units::field)]
    pub field: Option<f64>,
    /// Field sweep; defaults to B=1T:5T:9.
    #[arg(long)]
    pub sweep: Option<String>,
    /// Ratios of the high-field reference model.
    #[arg(long, value_enum, default_value_t = RatioChoice::Fit)]
    pub reference: RatioChoice,
    /// Rabi frequency is A divided by this.
    #[arg(long = "rabi-divisor", default_value_t = DEFAULT_RABI_DIVISOR, value_parser = units::number)]
    pub rabi_divisor: f64,
}

/// CNOT_SI fidelity of the high-field model against the exact levels.
pub fn fidelity(ctx: &Context, a: &FidelityArgs) -> Run {
    let fields = grid("B", a.field, &a.sweep, &ctx.config, only_field, || {
        Ok(Sweep::new("B", 1.0, 5.0, 9).expect("static sweep").values())
    })?;
    if !(a.rabi_divisor > 1.0) || !a.rabi_divisor.is_finite() {
        return Err(CliError::Validation(format!("rabi divisor must exceed 1, got {}", a.rabi_divisor)));
    }
    let opts = FidelityOptions {
        reference: a.reference.ratios(),
        rabi_divisor: a.rabi_divisor,
        ..FidelityOptions::default()
    };
    let samples = cnot_fidelity_curve(&ctx.species, &fields, &opts);
    let mut r = Report::new(
        "fidelity",
        vec![
            col("B", "T"),
            col("B_over_A", ""),
            col("C", ""),
            col("one_minus_C", ""),
            col("leakage", ""),
            col("sin2_theta", ""),
        ],
    );
    let mut curve = Vec::with_capacity(samples.len());
    for s in samples {
        let p = s.result.map_err(|e| {
            let e = CliError::from(e);
            match e {
                CliError::Validation(m) => CliError::Validation(format!("at B = {} T: {m}", s.field)),
                CliError::Numerical(m) => CliError::Numerical(format!("at B = {} T: {m}", s.field)),
                other => other,
            }
        })?;
        curve.push(p.fidelity);
        r.push(vec![
            p.field.into(),
            p.b_over_a.into(),
            p.fidelity.into(),
            (1.0 - p.fidelity).into(),
            p.leakage.into(),
            p.mixing.into(),
        ]);
    }
    r.inputs = json!({
        "species": ctx.species.name,
        "fields_T": fields,
        "reference_ratios": a.reference.label(),
        "rabi_divisor": a.rabi_divisor,
        "pulse": "resonant pi pulse on |1/2,1/2> -> |1/2,-1/2>, circular polarisation",
    });
    r.summary = json!({
        "min_C": curve.iter().cloned().fold(f64::INFINITY, f64::min),
        "nondecreasing": curve.windows(2).all(|w| w[1] >= w[0]),
    });
    Ok(r.into())
}

// ---------------------------------------------------------------- spectrum

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NuclearChoice {
    Up,
    Down,
    Both,
}

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    /// Number of ions.
    #[arg(long)]
    pub n: Option<usize>,
    /// Field gradient, e.g. 500T/m.
    #[arg(long = "b", value_parser = units::gradient)]
    pub gradient: Option<f64>,
    /// Offset field B0, e.g. 1T.
    #[arg(long = "B", value_parser = units::field)]
    pub field: Option<f64>,
    /// Axial trap frequency ν_z.
    #[arg(long = "nu-z", value_parser = units::frequency)]
    pub nu_z: Option<f64>,
    /// Active ions, one-based, e.g. 2,3; default all.
    #[arg(long)]
    pub active: Option<String>,
    /// Electron spin the passive ions are prepared in.
    #[arg(long, value_enum)]
    pub passive: Option<Polarization>,
    /// Nuclear state(s) of the flipping ion.
    #[arg(long, value_enum, default_value_t = NuclearChoice::Up)]
    pub nuclear: NuclearChoice,
}

fn line_row(list: &str, line: &SpectralLine, reference: f64) -> Vec<Cell> {
    let conditions: Vec<String> = line.conditions.iter().map(u32::to_string).collect();
    vec![
        list.into(),
        (line.ion + 1).into(),
        line.nuclear.value().into(),
        line.hz().into(),
        ((line.hz() - reference) / 1e6).into(),
        line.weight().into(),
        conditions.join(";").into(),
    ]
}

/// Electron-flip lines of a chain, with and without polarised passives.
pub fn spectrum(ctx: &Context, a: &SpectrumArgs) -> Run {
    let cfg = &ctx.config;
    let n = resolve(a.n, cfg.chain.n, 3);
    let gradient = resolve_quantity(a.gradient, &cfg.field.gradient, Dimension::Gradient, "field.gradient", 500.0)?;
    let b0 = resolve_quantity(a.field, &cfg.field.b0, Dimension::Field, "field.b0", 1.0)?;
    let nu_z = resolve_quantity(a.nu_z, &cfg.trap.nu_z, Dimension::Frequency, "trap.nu_z", 600e3)?;
    let flag_active = match &a.active {
        Some(text) => Some(units::ion_list(text).map_err(|e| CliError::Validation(e.0))?),
        None => None,
    };
    let active = resolve(flag_active, cfg.chain.active.clone(), (1..=n).collect());
    if let Some(&bad) = active.iter().find(|&&k| k == 0 || k > n) {
        return Err(CliError::Validation(format!("active ion {bad} is not in 1..={n}")));
    }
    let mut active: Vec<usize> = active.iter().map(|k| k - 1).collect();
    active.sort_unstable();
    active.dedup();
    let passive = match resolve(a.passive, cfg.chain.passive, Polarization::Up) {
        Polarization::Up => Spin::Up,
        Polarization::Down => Spin::Down,
    };
    let mut chain = ChainConfig::new(
        ctx.species.clone(),
        n,
        FieldConfig::new(b0, gradient)?,
        Frequency::from_hz(nu_z),
        active.clone(),
        passive,
    )?;
    chain.nuclear_manifolds = match a.nuclear {
        NuclearChoice::Up => vec![Spin::Up],
        NuclearChoice::Down => vec![Spin::Down],
        NuclearChoice::Both => vec![Spin::Up, Spin::Down],
    };
    chain.validate()?;

    let full = full_spectrum(&chain)?;
    let reduced = active_spectrum(&chain)?;
    let reference = hz(larmor_frequencies(&ctx.species, b0, &chain.ratios)?.0);
    let mut r = Report::new(
        "spectrum",
        vec![
            col("list", ""),
            col("ion", ""),
            col("m_I", ""),
            col("frequency", "Hz"),
            col("offset", "MHz"),
            col("weight", ""),
            col("conditions", ""),
        ],
    );
    for line in &full {
        r.push(line_row("full", line, reference));
    }
    for line in &reduced {
        r.push(line_row("active", line, reference));
    }
    r.inputs = json!({
        "species": ctx.species.name,
        "n": n,
        "B0_T": b0,
        "gradient_T_per_m": gradient,
        "nu_z_kHz": nu_z / 1e3,
        "active": active.iter().map(|k| k + 1).collect::<Vec<_>>(),
        "passive": if passive == Spin::Up { "up" } else { "down" },
    });
    r.summary = json!({
        "offset_reference_Hz": reference,
        "addressing_separation_MHz": hz(addressing_separation(&chain)?) / 1e6,
        "full_lines": full.len(),
        "active_lines": reduced.len(),
        "conditions_encoding": "semicolon-separated bitmasks; bit k-1 set means ion k has m_S = +1/2",
    });
    Ok(r.into())
}

// ---------------------------------------------------------------- halbach

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ShapeChoice {
    Cylinder,
    Sphere,
}

#[derive(Debug, Args)]
pub struct HalbachArgs {
    #[arg(long, value_enum)]
    pub shape: Option<ShapeChoice>,
    /// Remanence B_r, e.g. 1.23T.
    #[arg(long, value_parser = units::field)]
    pub br: Option<f64>,
    /// Inner radius, e.g. 2.5cm.
    #[arg(long, value_parser = units::length)]
    pub ri: Option<f64>,
    /// Outer radius, e.g. 25cm.
    #[arg(long, value_parser = units::length)]
    pub ro: Option<f64>,
    /// Number of uniformly magnetised segments; default ideal.
    #[arg(long)]
    pub segments: Option<u32>,
    /// Length parameter z0 of a finite cylinder; default infinite.
    #[arg(long, value_parser = units::length)]
    pub z0: Option<f64>,
    /// Sweep over br, ri, ro or z0, e.g. z0=1cm:50cm:50.
    #[arg(long)]
    pub sweep: Option<String>,
}

fn halbach_dimension(p: &str) -> Option<Dimension> {
    match p {
        "br" => Some(Dimension::Field),
        "ri" | "ro" | "z0" => Some(Dimension::Length),
        _ => None,
    }
}

/// Central field of a Halbach cylinder or sphere.
pub fn halbach(ctx: &Context, a: &HalbachArgs) -> Run {
    let h = &ctx.config.halbach;
    let shape = match a.shape {
        Some(ShapeChoice::Cylinder) => Shape::Cylinder,
        Some(ShapeChoice::Sphere) => Shape::Sphere,
        None => h.shape.unwrap_or(Shape::Cylinder),
    };
    let br = resolve_quantity(a.br, &h.remanence, Dimension::Field, "halbach.remanence", 1.23)?;
    let ri = resolve_quantity(a.ri, &h.r_inner, Dimension::Length, "halbach.r_inner", 0.025)?;
    let ro = resolve_quantity(a.ro, &h.r_outer, Dimension::Length, "halbach.r_outer", 0.25)?;
    let segments = a.segments.or(h.segments);
    let z0 = match (a.z0, &h.z0) {
        (Some(v), _) => Some(v),
        (None, Some(q)) => Some(q.value(Dimension::Length, "halbach.z0")?),
        (None, None) => None,
    };

    let sweep = match &a.sweep {
        Some(text) => Some(Sweep::parse(text, halbach_dimension).map_err(|e| CliError::Validation(e.0))?),
        None => ctx.config.sweep(halbach_dimension)?,
    };
    let points: Vec<(f64, f64, f64, Option<f64>)> = match &sweep {
        None => vec![(br, ri, ro, z0)],
        Some(s) => s
            .values()
            .into_iter()
            .map(|v| match s.parameter.as_str() {
                "br" => (v, ri, ro, z0),
                "ri" => (br, v, ro, z0),
                "ro" => (br, ri, v, z0),
                _ => (br, ri, ro, Some(v)),
            })
            .collect(),
    };

    let mut r = Report::new(
        "halbach",
        vec![
            col("shape", ""),
            col("Br", "T"),
            col("ri", "cm"),
            col("ro", "cm"),
            col("segments", ""),
            col("z0", "cm"),
            col("segment_factor", ""),
            col("B_infinite", "T"),
            col("B", "T"),
        ],
    );
    for (br, ri, ro, z0) in points {
        let mut g = match shape {
            Shape::Cylinder => HalbachGeometry::cylinder(br, ri, ro)?,
            Shape::Sphere => HalbachGeometry::sphere(br, ri, ro)?,
        };
        if let Some(n) = segments {
            g = g.with_segments(n)?;
        }
        let infinite = halbach_field(&g)?;
        if let Some(z) = z0 {
            g = g.with_length(z)?;
        }
        let b = halbach_field(&g)?;
        r.push(vec![
            (if shape == Shape::Sphere { "sphere" } else { "cylinder" }).into(),
            br.into(),
            (ri * 100.0).into(),
            (ro * 100.0).into(),
            segments.into(),
            z0.map(|z| z * 100.0).into(),
            segment_factor(g.segments).into(),
            infinite.into(),
            b.into(),
        ]);
    }
    r.inputs = json!({
        "shape": if shape == Shape::Sphere { "sphere" } else { "cylinder" },
        "Br_T": br,
        "ri_cm": ri * 100.0,
        "ro_cm": ro * 100.0,
        "segments": segments,
        "z0_cm": z0.map(|z| z * 100.0),
        "sweep": sweep.as_ref().map(|s| &s.parameter),
    });
    Ok(r.into())
}

// ---------------------------------------------------------------- pseudo

#[derive(Debug, Args)]
pub struct PseudoArgs {
    /// RF drive frequency Ω_t/2π, e.g. 10MHz.
    #[arg(long, value_parser = units::frequency)]
    pub drive: Option<f64>,
    /// Mathieu parameter a.
    #[arg(long, value_parser = units::number, allow_negative_numbers = true)]
    pub a: Option<f64>,
    /// Mathieu parameter q.
    #[arg(long, value_parser = units::number, allow_negative_numbers = true)]
    pub q: Option<f64>,
    /// Axial magnetic field, e.g. 1T.
    #[arg(long = "B", value_parser = units::field)]
    pub field: Option<f64>,
    /// Sweep over q, a, B or drive, e.g. q=0.05:0.3:6.
    #[arg(long)]
    pub sweep: Option<String>,
}

fn pseudo_dimension(p: &str) -> Option<Dimension> {
    match p {
        "q" | "a" => Some(Dimension::Dimensionless),
        "B" => Some(Dimension::Field),
        "drive" => Some(Dimension::Frequency),
        _ => None,
    }
}

/// Radial secular frequency and its splitting in a magnetic field.
pub fn pseudo(ctx: &Context, a: &PseudoArgs) -> Run {
    let cfg = &ctx.config;
    let drive = resolve_quantity(a.drive, &cfg.trap.drive, Dimension::Frequency, "trap.drive", 10e6)?;
    let mathieu_a = resolve(a.a, cfg.trap.a, 0.0);
    let q = resolve(a.q, cfg.trap.q, 0.3);
    let b = resolve_quantity(a.field, &cfg.field.b0, Dimension::Field, "field.b0", 1.0)?;

    let sweep = match &a.sweep {
        Some(text) => Some(Sweep::parse(text, pseudo_dimension).map_err(|e| CliError::Validation(e.0))?),
        None => cfg.sweep(pseudo_dimension)?,
    };
    let points: Vec<(f64, f64, f64, f64)> = match &sweep {
        None => vec![(drive, mathieu_a, q, b)],
        Some(s) => s
            .values()
            .into_iter()
            .map(|v| match s.parameter.as_str() {
                "drive" => (v, mathieu_a, q, b),
                "a" => (drive, v, q, b),
                "q" => (drive, mathieu_a, v, b),
                _ => (drive, mathieu_a, q, v),
            })
            .collect(),
    };

    let mut r = Report::new(
        "pseudo",
        vec![
            col("drive", "MHz"),
            col("a", ""),
            col("q", ""),
            col("B", "T"),
            col("secular", "MHz"),
            col("floquet", "MHz"),
            col("secular_rel_dev", ""),
            col("cyclotron", "kHz"),
            col("mode_plus", "MHz"),
            col("mode_minus", "MHz"),
            col("confined", ""),
        ],
    );
    for (drive, ma, q, b) in points {
        let p = RfTrapParams::new(ctx.species.clone(), Frequency::from_hz(drive), ma, q)?;
        let wr = secular_frequency(&p)?;
        let wf = floquet_secular_frequency(&p)?;
        let wc = cyclotron_frequency(&ctx.species, b)?;
        let modes = shifted_modes(wr, wc);
        r.push(vec![
            (drive / 1e6).into(),
            ma.into(),
            q.into(),
            b.into(),
            (hz(wr) / 1e6).into(),
            (hz(wf) / 1e6).into(),
            (wr / wf - 1.0).into(),
            (hz(wc) / 1e3).into(),
            (hz(modes.plus) / 1e6).into(),
            (hz(modes.minus) / 1e6).into(),
            modes.confined.into(),
        ]);
    }
    r.inputs = json!({
        "species": ctx.species.name,
        "drive_MHz": drive / 1e6,
        "a": mathieu_a,
        "q": q,
        "B_T": b,
        "sweep": sweep.as_ref().map(|s| &s.parameter),
    });
    r.summary = json!({
        "secular": "(drive/2)*sqrt(a + q^2/2)",
        "floquet": "characteristic exponent of the Mathieu equation times drive/2",
    });
    Ok(r.into())
}

// ---------------------------------------------------------------- ratios-refit

#[derive(Debug, Args)]
pub struct RefitArgs {
    /// Field grid; defaults to B=1T:5T:9 (at least 5 points).
    #[arg(long)]
    pub sweep: Option<String>,
}

/// Refits the effective gyromagnetic ratios to the exact spectrum.
pub fn ratios_refit(ctx: &Context, a: &RefitArgs) -> Run {
    let fields = grid("B", None, &a.sweep, &ctx.config, only_field, || {
        Ok(Sweep::new("B", 1.0, 5.0, 9).expect("static sweep").values())
    })?;
    let report = refit_effective_ratios(&ctx.species, &fields)?;
    let mut r = Report::new(
        "ratios-refit",
        vec![
            col("B", "T"),
            col("gamma_S_matched", "GHz/T"),
            col("gamma_S_fit", "GHz/T"),
            col("gamma_S_published", "GHz/T"),
            col("gamma_I_matched", "GHz/T"),
            col("gamma_I_fit", "GHz/T"),
            col("gamma_I_published", "GHz/T"),
        ],
    );
    for p in &report.points {
        let fit = report.fit.at(p.field)?;
        let published = PUBLISHED_FIT.at(p.field).ok();
        r.push(vec![
            p.field.into(),
            (p.gamma_s / GHZ_PER_T).into(),
            (fit.gamma_s / GHZ_PER_T).into(),
            published.map(|e| e.gamma_s / GHZ_PER_T).into(),
            (p.gamma_i / GHZ_PER_T).into(),
            (fit.gamma_i / GHZ_PER_T).into(),
            published.map(|e| e.gamma_i / GHZ_PER_T).into(),
        ]);
    }
    let per = |c: [f64; 2]| [c[0] / GHZ_PER_T, c[1] / GHZ_PER_T];
    r.inputs = json!({ "species": ctx.species.name, "fields_T": fields });
    r.summary = json!({
        "model": "gamma(B) = c0 + c1*exp(-decay*B)",
        "electron_GHz_per_T": per(report.fit.electron),
        "nuclear_GHz_per_T": per(report.fit.nuclear),
        "decay_per_T": report.fit.decay,
        "max_residual_electron_GHz_per_T": report.max_residual_s / GHZ_PER_T,
        "max_residual_nuclear_GHz_per_T": report.max_residual_i / GHZ_PER_T,
        "electron_flip_max_rel_error": report.electron_flip_rel_error,
        "nuclear_flip_max_rel_error": report.nuclear_flip_rel_error,
    });
    Ok(r.into())
}
