//! Line-oriented `key = value` configs with a closed per-subcommand schema.
//! Every applied default is echoed into the output manifest, and the manifest
//! carries a hash of the fully resolved configuration: equal hashes mean
//! byte-identical result tables.

use anyhow::{anyhow, bail, Context, Result};
use sha2::{Digest, Sha256};

use rblab_core::entropy::{EntropyRunConfig, NumericalFlux};
use rblab_core::grid::{Boundary, Grid1D, InitialDatum, Profile};
use rblab_core::regularized::{RegularizedRunConfig, ViscosityPolicy};
use rblab_core::study::{GridPolicy, StudyConfig};
use rblab_core::{FluxModel, HelmholtzMethod};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Subcommand {
    Simulate,
    Entropy,
    RateStudy,
    Diagnose,
}

impl Subcommand {
    fn schema(self) -> &'static [&'static str] {
        match self {
            Subcommand::Simulate | Subcommand::Diagnose => &[
                "flux", "datum", "domain", "boundary", "cfl", "t_end", "snapshots", "cells",
                "ell", "visc", "helmholtz",
            ],
            Subcommand::Entropy => &[
                "flux", "datum", "domain", "boundary", "cfl", "t_end", "snapshots", "cells",
                "viscosity",
            ],
            Subcommand::RateStudy => &[
                "flux",
                "datum",
                "domain",
                "boundary",
                "cfl",
                "t_end",
                "snapshots",
                "ells",
                "ps",
                "grid_policy",
                "reference_refinement",
                "visc",
                "helmholtz",
            ],
        }
    }
}

/// One resolved key with its provenance.
#[derive(Clone, Debug)]
pub struct ResolvedEntry {
    pub key: String,
    pub value: String,
    pub is_default: bool,
}

/// Parsed `key = value` pairs in file order, with line numbers for messages.
#[derive(Clone, Debug, Default)]
pub struct RawConfig {
    entries: Vec<(String, String, String)>, // key, value, origin
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (idx, raw_line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = match raw_line.find('#') {
                Some(pos) => &raw_line[..pos],
                None => raw_line,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("line {line_no}: expected `key = value`, got `{line}`"))?;
            let (key, value) = (key.trim().to_string(), value.trim().to_string());
            if key.is_empty() || value.is_empty() {
                bail!("line {line_no}: empty key or value");
            }
            entries.push((key, value, format!("line {line_no}")));
        }
        Ok(RawConfig { entries })
    }

    pub fn apply_overrides(&mut self, overrides: &[String]) -> Result<()> {
        for (i, item) in overrides.iter().enumerate() {
            let (key, value) = item
                .split_once('=')
                .ok_or_else(|| anyhow!("override {}: expected key=value, got `{item}`", i + 1))?;
            self.entries.push((
                key.trim().to_string(),
                value.trim().to_string(),
                format!("override {}", i + 1),
            ));
        }
        Ok(())
    }

    fn check_schema(&self, sub: Subcommand) -> Result<()> {
        let schema = sub.schema();
        for (key, _, origin) in &self.entries {
            if !schema.contains(&key.as_str()) {
                bail!("{origin}: unknown key `{key}` for this subcommand (schema: {schema:?})");
            }
        }
        Ok(())
    }

    /// Last occurrence wins, as in ordinary override semantics.
    fn get(&self, key: &str) -> Option<(&str, &str)> {
        self.entries
            .iter()
            .rev()
            .find(|(k, _, _)| k == key)
            .map(|(_, v, origin)| (v.as_str(), origin.as_str()))
    }
}

fn parse_f64(value: &str, origin: &str, key: &str) -> Result<f64> {
    value
        .parse::<f64>()
        .with_context(|| format!("{origin}: `{key}` is not a number: `{value}`"))
}

fn parse_usize(value: &str, origin: &str, key: &str) -> Result<usize> {
    value
        .parse::<usize>()
        .with_context(|| format!("{origin}: `{key}` is not an integer: `{value}`"))
}

fn parse_flux(value: &str, origin: &str) -> Result<FluxModel> {
    if value == "burgers" {
        return Ok(FluxModel::burgers());
    }
    if let Some(a) = value.strip_prefix("logcosh:") {
        let a = parse_f64(a, origin, "flux")?;
        return FluxModel::log_cosh(a).map_err(|e| anyhow!("{origin}: {e}"));
    }
    bail!("{origin}: flux must be `burgers` or `logcosh:<a>`, got `{value}`")
}

fn parse_datum(value: &str, origin: &str) -> Result<InitialDatum> {
    let parts: Vec<&str> = value.split(':').collect();
    let profile = match parts.as_slice() {
        ["gaussian", a, s] => Profile::Gaussian {
            a: parse_f64(a, origin, "datum")?,
            sigma: parse_f64(s, origin, "datum")?,
        },
        ["sech2", a, s] => Profile::Sech2 {
            a: parse_f64(a, origin, "datum")?,
            sigma: parse_f64(s, origin, "datum")?,
        },
        ["packet", a, s, k] => Profile::Packet {
            a: parse_f64(a, origin, "datum")?,
            sigma: parse_f64(s, origin, "datum")?,
            k: parse_f64(k, origin, "datum")?,
        },
        _ => bail!(
            "{origin}: datum must be `gaussian:<A>:<sigma>`, `sech2:<A>:<sigma>` or \
             `packet:<A>:<sigma>:<k>`, got `{value}`"
        ),
    };
    InitialDatum::new(profile).map_err(|e| anyhow!("{origin}: {e}"))
}

fn parse_domain(value: &str, origin: &str) -> Result<(f64, f64)> {
    let (lo, hi) = value
        .split_once(':')
        .ok_or_else(|| anyhow!("{origin}: domain must be `<xmin>:<xmax>`, got `{value}`"))?;
    Ok((
        parse_f64(lo, origin, "domain")?,
        parse_f64(hi, origin, "domain")?,
    ))
}

fn parse_boundary(value: &str, origin: &str) -> Result<Boundary> {
    match value {
        "dirichlet" => Ok(Boundary::TruncatedDirichlet),
        "periodic" => Ok(Boundary::Periodic),
        _ => bail!("{origin}: boundary must be `dirichlet` or `periodic`, got `{value}`"),
    }
}

fn parse_helmholtz(value: &str, origin: &str) -> Result<HelmholtzMethod> {
    match value {
        "tridiagonal" => Ok(HelmholtzMethod::Tridiagonal),
        "green" => Ok(HelmholtzMethod::GreenRecursive),
        _ => bail!("{origin}: helmholtz must be `tridiagonal` or `green`, got `{value}`"),
    }
}

fn parse_visc(value: &str, origin: &str) -> Result<ViscosityPolicy> {
    if value == "none" {
        return Ok(ViscosityPolicy::None);
    }
    if let Some(eps) = value.strip_prefix("fixed:") {
        return Ok(ViscosityPolicy::Fixed(parse_f64(eps, origin, "visc")?));
    }
    if let Some(kappa) = value.strip_prefix("mesh:") {
        return Ok(ViscosityPolicy::MeshScaled(parse_f64(
            kappa, origin, "visc",
        )?));
    }
    bail!("{origin}: visc must be `none`, `fixed:<eps>` or `mesh:<kappa>`, got `{value}`")
}

fn parse_list_f64(value: &str, origin: &str, key: &str) -> Result<Vec<f64>> {
    value
        .split(',')
        .map(|s| parse_f64(s.trim(), origin, key))
        .collect()
}

/// A fully resolved configuration for one subcommand, plus the echo list the
/// manifest is built from.
#[derive(Debug)]
pub struct Resolved {
    pub entries: Vec<ResolvedEntry>,
    pub subcommand: Subcommand,
}

impl Resolved {
    pub fn hash(&self) -> String {
        let mut hasher = Sha256::new();
        for e in &self.entries {
            hasher.update(e.key.as_bytes());
            hasher.update(b"=");
            hasher.update(e.value.as_bytes());
            hasher.update(b"\n");
        }
        format!("{:x}", hasher.finalize())
    }

    pub fn manifest(&self, version: &str) -> String {
        let sub = match self.subcommand {
            Subcommand::Simulate => "simulate",
            Subcommand::Entropy => "entropy",
            Subcommand::RateStudy => "rate-study",
            Subcommand::Diagnose => "diagnose",
        };
        let mut out = String::new();
        out.push_str("# rblab run manifest\n");
        out.push_str(&format!("version = {version}\n"));
        out.push_str(&format!("subcommand = {sub}\n"));
        out.push_str(&format!("config_hash = {}\n\n", self.hash()));
        for e in &self.entries {
            if e.is_default {
                out.push_str(&format!("{} = {}  # default\n", e.key, e.value));
            } else {
                out.push_str(&format!("{} = {}\n", e.key, e.value));
            }
        }
        out
    }
}

/// Tracks key resolution so defaults are distinguishable in the manifest.
struct Resolver<'a> {
    raw: &'a RawConfig,
    entries: Vec<ResolvedEntry>,
}

impl<'a> Resolver<'a> {
    fn new(raw: &'a RawConfig) -> Self {
        Resolver {
            raw,
            entries: Vec::new(),
        }
    }

    fn take(&mut self, key: &str, default: &str) -> (String, String) {
        match self.raw.get(key) {
            Some((v, origin)) => {
                self.entries.push(ResolvedEntry {
                    key: key.to_string(),
                    value: v.to_string(),
                    is_default: false,
                });
                (v.to_string(), origin.to_string())
            }
            None => {
                self.entries.push(ResolvedEntry {
                    key: key.to_string(),
                    value: default.to_string(),
                    is_default: true,
                });
                (default.to_string(), "default".to_string())
            }
        }
    }
}

fn default_snapshots(t_end: f64) -> String {
    (1..=8)
        .map(|k| format!("{}", t_end * k as f64 / 8.0))
        .collect::<Vec<_>>()
        .join(",")
}

struct CommonParts {
    flux: FluxModel,
    datum: InitialDatum,
    x_min: f64,
    x_max: f64,
    boundary: Boundary,
    cfl: f64,
    t_end: f64,
    snapshots: Vec<f64>,
}

fn resolve_common(r: &mut Resolver) -> Result<CommonParts> {
    let (v, o) = r.take("flux", "burgers");
    let flux = parse_flux(&v, &o)?;
    let (v, o) = r.take("datum", "gaussian:1:1");
    let datum = parse_datum(&v, &o)?;
    let (v, o) = r.take("domain", "-20:20");
    let (x_min, x_max) = parse_domain(&v, &o)?;
    let (v, o) = r.take("boundary", "dirichlet");
    let boundary = parse_boundary(&v, &o)?;
    let (v, o) = r.take("cfl", "0.45");
    let cfl = parse_f64(&v, &o, "cfl")?;
    let (v, o) = r.take("t_end", "2");
    let t_end = parse_f64(&v, &o, "t_end")?;
    let (v, o) = r.take("snapshots", &default_snapshots(t_end));
    let snapshots = parse_list_f64(&v, &o, "snapshots")?;
    Ok(CommonParts {
        flux,
        datum,
        x_min,
        x_max,
        boundary,
        cfl,
        t_end,
        snapshots,
    })
}

pub fn build_simulate(
    raw: &RawConfig,
    sub: Subcommand,
) -> Result<(RegularizedRunConfig, Resolved)> {
    raw.check_schema(sub)?;
    let mut r = Resolver::new(raw);
    let common = resolve_common(&mut r)?;

    let (v, o) = r.take("cells", "1600");
    let cells = parse_usize(&v, &o, "cells")?;
    let (v, ell_origin) = r.take("ell", "0.1");
    let ell = parse_f64(&v, &ell_origin, "ell")?;
    let (v, o) = r.take("visc", "mesh:1");
    let viscosity = parse_visc(&v, &o)?;
    let (v, o) = r.take("helmholtz", "tridiagonal");
    let helmholtz = parse_helmholtz(&v, &o)?;

    let grid = Grid1D::new(common.x_min, common.x_max, cells, common.boundary)
        .map_err(|e| anyhow!("config: {e}"))?;
    if ell < 4.0 * grid.dx() {
        bail!(
            "{ell_origin}: ell = {ell} under-resolves the grid (need ell >= 4*dx = {})",
            4.0 * grid.dx()
        );
    }
    let cfg = RegularizedRunConfig {
        flux: common.flux,
        grid,
        datum: common.datum,
        ell,
        viscosity,
        t_end: common.t_end,
        cfl: common.cfl,
        snapshot_times: common.snapshots,
        helmholtz,
    };
    cfg.validate().map_err(|e| anyhow!("config: {e}"))?;
    Ok((
        cfg,
        Resolved {
            entries: r.entries,
            subcommand: sub,
        },
    ))
}

pub fn build_entropy(raw: &RawConfig) -> Result<(EntropyRunConfig, Resolved)> {
    raw.check_schema(Subcommand::Entropy)?;
    let mut r = Resolver::new(raw);
    let common = resolve_common(&mut r)?;

    let (v, o) = r.take("cells", "1600");
    let cells = parse_usize(&v, &o, "cells")?;
    let grid = Grid1D::new(common.x_min, common.x_max, cells, common.boundary)
        .map_err(|e| anyhow!("config: {e}"))?;
    let (v, o) = r.take("viscosity", "0");
    let viscosity = if v == "auto" {
        grid.dx()
    } else {
        parse_f64(&v, &o, "viscosity")?
    };

    let cfg = EntropyRunConfig {
        flux: common.flux,
        grid,
        datum: common.datum,
        t_end: common.t_end,
        cfl: common.cfl,
        viscosity,
        snapshot_times: common.snapshots,
        numerical_flux: NumericalFlux::Godunov,
    };
    cfg.validate().map_err(|e| anyhow!("config: {e}"))?;
    Ok((
        cfg,
        Resolved {
            entries: r.entries,
            subcommand: Subcommand::Entropy,
        },
    ))
}

pub fn build_study(raw: &RawConfig) -> Result<(StudyConfig, Resolved)> {
    raw.check_schema(Subcommand::RateStudy)?;
    let mut r = Resolver::new(raw);
    let common = resolve_common(&mut r)?;
    if common.boundary != Boundary::TruncatedDirichlet {
        bail!("config: rate studies run on truncated dirichlet domains");
    }

    let (v, o) = r.take("ells", "0.2,0.1,0.05,0.025");
    let ell_list = parse_list_f64(&v, &o, "ells")?;
    let (v, o) = r.take("ps", "1,2,4");
    let p_list: Vec<u32> = v
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<u32>()
                .with_context(|| format!("{o}: `ps` entries must be integers >= 1, got `{s}`"))
        })
        .collect::<Result<_>>()?;
    let (v, o) = r.take("grid_policy", "scaled:auto");
    let grid_policy = match v.as_str() {
        "scaled:auto" => GridPolicy::ScaledAuto,
        other => {
            if let Some(n) = other.strip_prefix("scaled:") {
                GridPolicy::Scaled {
                    cells_at_largest: parse_usize(n, &o, "grid_policy")?,
                }
            } else if let Some(n) = other.strip_prefix("fixed:") {
                GridPolicy::Fixed(parse_usize(n, &o, "grid_policy")?)
            } else {
                bail!(
                    "{o}: grid_policy must be `scaled:auto`, `scaled:<n0>` or `fixed:<n>`, \
                     got `{other}`"
                );
            }
        }
    };
    let (v, o) = r.take("reference_refinement", "4");
    let reference_refinement = parse_usize(&v, &o, "reference_refinement")?;
    if reference_refinement < 4 {
        bail!("{o}: reference_refinement must be >= 4, got {reference_refinement}");
    }
    let (v, o) = r.take("visc", "mesh:1");
    let viscosity = parse_visc(&v, &o)?;
    let (v, o) = r.take("helmholtz", "tridiagonal");
    let helmholtz = parse_helmholtz(&v, &o)?;

    let cfg = StudyConfig {
        flux: common.flux,
        datum: common.datum,
        x_min: common.x_min,
        x_max: common.x_max,
        t_end: common.t_end,
        cfl: common.cfl,
        ell_list,
        p_list,
        grid_policy,
        reference_refinement,
        snapshot_times: common.snapshots,
        viscosity,
        helmholtz,
    };
    cfg.validate().map_err(|e| anyhow!("config: {e}"))?;
    Ok((
        cfg,
        Resolved {
            entries: r.entries,
            subcommand: Subcommand::RateStudy,
        },
    ))
}
