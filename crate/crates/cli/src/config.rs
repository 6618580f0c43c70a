//! Run configuration: one JSON document, optionally patched by dotted-path
//! overrides such as `--potential.kappa=0.5`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use stark_core::classical::Sign;
use stark_core::kernel::FftCheckOptions;
use stark_core::oscillatory::XiProfile;
use stark_core::potentials::PotentialSpec;
use stark_core::transport::TransportConfig;
use stark_core::verify::VerifySettings;

use crate::CliError;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub dimension: usize,
    pub potential: PotentialSpec,
    pub seed: u64,
    /// Worker threads; 0 uses the machine's parallelism.
    pub threads: usize,
    pub output_dir: PathBuf,
    pub orbit: OrbitSection,
    pub momenta: MomentaSection,
    pub eikonal: EikonalSection,
    pub transport: TransportSection,
    pub born: BornSection,
    pub kernel: KernelSection,
    pub airy: AirySection,
    pub verify: VerifySettings,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            dimension: 3,
            potential: PotentialSpec::coulomb(1.0),
            seed: 0,
            threads: 0,
            output_dir: PathBuf::from("out"),
            orbit: OrbitSection::default(),
            momenta: MomentaSection::default(),
            eikonal: EikonalSection::default(),
            transport: TransportSection::default(),
            born: BornSection::default(),
            kernel: KernelSection::default(),
            airy: AirySection::default(),
            verify: VerifySettings::default(),
        }
    }
}

/// Initial phase point; short transverse vectors are padded with zeros.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialPoint {
    pub x: f64,
    #[serde(default)]
    pub y: Vec<f64>,
    pub eta: f64,
    #[serde(default)]
    pub zeta: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OrbitSection {
    pub initial: InitialPoint,
    pub t_final: f64,
    pub tol: f64,
    /// Uniformly spaced output times over [0, t_final].
    pub samples: usize,
}

impl Default for OrbitSection {
    fn default() -> Self {
        OrbitSection {
            initial: InitialPoint {
                x: 10.0,
                y: vec![1.0],
                eta: 1.0,
                zeta: vec![0.3],
            },
            t_final: 1000.0,
            tol: 1e-10,
            samples: 201,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MomentaSection {
    pub initial: InitialPoint,
    pub directions: Vec<Sign>,
    pub tol: f64,
    pub t_first: f64,
    pub doublings: usize,
}

impl Default for MomentaSection {
    fn default() -> Self {
        MomentaSection {
            initial: OrbitSection::default().initial,
            directions: vec![Sign::Plus, Sign::Minus],
            tol: 1e-12,
            t_first: 100.0,
            doublings: 10,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EikonalSection {
    pub x_min: f64,
    pub x_max: f64,
    /// Log-spaced x values.
    pub nx: usize,
    /// y₁ runs over [−max_ratio·x, max_ratio·x].
    pub max_ratio: f64,
    pub ny: usize,
}

impl Default for EikonalSection {
    fn default() -> Self {
        EikonalSection {
            x_min: 10.0,
            x_max: 1e6,
            nx: 25,
            max_ratio: 0.1,
            ny: 11,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransportSection {
    pub symbols: TransportConfig,
    pub k: usize,
    pub sign: Sign,
    /// Ray y = slope·x·e₁, η = √(2x).
    pub slope: f64,
    pub zeta: Vec<f64>,
    pub xs: Vec<f64>,
    /// Step of the transport-equation residual.
    pub residual_step: f64,
}

impl Default for TransportSection {
    fn default() -> Self {
        TransportSection {
            symbols: TransportConfig::default(),
            k: 1,
            sign: Sign::Plus,
            slope: 0.02,
            zeta: vec![0.1],
            xs: (0..9).map(|j| 100.0 * 10f64.powf(j as f64 / 4.0)).collect(),
            residual_step: 0.5,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BornSection {
    pub zeta: Vec<f64>,
    pub lambda: f64,
    /// Lower integration limit R; `null` picks max(2, ζ² − 2λ + 2).
    pub cutoff: Option<f64>,
    pub tol: f64,
    /// |y| log-spaced over [rho_min, rho_max] along e₁.
    pub rho_min: f64,
    pub rho_max: f64,
    pub n: usize,
}

impl Default for BornSection {
    fn default() -> Self {
        BornSection {
            zeta: Vec::new(),
            lambda: 0.0,
            cutoff: None,
            tol: 1e-10,
            rho_min: 1.0,
            rho_max: 1e4,
            n: 17,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelSection {
    pub n: usize,
    pub spacing: f64,
    pub zeta: Vec<f64>,
    pub lambda: f64,
    pub cutoff: Option<f64>,
    pub tol: f64,
    pub fft: FftCheckOptions,
}

impl Default for KernelSection {
    fn default() -> Self {
        KernelSection {
            n: 2048,
            spacing: 100.0,
            zeta: Vec::new(),
            lambda: 0.0,
            cutoff: None,
            tol: 1e-10,
            fft: FftCheckOptions::default(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AirySection {
    /// Amplitude ξ; `null` uses a bump on [−0.15, 9.15] along ζ₁.
    pub profile: Option<XiProfile>,
    pub ratio: f64,
    pub lambda: f64,
    pub xs: Vec<f64>,
    pub rel_tol: f64,
}

impl Default for AirySection {
    fn default() -> Self {
        AirySection {
            profile: None,
            ratio: 0.05,
            lambda: 0.0,
            xs: vec![50.0, 100.0, 200.0, 400.0, 800.0],
            rel_tol: 1e-6,
        }
    }
}

/// Pads `v` with zeros to length `m`; longer vectors are a config error.
pub fn padded(name: &str, v: &[f64], m: usize) -> Result<Vec<f64>, CliError> {
    if v.len() > m {
        return Err(CliError::Config(format!(
            "{name} has {} components, dimension allows {m}",
            v.len()
        )));
    }
    let mut out = v.to_vec();
    out.resize(m, 0.0);
    Ok(out)
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        if self.dimension < 2 {
            return Err(CliError::Config(format!(
                "dimension {} < 2",
                self.dimension
            )));
        }
        self.potential.validate(self.dimension)?;
        self.transport.symbols.validate()?;
        self.verify.validate()?;
        let positive = [
            ("orbit.tol", self.orbit.tol),
            ("momenta.tol", self.momenta.tol),
            ("born.tol", self.born.tol),
            ("kernel.tol", self.kernel.tol),
            ("airy.rel_tol", self.airy.rel_tol),
            ("transport.residual_step", self.transport.residual_step),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(CliError::Config(format!("{name} = {v} must be positive")));
            }
        }
        Ok(())
    }
}

/// Sets `path` (dot-separated; numeric segments index arrays) to `value`,
/// creating intermediate objects as needed.
fn set_path(root: &mut Value, path: &str, value: Value) -> Result<(), CliError> {
    let mut cur = root;
    let segments: Vec<&str> = path.split('.').collect();
    if segments.iter().any(|s| s.is_empty()) {
        return Err(CliError::Config(format!(
            "malformed override path '{path}'"
        )));
    }
    for seg in &segments {
        if cur.is_null() {
            *cur = Value::Object(Default::default());
        }
        cur = match cur {
            Value::Object(map) => map.entry(seg.to_string()).or_insert(Value::Null),
            Value::Array(items) => {
                let i: usize = seg.parse().map_err(|_| {
                    CliError::Config(format!("'{seg}' in '{path}' is not an index"))
                })?;
                items.get_mut(i).ok_or_else(|| {
                    CliError::Config(format!("index {i} out of range in '{path}'"))
                })?
            }
            _ => return Err(CliError::Config(format!("'{path}' descends into a scalar"))),
        };
    }
    *cur = value;
    Ok(())
}

/// Splits `--a.b=v` / `--a.b v` pairs. `--config` is accepted here too,
/// since it may follow the first override.
pub fn parse_overrides(
    args: &[String],
) -> Result<(Option<PathBuf>, Vec<(String, String)>), CliError> {
    let mut config = None;
    let mut pairs = Vec::new();
    let mut it = args.iter();
    while let Some(arg) = it.next() {
        let Some(body) = arg.strip_prefix("--") else {
            return Err(CliError::Config(format!("unexpected argument '{arg}'")));
        };
        let (key, value) = match body.split_once('=') {
            Some((k, v)) => (k.to_string(), v.to_string()),
            None => {
                let v = it
                    .next()
                    .ok_or_else(|| CliError::Config(format!("--{body} needs a value")))?;
                (body.to_string(), v.clone())
            }
        };
        if key == "config" {
            config = Some(PathBuf::from(value));
        } else {
            pairs.push((key, value));
        }
    }
    Ok((config, pairs))
}

/// Reads the config (or the defaults), applies overrides and validates.
pub fn load(path: Option<&Path>, overrides: &[(String, String)]) -> Result<RunConfig, CliError> {
    let mut doc = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
        }
        None => Value::Object(Default::default()),
    };
    for (key, raw) in overrides {
        // Values are JSON where they parse as JSON, plain strings otherwise.
        let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.clone()));
        set_path(&mut doc, key, value)?;
    }
    let cfg: RunConfig =
        serde_json::from_value(doc).map_err(|e| CliError::Config(format!("config: {e}")))?;
    cfg.validate()?;
    Ok(cfg)
}
