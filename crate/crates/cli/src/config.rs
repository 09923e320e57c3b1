//! Flat `key = value` run configuration.
//!
//! Blank lines and lines starting with `#` are ignored. Every key may appear
//! once; unknown keys and keys that the chosen profile does not use are errors.
//!
//! | key            | meaning                                              | default |
//! |----------------|------------------------------------------------------|---------|
//! | n_points       | grid size, power of two >= 8                         | 128     |
//! | kappa          | density over viscosity, >= 0                         | 1       |
//! | epsilon        | viscosity, >= 0                                      | 0       |
//! | dt             | fixed time step (exclusive with cfl)                 |         |
//! | cfl            | `dt = cfl * dx / kappa`                              | 0.25    |
//! | t_final        | final time, required                                 |         |
//! | profile        | flat, cosine, sine, kink, sawtooth, multimode, random, samples |  |
//! | level          | flat: constant value                                 | 0       |
//! | amplitude      | cosine, sine, kink, sawtooth, random; spectrum       | 1       |
//! | mode           | cosine, sine: wavenumber                             | 1       |
//! | peak           | sawtooth: peak location in (-pi, pi)                 | 1       |
//! | terms          | multimode: `k:a:phase` entries separated by `;`      |         |
//! | modes          | random: number of Fourier modes                      | 8       |
//! | seed           | random: generator seed (overridden by --seed)        | 0       |
//! | samples_file   | samples: whitespace or comma separated values, path relative to the config |  |
//! | output_every   | snapshot cadence in steps                            | 1       |
//! | mollifier      | none, tied (width sqrt(epsilon)) or a width          | none    |
//! | scheme         | euler or heun                                        | euler   |
//! | dealias        | true or false                                        | false   |
//! | sigma_every    | singular value monitor cadence in steps              | off     |
//! | rate_mode      | Fourier mode used for the fitted_rate column         | dominant initial mode |
//! | eps_list       | converge: comma separated, strictly decreasing       |         |
//! | spectrum_modes | spectrum: comma separated wavenumbers                | 1,2,3,4,5 |

use std::collections::BTreeMap;
use std::path::Path;

use muskat_core::profiles::InitialData;
use muskat_core::stepper::{DtRule, Mollifier, Scheme, SimConfig};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("key `{key}`: {message}")]
    Field { key: String, message: String },
}

fn field(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Field {
        key: key.to_string(),
        message: message.into(),
    }
}

const KNOWN_KEYS: &[&str] = &[
    "n_points",
    "kappa",
    "epsilon",
    "dt",
    "cfl",
    "t_final",
    "profile",
    "level",
    "amplitude",
    "mode",
    "peak",
    "terms",
    "modes",
    "seed",
    "samples_file",
    "output_every",
    "mollifier",
    "scheme",
    "dealias",
    "sigma_every",
    "rate_mode",
    "eps_list",
    "spectrum_modes",
];

const PROFILE_KEYS: &[&str] = &[
    "level",
    "amplitude",
    "mode",
    "peak",
    "terms",
    "modes",
    "seed",
    "samples_file",
];

#[derive(Debug, Clone)]
pub struct RunConfig {
    /// `None` when the config names no profile (allowed for `spectrum`).
    pub sim: Option<SimConfig>,
    pub base: SimConfig,
    pub seed: u64,
    pub amplitude: f64,
    pub rate_mode: Option<usize>,
    pub eps_list: Option<Vec<f64>>,
    pub spectrum_modes: Vec<u32>,
    /// Raw key-value pairs as read, for the manifest.
    pub entries: BTreeMap<String, String>,
}

pub fn parse_entries(text: &str) -> Result<BTreeMap<String, String>, ConfigError> {
    let mut entries = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(ConfigError::Syntax {
                line: i + 1,
                message: format!("expected `key = value`, got `{line}`"),
            });
        };
        let (k, v) = (k.trim(), v.trim());
        if !KNOWN_KEYS.contains(&k) {
            return Err(ConfigError::Syntax {
                line: i + 1,
                message: format!("unknown key `{k}`"),
            });
        }
        if entries.insert(k.to_string(), v.to_string()).is_some() {
            return Err(ConfigError::Syntax {
                line: i + 1,
                message: format!("duplicate key `{k}`"),
            });
        }
    }
    Ok(entries)
}

struct Reader<'a> {
    entries: &'a BTreeMap<String, String>,
}

impl Reader<'_> {
    fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    fn parse<T: std::str::FromStr>(&self, key: &str, what: &str) -> Result<Option<T>, ConfigError> {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => v
                .parse::<T>()
                .map(Some)
                .map_err(|_| field(key, format!("expected {what}, got `{v}`"))),
        }
    }

    fn f64(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        let v: Option<f64> = self.parse(key, "a number")?;
        match v {
            Some(x) if !x.is_finite() => Err(field(key, "must be finite")),
            other => Ok(other),
        }
    }

    fn list_f64(&self, key: &str) -> Result<Option<Vec<f64>>, ConfigError> {
        self.raw(key).map(|v| parse_f64_list(key, v)).transpose()
    }
}

pub fn parse_f64_list(key: &str, v: &str) -> Result<Vec<f64>, ConfigError> {
    v.split(',')
        .map(|s| {
            let s = s.trim();
            s.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| field(key, format!("expected a number, got `{s}`")))
        })
        .collect()
}

fn parse_terms(v: &str) -> Result<Vec<(u32, f64, f64)>, ConfigError> {
    v.split(';')
        .filter(|s| !s.trim().is_empty())
        .map(|t| {
            let parts: Vec<&str> = t.split(':').map(str::trim).collect();
            let bad = || field("terms", format!("expected `k:a:phase`, got `{}`", t.trim()));
            if parts.len() != 3 {
                return Err(bad());
            }
            let k = parts[0].parse::<u32>().map_err(|_| bad())?;
            let a = parts[1].parse::<f64>().map_err(|_| bad())?;
            let p = parts[2].parse::<f64>().map_err(|_| bad())?;
            Ok((k, a, p))
        })
        .collect()
}

fn read_samples(path: &Path) -> Result<Vec<f64>, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        field("samples_file", format!("cannot read {}: {e}", path.display()))
    })?;
    text.split(|c: char| c.is_whitespace() || c == ',')
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| field("samples_file", format!("bad value `{s}`")))
        })
        .collect()
}

/// Reads and validates a config file. `seed_override` replaces the `seed` key.
pub fn load(path: &Path, seed_override: Option<u64>) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let base_dir = path.parent().unwrap_or_else(|| Path::new("."));
    parse(&text, base_dir, seed_override)
}

pub fn parse(text: &str, base_dir: &Path, seed_override: Option<u64>) -> Result<RunConfig, ConfigError> {
    let entries = parse_entries(text)?;
    let r = Reader { entries: &entries };

    let n_points: usize = r.parse("n_points", "a positive integer")?.unwrap_or(128);
    let kappa = r.f64("kappa")?.unwrap_or(1.0);
    let epsilon = r.f64("epsilon")?.unwrap_or(0.0);
    let dt_rule = match (r.f64("dt")?, r.f64("cfl")?) {
        (Some(_), Some(_)) => return Err(field("dt", "give either dt or cfl, not both")),
        (Some(dt), None) => DtRule::Fixed(dt),
        (None, Some(c)) => DtRule::Cfl(c),
        (None, None) => DtRule::default(),
    };
    let t_final = r.f64("t_final")?.ok_or_else(|| field("t_final", "required"))?;
    let output_every: usize = r.parse("output_every", "a positive integer")?.unwrap_or(1);
    let mollifier = match r.raw("mollifier") {
        None | Some("none") => Mollifier::None,
        Some("tied") => Mollifier::TiedToEpsilon,
        Some(w) => Mollifier::Width(
            w.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite() && *x >= 0.0)
                .ok_or_else(|| field("mollifier", format!("expected none, tied or a width >= 0, got `{w}`")))?,
        ),
    };
    let scheme = match r.raw("scheme") {
        None | Some("euler") => Scheme::Euler,
        Some("heun") => Scheme::Heun,
        Some(s) => return Err(field("scheme", format!("expected euler or heun, got `{s}`"))),
    };
    let dealias: bool = r.parse("dealias", "true or false")?.unwrap_or(false);
    let sigma_every: Option<usize> = r.parse("sigma_every", "a positive integer")?;
    let rate_mode: Option<usize> = r.parse("rate_mode", "a positive integer")?;
    let seed = match seed_override {
        Some(s) => s,
        None => r.parse("seed", "an unsigned integer")?.unwrap_or(0),
    };
    let amplitude = r.f64("amplitude")?.unwrap_or(1.0);
    let eps_list = r.list_f64("eps_list")?;
    let spectrum_modes = match r.raw("spectrum_modes") {
        None => vec![1, 2, 3, 4, 5],
        Some(v) => v
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<u32>()
                    .ok()
                    .filter(|k| *k > 0)
                    .ok_or_else(|| field("spectrum_modes", format!("expected a positive integer, got `{}`", s.trim())))
            })
            .collect::<Result<_, _>>()?,
    };

    let profile = r.raw("profile");
    let used: &[&str] = match profile {
        None => &["amplitude"],
        Some("flat") => &["level"],
        Some("cosine") | Some("sine") => &["amplitude", "mode"],
        Some("kink") => &["amplitude"],
        Some("sawtooth") => &["amplitude", "peak"],
        Some("multimode") => &["terms"],
        Some("random") => &["amplitude", "modes", "seed"],
        Some("samples") => &["samples_file"],
        Some(p) => return Err(field("profile", format!("unknown profile `{p}`"))),
    };
    for key in PROFILE_KEYS {
        if entries.contains_key(*key) && !used.contains(key) {
            return Err(field(
                key,
                format!("not used by profile `{}`", profile.unwrap_or("(none)")),
            ));
        }
    }
    let mode: u32 = r.parse("mode", "a non-negative integer")?.unwrap_or(1);
    let initial = match profile {
        None => None,
        Some("flat") => Some(InitialData::Flat {
            level: r.f64("level")?.unwrap_or(0.0),
        }),
        Some("cosine") => Some(InitialData::Cosine { amplitude, mode }),
        Some("sine") => Some(InitialData::Sine { amplitude, mode }),
        Some("kink") => Some(InitialData::Kink { amplitude }),
        Some("sawtooth") => Some(InitialData::Sawtooth {
            amplitude,
            peak: r.f64("peak")?.unwrap_or(1.0),
        }),
        Some("multimode") => Some(InitialData::Multimode {
            terms: parse_terms(r.raw("terms").ok_or_else(|| field("terms", "required by multimode"))?)?,
        }),
        Some("random") => Some(InitialData::Random {
            seed,
            modes: r.parse("modes", "a positive integer")?.unwrap_or(8),
            amplitude,
        }),
        Some("samples") => {
            let rel = r.raw("samples_file").ok_or_else(|| field("samples_file", "required by samples"))?;
            Some(InitialData::Samples(read_samples(&base_dir.join(rel))?))
        }
        Some(_) => unreachable!(),
    };

    let base = SimConfig {
        n_points,
        kappa,
        epsilon,
        dt_rule,
        t_final,
        initial: InitialData::Flat { level: 0.0 },
        output_every,
        mollifier,
        scheme,
        dealias,
        sigma_every,
    };
    base.validate().map_err(|e| field("config", e.to_string()))?;
    let sim = match initial {
        Some(initial) => {
            let sim = SimConfig {
                initial,
                ..base.clone()
            };
            // catches profile parameter errors such as a bad peak or sample count
            sim.initial_state().map_err(|e| field("profile", e.to_string()))?;
            Some(sim)
        }
        None => None,
    };
    Ok(RunConfig {
        sim,
        base,
        seed,
        amplitude,
        rate_mode,
        eps_list,
        spectrum_modes,
        entries,
    })
}
