//! Run configuration files and output bundles.
//!
//! A bundle directory holds `profile.csv`, `normalized.csv`, `fits.json`,
//! `metadata.json` and `batches.bin`. Data files start with a comment line
//! carrying the seed and the SHA-256 of the canonical configuration; the JSON
//! files carry the same two values as fields.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::circuit::GateKind;
use crate::error::{Error, Result};
use crate::experiment::{normalize_profile, BatchStats, FitReport, RunConfig, SpreadProfile, Windows};

/// Keys accepted in a configuration file. Every key is optional; command-line
/// flags override file values.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct ConfigFile {
    pub length: Option<usize>,
    pub depth: Option<usize>,
    pub samples: Option<u64>,
    pub seed: Option<u64>,
    pub magic_sites: Option<Vec<usize>>,
    pub circuit: Option<String>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    pub gamma_window: Option<(usize, usize)>,
    pub residual_window: Option<(usize, usize)>,
    pub alpha_window: Option<(usize, usize)>,
    pub beta_window: Option<(usize, usize)>,
    pub interior_margin: Option<usize>,
    pub bootstrap_resamples: Option<usize>,
    pub max_work: Option<f64>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Fields set in `over` replace those in `self`.
    pub fn merge(self, over: ConfigFile) -> ConfigFile {
        macro_rules! pick {
            ($($f:ident),*) => { ConfigFile { $($f: over.$f.or(self.$f)),* } };
        }
        pick!(
            length, depth, samples, seed, magic_sites, circuit, out, threads, gamma_window, residual_window,
            alpha_window, beta_window, interior_margin, bootstrap_resamples, max_work
        )
    }

    pub fn to_run_config(&self) -> Result<RunConfig> {
        let need = |name: &str| Error::Config(format!("missing required key {name:?}"));
        let kind: GateKind = self.circuit.as_deref().unwrap_or("full-clifford").parse()?;
        let mut cfg = RunConfig::new(
            self.length.ok_or_else(|| need("length"))?,
            self.depth.ok_or_else(|| need("depth"))?,
            self.samples.ok_or_else(|| need("samples"))?,
            self.seed.unwrap_or(0),
            self.magic_sites.clone().ok_or_else(|| need("magic-sites"))?,
            kind,
        );
        cfg.windows = Windows {
            gamma: self.gamma_window,
            residual: self.residual_window,
            alpha: self.alpha_window,
            beta: self.beta_window,
        };
        if let Some(m) = self.interior_margin {
            cfg.interior_margin = m;
        }
        if let Some(b) = self.bootstrap_resamples {
            cfg.bootstrap_resamples = b;
        }
        if let Some(w) = self.max_work {
            cfg.max_work = w;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Parses `"4,12"` into an inclusive window.
pub fn parse_window(s: &str) -> Result<(usize, usize)> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let num = |p: &str| p.parse::<usize>().map_err(|_| Error::Config(format!("bad window {s:?}")));
    match parts.as_slice() {
        [a, b] => Ok((num(a)?, num(b)?)),
        _ => Err(Error::Config(format!("window must be \"lo,hi\", got {s:?}"))),
    }
}

/// SHA-256 of the canonical JSON encoding of the configuration.
pub fn config_hash(config: &RunConfig) -> String {
    let json = serde_json::to_string(config).expect("config serializes");
    let digest = Sha256::digest(json.as_bytes());
    digest.iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

fn header(config: &RunConfig) -> String {
    format!("# seed={}, config_sha256={}\n", config.seed, config_hash(config))
}

/// Float with 17 significant digits.
fn f17(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn profile_csv(profile: &SpreadProfile) -> String {
    let s = &profile.stats;
    let mut out = header(&profile.config);
    out.push_str("t,site,mean_sre,sem,n_samples\n");
    for t in 0..=s.depth {
        for i in 0..s.n_sites {
            let _ = writeln!(out, "{t},{i},{},{},{}", f17(s.mean[t][i]), f17(s.sem[t][i]), s.count);
        }
    }
    out
}

pub fn normalized_csv(profile: &SpreadProfile) -> String {
    let norm = normalize_profile(&profile.stats);
    let mut out = header(&profile.config);
    out.push_str("t,site,a,included_flag\n");
    for (t, row) in norm.a.iter().enumerate() {
        for (i, a) in row.iter().enumerate() {
            let _ = writeln!(out, "{t},{i},{},{}", f17(*a), u8::from(norm.included[t]));
        }
    }
    out
}

#[derive(Serialize)]
struct FitsFile<'a> {
    seed: u64,
    config_sha256: String,
    report: &'a FitReport,
}

pub fn fits_json(config: &RunConfig, report: &FitReport) -> String {
    let f = FitsFile { seed: config.seed, config_sha256: config_hash(config), report };
    serde_json::to_string_pretty(&f).expect("report serializes") + "\n"
}

/// Run metadata; only `config` is read back by `analyze`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Metadata {
    pub seed: u64,
    pub config_sha256: String,
    pub config: RunConfig,
    pub code_version: String,
    pub threads: usize,
    pub wall_time_seconds: f64,
}

const BATCH_MAGIC: &[u8; 8] = b"SRESPBT1";

/// Little-endian dump of the per-batch sums.
pub fn encode_batches(batches: &[BatchStats]) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(BATCH_MAGIC);
    let (cells, times) = batches.first().map_or((0, 0), |b| (b.sum.len(), b.total_sum.len()));
    for v in [batches.len(), cells, times] {
        out.extend_from_slice(&(v as u64).to_le_bytes());
    }
    for b in batches {
        out.extend_from_slice(&b.count.to_le_bytes());
        for c in b.classes {
            out.extend_from_slice(&c.to_le_bytes());
        }
        out.extend_from_slice(&b.cone_violations.to_le_bytes());
        for v in b.sum.iter().chain(&b.sum_sq).chain(&b.total_sum).chain(&b.total_sq) {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn decode_batches(bytes: &[u8]) -> Result<Vec<BatchStats>> {
    let bad = || Error::Io("malformed batches.bin".into());
    if bytes.len() < 32 || &bytes[..8] != BATCH_MAGIC {
        return Err(bad());
    }
    let mut pos = 8;
    let mut word = || -> Result<u64> {
        let w = bytes.get(pos..pos + 8).ok_or_else(bad)?;
        pos += 8;
        Ok(u64::from_le_bytes(w.try_into().expect("8 bytes")))
    };
    let (nb, cells, times) = (word()? as usize, word()? as usize, word()? as usize);
    let mut out = Vec::with_capacity(nb);
    for _ in 0..nb {
        let count = word()?;
        let mut classes = [0u64; 5];
        for c in &mut classes {
            *c = word()?;
        }
        let cone_violations = word()?;
        let mut floats = |k: usize| -> Result<Vec<f64>> { (0..k).map(|_| word().map(f64::from_bits)).collect() };
        let sum = floats(cells)?;
        let sum_sq = floats(cells)?;
        let total_sum = floats(times)?;
        let total_sq = floats(times)?;
        out.push(BatchStats { count, sum, sum_sq, total_sum, total_sq, classes, cone_violations });
    }
    Ok(out)
}

fn write(dir: &Path, name: &str, data: &[u8]) -> Result<()> {
    fs::write(dir.join(name), data).map_err(|e| Error::Io(format!("{}: {e}", dir.join(name).display())))
}

/// Writes the full bundle into `dir`, creating it if needed.
pub fn write_bundle(dir: &Path, profile: &SpreadProfile, report: &FitReport, meta: &Metadata) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    write(dir, "profile.csv", profile_csv(profile).as_bytes())?;
    write(dir, "normalized.csv", normalized_csv(profile).as_bytes())?;
    write(dir, "fits.json", fits_json(&profile.config, report).as_bytes())?;
    let meta_json = serde_json::to_string_pretty(meta).expect("metadata serializes") + "\n";
    write(dir, "metadata.json", meta_json.as_bytes())?;
    write(dir, "batches.bin", &encode_batches(&profile.batches))?;
    Ok(())
}

/// Rebuilds the profile stored in a bundle.
pub fn read_bundle(dir: &Path) -> Result<SpreadProfile> {
    let read = |name: &str| fs::read(dir.join(name)).map_err(|e| Error::Io(format!("{}: {e}", dir.join(name).display())));
    let meta: Metadata =
        serde_json::from_slice(&read("metadata.json")?).map_err(|e| Error::Io(format!("metadata.json: {e}")))?;
    if config_hash(&meta.config) != meta.config_sha256 {
        return Err(Error::Io("metadata.json: configuration hash mismatch".into()));
    }
    let batches = decode_batches(&read("batches.bin")?)?;
    SpreadProfile::from_batches(meta.config, batches)
}
