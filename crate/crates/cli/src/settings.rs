//! Effective configuration: defaults, then the `--config` file, then flags.

use std::fmt::Display;
use std::path::{Path, PathBuf};

use trajcast_core::data::{parse_tracks, subsample, BoxFormat, FormatSpec, Track};
use trajcast_core::kv::KvMap;
use trajcast_core::{Error, Result};

/// Collects flag values under their configuration keys.
#[derive(Default)]
pub struct Overrides(KvMap);

impl Overrides {
    pub fn opt<T: Display>(&mut self, key: &str, v: &Option<T>) -> &mut Self {
        if let Some(v) = v {
            self.0.set(key, v);
        }
        self
    }

    pub fn flag(&mut self, key: &str, on: bool) -> &mut Self {
        if on {
            self.0.set(key, true);
        }
        self
    }

    pub fn paths(&mut self, key: &str, v: &[PathBuf]) -> &mut Self {
        if !v.is_empty() {
            let joined: Vec<String> = v.iter().map(|p| p.display().to_string()).collect();
            self.0.set(key, joined.join(","));
        }
        self
    }

    /// `KEY=VALUE` strings from `--set`.
    pub fn pairs(&mut self, pairs: &[String]) -> Result<&mut Self> {
        for p in pairs {
            let (k, v) = p
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got `{p}`")))?;
            self.0.set(k.trim(), v.trim());
        }
        Ok(self)
    }
}

pub fn resolve(command: &str, defaults: KvMap, file: Option<&Path>, overrides: &Overrides) -> Result<KvMap> {
    let mut kv = KvMap::new();
    kv.set("command", command);
    kv.merge(&defaults);
    if let Some(path) = file {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config file {}: {e}", path.display())))?;
        let mut from_file = KvMap::parse(&text)?;
        from_file.set("command", command);
        kv.merge(&from_file);
    }
    kv.merge(&overrides.0);
    Ok(kv)
}

pub fn required<'a>(kv: &'a KvMap, key: &str) -> Result<&'a str> {
    match kv.get_str(key) {
        Some(v) if !v.is_empty() => Ok(v),
        _ => Err(Error::Config(format!("missing `{key}` (pass --{} or set it in the config file)", key.replace('_', "-")))),
    }
}

pub fn input_path(kv: &KvMap, key: &str) -> Result<PathBuf> {
    let p = PathBuf::from(required(kv, key)?);
    if !p.exists() {
        return Err(Error::Config(format!("{key} path {} does not exist", p.display())));
    }
    Ok(p)
}

pub fn data_defaults(kv: &mut KvMap) {
    kv.set("format", "center");
    kv.set("frame_rate", 30.0);
    kv.set("subsample", 1);
}

/// Reads every file listed under `data`, applying `format`, `frame_rate`
/// and `subsample`.
pub fn load_tracks(kv: &KvMap) -> Result<Vec<Track>> {
    let spec = FormatSpec { boxes: kv.get_or("format", BoxFormat::Center)?, frame_rate_hz: kv.get_or("frame_rate", 30.0)? };
    let factor: usize = kv.get_or("subsample", 1)?;
    let mut tracks = Vec::new();
    for raw in required(kv, "data")?.split(',') {
        let path = PathBuf::from(raw.trim());
        if !path.exists() {
            return Err(Error::Config(format!("data path {} does not exist", path.display())));
        }
        for t in parse_tracks(&path, &spec)? {
            tracks.push(if factor > 1 { subsample(&t, factor)? } else { t });
        }
    }
    Ok(tracks)
}

/// `<out>` with its extension replaced by `config.txt`.
pub fn echo_path(out: &Path) -> PathBuf {
    out.with_extension("config.txt")
}

pub fn write_echo(path: &Path, kv: &KvMap) -> Result<()> {
    std::fs::write(path, kv.to_text())?;
    Ok(())
}
