//! Where measurement settings come from.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::geometry::{sample_unit_sphere, UnitVector3, Vec3};
use crate::runtime::streams::{stream, Domain};

/// Vectors further than this from unit norm are reported when normalized.
pub const NORM_WARNING: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub enum SettingsSource {
    Explicit(Vec<(UnitVector3, UnitVector3)>),
    /// `N` pairs drawn uniformly from the seed's settings stream.
    Random(usize),
    /// CSV with header `ax,ay,az,bx,by,bz`.
    File(PathBuf),
}

impl SettingsSource {
    pub fn resolve(&self, seed: u64) -> Result<Vec<(UnitVector3, UnitVector3)>> {
        match self {
            SettingsSource::Explicit(v) => {
                if v.is_empty() {
                    return Err(Error::Config("no settings given".into()));
                }
                Ok(v.clone())
            }
            SettingsSource::Random(n) => Ok((0..*n as u64)
                .map(|i| {
                    let mut rng = stream(seed, Domain::Settings, i, 0);
                    let a = sample_unit_sphere(&mut rng);
                    (a, sample_unit_sphere(&mut rng))
                })
                .collect()),
            SettingsSource::File(path) => read_settings_csv(path),
        }
    }

    pub fn describe(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for SettingsSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SettingsSource::Explicit(v) => write!(f, "explicit:{}", v.len()),
            SettingsSource::Random(n) => write!(f, "random:{n}"),
            SettingsSource::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}

impl FromStr for SettingsSource {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        if let Some(n) = s.strip_prefix("random:") {
            let n: usize = n
                .parse()
                .map_err(|_| Error::Config(format!("bad settings count in {s:?}")))?;
            if n == 0 {
                return Err(Error::Config("random settings count must be at least 1".into()));
            }
            Ok(SettingsSource::Random(n))
        } else if s.is_empty() {
            Err(Error::Config("empty settings source".into()))
        } else {
            Ok(SettingsSource::File(PathBuf::from(s.strip_prefix("file:").unwrap_or(s))))
        }
    }
}

#[derive(Deserialize)]
struct Row {
    ax: f64,
    ay: f64,
    az: f64,
    bx: f64,
    by: f64,
    bz: f64,
}

fn ingest(v: Vec3, line: usize, which: &str) -> Result<UnitVector3> {
    let norm = v.norm();
    if !norm.is_finite() || norm == 0.0 {
        return Err(Error::Config(format!("row {line}: {which} has norm {norm}")));
    }
    if (norm - 1.0).abs() > NORM_WARNING {
        log::warn!("row {line}: {which} has norm {norm}, normalizing");
    }
    UnitVector3::normalize(v).ok_or_else(|| Error::Config(format!("row {line}: cannot normalize {which}")))
}

/// Reads setting pairs, normalizing each vector.
pub fn read_settings_csv(path: &Path) -> Result<Vec<(UnitVector3, UnitVector3)>> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let header: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
    if header != ["ax", "ay", "az", "bx", "by", "bz"] {
        return Err(Error::Config(format!(
            "{}: expected header ax,ay,az,bx,by,bz, found {}",
            path.display(),
            header.join(",")
        )));
    }
    let mut out = Vec::new();
    for (i, row) in reader.deserialize::<Row>().enumerate() {
        let r = row?;
        let line = i + 1;
        out.push((
            ingest(Vec3::new(r.ax, r.ay, r.az), line, "a")?,
            ingest(Vec3::new(r.bx, r.by, r.bz), line, "b")?,
        ));
    }
    if out.is_empty() {
        return Err(Error::Config(format!("{}: no settings", path.display())));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn parses_sources() {
        assert_eq!("random:5".parse::<SettingsSource>().unwrap(), SettingsSource::Random(5));
        assert!("random:0".parse::<SettingsSource>().is_err());
        assert!("random:x".parse::<SettingsSource>().is_err());
        assert_eq!(
            "s.csv".parse::<SettingsSource>().unwrap(),
            SettingsSource::File(PathBuf::from("s.csv"))
        );
    }

    #[test]
    fn random_settings_depend_only_on_seed_and_index() {
        let five = SettingsSource::Random(5).resolve(3).unwrap();
        let three = SettingsSource::Random(3).resolve(3).unwrap();
        assert_eq!(&five[..3], &three[..]);
        assert_ne!(five, SettingsSource::Random(5).resolve(4).unwrap());
    }

    #[test]
    fn reads_and_normalizes() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "ax,ay,az,bx,by,bz\n0,0,2,1,0,0\n0.6, 0.8, 0, 0,1,0").unwrap();
        let s = read_settings_csv(f.path()).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].0, UnitVector3::Z);
        assert_eq!(s[1].1, UnitVector3::Y);
    }

    #[test]
    fn rejects_bad_files() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "x,y,z\n1,2,3").unwrap();
        assert!(read_settings_csv(f.path()).is_err());
        let mut g = tempfile::NamedTempFile::new().unwrap();
        writeln!(g, "ax,ay,az,bx,by,bz\n0,0,0,1,0,0").unwrap();
        assert!(read_settings_csv(g.path()).is_err());
    }
}
