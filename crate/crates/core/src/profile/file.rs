//! Plain-text profile files.
//!
//! ```text
//! # comment
//! kind = xi            # xi | fpp | h | family
//! expr = "t/(1+t)"     # or: samples = data.csv (header t,value)
//! domain_end = inf
//! ```
//!
//! With `kind = family` the file names a family and its parameters instead,
//! e.g. `family = yau`, `lmax = 64`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::families::FamilySpec;
use crate::scalar::Real;

use super::{GeneratorProfile, ProfileKind};

#[derive(Clone, Debug)]
pub enum ProfileSpec<T> {
    Profile(GeneratorProfile<T>),
    Family(FamilySpec),
}

/// Parse `key = value` lines; quotes around values are stripped.
pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = strip_comment(raw).trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(Error::InvalidProfile(format!(
                "line {}: expected key = value",
                lineno + 1
            )));
        };
        let key = k.trim().to_ascii_lowercase();
        let mut value = v.trim();
        if value.len() >= 2 && value.starts_with('"') && value.ends_with('"') {
            value = &value[1..value.len() - 1];
        }
        if out.insert(key.clone(), value.to_string()).is_some() {
            return Err(Error::InvalidProfile(format!(
                "line {}: duplicate key `{key}`",
                lineno + 1
            )));
        }
    }
    Ok(out)
}

fn strip_comment(line: &str) -> &str {
    let mut quoted = false;
    for (i, c) in line.char_indices() {
        match c {
            '"' => quoted = !quoted,
            '#' if !quoted => return &line[..i],
            _ => {}
        }
    }
    line
}

fn parse_real<T: Real>(key: &str, v: &str) -> Result<T> {
    let v = v.trim();
    if matches!(v, "inf" | "+inf" | "infinity") {
        return Ok(T::infinity());
    }
    v.parse::<f64>()
        .map(T::lit)
        .map_err(|_| Error::InvalidProfile(format!("`{key}` is not a number: `{v}`")))
}

/// Read two-column `t,value` samples with a header row.
pub fn read_samples<T: Real>(path: &Path) -> Result<(Vec<T>, Vec<T>)> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let headers = rdr.headers()?.clone();
    if headers.len() != 2 {
        return Err(Error::InvalidProfile(format!(
            "{}: expected two columns t,value",
            path.display()
        )));
    }
    let (mut t, mut v) = (Vec::new(), Vec::new());
    for rec in rdr.records() {
        let rec = rec?;
        t.push(parse_real("t", &rec[0])?);
        v.push(parse_real("value", &rec[1])?);
    }
    Ok((t, v))
}

/// Interpret parsed keys; relative sample paths resolve against `base`.
pub fn spec_from_keys<T: Real>(keys: &BTreeMap<String, String>, base: &Path) -> Result<ProfileSpec<T>> {
    let kind = keys
        .get("kind")
        .ok_or_else(|| Error::InvalidProfile("missing `kind`".into()))?;
    if kind.eq_ignore_ascii_case("family") {
        let name = keys
            .get("family")
            .ok_or_else(|| Error::InvalidProfile("kind = family needs `family`".into()))?;
        let params = keys
            .iter()
            .filter(|(k, _)| k.as_str() != "kind" && k.as_str() != "family")
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect();
        return Ok(ProfileSpec::Family(FamilySpec::new(name, params)?));
    }
    let kind: ProfileKind = kind.parse()?;
    let mut profile = match (keys.get("expr"), keys.get("samples")) {
        (Some(e), None) => GeneratorProfile::<T>::parse(kind, e)?,
        (None, Some(s)) => {
            let path: PathBuf = base.join(s);
            let (t, v) = read_samples(&path)?;
            GeneratorProfile::sampled(kind, t, v)?
        }
        _ => {
            return Err(Error::InvalidProfile(
                "exactly one of `expr` and `samples` is required".into(),
            ))
        }
    };
    if let Some(end) = keys.get("domain_end") {
        let end: T = parse_real("domain_end", end)?;
        if !(end > T::zero()) {
            return Err(Error::InvalidProfile("domain_end must be positive".into()));
        }
        profile.domain_end = profile.domain_end.min(end);
    }
    for key in keys.keys() {
        if !matches!(key.as_str(), "kind" | "expr" | "samples" | "domain_end") {
            return Err(Error::InvalidProfile(format!("unknown key `{key}`")));
        }
    }
    Ok(ProfileSpec::Profile(profile))
}

pub fn load_profile<T: Real>(path: &Path) -> Result<ProfileSpec<T>> {
    let text = fs::read_to_string(path)?;
    let keys = parse_key_values(&text)?;
    let base = path.parent().unwrap_or(Path::new("."));
    spec_from_keys(&keys, base)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn closed_form_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("p.txt");
        fs::write(&p, "# rational\nkind = xi\nexpr = \"t/(1+t)\"  # comment\ndomain_end = inf\n").unwrap();
        let ProfileSpec::Profile(prof) = load_profile::<f64>(&p).unwrap() else {
            panic!()
        };
        assert_eq!(prof.eval(1.0).unwrap(), 0.5);
        assert!(prof.domain_end.is_infinite());
    }

    #[test]
    fn sampled_file() {
        let dir = tempfile::tempdir().unwrap();
        let mut f = fs::File::create(dir.path().join("s.csv")).unwrap();
        writeln!(f, "t,value\n0,0\n1,0.5\n2,0.8").unwrap();
        let p = dir.path().join("p.txt");
        fs::write(&p, "kind=xi\nsamples=s.csv\n").unwrap();
        let ProfileSpec::Profile(prof) = load_profile::<f64>(&p).unwrap() else {
            panic!()
        };
        assert_eq!(prof.eval(1.0).unwrap(), 0.5);
        assert_eq!(prof.domain_end, 2.0);
    }

    #[test]
    fn family_file() {
        let keys = parse_key_values("kind=family\nfamily=poly\na=0.5\nshape=rational").unwrap();
        let spec = spec_from_keys::<f64>(&keys, Path::new(".")).unwrap();
        assert!(matches!(spec, ProfileSpec::Family(_)));
    }

    #[test]
    fn malformed_files() {
        assert!(parse_key_values("kind xi").is_err());
        assert!(parse_key_values("kind=xi\nkind=h").is_err());
        let keys = parse_key_values("kind=xi").unwrap();
        assert!(spec_from_keys::<f64>(&keys, Path::new(".")).is_err());
        let keys = parse_key_values("kind=xi\nexpr=t\ncolour=red").unwrap();
        assert!(spec_from_keys::<f64>(&keys, Path::new(".")).is_err());
    }
}
