use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};

/// Raw scenario parameters as `key → text` pairs.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Params(BTreeMap<String, String>);

impl Params {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.insert(key, value);
        self
    }

    pub fn insert(&mut self, key: &str, value: impl ToString) {
        self.0.insert(key.to_string(), value.to_string());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.0.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl<K: ToString, V: ToString> FromIterator<(K, V)> for Params {
    fn from_iter<I: IntoIterator<Item = (K, V)>>(iter: I) -> Self {
        Params(iter.into_iter().map(|(k, v)| (k.to_string(), v.to_string())).collect())
    }
}

/// Typed access to [`Params`] that rejects keys nobody asked for.
pub(crate) struct Reader<'a> {
    params: &'a Params,
    seen: BTreeSet<&'static str>,
}

impl<'a> Reader<'a> {
    pub fn new(params: &'a Params) -> Self {
        Reader { params, seen: BTreeSet::new() }
    }

    fn raw(&mut self, key: &'static str) -> Option<&'a str> {
        self.seen.insert(key);
        self.params.get(key).map(str::trim)
    }

    pub fn opt_f64(&mut self, key: &'static str) -> Result<Option<f64>> {
        self.raw(key)
            .map(|s| match s.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(Error::config(key, format!("expected a finite number, got `{s}`"))),
            })
            .transpose()
    }

    pub fn f64(&mut self, key: &'static str, default: f64) -> Result<f64> {
        Ok(self.opt_f64(key)?.unwrap_or(default))
    }

    pub fn positive(&mut self, key: &'static str, default: f64) -> Result<f64> {
        let v = self.f64(key, default)?;
        if v > 0.0 {
            Ok(v)
        } else {
            Err(Error::config(key, "must be positive"))
        }
    }

    pub fn fraction(&mut self, key: &'static str, default: f64) -> Result<f64> {
        let v = self.f64(key, default)?;
        if (0.0..1.0).contains(&v) {
            Ok(v)
        } else {
            Err(Error::config(key, "must lie in [0, 1)"))
        }
    }

    pub fn usize(&mut self, key: &'static str, default: usize) -> Result<usize> {
        match self.raw(key) {
            None => Ok(default),
            Some(s) => {
                s.parse::<usize>().map_err(|_| Error::config(key, format!("expected a nonnegative integer, got `{s}`")))
            }
        }
    }

    pub fn u64(&mut self, key: &'static str, default: u64) -> Result<u64> {
        match self.raw(key) {
            None => Ok(default),
            Some(s) => {
                s.parse::<u64>().map_err(|_| Error::config(key, format!("expected a nonnegative integer, got `{s}`")))
            }
        }
    }

    /// Comma-separated list of finite numbers.
    pub fn list(&mut self, key: &'static str, default: &[f64]) -> Result<Vec<f64>> {
        match self.raw(key) {
            None => Ok(default.to_vec()),
            Some(s) => {
                let parsed: Result<Vec<f64>> = s
                    .split(',')
                    .map(|item| match item.trim().parse::<f64>() {
                        Ok(v) if v.is_finite() => Ok(v),
                        _ => Err(Error::config(key, format!("bad list entry `{}`", item.trim()))),
                    })
                    .collect();
                let v = parsed?;
                if v.is_empty() {
                    return Err(Error::config(key, "list is empty"));
                }
                Ok(v)
            }
        }
    }

    pub fn text(&mut self, key: &'static str, default: &str) -> String {
        self.raw(key).unwrap_or(default).to_string()
    }

    /// Fails on the first key that was never read.
    pub fn finish(self) -> Result<()> {
        match self.params.0.keys().find(|k| !self.seen.contains(k.as_str())) {
            Some(k) => Err(Error::config(k.clone(), "unknown parameter for this scenario")),
            None => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn typed_reads_and_unknown_keys() {
        let p = Params::new().with("b", "0.5").with("a", "1, 2,3").with("n", "4");
        let mut r = Reader::new(&p);
        assert_eq!(r.f64("b", 0.0).unwrap(), 0.5);
        assert_eq!(r.list("a", &[]).unwrap(), vec![1.0, 2.0, 3.0]);
        assert_eq!(r.f64("missing", 7.0).unwrap(), 7.0);
        assert!(r.finish().is_err());
        let mut r = Reader::new(&p);
        r.f64("b", 0.0).unwrap();
        r.list("a", &[]).unwrap();
        r.usize("n", 0).unwrap();
        assert!(r.finish().is_ok());
    }

    #[test]
    fn errors_name_the_field() {
        let p = Params::new().with("eta", "-1").with("x", "nan");
        let mut r = Reader::new(&p);
        assert_eq!(r.positive("eta", 1.0).unwrap_err(), Error::config("eta", "must be positive"));
        assert!(matches!(r.f64("x", 0.0), Err(Error::Config { field, .. }) if field == "x"));
    }
}
