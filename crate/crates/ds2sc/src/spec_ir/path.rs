use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PathSeg {
    Key(String),
    Index(usize),
}

/// Key/index sequence from the document root, displayed as `a.b[2].c`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct JsonPath(pub Vec<PathSeg>);

impl JsonPath {
    pub fn root() -> Self {
        Self(Vec::new())
    }

    pub fn key(&self, k: &str) -> Self {
        let mut p = self.clone();
        p.0.push(PathSeg::Key(k.to_string()));
        p
    }

    pub fn index(&self, i: usize) -> Self {
        let mut p = self.clone();
        p.0.push(PathSeg::Index(i));
        p
    }

    pub fn top_key(&self) -> Option<&str> {
        match self.0.first() {
            Some(PathSeg::Key(k)) => Some(k),
            _ => None,
        }
    }

    pub fn lookup<'a>(&self, mut v: &'a Value) -> Option<&'a Value> {
        for seg in &self.0 {
            v = match seg {
                PathSeg::Key(k) => v.as_object()?.get(k)?,
                PathSeg::Index(i) => v.as_array()?.get(*i)?,
            };
        }
        Some(v)
    }

    pub fn lookup_mut<'a>(&self, mut v: &'a mut Value) -> Option<&'a mut Value> {
        for seg in &self.0 {
            v = match seg {
                PathSeg::Key(k) => v.as_object_mut()?.get_mut(k)?,
                PathSeg::Index(i) => v.as_array_mut()?.get_mut(*i)?,
            };
        }
        Some(v)
    }

    /// Parses the display form. Keys may not contain `.` or `[`.
    pub fn parse(s: &str) -> Option<Self> {
        let mut segs = Vec::new();
        for part in s.split('.') {
            let (key, mut rest) = match part.find('[') {
                Some(i) => (&part[..i], &part[i..]),
                None => (part, ""),
            };
            if key.is_empty() {
                return None;
            }
            segs.push(PathSeg::Key(key.to_string()));
            while let Some(r) = rest.strip_prefix('[') {
                let end = r.find(']')?;
                segs.push(PathSeg::Index(r[..end].parse().ok()?));
                rest = &r[end + 1..];
            }
            if !rest.is_empty() {
                return None;
            }
        }
        Some(Self(segs))
    }
}

impl fmt::Display for JsonPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("$");
        }
        for (i, seg) in self.0.iter().enumerate() {
            match seg {
                PathSeg::Key(k) if i == 0 => write!(f, "{k}")?,
                PathSeg::Key(k) => write!(f, ".{k}")?,
                PathSeg::Index(n) => write!(f, "[{n}]")?,
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn display_and_parse_agree() {
        let p = JsonPath::root().key("interface_params").key("ports").index(2).key("name");
        assert_eq!(p.to_string(), "interface_params.ports[2].name");
        assert_eq!(JsonPath::parse(&p.to_string()), Some(p));
        assert_eq!(JsonPath::root().to_string(), "$");
        assert_eq!(JsonPath::parse("a..b"), None);
        assert_eq!(JsonPath::parse("a[x]"), None);
    }

    #[test]
    fn lookup() {
        let v = json!({"a": {"b": [10, {"c": true}]}});
        assert_eq!(JsonPath::parse("a.b[1].c").unwrap().lookup(&v), Some(&json!(true)));
        assert_eq!(JsonPath::parse("a.b[5]").unwrap().lookup(&v), None);
    }
}
