//! JSON encoding of extended floats.

use serde::Serializer;

/// Serializes non-finite floats as `"inf"`, `"-inf"` or `"nan"`.
pub fn ser_f64<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else if v.is_nan() {
        s.serialize_str("nan")
    } else if *v > 0.0 {
        s.serialize_str("inf")
    } else {
        s.serialize_str("-inf")
    }
}

/// Map variant of [`ser_f64`].
pub fn ser_f64_map<S: Serializer>(
    m: &std::collections::BTreeMap<String, f64>,
    s: S,
) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeMap;
    let mut map = s.serialize_map(Some(m.len()))?;
    for (k, v) in m {
        map.serialize_entry(k, &Ext(*v))?;
    }
    map.end()
}

/// Wrapper applying [`ser_f64`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ext(pub f64);

impl serde::Serialize for Ext {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        ser_f64(&self.0, s)
    }
}
