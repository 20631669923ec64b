//! Serde helpers for extended reals: `+inf`/`-inf` are written as the
//! strings `"inf"`/`"-inf"` and NaN as `null`, so reports stay valid JSON.

use serde::{Deserialize, Deserializer, Serializer};

pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else if v.is_nan() {
        s.serialize_none()
    } else if *v > 0.0 {
        s.serialize_str("inf")
    } else {
        s.serialize_str("-inf")
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Raw {
    Num(f64),
    Text(String),
    Null(()),
}

pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    match Raw::deserialize(d)? {
        Raw::Num(v) => Ok(v),
        Raw::Null(()) => Ok(f64::NAN),
        Raw::Text(t) => match t.as_str() {
            "inf" | "+inf" | "infinity" => Ok(f64::INFINITY),
            "-inf" | "-infinity" => Ok(f64::NEG_INFINITY),
            other => Err(serde::de::Error::custom(format!("not an extended real: {other}"))),
        },
    }
}

/// Same encoding for `Vec<f64>`.
pub mod vec {
    use serde::ser::SerializeSeq;
    use serde::{Deserialize, Deserializer, Serializer};

    #[derive(Deserialize)]
    struct Wrapped(#[serde(with = "super")] f64);

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        struct One(f64);
        impl serde::Serialize for One {
            fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                super::serialize(&self.0, s)
            }
        }
        let mut seq = s.serialize_seq(Some(v.len()))?;
        for x in v {
            seq.serialize_element(&One(*x))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        Ok(Vec::<Wrapped>::deserialize(d)?.into_iter().map(|w| w.0).collect())
    }
}

#[cfg(test)]
mod tests {
    use serde::{Deserialize, Serialize};

    #[derive(Serialize, Deserialize, Debug)]
    struct S {
        #[serde(with = "super")]
        v: f64,
    }

    #[test]
    fn round_trip() {
        for v in [1.5, f64::INFINITY, f64::NEG_INFINITY] {
            let j = serde_json::to_string(&S { v }).unwrap();
            let back: S = serde_json::from_str(&j).unwrap();
            assert_eq!(back.v, v);
        }
        assert_eq!(serde_json::to_string(&S { v: f64::INFINITY }).unwrap(), r#"{"v":"inf"}"#);
        let back: S = serde_json::from_str(r#"{"v":null}"#).unwrap();
        assert!(back.v.is_nan());
    }
}
