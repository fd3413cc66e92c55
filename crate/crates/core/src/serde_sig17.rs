//! Serialize floats with exactly 17 significant digits.

use serde::Serializer;
use serde_json::Number;
use std::str::FromStr;

pub(crate) fn format(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        // JSON has no representation; callers never hand us these.
        "null".to_string()
    }
}

fn number(x: f64) -> Option<Number> {
    x.is_finite()
        .then(|| Number::from_str(&format(x)).expect("formatted float parses"))
}

pub(crate) fn f64<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    match number(*x) {
        Some(n) => s.serialize_some(&n),
        None => s.serialize_none(),
    }
}

pub(crate) fn vec<S: Serializer>(xs: &[f64], s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(xs.len()))?;
    for x in xs {
        seq.serialize_element(&number(*x))?;
    }
    seq.end()
}
