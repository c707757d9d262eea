//! Text output with reals written to 17 significant digits.
//!
//! Every `f64` is printed as `d.dddddddddddddddde±x`, which round-trips
//! bit-exactly. JSON objects are indented one key per line; arrays are kept on
//! one line so matrices stay readable.

use std::io;

use serde::Serialize;
use serde_json::ser::Formatter;

/// A real with 17 significant digits.
pub fn format_real(value: f64) -> String {
    format!("{value:.16e}")
}

/// Serializes `value` as JSON with [`format_real`] numbers, newline-terminated.
pub fn to_json_string<T: Serialize + ?Sized>(value: &T) -> serde_json::Result<String> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, RealFormatter::default());
    value.serialize(&mut ser)?;
    out.push(b'\n');
    Ok(String::from_utf8(out).expect("serde_json emits UTF-8"))
}

#[derive(Default)]
struct RealFormatter {
    indent: usize,
    array_depth: usize,
    // whether each open object has written a key yet
    objects: Vec<bool>,
}

impl RealFormatter {
    fn newline<W: ?Sized + io::Write>(&self, w: &mut W) -> io::Result<()> {
        w.write_all(b"\n")?;
        for _ in 0..self.indent {
            w.write_all(b"  ")?;
        }
        Ok(())
    }
}

impl Formatter for RealFormatter {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        w.write_all(format_real(value).as_bytes())
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.array_depth += 1;
        w.write_all(b"[")
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.array_depth -= 1;
        w.write_all(b"]")
    }

    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        if first {
            Ok(())
        } else {
            w.write_all(b", ")
        }
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, _w: &mut W) -> io::Result<()> {
        Ok(())
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.objects.push(false);
        if self.array_depth == 0 {
            self.indent += 1;
        }
        w.write_all(b"{")
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        let had_keys = self.objects.pop().unwrap_or(false);
        if self.array_depth == 0 {
            self.indent -= 1;
            if had_keys {
                self.newline(w)?;
            }
        }
        w.write_all(b"}")
    }

    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        if let Some(seen) = self.objects.last_mut() {
            *seen = true;
        }
        if self.array_depth == 0 {
            if !first {
                w.write_all(b",")?;
            }
            self.newline(w)
        } else if first {
            Ok(())
        } else {
            w.write_all(b", ")
        }
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        w.write_all(b": ")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[derive(Serialize)]
    struct Sample {
        name: &'static str,
        n: usize,
        values: Vec<f64>,
        nested: Inner,
        list: Vec<Inner>,
    }

    #[derive(Serialize)]
    struct Inner {
        x: f64,
    }

    #[test]
    fn layout() {
        let s = Sample {
            name: "a",
            n: 2,
            values: vec![0.5, -1.0],
            nested: Inner { x: 0.1 },
            list: vec![Inner { x: 1.0 }, Inner { x: 2.0 }],
        };
        let text = to_json_string(&s).unwrap();
        let expected = "{\n  \"name\": \"a\",\n  \"n\": 2,\n  \"values\": [5.0000000000000000e-1, -1.0000000000000000e0],\n  \"nested\": {\n    \"x\": 1.0000000000000001e-1\n  },\n  \"list\": [{\"x\": 1.0000000000000000e0}, {\"x\": 2.0000000000000000e0}]\n}\n";
        assert_eq!(text, expected);
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["nested"]["x"].as_f64(), Some(0.1));
    }

    proptest! {
        #[test]
        fn reals_round_trip_bit_exactly(bits in any::<u64>()) {
            let v = f64::from_bits(bits);
            prop_assume!(v.is_finite());
            let text = to_json_string(&vec![v]).unwrap();
            let back: Vec<f64> = serde_json::from_str(&text).unwrap();
            prop_assert_eq!(back[0].to_bits(), v.to_bits());
            prop_assert_eq!(format_real(v).parse::<f64>().unwrap().to_bits(), v.to_bits());
        }
    }
}
