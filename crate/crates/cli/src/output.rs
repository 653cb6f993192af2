use std::io;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};
use serde_json::Value;

use crate::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub parameters: Value,
    pub seed: Option<u64>,
    pub tool_version: String,
    /// Seconds.
    pub wall_time: f64,
}

impl RunManifest {
    pub fn new<P: Serialize>(command: &str, parameters: &P, seed: Option<u64>, started: Instant) -> Self {
        RunManifest {
            command: command.to_string(),
            parameters: serde_json::to_value(parameters).expect("parameters serialize"),
            seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            wall_time: started.elapsed().as_secs_f64(),
        }
    }
}

/// Pretty JSON with every float written as 17 significant digits.
struct Digits17<'a>(PrettyFormatter<'a>);

impl Formatter for Digits17<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:.16e}")
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Digits17(PrettyFormatter::new()));
    value.serialize(&mut ser).expect("serialization to memory");
    String::from_utf8(buf).expect("utf-8 JSON")
}

#[derive(Serialize)]
struct Document<'a, T: Serialize> {
    manifest: &'a RunManifest,
    result: &'a T,
}

/// Prints `{"manifest", "result"}` and, with `out`, writes it to `out/<command>.json`.
pub fn emit_json<T: Serialize>(manifest: &RunManifest, result: &T, out: Option<&Path>) -> Result<(), CliError> {
    let text = to_json(&Document { manifest, result });
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join(format!("{}.json", manifest.command)), format!("{text}\n"))?;
    }
    println!("{text}");
    Ok(())
}

/// Prints the CSV and, with `out`, writes `out/<command>.csv` and its manifest.
pub fn emit_csv(manifest: &RunManifest, csv: &str, out: Option<&Path>) -> Result<(), CliError> {
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join(format!("{}.manifest.json", manifest.command)), format!("{}\n", to_json(manifest)))?;
        std::fs::write(dir.join(format!("{}.csv", manifest.command)), csv)?;
    }
    print!("{csv}");
    Ok(())
}
