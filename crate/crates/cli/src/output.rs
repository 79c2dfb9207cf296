//! CSV and JSON emission. The only non-reproducible content, the wall-clock
//! timestamp, goes in the CSV comment header or the JSON `generated_unix`
//! field.

use std::fs::File;
use std::io::{self, Write};
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

fn generated_unix() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn sink(out: Option<&Path>) -> io::Result<Box<dyn Write>> {
    Ok(match out {
        Some(path) => Box::new(File::create(path)?),
        None => Box::new(io::stdout().lock()),
    })
}

#[derive(Serialize)]
struct JsonDocument<'a, T> {
    generated_unix: u64,
    command: &'a str,
    version: &'a str,
    rows: &'a [T],
}

pub fn emit<T: Serialize>(
    rows: &[T],
    command: &str,
    json: bool,
    out: Option<&Path>,
) -> io::Result<()> {
    let mut w = sink(out)?;
    let version = env!("CARGO_PKG_VERSION");
    if json {
        let doc = JsonDocument {
            generated_unix: generated_unix(),
            command,
            version,
            rows,
        };
        serde_json::to_writer_pretty(&mut w, &doc)?;
        writeln!(w)?;
    } else {
        writeln!(
            w,
            "# generated_unix={} command={command} version={version}",
            generated_unix()
        )?;
        let mut csv = csv::Writer::from_writer(&mut w);
        for row in rows {
            csv.serialize(row)?;
        }
        csv.flush()?;
    }
    w.flush()
}
