//! `<out>/<scenario>/<timestamp>/{summary.json, series.csv, resolved_config.json}`

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{HarnessError, Result};
use crate::runner::RunOutput;
use crate::summary::Series;

/// Plain decimal in the usual range, shortest round-trip exponent form
/// outside it.
pub fn format_value(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || (1e-4..1e15).contains(&a) || !v.is_finite() {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

/// Schema comment line, header, rows. Missing values are empty fields.
pub fn write_series<W: Write>(series: &Series, out: W) -> std::io::Result<()> {
    let mut out = out;
    writeln!(out, "# schema: {}", series.schema)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(&series.columns)?;
    for row in &series.rows {
        w.write_record(row.iter().map(|v| v.map(format_value).unwrap_or_default()))?;
    }
    w.flush()
}

pub fn series_to_string(series: &Series) -> String {
    let mut buf = Vec::new();
    write_series(series, &mut buf).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("csv output is UTF-8")
}

/// Parses what `write_series` produced.
pub fn read_series(text: &str) -> Option<Series> {
    let mut lines = text.splitn(2, '\n');
    let schema = lines.next()?.strip_prefix("# schema: ")?.trim().to_string();
    let mut r = csv::Reader::from_reader(lines.next()?.as_bytes());
    let columns = r.headers().ok()?.iter().map(str::to_string).collect();
    let rows = r
        .records()
        .map(|rec| {
            rec.ok()?
                .iter()
                .map(|f| if f.is_empty() { Some(None) } else { f.parse().ok().map(Some) })
                .collect::<Option<Vec<_>>>()
        })
        .collect::<Option<Vec<_>>>()?;
    Some(Series { schema, columns, rows })
}

fn run_directory(out: &Path, scenario: &str) -> Result<PathBuf> {
    let parent = out.join(scenario);
    fs::create_dir_all(&parent).map_err(|e| HarnessError::io(&parent, e))?;
    let stamp = chrono::Utc::now().format("%Y%m%dT%H%M%S%.6fZ").to_string();
    let mut dir = parent.join(&stamp);
    let mut k = 1;
    while dir.exists() {
        k += 1;
        dir = parent.join(format!("{stamp}-{k}"));
    }
    fs::create_dir(&dir).map_err(|e| HarnessError::io(&dir, e))?;
    Ok(dir)
}

/// Writes the three run files and returns their directory.
pub fn write_run(out: &Path, run: &RunOutput) -> Result<PathBuf> {
    let dir = run_directory(out, run.summary.scenario.as_str())?;
    let write = |name: &str, text: String| {
        let path = dir.join(name);
        fs::write(&path, text).map_err(|e| HarnessError::io(&path, e))
    };
    write("summary.json", serde_json::to_string_pretty(&run.summary).expect("summary serializes"))?;
    write("series.csv", series_to_string(&run.series))?;
    write(
        "resolved_config.json",
        serde_json::to_string_pretty(&run.resolved_config).expect("config serializes"),
    )?;
    Ok(dir)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ScenarioName;

    #[test]
    fn values_round_trip_through_text() {
        for v in [0.0, 1.0, -0.5, 1e-300, 6.02e23, 0.1 + 0.2, 1e-4, 9.99e-5, f64::MIN_POSITIVE] {
            assert_eq!(format_value(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(format_value(1e-7), "1e-7");
        assert_eq!(format_value(0.25), "0.25");
    }

    #[test]
    fn series_round_trip() {
        let mut s = Series::new(ScenarioName::Memory, &["t", "a", "b"]);
        s.push(vec![0.0, 1.0, 2.5e-9]);
        s.rows.push(vec![Some(1.0), None, Some(-3.0)]);
        let text = series_to_string(&s);
        assert!(text.starts_with("# schema: engres.series.memory/1\nt,a,b\n"));
        assert_eq!(read_series(&text).unwrap(), s);
    }
}
