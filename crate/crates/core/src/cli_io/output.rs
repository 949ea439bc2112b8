//! File formats. CSV files open with a `# schema_version` comment line, use
//! LF endings and a fixed column order, and print floats with 17 significant
//! digits. JSON floats use the shortest exact representation.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::blowup::{Verdict, VerdictTag};
use crate::diagnostics::{EnergyRecord, EnergyTimeSeries};
use crate::error::{Result, SdwError};
use crate::picard::IterateTrace;
use crate::testfn::SlopeReport;

pub const SCHEMA_VERSION: u32 = 1;

/// 17 significant digits; `NaN`, `inf` and `-inf` for non-finite values.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "NaN".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{x:.16e}")
    }
}

fn quote(field: &str) -> String {
    if field.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", field.replace('"', "\"\"").replace(['\n', '\r'], " "))
    } else {
        field.to_string()
    }
}

pub struct CsvWriter {
    buf: String,
    columns: usize,
}

impl CsvWriter {
    pub fn new(header: &[&str]) -> Self {
        let mut buf = format!("# schema_version: {SCHEMA_VERSION}\n");
        buf.push_str(&header.join(","));
        buf.push('\n');
        CsvWriter {
            buf,
            columns: header.len(),
        }
    }

    pub fn row(&mut self, fields: &[String]) -> Result<()> {
        if fields.len() != self.columns {
            return Err(SdwError::usage(format!(
                "csv row has {} fields, header has {}",
                fields.len(),
                self.columns
            )));
        }
        let line: Vec<String> = fields.iter().map(|f| quote(f)).collect();
        self.buf.push_str(&line.join(","));
        self.buf.push('\n');
        Ok(())
    }

    pub fn finish(self) -> String {
        self.buf
    }
}

/// The single writer for one output directory. Files are written to a
/// temporary name and renamed into place.
pub struct OutputDir {
    path: PathBuf,
}

impl OutputDir {
    pub fn create(path: &Path) -> Result<Self> {
        fs::create_dir_all(path).map_err(|e| SdwError::io(path, e))?;
        Ok(OutputDir {
            path: path.to_path_buf(),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn write(&self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let target = self.path.join(name);
        let tmp = self.path.join(format!(".{name}.tmp"));
        let mut f = fs::File::create(&tmp).map_err(|e| SdwError::io(&tmp, e))?;
        f.write_all(bytes).map_err(|e| SdwError::io(&tmp, e))?;
        f.sync_all().map_err(|e| SdwError::io(&tmp, e))?;
        fs::rename(&tmp, &target).map_err(|e| SdwError::io(&target, e))?;
        Ok(target)
    }
}

pub fn energy_csv(series: &EnergyTimeSeries) -> String {
    let mut w = CsvWriter::new(&EnergyRecord::FIELDS);
    for rec in &series.records {
        let fields: Vec<String> = rec.values().iter().map(|&x| fmt_f64(x)).collect();
        w.row(&fields).expect("fixed width");
    }
    w.finish()
}

/// Flat verdict document. Absent or non-finite values are `null`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerdictJson {
    pub schema_version: u32,
    pub tag: String,
    pub t_est: Option<f64>,
    pub t_last_stable: Option<f64>,
    pub kappa: Option<f64>,
    pub peak_norm: Option<f64>,
    pub refinement_confirmed: bool,
    pub sign_functional: Option<f64>,
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

impl From<&Verdict> for VerdictJson {
    fn from(v: &Verdict) -> Self {
        let (tag, t_est, t_last, kappa) = match v.tag {
            VerdictTag::GlobalUpTo { t_end } => ("global_up_to", Some(t_end), None, None),
            VerdictTag::BlowupAt {
                t_est,
                t_last_stable,
                kappa,
            } => ("blowup_at", finite(t_est), finite(t_last_stable), finite(kappa)),
        };
        VerdictJson {
            schema_version: SCHEMA_VERSION,
            tag: tag.to_string(),
            t_est,
            t_last_stable: t_last,
            kappa,
            peak_norm: finite(v.peak_norm),
            refinement_confirmed: v.refinement_confirmed,
            sign_functional: finite(v.sign_functional),
        }
    }
}

impl VerdictJson {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("plain struct");
        s.push('\n');
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| SdwError::config(format!("verdict json: {e}")))
    }
}

pub const SLOPE_COLUMNS: [&str; 6] = ["selector", "t", "value", "slope", "expected", "fit_residual"];

pub fn slope_csv(reports: &[SlopeReport]) -> String {
    let mut w = CsvWriter::new(&SLOPE_COLUMNS);
    for r in reports {
        for &(t, v) in &r.values {
            w.row(&[
                r.selector.label().to_string(),
                fmt_f64(t),
                fmt_f64(v),
                fmt_f64(r.slope),
                fmt_f64(r.expected),
                fmt_f64(r.fit_residual),
            ])
            .expect("fixed width");
        }
    }
    w.finish()
}

pub fn picard_csv(trace: &IterateTrace) -> String {
    let mut w = CsvWriter::new(&["iterate", "xt_norm", "distance", "ratio"]);
    let opt = |x: Option<&f64>| x.map_or_else(String::new, |&v| fmt_f64(v));
    for (m, norm) in trace.xt_norms.iter().enumerate() {
        let d = if m == 0 { None } else { trace.distances.get(m - 1) };
        let r = if m < 2 { None } else { trace.ratios.get(m - 2) };
        w.row(&[m.to_string(), fmt_f64(*norm), opt(d), opt(r)])
            .expect("fixed width");
    }
    w.finish()
}

/// Plot script over whichever of `energy.csv` and `slopes.csv` were emitted.
pub fn plot_script(energy: bool, slopes: bool) -> String {
    let mut s = String::from(
        "# Plots the files written next to this script.\n\
         import csv\n\
         import matplotlib.pyplot as plt\n\n\
         def rows(name):\n    \
         with open(name, newline=\"\") as f:\n        \
         return list(csv.DictReader(line for line in f if not line.startswith(\"#\")))\n",
    );
    if energy {
        s.push_str(
            "\nenergy = rows(\"energy.csv\")\n\
             t = [float(r[\"t\"]) for r in energy]\n\
             fig, ax = plt.subplots()\n\
             for col in (\"h1_u\", \"h1_v\", \"l2_f\"):\n    \
             ax.semilogy(t, [float(r[col]) for r in energy], label=col)\n\
             ax.set_xlabel(\"t\")\n\
             ax.legend()\n\
             fig.savefig(\"energy.png\", dpi=150)\n",
        );
    }
    if slopes {
        s.push_str(
            "\nslopes = rows(\"slopes.csv\")\n\
             fig, ax = plt.subplots()\n\
             for sel in sorted({r[\"selector\"] for r in slopes}):\n    \
             pts = [r for r in slopes if r[\"selector\"] == sel]\n    \
             ax.loglog([float(r[\"t\"]) for r in pts], [float(r[\"value\"]) for r in pts], \"o-\", label=sel)\n\
             ax.set_xlabel(\"T\")\n\
             ax.legend()\n\
             fig.savefig(\"slopes.png\", dpi=150)\n",
        );
    }
    s
}

/// Writes whichever artifacts are given, plus `plot_run.py` when any CSV was written.
pub fn write_outputs(
    series: Option<&EnergyTimeSeries>,
    verdict: Option<&Verdict>,
    slopes: &[SlopeReport],
    dir: &Path,
) -> Result<Vec<PathBuf>> {
    let out = OutputDir::create(dir)?;
    let mut files = Vec::new();
    if let Some(s) = series {
        files.push(out.write("energy.csv", energy_csv(s).as_bytes())?);
    }
    if let Some(v) = verdict {
        files.push(out.write("verdict.json", VerdictJson::from(v).to_json().as_bytes())?);
    }
    if !slopes.is_empty() {
        files.push(out.write("slopes.csv", slope_csv(slopes).as_bytes())?);
    }
    if series.is_some() || !slopes.is_empty() {
        let script = plot_script(series.is_some(), !slopes.is_empty());
        files.push(out.write("plot_run.py", script.as_bytes())?);
    }
    Ok(files)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn float_format() {
        assert_eq!(fmt_f64(1.0), "1.0000000000000000e0");
        assert_eq!(fmt_f64(f64::NAN), "NaN");
        assert_eq!(fmt_f64(f64::NEG_INFINITY), "-inf");
        assert_eq!(fmt_f64(0.1).parse::<f64>().unwrap(), 0.1);
    }

    #[test]
    fn empty_series_is_header_only() {
        let text = energy_csv(&EnergyTimeSeries::default());
        assert_eq!(text.lines().count(), 2);
        assert!(text.starts_with("# schema_version: 1\nt,l2_u,"));
    }

    #[test]
    fn csv_quoting_and_width() {
        let mut w = CsvWriter::new(&["a", "b"]);
        w.row(&["x,y".into(), "say \"hi\"".into()]).unwrap();
        assert!(w.row(&["only".into()]).is_err());
        assert!(w.finish().ends_with("\"x,y\",\"say \"\"hi\"\"\"\n"));
    }

    #[test]
    fn verdict_json_round_trip() {
        let v = Verdict {
            tag: VerdictTag::BlowupAt {
                t_est: 3.3612,
                t_last_stable: 3.3,
                kappa: f64::NAN,
            },
            peak_norm: 1e7,
            refinement_confirmed: true,
            sign_functional: 0.1 + 0.2,
        };
        let text = VerdictJson::from(&v).to_json();
        let back = VerdictJson::parse(&text).unwrap();
        assert_eq!(back.to_json(), text);
        assert_eq!(back.kappa, None);
        assert_eq!(back.sign_functional, Some(0.1 + 0.2));
        let keys: Vec<&str> = text.lines().filter_map(|l| l.trim().split('"').nth(1)).collect();
        assert_eq!(
            keys,
            [
                "schema_version",
                "tag",
                "t_est",
                "t_last_stable",
                "kappa",
                "peak_norm",
                "refinement_confirmed",
                "sign_functional"
            ]
        );
    }

    #[test]
    fn outputs_are_byte_stable() {
        let d = tempfile::tempdir().unwrap();
        let a = write_outputs(Some(&EnergyTimeSeries::default()), None, &[], d.path()).unwrap();
        let first: Vec<Vec<u8>> = a.iter().map(|p| fs::read(p).unwrap()).collect();
        let b = write_outputs(Some(&EnergyTimeSeries::default()), None, &[], d.path()).unwrap();
        let second: Vec<Vec<u8>> = b.iter().map(|p| fs::read(p).unwrap()).collect();
        assert_eq!(first, second);
        assert_eq!(a.len(), 2);
    }

    proptest! {
        #[test]
        fn float_format_round_trips(x in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO) {
            prop_assert_eq!(fmt_f64(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
    }
}
