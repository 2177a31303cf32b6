//! Result tables and their CSV / SVG emission.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use super::config::Format;
use crate::error::{Error, Result};

/// Numeric table with named columns and free-form run metadata.
///
/// Metadata never goes into the CSV body, which keeps emitted files
/// byte-identical across runs with the same config and seed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub metadata: BTreeMap<String, String>,
}

impl ResultTable {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        ResultTable {
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
            metadata: BTreeMap::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(Error::Dimension {
                what: "table row",
                expected: self.columns.len(),
                got: row.len(),
            });
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn meta(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.metadata.insert(key.to_string(), value.to_string());
        self
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.column_index(name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }

    /// First `(row, column)` holding a NaN or infinity.
    pub fn first_non_finite(&self) -> Option<(usize, &str)> {
        self.rows.iter().enumerate().find_map(|(i, r)| {
            r.iter()
                .position(|v| !v.is_finite())
                .map(|j| (i, self.columns[j].as_str()))
        })
    }
}

/// `v` with 12 significant digits, plain notation where it stays short.
pub fn format_sig12(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let exp = v.abs().log10().floor() as i32;
    let s = if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        let s = format!("{v:.decimals$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        let s = format!("{v:.11e}");
        let (mant, e) = s.split_once('e').expect("exponent form");
        let mant = if mant.contains('.') {
            mant.trim_end_matches('0').trim_end_matches('.')
        } else {
            mant
        };
        format!("{mant}e{e}")
    };
    if s == "-0" { "0".into() } else { s }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Writes `table` as `format` to `path`.
///
/// Refuses tables holding non-finite values. CSV output gets a JSON
/// metadata sidecar at `<path>.meta.json`.
pub fn emit(table: &ResultTable, format: Format, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if let Some((row, col)) = table.first_non_finite() {
        return Err(Error::domain(format!(
            "refusing to emit {}: non-finite value in row {row}, column `{col}`",
            path.display()
        )));
    }
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    match format {
        Format::Csv => {
            std::fs::write(path, to_csv(table)?).map_err(io_err(path))?;
            let meta = serde_json::to_string_pretty(&table.metadata).expect("string map serializes");
            let side = path.with_extension(
                path.extension()
                    .map(|e| format!("{}.meta.json", e.to_string_lossy()))
                    .unwrap_or_else(|| "meta.json".into()),
            );
            std::fs::write(&side, meta + "\n").map_err(io_err(&side))
        }
        Format::Svg => std::fs::write(path, to_svg(table)).map_err(io_err(path)),
    }
}

/// RFC 4180 CSV with a header row and LF line endings.
pub fn to_csv(table: &ResultTable) -> Result<String> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::domain(format!("csv: {e}"));
    w.write_record(&table.columns).map_err(csv_err)?;
    for row in &table.rows {
        w.write_record(row.iter().map(|v| format_sig12(*v))).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::domain(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

fn nice_ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = (hi - lo).max(f64::EPSILON);
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| span / s <= 6.0)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() * step;
    (0..)
        .map(|i| first + i as f64 * step)
        .take_while(|v| *v <= hi + 1e-9 * step)
        .collect()
}

fn tick_label(v: f64) -> String {
    let s = format_sig12((v * 1e6).round() / 1e6);
    if s.len() > 8 { format!("{v:.2e}") } else { s }
}

/// Line chart of the `plot.y` column against `plot.x`, one line per
/// distinct `plot.series` value. Defaults: first column against last.
pub fn to_svg(table: &ResultTable) -> String {
    let pick = |key: &str, default: usize| {
        table
            .metadata
            .get(key)
            .and_then(|name| table.column_index(name))
            .unwrap_or(default)
    };
    let ncol = table.columns.len();
    let xi = pick("plot.x", 0);
    let yi = pick("plot.y", ncol.saturating_sub(1));
    let si = table
        .metadata
        .get("plot.series")
        .and_then(|name| table.column_index(name));

    let mut series: Vec<(f64, Vec<(f64, f64)>)> = Vec::new();
    for row in &table.rows {
        let key = si.map_or(0.0, |j| row[j]);
        let pt = (row[xi], row[yi]);
        match series.iter_mut().find(|(k, _)| *k == key) {
            Some((_, pts)) => pts.push(pt),
            None => series.push((key, vec![pt])),
        }
    }

    let (w, h) = (640.0, 400.0);
    let (ml, mr, mt, mb) = (70.0, 130.0, 30.0, 50.0);
    let pts = series.iter().flat_map(|(_, p)| p.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for &(x, y) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if x0 > x1 {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 - x0 < 1e-12 {
        (x0, x1) = (x0 - 0.5, x1 + 0.5);
    }
    if y1 - y0 < 1e-12 {
        (y0, y1) = (y0 - 0.5, y1 + 0.5);
    }
    let px = |x: f64| ml + (x - x0) / (x1 - x0) * (w - ml - mr);
    let py = |y: f64| h - mb - (y - y0) / (y1 - y0) * (h - mt - mb);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let (bx, by) = (h - mb, ml);
    let _ = writeln!(
        s,
        r#"<path d="M{by},{mt} V{bx} H{}" fill="none" stroke="black"/>"#,
        w - mr
    );
    for t in nice_ticks(x0, x1) {
        let x = px(t);
        let _ = writeln!(
            s,
            r#"<line x1="{x:.2}" y1="{bx}" x2="{x:.2}" y2="{}" stroke="black"/><text x="{x:.2}" y="{}" text-anchor="middle">{}</text>"#,
            bx + 4.0,
            bx + 16.0,
            tick_label(t)
        );
    }
    for t in nice_ticks(y0, y1) {
        let y = py(t);
        let _ = writeln!(
            s,
            r#"<line x1="{}" y1="{y:.2}" x2="{by}" y2="{y:.2}" stroke="black"/><text x="{}" y="{:.2}" text-anchor="end">{}</text>"#,
            by - 4.0,
            by - 6.0,
            y + 4.0,
            tick_label(t)
        );
    }
    let xlabel = table.columns.get(xi).map_or("", String::as_str);
    let ylabel = table.columns.get(yi).map_or("", String::as_str);
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{}" text-anchor="middle" font-size="13">{}</text>"#,
        (ml + w - mr) / 2.0,
        h - 12.0,
        escape(xlabel)
    );
    let _ = writeln!(
        s,
        r#"<text transform="translate(16,{:.1}) rotate(-90)" text-anchor="middle" font-size="13">{}</text>"#,
        (mt + h - mb) / 2.0,
        escape(ylabel)
    );
    for (k, (key, pts)) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let d: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
            d.join(" ")
        );
        if let Some(j) = si {
            let ly = mt + 14.0 * k as f64;
            let _ = writeln!(
                s,
                r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">{} = {}</text>"#,
                w - mr + 10.0,
                w - mr + 30.0,
                w - mr + 34.0,
                ly + 4.0,
                escape(&table.columns[j]),
                format_sig12(*key)
            );
        }
    }
    s.push_str("</svg>\n");
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn table() -> ResultTable {
        let mut t = ResultTable::new(["x", "series", "y"]);
        for s in [1.0, 2.0] {
            for x in 0..4 {
                t.push(vec![x as f64, s, s * x as f64]).unwrap();
            }
        }
        t.meta("plot.series", "series");
        t
    }

    #[test]
    fn sig12_examples() {
        assert_eq!(format_sig12(0.0), "0");
        assert_eq!(format_sig12(-0.0), "0");
        assert_eq!(format_sig12(1.0), "1");
        assert_eq!(format_sig12(0.1), "0.1");
        assert_eq!(format_sig12(1.0 / 3.0), "0.333333333333");
        assert_eq!(format_sig12(123456.789), "123456.789");
        assert_eq!(format_sig12(1e-7), "1e-7");
        assert_eq!(format_sig12(-2.5e20), "-2.5e20");
    }

    #[test]
    fn csv_layout() {
        let csv = to_csv(&table()).unwrap();
        let lines: Vec<&str> = csv.split('\n').collect();
        assert_eq!(lines[0], "x,series,y");
        assert_eq!(lines[1], "0,1,0");
        assert_eq!(lines.len(), 10);
        assert_eq!(lines[9], "");
        assert!(!csv.contains('\r'));
    }

    #[test]
    fn header_needing_quotes() {
        let t = ResultTable::new(["a,b", "c"]);
        assert_eq!(to_csv(&t).unwrap(), "\"a,b\",c\n");
    }

    #[test]
    fn empty_table_is_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("e.csv");
        emit(&ResultTable::new(["a", "b"]), Format::Csv, &p).unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "a,b\n");
        assert!(dir.path().join("e.csv.meta.json").exists());
    }

    #[test]
    fn non_finite_is_refused_with_row() {
        let mut t = table();
        t.rows[5][2] = f64::NAN;
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.csv");
        let err = emit(&t, Format::Csv, &p).unwrap_err().to_string();
        assert!(err.contains("row 5") && err.contains("`y`"), "{err}");
        assert!(!p.exists());
    }

    #[test]
    fn svg_has_axes_and_series() {
        let svg = to_svg(&table());
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains(">x</text>") && svg.contains(">y</text>"));
    }

    #[test]
    fn row_width_checked() {
        assert!(ResultTable::new(["a"]).push(vec![1.0, 2.0]).is_err());
    }

    proptest! {
        #[test]
        fn csv_round_trips_to_1e10(vals in proptest::collection::vec(
            prop_oneof![-1e6f64..1e6, -1e-3f64..1e-3, -1e30f64..1e30], 1..40)) {
            let mut t = ResultTable::new(["v"]);
            for v in &vals {
                t.push(vec![*v]).unwrap();
            }
            let csv = to_csv(&t).unwrap();
            let mut rd = csv::Reader::from_reader(csv.as_bytes());
            for (rec, want) in rd.records().zip(&vals) {
                let got: f64 = rec.unwrap()[0].parse().unwrap();
                prop_assert!((got - want).abs() <= 1e-10 * want.abs());
            }
        }
    }
}
