use std::collections::BTreeMap;
use std::fs;
use std::io::Read;
use std::path::Path;

use crate::error::{Error, Result};
use crate::panel::{IndicatorPanel, YearMonth, RAW_SERIES};

pub const PANEL_HEADER: &str =
    "date,exchange_rate,interest_rate,intl_reserves,real_domestic_credit,inflation,oil_price,equity_index";

/// Reads a panel CSV with exactly the [`PANEL_HEADER`] columns.
///
/// Row numbers in errors are 1-based file lines (the header is line 1).
pub fn read_panel<R: Read>(reader: R) -> Result<IndicatorPanel> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::None)
        .from_reader(reader);
    let mut records = rdr.records();

    let header = match records.next() {
        Some(rec) => rec.map_err(|e| csv_error(1, "header", e))?,
        None => {
            return Err(Error::Csv {
                row: 1,
                column: "header".into(),
                message: "empty file".into(),
            })
        }
    };
    let header_text = header.iter().collect::<Vec<_>>().join(",");
    if header_text != PANEL_HEADER {
        return Err(Error::Csv {
            row: 1,
            column: "header".into(),
            message: format!("expected '{PANEL_HEADER}', found '{header_text}'"),
        });
    }

    let mut dates: Vec<YearMonth> = Vec::new();
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); RAW_SERIES.len()];
    for (i, rec) in records.enumerate() {
        let row = i + 2;
        let rec = rec.map_err(|e| csv_error(row, "*", e))?;
        if rec.len() != RAW_SERIES.len() + 1 {
            return Err(Error::Csv {
                row,
                column: "*".into(),
                message: format!("expected {} cells, found {}", RAW_SERIES.len() + 1, rec.len()),
            });
        }
        let date: YearMonth = rec[0].parse().map_err(|_| Error::Csv {
            row,
            column: "date".into(),
            message: format!("expected YYYY-MM, found '{}'", &rec[0]),
        })?;
        if let Some(prev) = dates.last() {
            if date != prev.next() {
                return Err(Error::NonConsecutiveMonths {
                    row,
                    previous: prev.to_string(),
                    current: date.to_string(),
                });
            }
        }
        dates.push(date);
        for (j, name) in RAW_SERIES.iter().enumerate() {
            let cell = &rec[j + 1];
            let value = cell
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::Csv {
                    row,
                    column: name.to_string(),
                    message: format!("expected a number, found '{cell}'"),
                })?;
            columns[j].push(value);
        }
    }

    let series: BTreeMap<String, Vec<f64>> = RAW_SERIES.iter().map(|s| s.to_string()).zip(columns).collect();
    IndicatorPanel::new(dates, series)
}

fn csv_error(row: usize, column: &str, e: csv::Error) -> Error {
    Error::Csv {
        row,
        column: column.to_string(),
        message: e.to_string(),
    }
}

pub fn load_panel(text: &str) -> Result<IndicatorPanel> {
    read_panel(text.as_bytes())
}

pub fn load_panel_file(path: impl AsRef<Path>) -> Result<IndicatorPanel> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_panel(file)
}

/// Writes the panel with shortest round-trip number formatting, so
/// `load_panel(&panel_to_csv(p)) == p`.
pub fn panel_to_csv(panel: &IndicatorPanel) -> Result<String> {
    let columns = RAW_SERIES
        .iter()
        .map(|name| panel.series(name))
        .collect::<Result<Vec<_>>>()?;
    let mut out = String::with_capacity(64 * (panel.len() + 1));
    out.push_str(PANEL_HEADER);
    out.push('\n');
    for (t, date) in panel.dates().iter().enumerate() {
        out.push_str(&date.to_string());
        for col in &columns {
            out.push(',');
            out.push_str(&col[t].to_string());
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn write_panel_file(panel: &IndicatorPanel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, panel_to_csv(panel)?).map_err(|e| Error::io(path, e))
}
