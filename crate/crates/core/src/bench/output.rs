use std::io::{self, Write};

use crate::bench::{EnergyMap, Profile, ResultRow};
use crate::error::{Error, Result};

pub const CSV_HEADER: &str =
    "method,selector,scene,target,L,snr_db,rmse_m,crlb_m,n_selected,evaluations,wall_ms,seed,status";
pub const PROFILE_COLUMNS: &str = "select_ms,ins_ms";

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Write rows as CSV. Floats use the shortest round-trip form.
pub fn write_csv<W: Write>(mut out: W, rows: &[ResultRow], profile: bool) -> io::Result<()> {
    if profile {
        writeln!(out, "{CSV_HEADER},{PROFILE_COLUMNS}")?;
    } else {
        writeln!(out, "{CSV_HEADER}")?;
    }
    for r in rows {
        write!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.method,
            r.selector,
            r.scene,
            r.target,
            r.l,
            r.snr_db,
            opt(r.rmse_m),
            opt(r.crlb_m),
            r.n_selected,
            r.evaluations,
            r.wall_ms,
            r.seed,
            r.status
        )?;
        if profile {
            let p = r.profile.as_ref();
            write!(
                out,
                ",{},{}",
                opt(p.map(|p| p.select_ms)),
                opt(p.map(|p| p.ins_ms))
            )?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Read back what [`write_csv`] produced.
pub fn parse_csv(text: &str) -> Result<Vec<ResultRow>> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Parameter("empty CSV".into()))?;
    let profile = if header == CSV_HEADER {
        false
    } else if header == format!("{CSV_HEADER},{PROFILE_COLUMNS}") {
        true
    } else {
        return Err(Error::Parameter(format!("unexpected CSV header: {header}")));
    };
    let width = if profile { 15 } else { 13 };
    lines
        .enumerate()
        .map(|(i, line)| {
            let bad = |what: &str| Error::Parameter(format!("CSV line {}: bad {what}", i + 2));
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != width {
                return Err(bad("column count"));
            }
            let num = |s: &str, what: &str| s.parse::<f64>().map_err(|_| bad(what));
            let opt_num = |s: &str, what: &str| -> Result<Option<f64>> {
                if s.is_empty() {
                    Ok(None)
                } else {
                    num(s, what).map(Some)
                }
            };
            let profile = if profile {
                match (opt_num(f[13], "select_ms")?, opt_num(f[14], "ins_ms")?) {
                    (Some(select_ms), Some(ins_ms)) => Some(Profile { select_ms, ins_ms }),
                    _ => None,
                }
            } else {
                None
            };
            Ok(ResultRow {
                method: f[0].parse()?,
                selector: f[1].parse()?,
                scene: f[2].to_string(),
                target: f[3].to_string(),
                l: f[4].parse().map_err(|_| bad("L"))?,
                snr_db: num(f[5], "snr_db")?,
                rmse_m: opt_num(f[6], "rmse_m")?,
                crlb_m: opt_num(f[7], "crlb_m")?,
                n_selected: f[8].parse().map_err(|_| bad("n_selected"))?,
                evaluations: f[9].parse().map_err(|_| bad("evaluations"))?,
                wall_ms: num(f[10], "wall_ms")?,
                seed: f[11].parse().map_err(|_| bad("seed"))?,
                status: f[12].to_string(),
                profile,
            })
        })
        .collect()
}

/// Plain-text greymap of a cost map: 255 at the lowest cost, 0 at the
/// highest. Near-field cells are written as 0. The first row is the top
/// (largest y) of the scene.
pub fn write_pgm<W: Write>(mut out: W, map: &EnergyMap) -> io::Result<()> {
    let (lo, hi) = map
        .values
        .iter()
        .flatten()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(*v), hi.max(*v)));
    writeln!(out, "P2")?;
    writeln!(out, "# cost map, near-field cells set to 0")?;
    writeln!(out, "{} {}", map.nx, map.ny)?;
    writeln!(out, "255")?;
    for row in (0..map.ny).rev() {
        let line: Vec<String> = (0..map.nx)
            .map(|col| match map.get(col, row) {
                None => 0,
                Some(_) if !(hi > lo) => 255,
                Some(v) => (255.0 * (hi - v) / (hi - lo)).round() as u8,
            })
            .map(|v| v.to_string())
            .collect();
        writeln!(out, "{}", line.join(" "))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::Method;
    use crate::geometry::Rect;
    use crate::selection::SelectionMethod;

    fn row(seed: u64) -> ResultRow {
        ResultRow {
            method: Method::Hml,
            selector: SelectionMethod::Esfe,
            scene: "park".into(),
            target: "speaker".into(),
            l: 12,
            snr_db: f64::INFINITY,
            rmse_m: Some(0.1 + 0.2),
            crlb_m: None,
            n_selected: 4,
            evaluations: 1234,
            wall_ms: 1.0 / 3.0,
            seed,
            status: "crlb_unavailable: singular".into(),
            profile: Some(Profile {
                select_ms: 2.5,
                ins_ms: 1e-7,
            }),
        }
    }

    #[test]
    fn csv_round_trip() {
        let rows = vec![row(0), row(7)];
        let mut buf = Vec::new();
        write_csv(&mut buf, &rows, true).unwrap();
        let back = parse_csv(std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!(back, rows);
    }

    #[test]
    fn empty_csv_is_header_only() {
        let mut buf = Vec::new();
        write_csv(&mut buf, &[], false).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), format!("{CSV_HEADER}\n"));
    }

    #[test]
    fn flat_map_is_all_white() {
        let map = EnergyMap {
            bounds: Rect::from_size(2.0, 1.0),
            cell: 0.5,
            nx: 4,
            ny: 2,
            values: vec![Some(3.0); 8],
        };
        let mut buf = Vec::new();
        write_pgm(&mut buf, &map).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let pixels: Vec<&str> = text.lines().skip(4).flat_map(|l| l.split(' ')).collect();
        assert_eq!(pixels, vec!["255"; 8]);
    }

    #[test]
    fn pgm_top_row_is_high_y() {
        let map = EnergyMap {
            bounds: Rect::from_size(1.0, 2.0),
            cell: 1.0,
            nx: 1,
            ny: 2,
            values: vec![Some(0.0), None],
        };
        let mut buf = Vec::new();
        write_pgm(&mut buf, &map).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let rows: Vec<&str> = text.lines().skip(4).collect();
        assert_eq!(rows, vec!["0", "255"]);
    }
}
