//! CSV readers for market data and portfolios, and writers for results.

use std::io::{Read, Write};
use std::path::Path;

use chrono::NaiveDate;

use crate::dual::WorstCaseDistribution;
use crate::empirical::{BcvaSample, FvaSample};
use crate::error::{Error, Result};
use crate::market::{Direction, SwapSpec, VolSurface};
use crate::metrics::ExposureProfile;

/// Fixed-point decimal with 12 significant digits.
pub fn fmt_num(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let mag = v.abs().log10().floor() as i32;
    let prec = (11 - mag).clamp(0, 40) as usize;
    let s = format!("{v:.prec$}");
    if s.contains('.') {
        let t = s.trim_end_matches('0').trim_end_matches('.');
        if t == "-0" {
            "0".into()
        } else {
            t.into()
        }
    } else {
        s
    }
}

fn data_err(file: &str, reason: impl Into<String>) -> Error {
    Error::Data {
        file: file.into(),
        reason: reason.into(),
    }
}

fn name(path: &Path) -> String {
    path.display().to_string()
}

fn open(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    let f = std::fs::File::open(path).map_err(|e| data_err(&name(path), e.to_string()))?;
    Ok(csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(f))
}

fn parse_f64(file: &str, line: u64, field: &str, s: &str) -> Result<f64> {
    s.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| {
            data_err(
                file,
                format!("line {line}: field `{field}` is not a number: {s:?}"),
            )
        })
}

fn column(file: &str, headers: &csv::StringRecord, field: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h.eq_ignore_ascii_case(field))
        .ok_or_else(|| data_err(file, format!("missing column `{field}`")))
}

/// `(tenor, value)` pairs from a `tenor_years` column and a value column.
/// Empty cells are skipped (quotes not available).
pub fn read_term_structure(path: &Path, value_column: &str) -> Result<Vec<(f64, f64)>> {
    let file = name(path);
    let mut rdr = open(path)?;
    let headers = rdr.headers()?.clone();
    let ti = column(&file, &headers, "tenor_years")?;
    let vi = column(&file, &headers, value_column)?;
    let mut out = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = k as u64 + 2;
        let v = rec.get(vi).unwrap_or("");
        if v.is_empty() {
            continue;
        }
        let t = parse_f64(&file, line, "tenor_years", rec.get(ti).unwrap_or(""))?;
        out.push((t, parse_f64(&file, line, value_column, v)?));
    }
    if out.is_empty() {
        return Err(data_err(
            &file,
            format!("no values in column `{value_column}`"),
        ));
    }
    Ok(out)
}

/// Swaption surface: an `expiry_years` column followed by one column per tenor.
pub fn read_vol_surface(path: &Path) -> Result<VolSurface> {
    let file = name(path);
    let mut rdr = open(path)?;
    let headers = rdr.headers()?.clone();
    if headers
        .get(0)
        .map(|h| h.eq_ignore_ascii_case("expiry_years"))
        != Some(true)
    {
        return Err(data_err(&file, "first column must be `expiry_years`"));
    }
    let tenors = headers
        .iter()
        .skip(1)
        .map(|h| parse_f64(&file, 1, "tenor header", h))
        .collect::<Result<Vec<_>>>()?;
    let (mut expiries, mut vols) = (Vec::new(), Vec::new());
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = k as u64 + 2;
        if rec.len() != tenors.len() + 1 {
            return Err(data_err(
                &file,
                format!("line {line}: expected {} fields", tenors.len() + 1),
            ));
        }
        expiries.push(parse_f64(&file, line, "expiry_years", &rec[0])?);
        let row = (1..rec.len())
            .map(|j| parse_f64(&file, line, &headers[j], &rec[j]))
            .collect::<Result<Vec<_>>>()?;
        vols.push(row);
    }
    Ok(VolSurface {
        expiries,
        tenors,
        vols,
    })
}

/// `key,value` rows, e.g. index name and 5y spread.
pub fn read_keyed_values(
    path: &Path,
    key_column: &str,
    value_column: &str,
) -> Result<Vec<(String, f64)>> {
    let file = name(path);
    let mut rdr = open(path)?;
    let headers = rdr.headers()?.clone();
    let (ki, vi) = (
        column(&file, &headers, key_column)?,
        column(&file, &headers, value_column)?,
    );
    rdr.records()
        .enumerate()
        .map(|(k, rec)| {
            let rec = rec?;
            Ok((
                rec[ki].to_string(),
                parse_f64(&file, k as u64 + 2, value_column, &rec[vi])?,
            ))
        })
        .collect()
}

fn frequency(s: &str) -> Option<u32> {
    match s.to_ascii_lowercase().as_str() {
        "annual" | "yearly" => Some(1),
        "semiannual" | "semi-annual" => Some(2),
        "quarterly" => Some(4),
        "monthly" => Some(12),
        _ => None,
    }
}

fn direction(s: &str) -> Option<Direction> {
    match s.to_ascii_lowercase().as_str() {
        "rec" | "receive" | "receiver" => Some(Direction::ReceiveFixed),
        "pay" | "payer" => Some(Direction::PayFixed),
        _ => None,
    }
}

/// Reads spot-starting swaps. Maturities are ACT/365F year fractions rounded
/// to a whole number of payment periods, which must lie within 7 days.
pub fn read_portfolio(path: &Path, valuation: Option<NaiveDate>) -> Result<Vec<SwapSpec>> {
    let file = name(path);
    let mut rdr = open(path)?;
    let headers = rdr.headers()?.clone();
    let idx: Vec<usize> = [
        "issued",
        "notional",
        "maturity",
        "direction",
        "coupon",
        "frequency",
    ]
    .iter()
    .map(|f| column(&file, &headers, f))
    .collect::<Result<_>>()?;
    let date = |line: u64, field: &str, s: &str| {
        NaiveDate::parse_from_str(s, "%Y-%m-%d").map_err(|_| {
            data_err(
                &file,
                format!("line {line}: field `{field}` is not a YYYY-MM-DD date: {s:?}"),
            )
        })
    };
    let mut val = valuation;
    let mut out = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = k as u64 + 2;
        let issued = date(line, "issued", &rec[idx[0]])?;
        let v = *val.get_or_insert(issued);
        if issued != v {
            return Err(data_err(
                &file,
                format!("line {line}: forward-starting swap (issued {issued}, valuation {v})"),
            ));
        }
        let notional = parse_f64(&file, line, "notional", &rec[idx[1]])?;
        let maturity = date(line, "maturity", &rec[idx[2]])?;
        let dir = direction(&rec[idx[3]]).ok_or_else(|| {
            data_err(
                &file,
                format!("line {line}: field `direction` must be Rec or Pay"),
            )
        })?;
        let coupon = parse_f64(&file, line, "coupon", &rec[idx[4]])?;
        let per_year = frequency(&rec[idx[5]]).ok_or_else(|| {
            data_err(
                &file,
                format!("line {line}: unknown `frequency` {:?}", &rec[idx[5]]),
            )
        })?;
        let days = (maturity - issued).num_days();
        let periods = (days as f64 / 365.0 * per_year as f64).round();
        let snapped_days = periods / per_year as f64 * 365.0;
        if periods < 1.0 || (snapped_days - days as f64).abs() > 7.0 {
            return Err(data_err(
                &file,
                format!("line {line}: maturity {maturity} is not a whole number of periods"),
            ));
        }
        out.push(SwapSpec {
            notional,
            maturity: periods / per_year as f64,
            direction: dir,
            coupon,
            per_year,
        });
    }
    if out.is_empty() {
        return Err(data_err(&file, "no swaps"));
    }
    Ok(out)
}

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().flexible(false).from_writer(w)
}

/// Rows `path,x_1..x_n,tau_c,tau_f`.
pub fn write_bcva_samples<W: Write>(w: W, samples: &[BcvaSample]) -> Result<()> {
    let n = samples.first().map_or(0, BcvaSample::n);
    let mut wr = writer(w);
    let mut head = vec!["path".to_string()];
    head.extend((1..=n).map(|k| format!("x{k}")));
    head.extend(["tau_c".into(), "tau_f".into()]);
    wr.write_record(&head)?;
    for (i, s) in samples.iter().enumerate() {
        let mut row = vec![i.to_string()];
        row.extend(s.x().iter().map(|&v| format!("{v:e}")));
        row.extend([s.tau_c().to_string(), s.tau_f().to_string()]);
        wr.write_record(&row)?;
    }
    wr.flush()?;
    Ok(())
}

/// Rows `path,z_1..z_n,block`.
pub fn write_fva_samples<W: Write>(w: W, samples: &[FvaSample]) -> Result<()> {
    let n = samples.first().map_or(0, FvaSample::n);
    let mut wr = writer(w);
    let mut head = vec!["path".to_string()];
    head.extend((1..=n).map(|k| format!("z{k}")));
    head.push("block".into());
    wr.write_record(&head)?;
    for (i, s) in samples.iter().enumerate() {
        let mut row = vec![i.to_string()];
        row.extend(s.z().iter().map(|&v| format!("{v:e}")));
        row.push(s.block().to_string());
        wr.write_record(&row)?;
    }
    wr.flush()?;
    Ok(())
}

fn read_rows<R: Read>(r: R, file: &str, trailing: usize) -> Result<Vec<(Vec<f64>, Vec<usize>)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(r);
    let headers = rdr.headers()?.clone();
    if headers.len() < trailing + 2 {
        return Err(data_err(file, "too few columns"));
    }
    let n = headers.len() - 1 - trailing;
    let mut out = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = k as u64 + 2;
        let x = (1..=n)
            .map(|j| parse_f64(file, line, &headers[j], &rec[j]))
            .collect::<Result<Vec<_>>>()?;
        let idx = (n + 1..n + 1 + trailing)
            .map(|j| {
                rec[j].parse::<usize>().map_err(|_| {
                    data_err(
                        file,
                        format!("line {line}: field `{}` is not an index", &headers[j]),
                    )
                })
            })
            .collect::<Result<Vec<_>>>()?;
        out.push((x, idx));
    }
    Ok(out)
}

pub fn read_bcva_samples<R: Read>(r: R, file: &str) -> Result<Vec<BcvaSample>> {
    read_rows(r, file, 2)?
        .into_iter()
        .map(|(x, i)| BcvaSample::new(x, i[0], i[1]).map_err(|e| data_err(file, e.to_string())))
        .collect()
}

pub fn read_fva_samples<R: Read>(r: R, file: &str) -> Result<Vec<FvaSample>> {
    read_rows(r, file, 1)?
        .into_iter()
        .map(|(z, i)| FvaSample::new(z, i[0]).map_err(|e| data_err(file, e.to_string())))
        .collect()
}

/// Rows `weight,origin,x_1..x_n,tau_c,tau_f`.
pub fn write_worst_case_bcva<W: Write>(w: W, wc: &WorstCaseDistribution<BcvaSample>) -> Result<()> {
    let n = wc.points.first().map_or(0, |p| p.point.n());
    let mut wr = writer(w);
    let mut head = vec!["weight".to_string(), "origin".into()];
    head.extend((1..=n).map(|k| format!("x{k}")));
    head.extend(["tau_c".into(), "tau_f".into()]);
    wr.write_record(&head)?;
    for p in &wc.points {
        let mut row = vec![fmt_num(p.weight), p.origin.to_string()];
        row.extend(p.point.x().iter().map(|&v| fmt_num(v)));
        row.extend([p.point.tau_c().to_string(), p.point.tau_f().to_string()]);
        wr.write_record(&row)?;
    }
    wr.flush()?;
    Ok(())
}

/// Rows `weight,origin,z_1..z_n,block`.
pub fn write_worst_case_fva<W: Write>(w: W, wc: &WorstCaseDistribution<FvaSample>) -> Result<()> {
    let n = wc.points.first().map_or(0, |p| p.point.n());
    let mut wr = writer(w);
    let mut head = vec!["weight".to_string(), "origin".into()];
    head.extend((1..=n).map(|k| format!("z{k}")));
    head.push("block".into());
    wr.write_record(&head)?;
    for p in &wc.points {
        let mut row = vec![fmt_num(p.weight), p.origin.to_string()];
        row.extend(p.point.z().iter().map(|&v| fmt_num(v)));
        row.push(p.point.block().to_string());
        wr.write_record(&row)?;
    }
    wr.flush()?;
    Ok(())
}

/// `date,EE,PFE,EffEE` per row, then `#EPE`, `#EffEPE`, `#MaxPFE` trailer rows.
pub fn write_profile<W: Write>(mut w: W, p: &ExposureProfile) -> Result<()> {
    writeln!(w, "date,EE,PFE,EffEE")?;
    for k in 0..p.times.len() {
        writeln!(
            w,
            "{},{},{},{}",
            fmt_num(p.times[k]),
            fmt_num(p.ee[k]),
            fmt_num(p.pfe[k]),
            fmt_num(p.eff_ee[k])
        )?;
    }
    writeln!(w, "#EPE,{}", fmt_num(p.epe))?;
    writeln!(w, "#EffEPE,{}", fmt_num(p.eff_epe))?;
    writeln!(w, "#MaxPFE,{}", fmt_num(p.max_pfe))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(fmt_num(0.0), "0");
        assert_eq!(fmt_num(-0.0), "0");
        assert_eq!(fmt_num(1.0), "1");
        assert_eq!(fmt_num(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt_num(-123456.7891234567), "-123456.789123");
        assert_eq!(fmt_num(2.5e-7), "0.00000025");
        assert_eq!(fmt_num(28.828), "28.828");
    }

    #[test]
    fn sample_round_trip() {
        let s = vec![
            BcvaSample::new(vec![0.1, -1.0 / 3.0], 2, 0).unwrap(),
            BcvaSample::new(vec![1e-300, 7.0], 0, 1).unwrap(),
        ];
        let mut buf = Vec::new();
        write_bcva_samples(&mut buf, &s).unwrap();
        assert_eq!(read_bcva_samples(&buf[..], "mem").unwrap(), s);
        let f = vec![FvaSample::new(vec![0.25, -2.0], 1).unwrap()];
        let mut buf = Vec::new();
        write_fva_samples(&mut buf, &f).unwrap();
        assert_eq!(read_fva_samples(&buf[..], "mem").unwrap(), f);
    }

    #[test]
    fn portfolio_maturities_snap_to_periods() {
        let dir = std::env::temp_dir().join(format!("rxva-io-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let p = dir.join("p.csv");
        std::fs::write(
            &p,
            "issued,notional,maturity,direction,coupon,frequency\n\
             2020-04-20,10,2025-04-20,Rec,0.0047,quarterly\n\
             2020-04-20,10,2021-04-20,Pay,0.0051,quarterly\n",
        )
        .unwrap();
        let s = read_portfolio(&p, None).unwrap();
        assert_eq!(s[0].maturity, 5.0);
        assert_eq!(s[1].direction, Direction::PayFixed);
        std::fs::write(&p, "issued,notional,maturity,direction,coupon,frequency\n2020-04-20,10,2021-06-01,Rec,0.01,quarterly\n")
            .unwrap();
        assert!(matches!(read_portfolio(&p, None), Err(Error::Data { .. })));
        std::fs::remove_dir_all(&dir).ok();
    }
}
