use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::evaluation::RateRecord;
use crate::precoding::Scheme;

pub const RATES_HEADER: [&str; 4] = ["drop_id", "ue_id", "scheme", "rate_bits_per_hz"];
pub const CDF_HEADER: [&str; 2] = ["rate_bits_per_hz", "cdf"];

/// Decimal rendering with 10 significant digits.
pub fn format_sig10(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { "0".into() } else { x.to_string() };
    }
    let sci = format!("{x:.9e}");
    let exp: i32 = sci[sci.find('e').expect("exponent") + 1..].parse().expect("integer exponent");
    if (-5..=15).contains(&exp) {
        format!("{:.*}", (9 - exp).max(0) as usize, x)
    } else {
        sci
    }
}

fn writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out)
}

pub fn write_rates<W: Write>(out: W, records: &[RateRecord]) -> Result<()> {
    let mut w = writer(out);
    w.write_record(RATES_HEADER)?;
    for r in records {
        w.write_record([
            r.drop_id.to_string(),
            r.ue_id.to_string(),
            r.scheme.to_string(),
            format_sig10(r.rate_bits),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Deserialize)]
struct RateRow {
    drop_id: usize,
    ue_id: usize,
    scheme: Scheme,
    rate_bits_per_hz: f64,
}

pub fn read_rates<R: Read>(input: R) -> Result<Vec<RateRecord>> {
    let mut rd = csv::Reader::from_reader(input);
    let header = rd.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != RATES_HEADER {
        return Err(invalid(format!("unexpected rates header {:?}", header.iter().collect::<Vec<_>>())));
    }
    rd.deserialize::<RateRow>()
        .map(|row| {
            let row = row?;
            Ok(RateRecord {
                drop_id: row.drop_id,
                ue_id: row.ue_id,
                scheme: row.scheme,
                rate_bits: row.rate_bits_per_hz,
            })
        })
        .collect()
}

pub fn write_cdf<W: Write>(out: W, cdf: &[(f64, f64)]) -> Result<()> {
    let mut w = writer(out);
    w.write_record(CDF_HEADER)?;
    for (rate, value) in cdf {
        w.write_record([format_sig10(*rate), format_sig10(*value)])?;
    }
    w.flush()?;
    Ok(())
}

/// `dir/rates.csv` -> `dir/rates.cdf.<scheme>.csv`
pub fn cdf_path(rates: &Path, out_dir: Option<&Path>, scheme: Scheme) -> PathBuf {
    let stem = rates.file_stem().and_then(|s| s.to_str()).unwrap_or("rates");
    let dir = out_dir
        .map(Path::to_path_buf)
        .or_else(|| rates.parent().map(Path::to_path_buf))
        .unwrap_or_default();
    dir.join(format!("{stem}.cdf.{scheme}.csv"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeSummary {
    pub count: usize,
    pub percentiles: BTreeMap<String, f64>,
    pub mean_rate: f64,
    pub mse_objective: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub drops: usize,
    pub realizations_per_drop: usize,
    pub pi_samples: usize,
    pub master_seed: u64,
    pub total_realizations: usize,
    pub skipped_realizations: usize,
    pub schemes: BTreeMap<Scheme, SchemeSummary>,
}

pub fn write_summary<W: Write>(mut out: W, summary: &Summary) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, summary)?;
    out.write_all(b"\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ten_significant_digits() {
        assert_eq!(format_sig10(0.0), "0");
        assert_eq!(format_sig10(1.0), "1.000000000");
        assert_eq!(format_sig10(3.14159265358979), "3.141592654");
        assert_eq!(format_sig10(12.3456789012345), "12.34567890");
        assert_eq!(format_sig10(0.000123456789012), "0.0001234567890");
        assert_eq!(format_sig10(9.99999999996), "10.00000000");
        assert_eq!(format_sig10(1.5e-9), "1.500000000e-9");
    }

    #[test]
    fn rates_round_trip() {
        let records = vec![
            RateRecord { drop_id: 0, ue_id: 1, scheme: Scheme::TeamMmse, rate_bits: 2.5 },
            RateRecord { drop_id: 3, ue_id: 0, scheme: Scheme::StructureAware, rate_bits: 0.123456789012 },
        ];
        let mut buf = Vec::new();
        write_rates(&mut buf, &records).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(
            text,
            "drop_id,ue_id,scheme,rate_bits_per_hz\n0,1,team_mmse,2.500000000\n3,0,structure_aware,0.1234567890\n"
        );
        let back = read_rates(buf.as_slice()).unwrap();
        assert_eq!(back[0], records[0]);
        assert_eq!(back[1].scheme, Scheme::StructureAware);
        assert!((back[1].rate_bits - 0.123456789).abs() < 1e-12);
    }

    #[test]
    fn bad_header_is_rejected() {
        assert!(read_rates("a,b,c,d\n1,2,team_mmse,3\n".as_bytes()).is_err());
        assert!(read_rates("drop_id,ue_id,scheme,rate_bits_per_hz\n1,2,zf,3\n".as_bytes()).is_err());
    }

    #[test]
    fn cdf_paths() {
        let p = cdf_path(Path::new("data/desk/rates.csv"), None, Scheme::Naive);
        assert_eq!(p, PathBuf::from("data/desk/rates.cdf.naive.csv"));
        let p = cdf_path(Path::new("rates.csv"), Some(Path::new("x")), Scheme::TeamMmse);
        assert_eq!(p, PathBuf::from("x/rates.cdf.team_mmse.csv"));
    }
}
