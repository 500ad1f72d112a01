//! CSV ingestion and emission.
//!
//! Formats (header row required, UTF-8, `.` decimal separator):
//!
//! - rates: `image_id, rate_1, …, rate_d`
//! - pairs: `oddball_id, distractor_id`
//! - times: `pair_id, oddball_id, distractor_id, subject, time_s`
//! - counts: `image_id, trial, count_1, …, count_d` (one row per slot)
//!
//! Floats are written in shortest round-trip form, so re-reading any output
//! reproduces the in-memory values exactly.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::poisson::RateVector;
use crate::stats::GroupSample;
use crate::{Error, Result};

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::ingest(format!("{}: {e}", path.display())))
}

fn reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r)
}

fn check_header(headers: &csv::StringRecord, first: &[&str], what: &str) -> Result<()> {
    for (i, want) in first.iter().enumerate() {
        if headers.get(i) != Some(*want) {
            return Err(Error::ingest(format!(
                "{what} header column {} must be `{want}`, found {:?}",
                i + 1,
                headers.get(i).unwrap_or("")
            )));
        }
    }
    Ok(())
}

fn parse_f64(field: &str, line: u64, column: &str) -> Result<f64> {
    field
        .parse::<f64>()
        .map_err(|_| Error::ingest(format!("line {line}: column {column}: `{field}` is not a number")))
}

fn line_of(rec: &csv::StringRecord) -> u64 {
    rec.position().map_or(0, |p| p.line())
}

/// One image's identifier and rate vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageRates {
    pub image_id: String,
    pub rates: RateVector,
}

/// Read a rates table; ids must be unique and every row must have the same
/// neuron count.
pub fn read_rates<R: Read>(r: R) -> Result<Vec<ImageRates>> {
    let mut rdr = reader(r);
    let headers = rdr.headers()?.clone();
    check_header(&headers, &["image_id"], "rates")?;
    let d = headers.len() - 1;
    if d == 0 {
        return Err(Error::ingest("rates table has no rate columns"));
    }
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = line_of(&rec);
        let id = rec[0].to_string();
        if !seen.insert(id.clone()) {
            return Err(Error::ingest(format!("line {line}: duplicate image id `{id}`")));
        }
        let rates = (1..=d)
            .map(|m| parse_f64(&rec[m], line, &headers[m]))
            .collect::<Result<Vec<_>>>()?;
        let rates = RateVector::new(rates).map_err(|e| Error::ingest(format!("line {line}: {e}")))?;
        out.push(ImageRates { image_id: id, rates });
    }
    if out.is_empty() {
        return Err(Error::ingest("rates table has no rows"));
    }
    Ok(out)
}

pub fn read_rates_file(path: &Path) -> Result<Vec<ImageRates>> {
    read_rates(open(path)?)
}

pub fn write_rates<W: Write>(w: W, images: &[ImageRates]) -> Result<()> {
    let d = images.first().map_or(0, |i| i.rates.dim());
    let mut wtr = csv::Writer::from_writer(w);
    let mut header = vec!["image_id".to_string()];
    header.extend((1..=d).map(|m| format!("rate_{m}")));
    wtr.write_record(&header)?;
    for img in images {
        let mut row = vec![img.image_id.clone()];
        row.extend(img.rates.rates().iter().map(|r| format_f64(*r)));
        wtr.write_record(&row)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Shortest decimal representation that parses back to the same value.
pub fn format_f64(v: f64) -> String {
    format!("{v:?}")
}

/// Look up an image by id.
pub fn rates_by_id(images: &[ImageRates]) -> HashMap<&str, &RateVector> {
    images.iter().map(|i| (i.image_id.as_str(), &i.rates)).collect()
}

/// Ordered image pair: the oddball shown among copies of the distractor.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ImagePair {
    pub oddball_id: String,
    pub distractor_id: String,
}

pub fn read_pairs<R: Read>(r: R) -> Result<Vec<ImagePair>> {
    let mut rdr = reader(r);
    check_header(&rdr.headers()?.clone(), &["oddball_id", "distractor_id"], "pairs")?;
    let pairs = rdr.deserialize().collect::<std::result::Result<Vec<ImagePair>, _>>()?;
    if pairs.is_empty() {
        return Err(Error::ingest("pair list is empty"));
    }
    Ok(pairs)
}

pub fn read_pairs_file(path: &Path) -> Result<Vec<ImagePair>> {
    read_pairs(open(path)?)
}

pub fn write_pairs<W: Write>(w: W, pairs: &[ImagePair]) -> Result<()> {
    write_rows(w, pairs)
}

/// One measured decision time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeRecord {
    pub pair_id: String,
    pub oddball_id: String,
    pub distractor_id: String,
    pub subject: String,
    pub time_s: f64,
}

pub fn read_times<R: Read>(r: R) -> Result<Vec<TimeRecord>> {
    let mut rdr = reader(r);
    check_header(
        &rdr.headers()?.clone(),
        &["pair_id", "oddball_id", "distractor_id", "subject", "time_s"],
        "times",
    )?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = line_of(&rec);
        let t: TimeRecord = rec
            .deserialize(None)
            .map_err(|e| Error::ingest(format!("line {line}: {e}")))?;
        if !(t.time_s.is_finite() && t.time_s > 0.0) {
            return Err(Error::ingest(format!("line {line}: time {} is not positive", t.time_s)));
        }
        out.push(t);
    }
    if out.is_empty() {
        return Err(Error::ingest("times table has no rows"));
    }
    Ok(out)
}

pub fn read_times_file(path: &Path) -> Result<Vec<TimeRecord>> {
    read_times(open(path)?)
}

pub fn write_times<W: Write>(w: W, records: &[TimeRecord]) -> Result<()> {
    write_rows(w, records)
}

/// Group times by `pair_id`, in order of first appearance.
pub fn group_times(records: &[TimeRecord]) -> Result<Vec<GroupSample>> {
    let mut order: Vec<&str> = Vec::new();
    let mut by_pair: HashMap<&str, (&TimeRecord, Vec<f64>)> = HashMap::new();
    for r in records {
        let entry = by_pair.entry(&r.pair_id).or_insert_with(|| {
            order.push(&r.pair_id);
            (r, Vec::new())
        });
        if entry.0.oddball_id != r.oddball_id || entry.0.distractor_id != r.distractor_id {
            return Err(Error::ingest(format!(
                "pair {} is listed with images ({}, {}) and ({}, {})",
                r.pair_id, entry.0.oddball_id, entry.0.distractor_id, r.oddball_id, r.distractor_id
            )));
        }
        entry.1.push(r.time_s);
    }
    order
        .into_iter()
        .map(|p| {
            let (first, times) = by_pair.remove(p).expect("grouped pair");
            GroupSample::new(p, &first.oddball_id, &first.distractor_id, times)
        })
        .collect()
}

/// Per-image spike counts from repeated slots of equal duration.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageCounts {
    pub image_id: String,
    /// `slots[k][m]`: count of neuron `m` in slot `k`.
    pub slots: Vec<Vec<u64>>,
}

pub fn read_counts<R: Read>(r: R) -> Result<Vec<ImageCounts>> {
    let mut rdr = reader(r);
    let headers = rdr.headers()?.clone();
    check_header(&headers, &["image_id", "trial"], "counts")?;
    let d = headers.len() - 2;
    if d == 0 {
        return Err(Error::ingest("counts table has no count columns"));
    }
    let mut order: Vec<String> = Vec::new();
    let mut by_image: HashMap<String, Vec<Vec<u64>>> = HashMap::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = line_of(&rec);
        let counts = (2..d + 2)
            .map(|m| {
                rec[m].parse::<u64>().map_err(|_| {
                    Error::ingest(format!(
                        "line {line}: column {}: `{}` is not a count",
                        &headers[m], &rec[m]
                    ))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let id = rec[0].to_string();
        by_image
            .entry(id.clone())
            .or_insert_with(|| {
                order.push(id);
                Vec::new()
            })
            .push(counts);
    }
    if order.is_empty() {
        return Err(Error::ingest("counts table has no rows"));
    }
    Ok(order
        .into_iter()
        .map(|id| {
            let slots = by_image.remove(&id).expect("grouped image");
            ImageCounts { image_id: id, slots }
        })
        .collect())
}

pub fn read_counts_file(path: &Path) -> Result<Vec<ImageCounts>> {
    read_counts(open(path)?)
}

/// Write serialisable rows with a header derived from the field names.
pub fn write_rows<W: Write, T: Serialize>(w: W, rows: &[T]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    for r in rows {
        wtr.serialize(r)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Read rows written by [`write_rows`].
pub fn read_rows<R: Read, T: for<'de> Deserialize<'de>>(r: R) -> Result<Vec<T>> {
    reader(r)
        .deserialize()
        .collect::<std::result::Result<Vec<T>, _>>()
        .map_err(Error::from)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rates_round_trip() {
        let images = vec![
            ImageRates {
                image_id: "a".into(),
                rates: RateVector::new(vec![0.1, 2.0 / 3.0, 1e-7]).unwrap(),
            },
            ImageRates {
                image_id: "b".into(),
                rates: RateVector::new(vec![5.0, 0.0, 123.456789]).unwrap(),
            },
        ];
        let mut buf = Vec::new();
        write_rates(&mut buf, &images).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("image_id,rate_1,rate_2,rate_3\n"));
        assert_eq!(read_rates(buf.as_slice()).unwrap(), images);
    }

    #[test]
    fn rates_errors_name_the_row() {
        let bad = "image_id,rate_1\na,1.0\nb,x\n";
        let e = read_rates(bad.as_bytes()).unwrap_err().to_string();
        assert!(e.contains("line 3"), "{e}");
        let dup = "image_id,rate_1\na,1.0\na,2.0\n";
        assert!(read_rates(dup.as_bytes())
            .unwrap_err()
            .to_string()
            .contains("duplicate"));
        let ragged = "image_id,rate_1,rate_2\na,1.0\n";
        assert!(read_rates(ragged.as_bytes()).is_err());
        assert!(matches!(
            read_rates("id,rate_1\na,1\n".as_bytes()),
            Err(Error::Ingest(_))
        ));
        assert!(read_rates("image_id,rate_1\na,-1\n".as_bytes()).is_err());
    }

    #[test]
    fn times_round_trip_and_grouping() {
        let recs: Vec<TimeRecord> = (0..6)
            .map(|j| TimeRecord {
                pair_id: format!("p{}", j % 2),
                oddball_id: format!("k{}", j % 2),
                distractor_id: "l".into(),
                subject: format!("s{j}"),
                time_s: 0.1 + j as f64 / 7.0,
            })
            .collect();
        let mut buf = Vec::new();
        write_times(&mut buf, &recs).unwrap();
        assert!(String::from_utf8(buf.clone())
            .unwrap()
            .starts_with("pair_id,oddball_id,distractor_id,subject,time_s\n"));
        let back = read_times(buf.as_slice()).unwrap();
        assert_eq!(back, recs);
        let groups = group_times(&back).unwrap();
        assert_eq!(groups.len(), 2);
        assert_eq!(groups[0].pair_id, "p0");
        assert_eq!(groups[1].times.len(), 3);
    }

    #[test]
    fn inconsistent_pair_images_rejected() {
        let text = "pair_id,oddball_id,distractor_id,subject,time_s\np,a,b,s,1.0\np,a,c,s,1.0\n";
        let recs = read_times(text.as_bytes()).unwrap();
        assert!(group_times(&recs).is_err());
    }

    #[test]
    fn empty_pairs_rejected() {
        assert!(matches!(
            read_pairs("oddball_id,distractor_id\n".as_bytes()),
            Err(Error::Ingest(_))
        ));
        let p = read_pairs("oddball_id,distractor_id\na,b\n".as_bytes()).unwrap();
        assert_eq!(p[0].distractor_id, "b");
    }

    #[test]
    fn counts_grouped_by_image() {
        let text = "image_id,trial,count_1,count_2\na,1,3,4\nb,1,0,1\na,2,5,6\n";
        let c = read_counts(text.as_bytes()).unwrap();
        assert_eq!(c[0].slots, vec![vec![3, 4], vec![5, 6]]);
        assert_eq!(c[1].image_id, "b");
        assert!(read_counts("image_id,trial,count_1\na,1,2.5\n".as_bytes()).is_err());
    }
}
