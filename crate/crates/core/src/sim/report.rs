//! Post-processing of FER records: series, dB gaps, slopes and a curve sheet.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::fer::FerRecord;
use crate::error::{Error, Result};

pub const SERIES_SCHEMA: &str = "afdm-lab/fer-series/v1";
pub const GAP_SCHEMA: &str = "afdm-lab/fer-gaps/v1";

/// One FER curve, sorted by SNR.
#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub name: String,
    pub fingerprint: String,
    /// `(snr_db, fer, ber)`.
    pub points: Vec<(f64, f64, f64)>,
}

impl Series {
    pub fn new(name: &str, points: Vec<(f64, f64)>) -> Self {
        let mut points: Vec<(f64, f64, f64)> = points.into_iter().map(|(s, f)| (s, f, f64::NAN)).collect();
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        Self {
            name: name.into(),
            fingerprint: String::new(),
            points,
        }
    }

    /// SNR at which the curve crosses `target`, by linear interpolation of
    /// `log10(FER)` between the first bracketing pair of points.
    pub fn snr_at(&self, target: f64) -> Option<f64> {
        if !(target > 0.0) {
            return None;
        }
        let lt = target.log10();
        for w in self.points.windows(2) {
            let (s0, f0, _) = w[0];
            let (s1, f1, _) = w[1];
            if f0 >= target && f1 <= target && f0 > 0.0 {
                if f1 <= 0.0 {
                    // The upper point saw no errors; the crossing is not resolvable.
                    return None;
                }
                let (l0, l1) = (f0.log10(), f1.log10());
                if l0 == l1 {
                    return Some(s0);
                }
                return Some(s0 + (lt - l0) / (l1 - l0) * (s1 - s0));
            }
        }
        None
    }

    /// Slope of `log10(FER)` per dB over the two highest-SNR points with errors.
    pub fn high_snr_slope(&self) -> Option<f64> {
        let pts: Vec<&(f64, f64, f64)> = self.points.iter().filter(|p| p.1 > 0.0).collect();
        let [.., a, b] = pts.as_slice() else {
            return None;
        };
        Some((b.1.log10() - a.1.log10()) / (b.0 - a.0))
    }
}

/// Groups records by fingerprint, keeping first-seen order.
pub fn group_series(records: &[FerRecord]) -> Result<Vec<Series>> {
    if records.is_empty() {
        return Err(Error::InvalidArgument("no FER records to report".into()));
    }
    let mut order: Vec<String> = Vec::new();
    let mut by_fp: BTreeMap<String, Series> = BTreeMap::new();
    for r in records {
        let s = by_fp.entry(r.fingerprint.clone()).or_insert_with(|| {
            order.push(r.fingerprint.clone());
            Series {
                name: r.series.clone(),
                fingerprint: r.fingerprint.clone(),
                points: Vec::new(),
            }
        });
        s.points.retain(|p| p.0 != r.snr_db);
        s.points.push((r.snr_db, r.fer, r.ber));
    }
    // Two configurations can share a label; disambiguate with the fingerprint.
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for s in by_fp.values() {
        *counts.entry(s.name.clone()).or_default() += 1;
    }
    let mut out = Vec::with_capacity(order.len());
    for fp in order {
        let mut s = by_fp.remove(&fp).expect("grouped");
        if counts[&s.name] > 1 {
            s.name = format!("{}@{}", s.name, &s.fingerprint[..8.min(s.fingerprint.len())]);
        }
        s.points.sort_by(|a, b| a.0.total_cmp(&b.0));
        out.push(s);
    }
    Ok(out)
}

/// `SNR_b(target) - SNR_a(target)`: positive when `b` needs more SNR.
pub fn gap_db(a: &Series, b: &Series, target: f64) -> Option<f64> {
    Some(b.snr_at(target)? - a.snr_at(target)?)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Gap {
    pub reference: String,
    pub other: String,
    pub target_fer: f64,
    pub gap_db: Option<f64>,
}

/// Gaps of every later series against every earlier one.
pub fn all_gaps(series: &[Series], target: f64) -> Vec<Gap> {
    let mut out = Vec::new();
    for (i, a) in series.iter().enumerate() {
        for b in &series[i + 1..] {
            out.push(Gap {
                reference: a.name.clone(),
                other: b.name.clone(),
                target_fer: target,
                gap_db: gap_db(a, b, target),
            });
        }
    }
    out
}

pub fn series_csv(series: &[Series]) -> String {
    let mut out = format!("# schema={SERIES_SCHEMA}\nseries,fingerprint,snr_db,fer,ber,slope_per_db\n");
    for s in series {
        let slope = s.high_snr_slope().map_or(String::new(), |v| format!("{v:.6}"));
        for &(snr, fer, ber) in &s.points {
            let ber = if ber.is_nan() { String::new() } else { format!("{ber:e}") };
            let _ = writeln!(out, "{},{},{},{:e},{},{}", s.name, s.fingerprint, snr, fer, ber, slope);
        }
    }
    out
}

pub fn gaps_csv(gaps: &[Gap]) -> String {
    let mut out = format!("# schema={GAP_SCHEMA}\n# gap_db = snr(other) - snr(reference) at target_fer\nreference,other,target_fer,gap_db\n");
    for g in gaps {
        let v = g.gap_db.map_or("unresolved".to_string(), |v| format!("{v:.4}"));
        let _ = writeln!(out, "{},{},{:e},{}", g.reference, g.other, g.target_fer, v);
    }
    out
}

const PALETTE: &[&str] = &["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"];

/// FER-vs-E_b/N0 curve sheet with a logarithmic FER axis.
pub fn curve_svg(series: &[Series], title: &str) -> String {
    let (w, h) = (720.0, 480.0);
    let (left, right, top, bottom) = (70.0, 200.0, 40.0, 50.0);
    let pw = w - left - right;
    let ph = h - top - bottom;
    let pts = series.iter().flat_map(|s| s.points.iter());
    let (mut x0, mut x1) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut dmin = 0i32;
    for &(snr, fer, _) in pts {
        x0 = x0.min(snr);
        x1 = x1.max(snr);
        if fer > 0.0 {
            dmin = dmin.min(fer.log10().floor() as i32);
        }
    }
    if !x0.is_finite() {
        x0 = 0.0;
        x1 = 1.0;
    }
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    let dmin = dmin.min(-1);
    let sx = |v: f64| left + (v - x0) / (x1 - x0) * pw;
    let sy = |fer: f64| top + (-fer.max(10f64.powi(dmin)).log10()) / (-dmin as f64) * ph;

    let mut svg = String::new();
    let _ = writeln!(svg, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(svg, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(svg, r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{}</text>"#, left + pw / 2.0, xml_escape(title));
    for d in dmin..=0 {
        let y = sy(10f64.powi(d));
        let _ = writeln!(svg, r##"<line x1="{left}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#ddd"/>"##, left + pw);
        let _ = writeln!(svg, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">1e{d}</text>"#, left - 6.0, y + 4.0);
    }
    let ticks = 6;
    for i in 0..=ticks {
        let v = x0 + (x1 - x0) * i as f64 / ticks as f64;
        let x = sx(v);
        let _ = writeln!(svg, r##"<line x1="{x:.1}" y1="{top}" x2="{x:.1}" y2="{:.1}" stroke="#eee"/>"##, top + ph);
        let _ = writeln!(svg, r#"<text x="{x:.1}" y="{:.1}" text-anchor="middle">{v:.1}</text>"#, top + ph + 18.0);
    }
    let _ = writeln!(svg, r#"<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#);
    let _ = writeln!(svg, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">Eb/N0 (dB)</text>"#, left + pw / 2.0, h - 10.0);
    let _ = writeln!(svg, r#"<text x="16" y="{:.1}" transform="rotate(-90 16 {:.1})" text-anchor="middle">FER</text>"#, top + ph / 2.0, top + ph / 2.0);
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let path: Vec<String> = s
            .points
            .iter()
            .filter(|p| p.1 > 0.0)
            .map(|p| format!("{:.1},{:.1}", sx(p.0), sy(p.1)))
            .collect();
        if !path.is_empty() {
            let _ = writeln!(svg, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#, path.join(" "));
            for p in &path {
                let (x, y) = p.split_once(',').expect("formatted pair");
                let _ = writeln!(svg, r#"<circle cx="{x}" cy="{y}" r="3" fill="{color}"/>"#);
            }
        }
        let ly = top + 14.0 + 18.0 * i as f64;
        let lx = left + pw + 12.0;
        let _ = writeln!(svg, r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#, lx + 20.0);
        let _ = writeln!(svg, r#"<text x="{}" y="{}">{}</text>"#, lx + 26.0, ly + 4.0, xml_escape(&s.name));
    }
    svg.push_str("</svg>\n");
    svg
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn waterfall(offset: f64) -> Vec<(f64, f64)> {
        (0..8).map(|i| {
            let snr = i as f64 * 2.0;
            (snr + offset, 10f64.powf(-0.25 * snr))
        }).collect()
    }

    #[test]
    fn identical_series_have_zero_gap() {
        let a = Series::new("a", waterfall(0.0));
        assert_eq!(gap_db(&a, &a.clone(), 1e-2), Some(0.0));
    }

    #[test]
    fn one_db_offset_is_recovered() {
        let a = Series::new("a", waterfall(0.0));
        let b = Series::new("b", waterfall(1.0));
        let g = gap_db(&a, &b, 1e-2).unwrap();
        assert!((g - 1.0).abs() < 0.01, "{g}");
        assert!((a.snr_at(1e-2).unwrap() - 8.0).abs() < 1e-9);
        assert!((a.high_snr_slope().unwrap() + 0.25).abs() < 1e-12);
    }

    #[test]
    fn unresolved_crossings() {
        let a = Series::new("a", vec![(0.0, 0.5), (2.0, 0.2)]);
        assert_eq!(a.snr_at(1e-2), None);
        let z = Series::new("z", vec![(0.0, 0.5), (2.0, 0.0)]);
        assert_eq!(z.snr_at(1e-2), None);
        assert_eq!(Series::new("s", vec![(0.0, 0.5)]).high_snr_slope(), None);
    }

    #[test]
    fn grouping_and_outputs() {
        let rec = |fp: &str, name: &str, snr: f64, fer: f64| FerRecord {
            fingerprint: fp.into(),
            series: name.into(),
            snr_db: snr,
            frames: 100,
            frame_errors: (fer * 100.0) as usize,
            bit_errors: 0,
            fer,
            ber: 0.0,
            wall_seconds: 0.0,
        };
        let records = vec![
            rec("f1", "afdm", 2.0, 0.01),
            rec("f1", "afdm", 0.0, 0.1),
            rec("f2", "otfs", 0.0, 0.5),
            rec("f2", "otfs", 2.0, 0.1),
            rec("f2", "otfs", 4.0, 0.01),
        ];
        let s = group_series(&records).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].points[0].0, 0.0);
        let gaps = all_gaps(&s, 1e-2);
        assert!((gaps[0].gap_db.unwrap() - 2.0).abs() < 1e-9);
        assert!(series_csv(&s).starts_with("# schema=afdm-lab/fer-series/v1\n"));
        assert!(gaps_csv(&gaps).contains("afdm,otfs,1e-2,2.0000"));
        let svg = curve_svg(&s, "test <sheet>");
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("test &lt;sheet&gt;"));
        assert!(group_series(&[]).is_err());
    }
}
