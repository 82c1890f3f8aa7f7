//! JSON, CSV and text renderings of reports and histograms.
//!
//! Reals are rounded to 9 significant digits and printed in the shortest
//! form that reads back to the rounded value, with a decimal point and no
//! locale. Non-finite values are written as the strings `inf`, `-inf`,
//! `nan`. Field order is fixed, so identical reports give identical bytes.

use serde::{Serialize, Serializer};

use crate::distribution::Distribution;
use crate::order::{EntryOutcome, ImageId, Mode, ModeEntry, OrderReport, OrderValue};
use crate::Scalar;

/// Rounds to 9 significant digits; `-0` becomes `0`.
pub fn round_sig9(x: f64) -> f64 {
    if !x.is_finite() {
        return x;
    }
    let r: f64 = format!("{x:.8e}").parse().expect("formatted float parses");
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

pub fn format_real(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        serde_json::to_string(&round_sig9(x)).expect("finite float serializes")
    }
}

#[derive(Debug, Clone, Copy)]
struct Real(f64);

impl Serialize for Real {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            s.serialize_f64(round_sig9(self.0))
        } else {
            s.serialize_str(&format_real(self.0))
        }
    }
}

fn real<T: Scalar>(x: T) -> Real {
    Real(x.to_f64_lossy())
}

#[derive(Serialize)]
struct ImageJson<'a> {
    path: &'a str,
    sha256: &'a str,
}

impl<'a> From<&'a ImageId> for ImageJson<'a> {
    fn from(id: &'a ImageId) -> Self {
        Self {
            path: &id.path,
            sha256: &id.sha256,
        }
    }
}

#[derive(Serialize)]
struct HeadlineJson {
    feature: &'static str,
    renorm: &'static str,
    reference: &'static str,
    delta_s: Real,
    kl: Real,
    support_mismatch_mass: Real,
    forms_agree: bool,
}

/// One mode row; shared by the JSON entries array and the CSV export.
#[derive(Serialize)]
struct EntryRow {
    feature: &'static str,
    renorm: &'static str,
    reference: &'static str,
    delta_s: Option<Real>,
    kl: Option<Real>,
    support_mismatch_mass: Option<Real>,
    residual_mean_gap: Option<Real>,
    clipped_mass: Option<Real>,
    skipped: bool,
    skip_reason: Option<String>,
    forms_agree: Option<bool>,
}

#[derive(Serialize)]
struct ReportJson<'a> {
    image_a: ImageJson<'a>,
    image_b: ImageJson<'a>,
    epsilon: Real,
    strict: bool,
    headline: HeadlineJson,
    entries: Vec<EntryRow>,
    warnings: &'a [String],
}

fn headline_json<T: Scalar>(mode: Mode, v: &OrderValue<T>) -> HeadlineJson {
    HeadlineJson {
        feature: mode.feature.name(),
        renorm: mode.renorm.name(),
        reference: mode.reference.name(),
        delta_s: real(v.delta_s),
        kl: real(v.kl),
        support_mismatch_mass: real(v.support_mismatch_mass),
        forms_agree: v.forms_agree,
    }
}

fn entry_row<T: Scalar>(e: &ModeEntry<T>) -> EntryRow {
    let mut row = EntryRow {
        feature: e.mode.feature.name(),
        renorm: e.mode.renorm.name(),
        reference: e.mode.reference.name(),
        delta_s: None,
        kl: None,
        support_mismatch_mass: None,
        residual_mean_gap: None,
        clipped_mass: None,
        skipped: false,
        skip_reason: None,
        forms_agree: None,
    };
    match &e.outcome {
        EntryOutcome::Evaluated {
            value,
            residual_mean_gap,
            clipped_mass,
        } => {
            row.delta_s = Some(real(value.delta_s));
            row.kl = Some(real(value.kl));
            row.support_mismatch_mass = Some(real(value.support_mismatch_mass));
            row.residual_mean_gap = Some(real(*residual_mean_gap));
            row.clipped_mass = Some(real(*clipped_mass));
            row.forms_agree = Some(value.forms_agree);
        }
        EntryOutcome::Skipped { reason } => {
            row.skipped = true;
            row.skip_reason = Some(reason.clone());
        }
    }
    row
}

pub fn report_json<T: Scalar>(report: &OrderReport<T>) -> String {
    let doc = ReportJson {
        image_a: (&report.image_a).into(),
        image_b: (&report.image_b).into(),
        epsilon: real(report.epsilon),
        strict: report.strict,
        headline: headline_json(report.headline_mode(), &report.headline),
        entries: report.entries.iter().map(entry_row).collect(),
        warnings: &report.warnings,
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("report serializes");
    s.push('\n');
    s
}

pub fn report_csv<T: Scalar>(report: &OrderReport<T>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "feature",
        "renorm",
        "reference",
        "delta_s",
        "kl",
        "support_mismatch_mass",
        "residual_mean_gap",
        "clipped_mass",
        "skipped",
        "skip_reason",
        "forms_agree",
    ])
    .expect("in-memory write");
    let opt = |x: Option<Real>| x.map(|r| format_real(r.0)).unwrap_or_default();
    for e in &report.entries {
        let r = entry_row(e);
        w.write_record([
            r.feature.to_string(),
            r.renorm.to_string(),
            r.reference.to_string(),
            opt(r.delta_s),
            opt(r.kl),
            opt(r.support_mismatch_mass),
            opt(r.residual_mean_gap),
            opt(r.clipped_mass),
            r.skipped.to_string(),
            r.skip_reason.unwrap_or_default(),
            r.forms_agree.map(|b| b.to_string()).unwrap_or_default(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf-8 csv")
}

pub fn report_text<T: Scalar>(report: &OrderReport<T>) -> String {
    format!(
        "OCY(headline, {}): {}\n",
        report.headline_mode(),
        format_real(report.headline.delta_s.to_f64_lossy())
    )
}

/// `bin_index,bin_level,mass`, one row per bin, levels with 6 decimals.
pub fn histogram_csv<T: Scalar>(d: &Distribution<T>) -> String {
    let mut out = String::from("bin_index,bin_level,mass\n");
    for (i, (&level, &mass)) in d.bin_levels().iter().zip(d.masses()).enumerate() {
        out.push_str(&format!(
            "{i},{:.6},{}\n",
            level.to_f64_lossy(),
            format_real(mass.to_f64_lossy())
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::FeatureKind;
    use crate::ingest::PixelGrid;
    use crate::order::{compare, CompareOptions};

    #[test]
    fn nine_digits() {
        assert_eq!(format_real(std::f64::consts::LN_2), "0.693147181");
        assert_eq!(format_real(-0.0), "0.0");
        assert_eq!(format_real(0.0), "0.0");
        assert_eq!(format_real(1.0 / 3.0), "0.333333333");
        assert_eq!(format_real(123456789012.0), "123456789000.0");
        assert_eq!(format_real(f64::INFINITY), "inf");
        assert_eq!(format_real(f64::NEG_INFINITY), "-inf");
        assert_eq!(format_real(2.5e-20), "2.5e-20");
    }

    #[test]
    fn json_fields_and_infinity() {
        let a = PixelGrid::filled(4, 4, 10).unwrap();
        let b = PixelGrid::new(4, 4, (0..16).map(|i| i as u8 * 3).collect()).unwrap();
        let r = compare::<f64>(&a, &b, &CompareOptions::default()).unwrap();
        let json = report_json(&r);
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        for key in ["image_a", "image_b", "epsilon", "strict", "headline", "entries"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        let entries = v["entries"].as_array().unwrap();
        assert_eq!(entries.len(), 32);
        // A is constant so the B-referenced KL diverges
        let second = entries
            .iter()
            .find(|e| e["feature"] == "gray" && e["renorm"] == "mass" && e["reference"] == "second")
            .unwrap();
        assert_eq!(second["kl"], "inf");
        let skipped = entries.iter().find(|e| e["skipped"] == true).unwrap();
        assert!(skipped["skip_reason"].is_string());
        assert!(skipped["delta_s"].is_null());
        assert_eq!(v["headline"]["feature"], "gray");
        assert_eq!(v["image_a"]["sha256"].as_str().unwrap().len(), 64);
    }

    #[test]
    fn csv_has_row_per_entry() {
        let g = PixelGrid::filled(3, 3, 1).unwrap();
        let r = compare::<f64>(&g, &g, &CompareOptions::default()).unwrap();
        let csv = report_csv(&r);
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "feature,renorm,reference,delta_s,kl,support_mismatch_mass,residual_mean_gap,clipped_mass,skipped,skip_reason,forms_agree"
        );
        assert_eq!(lines.count(), 32);
        assert_eq!(report_text(&r), "OCY(headline, gray/mass/first): 0.0\n");
    }

    #[test]
    fn histogram_rows() {
        let d = Distribution::<f64>::from_sparse(FeatureKind::Diff, &[(255, 1.0)]).unwrap();
        let csv = histogram_csv(&d);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 512);
        assert_eq!(lines[1], "0,-255.000000,0.0");
        assert_eq!(lines[256], "255,0.000000,1.0");
    }
}
