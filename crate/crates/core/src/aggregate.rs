//! Service taxonomy and weighted daily activity series.
//!
//! Each service type carries a category (essential or non-essential) and a
//! weight. A day's measurement for one category is `sum(w_i * m_i)` over the
//! category's service types, where `m_i` is the day's total trip count or
//! spend at type `i`. Sums always run over service codes in lexicographic
//! order so results are bit-for-bit reproducible.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::calendar::DateWindow;
use crate::ingest::table::{self, Fields, TableRow};
use crate::ingest::{IngestError, RegionTransaction, RowErrorKind, TripRecord};
use crate::keys::{Category, SeriesKey, Source};

const STANDARD_TAXONOMY: &str = include_str!("../data/taxonomy.csv");

#[derive(Debug, Error)]
pub enum AggregateError {
    #[error("unknown service type `{code}` in {origin} data")]
    UnknownCode { code: String, origin: Source },
    #[error("service type `{0}` is not in the taxonomy")]
    NotInTaxonomy(String),
    #[error("service type `{code}` is {found}, not {expected}")]
    WrongCategory { code: String, expected: Category, found: Category },
    #[error("service type `{code}`: weight {weight} must be a finite nonnegative number")]
    InvalidWeight { code: String, weight: f64 },
    #[error("service type `{0}` listed twice")]
    DuplicateCode(String),
    #[error("taxonomy: {0}")]
    Taxonomy(#[from] IngestError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TaxonomyEntry {
    pub category: Category,
    /// Fraction, not percent.
    pub weight: f64,
}

/// What to do with a service type missing from the taxonomy.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UnknownCodePolicy {
    #[default]
    Error,
    SkipWithWarning,
}

/// Service type code to category and weight.
#[derive(Debug, Clone, PartialEq)]
pub struct ServiceTaxonomy {
    entries: BTreeMap<String, TaxonomyEntry>,
}

struct TaxonomyRow {
    code: String,
    category: Category,
    weight_percent: f64,
}

impl TableRow for TaxonomyRow {
    const HEADER: &'static [&'static str] = &["service_type", "category", "weight_percent"];

    fn from_fields(f: &Fields<'_>) -> Result<Self, RowErrorKind> {
        let code = f.text(0)?;
        let cat = f.text(1)?;
        let category = Category::parse(&cat).ok_or(RowErrorKind::Invalid {
            column: "category",
            value: cat,
            expected: "category (essential | non-essential)",
        })?;
        Ok(TaxonomyRow { code, category, weight_percent: f.nonnegative(2)? })
    }
}

impl ServiceTaxonomy {
    /// The bundled four-plus-four service taxonomy.
    pub fn standard() -> Self {
        Self::from_csv_reader(STANDARD_TAXONOMY.as_bytes()).expect("bundled taxonomy parses")
    }

    pub fn from_entries(
        entries: impl IntoIterator<Item = (String, TaxonomyEntry)>,
    ) -> Result<Self, AggregateError> {
        let mut map = BTreeMap::new();
        for (code, entry) in entries {
            if !entry.weight.is_finite() || entry.weight < 0.0 {
                return Err(AggregateError::InvalidWeight { code, weight: entry.weight });
            }
            if map.insert(code.clone(), entry).is_some() {
                return Err(AggregateError::DuplicateCode(code));
            }
        }
        Ok(ServiceTaxonomy { entries: map })
    }

    /// Reads `service_type,category,weight_percent`; percents become fractions.
    pub fn from_csv_reader(reader: impl Read) -> Result<Self, AggregateError> {
        let report = table::read_from::<TaxonomyRow, _>(reader, "taxonomy", None)?.into_strict("taxonomy")?;
        Self::from_rows(report.records)
    }

    pub fn from_csv_path(path: &Path) -> Result<Self, AggregateError> {
        let label = path.display().to_string();
        let report = table::read_path::<TaxonomyRow>(path, None)?.into_strict(&label)?;
        Self::from_rows(report.records)
    }

    fn from_rows(rows: Vec<TaxonomyRow>) -> Result<Self, AggregateError> {
        Self::from_entries(
            rows.into_iter()
                .map(|r| (r.code, TaxonomyEntry { category: r.category, weight: r.weight_percent / 100.0 })),
        )
    }

    pub fn get(&self, code: &str) -> Option<&TaxonomyEntry> {
        self.entries.get(code)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &TaxonomyEntry)> {
        self.entries.iter().map(|(c, e)| (c.as_str(), e))
    }

    pub fn codes(&self, category: Category) -> impl Iterator<Item = &str> {
        self.iter().filter(move |(_, e)| e.category == category).map(|(c, _)| c)
    }

    pub fn total_weight(&self, category: Category) -> f64 {
        self.iter().filter(|(_, e)| e.category == category).map(|(_, e)| e.weight).sum()
    }

    /// Copy with each category's weights scaled to sum to one.
    pub fn renormalized(&self) -> Self {
        let totals: HashMap<Category, f64> = Category::ALL.iter().map(|&c| (c, self.total_weight(c))).collect();
        let entries = self
            .entries
            .iter()
            .map(|(code, e)| {
                let total = totals[&e.category];
                let weight = if total > 0.0 { e.weight / total } else { e.weight };
                (code.clone(), TaxonomyEntry { weight, ..*e })
            })
            .collect();
        ServiceTaxonomy { entries }
    }
}

impl Default for ServiceTaxonomy {
    fn default() -> Self {
        Self::standard()
    }
}

pub fn classify(code: &str, taxonomy: &ServiceTaxonomy, source: Source) -> Result<TaxonomyEntry, AggregateError> {
    taxonomy.get(code).copied().ok_or_else(|| AggregateError::UnknownCode { code: code.to_string(), origin: source })
}

/// `sum(w_i * m_i)` over the types in `values`, all of which must belong to `category`.
pub fn weighted_measurement(
    values: &BTreeMap<String, f64>,
    taxonomy: &ServiceTaxonomy,
    category: Category,
) -> Result<f64, AggregateError> {
    let mut total = 0.0;
    for (code, &value) in values {
        let entry = taxonomy
            .get(code)
            .ok_or_else(|| AggregateError::NotInTaxonomy(code.clone()))?;
        if entry.category != category {
            return Err(AggregateError::WrongCategory { code: code.clone(), expected: category, found: entry.category });
        }
        total += entry.weight * value;
    }
    Ok(total)
}

/// Day-indexed weighted activity for one series key. Index 0 is the
/// analysis window start.
#[derive(Debug, Clone, PartialEq)]
pub struct DailySeries {
    pub values: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct DailySeriesSet {
    pub window: DateWindow,
    pub series: BTreeMap<SeriesKey, DailySeries>,
    /// Rows skipped under [`UnknownCodePolicy::SkipWithWarning`], by source and code.
    pub unknown_codes: BTreeMap<(Source, String), usize>,
    /// Rows for regions outside the requested region set.
    pub foreign_rows: usize,
}

impl DailySeriesSet {
    pub fn get(&self, region: &str, source: Source, category: Category) -> Option<&DailySeries> {
        self.series.get(&SeriesKey::new(region, source, category))
    }
}

/// Builds all four series for every region in `regions`. Days without
/// records are zero; so is every day of a region without records.
pub fn build_daily_series(
    trips: &[TripRecord],
    region_tx: &[RegionTransaction],
    regions: &BTreeSet<String>,
    taxonomy: &ServiceTaxonomy,
    window: &DateWindow,
    policy: UnknownCodePolicy,
) -> Result<DailySeriesSet, AggregateError> {
    let codes: Vec<(&str, &TaxonomyEntry)> = taxonomy.iter().collect();
    let code_index: HashMap<&str, usize> = codes.iter().enumerate().map(|(i, (c, _))| (*c, i)).collect();
    let region_index: HashMap<&str, usize> = regions.iter().enumerate().map(|(i, r)| (r.as_str(), i)).collect();
    let (n_days, n_codes) = (window.len(), codes.len());
    let slab = n_days * n_codes;

    // totals[(region * 2 + source) * slab + day * n_codes + code]
    let mut totals = vec![0.0f64; regions.len() * 2 * slab];
    let mut unknown_codes: BTreeMap<(Source, String), usize> = BTreeMap::new();
    let mut foreign_rows = 0usize;

    let mut add = |source: Source, region: &str, code: &str, date, value: f64| -> Result<(), AggregateError> {
        let Some(&ci) = code_index.get(code) else {
            return match policy {
                UnknownCodePolicy::Error => Err(AggregateError::UnknownCode { code: code.to_string(), origin: source }),
                UnknownCodePolicy::SkipWithWarning => {
                    *unknown_codes.entry((source, code.to_string())).or_default() += 1;
                    Ok(())
                }
            };
        };
        match (region_index.get(region), window.day_index(date)) {
            (Some(&ri), Some(day)) => {
                let src = match source {
                    Source::Trip => 0,
                    Source::Transaction => 1,
                };
                totals[(ri * 2 + src) * slab + day * n_codes + ci] += value;
            }
            _ => foreign_rows += 1,
        }
        Ok(())
    };

    for t in trips {
        add(Source::Trip, &t.origin_region, &t.service_type, t.date, t.trip_count as f64)?;
    }
    for t in region_tx {
        add(Source::Transaction, &t.region, &t.merchant_type, t.date, t.amount)?;
    }

    let mut series = BTreeMap::new();
    for (ri, region) in regions.iter().enumerate() {
        for (si, source) in [Source::Trip, Source::Transaction].into_iter().enumerate() {
            let base = (ri * 2 + si) * slab;
            for category in Category::ALL {
                let values = (0..n_days)
                    .map(|day| {
                        let row = &totals[base + day * n_codes..base + (day + 1) * n_codes];
                        codes
                            .iter()
                            .zip(row)
                            .filter(|((_, e), _)| e.category == category)
                            .fold(0.0, |acc, ((_, e), m)| acc + e.weight * m)
                    })
                    .collect();
                series.insert(SeriesKey::new(region.clone(), source, category), DailySeries { values });
            }
        }
    }

    Ok(DailySeriesSet { window: *window, series, unknown_codes, foreign_rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calendar::parse_date;
    use proptest::prelude::*;

    fn values(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    fn window() -> DateWindow {
        DateWindow::new(parse_date("2017-08-01").unwrap(), parse_date("2017-08-10").unwrap()).unwrap()
    }

    fn trip(day: u32, region: &str, code: &str, n: u64) -> TripRecord {
        TripRecord {
            date: parse_date(&format!("2017-08-{day:02}")).unwrap(),
            origin_region: region.into(),
            service_type: code.into(),
            trip_count: n,
        }
    }

    fn rtx(day: u32, region: &str, code: &str, amount: f64) -> RegionTransaction {
        RegionTransaction {
            date: parse_date(&format!("2017-08-{day:02}")).unwrap(),
            region: region.into(),
            merchant_type: code.into(),
            amount,
        }
    }

    fn regions(names: &[&str]) -> BTreeSet<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn standard_taxonomy_weights() {
        let t = ServiceTaxonomy::standard();
        let expect = [
            ("drug_store", Category::Essential, 0.05),
            ("healthcare", Category::Essential, 0.0001),
            ("grocery", Category::Essential, 0.947),
            ("utilities", Category::Essential, 0.002),
            ("self_care", Category::NonEssential, 0.005),
            ("retail", Category::NonEssential, 0.288),
            ("recreation", Category::NonEssential, 0.076),
            ("restaurant", Category::NonEssential, 0.631),
        ];
        assert_eq!(t.iter().count(), expect.len());
        for (code, cat, w) in expect {
            let e = t.get(code).unwrap();
            assert_eq!(e.category, cat, "{code}");
            assert!((e.weight - w).abs() < 5e-5, "{code}: {} vs {w}", e.weight);
        }
    }

    #[test]
    fn classify_known_and_unknown() {
        let t = ServiceTaxonomy::standard();
        let g = classify("grocery", &t, Source::Trip).unwrap();
        assert_eq!(g.category, Category::Essential);
        assert!((g.weight - 0.947).abs() < 1e-15);
        let r = classify("restaurant", &t, Source::Transaction).unwrap();
        assert_eq!(r.category, Category::NonEssential);
        assert!((r.weight - 0.631).abs() < 1e-15);
        assert!(matches!(classify("florist", &t, Source::Trip), Err(AggregateError::UnknownCode { .. })));
    }

    #[test]
    fn weighted_measurement_of_hundreds() {
        let t = ServiceTaxonomy::standard();
        let v = values(&[("grocery", 100.0), ("drug_store", 100.0), ("healthcare", 100.0), ("utilities", 100.0)]);
        // (0.947 + 0.05 + 0.0001 + 0.002) * 100
        assert!((weighted_measurement(&v, &t, Category::Essential).unwrap() - 99.91).abs() < 1e-12);
    }

    #[test]
    fn weighted_measurement_edge_cases() {
        let t = ServiceTaxonomy::standard();
        let zeros = values(&[("retail", 0.0), ("restaurant", 0.0)]);
        assert_eq!(weighted_measurement(&zeros, &t, Category::NonEssential).unwrap(), 0.0);

        let unit =
            ServiceTaxonomy::from_entries([("x".to_string(), TaxonomyEntry { category: Category::Essential, weight: 1.0 })])
                .unwrap();
        assert_eq!(weighted_measurement(&values(&[("x", 42.0)]), &unit, Category::Essential).unwrap(), 42.0);

        let wrong = weighted_measurement(&values(&[("retail", 1.0)]), &t, Category::Essential);
        assert!(matches!(wrong, Err(AggregateError::WrongCategory { .. })));
    }

    #[test]
    fn renormalized_weights_sum_to_one() {
        let t = ServiceTaxonomy::standard().renormalized();
        for c in Category::ALL {
            assert!((t.total_weight(c) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn taxonomy_rejects_bad_rows() {
        let bad_cat = "service_type,category,weight_percent\ngrocery,luxury,3\n";
        assert!(ServiceTaxonomy::from_csv_reader(bad_cat.as_bytes()).is_err());
        let dup = "service_type,category,weight_percent\ngrocery,essential,3\ngrocery,essential,4\n";
        assert!(matches!(ServiceTaxonomy::from_csv_reader(dup.as_bytes()), Err(AggregateError::DuplicateCode(_))));
        let neg = "service_type,category,weight_percent\ngrocery,essential,-3\n";
        assert!(ServiceTaxonomy::from_csv_reader(neg.as_bytes()).is_err());
    }

    #[test]
    fn single_grocery_trip_row() {
        let t = ServiceTaxonomy::standard();
        let s = build_daily_series(&[trip(3, "R", "grocery", 10)], &[], &regions(&["R"]), &t, &window(), Default::default())
            .unwrap();
        let e = s.get("R", Source::Trip, Category::Essential).unwrap();
        assert!((e.values[2] - 9.47).abs() < 1e-12);
        assert!(e.values.iter().enumerate().all(|(i, v)| i == 2 || *v == 0.0));
        assert!(s.get("R", Source::Trip, Category::NonEssential).unwrap().values.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn region_without_records_gets_four_zero_series() {
        let t = ServiceTaxonomy::standard();
        let s = build_daily_series(&[], &[], &regions(&["R"]), &t, &window(), Default::default()).unwrap();
        assert_eq!(s.series.len(), 4);
        assert!(s.series.values().all(|d| d.values.len() == 10 && d.values.iter().all(|v| *v == 0.0)));
    }

    #[test]
    fn duplicate_transaction_rows_are_summed_before_weighting() {
        let t = ServiceTaxonomy::standard();
        let rows = [rtx(5, "R", "restaurant", 100.0), rtx(5, "R", "restaurant", 50.0)];
        let s = build_daily_series(&[], &rows, &regions(&["R"]), &t, &window(), Default::default()).unwrap();
        let v = s.get("R", Source::Transaction, Category::NonEssential).unwrap().values[4];
        let sum_then_weight = 0.631 * 150.0;
        let weight_then_sum = 0.631 * 100.0 + 0.631 * 50.0;
        assert!((v - sum_then_weight).abs() < 1e-12);
        assert!((v - weight_then_sum).abs() < 1e-12);
    }

    #[test]
    fn unknown_code_policy() {
        let t = ServiceTaxonomy::standard();
        let rows = [trip(1, "R", "florist", 3), trip(1, "R", "grocery", 1)];
        let err = build_daily_series(&rows, &[], &regions(&["R"]), &t, &window(), UnknownCodePolicy::Error);
        assert!(matches!(err, Err(AggregateError::UnknownCode { .. })));
        let ok = build_daily_series(&rows, &[], &regions(&["R"]), &t, &window(), UnknownCodePolicy::SkipWithWarning)
            .unwrap();
        assert_eq!(ok.unknown_codes.get(&(Source::Trip, "florist".to_string())), Some(&1));
        assert!((ok.get("R", Source::Trip, Category::Essential).unwrap().values[0] - 0.947).abs() < 1e-15);
    }

    const CODES: [&str; 8] =
        ["drug_store", "healthcare", "grocery", "utilities", "self_care", "retail", "recreation", "restaurant"];

    fn trip_rows() -> impl Strategy<Value = Vec<TripRecord>> {
        prop::collection::vec((1u32..=10, 0usize..3, 0usize..8, 0u64..500), 0..60).prop_map(|rows| {
            rows.into_iter().map(|(d, r, c, n)| trip(d, ["A", "B", "C"][r], CODES[c], n)).collect()
        })
    }

    proptest! {
        #[test]
        fn weighted_measurement_is_linear(vals in prop::collection::vec(0.0f64..1e6, 4), a in 0.0f64..100.0) {
            let t = ServiceTaxonomy::standard();
            let codes = ["drug_store", "grocery", "healthcare", "utilities"];
            let base: BTreeMap<String, f64> = codes.iter().zip(&vals).map(|(c, v)| (c.to_string(), *v)).collect();
            let scaled: BTreeMap<String, f64> = base.iter().map(|(c, v)| (c.clone(), a * v)).collect();
            let lhs = weighted_measurement(&scaled, &t, Category::Essential).unwrap();
            let rhs = a * weighted_measurement(&base, &t, Category::Essential).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs().max(1.0));
        }

        #[test]
        fn series_are_additive_over_splits(rows in trip_rows(), split in 0usize..60) {
            let t = ServiceTaxonomy::standard();
            let regs = regions(&["A", "B", "C"]);
            let split = split.min(rows.len());
            let build = |r: &[TripRecord]| build_daily_series(r, &[], &regs, &t, &window(), Default::default()).unwrap();
            let (whole, left, right) = (build(&rows), build(&rows[..split]), build(&rows[split..]));
            for (key, s) in &whole.series {
                for (day, v) in s.values.iter().enumerate() {
                    let parts = left.series[key].values[day] + right.series[key].values[day];
                    prop_assert!((v - parts).abs() <= 1e-9 * v.abs().max(1.0));
                }
            }
        }

        #[test]
        fn daily_value_is_weighted_measurement_of_type_totals(rows in trip_rows()) {
            let t = ServiceTaxonomy::standard();
            let s = build_daily_series(&rows, &[], &regions(&["A", "B", "C"]), &t, &window(), Default::default()).unwrap();
            for (key, series) in &s.series {
                for (day, v) in series.values.iter().enumerate() {
                    let date = window().date_at(day);
                    let mut totals: BTreeMap<String, f64> = BTreeMap::new();
                    let trips = key.source == Source::Trip;
                    for r in rows.iter().filter(|r| trips && r.origin_region == key.region && r.date == date) {
                        if t.get(&r.service_type).unwrap().category == key.category {
                            *totals.entry(r.service_type.clone()).or_default() += r.trip_count as f64;
                        }
                    }
                    prop_assert_eq!(*v, weighted_measurement(&totals, &t, key.category).unwrap());
                }
            }
        }
    }
}
