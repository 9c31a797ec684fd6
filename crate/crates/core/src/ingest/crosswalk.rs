//! Zip code to region resolution.
//!
//! A region lying inside one Zip code takes that Zip's values. A region
//! split across several Zip codes takes the one it shares the largest area
//! with; exact ties go to the lexicographically smallest Zip.

use std::collections::{BTreeMap, BTreeSet};

use chrono::NaiveDate;
use serde::Serialize;

use super::{OverlapEntry, TransactionRecord};

/// Region to resolved Zip assignment.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CrosswalkTable {
    assignments: BTreeMap<String, String>,
}

impl CrosswalkTable {
    pub fn zip_for(&self, region: &str) -> Option<&str> {
        self.assignments.get(region).map(String::as_str)
    }

    pub fn contains(&self, region: &str) -> bool {
        self.assignments.contains_key(region)
    }

    pub fn regions(&self) -> impl Iterator<Item = &str> {
        self.assignments.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.assignments.iter().map(|(r, z)| (r.as_str(), z.as_str()))
    }

    pub fn len(&self) -> usize {
        self.assignments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }

    /// Zip to the sorted list of regions resolving to it.
    pub fn members(&self) -> BTreeMap<&str, Vec<&str>> {
        let mut out: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for (region, zip) in self.iter() {
            out.entry(zip).or_default().push(region);
        }
        out
    }

    /// Regions from `referenced` that have no overlap entry.
    pub fn missing<'a>(&self, referenced: impl IntoIterator<Item = &'a str>) -> BTreeSet<String> {
        referenced.into_iter().filter(|r| !self.contains(r)).map(str::to_string).collect()
    }
}

impl FromIterator<(String, String)> for CrosswalkTable {
    fn from_iter<I: IntoIterator<Item = (String, String)>>(iter: I) -> Self {
        CrosswalkTable { assignments: iter.into_iter().collect() }
    }
}

pub fn resolve_crosswalk(overlaps: &[OverlapEntry]) -> CrosswalkTable {
    let mut best: BTreeMap<&str, (&str, f64)> = BTreeMap::new();
    for e in overlaps {
        best.entry(&e.region)
            .and_modify(|(zip, area)| {
                let wins = e.overlap_area > *area || (e.overlap_area == *area && e.zip.as_str() < *zip);
                if wins {
                    *zip = &e.zip;
                    *area = e.overlap_area;
                }
            })
            .or_insert((&e.zip, e.overlap_area));
    }
    best.into_iter().map(|(r, (z, _))| (r.to_string(), z.to_string())).collect()
}

/// A transaction row re-keyed to a region.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionTransaction {
    pub date: NaiveDate,
    pub region: String,
    pub merchant_type: String,
    pub amount: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Broadcast {
    pub records: Vec<RegionTransaction>,
    /// Rows whose Zip no region resolves to.
    pub unmatched_rows: usize,
    /// Unmatched Zip code to its row count.
    pub unmatched_zips: BTreeMap<String, usize>,
}

/// Copies each Zip-level row, whole, onto every region resolving to that Zip.
pub fn broadcast_zip_to_regions(tx: &[TransactionRecord], xwalk: &CrosswalkTable) -> Broadcast {
    let members = xwalk.members();
    let mut out = Broadcast::default();
    for t in tx {
        match members.get(t.zip.as_str()) {
            Some(regions) => out.records.extend(regions.iter().map(|r| RegionTransaction {
                date: t.date,
                region: r.to_string(),
                merchant_type: t.merchant_type.clone(),
                amount: t.amount,
            })),
            None => {
                out.unmatched_rows += 1;
                *out.unmatched_zips.entry(t.zip.clone()).or_default() += 1;
            }
        }
    }
    out
}
