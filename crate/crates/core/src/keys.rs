use std::fmt;

use serde::{Deserialize, Serialize};

/// Where an activity observation comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Trip,
    Transaction,
}

impl Source {
    pub fn as_str(self) -> &'static str {
        match self {
            Source::Trip => "trip",
            Source::Transaction => "transaction",
        }
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Essential vs non-essential service split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Category {
    #[serde(rename = "essential")]
    Essential,
    #[serde(rename = "non-essential")]
    NonEssential,
}

impl Category {
    pub const ALL: [Category; 2] = [Category::Essential, Category::NonEssential];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::Essential => "essential",
            Category::NonEssential => "non-essential",
        }
    }

    pub fn parse(s: &str) -> Option<Category> {
        match s {
            "essential" | "e" => Some(Category::Essential),
            "non-essential" | "nonessential" | "non_essential" | "ne" => {
                Some(Category::NonEssential)
            }
            _ => None,
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One of the four recovery milestones tracked per region.
///
/// The declaration order is the column order of every report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Milestone {
    TripEssential,
    TripNonessential,
    TxEssential,
    TxNonessential,
}

impl Milestone {
    pub const ALL: [Milestone; 4] = [
        Milestone::TripEssential,
        Milestone::TripNonessential,
        Milestone::TxEssential,
        Milestone::TxNonessential,
    ];

    pub fn new(source: Source, category: Category) -> Milestone {
        match (source, category) {
            (Source::Trip, Category::Essential) => Milestone::TripEssential,
            (Source::Trip, Category::NonEssential) => Milestone::TripNonessential,
            (Source::Transaction, Category::Essential) => Milestone::TxEssential,
            (Source::Transaction, Category::NonEssential) => Milestone::TxNonessential,
        }
    }

    pub fn source(self) -> Source {
        match self {
            Milestone::TripEssential | Milestone::TripNonessential => Source::Trip,
            Milestone::TxEssential | Milestone::TxNonessential => Source::Transaction,
        }
    }

    pub fn category(self) -> Category {
        match self {
            Milestone::TripEssential | Milestone::TxEssential => Category::Essential,
            Milestone::TripNonessential | Milestone::TxNonessential => Category::NonEssential,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Milestone::TripEssential => "trip_essential",
            Milestone::TripNonessential => "trip_nonessential",
            Milestone::TxEssential => "tx_essential",
            Milestone::TxNonessential => "tx_nonessential",
        }
    }

    /// Short column suffix used by `metric.csv` (`norm_trip_e`, ...).
    pub fn short(self) -> &'static str {
        match self {
            Milestone::TripEssential => "trip_e",
            Milestone::TripNonessential => "trip_ne",
            Milestone::TxEssential => "tx_e",
            Milestone::TxNonessential => "tx_ne",
        }
    }

    pub fn parse(s: &str) -> Option<Milestone> {
        Milestone::ALL.into_iter().find(|m| m.as_str() == s)
    }
}

impl fmt::Display for Milestone {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Identifies one daily series: a region, a data source and a service category.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SeriesKey {
    pub region: String,
    pub source: Source,
    pub category: Category,
}

impl SeriesKey {
    pub fn new(region: impl Into<String>, source: Source, category: Category) -> Self {
        SeriesKey { region: region.into(), source, category }
    }

    pub fn milestone(&self) -> Milestone {
        Milestone::new(self.source, self.category)
    }
}
