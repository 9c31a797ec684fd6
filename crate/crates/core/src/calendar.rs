use std::fmt;

use chrono::{Duration, NaiveDate};
use serde::{Deserialize, Serialize};

/// Inclusive calendar date range. Day indices are offsets from `start`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DateWindow {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl DateWindow {
    /// Returns `None` when `end` precedes `start`.
    pub fn new(start: NaiveDate, end: NaiveDate) -> Option<Self> {
        (start <= end).then_some(DateWindow { start, end })
    }

    pub fn contains(&self, date: NaiveDate) -> bool {
        self.start <= date && date <= self.end
    }

    /// Number of days in the window, both ends included.
    pub fn len(&self) -> usize {
        (self.end - self.start).num_days() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Offset of `date` from the window start, if inside the window.
    pub fn day_index(&self, date: NaiveDate) -> Option<usize> {
        self.contains(date).then(|| (date - self.start).num_days() as usize)
    }

    pub fn date_at(&self, index: usize) -> NaiveDate {
        self.start + Duration::days(index as i64)
    }

    pub fn dates(&self) -> impl Iterator<Item = NaiveDate> + '_ {
        (0..self.len()).map(|i| self.date_at(i))
    }

    /// True when `other` lies entirely inside `self`.
    pub fn covers(&self, other: &DateWindow) -> bool {
        self.start <= other.start && other.end <= self.end
    }
}

impl fmt::Display for DateWindow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.start, self.end)
    }
}

pub fn parse_date(s: &str) -> Option<NaiveDate> {
    NaiveDate::parse_from_str(s, "%Y-%m-%d").ok()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(s: &str) -> NaiveDate {
        parse_date(s).unwrap()
    }

    #[test]
    fn harvey_baseline_window_has_21_days() {
        let w = DateWindow::new(d("2017-08-01"), d("2017-08-21")).unwrap();
        assert_eq!(w.len(), 21);
        assert_eq!(w.day_index(d("2017-08-21")), Some(20));
        assert_eq!(w.day_index(d("2017-08-22")), None);
        assert_eq!(w.date_at(26), d("2017-08-27"));
    }

    #[test]
    fn rejects_inverted_window() {
        assert!(DateWindow::new(d("2017-08-02"), d("2017-08-01")).is_none());
    }

    #[test]
    fn date_parsing_is_strict_iso() {
        assert!(parse_date("2017-08-15").is_some());
        assert!(parse_date("08/15/2017").is_none());
        assert!(parse_date("2017-02-30").is_none());
    }
}
