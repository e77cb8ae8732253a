//! Day-of-week by sales-bin summaries.

use super::binning::{assign_bin, BinningModel, BIN_COUNT};
use super::DailySalesRecord;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CellSummary {
    pub count: usize,
    pub total_units: u64,
    pub median_units: Option<u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DaySummary {
    pub count: usize,
    pub total_units: u64,
    pub median_units: Option<u64>,
    pub promo_median_units: Option<u64>,
    pub non_promo_median_units: Option<u64>,
}

/// `cells[day][bin]` with Monday as day 0, plus per-day totals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeeklyProfile {
    pub cells: [[CellSummary; BIN_COUNT]; 7],
    pub days: [DaySummary; 7],
}

/// Lower median: the `(n - 1) / 2`-th order statistic.
pub fn lower_median(values: &mut [u64]) -> Option<u64> {
    if values.is_empty() {
        return None;
    }
    values.sort_unstable();
    Some(values[(values.len() - 1) / 2])
}

pub fn weekly_profile(series: &[DailySalesRecord], model: &BinningModel) -> WeeklyProfile {
    let mut cell_units: Vec<Vec<Vec<u64>>> = vec![vec![Vec::new(); BIN_COUNT]; 7];
    let mut promo_units: Vec<Vec<u64>> = vec![Vec::new(); 7];
    let mut plain_units: Vec<Vec<u64>> = vec![Vec::new(); 7];
    for r in series {
        let day = usize::from(r.day_of_week);
        cell_units[day][assign_bin(model, r.units_sold)].push(r.units_sold);
        if r.promo_active {
            promo_units[day].push(r.units_sold);
        } else {
            plain_units[day].push(r.units_sold);
        }
    }

    let summarize = |units: &mut Vec<u64>| CellSummary {
        count: units.len(),
        total_units: units.iter().sum(),
        median_units: lower_median(units),
    };
    let cells =
        std::array::from_fn(|day| std::array::from_fn(|bin| summarize(&mut cell_units[day][bin])));
    let days = std::array::from_fn(|day| {
        let mut all: Vec<u64> = promo_units[day]
            .iter()
            .chain(&plain_units[day])
            .copied()
            .collect();
        DaySummary {
            count: all.len(),
            total_units: all.iter().sum(),
            median_units: lower_median(&mut all),
            promo_median_units: lower_median(&mut promo_units[day]),
            non_promo_median_units: lower_median(&mut plain_units[day]),
        }
    });
    WeeklyProfile { cells, days }
}

#[cfg(test)]
mod tests {
    use chrono::{Duration, NaiveDate};

    use super::*;
    use crate::ingest::{day_of_week, fit_bins};

    fn record(date: NaiveDate, units: u64, promo: bool) -> DailySalesRecord {
        DailySalesRecord {
            store_id: "S".into(),
            product_id: "P".into(),
            date,
            day_of_week: day_of_week(date),
            units_sold: units,
            promo_active: promo,
            state_holiday: false,
            school_holiday: false,
        }
    }

    fn monday() -> NaiveDate {
        NaiveDate::from_ymd_opt(2015, 6, 1).unwrap()
    }

    #[test]
    fn all_sales_on_monday() {
        let series: Vec<_> = (0..6)
            .map(|w| record(monday() + Duration::weeks(w), 10 * w as u64, false))
            .collect();
        let model = fit_bins(&series).unwrap();
        let p = weekly_profile(&series, &model);
        assert_eq!(
            p.days[0].total_units,
            series.iter().map(|r| r.units_sold).sum::<u64>()
        );
        assert!(p.days[1..]
            .iter()
            .all(|d| d.count == 0 && d.median_units.is_none()));
        assert_eq!(p.cells[0].iter().map(|c| c.count).sum::<usize>(), 6);
    }

    #[test]
    fn even_count_uses_lower_median() {
        let series = vec![
            record(monday(), 2, false),
            record(monday() + Duration::weeks(1), 4, false),
        ];
        let model = fit_bins(&series).unwrap();
        assert_eq!(
            weekly_profile(&series, &model).days[0].median_units,
            Some(2)
        );
    }

    #[test]
    fn promo_days_have_higher_median() {
        // Base demand 5..=14 by week; promotion weeks double it.
        let mut series = Vec::new();
        for w in 0..20 {
            let base = 5 + (w % 10) as u64;
            let promo = w % 2 == 0;
            series.push(record(
                monday() + Duration::weeks(w) + Duration::days(4),
                if promo { 2 * base } else { base },
                promo,
            ));
        }
        let model = fit_bins(&series).unwrap();
        let friday = &weekly_profile(&series, &model).days[4];
        // promo weeks 0,2,..,18 -> bases 5,7,9,11,13 twice -> doubled; lower median of 10 values = 18
        assert_eq!(friday.promo_median_units, Some(18));
        assert_eq!(friday.non_promo_median_units, Some(10));
        assert!(friday.promo_median_units > friday.non_promo_median_units);
    }
}
