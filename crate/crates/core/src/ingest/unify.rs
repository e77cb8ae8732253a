use std::collections::BTreeMap;

use chrono::NaiveDate;

use super::{
    day_of_week, DailySalesRecord, IngestError, OnlineTxnRecord, PromoPlanRecord, RxTxnRecord,
};

/// Store id given to online sales whose zip has no mapped store.
pub const ONLINE_STORE: &str = "ONLINE";

/// State and school holiday flags by date.
///
/// A non-empty calendar defines a span from its first to its last date; series
/// dates outside the span are rejected. Dates inside the span that are not
/// listed carry no holidays. An empty calendar imposes no span.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct HolidayCalendar {
    days: BTreeMap<NaiveDate, (bool, bool)>,
}

impl HolidayCalendar {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn from_days(days: impl IntoIterator<Item = (NaiveDate, (bool, bool))>) -> Self {
        Self {
            days: days.into_iter().collect(),
        }
    }

    pub fn span(&self) -> Option<(NaiveDate, NaiveDate)> {
        Some((*self.days.keys().next()?, *self.days.keys().next_back()?))
    }

    /// `(state_holiday, school_holiday)`.
    pub fn flags(&self, date: NaiveDate) -> (bool, bool) {
        self.days.get(&date).copied().unwrap_or((false, false))
    }

    fn check(&self, date: NaiveDate) -> Result<(), IngestError> {
        match self.span() {
            Some((first, last)) if date < first || date > last => {
                Err(IngestError::CalendarGap { date, first, last })
            }
            _ => Ok(()),
        }
    }
}

/// Maps online delivery zip codes to the store that serves them.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ZipStoreMap {
    stores: BTreeMap<String, String>,
}

impl ZipStoreMap {
    pub fn new(stores: BTreeMap<String, String>) -> Self {
        Self { stores }
    }

    pub fn store_for(&self, zip: &str) -> Option<&str> {
        self.stores.get(zip).map(String::as_str)
    }
}

/// Merges online and store transactions into one dense daily series per
/// `(store, product)`, sorted by store, product and date.
///
/// Units from both sources add up. Each pair's series runs from its first to
/// its last observed date with gaps filled at zero units. A day is a promotion
/// day when any plan row for the same store and product covers it.
pub fn unify(
    online: &[OnlineTxnRecord],
    rx: &[RxTxnRecord],
    promos: &[PromoPlanRecord],
    holidays: &HolidayCalendar,
    zip_stores: &ZipStoreMap,
) -> Result<Vec<DailySalesRecord>, IngestError> {
    let mut units: BTreeMap<(String, String), BTreeMap<NaiveDate, u64>> = BTreeMap::new();
    for r in online {
        let store = zip_stores
            .store_for(&r.zip)
            .unwrap_or(ONLINE_STORE)
            .to_string();
        *units
            .entry((store, r.product_id.clone()))
            .or_default()
            .entry(r.date)
            .or_default() += r.eod_sales_qty;
    }
    for r in rx {
        *units
            .entry((r.store_id.clone(), r.product_id.clone()))
            .or_default()
            .entry(r.date)
            .or_default() += r.eod_sales_qty;
    }

    let mut promo_index: BTreeMap<(&str, &str), Vec<&PromoPlanRecord>> = BTreeMap::new();
    for p in promos {
        promo_index
            .entry((p.store_id.as_str(), p.product_id.as_str()))
            .or_default()
            .push(p);
    }

    let mut series = Vec::new();
    for ((store, product), days) in &units {
        let (Some(&first), Some(&last)) = (days.keys().next(), days.keys().next_back()) else {
            continue;
        };
        let scoped = promo_index
            .get(&(store.as_str(), product.as_str()))
            .map(Vec::as_slice)
            .unwrap_or(&[]);
        for date in first.iter_days().take_while(|d| *d <= last) {
            holidays.check(date)?;
            let (state_holiday, school_holiday) = holidays.flags(date);
            series.push(DailySalesRecord {
                store_id: store.clone(),
                product_id: product.clone(),
                date,
                day_of_week: day_of_week(date),
                units_sold: days.get(&date).copied().unwrap_or(0),
                promo_active: scoped.iter().any(|p| p.covers(date)),
                state_holiday,
                school_holiday,
            });
        }
    }
    Ok(series)
}
