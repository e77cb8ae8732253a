//! Retail data ingestion: promotion plans, online and store transactions,
//! holiday calendars, the unified daily sales series, categorical binning and
//! day-of-week profiles.

mod binning;
mod csvio;
mod profile;
mod unify;

use chrono::{Datelike, NaiveDate};
use thiserror::Error;

pub use binning::{assign_bin, fit_bins, fit_bins_units, BinningModel, BIN_COUNT};
pub use csvio::{
    online_to_csv, parse_calendar, parse_online, parse_promo_plan, parse_rx, parse_series,
    parse_transactions, parse_zip_store_map, promo_plan_to_csv, rx_to_csv, series_to_csv,
    ParseMode, Parsed, TransactionKind, Transactions, CALENDAR_HEADER, ONLINE_HEADER,
    PROMO_PLAN_HEADER, RX_HEADER, SERIES_HEADER, ZIP_STORE_HEADER,
};
pub use profile::{lower_median, weekly_profile, CellSummary, DaySummary, WeeklyProfile};
pub use unify::{unify, HolidayCalendar, ZipStoreMap, ONLINE_STORE};

/// One row of the promotion plan.
#[derive(Debug, Clone, PartialEq)]
pub struct PromoPlanRecord {
    pub promo_code: String,
    pub promo_type: String,
    pub event_id: String,
    pub promo_start_date: NaiveDate,
    pub promo_end_date: NaiveDate,
    pub promo_target_amount: f64,
    pub store_id: String,
    pub ad_id: String,
    pub product_id: String,
    pub offer_qty: u64,
    pub offer_price: f64,
    pub planogram_change: bool,
    pub special_package: bool,
    pub ad_location: bool,
    pub coupon: bool,
}

impl PromoPlanRecord {
    pub fn covers(&self, date: NaiveDate) -> bool {
        self.promo_start_date <= date && date <= self.promo_end_date
    }

    /// Seasonal events occupy the auxiliary grid columns rather than a weekday.
    pub fn is_seasonal(&self) -> bool {
        self.promo_type.eq_ignore_ascii_case("seasonal")
    }
}

/// End-of-day online sales for one product and one delivery location.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OnlineTxnRecord {
    pub product_id: String,
    pub date: NaiveDate,
    pub eod_sales_qty: u64,
    /// Parsed and carried; not used by the series.
    pub eod_return_qty: u64,
    pub zip: String,
    pub city: String,
    pub state: String,
    pub geo_area_code: String,
}

/// End-of-day in-store sales.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RxTxnRecord {
    pub store_id: String,
    pub product_id: String,
    pub date: NaiveDate,
    pub eod_sales_qty: u64,
    pub qty_uom: String,
}

/// One day of the unified series for a store-product pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DailySalesRecord {
    pub store_id: String,
    pub product_id: String,
    pub date: NaiveDate,
    /// 0 = Monday.
    pub day_of_week: u8,
    pub units_sold: u64,
    pub promo_active: bool,
    pub state_holiday: bool,
    pub school_holiday: bool,
}

pub fn day_of_week(date: NaiveDate) -> u8 {
    date.weekday().num_days_from_monday() as u8
}

/// A rejected data row. `row` counts data rows from 1; `line` is the physical
/// line in the file.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("row {row} (line {line}): {message}")]
pub struct RowError {
    pub row: usize,
    pub line: u64,
    pub message: String,
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{source_name}: header mismatch, expected `{expected}`, found `{found}`")]
    HeaderMismatch {
        source_name: String,
        expected: String,
        found: String,
    },
    #[error("{source_name}: {error}")]
    Row {
        source_name: String,
        error: RowError,
    },
    #[error("{source_name}: {message}")]
    Csv {
        source_name: String,
        message: String,
    },
    #[error("series is empty")]
    EmptySeries,
    #[error("date {date} is outside the holiday calendar span {first}..={last}")]
    CalendarGap {
        date: NaiveDate,
        first: NaiveDate,
        last: NaiveDate,
    },
}
