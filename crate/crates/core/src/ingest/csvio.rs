use std::collections::BTreeMap;
use std::io::Read;

use chrono::NaiveDate;
use csv::{ReaderBuilder, StringRecord, Trim, WriterBuilder};

use super::unify::{HolidayCalendar, ZipStoreMap};
use super::{
    day_of_week, DailySalesRecord, IngestError, OnlineTxnRecord, PromoPlanRecord, RowError,
    RxTxnRecord,
};

pub const PROMO_PLAN_HEADER: &str = "promo_code,promo_type,event_id,promo_start_date,promo_end_date,promo_target_amount,store_id,ad_id,product_id,offer_qty,offer_price,planogram_change,special_package,ad_location,coupon";
pub const ONLINE_HEADER: &str =
    "product_id,date,eod_sales_qty,eod_return_qty,zip,city,state,geo_area_code";
pub const RX_HEADER: &str = "store_id,product_id,date,eod_sales_qty,qty_uom";
pub const CALENDAR_HEADER: &str = "date,state_holiday,school_holiday";
pub const ZIP_STORE_HEADER: &str = "zip,store_id";
pub const SERIES_HEADER: &str =
    "store_id,product_id,date,day_of_week,units_sold,promo_active,state_holiday,school_holiday";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ParseMode {
    /// The first bad row aborts the parse.
    #[default]
    Strict,
    /// Bad rows are skipped and reported as diagnostics.
    Lenient,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Parsed<T> {
    pub records: Vec<T>,
    pub diagnostics: Vec<RowError>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransactionKind {
    Online,
    Rx,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Transactions {
    Online(Parsed<OnlineTxnRecord>),
    Rx(Parsed<RxTxnRecord>),
}

struct Fields<'a> {
    record: &'a StringRecord,
    names: Vec<&'static str>,
}

impl Fields<'_> {
    fn text(&self, i: usize) -> Result<String, String> {
        let v = &self.record[i];
        if v.is_empty() {
            Err(format!("{} is empty", self.names[i]))
        } else {
            Ok(v.to_string())
        }
    }

    /// Empty allowed.
    fn optional_text(&self, i: usize) -> String {
        self.record[i].to_string()
    }

    fn date(&self, i: usize) -> Result<NaiveDate, String> {
        NaiveDate::parse_from_str(&self.record[i], "%Y-%m-%d").map_err(|_| {
            format!(
                "{} {:?} is not a YYYY-MM-DD date",
                self.names[i], &self.record[i]
            )
        })
    }

    fn count(&self, i: usize) -> Result<u64, String> {
        let v = &self.record[i];
        if v.starts_with('-') {
            return Err(format!("{} {v:?} is negative", self.names[i]));
        }
        v.parse::<u64>()
            .map_err(|_| format!("{} {v:?} is not a non-negative integer", self.names[i]))
    }

    fn amount(&self, i: usize) -> Result<f64, String> {
        let v = &self.record[i];
        match v.parse::<f64>() {
            Ok(x) if x.is_finite() && x >= 0.0 => Ok(x),
            Ok(_) => Err(format!(
                "{} {v:?} must be a non-negative number",
                self.names[i]
            )),
            Err(_) => Err(format!("{} {v:?} is not a number", self.names[i])),
        }
    }

    fn flag(&self, i: usize) -> Result<bool, String> {
        let v = &self.record[i];
        match v.to_ascii_lowercase().as_str() {
            "y" | "1" | "true" => Ok(true),
            "n" | "0" | "false" => Ok(false),
            _ => Err(format!(
                "{} {v:?} is not one of Y/N/1/0/true/false",
                self.names[i]
            )),
        }
    }
}

fn read_rows<T, R: Read>(
    source_name: &str,
    input: R,
    header: &'static str,
    mode: ParseMode,
    parse_row: impl Fn(&Fields) -> Result<T, String>,
) -> Result<Parsed<T>, IngestError> {
    let mut reader = ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(Trim::All)
        .from_reader(input);
    let csv_err = |e: csv::Error| IngestError::Csv {
        source_name: source_name.to_string(),
        message: e.to_string(),
    };
    let found = reader
        .headers()
        .map_err(csv_err)?
        .iter()
        .collect::<Vec<_>>()
        .join(",");
    let found = found.trim_start_matches('\u{feff}').to_string();
    if found != header {
        return Err(IngestError::HeaderMismatch {
            source_name: source_name.to_string(),
            expected: header.to_string(),
            found,
        });
    }
    let names: Vec<&'static str> = header.split(',').collect();

    let mut parsed = Parsed {
        records: Vec::new(),
        diagnostics: Vec::new(),
    };
    for (i, result) in reader.records().enumerate() {
        let record = result.map_err(csv_err)?;
        let line = record.position().map_or(0, |p| p.line());
        let outcome = if record.len() != names.len() {
            Err(format!(
                "expected {} fields, found {}",
                names.len(),
                record.len()
            ))
        } else {
            parse_row(&Fields {
                record: &record,
                names: names.clone(),
            })
        };
        match outcome {
            Ok(r) => parsed.records.push(r),
            Err(message) => {
                let error = RowError {
                    row: i + 1,
                    line,
                    message,
                };
                match mode {
                    ParseMode::Strict => {
                        return Err(IngestError::Row {
                            source_name: source_name.to_string(),
                            error,
                        })
                    }
                    ParseMode::Lenient => parsed.diagnostics.push(error),
                }
            }
        }
    }
    Ok(parsed)
}

pub fn parse_promo_plan<R: Read>(
    source_name: &str,
    input: R,
    mode: ParseMode,
) -> Result<Parsed<PromoPlanRecord>, IngestError> {
    read_rows(source_name, input, PROMO_PLAN_HEADER, mode, |f| {
        let record = PromoPlanRecord {
            promo_code: f.text(0)?,
            promo_type: f.optional_text(1),
            event_id: f.optional_text(2),
            promo_start_date: f.date(3)?,
            promo_end_date: f.date(4)?,
            promo_target_amount: f.amount(5)?,
            store_id: f.text(6)?,
            ad_id: f.optional_text(7),
            product_id: f.text(8)?,
            offer_qty: f.count(9)?,
            offer_price: f.amount(10)?,
            planogram_change: f.flag(11)?,
            special_package: f.flag(12)?,
            ad_location: f.flag(13)?,
            coupon: f.flag(14)?,
        };
        if record.promo_start_date > record.promo_end_date {
            return Err(format!(
                "promo_start_date {} is after promo_end_date {}",
                record.promo_start_date, record.promo_end_date
            ));
        }
        Ok(record)
    })
}

pub fn parse_online<R: Read>(
    source_name: &str,
    input: R,
    mode: ParseMode,
) -> Result<Parsed<OnlineTxnRecord>, IngestError> {
    read_rows(source_name, input, ONLINE_HEADER, mode, |f| {
        Ok(OnlineTxnRecord {
            product_id: f.text(0)?,
            date: f.date(1)?,
            eod_sales_qty: f.count(2)?,
            eod_return_qty: f.count(3)?,
            zip: f.optional_text(4),
            city: f.optional_text(5),
            state: f.optional_text(6),
            geo_area_code: f.optional_text(7),
        })
    })
}

pub fn parse_rx<R: Read>(
    source_name: &str,
    input: R,
    mode: ParseMode,
) -> Result<Parsed<RxTxnRecord>, IngestError> {
    read_rows(source_name, input, RX_HEADER, mode, |f| {
        Ok(RxTxnRecord {
            store_id: f.text(0)?,
            product_id: f.text(1)?,
            date: f.date(2)?,
            eod_sales_qty: f.count(3)?,
            qty_uom: f.text(4)?,
        })
    })
}

pub fn parse_transactions<R: Read>(
    source_name: &str,
    input: R,
    kind: TransactionKind,
    mode: ParseMode,
) -> Result<Transactions, IngestError> {
    Ok(match kind {
        TransactionKind::Online => Transactions::Online(parse_online(source_name, input, mode)?),
        TransactionKind::Rx => Transactions::Rx(parse_rx(source_name, input, mode)?),
    })
}

pub fn parse_calendar<R: Read>(
    source_name: &str,
    input: R,
) -> Result<HolidayCalendar, IngestError> {
    let parsed = read_rows(
        source_name,
        input,
        CALENDAR_HEADER,
        ParseMode::Strict,
        |f| Ok((f.date(0)?, f.flag(1)?, f.flag(2)?)),
    )?;
    Ok(HolidayCalendar::from_days(
        parsed
            .records
            .into_iter()
            .map(|(d, state, school)| (d, (state, school))),
    ))
}

pub fn parse_zip_store_map<R: Read>(
    source_name: &str,
    input: R,
) -> Result<ZipStoreMap, IngestError> {
    let parsed = read_rows(
        source_name,
        input,
        ZIP_STORE_HEADER,
        ParseMode::Strict,
        |f| Ok((f.text(0)?, f.text(1)?)),
    )?;
    Ok(ZipStoreMap::new(
        parsed.records.into_iter().collect::<BTreeMap<_, _>>(),
    ))
}

/// Reads back a series written by [`series_to_csv`].
pub fn parse_series<R: Read>(
    source_name: &str,
    input: R,
) -> Result<Vec<DailySalesRecord>, IngestError> {
    let parsed = read_rows(source_name, input, SERIES_HEADER, ParseMode::Strict, |f| {
        let date = f.date(2)?;
        let dow = f.count(3)?;
        if dow != u64::from(day_of_week(date)) {
            return Err(format!("day_of_week {dow} does not match date {date}"));
        }
        Ok(DailySalesRecord {
            store_id: f.text(0)?,
            product_id: f.text(1)?,
            date,
            day_of_week: dow as u8,
            units_sold: f.count(4)?,
            promo_active: f.flag(5)?,
            state_holiday: f.flag(6)?,
            school_holiday: f.flag(7)?,
        })
    })?;
    Ok(parsed.records)
}

fn write_rows(header: &str, rows: impl Iterator<Item = Vec<String>>) -> String {
    let mut w = WriterBuilder::new()
        .has_headers(false)
        .from_writer(Vec::new());
    w.write_record(header.split(',')).expect("in-memory write");
    for row in rows {
        w.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
}

fn yn(b: bool) -> String {
    if b { "Y" } else { "N" }.to_string()
}

pub fn promo_plan_to_csv(records: &[PromoPlanRecord]) -> String {
    write_rows(
        PROMO_PLAN_HEADER,
        records.iter().map(|r| {
            vec![
                r.promo_code.clone(),
                r.promo_type.clone(),
                r.event_id.clone(),
                r.promo_start_date.to_string(),
                r.promo_end_date.to_string(),
                r.promo_target_amount.to_string(),
                r.store_id.clone(),
                r.ad_id.clone(),
                r.product_id.clone(),
                r.offer_qty.to_string(),
                r.offer_price.to_string(),
                yn(r.planogram_change),
                yn(r.special_package),
                yn(r.ad_location),
                yn(r.coupon),
            ]
        }),
    )
}

pub fn online_to_csv(records: &[OnlineTxnRecord]) -> String {
    write_rows(
        ONLINE_HEADER,
        records.iter().map(|r| {
            vec![
                r.product_id.clone(),
                r.date.to_string(),
                r.eod_sales_qty.to_string(),
                r.eod_return_qty.to_string(),
                r.zip.clone(),
                r.city.clone(),
                r.state.clone(),
                r.geo_area_code.clone(),
            ]
        }),
    )
}

pub fn rx_to_csv(records: &[RxTxnRecord]) -> String {
    write_rows(
        RX_HEADER,
        records.iter().map(|r| {
            vec![
                r.store_id.clone(),
                r.product_id.clone(),
                r.date.to_string(),
                r.eod_sales_qty.to_string(),
                r.qty_uom.clone(),
            ]
        }),
    )
}

pub fn series_to_csv(records: &[DailySalesRecord]) -> String {
    write_rows(
        SERIES_HEADER,
        records.iter().map(|r| {
            vec![
                r.store_id.clone(),
                r.product_id.clone(),
                r.date.to_string(),
                r.day_of_week.to_string(),
                r.units_sold.to_string(),
                r.promo_active.to_string(),
                r.state_holiday.to_string(),
                r.school_holiday.to_string(),
            ]
        }),
    )
}
