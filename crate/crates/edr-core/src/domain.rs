//! Scenario data model: time grid, per-step series, battery and station
//! parameters.
//!
//! Internal units are fixed across the whole crate: power in kW, energy
//! in kWh, money in dollars, prices in $/kWh, state of charge as a
//! fraction of rated capacity. External files may quote prices per MWh;
//! that conversion happens at the I/O boundary ([`price_per_kwh`]),
//! never inside the model.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

const MINUTES_PER_DAY: u32 = 24 * 60;

/// Validation failure while constructing a domain value.
#[derive(Debug, Error, PartialEq)]
pub enum DomainError {
    #[error("invalid clock time `{0}`, expected HH:MM with hour < 24")]
    InvalidClockTime(String),
    #[error("{field} must be positive")]
    NonPositiveDuration { field: &'static str },
    #[error("step of {step_min} min does not divide the {horizon_min} min horizon")]
    StepNotDivisible { horizon_min: u32, step_min: u32 },
    #[error("window starting {start} with {horizon_min} min horizon runs past midnight")]
    PastMidnight { start: ClockTime, horizon_min: u32 },
    #[error("{field} has {actual} values but the time grid has {expected} steps")]
    SeriesLength {
        field: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("{field}[{index}] = {value} must be finite and non-negative")]
    InvalidSeriesValue {
        field: &'static str,
        index: usize,
        value: f64,
    },
    #[error("{field} = {value} must be finite and non-negative")]
    NegativeValue { field: &'static str, value: f64 },
    #[error(
        "notification {notification} plus {decision_window_min} min decision window \
         does not land on the event start {event_start}"
    )]
    EventTimingMismatch {
        notification: ClockTime,
        decision_window_min: u32,
        event_start: ClockTime,
    },
    #[error(
        "SOC ordering violated: need 0 <= soc_min ({soc_min}) <= initial_soc ({initial_soc}) \
         <= soc_max ({soc_max}) <= 1"
    )]
    SocOrdering {
        soc_min: f64,
        initial_soc: f64,
        soc_max: f64,
    },
    #[error("terminal_soc_min = {value} must lie within [soc_min, soc_max]")]
    TerminalSocOutOfRange { value: f64 },
    #[error(
        "efficiency ordering violated: need discharge_eff ({discharge_eff}) >= 1 >= \
         charge_eff ({charge_eff}) > 0"
    )]
    EfficiencyOrdering {
        discharge_eff: f64,
        charge_eff: f64,
    },
    #[error("ev_price_multiplier = {0} must be a finite value greater than 1")]
    MultiplierNotAboveOne(f64),
}

/// Naive wall-clock time of day, stored as minutes since midnight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ClockTime(u32);

impl ClockTime {
    pub fn from_minutes(minutes: u32) -> Result<Self, DomainError> {
        if minutes >= MINUTES_PER_DAY {
            return Err(DomainError::InvalidClockTime(format!("{minutes} min")));
        }
        Ok(ClockTime(minutes))
    }

    pub fn from_hm(hour: u32, minute: u32) -> Result<Self, DomainError> {
        if hour >= 24 || minute >= 60 {
            return Err(DomainError::InvalidClockTime(format!("{hour}:{minute:02}")));
        }
        Ok(ClockTime(hour * 60 + minute))
    }

    pub fn minutes(self) -> u32 {
        self.0
    }
}

impl FromStr for ClockTime {
    type Err = DomainError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || DomainError::InvalidClockTime(s.to_string());
        let (h, m) = s.split_once(':').ok_or_else(bad)?;
        let hour: u32 = h.trim().parse().map_err(|_| bad())?;
        let minute: u32 = m.trim().parse().map_err(|_| bad())?;
        if m.trim().len() != 2 {
            return Err(bad());
        }
        ClockTime::from_hm(hour, minute).map_err(|_| bad())
    }
}

impl fmt::Display for ClockTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:02}:{:02}", self.0 / 60, self.0 % 60)
    }
}

/// Discrete event window: `steps` intervals of `step_min` minutes
/// starting at `start`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimeGrid {
    start: ClockTime,
    horizon_min: u32,
    step_min: u32,
}

impl TimeGrid {
    pub fn new(start: ClockTime, horizon_min: u32, step_min: u32) -> Result<Self, DomainError> {
        if horizon_min == 0 {
            return Err(DomainError::NonPositiveDuration { field: "horizon" });
        }
        if step_min == 0 {
            return Err(DomainError::NonPositiveDuration { field: "step" });
        }
        if horizon_min % step_min != 0 {
            return Err(DomainError::StepNotDivisible {
                horizon_min,
                step_min,
            });
        }
        if start.minutes() + horizon_min > MINUTES_PER_DAY {
            return Err(DomainError::PastMidnight { start, horizon_min });
        }
        Ok(TimeGrid {
            start,
            horizon_min,
            step_min,
        })
    }

    /// Grid over `horizon_hours` whole hours from `start`.
    pub fn from_hours(
        start: ClockTime,
        horizon_hours: u32,
        step_min: u32,
    ) -> Result<Self, DomainError> {
        TimeGrid::new(start, horizon_hours * 60, step_min)
    }

    pub fn steps(&self) -> usize {
        (self.horizon_min / self.step_min) as usize
    }

    pub fn start(&self) -> ClockTime {
        self.start
    }

    /// End of the window in minutes since midnight; may equal 1440
    /// (midnight) as an exclusive boundary.
    pub fn end_minutes(&self) -> u32 {
        self.start.minutes() + self.horizon_min
    }

    pub fn step_minutes(&self) -> u32 {
        self.step_min
    }

    /// Step width in hours, the Δt factor of every energy sum.
    pub fn step_hours(&self) -> f64 {
        f64::from(self.step_min) / 60.0
    }

    pub fn horizon_hours(&self) -> f64 {
        f64::from(self.horizon_min) / 60.0
    }

    /// Start-of-interval label for step `index`.
    pub fn step_start(&self, index: usize) -> ClockTime {
        debug_assert!(index < self.steps());
        ClockTime(self.start.minutes() + index as u32 * self.step_min)
    }

    pub fn step_labels(&self) -> impl Iterator<Item = ClockTime> + '_ {
        (0..self.steps()).map(|i| self.step_start(i))
    }
}

fn check_series(
    field: &'static str,
    grid: &TimeGrid,
    values: &[f64],
) -> Result<(), DomainError> {
    if values.len() != grid.steps() {
        return Err(DomainError::SeriesLength {
            field,
            expected: grid.steps(),
            actual: values.len(),
        });
    }
    for (index, &value) in values.iter().enumerate() {
        if !value.is_finite() || value < 0.0 {
            return Err(DomainError::InvalidSeriesValue {
                field,
                index,
                value,
            });
        }
    }
    Ok(())
}

fn check_scalar(field: &'static str, value: f64) -> Result<(), DomainError> {
    if !value.is_finite() || value < 0.0 {
        return Err(DomainError::NegativeValue { field, value });
    }
    Ok(())
}

/// Per-step grid electricity price in $/kWh.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceSeries {
    per_kwh: Vec<f64>,
    currency: String,
}

impl PriceSeries {
    pub fn new(grid: &TimeGrid, per_kwh: Vec<f64>) -> Result<Self, DomainError> {
        Self::with_currency(grid, per_kwh, "$")
    }

    pub fn with_currency(
        grid: &TimeGrid,
        per_kwh: Vec<f64>,
        currency: &str,
    ) -> Result<Self, DomainError> {
        check_series("grid_price", grid, &per_kwh)?;
        Ok(PriceSeries {
            per_kwh,
            currency: currency.to_string(),
        })
    }

    pub fn per_kwh(&self) -> &[f64] {
        &self.per_kwh
    }

    pub fn currency(&self) -> &str {
        &self.currency
    }
}

/// Short-term forecast of the station charging demand, kW per step.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadForecast {
    kw: Vec<f64>,
}

impl LoadForecast {
    pub fn new(grid: &TimeGrid, kw: Vec<f64>) -> Result<Self, DomainError> {
        check_series("forecast", grid, &kw)?;
        Ok(LoadForecast { kw })
    }

    pub fn kw(&self) -> &[f64] {
        &self.kw
    }
}

/// Event signal from the grid operator: incentive price, minimum load
/// reduction, and the notification timing that precedes the window.
#[derive(Debug, Clone, PartialEq)]
pub struct EdrSignal {
    incentive_per_kwh: Vec<f64>,
    min_reduction_kw: Vec<f64>,
    notification: ClockTime,
    decision_window_min: u32,
}

impl EdrSignal {
    pub fn new(
        grid: &TimeGrid,
        incentive_per_kwh: Vec<f64>,
        min_reduction_kw: Vec<f64>,
        notification: ClockTime,
        decision_window_min: u32,
    ) -> Result<Self, DomainError> {
        check_series("incentive_price", grid, &incentive_per_kwh)?;
        check_series("min_reduction", grid, &min_reduction_kw)?;
        if notification.minutes() + decision_window_min != grid.start().minutes() {
            return Err(DomainError::EventTimingMismatch {
                notification,
                decision_window_min,
                event_start: grid.start(),
            });
        }
        Ok(EdrSignal {
            incentive_per_kwh,
            min_reduction_kw,
            notification,
            decision_window_min,
        })
    }

    /// Broadcast constant incentive and reduction values over the grid.
    pub fn constant(
        grid: &TimeGrid,
        incentive_per_kwh: f64,
        min_reduction_kw: f64,
        notification: ClockTime,
        decision_window_min: u32,
    ) -> Result<Self, DomainError> {
        EdrSignal::new(
            grid,
            vec![incentive_per_kwh; grid.steps()],
            vec![min_reduction_kw; grid.steps()],
            notification,
            decision_window_min,
        )
    }

    pub fn incentive_per_kwh(&self) -> &[f64] {
        &self.incentive_per_kwh
    }

    pub fn min_reduction_kw(&self) -> &[f64] {
        &self.min_reduction_kw
    }

    pub fn notification(&self) -> ClockTime {
        self.notification
    }

    pub fn decision_window_min(&self) -> u32 {
        self.decision_window_min
    }
}

/// Battery energy storage parameters.
///
/// Efficiency convention follows the SOC balance: discharging drains
/// stored energy `discharge_eff` times faster than it delivers power
/// (so `discharge_eff >= 1`), and charging stores only `charge_eff`
/// of the purchased energy (`charge_eff <= 1`).
#[derive(Debug, Clone, PartialEq)]
pub struct BesSpec {
    pub rated_capacity_kwh: f64,
    pub max_discharge_kw: f64,
    pub max_charge_kw: f64,
    pub discharge_eff: f64,
    pub charge_eff: f64,
    pub soc_min: f64,
    pub soc_max: f64,
    pub initial_soc: f64,
    /// Optional floor on the end-of-window SOC; off by default so the
    /// objective is free to drain the battery to `soc_min`.
    pub terminal_soc_min: Option<f64>,
}

impl BesSpec {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        rated_capacity_kwh: f64,
        max_discharge_kw: f64,
        max_charge_kw: f64,
        discharge_eff: f64,
        charge_eff: f64,
        soc_min: f64,
        soc_max: f64,
        initial_soc: f64,
    ) -> Result<Self, DomainError> {
        check_scalar("rated_capacity", rated_capacity_kwh)?;
        check_scalar("max_discharge_power", max_discharge_kw)?;
        check_scalar("max_charge_power", max_charge_kw)?;
        if !(discharge_eff.is_finite()
            && charge_eff.is_finite()
            && discharge_eff >= 1.0
            && charge_eff <= 1.0
            && charge_eff > 0.0)
        {
            return Err(DomainError::EfficiencyOrdering {
                discharge_eff,
                charge_eff,
            });
        }
        let ordered = soc_min.is_finite()
            && initial_soc.is_finite()
            && soc_max.is_finite()
            && 0.0 <= soc_min
            && soc_min <= initial_soc
            && initial_soc <= soc_max
            && soc_max <= 1.0;
        if !ordered {
            return Err(DomainError::SocOrdering {
                soc_min,
                initial_soc,
                soc_max,
            });
        }
        Ok(BesSpec {
            rated_capacity_kwh,
            max_discharge_kw,
            max_charge_kw,
            discharge_eff,
            charge_eff,
            soc_min,
            soc_max,
            initial_soc,
            terminal_soc_min: None,
        })
    }

    pub fn with_terminal_soc_min(mut self, value: f64) -> Result<Self, DomainError> {
        if !value.is_finite() || value < self.soc_min || value > self.soc_max {
            return Err(DomainError::TerminalSocOutOfRange { value });
        }
        self.terminal_soc_min = Some(value);
        Ok(self)
    }

    /// Same battery with a different rated capacity; all other limits
    /// and SOC fractions are kept.
    pub fn with_rated_capacity(&self, rated_capacity_kwh: f64) -> Result<Self, DomainError> {
        check_scalar("rated_capacity", rated_capacity_kwh)?;
        let mut spec = self.clone();
        spec.rated_capacity_kwh = rated_capacity_kwh;
        Ok(spec)
    }
}

/// Station-level settings.
#[derive(Debug, Clone, PartialEq)]
pub struct StationConfig {
    /// EV retail price as a multiple of the grid price. Must exceed 1,
    /// otherwise serving EVs can never turn a profit.
    pub ev_price_multiplier: f64,
}

impl StationConfig {
    pub fn new(ev_price_multiplier: f64) -> Result<Self, DomainError> {
        if !ev_price_multiplier.is_finite() || ev_price_multiplier <= 1.0 {
            return Err(DomainError::MultiplierNotAboveOne(ev_price_multiplier));
        }
        Ok(StationConfig {
            ev_price_multiplier,
        })
    }
}

/// Everything needed for one participation decision.
///
/// Construction re-checks that every series is aligned to the grid;
/// a length mismatch is an error, never a resample.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub grid: TimeGrid,
    pub prices: PriceSeries,
    pub forecast: LoadForecast,
    pub edr: EdrSignal,
    pub bes: BesSpec,
    pub station: StationConfig,
}

impl Scenario {
    pub fn new(
        grid: TimeGrid,
        prices: PriceSeries,
        forecast: LoadForecast,
        edr: EdrSignal,
        bes: BesSpec,
        station: StationConfig,
    ) -> Result<Self, DomainError> {
        check_series("grid_price", &grid, prices.per_kwh())?;
        check_series("forecast", &grid, forecast.kw())?;
        check_series("incentive_price", &grid, edr.incentive_per_kwh())?;
        check_series("min_reduction", &grid, edr.min_reduction_kw())?;
        if edr.notification().minutes() + edr.decision_window_min() != grid.start().minutes() {
            return Err(DomainError::EventTimingMismatch {
                notification: edr.notification(),
                decision_window_min: edr.decision_window_min(),
                event_start: grid.start(),
            });
        }
        Ok(Scenario {
            grid,
            prices,
            forecast,
            edr,
            bes,
            station,
        })
    }

    /// Per-step EV retail price series.
    pub fn ev_prices(&self) -> PriceSeries {
        ev_price(&self.prices, &self.station)
    }

    /// Copy of the scenario with the battery capacity replaced.
    pub fn with_rated_capacity(&self, kwh: f64) -> Result<Scenario, DomainError> {
        let mut s = self.clone();
        s.bes = self.bes.with_rated_capacity(kwh)?;
        Ok(s)
    }
}

/// Convert a $/MWh quote to the internal $/kWh unit.
pub fn price_per_kwh(per_mwh: f64) -> Result<f64, DomainError> {
    check_scalar("price_per_mwh", per_mwh)?;
    Ok(per_mwh / 1000.0)
}

/// EV retail price series: the grid price scaled by the station
/// multiplier, pointwise.
pub fn ev_price(prices: &PriceSeries, station: &StationConfig) -> PriceSeries {
    PriceSeries {
        per_kwh: prices
            .per_kwh()
            .iter()
            .map(|p| station.ev_price_multiplier * p)
            .collect(),
        currency: prices.currency().to_string(),
    }
}
