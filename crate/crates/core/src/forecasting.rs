//! Waiting-time distributions and forecast intervals.
//!
//! `W_s(k)` is the probability that the chain, started in transient state `s`,
//! enters an absorbing state for the first time after exactly `k` events. With
//! `f(s)` the one-step absorption mass and `Q` the transient-to-transient
//! block:
//!
//! ```text
//! W_s(1) = f(s)
//! W_s(k) = Σ_{s'} Q(s, s') · W_{s'}(k-1)
//! ```
//!
//! A forecast interval is the shortest window `[start, end] ⊆ [1, h]` whose
//! mass reaches `theta`, the earliest one on ties.

use std::io::Write;

use crate::error::{Error, Result};
use crate::markov::Pmc;

#[derive(Debug, Clone, PartialEq)]
pub struct WaitingTimeTable {
    horizon: usize,
    /// Indexed by chain state; `None` for absorbing states.
    rows: Vec<Option<Vec<f64>>>,
}

impl WaitingTimeTable {
    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn num_states(&self) -> usize {
        self.rows.len()
    }

    /// `W(1..=h)` for `state`, stored at offsets `0..h`. `None` for absorbing states.
    pub fn row(&self, state: usize) -> Option<&[f64]> {
        self.rows.get(state)?.as_deref()
    }

    pub fn rows(&self) -> impl Iterator<Item = (usize, &[f64])> {
        self.rows
            .iter()
            .enumerate()
            .filter_map(|(s, r)| r.as_deref().map(|r| (s, r)))
    }

    /// CSV with columns `state,k,probability`.
    pub fn write_csv(&self, out: &mut impl Write) -> std::io::Result<()> {
        writeln!(out, "state,k,probability")?;
        for (state, row) in self.rows() {
            for (i, p) in row.iter().enumerate() {
                writeln!(out, "{state},{},{p}", i + 1)?;
            }
        }
        Ok(())
    }
}

/// First-passage distributions for every transient state of `pmc`, by the
/// vector recurrence. Cost is `O(h · n · |Σ|)`.
pub fn waiting_times(pmc: &Pmc, horizon: usize) -> Result<WaitingTimeTable> {
    if horizon == 0 {
        return Err(Error::InvalidParameter("horizon must be >= 1".into()));
    }
    let n = pmc.num_states();
    let transient: Vec<usize> = pmc.transient_states().collect();
    let mut rows: Vec<Option<Vec<f64>>> = vec![None; n];
    for &s in &transient {
        rows[s] = Some(Vec::with_capacity(horizon));
    }

    // prev[s] = W_s(k-1), zero on absorbing states
    let mut prev = vec![0.0; n];
    for &s in &transient {
        prev[s] = pmc.absorption_mass(s);
    }
    let mut cur = vec![0.0; n];
    for k in 1..=horizon {
        if k > 1 {
            for &s in &transient {
                cur[s] = pmc
                    .transitions(s)
                    .filter(|&(t, _)| !pmc.is_absorbing(t))
                    .fold(0.0, |acc, (t, p)| acc + p * prev[t]);
            }
            std::mem::swap(&mut prev, &mut cur);
        }
        for &s in &transient {
            rows[s].as_mut().expect("transient row").push(prev[s]);
        }
    }
    Ok(WaitingTimeTable { horizon, rows })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForecastInterval {
    /// First future event of the window, counting the next event as 1.
    pub start: usize,
    /// Last future event of the window, inclusive.
    pub end: usize,
    pub mass: f64,
}

impl ForecastInterval {
    pub fn spread(&self) -> usize {
        self.end - self.start
    }

    pub fn distance(&self) -> usize {
        self.start
    }
}

pub fn check_theta(theta: f64) -> Result<()> {
    if theta > 0.0 && theta <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "theta must be in (0,1], got {theta}"
        )))
    }
}

/// Shortest window of `wtd` (where `wtd[i]` is `W(i + 1)`) with mass at least
/// `theta`; the earliest such window on ties.
pub fn forecast_interval(wtd: &[f64], theta: f64) -> Result<ForecastInterval> {
    check_theta(theta)?;
    let total = wtd.iter().fold(0.0, |acc, w| acc + w);
    if total < theta {
        return Err(Error::HorizonInsufficient {
            achievable: total,
            theta,
        });
    }

    // Two-pointer sweep: for each right end, advance the left end while the
    // window stays above theta. Windows are visited in increasing right end,
    // so a strictly shorter window is the only reason to replace the best.
    let mut best: Option<(usize, usize)> = None;
    let mut left = 0;
    let mut sum = 0.0;
    for (right, &w) in wtd.iter().enumerate() {
        sum += w;
        if sum < theta {
            continue;
        }
        while left < right && sum - wtd[left] >= theta {
            sum -= wtd[left];
            left += 1;
        }
        if best.is_none_or(|(l, r)| right - left < r - l) {
            best = Some((left, right));
        }
    }
    let (l, r) = best.unwrap_or((0, wtd.len().saturating_sub(1)));
    Ok(ForecastInterval {
        start: l + 1,
        end: r + 1,
        mass: wtd[l..=r].iter().fold(0.0, |acc, w| acc + w),
    })
}

/// Interval for every state of the table, `None` for absorbing states.
pub fn intervals(
    wtt: &WaitingTimeTable,
    theta: f64,
) -> Result<Vec<Option<std::result::Result<ForecastInterval, Error>>>> {
    check_theta(theta)?;
    Ok((0..wtt.num_states())
        .map(|s| wtt.row(s).map(|row| forecast_interval(row, theta)))
        .collect())
}
