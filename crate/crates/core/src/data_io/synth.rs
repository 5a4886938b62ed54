//! Seeded synthetic indicator panels.
//!
//! The generator uses SplitMix64 and only `+ - * /` after seeding, so a
//! given spec produces the same panel on every platform. Per month `t >= 1`
//! it draws, in this order: seven approximate normals (sum of twelve uniforms
//! minus six) for exchange rate, interest rate, reserves, credit, inflation,
//! oil and equity; two uniforms for calm-period relief; one normal for the
//! episode shock size. The same number of draws is consumed every month.
//!
//! Calm months occasionally see a relief event (probability 0.05): the
//! exchange rate eases, rates fall and reserves flow in together. This skews
//! the pressure index downward, so calm panels rarely cross the crisis threshold.
//! Episode months add a pressure shock `severity * (2 + |e|)` in units of each
//! series' volatility: depreciation, rate spikes and reserve losses, with
//! credit and equity contracting and inflation rising.

use crate::error::{Error, Result};
use crate::panel::{IndicatorPanel, YearMonth, RAW_SERIES};

const RELIEF_PROBABILITY: f64 = 0.05;
const RELIEF_SIZE: f64 = 2.5;
// Monthly changes are floored here so level series stay positive.
const MIN_PCT_CHANGE: f64 = -0.5;

/// SplitMix64 (Steele, Lea and Flood), a counter-based 64-bit generator.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform on `[0, 1)` from the top 53 bits.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Irwin-Hall approximation to a standard normal, bounded to `[-6, 6]`.
    pub fn normal(&mut self) -> f64 {
        let mut s = 0.0;
        for _ in 0..12 {
            s += self.uniform();
        }
        s - 6.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrisisEpisode {
    /// Panel month index of the first shocked month (`>= 1`).
    pub start: usize,
    pub length: usize,
    /// Multiplier on shock sizes, `> 1`.
    pub severity: f64,
}

/// Monthly shock scale per series, in [`RAW_SERIES`] order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Volatilities(pub [f64; 7]);

impl Default for Volatilities {
    fn default() -> Self {
        // exchange rate, interest rate, reserves, credit, inflation (level), oil, equity
        Volatilities([0.01, 0.03, 0.02, 0.01, 0.2, 0.06, 0.05])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub seed: u64,
    pub n_months: usize,
    pub start: YearMonth,
    pub episodes: Vec<CrisisEpisode>,
    pub volatility: Volatilities,
}

impl SynthSpec {
    /// 232 months from 1999-01 with no crisis episodes.
    pub fn new(seed: u64) -> Self {
        SynthSpec {
            seed,
            n_months: 232,
            start: YearMonth::new(1999, 1).expect("valid month"),
            episodes: Vec::new(),
            volatility: Volatilities::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_months < 12 {
            return Err(Error::InvalidSynthSpec(format!(
                "n_months must be at least 12, got {}",
                self.n_months
            )));
        }
        for (i, ep) in self.episodes.iter().enumerate() {
            if ep.start < 1 || ep.length < 1 || ep.start + ep.length > self.n_months {
                return Err(Error::InvalidSynthSpec(format!(
                    "episode {i} (start {}, length {}) lies outside months 1..{}",
                    ep.start,
                    ep.length,
                    self.n_months - 1
                )));
            }
            if !(ep.severity > 1.0 && ep.severity.is_finite()) {
                return Err(Error::InvalidSynthSpec(format!(
                    "episode {i} severity must exceed 1, got {}",
                    ep.severity
                )));
            }
        }
        if let Some(v) = self.volatility.0.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidSynthSpec(format!(
                "volatilities must be positive, got {v}"
            )));
        }
        Ok(())
    }

    fn severity_at(&self, t: usize) -> Option<f64> {
        self.episodes
            .iter()
            .filter(|ep| (ep.start..ep.start + ep.length).contains(&t))
            .map(|ep| ep.severity)
            .reduce(f64::max)
    }
}

/// Parses `key=value` lines; `#` starts a comment.
///
/// Keys: `seed`, `n_months`, `start` (`YYYY-MM`), `episode` (`start,length,severity`,
/// repeatable) and `vol.<series>` for each raw series name. `seed_override`
/// takes precedence over a `seed` line; with neither, [`Error::MissingSeed`]
/// is returned.
pub fn parse_synth_config(text: &str, seed_override: Option<u64>) -> Result<SynthSpec> {
    let mut spec = SynthSpec::new(0);
    let mut seed = None;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let bad = |msg: &str| Error::InvalidSynthSpec(format!("line {}: {msg}", lineno + 1));
        let (key, value) = line.split_once('=').ok_or_else(|| bad("expected key=value"))?;
        let (key, value) = (key.trim(), value.trim());
        match key {
            "seed" => {
                seed = Some(
                    value
                        .parse::<u64>()
                        .map_err(|_| bad("seed must be an unsigned integer"))?,
                )
            }
            "n_months" => spec.n_months = value.parse().map_err(|_| bad("n_months must be an integer"))?,
            "start" => spec.start = value.parse().map_err(|_| bad("start must be YYYY-MM"))?,
            "episode" => {
                let parts: Vec<&str> = value.split(',').map(str::trim).collect();
                if parts.len() != 3 {
                    return Err(bad("episode must be start,length,severity"));
                }
                spec.episodes.push(CrisisEpisode {
                    start: parts[0].parse().map_err(|_| bad("episode start must be an integer"))?,
                    length: parts[1].parse().map_err(|_| bad("episode length must be an integer"))?,
                    severity: parts[2].parse().map_err(|_| bad("episode severity must be a number"))?,
                });
            }
            _ => {
                let series = key
                    .strip_prefix("vol.")
                    .and_then(|name| RAW_SERIES.iter().position(|s| *s == name))
                    .ok_or_else(|| bad(&format!("unknown key '{key}'")))?;
                spec.volatility.0[series] = value.parse().map_err(|_| bad("volatility must be a number"))?;
            }
        }
    }
    spec.seed = seed_override.or(seed).ok_or(Error::MissingSeed)?;
    spec.validate()?;
    Ok(spec)
}

pub fn generate_synthetic(spec: &SynthSpec) -> Result<IndicatorPanel> {
    spec.validate()?;
    let n = spec.n_months;
    let vol = &spec.volatility.0;
    let mut rng = SplitMix64::new(spec.seed);

    // exchange rate, interest rate, reserves, credit, inflation, oil, equity
    let base_inflation = 0.5;
    let mut levels = [1.0, 8.0, 25_000.0, 60_000.0, base_inflation, 25.0, 400.0];
    let mut columns: Vec<Vec<f64>> = levels.iter().map(|&v| vec![v]).collect();

    for t in 1..n {
        let mut e = [0.0; 7];
        for v in e.iter_mut() {
            *v = rng.normal();
        }
        let u_relief = rng.uniform();
        let u_size = rng.uniform();
        let e_shock = rng.normal();

        let severity = spec.severity_at(t);
        let pressure = severity.map_or(0.0, |s| s * (2.0 + e_shock.abs()));
        let contraction = severity.unwrap_or(0.0);
        let relief = if severity.is_none() && u_relief < RELIEF_PROBABILITY {
            RELIEF_SIZE * (1.0 + u_size)
        } else {
            0.0
        };

        let changes = [
            vol[0] * (e[0] - relief + pressure),
            vol[1] * (e[1] - relief + pressure),
            vol[2] * (e[2] + relief - pressure),
            0.002 + vol[3] * (e[3] - contraction),
            0.0,
            vol[5] * e[5],
            0.005 + vol[6] * (e[6] - contraction),
        ];
        for (j, level) in levels.iter_mut().enumerate() {
            if j == 4 {
                *level = 0.8 * *level + 0.2 * base_inflation + vol[4] * (e[4] + contraction);
            } else {
                *level *= 1.0 + changes[j].max(MIN_PCT_CHANGE);
            }
            columns[j].push(*level);
        }
    }

    let series = RAW_SERIES.iter().map(|s| s.to_string()).zip(columns).collect();
    IndicatorPanel::new(YearMonth::succession(spec.start, n), series)
}
