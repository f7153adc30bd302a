//! Frequency-tier decomposition of a demand network into three scaled subproblems.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_BETA1: f64 = 30.0;
pub const DEFAULT_BETA2: f64 = 5.0;

#[derive(Debug, Error)]
pub enum DecompError {
    #[error("need beta1 > beta2 > 0 (got beta1 = {beta1}, beta2 = {beta2})")]
    Parameters { beta1: f64, beta2: f64 },
    #[error("edge {origin}->{destination} has negative frequency {frequency}")]
    NegativeFrequency { origin: String, destination: String, frequency: f64 },
    #[error("missing {0} tier result")]
    MissingTier(Tier),
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{origin}: {source}")]
    Csv {
        origin: String,
        #[source]
        source: csv::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tier {
    High,
    Mid,
    Low,
}

impl Tier {
    pub const ALL: [Tier; 3] = [Tier::High, Tier::Mid, Tier::Low];

    pub fn as_str(self) -> &'static str {
        match self {
            Tier::High => "high",
            Tier::Mid => "mid",
            Tier::Low => "low",
        }
    }

    pub fn of(frequency: f64, beta1: f64, beta2: f64) -> Tier {
        if frequency > beta1 {
            Tier::High
        } else if frequency >= beta2 {
            Tier::Mid
        } else {
            Tier::Low
        }
    }

    pub fn scale(self, beta1: f64, beta2: f64) -> f64 {
        match self {
            Tier::High => beta1,
            Tier::Mid => beta2,
            Tier::Low => 1.0,
        }
    }
}

impl std::fmt::Display for Tier {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Daily trip frequency between zone pairs.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DemandNetwork {
    pub edges: BTreeMap<(String, String), f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct EdgeRow {
    origin: String,
    destination: String,
    frequency: f64,
}

impl DemandNetwork {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, origin: &str, destination: &str, frequency: f64) -> Result<(), DecompError> {
        if !(frequency >= 0.0) {
            return Err(DecompError::NegativeFrequency { origin: origin.into(), destination: destination.into(), frequency });
        }
        *self.edges.entry((origin.to_string(), destination.to_string())).or_insert(0.0) += frequency;
        Ok(())
    }

    pub fn total(&self) -> f64 {
        self.edges.values().sum()
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn read_csv<R: Read>(reader: R, origin: &str) -> Result<Self, DecompError> {
        let mut net = Self::new();
        for row in csv::Reader::from_reader(reader).deserialize::<EdgeRow>() {
            let row = row.map_err(|source| DecompError::Csv { origin: origin.to_string(), source })?;
            net.insert(&row.origin, &row.destination, row.frequency)?;
        }
        Ok(net)
    }

    pub fn load(path: &Path) -> Result<Self, DecompError> {
        let f = std::fs::File::open(path).map_err(|source| DecompError::Io { path: path.display().to_string(), source })?;
        Self::read_csv(f, &path.display().to_string())
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["origin", "destination", "frequency"])?;
        for ((o, d), f) in &self.edges {
            w.write_record([o.as_str(), d.as_str(), &format!("{f}")])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub beta1: f64,
    pub beta2: f64,
    pub high: DemandNetwork,
    pub mid: DemandNetwork,
    pub low: DemandNetwork,
    /// Low-tier edges that round to zero trips.
    pub dropped: DemandNetwork,
}

impl Decomposition {
    pub fn tier(&self, t: Tier) -> &DemandNetwork {
        match t {
            Tier::High => &self.high,
            Tier::Mid => &self.mid,
            Tier::Low => &self.low,
        }
    }

    pub fn dropped_mass(&self) -> f64 {
        self.dropped.total()
    }

    /// Trip totals of each tier scaled back to the original network.
    pub fn trip_totals(&self) -> TierResults {
        let r = |t: Tier| Some(TierResult { batteries: 0.0, cost: 0.0, trips: self.tier(t).total() });
        TierResults { high: r(Tier::High), mid: r(Tier::Mid), low: r(Tier::Low) }
    }
}

pub fn decompose(net: &DemandNetwork, beta1: f64, beta2: f64) -> Result<Decomposition, DecompError> {
    if !(beta2 > 0.0 && beta1 > beta2) {
        return Err(DecompError::Parameters { beta1, beta2 });
    }
    let mut d = Decomposition {
        beta1,
        beta2,
        high: DemandNetwork::new(),
        mid: DemandNetwork::new(),
        low: DemandNetwork::new(),
        dropped: DemandNetwork::new(),
    };
    for (key, &f) in &net.edges {
        let tier = Tier::of(f, beta1, beta2);
        let n = (f / tier.scale(beta1, beta2)).round_ties_even();
        if n == 0.0 {
            d.dropped.edges.insert(key.clone(), f);
            continue;
        }
        let out = match tier {
            Tier::High => &mut d.high,
            Tier::Mid => &mut d.mid,
            Tier::Low => &mut d.low,
        };
        out.edges.insert(key.clone(), n);
    }
    Ok(d)
}

/// Largest possible difference between the recombined and original trip totals.
pub fn rounding_bound(net: &DemandNetwork, beta1: f64, beta2: f64) -> f64 {
    net.edges.values().map(|&f| 0.5 * Tier::of(f, beta1, beta2).scale(beta1, beta2)).sum()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct TierResult {
    pub batteries: f64,
    pub cost: f64,
    pub trips: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TierResults {
    pub high: Option<TierResult>,
    pub mid: Option<TierResult>,
    pub low: Option<TierResult>,
}

impl TierResults {
    pub fn get(&self, t: Tier) -> Option<TierResult> {
        match t {
            Tier::High => self.high,
            Tier::Mid => self.mid,
            Tier::Low => self.low,
        }
    }

    pub fn set(&mut self, t: Tier, r: TierResult) {
        match t {
            Tier::High => self.high = Some(r),
            Tier::Mid => self.mid = Some(r),
            Tier::Low => self.low = Some(r),
        }
    }
}

/// Scales each tier result by its multiplier and sums them.
pub fn recombine(results: &TierResults, beta1: f64, beta2: f64) -> Result<TierResult, DecompError> {
    let mut total = TierResult::default();
    for t in Tier::ALL {
        let r = results.get(t).ok_or(DecompError::MissingTier(t))?;
        let k = t.scale(beta1, beta2);
        total.batteries += k * r.batteries;
        total.cost += k * r.cost;
        total.trips += k * r.trips;
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HistogramRow {
    pub tier: Tier,
    pub bin_lo: f64,
    pub bin_hi: f64,
    pub edges: usize,
}

/// Counts edges of the original network per frequency bin, labelled by tier.
pub fn tier_histogram(net: &DemandNetwork, beta1: f64, beta2: f64, bin_width: f64) -> Vec<HistogramRow> {
    let mut bins: BTreeMap<(Tier, i64), usize> = BTreeMap::new();
    for &f in net.edges.values() {
        let k = (f / bin_width).floor() as i64;
        *bins.entry((Tier::of(f, beta1, beta2), k)).or_default() += 1;
    }
    bins.into_iter()
        .map(|((tier, k), edges)| HistogramRow { tier, bin_lo: k as f64 * bin_width, bin_hi: (k + 1) as f64 * bin_width, edges })
        .collect()
}

pub fn write_histogram_csv<W: Write>(writer: W, rows: &[HistogramRow]) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(writer);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
