use std::fmt;
use std::str::FromStr;

use crate::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spacing {
    Linear,
    Log,
}

/// A sample grid written `min:max:count`, endpoints inclusive. A trailing
/// `:log` spaces the samples geometrically.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub count: usize,
    pub spacing: Spacing,
}

impl GridSpec {
    pub fn linear(min: f64, max: f64, count: usize) -> Self {
        GridSpec {
            min,
            max,
            count,
            spacing: Spacing::Linear,
        }
    }

    pub fn log(min: f64, max: f64, count: usize) -> Self {
        GridSpec {
            min,
            max,
            count,
            spacing: Spacing::Log,
        }
    }

    /// Exactly `count` samples; the first is `min` and the last is `max`.
    pub fn values(&self) -> Vec<f64> {
        match self.count {
            0 => Vec::new(),
            1 => vec![self.min],
            n => {
                let last = (n - 1) as f64;
                (0..n)
                    .map(|i| {
                        if i == n - 1 {
                            return self.max;
                        }
                        let t = i as f64 / last;
                        match self.spacing {
                            Spacing::Linear => self.min + t * (self.max - self.min),
                            Spacing::Log => self.min * (self.max / self.min).powf(t),
                        }
                    })
                    .collect()
            }
        }
    }
}

impl FromStr for GridSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = |reason: &str| Error::Grid {
            spec: s.to_string(),
            reason: reason.to_string(),
        };
        let parts: Vec<&str> = s.split(':').collect();
        let spacing = match parts.len() {
            3 => Spacing::Linear,
            4 if parts[3] == "log" => Spacing::Log,
            4 if parts[3] == "lin" => Spacing::Linear,
            _ => return Err(bad("expected min:max:count[:log]")),
        };
        let min: f64 = parts[0]
            .trim()
            .parse()
            .map_err(|_| bad("min is not a number"))?;
        let max: f64 = parts[1]
            .trim()
            .parse()
            .map_err(|_| bad("max is not a number"))?;
        let count: usize = parts[2]
            .trim()
            .parse()
            .map_err(|_| bad("count is not an integer"))?;
        if !min.is_finite() || !max.is_finite() {
            return Err(bad("bounds must be finite"));
        }
        if count == 0 {
            return Err(bad("count must be at least 1"));
        }
        if max < min {
            return Err(bad("max < min"));
        }
        if spacing == Spacing::Log && min <= 0.0 {
            return Err(bad("log spacing needs min > 0"));
        }
        Ok(GridSpec {
            min,
            max,
            count,
            spacing,
        })
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.min, self.max, self.count)?;
        if self.spacing == Spacing::Log {
            write!(f, ":log")?;
        }
        Ok(())
    }
}
