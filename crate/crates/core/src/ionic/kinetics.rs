//! Gate kinetics: the standard rate-function forms and sampled tables.

use serde::{Deserialize, Serialize};

/// A function of membrane voltage (native units).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum RateFn {
    Constant {
        value: f64,
    },
    /// `a exp((V - v_half) / k)`
    Exponential {
        a: f64,
        v_half: f64,
        k: f64,
    },
    /// `a (V - v_half) / (1 - exp(-(V - v_half) / k))`, with its limit `a k`
    /// at `V = v_half`.
    Linoid {
        a: f64,
        v_half: f64,
        k: f64,
    },
    /// `a / (1 + exp(-(V - v_half) / k))`
    Sigmoid {
        a: f64,
        v_half: f64,
        k: f64,
    },
    /// Monotone cubic interpolation of samples; constant beyond the ends.
    Table(Table),
}

impl RateFn {
    #[inline]
    pub fn eval(&self, v: f64) -> f64 {
        match *self {
            RateFn::Constant { value } => value,
            RateFn::Exponential { a, v_half, k } => a * ((v - v_half) / k).exp(),
            RateFn::Linoid { a, v_half, k } => {
                let x = (v - v_half) / k;
                if x.abs() < 1e-6 {
                    a * k * (1.0 + 0.5 * x + x * x / 12.0)
                } else {
                    a * k * x / -(-x).exp_m1()
                }
            }
            RateFn::Sigmoid { a, v_half, k } => a / (1.0 + (-(v - v_half) / k).exp()),
            RateFn::Table(ref t) => t.eval(v),
        }
    }

    pub(crate) fn check(&self) -> Result<(), String> {
        match *self {
            RateFn::Constant { value } => finite(&[value]),
            RateFn::Exponential { a, v_half, k }
            | RateFn::Linoid { a, v_half, k }
            | RateFn::Sigmoid { a, v_half, k } => {
                finite(&[a, v_half, k])?;
                if k == 0.0 {
                    return Err("slope factor k must be nonzero".into());
                }
                Ok(())
            }
            RateFn::Table(_) => Ok(()),
        }
    }
}

fn finite(xs: &[f64]) -> Result<(), String> {
    if xs.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err("coefficients must be finite".into())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct TableData {
    v: Vec<f64>,
    y: Vec<f64>,
}

/// Fritsch-Carlson monotone cubic Hermite interpolant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TableData", into = "TableData")]
pub struct Table {
    v: Vec<f64>,
    y: Vec<f64>,
    slopes: Vec<f64>,
}

impl From<Table> for TableData {
    fn from(t: Table) -> Self {
        TableData { v: t.v, y: t.y }
    }
}

impl TryFrom<TableData> for Table {
    type Error = String;

    fn try_from(d: TableData) -> Result<Self, String> {
        Table::new(d.v, d.y)
    }
}

impl Table {
    pub fn new(v: Vec<f64>, y: Vec<f64>) -> Result<Self, String> {
        if v.len() != y.len() {
            return Err(format!(
                "table has {} voltages but {} values",
                v.len(),
                y.len()
            ));
        }
        if v.len() < 2 {
            return Err("table needs at least two samples".into());
        }
        if v.iter().chain(&y).any(|x| !x.is_finite()) {
            return Err("table entries must be finite".into());
        }
        if let Some(i) = v.windows(2).position(|w| w[1] <= w[0]) {
            return Err(format!(
                "table voltages must increase strictly (entry {})",
                i + 1
            ));
        }
        let n = v.len();
        let secant: Vec<f64> = (0..n - 1)
            .map(|i| (y[i + 1] - y[i]) / (v[i + 1] - v[i]))
            .collect();
        let mut m = vec![0.0; n];
        m[0] = secant[0];
        m[n - 1] = secant[n - 2];
        for i in 1..n - 1 {
            m[i] = if secant[i - 1] * secant[i] <= 0.0 {
                0.0
            } else {
                0.5 * (secant[i - 1] + secant[i])
            };
        }
        for i in 0..n - 1 {
            if secant[i] == 0.0 {
                m[i] = 0.0;
                m[i + 1] = 0.0;
                continue;
            }
            let a = m[i] / secant[i];
            let b = m[i + 1] / secant[i];
            let r = a * a + b * b;
            if r > 9.0 {
                let t = 3.0 / r.sqrt();
                m[i] = t * a * secant[i];
                m[i + 1] = t * b * secant[i];
            }
        }
        Ok(Table { v, y, slopes: m })
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.v.len();
        if x <= self.v[0] {
            return self.y[0];
        }
        if x >= self.v[n - 1] {
            return self.y[n - 1];
        }
        let i = self.v.partition_point(|&p| p <= x) - 1;
        let h = self.v[i + 1] - self.v[i];
        let t = (x - self.v[i]) / h;
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.y[i]
            + h10 * h * self.slopes[i]
            + h01 * self.y[i + 1]
            + h11 * h * self.slopes[i + 1]
    }
}

/// How a gate evolves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case", deny_unknown_fields)]
pub enum Kinetics {
    /// `dx/dt = alpha (1 - x) - beta x`
    Rates { alpha: RateFn, beta: RateFn },
    /// `dx/dt = (x_inf - x) / tau`
    SteadyState { x_inf: RateFn, tau: RateFn },
}

impl Kinetics {
    #[inline]
    pub fn steady_state(&self, v: f64) -> f64 {
        match self {
            Kinetics::Rates { alpha, beta } => {
                let a = alpha.eval(v);
                a / (a + beta.eval(v))
            }
            Kinetics::SteadyState { x_inf, .. } => x_inf.eval(v),
        }
    }

    #[inline]
    pub fn time_constant(&self, v: f64) -> f64 {
        match self {
            Kinetics::Rates { alpha, beta } => 1.0 / (alpha.eval(v) + beta.eval(v)),
            Kinetics::SteadyState { tau, .. } => tau.eval(v),
        }
    }

    #[inline]
    pub fn rate_of_change(&self, v: f64, x: f64) -> f64 {
        match self {
            Kinetics::Rates { alpha, beta } => {
                let a = alpha.eval(v);
                a - (a + beta.eval(v)) * x
            }
            Kinetics::SteadyState { x_inf, tau } => (x_inf.eval(v) - x) / tau.eval(v),
        }
    }

    pub(crate) fn check(&self) -> Result<(), String> {
        match self {
            Kinetics::Rates { alpha, beta } => {
                alpha.check().map_err(|e| format!("alpha: {e}"))?;
                beta.check().map_err(|e| format!("beta: {e}"))
            }
            Kinetics::SteadyState { x_inf, tau } => {
                x_inf.check().map_err(|e| format!("x_inf: {e}"))?;
                tau.check().map_err(|e| format!("tau: {e}"))
            }
        }
    }
}
