//! Gate-voltage sweeps at fixed drain bias and temperature.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DeviceGeometry, Polarity};
use crate::physics::check_temperature;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IvPoint {
    pub vgs: f64,
    pub ids: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind", content = "fingerprint")]
pub enum Origin {
    Measured,
    /// Generated by the compact model; carries the parameter fingerprint.
    Synthetic(String),
}

/// Transfer curve in NMOS convention: voltages and currents are magnitudes,
/// `vgs` strictly increasing and every current positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IvSweep {
    pub vds: f64,
    pub t: f64,
    pub geom: DeviceGeometry,
    /// Presentation polarity. Data is always stored as magnitudes.
    pub polarity: Polarity,
    pub points: Vec<IvPoint>,
    pub origin: Origin,
    pub device: Option<String>,
}

impl IvSweep {
    pub fn new(
        vds: f64,
        t: f64,
        geom: DeviceGeometry,
        polarity: Polarity,
        points: Vec<IvPoint>,
        origin: Origin,
    ) -> Result<Self> {
        let sweep = IvSweep {
            vds,
            t,
            geom,
            polarity,
            points,
            origin,
            device: None,
        };
        sweep.validate()?;
        Ok(sweep)
    }

    pub fn validate(&self) -> Result<()> {
        check_temperature(self.t)?;
        self.geom.validate()?;
        if !(self.vds.is_finite() && self.vds >= 0.0) {
            return Err(Error::Precondition(format!(
                "drain bias magnitude must be non-negative, got {}",
                self.vds
            )));
        }
        if self.points.is_empty() {
            return Err(Error::Precondition("sweep has no points".into()));
        }
        for (i, p) in self.points.iter().enumerate() {
            if !(p.ids.is_finite() && p.ids > 0.0) {
                return Err(Error::Precondition(format!(
                    "point {i}: current must be positive, got {}",
                    p.ids
                )));
            }
            if !p.vgs.is_finite() {
                return Err(Error::Precondition(format!("point {i}: non-finite V_GS")));
            }
        }
        if self.points.windows(2).any(|w| w[1].vgs <= w[0].vgs) {
            return Err(Error::Precondition("V_GS must be strictly increasing".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn vgs(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.vgs).collect()
    }

    pub fn ids(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.ids).collect()
    }

    /// Same sweep with every current multiplied by `c`.
    pub fn scaled(&self, c: f64) -> IvSweep {
        let mut s = self.clone();
        for p in &mut s.points {
            p.ids *= c;
        }
        s
    }

    /// Convert signed (presentation) data to the stored magnitude convention.
    /// PMOS sweeps recorded as decreasing negative `V_GS` are reversed.
    pub fn from_signed(
        vds: f64,
        t: f64,
        geom: DeviceGeometry,
        polarity: Polarity,
        signed: &[(f64, f64)],
        origin: Origin,
    ) -> Result<Self> {
        let mut points: Vec<IvPoint> = signed
            .iter()
            .map(|&(v, i)| match polarity {
                Polarity::Nmos => IvPoint { vgs: v, ids: i },
                Polarity::Pmos => IvPoint { vgs: -v, ids: -i },
            })
            .collect();
        if points.len() > 1 && points[0].vgs > points[points.len() - 1].vgs {
            points.reverse();
        }
        let vds = match polarity {
            Polarity::Nmos => vds,
            Polarity::Pmos => -vds,
        };
        IvSweep::new(vds, t, geom, polarity, points, origin)
    }

    /// Signed `(V_GS, I_DS)` pairs in the order they were measured.
    pub fn to_signed(&self) -> Vec<(f64, f64)> {
        let sign = self.polarity.sign();
        self.points
            .iter()
            .map(|p| (sign * p.vgs, sign * p.ids))
            .collect()
    }

    pub fn signed_vds(&self) -> f64 {
        self.polarity.sign() * self.vds
    }
}
