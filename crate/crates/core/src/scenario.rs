//! Scenario files: a versioned JSON schema carrying either explicit network
//! parameters or plane geometry (transmitter/receiver coordinates turned into
//! gains through the power-law `h = d^-a`), plus the built-in scenarios the
//! experiment runner ships with.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DeviceLocations, NetworkParams, PowerProfile};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    /// Seed for randomized experiment components; subcommands may override it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Default target profile for design/adjustment subcommands.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub network: Option<ExplicitNetwork>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geometry: Option<Geometry>,
}

/// Gains given directly; bypasses geometry entirely.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplicitNetwork {
    /// (N+1)x(N+1) matrix, device at index 0.
    pub gains: Vec<Vec<f64>>,
    pub noise: Vec<f64>,
    pub max_powers: Vec<f64>,
    pub capability: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub device_location_gains: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub device_location_noise: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Placement {
    pub tx: [f64; 2],
    pub rx: [f64; 2],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Geometry {
    pub users: Vec<Placement>,
    pub device: Placement,
    /// Extra receiver positions for the estimation protocol.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub device_rx_locations: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub device_location_noise: Option<Vec<f64>>,
    pub path_loss_exponent: f64,
    pub noise: Vec<f64>,
    pub max_powers: Vec<f64>,
    pub capability: f64,
}

impl ScenarioFile {
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Scenario(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        match (&self.network, &self.geometry) {
            (Some(_), Some(_)) => Err(Error::Scenario(
                "give either `network` or `geometry`, not both".into(),
            )),
            (None, None) => Err(Error::Scenario(
                "missing field: one of `network` or `geometry`".into(),
            )),
            _ => Ok(()),
        }
    }

    /// Converts the scenario into network parameters (geometry resolved
    /// deterministically through the path-loss law).
    pub fn params(&self) -> Result<NetworkParams> {
        self.validate()?;
        if let Some(net) = &self.network {
            let params = NetworkParams::new(
                net.gains.clone(),
                net.noise.clone(),
                net.max_powers.clone(),
                net.capability,
            )?;
            return match (&net.device_location_gains, &net.device_location_noise) {
                (Some(gains), Some(noise)) => params.with_locations(DeviceLocations {
                    gains: gains.clone(),
                    noise: noise.clone(),
                }),
                (None, None) => Ok(params),
                _ => Err(Error::Scenario(
                    "device_location_gains and device_location_noise must come together".into(),
                )),
            };
        }
        let geo = self.geometry.as_ref().expect("validated above");
        geo.params()
    }

    /// Default target profile, when the file declares one.
    pub fn target(&self) -> Option<PowerProfile> {
        self.target.as_ref().map(|t| PowerProfile::new(t.clone()))
    }
}

fn distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

impl Geometry {
    fn gain(&self, from: [f64; 2], to: [f64; 2]) -> Result<f64> {
        let d = distance(from, to);
        if d <= 0.0 {
            return Err(Error::Scenario(format!(
                "nonpositive distance between ({}, {}) and ({}, {})",
                from[0], from[1], to[0], to[1]
            )));
        }
        Ok(d.powf(-self.path_loss_exponent))
    }

    pub fn params(&self) -> Result<NetworkParams> {
        let n = self.users.len();
        if n == 0 {
            return Err(Error::Scenario("geometry needs at least one user".into()));
        }
        if self.noise.len() != n || self.max_powers.len() != n {
            return Err(Error::Scenario(
                "noise and max_powers must have one entry per user".into(),
            ));
        }
        let mut gains = vec![vec![0.0; n + 1]; n + 1];
        for i in 0..n {
            gains[i + 1][0] = self.gain(self.device.tx, self.users[i].rx)?;
            gains[0][i + 1] = self.gain(self.users[i].tx, self.device.rx)?;
            for j in 0..n {
                gains[i + 1][j + 1] = self.gain(self.users[j].tx, self.users[i].rx)?;
            }
        }
        let params = NetworkParams::new(
            gains,
            self.noise.clone(),
            self.max_powers.clone(),
            self.capability,
        )?;
        match (&self.device_rx_locations, &self.device_location_noise) {
            (Some(locs), Some(noise)) => {
                let mut location_gains = Vec::with_capacity(locs.len());
                for loc in locs {
                    let mut row = Vec::with_capacity(n);
                    for u in &self.users {
                        row.push(self.gain(u.tx, *loc)?);
                    }
                    location_gains.push(row);
                }
                params.with_locations(DeviceLocations {
                    gains: location_gains,
                    noise: noise.clone(),
                })
            }
            (None, None) => Ok(params),
            _ => Err(Error::Scenario(
                "device_rx_locations and device_location_noise must come together".into(),
            )),
        }
    }
}

/// Loads and validates a scenario file.
pub fn load_scenario(path: &std::path::Path) -> Result<ScenarioFile> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Scenario(format!("cannot read {}: {e}", path.display())))?;
    let file: ScenarioFile = serde_json::from_str(&text)
        .map_err(|e| Error::Scenario(format!("malformed scenario {}: {e}", path.display())))?;
    file.validate()?;
    Ok(file)
}

/// The two-user indoor layout: user 1 spans the unit segment, user 2's
/// receiver sits half a unit below the midpoint, and user 2's transmitter
/// starts `d22` to the right of its receiver, next to user 1's receiver for
/// small `d22`. Growing `d22` moves the interferer away; at `d22 = 1` the
/// network is symmetric.
pub fn fig1_geometry(d22: f64) -> Geometry {
    Geometry {
        users: vec![
            Placement {
                tx: [0.0, 0.5],
                rx: [1.0, 0.5],
            },
            Placement {
                tx: [0.5 + d22, 0.0],
                rx: [0.5, 0.0],
            },
        ],
        device: Placement {
            tx: [0.75, 0.25],
            rx: [0.75, 0.25],
        },
        device_rx_locations: None,
        device_location_noise: None,
        path_loss_exponent: 3.0,
        noise: vec![0.2, 0.2],
        max_powers: vec![10.0, 10.0],
        capability: 500.0,
    }
}

pub fn builtin_fig1() -> ScenarioFile {
    ScenarioFile {
        schema_version: SCHEMA_VERSION,
        name: Some("two-user-indoor".into()),
        seed: Some(0),
        target: None,
        network: None,
        geometry: Some(fig1_geometry(0.5)),
    }
}

/// A five-user network with one fixed channel realization, embedded from the
/// shipped scenario file; the target keeps user 1 at full power and the rest
/// at a tenth, for a relative distance of 3.6 from the full-power profile.
pub fn builtin_five_user() -> ScenarioFile {
    serde_json::from_str(include_str!("../../../scenarios/five_user.json"))
        .expect("shipped scenario parses")
}

/// A three-user layout with one device receiver location per user, spread on
/// a circle around the network; the shipped estimation scenario.
pub fn builtin_estimation() -> ScenarioFile {
    let users = vec![
        Placement {
            tx: [0.0, 0.0],
            rx: [1.0, 0.2],
        },
        Placement {
            tx: [1.4, 1.1],
            rx: [0.4, 1.3],
        },
        Placement {
            tx: [0.2, 2.0],
            rx: [1.2, 2.2],
        },
    ];
    let mut geometry = Geometry {
        users,
        device: Placement {
            tx: [0.7, 1.1],
            rx: [0.7, 1.1],
        },
        device_rx_locations: None,
        device_location_noise: None,
        path_loss_exponent: 3.0,
        noise: vec![0.2, 0.25, 0.3],
        max_powers: vec![10.0, 10.0, 10.0],
        capability: 1e4,
    };
    let center = [0.7, 1.1];
    let count = geometry.users.len();
    let (points, _) = circle_locations(&geometry, center, 1.6, count, 0.02)
        .expect("static layout has positive distances");
    geometry.device_rx_locations = Some(points);
    geometry.device_location_noise = Some(vec![0.02; count]);
    ScenarioFile {
        schema_version: SCHEMA_VERSION,
        name: Some("three-user-estimation".into()),
        seed: Some(0),
        target: Some(vec![4.0, 4.0, 4.0]),
        network: None,
        geometry: Some(geometry),
    }
}

/// Places `count` device receivers on a circle of radius `radius` around
/// `center` and derives their per-user gains; the deterministic layout used by
/// estimation experiments.
pub fn circle_locations(
    geometry: &Geometry,
    center: [f64; 2],
    radius: f64,
    count: usize,
    location_noise: f64,
) -> Result<(Vec<[f64; 2]>, DeviceLocations)> {
    let mut points = Vec::with_capacity(count);
    let mut gains = Vec::with_capacity(count);
    for k in 0..count {
        let angle = 2.0 * std::f64::consts::PI * k as f64 / count as f64;
        let p = [
            center[0] + radius * angle.cos(),
            center[1] + radius * angle.sin(),
        ];
        let mut row = Vec::with_capacity(geometry.users.len());
        for u in &geometry.users {
            row.push(geometry.gain(u.tx, p)?);
        }
        points.push(p);
        gains.push(row);
    }
    Ok((
        points,
        DeviceLocations {
            gains,
            noise: vec![location_noise; count],
        },
    ))
}
