//! Physical parameters, the single-excitation Hamiltonian and quench schedules.
//!
//! User-facing frequencies are ordinary frequencies in GHz. Everything that
//! enters the dynamics is an angular frequency in rad/ns, obtained by a single
//! multiplication by 2π. Times are always in ns.
//!
//! The single-excitation basis is ordered as `[|e, vac>, |g, 1_0>, ..., |g, 1_{N-1}>]`:
//! index 0 is the excited emitter, index `1 + l` a photon on resonator `l`.

use std::f64::consts::TAU;
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::linalg::SymMatrix;

/// Converts an ordinary frequency in GHz to an angular frequency in rad/ns.
#[inline]
pub fn to_angular(ghz: f64) -> f64 {
    TAU * ghz
}

/// Converts an angular frequency in rad/ns back to GHz.
#[inline]
pub fn to_ghz(rad_per_ns: f64) -> f64 {
    rad_per_ns / TAU
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    #[default]
    Open,
    Periodic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Frame {
    Lab,
    /// Rotating at the resonator frequency ωc.
    #[default]
    #[serde(alias = "rotating_at_omegac")]
    Rotating,
}

impl fmt::Display for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Boundary::Open => "open",
            Boundary::Periodic => "periodic",
        })
    }
}

impl fmt::Display for Frame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Frame::Lab => "lab",
            Frame::Rotating => "rotating",
        })
    }
}

/// Validated physical constants of the emitter + resonator-array system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub omega0_ghz: f64,
    pub omegac_ghz: f64,
    pub hop_ghz: f64,
    pub g0_ghz: f64,
    pub n_sites: usize,
    pub boundary: Boundary,
    pub frame: Frame,
}

impl SystemParams {
    /// Resonant setup with 8.74 GHz emitter and resonators, 50 MHz hopping and
    /// coupling, 61 resonators in an open chain, rotating frame.
    pub fn reference() -> Self {
        SystemParams {
            omega0_ghz: 8.74,
            omegac_ghz: 8.74,
            hop_ghz: 0.05,
            g0_ghz: 0.05,
            n_sites: 61,
            boundary: Boundary::Open,
            frame: Frame::Rotating,
        }
    }

    pub fn validate(&self) -> Result<()> {
        positive("omega0_ghz", self.omega0_ghz)?;
        positive("omegac_ghz", self.omegac_ghz)?;
        non_negative("hop_ghz", self.hop_ghz)?;
        non_negative("g0_ghz", self.g0_ghz)?;
        if self.n_sites == 0 {
            return Err(Error::invalid("n_sites", "must be at least 1"));
        }
        if self.n_sites.is_multiple_of(2) {
            return Err(Error::invalid(
                "n_sites",
                format!("{} is even; an odd count is needed for a central site", self.n_sites),
            ));
        }
        Ok(())
    }

    pub fn with_omega0(mut self, omega0_ghz: f64) -> Self {
        self.omega0_ghz = omega0_ghz;
        self
    }

    pub fn with_hop(mut self, hop_ghz: f64) -> Self {
        self.hop_ghz = hop_ghz;
        self
    }

    pub fn with_g0(mut self, g0_ghz: f64) -> Self {
        self.g0_ghz = g0_ghz;
        self
    }

    pub fn with_sites(mut self, n_sites: usize) -> Self {
        self.n_sites = n_sites;
        self
    }

    pub fn with_boundary(mut self, boundary: Boundary) -> Self {
        self.boundary = boundary;
        self
    }

    pub fn with_frame(mut self, frame: Frame) -> Self {
        self.frame = frame;
        self
    }

    /// Dimension of the single-excitation sector.
    pub fn dim(&self) -> usize {
        self.n_sites + 1
    }

    /// Resonator index the emitter couples to.
    pub fn center_site(&self) -> usize {
        (self.n_sites - 1) / 2
    }

    /// Basis index of a photon on the central resonator.
    pub fn center_index(&self) -> usize {
        1 + self.center_site()
    }

    /// Emitter-resonator detuning ω0 − ωc in rad/ns.
    pub fn detuning(&self) -> f64 {
        to_angular(self.omega0_ghz) - to_angular(self.omegac_ghz)
    }

    pub fn hop(&self) -> f64 {
        to_angular(self.hop_ghz)
    }

    pub fn g0(&self) -> f64 {
        to_angular(self.g0_ghz)
    }

    /// Diagonal entry of the emitter row in the active frame, rad/ns.
    pub fn emitter_level(&self) -> f64 {
        match self.frame {
            Frame::Rotating => self.detuning(),
            Frame::Lab => to_angular(self.omega0_ghz),
        }
    }

    /// Diagonal entry of every resonator row in the active frame, rad/ns.
    pub fn site_level(&self) -> f64 {
        match self.frame {
            Frame::Rotating => 0.0,
            Frame::Lab => to_angular(self.omegac_ghz),
        }
    }

    /// Energy offset (rad/ns) that converts an active-frame energy to the lab frame.
    pub fn frame_offset(&self) -> f64 {
        match self.frame {
            Frame::Rotating => to_angular(self.omegac_ghz),
            Frame::Lab => 0.0,
        }
    }
}

fn positive(key: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(key, format!("{v} must be a finite positive number")))
    }
}

fn non_negative(key: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(key, format!("{v} must be finite and non-negative")))
    }
}

/// Builds validated parameters from a flat key-value document.
///
/// The four frequencies and `n_sites` are required. Numbers may be given as
/// JSON numbers or numeric strings. `boundary` defaults to `open` and `frame`
/// to `rotating`.
pub fn build_params(raw: &Map<String, Value>) -> Result<SystemParams> {
    let n_sites = number(raw, "n_sites")?;
    if n_sites.fract() != 0.0 || n_sites < 0.0 || n_sites > u32::MAX as f64 {
        return Err(Error::invalid(
            "n_sites",
            format!("{n_sites} is not a non-negative integer"),
        ));
    }
    let params = SystemParams {
        omega0_ghz: number(raw, "omega0_ghz")?,
        omegac_ghz: number(raw, "omegac_ghz")?,
        hop_ghz: number(raw, "hop_ghz")?,
        g0_ghz: number(raw, "g0_ghz")?,
        n_sites: n_sites as usize,
        boundary: enumerated(raw, "boundary")?.unwrap_or_default(),
        frame: enumerated(raw, "frame")?.unwrap_or_default(),
    };
    params.validate()?;
    Ok(params)
}

/// Parses a JSON configuration document into validated parameters.
pub fn params_from_json(text: &str) -> Result<SystemParams> {
    let value: Value =
        serde_json::from_str(text).map_err(|e| Error::invalid("config", format!("not valid JSON: {e}")))?;
    match value {
        Value::Object(map) => build_params(&map),
        _ => Err(Error::invalid("config", "expected a JSON object")),
    }
}

fn number(raw: &Map<String, Value>, key: &str) -> Result<f64> {
    match raw.get(key) {
        None | Some(Value::Null) => Err(Error::MissingKey(key.to_string())),
        Some(Value::Number(n)) => n.as_f64().ok_or_else(|| Error::invalid(key, "number out of range")),
        Some(Value::String(s)) => s
            .trim()
            .parse::<f64>()
            .map_err(|_| Error::invalid(key, format!("`{s}` is not a number"))),
        Some(other) => Err(Error::invalid(key, format!("expected a number, found {other}"))),
    }
}

fn enumerated<T: for<'de> Deserialize<'de>>(raw: &Map<String, Value>, key: &str) -> Result<Option<T>> {
    match raw.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(v) => serde_json::from_value(v.clone())
            .map(Some)
            .map_err(|_| Error::invalid(key, format!("unrecognised value {v}"))),
    }
}

/// Real symmetric single-excitation Hamiltonian (rad/ns) for a fixed coupling.
///
/// Emitter row carries Δ (rotating frame) or ω0 (lab frame), resonator rows 0
/// or ωc, neighbouring resonators are linked by −J and the emitter couples to
/// the central resonator with strength `coupling_ghz` (converted to rad/ns).
pub fn assemble_hamiltonian(params: &SystemParams, coupling_ghz: f64) -> SymMatrix {
    let n = params.n_sites;
    let mut h = SymMatrix::zeros(n + 1);
    h.set(0, 0, params.emitter_level());
    let site = params.site_level();
    let hop = params.hop();
    for l in 0..n {
        h.set(1 + l, 1 + l, site);
        if l + 1 < n {
            h.set(1 + l, 2 + l, -hop);
        }
    }
    if params.boundary == Boundary::Periodic && n >= 3 {
        h.set(1, n, -hop);
    }
    h.set(0, params.center_index(), to_angular(coupling_ghz));
    h
}

/// Field dispersion ε(k) = ωc − 2J cos k, in GHz.
pub fn dispersion_ghz(params: &SystemParams, k: f64) -> f64 {
    params.omegac_ghz - 2.0 * params.hop_ghz * k.cos()
}

/// Edges of the resonator-array band, in GHz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BandInfo {
    pub band_min_ghz: f64,
    pub band_max_ghz: f64,
    pub bandwidth_ghz: f64,
}

impl BandInfo {
    pub fn contains_ghz(&self, f: f64) -> bool {
        f >= self.band_min_ghz && f <= self.band_max_ghz
    }

    /// Signed distance of `f` outside the band (negative when inside).
    pub fn distance_outside_ghz(&self, f: f64) -> f64 {
        (self.band_min_ghz - f).max(f - self.band_max_ghz)
    }
}

pub fn band_info(params: &SystemParams) -> BandInfo {
    let half = 2.0 * params.hop_ghz;
    BandInfo {
        band_min_ghz: params.omegac_ghz - half,
        band_max_ghz: params.omegac_ghz + half,
        bandwidth_ghz: 2.0 * half,
    }
}

/// One piece of a piecewise-constant coupling schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub duration_ns: f64,
    pub coupling_ghz: f64,
}

impl Segment {
    pub fn new(duration_ns: f64, coupling_ghz: f64) -> Self {
        Segment {
            duration_ns,
            coupling_ghz,
        }
    }

    pub fn is_on(&self) -> bool {
        self.coupling_ghz != 0.0
    }
}

/// Ordered, non-empty list of segments with strictly positive durations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuenchProtocol {
    segments: Vec<Segment>,
}

impl QuenchProtocol {
    pub fn new(segments: Vec<Segment>) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::invalid("protocol", "no segments"));
        }
        for (i, s) in segments.iter().enumerate() {
            if !(s.duration_ns.is_finite() && s.duration_ns > 0.0) {
                return Err(Error::invalid(
                    "protocol",
                    format!("segment {i} has non-positive duration {}", s.duration_ns),
                ));
            }
            if !(s.coupling_ghz.is_finite() && s.coupling_ghz >= 0.0) {
                return Err(Error::invalid(
                    "protocol",
                    format!("segment {i} has invalid coupling {}", s.coupling_ghz),
                ));
            }
        }
        Ok(QuenchProtocol { segments })
    }

    /// Drops zero-length segments and merges neighbours with equal coupling.
    pub fn elided(segments: impl IntoIterator<Item = Segment>) -> Result<Self> {
        let mut merged: Vec<Segment> = Vec::new();
        for s in segments {
            if s.duration_ns == 0.0 {
                continue;
            }
            match merged.last_mut() {
                Some(last) if last.coupling_ghz == s.coupling_ghz => last.duration_ns += s.duration_ns,
                _ => merged.push(s),
            }
        }
        Self::new(merged)
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn total_duration_ns(&self) -> f64 {
        self.segments.iter().map(|s| s.duration_ns).sum()
    }

    /// Start time of every segment.
    pub fn start_times(&self) -> Vec<f64> {
        let mut t = 0.0;
        self.segments
            .iter()
            .map(|s| {
                let start = t;
                t += s.duration_ns;
                start
            })
            .collect()
    }
}

impl fmt::Display for QuenchProtocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, s) in self.segments.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "({} ns, {} GHz)", s.duration_ns, s.coupling_ghz)?;
        }
        Ok(())
    }
}

/// The three schedule families that drive the experiments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProtocolKind {
    /// Coupling held at g0 for `total_ns`.
    Free { total_ns: f64 },
    /// On for τ, off for δ, on for τ.
    SingleQuench { tau_ns: f64, delta_ns: f64 },
    /// `cycles` repetitions of (τ on, δ off), closed by a final τ on-stage.
    Periodic { tau_ns: f64, delta_ns: f64, cycles: usize },
}

pub fn protocol_segments(kind: ProtocolKind, g0_ghz: f64) -> Result<QuenchProtocol> {
    match kind {
        ProtocolKind::Free { total_ns } => {
            if !(total_ns.is_finite() && total_ns > 0.0) {
                return Err(Error::invalid("total_ns", format!("{total_ns} must be positive")));
            }
            QuenchProtocol::new(vec![Segment::new(total_ns, g0_ghz)])
        }
        ProtocolKind::SingleQuench { tau_ns, delta_ns } => {
            check_tau_delta(tau_ns, delta_ns)?;
            QuenchProtocol::elided([
                Segment::new(tau_ns, g0_ghz),
                Segment::new(delta_ns, 0.0),
                Segment::new(tau_ns, g0_ghz),
            ])
        }
        ProtocolKind::Periodic {
            tau_ns,
            delta_ns,
            cycles,
        } => {
            check_tau_delta(tau_ns, delta_ns)?;
            if cycles == 0 {
                return Err(Error::invalid("cycles", "must be at least 1"));
            }
            let mut segs = Vec::with_capacity(2 * cycles + 1);
            for _ in 0..cycles {
                segs.push(Segment::new(tau_ns, g0_ghz));
                segs.push(Segment::new(delta_ns, 0.0));
            }
            segs.push(Segment::new(tau_ns, g0_ghz));
            QuenchProtocol::elided(segs)
        }
    }
}

fn check_tau_delta(tau_ns: f64, delta_ns: f64) -> Result<()> {
    if !(tau_ns.is_finite() && tau_ns > 0.0) {
        return Err(Error::invalid("tau_ns", format!("{tau_ns} must be positive")));
    }
    if !(delta_ns.is_finite() && delta_ns >= 0.0) {
        return Err(Error::invalid("delta_ns", format!("{delta_ns} must be non-negative")));
    }
    Ok(())
}
