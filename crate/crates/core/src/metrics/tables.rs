//! Parser for the plain-text score tables.

use std::collections::BTreeMap;

use super::MetricsError;
use crate::molgraph::Atom;

const BUILTIN: &str = include_str!("../../data/score_tables.txt");
pub const TABLE_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hump {
    pub mu: f64,
    pub sigma: f64,
}

impl Hump {
    pub fn eval(&self, x: f64) -> f64 {
        let d = (x - self.mu) / self.sigma;
        (-0.5 * d * d).exp()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreTables {
    /// Indexed by atom code; entry 0 (padding) unused.
    pub mass: [f64; 5],
    pub mass_h: f64,
    /// `[atom code][heteroatom neighbours 0..=3]`
    pub logp: [[f64; 4]; 5],
    pub logp_h_carbon: f64,
    pub logp_h_hetero: f64,
    pub qed_mw: Hump,
    pub qed_hba: Hump,
    pub qed_hbd: Hump,
    pub qed_rotb: Hump,
    pub qed_rings: Hump,
    pub qed_floor: f64,
    pub sa_scale: f64,
    pub sa_ring_weight: f64,
    pub sa_macrocycle_weight: f64,
    pub sa_size_weight: f64,
    pub sa_size_free: f64,
    pub drug_logp: Hump,
    pub drug_novel: f64,
    pub drug_known: f64,
    pub drug_floor: f64,
    pub np_smoothing: f64,
    pub np_clamp: f64,
}

impl ScoreTables {
    /// The tables shipped in `data/score_tables.txt`.
    pub fn builtin() -> Self {
        Self::parse(BUILTIN).expect("bundled score tables parse")
    }

    pub fn parse(text: &str) -> Result<Self, MetricsError> {
        let mut kv = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| MetricsError::Table(format!("line {}: expected key = value", n + 1)))?;
            let value: f64 = v
                .trim()
                .parse()
                .map_err(|_| MetricsError::Table(format!("line {}: bad number {:?}", n + 1, v.trim())))?;
            if kv.insert(k.trim().to_string(), value).is_some() {
                return Err(MetricsError::Table(format!("duplicate key {}", k.trim())));
            }
        }
        let mut take = |key: &str| {
            kv.remove(key)
                .ok_or_else(|| MetricsError::Table(format!("missing key {key}")))
        };
        let version = take("version")?;
        if version != TABLE_VERSION as f64 {
            return Err(MetricsError::Table(format!("unsupported table version {version}")));
        }
        let heavy = [Atom::C, Atom::N, Atom::O, Atom::F];
        let mut mass = [0.0; 5];
        let mut logp = [[0.0; 4]; 5];
        for a in heavy {
            mass[a.code() as usize] = take(&format!("mass.{}", a.symbol()))?;
            for h in 0..4 {
                logp[a.code() as usize][h] = take(&format!("logp.{}.{h}", a.symbol()))?;
            }
        }
        let mut hump = |name: &str| -> Result<Hump, MetricsError> {
            Ok(Hump {
                mu: take(&format!("{name}.mu"))?,
                sigma: take(&format!("{name}.sigma"))?,
            })
        };
        let qed_mw = hump("qed.mw")?;
        let qed_hba = hump("qed.hba")?;
        let qed_hbd = hump("qed.hbd")?;
        let qed_rotb = hump("qed.rotb")?;
        let qed_rings = hump("qed.rings")?;
        let drug_logp = hump("drug.logp")?;
        let tables = Self {
            mass,
            mass_h: take("mass.H")?,
            logp,
            logp_h_carbon: take("logp.H.carbon")?,
            logp_h_hetero: take("logp.H.hetero")?,
            qed_mw,
            qed_hba,
            qed_hbd,
            qed_rotb,
            qed_rings,
            qed_floor: take("qed.floor")?,
            sa_scale: take("sa.scale")?,
            sa_ring_weight: take("sa.ring_weight")?,
            sa_macrocycle_weight: take("sa.macrocycle_weight")?,
            sa_size_weight: take("sa.size_weight")?,
            sa_size_free: take("sa.size_free")?,
            drug_logp,
            drug_novel: take("drug.novel")?,
            drug_known: take("drug.known")?,
            drug_floor: take("drug.floor")?,
            np_smoothing: take("np.smoothing")?,
            np_clamp: take("np.clamp")?,
        };
        if let Some(extra) = kv.keys().next() {
            return Err(MetricsError::Table(format!("unknown key {extra}")));
        }
        Ok(tables)
    }
}
