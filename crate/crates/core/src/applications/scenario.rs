//! Link-budget scenarios read from JSON.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

/// Normalized channel gain `h` (path gain over noise power) of a link, using
/// `PL_dB = 32.4 + 23 log10(d) + 23 log10(fc)` with `d` in meters and `fc` in GHz.
pub fn channel_gain(d_m: f64, fc_ghz: f64, bw_hz: f64, noise_dbm_hz: f64) -> Result<f64> {
    for (name, v) in [("distance", d_m), ("carrier frequency", fc_ghz), ("bandwidth", bw_hz)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::Domain(format!("{name} must be positive, got {v}")));
        }
    }
    if !noise_dbm_hz.is_finite() {
        return Err(Error::Domain(format!("noise density must be finite, got {noise_dbm_hz}")));
    }
    let noise_w = 10f64.powf((noise_dbm_hz - 30.0) / 10.0) * bw_hz;
    Ok(10f64.powf(-path_loss_db(d_m, fc_ghz) / 10.0) / noise_w)
}

pub fn path_loss_db(d_m: f64, fc_ghz: f64) -> f64 {
    32.4 + 23.0 * d_m.log10() + 23.0 * fc_ghz.log10()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    /// Weighted sum of packet sizes under a power budget.
    Wsr,
    /// Total power under an end-to-end reliability target.
    PowerMin,
    /// Bits per unit power of a two-hop relay under a spectral-efficiency floor.
    EeMax,
}

impl ProblemKind {
    pub fn name(self) -> &'static str {
        match self {
            ProblemKind::Wsr => "wsr",
            ProblemKind::PowerMin => "power_min",
            ProblemKind::EeMax => "ee_max",
        }
    }

    /// Whether larger objectives are better.
    pub fn maximizes(self) -> bool {
        !matches!(self, ProblemKind::PowerMin)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkSpec {
    pub d_m: f64,
    pub fc_ghz: f64,
    pub bw_hz: f64,
    pub noise_dbm_hz: f64,
    pub m: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
}

impl LinkSpec {
    pub fn gain(&self) -> Result<f64> {
        channel_gain(self.d_m, self.fc_ghz, self.bw_hz, self.noise_dbm_hz)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Thresholds {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_max_w: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_th: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi_th: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub kind: ProblemKind,
    pub links: Vec<LinkSpec>,
    pub thresholds: Thresholds,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
}

fn field_error(field: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Scenario {
        field: field.into(),
        message: message.into(),
    }
}

fn parse_field<T: serde::de::DeserializeOwned>(field: &str, v: &Value) -> Result<T> {
    T::deserialize(v).map_err(|e| field_error(field, e.to_string()))
}

const TOP_LEVEL: [&str; 4] = ["kind", "links", "thresholds", "weights"];

impl Scenario {
    /// Parses and validates a scenario, reporting the first offending field.
    pub fn from_json(text: &str) -> Result<Self> {
        let root: Value =
            serde_json::from_str(text).map_err(|e| field_error("$", e.to_string()))?;
        let obj = root
            .as_object()
            .ok_or_else(|| field_error("$", "expected an object"))?;
        if let Some(k) = obj.keys().find(|k| !TOP_LEVEL.contains(&k.as_str())) {
            return Err(field_error(k.as_str(), "unknown field"));
        }
        let get = |k: &str| obj.get(k).ok_or_else(|| field_error(k, "missing field"));
        let kind: ProblemKind = parse_field("kind", get("kind")?)?;
        let links_v = get("links")?
            .as_array()
            .ok_or_else(|| field_error("links", "expected an array"))?;
        let links = links_v
            .iter()
            .enumerate()
            .map(|(i, v)| parse_field(&format!("links[{i}]"), v))
            .collect::<Result<Vec<LinkSpec>>>()?;
        let thresholds: Thresholds = parse_field("thresholds", get("thresholds")?)?;
        let weights = match obj.get("weights") {
            None | Some(Value::Null) => None,
            Some(v) => Some(parse_field::<Vec<f64>>("weights", v)?),
        };
        let s = Scenario {
            kind,
            links,
            thresholds,
            weights,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    /// Checks values and that exactly the fields the problem kind needs are set.
    pub fn validate(&self) -> Result<()> {
        let kind = self.kind;
        let t = &self.thresholds;
        let need = |field: &str, v: Option<f64>| -> Result<f64> {
            v.ok_or_else(|| field_error(field, format!("required for `{}`", kind.name())))
        };
        let forbid = |field: &str, present: bool| -> Result<()> {
            if present {
                Err(field_error(field, format!("not used by `{}`", kind.name())))
            } else {
                Ok(())
            }
        };
        if self.links.is_empty() {
            return Err(field_error("links", "at least one link is required"));
        }
        for (i, l) in self.links.iter().enumerate() {
            let f = |name: &str| format!("links[{i}].{name}");
            for (name, v) in [("d_m", l.d_m), ("fc_ghz", l.fc_ghz), ("bw_hz", l.bw_hz), ("m", l.m)] {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(field_error(f(name), format!("must be positive, got {v}")));
                }
            }
            if !l.noise_dbm_hz.is_finite() {
                return Err(field_error(f("noise_dbm_hz"), "must be finite"));
            }
            match kind {
                ProblemKind::PowerMin => {
                    let n = need(&f("n"), l.n)?;
                    if !(n > 0.0 && n.is_finite()) {
                        return Err(field_error(f("n"), format!("must be positive, got {n}")));
                    }
                }
                _ => forbid(&f("n"), l.n.is_some())?,
            }
            forbid(&f("eps"), l.eps.is_some())?;
        }
        let eps_th = need("thresholds.eps_th", t.eps_th)?;
        if !(eps_th > 0.0 && eps_th < 0.5) {
            return Err(field_error("thresholds.eps_th", format!("must lie in (0, 0.5), got {eps_th}")));
        }
        match kind {
            ProblemKind::Wsr => {
                let p = need("thresholds.p_max_w", t.p_max_w)?;
                if !(p > 0.0 && p.is_finite()) {
                    return Err(field_error("thresholds.p_max_w", format!("must be positive, got {p}")));
                }
                forbid("thresholds.phi_th", t.phi_th.is_some())?;
                if let Some(w) = &self.weights {
                    if w.len() != self.links.len() {
                        return Err(field_error("weights", "needs one weight per link"));
                    }
                    if let Some(i) = w.iter().position(|&a| !(a >= 0.0 && a.is_finite())) {
                        return Err(field_error(format!("weights[{i}]"), "must be nonnegative"));
                    }
                }
            }
            ProblemKind::PowerMin => {
                forbid("thresholds.p_max_w", t.p_max_w.is_some())?;
                forbid("thresholds.phi_th", t.phi_th.is_some())?;
                forbid("weights", self.weights.is_some())?;
            }
            ProblemKind::EeMax => {
                let phi = need("thresholds.phi_th", t.phi_th)?;
                if !(phi >= 0.0 && phi.is_finite()) {
                    return Err(field_error("thresholds.phi_th", format!("must be nonnegative, got {phi}")));
                }
                forbid("thresholds.p_max_w", t.p_max_w.is_some())?;
                forbid("weights", self.weights.is_some())?;
                if self.links.len() != 2 {
                    return Err(field_error("links", "energy efficiency needs exactly two hops"));
                }
            }
        }
        Ok(())
    }

    pub fn gains(&self) -> Result<Vec<f64>> {
        self.links.iter().map(LinkSpec::gain).collect()
    }

    pub fn weights_or_unit(&self) -> Vec<f64> {
        self.weights.clone().unwrap_or_else(|| vec![1.0; self.links.len()])
    }

    pub fn eps_th(&self) -> f64 {
        self.thresholds.eps_th.expect("validated")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_loss_at_twenty_meters() {
        let pl = path_loss_db(20.0, 6.0);
        assert!((pl - 80.22117).abs() < 1e-4, "{pl}");
        let h = channel_gain(20.0, 6.0, 60e3, -174.0).unwrap();
        let expected = 10f64.powf(-pl / 10.0) / (10f64.powf(-20.4) * 6e4);
        assert!((h / expected - 1.0).abs() < 1e-12);
    }

    #[test]
    fn doubling_distance_adds_fixed_loss() {
        let step = path_loss_db(40.0, 6.0) - path_loss_db(20.0, 6.0);
        assert!((step - 23.0 * 2f64.log10()).abs() < 1e-12);
        let mut prev = f64::INFINITY;
        for d in [1.0, 5.0, 20.0, 80.0, 500.0] {
            let h = channel_gain(d, 6.0, 60e3, -174.0).unwrap();
            assert!(h < prev);
            prev = h;
        }
    }

    #[test]
    fn gain_rejects_nonpositive_inputs() {
        assert!(channel_gain(0.0, 6.0, 60e3, -174.0).is_err());
        assert!(channel_gain(20.0, -6.0, 60e3, -174.0).is_err());
        assert!(channel_gain(20.0, 6.0, 0.0, -174.0).is_err());
    }

    const WSR: &str = r#"{
        "kind": "wsr",
        "links": [
            {"d_m": 20, "fc_ghz": 6, "bw_hz": 60000, "noise_dbm_hz": -174, "m": 1000},
            {"d_m": 80, "fc_ghz": 6, "bw_hz": 60000, "noise_dbm_hz": -174, "m": 1000}
        ],
        "thresholds": {"p_max_w": 0.0002, "eps_th": 1e-5},
        "weights": [1, 1]
    }"#;

    #[test]
    fn parses_and_round_trips() {
        let s = Scenario::from_json(WSR).unwrap();
        assert_eq!(s.kind, ProblemKind::Wsr);
        assert_eq!(Scenario::from_json(&s.to_json()).unwrap(), s);
    }

    fn field_of(text: &str) -> String {
        match Scenario::from_json(text) {
            Err(Error::Scenario { field, .. }) => field,
            other => panic!("expected a scenario error, got {other:?}"),
        }
    }

    #[test]
    fn errors_name_the_field() {
        let missing = WSR.replace(r#""thresholds": {"p_max_w": 0.0002, "eps_th": 1e-5},"#, "");
        assert_eq!(field_of(&missing), "thresholds");
        assert_eq!(field_of(&WSR.replace("\"d_m\": 80", "\"d_m\": -80")), "links[1].d_m");
        assert_eq!(field_of(&WSR.replace("\"m\": 1000}", "\"m\": 1000, \"x\": 1}")), "links[0]");
        assert_eq!(field_of(&WSR.replace("0.0002", "0.0002, \"phi_th\": 0.3")), "thresholds.phi_th");
        assert_eq!(field_of(&WSR.replace("\"wsr\"", "\"ee_max\"")), "thresholds.phi_th");
        assert_eq!(field_of(&WSR.replace("[1, 1]", "[1]")), "weights");
        assert_eq!(field_of("[]"), "$");
    }
}
