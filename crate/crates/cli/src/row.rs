//! Result rows and deterministic CSV serialization.

use serde::{Deserialize, Serialize};

use rdiqkd_core::keyrate::KeyRateResult;
use rdiqkd_core::protocols::NoiseParams;
use rdiqkd_core::sdp::SolveStatus;

pub const CSV_HEADER: &str =
    "protocol,eta_s,eta_l,visibility,level,m,H_AE,H_AB,rate,status,gap,seconds";

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ResultRow {
    pub protocol: String,
    pub eta_s: f64,
    pub eta_l: f64,
    pub visibility: f64,
    pub level: String,
    pub m: usize,
    pub h_ae: f64,
    pub h_ab: f64,
    pub rate: f64,
    /// "optimal", "maxiter" or "error".
    pub status: String,
    /// Worst primal-vs-certified gap over the quadrature nodes.
    pub gap: f64,
    pub seconds: f64,
}

impl ResultRow {
    pub fn from_result(
        protocol: &str,
        noise: &NoiseParams,
        level: &str,
        m: usize,
        res: &KeyRateResult,
        seconds: f64,
    ) -> Self {
        let gap = res
            .nodes
            .iter()
            .map(|n| n.primal - n.certified)
            .fold(0.0f64, f64::max);
        let status = if res
            .nodes
            .iter()
            .all(|n| n.status == SolveStatus::Optimal)
        {
            "optimal"
        } else {
            "maxiter"
        };
        ResultRow {
            protocol: protocol.to_string(),
            eta_s: noise.eta_s,
            eta_l: noise.eta_l,
            visibility: noise.visibility,
            level: level.to_string(),
            m,
            h_ae: res.h_ae,
            h_ab: res.h_ab,
            rate: res.rate,
            status: status.to_string(),
            gap,
            seconds,
        }
    }

    pub fn failed(
        protocol: &str,
        noise: &NoiseParams,
        level: &str,
        m: usize,
        seconds: f64,
    ) -> Self {
        ResultRow {
            protocol: protocol.to_string(),
            eta_s: noise.eta_s,
            eta_l: noise.eta_l,
            visibility: noise.visibility,
            level: level.to_string(),
            m,
            h_ae: f64::NAN,
            h_ab: f64::NAN,
            rate: f64::NAN,
            status: "error".to_string(),
            gap: f64::NAN,
            seconds,
        }
    }

    /// One CSV line. Floats use Rust's shortest round-trip formatting, so a
    /// row is bit-determined by its values.
    pub fn csv_line(&self) -> String {
        let quoted = if self.protocol.contains(',') {
            format!("\"{}\"", self.protocol)
        } else {
            self.protocol.clone()
        };
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            quoted,
            self.eta_s,
            self.eta_l,
            self.visibility,
            self.level,
            self.m,
            self.h_ae,
            self.h_ab,
            self.rate,
            self.status,
            self.gap,
            self.seconds
        )
    }
}

/// Sweep output order: eta_s descending, then eta_l ascending, then
/// visibility ascending.
pub fn sort_rows(rows: &mut [ResultRow]) {
    rows.sort_by(|a, b| {
        b.eta_s
            .partial_cmp(&a.eta_s)
            .unwrap()
            .then(a.eta_l.partial_cmp(&b.eta_l).unwrap())
            .then(a.visibility.partial_cmp(&b.visibility).unwrap())
    });
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(eta_s: f64, eta_l: f64) -> ResultRow {
        ResultRow {
            protocol: "rBB84".into(),
            eta_s,
            eta_l,
            visibility: 1.0,
            level: "2".into(),
            m: 4,
            h_ae: 0.5,
            h_ab: 0.25,
            rate: 0.25,
            status: "optimal".into(),
            gap: 1e-6,
            seconds: 0.1,
        }
    }

    #[test]
    fn csv_line_matches_header_arity() {
        let line = row(1.0, 0.9).csv_line();
        assert_eq!(line.split(',').count(), CSV_HEADER.split(',').count());
    }

    #[test]
    fn sort_order_is_eta_s_desc_eta_l_asc() {
        let mut rows = vec![row(0.9, 0.9), row(1.0, 0.9), row(1.0, 0.8)];
        sort_rows(&mut rows);
        let key: Vec<(f64, f64)> = rows.iter().map(|r| (r.eta_s, r.eta_l)).collect();
        assert_eq!(key, vec![(1.0, 0.8), (1.0, 0.9), (0.9, 0.9)]);
    }

    #[test]
    fn json_round_trip() {
        let r = row(1.0, 0.9);
        let s = serde_json::to_string(&r).unwrap();
        let back: ResultRow = serde_json::from_str(&s).unwrap();
        assert_eq!(back, r);
    }
}
