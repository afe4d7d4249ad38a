use crate::sdp::SdpStatus;

use super::SolveSummary;

/// One feasibility probe made during a bisection.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeRecord {
    pub value: f64,
    pub feasible: bool,
    pub status: SdpStatus,
    pub feasibility_ratio: f64,
    pub retried: bool,
}

impl ProbeRecord {
    pub(crate) fn from_summary(value: f64, s: &SolveSummary) -> Self {
        ProbeRecord {
            value,
            feasible: s.is_feasible(),
            status: s.status,
            feasibility_ratio: s.feasibility_ratio,
            retried: s.retried,
        }
    }

    pub(crate) fn failed(value: f64) -> Self {
        ProbeRecord {
            value,
            feasible: false,
            status: SdpStatus::Failed,
            feasibility_ratio: f64::NAN,
            retried: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct BisectResult<T> {
    /// Largest value proven feasible (0 if only the origin is).
    pub best: f64,
    pub payload: Option<T>,
    /// Still feasible at the bracket cap.
    pub capped: bool,
    pub trace: Vec<ProbeRecord>,
}

/// Finds the feasibility boundary on `[0, ∞)` assuming 0 is feasible.
///
/// The upper end starts at `start` and doubles until a probe fails or `cap`
/// is reached; the bracket is then halved until narrower than `tol`. Anything
/// other than a `Feasible` status counts as infeasible.
pub(crate) fn bisect_outward<T>(
    start: f64,
    cap: f64,
    tol: f64,
    mut probe: impl FnMut(f64) -> (ProbeRecord, Option<T>),
) -> BisectResult<T> {
    let mut trace = Vec::new();
    let mut lo = 0.0;
    let mut payload = None;
    let mut hi = start.min(cap);
    loop {
        let (rec, p) = probe(hi);
        let ok = rec.feasible;
        trace.push(rec);
        if !ok {
            break;
        }
        lo = hi;
        payload = p;
        if hi >= cap {
            return BisectResult {
                best: lo,
                payload,
                capped: true,
                trace,
            };
        }
        hi = (hi * 2.0).min(cap);
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let (rec, p) = probe(mid);
        let ok = rec.feasible;
        trace.push(rec);
        if ok {
            lo = mid;
            payload = p;
        } else {
            hi = mid;
        }
    }
    BisectResult {
        best: lo,
        payload,
        capped: false,
        trace,
    }
}
