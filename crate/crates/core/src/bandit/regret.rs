use super::RoundRecord;

pub const ONE_MINUS_INV_E: f64 = 0.632_120_558_828_557_7;

/// Growth exponent of a cumulative regret curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SlopeFit {
    /// Least-squares slope of `ln R_t` on `ln t` over the positive
    /// checkpoints.
    Fitted { slope: f64, points: usize },
    /// Final cumulative regret is `<= 0`: no growth to fit.
    NonPositive,
    /// Fewer than two positive checkpoints.
    Insufficient,
}

impl SlopeFit {
    pub fn slope(&self) -> Option<f64> {
        match self {
            SlopeFit::Fitted { slope, .. } => Some(*slope),
            _ => None,
        }
    }

    /// Sublinear-growth check; a nonpositive curve passes.
    pub fn at_most(&self, bound: f64) -> bool {
        match self {
            SlopeFit::Fitted { slope, .. } => *slope <= bound,
            SlopeFit::NonPositive => true,
            SlopeFit::Insufficient => false,
        }
    }

    pub fn at_least(&self, bound: f64) -> bool {
        matches!(self, SlopeFit::Fitted { slope, .. } if *slope >= bound)
    }
}

impl std::fmt::Display for SlopeFit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SlopeFit::Fitted { slope, .. } => write!(f, "{slope:.4}"),
            SlopeFit::NonPositive => f.write_str("nonpositive"),
            SlopeFit::Insufficient => f.write_str("insufficient"),
        }
    }
}

/// Geometric checkpoints (1-based rounds) from `max(10, n/100)` to `n`.
pub fn checkpoints(n: usize) -> Vec<usize> {
    const COUNT: usize = 25;
    let start = (n / 100).max(10).min(n);
    if start == 0 {
        return Vec::new();
    }
    let ratio = (n as f64 / start as f64).powf(1.0 / (COUNT - 1) as f64);
    let mut out: Vec<usize> = (0..COUNT)
        .map(|i| ((start as f64) * ratio.powi(i as i32)).round() as usize)
        .map(|t| t.clamp(start, n))
        .collect();
    out.dedup();
    if out.last() != Some(&n) {
        out.push(n);
    }
    out
}

/// Log-log slope of a cumulative curve indexed by round `1..=len`.
pub fn loglog_slope(curve: &[f64]) -> SlopeFit {
    let n = curve.len();
    if n == 0 || curve[n - 1] <= 0.0 {
        return SlopeFit::NonPositive;
    }
    let pts: Vec<(f64, f64)> = checkpoints(n)
        .into_iter()
        .filter(|&t| curve[t - 1] > 0.0)
        .map(|t| ((t as f64).ln(), curve[t - 1].ln()))
        .collect();
    if pts.len() < 2 {
        return SlopeFit::Insufficient;
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    SlopeFit::Fitted {
        slope: sxy / sxx,
        points: pts.len(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegretSummary {
    pub c: f64,
    /// `Σ_{s<=t} [c · benchmark_s - u*(S_s, x_s)]` for every round.
    pub cumulative: Vec<f64>,
    pub total: f64,
    pub slope: SlopeFit,
    pub mean_reward: f64,
    pub mean_benchmark: f64,
}

pub fn regret_report(records: &[RoundRecord], c: f64) -> RegretSummary {
    let mut acc = 0.0;
    let cumulative: Vec<f64> = records
        .iter()
        .map(|r| {
            acc += c * r.benchmark - r.mean_reward;
            acc
        })
        .collect();
    let n = records.len().max(1) as f64;
    RegretSummary {
        c,
        total: acc,
        slope: loglog_slope(&cumulative),
        cumulative,
        mean_reward: records.iter().map(|r| r.mean_reward).sum::<f64>() / n,
        mean_benchmark: records.iter().map(|r| r.benchmark).sum::<f64>() / n,
    }
}
