use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::DenseVector;

/// Value per channel from `start` (seconds) until the next segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub start: f64,
    pub values: Vec<f64>,
}

/// Preview error growing with lookahead: while `start <= t < end`, entry `k`
/// of the preview is overstated by `k * per_step[j]` on channel `j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreviewDrift {
    pub start: f64,
    pub end: f64,
    pub per_step: Vec<f64>,
}

/// Piecewise-constant reference. With a corruption model, preview entries
/// `k >= 1` are read from the assumed trajectory (and shifted by the drift)
/// while the current value always comes from the actual one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceTrajectory {
    pub segments: Vec<Segment>,
    pub sample_time: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub assumed: Option<Vec<Segment>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drift: Option<PreviewDrift>,
}

fn validate_segments(segments: &[Segment]) -> Result<usize> {
    let first = segments.first().ok_or_else(|| Error::config("trajectory needs at least one segment"))?;
    let m = first.values.len();
    if m == 0 {
        return Err(Error::config("trajectory segments need at least one channel"));
    }
    for w in segments.windows(2) {
        if !(w[0].start < w[1].start) {
            return Err(Error::config("segment start times must be strictly increasing"));
        }
    }
    if segments.iter().any(|s| s.values.len() != m || s.values.iter().any(|v| !v.is_finite()) || !s.start.is_finite()) {
        return Err(Error::config("segments must share a channel count and hold finite values"));
    }
    Ok(m)
}

fn value_at(segments: &[Segment], step: usize, ts: f64, channel: usize) -> f64 {
    // compare in steps so breakpoints land on exact samples
    let mut v = segments[0].values[channel];
    for s in segments {
        let start_step = (s.start / ts).round();
        if start_step <= step as f64 {
            v = s.values[channel];
        } else {
            break;
        }
    }
    v
}

impl ReferenceTrajectory {
    pub fn new(segments: Vec<Segment>, sample_time: f64) -> Result<Self> {
        let t = ReferenceTrajectory { segments, sample_time, assumed: None, drift: None };
        t.validate()?;
        Ok(t)
    }

    pub fn with_assumed(mut self, assumed: Vec<Segment>) -> Result<Self> {
        self.assumed = Some(assumed);
        self.validate()?;
        Ok(self)
    }

    pub fn with_drift(mut self, drift: PreviewDrift) -> Result<Self> {
        self.drift = Some(drift);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sample_time > 0.0) {
            return Err(Error::config("trajectory sample time must be positive"));
        }
        let m = validate_segments(&self.segments)?;
        if let Some(a) = &self.assumed {
            if validate_segments(a)? != m {
                return Err(Error::config("assumed trajectory channel count differs"));
            }
        }
        if let Some(d) = &self.drift {
            if d.per_step.len() != m || d.per_step.iter().any(|v| !v.is_finite()) || !(d.start <= d.end) {
                return Err(Error::config("preview drift needs one finite rate per channel and start <= end"));
            }
        }
        Ok(())
    }

    pub fn channels(&self) -> usize {
        self.segments[0].values.len()
    }

    /// Actual reference at sample `step`.
    pub fn at(&self, step: usize) -> DenseVector {
        DenseVector::from_fn(self.channels(), |j, _| value_at(&self.segments, step, self.sample_time, j))
    }

    /// Previewed value `k` samples ahead of `step` on channel `j`.
    pub fn preview_value(&self, step: usize, k: usize, j: usize) -> f64 {
        if k == 0 {
            return value_at(&self.segments, step, self.sample_time, j);
        }
        let base = value_at(self.assumed.as_deref().unwrap_or(&self.segments), step + k, self.sample_time, j);
        match &self.drift {
            Some(d) if self.in_window(step, d) => base + k as f64 * d.per_step[j],
            _ => base,
        }
    }

    fn in_window(&self, step: usize, d: &PreviewDrift) -> bool {
        let s = step as f64;
        (d.start / self.sample_time).round() <= s && s < (d.end / self.sample_time).round()
    }

    /// Lifted reference at `step` for per-channel horizons.
    pub fn lifted(&self, step: usize, horizons: &[usize]) -> DenseVector {
        let len: usize = horizons.iter().map(|n| n + 1).sum();
        let mut out = DenseVector::zeros(len);
        let mut off = 0;
        for (j, &n) in horizons.iter().enumerate() {
            for k in 0..=n {
                out[off + k] = self.preview_value(step, k, j);
            }
            off += n + 1;
        }
        out
    }
}
