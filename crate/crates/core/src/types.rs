//! Domain types shared across analysis and synchronization modules.

use crate::error::{Error, Result};

/// Uniformly sampled nonnegative strength curve: the music onset envelope
/// or the visual impact envelope.
///
/// Sample `i` sits at time `t0 + i * hop_time`.
#[derive(Debug, Clone, PartialEq)]
pub struct Envelope {
    pub values: Vec<f64>,
    pub hop_time: f64,
    pub t0: f64,
}

impl Envelope {
    pub fn new(values: Vec<f64>, hop_time: f64, t0: f64) -> Result<Self> {
        if hop_time <= 0.0 || !hop_time.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "envelope hop_time must be positive, got {hop_time}"
            )));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidArgument(
                "envelope values must be finite and nonnegative".into(),
            ));
        }
        Ok(Envelope {
            values,
            hop_time,
            t0,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Time of sample `i`.
    pub fn time(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.hop_time
    }

    /// Time span covered by the samples.
    pub fn duration(&self) -> f64 {
        self.len() as f64 * self.hop_time
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().cloned().fold(0.0, f64::max)
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Min-max normalization to [0, 1]. A flat envelope maps to all zeros.
    pub fn normalized(&self) -> Envelope {
        let (min, max) = (self.min_value(), self.max_value());
        let span = max - min;
        let values = if span > 0.0 {
            self.values.iter().map(|v| (v - min) / span).collect()
        } else {
            vec![0.0; self.values.len()]
        };
        Envelope {
            values,
            hop_time: self.hop_time,
            t0: self.t0,
        }
    }

    /// Linear interpolation at time `t`, clamped at the ends.
    pub fn value_at(&self, t: f64) -> f64 {
        if self.values.is_empty() {
            return 0.0;
        }
        let pos = (t - self.t0) / self.hop_time;
        if pos <= 0.0 {
            return self.values[0];
        }
        let last = self.values.len() - 1;
        if pos >= last as f64 {
            return self.values[last];
        }
        let k = pos.floor() as usize;
        let frac = pos - k as f64;
        self.values[k] * (1.0 - frac) + self.values[k + 1] * frac
    }
}

/// Ordered beat event times with their envelope strengths.
#[derive(Debug, Clone, PartialEq)]
pub struct BeatSequence {
    pub times: Vec<f64>,
    pub strengths: Vec<f64>,
    pub total_duration: f64,
}

impl BeatSequence {
    pub fn new(times: Vec<f64>, strengths: Vec<f64>, total_duration: f64) -> Result<Self> {
        if times.len() != strengths.len() {
            return Err(Error::InvalidArgument(
                "beat times and strengths must have equal length".into(),
            ));
        }
        if !times.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidArgument(
                "beat times must be strictly increasing".into(),
            ));
        }
        if times
            .iter()
            .any(|t| *t < 0.0 || *t >= total_duration || !t.is_finite())
        {
            return Err(Error::InvalidArgument(
                "beat times must lie in [0, total_duration)".into(),
            ));
        }
        if strengths.iter().any(|s| *s < 0.0 || !s.is_finite()) {
            return Err(Error::InvalidArgument(
                "beat strengths must be finite and nonnegative".into(),
            ));
        }
        Ok(BeatSequence {
            times,
            strengths,
            total_duration,
        })
    }

    pub fn empty(total_duration: f64) -> Self {
        BeatSequence {
            times: Vec::new(),
            strengths: Vec::new(),
            total_duration,
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}
