//! Sine-series parametrization of the data.
//!
//! ```text
//! b₀(t)   = b0m + Σ_l A^{b0}_l sin(ω^{b0}_l t)
//! b₁(t)   = b1m + Σ_l A^{b1}_l sin(ω^{b1}_l t)
//! f(t, x) = f_m + Σ_l Σ_p A^f_{lp} sin(ω^{fT}_l t) sin(ω^{fS}_p x)
//! u₀(x)   = u0m + Σ_l A^{u0}_l sin(ω^{u0}_l x)
//! ```
//!
//! The boundary means are not free: `b0m = u0m` and `b1m = u₀(1)` so that the
//! initial and boundary data agree at `t = 0`.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fixed angular frequencies. Their counts fix the parameter structure.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrequencyStructure {
    #[serde(default)]
    pub b0: Vec<f64>,
    #[serde(default)]
    pub b1: Vec<f64>,
    #[serde(default)]
    pub u0: Vec<f64>,
    #[serde(default)]
    pub f_time: Vec<f64>,
    #[serde(default)]
    pub f_space: Vec<f64>,
}

impl FrequencyStructure {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in self.named() {
            if v.iter().any(|w| !w.is_finite()) {
                return Err(Error::InvalidConfig { key: format!("frequencies.{name}"), reason: "non-finite frequency".into() });
            }
        }
        Ok(())
    }

    fn named(&self) -> [(&'static str, &Vec<f64>); 5] {
        [("b0", &self.b0), ("b1", &self.b1), ("u0", &self.u0), ("f_time", &self.f_time), ("f_space", &self.f_space)]
    }
}

/// Closed interval `[min, max]`, written `[min, max]` in config files.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Interval {
    pub min: f64,
    pub max: f64,
}

impl Interval {
    pub const fn new(min: f64, max: f64) -> Self {
        Self { min, max }
    }

    pub const fn point(x: f64) -> Self {
        Self { min: x, max: x }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.min <= x && x <= self.max
    }

    pub fn span(&self) -> f64 {
        self.max - self.min
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        let u: f64 = rng.gen();
        self.min + (self.max - self.min) * u
    }
}

impl From<[f64; 2]> for Interval {
    fn from(v: [f64; 2]) -> Self {
        Self { min: v[0], max: v[1] }
    }
}

impl From<Interval> for [f64; 2] {
    fn from(i: Interval) -> Self {
        [i.min, i.max]
    }
}

/// Ranges of the free coordinates. `amp_f` is row-major `n_T(f) × n_S(f)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParameterRanges {
    pub nu: Interval,
    #[serde(default)]
    pub amp_b0: Vec<Interval>,
    #[serde(default)]
    pub amp_b1: Vec<Interval>,
    pub f_mean: Interval,
    #[serde(default)]
    pub amp_f: Vec<Interval>,
    pub u0_mean: Interval,
    #[serde(default)]
    pub amp_u0: Vec<Interval>,
}

impl ParameterRanges {
    pub fn validate(&self, freq: &FrequencyStructure) -> Result<()> {
        let lens = [
            ("ranges.amp_b0", self.amp_b0.len(), freq.b0.len()),
            ("ranges.amp_b1", self.amp_b1.len(), freq.b1.len()),
            ("ranges.amp_f", self.amp_f.len(), freq.f_time.len() * freq.f_space.len()),
            ("ranges.amp_u0", self.amp_u0.len(), freq.u0.len()),
        ];
        for (key, got, want) in lens {
            if got != want {
                return Err(Error::InvalidConfig {
                    key: key.into(),
                    reason: format!("expected {want} intervals to match the frequency structure, found {got}"),
                });
            }
        }
        for (name, iv) in self.named_intervals() {
            if !(iv.min <= iv.max) || !iv.min.is_finite() || !iv.max.is_finite() {
                return Err(Error::InvalidConfig { key: format!("ranges.{name}"), reason: format!("invalid interval [{}, {}]", iv.min, iv.max) });
            }
        }
        if !(self.nu.min > 0.0) {
            return Err(Error::InvalidViscosity(self.nu.min));
        }
        Ok(())
    }

    fn named_intervals(&self) -> Vec<(String, Interval)> {
        let mut out = Vec::new();
        out.push(("nu".into(), self.nu));
        for (l, iv) in self.amp_b0.iter().enumerate() {
            out.push((format!("amp_b0[{l}]"), *iv));
        }
        for (l, iv) in self.amp_b1.iter().enumerate() {
            out.push((format!("amp_b1[{l}]"), *iv));
        }
        out.push(("f_mean".into(), self.f_mean));
        for (l, iv) in self.amp_f.iter().enumerate() {
            out.push((format!("amp_f[{l}]"), *iv));
        }
        out.push(("u0_mean".into(), self.u0_mean));
        for (l, iv) in self.amp_u0.iter().enumerate() {
            out.push((format!("amp_u0[{l}]"), *iv));
        }
        out
    }

    /// Spans `max - min` of every coordinate of a compliant point, in the
    /// order of [`ParameterPoint::coordinates`]. The spans of the derived
    /// boundary means follow from the compatibility relations.
    pub fn coordinate_spans(&self, freq: &FrequencyStructure) -> Vec<f64> {
        let mut b1 = self.u0_mean;
        for (iv, w) in self.amp_u0.iter().zip(&freq.u0) {
            let s = libm::sin(*w);
            let (a, b) = (iv.min * s, iv.max * s);
            b1.min += a.min(b);
            b1.max += a.max(b);
        }
        let mut spans = Vec::new();
        spans.push(self.nu.span());
        spans.push(self.u0_mean.span());
        spans.extend(self.amp_b0.iter().map(Interval::span));
        spans.push(b1.span());
        spans.extend(self.amp_b1.iter().map(Interval::span));
        spans.push(self.f_mean.span());
        spans.extend(self.amp_f.iter().map(Interval::span));
        spans.push(self.u0_mean.span());
        spans.extend(self.amp_u0.iter().map(Interval::span));
        spans
    }
}

/// Values of the free coordinates before the compatibility relations are applied.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FreeCoordinates {
    pub nu: f64,
    #[serde(default)]
    pub amp_b0: Vec<f64>,
    #[serde(default)]
    pub amp_b1: Vec<f64>,
    pub f_mean: f64,
    #[serde(default)]
    pub amp_f: Vec<f64>,
    pub u0_mean: f64,
    #[serde(default)]
    pub amp_u0: Vec<f64>,
}

/// A compliant parameter tuple.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParameterPoint {
    pub nu: f64,
    pub b0_mean: f64,
    pub amp_b0: Vec<f64>,
    pub b1_mean: f64,
    pub amp_b1: Vec<f64>,
    pub f_mean: f64,
    /// Row-major `n_T(f) × n_S(f)`.
    pub amp_f: Vec<f64>,
    pub u0_mean: f64,
    pub amp_u0: Vec<f64>,
}

pub fn make_parameter_point(raw: &FreeCoordinates, freq: &FrequencyStructure, ranges: &ParameterRanges) -> Result<ParameterPoint> {
    ranges.validate(freq)?;
    let check_len = |got: usize, want: usize| {
        if got == want {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { expected: want, found: got })
        }
    };
    check_len(raw.amp_b0.len(), ranges.amp_b0.len())?;
    check_len(raw.amp_b1.len(), ranges.amp_b1.len())?;
    check_len(raw.amp_f.len(), ranges.amp_f.len())?;
    check_len(raw.amp_u0.len(), ranges.amp_u0.len())?;

    let check = |name: String, value: f64, iv: &Interval| {
        if iv.contains(value) {
            Ok(())
        } else {
            Err(Error::OutOfRange { coordinate: name, value, min: iv.min, max: iv.max })
        }
    };
    check("nu".into(), raw.nu, &ranges.nu)?;
    for (l, (v, iv)) in raw.amp_b0.iter().zip(&ranges.amp_b0).enumerate() {
        check(format!("amp_b0[{l}]"), *v, iv)?;
    }
    for (l, (v, iv)) in raw.amp_b1.iter().zip(&ranges.amp_b1).enumerate() {
        check(format!("amp_b1[{l}]"), *v, iv)?;
    }
    check("f_mean".into(), raw.f_mean, &ranges.f_mean)?;
    for (l, (v, iv)) in raw.amp_f.iter().zip(&ranges.amp_f).enumerate() {
        check(format!("amp_f[{l}]"), *v, iv)?;
    }
    check("u0_mean".into(), raw.u0_mean, &ranges.u0_mean)?;
    for (l, (v, iv)) in raw.amp_u0.iter().zip(&ranges.amp_u0).enumerate() {
        check(format!("amp_u0[{l}]"), *v, iv)?;
    }
    if !(raw.nu > 0.0) {
        return Err(Error::InvalidViscosity(raw.nu));
    }
    Ok(compliant_point(raw, freq))
}

fn compliant_point(raw: &FreeCoordinates, freq: &FrequencyStructure) -> ParameterPoint {
    let b1_mean = raw.u0_mean + raw.amp_u0.iter().zip(&freq.u0).map(|(a, w)| a * libm::sin(*w)).sum::<f64>();
    ParameterPoint {
        nu: raw.nu,
        b0_mean: raw.u0_mean,
        amp_b0: raw.amp_b0.clone(),
        b1_mean,
        amp_b1: raw.amp_b1.clone(),
        f_mean: raw.f_mean,
        amp_f: raw.amp_f.clone(),
        u0_mean: raw.u0_mean,
        amp_u0: raw.amp_u0.clone(),
    }
}

impl ParameterPoint {
    /// All coordinates in the order
    /// `(ν, b0m, A^{b0}, b1m, A^{b1}, f_m, A^f, u0m, A^{u0})`.
    pub fn coordinates(&self) -> Vec<f64> {
        let mut c = Vec::with_capacity(5 + self.amp_b0.len() + self.amp_b1.len() + self.amp_f.len() + self.amp_u0.len());
        c.push(self.nu);
        c.push(self.b0_mean);
        c.extend_from_slice(&self.amp_b0);
        c.push(self.b1_mean);
        c.extend_from_slice(&self.amp_b1);
        c.push(self.f_mean);
        c.extend_from_slice(&self.amp_f);
        c.push(self.u0_mean);
        c.extend_from_slice(&self.amp_u0);
        c
    }

    /// Checks that the amplitude counts match `freq`.
    pub fn check_structure(&self, freq: &FrequencyStructure) -> Result<()> {
        let pairs = [
            ("amp_b0", self.amp_b0.len(), freq.b0.len()),
            ("amp_b1", self.amp_b1.len(), freq.b1.len()),
            ("amp_f", self.amp_f.len(), freq.f_time.len() * freq.f_space.len()),
            ("amp_u0", self.amp_u0.len(), freq.u0.len()),
        ];
        for (name, got, want) in pairs {
            if got != want {
                return Err(Error::Incompatible(format!("{name} has {got} entries, frequency structure expects {want}")));
            }
        }
        Ok(())
    }

    /// Residuals of the compatibility conditions `u₀(0) - b₀(0)` and `u₀(1) - b₁(0)`.
    pub fn compatibility_defect(&self, freq: &FrequencyStructure) -> (f64, f64) {
        let d = DataFunctions::new(self, freq);
        (d.u0(0.0) - d.b0(0.0), d.u0(1.0) - d.b1(0.0))
    }
}

/// Evaluable data functions of one parameter point.
#[derive(Clone, Copy, Debug)]
pub struct DataFunctions<'a> {
    mu: &'a ParameterPoint,
    freq: &'a FrequencyStructure,
}

pub fn eval_data<'a>(mu: &'a ParameterPoint, freq: &'a FrequencyStructure) -> DataFunctions<'a> {
    DataFunctions::new(mu, freq)
}

impl<'a> DataFunctions<'a> {
    pub fn new(mu: &'a ParameterPoint, freq: &'a FrequencyStructure) -> Self {
        Self { mu, freq }
    }

    pub fn b0(&self, t: f64) -> f64 {
        self.mu.b0_mean + sine_series(&self.mu.amp_b0, &self.freq.b0, t)
    }

    pub fn b1(&self, t: f64) -> f64 {
        self.mu.b1_mean + sine_series(&self.mu.amp_b1, &self.freq.b1, t)
    }

    pub fn u0(&self, x: f64) -> f64 {
        self.mu.u0_mean + sine_series(&self.mu.amp_u0, &self.freq.u0, x)
    }

    /// Coefficients `Σ_l A^f_{lp} sin(ω^{fT}_l t)` of the spatial modes `sin(ω^{fS}_p x)`.
    pub fn source_weights(&self, t: f64) -> Vec<f64> {
        let ns = self.freq.f_space.len();
        let mut w = alloc::vec![0.0; ns];
        for (l, om) in self.freq.f_time.iter().enumerate() {
            let s = libm::sin(om * t);
            for (p, wp) in w.iter_mut().enumerate() {
                *wp += self.mu.amp_f[l * ns + p] * s;
            }
        }
        w
    }

    pub fn f(&self, t: f64, x: f64) -> f64 {
        let w = self.source_weights(t);
        self.mu.f_mean + w.iter().zip(&self.freq.f_space).map(|(a, om)| a * libm::sin(om * x)).sum::<f64>()
    }
}

fn sine_series(amps: &[f64], freqs: &[f64], t: f64) -> f64 {
    amps.iter().zip(freqs).map(|(a, w)| a * libm::sin(w * t)).sum()
}

/// Independent uniform draws per free coordinate from a ChaCha8 stream seeded with `seed`.
pub fn sample_parameters(ranges: &ParameterRanges, freq: &FrequencyStructure, count: usize, seed: u64) -> Result<Vec<ParameterPoint>> {
    ranges.validate(freq)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let raw = FreeCoordinates {
            nu: ranges.nu.sample(&mut rng),
            amp_b0: ranges.amp_b0.iter().map(|iv| iv.sample(&mut rng)).collect(),
            amp_b1: ranges.amp_b1.iter().map(|iv| iv.sample(&mut rng)).collect(),
            f_mean: ranges.f_mean.sample(&mut rng),
            amp_f: ranges.amp_f.iter().map(|iv| iv.sample(&mut rng)).collect(),
            u0_mean: ranges.u0_mean.sample(&mut rng),
            amp_u0: ranges.amp_u0.iter().map(|iv| iv.sample(&mut rng)).collect(),
        };
        out.push(compliant_point(&raw, freq));
    }
    Ok(out)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use alloc::vec;
    use approx::assert_relative_eq;

    pub(crate) fn table1() -> (FrequencyStructure, ParameterRanges) {
        let freq = FrequencyStructure { b0: vec![1.0], b1: vec![1.0], u0: vec![3.0], f_time: vec![2.0], f_space: vec![2.0] };
        let ranges = ParameterRanges {
            nu: Interval::new(0.8, 1.2),
            amp_b0: vec![Interval::new(0.9, 1.2)],
            amp_b1: vec![Interval::new(0.9, 1.2)],
            f_mean: Interval::new(0.0, 2.0),
            amp_f: vec![Interval::new(0.7, 1.3)],
            u0_mean: Interval::new(0.0, 1.0),
            amp_u0: vec![Interval::new(1.1, 3.0)],
        };
        (freq, ranges)
    }

    fn params_set_1() -> FreeCoordinates {
        FreeCoordinates { nu: 1.0, amp_b0: vec![1.0], amp_b1: vec![1.0], f_mean: 1.0, amp_f: vec![1.0], u0_mean: 1.0, amp_u0: vec![2.0] }
    }

    #[test]
    fn compatibility_fixes_boundary_means() {
        let (freq, mut ranges) = table1();
        ranges.nu = Interval::point(1.0);
        let mu = make_parameter_point(&params_set_1(), &freq, &ranges).unwrap();
        assert_eq!(mu.b0_mean, 1.0);
        assert_relative_eq!(mu.b1_mean, 1.28224, epsilon = 5e-6);
        let (d0, d1) = mu.compatibility_defect(&freq);
        assert!(d0.abs() < 1e-14 && d1.abs() < 1e-14);
    }

    #[test]
    fn zero_amplitudes_give_equal_means() {
        let freq = FrequencyStructure::default();
        let ranges = ParameterRanges {
            nu: Interval::point(1.0),
            amp_b0: vec![],
            amp_b1: vec![],
            f_mean: Interval::point(0.0),
            amp_f: vec![],
            u0_mean: Interval::new(-1.0, 1.0),
            amp_u0: vec![],
        };
        let raw = FreeCoordinates { nu: 1.0, amp_b0: vec![], amp_b1: vec![], f_mean: 0.0, amp_f: vec![], u0_mean: 0.4, amp_u0: vec![] };
        let mu = make_parameter_point(&raw, &freq, &ranges).unwrap();
        assert_eq!((mu.b0_mean, mu.b1_mean), (0.4, 0.4));
    }

    #[test]
    fn out_of_range_viscosity() {
        let (freq, ranges) = table1();
        let mut raw = params_set_1();
        raw.nu = 0.5;
        assert!(matches!(make_parameter_point(&raw, &freq, &ranges), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn data_functions() {
        let (freq, mut ranges) = table1();
        ranges.nu = Interval::point(1.0);
        let mu = make_parameter_point(&params_set_1(), &freq, &ranges).unwrap();
        let d = eval_data(&mu, &freq);
        assert_eq!(d.b0(0.0), mu.b0_mean);
        for x in [0.0, 0.3, 1.0] {
            assert_eq!(d.f(0.0, x), mu.f_mean);
            assert_relative_eq!(d.f(0.7, x), 1.0 + libm::sin(1.4) * libm::sin(2.0 * x), epsilon = 1e-15);
        }
        assert_relative_eq!(d.b1(0.5), 1.0 + 2.0 * libm::sin(3.0) + libm::sin(0.5), epsilon = 1e-15);
    }

    #[test]
    fn sampling_is_deterministic_and_compliant() {
        let (freq, ranges) = table1();
        let a = sample_parameters(&ranges, &freq, 100, 42).unwrap();
        let b = sample_parameters(&ranges, &freq, 100, 42).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 100);
        for mu in &a {
            let (d0, d1) = mu.compatibility_defect(&freq);
            assert!(d0.abs() <= 1e-14 && d1.abs() <= 1e-14);
            assert!(ranges.nu.contains(mu.nu));
        }
        let c = sample_parameters(&ranges, &freq, 3, 43).unwrap();
        assert_ne!(a[..3], c[..]);
    }

    #[test]
    fn degenerate_ranges_give_forced_point() {
        let freq = FrequencyStructure { u0: vec![3.0], ..Default::default() };
        let ranges = ParameterRanges {
            nu: Interval::point(0.7),
            amp_b0: vec![],
            amp_b1: vec![],
            f_mean: Interval::point(1.0),
            amp_f: vec![],
            u0_mean: Interval::point(0.5),
            amp_u0: vec![Interval::point(2.0)],
        };
        let pts = sample_parameters(&ranges, &freq, 1, 7).unwrap();
        assert_eq!(pts[0].nu, 0.7);
        assert_eq!(pts[0].u0_mean, 0.5);
        assert_eq!(pts[0].amp_u0, vec![2.0]);
    }

    #[test]
    fn spans_follow_coordinate_order() {
        let (freq, ranges) = table1();
        let mu = sample_parameters(&ranges, &freq, 1, 1).unwrap().remove(0);
        let spans = ranges.coordinate_spans(&freq);
        assert_eq!(spans.len(), mu.coordinates().len());
        assert_relative_eq!(spans[0], 0.4, epsilon = 1e-15);
        // b1m = u0m + A sin 3 spans 1 + 1.9 sin 3
        assert_relative_eq!(spans[3], 1.0 + 1.9 * libm::sin(3.0), epsilon = 1e-14);
    }
}
