//! The spectral main term and the smoothed count compared with its residual-spectrum prediction.

use std::io::{Read, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{modular_covolume, Point};
use crate::kernels::{h_transform, SmoothedCutoff, TestFunction};
use crate::modular_group::sum_over_ball;
use crate::quadrature::GaussLegendre;
use crate::specfun::complex_gamma;

/// One point of the discrete spectrum with the eigenfunction product it carries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralDatum {
    pub s: Complex64,
    /// `u_j(z) conj(u_j(w))`, or `|u_j(z)|^2` on the diagonal.
    pub weight: Complex64,
    pub label: String,
}

impl SpectralDatum {
    pub fn new(s: Complex64, weight: Complex64, label: impl Into<String>) -> Result<Self> {
        let residual = s.im == 0.0 && s.re > 0.5 && s.re <= 1.0;
        let tempered = s.re == 0.5;
        if !(residual || tempered) {
            return Err(Error::invalid(format!("s = {s} is neither in (1/2, 1] nor on the critical line")));
        }
        Ok(SpectralDatum { s, weight, label: label.into() })
    }

    /// The constant eigenfunction of a group with covolume `vol`.
    pub fn constant(vol: f64) -> Self {
        SpectralDatum {
            s: Complex64::new(1.0, 0.0),
            weight: Complex64::new(vol.recip(), 0.0),
            label: "constant".into(),
        }
    }

    pub fn is_residual(&self) -> bool {
        self.s.im == 0.0 && self.s.re > 0.5
    }

    /// `sqrt(pi) Gamma(s - 1/2)/Gamma(s + 1) weight X^s`.
    pub fn contribution(&self, x: f64) -> Result<Complex64> {
        let ratio = complex_gamma(self.s - 0.5)? / complex_gamma(self.s + 1.0)?;
        Ok(ratio * self.weight * Complex64::new(x, 0.0).powc(self.s) * std::f64::consts::PI.sqrt())
    }
}

/// Residual data of `PSL(2,Z)`: only the constant function.
pub fn modular_group_data() -> Vec<SpectralDatum> {
    read_spectral_data(BUNDLED_DATA.as_bytes()).expect("bundled spectral data parses")
}

const BUNDLED_DATA: &str = include_str!("../data/psl2z_residual_spectrum.csv");

/// `M(z, w, X) = sqrt(pi) Σ_j Gamma(s_j - 1/2)/Gamma(s_j + 1) u_j(z) conj(u_j(w)) X^{s_j}`
/// over the residual data.
pub fn main_term(x: f64, data: &[SpectralDatum]) -> Result<f64> {
    if !(x > 2.0) {
        return Err(Error::invalid(format!("main term needs X > 2, got {x}")));
    }
    let first = data.first().ok_or(Error::EmptyGrid)?;
    if first.s != Complex64::new(1.0, 0.0) {
        return Err(Error::invalid("spectral data must start with the constant datum s = 1"));
    }
    let mut total = Complex64::new(0.0, 0.0);
    for d in data.iter().filter(|d| d.is_residual()) {
        total += d.contribution(x)?;
    }
    Ok(total.re)
}

/// CSV with columns `s_real,s_imag,weight_real,weight_imag,label`.
pub fn read_spectral_data<R: Read>(input: R) -> Result<Vec<SpectralDatum>> {
    #[derive(Deserialize)]
    struct Row {
        s_real: f64,
        s_imag: f64,
        weight_real: f64,
        weight_imag: f64,
        label: String,
    }
    let mut rdr = csv::Reader::from_reader(input);
    rdr.deserialize::<Row>()
        .map(|row| {
            let r = row?;
            SpectralDatum::new(Complex64::new(r.s_real, r.s_imag), Complex64::new(r.weight_real, r.weight_imag), r.label)
        })
        .collect()
}

pub fn write_spectral_data<W: Write>(data: &[SpectralDatum], out: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(["s_real", "s_imag", "weight_real", "weight_imag", "label"])?;
    for d in data {
        wtr.write_record([
            d.s.re.to_string(),
            d.s.im.to_string(),
            d.weight.re.to_string(),
            d.weight.im.to_string(),
            d.label.clone(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

/// Direct smoothed count next to the prediction from the constant eigenfunction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SmoothedComparison {
    /// `Σ_gamma k*(u(z, gz))`.
    pub direct_sum: f64,
    /// `h*(i/2) / vol(F)`.
    pub spectral_prediction: f64,
    pub difference: f64,
}

/// `Σ_gamma k*(u(z, gz))` by enumeration at `X = 4x e^{d/x} + 2`, against `|u0|^2 h*(i/2)`.
/// For `PSL(2,Z)` the discrete spectrum above `1/4` is the only other source, and its
/// contribution together with the continuous one is left in `difference`.
pub fn smoothed_count_leading(z: &Point<f64>, x: f64, d: f64) -> Result<SmoothedComparison> {
    let kernel = SmoothedCutoff::new(x, d)?;
    let reach = 4.0 * kernel.support_end() + 2.0;
    let direct_sum = sum_over_ball(z, z, reach, &|q| kernel.eval((q - 2.0) / 4.0))?;
    let h = h_transform(&TestFunction::smoothed(kernel), Complex64::new(0.0, 0.5))?;
    let spectral_prediction = h.re / modular_covolume();
    Ok(SmoothedComparison { direct_sum, spectral_prediction, difference: direct_sum - spectral_prediction })
}

/// `∫_F dμ` by Gauss–Legendre over `F ∩ {y <= y_top}` plus the closed-form `1/y_top` above.
pub fn numeric_covolume(nodes: usize, y_top: f64) -> Result<f64> {
    if nodes == 0 || !(y_top > 1.0) {
        return Err(Error::invalid("covolume quadrature needs nodes > 0 and y_top > 1"));
    }
    let gl = GaussLegendre::new(nodes);
    // With x = sin(phi) the arc becomes y = cos(phi), smooth on the whole range.
    let phi_max = std::f64::consts::FRAC_PI_6;
    let body = gl.integrate(
        |phi: f64| {
            let lower = phi.cos();
            let inner = gl.integrate(|y: f64| y.powi(-2), lower, y_top);
            inner * phi.cos()
        },
        -phi_max,
        phi_max,
    );
    Ok(body + y_top.recip())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::normalization_i;
    use approx::assert_relative_eq;

    #[test]
    fn modular_main_term_is_three_x() {
        let data = modular_group_data();
        assert_eq!(data.len(), 1);
        for x in [2.5, 10.0, 1e5] {
            assert_relative_eq!(main_term(x, &data).unwrap(), 3.0 * x, max_relative = 1e-13);
        }
        assert_relative_eq!(main_term(2.0 + 1e-12, &data).unwrap(), 6.0, max_relative = 1e-10);
    }

    #[test]
    fn main_term_is_additive() {
        let mut data = modular_group_data();
        let extra = SpectralDatum::new(Complex64::new(0.75, 0.0), Complex64::new(0.4, 0.0), "synthetic").unwrap();
        let x = 1234.5;
        let base = main_term(x, &data).unwrap();
        data.push(extra.clone());
        let total = main_term(x, &data).unwrap();
        assert_relative_eq!(total, base + extra.contribution(x).unwrap().re, max_relative = 1e-13);
    }

    #[test]
    fn main_term_validates_input() {
        assert!(main_term(1.5, &modular_group_data()).is_err());
        assert!(matches!(main_term(10.0, &[]), Err(Error::EmptyGrid)));
        assert!(SpectralDatum::new(Complex64::new(0.3, 0.0), Complex64::new(1.0, 0.0), "bad").is_err());
    }

    #[test]
    fn data_round_trip() {
        let data = vec![
            SpectralDatum::constant(modular_covolume()),
            SpectralDatum::new(Complex64::new(0.5, 9.5337), Complex64::new(0.1, -0.2), "cusp form").unwrap(),
        ];
        let mut buf = Vec::new();
        write_spectral_data(&data, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("s_real,s_imag,weight_real,weight_imag,label"));
        assert_eq!(read_spectral_data(buf.as_slice()).unwrap(), data);
    }

    #[test]
    fn covolume_quadrature() {
        let vol = numeric_covolume(24, 3.0).unwrap();
        assert!((vol - std::f64::consts::PI / 3.0).abs() < 1e-6);
    }

    #[test]
    fn tiny_kernel_sees_only_the_stabilizer_of_i() {
        let (x, d) = (0.1, 0.05);
        let r = smoothed_count_leading(&Point::i(), x, d).unwrap();
        assert_relative_eq!(r.direct_sum, 2.0 / normalization_i(d, x).unwrap(), max_relative = 1e-12);
    }

    #[test]
    fn smoothed_count_tracks_prediction() {
        let z = Point::new(0.0, 2.0).unwrap();
        let rel: Vec<f64> = [1e3, 1e4, 1e5]
            .iter()
            .map(|&x| {
                let r = smoothed_count_leading(&z, x, x.powf(0.75)).unwrap();
                assert!(r.direct_sum > 0.5 * 12.0 * x && r.direct_sum < 1.5 * 12.0 * x);
                (r.difference / x).abs()
            })
            .collect();
        // The deficit fluctuates, so only compare against the smallest scale.
        assert!(rel[1] < rel[0] && rel[2] < rel[0], "{rel:?}");
        assert!(rel.iter().all(|&r| r < 0.02), "{rel:?}");
    }
}
