use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

type SourceFn = dyn Fn(&[f64], f64) -> f64 + Send + Sync;
type ModulusFn = dyn Fn(f64) -> f64 + Send + Sync;

/// Source term `f(x, t)` entering an operator additively.
#[derive(Clone)]
pub enum Forcing {
    Zero,
    /// `value * (1 + rate * t)`.
    Affine { value: f64, rate: f64 },
    /// `amplitude * (1 + rate * t) * prod_i sin(pi x_i)`.
    SineProduct { amplitude: f64, rate: f64 },
    /// `-(1 + d pi^2 t) * prod_i sin(pi x_i)` in dimension `d`: makes
    /// `u = t prod_i sin(pi x_i)` an exact solution of `u_t - Laplace(u) + f = 0`.
    HeatManufactured { dim: usize },
    /// User-supplied source with its time modulus.
    Custom {
        source: Arc<SourceFn>,
        time_modulus: Arc<ModulusFn>,
        time_independent: bool,
    },
}

impl fmt::Debug for Forcing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Forcing::Zero => write!(f, "Zero"),
            Forcing::Affine { value, rate } => {
                write!(f, "Affine {{ value: {value}, rate: {rate} }}")
            }
            Forcing::SineProduct { amplitude, rate } => {
                write!(f, "SineProduct {{ amplitude: {amplitude}, rate: {rate} }}")
            }
            Forcing::HeatManufactured { dim } => write!(f, "HeatManufactured {{ dim: {dim} }}"),
            Forcing::Custom { .. } => write!(f, "Custom(..)"),
        }
    }
}

fn sine_product(x: &[f64]) -> f64 {
    x.iter().map(|&xi| (PI * xi).sin()).product()
}

impl Forcing {
    pub fn custom<F, M>(source: F, time_modulus: M, time_independent: bool) -> Self
    where
        F: Fn(&[f64], f64) -> f64 + Send + Sync + 'static,
        M: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Forcing::Custom {
            source: Arc::new(source),
            time_modulus: Arc::new(time_modulus),
            time_independent,
        }
    }

    #[inline]
    pub fn value(&self, x: &[f64], t: f64) -> f64 {
        match self {
            Forcing::Zero => 0.0,
            Forcing::Affine { value, rate } => value * (1.0 + rate * t),
            Forcing::SineProduct { amplitude, rate } => amplitude * (1.0 + rate * t) * sine_product(x),
            Forcing::HeatManufactured { dim } => {
                -(1.0 + *dim as f64 * PI * PI * t) * sine_product(x)
            }
            Forcing::Custom { source, .. } => source(x, t),
        }
    }

    /// `sup_x |f(x, t + h) - f(x, t)|`, from the explicit time dependence.
    pub fn sigma2(&self, h: f64) -> f64 {
        let h = h.abs();
        match self {
            Forcing::Zero => 0.0,
            Forcing::Affine { value, rate } => (value * rate).abs() * h,
            Forcing::SineProduct { amplitude, rate } => (amplitude * rate).abs() * h,
            Forcing::HeatManufactured { dim } => *dim as f64 * PI * PI * h,
            Forcing::Custom { time_modulus, .. } => time_modulus(h),
        }
    }

    pub fn is_time_independent(&self) -> bool {
        match self {
            Forcing::Zero => true,
            Forcing::Affine { rate, .. } | Forcing::SineProduct { rate, .. } => *rate == 0.0,
            Forcing::HeatManufactured { .. } => false,
            Forcing::Custom {
                time_independent, ..
            } => *time_independent,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heat_source_matches_manufactured_algebra() {
        // u = t sin(pi x): u_t - u_xx + f = sin + pi^2 t sin + f = 0.
        let x = [0.5];
        let t = 1.0;
        let residual = 1.0 + PI * PI * t + Forcing::HeatManufactured { dim: 1 }.value(&x, t);
        assert!(residual.abs() < 1e-14);
    }

    #[test]
    fn time_modulus_bounds_sampled_differences() {
        let cases = [
            Forcing::Affine { value: -2.0, rate: 0.5 },
            Forcing::SineProduct { amplitude: 1.5, rate: -1.0 },
            Forcing::HeatManufactured { dim: 1 },
        ];
        let h = 0.05;
        for f in &cases {
            let bound = f.sigma2(h);
            for i in 0..=20 {
                let x = [i as f64 / 20.0];
                for k in 0..10 {
                    let t = k as f64 * 0.1;
                    let diff = (f.value(&x, t + h) - f.value(&x, t)).abs();
                    assert!(diff <= bound + 1e-14, "{f:?}: {diff} > {bound}");
                }
            }
        }
        assert_eq!(Forcing::Zero.sigma2(0.3), 0.0);
        assert!(Forcing::Affine { value: 1.0, rate: 0.0 }.is_time_independent());
    }
}
