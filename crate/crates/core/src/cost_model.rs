//! Quartic link costs `c_e(f) = a_e + b_e f^4`, the social objective
//! `sum_e f_e c_e(f_e)`, and its gradients under random flow.
//!
//! Two noise cases have closed-form expectations:
//!
//! * multiplicative uniform: `f_e = x_e (1 + beta u_e)` with `u_e ~ U[-1, 1]`,
//! * additive independent: `f_e = x_e + z_e` with `z_e` independent of `x`.
//!
//! The general dependence `z_e = z(x_e)` gives the stochastic gradient
//! `a_e (1 + z'(x_e)) + 5 b_e (x_e + z_e)^4 (1 + z'(x_e))`; only the two cases
//! above are implemented.

use std::ops::Deref;

use crate::error::{Error, Result};
use crate::network::{edge_flow_bounds, Network};
use crate::scalar::Scalar;

/// Per-edge cost coefficients in edge-list order.
#[derive(Debug, Clone, PartialEq)]
pub struct CostParams<T> {
    pub a: Vec<T>,
    pub b: Vec<T>,
}

impl<T: Scalar> CostParams<T> {
    pub fn new(a: Vec<T>, b: Vec<T>) -> Result<Self> {
        if a.len() != b.len() {
            return Err(Error::DimensionMismatch {
                expected: a.len(),
                found: b.len(),
            });
        }
        for (edge, &v) in a.iter().chain(&b).enumerate() {
            if !(v >= T::zero()) || !v.is_finite() {
                return Err(Error::NegativeCost {
                    edge: edge % a.len().max(1),
                    value: v.as_f64(),
                });
            }
        }
        Ok(Self { a, b })
    }

    pub fn from_network(network: &Network<T>) -> Self {
        Self {
            a: network.edges().iter().map(|e| e.a).collect(),
            b: network.edges().iter().map(|e| e.b).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    /// Same parameters with every congestion coefficient multiplied by `k`.
    pub fn scale_congestion(&self, k: T) -> Self {
        Self {
            a: self.a.clone(),
            b: self.b.iter().map(|&b| b * k).collect(),
        }
    }

    fn check(&self, len: usize) -> Result<()> {
        if len != self.a.len() {
            return Err(Error::DimensionMismatch {
                expected: self.a.len(),
                found: len,
            });
        }
        Ok(())
    }
}

macro_rules! edge_vector {
    ($(#[$doc:meta])* $name:ident) => {
        $(#[$doc])*
        #[derive(Debug, Clone, PartialEq)]
        pub struct $name<T>(pub Vec<T>);

        impl<T> Deref for $name<T> {
            type Target = [T];

            fn deref(&self) -> &[T] {
                &self.0
            }
        }

        impl<T> $name<T> {
            pub fn into_inner(self) -> Vec<T> {
                self.0
            }
        }
    };
}

edge_vector!(
    /// Per-edge travel cost.
    CostVector
);
edge_vector!(
    /// Per-edge (marginal) gradient of a social objective.
    GradientVector
);

pub(crate) fn check_spread<T: Scalar>(beta: T) -> Result<()> {
    if !(beta >= T::zero() && beta <= T::one()) {
        return Err(Error::InvalidSpread(beta.as_f64()));
    }
    Ok(())
}

pub fn link_cost<T: Scalar>(f: &[T], params: &CostParams<T>) -> Result<CostVector<T>> {
    params.check(f.len())?;
    Ok(CostVector(
        f.iter()
            .zip(params.a.iter().zip(&params.b))
            .map(|(&f, (&a, &b))| a + b * f.powi(4))
            .collect(),
    ))
}

/// Total travel cost `sum_e f_e (a_e + b_e f_e^4)`.
pub fn social_cost<T: Scalar>(f: &[T], params: &CostParams<T>) -> Result<T> {
    params.check(f.len())?;
    Ok(social_cost_unchecked(f, params))
}

pub(crate) fn social_cost_unchecked<T: Scalar>(f: &[T], params: &CostParams<T>) -> T {
    f.iter()
        .zip(params.a.iter().zip(&params.b))
        .map(|(&f, (&a, &b))| f * (a + b * f.powi(4)))
        .sum()
}

/// Gradient of the deterministic social cost: `a_e + 5 b_e f_e^4`.
pub fn marginal_cost<T: Scalar>(f: &[T], params: &CostParams<T>) -> Result<GradientVector<T>> {
    params.check(f.len())?;
    Ok(scaled_marginal(f, params, T::one()))
}

fn scaled_marginal<T: Scalar>(x: &[T], params: &CostParams<T>, factor: T) -> GradientVector<T> {
    let five = T::lit(5.0);
    GradientVector(
        x.iter()
            .zip(params.a.iter().zip(&params.b))
            .map(|(&x, (&a, &b))| a + five * b * x.powi(4) * factor)
            .collect(),
    )
}

/// Stochastic gradient for multiplicative noise `f_e = x_e (1 + beta u_e)`:
/// `a_e (1 + beta u_e) + 5 b_e x_e^4 (1 + beta u_e)^5`.
pub fn stochastic_gradient_case1<T: Scalar>(
    x: &[T],
    u: &[T],
    beta: T,
    params: &CostParams<T>,
) -> Result<GradientVector<T>> {
    params.check(x.len())?;
    params.check(u.len())?;
    check_spread(beta)?;
    if let Some((edge, &v)) = u.iter().enumerate().find(|(_, v)| !(v.abs() <= T::one())) {
        return Err(Error::NoiseOutOfRange {
            edge,
            value: v.as_f64(),
        });
    }
    let five = T::lit(5.0);
    Ok(GradientVector(
        x.iter()
            .zip(u)
            .zip(params.a.iter().zip(&params.b))
            .map(|((&x, &u), (&a, &b))| {
                let s = T::one() + beta * u;
                a * s + five * b * x.powi(4) * s.powi(5)
            })
            .collect(),
    ))
}

/// Stochastic gradient for additive noise independent of `x`:
/// `a_e + 5 b_e (x_e + z_e)^4`. Negative total flows are clamped to zero;
/// the second return value counts clamped edges.
pub fn stochastic_gradient_case2<T: Scalar>(
    x: &[T],
    z: &[T],
    params: &CostParams<T>,
) -> Result<(GradientVector<T>, usize)> {
    params.check(x.len())?;
    params.check(z.len())?;
    let (f, clamped) = clamped_sum(x, z);
    Ok((scaled_marginal(&f, params, T::one()), clamped))
}

/// `max(x + z, 0)` elementwise, with the number of entries that were clamped.
pub fn clamped_sum<T: Scalar>(x: &[T], z: &[T]) -> (Vec<T>, usize) {
    let mut clamped = 0;
    let f = x
        .iter()
        .zip(z)
        .map(|(&x, &z)| {
            let s = x + z;
            if s < T::zero() {
                clamped += 1;
                T::zero()
            } else {
                s
            }
        })
        .collect();
    (f, clamped)
}

/// `E[(1 + beta u)^r]` for `u ~ U[-1, 1]`, summed over even binomial terms:
/// `sum_{k even} C(r, k) beta^k / (k + 1)`. Equals
/// `((1+beta)^(r+1) - (1-beta)^(r+1)) / (2 beta (r+1))` without the 0/0 at
/// `beta = 0`.
pub fn flow_moment_factor<T: Scalar>(beta: T, r: u32) -> T {
    let mut total = T::zero();
    let mut binom = 1u64;
    for k in 0..=r {
        if k % 2 == 0 {
            total =
                total + T::lit(binom as f64) * beta.powi(k as i32) / T::from_count(k as usize + 1);
        }
        binom = binom * u64::from(r - k) / u64::from(k + 1);
    }
    total
}

/// `E[(1 + beta u)^5]`: 16/3 at `beta = 1`, 1 at `beta = 0`.
pub fn quintic_factor<T: Scalar>(beta: T) -> T {
    flow_moment_factor(beta, 5)
}

/// Closed-form expected gradient under multiplicative uniform noise:
/// `a_e + 5 b_e x_e^4 E[(1 + beta u)^5]`.
pub fn expected_gradient_case1<T: Scalar>(
    x: &[T],
    beta: T,
    params: &CostParams<T>,
) -> Result<GradientVector<T>> {
    params.check(x.len())?;
    check_spread(beta)?;
    Ok(scaled_marginal(x, params, quintic_factor(beta)))
}

/// Raw moments `E[z^k]`, `k = 1..=4`, of an additive noise term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseMoments<T> {
    pub raw: [T; 4],
}

impl<T: Scalar> NoiseMoments<T> {
    pub fn zero() -> Self {
        Self {
            raw: [T::zero(); 4],
        }
    }

    /// Moments of `U[-c, c]`.
    pub fn uniform(half_width: T) -> Self {
        let c2 = half_width * half_width;
        Self {
            raw: [
                T::zero(),
                c2 / T::lit(3.0),
                T::zero(),
                c2 * c2 / T::lit(5.0),
            ],
        }
    }

    /// Moments of `N(0, sd^2)`.
    pub fn normal(sd: T) -> Self {
        let v = sd * sd;
        Self {
            raw: [T::zero(), v, T::zero(), T::lit(3.0) * v * v],
        }
    }
}

/// Closed-form expected gradient under additive independent noise:
/// `a_e + 5 b_e sum_{i=0}^{4} C(4, i) x_e^i E[z_e^(4-i)]`.
pub fn expected_gradient_case2<T: Scalar>(
    x: &[T],
    moments: &[NoiseMoments<T>],
    params: &CostParams<T>,
) -> Result<GradientVector<T>> {
    params.check(x.len())?;
    if moments.len() < x.len() {
        return Err(Error::MissingMoments(moments.len()));
    }
    const BINOM4: [f64; 5] = [1.0, 4.0, 6.0, 4.0, 1.0];
    let five = T::lit(5.0);
    Ok(GradientVector(
        x.iter()
            .zip(moments)
            .zip(params.a.iter().zip(&params.b))
            .map(|((&x, m), (&a, &b))| {
                let quartic: T = (0..=4usize)
                    .map(|i| {
                        let zpow = if i == 4 { T::one() } else { m.raw[3 - i] };
                        T::lit(BINOM4[i]) * x.powi(i as i32) * zpow
                    })
                    .sum();
                a + five * b * quartic
            })
            .collect(),
    ))
}

/// Expected social cost under multiplicative uniform noise:
/// `sum_e a_e x_e + b_e x_e^5 E[(1 + beta u)^5]`.
pub fn expected_social_cost_case1<T: Scalar>(
    x: &[T],
    beta: T,
    params: &CostParams<T>,
) -> Result<T> {
    params.check(x.len())?;
    check_spread(beta)?;
    Ok(scaled_social_cost(x, params, quintic_factor(beta)))
}

pub(crate) fn scaled_social_cost<T: Scalar>(x: &[T], params: &CostParams<T>, factor: T) -> T {
    x.iter()
        .zip(params.a.iter().zip(&params.b))
        .map(|(&x, (&a, &b))| a * x + b * x.powi(5) * factor)
        .sum()
}

/// `E[f^r]` for `f = x (1 + beta u)`, `u ~ U[-1, 1]`. At `beta = 1` this is
/// `(2x)^r / (r + 1)`.
pub fn uniform_flow_moment<T: Scalar>(x: T, beta: T, r: u32) -> T {
    x.powi(r as i32) * flow_moment_factor(beta, r)
}

/// `Var[f^4]` for `f ~ U[0, 2x]`: `(16/225) (2x)^8`.
pub fn variance_of_f4<T: Scalar>(x: T) -> T {
    T::lit(16.0 / 225.0) * (T::lit(2.0) * x).powi(8)
}

/// `Var[f^4]` for `f = x (1 + beta u)` at any spread, from the 8th and 4th moments.
pub fn variance_of_f4_spread<T: Scalar>(x: T, beta: T) -> T {
    let m4 = uniform_flow_moment(x, beta, 4);
    uniform_flow_moment(x, beta, 8) - m4 * m4
}

/// Upper bound on the Lipschitz constant of the expected gradient over the
/// feasible set. With per-edge flow bound `K_e` and `|z_e| <= beta x_e`, each
/// gradient-difference factor `5 b_e (x+y+2z)((x+z)^2 + (y+z)^2)` is at most
/// `20 b_e (K_e (1 + beta))^3`; the bound is the Euclidean norm of those
/// factors. The `beta < 1` form extends the `|z_e| <= x_e` argument.
pub fn lipschitz_bound<T: Scalar>(
    network: &Network<T>,
    params: &CostParams<T>,
    beta: T,
    path_cap: usize,
) -> Result<T> {
    check_spread(beta)?;
    params.check(network.edge_count())?;
    let k = edge_flow_bounds(network, path_cap)?;
    let twenty = T::lit(20.0);
    Ok(k.iter()
        .zip(&params.b)
        .map(|(&k, &b)| {
            let g = twenty * b * (k * (T::one() + beta)).powi(3);
            g * g
        })
        .sum::<T>()
        .sqrt())
}
