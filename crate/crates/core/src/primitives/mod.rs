//! Primitive approximation networks with their size budgets and error certificates.

mod sawtooth;
mod sigma2;
mod step;

use serde::{Deserialize, Serialize};

use crate::network::{Network, SizeBudget};

pub use sawtooth::{
    build_monomial_relu, build_multiproduct, build_product2, build_product2_scaled, build_sawtooth_square,
    carry_shifted, MULTIPRODUCT_INTERVAL,
};
pub use sigma2::{build_exact_monomial_sigma2, build_exact_polynomial_sigma2, build_exact_product2, build_exact_square};
pub use step::{build_point_matcher, build_step, BuildMode, MIN_DIRECT_DELTA};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum NormKind {
    LInf,
    W1Inf,
    WnInf(u32),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundCertificate {
    pub norm: NormKind,
    pub domain: String,
    pub bound_value: f64,
    pub formula: String,
    /// A-priori bound on the network's own norm over the domain, when one is stated.
    pub self_norm_bound: Option<f64>,
}

impl BoundCertificate {
    pub fn new(norm: NormKind, domain: &str, bound_value: f64, formula: &str) -> Self {
        BoundCertificate { norm, domain: domain.into(), bound_value, formula: formula.into(), self_norm_bound: None }
    }

    pub fn with_self_norm(mut self, b: f64) -> Self {
        self.self_norm_bound = Some(b);
        self
    }
}

/// A constructed network together with its budget and (when stated) its error certificate.
#[derive(Clone, Debug)]
pub struct Built {
    pub network: Network,
    pub budget: SizeBudget,
    pub certificate: Option<BoundCertificate>,
}

impl Built {
    pub fn certificate(&self) -> &BoundCertificate {
        self.certificate.as_ref().expect("construction carries a certificate")
    }

    pub fn within_budget(&self) -> bool {
        self.budget.admits(&self.network)
    }
}
