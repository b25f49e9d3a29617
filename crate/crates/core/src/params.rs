//! Physical and regularization constants.

use crate::error::{CpeError, Result};

/// Constant coefficients of the system plus the modeling floors for the
/// specific volume and the pressure.
///
/// `nu` is derived and stored at construction; there is no setter, so the
/// relation `nu = (gamma - 1) kappa / (gamma R)` always holds bit-for-bit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysParams {
    gamma: f64,
    mu: f64,
    lambda: f64,
    kappa: f64,
    gas_constant: f64,
    nu: f64,
    epsilon: f64,
    sigma_floor: f64,
    p_floor: f64,
}

impl PhysParams {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        gamma: f64,
        mu: f64,
        lambda: f64,
        kappa: f64,
        gas_constant: f64,
        epsilon: f64,
        sigma_floor: f64,
        p_floor: f64,
    ) -> Result<Self> {
        let finite = [
            ("gamma", gamma),
            ("mu", mu),
            ("lambda", lambda),
            ("kappa", kappa),
            ("R", gas_constant),
            ("epsilon", epsilon),
            ("sigma_floor", sigma_floor),
            ("p_floor", p_floor),
        ];
        for (key, value) in finite {
            if !value.is_finite() {
                return Err(CpeError::constraint(key, "must be finite"));
            }
        }
        if gamma <= 1.0 {
            return Err(CpeError::constraint("gamma", format!("gamma > 1 violated (gamma = {gamma})")));
        }
        if mu <= 0.0 {
            return Err(CpeError::constraint("mu", format!("mu > 0 violated (mu = {mu})")));
        }
        if mu + lambda <= 0.0 {
            return Err(CpeError::constraint(
                "lambda",
                format!("mu + lambda > 0 violated (mu + lambda = {})", mu + lambda),
            ));
        }
        if kappa <= 0.0 {
            return Err(CpeError::constraint("kappa", format!("kappa > 0 violated (kappa = {kappa})")));
        }
        if gas_constant <= 0.0 {
            return Err(CpeError::constraint("R", format!("R > 0 violated (R = {gas_constant})")));
        }
        if epsilon < 0.0 {
            return Err(CpeError::constraint("epsilon", "epsilon >= 0 violated"));
        }
        if sigma_floor <= 0.0 {
            return Err(CpeError::constraint("sigma_floor", "sigma_floor > 0 violated"));
        }
        if p_floor <= 0.0 {
            return Err(CpeError::constraint("p_floor", "p_floor > 0 violated"));
        }
        Ok(Self {
            gamma,
            mu,
            lambda,
            kappa,
            gas_constant,
            nu: (gamma - 1.0) * kappa / (gamma * gas_constant),
            epsilon,
            sigma_floor,
            p_floor,
        })
    }

    /// Air-like defaults: gamma = 1.4, mu = kappa = R = 1, lambda = 0,
    /// epsilon = 0, floors 0.5.
    pub fn standard() -> Self {
        Self::new(1.4, 1.0, 0.0, 1.0, 1.0, 0.0, 0.5, 0.5).expect("standard parameters are admissible")
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }
    pub fn mu(&self) -> f64 {
        self.mu
    }
    pub fn lambda(&self) -> f64 {
        self.lambda
    }
    pub fn kappa(&self) -> f64 {
        self.kappa
    }
    pub fn gas_constant(&self) -> f64 {
        self.gas_constant
    }
    pub fn nu(&self) -> f64 {
        self.nu
    }
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
    pub fn sigma_floor(&self) -> f64 {
        self.sigma_floor
    }
    pub fn p_floor(&self) -> f64 {
        self.p_floor
    }

    /// Same constants with a different regularization strength.
    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        Self::new(
            self.gamma,
            self.mu,
            self.lambda,
            self.kappa,
            self.gas_constant,
            epsilon,
            self.sigma_floor,
            self.p_floor,
        )
    }

    pub fn with_floors(&self, sigma_floor: f64, p_floor: f64) -> Result<Self> {
        Self::new(
            self.gamma,
            self.mu,
            self.lambda,
            self.kappa,
            self.gas_constant,
            self.epsilon,
            sigma_floor,
            p_floor,
        )
    }
}
