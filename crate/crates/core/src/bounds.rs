//! Big-O orders of the regret and cumulative-violation bounds, selected by
//! the printed case analysis for each schedule family.
//!
//! Results are symbolic: each bound is a list of [`Term`]s of the form
//! `coefficient * Psi_T^psi_power * T^exponent * log(T)^log_power * path`.

use crate::error::{Error, Result};
use crate::schedules::{ScheduleMeta, TauSequence};

/// Exact-equality tolerance for case boundaries such as `theta = 1`.
const BOUNDARY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coefficient {
    One,
    Alpha0,
    InvAlpha0,
    TauOverAlpha0,
    SqrtAlpha0,
    SqrtTau0,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathFactor {
    None,
    /// multiplied by `P_T`
    PathLength,
    /// multiplied by `1 + P_T`
    OnePlusPathLength,
}

/// Exponent of `T`, kept with its symbolic form.
#[derive(Debug, Clone, PartialEq)]
pub struct Exponent {
    pub symbol: String,
    pub value: f64,
}

impl Exponent {
    fn new(symbol: impl Into<String>, value: f64) -> Self {
        Self { symbol: symbol.into(), value }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub coefficient: Coefficient,
    pub exponent: Exponent,
    pub log_power: f64,
    pub psi_power: f64,
    pub path: PathFactor,
}

impl Term {
    fn t(exponent: Exponent) -> Self {
        Self {
            coefficient: Coefficient::One,
            exponent,
            log_power: 0.0,
            psi_power: 0.0,
            path: PathFactor::None,
        }
    }

    fn coef(mut self, c: Coefficient) -> Self {
        self.coefficient = c;
        self
    }

    fn log(mut self, power: f64) -> Self {
        self.log_power = power;
        self
    }

    fn psi(mut self, power: f64) -> Self {
        self.psi_power = power;
        self
    }

    fn path(mut self, p: PathFactor) -> Self {
        self.path = p;
        self
    }
}

/// Which printed case produced a bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundCase {
    /// Generic thresholds, bound written through `Psi_T`.
    Thm1General,
    /// `tau_t = tau0 / t^theta` with `0 < theta < 1`.
    PolyTauSlow,
    /// `theta = 1`.
    PolyTauHarmonic,
    /// `theta > 1`.
    PolyTauFast,
    /// `tau_t = 1 / c^t`.
    GeoTau,
    /// `theta1 < theta3 < 1 + theta1` (regret).
    Thm2RegretInterior,
    /// `theta3 = 1 + theta1`.
    Thm2RegretBoundary,
    /// `theta3 > 1 + theta1`.
    Thm2RegretBeyond,
    /// `theta1 < theta3 < 1` (violation).
    Thm2CcvInterior,
    /// `theta3 = 1`.
    Thm2CcvBoundary,
    /// `theta3 > 1`.
    Thm2CcvBeyond,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundOrders {
    pub regret_case: BoundCase,
    pub ccv_case: BoundCase,
    pub regret: Vec<Term>,
    pub ccv: Vec<Term>,
}

fn dominant(terms: &[Term], with_path: bool) -> Option<f64> {
    terms
        .iter()
        .filter(|t| (t.path != PathFactor::None) == with_path)
        .map(|t| t.exponent.value)
        .reduce(f64::max)
}

impl BoundOrders {
    /// Largest `T` exponent among regret terms without a path-length factor.
    pub fn regret_exponent(&self) -> f64 {
        dominant(&self.regret, false).unwrap_or(0.0)
    }

    /// `T` exponent multiplying the path length, if any.
    pub fn path_exponent(&self) -> Option<f64> {
        dominant(&self.regret, true)
    }

    pub fn ccv_exponent(&self) -> f64 {
        dominant(&self.ccv, false).unwrap_or(0.0)
    }
}

fn eq(a: f64, b: f64) -> bool {
    (a - b).abs() <= BOUNDARY_TOL
}

fn fast_tau_orders(kappa: f64, case: BoundCase) -> BoundOrders {
    BoundOrders {
        regret_case: case,
        ccv_case: case,
        regret: vec![
            Term::t(Exponent::new("max(kappa,1/2)", kappa.max(0.5))),
            Term::t(Exponent::new("1/2", 0.5)).path(PathFactor::PathLength),
        ],
        ccv: vec![Term::t(Exponent::new("max(1-kappa/2,3/4)", (1.0 - kappa / 2.0).max(0.75)))],
    }
}

pub fn predicted_exponents(meta: &ScheduleMeta) -> Result<BoundOrders> {
    match meta {
        ScheduleMeta::Thm1 { kappa, tau } => {
            let kappa = *kappa;
            match tau {
                TauSequence::Tabulated(_) => Ok(BoundOrders {
                    regret_case: BoundCase::Thm1General,
                    ccv_case: BoundCase::Thm1General,
                    regret: vec![
                        Term::t(Exponent::new("kappa", kappa)),
                        Term::t(Exponent::new("1/2", 0.5)).psi(0.5),
                        Term::t(Exponent::new("1/2", 0.5)).psi(-0.5).path(PathFactor::PathLength),
                    ],
                    ccv: vec![
                        Term::t(Exponent::new("1-kappa/2", 1.0 - kappa / 2.0)),
                        Term::t(Exponent::new("3/4", 0.75)).psi(0.25),
                    ],
                }),
                TauSequence::Geo { .. } => Ok(fast_tau_orders(kappa, BoundCase::GeoTau)),
                TauSequence::Poly { theta, .. } => {
                    let theta = *theta;
                    if eq(theta, 1.0) {
                        Ok(BoundOrders {
                            regret_case: BoundCase::PolyTauHarmonic,
                            ccv_case: BoundCase::PolyTauHarmonic,
                            regret: vec![
                                Term::t(Exponent::new("kappa", kappa)),
                                Term::t(Exponent::new("1/2", 0.5)).log(0.5),
                                Term::t(Exponent::new("1/2", 0.5)).log(-0.5).path(PathFactor::PathLength),
                            ],
                            ccv: vec![
                                Term::t(Exponent::new("1-kappa/2", 1.0 - kappa / 2.0)),
                                Term::t(Exponent::new("3/4", 0.75)).log(0.25),
                            ],
                        })
                    } else if theta > 1.0 {
                        Ok(fast_tau_orders(kappa, BoundCase::PolyTauFast))
                    } else if theta > 0.0 {
                        Ok(BoundOrders {
                            regret_case: BoundCase::PolyTauSlow,
                            ccv_case: BoundCase::PolyTauSlow,
                            regret: vec![
                                Term::t(Exponent::new("max(kappa,1-theta/2)", kappa.max(1.0 - theta / 2.0))),
                                Term::t(Exponent::new("theta/2", theta / 2.0)).path(PathFactor::PathLength),
                            ],
                            ccv: vec![Term::t(Exponent::new(
                                "max(1-kappa/2,1-theta/4)",
                                (1.0 - kappa / 2.0).max(1.0 - theta / 4.0),
                            ))],
                        })
                    } else {
                        Err(Error::UnsupportedCase(format!("theta = {theta} is not positive")))
                    }
                }
            }
        }
        ScheduleMeta::Thm2 { theta1, theta2, theta3, .. } => {
            let (t1, t2, t3) = (*theta1, *theta2, *theta3);
            if t3 <= t1 || eq(t3, t1) {
                return Err(Error::UnsupportedCase(format!(
                    "theta3 = {t3} must exceed theta1 = {t1}"
                )));
            }
            let common_regret = [
                Term::t(Exponent::new("1-theta1", 1.0 - t1)).coef(Coefficient::Alpha0),
                Term::t(Exponent::new("theta2", t2)),
            ];
            let path_term = Term::t(Exponent::new("theta1", t1))
                .coef(Coefficient::InvAlpha0)
                .path(PathFactor::OnePlusPathLength);
            let (regret_case, tau_term) = if eq(t3, 1.0 + t1) {
                (
                    BoundCase::Thm2RegretBoundary,
                    Term::t(Exponent::new("0", 0.0)).coef(Coefficient::TauOverAlpha0).log(1.0),
                )
            } else if t3 < 1.0 + t1 {
                (
                    BoundCase::Thm2RegretInterior,
                    Term::t(Exponent::new("1+theta1-theta3", 1.0 + t1 - t3)).coef(Coefficient::TauOverAlpha0),
                )
            } else {
                (
                    BoundCase::Thm2RegretBeyond,
                    Term::t(Exponent::new("0", 0.0)).coef(Coefficient::TauOverAlpha0),
                )
            };
            let mut regret = common_regret.to_vec();
            regret.push(tau_term);
            regret.push(path_term);

            let mut ccv = vec![
                Term::t(Exponent::new("1-theta1/2", 1.0 - t1 / 2.0)).coef(Coefficient::SqrtAlpha0),
                Term::t(Exponent::new("1-theta2/2", 1.0 - t2 / 2.0)),
            ];
            let ccv_case = if eq(t3, 1.0) {
                ccv.push(Term::t(Exponent::new("1/2", 0.5)).coef(Coefficient::SqrtTau0).log(0.5));
                BoundCase::Thm2CcvBoundary
            } else if t3 < 1.0 {
                ccv.push(Term::t(Exponent::new("1-theta3/2", 1.0 - t3 / 2.0)).coef(Coefficient::SqrtTau0));
                BoundCase::Thm2CcvInterior
            } else {
                ccv.push(Term::t(Exponent::new("1/2", 0.5)).coef(Coefficient::SqrtTau0));
                BoundCase::Thm2CcvBeyond
            };
            Ok(BoundOrders { regret_case, ccv_case, regret, ccv })
        }
    }
}

impl std::fmt::Display for Term {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let coef = match self.coefficient {
            Coefficient::One => "",
            Coefficient::Alpha0 => "alpha0*",
            Coefficient::InvAlpha0 => "(1/alpha0)*",
            Coefficient::TauOverAlpha0 => "(tau0/alpha0)*",
            Coefficient::SqrtAlpha0 => "sqrt(alpha0)*",
            Coefficient::SqrtTau0 => "sqrt(tau0)*",
        };
        write!(f, "{coef}T^({})", self.exponent.symbol)?;
        if self.psi_power != 0.0 {
            write!(f, "*Psi_T^({})", self.psi_power)?;
        }
        if self.log_power != 0.0 {
            write!(f, "*log(T)^({})", self.log_power)?;
        }
        match self.path {
            PathFactor::None => Ok(()),
            PathFactor::PathLength => write!(f, "*P_T"),
            PathFactor::OnePlusPathLength => write!(f, "*(1+P_T)"),
        }
    }
}
