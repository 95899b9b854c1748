//! Step-size, regularization and trigger-threshold sequences.
//!
//! Two families are supported. The `Thm1` family couples the primal step to
//! the cumulative threshold `Psi_t = sum_{s<=t} tau_s`:
//! `alpha_t = sqrt(Psi_t / t)`, `beta_t = t^-kappa`, `gamma_t = t^-(1-kappa)`.
//! The `Thm2` family decouples them: `alpha_t = alpha0 / t^theta1`,
//! `beta_t = t^-theta2`, `gamma_t = t^-(1-theta2)`, `tau_t = tau0 / t^theta3`.
//! In both, `gamma_t * beta_t = 1/t`.

use std::sync::RwLock;

use crate::error::{Error, Result};

/// Event-triggering thresholds `tau_t`, `t >= 1`.
#[derive(Debug, Clone, PartialEq)]
pub enum TauSequence {
    /// `tau0 / t^theta`.
    Poly { tau0: f64, theta: f64 },
    /// `1 / c^t`.
    Geo { c: f64 },
    /// Explicit values for `t = 1, 2, ...`; the last value repeats afterwards.
    Tabulated(Vec<f64>),
}

pub fn tau_poly(tau0: f64, theta: f64) -> Result<TauSequence> {
    if !(tau0 >= 0.0 && tau0.is_finite()) {
        return Err(Error::InvalidParameter(format!("tau0 must be >= 0, got {tau0}")));
    }
    if !(theta > 0.0 && theta.is_finite()) {
        return Err(Error::InvalidParameter(format!("theta must be > 0, got {theta}")));
    }
    Ok(TauSequence::Poly { tau0, theta })
}

pub fn tau_geo(c: f64) -> Result<TauSequence> {
    if !(c > 1.0 && c.is_finite()) {
        return Err(Error::InvalidParameter(format!("c must be > 1, got {c}")));
    }
    Ok(TauSequence::Geo { c })
}

pub fn tau_tabulated(values: Vec<f64>) -> Result<TauSequence> {
    if values.is_empty() {
        return Err(Error::InvalidParameter("empty tau table".into()));
    }
    if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::InvalidParameter("tau values must be finite and >= 0".into()));
    }
    if values.windows(2).skip(1).any(|w| w[1] > w[0]) {
        return Err(Error::InvalidParameter("tau must be non-increasing for t >= 2".into()));
    }
    Ok(TauSequence::Tabulated(values))
}

impl TauSequence {
    pub fn value(&self, t: usize) -> f64 {
        let tf = t as f64;
        match self {
            Self::Poly { tau0, theta } => tau0 / tf.powf(*theta),
            Self::Geo { c } => c.powf(-tf),
            Self::Tabulated(v) => v[(t.max(1) - 1).min(v.len() - 1)],
        }
    }
}

/// Parameters that define a [`ScheduleSet`].
#[derive(Debug, Clone, PartialEq)]
pub enum ScheduleMeta {
    Thm1 { kappa: f64, tau: TauSequence },
    Thm2 { alpha0: f64, theta1: f64, theta2: f64, tau0: f64, theta3: f64 },
}

/// Values used by one update: `alpha_t`, `beta_t`, `gamma_t`, `tau_t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub tau: f64,
}

/// A validated schedule. `Psi_t` is memoized as a running sum and shared
/// safely between concurrent readers.
#[derive(Debug)]
pub struct ScheduleSet {
    meta: ScheduleMeta,
    psi: RwLock<Vec<f64>>,
}

impl Clone for ScheduleSet {
    fn clone(&self) -> Self {
        Self {
            meta: self.meta.clone(),
            psi: RwLock::new(self.psi.read().expect("psi lock").clone()),
        }
    }
}

impl PartialEq for ScheduleSet {
    fn eq(&self, other: &Self) -> bool {
        self.meta == other.meta
    }
}

fn in_open_unit(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} out of (0,1): {v}")))
    }
}

pub fn thm1_schedule(kappa: f64, tau: TauSequence) -> Result<ScheduleSet> {
    in_open_unit("kappa", kappa)?;
    match &tau {
        TauSequence::Poly { tau0, theta } => {
            tau_poly(*tau0, *theta)?;
        }
        TauSequence::Geo { c } => {
            tau_geo(*c)?;
        }
        TauSequence::Tabulated(v) => {
            tau_tabulated(v.clone())?;
        }
    }
    if tau.value(1) <= 0.0 {
        return Err(Error::InvalidParameter(
            "tau_1 must be positive under the thm1 schedule (alpha_1 = sqrt(tau_1)); use thm2 for tau0 = 0"
                .into(),
        ));
    }
    Ok(ScheduleSet { meta: ScheduleMeta::Thm1 { kappa, tau }, psi: RwLock::new(Vec::new()) })
}

pub fn thm2_schedule(alpha0: f64, theta1: f64, theta2: f64, tau0: f64, theta3: f64) -> Result<ScheduleSet> {
    in_open_unit("theta1", theta1)?;
    in_open_unit("theta2", theta2)?;
    if !(alpha0 > 0.0 && alpha0.is_finite()) {
        return Err(Error::InvalidParameter(format!("alpha0 must be > 0, got {alpha0}")));
    }
    tau_poly(tau0, theta3)?;
    Ok(ScheduleSet {
        meta: ScheduleMeta::Thm2 { alpha0, theta1, theta2, tau0, theta3 },
        psi: RwLock::new(Vec::new()),
    })
}

impl ScheduleSet {
    pub fn meta(&self) -> &ScheduleMeta {
        &self.meta
    }

    pub fn tau(&self, t: usize) -> f64 {
        match &self.meta {
            ScheduleMeta::Thm1 { tau, .. } => tau.value(t),
            ScheduleMeta::Thm2 { tau0, theta3, .. } => tau0 / (t as f64).powf(*theta3),
        }
    }

    /// `Psi_t`, the running sum of thresholds (thm1 only).
    pub fn psi(&self, t: usize) -> Option<f64> {
        let ScheduleMeta::Thm1 { tau, .. } = &self.meta else {
            return None;
        };
        if t == 0 {
            return Some(0.0);
        }
        if let Some(v) = self.psi.read().expect("psi lock").get(t - 1) {
            return Some(*v);
        }
        let mut memo = self.psi.write().expect("psi lock");
        let mut acc = memo.last().copied().unwrap_or(0.0);
        for s in memo.len() + 1..=t {
            acc += tau.value(s);
            memo.push(acc);
        }
        Some(memo[t - 1])
    }

    pub fn alpha(&self, t: usize) -> f64 {
        let tf = t as f64;
        match &self.meta {
            ScheduleMeta::Thm1 { .. } => (self.psi(t).expect("thm1 psi") / tf).sqrt(),
            ScheduleMeta::Thm2 { alpha0, theta1, .. } => alpha0 / tf.powf(*theta1),
        }
    }

    pub fn beta(&self, t: usize) -> f64 {
        (t as f64).powf(-self.beta_exponent())
    }

    pub fn gamma(&self, t: usize) -> f64 {
        (t as f64).powf(-(1.0 - self.beta_exponent()))
    }

    fn beta_exponent(&self) -> f64 {
        match &self.meta {
            ScheduleMeta::Thm1 { kappa, .. } => *kappa,
            ScheduleMeta::Thm2 { theta2, .. } => *theta2,
        }
    }

    pub fn params(&self, t: usize) -> RoundParams {
        RoundParams {
            alpha: self.alpha(t),
            beta: self.beta(t),
            gamma: self.gamma(t),
            tau: self.tau(t),
        }
    }

    /// Scans `t = 1..=t_max` for the sequence requirements of the algorithm.
    pub fn scan(&self, t_max: usize) -> ScheduleScan {
        let mut scan = ScheduleScan {
            t_max,
            max_gamma_beta: 0.0,
            failures: Vec::new(),
        };
        let note = |scan: &mut ScheduleScan, what: &str, t: usize| {
            if !scan.failures.iter().any(|(w, _)| w == what) {
                scan.failures.push((what.to_string(), t));
            }
        };
        let mut prev: Option<RoundParams> = None;
        for t in 1..=t_max {
            let cur = self.params(t);
            let gb = cur.gamma * cur.beta;
            scan.max_gamma_beta = scan.max_gamma_beta.max(gb);
            if gb > 1.0 {
                note(&mut scan, "gamma_t * beta_t <= 1", t);
            }
            if !(cur.alpha > 0.0 && cur.beta > 0.0 && cur.gamma > 0.0) {
                note(&mut scan, "alpha, beta, gamma positive", t);
            }
            if !(cur.tau >= 0.0) {
                note(&mut scan, "tau nonnegative", t);
            }
            if let Some(p) = prev {
                if cur.alpha >= p.alpha {
                    note(&mut scan, "alpha decreasing", t);
                }
                if cur.beta >= p.beta {
                    note(&mut scan, "beta decreasing", t);
                }
                if cur.gamma >= p.gamma {
                    note(&mut scan, "gamma decreasing", t);
                }
                if t >= 3 && cur.tau > p.tau {
                    note(&mut scan, "tau non-increasing for t >= 2", t);
                }
            }
            if let ScheduleMeta::Thm1 { kappa, .. } = self.meta {
                if dual_gap_quantity(kappa, t) <= 0.0 {
                    note(&mut scan, "t^(1-kappa) - (t+1)^(1-kappa) + (t+1)^-kappa > 0", t);
                }
            }
            prev = Some(cur);
        }
        scan
    }
}

/// `t/t^kappa - (t+1)/(t+1)^kappa + 1/(t+1)^kappa`, positive for every `t`.
pub fn dual_gap_quantity(kappa: f64, t: usize) -> f64 {
    let tf = t as f64;
    let t1 = tf + 1.0;
    tf / tf.powf(kappa) - t1 / t1.powf(kappa) + 1.0 / t1.powf(kappa)
}

/// Result of [`ScheduleSet::scan`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleScan {
    pub t_max: usize,
    pub max_gamma_beta: f64,
    /// Failed property and the first round where it failed.
    pub failures: Vec<(String, usize)>,
}

impl ScheduleScan {
    pub fn passes(&self) -> bool {
        self.failures.is_empty()
    }
}
