//! Lifetime-versus-length campaigns and the exponential fit
//! `<t_L> = a exp(b L)` obtained by least squares on `log <t_L>`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::compile_step;
use crate::model::{realization_rng, sample_realization, FloquetDriveSpec};
use crate::observables::{first_passage, middle_qubit, Lifetime, LIFETIME_THRESHOLD};
use crate::parallel::Execution;
use crate::sweep::{InitialStates, RunningStats};

/// Default per-run cap on evolved periods.
pub const DEFAULT_HORIZON_CAP: u64 = 10_000_000;

/// Mean lifetime of the middle qubit at one chain length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingPoint {
    pub n_qubits: usize,
    pub mean_lifetime: f64,
    pub stderr: f64,
    pub n_samples: u64,
    /// Runs that reached the horizon cap without crossing. They enter the
    /// mean at the cap, so the mean is only a lower bound when this is nonzero.
    pub n_censored: u64,
    pub seed: u64,
}

impl ScalingPoint {
    /// Every run hit the cap, so the mean is the cap itself and carries no
    /// information about the length dependence.
    pub fn censored(&self) -> bool {
        self.n_samples > 0 && self.n_censored == self.n_samples
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogLinearFit {
    pub prefactor: f64,
    pub rate: f64,
    /// Coefficient of determination of the fit in log space.
    pub r_squared: f64,
    pub n_points: usize,
}

impl LogLinearFit {
    pub fn predict(&self, n_qubits: f64) -> f64 {
        self.prefactor * (self.rate * n_qubits).exp()
    }
}

/// Fit plus the per-length data it was computed from.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingFit {
    pub fit: LogLinearFit,
    pub points: Vec<ScalingPoint>,
}

impl ScalingFit {
    /// Fit the uncensored points.
    pub fn from_points(points: Vec<ScalingPoint>) -> Result<Self> {
        let pairs: Vec<(f64, f64)> = points
            .iter()
            .filter(|p| !p.censored())
            .map(|p| (p.n_qubits as f64, p.mean_lifetime))
            .collect();
        let fit = fit_log_least_squares(&pairs)?;
        Ok(ScalingFit { fit, points })
    }
}

/// Ordinary least squares of `log t` against `L`.
pub fn fit_log_least_squares(pairs: &[(f64, f64)]) -> Result<LogLinearFit> {
    for &(l, t) in pairs {
        if !(t.is_finite() && t > 0.0) {
            return Err(Error::invalid(format!(
                "lifetime at L = {l} must be finite and positive, got {t}"
            )));
        }
        if !l.is_finite() {
            return Err(Error::invalid(format!("non-finite chain length {l}")));
        }
    }
    let n = pairs.len() as f64;
    let mx = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let sxx: f64 = pairs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if pairs.len() < 2 || sxx == 0.0 {
        return Err(Error::invalid("fit needs at least two distinct chain lengths"));
    }
    let ys: Vec<f64> = pairs.iter().map(|p| p.1.ln()).collect();
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = pairs.iter().zip(&ys).map(|(p, y)| (p.0 - mx) * (y - my)).sum();
    let rate = sxy / sxx;
    let intercept = my - rate * mx;
    let ss_res: f64 = pairs
        .iter()
        .zip(&ys)
        .map(|(p, y)| (y - intercept - rate * p.0).powi(2))
        .sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let r_squared = if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else {
        1.0
    };
    Ok(LogLinearFit {
        prefactor: intercept.exp(),
        rate,
        r_squared,
        n_points: pairs.len(),
    })
}

/// Lifetime campaign settings. Each length `L` uses `base` with
/// `n_qubits = L` and tracks qubit `ceil(L/2)`.
#[derive(Debug, Clone)]
pub struct ScalingCampaign {
    pub lengths: Vec<usize>,
    pub base: FloquetDriveSpec,
    /// Must be `All` or `Random(N)` since `L` varies.
    pub initial: InitialStates,
    pub n_realizations: u64,
    pub seed: u64,
    pub horizon_cap: u64,
    pub work_budget: f64,
}

impl ScalingCampaign {
    fn validate(&self) -> Result<()> {
        if self.lengths.is_empty() {
            return Err(Error::config("no chain lengths given"));
        }
        if matches!(self.initial, InitialStates::Fixed(_)) {
            return Err(Error::config(
                "lifetime scaling needs initial_state \"all\" or \"random:N\"",
            ));
        }
        if self.n_realizations == 0 {
            return Err(Error::config("realizations must be >= 1"));
        }
        if self.horizon_cap < 2 {
            return Err(Error::config("horizon cap must be at least 2 periods"));
        }
        let mut work = 0.0;
        for &l in &self.lengths {
            let mut spec = self.base.clone();
            spec.n_qubits = l;
            spec.validate()
                .map_err(|e| Error::config(format!("L = {l}: {e}")))?;
            let states = match self.initial {
                InitialStates::All => (1u64 << l) as f64,
                InitialStates::Random(n) => n as f64,
                InitialStates::Fixed(_) => 1.0,
            };
            work += self.n_realizations as f64 * states * self.horizon_cap as f64 * (1u64 << l) as f64;
        }
        if work > self.work_budget {
            return Err(Error::Capacity {
                what: format!(
                    "scaling work ({} lengths x {} realizations x {} period cap, weighted by states and 2^L)",
                    self.lengths.len(),
                    self.n_realizations,
                    self.horizon_cap
                ),
                requested: work,
                limit: self.work_budget,
            });
        }
        Ok(())
    }
}

/// Mean lifetime per chain length. Every (length, realization, state) run
/// is independent; realizations use cell index = position in `lengths`.
pub fn lifetime_scaling_campaign(
    campaign: &ScalingCampaign,
    exec: Execution,
) -> Result<Vec<ScalingPoint>> {
    campaign.validate()?;
    let per_l = campaign.n_realizations as usize;
    let runs = exec.map(campaign.lengths.len() * per_l, |item| {
        let (li, r) = (item / per_l, (item % per_l) as u64);
        let l = campaign.lengths[li];
        let mut spec = campaign.base.clone();
        spec.n_qubits = l;
        let mut rng = realization_rng(campaign.seed, li as u64, r);
        let disorder = sample_realization(&spec.distribution, l, &mut rng);
        let states = campaign.initial.draw(l, &mut rng);
        let plan = compile_step(&spec, &disorder)?;
        let k = middle_qubit(l);
        states
            .iter()
            .map(|s| {
                first_passage(s, &plan, &[k], LIFETIME_THRESHOLD, campaign.horizon_cap)
                    .map(|v| v[0])
            })
            .collect::<Result<Vec<Lifetime>>>()
    });
    let mut runs = runs.into_iter();
    let mut points = Vec::with_capacity(campaign.lengths.len());
    for &l in &campaign.lengths {
        let mut stats = RunningStats::new();
        let mut censored = 0;
        for run in runs.by_ref().take(per_l) {
            for life in run? {
                match life {
                    Lifetime::Periods(p) => stats.push(p as f64),
                    Lifetime::Unbounded => {
                        censored += 1;
                        stats.push(campaign.horizon_cap as f64);
                    }
                }
            }
        }
        points.push(ScalingPoint {
            n_qubits: l,
            mean_lifetime: stats.mean(),
            stderr: stats.stderr(),
            n_samples: stats.count(),
            n_censored: censored,
            seed: campaign.seed,
        });
    }
    Ok(points)
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::model::{DisorderDistribution, ModelKind};

    #[test]
    fn two_points_give_unit_fit() {
        let fit = fit_log_least_squares(&[(3.0, 3f64.exp()), (4.0, 4f64.exp())]).unwrap();
        assert_abs_diff_eq!(fit.prefactor, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(fit.rate, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn planted_exponential_is_recovered() {
        let pairs: Vec<_> = (3..=13).map(|l| (l as f64, 1.3 * (2.2 * l as f64).exp())).collect();
        let fit = fit_log_least_squares(&pairs).unwrap();
        assert_abs_diff_eq!(fit.prefactor, 1.3, epsilon = 1e-9);
        assert_abs_diff_eq!(fit.rate, 2.2, epsilon = 1e-12);
        assert_abs_diff_eq!(fit.r_squared, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn constant_lifetimes_have_zero_rate() {
        let fit = fit_log_least_squares(&[(3.0, 50.0), (4.0, 50.0), (6.0, 50.0)]).unwrap();
        assert_abs_diff_eq!(fit.rate, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(fit.prefactor, 50.0, epsilon = 1e-12);
    }

    #[test]
    fn noisy_exponential_rate_within_five_percent() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pairs: Vec<_> = (0..50)
            .map(|i| {
                let l = 3.0 + 0.2 * i as f64;
                let noise = 1.0 + 0.05 * (2.0 * rng.random::<f64>() - 1.0);
                (l, 1.3 * (2.2 * l).exp() * noise)
            })
            .collect();
        let fit = fit_log_least_squares(&pairs).unwrap();
        assert!((fit.rate - 2.2).abs() < 0.05 * 2.2, "rate {}", fit.rate);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(fit_log_least_squares(&[(3.0, 1.0), (4.0, 0.0)]).is_err());
        assert!(fit_log_least_squares(&[(3.0, 1.0), (4.0, -2.0)]).is_err());
        assert!(fit_log_least_squares(&[(3.0, 1.0), (3.0, 2.0)]).is_err());
        assert!(fit_log_least_squares(&[(3.0, 1.0)]).is_err());
    }

    #[test]
    fn fully_censored_points_are_excluded() {
        let point = |l: usize, t: f64, c: u64| ScalingPoint {
            n_qubits: l,
            mean_lifetime: t,
            stderr: 0.0,
            n_samples: 10,
            n_censored: c,
            seed: 0,
        };
        let fit = ScalingFit::from_points(vec![
            point(3, 3f64.exp(), 0),
            point(4, 4f64.exp(), 0),
            point(5, 1.0, 10),
            point(6, 6f64.exp(), 3),
        ])
        .unwrap();
        assert_abs_diff_eq!(fit.fit.rate, 1.0, epsilon = 1e-12);
        assert_eq!(fit.fit.n_points, 3);
        assert_eq!(fit.points.len(), 4);
    }

    fn small_campaign(cap: u64) -> ScalingCampaign {
        ScalingCampaign {
            lengths: vec![2, 3],
            base: FloquetDriveSpec {
                n_qubits: 2,
                epsilon: 0.1,
                t1: 1.0,
                t2: 1.0,
                model: ModelKind::Ising,
                h2i_pulses: 0,
                distribution: DisorderDistribution {
                    j0: 5.0,
                    sigma_j: 3.0,
                    h0: 2e4,
                    sigma_h: 50.0,
                },
            },
            initial: InitialStates::Random(2),
            n_realizations: 6,
            seed: 5,
            horizon_cap: cap,
            work_budget: 1e12,
        }
    }

    #[test]
    fn campaign_is_deterministic_and_flags_cap() {
        let c = small_campaign(4);
        let a = lifetime_scaling_campaign(&c, Execution::Sequential).unwrap();
        let b = lifetime_scaling_campaign(&c, Execution::Workers(3)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a[0].n_samples, 12);
        for p in &a {
            assert!(p.mean_lifetime <= 4.0);
        }
        let long = lifetime_scaling_campaign(&small_campaign(1_000_000), Execution::Sequential).unwrap();
        assert!(long.iter().all(|p| !p.censored()));
        assert!(long.iter().all(|p| p.mean_lifetime > 0.0));
    }

    #[test]
    fn fixed_state_is_rejected() {
        let mut c = small_campaign(10);
        c.initial = InitialStates::Fixed("10".into());
        assert!(matches!(
            lifetime_scaling_campaign(&c, Execution::Sequential),
            Err(Error::Config(_))
        ));
        let mut c = small_campaign(10_000_000);
        c.work_budget = 10.0;
        assert!(matches!(
            lifetime_scaling_campaign(&c, Execution::Sequential),
            Err(Error::Capacity { .. })
        ));
    }
}
