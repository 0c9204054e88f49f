#![allow(dead_code)]

use bayrn_core::bayrn::{BayrnConfig, Experiment, TargetDomain};
use bayrn_core::domains::{BoxDim, DistrEntry, DomainParamSpec, DomainSpace, Family, Moment, SearchBox};
use bayrn_core::furuta::FurutaSettings;
use bayrn_core::policy::EnergyBalancePolicy;
use bayrn_core::polopt::{Algorithm, PolOptConfig};
use bayrn_core::task::{FurutaTask, Task};

pub const NOMINAL: [(&str, f64); 9] = [
    ("m_p", 0.024),
    ("m_r", 0.095),
    ("l_p", 0.129),
    ("l_r", 0.085),
    ("d_p", 5e-6),
    ("d_r", 5e-4),
    ("k_m", 0.042),
    ("R_m", 8.4),
    ("g", 9.81),
];

pub const THETA_INIT: [f64; 6] = [6.0, 2.8, 3.16, -4.78, 1.94, -4.19];

pub fn furuta_task(jitter: f64) -> Task {
    Task::Furuta(FurutaTask {
        settings: FurutaSettings { dt: 0.01, horizon: 600, a_max: 8.0, q: [0.2, 1.0, 0.02, 0.005], r: 3e-3, init_jitter_std: jitter },
        policy: EnergyBalancePolicy {
            a_max: 8.0,
            switch_angle: 0.35,
            energy_omega2: 3.0 * 9.81 / (2.0 * 0.129),
            centering: [2.0, 0.2],
            balance_scale: [1.0, 10.0, 1.0, 1.0],
        },
    })
}

/// Mass means searched over `[lo, hi] × nominal`.
pub fn mass_space(lo: f64, hi: f64) -> DomainSpace {
    DomainSpace {
        specs: NOMINAL.iter().map(|(k, v)| DomainParamSpec::with_default_clamp(k, *v)).collect(),
        template: vec![
            DistrEntry { param: "m_p".into(), family: Family::Normal, mean: 0.024, variance: 0.0 },
            DistrEntry { param: "m_r".into(), family: Family::Normal, mean: 0.095, variance: 0.0 },
        ],
        search_box: SearchBox::new(vec![
            BoxDim { param: "m_p".into(), moment: Moment::Mean, min: lo * 0.024, max: hi * 0.024 },
            BoxDim { param: "m_r".into(), moment: Moment::Mean, min: lo * 0.095, max: hi * 0.095 },
        ]),
    }
}

pub fn experiment(lo: f64, hi: f64, jitter: f64) -> Experiment {
    Experiment { task: furuta_task(jitter), space: mass_space(lo, hi), theta_init: THETA_INIT.to_vec() }
}

pub fn target(m_p: f64, m_r: f64) -> TargetDomain {
    let mut params = mass_space(1.0, 1.0).nominal();
    params.set("m_p", m_p);
    params.set("m_r", m_r);
    TargetDomain { params }
}

pub fn cem(n_pop: usize, n_iter: usize) -> PolOptConfig {
    PolOptConfig {
        algorithm: Algorithm::Cem,
        n_pop,
        n_is: 1,
        n_iter,
        sigma_init: 1.0,
        rollouts_per_candidate: 1,
        gamma: 1.0,
        elite_frac: 0.2,
        std_floor: 0.01,
        elitism: true,
        retrain_below: None,
    }
}

pub fn bayrn_config(n_init: usize, n_iter_max: usize, j_succ: f64, polopt: PolOptConfig) -> BayrnConfig {
    BayrnConfig {
        n_init,
        n_iter_max,
        n_tau: 2,
        j_succ,
        stop_on_success: true,
        polopt,
        common_train_seed: false,
        gp: Default::default(),
        acquisition: Default::default(),
    }
}
