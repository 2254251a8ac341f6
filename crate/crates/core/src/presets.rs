//! Stored parameter sets. Each is ordinary config text.

pub struct Preset {
    pub name: &'static str,
    /// The regime the preset is meant to show.
    pub about: &'static str,
    pub text: &'static str,
}

macro_rules! particle_preset {
    ($body:literal) => {
        concat!(
            "mode = particles\n",
            "[model]\nlambda = 0.5\nchi = 20\ntau = 0.05\nsigma_x = 1e-4\nsigma_theta = 0.5\nsigma_c = 0.005\ngamma = 0.5\nmu = 1\n",
            $body
        )
    };
}

macro_rules! trail_model {
    ($body:literal) => {
        concat!(
            "[model]\nlambda = 1\nchi = 10\ntau = 1\nsigma_x = 0.1\nsigma_theta = 1\nsigma_c = 0.1\ngamma = 1\nmu = 1\n",
            $body
        )
    };
}

static CATALOG: &[Preset] = &[
    Preset {
        name: "trail_seed",
        about: "particles started along a pre-laid ridge, aligned with it (trail following)",
        text: particle_preset!(
            "[particles]
n = 1000
n_f = 8
dt = 0.01
steps = 5000
init = near_trail
init_x1 = 0.5
init_spread = 0.05
field = trail
field_x1 = 0.5
field_amplitude = 0.05
schedule = geometric
schedule_value = 8
"
        ),
    },
    Preset {
        name: "dirac_burst",
        about: "all particles released from one point with one heading (nest exit)",
        text: particle_preset!(
            "[particles]
n = 1000
n_f = 8
dt = 0.01
steps = 5000
init = dirac
init_x1 = 0.5
init_x2 = 0.5
init_theta = 0
field = zero
schedule = geometric
schedule_value = 8
"
        ),
    },
    Preset {
        name: "uniform_start",
        about: "uniform positions and headings, no initial field (spontaneous trail formation)",
        text: particle_preset!(
            "[particles]
n = 1000
n_f = 8
dt = 0.01
steps = 5000
init = uniform
field = zero
schedule = geometric
schedule_value = 8
"
        ),
    },
    Preset {
        name: "low_viscosity",
        about: "weak field diffusion and short look-ahead from a uniform start",
        text: concat!(
            "mode = particles\n",
            "[model]\nlambda = 0.5\nchi = 20\ntau = 0.02\nsigma_x = 1e-4\nsigma_theta = 0.5\nsigma_c = 0.001\ngamma = 0.5\nmu = 1\n",
            "[particles]
n = 1000
n_f = 8
dt = 0.01
steps = 5000
init = uniform
field = zero
schedule = geometric
schedule_value = 8
"
        ),
    },
    Preset {
        name: "fd_trail",
        about: "reduced system from the constant state plus a small field perturbation; \
                settles on one trail with headings ±π/2 at the ridge",
        text: concat!(
            "mode = fd\n",
            trail_model!(
                "[fd]
n_x = 128
n_theta = 64
dt = 0.01
t_max = 50
steady_tol = 1e-6
advection = centered
mass = 1
c_amplitude = 0.05
c_mode = 1
snapshot_every = 100
"
            )
        ),
    },
    Preset {
        name: "fd_low_viscosity",
        about: "reduced system with weak field diffusion and short look-ahead, seeded with \
                two bumps; they merge into one sharper trail",
        text: "mode = fd
[model]
lambda = 1
chi = 10
tau = 0.3
sigma_x = 0.1
sigma_theta = 1
sigma_c = 0.02
gamma = 1
mu = 1
[fd]
n_x = 128
n_theta = 64
dt = 0.01
t_max = 50
steady_tol = 1e-6
advection = upwind
mass = 1
c_amplitude = 0.05
c_mode = 2
snapshot_every = 100
",
    },
    Preset {
        name: "fd_heat",
        about: "no chemotaxis: the perturbation decays and the density stays uniform",
        text: "mode = fd
[model]
lambda = 1
chi = 0
tau = 1
sigma_x = 0.1
sigma_theta = 1
sigma_c = 0.1
gamma = 1
mu = 1
[fd]
n_x = 128
n_theta = 64
dt = 0.01
t_max = 50
steady_tol = 1e-6
mass = 1
c_amplitude = 0.05
snapshot_every = 100
",
    },
    Preset {
        name: "fd2_uturn",
        about: "two populations exchanging with a u-turn, state α attracted by a food smell",
        text: concat!(
            "mode = fd2state\n",
            trail_model!(
                "[fd]
n_x = 64
n_theta = 32
dt = 0.01
t_max = 50
advection = upwind
solver_tol = 1e-13
mass = 1
c_amplitude = 0.05
snapshot_every = 100
[two_state]
alpha_rate = 0.5
alpha_amplitude = 0.3
beta_rate = 0.5
transition = u_turn
production_aa = 1
production_ab = 0
production_ba = 0
production_bb = 1
smell_gamma = 1
smell_sigma = 0.05
smell_chi_alpha = 2
smell_chi_beta = 0
alpha_fraction = 0.5
"
            )
        ),
    },
    Preset {
        name: "fd2_symmetric",
        about: "two identical populations with a shared production; the states stay equal",
        text: concat!(
            "mode = fd2state\n",
            trail_model!(
                "[fd]
n_x = 64
n_theta = 32
dt = 0.01
t_max = 50
advection = upwind
solver_tol = 1e-13
mass = 1
c_amplitude = 0.05
snapshot_every = 100
[two_state]
alpha_rate = 0.5
alpha_amplitude = 0.2
beta_rate = 0.5
beta_amplitude = 0.2
transition = u_turn
production_aa = 0.5
production_ab = 0.5
production_ba = 0.5
production_bb = 0.5
smell_chi_alpha = 0
smell_chi_beta = 0
alpha_fraction = 0.5
"
            )
        ),
    },
    Preset {
        name: "azimuthal_flat",
        about: "no gradient, no curvature: uniform headings",
        text: "mode = azimuthal
model.chi = 2
model.tau = 1
",
    },
    Preset {
        name: "azimuthal_gradient",
        about: "pure gradient p = (1, 0): one preferred heading",
        text: "mode = azimuthal
model.chi = 2
model.tau = 1
azimuthal.p1 = 1
",
    },
    Preset {
        name: "azimuthal_ridge",
        about: "pure curvature A = diag(1, -1): two opposite preferred headings",
        text: "mode = azimuthal
model.chi = 2
model.tau = 1
azimuthal.a11 = 1
azimuthal.a22 = -1
",
    },
    Preset {
        name: "kernels_torus",
        about: "heat-kernel norm exponents with the 2π-periodic spatial torus",
        text: "mode = kernels
kernels.domain = circle_2pi
",
    },
    Preset {
        name: "kernels_line",
        about: "heat-kernel norm exponents with the spatial kernel on the plane",
        text: "mode = kernels
kernels.domain = line
",
    },
    Preset {
        name: "kernels_unit_torus",
        about: "heat-kernel norm exponents on the unit torus, where the fit window is not singular-dominated",
        text: "mode = kernels
kernels.domain = unit_torus
",
    },
];

pub fn catalog() -> &'static [Preset] {
    CATALOG
}

pub fn lookup(name: &str) -> Option<&'static Preset> {
    CATALOG.iter().find(|p| p.name == name)
}

pub fn names() -> Vec<&'static str> {
    CATALOG.iter().map(|p| p.name).collect()
}
