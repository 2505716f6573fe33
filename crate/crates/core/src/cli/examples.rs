//! Built-in configurations, usable by name wherever a config path is taken.

const MOMENTUM: &str = "\
# Translation-invariant problem: L and phi do not depend on q, so p itself
# is a fractional conservation law.
alpha = 0.75
t0 = 0
t1 = 1
n = 1
m = 1
lagrangian = u1^2/2
phi1 = u1
q1_start = 0
q1_end = 1
grid_n = 128

[symmetry momentum]
xi1 = 1
";

const ENERGY: &str = "\
# Autonomous classical problem, q'' = q with q(1) = sinh(1). Time
# translation gives conservation of H.
alpha = 1
n = 1
m = 1
lagrangian = (q1^2 + u1^2)/2
phi1 = u1
q1_start = 0
q1_end = 1.1752011936438014
grid_n = 128

[symmetry energy]
tau = 1
";

const CLASSICAL: &str = "\
# Classical quadratic problem with analytic extremal q = t, u = 1, p = -1.
alpha = 1
n = 1
m = 1
lagrangian = u1^2/2
phi1 = u1
q1_start = 0
q1_end = 1
grid_n = 128

[symmetry momentum]
xi1 = 1

[symmetry energy]
tau = 1
";

const COV: &str = "\
# Calculus-of-variations form (phi = u): the report adds the
# Euler-Lagrange residual and the Lagrangian form of the charge.
alpha = 0.5
n = 1
m = 1
lagrangian = (u1 - t)^2/2
phi1 = u1
q1_start = 0
q1_end = 1
grid_n = 128

[symmetry momentum]
xi1 = 1
";

pub const EXAMPLES: [(&str, &str); 4] = [
    ("example-momentum", MOMENTUM),
    ("example-energy", ENERGY),
    ("example-classical", CLASSICAL),
    ("example-cov", COV),
];

pub fn names() -> impl Iterator<Item = &'static str> {
    EXAMPLES.iter().map(|(n, _)| *n)
}

pub fn source(name: &str) -> Option<&'static str> {
    EXAMPLES.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}
