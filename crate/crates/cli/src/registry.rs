use std::fmt::Write;

/// Static description of one experiment kind.
#[derive(Debug, Clone, Copy)]
pub struct ExperimentInfo {
    pub name: &'static str,
    pub description: &'static str,
    /// The inequality or identity the rows test.
    pub checks: &'static str,
    pub needs_group: bool,
    pub required: &'static [&'static str],
    /// `(key, default)`; an empty default means the key is optional with no default.
    pub optional: &'static [(&'static str, &'static str)],
}

const FIT: [(&str, &str); 5] = [
    ("c", ""),
    ("d", ""),
    ("fit_radii", "0,1,2,3,4"),
    ("fit_samples", "2"),
    ("families", "spheres,balls,random-nonneg"),
];

macro_rules! with_fit {
    ($($kv:expr),* $(,)?) => {
        &[$($kv,)* FIT[0], FIT[1], FIT[2], FIT[3], FIT[4]]
    };
}

/// Sorted by name.
pub const REGISTRY: &[ExperimentInfo] = &[
    ExperimentInfo {
        name: "amplify",
        description: "rebuild a gap witness as a tensor power and compare both norms with the multiplicative prediction",
        checks: "||f^(x)n||_B(l^p) = ||f||^n on G0^n, for f and f*",
        needs_group: true,
        required: &[],
        optional: &[
            ("p", "4"),
            ("n", "2"),
            ("witness", ""),
            ("samples", "4"),
            ("ascent_steps", "30"),
            ("search_starts", "4"),
            ("tol", "1e-4"),
        ],
    },
    ExperimentInfo {
        name: "containment",
        description: "weighted l^q norm against the operator norm on B(l^q) through the sphere decomposition",
        checks: "||f||_B(l^q) <= K ||(1+l)^(D+1) f||_q",
        needs_group: true,
        required: &[],
        optional: with_fit![
            ("q", "2"),
            ("samples", "100"),
            ("radius", "3"),
            ("mode", "complex"),
            ("density", "0.5"),
        ],
    },
    ExperimentInfo {
        name: "derivation",
        description: "sandwich for the length derivation of a convolution operator, plus the Leibniz rule",
        checks: "||f l^k||_q <= ||delta^k f||_B(l^q) <= K ||f (1+l)^(k+s)||_q",
        needs_group: true,
        required: &[],
        optional: with_fit![
            ("q", "2"),
            ("k", "1"),
            ("s", "1"),
            ("samples", "20"),
            ("radius", "2"),
            ("mode", "complex"),
            ("density", "0.5"),
            ("leibniz_samples", "20"),
            ("leibniz_tol", "1e-10"),
        ],
    },
    ExperimentInfo {
        name: "duality",
        description: "operator norm on l^p against the norm of the involution on the dual exponent",
        checks: "||f||_B(l^p) = ||f*||_B(l^q)",
        needs_group: true,
        required: &["p"],
        optional: &[("samples", "50"), ("radius", "2"), ("mode", "complex"), ("density", "1"), ("tol", "1e-6")],
    },
    ExperimentInfo {
        name: "flow",
        description: "finite-difference consistency of the length-phase flow with the derivation",
        checks: "(a_t(f) - f)/t -> i delta(f) at rate O(t); ||a_t e_g - e_g|| <= t l(g)",
        needs_group: true,
        required: &["kernel"],
        optional: &[("t_values", "0.1,0.05,0.025"), ("radius", "4"), ("p", "2"), ("samples", "8"), ("scale", "1")],
    },
    ExperimentInfo {
        name: "folner",
        description: "lower bounds for a nonnegative kernel on an amenable group approach its l^1 norm",
        checks: "||f||_B(l^p) = ||f||_1 for f >= 0 on amenable groups",
        needs_group: true,
        required: &["kernel", "p"],
        optional: &[("threshold", "0.95"), ("scale", "1")],
    },
    ExperimentInfo {
        name: "growth",
        description: "ball-growth comparison between the polynomial fit and |B_n|^(1/q - 1/p)",
        checks: "|B_n|^(1/q) <= P(n) |B_n|^(1/p) forces polynomial growth",
        needs_group: true,
        required: &["p"],
        optional: &[("radii", "0,1,2,3,4,5,6,7,8")],
    },
    ExperimentInfo {
        name: "idempotent",
        description: "Newton promotion e <- 3e^2 - 2e^3 of an almost idempotent with l^1 residuals",
        checks: "||e_{n+1}^2 - e_{n+1}||_1 <= 10 ||e_n^2 - e_n||_1^2",
        needs_group: true,
        required: &["kernel"],
        optional: &[("tol", "1e-10"), ("max_iter", "6"), ("scale", "1")],
    },
    ExperimentInfo {
        name: "interpolation",
        description: "involutive norms at two exponents with the growth-rate interpolation factor",
        checks: "||f||_B(p',*) <= exp(lambda (1-alpha) m / q) ||f||_B(p,*)",
        needs_group: true,
        required: &[],
        optional: &[
            ("p", "2"),
            ("p_prime", "4"),
            ("samples", "100"),
            ("radius", "3"),
            ("mode", "complex"),
            ("density", "0.5"),
            ("growth_radius", ""),
        ],
    },
    ExperimentInfo {
        name: "oberlin",
        description: "search finite groups for functions whose involution changes the operator norm",
        checks: "||f*||_B(l^p) / ||f||_B(l^p) = 1 on abelian groups",
        needs_group: false,
        required: &[],
        optional: &[
            ("p", "4"),
            ("catalog", "sym:3;dihedral:4;q8;alt:4;dihedral:6;sym:4;cyclic:12;product:cyclic:5,cyclic:5"),
            ("samples", "8"),
            ("ascent_steps", "60"),
            ("search_starts", "4"),
        ],
    },
    ExperimentInfo {
        name: "powerseq",
        description: "growth of convolution powers in the weighted algebra against the operator norm",
        checks: "||f^n||_S(t,q) <= 2^(nt) ||f||_S(t,q) M^(n-1)",
        needs_group: true,
        required: &["kernel", "t"],
        optional: &[("q", "2"), ("n_max", "8"), ("k", ""), ("scale", "1")],
    },
    ExperimentInfo {
        name: "rd_scan",
        description: "sup of operator norm over l^q norm on balls, with a polynomial fit C (1+n)^D",
        checks: "||f||_B(l^q) / ||f||_q <= |B_n|^(1/p) on supp f in B_n",
        needs_group: true,
        required: &[],
        optional: &[("q", "2"), ("radii", "0,1,2,3,4,5,6"), ("families", "spheres,balls,random-nonneg"), ("samples", "2")],
    },
    ExperimentInfo {
        name: "rd_transfer",
        description: "transfer of a q-fit to a smaller exponent, plus the Mazur-map chain on random pairs",
        checks: "||f||_B(l^q') <= C^theta (1+n)^(theta D) ||f||_q'",
        needs_group: true,
        required: &[],
        optional: &[
            ("q", "2"),
            ("q_prime", "4/3"),
            ("radii", "0,1,2,3,4,5,6"),
            ("families", "spheres,balls,random-nonneg"),
            ("samples", "2"),
            ("transfer_samples", "200"),
            ("slack", "0.3"),
            ("mode", "nonneg"),
            ("density", "0.5"),
            ("mazur_pairs", "200"),
            ("mazur_radius", "4"),
        ],
    },
    ExperimentInfo {
        name: "subgroup",
        description: "operator norm of a function on a subgroup against its pushforward",
        checks: "||f||_B(l^p(H)) = ||i_* f||_B(l^p(G))",
        needs_group: true,
        required: &["p", "source", "embedding"],
        optional: &[("samples", "20"), ("radius", "2"), ("mode", "complex"), ("density", "1"), ("tol", "1e-6")],
    },
    ExperimentInfo {
        name: "submult",
        description: "submultiplicativity of the weighted l^q norm under convolution",
        checks: "||f1 * f2||_S(s,q) <= 2^s K ||f1||_S(s,q) ||f2||_S(s,q)",
        needs_group: true,
        required: &[],
        optional: with_fit![
            ("q", "2"),
            ("s", ""),
            ("samples", "100"),
            ("radius", "2"),
            ("mode", "complex"),
            ("density", "0.5"),
        ],
    },
    ExperimentInfo {
        name: "tensor",
        description: "operator norm of an elementary tensor on a product of two finite groups",
        checks: "||f1 (x) f2||_B(l^p) = ||f1||_B(l^p) ||f2||_B(l^p)",
        needs_group: true,
        required: &["p"],
        optional: &[("samples", "20"), ("radius", ""), ("mode", "nonneg"), ("density", "1"), ("tol", "1e-6")],
    },
];

pub fn lookup(name: &str) -> Option<&'static ExperimentInfo> {
    REGISTRY.iter().find(|e| e.name == name)
}

impl ExperimentInfo {
    pub fn accepts(&self, key: &str) -> bool {
        self.required.contains(&key) || self.optional.iter().any(|(k, _)| *k == key)
    }

    pub fn default_of(&self, key: &str) -> Option<&'static str> {
        self.optional.iter().find(|(k, _)| *k == key).map(|(_, v)| *v).filter(|v| !v.is_empty())
    }
}

/// The registry as printed by `lpconv list`.
pub fn listing() -> String {
    let mut out = String::new();
    for e in REGISTRY {
        let req = if e.required.is_empty() { "none".to_string() } else { e.required.join(", ") };
        let group = if e.needs_group { "" } else { " (group optional)" };
        writeln!(out, "{:<14} {}. checks: {}. requires: {req}{group}", e.name, e.description, e.checks).unwrap();
    }
    out
}
