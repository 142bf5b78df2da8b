//! System parameters and the boundedness / blow-up hypotheses as predicates.
//!
//! Everything here is generic over [`Scalar`], so the predicates can be
//! evaluated in exact rational arithmetic as well as in floating point.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

/// Signal production/consumption term `h(u, v, w)` of the elliptic equation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SignalKind<T> {
    /// `h = γ w`.
    KellerSegel { gamma: T },
    /// `h = (1/|Ω|) ∫ (αu + βv)`, with `∫ w = 0` imposed.
    JaegerLuckhaus,
}

impl<T> SignalKind<T> {
    pub fn is_jaeger_luckhaus(&self) -> bool {
        matches!(self, SignalKind::JaegerLuckhaus)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Species {
    First,
    Second,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams<T> {
    pub d1: T,
    pub d2: T,
    pub d3: T,
    pub chi1: T,
    pub chi2: T,
    pub mu1: T,
    pub mu2: T,
    pub a1: T,
    pub a2: T,
    pub alpha: T,
    pub beta: T,
    pub kappa1: T,
    pub kappa2: T,
    pub lambda1: T,
    pub lambda2: T,
    /// Spatial dimension.
    pub n: usize,
    /// Radius of the ball `Ω = B_R(0)`.
    pub radius: T,
    pub signal: SignalKind<T>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("parameter `{0}` must be strictly positive")]
    NonPositive(&'static str),
    #[error("exponent `{0}` must be strictly greater than 1")]
    ExponentNotAboveOne(&'static str),
    #[error("dimension n = {0} is not supported (need n >= 2)")]
    Dimension(usize),
}

/// Coefficients of one species seen from its own equation.
#[derive(Clone, Copy, Debug)]
pub struct SpeciesCoefficients<T> {
    pub diffusion: T,
    pub chi: T,
    pub mu: T,
    /// Competition strength exerted by the other species.
    pub competition: T,
    /// Self-limitation exponent (`κ`).
    pub kappa: T,
    /// Competition exponent (`λ`).
    pub lambda: T,
    /// Signal production rate of this species.
    pub own_production: T,
    /// Signal production rate of the other species.
    pub other_production: T,
}

impl<T: Scalar> ModelParams<T> {
    pub fn validate(&self) -> Result<(), ModelError> {
        let positive = [
            ("d1", self.d1),
            ("d2", self.d2),
            ("d3", self.d3),
            ("chi1", self.chi1),
            ("chi2", self.chi2),
            ("mu1", self.mu1),
            ("mu2", self.mu2),
            ("a1", self.a1),
            ("a2", self.a2),
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("radius", self.radius),
        ];
        for (name, value) in positive {
            if !(value > T::zero()) {
                return Err(ModelError::NonPositive(name));
            }
        }
        if let SignalKind::KellerSegel { gamma } = self.signal {
            if !(gamma > T::zero()) {
                return Err(ModelError::NonPositive("gamma"));
            }
        }
        let exponents = [
            ("kappa1", self.kappa1),
            ("kappa2", self.kappa2),
            ("lambda1", self.lambda1),
            ("lambda2", self.lambda2),
        ];
        for (name, value) in exponents {
            if !(value > T::one()) {
                return Err(ModelError::ExponentNotAboveOne(name));
            }
        }
        if self.n < 2 {
            return Err(ModelError::Dimension(self.n));
        }
        Ok(())
    }

    pub fn species(&self, species: Species) -> SpeciesCoefficients<T> {
        match species {
            Species::First => SpeciesCoefficients {
                diffusion: self.d1,
                chi: self.chi1,
                mu: self.mu1,
                competition: self.a1,
                kappa: self.kappa1,
                lambda: self.lambda1,
                own_production: self.alpha,
                other_production: self.beta,
            },
            Species::Second => SpeciesCoefficients {
                diffusion: self.d2,
                chi: self.chi2,
                mu: self.mu2,
                competition: self.a2,
                kappa: self.kappa2,
                lambda: self.lambda2,
                own_production: self.beta,
                other_production: self.alpha,
            },
        }
    }

    fn max_exponent(&self) -> T {
        [self.kappa2, self.lambda1, self.lambda2]
            .into_iter()
            .fold(self.kappa1, |m, x| if x > m { x } else { m })
    }
}

/// Upper bound on `χ` below which the boundedness theorem applies.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum ChiThreshold<T> {
    /// Every `χ > 0` qualifies.
    Unbounded,
    /// `χ` must lie strictly below this value.
    Below(T),
    /// The exponent pair is outside the theorem's case table (`κ < 2` or `λ < 2`).
    NotCovered,
}

impl<T: Scalar> ChiThreshold<T> {
    pub fn admits(&self, chi: T) -> bool {
        match *self {
            ChiThreshold::Unbounded => chi > T::zero(),
            ChiThreshold::Below(bound) => chi > T::zero() && chi < bound,
            ChiThreshold::NotCovered => false,
        }
    }

    pub fn value(&self) -> Option<T> {
        match *self {
            ChiThreshold::Below(bound) => Some(bound),
            _ => None,
        }
    }
}

/// `n / (n - 2)`, or `None` for the pole at `n = 2` (no constraint).
fn boundedness_factor<T: Scalar>(n: usize) -> Option<T> {
    (n > 2).then(|| T::of_usize(n) / T::of_usize(n - 2))
}

/// Bound on `χ` for one species from the four-case boundedness table.
pub fn chi_threshold_bounded<T: Scalar>(p: &ModelParams<T>, species: Species) -> ChiThreshold<T> {
    let s = p.species(species);
    let two = T::of_usize(2);
    if s.kappa < two || s.lambda < two {
        return ChiThreshold::NotCovered;
    }
    let self_limited = p.d3 * s.mu / s.own_production;
    let competition_limited = s.competition * p.d3 * s.mu / s.other_production;
    let base = match (s.kappa == two, s.lambda == two) {
        (false, false) => return ChiThreshold::Unbounded,
        (true, false) => self_limited,
        (false, true) => competition_limited,
        (true, true) => {
            if self_limited < competition_limited {
                self_limited
            } else {
                competition_limited
            }
        }
    };
    match boundedness_factor::<T>(p.n) {
        Some(factor) => ChiThreshold::Below(base * factor),
        None => ChiThreshold::Unbounded,
    }
}

/// An `L^p` exponent `p > n/2` for which the a-priori estimate closes.
///
/// The admissible set is an interval in `p`; this returns its midpoint when it is
/// bounded, `n/2 + 1` when it is not, and `None` when it is empty.
pub fn select_lp_exponent<T: Scalar>(p: &ModelParams<T>, species: Species) -> Option<T> {
    let s = p.species(species);
    let one = T::one();
    let two = T::of_usize(2);
    if s.kappa < two || s.lambda < two {
        return None;
    }
    // Constraints are linear in q = (p - 1)/p, which increases with p.
    let mut upper: Option<T> = None;
    let mut tighten = |bound: T| {
        upper = Some(match upper {
            Some(u) if u < bound => u,
            _ => bound,
        });
    };
    if s.kappa == two {
        tighten(s.mu * p.d3 / (s.own_production * s.chi));
    }
    if s.lambda == two {
        tighten(s.competition * s.mu * p.d3 / (s.other_production * s.chi));
    }
    let half_n = T::of_usize(p.n) / two;
    let q_lower = T::of_usize(p.n - 2) / T::of_usize(p.n);
    match upper {
        None => Some(half_n + one),
        Some(q_upper) if !(q_upper < one) => Some(half_n + one),
        Some(q_upper) if q_upper > q_lower => {
            let p_upper = one / (one - q_upper);
            Some((half_n + p_upper) / two)
        }
        Some(_) => None,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    BoundedByThm31,
    KSBlowupEligible,
    JLBlowupEligible,
    Unclassified,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Condition<T> {
    pub name: String,
    pub satisfied: bool,
    /// Threshold the condition compares against; `None` when there is no finite one.
    pub threshold: Option<T>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegimePrediction<T> {
    pub verdict: Verdict,
    pub details: Vec<Condition<T>>,
}

impl<T> RegimePrediction<T> {
    pub fn condition(&self, name: &str) -> Option<&Condition<T>> {
        self.details.iter().find(|c| c.name == name)
    }

    fn holds(&self, name: &str) -> bool {
        self.condition(name).is_some_and(|c| c.satisfied)
    }
}

/// Exponent bound for the Keller–Segel blow-up theorem.
pub fn ks_exponent_bound<T: Scalar>(n: usize) -> T {
    if n <= 4 {
        T::ratio(7, 6)
    } else {
        T::one() + T::one() / (T::of_usize(2) * T::of_usize(n - 1))
    }
}

/// Lower bound on `χ_1` in the Jäger–Luckhaus blow-up theorem (requires `n >= 5`).
fn jl_chi_bound<T: Scalar>(p: &ModelParams<T>, s: &SpeciesCoefficients<T>) -> T {
    let factor = T::of_usize(p.n) / T::of_usize(p.n - 4);
    let competition = s.competition * p.d3 * s.mu / s.other_production;
    let self_term = p.d3 * s.mu / s.own_production;
    let base = if s.kappa == T::of_usize(2) && self_term > competition {
        self_term
    } else {
        competition
    };
    base * factor
}

/// Evaluates every hypothesis of the three theorems and reports which regime applies.
pub fn classify_regime<T: Scalar>(p: &ModelParams<T>) -> RegimePrediction<T> {
    let mut details = Vec::new();
    let mut push = |name: &str, satisfied: bool, threshold: Option<T>| {
        details.push(Condition { name: name.to_string(), satisfied, threshold });
    };

    for (name, species, chi) in [
        ("bdd.chi1", Species::First, p.chi1),
        ("bdd.chi2", Species::Second, p.chi2),
    ] {
        let threshold = chi_threshold_bounded(p, species);
        push(name, threshold.admits(chi), threshold.value());
    }

    let is_ks = !p.signal.is_jaeger_luckhaus();
    push("ks.signal", is_ks, None);
    push("ks.dimension", p.n >= 3, Some(T::of_usize(3)));
    let ks_bound = ks_exponent_bound::<T>(p.n);
    push("ks.exponents", p.max_exponent() < ks_bound, Some(ks_bound));

    let two = T::of_usize(2);
    let one = T::one();
    let n_ok = p.n >= 5;
    push("jl.signal", !is_ks, None);
    push("jl.dimension", n_ok, Some(T::of_usize(5)));
    push("jl.lambda", p.lambda1 == two && p.lambda2 == two, Some(two));
    let kappa_ok = [p.kappa1, p.kappa2].iter().all(|&k| k > one && !(k > two));
    push("jl.kappa", kappa_ok, Some(two));

    let first = p.species(Species::First);
    let second = p.species(Species::Second);
    // chi2 > a2 d3 mu2 / alpha in the main statement, and the mirrored pair
    // with the roles of the species exchanged.
    let cross2 = second.competition * p.d3 * second.mu / second.other_production;
    let cross1 = first.competition * p.d3 * first.mu / first.other_production;
    if n_ok {
        let main1 = jl_chi_bound(p, &first);
        push("jl.chi1", p.chi1 > main1, Some(main1));
        push("jl.chi2", p.chi2 > cross2, Some(cross2));
        let swapped2 = jl_chi_bound(p, &second);
        push("jl.swapped.chi1", p.chi1 > cross1, Some(cross1));
        push("jl.swapped.chi2", p.chi2 > swapped2, Some(swapped2));
    } else {
        for name in ["jl.chi1", "jl.chi2", "jl.swapped.chi1", "jl.swapped.chi2"] {
            push(name, false, None);
        }
    }
    let mu1_bound = p.beta * p.chi1 / (p.a1 * p.d3);
    let mu2_bound = p.alpha * p.chi2 / (p.a2 * p.d3);
    push("jl.mu1", p.mu1 < mu1_bound, Some(mu1_bound));
    push("jl.mu2", p.mu2 < mu2_bound, Some(mu2_bound));

    let mut prediction = RegimePrediction { verdict: Verdict::Unclassified, details };
    let all = |names: &[&str]| names.iter().all(|n| prediction.holds(n));
    let verdict = if all(&["bdd.chi1", "bdd.chi2"]) {
        Verdict::BoundedByThm31
    } else if all(&["ks.signal", "ks.dimension", "ks.exponents"]) {
        Verdict::KSBlowupEligible
    } else if all(&["jl.signal", "jl.dimension", "jl.lambda", "jl.kappa", "jl.mu1", "jl.mu2"])
        && (all(&["jl.chi1", "jl.chi2"]) || all(&["jl.swapped.chi1", "jl.swapped.chi2"]))
    {
        Verdict::JLBlowupEligible
    } else {
        Verdict::Unclassified
    };
    prediction.verdict = verdict;
    prediction
}

/// `0 < μ_1 < βχ_1/(a_1 d_3)` and `0 < μ_2 < αχ_2/(a_2 d_3)`: the hypothesis
/// under which nonincreasing radial profiles stay nonincreasing.
pub fn concavity_preserved<T: Scalar>(p: &ModelParams<T>) -> bool {
    p.mu1 < p.beta * p.chi1 / (p.a1 * p.d3) && p.mu2 < p.alpha * p.chi2 / (p.a2 * p.d3)
}

impl ModelParams<f64> {
    /// All rates and coefficients one, quadratic exponents, Keller–Segel signal with `γ = 1`.
    pub fn unit(n: usize) -> Self {
        Self {
            d1: 1.0,
            d2: 1.0,
            d3: 1.0,
            chi1: 1.0,
            chi2: 1.0,
            mu1: 1.0,
            mu2: 1.0,
            a1: 1.0,
            a2: 1.0,
            alpha: 1.0,
            beta: 1.0,
            kappa1: 2.0,
            kappa2: 2.0,
            lambda1: 2.0,
            lambda2: 2.0,
            n,
            radius: 1.0,
            signal: SignalKind::KellerSegel { gamma: 1.0 },
        }
    }
}
