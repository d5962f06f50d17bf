//! Asymptotic growth descriptors for rate sequences.
//!
//! Every builtin family has a closed-form tail, so questions like "does
//! `sum 1/(b+d)` diverge" are answered from these descriptors instead of
//! from partial sums.

const EXP_EPS: f64 = 1e-12;

/// Leading-order behaviour of a non-negative sequence `f(i)` as `i -> inf`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Growth {
    /// Eventually identically zero.
    Zero,
    /// Decays like `ratio^i` with `ratio < 1`.
    Geometric { ratio: f64 },
    /// Behaves like `coef * i^exp * (ln i)^log_exp`, `coef > 0`.
    Poly { coef: f64, exp: f64, log_exp: f64 },
}

impl Growth {
    pub fn constant(c: f64) -> Self {
        if c == 0.0 {
            Growth::Zero
        } else {
            Growth::Poly {
                coef: c,
                exp: 0.0,
                log_exp: 0.0,
            }
        }
    }

    fn rank(&self) -> (u8, f64, f64) {
        match *self {
            Growth::Zero => (0, 0.0, 0.0),
            Growth::Geometric { ratio } => (1, ratio, 0.0),
            Growth::Poly { exp, log_exp, .. } => (2, exp, log_exp),
        }
    }

    fn same_order(&self, other: &Growth) -> bool {
        let (a0, a1, a2) = self.rank();
        let (b0, b1, b2) = other.rank();
        a0 == b0 && (a1 - b1).abs() < EXP_EPS && (a2 - b2).abs() < EXP_EPS
    }

    fn dominates(&self, other: &Growth) -> bool {
        let (a0, a1, a2) = self.rank();
        let (b0, b1, b2) = other.rank();
        if a0 != b0 {
            return a0 > b0;
        }
        if (a1 - b1).abs() >= EXP_EPS {
            return a1 > b1;
        }
        a2 > b2 + EXP_EPS
    }

    /// Growth of `f + g`.
    pub fn plus(self, other: Growth) -> Growth {
        if self.same_order(&other) {
            match (self, other) {
                (Growth::Poly { coef, exp, log_exp }, Growth::Poly { coef: c2, .. }) => Growth::Poly {
                    coef: coef + c2,
                    exp,
                    log_exp,
                },
                _ => self,
            }
        } else if self.dominates(&other) {
            self
        } else {
            other
        }
    }

    /// Growth of `f / g`. `None` when `g` decays to zero faster than any
    /// polynomial (the quotient is then not described by this algebra).
    pub fn ratio(self, other: Growth) -> Option<Growth> {
        match (self, other) {
            (_, Growth::Zero) | (_, Growth::Geometric { .. }) => None,
            (Growth::Zero, _) => Some(Growth::Zero),
            (g @ Growth::Geometric { .. }, Growth::Poly { .. }) => Some(g),
            (
                Growth::Poly { coef, exp, log_exp },
                Growth::Poly {
                    coef: c2,
                    exp: e2,
                    log_exp: q2,
                },
            ) => Some(Growth::Poly {
                coef: coef / c2,
                exp: exp - e2,
                log_exp: log_exp - q2,
            }),
        }
    }

    pub fn square(self) -> Growth {
        match self {
            Growth::Zero => Growth::Zero,
            Growth::Geometric { ratio } => Growth::Geometric { ratio: ratio * ratio },
            Growth::Poly { coef, exp, log_exp } => Growth::Poly {
                coef: coef * coef,
                exp: 2.0 * exp,
                log_exp: 2.0 * log_exp,
            },
        }
    }

    /// Whether `sum_i f(i)` is finite.
    pub fn summable(&self) -> bool {
        match *self {
            Growth::Zero | Growth::Geometric { .. } => true,
            Growth::Poly { exp, log_exp, .. } => {
                if (exp + 1.0).abs() < EXP_EPS {
                    log_exp < -1.0 - EXP_EPS
                } else {
                    exp < -1.0
                }
            }
        }
    }

    /// `lim f(i)`; `None` means the sequence tends to infinity.
    pub fn limit(&self) -> Option<f64> {
        match *self {
            Growth::Zero | Growth::Geometric { .. } => Some(0.0),
            Growth::Poly { coef, exp, log_exp } => {
                if exp.abs() < EXP_EPS {
                    if log_exp.abs() < EXP_EPS {
                        Some(coef)
                    } else if log_exp < 0.0 {
                        Some(0.0)
                    } else {
                        None
                    }
                } else if exp < 0.0 {
                    Some(0.0)
                } else {
                    None
                }
            }
        }
    }

    pub fn tends_to_infinity(&self) -> bool {
        self.limit().is_none()
    }

    /// Polynomial exponent, treating decaying sequences as `-inf`.
    pub fn exponent(&self) -> f64 {
        match *self {
            Growth::Zero | Growth::Geometric { .. } => f64::NEG_INFINITY,
            Growth::Poly { exp, .. } => exp,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly(coef: f64, exp: f64, log_exp: f64) -> Growth {
        Growth::Poly { coef, exp, log_exp }
    }

    #[test]
    fn harmonic_boundary() {
        assert!(!poly(1.0, -1.0, 0.0).summable());
        assert!(!poly(1.0, -1.0, -1.0).summable());
        assert!(poly(1.0, -1.0, -2.0).summable());
        assert!(poly(1.0, -1.2, 0.0).summable());
        assert!(!poly(1.0, -0.8, 0.0).summable());
    }

    #[test]
    fn addition_keeps_dominant_term() {
        let g = poly(1.0, 1.0, 0.0).plus(Growth::constant(1.5));
        assert_eq!(g, poly(1.0, 1.0, 0.0));
        let g = Growth::constant(2.0).plus(Growth::constant(1.0));
        assert_eq!(g, Growth::constant(3.0));
        let g = Growth::Zero.plus(Growth::Geometric { ratio: 0.5 });
        assert_eq!(g, Growth::Geometric { ratio: 0.5 });
    }

    #[test]
    fn quotient_and_limits() {
        let r = Growth::Geometric { ratio: 0.5 }.ratio(poly(1.0, 1.0, 0.0)).unwrap();
        assert!(r.summable());
        assert_eq!(Growth::constant(1.0).ratio(Growth::Zero), None);
        assert_eq!(poly(2.0, 0.0, 1.0).limit(), None);
        assert_eq!(Growth::constant(1.5).limit(), Some(1.5));
        assert_eq!(poly(1.0, -0.5, 0.0).limit(), Some(0.0));
    }
}
