use std::collections::BTreeSet;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Assignment, Expr, Node, Symbol};

/// Seed of the numeric fallback in [`Expr::equal`].
pub const FALLBACK_SEED: u64 = 0x6b73_796d;
/// Number of agreeing sample points required by the fallback.
pub const FALLBACK_POINTS: usize = 12;
/// Sample points whose evaluation fails are redrawn, up to this many draws.
const MAX_DRAWS: usize = 48;
/// Relative tolerance of the fallback.
pub const FALLBACK_TOLERANCE: f64 = 1e-9;
/// Magnitude below which the fallback tolerance becomes absolute.
pub const FALLBACK_ABS_FLOOR: f64 = 1.0;

/// Outcome of an equality test, with the grade of the evidence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Equality {
    /// The difference canonicalizes to the literal zero.
    Symbolic,
    /// The difference is not canonically zero but vanishes at every sample point.
    Numeric,
    Unequal,
}

impl Equality {
    pub fn holds(self) -> bool {
        !matches!(self, Equality::Unequal)
    }

    pub fn is_symbolic(self) -> bool {
        matches!(self, Equality::Symbolic)
    }

    /// Weakest of two grades.
    pub fn and(self, other: Equality) -> Equality {
        use Equality::*;
        match (self, other) {
            (Unequal, _) | (_, Unequal) => Unequal,
            (Numeric, _) | (_, Numeric) => Numeric,
            _ => Symbolic,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Equality::Symbolic => "symbolic-equal",
            Equality::Numeric => "numeric-equal",
            Equality::Unequal => "unequal",
        }
    }
}

impl fmt::Display for Equality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Deterministic sample points, uniform in `[0.1, 1.1]` per symbol.
pub fn sample_points(symbols: &BTreeSet<Symbol>, count: usize, seed: u64) -> Vec<Assignment> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let mut a = Assignment::new();
            for s in symbols {
                a.set(s.clone(), rng.gen_range(0.1..1.1));
            }
            a
        })
        .collect()
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() < FALLBACK_TOLERANCE * FALLBACK_ABS_FLOOR.max(a.abs()).max(b.abs())
}

impl Expr {
    /// Decides `self == other`.
    ///
    /// The difference is canonicalized first; a literal zero is a symbolic
    /// proof, a non-zero constant a disproof. Otherwise both sides are
    /// evaluated at [`FALLBACK_POINTS`] seeded points and compared with
    /// tolerance `FALLBACK_TOLERANCE * max(1, |a|, |b|)`.
    pub fn equal(&self, other: &Expr) -> Equality {
        let d = self - other;
        match d.node() {
            Node::Num(q) if num_traits::Zero::is_zero(q) => return Equality::Symbolic,
            Node::Num(_) => return Equality::Unequal,
            _ => {}
        }
        let (a, b) = (self.canon(), other.canon());
        let mut symbols = a.free_symbols();
        symbols.extend(b.free_symbols());
        let mut agreeing = 0;
        for point in sample_points(&symbols, MAX_DRAWS, FALLBACK_SEED) {
            let (Ok(x), Ok(y)) = (a.eval(&point), b.eval(&point)) else { continue };
            if !close(x, y) {
                return Equality::Unequal;
            }
            agreeing += 1;
            if agreeing == FALLBACK_POINTS {
                return Equality::Numeric;
            }
        }
        Equality::Unequal
    }

    /// Grade of `self == 0`.
    pub fn zero_grade(&self) -> Equality {
        self.equal(&Expr::zero())
    }
}
