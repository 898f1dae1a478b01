"""Exception types raised across the package."""


class FastRatesError(Exception):
    """Base class for all package errors."""


class UndefinedExpectation(FastRatesError):
    """An integrand takes NaN or -inf values, so its expectation is undefined."""


class AllInfiniteRisk(FastRatesError):
    """Every predictor has infinite risk under some distribution."""


class AllInfiniteEmpiricalRisk(FastRatesError):
    """Every predictor has infinite empirical risk on a sample."""


class ConditionalNotInFamily(FastRatesError):
    """A conditional law of a joint distribution is not in the base family."""


class InfiniteMoment(FastRatesError):
    """An exponential moment diverges."""


class UnsupportedKind(FastRatesError):
    """The requested check is not available for this problem."""


class ShapeViolation(FastRatesError):
    """A rate function fails its monotonicity constraints."""


class GammaShapeViolation(FastRatesError):
    """A pairwise bound function fails normalisation or concavity."""


class SupportViolation(FastRatesError):
    """A random variable has support outside the declared range."""


class SandwichViolation(FastRatesError, AssertionError):
    """A moment inequality that must hold was violated numerically."""


class InfeasibleInstance(FastRatesError):
    """A moment problem has no feasible distribution."""


class NoFeasibleAtomTriple(FastRatesError):
    """No distribution on the grid meets the moment constraints."""


class CertificateInvalid(FastRatesError):
    """A dual certificate fails its pointwise constraint."""


class PreconditionViolated(FastRatesError):
    """Inputs fall outside the range where a bound formula applies."""


class EmbeddingMissing(FastRatesError):
    """An operation needs a vector embedding of the predictors."""


class SubstitutionOutsideDecisionSet(FastRatesError):
    """A substitution returned a decision the learner may not play."""


class ConfigError(FastRatesError):
    """A command-line configuration is malformed."""
