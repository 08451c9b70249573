"""Condition numbers, Betti-number bounds and their numerical verification on embedded manifolds."""
from .bounds import BoundReport, Formula, Verdict
from .condition import ConditionReport, c1_norm, delta, family_delta, family_kappa, kappa
from .errors import *  # noqa: F401,F403
from .geometry import ManifoldModel, SamplePoint, SampleSet, sample
from .homology import BettiVector, CubicalComplex, betti, region_betti, zero_set_betti
from .poly import Polynomial
from .smoothmap import BuiltinMap, BumpReplicationMap, MapSpec, PolynomialMap

__version__ = "0.1.0"
