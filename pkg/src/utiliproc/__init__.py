"""Resource-process calculus with utility-driven choice.

Load a model with ``modelfile.parse_model``; its ``semantics()`` enumerates
transitions, ``equivalence`` decides bounded bisimilarity, ``logic`` checks
formulas and ``trust`` computes trust domains.
"""
from ._kernels import BACKEND
from .equivalence import ContextUniverse, EquivalenceVerdict, bisim, bisim_contexts, check_accordance, check_respects_bisim, local_equiv
from .kernel import Action, Algebra, Context, HomomorphismError, ModelError, Resource, UsageError, UtilitySpec
from .logic import CheckConfig, Valuation, check_valuation, satisfies, security_level_query
from .model import CostSpec, Diagnostic, Model
from .modelfile import load_model, parse_context, parse_formula, parse_model, parse_term, print_model
from .semantics import Semantics, Transition
from .trust import TrustDomainQuery, iso_cost_frontier, trace_cost, trust_domain
from .universes import build_universe
from .validate import validate_model

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "Action", "Algebra", "CheckConfig", "Context", "ContextUniverse", "CostSpec", "Diagnostic",
    "EquivalenceVerdict", "HomomorphismError", "Model", "ModelError", "Resource", "Semantics", "Transition",
    "TrustDomainQuery", "UsageError", "UtilitySpec", "Valuation", "bisim", "bisim_contexts", "build_universe",
    "check_accordance", "check_respects_bisim", "check_valuation", "iso_cost_frontier", "load_model",
    "local_equiv", "parse_context", "parse_formula", "parse_model", "parse_term", "print_model", "satisfies",
    "security_level_query", "trace_cost", "trust_domain", "validate_model",
]
