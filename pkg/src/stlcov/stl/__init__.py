from .formula import (FALSE, TRUE, Always, And, Eventually, Formula, FormulaError,
                      Historically, IaStlSpec, Implies, Interval, Not, Once, Or, Pred,
                      Since, TrueF, Until, atoms_of, to_core, variables_of)
from .monitor import (MonitorError, Verdict, robustness, robustness_trace, satisfies,
                      verdict)
from .parser import SpecSyntaxError, load_spec, parse_formula, parse_spec

__all__ = [
    "FALSE", "TRUE", "Always", "And", "Eventually", "Formula", "FormulaError",
    "Historically", "IaStlSpec", "Implies", "Interval", "Not", "Once", "Or", "Pred",
    "Since", "TrueF", "Until", "atoms_of", "to_core", "variables_of",
    "MonitorError", "Verdict", "robustness", "robustness_trace", "satisfies", "verdict",
    "SpecSyntaxError", "load_spec", "parse_formula", "parse_spec",
]
