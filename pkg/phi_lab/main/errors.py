#!/usr/bin/env python3

"""
Exception hierarchy for phi_lab.

Input errors mean the user's data is unusable (exit code 1).
Numerical errors mean a required quantity could not be computed (exit code 2).
"""

class LabError(Exception):
    """
    Base class for every error raised by phi_lab.
    """
    exit_code = 2

class InputError(LabError):
    """
    Problem data, expressions or config are unusable.
    """
    exit_code = 1

class NumericalError(LabError):
    """
    A required numerical quantity failed to converge or is undefined.
    """
    exit_code = 2

class ExpressionError(InputError):
    """
    Expression source is invalid (unknown identifier, overlapping pieces, ...).
    """

class ExpressionSyntaxError(ExpressionError):
    """
    Expression source could not be parsed.
    """

    def __init__(self, message:str, source:str, position:int):
        """
        Initializes the ExpressionSyntaxError.

        :param message: Description of the problem
        :type message: str
        :param source: Source text that failed to parse
        :type source: str
        :param position: 0-based character position of the failure
        :type position: int
        """
        self.source = source
        self.position = position
        pointer = " " * position + "^"
        super().__init__(f"{message} at position {position}\n  {source}\n  {pointer}")

class DomainError(InputError):
    """
    Expression evaluated outside its domain or to a non-finite value.
    """

class HomeoError(InputError):
    """
    A homeomorphism failed its monotonicity or origin checks.
    """

class InversionError(HomeoError):
    """
    No bracket was found while inverting a homeomorphism.
    """

class InstanceError(InputError):
    """
    A problem instance violates one of its invariants.
    """

class ConfigError(InputError):
    """
    A config file is unreadable or incomplete.
    """

class QuadratureError(NumericalError):
    """
    An integrand produced a non-finite value at an interior node.
    """

class OperatorError(NumericalError):
    """
    The solution operator could not be evaluated.
    """
