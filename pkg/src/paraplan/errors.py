"""Exception types shared across the package."""

from __future__ import annotations


class ParaplanError(Exception):
    """Base class for all package errors."""


class InvalidInputError(ParaplanError):
    """An argument references an unknown id or is otherwise malformed."""


class InvalidStateError(ParaplanError):
    """An operation was called on a state that does not admit it."""


class ValidationError(ParaplanError):
    """A document failed schema validation.

    ``field`` holds the path of the offending field, e.g. ``vehicles[1].capacity``.
    """

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field
        self.detail = message


class ConstraintError(ParaplanError):
    """An action violates hard constraints; carries the violation list."""

    def __init__(self, violations):
        kinds = ", ".join(v.kind for v in violations)
        super().__init__(f"action violates hard constraints: {kinds}")
        self.violations = list(violations)


class NoFeasibleActionError(ParaplanError):
    """No vehicle can take the outstanding request without violating constraints.

    ``by_vehicle`` maps vehicle id to the violations its best insertion incurs.
    """

    def __init__(self, by_vehicle):
        super().__init__("no feasible assignment for the outstanding request")
        self.by_vehicle = dict(by_vehicle)


class FormulaSyntaxError(ParaplanError):
    """Formula text failed to parse; ``offset`` is the byte position."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset
        self.detail = message


class UnsupportedFormulaError(ParaplanError):
    """Quantification requested for a formula shape it is not defined for."""


class QueryValidationError(ParaplanError):
    """A dispatcher query has missing or unresolvable bindings."""

    def __init__(self, problems):
        super().__init__("; ".join(problems))
        self.problems = list(problems)


class TemplateError(ParaplanError):
    """A rendering template is missing a required slot."""


class SessionStateError(ParaplanError):
    """The session is not in a status that admits the requested operation."""
