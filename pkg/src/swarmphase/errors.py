"""Exception types shared across the package."""


class ScenarioViolation(ValueError):
    """A run broke a scenario-level contract (e.g. more than w concurrent stimuli)."""


class StructuralError(ValueError):
    """Malformed input structure (bad graph diff, non-adjacent move endpoints, ...)."""
