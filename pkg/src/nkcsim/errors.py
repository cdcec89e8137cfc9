from __future__ import annotations


class ModelError(ValueError):
    """Base class for invalid model inputs."""


class InvalidInputError(ModelError):
    pass


class UnsupportedRuleError(ModelError):
    pass


class InvalidSeedError(ModelError):
    pass


class RankDeficiencyError(ModelError):
    pass


class ConfigError(ModelError):
    """Experiment file problem.

    ``code`` is one of ``unknown-key``, ``type-mismatch``, ``missing-field``,
    ``constraint-violation`` or ``syntax``.
    """

    def __init__(self, code: str, message: str, key: str | None = None, line: int | None = None):
        self.code = code
        self.key = key
        self.line = line
        where = ""
        if key is not None:
            where += f" [key {key!r}"
            where += f", line {line}]" if line is not None else "]"
        super().__init__(f"{code}: {message}{where}")
