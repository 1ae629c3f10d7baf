"""Exception hierarchy.

Every error carries a coarse ``kind`` used by the CLI to pick an exit code:
``config`` (2), ``data`` (3) or ``algorithm`` (4).
"""

from __future__ import annotations


class JointCausalError(Exception):
    kind = "algorithm"


class ConfigError(JointCausalError):
    kind = "config"


class DataError(JointCausalError):
    kind = "data"


class MissingColumn(DataError):
    def __init__(self, name: str):
        super().__init__(f"missing column {name!r}")
        self.name = name


class NonFiniteValue(DataError):
    def __init__(self, row: int, col: str):
        super().__init__(f"non-finite value at row {row}, column {col!r}")
        self.row = row
        self.col = col


class LabelParse(DataError):
    def __init__(self, row: int, value: str = ""):
        super().__init__(f"cannot parse behaviour label {value!r} at row {row}")
        self.row = row


class ShapeMismatch(DataError):
    def __init__(self, expected, got):
        super().__init__(f"shape mismatch: expected {expected}, got {got}")
        self.expected = expected
        self.got = got


class LengthMismatch(DataError):
    def __init__(self, a: int, b: int):
        super().__init__(f"length mismatch: {a} != {b}")


class SingleClassDataset(DataError):
    pass


class InsufficientSamples(JointCausalError):
    pass


class SingularConditioning(JointCausalError):
    pass


class EmptyConditioningState(JointCausalError):
    def __init__(self, state: int):
        super().__init__(f"conditioning state {state} has no observations and smoothing is 0")
        self.state = state


class SupportMismatch(JointCausalError):
    pass


class ZeroInQ(JointCausalError):
    pass


class CyclicSpec(ConfigError):
    pass


class NodeCountMismatch(JointCausalError):
    pass
