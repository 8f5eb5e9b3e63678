"""The attack vector Alice shares with Bob, and its file format."""
import enum
import logging
import struct
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

import advfilt.common.types as t
from advfilt.common import dsp
from advfilt.common.errors import FormatError

logger = logging.getLogger(__name__)

MAGIC = b"AFAT"
_HEADER = struct.Struct("<4sBB")
_UINT = struct.Struct("<I")


class AttackKind(enum.IntEnum):
    ADDITIVE = 0
    FILTER = 1


class Scope(enum.IntEnum):
    UNIVERSAL = 0
    PER_CLASS = 1
    PER_INPUT = 2

    @classmethod
    def from_name(cls, name: str) -> "Scope":
        try:
            return cls[name.upper()]
        except KeyError:
            raise ValueError("unknown attack scope '{}'".format(name))


@dataclass(frozen=True)
class AttackSpec:
    """Additive perturbation or FIR taps, plus the inputs it was made for.

    Additive power follows the per-sample convention: mean |delta_n|^2.
    """

    kind: AttackKind
    values: np.ndarray
    scope: Scope = Scope.UNIVERSAL
    class_id: Optional[int] = None
    zero_gradient: bool = False

    def __post_init__(self):
        object.__setattr__(self, "values", dsp.as_signal(self.values, "attack vector"))
        if self.scope == Scope.PER_CLASS and self.class_id is None:
            raise ValueError("per-class attacks need a class id")

    @classmethod
    def additive(cls, perturbation: t.TData, **kwargs) -> "AttackSpec":
        return cls(AttackKind.ADDITIVE, perturbation, **kwargs)

    @classmethod
    def filter(cls, taps: t.TData, **kwargs) -> "AttackSpec":
        return cls(AttackKind.FILTER, taps, **kwargs)

    @property
    def is_filter(self) -> bool:
        return self.kind == AttackKind.FILTER

    @property
    def taps(self) -> np.ndarray:
        if not self.is_filter:
            raise ValueError("additive attacks have no filter taps")
        return self.values

    @property
    def perturbation(self) -> np.ndarray:
        if self.is_filter:
            raise ValueError("filter attacks have no additive perturbation")
        return self.values

    @property
    def power(self) -> float:
        return dsp.mean_sample_power(self.values)

    @property
    def is_minimum_phase(self) -> bool:
        return self.is_filter and (self.values.size == 1 or dsp.is_minimum_phase(self.values))

    def scaled(self, power: float) -> "AttackSpec":
        """Additive perturbation rescaled to the given per-sample power."""
        if power < 0.0:
            raise ValueError("perturbation power must be non-negative, got {}".format(power))
        current = self.power
        if current == 0.0:
            if power > 0.0:
                logger.warning("zero perturbation cannot be scaled to power %g", power)
            return self
        return replace(self, values=self.perturbation * np.sqrt(power / current))


def save_attack(spec: AttackSpec, path: str):
    with open(path, "wb") as attack_file:
        attack_file.write(_HEADER.pack(MAGIC, int(spec.kind), int(spec.scope)))
        if spec.scope == Scope.PER_CLASS:
            attack_file.write(_UINT.pack(spec.class_id))
        attack_file.write(_UINT.pack(spec.values.size))
        pairs = np.empty((spec.values.size, 2), dtype="<f8")
        pairs[:, 0] = spec.values.real
        pairs[:, 1] = spec.values.imag
        attack_file.write(pairs.tobytes())


def load_attack(path: str) -> AttackSpec:
    with open(path, "rb") as attack_file:
        payload = attack_file.read()
    if len(payload) < _HEADER.size + _UINT.size:
        raise FormatError("{}: file too short for an AFAT header".format(path))
    magic, kind, scope = _HEADER.unpack_from(payload)
    if magic != MAGIC:
        raise FormatError("{}: bad magic {!r}, expected {!r}".format(path, magic, MAGIC))
    try:
        kind, scope = AttackKind(kind), Scope(scope)
    except ValueError as err:
        raise FormatError("{}: {}".format(path, err))
    offset = _HEADER.size
    class_id = None
    if scope == Scope.PER_CLASS:
        (class_id,) = _UINT.unpack_from(payload, offset)
        offset += _UINT.size
    (length,) = _UINT.unpack_from(payload, offset)
    offset += _UINT.size
    if len(payload) != offset + 16 * length:
        raise FormatError("{}: expected {} complex values".format(path, length))
    pairs = np.frombuffer(payload, dtype="<f8", offset=offset).reshape(length, 2)
    return AttackSpec(kind, pairs[:, 0] + 1j * pairs[:, 1], scope=scope, class_id=class_id)
