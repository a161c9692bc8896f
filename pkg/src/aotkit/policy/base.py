from __future__ import annotations

import json
import warnings

import numpy as np

from ..core import TRANSMIT, VERIFY

TABLE_FORMAT = "aotkit.policy-table"
TABLE_VERSION = 1


class CoverageWarning(UserWarning):
    """A greedy table was queried at a state it never learned."""


class VerificationPolicy:
    """Stateful decision rule queried once per slot.

    ``decide`` receives the age at the end of the previous slot and the rate
    the policy is allowed to observe (the realized rate, or the mean rate when
    the process is not observable). Counters, if any, live on the instance;
    call ``reset`` before reusing it for a new run.
    """

    needs_rate = False
    descriptor = "policy"

    def reset(self) -> None:
        pass

    def decide(self, age: int, rate: float) -> int:
        raise NotImplementedError


class NeverVerify(VerificationPolicy):
    descriptor = "never"

    def decide(self, age, rate):
        return TRANSMIT


class TablePolicy(VerificationPolicy):
    """Stationary rule looked up by (rate, age).

    Ages above ``max_age`` are evaluated at ``max_age``. States outside the
    table's coverage (unknown rate, or ``known`` False) fall back to transmit
    and are counted in ``coverage_misses``.
    """

    needs_rate = True

    def __init__(self, rates, verify, known=None, descriptor: str = "table"):
        self.rates = tuple(float(r) for r in rates)
        self.verify = np.asarray(verify, dtype=bool)
        if self.verify.shape[0] != len(self.rates):
            raise ValueError("verify table must have one row per rate")
        self.known = np.ones_like(self.verify) if known is None else np.asarray(known, dtype=bool)
        self.max_age = self.verify.shape[1] - 1
        self.descriptor = descriptor
        self._index = {r: k for k, r in enumerate(self.rates)}
        # plain lists are much faster than ndarray indexing inside the slot loop
        self._rows = [
            [VERIFY if v else TRANSMIT if k else -1 for v, k in zip(vr, kr)]
            for vr, kr in zip(self.verify.tolist(), self.known.tolist())
        ]
        self.coverage_misses = 0
        self.clamped = 0

    def reset(self):
        self.coverage_misses = 0
        self.clamped = 0

    def action(self, rate: float, age: int) -> int:
        return self.decide(age, rate)

    def decide(self, age, rate):
        r = self._index.get(rate)
        if age > self.max_age:
            age = self.max_age
            self.clamped += 1
        a = -1 if r is None else self._rows[r][age]
        if a < 0:
            if self.coverage_misses == 0:
                warnings.warn(
                    f"{self.descriptor}: no learned action at rate={rate!r}, age={age}; transmitting",
                    CoverageWarning,
                    stacklevel=2,
                )
            self.coverage_misses += 1
            return TRANSMIT
        return a

    def first_verify_age(self) -> list[int | None]:
        """Smallest age at which each rate row verifies (None if never)."""
        out = []
        for row in self.verify:
            hits = np.flatnonzero(row)
            out.append(int(hits[0]) if len(hits) else None)
        return out

    def to_dict(self) -> dict:
        return {
            "format": TABLE_FORMAT,
            "version": TABLE_VERSION,
            "descriptor": self.descriptor,
            "rates": list(self.rates),
            "max_age": self.max_age,
            "verify": self.verify.astype(int).tolist(),
            "known": self.known.astype(int).tolist(),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "TablePolicy":
        if doc.get("format") != TABLE_FORMAT:
            raise ValueError(f"not a policy table document: format={doc.get('format')!r}")
        if doc.get("version") != TABLE_VERSION:
            raise ValueError(f"unsupported policy table version {doc.get('version')!r}")
        return cls(doc["rates"], doc["verify"], doc["known"], doc.get("descriptor", "table"))

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def loads(cls, text: str) -> "TablePolicy":
        return cls.from_dict(json.loads(text))
