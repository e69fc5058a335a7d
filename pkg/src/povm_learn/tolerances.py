"""Global numerical tolerances.

All validation in the package reads from :data:`TOL`. Use
:func:`override_tolerances` to change them temporarily::

    with override_tolerances(psd=1e-7):
        ...
"""

from __future__ import annotations

import contextlib
import dataclasses


@dataclasses.dataclass
class Tolerances:
    herm: float = 1e-9
    psd: float = 1e-9
    trace: float = 1e-9
    sum: float = 1e-9
    prob: float = 1e-9
    eig: float = 1e-9
    dtv: float = 1e-8
    unitary: float = 1e-9


TOL = Tolerances()


def set_tolerances(**kwargs: float) -> None:
    for name, value in kwargs.items():
        if not hasattr(TOL, name):
            raise KeyError(f"unknown tolerance {name!r}")
        setattr(TOL, name, float(value))


@contextlib.contextmanager
def override_tolerances(**kwargs: float):
    saved = dataclasses.asdict(TOL)
    try:
        set_tolerances(**kwargs)
        yield TOL
    finally:
        set_tolerances(**saved)
