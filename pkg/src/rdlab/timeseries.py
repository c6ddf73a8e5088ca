"""Sampled particle-number trajectories and their CSV schema.

Every solver in the package emits the same record layout so outputs
can be compared file against file:

    t,N_A,N_B,rho_A,rho_B

Ensemble files append standard-error columns.  Floats are written with
repr-shortest formatting, which round-trips exactly and keeps reruns
byte-identical.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

CSV_HEADER = "t,N_A,N_B,rho_A,rho_B"


@dataclass
class TimeSeries:
    """(t, N_A, N_B, rho_A, rho_B) records sampled from one trajectory."""

    t: np.ndarray
    n_a: np.ndarray
    n_b: np.ndarray
    volume: int

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=np.float64)
        self.n_a = np.asarray(self.n_a, dtype=np.float64)
        self.n_b = np.asarray(self.n_b, dtype=np.float64)
        if not (self.t.shape == self.n_a.shape == self.n_b.shape):
            raise ValidationError("time series columns must share one grid")

    @property
    def rho_a(self) -> np.ndarray:
        return self.n_a / self.volume

    @property
    def rho_b(self) -> np.ndarray:
        return self.n_b / self.volume

    def __len__(self) -> int:
        return len(self.t)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(CSV_HEADER + "\n")
        for i in range(len(self.t)):
            buf.write(
                f"{self.t[i]!r},{self.n_a[i]!r},{self.n_b[i]!r},"
                f"{self.rho_a[i]!r},{self.rho_b[i]!r}\n"
            )
        return buf.getvalue()


def write_csv(path, series: TimeSeries):
    with open(path, "w") as fh:
        fh.write(series.to_csv())


def read_csv(path, volume: int | None = None) -> TimeSeries:
    """Read a TimeSeries CSV; volume is inferred from N/rho when possible."""
    data = np.genfromtxt(path, delimiter=",", names=True)
    data = np.atleast_1d(data)
    t = data["t"]
    n_a, n_b = data["N_A"], data["N_B"]
    if volume is None:
        rho = data["rho_A"]
        good = rho > 0
        if good.any():
            volume = int(round(float(n_a[good][0] / rho[good][0])))
        else:
            rho_b = data["rho_B"]
            good = rho_b > 0
            volume = int(round(float(n_b[good][0] / rho_b[good][0]))) if good.any() else 1
    return TimeSeries(t=t, n_a=n_a, n_b=n_b, volume=volume)
