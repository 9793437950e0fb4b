"""OFDMA load/power coupling model.

Notation follows the usual load-coupling formulation: ``g[i, j]`` is the
linear gain between station ``i`` and user ``j``, ``d[j]`` the demand in
bit/s, ``K`` resource units of bandwidth ``B`` per station, ``sigma2`` the
noise power per resource unit and ``p[i]`` the transmit power per resource
unit. The per-resource-unit rate is

    omega_ij(nu, p) = B * log2(1 + p_i g_ij / (sum_{k != i} nu_k p_k g_kj + sigma2))

and the load of station ``i`` is ``sum_{j in N_i} d_j / (K omega_ij)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import EmptyCell
from .mapping import PositiveConcaveMapping
from .propagation import D_MIN, hata_gain
from .spectral import similar

LN2 = math.log(2.0)
SCHEMA = "concavefp.scenario/1"
DEFAULT_LOAD_CAP = 1e3
DEFAULT_POWER_CAP = 1e3


@dataclass(frozen=True)
class RadioParams:
    """Network parameters; defaults reproduce the reference configuration."""

    carrier_mhz: float = 900.0
    K: int = 25
    power: float = 1.6  # W per resource unit
    system_bandwidth: float = 5e6  # K * B, Hz
    noise_psd_dbm_hz: float = -145.1
    h_b: float = 30.0
    h_m: float = 1.5
    n_users: int = 200
    n_bs: int = 25
    demand: float = 768e3  # bit/s per user
    field_size: float = 2500.0  # m, square side
    layout: str = "grid"  # or "uniform"
    city: str = "small_medium"
    d_min: float = D_MIN

    @property
    def B(self) -> float:
        return self.system_bandwidth / self.K

    @property
    def sigma2(self) -> float:
        """Noise power per resource unit in watts."""
        dbm = self.noise_psd_dbm_hz + 10.0 * math.log10(self.B)
        return 10.0 ** (dbm / 10.0) * 1e-3

    @classmethod
    def from_dict(cls, d: dict) -> "RadioParams":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown scenario parameters: {sorted(unknown)}")
        return cls(**d)


@dataclass(frozen=True, eq=False)
class NetworkScenario:
    gains: np.ndarray  # (M, N)
    assignment: np.ndarray  # (N,) serving station per user
    demands: np.ndarray  # (N,) bit/s
    K: int
    B: float
    sigma2: float
    p: np.ndarray  # (M,) W per resource unit
    bs_positions: Optional[np.ndarray] = None
    user_positions: Optional[np.ndarray] = None
    params: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        g = np.array(self.gains, dtype=float, ndmin=2)
        M, N = g.shape
        a = np.asarray(self.assignment, dtype=int).reshape(N)
        d = np.asarray(self.demands, dtype=float).reshape(N)
        p = np.broadcast_to(np.asarray(self.p, dtype=float), (M,)).copy()
        if np.any(g <= 0) or not np.all(np.isfinite(g)):
            raise ValueError("gains must be positive and finite")
        if np.any(d <= 0):
            raise ValueError("demands must be positive")
        if self.K < 1 or self.B <= 0 or self.sigma2 <= 0:
            raise ValueError("K >= 1, B > 0 and sigma2 > 0 are required")
        if np.any(p <= 0):
            raise ValueError("powers must be positive")
        if np.any(a < 0) or np.any(a >= M):
            raise ValueError("assignment refers to a missing station")
        for name, arr in (("gains", g), ("assignment", a), ("demands", d), ("p", p)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        for name in ("bs_positions", "user_positions"):
            v = getattr(self, name)
            if v is not None:
                v = np.array(v, dtype=float)
                v.setflags(write=False)
                object.__setattr__(self, name, v)

    @property
    def n_bs(self) -> int:
        return self.gains.shape[0]

    @property
    def n_users(self) -> int:
        return self.gains.shape[1]

    def cell_sizes(self) -> np.ndarray:
        return np.bincount(self.assignment, minlength=self.n_bs)

    @cached_property
    def serving_gain(self) -> np.ndarray:
        return self.gains[self.assignment, np.arange(self.n_users)]

    @cached_property
    def interference_gains(self) -> np.ndarray:
        """Gains with each user's serving entry zeroed, so ``k != i`` sums are exact."""
        G = np.array(self.gains)
        G[self.assignment, np.arange(self.n_users)] = 0.0
        return G

    def require_nonempty(self) -> None:
        empty = np.flatnonzero(self.cell_sizes() == 0)
        if len(empty):
            raise EmptyCell(f"stations without users: {empty.tolist()}")

    def prune_empty(self) -> "NetworkScenario":
        """Drop stations that serve nobody; with zero load they never interfere."""
        keep = np.flatnonzero(self.cell_sizes() > 0)
        if len(keep) == self.n_bs:
            return self
        remap = np.full(self.n_bs, -1)
        remap[keep] = np.arange(len(keep))
        return replace(
            self,
            gains=self.gains[keep],
            assignment=remap[self.assignment],
            p=self.p[keep],
            bs_positions=None if self.bs_positions is None else self.bs_positions[keep],
        )

    def with_demands(self, demands) -> "NetworkScenario":
        return replace(self, demands=np.broadcast_to(np.asarray(demands, float), (self.n_users,)))

    def scale_demands(self, factor: float) -> "NetworkScenario":
        return self.with_demands(self.demands * factor)

    def with_power(self, p) -> "NetworkScenario":
        return replace(self, p=p)

    # -- serialization ---------------------------------------------------

    def to_dict(self) -> dict:
        out = {
            "schema": SCHEMA,
            "K": int(self.K),
            "B": float(self.B),
            "sigma2": float(self.sigma2),
            "p": self.p.tolist(),
            "demands": self.demands.tolist(),
            "assignment": self.assignment.tolist(),
            "gains": self.gains.tolist(),
            "params": dict(self.params),
        }
        if self.bs_positions is not None:
            out["bs_positions"] = self.bs_positions.tolist()
        if self.user_positions is not None:
            out["user_positions"] = self.user_positions.tolist()
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "NetworkScenario":
        if d.get("schema") != SCHEMA:
            raise ValueError(f"unsupported scenario schema {d.get('schema')!r}")
        return cls(
            gains=np.array(d["gains"]),
            assignment=np.array(d["assignment"]),
            demands=np.array(d["demands"]),
            K=int(d["K"]),
            B=float(d["B"]),
            sigma2=float(d["sigma2"]),
            p=np.array(d["p"]),
            bs_positions=None if "bs_positions" not in d else np.array(d["bs_positions"]),
            user_positions=None if "user_positions" not in d else np.array(d["user_positions"]),
            params=d.get("params", {}),
        )

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n")

    @classmethod
    def load(cls, path) -> "NetworkScenario":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def gains_to_csv(self, path) -> None:
        rows = [",".join(f"{v:.17g}" for v in row) for row in self.gains]
        Path(path).write_text("\n".join(rows) + "\n")


# -- scenario generation -------------------------------------------------


def station_layout(params: RadioParams, rng=None) -> np.ndarray:
    if params.layout == "grid":
        side = int(round(math.sqrt(params.n_bs)))
        if side * side != params.n_bs:
            raise ValueError("grid layout needs a square number of stations")
        c = (np.arange(side) + 0.5) * params.field_size / side
        xx, yy = np.meshgrid(c, c)
        return np.column_stack([xx.ravel(), yy.ravel()])
    if params.layout == "uniform":
        if rng is None:
            raise ValueError("uniform layout needs a random generator")
        return rng.uniform(0, params.field_size, (params.n_bs, 2))
    raise ValueError(f"unknown layout {params.layout!r}")


def gain_matrix(bs_positions, user_positions, params: RadioParams) -> np.ndarray:
    dist = np.linalg.norm(bs_positions[:, None, :] - user_positions[None, :, :], axis=-1)
    return hata_gain(params.carrier_mhz, params.h_b, params.h_m, dist, params.city, params.d_min)


def associate_users(scn: NetworkScenario) -> NetworkScenario:
    """Best-server association; ``argmax`` breaks ties towards the lowest index."""
    return replace(scn, assignment=np.argmax(scn.gains, axis=0))


def generate_scenario(params: RadioParams = RadioParams(), rng=None, prune: bool = True) -> NetworkScenario:
    """Random user drop over the field, best-server association."""
    rng = np.random.default_rng(rng)
    bs = station_layout(params, rng)
    users = rng.uniform(0, params.field_size, (params.n_users, 2))
    gains = gain_matrix(bs, users, params)
    scn = NetworkScenario(
        gains=gains,
        assignment=np.zeros(params.n_users, dtype=int),
        demands=np.full(params.n_users, params.demand),
        K=params.K,
        B=params.B,
        sigma2=params.sigma2,
        p=np.full(params.n_bs, params.power),
        bs_positions=bs,
        user_positions=users,
        params={k: getattr(params, k) for k in params.__dataclass_fields__},
    )
    scn = associate_users(scn)
    return scn.prune_empty() if prune else scn


# -- rates and mappings --------------------------------------------------


def rate_per_ru(scn: NetworkScenario, nu, i: int, j: int, p=None) -> float:
    """``omega_ij`` in bit/s for one station/user pair."""
    nu = np.asarray(nu, dtype=float)
    p = scn.p if p is None else np.asarray(p, dtype=float)
    others = np.arange(scn.n_bs) != i
    interference = float(np.sum(nu[others] * p[others] * scn.gains[others, j])) + scn.sigma2
    return scn.B * math.log1p(p[i] * scn.gains[i, j] / interference) / LN2


def interference(scn: NetworkScenario, nu, p) -> np.ndarray:
    """Per-user interference plus noise at the serving station."""
    return (np.asarray(nu) * np.asarray(p)) @ scn.interference_gains + scn.sigma2


def serving_rates(scn: NetworkScenario, nu, p=None) -> np.ndarray:
    p = scn.p if p is None else np.asarray(p, dtype=float)
    sinr = p[scn.assignment] * scn.serving_gain / interference(scn, nu, p)
    return scn.B * np.log1p(sinr) / LN2


def load_function(scn: NetworkScenario, nu, p=None) -> np.ndarray:
    """``f_i(nu, p) = sum_{j in N_i} d_j / (K omega_ij(nu, p))``."""
    per_user = scn.demands / (scn.K * serving_rates(scn, nu, p))
    return np.bincount(scn.assignment, weights=per_user, minlength=scn.n_bs)


def load_mapping(scn: NetworkScenario, cap: float = DEFAULT_LOAD_CAP) -> PositiveConcaveMapping:
    """Load mapping ``T_p`` with the scenario's powers held fixed."""
    scn.require_nonempty()
    return PositiveConcaveMapping(
        func=lambda nu: load_function(scn, nu),
        dimension=scn.n_bs,
        cap=np.full(scn.n_bs, cap),
        name="load",
    )


def power_function(scn: NetworkScenario, nu, p) -> np.ndarray:
    nu = np.asarray(nu, dtype=float)
    p = np.asarray(p, dtype=float)
    a = scn.assignment
    I = interference(scn, nu, p)
    p_serv = p[a]
    g = scn.serving_gain
    active = p_serv != 0
    per_user = np.empty(scn.n_users)
    # p_i != 0 branch
    rate = scn.B * np.log1p(p_serv[active] * g[active] / I[active]) / LN2
    per_user[active] = p_serv[active] * scn.demands[active] / (nu[a][active] * scn.K * rate)
    # p_i == 0 branch (continuous extension)
    idle = ~active
    per_user[idle] = (
        scn.demands[idle] * LN2 * I[idle] / (scn.K * scn.B * g[idle] * nu[a][idle])
    )
    return np.bincount(a, weights=per_user, minlength=scn.n_bs)


def power_mapping(scn: NetworkScenario, nu, cap: float = DEFAULT_POWER_CAP) -> PositiveConcaveMapping:
    """Power mapping ``T_nu`` whose fixed point is the power inducing load ``nu``."""
    scn.require_nonempty()
    nu = np.array(nu, dtype=float)
    if nu.shape != (scn.n_bs,) or np.any(nu <= 0):
        raise ValueError("target load must be a strictly positive vector per station")
    nu.setflags(write=False)
    return PositiveConcaveMapping(
        func=lambda p: power_function(scn, nu, p),
        dimension=scn.n_bs,
        cap=np.full(scn.n_bs, cap),
        name="power",
    )


def load_residual(scn: NetworkScenario, nu, p=None) -> np.ndarray:
    """Residual of the nonlinear load system ``nu_i - f_i(nu, p)``."""
    return np.asarray(nu, dtype=float) - load_function(scn, nu, p)


# -- closed-form lower bounding matrices ----------------------------------


def closed_form_Mprime(scn: NetworkScenario) -> np.ndarray:
    """``[M']_ik = sum_{j in N_i} ln2 d_j g_kj / (K B g_ij)`` off the diagonal, 0 on it."""
    w = LN2 * scn.demands / (scn.K * scn.B * scn.serving_gain)  # (N,)
    # row i accumulates users of cell i; column k picks g_kj
    Mp = np.zeros((scn.n_bs, scn.n_bs))
    np.add.at(Mp, scn.assignment, (scn.gains * w).T)
    np.fill_diagonal(Mp, 0.0)
    return Mp


def load_matrix(scn: NetworkScenario) -> np.ndarray:
    """Lower bounding matrix of ``T_p``: ``diag(p)^-1 M' diag(p)``."""
    return similar(closed_form_Mprime(scn), scn.p)


def power_matrix(scn: NetworkScenario, nu) -> np.ndarray:
    """Lower bounding matrix of ``T_nu``: ``diag(nu)^-1 M' diag(nu)``."""
    return similar(closed_form_Mprime(scn), nu)


def stored_scenario(name: str) -> NetworkScenario:
    """Load a scenario shipped in ``concavefp/data``."""
    from importlib import resources

    text = resources.files("concavefp").joinpath("data", f"{name}.json").read_text()
    return NetworkScenario.from_dict(json.loads(text))
