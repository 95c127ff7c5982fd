"""Declarative experiment configuration.

One config drives one experiment kind.  Files may be JSON or TOML with the
same nesting; every field is also a CLI flag, and flags override the file.
Regime constraints of the targeted statement are validated up front;
violations raise RegimeError (exit code 2), never silent clamping.
"""

from __future__ import annotations

import hashlib
import json
import math
import sys
from dataclasses import asdict, dataclass, field

from ..errors import RegimeError

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

KINDS = ("oracle-check", "gw-envelope", "gw-tail", "gw-bridge", "occupation",
         "deviation", "continuity", "coupling", "wasserstein", "thick-tail",
         "left-tail")


@dataclass
class LadderParams:
    r0: float = 0.1
    L: int = 5


@dataclass
class NetParams:
    d0: float = 0.1
    level: int = 5
    cap_margin: float = 1.1
    subsample: int = 1500


@dataclass
class PathParams:
    dt_scale: float = 0.1
    adapt: float = 0.1
    r_star: float | None = None
    max_steps: int = 10**9
    occupation_divisor: float = 16.0


@dataclass
class ExperimentConfig:
    kind: str = "oracle-check"
    ladder: LadderParams = field(default_factory=LadderParams)
    net: NetParams = field(default_factory=NetParams)
    path: PathParams = field(default_factory=PathParams)
    z_grid: list = field(default_factory=lambda: [1.0, 1.5, 2.0, 2.5, 3.0])
    replicas: int = 2000
    seed: int = 20260401
    out: str | None = None
    workers: int = 1
    executor: str = "serial"
    wilson_threshold: int = 30
    extra: dict = field(default_factory=dict)

    def to_dict(self):
        return asdict(self)

    def hash(self):
        canon = json.dumps(self.to_dict(), sort_keys=True)
        return hashlib.sha256(canon.encode()).hexdigest()[:16]

    def r_star(self):
        if self.path.r_star is not None:
            return self.path.r_star
        # default: half the outermost geodesic radius, the regime in which
        # the base cap sits inside every tracked outer ball
        return math.atan(self.ladder.r0 / 2.0)

    def validate(self):
        if self.kind not in KINDS:
            raise RegimeError(f"unknown experiment kind {self.kind!r}")
        if not 0 < self.ladder.r0 < 1 or self.ladder.L < 2:
            raise RegimeError("ladder needs 0 < r0 < 1 and L >= 2")
        if self.replicas < 0:
            raise RegimeError("replica count must be nonnegative")
        L = self.ladder.L
        if self.kind in ("thick-tail", "left-tail"):
            if self.net.level > L:
                raise RegimeError("net level exceeds ladder depth")
            for z in self.z_grid:
                if not 0.0 <= z <= math.log(max(L, 3)) + 2.0:
                    raise RegimeError(
                        f"offset z={z} outside the tested window [0, log L + 2]"
                    )
            if 2.0 * self.r_star() > 2.0 * math.atan(self.ladder.r0 / 2.0):
                raise RegimeError("cap must satisfy 2 r_star <= h_0")
        if self.kind == "occupation":
            div = self.extra.get("eps_divisors", [1, 10, 100])
            if any(not 1 <= d <= 100 for d in div):
                raise RegimeError("occupation needs eps in [h_k/100, h_k]")
        if self.kind == "deviation":
            delta = self.extra.get("delta", 0.3)
            if not 0 < delta < 1:
                raise RegimeError("deviation needs delta in (0, 1)")
        return self


def _merge(dst, src):
    for key, val in src.items():
        if isinstance(val, dict) and isinstance(dst.get(key), dict):
            _merge(dst[key], val)
        else:
            dst[key] = val


def load_config(path=None, overrides=None):
    """Build a config from an optional JSON/TOML file plus override pairs
    ("dotted.key", value)."""
    data = {}
    if path is not None:
        try:
            with open(path, "rb") as fh:
                raw = fh.read()
        except OSError as exc:
            raise OSError(f"cannot read config {path}: {exc}") from exc
        text = raw.decode()
        if str(path).endswith(".json") or text.lstrip().startswith("{"):
            data = json.loads(text)
        else:
            data = tomllib.loads(text)
    for key, value in overrides or []:
        parts = key.split(".")
        node = data
        for p in parts[:-1]:
            node = node.setdefault(p, {})
        node[parts[-1]] = value
    base = ExperimentConfig()
    cfg_dict = base.to_dict()
    _merge(cfg_dict, data)
    cfg = ExperimentConfig(
        kind=cfg_dict["kind"],
        ladder=LadderParams(**cfg_dict["ladder"]),
        net=NetParams(**cfg_dict["net"]),
        path=PathParams(**cfg_dict["path"]),
        z_grid=list(cfg_dict["z_grid"]),
        replicas=cfg_dict["replicas"],
        seed=cfg_dict["seed"],
        out=cfg_dict["out"],
        workers=cfg_dict["workers"],
        executor=cfg_dict["executor"],
        wilson_threshold=cfg_dict["wilson_threshold"],
        extra=dict(cfg_dict["extra"]),
    )
    return cfg.validate()
