"""Experiment configuration: TOML text to a validated, defaults-filled object.

Layout::

    seed = 0

    [model]          # surrogate, see spectral.build_model
    d = 5.8          # or k = 2
    law = "shell"    # "power" (default) or "shell"
    N = 50
    a = 6.0

    [family]
    g = [-1.0, -1.0] # g_1 .. g_k, default all -1
    alpha = 1.0      # optional, must equal -1/g_1
    scheme = "exact" # or "noisy"
    noise = 0.0

    [ladder]
    n = [4, 8, 16]
    t = [0.5, 1.0]
    lambda = [1.0]
    kinds = ["schrodinger", "parabolic", "hyperbolic", "resolvent", "projection"]

    [output]
    dir = "out"
    csv = "results.csv"
    json = "summary.json"
"""

from __future__ import annotations

import math
import re
import sys
from dataclasses import dataclass, field
from typing import Any

from .errors import ConfigError

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - exercised on 3.10 only
    import tomli as tomllib

__all__ = ["ExperimentConfig", "parse_config", "load_config", "ALL_KINDS"]

ALL_KINDS = ("schrodinger", "parabolic", "hyperbolic", "resolvent", "projection")
DEFAULT_KINDS = ("schrodinger", "parabolic", "hyperbolic")

_MODEL_KEYS = {
    "k", "d", "N", "law", "a", "exponent", "amplitude_exponent", "p_min", "p_max",
    "eigenvalues", "amplitudes",
}
_FAMILY_KEYS = {"g", "alpha", "scheme", "noise"}
_LADDER_KEYS = {"n", "t", "lambda", "kinds", "probes_random", "drop", "random_subspace", "lambda0"}
_OUTPUT_KEYS = {"dir", "csv", "json"}
_TOP_KEYS = {"seed", "model", "family", "ladder", "output"}


@dataclass(frozen=True)
class ExperimentConfig:
    model: dict
    g_targets: tuple[float, ...]
    alpha: float | None
    scheme: str
    noise: float
    n_values: tuple[int, ...]
    t_values: tuple[float, ...]
    lambda_values: tuple[float, ...]
    kinds: tuple[str, ...]
    probes_random: int
    drop: float
    random_subspace: bool
    lambda0: float | None
    output: dict
    seed: int
    k: int = field(default=0)

    @property
    def m(self) -> int:
        return self.k // 2

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "model": self.model,
            "family": {"g": list(self.g_targets), "alpha": self.alpha, "scheme": self.scheme, "noise": self.noise},
            "ladder": {
                "n": list(self.n_values),
                "t": list(self.t_values),
                "lambda": list(self.lambda_values),
                "kinds": list(self.kinds),
                "probes_random": self.probes_random,
                "drop": self.drop,
                "random_subspace": self.random_subspace,
                "lambda0": self.lambda0,
            },
            "output": self.output,
        }


def _decode(text: str) -> dict:
    try:
        return tomllib.loads(text)
    except tomllib.TOMLDecodeError as err:
        msg = str(err)
        loc = re.search(r"line (\d+), column (\d+)", msg)
        line = int(loc.group(1)) if loc else None
        if line is not None and ("overwrite" in msg or "twice" in msg):
            src = text.splitlines()[line - 1] if line - 1 < len(text.splitlines()) else ""
            key = src.split("=")[0].strip().strip("[]") if src else "?"
            raise ConfigError(f"duplicate key '{key}' at line {line}, column {loc.group(2)}") from None
        if loc:
            raise ConfigError(f"parse error at line {line}, column {loc.group(2)}: {msg}") from None
        raise ConfigError(f"parse error: {msg}") from None


def _check_keys(section: str, table: Any, allowed: set[str]) -> dict:
    if not isinstance(table, dict):
        raise ConfigError(f"'{section}' must be a table")
    unknown = sorted(set(table) - allowed)
    if unknown:
        raise ConfigError(f"unknown key '{unknown[0]}' in [{section}]")
    return table


def _number_list(section: str, key: str, value: Any, kind=float) -> tuple:
    if not isinstance(value, list) or not value:
        raise ConfigError(f"'{section}.{key}' must be a nonempty list")
    out = []
    for v in value:
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError(f"'{section}.{key}' must contain numbers")
        if kind is int and (not float(v).is_integer()):
            raise ConfigError(f"'{section}.{key}' must contain integers")
        out.append(kind(v))
    return tuple(out)


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate configuration text, filling defaults."""
    raw = _decode(text)
    _check_keys("top level", raw, _TOP_KEYS)
    for sec in ("model", "ladder"):
        if sec not in raw:
            raise ConfigError(f"missing section [{sec}]")
    model = dict(_check_keys("model", raw["model"], _MODEL_KEYS))
    family = _check_keys("family", raw.get("family", {}), _FAMILY_KEYS)
    ladder = _check_keys("ladder", raw["ladder"], _LADDER_KEYS)
    output = _check_keys("output", raw.get("output", {}), _OUTPUT_KEYS)

    if "k" in model:
        k = model["k"]
        if isinstance(k, bool) or not isinstance(k, int) or k < 1:
            raise ConfigError(f"'model.k' must be an integer >= 1, got {k!r}")
        if "d" in model and int(math.floor(float(model["d"]) / 2)) != k:
            raise ConfigError(f"'model.k' = {k} is inconsistent with 'model.d' = {model['d']}")
    elif "d" in model:
        d = model["d"]
        if isinstance(d, bool) or not isinstance(d, (int, float)):
            raise ConfigError("'model.d' must be a number")
        k = int(math.floor(float(d) / 2))
        if k < 1:
            raise ConfigError(f"'model.d' = {d} gives k = {k}; need k >= 1")
    else:
        raise ConfigError("'model' needs either 'k' or 'd'")
    model.setdefault("law", "power")
    if model["law"] not in ("power", "shell") and "eigenvalues" not in model:
        raise ConfigError(f"'model.law' must be 'power' or 'shell', got {model['law']!r}")

    g = family.get("g", [-1.0] * k)
    g = _number_list("family", "g", g)
    if len(g) != k:
        raise ConfigError(f"'family.g' must have k = {k} entries, got {len(g)}")
    alpha = family.get("alpha")
    if alpha is not None:
        alpha = float(alpha)
        if alpha == 0.0:
            raise ConfigError("'family.alpha' = 0 is not supported")
        if "g" not in family:
            g = (-1.0 / alpha,) + g[1:]
        elif not math.isclose(g[0], -1.0 / alpha, rel_tol=1e-12):
            raise ConfigError("'family.alpha' must satisfy g_1 = -1/alpha")
    scheme = family.get("scheme", "exact")
    if scheme not in ("exact", "noisy"):
        raise ConfigError(f"'family.scheme' must be 'exact' or 'noisy', got {scheme!r}")
    noise = float(family.get("noise", 0.1 if scheme == "noisy" else 0.0))
    if scheme == "exact" and noise != 0.0:
        raise ConfigError("'family.noise' must be 0 with the exact scheme")

    if "n" not in ladder:
        raise ConfigError("missing key 'ladder.n'")
    n_values = _number_list("ladder", "n", ladder["n"], int)
    if any(n < 1 for n in n_values) or list(n_values) != sorted(set(n_values)):
        raise ConfigError("'ladder.n' must be strictly ascending positive integers")
    t_values = _number_list("ladder", "t", ladder.get("t", [0.5, 1.0]))
    if any(t < 0 for t in t_values):
        raise ConfigError("'ladder.t' must be nonnegative")
    lam_values = _number_list("ladder", "lambda", ladder.get("lambda", [1.0]))
    kinds = ladder.get("kinds", list(DEFAULT_KINDS))
    if not isinstance(kinds, list) or not kinds:
        raise ConfigError("'ladder.kinds' must be a nonempty list")
    for kd in kinds:
        if kd not in ALL_KINDS:
            raise ConfigError(f"unknown kind '{kd}' in 'ladder.kinds'")
    probes_random = ladder.get("probes_random", 3)
    if isinstance(probes_random, bool) or not isinstance(probes_random, int) or probes_random < 0:
        raise ConfigError("'ladder.probes_random' must be a nonnegative integer")
    drop = float(ladder.get("drop", 10.0))
    random_subspace = ladder.get("random_subspace", False)
    if not isinstance(random_subspace, bool):
        raise ConfigError("'ladder.random_subspace' must be true or false")
    lambda0 = ladder.get("lambda0")
    lambda0 = None if lambda0 is None else float(lambda0)

    out = {"dir": "out", "csv": "results.csv", "json": "summary.json"}
    for key, val in output.items():
        if not isinstance(val, str):
            raise ConfigError(f"'output.{key}' must be a string")
        out[key] = val

    seed = raw.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int):
        raise ConfigError("'seed' must be an integer")

    return ExperimentConfig(
        model=model,
        g_targets=tuple(g),
        alpha=alpha,
        scheme=scheme,
        noise=noise,
        n_values=n_values,
        t_values=t_values,
        lambda_values=lam_values,
        kinds=tuple(kinds),
        probes_random=probes_random,
        drop=drop,
        random_subspace=random_subspace,
        lambda0=lambda0,
        output=out,
        seed=seed,
        k=k,
    )


def load_config(path) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())
