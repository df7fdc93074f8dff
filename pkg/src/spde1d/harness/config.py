"""Experiment configuration: TOML/JSON ingestion, bundled presets, validation.

A config file carries the experiment kind, an equation table (or a `preset`
key naming a bundled base config to inherit from), a scheme table, an optional
resolution ladder, and sampling controls.  Every invariant is enforced at load
time with the offending table and field named, including trial construction of
the equation and scheme objects.

Identity fields (everything except `out`, `threads`, `figures`) feed the
config hash: two configs with equal hashes describe bit-identical experiments.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, fields
from importlib import resources
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # python 3.10
    import tomli as tomllib

import numpy as np

from ..drift import EquationSpec
from ..fields import GridSpec, SpectralField
from ..noise import NoiseLadder
from ..stepper import SchemeConfig

__all__ = ["KINDS", "VerifyOptions", "ExperimentConfig", "load_config", "preset_names"]

KINDS = ("simulate", "converge-space", "converge-time", "noise-rate", "fernique", "verify-all")

_TOP_KEYS = {
    "kind", "preset", "samples", "p_moments", "seed", "threads", "out", "figures",
    "equation", "scheme", "ladder", "constants", "verify",
}
_SCHEME_KEYS = {"T", "n", "M", "xi", "eta", "oversample"}
_LADDER_KEYS = {"entries", "reference"}
_CONSTANT_KEYS = {"embedding", "sup_embedding"}


@dataclass(frozen=True)
class VerifyOptions:
    """Sample counts and exponents of the verification battery."""

    apriori_paths: int = 100
    apriori_n: int = 16
    apriori_M: int = 256
    fernique_samples: int = 10_000
    fernique_quantile_samples: int = 2_000
    moment_p: float = 8.0
    moment_beta: float = 0.2
    moment_samples: int = 10_000
    noise_modes: tuple[int, ...] = (8, 16, 32)
    noise_epsilon: float = 0.05
    noise_samples: int = 10_000
    pair_samples: int = 10_000

    def __post_init__(self) -> None:
        for key in ("apriori_paths", "apriori_n", "apriori_M", "fernique_samples",
                    "fernique_quantile_samples", "moment_samples", "noise_samples", "pair_samples"):
            if int(getattr(self, key)) < 1:
                raise ValueError(f"{key} must be a positive integer, got {getattr(self, key)}")
        if not self.noise_modes or any(int(n) < 1 for n in self.noise_modes):
            raise ValueError(f"noise_modes must be positive integers, got {self.noise_modes}")
        if self.noise_epsilon < 0:
            raise ValueError(f"noise_epsilon must be nonnegative, got {self.noise_epsilon}")
        object.__setattr__(self, "noise_modes", tuple(int(n) for n in self.noise_modes))

    def to_dict(self) -> dict:
        return {f.name: (list(v) if isinstance(v := getattr(self, f.name), tuple) else v)
                for f in fields(self)}

    @classmethod
    def from_dict(cls, d: dict, origin: str) -> "VerifyOptions":
        known = {f.name for f in fields(cls)}
        for key in d:
            if key not in known:
                raise ValueError(f"{origin}: [verify] unknown field {key!r}")
        return cls(**d)


def _is_pow2(x: int) -> bool:
    return x >= 1 and (x & (x - 1)) == 0


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    equation: EquationSpec
    T: float = 1.0
    n: int = 16
    M: int = 256
    xi: tuple[float, ...] = (0.5, 0.25)
    eta: float = 0.0
    oversample: int = 32
    ladder: tuple[tuple[int, int], ...] = ()
    reference: tuple[int, int] | None = None
    samples: int = 1
    p_moments: tuple[float, ...] = (2.0,)
    seed: int = 0
    out: str | None = None
    threads: int = 1
    figures: bool = True
    embedding_constant: float | None = None
    sup_embedding_constant: float | None = None
    embedding_provenance: str = "estimated"
    preset: str | None = None
    verify: VerifyOptions = field(default_factory=VerifyOptions)

    def __post_init__(self) -> None:
        kind = "verify-all" if self.kind == "verify" else self.kind
        if kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        if self.samples < 1:
            raise ValueError(f"samples must be >= 1, got {self.samples}")
        if self.seed < 0:
            raise ValueError(f"seed must be nonnegative, got {self.seed}")
        if self.threads < 1:
            raise ValueError(f"threads must be >= 1, got {self.threads}")
        if not self.p_moments or any(p <= 0 for p in self.p_moments):
            raise ValueError(f"p_moments must be positive, got {self.p_moments}")
        if any(not math.isfinite(x) for x in self.xi):
            raise ValueError("xi coefficients must be finite")
        for emb in (self.embedding_constant, self.sup_embedding_constant):
            if emb is not None and emb <= 0:
                raise ValueError(f"embedding constants must be positive, got {emb}")
        object.__setattr__(self, "xi", tuple(float(x) for x in self.xi))
        object.__setattr__(self, "p_moments", tuple(float(p) for p in self.p_moments))
        object.__setattr__(self, "ladder", tuple((int(n), int(M)) for n, M in self.ladder))
        if self.reference is not None:
            object.__setattr__(self, "reference", (int(self.reference[0]), int(self.reference[1])))
        if kind in ("converge-space", "converge-time"):
            if not self.ladder or self.reference is None:
                raise ValueError(f"{kind} requires [ladder] entries and reference")
        if self.ladder and self.reference is not None:
            self._validate_ladder()
        # trial constructions surface scheme/grid invariant violations at load
        self.scheme_config()
        if self.reference is not None:
            n_ref, m_ref = self.reference
            for n, m in self.ladder:
                self.scheme_config(n=n, M=m, fine_modes=n_ref, fine_steps=m_ref)
            self.scheme_config(n=n_ref, M=m_ref, fine_modes=n_ref, fine_steps=m_ref)

    def _validate_ladder(self) -> None:
        n_ref, m_ref = self.reference
        for n, m in self.ladder:
            if n < 1 or m < 1:
                raise ValueError(f"ladder entry ({n}, {m}) must be positive")
            if n_ref % n or m_ref % m or not _is_pow2(n_ref // n) or not _is_pow2(m_ref // m):
                raise ValueError(
                    f"ladder entry ({n}, {m}) does not nest dyadically into reference ({n_ref}, {m_ref})"
                )
            if (n, m) == (n_ref, m_ref):
                raise ValueError(f"reference ({n_ref}, {m_ref}) must be strictly finer than every entry")
        for (n1, m1), (n2, m2) in zip(self.ladder, self.ladder[1:]):
            if n2 < n1 or m2 < m1 or (n1, m1) == (n2, m2):
                raise ValueError(
                    f"ladder entries must increase in resolution, got ({n1}, {m1}) then ({n2}, {m2})"
                )

    def xi_field(self) -> SpectralField | None:
        if not self.xi:
            return None
        return SpectralField(np.array(self.xi, dtype=np.float64), self.equation.c0)

    def scheme_config(
        self,
        n: int | None = None,
        M: int | None = None,
        fine_modes: int | None = None,
        fine_steps: int | None = None,
    ) -> SchemeConfig:
        """SchemeConfig at the given resolution; the noise ladder sits at the
        finest requested grid so coarser runs stay coupled to the same paths."""
        n = self.n if n is None else n
        M = self.M if M is None else M
        ladder = NoiseLadder(
            seed=self.seed,
            fine_steps=M if fine_steps is None else fine_steps,
            fine_modes=n if fine_modes is None else fine_modes,
            T=self.T,
            eta=self.eta,
        )
        return SchemeConfig(
            equation=self.equation,
            n=n,
            grid=GridSpec(T=self.T, M=M),
            ladder=ladder,
            xi=self.xi_field(),
            oversample=self.oversample,
        )

    def to_dict(self) -> dict:
        """Identity payload: everything that determines output bytes."""
        return {
            "kind": self.kind,
            "equation": self.equation.to_dict(),
            "scheme": {
                "T": self.T, "n": self.n, "M": self.M, "xi": list(self.xi),
                "eta": self.eta, "oversample": self.oversample,
            },
            "ladder": {"entries": [list(e) for e in self.ladder],
                       "reference": None if self.reference is None else list(self.reference)},
            "samples": self.samples,
            "p_moments": list(self.p_moments),
            "seed": self.seed,
            "constants": {"embedding": self.embedding_constant,
                          "sup_embedding": self.sup_embedding_constant},
            "verify": self.verify.to_dict(),
        }


def preset_names() -> list[str]:
    root = resources.files(__package__) / "presets"
    return sorted(p.name[: -len(".toml")] for p in root.iterdir() if p.name.endswith(".toml"))


def _preset_data(name: str) -> dict | None:
    candidate = resources.files(__package__) / "presets" / f"{name}.toml"
    if not candidate.is_file():
        return None
    return tomllib.loads(candidate.read_text())


def _parse_file(path: Path) -> dict:
    text = path.read_text()
    if path.suffix == ".toml":
        try:
            return tomllib.loads(text)
        except tomllib.TOMLDecodeError as e:  # message carries line/column
            raise ValueError(f"{path}: {e}") from None
    if path.suffix == ".json":
        try:
            return json.loads(text)
        except json.JSONDecodeError as e:
            raise ValueError(f"{path}: parse error at line {e.lineno}, column {e.colno}: {e.msg}") from None
    raise ValueError(f"{path}: unsupported config extension {path.suffix!r} (expected .toml or .json)")


def _merge(base: dict, override: dict) -> dict:
    out = dict(base)
    for key, val in override.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], val)
        else:
            out[key] = val
    return out


def _require(table: dict, key: str, origin: str, section: str):
    if key not in table:
        raise ValueError(f"{origin}: [{section}] missing required field {key!r}")
    return table[key]


def _build(data: dict, origin: str, preset_name: str | None, preset_constants: set[str]) -> ExperimentConfig:
    for key in data:
        if key not in _TOP_KEYS:
            raise ValueError(f"{origin}: unknown top-level field {key!r}")
    if "equation" not in data:
        raise ValueError(f"{origin}: missing required table [equation]")
    eq_table = data["equation"]
    for key in ("kind", "c0", "c1", "varrho", "chi"):
        _require(eq_table, key, origin, "equation")
    try:
        equation = EquationSpec(
            kind=eq_table["kind"],
            c0=float(eq_table["c0"]),
            c1=float(eq_table["c1"]),
            varrho=float(eq_table["varrho"]),
            chi=float(eq_table["chi"]),
            c2=float(eq_table.get("c2", 0.0)),
        )
    except ValueError as e:
        raise ValueError(f"{origin}: [equation] {e}") from None

    scheme = data.get("scheme", {})
    for key in scheme:
        if key not in _SCHEME_KEYS:
            raise ValueError(f"{origin}: [scheme] unknown field {key!r}")
    ladder_table = data.get("ladder", {})
    for key in ladder_table:
        if key not in _LADDER_KEYS:
            raise ValueError(f"{origin}: [ladder] unknown field {key!r}")
    entries = ladder_table.get("entries", [])
    if any(len(e) != 2 for e in entries):
        raise ValueError(f"{origin}: [ladder] entries must be (n, M) pairs")
    reference = ladder_table.get("reference")
    if reference is not None and len(reference) != 2:
        raise ValueError(f"{origin}: [ladder] reference must be an (n, M) pair")
    constants = data.get("constants", {})
    for key in constants:
        if key not in _CONSTANT_KEYS:
            raise ValueError(f"{origin}: [constants] unknown field {key!r}")
    if constants:
        provenance = "preset" if preset_constants >= set(constants) and preset_name else "config"
    else:
        provenance = "estimated"
    try:
        verify = VerifyOptions.from_dict(data.get("verify", {}), origin)
    except TypeError as e:
        raise ValueError(f"{origin}: [verify] {e}") from None

    try:
        return ExperimentConfig(
            kind=_require(data, "kind", origin, "top level"),
            equation=equation,
            T=float(scheme.get("T", 1.0)),
            n=int(scheme.get("n", 16)),
            M=int(scheme.get("M", 256)),
            xi=tuple(scheme.get("xi", (0.5, 0.25))),
            eta=float(scheme.get("eta", 0.0)),
            oversample=int(scheme.get("oversample", 32)),
            ladder=tuple((int(n), int(m)) for n, m in entries),
            reference=None if reference is None else (int(reference[0]), int(reference[1])),
            samples=int(data.get("samples", 1)),
            p_moments=tuple(data.get("p_moments", (2.0,))),
            seed=int(data.get("seed", 0)),
            out=data.get("out"),
            threads=int(data.get("threads", 1)),
            figures=bool(data.get("figures", True)),
            embedding_constant=constants.get("embedding"),
            sup_embedding_constant=constants.get("sup_embedding"),
            embedding_provenance=provenance,
            preset=preset_name,
            verify=verify,
        )
    except ValueError as e:
        msg = str(e)
        raise ValueError(msg if msg.startswith(origin) else f"{origin}: {msg}") from None


def load_config(path) -> ExperimentConfig:
    """Load and validate a config from a file path or bundled preset name."""
    p = Path(str(path))
    preset_name = None
    if p.suffix in (".toml", ".json") and p.exists():
        data = _parse_file(p)
        origin = str(p)
    else:
        name = p.name[: -len(".toml")] if p.name.endswith(".toml") else p.name
        preset = _preset_data(name)
        if preset is None:
            if p.suffix in (".toml", ".json"):
                raise FileNotFoundError(f"config file {str(p)!r} does not exist")
            raise FileNotFoundError(
                f"no config file or bundled preset named {str(p)!r}; bundled presets: {preset_names()}"
            )
        data, origin, preset_name = preset, f"preset {name!r}", name
    preset_constants: set[str] = set(data.get("constants", {})) if preset_name else set()
    if "preset" in data:
        base_name = data.pop("preset")
        base = _preset_data(str(base_name))
        if base is None:
            raise ValueError(f"{origin}: unknown preset {base_name!r}; bundled presets: {preset_names()}")
        user_constants = set(data.get("constants", {}))
        preset_constants = set(base.get("constants", {})) - user_constants
        data = _merge(base, data)
        preset_name = str(base_name)
    return _build(data, origin, preset_name, preset_constants)
