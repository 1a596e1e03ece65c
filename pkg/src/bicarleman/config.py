"""Versioned JSON run configuration with strict key checking and a content hash."""
import dataclasses
import hashlib
import json
from dataclasses import dataclass

from .exceptions import ConfigError
from .families import FAMILY_KINDS
from .verification import SuiteSettings

__all__ = ["RunConfig", "CONFIG_VERSION", "load_config"]

CONFIG_VERSION = 1

_PAIRS = ("j_range", "k_range", "basis_j_range", "basis_k_range")


@dataclass(frozen=True)
class RunConfig:
    version: int = CONFIG_VERSION
    # section and family
    dim: int = 128
    family_kind: str = "graded"
    family_members: int = 3
    family_rank: int = 20
    family_base: float = 4.0
    family_level: float = 0.5
    family_manifest: str = ""
    # atoms
    j_range: tuple = (-120, 3)
    k_range: tuple = (-4, 4)
    basis_j_range: tuple = (-4, 3)
    basis_k_range: tuple = (-4, 4)
    m_max: int = 3
    sample_atoms: int = 8
    sample_range: float = 20.0
    sample_points: int = 401
    # pairing and synthesis
    n_pairs: int = 12
    start_scale: int = 0
    rank_cap: int = None
    pair_cap: int = None
    # tolerances
    gram_tol: float = 1e-6
    action_tol: float = 1e-6
    quad_tol: float = 1e-6
    symmetry_tol: float = 1e-10
    two_form_tol: float = 1e-10
    eps_decay: float = 1e-4
    boxes: tuple = (10.0, 20.0, 40.0)
    # grids
    grid_range: float = 50.0
    grid_points: int = 101
    decay_range: float = 100.0
    decay_step: float = 0.5
    derivatives: tuple = ((1, 0),)
    # verification extras
    n_test: int = 20
    mercer_samples: int = 5
    mercer_degree: int = 2
    combination: tuple = (0.5, 1 / 3, 1 / 6)
    seed: int = 0
    threads: int = 1

    def __post_init__(self):
        for name in _PAIRS:
            v = tuple(int(a) for a in getattr(self, name))
            if len(v) != 2 or v[0] > v[1]:
                raise ConfigError(f"{name} must be an ordered pair, got {v}")
            object.__setattr__(self, name, v)
        object.__setattr__(self, "boxes", tuple(float(b) for b in self.boxes))
        object.__setattr__(self, "combination", tuple(float(z) for z in self.combination))
        object.__setattr__(self, "derivatives",
                           tuple((int(a), int(b)) for a, b in self.derivatives))
        if self.version != CONFIG_VERSION:
            raise ConfigError(f"config version {self.version} is not supported "
                              f"(expected {CONFIG_VERSION})")
        if self.family_kind not in FAMILY_KINDS:
            raise ConfigError(f"family_kind must be one of {FAMILY_KINDS}")
        positive = ("dim", "family_members", "family_rank", "sample_points", "grid_points",
                    "threads", "n_test")
        for name in positive:
            if int(getattr(self, name)) <= 0:
                raise ConfigError(f"{name} must be positive")
        if self.m_max < 0 or self.n_pairs < 0 or self.mercer_samples < 0:
            raise ConfigError("m_max, n_pairs and mercer_samples must be non-negative")
        if self.n_pairs > self.dim:
            raise ConfigError("n_pairs cannot exceed dim")
        for name in ("gram_tol", "action_tol", "quad_tol", "symmetry_tol", "two_form_tol",
                     "eps_decay", "decay_step", "decay_range", "grid_range", "sample_range"):
            if not float(getattr(self, name)) > 0:
                raise ConfigError(f"{name} must be positive")
        if list(self.boxes) != sorted(self.boxes) or not self.boxes:
            raise ConfigError("boxes must be a non-empty increasing list")
        for cap in ("rank_cap", "pair_cap"):
            v = getattr(self, cap)
            if v is not None and int(v) < 0:
                raise ConfigError(f"{cap} must be non-negative or null")
        if any(max(a, b) > self.m_max for a, b in self.derivatives):
            raise ConfigError("derivative blocks exceed m_max")

    # serialization -------------------------------------------------------
    def to_dict(self):
        out = dataclasses.asdict(self)
        for k, v in out.items():
            if isinstance(v, tuple):
                out[k] = [list(a) if isinstance(a, tuple) else a for a in v]
        return out

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, data):
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        if "version" not in data:
            raise ConfigError("config is missing its version")
        try:
            return cls(**data)
        except ConfigError:
            raise
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad config value: {exc}") from exc

    @classmethod
    def from_json(cls, text):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
        return cls.from_dict(data)

    def config_hash(self):
        canon = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()[:16]

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def suite_settings(self):
        return SuiteSettings(eps_decay=self.eps_decay, boxes=self.boxes,
                             decay_range=self.decay_range, decay_step=self.decay_step,
                             grid_range=self.grid_range, grid_points=self.grid_points,
                             action_tol=self.action_tol, quad_tol=self.quad_tol,
                             symmetry_tol=self.symmetry_tol, two_form_tol=self.two_form_tol,
                             n_test=self.n_test)


def load_config(path=None):
    if path is None:
        return RunConfig()
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return RunConfig.from_json(text)
