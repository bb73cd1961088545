"""
config_model.py: Configuration models for schemes, audit plans and the prover daemon.
Scheme configuration comes from flat key=value files or YAML mappings, overridden by CLI
flags of the same names; validators collect every problem before anything is built.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Any

import yaml
from sympy import isprime

from ..algebra import PrimeField
from ..errors import ParameterError

logger = logging.getLogger(__name__)

SCHEME_NAMES = ("basic", "multiblock", "lc-v1", "lc-v2", "sw")
CODE_KINDS = ("rs", "matrix")
SAMPLING_NAMES = ("with", "without")


@dataclass
class SchemeConfig:
    """
    Scheme parameters as written in a config file. Keys use dashes in files
    (code-kind, code-file) and underscores here.
    """
    # pylint: disable=too-many-instance-attributes
    scheme: str = "basic"
    q: int = 0
    n: int = 0
    k: int = 0
    ell: int | None = None
    code_kind: str = "rs"
    code_file: str | None = None

    def with_overrides(self, overrides: dict[str, Any]) -> SchemeConfig:
        """Return a copy with every non-None override applied."""
        known = {f.name for f in fields(self)}
        changes = {}
        for key, value in overrides.items():
            name = key.replace("-", "_")
            if name in known and value is not None:
                changes[name] = value
        return _coerce(replace(self, **changes))

    def to_descriptor(self):
        """Build the SchemeDescriptor (and its code) this configuration names."""
        from ..coding import load_code_file, rs_code
        from ..schemes import SchemeDescriptor
        field_ = PrimeField(self.q)
        if self.code_kind == "matrix":
            code = load_code_file(self.code_file)
            if (code.q, code.n, code.k) != (self.q, self.n, self.k):
                raise ParameterError(f"Code file {self.code_file} describes q={code.q}, n={code.n}, "
                                     f"k={code.k}; config says q={self.q}, n={self.n}, k={self.k}")
        else:
            code = rs_code(field_, self.n, self.k)
        return SchemeDescriptor(self.scheme, code, self.ell)


def _as_int(value) -> int | None:
    if value is None or isinstance(value, int):
        return value
    text = str(value).strip()
    if text.lower() in ("", "none", "-"):
        return None
    return int(text, 16) if text.lower().startswith("0x") else int(text)


def _coerce(config: SchemeConfig) -> SchemeConfig:
    ell = _as_int(config.ell)
    return replace(config, scheme=str(config.scheme).strip().lower(), q=_as_int(config.q),
                   n=_as_int(config.n), k=_as_int(config.k), ell=ell or None,
                   code_kind=str(config.code_kind).strip().lower())


def read_key_values(path: str | Path) -> dict[str, str]:
    """Flat key=value lines; blank lines and # comments are ignored."""
    values = {}
    with open(path, "r", encoding="utf-8") as f:
        for number, line in enumerate(f, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{number}: expected key=value, got {line!r}")
            key, value = line.split("=", 1)
            values[key.strip()] = value.strip()
    return values


def load_scheme_config(path: str | Path | None, overrides: dict[str, Any] | None = None) -> SchemeConfig:
    """
    Load a scheme configuration. Files ending in .yml/.yaml are read as YAML mappings,
    anything else as key=value lines.
    """
    values: dict[str, Any] = {}
    if path is not None:
        if Path(path).suffix.lower() in (".yml", ".yaml"):
            with open(path, "r", encoding="utf-8") as f:
                values = yaml.safe_load(f) or {}
            if not isinstance(values, dict):
                raise ValueError(f"{path}: expected a mapping of scheme keys")
        else:
            values = read_key_values(path)
        logger.debug("Loaded scheme config %s: %s", path, values)
    return SchemeConfig().with_overrides(values).with_overrides(overrides or {})


class SchemeConfigValidator:
    """
    Validator for SchemeConfig.
    """
    def __init__(self):
        self.latest_errors = []

    def validate(self, config: SchemeConfig) -> bool:
        """
        Validate a scheme configuration.
        Returns True if all validations pass, otherwise False with the messages in latest_errors.
        """
        main_validators = {
            self._validate_scheme: [config.scheme],
            self._validate_q: [config.q],
            self._validate_dimensions: [config.q, config.n, config.k, config.code_kind],
            self._validate_ell: [config.scheme, config.n, config.ell],
            self._validate_code_kind: [config.code_kind, config.code_file],
        }
        self.latest_errors = [e for e in (x(*y) for x, y in main_validators.items()) if e is not None]
        return not self.latest_errors

    @staticmethod
    def _validate_scheme(scheme: str) -> str | None:
        if scheme not in SCHEME_NAMES:
            return f"Unknown scheme {scheme!r}; expected one of {', '.join(SCHEME_NAMES)}"
        return None

    @staticmethod
    def _validate_q(q: int) -> str | None:
        if not q:
            return "q is missing"
        if q < 2 or q > 2**61 - 1:
            return f"q={q} outside [2, 2^61-1]"
        if not isprime(q):
            return f"q={q} is not prime"
        return None

    @staticmethod
    def _validate_dimensions(q: int, n: int, k: int, code_kind: str) -> str | None:
        if not n or not k:
            return "n and k are required"
        if not 1 <= k <= n:
            return f"Need 1 <= k <= n, got k={k}, n={n}"
        if code_kind == "rs" and q and n > q:
            return f"Reed-Solomon length n={n} exceeds q={q}"
        return None

    @staticmethod
    def _validate_ell(scheme: str, n: int, ell: int | None) -> str | None:
        if scheme in ("multiblock", "lc-v2") and ell is None:
            return f"Scheme {scheme} requires ell"
        if scheme in ("basic", "lc-v1") and ell is not None:
            return f"Scheme {scheme} takes no ell"
        if ell is not None and n and not 1 <= ell <= n:
            return f"Need 1 <= ell <= n, got ell={ell}, n={n}"
        return None

    @staticmethod
    def _validate_code_kind(code_kind: str, code_file: str | None) -> str | None:
        if code_kind not in CODE_KINDS:
            return f"Unknown code-kind {code_kind!r}"
        if code_kind == "matrix":
            if not code_file:
                return "code-kind matrix requires code-file"
            if not Path(code_file).is_file():
                return f"Code file {code_file} does not exist"
        return None


@dataclass
class AuditPlan:
    """How one audit session samples and decides."""
    t: int = 0
    alpha: float = 0.05
    sampling: str = "with"
    seed: str = "0"
    omega: int | None = None
    confidence: float | None = None

    @classmethod
    def parse(cls, text: str) -> AuditPlan:
        """Parse 't=50,alpha=0.05,sampling=with,seed=7'."""
        plan = cls()
        for item in filter(None, (part.strip() for part in text.split(","))):
            if "=" not in item:
                raise ValueError(f"Plan item {item!r} is not key=value")
            key, value = (s.strip() for s in item.split("=", 1))
            match key:
                case "t":
                    plan.t = int(value)
                case "alpha":
                    plan.alpha = float(value)
                case "sampling":
                    plan.sampling = value.lower()
                case "seed":
                    plan.seed = value
                case "omega":
                    plan.omega = int(value)
                case "confidence":
                    plan.confidence = float(value)
                case _:
                    raise ValueError(f"Unknown plan key {key!r}")
        return plan


class AuditPlanValidator:
    """
    Validator for AuditPlan.
    """
    def __init__(self):
        self.latest_errors = []

    def validate(self, plan: AuditPlan) -> bool:
        main_validators = {
            self._validate_t: [plan.t],
            self._validate_alpha: [plan.alpha],
            self._validate_sampling: [plan.sampling],
            self._validate_omega: [plan.omega],
            self._validate_confidence: [plan.confidence],
        }
        self.latest_errors = [e for e in (x(*y) for x, y in main_validators.items()) if e is not None]
        return not self.latest_errors

    @staticmethod
    def _validate_t(t: int) -> str | None:
        if t < 1:
            return f"t must be at least 1, got {t}"
        return None

    @staticmethod
    def _validate_alpha(alpha: float) -> str | None:
        if not 0 < alpha < 1:
            return f"alpha must lie in (0, 1), got {alpha}"
        return None

    @staticmethod
    def _validate_sampling(sampling: str) -> str | None:
        if sampling not in SAMPLING_NAMES:
            return f"sampling must be 'with' or 'without', got {sampling!r}"
        return None

    @staticmethod
    def _validate_omega(omega: int | None) -> str | None:
        if omega is not None and omega < 1:
            return f"omega must be positive, got {omega}"
        return None

    @staticmethod
    def _validate_confidence(confidence: float | None) -> str | None:
        if confidence is not None and not 0 < confidence < 1:
            return f"confidence must lie in (0, 1), got {confidence}"
        return None


@dataclass
class ServerConfig:
    """Everything the prover daemon needs at startup. The daemon never receives a key."""
    scheme: SchemeConfig
    blocks: Path
    tag: Path | None = None
    fault: str | None = None
    host: str = "127.0.0.1"
    port: int = 0
    unit: int = 0


def parse_endpoint(text: str) -> tuple[str, int]:
    """'host:port' -> (host, port)."""
    host, sep, port = text.rpartition(":")
    if not sep or not port.isdigit():
        raise ValueError(f"Endpoint {text!r} is not host:port")
    return host or "127.0.0.1", int(port)
