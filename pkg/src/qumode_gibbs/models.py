"""Hamiltonians: single qubit, Kitaev ring in spin form, periodic transverse-field Ising.

Both chains use the field convention ``-h sum Z``. For the Kitaev ring the
field is ``h = mu/2`` so that ``lambda = mu/(2J) = h/J`` and the critical
point sits at ``lambda = 1`` for both models.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import ConfigError, DomainError
from .evolution import PauliHamiltonian

KINDS = ("single", "kitaev", "ising")


def single_qubit_hamiltonian(g: float, c: float, shifted: bool | None = None) -> PauliHamiltonian:
    """``g (X + c)`` with eigenvalues ``g(c -+ 1)``.

    ``shifted=None`` moves the spectrum to start at zero only when ``c < 1``
    (a negative eigenvalue); ``True``/``False`` force the choice.
    """
    if not g > 0:
        raise DomainError(f"g must be positive, got {g}")
    H = PauliHamiltonian(1, ((g, "X0"),), g * c)
    if shifted is None:
        shifted = c < 1.0
    return H.tight_shifted() if shifted else H


def _field_terms(L: int, h: float):
    return [(-h, {i: "Z"}) for i in range(L)]


def kitaev_spin_hamiltonian(L: int, J: float, mu: float, shifted: bool = True) -> PauliHamiltonian:
    """Spin form of the periodic Kitaev ring with ``lambda = mu/(2J)``.

    ``-h sum_i Z_i - J sum_{i<L-1} X_i X_{i+1} - J Y_0 (prod_{0<i<L-1} Z_i) Y_{L-1}``
    with ``h = mu/2``. When ``shifted`` the tight constant is added so that the
    smallest eigenvalue is zero.
    """
    if L < 2:
        raise DomainError("Kitaev ring needs L >= 2")
    if not J > 0:
        raise DomainError("J must be positive")
    h = mu / 2.0
    terms = _field_terms(L, h)
    terms += [(-J, {i: "X", i + 1: "X"}) for i in range(L - 1)]
    string = {0: "Y", L - 1: "Y"}
    string.update({i: "Z" for i in range(1, L - 1)})
    terms.append((-J, string))
    H = PauliHamiltonian(L, tuple(terms))
    return H.tight_shifted() if shifted else H


def ising_pbc_hamiltonian(L: int, J: float, h: float, shifted: bool = True) -> PauliHamiltonian:
    """``-h sum Z - J sum_i X_i X_{i+1}`` on a ring (``X_{L-1} X_0`` closes it)."""
    if L < 3:
        raise DomainError(
            f"Ising ring needs L >= 3; L={L} would count the single bond twice"
        )
    if not J > 0:
        raise DomainError("J must be positive")
    terms = _field_terms(L, h)
    terms += [(-J, {i: "X", (i + 1) % L: "X"}) for i in range(L)]
    H = PauliHamiltonian(L, tuple(terms))
    return H.tight_shifted() if shifted else H


_PARAMS = {
    "single": {"g": 1.0, "c": 1.0},
    "kitaev": {"L": 2, "J": 1.0, "mu": 2.0},
    "ising": {"L": 3, "J": 1.0, "h": 1.0},
}


@dataclass(frozen=True)
class ModelSpec:
    """Model family plus parameters, e.g. ``ModelSpec.parse("kitaev:L=4,J=1,mu=1.6")``."""

    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown model kind {self.kind!r}; expected one of {KINDS}")
        unknown = set(self.params) - set(_PARAMS[self.kind]) - {"lambda"}
        if unknown:
            raise ConfigError(f"unknown parameters {sorted(unknown)} for {self.kind}")
        merged = dict(_PARAMS[self.kind])
        merged.update(self.params)
        if "lambda" in merged:
            lam = float(merged.pop("lambda"))
            if self.kind == "kitaev":
                merged["mu"] = 2.0 * lam * float(merged["J"])
            elif self.kind == "ising":
                merged["h"] = lam * float(merged["J"])
            else:
                raise ConfigError("lambda is defined only for chains")
        if "L" in merged:
            merged["L"] = int(merged["L"])
            if merged["L"] < 2:
                raise ConfigError("chains need L >= 2")
        for k, v in merged.items():
            if k != "L":
                merged[k] = float(v)
        if self.kind == "single" and not merged["g"] > 0:
            raise ConfigError("g must be positive")
        if self.kind != "single" and not merged["J"] > 0:
            raise ConfigError("J must be positive")
        object.__setattr__(self, "params", merged)

    @classmethod
    def parse(cls, text: str) -> "ModelSpec":
        kind, _, rest = text.strip().partition(":")
        params = {}
        for item in filter(None, (s.strip() for s in rest.split(","))):
            key, eq, value = item.partition("=")
            if not eq:
                raise ConfigError(f"expected key=value in model string, got {item!r}")
            try:
                params[key.strip()] = float(value)
            except ValueError as exc:
                raise ConfigError(f"bad number {value!r} for {key}") from exc
        return cls(kind.strip().lower(), params)

    def __str__(self) -> str:
        body = ",".join(f"{k}={v:g}" if isinstance(v, float) else f"{k}={v}" for k, v in self.params.items())
        return f"{self.kind}:{body}"

    @property
    def n_sites(self) -> int:
        return 1 if self.kind == "single" else self.params["L"]

    @property
    def field(self) -> float:
        """Coefficient ``h`` of ``-h sum Z`` (zero for the single qubit)."""
        if self.kind == "kitaev":
            return self.params["mu"] / 2.0
        if self.kind == "ising":
            return self.params["h"]
        return 0.0

    @property
    def coupling_ratio(self) -> float:
        if self.kind == "kitaev":
            return self.params["mu"] / (2.0 * self.params["J"])
        if self.kind == "ising":
            return self.params["h"] / self.params["J"]
        raise ConfigError("coupling ratio is defined only for chains")

    def with_field(self, h: float) -> "ModelSpec":
        if self.kind == "kitaev":
            return ModelSpec("kitaev", {**self.params, "mu": 2.0 * h})
        if self.kind == "ising":
            return ModelSpec("ising", {**self.params, "h": h})
        raise ConfigError("the single-qubit model has no field")

    def hamiltonian(self, shifted: bool = True) -> PauliHamiltonian:
        p = self.params
        if self.kind == "single":
            return single_qubit_hamiltonian(p["g"], p["c"], None if shifted else False)
        if self.kind == "kitaev":
            return kitaev_spin_hamiltonian(p["L"], p["J"], p["mu"], shifted)
        return ising_pbc_hamiltonian(p["L"], p["J"], p["h"], shifted)
