"""Analysis configuration: defaults, validation, and key=value file parsing."""

from __future__ import annotations

from dataclasses import dataclass, fields

from .exceptions import ParseError
from .validation import check_fraction, check_positive_int

__all__ = ["AnalysisConfig", "parse_config_file"]

#: Help text per configuration key; also the whitelist of accepted keys.
CONFIG_KEYS = {
    "span": "loess span for the seasonal mean/sd curves, in (0, 1] (default 0.3)",
    "k_max": "number of sliding start years in the coefficient curve (default 30)",
    "k_compare": "two start-year offsets whose slopes are compared, e.g. 20,30",
    "replicates": "bootstrap replicates per cell and offset (default 100)",
    "missing_threshold": "maximum tolerated missing-day fraction per cell (default 0.2)",
    "seed": "master seed; every cell derives its own substream (default 0)",
    "cluster_k_max": "largest component count scanned during clustering (default 20)",
}


@dataclass(frozen=True)
class AnalysisConfig:
    """Settings for the per-cell analysis pipeline and curve clustering."""

    span: float = 0.3
    k_max: int = 30
    k_compare: tuple = (20, 30)
    replicates: int = 100
    missing_threshold: float = 0.2
    seed: int = 0
    cluster_k_max: int = 20

    def __post_init__(self):
        check_fraction(self.span, "span")
        check_positive_int(self.k_max, "k_max")
        object.__setattr__(self, "k_compare", tuple(int(k) for k in self.k_compare))
        if len(self.k_compare) != 2 or any(k < 0 for k in self.k_compare):
            raise ValueError(f"k_compare must be two non-negative offsets, got {self.k_compare}")
        if self.k_compare[0] >= self.k_compare[1]:
            raise ValueError(f"k_compare offsets must increase, got {self.k_compare}")
        check_positive_int(self.replicates, "replicates")
        check_fraction(self.missing_threshold, "missing_threshold", inclusive_low=True)
        if not isinstance(self.seed, int):
            raise ValueError(f"seed must be an integer, got {self.seed!r}")
        check_positive_int(self.cluster_k_max, "cluster_k_max")

    def replace(self, **updates) -> "AnalysisConfig":
        current = {f.name: getattr(self, f.name) for f in fields(self)}
        current.update(updates)
        return AnalysisConfig(**current)

    def to_items(self) -> list:
        """Sorted (key, canonical string value) pairs, e.g. for manifests."""
        out = []
        for f in sorted(fields(self), key=lambda f: f.name):
            value = getattr(self, f.name)
            if isinstance(value, tuple):
                value = ",".join(str(v) for v in value)
            out.append((f.name, str(value)))
        return out


def _parse_value(key: str, raw: str):
    raw = raw.strip()
    if key == "k_compare":
        parts = raw.strip("[]() ").replace(";", ",").split(",")
        return tuple(int(p.strip()) for p in parts if p.strip())
    if key in ("span", "missing_threshold"):
        return float(raw)
    return int(raw)


def parse_config_file(path) -> AnalysisConfig:
    """Read ``key = value`` lines into an AnalysisConfig.

    Blank lines and ``#`` comments are ignored.  Unknown keys and malformed
    values raise :class:`ParseError` with the offending line number.
    """
    settings = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            if "=" not in text:
                raise ParseError(f"expected 'key = value', got {text!r}", line_number=line_no)
            key, _, raw = text.partition("=")
            key = key.strip()
            if key not in CONFIG_KEYS:
                raise ParseError(
                    f"unknown configuration key {key!r}; valid keys: "
                    f"{', '.join(sorted(CONFIG_KEYS))}",
                    line_number=line_no,
                )
            if key in settings:
                raise ParseError(f"duplicate configuration key {key!r}", line_number=line_no)
            try:
                settings[key] = _parse_value(key, raw)
            except ValueError as exc:
                raise ParseError(f"bad value for {key!r}: {exc}", line_number=line_no) from exc
    try:
        return AnalysisConfig(**settings)
    except ValueError as exc:
        raise ParseError(str(exc)) from exc
