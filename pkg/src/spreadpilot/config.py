"""Link configuration: parameters, validation and the flat ``key = value`` file format."""

from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

logger = logging.getLogger(__name__)

CONSTELLATIONS = ("QPSK", "16QAM", "64QAM")
CODE_RATES = ("1", "1/2", "3/4", "5/6")
CHANNELS = ("F1", "P1", "FLAT", "CUSTOM")
EQUALIZERS = ("ZF", "MMSE")
CHANNEL_MODES = ("freq", "time")
CSI_MODES = ("estimated", "perfect")


class ConfigError(ValueError):
    """Raised when a LinkConfig violates one of its invariants."""

    def __init__(self, invariant: str, message: str):
        super().__init__(f"{invariant}: {message}")
        self.invariant = invariant


def _is_pow2(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class LinkConfig:
    """All parameters of one simulated link.

    ``spreading_total`` is derived from ``lt * lf`` by :func:`validate_config`;
    leave it at 0 when constructing by hand.
    """

    fft_size: int = 2048
    guard_samples: int = 512
    bandwidth_hz: float = 8e6
    lt: int = 32
    lf: int = 2
    spreading_total: int = 0
    pilot_index: int = 1
    boost: float = 1.0
    constellation: str = "16QAM"
    code_rate: str = "3/4"
    channel: str = "F1"
    channel_file: str = ""
    channel_mode: str = "time"
    snr_grid: tuple[float, ...] = ()
    master_seed: int = 0
    equalizer: str = "ZF"
    csi: str = "estimated"
    baseline_mode: bool = False
    n_symbols: int = 32
    n_carriers: int = 1728
    dvbt_data_carriers: int = 1512
    dvbt_pilot_density: float = 1 / 12
    dvbt_pilot_power: float = 16 / 9
    interleaver: bool = False
    oracle_si: bool = False
    target_errors: int = 100
    min_errors: int = 20
    max_bits: int = 10_000_000

    @property
    def L(self) -> int:
        return self.lt * self.lf

    @property
    def bits_per_symbol(self) -> int:
        return {"QPSK": 2, "16QAM": 4, "64QAM": 6}[self.constellation]

    @property
    def rate(self) -> Fraction:
        return Fraction(self.code_rate)

    @property
    def sample_period(self) -> float:
        """Elementary period T; 7/64 us for the 8 MHz DVB-T raster."""
        return 7.0 / (8.0 * self.bandwidth_hz)

    @property
    def symbol_duration(self) -> float:
        return (self.fft_size + self.guard_samples) * self.sample_period

    def replace(self, **changes) -> "LinkConfig":
        """Return a validated copy with ``changes`` applied."""
        if ("lt" in changes or "lf" in changes) and "spreading_total" not in changes:
            changes["spreading_total"] = 0
        return validate_config(dataclasses.replace(self, **changes))


def validate_config(cfg: LinkConfig) -> LinkConfig:
    """Check every invariant of ``cfg`` and fill in derived fields.

    Raises ConfigError naming the first violated invariant.
    """
    if cfg.fft_size <= 0:
        raise ConfigError("fft_size", f"must be positive, got {cfg.fft_size}")
    if cfg.guard_samples < 0:
        raise ConfigError("guard_samples", f"must be non-negative, got {cfg.guard_samples}")
    if cfg.bandwidth_hz <= 0:
        raise ConfigError("bandwidth_hz", f"must be positive, got {cfg.bandwidth_hz}")
    if cfg.lt <= 0 or cfg.lf <= 0:
        raise ConfigError("spreading", f"lt and lf must be positive, got lt={cfg.lt} lf={cfg.lf}")
    L = cfg.lt * cfg.lf
    if not _is_pow2(L):
        raise ConfigError("spreading_total", f"L={L} is not a power of two")
    if cfg.spreading_total not in (0, L):
        raise ConfigError("spreading_total", f"L={cfg.spreading_total} but lt*lf={L}")
    if not 1 <= cfg.pilot_index <= L:
        raise ConfigError("pilot_index", f"must lie in [1, {L}], got {cfg.pilot_index}")
    if not cfg.boost > 0:
        raise ConfigError("boost", f"must be positive, got {cfg.boost}")
    for name, allowed in (
        ("constellation", CONSTELLATIONS),
        ("code_rate", CODE_RATES),
        ("channel", CHANNELS),
        ("equalizer", EQUALIZERS),
        ("channel_mode", CHANNEL_MODES),
        ("csi", CSI_MODES),
    ):
        if getattr(cfg, name) not in allowed:
            raise ConfigError(name, f"{getattr(cfg, name)!r} not in {allowed}")
    if cfg.channel == "CUSTOM" and not cfg.channel_file:
        raise ConfigError("channel_file", "CUSTOM channel requires channel_file")
    if cfg.n_symbols <= 0 or cfg.n_symbols % cfg.lt:
        raise ConfigError("n_symbols", f"{cfg.n_symbols} is not a positive multiple of lt={cfg.lt}")
    if cfg.n_carriers <= 0 or cfg.n_carriers % cfg.lf:
        raise ConfigError("n_carriers", f"{cfg.n_carriers} is not a positive multiple of lf={cfg.lf}")
    if cfg.n_carriers >= cfg.fft_size:
        raise ConfigError("n_carriers", f"{cfg.n_carriers} active carriers do not fit fft_size={cfg.fft_size}")
    if not 0 <= cfg.dvbt_pilot_density < 1:
        raise ConfigError("dvbt_pilot_density", f"must lie in [0, 1), got {cfg.dvbt_pilot_density}")
    if cfg.min_errors > cfg.target_errors:
        raise ConfigError("min_errors", "must not exceed target_errors")
    if cfg.channel in ("F1", "P1", "CUSTOM"):
        # Local import: channel depends on config.
        from .channel import load_tap_set

        taps = load_tap_set(cfg.channel_file if cfg.channel == "CUSTOM" else cfg.channel)
        if taps.max_delay > cfg.guard_samples * cfg.sample_period:
            logger.warning(
                "channel delay spread %.3g s exceeds guard interval %.3g s",
                taps.max_delay,
                cfg.guard_samples * cfg.sample_period,
            )
    if cfg.spreading_total != L:
        cfg = dataclasses.replace(cfg, spreading_total=L)
    return cfg


# --- flat text format -------------------------------------------------------

_FIELDS = {f.name: f for f in dataclasses.fields(LinkConfig)}


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ", ".join(repr(float(v)) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _parse_value(name: str, text: str):
    kind = _FIELDS[name].type
    text = text.strip()
    if kind == "bool":
        low = text.lower()
        if low in ("true", "yes", "1", "on"):
            return True
        if low in ("false", "no", "0", "off"):
            return False
        raise ConfigError(name, f"not a boolean: {text!r}")
    try:
        if kind == "int":
            return int(text, 0)
        if kind == "float":
            return float(Fraction(text)) if "/" in text else float(text)
        if kind.startswith("tuple"):
            return tuple(float(v) for v in text.replace(",", " ").split())
    except ValueError as exc:
        raise ConfigError(name, f"cannot parse {text!r}") from exc
    return text


def dumps(cfg: LinkConfig) -> str:
    """Serialize to ``key = value`` lines in field order."""
    return "".join(f"{name} = {_format_value(getattr(cfg, name))}\n" for name in _FIELDS)


def parse_overrides(pairs: dict[str, str]) -> dict:
    out = {}
    for key, raw in pairs.items():
        if key not in _FIELDS:
            raise ConfigError(key, "unknown configuration key")
        out[key] = _parse_value(key, raw)
    return out


def loads(text: str, base: LinkConfig | None = None) -> LinkConfig:
    """Parse the flat format. Unlisted keys keep their ``base`` (or default) value."""
    pairs = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("syntax", f"line {lineno}: expected 'key = value'")
        key, value = line.split("=", 1)
        pairs[key.strip()] = value
    values = parse_overrides(pairs)
    return validate_config(dataclasses.replace(base or LinkConfig(), **values))


def load(path: str | Path, base: LinkConfig | None = None) -> LinkConfig:
    return loads(Path(path).read_text(), base)


def paper_preset(**changes) -> LinkConfig:
    """8 MHz, 2K FFT, GI 1/4 setup used for the published results."""
    return validate_config(dataclasses.replace(LinkConfig(), **changes))
