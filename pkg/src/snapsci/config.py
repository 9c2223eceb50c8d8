"""Run configuration: flat key=value files with command-line overrides."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

MODES = ("simulate", "reconstruct", "benchmark", "verify-theory", "make-masks")

REQUIRED_KEYS = {
    "simulate": ("kind", "cube", "mask", "out"),
    "reconstruct": ("meas", "mask", "out", "algorithm"),
    "benchmark": ("dir", "out_csv", "algorithm"),
    "verify-theory": (),
    "make-masks": ("out", "kind"),
}


class ConfigError(ValueError):
    """Bad or missing configuration before any compute starts."""


@dataclass
class RunConfig:
    """One CLI invocation: a mode plus flat string key=value settings."""

    mode: str
    values: dict[str, str] = field(default_factory=dict)

    def validate(self) -> None:
        if self.mode not in MODES:
            raise ConfigError(f"unknown mode {self.mode!r}")
        missing = [k for k in REQUIRED_KEYS[self.mode] if k not in self.values]
        if missing:
            raise ConfigError(f"mode {self.mode} needs keys: {', '.join(missing)}")
        for key in ("cube", "mask", "meas", "truth", "source", "dir"):
            if key in self.values and not Path(self.values[key]).exists():
                raise ConfigError(f"{key} path does not exist: {self.values[key]}")

    # typed getters -------------------------------------------------------
    def get(self, key: str, default: str | None = None) -> str | None:
        return self.values.get(key, default)

    def get_int(self, key: str, default: int | None = None) -> int | None:
        if key not in self.values:
            return default
        try:
            return int(self.values[key])
        except ValueError as exc:
            raise ConfigError(f"{key} must be an integer: {self.values[key]!r}") from exc

    def get_float(self, key: str, default: float | None = None) -> float | None:
        if key not in self.values:
            return default
        try:
            return float(self.values[key])
        except ValueError as exc:
            raise ConfigError(f"{key} must be a number: {self.values[key]!r}") from exc

    def get_bool(self, key: str, default: bool = False) -> bool:
        raw = self.values.get(key)
        if raw is None:
            return default
        if raw.lower() in ("1", "true", "yes", "on"):
            return True
        if raw.lower() in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"{key} must be a boolean: {raw!r}")

    # serialization -------------------------------------------------------
    def to_text(self) -> str:
        lines = [f"mode={self.mode}"]
        lines += [f"{k}={self.values[k]}" for k in sorted(self.values)]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str, mode: str | None = None) -> "RunConfig":
        values: dict[str, str] = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"line {lineno}: expected key=value, got {raw!r}")
            key, _, value = line.partition("=")
            values[key.strip()] = value.strip()
        file_mode = values.pop("mode", None)
        final_mode = mode or file_mode
        if final_mode is None:
            raise ConfigError("no mode given on the command line or in the file")
        return cls(final_mode, values)

    @classmethod
    def load(
        cls, mode: str, config_path: str | None, overrides: dict[str, str]
    ) -> "RunConfig":
        values: dict[str, str] = {}
        if config_path is not None:
            path = Path(config_path)
            if not path.exists():
                raise ConfigError(f"config file not found: {config_path}")
            values.update(cls.from_text(path.read_text(), mode=mode).values)
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(mode, values)
