"""Run configuration: providers, cache, concurrency, temperatures."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .gateway import (
    DEFAULT_MAX_IN_FLIGHT,
    DEFAULT_MAX_OUTPUT_TOKENS,
    DEFAULT_REFUSAL_PATTERNS,
    DEFAULT_TEMPERATURE_CEILING,
    Gateway,
    HttpProvider,
    ReplayProvider,
)


class ConfigError(ValueError):
    pass


@dataclass
class AppConfig:
    base_dir: Path
    store_root: Path
    cache_path: Path | None
    temperature: float = 0.0
    temperature_ceiling: float = DEFAULT_TEMPERATURE_CEILING
    max_output_tokens: int = DEFAULT_MAX_OUTPUT_TOKENS
    evaluator_concurrency: int = 4
    segment_concurrency: int = 1
    max_in_flight: int = DEFAULT_MAX_IN_FLIGHT
    allow_any_language: bool = False
    editor_token_budget: int = 1000
    bootstrap_resamples: int = 1000
    bootstrap_seed: int = 42
    refusal_patterns: tuple[str, ...] = DEFAULT_REFUSAL_PATTERNS
    providers: dict = field(default_factory=dict)
    models: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict)

    @classmethod
    def load(cls, path: str | Path) -> "AppConfig":
        path = Path(path)
        try:
            raw = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, ValueError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        base = path.parent

        def resolve(value: str | None) -> Path | None:
            if value is None:
                return None
            p = Path(value)
            return p if p.is_absolute() else base / p

        return cls(
            base_dir=base,
            store_root=resolve(raw.get("store_root", "store")),
            cache_path=resolve(raw.get("cache_path")),
            temperature=float(raw.get("temperature", 0.0)),
            temperature_ceiling=float(
                raw.get("temperature_ceiling", DEFAULT_TEMPERATURE_CEILING)
            ),
            max_output_tokens=int(raw.get("max_output_tokens", DEFAULT_MAX_OUTPUT_TOKENS)),
            evaluator_concurrency=int(raw.get("evaluator_concurrency", 4)),
            segment_concurrency=int(raw.get("segment_concurrency", 1)),
            max_in_flight=int(raw.get("max_in_flight", DEFAULT_MAX_IN_FLIGHT)),
            allow_any_language=bool(raw.get("allow_any_language", False)),
            editor_token_budget=int(raw.get("editor_token_budget", 1000)),
            bootstrap_resamples=int(raw.get("bootstrap_resamples", 1000)),
            bootstrap_seed=int(raw.get("bootstrap_seed", 42)),
            refusal_patterns=tuple(
                raw.get("refusal_patterns", DEFAULT_REFUSAL_PATTERNS)
            ),
            providers=dict(raw.get("providers", {})),
            models=dict(raw.get("models", {})),
            raw=raw,
        )

    def build_gateway(self) -> Gateway:
        provider_objects: dict[str, object] = {}
        for name, spec in self.providers.items():
            kind = spec.get("type")
            if kind == "replay":
                fixtures = spec.get("fixtures")
                if fixtures is None:
                    raise ConfigError(f"provider {name!r}: replay needs a fixtures path")
                fixtures_path = Path(fixtures)
                if not fixtures_path.is_absolute():
                    fixtures_path = self.base_dir / fixtures_path
                provider_objects[name] = ReplayProvider(fixtures_path)
            elif kind == "http":
                endpoint = spec.get("endpoint")
                if not endpoint:
                    raise ConfigError(f"provider {name!r}: http needs an endpoint")
                provider_objects[name] = HttpProvider(
                    name=name, endpoint=endpoint,
                    timeout_s=float(spec.get("timeout_s", 60.0)),
                )
            else:
                raise ConfigError(f"provider {name!r}: unknown type {kind!r}")

        model_providers = {}
        for model_id, provider_name in self.models.items():
            if provider_name not in provider_objects:
                raise ConfigError(
                    f"model {model_id!r} points at undefined provider {provider_name!r}"
                )
            model_providers[model_id] = provider_objects[provider_name]

        return Gateway(
            providers=model_providers,
            cache_path=self.cache_path,
            temperature_ceiling=self.temperature_ceiling,
            max_in_flight=self.max_in_flight,
            refusal_patterns=self.refusal_patterns,
        )
