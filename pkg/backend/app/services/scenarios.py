"""
Scenario parsing, overrides and serialization.
"""
import json
from typing import Any, Dict, Optional, Sequence

from pydantic import ValidationError

from app.errors import ConfigError
from app.models.scenario import ScenarioConfig


def _parse_value(raw: str) -> Any:
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw


def apply_overrides(data: Dict[str, Any], overrides: Sequence[str]) -> Dict[str, Any]:
    """
    Apply `key=value` overrides with dotted paths onto raw scenario data.

    Values are read as JSON when possible (`0.9`, `true`, `{"kind": ...}`),
    otherwise kept as strings. Integer segments index into lists.
    """
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override '{item}' is not of the form key=value", field=item)
        path, raw = item.split("=", 1)
        keys = [key for key in path.strip().split(".") if key]
        if not keys:
            raise ConfigError(f"override '{item}' has an empty key", field=item)
        node: Any = data
        for key in keys[:-1]:
            if isinstance(node, list):
                try:
                    node = node[int(key)]
                except (ValueError, IndexError):
                    raise ConfigError(f"override path '{path}' has no element '{key}'", field=path)
            else:
                node = node.setdefault(key, {})
        last = keys[-1]
        if isinstance(node, list):
            try:
                node[int(last)] = _parse_value(raw)
            except (ValueError, IndexError):
                raise ConfigError(f"override path '{path}' has no element '{last}'", field=path)
        elif isinstance(node, dict):
            node[last] = _parse_value(raw)
        else:
            raise ConfigError(f"override path '{path}' does not lead to an object", field=path)
    return data


def _format_validation_error(exc: ValidationError) -> ConfigError:
    problems = []
    first_field = None
    for err in exc.errors():
        loc = ".".join(str(part) for part in err["loc"]) or "<root>"
        first_field = first_field or loc
        problems.append(f"{loc}: {err['msg']}")
    return ConfigError("invalid scenario: " + "; ".join(problems), field=first_field)


def config_from_dict(data: Dict[str, Any], overrides: Sequence[str] = ()) -> ScenarioConfig:
    if not isinstance(data, dict):
        raise ConfigError("scenario must be a JSON object")
    data = apply_overrides(json.loads(json.dumps(data)), overrides)
    try:
        return ScenarioConfig.model_validate(data)
    except ValidationError as exc:
        raise _format_validation_error(exc) from exc


def parse_config(
    text: str,
    overrides: Sequence[str] = (),
    seed_override: Optional[int] = None,
) -> ScenarioConfig:
    """Parse scenario JSON text into a validated config."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"syntax error at line {exc.lineno}, column {exc.colno}: {exc.msg}",
            line=exc.lineno,
            column=exc.colno,
        ) from exc
    config = config_from_dict(data, overrides)
    if seed_override is not None:
        config = config.model_copy(update={"seed": seed_override})
    return config


def serialize_config(config: ScenarioConfig) -> str:
    return config.model_dump_json(indent=2)
