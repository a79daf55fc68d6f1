from pathlib import Path
import json
import yaml

from src.utils.errors import ConfigError


def get_project_root() -> Path:
    """Returns the project root directory."""
    return Path(__file__).parent.parent.parent


def get_config_dir() -> Path:
    return get_project_root() / "config"


def get_default_output_dir() -> Path:
    return get_project_root() / "out"


def resolve_config_path(path) -> Path:
    """Accept an absolute/relative path or a bare name inside config/."""
    path = Path(path)
    if path.exists():
        return path
    candidate = get_config_dir() / path
    if candidate.exists():
        return candidate
    raise ConfigError("path", f"configuration file not found: {path}")


def load_document(path):
    """Load a JSON or YAML configuration document into a dict."""
    config_path = resolve_config_path(path)
    text = config_path.read_text(encoding="utf-8")
    try:
        if config_path.suffix.lower() in (".yaml", ".yml"):
            document = yaml.safe_load(text)
        else:
            document = json.loads(text)
    except (json.JSONDecodeError, yaml.YAMLError) as e:
        raise ConfigError("document", f"cannot parse {config_path.name}: {e}") from e
    if not isinstance(document, dict):
        raise ConfigError("document", "top level must be a mapping")
    return document
