import configparser
import logging
from pathlib import Path
from typing import Optional

from pydantic import ValidationError

from app.models.errors import ConfigError
from app.models.experiment import ExperimentConfig

logger = logging.getLogger(__name__)


def parse_config(text: str) -> ExperimentConfig:
    """INI text → validated ExperimentConfig; errors name the offending section.key."""
    parser = configparser.ConfigParser(
        inline_comment_prefixes=("#", ";"),
        comment_prefixes=("#", ";"),
        interpolation=None,
        delimiters=("=",),
    )
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError("syntax", str(exc).splitlines()[0]) from exc

    raw = {section: dict(parser[section]) for section in parser.sections()}
    try:
        return ExperimentConfig.model_validate(raw)
    except ValidationError as exc:
        error = exc.errors()[0]
        key = ".".join(str(part) for part in error["loc"]) or "config"
        raise ConfigError(key, error["msg"]) from exc


def load_config(path: str) -> ExperimentConfig:
    config_path = Path(path)
    if not config_path.is_file():
        raise ConfigError("config", f"file not found: {path}")
    config = parse_config(config_path.read_text(encoding="utf-8"))
    logger.debug(f"Loaded config {path}: method={config.solver.method.value}")
    return config


def with_overrides(config: ExperimentConfig, out: Optional[str] = None, seed: Optional[int] = None) -> ExperimentConfig:
    update = {}
    if out is not None:
        update["output"] = config.output.model_copy(update={"dir": out})
    if seed is not None:
        update["solver"] = config.solver.model_copy(update={"seed": seed})
    return config.model_copy(update=update) if update else config
