"""
logging_config.py
This file contains the code for configuring the vidmark loggers.
"""

"""
NOTE: the logging profile is picked from the ENV environment variable
(default | development | production). python-dotenv is loaded by config.config,
so a .env file works as long as config.config is imported first (it is, below).
"""

import inspect
import logging
import os
import sys
from typing import Any, Dict, Optional

from config.config import vidmark_config

DEFAULT_PROFILE = "default"


def load_config() -> Dict[str, Any]:
    logging_config = vidmark_config.get("logging", {})
    if not logging_config:
        raise RuntimeError("Failed to load the logger configuration: no 'logging' section")

    acceptable_envs = set(logging_config.keys())
    env = os.environ.get("ENV") or DEFAULT_PROFILE
    if env not in acceptable_envs:
        raise ValueError(
            f"ENV value '{env}' is not set to one of the acceptable values: {', '.join(sorted(acceptable_envs))}"
        )

    # profile values win over the default profile
    default_config = logging_config.get(DEFAULT_PROFILE, {})
    env_config = logging_config.get(env, {})
    return {**default_config, **env_config}


class CustomLoggerAdapter(logging.LoggerAdapter):
    """Prefixes each message with the class name of the calling method, if any."""

    def process(self, msg, kwargs):
        caller = inspect.currentframe()
        # skip this module and the logging package up to the frame that issued the call
        while caller is not None and caller.f_globals.get("__name__") in (__name__, "logging"):
            caller = caller.f_back
        local_self = caller.f_locals.get("self") if caller is not None else None
        class_name = type(local_self).__name__ if local_self is not None else ""
        del caller

        if class_name:
            msg = f"{class_name}: {msg}"
        return msg, kwargs


def _configure_handlers(
    logger: logging.Logger,
    log_level,
    log_to_console: bool,
    log_to_file: bool,
    log_format: str,
    date_format: str,
    log_file_path: str,
) -> None:
    # drop existing handlers so repeated get_logger calls do not duplicate output
    for handler in logger.handlers[:]:
        logger.removeHandler(handler)

    logger.setLevel(log_level)
    formatter = logging.Formatter(log_format, datefmt=date_format)

    if log_to_console:
        # stderr keeps stdout free for the CLI's reports
        console_handler = logging.StreamHandler(sys.stderr)
        console_handler.setLevel(log_level)
        console_handler.setFormatter(formatter)
        logger.addHandler(console_handler)

    if log_to_file:
        file_handler = logging.FileHandler(log_file_path)
        file_handler.setLevel(log_level)
        file_handler.setFormatter(formatter)
        logger.addHandler(file_handler)


def _get_log_file_path(config_path: Optional[str] = None) -> str:
    project_root = vidmark_config.get("proj_root_dir")

    if config_path:
        log_file_path = (
            config_path
            if os.path.isabs(config_path)
            else os.path.join(project_root, config_path)
        )
    else:
        project_name = os.path.basename(project_root)
        log_file_path = os.path.join(project_root, "logs", f"{project_name}.log")

    log_directory = os.path.dirname(log_file_path)
    try:
        os.makedirs(log_directory, exist_ok=True)
    except OSError as e:
        raise RuntimeError(f"Failed to create logs directory at {log_directory}. Error: {e}")

    return log_file_path


def get_logger(
    name: str,
    log_level: Optional[int] = None,
    log_to_console: Optional[bool] = None,
    log_to_file: Optional[bool] = None,
    log_format: Optional[str] = None,
    date_format: Optional[str] = None,
    log_file_path: Optional[str] = None,
) -> CustomLoggerAdapter:
    config = load_config()
    logger = logging.getLogger(name)

    # explicit arguments override the profile
    log_level = log_level or config["log_level"]
    log_to_console = (
        log_to_console if log_to_console is not None else config["log_to_console"]
    )
    log_to_file = log_to_file if log_to_file is not None else config["log_to_file"]
    log_format = log_format or config["log_format"]
    date_format = date_format or config["date_format"]
    if log_to_file:
        log_file_path = log_file_path or _get_log_file_path(config.get("log_file_path"))

    _configure_handlers(
        logger,
        log_level=log_level,
        log_to_console=log_to_console,
        log_to_file=log_to_file,
        log_format=log_format,
        date_format=date_format,
        log_file_path=log_file_path or "",
    )

    logger.propagate = False
    logger_adapter = CustomLoggerAdapter(logger, {})
    if logger.level == logging.DEBUG:
        logger_adapter.debug(f"*** Initialized '{name}' LOGGER with level DEBUG")
    return logger_adapter


def initialize_root_logger() -> None:
    config = load_config()
    log_file_path = (
        _get_log_file_path(config.get("log_file_path")) if config["log_to_file"] else ""
    )

    root_logger = logging.getLogger()
    _configure_handlers(
        root_logger,
        log_level=config["log_level"],
        log_to_console=config["log_to_console"],
        log_to_file=config["log_to_file"],
        log_format=config["log_format"],
        date_format=config["date_format"],
        log_file_path=log_file_path,
    )

    CustomLoggerAdapter(root_logger, {}).debug(
        f"Root LOGGER initialized: level={config['log_level']} "
        f"console={config['log_to_console']} file={config['log_to_file']} "
        f"path={log_file_path}"
    )
