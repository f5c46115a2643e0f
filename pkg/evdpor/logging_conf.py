import copy
import logging
import logging.config
from typing import Optional

logging_dict = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "colored_console": {
            "class": "coloredlogs.ColoredFormatter",
            "format": "[%(asctime)s][%(levelname)s] - %(message)s",
            "datefmt": "%d-%m-%Y %H:%M:%S",
        },
        "plain_text": {
            "format": "[%(asctime)s][%(levelname)s] - %(message)s",
            "datefmt": "%d-%m-%Y %H:%M:%S",
        },
    },
    "handlers": {
        "console": {
            "class": "logging.StreamHandler",
            "level": "WARNING",
            "formatter": "colored_console",
            "stream": "ext://sys.stderr",
        },
    },
    "loggers": {
        "evdpor": {
            "handlers": ["console"],
            "level": "WARNING",
            "propagate": False,
        },
    },
}


def setup_logging(level: str = "WARNING", log_file: Optional[str] = None) -> None:
    """Apply the logging configuration

    Args:
        level: Level for the evdpor loggers and the console handler
        log_file: Also write plain-text records to this file
    """
    config = copy.deepcopy(logging_dict)
    config["handlers"]["console"]["level"] = level
    config["loggers"]["evdpor"]["level"] = level
    if log_file:
        config["handlers"]["file"] = {
            "class": "logging.FileHandler",
            "filename": log_file,
            "level": level,
            "formatter": "plain_text",
        }
        config["loggers"]["evdpor"]["handlers"].append("file")
    logging.config.dictConfig(config)
