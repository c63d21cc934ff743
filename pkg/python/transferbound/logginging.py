"""
Logging setup of the command line. The library modules only create loggers.
"""
import enum
import logging
import sys
from typing import Optional
from typing import TextIO

LOG_FORMAT = "{level_color}{levelname: <7}{black_bold} | {asctime} [{name}]{reset} {level_color}{message}"


class LogColor(enum.Enum):
    """
    ANSI escape codes of the few colors used in the command-line output.
    """

    reset = "\x1b[0m"
    black_bold = "\x1b[30;1m"
    red = "\x1b[31m"
    red_bold = "\x1b[31;1m"
    green = "\x1b[32m"
    yellow = "\x1b[33m"
    blue = "\x1b[34m"
    white_faint = "\x1b[37;2m"


class ColoredFormatter(logging.Formatter):
    """
    A logging formatter coloring each record based on its level.

    Colors are exposed to the format string as record attributes, like
    ``{level_color}`` or ``{red}``, and resolve to empty strings when disabled.
    Messages can also embed colors with ``extra={"resolve_color": True}``::

        LOGGER.info("verdict: {green}Positive{reset}", extra={"resolve_color": True})
    """

    colors = LogColor

    COLOR_BY_LEVEL = {
        logging.DEBUG: colors.white_faint,
        logging.INFO: colors.blue,
        logging.WARNING: colors.yellow,
        logging.ERROR: colors.red,
        logging.CRITICAL: colors.red_bold,
    }

    class _KeepMissing(dict):
        def __missing__(self, key):
            return f"{{{key}}}"

    def __init__(self, disable_coloring: bool = False, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self._disable_coloring = disable_coloring
        self._mapping = self._KeepMissing(
            {color.name: "" if disable_coloring else color.value for color in self.colors}
        )

    def format(self, record: logging.LogRecord) -> str:
        on = not self._disable_coloring
        level_color = self.COLOR_BY_LEVEL.get(record.levelno)
        record.level_color = level_color.value if (level_color and on) else ""
        for color in self.colors:
            setattr(record, color.name, color.value if on else "")

        message = super().format(record)

        if getattr(record, "resolve_color", False):
            message = message.format_map(self._mapping)

        if on and not message.endswith(self.colors.reset.value):
            message += self.colors.reset.value

        return message


def configure_logging(
    level: int = logging.INFO,
    colored: bool = True,
    stream: Optional[TextIO] = None,
) -> logging.Handler:
    """
    Route every record of the root logger to a single colored stream handler.

    Calling it again replaces the handler installed by the previous call.

    Args:
        level: minimal level of the records displayed
        colored: False to strip the ANSI colors, for files or CI logs
        stream: where to write, default to stderr

    Returns:
        the installed handler
    """
    root = logging.getLogger()
    for handler in list(root.handlers):
        if getattr(handler, "_transferbound", False):
            root.removeHandler(handler)

    handler = logging.StreamHandler(stream or sys.stderr)
    handler._transferbound = True
    handler.setFormatter(
        ColoredFormatter(disable_coloring=not colored, fmt=LOG_FORMAT, style="{")
    )
    root.addHandler(handler)
    root.setLevel(level)
    return handler
