import logging
from io import StringIO

from transferbound.logginging import ColoredFormatter
from transferbound.logginging import LogColor
from transferbound.logginging import configure_logging


def test__ColoredFormatter():
    stream = StringIO()
    handler = logging.StreamHandler(stream)
    formatter = ColoredFormatter(
        fmt="{level_color}{levelname}{red}red {message}",
        style="{",
    )
    handler.setLevel(logging.DEBUG)
    handler.setFormatter(formatter)
    logger = logging.getLogger("test__ColoredFormatter")
    logger.addHandler(handler)

    logger.error("TEST ERROR message")
    logger.warning(
        "verdict {green}Positive{reset} for Rs1",
        extra={"resolve_color": True},
    )

    warning_color = ColoredFormatter.COLOR_BY_LEVEL[logging.WARNING]
    result = stream.getvalue().split("\n")
    expected = (
        f"{warning_color.value}WARNING{LogColor.red.value}red verdict "
        f"{LogColor.green.value}Positive{LogColor.reset.value} for Rs1"
        f"{LogColor.reset.value}"
    )
    assert result[-2] == expected


def test__ColoredFormatter__disabled():
    stream = StringIO()
    handler = logging.StreamHandler(stream)
    handler.setFormatter(
        ColoredFormatter(disable_coloring=True, fmt="{level_color}{levelname} {message}", style="{")
    )
    logger = logging.getLogger("test__ColoredFormatter__disabled")
    logger.addHandler(handler)
    logger.warning("axis {blue}x{reset}", extra={"resolve_color": True})
    assert stream.getvalue() == "WARNING axis x\n"


def test__configure_logging():
    stream = StringIO()
    configure_logging(level=logging.DEBUG, colored=False, stream=stream)
    handler = configure_logging(level=logging.DEBUG, colored=False, stream=stream)
    root = logging.getLogger()
    try:
        assert sum(getattr(h, "_transferbound", False) for h in root.handlers) == 1
        logging.getLogger("transferbound.test").debug("probing omega=1")
        assert "DEBUG   | " in stream.getvalue()
        assert "[transferbound.test] probing omega=1" in stream.getvalue()
        assert "\x1b[" not in stream.getvalue()
    finally:
        root.removeHandler(handler)
        root.setLevel(logging.WARNING)
