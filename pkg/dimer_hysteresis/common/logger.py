import logging

from colorama import Fore, Style, init

init(autoreset=True)  # Initialize colorama

PACKAGE_LOGGER = "dimer_hysteresis"


def _level_format(colour: str) -> str:
    return (
        Style.RESET_ALL
        + "["
        + Fore.YELLOW
        + "%(asctime)s"
        + Style.RESET_ALL
        + "]: "
        + colour
        + "%(levelname)s: %(message)s"
        + Style.RESET_ALL
    )


class ColoredFormatter(logging.Formatter):
    FORMATS = {
        logging.DEBUG: _level_format(Fore.CYAN),
        logging.INFO: _level_format(Fore.GREEN),
        logging.WARNING: _level_format(Fore.YELLOW),
        logging.ERROR: _level_format(Fore.RED),
        logging.CRITICAL: _level_format(Fore.RED + Style.BRIGHT),
    }

    def format(self, record: logging.LogRecord) -> str:
        log_fmt = self.FORMATS.get(record.levelno)
        formatter = logging.Formatter(log_fmt, datefmt="%Y-%m-%d %H:%M:%S")
        return formatter.format(record)


def setup_logging(debug: bool = False) -> logging.Logger:
    """Attach the coloured console handler to the package logger

    Calling it twice does not add a second handler.
    """
    logger = logging.getLogger(PACKAGE_LOGGER)
    if not any(isinstance(h.formatter, ColoredFormatter) for h in logger.handlers):
        handler = logging.StreamHandler()
        handler.setFormatter(ColoredFormatter())
        logger.addHandler(handler)
    logger.setLevel(logging.DEBUG if debug else logging.INFO)
    logger.propagate = False
    return logger
