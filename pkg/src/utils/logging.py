import sys
import contextlib
import os
import tqdm
import logging

__all__ = [
    "write_log_to_file",
    "set_verbosity",
    "DEBUG",
    "INFO",
    "WARN",
    "ERROR",
    "PRINT"
]

_LOG_FORMAT = '%(asctime)s - %(levelname)s - %(message)s'


class TqdmLoggingHandler(logging.Handler):

    def __init__(self, level=logging.NOTSET):

        super(TqdmLoggingHandler, self).__init__(level)

    def emit(self, record):

        try:
            msg = self.format(record)
            tqdm.tqdm.write(msg, file=sys.stderr)
            self.flush()
        except (KeyboardInterrupt, SystemExit):
            raise
        except Exception:
            self.handleError(record)


def _init_global_logger():

    logger = logging.getLogger("lossyflow")
    logger.setLevel(logging.INFO)
    logger.propagate = False
    tqdm_handler = TqdmLoggingHandler()
    tqdm_handler.setFormatter(logging.Formatter(_LOG_FORMAT))
    logger.addHandler(tqdm_handler)

    return logger


class GlobalLogger(object):

    _GLOBAL_LOGGER = _init_global_logger()

    @staticmethod
    def write_log_to_file(log_file):
        """
        Redirect log information to file as well
        """
        log_dir = os.path.dirname(log_file)

        if log_dir and not os.path.exists(log_dir):
            os.makedirs(log_dir, exist_ok=True)

        file_handler = logging.FileHandler(log_file)
        file_handler.setFormatter(logging.Formatter(_LOG_FORMAT))

        GlobalLogger._GLOBAL_LOGGER.addHandler(file_handler)

    @staticmethod
    def set_verbosity(level):

        if isinstance(level, str):
            level = getattr(logging, level.upper())

        GlobalLogger._GLOBAL_LOGGER.setLevel(level)

    @staticmethod
    @contextlib.contextmanager
    def verbosity(level):
        old_level = GlobalLogger._GLOBAL_LOGGER.level
        GlobalLogger.set_verbosity(level)
        try:
            yield
        finally:
            GlobalLogger._GLOBAL_LOGGER.setLevel(old_level)


_global_logger = GlobalLogger._GLOBAL_LOGGER

write_log_to_file = GlobalLogger.write_log_to_file

set_verbosity = GlobalLogger.set_verbosity


def ERROR(string):
    _global_logger.error(string)


def INFO(string):
    _global_logger.info(string)


def WARN(string):
    _global_logger.warning(string)


def DEBUG(string):
    # formatting is skipped unless debug output is on
    if _global_logger.isEnabledFor(logging.DEBUG):
        _global_logger.debug(string() if callable(string) else string)


def PRINT(*string):
    ss = [s if isinstance(s, str) else '{0}'.format(s) for s in string]
    sys.stderr.write('{0}\n'.format(' '.join(ss)))
