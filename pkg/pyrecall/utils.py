import logging
import os

LOG_LEVEL = os.environ.get('LOG_LEVEL', 'WARNING').upper()
logger = logging.getLogger('pyrecall')
logger.setLevel(LOG_LEVEL)

SECONDS_PER_DAY = 86400


def enable_console_logging(level: str = 'DEBUG') -> None:
    '''
    Attach a stderr handler to the library logger. Standard output is left alone so the
    command line protocol stays machine readable.
    '''
    if not any(isinstance(handler, logging.StreamHandler) for handler in logger.handlers):
        handler = logging.StreamHandler()
        handler.setFormatter(logging.Formatter('%(levelname)s %(name)s: %(message)s'))
        logger.addHandler(handler)
    logger.setLevel(level.upper())
