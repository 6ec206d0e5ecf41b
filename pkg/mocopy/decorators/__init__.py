# Copyright (c) 2024 The mocopy developers
# For license information see LICENSE or https://opensource.org/licenses/BSD-3-Clause

import functools
import logging
import time

__all__ = [
    'immutable',
    'logged_stage',
]


def immutable(cls):
    """
    This marks a class as being immutable, i.e., when doing a copy or a deep copy, we only return self
    instead of actually making a copy of the class. It should only be used in dataclasses that are marked frozen.
    """
    def __deepcopy__(self, _):
        return self

    def __copy__(self):
        return self

    setattr(cls, '__deepcopy__', __deepcopy__)
    setattr(cls, '__copy__', __copy__)
    return cls


def logged_stage(name: str):
    """
    Decorator that logs the start and the wall-clock duration of a pipeline stage at INFO level
    on the logger of the module that defines the decorated function.

    Args:
        name: a human-readable stage name, e.g. 'train' or 'detect'.
    """
    def decorator(func):
        logger = logging.getLogger(func.__module__)

        @functools.wraps(func)
        def wrapper(*args, **kwargs):
            logger.info('%s: started', name)
            start = time.perf_counter()
            result = func(*args, **kwargs)
            logger.info('%s: finished in %.2f s', name, time.perf_counter() - start)
            return result

        return wrapper

    return decorator
