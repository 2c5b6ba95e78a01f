# This file contains utility functions shared by the numerical modules.

import os
import logging
from logging.handlers import TimedRotatingFileHandler
from datetime import datetime

import numpy as np

from src.constants import TOOLKIT_NAME

# Dekker splitting constant for binary64
_SPLITTER = 134217729.0


# Set up logging with console output and an optional daily rotating file
def setup_logging(level="INFO", log_dir=None):
    formatter = logging.Formatter('%(asctime)s - %(levelname)s - %(message)s')

    root_logger = logging.getLogger()
    root_logger.setLevel(logging.DEBUG)

    # Remove existing handlers to avoid duplicates
    for handler in root_logger.handlers[:]:
        root_logger.removeHandler(handler)

    # Console handler, standard error keeps standard output for job summaries
    console_handler = logging.StreamHandler()
    console_handler.setLevel(level)
    console_handler.setFormatter(formatter)
    root_logger.addHandler(console_handler)

    if not log_dir:
        return

    os.makedirs(log_dir, exist_ok=True)
    today = datetime.now().strftime('%Y-%m-%d')
    log_filename = os.path.join(log_dir, f'{TOOLKIT_NAME}-{today}.log')
    file_handler = TimedRotatingFileHandler(
        log_filename,
        when='midnight',
        interval=1,
        backupCount=30,  # Keep 30 days of logs
        encoding='utf-8'
    )
    file_handler.setLevel(logging.DEBUG)
    file_handler.setFormatter(formatter)

    def custom_namer(default_name):
        # spacing-toolkit-2025-07-02.log.2025-07-03 -> spacing-toolkit-2025-07-03.log
        base_dir = os.path.dirname(default_name)
        parts = os.path.basename(default_name).split('.')
        if len(parts) >= 2:
            date_part = parts[-1]
            return os.path.join(base_dir, f'{TOOLKIT_NAME}-{date_part}.log')
        return default_name

    file_handler.namer = custom_namer
    root_logger.addHandler(file_handler)


def two_sum(a, b):
    """Error-free sum: returns (s, e) with s + e == a + b exactly"""
    s = a + b
    bb = s - a
    return s, (a - (s - bb)) + (b - bb)


def _split(a):
    c = _SPLITTER * a
    hi = c - (c - a)
    return hi, a - hi


def two_product(a, b):
    """Error-free product via Dekker splitting"""
    p = a * b
    ah, al = _split(a)
    bh, bl = _split(b)
    return p, ((ah * bh - p) + ah * bl + al * bh) + al * bl


def compensated_horner(coeffs, x):
    """
    Evaluate sum(coeffs[k] * x**k) with a compensated Horner scheme.

    Works elementwise when x is a numpy array.
    """
    s = coeffs[-1] + 0.0 * x
    c = 0.0 * x
    for a in coeffs[-2::-1]:
        p, pi = two_product(s, x)
        s, sigma = two_sum(p, a)
        c = c * x + (pi + sigma)
    return s + c


def compensated_sum(values):
    """Kahan-Babuska summation of a 1-D sequence"""
    total = 0.0
    carry = 0.0
    for v in np.asarray(values, dtype=float).ravel():
        total, err = two_sum(total, float(v))
        carry += err
    return total + carry


def float_to_hex(value):
    return float(value).hex()


def hex_to_float(text):
    return float.fromhex(text)
