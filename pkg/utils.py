import os
import json
import math
import logging
from config import DEFAULT_SETTINGS

logger = logging.getLogger(__name__)

LOG_FORMAT = '%(asctime)s %(name)s:%(levelname)s:%(message)s'


def load_config(config_file=None, database_url=None):
    """
    Load configuration from database or file, or return default settings

    Args:
        config_file (str): Path of a JSON configuration file
        database_url (str): SQLAlchemy URL of the run database

    Returns:
        dict: Configuration settings merged over the defaults
    """
    config = DEFAULT_SETTINGS.copy()

    try:
        # Try to load from database first
        if database_url:
            from database import get_configuration
            db_config = get_configuration("default", database_url)
            if db_config:
                config.update(db_config)
                return config

        # If not in database, try to load from file
        if config_file and os.path.exists(config_file):
            with open(config_file, "r") as f:
                config.update(json.load(f))

    except (OSError, ValueError) as e:
        logger.error("Error loading configuration: %s", e)

    return config


def save_config(config, config_file="config.json", database_url=None):
    """
    Save configuration to file and, when a database is configured, to the database

    Args:
        config (dict): Configuration settings
        config_file (str): Path of the JSON configuration file
        database_url (str): SQLAlchemy URL of the run database

    Returns:
        bool: True if successful, False otherwise
    """
    try:
        if database_url:
            from database import save_configuration
            save_configuration(config, "default", database_url)

        with open(config_file, "w") as f:
            json.dump(config, f, indent=4)
        return True

    except (OSError, TypeError, ValueError) as e:
        logger.error("Error saving configuration: %s", e)
        return False


def setup_logging(level="WARNING", log_file=None):
    """
    Configure the root logger: stderr always, plus a log file when requested

    Args:
        level (str): Logging level name
        log_file (str): Optional log file path
    """
    handlers = [logging.StreamHandler()]
    if log_file:
        handlers.append(logging.FileHandler(log_file))

    logging.basicConfig(level=getattr(logging, str(level).upper(), logging.WARNING),
                        format=LOG_FORMAT, handlers=handlers, force=True)


def format_number(number, digits=17):
    """
    Format a float with a given number of significant digits

    Args:
        number (float): Number to format
        digits (int): Significant digits (17 round-trips a double)

    Returns:
        str: Formatted number
    """
    number = float(number)
    if math.isnan(number):
        return "NaN"
    if math.isinf(number):
        return "Infinity" if number > 0 else "-Infinity"
    return f"{number:.{digits}g}"


def dumps_json(obj):
    """
    Serialize to compact JSON with every float written at 17 significant digits

    NaN and infinities have no JSON form and are written as null.

    Args:
        obj: Nested dicts, lists, tuples, numbers, strings, booleans and None

    Returns:
        str: JSON text
    """
    if obj is None or isinstance(obj, (bool, str)):
        return json.dumps(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return format_number(obj) if math.isfinite(obj) else "null"
    if hasattr(obj, 'tolist'):
        # numpy scalars and arrays
        return dumps_json(obj.tolist())
    if isinstance(obj, complex):
        return dumps_json(complex_to_pair(obj))
    if isinstance(obj, dict):
        items = [f"{json.dumps(str(k))}: {dumps_json(v)}" for k, v in obj.items()]
        return "{" + ", ".join(items) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(dumps_json(v) for v in obj) + "]"
    raise TypeError(f"Cannot serialize object of type {type(obj).__name__}")


def complex_to_pair(value):
    """
    Convert a complex number to its [re, im] JSON form

    Args:
        value (complex): Number to convert

    Returns:
        list: [real, imaginary]
    """
    value = complex(value)
    return [value.real, value.imag]


def pair_to_complex(pair):
    """
    Convert [re, im], a plain number or a complex string to a complex number

    Args:
        pair: JSON value

    Returns:
        complex: Parsed number
    """
    if isinstance(pair, (list, tuple)):
        if len(pair) != 2:
            raise ValueError(f"Expected [re, im], got {pair!r}")
        return complex(float(pair[0]), float(pair[1]))
    if isinstance(pair, str):
        return complex(pair.replace(' ', ''))
    return complex(pair)


def complex_vector_to_json(vector):
    return [complex_to_pair(v) for v in vector]


def complex_vector_from_json(values):
    return [pair_to_complex(v) for v in values]


def parse_vector(text):
    """
    Parse a comma separated list of floats (e.g. '1,1,1')

    Args:
        text (str): Comma separated numbers

    Returns:
        list: Parsed floats
    """
    try:
        return [float(part) for part in str(text).split(',') if part.strip()]
    except ValueError:
        raise ValueError(f"Invalid numeric list: {text!r}")


def read_json_input(value):
    """
    Read JSON from a file path, or parse it directly when the value is inline JSON

    Args:
        value (str): Path or JSON text

    Returns:
        object: Parsed JSON
    """
    if value is None:
        raise ValueError("No input given")
    text = value.strip()
    if text.startswith('{') or text.startswith('['):
        return json.loads(text)
    with open(value, "r") as f:
        return json.load(f)
