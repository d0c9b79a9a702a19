import math
import os
from fractions import Fraction

from omegaconf import OmegaConf

from util.errors import ConfigError, ParameterOutOfRange

PRESET_FILE = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), 'config', 'presets.yaml')


class ConfigKeyError(ConfigError):
    def __init__(self, cause, keys=None, visited=None):
        self.cause = cause
        self.keys = keys
        self.visited = visited
        messages = list()
        if keys is not None:
            messages.append("Key not found: {}".format(keys))
        if visited is not None:
            messages.append("Visited: {}".format(visited))
        messages.append("Cause:\n{}".format(cause))
        message = "\n".join(messages)
        super().__init__(message)


_MISSING = object()


def retrieve(list_or_dict, key, splitval="/", default=_MISSING):
    """Given a nested list or dict return the value at `key`.

    Parameters
    ----------
        list_or_dict : list or dict
            Possibly nested list or dictionary.
        key : str
            key/to/value, path like string describing all keys necessary to
            reach the desired value. List indices can also be passed here.
        splitval : str
            Delimiter between keys of the different depth levels in `key`.
        default : obj
            Value returned if `key` is not found. Without it a missing key
            raises :class:`ConfigKeyError`.
    """
    keys = key.split(splitval)
    visited = []
    try:
        for k in keys:
            try:
                if isinstance(list_or_dict, dict):
                    list_or_dict = list_or_dict[k]
                else:
                    list_or_dict = list_or_dict[int(k)]
            except (KeyError, IndexError, ValueError, TypeError) as e:
                raise ConfigKeyError(e, keys=keys, visited=visited)
            visited += [k]
    except ConfigKeyError:
        if default is _MISSING:
            raise
        return default
    return list_or_dict


def load_document(path):
    """Load a YAML document into plain python containers."""
    if not os.path.isfile(path):
        raise ConfigError("config file not found: {}".format(path))
    try:
        conf = OmegaConf.load(path)
    except Exception as e:
        raise ConfigError("cannot parse {}: {}".format(path, e))
    return OmegaConf.to_container(conf, resolve=True)


def load_preset_params(name, overrides=None):
    presets = load_document(PRESET_FILE)
    if name not in presets:
        raise ConfigError("unknown preset '{}', expected one of {}".format(name, sorted(presets)))
    conf = OmegaConf.create(presets[name])
    if overrides:
        conf = OmegaConf.merge(conf, OmegaConf.create(overrides))
    return OmegaConf.to_container(conf, resolve=True)


def to_probability(value):
    """Read a float or an exact rational written as "num/den"."""
    if isinstance(value, str):
        try:
            value = Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as e:
            raise ParameterOutOfRange("not a probability: {!r} ({})".format(value, e))
    try:
        return float(value)
    except (TypeError, ValueError):
        raise ParameterOutOfRange("not a number: {!r}".format(value))


def to_float(value, what):
    if isinstance(value, bool):
        raise ParameterOutOfRange("{}: not a number: {!r}".format(what, value))
    try:
        return float(value)
    except (TypeError, ValueError):
        raise ParameterOutOfRange("{}: not a number: {!r}".format(what, value))


def to_int(value, what):
    """Integer config value; floats are accepted only when whole."""
    number = value if isinstance(value, int) and not isinstance(value, bool) else to_float(value, what)
    if not math.isfinite(number) or number != int(number):
        raise ParameterOutOfRange("{}: not an integer: {!r}".format(what, value))
    return int(number)


def to_list(value, what, length=None):
    """A list or tuple config value, optionally of a fixed length."""
    if not isinstance(value, (list, tuple)):
        raise ParameterOutOfRange("{}: expected a list, got {!r}".format(what, value))
    if length is not None and len(value) != length:
        raise ParameterOutOfRange("{}: expected {} entries, got {!r}".format(what, length, value))
    return list(value)
