import datetime

import numpy as np
import simplejson as json


class FancyJsonEncoder(json.JSONEncoder):
    """
    Fancy encoder for JSON turning numpy values and datetimes into something more primordial:
        Instance of datetime.datetime -> String in ISO 8601 format (with ' ', not 'T')
        Instance of np.integer / np.floating / np.bool_ -> int / float / bool
        Instance of np.ndarray -> (nested) list

    >>> json.dumps({"best_y": np.float64(0.5), "fes": np.int64(20), "x": np.zeros(2)}, cls=FancyJsonEncoder)
    '{"best_y": 0.5, "fes": 20, "x": [0.0, 0.0]}'
    """

    def default(self, obj):
        if isinstance(obj, datetime.datetime):
            return obj.isoformat(" ")
        elif isinstance(obj, np.integer):
            return int(obj)
        elif isinstance(obj, np.floating):
            return float(obj)
        elif isinstance(obj, np.bool_):
            return bool(obj)
        elif isinstance(obj, np.ndarray):
            return obj.tolist()
        else:
            return super().default(obj)


def dumps_line(obj) -> str:
    """
    Return compact JSON text with sorted keys, suitable as one line of a JSON-lines file.

    >>> dumps_line({"b": 1, "a": [1.5, None]})
    '{"a":[1.5,null],"b":1}'
    """
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), cls=FancyJsonEncoder, ignore_nan=True)
