"""Mini-batch SGD and accelerated gradient for smooth linear losses."""

import json as _json

from ._mbaccel import *  # noqa: F401,F403
from ._mbaccel import bounds_json as _bounds_json
from ._mbaccel import verify_json as _verify_json


def bounds(H, b, n, L_star, w_star_norm, epsilon=0.01):
    return _json.loads(_bounds_json(H, b, n, L_star, w_star_norm, epsilon))


def verify(trials=10000, seed=1):
    return _json.loads(_verify_json(trials, seed))
