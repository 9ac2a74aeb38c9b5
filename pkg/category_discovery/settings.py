"""Default values shared by the library and the command line tool."""
import os
from pathlib import Path
from typing import Optional

VERSION = "0.1.0"

OUT_ROOT_ENV = "CATEGORY_DISCOVERY_OUT"
DEFAULT_OUT_ROOT = "out"

max_iterations = 100
trials = 100

# MovieLens ratings run 0-5, the width replaces N in the similarity function.
rating_scale = 5

# Planted partition benchmark defaults: 10 communities of 5.
sbm_communities = 10
sbm_size = 5
sbm_p_out = 0.01
sbm_p_in_grid = (0.7, 0.75, 0.8)


def resolve_out_root(flag: Optional[str] = None) -> Path:
    """Return the output root: command line flag > environment > default."""
    if flag:
        return Path(flag)
    return Path(os.getenv(OUT_ROOT_ENV, DEFAULT_OUT_ROOT))
