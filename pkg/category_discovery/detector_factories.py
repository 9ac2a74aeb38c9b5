from __future__ import annotations

from typing import Dict

from category_discovery import settings
from category_discovery.detectors.base_detector import Detector
from category_discovery.detectors.greedy_modularity import GreedyModularity
from category_discovery.detectors.label_propagation import LabelPropagation, WeightedLabelPropagation
from category_discovery.exceptions import InvalidParameter

cnm = GreedyModularity()

lp = LabelPropagation(mode="async", sticky_ties=True)

wlp = WeightedLabelPropagation(weight="exp", mode="async", sticky_ties=True)

wlp_linear = WeightedLabelPropagation(weight="linear", mode="async", sticky_ties=True)

wlp_sync = WeightedLabelPropagation(weight="exp", mode="sync", sticky_ties=True)

wlp_literal = WeightedLabelPropagation(weight="exp", mode="sync", sticky_ties=False)

PROTOTYPES: Dict[str, Detector] = {
    "cnm": cnm,
    "lp": lp,
    "wlp": wlp,
    "wlp-linear": wlp_linear,
    "wlp-sync": wlp_sync,
    "wlp-literal": wlp_literal,
}


def build(
    algo: str,
    *,
    weight: str = "exp",
    mode: str = "async",
    sticky_ties: bool = True,
    max_iters: int = settings.max_iterations,
    seed: int = 0,
) -> Detector:
    """Make a detector from command line style settings."""
    if algo == "cnm":
        return GreedyModularity(seed=seed)
    if algo == "lp":
        return LabelPropagation(mode=mode, max_iters=max_iters, sticky_ties=sticky_ties, seed=seed)
    if algo == "wlp":
        return WeightedLabelPropagation(
            weight=weight, mode=mode, max_iters=max_iters, sticky_ties=sticky_ties, seed=seed,
        )
    raise InvalidParameter(f"unknown algorithm '{algo}', expected one of cnm, lp, wlp")


def spawn(name: str, seed: int) -> Detector:
    """Clone the named prototype with its own seed."""
    try:
        prototype = PROTOTYPES[name]
    except KeyError:
        raise InvalidParameter(f"unknown detector '{name}', expected one of {sorted(PROTOTYPES)}") from None
    return prototype.spawn(seed)
