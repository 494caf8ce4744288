"""
Memory-bit product and path-prefix types.
"""

from typing import Dict, Tuple

from pydantic import BaseModel, ConfigDict, Field

from mdpattr.models.mdp import Mdp, PathSpec

# Memory modes of product states: pivot visited / not yet visited
VISITED = "T"
BYPASSED = "B"
MODES = (BYPASSED, VISITED)


def product_state_name(state: str, mode: str) -> str:
    return f"{state}.{mode}"


class ProductMdp(BaseModel):
    """
    Product of a base MDP with one memory bit recording whether the pivot
    was visited. back_map sends each product state to (base state, mode).
    """

    model_config = ConfigDict(frozen=True)

    base: Mdp
    pivot: str
    product: Mdp
    back_map: Dict[str, Tuple[str, str]]
    pruned: bool = True

    def state(self, base_state: str, mode: str) -> str:
        return product_state_name(base_state, mode)

    def has(self, base_state: str, mode: str) -> bool:
        return product_state_name(base_state, mode) in self.back_map

    def base_of(self, product_state: str) -> str:
        return self.back_map[product_state][0]

    def mode_of(self, product_state: str) -> str:
        return self.back_map[product_state][1]


class PrefixConstraint(BaseModel):
    """A path prefix to follow and the probability of observing it."""

    path: PathSpec
    prefix_probability: float = Field(..., gt=0, le=1)
