"""
Examples Router

Bundled example models as ModelFile documents.
"""

from typing import List, Optional

from fastapi import APIRouter, HTTPException, Query

from mdpattr.constants.examples import EXAMPLE_MODELS, EXAMPLE_NAMES, get_example_info
from mdpattr.models.requests import ModelFile
from mdpattr.models.responses import ExampleInfo
from mdpattr.services.generators import generate

router = APIRouter()


@router.get("/examples", response_model=List[ExampleInfo])
async def list_examples() -> List[ExampleInfo]:
    """Catalogue of the bundled example models."""
    return [
        ExampleInfo(
            name=name,
            description=info["description"],
            target=info["target"],
            parameters={p: None for p in info["parameters"]},
            tags=info["tags"],
        )
        for name, info in EXAMPLE_MODELS.items()
    ]


@router.get("/examples/{name}", response_model=ModelFile, response_model_by_alias=True)
def get_example(
    name: str,
    seed: Optional[int] = Query(default=None, description="random: seed"),
    states: Optional[int] = Query(default=None, ge=3, description="random: number of states"),
    actions: Optional[int] = Query(default=None, ge=1, description="random: maximum actions per state"),
    density: Optional[float] = Query(default=None, ge=0, le=1, description="random: second-successor probability"),
    width: Optional[int] = Query(default=None, ge=2, description="gridworld: columns"),
    height: Optional[int] = Query(default=None, ge=3, description="gridworld: rows"),
    lava_row: Optional[int] = Query(default=None, ge=0, description="gridworld: lava row"),
    door_col: Optional[int] = Query(default=None, ge=0, description="gridworld: door column"),
) -> ModelFile:
    """
    Generate a bundled example model.

    Parameters that do not apply to the example are ignored.
    """
    try:
        info = get_example_info(name)
    except ValueError as e:
        raise HTTPException(
            status_code=404,
            detail={"error": {"code": "UNKNOWN_EXAMPLE", "message": str(e), "details": {"known": EXAMPLE_NAMES}}},
        )
    given = dict(
        seed=seed, states=states, actions=actions, density=density,
        width=width, height=height, lava_row=lava_row, door_col=door_col,
    )
    params = {k: v for k, v in given.items() if v is not None and k in info["parameters"]}
    m, target = generate(name, **params)
    return ModelFile.from_mdp(m, target)
