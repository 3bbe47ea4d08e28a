import dataclasses

import pytest

from gr1kit import arena as ar
from gr1kit import gr1
from gr1kit import workdelivery as wd

REDUCED = dict(n=2, bl_max=10, gamma_units=1, delta_units=5,
               bl_upper=9, k_move=1, k_drop=2)


@pytest.fixture(scope="session")
def paper_params():
    return wd.WorkDeliveryParams()


@pytest.fixture(scope="session")
def paper_doc(paper_params):
    return wd.emit_spec(paper_params)


@pytest.fixture(scope="session")
def paper_arena(paper_doc):
    return ar.build_arena(paper_doc)


@pytest.fixture(scope="session")
def paper_result(paper_arena, paper_doc):
    return gr1.solve(paper_arena, paper_doc.env_liveness,
                     paper_doc.sys_liveness)


@pytest.fixture(scope="session")
def scenario(paper_arena, paper_result):
    """Per-bl_init view over the shared solve: (doc, arena, result)."""
    cache = {}

    def get(bl_init, hf_init=False):
        key = (bl_init, hf_init)
        if key not in cache:
            doc = wd.emit_spec(
                wd.WorkDeliveryParams(bl_init=bl_init, hf_init=hf_init))
            arena = ar.with_inits(paper_arena, doc)
            result = dataclasses.replace(
                paper_result,
                realizable=gr1.is_realizable(paper_result, arena))
            cache[key] = (doc, arena, result)
        return cache[key]

    return get


@pytest.fixture(scope="session")
def strategy_for(scenario):
    cache = {}

    def get(bl_init):
        if bl_init not in cache:
            doc, arena, result = scenario(bl_init)
            cache[bl_init] = gr1.extract_strategy(result, arena)
        return cache[bl_init]

    return get


@pytest.fixture(scope="session")
def reduced_doc():
    return wd.emit_spec(wd.WorkDeliveryParams(bl_init=5, **REDUCED))


@pytest.fixture(scope="session")
def reduced_arena(reduced_doc):
    return ar.build_arena(reduced_doc)
