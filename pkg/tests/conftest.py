import pytest

from prif.energy import EnergyParams, InterEnergyRecord, IntraEnergyRecord
from prif.routing import PrifRouter, RouterConfig


@pytest.fixture
def energy_params():
    return EnergyParams(alpha=0.3, beta=0.3, gamma=0.98, window=30.0)


def make_plain_router(node, community, capacity=10_000_000,
                      params=None, config=None):
    """Router with injectable state and no crypto, for decision-layer tests."""
    r = PrifRouter(node=node, interest=0, gid=str(community), cert=None,
                   auth_ctx=None, energy_params=params or EnergyParams(),
                   capacity_bytes=capacity, config=config or RouterConfig())
    r.community = community
    r.energy.owner_community = community
    return r


def set_inter(router, peer, value, now):
    """Pin the effective inter energy toward a peer to an exact value."""
    router.energy.inter[peer] = InterEnergyRecord(
        peer=peer, value=value, prev_value=value,
        last_encounter_end=now, last_aged_at=now, encounter_count=1)


def set_intra(router, community, value, now):
    """Pin the effective intra energy toward a community to an exact value."""
    router.energy.intra[community] = IntraEnergyRecord(
        community=community, value=value, prev_value=value,
        cumulative_count=1, first_encounter=now, last_aged_at=now)


def link_sessions(a, b):
    a.sessions[b.node] = b.community
    b.sessions[a.node] = a.community
