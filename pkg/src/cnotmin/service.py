"""HTTP service exposing synthesis, verification, exact solving, and
topology inspection over the core package.

Long-running batch work (training, benchmark sweeps) stays in the CLI;
the service covers the request/response operations so one process with
warm solver caches and loaded models can serve many clients.  Start it
with ``cnotmin serve``.
"""

from __future__ import annotations

import os

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from . import __version__, nnet
from .core import Circuit, CnotGate, ParityMatrix, circuit_to_parity, verify_synthesis
from .env import EpisodeConfig, RewardMode
from .exact import DepthCapExceeded, ExactConfig, SolverTimeout, optimal_synth
from .heuristics import (
    GreedyBudgetExceeded,
    SingularMatrixError,
    gaussian_synth,
    greedy_hamming_synth,
    pmh_synth,
)
from .mcts import SearchConfig, greedy_circuit, play_episode
from .topology import BUILTIN_NAMES, Topology, builtin

app = FastAPI(
    title="cnotmin",
    version=__version__,
    description="CNOT-count minimization for linear reversible circuits",
)

_MODEL_CACHE: dict[tuple[str, float], tuple[dict, nnet.NetConfig]] = {}


class GateModel(BaseModel):
    control: int = Field(ge=0)
    target: int = Field(ge=0)


class TopologySpec(BaseModel):
    """Either a builtin template name or an explicit edge list."""

    name: str | None = None
    n: int | None = None
    edges: list[tuple[int, int]] | None = None


class SynthesizeRequest(BaseModel):
    matrix: list[list[int]]
    method: str = "pmh"
    topology: TopologySpec | None = None
    section: int | None = None
    sweep: bool = False
    shots: int = Field(default=1, ge=1)
    simulations: int = Field(default=256, ge=1)
    time_budget: float = Field(default=60.0, gt=0)
    model_path: str | None = None


class SynthesizeResponse(BaseModel):
    gates: list[GateModel]
    gate_count: int
    method: str
    verified: bool


class VerifyRequest(BaseModel):
    matrix: list[list[int]]
    gates: list[GateModel]


class VerifyResponse(BaseModel):
    valid: bool


class ParityRequest(BaseModel):
    n: int = Field(ge=2)
    gates: list[GateModel]


class ParityResponse(BaseModel):
    matrix: list[list[int]]


class TopologyResponse(BaseModel):
    name: str
    n: int
    edges: list[tuple[int, int]]
    num_actions: int


class ExactRequest(BaseModel):
    matrix: list[list[int]]
    topology: TopologySpec | None = None
    time_budget: float = Field(default=60.0, gt=0)
    max_depth: int | None = None


class ExactResponse(BaseModel):
    gates: list[GateModel]
    gate_count: int
    nodes_expanded: int
    wall_ms: float


def _parse_matrix(rows: list[list[int]]) -> ParityMatrix:
    try:
        return ParityMatrix.from_lists(rows)
    except ValueError as exc:
        raise HTTPException(status_code=400, detail=f"bad matrix: {exc}") from exc


def _parse_topology(spec: TopologySpec | None) -> Topology | None:
    if spec is None:
        return None
    if spec.name:
        try:
            return builtin(spec.name)
        except ValueError as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc
    if spec.n is None or spec.edges is None:
        raise HTTPException(status_code=400, detail="topology needs a name or (n, edges)")
    try:
        return Topology(spec.n, tuple(spec.edges), name="custom")
    except ValueError as exc:
        raise HTTPException(status_code=400, detail=f"bad topology: {exc}") from exc


def _parse_circuit(n: int, gates: list[GateModel]) -> Circuit:
    try:
        return Circuit(n, tuple(CnotGate(g.control, g.target) for g in gates))
    except ValueError as exc:
        raise HTTPException(status_code=400, detail=f"bad circuit: {exc}") from exc


def _gates_out(circuit: Circuit) -> list[GateModel]:
    return [GateModel(control=g.control, target=g.target) for g in circuit.gates]


def _load_model(path: str):
    try:
        key = (path, os.path.getmtime(path))
    except OSError as exc:
        raise HTTPException(status_code=400, detail=f"cannot read model: {exc}") from exc
    if key not in _MODEL_CACHE:
        try:
            _MODEL_CACHE[key] = nnet.load_checkpoint(path)
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
    return _MODEL_CACHE[key]


@app.get("/health")
def health() -> dict:
    return {"status": "ok", "version": __version__}


@app.get("/topologies")
def topologies() -> dict:
    return {"builtin": list(BUILTIN_NAMES)}


@app.get("/topologies/{name}", response_model=TopologyResponse)
def topology_detail(name: str) -> TopologyResponse:
    try:
        t = builtin(name)
    except ValueError as exc:
        raise HTTPException(status_code=404, detail=str(exc)) from exc
    return TopologyResponse(
        name=t.name, n=t.n, edges=list(t.edges), num_actions=len(t.action_gates())
    )


@app.post("/parity", response_model=ParityResponse)
def parity(req: ParityRequest) -> ParityResponse:
    circuit = _parse_circuit(req.n, req.gates)
    return ParityResponse(matrix=circuit_to_parity(circuit).to_lists())


@app.post("/verify", response_model=VerifyResponse)
def verify(req: VerifyRequest) -> VerifyResponse:
    m = _parse_matrix(req.matrix)
    circuit = _parse_circuit(m.n, req.gates)
    return VerifyResponse(valid=verify_synthesis(m, circuit))


@app.post("/synthesize", response_model=SynthesizeResponse)
def synthesize(req: SynthesizeRequest) -> SynthesizeResponse:
    m = _parse_matrix(req.matrix)
    topology = _parse_topology(req.topology)
    if topology is not None and topology.n != m.n:
        raise HTTPException(status_code=400, detail="topology size does not match matrix")
    try:
        if req.method == "gauss":
            result = gaussian_synth(m)
        elif req.method == "pmh":
            result = pmh_synth(m, section=req.section, sweep=req.sweep)
        elif req.method == "greedy":
            if topology is None:
                raise HTTPException(status_code=400, detail="greedy needs a topology")
            result = greedy_hamming_synth(m, topology)
        elif req.method == "exact":
            result = optimal_synth(m, ExactConfig(time_budget=req.time_budget, topology=topology))
        elif req.method == "mcts":
            result = _mcts_synthesize(m, topology, req)
        else:
            raise HTTPException(status_code=400, detail=f"unknown method {req.method!r}")
    except SingularMatrixError as exc:
        raise HTTPException(status_code=400, detail=f"singular matrix: {exc}") from exc
    except GreedyBudgetExceeded as exc:
        raise HTTPException(status_code=422, detail=f"unsolved: {exc}") from exc
    except DepthCapExceeded as exc:
        raise HTTPException(status_code=422, detail=f"unsolved: {exc}") from exc
    except SolverTimeout as exc:
        raise HTTPException(status_code=408, detail=f"timeout: {exc}") from exc
    return SynthesizeResponse(
        gates=_gates_out(result.circuit),
        gate_count=result.gate_count,
        method=result.method,
        verified=circuit_to_parity(result.circuit) == m,
    )


def _mcts_synthesize(m: ParityMatrix, topology: Topology | None, req: SynthesizeRequest):
    from .heuristics import SynthResult

    if not req.model_path:
        raise HTTPException(status_code=400, detail="mcts needs model_path")
    params, net_cfg = _load_model(req.model_path)
    env_cfg = EpisodeConfig(n=m.n, topology=topology, reward_mode=RewardMode.sparse())
    if net_cfg.action_dim != len(env_cfg.action_gates()):
        raise HTTPException(
            status_code=400,
            detail=f"model action dim {net_cfg.action_dim} does not match the action set",
        )
    search_cfg = SearchConfig(num_simulations=req.simulations, root_noise_fraction=0.0)
    best = None
    for shot in range(req.shots):
        traj = play_episode(
            m, (params, net_cfg), env_cfg, search_cfg,
            mode="greedy" if shot == 0 else "sample", seed=shot,
        )
        if traj.solved and (best is None or len(traj) < len(best)):
            best = traj
    if best is None:
        raise HTTPException(status_code=422, detail="search did not reach the identity")
    circ = greedy_circuit(best, env_cfg)
    return SynthResult(circ, len(circ.gates), f"mcts_{req.shots}shot")


@app.post("/exact", response_model=ExactResponse)
def exact(req: ExactRequest) -> ExactResponse:
    m = _parse_matrix(req.matrix)
    topology = _parse_topology(req.topology)
    if topology is not None and topology.n != m.n:
        raise HTTPException(status_code=400, detail="topology size does not match matrix")
    cfg = ExactConfig(max_depth=req.max_depth, time_budget=req.time_budget, topology=topology)
    try:
        result = optimal_synth(m, cfg)
    except SingularMatrixError as exc:
        raise HTTPException(status_code=400, detail=f"singular matrix: {exc}") from exc
    except DepthCapExceeded as exc:
        raise HTTPException(status_code=422, detail=f"unsolved: {exc}") from exc
    except SolverTimeout as exc:
        raise HTTPException(status_code=408, detail=f"timeout: {exc}") from exc
    return ExactResponse(
        gates=_gates_out(result.circuit),
        gate_count=result.gate_count,
        nodes_expanded=result.nodes_expanded,
        wall_ms=result.wall_ms,
    )
