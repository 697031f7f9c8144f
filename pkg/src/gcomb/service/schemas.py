"""Pydantic request/response models for the HTTP service."""

from __future__ import annotations

from pydantic import BaseModel, Field


class HealthResponse(BaseModel):
    status: str
    version: str


class WeightModelSpec(BaseModel):
    variant: str = "unit"  # constant | trivalency | unit
    seed: int = 0


class GenRequest(BaseModel):
    kind: str  # bp | ba
    n: int
    out_path: str
    p: float | None = None  # bp edge probability
    m_attach: int = 4  # ba attachment count
    seed: int = 0
    weights: WeightModelSpec | None = None


class GenResponse(BaseModel):
    path: str
    nodes: int
    edges: int


class ObjectiveRequest(BaseModel):
    kind: str = "mcp"  # mcp | mvc | im
    mc_sims: int = 1000


class TrainRequest(BaseModel):
    graph_paths: list[str]
    out_dir: str
    directed: bool = True
    objective: ObjectiveRequest = Field(default_factory=ObjectiveRequest)
    seed: int = 0
    m_runs: int = 30
    delta: float = 0.01
    gcn_depth: int = 2
    gcn_dim: int = 60
    gcn_steps: int = 1000
    gcn_lr: float = 1e-3
    dropout: float = 0.1
    q_dim: int = 32
    q_episodes: int = 10
    q_steps: int | None = None
    n_step: int = 2
    gamma: float = 0.8
    q_lr: float = 5e-4


class TrainResponse(BaseModel):
    noise_path: str
    gcn_path: str
    q_path: str
    report_path: str
    phase_seconds: dict[str, float]
    total_seconds: float


class SolveRequest(BaseModel):
    graph_path: str
    model_dir: str
    budget: int
    directed: bool = True
    objective: ObjectiveRequest = Field(default_factory=ObjectiveRequest)
    seed: int = 0
    prune: bool = True
    out_csv: str | None = None


class SolveResponse(BaseModel):
    solution: list[int]
    value: float
    evals: int
    seconds: float
    csv_row: str
    solution_path: str | None = None


class BenchRequest(BaseModel):
    graph_paths: list[str]
    methods: list[str]
    budgets: list[int]
    directed: bool = True
    objective: ObjectiveRequest = Field(default_factory=ObjectiveRequest)
    seeds: list[int] = Field(default_factory=lambda: [0])
    model_dir: str | None = None
    sg_epsilon: float = 0.05
    prune: bool = True
    out_csv: str | None = None


class BenchRowModel(BaseModel):
    method: str
    dataset: str
    objective: str
    b: int
    value: float | str
    evals: int
    seconds: float


class BenchResponse(BaseModel):
    rows: list[BenchRowModel]
    csv_path: str | None = None
