"""
Scenario and gains document schemas
"""

import math
from typing import Annotated, Any, Dict, List, Literal, Optional, Tuple, Union

from pydantic import AfterValidator, BaseModel, ConfigDict, Field, field_validator, model_validator

from app.core.plantmodel import LawKind


def _rectangular(rows: List[List[float]]) -> List[List[float]]:
    if rows and len({len(r) for r in rows}) != 1:
        raise ValueError(f"matrix rows must have equal length, got lengths {[len(r) for r in rows]}")
    if any(not math.isfinite(x) for r in rows for x in r):
        raise ValueError("matrix entries must be finite")
    return rows


def _finite(values: List[float]) -> List[float]:
    if any(not math.isfinite(x) for x in values):
        raise ValueError("vector entries must be finite")
    return values


Matrix = Annotated[List[List[float]], AfterValidator(_rectangular)]
Vector = Annotated[List[float], AfterValidator(_finite)]


class ExosystemModel(BaseModel):
    """Leader dynamics with the unmeasured/measured split"""
    model_config = ConfigDict(extra="forbid")

    S_u: Matrix = Field(default_factory=list, description="Unmeasured exosystem block (q_u x q_u)")
    S_m: Matrix = Field(default_factory=list, description="Measured exosystem block (q_m x q_m)")
    C_m0: Optional[Matrix] = Field(None, description="Leader output matrix; identity when omitted")
    v0: Optional[Vector] = Field(None, description="Initial leader state, zero when omitted")


class AgentModel(BaseModel):
    """One follower; omitted matrices default to zero and C_m defaults to measuring e_i"""
    model_config = ConfigDict(extra="forbid")

    A: Matrix
    B: Matrix
    C: Matrix
    D: Optional[Matrix] = None
    E_u: Optional[Matrix] = None
    E_m: Optional[Matrix] = None
    C_m: Optional[Matrix] = None
    D_m: Optional[Matrix] = None
    F_mu: Optional[Matrix] = None
    F_mm: Optional[Matrix] = None
    F_u: Optional[Matrix] = None
    F_m: Optional[Matrix] = None
    x0: Optional[Vector] = None


Edge = Union[Tuple[int, int], Tuple[int, int, float]]


class GraphModel(BaseModel):
    """Adjacency list as (source, target[, weight]) triples; node 0 is the leader"""
    model_config = ConfigDict(extra="forbid")

    edges: List[Edge] = Field(default_factory=list)
    undirected: bool = False


class TopologyModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    graphs: List[GraphModel] = Field(..., min_length=1)
    schedule: Optional[List[Tuple[float, int]]] = Field(
        None, description="(switch time, graph index) pairs; static graph 0 when omitted"
    )
    dwell: float = Field(1.0, gt=0)
    period: Optional[float] = Field(None, gt=0)


class SimModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    horizon: float = Field(..., ge=0)
    step: Optional[float] = Field(None, gt=0, description="integration step; COOPREG_STEP when omitted")


class LawModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: LawKind = LawKind.DISTRIBUTED_MEASUREMENT
    observer: Optional[Literal["continuous", "discrete", "adaptive", "sync_ref"]] = None
    gain_rule: Optional[str] = None
    mu: Optional[float] = Field(None, ge=0)
    mu_scale: float = Field(1.0, gt=0)
    mu1: float = Field(1.0, gt=0)
    mu2: float = Field(1.0, gt=0)
    observer_init: Union[Literal["zero", "leader"], Matrix] = "zero"
    adaptive_init: Literal["zero", "leader"] = "zero"
    threshold: Optional[float] = Field(None, gt=0)
    window: Optional[float] = Field(None, gt=0)

    @field_validator("gain_rule")
    @classmethod
    def validate_gain_rule(cls, v):
        if v is not None:
            from app.core.observers import GainRule
            allowed = [r.value for r in GainRule]
            if v not in allowed:
                raise ValueError(f'gain_rule must be one of: {", ".join(allowed)}')
        return v


class ContainmentLeaderModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    S: Matrix
    v0: Optional[Vector] = None


class ContainmentModel(BaseModel):
    """Leaders and convex weights; agents then carry their own F_m as F_1i"""
    model_config = ConfigDict(extra="forbid")

    leaders: List[ContainmentLeaderModel] = Field(..., min_length=2)
    alphas: Vector


class LocalExosystemModel(BaseModel):
    """Per-agent exosystem, one entry per agent"""
    model_config = ConfigDict(extra="forbid")

    S: Matrix
    v0: Optional[Vector] = None


class ScenarioModel(BaseModel):
    """Complete scenario document"""
    model_config = ConfigDict(extra="forbid")

    name: str = ""
    description: str = ""
    discrete: bool = False
    exosystem: Optional[ExosystemModel] = None
    containment: Optional[ContainmentModel] = None
    local_exosystems: Optional[List[LocalExosystemModel]] = None
    agents: List[AgentModel] = Field(..., min_length=1)
    topology: TopologyModel
    sim: SimModel
    law: LawModel = Field(default_factory=LawModel)

    @model_validator(mode="after")
    def exactly_one_exosystem(self):
        given = [k for k in ("exosystem", "containment", "local_exosystems") if getattr(self, k) is not None]
        if len(given) != 1:
            raise ValueError(
                f"exactly one of exosystem, containment, local_exosystems is required, got {given or 'none'}"
            )
        if self.local_exosystems is not None and len(self.local_exosystems) != len(self.agents):
            raise ValueError("local_exosystems needs one entry per agent")
        return self


class AgentGainsModel(BaseModel):
    K1: Matrix
    K2: Matrix
    q_u: int = Field(0, ge=0)
    X: Matrix
    U: Matrix
    L: Optional[Matrix] = None
    A_L: Optional[Matrix] = None
    residual: float = 0.0
    provenance: Dict[str, str] = Field(default_factory=dict)


class ObserverGainsModel(BaseModel):
    variant: Literal["continuous", "discrete", "adaptive", "sync_ref"]
    rule: str
    mu: float
    L0: Matrix
    S: Matrix
    C0: Matrix
    mu1: float = 1.0
    mu2: float = 1.0
    notes: Dict[str, Any] = Field(default_factory=dict)


class GainsModel(BaseModel):
    """Synthesized gains document"""
    kind: LawKind
    discrete: bool = False
    agents: List[AgentGainsModel] = Field(..., min_length=1)
    observer: Optional[ObserverGainsModel] = None
    notes: Dict[str, Any] = Field(default_factory=dict)
