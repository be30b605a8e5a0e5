"""
Request models for API validation
"""

from typing import List, Optional

from pydantic import BaseModel, Field, field_validator, model_validator

from app.models.scenario import ScenarioModel


class ScenarioRequest(BaseModel):
    """A scenario given inline or by shipped fixture name, with optional overrides"""

    scenario: Optional[ScenarioModel] = Field(None, description="Inline scenario document")
    fixture: Optional[str] = Field(None, description="Name of a shipped scenario, e.g. harmonic_chain")
    mu: Optional[float] = Field(None, description="Observer gain override", ge=0.0)
    step: Optional[float] = Field(None, description="Integration step override", gt=0.0)
    horizon: Optional[float] = Field(None, description="Horizon override", ge=0.0)

    @model_validator(mode="after")
    def exactly_one_source(self):
        if (self.scenario is None) == (self.fixture is None):
            raise ValueError("give exactly one of 'scenario' or 'fixture'")
        return self

    @field_validator("fixture")
    @classmethod
    def validate_fixture(cls, v):
        if v is not None and (not v.strip() or "/" in v or "\\" in v or v.startswith(".")):
            raise ValueError("fixture must be a plain scenario name")
        return v


class RunRequest(ScenarioRequest):
    threshold: Optional[float] = Field(None, description="Tracking threshold", gt=0.0)
    flip_k1: bool = Field(False, description="Negate every K1 (destabilizing sabotage)")
    include_csv: bool = Field(False, description="Return the trajectory CSV in the response")


class SweepRequest(ScenarioRequest):
    mus: Optional[List[float]] = Field(None, description="μ grid")
    steps: Optional[List[float]] = Field(None, description="Step grid")
    threshold: Optional[float] = Field(None, gt=0.0)

    @field_validator("mus")
    @classmethod
    def validate_mus(cls, v):
        if v is not None and any(mu < 0 for mu in v):
            raise ValueError("mu grid values must be nonnegative")
        return v

    @field_validator("steps")
    @classmethod
    def validate_steps(cls, v):
        if v is not None and any(h <= 0 for h in v):
            raise ValueError("step grid values must be positive")
        return v
