from __future__ import annotations
from enum import Enum
from typing import Annotated, Any, Dict, Literal, Optional, Union

from pydantic import BaseModel, Field, field_validator, model_validator


class LossKind(str, Enum):
    SOFTMAX_CROSS_ENTROPY = "softmax-cross-entropy"


class SyncMode(str, Enum):
    SYNCHRONOUS = "synchronous"
    ASYNCHRONOUS = "asynchronous"


class ModelSpec(BaseModel):
    """Topology of the MLP: weight matrices only, bias folded into the input width."""

    layer_sizes: list[int] = Field(default_factory=lambda: [11, 16, 3])
    loss_kind: LossKind = LossKind.SOFTMAX_CROSS_ENTROPY
    activation: Literal["relu"] = "relu"  # hidden layers; output is always softmax
    seed: int = Field(default=0, ge=0)

    @field_validator("layer_sizes")
    @classmethod
    def _check_layers(cls, value: list[int]) -> list[int]:
        if len(value) < 2:
            raise ValueError("layer_sizes needs at least an input and an output layer")
        if any(size < 1 for size in value):
            raise ValueError("every layer size must be >= 1")
        return value

    @property
    def layer_shapes(self) -> list[tuple[int, int]]:
        return list(zip(self.layer_sizes[:-1], self.layer_sizes[1:]))

    @property
    def parameter_count(self) -> int:
        return sum(fan_in * fan_out for fan_in, fan_out in self.layer_shapes)

    @property
    def input_size(self) -> int:
        return self.layer_sizes[0]

    @property
    def num_classes(self) -> int:
        return self.layer_sizes[-1]


class TrainConfig(BaseModel):
    learning_rate: float = Field(default=0.1, gt=0)
    batch_size: int = Field(default=32, gt=0)
    local_iterations: int = Field(default=10, ge=0)
    # passes over the local shard per fit; replaces local_iterations when set
    local_epochs: Optional[int] = Field(default=None, ge=1)
    seed: int = Field(default=0, ge=0)


class DisconnectWindow(BaseModel):
    agent: int = Field(ge=1)
    from_round: int = Field(ge=1)
    to_round: int = Field(ge=1)
    memory: bool = True  # False = memoryless restart on reconnection

    @model_validator(mode="after")
    def _check_window(self) -> "DisconnectWindow":
        if self.from_round > self.to_round:
            raise ValueError("from_round must be <= to_round")
        return self


class NetConfig(BaseModel):
    latency_mean: float = Field(default=2.0, ge=0)  # ms
    latency_jitter: float = Field(default=0.0, ge=0)  # ms
    drop_prob: float = Field(default=0.0, ge=0, lt=1)
    late_prob: float = Field(default=0.0, ge=0, le=1)
    late_extra: float = Field(default=0.0, ge=0)  # ms added to late envelopes
    seed: int = Field(default=0, ge=0)
    disconnects: list[DisconnectWindow] = Field(default_factory=list)

    @property
    def is_perfect(self) -> bool:
        return self.drop_prob == 0 and self.late_prob == 0 and not self.disconnects


class SyntheticDataset(BaseModel):
    kind: Literal["synthetic"] = "synthetic"
    classes: int = Field(default=3, ge=2)
    samples: int = Field(default=1200, ge=1)
    dimension: int = Field(default=11, ge=2)  # includes the constant-1 bias feature
    separation: float = Field(default=0.6, gt=0)
    seed: int = Field(default=0, ge=0)


class IdxDataset(BaseModel):
    kind: Literal["idx"] = "idx"
    images: str
    labels: str
    eval_images: Optional[str] = None
    eval_labels: Optional[str] = None
    subsample: Optional[int] = Field(default=None, ge=1)


DatasetConfig = Annotated[Union[SyntheticDataset, IdxDataset], Field(discriminator="kind")]


class LeaveEvent(BaseModel):
    agent: int = Field(ge=1)
    round: int = Field(ge=1)


class ScenarioConfig(BaseModel):
    name: str = "custom"
    agents: int = Field(default=4, ge=1)
    k: int = Field(default=4, ge=1)
    pi: int = Field(default=1, ge=1)
    rho: int = Field(default=1, ge=1)
    alpha: float = Field(default=0.5, gt=0, lt=1)
    fixed_epsilon: bool = False  # epsilon pinned to 1/r every round
    rounds: int = Field(default=20, ge=0)
    train: TrainConfig = Field(default_factory=TrainConfig)
    model: ModelSpec = Field(default_factory=ModelSpec)
    net: NetConfig = Field(default_factory=NetConfig)
    sync_mode: SyncMode = SyncMode.ASYNCHRONOUS
    round_timeout: float = Field(default=100.0, gt=0)  # ms
    sync_fraction: float = Field(default=0.5, gt=0, lt=1)
    close_fraction: float = Field(default=0.8, gt=0, lt=1)
    fetch_timeout: float = Field(default=10.0, gt=0)  # ms
    fetch_retries: int = Field(default=3, ge=1)
    join_timeout: float = Field(default=50.0, gt=0)  # ms
    table_retries: int = Field(default=3, ge=0)
    suspicion_rounds: int = Field(default=3, ge=1)
    storage: Dict[int, int] = Field(default_factory=dict)  # agent -> bytes offered; absent = unlimited
    leaves: list[LeaveEvent] = Field(default_factory=list)
    target_accuracy: Optional[float] = Field(default=None, gt=0, le=1)
    dataset: DatasetConfig = Field(default_factory=SyntheticDataset)
    split: Literal["iid"] = "iid"
    eval_fraction: float = Field(default=0.2, gt=0, lt=1)
    per_agent_metrics: bool = False

    @model_validator(mode="after")
    def _check_consistency(self) -> "ScenarioConfig":
        if self.pi > self.k:
            raise ValueError(f"pi ({self.pi}) must be <= k ({self.k})")
        if self.k > self.model.parameter_count:
            raise ValueError(
                f"k ({self.k}) exceeds the model parameter count ({self.model.parameter_count})"
            )
        if self.close_fraction <= self.sync_fraction:
            raise ValueError("close_fraction must be greater than sync_fraction")
        if isinstance(self.dataset, SyntheticDataset):
            if self.dataset.dimension != self.model.input_size:
                raise ValueError(
                    f"dataset.dimension ({self.dataset.dimension}) must equal "
                    f"model input size ({self.model.input_size})"
                )
            if self.dataset.classes != self.model.num_classes:
                raise ValueError(
                    f"dataset.classes ({self.dataset.classes}) must equal "
                    f"model output size ({self.model.num_classes})"
                )
        for window in self.net.disconnects:
            if window.agent > self.agents:
                raise ValueError(f"disconnect window names unknown agent {window.agent}")
        for leave in self.leaves:
            if leave.agent > self.agents:
                raise ValueError(f"leave event names unknown agent {leave.agent}")
        return self

    def as_dict(self) -> Dict[str, Any]:
        return self.model_dump(mode="json", exclude_none=True)
