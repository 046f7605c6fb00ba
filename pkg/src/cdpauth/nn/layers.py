"""Parameter containers and the two parameterized layers (conv, dense)."""

from __future__ import annotations

import numpy as np

from . import engine
from .engine import Tensor

__all__ = ["Parameter", "Module", "Conv2d", "Dense"]


class Parameter(Tensor):
    """A named, trainable tensor."""

    __slots__ = ("name",)

    def __init__(self, data: np.ndarray, name: str):
        super().__init__(data, requires_grad=True)
        self.name = name


class Module:
    """Base class: parameter discovery, counting, and state (de)serialization.

    Submodules and parameters are discovered from instance attributes in
    definition order, so state round-trips are stable.
    """

    def parameters(self) -> list[Parameter]:
        out: list[Parameter] = []
        for value in self.__dict__.values():
            if isinstance(value, Parameter):
                out.append(value)
            elif isinstance(value, Module):
                out.extend(value.parameters())
            elif isinstance(value, (list, tuple)):
                for item in value:
                    if isinstance(item, Module):
                        out.extend(item.parameters())
                    elif isinstance(item, Parameter):
                        out.append(item)
        return out

    @property
    def param_count(self) -> int:
        return sum(p.data.size for p in self.parameters())

    def zero_grad(self) -> None:
        for p in self.parameters():
            p.grad = None

    def state_arrays(self) -> dict[str, np.ndarray]:
        """Parameter values keyed by name, in discovery order."""
        state: dict[str, np.ndarray] = {}
        for p in self.parameters():
            if p.name in state:
                raise ValueError(f"duplicate parameter name {p.name!r}")
            state[p.name] = p.data.copy()
        return state

    def load_state(self, state: dict[str, np.ndarray]) -> None:
        params = {p.name: p for p in self.parameters()}
        if set(params) != set(state):
            missing = sorted(set(params) - set(state))
            extra = sorted(set(state) - set(params))
            raise ValueError(f"state mismatch: missing {missing}, unexpected {extra}")
        for name, p in params.items():
            arr = np.asarray(state[name], dtype=np.float64)
            if arr.shape != p.data.shape:
                raise ValueError(
                    f"shape mismatch for {name!r}: have {p.data.shape}, got {arr.shape}"
                )
            p.data = arr.copy()


def _he_uniform(rng: np.random.Generator, shape: tuple[int, ...], fan_in: int) -> np.ndarray:
    limit = np.sqrt(6.0 / fan_in)
    return rng.uniform(-limit, limit, size=shape)


class Conv2d(Module):
    """3x3-style convolution layer with He-uniform kernels and zero biases."""

    def __init__(
        self,
        in_channels: int,
        out_channels: int,
        kernel_size: int,
        rng: np.random.Generator,
        name: str,
        stride: int = 1,
        padding: int | str = "same",
    ):
        if padding == "same":
            if stride != 1:
                raise ValueError("'same' padding assumes stride 1")
            padding = kernel_size // 2
        self.stride = stride
        self.padding = int(padding)
        fan_in = in_channels * kernel_size * kernel_size
        self.weight = Parameter(
            _he_uniform(rng, (out_channels, in_channels, kernel_size, kernel_size), fan_in),
            f"{name}.weight",
        )
        self.bias = Parameter(np.zeros(out_channels), f"{name}.bias")

    def __call__(self, x: Tensor) -> Tensor:
        return engine.conv2d(x, self.weight, self.bias, stride=self.stride, padding=self.padding)


class Dense(Module):
    """Fully connected layer."""

    def __init__(self, in_features: int, out_features: int, rng: np.random.Generator, name: str):
        self.weight = Parameter(
            _he_uniform(rng, (in_features, out_features), in_features), f"{name}.weight"
        )
        self.bias = Parameter(np.zeros(out_features), f"{name}.bias")

    def __call__(self, x: Tensor) -> Tensor:
        return engine.dense(x, self.weight, self.bias)
