"""Named, ordered parameter containers."""

import numpy as np

from .tensor import Tensor


class ParameterSet:
    """Ordered mapping from unique names to trainable leaf tensors.

    Iteration order is insertion order, so two sets built by the same
    construction code enumerate parameters identically.
    """

    def __init__(self, dtype=np.float64):
        self.dtype = np.dtype(dtype)
        self._params = {}

    def add(self, name, value):
        if name in self._params:
            raise KeyError(f"duplicate parameter name {name!r}")
        tensor = Tensor(np.asarray(value, dtype=self.dtype),
                        requires_grad=True, dtype=self.dtype)
        self._params[name] = tensor
        return tensor

    def __getitem__(self, name):
        return self._params[name]

    def __contains__(self, name):
        return name in self._params

    def __iter__(self):
        return iter(self._params)

    def __len__(self):
        return len(self._params)

    def names(self):
        return list(self._params)

    def items(self):
        return self._params.items()

    def values(self):
        return self._params.values()

    def zero_grad(self):
        for p in self._params.values():
            p.grad = None

    def grads(self):
        """Current gradients, zeros where none were accumulated."""
        return {name: (p.grad if p.grad is not None
                       else np.zeros_like(p.data))
                for name, p in self._params.items()}

    def state_dict(self):
        return {name: p.data.copy() for name, p in self._params.items()}

    def load_state_dict(self, state):
        missing = set(self._params) - set(state)
        extra = set(state) - set(self._params)
        if missing or extra:
            raise KeyError(f"parameter mismatch: missing={sorted(missing)} "
                           f"unexpected={sorted(extra)}")
        for name, p in self._params.items():
            value = np.asarray(state[name])
            if value.shape != p.shape:
                raise ValueError(f"{name}: shape {value.shape} != {p.shape}")
            p.data = np.array(value, dtype=self.dtype)

    def num_values(self):
        return int(sum(p.size for p in self._params.values()))
