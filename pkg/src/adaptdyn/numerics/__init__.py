from .tensor import (
    GraphError,
    ShapeError,
    Tensor,
    add,
    backward,
    concat,
    conv1d,
    dropout,
    grad_enabled,
    matmul,
    mean,
    mul,
    no_grad,
    relu,
    reshape,
    sub,
    sum_sq,
    tanh,
    topo_order,
    tslice,
)
from .ode import IntegrationError, SolverKind, integrate, ode_step
from .quat import quat_angle, quat_conj, quat_mul, quat_normalize, rotmat_from_quat

__all__ = [
    "Tensor",
    "ShapeError",
    "GraphError",
    "no_grad",
    "grad_enabled",
    "backward",
    "topo_order",
    "add",
    "sub",
    "mul",
    "matmul",
    "relu",
    "tanh",
    "concat",
    "tslice",
    "reshape",
    "mean",
    "sum_sq",
    "conv1d",
    "dropout",
    "SolverKind",
    "IntegrationError",
    "ode_step",
    "integrate",
    "quat_mul",
    "quat_conj",
    "quat_normalize",
    "rotmat_from_quat",
    "quat_angle",
]
