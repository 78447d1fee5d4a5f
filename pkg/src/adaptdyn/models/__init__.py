from .bundle import LATENT_DIM_DEFAULT, ModelBundle, build_bundle
from .checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from .nets import MLP, AdaptiveModule, DiscreteStateNet, EnvEncoder, StateNet, param_hash
from .normalizer import Normalizer
from .specs import Conv1DSpec, MLPSpec

__all__ = [
    "MLPSpec",
    "Conv1DSpec",
    "Normalizer",
    "MLP",
    "StateNet",
    "DiscreteStateNet",
    "EnvEncoder",
    "AdaptiveModule",
    "param_hash",
    "ModelBundle",
    "build_bundle",
    "LATENT_DIM_DEFAULT",
    "CheckpointError",
    "save_checkpoint",
    "load_checkpoint",
]
