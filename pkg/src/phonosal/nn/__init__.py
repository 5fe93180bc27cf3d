from .models import ForwardTrace, Model, ModelSpec, build_model, purity_receptive_field, receptive_field
from .train import Adam, TrainConfig, cross_entropy, top1_accuracy, train, train_step
from .checkpoint import file_digest, load_model, save_model

__all__ = [
    "Adam", "ForwardTrace", "Model", "ModelSpec", "TrainConfig",
    "build_model", "cross_entropy", "file_digest", "load_model",
    "purity_receptive_field", "receptive_field", "save_model",
    "top1_accuracy", "train", "train_step",
]
