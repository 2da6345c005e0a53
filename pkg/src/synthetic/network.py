"""Two-layer linear-softmax classifier used by the synthetic suites."""

import numpy as np

from src.errors import EmptySplit, ShapeMismatch
from src.models.tensor_bundle import TensorBundle

LAYER1_WEIGHT = 'layer1.weight'
LAYER1_BIAS = 'layer1.bias'
LAYER2_WEIGHT = 'layer2.weight'
LAYER2_BIAS = 'layer2.bias'

TRAINING_STEPS = 200
LEARNING_RATE = 0.1


class DataSplit:
    """Labeled points of one task split."""

    def __init__(self, features: np.ndarray, labels: np.ndarray):
        """Initialize the split.

        Args:
            features: N×d f32 inputs
            labels: N integer class labels
        """
        self.features = np.asarray(features, dtype=np.float32)
        self.labels = np.asarray(labels, dtype=np.int64)
        if self.features.ndim != 2 or self.labels.shape != (self.features.shape[0],):
            raise ShapeMismatch(f'Features {self.features.shape} and labels {self.labels.shape} do not pair up')

    def __len__(self) -> int:
        return self.labels.shape[0]


def init_network(rng: np.random.Generator, input_dim: int, hidden_dim: int, num_classes: int) -> TensorBundle:
    """Random pre-trained network θ_0 with zero biases."""
    return TensorBundle(
        [
            (LAYER1_WEIGHT, rng.normal(0.0, 1.0 / np.sqrt(input_dim), size=(hidden_dim, input_dim))),
            (LAYER1_BIAS, np.zeros(hidden_dim)),
            (LAYER2_WEIGHT, rng.normal(0.0, 1.0 / np.sqrt(hidden_dim), size=(num_classes, hidden_dim))),
            (LAYER2_BIAS, np.zeros(num_classes)),
        ]
    )


def logits(params, features: np.ndarray) -> np.ndarray:
    """Forward pass with identity hidden activation, in float64."""
    hidden = features @ np.asarray(params[LAYER1_WEIGHT], dtype=np.float64).T + params[LAYER1_BIAS]
    return hidden @ np.asarray(params[LAYER2_WEIGHT], dtype=np.float64).T + params[LAYER2_BIAS]


def _softmax(z: np.ndarray) -> np.ndarray:
    shifted = z - z.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=1, keepdims=True)


def train(
    base: TensorBundle, split: DataSplit, steps: int = TRAINING_STEPS, learning_rate: float = LEARNING_RATE
) -> TensorBundle:
    """Fine-tune ``base`` with full-batch gradient descent on the cross-entropy loss.

    Args:
        base: Starting parameters θ_0
        split: Training data
        steps: Number of gradient steps
        learning_rate: Constant step size

    Returns:
        TensorBundle: Fine-tuned parameters θ_t, stored as f32
    """
    if len(split) == 0:
        raise EmptySplit('Cannot train on an empty split')

    params = {name: value.astype(np.float64) for name, value in base.items()}
    features = split.features.astype(np.float64)
    num_classes = params[LAYER2_BIAS].shape[0]
    targets = np.eye(num_classes)[split.labels]
    n = len(split)

    for _ in range(steps):
        hidden = features @ params[LAYER1_WEIGHT].T + params[LAYER1_BIAS]
        probs = _softmax(hidden @ params[LAYER2_WEIGHT].T + params[LAYER2_BIAS])
        grad_out = (probs - targets) / n
        grad_hidden = grad_out @ params[LAYER2_WEIGHT]

        params[LAYER2_WEIGHT] -= learning_rate * (grad_out.T @ hidden)
        params[LAYER2_BIAS] -= learning_rate * grad_out.sum(axis=0)
        params[LAYER1_WEIGHT] -= learning_rate * (grad_hidden.T @ features)
        params[LAYER1_BIAS] -= learning_rate * grad_hidden.sum(axis=0)

    return TensorBundle([(name, params[name]) for name in base.names], meta=base.meta)


def evaluate_accuracy(model: TensorBundle, split: DataSplit) -> float:
    """Fraction of points whose argmax logit is the true label (ties go to the lower class index).

    Raises:
        EmptySplit: If the split holds no point
        ShapeMismatch: If the model does not match the feature or class dimensions
    """
    if len(split) == 0:
        raise EmptySplit('Cannot evaluate accuracy on an empty split')
    input_dim = model[LAYER1_WEIGHT].shape[1]
    if split.features.shape[1] != input_dim:
        raise ShapeMismatch(f'Model expects {input_dim} input features, split has {split.features.shape[1]}')
    if split.labels.max() >= model[LAYER2_BIAS].shape[0]:
        raise ShapeMismatch(f'Label {split.labels.max()} exceeds the {model[LAYER2_BIAS].shape[0]} model classes')

    predictions = np.argmax(logits(model, split.features.astype(np.float64)), axis=1)
    return float(np.mean(predictions == split.labels))
