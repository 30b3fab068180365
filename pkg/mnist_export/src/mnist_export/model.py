"""The classifier: a small conv stack with a 40-unit penultimate layer.

Only two things about this network matter downstream: the penultimate
layer has 40 sigmoid units, and the final classification layer is a
bias-free 40x10 linear map.  Everything before that is an ordinary
feature extractor sized for either 8x8 or 28x28 grayscale digits.
"""

import numpy as np
import torch
from torch import nn

FEATURE_UNITS = 40
N_CLASSES = 10


class DigitNet(nn.Module):
    def __init__(self, height: int, width: int):
        super().__init__()
        self.extractor = nn.Sequential(
            nn.Conv2d(1, 8, kernel_size=3),
            nn.ReLU(),
            nn.Conv2d(8, 16, kernel_size=3),
            nn.ReLU(),
            nn.Flatten(),
            nn.Linear(16 * (height - 4) * (width - 4), FEATURE_UNITS),
            nn.Sigmoid(),
        )
        self.head = nn.Linear(FEATURE_UNITS, N_CLASSES, bias=False)

    def features(self, x: torch.Tensor) -> torch.Tensor:
        return self.extractor(x)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.head(self.extractor(x))


def _as_batch(images: np.ndarray) -> torch.Tensor:
    return torch.from_numpy(np.ascontiguousarray(images)).float().unsqueeze(1)


def train_model(
    train_images: np.ndarray,
    train_labels: np.ndarray,
    seed: int = 0,
    epochs: int = 40,
    batch_size: int = 64,
    learning_rate: float = 1e-3,
) -> DigitNet:
    """Train on (n, H, W) images in [0, 1]; deterministic given seed."""
    torch.manual_seed(seed)
    height, width = train_images.shape[1:]
    model = DigitNet(height, width)
    x = _as_batch(train_images)
    y = torch.from_numpy(np.ascontiguousarray(train_labels)).long()
    optimizer = torch.optim.Adam(model.parameters(), lr=learning_rate)
    loss_fn = nn.CrossEntropyLoss()
    shuffler = torch.Generator().manual_seed(seed)
    model.train()
    for _ in range(epochs):
        order = torch.randperm(len(x), generator=shuffler)
        for start in range(0, len(x), batch_size):
            batch = order[start : start + batch_size]
            optimizer.zero_grad()
            loss_fn(model(x[batch]), y[batch]).backward()
            optimizer.step()
    model.eval()
    return model


@torch.no_grad()
def evaluate(model: DigitNet, images: np.ndarray, labels: np.ndarray) -> float:
    model.eval()
    predicted = model(_as_batch(images)).argmax(dim=1).numpy()
    return float(np.mean(predicted == labels))


@torch.no_grad()
def penultimate_features(model: DigitNet, images: np.ndarray) -> np.ndarray:
    """Sigmoid activations of the 40-unit layer, as float64 (n, 40)."""
    model.eval()
    return model.features(_as_batch(images)).double().numpy()


def head_weights(model: DigitNet) -> np.ndarray:
    """The classification layer as a feature-major 40x10 float64 matrix."""
    return model.head.weight.detach().double().numpy().T.copy()
