"""Small float64 neural-network core: layers, LSTM, loss, Adam, gradient checks."""
from .gradcheck import check_layer, check_model, numeric_grad, relative_error
from .layers import (
    Conv1d,
    Dense,
    Flatten,
    Layer,
    ReLU,
    Sequential,
    ShapeError,
    SwapAxes,
    conv1d_forward,
    dense_forward,
    relu,
)
from .losses import mse_loss
from .lstm import LSTM, BiLSTM, LstmCellParams, bilstm_forward, lstm_step
from .optim import AdamState, adam_step
from .serialize import FormatError, load_weights, loads_weights, save_weights, dumps_weights

__all__ = [
    "AdamState", "BiLSTM", "Conv1d", "Dense", "Flatten", "FormatError", "LSTM", "Layer",
    "LstmCellParams", "ReLU", "Sequential", "ShapeError", "SwapAxes", "adam_step",
    "bilstm_forward", "check_layer", "check_model", "conv1d_forward", "dense_forward",
    "dumps_weights", "load_weights", "loads_weights", "lstm_step", "mse_loss",
    "numeric_grad", "relative_error", "relu", "save_weights",
]
