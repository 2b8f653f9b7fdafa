from .autodiff import (Tape, TapeConsumedError, Var, add, concat, constant,
                       gather_rows, masked_softmax_xent, matmul, mean_all, mul,
                       relu, reshape, scale, select_step, sigmoid, slice_cols,
                       sum_all, tanh)
from .gradcheck import grad_check, relative_error
from .layers import (DenseParams, LSTMCellParams, ShapeError, bilstm_encode,
                     dense, glorot_uniform, init_dense, init_lstm, lstm_step)
from .optim import Adam, NonFiniteGradientError

__all__ = [
    "Tape", "TapeConsumedError", "Var", "add", "concat", "constant",
    "gather_rows", "masked_softmax_xent", "matmul", "mean_all", "mul", "relu",
    "reshape", "scale", "select_step", "sigmoid", "slice_cols", "sum_all", "tanh",
    "grad_check", "relative_error",
    "DenseParams", "LSTMCellParams", "ShapeError", "bilstm_encode", "dense",
    "glorot_uniform", "init_dense", "init_lstm", "lstm_step",
    "Adam", "NonFiniteGradientError",
]
