from roomcloud.ptrnet.checkpoint import load_checkpoint, save_checkpoint
from roomcloud.ptrnet.config import PtrNetConfig
from roomcloud.ptrnet.decode import Decoded, beam_decode, decode_rooms, greedy_decode
from roomcloud.ptrnet.model import (
    Batch,
    ForwardTrace,
    attention_scores,
    backward,
    encode,
    forward,
    forward_teacher_forced,
    init_params,
    loss_and_grad,
    make_batch,
    pointer_distribution,
    with_terminal,
)
from roomcloud.ptrnet.optim import AdamState, adam_step, clip_gradients, global_norm
from roomcloud.ptrnet.train import TrainResult, batch_indices, learning_rate, train

__all__ = [
    "AdamState", "Batch", "Decoded", "ForwardTrace", "PtrNetConfig", "TrainResult",
    "adam_step", "attention_scores", "backward", "batch_indices", "beam_decode",
    "clip_gradients", "decode_rooms", "encode", "forward", "forward_teacher_forced",
    "global_norm", "greedy_decode", "init_params", "learning_rate", "load_checkpoint",
    "loss_and_grad", "make_batch", "pointer_distribution", "save_checkpoint", "train",
    "with_terminal",
]
