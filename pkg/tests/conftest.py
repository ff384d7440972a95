"""Shared helpers for building models out of externally supplied leaf nodes."""

from seqtab.lstm import LstmParams
from seqtab.model import ModelParams


def params_from_nodes(vocab, d, nodes):
    """Assemble ModelParams whose leaves are the given named nodes.

    Used by gradient checks, which need losses rebuilt from fresh float64
    leaves they control.
    """

    def lstm(prefix):
        return LstmParams(
            Wx=nodes[f"{prefix}.Wx"],
            Wh=nodes[f"{prefix}.Wh"],
            b=nodes[f"{prefix}.b"],
            h0=nodes[f"{prefix}.h0"],
            c0=nodes[f"{prefix}.c0"],
        )

    return ModelParams(
        vocab=vocab,
        d=d,
        embeddings=nodes["embeddings"],
        char_lstm=lstm("char_lstm"),
        seq_lstm=lstm("seq_lstm"),
        W1=nodes["W1"],
        W3=nodes["W3"],
        W4=nodes["W4"],
        W5=nodes["W5"],
        W6=nodes["W6"],
        W7=nodes["W7"],
        W8=nodes["W8"],
    )
