from .graph import INPUT, LayerDef, NetworkDef, GraphBuilder, infer_layer_shape
from .engine import Network, ForwardCache, init_layer, snap_float32
from .accounting import count_params, count_macs, layer_macs, gflops
from .checkpoint import Checkpoint, save_checkpoint, load_checkpoint
from .training import Adam, train, mse_loss, softmax, softmax_cross_entropy

__all__ = [
    'INPUT', 'LayerDef', 'NetworkDef', 'GraphBuilder', 'infer_layer_shape',
    'Network', 'ForwardCache', 'init_layer', 'snap_float32',
    'count_params', 'count_macs', 'layer_macs', 'gflops',
    'Checkpoint', 'save_checkpoint', 'load_checkpoint',
    'Adam', 'train', 'mse_loss', 'softmax', 'softmax_cross_entropy',
]
