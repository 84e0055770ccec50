from .layers import Dense, BatchNorm, LeakyReLU, Network, build_mlp, forward, backward, \
    polyak_update
from .optimizers import Optimizer, exponential_decay
from .gradcheck import grad_check, GradCheckResult
