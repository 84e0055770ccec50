from .Base import LossReport, ConvergenceMonitor, ddqn_target, conservative_reg
from .poincare import PoincareEmbedding, EmbeddingTable, poincare_distance, nll_loss, \
    train_embeddings, action_features
from .appraisal_agent import AppraisalAgent
from .dialogue_agent import DialogueAgent
from .reward_model import RewardModel, offline_policy_value
