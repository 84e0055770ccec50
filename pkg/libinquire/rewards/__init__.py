from .components import RewardBreakdown, VocabularyState, RewardEngine, relevance_reward, \
    novelty_reward, succinct_reward, aggregate, DEFAULT_WEIGHTS
