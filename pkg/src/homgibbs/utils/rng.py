import numpy as np

# 固定使用计数器型的 Philox-4x64-10，保证不同平台、不同线程数下序列一致
BIT_GENERATOR = 'Philox'
SEED_MASK = (1 << 64) - 1


def make_rng(seed, stream=0):
    """
    按 (seed, stream) 派生一个独立的随机数生成器。
    :param seed: 64 位整数种子。
    :param stream: 流编号，通常是副本编号或起点编号。
    :return: numpy Generator。
    """
    seq = np.random.SeedSequence(entropy=int(seed) & SEED_MASK, spawn_key=(int(stream),))
    return np.random.Generator(np.random.Philox(seq))


def log_uniform(rng, size, low, high):
    """在 [low, high] 上对数均匀地抽取正数。"""
    return np.exp(rng.uniform(np.log(low), np.log(high), size=size))
