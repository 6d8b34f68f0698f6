"""Reference MT19937-64 and sampler used to produce the golden indices in tests/corpus_test.cpp."""
import sys

M64 = (1 << 64) - 1


class MT19937_64:
    def __init__(self, seed):
        self.mt = [0] * 312
        self.mt[0] = seed & M64
        for i in range(1, 312):
            self.mt[i] = (6364136223846793005 * (self.mt[i - 1] ^ (self.mt[i - 1] >> 62)) + i) & M64
        self.idx = 312

    def _twist(self):
        upper, lower = 0xFFFFFFFF80000000, 0x7FFFFFFF
        for i in range(312):
            x = (self.mt[i] & upper) | (self.mt[(i + 1) % 312] & lower)
            xa = x >> 1
            if x & 1:
                xa ^= 0xB5026F5AA96619E9
            self.mt[i] = self.mt[(i + 156) % 312] ^ xa
        self.idx = 0

    def __call__(self):
        if self.idx >= 312:
            self._twist()
        y = self.mt[self.idx]
        self.idx += 1
        y ^= (y >> 29) & 0x5555555555555555
        y ^= (y << 17) & 0x71D67FFFEDA60000
        y ^= (y << 37) & 0xFFF7EEE000000000
        y ^= y >> 43
        return y & M64


def below(rng, bound):
    threshold = (1 << 64) % bound
    while True:
        x = rng()
        if x >= threshold:
            return x % bound


def sample_indices(n, t, seed):
    idx = list(range(n))
    rng = MT19937_64(seed)
    for i in range(t):
        j = i + below(rng, n - i)
        idx[i], idx[j] = idx[j], idx[i]
    return idx[:t]


if __name__ == "__main__":
    rng = MT19937_64(5489)
    for _ in range(9999):
        rng()
    print("10000th:", rng())
    for n, t, seed in [(222, 10, 42), (222, 5, 7), (10, 10, 1), (1000, 8, 20241016)]:
        print(n, t, seed, sample_indices(n, t, seed))
