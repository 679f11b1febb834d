"""Seeded xorshift64* generator for reproducible perturbations.

The sequence is pinned down exactly so that any implementation can
reproduce it:

    state <- seed XOR 0x9E3779B97F4A7C15, forced to 1 if that is zero
    each draw: state ^= state >> 12
               state ^= (state << 25) mod 2^64
               state ^= state >> 27
               output = (state * 0x2545F4914F6CDD1D) mod 2^64
    uniform() = (output >> 11) / 2^53   in [0, 1)

All arithmetic is on 64-bit unsigned integers.
"""

_MASK = (1 << 64) - 1
_SEED_MIX = 0x9E3779B97F4A7C15
_MULT = 0x2545F4914F6CDD1D


class XorShift64Star:
    """Deterministic uniform generator; see module docstring for the spec."""

    def __init__(self, seed):
        state = (int(seed) ^ _SEED_MIX) & _MASK
        self._state = state if state != 0 else 1

    def next_u64(self):
        s = self._state
        s ^= s >> 12
        s = (s ^ (s << 25)) & _MASK
        s ^= s >> 27
        self._state = s
        return (s * _MULT) & _MASK

    def uniform(self):
        """One double in [0, 1) with 53 random bits."""
        return (self.next_u64() >> 11) * 2.0**-53

    def uniforms(self, count):
        return [self.uniform() for _ in range(count)]
