"""The outer convolutional code and soft Viterbi decoding.

Frames are encoded with the rate-1/3, constraint-length-7 code, mapped to
QPSK, sent over an AWGN channel and decoded from exact LLRs. The decoder
only compares path metrics, so scaling all LLRs by a positive constant
changes nothing.
"""

# %% Encode, transmit, decode
import numpy as np

from cellfree_pm.coding import CodeConfig, conv_encode, viterbi_decode

rng = np.random.default_rng(0)
code = CodeConfig()
info = rng.integers(0, 2, (200, 100), dtype=np.int8)
coded = conv_encode(info, code)
print("info bits per frame:", info.shape[1], " coded bits per frame:", coded.shape[1])

for snr_db in (-4.0, -2.0, 0.0):
    sigma2 = 10 ** (-snr_db / 10)
    amp = 1 - 2.0 * coded  # bit 0 -> +1
    y = amp + np.sqrt(sigma2) * rng.standard_normal(amp.shape)
    llrs = -2 * y / sigma2  # log P(1)/P(0)
    decoded = viterbi_decode(llrs, code)
    fer = np.mean(np.any(decoded != info, axis=1))
    print(f"Es/N0 {snr_db:+.0f} dB: uncoded BER {np.mean((llrs > 0) != coded):.3f}, FER {fer:.3f}")

# %% Positive scaling of the LLRs does not change decisions
same = np.array_equal(viterbi_decode(5.0 * llrs, code), decoded)
print("decisions unchanged under scaling:", same)
