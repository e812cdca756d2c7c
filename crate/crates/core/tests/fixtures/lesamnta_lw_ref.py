"""Standalone Lesamnta-LW-256 reference used to produce the Rust test fixtures.

Written independently of the Rust crate: byte-oriented, no shared tables,
S-box generated from the GF(2^8) inverse plus affine map rather than copied.
"""


def _gmul(a, b):
    r = 0
    while b:
        if b & 1:
            r ^= a
        a <<= 1
        if a & 0x100:
            a ^= 0x11B
        b >>= 1
    return r


def _inv(a):
    if a == 0:
        return 0
    for c in range(1, 256):
        if _gmul(a, c) == 1:
            return c
    raise AssertionError


def _rotl8(x, n):
    return ((x << n) | (x >> (8 - n))) & 0xFF


SBOX = []
for _a in range(256):
    _b = _inv(_a)
    SBOX.append(_b ^ _rotl8(_b, 1) ^ _rotl8(_b, 2) ^ _rotl8(_b, 3) ^ _rotl8(_b, 4) ^ 0x63)

MDS = [[2, 3, 1, 1], [1, 2, 3, 1], [1, 1, 2, 3], [3, 1, 1, 2]]


def _mix_column(col):
    return [
        _gmul(MDS[r][0], col[0]) ^ _gmul(MDS[r][1], col[1]) ^ _gmul(MDS[r][2], col[2]) ^ _gmul(MDS[r][3], col[3])
        for r in range(4)
    ]


def q_func(word):
    col = [SBOX[b] for b in word.to_bytes(4, "big")]
    return int.from_bytes(bytes(_mix_column(col)), "big")


def g_func(word):
    b = [SBOX[x] for x in word.to_bytes(8, "big")]
    # 4x2 state, column-major; ShiftRows rotates row r left by r over 2 columns.
    state = [[b[c * 4 + r] for c in range(2)] for r in range(4)]
    state = [[state[r][(c + r) % 2] for c in range(2)] for r in range(4)]
    cols = [[state[r][c] for r in range(4)] for c in range(2)]
    out = _mix_column(cols[0]) + _mix_column(cols[1])
    return int.from_bytes(bytes(out), "big")


POLY32 = (1 << 22) | (1 << 2) | (1 << 1) | 1
ROUNDS = 64
M32 = 0xFFFFFFFF
M64 = 0xFFFFFFFFFFFFFFFF


def round_constants():
    c = 1
    out = []
    for _ in range(ROUNDS):
        out.append(c)
        carry = c >> 31
        c = (c << 1) & M32
        if carry:
            c ^= POLY32
    return out


def encrypt(key16, pt32):
    k = [int.from_bytes(key16[i * 4:(i + 1) * 4], "big") for i in range(4)]
    x = [int.from_bytes(pt32[i * 8:(i + 1) * 8], "big") for i in range(4)]
    for c in round_constants():
        rk = (k[0] << 32) | k[1]
        k = [k[1], k[2], k[3], k[0] ^ q_func(k[3] ^ c)]
        x = [x[1], x[2], x[3], x[0] ^ g_func(x[3] ^ rk)]
    return b"".join(v.to_bytes(8, "big") for v in x)


IV = bytes.fromhex(
    "6a09e667f3bcc908" "bb67ae8584caa73b" "3c6ef372fe94f82b" "a54ff53a5f1d36f1"
)


def compress(chain, block):
    return encrypt(chain[:16], block + chain[16:])


def pad(data):
    blocks = [data[i:i + 16] for i in range(0, len(data), 16)]
    if blocks and len(blocks[-1]) < 16:
        blocks[-1] = blocks[-1] + b"\x00" * (16 - len(blocks[-1]))
    blocks.append((len(data) * 8).to_bytes(8, "big") + b"\x00" * 8)
    return blocks


def digest(data):
    h = IV
    for blk in pad(data):
        h = compress(h, blk)
    return h
