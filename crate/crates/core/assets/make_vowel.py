"""Regenerate vowel_a.wav: a synthetic /a/, 1.6 s, 25 kHz, 16-bit mono."""
import math
import random
import struct
import wave

RATE = 25000
SECONDS = 1.6
FORMANTS = [(700, 110), (1220, 120), (2600, 160)]


def resonator(x, freq, bw):
    r = math.exp(-math.pi * bw / RATE)
    c1 = 2 * r * math.cos(2 * math.pi * freq / RATE)
    c2 = -r * r
    g = 1 - r
    y1 = y2 = 0.0
    out = []
    for v in x:
        y = g * v + c1 * y1 + c2 * y2
        out.append(y)
        y2, y1 = y1, y
    return out


def main():
    rng = random.Random(25)
    n = int(RATE * SECONDS)
    src = []
    phase = 0.0
    for i in range(n):
        f0 = 120 + 4 * math.sin(2 * math.pi * 5 * i / RATE)
        phase += f0 / RATE
        pulse = 1.0 if phase >= 1.0 else 0.0
        phase -= math.floor(phase)
        src.append(pulse + 0.01 * rng.uniform(-1, 1))
    x = src
    for f, bw in FORMANTS:
        x = resonator(x, f, bw)
    peak = max(abs(v) for v in x)
    fade = int(0.02 * RATE)
    pcm = []
    for i, v in enumerate(x):
        env = min(1.0, i / fade, (n - 1 - i) / fade)
        pcm.append(int(round(0.7 * 32767 * env * v / peak)))
    with wave.open("vowel_a.wav", "wb") as w:
        w.setnchannels(1)
        w.setsampwidth(2)
        w.setframerate(RATE)
        w.writeframes(struct.pack("<%dh" % n, *pcm))


if __name__ == "__main__":
    main()
