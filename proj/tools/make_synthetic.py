#!/usr/bin/env python3
"""Generate the synthetic prompt/response fixture and its reference statistics.

The statistics embedded in the metadata block are computed here, independently
of the C++ library, and the test-suite checks the library against them.

    python3 tools/make_synthetic.py --out data/synthetic-120.json
"""

import argparse
import json
import string

import numpy as np

DESCRIPTORS = {
    # word: (x, y) centre on the controller square
    "warm": (0.0, -5.0),
    "bright": (0.5, 4.5),
    "dark": (-1.5, -4.0),
    "bassy": (3.0, -4.0),
    "airy": (2.5, 4.0),
    "crisp": (1.5, 3.5),
    "muffled": (-3.5, -3.5),
    "thin": (-3.0, 3.0),
    "punchy": (3.5, -1.5),
    "clear": (-2.5, 2.0),
    "full": (2.0, -2.5),
    "soft": (-1.0, -2.5),
    "harsh": (-2.0, 4.5),
    "rich": (2.5, -1.0),
    "smooth": (0.5, -2.0),
    "deep": (2.0, -4.5),
    "sharp": (-1.0, 4.0),
    "mellow": (-0.5, -3.5),
    "open": (2.0, 2.5),
    "natural": (0.0, 0.0),
}

INTENSITY = {"slightly": 0.5, "a bit": 0.6, "more": 0.9, "much": 1.2, "very": 1.2, "really": 1.1}

MEDIA = {
    "music": ["music1", "music2"],
    "song": ["music1", "music2"],
    "track": ["music1", "music2"],
    "movie": ["movies1", "movies2"],
    "film": ["movies1", "movies2"],
    "dialogue": ["movies1", "movies2"],
    "rain": ["nature_noise"],
    "forest": ["nature_noise"],
    "story": ["audiobooks"],
    "narration": ["audiobooks"],
    "podcast": ["other:podcast"],
}

FRAMES = [
    "make the {medium} sound {i1} {d1} and {d2}",
    "i want the {medium} to feel {i1} {d1} but still {d2}",
    "please make this {medium} {i1} {d1} and a little {d2}",
    "can you give the {medium} a {d1} and {d2} tone",
    "the {medium} should sound {i1} {d1}, not too {d2}",
    "turn the {medium} into something {d1} and {i1} {d2}",
    "give me a {i1} {d1} sound for the {medium}",
    "i would like the {medium} {d1}, {d2} and {i1} clean",
]


def tokens(text):
    out = []
    for raw in text.split():
        tok = raw.strip(string.punctuation).lower()
        if tok:
            out.append(tok)
    return out


def gen_variance(points):
    pts = np.asarray(points, dtype=float)
    cov = np.cov(pts.T, ddof=1)
    return max(0.0, float(np.linalg.det(cov)))


def build(seed, n_prompts, n_resp):
    rng = np.random.default_rng(seed)
    names = sorted(DESCRIPTORS)
    intens = sorted(INTENSITY)
    media = sorted(MEDIA)
    seen = set()
    entries = []
    while len(entries) < n_prompts:
        frame = FRAMES[rng.integers(len(FRAMES))]
        medium = media[rng.integers(len(media))]
        d1, d2 = rng.choice(names, size=2, replace=False)
        i1 = intens[rng.integers(len(intens))]
        prompt = frame.format(medium=medium, d1=d1, d2=d2, i1=i1)
        if prompt in seen:
            continue
        seen.add(prompt)
        w = INTENSITY[i1]
        c1 = np.array(DESCRIPTORS[d1]) * w
        c2 = np.array(DESCRIPTORS[d2])
        bimodal = rng.random() < 0.2
        if bimodal:
            centres = [np.clip(c1, -5, 5), np.clip(c2, -5, 5)]
        else:
            centres = [np.clip(0.65 * c1 + 0.35 * c2, -5, 5)]
        sx, sy = rng.uniform(0.8, 3.0, size=2)
        rho = rng.uniform(-0.5, 0.5)
        cov = np.array([[sx * sx, rho * sx * sy], [rho * sx * sy, sy * sy]])
        resp = []
        for k in range(n_resp):
            c = centres[k % len(centres)]
            p = rng.multivariate_normal(c, cov)
            p = np.clip(np.round(p, 2), -6.0, 6.0)
            resp.append([float(p[0]), float(p[1])])
        types = MEDIA[medium]
        audio = types[rng.integers(len(types))]
        entries.append({"id": f"p{len(entries) + 1:03d}", "prompt": prompt, "audio_type": audio, "responses": resp})
    return entries


def stats(entries):
    vocab = set()
    words = 0
    gvs = []
    sx = sy = 0.0
    n = 0
    for e in entries:
        t = tokens(e["prompt"])
        words += len(t)
        vocab.update(t)
        gvs.append(gen_variance(e["responses"]))
        for x, y in e["responses"]:
            sx += x
            sy += y
            n += 1
    return {
        "total_prompts": str(len(entries)),
        "total_annotations": str(sum(len(e["responses"]) for e in entries)),
        "vocab_size": str(len(vocab)),
        "avg_words_per_prompt": repr(words / len(entries)),
        "gv_avg": repr(sum(gvs) / len(gvs)),
        "gv_min": repr(min(gvs)),
        "gv_max": repr(max(gvs)),
        "centroid_x": repr(sx / n),
        "centroid_y": repr(sy / n),
    }


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", required=True)
    ap.add_argument("--seed", type=int, default=1207)
    ap.add_argument("--prompts", type=int, default=120)
    ap.add_argument("--responses", type=int, default=11)
    args = ap.parse_args()
    entries = build(args.seed, args.prompts, args.responses)
    meta = {
        "source": "synthetic population (tools/make_synthetic.py)",
        "version": "1",
        "license": "CC0-1.0",
        "generator_seed": str(args.seed),
    }
    meta.update({"expected_" + k: v for k, v in stats(entries).items()})
    doc = {"metadata": meta, "entries": entries}
    with open(args.out, "w", encoding="utf-8") as f:
        json.dump(doc, f, indent=1)
        f.write("\n")


if __name__ == "__main__":
    main()
