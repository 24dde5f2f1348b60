"""Hardening by feature mapping, step by step.

A detector normally sees the raw three-valued features. A feature map replaces
them by psi chains of operators over random feature blocks, so an attacker who
flips one raw feature no longer knows which inputs of the detector move.

    python demos/01_feature_maps.py
"""

import numpy as np

from phishpoc.dataset import canonical_schema, synthetic_phishing
from phishpoc.opchain import generate_map, parse_chain, prevalence, serialize_map, transform
from phishpoc.opchain.chain import evaluate

schema = canonical_schema()

# a chain is an expression tree; leaves are feature indices
ch = parse_chain("(add (sin f0) (pow2 f5))")
print("chain", ch, "size", ch.size)
x = np.zeros((1, len(schema)))
x[0, 0], x[0, 5] = 1.0, -1.0
print("value on a row with ip_address=1, url_length=-1:", float(evaluate(ch, x)[0]))

# a map built for 70% prevalence touches exactly ceil(0.7 * 27) = 19 features
fmap = generate_map(schema, psi=20, max_size=3, prevalence_target=70, rng=42)
print(f"\n{fmap.psi} chains covering {len(fmap.covered())} of {len(schema)} features "
      f"({prevalence(schema, fmap):.1f}%)")
print("first chains:", *map(str, fmap.chains[:3]), sep="\n  ")

data = synthetic_phishing(60, 40, seed=1)
mapped = transform(data, fmap)
print(f"\nraw matrix {data.X.shape} -> mapped matrix {mapped.X.shape}")

# the map file is plain text and reproduces the map byte for byte
text = serialize_map(fmap)
print("\n" + "\n".join(text.splitlines()[:8]) + "\n  ...")
