"""Gray-box attacks against a baseline and a hardened detector.

GBA1 rewrites URL facts, GBA2 rewrites page facts, GBA3 does both. GBA-delta
copies a random delta-percent slice of the benign reference profile into each
phishing row. Impact is the relative drop in recall on the phishing rows.

    python demos/02_gray_box_attacks.py
"""

from phishpoc.attacks import AttackSpec, perturb
from phishpoc.classifiers import ClassifierSpec, train
from phishpoc.dataset import benign_reference_profile, split, synthetic_phishing
from phishpoc.evaluation import attack_impact
from phishpoc.harness import HardenedModel, PocParams, select_poc_map
from phishpoc.opchain import transform

data = synthetic_phishing(600, 400, seed=3)
train_set, test_set = split(data, 0.8, seed=0)
reference = benign_reference_profile(train_set)

spec = ClassifierSpec("RandomForest", {"n_estimators": 30}, seed=0)
baseline = train(spec, train_set)

# best of 10 random maps by validation F1, then retrain on the full training split
sel = select_poc_map(spec, train_set, PocParams(psi=20, candidate_maps=10), seed=0)
hardened = HardenedModel(sel.fmap, train(spec, transform(train_set, sel.fmap)))
print(f"selected candidate {sel.index}, validation F1 {sel.scores[sel.index]:.3f}\n")

print(f"{'attack':8} {'baseline':>9} {'hardened':>9}")
for attack in ("GBA1", "GBA2", "GBA3", "GBAd30", "GBAd70"):
    pset = perturb(AttackSpec.parse(attack, seed=7, trials=5), test_set, reference)
    b = attack_impact(baseline, test_set, pset).impact
    h = attack_impact(hardened, test_set, pset).impact
    print(f"{attack:8} {b:9.3f} {h:9.3f}")
