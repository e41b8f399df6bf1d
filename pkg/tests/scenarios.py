"""Named scenario configs shared by the simulator, CLI and acceptance tests."""

from btcvote.sim import Adversary, ScenarioConfig


def config(votes, *, t, m=2, x=2, z=2, t1=10, t2=20, seed=b"suite", adversary=None, group="test"):
    votes = {k + 1: c for k, c in enumerate(votes)}
    return ScenarioConfig(
        n=len(votes), m=m, t=t, x=x, z=z, t1=t1, t2=t2, votes=votes,
        master_seed=seed, adversary=adversary or Adversary(), group=group,
    )


BASE = dict(votes=[1, 1, 1, 2, 2], t=3)

SUITE = {
    "honest-winner": config(**BASE),
    "honest-refund": config([1, 1, 2, 2], t=3),
    "single-candidate": config([1, 1, 1], t=2, m=1),
    "tie-race": config([1, 1, 2, 2], t=2),
    "uneven-deposit": config(**BASE, x=3, z=5),
    "dropout-registration": config(**BASE, adversary=Adversary("dropout", 2, "registration")),
    "dropout-dkg": config(**BASE, adversary=Adversary("dropout", 3, "dkg")),
    "dropout-shuffle": config(**BASE, adversary=Adversary("dropout", 3, "shuffle")),
    "dropout-signing": config(**BASE, adversary=Adversary("dropout", 2, "signing")),
    "dropout-reveal": config(**BASE, adversary=Adversary("dropout", 3, "reveal")),
    "tamper": config(**BASE, adversary=Adversary("tamper-last-shuffler")),
    "double-claim": config(**BASE, adversary=Adversary("double-claim", 1)),
    "garbage-vote": config(**BASE, adversary=Adversary("garbage-vote", 1)),
    "withhold-reveal": config(**BASE, adversary=Adversary("withhold-reveal", 4)),
    "withhold-winner-lost": config([1, 1, 1, 2], t=3, adversary=Adversary("withhold-reveal", 1)),
    "withhold-few-signers": config([1, 2, 1], t=3, adversary=Adversary("withhold-reveal", 2)),
    "crypto-group": config(**BASE, group="crypto"),
}
