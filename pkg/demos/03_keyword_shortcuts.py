"""Find words that give the label away.

When one class of a dataset was collected around specific stories,
the story vocabulary becomes a shortcut: a classifier can key on a
few tokens instead of learning anything general. The scan below
ranks tokens by a smoothed log-odds score between each label and the
rest, and the table helper counts per-label document frequency for
chosen keywords.
"""

import numpy as np

from leakaudit import build_dataset, keyword_label_table, scan_discriminative_tokens

rng = np.random.default_rng(3)

FILLER = ("the", "a", "report", "today", "people", "said", "new", "city",
          "video", "photo", "claims", "officials", "online", "story")


def sentence(extra=()):
    words = list(rng.choice(FILLER, size=8)) + list(extra)
    rng.shuffle(words)
    return " ".join(words)


rows = []
for i in range(400):
    # the "false" class came from one hoax story: its vocabulary leaks
    rows.append({"id": str(600_000 + i), "label": "false",
                 "text": sentence(("shark", "hurricane") if i % 2 else ("shark",))})
for i in range(400):
    rows.append({"id": str(700_000 + i), "label": "true",
                 "text": sentence(("confirmed",) if i % 3 == 0 else ())})
dataset = build_dataset(rows, labels=("true", "false"), name="hoax-vocab")

# log_odds is signed for top_label: positive means the token marks
# that label, negative means it marks everything else
print("tokens most tied to a single label (smoothed log-odds):")
for stat in scan_discriminative_tokens(dataset, min_df=20)[:5]:
    direction = "marks" if stat.log_odds > 0 else "avoids"
    print(f"  {stat.token:<12} df={stat.doc_freq:<4} "
          f"log-odds={stat.log_odds:+.2f} ({direction} {stat.top_label!r})")

print("\nper-label document frequency for chosen keywords:")
table = keyword_label_table(dataset, ["shark", "hurricane", "confirmed", "report"])
for word, counts in table.items():
    print(f"  {word:<12} {counts}")
