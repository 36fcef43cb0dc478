"""Exercise the rule-based report classifier on representative phrasings.

The classifier is deliberately transparent: target terms per sentence,
negation cues inside fixed token windows, and uncertainty that never
negates (a hedged mention still shows clinical awareness).

Run:  python3 demos/02_report_classifier.py
"""

from ptxtriage import classify_report

REPORTS = [
    "No pneumothorax or pleural effusion. Lungs are clear.",
    "Small right apical pneumothorax.",
    "Previously seen pneumothorax has resolved.",
    "Cannot exclude a small apical pneumothorax.",
    "FINDINGS: Lines and tubes unchanged.\nTrace ptx at the right apex.",
    "Skin fold rather than pneumothorax.",
]

for text in REPORTS:
    out = classify_report(text)
    verdict = "POSITIVE" if out.positive else "negative"
    print(f"{verdict}  {text!r}")
    for m in out.mentions:
        print(f"          sentence {m.sentence_index}: {text[m.start:m.end]!r} -> {m.polarity}")
