"""Minimal bundled polarity word list for the default sentence scorer.

Production runs should prefer a precomputed scores file from a full
external scorer; this list exists so the pipeline works out of the box.
"""

POSITIVE = frozenset("""
amazing appreciate awesome beautiful benefit best better bright brilliant
calm capable celebrate charming cheerful clean clear comfortable convenient
correct courteous delight delighted dependable easy effective efficient
elegant enjoy enjoyable excellent exceptional excited fabulous fair fantastic
fast favorite fine fix fixed friendly fun generous gentle glad good grateful
great happy help helpful honest ideal impressive improve improved improvement
incredible innovative kind love lovely loyal marvelous nice outstanding
patient perfect pleasant pleased polite positive praise prompt quick reliable
remarkable resolve resolved respectful responsive safe satisfied secure
simple smooth solid splendid strong succeed success successful superb superior
support sweet terrific thank thanks thoughtful thrilled trust trustworthy
useful valuable welcome win wonderful works worthy
""".split())

NEGATIVE = frozenset("""
abuse angry annoyed annoying awful bad breach broke broken bug cancel
cancelled cheat cheated complain complaint confused corrupt costly crash
damage damaged deceive deceived defect defective delay delayed deny
disappointed disappointing disaster dishonest dispute doubt error expensive
fail failed failure fake fault faulty fear fraud fraudulent frustrated
frustrating garbage harm hate horrible hurt ignore ignored impossible
incompetent inconvenient incorrect inferior insult lazy lie lost mediocre
mess mislead misleading mistake negative neglect nightmare offensive overpriced
pathetic poor problem problems refuse refused regret reject rejected ripoff
rude sad scam slow steal stole stolen terrible theft trouble ugly unacceptable
unfair unhappy unreliable unresponsive upset useless waste worse worst wrong
""".split())
