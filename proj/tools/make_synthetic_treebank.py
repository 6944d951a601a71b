#!/usr/bin/env python3
"""Generate a deterministic English-like treebank in CoNLL-U format.

The grammar covers determiners, adjectives, nouns with regular and irregular
plurals, pronouns, proper nouns, verbs in several inflections, auxiliaries,
negation (including the multiword token "cannot"), prepositional phrases,
adverbs, coordination and punctuation, with UD-style UPOS/XPOS/FEATS/LEMMA and
basic dependency trees. Word choice is Zipfian so held-out data contains
unseen but morphologically regular words.

usage: make_synthetic_treebank.py OUT.conllu --sentences N --seed S [--id-prefix P]
"""

import argparse
import random

NOUNS = """
dog cat bird house tree car river city child teacher student doctor farmer
book letter table window door garden road bridge mountain village market
king queen friend brother sister mother father neighbor stranger soldier
painter singer writer player driver worker baker hunter sailor pilot judge
apple bottle basket candle chair cup lamp pencil shirt shoe stone wall
flower forest island lake ocean field valley hill storm cloud star moon
song story poem picture message answer question problem idea plan dream
horse sheep goat cow rabbit fox wolf bear lion tiger snake frog duck goose
box bag coat hat ring key coin knife spoon plate bowl boat train plane
""".split()

IRREGULAR_PLURALS = {"child": "children", "man": "men", "woman": "women", "mouse": "mice",
                     "foot": "feet", "tooth": "teeth", "person": "people", "goose": "geese",
                     "sheep": "sheep", "knife": "knives", "wolf": "wolves"}
NOUNS += ["man", "woman", "mouse", "foot", "tooth", "person"]

VERBS_TRANS = """
see find take make help call watch follow paint open close carry push pull
build break catch clean cook cover draw drop fill fix hold hide keep kick
kill lift like love miss move need own pick play read reach ride save sell
send show start stop teach touch visit want wash write greet chase feed
""".split()
VERBS_INTRANS = "sleep run walk laugh cry smile wait arrive dance jump swim fall sing shout rest".split()

IRREGULAR_PAST = {"see": "saw", "find": "found", "take": "took", "make": "made", "build": "built",
                  "break": "broke", "catch": "caught", "draw": "drew", "hold": "held", "hide": "hid",
                  "keep": "kept", "ride": "rode", "sell": "sold", "send": "sent", "teach": "taught",
                  "write": "wrote", "feed": "fed", "sleep": "slept", "run": "ran", "fall": "fell",
                  "sing": "sang", "swim": "swam", "read": "read"}

ADJECTIVES = """
big small old young red green blue happy sad quick slow tall short dark bright
warm cold quiet loud strong weak rich poor brave gentle kind clever proud angry
new long wide deep heavy light clean dirty soft hard sweet strange famous lonely
""".split()

ADVERBS = "quickly slowly quietly loudly happily sadly gently bravely often never always again today soon".split()
PREPOSITIONS = "in on near under behind with from to over across".split()
PROPER = "Anna Peter Maria John Lucy Tom Berlin Paris Prague London Oslo Rome Vienna Madrid".split()
PRONOUNS = [  # form, lemma, feats, number, person
    ("he", "he", "Case=Nom|Gender=Masc|Number=Sing|Person=3|PronType=Prs", "Sing", "3"),
    ("she", "she", "Case=Nom|Gender=Fem|Number=Sing|Person=3|PronType=Prs", "Sing", "3"),
    ("they", "they", "Case=Nom|Number=Plur|Person=3|PronType=Prs", "Plur", "3"),
    ("we", "we", "Case=Nom|Number=Plur|Person=1|PronType=Prs", "Plur", "1"),
    ("I", "I", "Case=Nom|Number=Sing|Person=1|PronType=Prs", "Sing", "1"),
    ("you", "you", "Case=Nom|Person=2|PronType=Prs", "Plur", "2"),
]
OBJ_PRONOUNS = [
    ("him", "he", "Case=Acc|Gender=Masc|Number=Sing|Person=3|PronType=Prs"),
    ("her", "she", "Case=Acc|Gender=Fem|Number=Sing|Person=3|PronType=Prs"),
    ("them", "they", "Case=Acc|Number=Plur|Person=3|PronType=Prs"),
    ("us", "we", "Case=Acc|Number=Plur|Person=1|PronType=Prs"),
    ("me", "I", "Case=Acc|Number=Sing|Person=1|PronType=Prs"),
]


def zipf_choice(rng, items, s=1.1):
    weights = [1.0 / (rank + 1) ** s for rank in range(len(items))]
    return rng.choices(items, weights=weights, k=1)[0]


def plural(noun):
    if noun in IRREGULAR_PLURALS:
        return IRREGULAR_PLURALS[noun]
    if noun.endswith(("s", "x", "ch", "sh")):
        return noun + "es"
    if noun.endswith("y") and noun[-2] not in "aeiou":
        return noun[:-1] + "ies"
    return noun + "s"


def third_person(verb):
    if verb.endswith(("s", "x", "ch", "sh", "o")):
        return verb + "es"
    if verb.endswith("y") and verb[-2] not in "aeiou":
        return verb[:-1] + "ies"
    return verb + "s"


def past(verb):
    if verb in IRREGULAR_PAST:
        return IRREGULAR_PAST[verb]
    if verb.endswith("e"):
        return verb + "d"
    if verb.endswith("y") and verb[-2] not in "aeiou":
        return verb[:-1] + "ied"
    if verb in ("stop", "drop", "chop", "plan"):
        return verb + verb[-1] + "ed"
    return verb + "ed"


def gerund(verb):
    if verb.endswith("e") and verb not in ("see",):
        return verb[:-1] + "ing"
    if verb in ("run", "swim", "stop", "drop", "sit"):
        return verb + verb[-1] + "ing"
    return verb + "ing"


class Builder:
    """Accumulates words of one sentence; heads are filled in afterwards."""

    def __init__(self):
        self.words = []  # dicts
        self.mwt = []  # (start, end, form)

    def add(self, form, lemma, upos, xpos, feats, deprel, head=None):
        self.words.append(dict(form=form, lemma=lemma, upos=upos, xpos=xpos, feats=feats or "_",
                               deprel=deprel, head=head, misc="_"))
        return len(self.words)  # 1-based id


def noun_phrase(rng, b, role, number=None, allow_pp=True):
    """Adds an NP; returns (head id, number, person). Dependents point at head via placeholders."""
    kind = rng.random()
    if role == "nsubj" and kind < 0.18:
        form, lemma, feats, num, person = rng.choice(PRONOUNS)
        return b.add(form, lemma, "PRON", "PRP", feats, role), num, person
    if role == "obj" and kind < 0.12:
        form, lemma, feats = rng.choice(OBJ_PRONOUNS)
        return b.add(form, lemma, "PRON", "PRP", feats, role), "Sing", "3"
    if kind < 0.28:
        name = zipf_choice(rng, PROPER)
        return b.add(name, name, "PROPN", "NNP", "Number=Sing", role), "Sing", "3"

    number = number or ("Plur" if rng.random() < 0.4 else "Sing")
    deps = []
    r = rng.random()
    if number == "Sing" and r < 0.45:
        deps.append(("the", "the", "DET", "DT", "Definite=Def|PronType=Art", "det"))
    elif number == "Sing" and r < 0.75:
        deps.append(("a", "a", "DET", "DT", "Definite=Ind|PronType=Art", "det"))
    elif number == "Plur" and r < 0.55:
        deps.append(("the", "the", "DET", "DT", "Definite=Def|PronType=Art", "det"))
    elif number == "Plur" and r < 0.7:
        n = rng.choice(["two", "three", "four", "five", "many"])
        if n == "many":
            deps.append(("many", "many", "ADJ", "JJ", "Degree=Pos", "amod"))
        else:
            deps.append((n, n, "NUM", "CD", "NumType=Card", "nummod"))
    elif r < 0.85:
        poss = rng.choice([("my", "my", "Number=Sing|Person=1|Poss=Yes|PronType=Prs"),
                           ("his", "he", "Gender=Masc|Number=Sing|Person=3|Poss=Yes|PronType=Prs"),
                           ("their", "they", "Number=Plur|Person=3|Poss=Yes|PronType=Prs")])
        deps.append((poss[0], poss[1], "PRON", "PRP$", poss[2], "nmod:poss"))
    for _ in range(rng.choice([0, 0, 0, 1, 1, 2])):
        adj = zipf_choice(rng, ADJECTIVES)
        if rng.random() < 0.1:
            deps.append((adj + "er" if not adj.endswith("e") else adj + "r", adj, "ADJ", "JJR", "Degree=Cmp", "amod"))
        else:
            deps.append((adj, adj, "ADJ", "JJ", "Degree=Pos", "amod"))
    noun = zipf_choice(rng, NOUNS)
    dep_ids = [b.add(*d) for d in deps]
    if number == "Plur":
        head = b.add(plural(noun), noun, "NOUN", "NNS", "Number=Plur", role)
    else:
        head = b.add(noun, noun, "NOUN", "NN", "Number=Sing", role)
    for d in dep_ids:
        b.words[d - 1]["head"] = head
    if allow_pp and rng.random() < 0.15:
        pp_head = prepositional_phrase(rng, b, "nmod")
        b.words[pp_head - 1]["head"] = head
    return head, number, "3"


def prepositional_phrase(rng, b, role):
    prep = zipf_choice(rng, PREPOSITIONS)
    case_id = b.add(prep, prep, "ADP", "IN", None, "case")
    head, _, _ = noun_phrase(rng, b, role, allow_pp=False)
    b.words[case_id - 1]["head"] = head
    return head


def clause(rng, b):
    """Adds one clause; returns the id of its predicate."""
    subj, number, person = noun_phrase(rng, b, "nsubj")
    transitive = rng.random() < 0.7
    verb = zipf_choice(rng, VERBS_TRANS if transitive else VERBS_INTRANS)
    mode = rng.random()
    aux_ids = []
    if mode < 0.35:  # simple present
        if number == "Sing" and person == "3":
            pred = b.add(third_person(verb), verb, "VERB", "VBZ", "Mood=Ind|Number=Sing|Person=3|Tense=Pres|VerbForm=Fin", "root")
        else:
            pred = b.add(verb, verb, "VERB", "VBP", "Mood=Ind|Tense=Pres|VerbForm=Fin", "root")
    elif mode < 0.7:  # simple past
        pred = b.add(past(verb), verb, "VERB", "VBD", "Mood=Ind|Tense=Past|VerbForm=Fin", "root")
    elif mode < 0.85:  # progressive
        if number == "Sing" and person == "1":
            aux_ids.append(b.add("am", "be", "AUX", "VBP", "Mood=Ind|Number=Sing|Person=1|Tense=Pres|VerbForm=Fin", "aux"))
        elif number == "Sing" and person == "3":
            aux_ids.append(b.add("is", "be", "AUX", "VBZ", "Mood=Ind|Number=Sing|Person=3|Tense=Pres|VerbForm=Fin", "aux"))
        else:
            aux_ids.append(b.add("are", "be", "AUX", "VBP", "Mood=Ind|Tense=Pres|VerbForm=Fin", "aux"))
        pred = b.add(gerund(verb), verb, "VERB", "VBG", "Tense=Pres|VerbForm=Part", "root")
    else:  # modal, optionally negated
        if rng.random() < 0.3:
            start = len(b.words) + 1
            aux_ids.append(b.add("can", "can", "AUX", "MD", "VerbForm=Fin", "aux"))
            aux_ids.append(b.add("not", "not", "PART", "RB", "Polarity=Neg", "advmod"))
            b.mwt.append((start, start + 1, "cannot"))
        else:
            modal = rng.choice(["will", "can", "must", "should"])
            aux_ids.append(b.add(modal, modal, "AUX", "MD", "VerbForm=Fin", "aux"))
            if rng.random() < 0.2:
                aux_ids.append(b.add("not", "not", "PART", "RB", "Polarity=Neg", "advmod"))
        pred = b.add(verb, verb, "VERB", "VB", "VerbForm=Inf", "root")
    b.words[subj - 1]["head"] = pred
    for a in aux_ids:
        b.words[a - 1]["head"] = pred
    if transitive:
        obj, _, _ = noun_phrase(rng, b, "obj")
        b.words[obj - 1]["head"] = pred
    if rng.random() < 0.3:
        obl = prepositional_phrase(rng, b, "obl")
        b.words[obl - 1]["head"] = pred
    if rng.random() < 0.25:
        adv = zipf_choice(rng, ADVERBS)
        b.words[b.add(adv, adv, "ADV", "RB", None, "advmod") - 1]["head"] = pred
    return pred


def sentence(rng):
    b = Builder()
    root = clause(rng, b)
    if rng.random() < 0.2:
        cc = b.add(rng.choice(["and", "but"]), None, "CCONJ", "CC", None, "cc")
        b.words[cc - 1]["lemma"] = b.words[cc - 1]["form"]
        second = clause(rng, b)
        b.words[second - 1]["deprel"] = "conj"
        b.words[second - 1]["head"] = root
        b.words[cc - 1]["head"] = second
    punct = b.add(rng.choice([".", ".", ".", "!"]), None, "PUNCT", ".", None, "punct", head=root)
    b.words[punct - 1]["lemma"] = b.words[punct - 1]["form"]
    b.words[root - 1]["head"] = 0
    b.words[root - 1]["deprel"] = "root"
    # Capitalise the first token.
    first = b.words[0]
    if first["upos"] != "PROPN" and first["form"] != "I":
        first["form"] = first["form"][0].upper() + first["form"][1:]
    if b.mwt and b.mwt[0][0] == 1:
        s, e, form = b.mwt[0]
        b.mwt[0] = (s, e, form[0].upper() + form[1:])
    b.words[-2]["misc"] = "SpaceAfter=No"
    for w in b.words:
        assert w["head"] is not None, w
    return b


def text_of(b):
    parts = []
    in_mwt = {}
    for s, e, form in b.mwt:
        in_mwt[s] = (e, form)
    i = 1
    while i <= len(b.words):
        if i in in_mwt:
            e, form = in_mwt[i]
            parts.append(form + ("" if b.words[e - 1]["misc"] == "SpaceAfter=No" else " "))
            i = e + 1
            continue
        w = b.words[i - 1]
        parts.append(w["form"] + ("" if w["misc"] == "SpaceAfter=No" else " "))
        i += 1
    return "".join(parts).strip()


def write(out, builders, prefix):
    for k, b in enumerate(builders, 1):
        out.write(f"# sent_id = {prefix}{k}\n")
        out.write(f"# text = {text_of(b)}\n")
        starts = {s: (e, form) for s, e, form in b.mwt}
        for i, w in enumerate(b.words, 1):
            if i in starts:
                e, form = starts[i]
                out.write(f"{i}-{e}\t{form}\t_\t_\t_\t_\t_\t_\t_\t_\n")
            out.write("\t".join([str(i), w["form"], w["lemma"], w["upos"], w["xpos"], w["feats"],
                                 str(w["head"]), w["deprel"], "_", w["misc"]]) + "\n")
        out.write("\n")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("output")
    ap.add_argument("--sentences", type=int, required=True)
    ap.add_argument("--seed", type=int, required=True)
    ap.add_argument("--id-prefix", default="s")
    args = ap.parse_args()
    rng = random.Random(args.seed)
    builders = [sentence(rng) for _ in range(args.sentences)]
    with open(args.output, "w", encoding="utf-8", newline="\n") as out:
        write(out, builders, args.id_prefix)


if __name__ == "__main__":
    main()
