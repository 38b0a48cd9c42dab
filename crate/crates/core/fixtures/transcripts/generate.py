"""Writes the mock-model transcripts in this directory.

Run from anywhere: python3 generate.py
Output is deterministic.
"""

import json
import os
import random

HERE = os.path.dirname(os.path.abspath(__file__))


def ts(secs):
    return f"{secs // 60} min {secs % 60} sec"


def script(cues):
    return "\n\n".join(f"{ts(s)} to {ts(e)}\n{t}" for s, e, t in cues)


def reply(command, text, *, seek=None, new_script=None, line=None):
    return json.dumps(
        {
            "Command": command,
            "TextResponse": text,
            "DidChangeTimestamp": seek is not None,
            "NewTimeStamp": seek,
            "DidChangeScript": new_script is not None,
            "NewScript": new_script or "",
            "DidChangeADLineNumber": line is not None,
            "ADLineNumber": line,
        }
    )


def exchange(command, raw, repair=None, labels=None):
    rec = {"command": command, "rawResponse": raw}
    if repair is not None:
        rec["repairResponse"] = repair
    if labels is not None:
        rec["labels"] = labels
    return rec


def header(video_ref, duration_ms, initial=None):
    h = {"videoRef": video_ref, "videoDurationMs": duration_ms}
    if initial is not None:
        h["initialScript"] = initial
    return {"session": h}


def write(name, records):
    with open(os.path.join(HERE, name), "w") as f:
        for r in records:
            f.write(json.dumps(r) + "\n")


PAREIDOLIA = "file://pareidolia.mp4"

GENERATED = [
    (2, 7, "The alarm clock rings loudly. A man wakes up in bed, looking distressed."),
    (8, 12, "The man sits on the edge of the bed, rubbing his face. Two white slippers sit on the floor."),
    (16, 18, "A bathroom sink faucet and knobs."),
    (18, 20, "The back pockets of a pair of pants on a bed."),
    (20, 22, "A smiley face in the foam of a coffee mug."),
    (22, 24, "Two sunny-side-up eggs in a frying pan, forming a face."),
    (26, 31, "He walks into the kitchen and pours a cup of coffee."),
    (33, 38, "Two fried eggs in a pan form a smiling face. The man smiles."),
    (45, 50, "He steps outside into the morning sun, smiling."),
    (53, 56, 'A framed photo of a smiling girl. The title "PAREIDOLIA" appears.'),
    (57, 60, "Credits roll over the photo."),
]


def clara():
    gen_cmd = (
        "Identify all the silent gaps available for audio description and generate "
        "the timestamps and audio descriptions."
    )
    gen = reply(
        gen_cmd,
        "I found eleven gaps and wrote a description for each one.",
        new_script=script(GENERATED),
        line=1,
    )
    summary_cmd = (
        "Provide a brief summary of the entire video, focusing on the main character "
        "and any recurring visual themes"
    )
    distress_cmd = (
        "What visuals show the man is looking distressed, are there any actions that the man made?"
    )
    smile_cmd = (
        "What is it about the slippers that makes them look like they're smiling? "
        "Is there a pattern or are the slippers deformed?"
    )
    faces_cmd = "List the objects that look like faces in this video and tell me the time that these appear."
    return [
        header(PAREIDOLIA, 60_000),
        exchange(
            summary_cmd,
            reply(
                summary_cmd,
                "A man wakes up unhappy, then keeps noticing everyday objects that look like smiling faces.",
            ),
        ),
        exchange(
            distress_cmd,
            reply(
                distress_cmd,
                "At 0 minutes 8 seconds he sits up and covers his face with his hands.",
            ),
        ),
        exchange(gen_cmd, gen, repair=gen),
        {"navigate": {"playheadMs": 8000, "line": 4}},
        exchange(
            "Anything special about the slippers?",
            reply(
                "Anything special about the slippers?",
                "Yes, it appears that the white slippers resemble smiling faces at 0:10.",
            ),
        ),
        exchange(
            smile_cmd,
            reply(smile_cmd, "Two small holes read as eyes, a fold reads as a nose, and the band reads as a smile."),
        ),
        {
            "edit": {
                "op": "updateText",
                "cueIndex": 1,
                "newText": "The man sits on the edge of the bed, rubbing his face. Two white slippers, resembling faces, sit on the floor.",
            }
        },
        {
            "edit": {
                "op": "updateText",
                "cueIndex": 1,
                "newText": "The man sits on the bed, rubbing his face. Two white slippers, resembling faces, sit on the floor.",
            }
        },
        {"navigate": {"playheadMs": 16000, "line": 7}},
        exchange(
            faces_cmd,
            reply(
                faces_cmd,
                "A sink faucet at 16 seconds, trouser pockets at 18, coffee foam at 20, and fried eggs at 22.",
            ),
        ),
        {"edit": {"op": "deleteCue", "cueIndex": 5}},
        {"edit": {"op": "deleteCue", "cueIndex": 4}},
        {"edit": {"op": "deleteCue", "cueIndex": 3}},
        {"edit": {"op": "retime", "cueIndex": 2, "newStartMs": 16000, "newEndMs": 24000}},
        {
            "edit": {
                "op": "updateText",
                "cueIndex": 2,
                "newText": "Faces follow him. In the bathroom sink, his own trousers, his morning coffee, and even his fried eggs.",
            }
        },
    ]


RENAME_BEFORE = [
    (2, 7, "The alarm clock rings loudly. A man wakes up in bed, looking distressed."),
    (8, 12, "The man sits on the bed, rubbing his face."),
    (16, 24, "Faces follow him. In the bathroom sink, his own trousers, his morning coffee, and even his fried eggs."),
    (26, 31, "The guy pours a cup of coffee and stares at the foam."),
    (33, 38, "Two fried eggs in a pan form a smiling face. The man smiles."),
    (40, 44, "The man eats breakfast by the window."),
    (46, 51, "The guy steps outside into the morning sun."),
    (53, 56, "A framed photo of a smiling girl."),
]


def rename():
    after = [
        (s, e, t.replace("A man", "Tom").replace("The man", "Tom").replace("The guy", "Tom"))
        for s, e, t in RENAME_BEFORE
    ]
    ask = "Any chance the video mentioned the name of the man?"
    update = "Can you update the AD script for me accordingly?"
    return [
        header(PAREIDOLIA, 60_000, script(RENAME_BEFORE)),
        exchange(ask, reply(ask, "Yes. The rolling credits at the end name him Tom.")),
        exchange(
            update,
            reply(
                update,
                "Done. Every reference to the man now uses the name Tom.",
                new_script=script(after),
            ),
        ),
    ]


MUG_CAKE = "file://mug-cake.mp4"

CAKE_BEFORE = [
    (3, 6, "A hand cracks an egg into a mug."),
    (33, 39, "The mug goes into a white appliance."),
    (41, 44, "The finished cake has puffed up over the mug's rim."),
]


def microwave():
    baked = "How was the cake baked?"
    asked = "Is there a microwave in the video during this timecode?"
    edit = "Can you edit this line to include the on-screen instructions for cooking?"
    split = [
        (3, 6, "A hand cracks an egg into a mug."),
        (33, 34, "The mug goes in."),
        (35, 37, "The door closes on the mug."),
        (38, 40, "On-screen text: microwave 50 to 60 seconds."),
        (41, 44, "The finished cake has puffed up over the mug's rim."),
    ]
    return [
        header(MUG_CAKE, 120_000, script(CAKE_BEFORE)),
        {"navigate": {"playheadMs": 36000, "line": 4}},
        exchange(baked, reply(baked, "Both cakes were cooked in a microwave for 50 to 60 seconds at 1000W.")),
        exchange(
            asked,
            reply(
                asked,
                "The microwave itself is not shown in the video at the 36-second mark. However, "
                "immediately after this, from 39 to 42 seconds, text appears on screen indicating "
                "that the cake will be cooked in a microwave for 50-60 seconds.",
            ),
        ),
        exchange(
            edit,
            reply(
                edit,
                "I split the line at 36 seconds into three shorter segments and added the on-screen instructions.",
                new_script=script(split),
            ),
        ),
    ]


# Labeled corpus: 202 responses, 68 of them answers to questions about the
# video (4 labeled wrong), 134 others (18 edited the script unasked).

VIDEOS = [
    (MUG_CAKE, 120),
    (PAREIDOLIA, 60),
    ("file://climate.mp4", 72),
]

BASE_SCRIPTS = {
    MUG_CAKE: [
        (3, 6, "A hand cracks an egg into a mug."),
        (10, 14, "A spoon stirs chocolate spread into the egg."),
        (33, 39, "The mug goes into a white appliance."),
        (41, 44, "The finished cake has puffed up over the mug's rim."),
        (70, 75, "Powdered sugar is dusted over the top."),
        (100, 106, "A spoon digs into the soft center."),
    ],
    PAREIDOLIA: [(s, e, t) for s, e, t in RENAME_BEFORE],
    "file://climate.mp4": [
        (0, 4, "Aerial view of a wildfire spreading across hills."),
        (9, 13, "Firefighters spray water at a burning house."),
        (20, 25, "A flooded road with cars half under water."),
        (31, 35, "Children wade through knee-deep water."),
        (44, 49, "Cracked earth stretches toward the horizon."),
    ],
}

# Free windows where an unrequested description can be dropped in.
FREE_WINDOWS = {
    MUG_CAKE: [(16, 20), (22, 27), (48, 52), (55, 60), (80, 84), (88, 92), (110, 114)],
    PAREIDOLIA: [(13, 15)],
    "file://climate.mp4": [(14, 18), (26, 30), (36, 40), (51, 55), (57, 61), (63, 67)],
}

VQA_QUESTIONS = [
    "What color is the watch?",
    "What time does the watch appear?",
    "Is there a hand holding a spoon?",
    "How fast is the mixture in the bowl being mixed?",
    "Where is the man looking?",
    "Is there any conversational content in this video",
    "What is the man wearing?",
    "How many eggs are in the pan?",
    "What does the text on screen say?",
    "Is it daytime or nighttime outside?",
    "What shape is the mug?",
    "Are there any people in the background?",
    "What is written on the label of the jar?",
    "How big is the fire at this point?",
    "What color are the slippers?",
    "Is the water still rising?",
    "Who is holding the spoon?",
    "What does the kitchen look like?",
]

WRONG_ANSWERS = {
    "What color is the watch?": "The watch is gold with a brown leather strap.",
}

SUMMARY_COMMANDS = [
    "Summarize this video",
    "Give me an overview of what happens in this video.",
    "Describe the scene in as much detail as possible.",
    "Describe the white slippers in more detail.",
    "Describe this scene",
    "Tell me what is happening right now.",
    "How does the man appear distressed?",
    "What is the mood of this part?",
]

GENERATION_COMMANDS = [
    "Generate descriptions for this video with time stamps.",
    "Please generate time gaps and audio description of what happens in this video scene by scene",
    "Write a description for the gap at the cursor.",
    "Create audio description for the first half of the video.",
]

EDIT_COMMANDS = [
    "Shorten the current line.",
    "Rephrase this line so it sounds less clinical.",
    "Make the line at the cursor more vivid.",
    "Add the colour of the mug to this line.",
    "Change the word pan to skillet.",
    "Remove the second sentence of this line.",
]

NAV_COMMANDS = [
    ("Go to 1 minute", 60),
    ("Jump forward ten seconds", None),
    ("Go to the scene with the fire", 9),
    ("Take me back to the start", 0),
]

GAP_COMMANDS = [
    "Find areas in the video that require AD.",
    "Where is the next silent gap?",
]

UNSUPPORTED = [
    "Can you edit the video to make it brighter?",
    "Please export the video as a GIF.",
]


class Session:
    def __init__(self, video, duration, rng):
        self.video = video
        self.duration = duration
        self.rng = rng
        self.cues = list(BASE_SCRIPTS[video])
        self.free = list(FREE_WINDOWS[video])

    def line_count(self):
        return max(1, 3 * len(self.cues) - 1)

    def edited_text(self, i):
        s, e, t = self.cues[i]
        words = t.rstrip(".").split()
        budget = 3 * (e - s)
        trimmed = " ".join(words[: max(2, min(len(words) - 1, budget))]) + "."
        return trimmed if trimmed != t else t.rstrip(".") + " slowly."

    def unsolicited_insert(self, label):
        if self.free:
            s, e = self.free.pop(0)
            self.cues.append((s, e, f"A close view of the {label}."))
            self.cues.sort()
        else:
            i = self.rng.randrange(len(self.cues))
            s, e, t = self.cues[i]
            self.cues[i] = (s, e, f"A close view of the {label}.")
        return script(self.cues)


def corpus():
    rng = random.Random(202)
    kinds = (
        ["vqa"] * 64
        + ["vqa_wrong"] * 4
        + ["incongruent"] * 18
        + ["summary"] * 40
        + ["generation"] * 14
        + ["edit"] * 30
        + ["nav"] * 20
        + ["gap"] * 8
        + ["unsupported"] * 4
    )
    assert len(kinds) == 202
    rng.shuffle(kinds)

    records = []
    per_session = 202 // 36
    extra = 202 - per_session * 36
    sizes = [per_session + (1 if i < extra else 0) for i in range(36)]
    cursor = 0
    for n, size in enumerate(sizes):
        video, secs = VIDEOS[n % 3]
        sess = Session(video, secs, rng)
        records.append(header(video, secs * 1000, script(sess.cues)))
        playhead = 0
        for kind in kinds[cursor : cursor + size]:
            labels = {"vqa": kind.startswith("vqa"), "incongruent": kind == "incongruent", "vqaError": kind == "vqa_wrong"}
            if kind in ("vqa", "vqa_wrong"):
                q = rng.choice(VQA_QUESTIONS if kind == "vqa" else list(WRONG_ANSWERS))
                a = WRONG_ANSWERS.get(q) if kind == "vqa_wrong" else "Here is what I can see at this point in the video."
                if q.startswith("What time"):
                    jump = min(secs, 12)
                    raw = reply(q, "The watch first appears at 12 seconds. I moved you there.", seek=jump)
                    playhead = jump
                else:
                    raw = reply(q, a)
            elif kind == "incongruent":
                q = rng.choice(SUMMARY_COMMANDS[2:] + VQA_QUESTIONS[:4])
                raw = reply(q, "I described it and added the description to the script.", new_script=sess.unsolicited_insert("scene"))
            elif kind == "summary":
                q = rng.choice(SUMMARY_COMMANDS)
                raw = reply(q, "In short: the video follows one subject through a handful of scenes.")
            elif kind == "generation":
                q = rng.choice(GENERATION_COMMANDS)
                sess.cues = list(BASE_SCRIPTS[video])
                sess.free = list(FREE_WINDOWS[video])
                raw = reply(q, "I generated descriptions for the whole video.", new_script=script(sess.cues), line=1)
            elif kind == "edit":
                q = rng.choice(EDIT_COMMANDS)
                i = rng.randrange(len(sess.cues))
                s, e, _ = sess.cues[i]
                sess.cues[i] = (s, e, sess.edited_text(i))
                raw = reply(q, "I updated that line.", new_script=script(sess.cues), line=3 * i + 1)
            elif kind == "nav":
                q, target = rng.choice(NAV_COMMANDS)
                if target is None:
                    target = min(secs, playhead + 10)
                target = min(target, secs)
                playhead = target
                raw = reply(q, f"Moved to {target} seconds.", seek=target)
            elif kind == "gap":
                q = rng.choice(GAP_COMMANDS)
                line = min(sess.line_count(), 4)
                raw = reply(q, "There is an undescribed stretch here. I moved you to it.", seek=min(secs, 15), line=line)
                playhead = min(secs, 15)
            else:
                q = rng.choice(UNSUPPORTED)
                raw = reply(q, "Sorry, I cannot do that. I can only work on the description script.")
            records.append(exchange(q, raw, labels=labels))
        cursor += size
    return records


if __name__ == "__main__":
    write("clara_session.jsonl", clara())
    write("rename_session.jsonl", rename())
    write("microwave_session.jsonl", microwave())
    write("labeled_corpus.jsonl", corpus())
