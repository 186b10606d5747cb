#!/usr/bin/env python3
"""Regenerates the reference demonstrations in this directory.

flappy.mmproj   bird falls one cell per frame, space makes it rise for one
                frame, the pipe drifts left and wraps from x=0 to x=11.
sokoban.mmproj  player walks right while the key is held and pushes a crate.
"""
import json
import pathlib

BUTTONS = ["space", "up", "down", "left", "right"]
HERE = pathlib.Path(__file__).resolve().parent


def buttons(*pressed):
    return {b: b in pressed for b in BUTTONS}


def project(name, sprites, frames):
    return {
        "schemaVersion": 1,
        "name": name,
        "grid": {"width": 12, "height": 9},
        "sprites": [{"name": n, "width": w, "height": h} for n, w, h in sprites],
        "frames": frames,
        "engine": None,
        "config": {},
    }


def flappy():
    bird_y = [8, 7, 6, 7, 6, 5, 6, 5, 4, 5, 4, 3, 4, 3, 2, 3]
    jumps = {2, 5, 8, 11, 14}
    frames = []
    for t, y in enumerate(bird_y):
        pipe_x = 11 - t if t <= 11 else 11 - (t - 12)
        first = t == 0
        frames.append({
            "index": t,
            "objects": [
                {"id": 0, "sprite": "bird", "x": 2, "y": y, "vx": 0,
                 "vy": -1 if first else 0, "explicitVelocity": first},
                {"id": 1, "sprite": "longblock", "x": pipe_x, "y": 0,
                 "vx": -1 if first else 0, "vy": 0, "explicitVelocity": first},
            ],
            "input": {"buttons": buttons("space") if t in jumps else buttons()},
        })
    return project("flappy", [("bird", 1, 1), ("longblock", 1, 4)], frames)


def sokoban():
    steps = [  # (player x, crate x, right held)
        (2, 5, True), (3, 5, True), (4, 5, True), (5, 6, False), (5, 6, False),
        (5, 6, True), (6, 7, True), (7, 8, False), (7, 8, False),
    ]
    frames = []
    for t, (px, cx, right) in enumerate(steps):
        frames.append({
            "index": t,
            "objects": [
                {"id": 0, "sprite": "player", "x": px, "y": 4},
                {"id": 1, "sprite": "crate", "x": cx, "y": 4},
            ],
            "input": {"buttons": buttons("right") if right else buttons()},
        })
    return project("sokoban", [("player", 1, 1), ("crate", 1, 1)], frames)


if __name__ == "__main__":
    for name, doc in (("flappy", flappy()), ("sokoban", sokoban())):
        (HERE / f"{name}.mmproj").write_text(json.dumps(doc, indent=2) + "\n")
