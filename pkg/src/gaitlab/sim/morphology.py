"""Articulated character description and morphology edits."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace


@dataclass(frozen=True)
class Link:
    name: str
    length: float
    mass: float
    # contact points in the link's local frame (empty for most links)
    contacts: tuple = ()
    axis: str = "y"  # direction the length runs along in the local frame

    @property
    def inertia(self) -> float:
        return self.mass * self.length**2 / 12.0


@dataclass(frozen=True)
class Joint:
    name: str
    parent: str
    child: str
    anchor_parent: tuple  # local coords on the parent link
    anchor_child: tuple
    lo: float = -2.6
    hi: float = 2.6
    locked: bool = False


@dataclass(frozen=True)
class Morphology:
    links: tuple
    joints: tuple

    def link_names(self) -> list[str]:
        return [l.name for l in self.links]

    def link_index(self, name: str) -> int:
        for i, l in enumerate(self.links):
            if l.name == name:
                return i
        raise KeyError(f"unknown link: {name}")

    def joint_index(self, name: str) -> int:
        for i, j in enumerate(self.joints):
            if j.name == name:
                return i
        raise KeyError(f"unknown joint: {name}")

    def actuated_joints(self) -> list[Joint]:
        return [j for j in self.joints if not j.locked]

    def actuated_names(self) -> list[str]:
        return [j.name for j in self.joints if not j.locked]

    @property
    def n_links(self) -> int:
        return len(self.links)

    @property
    def n_actuated(self) -> int:
        return len(self.actuated_joints())

    def total_mass(self) -> float:
        return sum(l.mass for l in self.links)

    def mirror_link_order(self) -> list[int]:
        """Index map sending each link to its left/right partner."""
        names = self.link_names()
        return [self.link_index(_mirror_name(n)) for n in names]

    def mirror_joint_order(self) -> list[int]:
        """Partner map over the actuated joints only."""
        names = self.actuated_names()
        return [names.index(_mirror_name(n)) for n in names]


def _mirror_name(name: str) -> str:
    if name.startswith("l_"):
        return "r_" + name[2:]
    if name.startswith("r_"):
        return "l_" + name[2:]
    return name


FOOT_SOLE_DROP = 0.03  # sole sits this far below the foot link's COM
FOOT_ANKLE_BACK = 0.0  # ankle anchor offset back from COM, as a fraction of length


def default_biped() -> Morphology:
    """7-link planar walker: torso, thighs, shins, flat feet; 6 actuated joints."""
    torso_l, thigh_l, shin_l, foot_l = 0.6, 0.45, 0.45, 0.2
    links = [Link("torso", torso_l, 14.0)]
    joints = []
    for side in ("l", "r"):
        thigh = Link(f"{side}_thigh", thigh_l, 4.0)
        shin = Link(f"{side}_shin", shin_l, 2.5)
        foot = Link(
            f"{side}_foot", foot_l, 1.0,
            contacts=((-foot_l / 2, -FOOT_SOLE_DROP), (foot_l / 2, -FOOT_SOLE_DROP)),
            axis="x",
        )
        links += [thigh, shin, foot]
        joints += [
            Joint(f"{side}_hip", "torso", thigh.name,
                  (0.0, -torso_l / 2), (0.0, thigh_l / 2), lo=-1.2, hi=2.0),
            Joint(f"{side}_knee", thigh.name, shin.name,
                  (0.0, -thigh_l / 2), (0.0, shin_l / 2), lo=-2.4, hi=0.05),
            Joint(f"{side}_ankle", shin.name, foot.name,
                  (0.0, -shin_l / 2), (-FOOT_ANKLE_BACK * foot_l, FOOT_SOLE_DROP),
                  lo=-0.9, hi=0.9),
        ]
    # keep a canonical ordering: torso, then left chain, then right chain
    order = ["torso", "l_thigh", "l_shin", "l_foot", "r_thigh", "r_shin", "r_foot"]
    links.sort(key=lambda l: order.index(l.name))
    return Morphology(tuple(links), tuple(joints))


def nominal_root_height(morph: Morphology) -> float:
    """Torso COM height when standing with straight legs, soles on the ground."""
    thigh = next(l for l in morph.links if l.name.endswith("_thigh"))
    shin = next(l for l in morph.links if l.name.endswith("_shin"))
    torso = next(l for l in morph.links if l.name == "torso")
    return 2 * FOOT_SOLE_DROP + shin.length + thigh.length + torso.length / 2


def apply_morphology(base: Morphology, edits: list[dict]) -> Morphology:
    """Apply scale/lock edits, leaving ``base`` untouched.

    Edits: {"scale": {"links": [...], "factor": f}} rescales link length and
    mass (mass grows with length at uniform density) and the anchors that sit
    on those links; {"lock": ["joint", ...]} welds joints shut, removing them
    from the actuated set.
    """
    links = {l.name: l for l in base.links}
    scale = {l.name: 1.0 for l in base.links}
    locked = set()
    for edit in edits:
        if "scale" in edit:
            spec = edit["scale"]
            for name in spec["links"]:
                if name not in links:
                    raise KeyError(f"unknown link: {name}")
                f = float(spec["factor"])
                l = links[name]
                cscale = (f, 1.0) if l.axis == "x" else (1.0, f)
                links[name] = replace(
                    l,
                    length=l.length * f,
                    mass=l.mass * f,
                    contacts=tuple((x * cscale[0], y * cscale[1]) for x, y in l.contacts),
                )
                scale[name] *= f
        elif "lock" in edit:
            for name in edit["lock"]:
                base.joint_index(name)  # raises on unknown names
                locked.add(name)
        else:
            raise ValueError(f"unknown edit kind: {sorted(edit)}")

    def scale_anchor(anchor, link_name):
        l = links[link_name]
        f = scale[link_name]
        if l.axis == "x":
            return (anchor[0] * f, anchor[1])
        return (anchor[0], anchor[1] * f)

    joints = []
    for j in base.joints:
        joints.append(replace(
            j,
            anchor_parent=scale_anchor(j.anchor_parent, j.parent),
            anchor_child=scale_anchor(j.anchor_child, j.child),
            locked=j.locked or j.name in locked,
        ))
    new_links = tuple(links[l.name] for l in base.links)
    return Morphology(new_links, tuple(joints))
