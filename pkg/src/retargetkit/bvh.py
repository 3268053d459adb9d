"""Parser and writer for a documented BVH subset.

Supported grammar:

    HIERARCHY
    ROOT <name> { OFFSET x y z; CHANNELS ...; JOINT ... / End Site {...} }
    MOTION
    Frames: <N>
    Frame Time: <seconds>
    <N whitespace-separated float rows>

Channel rules: the root carries 6 channels (three *position plus a rotation
triple) or just a rotation triple; every other joint carries exactly 3
rotation channels.  Rotation orders are limited to ZYX, ZXY, XYZ, XZY, YXZ,
YZX.  End Site blocks are accepted and their offsets discarded; the writer
always re-emits zero end sites, so write∘parse∘write is byte-stable.

The root's translation track is differenced into per-frame velocities (the
absolute start position is dropped; displacement re-integrates from zero).
The single BVH root rotation becomes the root-armature orientation and the
root joint's own pose row is identity; the writer composes the two back, so
FK positions round-trip even when the root pose row is non-identity.
"""

import numpy as np

from .errors import BVHParseError, RetargetError
from .rotations import euler_to_matrix, matrix_to_euler, matrix_to_rot6d, rot6d_to_matrix
from .skeleton import Motion, Skeleton

ALLOWED_ORDERS = {"ZYX", "ZXY", "XYZ", "XZY", "YXZ", "YZX"}
_POSITION_CHANNELS = {"Xposition": 0, "Yposition": 1, "Zposition": 2}
_ROTATION_CHANNELS = {"Xrotation": "X", "Yrotation": "Y", "Zrotation": "Z"}
WRITE_ORDER = "ZYX"


class _Cursor:
    def __init__(self, text):
        self.lines = text.splitlines()
        self.pos = 0

    def next_tokens(self):
        while self.pos < len(self.lines):
            self.pos += 1
            tokens = self.lines[self.pos - 1].split()
            if tokens:
                return tokens, self.pos
        return None, self.pos


def _floats(tokens, line, what):
    out = []
    for tok in tokens:
        try:
            val = float(tok)
        except ValueError:
            raise BVHParseError(f"{what}: {tok!r} is not a number", line)
        if not np.isfinite(val):
            raise BVHParseError(f"{what}: non-finite value {tok!r}", line)
        out.append(val)
    return out


class _JointSpec:
    def __init__(self, name, parent, offset, channels):
        self.name = name
        self.parent = parent
        self.offset = offset
        self.channels = channels  # list of ("pos", axis int) / ("rot", axis letter)

    @property
    def rotation_order(self):
        return "".join(ax for kind, ax in self.channels if kind == "rot")


def parse_bvh(text):
    """Parse BVH text into (Skeleton, Motion).

    The returned skeleton has empty end-effector/foot annotations; attach
    them afterwards via `datasets.annotate_skeleton` using joint names.
    """
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise BVHParseError(f"input is not valid UTF-8: {exc}", 1)
    cur = _Cursor(text)

    tokens, line = cur.next_tokens()
    if tokens is None or tokens != ["HIERARCHY"]:
        raise BVHParseError("expected HIERARCHY", line)
    tokens, line = cur.next_tokens()
    if tokens is None or tokens[0] != "ROOT" or len(tokens) != 2:
        raise BVHParseError("expected 'ROOT <name>'", line)

    specs = []
    _parse_joint_block(cur, tokens[1], None, specs, is_root=True)

    tokens, line = cur.next_tokens()
    if tokens is None or tokens != ["MOTION"]:
        raise BVHParseError("expected MOTION", line)
    tokens, line = cur.next_tokens()
    if tokens is None or tokens[0] != "Frames:" or len(tokens) != 2:
        raise BVHParseError("expected 'Frames: <count>'", line)
    try:
        n_frames = int(tokens[1])
    except ValueError:
        raise BVHParseError(f"frame count {tokens[1]!r} is not an integer", line)
    if n_frames < 1:
        raise BVHParseError(f"frame count must be >= 1, got {n_frames}", line)
    tokens, line = cur.next_tokens()
    if tokens is None or tokens[:2] != ["Frame", "Time:"] or len(tokens) != 3:
        raise BVHParseError("expected 'Frame Time: <seconds>'", line)
    (frame_time,) = _floats(tokens[2:], line, "frame time")
    if frame_time <= 0:
        raise BVHParseError(f"frame time must be positive, got {frame_time}", line)

    n_channels = sum(len(s.channels) for s in specs)
    rows = []
    for i in range(n_frames):
        tokens, line = cur.next_tokens()
        if tokens is None:
            raise BVHParseError(
                f"declared {n_frames} frames but found only {i} data rows", line)
        if len(tokens) != n_channels:
            raise BVHParseError(
                f"frame {i}: expected {n_channels} channels, got {len(tokens)}", line)
        rows.append(_floats(tokens, line, f"frame {i}"))
    extra, line = cur.next_tokens()
    if extra is not None:
        raise BVHParseError(
            f"declared {n_frames} frames but data continues (row {n_frames + 1})", line)

    data = np.array(rows)
    j_count = len(specs)
    poses = np.zeros((n_frames, j_count, 6))
    root_pos = np.zeros((n_frames, 3))
    root_ori = np.zeros((n_frames, 6))
    col = 0
    for j, spec in enumerate(specs):
        angles = np.zeros((n_frames, 3))
        rot_slot = 0
        for kind, axis in spec.channels:
            if kind == "pos":
                root_pos[:, axis] = data[:, col]
            else:
                angles[:, rot_slot] = data[:, col]
                rot_slot += 1
            col += 1
        order = spec.rotation_order
        mats = np.stack([euler_to_matrix(a, order) for a in angles])
        r6 = matrix_to_rot6d(mats)
        if j == 0:
            root_ori = r6
            poses[:, 0, 0] = 1.0
            poses[:, 0, 4] = 1.0
        else:
            poses[:, j] = r6

    vel = np.zeros((n_frames, 3))
    if n_frames > 1:
        vel[:-1] = root_pos[1:] - root_pos[:-1]
        vel[-1] = vel[-2]

    try:
        skeleton = Skeleton.create(
            [(s.name, s.parent, s.offset) for s in specs], (), ())
        motion = Motion.create(poses, root_ori, vel, frame_rate=1.0 / frame_time)
    except BVHParseError:
        raise
    except RetargetError as exc:
        raise BVHParseError(str(exc))
    return skeleton, motion


def _parse_joint_block(cur, name, parent, specs, is_root):
    tokens, line = cur.next_tokens()
    if tokens is None or tokens != ["{"]:
        raise BVHParseError(f"joint {name}: expected '{{'", line)
    tokens, line = cur.next_tokens()
    if tokens is None or tokens[0] != "OFFSET" or len(tokens) != 4:
        raise BVHParseError(f"joint {name}: expected 'OFFSET x y z'", line)
    offset = _floats(tokens[1:], line, f"joint {name} offset")
    tokens, line = cur.next_tokens()
    if tokens is None or tokens[0] != "CHANNELS" or len(tokens) < 2:
        raise BVHParseError(f"joint {name}: expected CHANNELS", line)
    try:
        n = int(tokens[1])
    except ValueError:
        raise BVHParseError(
            f"joint {name}: channel count {tokens[1]!r} not an integer", line)
    names = tokens[2:]
    if len(names) != n:
        raise BVHParseError(
            f"joint {name}: CHANNELS declares {n} but lists {len(names)}", line)
    channels = _decode_channels(names, name, is_root, line)

    index = len(specs)
    specs.append(_JointSpec(name, parent, offset, channels))

    while True:
        tokens, line = cur.next_tokens()
        if tokens is None:
            raise BVHParseError(f"joint {name}: unexpected end of input", line)
        if tokens == ["}"]:
            return
        if tokens[0] == "JOINT":
            if len(tokens) != 2:
                raise BVHParseError("expected 'JOINT <name>'", line)
            _parse_joint_block(cur, tokens[1], index, specs, is_root=False)
        elif tokens[:2] == ["End", "Site"]:
            _parse_end_site(cur, name)
        else:
            raise BVHParseError(f"unknown keyword {tokens[0]!r} inside joint {name}", line)


def _parse_end_site(cur, parent_name):
    tokens, line = cur.next_tokens()
    if tokens is None or tokens != ["{"]:
        raise BVHParseError(f"End Site of {parent_name}: expected '{{'", line)
    tokens, line = cur.next_tokens()
    if tokens is None or tokens[0] != "OFFSET" or len(tokens) != 4:
        raise BVHParseError(f"End Site of {parent_name}: expected 'OFFSET x y z'", line)
    _floats(tokens[1:], line, "end site offset")
    tokens, line = cur.next_tokens()
    if tokens is None or tokens != ["}"]:
        raise BVHParseError(f"End Site of {parent_name}: expected '}}'", line)


def _decode_channels(names, joint_name, is_root, line):
    channels = []
    pos_axes = []
    rot_axes = []
    for ch in names:
        if ch in _POSITION_CHANNELS:
            channels.append(("pos", _POSITION_CHANNELS[ch]))
            pos_axes.append(_POSITION_CHANNELS[ch])
        elif ch in _ROTATION_CHANNELS:
            channels.append(("rot", _ROTATION_CHANNELS[ch]))
            rot_axes.append(_ROTATION_CHANNELS[ch])
        else:
            raise BVHParseError(f"joint {joint_name}: unknown channel {ch!r}", line)
    if len(rot_axes) != 3:
        raise BVHParseError(
            f"joint {joint_name}: expected 3 rotation channels, got {len(rot_axes)}", line)
    order = "".join(rot_axes)
    if order not in ALLOWED_ORDERS:
        raise BVHParseError(
            f"joint {joint_name}: unsupported rotation order {order!r}", line)
    if pos_axes:
        if not is_root:
            raise BVHParseError(
                f"joint {joint_name}: position channels only allowed on the root", line)
        if sorted(pos_axes) != [0, 1, 2]:
            raise BVHParseError(
                f"joint {joint_name}: root needs all three position channels exactly once",
                line)
    return channels


# ---------------------------------------------------------------------------
# writer


def write_bvh(skeleton, motion):
    """Serialize (skeleton, motion) to BVH text.

    Joint rotations are written as ZYX Euler angles; the root rotation is the
    composition armature-orientation @ root-pose-row.  Root translation is the
    forward-Euler integral of the velocities, starting at the origin.
    """
    if motion.n_joints != skeleton.n_joints:
        raise RetargetError(
            f"motion has {motion.n_joints} joints, skeleton has {skeleton.n_joints}")

    children = {i: [] for i in range(skeleton.n_joints)}
    for i, joint in enumerate(skeleton.joints):
        if joint.parent is not None:
            children[joint.parent].append(i)

    lines = ["HIERARCHY"]
    dfs_order = []

    def emit(j, depth):
        indent = "  " * depth
        joint = skeleton.joints[j]
        keyword = "ROOT" if joint.parent is None else "JOINT"
        lines.append(f"{indent}{keyword} {joint.name}")
        lines.append(f"{indent}{{")
        off = joint.offset
        lines.append(f"{indent}  OFFSET {off[0]:.6f} {off[1]:.6f} {off[2]:.6f}")
        if joint.parent is None:
            lines.append(f"{indent}  CHANNELS 6 Xposition Yposition Zposition "
                         "Zrotation Yrotation Xrotation")
        else:
            lines.append(f"{indent}  CHANNELS 3 Zrotation Yrotation Xrotation")
        dfs_order.append(j)
        if children[j]:
            for c in children[j]:
                emit(c, depth + 1)
        else:
            lines.append(f"{indent}  End Site")
            lines.append(f"{indent}  {{")
            lines.append(f"{indent}    OFFSET 0.000000 0.000000 0.000000")
            lines.append(f"{indent}  }}")
        lines.append(f"{indent}}}")

    emit(0, 0)

    t = motion.n_frames
    root_pos = np.zeros((t, 3))
    root_pos[1:] = np.cumsum(motion.root_velocities[:-1], axis=0)
    armature = rot6d_to_matrix(motion.root_orientations)
    root_pose = rot6d_to_matrix(motion.poses[:, 0])
    root_combined = armature @ root_pose
    joint_mats = rot6d_to_matrix(motion.poses)

    lines.append("MOTION")
    lines.append(f"Frames: {t}")
    lines.append(f"Frame Time: {1.0 / motion.frame_rate:.8f}")
    for n in range(t):
        vals = []
        for j in dfs_order:
            if j == 0:
                vals.extend(root_pos[n])
                vals.extend(matrix_to_euler(root_combined[n], WRITE_ORDER))
            else:
                vals.extend(matrix_to_euler(joint_mats[n, j], WRITE_ORDER))
        lines.append(" ".join(f"{v:.6f}" for v in vals))
    return "\n".join(lines) + "\n"
